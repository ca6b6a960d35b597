"""Error summaries, best-estimator tables and scatter/LOESS plot artifacts.

Errors are signed percentage points, ``E = 100 * BER - 100 * estimate``,
so positive values mean the estimator underestimated the BER.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

#: summaries from fewer records than this are flagged
MIN_CONFIDENT = 30
BOUND_QUANTILES = (2.5, 97.5)
DEFAULT_SPAN = 0.3


@dataclass(frozen=True)
class ErrorSummary:
    estimator: str
    count: int
    mse: float
    bound_lo: float
    bound_hi: float
    meets_5pp: bool
    low_confidence: bool = False

    @property
    def width(self) -> float:
        return self.bound_hi - self.bound_lo


def error_values(records, estimator: str) -> np.ndarray:
    records = list(records)
    if not records:
        raise ValueError("no records")
    try:
        est = np.array([r.estimates[estimator] for r in records], dtype=float)
    except KeyError:
        raise KeyError(f"estimator {estimator!r} missing from records") from None
    ber = np.array([r.ber for r in records], dtype=float)
    return 100.0 * ber - 100.0 * est


def percentile(values, q: float) -> float:
    """Linear interpolation at rank ``1 + q/100 * (n - 1)`` (numpy's default)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("percentile of empty input")
    if not 0 <= q <= 100:
        raise ValueError("q must lie in [0, 100]")
    return float(np.percentile(values, q, method="linear"))


def summarize_errors(errors, estimator: str = "") -> ErrorSummary:
    errors = np.asarray(errors, dtype=float)
    lo = percentile(errors, BOUND_QUANTILES[0])
    hi = percentile(errors, BOUND_QUANTILES[1])
    return ErrorSummary(
        estimator=estimator,
        count=int(errors.size),
        mse=float(np.mean(errors**2)),
        bound_lo=lo,
        bound_hi=hi,
        meets_5pp=bool(hi - lo < 5.0),
        low_confidence=errors.size < MIN_CONFIDENT,
    )


def summarize(records, estimator: str) -> ErrorSummary:
    return summarize_errors(error_values(records, estimator), estimator)


def group_records(records, keys=("family", "d", "n_per_class")) -> dict[tuple, list]:
    groups = defaultdict(list)
    for r in records:
        groups[tuple(getattr(r, k) for k in keys)].append(r)
    return dict(sorted(groups.items()))


def best_estimator(records, estimators) -> ErrorSummary:
    """Lowest-MSE summary; equal MSEs go to the lexicographically first id."""
    summaries = [summarize(records, e) for e in estimators]
    return min(summaries, key=lambda s: (s.mse, s.estimator))


def best_estimator_table(records, estimators=None, group_by=("family", "d", "n_per_class")) -> list[dict]:
    """One row per group: the winning estimator and its bounds."""
    rows = []
    for key, recs in group_records(records, group_by).items():
        ids = estimators or sorted(recs[0].estimates)
        best = best_estimator(recs, ids)
        row = dict(zip(group_by, key))
        row.update(
            estimator=best.estimator,
            count=best.count,
            mse=best.mse,
            bound_lo=best.bound_lo,
            bound_hi=best.bound_hi,
            bold=best.meets_5pp,
            low_confidence=best.low_confidence,
        )
        rows.append(row)
    return rows


def summary_table(records, estimators=None, group_by=("family", "d", "n_per_class")) -> list[dict]:
    """Every estimator's summary in every group."""
    rows = []
    for key, recs in group_records(records, group_by).items():
        for e in estimators or sorted(recs[0].estimates):
            s = summarize(recs, e)
            row = dict(zip(group_by, key))
            row.update(
                estimator=e,
                count=s.count,
                mse=s.mse,
                bound_lo=s.bound_lo,
                bound_hi=s.bound_hi,
                bold=s.meets_5pp,
                low_confidence=s.low_confidence,
            )
            rows.append(row)
    return rows


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.1f}"
    return str(value)


def table_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def table_to_markdown(rows: list[dict]) -> str:
    """Markdown table; bounds narrower than 5pp are shown in bold."""
    if not rows:
        return ""
    skip = {"bound_lo", "bound_hi", "bold", "low_confidence"}
    cols = [c for c in rows[0] if c not in skip] + ["bounds"]
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for row in rows:
        bounds = f"({row['bound_lo']:.1f}, {row['bound_hi']:.1f})"
        if row.get("bold"):
            bounds = f"**{bounds}**"
        if row.get("low_confidence"):
            bounds += " *"
        cells = [_fmt(row[c]) for c in cols[:-1]] + [bounds]
        lines.append("| " + " | ".join(cells) + " |")
    if any(r.get("low_confidence") for r in rows):
        lines.append("")
        lines.append(f"\\* fewer than {MIN_CONFIDENT} records")
    return "\n".join(lines) + "\n"


def loess_fit(x, y, span: float = DEFAULT_SPAN) -> np.ndarray:
    """Local linear regression with tricube weights, evaluated at each ``x``.

    Each fit uses the ``ceil(span * n)`` nearest points. Neighbourhoods with
    no spread in ``x`` fall back to the weighted local mean.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and equally long")
    if n < 10:
        raise ValueError("loess needs at least 10 points")
    if not 0 < span <= 1:
        raise ValueError("span must lie in (0, 1]")
    k = max(2, int(math.ceil(span * n)))
    fitted = np.empty(n)
    for i, x0 in enumerate(x):
        dist = np.abs(x - x0)
        idx = np.argpartition(dist, k - 1)[:k]
        radius = dist[idx].max()
        if radius > 0:
            w = (1 - (dist[idx] / (radius * (1 + 1e-12))) ** 3) ** 3
        else:
            w = np.ones(k)
        xs, ys = x[idx], y[idx]
        sw = w.sum()
        xm = (w * xs).sum() / sw
        ym = (w * ys).sum() / sw
        sxx = (w * (xs - xm) ** 2).sum()
        if sxx <= 1e-12 * max(1.0, xm * xm) * sw:
            fitted[i] = ym
            continue
        slope = (w * (xs - xm) * (ys - ym)).sum() / sxx
        fitted[i] = ym + slope * (x0 - xm)
    return fitted


def _svg(ber, est, smooth, title: str) -> str:
    size, pad = 400, 40
    scale = (size - 2 * pad) / 0.5

    def px(v):
        return pad + v * scale

    def py(v):
        return size - pad - v * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<text x="{size / 2:.0f}" y="20" text-anchor="middle" font-size="12">{title}</text>',
        f'<line x1="{px(0):.2f}" y1="{py(0):.2f}" x2="{px(0.5):.2f}" y2="{py(0):.2f}" stroke="black"/>',
        f'<line x1="{px(0):.2f}" y1="{py(0):.2f}" x2="{px(0):.2f}" y2="{py(0.5):.2f}" stroke="black"/>',
        f'<text x="{size / 2:.0f}" y="{size - 8}" text-anchor="middle" font-size="11">true BER</text>',
        f'<text x="12" y="{size / 2:.0f}" font-size="11" transform="rotate(-90 12 {size / 2:.0f})">estimate</text>',
        f'<line x1="{px(0):.2f}" y1="{py(0):.2f}" x2="{px(0.5):.2f}" y2="{py(0.5):.2f}" '
        'stroke="gray" stroke-dasharray="4 3"/>',
    ]
    for b, e in zip(ber, est):
        e = min(max(e, -0.05), 0.55)
        parts.append(f'<circle cx="{px(b):.2f}" cy="{py(e):.2f}" r="1.5" fill="steelblue" fill-opacity="0.5"/>')
    order = np.argsort(ber, kind="stable")
    pts = " ".join(f"{px(ber[i]):.2f},{py(min(max(smooth[i], -0.05), 0.55)):.2f}" for i in order)
    parts.append(f'<polyline points="{pts}" fill="none" stroke="crimson" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(records, estimator: str, path, span: float = DEFAULT_SPAN) -> tuple[Path, Path]:
    """Write ``<path>.csv`` (true BER, estimate, LOESS) and ``<path>.svg``.

    Rows are ordered by run id so identical inputs give identical bytes.
    """
    records = sorted(records, key=lambda r: r.run_id)
    if not records:
        raise ValueError("no records to plot")
    if any(estimator not in r.estimates for r in records):
        raise KeyError(f"estimator {estimator!r} missing from records")
    ber = np.array([r.ber for r in records])
    est = np.array([r.estimates[estimator] for r in records])
    smooth = loess_fit(ber, est, span) if len(records) >= 10 else np.full(len(records), np.nan)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    csv_path = path.with_suffix(".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run_id", "true_ber", "estimate", "loess"])
        for r, b, e, s in zip(records, ber, est, smooth):
            writer.writerow([r.run_id, repr(float(b)), repr(float(e)), repr(float(s))])
    svg_path = path.with_suffix(".svg")
    summary = summarize_errors(100 * ber - 100 * est, estimator)
    title = (
        f"{estimator}: MSE {summary.mse:.1f}, bounds ({summary.bound_lo:.1f}, "
        f"{summary.bound_hi:.1f}), loess span {span:g}"
    )
    svg_path.write_text(_svg(ber, est, smooth, title), encoding="utf-8")
    return csv_path, svg_path
