"""Monte Carlo ground truth for the Bayes error rate, and BER calibration tables."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scenarios import FAMILIES, ScenarioSpec, build_scenario, log_pdf, sample

logger = logging.getLogger(__name__)

#: (batches, batch_size) presets: 1,024,000 and 131,072 samples
PROFILES = {
    "reference": (1000, 1024),
    "desk": (128, 1024),
}

DEFAULT_VAR = 0.3


@dataclass(frozen=True)
class GroundTruthEntry:
    spec: ScenarioSpec
    ber: float
    std_err: float
    n_mc: int

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "ber": self.ber,
            "std_err": self.std_err,
            "n_mc": self.n_mc,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruthEntry":
        return cls(
            spec=ScenarioSpec.from_dict(data["spec"]),
            ber=float(data["ber"]),
            std_err=float(data["std_err"]),
            n_mc=int(data["n_mc"]),
        )


@dataclass
class CalibratedParameterTable:
    """Scenario parameterisations sorted by strictly increasing ground-truth BER."""

    family: str
    d: int
    entries: list[GroundTruthEntry]
    ber_lo: float = 0.01
    ber_hi: float = 0.49
    max_gap: float = 0.01
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    @property
    def bers(self) -> np.ndarray:
        return np.array([e.ber for e in self.entries])

    def find(self, scenario_id: str) -> GroundTruthEntry:
        for entry in self.entries:
            if entry.spec.scenario_id == scenario_id:
                return entry
        raise KeyError(scenario_id)

    def max_ber_gap(self) -> float:
        return float(np.max(np.diff(self.bers))) if len(self.entries) > 1 else 0.0

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "d": self.d,
            "ber_lo": self.ber_lo,
            "ber_hi": self.ber_hi,
            "max_gap": self.max_gap,
            "metadata": self.metadata,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CalibratedParameterTable":
        return cls(
            family=data["family"],
            d=int(data["d"]),
            entries=[GroundTruthEntry.from_dict(e) for e in data["entries"]],
            ber_lo=float(data["ber_lo"]),
            ber_hi=float(data["ber_hi"]),
            max_gap=float(data["max_gap"]),
            metadata=data.get("metadata", {}),
        )

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(self.to_dict(), sort_keys=True))
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "CalibratedParameterTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


def bayes_classify(spec: ScenarioSpec, x) -> np.ndarray | int:
    """Equal-prior Bayes decision: 1 (B) where B's density is strictly larger, else 0 (A)."""
    x = np.asarray(x, dtype=np.float64)
    pred = (log_pdf(spec, "B", np.atleast_2d(x)) > log_pdf(spec, "A", np.atleast_2d(x))).astype(int)
    return int(pred[0]) if x.ndim == 1 else pred


def mc_ber(
    spec: ScenarioSpec,
    batches: int = 1000,
    batch_size: int = 1024,
    rng: np.random.Generator | None = None,
) -> GroundTruthEntry:
    """Monte Carlo estimate of the Bayes error rate of ``spec``.

    Each sample gets a fair-coin label, is drawn from that class and then
    classified by :func:`bayes_classify`; the BER is the disagreement rate.
    """
    if rng is None:
        rng = np.random.default_rng()
    errors = 0
    for _ in range(batches):
        n_b = int(rng.binomial(batch_size, 0.5))
        n_a = batch_size - n_b
        if n_a:
            errors += int(bayes_classify(spec, sample(spec, "A", n_a, rng)).sum())
        if n_b:
            errors += int(n_b - bayes_classify(spec, sample(spec, "B", n_b, rng)).sum())
    n = batches * batch_size
    p = errors / n
    return GroundTruthEntry(spec=spec, ber=p, std_err=float(np.sqrt(p * (1 - p) / n)), n_mc=n)


def _offset_start(family: str, var: float) -> tuple[float, float]:
    sigma = np.sqrt(var)
    lo = 1e-3 * sigma if family == "SvS" else 0.0
    return lo, 2.0 * sigma


def calibrate(
    family: str,
    d: int,
    ber_lo: float = 0.01,
    ber_hi: float = 0.49,
    max_gap: float = 0.01,
    rng: np.random.Generator | None = None,
    profile: str = "desk",
    var: float = DEFAULT_VAR,
    max_probes: int = 400,
) -> CalibratedParameterTable:
    """Map offsets to ground-truth BER until the BER range has no gap above ``max_gap``.

    The offset (``mu``, or ``r_a`` for SvS) is bisected with both class
    variances fixed at ``var``. Hypersphere directions are drawn from one
    stream and reused for every probe, so probes differ only in scale.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if not 0 < ber_lo < ber_hi <= 0.5:
        raise ValueError("need 0 < ber_lo < ber_hi <= 0.5")
    if rng is None:
        rng = np.random.default_rng()
    batches, batch_size = PROFILES[profile]
    center_seed = int(rng.integers(2**63))

    def probe(offset: float) -> GroundTruthEntry:
        kw = {"r_a": offset} if family == "SvS" else {"mu": offset}
        spec = build_scenario(
            family, d, var_a=var, var_b=var, center_rng=np.random.default_rng(center_seed), **kw
        )
        return mc_ber(spec, batches, batch_size, rng)

    lo, hi = _offset_start(family, var)
    probes = {lo: probe(lo), hi: probe(hi)}
    if probes[lo].ber < ber_hi:
        raise RuntimeError(
            f"{family} d={d}: smallest offset gives BER {probes[lo].ber:.4f} < {ber_hi}"
        )
    doublings = 0
    while probes[hi].ber > ber_lo:
        doublings += 1
        if doublings > 30:
            raise RuntimeError(
                f"{family} d={d}: BER {probes[hi].ber:.4f} still above {ber_lo} at offset {hi:.4g}"
            )
        hi *= 2.0
        probes[hi] = probe(hi)

    while True:
        offsets = sorted(probes)
        todo = []
        for a, b in zip(offsets[:-1], offsets[1:]):
            ba, bb = probes[a].ber, probes[b].ber
            if abs(ba - bb) <= max_gap:
                continue
            if max(ba, bb) < ber_lo or min(ba, bb) > ber_hi:
                continue
            if b - a < 1e-9 * max(1.0, b):
                raise RuntimeError(
                    f"{family} d={d}: BER jumps {ba:.4f}->{bb:.4f} inside offset interval "
                    f"[{a:.6g}, {b:.6g}]"
                )
            todo.append(0.5 * (a + b))
        if not todo:
            break
        if len(probes) + len(todo) > max_probes:
            raise RuntimeError(f"{family} d={d}: probe budget {max_probes} exhausted")
        for mid in todo:
            probes[mid] = probe(mid)

    ranked = sorted(probes.values(), key=lambda e: (e.ber, e.spec.offset))
    entries = []
    for e in ranked:
        if entries and e.ber <= entries[-1].ber:
            continue
        entries.append(e)
    bers = np.array([e.ber for e in entries])
    first = max(int(np.searchsorted(bers, ber_lo, side="right")) - 1, 0)
    last = min(int(np.searchsorted(bers, ber_hi, side="left")), len(entries) - 1)
    entries = entries[first : last + 1]
    logger.info("calibrated %s d=%d: %d entries from %d probes", family, d, len(entries), len(probes))
    return CalibratedParameterTable(
        family=family,
        d=d,
        entries=entries,
        ber_lo=ber_lo,
        ber_hi=ber_hi,
        max_gap=max_gap,
        metadata={
            "method": "bisection",
            "parameter": "r_a" if family == "SvS" else "mu",
            "var": var,
            "profile": profile,
            "n_mc": batches * batch_size,
            "probes": len(probes),
        },
    )


def calibration_cache_path(
    cache_dir, family, d, ber_lo, ber_hi, seed, profile="desk", var=DEFAULT_VAR
) -> Path:
    tag = "" if var == DEFAULT_VAR else f"_var{var:g}"
    return Path(cache_dir) / f"{family}_d{d}_{ber_lo:g}-{ber_hi:g}_seed{seed}_{profile}{tag}.json"


def load_or_calibrate(
    cache_dir, family, d, ber_lo=0.01, ber_hi=0.49, seed=0, profile="desk", var=DEFAULT_VAR, **kwargs
) -> CalibratedParameterTable:
    """Calibrate once per (family, d, range, seed, profile, var) and reuse the JSON cache after."""
    path = calibration_cache_path(cache_dir, family, d, ber_lo, ber_hi, seed, profile, var)
    if path.exists():
        return CalibratedParameterTable.load(path)
    from .harness import derive_stream

    rng = derive_stream(seed, 0, "centers")
    table = calibrate(family, d, ber_lo, ber_hi, rng=rng, profile=profile, var=var, **kwargs)
    table.metadata["seed"] = seed
    table.save(path)
    return table


def uniform_ladder(table: CalibratedParameterTable) -> list[GroundTruthEntry]:
    """Entries nearest to BER targets spaced ``max_gap`` apart over the table's range."""
    bers = table.bers
    lo = max(table.ber_lo, bers[0])
    hi = min(table.ber_hi, bers[-1])
    steps = max(int(round((hi - lo) / table.max_gap)), 0)
    targets = np.linspace(lo, hi, steps + 1)
    picked = []
    for t in targets:
        i = int(np.argmin(np.abs(bers - t)))
        if not picked or picked[-1] != i:
            picked.append(i)
    return [table.entries[i] for i in picked]


def select_uniform(
    table: CalibratedParameterTable, count: int, rng: np.random.Generator | None = None
) -> list[GroundTruthEntry]:
    """Pick ``count`` entries evenly spread over the table's BER range.

    The table is first thinned to a ladder with one entry per ``max_gap``
    step. Fewer picks than rungs take evenly spaced rungs; more picks cycle
    through the ladder so every rung is used ``floor`` or ``ceil`` of
    ``count / rungs`` times. With ``rng`` the picks are shuffled.
    """
    if not table.entries:
        raise ValueError("empty calibration table")
    ladder = uniform_ladder(table)
    n = len(ladder)
    if count <= n:
        idx = np.round(np.linspace(0, n - 1, count)).astype(int) if count > 1 else np.array([n // 2])
    else:
        idx = np.arange(count) % n
    picks = [ladder[i] for i in idx]
    if rng is not None:
        order = rng.permutation(len(picks))
        picks = [picks[i] for i in order]
    return picks
