"""Deterministic simulation campaigns: planning, seeding, execution and record files.

A campaign covers one scenario family over a grid of dimensions ``d`` and
per-class sample sizes ``n``. Every (d, n) cell gets its own calibration
table (cached on disk), its own plan and its own records file::

    <output_dir>/calibration/<family>_d<d>_...json
    <output_dir>/records/<family>_d<d>_n<n>.ndjson
    <output_dir>/records/<family>_d<d>_n<n>.timings.ndjson
    <output_dir>/records/<family>_d<d>_n<n>.failures.ndjson

Records hold only deterministic content. Wall-clock times live in the
timings sidecar so that two executions of the same campaign produce
byte-identical records files.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .estimators import ALL_ESTIMATORS, DEFAULT_ESTIMATORS, run_estimators
from .ground_truth import (
    DEFAULT_VAR,
    PROFILES,
    CalibratedParameterTable,
    load_or_calibrate,
    select_uniform,
)
from .scenarios import FAMILIES, ScenarioSpec, sample_dataset

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
WORKERS_ENV = "BERBENCH_WORKERS"

_PURPOSES = {"data": 1, "centers": 2, "estimator": 3}
# separates the plan-shuffle stream from any per-run stream
_PLAN_RUN = 2**32 - 1


class SchemaVersionError(ValueError):
    pass


def derive_stream(master_seed: int, run_id: int, purpose: str, *context: int) -> np.random.Generator:
    """Independent Philox stream for ``(master_seed, run_id, purpose, *context)``.

    The key goes straight into a ``SeedSequence``, so the stream depends on
    nothing but its inputs, whatever order runs are executed in.
    """
    try:
        code = _PURPOSES[purpose]
    except KeyError:
        raise ValueError(f"purpose must be one of {sorted(_PURPOSES)}") from None
    key = [int(master_seed), int(run_id), code, *(int(c) for c in context)]
    if any(k < 0 for k in key):
        raise ValueError("seed, run id and context must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def stream_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


@dataclass(frozen=True)
class CampaignConfig:
    family: str
    d: tuple[int, ...]
    n_per_class: tuple[int, ...]
    runs: int = 2500
    ber_range: tuple[float, float] = (0.01, 0.49)
    seed: int = 0
    estimators: tuple[str, ...] = DEFAULT_ESTIMATORS
    profile: str = "desk"
    output_dir: str = "campaign"
    var: float = DEFAULT_VAR

    def __post_init__(self):
        for name in ("d", "n_per_class", "estimators", "ber_range"):
            value = getattr(self, name)
            if isinstance(value, (int, float, str)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        lo, hi = self.ber_range
        if not 0 < lo < hi < 0.5:
            raise ValueError("ber_range must satisfy 0 < lo < hi < 0.5")
        if not self.d or min(self.d) < 1:
            raise ValueError("d must be a nonempty list of positive integers")
        if not self.n_per_class or min(self.n_per_class) < 2:
            raise ValueError("n_per_class must be a nonempty list of integers >= 2")
        unknown = set(self.estimators) - set(ALL_ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimator ids: {sorted(unknown)}")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {sorted(PROFILES)}")

    def cells(self) -> list[tuple[int, int]]:
        return [(d, n) for d in self.d for n in self.n_per_class]

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("d", "n_per_class", "ber_range", "estimators"):
            out[k] = list(out[k])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "CampaignConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @property
    def calibration_dir(self) -> Path:
        return Path(self.output_dir) / "calibration"

    def records_path(self, d: int, n: int) -> Path:
        return Path(self.output_dir) / "records" / f"{self.family}_d{d}_n{n}.ndjson"


@dataclass(frozen=True)
class PlannedRun:
    run_id: int
    spec: ScenarioSpec
    ber: float
    seed: int
    d: int
    n_per_class: int


@dataclass
class EstimateRecord:
    run_id: int
    scenario_id: str
    seed: int
    d: int
    n_per_class: int
    ber: float
    estimates: dict[str, float]
    family: str = ""
    diagnostics: dict = field(default_factory=dict)
    wall_time: float | None = field(default=None, compare=False)

    def to_json(self) -> str:
        """Canonical one-line JSON; ``wall_time`` is left out on purpose."""
        payload = {
            "schema": SCHEMA_VERSION,
            "run_id": self.run_id,
            "scenario_id": self.scenario_id,
            "family": self.family,
            "seed": self.seed,
            "d": self.d,
            "n_per_class": self.n_per_class,
            "ber": self.ber,
            "estimates": self.estimates,
            "diagnostics": self.diagnostics,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)

    @classmethod
    def from_json(cls, line: str) -> "EstimateRecord":
        data = json.loads(line)
        version = data.get("schema")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(f"record schema {version!r}, expected {SCHEMA_VERSION}")
        return cls(
            run_id=int(data["run_id"]),
            scenario_id=str(data["scenario_id"]),
            family=str(data.get("family", "")),
            seed=int(data["seed"]),
            d=int(data["d"]),
            n_per_class=int(data["n_per_class"]),
            ber=float(data["ber"]),
            estimates={str(k): float(v) for k, v in data["estimates"].items()},
            diagnostics=dict(data.get("diagnostics", {})),
        )


class RecordList(list):
    """List of records that also remembers how many rows were unreadable."""

    skipped: int = 0


def plan_campaign(config: CampaignConfig, table: CalibratedParameterTable, n_per_class: int) -> list[PlannedRun]:
    """One planned run per run id for the ``(table.d, n_per_class)`` cell.

    Specs come from :func:`select_uniform` in a seed-determined shuffled
    order; each run's data seed is derived from ``(seed, run_id, d, n)``.
    """
    lo, hi = config.ber_range
    bers = table.bers
    if not len(bers) or bers[0] > lo or bers[-1] < hi:
        raise ValueError(
            f"calibration table covers [{bers.min() if len(bers) else float('nan'):.4f}, "
            f"{bers.max() if len(bers) else float('nan'):.4f}], not [{lo}, {hi}]"
        )
    d = table.d
    shuffle = derive_stream(config.seed, _PLAN_RUN, "data", d, n_per_class)
    entries = select_uniform(table, config.runs, rng=shuffle)
    plan = []
    for run_id, entry in enumerate(entries):
        seq = np.random.SeedSequence([config.seed, run_id, _PURPOSES["data"], d, n_per_class])
        seed = int(seq.generate_state(1, np.uint64)[0] >> np.uint64(1))
        plan.append(PlannedRun(run_id, entry.spec, entry.ber, seed, d, n_per_class))
    return plan


def run_simulation(
    spec: ScenarioSpec,
    n_per_class: int,
    seed: int,
    estimators=DEFAULT_ESTIMATORS,
    ber: float = float("nan"),
    run_id: int = 0,
) -> EstimateRecord:
    """Sample one dataset and evaluate every estimator on it.

    Raises if any estimator fails or returns a non-finite value; there are
    no partial records.
    """
    start = time.perf_counter()
    X, y = sample_dataset(spec, n_per_class, stream_from_seed(seed))
    diagnostics: dict = {}
    estimates = run_estimators(X, y, estimators, spec=spec, diagnostics=diagnostics)
    bad = sorted(k for k, v in estimates.items() if not math.isfinite(v))
    if bad:
        raise FloatingPointError(f"non-finite estimates for {bad}")
    return EstimateRecord(
        run_id=run_id,
        scenario_id=spec.scenario_id,
        family=spec.family,
        seed=int(seed),
        d=spec.d,
        n_per_class=n_per_class,
        ber=float(ber),
        estimates=estimates,
        diagnostics=diagnostics,
        wall_time=time.perf_counter() - start,
    )


def write_records(records, path, append: bool = False) -> None:
    """Write records as NDJSON; without ``append`` the file is replaced atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "".join(r.to_json() + "\n" for r in records)
    if append:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
        return
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def read_records(path) -> RecordList:
    """Read an NDJSON records file, skipping (and counting) corrupt rows.

    A row from another schema version raises :class:`SchemaVersionError`
    instead of being skipped.
    """
    out = RecordList()
    path = Path(path)
    if not path.exists():
        return out
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(EstimateRecord.from_json(line))
        except SchemaVersionError:
            raise
        except (ValueError, KeyError, TypeError, AttributeError):
            out.skipped += 1
            logger.warning("%s:%d: skipping unreadable record", path, lineno)
    return out


def canonicalize_records(path) -> RecordList:
    """Rewrite a records file sorted by run id with duplicates and bad rows dropped."""
    records = read_records(path)
    unique = {}
    for r in records:
        unique.setdefault(r.run_id, r)
    ordered = RecordList(unique[k] for k in sorted(unique))
    ordered.skipped = records.skipped
    write_records(ordered, path)
    return ordered


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        workers = int(env)
        if workers < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return workers
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _execute(run: PlannedRun, estimators, family: str):
    try:
        rec = run_simulation(run.spec, run.n_per_class, run.seed, estimators, run.ber, run.run_id)
        return rec, None
    except Exception as exc:  # recorded in the failure log, never dropped silently
        return None, {
            "run_id": run.run_id,
            "scenario_id": run.spec.scenario_id,
            "family": family,
            "seed": run.seed,
            "error": f"{type(exc).__name__}: {exc}",
        }


def _append_line(path: Path, obj: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, sort_keys=True) + "\n")


@dataclass
class CellResult:
    d: int
    n_per_class: int
    table: CalibratedParameterTable
    records: list[EstimateRecord]
    failures: list[dict]
    path: Path


def run_cell(config: CampaignConfig, d: int, n: int, workers: int | None = None) -> CellResult:
    """Run (or resume) one cell; completed run ids already on disk are skipped."""
    lo, hi = config.ber_range
    table = load_or_calibrate(
        config.calibration_dir, config.family, d, lo, hi, config.seed, config.profile, var=config.var
    )
    plan = plan_campaign(config, table, n)
    path = config.records_path(d, n)
    failure_path = path.with_suffix(".failures.ndjson")
    timing_path = path.with_suffix(".timings.ndjson")
    path.parent.mkdir(parents=True, exist_ok=True)

    done = {r.run_id for r in canonicalize_records(path)} if path.exists() else set()
    pending = [p for p in plan if p.run_id not in done]
    workers = default_workers() if workers is None else workers
    failures = []
    logger.info("%s d=%d n=%d: %d of %d runs pending", config.family, d, n, len(pending), len(plan))

    def handle(rec, fail):
        if fail is not None:
            failures.append(fail)
            _append_line(failure_path, fail)
            logger.error("run %d failed: %s", fail["run_id"], fail["error"])
            return
        write_records([rec], path, append=True)
        _append_line(timing_path, {"run_id": rec.run_id, "wall_time": rec.wall_time})

    if workers <= 1 or len(pending) <= 1:
        for run in pending:
            handle(*_execute(run, config.estimators, config.family))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_execute, run, config.estimators, config.family) for run in pending]
            for fut in as_completed(futures):
                handle(*fut.result())

    records = canonicalize_records(path)
    return CellResult(d, n, table, list(records), failures, path)


def run_campaign(config: CampaignConfig, workers: int | None = None) -> list[CellResult]:
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    return [run_cell(config, d, n, workers) for d, n in config.cells()]


def load_cell_specs(config: CampaignConfig, d: int) -> dict[str, ScenarioSpec]:
    """Resolve the scenario ids stored in records against the calibration cache."""
    lo, hi = config.ber_range
    table = load_or_calibrate(
        config.calibration_dir, config.family, d, lo, hi, config.seed, config.profile, var=config.var
    )
    return {e.spec.scenario_id: e.spec for e in table.entries}
