"""Two-class synthetic scenarios with exactly known densities.

Four families are supported:

``GvG``
    one isotropic Gaussian per class, class B offset along the diagonal.
``TvT``
    three-mode mixture (class A) against a two-mode mixture (class B)
    sitting halfway between the modes of A.
``TvS``
    the three-mode mixture of ``TvT`` against a Gaussian mixture whose
    centers lie on a hypersphere of radius ``mu / 2``.
``SvS``
    a central Gaussian plus a hypersphere shell (class A) against a shell of
    half the radius (class B).

Every mixture component is isotropic. Mixture centers are drawn once and
frozen inside :class:`ScenarioSpec`, so the ground-truth oracle and the
simulations evaluate the very same distribution.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

FAMILIES = ("GvG", "TvT", "TvS", "SvS")
LABELS = ("A", "B")

#: smallest allowed component variance, and the floor for hypersphere classes
VAR_FLOOR = 0.01
SPHERE_VAR_FLOOR = 0.1

#: nominal shell sizes; each is jittered by an integer in [-2, 2]
N_SPHERE_A = 190
N_SPHERE_B = 200
SPHERE_JITTER = 2


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """Fully parameterised pair of class distributions.

    Class ``A`` is label 0 and class ``B`` is label 1 everywhere in the
    package. ``mu`` is unused by ``SvS``, whose overlap is set by ``r_a``.
    """

    family: str
    d: int
    mu: float
    var_a: float
    var_b: float
    r_a: float
    r_b: float
    centers_a: np.ndarray
    centers_b: np.ndarray
    weights_a: np.ndarray
    weights_b: np.ndarray
    scenario_id: str = field(default="")

    def __post_init__(self):
        for name in ("centers_a", "centers_b", "weights_a", "weights_b"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if not self.scenario_id:
            object.__setattr__(self, "scenario_id", _make_id(self))

    def centers(self, label: str) -> np.ndarray:
        return self.centers_a if _check_label(label) == "A" else self.centers_b

    def weights(self, label: str) -> np.ndarray:
        return self.weights_a if _check_label(label) == "A" else self.weights_b

    def var(self, label: str) -> float:
        return self.var_a if _check_label(label) == "A" else self.var_b

    @property
    def offset(self) -> float:
        """The parameter that calibration varies (``r_a`` for SvS, else ``mu``)."""
        return self.r_a if self.family == "SvS" else self.mu

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "d": self.d,
            "mu": self.mu,
            "var_a": self.var_a,
            "var_b": self.var_b,
            "r_a": self.r_a,
            "r_b": self.r_b,
            "centers_a": self.centers_a.tolist(),
            "centers_b": self.centers_b.tolist(),
            "weights_a": self.weights_a.tolist(),
            "weights_b": self.weights_b.tolist(),
            "scenario_id": self.scenario_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        d = int(data["d"])
        return cls(
            family=data["family"],
            d=d,
            mu=float(data["mu"]),
            var_a=float(data["var_a"]),
            var_b=float(data["var_b"]),
            r_a=float(data["r_a"]),
            r_b=float(data["r_b"]),
            centers_a=np.asarray(data["centers_a"], dtype=np.float64).reshape(-1, d),
            centers_b=np.asarray(data["centers_b"], dtype=np.float64).reshape(-1, d),
            weights_a=data["weights_a"],
            weights_b=data["weights_b"],
            scenario_id=data.get("scenario_id", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, ScenarioSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.scenario_id)


def _check_label(label) -> str:
    if label in (0, "A"):
        return "A"
    if label in (1, "B"):
        return "B"
    raise ValueError(f"label must be 'A' or 'B', got {label!r}")


def _make_id(spec: ScenarioSpec) -> str:
    payload = {k: v for k, v in spec.to_dict().items() if k != "scenario_id"}
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
    return f"{spec.family}-d{spec.d}-{digest[:12]}"


def hypersphere_centers(d: int, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Place ``count`` points uniformly at random on the sphere ``|x| = radius``.

    Directions are normalised isotropic Gaussian draws, so the result is
    deterministic given the generator state.
    """
    if d < 2:
        raise ValueError("hypersphere centers need d >= 2")
    if count < 1:
        raise ValueError("count must be >= 1")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * radius


def _three_modes(d: int, mu: float) -> np.ndarray:
    step = np.sqrt(mu**2 / d)
    return np.vstack([np.zeros(d), np.full(d, step), np.full(d, -step)])


def build_scenario(
    family: str,
    d: int,
    mu: float = 0.0,
    var_a: float = 0.3,
    var_b: float = 0.3,
    r_a: float = 0.0,
    center_rng: np.random.Generator | None = None,
) -> ScenarioSpec:
    """Construct a :class:`ScenarioSpec`.

    Parameters
    ----------
    family : {"GvG", "TvT", "TvS", "SvS"}
    d : int
        Number of features.
    mu : float
        Offset controlling class overlap, in feature-space units. For GvG the
        class B mean has norm ``mu``.
    var_a, var_b : float
        Isotropic component variances.
    r_a : float
        Shell radius of class A; only used (and required positive) for SvS.
    center_rng : numpy.random.Generator, optional
        Stream for hypersphere placement and shell-size jitter. Needed for
        TvS and SvS.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    d = int(d)
    if d < 1:
        raise ValueError("d must be >= 1")
    if family in ("TvS", "SvS") and d < 2:
        raise ValueError(f"{family} needs d >= 2")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if var_a <= 0 or var_b <= 0:
        raise ValueError("variances must be positive")
    floor_a = SPHERE_VAR_FLOOR if family == "SvS" else VAR_FLOOR
    floor_b = SPHERE_VAR_FLOOR if family in ("TvS", "SvS") else VAR_FLOOR
    if var_a < floor_a or var_b < floor_b:
        raise ValueError(
            f"{family} requires var_a >= {floor_a} and var_b >= {floor_b}"
        )
    if family in ("TvS", "SvS") and center_rng is None:
        raise ValueError(f"{family} needs a center_rng for hypersphere placement")

    r_b = 0.0
    if family == "GvG":
        centers_a = np.zeros((1, d))
        centers_b = np.full((1, d), np.sqrt(mu**2 / d))
        weights_a = [1.0]
        weights_b = [1.0]
        r_a = 0.0
    elif family == "TvT":
        centers_a = _three_modes(d, mu)
        centers_b = _three_modes(d, mu / 2)[1:]
        weights_a = [1 / 3] * 3
        weights_b = [0.5, 0.5]
        r_a = 0.0
    elif family == "TvS":
        centers_a = _three_modes(d, mu)
        weights_a = [1 / 3] * 3
        r_a = 0.0
        r_b = mu / 2
        n_b = N_SPHERE_B + int(center_rng.integers(-SPHERE_JITTER, SPHERE_JITTER + 1))
        centers_b = hypersphere_centers(d, r_b, n_b, center_rng)
        weights_b = [1 / n_b] * n_b
    else:
        if r_a <= 0:
            raise ValueError("SvS needs r_a > 0")
        r_b = r_a / 2
        n_a = N_SPHERE_A + int(center_rng.integers(-SPHERE_JITTER, SPHERE_JITTER + 1))
        n_b = N_SPHERE_B + int(center_rng.integers(-SPHERE_JITTER, SPHERE_JITTER + 1))
        shell_a = hypersphere_centers(d, r_a, n_a, center_rng)
        centers_a = np.vstack([np.zeros((1, d)), shell_a])
        weights_a = [0.5] + [0.5 / n_a] * n_a
        centers_b = hypersphere_centers(d, r_b, n_b, center_rng)
        weights_b = [1 / n_b] * n_b

    return ScenarioSpec(
        family=family,
        d=d,
        mu=float(mu),
        var_a=float(var_a),
        var_b=float(var_b),
        r_a=float(r_a),
        r_b=float(r_b),
        centers_a=centers_a,
        centers_b=centers_b,
        weights_a=weights_a,
        weights_b=weights_b,
    )


def identical_classes(spec: ScenarioSpec) -> ScenarioSpec:
    """Copy of ``spec`` whose class B is an exact replica of class A (BER = 0.5)."""
    return ScenarioSpec(
        family=spec.family,
        d=spec.d,
        mu=spec.mu,
        var_a=spec.var_a,
        var_b=spec.var_a,
        r_a=spec.r_a,
        r_b=spec.r_a,
        centers_a=spec.centers_a,
        centers_b=spec.centers_a,
        weights_a=spec.weights_a,
        weights_b=spec.weights_a,
    )


def sample(spec: ScenarioSpec, label, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` i.i.d. points from one class.

    A mixture component is chosen with the class weights, then isotropic
    Gaussian noise of the class variance is added.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    centers = spec.centers(label)
    weights = spec.weights(label)
    comp = rng.choice(len(weights), size=count, p=weights)
    noise = rng.standard_normal((count, spec.d))
    return centers[comp] + np.sqrt(spec.var(label)) * noise


def sample_dataset(spec: ScenarioSpec, n_per_class: int, rng: np.random.Generator):
    """Balanced labelled dataset: ``n_per_class`` points of A then of B.

    Returns ``X`` with shape ``(2 * n_per_class, d)`` and integer labels
    ``y`` (0 for A, 1 for B).
    """
    xa = sample(spec, "A", n_per_class, rng)
    xb = sample(spec, "B", n_per_class, rng)
    y = np.repeat(np.array([0, 1]), n_per_class)
    return np.vstack([xa, xb]), y


def log_pdf(spec: ScenarioSpec, label, x) -> np.ndarray | float:
    """Log density of class ``label`` at ``x`` (a d-vector or an n x d array)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != spec.d:
        raise ValueError(f"expected {spec.d} features, got {x.shape[1]}")
    centers = spec.centers(label)
    var = spec.var(label)
    sq = (
        np.einsum("ij,ij->i", x, x)[:, None]
        - 2.0 * x @ centers.T
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    out = logsumexp(np.log(spec.weights(label))[None, :] - sq / (2.0 * var), axis=1)
    out -= 0.5 * spec.d * np.log(2.0 * np.pi * var)
    return float(out[0]) if single else out
