"""Distances between states and distributions, decay model curves and
small statistical helpers used by the experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError, NumericalError


def _as_state_array(x):
    # accept StateVector / DensityMatrix or raw arrays
    for attr in ("rho", "amplitudes"):
        if hasattr(x, attr):
            return getattr(x, attr)
    return np.asarray(x)


def distribution_distance(p, q) -> float:
    """1-norm distance between two probability vectors, in [0, 2]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError(f"length mismatch: {p.shape} vs {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if abs(v.sum() - 1) > 1e-6:
            raise DomainError(f"{name} sums to {v.sum()}, not 1")
    return float(np.abs(p - q).sum())


def trace_distance(rho, sigma) -> float:
    """Half the sum of absolute eigenvalues of ``rho - sigma``."""
    a = _as_state_array(rho)
    b = _as_state_array(sigma)
    if a.shape != b.shape or a.ndim != 2:
        raise DomainError(f"density matrices must share a square shape, got {a.shape}, {b.shape}")
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    try:
        evals = np.linalg.eigvalsh(diff)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    return float(0.5 * np.abs(evals).sum())


def trace_distance_pure(psi, phi) -> float:
    """Trace distance of two pure states, ``sqrt(1 - |<psi|phi>|^2)``."""
    a = _as_state_array(psi)
    b = _as_state_array(phi)
    if a.shape != b.shape:
        raise DomainError(f"length mismatch: {a.shape} vs {b.shape}")
    overlap = abs(np.vdot(a, b))
    return float(np.sqrt(max(0.0, 1.0 - overlap**2)))


def operator_distance(u_ref, u_pert, atol: float = 1e-8) -> float:
    """``max |lambda - 1|`` over eigenvalues of ``u_pert @ u_ref^dag``."""
    u = np.asarray(u_ref, dtype=complex)
    v = np.asarray(u_pert, dtype=complex)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DomainError(f"unitaries must share a square shape, got {u.shape}, {v.shape}")
    eye = np.eye(u.shape[0])
    for name, w in (("u_ref", u), ("u_pert", v)):
        dev = np.abs(w.conj().T @ w - eye).max()
        if dev > atol:
            raise DomainError(f"{name} is not unitary (deviation {dev:.3g})")
    if np.array_equal(u, v):
        return 0.0
    lam = np.linalg.eigvals(v @ u.conj().T)
    return float(np.abs(lam - 1).max())


# ---------------------------------------------------------------------------
# phenomenological decay curves

@dataclass(frozen=True)
class DecayModelParams:
    """Boson number and decoherence times in microseconds (None = disabled)."""

    n_bosons: int
    t1_us: float = None
    tphi_us: float = None

    def __post_init__(self):
        for name in ("t1_us", "tphi_us"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be positive, got {v}")

    def rates(self):
        """(1/T1, 1/Tphi) in 1/ns."""
        def inv(v):
            return 0.0 if v is None else 1.0 / (v * 1e3)
        return inv(self.t1_us), inv(self.tphi_us)


def model_delta(t_ns, p: DecayModelParams):
    """Distribution-distance model ``2 (1 - exp(-(N t / 3)(5/(2 T1) + 1/Tphi)))``."""
    g1, gphi = p.rates()
    t = np.asarray(t_ns, dtype=float)
    return 2.0 * -np.expm1(-(p.n_bosons * t / 3.0) * (2.5 * g1 + gphi))


def model_trace(t_ns, p: DecayModelParams):
    """Trace-distance model ``1 - exp(-N t (1/T1 + 3/(2 Tphi)))``."""
    g1, gphi = p.rates()
    t = np.asarray(t_ns, dtype=float)
    return -np.expm1(-p.n_bosons * t * (g1 + 1.5 * gphi))


def occupation_variance(p) -> float:
    """Population variance of the single-boson occupation probabilities."""
    p = np.asarray(p, dtype=float)
    m = p.size
    return float(np.mean((p - 1.0 / m) ** 2))


# ---------------------------------------------------------------------------
# ensemble statistics

@dataclass(frozen=True)
class HistogramDensity:
    bin_edges: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if masses.shape != (edges.size - 1,):
            raise DomainError("need exactly one mass per bin")
        if np.any(np.diff(edges) <= 0):
            raise DomainError("bin edges must be strictly ascending")
        if np.any(masses < 0) or abs(masses.sum() - 1) > 1e-12:
            raise DomainError("masses must be non-negative and sum to 1")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "masses", masses)


def shared_histograms(a, b, bins: int = 50):
    """Normalized histograms of two samples over bins spanning the pooled range."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    out = []
    for x in (a, b):
        counts, _ = np.histogram(x, bins=edges)
        out.append(HistogramDensity(edges, counts / counts.sum()))
    return tuple(out)


def fitted_densities(a, b, family: str = "lognormal", points: int = 512):
    """Fitted parametric densities of two samples discretized on a shared grid."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    pad = 0.5 * (hi - lo) if hi > lo else 1.0
    lo = max(lo - pad, 0.0) if family == "lognormal" else lo - pad
    edges = np.linspace(lo, hi + pad, points + 1)
    out = []
    for x in (a, b):
        loc, scale = fit_distribution(x, family)
        dist = _frozen(family, loc, scale)
        # lower tail from the cdf, upper tail from the survival function
        lower = np.diff(dist.cdf(edges))
        upper = -np.diff(dist.sf(edges))
        mass = np.where(edges[1:] <= dist.median(), lower, upper)
        mass = np.clip(mass, 0.0, None)
        out.append(HistogramDensity(edges, mass / mass.sum()))
    return tuple(out)


def bhattacharyya(f: HistogramDensity, g: HistogramDensity) -> float:
    """Overlap ``sum sqrt(f * g)`` of two binned densities on identical bins."""
    if not np.array_equal(f.bin_edges, g.bin_edges):
        raise DomainError("histograms must share bin edges")
    return float(np.sqrt(f.masses * g.masses).sum())


def fit_distribution(samples, family: str = "lognormal"):
    """Maximum-likelihood (location, scale) for a normal or lognormal family.

    For the lognormal family both parameters refer to the log of the samples.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise DomainError("need at least two samples")
    if family == "lognormal":
        if np.any(x <= 0):
            raise DomainError("lognormal fit requires strictly positive samples")
        x = np.log(x)
    elif family != "normal":
        raise DomainError(f"unknown family {family!r}")
    return float(x.mean()), float(x.std())


def _frozen(family, loc, scale):
    scale = max(scale, 1e-300)
    if family == "lognormal":
        return stats.lognorm(s=scale, scale=np.exp(loc))
    return stats.norm(loc=loc, scale=scale)
