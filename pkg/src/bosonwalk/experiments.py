"""Seeded numerical experiments on random resonator networks.

Every ensemble member draws its perturbation from
``derive_member_seed(config.seed, index)``, so results depend only on the
config and the member index, never on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import coherent as coh
from .dynamics import (DensityMatrix, StateVector, diagonal_distribution, evolve_closed,
                       evolve_lindblad, evolve_vector)
from .errors import DomainError, NumericalError
from .fock import enumerate_basis
from .hamiltonian import build_collapse_ops, build_hamiltonian
from .metrics import (DecayModelParams, bhattacharyya, distribution_distance, fit_distribution,
                      fitted_densities, model_delta, model_trace, occupation_variance,
                      operator_distance, shared_histograms, trace_distance, trace_distance_pure)
from .network import CouplingGraph, angular_matrix, load_graph, mode_propagator, perturb, random_graph

INPUT_KINDS = ("fock", "coherent")
METRICS = ("delta", "trace")
SCAN_PARAMETERS = ("T1", "Tphi", "Tf", "N")
COHERENT_STATISTICS = ("occupations", "distribution")
OVERLAP_DENSITIES = ("histogram", "lognormal", "normal")
DEFAULT_STRENGTHS = (1e-4, 1e-3, 1e-2, 1e-1)

_MASK64 = (1 << 64) - 1


def derive_member_seed(seed: int, index: int) -> int:
    """SplitMix64 hash of ``seed + (index + 1) * golden_gamma``.

    Constants are the published SplitMix64 ones (Steele, Lea & Flood 2014).
    For a fixed seed the map index -> output is injective on 64-bit indices.
    """
    z = (int(seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved parameters for every experiment.

    Times: ``t1_us``/``tphi_us`` in microseconds (``None`` disables the
    channel), ``tf_ns`` in nanoseconds.  Couplings in MHz.
    """

    modes: int = 10
    n_bosons: int = 3
    coupling_range_mhz: tuple = (20.0, 40.0)
    t1_us: float = 50.0
    tphi_us: float = 50.0
    tf_ns: float = 25.0
    ensemble_size: int = 1000
    strength: float = 1e-3
    strengths: tuple = DEFAULT_STRENGTHS
    members_per_strength: int = 200
    seed: int = 1
    bins: int = 50
    input_kind: str = "both"
    metric: str = "delta"
    graph_file: str = None
    vary: str = "N"
    values: tuple = None
    n_values: tuple = (1, 2, 3, 4)
    coherent_tail: float = 1e-4
    coherent_statistic: str = "occupations"
    overlap_density: str = "lognormal"
    open_dim_cap: int = 4096
    tol: float = 1e-9

    def __post_init__(self):
        def positive(name, integer=False):
            v = getattr(self, name)
            if integer and (not isinstance(v, int) or isinstance(v, bool)):
                raise DomainError(f"{name} must be an integer, got {v!r}")
            if not v > 0:
                raise DomainError(f"{name} must be positive, got {v!r}")

        for name in ("modes", "n_bosons", "ensemble_size", "members_per_strength", "bins",
                     "open_dim_cap"):
            positive(name, integer=True)
        for name in ("tol", "coherent_tail"):
            positive(name)
        if self.modes < 2:
            raise DomainError(f"modes must be at least 2, got {self.modes}")
        if self.tf_ns < 0:
            raise DomainError(f"tf_ns must be >= 0, got {self.tf_ns}")
        for name in ("t1_us", "tphi_us"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be positive or null, got {v!r}")
        lo, hi = self.coupling_range_mhz
        if not 0 <= lo <= hi:
            raise DomainError(f"coupling_range_mhz must satisfy 0 <= lo <= hi, got {[lo, hi]}")
        if self.strength < 0 or any(s < 0 for s in self.strengths):
            raise DomainError("perturbation strengths must be >= 0")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed <= _MASK64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.input_kind not in INPUT_KINDS + ("both",):
            raise DomainError(f"input_kind must be one of fock, coherent, both; got {self.input_kind!r}")
        if self.metric not in METRICS:
            raise DomainError(f"metric must be delta or trace, got {self.metric!r}")
        if self.vary not in SCAN_PARAMETERS:
            raise DomainError(f"vary must be one of {SCAN_PARAMETERS}, got {self.vary!r}")
        if self.coherent_statistic not in COHERENT_STATISTICS:
            raise DomainError(f"coherent_statistic must be one of {COHERENT_STATISTICS}, "
                              f"got {self.coherent_statistic!r}")
        if self.overlap_density not in OVERLAP_DENSITIES:
            raise DomainError(f"overlap_density must be one of {OVERLAP_DENSITIES}, "
                              f"got {self.overlap_density!r}")
        if any(not isinstance(n, int) or n < 1 for n in self.n_values):
            raise DomainError("n_values must be positive integers")
        object.__setattr__(self, "coupling_range_mhz", (float(lo), float(hi)))
        object.__setattr__(self, "strengths", tuple(float(s) for s in self.strengths))
        object.__setattr__(self, "n_values", tuple(self.n_values))
        if self.values is not None:
            object.__setattr__(self, "values", tuple(self.values))

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


def reference_graph(cfg: ExperimentConfig) -> CouplingGraph:
    """The fixed network shared by every run of a config."""
    if cfg.graph_file is not None:
        g = load_graph(cfg.graph_file)
        if g.modes != cfg.modes:
            raise DomainError(f"graph file has {g.modes} modes but config asks for {cfg.modes}")
        return g
    return random_graph(cfg.modes, *cfg.coupling_range_mhz, seed=cfg.seed)


def _first_modes(modes, n):
    if n > modes:
        raise DomainError(f"cannot place {n} bosons one per mode in {modes} modes")
    return [1] * n + [0] * (modes - n)


def _map_members(fn, indices, threads):
    # results are keyed by position in `indices`, never by completion order
    indices = list(indices)
    if threads is None or threads <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))


# ---------------------------------------------------------------------------
# richness time

@dataclass
class RichnessResult:
    t_rich: float  # None when the threshold is never reached
    threshold: float
    min_variance: float
    times: np.ndarray
    variances: np.ndarray

    @property
    def found(self) -> bool:
        return self.t_rich is not None


def single_boson_probabilities(g: CouplingGraph, times, start: int = 0) -> np.ndarray:
    """Mode populations of one boson launched from ``start``; shape (len(times), M)."""
    w, v = np.linalg.eigh(angular_matrix(g))
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty((times.size, g.modes))
    chunk = max(1, 2**20 // (g.modes * g.modes))
    for s in range(0, times.size, chunk):
        ts = times[s:s + chunk]
        amp = (np.exp(-1j * np.outer(ts, w)) * v[start].conj()) @ v.T
        out[s:s + chunk] = np.abs(amp) ** 2
    return out


def richness_time(g: CouplingGraph, t_max: float = 500.0, dt: float = 0.05) -> RichnessResult:
    """First time the single-boson occupation variance falls to 1/M^2.

    The crossing is located on a grid of spacing ``dt`` and refined by
    bisection to ``dt / 100``.
    """
    if not t_max > 0 or not dt > 0:
        raise DomainError("t_max and dt must be positive")
    m = g.modes
    threshold = 1.0 / m**2
    times = np.arange(0.0, t_max + 0.5 * dt, dt)
    probs = single_boson_probabilities(g, times)
    variances = np.mean((probs - 1.0 / m) ** 2, axis=1)
    below = np.nonzero(variances <= threshold)[0]
    if below.size == 0:
        return RichnessResult(None, threshold, float(variances.min()), times, variances)
    k = int(below[0])
    if k == 0:
        return RichnessResult(0.0, threshold, float(variances.min()), times, variances)
    lo, hi = times[k - 1], times[k]
    while hi - lo > dt / 100:
        mid = 0.5 * (lo + hi)
        if occupation_variance(single_boson_probabilities(g, [mid])[0]) <= threshold:
            hi = mid
        else:
            lo = mid
    return RichnessResult(float(hi), threshold, float(variances.min()), times, variances)


def evolution_time(g: CouplingGraph) -> float:
    """Twice the richness time of ``g``; the perturbation experiments' horizon."""
    res = richness_time(g)
    if not res.found:
        raise NumericalError("richness threshold never reached", residual=res.min_variance)
    return 2.0 * res.t_rich


# ---------------------------------------------------------------------------
# decoherence scans

@dataclass
class ScanRow:
    value: object
    n_bosons: int
    t_ns: float
    delta: float
    trace: float
    model_delta: float
    model_trace: float
    trace_error: float  # |tr(rho) - 1| of the open-system state
    norm_error: float   # | ||psi|| - 1 | of the closed-system state


def decoherence_curve(g: CouplingGraph, n_bosons: int, t1_us, tphi_us, times, tol=1e-9,
                      cap=4096) -> list:
    """Closed vs Lindblad evolution of |1..1,0..0> sampled at ``times``."""
    basis = enumerate_basis(g.modes, n_bosons)
    h = build_hamiltonian(g, basis)
    ops = build_collapse_ops(basis, t1_us, tphi_us)
    psi0 = StateVector.from_occupation(basis, _first_modes(g.modes, n_bosons))
    times = [float(t) for t in times]
    rhos = evolve_lindblad(h, ops, DensityMatrix.from_state(psi0), times, tol=tol, cap=cap)
    params = DecayModelParams(n_bosons, t1_us, tphi_us)
    rows = []
    for t, rho in zip(times, rhos):
        psi = evolve_closed(h, psi0, t, tol=tol)
        sigma = DensityMatrix.from_state(psi)
        rows.append(ScanRow(
            value=None, n_bosons=n_bosons, t_ns=t,
            delta=distribution_distance(diagonal_distribution(rho), diagonal_distribution(psi)),
            trace=trace_distance(rho, sigma),
            model_delta=float(model_delta(t, params)),
            model_trace=float(model_trace(t, params)),
            trace_error=abs(rho.trace - 1.0),
            norm_error=abs(psi.norm - 1.0),
        ))
    return rows


def decoherence_scan(cfg: ExperimentConfig, vary: str = None, values=None) -> list:
    """Vary one of T1, Tphi, Tf or N around the config defaults.

    The reference graph is the same for every point (M is fixed by the
    config).  Each point compares the Lindblad state with the coherent one.
    """
    vary = cfg.vary if vary is None else vary
    values = cfg.values if values is None else values
    if vary not in SCAN_PARAMETERS:
        raise DomainError(f"vary must be one of {SCAN_PARAMETERS}, got {vary!r}")
    if not values:
        raise DomainError("decoherence_scan needs at least one value")
    g = reference_graph(cfg)
    kw = dict(tol=cfg.tol, cap=cfg.open_dim_cap)
    if vary == "Tf":
        times = sorted(set(float(v) for v in values))
        rows = decoherence_curve(g, cfg.n_bosons, cfg.t1_us, cfg.tphi_us, times, **kw)
        by_time = {r.t_ns: r for r in rows}
        out = []
        for v in values:
            out.append(replace(by_time[float(v)], value=v))
        return out
    out = []
    for v in values:
        n, t1, tphi = cfg.n_bosons, cfg.t1_us, cfg.tphi_us
        if vary == "N":
            n = int(v)
        elif vary == "T1":
            t1 = v
        else:
            tphi = v
        (row,) = decoherence_curve(g, n, t1, tphi, [cfg.tf_ns], **kw)
        out.append(replace(row, value=v))
    return out


# ---------------------------------------------------------------------------
# perturbation ensembles

@dataclass
class MemberRecord:
    index: int
    seed: int
    value: float
    bound: float = 0.0  # truncation error bound (coherent delta only)


@dataclass
class EnsembleResult:
    input_kind: str
    metric: str
    strength: float
    t_ns: float
    records: list
    summary: dict = field(default_factory=dict)
    fit: dict = None

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])


class _FockEnsemble:
    """Fock input |1..1,0..0> propagated inside its fixed-N sector."""

    def __init__(self, g_ref, n_bosons, t, tol):
        self.basis = enumerate_basis(g_ref.modes, n_bosons)
        self.sector = self.basis.sector(n_bosons)
        psi0 = StateVector.from_occupation(self.basis, _first_modes(g_ref.modes, n_bosons))
        self.v0 = psi0.amplitudes[self.sector]
        self.t = t
        self.tol = tol
        self.ref = self.final_state(g_ref)

    def final_state(self, g):
        h = build_hamiltonian(g, self.basis).matrix[self.sector, self.sector]
        return evolve_vector(h, self.v0, self.t, self.tol)

    def value(self, g, metric):
        out = self.final_state(g)
        if metric == "delta":
            return float(np.abs(np.abs(out) ** 2 - np.abs(self.ref) ** 2).sum()), 0.0
        return trace_distance_pure(self.ref, out), 0.0


class _CoherentEnsemble:
    """Coherent input with alpha = 1 in the first N modes.

    ``statistic`` selects what the delta metric compares: the normalized
    mean-occupation vectors (``"occupations"``) or truncated product-Poisson
    distributions over the Fock basis (``"distribution"``).
    """

    def __init__(self, g_ref, n_bosons, t, tail, statistic="occupations"):
        self.alpha0 = np.array(_first_modes(g_ref.modes, n_bosons), dtype=complex)
        self.t = t
        self.ref = coh.evolve_amplitudes(g_ref, self.alpha0, t)
        self.statistic = statistic
        self._tail = tail
        self._basis = None

    def prepare(self):
        if self.statistic == "distribution" and self._basis is None:
            mean = float(np.sum(np.abs(self.alpha0) ** 2))
            self._basis = enumerate_basis(len(self.alpha0), coh.poisson_cutoff(mean, self._tail))
            self._p_ref, self._r_ref = coh.poisson_distribution(self.ref, self._basis)

    def value(self, g, metric):
        out = coh.evolve_amplitudes(g, self.alpha0, self.t)
        if metric == "trace":
            return coh.coherent_trace_distance(self.ref, out), 0.0
        if self.statistic == "occupations":
            return distribution_distance(coh.mean_occupation_distribution(self.ref),
                                         coh.mean_occupation_distribution(out)), 0.0
        self.prepare()
        q, rq = coh.poisson_distribution(out, self._basis)
        return float(np.abs(q - self._p_ref).sum()), self._r_ref + rq


def _summary(values):
    v = np.asarray(values, dtype=float)
    return {
        "count": int(v.size),
        "mean": float(v.mean()),
        "std": float(v.std()),
        "median": float(np.median(v)),
        "min": float(v.min()),
        "max": float(v.max()),
    }


def perturbation_ensemble(cfg: ExperimentConfig, input_kind: str = "fock", metric: str = None,
                          strength: float = None, threads: int = 1, t_ns: float = None,
                          graph: CouplingGraph = None) -> EnsembleResult:
    """Distances between reference and perturbed-network outputs over an ensemble.

    The evolution time defaults to twice the reference graph's richness
    time.  Fits are lognormal for ``delta`` and normal for ``trace``.
    """
    metric = cfg.metric if metric is None else metric
    strength = cfg.strength if strength is None else strength
    if input_kind not in INPUT_KINDS:
        raise DomainError(f"input_kind must be fock or coherent, got {input_kind!r}")
    if metric not in METRICS:
        raise DomainError(f"metric must be delta or trace, got {metric!r}")
    if cfg.ensemble_size < 2:
        raise DomainError("ensemble_size must be at least 2")
    g_ref = reference_graph(cfg) if graph is None else graph
    t = evolution_time(g_ref) if t_ns is None else t_ns
    if input_kind == "fock":
        runner = _FockEnsemble(g_ref, cfg.n_bosons, t, cfg.tol)
    else:
        runner = _CoherentEnsemble(g_ref, cfg.n_bosons, t, cfg.coherent_tail,
                                   cfg.coherent_statistic)
        if metric == "delta":
            runner.prepare()  # build shared state before threads start

    def member(i):
        seed = derive_member_seed(cfg.seed, i)
        value, bound = runner.value(perturb(g_ref, strength, seed), metric)
        return MemberRecord(i, seed, value, bound)

    records = _map_members(member, range(cfg.ensemble_size), threads)
    values = [r.value for r in records]
    family = "lognormal" if metric == "delta" else "normal"
    fit = None
    if min(values) > 0 or family == "normal":
        loc, scale = fit_distribution(values, family)
        fit = {"family": family, "location": loc, "scale": scale}
    return EnsembleResult(input_kind, metric, strength, t, records, _summary(values), fit)


# ---------------------------------------------------------------------------
# output-distribution bound

@dataclass
class ArkhipovRow:
    strength: float
    member: int
    seed: int
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.nan


@dataclass
class ArkhipovResult:
    rows: list
    violation_count: int
    t_ns: float

    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.rows if r.rhs > 0])


def arkhipov_pair(g_ref: CouplingGraph, g_pert: CouplingGraph, n_bosons: int, t: float,
                  tol: float = 1e-9):
    """(lhs, rhs) of the output-distribution bound for one perturbed network.

    lhs is the 1-norm distance between the N-boson output distributions;
    rhs is N times the operator distance of the mode propagators.
    """
    runner = _FockEnsemble(g_ref, n_bosons, t, tol)
    lhs, _ = runner.value(g_pert, "delta")
    rhs = n_bosons * operator_distance(mode_propagator(g_ref, t), mode_propagator(g_pert, t))
    return lhs, rhs


def arkhipov_check(cfg: ExperimentConfig, n_per_strength: int = None, strengths=None,
                   t: float = None, threads: int = 1, graph: CouplingGraph = None) -> ArkhipovResult:
    """Check ``||D_pert - D_ref||_1 <= N ||U_pert - U_ref||_op`` over an ensemble.

    Member ``m`` uses the same perturbation draw at every strength.
    """
    n_per_strength = cfg.members_per_strength if n_per_strength is None else n_per_strength
    strengths = cfg.strengths if strengths is None else tuple(strengths)
    t = cfg.tf_ns if t is None else t
    g_ref = reference_graph(cfg) if graph is None else graph
    runner = _FockEnsemble(g_ref, cfg.n_bosons, t, cfg.tol)
    u_ref = mode_propagator(g_ref, t)
    n = cfg.n_bosons

    def member(job):
        s, m = job
        seed = derive_member_seed(cfg.seed, m)
        g = perturb(g_ref, s, seed)
        lhs, _ = runner.value(g, "delta")
        rhs = n * operator_distance(u_ref, mode_propagator(g, t))
        return ArkhipovRow(s, m, seed, lhs, rhs)

    jobs = [(s, m) for s in strengths for m in range(n_per_strength)]
    rows = _map_members(member, jobs, threads)
    violations = sum(1 for r in rows if r.lhs > r.rhs + 1e-9)
    return ArkhipovResult(rows, violations, t)


# ---------------------------------------------------------------------------
# Fock vs coherent overlap

@dataclass
class OverlapRow:
    n_bosons: int
    overlap: float
    fock_mean: float
    coherent_mean: float


def ensemble_overlap(fock_values, coherent_values, bins: int = 50, density: str = "histogram"):
    """Bhattacharyya overlap of two ensembles' distance distributions."""
    if density == "histogram":
        f, g = shared_histograms(fock_values, coherent_values, bins=bins)
    elif density in ("lognormal", "normal"):
        f, g = fitted_densities(fock_values, coherent_values, family=density)
    else:
        raise DomainError(f"unknown density estimate {density!r}")
    return bhattacharyya(f, g)


def overlap_vs_n(cfg: ExperimentConfig, n_values=None, threads: int = 1,
                 density: str = None) -> list:
    """Distribution overlap of Fock and coherent delta-ensembles for each N."""
    n_values = cfg.n_values if n_values is None else n_values
    density = cfg.overlap_density if density is None else density
    g_ref = reference_graph(cfg)
    t = evolution_time(g_ref)
    rows = []
    for n in n_values:
        c = replace(cfg, n_bosons=int(n))
        fock = perturbation_ensemble(c, "fock", "delta", threads=threads, t_ns=t, graph=g_ref)
        cohr = perturbation_ensemble(c, "coherent", "delta", threads=threads, t_ns=t, graph=g_ref)
        s = ensemble_overlap(fock.values, cohr.values, bins=cfg.bins, density=density)
        rows.append(OverlapRow(int(n), s, fock.summary["mean"], cohr.summary["mean"]))
    return rows
