"""Coupling graphs between resonator modes.

Couplings and detunings are quoted in MHz as the normal-mode splitting of a
resonator pair, i.e. two modes coupled by ``J`` exchange a boson with
angular rate ``pi * J``.  Times are in ns, so a coupling enters every
generator as ``ANGULAR_PER_MHZ * J`` rad/ns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

ANGULAR_PER_MHZ = np.pi * 1e-3  # rad/ns per MHz of splitting
DEFAULT_COUPLING_RANGE = (20.0, 40.0)


@dataclass(frozen=True, eq=False)
class CouplingGraph:
    """Symmetric real coupling matrix with optional per-mode detunings.

    ``couplings`` has a zero diagonal; detunings live in ``detunings``.
    ``coupling_range`` records the range random couplings were drawn from
    and is reused by :func:`perturb`.
    """

    couplings: np.ndarray
    detunings: np.ndarray = None
    coupling_range: tuple = DEFAULT_COUPLING_RANGE

    def __post_init__(self):
        j = np.array(self.couplings, dtype=float)
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise DomainError(f"couplings must be square, got shape {j.shape}")
        m = j.shape[0]
        if np.any(np.diag(j) != 0):
            raise DomainError("coupling diagonal must be zero; use detunings instead")
        if not np.all(np.isfinite(j)):
            raise DomainError("couplings must be finite")
        if not np.array_equal(j, j.T):
            raise DomainError("couplings must be exactly symmetric")
        d = np.zeros(m) if self.detunings is None else np.array(self.detunings, dtype=float)
        if d.shape != (m,) or not np.all(np.isfinite(d)):
            raise DomainError(f"detunings must be {m} finite values")
        lo, hi = (float(x) for x in self.coupling_range)
        j.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "couplings", j)
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "coupling_range", (lo, hi))

    @property
    def modes(self) -> int:
        return self.couplings.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Full coupling matrix in MHz, detunings on the diagonal."""
        return self.couplings + np.diag(self.detunings)

    def __eq__(self, other):
        if not isinstance(other, CouplingGraph):
            return NotImplemented
        return (np.array_equal(self.couplings, other.couplings)
                and np.array_equal(self.detunings, other.detunings)
                and self.coupling_range == other.coupling_range)

    __hash__ = None

    @classmethod
    def from_upper(cls, modes, values, **kwargs):
        """Build from the row-major upper-triangle couplings."""
        j = np.zeros((modes, modes))
        iu = np.triu_indices(modes, 1)
        j[iu] = values
        return cls(j + j.T, **kwargs)


def random_graph(modes: int, j_min: float = 20.0, j_max: float = 40.0, seed: int = 0) -> CouplingGraph:
    """Fully connected graph with i.i.d. uniform couplings on [j_min, j_max] MHz."""
    if modes < 2:
        raise DomainError(f"need at least 2 modes, got {modes}")
    if not 0 <= j_min <= j_max:
        raise DomainError(f"invalid coupling range [{j_min}, {j_max}]")
    rng = np.random.default_rng(seed)
    n_pairs = modes * (modes - 1) // 2
    if j_min == j_max:
        values = np.full(n_pairs, float(j_min))
    else:
        values = rng.uniform(j_min, j_max, n_pairs)
    return CouplingGraph.from_upper(modes, values, coupling_range=(j_min, j_max))


def perturb(g: CouplingGraph, strength: float, seed: int) -> CouplingGraph:
    """Add ``strength`` times an independent random graph to the couplings.

    The perturbation is drawn from ``g.coupling_range``; detunings are left
    untouched.
    """
    if strength < 0:
        raise DomainError(f"perturbation strength must be >= 0, got {strength}")
    noise = random_graph(g.modes, *g.coupling_range, seed=seed)
    return CouplingGraph(g.couplings + strength * noise.couplings,
                         detunings=g.detunings, coupling_range=g.coupling_range)


def angular_matrix(g: CouplingGraph) -> np.ndarray:
    """Single-particle generator in rad/ns."""
    return ANGULAR_PER_MHZ * g.matrix


def mode_propagator(g: CouplingGraph, t: float) -> np.ndarray:
    """Mode-space unitary ``exp(-i G t)`` for ``t`` in ns."""
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if t == 0:
        return np.eye(g.modes, dtype=complex)
    w, v = np.linalg.eigh(angular_matrix(g))
    return (v * np.exp(-1j * w * t)) @ v.conj().T


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    message: str


def validate(g) -> list:
    """Diagnose a graph or raw coupling matrix. An empty list means ok.

    Accepts a :class:`CouplingGraph` or any square array, so matrices that
    could not be turned into a graph can still be inspected.
    """
    j = g.matrix if isinstance(g, CouplingGraph) else np.asarray(g, dtype=float)
    out = []
    if j.ndim != 2 or j.shape[0] != j.shape[1]:
        return [Diagnostic("error", f"coupling matrix is not square: shape {j.shape}")]
    bad = np.argwhere(~np.isfinite(j))
    for i, k in bad:
        out.append(Diagnostic("error", f"non-finite coupling at ({i}, {k}): {j[i, k]}"))
    finite = np.where(np.isfinite(j), j, 0.0)
    asym = np.argwhere(np.triu(finite != finite.T, 1))
    for i, k in asym:
        out.append(Diagnostic("error", f"asymmetric coupling at ({i}, {k}): {j[i, k]} != {j[k, i]}"))
    off = finite - np.diag(np.diag(finite))
    if j.shape[0] > 1 and not np.any(off):
        out.append(Diagnostic("warning", "disconnected: all couplings are zero"))
    return out


def graph_to_dict(g: CouplingGraph) -> dict:
    m = g.modes
    pairs = [[i, k, float(g.couplings[i, k])] for i in range(m) for k in range(i + 1, m)
             if g.couplings[i, k] != 0]
    return {
        "modes": m,
        "coupling_range_mhz": list(g.coupling_range),
        "couplings": pairs,
        "detunings_mhz": [float(x) for x in g.detunings],
    }


def graph_from_dict(data: dict) -> CouplingGraph:
    """Parse the JSON graph schema, rejecting malformed pair lists."""
    allowed = {"modes", "coupling_range_mhz", "couplings", "detunings_mhz"}
    unknown = set(data) - allowed
    if unknown:
        raise DomainError(f"unknown graph keys: {sorted(unknown)}")
    try:
        m = data["modes"]
        pairs = data["couplings"]
    except KeyError as exc:
        raise DomainError(f"graph file missing key {exc.args[0]!r}") from None
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise DomainError(f"'modes' must be a positive integer, got {m!r}")
    rng = tuple(data.get("coupling_range_mhz", DEFAULT_COUPLING_RANGE))
    if len(rng) != 2:
        raise DomainError("'coupling_range_mhz' must be [lo, hi]")
    j = np.zeros((m, m))
    seen = set()
    for entry in pairs:
        if len(entry) != 3:
            raise DomainError(f"coupling entry must be [i, j, J_mhz], got {entry!r}")
        i, k, value = entry
        if not (isinstance(i, int) and isinstance(k, int)):
            raise DomainError(f"coupling indices must be integers, got {entry!r}")
        if not 0 <= i < k < m:
            raise DomainError(f"coupling indices must satisfy 0 <= i < j < {m}, got ({i}, {k})")
        if (i, k) in seen:
            raise DomainError(f"duplicate coupling pair ({i}, {k})")
        seen.add((i, k))
        j[i, k] = j[k, i] = float(value)
    detunings = data.get("detunings_mhz")
    return CouplingGraph(j, detunings=detunings, coupling_range=rng)


def save_graph(g: CouplingGraph, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=1) + "\n")


def load_graph(path) -> CouplingGraph:
    return graph_from_dict(json.loads(Path(path).read_text()))
