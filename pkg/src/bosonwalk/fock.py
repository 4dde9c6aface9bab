"""Truncated bosonic Fock basis over M modes with at most N bosons.

States are graded by total boson number and ordered lexicographically
within each grade, so every fixed-number sector is a contiguous slice::

    >>> basis = enumerate_basis(2, 1)
    >>> basis.states.tolist()
    [[0, 0], [0, 1], [1, 0]]

Lookups use combinatorial ranking (O(M) per state), which also works
vectorized over arrays of occupation vectors.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np

from .errors import DomainError, SizingError

DEFAULT_DIMENSION_CAP = 2**24


def basis_dimension(modes: int, n_max: int) -> int:
    """Number of occupation vectors of ``modes`` modes with total <= ``n_max``."""
    if modes < 1 or n_max < 0:
        raise DomainError(f"need modes >= 1 and n_max >= 0, got {modes}, {n_max}")
    return comb(n_max + modes, modes)


def sector_dimension(modes: int, n: int) -> int:
    """Number of occupation vectors with total exactly ``n``."""
    return comb(n + modes - 1, modes - 1)


def _compositions(n: int, parts: int, dtype) -> np.ndarray:
    # all length-`parts` vectors summing to n, lexicographically ascending
    # table[k][r]: compositions of r into k+1 parts
    table = [[np.array([[r]], dtype=dtype) for r in range(n + 1)]]
    for k in range(1, parts):
        row = []
        for r in range(n + 1):
            blocks = []
            for v in range(r + 1):
                tail = table[k - 1][r - v]
                head = np.full((tail.shape[0], 1), v, dtype=dtype)
                blocks.append(np.hstack([head, tail]))
            row.append(np.vstack(blocks))
        table.append(row)
    return table[parts - 1][n]


class OccupationBasis:
    """Immutable, graded-lexicographic Fock basis.

    Attributes
    ----------
    modes : int
    n_max : int
    states : ndarray, shape (dimension, modes)
        Read-only occupation vectors in canonical order.
    """

    def __init__(self, modes: int, n_max: int, states: np.ndarray):
        self.modes = modes
        self.n_max = n_max
        states.setflags(write=False)
        self.states = states
        self._offsets = tuple(basis_dimension(modes, n - 1) if n > 0 else 0
                              for n in range(n_max + 2))
        # cum[k][r] = binom(r + k, k): compositions of <= r into k+1 parts
        size = n_max + modes + 1
        self._binom = np.array([[comb(r, k) if r >= k else 0 for k in range(modes + 1)]
                                for r in range(size)], dtype=np.int64)
        self._totals = None

    @property
    def dimension(self) -> int:
        return self.states.shape[0]

    def __len__(self):
        return self.dimension

    def __repr__(self):
        return f"OccupationBasis(modes={self.modes}, n_max={self.n_max}, dimension={self.dimension})"

    @property
    def totals(self) -> np.ndarray:
        """Total boson number of every basis state."""
        if self._totals is None:
            totals = self.states.sum(axis=1, dtype=np.int64)
            totals.setflags(write=False)
            self._totals = totals
        return self._totals

    def sector(self, n: int) -> slice:
        """Slice of basis indices holding exactly ``n`` bosons."""
        if not 0 <= n <= self.n_max:
            raise DomainError(f"sector {n} outside [0, {self.n_max}]")
        return slice(self._offsets[n], self._offsets[n + 1])

    def _check(self, occ: np.ndarray) -> np.ndarray:
        occ = np.asarray(occ)
        if occ.ndim == 0 or occ.shape[-1] != self.modes:
            raise DomainError(f"occupation must have length {self.modes}, got shape {occ.shape}")
        if not np.issubdtype(occ.dtype, np.integer):
            if not np.all(np.mod(occ, 1) == 0):
                raise DomainError("occupation entries must be integers")
        occ = occ.astype(np.int64)
        if np.any(occ < 0):
            raise DomainError("occupation entries must be non-negative")
        if np.any(occ.sum(axis=-1) > self.n_max):
            raise DomainError(f"total occupation exceeds n_max={self.n_max}")
        return occ

    def indices_of(self, occs) -> np.ndarray:
        """Vectorized :meth:`index_of` over an array of shape (..., modes)."""
        occ = self._check(occs)
        totals = occ.sum(axis=-1)
        offsets = np.asarray(self._offsets, dtype=np.int64)
        index = offsets[totals]
        remaining = totals.copy()
        m = self.modes
        b = self._binom
        for p in range(m - 1):
            k = m - p - 1  # parts after position p
            c = occ[..., p]
            # states of this sector sharing the prefix whose p-th entry is < c
            index += b[remaining + k, k] - b[remaining - c + k, k]
            remaining -= c
        return index

    def index_of(self, occ) -> int:
        """Ordinal of an occupation vector in the canonical order."""
        occ = np.asarray(occ)
        if occ.ndim != 1:
            raise DomainError("index_of expects a single occupation vector")
        return int(self.indices_of(occ))

    def occupation_of(self, k: int) -> np.ndarray:
        """The ``k``-th occupation vector (a read-only view)."""
        if not 0 <= k < self.dimension:
            raise DomainError(f"ordinal {k} outside [0, {self.dimension})")
        return self.states[k]


@lru_cache(maxsize=32)
def _enumerate_cached(modes, n_max):
    dtype = np.int16 if n_max < 2**15 else np.int64
    blocks = [_compositions(n, modes, dtype) for n in range(n_max + 1)]
    return OccupationBasis(modes, n_max, np.vstack(blocks))


def enumerate_basis(modes: int, n_max: int, cap: int = DEFAULT_DIMENSION_CAP) -> OccupationBasis:
    """Enumerate every occupation vector with total <= ``n_max``.

    Raises :class:`SizingError` when ``binom(n_max + modes, modes)`` exceeds
    ``cap``; the error carries the computed dimension.
    """
    dim = basis_dimension(modes, n_max)
    if dim > cap:
        raise SizingError(f"Fock dimension {dim} exceeds cap {cap}", dimension=dim, cap=cap)
    # bases are immutable, so sharing cached instances is safe
    return _enumerate_cached(modes, n_max)


def index_of(basis: OccupationBasis, occ) -> int:
    return basis.index_of(occ)


def occupation_of(basis: OccupationBasis, k: int) -> np.ndarray:
    return basis.occupation_of(k)
