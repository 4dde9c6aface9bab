"""Second-quantized operators over an :class:`OccupationBasis`.

All operators are stored as canonical CSR matrices (sorted indices, no
duplicates) in units of rad/ns or sqrt(1/ns) for collapse operators.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .fock import OccupationBasis
from .network import ANGULAR_PER_MHZ, CouplingGraph


class SparseOperator:
    """Immutable complex sparse matrix acting on a Fock basis.

    ``shift`` is the change in total boson number the operator produces
    (0 for number-conserving operators, -1 for annihilators); ``None`` when
    the operator mixes sectors irregularly.
    """

    def __init__(self, matrix, shift=None):
        m = sp.csr_matrix(matrix, dtype=complex)
        m.sum_duplicates()
        m.sort_indices()
        m.eliminate_zeros()
        m.data.setflags(write=False)
        m.indices.setflags(write=False)
        m.indptr.setflags(write=False)
        self.matrix = m
        self.shift = shift

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def entries(self):
        """Coordinate triplets ``(rows, cols, values)`` sorted by (row, col)."""
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def adjoint(self) -> "SparseOperator":
        shift = None if self.shift is None else -self.shift
        return SparseOperator(self.matrix.conj().T, shift=shift)

    def __matmul__(self, v):
        return apply_sparse(self, v)

    def __eq__(self, other):
        if not isinstance(other, SparseOperator) or other.matrix.shape != self.matrix.shape:
            return NotImplemented
        a, b = self.matrix, other.matrix
        return (np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
                and np.array_equal(a.data, b.data))

    __hash__ = None

    def __repr__(self):
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz}, shift={self.shift})"


def apply_sparse(op: SparseOperator, v) -> np.ndarray:
    """Matrix-vector (or matrix-matrix) product ``op @ v``."""
    v = np.asarray(v)
    if v.shape[0] != op.dim:
        raise DomainError(f"operand length {v.shape[0]} does not match operator dim {op.dim}")
    return op.matrix @ v


def _check_basis(g: CouplingGraph, basis: OccupationBasis):
    if g.modes != basis.modes:
        raise DomainError(f"graph has {g.modes} modes but basis has {basis.modes}")


def build_hamiltonian(g: CouplingGraph, basis: OccupationBasis) -> SparseOperator:
    """Hopping Hamiltonian ``sum_ij G_ij a_i^dag a_j`` in rad/ns."""
    _check_basis(g, basis)
    states = basis.states.astype(np.int64)
    omega = ANGULAR_PER_MHZ * g.couplings
    rows, cols, vals = [], [], []
    for j in range(basis.modes):
        src = np.nonzero(states[:, j] > 0)[0]
        if src.size == 0:
            continue
        nj = states[src, j]
        for i in range(basis.modes):
            if i == j or omega[i, j] == 0:
                continue
            target = states[src].copy()
            target[:, j] -= 1
            target[:, i] += 1
            rows.append(basis.indices_of(target))
            cols.append(src)
            vals.append(omega[i, j] * np.sqrt(nj * (states[src, i] + 1)))
    diag = ANGULAR_PER_MHZ * (states @ g.detunings)
    nz = np.nonzero(diag)[0]
    rows.append(nz)
    cols.append(nz)
    vals.append(diag[nz])
    dim = basis.dimension
    if rows:
        mat = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(dim, dim))
    else:
        mat = sp.csr_matrix((dim, dim))
    return SparseOperator(mat, shift=0)


def annihilation(basis: OccupationBasis, mode: int) -> SparseOperator:
    """Ladder operator ``a_mode``."""
    states = basis.states.astype(np.int64)
    src = np.nonzero(states[:, mode] > 0)[0]
    target = states[src].copy()
    target[:, mode] -= 1
    dim = basis.dimension
    mat = sp.coo_matrix((np.sqrt(states[src, mode]), (basis.indices_of(target), src)),
                        shape=(dim, dim))
    return SparseOperator(mat, shift=-1)


def number_operator(basis: OccupationBasis, mode: int) -> SparseOperator:
    return SparseOperator(sp.diags(basis.states[:, mode].astype(float)), shift=0)


def _rate_per_ns(name, value_us):
    if value_us is None or value_us == np.inf:
        return None
    if not value_us > 0:
        raise DomainError(f"{name} must be positive (or None to disable), got {value_us}")
    return 1.0 / (value_us * 1e3)


def build_collapse_ops(basis: OccupationBasis, t1_us=None, tphi_us=None) -> list:
    """Per-mode relaxation and pure-dephasing collapse operators.

    Relaxation is ``sqrt(1/T1) a_i``; dephasing is ``sqrt(2/Tphi) n_i`` so
    that a coherence between occupations n and m of one mode decays at
    ``(n - m)**2 / Tphi``.  Passing ``None`` (or ``inf``) disables a channel.
    """
    gamma1 = _rate_per_ns("T1", t1_us)
    gammaphi = _rate_per_ns("Tphi", tphi_us)
    ops = []
    if gamma1 is not None:
        for i in range(basis.modes):
            a = annihilation(basis, i)
            ops.append(SparseOperator(np.sqrt(gamma1) * a.matrix, shift=-1))
    if gammaphi is not None:
        for i in range(basis.modes):
            n = number_operator(basis, i)
            ops.append(SparseOperator(np.sqrt(2 * gammaphi) * n.matrix, shift=0))
    return ops
