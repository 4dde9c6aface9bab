"""Time evolution of pure states and density matrices over a Fock basis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, NumericalError, SizingError
from .fock import OccupationBasis
from .hamiltonian import SparseOperator

DEFAULT_OPEN_CAP = 4096


@dataclass(frozen=True, eq=False)
class StateVector:
    basis: OccupationBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.basis.dimension,):
            raise DomainError(f"amplitudes must have length {self.basis.dimension}")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_occupation(cls, basis, occ):
        amp = np.zeros(basis.dimension, dtype=complex)
        amp[basis.index_of(occ)] = 1.0
        return cls(basis, amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    basis: OccupationBasis
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        d = self.basis.dimension
        if rho.shape != (d, d):
            raise DomainError(f"rho must have shape ({d}, {d}), got {rho.shape}")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_state(cls, psi: StateVector):
        a = psi.amplitudes
        return cls(psi.basis, np.outer(a, a.conj()))

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)


# ---------------------------------------------------------------------------
# closed systems

def _lanczos_expm(a, v, t, tol, krylov_dim=30, max_substeps=100_000):
    """exp(-i a t) v for Hermitian sparse ``a`` by restarted Lanczos.

    Each substep of length tau is accepted when the a posteriori error
    estimate is below ``tol * tau / t``, so errors sum to at most ``tol``.
    """
    beta = np.linalg.norm(v)
    if beta == 0 or t == 0:
        return v.astype(complex, copy=True)
    n = v.shape[0]
    anorm = abs(a).sum(axis=0).max() if a.nnz else 0.0
    if anorm == 0:
        return v.astype(complex, copy=True)
    m_max = min(krylov_dim, n)
    rate = tol / t
    w = v / beta
    t_done = 0.0
    tau = min(t, 0.5 * m_max / anorm)
    steps = 0
    basis = np.empty((m_max + 1, n), dtype=complex)
    while t_done < t:
        steps += 1
        if steps > max_substeps:
            raise NumericalError(f"Lanczos exceeded {max_substeps} substeps at t={t_done}",
                                 residual=t - t_done)
        # Krylov basis with full reorthogonalization
        basis[0] = w
        alpha = np.zeros(m_max)
        betas = np.zeros(m_max)
        m = m_max
        breakdown = False
        for j in range(m_max):
            u = a @ basis[j]
            alpha[j] = np.vdot(basis[j], u).real
            u -= basis[: j + 1].T @ (basis[: j + 1].conj() @ u)
            u -= basis[: j + 1].T @ (basis[: j + 1].conj() @ u)
            b = np.linalg.norm(u)
            betas[j] = b
            if b <= 1e-13 * anorm:
                m = j + 1
                breakdown = True
                break
            basis[j + 1] = u / b
        if m == 1:
            evals, evecs = alpha[:1], np.ones((1, 1))
        else:
            evals, evecs = eigh_tridiagonal(alpha[:m], betas[: m - 1])
        remaining = t - t_done
        if breakdown:
            tau = remaining
        tau = min(tau, remaining)
        while True:
            coef = evecs @ (np.exp(-1j * evals * tau) * evecs[0].conj())
            err = 0.0 if breakdown else betas[m - 1] * abs(coef[m - 1])
            if err <= rate * tau or tau < 1e-300:
                break
            tau *= max(0.2, 0.9 * (rate * tau / err) ** (1.0 / m))
            if tau <= 1e-14 * t:
                raise NumericalError("Lanczos step size underflow", residual=err)
        w = coef @ basis[:m]
        w /= np.linalg.norm(w)
        t_done += tau
        if err > 0:
            tau *= min(2.0, 0.9 * (rate * tau / err) ** (1.0 / m))
        else:
            tau *= 2.0
    return beta * w


def _number_sector(psi: StateVector):
    support = np.nonzero(psi.amplitudes)[0]
    if support.size == 0:
        return None
    totals = np.unique(psi.basis.totals[support])
    if totals.size != 1:
        return None
    return psi.basis.sector(int(totals[0]))


def evolve_closed(h: SparseOperator, psi0: StateVector, t: float, tol: float = 1e-9) -> StateVector:
    """Return ``exp(-i H t) |psi0>`` for ``t`` in ns.

    Number-definite inputs are propagated inside their fixed-N block only.
    """
    if h.dim != psi0.basis.dimension:
        raise DomainError(f"operator dim {h.dim} != state dim {psi0.basis.dimension}")
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    if t == 0:
        return StateVector(psi0.basis, psi0.amplitudes.copy())
    block = _number_sector(psi0) if h.shift == 0 else None
    if block is None:
        out = _lanczos_expm(h.matrix, psi0.amplitudes, t, tol)
    else:
        out = np.zeros_like(psi0.amplitudes)
        out[block] = _lanczos_expm(h.matrix[block, block], psi0.amplitudes[block], t, tol)
    return StateVector(psi0.basis, out)


def evolve_vector(matrix, v, t, tol=1e-9):
    """Array-level counterpart of :func:`evolve_closed` for a Hermitian sparse matrix."""
    return _lanczos_expm(sp.csr_matrix(matrix), np.asarray(v, dtype=complex), t, tol)


# ---------------------------------------------------------------------------
# open systems

def _jump_term(mat):
    """Return a callable computing ``L rho L^dag`` for one jump operator.

    Operators with at most one entry per row (ladder operators) act as a
    gather on rho; anything else falls back to two sparse products.
    """
    mat = sp.csr_matrix(mat)
    counts = np.diff(mat.indptr)
    if np.all(counts <= 1):
        rows = np.nonzero(counts)[0]
        cols = mat.indices
        vals = mat.data
        weight = np.outer(vals, vals.conj())
        dst = np.ix_(rows, rows)
        src = np.ix_(cols, cols)

        def apply(rho, out):
            out[dst] += weight * rho[src]
        return apply

    def apply(rho, out):
        out += mat @ (mat @ rho.conj().T).conj().T
    return apply


class _Block:
    """Generator restricted to one diagonal block of rho.

    ``ldl`` is the full sum of ``L^dag L``; ``local`` holds the operators
    whose jumps stay inside the block.
    """

    def __init__(self, h, ldl, local, rows):
        self.heff = sp.csr_matrix(h[rows, :][:, rows] - 0.5j * ldl[rows, :][:, rows])
        weights = np.zeros((len(rows), len(rows)), dtype=complex)
        self.local = []
        for op in local:
            m = op[rows, :][:, rows]
            if m.nnz == 0:
                continue
            if (m - sp.diags(m.diagonal())).nnz == 0:
                d = m.diagonal()
                weights += np.outer(d, d.conj())
            else:
                self.local.append(_jump_term(m))
        self.weights = weights if np.any(weights) else None

    def apply(self, rho, out):
        tmp = -1j * (self.heff @ rho)
        out += tmp
        out += tmp.conj().T
        if self.weights is not None:
            out += self.weights * rho
        for term in self.local:
            term(rho, out)


class _LindbladRHS:
    """Right-hand side over a list of diagonal blocks of rho.

    With a single block this is the plain dense-rho Lindblad generator.  When
    every operator shifts the total boson number by a fixed amount, rho is
    split into number sectors and jumps feed lower sectors from higher ones.
    """

    def __init__(self, h, collapse, blocks):
        self.blocks = blocks
        self.sizes = [len(b) for b in blocks]
        self.offsets = np.concatenate([[0], np.cumsum([n * n for n in self.sizes])])
        dim = h.shape[0]
        ldl = sp.csr_matrix((dim, dim), dtype=complex)
        for c, _ in collapse:
            ldl = ldl + c.conj().T @ c
        local = [c for c, shift in collapse if shift == 0 or len(blocks) == 1]
        self.diag = [_Block(h, ldl, local, b) for b in blocks]
        if len(blocks) == 1:
            return
        self.cross = []  # (source block, target block, term)
        for c, shift in collapse:
            if shift == 0:
                continue
            for k, rows in enumerate(blocks):
                target = k + shift
                if 0 <= target < len(blocks):
                    sub = c[blocks[target], :][:, rows]
                    if sub.nnz:
                        self.cross.append((k, target, _jump_term(sub)))

    def unpack(self, y):
        return [y[self.offsets[k]:self.offsets[k + 1]].reshape(n, n)
                for k, n in enumerate(self.sizes)]

    def __call__(self, _t, y):
        rhos = self.unpack(y)
        out = np.zeros_like(y)
        outs = self.unpack(out)
        for blk, rho, o in zip(self.diag, rhos, outs):
            blk.apply(rho, o)
        if len(self.blocks) > 1:
            for src, dst, term in self.cross:
                term(rhos[src], outs[dst])
        return out


def _operator_shift(mat, totals):
    coo = mat.tocoo()
    if coo.nnz == 0:
        return 0
    shifts = np.unique(totals[coo.row] - totals[coo.col])
    return int(shifts[0]) if shifts.size == 1 else None


def _sector_blocks(basis, rho, h, collapse):
    """Number sectors as blocks if rho and all generators respect them."""
    totals = basis.totals
    if _operator_shift(h.matrix, totals) != 0:
        return None
    shifts = [_operator_shift(op.matrix, totals) for op in collapse]
    if any(s is None for s in shifts):
        return None
    nz = np.nonzero(rho)
    if np.any(totals[nz[0]] != totals[nz[1]]):
        return None
    blocks = [np.arange(basis.dimension)[basis.sector(n)] for n in range(basis.n_max + 1)]
    return blocks, shifts


def evolve_lindblad(h: SparseOperator, collapse, rho0: DensityMatrix, t_grid, tol: float = 1e-9,
                    cap: int = DEFAULT_OPEN_CAP) -> list:
    """Integrate the Lindblad master equation, returning rho at each grid time.

    Uses an adaptive 8th-order Runge-Kutta (Dormand-Prince) scheme with
    relative tolerance ``tol``; the density matrix is stored densely, the
    generators sparsely.
    """
    dim = rho0.basis.dimension
    if dim > cap:
        raise SizingError(f"open-system dimension {dim} exceeds cap {cap}", dimension=dim, cap=cap)
    if h.dim != dim or any(op.dim != dim for op in collapse):
        raise DomainError("operator dimensions do not match the density matrix")
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("t_grid must be a non-empty 1-d sequence")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise DomainError("t_grid must be strictly ascending and start at t >= 0")
    if grid[-1] == 0:
        return [DensityMatrix(rho0.basis, rho0.rho.copy()) for _ in grid]
    mats = [op.matrix for op in collapse]
    split = _sector_blocks(rho0.basis, rho0.rho, h, collapse)
    if split is None:
        blocks = [np.arange(dim)]
        shifts = [None] * len(mats)
    else:
        blocks, shifts = split
    rhs = _LindbladRHS(h.matrix, list(zip(mats, shifts)), blocks)
    y0 = np.concatenate([rho0.rho[np.ix_(b, b)].ravel() for b in blocks])
    sol = solve_ivp(rhs, (0.0, grid[-1]), y0, method="DOP853", t_eval=grid,
                    rtol=tol, atol=tol * 1e-3)
    if not sol.success:
        raise NumericalError(f"Lindblad integration failed: {sol.message}")
    out = []
    trace0 = np.trace(rho0.rho).real
    for k in range(grid.size):
        rho = np.zeros((dim, dim), dtype=complex)
        for b, part in zip(blocks, rhs.unpack(sol.y[:, k])):
            rho[np.ix_(b, b)] = part
        rho = 0.5 * (rho + rho.conj().T)
        drift = abs(np.trace(rho).real - trace0)
        if drift > 1e-7:
            raise NumericalError(f"trace drifted by {drift:.3g} at t={grid[k]}", residual=drift)
        out.append(DensityMatrix(rho0.basis, rho))
    return out


# ---------------------------------------------------------------------------
# observables

def diagonal_distribution(state) -> np.ndarray:
    """Populations of the basis states, clipped at zero."""
    if isinstance(state, StateVector):
        p = np.abs(state.amplitudes) ** 2
    elif isinstance(state, DensityMatrix):
        p = np.diagonal(state.rho).real.copy()
    else:
        raise DomainError(f"expected StateVector or DensityMatrix, got {type(state).__name__}")
    if np.any(p < -1e-9):
        raise NumericalError(f"negative population {p.min():.3g}")
    return np.clip(p, 0.0, None)


def occupations(state) -> np.ndarray:
    """Expected photon number in every mode."""
    p = diagonal_distribution(state)
    return p @ state.basis.states.astype(float)
