import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosonwalk.errors import DomainError
from bosonwalk.fock import enumerate_basis
from bosonwalk.hamiltonian import (SparseOperator, annihilation, apply_sparse, build_collapse_ops,
                                   build_hamiltonian, number_operator)
from bosonwalk.network import ANGULAR_PER_MHZ, CouplingGraph, random_graph


def dense_ladder(m, n_max):
    """Annihilators built from explicit state lookups, as an independent oracle."""
    b = enumerate_basis(m, n_max)
    lookup = {tuple(s): k for k, s in enumerate(b.states)}
    ops = []
    for i in range(m):
        a = np.zeros((b.dimension, b.dimension))
        for k, s in enumerate(b.states):
            if s[i] > 0:
                t = list(s)
                t[i] -= 1
                a[lookup[tuple(t)], k] = math.sqrt(int(s[i]))
        ops.append(a)
    return b, ops


def test_one_boson_block(two_mode):
    b = enumerate_basis(2, 1)
    h = build_hamiltonian(two_mode, b).toarray()
    w = ANGULAR_PER_MHZ * 30.0
    s = b.sector(1)
    assert np.allclose(h[s, s], [[0, w], [w, 0]], atol=0, rtol=1e-15)
    v = np.zeros(3, complex)
    v[b.index_of([1, 0])] = 1
    out = apply_sparse(build_hamiltonian(two_mode, b), v)
    assert np.isclose(out[b.index_of([0, 1])], w) and np.count_nonzero(out) == 1


def test_two_boson_ladder_factor(two_mode):
    b = enumerate_basis(2, 2)
    h = build_hamiltonian(two_mode, b).toarray()
    w = ANGULAR_PER_MHZ * 30.0
    assert np.isclose(h[b.index_of([2, 0]), b.index_of([1, 1])], w * np.sqrt(2))


def test_matches_dense_second_quantization():
    g = CouplingGraph(random_graph(4, seed=2).couplings, detunings=[1.0, -2.0, 0.5, 0.0])
    b, a = dense_ladder(4, 3)
    ref = sum(ANGULAR_PER_MHZ * g.matrix[i, j] * a[i].T @ a[j] for i in range(4) for j in range(4))
    h = build_hamiltonian(g, b).toarray()
    assert np.abs(h - ref).max() < 1e-14
    assert np.abs(annihilation(b, 2).toarray() - a[2]).max() < 1e-15
    assert np.abs(number_operator(b, 1).toarray() - a[1].T @ a[1]).max() < 1e-14


def test_zero_graph_gives_zero_operator():
    b = enumerate_basis(3, 2)
    h = build_hamiltonian(CouplingGraph(np.zeros((3, 3))), b)
    assert h.nnz == 0
    assert not apply_sparse(h, np.ones(b.dimension)).any()


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(1, 3), st.integers(0, 2**32))
def test_hamiltonian_conserves_number(m, n, seed):
    b = enumerate_basis(m, n)
    h = build_hamiltonian(random_graph(m, seed=seed), b)
    rows, cols, _ = h.entries()
    assert np.array_equal(b.totals[rows], b.totals[cols])
    dense = h.toarray()
    assert np.abs(dense - dense.conj().T).max() == 0


def test_collapse_operators():
    assert build_collapse_ops(enumerate_basis(2, 1)) == []
    b1 = enumerate_basis(1, 1)
    (relax,) = build_collapse_ops(b1, t1_us=50)
    rows, cols, vals = relax.entries()
    assert list(rows) == [0] and list(cols) == [1]
    assert np.isclose(vals[0], np.sqrt(1 / 50e3))
    b3 = enumerate_basis(1, 3)
    (deph,) = build_collapse_ops(b3, tphi_us=20)
    assert np.allclose(np.diag(deph.toarray()), np.sqrt(2 / 20e3) * np.arange(4))
    assert np.count_nonzero(deph.toarray()) == 3
    assert len(build_collapse_ops(enumerate_basis(3, 2), 10, 10)) == 6
    assert build_collapse_ops(b1, t1_us=float("inf")) == []
    for bad in (0, -5):
        with pytest.raises(DomainError):
            build_collapse_ops(b1, t1_us=bad)


def test_apply_sparse_identity_and_shape():
    b = enumerate_basis(3, 2)
    eye = SparseOperator(np.eye(b.dimension))
    v = np.arange(b.dimension) + 1j
    assert np.array_equal(apply_sparse(eye, v), v)
    with pytest.raises(DomainError):
        apply_sparse(eye, v[:-1])


def test_operator_equality_is_bitwise(ten_mode, basis_10_3):
    h1 = build_hamiltonian(ten_mode, basis_10_3)
    h2 = build_hamiltonian(ten_mode, basis_10_3)
    assert h1 == h2
    assert h1.adjoint() == h1
