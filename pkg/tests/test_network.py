import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosonwalk.errors import DomainError
from bosonwalk.network import (ANGULAR_PER_MHZ, CouplingGraph, graph_from_dict, graph_to_dict,
                               load_graph, mode_propagator, perturb, random_graph, save_graph,
                               validate)


def test_random_graph_range_and_symmetry():
    for seed in range(5):
        g = random_graph(10, 20, 40, seed=seed)
        off = g.couplings[~np.eye(10, dtype=bool)]
        assert off.min() >= 20 and off.max() <= 40
        assert np.array_equal(g.couplings, g.couplings.T)
        assert np.all(np.diag(g.couplings) == 0)


def test_degenerate_range_and_determinism():
    assert random_graph(2, 30, 30, seed=99).couplings[0, 1] == 30.0
    assert random_graph(10, seed=5) == random_graph(10, seed=5)
    assert random_graph(10, seed=5) != random_graph(10, seed=6)


def test_perturb():
    g = random_graph(10, seed=1)
    assert perturb(g, 0.0, 7) == g
    p = perturb(g, 1e-3, 7)
    dev = (p.couplings - g.couplings)[~np.eye(10, dtype=bool)]
    assert dev.min() >= 0.02 - 1e-12 and dev.max() <= 0.04 + 1e-12
    assert perturb(g, 1e-3, 7) == p
    assert perturb(g, 1e-3, 8) != p
    with pytest.raises(DomainError):
        perturb(g, -1.0, 0)


def test_propagator_identity_and_two_mode(two_mode):
    assert np.array_equal(mode_propagator(two_mode, 0.0), np.eye(2))
    for t in (1.0, 7.3, 40.0):
        u = mode_propagator(two_mode, t)
        assert abs(abs(u[0, 0]) - abs(np.cos(ANGULAR_PER_MHZ * 30.0 * t))) < 1e-12


def test_propagator_matches_dense_expm(ten_mode):
    from scipy.linalg import expm
    g = CouplingGraph(ten_mode.couplings, detunings=np.linspace(-3, 3, 10))
    u = mode_propagator(g, 12.5)
    ref = expm(-1j * ANGULAR_PER_MHZ * g.matrix * 12.5)
    assert np.abs(u - ref).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32), st.floats(0, 200), st.floats(0, 200))
def test_propagator_unitary_and_semigroup(m, seed, t1, t2):
    g = random_graph(m, seed=seed)
    u1, u2 = mode_propagator(g, t1), mode_propagator(g, t2)
    assert np.abs(u1.conj().T @ u1 - np.eye(m)).max() < 1e-10
    assert np.abs(mode_propagator(g, t1 + t2) - u1 @ u2).max() < 1e-9


def test_negative_time_rejected(two_mode):
    with pytest.raises(DomainError):
        mode_propagator(two_mode, -1.0)


def test_validate():
    assert validate(random_graph(4, seed=0)) == []
    bad = np.zeros((3, 3))
    bad[0, 2] = bad[2, 0] = np.nan
    diags = validate(bad)
    assert any(d.severity == "error" and "(0, 2)" in d.message for d in diags)
    zero = validate(CouplingGraph(np.zeros((3, 3))))
    assert [d.severity for d in zero] == ["warning"] and "disconnected" in zero[0].message
    asym = np.array([[0.0, 1.0], [2.0, 0.0]])
    assert any(d.severity == "error" for d in validate(asym))


@pytest.mark.parametrize("matrix", [np.ones((2, 2)), np.array([[0.0, 1.0], [2.0, 0.0]]),
                                    np.array([[0.0, np.inf], [np.inf, 0.0]]), np.zeros((2, 3))])
def test_constructor_rejects_invalid(matrix):
    with pytest.raises(DomainError):
        CouplingGraph(matrix)


def test_graph_json_round_trip(tmp_path):
    g = CouplingGraph(random_graph(5, seed=3).couplings, detunings=[0, 1.5, 0, 0, -2.0])
    path = tmp_path / "g.json"
    save_graph(g, path)
    assert load_graph(path) == g
    data = json.loads(path.read_text())
    assert set(data) == {"modes", "coupling_range_mhz", "couplings", "detunings_mhz"}
    assert graph_from_dict(graph_to_dict(g)) == g


@pytest.mark.parametrize("patch", [
    {"extra": 1},
    {"couplings": [[1, 0, 5.0]]},
    {"couplings": [[0, 9, 5.0]]},
    {"couplings": [[0, 1, 5.0], [0, 1, 6.0]]},
])
def test_graph_json_rejects_malformed(patch):
    data = {"modes": 3, "couplings": [[0, 1, 1.0]], **patch}
    with pytest.raises(DomainError):
        graph_from_dict(data)
