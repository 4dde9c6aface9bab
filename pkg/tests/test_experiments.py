import dataclasses

import numpy as np
import pytest

from bosonwalk.errors import DomainError
from bosonwalk.experiments import (ExperimentConfig, arkhipov_check, arkhipov_pair,
                                   decoherence_scan, derive_member_seed, ensemble_overlap,
                                   evolution_time, perturbation_ensemble, reference_graph,
                                   richness_time)
from bosonwalk.network import ANGULAR_PER_MHZ, CouplingGraph, random_graph, save_graph

MASK = 2**64 - 1


def splitmix64_stream(state, count):
    """Textbook sequential SplitMix64 generator."""
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


def test_member_seed_matches_sequential_generator():
    for seed in (0, 1, 2**63 + 5):
        assert [derive_member_seed(seed, i) for i in range(20)] == splitmix64_stream(seed, 20)
    # published reference output for state 1234567
    assert derive_member_seed(1234567, 0) == 6457827717110365317


def test_member_seeds_do_not_collide():
    seeds = {derive_member_seed(1, i) for i in range(1_000_000)}
    assert len(seeds) == 1_000_000


def test_config_defaults_and_validation():
    cfg = ExperimentConfig()
    assert (cfg.modes, cfg.n_bosons, cfg.coupling_range_mhz) == (10, 3, (20.0, 40.0))
    assert (cfg.t1_us, cfg.tphi_us, cfg.tf_ns, cfg.ensemble_size) == (50.0, 50.0, 25.0, 1000)
    for bad in ({"n_bosons": 0}, {"modes": 1}, {"metric": "fidelity"}, {"input_kind": "x"},
                {"strength": -1.0}, {"vary": "M"}, {"overlap_density": "kde"}):
        with pytest.raises(DomainError):
            ExperimentConfig(**bad)


def test_reference_graph_from_file(tmp_path):
    g = random_graph(4, seed=11)
    path = tmp_path / "g.json"
    save_graph(g, path)
    assert reference_graph(ExperimentConfig(modes=4, graph_file=str(path))) == g
    with pytest.raises(DomainError):
        reference_graph(ExperimentConfig(modes=5, graph_file=str(path)))


def test_richness_degenerate_and_default():
    g2 = CouplingGraph(np.array([[0.0, 30.0], [30.0, 0.0]]))
    assert richness_time(g2).t_rich == 0.0
    res = richness_time(random_graph(10, seed=1))
    assert res.found and 0 < res.t_rich < 100
    assert evolution_time(random_graph(10, seed=1)) == 2 * res.t_rich


def test_richness_never_reached_on_disconnected_graph():
    res = richness_time(CouplingGraph(np.zeros((4, 4))), t_max=5.0)
    assert not res.found and res.min_variance == pytest.approx(3 / 16)


def test_decoherence_scan_without_channels_is_exact():
    cfg = ExperimentConfig(n_bosons=2, t1_us=None, tphi_us=None)
    rows = decoherence_scan(cfg, "Tf", [0.0, 10.0, 25.0])
    for r in rows:
        assert r.delta < 1e-7 and r.trace < 1e-7
        assert r.trace_error < 1e-7 and r.norm_error < 1e-9


def test_decoherence_scan_values_are_echoed():
    cfg = ExperimentConfig(n_bosons=1)
    rows = decoherence_scan(cfg, "T1", [20.0, None])
    assert [r.value for r in rows] == [20.0, None]
    assert rows[0].delta > rows[1].delta > 0


def test_zero_strength_ensembles_are_zero():
    for kind in ("fock", "coherent"):
        for metric in ("delta", "trace"):
            cfg = ExperimentConfig(ensemble_size=5, strength=0.0)
            res = perturbation_ensemble(cfg, kind, metric)
            assert np.all(res.values == 0)


def test_ensemble_is_thread_independent():
    cfg = ExperimentConfig(ensemble_size=24, seed=9)
    a = perturbation_ensemble(cfg, "fock", "delta", threads=1)
    b = perturbation_ensemble(cfg, "fock", "delta", threads=4)
    assert [r.value for r in a.records] == [r.value for r in b.records]
    assert [r.seed for r in a.records] == [derive_member_seed(9, i) for i in range(24)]


def test_coherent_median_below_fock_median():
    cfg = ExperimentConfig(ensemble_size=200)
    g = reference_graph(cfg)
    t = evolution_time(g)
    fock = perturbation_ensemble(cfg, "fock", "delta", t_ns=t, graph=g)
    coh = perturbation_ensemble(cfg, "coherent", "delta", t_ns=t, graph=g)
    assert coh.summary["median"] < fock.summary["median"]
    assert fock.fit["family"] == "lognormal"


def test_arkhipov_zero_perturbation_and_global_detuning():
    g = random_graph(10, seed=1)
    assert arkhipov_pair(g, g, 3, 25.0) == (0.0, 0.0)
    delta, t = 0.5, 25.0
    shifted = dataclasses.replace(g, detunings=np.full(10, delta))
    lhs, rhs = arkhipov_pair(g, shifted, 3, t)
    assert lhs < 1e-9
    assert rhs == pytest.approx(3 * abs(np.exp(-1j * ANGULAR_PER_MHZ * delta * t) - 1), rel=1e-9)


def test_arkhipov_small_run():
    cfg = ExperimentConfig(members_per_strength=10)
    res = arkhipov_check(cfg)
    assert len(res.rows) == 40 and res.violation_count == 0
    by = {(r.strength, r.member): r.seed for r in res.rows}
    assert by[(1e-4, 3)] == by[(1e-1, 3)]


def test_ensemble_overlap_identical_samples():
    x = np.random.default_rng(0).lognormal(size=100)
    for density in ("histogram", "lognormal", "normal"):
        assert ensemble_overlap(x, x, density=density) == pytest.approx(1)


def test_zero_time_scan_is_zero():
    (row,) = decoherence_scan(ExperimentConfig(n_bosons=2), "Tf", [0.0])
    assert row.delta == 0 and row.trace == 0


def test_arkhipov_values_on_unit_circle_scale():
    cfg = ExperimentConfig(members_per_strength=8, strengths=(0.5, 2.0))
    res = arkhipov_check(cfg, t=80.0)
    assert all(0 <= r.lhs <= 2 and 0 <= r.rhs <= 2 * cfg.n_bosons + 1e-12 for r in res.rows)
    assert res.violation_count == 0
