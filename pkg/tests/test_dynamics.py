import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thmas.dynamics import (
    GainBoundError,
    GainConfig,
    closed_loop_matrix,
    consensus_input,
    max_gain,
    quantize_input,
    step_closed_loop,
    step_followers,
    step_leader,
)
from thmas.engine import mmc_weight
from thmas.graph import adjacency_matrix, laplacian, make_graph
from thmas.switching import build_family

A_EX = np.array([[0, 1, 1], [1, 0, 0], [0, 0, 0]], dtype=float)
L_EX = np.array([[2, -1, -1], [-1, 1, 0], [0, 0, 0]], dtype=float)


def test_consensus_input_examples():
    assert np.array_equal(consensus_input(np.full(3, 4.2), A_EX, 0.2), np.zeros(3))
    u = consensus_input(np.array([1.0, 0.0, 2.0]), A_EX, 0.2)
    assert u == pytest.approx([0.0, 0.2, 0.0], abs=1e-15)
    A = A_EX.copy()
    A[1] = 0
    assert consensus_input(np.array([1.0, 0.0, 2.0]), A, 0.2)[1] == 0


def test_step_followers_examples():
    x = np.array([5.0, 1.0, 9.0])
    assert np.array_equal(step_followers(x, [0, 0], [3.0, 3.0, 3.0], 2.0), x)
    assert step_followers(x, [1, 0], [0.5, 0, 0], 2.0)[0] == 6.0
    assert np.array_equal(step_followers(x, [1, 1], np.zeros(3), 2.0), x)
    assert step_followers(x, [1, 1], [1.0, 1.0, 1.0], 2.0)[-1] == 9.0


def test_step_leader():
    assert step_leader(7.0, 0, 3.2) == 7.0
    assert step_leader(7.0, 1, 3.2) == 3.2


def test_closed_loop_examples():
    P = closed_loop_matrix(L_EX, 1.0, 0.2)
    assert np.allclose(P, [[0.6, 0.2, 0.2], [0.2, 0.8, 0.0], [0.0, 0.0, 1.0]], atol=1e-15)
    assert np.array_equal(closed_loop_matrix(np.zeros((3, 3)), 1.0, 0.2), np.eye(3))
    assert np.all(P.sum(axis=1) == 1.0)


def test_closed_loop_rejects_bound():
    with pytest.raises(GainBoundError):
        closed_loop_matrix(L_EX, 1.0, 0.5)
    with pytest.raises(GainBoundError):
        closed_loop_matrix(L_EX, 1.0, 0.7)
    with pytest.raises(GainBoundError):
        closed_loop_matrix(L_EX, 1.0, 0.0)


def test_max_gain_examples():
    assert max_gain(200.0, build_family(4, 2)) == pytest.approx(0.0025)
    assert max_gain(1.0, build_family(4, 1)) == 1.0
    w = mmc_weight(4)
    assert w == pytest.approx(8.0)
    assert max_gain(w, build_family(4, 2)) == pytest.approx(0.0625)
    with pytest.raises(ValueError):
        max_gain(0.0, build_family(3, 2))


def test_gain_config():
    fams = [build_family(3, s) for s in (1, 2)]
    GainConfig(w=1.0, k_fb=0.4, Ts=1e-3, M=10).check(fams)
    with pytest.raises(GainBoundError):
        GainConfig(w=1.0, k_fb=0.5).check(fams)
    assert GainConfig(w=1.0, k_fb=0.1, Ts=0.5, M=4).major_period == 2.0
    with pytest.raises(ValueError):
        GainConfig(w=1.0, k_fb=0.1, M=0)


def test_quantize_input():
    assert quantize_input(0.5) == 1
    assert quantize_input(-0.3) == -1
    assert quantize_input(0.0) == 0


def test_step_closed_loop_examples():
    P = closed_loop_matrix(L_EX, 1.0, 0.2)
    x = np.array([3.0, -1.0, 2.5])
    assert np.array_equal(step_closed_loop(x, np.eye(3)), x)
    assert np.allclose(step_closed_loop(np.full(3, 1.7), P), 1.7, atol=1e-15)
    assert step_closed_loop(x, P)[-1] == 2.5


FAMILIES = [build_family(n, s) for n in range(1, 7) for s in range(1, n + 1)]


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f"N{f.n}s{f.sigma}")
def test_control_law_matches_closed_loop(fam):
    rng = np.random.default_rng(fam.n * 10 + fam.sigma)
    w = 1.0
    k_fb = 0.9 * max_gain(w, fam)
    for _ in range(100):
        g = fam.graphs[rng.integers(fam.p)]
        x = rng.uniform(-10, 10, fam.n + 1)
        q = np.zeros(fam.n)
        q[[f - 1 for f in g.active_followers]] = 1
        via_law = step_followers(x, q, consensus_input(x, adjacency_matrix(g), k_fb), w)
        via_matrix = step_closed_loop(x, closed_loop_matrix(laplacian(g), w, k_fb))
        assert np.max(np.abs(via_law - via_matrix)) <= 1e-12


@settings(max_examples=60)
@given(
    st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))),
    st.integers(0, 2**32 - 1),
    st.floats(0.05, 0.95),
)
def test_contraction_and_leader_invariance(ns, seed, frac):
    n, sigma = ns
    fam = build_family(n, sigma)
    rng = np.random.default_rng(seed)
    k_fb = frac * max_gain(1.0, fam)
    x = rng.uniform(-5, 5, n + 1)
    e_L = np.zeros(n + 1)
    e_L[-1] = 1.0
    for g in fam.graphs:
        P = closed_loop_matrix(laplacian(g), 1.0, k_fb)
        y = step_closed_loop(x, P)
        assert y[-1] == x[-1]
        assert e_L @ y == e_L @ x
        assert y.max() - y.min() <= x.max() - x.min() + 1e-12
        x = y


def test_gain_bound_sharpness():
    g = make_graph(4, {(1, 4), (2, 1), (1, 2)})
    L = laplacian(g)
    bound = 1.0 / (2 * 3.0)
    P = np.eye(4) - 3.0 * bound * L
    assert np.isclose(P.diagonal().min(), 0.0)
    with pytest.raises(GainBoundError):
        closed_loop_matrix(L, 3.0, bound)
