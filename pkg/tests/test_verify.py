import json

import numpy as np
import pytest

from thmas.dynamics import closed_loop_matrix, max_gain
from thmas.engine import ScenarioConfig, ScheduleEntry, run_scenario
from thmas.graph import build_ring_subgraph, laplacian
from thmas.switching import build_family
from thmas.verify import (
    CycleProduct,
    LimitNotReached,
    cycle_products,
    invariance_check,
    is_primitive,
    is_rooted_ergodic,
    is_row_stochastic,
    rank_one_limit,
    strided_limit_gap,
    theorem1_certificate,
    wielandt_exponent,
)

P_EX = np.array([[0.6, 0.2, 0.2], [0.2, 0.8, 0.0], [0.0, 0.0, 1.0]])


def positive_power(P):
    """Oracle: plain floating-point matrix power at the Wielandt exponent."""
    return np.all(np.linalg.matrix_power(P, wielandt_exponent(len(P))) > 0)


def test_row_stochastic_examples():
    assert is_row_stochastic(np.eye(4))
    assert is_row_stochastic(P_EX)
    bad = np.array([[1.1, -0.1], [0.5, 0.5]])
    assert not is_row_stochastic(bad, 1e-9)
    assert not is_row_stochastic(np.array([[0.5, 0.4], [0.5, 0.5]]))


def test_is_primitive_basic():
    assert not is_primitive(np.eye(3))
    assert is_primitive(np.full((3, 3), 1 / 3))
    # a 3-cycle with one self-loop is primitive but needs several steps
    C = np.array([[0.5, 0.5, 0], [0, 0, 1], [1, 0, 0]])
    assert is_primitive(C) == positive_power(C) == True  # noqa: E712
    with pytest.raises(ValueError):
        is_primitive(np.array([[1.0, -0.1], [0.0, 1.0]]))


def test_single_ring_matrix_not_primitive():
    g = build_ring_subgraph({1, 2}, 4)
    P = closed_loop_matrix(laplacian(g), 1.0, 0.2)
    assert not is_primitive(P)
    assert not positive_power(P)
    assert not is_rooted_ergodic(P, 3)  # follower 3 never hears the leader


def test_full_cycle_product_is_rooted_not_primitive():
    # The leader row of every closed-loop matrix is the unit row, so no power
    # can be entrywise positive; the leader column is what becomes positive.
    cp = cycle_products(build_family(3, 2), 1.0, 0.2)[0]
    assert not positive_power(cp.matrix)
    assert not is_primitive(cp.matrix)
    assert is_rooted_ergodic(cp.matrix, 3)
    assert np.all(np.linalg.matrix_power(cp.matrix, wielandt_exponent(4))[:, 3] > 0)


def test_cycle_products_order():
    fam = build_family(3, 2)
    Ps = [closed_loop_matrix(laplacian(g), 1.0, 0.2) for g in fam.graphs]
    cps = cycle_products(fam, 1.0, 0.2)
    assert len(cps) == 3
    assert np.allclose(cps[0].matrix, Ps[2] @ Ps[1] @ Ps[0])
    assert np.allclose(cps[1].matrix, Ps[0] @ Ps[2] @ Ps[1])
    assert np.allclose(cps[2].matrix, Ps[1] @ Ps[0] @ Ps[2])
    for cp in cps:
        assert is_row_stochastic(cp.matrix, 1e-12)
        assert max(abs(np.linalg.eigvals(cp.matrix))) == pytest.approx(1.0)


def test_cycle_products_single_graph():
    fam = build_family(3, 3)
    cps = cycle_products(fam, 1.0, 0.2)
    assert len(cps) == 1
    assert np.array_equal(cps[0].matrix, closed_loop_matrix(laplacian(fam.graphs[0]), 1.0, 0.2))


@pytest.mark.parametrize("n,sigma", [(3, 2), (3, 3), (4, 1), (5, 3)])
def test_rank_one_limit_is_leader_row(n, sigma):
    fam = build_family(n, sigma)
    e_L = np.eye(n + 1)[-1]
    limits = [rank_one_limit(cp) for cp in cycle_products(fam, 1.0, 0.5 * max_gain(1.0, fam))]
    for lim in limits:
        assert np.max(np.abs(lim.limit_row - e_L)) < 1e-9
        assert lim.residual < 1e-9
        assert np.all(lim.limit_row >= 0) and lim.limit_row.sum() == pytest.approx(1.0)


def test_rank_one_limit_power_iteration_oracle():
    cp = cycle_products(build_family(3, 3), 1.0, 0.2)[0]
    Q = np.linalg.matrix_power(cp.matrix, 4000)
    assert np.allclose(rank_one_limit(cp).limit_row, Q[0], atol=1e-9)


def test_rank_one_limit_fails_on_reducible():
    with pytest.raises(LimitNotReached):
        rank_one_limit(CycleProduct(0, np.eye(3)), max_iters=5)


def _trace(sched, x0):
    return run_scenario(ScenarioConfig(N=3, w=1.0, k_fb=0.2, Ts=1.0, M=9,
                                       schedule=tuple(ScheduleEntry(*e) for e in sched), x0=x0))


def test_invariance_check():
    fixed = _trace([(2, 5.0)] * 4, (1.0, 2.0, 9.0, 5.0))
    assert invariance_check(fixed) == 0.0
    moving = _trace([(2, 5.0), (2, 6.0)], (1.0, 2.0, 9.0, 5.0))
    assert invariance_check(moving) > 0
    assert invariance_check(fixed, [1.0, 0.0, 0.0, 0.0]) > 0


def test_strided_subsequences_share_limit():
    trace = _trace([(2, 5.0)] * 80, (1.0, 2.0, 9.0, 5.0))
    assert strided_limit_gap(trace, 3) < 1e-9


def test_certificate_passes():
    rng = np.random.default_rng(7)
    x0 = list(rng.uniform(0, 10, 3)) + [5.0]
    cert = theorem1_certificate(3, 2, 1.0, 0.2, x0)
    assert cert.passed, cert.to_json()
    names = [c.name for c in cert.checks]
    assert names == ["gain_bound", "union_spanning_tree", "row_stochastic", "cycle_products_rooted",
                     "rank_one_limit_leader_row", "simulated_consensus", "leader_invariance",
                     "subsequence_agreement"]
    doc = json.loads(cert.to_json())
    assert doc["passed"] and all({"name", "passed", "residual"} <= set(c) for c in doc["checks"])


def test_certificate_gain_violation():
    cert = theorem1_certificate(3, 2, 1.0, 0.6, [1, 2, 3, 5])
    assert not cert.passed
    assert cert.checks[0].name == "gain_bound" and not cert.checks[0].passed


def test_certificate_single_graph():
    assert theorem1_certificate(3, 3, 1.0, 0.2, [0.0, 10.0, 3.0, 5.0]).passed
