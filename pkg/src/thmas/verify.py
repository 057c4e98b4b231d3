"""Numerical checks of the convergence argument for the switched closed loop.

The argument runs through products of the per-graph closed-loop matrices
over one full switching period.  Each such product is row-stochastic and its
powers collapse to a rank-one matrix ``1 c^T``; with the leader as an
absorbing root, ``c`` must be the leader's unit vector, so every follower
ends at the leader's value.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import GainBoundError, closed_loop_matrix, max_gain
from .engine import ScenarioConfig, ScheduleEntry, TraceRecord, consensus_error_series, run_scenario, states
from .graph import has_spanning_tree, laplacian, union_graphs
from .switching import GraphFamily, build_family


class LimitNotReached(RuntimeError):
    pass


@dataclass
class CycleProduct:
    shift: int
    matrix: np.ndarray


@dataclass
class SubsequenceLimit:
    shift: int
    limit_row: np.ndarray
    residual: float
    iterations: int = 0


def wielandt_exponent(n: int) -> int:
    return n * n - 2 * n + 2


def is_row_stochastic(P: np.ndarray, tol: float = 1e-12) -> bool:
    P = np.asarray(P, dtype=float)
    return bool(np.all(P >= -tol) and np.all(np.abs(P.sum(axis=1) - 1.0) <= tol))


def _boolean_power(P: np.ndarray, e: int) -> np.ndarray:
    """Support pattern of ``P**e`` by repeated squaring on 0/1 matrices."""
    B = (P > 0).astype(np.int64)
    R = np.eye(len(P), dtype=np.int64)
    while e:
        if e & 1:
            R = ((R @ B) > 0).astype(np.int64)
        B = ((B @ B) > 0).astype(np.int64)
        e >>= 1
    return R.astype(bool)


def is_primitive(P: np.ndarray) -> bool:
    """Entrywise positivity of ``P**(n^2 - 2n + 2)``."""
    P = np.asarray(P, dtype=float)
    if np.any(P < 0):
        raise ValueError("is_primitive requires a nonnegative matrix")
    return bool(np.all(_boolean_power(P, wielandt_exponent(len(P)))))


def is_rooted_ergodic(P: np.ndarray, root: int) -> bool:
    """True if the Wielandt power of ``P`` has a strictly positive ``root`` column.

    ``root`` is a 0-based column index.  For a stochastic matrix whose root row
    is the unit row this is exactly the condition for ``P**n -> 1 e_root^T``.
    """
    P = np.asarray(P, dtype=float)
    if np.any(P < 0):
        raise ValueError("is_rooted_ergodic requires a nonnegative matrix")
    return bool(np.all(_boolean_power(P, wielandt_exponent(len(P)))[:, root]))


def family_matrices(family: GraphFamily, w: float, k_fb: float) -> list[np.ndarray]:
    return [closed_loop_matrix(laplacian(g), w, k_fb) for g in family.graphs]


def cycle_products(family: GraphFamily, w: float, k_fb: float) -> list[CycleProduct]:
    """One full-period product per starting position.

    Shift ``i`` applies ``P_i`` first, then ``P_{i+1}``, ... wrapping around,
    i.e. ``P_{i-1} ... P_{i+1} P_i``.
    """
    Ps = family_matrices(family, w, k_fb)
    p = len(Ps)
    out = []
    for i in range(p):
        prod = np.eye(len(Ps[0]))
        for j in range(p):
            prod = Ps[(i + j) % p] @ prod
        out.append(CycleProduct(i, prod))
    return out


def rank_one_limit(cp: CycleProduct, tol: float = 1e-9, max_iters: int = 64) -> SubsequenceLimit:
    Q = cp.matrix.copy()
    for it in range(1, max_iters + 1):
        Q2 = Q @ Q
        step = float(np.max(np.abs(Q2 - Q)))
        Q = Q2
        spread = float(np.max(Q.max(axis=0) - Q.min(axis=0)))
        if step < tol and spread < tol:
            return SubsequenceLimit(cp.shift, Q.mean(axis=0), spread, it)
    raise LimitNotReached(f"shift {cp.shift}: powers did not settle within {max_iters} squarings")


def invariance_check(trace: Sequence[TraceRecord], w_vec: Optional[Sequence[float]] = None) -> float:
    """Largest drift of ``w_vec . x(k)`` from its first value over the trace.

    Defaults to the leader unit vector.
    """
    X = states(trace)
    if w_vec is None:
        w_vec = np.zeros(X.shape[1])
        w_vec[-1] = 1.0
    proj = X @ np.asarray(w_vec, dtype=float)
    return float(np.max(np.abs(proj - proj[0])))


def strided_limit_gap(trace: Sequence[TraceRecord], p: int, limits: Optional[Sequence[SubsequenceLimit]] = None,
                      x0: Optional[Sequence[float]] = None) -> float:
    """Largest gap between the limits of the stride-``p`` subsequences and the full sequence.

    The full-sequence limit is the last state of ``trace``.  A subsequence
    limit is its last sample, or ``1 c_i^T x(i)`` when the rank-one limits of
    the shifted cycle products are supplied (``x0`` is then required so that
    ``x(0)`` is available).
    """
    X = states(trace)
    full = X[-1]
    if limits is not None:
        if x0 is None:
            raise ValueError("x0 is required together with limits")
        seq = np.vstack([np.asarray(x0, dtype=float), X])
        preds = [np.full(len(full), float(lim.limit_row @ seq[lim.shift])) for lim in limits]
    else:
        preds = [X[i::p][-1] for i in range(min(p, len(X)))]
    return max(float(np.max(np.abs(pred - full))) for pred in preds)


@dataclass
class Check:
    name: str
    passed: bool
    residual: Optional[float] = None
    detail: str = ""


@dataclass
class Certificate:
    N: int
    sigma: int
    w: float
    k_fb: float
    tol: float
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _finite(v: float) -> Optional[float]:
    return v if np.isfinite(v) else None


def theorem1_certificate(
    N: int,
    sigma: int,
    w: float,
    k_fb: float,
    x0: Sequence[float],
    tol: float = 1e-6,
    M: Optional[int] = None,
    c: int = 3,
    limit_tol: float = 1e-9,
) -> Certificate:
    """Run every consensus check for a fixed leader at ``x0[-1]``.

    The simulated run uses ``10 * M * p`` ticks.  ``M`` defaults to
    ``max(c * p, 100)``: every major period sweeps the family at least ``c``
    times, and single-graph families still get enough ticks to settle.
    """
    cert = Certificate(N, sigma, w, k_fb, tol)
    try:
        family = build_family(N, sigma)
    except ValueError as exc:
        cert.checks.append(Check("family", False, detail=str(exc)))
        return cert
    p = family.p
    leader = N  # 0-based
    e_L = np.zeros(N + 1)
    e_L[leader] = 1.0

    bound = max_gain(w, family) if w > 0 else float("nan")
    gain_ok = w > 0 and 0 < k_fb < bound
    cert.checks.append(Check("gain_bound", gain_ok, _finite(bound), f"require 0 < k_fb < {bound!r}"))

    union = union_graphs(family.graphs)
    cert.checks.append(Check(
        "union_spanning_tree",
        has_spanning_tree(union, N + 1) and len(union.active_followers) == N,
        detail="union of the family reaches every follower from the leader",
    ))
    if not gain_ok:
        return cert

    try:
        Ps = family_matrices(family, w, k_fb)
    except GainBoundError as exc:
        cert.checks.append(Check("row_stochastic", False, detail=str(exc)))
        return cert
    row_err = max(float(np.max(np.abs(P.sum(axis=1) - 1.0))) for P in Ps)
    cert.checks.append(Check(
        "row_stochastic",
        all(is_row_stochastic(P, 1e-12) and np.all(np.diag(P) > 0) for P in Ps),
        row_err,
    ))

    cps = cycle_products(family, w, k_fb)
    cert.checks.append(Check(
        "cycle_products_rooted",
        all(is_rooted_ergodic(cp.matrix, leader) for cp in cps),
        detail="Wielandt power of every shifted product has a positive leader column",
    ))

    limits = None
    try:
        limits = [rank_one_limit(cp, limit_tol) for cp in cps]
        dev = max(float(np.max(np.abs(lim.limit_row - e_L))) for lim in limits)
        cert.checks.append(Check("rank_one_limit_leader_row", dev < limit_tol, dev))
    except LimitNotReached as exc:
        cert.checks.append(Check("rank_one_limit_leader_row", False, detail=str(exc)))

    M = max(c * p, 100) if M is None else M
    x0 = tuple(float(v) for v in x0)

    def simulate(periods: int) -> list[TraceRecord]:
        cfg = ScenarioConfig(N=N, w=w, k_fb=k_fb, Ts=1.0, M=M,
                             schedule=(ScheduleEntry(sigma, x0[-1]),) * periods, x0=x0)
        return run_scenario(cfg)

    trace = simulate(10 * p)
    err = float(consensus_error_series(trace)[-1])
    cert.checks.append(Check("simulated_consensus", err < tol, err, f"{len(trace)} ticks to leader value {x0[-1]}"))
    drift = invariance_check(trace)
    cert.checks.append(Check("leader_invariance", drift == 0.0, drift))

    # The full-sequence limit needs a run that has settled well below limit_tol.
    periods = 10 * p
    while float(consensus_error_series(trace)[-1]) > limit_tol * 1e-3 and periods < 640 * p:
        periods *= 2
        trace = simulate(periods)
    if limits is not None:
        gap = strided_limit_gap(trace, p, limits, x0)
        cert.checks.append(Check("subsequence_agreement", gap < limit_tol, gap))
    return cert
