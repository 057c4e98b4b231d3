"""Multi-rate simulation of the leader/follower system and trace analysis.

One major tick ``m`` spans ``M`` minor ticks ``k = mM, ..., mM + M - 1``.  At
``k = mM`` the leader takes its new value, the active count ``sigma(m)`` is
applied (rebuilding the graph family and restarting the switching cycle if
it changed), and then the ordinary minor-tick update runs.  Each
:class:`TraceRecord` holds the graph and input used at tick ``k`` together
with the state *after* the update, ``x(k+1)``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field, replace
from math import comb
from typing import IO, Optional, Sequence

import numpy as np

from .dynamics import (
    consensus_input,
    gain_bound,
    quantize_vector,
    step_followers,
)
from .graph import adjacency_matrix
from .switching import GraphFamily, SwitchState, advance, build_family

log = logging.getLogger(__name__)

LEADER_VALUE_MAPS = {
    "identity": lambda u_L, n: u_L,
    "divide_by_n": lambda u_L, n: u_L / n,
}


class ConfigError(ValueError):
    """A scenario field violates its constraints; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class ScheduleEntry:
    sigma: int
    u_L: float


@dataclass(frozen=True)
class ScenarioConfig:
    N: int
    w: float
    k_fb: float
    Ts: float
    M: int
    schedule: tuple[ScheduleEntry, ...]
    x0: tuple[float, ...]
    quantized: bool = False
    leader_value_map: str = "identity"
    c: int = 3
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "schedule",
            tuple(e if isinstance(e, ScheduleEntry) else ScheduleEntry(int(e[0]), float(e[1])) for e in self.schedule),
        )
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))

    @property
    def sigmas(self) -> list[int]:
        return sorted({e.sigma for e in self.schedule})

    @property
    def total_ticks(self) -> int:
        return self.M * len(self.schedule)

    def leader_value(self, u_L: float) -> float:
        return LEADER_VALUE_MAPS[self.leader_value_map](u_L, self.N)

    def gain_limit(self) -> float:
        """Largest admissible k_fb (exclusive) over every family the schedule uses."""
        d_max = max(build_family(self.N, s).max_degree() for s in self.sigmas)
        return gain_bound(abs(self.w), d_max)

    def validate(self, check_gain: bool = True) -> "ScenarioConfig":
        if not isinstance(self.N, int) or self.N < 1:
            raise ConfigError("N", f"must be an integer >= 1, got {self.N!r}")
        if not isinstance(self.M, int) or self.M < 1:
            raise ConfigError("M", f"must be an integer >= 1, got {self.M!r}")
        if not self.Ts > 0:
            raise ConfigError("Ts", f"must be positive, got {self.Ts!r}")
        if not self.w > 0:
            raise ConfigError("w", f"must be positive, got {self.w!r}")
        if not self.schedule:
            raise ConfigError("schedule", "must contain at least one entry")
        for i, e in enumerate(self.schedule):
            if not 1 <= e.sigma <= self.N:
                raise ConfigError(f"schedule[{i}].sigma", f"{e.sigma} violates 1 <= sigma <= N (N={self.N})")
        if len(self.x0) != self.N + 1:
            raise ConfigError("x0", f"expected {self.N + 1} values (N followers + leader), got {len(self.x0)}")
        if self.leader_value_map not in LEADER_VALUE_MAPS:
            raise ConfigError("leader_value_map", f"unknown map {self.leader_value_map!r}; choose from {sorted(LEADER_VALUE_MAPS)}")
        if not isinstance(self.c, int) or self.c < 1:
            raise ConfigError("c", f"must be an integer >= 1, got {self.c!r}")
        if not self.k_fb > 0:
            raise ConfigError("k_fb", f"must be positive, got {self.k_fb!r}")
        # A sign quantizer is invariant to positive gain scaling, so the bound
        # only constrains continuous-input runs.
        if check_gain and not self.quantized:
            bound = self.gain_limit()
            if not self.k_fb < bound:
                raise ConfigError("k_fb", f"{self.k_fb!r} violates 0 < k_fb < {bound!r} (1/(d_max*w))")
        return self


@dataclass(frozen=True, eq=False)
class TraceRecord:
    k: int
    m: int
    sigma: int
    graph_index: int
    active_set: tuple[int, ...]
    x: np.ndarray
    u: np.ndarray
    consensus_error: float

    @property
    def leader_state(self) -> float:
        return float(self.x[-1])


@dataclass(frozen=True)
class LimitCycleReport:
    detected: bool
    amplitude: float
    period_ticks: Optional[int] = None


def _error(x: np.ndarray) -> float:
    return float(np.max(np.abs(x[:-1] - x[-1])))


def run_scenario(cfg: ScenarioConfig) -> list[TraceRecord]:
    if not cfg.schedule:
        raise ConfigError("schedule", "must contain at least one entry")
    cfg.validate()
    n = cfg.N
    x = np.array(cfg.x0, dtype=float)
    state = SwitchState()
    family: GraphFamily | None = None
    trace: list[TraceRecord] = []
    adjacency_cache: dict[int, np.ndarray] = {}

    for m, entry in enumerate(cfg.schedule):
        x[-1] = cfg.leader_value(entry.u_L)
        sigma_changed = state.sigma_prev != entry.sigma
        if sigma_changed:
            family = build_family(n, entry.sigma)
            adjacency_cache = {}
            log.debug("major tick %d: sigma -> %d (p=%d)", m, entry.sigma, family.p)
        for j in range(cfg.M):
            k = m * cfg.M + j
            state, g = advance(state, family, sigma_changed, j == 0)
            A = adjacency_cache.get(state.index)
            if A is None:
                A = adjacency_cache[state.index] = adjacency_matrix(g)
            u = consensus_input(x, A, cfg.k_fb)
            if cfg.quantized:
                u = quantize_vector(u)
            q = np.zeros(n)
            q[[f - 1 for f in g.active_followers]] = 1.0
            x = step_followers(x, q, u, cfg.w)
            u = u.copy()
            u[-1] = entry.u_L
            trace.append(TraceRecord(k, m, entry.sigma, state.index, g.active_followers, x.copy(), u, _error(x)))
    return trace


def states(trace: Sequence[TraceRecord]) -> np.ndarray:
    return np.array([r.x for r in trace])


def consensus_error_series(trace: Sequence[TraceRecord]) -> np.ndarray:
    if not trace:
        raise ValueError("trace is empty")
    return np.array([_error(r.x) for r in trace])


def ticks_to_tolerance(series: Sequence[float], tol: float) -> Optional[int]:
    """Number of ticks after which the series stays strictly below ``tol``; None if it never settles."""
    s = np.asarray(series, dtype=float)
    above = np.nonzero(~(s < tol))[0]
    if len(above) == 0:
        return 0
    last = int(above[-1])
    return None if last == len(s) - 1 else last + 1


def _autocorr_period(tail: np.ndarray, min_corr: float = 0.3) -> Optional[int]:
    d = tail - tail.mean()
    denom = float(d @ d)
    if denom == 0.0 or len(d) < 4:
        return None
    n = len(d)
    ac = np.array([float(d[: n - lag] @ d[lag:]) / denom for lag in range(n // 2 + 1)])
    for lag in range(1, len(ac) - 1):
        if ac[lag] >= ac[lag - 1] and ac[lag] >= ac[lag + 1] and ac[lag] > min_corr:
            return lag
    return None


def detect_limit_cycle(series: Sequence[float], window: int, tol: float = 1e-6) -> LimitCycleReport:
    """Classify the trailing ``window`` samples as a bounded, non-decaying oscillation.

    The tail counts as converged if it stays below ``tol`` and as contracting
    or diverging if the peak of its second half differs from the first half's
    by more than a factor of two.
    """
    s = np.asarray(series, dtype=float)
    if not isinstance(window, (int, np.integer)) or window < 2 or window > len(s):
        raise ValueError(f"window must be an integer in [2, {len(s)}], got {window!r}")
    tail = s[-window:]
    if not np.all(np.isfinite(tail)):
        return LimitCycleReport(False, float("inf"))
    amplitude = float(tail.max() - tail.min()) / 2.0
    if tail.max() < tol:
        return LimitCycleReport(False, amplitude)
    half = window // 2
    first, second = float(tail[:half].max()), float(tail[half:].max())
    steady = 0.5 * first <= second <= 2.0 * first + tol
    detected = steady and amplitude > tol
    return LimitCycleReport(detected, amplitude, _autocorr_period(tail) if detected else None)


def check_practical_consensus_rate(cfg: ScenarioConfig, c: Optional[int] = None) -> bool:
    """True if every major period is long enough to cycle through its family ``c`` times."""
    c = cfg.c if c is None else c
    return all(cfg.M >= c * comb(cfg.N, s) for s in cfg.sigmas)


@dataclass
class Segment:
    """A maximal run of consecutive major ticks sharing one active count."""

    sigma: int
    start: int
    stop: int
    leader_value: float
    final_error: float
    ticks_to_tolerance: Optional[int]
    limit_cycle: Optional[LimitCycleReport] = None


def segments(trace: Sequence[TraceRecord], tol: float = 1e-6, window: Optional[int] = None) -> list[Segment]:
    series = consensus_error_series(trace)
    out: list[Segment] = []
    start = 0
    for i in range(1, len(trace) + 1):
        if i == len(trace) or trace[i].sigma != trace[start].sigma:
            seg = series[start:i]
            lc = None
            if window is not None:
                lc = detect_limit_cycle(seg, min(window, len(seg)), tol)
            out.append(Segment(trace[start].sigma, start, i, trace[start].leader_state,
                               float(seg[-1]), ticks_to_tolerance(seg, tol), lc))
            start = i
    return out


def write_trace_csv(trace: Sequence[TraceRecord], fh: IO[str]) -> None:
    if not trace:
        raise ValueError("trace is empty")
    n1 = len(trace[0].x)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(
        ["k", "m", "graph_index", "active_set"]
        + [f"x_{i}" for i in range(1, n1 + 1)]
        + [f"u_{i}" for i in range(1, n1 + 1)]
        + ["consensus_error"]
    )
    for r in trace:
        writer.writerow(
            [r.k, r.m, r.graph_index, "|".join(map(str, r.active_set))]
            + [repr(float(v)) for v in r.x]
            + [repr(float(v)) for v in r.u]
            + [repr(r.consensus_error)]
        )


def read_trace_csv(fh: IO[str]) -> list[dict]:
    """Parse a trace CSV back into plain row dicts (numbers converted)."""
    rows = []
    for row in csv.DictReader(fh):
        parsed = {}
        for key, val in row.items():
            if key == "active_set":
                parsed[key] = tuple(int(v) for v in val.split("|")) if val else ()
            elif key in ("k", "m", "graph_index"):
                parsed[key] = int(val)
            else:
                parsed[key] = float(val)
        rows.append(parsed)
    return rows


# --- built-in benchmarks -------------------------------------------------

MMC_CAPACITANCE = 0.4e-3  # F
MMC_ARM_CURRENT = 80.0  # A
MMC_TS = 1e-5  # s


def mmc_weight(n: int, arm_current: float = MMC_ARM_CURRENT, Ts: float = MMC_TS,
               capacitance: float = MMC_CAPACITANCE) -> float:
    return arm_current * n * Ts / capacitance


def _mmc() -> ScenarioConfig:
    n = 4
    v_total = 2000.0
    return ScenarioConfig(
        name="mmc",
        N=n,
        w=mmc_weight(n),
        k_fb=0.2,
        Ts=MMC_TS,
        M=370,
        schedule=tuple(ScheduleEntry(s, v_total) for s in (2, 2, 1, 1)),
        x0=(470.3, 515.9, 489.4, 531.7, v_total / n),
        quantized=True,
        leader_value_map="divide_by_n",
        params={"C": MMC_CAPACITANCE, "i_arm": MMC_ARM_CURRENT, "v_total_ref": v_total},
    )


def _pump() -> ScenarioConfig:
    return ScenarioConfig(
        name="pump",
        N=4,
        w=0.2e3,
        k_fb=0.002,
        Ts=0.01,
        M=400,
        schedule=(ScheduleEntry(4, 0.5), ScheduleEntry(3, 0.8), ScheduleEntry(2, 0.6)),
        x0=(0.20, 0.35, 0.10, 0.30, 0.5),
        quantized=False,
        params={},
    )


_BUILTINS = {"mmc": _mmc, "pump": _pump}


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


def builtin_scenario(name: str) -> ScenarioConfig:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown builtin scenario {name!r}; choose from {builtin_names()}") from None


def with_fixed_leader(cfg: ScenarioConfig, periods: int) -> ScenarioConfig:
    """Repeat the first schedule entry so the leader never changes value."""
    return replace(cfg, schedule=(cfg.schedule[0],) * periods)


@dataclass
class BenchmarkReport:
    name: str
    quantized: bool
    w: float
    tol: float
    practical_rate_ok: bool
    segments: list[Segment]
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_benchmark(cfg: ScenarioConfig, trace: Optional[Sequence[TraceRecord]] = None,
                       tol: float = 1e-4, window: int = 200) -> BenchmarkReport:
    """Summarise a run per constant-sigma segment.

    Continuous runs pass when every segment ends within ``tol`` of the
    leader.  Quantized runs pass when every segment tail is a detected limit
    cycle whose amplitude, and whose peak error, stay within ``|w|``.
    """
    if trace is None:
        trace = run_scenario(cfg)
    if cfg.quantized:
        segs = segments(trace, tol=1e-6, window=window)
        series = consensus_error_series(trace)
        ok = True
        for s in segs:
            tail = series[max(s.start, s.stop - window):s.stop]
            ok &= bool(s.limit_cycle.detected and s.limit_cycle.amplitude <= abs(cfg.w)
                       and tail.max() <= abs(cfg.w))
    else:
        segs = segments(trace, tol=tol)
        ok = all(s.final_error < tol for s in segs)
    return BenchmarkReport(cfg.name, cfg.quantized, cfg.w, tol, check_practical_consensus_rate(cfg), segs, ok)
