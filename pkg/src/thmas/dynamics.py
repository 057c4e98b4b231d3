"""Single-integrator follower/leader updates and the consensus control law."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .switching import GraphFamily


class GainBoundError(ValueError):
    """The feedback gain is outside ``0 < k_fb < 1 / (d_max * w)``."""

    def __init__(self, k_fb: float, bound: float):
        self.k_fb = k_fb
        self.bound = bound
        super().__init__(f"k_fb={k_fb!r} must satisfy 0 < k_fb < {bound!r}")


@dataclass(frozen=True)
class GainConfig:
    w: float
    k_fb: float
    Ts: float = 1.0
    M: int = 1

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.Ts <= 0:
            raise ValueError(f"Ts must be positive, got {self.Ts}")

    @property
    def major_period(self) -> float:
        return self.M * self.Ts

    def check(self, families: Iterable[GraphFamily]) -> None:
        bound = min(max_gain(self.w, fam) for fam in families)
        if not 0 < self.k_fb < bound:
            raise GainBoundError(self.k_fb, bound)


def gain_bound(w: float, d_max: int) -> float:
    if w <= 0:
        raise ValueError(f"w must be positive, got {w}")
    if d_max <= 0:
        return float("inf")
    return 1.0 / (d_max * w)


def max_gain(w: float, family: GraphFamily) -> float:
    """Supremum of admissible feedback gains for every graph in ``family``."""
    return gain_bound(w, family.max_degree())


def consensus_input(x: np.ndarray, A: np.ndarray, k_fb: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    # sum_j a_ij (x_i - x_j) = deg_i x_i - (A x)_i
    return -k_fb * (A.sum(axis=1) * x - A @ x)


def step_followers(x: np.ndarray, q: np.ndarray, u: np.ndarray, w: float) -> np.ndarray:
    """Advance followers by ``w * q_i * u_i``; the trailing leader entry is copied."""
    x = np.array(x, dtype=float)
    n = len(q)
    x[:n] += w * np.asarray(q, dtype=float) * np.asarray(u, dtype=float)[:n]
    return x


def step_leader(x_L: float, q_L: int, u_L: float) -> float:
    return u_L if q_L else x_L


def closed_loop_matrix(L: np.ndarray, w: float, k_fb: float) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    d_max = int(round(L.diagonal().max())) if L.size else 0
    if w * k_fb <= 0 or (d_max > 0 and not k_fb < gain_bound(abs(w), d_max)):
        raise GainBoundError(k_fb, gain_bound(abs(w), d_max) if w > 0 else float("nan"))
    return np.eye(L.shape[0]) - w * k_fb * L


def step_closed_loop(x: np.ndarray, P: np.ndarray) -> np.ndarray:
    return P @ np.asarray(x, dtype=float)


def quantize_input(u: float) -> int:
    if u > 0:
        return 1
    if u < 0:
        return -1
    return 0


def quantize_vector(u: np.ndarray) -> np.ndarray:
    return np.sign(np.asarray(u, dtype=float))
