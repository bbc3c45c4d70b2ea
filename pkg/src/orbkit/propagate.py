"""Adaptive Dormand-Prince 5(4) integration for arbitrary right-hand sides."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, MaxStepsExceeded, RhsNonFinite, StepUnderflow

# Dormand & Prince (1980) tableau, FSAL form.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
ALPHA = 0.2
BETA = 0.04
FAC_MIN = 0.2
FAC_MAX = 5.0


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    h_init: float | None = None
    h_min: float = 1e-14
    h_max: float = math.inf
    max_steps: int = 200_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InputError("tolerances must be positive")
        if self.h_init is not None and not (self.h_min <= self.h_init <= self.h_max):
            raise InputError("need h_min <= h_init <= h_max")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _initial_step(rhs, t0, y0, f0, cfg, span):
    sc = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = math.sqrt(np.mean((y0 / sc) ** 2))
    d1 = math.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = np.asarray(rhs(t0 + h0, y1), dtype=float)
    d2 = math.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100 * h0, h1, span)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t0: float,
    tf: float,
    cfg: IntegratorConfig | None = None,
    t_eval: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``tf``.

    The trajectory holds every accepted step, or only the points of
    ``t_eval`` (steps are shortened to land on them exactly) when given.
    The last step is clamped so ``tf`` is hit exactly.
    """
    cfg = cfg or IntegratorConfig()
    if not tf > t0:
        raise InputError("integrate needs tf > t0")
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise InputError("initial state is not finite")
    grid = None
    if t_eval is not None:
        grid = np.asarray(t_eval, dtype=float)
        if np.any(np.diff(grid) <= 0) or grid[0] < t0 or grid[-1] > tf:
            raise InputError("t_eval must be strictly increasing inside [t0, tf]")
    n = y.size
    k = np.empty((7, n))
    t = float(t0)
    k[0] = rhs(t, y)
    nfev = 1
    if not np.all(np.isfinite(k[0])):
        raise RhsNonFinite(t)
    h = cfg.h_init if cfg.h_init is not None else _initial_step(rhs, t, y, k[0], cfg, tf - t0)
    if cfg.h_init is None:
        nfev += 1
    h = min(h, cfg.h_max)
    times, states = [], []
    gi = 0
    if grid is None or (grid.size and grid[0] == t0):
        times.append(t)
        states.append(y.copy())
        gi = 1 if grid is not None else 0
    err_old = 1e-4
    acc = rej = 0
    while t < tf:
        if acc + rej >= cfg.max_steps:
            raise MaxStepsExceeded(t, acc + rej)
        if h < cfg.h_min:
            raise StepUnderflow(t, h)
        stop = tf if grid is None or gi >= grid.size else grid[gi]
        hit = t + h >= stop
        if hit:
            h = stop - t
        for s in range(1, 7):
            ys = y + h * (_A[s] @ k[:s])
            k[s] = rhs(t + _C[s] * h, ys)
        nfev += 6
        y_new = ys
        err_vec = h * (_E @ k)
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(k[6]))):
            rej += 1
            h *= FAC_MIN
            if h < cfg.h_min:
                raise RhsNonFinite(t)
            continue
        sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(np.mean((err_vec / sc) ** 2))
        if err <= 1.0:
            t = stop if hit else t + h
            y = y_new
            k[0] = k[6]
            acc += 1
            if grid is None:
                times.append(t)
                states.append(y.copy())
            elif hit and gi < grid.size:
                times.append(t)
                states.append(y.copy())
                gi += 1
            fac = FAC_MAX if err == 0.0 else SAFETY * err ** -ALPHA * err_old ** BETA
            fac = min(FAC_MAX, max(FAC_MIN, fac))
            err_old = max(err, 1e-4)
            h = min(h * fac, cfg.h_max)
        else:
            rej += 1
            h *= max(FAC_MIN, SAFETY * err ** -ALPHA)
    return Trajectory(
        np.array(times),
        np.array(states),
        {"steps_accepted": acc, "steps_rejected": rej, "rhs_evals": nfev},
    )
