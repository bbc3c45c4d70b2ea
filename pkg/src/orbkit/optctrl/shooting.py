"""Single shooting with rho-continuation and multistart statistics."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..errors import (
    IntegrationFailed,
    JacobianSingular,
    MaxStepsExceeded,
    NewtonStalled,
    RhsNonFinite,
    StepUnderflow,
    SolverError,
)
from ..propagate import Trajectory
from .problem import TransferProblem, TransferSolution

_STATUS_ERRORS = {
    K.ST_NONFINITE: "right-hand side became non-finite",
    K.ST_UNDERFLOW: "step size underflow",
    K.ST_MAXSTEPS: "maximum step count exceeded",
}


@dataclass
class _Context:
    y0: np.ndarray
    target: np.ndarray
    tof: float
    thrust: float
    c: float
    kind: int
    rtol: float
    atol: float
    max_steps: int


def _context(p: TransferProblem) -> _Context:
    x0 = p.canonical_state(p.x0)
    y0 = np.zeros(14)
    y0[0:6] = x0
    y0[6] = p.engine.m0 / p.units.mass
    return _Context(
        y0=y0,
        target=p.canonical_state(p.xf_target),
        tof=p.tof,
        thrust=p.thrust_canonical,
        c=p.c_canonical,
        kind=K.KIND_MRP if p.element_set == "mrpmee" else K.KIND_CRP,
        rtol=p.solver_tols.rtol,
        atol=p.solver_tols.atol,
        max_steps=p.solver_tols.max_steps,
    )


def _run(ctx: _Context, z: np.ndarray, rho: float, record: bool):
    y0 = ctx.y0.copy()
    y0[7:13] = z[0:6]
    y0[13] = z[6]
    out = K.dp54_aug(y0, 0.0, ctx.tof, ctx.rtol, ctx.atol, 0.0, 1e-14, math.inf,
                     ctx.max_steps, 1.0, ctx.thrust, ctx.c, rho, ctx.kind, record)
    status, yf, tf, nacc, nrej, nfev, ts, ys = out
    if status != K.ST_OK:
        cause = {
            K.ST_NONFINITE: RhsNonFinite(tf),
            K.ST_UNDERFLOW: StepUnderflow(tf, 0.0),
            K.ST_MAXSTEPS: MaxStepsExceeded(tf, nacc + nrej),
        }[status]
        raise IntegrationFailed(z, cause)
    return yf, Trajectory(ts, ys, {"steps_accepted": nacc, "steps_rejected": nrej, "rhs_evals": nfev})


def _residual(ctx: _Context, yf: np.ndarray) -> np.ndarray:
    r = np.empty(7)
    r[0:6] = yf[0:6] - ctx.target
    r[6] = yf[13]
    return r


def _split_guess(lam0, lam_m0=None) -> np.ndarray:
    z = np.asarray(lam0, dtype=float).ravel()
    if lam_m0 is not None:
        z = np.concatenate([z[:6], [float(lam_m0)]])
    if z.size != 7 or not np.all(np.isfinite(z)):
        raise SolverError("costate guess must be 7 finite values (lam[6], lam_m)")
    return z


def shoot(p: TransferProblem, lam0, lam_m0: float, rho: float) -> np.ndarray:
    """Terminal residual ``(x(tf) - xf, lam_m(tf))`` in canonical units.

    The true-longitude entry is a raw (unwrapped) difference.
    """
    ctx = _context(p)
    z = _split_guess(lam0, lam_m0)
    yf, _ = _run(ctx, z, rho, False)
    return _residual(ctx, yf)


def propagate_costates(p: TransferProblem, lam0, lam_m0: float, rho: float) -> Trajectory:
    """Closed-loop augmented trajectory (canonical units) at every accepted step."""
    ctx = _context(p)
    return _run(ctx, _split_guess(lam0, lam_m0), rho, True)[1]


class _Newton:
    def __init__(self, ctx: _Context, tols):
        self.ctx = ctx
        self.tols = tols
        self.fevals = 0

    def f(self, z, rho):
        self.fevals += 1
        try:
            yf, _ = _run(self.ctx, z, rho, False)
        except IntegrationFailed:
            return None
        r = _residual(self.ctx, yf)
        return r if np.all(np.isfinite(r)) else None

    def jacobian(self, z, rho):
        h = self.tols.fd_step
        J = np.empty((7, 7))
        for j in range(7):
            dz = np.zeros(7)
            dz[j] = h
            fp = self.f(z + dz, rho)
            fm = self.f(z - dz, rho)
            if fp is None or fm is None:
                return None
            J[:, j] = (fp - fm) / (2.0 * h)
        return J

    def step(self, z, f, J, rho):
        """Newton step with Armijo backtracking; ``None`` when no decrease is found."""
        nf = np.linalg.norm(f)
        try:
            dz = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(dz)):
            return None
        s = 1.0
        for _ in range(self.tols.line_search_max):
            fn = self.f(z + s * dz, rho)
            if fn is not None and np.linalg.norm(fn) < (1.0 - 1e-4 * s) * nf:
                return z + s * dz, fn
            s *= self.tols.line_search_factor
        return None


def solve_tpbvp(p: TransferProblem, lam_guess, lam_m_guess: float | None = None) -> TransferSolution:
    """Drive the shooting residual below ``residual_tol`` for every rho in the schedule.

    Raises :class:`~orbkit.errors.NewtonStalled` (carrying the best partial
    solution) or :class:`~orbkit.errors.JacobianSingular`.
    """
    t_start = time.perf_counter()
    ctx = _context(p)
    tols = p.solver_tols
    nt = _Newton(ctx, tols)
    z = _split_guess(lam_guess, lam_m_guess)
    history = []
    iters_total = 0
    best = (math.inf, z.copy())
    f = None
    rho = p.rho_schedule[0]

    def partial(rho_now):
        # best iterate at the continuation level that failed
        return _solution(p, ctx, best[1], rho_now, history, iters_total, nt.fevals,
                         time.perf_counter() - t_start, converged=False, res=best[0])

    for rho in p.rho_schedule:
        f = nt.f(z, rho)
        if f is None:
            history.append({"rho": rho, "iterations": 0, "residual": math.inf, "converged": False})
            raise NewtonStalled(rho, best[0], partial(rho))
        it = 0
        best = (math.inf, z.copy())
        while True:
            res = float(np.max(np.abs(f)))
            if res < best[0]:
                best = (res, z.copy())
            if res < tols.residual_tol:
                break
            if it >= tols.max_newton_iters:
                history.append({"rho": rho, "iterations": it, "residual": res, "converged": False})
                raise NewtonStalled(rho, res, partial(rho))
            J = nt.jacobian(z, rho)
            if J is None:
                history.append({"rho": rho, "iterations": it, "residual": res, "converged": False})
                raise NewtonStalled(rho, res, partial(rho))
            if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e15:
                history.append({"rho": rho, "iterations": it, "residual": res, "converged": False})
                raise JacobianSingular(rho, partial(rho))
            nxt = nt.step(z, f, J, rho)
            it += 1
            iters_total += 1
            if nxt is None:
                history.append({"rho": rho, "iterations": it, "residual": res, "converged": False})
                raise NewtonStalled(rho, res, partial(rho))
            z, f = nxt
        history.append({"rho": rho, "iterations": it, "residual": float(np.max(np.abs(f))),
                        "converged": True, "fevals": nt.fevals})
    return _solution(p, ctx, z, rho, history, iters_total, nt.fevals,
                     time.perf_counter() - t_start, converged=True, res=float(np.max(np.abs(f))))


def _solution(p, ctx, z, rho, history, iters, fevals, wall, converged, res):
    try:
        yf, traj = _run(ctx, z, rho, True)
        final_mass = float(yf[6] * p.units.mass)
    except IntegrationFailed:
        traj, final_mass = None, float("nan")
    return TransferSolution(
        lam0=z[:6].copy(),
        lam_m0=float(z[6]),
        final_mass=final_mass,
        residual_norm=res,
        trajectory=traj,
        per_rho_history=list(history),
        iterations=iters,
        fevals=fevals,
        wall_time=wall,
        element_set=p.element_set,
        rho_final=rho,
        converged=converged,
    )


def random_guess(seed: int, trial_index: int) -> np.ndarray:
    """Trial costate guess, uniform in [-1, 1]; stream keyed by ``(seed, trial_index)``."""
    return np.random.default_rng([seed, trial_index]).uniform(-1.0, 1.0, 7)


@dataclass(frozen=True)
class TrialRecord:
    index: int
    guess: tuple
    converged: bool
    iterations: int
    fevals: int
    wall_time: float
    residual: float
    final_mass: float
    rho_reached: float


def _trial(p: TransferProblem, seed: int, k: int, use_reference: bool = False) -> TrialRecord:
    g = p.initial_guess() if use_reference and k == 0 else None
    if g is None:
        g = random_guess(seed, k)
    t0 = time.perf_counter()
    try:
        sol = solve_tpbvp(p, g)
        return TrialRecord(k, tuple(g), True, sol.iterations, sol.fevals,
                           time.perf_counter() - t0, sol.residual_norm, sol.final_mass, sol.rho_final)
    except (NewtonStalled, JacobianSingular) as exc:
        part = exc.partial
        return TrialRecord(k, tuple(g), False,
                           part.iterations if part else 0, part.fevals if part else 0,
                           time.perf_counter() - t0,
                           part.residual_norm if part else math.inf,
                           part.final_mass if part else math.nan, exc.rho)


def default_threads() -> int:
    env = os.environ.get("ORBKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def multistart_stats(p: TransferProblem, trials: int, seed: int, threads: int | None = None,
                     stop_on_success: bool = False, use_reference: bool = False) -> dict:
    """Solve from ``trials`` random costate guesses and aggregate.

    Means are taken over all trials.  With ``stop_on_success`` the run ends at
    the first converged trial (sequential mode only).  ``use_reference``
    replaces trial 0 by the problem's reference guess.
    """
    if trials < 1:
        raise SolverError("trials must be >= 1")
    threads = threads or default_threads()
    records: list[TrialRecord] = []
    if threads > 1 and not stop_on_success:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(lambda k: _trial(p, seed, k, use_reference), range(trials)))
    else:
        for k in range(trials):
            records.append(_trial(p, seed, k, use_reference))
            if stop_on_success and records[-1].converged:
                break
    records.sort(key=lambda r: r.index)
    n = len(records)
    ok = [r for r in records if r.converged]
    return {
        "element_set": p.element_set,
        "trials": n,
        "successes": len(ok),
        "success_rate": len(ok) / n,
        "mean_iters": sum(r.iterations for r in records) / n,
        "mean_fevals": sum(r.fevals for r in records) / n,
        "mean_time": sum(r.wall_time for r in records) / n,
        "records": records,
    }
