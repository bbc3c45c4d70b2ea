"""Transfer-problem data: engine, canonical units, boundary states and JSON I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..elements import (
    CoeSet,
    MrpMeeSet,
    coe_to_mrpmee,
    convert,
    costates_mrp_to_crp,
    from_dict,
    mrpmee_to_mee,
    set_name,
)
from ..errors import InputError

MU_SUN = 1.32712440018e11
AU_KM = 1.495978707e8
G0 = 9.80665e-3
DAY_S = 86400.0

DEFAULT_RHO_SCHEDULE = (1.0, 0.5, 0.25, 0.1, 0.05, 0.01, 5e-3, 1e-3, 5e-4, 1e-4)


@dataclass(frozen=True)
class Engine:
    """Constant-thrust engine; thrust in kN, exhaust speed ``c = isp * g0`` in km/s."""

    thrust: float
    isp: float
    m0: float
    g0: float = G0

    def __post_init__(self):
        if min(self.thrust, self.isp, self.m0, self.g0) <= 0:
            raise InputError("engine parameters must be positive")

    @property
    def c(self) -> float:
        return self.isp * self.g0


@dataclass(frozen=True)
class CanonicalUnits:
    """Distance, time and mass scales with ``mu = 1`` in canonical units."""

    du: float
    mu_phys: float
    mass: float = 1.0

    @property
    def tu(self) -> float:
        return math.sqrt(self.du ** 3 / self.mu_phys)

    @property
    def vu(self) -> float:
        return self.du / self.tu

    @property
    def au(self) -> float:
        """Acceleration unit, km/s^2."""
        return self.du / self.tu ** 2

    @property
    def mu_canonical(self) -> float:
        return 1.0


@dataclass(frozen=True)
class SolverTols:
    residual_tol: float = 1e-9
    fd_step: float = 1e-7
    max_newton_iters: int = 200
    rtol: float = 1e-12
    atol: float = 1e-12
    max_steps: int = 200_000
    line_search_factor: float = 0.5
    line_search_max: int = 20


@dataclass(frozen=True)
class TransferProblem:
    """Fixed-time, fixed-endpoint minimum-fuel transfer.

    ``x0`` and ``xf_target`` are physical MRP MEEs (km); the target true
    longitude is unwrapped and so fixes the revolution count.
    ``element_set`` chooses the shooting coordinates (``mrpmee`` or ``mee``).
    ``reference_guess`` maps an element-set name to a 7-vector of initial
    costates ``(lam[6], lam_m)``.
    """

    mu_phys: float
    x0: MrpMeeSet
    xf_target: MrpMeeSet
    t0: float
    tf: float
    engine: Engine
    units: CanonicalUnits
    rho_schedule: tuple = DEFAULT_RHO_SCHEDULE
    solver_tols: SolverTols = SolverTols()
    element_set: str = "mrpmee"
    reference_guess: dict | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.tf > self.t0:
            raise InputError("need tf > t0")
        rs = tuple(float(r) for r in self.rho_schedule)
        if not rs or any(r <= 0 for r in rs) or any(b >= a for a, b in zip(rs, rs[1:])):
            raise InputError("rho_schedule must be positive and strictly decreasing")
        object.__setattr__(self, "rho_schedule", rs)
        if self.element_set not in ("mrpmee", "mee"):
            raise InputError("element_set must be 'mrpmee' or 'mee'")

    def with_(self, **kw) -> "TransferProblem":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return TransferProblem(**d)

    # canonical views

    def canonical_state(self, x: MrpMeeSet) -> np.ndarray:
        """Element vector in canonical units in the shooting coordinates."""
        v = x.as_array().copy()
        v[0] /= self.units.du
        if self.element_set == "mee":
            m = mrpmee_to_mee(MrpMeeSet.from_array(v, 1.0))
            v = m.as_array()
        return v

    def initial_guess(self) -> np.ndarray | None:
        """Reference costate guess in the shooting coordinates.

        Without a stored ``mee`` guess the MRP one is mapped through the
        costate transformation at the departure state.
        """
        refs = self.reference_guess or {}
        if self.element_set in refs:
            return np.array(refs[self.element_set], dtype=float)
        if self.element_set == "mee" and "mrpmee" in refs:
            g = np.array(refs["mrpmee"], dtype=float)
            g[:6] = costates_mrp_to_crp(g[:6], self.x0.as_array())
            return g
        return None

    @property
    def tof(self) -> float:
        return (self.tf - self.t0) / self.units.tu

    @property
    def thrust_canonical(self) -> float:
        return self.engine.thrust / (self.units.mass * self.units.au)

    @property
    def c_canonical(self) -> float:
        return self.engine.c / self.units.vu


@dataclass
class TransferSolution:
    lam0: np.ndarray
    lam_m0: float
    final_mass: float
    residual_norm: float
    trajectory: object
    per_rho_history: list
    iterations: int = 0
    fevals: int = 0
    wall_time: float = 0.0
    element_set: str = "mrpmee"
    rho_final: float = float("nan")
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "element_set": self.element_set,
            "converged": self.converged,
            "lam0": [float(v) for v in self.lam0],
            "lam_m0": float(self.lam_m0),
            "final_mass_kg": float(self.final_mass),
            "residual_norm": float(self.residual_norm),
            "iterations": int(self.iterations),
            "fevals": int(self.fevals),
            "rho_final": float(self.rho_final),
            "per_rho": self.per_rho_history,
        }


def target_longitude(l0: float, lf: float, revolutions: int) -> float:
    """Unwrapped final true longitude: ``lf`` reached after ``revolutions`` full turns past the first arrival."""
    return l0 + (lf - l0) % (2.0 * math.pi) + 2.0 * math.pi * revolutions


def problem_from_dict(d: dict) -> TransferProblem:
    try:
        mu = float(d["mu_km3s2"])
        b = d["boundary"]
        dep = _as_mrpmee(b["departure_coe"], mu)
        arr = _as_mrpmee(b["arrival_coe"], mu)
        revs = int(d.get("revolutions", 0))
        arr = MrpMeeSet(arr.p, arr.e1, arr.e2, arr.sigma1, arr.sigma2,
                        target_longitude(dep.l, arr.l, revs), mu)
        eng = d["engine"]
        engine = Engine(float(eng["thrust_N"]) * 1e-3, float(eng["isp_s"]), float(eng["m0_kg"]))
        units = CanonicalUnits(float(d.get("du_km", AU_KM)), mu, engine.m0)
        tol = d.get("tolerances", {})
        tols = SolverTols(
            residual_tol=float(tol.get("residual_tol", 1e-9)),
            fd_step=float(tol.get("fd_step", 1e-7)),
            max_newton_iters=int(tol.get("max_newton_iters", 200)),
            rtol=float(tol.get("rtol", 1e-12)),
            atol=float(tol.get("atol", 1e-12)),
        )
        guess = d.get("reference_guess")
        if guess is not None and not isinstance(guess, dict):
            guess = {d.get("element_set", "mrpmee"): guess}
        return TransferProblem(
            mu_phys=mu,
            x0=dep,
            xf_target=arr,
            t0=0.0,
            tf=float(d["epoch_span_days"]) * DAY_S,
            engine=engine,
            units=units,
            rho_schedule=tuple(d.get("rho_schedule", DEFAULT_RHO_SCHEDULE)),
            solver_tols=tols,
            element_set=d.get("element_set", "mrpmee"),
            reference_guess=None if guess is None else {
                k: tuple(float(v) for v in g) for k, g in guess.items()},
            seed=int(d.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad problem JSON: {exc}") from exc


def _as_mrpmee(v, mu: float) -> MrpMeeSet:
    if isinstance(v, (list, tuple)):
        a, e, i, raan, argp, nu = (float(x) for x in v)
        return coe_to_mrpmee(CoeSet(a, e, i, raan, argp, nu, mu))
    state = from_dict(dict(v, mu=v.get("mu", mu)), default_set="coe")
    return convert(state, "mrpmee") if set_name(state) != "mrpmee" else state


def load_problem(path: str | Path) -> TransferProblem:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read problem {path}: {exc}") from exc
    return problem_from_dict(d)


def bundled_problem_path() -> Path:
    return Path(str(resources.files("orbkit") / "data" / "earth_nea_2001au43.json"))


def bundled_problem(element_set: str = "mrpmee") -> TransferProblem:
    return load_problem(bundled_problem_path()).with_(element_set=element_set)
