"""Gauss variational equations under a perturbing LVLH acceleration.

Rates are returned as length-6 arrays in the element set's own ordering.
For the equinoctial sets the thrust-linear split
``xdot = (r/h) B a + k`` with ``k = (0, 0, 0, 0, 0, h/r^2)`` is exposed via
:func:`b_matrix` and :func:`kepler_term`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as K
from .elements import CoeSet, MeeSet, MrpMeeSet, coe_aux
from .errors import CoeSingular, HyperbolicPoint, InputError, KinematicSingularity
from .frames import lvlh_basis

SINGULAR_TOL = 1e-9


@dataclass(frozen=True)
class LvlhAccel:
    a1: float
    a2: float
    a3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3], dtype=float)

    @classmethod
    def of(cls, a) -> "LvlhAccel":
        if isinstance(a, LvlhAccel):
            return a
        a = np.asarray(a, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))


ZERO_ACCEL = LvlhAccel(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BMatrix:
    rows: np.ndarray
    b4: float
    b5: float
    b6: float


def _vec(a) -> np.ndarray:
    return LvlhAccel.of(a).as_array()


def coe_rates(c: CoeSet, a, anomaly_choice: str = "nu") -> np.ndarray:
    """Rates of ``(a, e, i, raan, argp, X)`` with ``X`` the chosen anomaly (nu, M or E)."""
    if c.e <= SINGULAR_TOL:
        raise CoeSingular("argp", "e ~ 0: the argument-of-periapse and anomaly rates carry 1/e")
    if abs(math.sin(c.i)) <= SINGULAR_TOL:
        raise CoeSingular("raan", "sin i ~ 0: the RAAN and argument-of-periapse rates carry 1/sin i")
    a1, a2, a3 = _vec(a)
    aux = coe_aux(c)
    rh = aux.r / aux.h
    w, e = aux.w, c.e
    cn, sn = math.cos(c.nu), math.sin(c.nu)
    st, ct = math.sin(aux.theta), math.cos(aux.theta)
    adot = 2.0 * c.a ** 2 / aux.h * (e * sn * a1 + w * a2)
    edot = rh * (w * sn * a1 + ((w + 1.0) * cn + e) * a2)
    idot = rh * ct * a3
    raandot = rh * st / math.sin(c.i) * a3
    argpdot = rh * ((-w * cn * a1 + (w + 1.0) * sn * a2) / e - st / math.tan(c.i) * a3)
    if anomaly_choice == "nu":
        xdot = rh / e * (w * cn * a1 - (w + 1.0) * sn * a2) + aux.h / aux.r ** 2
    elif anomaly_choice == "M":
        xdot = rh * aux.b / (c.a * e) * ((w * cn - 2.0 * e) * a1 - (w + 1.0) * sn * a2) + aux.n
    elif anomaly_choice == "E":
        xdot = (
            ((cn - e) * a1 - (1.0 + aux.r / c.a) * sn * a2) / (aux.n * c.a * e)
            + c.a / aux.r * aux.n
        )
    else:
        raise InputError("anomaly_choice must be 'nu', 'M' or 'E'")
    return np.array([adot, edot, idot, raandot, argpdot, xdot])


def _mee_rates_array(x, a, mu: float) -> np.ndarray:
    p, e1, e2, q1, q2, l = (float(v) for v in x)
    a1, a2, a3 = a
    cl, sl = math.cos(l), math.sin(l)
    w = 1.0 + e1 * cl + e2 * sl
    if w <= 0.0 or p <= 0.0:
        raise HyperbolicPoint("w <= 0 or p <= 0")
    h = math.sqrt(mu * p)
    r = p / w
    rh = r / h
    qs = q1 * sl - q2 * cl
    half = 0.5 * (1.0 + q1 * q1 + q2 * q2)
    return np.array([
        rh * 2.0 * p * a2,
        rh * (w * sl * a1 + ((w + 1.0) * cl + e1) * a2 - e2 * qs * a3),
        rh * (-w * cl * a1 + ((w + 1.0) * sl + e2) * a2 + e1 * qs * a3),
        rh * half * cl * a3,
        rh * half * sl * a3,
        rh * qs * a3 + h / r ** 2,
    ])


def mee_rates(m: MeeSet, a) -> np.ndarray:
    """Rates of ``(p, e1, e2, q1, q2, l)``; regular at e = 0 and i = 0."""
    return _mee_rates_array(m.as_array(), _vec(a), m.mu)


def _check_sigma(s1: float, s2: float) -> None:
    if s1 * s1 + s2 * s2 >= 1.0 - SINGULAR_TOL:
        raise KinematicSingularity()


def _mrpmee_rates_array(x, a, mu: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    _check_sigma(x[3], x[4])
    out = np.empty(6)
    K.element_rates(x, np.asarray(a, dtype=float), mu, K.KIND_MRP, out)
    return out


def mrpmee_rates(x: MrpMeeSet, a) -> np.ndarray:
    """Rates of ``(p, e1, e2, sigma1, sigma2, l)``."""
    return _mrpmee_rates_array(x.as_array(), _vec(a), x.mu)


def b_matrix(x) -> BMatrix:
    """Thrust matrix for an :class:`MrpMeeSet` (or the CRP form for a :class:`MeeSet`)."""
    arr = x.as_array()
    if isinstance(x, MrpMeeSet):
        _check_sigma(arr[3], arr[4])
        kind = K.KIND_MRP
    elif isinstance(x, MeeSet):
        kind = K.KIND_CRP
    else:
        raise InputError("b_matrix needs an MrpMeeSet or MeeSet")
    B = np.empty((6, 3))
    K.fill_b(arr, kind, B)
    return BMatrix(B, float(B[3, 2]), float(B[4, 2]), float(B[5, 2]))


def r_over_h(x) -> float:
    return float(K.orbit_scalars(x.as_array(), x.mu)[1])


def kepler_term(x) -> np.ndarray:
    k = np.zeros(6)
    k[5] = K.orbit_scalars(x.as_array(), x.mu)[2]
    return k


def alt_first_element_rates(c: CoeSet, a) -> dict:
    """Rates of the alternative first elements ``a, h, n`` and the specific energy."""
    a1, a2, _ = _vec(a)
    aux = coe_aux(c)
    esn = c.e * math.sin(c.nu)
    g = esn * a1 + aux.p / aux.r * a2
    return {
        "adot": 2.0 * c.a ** 2 / aux.h * g,
        "hdot": aux.r * a2,
        "ndot": -3.0 * aux.n * c.a / aux.h * g,
        "energydot": c.mu / aux.h * g,
    }


def mass_rate(m: float, a_mag: float, c_exhaust: float) -> float:
    """``mdot = -m |a| / c``."""
    return -m * a_mag / c_exhaust


def two_body_rhs(r, v, mu: float, a_inertial=None) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    acc = -mu * r / np.linalg.norm(r) ** 3
    if a_inertial is not None:
        acc = acc + a_inertial
    return np.concatenate([v, acc])


AccelFn = Callable[[float, np.ndarray], "LvlhAccel"]

_ELEMENT_RATES = {"mee": _mee_rates_array, "mrpmee": _mrpmee_rates_array}


def make_rhs(element_set: str, mu: float, accel: AccelFn | None = None):
    """Right-hand side ``f(t, y)`` for propagating ``element_set`` under ``accel(t, y)``.

    ``element_set`` is ``"mee"``, ``"mrpmee"``, ``"coe"`` (true anomaly) or
    ``"cartesian"`` (``y = (r, v)``; the LVLH acceleration is rotated to inertial).
    """
    def acc(t, y):
        return ZERO_ACCEL.as_array() if accel is None else LvlhAccel.of(accel(t, y)).as_array()

    if element_set in _ELEMENT_RATES:
        fn = _ELEMENT_RATES[element_set]
        return lambda t, y: fn(y, acc(t, y), mu)
    if element_set == "coe":
        return lambda t, y: coe_rates(CoeSet(*y, mu=mu), acc(t, y), "nu")
    if element_set == "cartesian":
        def rhs(t, y):
            a = acc(t, y)
            ai = lvlh_basis(y[:3], y[3:]).matrix @ a if np.any(a) else None
            return two_body_rhs(y[:3], y[3:], mu, ai)
        return rhs
    raise InputError(f"unknown element set {element_set!r}")

