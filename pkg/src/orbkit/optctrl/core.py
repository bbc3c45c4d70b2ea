"""Hamiltonian, control law and costate dynamics for the minimum-fuel problem.

The thrust acceleration ``a`` (LVLH components) is the control.  With
element state ``x``, mass ``m`` and costates ``(lam, lam_m)``::

    H = lam . ((r/h) B a + k) - (lam_m - 1) m |a| / c

The optimal direction is ``-B^T lam / |B^T lam|`` and the throttle follows
the smoothed switch ``delta = (1 + tanh(S/rho)) / 2`` with switching function
``S = (r/h) |B^T lam| c / m + lam_m - 1``.

Element states may be :class:`~orbkit.elements.MrpMeeSet` (the primary
coordinates) or :class:`~orbkit.elements.MeeSet` (classic-Rodrigues variant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..dynamics import LvlhAccel
from ..elements import MeeSet, MrpMeeSet
from ..errors import InputError, KinematicSingularity

ZERO_PRIMER_TOL = 1e-14


@dataclass(frozen=True)
class ControlOutput:
    alpha_hat: np.ndarray
    delta: float
    s_tilde: float
    zero_primer: bool = False


@dataclass(frozen=True)
class AugmentedState:
    x: np.ndarray
    m: float
    lam: np.ndarray
    lam_m: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, [self.m], self.lam, [self.lam_m]])

    @classmethod
    def from_array(cls, y) -> "AugmentedState":
        y = np.asarray(y, dtype=float)
        return cls(y[0:6].copy(), float(y[6]), y[7:13].copy(), float(y[13]))


def _kind_of(x) -> int:
    if isinstance(x, MrpMeeSet):
        if x.sigma1 ** 2 + x.sigma2 ** 2 >= 1.0 - 1e-9:
            raise KinematicSingularity()
        return K.KIND_MRP
    if isinstance(x, MeeSet):
        return K.KIND_CRP
    raise InputError("element state must be an MrpMeeSet or MeeSet")


def _lam(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).reshape(6)
    return lam


def control_law(x, m: float, lam, lam_m: float, rho: float, c: float) -> ControlOutput:
    """Optimal steering and smoothed throttle."""
    if rho <= 0:
        raise InputError("rho must be positive")
    kind = _kind_of(x)
    alpha = np.empty(3)
    delta, s, nb = K.control_kernel(x.as_array(), m, _lam(lam), lam_m, x.mu, c, rho, kind, alpha)
    return ControlOutput(alpha, float(delta), float(s), bool(nb < ZERO_PRIMER_TOL))


def hamiltonian(x, m: float, lam, lam_m: float, a, c: float) -> float:
    kind = _kind_of(x)
    return float(K.hamiltonian_kernel(
        x.as_array(), m, _lam(lam), lam_m, LvlhAccel.of(a).as_array(), x.mu, c, kind
    ))


def throttle_entropy(delta: float) -> float:
    """``delta ln delta + (1 - delta) ln(1 - delta)`` (zero at the endpoints)."""
    out = 0.0
    for d in (delta, 1.0 - delta):
        if d > 0.0:
            out += d * math.log(d)
    return out


def smoothed_hamiltonian(x, m: float, lam, lam_m: float, rho: float, thrust: float, c: float) -> float:
    """Hamiltonian plus the smoothing penalty whose minimizer is the tanh throttle.

    ``H_rho = H + (T/c)(rho/2)[delta ln delta + (1-delta) ln(1-delta)]``
    evaluated at the closed-loop control.  Its time derivative along the
    closed-loop flow is ``-(T delta)^2 S / (c^2 m)``: the throttle-smoothing
    term cancels, and what remains comes from the mass-dependent bound
    ``|a| <= T/m`` on the acceleration control.
    """
    u = control_law(x, m, lam, lam_m, rho, c)
    a = thrust * u.delta / m * u.alpha_hat
    return hamiltonian(x, m, lam, lam_m, a, c) + thrust / c * 0.5 * rho * throttle_entropy(u.delta)


def hamiltonian_drift_rate(x, m: float, lam, lam_m: float, rho: float, thrust: float, c: float) -> float:
    """Closed-loop ``d H_rho / dt`` (see :func:`smoothed_hamiltonian`)."""
    u = control_law(x, m, lam, lam_m, rho, c)
    return -((thrust * u.delta) ** 2) * u.s_tilde / (c * c * m)


def rh_gradient(x) -> np.ndarray:
    """Gradient of ``r/h = sqrt(p/mu)/w`` with respect to the element state."""
    _kind_of(x)
    g, k = np.empty(6), np.empty(6)
    K.fill_scalar_gradients(x.as_array(), x.mu, g, k)
    return g


def k6_gradient(x) -> np.ndarray:
    """Gradient of ``k6 = h/r^2 = sqrt(mu/p^3) w^2``."""
    _kind_of(x)
    g, k = np.empty(6), np.empty(6)
    K.fill_scalar_gradients(x.as_array(), x.mu, g, k)
    return k


def b_gradients(x) -> np.ndarray:
    """``D[i]`` is the 3x6 matrix d b_i / d x for row ``b_i`` of the thrust matrix."""
    kind = _kind_of(x)
    D = np.empty((6, 3, 6))
    K.fill_b_gradients(x.as_array(), kind, D)
    return D


def costate_rates(x, m: float, lam, lam_m: float, a, c: float) -> tuple[np.ndarray, float]:
    """``(-dH/dx, -dH/dm)`` at fixed control ``a``."""
    kind = _kind_of(x)
    out = np.empty(6)
    lmd = K.costate_rates_kind(
        x.as_array(), _lam(lam), lam_m, LvlhAccel.of(a).as_array(), x.mu, c, kind, out
    )
    return out, float(lmd)


def augmented_rhs_array(t: float, y, rho: float, thrust: float, c: float,
                        mu: float = 1.0, element_set: str = "mrpmee") -> np.ndarray:
    kind = K.KIND_MRP if element_set == "mrpmee" else K.KIND_CRP
    dy = np.empty(14)
    K.aug_rhs(t, np.asarray(y, dtype=float), dy, mu, thrust, c, rho, kind)
    return dy


def augmented_rhs(t: float, s: AugmentedState, rho: float, thrust: float, c: float,
                  mu: float = 1.0, element_set: str = "mrpmee") -> AugmentedState:
    """Closed-loop rates of the 14-state system, returned as an :class:`AugmentedState`."""
    if element_set == "mrpmee" and s.x[3] ** 2 + s.x[4] ** 2 >= 1.0 - 1e-9:
        raise KinematicSingularity()
    return AugmentedState.from_array(augmented_rhs_array(t, s.as_array(), rho, thrust, c, mu, element_set))
