"""Attitude representations on SO(3) and their kinematics.

Conventions
-----------
A rotation ``R`` maps the fixed (unprimed) basis onto the rotated (primed)
basis, so the columns of ``R`` are the primed basis vectors in fixed
components.  Angular velocity comes in two flavours that differ only by
where its components live:

* unprimed components ``w`` with ``hat(w) = Rdot R^T``
* primed components ``w'`` with ``hat(w') = R^T Rdot``, and ``w = R w'``

Every rate function takes an :class:`AngularVelocity` whose ``frame`` tag
selects the matching sign pattern.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AxisRateSingular,
    CrpSingular,
    EulerGimbal,
    MrpAtUnitSphere,
    NonUnitAxis,
    ZeroMrp,
)
from .tensors import Rotation, hat, unhat, vec3

SINGULAR_TOL = 1e-9
_I3 = np.eye(3)
_ZHAT = np.array([0.0, 0.0, 1.0])


class Frame(enum.Enum):
    UNPRIMED = "unprimed"
    PRIMED = "primed"


@dataclass(frozen=True)
class AxisAngle:
    axis: np.ndarray
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "axis", vec3(self.axis))
        object.__setattr__(self, "angle", float(self.angle))


@dataclass(frozen=True)
class Crp:
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", vec3(self.q))


@dataclass(frozen=True)
class Mrp:
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma", vec3(self.sigma))


@dataclass(frozen=True)
class Euler313:
    phi: float
    theta: float
    psi: float


@dataclass(frozen=True)
class AngularVelocity:
    omega: np.ndarray
    frame: Frame

    def __post_init__(self):
        object.__setattr__(self, "omega", vec3(self.omega))
        if not isinstance(self.frame, Frame):
            object.__setattr__(self, "frame", Frame(self.frame))

    def in_frame(self, frame: Frame, r: Rotation) -> "AngularVelocity":
        """Re-express in the requested components given the attitude ``r``."""
        if frame is self.frame:
            return self
        if frame is Frame.UNPRIMED:
            return AngularVelocity(r.m @ self.omega, frame)
        return AngularVelocity(r.m.T @ self.omega, frame)


# axis-angle

def rot_from_axis_angle(a: AxisAngle) -> Rotation:
    n = np.linalg.norm(a.axis)
    if abs(n - 1.0) > 1e-12:
        raise NonUnitAxis(f"axis norm {n:.17g} is not unit")
    c, s = math.cos(a.angle), math.sin(a.angle)
    u = a.axis
    return Rotation(c * _I3 + s * hat(u).matrix + (1.0 - c) * np.outer(u, u))


def axis_angle_from_rot(r: Rotation) -> AxisAngle:
    """Principal axis and angle with the angle in ``[0, pi]``.

    The identity maps to ``(z, 0)``.  For angles past ``pi/2`` the axis is
    taken from the symmetric part ``(1 - cos phi) a a^T`` (largest diagonal
    column), which stays well conditioned through ``phi = pi`` where the
    antisymmetric part vanishes.
    """
    m = r.m
    ax = unhat(m)
    c = min(1.0, max(-1.0, 0.5 * (np.trace(m) - 1.0)))
    s = float(np.linalg.norm(ax))
    phi = math.atan2(s, c)
    if phi < 1e-12:
        return AxisAngle(_ZHAT.copy(), 0.0)
    if c >= 0.0:
        return AxisAngle(ax / s, phi)
    b = (0.5 * (m + m.T) - c * _I3) / (1.0 - c)
    j = int(np.argmax(np.diag(b)))
    u = b[:, j] / math.sqrt(b[j, j])
    u /= np.linalg.norm(u)
    if u @ ax < 0.0:
        u = -u
    return AxisAngle(u, phi)


# classic Rodrigues parameters

def rot_from_crp(c: Crp) -> Rotation:
    q = c.q
    qt = hat(q).matrix
    f = 2.0 / (1.0 + q @ q)
    return Rotation(_I3 + f * (qt + qt @ qt))


def crp_from_rot(r: Rotation) -> Crp:
    t1 = np.trace(r.m) + 1.0
    if t1 <= SINGULAR_TOL:
        raise CrpSingular("rotation angle near +-pi: classic Rodrigues parameters are unbounded")
    return Crp(2.0 / t1 * unhat(r.m))


# modified Rodrigues parameters

def rot_from_mrp(m: Mrp) -> Rotation:
    s = m.sigma
    s2 = s @ s
    st = hat(s).matrix
    d = (1.0 + s2) ** 2
    return Rotation(_I3 + 4.0 * (1.0 - s2) / d * st + 8.0 / d * (st @ st))


def mrp_from_rot(r: Rotation) -> Mrp:
    """Principal-set MRPs (``|sigma| <= 1``)."""
    t1 = np.trace(r.m) + 1.0
    if t1 > 1e-6:
        z = math.sqrt(t1)
        return Mrp(2.0 * unhat(r.m) / ((2.0 + z) * z))
    aa = axis_angle_from_rot(r)
    return Mrp(aa.axis * math.tan(aa.angle / 4.0))


def crp_to_mrp(c: Crp) -> Mrp:
    q = c.q
    return Mrp(q / (1.0 + math.sqrt(1.0 + q @ q)))


def mrp_to_crp(m: Mrp) -> Crp:
    s = m.sigma
    d = 1.0 - s @ s
    if abs(d) <= SINGULAR_TOL:
        raise MrpAtUnitSphere("|sigma| = 1 corresponds to a rotation by pi; CRPs are infinite")
    return Crp(2.0 * s / d)


def crp_mrp_jacobians(m: Mrp) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(dq/dsigma, dsigma/dq)`` evaluated at ``m``."""
    s = m.sigma
    k = 0.5 * (1.0 - s @ s)
    if abs(2.0 * k) <= SINGULAR_TOL:
        raise MrpAtUnitSphere("|sigma| = 1: dq/dsigma is unbounded")
    q = s / k
    dq_ds = (_I3 + np.outer(s, s) / k) / k
    ds_dq = k * (_I3 - k * k / (1.0 - k) * np.outer(q, q))
    return dq_ds, ds_dq


def mrp_shadow(m: Mrp) -> Mrp:
    s2 = m.sigma @ m.sigma
    if math.sqrt(s2) <= 1e-12:
        raise ZeroMrp("the shadow of the identity MRP lies at infinity")
    return Mrp(-m.sigma / s2)


# Euler angles

def simple_rotation(axis_index: int, theta: float) -> Rotation:
    c, s = math.cos(theta), math.sin(theta)
    if axis_index == 1:
        m = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
    elif axis_index == 2:
        m = [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
    elif axis_index == 3:
        m = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    else:
        raise ValueError("axis_index must be 1, 2 or 3")
    return Rotation(np.array(m))


def rot_from_euler313(e: Euler313) -> Rotation:
    sf, cf = math.sin(e.phi), math.cos(e.phi)
    st, ct = math.sin(e.theta), math.cos(e.theta)
    sp, cp = math.sin(e.psi), math.cos(e.psi)
    return Rotation(np.array([
        [cf * cp - sf * ct * sp, -cf * sp - sf * ct * cp, sf * st],
        [sf * cp + cf * ct * sp, -sf * sp + cf * ct * cp, -cf * st],
        [st * sp, st * cp, ct],
    ]))


def euler313_from_rot(r: Rotation) -> Euler313:
    m = r.m
    if abs(m[2, 2]) >= 1.0 - SINGULAR_TOL:
        raise EulerGimbal("theta near 0 or pi: 3-1-3 angles phi and psi are not separable")
    theta = math.acos(m[2, 2])
    phi = math.atan2(m[0, 2], -m[1, 2])
    psi = math.atan2(m[2, 0], m[2, 1])
    return Euler313(phi, theta, psi)


# kinematics

def crp_rates(c: Crp, w: AngularVelocity) -> np.ndarray:
    q = c.q
    qt = hat(q).matrix
    sgn = 1.0 if w.frame is Frame.PRIMED else -1.0
    return 0.5 * (_I3 + sgn * qt + np.outer(q, q)) @ w.omega


def omega_from_crp_rates(c: Crp, qdot, frame: Frame) -> AngularVelocity:
    q = c.q
    qt = hat(q).matrix
    sgn = -1.0 if frame is Frame.PRIMED else 1.0
    return AngularVelocity(2.0 / (1.0 + q @ q) * (_I3 + sgn * qt) @ vec3(qdot), frame)


def mrp_rates(m: Mrp, w: AngularVelocity) -> np.ndarray:
    s = m.sigma
    st = hat(s).matrix
    sgn = 1.0 if w.frame is Frame.PRIMED else -1.0
    return 0.5 * (0.5 * (1.0 - s @ s) * _I3 + sgn * st + np.outer(s, s)) @ w.omega


def omega_from_mrp_rates(m: Mrp, sdot, frame: Frame) -> AngularVelocity:
    s = m.sigma
    s2 = s @ s
    st = hat(s).matrix
    sgn = -1.0 if frame is Frame.PRIMED else 1.0
    mat = 0.5 * (1.0 - s2) * _I3 + sgn * st + np.outer(s, s)
    return AngularVelocity(8.0 / (1.0 + s2) ** 2 * mat @ vec3(sdot), frame)


def axis_angle_rates(a: AxisAngle, w: AngularVelocity) -> tuple[np.ndarray, float]:
    """Return ``(axis_dot, angle_dot)``."""
    sh = math.sin(0.5 * a.angle)
    if abs(sh) <= SINGULAR_TOL:
        raise AxisRateSingular("rotation angle near 0: the principal axis rate is unbounded")
    cot = math.cos(0.5 * a.angle) / sh
    at = hat(a.axis).matrix
    if w.frame is Frame.PRIMED:
        adot = 0.5 * (at - cot * at @ at) @ w.omega
    else:
        adot = -0.5 * (at + cot * at @ at) @ w.omega
    return adot, float(w.omega @ a.axis)


def _euler313_primed_matrix(e: Euler313) -> np.ndarray:
    st, ct = math.sin(e.theta), math.cos(e.theta)
    sp, cp = math.sin(e.psi), math.cos(e.psi)
    return np.array([[sp * st, cp, 0.0], [cp * st, -sp, 0.0], [ct, 0.0, 1.0]])


def euler313_rates(e: Euler313, w: AngularVelocity) -> tuple[float, float, float]:
    """Return ``(phi_dot, theta_dot, psi_dot)``."""
    st = math.sin(e.theta)
    if abs(st) <= SINGULAR_TOL:
        raise EulerGimbal("sin(theta) ~ 0: 3-1-3 angle rates are singular")
    wp = w.omega
    if w.frame is Frame.UNPRIMED:
        wp = rot_from_euler313(e).m.T @ wp
    sp, cp = math.sin(e.psi), math.cos(e.psi)
    cot = math.cos(e.theta) / st
    phid = (sp * wp[0] + cp * wp[1]) / st
    thetad = cp * wp[0] - sp * wp[1]
    psid = -cot * sp * wp[0] - cot * cp * wp[1] + wp[2]
    return phid, thetad, psid


def omega_from_euler313(e: Euler313, rates, frame: Frame) -> AngularVelocity:
    fd, td, pd = (float(v) for v in rates)
    if frame is Frame.PRIMED:
        return AngularVelocity(_euler313_primed_matrix(e) @ np.array([fd, td, pd]), frame)
    sf, cf = math.sin(e.phi), math.cos(e.phi)
    st, ct = math.sin(e.theta), math.cos(e.theta)
    return AngularVelocity(
        np.array([td * cf + pd * sf * st, td * sf - pd * cf * st, fd + pd * ct]), frame
    )


def omega_from_rotation_pair(r: Rotation, rdot, frame: Frame = Frame.UNPRIMED) -> AngularVelocity:
    """Angular velocity from ``R`` and its time derivative."""
    rdot = np.asarray(rdot, dtype=float)
    if frame is Frame.UNPRIMED:
        return AngularVelocity(unhat(rdot @ r.m.T), frame)
    return AngularVelocity(unhat(r.m.T @ rdot), frame)
