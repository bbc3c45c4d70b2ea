"""Orbit-attached bases (LVLH, perifocal, equinoctial) and their angular velocities.

Bases are returned as three column vectors in inertial components.  The
angular velocity helpers return components in the basis's own axes, which is
the form the element dynamics consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CircularOrbit,
    DegenerateOrbit,
    EquatorialOrbit,
    KinematicSingularity,
    RetrogradeEquatorial,
)
from .tensors import Rotation, vec3

_ZHAT = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Basis:
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Rotation whose columns are ``e1, e2, e3``."""
        return np.column_stack([self.e1, self.e2, self.e3])

    def rotation(self) -> Rotation:
        return Rotation(self.matrix)

    def components(self, v) -> np.ndarray:
        return self.matrix.T @ vec3(v)


@dataclass(frozen=True)
class ConservedVectors:
    h: np.ndarray
    e: np.ndarray
    k: np.ndarray


def _check_plane(r: np.ndarray, v: np.ndarray) -> np.ndarray:
    h = np.cross(r, v)
    rn, vn = np.linalg.norm(r), np.linalg.norm(v)
    if rn == 0.0 or np.linalg.norm(h) <= 1e-12 * rn * vn:
        raise DegenerateOrbit("position and velocity are parallel: orbit plane undefined")
    return h


def lvlh_basis(r, v) -> Basis:
    r, v = vec3(r), vec3(v)
    h = _check_plane(r, v)
    u1 = r / np.linalg.norm(r)
    u3 = h / np.linalg.norm(h)
    return Basis(u1, np.cross(u3, u1), u3)


def conserved_vectors(r, v, mu: float) -> ConservedVectors:
    r, v = vec3(r), vec3(v)
    h = _check_plane(r, v)
    e = np.cross(v, h) / mu - r / np.linalg.norm(r)
    k = np.cross(h, e) / (h @ h)
    return ConservedVectors(h, e, k)


def perifocal_basis(cv: ConservedVectors) -> Basis:
    en = np.linalg.norm(cv.e)
    if en <= 1e-10:
        raise CircularOrbit("eccentricity ~ 0: periapse direction undefined")
    o1 = cv.e / en
    o3 = cv.h / np.linalg.norm(cv.h)
    o2 = np.cross(o3, o1)
    return Basis(o1, o2 / np.linalg.norm(o2), o3)


def line_of_nodes(h, inertial_z=_ZHAT) -> np.ndarray:
    h = vec3(h)
    n = np.cross(vec3(inertial_z), h)
    nn = np.linalg.norm(n)
    if nn <= 1e-12 * np.linalg.norm(h):
        raise EquatorialOrbit("equatorial orbit: line of nodes undefined")
    return n / nn


def equinoctial_matrix_crp(q1: float, q2: float) -> np.ndarray:
    d = 1.0 + q1 * q1 + q2 * q2
    return np.array([
        [1.0 + q1 * q1 - q2 * q2, 2.0 * q1 * q2, 2.0 * q2],
        [2.0 * q1 * q2, 1.0 + q2 * q2 - q1 * q1, -2.0 * q1],
        [-2.0 * q2, 2.0 * q1, 1.0 - q1 * q1 - q2 * q2],
    ]) / d


def equinoctial_matrix_mrp(s1: float, s2: float) -> np.ndarray:
    s2sq = s1 * s1 + s2 * s2
    k = 0.5 * (1.0 - s2sq)
    f = 4.0 / (1.0 + s2sq) ** 2
    return f * np.array([
        [k * k + s1 * s1 - s2 * s2, 2.0 * s1 * s2, 2.0 * k * s2],
        [2.0 * s1 * s2, k * k + s2 * s2 - s1 * s1, -2.0 * k * s1],
        [-2.0 * k * s2, 2.0 * k * s1, k * k - s1 * s1 - s2 * s2],
    ])


def equinoctial_basis_from_q(q1: float, q2: float) -> Basis:
    m = equinoctial_matrix_crp(q1, q2)
    return Basis(m[:, 0], m[:, 1], m[:, 2])


def equinoctial_basis_from_sigma(s1: float, s2: float) -> Basis:
    m = equinoctial_matrix_mrp(s1, s2)
    return Basis(m[:, 0], m[:, 1], m[:, 2])


def crp_from_hhat(hhat) -> tuple[float, float]:
    h = vec3(hhat)
    h = h / np.linalg.norm(h)
    d = 1.0 + h[2]
    if d <= 1e-9:
        raise RetrogradeEquatorial()
    return -h[1] / d, h[0] / d


def lvlh_omega(aux, a_lvlh) -> np.ndarray:
    """LVLH angular velocity in LVLH components; ``aux`` supplies ``r`` and ``h``."""
    a = vec3(a_lvlh)
    return np.array([aux.r / aux.h * a[2], 0.0, aux.h / aux.r ** 2])


def perifocal_omega(aux, a_lvlh) -> np.ndarray:
    """Perifocal angular velocity in perifocal components.

    ``aux`` supplies ``r, h, p, e, nu``.
    """
    if aux.e <= 1e-9:
        raise CircularOrbit("eccentricity ~ 0: perifocal rotation rate carries 1/e")
    a = vec3(a_lvlh)
    rh = aux.r / aux.h
    cn, sn = math.cos(aux.nu), math.sin(aux.nu)
    pr = aux.p / aux.r
    return np.array([
        rh * cn * a[2],
        rh * sn * a[2],
        -rh / aux.e * (pr * cn * a[0] - (pr + 1.0) * sn * a[1]),
    ])


def equinoctial_omega(q_or_sigma, l: float, r_over_h: float, a_n: float, kind: str = "crp") -> np.ndarray:
    """Equinoctial-basis angular velocity in equinoctial components.

    ``kind`` is ``"crp"`` when ``q_or_sigma`` holds ``(q1, q2)`` and
    ``"mrp"`` when it holds ``(sigma1, sigma2)``.
    """
    x1, x2 = float(q_or_sigma[0]), float(q_or_sigma[1])
    w1 = r_over_h * math.cos(l) * a_n
    w2 = r_over_h * math.sin(l) * a_n
    if kind == "crp":
        w3 = x2 * w1 - x1 * w2
    elif kind == "mrp":
        d = 1.0 - x1 * x1 - x2 * x2
        if abs(d) <= 1e-9:
            raise KinematicSingularity()
        w3 = 2.0 / d * (x2 * w1 - x1 * w2)
    else:
        raise ValueError("kind must be 'crp' or 'mrp'")
    return np.array([w1, w2, w3])
