"""3D vectors, 2-tensors and the axial (hat) map.

Vectors and matrices are plain ``numpy`` arrays of shape ``(3,)`` and
``(3, 3)``.  Antisymmetric tensors are carried as :class:`SkewSym`, which
stores only the axial vector so antisymmetry holds exactly by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSpecialOrthogonal

ORTHO_TOL = 1e-12


def vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    return v


def _skew_matrix(w: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -w[2], w[1]],
         [w[2], 0.0, -w[0]],
         [-w[1], w[0], 0.0]]
    )


@dataclass(frozen=True)
class SkewSym:
    """Antisymmetric 2-tensor identified with its axial vector."""

    axial: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "axial", vec3(self.axial))

    @property
    def matrix(self) -> np.ndarray:
        return _skew_matrix(self.axial)

    def __matmul__(self, other):
        other = np.asarray(other, dtype=float)
        if other.shape == (3,):
            return np.cross(self.axial, other)
        return self.matrix @ other

    def __rmatmul__(self, other):
        return np.asarray(other, dtype=float) @ self.matrix

    def __array__(self, dtype=None, copy=None):
        m = self.matrix
        return m if dtype is None else m.astype(dtype)


def hat(v) -> SkewSym:
    """Axial operator: ``hat(v) @ u == v x u``."""
    return SkewSym(vec3(v))


def unhat(m) -> np.ndarray:
    """Axial vector of the antisymmetric part of ``m``."""
    if isinstance(m, SkewSym):
        return m.axial.copy()
    m = np.asarray(m, dtype=float)
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def wedge(u, v) -> np.ndarray:
    """Antisymmetrized tensor product ``u (x) v - v (x) u``."""
    u, v = vec3(u), vec3(v)
    return np.outer(u, v) - np.outer(v, u)


@dataclass(frozen=True)
class Rotation:
    """Proper orthogonal 3x3 matrix (validated by :func:`rotation_from_mat`)."""

    m: np.ndarray

    def __matmul__(self, other):
        if isinstance(other, Rotation):
            return Rotation(self.m @ other.m)
        return self.m @ np.asarray(other, dtype=float)

    @property
    def T(self) -> "Rotation":
        return Rotation(self.m.T.copy())

    def trace(self) -> float:
        return float(np.trace(self.m))


def orthogonality_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m @ m.T - np.eye(3))))


def rotation_from_mat(m) -> Rotation:
    """Validate ``m`` as a member of SO(3)."""
    m = np.array(m, dtype=float).reshape(3, 3)
    if not np.all(np.isfinite(m)):
        raise NotSpecialOrthogonal(float("nan"), float("nan"))
    defect = orthogonality_defect(m)
    det = float(np.linalg.det(m))
    if defect > ORTHO_TOL or abs(det - 1.0) > ORTHO_TOL:
        raise NotSpecialOrthogonal(defect, det)
    return Rotation(m)
