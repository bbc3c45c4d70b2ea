"""Exception hierarchy.

Every domain failure raised by the library derives from :class:`OrbkitError`,
so callers (and the CLI) can separate domain errors from programming errors.
"""

from __future__ import annotations


class OrbkitError(Exception):
    """Base class for all library errors."""


class InputError(OrbkitError):
    """Malformed input (bad JSON, unknown element set, missing field)."""


class DomainError(OrbkitError):
    """A value lies outside the domain where an operation is defined."""


# attitude / tensors

class NotSpecialOrthogonal(DomainError):
    def __init__(self, orth_defect: float, det: float):
        self.orth_defect = orth_defect
        self.det = det
        super().__init__(
            f"matrix is not a proper rotation: |R R^T - I|max={orth_defect:.3e}, det={det:.15g}"
        )


class NonUnitAxis(DomainError):
    pass


class CrpSingular(DomainError):
    pass


class MrpAtUnitSphere(DomainError):
    pass


class ZeroMrp(DomainError):
    pass


class EulerGimbal(DomainError):
    pass


class AxisRateSingular(DomainError):
    pass


# orbits

class DegenerateOrbit(DomainError):
    pass


class CircularOrbit(DomainError):
    pass


class EquatorialOrbit(DomainError):
    pass


class RetrogradeEquatorial(DomainError):
    def __init__(self, msg: str = "retrograde equatorial orbit (i = pi): equinoctial CRPs are singular"):
        super().__init__(msg)


class KinematicSingularity(DomainError):
    def __init__(self, msg: str = "kinematic singularity: sigma1^2 + sigma2^2 -> 1 (i -> pi)"):
        super().__init__(msg)


class CoeSingular(DomainError):
    def __init__(self, which: str, msg: str | None = None):
        self.which = which
        super().__init__(msg or f"classical element rate singular in row '{which}'")


class MeeSingular(DomainError):
    pass


class HyperbolicPoint(DomainError):
    pass


class NoConvergence(OrbkitError):
    pass


# integration

class IntegrationError(OrbkitError):
    pass


class StepUnderflow(IntegrationError):
    def __init__(self, t: float, h: float):
        self.t = t
        self.h = h
        super().__init__(f"step size {h:.3e} fell below h_min at t={t:.15g}")


class MaxStepsExceeded(IntegrationError):
    def __init__(self, t: float, steps: int):
        self.t = t
        self.steps = steps
        super().__init__(f"exceeded {steps} steps at t={t:.15g}")


class RhsNonFinite(IntegrationError):
    def __init__(self, t: float):
        self.t = t
        super().__init__(f"right-hand side returned non-finite values at t={t:.15g}")


# optimal control

class SolverError(OrbkitError):
    pass


class NewtonStalled(SolverError):
    def __init__(self, rho: float, best_residual: float, partial=None):
        self.rho = rho
        self.best_residual = best_residual
        self.partial = partial
        super().__init__(f"Newton stalled at rho={rho:g} with best residual {best_residual:.3e}")


class JacobianSingular(SolverError):
    def __init__(self, rho: float, partial=None):
        self.rho = rho
        self.partial = partial
        super().__init__(f"singular shooting Jacobian at rho={rho:g}")


class IntegrationFailed(SolverError):
    def __init__(self, lam0, cause: Exception | str):
        self.lam0 = tuple(float(v) for v in lam0)
        self.cause = cause
        super().__init__(f"shooting integration failed for lam0={self.lam0}: {cause}")
