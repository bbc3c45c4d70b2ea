"""Element sets, conversions among them and to Cartesian state.

Four parameterizations of a Keplerian orbit are supported:

* :class:`CoeSet`          classical elements ``(a, e, i, raan, argp, nu)``
* :class:`MeeSet`          modified equinoctial elements ``(p, e1, e2, q1, q2, l)``
  where ``(q1, q2)`` are classic Rodrigues parameters of the equinoctial basis
* :class:`MrpMeeSet`       the same with modified Rodrigues parameters
  ``(sigma1, sigma2)`` in place of ``(q1, q2)``
* :class:`CartesianState`  position and velocity

Each value carries its gravitational parameter ``mu``.  Angles are stored
as given (the true longitude is never wrapped); extracted angles come from
``atan2`` and lie in ``(-pi, pi]``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import frames
from .errors import (
    CircularOrbit,
    EquatorialOrbit,
    HyperbolicPoint,
    InputError,
    MeeSingular,
    MrpAtUnitSphere,
    NoConvergence,
)
from .tensors import vec3

FLAG_CIRCULAR = "circular"
FLAG_EQUATORIAL = "equatorial"


def wrap_pi(x: float) -> float:
    """Wrap an angle into ``(-pi, pi]``."""
    y = math.remainder(x, 2.0 * math.pi)
    return math.pi if y == -math.pi else y


def angle_diff(a: float, b: float) -> float:
    return abs(wrap_pi(a - b))


@dataclass(frozen=True)
class CoeSet:
    a: float
    e: float
    i: float
    raan: float
    argp: float
    nu: float
    mu: float
    flags: frozenset = field(default_factory=frozenset, compare=False)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.e, self.i, self.raan, self.argp, self.nu])


@dataclass(frozen=True)
class CoeAux:
    p: float
    h: float
    r: float
    w: float
    n: float
    b: float
    theta: float
    energy: float
    e: float
    nu: float


@dataclass(frozen=True)
class MeeSet:
    p: float
    e1: float
    e2: float
    q1: float
    q2: float
    l: float
    mu: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.e1, self.e2, self.q1, self.q2, self.l])

    @classmethod
    def from_array(cls, x, mu: float) -> "MeeSet":
        return cls(*(float(v) for v in x), mu=mu)


@dataclass(frozen=True)
class MrpMeeSet:
    p: float
    e1: float
    e2: float
    sigma1: float
    sigma2: float
    l: float
    mu: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.e1, self.e2, self.sigma1, self.sigma2, self.l])

    @classmethod
    def from_array(cls, x, mu: float) -> "MrpMeeSet":
        return cls(*(float(v) for v in x), mu=mu)


@dataclass(frozen=True)
class CartesianState:
    r: np.ndarray
    v: np.ndarray
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "r", vec3(self.r))
        object.__setattr__(self, "v", vec3(self.v))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.r, self.v])


@dataclass(frozen=True)
class Anomalies:
    nu: float
    M: float
    E: float
    lam: float
    epsilon: float


def _check_coe(c: CoeSet) -> None:
    if c.e < 0.0 or c.e >= 1.0 or c.a <= 0.0:
        raise HyperbolicPoint(f"only elliptic orbits are supported (a={c.a}, e={c.e})")
    if not 0.0 <= c.i <= math.pi:
        raise InputError(f"inclination {c.i} outside [0, pi]")


def coe_aux(c: CoeSet) -> CoeAux:
    p = c.a * (1.0 - c.e * c.e)
    w = 1.0 + c.e * math.cos(c.nu)
    return CoeAux(
        p=p,
        h=math.sqrt(c.mu * p),
        r=p / w,
        w=w,
        n=math.sqrt(c.mu / c.a ** 3),
        b=c.a * math.sqrt(1.0 - c.e * c.e),
        theta=c.argp + c.nu,
        energy=-c.mu / (2.0 * c.a),
        e=c.e,
        nu=c.nu,
    )


def anomalies(c: CoeSet) -> Anomalies:
    E = math.atan2(math.sqrt(1.0 - c.e * c.e) * math.sin(c.nu), c.e + math.cos(c.nu))
    M = E - c.e * math.sin(E)
    varpi = c.raan + c.argp
    return Anomalies(nu=c.nu, M=M, E=E, lam=varpi + M, epsilon=varpi + E)


def _r313(raan: float, i: float, argp: float) -> np.ndarray:
    from .attitude import Euler313, rot_from_euler313

    return rot_from_euler313(Euler313(raan, i, argp)).m


def coe_to_cartesian(c: CoeSet) -> CartesianState:
    _check_coe(c)
    aux = coe_aux(c)
    cn, sn = math.cos(c.nu), math.sin(c.nu)
    r_o = aux.r * np.array([cn, sn, 0.0])
    v_o = c.mu / aux.h * np.array([-sn, c.e + cn, 0.0])
    rot = _r313(c.raan, c.i, c.argp)
    return CartesianState(rot @ r_o, rot @ v_o, c.mu)


def cartesian_to_coe(s: CartesianState, strict: bool = False) -> CoeSet:
    """Classical elements from position and velocity.

    Circular and/or equatorial states get a partial result with ``flags``
    naming the undefined split: circular sets ``argp = 0`` (``nu`` becomes the
    argument of latitude), equatorial sets ``raan = 0`` (``argp`` becomes the
    longitude of periapse).  With ``strict=True`` the corresponding
    :class:`~orbkit.errors.CircularOrbit` / :class:`~orbkit.errors.EquatorialOrbit`
    is raised instead.
    """
    cv = frames.conserved_vectors(s.r, s.v, s.mu)
    hn = np.linalg.norm(cv.h)
    hhat = cv.h / hn
    e = float(np.linalg.norm(cv.e))
    p = hn * hn / s.mu
    if e >= 1.0:
        raise HyperbolicPoint(f"state is not elliptic (e={e})")
    a = p / (1.0 - e * e)
    i = math.acos(min(1.0, max(-1.0, hhat[2])))
    rhat = s.r / np.linalg.norm(s.r)
    flags = set()
    try:
        n = frames.line_of_nodes(cv.h)
    except EquatorialOrbit:
        if strict:
            raise
        flags.add(FLAG_EQUATORIAL)
        n = np.array([1.0, 0.0, 0.0])
    raan = 0.0 if FLAG_EQUATORIAL in flags else math.atan2(n[1], n[0])
    m = np.cross(hhat, n)
    if e <= 1e-10:
        if strict:
            raise CircularOrbit("eccentricity ~ 0: argument of periapse undefined")
        flags.add(FLAG_CIRCULAR)
        argp = 0.0
        nu = math.atan2(rhat @ m, rhat @ n)
    else:
        ehat = cv.e / e
        argp = math.atan2(ehat @ m, ehat @ n)
        q = np.cross(hhat, ehat)
        nu = math.atan2(rhat @ q, rhat @ ehat)
    return CoeSet(a, e, i, raan, argp, nu, s.mu, frozenset(flags))


def coe_to_mee(c: CoeSet) -> MeeSet:
    _check_coe(c)
    if c.i >= math.pi - 1e-9:
        raise MeeSingular("inclination ~ pi: equinoctial CRPs are infinite")
    varpi = c.raan + c.argp
    t = math.tan(0.5 * c.i)
    return MeeSet(
        p=c.a * (1.0 - c.e * c.e),
        e1=c.e * math.cos(varpi),
        e2=c.e * math.sin(varpi),
        q1=t * math.cos(c.raan),
        q2=t * math.sin(c.raan),
        l=varpi + c.nu,
        mu=c.mu,
    )


def coe_to_mrpmee(c: CoeSet) -> MrpMeeSet:
    _check_coe(c)
    varpi = c.raan + c.argp
    t = math.tan(0.25 * c.i)
    return MrpMeeSet(
        p=c.a * (1.0 - c.e * c.e),
        e1=c.e * math.cos(varpi),
        e2=c.e * math.sin(varpi),
        sigma1=t * math.cos(c.raan),
        sigma2=t * math.sin(c.raan),
        l=varpi + c.nu,
        mu=c.mu,
    )


def _equinoctial_to_coe(p, e1, e2, x1, x2, l, mu, i) -> CoeSet:
    e = math.hypot(e1, e2)
    flags = set()
    if math.hypot(x1, x2) <= 1e-15:
        flags.add(FLAG_EQUATORIAL)
        raan = 0.0
    else:
        raan = math.atan2(x2, x1)
    if e <= 1e-15:
        flags.add(FLAG_CIRCULAR)
        varpi = raan
    else:
        varpi = math.atan2(e2, e1)
    return CoeSet(
        a=p / (1.0 - e * e),
        e=e,
        i=i,
        raan=raan,
        argp=wrap_pi(varpi - raan),
        nu=wrap_pi(l - varpi),
        mu=mu,
        flags=frozenset(flags),
    )


def mee_to_coe(m: MeeSet) -> CoeSet:
    i = 2.0 * math.atan(math.hypot(m.q1, m.q2))
    return _equinoctial_to_coe(m.p, m.e1, m.e2, m.q1, m.q2, m.l, m.mu, i)


def mrpmee_to_coe(x: MrpMeeSet) -> CoeSet:
    i = 4.0 * math.atan(math.hypot(x.sigma1, x.sigma2))
    return _equinoctial_to_coe(x.p, x.e1, x.e2, x.sigma1, x.sigma2, x.l, x.mu, i)


def q_to_sigma(q1: float, q2: float) -> tuple[float, float]:
    d = 1.0 + math.sqrt(1.0 + q1 * q1 + q2 * q2)
    return q1 / d, q2 / d


def sigma_to_q(s1: float, s2: float) -> tuple[float, float]:
    d = 1.0 - s1 * s1 - s2 * s2
    if d <= 1e-9:
        raise MrpAtUnitSphere("sigma1^2 + sigma2^2 ~ 1: equinoctial CRPs are infinite")
    return 2.0 * s1 / d, 2.0 * s2 / d


def mee_to_mrpmee(m: MeeSet) -> MrpMeeSet:
    s1, s2 = q_to_sigma(m.q1, m.q2)
    return MrpMeeSet(m.p, m.e1, m.e2, s1, s2, m.l, m.mu)


def mrpmee_to_mee(x: MrpMeeSet) -> MeeSet:
    q1, q2 = sigma_to_q(x.sigma1, x.sigma2)
    return MeeSet(x.p, x.e1, x.e2, q1, q2, x.l, x.mu)


def _equinoctial_rv(p, e1, e2, l, mu, rot):
    cl, sl = math.cos(l), math.sin(l)
    w = 1.0 + e1 * cl + e2 * sl
    if w <= 0.0:
        raise HyperbolicPoint(f"w = 1 + e1 cos l + e2 sin l = {w:.3e} <= 0")
    r = p / w
    vs = math.sqrt(mu / p)
    r_s = np.array([r * cl, r * sl, 0.0])
    v_s = np.array([-vs * (e2 + sl), vs * (e1 + cl), 0.0])
    return rot @ r_s, rot @ v_s


def mee_to_cartesian(m: MeeSet) -> CartesianState:
    r, v = _equinoctial_rv(m.p, m.e1, m.e2, m.l, m.mu, frames.equinoctial_matrix_crp(m.q1, m.q2))
    return CartesianState(r, v, m.mu)


def mrpmee_to_cartesian(x: MrpMeeSet) -> CartesianState:
    r, v = _equinoctial_rv(
        x.p, x.e1, x.e2, x.l, x.mu, frames.equinoctial_matrix_mrp(x.sigma1, x.sigma2)
    )
    return CartesianState(r, v, x.mu)


def cartesian_to_mee(s: CartesianState) -> MeeSet:
    cv = frames.conserved_vectors(s.r, s.v, s.mu)
    hn = float(np.linalg.norm(cv.h))
    q1, q2 = frames.crp_from_hhat(cv.h / hn)
    rot = frames.equinoctial_matrix_crp(q1, q2)
    e_s = rot.T @ cv.e
    r_s = rot.T @ s.r
    return MeeSet(
        p=hn * hn / s.mu,
        e1=float(e_s[0]),
        e2=float(e_s[1]),
        q1=q1,
        q2=q2,
        l=math.atan2(r_s[1], r_s[0]),
        mu=s.mu,
    )


def cartesian_to_mrpmee(s: CartesianState) -> MrpMeeSet:
    return mee_to_mrpmee(cartesian_to_mee(s))


def kepler_longitude(lam: float, e1: float, e2: float, tol: float = 1e-13, max_iter: int = 50) -> float:
    """Eccentric longitude solving ``lam = eps - e1 sin eps + e2 cos eps``."""
    if e1 * e1 + e2 * e2 >= 1.0:
        raise HyperbolicPoint("Kepler's equation in longitude form needs e1^2 + e2^2 < 1")
    eps = lam
    for _ in range(max_iter):
        se, ce = math.sin(eps), math.cos(eps)
        f = eps - e1 * se + e2 * ce - lam
        fp = 1.0 - e1 * ce - e2 * se
        step = f / fp
        eps -= step
        if abs(step) <= tol * max(1.0, abs(eps)):
            se, ce = math.sin(eps), math.cos(eps)
            if abs(eps - e1 * se + e2 * ce - lam) < 1e-12 * max(1.0, abs(lam)):
                return eps
    raise NoConvergence(f"Kepler longitude iteration did not converge for lam={lam}")


def _sigma_jacobians_2d(s1: float, s2: float) -> tuple[np.ndarray, np.ndarray]:
    from .attitude import Mrp, crp_mrp_jacobians

    if s1 * s1 + s2 * s2 >= 1.0 - 1e-9:
        raise MrpAtUnitSphere("sigma1^2 + sigma2^2 ~ 1: costate transform undefined")
    dq_ds, ds_dq = crp_mrp_jacobians(Mrp([s1, s2, 0.0]))
    return dq_ds[:2, :2], ds_dq[:2, :2]


def costate_transform(lambda_sigma, sigma) -> np.ndarray:
    """MRP-MEE costates ``(lambda_s1, lambda_s2)`` to CRP-MEE costates ``(gamma_q1, gamma_q2)``."""
    _, ds_dq = _sigma_jacobians_2d(float(sigma[0]), float(sigma[1]))
    return ds_dq.T @ np.asarray(lambda_sigma, dtype=float)


def costate_transform_inverse(gamma_q, sigma) -> np.ndarray:
    dq_ds, _ = _sigma_jacobians_2d(float(sigma[0]), float(sigma[1]))
    return dq_ds.T @ np.asarray(gamma_q, dtype=float)


def costates_mrp_to_crp(lam6, x6) -> np.ndarray:
    """Full six-costate map; only the orientation pair changes."""
    lam6 = np.asarray(lam6, dtype=float)
    out = lam6.copy()
    out[3:5] = costate_transform(lam6[3:5], x6[3:5])
    return out


def costates_crp_to_mrp(gam6, x6_mrp) -> np.ndarray:
    gam6 = np.asarray(gam6, dtype=float)
    out = gam6.copy()
    out[3:5] = costate_transform_inverse(gam6[3:5], x6_mrp[3:5])
    return out


# serialization

_SET_NAMES = {"coe": CoeSet, "mee": MeeSet, "mrpmee": MrpMeeSet, "cartesian": CartesianState}


def set_name(state) -> str:
    for k, t in _SET_NAMES.items():
        if isinstance(state, t):
            return k
    raise InputError(f"unknown element set type {type(state).__name__}")


def to_dict(state) -> dict:
    name = set_name(state)
    if name == "cartesian":
        return {"set": name, "r": state.r.tolist(), "v": state.v.tolist(), "mu": state.mu}
    d = {"set": name}
    d.update({k: float(v) for k, v in asdict(state).items() if k != "flags"})
    if name == "coe" and state.flags:
        d["flags"] = sorted(state.flags)
    return d


def from_dict(d: dict, default_set: str | None = None):
    if not isinstance(d, dict):
        raise InputError("element JSON must be an object")
    name = d.get("set", default_set)
    if name not in _SET_NAMES:
        raise InputError(f"unknown or missing element set {name!r}")
    cls = _SET_NAMES[name]
    try:
        if name == "cartesian":
            return CartesianState(d["r"], d["v"], float(d["mu"]))
        kw = {f.name: float(d[f.name]) for f in fields(cls) if f.name != "flags"}
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad {name} JSON: {exc}") from exc
    return cls(**kw)


_CONVERTERS_FROM = {
    "coe": coe_to_cartesian,
    "mee": mee_to_cartesian,
    "mrpmee": mrpmee_to_cartesian,
    "cartesian": lambda s: s,
}
_CONVERTERS_TO = {
    "coe": cartesian_to_coe,
    "mee": cartesian_to_mee,
    "mrpmee": cartesian_to_mrpmee,
    "cartesian": lambda s: s,
}


def convert(state, target: str):
    """Convert any element set to ``target`` (``coe|mee|mrpmee|cartesian``)."""
    src = set_name(state)
    if target not in _SET_NAMES:
        raise InputError(f"unknown target set {target!r}")
    if src == target:
        return state
    direct = {
        ("coe", "mee"): coe_to_mee,
        ("coe", "mrpmee"): coe_to_mrpmee,
        ("mee", "coe"): mee_to_coe,
        ("mrpmee", "coe"): mrpmee_to_coe,
        ("mee", "mrpmee"): mee_to_mrpmee,
        ("mrpmee", "mee"): mrpmee_to_mee,
    }
    if (src, target) in direct:
        return direct[(src, target)](state)
    return _CONVERTERS_TO[target](_CONVERTERS_FROM[src](state))
