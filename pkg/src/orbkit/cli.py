"""Command-line interface.

Subcommands::

    orbkit convert   --from SET --to SET [INPUT] [--out FILE]
    orbkit propagate CONFIG --set {mee,mrpmee,coe,cartesian} [--out CSV] [--rtol R --atol A]
    orbkit solve     [PROBLEM] [--set {mrpmee,mee}] [--out JSON] [--traj CSV] [--rho-schedule LIST]
    orbkit stats     [PROBLEM] --trials N --seed S [--set {mrpmee,mee}] [--reference] [--no-time]

Element JSON uses lowercase field names (``a, e, i, raan, argp, nu`` /
``p, e1, e2, q1, q2, l`` / ``p, e1, e2, sigma1, sigma2, l`` / ``r, v``) plus
``mu``, with km, km/s and radians.  CSV output is in canonical units; the
first line is a ``#`` comment naming the schema version and the units.

Exit codes: 0 success, 2 input error, 3 domain error, 4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import elements as el
from .dynamics import LvlhAccel, make_rhs
from .errors import DomainError, InputError, IntegrationError, OrbkitError, SolverError
from .propagate import IntegratorConfig, integrate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DOMAIN = 3
EXIT_SOLVER = 4

CSV_VERSION = 1
SETS = ("coe", "mee", "mrpmee", "cartesian")
ELEMENT_COLUMNS = {
    "coe": ["a", "e", "i", "raan", "argp", "nu"],
    "mee": ["p", "e1", "e2", "q1", "q2", "l"],
    "mrpmee": ["p", "e1", "e2", "sigma1", "sigma2", "l"],
    "cartesian": ["rx", "ry", "rz", "vx", "vy", "vz"],
}
TRAJ_COLUMNS = (
    ["t", "p", "e1", "e2", "x4", "x5", "l", "m"]
    + [f"lam{i}" for i in range(1, 7)]
    + ["lam_m", "delta", "alpha1", "alpha2", "alpha3", "S_tilde", "H"]
)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _read_json(src: str | None):
    try:
        text = sys.stdin.read() if src in (None, "-") else Path(src).read_text()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse JSON input: {exc}") from exc


def _write_text(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def csv_header(kind: str, du_km: float, tu_s: float, extra: str = "") -> str:
    line = f"# orbkit-{kind} v{CSV_VERSION} du_km={du_km!r} tu_s={tu_s!r}"
    return line + (f" {extra}" if extra else "")


def read_csv(path: str | Path) -> tuple[dict, list[str], np.ndarray]:
    """Parse a CSV written by this CLI; returns ``(meta, columns, data)``."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# orbkit-"):
        raise InputError("missing orbkit CSV header comment")
    head = lines[0][2:].split()
    meta = {"schema": head[0], "version": int(head[1].lstrip("v"))}
    for tok in head[2:]:
        k, _, v = tok.partition("=")
        try:
            meta[k] = float(v)
        except ValueError:
            meta[k] = v
    rows = list(csv.reader(lines[1:]))
    cols = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]) if len(rows) > 1 else np.empty((0, len(cols)))
    return meta, cols, data


# convert

def cmd_convert(args) -> int:
    d = _read_json(args.input)
    state = el.from_dict(d, default_set=args.from_set)
    if el.set_name(state) != args.from_set:
        raise InputError(f"input is a {el.set_name(state)!r} state, expected {args.from_set!r}")
    out = el.convert(state, args.to_set)
    _write_text(json.dumps(el.to_dict(out), indent=2) + "\n", args.out)
    return EXIT_OK


# propagate

def cmd_propagate(args) -> int:
    cfg = _read_json(args.config)
    if not isinstance(cfg, dict) or "state" not in cfg:
        raise InputError("propagate config needs a 'state' object")
    state = el.from_dict(cfg["state"], default_set=cfg["state"].get("set"))
    mu = state.mu
    du = float(cfg.get("du_km", 1.495978707e8))
    tu = math.sqrt(du ** 3 / mu)
    target = args.set or cfg.get("set", "mrpmee")
    try:
        duration = float(cfg["duration_s"]) / tu
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad duration_s: {exc}") from exc
    acc = np.asarray(cfg.get("thrust_lvlh_kms2", [0.0, 0.0, 0.0]), dtype=float) / (du / tu ** 2)
    if acc.shape != (3,):
        raise InputError("thrust_lvlh_kms2 must have three components")
    canon = el.convert(_to_canonical(el.convert(state, "cartesian"), du, tu), target)
    y0 = el.CartesianState(canon.r, canon.v, 1.0).as_array() if target == "cartesian" else canon.as_array()
    accel = None if not np.any(acc) else (lambda t, y: LvlhAccel.of(acc))
    rhs = make_rhs(target, 1.0, accel)
    tol = cfg.get("tolerances", {})
    icfg = IntegratorConfig(
        rel_tol=args.rtol or float(tol.get("rtol", 1e-12)),
        abs_tol=args.atol or float(tol.get("atol", 1e-12)),
    )
    n_out = int(cfg.get("samples", 0))
    grid = np.linspace(0.0, duration, n_out) if n_out >= 2 else None
    last_t = [0.0]

    def guarded(t, y):
        last_t[0] = t
        return rhs(t, y)

    try:
        traj = integrate(guarded, y0, 0.0, duration, icfg, t_eval=grid)
    except DomainError as exc:
        raise DomainError(f"{exc} (at t={last_t[0]!r} canonical)") from exc
    lines = [csv_header("propagate", du, tu, f"set={target}")]
    cols = ["t"] + ELEMENT_COLUMNS[target] + ["rx", "ry", "rz", "vx", "vy", "vz"]
    lines.append(",".join(cols))
    for t, y in zip(traj.times, traj.states):
        cart = _state_to_cartesian(target, y)
        vals = [t, *y, *cart]
        lines.append(",".join(repr(float(v)) for v in vals))
    _write_text("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _to_canonical(c: el.CartesianState, du: float, tu: float) -> el.CartesianState:
    return el.CartesianState(c.r / du, c.v / (du / tu), 1.0)


def _state_to_cartesian(set_: str, y) -> np.ndarray:
    if set_ == "cartesian":
        return np.asarray(y)
    cls = {"coe": el.CoeSet, "mee": el.MeeSet, "mrpmee": el.MrpMeeSet}[set_]
    return el.convert(cls(*y, mu=1.0), "cartesian").as_array()


# solve / stats

def _load_problem(path: str | None, set_: str | None, rho_schedule: str | None, args=None):
    from .optctrl import bundled_problem_path, problem_from_dict

    d = _read_json(path if path else str(bundled_problem_path()))
    if not isinstance(d, dict):
        raise InputError("problem JSON must be an object")
    if set_:
        d["element_set"] = set_
    if rho_schedule:
        try:
            d["rho_schedule"] = [float(v) for v in rho_schedule.split(",")]
        except ValueError as exc:
            raise InputError(f"bad --rho-schedule: {exc}") from exc
    if args is not None:
        tol = dict(d.get("tolerances", {}))
        if getattr(args, "rtol", None):
            tol["rtol"] = args.rtol
        if getattr(args, "atol", None):
            tol["atol"] = args.atol
        d["tolerances"] = tol
    return d, problem_from_dict(d)


def trajectory_rows(problem, sol):
    """Rows of the solve CSV: state, costates, control and Hamiltonian per step."""
    from .optctrl.core import AugmentedState, control_law, hamiltonian

    cls = el.MrpMeeSet if problem.element_set == "mrpmee" else el.MeeSet
    c = problem.c_canonical
    thrust = problem.thrust_canonical
    rho = sol.rho_final
    rows = []
    for t, y in zip(sol.trajectory.times, sol.trajectory.states):
        s = AugmentedState.from_array(y)
        x = cls(*s.x, mu=1.0)
        u = control_law(x, s.m, s.lam, s.lam_m, rho, c)
        a = thrust * u.delta / s.m * u.alpha_hat
        H = hamiltonian(x, s.m, s.lam, s.lam_m, a, c)
        rows.append([t, *y, u.delta, *u.alpha_hat, u.s_tilde, H])
    return rows


def cmd_solve(args) -> int:
    from .errors import JacobianSingular, NewtonStalled
    from .optctrl import solve_tpbvp

    _, problem = _load_problem(args.problem, args.set, args.rho_schedule, args)
    guess = problem.initial_guess()
    if args.seed is not None or guess is None:
        from .optctrl import random_guess

        guess = random_guess(problem.seed if args.seed is None else args.seed, 0)
    code = EXIT_OK
    try:
        sol = solve_tpbvp(problem, guess)
    except (NewtonStalled, JacobianSingular) as exc:
        sol = exc.partial
        code = EXIT_SOLVER
        print(f"orbkit: {exc}", file=sys.stderr)
    if sol is None:
        return EXIT_SOLVER
    _write_text(json.dumps(sol.to_dict(), indent=2) + "\n", args.out)
    if args.traj and sol.trajectory is not None:
        lines = [csv_header("trajectory", problem.units.du, problem.units.tu,
                            f"set={problem.element_set} rho={sol.rho_final!r}")]
        lines.append(",".join(TRAJ_COLUMNS))
        for row in trajectory_rows(problem, sol):
            lines.append(",".join(repr(float(v)) for v in row))
        Path(args.traj).write_text("\n".join(lines) + "\n")
    return code


def cmd_stats(args) -> int:
    from .optctrl import multistart_stats

    _, problem = _load_problem(args.problem, args.set, args.rho_schedule, args)
    seed = problem.seed if args.seed is None else args.seed
    st = multistart_stats(problem, args.trials, seed, use_reference=args.reference)
    head = f"{'set':<8} {'trials':>6} {'success %':>9} {'mean iters':>10} {'mean fevals':>11}"
    row = (f"{st['element_set']:<8} {st['trials']:>6d} {100 * st['success_rate']:>9.1f} "
           f"{st['mean_iters']:>10.1f} {st['mean_fevals']:>11.1f}")
    if not args.no_time:
        head += f" {'mean time s':>11}"
        row += f" {st['mean_time']:>11.2f}"
    _write_text(head + "\n" + row + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="orbkit", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    c = sub.add_parser("convert", help="convert an element set")
    c.add_argument("input", nargs="?", help="input JSON (default stdin)")
    c.add_argument("--from", dest="from_set", required=True, choices=SETS)
    c.add_argument("--to", dest="to_set", required=True, choices=SETS)
    c.add_argument("--out")
    c.set_defaults(func=cmd_convert)

    pr = sub.add_parser("propagate", help="propagate a state under constant LVLH thrust")
    pr.add_argument("config", nargs="?", help="config JSON (default stdin)")
    pr.add_argument("--set", choices=SETS)
    pr.add_argument("--out")
    pr.add_argument("--rtol", type=float)
    pr.add_argument("--atol", type=float)
    pr.set_defaults(func=cmd_propagate)

    s = sub.add_parser("solve", help="solve a minimum-fuel transfer")
    s.add_argument("problem", nargs="?", help="problem JSON (default: bundled Earth to 2001 AU43)")
    s.add_argument("--set", choices=("mrpmee", "mee"))
    s.add_argument("--out")
    s.add_argument("--traj")
    s.add_argument("--seed", type=int, help="start from a random guess with this seed")
    s.add_argument("--rtol", type=float)
    s.add_argument("--atol", type=float)
    s.add_argument("--rho-schedule", dest="rho_schedule")
    s.set_defaults(func=cmd_solve)

    st = sub.add_parser("stats", help="multistart convergence statistics")
    st.add_argument("problem", nargs="?")
    st.add_argument("--set", choices=("mrpmee", "mee"))
    st.add_argument("--trials", type=int, default=50)
    st.add_argument("--seed", type=int)
    st.add_argument("--out")
    st.add_argument("--rtol", type=float)
    st.add_argument("--atol", type=float)
    st.add_argument("--rho-schedule", dest="rho_schedule")
    st.add_argument("--reference", action="store_true", help="use the problem's reference guess for trial 0")
    st.add_argument("--no-time", action="store_true", help="omit wall time (byte-stable output)")
    st.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"orbkit: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DomainError, IntegrationError) as exc:
        print(f"orbkit: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SolverError as exc:
        print(f"orbkit: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OrbkitError as exc:
        print(f"orbkit: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
