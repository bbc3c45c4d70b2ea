import json
import math

import numpy as np
import pytest

from orbkit.cli import EXIT_DOMAIN, EXIT_INPUT, EXIT_OK, TRAJ_COLUMNS, main, read_csv

MU = 1.32712440018e11
DU = 1.495978707e8
NEA = {"a": 2.83738e8, "e": 0.3765, "i": 1.2593, "raan": 2.2567, "argp": 2.60614, "nu": 0.634857, "mu": MU}
EARTH = {"a": 1.497251e8, "e": 0.0173, "i": 7.6438e-5, "raan": 2.8152, "argp": 5.2940, "nu": 0.7221, "mu": MU}


def _json_file(tmp_path, name, obj):
    f = tmp_path / name
    f.write_text(json.dumps(obj))
    return str(f)


def _run_json(capsys, argv):
    assert main(argv) == EXIT_OK
    return json.loads(capsys.readouterr().out)


def test_convert_nea_to_mrpmee(tmp_path, capsys):
    out = _run_json(capsys, ["convert", "--from", "coe", "--to", "mrpmee", _json_file(tmp_path, "n.json", NEA)])
    s2 = out["sigma1"] ** 2 + out["sigma2"] ** 2
    assert s2 == pytest.approx(math.tan(NEA["i"] / 4) ** 2, rel=1e-13)
    assert s2 == pytest.approx(0.10605174807632246, rel=1e-12)
    assert out["p"] == pytest.approx(NEA["a"] * (1 - NEA["e"] ** 2), rel=1e-14)


def test_convert_passthrough(tmp_path, capsys):
    out = _run_json(capsys, ["convert", "--from", "coe", "--to", "coe", _json_file(tmp_path, "n.json", NEA)])
    for k, v in NEA.items():
        assert out[k] == v


def test_convert_round_trip_through_files(tmp_path, capsys):
    f1, f2 = tmp_path / "m.json", tmp_path / "c.json"
    assert main(["convert", "--from", "coe", "--to", "mee", _json_file(tmp_path, "e.json", EARTH), "--out", str(f1)]) == 0
    assert main(["convert", "--from", "mee", "--to", "cartesian", str(f1), "--out", str(f2)]) == 0
    out = _run_json(capsys, ["convert", "--from", "cartesian", "--to", "coe", str(f2)])
    for k in ("a", "e"):
        assert out[k] == pytest.approx(EARTH[k], rel=1e-10)
    assert out["i"] == pytest.approx(EARTH["i"], abs=1e-11)


def test_convert_retrograde_equatorial(tmp_path, capsys):
    bad = {"r": [1.5e8, 0.0, 0.0], "v": [0.0, -30.0, 0.0], "mu": MU}
    rc = main(["convert", "--from", "cartesian", "--to", "mee", _json_file(tmp_path, "r.json", bad)])
    assert rc == EXIT_DOMAIN
    assert "retrograde equatorial" in capsys.readouterr().err


def test_input_errors(tmp_path, capsys):
    broken = tmp_path / "b.json"
    broken.write_text("{not json")
    assert main(["convert", "--from", "coe", "--to", "mee", str(broken)]) == EXIT_INPUT
    assert main(["convert", "--from", "coe", "--to", "nope", str(broken)]) == EXIT_INPUT
    assert main(["propagate", str(broken)]) == EXIT_INPUT
    assert main(["solve", str(broken)]) == EXIT_INPUT
    wrong = _json_file(tmp_path, "w.json", {"p": 1.0, "e1": 0, "e2": 0, "q1": 0, "q2": 0, "l": 0, "mu": 1.0})
    assert main(["convert", "--from", "coe", "--to", "mee", wrong]) == EXIT_INPUT
    assert main(["propagate", _json_file(tmp_path, "x.json", {"state": EARTH})]) == EXIT_INPUT
    capsys.readouterr()


def _period_s(coe):
    return 2 * math.pi * math.sqrt(coe["a"] ** 3 / coe["mu"])


def _propagate(tmp_path, cfg, *flags):
    cfg = dict(cfg, state=dict(cfg["state"], set="coe"))
    out = tmp_path / f"traj_{len(list(tmp_path.iterdir()))}.csv"
    rc = main(["propagate", _json_file(tmp_path, "cfg.json", cfg), "--out", str(out), *flags])
    return rc, out


def test_propagate_keplerian_conservation(tmp_path):
    cfg = {"state": EARTH, "duration_s": 10 * _period_s(EARTH), "samples": 50}
    for s in ("mee", "mrpmee"):
        rc, out = _propagate(tmp_path, cfg, "--set", s)
        assert rc == EXIT_OK
        meta, cols, data = read_csv(out)
        assert meta["schema"] == "orbkit-propagate" and meta["version"] == 1 and meta["set"] == s
        assert meta["du_km"] == DU
        assert cols[:7] == ["t"] + (["p", "e1", "e2", "q1", "q2", "l"] if s == "mee"
                                    else ["p", "e1", "e2", "sigma1", "sigma2", "l"])
        assert data.shape == (50, 13)
        assert np.max(np.abs(data[:, 1:6] - data[0, 1:6])) < 1e-10
        assert data[-1, 6] - data[0, 6] == pytest.approx(20 * math.pi, abs=1e-8)


def test_propagate_cross_set_agreement(tmp_path):
    acc_unit = DU / (DU ** 3 / MU)
    cfg = {"state": NEA, "duration_s": _period_s(NEA), "thrust_lvlh_kms2": [1e-7 * acc_unit, -5e-8 * acc_unit, 7e-8 * acc_unit]}
    finals = {}
    for s in ("mee", "mrpmee"):
        rc, out = _propagate(tmp_path, cfg, "--set", s)
        assert rc == EXIT_OK
        finals[s] = read_csv(out)[2][-1, 7:]
    assert np.max(np.abs(finals["mee"] - finals["mrpmee"])) < 1e-9


def test_propagate_domain_error_names_time(tmp_path, capsys):
    circ = dict(EARTH, e=0.0)
    rc, _ = _propagate(tmp_path, {"state": circ, "duration_s": 1e6}, "--set", "coe")
    assert rc == EXIT_DOMAIN
    assert "t=" in capsys.readouterr().err


def test_propagate_deterministic(tmp_path):
    cfg = {"state": NEA, "duration_s": 1e7, "thrust_lvlh_kms2": [1e-9, 0, 0]}
    _, a = _propagate(tmp_path, cfg)
    _, b = _propagate(tmp_path, cfg)
    assert a.read_bytes() == b.read_bytes()


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    d = tmp_path_factory.mktemp("solve")
    rc = main(["solve", "--out", str(d / "sol.json"), "--traj", str(d / "traj.csv")])
    return rc, json.loads((d / "sol.json").read_text()), read_csv(d / "traj.csv")


def test_solve_bundled(solved):
    rc, sol, _ = solved
    assert rc == EXIT_OK
    assert sol["converged"] and sol["residual_norm"] < 1e-9
    assert sol["final_mass_kg"] < 2800.0
    assert len(sol["lam0"]) == 6
    assert [h["rho"] for h in sol["per_rho"]][-1] == 1e-4


def test_solve_trajectory_csv(solved):
    _, _, (meta, cols, data) = solved
    assert meta["schema"] == "orbkit-trajectory" and meta["set"] == "mrpmee"
    assert cols == TRAJ_COLUMNS
    delta = data[:, cols.index("delta")]
    assert np.mean(delta < 0.01) >= 0.05
    assert np.mean(delta > 0.99) >= 0.05
    assert abs(data[-1, cols.index("lam_m")]) < 1e-9


def test_solve_stall_exit_code(tmp_path, capsys):
    from orbkit.optctrl import bundled_problem_path

    d = json.loads(bundled_problem_path().read_text())
    d["tolerances"]["max_newton_iters"] = 1
    out = tmp_path / "s.json"
    rc = main(["solve", _json_file(tmp_path, "p.json", d), "--out", str(out)])
    assert rc == 4
    part = json.loads(out.read_text())
    assert part["converged"] is False and part["per_rho"][-1]["converged"] is False
    assert "stalled" in capsys.readouterr().err


def test_stats_reference_trial(tmp_path, capsys):
    outs = []
    for _ in range(2):
        assert main(["stats", "--trials", "1", "--reference", "--no-time"]) == EXIT_OK
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    head, row = outs[0].splitlines()
    assert head.split()[:3] == ["set", "trials", "success"]
    assert row.split()[:3] == ["mrpmee", "1", "100.0"]
