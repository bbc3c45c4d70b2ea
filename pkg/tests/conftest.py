import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "orbkit", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("orbkit")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unit(rng, n=None):
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@pytest.fixture(scope="session")
def nea_mrp():
    """Bundled Earth-to-NEA transfer solved in MRP MEEs from the reference guess."""
    from orbkit.optctrl import bundled_problem, solve_tpbvp

    p = bundled_problem("mrpmee")
    return p, solve_tpbvp(p, p.initial_guess())


@pytest.fixture(scope="session")
def nea_mee():
    from orbkit.optctrl import bundled_problem, solve_tpbvp

    p = bundled_problem("mee")
    return p, solve_tpbvp(p, p.initial_guess())


ACCEPTANCE: dict = {}


def record(criterion: int, part: str, ok: bool, detail: str = "") -> bool:
    """Log one checked part of an acceptance criterion for the end-of-run summary."""
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if ok else 'FAIL'} {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict}")
        for part, ok, detail in parts:
            terminalreporter.write_line(f"    {'ok  ' if ok else 'FAIL'} {part}: {detail}")
