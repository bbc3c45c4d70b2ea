"""Indirect minimum-fuel low-thrust optimization in MRP (or CRP) equinoctial elements."""

from .core import (
    AugmentedState,
    ControlOutput,
    augmented_rhs,
    augmented_rhs_array,
    b_gradients,
    control_law,
    costate_rates,
    hamiltonian,
    hamiltonian_drift_rate,
    k6_gradient,
    rh_gradient,
    smoothed_hamiltonian,
    throttle_entropy,
)
from .problem import (
    AU_KM,
    DEFAULT_RHO_SCHEDULE,
    MU_SUN,
    CanonicalUnits,
    Engine,
    SolverTols,
    TransferProblem,
    TransferSolution,
    bundled_problem,
    bundled_problem_path,
    load_problem,
    problem_from_dict,
    target_longitude,
)
from .shooting import (
    TrialRecord,
    multistart_stats,
    propagate_costates,
    random_guess,
    shoot,
    solve_tpbvp,
)

__all__ = [name for name in dir() if not name.startswith("_")]
