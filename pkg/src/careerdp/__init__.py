"""Career choice between public self-employment and opaque wage work.

Solvers for the employment-cutoff policies under naive and pool-anticipating
wage posting, on exact Beta beliefs (finite horizon and stationary lattice)
and on discretized belief grids with an optional noisy on-the-job signal,
plus a Monte Carlo career simulator and a small CLI.
"""

from .betadist import (
    BetaParams,
    Drift,
    incomplete_beta,
    one_step_drift,
    posterior_mean,
    truncated_mean,
    truncated_mean_derivative,
    update,
)
from .finite import (
    FiniteHorizonSpec,
    FinitePolicy,
    UnreachableStateError,
    branch_wages,
    solve_finite,
    value_at,
)
from .gridbelief import (
    BeliefVector,
    DegenerateBeliefError,
    FiniteGridHorizon,
    GridPolicy,
    SignalSpec,
    StationaryGridHorizon,
    bayes_update,
    discretize_beta,
    firm_signal_update,
    persistent_employment_mass,
    solve_grid,
)
from .model import (
    CutoffWage,
    Preferences,
    PricingRegime,
    SolverFailureError,
    indifference_gap,
    solve_cutoff,
    utility,
    zero_continuation,
)
from .runio import ConfigError, RunConfig, load_config
from .simulate import (
    Action,
    SimSpec,
    SummaryStats,
    ThetaSource,
    Trajectory,
    UnconvergedPolicyError,
    aggregate,
    simulate,
)
from .stationary import (
    LatticeSpec,
    StationarySolution,
    SweepPoint,
    absorbing_region,
    sweep,
    value_iterate,
)

__version__ = "0.1.0"
