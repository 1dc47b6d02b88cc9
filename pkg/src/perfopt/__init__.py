"""Tree-search minimization of the performative risk.

Decision-dependent environments, parameter-free tree searches for full and
sampled performative feedback, grid-zooming and black-box baselines, regret
metrics, theory calculators, and a benchmark harness.
"""

from .analysis import (
    BoundResult,
    RegimeParams,
    bound_data,
    bound_full,
    grid_lipschitz,
    lambert_w,
    near_opt_dim,
    regime_params,
)
from .baselines import GridArm, make_grid, run_blackbox, run_szooming
from .doop import doop_hmax, run_doop, run_schedule
from .environment import (
    AdditiveExpEnv,
    DistributionHandle,
    SampleSet,
    ackley,
    dpr_exact,
    empirical_dpr,
    make_env,
    rastrigin,
)
from .errors import BudgetExhausted, BudgetTooSmallError, DomainError
from .harness import ExperimentConfig, analyze_dir, dump_oracle, run_experiment
from .metrics import DeployClient, RunTrace, record_deploy
from .partition import BoxDomain, Cell, candidate_points, root
from .soop import open_stochastic, run_soop, soop_budgets

__version__ = "0.1.0"

__all__ = [
    "AdditiveExpEnv",
    "BoundResult",
    "BoxDomain",
    "BudgetExhausted",
    "BudgetTooSmallError",
    "Cell",
    "DeployClient",
    "DistributionHandle",
    "DomainError",
    "ExperimentConfig",
    "GridArm",
    "RegimeParams",
    "RunTrace",
    "SampleSet",
    "ackley",
    "analyze_dir",
    "bound_data",
    "bound_full",
    "candidate_points",
    "doop_hmax",
    "dpr_exact",
    "dump_oracle",
    "empirical_dpr",
    "grid_lipschitz",
    "lambert_w",
    "make_env",
    "make_grid",
    "near_opt_dim",
    "open_stochastic",
    "rastrigin",
    "record_deploy",
    "regime_params",
    "root",
    "run_blackbox",
    "run_doop",
    "run_experiment",
    "run_schedule",
    "run_soop",
    "run_szooming",
    "soop_budgets",
]
