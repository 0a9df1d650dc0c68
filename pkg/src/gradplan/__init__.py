"""gradplan: planning by backpropagation through unrolled hybrid dynamics.

Action sequences for known discrete-time transition/reward models are
optimized directly by projected gradient descent (RMSProp family) over a
batch of independently initialized problem instances; the best instance wins.
Hot tape sweeps run in a compiled Cython core when built, with a pure-NumPy
fallback selected automatically at import.
"""

from . import domains, engines
from .baselines import heuristic_rollout
from .errors import (
    ConfigError,
    EvalError,
    GradplanError,
    NonFiniteError,
    NumericalError,
    OracleError,
    RolloutError,
    StateError,
    StepError,
    TapeError,
)
from .fdiff import finite_difference_gradient
from .ir import Op
from .optimizers import make_optimizer
from .planner import (
    ActionTensor,
    PlannerConfig,
    PlanResult,
    RolloutGraph,
    Trajectory,
    batch_loss,
    init_actions,
    optimizer_step,
    plan,
    project,
    project_discrete,
    rollout,
    select_best,
)
from .tape import Sym, Tape, backward, forward, piecewise_margin, record

__version__ = "0.1.0"

engine_name = engines.engine_name
