"""Symmetry-equivariant quantum circuits for physics-informed PDE solving.

The pieces compose left to right: ``symmetry`` twirls a seed pool into an
equivariant generator set, ``ansatz`` assembles the data re-uploading
circuits from those generators, ``pde`` defines the collocation problems,
``optimize`` trains with warm-started L-BFGS, ``classical`` holds the MLP
baselines, and ``expressibility`` measures distance from Haar.  The ``cli``
module exposes the same machinery as the ``symqpde`` command.
"""

from .ansatz import ANSATZ_NAMES, AnsatzSpec, get_ansatz
from .autodiff import DEFAULT_STENCIL, StencilConfig
from .bessel import bessel_j0, bessel_j0_zeros, bessel_j1
from .classical import PinnModel, SiPinnModel
from .errors import NumericIntegrityError
from .expressibility import expressibility_report
from .optimize import (
    DEFAULT_LBFGS,
    ExperimentResult,
    LbfgsConfig,
    TrainRun,
    lbfgs_minimize,
    run_experiment,
    train,
)
from .pauli import PauliSum, format_pauli_sum, parse_pauli_sum, to_dense
from .pde import (
    PdeProblem,
    burgers1d,
    diffusion2d,
    get_problem,
    loss,
    mae,
    poisson2d,
    residual_at,
    wave1d,
)
from .simulator import Circuit, CircuitOp, model_eval, model_eval_batch, run
from .symmetry import (
    SEED_POOL_2Q,
    SEED_POOL_4Q,
    equivariant_generator_set,
    k4_rep,
    so2_rep,
    twirl,
    z2_rep,
)

__version__ = "0.1.0"

__all__ = [
    "ANSATZ_NAMES", "AnsatzSpec", "get_ansatz",
    "DEFAULT_STENCIL", "StencilConfig",
    "bessel_j0", "bessel_j0_zeros", "bessel_j1",
    "PinnModel", "SiPinnModel",
    "NumericIntegrityError",
    "expressibility_report",
    "DEFAULT_LBFGS", "ExperimentResult", "LbfgsConfig", "TrainRun",
    "lbfgs_minimize", "run_experiment", "train",
    "PauliSum", "format_pauli_sum", "parse_pauli_sum", "to_dense",
    "PdeProblem", "burgers1d", "diffusion2d", "get_problem", "loss", "mae",
    "poisson2d", "residual_at", "wave1d",
    "Circuit", "CircuitOp", "model_eval", "model_eval_batch", "run",
    "SEED_POOL_2Q", "SEED_POOL_4Q", "equivariant_generator_set",
    "k4_rep", "so2_rep", "twirl", "z2_rep",
    "__version__",
]
