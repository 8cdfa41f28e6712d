"""Repeated-interaction discretizations of Hudson-Parthasarathy QSDEs.

Build a discrete interaction model, compute its limit coefficients, check the
HP identities and measure convergence of the compressed step towards the
limit semigroup.
"""
from ._kernels import BACKEND
from .coefficients import (
    CheckedCoefficients,
    gauge_invariance_defect,
    hp_check,
    lemma4_hypothesis_check,
    limit_coefficients,
    scalar_f,
    scalar_g,
    spin_coefficients,
)
from .config import DEFAULT, Tolerances
from .convergence import (
    ConvergenceReport,
    NoiseFloorError,
    chain_vs_semigroup,
    convergence_report,
    fit_rate,
    generator_residual,
    semigroup_power_error,
)
from .discrete import (
    DirectInteraction,
    build_hamiltonian,
    build_step,
    chain_evolve,
    compress,
    product_state,
)
from .errors import CapacityError, QSDEError, ValidationError
from .examples import BUILTIN, build_example
from .model import LimitCoefficients, ModelSpec, exp_vector_overlap_error, validate
from .semigroup import PiecewiseDrive, evolve, generator, piecewise_evolve

__version__ = "0.1.0"
