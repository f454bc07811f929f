"""Riccati and accelerated Riccati iterations for continuous coupled
algebraic Riccati equations (CCAREs)."""

from .care import (CareInstance, CareSolution, care_residual, newton_care_oracle,
                   pbh_detectable, pbh_stabilizable, solve_care, solve_lyapunov)
from .errors import *  # noqa: F401,F403
from .iteration import (Direction, IterationConfig, SolveReport, Variant,
                        augmented_first_step, compare_run, run, shift_sweep)
from .matcore import (OrderResult, Relation, eigvals_general, fro_norm, is_psd,
                      is_stable, loewner_compare, spectral_abscissa, sym_eigvals)
from .model import (CcareProblem, assemble_step_care, auto_shifts, bundled_problem,
                    ccare_residual, load_problem, residual_max_fro, validate)

__version__ = "0.1.0"
