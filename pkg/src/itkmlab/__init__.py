"""Dictionary identification by S-response maximisation.

ITKM (iterative thresholding and K signed means), a one-atom K-SVD baseline,
synthetic sparse signal models, exact expectation oracles for small
instances and evaluators for the identification bounds.
"""

from .dictionary import (
    Dictionary,
    FrameStats,
    Perturbation,
    coherence,
    dict_canonical,
    dict_canonical_half_hadamard,
    dict_perturbed_basis_3d,
    distance_matched,
    distance_raw,
    distance_sign_invariant,
    frame_stats,
    random_tangent_directions,
    realize_perturbation,
)
from .errors import (
    BudgetExceededError,
    DegenerateFrameError,
    DomainError,
    InvalidInputError,
    NumericalError,
)
from .itkm import ItkmConfig, ItkmTrace, itkm_online, itkm_parallel, itkm_run, itkm_step
from .ksvd import ksvd1_run, ksvd1_step
from .signals import (
    CoefficientSpec,
    SignalBatch,
    SimpleSequenceSpec,
    draw_simple_signals,
    draw_table1_coefficients,
    gap_beta,
    mean_rearranged_coefficients,
    synthesize,
)

__version__ = "0.1.0"
