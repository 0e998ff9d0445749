"""Pre- and post-selected quantum systems.

ABL probabilities, weak values, elements of reality, and a von Neumann
pointer Monte Carlo, with the three-box and spin-singlet examples built in.
"""

from ._backend import BACKEND
from .errors import (
    DimensionBudgetExceeded,
    DimensionMismatch,
    ImpossiblePostSelection,
    NonCommuting,
    NotHermitian,
    NotUnitary,
    ScenarioError,
    TSVFError,
    UndefinedWeakValue,
)
from .hilbert import Operator, SpectralDecomposition, StateVector, apply, embed, inner, spectral, tensor
from .measure import (
    ExperimentResult,
    GaussianPointer,
    PointerMixture,
    PointerStatistics,
    TrialRecord,
    ensemble_pressure,
    pointer_conditional_mean,
    run_pre_post_experiment,
    sample_pointer,
    strong_measure,
    weak_pointer_amplitudes,
)
from .rng import RngStream
from .scenarios import ScenarioSpec, load_scenario, save_scenario, singlet, three_box
from .twostate import (
    ElementOfReality,
    Observable,
    OutcomeDistribution,
    ProductRuleReport,
    TwoStateVector,
    abl_probabilities,
    elements_of_reality,
    product_rule_report,
    sequence_probabilities,
    weak_value,
)

__version__ = "0.1.0"
