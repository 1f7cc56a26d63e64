"""Shape-constrained estimation of the baseline hazard and density in the Cox model."""

from .breslow import baseline_processes, breslow_F, breslow_lambda
from .core import StepFunction, SurvivalSample, evaluate, load_csv, sort_view, write_csv
from .cox import CoxFit, fit_beta, log_partial_likelihood, partial_likelihood_derivatives
from .estimators import (
    InverseProcessValue,
    MonotoneEstimate,
    estimate,
    grenander_density,
    grenander_hazard,
    inverse_process,
    maxmin_oracle,
    npmle_hazard,
)
from .exceptions import (
    DomainError,
    EstimationError,
    MonocoxError,
    NoEventsError,
    NoFiniteMaximizerError,
    ParseError,
    TheoremConditionError,
)
from .minorant import CumSumDiagram, gcm, gcm_of_function, lcm, lcm_of_function

__version__ = "0.1.0"
