"""Forward differences, Stirling expansions and Wiman-Valiron numerics for
entire functions of order below one, plus a Newton-series solver for
linear difference equations with polynomial coefficients."""

__version__ = "0.1.0"

from .difference_eq import (  # noqa: E402
    DifferenceEquation,
    GrowthFit,
    NewtonPolygon,
    NewtonSeriesSolution,
    binomial_recurrence,
    eval_newton_series,
    growth_fit,
    newton_polygon,
    parse_equation,
    solve_minimal,
    verify_regular_growth,
)
from .errors import (  # noqa: E402
    ConfigurationError,
    DeltaWVError,
    GrowthDataError,
    InsufficientDataError,
    MinimalSolutionNotFoundError,
    NearZeroError,
    NeedsMoreTermsError,
    NonConvergenceError,
    NumericError,
    PrecisionExhaustedError,
    ValidationError,
)
from .series_core import (  # noqa: E402
    EvalResult,
    PowerSeries,
    builtin,
    delta_exact,
    deriv,
    evaluate,
    log_derivative,
    order_from_coefficients,
    polynomial,
)
from .stirling import StirlingTable, build_table, expansion, expansion_coefficients  # noqa: E402
from .verifier import (  # noqa: E402
    DecayReport,
    fit_decay_exponent,
    gamma_counterexample,
    verify_expansion,
    verify_first_difference,
    verify_wv_difference,
)
from .wiman_valiron import (  # noqa: E402
    central_index,
    check_pointwise_bounds,
    max_modulus,
    maximal_term,
    order_from_central_index,
    wv_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
