"""Bootstrap HEGY tests for seasonal unit roots in quarterly data.

Two resampling schemes are provided: a seasonal iid bootstrap for the
lag-augmented HEGY regression and a seasonal block bootstrap for the plain
(unaugmented) regression.  ``hegyboot.sim_lab`` holds the Monte Carlo
machinery used to study their size and power.
"""

__version__ = "0.1.0"

from .boot_block import BlockBootConfig, block_bootstrap_test
from .boot_iid import IidBootConfig, iid_bootstrap_test
from .core_series import (
    LagPolynomial,
    QuarterlySeries,
    ar_recursion,
    hegy_transform,
    multiply_polynomials,
    seasonal_difference,
)
from .errors import (
    ConfigurationError,
    DataError,
    HegyError,
)
from .hegy import (
    HYPOTHESES,
    HegyStatistics,
    Hypothesis,
    augmented_hegy,
    seasonal_regression,
    unaugmented_hegy,
)
from .resampling import TestReport

__all__ = [
    "__version__",
    "BlockBootConfig",
    "IidBootConfig",
    "block_bootstrap_test",
    "iid_bootstrap_test",
    "LagPolynomial",
    "QuarterlySeries",
    "ar_recursion",
    "hegy_transform",
    "multiply_polynomials",
    "seasonal_difference",
    "HegyError",
    "DataError",
    "ConfigurationError",
    "HYPOTHESES",
    "HegyStatistics",
    "Hypothesis",
    "augmented_hegy",
    "unaugmented_hegy",
    "seasonal_regression",
    "TestReport",
]
