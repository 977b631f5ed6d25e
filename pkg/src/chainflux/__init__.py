"""chainflux: discrete Markov chains from recorded play sequences, and the
nonequilibrium observables defined on them -- entropy, entropy production
rate, velocity, and motion -- plus Monte-Carlo null models and tests."""

from . import errors
from .core import (
    MarkovEstimate,
    StateSpace,
    StationarityDiagnostic,
    Trajectory,
    TreatmentDataset,
    estimate_markov,
    square_2x2,
    stationarity_diagnostic,
    triangle_3,
)
from .dataio import (
    AnalysisConfig,
    load_csv,
    load_space,
    write_csv,
    write_report,
)
from .nullmodels import (
    BaselineDistribution,
    Seed,
    VnmParams,
    dos_baseline,
    simulate_chain,
    simulate_vnm,
    vnm_null_distribution,
)
from .observables import (
    ObservableReport,
    ZeroFluxPolicy,
    entropy,
    epr,
    full_report,
    motion,
    velocity,
)
from .stats import (
    OlsFit,
    TestResult,
    ols_fit,
    one_sample_t,
    paired_t,
    percentile_of,
    student_t_cdf,
    welch_t,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "errors",
    "StateSpace",
    "Trajectory",
    "TreatmentDataset",
    "MarkovEstimate",
    "StationarityDiagnostic",
    "square_2x2",
    "triangle_3",
    "estimate_markov",
    "stationarity_diagnostic",
    "ZeroFluxPolicy",
    "ObservableReport",
    "entropy",
    "epr",
    "velocity",
    "motion",
    "full_report",
    "Seed",
    "VnmParams",
    "BaselineDistribution",
    "simulate_chain",
    "simulate_vnm",
    "vnm_null_distribution",
    "dos_baseline",
    "TestResult",
    "OlsFit",
    "student_t_cdf",
    "one_sample_t",
    "paired_t",
    "welch_t",
    "percentile_of",
    "ols_fit",
    "AnalysisConfig",
    "load_space",
    "load_csv",
    "write_csv",
    "write_report",
]
