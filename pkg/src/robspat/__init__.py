"""Classical and robust spatial autocorrelation measures, permutation
inference, influence curves and Monte Carlo power studies."""

__version__ = "0.1.0"

from .errors import (
    DataError,
    NumericalError,
    RobspatError,
    WeightsError,
    ZeroScaleError,
    ZeroVarianceError,
)
from .lattice import LatticeSpec, Scheme, WeightMatrix, build_lattice_weights, from_adjacency_list, is_symmetric
from .measures import (
    Centering,
    Field,
    MeasureKind,
    center,
    compute_measure,
    mad,
    robust_spatial_lag,
    spatial_autocov,
    spatial_lag,
    statistics,
    weighted_median,
)
from .randfield import DistributionKind, MixtureLayout, RngStream, sample_noise, sar_generate
from .inference import Alternative, TestResult, permutation_test, permutation_tests
from .influence import CurveSettings, InfluenceCurve, influence_curve, influence_curves
from .mcstudy import PowerStudyConfig, PowerTable, emit_table, run_power_study
