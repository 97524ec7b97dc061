"""Monte Carlo engine for excursion-class-dependent inverse-subordinator
time changes of regenerative processes, with exact analytic oracles for
its structural identities and occupation-time limit laws."""

from .ledger import ExcursionLedger, extract_excursions, window_counts
from .limit_laws import (
    ClassScaling,
    ScalingSpec,
    UnsupportedScalingError,
    derive_scaling,
    dynkin_lamperti_cdf,
    inverse_stable_moment,
    mittag_leffler,
    sample_inverse_stable,
    sample_last_next_zero,
    sample_occupation_fractions,
)
from .star_chain import (
    ModelError,
    Path,
    RaySpec,
    StarChainModel,
    class_lifetime_exponent,
    hitting_laplace,
    lifetime_mean_measure,
    mean_hitting,
    sample_hitting_times,
    simulate_path,
    single_state_ray,
)
from .stat_tests import TestReport, dispersion_independence, empirical_laplace, ks_test, tail_index_fit
from .stepped import SteppedProcess
from .streams import RngStream, derive_stream
from .subordinators import (
    SubordinatorSpec,
    laplace_exponent,
    sample_positive_stable,
    subordinator_increment,
    subordinator_increments,
)
from .time_change import (
    ClassMap,
    GammaFamily,
    build_clock_and_transform,
    composed_exponent_oracle,
    full_clock_exponent_oracle,
    gamma_family,
    mark_lifetimes,
    occupation_from_path,
    occupation_via_williams,
    transformed_tail_oracle,
)

__all__ = [
    "ClassMap",
    "ClassScaling",
    "ExcursionLedger",
    "GammaFamily",
    "ModelError",
    "Path",
    "RaySpec",
    "RngStream",
    "ScalingSpec",
    "StarChainModel",
    "SteppedProcess",
    "SubordinatorSpec",
    "TestReport",
    "UnsupportedScalingError",
    "build_clock_and_transform",
    "class_lifetime_exponent",
    "composed_exponent_oracle",
    "derive_scaling",
    "derive_stream",
    "dispersion_independence",
    "dynkin_lamperti_cdf",
    "empirical_laplace",
    "extract_excursions",
    "full_clock_exponent_oracle",
    "gamma_family",
    "hitting_laplace",
    "inverse_stable_moment",
    "ks_test",
    "laplace_exponent",
    "lifetime_mean_measure",
    "mark_lifetimes",
    "mean_hitting",
    "mittag_leffler",
    "occupation_from_path",
    "occupation_via_williams",
    "sample_hitting_times",
    "sample_inverse_stable",
    "sample_last_next_zero",
    "sample_occupation_fractions",
    "sample_positive_stable",
    "simulate_path",
    "single_state_ray",
    "subordinator_increment",
    "subordinator_increments",
    "tail_index_fit",
    "transformed_tail_oracle",
    "window_counts",
]

__version__ = "0.1.0"
