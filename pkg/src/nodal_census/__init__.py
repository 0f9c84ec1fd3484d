"""Invariant Gaussian polynomial ensembles on the n-sphere.

Closed-form predictions (slice parameters, GOE extreme-eigenvalue integrals,
expected extrema, leading-coefficient bounds) together with empirical
verification by sampling fields and counting zeros, nodal components,
critical points, and barrier events.
"""

from .ensemble import (
    EnsembleSpec,
    PsiProfile,
    coherence_check,
    make_harmonic,
    make_kostlan,
    make_prescribed,
    make_rfs,
    moment_sum,
    moments,
    rescaled_weight,
)
from .covariance import (
    CovarianceSummary,
    covariance_derivs,
    covariance_fn,
    covariance_summary,
    rescaled_kernel_check,
    rmt_B,
    slice_parameter,
    slice_parameter_prime,
)
from .rmt import (
    GoeEstimate,
    ExtremaPrediction,
    expected_minima,
    i_asymptotic,
    i_integral,
    largest_eigenvalue,
    leading_coeff_bound,
    minima_power_law_check,
    sample_goe,
    I2_EXACT,
    I3_EXACT,
)
from .fieldsim import FieldSample, sample_field
from .census import SphereGrid, CensusReport, run_census, slice_experiment
from .barrier import BarrierConfig, make_barrier, barrier_margins, estimate_omega_probability

__version__ = "0.1.0"
