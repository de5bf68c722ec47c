"""Spectral laboratory for half-order right-invariant metrics on circle diffeomorphisms."""

from .errors import *  # noqa: F401,F403
from .spectral import (
    FULL_HALF,
    HOMOGENEOUS_HALF,
    MU_HALF,
    Diffeo,
    GridSpec,
    MetricKind,
    PeriodicField,
    compose,
    derivative,
    hilbert,
    homogeneous_s,
    inertia_apply,
    inertia_invert,
    inner_product,
    invert_diffeo,
    lambda_pow,
    mean,
    norm,
)
from .flow import (
    GeodesicTrajectory,
    SolverConfig,
    conservation_residual,
    euler_rhs,
    integrate_ebin,
    integrate_euler,
    integrate_spray,
    lagrangian_flow,
)
from .jacobi import (
    build_test_field,
    conjugate_criterion,
    index_form,
    jacobi_integrate,
    rotation_closed_form,
)
from .blowup import (
    BlowupReport,
    bkm_integrals,
    detect_blowup,
    ermakov_flow,
    forcing_F,
    h2_identity_residual,
    log_sobolev_ratio,
)
from .inequalities import (
    corollary_suite,
    gp_direct,
    gp_series,
    gq_general,
    product_identity_residual,
)
from .curvature import closed_form_K, curvature_scan, sectional_curvature
from .distance import basepoint_invariance, shortcut_run, spike_field

__version__ = "0.1.0"
