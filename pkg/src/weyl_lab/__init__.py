"""Numerical laboratory for heat-kernel short-time asymptotics and Weyl counting.

Four families of one-frequency model spaces (weighted intervals, circles,
iterated-suspension towers, Gaussian spaces) with eigenvalue solvers,
heat-trace and diagonal-kernel evaluation, Karamata/Tauberian audits of the
counting function, and a report generator that cross-checks every route
against closed forms where they exist.
"""

from .errors import (
    WeylLabError,
    DomainError,
    ConvergenceError,
    TruncationError,
    InsufficientModesError,
    DisagreementError,
    UnsupportedVariantError,
    NoncompactSpaceError,
    BoundaryPointError,
    TailCoverageError,
    DegenerateGridError,
)
from .spaces import (
    WeightedInterval,
    Circle,
    SuspensionTower,
    Gaussian,
    RescaledView,
    ball_volume,
    density_at,
    regular_dimension,
    hausdorff_mass,
    diameter,
    total_mass,
    rescale,
    space_to_json,
    space_from_json,
)
from .spectra import (
    Spectrum,
    compute_spectrum,
    oracle_spectrum,
    prufer_spectrum,
    fd_spectrum,
    transfer_interval_spectrum,
    suspension_spectrum,
    tower_spectrum,
    counting,
    ith_eigenvalue,
    spectrum_to_csv,
    spectrum_from_csv,
)
from .heat import (
    SpectralResolution,
    resolution_for,
    heat_trace,
    spectral_diag_kernel,
    diag_profile,
    chapman_kolmogorov_residual,
    trace_identity_residual,
    short_time_diag,
    rescaled_diag_kernel,
    gaussian_ratio_scan,
)
from .tauberian import (
    PowerTail,
    AtomicMeasure,
    laplace_direct,
    laplace_cavalieri,
    abel_limit_estimate,
    counting_limit_estimate,
    one_sided_audit,
    karamata_crosscheck,
    AuditReport,
    KaramataCheck,
)
from .weyl import (
    criterion_integral,
    pointwise_criterion_integral,
    criterion_verdict,
    weyl_ratio,
    trace_formula,
    fitted_tail,
    WeylConfig,
    WeylReport,
    weyl_report,
)

__version__ = "0.1.0"
