"""Extended robust Kalman filter with a Givens-QR solver and IMU/GPS fusion."""

from ._erkf import (
    DimensionMismatch,
    Error,
    ModelError,
    ParseError,
    SchedulerError,
    StructuralError,
    back_substitute_tail,
    compare,
    dcm_ned_to_body,
    erkf_step,
    flop_report,
    gaussian_inverse,
    givens_coeffs,
    omega_matrix,
    predicted_givens_flops,
    predicted_inverse_flops,
    psi_matrix,
    qr_triangularize,
    run,
    singular_value_extrema,
    synth,
    wrap_angle,
)

__all__ = [name for name in dir() if not name.startswith("_")]
