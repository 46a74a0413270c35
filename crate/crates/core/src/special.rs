//! Gaussian tail function and guarded exponentials.

use libm::{erf as libm_erf, erfc};

/// Gaussian tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn q_function(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn erf(x: f64) -> f64 {
    if x.is_infinite() {
        return x.signum();
    }
    libm_erf(x)
}

/// `exp(log_value)` that maps `-inf` and underflow to zero and never yields NaN
/// for a NaN-free argument.
pub(crate) fn exp_guarded(log_value: f64) -> f64 {
    if log_value == f64::NEG_INFINITY || log_value < -745.2 {
        0.0
    } else {
        log_value.exp()
    }
}
