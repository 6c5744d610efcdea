//! Float shims over `libm`. Keeping every transcendental call behind one
//! module guarantees the same bit patterns on every target, which the
//! determinism contract (identical output regardless of platform or worker
//! count) depends on.

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `hypot(x, 0) == |x|` exactly, which the flat-plane identity tests rely on.
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Rounds half away from zero (`round(0.5) == 1`, `round(-0.5) == -1`).
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

pub(crate) fn fabs(x: f64) -> f64 {
    libm::fabs(x)
}

pub(crate) fn asinh(x: f64) -> f64 {
    libm::asinh(x)
}

pub(crate) fn asin(x: f64) -> f64 {
    libm::asin(x)
}

pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Nearest integer with ties to even: 2.5 -> 2, 3.5 -> 4.
pub(crate) fn round_ties_even(x: f64) -> f64 {
    let f = floor(x);
    let frac = x - f;
    if frac > 0.5 {
        f + 1.0
    } else if frac < 0.5 {
        f
    } else if libm::fmod(f, 2.0) == 0.0 {
        f
    } else {
        f + 1.0
    }
}
