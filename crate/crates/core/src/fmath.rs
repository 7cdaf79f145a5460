//! libm-backed float helpers.
//!
//! Test builds link `std`, which would otherwise make `f64`'s inherent std
//! methods shadow the `no_std` math paths; routing every transcendental
//! through libm keeps all builds on bit-identical arithmetic.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn powf(x: f64, e: f64) -> f64 {
    libm::pow(x, e)
}

#[inline]
pub fn powi(x: f64, e: i32) -> f64 {
    match e {
        2 => x * x,
        3 => x * x * x,
        _ => libm::pow(x, e as f64),
    }
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}
