//! Numerical tolerances shared by all modules.

/// Hermiticity slack, scaled by the largest entry modulus.
pub fn herm(sup_norm: f64) -> f64 {
    1e-10 * (1.0 + sup_norm)
}

/// Spectral slack for a d×d problem.
pub fn spec(d: usize) -> f64 {
    1e-9 * d as f64
}

/// Below this separation two divided-difference nodes are treated as equal.
pub fn dd(a: f64, b: f64) -> f64 {
    1e-7 * (1.0 + a.abs() + b.abs())
}

pub fn entropy(h: f64) -> f64 {
    1e-9 * (1.0 + h.abs())
}

pub fn conv(scale: f64) -> f64 {
    1e-8 * (1.0 + scale.abs())
}

pub fn comm(d: usize) -> f64 {
    1e-8 * d as f64
}

pub const COND_MAX: f64 = 1e12;

/// Support cut-off when taking logarithms of density matrices.
pub const SUPPORT: f64 = 1e-13;

pub const MAX_ENUMERATION: u128 = 1_000_000;
