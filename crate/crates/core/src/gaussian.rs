//! Standard Gaussian upper tail Q(z) = Pr{Z > z}, its logarithm and inverse.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

/// Q(z) = ½ erfc(z/√2).
pub fn q_function(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// ln Q(z), accurate far into the tail where Q itself underflows.
pub fn ln_q_function(z: f64) -> f64 {
    if z < 30.0 {
        return q_function(z).ln();
    }
    // Mills-ratio asymptotic series; at z >= 30 five terms reach f64 precision.
    let z2 = z * z;
    let inv = 1.0 / z2;
    let series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
    -0.5 * z2 - z.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// Gaussian density.
pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Q⁻¹(p) for p in (0,1): the z with Q(z) = p.
///
/// Starts from the erfc inverse and polishes with Halley steps on Q.
pub fn q_inverse(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "Q^-1 needs p in (0,1), got {p}");
    let mut z = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..3 {
        let d = phi(z);
        if d == 0.0 {
            break;
        }
        let f = q_function(z) - p;
        // Q' = -phi, Q'' = z phi
        let step = f / -d;
        let halley = step / (1.0 - 0.5 * step * z);
        if !halley.is_finite() {
            break;
        }
        z -= halley;
        if halley.abs() < 1e-16 * z.abs().max(1.0) {
            break;
        }
    }
    z
}
