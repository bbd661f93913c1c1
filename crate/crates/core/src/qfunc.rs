//! Gaussian tail probability `Q(x) = P(Z > x)` and its inverse.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// `Q(x) = ½·erfc(x/√2)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Q⁻¹(p)` for `0 < p < 1`.
///
/// Starts from `√2·erfc⁻¹(2p)` and polishes with Newton steps on `Q(x) − p`,
/// working in the upper tail so small probabilities keep full relative accuracy.
pub fn inverse_q(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("inverse_q needs 0 < p < 1, got {p}")));
    }
    if p > 0.5 {
        return inverse_q(1.0 - p).map(|x| -x);
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..4 {
        let step = (q_function(x) - p) / normal_pdf(x);
        x += step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}
