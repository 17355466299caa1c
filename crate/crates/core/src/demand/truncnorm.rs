//! Standard normal CDF, its inverse, and inverse-CDF sampling of a normal
//! truncated to the nonnegative half line.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal upper tail `1 - Phi(z)`, accurate for large `z`.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

fn lower_tail_guess(p: f64) -> f64 {
    let q = (-2.0 * p.ln()).sqrt();
    (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
        / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
}

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        lower_tail_guess(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -lower_tail_guess(1.0 - p)
    }
}

/// Inverse of the standard normal CDF on the open interval (0, 1).
pub fn norm_ppf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let mut z = acklam(p);
    // Halley polish, measured against whichever tail is smaller.
    for _ in 0..2 {
        let e = if z > 0.0 { (1.0 - p) - norm_sf(z) } else { norm_cdf(z) - p };
        let u = e / norm_pdf(z);
        z -= u / (1.0 + 0.5 * z * u);
    }
    Ok(z)
}

/// Inverse CDF of `N(mu, sigma^2)` truncated to `[0, inf)`, evaluated at `u` in (0, 1).
pub fn truncated_normal_quantile(mu: f64, sigma: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidProbability(u));
    }
    let alpha = -mu / sigma;
    let lo = norm_cdf(alpha);
    let lo_sf = norm_sf(alpha);
    // Work in whichever tail keeps precision.
    let z = if lo < 0.5 {
        let p = lo + u * lo_sf;
        if p < 0.5 {
            norm_ppf(p)?
        } else {
            -norm_ppf((1.0 - u) * lo_sf)?
        }
    } else {
        norm_ppf(lo + u * lo_sf)?
    };
    Ok((mu + sigma * z).max(0.0))
}
