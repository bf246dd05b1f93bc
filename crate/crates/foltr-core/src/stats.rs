//! Small statistics helpers: coordinate-wise moments over parameter vectors
//! and the standard normal quantile function.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::ParamVector;
use crate::num;

/// Coordinate-wise mean and population standard deviation.
pub fn coordinate_mean_std(vectors: &[ParamVector]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::NoUpdates);
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, &x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut std = vec![0.0; dim];
    for v in vectors {
        for ((s, &m), &x) in std.iter_mut().zip(mean.iter()).zip(v.iter()) {
            let d = x - m;
            *s += d * d;
        }
    }
    for s in std.iter_mut() {
        *s = num::sqrt(*s / n as f64);
    }
    Ok((mean, std))
}

/// Coordinate-wise min and max.
pub fn coordinate_min_max(vectors: &[ParamVector]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::NoUpdates);
    }
    let dim = vectors[0].len();
    let mut min = vec![f64::INFINITY; dim];
    let mut max = vec![f64::NEG_INFINITY; dim];
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        for j in 0..dim {
            if v[j] < min[j] {
                min[j] = v[j];
            }
            if v[j] > max[j] {
                max[j] = v[j];
            }
        }
    }
    Ok((min, max))
}

/// Inverse CDF of the standard normal distribution.
///
/// Acklam's rational approximation refined with one Halley step against
/// `erfc`, giving close to full double precision over (0, 1).
pub fn standard_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "normal quantile argument {p} outside (0, 1)"
        )));
    }

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
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

    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = num::sqrt(-2.0 * num::ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = num::sqrt(-2.0 * num::ln(1.0 - p));
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    };

    // Halley refinement
    let sqrt_2 = num::sqrt(2.0);
    let sqrt_2pi = num::sqrt(2.0 * core::f64::consts::PI);
    let e = 0.5 * libm::erfc(-x / sqrt_2) - p;
    let u = e * sqrt_2pi * num::exp(x * x / 2.0);
    Ok(x - u / (1.0 + x * u / 2.0))
}
