//! Spherical Bessel/Hankel functions and Legendre polynomials for the
//! rigid-sphere scattering series.
//!
//! j_n is computed by downward recurrence with Miller normalization, y_n by
//! upward recurrence (stable in that direction), and h1_n = j_n + i·y_n.
//! Derivatives use f'_n = f_{n−1} − (n+1)/x · f_n.

use crate::error::{BsmError, Result};
use num_complex::Complex64;

/// j_0..j_n and their derivatives at x ≥ 0.
pub fn spherical_j_array(n_max: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut j = vec![0.0; n_max + 1];
    let mut dj = vec![0.0; n_max + 1];
    if x == 0.0 {
        j[0] = 1.0;
        if n_max >= 1 {
            dj[1] = 1.0 / 3.0;
        }
        return (j, dj);
    }
    let j0 = x.sin() / x;
    if n_max == 0 {
        j[0] = j0;
        dj[0] = (x.cos() - j0) / x;
        return (j, dj);
    }
    let j1 = x.sin() / (x * x) - x.cos() / x;

    // Downward recurrence from well above max(n, x); rescale on overflow risk.
    let start = n_max + (x.abs() as usize) + 32;
    let mut fp = 0.0f64; // f_{k+1}
    let mut fc = 1e-280f64; // f_k
    let mut raw = vec![0.0f64; n_max + 1];
    for k in (0..=start).rev() {
        let fm = (2 * k + 3) as f64 / x * fc - fp;
        if k <= n_max {
            raw[k] = fm;
        }
        fp = fc;
        fc = fm;
        if fc.abs() > 1e250 {
            let scale = 1e-250;
            fp *= scale;
            fc *= scale;
            for v in raw.iter_mut() {
                *v *= scale;
            }
        }
    }
    // Normalize against whichever closed form is better conditioned.
    let scale = if j0.abs() >= j1.abs() {
        j0 / raw[0]
    } else {
        j1 / raw[1]
    };
    for (k, v) in raw.iter().enumerate() {
        j[k] = v * scale;
    }
    dj[0] = (x.cos() - j[0]) / x;
    for k in 1..=n_max {
        dj[k] = j[k - 1] - (k + 1) as f64 / x * j[k];
    }
    (j, dj)
}

/// y_0..y_n and their derivatives at x > 0.
pub fn spherical_y_array(n_max: usize, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(x > 0.0) {
        return Err(BsmError::invalid(format!(
            "spherical Neumann function needs x > 0, got {x}"
        )));
    }
    let mut y = vec![0.0; n_max + 1];
    let mut dy = vec![0.0; n_max + 1];
    y[0] = -x.cos() / x;
    dy[0] = (x.sin() + x.cos() / x) / x;
    if n_max == 0 {
        return Ok((y, dy));
    }
    y[1] = -x.cos() / (x * x) - x.sin() / x;
    for k in 2..=n_max {
        // Magnitudes can overflow to -inf for n >> x; callers treat that as a
        // vanishing mode coefficient.
        y[k] = (2 * k - 1) as f64 / x * y[k - 1] - y[k - 2];
        if !y[k].is_finite() {
            for v in y.iter_mut().skip(k) {
                *v = f64::NEG_INFINITY;
            }
            break;
        }
    }
    for k in 1..=n_max {
        dy[k] = y[k - 1] - (k + 1) as f64 / x * y[k];
    }
    Ok((y, dy))
}

/// h1_0..h1_n = j + i·y and their derivatives at x > 0.
pub fn spherical_h1_array(n_max: usize, x: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let (j, dj) = spherical_j_array(n_max, x);
    let (y, dy) = spherical_y_array(n_max, x)?;
    let h = j
        .iter()
        .zip(&y)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    let dh = dj
        .iter()
        .zip(&dy)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    Ok((h, dh))
}

pub fn spherical_bessel_j(n: usize, x: f64) -> f64 {
    spherical_j_array(n, x).0[n]
}

pub fn spherical_bessel_j_derivative(n: usize, x: f64) -> f64 {
    spherical_j_array(n, x).1[n]
}

pub fn spherical_hankel_h1(n: usize, x: f64) -> Result<Complex64> {
    Ok(spherical_h1_array(n, x)?.0[n])
}

pub fn spherical_hankel_h1_derivative(n: usize, x: f64) -> Result<Complex64> {
    Ok(spherical_h1_array(n, x)?.1[n])
}

/// P_0(x)..P_n(x) by the Bonnet recurrence.
pub fn legendre_array(n_max: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; n_max + 1];
    p[0] = 1.0;
    if n_max >= 1 {
        p[1] = x;
    }
    for k in 1..n_max {
        p[k + 1] = ((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
    }
    p
}
