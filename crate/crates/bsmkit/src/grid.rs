//! Frequency and direction grids shared by every other module.
//!
//! Directions use spherical coordinates in degrees: elevation `theta` in
//! [0, 180] measured from +z (90 = horizontal plane) and azimuth `phi` in
//! [0, 360) measured from +x toward +y. Angles are converted to radians only
//! inside math kernels.

use crate::error::{BsmError, Result};
use serde::{Deserialize, Serialize};

/// One-sided FFT frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    sample_rate: f64,
    fft_size: usize,
}

impl FrequencyGrid {
    pub fn new(sample_rate: f64, fft_size: usize) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(BsmError::invalid("sample rate must be positive"));
        }
        if fft_size < 2 || fft_size % 2 != 0 {
            return Err(BsmError::invalid("fft size must be even and >= 2"));
        }
        Ok(FrequencyGrid { sample_rate, fft_size })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    /// Number of one-sided bins, `fft_size/2 + 1`.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Uniform bin spacing in Hz.
    pub fn bin_spacing(&self) -> f64 {
        self.sample_rate / self.fft_size as f64
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_spacing()
    }

    pub fn bin_frequencies(&self) -> Vec<f64> {
        (0..self.bins()).map(|b| self.bin_frequency(b)).collect()
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    /// Index of the first bin at or above `f` Hz.
    pub fn first_bin_at_or_above(&self, f: f64) -> usize {
        let idx = (f / self.bin_spacing()).ceil() as usize;
        idx.min(self.bins() - 1)
    }
}

/// A direction on the sphere, stored in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    elevation_deg: f64,
    azimuth_deg: f64,
}

impl Direction {
    pub fn new(elevation_deg: f64, azimuth_deg: f64) -> Result<Self> {
        if !elevation_deg.is_finite() || !azimuth_deg.is_finite() {
            return Err(BsmError::invalid("direction angles must be finite"));
        }
        if !(0.0..=180.0).contains(&elevation_deg) {
            return Err(BsmError::invalid(format!(
                "elevation {elevation_deg} out of [0, 180]"
            )));
        }
        Ok(Direction {
            elevation_deg,
            azimuth_deg: azimuth_deg.rem_euclid(360.0),
        })
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    /// Unit vector pointing toward the direction: x = sinθ cosφ,
    /// y = sinθ sinφ, z = cosθ.
    pub fn unit_vector(&self) -> [f64; 3] {
        let th = self.elevation_deg.to_radians();
        let ph = self.azimuth_deg.to_radians();
        [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
    }
}

/// Central angle between two directions in degrees, in [0, 180].
///
/// Uses the atan2 form, which stays accurate for nearly parallel and nearly
/// antipodal pairs.
pub fn great_circle_angle(a: Direction, b: Direction) -> f64 {
    let u = a.unit_vector();
    let v = b.unit_vector();
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cx = u[1] * v[2] - u[2] * v[1];
    let cy = u[2] * v[0] - u[0] * v[2];
    let cz = u[0] * v[1] - u[1] * v[0];
    let cross = (cx * cx + cy * cy + cz * cz).sqrt();
    cross.atan2(dot).to_degrees()
}

/// An ordered set of directions with optional quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGrid {
    directions: Vec<Direction>,
    weights: Option<Vec<f64>>,
}

impl DirectionGrid {
    /// Builds a grid, checking for duplicates (within 1e-9 degrees) and, when
    /// weights are given, positivity and a 4π sum (1e-6 relative).
    pub fn new(directions: Vec<Direction>, weights: Option<Vec<f64>>) -> Result<Self> {
        if directions.is_empty() {
            return Err(BsmError::invalid("direction grid must be nonempty"));
        }
        for i in 0..directions.len() {
            for j in (i + 1)..directions.len() {
                if great_circle_angle(directions[i], directions[j]) < 1e-9 {
                    return Err(BsmError::invalid(format!(
                        "duplicate directions at indices {i} and {j}"
                    )));
                }
            }
        }
        if let Some(w) = &weights {
            if w.len() != directions.len() {
                return Err(BsmError::invalid("weight count != direction count"));
            }
            if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(BsmError::invalid("quadrature weights must be positive"));
            }
            let sum: f64 = w.iter().sum();
            let target = 4.0 * std::f64::consts::PI;
            if ((sum - target) / target).abs() > 1e-6 {
                return Err(BsmError::invalid(format!(
                    "quadrature weights sum to {sum}, expected 4π"
                )));
            }
        }
        Ok(DirectionGrid { directions, weights })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn direction(&self, idx: usize) -> Direction {
        self.directions[idx]
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Index of the grid direction nearest to `target` (great-circle), with
    /// the mismatch in degrees. Ties resolve to the lowest index.
    pub fn nearest(&self, target: Direction) -> (usize, f64) {
        let mut best = 0usize;
        let mut best_angle = f64::INFINITY;
        for (i, d) in self.directions.iter().enumerate() {
            let ang = great_circle_angle(*d, target);
            if ang < best_angle {
                best_angle = ang;
                best = i;
            }
        }
        (best, best_angle)
    }

    /// Horizontal ring at θ=90° with uniform azimuth `step_deg`, starting at 0°.
    pub fn horizontal_ring(step_deg: f64) -> Result<Self> {
        if !(step_deg > 0.0) || step_deg > 120.0 {
            return Err(BsmError::invalid("ring step must be in (0, 120] degrees"));
        }
        let count = (360.0 / step_deg).round() as usize;
        if (count as f64 * step_deg - 360.0).abs() > 1e-9 {
            return Err(BsmError::invalid("ring step must divide 360 degrees"));
        }
        let dirs = (0..count)
            .map(|k| Direction::new(90.0, k as f64 * step_deg))
            .collect::<Result<Vec<_>>>()?;
        DirectionGrid::new(dirs, None)
    }

    /// A dense horizontal ring plus coarse off-plane rings; the workhorse grid
    /// for designs that are evaluated mostly on the horizontal plane.
    ///
    /// Off-plane rings sit at elevations 90±k·`coarse_step_deg` (excluding the
    /// poles and the horizontal plane itself) with `coarse_step_deg` azimuth
    /// spacing. No quadrature weights are attached.
    pub fn ring_plus_coarse(ring_step_deg: f64, coarse_step_deg: f64) -> Result<Self> {
        if !(coarse_step_deg > 0.0) || coarse_step_deg > 90.0 {
            return Err(BsmError::invalid("coarse step must be in (0, 90] degrees"));
        }
        if (360.0 / coarse_step_deg).fract().abs() > 1e-9 {
            return Err(BsmError::invalid("coarse step must divide 360 degrees"));
        }
        let ring = Self::horizontal_ring(ring_step_deg)?;
        let mut dirs = ring.directions;
        let az_count = (360.0 / coarse_step_deg).round() as usize;
        let mut el = coarse_step_deg;
        while el < 90.0 - 1e-9 {
            for &elevation in &[90.0 - el, 90.0 + el] {
                if elevation <= 1e-9 || elevation >= 180.0 - 1e-9 {
                    continue;
                }
                for k in 0..az_count {
                    dirs.push(Direction::new(elevation, k as f64 * coarse_step_deg)?);
                }
            }
            el += coarse_step_deg;
        }
        DirectionGrid::new(dirs, None)
    }

    /// Near-uniform quadrature grid of order `n`: Gauss–Legendre rings in
    /// elevation, `2(n+1)` uniform azimuths per ring, with weights summing to
    /// 4π. Density is comparable to a Lebedev grid of the same order.
    pub fn lebedev_like(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(BsmError::invalid("grid order must be >= 1"));
        }
        let (nodes, gl_weights) = gauss_legendre(n + 1);
        let az_count = 2 * (n + 1);
        let az_step = 360.0 / az_count as f64;
        let mut dirs = Vec::with_capacity((n + 1) * az_count);
        let mut weights = Vec::with_capacity((n + 1) * az_count);
        for (x, w) in nodes.iter().zip(&gl_weights) {
            let elevation = x.acos().to_degrees();
            let ring_weight = w * 2.0 * std::f64::consts::PI / az_count as f64;
            for k in 0..az_count {
                dirs.push(Direction::new(elevation, k as f64 * az_step)?);
                weights.push(ring_weight);
            }
        }
        DirectionGrid::new(dirs, Some(weights))
    }
}

/// Selects the `count` grid directions nearest to equally spaced targets on
/// the horizontal plane (θ=90°, φ = k·360/(count−1)) and returns their indices
/// together with the maximum angular mismatch in degrees.
///
/// The endpoint targets φ=0° and φ=360° coincide, so the first and last index
/// repeat on exact rings. Fails when any mismatch exceeds `tolerance_deg`
/// (default 3° via [`horizontal_subgrid`]).
pub fn horizontal_subgrid_with_tolerance(
    grid: &DirectionGrid,
    count: usize,
    tolerance_deg: f64,
) -> Result<(Vec<usize>, f64)> {
    if count < 2 {
        return Err(BsmError::invalid("horizontal subgrid needs count >= 2"));
    }
    let step = 360.0 / (count - 1) as f64;
    let mut indices = Vec::with_capacity(count);
    let mut max_mismatch = 0.0f64;
    for k in 0..count {
        let target = Direction::new(90.0, k as f64 * step)?;
        let (idx, mismatch) = grid.nearest(target);
        if mismatch > tolerance_deg {
            return Err(BsmError::invalid(format!(
                "grid cannot support horizontal-plane evaluation: mismatch {mismatch:.3}° \
                 at azimuth {:.3}° exceeds {tolerance_deg}°",
                k as f64 * step
            )));
        }
        max_mismatch = max_mismatch.max(mismatch);
        indices.push(idx);
    }
    Ok((indices, max_mismatch))
}

/// [`horizontal_subgrid_with_tolerance`] with the default 3° tolerance.
pub fn horizontal_subgrid(grid: &DirectionGrid, count: usize) -> Result<(Vec<usize>, f64)> {
    horizontal_subgrid_with_tolerance(grid, count, 3.0)
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Recompute weights in sorted order.
    for i in 0..n {
        let (_, dp) = legendre_and_derivative(n, nodes[i]);
        weights[i] = 2.0 / ((1.0 - nodes[i] * nodes[i]) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
