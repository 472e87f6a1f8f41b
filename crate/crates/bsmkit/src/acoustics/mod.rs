//! Analytic steering vectors (free field, rigid sphere) and a synthetic
//! spherical-head HRTF.
//!
//! The rigid-sphere surface pressure for a plane wave arriving from a source
//! at angle Θ from the measurement point is the scattering series
//!
//! ```text
//! p(ka, Θ) = Σ_{n=0}^{N} b_n(ka) (2n+1) P_n(cos Θ),
//! b_n(ka)  = i^{n−1} / ((ka)² h2'_n(ka))
//! ```
//!
//! with h2 the spherical Hankel function of the second kind — the outgoing
//! wave for the e^{+iωt} phasor convention that also gives the free-field
//! steering its exp(+i k d·û) form. This orientation puts the pressure
//! doubling (|p| → 2 as ka → ∞) on the side facing the source. The ka = 0 bin
//! is pinned to 1 (the incident pressure). Truncation at N must satisfy
//! N ≥ ⌈k_max·a⌉ + 8, and the series tail is checked per bin: a relative tail
//! above 1e−9 is a hard error rather than a silent accuracy loss.

pub mod special;

use crate::error::{BsmError, Result};
use crate::grid::{Direction, DirectionGrid, FrequencyGrid};
use crate::tfset::{TfKind, TransferFunctionSet};
use num_complex::Complex64;
use rayon::prelude::*;
use special::{legendre_array, spherical_h1_array};

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_HEAD_RADIUS: f64 = 0.0875;

/// Relative tail magnitude above which the series is declared non-converged.
const SERIES_TAIL_TOL: f64 = 1e-9;
/// ka below this is treated as the incident-pressure limit.
const KA_PIN_THRESHOLD: f64 = 1e-8;

/// Rigid-sphere array: microphones on the surface of a sphere of radius `a`.
#[derive(Debug, Clone)]
pub struct RigidSphereArraySpec {
    radius: f64,
    mic_directions: Vec<Direction>,
    truncation_order: usize,
    speed_of_sound: f64,
}

impl RigidSphereArraySpec {
    /// Validates radius > 0 and N ≥ ⌈k_max·a⌉ + 8 for the given sample rate.
    pub fn new(
        radius: f64,
        mic_directions: Vec<Direction>,
        sample_rate: f64,
        truncation_order: usize,
        speed_of_sound: f64,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(BsmError::invalid("sphere radius must be positive"));
        }
        if mic_directions.is_empty() {
            return Err(BsmError::invalid("array needs at least one microphone"));
        }
        if !(speed_of_sound > 0.0) {
            return Err(BsmError::invalid("speed of sound must be positive"));
        }
        let floor = Self::min_order(radius, sample_rate, speed_of_sound);
        if truncation_order < floor {
            return Err(BsmError::invalid(format!(
                "truncation order {truncation_order} below required minimum {floor}"
            )));
        }
        Ok(RigidSphereArraySpec {
            radius,
            mic_directions,
            truncation_order,
            speed_of_sound,
        })
    }

    /// Chooses the smallest order at or above the ⌈k_max·a⌉ + 8 floor whose
    /// series tail at k_max·a is below 1e−10.
    pub fn with_auto_order(
        radius: f64,
        mic_directions: Vec<Direction>,
        sample_rate: f64,
        speed_of_sound: f64,
    ) -> Result<Self> {
        let floor = Self::min_order(radius, sample_rate, speed_of_sound);
        let ka_max = 2.0 * std::f64::consts::PI * (sample_rate / 2.0) * radius / speed_of_sound;
        let mut order = floor;
        while order < floor + 256 {
            if series_tail_ok(ka_max, order, 1e-10)? {
                break;
            }
            order += 2;
        }
        Self::new(radius, mic_directions, sample_rate, order, speed_of_sound)
    }

    pub fn min_order(radius: f64, sample_rate: f64, speed_of_sound: f64) -> usize {
        let k_max = 2.0 * std::f64::consts::PI * (sample_rate / 2.0) / speed_of_sound;
        (k_max * radius).ceil() as usize + 8
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mic_directions(&self) -> &[Direction] {
        &self.mic_directions
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation_order
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }
}

/// Spherical-head HRTF stand-in: two "microphones" (the ears) on a rigid
/// sphere. Ears default to 100°/260° azimuth, slightly rear of lateral.
#[derive(Debug, Clone)]
pub struct SphericalHeadHrtfSpec {
    head_radius: f64,
    left_ear: Direction,
    right_ear: Direction,
    truncation_order: usize,
    speed_of_sound: f64,
}

impl SphericalHeadHrtfSpec {
    pub fn new(
        head_radius: f64,
        left_ear: Direction,
        right_ear: Direction,
        sample_rate: f64,
        truncation_order: usize,
        speed_of_sound: f64,
    ) -> Result<Self> {
        if !(head_radius > 0.0) {
            return Err(BsmError::invalid("head radius must be positive"));
        }
        if crate::grid::great_circle_angle(left_ear, right_ear) < 1e-9 {
            return Err(BsmError::invalid("ear directions must be distinct"));
        }
        let floor = RigidSphereArraySpec::min_order(head_radius, sample_rate, speed_of_sound);
        if truncation_order < floor {
            return Err(BsmError::invalid(format!(
                "truncation order {truncation_order} below required minimum {floor}"
            )));
        }
        Ok(SphericalHeadHrtfSpec {
            head_radius,
            left_ear,
            right_ear,
            truncation_order,
            speed_of_sound,
        })
    }

    pub fn with_auto_order(
        head_radius: f64,
        left_ear: Direction,
        right_ear: Direction,
        sample_rate: f64,
        speed_of_sound: f64,
    ) -> Result<Self> {
        let helper = RigidSphereArraySpec::with_auto_order(
            head_radius,
            vec![left_ear, right_ear],
            sample_rate,
            speed_of_sound,
        )?;
        Self::new(
            head_radius,
            left_ear,
            right_ear,
            sample_rate,
            helper.truncation_order(),
            speed_of_sound,
        )
    }

    /// Ears at ±`ear_azimuth_deg` from the front, on the horizontal plane.
    pub fn default_with_ear_azimuth(sample_rate: f64, ear_azimuth_deg: f64) -> Result<Self> {
        let left = Direction::new(90.0, ear_azimuth_deg)?;
        let right = Direction::new(90.0, 360.0 - ear_azimuth_deg)?;
        Self::with_auto_order(
            DEFAULT_HEAD_RADIUS,
            left,
            right,
            sample_rate,
            DEFAULT_SPEED_OF_SOUND,
        )
    }

    pub fn head_radius(&self) -> f64 {
        self.head_radius
    }

    pub fn left_ear(&self) -> Direction {
        self.left_ear
    }

    pub fn right_ear(&self) -> Direction {
        self.right_ear
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation_order
    }
}

/// Free-field plane-wave steering: v(k, d; Ω) = exp(+i k d·û(Ω)) with û the
/// unit vector toward the arrival direction.
pub fn free_field_steering(
    mic_positions: &[[f64; 3]],
    grid: &FrequencyGrid,
    dirs: &DirectionGrid,
) -> Result<TransferFunctionSet> {
    if mic_positions.is_empty() {
        return Err(BsmError::invalid("need at least one microphone position"));
    }
    if mic_positions
        .iter()
        .any(|p| p.iter().any(|x| !x.is_finite()))
    {
        return Err(BsmError::invalid("microphone positions must be finite"));
    }
    let m = mic_positions.len();
    let q = dirs.len();
    let units: Vec<[f64; 3]> = dirs.directions().iter().map(|d| d.unit_vector()).collect();
    let c0 = DEFAULT_SPEED_OF_SOUND;
    let bins = grid.bins();
    let mut data = vec![Complex64::default(); bins * m * q];
    data.par_chunks_mut(m * q).enumerate().for_each(|(bin, chunk)| {
        let k = 2.0 * std::f64::consts::PI * grid.bin_frequency(bin) / c0;
        for (mi, d) in mic_positions.iter().enumerate() {
            for (qi, u) in units.iter().enumerate() {
                let phase = k * (d[0] * u[0] + d[1] * u[1] + d[2] * u[2]);
                chunk[mi * q + qi] = Complex64::new(phase.cos(), phase.sin());
            }
        }
    });
    TransferFunctionSet::new(grid.clone(), dirs.clone(), m, TfKind::Atf, data)
}

/// Mode coefficients b_n(ka) for n = 0..=order. For real arguments
/// h2'_n = conj(h1'_n). Overflowed Hankel derivatives (n ≫ ka) produce a
/// vanishing coefficient rather than NaN.
fn rigid_sphere_modes(ka: f64, order: usize) -> Result<Vec<Complex64>> {
    const I_POW_CYCLE: [Complex64; 4] = [
        Complex64::new(0.0, -1.0), // i^{-1}
        Complex64::new(1.0, 0.0),  // i^{0}
        Complex64::new(0.0, 1.0),  // i^{1}
        Complex64::new(-1.0, 0.0), // i^{2}
    ];
    let (_, dh) = spherical_h1_array(order, ka)?;
    let ka2 = ka * ka;
    let mut modes = Vec::with_capacity(order + 1);
    for (n, dhn) in dh.iter().enumerate() {
        let denom = ka2 * dhn.conj();
        let b = if denom.re.is_finite() && denom.im.is_finite() && denom.norm_sqr() > 0.0 {
            I_POW_CYCLE[n % 4] / denom
        } else {
            Complex64::new(0.0, 0.0)
        };
        modes.push(b);
    }
    Ok(modes)
}

fn series_tail_ok(ka: f64, order: usize, tol: f64) -> Result<bool> {
    if ka < KA_PIN_THRESHOLD {
        return Ok(true);
    }
    let modes = rigid_sphere_modes(ka, order)?;
    let scale: f64 = modes
        .iter()
        .enumerate()
        .map(|(n, b)| b.norm() * (2 * n + 1) as f64)
        .sum();
    let tail = modes[order].norm() * (2 * order + 1) as f64;
    Ok(tail <= tol * scale.max(f64::MIN_POSITIVE))
}

/// Rigid-sphere pressure at surface points `point_dirs` for plane waves from
/// `dirs`, per frequency bin: data indexed [bin][point][direction].
fn rigid_sphere_pressure(
    radius: f64,
    point_dirs: &[Direction],
    grid: &FrequencyGrid,
    dirs: &DirectionGrid,
    order: usize,
    speed_of_sound: f64,
) -> Result<Vec<Complex64>> {
    let floor = RigidSphereArraySpec::min_order(radius, grid.sample_rate(), speed_of_sound);
    if order < floor {
        return Err(BsmError::invalid(format!(
            "truncation order {order} below required minimum {floor} for this grid"
        )));
    }
    let m = point_dirs.len();
    let q = dirs.len();

    // P_n(cos Θ) tables per (point, direction) pair; Θ never changes with
    // frequency.
    let mut legendre = vec![0.0f64; m * q * (order + 1)];
    for (mi, pd) in point_dirs.iter().enumerate() {
        let pu = pd.unit_vector();
        for (qi, sd) in dirs.directions().iter().enumerate() {
            let su = sd.unit_vector();
            let cos_theta =
                (pu[0] * su[0] + pu[1] * su[1] + pu[2] * su[2]).clamp(-1.0, 1.0);
            let p = legendre_array(order, cos_theta);
            let base = (mi * q + qi) * (order + 1);
            legendre[base..base + order + 1].copy_from_slice(&p);
        }
    }

    let bins = grid.bins();
    let mut data = vec![Complex64::default(); bins * m * q];
    let results: Vec<Result<()>> = data
        .par_chunks_mut(m * q)
        .enumerate()
        .map(|(bin, chunk)| {
            let ka = 2.0 * std::f64::consts::PI * grid.bin_frequency(bin) * radius
                / speed_of_sound;
            if ka < KA_PIN_THRESHOLD {
                chunk.fill(Complex64::new(1.0, 0.0));
                return Ok(());
            }
            let modes = rigid_sphere_modes(ka, order)?;
            let scale: f64 = modes
                .iter()
                .enumerate()
                .map(|(n, b)| b.norm() * (2 * n + 1) as f64)
                .sum();
            let tail = modes[order].norm() * (2 * order + 1) as f64;
            if tail > SERIES_TAIL_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(BsmError::numerical(format!(
                    "rigid-sphere series not converged at bin {bin} (ka = {ka:.3}): \
                     relative tail {:.3e}",
                    tail / scale
                )));
            }
            let weighted: Vec<Complex64> = modes
                .iter()
                .enumerate()
                .map(|(n, b)| b * (2 * n + 1) as f64)
                .collect();
            for pair in 0..m * q {
                let base = pair * (order + 1);
                let mut acc = Complex64::new(0.0, 0.0);
                for (n, w) in weighted.iter().enumerate() {
                    acc += w * legendre[base + n];
                }
                chunk[pair] = acc;
            }
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    Ok(data)
}

/// Steering matrix of a rigid-sphere array.
pub fn rigid_sphere_steering(
    spec: &RigidSphereArraySpec,
    grid: &FrequencyGrid,
    dirs: &DirectionGrid,
) -> Result<TransferFunctionSet> {
    let data = rigid_sphere_pressure(
        spec.radius,
        &spec.mic_directions,
        grid,
        dirs,
        spec.truncation_order,
        spec.speed_of_sound,
    )?;
    TransferFunctionSet::new(
        grid.clone(),
        dirs.clone(),
        spec.mic_directions.len(),
        TfKind::Atf,
        data,
    )
}

/// Synthetic spherical-head HRTF: each ear is a rigid-sphere surface point.
/// Channel 0 is the left ear.
pub fn spherical_head_hrtf(
    spec: &SphericalHeadHrtfSpec,
    grid: &FrequencyGrid,
    dirs: &DirectionGrid,
) -> Result<TransferFunctionSet> {
    let data = rigid_sphere_pressure(
        spec.head_radius,
        &[spec.left_ear, spec.right_ear],
        grid,
        dirs,
        spec.truncation_order,
        spec.speed_of_sound,
    )?;
    TransferFunctionSet::new(grid.clone(), dirs.clone(), 2, TfKind::Hrtf, data)
}

/// Horizontal-plane mic layout, full circle: `count` mics at 360/count°
/// spacing starting at azimuth 0°.
pub fn circular_layout(count: usize) -> Result<Vec<Direction>> {
    if count < 2 {
        return Err(BsmError::invalid("circular layout needs >= 2 microphones"));
    }
    (0..count)
        .map(|k| Direction::new(90.0, k as f64 * 360.0 / count as f64))
        .collect()
}

/// Horizontal-plane mic layout, front semicircle: `count` mics spanning
/// azimuth 0°..=180° inclusive at equal spacing.
pub fn semicircular_layout(count: usize) -> Result<Vec<Direction>> {
    if count < 2 {
        return Err(BsmError::invalid("semicircular layout needs >= 2 microphones"));
    }
    (0..count)
        .map(|k| Direction::new(90.0, k as f64 * 180.0 / (count - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid_48k_1024() -> FrequencyGrid {
        FrequencyGrid::new(48000.0, 1024).unwrap()
    }

    fn ring(step: f64) -> DirectionGrid {
        DirectionGrid::horizontal_ring(step).unwrap()
    }

    #[test]
    fn free_field_mic_at_origin_is_unity() {
        let grid = FrequencyGrid::new(48000.0, 64).unwrap();
        let dirs = ring(45.0);
        let atf = free_field_steering(&[[0.0, 0.0, 0.0]], &grid, &dirs).unwrap();
        for bin in 0..grid.bins() {
            for q in 0..dirs.len() {
                assert_eq!(atf.at(bin, 0, q), Complex64::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn free_field_hand_phase_case() {
        // Mic at (1,0,0), arrival from φ=0°, θ=90°, f = 343 Hz, c = 343 m/s:
        // phase 2π, value 1.
        let grid = FrequencyGrid::new(2744.0, 8).unwrap(); // bin 1 = 343 Hz
        let dirs = DirectionGrid::new(vec![Direction::new(90.0, 0.0).unwrap()], None).unwrap();
        let atf = free_field_steering(&[[1.0, 0.0, 0.0]], &grid, &dirs).unwrap();
        let v = atf.at(1, 0, 0);
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(v.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn free_field_conjugate_symmetry() {
        let grid = FrequencyGrid::new(48000.0, 64).unwrap();
        let dirs = DirectionGrid::lebedev_like(5).unwrap();
        let pos = [0.3, -0.2, 0.12];
        let neg = [-0.3, 0.2, -0.12];
        let a = free_field_steering(&[pos], &grid, &dirs).unwrap();
        let b = free_field_steering(&[neg], &grid, &dirs).unwrap();
        for bin in 0..grid.bins() {
            for q in 0..dirs.len() {
                let va = a.at(bin, 0, q);
                let vb = b.at(bin, 0, q).conj();
                assert_relative_eq!(va.re, vb.re, epsilon = 1e-12);
                assert_relative_eq!(va.im, vb.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn vanishing_sphere_magnitude_near_unity() {
        // 1 mm sphere on the 48 kHz / 1024 grid: bin 1 has ka ≈ 8.6e-7.
        let grid = grid_48k_1024();
        let dirs = ring(90.0);
        let mics = vec![Direction::new(90.0, 0.0).unwrap()];
        let spec =
            RigidSphereArraySpec::with_auto_order(0.001, mics, 48000.0, DEFAULT_SPEED_OF_SOUND)
                .unwrap();
        let atf = rigid_sphere_steering(&spec, &grid, &dirs).unwrap();
        for q in 0..dirs.len() {
            assert_relative_eq!(atf.at(1, 0, q).norm(), 1.0, epsilon = 1e-3);
        }
        // DC bin is pinned exactly.
        assert_eq!(atf.at(0, 0, 0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn bright_spot_and_higher_truncation_oracle() {
        // ka = 2 with a = 0.1 → f = 2·343/(2π·0.1) ≈ 1091.9 Hz. Use a grid
        // whose bin 1 lands exactly on ka = 2.
        let a = 0.1;
        let c0 = DEFAULT_SPEED_OF_SOUND;
        let f_ka2 = 2.0 * c0 / (2.0 * std::f64::consts::PI * a);
        let fft = 8;
        let fs = f_ka2 * fft as f64;
        let grid = FrequencyGrid::new(fs, fft).unwrap();
        let mics = vec![Direction::new(90.0, 0.0).unwrap()];
        let dirs = DirectionGrid::new(
            vec![
                Direction::new(90.0, 0.0).unwrap(),   // Θ = 0 (incident side)
                Direction::new(90.0, 180.0).unwrap(), // Θ = 180
            ],
            None,
        )
        .unwrap();
        let order = RigidSphereArraySpec::min_order(a, fs, c0) + 8;
        let spec = RigidSphereArraySpec::new(a, mics.clone(), fs, order, c0).unwrap();
        let atf = rigid_sphere_steering(&spec, &grid, &dirs).unwrap();
        let front = atf.at(1, 0, 0).norm();
        let back = atf.at(1, 0, 1).norm();
        assert!(front > back, "bright spot ordering violated: {front} vs {back}");

        // Higher-truncation oracle: N + 32 extra terms agree to 1e-8.
        let spec_hi = RigidSphereArraySpec::new(a, mics, fs, order + 32, c0).unwrap();
        let atf_hi = rigid_sphere_steering(&spec_hi, &grid, &dirs).unwrap();
        for q in 0..2 {
            let d = (atf.at(1, 0, q) - atf_hi.at(1, 0, q)).norm();
            assert!(d < 1e-8, "truncation difference {d}");
        }
    }

    #[test]
    fn rotation_invariance_of_rigid_sphere() {
        let grid = FrequencyGrid::new(8000.0, 32).unwrap();
        let rot = 40.0;
        let mics: Vec<Direction> = circular_layout(4).unwrap();
        let mics_rot: Vec<Direction> = mics
            .iter()
            .map(|d| Direction::new(d.elevation_deg(), d.azimuth_deg() + rot).unwrap())
            .collect();
        let dirs = ring(30.0);
        let dirs_rot = DirectionGrid::new(
            dirs.directions()
                .iter()
                .map(|d| Direction::new(d.elevation_deg(), d.azimuth_deg() + rot).unwrap())
                .collect(),
            None,
        )
        .unwrap();
        let spec =
            RigidSphereArraySpec::with_auto_order(0.05, mics, 8000.0, DEFAULT_SPEED_OF_SOUND)
                .unwrap();
        let spec_rot = RigidSphereArraySpec::with_auto_order(
            0.05,
            mics_rot,
            8000.0,
            DEFAULT_SPEED_OF_SOUND,
        )
        .unwrap();
        let a = rigid_sphere_steering(&spec, &grid, &dirs).unwrap();
        let b = rigid_sphere_steering(&spec_rot, &grid, &dirs_rot).unwrap();
        for bin in 0..grid.bins() {
            for m in 0..4 {
                for q in 0..dirs.len() {
                    let d = (a.at(bin, m, q) - b.at(bin, m, q)).norm();
                    assert!(d < 1e-10, "rotation broke invariance by {d}");
                }
            }
        }
    }

    #[test]
    fn head_hrtf_left_right_symmetry_on_median_plane() {
        let grid = FrequencyGrid::new(16000.0, 64).unwrap();
        let dirs = DirectionGrid::new(vec![Direction::new(90.0, 0.0).unwrap()], None).unwrap();
        let spec = SphericalHeadHrtfSpec::default_with_ear_azimuth(16000.0, 100.0).unwrap();
        let hrtf = spherical_head_hrtf(&spec, &grid, &dirs).unwrap();
        for bin in 0..grid.bins() {
            let l = hrtf.at(bin, 0, 0).norm();
            let r = hrtf.at(bin, 1, 0).norm();
            assert_relative_eq!(l, r, epsilon = 1e-9);
        }
    }

    #[test]
    fn head_hrtf_ipsilateral_louder_above_1khz() {
        let grid = grid_48k_1024();
        let spec = SphericalHeadHrtfSpec::default_with_ear_azimuth(48000.0, 100.0).unwrap();
        // Source exactly at the left-ear direction.
        let dirs = DirectionGrid::new(vec![spec.left_ear()], None).unwrap();
        let hrtf = spherical_head_hrtf(&spec, &grid, &dirs).unwrap();
        let first = grid.first_bin_at_or_above(1000.0);
        for bin in first..grid.bins() {
            let l = hrtf.at(bin, 0, 0).norm();
            let r = hrtf.at(bin, 1, 0).norm();
            assert!(l >= r, "bin {bin}: |L|={l} < |R|={r}");
        }
    }

    #[test]
    fn head_hrtf_swapping_ears_swaps_channels() {
        let grid = FrequencyGrid::new(16000.0, 32).unwrap();
        let dirs = ring(60.0);
        let fs = 16000.0;
        let left = Direction::new(90.0, 100.0).unwrap();
        let right = Direction::new(90.0, 260.0).unwrap();
        let spec = SphericalHeadHrtfSpec::with_auto_order(
            DEFAULT_HEAD_RADIUS,
            left,
            right,
            fs,
            DEFAULT_SPEED_OF_SOUND,
        )
        .unwrap();
        let swapped = SphericalHeadHrtfSpec::with_auto_order(
            DEFAULT_HEAD_RADIUS,
            right,
            left,
            fs,
            DEFAULT_SPEED_OF_SOUND,
        )
        .unwrap();
        let a = spherical_head_hrtf(&spec, &grid, &dirs).unwrap();
        let b = spherical_head_hrtf(&swapped, &grid, &dirs).unwrap();
        for bin in 0..grid.bins() {
            for q in 0..dirs.len() {
                assert_eq!(a.at(bin, 0, q), b.at(bin, 1, q));
                assert_eq!(a.at(bin, 1, q), b.at(bin, 0, q));
            }
        }
    }

    #[test]
    fn truncation_floor_is_enforced() {
        let mics = vec![Direction::new(90.0, 0.0).unwrap()];
        let err = RigidSphereArraySpec::new(0.1, mics, 48000.0, 10, DEFAULT_SPEED_OF_SOUND);
        assert!(err.is_err());
    }

    #[test]
    fn generated_sets_are_finite() {
        let grid = grid_48k_1024();
        let dirs = DirectionGrid::lebedev_like(5).unwrap();
        let spec = SphericalHeadHrtfSpec::default_with_ear_azimuth(48000.0, 100.0).unwrap();
        let hrtf = spherical_head_hrtf(&spec, &grid, &dirs).unwrap();
        hrtf.validate_finite().unwrap();
    }

    #[test]
    fn layouts_match_documented_azimuths() {
        let semi = semicircular_layout(6).unwrap();
        let az: Vec<f64> = semi.iter().map(|d| d.azimuth_deg()).collect();
        assert_eq!(az, vec![0.0, 36.0, 72.0, 108.0, 144.0, 180.0]);
        let circ = circular_layout(12).unwrap();
        assert_relative_eq!(circ[1].azimuth_deg(), 30.0, epsilon = 1e-12);
        assert_eq!(circ.len(), 12);
    }
}
