//! ERB-spaced Gammatone band weights for the ILD metric and loss.
//!
//! Band energies are frequency-domain weighted sums: the weight of band i at
//! frequency f is the 4th-order gammatone magnitude-squared response
//!
//! ```text
//! w_i(f) = [1 + ((f − f_i) / (1.019·ERB(f_i)))²]^−4
//! ```
//!
//! peak-normalized to 1 at f = f_i, with Glasberg–Moore ERB constants. This
//! keeps band energies differentiable and deterministic; no time-domain IIR
//! filtering is involved.

use crate::error::{BsmError, Result};
use crate::grid::FrequencyGrid;

pub const DEFAULT_BAND_COUNT: usize = 23;
pub const DEFAULT_F_LOW: f64 = 1500.0;
pub const DEFAULT_F_HIGH: f64 = 20000.0;

/// Glasberg–Moore equivalent rectangular bandwidth in Hz.
pub fn erb_bandwidth(f: f64) -> f64 {
    24.7 * (4.37 * f / 1000.0 + 1.0)
}

/// Glasberg–Moore ERB-number scale.
pub fn erb_number(f: f64) -> f64 {
    21.4 * (4.37 * f / 1000.0 + 1.0).log10()
}

fn erb_number_inverse(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) / 4.37 * 1000.0
}

/// `count` center frequencies uniformly spaced on the ERB-number scale,
/// endpoints inclusive.
pub fn make_erb_centers(f_low: f64, f_high: f64, count: usize) -> Result<Vec<f64>> {
    if !(f_low > 0.0) || !(f_high > f_low) {
        return Err(BsmError::invalid("need 0 < f_low < f_high"));
    }
    if count < 2 {
        return Err(BsmError::invalid("need at least 2 bands"));
    }
    let e_low = erb_number(f_low);
    let e_high = erb_number(f_high);
    let mut centers = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        centers.push(erb_number_inverse(e_low + t * (e_high - e_low)));
    }
    // Pin the endpoints exactly; the inverse map reproduces them only to
    // rounding.
    centers[0] = f_low;
    centers[count - 1] = f_high;
    Ok(centers)
}

/// Nonnegative band-weight matrix `[band][bin]` on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Filterbank {
    centers: Vec<f64>,
    weights: Vec<f64>, // row-major [band][bin]
    bins: usize,
    f_low: f64,
    f_high: f64,
}

impl Filterbank {
    /// 23 bands between 1.5 and 20 kHz (clipped to Nyquist).
    pub fn default_for(grid: &FrequencyGrid) -> Result<Self> {
        let f_high = DEFAULT_F_HIGH.min(grid.nyquist() * 0.999);
        let centers = make_erb_centers(DEFAULT_F_LOW, f_high, DEFAULT_BAND_COUNT)?;
        Self::gammatone_weights(&centers, grid)
    }

    pub fn with_band_count(grid: &FrequencyGrid, bands: usize) -> Result<Self> {
        let f_high = DEFAULT_F_HIGH.min(grid.nyquist() * 0.999);
        let centers = make_erb_centers(DEFAULT_F_LOW, f_high, bands)?;
        Self::gammatone_weights(&centers, grid)
    }

    /// Builds the weight matrix for explicit centers.
    pub fn gammatone_weights(centers: &[f64], grid: &FrequencyGrid) -> Result<Self> {
        if centers.is_empty() {
            return Err(BsmError::invalid("need at least one band center"));
        }
        if centers
            .iter()
            .any(|&c| !(c > 0.0) || c >= grid.nyquist() || !c.is_finite())
        {
            return Err(BsmError::invalid(
                "band centers must lie strictly inside (0, Nyquist)",
            ));
        }
        let bins = grid.bins();
        let mut weights = vec![0.0f64; centers.len() * bins];
        for (bi, &fc) in centers.iter().enumerate() {
            let bw = 1.019 * erb_bandwidth(fc);
            for bin in 0..bins {
                let f = grid.bin_frequency(bin);
                let u = (f - fc) / bw;
                weights[bi * bins + bin] = (1.0 + u * u).powi(-4);
            }
        }
        let bank = Filterbank {
            centers: centers.to_vec(),
            weights,
            bins,
            f_low: centers[0],
            f_high: centers[centers.len() - 1],
        };
        bank.check_peaks(grid)?;
        Ok(bank)
    }

    /// Every row must peak uniquely at the bin nearest its center.
    fn check_peaks(&self, grid: &FrequencyGrid) -> Result<()> {
        for (bi, &fc) in self.centers.iter().enumerate() {
            let row = self.band_weights(bi);
            let nearest = (fc / grid.bin_spacing()).round() as usize;
            let peak = row[nearest.min(self.bins - 1)];
            for (bin, &w) in row.iter().enumerate() {
                if bin != nearest && w >= peak {
                    return Err(BsmError::invalid(format!(
                        "band {bi} does not peak uniquely at bin {nearest}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn band_count(&self) -> usize {
        self.centers.len()
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn f_low(&self) -> f64 {
        self.f_low
    }

    pub fn f_high(&self) -> f64 {
        self.f_high
    }

    pub fn band_weights(&self, band: usize) -> &[f64] {
        &self.weights[band * self.bins..(band + 1) * self.bins]
    }

    /// Band energy of a magnitude-squared spectrum restricted to bins
    /// `bin_range`: Σ w(f)·|X(f)|².
    pub fn band_energy(&self, band: usize, power: &[f64], bin_range: (usize, usize)) -> f64 {
        let row = self.band_weights(band);
        let (lo, hi) = bin_range;
        let mut acc = 0.0;
        for bin in lo..hi.min(self.bins) {
            acc += row[bin] * power[bin];
        }
        acc
    }

    /// Writes the weight matrix as CSV (band, center_hz, then one value per
    /// bin).
    pub fn to_csv(&self, grid: &FrequencyGrid) -> String {
        let mut out = String::from("band,center_hz");
        for bin in 0..self.bins {
            out.push_str(&format!(",{}", grid.bin_frequency(bin)));
        }
        out.push('\n');
        for (bi, &fc) in self.centers.iter().enumerate() {
            out.push_str(&format!("{bi},{fc}"));
            for &w in self.band_weights(bi) {
                out.push_str(&format!(",{w:.9e}"));
            }
            out.push('\n');
        }
        out
    }
}
