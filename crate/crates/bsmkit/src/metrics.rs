//! The objective evaluation suite: NMSE, normalized magnitude error,
//! Gammatone-band ILD curves and errors, BSD, and LSD.
//!
//! NMSE and magnitude error are per-(bin, direction) dB matrices per ear,
//! floored at −300 dB. ILD is the 10·log10 ratio of Gammatone band energies
//! between ears on the horizontal subgrid; the scalar ILD error per direction
//! is the band-mean of |ΔILD| in dB. BSD is the signed band-energy log ratio
//! per ear; LSD is its RMS over bands.

use crate::error::{BsmError, Result};
use crate::filterbank::Filterbank;
use crate::grid::horizontal_subgrid_with_tolerance;
use crate::tfset::TransferFunctionSet;
use num_complex::Complex64;

/// Floor applied when the error energy underflows to zero.
pub const DB_FLOOR: f64 = -300.0;
/// Reference magnitudes below this are excluded from NMSE/magnitude error.
pub const EPS_DENOMINATOR: f64 = 1e-12;

fn db_ratio(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        DB_FLOOR
    } else {
        (10.0 * (num / den).log10()).max(DB_FLOOR)
    }
}

/// Per-(bin, direction) dB matrices for one ear pair, with exclusion
/// bookkeeping for vanishing reference bins.
#[derive(Debug, Clone)]
pub struct ErrorMatrix {
    /// [ear][bin][direction], NaN where excluded.
    pub db: [Vec<f64>; 2],
    pub bins: usize,
    pub directions: usize,
    pub excluded: usize,
}

impl ErrorMatrix {
    fn value(&self, ear: usize, bin: usize, dir: usize) -> f64 {
        self.db[ear][bin * self.directions + dir]
    }

    /// Mean over both ears and all included (bin, direction) cells with
    /// bin frequency ≥ `min_hz`.
    pub fn mean_db_above(&self, grid_spacing_hz: f64, min_hz: f64) -> f64 {
        let mut acc = 0.0;
        let mut count = 0usize;
        for ear in 0..2 {
            for bin in 0..self.bins {
                if bin as f64 * grid_spacing_hz < min_hz {
                    continue;
                }
                for dir in 0..self.directions {
                    let v = self.value(ear, bin, dir);
                    if v.is_finite() {
                        acc += v;
                        count += 1;
                    }
                }
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            acc / count as f64
        }
    }
}

fn error_matrix<F>(
    reference: &TransferFunctionSet,
    rendered: &TransferFunctionSet,
    cell: F,
) -> Result<ErrorMatrix>
where
    F: Fn(Complex64, Complex64) -> f64,
{
    reference.same_grids(rendered)?;
    if reference.channels() != 2 || rendered.channels() != 2 {
        return Err(BsmError::invalid("error metrics need binaural (2-channel) sets"));
    }
    let bins = reference.grid().bins();
    let q = reference.directions().len();
    let mut out = ErrorMatrix {
        db: [vec![f64::NAN; bins * q], vec![f64::NAN; bins * q]],
        bins,
        directions: q,
        excluded: 0,
    };
    let mut included = 0usize;
    for ear in 0..2 {
        for bin in 0..bins {
            for dir in 0..q {
                let p = reference.at(bin, ear, dir);
                if p.norm() < EPS_DENOMINATOR {
                    out.excluded += 1;
                    continue;
                }
                let z = rendered.at(bin, ear, dir);
                out.db[ear][bin * q + dir] = cell(p, z);
                included += 1;
            }
        }
    }
    if included == 0 {
        return Err(BsmError::invalid(
            "all reference cells below the denominator threshold",
        ));
    }
    Ok(out)
}

/// NMSE(f, Ω) = 10·log10(|p − z|²/|p|²) per ear.
pub fn nmse(
    reference: &TransferFunctionSet,
    rendered: &TransferFunctionSet,
) -> Result<ErrorMatrix> {
    error_matrix(reference, rendered, |p, z| {
        db_ratio((p - z).norm_sqr(), p.norm_sqr())
    })
}

/// Magnitude error(f, Ω) = 10·log10((|p| − |z|)²/|p|²) per ear.
pub fn magnitude_error(
    reference: &TransferFunctionSet,
    rendered: &TransferFunctionSet,
) -> Result<ErrorMatrix> {
    error_matrix(reference, rendered, |p, z| {
        let d = p.norm() - z.norm();
        db_ratio(d * d, p.norm_sqr())
    })
}

/// Gammatone band energies of one binaural set on the horizontal subgrid:
/// [ear][band][horizontal direction], integrated over [f_low, f_high].
fn band_energies(
    set: &TransferFunctionSet,
    bank: &Filterbank,
    horiz: &[usize],
) -> Result<Vec<f64>> {
    let grid = set.grid();
    let bins = grid.bins();
    let lo = grid.first_bin_at_or_above(bank.f_low());
    let mut hi = bins;
    while hi > lo && grid.bin_frequency(hi - 1) > bank.f_high() {
        hi -= 1;
    }
    if hi - lo < 2 {
        return Err(BsmError::invalid("ILD band window is empty on this grid"));
    }
    let bands = bank.band_count();
    let mut out = vec![0.0f64; 2 * bands * horiz.len()];
    for (hi_idx, &dir) in horiz.iter().enumerate() {
        for ear in 0..2 {
            let power: Vec<f64> = (lo..hi)
                .map(|bin| set.at(bin, ear, dir).norm_sqr())
                .collect();
            for band in 0..bands {
                let row = bank.band_weights(band);
                let mut acc = 0.0;
                for (k, bin) in (lo..hi).enumerate() {
                    acc += row[bin] * power[k];
                }
                out[(ear * bands + band) * horiz.len() + hi_idx] = acc;
            }
        }
    }
    Ok(out)
}

/// ILD in dB per (band, horizontal direction).
#[derive(Debug, Clone)]
pub struct IldCurves {
    /// [band][horizontal direction] dB.
    pub db: Vec<f64>,
    pub bands: usize,
    pub directions: usize,
}

impl IldCurves {
    pub fn at(&self, band: usize, dir: usize) -> f64 {
        self.db[band * self.directions + dir]
    }

    /// Band-averaged ILD per direction.
    pub fn band_mean(&self) -> Vec<f64> {
        (0..self.directions)
            .map(|d| (0..self.bands).map(|b| self.at(b, d)).sum::<f64>() / self.bands as f64)
            .collect()
    }
}

/// Band-energy log ratios between ears on the horizontal subgrid.
pub fn ild_curves(
    set: &TransferFunctionSet,
    bank: &Filterbank,
    horiz: &[usize],
) -> Result<IldCurves> {
    if horiz.is_empty() {
        return Err(BsmError::invalid("empty horizontal subgrid"));
    }
    let e = band_energies(set, bank, horiz)?;
    let bands = bank.band_count();
    let qh = horiz.len();
    let mut db = vec![0.0f64; bands * qh];
    for band in 0..bands {
        for d in 0..qh {
            let el = e[band * qh + d];
            let er = e[(bands + band) * qh + d];
            if !(el > 0.0) || !(er > 0.0) {
                return Err(BsmError::numerical(
                    "zero Gammatone band energy in ILD evaluation",
                ));
            }
            db[band * qh + d] = 10.0 * (el / er).log10();
        }
    }
    Ok(IldCurves { db, bands, directions: qh })
}

/// Per-direction ILD error (band-mean of |ΔILD| in dB) plus summary.
#[derive(Debug, Clone)]
pub struct IldError {
    pub per_direction: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

pub fn ild_error(
    reference: &TransferFunctionSet,
    rendered: &TransferFunctionSet,
    bank: &Filterbank,
    horiz: &[usize],
) -> Result<IldError> {
    reference.same_grids(rendered)?;
    let ref_curves = ild_curves(reference, bank, horiz)?;
    let out_curves = ild_curves(rendered, bank, horiz)?;
    let qh = horiz.len();
    let per_direction: Vec<f64> = (0..qh)
        .map(|d| {
            (0..bank.band_count())
                .map(|b| (ref_curves.at(b, d) - out_curves.at(b, d)).abs())
                .sum::<f64>()
                / bank.band_count() as f64
        })
        .collect();
    let mean = per_direction.iter().sum::<f64>() / qh as f64;
    let var = per_direction.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / qh as f64;
    Ok(IldError { per_direction, mean, std: var.sqrt() })
}

/// Signed BSD per band per ear and scalar LSD per ear.
#[derive(Debug, Clone)]
pub struct BsdLsd {
    /// [ear][band] signed dB.
    pub bsd: [Vec<f64>; 2],
    /// [ear] dB.
    pub lsd: [f64; 2],
}

/// BSD(f_i) = 10·log10(band_energy(z)/band_energy(p)); LSD = RMS over bands.
/// `p` and `z` are per-ear one-sided magnitude spectra on the bank's grid
/// (typically BRIR transfer functions).
pub fn bsd_lsd(
    p: &[Vec<f64>; 2],
    z: &[Vec<f64>; 2],
    bank: &Filterbank,
    grid_spacing_hz: f64,
) -> Result<BsdLsd> {
    let bins = bank.bins();
    for sig in [p, z] {
        if sig[0].len() != bins || sig[1].len() != bins {
            return Err(BsmError::invalid("spectrum length does not match the bank"));
        }
    }
    let lo = (bank.f_low() / grid_spacing_hz).ceil() as usize;
    let mut hi = bins;
    while hi > lo && (hi - 1) as f64 * grid_spacing_hz > bank.f_high() {
        hi -= 1;
    }
    let bands = bank.band_count();
    let mut bsd = [vec![0.0f64; bands], vec![0.0f64; bands]];
    let mut lsd = [0.0f64; 2];
    for ear in 0..2 {
        let p_power: Vec<f64> = p[ear][lo..hi].iter().map(|m| m * m).collect();
        let z_power: Vec<f64> = z[ear][lo..hi].iter().map(|m| m * m).collect();
        for band in 0..bands {
            let row = bank.band_weights(band);
            let mut ep = 0.0;
            let mut ez = 0.0;
            for (k, bin) in (lo..hi).enumerate() {
                ep += row[bin] * p_power[k];
                ez += row[bin] * z_power[k];
            }
            if !(ep > 0.0) || !(ez > 0.0) {
                return Err(BsmError::numerical("zero band energy in BSD"));
            }
            let v = 10.0 * (ez / ep).log10();
            bsd[ear][band] = v;
            lsd[ear] += v * v;
        }
        lsd[ear] = (lsd[ear] / bands as f64).sqrt();
    }
    Ok(BsdLsd { bsd, lsd })
}

/// One method's full evaluation against a reference.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub method: String,
    pub nmse: ErrorMatrix,
    pub magnitude: ErrorMatrix,
    pub ild: IldError,
    pub ild_curves_ref: IldCurves,
    pub ild_curves_out: IldCurves,
    /// Mean NMSE / magnitude error above the summary cutoff (dB).
    pub nmse_mean_db: f64,
    pub magnitude_mean_db: f64,
    pub summary_min_hz: f64,
    pub horiz_mismatch_deg: f64,
}

impl MetricReport {
    /// Long-format CSV rows: method, metric, frequency_or_band, direction,
    /// value. Matrices are summarized per frequency (direction = "all") to
    /// keep files tractable; ILD rows carry the direction index.
    pub fn to_csv_rows(&self, grid_spacing_hz: f64) -> String {
        let mut out = String::new();
        for (name, matrix) in [("nmse", &self.nmse), ("magnitude", &self.magnitude)] {
            for bin in 0..matrix.bins {
                let mut acc = 0.0;
                let mut n = 0usize;
                for ear in 0..2 {
                    for d in 0..matrix.directions {
                        let v = matrix.db[ear][bin * matrix.directions + d];
                        if v.is_finite() {
                            acc += v;
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    out.push_str(&format!(
                        "{},{name},{},all,{:.6}\n",
                        self.method,
                        bin as f64 * grid_spacing_hz,
                        acc / n as f64
                    ));
                }
            }
        }
        for (d, v) in self.ild.per_direction.iter().enumerate() {
            out.push_str(&format!("{},ild_error,all,{d},{v:.6}\n", self.method));
        }
        out
    }

    /// Table-style "mean_(std)" JSON summary.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "ild_db": format!("{:.2}_({:.2})", self.ild.mean, self.ild.std),
            "ild_mean_db": self.ild.mean,
            "ild_std_db": self.ild.std,
            "magnitude_mean_db": self.magnitude_mean_db,
            "nmse_mean_db": self.nmse_mean_db,
            "summary_min_hz": self.summary_min_hz,
            "horizontal_mismatch_deg": self.horiz_mismatch_deg,
            "excluded_cells": self.nmse.excluded,
            "ild_aggregation": "per-direction band-mean of |ΔILD|, mean ± std over directions",
        })
    }
}

/// Evaluates one rendered set against the reference: NMSE, magnitude, ILD
/// over `horiz_count` horizontal targets, with NMSE/magnitude summaries
/// restricted to bins at or above `summary_min_hz`.
pub fn evaluate(
    method: &str,
    reference: &TransferFunctionSet,
    rendered: &TransferFunctionSet,
    bank: &Filterbank,
    horiz_count: usize,
    summary_min_hz: f64,
) -> Result<MetricReport> {
    let (horiz, mismatch) =
        horizontal_subgrid_with_tolerance(reference.directions(), horiz_count, 3.0)?;
    let nmse_m = nmse(reference, rendered)?;
    let mag_m = magnitude_error(reference, rendered)?;
    let ild = ild_error(reference, rendered, bank, &horiz)?;
    let spacing = reference.grid().bin_spacing();
    let nmse_mean = nmse_m.mean_db_above(spacing, summary_min_hz);
    let mag_mean = mag_m.mean_db_above(spacing, summary_min_hz);
    Ok(MetricReport {
        method: method.to_string(),
        ild_curves_ref: ild_curves(reference, bank, &horiz)?,
        ild_curves_out: ild_curves(rendered, bank, &horiz)?,
        nmse: nmse_m,
        magnitude: mag_m,
        ild,
        nmse_mean_db: nmse_mean,
        magnitude_mean_db: mag_mean,
        summary_min_hz,
        horiz_mismatch_deg: mismatch,
    })
}
