//! Closed-form BSM-LS and iterative BSM-MagLS filter design.
//!
//! Per frequency bin and ear, BSM-LS solves the regularized normal equations
//!
//! ```text
//! (V V^H + (σn²/σs²) I_M) c = V h*        σn²/σs² = 10^(−snr_db/10)
//! ```
//!
//! BSM-MagLS keeps the LS solution below the cutoff and, walking bins upward
//! from the cutoff, replaces the HRTF with a magnitude-only target whose phase
//! is the element-wise phase of the previous bin's reconstruction:
//!
//! ```text
//! ĥ(f_n) = |h(f_n)|·exp(i·∠(c(f_{n−1})^H V(f_{n−1})))
//! ```
//!
//! The first bin at or above the cutoff seeds the recursion from the LS
//! solution of the preceding bin. Solves use Cholesky on the Hermitian
//! positive definite system, falling back to partially pivoted LU when the
//! regularizer is zero.

use crate::error::{BsmError, Result};
use crate::tfset::{FilterSet, MethodTag, TfKind, TransferFunctionSet};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

/// Shared design parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DesignConfig {
    /// Design SNR in dB; the regularizer is 10^(−snr_db/10).
    pub snr_db: f64,
    /// MagLS cutoff in Hz.
    pub cutoff_hz: f64,
    /// FFT size used by CLI grid synthesis; designs take the grid from the
    /// ATF container.
    pub fft_size: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig { snr_db: 20.0, cutoff_hz: 1500.0, fft_size: 1024 }
    }
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(BsmError::invalid("snr_db must be finite"));
        }
        if !(self.cutoff_hz > 0.0) || !self.cutoff_hz.is_finite() {
            return Err(BsmError::invalid("cutoff must be positive"));
        }
        Ok(())
    }

    pub fn regularizer(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

fn check_inputs(
    atf: &TransferFunctionSet,
    hrtf: &TransferFunctionSet,
    cfg: &DesignConfig,
) -> Result<()> {
    cfg.validate()?;
    if atf.kind() != TfKind::Atf {
        return Err(BsmError::invalid("first argument must be an ATF set"));
    }
    if hrtf.kind() != TfKind::Hrtf {
        return Err(BsmError::invalid("second argument must be an HRTF set"));
    }
    atf.same_grids(hrtf)?;
    Ok(())
}

fn steering_matrix(atf: &TransferFunctionSet, bin: usize) -> DMatrix<Complex64> {
    let m = atf.channels();
    let q = atf.directions().len();
    DMatrix::from_fn(m, q, |r, c| atf.at(bin, r, c))
}

/// Solves (V V^H + λ I) c = V h_target* for one ear at one bin.
fn solve_bin(
    v: &DMatrix<Complex64>,
    h_target: &DVector<Complex64>,
    lambda: f64,
    bin: usize,
) -> Result<DVector<Complex64>> {
    let m = v.nrows();
    let mut a = v * v.adjoint();
    for i in 0..m {
        a[(i, i)] += Complex64::new(lambda, 0.0);
    }
    let rhs = v * h_target.map(|z| z.conj());
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok(DVector::zeros(m));
    }
    let c = if lambda > 0.0 {
        match a.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => a
                .clone()
                .lu()
                .solve(&rhs)
                .ok_or_else(|| BsmError::numerical(format!("singular system at bin {bin}")))?,
        }
    } else {
        a.clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| BsmError::numerical(format!("singular system at bin {bin}")))?
    };
    let residual = (&a * &c - &rhs).norm();
    if residual > 1e-8 * rhs_norm {
        return Err(BsmError::numerical(format!(
            "normal-equation residual {residual:.3e} exceeds 1e-8·‖rhs‖ at bin {bin}"
        )));
    }
    Ok(c)
}

/// BSM-LS: the regularized closed form at every bin.
pub fn design_ls(
    atf: &TransferFunctionSet,
    hrtf: &TransferFunctionSet,
    cfg: &DesignConfig,
) -> Result<FilterSet> {
    check_inputs(atf, hrtf, cfg)?;
    let grid = atf.grid().clone();
    let m = atf.channels();
    let q = atf.directions().len();
    let lambda = cfg.regularizer();
    let bins = grid.bins();

    let mut data = vec![Complex64::default(); bins * m * 2];
    let results: Vec<Result<()>> = data
        .par_chunks_mut(m * 2)
        .enumerate()
        .map(|(bin, chunk)| {
            let v = steering_matrix(atf, bin);
            for ear in 0..2 {
                let h = DVector::from_fn(q, |i, _| hrtf.at(bin, ear, i));
                let c = solve_bin(&v, &h, lambda, bin)?;
                for mi in 0..m {
                    chunk[mi * 2 + ear] = c[mi];
                }
            }
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    FilterSet::new(grid, m, MethodTag::Ls, cfg.snr_db, data)
}

/// BSM-MagLS: LS below the cutoff, magnitude matching with recursive phase
/// propagation above it. Deterministic: the above-cutoff walk is strictly
/// ascending in frequency.
pub fn design_magls(
    atf: &TransferFunctionSet,
    hrtf: &TransferFunctionSet,
    cfg: &DesignConfig,
) -> Result<FilterSet> {
    let mut out = design_ls(atf, hrtf, cfg)?;
    out.set_method(MethodTag::MagLs);
    let grid = atf.grid().clone();
    let bins = grid.bins();
    let m = atf.channels();
    let q = atf.directions().len();
    let lambda = cfg.regularizer();

    if cfg.cutoff_hz > grid.nyquist() {
        return Ok(out); // Entire band stays LS.
    }
    // The recursion needs a preceding bin; the DC bin always stays LS.
    let start = grid.first_bin_at_or_above(cfg.cutoff_hz).max(1);

    let run_ear = |ear: usize, out: &FilterSet| -> Result<Vec<(usize, Vec<Complex64>)>> {
        let mut updates = Vec::with_capacity(bins - start);
        let mut prev_c: DVector<Complex64> =
            DVector::from_fn(m, |i, _| out.at(start - 1, i, ear));
        let mut prev_v = steering_matrix(atf, start - 1);
        for bin in start..bins {
            // Per-direction phase of the previous bin's reconstruction
            // (c^H V)_q = Σ_m conj(c_m)·V_mq.
            let v = steering_matrix(atf, bin);
            let h_hat = DVector::from_fn(q, |qi, _| {
                let mut recon = Complex64::new(0.0, 0.0);
                for mi in 0..m {
                    recon += prev_c[mi].conj() * prev_v[(mi, qi)];
                }
                let phase = recon.im.atan2(recon.re);
                let mag = hrtf.at(bin, ear, qi).norm();
                Complex64::new(phase.cos() * mag, phase.sin() * mag)
            });
            let c = solve_bin(&v, &h_hat, lambda, bin)?;
            updates.push((bin, c.iter().copied().collect()));
            prev_c = c;
            prev_v = v;
        }
        Ok(updates)
    };

    // The two ears recurse independently.
    let (left, right) = rayon::join(|| run_ear(0, &out), || run_ear(1, &out));
    for (ear, updates) in [(0usize, left?), (1usize, right?)] {
        for (bin, c) in updates {
            for (mi, value) in c.into_iter().enumerate() {
                out.set(bin, mi, ear, value);
            }
        }
    }
    Ok(out)
}
