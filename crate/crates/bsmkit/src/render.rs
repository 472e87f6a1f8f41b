//! Applying BSM filters: plane-wave reconstruction for metric evaluation,
//! time-domain taps, and overlap-add binaural rendering.
//!
//! The rendering convention is z = c^H x, so the transfer function actually
//! applied per (mic, ear) is the conjugate of the stored coefficient. Taps
//! are produced by Hermitian extension of the one-sided spectrum (real parts
//! forced at DC and Nyquist), inverse FFT, a circular shift of fft_size/2 for
//! causality, and a 16-tap half-Hann edge taper. Every rendered method shares
//! that same fft_size/2 latency, so interaural and inter-method relationships
//! are preserved.

use crate::error::{BsmError, Result};
use crate::tfset::{FilterSet, TfKind, TransferFunctionSet};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Edge taper length in samples on each side of the impulse response.
const EDGE_TAPER: usize = 16;

/// z[bin][ear][direction] = Σ_m conj(c_m) v_m: the binaural spectra a
/// plane-wave field from each ATF direction would produce. The result reuses
/// the HRTF container layout (channels = ears).
pub fn render_plane_waves(
    filters: &FilterSet,
    atf: &TransferFunctionSet,
) -> Result<TransferFunctionSet> {
    if atf.kind() != TfKind::Atf {
        return Err(BsmError::invalid("render_plane_waves needs an ATF set"));
    }
    if filters.grid() != atf.grid() {
        return Err(BsmError::GridMismatch("filters and ATF grids differ".into()));
    }
    if filters.mic_count() != atf.channels() {
        return Err(BsmError::invalid("filters and ATF disagree on microphone count"));
    }
    let grid = atf.grid().clone();
    let q = atf.directions().len();
    let m = atf.channels();
    let bins = grid.bins();
    let mut data = vec![Complex64::default(); bins * 2 * q];
    for bin in 0..bins {
        for ear in 0..2 {
            for qi in 0..q {
                let mut acc = Complex64::new(0.0, 0.0);
                for mi in 0..m {
                    acc += filters.at(bin, mi, ear).conj() * atf.at(bin, mi, qi);
                }
                data[(bin * 2 + ear) * q + qi] = acc;
            }
        }
    }
    TransferFunctionSet::new(grid, atf.directions().clone(), 2, TfKind::Hrtf, data)
}

/// Real impulse response of one one-sided spectrum: Hermitian extension,
/// inverse FFT, circular shift by fft_size/2, half-Hann taper on the first
/// and last 16 taps. Fails if the pre-discard imaginary residue exceeds
/// 1e-10 relative to the peak.
pub fn one_sided_to_taps(spectrum: &[Complex64], fft_size: usize) -> Result<Vec<f64>> {
    let bins = fft_size / 2 + 1;
    if spectrum.len() != bins {
        return Err(BsmError::invalid(format!(
            "spectrum has {} bins, expected {bins}",
            spectrum.len()
        )));
    }
    let mut full = vec![Complex64::default(); fft_size];
    // DC and Nyquist must be real for a real signal; Hermitian extension
    // takes their real parts.
    full[0] = Complex64::new(spectrum[0].re, 0.0);
    full[bins - 1] = Complex64::new(spectrum[bins - 1].re, 0.0);
    for k in 1..bins - 1 {
        full[k] = spectrum[k];
        full[fft_size - k] = spectrum[k].conj();
    }
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(fft_size);
    ifft.process(&mut full);
    let scale = 1.0 / fft_size as f64;
    let peak = full.iter().map(|z| z.re.abs() * scale).fold(0.0f64, f64::max);
    let imag_max = full.iter().map(|z| z.im.abs() * scale).fold(0.0f64, f64::max);
    if imag_max > 1e-10 * peak.max(1.0) {
        return Err(BsmError::numerical(format!(
            "Hermitian reconstruction left imaginary residue {imag_max:.3e}"
        )));
    }
    let half = fft_size / 2;
    let mut taps = vec![0.0f64; fft_size];
    for (n, tap) in taps.iter_mut().enumerate() {
        *tap = full[(n + half) % fft_size].re * scale;
    }
    if fft_size >= 4 * EDGE_TAPER {
        for i in 0..EDGE_TAPER {
            let w = 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / EDGE_TAPER as f64).cos());
            taps[i] *= w;
            taps[fft_size - 1 - i] *= w;
        }
    }
    Ok(taps)
}

/// Time-domain taps per (mic, ear), applying the c^H convention (conjugate of
/// the stored coefficients).
pub fn filters_to_impulse_responses(filters: &FilterSet) -> Result<Vec<Vec<Vec<f64>>>> {
    let bins = filters.grid().bins();
    let fft_size = filters.grid().fft_size();
    let m = filters.mic_count();
    let mut out = Vec::with_capacity(m);
    for mi in 0..m {
        let mut per_ear = Vec::with_capacity(2);
        for ear in 0..2 {
            let spec: Vec<Complex64> =
                (0..bins).map(|b| filters.at(b, mi, ear).conj()).collect();
            per_ear.push(one_sided_to_taps(&spec, fft_size)?);
        }
        out.push(per_ear);
    }
    Ok(out)
}

/// Overlap-add FFT convolution; output length is `x.len() + h.len() − 1`.
pub fn ola_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return vec![0.0; x.len() + h.len()];
    }
    let l = h.len();
    let fft_len = (2 * l.max(64)).next_power_of_two();
    let block = fft_len - l + 1;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(fft_len);
    let ifft = planner.plan_fft_inverse(fft_len);

    let mut h_pad = vec![Complex64::default(); fft_len];
    for (dst, src) in h_pad.iter_mut().zip(h) {
        *dst = Complex64::new(*src, 0.0);
    }
    fft.process(&mut h_pad);

    let mut out = vec![0.0f64; x.len() + l - 1];
    let scale = 1.0 / fft_len as f64;
    let mut start = 0;
    while start < x.len() {
        let n = block.min(x.len() - start);
        let mut buf = vec![Complex64::default(); fft_len];
        for i in 0..n {
            buf[i] = Complex64::new(x[start + i], 0.0);
        }
        fft.process(&mut buf);
        for (b, hh) in buf.iter_mut().zip(&h_pad) {
            *b *= hh;
        }
        ifft.process(&mut buf);
        let end = (start + n + l - 1).min(out.len());
        for i in 0..end - start {
            out[start + i] += buf[i].re * scale;
        }
        start += n;
    }
    out
}

/// Renders M microphone channels to two ears through a filter set. Output
/// carries the shared fft_size/2 causality latency of the taps.
pub fn binaural_render(mic_signals: &[Vec<f64>], filters: &FilterSet) -> Result<[Vec<f64>; 2]> {
    if mic_signals.len() != filters.mic_count() {
        return Err(BsmError::invalid(format!(
            "{} input channels for {} filter mics",
            mic_signals.len(),
            filters.mic_count()
        )));
    }
    let n = mic_signals.iter().map(|c| c.len()).max().unwrap_or(0);
    if n == 0 {
        return Err(BsmError::invalid("empty input signal"));
    }
    let taps = filters_to_impulse_responses(filters)?;
    let out_len = n + filters.grid().fft_size() - 1;
    let mut out = [vec![0.0f64; out_len], vec![0.0f64; out_len]];
    for (mi, chan) in mic_signals.iter().enumerate() {
        for ear in 0..2 {
            let y = ola_convolve(chan, &taps[mi][ear]);
            for (dst, src) in out[ear].iter_mut().zip(&y) {
                *dst += src;
            }
        }
    }
    Ok(out)
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Scales a stereo pair so its joint RMS matches `target_rms` (the stand-in
/// for programme-loudness alignment between methods).
pub fn match_rms(signals: &mut [Vec<f64>; 2], target_rms: f64) -> f64 {
    let joint: Vec<f64> = signals[0].iter().chain(signals[1].iter()).copied().collect();
    let current = rms(&joint);
    if current == 0.0 {
        return 1.0;
    }
    let gain = target_rms / current;
    for ch in signals.iter_mut() {
        for v in ch.iter_mut() {
            *v *= gain;
        }
    }
    gain
}

pub fn peak_normalize(signals: &mut [Vec<f64>; 2]) -> f64 {
    let peak = signals
        .iter()
        .flat_map(|c| c.iter())
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    if peak == 0.0 {
        return 1.0;
    }
    let gain = 1.0 / peak;
    for ch in signals.iter_mut() {
        for v in ch.iter_mut() {
            *v *= gain;
        }
    }
    gain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use crate::tfset::MethodTag;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn direct_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len() + h.len() - 1];
        for (i, &xi) in x.iter().enumerate() {
            for (j, &hj) in h.iter().enumerate() {
                y[i + j] += xi * hj;
            }
        }
        y
    }

    #[test]
    fn flat_spectrum_gives_shifted_unit_impulse() {
        let fft = 128;
        let spec = vec![Complex64::new(1.0, 0.0); fft / 2 + 1];
        let taps = one_sided_to_taps(&spec, fft).unwrap();
        for (n, &t) in taps.iter().enumerate() {
            if n == fft / 2 {
                assert!((t - 1.0).abs() < 1e-12);
            } else {
                assert!(t.abs() < 1e-12, "tap {n} = {t}");
            }
        }
    }

    #[test]
    fn linear_phase_spectrum_lands_at_shift_plus_delay() {
        let fft = 256;
        let fs = 48000.0;
        let delay_samples = 10.0;
        let tau = delay_samples / fs;
        let spec: Vec<Complex64> = (0..=fft / 2)
            .map(|k| {
                let f = k as f64 * fs / fft as f64;
                let phase = -2.0 * std::f64::consts::PI * f * tau;
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        let taps = one_sided_to_taps(&spec, fft).unwrap();
        let expected = fft / 2 + delay_samples as usize;
        let peak_idx = taps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak_idx, expected);
        assert!((taps[expected] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hermitian_residue_is_checked() {
        // A wildly complex Nyquist bin is taken as real; residue stays tiny.
        let fft = 64;
        let mut spec = vec![Complex64::new(1.0, 0.0); fft / 2 + 1];
        spec[fft / 2] = Complex64::new(0.5, 123.0);
        assert!(one_sided_to_taps(&spec, fft).is_ok());
    }

    fn random_filters(fft: usize, m: usize, seed: u64) -> FilterSet {
        let grid = FrequencyGrid::new(48000.0, fft).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.bins() * m * 2;
        let data: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
            .collect();
        FilterSet::new(grid, m, MethodTag::Ls, 20.0, data).unwrap()
    }

    #[test]
    fn identity_filter_delays_input_by_half_fft() {
        let fft = 128;
        let grid = FrequencyGrid::new(48000.0, fft).unwrap();
        let bins = grid.bins();
        let data = vec![Complex64::new(1.0, 0.0); bins * 2];
        let filters = FilterSet::new(grid, 1, MethodTag::Ls, 20.0, data).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..512).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = binaural_render(&[x.clone()], &filters).unwrap();
        for ear in 0..2 {
            for (n, &v) in x.iter().enumerate() {
                assert!(
                    (out[ear][n + fft / 2] - v).abs() < 1e-10,
                    "ear {ear} sample {n}"
                );
            }
        }
    }

    #[test]
    fn overlap_add_matches_direct_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..4096).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..1024).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let a = ola_convolve(&x, &h);
        let b = direct_convolve(&x, &h);
        assert_eq!(a.len(), b.len());
        let max_diff = a
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff < 1e-8, "max diff {max_diff}");
    }

    #[test]
    fn render_is_linear_and_deterministic() {
        let filters = random_filters(64, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..300).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let b: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..300).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let sum: Vec<Vec<f64>> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
            .collect();
        let ra = binaural_render(&a, &filters).unwrap();
        let rb = binaural_render(&b, &filters).unwrap();
        let rsum = binaural_render(&sum, &filters).unwrap();
        for ear in 0..2 {
            for i in 0..rsum[ear].len() {
                assert!((rsum[ear][i] - ra[ear][i] - rb[ear][i]).abs() < 1e-10);
            }
        }
        let again = binaural_render(&a, &filters).unwrap();
        assert_eq!(ra[0], again[0]);
        assert_eq!(ra[1], again[1]);
    }

    #[test]
    fn output_energy_bounded_by_spectral_norm() {
        let filters = random_filters(64, 3, 9);
        // Bound evaluated on an 8× oversampled response of the actual taps,
        // which covers the continuous-frequency maximum.
        let taps = filters_to_impulse_responses(&filters).unwrap();
        let over = 8 * 64;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(over);
        let mut spectra = vec![vec![vec![Complex64::default(); over]; 2]; 3];
        for mi in 0..3 {
            for ear in 0..2 {
                let mut buf = vec![Complex64::default(); over];
                for (i, &t) in taps[mi][ear].iter().enumerate() {
                    buf[i] = Complex64::new(t, 0.0);
                }
                fft.process(&mut buf);
                spectra[mi][ear] = buf;
            }
        }
        let mut bound: f64 = 0.0;
        for k in 0..over {
            // 2×2 Gram of the ear×mic response matrix.
            let mut a = 0.0;
            let mut c = 0.0;
            let mut b = Complex64::default();
            for mi in 0..3 {
                let l = spectra[mi][0][k];
                let r = spectra[mi][1][k];
                a += l.norm_sqr();
                c += r.norm_sqr();
                b += l * r.conj();
            }
            let mid = (a + c) / 2.0;
            let rad = (((a - c) / 2.0).powi(2) + b.norm_sqr()).sqrt();
            bound = bound.max(mid + rad);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2048).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let in_energy: f64 = x.iter().flat_map(|c| c.iter()).map(|v| v * v).sum();
        let out = binaural_render(&x, &filters).unwrap();
        let out_energy: f64 = out.iter().flat_map(|c| c.iter()).map(|v| v * v).sum();
        assert!(
            out_energy <= bound * in_energy * (1.0 + 1e-9),
            "{out_energy} vs bound {}",
            bound * in_energy
        );
    }

    #[test]
    fn rms_matching_and_peak_normalization() {
        let mut pair = [vec![0.5f64; 100], vec![-0.5f64; 100]];
        match_rms(&mut pair, 0.25);
        let joint: Vec<f64> = pair[0].iter().chain(pair[1].iter()).copied().collect();
        assert!((rms(&joint) - 0.25).abs() < 1e-12);
        peak_normalize(&mut pair);
        let peak = pair
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        assert!((peak - 1.0).abs() < 1e-12);
    }
}
