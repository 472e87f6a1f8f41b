//! RIFF/WAVE I/O: 16/24-bit PCM and 32-bit float, mono to 16 channels,
//! 44.1/48 kHz. Samples are exchanged as f64 per channel.

use crate::error::{BsmError, Result};
use std::path::Path;

pub const SUPPORTED_RATES: [u32; 2] = [44100, 48000];
pub const MAX_CHANNELS: usize = 16;

/// Writes channels as 32-bit float WAV (format tag 3).
pub fn write_wav_f32(path: impl AsRef<Path>, channels: &[Vec<f64>], sample_rate: u32) -> Result<()> {
    validate_layout(channels.len(), sample_rate)?;
    let frames = channels.iter().map(|c| c.len()).max().unwrap_or(0);
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .map_err(|e| BsmError::Audio(e.to_string()))?;
    for frame in 0..frames {
        for ch in channels {
            let v = ch.get(frame).copied().unwrap_or(0.0);
            writer
                .write_sample(v as f32)
                .map_err(|e| BsmError::Audio(e.to_string()))?;
        }
    }
    writer.finalize().map_err(|e| BsmError::Audio(e.to_string()))?;
    Ok(())
}

/// Reads a PCM 16/24-bit or float32 WAV into per-channel f64 buffers.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<Vec<f64>>, u32)> {
    let mut reader = hound::WavReader::open(&path).map_err(|e| BsmError::Format {
        path: path.as_ref().display().to_string(),
        reason: e.to_string(),
    })?;
    let spec = reader.spec();
    validate_layout(spec.channels as usize, spec.sample_rate)?;
    let n = spec.channels as usize;
    let mut channels = vec![Vec::new(); n];
    match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => {
            for (i, s) in reader.samples::<f32>().enumerate() {
                let v = s.map_err(|e| BsmError::Audio(e.to_string()))?;
                channels[i % n].push(v as f64);
            }
        }
        (hound::SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / ((1i64 << (bits - 1)) as f64);
            for (i, s) in reader.samples::<i32>().enumerate() {
                let v = s.map_err(|e| BsmError::Audio(e.to_string()))?;
                channels[i % n].push(v as f64 * scale);
            }
        }
        (fmt, bits) => {
            return Err(BsmError::Audio(format!(
                "unsupported sample format {fmt:?} at {bits} bits"
            )))
        }
    }
    Ok((channels, spec.sample_rate))
}

fn validate_layout(channels: usize, sample_rate: u32) -> Result<()> {
    if channels == 0 || channels > MAX_CHANNELS {
        return Err(BsmError::Audio(format!(
            "channel count {channels} outside 1..={MAX_CHANNELS}"
        )));
    }
    if !SUPPORTED_RATES.contains(&sample_rate) {
        return Err(BsmError::Audio(format!(
            "sample rate {sample_rate} not in {SUPPORTED_RATES:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.01).sin() * 0.5).collect();
        let b: Vec<f64> = (0..100).map(|i| (i as f64 * 0.02).cos() * 0.25).collect();
        write_wav_f32(&path, &[a.clone(), b.clone()], 48000).unwrap();
        let (back, fs) = read_wav(&path).unwrap();
        assert_eq!(fs, 48000);
        assert_eq!(back.len(), 2);
        for (x, y) in back[0].iter().zip(&a) {
            assert!((x - y).abs() < 1e-7); // f32 precision
        }
        for (x, y) in back[1].iter().zip(&b) {
            assert!((x - y).abs() < 1e-7);
        }
    }

    #[test]
    fn rejects_unsupported_rates_and_channel_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.wav");
        assert!(write_wav_f32(&path, &[vec![0.0]], 8000).is_err());
        let too_many: Vec<Vec<f64>> = (0..17).map(|_| vec![0.0]).collect();
        assert!(write_wav_f32(&path, &too_many, 48000).is_err());
    }
}
