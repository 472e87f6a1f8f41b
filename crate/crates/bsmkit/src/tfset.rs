//! Transfer-function and filter containers plus the TFSET binary format.
//!
//! `TransferFunctionSet` holds complex frequency responses indexed
//! `[bin][channel][direction]`; it carries both steering matrices (kind ATF,
//! channels = microphones) and HRTFs (kind HRTF, channels = 2 with left = 0,
//! right = 1). `FilterSet` holds per-ear BSM coefficients indexed
//! `[bin][mic][ear]`.
//!
//! # TFSET format
//!
//! Little-endian throughout:
//!
//! ```text
//! magic   8 bytes  "TFSET\0\0\x01"
//! kind    u8       0 = ATF, 1 = HRTF, 2 = FILTER
//! sample_rate f64
//! fft_size    u32
//! channels    u32
//! directions  u32
//! has_weights u8
//! [kind == FILTER only] method_tag u8 (0 = LS, 1 = MagLS, 2 = iMagLS), snr_db f64
//! directions × (f64 elevation, f64 azimuth) degrees
//! [has_weights == 1] directions × f64
//! data: bins × channels × directions interleaved f32 (re, im)
//! ```
//!
//! A FILTER file reuses the container with channels = microphone count and
//! directions = 2 (the ears), so the data order `[bin][mic][ear]` matches the
//! generic `[bin][channel][direction]` layout.

use crate::error::{BsmError, Result};
use crate::grid::{Direction, DirectionGrid, FrequencyGrid};
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: [u8; 8] = *b"TFSET\0\0\x01";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfKind {
    Atf,
    Hrtf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MethodTag {
    Ls,
    MagLs,
    IMagLs,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::Ls => "ls",
            MethodTag::MagLs => "magls",
            MethodTag::IMagLs => "imagls",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(MethodTag::Ls),
            "magls" => Ok(MethodTag::MagLs),
            "imagls" => Ok(MethodTag::IMagLs),
            other => Err(BsmError::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// Complex frequency responses indexed `[bin][channel][direction]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunctionSet {
    grid: FrequencyGrid,
    directions: DirectionGrid,
    channels: usize,
    kind: TfKind,
    data: Vec<Complex64>,
}

impl TransferFunctionSet {
    pub fn new(
        grid: FrequencyGrid,
        directions: DirectionGrid,
        channels: usize,
        kind: TfKind,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(BsmError::invalid("channel count must be positive"));
        }
        if kind == TfKind::Hrtf && channels != 2 {
            return Err(BsmError::invalid("HRTF sets must have exactly 2 channels"));
        }
        let expected = grid.bins() * channels * directions.len();
        if data.len() != expected {
            return Err(BsmError::invalid(format!(
                "data length {} != bins×channels×directions = {}",
                data.len(),
                expected
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(BsmError::invalid("transfer function contains non-finite values"));
        }
        Ok(TransferFunctionSet { grid, directions, channels, kind, data })
    }

    pub fn zeros(
        grid: FrequencyGrid,
        directions: DirectionGrid,
        channels: usize,
        kind: TfKind,
    ) -> Result<Self> {
        let n = grid.bins() * channels * directions.len();
        Self::new(grid, directions, channels, kind, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn directions(&self) -> &DirectionGrid {
        &self.directions
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn kind(&self) -> TfKind {
        self.kind
    }

    #[inline]
    fn index(&self, bin: usize, channel: usize, dir: usize) -> usize {
        (bin * self.channels + channel) * self.directions.len() + dir
    }

    #[inline]
    pub fn at(&self, bin: usize, channel: usize, dir: usize) -> Complex64 {
        self.data[self.index(bin, channel, dir)]
    }

    #[inline]
    pub fn set(&mut self, bin: usize, channel: usize, dir: usize, value: Complex64) {
        let i = self.index(bin, channel, dir);
        self.data[i] = value;
    }

    /// All values for one bin, `channels × directions`, row-major by channel.
    pub fn bin_slice(&self, bin: usize) -> &[Complex64] {
        let q = self.directions.len();
        let start = bin * self.channels * q;
        &self.data[start..start + self.channels * q]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn validate_finite(&self) -> Result<()> {
        if self.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(BsmError::numerical("non-finite transfer function values"));
        }
        Ok(())
    }

    pub fn same_grids(&self, other: &TransferFunctionSet) -> Result<()> {
        if self.grid != other.grid {
            return Err(BsmError::GridMismatch("frequency grids differ".into()));
        }
        if self.directions != other.directions {
            return Err(BsmError::GridMismatch("direction grids differ".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read(&mut file).map_err(|e| match e {
            BsmError::Format { reason, .. } => BsmError::Format {
                path: path.display().to_string(),
                reason,
            },
            other => other,
        })
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        let kind = match self.kind {
            TfKind::Atf => 0u8,
            TfKind::Hrtf => 1u8,
        };
        write_container(
            w,
            kind,
            &self.grid,
            &self.directions,
            self.channels as u32,
            self.directions.len() as u32,
            None,
            &self.data,
        )
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let raw = RawContainer::read(r)?;
        let kind = match raw.kind {
            0 => TfKind::Atf,
            1 => TfKind::Hrtf,
            k => {
                return Err(format_err(format!(
                    "kind {k} is not a transfer-function set"
                )))
            }
        };
        let directions = DirectionGrid::new(raw.directions, raw.weights)?;
        TransferFunctionSet::new(raw.grid, directions, raw.channels as usize, kind, raw.data)
    }
}

/// Per-ear BSM coefficients indexed `[bin][mic][ear]` (left = 0, right = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSet {
    grid: FrequencyGrid,
    mic_count: usize,
    method: MethodTag,
    snr_db: f64,
    data: Vec<Complex64>,
}

impl FilterSet {
    pub fn new(
        grid: FrequencyGrid,
        mic_count: usize,
        method: MethodTag,
        snr_db: f64,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if mic_count == 0 {
            return Err(BsmError::invalid("microphone count must be positive"));
        }
        if !snr_db.is_finite() {
            return Err(BsmError::invalid("snr must be finite"));
        }
        let expected = grid.bins() * mic_count * 2;
        if data.len() != expected {
            return Err(BsmError::invalid(format!(
                "filter data length {} != bins×mics×2 = {}",
                data.len(),
                expected
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(BsmError::invalid("filter contains non-finite values"));
        }
        Ok(FilterSet { grid, mic_count, method, snr_db, data })
    }

    pub fn zeros(grid: FrequencyGrid, mic_count: usize, method: MethodTag, snr_db: f64) -> Self {
        let n = grid.bins() * mic_count * 2;
        FilterSet {
            grid,
            mic_count,
            method,
            snr_db,
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn mic_count(&self) -> usize {
        self.mic_count
    }

    pub fn method(&self) -> MethodTag {
        self.method
    }

    pub fn set_method(&mut self, method: MethodTag) {
        self.method = method;
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    #[inline]
    fn index(&self, bin: usize, mic: usize, ear: usize) -> usize {
        (bin * self.mic_count + mic) * 2 + ear
    }

    #[inline]
    pub fn at(&self, bin: usize, mic: usize, ear: usize) -> Complex64 {
        self.data[self.index(bin, mic, ear)]
    }

    #[inline]
    pub fn set(&mut self, bin: usize, mic: usize, ear: usize, value: Complex64) {
        let i = self.index(bin, mic, ear);
        self.data[i] = value;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read(&mut file).map_err(|e| match e {
            BsmError::Format { reason, .. } => BsmError::Format {
                path: path.display().to_string(),
                reason,
            },
            other => other,
        })
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        // The ears play the role of the direction axis in the container.
        let placeholder = placeholder_ear_directions();
        write_container(
            w,
            2,
            &self.grid,
            &placeholder,
            self.mic_count as u32,
            2,
            Some((self.method, self.snr_db)),
            &self.data,
        )
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let raw = RawContainer::read(r)?;
        if raw.kind != 2 {
            return Err(format_err(format!("kind {} is not a filter set", raw.kind)));
        }
        if raw.dir_count != 2 {
            return Err(format_err("filter container must carry 2 ear slots".into()));
        }
        let (method, snr_db) = raw
            .filter_header
            .ok_or_else(|| format_err("filter header missing".into()))?;
        FilterSet::new(raw.grid, raw.channels as usize, method, snr_db, raw.data)
    }
}

/// Fixed pseudo-directions stored in FILTER containers for the ear axis.
fn placeholder_ear_directions() -> DirectionGrid {
    let left = Direction::new(90.0, 90.0).unwrap();
    let right = Direction::new(90.0, 270.0).unwrap();
    DirectionGrid::new(vec![left, right], None).unwrap()
}

fn format_err(reason: String) -> BsmError {
    BsmError::Format { path: "<stream>".into(), reason }
}

#[allow(clippy::too_many_arguments)]
fn write_container(
    w: &mut impl Write,
    kind: u8,
    grid: &FrequencyGrid,
    directions: &DirectionGrid,
    channels: u32,
    dir_count: u32,
    filter_header: Option<(MethodTag, f64)>,
    data: &[Complex64],
) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&[kind])?;
    w.write_all(&grid.sample_rate().to_le_bytes())?;
    w.write_all(&(grid.fft_size() as u32).to_le_bytes())?;
    w.write_all(&channels.to_le_bytes())?;
    w.write_all(&dir_count.to_le_bytes())?;
    let has_weights = directions.weights().is_some() as u8;
    w.write_all(&[has_weights])?;
    if let Some((method, snr_db)) = filter_header {
        let tag = match method {
            MethodTag::Ls => 0u8,
            MethodTag::MagLs => 1u8,
            MethodTag::IMagLs => 2u8,
        };
        w.write_all(&[tag])?;
        w.write_all(&snr_db.to_le_bytes())?;
    }
    for d in directions.directions() {
        w.write_all(&d.elevation_deg().to_le_bytes())?;
        w.write_all(&d.azimuth_deg().to_le_bytes())?;
    }
    if let Some(weights) = directions.weights() {
        for &wt in weights {
            w.write_all(&wt.to_le_bytes())?;
        }
    }
    let mut buf = Vec::with_capacity(data.len() * 8);
    for z in data {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

struct RawContainer {
    kind: u8,
    grid: FrequencyGrid,
    channels: u32,
    dir_count: u32,
    directions: Vec<Direction>,
    weights: Option<Vec<f64>>,
    filter_header: Option<(MethodTag, f64)>,
    data: Vec<Complex64>,
}

impl RawContainer {
    fn read(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(format_err("bad magic or unsupported version".into()));
        }
        let kind = read_u8(r)?;
        let sample_rate = read_f64(r)?;
        let fft_size = read_u32(r)? as usize;
        let channels = read_u32(r)?;
        let dir_count = read_u32(r)?;
        let has_weights = read_u8(r)?;
        let filter_header = if kind == 2 {
            let tag = match read_u8(r)? {
                0 => MethodTag::Ls,
                1 => MethodTag::MagLs,
                2 => MethodTag::IMagLs,
                t => return Err(format_err(format!("unknown method tag {t}"))),
            };
            let snr_db = read_f64(r)?;
            Some((tag, snr_db))
        } else {
            None
        };
        let grid = FrequencyGrid::new(sample_rate, fft_size)?;
        let mut directions = Vec::with_capacity(dir_count as usize);
        for _ in 0..dir_count {
            let el = read_f64(r)?;
            let az = read_f64(r)?;
            directions.push(Direction::new(el, az)?);
        }
        let weights = if has_weights == 1 {
            let mut w = Vec::with_capacity(dir_count as usize);
            for _ in 0..dir_count {
                w.push(read_f64(r)?);
            }
            Some(w)
        } else if has_weights == 0 {
            None
        } else {
            return Err(format_err(format!("bad has_weights flag {has_weights}")));
        };
        let bins = fft_size / 2 + 1;
        let count = bins * channels as usize * dir_count as usize;
        let mut buf = vec![0u8; count * 8];
        r.read_exact(&mut buf)?;
        let mut data = Vec::with_capacity(count);
        for chunk in buf.chunks_exact(8) {
            let re = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            let im = f32::from_le_bytes([chunk[4], chunk[5], chunk[6], chunk[7]]);
            data.push(Complex64::new(re as f64, im as f64));
        }
        // Trailing garbage means a corrupt or mismatched file.
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(format_err("trailing bytes after data section".into()));
        }
        Ok(RawContainer {
            kind,
            grid,
            channels,
            dir_count,
            directions,
            weights,
            filter_header,
            data,
        })
    }
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
