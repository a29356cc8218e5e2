//! Little-endian binary containers for channel RF data (`RCRF`) and
//! beamformed volumes (`RCBV`). Both end in a CRC32 of every preceding byte.
//!
//! RF layout:
//!
//! ```text
//! "RCRF" | version u16 | state u8 (0 encoded, 1 decoded)
//! planes u32 | transmits u32 | channels u32 | samples u32 | sampling_rate f64
//! transmit column u32 x transmits
//! payload f32 x (planes*transmits*channels*samples), sample fastest
//! crc32 u32
//! ```
//!
//! Volume layout:
//!
//! ```text
//! "RCBV" | version u16
//! x0 y0 z0 f64 | dx dy dz f64 | nx ny nz u32
//! payload f32 x (nx*ny*nz), x fastest
//! crc32 u32
//! ```
//!
//! Samples are stored as `f32`, so a dataset survives a round trip bit for
//! bit whenever its values are representable in single precision.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::beamformer::{BeamformedVolume, ImageGrid};
use crate::encoding::{DataState, RfDataSet};

pub const RF_MAGIC: [u8; 4] = *b"RCRF";
pub const VOLUME_MAGIC: [u8; 4] = *b"RCBV";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("file truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("crc mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("dimension `{0}` is zero")]
    ZeroDimension(&'static str),
    #[error("malformed file: {0}")]
    Malformed(String),
}

pub type FormatResult<T> = std::result::Result<T, FormatError>;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(capacity: usize) -> Self {
        Self {
            buf: Vec::with_capacity(capacity),
        }
    }
    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }
    fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.u32(crc);
        self.buf
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> FormatResult<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(FormatError::Truncated {
            needed: usize::MAX,
            available: self.buf.len(),
        })?;
        if end > self.buf.len() {
            return Err(FormatError::Truncated {
                needed: end,
                available: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn array<const N: usize>(&mut self) -> FormatResult<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("slice length checked"))
    }
    fn u8(&mut self) -> FormatResult<u8> {
        Ok(self.array::<1>()?[0])
    }
    fn u16(&mut self) -> FormatResult<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> FormatResult<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> FormatResult<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn f32_vec(&mut self, n: usize) -> FormatResult<Vec<f32>> {
        let bytes = self.take(
            n.checked_mul(4)
                .ok_or_else(|| FormatError::Malformed("payload size overflows".into()))?,
        )?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect())
    }
}

/// Checks magic, version and trailing CRC; returns a reader positioned after
/// the version field and limited to the body.
fn open(bytes: &[u8], magic: [u8; 4]) -> FormatResult<Reader<'_>> {
    if bytes.len() < 4 {
        return Err(FormatError::Truncated {
            needed: 4,
            available: bytes.len(),
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if found != magic {
        return Err(FormatError::BadMagic {
            expected: magic,
            found,
        });
    }
    let min = 4 + 2 + 4;
    if bytes.len() < min {
        return Err(FormatError::Truncated {
            needed: min,
            available: bytes.len(),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    if stored != computed {
        return Err(FormatError::CrcMismatch { stored, computed });
    }
    Ok(r)
}

fn dim(name: &'static str, v: usize) -> FormatResult<u32> {
    if v == 0 {
        return Err(FormatError::ZeroDimension(name));
    }
    u32::try_from(v).map_err(|_| FormatError::Malformed(format!("`{name}` exceeds u32")))
}

fn to_f32(v: f64) -> FormatResult<f32> {
    let s = v as f32;
    if !s.is_finite() {
        return Err(FormatError::Malformed(format!(
            "value {v} is not representable as a finite f32"
        )));
    }
    Ok(s)
}

fn finish_read(r: &Reader<'_>) -> FormatResult<()> {
    if r.pos != r.buf.len() {
        return Err(FormatError::Malformed(format!(
            "{} trailing bytes before checksum",
            r.buf.len() - r.pos
        )));
    }
    Ok(())
}

pub fn rf_to_bytes(rf: &RfDataSet) -> FormatResult<Vec<u8>> {
    let planes = dim("planes", rf.planes())?;
    let transmits = dim("transmits", rf.transmits())?;
    let channels = dim("channels", rf.channels())?;
    let samples = dim("samples", rf.samples())?;
    let mut w = Writer::new(48 + 4 * rf.transmits() + 4 * rf.data().len());
    w.bytes(&RF_MAGIC);
    w.u16(FORMAT_VERSION);
    w.u8(match rf.state() {
        DataState::Encoded => 0,
        DataState::Decoded => 1,
    });
    w.u32(planes);
    w.u32(transmits);
    w.u32(channels);
    w.u32(samples);
    w.f64(rf.sampling_rate());
    for &c in rf.transmit_columns() {
        w.u32(u32::try_from(c).map_err(|_| FormatError::Malformed("column exceeds u32".into()))?);
    }
    for &v in rf.data() {
        w.f32(to_f32(v)?);
    }
    Ok(w.finish())
}

pub fn rf_from_bytes(bytes: &[u8]) -> FormatResult<RfDataSet> {
    let mut r = open(bytes, RF_MAGIC)?;
    let state = match r.u8()? {
        0 => DataState::Encoded,
        1 => DataState::Decoded,
        other => {
            return Err(FormatError::Malformed(format!(
                "unknown state flag {other}"
            )))
        }
    };
    let mut dims = [0usize; 4];
    for (d, name) in dims
        .iter_mut()
        .zip(["planes", "transmits", "channels", "samples"])
    {
        *d = r.u32()? as usize;
        if *d == 0 {
            return Err(FormatError::ZeroDimension(name));
        }
    }
    let [planes, transmits, channels, samples] = dims;
    let fs = r.f64()?;
    let columns = (0..transmits)
        .map(|_| r.u32().map(|c| c as usize))
        .collect::<FormatResult<Vec<_>>>()?;
    let n = planes
        .checked_mul(transmits)
        .and_then(|v| v.checked_mul(channels))
        .and_then(|v| v.checked_mul(samples))
        .ok_or_else(|| FormatError::Malformed("dimension product overflows".into()))?;
    let payload = r.f32_vec(n)?;
    finish_read(&r)?;
    RfDataSet::from_parts(
        planes,
        transmits,
        channels,
        samples,
        fs,
        state,
        columns,
        payload.into_iter().map(f64::from).collect(),
    )
    .map_err(|e| FormatError::Malformed(e.to_string()))
}

pub fn write_rf(path: &Path, rf: &RfDataSet) -> FormatResult<()> {
    let bytes = rf_to_bytes(rf)?;
    fs::write(path, bytes).map_err(|source| io_err(path, source))
}

pub fn read_rf(path: &Path) -> FormatResult<RfDataSet> {
    let bytes = fs::read(path).map_err(|source| io_err(path, source))?;
    rf_from_bytes(&bytes)
}

fn io_err(path: &Path, source: std::io::Error) -> FormatError {
    FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Scalar volume on a regular grid, stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeFile {
    pub grid: ImageGrid,
    pub data: Vec<f32>,
}

impl VolumeFile {
    /// Linear envelope of a beamformed volume.
    pub fn from_envelope(vol: &BeamformedVolume) -> FormatResult<Self> {
        let data = vol
            .envelope
            .iter()
            .map(|&v| to_f32(v))
            .collect::<FormatResult<Vec<_>>>()?;
        Ok(Self {
            grid: vol.grid,
            data,
        })
    }

    pub fn at(&self, ix: usize, iy: usize, iz: usize) -> f32 {
        self.data[self.grid.index(ix, iy, iz)]
    }

    pub fn to_bytes(&self) -> FormatResult<Vec<u8>> {
        let g = &self.grid;
        let nx = dim("nx", g.nx)?;
        let ny = dim("ny", g.ny)?;
        let nz = dim("nz", g.nz)?;
        if self.data.len() != g.nx * g.ny * g.nz {
            return Err(FormatError::Malformed(format!(
                "payload has {} values, grid has {}",
                self.data.len(),
                g.nx * g.ny * g.nz
            )));
        }
        let mut w = Writer::new(70 + 4 * self.data.len());
        w.bytes(&VOLUME_MAGIC);
        w.u16(FORMAT_VERSION);
        for v in [g.x0, g.y0, g.z0, g.dx, g.dy, g.dz] {
            w.f64(v);
        }
        w.u32(nx);
        w.u32(ny);
        w.u32(nz);
        for &v in &self.data {
            w.f32(v);
        }
        Ok(w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> FormatResult<Self> {
        let mut r = open(bytes, VOLUME_MAGIC)?;
        let mut h = [0.0; 6];
        for v in &mut h {
            *v = r.f64()?;
        }
        let mut n = [0usize; 3];
        for (v, name) in n.iter_mut().zip(["nx", "ny", "nz"]) {
            *v = r.u32()? as usize;
            if *v == 0 {
                return Err(FormatError::ZeroDimension(name));
            }
        }
        let count = n[0]
            .checked_mul(n[1])
            .and_then(|v| v.checked_mul(n[2]))
            .ok_or_else(|| FormatError::Malformed("dimension product overflows".into()))?;
        let data = r.f32_vec(count)?;
        finish_read(&r)?;
        let grid = ImageGrid {
            x0: h[0],
            y0: h[1],
            z0: h[2],
            dx: h[3],
            dy: h[4],
            dz: h[5],
            nx: n[0],
            ny: n[1],
            nz: n[2],
        };
        Ok(Self { grid, data })
    }

    pub fn write(&self, path: &Path) -> FormatResult<()> {
        let bytes = self.to_bytes()?;
        fs::write(path, bytes).map_err(|source| io_err(path, source))
    }

    pub fn read(path: &Path) -> FormatResult<Self> {
        let bytes = fs::read(path).map_err(|source| io_err(path, source))?;
        Self::from_bytes(&bytes)
    }
}

/// 8-bit binary graymap (P5). `db` values are mapped linearly from
/// `[-dynamic_range_db, 0]` to `[0, 255]`; the mapping is recorded in a
/// header comment. `db` is row-major with `width` values per row.
pub fn pgm_bytes(
    db: &[f64],
    width: usize,
    height: usize,
    dynamic_range_db: f64,
) -> FormatResult<Vec<u8>> {
    dim("width", width)?;
    dim("height", height)?;
    if db.len() != width * height {
        return Err(FormatError::Malformed(format!(
            "{} pixels for a {width}x{height} image",
            db.len()
        )));
    }
    if !(dynamic_range_db > 0.0) {
        return Err(FormatError::Malformed(
            "dynamic range must be positive".into(),
        ));
    }
    let mut out = format!(
        "P5\n# gray = 255 * (dB + {dynamic_range_db}) / {dynamic_range_db}, dB window [-{dynamic_range_db}, 0]\n{width} {height}\n255\n"
    )
    .into_bytes();
    out.extend(db.iter().map(|&v| {
        let g = ((v + dynamic_range_db) / dynamic_range_db * 255.0).round();
        g.clamp(0.0, 255.0) as u8
    }));
    Ok(out)
}
