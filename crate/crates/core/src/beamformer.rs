//! Delay-and-sum reconstruction of decoded FORCES data.
//!
//! Fixed-focus schemes (FORCES, uFORCES) beamform each plane's B-scan with
//! the direct transmit path from the effective column. RTB schemes treat
//! every plane's elevational focal arc as a virtual source and coherently
//! sum the `planes_per_image` planes nearest each pixel.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::encoding::{uforces_columns, RfDataSet};
use crate::error::{invalid, Error, Result};
use crate::geometry::{focal_time_offset, ArrayGeometry, FocalConfig, Point3};
use crate::simulator::{Compounding, Scheme, TransmitPlan};

pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 60.0;

/// Regular voxel grid; voxel `(ix, iy, iz)` sits at
/// `(x0 + ix*dx, y0 + iy*dy, z0 + iz*dz)` and is stored x-fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageGrid {
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl ImageGrid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        origin: Point3,
        dx: f64,
        dy: f64,
        dz: f64,
        nx: usize,
        ny: usize,
        nz: usize,
    ) -> Result<Self> {
        let g = Self {
            x0: origin.x,
            y0: origin.y,
            z0: origin.z,
            dx,
            dy,
            dz,
            nx,
            ny,
            nz,
        };
        g.validate()?;
        Ok(g)
    }

    /// Single voxel at `p`.
    pub fn point(p: Point3) -> Self {
        Self {
            x0: p.x,
            y0: p.y,
            z0: p.z,
            dx: 1.0,
            dy: 1.0,
            dz: 1.0,
            nx: 1,
            ny: 1,
            nz: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dx", self.dx), ("dy", self.dy), ("dz", self.dz)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "grid spacing must be positive"));
            }
        }
        for (name, v) in [("nx", self.nx), ("ny", self.ny), ("nz", self.nz)] {
            if v == 0 {
                return Err(invalid(name, "grid count must be at least 1"));
            }
        }
        if !(self.x0.is_finite() && self.y0.is_finite() && self.z0.is_finite()) {
            return Err(invalid("origin", "must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.nx * (iy + self.ny * iz)
    }

    pub fn voxel(&self, ix: usize, iy: usize, iz: usize) -> Point3 {
        Point3::new(
            self.x0 + ix as f64 * self.dx,
            self.y0 + iy as f64 * self.dy,
            self.z0 + iz as f64 * self.dz,
        )
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx
    }
    pub fn y(&self, iy: usize) -> f64 {
        self.y0 + iy as f64 * self.dy
    }
    pub fn z(&self, iz: usize) -> f64 {
        self.z0 + iz as f64 * self.dz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApertureDirection {
    Lateral,
    Elevational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Boxcar,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApodizationConfig {
    pub f_number: f64,
    #[serde(default)]
    pub window: Window,
}

impl Default for ApodizationConfig {
    fn default() -> Self {
        Self {
            f_number: 1.0,
            window: Window::Boxcar,
        }
    }
}

impl ApodizationConfig {
    pub fn new(f_number: f64) -> Result<Self> {
        let a = Self {
            f_number,
            window: Window::Boxcar,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_number > 0.0 && self.f_number.is_finite()) {
            return Err(invalid("f_number", "must be positive"));
        }
        Ok(())
    }

    /// Weight of an aperture point `offset` away from a pixel `depth` away;
    /// the accepted half-aperture is `depth / (2 f#)`, boundary included.
    pub fn weight(&self, offset: f64, depth: f64) -> f64 {
        let half = depth / (2.0 * self.f_number);
        let u = offset.abs();
        if u > half {
            return 0.0;
        }
        match self.window {
            Window::Boxcar => 1.0,
            Window::Hann => {
                if half == 0.0 {
                    1.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * u / half).cos())
                }
            }
        }
    }
}

/// Boxcar F-number acceptance of `aperture_point` for a pixel at `px`.
pub fn apodization_weight(
    px: Point3,
    aperture_point: Point3,
    f_number: f64,
    direction: ApertureDirection,
) -> f64 {
    let offset = match direction {
        ApertureDirection::Lateral => px.x - aperture_point.x,
        ApertureDirection::Elevational => px.y - aperture_point.y,
    };
    let depth = px.z - aperture_point.z;
    let half = depth / (2.0 * f_number);
    if offset.abs() <= half {
        1.0
    } else {
        0.0
    }
}

/// One beamformed sample plus the number of delayed look-ups that fell
/// outside the recorded time span.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DasSample {
    pub value: f64,
    pub clipped: u64,
    /// Planes whose elevational weight admitted this voxel.
    pub planes: usize,
}

/// Reusable delay-and-sum engine bound to one decoded dataset.
pub struct Beamformer<'a> {
    data: &'a RfDataSet,
    plan: &'a TransmitPlan,
    geom: &'a ArrayGeometry,
    apod: ApodizationConfig,
    /// `(transmit index in data, column x)` of the transmits in use.
    transmits: Vec<(usize, f64)>,
    plane_offsets: Vec<f64>,
    column_x: Vec<f64>,
}

impl<'a> Beamformer<'a> {
    pub fn new(
        data: &'a RfDataSet,
        plan: &'a TransmitPlan,
        geom: &'a ArrayGeometry,
        apod: &ApodizationConfig,
    ) -> Result<Self> {
        data.require_decoded()?;
        plan.validate()?;
        apod.validate()?;
        if data.planes() != plan.plane_positions.len() {
            return Err(Error::DimensionMismatch(format!(
                "dataset has {} planes, plan has {}",
                data.planes(),
                plan.plane_positions.len()
            )));
        }
        if data.channels() != geom.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "dataset has {} channels for {} columns",
                data.channels(),
                geom.n_cols
            )));
        }
        if let Some(&c) = data.transmit_columns().iter().find(|&&c| c >= geom.n_cols) {
            return Err(Error::IndexOutOfRange {
                what: "transmit column",
                index: c,
                limit: geom.n_cols,
            });
        }
        let wanted: Vec<usize> = if plan.scheme.is_sparse() {
            uforces_columns(geom.n_cols, plan.uforces_k)?
        } else {
            data.transmit_columns().to_vec()
        };
        let transmits = wanted
            .iter()
            .map(|&col| {
                data.transmit_columns()
                    .iter()
                    .position(|&c| c == col)
                    .map(|t| (t, geom.column_x(col)))
                    .ok_or_else(|| {
                        Error::DimensionMismatch(format!(
                            "column {col} required by {} is missing from the dataset",
                            plan.scheme
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let plane_offsets = plan
            .plane_positions
            .iter()
            .map(|&y| FocalConfig::new(plan.focal_depth, y).map(|f| focal_time_offset(geom, &f)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            data,
            plan,
            geom,
            apod: *apod,
            transmits,
            plane_offsets,
            column_x: (0..geom.n_cols).map(|c| geom.column_x(c)).collect(),
        })
    }

    /// Effective single-column transmits per plane.
    pub fn transmit_count(&self) -> usize {
        self.transmits.len()
    }

    /// Decoded transmits entering one image.
    pub fn transmits_per_image(&self) -> usize {
        self.transmits.len() * self.plan.planes_in_image()
    }

    /// Planes contributing to a pixel at elevation `y`, nearest first
    /// (ties go to the lower index).
    pub fn planes_for(&self, y: f64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.plan.plane_positions.len()).collect();
        let pos = &self.plan.plane_positions;
        order.sort_by(|&a, &b| {
            (pos[a] - y)
                .abs()
                .partial_cmp(&(pos[b] - y).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order.truncate(self.plan.planes_in_image());
        order
    }

    /// Coherent sum for one plane.
    fn plane_sum(&self, px: Point3, plane: usize, nearest: bool, rx: &[(f64, f64)]) -> DasSample {
        let c = self.geom.sound_speed;
        let fs = self.data.sampling_rate();
        let f = self.plan.focal_depth;
        let plane_y = self.plan.plane_positions[plane];
        let t0 = self.plane_offsets[plane];
        let rtb = self.plan.scheme.is_rtb();
        let samples = self.data.samples();
        let last = (samples - 1) as f64;
        let mut out = DasSample::default();

        for &(t_idx, tx_x) in &self.transmits {
            let w_tx = self.apod.weight(px.x - tx_x, px.z);
            if w_tx == 0.0 {
                continue;
            }
            let (tx_leg, w_el) = if rtb {
                let radial = (tx_x - px.x).hypot(px.z) - f;
                let dy = plane_y - px.y;
                let w_el = if nearest {
                    1.0
                } else {
                    self.apod.weight(dy, radial.abs())
                };
                let leg = radial.hypot(dy);
                (if radial >= 0.0 { f + leg } else { f - leg }, w_el)
            } else {
                (px.distance(Point3::new(tx_x, plane_y, 0.0)), 1.0)
            };
            if w_el == 0.0 {
                continue;
            }
            out.planes = 1;
            let block = self.data.transmit_block(plane, t_idx);
            let w = w_tx * w_el;
            for (ch, &(rx_dist, w_rx)) in rx.iter().enumerate() {
                if w_rx == 0.0 {
                    continue;
                }
                let path = (tx_leg + rx_dist).max(0.0);
                let idx = (t0 + path / c) * fs;
                if !(0.0..=last).contains(&idx) {
                    out.clipped += 1;
                    continue;
                }
                let trace = &block[ch * samples..(ch + 1) * samples];
                let i0 = idx.floor() as usize;
                let frac = idx - i0 as f64;
                let v = if i0 + 1 < samples {
                    trace[i0] + frac * (trace[i0 + 1] - trace[i0])
                } else {
                    trace[i0]
                };
                out.value += w * w_rx * v;
            }
        }
        out
    }

    fn receive_legs(&self, px: Point3) -> Vec<(f64, f64)> {
        self.column_x
            .iter()
            .enumerate()
            .map(|(col, &x)| {
                let w = self.apod.weight(px.x - x, px.z);
                let d = px.distance(self.geom.column_receive_point(col, px));
                (d, w)
            })
            .collect()
    }

    /// Per-plane coherent sums for a pixel, in the order of [`Self::planes_for`].
    pub fn das_pixel_planes(&self, px: Point3) -> Vec<(usize, DasSample)> {
        let rx = self.receive_legs(px);
        self.planes_for(px.y)
            .into_iter()
            .enumerate()
            .map(|(rank, plane)| (plane, self.plane_sum(px, plane, rank == 0, &rx)))
            .collect()
    }

    /// Combined value at a pixel. Incoherent compounding is resolved at the
    /// line level by [`beamform_volume`]; here it falls back to the sum.
    pub fn das_pixel(&self, px: Point3) -> DasSample {
        let mut out =
            self.das_pixel_planes(px)
                .into_iter()
                .fold(DasSample::default(), |acc, (_, s)| DasSample {
                    value: acc.value + s.value,
                    clipped: acc.clipped + s.clipped,
                    planes: acc.planes + s.planes,
                });
        if self.plan.compounding == Compounding::Mean && out.planes > 1 {
            out.value /= out.planes as f64;
        }
        out
    }
}

/// Delay-and-sum value at one pixel.
pub fn das_pixel(
    px: Point3,
    decoded: &RfDataSet,
    plan: &TransmitPlan,
    geom: &ArrayGeometry,
    apod: &ApodizationConfig,
) -> Result<DasSample> {
    Ok(Beamformer::new(decoded, plan, geom, apod)?.das_pixel(px))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformedVolume {
    pub grid: ImageGrid,
    /// Coherent delay-and-sum output (zero for incoherent compounding).
    pub rf: Vec<f64>,
    /// Envelope along depth.
    pub envelope: Vec<f64>,
    /// Log-compressed envelope normalised to the volume maximum.
    pub envelope_db: Vec<f64>,
    pub dynamic_range_db: f64,
    pub scheme: Scheme,
    /// Planes that contributed to at least one voxel.
    pub planes_used: Vec<usize>,
    pub transmits_per_image: usize,
    pub clipped: u64,
}

impl BeamformedVolume {
    pub fn envelope_at(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.envelope[self.grid.index(ix, iy, iz)]
    }
}

/// Delay-and-sum over every voxel of `grid`, followed by envelope detection
/// along depth and log compression.
pub fn beamform_volume(
    decoded: &RfDataSet,
    plan: &TransmitPlan,
    grid: &ImageGrid,
    geom: &ArrayGeometry,
    apod: &ApodizationConfig,
) -> Result<BeamformedVolume> {
    grid.validate()?;
    let bf = Beamformer::new(decoded, plan, geom, apod)?;
    let g = *grid;
    let lines: Vec<(usize, usize)> = (0..g.ny)
        .flat_map(|iy| (0..g.nx).map(move |ix| (ix, iy)))
        .collect();
    let incoherent = plan.scheme.is_rtb() && plan.compounding == Compounding::Incoherent;
    let mean = plan.compounding == Compounding::Mean;

    struct Line {
        rf: Vec<f64>,
        env: Vec<f64>,
        planes: Vec<usize>,
        clipped: u64,
    }

    let results: Vec<Line> = lines
        .par_iter()
        .map_init(
            || EnvelopeDetector::new(g.nz),
            |det, &(ix, iy)| {
                let mut clipped = 0;
                let mut planes = Vec::new();
                if incoherent {
                    let mut per_plane: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
                    for iz in 0..g.nz {
                        for (p, s) in bf.das_pixel_planes(g.voxel(ix, iy, iz)) {
                            per_plane.entry(p).or_insert_with(|| vec![0.0; g.nz])[iz] = s.value;
                            clipped += s.clipped;
                        }
                    }
                    let mut env = vec![0.0; g.nz];
                    for (p, line) in &per_plane {
                        planes.push(*p);
                        for (e, v) in env.iter_mut().zip(det.envelope(line)) {
                            *e += v;
                        }
                    }
                    Line {
                        rf: vec![0.0; g.nz],
                        env,
                        planes,
                        clipped,
                    }
                } else {
                    let mut rf = Vec::with_capacity(g.nz);
                    for iz in 0..g.nz {
                        let mut v = 0.0;
                        let mut admitted = 0;
                        for (p, s) in bf.das_pixel_planes(g.voxel(ix, iy, iz)) {
                            if !planes.contains(&p) {
                                planes.push(p);
                            }
                            v += s.value;
                            clipped += s.clipped;
                            admitted += s.planes;
                        }
                        if mean && admitted > 1 {
                            v /= admitted as f64;
                        }
                        rf.push(v);
                    }
                    let env = det.envelope(&rf);
                    Line {
                        rf,
                        env,
                        planes,
                        clipped,
                    }
                }
            },
        )
        .collect();

    let mut rf = vec![0.0; g.len()];
    let mut env = vec![0.0; g.len()];
    let mut planes_used: Vec<usize> = Vec::new();
    let mut clipped = 0;
    for (line, &(ix, iy)) in results.iter().zip(&lines) {
        for iz in 0..g.nz {
            let i = g.index(ix, iy, iz);
            rf[i] = line.rf[iz];
            env[i] = line.env[iz];
        }
        planes_used.extend_from_slice(&line.planes);
        clipped += line.clipped;
    }
    planes_used.sort_unstable();
    planes_used.dedup();
    let envelope_db = log_compress(&env, DEFAULT_DYNAMIC_RANGE_DB);
    Ok(BeamformedVolume {
        grid: g,
        rf,
        envelope: env,
        envelope_db,
        dynamic_range_db: DEFAULT_DYNAMIC_RANGE_DB,
        scheme: plan.scheme,
        planes_used,
        transmits_per_image: bf.transmits_per_image(),
        clipped,
    })
}

/// Analytic-signal envelope with cached FFT plans for one length.
pub struct EnvelopeDetector {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
}

impl EnvelopeDetector {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let n = len.max(1);
        Self {
            len,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            buf: vec![Complex::new(0.0, 0.0); n],
        }
    }

    pub fn envelope(&mut self, signal: &[f64]) -> Vec<f64> {
        if signal.len() != self.len {
            *self = EnvelopeDetector::new(signal.len());
        }
        let n = signal.len();
        if n < 2 {
            return signal.iter().map(|v| v.abs()).collect();
        }
        for (b, &s) in self.buf.iter_mut().zip(signal) {
            *b = Complex::new(s, 0.0);
        }
        self.forward.process(&mut self.buf);
        // keep DC (and Nyquist for even n), double positive, zero negative
        let half = n / 2;
        for (k, b) in self.buf.iter_mut().enumerate() {
            let gain = if k == 0 || (n % 2 == 0 && k == half) {
                1.0
            } else if k < n.div_ceil(2) {
                2.0
            } else {
                0.0
            };
            *b *= gain / n as f64;
        }
        self.inverse.process(&mut self.buf);
        self.buf.iter().map(|z| z.norm()).collect()
    }
}

/// Magnitude of the analytic signal of `signal`.
pub fn envelope(signal: &[f64]) -> Vec<f64> {
    EnvelopeDetector::new(signal.len()).envelope(signal)
}

/// `20 log10(env / max)` clamped to `[-dynamic_range_db, 0]`.
pub fn log_compress(env: &[f64], dynamic_range_db: f64) -> Vec<f64> {
    let max = env.iter().copied().fold(0.0, f64::max);
    env.iter()
        .map(|&v| {
            if max <= 0.0 || v <= 0.0 {
                -dynamic_range_db
            } else {
                (20.0 * (v / max).log10()).clamp(-dynamic_range_db, 0.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{select_uforces_subset, DataState};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn apodization_examples() {
        let ap = Point3::new(0.0, 0.0, 0.0);
        let below = Point3::new(0.0, 0.0, 0.02);
        assert_eq!(
            apodization_weight(below, ap, 1.0, ApertureDirection::Lateral),
            1.0
        );
        let edge = Point3::new(0.01, 0.0, 0.02);
        assert_eq!(
            apodization_weight(edge, ap, 1.0, ApertureDirection::Lateral),
            1.0
        );
        let out = Point3::new(0.012, 0.0, 0.02);
        assert_eq!(
            apodization_weight(out, ap, 1.0, ApertureDirection::Lateral),
            0.0
        );
        let out_el = Point3::new(0.0, 0.012, 0.02);
        assert_eq!(
            apodization_weight(out_el, ap, 1.0, ApertureDirection::Elevational),
            0.0
        );
        assert_eq!(
            apodization_weight(out_el, ap, 1.0, ApertureDirection::Lateral),
            1.0
        );
    }

    #[test]
    fn hann_window_tapers() {
        let a = ApodizationConfig {
            f_number: 1.0,
            window: Window::Hann,
        };
        assert_eq!(a.weight(0.0, 0.02), 1.0);
        assert!((a.weight(0.005, 0.02) - 0.5).abs() < 1e-12);
        assert!(a.weight(0.0099999, 0.02) < 1e-6);
        assert_eq!(a.weight(0.011, 0.02), 0.0);
        assert!(ApodizationConfig::new(0.0).is_err());
    }

    #[test]
    fn envelope_of_cosine_is_flat() {
        let n = 1024;
        let x: Vec<f64> = (0..n)
            .map(|k| 1.7 * (2.0 * PI * 0.05 * k as f64).cos())
            .collect();
        let e = envelope(&x);
        for v in &e[100..n - 100] {
            assert!((v - 1.7).abs() < 0.02 * 1.7);
        }
        for (v, s) in e.iter().zip(&x) {
            assert!(*v >= s.abs() - 1e-12);
        }
    }

    #[test]
    fn envelope_zero_and_scaling() {
        assert!(envelope(&[0.0; 16]).iter().all(|&v| v == 0.0));
        let x: Vec<f64> = (0..33).map(|k| ((k * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let e = envelope(&x);
        let scaled: Vec<f64> = x.iter().map(|v| -2.5 * v).collect();
        for (a, b) in envelope(&scaled).iter().zip(&e) {
            assert!((a - 2.5 * b).abs() < 1e-12);
        }
        assert_eq!(envelope(&[-3.0]), vec![3.0]);
    }

    #[test]
    fn log_compression() {
        let db = log_compress(&[1.0, 0.1, 1e-9, 0.0, 2.0], 60.0);
        assert_relative_eq!(db[0], -20.0 * 2f64.log10(), max_relative = 1e-12);
        assert_relative_eq!(db[1], -20.0 - 20.0 * 2f64.log10(), max_relative = 1e-12);
        assert_eq!(db[2], -60.0);
        assert_eq!(db[3], -60.0);
        assert_eq!(db[4], 0.0);
        assert_eq!(log_compress(&[0.0, 0.0], 40.0), vec![-40.0, -40.0]);
    }

    fn geometry() -> ArrayGeometry {
        ArrayGeometry::lambda_pitch(8, 4.3e6, 34.4e6, 1452.0).unwrap()
    }

    #[test]
    fn zero_data_beamforms_to_zero() {
        let g = geometry();
        let plan =
            TransmitPlan::new(Scheme::ForcesRtb, 0.01, vec![-1e-4, 0.0, 1e-4], 8, 3, 3).unwrap();
        let rf = RfDataSet::zeros(3, 8, 8, 600, g.sampling_rate, DataState::Decoded).unwrap();
        let s = das_pixel(
            Point3::new(0.0, 0.0, 0.008),
            &rf,
            &plan,
            &g,
            &ApodizationConfig::default(),
        )
        .unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.clipped, 0);
    }

    #[test]
    fn rejects_encoded_data() {
        let g = geometry();
        let plan = TransmitPlan::new(Scheme::Forces, 0.01, vec![0.0], 8, 3, 1).unwrap();
        let rf = RfDataSet::zeros(1, 8, 8, 10, g.sampling_rate, DataState::Encoded).unwrap();
        assert!(matches!(
            das_pixel(
                Point3::new(0.0, 0.0, 0.01),
                &rf,
                &plan,
                &g,
                &ApodizationConfig::default()
            ),
            Err(Error::WrongState { .. })
        ));
    }

    #[test]
    fn out_of_span_lookups_are_counted() {
        let g = geometry();
        let plan = TransmitPlan::new(Scheme::Forces, 0.01, vec![0.0], 8, 3, 1).unwrap();
        let mut rf = RfDataSet::zeros(1, 8, 8, 50, g.sampling_rate, DataState::Decoded).unwrap();
        rf.data_mut().iter_mut().for_each(|v| *v = 1.0);
        let s = das_pixel(
            Point3::new(0.0, 0.0, 0.05),
            &rf,
            &plan,
            &g,
            &ApodizationConfig::default(),
        )
        .unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.clipped, 64);
    }

    #[test]
    fn plane_selection() {
        let g = geometry();
        let pos = vec![-2e-4, -1e-4, 0.0, 1e-4, 2e-4];
        let rf = RfDataSet::zeros(5, 8, 8, 10, g.sampling_rate, DataState::Decoded).unwrap();
        let plan = TransmitPlan::new(Scheme::ForcesRtb, 0.01, pos.clone(), 8, 3, 3).unwrap();
        let bf = Beamformer::new(&rf, &plan, &g, &ApodizationConfig::default()).unwrap();
        assert_eq!(bf.planes_for(0.4e-4), vec![2, 3, 1]);
        // exact tie between planes 2 and 3 goes to the lower index
        assert_eq!(bf.planes_for(0.5e-4)[0], 2);
        let fixed = TransmitPlan::new(Scheme::Forces, 0.01, pos, 8, 3, 1).unwrap();
        let bf = Beamformer::new(&rf, &fixed, &g, &ApodizationConfig::default()).unwrap();
        assert_eq!(bf.planes_for(1.6e-4), vec![4]);
    }

    #[test]
    fn sparse_scheme_needs_its_columns() {
        let g = geometry();
        let plan = TransmitPlan::new(Scheme::UForces, 0.01, vec![0.0], 8, 3, 1).unwrap();
        let full = RfDataSet::zeros(1, 8, 8, 10, g.sampling_rate, DataState::Decoded).unwrap();
        let bf = Beamformer::new(&full, &plan, &g, &ApodizationConfig::default()).unwrap();
        assert_eq!(bf.transmit_count(), 2);
        let sub = select_uforces_subset(&full, 3).unwrap();
        assert_eq!(
            Beamformer::new(&sub, &plan, &g, &ApodizationConfig::default())
                .unwrap()
                .transmit_count(),
            2
        );
        let wrong = select_uforces_subset(&full, 5).unwrap();
        assert!(Beamformer::new(&wrong, &plan, &g, &ApodizationConfig::default()).is_err());
    }

    #[test]
    fn grid_indexing_is_x_fastest() {
        let g = ImageGrid::new(Point3::new(-1.0, 0.0, 2.0), 0.5, 0.25, 1.0, 3, 2, 4).unwrap();
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 3);
        assert_eq!(g.index(0, 0, 1), 6);
        assert_eq!(g.voxel(2, 1, 3), Point3::new(0.0, 0.25, 5.0));
        assert!(ImageGrid::new(Point3::ORIGIN, 0.0, 1.0, 1.0, 1, 1, 1).is_err());
        assert!(ImageGrid::new(Point3::ORIGIN, 1.0, 1.0, 1.0, 1, 0, 1).is_err());
    }
}
