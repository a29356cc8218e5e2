//! Point-scatterer forward model for Hadamard-encoded row-column
//! acquisitions, plus wire and speckle/cyst phantom constructors.
//!
//! Every element `(row i, col j)` fires a Gaussian pulse delayed by the
//! elevational focusing law of its row and multiplied by the Hadamard bias
//! sign of its column. Each column is one receive channel and sums the
//! echoes seen by all of its elements. Propagation is straight-ray with
//! `1/r` spreading per leg; there is no directivity, attenuation or noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{encode, hadamard, DataState, RfDataSet};
use crate::error::{invalid, Error, Result};
use crate::geometry::{elevational_focus_delays, ArrayGeometry, FocalConfig, Point3};

/// Half-width of the pulse support in units of the envelope sigma. Beyond
/// it the envelope is below `exp(-24.5)` and the pulse is taken as zero.
pub const PULSE_SUPPORT_SIGMAS: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "FORCES")]
    Forces,
    #[serde(rename = "uFORCES")]
    UForces,
    #[serde(rename = "FORCES_RTB")]
    ForcesRtb,
    #[serde(rename = "uFORCES_RTB")]
    UForcesRtb,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Forces,
        Scheme::UForces,
        Scheme::ForcesRtb,
        Scheme::UForcesRtb,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Forces => "FORCES",
            Scheme::UForces => "uFORCES",
            Scheme::ForcesRtb => "FORCES_RTB",
            Scheme::UForcesRtb => "uFORCES_RTB",
        }
    }

    pub fn is_rtb(self) -> bool {
        matches!(self, Scheme::ForcesRtb | Scheme::UForcesRtb)
    }

    pub fn is_sparse(self) -> bool {
        matches!(self, Scheme::UForces | Scheme::UForcesRtb)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid("scheme", format!("unknown scheme `{s}`")))
    }
}

/// How the planes of a retrospective image are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compounding {
    /// Sum signed samples across planes before envelope detection.
    #[default]
    Coherent,
    /// Sum per-plane envelopes.
    Incoherent,
    /// Coherent sum divided by the number of planes admitted at the voxel,
    /// which removes the depth-dependent gain of the growing plane count.
    Mean,
}

/// Acquisition and reconstruction plan.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitPlan {
    pub scheme: Scheme,
    pub focal_depth: f64,
    /// Elevational focal-plane positions of the walking acquisition.
    pub plane_positions: Vec<f64>,
    pub hadamard_order: usize,
    /// Sparse transmit count emulated by the uFORCES schemes.
    pub uforces_k: usize,
    /// Planes aggregated into each retrospective image.
    pub planes_per_image: usize,
    pub compounding: Compounding,
}

impl TransmitPlan {
    pub fn new(
        scheme: Scheme,
        focal_depth: f64,
        plane_positions: Vec<f64>,
        hadamard_order: usize,
        uforces_k: usize,
        planes_per_image: usize,
    ) -> Result<Self> {
        let plan = Self {
            scheme,
            focal_depth,
            plane_positions,
            hadamard_order,
            uforces_k,
            planes_per_image,
            compounding: Compounding::Coherent,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Plane positions `center + (k - (count-1)/2) * step`, `k = 0..count`.
    pub fn walking_positions(center: f64, step: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|k| center + (k as f64 - (count as f64 - 1.0) / 2.0) * step)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_depth > 0.0 && self.focal_depth.is_finite()) {
            return Err(invalid("focal_depth", "must be positive"));
        }
        if self.plane_positions.is_empty() {
            return Err(invalid("plane_positions", "at least one plane is required"));
        }
        if self.plane_positions.iter().any(|y| !y.is_finite())
            || self.plane_positions.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(invalid(
                "plane_positions",
                "must be finite and strictly increasing",
            ));
        }
        if self.hadamard_order == 0 || !self.hadamard_order.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.hadamard_order));
        }
        if self.planes_per_image == 0 {
            return Err(invalid("planes_per_image", "must be at least 1"));
        }
        if self.planes_per_image > self.plane_positions.len() {
            return Err(invalid(
                "planes_per_image",
                format!(
                    "{} exceeds the {} acquired planes",
                    self.planes_per_image,
                    self.plane_positions.len()
                ),
            ));
        }
        if self.scheme.is_sparse() && (self.uforces_k < 2 || self.uforces_k > self.hadamard_order) {
            return Err(invalid(
                "uforces_k",
                format!("must lie in [2, {}]", self.hadamard_order),
            ));
        }
        Ok(())
    }

    pub fn with_scheme(&self, scheme: Scheme) -> Result<Self> {
        let mut plan = self.clone();
        plan.scheme = scheme;
        plan.validate()?;
        Ok(plan)
    }

    /// Planes whose data enter one image.
    pub fn planes_in_image(&self) -> usize {
        if self.scheme.is_rtb() {
            self.planes_per_image
        } else {
            1
        }
    }

    /// Physical transmit events needed for one image.
    pub fn transmits_per_image(&self) -> usize {
        let per_plane = if self.scheme.is_sparse() {
            self.uforces_k
        } else {
            self.hadamard_order
        };
        per_plane * self.planes_in_image()
    }

    /// Decoded single-column transmits that enter one image.
    pub fn effective_transmits_per_image(&self) -> usize {
        let per_plane = if self.scheme.is_sparse() {
            self.uforces_k - 1
        } else {
            self.hadamard_order
        };
        per_plane * self.planes_in_image()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: Point3,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Infinite axis-aligned cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cylinder {
    pub center: Point3,
    pub radius: f64,
    pub axis: Axis,
}

impl Cylinder {
    /// Squared distance from `p` to the cylinder axis.
    pub fn axis_distance_sq(&self, p: Point3) -> f64 {
        let d = p - self.center;
        match self.axis {
            Axis::X => d.y * d.y + d.z * d.z,
            Axis::Y => d.x * d.x + d.z * d.z,
            Axis::Z => d.x * d.x + d.y * d.y,
        }
    }

    /// Closed test: points on the wall count as inside.
    pub fn contains(&self, p: Point3) -> bool {
        self.axis_distance_sq(p) <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: Point3,
    pub max: Point3,
}

impl Bounds {
    pub fn volume(&self) -> f64 {
        let d = self.max - self.min;
        d.x.max(0.0) * d.y.max(0.0) * d.z.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub scatterers: Vec<Scatterer>,
    pub anechoic_regions: Vec<Cylinder>,
    pub label: String,
}

impl Phantom {
    pub fn new(
        scatterers: Vec<Scatterer>,
        anechoic_regions: Vec<Cylinder>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if scatterers
            .iter()
            .any(|s| !s.position.is_finite() || !s.amplitude.is_finite())
        {
            return Err(invalid(
                "scatterers",
                "positions and amplitudes must be finite",
            ));
        }
        if scatterers
            .iter()
            .any(|s| anechoic_regions.iter().any(|c| c.contains(s.position)))
        {
            return Err(invalid(
                "scatterers",
                "a scatterer lies inside an anechoic region",
            ));
        }
        Ok(Self {
            scatterers,
            anechoic_regions,
            label: label.into(),
        })
    }

    pub fn empty(label: impl Into<String>) -> Self {
        Self {
            scatterers: Vec::new(),
            anechoic_regions: Vec::new(),
            label: label.into(),
        }
    }

    /// Union of two phantoms.
    pub fn merge(&self, other: &Phantom) -> Result<Phantom> {
        let mut scatterers = self.scatterers.clone();
        scatterers.extend_from_slice(&other.scatterers);
        let mut regions = self.anechoic_regions.clone();
        regions.extend_from_slice(&other.anechoic_regions);
        Phantom::new(
            scatterers,
            regions,
            format!("{}+{}", self.label, other.label),
        )
    }

    pub fn max_depth(&self) -> f64 {
        self.scatterers
            .iter()
            .map(|s| s.position.z)
            .fold(0.0, f64::max)
    }
}

/// Gaussian-enveloped cosine excitation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub center_frequency: f64,
    /// Full spectral width at -6 dB divided by the center frequency.
    pub fractional_bandwidth: f64,
    pub amplitude: f64,
}

impl PulseSpec {
    pub fn new(center_frequency: f64, fractional_bandwidth: f64, amplitude: f64) -> Result<Self> {
        let p = Self {
            center_frequency,
            fractional_bandwidth,
            amplitude,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency > 0.0 && self.center_frequency.is_finite()) {
            return Err(invalid("center_frequency", "must be positive"));
        }
        if !(self.fractional_bandwidth > 0.0 && self.fractional_bandwidth < 2.0) {
            return Err(invalid("fractional_bandwidth", "must lie in (0, 2)"));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        Ok(())
    }

    /// Envelope sigma: the amplitude spectrum `exp(-2 pi^2 sigma^2 df^2)`
    /// falls to one half at `df = bandwidth * f0 / 2`.
    pub fn sigma(&self) -> f64 {
        (2.0 * std::f64::consts::LN_2).sqrt()
            / (PI * self.fractional_bandwidth * self.center_frequency)
    }

    pub fn half_support(&self) -> f64 {
        PULSE_SUPPORT_SIGMAS * self.sigma()
    }
}

pub fn pulse(t: f64, spec: &PulseSpec) -> f64 {
    let sigma = spec.sigma();
    if t.abs() > PULSE_SUPPORT_SIGMAS * sigma {
        return 0.0;
    }
    spec.amplitude
        * (-t * t / (2.0 * sigma * sigma)).exp()
        * (2.0 * PI * spec.center_frequency * t).cos()
}

/// Adds sampled, shifted copies of a pulse to a trace using a
/// multiplicative recurrence for the Gaussian and the carrier.
struct PulseKernel {
    amplitude: f64,
    sigma: f64,
    inv_two_sigma_sq: f64,
    omega: f64,
    dt: f64,
    fs: f64,
    half_support: f64,
    ratio_step: f64,
    rot_cos: f64,
    rot_sin: f64,
}

impl PulseKernel {
    fn new(spec: &PulseSpec, sampling_rate: f64) -> Self {
        let sigma = spec.sigma();
        let dt = 1.0 / sampling_rate;
        let omega = 2.0 * PI * spec.center_frequency;
        Self {
            amplitude: spec.amplitude,
            sigma,
            inv_two_sigma_sq: 1.0 / (2.0 * sigma * sigma),
            omega,
            dt,
            fs: sampling_rate,
            half_support: spec.half_support(),
            ratio_step: (-dt * dt / (sigma * sigma)).exp(),
            rot_cos: (omega * dt).cos(),
            rot_sin: (omega * dt).sin(),
        }
    }

    /// `trace[k] += weight * pulse(k / fs - arrival)`.
    #[inline]
    fn add(&self, trace: &mut [f64], arrival: f64, weight: f64) {
        let lo = ((arrival - self.half_support) * self.fs).ceil().max(0.0) as usize;
        let hi = ((arrival + self.half_support) * self.fs).floor();
        if hi < 0.0 {
            return;
        }
        let hi = (hi as usize).min(trace.len().saturating_sub(1));
        if lo > hi {
            return;
        }
        let t = lo as f64 * self.dt - arrival;
        let mut g = (-t * t * self.inv_two_sigma_sq).exp() * self.amplitude * weight;
        let mut ratio = (-(2.0 * t * self.dt + self.dt * self.dt) * self.inv_two_sigma_sq).exp();
        let (mut s, mut c) = (self.omega * t).sin_cos();
        for v in &mut trace[lo..=hi] {
            *v += g * c;
            g *= ratio;
            ratio *= self.ratio_step;
            let c_next = c * self.rot_cos - s * self.rot_sin;
            s = s * self.rot_cos + c * self.rot_sin;
            c = c_next;
        }
        debug_assert!(self.sigma > 0.0);
    }
}

/// Straight wires along `x`, one per entry of `wire_ys`, all at `depth`,
/// sampled as collinear unit scatterers centred on `x = 0`.
pub fn make_wire_phantom(
    wire_ys: &[f64],
    depth: f64,
    x_extent: f64,
    spacing: f64,
) -> Result<Phantom> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(invalid("spacing", "must be positive"));
    }
    if !(x_extent >= 0.0 && x_extent.is_finite()) {
        return Err(invalid("x_extent", "must be non-negative"));
    }
    let count = (x_extent / spacing + 1e-9).floor() as usize + 1;
    let scatterers = wire_ys
        .iter()
        .flat_map(|&y| {
            (0..count).map(move |k| Scatterer {
                position: Point3::new((k as f64 - (count as f64 - 1.0) / 2.0) * spacing, y, depth),
                amplitude: 1.0,
            })
        })
        .collect();
    Phantom::new(scatterers, Vec::new(), "wires")
}

/// Uniform speckle inside `bounds` with anechoic `cylinders` carved out.
///
/// `round(density * volume)` candidate positions are drawn; those inside a
/// cylinder are rejected. Amplitudes are uniform in `[0.5, 1.5]`. All
/// randomness comes from a ChaCha8 stream seeded with `seed`.
pub fn make_cyst_phantom(
    cylinders: &[Cylinder],
    speckle_density: f64,
    seed: u64,
    bounds: Bounds,
) -> Result<Phantom> {
    if !(speckle_density > 0.0 && speckle_density.is_finite()) {
        return Err(invalid("speckle_density", "must be positive"));
    }
    if cylinders.iter().any(|c| !(c.radius > 0.0)) {
        return Err(invalid("radius", "must be positive"));
    }
    let count = (speckle_density * bounds.volume()).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scatterers = Vec::with_capacity(count);
    let span = bounds.max - bounds.min;
    for _ in 0..count {
        let pos = Point3::new(
            bounds.min.x + rng.gen::<f64>() * span.x,
            bounds.min.y + rng.gen::<f64>() * span.y,
            bounds.min.z + rng.gen::<f64>() * span.z,
        );
        let amplitude = rng.gen_range(0.5..=1.5);
        if cylinders.iter().any(|c| c.contains(pos)) {
            continue;
        }
        scatterers.push(Scatterer {
            position: pos,
            amplitude,
        });
    }
    Phantom::new(scatterers, cylinders.to_vec(), "cysts")
}

/// Latest time any echo of `phantom` can arrive, including the pulse tail.
pub fn required_time_span(
    geom: &ArrayGeometry,
    plan: &TransmitPlan,
    phantom: &Phantom,
    pulse_spec: &PulseSpec,
) -> Result<f64> {
    let corners = [
        Point3::new(geom.column_x(0), geom.row_y(0), 0.0),
        Point3::new(geom.column_x(0), geom.row_y(geom.n_rows - 1), 0.0),
        Point3::new(geom.column_x(geom.n_cols - 1), geom.row_y(0), 0.0),
        Point3::new(
            geom.column_x(geom.n_cols - 1),
            geom.row_y(geom.n_rows - 1),
            0.0,
        ),
    ];
    let mut max_delay: f64 = 0.0;
    for &y in &plan.plane_positions {
        let focal = FocalConfig::new(plan.focal_depth, y)?;
        let d = elevational_focus_delays(geom, &focal);
        max_delay = d.iter().copied().fold(max_delay, f64::max);
    }
    let farthest = phantom
        .scatterers
        .iter()
        .map(|s| {
            corners
                .iter()
                .map(|c| c.distance(s.position))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Ok(max_delay + 2.0 * farthest / geom.sound_speed + pulse_spec.half_support())
}

fn check_inputs(geom: &ArrayGeometry, plan: &TransmitPlan, pulse_spec: &PulseSpec) -> Result<()> {
    geom.validate()?;
    plan.validate()?;
    pulse_spec.validate()?;
    if plan.hadamard_order != geom.n_cols {
        return Err(Error::DimensionMismatch(format!(
            "hadamard order {} must equal the column count {}",
            plan.hadamard_order, geom.n_cols
        )));
    }
    Ok(())
}

/// Effective single-column transmits simulated directly: transmit `j` is
/// column `j` firing alone (all rows, elevationally focused). The result is
/// in the decoded state.
pub fn simulate_columns(
    geom: &ArrayGeometry,
    plan: &TransmitPlan,
    phantom: &Phantom,
    pulse_spec: &PulseSpec,
    time_span: f64,
) -> Result<RfDataSet> {
    check_inputs(geom, plan, pulse_spec)?;
    let required = required_time_span(geom, plan, phantom, pulse_spec)?;
    if !phantom.scatterers.is_empty() && time_span < required {
        return Err(Error::TimeSpanTooShort {
            available: time_span,
            required,
        });
    }
    if !(time_span > 0.0 && time_span.is_finite()) {
        return Err(invalid("time_span", "must be positive"));
    }
    let fs = geom.sampling_rate;
    let samples = (time_span * fs).ceil() as usize + 1;
    let n_cols = geom.n_cols;
    let n_rows = geom.n_rows;
    let planes = plan.plane_positions.len();
    let block = n_cols * samples;
    let kernel = PulseKernel::new(pulse_spec, fs);
    let floor = geom.pitch / 10.0;
    let c = geom.sound_speed;

    let plane_delays: Vec<Vec<f64>> = plan
        .plane_positions
        .iter()
        .map(|&y| FocalConfig::new(plan.focal_depth, y).map(|f| elevational_focus_delays(geom, &f)))
        .collect::<Result<_>>()?;

    // receive leg of every (scatterer, column, row): time and 1/r weight
    let rx_legs: Vec<(f64, f64)> = phantom
        .scatterers
        .iter()
        .flat_map(|s| {
            (0..n_cols).flat_map(move |col| {
                (0..n_rows).map(move |row| {
                    let e = Point3::new(geom.column_x(col), geom.row_y(row), 0.0);
                    let r = e.distance(s.position);
                    (r / c, 1.0 / r.max(floor))
                })
            })
        })
        .collect();

    let mut data = vec![0.0; planes * n_cols * block];
    data.par_chunks_mut(block)
        .enumerate()
        .for_each(|(slab, out)| {
            let plane = slab / n_cols;
            let tx_col = slab % n_cols;
            let delays = &plane_delays[plane];
            let x = geom.column_x(tx_col);
            let mut tx_legs = vec![(0.0, 0.0); n_rows];
            for (si, s) in phantom.scatterers.iter().enumerate() {
                for (row, leg) in tx_legs.iter_mut().enumerate() {
                    let e = Point3::new(x, geom.row_y(row), 0.0);
                    let r = e.distance(s.position);
                    *leg = (delays[row] + r / c, s.amplitude / r.max(floor));
                }
                for ch in 0..n_cols {
                    let trace = &mut out[ch * samples..(ch + 1) * samples];
                    let legs =
                        &rx_legs[(si * n_cols + ch) * n_rows..(si * n_cols + ch + 1) * n_rows];
                    for &(t_rx, w_rx) in legs {
                        for &(t_tx, w_tx) in &tx_legs {
                            kernel.add(trace, t_tx + t_rx, w_tx * w_rx);
                        }
                    }
                }
            }
        });

    RfDataSet::from_parts(
        planes,
        n_cols,
        n_cols,
        samples,
        fs,
        DataState::Decoded,
        (0..n_cols).collect(),
        data,
    )
}

/// Hadamard-encoded channel data for every plane of `plan`.
///
/// During transmit `t` column `j` is biased with sign `H[t][j]`, so the
/// recorded channel data are `sum_j H[t][j] * column_j`, where `column_j`
/// is the echo field of column `j` firing alone ([`simulate_columns`]).
pub fn simulate_scheme(
    geom: &ArrayGeometry,
    plan: &TransmitPlan,
    phantom: &Phantom,
    pulse_spec: &PulseSpec,
    time_span: f64,
) -> Result<RfDataSet> {
    let columns = simulate_columns(geom, plan, phantom, pulse_spec, time_span)?;
    let h = hadamard(plan.hadamard_order)?;
    encode(&columns, &h)
}
