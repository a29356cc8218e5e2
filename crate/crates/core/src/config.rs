//! TOML run configuration.
//!
//! A minimal document needs `seed`, `[geometry]`, `[plan]` (a focal depth
//! plus either `plane_positions` or `plane_spacing` and `plane_count`) and
//! `[phantom]`. Everything else has a default:
//!
//! | key | default |
//! |-----|---------|
//! | `output_dir` | `"out"` |
//! | `threads` | `0` (one per core) |
//! | `prf` | `4000.0` Hz |
//! | `dynamic_range_db` | `60.0` |
//! | `time_span` | latest echo of the phantom |
//! | `plan.plane_center` | `0.0` |
//! | `plan.hadamard_order` | `geometry.n_cols` |
//! | `plan.uforces_k` | `min(16, hadamard_order)` |
//! | `plan.planes_per_image` | `min(16, number of planes)` |
//! | `plan.schemes` | all four |
//! | `plan.compounding` | `"coherent"` (or `"incoherent"`, `"mean"`) |
//! | `pulse.fractional_bandwidth` | `0.8` |
//! | `pulse.amplitude` | `1.0` |
//! | `grid` | B-scan at `x = 0` over the planes and the phantom depth |
//! | `apodization.f_number` / `window` | `1.0` / `"boxcar"` |
//! | `metrics.profile_half_width` | `8 λ` |
//! | `metrics.profile_step` | `λ / 4` |
//! | `metrics.depth_window` | `2 λ` |
//! | `metrics.gcnr_bins` | `100` |
//! | `metrics.roi_inner` | `0.75` radii |
//! | `metrics.roi_outer` | `[1.25, 2.0]` radii |
//!
//! Defaults are written back into the parsed config, so serialising a
//! [`RunConfig`] and parsing it again reproduces it exactly.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beamformer::{ApodizationConfig, ImageGrid, DEFAULT_DYNAMIC_RANGE_DB};
use crate::geometry::{ArrayGeometry, Point3};
use crate::metrics::DEFAULT_GCNR_BINS;
use crate::simulator::{
    make_cyst_phantom, make_wire_phantom, Bounds, Compounding, Cylinder, Phantom, PulseSpec,
    Scatterer, Scheme, TransmitPlan,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing required key `{key}` (line {line}, column {column})")]
    MissingKey {
        key: String,
        line: usize,
        column: usize,
    },
    #[error("unknown key `{key}` at line {line}, column {column}")]
    UnknownKey {
        key: String,
        line: usize,
        column: usize,
    },
    #[error("invalid value at line {line}, column {column}: {message}")]
    InvalidValue {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invariant violated for `{field}`: {reason}")]
    Invariant { field: String, reason: String },
    #[error("cannot serialise config: {0}")]
    Serialize(String),
}

fn invariant(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invariant {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn scoped(section: &str, e: crate::Error) -> ConfigError {
    match e {
        crate::Error::InvalidParameter { name, reason } => {
            invariant(&format!("{section}.{name}"), reason)
        }
        other => invariant(section, other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_prf")]
    pub prf: f64,
    #[serde(default = "default_dynamic_range")]
    pub dynamic_range_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_span: Option<f64>,
    pub geometry: ArrayGeometry,
    pub plan: PlanConfig,
    #[serde(default)]
    pub pulse: PulseConfig,
    pub phantom: PhantomConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<ImageGrid>,
    #[serde(default)]
    pub apodization: ApodizationConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_prf() -> f64 {
    4000.0
}
fn default_dynamic_range() -> f64 {
    DEFAULT_DYNAMIC_RANGE_DB
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub focal_depth: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane_positions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane_count: Option<usize>,
    #[serde(default)]
    pub plane_center: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hadamard_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uforces_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planes_per_image: Option<usize>,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub compounding: Compounding,
}

fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    #[serde(default = "default_bandwidth")]
    pub fractional_bandwidth: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_bandwidth() -> f64 {
    0.8
}
fn default_amplitude() -> f64 {
    1.0
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            fractional_bandwidth: default_bandwidth(),
            amplitude: default_amplitude(),
        }
    }
}

/// A wire along `x` through `(y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSpec {
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PhantomConfig {
    Wires {
        wires: Vec<WireSpec>,
        x_extent: f64,
        spacing: f64,
    },
    Cysts {
        cysts: Vec<Cylinder>,
        speckle_density: f64,
        bounds: Bounds,
    },
    Points {
        scatterers: Vec<Scatterer>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_window: Option<f64>,
    #[serde(default = "default_bins")]
    pub gcnr_bins: usize,
    #[serde(default = "default_roi_inner")]
    pub roi_inner: f64,
    #[serde(default = "default_roi_outer")]
    pub roi_outer: [f64; 2],
}

fn default_bins() -> usize {
    DEFAULT_GCNR_BINS
}
fn default_roi_inner() -> f64 {
    0.75
}
fn default_roi_outer() -> [f64; 2] {
    [1.25, 2.0]
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            profile_half_width: None,
            profile_step: None,
            depth_window: None,
            gcnr_bins: default_bins(),
            roi_inner: default_roi_inner(),
            roi_outer: default_roi_outer(),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, column)
}

/// Text between the first pair of backticks, which is how serde names
/// fields in its messages.
fn quoted(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let end = start + message[start..].find('`')?;
    Some(message[start..end].to_string())
}

fn classify(text: &str, e: toml::de::Error) -> ConfigError {
    let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
    let message = e.message().trim().to_string();
    if message.starts_with("missing field") {
        ConfigError::MissingKey {
            key: quoted(&message).unwrap_or_default(),
            line,
            column,
        }
    } else if message.starts_with("unknown field") {
        ConfigError::UnknownKey {
            key: quoted(&message).unwrap_or_default(),
            line,
            column,
        }
    } else {
        ConfigError::InvalidValue {
            line,
            column,
            message,
        }
    }
}

/// Parses and validates a TOML run configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    if let Err(e) = text.parse::<toml::Table>() {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        return Err(ConfigError::Syntax {
            line,
            column,
            message: e.message().trim().to_string(),
        });
    }
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| classify(text, e))?;
    cfg.fill_defaults()?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Serialize(e.to_string()))
    }

    fn fill_defaults(&mut self) -> Result<(), ConfigError> {
        self.geometry
            .validate()
            .map_err(|e| scoped("geometry", e))?;
        let lambda = self.geometry.wavelength();
        let positions = self.plane_positions()?;
        let p = &mut self.plan;
        let order = *p.hadamard_order.get_or_insert(self.geometry.n_cols);
        p.uforces_k.get_or_insert(order.min(16));
        p.planes_per_image.get_or_insert(positions.len().min(16));
        let m = &mut self.metrics;
        m.profile_half_width.get_or_insert(8.0 * lambda);
        m.profile_step.get_or_insert(lambda / 4.0);
        m.depth_window.get_or_insert(2.0 * lambda);
        Ok(())
    }

    /// Elevational plane positions, explicit or generated from spacing and count.
    pub fn plane_positions(&self) -> Result<Vec<f64>, ConfigError> {
        let p = &self.plan;
        match (&p.plane_positions, p.plane_spacing, p.plane_count) {
            (Some(v), None, None) => Ok(v.clone()),
            (Some(_), _, _) => Err(invariant(
                "plan.plane_positions",
                "give either plane_positions or plane_spacing with plane_count, not both",
            )),
            (None, Some(step), Some(count)) => {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(invariant("plan.plane_spacing", "must be positive"));
                }
                if count == 0 {
                    return Err(invariant("plan.plane_count", "must be at least 1"));
                }
                Ok(TransmitPlan::walking_positions(p.plane_center, step, count))
            }
            (None, None, _) => Err(ConfigError::MissingKey {
                key: "plan.plane_positions".into(),
                line: 0,
                column: 0,
            }),
            (None, Some(_), None) => Err(ConfigError::MissingKey {
                key: "plan.plane_count".into(),
                line: 0,
                column: 0,
            }),
        }
    }

    /// Transmit plan for `scheme`.
    pub fn transmit_plan(&self, scheme: Scheme) -> Result<TransmitPlan, ConfigError> {
        let p = &self.plan;
        let unfilled = |k: &str| invariant(k, "not filled; build configs with parse_config");
        let mut plan = TransmitPlan::new(
            scheme,
            p.focal_depth,
            self.plane_positions()?,
            p.hadamard_order
                .ok_or_else(|| unfilled("plan.hadamard_order"))?,
            p.uforces_k.ok_or_else(|| unfilled("plan.uforces_k"))?,
            p.planes_per_image
                .ok_or_else(|| unfilled("plan.planes_per_image"))?,
        )
        .map_err(|e| scoped("plan", e))?;
        plan.compounding = p.compounding;
        Ok(plan)
    }

    pub fn pulse_spec(&self) -> Result<PulseSpec, ConfigError> {
        PulseSpec::new(
            self.geometry.center_frequency,
            self.pulse.fractional_bandwidth,
            self.pulse.amplitude,
        )
        .map_err(|e| scoped("pulse", e))
    }

    /// Builds the phantom; speckle draws use `seed`.
    pub fn build_phantom(&self) -> Result<Phantom, ConfigError> {
        let scope = |e| scoped("phantom", e);
        match &self.phantom {
            PhantomConfig::Wires {
                wires,
                x_extent,
                spacing,
            } => {
                let mut by_depth: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
                for w in wires {
                    by_depth.entry(w.z.to_bits()).or_default().push(w.y);
                }
                let mut out = Phantom::empty("wires");
                for (bits, ys) in by_depth {
                    let p = make_wire_phantom(&ys, f64::from_bits(bits), *x_extent, *spacing)
                        .map_err(scope)?;
                    out = out.merge(&p).map_err(scope)?;
                }
                Ok(out)
            }
            PhantomConfig::Cysts {
                cysts,
                speckle_density,
                bounds,
            } => make_cyst_phantom(cysts, *speckle_density, self.seed, *bounds).map_err(scope),
            PhantomConfig::Points { scatterers } => {
                Phantom::new(scatterers.clone(), Vec::new(), "points").map_err(scope)
            }
        }
    }

    /// Configured grid, or a B-scan at `x = 0` spanning the planes at half
    /// a wavelength and the phantom depth at an eighth of a wavelength.
    pub fn image_grid(&self) -> Result<ImageGrid, ConfigError> {
        if let Some(g) = self.grid {
            return Ok(g);
        }
        let lambda = self.geometry.wavelength();
        let positions = self.plane_positions()?;
        let y0 = positions[0];
        let y1 = positions[positions.len() - 1];
        let dy = lambda / 2.0;
        let ny = ((y1 - y0) / dy).round() as usize + 1;
        let z_max = self.build_phantom()?.max_depth().max(self.plan.focal_depth) + 4.0 * lambda;
        let z0 = (self.plan.focal_depth / 2.0).max(lambda);
        let dz = lambda / 8.0;
        let nz = ((z_max - z0) / dz).ceil() as usize + 1;
        ImageGrid::new(Point3::new(0.0, y0, z0), lambda, dy, dz, 1, ny, nz)
            .map_err(|e| scoped("grid", e))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.geometry
            .validate()
            .map_err(|e| scoped("geometry", e))?;
        if !(self.prf > 0.0 && self.prf.is_finite()) {
            return Err(invariant("prf", "must be positive"));
        }
        if !(self.dynamic_range_db > 0.0 && self.dynamic_range_db.is_finite()) {
            return Err(invariant("dynamic_range_db", "must be positive"));
        }
        if let Some(t) = self.time_span {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invariant("time_span", "must be positive"));
            }
        }
        if self.plan.schemes.is_empty() {
            return Err(invariant("plan.schemes", "at least one scheme is required"));
        }
        for (i, s) in self.plan.schemes.iter().enumerate() {
            if self.plan.schemes[..i].contains(s) {
                return Err(invariant("plan.schemes", format!("{s} listed twice")));
            }
        }
        let plan = self.transmit_plan(Scheme::ForcesRtb)?;
        if plan.hadamard_order != self.geometry.n_cols {
            return Err(invariant(
                "plan.hadamard_order",
                "must equal geometry.n_cols",
            ));
        }
        for &s in &self.plan.schemes {
            self.transmit_plan(s)?;
        }
        self.pulse_spec()?;
        self.apodization
            .validate()
            .map_err(|e| scoped("apodization", e))?;
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| scoped("grid", e))?;
        }
        let m = &self.metrics;
        for (name, v) in [
            ("metrics.profile_half_width", m.profile_half_width),
            ("metrics.profile_step", m.profile_step),
            ("metrics.depth_window", m.depth_window),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invariant(name, "must be positive"));
                }
            }
        }
        if m.gcnr_bins < 2 {
            return Err(invariant("metrics.gcnr_bins", "must be at least 2"));
        }
        if !(m.roi_inner > 0.0 && m.roi_inner < 1.0) {
            return Err(invariant("metrics.roi_inner", "must lie in (0, 1)"));
        }
        if !(m.roi_outer[0] > 1.0 && m.roi_outer[1] > m.roi_outer[0] && m.roi_outer[1].is_finite())
        {
            return Err(invariant("metrics.roi_outer", "need 1 < inner < outer"));
        }
        match &self.phantom {
            PhantomConfig::Wires { wires, .. } if wires.is_empty() => {
                return Err(invariant("phantom.wires", "at least one wire is required"))
            }
            PhantomConfig::Cysts { cysts, .. } if cysts.is_empty() => {
                return Err(invariant("phantom.cysts", "at least one cyst is required"))
            }
            _ => {}
        }
        if let PhantomConfig::Wires { wires, .. } = &self.phantom {
            if wires.iter().any(|w| !(w.z > 0.0)) {
                return Err(invariant("phantom.wires", "wire depth must be positive"));
            }
        }
        if let PhantomConfig::Cysts {
            cysts,
            speckle_density,
            bounds,
        } = &self.phantom
        {
            if cysts
                .iter()
                .any(|c| !(c.radius > 0.0 && c.radius.is_finite()))
            {
                return Err(invariant("phantom.cysts.radius", "must be positive"));
            }
            if !(*speckle_density > 0.0 && speckle_density.is_finite()) {
                return Err(invariant("phantom.speckle_density", "must be positive"));
            }
            if !(bounds.volume() > 0.0) || bounds.min.z < 0.0 {
                return Err(invariant(
                    "phantom.bounds",
                    "need min < max on every axis and min.z >= 0",
                ));
            }
        }
        self.build_phantom()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7

[geometry]
n_rows = 16
n_cols = 16
pitch = 3.3767e-4
center_frequency = 4.3e6
sampling_rate = 3.44e7
sound_speed = 1452.0

[plan]
focal_depth = 0.01
plane_spacing = 3.3767e-4
plane_count = 5

[phantom]
kind = "wires"
wires = [{ y = 0.0, z = 0.012 }]
x_extent = 1e-3
spacing = 5e-4
"#;

    const BENCH: &str = r#"
seed = 1
output_dir = "bench"

[geometry]
n_rows = 128
n_cols = 128
pitch = 2.0e-4
center_frequency = 4.3e6
sampling_rate = 1.72e7
sound_speed = 1452.0

[plan]
focal_depth = 0.03
plane_spacing = 5.0e-4
plane_count = 16
planes_per_image = 16

[apodization]
f_number = 1.0

[phantom]
kind = "cysts"
cysts = [{ center = { x = 0.0, y = 0.0, z = 0.03 }, radius = 2e-3, axis = "x" }]
speckle_density = 1e10
bounds = { min = { x = -1e-4, y = -3e-3, z = 0.026 }, max = { x = 1e-4, y = 3e-3, z = 0.034 } }
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert_eq!(c.threads, 0);
        assert_eq!(c.prf, 4000.0);
        assert_eq!(c.dynamic_range_db, 60.0);
        assert_eq!(c.plan.hadamard_order, Some(16));
        assert_eq!(c.plan.uforces_k, Some(16));
        assert_eq!(c.plan.planes_per_image, Some(5));
        assert_eq!(c.plan.schemes, Scheme::ALL.to_vec());
        assert_eq!(c.plan.compounding, Compounding::Coherent);
        assert_eq!(c.pulse, PulseConfig::default());
        assert_eq!(c.apodization, ApodizationConfig::default());
        assert_eq!(c.metrics.gcnr_bins, 100);
        let lambda = c.geometry.wavelength();
        assert_eq!(c.metrics.profile_step, Some(lambda / 4.0));
        assert_eq!(c.plane_positions().unwrap().len(), 5);
        let g = c.image_grid().unwrap();
        assert_eq!((g.nx, g.ny), (1, 9));
        assert!(g.z0 + (g.nz - 1) as f64 * g.dz >= 0.012);
    }

    #[test]
    fn bench_constants_round_trip() {
        let c = parse_config(BENCH).unwrap();
        assert_eq!(c.geometry.n_rows, 128);
        assert_eq!(c.plane_positions().unwrap().len(), 16);
        let text = c.to_toml().unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml().unwrap(), text);
    }

    #[test]
    fn zero_f_number_names_the_field() {
        let text = format!("{MINIMAL}\n[apodization]\nf_number = 0.0\n");
        match parse_config(&text) {
            Err(ConfigError::Invariant { field, .. }) => assert_eq!(field, "apodization.f_number"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_location() {
        let text = MINIMAL.replace(
            "sound_speed = 1452.0",
            "sound_speed = 1452.0\nsound_sped = 1.0",
        );
        match parse_config(&text) {
            Err(ConfigError::UnknownKey { key, line, .. }) => {
                assert_eq!(key, "sound_sped");
                assert_eq!(line, 11);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_key_is_distinct() {
        let text = MINIMAL.replace("focal_depth = 0.01\n", "");
        match parse_config(&text) {
            Err(ConfigError::MissingKey { key, .. }) => assert_eq!(key, "focal_depth"),
            other => panic!("unexpected {other:?}"),
        }
        let text = MINIMAL.replace("plane_count = 5\n", "");
        assert!(
            matches!(parse_config(&text), Err(ConfigError::MissingKey { key, .. }) if key == "plan.plane_count")
        );
        let text = MINIMAL.replace("seed = 7\n", "");
        assert!(
            matches!(parse_config(&text), Err(ConfigError::MissingKey { key, .. }) if key == "seed")
        );
    }

    #[test]
    fn syntax_and_type_errors() {
        assert!(matches!(
            parse_config("seed = = 1"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        let text = MINIMAL.replace("n_rows = 16", "n_rows = \"sixteen\"");
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::InvalidValue { line: 5, .. })
        ));
    }

    #[test]
    fn plan_invariants() {
        let text = MINIMAL.replace("plane_count = 5", "plane_count = 5\nhadamard_order = 8");
        assert!(
            matches!(parse_config(&text), Err(ConfigError::Invariant { field, .. }) if field == "plan.hadamard_order")
        );
        let text = MINIMAL.replace("plane_count = 5", "plane_count = 5\nplanes_per_image = 9");
        assert!(
            matches!(parse_config(&text), Err(ConfigError::Invariant { field, .. }) if field.starts_with("plan"))
        );
        let text = MINIMAL.replace(
            "plane_count = 5",
            "plane_count = 5\nplane_positions = [0.0]",
        );
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::Invariant { .. })
        ));
        let text = MINIMAL.replace(
            "plane_count = 5",
            "plane_count = 5\nschemes = [\"FORCES\", \"FORCES\"]",
        );
        assert!(
            matches!(parse_config(&text), Err(ConfigError::Invariant { field, .. }) if field == "plan.schemes")
        );
    }

    #[test]
    fn wires_at_several_depths_are_merged() {
        let text = MINIMAL.replace(
            "wires = [{ y = 0.0, z = 0.012 }]",
            "wires = [{ y = 0.0, z = 0.012 }, { y = 1e-3, z = 0.012 }, { y = 0.0, z = 0.015 }]",
        );
        let c = parse_config(&text).unwrap();
        let p = c.build_phantom().unwrap();
        assert_eq!(p.scatterers.len(), 3 * 3);
    }

    #[test]
    fn cyst_phantom_is_seeded() {
        let a = parse_config(BENCH).unwrap();
        let p1 = a.build_phantom().unwrap();
        let p2 = a.build_phantom().unwrap();
        assert_eq!(p1, p2);
        assert!(p1.scatterers.len() > 30);
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(b.build_phantom().unwrap().scatterers, p1.scatterers);
    }
}
