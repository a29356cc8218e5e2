//! Staged pipeline: simulate -> decode -> beamform -> metrics.
//!
//! Every stage reads its input from the output directory and writes its
//! result there, so running stages one at a time gives the same files as
//! running them together.
//!
//! | stage | reads | writes |
//! |-------|-------|--------|
//! | simulate | config | `encoded.rcrf` |
//! | decode | `encoded.rcrf` | `decoded.rcrf` |
//! | beamform | `decoded.rcrf` | `volume_<scheme>.rcbv`, `bscan_<scheme>.pgm` |
//! | metrics | `decoded.rcrf` | `fwhm.csv` or `gcnr.csv`, `summary.csv` |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::beamformer::{beamform_volume, log_compress, ApodizationConfig, ImageGrid};
use crate::config::{ConfigError, PhantomConfig, RunConfig, WireSpec};
use crate::encoding::{decode, hadamard, RfDataSet};
use crate::formats::{pgm_bytes, read_rf, write_rf, FormatError, VolumeFile};
use crate::geometry::{ArrayGeometry, Point3};
use crate::metrics::{frame_rate, fwhm, gcnr, Profile, RegionSamples};
use crate::simulator::{required_time_span, simulate_scheme, Axis, Cylinder, Scheme, TransmitPlan};

pub const ENCODED_FILE: &str = "encoded.rcrf";
pub const DECODED_FILE: &str = "decoded.rcrf";
pub const FWHM_FILE: &str = "fwhm.csv";
pub const GCNR_FILE: &str = "gcnr.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Decode,
    Beamform,
    Metrics,
    All,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Decode => "decode",
            Stage::Beamform => "beamform",
            Stage::Metrics => "metrics",
            Stage::All => "all",
        }
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate" => Ok(Stage::Simulate),
            "decode" => Ok(Stage::Decode),
            "beamform" => Ok(Stage::Beamform),
            "metrics" => Ok(Stage::Metrics),
            "all" => Ok(Stage::All),
            other => Err(format!("unknown stage `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("[{stage}] configuration: {source}")]
    Config {
        stage: &'static str,
        #[source]
        source: ConfigError,
    },
    #[error("[{stage}] missing input {}: run the {needs} stage first", path.display())]
    Precondition {
        stage: &'static str,
        path: PathBuf,
        needs: &'static str,
    },
    #[error("[{stage}] {source}")]
    Format {
        stage: &'static str,
        #[source]
        source: FormatError,
    },
    #[error("[{stage}] {source}")]
    Compute {
        stage: &'static str,
        #[source]
        source: crate::Error,
    },
    #[error("[{stage}] writing {}: {source}", path.display())]
    Io {
        stage: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config { stage, .. }
            | PipelineError::Precondition { stage, .. }
            | PipelineError::Format { stage, .. }
            | PipelineError::Compute { stage, .. }
            | PipelineError::Io { stage, .. } => stage,
        }
    }
}

type PResult<T> = std::result::Result<T, PipelineError>;

struct Ctx<'a> {
    stage: &'static str,
    cfg: &'a RunConfig,
}

impl Ctx<'_> {
    fn cfg<T>(&self, r: Result<T, ConfigError>) -> PResult<T> {
        r.map_err(|source| PipelineError::Config {
            stage: self.stage,
            source,
        })
    }
    fn compute<T>(&self, r: crate::Result<T>) -> PResult<T> {
        r.map_err(|source| PipelineError::Compute {
            stage: self.stage,
            source,
        })
    }
    fn format<T>(&self, r: Result<T, FormatError>) -> PResult<T> {
        r.map_err(|source| PipelineError::Format {
            stage: self.stage,
            source,
        })
    }
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }
    fn require(&self, name: &str, needs: &'static str) -> PResult<PathBuf> {
        let path = self.path(name);
        if !path.is_file() {
            return Err(PipelineError::Precondition {
                stage: self.stage,
                path,
                needs,
            });
        }
        Ok(path)
    }
    fn write(&self, path: &Path, bytes: &[u8]) -> PResult<()> {
        fs::write(path, bytes).map_err(|source| PipelineError::Io {
            stage: self.stage,
            path: path.to_path_buf(),
            source,
        })
    }
}

/// One row of the run summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub transmits_per_image: usize,
    pub fps: u64,
    pub fps_exact: f64,
    /// Samples of the beamformed B-scan that fell outside the recording.
    pub clipped: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineSummary {
    pub stages_run: Vec<Stage>,
    pub artifacts: Vec<PathBuf>,
    pub schemes: Vec<SchemeSummary>,
}

impl PipelineSummary {
    pub fn table(&self) -> String {
        let mut s = String::from("scheme        transmits/image   fps  (exact)\n");
        for r in &self.schemes {
            let _ = writeln!(
                s,
                "{:<12} {:>16} {:>5}  ({})",
                r.scheme.label(),
                r.transmits_per_image,
                r.fps,
                r.fps_exact
            );
        }
        s
    }
}

/// Runs `stage` (or every stage for [`Stage::All`]) with outputs in
/// `cfg.output_dir`.
pub fn run_pipeline(cfg: &RunConfig, stage: Stage) -> PResult<PipelineSummary> {
    let mut summary = PipelineSummary::default();
    let stages: &[Stage] = match stage {
        Stage::All => &[
            Stage::Simulate,
            Stage::Decode,
            Stage::Beamform,
            Stage::Metrics,
        ],
        Stage::Simulate => &[Stage::Simulate],
        Stage::Decode => &[Stage::Decode],
        Stage::Beamform => &[Stage::Beamform],
        Stage::Metrics => &[Stage::Metrics],
    };
    fs::create_dir_all(&cfg.output_dir).map_err(|source| PipelineError::Io {
        stage: stage.name(),
        path: cfg.output_dir.clone(),
        source,
    })?;
    for &s in stages {
        let ctx = Ctx {
            stage: s.name(),
            cfg,
        };
        match s {
            Stage::Simulate => run_simulate(&ctx, &mut summary)?,
            Stage::Decode => run_decode(&ctx, &mut summary)?,
            Stage::Beamform => run_beamform(&ctx, &mut summary)?,
            Stage::Metrics => run_metrics(&ctx, &mut summary)?,
            Stage::All => unreachable!("expanded above"),
        }
        summary.stages_run.push(s);
    }
    Ok(summary)
}

fn run_simulate(ctx: &Ctx, summary: &mut PipelineSummary) -> PResult<()> {
    let cfg = ctx.cfg;
    let plan = ctx.cfg(cfg.transmit_plan(Scheme::Forces))?;
    let phantom = ctx.cfg(cfg.build_phantom())?;
    let pulse = ctx.cfg(cfg.pulse_spec())?;
    let span = match cfg.time_span {
        Some(t) => t,
        None => ctx.compute(required_time_span(&cfg.geometry, &plan, &phantom, &pulse))?,
    };
    let enc = ctx.compute(simulate_scheme(
        &cfg.geometry,
        &plan,
        &phantom,
        &pulse,
        span,
    ))?;
    let path = ctx.path(ENCODED_FILE);
    ctx.format(write_rf(&path, &enc))?;
    summary.artifacts.push(path);
    Ok(())
}

fn run_decode(ctx: &Ctx, summary: &mut PipelineSummary) -> PResult<()> {
    let input = ctx.require(ENCODED_FILE, "simulate")?;
    let enc = ctx.format(read_rf(&input))?;
    let plan = ctx.cfg(ctx.cfg.transmit_plan(Scheme::Forces))?;
    let h = ctx.compute(hadamard(plan.hadamard_order))?;
    let dec = ctx.compute(decode(&enc, &h))?;
    let path = ctx.path(DECODED_FILE);
    ctx.format(write_rf(&path, &dec))?;
    summary.artifacts.push(path);
    Ok(())
}

fn load_decoded(ctx: &Ctx) -> PResult<RfDataSet> {
    let input = ctx.require(DECODED_FILE, "decode")?;
    ctx.format(read_rf(&input))
}

fn scheme_summary(ctx: &Ctx, plan: &TransmitPlan, clipped: Option<u64>) -> PResult<SchemeSummary> {
    let n = plan.transmits_per_image();
    let fr = ctx.compute(frame_rate(n, ctx.cfg.prf))?;
    Ok(SchemeSummary {
        scheme: plan.scheme,
        transmits_per_image: n,
        fps: fr.fps,
        fps_exact: fr.exact,
        clipped,
    })
}

fn run_beamform(ctx: &Ctx, summary: &mut PipelineSummary) -> PResult<()> {
    let cfg = ctx.cfg;
    let dec = load_decoded(ctx)?;
    let grid = ctx.cfg(cfg.image_grid())?;
    for &scheme in &cfg.plan.schemes {
        let plan = ctx.cfg(cfg.transmit_plan(scheme))?;
        let vol = ctx.compute(beamform_volume(
            &dec,
            &plan,
            &grid,
            &cfg.geometry,
            &cfg.apodization,
        ))?;
        let path = ctx.path(&format!("volume_{}.rcbv", scheme.label()));
        let file = ctx.format(VolumeFile::from_envelope(&vol))?;
        ctx.format(file.write(&path))?;
        summary.artifacts.push(path);

        // y-z slice through the middle x index, depth down the image
        let ix = grid.nx / 2;
        let slice: Vec<f64> = (0..grid.nz)
            .flat_map(|iz| (0..grid.ny).map(move |iy| (iy, iz)))
            .map(|(iy, iz)| vol.envelope_at(ix, iy, iz))
            .collect();
        let db = log_compress(&slice, cfg.dynamic_range_db);
        let pgm = ctx.format(pgm_bytes(&db, grid.ny, grid.nz, cfg.dynamic_range_db))?;
        let path = ctx.path(&format!("bscan_{}.pgm", scheme.label()));
        ctx.write(&path, &pgm)?;
        summary.artifacts.push(path);
        summary
            .schemes
            .push(scheme_summary(ctx, &plan, Some(vol.clipped))?);
    }
    Ok(())
}

/// Settings for profile and contrast measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSettings {
    pub profile_half_width: f64,
    pub profile_step: f64,
    pub depth_window: f64,
    pub gcnr_bins: usize,
    pub roi_inner: f64,
    pub roi_outer: [f64; 2],
}

impl MeasureSettings {
    fn from_config(cfg: &RunConfig) -> Self {
        let lambda = cfg.geometry.wavelength();
        let m = &cfg.metrics;
        Self {
            profile_half_width: m.profile_half_width.unwrap_or(8.0 * lambda),
            profile_step: m.profile_step.unwrap_or(lambda / 4.0),
            depth_window: m.depth_window.unwrap_or(2.0 * lambda),
            gcnr_bins: m.gcnr_bins,
            roi_inner: m.roi_inner,
            roi_outer: m.roi_outer,
        }
    }
}

/// Elevational profile of a wire: for each elevation, the envelope peak
/// within `depth_window` of the wire depth.
///
/// Fixed-focus schemes are sampled at the plane positions (each plane is
/// its own B-scan); RTB schemes on a regular grid of `profile_step`.
pub fn wire_profile(
    decoded: &RfDataSet,
    plan: &TransmitPlan,
    geom: &ArrayGeometry,
    apod: &ApodizationConfig,
    wire: WireSpec,
    s: &MeasureSettings,
) -> crate::Result<Profile> {
    let dz = geom.wavelength() / 8.0;
    let nz = (2.0 * s.depth_window / dz).round() as usize + 1;
    let z0 = wire.z - s.depth_window;
    let ys: Vec<f64> = if plan.scheme.is_rtb() {
        let n = (s.profile_half_width / s.profile_step).floor() as usize;
        (0..2 * n + 1)
            .map(|i| wire.y + (i as f64 - n as f64) * s.profile_step)
            .collect()
    } else {
        plan.plane_positions
            .iter()
            .copied()
            .filter(|y| (y - wire.y).abs() <= s.profile_half_width + 1e-12)
            .collect()
    };
    let mut values = Vec::with_capacity(ys.len());
    for &y in &ys {
        let grid = ImageGrid::new(Point3::new(0.0, y, z0), geom.pitch, 1.0, dz, 1, 1, nz)?;
        let vol = beamform_volume(decoded, plan, &grid, geom, apod)?;
        values.push(vol.envelope.iter().copied().fold(0.0, f64::max));
    }
    Profile::new(ys, values)
}

/// gCNR of a cylinder along `x`: envelope inside `roi_inner` radii against
/// the annulus between `roi_outer[0]` and `roi_outer[1]` radii, on a y-z
/// grid (half-wavelength in y, eighth-wavelength in z) at the cylinder's x.
pub fn cyst_gcnr(
    decoded: &RfDataSet,
    plan: &TransmitPlan,
    geom: &ArrayGeometry,
    apod: &ApodizationConfig,
    cyst: &Cylinder,
    s: &MeasureSettings,
) -> crate::Result<f64> {
    if cyst.axis != Axis::X {
        return Err(crate::error::invalid(
            "cyst.axis",
            "contrast is measured on cylinders along x",
        ));
    }
    let lambda = geom.wavelength();
    let (dy, dz) = (lambda / 2.0, lambda / 8.0);
    let reach = s.roi_outer[1] * cyst.radius;
    let hy = (reach / dy).ceil() as usize;
    let hz = (reach / dz).ceil() as usize;
    let c = cyst.center;
    let grid = ImageGrid::new(
        Point3::new(c.x, c.y - hy as f64 * dy, c.z - hz as f64 * dz),
        geom.pitch,
        dy,
        dz,
        1,
        2 * hy + 1,
        2 * hz + 1,
    )?;
    let vol = beamform_volume(decoded, plan, &grid, geom, apod)?;
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    let (r_in, r_lo, r_hi) = (
        s.roi_inner * cyst.radius,
        s.roi_outer[0] * cyst.radius,
        s.roi_outer[1] * cyst.radius,
    );
    for iy in 0..grid.ny {
        for iz in 0..grid.nz {
            let d = (grid.y(iy) - c.y).hypot(grid.z(iz) - c.z);
            let v = vol.envelope_at(0, iy, iz);
            if d <= r_in {
                inside.push(v);
            } else if d >= r_lo && d <= r_hi {
                outside.push(v);
            }
        }
    }
    gcnr(&RegionSamples::new(inside, outside)?, s.gcnr_bins)
}

fn csv_value(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |v| format!("{v:e}"))
}

fn run_metrics(ctx: &Ctx, summary: &mut PipelineSummary) -> PResult<()> {
    let cfg = ctx.cfg;
    let dec = load_decoded(ctx)?;
    let s = MeasureSettings::from_config(cfg);
    let plans = cfg
        .plan
        .schemes
        .iter()
        .map(|&sc| ctx.cfg(cfg.transmit_plan(sc)))
        .collect::<PResult<Vec<_>>>()?;
    let mut header = String::from("y_m,z_m,distance_m");
    for p in &plans {
        header.push(',');
        header.push_str(p.scheme.label());
    }
    header.push('\n');
    let focal = cfg.plan.focal_depth;
    let table = match &cfg.phantom {
        PhantomConfig::Wires { wires, .. } => {
            let mut out = header;
            for w in wires {
                let _ = write!(out, "{:e},{:e},{:e}", w.y, w.z, w.z - focal);
                for p in &plans {
                    let profile = ctx.compute(wire_profile(
                        &dec,
                        p,
                        &cfg.geometry,
                        &cfg.apodization,
                        *w,
                        &s,
                    ))?;
                    out.push(',');
                    out.push_str(&csv_value(fwhm(&profile).ok()));
                }
                out.push('\n');
            }
            Some((FWHM_FILE, out))
        }
        PhantomConfig::Cysts { cysts, .. } => {
            let mut out = header;
            for c in cysts {
                let _ = write!(
                    out,
                    "{:e},{:e},{:e}",
                    c.center.y,
                    c.center.z,
                    c.center.z - focal
                );
                for p in &plans {
                    let g =
                        ctx.compute(cyst_gcnr(&dec, p, &cfg.geometry, &cfg.apodization, c, &s))?;
                    out.push(',');
                    out.push_str(&csv_value(Some(g)));
                }
                out.push('\n');
            }
            Some((GCNR_FILE, out))
        }
        PhantomConfig::Points { .. } => None,
    };
    if let Some((name, text)) = table {
        let path = ctx.path(name);
        ctx.write(&path, text.as_bytes())?;
        summary.artifacts.push(path);
    }
    let mut text = String::from("scheme,transmits_per_image,fps,fps_exact\n");
    summary.schemes.clear();
    for p in &plans {
        let r = scheme_summary(ctx, p, None)?;
        let _ = writeln!(
            text,
            "{},{},{},{}",
            r.scheme.label(),
            r.transmits_per_image,
            r.fps,
            r.fps_exact
        );
        summary.schemes.push(r);
    }
    let path = ctx.path(SUMMARY_FILE);
    ctx.write(&path, text.as_bytes())?;
    summary.artifacts.push(path);
    Ok(())
}
