mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::*;
use tobe_rtb::config::{parse_config, RunConfig};
use tobe_rtb::formats::{read_rf, VolumeFile};
use tobe_rtb::pipeline::{
    run_pipeline, PipelineError, Stage, DECODED_FILE, ENCODED_FILE, FWHM_FILE, GCNR_FILE,
};

fn wire_config(out: &Path) -> String {
    let l = lambda();
    format!(
        r#"
seed = 3
output_dir = "{out}"

[geometry]
n_rows = 8
n_cols = 8
pitch = {l:e}
center_frequency = {F0:e}
sampling_rate = {FS:e}
sound_speed = {C:e}

[plan]
focal_depth = {f:e}
plane_spacing = {l:e}
plane_count = 7
planes_per_image = 5
uforces_k = 5

[phantom]
kind = "wires"
wires = [{{ y = 0.0, z = {f:e} }}, {{ y = 0.0, z = {z2:e} }}]
x_extent = {l:e}
spacing = {h:e}

[metrics]
profile_half_width = {hw:e}
"#,
        out = out.display(),
        f = 10.0 * l,
        z2 = 16.0 * l,
        h = l / 2.0,
        hw = 3.0 * l,
    )
}

fn cyst_config(out: &Path) -> String {
    let l = lambda();
    format!(
        r#"
seed = 11
output_dir = "{out}"

[geometry]
n_rows = 6
n_cols = 4
pitch = {l:e}
center_frequency = {F0:e}
sampling_rate = {FS:e}
sound_speed = {C:e}

[plan]
focal_depth = {f:e}
plane_spacing = {l:e}
plane_count = 5
planes_per_image = 3
uforces_k = 3

[phantom]
kind = "cysts"
cysts = [{{ center = {{ x = 0.0, y = 0.0, z = {f:e} }}, radius = {r:e}, axis = "x" }}]
speckle_density = {d:e}
bounds = {{ min = {{ x = {xm:e}, y = {ym:e}, z = {z0:e} }}, max = {{ x = {xp:e}, y = {yp:e}, z = {z1:e} }} }}

[grid]
x0 = 0.0
y0 = {ym:e}
z0 = {z0:e}
dx = {l:e}
dy = {l:e}
dz = {dz:e}
nx = 1
ny = 5
nz = 20

[metrics]
gcnr_bins = 20
"#,
        out = out.display(),
        f = 8.0 * l,
        r = 1.0 * l,
        d = 1.0 / (l * l * l),
        xm = -0.5 * l,
        xp = 0.5 * l,
        ym = -2.0 * l,
        yp = 2.0 * l,
        z0 = 5.0 * l,
        z1 = 11.0 * l,
        dz = l / 4.0,
    )
}

fn cfg_in(dir: &Path, text: fn(&Path) -> String) -> RunConfig {
    parse_config(&text(dir)).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn full_run_writes_every_artifact_and_stages_compose() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let summary = run_pipeline(&cfg_in(a.path(), wire_config), Stage::All).unwrap();
    assert_eq!(
        summary.stages_run,
        vec![
            Stage::Simulate,
            Stage::Decode,
            Stage::Beamform,
            Stage::Metrics
        ]
    );
    let names: Vec<String> = files(a.path()).into_iter().map(|f| f.0).collect();
    for n in [
        "bscan_FORCES.pgm",
        "bscan_uFORCES_RTB.pgm",
        "decoded.rcrf",
        "encoded.rcrf",
        "fwhm.csv",
        "summary.csv",
        "volume_FORCES_RTB.rcbv",
        "volume_uFORCES.rcbv",
    ] {
        assert!(names.iter().any(|x| x == n), "missing {n} in {names:?}");
    }

    let cfg_b = cfg_in(b.path(), wire_config);
    for stage in [
        Stage::Simulate,
        Stage::Decode,
        Stage::Beamform,
        Stage::Metrics,
    ] {
        run_pipeline(&cfg_b, stage).unwrap();
    }
    assert_eq!(files(a.path()), files(b.path()));

    let enc = read_rf(&a.path().join(ENCODED_FILE)).unwrap();
    let dec = read_rf(&a.path().join(DECODED_FILE)).unwrap();
    assert_eq!(enc.state().name(), "encoded");
    assert_eq!(dec.state().name(), "decoded");
    assert_eq!((dec.planes(), dec.transmits(), dec.channels()), (7, 8, 8));
    let vol = VolumeFile::read(&a.path().join("volume_FORCES.rcbv")).unwrap();
    assert_eq!(vol.grid, cfg_b.image_grid().unwrap());

    let pgm = fs::read(a.path().join("bscan_FORCES.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n# gray"));

    let csv = fs::read_to_string(a.path().join(FWHM_FILE)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "y_m,z_m,distance_m,FORCES,uFORCES,FORCES_RTB,uFORCES_RTB"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0][2].abs() < 1e-12);
    assert!(rows.iter().flatten().all(|v| v.is_finite()));

    let summary = fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("scheme,transmits_per_image,fps,fps_exact\nFORCES,8,500,500\n"));
}

#[test]
fn identical_config_gives_identical_tables() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let one = || {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
    };
    one()
        .install(|| run_pipeline(&cfg_in(a.path(), cyst_config), Stage::All))
        .unwrap();
    one()
        .install(|| run_pipeline(&cfg_in(b.path(), cyst_config), Stage::All))
        .unwrap();
    assert_eq!(files(a.path()), files(b.path()));
    let csv = fs::read_to_string(a.path().join(GCNR_FILE)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "y_m,z_m,distance_m,FORCES,uFORCES,FORCES_RTB,uFORCES_RTB"
    );
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(row.len(), 7);
    assert!(row[3..].iter().all(|g| (0.0..=1.0).contains(g)));

    // another seed moves the speckle
    let c = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(c.path(), cyst_config);
    cfg.seed = 12;
    run_pipeline(&cfg, Stage::Simulate).unwrap();
    assert_ne!(
        fs::read(a.path().join(ENCODED_FILE)).unwrap(),
        fs::read(c.path().join(ENCODED_FILE)).unwrap()
    );
}

#[test]
fn later_stage_without_inputs_is_a_precondition_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = cfg_in(d.path(), wire_config);
    match run_pipeline(&cfg, Stage::Decode) {
        Err(e @ PipelineError::Precondition { .. }) => {
            assert_eq!(e.stage(), "decode");
            assert!(e.to_string().contains(ENCODED_FILE));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        run_pipeline(&cfg, Stage::Beamform),
        Err(PipelineError::Precondition { .. })
    ));
    assert!(matches!(
        run_pipeline(&cfg, Stage::Metrics),
        Err(PipelineError::Precondition { .. })
    ));
}

#[test]
fn corrupted_artifact_is_reported_by_the_reading_stage() {
    let d = tempfile::tempdir().unwrap();
    let cfg = cfg_in(d.path(), wire_config);
    run_pipeline(&cfg, Stage::Simulate).unwrap();
    let p = d.path().join(ENCODED_FILE);
    let mut bytes = fs::read(&p).unwrap();
    let i = bytes.len() / 2;
    bytes[i] ^= 0x10;
    fs::write(&p, bytes).unwrap();
    let err = run_pipeline(&cfg, Stage::Decode).unwrap_err();
    assert_eq!(err.stage(), "decode");
    assert!(err.to_string().contains("crc"), "{err}");
}

#[test]
fn binary_reports_stage_and_exit_status() {
    let exe = env!("CARGO_BIN_EXE_tobe-rtb");
    let d = tempfile::tempdir().unwrap();
    let cfg_path = d.path().join("run.toml");
    let out = d.path().join("out");
    fs::write(&cfg_path, wire_config(&out)).unwrap();

    let r = Command::new(exe)
        .args(["decode", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("[decode] missing input"));

    let r = Command::new(exe)
        .args(["simulate", "--threads", "1", "--seed", "5", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out.join(ENCODED_FILE).is_file());

    let alt = d.path().join("alt");
    let r = Command::new(exe)
        .args(["decode", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&alt)
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));

    fs::write(
        &cfg_path,
        wire_config(&out).replace("[metrics]", "[metrics]\nbogus = 1"),
    )
    .unwrap();
    let r = Command::new(exe)
        .args(["all", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(
        err.starts_with("[config]") && err.contains("unknown key `bogus`"),
        "{err}"
    );
}
