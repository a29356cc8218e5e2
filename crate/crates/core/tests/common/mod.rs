#![allow(dead_code)]

use tobe_rtb::encoding::{DataState, RfDataSet};
use tobe_rtb::geometry::{elevational_focus_delays, ArrayGeometry, FocalConfig};
use tobe_rtb::simulator::{pulse, Phantom, PulseSpec, TransmitPlan};

pub const C: f64 = 1452.0;
pub const F0: f64 = 4.3e6;
pub const FS: f64 = 8.0 * F0;

pub fn lambda() -> f64 {
    C / F0
}

pub fn desk_geometry(rows: usize, cols: usize) -> ArrayGeometry {
    ArrayGeometry::new(rows, cols, lambda(), F0, FS, C).unwrap()
}

/// Per-column channel data by direct summation over every transmitting
/// element, receiving element and scatterer, evaluating the pulse at every
/// sample it can reach.
pub fn brute_force_columns(
    geom: &ArrayGeometry,
    plan: &TransmitPlan,
    phantom: &Phantom,
    spec: &PulseSpec,
    samples: usize,
) -> RfDataSet {
    let n = geom.n_cols;
    let planes = plan.plane_positions.len();
    let floor = geom.pitch / 10.0;
    let reach = 8.0 * spec.sigma();
    let mut data = vec![0.0; planes * n * n * samples];
    for (p, &y) in plan.plane_positions.iter().enumerate() {
        let delays =
            elevational_focus_delays(geom, &FocalConfig::new(plan.focal_depth, y).unwrap());
        for tx in 0..n {
            for ch in 0..n {
                let base = ((p * n + tx) * n + ch) * samples;
                for s in &phantom.scatterers {
                    for tr in 0..geom.n_rows {
                        let e_tx = geom.element_position(tr, tx).unwrap();
                        let r_tx = e_tx.distance(s.position);
                        for rr in 0..geom.n_rows {
                            let e_rx = geom.element_position(rr, ch).unwrap();
                            let r_rx = e_rx.distance(s.position);
                            let arrival = delays[tr] + (r_tx + r_rx) / geom.sound_speed;
                            let w = s.amplitude / (r_tx.max(floor) * r_rx.max(floor));
                            let lo =
                                ((arrival - reach) * geom.sampling_rate).floor().max(0.0) as usize;
                            let hi = (((arrival + reach) * geom.sampling_rate).ceil() as usize)
                                .min(samples - 1);
                            for k in lo..=hi {
                                data[base + k] +=
                                    w * pulse(k as f64 / geom.sampling_rate - arrival, spec);
                            }
                        }
                    }
                }
            }
        }
    }
    RfDataSet::from_parts(
        planes,
        n,
        n,
        samples,
        geom.sampling_rate,
        DataState::Decoded,
        (0..n).collect(),
        data,
    )
    .unwrap()
}

/// `max |a - b| / max |b|`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    err / scale
}
