//! Image-quality and acquisition metrics: FWHM of a spread profile, the
//! generalized contrast-to-noise ratio, frame-rate accounting and the
//! effective elevational pitch of a walking acquisition.

use crate::error::{invalid, Error, Result};

/// Sampled 1-D response, e.g. the envelope of a wire image across elevation.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    coordinates: Vec<f64>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(coordinates: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if coordinates.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for {} values",
                coordinates.len(),
                values.len()
            )));
        }
        if coordinates.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("coordinates", "must be strictly increasing"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("values", "must be finite and non-negative"));
        }
        Ok(Self {
            coordinates,
            values,
        })
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coordinates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Full width at half maximum of the main lobe.
///
/// Walks outwards from the global peak to the first samples at or below half
/// the peak on each side and interpolates the crossings linearly. Side lobes
/// beyond those crossings do not widen the result.
pub fn fwhm(p: &Profile) -> Result<f64> {
    let v = &p.values;
    let x = &p.coordinates;
    let (peak, &max) = v
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    if v.is_empty() || max <= 0.0 {
        return Err(Error::Unmeasurable("profile has no positive peak".into()));
    }
    if peak == 0 || peak == v.len() - 1 {
        return Err(Error::Unmeasurable(
            "peak lies on the profile boundary".into(),
        ));
    }
    let half = max / 2.0;
    let cross = |a: usize, b: usize| x[a] + (half - v[a]) * (x[b] - x[a]) / (v[b] - v[a]);

    let left = (0..peak)
        .rev()
        .find(|&i| v[i] <= half)
        .map(|i| cross(i, i + 1))
        .ok_or_else(|| Error::Unmeasurable("half maximum not reached left of the peak".into()))?;
    let right = (peak + 1..v.len())
        .find(|&i| v[i] <= half)
        .map(|i| cross(i - 1, i))
        .ok_or_else(|| Error::Unmeasurable("half maximum not reached right of the peak".into()))?;
    Ok(right - left)
}

/// Rule-of-thumb lateral resolution `1.4 * wavelength * f_number`.
pub fn expected_fwhm(wavelength: f64, f_number: f64) -> f64 {
    1.4 * wavelength * f_number
}

/// Envelope samples from a target region and from its background.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSamples {
    pub inside: Vec<f64>,
    pub outside: Vec<f64>,
}

impl RegionSamples {
    pub fn new(inside: Vec<f64>, outside: Vec<f64>) -> Result<Self> {
        if inside.is_empty() || outside.is_empty() {
            return Err(invalid("region", "both regions need at least one sample"));
        }
        if inside.iter().chain(&outside).any(|v| !v.is_finite()) {
            return Err(invalid("region", "samples must be finite"));
        }
        Ok(Self { inside, outside })
    }
}

pub const DEFAULT_GCNR_BINS: usize = 100;

/// Generalized contrast-to-noise ratio: one minus the overlap of the two
/// normalised histograms, taken over `bins` equal bins spanning the shared
/// min-max range. Returns 0 when every sample has the same value.
pub fn gcnr(r: &RegionSamples, bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(invalid("bins", "at least two histogram bins are required"));
    }
    let (lo, hi) = r
        .inside
        .iter()
        .chain(&r.outside)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(hi > lo) {
        return Ok(0.0);
    }
    let hist = |samples: &[f64]| {
        let mut h = vec![0u128; bins];
        let scale = bins as f64 / (hi - lo);
        for &v in samples {
            let b = (((v - lo) * scale) as usize).min(bins - 1);
            h[b] += 1;
        }
        h
    };
    // overlap in integer counts scaled by n_in * n_out, so the endpoints are exact
    let (n_in, n_out) = (r.inside.len() as u128, r.outside.len() as u128);
    let (a, b) = (hist(&r.inside), hist(&r.outside));
    let overlap: u128 = a
        .iter()
        .zip(&b)
        .map(|(p, q)| (p * n_out).min(q * n_in))
        .sum();
    let total = n_in * n_out;
    Ok((total - overlap) as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRate {
    /// Whole frames per second, rounded to nearest.
    pub fps: u64,
    pub exact: f64,
}

pub fn frame_rate(transmits_per_image: usize, prf: f64) -> Result<FrameRate> {
    if transmits_per_image == 0 {
        return Err(invalid("transmits_per_image", "must be positive"));
    }
    if !(prf > 0.0 && prf.is_finite()) {
        return Err(invalid("prf", "must be positive"));
    }
    let exact = prf / transmits_per_image as f64;
    Ok(FrameRate {
        fps: exact.round() as u64,
        exact,
    })
}

/// Plane spacing expressed in wavelengths.
pub fn effective_elevational_pitch(
    plane_spacing: f64,
    sound_speed: f64,
    frequency: f64,
) -> Result<f64> {
    for (name, v) in [
        ("plane_spacing", plane_spacing),
        ("sound_speed", sound_speed),
        ("frequency", frequency),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be positive"));
        }
    }
    Ok(plane_spacing / (sound_speed / frequency))
}
