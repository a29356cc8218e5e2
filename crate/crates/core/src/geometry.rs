//! Array element coordinates, elevational transmit focusing and the
//! round-trip path lengths used by the beamformer.
//!
//! Coordinates: `x` is azimuthal (across columns), `y` is elevational
//! (across rows) and `z` is depth into the medium. The element grid is
//! centred on the origin and lies in the `z = 0` plane.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, rhs: f64) -> Point3 {
        Point3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// A row-column (TOBE) array: `n_rows` row electrodes along `y` crossed by
/// `n_cols` column electrodes along `x`, with square elements of side
/// `pitch` at every crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Element pitch in meters.
    pub pitch: f64,
    /// Transducer center frequency in Hz.
    pub center_frequency: f64,
    /// RF sampling rate in Hz.
    pub sampling_rate: f64,
    /// Speed of sound in m/s.
    pub sound_speed: f64,
}

impl ArrayGeometry {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        pitch: f64,
        center_frequency: f64,
        sampling_rate: f64,
        sound_speed: f64,
    ) -> Result<Self> {
        let geom = Self {
            n_rows,
            n_cols,
            pitch,
            center_frequency,
            sampling_rate,
            sound_speed,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Square array with `pitch` equal to one wavelength at `center_frequency`.
    pub fn lambda_pitch(
        n: usize,
        center_frequency: f64,
        sampling_rate: f64,
        sound_speed: f64,
    ) -> Result<Self> {
        Self::new(
            n,
            n,
            sound_speed / center_frequency,
            center_frequency,
            sampling_rate,
            sound_speed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows < 2 {
            return Err(invalid("n_rows", "must be at least 2"));
        }
        if self.n_cols < 2 {
            return Err(invalid("n_cols", "must be at least 2"));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(invalid("pitch", "must be positive"));
        }
        if !(self.center_frequency > 0.0 && self.center_frequency.is_finite()) {
            return Err(invalid("center_frequency", "must be positive"));
        }
        if !(self.sound_speed > 0.0 && self.sound_speed.is_finite()) {
            return Err(invalid("sound_speed", "must be positive"));
        }
        if !(self.sampling_rate >= 4.0 * self.center_frequency && self.sampling_rate.is_finite()) {
            return Err(invalid(
                "sampling_rate",
                "must be at least four times the center frequency",
            ));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        self.sound_speed / self.center_frequency
    }

    /// Azimuthal coordinate of column `col`.
    pub fn column_x(&self, col: usize) -> f64 {
        (col as f64 - (self.n_cols as f64 - 1.0) / 2.0) * self.pitch
    }

    /// Elevational coordinate of row `row`.
    pub fn row_y(&self, row: usize) -> f64 {
        (row as f64 - (self.n_rows as f64 - 1.0) / 2.0) * self.pitch
    }

    /// Elevational extent of a column electrode, from first to last row center.
    pub fn row_span(&self) -> (f64, f64) {
        (self.row_y(0), self.row_y(self.n_rows - 1))
    }

    pub fn element_position(&self, row: usize, col: usize) -> Result<Point3> {
        if row >= self.n_rows {
            return Err(Error::IndexOutOfRange {
                what: "row",
                index: row,
                limit: self.n_rows,
            });
        }
        if col >= self.n_cols {
            return Err(Error::IndexOutOfRange {
                what: "column",
                index: col,
                limit: self.n_cols,
            });
        }
        Ok(Point3::new(self.column_x(col), self.row_y(row), 0.0))
    }

    /// Point on the receiving column line closest to `px`; the column is a
    /// line element along `y`, so its stationary-phase receive point sits at
    /// the pixel's elevation, clamped to the electrode extent.
    pub fn column_receive_point(&self, col: usize, px: Point3) -> Point3 {
        let (lo, hi) = self.row_span();
        Point3::new(self.column_x(col), px.y.clamp(lo, hi), 0.0)
    }
}

/// Elevational focus of one transmit plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalConfig {
    /// Focal distance `f_dist` in meters.
    pub focal_depth: f64,
    /// Elevational position of the plane containing the focal arc.
    pub plane_y: f64,
}

impl FocalConfig {
    pub fn new(focal_depth: f64, plane_y: f64) -> Result<Self> {
        if !(focal_depth > 0.0 && focal_depth.is_finite()) {
            return Err(invalid("focal_depth", "must be positive"));
        }
        if !plane_y.is_finite() {
            return Err(invalid("plane_y", "must be finite"));
        }
        Ok(Self {
            focal_depth,
            plane_y,
        })
    }
}

/// Fixed-focus round trip: receive leg plus direct transmit leg.
pub fn path_length_forces(px: Point3, tx: Point3, rx: Point3) -> f64 {
    rx.distance(px) + px.distance(tx)
}

/// Round trip through an arc-shaped virtual source.
///
/// After decoding, transmit `tx_col_x` behaves like one long column focused
/// in elevation at `(plane_y, f_dist)`, i.e. its focal zone is an arc of
/// radius `f_dist` around the column in the plane `y = plane_y`. The
/// transmit leg runs from the column to the arc (`f_dist`) and then from the
/// arc to the pixel, added for pixels beyond the arc and subtracted for
/// pixels in front of it.
pub fn path_length_rtb(px: Point3, tx_col_x: f64, plane_y: f64, rx: Point3, f_dist: f64) -> f64 {
    let r_inplane = (tx_col_x - px.x).hypot(px.z);
    let radial = r_inplane - f_dist;
    let leg = radial.hypot(plane_y - px.y);
    let transmit = if radial >= 0.0 {
        f_dist + leg
    } else {
        f_dist - leg
    };
    (px.distance(rx) + transmit).max(0.0)
}

/// Per-row firing delays (seconds) that focus the rows at depth
/// `focal_depth` in the plane `y = plane_y`. Delays are shifted so the
/// smallest is zero; the row nearest `plane_y` fires last.
pub fn elevational_focus_delays(geom: &ArrayGeometry, focal: &FocalConfig) -> Vec<f64> {
    let dist: Vec<f64> = (0..geom.n_rows)
        .map(|row| focal.focal_depth.hypot(geom.row_y(row) - focal.plane_y))
        .collect();
    let max = dist.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    dist.iter().map(|d| (max - d) / geom.sound_speed).collect()
}

/// Time at which the focused wavefront of `focal` crosses its focal arc,
/// minus the one-way time `f_dist / c`. Adding this to `path / c` converts
/// a virtual-source path length into a receive time on the shared clock of
/// [`elevational_focus_delays`].
pub fn focal_time_offset(geom: &ArrayGeometry, focal: &FocalConfig) -> f64 {
    let max = (0..geom.n_rows)
        .map(|row| focal.focal_depth.hypot(geom.row_y(row) - focal.plane_y))
        .fold(f64::NEG_INFINITY, f64::max);
    (max - focal.focal_depth) / geom.sound_speed
}
