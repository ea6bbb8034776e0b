//! Unit conversions, node positions and random topology sampling.
//!
//! Angles are radians everywhere inside the crate. Degrees only appear at the
//! config boundary.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> Result<f64> {
    ensure_finite("dB value", db)?;
    Ok(10f64.powf(db / 10.0))
}

pub fn linear_to_db(ratio: f64) -> Result<f64> {
    ensure_finite("linear ratio", ratio)?;
    if ratio <= 0.0 {
        return Err(Error::invalid("linear ratio", "must be positive to express in dB"));
    }
    Ok(10.0 * ratio.log10())
}

/// Power level in dBm.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerDbm(f64);

impl PowerDbm {
    pub fn new(dbm: f64) -> Result<Self> {
        ensure_finite("power in dBm", dbm).map(PowerDbm)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn watts(self) -> f64 {
        dbm_to_watt(self)
    }
}

impl TryFrom<f64> for PowerDbm {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        PowerDbm::new(value)
    }
}

impl From<PowerDbm> for f64 {
    fn from(p: PowerDbm) -> f64 {
        p.0
    }
}

pub fn dbm_to_watt(p: PowerDbm) -> f64 {
    10f64.powf((p.0 - 30.0) / 10.0)
}

/// Thermal noise power in dBm over `bandwidth_hz` for a given PSD in dBm/Hz.
pub fn noise_power_dbm(psd_dbm_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    ensure_finite("noise PSD", psd_dbm_hz)?;
    ensure_positive("bandwidth", bandwidth_hz)?;
    Ok(psd_dbm_hz + 10.0 * bandwidth_hz.log10())
}

/// Noise power in watts over `bandwidth_hz`.
pub fn noise_power_watt(psd_dbm_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    Ok(dbm_to_watt(PowerDbm::new(noise_power_dbm(psd_dbm_hz, bandwidth_hz)?)?))
}

/// Point in a local east/north/up frame, metres. `z` is altitude above ground.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        ensure_finite("x coordinate", x)?;
        ensure_finite("y coordinate", y)?;
        ensure_finite("z coordinate", z)?;
        if z < 0.0 {
            return Err(Error::invalid(
                "z coordinate",
                format!("altitude must be >= 0, got {z}"),
            ));
        }
        Ok(Position3D { x, y, z })
    }

    pub fn ground(x: f64, y: f64) -> Self {
        Position3D { x, y, z: 0.0 }
    }

    pub fn at_height(self, z: f64) -> Self {
        Position3D { z, ..self }
    }

    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// Direction of arrival/departure. Azimuth in (-pi, pi], elevation in [-pi/2, pi/2].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AzEl {
    pub azimuth: f64,
    pub elevation: f64,
}

impl AzEl {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        ensure_finite("azimuth", azimuth)?;
        ensure_finite("elevation", elevation)?;
        if !(-PI / 2.0..=PI / 2.0).contains(&elevation) {
            return Err(Error::invalid(
                "elevation",
                format!("{elevation} outside [-pi/2, pi/2]"),
            ));
        }
        Ok(AzEl {
            azimuth: wrap_azimuth(azimuth),
            elevation,
        })
    }

    pub fn zenith() -> Self {
        AzEl {
            azimuth: 0.0,
            elevation: PI / 2.0,
        }
    }

    /// Direction cosines along x and y of the unit vector.
    pub fn direction_cosines(&self) -> (f64, f64) {
        let c = self.elevation.cos();
        (c * self.azimuth.cos(), c * self.azimuth.sin())
    }

    /// The opposite direction, i.e. how the far end sees this end.
    pub fn reversed(&self) -> Self {
        AzEl {
            azimuth: wrap_azimuth(self.azimuth + PI),
            elevation: -self.elevation,
        }
    }
}

fn wrap_azimuth(az: f64) -> f64 {
    let mut a = az % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// 3D distance from `a` to `b` and the direction of `b` as seen from `a`.
pub fn distance_and_angles(a: &Position3D, b: &Position3D) -> Result<(f64, AzEl)> {
    let (dx, dy, dz) = (b.x - a.x, b.y - a.y, b.z - a.z);
    let horizontal = dx.hypot(dy);
    let d = horizontal.hypot(dz);
    if d == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "coincident points at ({}, {}, {})",
            a.x, a.y, a.z
        )));
    }
    let elevation = dz.atan2(horizontal);
    let azimuth = if horizontal == 0.0 { 0.0 } else { dy.atan2(dx) };
    Ok((d, AzEl { azimuth, elevation }))
}

/// Area from which ground positions are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Region {
    /// `[0, side) x [0, side)`.
    Square { side: f64 },
    /// Disk of `radius` centred on the origin.
    Disk { radius: f64 },
    /// Ring `inner <= r <= outer` centred on the origin.
    Annulus { inner: f64, outer: f64 },
}

impl Region {
    fn validate(&self) -> Result<()> {
        match *self {
            Region::Square { side } => ensure_positive("square side", side).map(drop),
            Region::Disk { radius } => ensure_positive("disk radius", radius).map(drop),
            Region::Annulus { inner, outer } => {
                ensure_finite("annulus inner radius", inner)?;
                ensure_positive("annulus outer radius", outer)?;
                if inner < 0.0 || inner >= outer {
                    return Err(Error::invalid(
                        "annulus",
                        format!("need 0 <= inner < outer, got {inner}..{outer}"),
                    ));
                }
                Ok(())
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position3D {
        match *self {
            Region::Square { side } => Position3D::ground(rng.random::<f64>() * side, rng.random::<f64>() * side),
            Region::Disk { radius } => polar_sample(rng, 0.0, radius),
            Region::Annulus { inner, outer } => polar_sample(rng, inner, outer),
        }
    }
}

// area-uniform: r^2 uniform on [inner^2, outer^2]
fn polar_sample<R: Rng + ?Sized>(rng: &mut R, inner: f64, outer: f64) -> Position3D {
    let u: f64 = rng.random();
    let r = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
    let theta = rng.random::<f64>() * 2.0 * PI;
    Position3D::ground(r * theta.cos(), r * theta.sin())
}

/// Draws `n` i.i.d. uniform ground positions (z = 0) in `region`.
pub fn sample_positions<R: Rng + ?Sized>(region: Region, n: usize, rng: &mut R) -> Result<Vec<Position3D>> {
    region.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample count", "need at least one position"));
    }
    Ok((0..n).map(|_| region.sample(rng)).collect())
}
