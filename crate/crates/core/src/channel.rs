//! Large-scale path loss and small-scale fading for every link class.

use std::f64::consts::PI;

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::{upa_steering, CMatrix, UpaGeometry, C64};
use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::units::{distance_and_angles, AzEl, Position3D, SPEED_OF_LIGHT};

/// Free-space path loss `20 log10(4 pi d f / c)` in dB.
pub fn fspl_db(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    ensure_positive("distance", distance_m)?;
    ensure_positive("frequency", frequency_hz)?;
    Ok(20.0 * (4.0 * PI * distance_m * frequency_hz / SPEED_OF_LIGHT).log10())
}

/// Free-space loss plus molecular absorption `k_abs` dB per km.
pub fn subthz_pathloss_db(distance_m: f64, frequency_hz: f64, absorption_db_per_km: f64) -> Result<f64> {
    ensure_finite("absorption coefficient", absorption_db_per_km)?;
    if absorption_db_per_km < 0.0 {
        return Err(Error::invalid(
            "absorption coefficient",
            format!("must be >= 0 dB/km, got {absorption_db_per_km}"),
        ));
    }
    Ok(fspl_db(distance_m, frequency_hz)? + absorption_term_db(distance_m, absorption_db_per_km))
}

pub fn absorption_term_db(distance_m: f64, absorption_db_per_km: f64) -> f64 {
    absorption_db_per_km * distance_m / 1000.0
}

pub const UMA_MIN_DISTANCE_M: f64 = 10.0;
pub const UMA_MAX_DISTANCE_M: f64 = 5000.0;

/// Urban-macro NLoS loss
/// `13.54 + 39.08 log10(d) + 20 log10(f_GHz) - 0.6 (h_ut - 1.5)`.
///
/// Distances outside `[10, 5000]` m are clamped to the validity range.
pub fn uma_nlos_db(d3d_m: f64, frequency_hz: f64, ut_height_m: f64) -> Result<f64> {
    ensure_positive("distance", d3d_m)?;
    ensure_positive("frequency", frequency_hz)?;
    ensure_positive("user terminal height", ut_height_m)?;
    let d = if !(UMA_MIN_DISTANCE_M..=UMA_MAX_DISTANCE_M).contains(&d3d_m) {
        warn!("urban-macro distance {d3d_m} m outside [10, 5000] m, clamped");
        d3d_m.clamp(UMA_MIN_DISTANCE_M, UMA_MAX_DISTANCE_M)
    } else {
        d3d_m
    };
    Ok(13.54 + 39.08 * d.log10() + 20.0 * (frequency_hz / 1e9).log10() - 0.6 * (ut_height_m - 1.5))
}

/// Zero-mean log-normal shadowing sample in dB; `sigma_db = 0` yields 0.
pub fn draw_shadowing_db<R: Rng + ?Sized>(sigma_db: f64, rng: &mut R) -> Result<f64> {
    ensure_finite("shadowing sigma", sigma_db)?;
    if sigma_db < 0.0 {
        return Err(Error::invalid("shadowing sigma", "must be >= 0"));
    }
    if sigma_db == 0.0 {
        return Ok(0.0);
    }
    let n = Normal::new(0.0, sigma_db).map_err(|e| Error::invalid("shadowing sigma", e.to_string()))?;
    Ok(n.sample(rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleGain {
    pub loss_db: f64,
    pub frequency: f64,
    pub distance: f64,
}

impl LargeScaleGain {
    pub fn new(loss_db: f64, frequency: f64, distance: f64) -> Result<Self> {
        ensure_finite("loss", loss_db)?;
        ensure_positive("frequency", frequency)?;
        ensure_positive("distance", distance)?;
        Ok(LargeScaleGain {
            loss_db,
            frequency,
            distance,
        })
    }

    pub fn free_space(distance: f64, frequency: f64) -> Result<Self> {
        LargeScaleGain::new(fspl_db(distance, frequency)?, frequency, distance)
    }

    pub fn sub_thz(distance: f64, frequency: f64, absorption_db_per_km: f64) -> Result<Self> {
        LargeScaleGain::new(
            subthz_pathloss_db(distance, frequency, absorption_db_per_km)?,
            frequency,
            distance,
        )
    }

    pub fn urban_macro_nlos(distance: f64, frequency: f64, ut_height: f64) -> Result<Self> {
        LargeScaleGain::new(uma_nlos_db(distance, frequency, ut_height)?, frequency, distance)
    }

    /// Adds a shadowing realisation (positive values attenuate).
    pub fn shadowed(self, shadowing_db: f64) -> Result<Self> {
        LargeScaleGain::new(self.loss_db + shadowing_db, self.frequency, self.distance)
    }

    /// Linear power gain `10^(-loss/10)`.
    pub fn power_gain(&self) -> f64 {
        10f64.powf(-self.loss_db / 10.0)
    }

    /// Linear amplitude gain `10^(-loss/20)`.
    pub fn amplitude(&self) -> f64 {
        10f64.powf(-self.loss_db / 20.0)
    }
}

/// Small-scale fading law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FadingSpec {
    /// Deterministic steering outer product.
    PureLos,
    /// LoS steering plus diffuse Rayleigh part, Rician factor in dB.
    Rician { k_db: f64 },
    /// i.i.d. CN(0, 1) entries.
    Rayleigh,
    /// Sum of `paths` planar waves with CN(0, 1) gains. Path angles are drawn
    /// uniformly within the given spreads (radians) around the geometric
    /// direction; the first path is the geometric one.
    Multipath {
        paths: usize,
        azimuth_spread: f64,
        elevation_spread: f64,
    },
}

impl FadingSpec {
    /// Five paths, +-15 deg azimuth, +-5 deg elevation.
    pub fn default_multipath() -> Self {
        FadingSpec::Multipath {
            paths: 5,
            azimuth_spread: 15f64.to_radians(),
            elevation_spread: 5f64.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingSpec::PureLos | FadingSpec::Rayleigh => Ok(()),
            FadingSpec::Rician { k_db } => ensure_finite("Rician K factor", k_db).map(drop),
            FadingSpec::Multipath {
                paths,
                azimuth_spread,
                elevation_spread,
            } => {
                if paths == 0 {
                    return Err(Error::invalid("multipath", "need at least one path"));
                }
                for (what, v) in [
                    ("azimuth spread", azimuth_spread),
                    ("elevation spread", elevation_spread),
                ] {
                    ensure_finite(what, v)?;
                    if v < 0.0 {
                        return Err(Error::invalid(what, "must be >= 0"));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Geometric directions of a link: departure as seen from the transmitter,
/// arrival (direction of the transmitter) as seen from the receiver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkGeometry {
    pub departure: AzEl,
    pub arrival: AzEl,
}

impl LinkGeometry {
    /// Distance and directions of the link from `tx` to `rx`.
    pub fn between(tx: &Position3D, rx: &Position3D) -> Result<(f64, LinkGeometry)> {
        let (d, departure) = distance_and_angles(tx, rx)?;
        Ok((
            d,
            LinkGeometry {
                departure,
                arrival: departure.reversed(),
            },
        ))
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn los_matrix(rx: &UpaGeometry, tx: &UpaGeometry, arrival: &AzEl, departure: &AzEl) -> CMatrix {
    upa_steering(rx, arrival) * upa_steering(tx, departure).adjoint()
}

fn perturb<R: Rng + ?Sized>(dir: &AzEl, az_spread: f64, el_spread: f64, rng: &mut R) -> AzEl {
    let az = dir.azimuth + az_spread * (2.0 * rng.random::<f64>() - 1.0);
    let el = (dir.elevation + el_spread * (2.0 * rng.random::<f64>() - 1.0)).clamp(-PI / 2.0, PI / 2.0);
    AzEl::new(az, el).expect("perturbed angles stay in range")
}

/// Draws an `rx.elements() x tx.elements()` small-scale matrix.
pub fn draw_small_scale<R: Rng + ?Sized>(
    spec: &FadingSpec,
    rx: &UpaGeometry,
    tx: &UpaGeometry,
    geometry: &LinkGeometry,
    rng: &mut R,
) -> Result<CMatrix> {
    spec.validate()?;
    let (nr, nt) = (rx.elements(), tx.elements());
    let h = match *spec {
        FadingSpec::PureLos => los_matrix(rx, tx, &geometry.arrival, &geometry.departure),
        FadingSpec::Rayleigh => CMatrix::from_fn(nr, nt, |_, _| complex_gaussian(rng)),
        FadingSpec::Rician { k_db } => {
            let k = 10f64.powf(k_db / 10.0);
            let los = los_matrix(rx, tx, &geometry.arrival, &geometry.departure);
            let diffuse = CMatrix::from_fn(nr, nt, |_, _| complex_gaussian(rng));
            los.scale((k / (k + 1.0)).sqrt()) + diffuse.scale((1.0 / (k + 1.0)).sqrt())
        }
        FadingSpec::Multipath {
            paths,
            azimuth_spread,
            elevation_spread,
        } => {
            let mut h = CMatrix::zeros(nr, nt);
            for l in 0..paths {
                let (dep, arr) = if l == 0 {
                    (geometry.departure, geometry.arrival)
                } else {
                    (
                        perturb(&geometry.departure, azimuth_spread, elevation_spread, rng),
                        perturb(&geometry.arrival, azimuth_spread, elevation_spread, rng),
                    )
                };
                let gain = complex_gaussian(rng);
                h += los_matrix(rx, tx, &arr, &dep) * gain;
            }
            h.unscale((paths as f64).sqrt())
        }
    };
    Ok(h)
}

/// MIMO channel `rx x tx` with its large-scale metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    pub entries: CMatrix,
    pub large_scale: LargeScaleGain,
}

impl ChannelMatrix {
    pub fn rx_elements(&self) -> usize {
        self.entries.nrows()
    }

    pub fn tx_elements(&self) -> usize {
        self.entries.ncols()
    }
}

/// Scales `small` by the large-scale amplitude, checking it matches the arrays.
pub fn assemble_channel(
    large: LargeScaleGain,
    small: CMatrix,
    rx: &UpaGeometry,
    tx: &UpaGeometry,
) -> Result<ChannelMatrix> {
    if small.nrows() != rx.elements() || small.ncols() != tx.elements() {
        return Err(Error::DimensionMismatch {
            what: "channel assembly",
            expected: format!("{}x{}", rx.elements(), tx.elements()),
            found: format!("{}x{}", small.nrows(), small.ncols()),
        });
    }
    if small.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::invalid("small-scale matrix", "entries must be finite"));
    }
    Ok(ChannelMatrix {
        entries: small * C64::new(large.amplitude(), 0.0),
        large_scale: large,
    })
}
