//! Uniform planar arrays and the per-node receive/transmit primitives built on
//! them: steering vectors, match filtering and analog (phase-only) steering.
//!
//! Every array lies in the local horizontal plane, so the broadside is the
//! vertical axis and the polar angle from broadside satisfies
//! `sin(theta) = cos(elevation)`. Element `(m, n)` sits at `m` spacings along x
//! and `n` spacings along y and is stored at flat index `m * cols + n`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::AzEl;

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpaGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl UpaGeometry {
    pub fn new(rows: usize, cols: usize, spacing: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("array geometry", "rows and cols must be >= 1"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid(
                "array spacing",
                format!("must be positive, got {spacing}"),
            ));
        }
        Ok(UpaGeometry { rows, cols, spacing })
    }

    /// Most-square `rows x cols` factorization of `elements` at half-wavelength
    /// spacing (64 -> 8x8, 100 -> 10x10, 128 -> 8x16).
    pub fn square(elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::invalid("array size", "need at least one element"));
        }
        let mut rows = (elements as f64).sqrt().floor() as usize;
        while rows > 1 && !elements.is_multiple_of(rows) {
            rows -= 1;
        }
        UpaGeometry::new(rows.max(1), elements / rows.max(1), 0.5)
    }

    /// Single isotropic element.
    pub fn single() -> Self {
        UpaGeometry {
            rows: 1,
            cols: 1,
            spacing: 0.5,
        }
    }

    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }
}

/// Unit-modulus response of `geom` toward `dir`.
pub fn upa_steering(geom: &UpaGeometry, dir: &AzEl) -> CVector {
    let (ux, uy) = dir.direction_cosines();
    let k = 2.0 * PI * geom.spacing;
    CVector::from_fn(geom.elements(), |idx, _| {
        let m = (idx / geom.cols) as f64;
        let n = (idx % geom.cols) as f64;
        C64::from_polar(1.0, k * (m * ux + n * uy))
    })
}

/// Normalised maximum-ratio combiner `h / |h|`.
pub fn match_filter(h: &CVector) -> Result<CVector> {
    let norm = h.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::invalid(
            "channel vector",
            "match filter needs a nonzero finite channel",
        ));
    }
    Ok(h.unscale(norm))
}

/// Phase-only weights, one per element.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogCombiner {
    weights: CVector,
}

impl AnalogCombiner {
    pub fn from_phases(phases: impl IntoIterator<Item = f64>) -> Self {
        let w: Vec<C64> = phases.into_iter().map(|p| C64::from_polar(1.0, p)).collect();
        AnalogCombiner {
            weights: CVector::from_vec(w),
        }
    }

    pub fn weights(&self) -> &CVector {
        &self.weights
    }

    pub fn elements(&self) -> usize {
        self.weights.len()
    }

    /// Combined scalar `w^H y`.
    pub fn combine(&self, y: &CVector) -> C64 {
        self.weights.dotc(y)
    }

    /// Power gain `|w^H a|^2 / N` toward a response `a`; equals `N` when `a`
    /// is the steered direction.
    pub fn gain(&self, response: &CVector) -> f64 {
        self.combine(response).norm_sqr() / self.elements() as f64
    }

    /// Unit-norm version of the weights, convenient for SINR bookkeeping.
    pub fn normalized(&self) -> CVector {
        self.weights.unscale((self.elements() as f64).sqrt())
    }
}

/// Phase-only weights matched to the steering response toward `dir`.
pub fn analog_steer(geom: &UpaGeometry, dir: &AzEl) -> AnalogCombiner {
    AnalogCombiner {
        weights: upa_steering(geom, dir),
    }
}
