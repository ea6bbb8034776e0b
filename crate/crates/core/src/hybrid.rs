//! Fully-connected hybrid precoding: a unit-modulus analog network feeding a
//! small number of RF chains, followed by a digital baseband stage.

use nalgebra::linalg::SymmetricEigen;

use crate::array::{CMatrix, C64};
use crate::error::{Error, Result};

pub const UNIT_MODULUS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct HybridPrecoder {
    /// `elements x rf_chains`, every entry unit modulus.
    pub analog: CMatrix,
    /// `rf_chains x streams`.
    pub digital: CMatrix,
}

impl HybridPrecoder {
    pub fn effective(&self) -> CMatrix {
        &self.analog * &self.digital
    }

    pub fn is_unit_modulus(&self) -> bool {
        is_unit_modulus(&self.analog)
    }
}

pub fn is_unit_modulus(m: &CMatrix) -> bool {
    m.iter().all(|x| (x.norm() - 1.0).abs() <= UNIT_MODULUS_TOL)
}

#[derive(Clone, Debug)]
pub struct HybridFactorization {
    pub precoder: HybridPrecoder,
    /// `|analog * digital - target|_F` after every digital solve, before the
    /// final power rescaling.
    pub residual_trace: Vec<f64>,
    pub converged: bool,
}

impl HybridFactorization {
    pub fn residual(&self) -> f64 {
        *self.residual_trace.last().expect("at least one iterate")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions {
            max_iterations: 200,
            tolerance: 1e-6,
        }
    }
}

/// Default analog start: phases of the target columns, then DFT columns for
/// any extra RF chains.
pub fn default_analog_init(target: &CMatrix, rf_chains: usize) -> CMatrix {
    let n = target.nrows();
    CMatrix::from_fn(n, rf_chains, |i, j| {
        if j < target.ncols() {
            unit_phase(target[(i, j)], C64::new(1.0, 0.0))
        } else {
            dft_entry(n, i, j)
        }
    })
}

/// `exp(-2 pi j i k / n)`.
pub fn dft_entry(n: usize, i: usize, k: usize) -> C64 {
    C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (i * k) as f64 / n as f64)
}

fn unit_phase(x: C64, fallback: C64) -> C64 {
    let n = x.norm();
    if n > 0.0 && n.is_finite() {
        x / n
    } else {
        fallback
    }
}

/// Least-squares digital stage for a fixed analog stage.
fn digital_for(analog: &CMatrix, target: &CMatrix) -> Result<CMatrix> {
    let gram = analog.ad_mul(analog);
    let rhs = analog.ad_mul(target);
    if let Some(chol) = gram.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    let pinv = analog
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Singular(e.to_string()))?;
    Ok(pinv * target)
}

/// Alternating minimisation of `|A D - F|_F` over unit-modulus `A` and
/// unconstrained `D`. The digital step is the exact least-squares solve. The
/// analog step takes the phases of `F D^H + A (lambda I - D D^H)` with
/// `lambda >= lambda_max(D D^H)`, a majorisation of the cost that reduces to
/// the plain phase of `F D^H` whenever `D D^H` is a scaled identity and never
/// increases the residual. The result is rescaled so `|A D|_F = |F|_F`.
pub fn hybrid_factorize(
    target: &CMatrix,
    rf_chains: usize,
    init: Option<&CMatrix>,
    options: HybridOptions,
) -> Result<HybridFactorization> {
    let (n, streams) = target.shape();
    if n == 0 || streams == 0 {
        return Err(Error::invalid("hybrid target", "empty matrix"));
    }
    if rf_chains < streams {
        return Err(Error::invalid(
            "RF chain count",
            format!("{rf_chains} RF chains cannot carry {streams} streams"),
        ));
    }
    if rf_chains > n {
        return Err(Error::invalid(
            "RF chain count",
            format!("{rf_chains} RF chains exceed {n} antenna elements"),
        ));
    }
    if target.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::invalid("hybrid target", "entries must be finite"));
    }
    let mut analog = match init {
        Some(a) => {
            if a.shape() != (n, rf_chains) {
                return Err(Error::DimensionMismatch {
                    what: "analog initialisation",
                    expected: format!("{n}x{rf_chains}"),
                    found: format!("{}x{}", a.nrows(), a.ncols()),
                });
            }
            if !is_unit_modulus(a) {
                return Err(Error::invalid("analog initialisation", "entries must be unit modulus"));
            }
            a.clone()
        }
        None => default_analog_init(target, rf_chains),
    };

    let target_norm = target.norm();
    let tol = options.tolerance * target_norm.max(1.0);
    let mut digital = digital_for(&analog, target)?;
    let mut trace = vec![(&analog * &digital - target).norm()];
    let mut converged = false;

    for _ in 0..options.max_iterations {
        let dd = &digital * digital.adjoint();
        let lambda = SymmetricEigen::new((&dd + dd.adjoint()).scale(0.5))
            .eigenvalues
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let shift = CMatrix::identity(rf_chains, rf_chains).scale(lambda) - dd;
        let driver = target * digital.adjoint() + &analog * shift;
        let next_analog = CMatrix::from_fn(n, rf_chains, |i, j| unit_phase(driver[(i, j)], analog[(i, j)]));
        let next_digital = digital_for(&next_analog, target)?;
        let residual = (&next_analog * &next_digital - target).norm();
        let previous = *trace.last().expect("non-empty");
        if residual > previous {
            // rounding only; keep the better iterate
            converged = true;
            break;
        }
        analog = next_analog;
        digital = next_digital;
        trace.push(residual);
        if previous - residual < tol {
            converged = true;
            break;
        }
    }
    if trace.last().is_some_and(|&r| r <= tol) {
        converged = true;
    }

    let effective_norm = (&analog * &digital).norm();
    if effective_norm > 0.0 {
        digital = digital.scale(target_norm / effective_norm);
    }
    Ok(HybridFactorization {
        precoder: HybridPrecoder { analog, digital },
        residual_trace: trace,
        converged,
    })
}
