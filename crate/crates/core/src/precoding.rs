//! Digital precoding: zero forcing and weighted-MMSE sum-rate maximisation
//! over an interfering multi-transmitter network.
//!
//! Conventions: every stream has one single-output receiver (a single-antenna
//! user, or an analog combiner whose output is treated as one port). The
//! receiver of stream `s` observes `sum_t h_{s,t}^H x_t + n_s`, where `x_t` is
//! the sum of the precoded streams of transmitter `t`.

use log::warn;
use nalgebra::linalg::SymmetricEigen;

use crate::array::{CMatrix, CVector, C64};
use crate::error::{ensure_positive, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transmitter {
    pub antennas: usize,
    /// Total transmit power budget in watts.
    pub power: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stream {
    /// Index of the serving transmitter.
    pub tx: usize,
    /// Receiver noise power in watts.
    pub noise: f64,
    /// Rate weight in the sum-rate objective.
    pub weight: f64,
    /// `channels[t]` is the receiver's channel from transmitter `t`; `None`
    /// means the link is absent (or ignored by a design).
    pub channels: Vec<Option<CVector>>,
}

impl Stream {
    pub fn new(tx: usize, noise: f64, channels: Vec<Option<CVector>>) -> Self {
        Stream {
            tx,
            noise,
            weight: 1.0,
            channels,
        }
    }

    fn channel(&self, t: usize) -> Option<&CVector> {
        self.channels.get(t).and_then(Option::as_ref)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub transmitters: Vec<Transmitter>,
    pub streams: Vec<Stream>,
}

impl Network {
    pub fn validate(&self) -> Result<()> {
        if self.streams.is_empty() {
            return Err(Error::invalid("network", "no streams"));
        }
        for tx in &self.transmitters {
            ensure_positive("transmit power", tx.power)?;
            if tx.antennas == 0 {
                return Err(Error::invalid("transmitter", "needs at least one antenna"));
            }
        }
        for (s, st) in self.streams.iter().enumerate() {
            if st.tx >= self.transmitters.len() {
                return Err(Error::invalid(
                    "stream",
                    format!("stream {s} references missing transmitter {}", st.tx),
                ));
            }
            ensure_positive("noise power", st.noise)?;
            if !(st.weight.is_finite() && st.weight >= 0.0) {
                return Err(Error::invalid("stream weight", "must be finite and >= 0"));
            }
            if st.channels.len() != self.transmitters.len() {
                return Err(Error::DimensionMismatch {
                    what: "stream channel list",
                    expected: self.transmitters.len().to_string(),
                    found: st.channels.len().to_string(),
                });
            }
            if st.channel(st.tx).is_none() {
                return Err(Error::invalid(
                    "stream",
                    format!("stream {s} has no channel from its own transmitter"),
                ));
            }
            for (t, h) in st.channels.iter().enumerate() {
                if let Some(h) = h {
                    if h.len() != self.transmitters[t].antennas {
                        return Err(Error::DimensionMismatch {
                            what: "stream channel",
                            expected: self.transmitters[t].antennas.to_string(),
                            found: h.len().to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_precoders(&self, precoders: &[CVector]) -> Result<()> {
        if precoders.len() != self.streams.len() {
            return Err(Error::DimensionMismatch {
                what: "precoder list",
                expected: self.streams.len().to_string(),
                found: precoders.len().to_string(),
            });
        }
        for (st, v) in self.streams.iter().zip(precoders) {
            if v.len() != self.transmitters[st.tx].antennas {
                return Err(Error::DimensionMismatch {
                    what: "precoder",
                    expected: self.transmitters[st.tx].antennas.to_string(),
                    found: v.len().to_string(),
                });
            }
        }
        Ok(())
    }

    /// Received useful power and total received power (incl. noise) per stream.
    fn powers(&self, precoders: &[CVector]) -> Vec<(C64, f64, f64)> {
        self.streams
            .iter()
            .enumerate()
            .map(|(s, st)| {
                let mut total = st.noise;
                let mut desired = C64::new(0.0, 0.0);
                for (q, other) in self.streams.iter().enumerate() {
                    if let Some(h) = st.channel(other.tx) {
                        let y = h.dotc(&precoders[q]);
                        total += y.norm_sqr();
                        if q == s {
                            desired = y;
                        }
                    }
                }
                (desired, desired.norm_sqr(), total)
            })
            .collect()
    }

    pub fn sinrs(&self, precoders: &[CVector]) -> Vec<f64> {
        self.powers(precoders)
            .into_iter()
            .map(|(_, sig, total)| sig / (total - sig).max(f64::MIN_POSITIVE))
            .collect()
    }

    /// Per-stream spectral efficiency `log2(1 + SINR)`.
    pub fn rates(&self, precoders: &[CVector]) -> Vec<f64> {
        self.sinrs(precoders).into_iter().map(|g| (1.0 + g).log2()).collect()
    }

    pub fn weighted_sum_rate(&self, precoders: &[CVector]) -> f64 {
        self.rates(precoders)
            .iter()
            .zip(&self.streams)
            .map(|(r, st)| st.weight * r)
            .sum()
    }

    /// Copy in which every receiver only hears its own transmitter, the view a
    /// transmitter has when it designs without coordination.
    pub fn without_cross_links(&self) -> Network {
        let streams = self
            .streams
            .iter()
            .map(|st| {
                let channels = st
                    .channels
                    .iter()
                    .enumerate()
                    .map(|(t, h)| if t == st.tx { h.clone() } else { None })
                    .collect();
                Stream { channels, ..st.clone() }
            })
            .collect();
        Network {
            transmitters: self.transmitters.clone(),
            streams,
        }
    }

    /// Maximum-ratio precoders with each transmitter's power split evenly.
    pub fn mrt_init(&self) -> Vec<CVector> {
        let counts = self.streams_per_tx();
        self.streams
            .iter()
            .map(|st| {
                let h = st.channel(st.tx).expect("validated");
                let p = self.transmitters[st.tx].power / counts[st.tx] as f64;
                let n = h.norm();
                if n > 0.0 {
                    h.scale(p.sqrt() / n)
                } else {
                    CVector::from_element(h.len(), C64::new((p / h.len() as f64).sqrt(), 0.0))
                }
            })
            .collect()
    }

    fn streams_per_tx(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.transmitters.len()];
        for st in &self.streams {
            counts[st.tx] += 1;
        }
        counts
    }

    /// Transmit power used by each transmitter.
    pub fn tx_powers(&self, precoders: &[CVector]) -> Vec<f64> {
        let mut p = vec![0.0; self.transmitters.len()];
        for (st, v) in self.streams.iter().zip(precoders) {
            p[st.tx] += v.norm_squared();
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WmmseOptions {
    pub max_iterations: usize,
    /// Stop once the sum rate changes by less than this many bit/s/Hz.
    pub tolerance: f64,
}

impl Default for WmmseOptions {
    fn default() -> Self {
        WmmseOptions {
            max_iterations: 100,
            tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WmmseOutcome {
    pub precoders: Vec<CVector>,
    /// Weighted sum rate of the initial point followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl WmmseOutcome {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial point")
    }

    pub fn iterations(&self) -> usize {
        self.objective_trace.len() - 1
    }
}

/// Weighted-MMSE block coordinate descent. The weighted sum rate of the
/// network is non-decreasing across iterations.
pub fn wmmse(network: &Network, init: Vec<CVector>, options: WmmseOptions) -> Result<WmmseOutcome> {
    network.validate()?;
    network.check_precoders(&init)?;
    let mut precoders = init;
    let mut trace = vec![network.weighted_sum_rate(&precoders)];
    let mut converged = false;

    for _ in 0..options.max_iterations {
        // receive filters and MSE weights
        let stats: Vec<(C64, f64)> = network
            .powers(&precoders)
            .into_iter()
            .map(|(desired, sig, total)| {
                let u = desired / total;
                let mse = ((total - sig) / total).max(f64::MIN_POSITIVE);
                (u, 1.0 / mse)
            })
            .collect();

        for (t, tx) in network.transmitters.iter().enumerate() {
            let own: Vec<usize> = (0..network.streams.len())
                .filter(|&s| network.streams[s].tx == t)
                .collect();
            if own.is_empty() {
                continue;
            }
            let updated = transmitter_update(network, t, tx.power, &own, &stats);
            for (s, v) in own.into_iter().zip(updated) {
                precoders[s] = v;
            }
        }

        let objective = network.weighted_sum_rate(&precoders);
        let previous = *trace.last().expect("non-empty");
        trace.push(objective);
        if (objective - previous).abs() < options.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!(
            "WMMSE stopped after {} iterations without converging",
            options.max_iterations
        );
    }
    Ok(WmmseOutcome {
        precoders,
        objective_trace: trace,
        converged,
    })
}

/// Orthonormal basis of the span of `vectors` (modified Gram-Schmidt).
fn orthonormal_basis(vectors: &[&CVector], dim: usize) -> CMatrix {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<CVector> = Vec::new();
    for v in vectors {
        let mut r = (*v).clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&r);
                r -= q * c;
            }
        }
        let n = r.norm();
        if n > 1e-10 * scale && basis.len() < dim {
            basis.push(r.unscale(n));
        }
    }
    if basis.is_empty() {
        return CMatrix::zeros(dim, 0);
    }
    CMatrix::from_columns(&basis)
}

// Minimises the WMMSE cost over the precoders of one transmitter subject to
// its power budget. The minimiser lies in the span of the channels seen from
// this transmitter, so the regularised inverse is evaluated in that subspace.
fn transmitter_update(network: &Network, t: usize, budget: f64, own: &[usize], stats: &[(C64, f64)]) -> Vec<CVector> {
    let dim = network.transmitters[t].antennas;
    let links: Vec<(usize, &CVector)> = network
        .streams
        .iter()
        .enumerate()
        .filter_map(|(q, st)| st.channel(t).map(|h| (q, h)))
        .collect();
    let basis = orthonormal_basis(&links.iter().map(|(_, h)| *h).collect::<Vec<_>>(), dim);
    let r = basis.ncols();
    if r == 0 {
        return own.iter().map(|_| CVector::zeros(dim)).collect();
    }

    let mut a = CMatrix::zeros(r, r);
    for &(q, h) in &links {
        let (u, w) = stats[q];
        let c = network.streams[q].weight * w * u.norm_sqr();
        if c > 0.0 {
            let hr = basis.ad_mul(h);
            a += (&hr * hr.adjoint()).scale(c);
        }
    }
    // symmetrise against rounding before the Hermitian eigensolver
    let a = (&a + a.adjoint()).scale(0.5);
    let rhs: Vec<CVector> = own
        .iter()
        .map(|&s| {
            let st = &network.streams[s];
            let (u, w) = stats[s];
            let h = st.channel(t).expect("validated");
            basis.ad_mul(h) * (u * st.weight * w)
        })
        .collect();

    let eig = SymmetricEigen::new(a);
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let lmax = lambda.iter().cloned().fold(0.0, f64::max);
    // coefficients of each right-hand side in the eigenbasis
    let coeffs: Vec<CVector> = rhs.iter().map(|b| eig.eigenvectors.ad_mul(b)).collect();
    let power = |mu: f64| -> f64 {
        coeffs
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&lambda)
                    .map(|(ci, &l)| ci.norm_sqr() / (l + mu).powi(2))
                    .sum::<f64>()
            })
            .sum()
    };

    let rhs_energy: f64 = coeffs.iter().map(|c| c.norm_squared()).sum();
    if rhs_energy == 0.0 {
        return own.iter().map(|_| CVector::zeros(dim)).collect();
    }
    let invertible = lambda.iter().all(|&l| l > 1e-12 * lmax) && lmax > 0.0;
    let mu = if invertible && power(0.0) <= budget {
        0.0
    } else {
        // power(mu) <= rhs_energy / mu^2, so this bracket is always feasible
        let mut hi = (rhs_energy / budget).sqrt();
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if power(mid) > budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    };

    coeffs
        .iter()
        .map(|c| {
            let scaled = CVector::from_iterator(c.len(), c.iter().zip(&lambda).map(|(ci, &l)| ci / (l + mu)));
            &basis * (&eig.eigenvectors * scaled)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DigitalMode {
    ZeroForcing,
    Wmmse,
}

#[derive(Clone, Debug)]
pub struct DigitalPrecoder {
    /// `antennas x streams`, one column per served stream.
    pub matrix: CMatrix,
    pub converged: bool,
}

/// Zero-forcing precoder `H^H (H H^H)^-1` scaled to `budget`, where the rows of
/// `H` are `h_k^H`.
pub fn zero_forcing(channels: &[CVector], budget: f64) -> Result<CMatrix> {
    ensure_positive("power budget", budget)?;
    let h = stacked(channels)?;
    let gram = &h * h.adjoint();
    let eig = SymmetricEigen::new(gram.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmax <= 0.0 || lmin <= 1e-12 * lmax {
        return Err(Error::Singular(format!(
            "stacked channel of {} streams is rank deficient",
            channels.len()
        )));
    }
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Singular("channel Gram matrix not invertible".into()))?;
    let f = h.adjoint() * inv;
    let norm = f.norm();
    Ok(f.scale(budget.sqrt() / norm))
}

fn stacked(channels: &[CVector]) -> Result<CMatrix> {
    let first = channels
        .first()
        .ok_or_else(|| Error::invalid("channel list", "need at least one stream"))?;
    if channels.iter().any(|h| h.len() != first.len()) {
        return Err(Error::DimensionMismatch {
            what: "stacked channels",
            expected: first.len().to_string(),
            found: "ragged".into(),
        });
    }
    Ok(CMatrix::from_fn(channels.len(), first.len(), |k, n| {
        channels[k][n].conj()
    }))
}

/// Single-transmitter multi-user precoder for the given per-stream channels.
/// WMMSE starts from zero forcing when the channels allow it, otherwise from
/// maximum-ratio transmission.
pub fn digital_precoder(channels: &[CVector], mode: DigitalMode, noise: f64, budget: f64) -> Result<DigitalPrecoder> {
    ensure_positive("noise power", noise)?;
    ensure_positive("power budget", budget)?;
    stacked(channels)?;
    match mode {
        DigitalMode::ZeroForcing => Ok(DigitalPrecoder {
            matrix: zero_forcing(channels, budget)?,
            converged: true,
        }),
        DigitalMode::Wmmse => {
            let network = broadcast_network(channels, noise, budget);
            let init = match zero_forcing(channels, budget) {
                Ok(f) => (0..channels.len()).map(|k| f.column(k).into_owned()).collect(),
                Err(_) => network.mrt_init(),
            };
            let out = wmmse(&network, init, WmmseOptions::default())?;
            Ok(DigitalPrecoder {
                matrix: CMatrix::from_columns(&out.precoders),
                converged: out.converged,
            })
        }
    }
}

/// One transmitter serving one stream per channel.
pub fn broadcast_network(channels: &[CVector], noise: f64, budget: f64) -> Network {
    let antennas = channels.first().map_or(0, |h| h.len());
    Network {
        transmitters: vec![Transmitter {
            antennas,
            power: budget,
        }],
        streams: channels
            .iter()
            .map(|h| Stream::new(0, noise, vec![Some(h.clone())]))
            .collect(),
    }
}
