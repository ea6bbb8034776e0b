//! Two-cell mmWave downlink in which a full-duplex decode-and-forward HAPS
//! relays the cell-edge users.
//!
//! User order everywhere is `[near 1, near 2, edge 1, edge 2]`; user `u` of
//! cell `c` is `near c` for `u = c` and `edge c` for `u = 2 + c`.

use nalgebra::linalg::SymmetricEigen;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::{analog_steer, CMatrix, CVector, UpaGeometry, C64};
use crate::channel::{assemble_channel, draw_shadowing_db, draw_small_scale, FadingSpec, LargeScaleGain, LinkGeometry};
use crate::error::{field_count, field_finite, field_non_negative, field_positive, Error, Result};
use crate::hybrid::{hybrid_factorize, HybridOptions};
use crate::precoding::{wmmse, Network, Stream, Transmitter, WmmseOptions};
use crate::stats::{run_trials, TrialId, TrialPlan};
use crate::units::{
    dbm_to_watt, distance_and_angles, noise_power_watt, sample_positions, Position3D, PowerDbm, Region,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cs1Config {
    pub cell_radius_m: f64,
    pub bs_elements: usize,
    pub haps_elements: usize,
    pub rf_chains: usize,
    pub frequency_hz: f64,
    pub users_per_cell: usize,
    pub haps_altitude_m: f64,
    pub bs_height_m: f64,
    pub ut_height_m: f64,
    pub bs_power_dbm: f64,
    pub haps_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    /// Near users lie within this fraction of the cell radius.
    pub near_radius_fraction: f64,
    /// Edge users lie between this fraction of the radius and the radius.
    pub edge_inner_fraction: f64,
    pub multipath_paths: usize,
    /// Log-normal shadowing on the BS to user links.
    pub bs_user_shadowing_db: f64,
    /// Residual self-interference gain of the HAPS loop channel per element
    /// pair; absent means perfect cancellation.
    pub self_interference_db: Option<f64>,
    pub wmmse_max_iterations: usize,
    pub wmmse_tolerance: f64,
}

impl Default for Cs1Config {
    fn default() -> Self {
        Cs1Config {
            cell_radius_m: 300.0,
            bs_elements: 64,
            haps_elements: 100,
            rf_chains: 2,
            frequency_hz: 28e9,
            users_per_cell: 2,
            haps_altitude_m: 20_000.0,
            bs_height_m: 25.0,
            ut_height_m: 1.5,
            bs_power_dbm: 40.0,
            haps_power_dbm: 43.0,
            noise_psd_dbm_hz: -174.0,
            bandwidth_hz: 100e6,
            near_radius_fraction: 0.3,
            edge_inner_fraction: 0.9,
            multipath_paths: 5,
            bs_user_shadowing_db: 0.0,
            self_interference_db: None,
            wmmse_max_iterations: 100,
            wmmse_tolerance: 1e-4,
        }
    }
}

impl Cs1Config {
    pub fn validate(&self) -> Result<()> {
        for (path, v) in [
            ("bs_elements", self.bs_elements),
            ("haps_elements", self.haps_elements),
            ("rf_chains", self.rf_chains),
            ("multipath_paths", self.multipath_paths),
            ("wmmse_max_iterations", self.wmmse_max_iterations),
        ] {
            field_count(path, v)?;
        }
        if self.users_per_cell != 2 {
            return Err(Error::config(
                "users_per_cell",
                "only the near/edge pair (2) is modelled",
            ));
        }
        if self.rf_chains < 2 {
            return Err(Error::config(
                "rf_chains",
                "every node carries two streams and needs at least 2",
            ));
        }
        if self.rf_chains > self.bs_elements.min(self.haps_elements) {
            return Err(Error::config(
                "rf_chains",
                "must not exceed the element count of any array",
            ));
        }
        for (path, v) in [
            ("cell_radius_m", self.cell_radius_m),
            ("frequency_hz", self.frequency_hz),
            ("haps_altitude_m", self.haps_altitude_m),
            ("bs_height_m", self.bs_height_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("near_radius_fraction", self.near_radius_fraction),
            ("edge_inner_fraction", self.edge_inner_fraction),
            ("wmmse_tolerance", self.wmmse_tolerance),
        ] {
            field_positive(path, v)?;
        }
        for (path, v) in [
            ("bs_power_dbm", self.bs_power_dbm),
            ("haps_power_dbm", self.haps_power_dbm),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
        ] {
            field_finite(path, v)?;
        }
        field_non_negative("ut_height_m", self.ut_height_m)?;
        field_non_negative("bs_user_shadowing_db", self.bs_user_shadowing_db)?;
        if let Some(si) = self.self_interference_db {
            field_finite("self_interference_db", si)?;
        }
        if self.near_radius_fraction >= 1.0 {
            return Err(Error::config("near_radius_fraction", "must be below 1"));
        }
        if self.edge_inner_fraction >= 1.0 {
            return Err(Error::config("edge_inner_fraction", "must be below 1"));
        }
        if self.haps_altitude_m <= self.bs_height_m {
            return Err(Error::config("haps_altitude_m", "must exceed bs_height_m"));
        }
        Ok(())
    }

    fn bs_power(&self) -> f64 {
        dbm_to_watt(PowerDbm::new(self.bs_power_dbm).expect("validated"))
    }

    fn haps_power(&self) -> f64 {
        dbm_to_watt(PowerDbm::new(self.haps_power_dbm).expect("validated"))
    }

    fn noise(&self) -> Result<f64> {
        noise_power_watt(self.noise_psd_dbm_hz, self.bandwidth_hz)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    JointHaps,
    NoHaps,
    Selfish,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::JointHaps, SchemeKind::NoHaps, SchemeKind::Selfish];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::JointHaps => "joint_haps",
            SchemeKind::NoHaps => "no_haps",
            SchemeKind::Selfish => "selfish",
        }
    }

    fn uses_haps(self) -> bool {
        self != SchemeKind::NoHaps
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cs1TrialResult {
    pub scheme: SchemeKind,
    /// bit/s
    pub sum_rate: f64,
    /// bit/s, `[near 1, near 2, edge 1, edge 2]`
    pub per_user_rates: [f64; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cs1Topology {
    pub bss: [Position3D; 2],
    /// `[near 1, near 2, edge 1, edge 2]`
    pub users: [Position3D; 4],
    pub haps: Position3D,
    /// dB, `[bs][user]`
    pub shadowing_db: [[f64; 4]; 2],
}

/// Draws one two-cell topology: BSs `2R` apart, one near and one edge user
/// per cell, HAPS above the midpoint.
pub fn build_two_cell_topology<R: Rng + ?Sized>(cfg: &Cs1Config, rng: &mut R) -> Result<Cs1Topology> {
    cfg.validate()?;
    let r = cfg.cell_radius_m;
    let bss = [
        Position3D {
            x: -r,
            y: 0.0,
            z: cfg.bs_height_m,
        },
        Position3D {
            x: r,
            y: 0.0,
            z: cfg.bs_height_m,
        },
    ];
    let near_region = Region::Disk {
        radius: cfg.near_radius_fraction * r,
    };
    let edge_region = Region::Annulus {
        inner: cfg.edge_inner_fraction * r,
        outer: r,
    };
    let place = |region: Region, bs: &Position3D, rng: &mut R| -> Result<Position3D> {
        let p = sample_positions(region, 1, rng)?[0];
        Ok(Position3D {
            x: bs.x + p.x,
            y: bs.y + p.y,
            z: cfg.ut_height_m,
        })
    };
    let near1 = place(near_region, &bss[0], rng)?;
    let near2 = place(near_region, &bss[1], rng)?;
    let edge1 = place(edge_region, &bss[0], rng)?;
    let edge2 = place(edge_region, &bss[1], rng)?;
    let mut shadowing_db = [[0.0; 4]; 2];
    for row in shadowing_db.iter_mut() {
        for x in row.iter_mut() {
            *x = draw_shadowing_db(cfg.bs_user_shadowing_db, rng)?;
        }
    }
    Ok(Cs1Topology {
        bss,
        users: [near1, near2, edge1, edge2],
        haps: Position3D {
            x: 0.0,
            y: 0.0,
            z: cfg.haps_altitude_m,
        },
        shadowing_db,
    })
}

/// Channels of one realization, as receive vectors `h` with `y = h^H x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cs1Channels {
    /// `[bs][user]`
    pub bs_user: [[CVector; 4]; 2],
    /// `[user]`
    pub haps_user: [CVector; 4],
    /// `[port][bs]`: BS into the HAPS receive port steered at BS `port`.
    pub bs_haps: [[CVector; 2]; 2],
    /// `[port]`: HAPS transmitter into its own receive port.
    pub self_interference: Option<[CVector; 2]>,
    /// Receiver noise power, watts.
    pub noise: f64,
}

fn receive_vector(h: CMatrix) -> CVector {
    h.row(0).adjoint()
}

/// Draws the channels of one realization. The self-interference loop is
/// drawn last so that it never shifts the other draws.
#[allow(clippy::needless_range_loop)]
pub fn draw_channels<R: Rng + ?Sized>(cfg: &Cs1Config, topo: &Cs1Topology, rng: &mut R) -> Result<Cs1Channels> {
    let bs_array = UpaGeometry::square(cfg.bs_elements)?;
    let haps_array = UpaGeometry::square(cfg.haps_elements)?;
    let single = UpaGeometry::single();
    let f = cfg.frequency_hz;
    let multipath = FadingSpec::Multipath {
        paths: cfg.multipath_paths,
        azimuth_spread: 15f64.to_radians(),
        elevation_spread: 5f64.to_radians(),
    };

    let mut bs_user: [[CVector; 4]; 2] = Default::default();
    for b in 0..2 {
        for u in 0..4 {
            let (d, geometry) = LinkGeometry::between(&topo.bss[b], &topo.users[u])?;
            let large = LargeScaleGain::urban_macro_nlos(d, f, cfg.ut_height_m)?.shadowed(topo.shadowing_db[b][u])?;
            let small = draw_small_scale(&multipath, &single, &bs_array, &geometry, rng)?;
            bs_user[b][u] = receive_vector(assemble_channel(large, small, &single, &bs_array)?.entries);
        }
    }
    let mut haps_user: [CVector; 4] = Default::default();
    for u in 0..4 {
        let (d, geometry) = LinkGeometry::between(&topo.haps, &topo.users[u])?;
        let small = draw_small_scale(&FadingSpec::PureLos, &single, &haps_array, &geometry, rng)?;
        let h = assemble_channel(LargeScaleGain::free_space(d, f)?, small, &single, &haps_array)?;
        haps_user[u] = receive_vector(h.entries);
    }
    let combiners: Vec<CVector> = topo
        .bss
        .iter()
        .map(|bs| {
            let (_, dir) = distance_and_angles(&topo.haps, bs)?;
            Ok(analog_steer(&haps_array, &dir).normalized())
        })
        .collect::<Result<_>>()?;
    let mut bs_haps: [[CVector; 2]; 2] = Default::default();
    for b in 0..2 {
        let (d, geometry) = LinkGeometry::between(&topo.bss[b], &topo.haps)?;
        let small = draw_small_scale(&FadingSpec::PureLos, &haps_array, &bs_array, &geometry, rng)?;
        let h = assemble_channel(LargeScaleGain::free_space(d, f)?, small, &haps_array, &bs_array)?;
        for (port, w) in combiners.iter().enumerate() {
            bs_haps[port][b] = h.entries.adjoint() * w;
        }
    }
    let self_interference = match cfg.self_interference_db {
        None => None,
        Some(db) => {
            let amp = 10f64.powf(db / 20.0) * std::f64::consts::FRAC_1_SQRT_2;
            let n = haps_array.elements();
            let loop_channel = CMatrix::from_fn(n, n, |_, _| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re * amp, im * amp)
            });
            Some([
                loop_channel.adjoint() * &combiners[0],
                loop_channel.adjoint() * &combiners[1],
            ])
        }
    };
    Ok(Cs1Channels {
        bs_user,
        haps_user,
        bs_haps,
        self_interference,
        noise: cfg.noise()?,
    })
}

/// Interfering network of a scheme. With the HAPS the streams are
/// `[near 1, near 2, BS 1 -> HAPS, BS 2 -> HAPS, HAPS -> edge 1, HAPS -> edge 2]`
/// on transmitters `[BS 1, BS 2, HAPS]`; without it they are
/// `[near 1, near 2, edge 1, edge 2]` on `[BS 1, BS 2]`.
pub fn scheme_network(scheme: SchemeKind, channels: &Cs1Channels, cfg: &Cs1Config) -> Network {
    let bs = Transmitter {
        antennas: cfg.bs_elements,
        power: cfg.bs_power(),
    };
    let noise = channels.noise;
    let user = |u: usize, with_haps: bool| {
        let mut ch = vec![
            Some(channels.bs_user[0][u].clone()),
            Some(channels.bs_user[1][u].clone()),
        ];
        if with_haps {
            ch.push(Some(channels.haps_user[u].clone()));
        }
        ch
    };
    if !scheme.uses_haps() {
        return Network {
            transmitters: vec![bs, bs],
            streams: vec![
                Stream::new(0, noise, user(0, false)),
                Stream::new(1, noise, user(1, false)),
                Stream::new(0, noise, user(2, false)),
                Stream::new(1, noise, user(3, false)),
            ],
        };
    }
    let haps = Transmitter {
        antennas: cfg.haps_elements,
        power: cfg.haps_power(),
    };
    let port = |c: usize| {
        vec![
            Some(channels.bs_haps[c][0].clone()),
            Some(channels.bs_haps[c][1].clone()),
            channels.self_interference.as_ref().map(|si| si[c].clone()),
        ]
    };
    Network {
        transmitters: vec![bs, bs, haps],
        streams: vec![
            Stream::new(0, noise, user(0, true)),
            Stream::new(1, noise, user(1, true)),
            Stream::new(0, noise, port(0)),
            Stream::new(1, noise, port(1)),
            Stream::new(2, noise, user(2, true)),
            Stream::new(2, noise, user(3, true)),
        ],
    }
}

/// Precoders of one design, in the stream order of [`scheme_network`].
#[derive(Clone, Debug)]
pub struct Beamformers {
    /// Hybrid (analog times digital) precoders actually transmitted.
    pub precoders: Vec<CVector>,
    /// Fully digital precoders before factorization.
    pub digital: Vec<CVector>,
    pub wmmse_converged: bool,
    pub hybrid_converged: bool,
}

/// Hop-1 and hop-2 stream of every relayed user in a scheme's network.
pub fn relay_pairs(scheme: SchemeKind) -> Vec<(usize, usize)> {
    if scheme.uses_haps() {
        vec![(2, 4), (3, 5)]
    } else {
        Vec::new()
    }
}

/// Sum of per-user spectral efficiencies, where a relayed user counts the
/// smaller of its two hop rates.
pub fn end_to_end_objective(network: &Network, pairs: &[(usize, usize)], precoders: &[CVector]) -> f64 {
    let r = network.rates(precoders);
    let relayed: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let direct: f64 = (0..r.len()).filter(|s| !relayed.contains(s)).map(|s| r[s]).sum();
    direct + pairs.iter().map(|&(a, b)| r[a].min(r[b])).sum::<f64>()
}

const RELAY_WEIGHT_ROUNDS: usize = 6;
const RELAY_WEIGHT_STEP: f64 = 0.5;

fn design_digital(
    view: &Network,
    pairs: &[(usize, usize)],
    init: Vec<CVector>,
    options: WmmseOptions,
) -> Result<(Vec<CVector>, bool)> {
    // min(r1, r2) = min over a in [0, 1] of a*r1 + (1 - a)*r2: weight the
    // hops of each relayed user and move weight to the bottleneck hop.
    let mut view = view.clone();
    let mut split = vec![0.5; pairs.len()];
    let mut best = Some((end_to_end_objective(&view, pairs, &init), init.clone(), true));
    let mut precoders = init;
    let rounds = if pairs.is_empty() { 1 } else { RELAY_WEIGHT_ROUNDS };
    for _ in 0..rounds {
        for (&(a, b), &w) in pairs.iter().zip(&split) {
            view.streams[a].weight = w;
            view.streams[b].weight = 1.0 - w;
        }
        let outcome = wmmse(&view, precoders, options)?;
        precoders = outcome.precoders;
        let value = end_to_end_objective(&view, pairs, &precoders);
        if best.as_ref().is_some_and(|(v, _, _)| value > *v) {
            best = Some((value, precoders.clone(), outcome.converged));
        }
        let r = view.rates(&precoders);
        for (&(a, b), w) in pairs.iter().zip(split.iter_mut()) {
            let gap = (r[a] - r[b]) / (r[a] + r[b]).max(1e-9);
            *w = (*w - RELAY_WEIGHT_STEP * gap).clamp(0.02, 0.98);
        }
    }
    let (_, precoders, converged) = best.expect("at least one round");
    Ok((precoders, converged))
}

/// `A (A^H A)^{-1/2}`: an analog stage with orthonormal columns spanning the
/// same space, so that digital precoders on it keep their power.
fn whitened_analog(analog: &CMatrix) -> Option<CMatrix> {
    let gram = analog.ad_mul(analog);
    let eig = SymmetricEigen::new((&gram + gram.adjoint()).scale(0.5));
    if eig.eigenvalues.iter().any(|&l| l <= 1e-9 * analog.nrows() as f64) {
        return None;
    }
    let inv_sqrt = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.powf(-0.5), 0.0)));
    Some(analog * (&eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint()))
}

/// Designs digital precoders on `design_view` (WMMSE, with relay-aware
/// weighting for the hop pairs in `pairs`), factorizes every transmitter's
/// precoder block into `rf_chains` analog chains, then re-optimizes the
/// digital stages over the effective channels seen through the analog
/// stages, starting from the factorized point. `network` supplies the array
/// sizes.
pub fn design_hybrid(
    network: &Network,
    design_view: &Network,
    pairs: &[(usize, usize)],
    rf_chains: usize,
    options: WmmseOptions,
) -> Result<Beamformers> {
    let (digital, wmmse_converged) = design_digital(design_view, pairs, design_view.mrt_init(), options)?;
    let mut precoders = digital.clone();
    let mut hybrid_converged = true;
    let mut bases: Vec<Option<CMatrix>> = vec![None; network.transmitters.len()];
    for (t, tx) in network.transmitters.iter().enumerate() {
        let idx: Vec<usize> = (0..network.streams.len())
            .filter(|&s| network.streams[s].tx == t)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let target = CMatrix::from_fn(tx.antennas, idx.len(), |i, j| digital[idx[j]][i]);
        if target.norm() == 0.0 {
            continue;
        }
        let fact = hybrid_factorize(&target, rf_chains, None, HybridOptions::default())?;
        if !fact.converged {
            log::warn!("hybrid factorization of transmitter {t} stopped before converging");
            hybrid_converged = false;
        }
        let effective = fact.precoder.effective();
        for (j, &s) in idx.iter().enumerate() {
            precoders[s] = effective.column(j).into_owned();
        }
        bases[t] = whitened_analog(&fact.precoder.analog);
    }

    if bases.iter().all(Option::is_some) {
        let bases: Vec<CMatrix> = bases.into_iter().map(Option::unwrap).collect();
        let reduce = |net: &Network| Network {
            transmitters: net
                .transmitters
                .iter()
                .map(|tx| Transmitter {
                    antennas: rf_chains,
                    power: tx.power,
                })
                .collect(),
            streams: net
                .streams
                .iter()
                .map(|st| Stream {
                    channels: st
                        .channels
                        .iter()
                        .enumerate()
                        .map(|(t, h)| h.as_ref().map(|h| bases[t].ad_mul(h)))
                        .collect(),
                    ..st.clone()
                })
                .collect(),
        };
        let reduced_view = reduce(design_view);
        let init: Vec<CVector> = network
            .streams
            .iter()
            .zip(&precoders)
            .map(|(st, v)| bases[st.tx].ad_mul(v))
            .collect();
        let (refined, _) = design_digital(&reduced_view, pairs, init, options)?;
        precoders = network
            .streams
            .iter()
            .zip(&refined)
            .map(|(st, v)| &bases[st.tx] * v)
            .collect();
    }
    Ok(Beamformers {
        precoders,
        digital,
        wmmse_converged,
        hybrid_converged,
    })
}

/// Designs the precoders of `scheme`. Joint and no-HAPS designs see the full
/// interference; the selfish design sees only each transmitter's own links.
pub fn design_beamformers(scheme: SchemeKind, channels: &Cs1Channels, cfg: &Cs1Config) -> Result<Beamformers> {
    cfg.validate()?;
    let network = scheme_network(scheme, channels, cfg);
    let view = match scheme {
        SchemeKind::Selfish => network.without_cross_links(),
        _ => network.clone(),
    };
    let options = WmmseOptions {
        max_iterations: cfg.wmmse_max_iterations,
        tolerance: cfg.wmmse_tolerance,
    };
    design_hybrid(&network, &view, &relay_pairs(scheme), cfg.rf_chains, options)
}

/// Per-user rates under full interference. An edge user relayed by the HAPS
/// gets the smaller of its two hop rates.
pub fn evaluate_sum_rate(
    scheme: SchemeKind,
    precoders: &[CVector],
    channels: &Cs1Channels,
    cfg: &Cs1Config,
) -> Result<Cs1TrialResult> {
    let network = scheme_network(scheme, channels, cfg);
    if precoders.len() != network.streams.len() {
        return Err(Error::DimensionMismatch {
            what: "scheme precoders",
            expected: network.streams.len().to_string(),
            found: precoders.len().to_string(),
        });
    }
    let r = network.rates(precoders);
    let se = if scheme.uses_haps() {
        [r[0], r[1], r[2].min(r[4]), r[3].min(r[5])]
    } else {
        [r[0], r[1], r[2], r[3]]
    };
    let per_user_rates = se.map(|x| x * cfg.bandwidth_hz);
    Ok(Cs1TrialResult {
        scheme,
        sum_rate: per_user_rates.iter().sum(),
        per_user_rates,
    })
}

/// Results of all schemes on one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Cs1Trial {
    pub id: TrialId,
    /// In [`SchemeKind::ALL`] order.
    pub results: Vec<Cs1TrialResult>,
}

pub fn run_cs1_trial(cfg: &Cs1Config, channels: &Cs1Channels) -> Result<Vec<Cs1TrialResult>> {
    SchemeKind::ALL
        .iter()
        .map(|&s| {
            let bf = design_beamformers(s, channels, cfg)?;
            evaluate_sum_rate(s, &bf.precoders, channels, cfg)
        })
        .collect()
}

pub fn run_cs1(cfg: &Cs1Config, plan: &TrialPlan, threads: Option<usize>) -> Result<Vec<Cs1Trial>> {
    cfg.validate()?;
    let trials = run_trials(plan, threads, |id, mut streams| {
        let topo = build_two_cell_topology(cfg, &mut streams.topology)?;
        let channels = draw_channels(cfg, &topo, &mut streams.realization)?;
        Ok(Cs1Trial {
            id,
            results: run_cs1_trial(cfg, &channels)?,
        })
    })?;
    Ok(trials.into_iter().map(|(_, t)| t).collect())
}
