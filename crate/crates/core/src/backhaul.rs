//! Aerial cell-free uplink: users reach UxNBs over a sub-6 GHz hop, UxNBs
//! amplify and forward to a HAPS over sub-THz links, and the HAPS combines.
//! Also the terrestrial cell-free baseline with fibre backhaul.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::{CVector, UpaGeometry};
use crate::channel::{
    assemble_channel, draw_shadowing_db, draw_small_scale, subthz_pathloss_db, FadingSpec, LargeScaleGain, LinkGeometry,
};
use crate::error::{field_count, field_finite, field_non_negative, field_positive, Error, Result};
use crate::power::{af_endtoend_sinr, hop1_mf_sinr, maxmin_allocate, TwoHopLink};
use crate::stats::{run_trials, TrialId, TrialPlan};
use crate::units::{db_to_linear, dbm_to_watt, distance_and_angles, noise_power_watt, Position3D, PowerDbm, Region};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cs2Config {
    pub n_users: usize,
    pub n_uxnbs: usize,
    pub uxnb_rx_elements: usize,
    pub uxnb_tx_elements: usize,
    pub f_hop1_hz: f64,
    pub f_hop2_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub p_user_dbm: f64,
    pub p_uxnb_dbm: f64,
    pub k_abs_db_per_km: f64,
    pub uxnb_height_m: f64,
    pub haps_altitude_m: f64,
    pub region_side_m: f64,
    pub hop1_rician_k_db: f64,
    pub haps_element_sweep: Vec<usize>,
    pub ap_height_m: f64,
    pub ap_antennas: usize,
    pub ut_height_m: f64,
    /// Log-normal shadowing on the terrestrial NLoS links.
    pub terrestrial_shadowing_db: f64,
    pub maxmin_tolerance: f64,
}

impl Default for Cs2Config {
    fn default() -> Self {
        Cs2Config {
            n_users: 16,
            n_uxnbs: 16,
            uxnb_rx_elements: 4,
            uxnb_tx_elements: 4,
            f_hop1_hz: 2e9,
            f_hop2_hz: 120e9,
            bandwidth_hz: 1e6,
            noise_psd_dbm_hz: -174.0,
            p_user_dbm: 23.0,
            p_uxnb_dbm: 25.0,
            k_abs_db_per_km: 0.5,
            uxnb_height_m: 120.0,
            haps_altitude_m: 20_000.0,
            region_side_m: 1000.0,
            hop1_rician_k_db: 10.0,
            haps_element_sweep: vec![4, 16, 64, 256, 1024, 4096],
            ap_height_m: 10.0,
            ap_antennas: 4,
            ut_height_m: 1.5,
            terrestrial_shadowing_db: 8.0,
            maxmin_tolerance: 1e-7,
        }
    }
}

impl Cs2Config {
    pub fn validate(&self) -> Result<()> {
        field_count("n_users", self.n_users)?;
        field_count("n_uxnbs", self.n_uxnbs)?;
        field_count("uxnb_rx_elements", self.uxnb_rx_elements)?;
        field_count("uxnb_tx_elements", self.uxnb_tx_elements)?;
        field_count("ap_antennas", self.ap_antennas)?;
        for (path, v) in [
            ("f_hop1_hz", self.f_hop1_hz),
            ("f_hop2_hz", self.f_hop2_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("uxnb_height_m", self.uxnb_height_m),
            ("haps_altitude_m", self.haps_altitude_m),
            ("region_side_m", self.region_side_m),
            ("ap_height_m", self.ap_height_m),
            ("maxmin_tolerance", self.maxmin_tolerance),
        ] {
            field_positive(path, v)?;
        }
        for (path, v) in [
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("p_user_dbm", self.p_user_dbm),
            ("p_uxnb_dbm", self.p_uxnb_dbm),
            ("hop1_rician_k_db", self.hop1_rician_k_db),
        ] {
            field_finite(path, v)?;
        }
        for (path, v) in [
            ("k_abs_db_per_km", self.k_abs_db_per_km),
            ("ut_height_m", self.ut_height_m),
            ("terrestrial_shadowing_db", self.terrestrial_shadowing_db),
        ] {
            field_non_negative(path, v)?;
        }
        if self.haps_altitude_m <= self.uxnb_height_m {
            return Err(Error::config("haps_altitude_m", "must exceed uxnb_height_m"));
        }
        if self.haps_element_sweep.is_empty() {
            return Err(Error::config("haps_element_sweep", "must not be empty"));
        }
        if self.haps_element_sweep[0] == 0 || self.haps_element_sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "haps_element_sweep",
                "must be positive and strictly increasing",
            ));
        }
        Ok(())
    }

    fn user_power(&self) -> f64 {
        dbm_to_watt(PowerDbm::new(self.p_user_dbm).expect("validated"))
    }

    fn uxnb_power(&self) -> f64 {
        dbm_to_watt(PowerDbm::new(self.p_uxnb_dbm).expect("validated"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cs2Scheme {
    Aerial,
    Terrestrial,
}

impl Cs2Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Cs2Scheme::Aerial => "aerial",
            Cs2Scheme::Terrestrial => "terrestrial",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cs2TrialResult {
    pub scheme: Cs2Scheme,
    pub haps_elements: Option<usize>,
    /// bit/s
    pub min_rate: f64,
    pub per_user_rates: Vec<f64>,
}

impl Cs2TrialResult {
    fn new(scheme: Cs2Scheme, haps_elements: Option<usize>, per_user_rates: Vec<f64>) -> Self {
        let min_rate = per_user_rates.iter().copied().fold(f64::INFINITY, f64::min);
        Cs2TrialResult {
            scheme,
            haps_elements,
            min_rate,
            per_user_rates,
        }
    }
}

/// Cell centres of the smallest near-square grid holding `n` points, at `height`.
pub fn grid_positions(n: usize, side: f64, height: f64) -> Vec<Position3D> {
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            Position3D {
                x: (c as f64 + 0.5) * side / cols as f64,
                y: (r as f64 + 0.5) * side / rows as f64,
                z: height,
            }
        })
        .collect()
}

/// Node positions and terrestrial shadowing of one topology.
#[derive(Clone, Debug, PartialEq)]
pub struct Cs2Topology {
    pub users: Vec<Position3D>,
    pub uxnbs: Vec<Position3D>,
    pub aps: Vec<Position3D>,
    pub haps: Position3D,
    /// dB, APs by row and users by column.
    pub ap_shadowing_db: DMatrix<f64>,
}

impl Cs2Topology {
    pub fn sample<R: Rng + ?Sized>(cfg: &Cs2Config, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let side = cfg.region_side_m;
        let users: Vec<Position3D> = crate::units::sample_positions(Region::Square { side }, cfg.n_users, rng)?
            .into_iter()
            .map(|p| p.at_height(cfg.ut_height_m))
            .collect();
        let mut shadow = DMatrix::zeros(cfg.n_uxnbs, cfg.n_users);
        for x in shadow.iter_mut() {
            *x = draw_shadowing_db(cfg.terrestrial_shadowing_db, rng)?;
        }
        Ok(Cs2Topology {
            users,
            uxnbs: grid_positions(cfg.n_uxnbs, side, cfg.uxnb_height_m),
            aps: grid_positions(cfg.n_uxnbs, side, cfg.ap_height_m),
            haps: Position3D {
                x: side / 2.0,
                y: side / 2.0,
                z: cfg.haps_altitude_m,
            },
            ap_shadowing_db: shadow,
        })
    }
}

fn uplink_channels<R: Rng + ?Sized>(
    users: &[Position3D],
    receiver: &Position3D,
    array: &UpaGeometry,
    fading: &FadingSpec,
    large_scale: impl Fn(usize, f64) -> Result<LargeScaleGain>,
    rng: &mut R,
) -> Result<Vec<CVector>> {
    let single = UpaGeometry::single();
    users
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let (d, geometry) = LinkGeometry::between(u, receiver)?;
            let small = draw_small_scale(fading, array, &single, &geometry, rng)?;
            let h = assemble_channel(large_scale(k, d)?, small, array, &single)?;
            Ok(h.entries.column(0).into_owned())
        })
        .collect()
}

/// Match-filter SINR of every user at every UxNB (UxNBs by row).
pub fn draw_hop1<R: Rng + ?Sized>(cfg: &Cs2Config, topo: &Cs2Topology, rng: &mut R) -> Result<DMatrix<f64>> {
    let array = UpaGeometry::square(cfg.uxnb_rx_elements)?;
    let fading = FadingSpec::Rician {
        k_db: cfg.hop1_rician_k_db,
    };
    let noise = noise_power_watt(cfg.noise_psd_dbm_hz, cfg.bandwidth_hz)?;
    let p = cfg.user_power();
    let mut sinr = DMatrix::zeros(topo.uxnbs.len(), topo.users.len());
    for (m, uxnb) in topo.uxnbs.iter().enumerate() {
        let h = uplink_channels(
            &topo.users,
            uxnb,
            &array,
            &fading,
            |_, d| LargeScaleGain::free_space(d, cfg.f_hop1_hz),
            rng,
        )?;
        for k in 0..topo.users.len() {
            sinr[(m, k)] = hop1_mf_sinr(&h, k, p, noise)?;
        }
    }
    Ok(sinr)
}

/// Backhaul SNR per watt of each UxNB towards a HAPS with `haps_elements`
/// elements. Both ends steer at each other and every user-UxNB branch owns a
/// `1/(UxNBs * users)` share of the band.
pub fn hop2_gains(cfg: &Cs2Config, topo: &Cs2Topology, haps_elements: usize) -> Result<Vec<f64>> {
    if haps_elements == 0 {
        return Err(Error::invalid("HAPS elements", "need at least one"));
    }
    let branches = (topo.uxnbs.len() * topo.users.len()) as f64;
    let noise_rb = noise_power_watt(cfg.noise_psd_dbm_hz, cfg.bandwidth_hz / branches)?;
    let array_gain = (cfg.uxnb_tx_elements * haps_elements) as f64;
    topo.uxnbs
        .iter()
        .map(|u| {
            let (d, _) = distance_and_angles(u, &topo.haps)?;
            let loss = subthz_pathloss_db(d, cfg.f_hop2_hz, cfg.k_abs_db_per_km)?;
            Ok(array_gain * db_to_linear(-loss)? / noise_rb)
        })
        .collect()
}

/// Aerial per-user rates for given hop-1 SINRs, after max-min backhaul power allocation.
pub fn aerial_rates(
    cfg: &Cs2Config,
    topo: &Cs2Topology,
    hop1: &DMatrix<f64>,
    haps_elements: usize,
) -> Result<Cs2TrialResult> {
    let gains = hop2_gains(cfg, topo, haps_elements)?;
    if hop1.nrows() != gains.len() || hop1.ncols() != topo.users.len() {
        return Err(Error::DimensionMismatch {
            what: "hop-1 SINR matrix",
            expected: format!("{}x{}", gains.len(), topo.users.len()),
            found: format!("{}x{}", hop1.nrows(), hop1.ncols()),
        });
    }
    let mut links = Vec::with_capacity(hop1.len());
    for k in 0..hop1.ncols() {
        for (m, &g) in gains.iter().enumerate() {
            links.push(TwoHopLink::new(hop1[(m, k)], g)?);
        }
    }
    let links = DMatrix::from_vec(hop1.nrows(), hop1.ncols(), links);
    let result = maxmin_allocate(&links, cfg.uxnb_power(), cfg.maxmin_tolerance)?;
    if !result.converged {
        log::warn!("max-min allocation did not converge for N = {haps_elements}");
    }
    let rates = (0..links.ncols())
        .map(|k| {
            let column: Vec<TwoHopLink> = links.column(k).iter().copied().collect();
            let q: Vec<f64> = result.allocation.q.column(k).iter().copied().collect();
            af_endtoend_sinr(&column, &q).map(|s| 0.5 * cfg.bandwidth_hz * (1.0 + s).log2())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Cs2TrialResult::new(Cs2Scheme::Aerial, Some(haps_elements), rates))
}

/// One aerial trial: fresh topology and hop-1 fading from `rng`.
pub fn run_cs2_trial<R: Rng + ?Sized>(cfg: &Cs2Config, haps_elements: usize, rng: &mut R) -> Result<Cs2TrialResult> {
    let topo = Cs2Topology::sample(cfg, rng)?;
    let hop1 = draw_hop1(cfg, &topo, rng)?;
    aerial_rates(cfg, &topo, &hop1, haps_elements)
}

fn terrestrial_sinrs<R: Rng + ?Sized>(
    cfg: &Cs2Config,
    topo: &Cs2Topology,
    large_scale: impl Fn(usize, usize, f64) -> Result<LargeScaleGain>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let array = UpaGeometry::square(cfg.ap_antennas)?;
    let noise = noise_power_watt(cfg.noise_psd_dbm_hz, cfg.bandwidth_hz)?;
    let p = cfg.user_power();
    let mut sinr = vec![0.0; topo.users.len()];
    for (m, ap) in topo.aps.iter().enumerate() {
        let h = uplink_channels(
            &topo.users,
            ap,
            &array,
            &FadingSpec::Rayleigh,
            |k, d| large_scale(m, k, d),
            rng,
        )?;
        for (k, s) in sinr.iter_mut().enumerate() {
            *s += hop1_mf_sinr(&h, k, p, noise)?;
        }
    }
    Ok(sinr)
}

/// Terrestrial cell-free rates for a given topology: Rayleigh NLoS access,
/// per-AP match filtering and lossless combining at the central processor.
pub fn terrestrial_rates<R: Rng + ?Sized>(cfg: &Cs2Config, topo: &Cs2Topology, rng: &mut R) -> Result<Cs2TrialResult> {
    let sinr = terrestrial_sinrs(
        cfg,
        topo,
        |m, k, d| {
            LargeScaleGain::urban_macro_nlos(d, cfg.f_hop1_hz, cfg.ut_height_m)?.shadowed(topo.ap_shadowing_db[(m, k)])
        },
        rng,
    )?;
    let rates = sinr.iter().map(|s| cfg.bandwidth_hz * (1.0 + s).log2()).collect();
    Ok(Cs2TrialResult::new(Cs2Scheme::Terrestrial, None, rates))
}

/// One baseline trial: fresh topology and fading from `rng`.
pub fn terrestrial_baseline_trial<R: Rng + ?Sized>(cfg: &Cs2Config, rng: &mut R) -> Result<Cs2TrialResult> {
    let topo = Cs2Topology::sample(cfg, rng)?;
    terrestrial_rates(cfg, &topo, rng)
}

/// All results of one trial: the aerial scheme at every sweep point (sharing
/// topology and hop-1 fading) and the terrestrial baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct Cs2Trial {
    pub id: TrialId,
    pub aerial: Vec<Cs2TrialResult>,
    pub terrestrial: Cs2TrialResult,
}

pub fn run_cs2(cfg: &Cs2Config, plan: &TrialPlan, threads: Option<usize>) -> Result<Vec<Cs2Trial>> {
    cfg.validate()?;
    let trials = run_trials(plan, threads, |id, mut streams| {
        let topo = Cs2Topology::sample(cfg, &mut streams.topology)?;
        let hop1 = draw_hop1(cfg, &topo, &mut streams.realization)?;
        let aerial = cfg
            .haps_element_sweep
            .iter()
            .map(|&n| aerial_rates(cfg, &topo, &hop1, n))
            .collect::<Result<Vec<_>>>()?;
        let terrestrial = terrestrial_rates(cfg, &topo, &mut streams.realization_substream(1))?;
        Ok(Cs2Trial {
            id,
            aerial,
            terrestrial,
        })
    })?;
    Ok(trials.into_iter().map(|(_, t)| t).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cs2SweepRow {
    pub haps_elements: usize,
    /// Mean per-trial minimum rates, bit/s.
    pub aerial_mean_min_rate: f64,
    pub terrestrial_mean_min_rate: f64,
}

pub fn summarize_sweep(cfg: &Cs2Config, trials: &[Cs2Trial]) -> Result<Vec<Cs2SweepRow>> {
    if trials.is_empty() {
        return Err(Error::invalid("sweep", "no trials"));
    }
    let n = trials.len() as f64;
    let terrestrial = trials.iter().map(|t| t.terrestrial.min_rate).sum::<f64>() / n;
    Ok(cfg
        .haps_element_sweep
        .iter()
        .enumerate()
        .map(|(i, &haps_elements)| Cs2SweepRow {
            haps_elements,
            aerial_mean_min_rate: trials.iter().map(|t| t.aerial[i].min_rate).sum::<f64>() / n,
            terrestrial_mean_min_rate: terrestrial,
        })
        .collect())
}

/// Mean min-rate table over the element sweep, with paired seeds across points.
pub fn sweep_haps_elements(cfg: &Cs2Config, plan: &TrialPlan, threads: Option<usize>) -> Result<Vec<Cs2SweepRow>> {
    summarize_sweep(cfg, &run_cs2(cfg, plan, threads)?)
}

/// Smallest swept element count at which the aerial scheme beats the baseline.
pub fn crossover(rows: &[Cs2SweepRow]) -> Option<usize> {
    rows.iter()
        .find(|r| r.aerial_mean_min_rate > r.terrestrial_mean_min_rate)
        .map(|r| r.haps_elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn small_cfg() -> Cs2Config {
        Cs2Config {
            n_users: 4,
            n_uxnbs: 4,
            ..Cs2Config::default()
        }
    }

    #[test]
    fn defaults_validate() {
        Cs2Config::default().validate().unwrap();
        let bad = Cs2Config {
            bandwidth_hz: -1.0,
            ..Cs2Config::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("bandwidth"));
        let bad = Cs2Config {
            haps_element_sweep: vec![4, 4],
            ..Cs2Config::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grid_layout() {
        let g = grid_positions(16, 1000.0, 120.0);
        let xs: Vec<f64> = g.iter().take(4).map(|p| p.x).collect();
        assert_eq!(xs, vec![125.0, 375.0, 625.0, 875.0]);
        assert!(g.iter().all(|p| p.z == 120.0));
        assert_eq!(grid_positions(1, 1000.0, 10.0)[0].x, 500.0);
    }

    #[test]
    fn absorption_only_hurts() {
        let cfg = small_cfg();
        let dry = Cs2Config {
            k_abs_db_per_km: 0.0,
            ..cfg.clone()
        };
        for seed in 0..5 {
            let with = run_cs2_trial(&cfg, 64, &mut rng(seed)).unwrap();
            let without = run_cs2_trial(&dry, 64, &mut rng(seed)).unwrap();
            assert!(without.min_rate >= with.min_rate * (1.0 - 1e-6));
        }
    }

    #[test]
    fn more_haps_elements_never_hurt() {
        let cfg = small_cfg();
        for seed in 0..5 {
            let mut last = 0.0;
            for n in [4, 8, 16, 32, 64] {
                let r = run_cs2_trial(&cfg, n, &mut rng(seed)).unwrap();
                assert!(r.min_rate >= last * (1.0 - 1e-6));
                last = r.min_rate;
            }
        }
    }

    #[test]
    fn single_user_min_is_its_rate() {
        let cfg = Cs2Config {
            n_users: 1,
            ..small_cfg()
        };
        let r = run_cs2_trial(&cfg, 16, &mut rng(3)).unwrap();
        assert_eq!(r.per_user_rates.len(), 1);
        assert_eq!(r.min_rate, r.per_user_rates[0]);
        let t = terrestrial_baseline_trial(&cfg, &mut rng(3)).unwrap();
        assert_eq!(t.min_rate, t.per_user_rates[0]);
    }

    #[test]
    fn nlos_loss_below_los_hop() {
        // single user, no interference: SINR is proportional to the link gain
        let cfg = Cs2Config {
            n_users: 1,
            terrestrial_shadowing_db: 0.0,
            ..Cs2Config::default()
        };
        for seed in 0..10 {
            let topo = Cs2Topology::sample(&cfg, &mut rng(seed)).unwrap();
            let nlos = terrestrial_sinrs(
                &cfg,
                &topo,
                |_, _, d| LargeScaleGain::urban_macro_nlos(d, cfg.f_hop1_hz, cfg.ut_height_m),
                &mut rng(100 + seed),
            )
            .unwrap();
            let los = terrestrial_sinrs(
                &cfg,
                &topo,
                |_, _, d| LargeScaleGain::free_space(d, cfg.f_hop1_hz),
                &mut rng(100 + seed),
            )
            .unwrap();
            assert!(nlos[0] <= los[0]);
        }
    }

    #[test]
    fn single_ap_is_plain_mrc() {
        let cfg = Cs2Config {
            n_users: 1,
            n_uxnbs: 1,
            terrestrial_shadowing_db: 0.0,
            ..Cs2Config::default()
        };
        let topo = Cs2Topology::sample(&cfg, &mut rng(9)).unwrap();
        let t = terrestrial_rates(&cfg, &topo, &mut rng(10)).unwrap();
        // rebuild the single channel with the same draws
        let array = UpaGeometry::square(4).unwrap();
        let h = uplink_channels(
            &topo.users,
            &topo.aps[0],
            &array,
            &FadingSpec::Rayleigh,
            |_, d| LargeScaleGain::urban_macro_nlos(d, cfg.f_hop1_hz, cfg.ut_height_m),
            &mut rng(10),
        )
        .unwrap();
        let snr = cfg.user_power() * h[0].norm_squared() / noise_power_watt(-174.0, 1e6).unwrap();
        assert!((t.min_rate - 1e6 * (1.0 + snr).log2()).abs() < 1e-6 * t.min_rate);
    }

    #[test]
    fn higher_user_power_raises_isolated_sinr() {
        let base = Cs2Config {
            n_users: 1,
            ..Cs2Config::default()
        };
        let loud = Cs2Config {
            p_user_dbm: base.p_user_dbm + 3.0,
            ..base.clone()
        };
        let topo = Cs2Topology::sample(&base, &mut rng(4)).unwrap();
        let a = draw_hop1(&base, &topo, &mut rng(5)).unwrap();
        let b = draw_hop1(&loud, &topo, &mut rng(5)).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!(y > x);
        }
    }

    #[test]
    fn hop2_gain_scales_with_elements() {
        let cfg = Cs2Config::default();
        let topo = Cs2Topology::sample(&cfg, &mut rng(1)).unwrap();
        let g4 = hop2_gains(&cfg, &topo, 4).unwrap();
        let g8 = hop2_gains(&cfg, &topo, 8).unwrap();
        for (a, b) in g4.iter().zip(&g8) {
            assert!((b / a - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_is_deterministic_and_baseline_constant() {
        let cfg = Cs2Config {
            haps_element_sweep: vec![4, 64],
            ..small_cfg()
        };
        let plan = TrialPlan::new(5, 2, 2).unwrap();
        let a = sweep_haps_elements(&cfg, &plan, Some(1)).unwrap();
        let b = sweep_haps_elements(&cfg, &plan, Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].terrestrial_mean_min_rate, a[1].terrestrial_mean_min_rate);
        assert!(a[1].aerial_mean_min_rate >= a[0].aerial_mean_min_rate);
    }
}
