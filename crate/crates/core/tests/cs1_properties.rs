use vhetsim::relay::{
    build_two_cell_topology, design_beamformers, draw_channels, evaluate_sum_rate, run_cs1, Cs1Config, SchemeKind,
};
use vhetsim::stats::{TrialPlan, TrialStreams};

fn mean_sum_rate(cfg: &Cs1Config, plan: &TrialPlan, scheme: SchemeKind) -> f64 {
    let trials = run_cs1(cfg, plan, None).unwrap();
    let i = SchemeKind::ALL.iter().position(|&s| s == scheme).unwrap();
    trials.iter().map(|t| t.results[i].sum_rate).sum::<f64>() / trials.len() as f64
}

#[test]
fn residual_self_interference_at_minus_90_db_is_negligible() {
    let plan = TrialPlan::new(31, 10, 10).unwrap();
    let ideal = mean_sum_rate(&Cs1Config::default(), &plan, SchemeKind::JointHaps);
    let cfg = Cs1Config {
        self_interference_db: Some(-90.0),
        ..Cs1Config::default()
    };
    let residual = mean_sum_rate(&cfg, &plan, SchemeKind::JointHaps);
    let rel = (ideal - residual).abs() / ideal;
    assert!(rel < 0.01, "ideal {ideal}, -90 dB {residual}, relative {rel}");
}

#[test]
fn hybrid_close_to_digital_bound() {
    let cfg = Cs1Config::default();
    let plan = TrialPlan::new(7, 4, 3).unwrap();
    for scheme in [SchemeKind::JointHaps, SchemeKind::NoHaps] {
        let (mut hybrid, mut digital) = (0.0, 0.0);
        for id in plan.trial_ids() {
            let mut streams = TrialStreams::new(plan.master_seed, id);
            let topo = build_two_cell_topology(&cfg, &mut streams.topology).unwrap();
            let ch = draw_channels(&cfg, &topo, &mut streams.realization).unwrap();
            let bf = design_beamformers(scheme, &ch, &cfg).unwrap();
            hybrid += evaluate_sum_rate(scheme, &bf.precoders, &ch, &cfg).unwrap().sum_rate;
            digital += evaluate_sum_rate(scheme, &bf.digital, &ch, &cfg).unwrap().sum_rate;
        }
        assert!(
            hybrid >= 0.9 * digital,
            "{scheme:?}: hybrid {hybrid} vs digital {digital}"
        );
    }
}

#[test]
fn coordination_beats_selfish_design() {
    let plan = TrialPlan::new(5, 4, 4).unwrap();
    let cfg = Cs1Config::default();
    let trials = run_cs1(&cfg, &plan, None).unwrap();
    let mean = |i: usize| trials.iter().map(|t| t.results[i].sum_rate).sum::<f64>() / trials.len() as f64;
    let joint = mean(0);
    let selfish = mean(2);
    assert_eq!(SchemeKind::ALL[0], SchemeKind::JointHaps);
    assert_eq!(SchemeKind::ALL[2], SchemeKind::Selfish);
    assert!(joint >= selfish, "joint {joint} selfish {selfish}");
}

#[test]
fn edge_rate_never_exceeds_either_hop() {
    let plan = TrialPlan::new(9, 2, 2).unwrap();
    let cfg = Cs1Config::default();
    for t in run_cs1(&cfg, &plan, None).unwrap() {
        for r in &t.results {
            let total: f64 = r.per_user_rates.iter().sum();
            assert!((total - r.sum_rate).abs() <= 1e-9 * r.sum_rate.max(1.0));
            assert!(r.per_user_rates.iter().all(|&x| x >= 0.0 && x.is_finite()));
        }
    }
}
