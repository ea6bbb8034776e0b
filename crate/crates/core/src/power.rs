//! Two-hop amplify-and-forward SINR and max-min backhaul power allocation.
//!
//! Link `(m, k)` carries user `k` through relay `m`. With hop-1 SINR `a` and
//! hop-2 SNR `g*q`, the branch SINR `a*g*q / (a + 1 + g*q)` is increasing and
//! concave in `q`, and the receiver sums branches.

use nalgebra::DMatrix;

use crate::array::CVector;
use crate::error::{ensure_finite, ensure_positive, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoHopLink {
    pub hop1_sinr: f64,
    /// Hop-2 SNR per watt of relay transmit power.
    pub hop2_gain: f64,
}

impl TwoHopLink {
    pub fn new(hop1_sinr: f64, hop2_gain: f64) -> Result<Self> {
        for (what, v) in [("hop-1 SINR", hop1_sinr), ("hop-2 gain", hop2_gain)] {
            ensure_finite(what, v)?;
            if v < 0.0 {
                return Err(Error::invalid(what, format!("{v} is negative")));
            }
        }
        Ok(TwoHopLink { hop1_sinr, hop2_gain })
    }

    pub fn branch_sinr(&self, q: f64) -> f64 {
        let g2 = q * self.hop2_gain;
        let num = self.hop1_sinr * g2;
        if num == 0.0 {
            0.0
        } else {
            num / (self.hop1_sinr + g2 + 1.0)
        }
    }

    fn usable(&self) -> bool {
        self.hop1_sinr > 0.0 && self.hop2_gain > 0.0
    }
}

/// Relay powers in watts, relays by row and users by column.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerAllocation {
    pub q: DMatrix<f64>,
}

impl PowerAllocation {
    pub fn equal_split(relays: usize, users: usize, budget: f64) -> Self {
        PowerAllocation {
            q: DMatrix::from_element(relays, users, budget / users as f64),
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.q.row_iter().map(|r| r.sum()).collect()
    }

    pub fn is_feasible(&self, budget: f64) -> bool {
        self.q.iter().all(|&x| x >= 0.0) && self.row_sums().iter().all(|&s| s <= budget + 1e-9)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxMinResult {
    pub allocation: PowerAllocation,
    pub min_sinr: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Match-filter SINR of user `k` at one relay.
pub fn hop1_mf_sinr(h_all: &[CVector], k: usize, p_user: f64, noise: f64) -> Result<f64> {
    let hk = h_all
        .get(k)
        .ok_or_else(|| Error::invalid("user index", format!("{k} out of {} users", h_all.len())))?;
    ensure_positive("noise power", noise)?;
    ensure_finite("user power", p_user)?;
    let nk = hk.norm_squared();
    if nk == 0.0 {
        return Err(Error::invalid("desired channel", "is zero"));
    }
    let interference: f64 = h_all
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, hj)| {
            if hj.len() != hk.len() {
                return f64::NAN;
            }
            hk.dotc(hj).norm_sqr()
        })
        .sum();
    if interference.is_nan() {
        return Err(Error::DimensionMismatch {
            what: "user channels",
            expected: hk.len().to_string(),
            found: "mixed lengths".into(),
        });
    }
    Ok(p_user * nk * nk / (p_user * interference + noise * nk))
}

/// End-to-end SINR of one user after combining its relay branches.
pub fn af_endtoend_sinr(links: &[TwoHopLink], q_col: &[f64]) -> Result<f64> {
    if links.len() != q_col.len() {
        return Err(Error::DimensionMismatch {
            what: "branch powers",
            expected: links.len().to_string(),
            found: q_col.len().to_string(),
        });
    }
    let mut total = 0.0;
    for (l, &q) in links.iter().zip(q_col) {
        ensure_finite("branch power", q)?;
        if q < 0.0 {
            return Err(Error::invalid("branch power", format!("{q} is negative")));
        }
        total += l.branch_sinr(q);
    }
    Ok(total)
}

fn user_sinrs(links: &DMatrix<TwoHopLink>, q: &DMatrix<f64>) -> Vec<f64> {
    (0..links.ncols())
        .map(|k| (0..links.nrows()).map(|m| links[(m, k)].branch_sinr(q[(m, k)])).sum())
        .collect()
}

pub fn min_sinr(links: &DMatrix<TwoHopLink>, allocation: &PowerAllocation) -> f64 {
    user_sinrs(links, &allocation.q)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Max-min SINR power allocation.
///
/// Solved exactly as a second-order cone program in the normalised powers
/// `x = q / budget`: maximise `t` subject to row sums `<= 1`, `x >= 0` and,
/// per user, `t <= sum_m (a_m - s_m)` where each slack obeys the hyperbolic
/// constraint `s_m * (a_m + 1 + g_m*x_m) >= a_m*(a_m + 1)`. `tol` is the
/// solver's relative gap. The equal split is returned if it is better.
pub fn maxmin_allocate(links: &DMatrix<TwoHopLink>, budget: f64, tol: f64) -> Result<MaxMinResult> {
    use clarabel::algebra::CscMatrix;
    use clarabel::solver::{
        DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus,
        SupportedConeT,
    };

    ensure_positive("relay power budget", budget)?;
    ensure_positive("solver tolerance", tol)?;
    let (relays, users) = links.shape();
    if relays == 0 || users == 0 {
        return Err(Error::invalid("link matrix", "needs at least one relay and one user"));
    }
    let equal = PowerAllocation::equal_split(relays, users, budget);
    let equal_min = min_sinr(links, &equal);
    if equal_min <= 0.0 {
        return Ok(MaxMinResult {
            allocation: equal,
            min_sinr: equal_min.max(0.0),
            iterations: 0,
            converged: true,
        });
    }

    // usable links, in column-major order
    let usable: Vec<(usize, usize)> = (0..users)
        .flat_map(|k| (0..relays).map(move |m| (m, k)))
        .filter(|&(m, k)| links[(m, k)].usable())
        .collect();
    let n = usable.len();
    let (x_col, s_col, t_col) = (0, n, 2 * n);
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut b = Vec::new();
    let mut push = |r: usize, c: usize, v: f64| {
        rows.push(r);
        cols.push(c);
        vals.push(v);
    };
    let mut r = 0;
    for m in 0..relays {
        for (i, &(mm, _)) in usable.iter().enumerate() {
            if mm == m {
                push(r, x_col + i, 1.0);
            }
        }
        b.push(1.0);
        r += 1;
    }
    for i in 0..n {
        push(r, x_col + i, -1.0);
        b.push(0.0);
        r += 1;
    }
    for k in 0..users {
        push(r, t_col, 1.0);
        let mut cap = 0.0;
        for (i, &(m, kk)) in usable.iter().enumerate() {
            if kk == k {
                push(r, s_col + i, 1.0);
                cap += links[(m, k)].hop1_sinr;
            }
        }
        b.push(cap);
        r += 1;
    }
    let nonneg = r;
    for (i, &(m, k)) in usable.iter().enumerate() {
        let l = links[(m, k)];
        let a1 = l.hop1_sinr + 1.0;
        let g = l.hop2_gain * budget;
        push(r, s_col + i, -1.0);
        push(r, x_col + i, -g);
        push(r + 1, s_col + i, -1.0);
        push(r + 1, x_col + i, g);
        b.extend([a1, -a1, 2.0 * (l.hop1_sinr * a1).sqrt()]);
        r += 3;
    }
    let a = CscMatrix::new_from_triplets(r, 2 * n + 1, rows, cols, vals);
    let p = CscMatrix::zeros((2 * n + 1, 2 * n + 1));
    let mut c = vec![0.0; 2 * n + 1];
    c[t_col] = -1.0;
    let mut cones: Vec<SupportedConeT<f64>> = vec![NonnegativeConeT(nonneg)];
    cones.extend(std::iter::repeat_n(SecondOrderConeT(3), n));
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_rel(tol)
        .tol_gap_abs(tol * 1e-3)
        .build()
        .map_err(|e| Error::invalid("solver settings", e.to_string()))?;
    let mut solver = DefaultSolver::new(&p, &c, &a, &b, &cones, settings)
        .map_err(|e| Error::invalid("max-min program", format!("{e:?}")))?;
    solver.solve();
    let status = solver.solution.status;
    let converged = matches!(status, SolverStatus::Solved);

    let mut q = DMatrix::zeros(relays, users);
    if matches!(status, SolverStatus::Solved | SolverStatus::AlmostSolved) {
        for (i, &(m, k)) in usable.iter().enumerate() {
            q[(m, k)] = solver.solution.x[x_col + i].max(0.0) * budget;
        }
        for mut row in q.row_iter_mut() {
            let s = row.sum();
            if s > budget {
                row *= budget / s;
            }
        }
    }
    let mut allocation = PowerAllocation { q };
    let mut value = min_sinr(links, &allocation);
    if value.is_nan() || value < equal_min {
        allocation = equal;
        value = equal_min;
    }
    Ok(MaxMinResult {
        allocation,
        min_sinr: value,
        iterations: solver.solution.iterations as usize,
        converged,
    })
}

/// Exhaustive search over grid splits of each relay's full budget.
pub fn oracle_maxmin(links: &DMatrix<TwoHopLink>, budget: f64, grid_points: usize) -> Result<f64> {
    let (relays, users) = links.shape();
    if relays * users > 6 {
        return Err(Error::InstanceTooLarge(format!(
            "{relays} x {users} exceeds the 6-link oracle limit"
        )));
    }
    if grid_points < 2 {
        return Err(Error::invalid("grid points", "need at least 2"));
    }
    ensure_positive("relay power budget", budget)?;
    let steps = grid_points - 1;
    let mut splits = Vec::new();
    compositions(steps, users, &mut vec![0; users], 0, &mut splits);
    let mut idx = vec![0usize; relays];
    let mut q = DMatrix::zeros(relays, users);
    let mut best = 0.0f64;
    loop {
        for (m, &i) in idx.iter().enumerate() {
            for (k, &units) in splits[i].iter().enumerate() {
                q[(m, k)] = budget * units as f64 / steps as f64;
            }
        }
        let v = user_sinrs(links, &q).into_iter().fold(f64::INFINITY, f64::min);
        best = best.max(v);
        let mut m = 0;
        loop {
            if m == relays {
                return Ok(best);
            }
            idx[m] += 1;
            if idx[m] < splits.len() {
                break;
            }
            idx[m] = 0;
            m += 1;
        }
    }
}

fn compositions(total: usize, parts: usize, cur: &mut Vec<usize>, at: usize, out: &mut Vec<Vec<usize>>) {
    if at + 1 == parts {
        cur[at] = total;
        out.push(cur.clone());
        return;
    }
    for x in 0..=total {
        cur[at] = x;
        compositions(total - x, parts, cur, at + 1, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn link(a: f64, g: f64) -> TwoHopLink {
        TwoHopLink::new(a, g).unwrap()
    }

    fn random_links(rng: &mut ChaCha8Rng, relays: usize, users: usize) -> DMatrix<TwoHopLink> {
        DMatrix::from_fn(relays, users, |_, _| {
            link(
                10f64.powf(rng.random_range(-1.0..1.5)),
                10f64.powf(rng.random_range(-1.0..2.0)),
            )
        })
    }

    fn cv(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(r, i)| C64::new(r, i)))
    }

    #[test]
    fn hop1_examples() {
        let h = cv(&[(1.0, 0.0), (0.0, 1.0)]);
        let single = hop1_mf_sinr(std::slice::from_ref(&h), 0, 2.0, 0.5).unwrap();
        assert!((single - 2.0 * 2.0 / 0.5).abs() < 1e-12);
        let orth = cv(&[(0.0, 1.0), (1.0, 0.0)]);
        let two = hop1_mf_sinr(&[h.clone(), orth], 0, 2.0, 0.5).unwrap();
        assert!((two - single).abs() < 1e-12);
        let same = hop1_mf_sinr(&[h.clone(), h.clone()], 0, 1e9, 1.0).unwrap();
        assert!((same - 1.0).abs() < 1e-6);
        assert!(hop1_mf_sinr(&[CVector::zeros(2)], 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn af_examples() {
        assert!((af_endtoend_sinr(&[link(1.0, 1.0)], &[1.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            af_endtoend_sinr(&[link(3.0, 2.0), link(1.0, 5.0)], &[0.0, 0.0]).unwrap(),
            0.0
        );
        let ls = [link(3.0, 1.0), link(0.5, 2.0)];
        let big = af_endtoend_sinr(&ls, &[1e9, 1e9]).unwrap();
        assert!((big - 3.5).abs() < 1e-7);
        assert!(af_endtoend_sinr(&ls, &[1.0, -1.0]).is_err());
        assert!(af_endtoend_sinr(&ls, &[1.0]).is_err());
    }

    #[test]
    fn symmetric_instance_splits_equally() {
        let links = DMatrix::from_element(2, 2, link(4.0, 3.0));
        let r = maxmin_allocate(&links, 2.0, 1e-6).unwrap();
        let eq = min_sinr(&links, &PowerAllocation::equal_split(2, 2, 2.0));
        assert!(r.min_sinr >= eq * (1.0 - 1e-6));
        for x in r.allocation.q.iter() {
            assert!((x - 1.0).abs() < 1e-2, "{x}");
        }
        assert!((oracle_maxmin(&links, 2.0, 101).unwrap() - eq).abs() < 1e-12);
    }

    #[test]
    fn single_user_takes_every_budget() {
        let links = DMatrix::from_row_slice(3, 1, &[link(2.0, 1.0), link(5.0, 0.3), link(1.0, 7.0)]);
        let r = maxmin_allocate(&links, 1.5, 1e-6).unwrap();
        for x in r.allocation.q.iter() {
            assert_eq!(*x, 1.5);
        }
    }

    #[test]
    fn weaker_backhaul_gets_more_power() {
        let links = DMatrix::from_row_slice(1, 2, &[link(5.0, 4.0), link(5.0, 1.0)]);
        let grid = 1001;
        let mut best = (0.0, 0.0);
        for i in 0..grid {
            let t = i as f64 / (grid - 1) as f64;
            let v = links[(0, 0)].branch_sinr(t).min(links[(0, 1)].branch_sinr(1.0 - t));
            if v > best.0 {
                best = (v, t);
            }
        }
        assert!(best.1 < 0.5);
        let oracle = oracle_maxmin(&links, 1.0, grid).unwrap();
        assert!((oracle - best.0).abs() < 1e-12);
        let r = maxmin_allocate(&links, 1.0, 1e-8).unwrap();
        assert!(r.allocation.q[(0, 1)] > r.allocation.q[(0, 0)]);
        assert!((r.min_sinr - oracle).abs() <= 1e-3 * oracle);
    }

    #[test]
    fn oracle_refinement_never_hurts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let links = random_links(&mut rng, 2, 2);
            let coarse = oracle_maxmin(&links, 1.0, 11).unwrap();
            let fine = oracle_maxmin(&links, 1.0, 101).unwrap();
            assert!(fine >= coarse);
        }
        assert!(oracle_maxmin(&random_links(&mut rng, 3, 3), 1.0, 11).is_err());
    }

    #[test]
    fn allocation_matches_oracle_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let links = random_links(&mut rng, 2, 2);
            let r = maxmin_allocate(&links, 1.0, 1e-6).unwrap();
            let oracle = oracle_maxmin(&links, 1.0, 201).unwrap();
            assert!(r.allocation.is_feasible(1.0));
            assert!(r.min_sinr >= oracle * 0.98, "{} vs {}", r.min_sinr, oracle);
        }
    }

    #[test]
    fn degenerate_gains_give_zero() {
        let links = DMatrix::from_element(2, 2, link(0.0, 3.0));
        let r = maxmin_allocate(&links, 1.0, 1e-3).unwrap();
        assert_eq!(r.min_sinr, 0.0);
        assert!(r.converged);
        assert!(maxmin_allocate(&links, 1.0, 0.0).is_err());
        assert!(maxmin_allocate(&links, 0.0, 1e-3).is_err());
    }

    #[test]
    fn larger_instances_converge() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let links = random_links(&mut rng, 16, 16);
            let r = maxmin_allocate(&links, 0.2, 1e-8).unwrap();
            assert!(r.converged);
            assert!(r.allocation.is_feasible(0.2));
            let eq = min_sinr(&links, &PowerAllocation::equal_split(16, 16, 0.2));
            assert!(r.min_sinr >= eq);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest};
        use rand::Rng;

        proptest! {
            #[test]
            fn branch_sinr_increasing_and_concave(
                a in 1e-3f64..1e3, g in 1e-3f64..1e3, q in 1e-3f64..10.0,
            ) {
                let l = link(a, g);
                let h = 1e-3 * q;
                let (f0, f1, f2) = (l.branch_sinr(q - h), l.branch_sinr(q), l.branch_sinr(q + h));
                prop_assert!(f2 > f1 && f1 > f0);
                prop_assert!(f2 - 2.0 * f1 + f0 <= 1e-12 * f1.max(1.0));
            }

            #[test]
            fn allocation_is_feasible_and_beats_equal_split(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let relays = rng.random_range(1..5);
                let users = rng.random_range(1..6);
                let links = random_links(&mut rng, relays, users);
                let r = maxmin_allocate(&links, 0.3, 1e-4).unwrap();
                prop_assert!(r.allocation.is_feasible(0.3));
                let eq = min_sinr(&links, &PowerAllocation::equal_split(relays, users, 0.3));
                prop_assert!(r.min_sinr >= eq * (1.0 - 1e-12));
                prop_assert!((r.min_sinr - min_sinr(&links, &r.allocation)).abs() <= 1e-6 * r.min_sinr);
            }
        }
    }
}
