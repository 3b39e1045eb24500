use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use xrego::bounds::{tau, CircularCone};
use xrego::harness::{performance_profile, CellKey, CellRecord, CellStatus};
use xrego::problems::problem;
use xrego::stats::wilson95;
use xrego::subsolve::{make_reduced, nelder_mead, SolverSpec};
use xrego::xrego::{run_xrego, DimensionSchedule, PStrategy, StopConfig};
use xrego::RngState;

fn record(problem: usize, algorithm: usize, seed: u64, n_f: Option<u64>) -> CellRecord {
    CellRecord {
        schema_version: 1,
        key: CellKey { problem: format!("p{problem}"), dim: 10, algorithm: format!("a{algorithm}"), seed },
        name: format!("p{problem}"),
        effective_dim: None,
        f_star: Some(0.0),
        status: CellStatus::Ok,
        error: None,
        n_f,
        f_opt: 0.0,
        d_e_est: None,
        k_f: None,
        embeddings: 1,
        total_evals: 0,
        success: None,
        stop_reason: None,
        trace: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intrinsic_volumes_form_a_distribution(dim in 2usize..120, alpha in 0.01f64..1.57) {
        let v = CircularCone::new(dim, alpha).unwrap().intrinsic_volumes();
        prop_assert!(v.values.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((v.total() - 1.0).abs() < 1e-10);
        let (even, odd) = v.parity_sums();
        prop_assert!((even - 0.5).abs() < 1e-10 && (odd - 0.5).abs() < 1e-10);
    }

    #[test]
    fn tau_is_a_probability_increasing_in_r(dim in 3usize..80, d_frac in 0.0f64..1.0, r in 0.01f64..0.98) {
        let d = 1 + ((dim - 2) as f64 * d_frac) as usize;
        let lo = tau(r, d, dim).unwrap();
        let hi = tau((r + 0.01).min(0.99), d, dim).unwrap();
        prop_assert!(lo.tau > 0.0 && lo.tau <= 1.0);
        // For d > 2 the bound turns down as r -> 1; it only increases while
        // r² <= (D - d) / (D - 2).
        let r_hi = (r + 0.01).min(0.99);
        if d <= 2 || r_hi * r_hi <= (dim - d) as f64 / (dim - 2) as f64 {
            prop_assert!(hi.log10_tau >= lo.log10_tau - 1e-12);
        }
        if d == 2 {
            prop_assert!((lo.log10_tau - (dim - 2) as f64 * r.log10()).abs() < 1e-10);
        }
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let s = ((n as f64) * frac).round() as u64;
        let w = wilson95(s, n);
        let p = s as f64 / n as f64;
        prop_assert!(0.0 <= w.lo && w.lo <= p + 1e-15 && p <= w.hi + 1e-15 && w.hi <= 1.0);
    }

    #[test]
    fn profiles_are_monotone_and_order_free(
        costs in proptest::collection::vec(proptest::option::weighted(0.8, 1u64..1000), 12),
    ) {
        // 4 problems x 3 algorithms, one seed.
        let recs: Vec<CellRecord> = costs
            .iter()
            .enumerate()
            .map(|(i, c)| record(i / 3, i % 3, 0, *c))
            .collect();
        let mut reversed = recs.clone();
        reversed.reverse();
        match performance_profile(&recs, None) {
            Ok(rep) => {
                prop_assert_eq!(&rep, &performance_profile(&reversed, None).unwrap());
                for c in &rep.curves {
                    prop_assert!(c.pi.windows(2).all(|w| w[0] <= w[1]));
                    prop_assert!(c.pi.iter().all(|p| (0.0..=1.0).contains(p)));
                }
                // On every kept problem some algorithm has ratio one.
                let at_one: f64 = rep.curves.iter().map(|c| c.at(1.0)).sum();
                prop_assert!(at_one >= 1.0 - 1e-12);
            }
            Err(_) => prop_assert!(false, "profile failed"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Moving along directions the objective ignores leaves it unchanged.
    #[test]
    fn low_effective_dimension_invariance(seed in 0u64..1000, dim in 3usize..30) {
        let rng = RngState::from_seed(seed);
        let obj = problem("branin", dim, &rng).unwrap();
        let mut g = rng.labeled("points").generator();
        use rand::Rng;
        let x = DVector::from_fn(dim, |_, _| g.random_range(-0.5..0.5));
        let h = DVector::from_fn(dim, |_, _| g.random_range(-0.5..0.5));
        let flat = obj.constant_component(&h).unwrap();
        let fx = obj.evaluate(x.as_slice());
        let shifted = &x + &flat;
        prop_assert!((obj.evaluate(shifted.as_slice()) - fx).abs() <= 1e-9 * fx.abs().max(1.0));
    }

    #[test]
    fn reduced_problem_embeds_affinely(seed in 0u64..1000, d in 1usize..4) {
        let dim = 8;
        let rng = RngState::from_seed(seed);
        let obj = problem("branin", dim, &rng).unwrap();
        let a = DMatrix::from_fn(dim, d, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.05 - 0.1);
        let p = DVector::from_fn(dim, |i, _| 0.01 * i as f64);
        let rp = make_reduced(&obj, a.clone(), p.clone()).unwrap();
        let y: Vec<f64> = (0..d).map(|j| 0.1 * (j as f64 + 1.0)).collect();
        let x = rp.embed(&y);
        let want = &p + &a * DVector::from_column_slice(&y);
        prop_assert!((x - want).norm() < 1e-14);
    }

    #[test]
    fn run_traces_are_consistent(seed in 0u64..200) {
        let rng = RngState::from_seed(seed);
        let obj = problem("six-hump camel", 12, &rng).unwrap();
        let stop = StopConfig { max_embeddings: Some(6), ..Default::default() };
        let res = run_xrego(
            &obj,
            &PStrategy::AdaptiveBest,
            &DimensionSchedule::Increasing { d_lb: 1 },
            &SolverSpec::cheap(),
            &stop,
            &rng.labeled("run"),
        )
        .unwrap();
        prop_assert_eq!(res.trace.len(), res.embeddings);
        for w in res.trace.windows(2) {
            prop_assert!(w[1].f_opt <= w[0].f_opt);
            prop_assert!(w[1].cumulative_evals > w[0].cumulative_evals);
            prop_assert!(w[1].d >= w[0].d);
        }
        prop_assert_eq!(res.trace.last().unwrap().cumulative_evals, res.total_evals);
        prop_assert!((res.f_opt - obj.evaluate(&res.x_opt)).abs() < 1e-12);
    }
}

#[test]
fn nelder_mead_finds_a_shifted_quadratic() {
    let c = [0.3, -0.2, 0.7];
    let f = |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let out = nelder_mead::minimize(f, &[0.0; 3], &nelder_mead::Options::default());
    assert!(out.converged);
    assert!(out.f < 1e-10, "f = {}", out.f);
}
