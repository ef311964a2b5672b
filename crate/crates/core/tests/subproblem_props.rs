mod common;

use common::{dist, norm, primal_objective, primal_oracle, random_data};
use intervalcg::ivm::{IntervalFunction, MultiObjective};
use intervalcg::problems::{lookup, registry, sample_start};
use intervalcg::qp::QpSolver;
use intervalcg::subproblem::{oracle_direction, solve_direction, solve_direction_data, LinearizationData};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn data_for(seed: u64, max_n: usize) -> LinearizationData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1 + (seed % max_n as u64) as usize;
    let m = 1 + ((seed / 7) % 3) as usize;
    random_data(&mut rng, n, m)
}

fn sums_widths(d: &LinearizationData) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let m = d.num_objectives();
    (
        (0..m).map(|i| d.sum_vec(i).to_vec()).collect(),
        (0..m).map(|i| d.width_vec(i).to_vec()).collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn xi_is_nonpositive_and_consistent(seed in any::<u64>()) {
        let d = data_for(seed, 4);
        let r = solve_direction_data(&d, &QpSolver::default()).unwrap();
        prop_assert!(r.xi <= 0.0);
        let recomputed = d.psi(&r.v) + 0.5 * norm(&r.v).powi(2);
        prop_assert!((r.xi - recomputed).abs() <= 1e-8);
        if r.xi < 0.0 {
            prop_assert!(r.psi_at_v <= r.xi && r.psi_at_v < 0.0);
        }
        let total: f64 = r.multipliers.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_independent_primal_oracle(seed in any::<u64>()) {
        let d = data_for(seed, 2);
        let r = solve_direction_data(&d, &QpSolver::default()).unwrap();
        let (v, val) = primal_oracle(&d);
        let (s, w) = sums_widths(&d);
        prop_assert!((r.xi - val).abs() <= 1e-6, "qp {} primal {}", r.xi, val);
        // the QP value cannot beat the true minimum by more than rounding
        prop_assert!(r.xi >= primal_objective(&s, &w, &v) - 1e-9);
        prop_assert!(dist(&r.v, &v) <= 1e-4, "{:?} vs {:?}", r.v, v);
    }

    #[test]
    fn dual_oracle_bounds_qp_value(seed in any::<u64>()) {
        let d = data_for(seed, 4);
        let r = solve_direction_data(&d, &QpSolver::default()).unwrap();
        let o = oracle_direction(&d, 60);
        prop_assert!(o.value <= r.xi + 1e-9);
        prop_assert!(r.xi - o.value <= 1e-6);
    }

    #[test]
    fn scaled_gradients_match_rescaled_qp(seed in any::<u64>(), kappa in 0.1f64..10.0) {
        let d = data_for(seed, 3);
        let scaled = d.scaled(kappa);
        let r = solve_direction_data(&scaled, &QpSolver::default()).unwrap();
        // re-solve the scaled QP directly and read off the v block
        let sol = QpSolver::default().solve(&scaled.to_qp()).unwrap();
        let v: Vec<f64> = sol.z.rows(0, d.dim()).iter().copied().collect();
        prop_assert!(dist(&r.v, &v) <= 1e-6 * (1.0 + norm(&v)));
        // substituting v = κu gives v_κ = κ v_1 and ξ_κ = κ² ξ_1
        let base = solve_direction_data(&d, &QpSolver::default()).unwrap();
        let expected: Vec<f64> = base.v.iter().map(|x| kappa * x).collect();
        prop_assert!(dist(&r.v, &expected) <= 1e-6 * (1.0 + norm(&expected)));
        prop_assert!((r.xi - kappa * kappa * base.xi).abs() <= 1e-7 * (1.0 + r.xi.abs()));
    }

    #[test]
    fn extreme_scales_keep_the_scaling_law(seed in any::<u64>(), e in -6i32..=6) {
        let kappa = 10f64.powi(e);
        let d = data_for(seed, 3);
        let base = solve_direction_data(&d, &QpSolver::default()).unwrap();
        let r = solve_direction_data(&d.scaled(kappa), &QpSolver::default()).unwrap();
        let expected: Vec<f64> = base.v.iter().map(|x| kappa * x).collect();
        prop_assert!(dist(&r.v, &expected) <= 1e-6 * kappa * (1.0 + norm(&base.v)));
        prop_assert!((r.xi - kappa * kappa * base.xi).abs() <= 1e-7 * kappa * kappa * (1.0 + base.xi.abs()));
    }

    #[test]
    fn auxiliary_blocks_are_consistent(seed in any::<u64>()) {
        let d = data_for(seed, 4);
        let n = d.dim();
        let sol = QpSolver::default().solve(&d.to_qp()).unwrap();
        let v: Vec<f64> = sol.z.rows(0, n).iter().copied().collect();
        for j in 0..n {
            prop_assert!((sol.z[n + j] - v[j].abs()).abs() <= 1e-6, "u_{} = {} vs |v| = {}", j, sol.z[n + j], v[j].abs());
        }
        prop_assert!((sol.z[2 * n] - d.psi(&v)).abs() <= 1e-6);
    }
}

#[test]
fn registry_gradients_match_finite_differences() {
    for p in registry() {
        for seed in 0..20 {
            let x = sample_start(&p, 1000 + seed);
            for f in p.mo.objectives() {
                let err = f.finite_diff_check(&x, 1e-6).unwrap();
                assert!(err < 1e-5, "{}: gradient error {err} at {x:?}", p.name);
            }
        }
    }
}

#[test]
fn registry_widths_are_proper() {
    for p in registry() {
        for seed in 0..20 {
            let x = sample_start(&p, seed);
            for iv in p.mo.eval(&x).unwrap() {
                if p.name == "deg-real-sd" {
                    assert!(iv.is_degenerate());
                } else {
                    assert!(iv.width() > 0.0, "{}", p.name);
                }
            }
        }
    }
}

#[test]
fn gh_gradients_are_ordered_and_deterministic() {
    for p in registry() {
        let x = sample_start(&p, 5);
        let a = p.mo.gh_gradients(&x).unwrap();
        let b = p.mo.gh_gradients(&x).unwrap();
        assert_eq!(a, b);
        assert_eq!(p.mo.eval(&x).unwrap(), p.mo.eval(&x).unwrap());
        for g in &a {
            assert!(g.components.iter().all(|c| c.lo() <= c.hi()));
        }
    }
}

#[test]
fn degenerate_objective_has_point_gradients() {
    let f = IntervalFunction::degenerate(
        2,
        |x: &[f64]| x[0] * x[0] + 3.0 * x[1],
        |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            g[1] = 3.0;
        },
    );
    let g = f.gh_gradient(&[1.5, -2.0]).unwrap();
    assert!(g.components.iter().all(|c| c.is_degenerate()));
    assert_eq!(g.lower(), vec![3.0, 3.0]);
}

#[test]
fn shared_minimizer_is_critical() {
    let p = lookup("iq-shared-min").unwrap();
    let r = solve_direction(&p.mo, &[0.0, 0.0], &QpSolver::default()).unwrap();
    assert!(r.xi.abs() <= 1e-8);
    assert!(norm(&r.v) <= 1e-8);
}

#[test]
fn single_real_objective_gives_negative_gradient() {
    let p = lookup("deg-real-sd").unwrap();
    for seed in 0..10 {
        let x = sample_start(&p, seed);
        let r = solve_direction(&p.mo, &x, &QpSolver::default()).unwrap();
        let expected: Vec<f64> = x.iter().enumerate().map(|(j, v)| -((j + 1) as f64) * v).collect();
        assert!(dist(&r.v, &expected) <= 1e-7);
    }
}

#[test]
fn mismatched_point_is_rejected() {
    let mo: MultiObjective = lookup("iq-convex-2").unwrap().mo;
    assert!(solve_direction(&mo, &[1.0], &QpSolver::default()).is_err());
}
