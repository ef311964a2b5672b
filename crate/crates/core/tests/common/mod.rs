//! Test-side helpers and an independent primal oracle for the direction
//! subproblem.
#![allow(dead_code)]

use intervalcg::subproblem::LinearizationData;
use rand::Rng;

/// Random sums in U[-5, 5] and widths in U[0, 2].
pub fn random_data<R: Rng>(rng: &mut R, n: usize, m: usize) -> LinearizationData {
    let sum = (0..m).map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    let width = (0..m).map(|_| (0..n).map(|_| rng.random_range(0.0..2.0)).collect()).collect();
    LinearizationData::new(sum, width).unwrap()
}

/// `max_i (½ s_iᵀv + ½ w_iᵀ|v|) + ½‖v‖²` evaluated from scratch.
pub fn primal_objective(sum: &[Vec<f64>], width: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (s, w) in sum.iter().zip(width) {
        let g: f64 = (0..v.len()).map(|j| 0.5 * s[j] * v[j] + 0.5 * w[j] * v[j].abs()).sum();
        worst = worst.max(g);
    }
    worst + 0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

const GOLDEN_STEPS: usize = 90;

fn golden(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_STEPS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Minimizes the strongly convex primal objective by nested golden-section
/// search, one coordinate per level. Works for `n ≤ 3` in reasonable time.
pub fn primal_oracle(data: &LinearizationData) -> (Vec<f64>, f64) {
    let n = data.dim();
    let m = data.num_objectives();
    let sum: Vec<Vec<f64>> = (0..m).map(|i| data.sum_vec(i).to_vec()).collect();
    let width: Vec<Vec<f64>> = (0..m).map(|i| data.width_vec(i).to_vec()).collect();
    let bound: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| 0.5 * (sum[i][j].abs() + width[i][j])).fold(0.0, f64::max) + 1e-3)
        .collect();

    fn level(
        j: usize,
        v: &mut Vec<f64>,
        bound: &[f64],
        sum: &[Vec<f64>],
        width: &[Vec<f64>],
    ) -> f64 {
        if j == v.len() {
            return primal_objective(sum, width, v);
        }
        let (x, fx) = golden(-bound[j], bound[j], |t| {
            v[j] = t;
            level(j + 1, v, bound, sum, width)
        });
        v[j] = x;
        level(j + 1, v, bound, sum, width);
        fx
    }

    let mut v = vec![0.0; n];
    let val = level(0, &mut v, &bound, &sum, &width);
    (v, val)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
