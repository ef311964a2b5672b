//! Built-in test problems.
//!
//! Interval objectives are written as `[q(x) − w(x), q(x) + w(x)]` with a
//! smooth center `q` and a half-width `w ≥ 0`. The `-analogue` problems widen
//! the classical deterministic test functions of the same name.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ivm::{IntervalFunction, MultiObjective};

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub name: String,
    pub description: String,
    pub mo: MultiObjective,
    /// Sampling box for random starts.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Points known to be Pareto critical.
    pub known_critical: Vec<Vec<f64>>,
    pub convex: bool,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.mo.dim()
    }

    pub fn num_objectives(&self) -> usize {
        self.mo.num_objectives()
    }

    /// `name n m convex box` as printed by `list-problems`.
    pub fn summary_line(&self) -> String {
        let lo = self.lower.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = self.upper.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let uniform = self.lower.iter().all(|&l| l == lo) && self.upper.iter().all(|&u| u == hi);
        let bx = if uniform {
            format!("[{lo},{hi}]^{}", self.dim())
        } else {
            let parts: Vec<String> = self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(l, u)| format!("[{l},{u}]"))
                .collect();
            parts.join("x")
        };
        format!(
            "{:<16} n={:<3} m={} convex={:<5} box={}",
            self.name,
            self.dim(),
            self.num_objectives(),
            self.convex,
            bx
        )
    }
}

fn dist_sq(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `a‖x − c‖²` as center or width, with its gradient.
fn shifted_square(
    a: f64,
    c: Vec<f64>,
) -> (
    impl Fn(&[f64]) -> f64 + Send + Sync + Clone + 'static,
    impl Fn(&[f64], &mut [f64]) + Send + Sync + Clone + 'static,
) {
    let c2 = c.clone();
    (
        move |x: &[f64]| a * dist_sq(x, &c),
        move |x: &[f64], g: &mut [f64]| {
            for j in 0..x.len() {
                g[j] = 2.0 * a * (x[j] - c2[j]);
            }
        },
    )
}

/// Center `a‖x − c‖²`, half-width `b(1 + ‖x‖²)`.
fn widened_quadratic(n: usize, a: f64, c: Vec<f64>, b: f64) -> IntervalFunction {
    let (q, qg) = shifted_square(a, c);
    let (w, wg) = shifted_square(b, vec![0.0; n]);
    IntervalFunction::from_center_width(n, q, qg, move |x: &[f64]| b + w(x), wg)
}

fn iq_convex_2() -> ProblemSpec {
    let f1 = widened_quadratic(2, 1.0, vec![1.0, 0.0], 0.1);
    let f2 = widened_quadratic(2, 1.0, vec![-1.0, 0.0], 0.1);
    ProblemSpec {
        name: "iq-convex-2".into(),
        description: "two shifted convex quadratics with growing width".into(),
        mo: MultiObjective::new("iq-convex-2", vec![f1, f2]).expect("consistent dims"),
        lower: vec![-5.0; 2],
        upper: vec![5.0; 2],
        known_critical: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]],
        convex: true,
    }
}

fn iq_shared_min() -> ProblemSpec {
    let f1 = widened_quadratic(2, 1.0, vec![0.0, 0.0], 0.05);
    let f2 = widened_quadratic(2, 2.0, vec![0.0, 0.0], 0.05);
    ProblemSpec {
        name: "iq-shared-min".into(),
        description: "two convex quadratics sharing the minimizer 0".into(),
        mo: MultiObjective::new("iq-shared-min", vec![f1, f2]).expect("consistent dims"),
        lower: vec![-5.0; 2],
        upper: vec![5.0; 2],
        known_critical: vec![vec![0.0, 0.0]],
        convex: true,
    }
}

fn bk1_analogue() -> ProblemSpec {
    let b = 0.01;
    let target = [5.0, 5.0];
    let width = move |x: &[f64]| b * (1.0 + dist_sq(x, &[0.0, 0.0]) + dist_sq(x, &target));
    let width_grad = move |x: &[f64], g: &mut [f64]| {
        for j in 0..2 {
            g[j] = b * (2.0 * x[j] + 2.0 * (x[j] - target[j]));
        }
    };
    let (q1, q1g) = shifted_square(1.0, vec![0.0, 0.0]);
    let (q2, q2g) = shifted_square(1.0, target.to_vec());
    let f1 = IntervalFunction::from_center_width(2, q1, q1g, width, width_grad);
    let f2 = IntervalFunction::from_center_width(2, q2, q2g, width, width_grad);
    ProblemSpec {
        name: "bk1-analogue".into(),
        description: "BK1 objectives with width 0.01(1 + f1 + f2)".into(),
        mo: MultiObjective::new("bk1-analogue", vec![f1, f2]).expect("consistent dims"),
        lower: vec![-5.0; 2],
        upper: vec![10.0; 2],
        known_critical: vec![vec![0.0, 0.0], target.to_vec()],
        convex: true,
    }
}

fn fon_analogue() -> ProblemSpec {
    let n = 3;
    let a = 1.0 / (n as f64).sqrt();
    let make = |sign: f64| {
        let c = vec![sign * a; n];
        let c2 = c.clone();
        IntervalFunction::from_center_width(
            n,
            move |x: &[f64]| 1.0 - (-dist_sq(x, &c)).exp(),
            move |x: &[f64], g: &mut [f64]| {
                let e = (-dist_sq(x, &c2)).exp();
                for j in 0..x.len() {
                    g[j] = 2.0 * (x[j] - c2[j]) * e;
                }
            },
            |_: &[f64]| 0.05,
            |_: &[f64], g: &mut [f64]| g.fill(0.0),
        )
    };
    ProblemSpec {
        name: "fon-analogue".into(),
        description: "FON objectives with constant width 0.05".into(),
        mo: MultiObjective::new("fon-analogue", vec![make(-1.0), make(1.0)]).expect("consistent dims"),
        lower: vec![-4.0; n],
        upper: vec![4.0; n],
        known_critical: Vec::new(),
        convex: false,
    }
}

fn deg_real_sd() -> ProblemSpec {
    let n = 10;
    let f = IntervalFunction::degenerate(
        n,
        |x: &[f64]| 0.5 * x.iter().enumerate().map(|(j, v)| (j + 1) as f64 * v * v).sum::<f64>(),
        |x: &[f64], g: &mut [f64]| {
            for j in 0..x.len() {
                g[j] = (j + 1) as f64 * x[j];
            }
        },
    );
    ProblemSpec {
        name: "deg-real-sd".into(),
        description: "real quadratic x'Dx/2 with D = diag(1..10), zero width".into(),
        mo: MultiObjective::new("deg-real-sd", vec![f]).expect("consistent dims"),
        lower: vec![-5.0; n],
        upper: vec![5.0; n],
        known_critical: vec![vec![0.0; n]],
        convex: true,
    }
}

fn nonconvex_hill() -> ProblemSpec {
    let make = |swap: bool| {
        IntervalFunction::from_center_width(
            2,
            move |x: &[f64]| {
                let r = 0.05 * (x[0] * x[0] + x[1] * x[1]);
                if swap {
                    x[0].cos() + x[1].sin() + r
                } else {
                    x[0].sin() + x[1].cos() + r
                }
            },
            move |x: &[f64], g: &mut [f64]| {
                if swap {
                    g[0] = -x[0].sin() + 0.1 * x[0];
                    g[1] = x[1].cos() + 0.1 * x[1];
                } else {
                    g[0] = x[0].cos() + 0.1 * x[0];
                    g[1] = -x[1].sin() + 0.1 * x[1];
                }
            },
            |_: &[f64]| 0.1,
            |_: &[f64], g: &mut [f64]| g.fill(0.0),
        )
    };
    ProblemSpec {
        name: "nonconvex-hill".into(),
        description: "trigonometric pair plus 0.05|x|^2, constant width 0.1".into(),
        mo: MultiObjective::new("nonconvex-hill", vec![make(false), make(true)]).expect("consistent dims"),
        lower: vec![-4.0; 2],
        upper: vec![4.0; 2],
        known_critical: Vec::new(),
        convex: false,
    }
}

/// All built-in problems.
pub fn registry() -> Vec<ProblemSpec> {
    vec![
        iq_convex_2(),
        iq_shared_min(),
        bk1_analogue(),
        fon_analogue(),
        deg_real_sd(),
        nonconvex_hill(),
    ]
}

pub fn names() -> Vec<String> {
    registry().into_iter().map(|p| p.name).collect()
}

pub fn lookup(name: &str) -> Result<ProblemSpec> {
    registry()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}

/// Uniform point in the problem box, a pure function of `seed`.
pub fn sample_start(spec: &ProblemSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    spec.lower
        .iter()
        .zip(&spec.upper)
        .map(|(&l, &u)| l + (u - l) * rng.random::<f64>())
        .collect()
}
