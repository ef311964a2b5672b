//! The direction-finding subproblem.
//!
//! At a point `x` every objective contributes the endpoint-sum vector
//! `s_i = ∇G_i,lo + ∇G_i,hi` and the width vector `w_i = |∇G_i,hi − ∇G_i,lo|`
//! of its gH-gradient. The upper linearization is
//! `g_i(v) = ½ s_iᵀv + ½ w_iᵀ|v|`, `ψ(v) = max_i g_i(v)`, and the steepest
//! descent-like direction `v(x)` minimizes `ψ(v) + ½‖v‖²` with optimal value
//! `ξ(x) ≤ 0`. The minimization is carried out through the QP
//!
//! ```text
//! min τ + ½‖v‖²  s.t.  s_iᵀv + w_iᵀu ≤ 2τ,  −u ≤ v ≤ u
//! ```
//!
//! in the variables `(v, u, τ)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ivm::MultiObjective;
use crate::qp::{QpInstance, QpSolver, QpStatus};

/// Per-objective sum and width vectors of the gH-gradients at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizationData {
    sum: Vec<Vec<f64>>,
    width: Vec<Vec<f64>>,
}

impl LinearizationData {
    /// Assembles the data from explicit sum and width vectors.
    pub fn new(sum: Vec<Vec<f64>>, width: Vec<Vec<f64>>) -> Result<Self> {
        if sum.is_empty() || sum.len() != width.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len().max(1),
                got: width.len(),
            });
        }
        let n = sum[0].len();
        for (s, w) in sum.iter().zip(&width) {
            if s.len() != n || w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: if s.len() != n { s.len() } else { w.len() },
                });
            }
            if w.iter().any(|&wj| !(wj >= 0.0)) {
                return Err(Error::InvalidConfig("gradient widths must be nonnegative".into()));
            }
            if s.iter().any(|v| !v.is_finite()) || w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalBreakdown("non-finite gradient data".into()));
            }
        }
        Ok(LinearizationData { sum, width })
    }

    /// Evaluates the endpoint gradients of every objective at `x`.
    pub fn at(mo: &MultiObjective, x: &[f64]) -> Result<Self> {
        let n = mo.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let mut gl = vec![0.0; n];
        let mut gu = vec![0.0; n];
        let mut sum = Vec::with_capacity(mo.num_objectives());
        let mut width = Vec::with_capacity(mo.num_objectives());
        for f in mo.objectives() {
            f.endpoint_gradients(x, &mut gl, &mut gu);
            sum.push(gl.iter().zip(&gu).map(|(a, b)| a + b).collect());
            width.push(gl.iter().zip(&gu).map(|(a, b)| (b - a).abs()).collect());
        }
        LinearizationData::new(sum, width)
    }

    pub fn dim(&self) -> usize {
        self.sum[0].len()
    }

    pub fn num_objectives(&self) -> usize {
        self.sum.len()
    }

    pub fn sum_vec(&self, i: usize) -> &[f64] {
        &self.sum[i]
    }

    pub fn width_vec(&self, i: usize) -> &[f64] {
        &self.width[i]
    }

    /// Multiplies all gradients by `kappa > 0`.
    /// Largest entry of any sum or width vector in absolute value.
    pub fn max_abs(&self) -> f64 {
        self.sum
            .iter()
            .chain(&self.width)
            .flatten()
            .fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn scaled(&self, kappa: f64) -> Self {
        let scale = |vs: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            vs.iter().map(|v| v.iter().map(|x| kappa * x).collect()).collect()
        };
        LinearizationData {
            sum: scale(&self.sum),
            width: scale(&self.width),
        }
    }

    /// Upper endpoint of the linearization of objective `i` along `v`.
    pub fn g_upper(&self, i: usize, v: &[f64]) -> f64 {
        let (lin, abs) = self.parts(i, v);
        0.5 * lin + 0.5 * abs
    }

    /// Lower endpoint of the linearization of objective `i` along `v`.
    pub fn g_lower(&self, i: usize, v: &[f64]) -> f64 {
        let (lin, abs) = self.parts(i, v);
        0.5 * lin - 0.5 * abs
    }

    fn parts(&self, i: usize, v: &[f64]) -> (f64, f64) {
        let s = &self.sum[i];
        let w = &self.width[i];
        let mut lin = 0.0;
        let mut abs = 0.0;
        for j in 0..v.len() {
            lin += s[j] * v[j];
            abs += w[j] * v[j].abs();
        }
        (lin, abs)
    }

    /// `ψ(v) = max_i g_upper(i, v)`.
    pub fn psi(&self, v: &[f64]) -> f64 {
        (0..self.num_objectives())
            .map(|i| self.g_upper(i, v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The QP in `(v, u, τ)` whose `v`-block solves the subproblem.
    pub fn to_qp(&self) -> QpInstance {
        let n = self.dim();
        let m = self.num_objectives();
        let d = 2 * n + 1;
        let p = m + 2 * n;

        let mut q = DMatrix::<f64>::zeros(d, d);
        for j in 0..n {
            q[(j, j)] = 1.0;
        }
        let mut c = DVector::<f64>::zeros(d);
        c[2 * n] = 1.0;

        let mut a = DMatrix::<f64>::zeros(p, d);
        for i in 0..m {
            for j in 0..n {
                a[(i, j)] = self.sum[i][j];
                a[(i, n + j)] = self.width[i][j];
            }
            a[(i, 2 * n)] = -2.0;
        }
        for j in 0..n {
            let r = m + 2 * j;
            a[(r, j)] = 1.0;
            a[(r, n + j)] = -1.0;
            a[(r + 1, j)] = -1.0;
            a[(r + 1, n + j)] = -1.0;
        }
        QpInstance::new(q, c, a, DVector::zeros(p)).expect("subproblem QP is well formed")
    }
}

/// `v(x)`, `ξ(x)` and diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub v: Vec<f64>,
    pub xi: f64,
    pub psi_at_v: f64,
    /// Weights on the objectives, normalized to the simplex.
    pub multipliers: Vec<f64>,
    /// Set when the raw multipliers summed to (almost) zero and uniform
    /// weights were reported instead.
    pub multipliers_degenerate: bool,
    pub qp_iterations: usize,
}

impl DirectionResult {
    pub fn norm_v(&self) -> f64 {
        self.v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace_line(&self, k: usize) -> DirectionTraceLine {
        DirectionTraceLine {
            k,
            xi: self.xi,
            psi_at_v: self.psi_at_v,
            norm_v: self.norm_v(),
        }
    }
}

/// One JSON-lines record of a run trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionTraceLine {
    pub k: usize,
    pub xi: f64,
    pub psi_at_v: f64,
    pub norm_v: f64,
}

/// Computes `v(x)` and `ξ(x)` for `mo` at `x`.
pub fn solve_direction(mo: &MultiObjective, x: &[f64], qp: &QpSolver) -> Result<DirectionResult> {
    let data = LinearizationData::at(mo, x)?;
    solve_direction_data(&data, qp)
}

/// Same as [`solve_direction`] on precomputed linearization data.
pub fn solve_direction_data(data: &LinearizationData, qp: &QpSolver) -> Result<DirectionResult> {
    let n = data.dim();
    let m = data.num_objectives();
    // v scales linearly with the data, so solve the unit-scale problem
    let scale = data.max_abs();
    let kappa = if scale > 0.0 && scale.is_finite() { 1.0 / scale } else { 1.0 };
    let inst = data.scaled(kappa).to_qp();
    let sol = qp.solve(&inst)?;
    match sol.status {
        QpStatus::Solved => {}
        QpStatus::Infeasible => return Err(Error::QpInfeasible),
        QpStatus::MaxIter => {
            return Err(Error::QpNotConverged {
                iterations: sol.iterations,
            })
        }
    }

    let mut v: Vec<f64> = sol.z.rows(0, n).iter().map(|x| x / kappa).collect();
    let mut psi_at_v = data.psi(&v);
    let mut xi = psi_at_v + 0.5 * v.iter().map(|x| x * x).sum::<f64>();
    // v = 0 is always feasible with value 0
    if !(xi <= 0.0) {
        v.iter_mut().for_each(|x| *x = 0.0);
        psi_at_v = 0.0;
        xi = 0.0;
    }

    let raw: Vec<f64> = sol.duals.iter().take(m).map(|y| y.max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    let (multipliers, multipliers_degenerate) = if total > 1e-12 {
        (raw.iter().map(|y| y / total).collect(), false)
    } else {
        (vec![1.0 / m as f64; m], true)
    };

    Ok(DirectionResult {
        v,
        xi,
        psi_at_v,
        multipliers,
        multipliers_degenerate,
        qp_iterations: sol.iterations,
    })
}

/// Pareto-criticality test `ξ > −eps`.
pub fn is_pareto_critical(res: &DirectionResult, eps: f64) -> bool {
    assert!(eps > 0.0, "criticality tolerance must be positive");
    res.xi > -eps
}

/// Output of [`oracle_direction`].
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub v: Vec<f64>,
    /// Best dual value found; a lower bound on `ξ`.
    pub value: f64,
    pub weights: Vec<f64>,
    /// False when a second grid point came within `1e-9` of the best dual
    /// value, so the maximizing weights may not be unique.
    pub unique_argmax: bool,
}

/// Minimizer of `Σ λ_i g_upper(i, v) + ½‖v‖²` for fixed simplex weights:
/// componentwise soft-thresholding. Returns `(v, value)`.
pub fn weighted_minimizer(data: &LinearizationData, weights: &[f64]) -> (Vec<f64>, f64) {
    let n = data.dim();
    let mut v = vec![0.0; n];
    let mut value = 0.0;
    for j in 0..n {
        let mut a = 0.0;
        let mut c = 0.0;
        for (i, &l) in weights.iter().enumerate() {
            a += 0.5 * l * data.sum[i][j];
            c += 0.5 * l * data.width[i][j];
        }
        let shrunk = (a.abs() - c).max(0.0);
        v[j] = -a.signum() * shrunk;
        value -= 0.5 * shrunk * shrunk;
    }
    (v, value)
}

fn dual_value(data: &LinearizationData, weights: &[f64]) -> f64 {
    weighted_minimizer(data, weights).1
}

/// Independent check of the subproblem through its dual: maximize the
/// soft-threshold dual value over a simplex grid with `grid_density`
/// subdivisions, then refine the best grid point by pairwise mass
/// transfers with a shrinking step.
pub fn oracle_direction(data: &LinearizationData, grid_density: usize) -> OracleResult {
    assert!(grid_density >= 1, "grid density must be positive");
    let m = data.num_objectives();
    let h = 1.0 / grid_density as f64;

    let mut best_w = vec![0.0; m];
    let mut best = f64::NEG_INFINITY;
    let mut values = Vec::new();
    let mut counts = vec![0usize; m];
    loop {
        // compositions of grid_density into m parts; the last part absorbs the rest
        let used: usize = counts[..m - 1].iter().sum();
        if used <= grid_density {
            counts[m - 1] = grid_density - used;
            let w: Vec<f64> = counts.iter().map(|&k| k as f64 * h).collect();
            let val = dual_value(data, &w);
            values.push(val);
            if val > best {
                best = val;
                best_w = w;
            }
        }
        if !next_composition(&mut counts[..m - 1], grid_density) {
            break;
        }
    }
    let ties = values.iter().filter(|&&v| v >= best - 1e-9).count();

    let mut step = h;
    while step > 1e-14 {
        let mut improved = false;
        for from in 0..m {
            for to in 0..m {
                if from == to || best_w[from] <= 0.0 {
                    continue;
                }
                let delta = step.min(best_w[from]);
                let mut trial = best_w.clone();
                trial[from] -= delta;
                trial[to] += delta;
                let val = dual_value(data, &trial);
                if val > best {
                    best = val;
                    best_w = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    let (v, value) = weighted_minimizer(data, &best_w);
    OracleResult {
        v,
        value,
        weights: best_w,
        unique_argmax: ties <= 1,
    }
}

/// Odometer over the first `m-1` counts with total at most `limit`.
fn next_composition(counts: &mut [usize], limit: usize) -> bool {
    for k in (0..counts.len()).rev() {
        counts[k] += 1;
        if counts.iter().sum::<usize>() <= limit {
            return true;
        }
        counts[k] = 0;
    }
    false
}
