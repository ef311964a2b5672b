//! Nonlinear conjugate gradient iteration.
//!
//! Each iteration solves the direction subproblem at `x^k`, stops if
//! `ξ(x^k) > −ε`, and otherwise moves along `d^k = v(x^k) + β_k d^{k−1}`
//! with a Wolfe step.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::ivm::MultiObjective;
use crate::linesearch::{self, Satisfied, WolfeMode, WolfeParams};
use crate::qp::{QpSettings, QpSolver};
use crate::subproblem::{solve_direction_data, DirectionTraceLine, LinearizationData};

/// Denominators at or below this magnitude force a restart.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BetaKind {
    SD,
    FR,
    CD,
    DY,
    #[serde(rename = "mDY")]
    MDY,
}

impl BetaKind {
    pub const ALL: [BetaKind; 5] = [BetaKind::SD, BetaKind::FR, BetaKind::CD, BetaKind::DY, BetaKind::MDY];

    pub fn name(&self) -> &'static str {
        match self {
            BetaKind::SD => "SD",
            BetaKind::FR => "FR",
            BetaKind::CD => "CD",
            BetaKind::DY => "DY",
            BetaKind::MDY => "mDY",
        }
    }
}

impl fmt::Display for BetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BetaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sd" => Ok(BetaKind::SD),
            "fr" => Ok(BetaKind::FR),
            "cd" => Ok(BetaKind::CD),
            "dy" => Ok(BetaKind::DY),
            "mdy" => Ok(BetaKind::MDY),
            _ => Err(Error::InvalidConfig(format!("unknown variant {s:?} (expected SD, FR, CD, DY or mDY)"))),
        }
    }
}

/// A β formula with its scale factor, and `ζ` for mDY.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaVariant {
    pub kind: BetaKind,
    pub scale: f64,
    pub zeta: f64,
}

impl BetaVariant {
    /// The scalings used in the reference experiments: FR 0.98, CD 0.89,
    /// DY 0.81, mDY with `ζ = 1.03`.
    pub fn standard(kind: BetaKind) -> Self {
        let scale = match kind {
            BetaKind::FR => 0.98,
            BetaKind::CD => 0.89,
            BetaKind::DY => 0.81,
            BetaKind::SD | BetaKind::MDY => 1.0,
        };
        BetaVariant { kind, scale, zeta: 1.03 }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            BetaKind::FR | BetaKind::CD | BetaKind::DY if !(0.0..=1.0).contains(&self.scale) => Err(
                Error::InvalidConfig(format!("{} scale must lie in [0, 1], got {}", self.kind, self.scale)),
            ),
            BetaKind::MDY if !(self.zeta > 1.0 && self.zeta.is_finite()) => {
                Err(Error::InvalidConfig(format!("mDY needs zeta > 1, got {}", self.zeta)))
            }
            _ => Ok(()),
        }
    }

    /// Constant `c` of the sufficient descent bound `ψ(d) ≤ c ψ(v)`,
    /// where one is known for this variant.
    pub fn descent_constant(&self, sigma: f64) -> Option<f64> {
        match self.kind {
            BetaKind::CD if self.scale <= 1.0 => Some(1.0 - sigma),
            BetaKind::DY if self.scale <= 1.0 => Some(1.0 / (1.0 + sigma)),
            BetaKind::MDY => Some(self.zeta / (self.zeta + sigma)),
            _ => None,
        }
    }
}

impl fmt::Display for BetaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())
    }
}

/// The ψ values entering β at iteration `k ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaState {
    /// `ψ_{x^k}(v^k)`
    pub psi_v: f64,
    /// `ψ_{x^{k−1}}(v^{k−1})`
    pub psi_v_prev: f64,
    /// `ψ_{x^k}(d^{k−1})`
    pub psi_d_prev_here: f64,
    /// `ψ_{x^{k−1}}(d^{k−1})`
    pub psi_d_prev: f64,
}

pub fn beta(variant: &BetaVariant, state: &BetaState) -> Result<f64> {
    let (num, den) = match variant.kind {
        BetaKind::SD => return Ok(0.0),
        BetaKind::FR => (state.psi_v, state.psi_v_prev),
        BetaKind::CD => (state.psi_v, state.psi_d_prev),
        BetaKind::DY => (-state.psi_v, state.psi_d_prev_here - state.psi_d_prev),
        BetaKind::MDY => (-state.psi_v, state.psi_d_prev_here - variant.zeta * state.psi_d_prev),
    };
    if !num.is_finite() || !den.is_finite() {
        return Err(Error::NumericalBreakdown("non-finite value in beta".into()));
    }
    if den.abs() <= DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator(den));
    }
    let raw = num / den;
    Ok(match variant.kind {
        BetaKind::MDY => raw,
        _ => variant.scale * raw,
    })
}

/// Restricts β to the range that keeps `d^k` a descent direction.
pub fn safeguard_clamp(beta_raw: f64, mu: f64, psi_v: f64, psi_d_prev: f64) -> f64 {
    if psi_d_prev <= 0.0 {
        beta_raw.max(0.0)
    } else {
        beta_raw.clamp(0.0, -mu * psi_v / psi_d_prev)
    }
}

/// `d^0 = v^0`, `d^k = v^k + β_k d^{k−1}`.
pub fn direction_update(v: &[f64], beta: f64, d_prev: &[f64], k: usize) -> Vec<f64> {
    if k == 0 {
        return v.to_vec();
    }
    assert_eq!(v.len(), d_prev.len(), "direction dimensions differ");
    v.iter().zip(d_prev).map(|(vi, di)| vi + beta * di).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Safeguard {
    None,
    DescentClamp { mu: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho: f64,
    pub sigma: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub variant: BetaVariant,
    pub wolfe_mode: WolfeMode,
    pub safeguard: Safeguard,
    pub restart_on_nondescent: bool,
    /// Keep every iterate in the record.
    pub record_iterates: bool,
    #[serde(skip)]
    pub qp: QpSettings,
}

impl SolverConfig {
    /// Reference settings: `ρ = 1e-3`, `σ = 0.1`, `ε = 1e-6`, strong Wolfe.
    pub fn new(kind: BetaKind) -> Self {
        SolverConfig {
            rho: 1e-3,
            sigma: 0.1,
            eps: 1e-6,
            max_iter: 10_000,
            variant: BetaVariant::standard(kind),
            wolfe_mode: WolfeMode::Strong,
            safeguard: Safeguard::None,
            restart_on_nondescent: true,
            record_iterates: true,
            qp: QpSettings::default(),
        }
    }

    pub fn wolfe_params(&self) -> Result<WolfeParams> {
        WolfeParams::new(self.rho, self.sigma, self.wolfe_mode)
    }

    pub fn validate(&self) -> Result<()> {
        self.wolfe_params()?;
        self.variant.validate()?;
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {}", self.eps)));
        }
        if let Safeguard::DescentClamp { mu } = self.safeguard {
            if !(0.0..1.0).contains(&mu) {
                return Err(Error::InvalidConfig(format!("safeguard mu must lie in [0, 1), got {mu}")));
            }
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::new(BetaKind::FR)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Critical,
    MaxIter,
    LineSearchFail,
    /// The run aborted with an error, see [`RunRecord::error`].
    Error,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Critical => "Critical",
            RunStatus::MaxIter => "MaxIter",
            RunStatus::LineSearchFail => "LineSearchFail",
            RunStatus::Error => "Error",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Critical" => Ok(RunStatus::Critical),
            "MaxIter" => Ok(RunStatus::MaxIter),
            "LineSearchFail" => Ok(RunStatus::LineSearchFail),
            "Error" => Ok(RunStatus::Error),
            _ => Err(Error::InvalidConfig(format!("unknown run status {s:?}"))),
        }
    }
}

/// Everything recorded about one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub variant: BetaKind,
    pub seed: Option<u64>,
    pub x0: Vec<f64>,
    pub final_x: Vec<f64>,
    pub final_values: Vec<Interval>,
    /// Empty unless the config asked for iterates.
    pub iterates: Vec<Vec<f64>>,
    pub xi_trace: Vec<f64>,
    pub psi_v_trace: Vec<f64>,
    pub norm_v_trace: Vec<f64>,
    pub psi_d_trace: Vec<f64>,
    pub beta_trace: Vec<f64>,
    pub step_trace: Vec<f64>,
    /// `ψ_{x^k}(d^k)² / ‖d^k‖²` per step.
    pub zoutendijk_increments: Vec<f64>,
    /// Running value of `Σ 1/‖d^k‖²`.
    pub inverse_norm_sum: f64,
    /// `ψ_{x^k}(d^k) / ψ_{x^k}(v^k)` per step.
    pub descent_ratios: Vec<f64>,
    pub sufficient_descent_violations: usize,
    pub monotonicity_violations: usize,
    pub denominator_sign_violations: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub status: RunStatus,
    pub error: Option<String>,
    pub wall_time: f64,
    pub func_evals: usize,
    pub grad_evals: usize,
    pub qp_iterations: usize,
    pub curvature_rule: String,
}

impl RunRecord {
    pub fn final_xi(&self) -> f64 {
        self.xi_trace.last().copied().unwrap_or(f64::NAN)
    }

    /// Header matching [`RunRecord::csv_line`].
    pub const CSV_HEADER: &'static str = "problem,variant,seed,iters,status,wall_time,final_xi";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e}",
            self.problem,
            self.variant,
            self.seed.map_or(String::new(), |s| s.to_string()),
            self.iterations,
            self.status,
            self.wall_time,
            self.final_xi()
        )
    }

    /// Per-iteration direction summaries for a JSON-lines trace.
    pub fn direction_trace(&self) -> Vec<DirectionTraceLine> {
        (0..self.xi_trace.len())
            .map(|k| DirectionTraceLine {
                k,
                xi: self.xi_trace[k],
                psi_at_v: self.psi_v_trace[k],
                norm_v: self.norm_v_trace[k],
            })
            .collect()
    }

    /// A record for a run that never started or aborted.
    pub fn failed(problem: &str, cfg: &SolverConfig, seed: Option<u64>, x0: &[f64], err: &Error) -> Self {
        RunRecord {
            problem: problem.to_string(),
            variant: cfg.variant.kind,
            seed,
            x0: x0.to_vec(),
            final_x: x0.to_vec(),
            final_values: Vec::new(),
            iterates: Vec::new(),
            xi_trace: Vec::new(),
            psi_v_trace: Vec::new(),
            norm_v_trace: Vec::new(),
            psi_d_trace: Vec::new(),
            beta_trace: Vec::new(),
            step_trace: Vec::new(),
            zoutendijk_increments: Vec::new(),
            inverse_norm_sum: 0.0,
            descent_ratios: Vec::new(),
            sufficient_descent_violations: 0,
            monotonicity_violations: 0,
            denominator_sign_violations: 0,
            restarts: 0,
            iterations: 0,
            status: RunStatus::Error,
            error: Some(err.to_string()),
            wall_time: 0.0,
            func_evals: 0,
            grad_evals: 0,
            qp_iterations: 0,
            curvature_rule: cfg.wolfe_mode.curvature_rule().to_string(),
        }
    }
}

struct Previous {
    psi_v: f64,
    d: Vec<f64>,
    /// `ψ_{x^{k−1}}(d^{k−1})`
    psi_d: f64,
    /// The step that produced `x^k` satisfied both Wolfe conditions.
    wolfe_step: bool,
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Runs the method from `x0`.
pub fn run(mo: &MultiObjective, x0: &[f64], cfg: &SolverConfig) -> Result<RunRecord> {
    run_seeded(mo, x0, cfg, None)
}

/// [`run`] with the seed that produced `x0` stored in the record.
pub fn run_seeded(mo: &MultiObjective, x0: &[f64], cfg: &SolverConfig, seed: Option<u64>) -> Result<RunRecord> {
    cfg.validate()?;
    if x0.len() != mo.dim() {
        return Err(Error::DimensionMismatch {
            expected: mo.dim(),
            got: x0.len(),
        });
    }
    let started = Instant::now();
    let wolfe = cfg.wolfe_params()?;
    let qp = QpSolver::new(cfg.qp.clone());

    let mut rec = RunRecord::failed(mo.name(), cfg, seed, x0, &Error::InvalidConfig(String::new()));
    rec.error = None;

    let mut x = x0.to_vec();
    let mut values = mo.eval(&x)?;
    rec.func_evals += 1;
    let mut prev: Option<Previous> = None;
    let mut force_restart = false;

    let status = loop {
        if cfg.record_iterates {
            rec.iterates.push(x.clone());
        }
        let k = rec.iterations;
        let data = LinearizationData::at(mo, &x)?;
        rec.grad_evals += 1;
        let dir = solve_direction_data(&data, &qp)?;
        rec.qp_iterations += dir.qp_iterations;
        rec.xi_trace.push(dir.xi);
        rec.psi_v_trace.push(dir.psi_at_v);
        rec.norm_v_trace.push(dir.norm_v());

        if dir.xi > -cfg.eps {
            break RunStatus::Critical;
        }
        if k >= cfg.max_iter {
            break RunStatus::MaxIter;
        }
        let v = dir.v;
        let psi_v = dir.psi_at_v;

        let mut b = 0.0;
        let mut d = v.clone();
        let mut restarted = force_restart || prev.is_none();
        if let (Some(p), false) = (prev.as_ref(), force_restart) {
            let state = BetaState {
                psi_v,
                psi_v_prev: p.psi_v,
                psi_d_prev_here: data.psi(&p.d),
                psi_d_prev: p.psi_d,
            };
            if matches!(cfg.variant.kind, BetaKind::DY | BetaKind::MDY)
                && p.wolfe_step
                && cfg.wolfe_mode == WolfeMode::Strong
                && p.psi_d < 0.0
                && state.psi_d_prev_here - p.psi_d <= 0.0
            {
                rec.denominator_sign_violations += 1;
            }
            match beta(&cfg.variant, &state) {
                Ok(raw) => {
                    b = match cfg.safeguard {
                        Safeguard::None => raw,
                        Safeguard::DescentClamp { mu } => safeguard_clamp(raw, mu, psi_v, state.psi_d_prev_here),
                    };
                    d = direction_update(&v, b, &p.d, k);
                }
                Err(Error::DegenerateDenominator(_)) => {
                    rec.restarts += 1;
                    restarted = true;
                }
                Err(e) => return Err(e),
            }
        }
        force_restart = false;

        let mut psi_d = data.psi(&d);
        if !(psi_d < 0.0) && !restarted {
            if !cfg.restart_on_nondescent {
                break RunStatus::LineSearchFail;
            }
            d = v.clone();
            psi_d = psi_v;
            b = 0.0;
            restarted = true;
            rec.restarts += 1;
        }

        let mut ls = linesearch::search(mo, &x, &d, &wolfe)?;
        rec.func_evals += ls.evals;
        rec.grad_evals += ls.grad_evals;
        if ls.satisfied == Satisfied::Failed && !restarted {
            d = v.clone();
            psi_d = psi_v;
            b = 0.0;
            restarted = true;
            rec.restarts += 1;
            ls = linesearch::search(mo, &x, &d, &wolfe)?;
            rec.func_evals += ls.evals;
            rec.grad_evals += ls.grad_evals;
        }
        if ls.satisfied == Satisfied::Failed {
            break RunStatus::LineSearchFail;
        }
        if ls.satisfied == Satisfied::DecreaseOnly {
            force_restart = true;
        }

        if !restarted && prev.as_ref().is_some_and(|p| p.wolfe_step) && cfg.wolfe_mode == WolfeMode::Strong {
            if let Some(c) = cfg.variant.descent_constant(cfg.sigma) {
                let rhs = c * psi_v;
                if psi_d > rhs + 1e-10 * (1.0 + rhs.abs()) {
                    rec.sufficient_descent_violations += 1;
                }
            }
        }

        let t = ls.t;
        let x_new: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
        let new_values = mo.eval(&x_new)?;
        rec.func_evals += 1;
        if new_values.iter().zip(&values).any(|(n, o)| !n.dominates(o)) {
            rec.monotonicity_violations += 1;
        }

        let dn = norm_sq(&d);
        rec.zoutendijk_increments.push(psi_d * psi_d / dn);
        rec.inverse_norm_sum += 1.0 / dn;
        rec.descent_ratios.push(psi_d / psi_v);
        rec.psi_d_trace.push(psi_d);
        rec.beta_trace.push(b);
        rec.step_trace.push(t);

        prev = Some(Previous {
            psi_v,
            d,
            psi_d,
            wolfe_step: ls.satisfied == Satisfied::Both,
        });
        x = x_new;
        values = new_values;
        rec.iterations += 1;
    };

    rec.status = status;
    rec.final_x = x;
    rec.final_values = values;
    rec.wall_time = started.elapsed().as_secs_f64();
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ivm::IntervalFunction;

    fn state(psi_v: f64, psi_v_prev: f64, here: f64, prev: f64) -> BetaState {
        BetaState {
            psi_v,
            psi_v_prev,
            psi_d_prev_here: here,
            psi_d_prev: prev,
        }
    }

    #[test]
    fn beta_examples() {
        let s = state(-1.0, -2.0, -0.05, -1.0);
        assert_eq!(beta(&BetaVariant::standard(BetaKind::SD), &s).unwrap(), 0.0);
        assert!((beta(&BetaVariant::standard(BetaKind::FR), &s).unwrap() - 0.49).abs() < 1e-15);
        let mdy = beta(&BetaVariant::standard(BetaKind::MDY), &s).unwrap();
        assert!((mdy - 1.0 / 0.98).abs() < 1e-14);
        assert!((beta(&BetaVariant::standard(BetaKind::CD), &s).unwrap() - 0.89).abs() < 1e-15);
        let dy = beta(&BetaVariant::standard(BetaKind::DY), &s).unwrap();
        assert!((dy - 0.81 / 0.95).abs() < 1e-14);
    }

    #[test]
    fn beta_degenerate_denominator() {
        let s = state(-1.0, 0.0, -1.0, -1.0);
        assert!(matches!(
            beta(&BetaVariant::standard(BetaKind::FR), &s),
            Err(Error::DegenerateDenominator(_))
        ));
        assert!(matches!(
            beta(&BetaVariant::standard(BetaKind::DY), &s),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(safeguard_clamp(0.3, 0.5, -1.0, -1.0), 0.3);
        assert_eq!(safeguard_clamp(2.0, 0.5, -1.0, 0.5), 1.0);
        assert_eq!(safeguard_clamp(-0.2, 0.5, -1.0, -1.0), 0.0);
        assert_eq!(safeguard_clamp(-0.2, 0.5, -1.0, 0.5), 0.0);
    }

    #[test]
    fn direction_update_examples() {
        assert_eq!(direction_update(&[1.0, 0.0], 0.5, &[0.0, 2.0], 3), vec![1.0, 1.0]);
        assert_eq!(direction_update(&[1.0, 0.0], 0.5, &[0.0, 2.0], 0), vec![1.0, 0.0]);
        assert_eq!(direction_update(&[1.0, -3.0], 0.0, &[7.0, 2.0], 4), vec![1.0, -3.0]);
    }

    #[test]
    fn variant_validation() {
        let mut v = BetaVariant::standard(BetaKind::FR);
        v.scale = 1.2;
        assert!(v.validate().is_err());
        let mut v = BetaVariant::standard(BetaKind::MDY);
        v.zeta = 1.0;
        assert!(v.validate().is_err());
        assert_eq!("mdy".parse::<BetaKind>().unwrap(), BetaKind::MDY);
        assert!("prp".parse::<BetaKind>().is_err());
    }

    fn half_norm_sq(n: usize) -> MultiObjective {
        let f = IntervalFunction::degenerate(
            n,
            |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            |x: &[f64], g: &mut [f64]| g.copy_from_slice(x),
        );
        MultiObjective::new("half-norm", vec![f]).unwrap()
    }

    #[test]
    fn steepest_descent_on_quadratic() {
        let mo = half_norm_sq(3);
        let rec = run(&mo, &[1.0, -2.0, 0.5], &SolverConfig::new(BetaKind::SD)).unwrap();
        assert_eq!(rec.status, RunStatus::Critical);
        assert!(rec.iterations <= 50);
        assert!(norm_sq(&rec.final_x).sqrt() <= 1e-3);
        assert_eq!(rec.monotonicity_violations, 0);
    }

    #[test]
    fn critical_start_stops_immediately() {
        let mo = half_norm_sq(2);
        let rec = run(&mo, &[0.0, 0.0], &SolverConfig::new(BetaKind::MDY)).unwrap();
        assert_eq!(rec.status, RunStatus::Critical);
        assert_eq!(rec.iterations, 0);
        assert_eq!(rec.xi_trace, vec![0.0]);
    }

    #[test]
    fn max_iter_zero() {
        let mo = half_norm_sq(2);
        let mut cfg = SolverConfig::new(BetaKind::FR);
        cfg.max_iter = 0;
        let rec = run(&mo, &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(rec.status, RunStatus::MaxIter);
        assert_eq!(rec.final_x, vec![1.0, 1.0]);
    }

    #[test]
    fn record_csv_line() {
        let mo = half_norm_sq(2);
        let rec = run_seeded(&mo, &[0.0, 0.0], &SolverConfig::new(BetaKind::CD), Some(9)).unwrap();
        let line = rec.csv_line();
        assert!(line.starts_with("half-norm,CD,9,0,Critical,"), "{line}");
        assert_eq!(line.split(',').count(), RunRecord::CSV_HEADER.split(',').count());
        let json = serde_json::to_string(&rec).unwrap();
        let back: RunRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
    }
}
