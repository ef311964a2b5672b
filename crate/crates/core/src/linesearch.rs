//! Wolfe-type step lengths for interval-valued objectives.
//!
//! With `ψ0 = ψ_x(d) < 0`, a step `t` gives sufficient decrease when every
//! objective satisfies `G_i(x + td) ⪯ G_i(x) ⊕ [ρtψ0, ρtψ0]`, and the
//! curvature test compares `h(t) = ψ_{x+td}(d)` with `σψ0`.
//! The strong variant uses `|h(t)| ≤ σ|ψ0|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ivm::MultiObjective;
use crate::subproblem::LinearizationData;

/// Which curvature test is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WolfeMode {
    Standard,
    Strong,
}

impl WolfeMode {
    /// The inequality as implemented, for run logs.
    pub fn curvature_rule(&self) -> &'static str {
        match self {
            WolfeMode::Standard => "psi(x+td; d) >= sigma*psi(x; d)",
            WolfeMode::Strong => "|psi(x+td; d)| <= sigma*|psi(x; d)|",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolfeParams {
    pub rho: f64,
    pub sigma: f64,
    pub mode: WolfeMode,
    pub t_init: f64,
    pub t_max: f64,
    pub max_brackets: usize,
    pub max_zoom: usize,
    pub max_evals: usize,
}

impl WolfeParams {
    /// Default budgets with the given coefficients.
    pub fn new(rho: f64, sigma: f64, mode: WolfeMode) -> Result<Self> {
        let p = WolfeParams {
            rho,
            sigma,
            mode,
            t_init: 1.0,
            t_max: 1e6,
            max_brackets: 60,
            max_zoom: 60,
            max_evals: 5000,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.rho && self.rho < self.sigma && self.sigma < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "Wolfe coefficients need 0 < rho < sigma < 1, got rho={} sigma={}",
                self.rho, self.sigma
            )));
        }
        if !(self.t_init > 0.0 && self.t_init.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_init must be positive, got {}", self.t_init)));
        }
        if !(self.t_max >= self.t_init) || !self.t_max.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "t_max must be finite and at least t_init, got {}",
                self.t_max
            )));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidConfig("max_evals must be positive".into()));
        }
        Ok(())
    }
}

impl Default for WolfeParams {
    fn default() -> Self {
        WolfeParams::new(1e-3, 0.1, WolfeMode::Strong).expect("valid defaults")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Satisfied {
    Both,
    DecreaseOnly,
    Failed,
}

/// One trial step. `psi` is absent when the sufficient-decrease test
/// already failed and the curvature value was not needed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub t: f64,
    pub merit: f64,
    pub psi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSearchOutcome {
    pub t: f64,
    /// Objective evaluations.
    pub evals: usize,
    /// Gradient evaluations.
    pub grad_evals: usize,
    pub satisfied: Satisfied,
    /// `ψ_{x+td}(d)` at the returned step, NaN if never evaluated.
    pub psi_at_t: f64,
    pub trace: Vec<Trial>,
}

fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + t * di).collect()
}

fn endpoint_values(mo: &MultiObjective, x: &[f64]) -> Vec<(f64, f64)> {
    mo.objectives().iter().map(|f| f.endpoints(x)).collect()
}

/// `A(t)`: the largest violation of the sufficient-decrease inequalities.
fn merit(mo: &MultiObjective, base: &[(f64, f64)], x: &[f64], d: &[f64], t: f64, rho: f64, psi0: f64) -> f64 {
    let xt = axpy(x, t, d);
    let shift = rho * t * psi0;
    let mut worst = f64::NEG_INFINITY;
    for (f, &(lo0, hi0)) in mo.objectives().iter().zip(base) {
        let (lo, hi) = f.endpoints(&xt);
        let a = (lo - lo0 - shift).max(hi - hi0 - shift);
        if a.is_nan() {
            return f64::INFINITY;
        }
        worst = worst.max(a);
    }
    worst
}

/// `ψ_{x+td}(d)`.
pub fn directional_psi(mo: &MultiObjective, x: &[f64], d: &[f64], t: f64) -> Result<f64> {
    let xt = axpy(x, t, d);
    Ok(LinearizationData::at(mo, &xt)?.psi(d))
}

pub fn sufficient_decrease_holds(mo: &MultiObjective, x: &[f64], d: &[f64], t: f64, rho: f64, psi0: f64) -> bool {
    let base = endpoint_values(mo, x);
    merit(mo, &base, x, d, t, rho, psi0) <= 0.0
}

fn curvature_ok(h: f64, sigma: f64, psi0: f64, mode: WolfeMode) -> bool {
    match mode {
        WolfeMode::Standard => h >= sigma * psi0,
        WolfeMode::Strong => h.abs() <= sigma * psi0.abs(),
    }
}

pub fn curvature_holds(
    mo: &MultiObjective,
    x: &[f64],
    d: &[f64],
    t: f64,
    sigma: f64,
    psi0: f64,
    mode: WolfeMode,
) -> bool {
    match directional_psi(mo, x, d, t) {
        Ok(h) => curvature_ok(h, sigma, psi0, mode),
        Err(_) => false,
    }
}

struct Searcher<'a> {
    mo: &'a MultiObjective,
    x: &'a [f64],
    d: &'a [f64],
    psi0: f64,
    p: &'a WolfeParams,
    base: Vec<(f64, f64)>,
    evals: usize,
    grad_evals: usize,
    trace: Option<Vec<Trial>>,
    last_decrease: Option<(f64, f64)>,
}

enum Probe {
    /// Sufficient decrease failed or the merit did not improve.
    Worse,
    Ok { merit: f64, psi: f64 },
}

impl Searcher<'_> {
    fn probe(&mut self, t: f64, reference: f64) -> Result<Probe> {
        self.evals += 1;
        let a = merit(self.mo, &self.base, self.x, self.d, t, self.p.rho, self.psi0);
        if a > 0.0 || a >= reference {
            if let Some(tr) = self.trace.as_mut() {
                tr.push(Trial { t, merit: a, psi: None });
            }
            if a <= 0.0 {
                self.last_decrease = Some((t, f64::NAN));
            }
            return Ok(Probe::Worse);
        }
        let h = directional_psi(self.mo, self.x, self.d, t)?;
        self.grad_evals += 1;
        if let Some(tr) = self.trace.as_mut() {
            tr.push(Trial { t, merit: a, psi: Some(h) });
        }
        self.last_decrease = Some((t, h));
        Ok(Probe::Ok { merit: a, psi: h })
    }

    fn out_of_budget(&self) -> bool {
        self.evals >= self.p.max_evals
    }

    fn finish(self, found: Option<(f64, f64)>) -> LineSearchOutcome {
        let trace = self.trace.unwrap_or_default();
        match found {
            Some((t, h)) => LineSearchOutcome {
                t,
                evals: self.evals,
                grad_evals: self.grad_evals,
                satisfied: Satisfied::Both,
                psi_at_t: h,
                trace,
            },
            None => match self.last_decrease {
                Some((t, h)) => LineSearchOutcome {
                    t,
                    evals: self.evals,
                    grad_evals: self.grad_evals,
                    satisfied: Satisfied::DecreaseOnly,
                    psi_at_t: h,
                    trace,
                },
                None => LineSearchOutcome {
                    t: trace.last().map_or(self.p.t_init, |tr| tr.t),
                    evals: self.evals,
                    grad_evals: self.grad_evals,
                    satisfied: Satisfied::Failed,
                    psi_at_t: f64::NAN,
                    trace,
                },
            },
        }
    }

    /// Bisection on `(lo, hi)` where `lo` decreases with `h(lo) < σψ0`.
    fn zoom(&mut self, mut lo: f64, mut a_lo: f64, mut hi: f64) -> Result<Option<(f64, f64)>> {
        let target = self.p.sigma * self.psi0;
        for _ in 0..self.p.max_zoom {
            if self.out_of_budget() {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            match self.probe(mid, a_lo)? {
                Probe::Worse => hi = mid,
                Probe::Ok { merit, psi } => {
                    if curvature_ok(psi, self.p.sigma, self.psi0, self.p.mode) {
                        return Ok(Some((mid, psi)));
                    }
                    if psi < target {
                        lo = mid;
                        a_lo = merit;
                    } else {
                        hi = mid;
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Finds a Wolfe step along `d` from `x` by bracketing and bisection.
pub fn search(mo: &MultiObjective, x: &[f64], d: &[f64], params: &WolfeParams) -> Result<LineSearchOutcome> {
    search_traced(mo, x, d, params, false)
}

/// [`search`] that optionally records every trial step.
pub fn search_traced(
    mo: &MultiObjective,
    x: &[f64],
    d: &[f64],
    params: &WolfeParams,
    record: bool,
) -> Result<LineSearchOutcome> {
    params.validate()?;
    if x.len() != mo.dim() || d.len() != mo.dim() {
        return Err(Error::DimensionMismatch {
            expected: mo.dim(),
            got: if x.len() != mo.dim() { x.len() } else { d.len() },
        });
    }
    let psi0 = LinearizationData::at(mo, x)?.psi(d);
    if !(psi0 < 0.0) {
        return Err(Error::NotDescentDirection { psi: psi0 });
    }

    let mut s = Searcher {
        mo,
        x,
        d,
        psi0,
        p: params,
        base: endpoint_values(mo, x),
        evals: 0,
        grad_evals: 0,
        trace: record.then(Vec::new),
        last_decrease: None,
    };

    let (mut prev, mut a_prev) = (0.0, 0.0);
    let mut t = params.t_init;
    let mut found = None;
    for _ in 0..params.max_brackets {
        if s.out_of_budget() {
            break;
        }
        match s.probe(t, a_prev)? {
            Probe::Worse => {
                found = s.zoom(prev, a_prev, t)?;
                break;
            }
            Probe::Ok { merit, psi } => {
                if curvature_ok(psi, params.sigma, psi0, params.mode) {
                    found = Some((t, psi));
                    break;
                }
                if psi > params.sigma * psi0.abs() {
                    found = s.zoom(prev, a_prev, t)?;
                    break;
                }
                prev = t;
                a_prev = merit;
            }
        }
        if t >= params.t_max {
            break;
        }
        t = (2.0 * t).min(params.t_max);
    }
    Ok(s.finish(found))
}
