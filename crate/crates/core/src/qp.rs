//! Dense convex QP solver for
//!
//! ```text
//! minimize   ½ zᵀQz + cᵀz
//! subject to Az ≤ b
//! ```
//!
//! with `Q` symmetric positive semidefinite. The iteration is an
//! over-relaxed alternating-direction scheme on the splitting `Az = w`,
//! `w ≤ b`, followed by a polish step that re-solves the KKT system on the
//! detected active set to recover a high-accuracy solution.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 20_000;

/// Problem data `(Q, c, A, b)`.
#[derive(Clone, Debug)]
pub struct QpInstance {
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl QpInstance {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let d = c.len();
        if q.nrows() != d || q.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: q.nrows().max(q.ncols()),
            });
        }
        if a.ncols() != d && a.nrows() > 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: a.ncols(),
            });
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let finite = q.iter().chain(c.iter()).chain(a.iter()).chain(b.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NumericalBreakdown("non-finite QP data".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if (q[(i, j)] - q[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "Q is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        // reshape an empty constraint block to the right width
        let a = if a.nrows() == 0 { DMatrix::zeros(0, d) } else { a };
        Ok(QpInstance { q, c, a, b })
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.q * z)) + self.c.dot(z)
    }

    /// Plain-text dump: a header line per block followed by its rows,
    /// whitespace separated, full precision.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.num_vars();
        let p = self.num_constraints();
        writeln!(w, "# d={d} p={p}")?;
        write_block(&mut w, "Q", &self.q)?;
        writeln!(w, "c 1 {d}")?;
        writeln!(w, "{}", join_row(self.c.iter()))?;
        write_block(&mut w, "A", &self.a)?;
        writeln!(w, "b 1 {p}")?;
        writeln!(w, "{}", join_row(self.b.iter()))?;
        Ok(())
    }
}

fn join_row<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ")
}

fn write_block<W: Write>(w: &mut W, name: &str, m: &DMatrix<f64>) -> io::Result<()> {
    writeln!(w, "{name} {} {}", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        writeln!(w, "{}", join_row(m.row(r).iter()))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum QpStatus {
    Solved,
    MaxIter,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub z: DVector<f64>,
    pub objective: f64,
    pub duals: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub polished: bool,
}

#[derive(Clone, Debug)]
pub struct QpSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Over-relaxation factor.
    pub alpha: f64,
    /// Initial penalty.
    pub rho: f64,
    /// Proximal term on `z`; keeps the linear system definite for PSD `Q`.
    pub sigma: f64,
    /// Penalty rescaling period (iterations).
    pub adapt_every: usize,
    /// Diagonal regularization used by the polish factorization.
    pub reg: f64,
    pub polish: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            alpha: 1.6,
            rho: 0.1,
            sigma: 1e-6,
            adapt_every: 25,
            reg: 1e-10,
            polish: true,
        }
    }
}

const RESIDUAL_CHECK_EVERY: usize = 5;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;

/// Solver object. Owns its settings; every call to [`QpSolver::solve`]
/// allocates its own workspace.
#[derive(Clone, Debug, Default)]
pub struct QpSolver {
    settings: QpSettings,
}

/// Solves `inst` with default settings apart from `tol` and `max_iter`.
pub fn solve(inst: &QpInstance, tol: f64, max_iter: usize) -> Result<QpSolution> {
    QpSolver::new(QpSettings {
        tol,
        max_iter,
        ..QpSettings::default()
    })
    .solve(inst)
}

struct Residuals {
    prim: f64,
    dual: f64,
    eps_prim: f64,
    eps_dual: f64,
    prim_scale: f64,
    dual_scale: f64,
}

impl QpSolver {
    pub fn new(settings: QpSettings) -> Self {
        QpSolver { settings }
    }

    pub fn settings(&self) -> &QpSettings {
        &self.settings
    }

    fn factor(&self, inst: &QpInstance, ata: &DMatrix<f64>, rho: f64) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let d = inst.num_vars();
        let mut k = inst.q.clone() + ata * rho;
        for i in 0..d {
            k[(i, i)] += self.settings.sigma;
        }
        k.cholesky()
            .ok_or_else(|| Error::NumericalBreakdown("ADMM system not positive definite".into()))
    }

    fn residuals(&self, inst: &QpInstance, x: &DVector<f64>, w: &DVector<f64>, y: &DVector<f64>) -> Residuals {
        let tol = self.settings.tol;
        let ax = &inst.a * x;
        let qx = &inst.q * x;
        let aty = inst.a.tr_mul(y);
        let prim = inf_norm(&(&ax - w));
        let dual = inf_norm(&(&qx + &inst.c + &aty));
        let prim_scale = inf_norm(&ax).max(inf_norm(w));
        let dual_scale = inf_norm(&qx).max(inf_norm(&aty)).max(inf_norm(&inst.c));
        Residuals {
            prim,
            dual,
            eps_prim: tol + tol * prim_scale,
            eps_dual: tol + tol * dual_scale,
            prim_scale,
            dual_scale,
        }
    }

    pub fn solve(&self, inst: &QpInstance) -> Result<QpSolution> {
        let s = &self.settings;
        if !(s.tol > 0.0) {
            return Err(Error::InvalidConfig("QP tolerance must be positive".into()));
        }
        let d = inst.num_vars();
        let p = inst.num_constraints();
        let ata = inst.a.tr_mul(&inst.a);

        let mut rho = s.rho;
        let mut chol = self.factor(inst, &ata, rho)?;

        let mut x = DVector::<f64>::zeros(d);
        let mut w = DVector::<f64>::zeros(p);
        let mut y = DVector::<f64>::zeros(p);
        let mut y_prev = y.clone();

        let mut last_polish_at = 0usize;
        let mut converged = false;
        let mut iter = 0usize;

        while iter < s.max_iter {
            iter += 1;
            let rhs = &x * s.sigma - &inst.c + inst.a.tr_mul(&(&w * rho - &y));
            let x_tilde = chol.solve(&rhs);
            let w_tilde = &inst.a * &x_tilde;
            x = &x_tilde * s.alpha + &x * (1.0 - s.alpha);
            let w_relaxed = &w_tilde * s.alpha + &w * (1.0 - s.alpha);
            let mut w_next = &w_relaxed + &y / rho;
            for (wi, bi) in w_next.iter_mut().zip(inst.b.iter()) {
                *wi = wi.min(*bi);
            }
            y += (&w_relaxed - &w_next) * rho;
            w = w_next;

            if !x.iter().all(|v| v.is_finite()) || !y.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericalBreakdown("ADMM iterate became non-finite".into()));
            }

            if !iter.is_multiple_of(RESIDUAL_CHECK_EVERY) && !iter.is_multiple_of(s.adapt_every) {
                continue;
            }
            let r = self.residuals(inst, &x, &w, &y);

            if p > 0 && iter.is_multiple_of(RESIDUAL_CHECK_EVERY) && self.certifies_infeasible(inst, &y, &y_prev) {
                return Ok(QpSolution {
                    objective: inst.objective(&x),
                    z: x,
                    duals: y,
                    status: QpStatus::Infeasible,
                    iterations: iter,
                    polished: false,
                });
            }
            y_prev.copy_from(&y);

            if r.prim <= r.eps_prim && r.dual <= r.eps_dual {
                converged = true;
                break;
            }

            let near = r.prim <= 1e3 * r.eps_prim && r.dual <= 1e3 * r.eps_dual;
            if s.polish && near && iter >= last_polish_at + s.adapt_every {
                last_polish_at = iter;
                if let Some(sol) = self.polish(inst, &x, &w, &y, iter) {
                    return Ok(sol);
                }
            }

            if iter.is_multiple_of(s.adapt_every) {
                let num = r.prim / r.prim_scale.max(1e-30);
                let den = r.dual / r.dual_scale.max(1e-30);
                if num > 0.0 && den > 0.0 {
                    let new_rho = (rho * (num / den).sqrt()).clamp(RHO_MIN, RHO_MAX);
                    if new_rho > 5.0 * rho || new_rho < 0.2 * rho {
                        rho = new_rho;
                        chol = self.factor(inst, &ata, rho)?;
                    }
                }
            }
        }

        if s.polish {
            if let Some(sol) = self.polish(inst, &x, &w, &y, iter) {
                return Ok(sol);
            }
        }
        Ok(QpSolution {
            objective: inst.objective(&x),
            z: x,
            duals: y.map(|v| v.max(0.0)),
            status: if converged { QpStatus::Solved } else { QpStatus::MaxIter },
            iterations: iter,
            polished: false,
        })
    }

    /// Farkas-type test on the dual increment: `δy ≥ 0`, `Aᵀδy ≈ 0`, `bᵀδy < 0`.
    fn certifies_infeasible(&self, inst: &QpInstance, y: &DVector<f64>, y_prev: &DVector<f64>) -> bool {
        let dy = y - y_prev;
        let scale = inf_norm(&dy);
        if scale <= 1e-30 {
            return false;
        }
        let eps = 1e-7;
        let dy_pos = dy.map(|v| v.max(0.0));
        if inf_norm(&(&dy - &dy_pos)) > eps * scale {
            return false;
        }
        inf_norm(&inst.a.tr_mul(&dy)) <= eps * scale && inst.b.dot(&dy_pos) < -eps * scale
    }

    /// Equality-constrained solve on the active set guessed from `(w, y)`,
    /// accepted only when the result satisfies the KKT conditions to
    /// tolerance.
    fn polish(
        &self,
        inst: &QpInstance,
        x: &DVector<f64>,
        w: &DVector<f64>,
        y: &DVector<f64>,
        iterations: usize,
    ) -> Option<QpSolution> {
        let d = inst.num_vars();
        let active: Vec<usize> = (0..inst.num_constraints())
            .filter(|&i| inst.b[i] - w[i] < y[i])
            .collect();
        let na = active.len();
        let n = d + na;
        let reg = self.settings.reg;

        let mut k = DMatrix::<f64>::zeros(n, n);
        let mut k_reg = DMatrix::<f64>::zeros(n, n);
        k.view_mut((0, 0), (d, d)).copy_from(&inst.q);
        for (r, &i) in active.iter().enumerate() {
            for j in 0..d {
                k[(d + r, j)] = inst.a[(i, j)];
                k[(j, d + r)] = inst.a[(i, j)];
            }
        }
        k_reg.copy_from(&k);
        for i in 0..d {
            k_reg[(i, i)] += reg;
        }
        for r in 0..na {
            k_reg[(d + r, d + r)] -= reg;
        }
        let mut rhs = DVector::<f64>::zeros(n);
        rhs.rows_mut(0, d).copy_from(&(-&inst.c));
        for (r, &i) in active.iter().enumerate() {
            rhs[d + r] = inst.b[i];
        }

        let lu = k_reg.lu();
        let mut sol = lu.solve(&rhs)?;
        for _ in 0..8 {
            let res = &rhs - &k * &sol;
            if inf_norm(&res) <= 1e-15 * (1.0 + inf_norm(&rhs)) {
                break;
            }
            sol += lu.solve(&res)?;
        }
        if !sol.iter().all(|v| v.is_finite()) {
            return None;
        }

        let z = sol.rows(0, d).into_owned();
        let mut duals = DVector::<f64>::zeros(inst.num_constraints());
        for (r, &i) in active.iter().enumerate() {
            duals[i] = sol[d + r];
        }

        let tol = self.settings.tol;
        let az = &inst.a * &z;
        let prim_scale = inf_norm(&az).max(inf_norm(&inst.b));
        let prim_violation = az
            .iter()
            .zip(inst.b.iter())
            .map(|(a, b)| (a - b).max(0.0))
            .fold(0.0, f64::max);
        let qz = &inst.q * &z;
        let aty = inst.a.tr_mul(&duals);
        let dual_res = inf_norm(&(&qz + &inst.c + &aty));
        let dual_scale = inf_norm(&qz).max(inf_norm(&aty)).max(inf_norm(&inst.c));
        let min_dual = duals.iter().copied().fold(0.0, f64::min);

        let ok = prim_violation <= tol * (1.0 + prim_scale)
            && dual_res <= tol * (1.0 + dual_scale)
            && min_dual >= -tol * (1.0 + inf_norm(&duals));
        if !ok {
            return None;
        }
        // the polished point must not be worse than the ADMM iterate
        let obj = inst.objective(&z);
        let admm_obj = inst.objective(x);
        if obj > admm_obj + tol * (1.0 + admm_obj.abs()) && self.is_feasible(inst, x, tol) {
            return None;
        }
        Some(QpSolution {
            z,
            objective: obj,
            duals: duals.map(|v| v.max(0.0)),
            status: QpStatus::Solved,
            iterations,
            polished: true,
        })
    }

    fn is_feasible(&self, inst: &QpInstance, z: &DVector<f64>, tol: f64) -> bool {
        let az = &inst.a * z;
        az.iter()
            .zip(inst.b.iter())
            .all(|(a, b)| *a <= b + tol * (1.0 + b.abs()))
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(bound: Option<f64>) -> QpInstance {
        let (a, b) = match bound {
            Some(u) => (DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, u)),
            None => (DMatrix::zeros(0, 1), DVector::zeros(0)),
        };
        QpInstance::new(DMatrix::identity(1, 1), DVector::from_element(1, -2.0), a, b).unwrap()
    }

    #[test]
    fn unconstrained_scalar() {
        let sol = solve(&one_d(None), 1e-9, 20_000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.z[0] - 2.0).abs() < 1e-8);
        assert!((sol.objective + 2.0).abs() < 1e-8);
    }

    #[test]
    fn active_bound_scalar() {
        let sol = solve(&one_d(Some(1.0)), 1e-9, 20_000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.z[0] - 1.0).abs() < 1e-9);
        assert!((sol.objective + 1.5).abs() < 1e-9);
        assert!((sol.duals[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn inactive_bound_scalar() {
        let sol = solve(&one_d(Some(5.0)), 1e-9, 20_000).unwrap();
        assert!((sol.z[0] - 2.0).abs() < 1e-8);
        assert!(sol.duals[0].abs() < 1e-8);
    }

    #[test]
    fn psd_lp_block() {
        // min z0²/2 + z1 s.t. z1 ≥ |1 - z0|: optimum z = (1, 0), value 0.5
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let c = DVector::from_row_slice(&[0.0, 1.0]);
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 1.0, -1.0]);
        let b = DVector::from_row_slice(&[-1.0, 1.0]);
        let inst = QpInstance::new(q, c, a, b).unwrap();
        let sol = solve(&inst, 1e-9, 20_000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.z[0] - 1.0).abs() < 1e-7, "{:?}", sol.z);
        assert!(sol.z[1].abs() < 1e-7);
        assert!((sol.objective - 0.5).abs() < 1e-8);
    }

    #[test]
    fn detects_infeasible() {
        // z <= -1 and -z <= -1
        let inst = QpInstance::new(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_row_slice(&[-1.0, -1.0]),
        )
        .unwrap();
        let sol = solve(&inst, 1e-9, 20_000).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn rejects_bad_data() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QpInstance::new(q, DVector::zeros(2), DMatrix::zeros(0, 2), DVector::zeros(0)).is_err());
        let r = QpInstance::new(
            DMatrix::identity(1, 1),
            DVector::from_element(1, f64::NAN),
            DMatrix::zeros(0, 1),
            DVector::zeros(0),
        );
        assert!(matches!(r, Err(Error::NumericalBreakdown(_))));
        assert!(QpInstance::new(DMatrix::identity(2, 2), DVector::zeros(2), DMatrix::zeros(1, 2), DVector::zeros(2)).is_err());
    }

    #[test]
    fn deterministic() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let c = DVector::from_row_slice(&[-1.0, 0.3, 1.0]);
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, -1.0, -1.0, 2.0, -1.0]);
        let b = DVector::from_row_slice(&[0.0, 0.5]);
        let inst = QpInstance::new(q, c, a, b).unwrap();
        let s1 = solve(&inst, 1e-9, 20_000).unwrap();
        let s2 = solve(&inst, 1e-9, 20_000).unwrap();
        assert_eq!(s1.objective.to_bits(), s2.objective.to_bits());
        assert!(s1.z.iter().zip(s2.z.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn text_dump_has_all_blocks() {
        let mut buf = Vec::new();
        one_d(Some(1.0)).write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for header in ["Q 1 1", "c 1 1", "A 1 1", "b 1 1"] {
            assert!(text.contains(header), "{text}");
        }
    }
}
