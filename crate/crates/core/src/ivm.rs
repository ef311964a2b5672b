//! Interval-valued objectives given by their lower and upper endpoint
//! functions, and the gH-gradients assembled from endpoint gradients.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Scalar function of a point.
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Gradient of a scalar function, written into the output slice.
pub type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// One interval-valued objective `G = [G_lower, G_upper]`.
#[derive(Clone)]
pub struct IntervalFunction {
    lower_fn: ScalarFn,
    upper_fn: ScalarFn,
    lower_grad: GradFn,
    upper_grad: GradFn,
    dim: usize,
}

impl fmt::Debug for IntervalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntervalFunction")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl IntervalFunction {
    pub fn new(
        dim: usize,
        lower_fn: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        upper_fn: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        lower_grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        upper_grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        assert!(dim > 0, "interval function needs a positive dimension");
        IntervalFunction {
            lower_fn: Arc::new(lower_fn),
            upper_fn: Arc::new(upper_fn),
            lower_grad: Arc::new(lower_grad),
            upper_grad: Arc::new(upper_grad),
            dim,
        }
    }

    /// Builds `[c(x) - w(x), c(x) + w(x)]` from a center and a nonnegative
    /// half-width. A negative width surfaces as an
    /// [`Error::EndpointOrderViolation`] at evaluation time.
    pub fn from_center_width(
        dim: usize,
        center_fn: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        center_grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        width_fn: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        width_grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        let c: ScalarFn = Arc::new(center_fn);
        let w: ScalarFn = Arc::new(width_fn);
        let cg: GradFn = Arc::new(center_grad);
        let wg: GradFn = Arc::new(width_grad);

        let (c1, w1) = (c.clone(), w.clone());
        let lower = move |x: &[f64]| c1(x) - w1(x);
        let upper = move |x: &[f64]| c(x) + w(x);

        let (cg1, wg1) = (cg.clone(), wg.clone());
        let lower_grad = move |x: &[f64], out: &mut [f64]| {
            cg1(x, out);
            let mut tmp = vec![0.0; out.len()];
            wg1(x, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o -= t);
        };
        let upper_grad = move |x: &[f64], out: &mut [f64]| {
            cg(x, out);
            let mut tmp = vec![0.0; out.len()];
            wg(x, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
        };
        IntervalFunction::new(dim, lower, upper, lower_grad, upper_grad)
    }

    /// A real-valued objective seen as the degenerate interval `[f, f]`.
    pub fn degenerate(
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        let f: ScalarFn = Arc::new(f);
        let g: GradFn = Arc::new(grad);
        IntervalFunction {
            lower_fn: f.clone(),
            upper_fn: f,
            lower_grad: g.clone(),
            upper_grad: g,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    /// Raw endpoint values `(G_lower(x), G_upper(x))` without the order check.
    pub fn endpoints(&self, x: &[f64]) -> (f64, f64) {
        ((self.lower_fn)(x), (self.upper_fn)(x))
    }

    /// Raw endpoint gradients written into `lower` and `upper`.
    pub fn endpoint_gradients(&self, x: &[f64], lower: &mut [f64], upper: &mut [f64]) {
        (self.lower_grad)(x, lower);
        (self.upper_grad)(x, upper);
    }

    pub fn eval(&self, x: &[f64]) -> Result<Interval> {
        self.check_dim(x.len())?;
        let (lower, upper) = self.endpoints(x);
        if !(lower <= upper) {
            return Err(Error::EndpointOrderViolation {
                objective: 0,
                lower,
                upper,
            });
        }
        Interval::new(lower, upper)
    }

    pub fn gh_gradient(&self, x: &[f64]) -> Result<GHGradient> {
        self.check_dim(x.len())?;
        let mut gl = vec![0.0; self.dim];
        let mut gu = vec![0.0; self.dim];
        self.endpoint_gradients(x, &mut gl, &mut gu);
        Ok(GHGradient {
            components: gl
                .iter()
                .zip(&gu)
                .map(|(&a, &b)| Interval::hull(a, b))
                .collect(),
        })
    }

    /// Largest deviation between the analytic endpoint gradients and central
    /// differences with step `h`.
    pub fn finite_diff_check(&self, x: &[f64], h: f64) -> Result<f64> {
        self.check_dim(x.len())?;
        assert!(h > 0.0, "finite-difference step must be positive");
        let mut gl = vec![0.0; self.dim];
        let mut gu = vec![0.0; self.dim];
        self.endpoint_gradients(x, &mut gl, &mut gu);

        let mut xp = x.to_vec();
        let mut worst = 0.0f64;
        for j in 0..self.dim {
            xp[j] = x[j] + h;
            let (lp, up) = self.endpoints(&xp);
            xp[j] = x[j] - h;
            let (lm, um) = self.endpoints(&xp);
            xp[j] = x[j];
            let dl = (lp - lm) / (2.0 * h);
            let du = (up - um) / (2.0 * h);
            worst = worst.max((dl - gl[j]).abs()).max((du - gu[j]).abs());
        }
        Ok(worst)
    }
}

/// `G = (G_1, ..., G_m)` over a common dimension.
#[derive(Clone, Debug)]
pub struct MultiObjective {
    name: String,
    objectives: Vec<IntervalFunction>,
}

impl MultiObjective {
    pub fn new(name: impl Into<String>, objectives: Vec<IntervalFunction>) -> Result<Self> {
        let first = objectives
            .first()
            .ok_or_else(|| Error::InvalidConfig("at least one objective required".into()))?;
        let dim = first.dim();
        if let Some(bad) = objectives.iter().find(|f| f.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(MultiObjective {
            name: name.into(),
            objectives,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.objectives[0].dim()
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn objectives(&self) -> &[IntervalFunction] {
        &self.objectives
    }

    /// All objective values at `x`, with the objective index reported on an
    /// endpoint-order violation.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<Interval>> {
        self.objectives
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.eval(x).map_err(|e| match e {
                    Error::EndpointOrderViolation { lower, upper, .. } => {
                        Error::EndpointOrderViolation {
                            objective: i,
                            lower,
                            upper,
                        }
                    }
                    other => other,
                })
            })
            .collect()
    }

    pub fn gh_gradients(&self, x: &[f64]) -> Result<Vec<GHGradient>> {
        self.objectives.iter().map(|f| f.gh_gradient(x)).collect()
    }
}

/// Componentwise gH-gradient: the `j`-th entry is the hull of the two
/// endpoint partials.
#[derive(Clone, Debug, PartialEq)]
pub struct GHGradient {
    pub components: Vec<Interval>,
}

impl GHGradient {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Lower endpoints of every component.
    pub fn lower(&self) -> Vec<f64> {
        self.components.iter().map(Interval::lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.components.iter().map(Interval::hi).collect()
    }
}
