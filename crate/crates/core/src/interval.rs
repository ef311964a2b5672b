//! Closed real intervals `[lo, hi]` with the Moore operations used by the
//! solver: endpoint sum, scalar multiple, gH-difference, dominance and the
//! max-abs norm.
//!
//! Endpoints are plain IEEE doubles. No outward rounding is performed.

use std::fmt;
use std::ops::{Add, Mul, Neg};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for [`Interval::approx_eq`].
pub const DEFAULT_APPROX_TOL: f64 = 1e-12;

/// A closed bounded interval. `lo <= hi` is enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    lo: f64,
    hi: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        Interval::new(raw.lo, raw.hi)
    }
}

impl From<Interval> for RawInterval {
    fn from(iv: Interval) -> Self {
        RawInterval { lo: iv.lo, hi: iv.hi }
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    /// Builds `[lo, hi]`. Inverted or non-finite endpoints are rejected.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFiniteInterval { lo, hi });
        }
        if lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// The degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// `[min(a, b), max(a, b)]`.
    pub fn hull(a: f64, b: f64) -> Self {
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// `α ⊙ A`: endpoints swap for negative `α`.
    pub fn scale(&self, alpha: f64) -> Self {
        if alpha >= 0.0 {
            Interval {
                lo: alpha * self.lo,
                hi: alpha * self.hi,
            }
        } else {
            Interval {
                lo: alpha * self.hi,
                hi: alpha * self.lo,
            }
        }
    }

    /// Generalized Hukuhara difference `self ⊖gH other`.
    pub fn gh_diff(&self, other: &Interval) -> Self {
        Interval::hull(self.lo - other.lo, self.hi - other.hi)
    }

    /// True when `self` dominates `other`, i.e. `other ⪰ self`:
    /// both endpoints of `other` are at least those of `self`.
    pub fn dominates(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi >= self.hi
    }

    /// True when `self` strictly dominates `other` (`other ≻ self`).
    pub fn strictly_dominates(&self, other: &Interval) -> bool {
        (other.lo > self.lo && other.hi >= self.hi) || (other.lo >= self.lo && other.hi > self.hi)
    }

    /// Comparable iff one of the two dominates the other.
    pub fn comparable(&self, other: &Interval) -> bool {
        self.dominates(other) || other.dominates(self)
    }

    /// `max(|lo|, |hi|)`.
    pub fn norm(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn approx_eq(&self, other: &Interval, tol: f64) -> bool {
        (self.lo - other.lo).abs() <= tol && (self.hi - other.hi).abs() <= tol
    }
}

/// `A ⊕ B`.
pub fn add(a: Interval, b: Interval) -> Interval {
    a + b
}

/// `α ⊙ A`.
pub fn scalar_mul(alpha: f64, a: Interval) -> Interval {
    a.scale(alpha)
}

/// `A ⊖gH B`.
pub fn gh_diff(a: Interval, b: Interval) -> Interval {
    a.gh_diff(&b)
}

/// Returns `A ⪰ B`, i.e. whether `b` dominates `a`.
pub fn dominates(b: Interval, a: Interval) -> bool {
    b.dominates(&a)
}

/// Returns `A ≻ B`, i.e. whether `b` strictly dominates `a`.
pub fn strictly_dominates(b: Interval, a: Interval) -> bool {
    b.strictly_dominates(&a)
}

pub fn norm(a: Interval) -> f64 {
    a.norm()
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Mul<Interval> for f64 {
    type Output = Interval;

    fn mul(self, rhs: Interval) -> Interval {
        rhs.scale(self)
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        self.scale(-1.0)
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

/// Writes `[lo,hi]` with 17 significant digits per endpoint.
impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.16e},{:.16e}]", self.lo, self.hi)
    }
}

impl FromStr for Interval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::IntervalParse(s.to_string());
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(bad)?;
        let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        Interval::new(lo, hi)
    }
}
