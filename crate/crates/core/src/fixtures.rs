//! Families with closed-form answers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{ProblemFamily, TensorFamily};
use crate::numerics::ln_plus;
use crate::spectrum::Spectrum;
use crate::tensor::ProductProblem;

/// Largest unit-eigenvalue count the fixture will materialize.
const MAX_UNITS: u64 = 100_000_000;

/// In dimension `d`, exactly `N(d) = floor(M^{ln+ d / delta})` eigenvalues
/// equal 1 and the rest vanish. Its QPT supremum is `M` and
/// `n^avg(eps, d) = ceil((1 - eps^2) N(d))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MDeltaFixture {
    pub m: f64,
    pub delta: f64,
}

impl MDeltaFixture {
    pub fn new(m: f64, delta: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::InvalidFamily(format!("M must exceed 1, got {m}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidFamily(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { m, delta })
    }

    /// `N(d) = floor(M^{ln+ d / delta})`.
    pub fn unit_count(&self, d: usize) -> Result<u64> {
        let x = self.m.powf(ln_plus(d as f64) / self.delta);
        if !(x <= MAX_UNITS as f64) {
            return Err(Error::InvalidFamily(format!("N({d}) = {x} exceeds the fixture cap of {MAX_UNITS}")));
        }
        Ok(x.floor() as u64)
    }
}

impl ProblemFamily for MDeltaFixture {
    /// The unit eigenvalues sit in coordinate 1; every other coordinate is the single eigenvalue 1.
    fn problem(&self, d: usize) -> Result<ProductProblem> {
        if d == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        let n = self.unit_count(d)? as usize;
        let mut coords = vec![Spectrum::explicit(vec![1.0; n], 0.0)?];
        coords.extend(std::iter::repeat_n(Spectrum::unit(), d - 1));
        ProductProblem::new(coords)
    }
}

/// Coordinate `k` has `k` unit eigenvalues when `k = 2^{2^m}` for some
/// `m >= 0`, and the single eigenvalue 1 otherwise. The important
/// coordinates `2, 4, 16, 256, ...` are spread ever more thinly, so the
/// linear PT sum grows like `d / ln d` while `n^avg(eps, d) <= d^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StrangeOrdering;

impl StrangeOrdering {
    pub fn is_important(k: usize) -> bool {
        let mut p: u128 = 2;
        while p <= k as u128 {
            if p == k as u128 {
                return true;
            }
            p *= p;
        }
        false
    }
}

impl TensorFamily for StrangeOrdering {
    fn coordinate(&self, k: usize) -> Result<Spectrum> {
        if Self::is_important(k) {
            Spectrum::explicit(vec![1.0; k], 0.0)
        } else {
            Ok(Spectrum::unit())
        }
    }

    fn excess(&self, k: usize, _tau: f64) -> Result<f64> {
        Ok(if Self::is_important(k) { (k - 1) as f64 } else { 0.0 })
    }
}

impl ProblemFamily for StrangeOrdering {
    fn problem(&self, d: usize) -> Result<ProductProblem> {
        self.product(d)
    }
}
