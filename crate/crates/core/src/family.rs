//! Problem families indexed by the dimension `d`.
//!
//! A [`TensorFamily`] produces coordinate `k` on its own, so the problem in
//! dimension `d` is the product of coordinates `1..=d`. A [`ProblemFamily`]
//! only knows how to build the whole problem for each `d`; the criterion
//! evaluators that need per-coordinate sums accept tensor families only.

use crate::error::{Error, Result};
use crate::korobov::{SmoothnessFamily, WeightFamily};
use crate::spectrum::Spectrum;
use crate::tensor::ProductProblem;

pub trait ProblemFamily: Sync {
    fn problem(&self, d: usize) -> Result<ProductProblem>;
}

pub trait TensorFamily: Sync {
    /// Coordinate spectrum for `k >= 1`.
    fn coordinate(&self, k: usize) -> Result<Spectrum>;

    /// `sum_{j>=2} (lambda(k, j) / lambda(k, 1))^tau`.
    fn excess(&self, k: usize, tau: f64) -> Result<f64> {
        self.coordinate(k)?
            .normalized_excess(tau)
            .map(|s| s.value)
            .map_err(|e| e.at_coordinate(k))
    }

    /// Largest `k` for which the family is defined.
    fn max_coordinate(&self) -> Option<usize> {
        None
    }

    fn product(&self, d: usize) -> Result<ProductProblem> {
        if d == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if let Some(m) = self.max_coordinate() {
            if d > m {
                return Err(Error::InvalidFamily(format!("family has {m} coordinates; d = {d} requested")));
            }
        }
        ProductProblem::new((1..=d).map(|k| self.coordinate(k)).collect::<Result<_>>()?)
    }
}

/// A fixed list of coordinates, usable for every `d` up to its length.
impl TensorFamily for ProductProblem {
    fn coordinate(&self, k: usize) -> Result<Spectrum> {
        self.coordinates()
            .get(k.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| Error::InvalidFamily(format!("coordinate {k} is outside 1..={}", self.d())))
    }

    fn max_coordinate(&self) -> Option<usize> {
        Some(self.d())
    }
}

impl ProblemFamily for ProductProblem {
    fn problem(&self, d: usize) -> Result<ProductProblem> {
        self.product(d)
    }
}

/// Every coordinate has the same spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Homogeneous {
    pub spectrum: Spectrum,
}

impl TensorFamily for Homogeneous {
    fn coordinate(&self, _k: usize) -> Result<Spectrum> {
        Ok(self.spectrum.clone())
    }
}

impl ProblemFamily for Homogeneous {
    fn problem(&self, d: usize) -> Result<ProductProblem> {
        self.product(d)
    }
}

/// Korobov coordinates with weights `g_k` and smoothness `r_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KorobovFamily {
    pub weights: WeightFamily,
    pub smoothness: SmoothnessFamily,
}

impl KorobovFamily {
    pub fn new(weights: WeightFamily, smoothness: SmoothnessFamily) -> Self {
        Self { weights, smoothness }
    }

    pub fn g(&self, k: usize) -> Result<f64> {
        self.weights.g(k, &self.smoothness)
    }

    pub fn r(&self, k: usize) -> Result<f64> {
        self.smoothness.r(k)
    }
}

impl TensorFamily for KorobovFamily {
    fn coordinate(&self, k: usize) -> Result<Spectrum> {
        let g = self.g(k)?;
        let r = self.r(k)?;
        if g == 0.0 && r > 0.5 {
            // weights below the double range: every eigenvalue after the first vanishes
            return Ok(Spectrum::unit());
        }
        Spectrum::korobov(g, r).map_err(|e| match e {
            Error::InvalidSpectrum(m) => Error::InvalidFamily(format!("coordinate {k}: {m}")),
            other => other,
        })
    }

    fn excess(&self, k: usize, tau: f64) -> Result<f64> {
        let g = self.g(k)?;
        let r = self.r(k)?;
        if g == 0.0 {
            return Ok(0.0);
        }
        Spectrum::korobov(g, r)?
            .normalized_excess(tau)
            .map(|s| s.value)
            .map_err(|e| e.at_coordinate(k))
    }
}

impl ProblemFamily for KorobovFamily {
    fn problem(&self, d: usize) -> Result<ProductProblem> {
        self.product(d)
    }
}

/// Sequence `e_1, ..., e_K` of normalized excesses at a fixed exponent, with a
/// cache for runs of coordinates that share one spectrum.
pub(crate) fn excess_terms(f: &dyn TensorFamily, tau: f64, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut last: Option<(Spectrum, f64)> = None;
    for k in 1..=count {
        let c = f.coordinate(k)?;
        if let Some((prev, value)) = &last {
            if *prev == c {
                out.push(*value);
                continue;
            }
        }
        let v = f.excess(k, tau)?;
        out.push(v);
        last = Some((c, v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn korobov_family_coordinates() {
        let f = KorobovFamily::new(WeightFamily::Power { rho: 3.0 }, SmoothnessFamily::Constant { r: 1.0 });
        assert_eq!(f.coordinate(2).unwrap(), Spectrum::korobov(0.125, 1.0).unwrap());
        let p = f.product(3).unwrap();
        assert_eq!(p.d(), 3);
        assert!(f.product(0).is_err());
        let e = f.excess(2, 0.75).unwrap();
        assert!((e - 2.0 * 0.125f64.powf(0.75) * crate::numerics::zeta(1.5).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn underflowing_weights_become_unit_coordinates() {
        let f = KorobovFamily::new(WeightFamily::Geometric { v: 0.01 }, SmoothnessFamily::Power { c: 1.0, s: 1.0 });
        assert_eq!(f.coordinate(400).unwrap(), Spectrum::unit());
        assert_eq!(f.excess(400, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn fixed_product_is_a_finite_family() {
        let p = ProductProblem::new(vec![Spectrum::unit(), Spectrum::korobov(0.5, 1.0).unwrap()]).unwrap();
        assert_eq!(p.product(2).unwrap(), p);
        assert!(p.product(3).is_err());
        assert!(p.coordinate(0).is_err());
    }

    #[test]
    fn divergence_names_the_coordinate() {
        let f = KorobovFamily::new(
            WeightFamily::Power { rho: 2.0 },
            SmoothnessFamily::Explicit { values: vec![2.0, 2.0, 0.6], asymptotic: None },
        );
        match excess_terms(&f, 0.5, 3) {
            Err(Error::Divergence { coordinate, .. }) => assert_eq!(coordinate, Some(3)),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
