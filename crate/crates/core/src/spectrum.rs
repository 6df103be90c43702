//! Univariate eigenvalue sequences.
//!
//! A coordinate of a tensor-product problem is described by the
//! non-increasing eigenvalues `lambda(1) >= lambda(2) >= ...` of its
//! covariance operator. Two representations are supported: the Korobov
//! family, known in closed form, and explicit finite lists with an optional
//! declared tail mass.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{zeta, zeta_approx, zeta_log_moment, Approx, CompensatedSum, UNIT_ROUNDOFF};

/// Largest eigenvalue index handed out by a truncated view.
pub const MAX_VIEW_LEN: u64 = (u32::MAX - 1) as u64;

/// Eigenvalues of the Korobov kernel `1 + 2g sum_j j^{-2r} cos(2 pi j (x-y))`:
/// `1, g, g, g 2^{-2r}, g 2^{-2r}, g 3^{-2r}, ...`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KorobovSpectrum {
    g: f64,
    r: f64,
}

impl KorobovSpectrum {
    pub fn new(g: f64, r: f64) -> Result<Self> {
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::InvalidSpectrum(format!("Korobov weight must lie in (0, 1], got {g}")));
        }
        if !(r > 0.5) || !r.is_finite() {
            return Err(Error::InvalidSpectrum(format!("Korobov smoothness must exceed 1/2, got {r}")));
        }
        Ok(Self { g, r })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `g m^{-2r}`, the value shared by indices `2m` and `2m + 1`.
    #[inline]
    fn pair_value(&self, m: u64) -> f64 {
        self.g * (m as f64).powf(-2.0 * self.r)
    }

    /// `lambda(j)` for `j >= 1` (returns 0 for `j = 0`).
    pub fn eigenvalue(&self, j: u64) -> f64 {
        match j {
            0 => 0.0,
            1 => 1.0,
            _ => self.pair_value(j / 2),
        }
    }

    pub fn trace(&self) -> f64 {
        self.trace_approx().value
    }

    /// `1 + 2 g zeta(2r)` with its error radius.
    pub fn trace_approx(&self) -> Approx {
        let z = zeta_approx(2.0 * self.r).expect("r > 1/2 by construction");
        let two_g = Approx::with_relative(2.0 * self.g, 0.0);
        Approx::ONE.add(two_g.mul(z))
    }

    /// `sum_{j>=2} lambda(j)^tau = 2 g^tau zeta(2 r tau)`.
    pub fn excess_power_sum(&self, tau: f64) -> Result<f64> {
        let s = 2.0 * self.r * tau;
        if !(tau > 0.0) || s <= 1.0 {
            return Err(Error::Divergence {
                coordinate: None,
                tau,
                tau_min: 1.0 / (2.0 * self.r),
            });
        }
        Ok(2.0 * self.g.powf(tau) * zeta(s)?)
    }

    /// Upper bound on `sum_{j > len} lambda(j)` from `sum_{m > M} m^{-2r} <= M^{1-2r}/(2r-1)`.
    pub fn tail_bound_after(&self, len: u64) -> f64 {
        if len == 0 {
            return f64::INFINITY;
        }
        let m = (len - 1) / 2;
        if m == 0 {
            // only lambda(1) kept
            return 2.0 * self.g * zeta(2.0 * self.r).expect("r > 1/2");
        }
        let p = 2.0 * self.r - 1.0;
        let mf = m as f64;
        let full_pairs = 2.0 * self.g * mf.powf(-p) / p;
        let bound = if len.is_multiple_of(2) {
            // index 2m+1 (partner of the last kept 2m) is omitted too
            full_pairs + self.pair_value(m)
        } else {
            full_pairs
        };
        bound * (1.0 + 16.0 * UNIT_ROUNDOFF)
    }
}

/// A finite non-increasing list of eigenvalues plus the (caller-asserted)
/// total mass of everything not listed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplicitSpectrum {
    values: Vec<f64>,
    tail: f64,
}

impl ExplicitSpectrum {
    pub fn new(values: Vec<f64>, tail: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpectrum("explicit spectrum needs at least one value".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidSpectrum(format!("eigenvalues must be finite and >= 0, got {bad}")));
        }
        if !(values[0] > 0.0) {
            return Err(Error::InvalidSpectrum("leading eigenvalue must be positive".into()));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidSpectrum(format!(
                "eigenvalues must be non-increasing: value {} at index {} exceeds {}",
                values[i + 1],
                i + 2,
                values[i]
            )));
        }
        if !tail.is_finite() || tail < 0.0 {
            return Err(Error::InvalidSpectrum(format!("declared tail must be finite and >= 0, got {tail}")));
        }
        Ok(Self { values, tail })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Number of strictly positive listed values.
    pub fn positive_len(&self) -> usize {
        self.values.iter().take_while(|v| **v > 0.0).count()
    }

    pub fn trace_approx(&self) -> Approx {
        let mut acc = CompensatedSum::new();
        acc.add(self.tail);
        for v in self.values.iter().rev() {
            acc.add(*v);
        }
        acc.approx()
    }
}

/// A value that is either exact or only a lower bound (explicit spectra
/// with an undisclosed tail).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub exact: bool,
}

impl SeriesValue {
    fn exact(value: f64) -> Self {
        Self { value, exact: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spectrum {
    Korobov(KorobovSpectrum),
    Explicit(ExplicitSpectrum),
}

impl From<KorobovSpectrum> for Spectrum {
    fn from(s: KorobovSpectrum) -> Self {
        Spectrum::Korobov(s)
    }
}

impl From<ExplicitSpectrum> for Spectrum {
    fn from(s: ExplicitSpectrum) -> Self {
        Spectrum::Explicit(s)
    }
}

impl Spectrum {
    pub fn korobov(g: f64, r: f64) -> Result<Self> {
        KorobovSpectrum::new(g, r).map(Spectrum::Korobov)
    }

    pub fn explicit(values: Vec<f64>, tail: f64) -> Result<Self> {
        ExplicitSpectrum::new(values, tail).map(Spectrum::Explicit)
    }

    /// A spectrum with the single eigenvalue 1.
    pub fn unit() -> Self {
        Spectrum::Explicit(ExplicitSpectrum { values: vec![1.0], tail: 0.0 })
    }

    /// `lambda(j)` (1-based). `None` when `j` lies in the undisclosed tail of
    /// an explicit spectrum.
    pub fn eigenvalue(&self, j: u64) -> Option<f64> {
        match self {
            Spectrum::Korobov(k) => Some(k.eigenvalue(j)),
            Spectrum::Explicit(e) => {
                if j == 0 {
                    Some(0.0)
                } else if let Some(v) = e.values.get((j - 1) as usize) {
                    Some(*v)
                } else if e.tail == 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
        }
    }

    pub fn leading(&self) -> f64 {
        match self {
            Spectrum::Korobov(_) => 1.0,
            Spectrum::Explicit(e) => e.values[0],
        }
    }

    /// Total eigenvalue mass.
    pub fn trace(&self) -> f64 {
        self.trace_approx().value
    }

    pub fn trace_approx(&self) -> Approx {
        match self {
            Spectrum::Korobov(k) => k.trace_approx(),
            Spectrum::Explicit(e) => e.trace_approx(),
        }
    }

    /// `sum_j lambda(j)^tau`.
    pub fn power_sum(&self, tau: f64) -> Result<SeriesValue> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("power-sum exponent must be positive, got {tau}")));
        }
        if tau == 1.0 {
            return Ok(SeriesValue::exact(self.trace()));
        }
        match self {
            Spectrum::Korobov(k) => Ok(SeriesValue::exact(1.0 + k.excess_power_sum(tau)?)),
            Spectrum::Explicit(e) => {
                let mut acc = CompensatedSum::new();
                for v in e.values.iter().rev() {
                    acc.add(v.powf(tau));
                }
                if e.tail > 0.0 {
                    // for tau < 1, sum x_i^tau >= (sum x_i)^tau; for tau > 1 nothing useful
                    if tau < 1.0 {
                        acc.add(e.tail.powf(tau));
                    }
                    Ok(SeriesValue { value: acc.value(), exact: false })
                } else {
                    Ok(SeriesValue::exact(acc.value()))
                }
            }
        }
    }

    /// `sum_{j>=2} (lambda(j)/lambda(1))^tau`, computed without forming
    /// `power_sum - 1`.
    pub fn normalized_excess(&self, tau: f64) -> Result<SeriesValue> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("exponent must be positive, got {tau}")));
        }
        match self {
            Spectrum::Korobov(k) => {
                if tau == 1.0 {
                    let z = zeta(2.0 * k.r)?;
                    return Ok(SeriesValue::exact(2.0 * k.g * z));
                }
                Ok(SeriesValue::exact(k.excess_power_sum(tau)?))
            }
            Spectrum::Explicit(e) => {
                let lead = e.values[0];
                let mut acc = CompensatedSum::new();
                for v in e.values[1..].iter().rev() {
                    acc.add((v / lead).powf(tau));
                }
                if e.tail > 0.0 {
                    if tau <= 1.0 {
                        acc.add((e.tail / lead).powf(tau));
                    }
                    Ok(SeriesValue { value: acc.value(), exact: tau == 1.0 })
                } else {
                    Ok(SeriesValue::exact(acc.value()))
                }
            }
        }
    }

    /// Entropy of the normalized spectrum, `sum_j (lambda_j/L) ln(L/lambda_j)`
    /// with `L` the trace and `0 ln 0 = 0`.
    pub fn entropy(&self) -> Result<SeriesValue> {
        match self {
            Spectrum::Korobov(k) => {
                let s = 2.0 * k.r;
                let z = zeta(s)?;
                let excess = 2.0 * k.g * z;
                let trace = 1.0 + excess;
                // sum_j lambda_j ln lambda_j = 2g ln(g) zeta(2r) - 4 g r (-zeta'(2r))
                let x_ln_x = 2.0 * k.g * k.g.ln() * z - 4.0 * k.g * k.r * zeta_log_moment(s)?;
                Ok(SeriesValue::exact(excess.ln_1p() - x_ln_x / trace))
            }
            Spectrum::Explicit(e) => {
                let trace = e.trace_approx().value;
                let mut acc = CompensatedSum::new();
                for v in e.values.iter().rev().filter(|v| **v > 0.0) {
                    let p = v / trace;
                    acc.add(-p * p.ln());
                }
                if e.tail > 0.0 {
                    // -x ln x is subadditive, so the tail contributes at least this much
                    let p = e.tail / trace;
                    acc.add(-p * p.ln());
                    Ok(SeriesValue { value: acc.value(), exact: false })
                } else {
                    Ok(SeriesValue::exact(acc.value()))
                }
            }
        }
    }

    /// The smallest prefix whose omitted mass is at most `tol_rel * trace`.
    pub fn truncate(&self, tol_rel: f64) -> Result<TruncatedView<'_>> {
        if !(tol_rel > 0.0 && tol_rel < 1.0) {
            return Err(Error::Domain(format!("truncation tolerance must lie in (0, 1), got {tol_rel}")));
        }
        let view = self.truncated_view(tol_rel);
        if !view.within_tolerance {
            if let Spectrum::Explicit(e) = self {
                return Err(Error::IrreducibleTail {
                    tail: e.tail,
                    allowed: tol_rel * self.trace(),
                });
            }
        }
        Ok(view)
    }

    /// Like [`Spectrum::truncate`], but never fails: explicit tails are kept
    /// as irreducible mass and Korobov prefixes saturate at [`MAX_VIEW_LEN`].
    pub fn truncated_view(&self, tol_rel: f64) -> TruncatedView<'_> {
        match self {
            Spectrum::Korobov(k) => {
                let allowed = tol_rel * k.trace();
                let p = 2.0 * k.r - 1.0;
                // 2 g M^{-p} / p <= allowed
                let guess = (2.0 * k.g / (p * allowed)).powf(1.0 / p);
                let max_m = (MAX_VIEW_LEN - 1) / 2;
                let mut m = if guess.is_finite() && guess < max_m as f64 {
                    (guess.ceil() as u64).max(1)
                } else {
                    max_m
                };
                while m > 1 && k.tail_bound_after(2 * (m - 1) + 1) <= allowed {
                    m -= 1;
                }
                while m < max_m && k.tail_bound_after(2 * m + 1) > allowed {
                    m += 1;
                }
                let len = 2 * m + 1;
                let tail_mass = k.tail_bound_after(len);
                TruncatedView {
                    source: self,
                    len,
                    tail_mass,
                    omitted_max: k.eigenvalue(len + 1),
                    within_tolerance: tail_mass <= allowed,
                }
            }
            Spectrum::Explicit(e) => {
                let len = e.positive_len() as u64;
                let tail_mass = e.tail;
                let omitted_max = if e.tail > 0.0 {
                    e.tail.min(e.values[len as usize - 1])
                } else {
                    0.0
                };
                TruncatedView {
                    source: self,
                    len,
                    tail_mass,
                    omitted_max,
                    within_tolerance: tail_mass <= tol_rel * self.trace(),
                }
            }
        }
    }

    /// A view keeping exactly the first `len` eigenvalues.
    pub fn view_of_len(&self, len: u64) -> TruncatedView<'_> {
        match self {
            Spectrum::Korobov(k) => {
                let len = len.clamp(1, MAX_VIEW_LEN);
                TruncatedView {
                    source: self,
                    len,
                    tail_mass: k.tail_bound_after(len),
                    omitted_max: k.eigenvalue(len + 1),
                    within_tolerance: true,
                }
            }
            Spectrum::Explicit(e) => {
                let positive = e.positive_len() as u64;
                let len = len.clamp(1, positive);
                let dropped = CompensatedSum::of(e.values[len as usize..].iter().copied());
                let mass = dropped + e.tail;
                let omitted_max = if mass > 0.0 {
                    e.values.get(len as usize).copied().unwrap_or(e.tail).max(if e.tail > 0.0 {
                        e.tail.min(e.values[positive as usize - 1])
                    } else {
                        0.0
                    })
                } else {
                    0.0
                };
                TruncatedView {
                    source: self,
                    len,
                    tail_mass: mass * (1.0 + 4.0 * UNIT_ROUNDOFF),
                    omitted_max,
                    within_tolerance: true,
                }
            }
        }
    }
}

/// The first `len` eigenvalues of a spectrum plus what is known about the rest.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedView<'a> {
    pub source: &'a Spectrum,
    /// Number of kept eigenvalues.
    pub len: u64,
    /// Upper bound on the sum of the omitted eigenvalues.
    pub tail_mass: f64,
    /// Upper bound on every individual omitted eigenvalue.
    pub omitted_max: f64,
    pub within_tolerance: bool,
}

impl TruncatedView<'_> {
    pub fn eigenvalue(&self, j: u64) -> Option<f64> {
        if j == 0 || j > self.len {
            return None;
        }
        self.source.eigenvalue(j)
    }

    pub fn kept(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.len).map(move |j| self.source.eigenvalue(j).unwrap_or(0.0))
    }
}
