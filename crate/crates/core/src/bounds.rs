//! Closed-form complexity bounds and tractability criteria.
//!
//! Every quantity is scale invariant per coordinate, so it is assembled from
//! normalized excesses `e_k(a) = sum_{j>=2} (lambda(k,j)/lambda(k,1))^a` and
//! accumulated as a sum of logarithms. Suprema over `d` or `k` are replaced by
//! a finite horizon, reported together with a stabilization flag.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{excess_terms, ProblemFamily, TensorFamily};
use crate::format::ext_f64;
use crate::numerics::{ln_plus, CompensatedSum};
use crate::spectrum::Spectrum;
use crate::tensor::ProductProblem;

/// Relative change between horizon and half horizon below which a supremum
/// counts as stabilized.
pub const STABILIZATION_REL: f64 = 1e-3;

/// Default number of coordinates summed by the strong-tractability convergence test.
pub const SPT_DEFAULT_K_MAX: usize = 1 << 20;

const SPT_FIRST_K: usize = 4096;
const SPT_INCREMENT_REL: f64 = 1e-9;
const SPT_SLOPE: f64 = -1.05;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BoundParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// A named bound at one dimension. `exact` is false when some coordinate
/// only supplied a one-sided estimate (an explicit spectrum with a tail).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEvaluation {
    pub name: String,
    #[serde(serialize_with = "ext_f64")]
    pub value: f64,
    pub ln_value: f64,
    pub params: BoundParams,
    pub d: usize,
    pub finite: bool,
    pub exact: bool,
}

impl BoundEvaluation {
    fn from_ln(name: &str, ln_value: f64, params: BoundParams, d: usize, exact: bool) -> Self {
        let value = ln_value.exp();
        Self { name: name.into(), value, ln_value, params, d, finite: value.is_finite(), exact }
    }
}

/// Maximum of a sequence indexed by `d` (or `k`) up to `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonEvaluation {
    #[serde(serialize_with = "ext_f64")]
    pub value: f64,
    pub argmax: usize,
    pub horizon: usize,
    #[serde(serialize_with = "ext_f64")]
    pub value_at_half: f64,
    pub stabilized: bool,
}

impl HorizonEvaluation {
    /// `values[i]` belongs to index `first + i`.
    fn of(first: usize, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empty horizon".into()));
        }
        let horizon = first + values.len() - 1;
        let half = (horizon / 2).max(first);
        let mut value = f64::NEG_INFINITY;
        let mut argmax = first;
        let mut value_at_half = f64::NEG_INFINITY;
        for (i, v) in values.iter().enumerate() {
            if *v > value {
                value = *v;
                argmax = first + i;
            }
            if first + i == half {
                value_at_half = value;
            }
        }
        let stabilized = value.is_finite() && (value - value_at_half).abs() <= STABILIZATION_REL * value.abs();
        Ok(Self { value, argmax, horizon, value_at_half, stabilized })
    }

    fn exp_of(first: usize, ln_values: &[f64]) -> Result<Self> {
        Self::of(first, &ln_values.iter().map(|l| l.exp()).collect::<Vec<_>>())
    }
}

fn check_open_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 1), got {x}")))
    }
}

fn excess_of(s: &Spectrum, k: usize, a: f64) -> Result<(f64, bool)> {
    let v = s.normalized_excess(a).map_err(|e| e.at_coordinate(k))?;
    Ok((v.value, v.exact))
}

/// `ln(S_a / S_1^a)` for the whole product, with its exactness flag.
pub fn ln_power_ratio(p: &ProductProblem, a: f64) -> Result<(f64, bool)> {
    let mut acc = CompensatedSum::new();
    let mut exact = true;
    for (i, s) in p.coordinates().iter().enumerate() {
        let (ea, xa) = excess_of(s, i + 1, a)?;
        let (e1, x1) = excess_of(s, i + 1, 1.0)?;
        acc.add(ea.ln_1p() - a * e1.ln_1p());
        exact &= xa && x1;
    }
    Ok((acc.value(), exact))
}

/// `(S_z/S_1^z) (S_tau/S_1^tau)^{z/(1-tau)} eps^{-2z/(1-tau)}`, an upper bound on `n^avg(eps, d)`.
pub fn chebyshev_bound(p: &ProductProblem, eps: f64, tau: f64, z: f64) -> Result<BoundEvaluation> {
    check_open_unit("epsilon", eps)?;
    check_open_unit("tau", tau)?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("z must be positive, got {z}")));
    }
    let (lz, xz) = ln_power_ratio(p, z)?;
    let (lt, xt) = ln_power_ratio(p, tau)?;
    let w = z / (1.0 - tau);
    let ln_value = lz + w * lt - 2.0 * w * eps.ln();
    let params = BoundParams { tau: Some(tau), z: Some(z), epsilon: Some(eps), ..Default::default() };
    Ok(BoundEvaluation::from_ln("chebyshev", ln_value, params, p.d(), xz && xt))
}

/// `C_d = S_tau^{1/tau} / S_1 * d^{-q}` for one dimension.
pub fn poly_tract_ratio(p: &ProductProblem, tau: f64, q: f64) -> Result<BoundEvaluation> {
    check_open_unit("tau", tau)?;
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::Domain(format!("q must be non-negative, got {q}")));
    }
    let (lt, exact) = ln_power_ratio(p, tau)?;
    let ln_value = lt / tau - q * (p.d() as f64).ln();
    let params = BoundParams { tau: Some(tau), q: Some(q), ..Default::default() };
    Ok(BoundEvaluation::from_ln("poly_tract_ratio", ln_value, params, p.d(), exact))
}

/// `max_{d <= d_max} C_d`, the finite-horizon polynomial tractability constant.
pub fn poly_tract_constant(f: &dyn ProblemFamily, q: f64, tau: f64, d_max: usize) -> Result<HorizonEvaluation> {
    if d_max == 0 {
        return Err(Error::Domain("d_max must be at least 1".into()));
    }
    let ln_values = (1..=d_max)
        .map(|d| Ok(poly_tract_ratio(&f.problem(d)?, tau, q)?.ln_value))
        .collect::<Result<Vec<_>>>()?;
    HorizonEvaluation::exp_of(1, &ln_values)
}

/// `C^{tau/(1-tau)} d^{q tau/(1-tau)} eps^{-2tau/(1-tau)}` from a given constant `C`.
pub fn poltract2_bound(c: f64, q: f64, tau: f64, d: usize, eps: f64) -> Result<BoundEvaluation> {
    check_open_unit("epsilon", eps)?;
    check_open_unit("tau", tau)?;
    if !(c > 0.0) {
        return Err(Error::Domain(format!("constant must be positive, got {c}")));
    }
    let w = tau / (1.0 - tau);
    let ln_value = w * (c.ln() + q * (d as f64).ln() - 2.0 * eps.ln());
    let params = BoundParams { tau: Some(tau), q: Some(q), epsilon: Some(eps), ..Default::default() };
    Ok(BoundEvaluation::from_ln("poltract2", ln_value, params, d, true))
}

/// Result of the strong polynomial tractability exponent search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SptExponent {
    /// `2 tau / (1 - tau)` at the smallest passing `tau`, or infinity.
    #[serde(serialize_with = "ext_f64")]
    pub exponent: f64,
    /// Smallest passing `tau`, if any.
    pub tau: Option<f64>,
    /// Set when the first grid point already passes, so the true exponent may be smaller.
    pub grid_limited: bool,
    pub k_max: usize,
}

fn appears_convergent(f: &dyn TensorFamily, tau: f64, k_max: usize) -> Result<bool> {
    let count = match f.max_coordinate() {
        Some(m) => m.min(k_max),
        None => k_max,
    };
    // r_k is smallest at k = 1 for admissible families, so divergence shows there first
    match f.excess(1, tau) {
        Err(Error::Divergence { .. }) => return Ok(false),
        Err(e) => return Err(e),
        Ok(_) => {}
    }
    if f.max_coordinate().is_some_and(|m| m <= k_max) {
        return match excess_terms(f, tau, count) {
            Ok(_) => Ok(true),
            Err(Error::Divergence { .. }) => Ok(false),
            Err(e) => Err(e),
        };
    }
    if count >= 4 {
        let ks = [count / 4, count / 2, count];
        let mut e = [0.0; 3];
        for (slot, k) in e.iter_mut().zip(ks) {
            *slot = match f.excess(k, tau) {
                Ok(v) => v,
                Err(Error::Divergence { .. }) => return Ok(false),
                Err(err) => return Err(err),
            };
        }
        if e.iter().all(|v| *v > 0.0) {
            let s1 = (e[1] / e[0]).log2();
            let s2 = (e[2] / e[1]).log2();
            if s1 < SPT_SLOPE && s2 < SPT_SLOPE {
                return Ok(true);
            }
        }
    }
    let terms = match excess_terms(f, tau, count) {
        Ok(t) => t,
        Err(Error::Divergence { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    let mut acc = CompensatedSum::new();
    let mut partial = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        acc.add(*t);
        let k = i + 1;
        if k >= SPT_FIRST_K && k.is_power_of_two() {
            partial.push(acc.value());
        }
    }
    Ok(partial
        .windows(2)
        .any(|w| w[1] - w[0] <= SPT_INCREMENT_REL * w[1]))
}

/// Smallest `tau` on the grid (refined by bisection to the next failing grid
/// point) for which `sum_k e_k(tau)` appears convergent over `k <= k_max`.
pub fn spt_exponent_bisect(f: &dyn TensorFamily, k_max: usize, tau_grid: &[f64]) -> Result<SptExponent> {
    let mut grid = tau_grid.to_vec();
    for t in &grid {
        check_open_unit("tau", *t)?;
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut prev_fail: Option<f64> = None;
    for (i, t) in grid.iter().enumerate() {
        if !appears_convergent(f, *t, k_max)? {
            prev_fail = Some(*t);
            continue;
        }
        let mut hi = *t;
        if let Some(mut lo) = prev_fail {
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if appears_convergent(f, mid, k_max)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        return Ok(SptExponent { exponent: 2.0 * hi / (1.0 - hi), tau: Some(hi), grid_limited: i == 0, k_max });
    }
    Ok(SptExponent { exponent: f64::INFINITY, tau: None, grid_limited: false, k_max })
}

/// `max_{d <= d_max} prod_k S_{tau_d}(k) / S_1(k)^{tau_d}` with `tau_d = 1 - delta / ln+ d`.
pub fn qpt_criterion(f: &dyn ProblemFamily, delta: f64, d_max: usize) -> Result<HorizonEvaluation> {
    check_open_unit("delta", delta)?;
    if d_max == 0 {
        return Err(Error::Domain("d_max must be at least 1".into()));
    }
    let ln_values = (1..=d_max)
        .map(|d| {
            let tau = 1.0 - delta / ln_plus(d as f64);
            Ok(ln_power_ratio(&f.problem(d)?, tau)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    HorizonEvaluation::exp_of(1, &ln_values)
}

/// `max(2, ln M) / delta`, an upper bound on the quasi-polynomial exponent.
pub fn qpt_exponent_bound(delta: f64, m_delta: f64) -> Result<f64> {
    check_open_unit("delta", delta)?;
    if !(m_delta >= 1.0) {
        return Err(Error::Domain(format!("M must be at least 1, got {m_delta}")));
    }
    Ok(2f64.max(m_delta.ln()) / delta)
}

/// Sufficient quasi-polynomial conditions for tensor families, over `2 <= d <= d_max`
/// with exponent `1 - delta / ln d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QptSufficient {
    /// `sum_k ln(1 + e_k(tau_d))`.
    pub log_sum: HorizonEvaluation,
    /// `sum_k e_k(tau_d)`.
    pub sum: HorizonEvaluation,
}

pub fn qpt_sufficient(f: &dyn TensorFamily, delta: f64, d_max: usize) -> Result<QptSufficient> {
    check_open_unit("delta", delta)?;
    if d_max < 2 {
        return Err(Error::Domain("these conditions start at d = 2".into()));
    }
    let mut logs = Vec::with_capacity(d_max - 1);
    let mut sums = Vec::with_capacity(d_max - 1);
    for d in 2..=d_max {
        let tau = 1.0 - delta / (d as f64).ln();
        if !(tau > 0.0) {
            // the exponent is not positive yet; the sum is unbounded there
            logs.push(f64::INFINITY);
            sums.push(f64::INFINITY);
            continue;
        }
        let terms = excess_terms(f, tau, d)?;
        logs.push(CompensatedSum::of(terms.iter().map(|e| e.ln_1p())));
        sums.push(CompensatedSum::of(terms.iter().copied()));
    }
    Ok(QptSufficient { log_sum: HorizonEvaluation::of(2, &logs)?, sum: HorizonEvaluation::of(2, &sums)? })
}

/// Both sides of the Jensen inequality in log form:
/// `ln(S_{1-gamma} / Lambda^{1-gamma}) >= gamma * sum_k H_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenCheck {
    pub gamma: f64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub exact: bool,
}

impl JensenCheck {
    pub fn slack(&self) -> f64 {
        self.ln_lhs - self.ln_rhs
    }
}

pub fn jensen_lhs(p: &ProductProblem, gamma: f64) -> Result<f64> {
    check_open_unit("gamma", gamma)?;
    Ok(ln_power_ratio(p, 1.0 - gamma)?.0)
}

/// `exp(gamma * sum_k H_k)`.
pub fn jensen_lower_bound(p: &ProductProblem, gamma: f64) -> Result<BoundEvaluation> {
    check_open_unit("gamma", gamma)?;
    let h = entropy_sum(p)?;
    let params = BoundParams { gamma: Some(gamma), ..Default::default() };
    Ok(BoundEvaluation::from_ln("jensen", gamma * h.total, params, p.d(), h.exact))
}

pub fn jensen_check(p: &ProductProblem, gamma: f64) -> Result<JensenCheck> {
    let (ln_lhs, x) = ln_power_ratio(p, 1.0 - gamma)?;
    let rhs = jensen_lower_bound(p, gamma)?;
    Ok(JensenCheck { gamma, ln_lhs, ln_rhs: rhs.ln_value, exact: x && rhs.exact })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropySum {
    /// `sum_k H_k`, the entropy of the normalized `d`-variate spectrum.
    pub total: f64,
    /// `total / ln+ d`.
    pub normalized: f64,
    pub exact: bool,
}

pub fn entropy_sum(p: &ProductProblem) -> Result<EntropySum> {
    let mut acc = CompensatedSum::new();
    let mut exact = true;
    for (i, s) in p.coordinates().iter().enumerate() {
        let h = s.entropy().map_err(|e| e.at_coordinate(i + 1))?;
        acc.add(h.value);
        exact &= h.exact;
    }
    let total = acc.value();
    Ok(EntropySum { total, normalized: total / ln_plus(p.d() as f64), exact })
}

/// `(1 - eps^2) trace_d / lambda_{d,1}`, a lower bound on `n^avg(eps, d)`.
pub fn curse_lower_bound(p: &ProductProblem, eps: f64) -> Result<BoundEvaluation> {
    check_open_unit("epsilon", eps)?;
    let mut acc = CompensatedSum::new();
    let mut exact = true;
    for (i, s) in p.coordinates().iter().enumerate() {
        let (e1, x) = excess_of(s, i + 1, 1.0)?;
        acc.add(e1.ln_1p());
        exact &= x;
    }
    let ln_value = (-eps * eps).ln_1p() + acc.value();
    let params = BoundParams { epsilon: Some(eps), ..Default::default() };
    Ok(BoundEvaluation::from_ln("curse", ln_value, params, p.d(), exact))
}

/// `theta_d = d^{-1} sum_{k<=d} e_k(tau)`.
pub fn weak_tract_theta(f: &dyn TensorFamily, tau: f64, d: usize) -> Result<f64> {
    check_open_unit("tau", tau)?;
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(CompensatedSum::of(excess_terms(f, tau, d)?) / d as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakTrend {
    pub tau: f64,
    pub threshold: f64,
    /// `(d, theta_d)` in increasing `d`.
    pub thetas: Vec<(usize, f64)>,
    /// `theta_d` never increases along the sampled dimensions and ends below the threshold.
    pub certified: bool,
}

pub fn weak_tract_trend(f: &dyn TensorFamily, tau: f64, dims: &[usize], threshold: f64) -> Result<WeakTrend> {
    check_open_unit("tau", tau)?;
    let mut dims = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();
    let Some(&last) = dims.last() else {
        return Err(Error::Domain("no dimensions given".into()));
    };
    if dims[0] == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let terms = excess_terms(f, tau, last)?;
    let mut acc = CompensatedSum::new();
    let mut thetas = Vec::with_capacity(dims.len());
    let mut next = dims.iter().peekable();
    for (i, t) in terms.iter().enumerate() {
        acc.add(*t);
        if next.peek() == Some(&&(i + 1)) {
            thetas.push((i + 1, acc.value() / (i + 1) as f64));
            next.next();
        }
    }
    let certified = thetas.windows(2).all(|w| w[1].1 <= w[0].1) && thetas.last().is_some_and(|t| t.1 < threshold);
    Ok(WeakTrend { tau, threshold, thetas, certified })
}

/// Polynomial tractability criteria for tensor families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PtCriteria {
    pub tau: f64,
    /// `Q_tau = sup_d (1/ln+ d) sum_{k<=d} ln(1 + e_k(tau))`.
    pub q_tau: HorizonEvaluation,
    /// `sup_d (1/ln+ d) sum_{k<=d} e_k(tau)`.
    pub linear: HorizonEvaluation,
    /// `sup_k (1 + e_k(tau))`; when bounded, the two sums are equivalent.
    pub sup_gate: HorizonEvaluation,
}

pub fn pt_log_criterion(f: &dyn TensorFamily, tau: f64, d_max: usize) -> Result<PtCriteria> {
    check_open_unit("tau", tau)?;
    if d_max == 0 {
        return Err(Error::Domain("d_max must be at least 1".into()));
    }
    let terms = excess_terms(f, tau, d_max)?;
    let mut log_acc = CompensatedSum::new();
    let mut lin_acc = CompensatedSum::new();
    let mut logs = Vec::with_capacity(d_max);
    let mut lins = Vec::with_capacity(d_max);
    for (i, e) in terms.iter().enumerate() {
        log_acc.add(e.ln_1p());
        lin_acc.add(*e);
        let scale = ln_plus((i + 1) as f64);
        logs.push(log_acc.value() / scale);
        lins.push(lin_acc.value() / scale);
    }
    let gate: Vec<f64> = terms.iter().map(|e| 1.0 + e).collect();
    Ok(PtCriteria {
        tau,
        q_tau: HorizonEvaluation::of(1, &logs)?,
        linear: HorizonEvaluation::of(1, &lins)?,
        sup_gate: HorizonEvaluation::of(1, &gate)?,
    })
}
