//! Tractability classification of Korobov families.
//!
//! A family is given by weights `g_k` and smoothness `r_k`; coordinate `k`
//! has eigenvalues `1, g_k, g_k, g_k 2^{-2r_k}, ...`. For the closed-form
//! family kinds every verdict is derived symbolically from the asymptotic
//! decay of `g_k`. Explicit lists are classified only through a declared
//! asymptotic kind; without one, finite-horizon estimates are reported but
//! never turned into verdicts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::ext_f64;
use crate::numerics::{ln_plus, CompensatedSum};

/// Weights `1 >= g_1 >= g_2 >= ... > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightFamily {
    /// `g_k = k^{-rho}`
    Power { rho: f64 },
    /// `g_k = k^{-rho} (1 + ln k)^{-beta}`
    PowerLog { rho: f64, beta: f64 },
    /// `g_k = v^{r_k}`
    #[serde(rename = "geometric_in_r")]
    Geometric { v: f64 },
    /// `g_k = r_k^{-s}`
    #[serde(rename = "polynomial_in_r")]
    PolyInR { s: f64 },
    /// `g_k = 1 / ln(k + shift)`
    InverseLog { shift: f64 },
    /// `g_k = g0`
    Constant { g0: f64 },
    /// `g_1, ..., g_n` as listed, then the declared kind (if any) for `k > n`.
    Explicit {
        values: Vec<f64>,
        #[serde(default)]
        asymptotic: Option<Box<WeightFamily>>,
    },
}

/// Smoothness `1/2 < r_1 <= r_2 <= ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothnessFamily {
    /// `r_k = r`
    Constant { r: f64 },
    /// `r_k = a ln k + b`
    Logarithmic { a: f64, b: f64 },
    /// `r_k = c k^s`
    Power { c: f64, s: f64 },
    /// `r_1, ..., r_n` as listed, then the declared kind (if any) for `k > n`.
    Explicit {
        values: Vec<f64>,
        #[serde(default)]
        asymptotic: Option<Box<SmoothnessFamily>>,
    },
}

impl SmoothnessFamily {
    /// `r_k` for `k >= 1`.
    pub fn r(&self, k: usize) -> Result<f64> {
        let kf = k as f64;
        Ok(match self {
            SmoothnessFamily::Constant { r } => *r,
            SmoothnessFamily::Logarithmic { a, b } => a * kf.ln() + b,
            SmoothnessFamily::Power { c, s } => c * kf.powf(*s),
            SmoothnessFamily::Explicit { values, asymptotic } => match values.get(k - 1) {
                Some(v) => *v,
                None => match asymptotic {
                    Some(a) => a.r(k)?,
                    None => {
                        return Err(Error::InvalidFamily(format!(
                            "explicit smoothness has {} values; r_{k} is undefined",
                            values.len()
                        )))
                    }
                },
            },
        })
    }

    /// Number of terms that are defined (`None` when unbounded).
    fn defined_len(&self) -> Option<usize> {
        match self {
            SmoothnessFamily::Explicit { values, asymptotic: None } => Some(values.len()),
            _ => None,
        }
    }

    fn check_parameters(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFamily(m));
        match self {
            SmoothnessFamily::Constant { r } if !r.is_finite() => bad(format!("smoothness r must be finite, got {r}")),
            SmoothnessFamily::Logarithmic { a, b } if !(*a >= 0.0 && a.is_finite() && b.is_finite()) => {
                bad(format!("logarithmic smoothness needs a >= 0 and finite b, got a={a}, b={b}"))
            }
            SmoothnessFamily::Power { c, s } if !(*c > 0.0 && *s >= 0.0 && c.is_finite() && s.is_finite()) => {
                bad(format!("power smoothness needs c > 0 and s >= 0, got c={c}, s={s}"))
            }
            SmoothnessFamily::Explicit { values, asymptotic } => {
                if values.is_empty() && asymptotic.is_none() {
                    return bad("explicit smoothness needs values or an asymptotic kind".into());
                }
                if let Some(a) = asymptotic {
                    if matches!(**a, SmoothnessFamily::Explicit { .. }) {
                        return bad("the asymptotic kind of an explicit smoothness must be closed-form".into());
                    }
                    a.check_parameters()?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The closed-form kind governing the tail, and whether it was declared.
    fn tail_kind(&self) -> Option<(&SmoothnessFamily, bool)> {
        match self {
            SmoothnessFamily::Explicit { asymptotic: Some(a), .. } => Some((a, true)),
            SmoothnessFamily::Explicit { asymptotic: None, .. } => None,
            other => Some((other, false)),
        }
    }
}

impl WeightFamily {
    /// `g_k` for `k >= 1`, given the smoothness family (used by the kinds tied to `r_k`).
    pub fn g(&self, k: usize, smoothness: &SmoothnessFamily) -> Result<f64> {
        let kf = k as f64;
        Ok(match self {
            WeightFamily::Power { rho } => kf.powf(-rho),
            WeightFamily::PowerLog { rho, beta } => kf.powf(-rho) * (1.0 + kf.ln()).powf(-beta),
            WeightFamily::Geometric { v } => v.powf(smoothness.r(k)?),
            WeightFamily::PolyInR { s } => smoothness.r(k)?.powf(-s),
            WeightFamily::InverseLog { shift } => 1.0 / (kf + shift).ln(),
            WeightFamily::Constant { g0 } => *g0,
            WeightFamily::Explicit { values, asymptotic } => match values.get(k - 1) {
                Some(v) => *v,
                None => match asymptotic {
                    Some(a) => a.g(k, smoothness)?,
                    None => {
                        return Err(Error::InvalidFamily(format!(
                            "explicit weights have {} values; g_{k} is undefined",
                            values.len()
                        )))
                    }
                },
            },
        })
    }

    fn defined_len(&self) -> Option<usize> {
        match self {
            WeightFamily::Explicit { values, asymptotic: None } => Some(values.len()),
            _ => None,
        }
    }

    fn check_parameters(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFamily(m));
        match self {
            WeightFamily::Power { rho } if !(*rho > 0.0 && rho.is_finite()) => bad(format!("power weights need rho > 0, got {rho}")),
            WeightFamily::PowerLog { rho, beta } if !(*rho >= 0.0 && *beta >= 0.0 && rho + beta > 0.0 && rho.is_finite() && beta.is_finite()) => {
                bad(format!("power-log weights need rho, beta >= 0 with rho + beta > 0, got rho={rho}, beta={beta}"))
            }
            WeightFamily::Geometric { v } if !(*v > 0.0 && *v < 1.0) => bad(format!("geometric weights need v in (0, 1), got {v}")),
            WeightFamily::PolyInR { s } if !(*s > 0.0 && s.is_finite()) => bad(format!("polynomial-in-r weights need s > 0, got {s}")),
            WeightFamily::InverseLog { shift } if !(*shift >= std::f64::consts::E - 1.0 && shift.is_finite()) => {
                bad(format!("inverse-log weights need shift >= e - 1 so that g_1 <= 1, got {shift}"))
            }
            WeightFamily::Constant { g0 } if !(*g0 > 0.0 && *g0 <= 1.0) => bad(format!("constant weight must lie in (0, 1], got {g0}")),
            WeightFamily::Explicit { values, asymptotic } => {
                if values.is_empty() && asymptotic.is_none() {
                    return bad("explicit weights need values or an asymptotic kind".into());
                }
                if let Some(a) = asymptotic {
                    if matches!(**a, WeightFamily::Explicit { .. }) {
                        return bad("the asymptotic kind of explicit weights must be closed-form".into());
                    }
                    a.check_parameters()?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn tail_kind(&self) -> Option<(&WeightFamily, bool)> {
        match self {
            WeightFamily::Explicit { asymptotic: Some(a), .. } => Some((a, true)),
            WeightFamily::Explicit { asymptotic: None, .. } => None,
            other => Some((other, false)),
        }
    }
}

/// Check parameters and the ordering constraints `1 >= g_1 >= g_2 >= ... > 0`,
/// `1/2 < r_1 <= r_2 <= ...` for `k` up to `horizon` (or the defined length).
pub fn validate_family(w: &WeightFamily, r: &SmoothnessFamily, horizon: usize) -> Result<()> {
    w.check_parameters()?;
    r.check_parameters()?;
    let mut last = horizon.max(1);
    if let Some(n) = w.defined_len() {
        last = last.min(n);
    }
    if let Some(n) = r.defined_len() {
        last = last.min(n);
    }
    let (mut prev_g, mut prev_r) = (1.0f64, f64::NEG_INFINITY);
    for k in 1..=last {
        let rk = r.r(k)?;
        let gk = w.g(k, r)?;
        if !(rk > 0.5) || !rk.is_finite() {
            return Err(Error::InvalidFamily(format!("r_{k} = {rk} must exceed 1/2")));
        }
        if rk < prev_r {
            return Err(Error::InvalidFamily(format!("smoothness must be non-decreasing: r_{k} = {rk} < r_{} = {prev_r}", k - 1)));
        }
        let listed = matches!(w, WeightFamily::Explicit { values, .. } if k <= values.len());
        // closed forms with fast decay may underflow to zero; listed values may not
        if gk.is_nan() || gk < 0.0 || (gk == 0.0 && (listed || !matches!(w, WeightFamily::Geometric { .. }))) {
            return Err(Error::InvalidFamily(format!("g_{k} = {gk} must be positive")));
        }
        if gk > prev_g {
            return Err(Error::InvalidFamily(if k == 1 {
                format!("g_1 = {gk} must not exceed 1")
            } else {
                format!("weights must be non-increasing: g_{k} = {gk} > g_{} = {prev_g}", k - 1)
            }));
        }
        prev_g = gk;
        prev_r = rk;
    }
    Ok(())
}

/// How a verdict or value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Closed form for the family kind.
    Symbolic,
    /// Closed form for a caller-declared asymptotic kind.
    Declared,
    /// Finite-horizon numerics only.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Unknown,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub verdict: Verdict,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Finding {
    fn new(verdict: Verdict, mode: Mode) -> Self {
        Self { verdict, mode, note: None }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoG {
    #[serde(serialize_with = "ext_f64")]
    pub value: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SptFinding {
    #[serde(flatten)]
    pub finding: Finding,
    /// `max(2/(2 r_1 - 1), 2/(rho_g - 1))` when strong polynomial tractability holds.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub r_1: f64,
    pub g_1: f64,
    /// `lim g_k` for the governing kind (0 when the weights decay).
    #[serde(serialize_with = "ext_f64")]
    pub g_lim: f64,
    /// Whether `sup_d (1/ln+ d) sum_{k<=d} g_k ln+(1/g_k)` is finite.
    pub qpt_condition: Finding,
    /// `(d, (1/ln+ d) sum_{k<=d} g_k ln+(1/g_k))` at a few horizons.
    pub qpt_condition_values: Vec<(usize, f64)>,
    /// `liminf r_k / ln k` for the governing smoothness kind.
    #[serde(serialize_with = "ext_f64")]
    pub smoothness_log_rate: f64,
    /// `min_{k in [h/2, h]} ln(1/g_k) / ln k`.
    #[serde(serialize_with = "ext_f64")]
    pub rho_g_estimate: f64,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TractabilityReport {
    pub spt: SptFinding,
    pub pt: Finding,
    pub qpt: Finding,
    pub wt: Finding,
    pub curse: Finding,
    pub rho_g: RhoG,
    pub diagnostics: Diagnostics,
}

/// Asymptotic shape of `g_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Decay {
    /// `g_k -> g_lim > 0`
    Constant(f64),
    /// `g_k` comparable to `k^{-rho} (ln k)^{-beta}`; `rho = 0, beta > 0` decays slower than any power
    PowerLog { rho: f64, beta: f64 },
    /// faster than every power of `k`
    SuperPolynomial,
}

/// Decay of the weights for closed-form (non-explicit) kinds.
fn decay(w: &WeightFamily, r: &SmoothnessFamily) -> Decay {
    use SmoothnessFamily as S;
    use WeightFamily as W;
    match (w, r) {
        (W::Power { rho }, _) => Decay::PowerLog { rho: *rho, beta: 0.0 },
        (W::PowerLog { rho, beta }, _) => Decay::PowerLog { rho: *rho, beta: *beta },
        (W::InverseLog { .. }, _) => Decay::PowerLog { rho: 0.0, beta: 1.0 },
        (W::Constant { g0 }, _) => Decay::Constant(*g0),
        // v^{a ln k + b} = v^b k^{-a ln(1/v)}
        (W::Geometric { v }, S::Constant { r }) => Decay::Constant(v.powf(*r)),
        (W::Geometric { v }, S::Logarithmic { a, b }) if *a > 0.0 => {
            Decay::PowerLog { rho: a * (1.0 / v).ln(), beta: 0.0 }
        }
        (W::Geometric { v }, S::Logarithmic { b, .. }) => Decay::Constant(v.powf(*b)),
        (W::Geometric { .. }, S::Power { s, .. }) if *s > 0.0 => Decay::SuperPolynomial,
        (W::Geometric { v }, S::Power { c, .. }) => Decay::Constant(v.powf(*c)),
        // (c k^sigma)^{-s}
        (W::PolyInR { s }, S::Power { s: sigma, .. }) if *sigma > 0.0 => Decay::PowerLog { rho: s * sigma, beta: 0.0 },
        (W::PolyInR { s }, S::Power { c, .. }) => Decay::Constant(c.powf(-s)),
        // (a ln k + b)^{-s}
        (W::PolyInR { s }, S::Logarithmic { a, .. }) if *a > 0.0 => Decay::PowerLog { rho: 0.0, beta: *s },
        (W::PolyInR { s }, S::Logarithmic { b, .. }) => Decay::Constant(b.powf(-s)),
        (W::PolyInR { s }, S::Constant { r }) => Decay::Constant(r.powf(-s)),
        (W::Geometric { .. } | W::PolyInR { .. }, S::Explicit { .. }) | (W::Explicit { .. }, _) => {
            unreachable!("explicit kinds are resolved before computing the decay")
        }
    }
}

impl Decay {
    fn rho_g(&self) -> f64 {
        match self {
            Decay::Constant(_) => 0.0,
            Decay::PowerLog { rho, .. } => *rho,
            Decay::SuperPolynomial => f64::INFINITY,
        }
    }

    fn g_lim(&self) -> f64 {
        match self {
            Decay::Constant(g) => *g,
            _ => 0.0,
        }
    }

    /// `sum_k g_k ln+(1/g_k) = O(ln d)`
    fn qpt_condition(&self) -> bool {
        match *self {
            Decay::Constant(_) => false,
            Decay::SuperPolynomial => true,
            // g ln(1/g) ~ k^{-rho} (ln k)^{1-beta}; summing to d gives O(1) for rho > 1,
            // (ln d)^{2-beta} (or ln ln d, or O(1)) for rho = 1, and a power of d for rho < 1
            Decay::PowerLog { rho, beta } => rho > 1.0 || (rho == 1.0 && beta >= 1.0),
        }
    }
}

/// `liminf r_k / ln k` for a closed-form smoothness kind.
fn smoothness_log_rate(r: &SmoothnessFamily) -> f64 {
    match r {
        SmoothnessFamily::Constant { .. } => 0.0,
        SmoothnessFamily::Logarithmic { a, .. } => *a,
        SmoothnessFamily::Power { s, .. } if *s > 0.0 => f64::INFINITY,
        SmoothnessFamily::Power { .. } => 0.0,
        SmoothnessFamily::Explicit { .. } => unreachable!("resolved before use"),
    }
}

/// `(1/ln+ d) sum_{k<=d} g_k ln+(1/g_k)`.
pub fn qpt_condition_value(w: &WeightFamily, r: &SmoothnessFamily, d: usize) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for k in 1..=d {
        let g = w.g(k, r)?;
        if g > 0.0 {
            acc.add(g * (-g.ln()).max(1.0));
        }
    }
    Ok(acc.value() / ln_plus(d as f64))
}

/// `rho_g = liminf ln(1/g_k) / ln k`: symbolic for closed-form kinds, from the
/// declared kind for explicit lists that carry one, otherwise estimated as
/// `min_{k in [h/2, h]} ln(1/g_k) / ln k`.
pub fn rho_g(w: &WeightFamily, r: &SmoothnessFamily, horizon: usize) -> Result<RhoG> {
    match resolve(w, r) {
        Some((wk, rk, mode)) => Ok(RhoG { value: decay(wk, rk).rho_g(), mode }),
        None => Ok(RhoG { value: estimate_rho(w, r, horizon)?, mode: Mode::Estimated }),
    }
}

fn estimate_rho(w: &WeightFamily, r: &SmoothnessFamily, horizon: usize) -> Result<f64> {
    let mut h = horizon.max(10);
    if let Some(n) = w.defined_len() {
        h = h.min(n);
    }
    if let Some(n) = r.defined_len() {
        h = h.min(n);
    }
    let lo = (h / 2).max(2);
    if lo > h {
        return Ok(f64::NAN);
    }
    let mut best = f64::INFINITY;
    for k in lo..=h {
        let g = w.g(k, r)?;
        best = best.min(-g.ln() / (k as f64).ln());
    }
    Ok(best)
}

/// Governing closed-form kinds and the mode they imply.
fn resolve<'a>(w: &'a WeightFamily, r: &'a SmoothnessFamily) -> Option<(&'a WeightFamily, &'a SmoothnessFamily, Mode)> {
    let (wk, wd) = w.tail_kind()?;
    let needs_r = matches!(wk, WeightFamily::Geometric { .. } | WeightFamily::PolyInR { .. });
    let (rk, rd) = match r.tail_kind() {
        Some(x) => x,
        None if needs_r => return None,
        // weights independent of r_k; the smoothness tail only matters for the QPT sufficiency test
        None => (r, true),
    };
    let mode = if wd || rd || matches!(rk, SmoothnessFamily::Explicit { .. }) { Mode::Declared } else { Mode::Symbolic };
    Some((wk, rk, mode))
}

/// Classify a Korobov family.
pub fn classify(w: &WeightFamily, r: &SmoothnessFamily, horizon: usize) -> Result<TractabilityReport> {
    validate_family(w, r, horizon)?;
    let horizon = horizon.max(10);
    let r_1 = r.r(1)?;
    let g_1 = w.g(1, r)?;
    let mut defined = usize::MAX;
    if let Some(n) = w.defined_len() {
        defined = defined.min(n);
    }
    if let Some(n) = r.defined_len() {
        defined = defined.min(n);
    }
    let mut qpt_values = Vec::new();
    for d in [10usize, 100, 1000, horizon] {
        let d = d.min(horizon).min(defined);
        if d >= 1 && qpt_values.last().is_none_or(|(prev, _)| *prev < d) {
            qpt_values.push((d, qpt_condition_value(w, r, d)?));
        }
    }
    let rho_estimate = estimate_rho(w, r, horizon)?;

    let Some((wk, rk, mode)) = resolve(w, r) else {
        let unknown = || Finding::new(Verdict::Unknown, Mode::Estimated).with_note("no asymptotic kind declared; estimates only");
        return Ok(TractabilityReport {
            spt: SptFinding { finding: unknown(), exponent: None },
            pt: unknown(),
            qpt: unknown(),
            wt: unknown(),
            curse: unknown(),
            rho_g: RhoG { value: rho_estimate, mode: Mode::Estimated },
            diagnostics: Diagnostics {
                r_1,
                g_1,
                g_lim: f64::NAN,
                qpt_condition: unknown(),
                qpt_condition_values: qpt_values,
                smoothness_log_rate: f64::NAN,
                rho_g_estimate: rho_estimate,
                horizon,
            },
        });
    };

    let decay = decay(wk, rk);
    let rho = decay.rho_g();
    let pt = rho > 1.0;
    let exponent = pt.then(|| {
        let a = 2.0 / (2.0 * r_1 - 1.0);
        let b = if rho.is_infinite() { 0.0 } else { 2.0 / (rho - 1.0) };
        a.max(b)
    });
    let qpt_cond = decay.qpt_condition();
    let (log_rate, rate_mode) = match rk {
        SmoothnessFamily::Explicit { .. } => (f64::NAN, Mode::Estimated),
        other => (smoothness_log_rate(other), mode),
    };
    // for weights tied to r_k the QPT condition alone is necessary and sufficient
    let tied = matches!(wk, WeightFamily::Geometric { .. } | WeightFamily::PolyInR { .. });
    let qpt = if pt {
        Finding::new(Verdict::Holds, mode)
    } else if !qpt_cond {
        Finding::new(Verdict::Fails, mode)
    } else if tied || log_rate > 0.0 {
        Finding::new(Verdict::Holds, if tied { mode } else { worst(mode, rate_mode) })
    } else if log_rate.is_nan() {
        Finding::new(Verdict::Unknown, Mode::Estimated).with_note("smoothness tail undeclared; liminf r_k / ln k not available")
    } else {
        Finding::new(Verdict::Unknown, mode).with_note(
            "QPT condition on the weights holds but liminf r_k / ln k = 0; sufficiency is not established and necessity is open",
        )
    };
    let g_lim = decay.g_lim();
    let wt = g_lim == 0.0;
    Ok(TractabilityReport {
        spt: SptFinding { finding: Finding::new(Verdict::from_bool(pt), mode), exponent },
        pt: Finding::new(Verdict::from_bool(pt), mode),
        qpt,
        wt: Finding::new(Verdict::from_bool(wt), mode),
        curse: Finding::new(Verdict::from_bool(!wt), mode),
        rho_g: RhoG { value: rho, mode },
        diagnostics: Diagnostics {
            r_1,
            g_1,
            g_lim,
            qpt_condition: Finding::new(Verdict::from_bool(qpt_cond), mode),
            qpt_condition_values: qpt_values,
            smoothness_log_rate: log_rate,
            rho_g_estimate: rho_estimate,
            horizon,
        },
    })
}

fn worst(a: Mode, b: Mode) -> Mode {
    use Mode::*;
    match (a, b) {
        (Estimated, _) | (_, Estimated) => Estimated,
        (Declared, _) | (_, Declared) => Declared,
        _ => Symbolic,
    }
}

impl TractabilityReport {
    /// Check `SPT => PT => QPT => WT` and `curse => not WT` (unknowns never contradict).
    pub fn implications_hold(&self) -> bool {
        let chain = [self.spt.finding.verdict, self.pt.verdict, self.qpt.verdict, self.wt.verdict];
        let forward = chain.windows(2).all(|w| !(w[0] == Verdict::Holds && w[1] == Verdict::Fails));
        let curse = !(self.curse.verdict == Verdict::Holds && self.wt.verdict == Verdict::Holds);
        forward && curse
    }

    /// One line per property, for terminal output.
    pub fn table(&self) -> String {
        let row = |name: &str, f: &Finding, extra: String| {
            format!("{name:<6} {:<8} {:<10}{extra}\n", verdict_str(f.verdict), mode_str(f.mode))
        };
        let mut out = String::new();
        out.push_str(&row(
            "SPT",
            &self.spt.finding,
            self.spt.exponent.map(|p| format!(" p = {}", crate::format::fmt_f64(p))).unwrap_or_default(),
        ));
        out.push_str(&row("PT", &self.pt, String::new()));
        out.push_str(&row("QPT", &self.qpt, self.qpt.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()));
        out.push_str(&row("WT", &self.wt, String::new()));
        out.push_str(&row("curse", &self.curse, String::new()));
        out.push_str(&format!(
            "rho_g  {} ({})\n",
            crate::format::fmt_f64(self.rho_g.value),
            mode_str(self.rho_g.mode)
        ));
        out
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Unknown => "unknown",
    }
}

fn mode_str(m: Mode) -> &'static str {
    match m {
        Mode::Symbolic => "symbolic",
        Mode::Declared => "declared",
        Mode::Estimated => "estimated",
    }
}
