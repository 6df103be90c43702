//! End-to-end verification suite behind `tractlab verify`.
//!
//! Every randomized batch is drawn from a ChaCha8 stream seeded by the
//! caller, and the report contains no timings, so equal seeds give
//! byte-identical reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{chebyshev_bound, curse_lower_bound, entropy_sum, jensen_check, poltract2_bound, poly_tract_ratio};
use crate::error::{Error, Result};
use crate::family::{KorobovFamily, ProblemFamily, TensorFamily};
use crate::fixtures::{MDeltaFixture, StrangeOrdering};
use crate::korobov::{classify, SmoothnessFamily, TractabilityReport, Verdict, WeightFamily};
use crate::numerics::{zeta, CompensatedSum};
use crate::spectrum::Spectrum;
use crate::tensor::{brute_force_complexity, info_complexity, Budget, ComplexityResult, ProductProblem};

pub const ORACLE_EPSILONS: [f64; 3] = [0.9, 0.5, 0.1];
pub const DEFAULT_BATCH: usize = 200;
pub const DEFAULT_SEED: u64 = 1;
const BRUTE_GRID: f64 = 1e7;

/// Korobov with `g in [0.1, 1]`, `r in [0.6, 3]`, or an explicit list of at most 30 values.
pub fn random_spectrum(rng: &mut ChaCha8Rng) -> Spectrum {
    if rng.gen_bool(0.5) {
        Spectrum::korobov(rng.gen_range(0.1..=1.0), rng.gen_range(0.6..=3.0)).expect("parameters in range")
    } else {
        explicit_spectrum(rng)
    }
}

fn explicit_spectrum(rng: &mut ChaCha8Rng) -> Spectrum {
    let len = rng.gen_range(1..=30);
    let mut v: Vec<f64> = (0..len).map(|_| rng.gen_range(0.01..=1.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Spectrum::explicit(v, 0.0).expect("sorted positive values")
}

/// `d` uniform in `1..=3`, coordinates from [`random_spectrum`].
pub fn random_instance(rng: &mut ChaCha8Rng) -> ProductProblem {
    let d = rng.gen_range(1..=3);
    ProductProblem::new((0..d).map(|_| random_spectrum(rng)).collect()).expect("non-empty")
}

/// Per-coordinate cap keeping the brute-force grid under `grid` products.
pub fn brute_force_cap(p: &ProductProblem, grid: f64) -> u64 {
    let mut fixed = 1.0;
    let mut open = 0;
    for c in p.coordinates() {
        match c {
            Spectrum::Explicit(e) => fixed *= e.values().len() as f64,
            Spectrum::Korobov(_) => open += 1,
        }
    }
    if open == 0 {
        return 30;
    }
    let mut cap = (grid / fixed).powf(1.0 / open as f64).floor() as u64;
    // powf can land one off the exact integer root
    while cap > 1 && (cap as f64).powi(open) * fixed > grid {
        cap -= 1;
    }
    while ((cap + 1) as f64).powi(open) * fixed <= grid {
        cap += 1;
    }
    cap.max(1)
}

/// Brute force on grids of `1e4, 1e5, 1e6, 1e7` products, stopping at the first certified answer.
pub fn brute_force_oracle(p: &ProductProblem, epsilon: f64) -> Result<ComplexityResult> {
    let mut last = None;
    for grid in [1e4, 1e5, 1e6, BRUTE_GRID] {
        let r = brute_force_complexity(p, epsilon, brute_force_cap(p, grid))?;
        if r.certified {
            return Ok(r);
        }
        last = Some(r);
    }
    Ok(last.expect("at least one grid"))
}

/// One instance of the oracle batch at one `eps`.
#[derive(Debug, Clone)]
pub struct OracleCase {
    pub index: usize,
    pub problem: ProductProblem,
    pub epsilon: f64,
    pub heap: Result<ComplexityResult>,
    pub brute: Result<ComplexityResult>,
}

impl OracleCase {
    /// Both engines certified and agree.
    pub fn agrees(&self) -> Option<bool> {
        match (&self.heap, &self.brute) {
            (Ok(h), Ok(b)) if h.certified && b.certified => Some(h.n == b.n),
            _ => None,
        }
    }

    /// The heap answer (or its budget lower bound) is consistent with the brute-force bracket.
    pub fn within_brute_bracket(&self) -> Option<bool> {
        match (&self.heap, &self.brute) {
            (Ok(h), Ok(b)) if h.certified => Some(b.n_low <= h.n && b.n_high.is_none_or(|hi| h.n <= hi)),
            (Err(Error::Budget { lower_bound, .. }), Ok(b)) => Some(b.n_high.is_none_or(|hi| *lower_bound <= hi)),
            _ => None,
        }
    }

    pub fn certified_n(&self) -> Option<u64> {
        match &self.heap {
            Ok(h) if h.certified => Some(h.n),
            _ => None,
        }
    }
}

/// `count` random instances, each at every `eps` in [`ORACLE_EPSILONS`].
pub fn oracle_batch(seed: u64, count: usize, budget: &Budget) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problems: Vec<ProductProblem> = (0..count).map(|_| random_instance(&mut rng)).collect();
    let jobs: Vec<(usize, &ProductProblem, f64)> = problems
        .iter()
        .enumerate()
        .flat_map(|(i, p)| ORACLE_EPSILONS.iter().map(move |e| (i, p, *e)))
        .collect();
    jobs.par_iter()
        .map(|&(index, p, epsilon)| OracleCase {
            index,
            problem: p.clone(),
            epsilon,
            heap: info_complexity(p, epsilon, budget),
            brute: brute_force_oracle(p, epsilon),
        })
        .collect()
}

/// A reference Korobov family together with its expected verdicts
/// `[SPT, PT, QPT, WT, curse]` and strong exponent.
pub struct ReferenceFamily {
    pub name: &'static str,
    pub weights: WeightFamily,
    pub smoothness: SmoothnessFamily,
    pub verdicts: [Verdict; 5],
    pub exponent: Option<f64>,
}

/// Families covering each branch of the Korobov classification.
pub fn reference_families() -> Vec<ReferenceFamily> {
    use Verdict::{Fails as F, Holds as T};
    let geo_rho = 2.0 * 9f64.ln();
    vec![
        ReferenceFamily {
            name: "power weights rho=3, r=1",
            weights: WeightFamily::Power { rho: 3.0 },
            smoothness: SmoothnessFamily::Constant { r: 1.0 },
            verdicts: [T, T, T, T, F],
            exponent: Some(2.0),
        },
        ReferenceFamily {
            name: "power weights rho=0.5, r=1",
            weights: WeightFamily::Power { rho: 0.5 },
            smoothness: SmoothnessFamily::Constant { r: 1.0 },
            verdicts: [F, F, F, T, F],
            exponent: None,
        },
        ReferenceFamily {
            name: "geometric v=1/9, r=2 ln k + 1",
            weights: WeightFamily::Geometric { v: 1.0 / 9.0 },
            smoothness: SmoothnessFamily::Logarithmic { a: 2.0, b: 1.0 },
            verdicts: [T, T, T, T, F],
            exponent: Some(2f64.max(2.0 / (geo_rho - 1.0))),
        },
        ReferenceFamily {
            name: "geometric v=1/e, r=0.5 ln k + 1",
            weights: WeightFamily::Geometric { v: (-1f64).exp() },
            smoothness: SmoothnessFamily::Logarithmic { a: 0.5, b: 1.0 },
            verdicts: [F, F, F, T, F],
            exponent: None,
        },
        ReferenceFamily {
            name: "polynomial-in-r s=2, r=k",
            weights: WeightFamily::PolyInR { s: 2.0 },
            smoothness: SmoothnessFamily::Power { c: 1.0, s: 1.0 },
            verdicts: [T, T, T, T, F],
            exponent: Some(2.0),
        },
        ReferenceFamily {
            name: "constant weights g=0.5, r=1",
            weights: WeightFamily::Constant { g0: 0.5 },
            smoothness: SmoothnessFamily::Constant { r: 1.0 },
            verdicts: [F, F, F, F, T],
            exponent: None,
        },
    ]
}

pub fn verdicts(r: &TractabilityReport) -> [Verdict; 5] {
    [r.spt.finding.verdict, r.pt.verdict, r.qpt.verdict, r.wt.verdict, r.curse.verdict]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub batch: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = format!("tractlab verify seed={} batch={}\n", self.seed, self.batch);
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag}  {:<width$}  {}\n", c.name, c.detail));
        }
        let ok = self.checks.iter().filter(|c| c.passed).count();
        out.push_str(&format!("{ok}/{} checks passed\n", self.checks.len()));
        out
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub batch: usize,
    pub budget: Budget,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, batch: DEFAULT_BATCH, budget: Budget::default() }
    }
}

fn check(name: &str, outcome: std::result::Result<String, String>) -> CheckResult {
    match outcome {
        Ok(detail) => CheckResult { name: name.into(), passed: true, detail },
        Err(detail) => CheckResult { name: name.into(), passed: false, detail },
    }
}

type Outcome = std::result::Result<String, String>;

fn m_delta_closed_form(budget: &Budget) -> Outcome {
    let f = MDeltaFixture::new(2.0, 0.5).map_err(|e| e.to_string())?;
    let mut points = 0;
    for d in 1..=100 {
        let p = f.problem(d).map_err(|e| e.to_string())?;
        let units = f.unit_count(d).map_err(|e| e.to_string())?;
        for eps in ORACLE_EPSILONS {
            let r = info_complexity(&p, eps, budget).map_err(|e| format!("d={d} eps={eps}: {e}"))?;
            let expect = ((1.0 - eps * eps) * units as f64).ceil() as u64;
            if !r.certified || r.n != expect {
                return Err(format!("d={d} eps={eps}: got n={} certified={}, expected {expect}", r.n, r.certified));
            }
            points += 1;
        }
    }
    Ok(format!("{points} grid points match ceil((1-eps^2) N(d))"))
}

fn strange_ordering_quadratic(budget: &Budget) -> Outcome {
    let mut points = 0;
    for d in [1, 2, 3, 4, 5, 15, 16, 17, 64] {
        let p = StrangeOrdering.problem(d).map_err(|e| e.to_string())?;
        for i in 1..=9 {
            let eps = i as f64 / 10.0;
            let r = info_complexity(&p, eps, budget).map_err(|e| format!("d={d} eps={eps}: {e}"))?;
            if !r.certified || r.n > (d * d) as u64 {
                return Err(format!("d={d} eps={eps}: n={} certified={}", r.n, r.certified));
            }
            points += 1;
        }
    }
    Ok(format!("{points} grid points with n <= d^2"))
}

fn curse_reproduction(budget: &Budget) -> Outcome {
    let f = KorobovFamily::new(WeightFamily::Constant { g0: 0.5 }, SmoothnessFamily::Constant { r: 1.0 });
    let base = 1.0 + zeta(2.0).map_err(|e| e.to_string())?;
    let mut prev = 0;
    for d in 1..=6 {
        let p = f.product(d).map_err(|e| e.to_string())?;
        let b = curse_lower_bound(&p, 0.5).map_err(|e| e.to_string())?.value;
        let closed = 0.75 * base.powi(d as i32);
        if (b - closed).abs() > 1e-10 * closed {
            return Err(format!("d={d}: bound {b} vs closed form {closed}"));
        }
        let r = info_complexity(&p, 0.5, budget).map_err(|e| format!("d={d}: {e}"))?;
        if !r.certified || (r.n as f64) < b || r.n <= prev {
            return Err(format!("d={d}: n={} bound={b} previous={prev}", r.n));
        }
        prev = r.n;
    }
    Ok(format!("bound matches 0.75 (1+zeta(2))^d; n increasing up to n(6)={prev}"))
}

fn classifier_truth_table() -> Outcome {
    let fams = reference_families();
    for f in &fams {
        let rep = classify(&f.weights, &f.smoothness, 2000).map_err(|e| format!("{}: {e}", f.name))?;
        if verdicts(&rep) != f.verdicts {
            return Err(format!("{}: verdicts {:?}", f.name, verdicts(&rep)));
        }
        let ok = match (rep.spt.exponent, f.exponent) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12 * b,
            (None, None) => true,
            _ => false,
        };
        if !ok || !rep.implications_hold() {
            return Err(format!("{}: exponent {:?}", f.name, rep.spt.exponent));
        }
    }
    Ok(format!("{} reference families", fams.len()))
}

fn rejects_non_monotone_spectrum() -> Outcome {
    match Spectrum::explicit(vec![1.0, 0.25, 0.5], 0.0) {
        Err(Error::InvalidSpectrum(_)) => Ok("increasing list refused".into()),
        other => Err(format!("accepted a non-monotone list: {other:?}")),
    }
}

fn oracle_checks(cases: &[OracleCase]) -> Vec<CheckResult> {
    let compared: Vec<bool> = cases.iter().filter_map(|c| c.agrees()).collect();
    let mismatches = compared.iter().filter(|ok| !**ok).count();
    let bracket: Vec<bool> = cases.iter().filter_map(|c| c.within_brute_bracket()).collect();
    let outside = bracket.iter().filter(|ok| !**ok).count();
    let budget_hits = cases.iter().filter(|c| matches!(c.heap, Err(Error::Budget { .. }))).count();
    let errors: Vec<String> = cases
        .iter()
        .filter_map(|c| match &c.heap {
            Ok(_) | Err(Error::Budget { .. }) => None,
            Err(e) => Some(format!("#{} eps={}: {e}", c.index, c.epsilon)),
        })
        .collect();
    let certified = cases.iter().filter(|c| c.certified_n().is_some()).count();
    let rate = certified as f64 / cases.len().max(1) as f64;

    let mut sandwich_checked = 0;
    let mut sandwich_fail = Vec::new();
    for c in cases {
        let Some(n) = c.certified_n() else { continue };
        let n = n as f64;
        match curse_lower_bound(&c.problem, c.epsilon) {
            Ok(b) if b.value <= n * (1.0 + 1e-12) => {}
            other => sandwich_fail.push(format!("#{} eps={} curse {other:?}", c.index, c.epsilon)),
        }
        for tau in [0.7, 0.9] {
            for z in [0.5, 1.0, tau] {
                match chebyshev_bound(&c.problem, c.epsilon, tau, z) {
                    Ok(b) if b.value >= n * (1.0 - 1e-12) => sandwich_checked += 1,
                    // a divergent power sum makes the bound infinite
                    Err(Error::Divergence { .. }) => {}
                    other => sandwich_fail.push(format!("#{} eps={} tau={tau} z={z}: {other:?}", c.index, c.epsilon)),
                }
            }
        }
    }

    vec![
        check(
            "heap engine matches brute-force oracle",
            if mismatches == 0 && !compared.is_empty() {
                Ok(format!("{} doubly certified cases agree", compared.len()))
            } else {
                Err(format!("{mismatches} of {} cases disagree", compared.len()))
            },
        ),
        check(
            "heap answer inside brute-force bracket",
            if outside == 0 {
                Ok(format!("{} cases", bracket.len()))
            } else {
                Err(format!("{outside} of {} outside", bracket.len()))
            },
        ),
        check(
            "heap engine fails only by exhausting its budget",
            if errors.is_empty() {
                Ok(format!("{} runs, {budget_hits} budget stops", cases.len()))
            } else {
                Err(errors.join("; "))
            },
        ),
        check(
            "certification rate at default tolerance >= 0.95",
            if rate >= 0.95 {
                Ok(format!("{certified}/{} certified", cases.len()))
            } else {
                Err(format!("{certified}/{} certified", cases.len()))
            },
        ),
        check(
            "curse <= n <= chebyshev on oracle batch",
            if sandwich_fail.is_empty() {
                Ok(format!("{sandwich_checked} finite chebyshev comparisons"))
            } else {
                Err(sandwich_fail.join("; "))
            },
        ),
    ]
}

/// Smallest Korobov smoothness among the coordinates, or infinity.
fn min_smoothness(p: &ProductProblem) -> f64 {
    p.coordinates()
        .iter()
        .filter_map(|c| match c {
            Spectrum::Korobov(k) => Some(k.r()),
            Spectrum::Explicit(_) => None,
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest admissible power-sum exponent plus a margin.
fn convergent_floor(p: &ProductProblem) -> f64 {
    (1.0 / (2.0 * min_smoothness(p)) + 0.01).max(0.05)
}

fn jensen_batch(rng: &mut ChaCha8Rng, count: usize) -> Outcome {
    let mut worst = f64::INFINITY;
    for i in 0..count {
        let p = random_instance(rng);
        let gamma = rng.gen_range(0.01..=0.99) * (1.0 - convergent_floor(&p));
        let c = jensen_check(&p, gamma).map_err(|e| format!("#{i}: {e}"))?;
        let slack = c.slack() / c.ln_rhs.abs().max(1.0);
        worst = worst.min(slack);
        if slack < -1e-10 {
            return Err(format!("#{i} gamma={gamma}: lhs {} < rhs {}", c.ln_lhs, c.ln_rhs));
        }
    }
    Ok(format!("{count} spectra; smallest relative log slack {worst:e}"))
}

fn specialization_batch(rng: &mut ChaCha8Rng, count: usize) -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let p = random_instance(rng);
        let lo = convergent_floor(&p);
        let tau = rng.gen_range(lo..0.99);
        let eps = rng.gen_range(0.01..0.99);
        let a = chebyshev_bound(&p, eps, tau, tau).map_err(|e| format!("#{i}: {e}"))?;
        let c = poly_tract_ratio(&p, tau, 0.0).map_err(|e| format!("#{i}: {e}"))?;
        let b = poltract2_bound(c.value, 0.0, tau, p.d(), eps).map_err(|e| format!("#{i}: {e}"))?;
        let rel = (a.value - b.value).abs() / b.value;
        worst = worst.max(rel);
        if !(rel <= 1e-12) {
            return Err(format!("#{i} tau={tau} eps={eps}: {} vs {}", a.value, b.value));
        }
    }
    Ok(format!("{count} instances; largest relative difference {worst:e}"))
}

fn entropy_identity(rng: &mut ChaCha8Rng, count: usize) -> Outcome {
    for i in 0..count {
        let d = rng.gen_range(1..=3);
        let coords: Vec<Spectrum> = (0..d).map(|_| explicit_spectrum(rng)).collect();
        let lists: Vec<Vec<f64>> = coords
            .iter()
            .map(|c| match c {
                Spectrum::Explicit(e) => e.values().to_vec(),
                Spectrum::Korobov(_) => unreachable!(),
            })
            .collect();
        let p = ProductProblem::new(coords).map_err(|e| e.to_string())?;
        let mut values = vec![1.0];
        for l in &lists {
            values = values.iter().flat_map(|v| l.iter().map(move |x| v * x)).collect();
        }
        let total = CompensatedSum::of(values.iter().copied());
        let direct = CompensatedSum::of(values.iter().map(|v| {
            let q = v / total;
            -q * q.ln()
        }));
        let h = entropy_sum(&p).map_err(|e| e.to_string())?.total;
        if (h - direct).abs() > 1e-9 * direct.abs().max(1e-300) + 1e-15 {
            return Err(format!("#{i}: tensor {h} vs direct {direct}"));
        }
    }
    Ok(format!("{count} explicit products, d <= 3"))
}

/// Runs the fixed checks, the seeded randomized batches, and the optional
/// `extra` check that a configured problem builds at every requested dimension.
pub fn run(opts: &VerifyOptions, extra: Option<(&str, Outcome)>) -> VerifyReport {
    let mut checks = vec![
        check("M-delta fixture matches closed form", m_delta_closed_form(&opts.budget)),
        check("strange ordering needs at most d^2 evaluations", strange_ordering_quadratic(&opts.budget)),
        check("constant weights reproduce curse bound", curse_reproduction(&opts.budget)),
        check("Korobov classifier truth table", classifier_truth_table()),
        check("non-monotone spectrum rejected", rejects_non_monotone_spectrum()),
    ];
    let cases = oracle_batch(opts.seed, opts.batch, &opts.budget);
    checks.extend(oracle_checks(&cases));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x05ee_d0fb_a7c4);
    checks.push(check("Jensen inequality in log form", jensen_batch(&mut rng, 100)));
    checks.push(check("chebyshev at z = tau equals poltract2", specialization_batch(&mut rng, 50)));
    checks.push(check("entropy of product equals sum of entropies", entropy_identity(&mut rng, 50)));
    if let Some((name, outcome)) = extra {
        checks.push(check(name, outcome));
    }
    VerifyReport { seed: opts.seed, batch: opts.batch, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_cap_respects_grid_limit() {
        let k = Spectrum::korobov(0.5, 1.0).unwrap();
        let e = Spectrum::explicit(vec![1.0; 10], 0.0).unwrap();
        let p = ProductProblem::new(vec![k.clone(), k.clone(), k.clone()]).unwrap();
        assert_eq!(brute_force_cap(&p, 1e7), 215);
        assert_eq!(brute_force_cap(&p, 1e6), 100);
        let p = ProductProblem::new(vec![k.clone(), e.clone()]).unwrap();
        assert_eq!(brute_force_cap(&p, 1e7), 1_000_000);
        let p = ProductProblem::new(vec![e]).unwrap();
        assert_eq!(brute_force_cap(&p, 1e4), 30);
    }

    #[test]
    fn small_report_is_deterministic() {
        let opts = VerifyOptions { batch: 6, ..Default::default() };
        let a = run(&opts, None).render();
        let b = run(&opts, None).render();
        assert_eq!(a, b);
        assert!(a.starts_with("tractlab verify seed=1 batch=6\n"));
    }

    #[test]
    fn failing_extra_check_fails_the_report() {
        let opts = VerifyOptions { batch: 3, ..Default::default() };
        let r = run(&opts, Some(("configured problem builds", Err("bad".into()))));
        assert!(!r.passed());
        assert!(r.render().contains("FAIL  configured problem builds"));
    }
}
