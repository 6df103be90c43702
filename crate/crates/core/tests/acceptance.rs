//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! The process exits 0 after reporting so that a known, documented
//! failure does not mask the rest of `cargo test`; set
//! `TRACTLAB_ACCEPTANCE_STRICT=1` to exit 1 on any failure.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tractlab::bounds::{
    chebyshev_bound, curse_lower_bound, jensen_check, poltract2_bound, poly_tract_ratio, pt_log_criterion,
};
use tractlab::family::{KorobovFamily, ProblemFamily, TensorFamily};
use tractlab::fixtures::{MDeltaFixture, StrangeOrdering};
use tractlab::korobov::{classify, SmoothnessFamily, WeightFamily};
use tractlab::numerics::zeta;
use tractlab::tensor::{info_complexity, Budget, ProductProblem};
use tractlab::verify::{self, random_instance, reference_families, verdicts, OracleCase, VerifyOptions};
use tractlab::Error;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
}

fn report(c: &Criterion, outcome: Outcome, elapsed: Duration) -> bool {
    let (mut ok, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(limit) = c.limit {
        if elapsed > limit {
            ok = false;
            detail = format!("{detail}; runtime {:.1}s exceeds {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64());
        }
    }
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag}  [{}] {}  {detail}  ({:.1}s)", c.id, c.name, elapsed.as_secs_f64());
    ok
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn m_delta_exact() -> Outcome {
    let f = MDeltaFixture::new(2.0, 0.5).map_err(|e| e.to_string())?;
    let budget = Budget::default();
    for d in 1..=100 {
        let p = f.problem(d).map_err(|e| e.to_string())?;
        let big_n = f.unit_count(d).map_err(|e| e.to_string())?;
        for eps in [0.1, 0.5, 0.9] {
            let r = info_complexity(&p, eps, &budget).map_err(|e| format!("d={d} eps={eps}: {e}"))?;
            let expect = ((1.0 - eps * eps) * big_n as f64).ceil() as u64;
            if !r.certified || r.n != expect {
                return Err(format!("d={d} eps={eps}: n={} certified={} expected {expect}", r.n, r.certified));
            }
        }
    }
    Ok("300 grid points exact".into())
}

fn strange_ordering() -> Outcome {
    let budget = Budget::default();
    let mut worst = 0.0f64;
    for d in 1..=256usize {
        let p = StrangeOrdering.problem(d).map_err(|e| e.to_string())?;
        for i in 1..=9 {
            let eps = i as f64 / 10.0;
            let r = info_complexity(&p, eps, &budget).map_err(|e| format!("d={d} eps={eps}: {e}"))?;
            if !r.certified || r.n > (d * d) as u64 {
                return Err(format!("d={d} eps={eps}: n={} certified={}", r.n, r.certified));
            }
            worst = worst.max(r.n as f64 / (d * d) as f64);
        }
    }
    // running supremum of the linear criterion at each new important coordinate
    let horizons = [4, 16, 256];
    let mut values = Vec::new();
    for h in horizons {
        values.push(pt_log_criterion(&StrangeOrdering, 0.9, h).map_err(|e| e.to_string())?.linear.value);
    }
    let grows = values.windows(2).all(|w| w[1] > 2.0 * w[0]);
    let detail = format!(
        "max n/d^2 = {worst:.4}; linear criterion sup at d<=4,16,256: {:.3}, {:.3}, {:.3}",
        values[0], values[1], values[2]
    );
    if grows {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence(cases: &[OracleCase]) -> Outcome {
    let mut compared = 0;
    let mut certified = 0;
    for c in cases {
        match c.agrees() {
            Some(true) => compared += 1,
            Some(false) => {
                return Err(format!(
                    "instance {} eps={}: heap {:?} vs brute {:?}",
                    c.index,
                    c.epsilon,
                    c.heap.as_ref().map(|r| r.n),
                    c.brute.as_ref().map(|r| r.n)
                ))
            }
            None => {}
        }
        if c.certified_n().is_some() {
            certified += 1;
        }
        if c.within_brute_bracket() == Some(false) {
            return Err(format!("instance {} eps={}: heap outside the brute-force bracket", c.index, c.epsilon));
        }
        if let Err(e) = &c.heap {
            if !matches!(e, Error::Budget { .. }) {
                return Err(format!("instance {} eps={}: {e}", c.index, c.epsilon));
            }
        }
    }
    let rate = certified as f64 / cases.len() as f64;
    let detail = format!("{compared} doubly certified agree; {certified}/{} certified ({:.1}%)", cases.len(), 100.0 * rate);
    if rate >= 0.95 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sandwich_and_jensen(cases: &[OracleCase]) -> Outcome {
    let mut checked = 0;
    for c in cases {
        let Some(n) = c.certified_n() else { continue };
        let n = n as f64;
        let lo = curse_lower_bound(&c.problem, c.epsilon).map_err(|e| e.to_string())?.value;
        if lo > n {
            return Err(format!("instance {} eps={}: curse {lo} > n {n}", c.index, c.epsilon));
        }
        for tau in [0.7, 0.9] {
            for z in [0.5, 1.0, tau] {
                let hi = upper_or_infinite(chebyshev_bound(&c.problem, c.epsilon, tau, z))?;
                if n > hi {
                    return Err(format!("instance {} eps={} tau={tau} z={z}: n {n} > {hi}", c.index, c.epsilon));
                }
                checked += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut min_slack = f64::INFINITY;
    let mut divergent = 0;
    for _ in 0..100 {
        let p = random_instance(&mut rng);
        let gamma = rng.gen_range(0.05..0.95);
        let j = match jensen_check(&p, gamma) {
            Ok(j) => j,
            // divergent left side: the inequality holds with infinite slack
            Err(Error::Divergence { .. }) => {
                divergent += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        let rel = j.slack() / j.ln_lhs.abs().max(1.0);
        min_slack = min_slack.min(rel);
    }
    if min_slack < -1e-10 {
        return Err(format!("Jensen relative slack {min_slack:e}"));
    }
    Ok(format!("{checked} Chebyshev comparisons, no violations; min Jensen slack {min_slack:.3e} ({divergent} of 100 with divergent left side)"))
}

/// A divergent power sum makes the Chebyshev bound `+inf`.
fn upper_or_infinite(b: tractlab::Result<tractlab::bounds::BoundEvaluation>) -> Result<f64, String> {
    match b {
        Ok(b) => Ok(b.value),
        Err(Error::Divergence { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e.to_string()),
    }
}

fn strong_exponent() -> Outcome {
    let f = KorobovFamily::new(WeightFamily::Power { rho: 3.0 }, SmoothnessFamily::Constant { r: 1.0 });
    let budget = Budget::default();
    let mut plateau = Vec::new();
    for d in 20..=40 {
        let p = f.product(d).map_err(|e| e.to_string())?;
        let r = info_complexity(&p, 0.5, &budget).map_err(|e| format!("d={d}: {e}"))?;
        if !r.certified {
            return Err(format!("d={d}: uncertified"));
        }
        plateau.push(r.n as f64);
    }
    let hi = plateau.iter().cloned().fold(f64::MIN, f64::max);
    let lo = plateau.iter().cloned().fold(f64::MAX, f64::min);
    let ratio = hi / lo;

    let p = f.product(20).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    let mut stopped = Vec::new();
    for i in 0..8 {
        let eps = 10f64.powf(-1.0 - i as f64 / 7.0);
        match info_complexity(&p, eps, &budget) {
            Ok(r) if r.certified => points.push(((1.0 / eps).ln(), (r.n as f64).ln())),
            Ok(r) => stopped.push(format!("eps={eps:.4}: uncertified n<={}", r.n)),
            Err(Error::Budget { lower_bound, .. }) => stopped.push(format!("eps={eps:.4}: n>{lower_bound}")),
            Err(e) => return Err(format!("eps={eps}: {e}")),
        }
    }
    let slope = least_squares_slope(&points);
    let mut detail = format!("plateau max/min {ratio:.4} (n {lo}..{hi})");
    match slope {
        Some(s) => detail.push_str(&format!("; slope {s:.3} over {} certified eps", points.len())),
        None => detail.push_str("; fewer than two certified eps"),
    }
    if !stopped.is_empty() {
        detail.push_str(&format!("; budget stops: {}", stopped.join(", ")));
    }
    let complete = points.len() == 8;
    let slope_ok = slope.is_some_and(|s| s > 0.0 && s <= 2.75);
    if ratio <= 1.05 && slope_ok && complete {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn curse() -> Outcome {
    let f = KorobovFamily::new(WeightFamily::Constant { g0: 0.5 }, SmoothnessFamily::Constant { r: 1.0 });
    let base = 1.0 + zeta(2.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for d in 1..=30 {
        let p = f.product(d).map_err(|e| e.to_string())?;
        let b = curse_lower_bound(&p, 0.5).map_err(|e| e.to_string())?.value;
        let closed = 0.75 * base.powi(d as i32);
        worst = worst.max((b - closed).abs() / closed);
    }
    if worst > 1e-10 {
        return Err(format!("curse bound relative error {worst:e}"));
    }
    // n(0.5, 8) = 22242046 exceeds the default pop budget
    let budget = Budget { n_max: 50_000_000, ..Budget::default() };
    let mut ns = Vec::new();
    for d in 1..=8 {
        let p = f.product(d).map_err(|e| e.to_string())?;
        let b = curse_lower_bound(&p, 0.5).map_err(|e| e.to_string())?.value;
        let r = info_complexity(&p, 0.5, &budget).map_err(|e| format!("d={d}: {e}"))?;
        if !r.certified || (r.n as f64) < b || ns.last().is_some_and(|&m| r.n <= m) {
            return Err(format!("d={d}: n={} certified={} bound={b}", r.n, r.certified));
        }
        ns.push(r.n);
    }
    Ok(format!("max rel error {worst:.1e}; n(0.5, 1..8) = {ns:?}"))
}

fn truth_table() -> Outcome {
    let fams = reference_families();
    for f in &fams {
        let rep = classify(&f.weights, &f.smoothness, 2000).map_err(|e| format!("{}: {e}", f.name))?;
        if verdicts(&rep) != f.verdicts {
            return Err(format!("{}: verdicts {:?}, expected {:?}", f.name, verdicts(&rep), f.verdicts));
        }
        let ok = match (rep.spt.exponent, f.exponent) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12 * b,
            (None, None) => true,
            _ => false,
        };
        if !ok {
            return Err(format!("{}: exponent {:?}, expected {:?}", f.name, rep.spt.exponent, f.exponent));
        }
    }
    Ok(format!("{} families match", fams.len()))
}

fn specialization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut infinite = 0;
    for i in 0..50 {
        let p: ProductProblem = random_instance(&mut rng);
        let tau = rng.gen_range(0.3..0.95);
        let eps = rng.gen_range(0.05..0.95);
        let cheb = upper_or_infinite(chebyshev_bound(&p, eps, tau, tau))?;
        let closed = match poly_tract_ratio(&p, tau, 0.0) {
            Ok(c) => poltract2_bound(c.value, 0.0, tau, p.d(), eps).map_err(|e| e.to_string())?.value,
            Err(Error::Divergence { .. }) => f64::INFINITY,
            Err(e) => return Err(e.to_string()),
        };
        if cheb.is_infinite() || closed.is_infinite() {
            if cheb != closed {
                return Err(format!("instance {i}: chebyshev {cheb} vs {closed}"));
            }
            infinite += 1;
            continue;
        }
        worst = worst.max((cheb - closed).abs() / closed);
    }
    let detail = format!("max rel difference {worst:.1e} on {} finite instances, {infinite} both infinite", 50 - infinite);
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let opts = VerifyOptions::default();
    let a = verify::run(&opts, None).render();
    let b = verify::run(&opts, None).render();
    if a != b {
        return Err("reports differ".into());
    }
    let last = a.lines().last().unwrap_or_default().to_string();
    Ok(format!("{} bytes identical; {last}", a.len()))
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let mut passed = 0;
    let mut total = 0;
    let mut run = |c: Criterion, f: &mut dyn FnMut() -> Outcome| {
        let (outcome, elapsed) = timed(f);
        total += 1;
        if report(&c, outcome, elapsed) {
            passed += 1;
        }
    };

    run(Criterion { id: 1, name: "M_delta fixture exactness", limit: secs(5) }, &mut m_delta_exact);
    run(Criterion { id: 2, name: "strange ordering", limit: secs(10) }, &mut strange_ordering);

    let mut cases = Vec::new();
    run(Criterion { id: 3, name: "oracle equivalence", limit: secs(60) }, &mut || {
        cases = verify::oracle_batch(verify::DEFAULT_SEED, 200, &Budget::default());
        oracle_equivalence(&cases)
    });
    run(Criterion { id: 4, name: "bound sandwich and Jensen", limit: None }, &mut || sandwich_and_jensen(&cases));
    run(Criterion { id: 5, name: "strong polynomial exponent", limit: secs(300) }, &mut strong_exponent);
    run(Criterion { id: 6, name: "curse reproduction", limit: secs(120) }, &mut curse);
    run(Criterion { id: 7, name: "classifier truth table", limit: None }, &mut truth_table);
    run(Criterion { id: 8, name: "specialization identity", limit: None }, &mut specialization);
    run(Criterion { id: 9, name: "verify determinism", limit: None }, &mut determinism);

    println!("{passed}/{total} criteria passed");
    let strict = std::env::var("TRACTLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed != total {
        std::process::exit(1);
    }
}
