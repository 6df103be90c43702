//! Tensor-product spectra and exact information complexity.
//!
//! The d-variate eigenvalues are all products `prod_k lambda(k, z_k)`. The
//! engine enumerates them best-first from `z = (1, ..., 1)` and stops at the
//! smallest `n` whose top-`n` sum reaches `(1 - eps^2)` of the trace. Every
//! comparison is made on intervals that cover both rounding and the mass
//! lost by truncating the coordinate sequences, so an answer marked
//! `certified` is the true integer.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{BudgetKind, Error, Result};
use crate::numerics::{exact_sum_sign, two_prod, Approx, CompensatedSum, ExtFloat, RESIDUAL_UNSAFE, UNIT_ROUNDOFF};
use crate::spectrum::{Spectrum, TruncatedView};

/// A d-variate tensor-product problem given by its coordinate spectra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductProblem {
    coordinates: Vec<Spectrum>,
}

impl ProductProblem {
    pub fn new(coordinates: Vec<Spectrum>) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::InvalidSpectrum("a product problem needs d >= 1 coordinates".into()));
        }
        Ok(Self { coordinates })
    }

    /// `d` copies of one spectrum.
    pub fn homogeneous(spectrum: Spectrum, d: usize) -> Result<Self> {
        Self::new(vec![spectrum; d])
    }

    pub fn d(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[Spectrum] {
        &self.coordinates
    }

    /// `prod_k trace(k)`, kept in extended range.
    pub fn trace_d(&self) -> ExtFloat {
        self.coordinates
            .iter()
            .fold(ExtFloat::ONE, |acc, c| acc.mul_f64(c.trace()))
    }

    /// `prod_k sum_j lambda(k, j)^tau`.
    pub fn power_sum_d(&self, tau: f64) -> Result<ExtFloat> {
        let mut acc = ExtFloat::ONE;
        for (k, c) in self.coordinates.iter().enumerate() {
            let s = c.power_sum(tau).map_err(|e| e.at_coordinate(k + 1))?;
            acc = acc.mul_f64(s.value);
        }
        Ok(acc)
    }

    /// `lambda_{d,1} = prod_k lambda(k, 1)`.
    pub fn leading_d(&self) -> ExtFloat {
        self.coordinates
            .iter()
            .fold(ExtFloat::ONE, |acc, c| acc.mul_f64(c.leading()))
    }
}

/// 1-based eigenvalue index per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn ones(d: usize) -> Self {
        MultiIndex(vec![1; d])
    }
}

/// Resource limits for one complexity computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budget {
    /// Maximum heap pops per enumeration pass.
    pub n_max: u64,
    /// Cap on the enumeration's node storage, in bytes.
    pub memory_bytes: u64,
    /// Per-coordinate truncation tolerance; `None` selects the default.
    pub tol_rel: Option<f64>,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            n_max: 10_000_000,
            memory_bytes: 2 << 30,
            tol_rel: None,
        }
    }
}

/// Outcome of an information complexity computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityResult {
    pub epsilon: f64,
    pub d: usize,
    /// `n^avg(eps, d)`; when uncertified, the upper end of the bracket.
    pub n: u64,
    pub certified: bool,
    /// Sum of the top `n` eigenvalues that were enumerated.
    pub partial_sum: f64,
    #[serde(rename = "trace")]
    pub trace_d: f64,
    #[serde(rename = "pops")]
    pub enumerated: u64,
    pub n_low: u64,
    pub n_high: Option<u64>,
}

/// Default per-coordinate truncation tolerance.
pub fn default_tolerance(epsilon: f64, d: usize) -> f64 {
    (1e-3 * (1.0 - epsilon * epsilon)).min(1e-6) / d as f64
}

const NONE: u32 = u32::MAX;
const NODE_BYTES: u64 = 32;
const HEAP_ENTRY_BYTES: u64 = 16;

/// One node of the enumeration tree. A node stands for the multi-index
/// obtained from its `prefix` node by setting active coordinate `slot` to
/// `idx`; every coordinate not mentioned along the chain sits at index 1.
#[derive(Debug, Clone, Copy)]
struct Node {
    prefix: u32,
    slot: u32,
    idx: u32,
    value: f64,
    radius: f64,
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    value: f64,
    id: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // larger value first; among ties the earlier-created node first
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Normalized eigenvalues `lambda(k, j) / lambda(k, 1)` of one coordinate,
/// restricted to a truncated view.
struct Axis<'a> {
    coordinate: usize,
    view: TruncatedView<'a>,
    lead: f64,
    korobov: bool,
}

impl Axis<'_> {
    /// Normalized value and its absolute error bound.
    fn weight(&self, j: u32) -> (f64, f64) {
        let raw = self.view.source.eigenvalue(j as u64).unwrap_or(0.0);
        if self.korobov {
            // lambda(1) = 1; pair values are g * m^{-2r}, exact when m = 1
            if j <= 3 {
                (raw, 0.0)
            } else {
                (raw, raw * 3.0 * UNIT_ROUNDOFF)
            }
        } else {
            let w = raw / self.lead;
            let exact = w.mul_add(-self.lead, raw) == 0.0;
            (w, if exact { 0.0 } else { w * UNIT_ROUNDOFF })
        }
    }
}

/// Best-first enumerator over the product of truncated coordinate views.
struct Enumerator<'a> {
    axes: Vec<Axis<'a>>,
    d: usize,
    nodes: Vec<Node>,
    heap: BinaryHeap<HeapEntry>,
    memory_cap: u64,
    pops: u64,
}

/// A popped product eigenvalue, normalized by `lambda_{d,1}`.
#[derive(Debug, Clone, Copy)]
struct Popped {
    id: u32,
    value: f64,
    radius: f64,
}

impl<'a> Enumerator<'a> {
    fn new(views: Vec<TruncatedView<'a>>, memory_cap: u64) -> Self {
        let d = views.len();
        let mut axes: Vec<Axis<'a>> = views
            .into_iter()
            .enumerate()
            .map(|(coordinate, view)| Axis {
                coordinate,
                lead: view.source.leading(),
                korobov: matches!(view.source, Spectrum::Korobov(_)),
                view,
            })
            .filter(|a| a.view.len >= 2)
            .collect();
        axes.retain(|a| a.weight(2).0 > 0.0);
        // most important coordinate first; stable so equal weights keep input order
        axes.sort_by(|a, b| b.weight(2).0.total_cmp(&a.weight(2).0));
        let root = Node { prefix: NONE, slot: NONE, idx: 1, value: 1.0, radius: 0.0 };
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry { value: 1.0, id: 0 });
        Self { axes, d, nodes: vec![root], heap, memory_cap, pops: 0 }
    }

    fn memory_used(&self) -> u64 {
        self.nodes.len() as u64 * NODE_BYTES + self.heap.len() as u64 * HEAP_ENTRY_BYTES
    }

    fn push(&mut self, parent: u32, prefix: u32, slot: u32, idx: u32) {
        let axis = &self.axes[slot as usize];
        if idx as u64 > axis.view.len {
            return;
        }
        let (w, wr) = axis.weight(idx);
        if w <= 0.0 {
            return;
        }
        let (pv, pr) = if prefix == NONE {
            (1.0, 0.0)
        } else {
            let p = self.nodes[prefix as usize];
            (p.value, p.radius)
        };
        let (value, err) = two_prod(pv, w);
        if value < RESIDUAL_UNSAFE {
            return;
        }
        let mut radius = pr * w + pv * wr + pr * wr;
        if err != 0.0 || radius != 0.0 {
            radius = (radius + value * UNIT_ROUNDOFF) * (1.0 + 4.0 * UNIT_ROUNDOFF);
        }
        let parent_node = self.nodes[parent as usize];
        let (value, radius) = if value > parent_node.value {
            // the exact child never exceeds the exact parent
            (parent_node.value, radius + parent_node.radius)
        } else {
            (value, radius)
        };
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { prefix, slot, idx, value, radius });
        self.heap.push(HeapEntry { value, id });
    }

    fn next_popped(&mut self) -> Result<Option<Popped>> {
        let Some(top) = self.heap.pop() else {
            return Ok(None);
        };
        self.pops += 1;
        let id = top.id;
        let node = self.nodes[id as usize];
        let slots = self.axes.len() as u32;
        if node.prefix == NONE && node.slot == NONE {
            if slots > 0 {
                self.push(id, id, 0, 2);
            }
        } else {
            self.push(id, node.prefix, node.slot, node.idx + 1);
            if node.slot + 1 < slots {
                self.push(id, id, node.slot + 1, 2);
                if node.idx == 2 {
                    self.push(id, node.prefix, node.slot + 1, 2);
                }
            }
        }
        if self.nodes.len() >= NONE as usize || self.memory_used() > self.memory_cap {
            return Err(Error::Budget {
                reason: BudgetKind::Memory,
                pops: self.pops,
                lower_bound: 0,
            });
        }
        Ok(Some(Popped { id, value: node.value, radius: node.radius }))
    }

    fn multi_index(&self, id: u32) -> MultiIndex {
        let mut z = MultiIndex::ones(self.d);
        let mut cur = id;
        // the root has prefix NONE and contributes nothing
        while cur != 0 && cur != NONE {
            let n = self.nodes[cur as usize];
            z.0[self.axes[n.slot as usize].coordinate] = n.idx;
            cur = n.prefix;
        }
        z
    }
}

/// Streaming iterator over the largest product eigenvalues, in non-increasing order.
pub struct TopEigenvalues<'a> {
    inner: Enumerator<'a>,
    scale: ExtFloat,
    n_max: u64,
    floor: f64,
    done: bool,
}

impl Iterator for TopEigenvalues<'_> {
    type Item = Result<(MultiIndex, f64)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done || self.inner.pops >= self.n_max {
            return None;
        }
        match self.inner.next_popped() {
            Ok(Some(p)) => {
                let value = self.scale.mul_f64(p.value).to_f64();
                if value < self.floor {
                    self.done = true;
                    return None;
                }
                Some(Ok((self.inner.multi_index(p.id), value)))
            }
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Enumerate product eigenvalues largest first, stopping after `n_max` items or
/// below `floor`. Each coordinate is truncated at relative tolerance `tol_rel`.
pub fn top_eigenvalues(p: &ProductProblem, n_max: u64, floor: f64, tol_rel: f64) -> TopEigenvalues<'_> {
    let views = p.coordinates.iter().map(|c| c.truncated_view(tol_rel)).collect();
    TopEigenvalues {
        inner: Enumerator::new(views, Budget::default().memory_bytes),
        scale: p.leading_d(),
        n_max,
        floor,
        done: false,
    }
}

/// Everything the stopping rule needs, in units of `lambda_{d,1}`.
struct Target {
    threshold: Approx,
    /// Upper bound on the normalized mass outside the truncated grid.
    tail: f64,
    /// Upper bound on any single normalized eigenvalue outside the grid.
    omitted_max: f64,
    trace: Approx,
    scale: ExtFloat,
    epsilon: f64,
}

impl Target {
    /// Exact sign of `s - trace * (1 - eps^2)` when both `s` and the trace are
    /// exact doubles; `None` if some partial product could lose bits.
    fn exact_cmp(&self, s: f64) -> Option<Ordering> {
        if self.trace.radius != 0.0 {
            return None;
        }
        let t = self.trace.value;
        let (p, e) = two_prod(self.epsilon, self.epsilon);
        let (a1, b1) = two_prod(t, p);
        let (a2, b2) = two_prod(t, e);
        let unsafe_small = |x: f64| x != 0.0 && x.abs() < RESIDUAL_UNSAFE;
        if [p, e, a1, a2].iter().any(|x| unsafe_small(*x)) {
            return None;
        }
        Some(exact_sum_sign(&[s, -t, a1, b1, a2, b2]))
    }
}

fn normalized_trace(views: &[TruncatedView<'_>]) -> (Approx, f64, f64) {
    let mut trace = Approx::ONE;
    let mut rel_tail = 0.0;
    let mut omitted_max: f64 = 0.0;
    for v in views {
        let lead = Approx::exact(v.source.leading());
        let t = v.source.trace_approx().div(lead);
        let tail = v.tail_mass / v.source.leading();
        rel_tail += tail / t.lo().max(1.0);
        omitted_max = omitted_max.max(v.omitted_max / v.source.leading());
        trace = trace.mul(t);
    }
    let tail = if rel_tail > 0.0 {
        trace.hi() * rel_tail * (1.0 + 8.0 * UNIT_ROUNDOFF * views.len() as f64)
    } else {
        0.0
    };
    (trace, tail, omitted_max * (1.0 + 4.0 * UNIT_ROUNDOFF))
}

/// Tracks the top-n sum and brackets the answer.
struct Decider<'t> {
    target: &'t Target,
    sum: CompensatedSum,
    radius: f64,
    n: u64,
    n_low: Option<u64>,
    n_high: Option<u64>,
    dominated: bool,
}

impl<'t> Decider<'t> {
    fn new(target: &'t Target) -> Self {
        Self { target, sum: CompensatedSum::new(), radius: 0.0, n: 0, n_low: None, n_high: None, dominated: true }
    }

    /// Feed the next value in non-increasing order; true once the answer is bracketed from above.
    fn feed(&mut self, value: f64, radius: f64) -> bool {
        self.n += 1;
        self.sum.add(value);
        self.radius += radius;
        let r = (self.sum.error_bound() + self.radius) * (1.0 + 4.0 * UNIT_ROUNDOFF);
        let s = self.sum.value();
        if self.dominated && !(self.target.omitted_max < value - radius) {
            self.dominated = false;
        }
        let slack = if self.dominated { 0.0 } else { self.target.tail };
        let exact = if r == 0.0 { self.target.exact_cmp(s) } else { None };
        let definitely = match exact {
            Some(ord) => ord != Ordering::Less,
            None => s - r >= self.target.threshold.hi(),
        };
        let possibly = definitely
            || match exact {
                Some(_) if slack == 0.0 => false,
                _ => s + r + slack >= self.target.threshold.lo(),
            };
        if self.n_low.is_none() && possibly {
            self.n_low = Some(self.n);
        }
        if definitely {
            self.n_high = Some(self.n);
            if self.n_low.is_none() {
                self.n_low = Some(self.n);
            }
            return true;
        }
        false
    }

    fn finish(self, epsilon: f64, d: usize, pops: u64, exhausted: bool) -> Result<ComplexityResult> {
        let Some(n_low) = self.n_low else {
            return Err(Error::Budget {
                reason: if exhausted { BudgetKind::Threshold } else { BudgetKind::Pops },
                pops,
                lower_bound: self.n + 1,
            });
        };
        let n = self.n_high.unwrap_or(n_low);
        Ok(ComplexityResult {
            epsilon,
            d,
            n,
            certified: self.n_high == Some(n_low),
            partial_sum: self.target.scale.mul_f64(self.sum.value()).to_f64(),
            trace_d: self.target.scale.mul_f64(self.target.trace.value).to_f64(),
            enumerated: pops,
            n_low,
            n_high: self.n_high,
        })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    Ok(())
}

fn trivial_result(p: &ProductProblem, epsilon: f64) -> ComplexityResult {
    ComplexityResult {
        epsilon,
        d: p.d(),
        n: 0,
        certified: true,
        partial_sum: 0.0,
        trace_d: p.trace_d().to_f64(),
        enumerated: 0,
        n_low: 0,
        n_high: Some(0),
    }
}

/// Build the stopping target, or fail early when the threshold alone exceeds
/// the pop budget (each normalized eigenvalue is at most 1, so `n >= threshold`).
fn make_target(p: &ProductProblem, views: &[TruncatedView<'_>], epsilon: f64, n_max: u64) -> Result<Target> {
    let factor = 1.0 - epsilon * epsilon;
    let ln_trace: f64 = views
        .iter()
        .map(|v| (v.source.trace() / v.source.leading()).ln())
        .sum();
    let ln_threshold = ln_trace + factor.ln();
    if ln_threshold > (n_max as f64).ln() + 1e-9 {
        let lb = ln_threshold.exp();
        return Err(Error::Budget {
            reason: BudgetKind::Threshold,
            pops: 0,
            lower_bound: if lb >= u64::MAX as f64 { u64::MAX } else { (lb * (1.0 - 1e-12)).ceil() as u64 },
        });
    }
    let (trace, tail, omitted_max) = normalized_trace(views);
    // 1 - eps^2 carries one rounding of eps^2 and one of the subtraction
    let factor = Approx::new(factor, 2.0 * UNIT_ROUNDOFF);
    Ok(Target { threshold: trace.mul(factor), tail, omitted_max, trace, scale: p.leading_d(), epsilon })
}

fn enumerate_once(p: &ProductProblem, views: Vec<TruncatedView<'_>>, epsilon: f64, budget: &Budget) -> Result<ComplexityResult> {
    let target = make_target(p, &views, epsilon, budget.n_max)?;
    let mut e = Enumerator::new(views, budget.memory_bytes);
    let mut decider = Decider::new(&target);
    let mut exhausted = false;
    loop {
        if e.pops >= budget.n_max {
            break;
        }
        match e.next_popped() {
            Ok(Some(pop)) => {
                if decider.feed(pop.value, pop.radius) {
                    break;
                }
            }
            Ok(None) => {
                exhausted = true;
                break;
            }
            Err(Error::Budget { reason, pops, .. }) => {
                return Err(Error::Budget { reason, pops, lower_bound: decider.n_low.unwrap_or(decider.n + 1) });
            }
            Err(other) => return Err(other),
        }
    }
    let pops = e.pops;
    decider.finish(epsilon, p.d(), pops, exhausted)
}

/// `n^avg(eps, d)`: the smallest `n` whose top-`n` eigenvalue sum reaches
/// `(1 - eps^2)` times the trace.
///
/// Truncation is refined (tolerance halved) until the answer is certified,
/// the truncation stops growing, or the budget runs out.
pub fn info_complexity(p: &ProductProblem, epsilon: f64, budget: &Budget) -> Result<ComplexityResult> {
    check_epsilon(epsilon)?;
    if epsilon == 1.0 {
        return Ok(trivial_result(p, epsilon));
    }
    let mut tol = budget.tol_rel.unwrap_or_else(|| default_tolerance(epsilon, p.d()));
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("truncation tolerance must lie in (0, 1), got {tol}")));
    }
    let mut last_lens: Option<Vec<u64>> = None;
    let mut best: Option<ComplexityResult> = None;
    for _ in 0..40 {
        let views: Vec<_> = p.coordinates.iter().map(|c| c.truncated_view(tol)).collect();
        let lens: Vec<u64> = views.iter().map(|v| v.len).collect();
        if last_lens.as_ref() == Some(&lens) {
            break;
        }
        let result = enumerate_once(p, views, epsilon, budget)?;
        if result.certified {
            return Ok(result);
        }
        best = Some(match best {
            Some(b) if b.n_high.is_some() && result.n_high.is_none() => b,
            _ => result,
        });
        last_lens = Some(lens);
        tol *= 0.5;
    }
    Ok(best.expect("at least one enumeration pass"))
}

/// Reference implementation: materialize every product of the first
/// `per_coord_cap` eigenvalues of each coordinate, sort, and apply the same
/// stopping rule.
pub fn brute_force_complexity(p: &ProductProblem, epsilon: f64, per_coord_cap: u64) -> Result<ComplexityResult> {
    const GRID_CAP: u64 = 10_000_000;
    check_epsilon(epsilon)?;
    if per_coord_cap == 0 {
        return Err(Error::Domain("per-coordinate cap must be positive".into()));
    }
    if epsilon == 1.0 {
        return Ok(trivial_result(p, epsilon));
    }
    let views: Vec<_> = p.coordinates.iter().map(|c| c.view_of_len(per_coord_cap)).collect();
    let size: f64 = views.iter().map(|v| v.len as f64).product();
    if size > GRID_CAP as f64 {
        return Err(Error::GridTooLarge { size, cap: GRID_CAP });
    }
    let target = make_target(p, &views, epsilon, u64::MAX)?;
    let mut grid: Vec<(f64, f64)> = vec![(1.0, 0.0)];
    for v in &views {
        let lead = v.source.leading();
        let mut next = Vec::with_capacity(grid.len() * v.len as usize);
        for &(gv, gr) in &grid {
            for x in v.kept() {
                let w = x / lead;
                let wr = if w.mul_add(-lead, x) == 0.0 { 0.0 } else { w * UNIT_ROUNDOFF };
                let (val, err) = two_prod(gv, w);
                let mut r = gr * w + gv * wr + gr * wr;
                if err != 0.0 || r != 0.0 {
                    r = (r + val * UNIT_ROUNDOFF) * (1.0 + 4.0 * UNIT_ROUNDOFF);
                }
                next.push((val, r));
            }
        }
        grid = next;
    }
    grid.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut decider = Decider::new(&target);
    let mut exhausted = true;
    for &(v, r) in &grid {
        if decider.feed(v, r) {
            exhausted = false;
            break;
        }
    }
    let pops = decider.n;
    decider.finish(epsilon, p.d(), pops, exhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;
    use std::f64::consts::PI;

    fn explicit(v: &[f64]) -> Spectrum {
        Spectrum::explicit(v.to_vec(), 0.0).unwrap()
    }

    fn kor(g: f64, r: f64) -> Spectrum {
        Spectrum::korobov(g, r).unwrap()
    }

    fn values(p: &ProductProblem, n: u64) -> Vec<f64> {
        top_eigenvalues(p, n, 0.0, 1e-9).map(|x| x.unwrap().1).collect()
    }

    /// Reference enumerator: best-first search with a visited set and
    /// unit-step successors in every coordinate.
    fn hashset_top(p: &ProductProblem, n: usize, len: u64) -> Vec<f64> {
        let d = p.d();
        let val = |z: &Vec<u32>| -> f64 {
            z.iter()
                .zip(p.coordinates())
                .map(|(j, c)| c.eigenvalue(*j as u64).unwrap_or(0.0))
                .product()
        };
        let mut seen = HashSet::new();
        let mut heap = BinaryHeap::new();
        let start = vec![1u32; d];
        seen.insert(start.clone());
        heap.push((HeapEntry { value: val(&start), id: 0 }, start));
        let mut out = Vec::new();
        while let Some((e, z)) = heap.pop() {
            out.push(e.value);
            if out.len() == n {
                break;
            }
            for k in 0..d {
                let mut y = z.clone();
                y[k] += 1;
                if y[k] as u64 <= len && seen.insert(y.clone()) {
                    let v = val(&y);
                    if v > 0.0 {
                        heap.push((HeapEntry { value: v, id: 0 }, y));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn traces_and_power_sums() {
        let p = ProductProblem::homogeneous(kor(1.0, 1.0), 2).unwrap();
        let one = 1.0 + PI * PI / 3.0;
        assert!((p.trace_d().to_f64() / (one * one) - 1.0).abs() < 1e-13);
        assert!((p.trace_d().to_f64() - 18.402_968_8).abs() < 1e-6);
        let q = ProductProblem::new(vec![explicit(&[1.0, 1.0]), explicit(&[3.0]), explicit(&[4.0, 1.0])]).unwrap();
        assert_eq!(q.trace_d().to_f64(), 30.0);
        assert_eq!(p.power_sum_d(1.0).unwrap(), p.trace_d());
        let s = kor(1.0, 1.0).power_sum(0.75).unwrap().value;
        assert!((p.power_sum_d(0.75).unwrap().to_f64() / (s * s) - 1.0).abs() < 1e-14);
        let mixed = ProductProblem::new(vec![kor(1.0, 2.0), kor(1.0, 1.0)]).unwrap();
        match mixed.power_sum_d(0.5) {
            Err(Error::Divergence { coordinate, .. }) => assert_eq!(coordinate, Some(2)),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn trace_beyond_double_range() {
        let p = ProductProblem::homogeneous(explicit(&[1.0, 1.0]), 2000).unwrap();
        let t = p.trace_d();
        assert!(!t.in_f64_range());
        assert!((t.ln() - 2000.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn enumeration_examples() {
        let p = ProductProblem::homogeneous(explicit(&[1.0, 0.5]), 2).unwrap();
        assert_eq!(values(&p, 10), vec![1.0, 0.5, 0.5, 0.25]);
        let one = ProductProblem::new(vec![explicit(&[3.0, 2.0, 2.0, 1.0])]).unwrap();
        assert_eq!(values(&one, 10), vec![3.0, 2.0, 2.0, 1.0]);
        let k3 = ProductProblem::homogeneous(kor(0.5, 1.0), 3).unwrap();
        let first: Vec<_> = top_eigenvalues(&k3, 4, 0.0, 1e-6).map(|x| x.unwrap()).collect();
        assert_eq!(first[0], (MultiIndex::ones(3), 1.0));
        assert!(first[1..].iter().all(|(_, v)| *v == 0.5));
    }

    #[test]
    fn multi_indices_unique_and_consistent() {
        let p = ProductProblem::new(vec![kor(0.7, 1.2), explicit(&[2.0, 1.0, 0.5]), kor(0.3, 2.0)]).unwrap();
        let mut seen = HashSet::new();
        for item in top_eigenvalues(&p, 3000, 0.0, 1e-6) {
            let (z, v) = item.unwrap();
            let direct: f64 = z
                .0
                .iter()
                .zip(p.coordinates())
                .map(|(j, c)| c.eigenvalue(*j as u64).unwrap())
                .product();
            assert!((v - direct).abs() <= 1e-14 * direct);
            assert!(seen.insert(z));
        }
        assert_eq!(seen.len(), 3000);
    }

    #[test]
    fn matches_hashset_enumerator() {
        let p = ProductProblem::new(vec![kor(0.9, 0.8), kor(0.4, 1.5), explicit(&[1.0, 0.6, 0.3, 0.3, 0.1])]).unwrap();
        let ours: Vec<f64> = top_eigenvalues(&p, 2000, 0.0, 1e-12).map(|x| x.unwrap().1).collect();
        let reference = hashset_top(&p, 2000, u32::MAX as u64);
        assert_eq!(ours.len(), reference.len());
        for (a, b) in ours.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-14 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn complexity_examples() {
        let p = ProductProblem::homogeneous(explicit(&[1.0, 0.5]), 2).unwrap();
        let r = info_complexity(&p, 0.6, &Budget::default()).unwrap();
        assert_eq!((r.n, r.certified, r.trace_d), (2, true, 2.25));
        assert_eq!(r.partial_sum, 1.5);
        assert_eq!(info_complexity(&p, 1.0, &Budget::default()).unwrap().n, 0);
        assert!(info_complexity(&p, 0.0, &Budget::default()).is_err());
        let b = brute_force_complexity(&p, 0.6, 10).unwrap();
        assert_eq!((b.n, b.certified), (2, true));
    }

    #[test]
    fn threshold_on_an_integer_is_decided_exactly() {
        let p = ProductProblem::new(vec![Spectrum::explicit(vec![1.0; 100], 0.0).unwrap()]).unwrap();
        let r = info_complexity(&p, 0.1, &Budget::default()).unwrap();
        assert_eq!((r.n, r.certified), (99, true));
        // the double nearest 0.3 lies below 3/10, so (1 - eps^2) 100 is just above 91
        let r = info_complexity(&p, 0.3, &Budget::default()).unwrap();
        assert_eq!((r.n, r.certified), (92, true));
        let r = info_complexity(&p, 0.5, &Budget::default()).unwrap();
        assert_eq!((r.n, r.certified), (75, true));
    }

    #[test]
    fn korobov_golden_value() {
        // n* for Korobov(1, 1), d = 1, eps = 0.5 from the brute-force oracle
        let p = ProductProblem::new(vec![kor(1.0, 1.0)]).unwrap();
        let b = brute_force_complexity(&p, 0.5, 10_000).unwrap();
        assert!(b.certified);
        // threshold 0.75 (1 + pi^2/3) = 3.2174: 1 + 1 + 1 = 3 falls short, adding 1/4 reaches it
        assert_eq!(b.n, 4);
        let h = info_complexity(&p, 0.5, &Budget::default()).unwrap();
        assert_eq!((h.n, h.certified), (4, true));
    }

    #[test]
    fn threshold_beyond_budget_reports_lower_bound() {
        let p = ProductProblem::homogeneous(explicit(&[1.0, 1.0]), 40).unwrap();
        let budget = Budget { n_max: 1000, ..Budget::default() };
        match info_complexity(&p, 0.5, &budget) {
            Err(Error::Budget { reason: BudgetKind::Threshold, lower_bound, .. }) => {
                assert_eq!(lower_bound, 824_633_720_832)
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn pop_budget_reports_partial_lower_bound() {
        let p = ProductProblem::homogeneous(kor(1.0, 1.0), 3).unwrap();
        let budget = Budget { n_max: 200, ..Budget::default() };
        match info_complexity(&p, 0.1, &budget) {
            Err(Error::Budget { reason: BudgetKind::Pops, lower_bound, pops }) => {
                assert_eq!(pops, 200);
                assert!(lower_bound > 200);
            }
            other => panic!("expected pop budget error, got {other:?}"),
        }
    }

    #[test]
    fn memory_cap_is_enforced() {
        let p = ProductProblem::homogeneous(kor(1.0, 1.0), 6).unwrap();
        let budget = Budget { memory_bytes: 4096, ..Budget::default() };
        assert!(matches!(
            info_complexity(&p, 0.1, &budget),
            Err(Error::Budget { reason: BudgetKind::Memory, .. })
        ));
    }

    #[test]
    fn tie_order_does_not_change_answer() {
        let a = explicit(&[1.0, 0.5, 0.5, 0.25]);
        let b = explicit(&[1.0, 0.5, 0.125]);
        let c = kor(0.5, 1.0);
        let p1 = ProductProblem::new(vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let p2 = ProductProblem::new(vec![c, b, a]).unwrap();
        for eps in [0.9, 0.5, 0.3] {
            let r1 = info_complexity(&p1, eps, &Budget::default()).unwrap();
            let r2 = info_complexity(&p2, eps, &Budget::default()).unwrap();
            assert!(r1.certified && r2.certified);
            assert_eq!(r1.n, r2.n);
        }
    }

    #[test]
    fn result_serializes_with_public_field_names() {
        let p = ProductProblem::homogeneous(explicit(&[1.0, 0.5]), 2).unwrap();
        let r = info_complexity(&p, 0.6, &Budget::default()).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        for key in ["epsilon", "d", "n", "certified", "partial_sum", "trace", "pops"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    fn arb_spectrum() -> impl Strategy<Value = Spectrum> {
        prop_oneof![
            (0.1f64..=1.0, 0.75f64..3.0).prop_map(|(g, r)| kor(g, r)),
            (1usize..12, 0.05f64..4.0).prop_flat_map(|(n, lead)| {
                proptest::collection::vec(0.0f64..1.0, n).prop_map(move |mut v| {
                    v.sort_by(|a, b| b.total_cmp(a));
                    let mut all = vec![lead];
                    all.extend(v.into_iter().map(|x| x * lead));
                    Spectrum::explicit(all, 0.0).unwrap()
                })
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn stream_is_non_increasing(coords in proptest::collection::vec(arb_spectrum(), 1..4)) {
            let p = ProductProblem::new(coords).unwrap();
            let v = values(&p, 500);
            prop_assert!(v.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn heap_equals_brute_force(coords in proptest::collection::vec(arb_spectrum(), 1..4), ei in 0usize..3) {
            let eps = [0.9, 0.5, 0.1][ei];
            let p = ProductProblem::new(coords).unwrap();
            let cap = [1_000_000u64, 3000, 200][p.d() - 1];
            let h = info_complexity(&p, eps, &Budget::default());
            let b = brute_force_complexity(&p, eps, cap);
            if let (Ok(h), Ok(b)) = (h, b) {
                if h.certified && b.certified {
                    prop_assert_eq!(h.n, b.n);
                }
            }
        }

        #[test]
        fn monotone_in_epsilon(coords in proptest::collection::vec(arb_spectrum(), 1..3), a in 0.2f64..0.95, b in 0.2f64..0.95) {
            let p = ProductProblem::new(coords).unwrap();
            let (lo, hi) = (a.min(b), a.max(b));
            let n_lo = info_complexity(&p, lo, &Budget::default()).unwrap();
            let n_hi = info_complexity(&p, hi, &Budget::default()).unwrap();
            if n_lo.certified && n_hi.certified {
                prop_assert!(n_lo.n >= n_hi.n);
            }
        }

        #[test]
        fn monotone_in_d(g in 0.1f64..=1.0, r in 0.8f64..3.0, d in 1usize..3, ei in 0usize..3) {
            let eps = [0.9, 0.5, 0.2][ei];
            let small = info_complexity(&ProductProblem::homogeneous(kor(g, r), d).unwrap(), eps, &Budget::default()).unwrap();
            let big = info_complexity(&ProductProblem::homogeneous(kor(g, r), d + 1).unwrap(), eps, &Budget::default()).unwrap();
            if small.certified && big.certified {
                prop_assert!(big.n >= small.n);
            }
        }

        #[test]
        fn partial_sum_within_trace(coords in proptest::collection::vec(arb_spectrum(), 1..4), ei in 0usize..3) {
            let eps = [0.9, 0.5, 0.1][ei];
            let p = ProductProblem::new(coords).unwrap();
            if let Ok(r) = info_complexity(&p, eps, &Budget::default()) {
                prop_assert!(r.partial_sum >= 0.0);
                prop_assert!(r.partial_sum <= r.trace_d * (1.0 + 1e-12));
                if r.certified && r.n > 0 {
                    prop_assert!(r.partial_sum >= (1.0 - eps * eps) * r.trace_d * (1.0 - 1e-12));
                }
            }
        }

        #[test]
        fn scaling_a_coordinate_changes_nothing(coords in proptest::collection::vec(arb_spectrum(), 1..3), shift in -8i32..8, ei in 0usize..3) {
            let eps = [0.9, 0.5, 0.2][ei];
            let p = ProductProblem::new(coords.clone()).unwrap();
            let c = 2f64.powi(shift);
            let scaled: Vec<Spectrum> = coords
                .into_iter()
                .map(|s| match s {
                    Spectrum::Explicit(e) => {
                        Spectrum::explicit(e.values().iter().map(|v| v * c).collect(), e.tail() * c).unwrap()
                    }
                    k => k,
                })
                .collect();
            let a = info_complexity(&p, eps, &Budget::default()).unwrap();
            let b = info_complexity(&ProductProblem::new(scaled).unwrap(), eps, &Budget::default()).unwrap();
            if a.certified && b.certified {
                prop_assert_eq!(a.n, b.n);
            }
        }
    }
}
