//! Floating-point building blocks shared by the spectrum and complexity code.
//!
//! * [`CompensatedSum`]: Neumaier summation that also keeps a rigorous bound
//!   on its own rounding error (zero when every addition was exact).
//! * [`Approx`]: midpoint-radius arithmetic. Integer decisions such as
//!   `S_n >= (1 - eps^2) * trace` are taken on intervals, so a result is only
//!   reported as certified when rounding cannot flip it.
//! * [`ExtFloat`]: an `f64` mantissa with a separate binary exponent for
//!   products over many coordinates that leave the double range.
//! * [`zeta`] and [`zeta_log_moment`]: Riemann zeta and `-zeta'` by direct
//!   summation plus an Euler-Maclaurin tail.

use crate::error::{Error, Result};

/// Unit roundoff of binary64.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Below this magnitude an `fma` residual may itself be rounded.
pub const RESIDUAL_UNSAFE: f64 = 1.0e-290;

/// Error-free transformation `a + b = s + e`.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Error-free transformation `a * b = p + e` (exact unless `p` is tiny).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Sign of the exact sum of `terms`, computed with an error-free expansion
/// (valid as long as no partial sum overflows or underflows).
pub fn exact_sum_sign(terms: &[f64]) -> std::cmp::Ordering {
    // non-overlapping expansion, increasing magnitude, zeros dropped
    let mut e: Vec<f64> = Vec::with_capacity(terms.len());
    for &x in terms {
        let mut q = x;
        let mut h = Vec::with_capacity(e.len() + 1);
        for &c in &e {
            let (s, err) = two_sum(q, c);
            if err != 0.0 {
                h.push(err);
            }
            q = s;
        }
        if q != 0.0 {
            h.push(q);
        }
        e = h;
    }
    match e.last() {
        Some(v) if *v > 0.0 => std::cmp::Ordering::Greater,
        Some(_) => std::cmp::Ordering::Less,
        None => std::cmp::Ordering::Equal,
    }
}

/// `max(1, ln x)`.
#[inline]
pub fn ln_plus(x: f64) -> f64 {
    if x > 0.0 {
        x.ln().max(1.0)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    residual_mass: f64,
    terms: u64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.sum, x);
        self.sum = s;
        self.comp += e;
        self.residual_mass += e.abs();
        self.terms += 1;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Upper bound on `|value() - exact sum of the added terms|`.
    pub fn error_bound(&self) -> f64 {
        if self.residual_mass == 0.0 {
            return 0.0;
        }
        let (_, last) = two_sum(self.sum, self.comp);
        let n = self.terms as f64;
        (last.abs() + (n + 2.0) * UNIT_ROUNDOFF * self.residual_mass) * (1.0 + 8.0 * UNIT_ROUNDOFF)
    }

    pub fn approx(&self) -> Approx {
        Approx::new(self.value(), self.error_bound())
    }

    pub fn of<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc.value()
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// A value together with a bound on its distance from the exact quantity it
/// stands for. A zero radius means the value is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approx {
    pub value: f64,
    pub radius: f64,
}

#[inline]
fn inflate(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * (1.0 + 8.0 * UNIT_ROUNDOFF)
    }
}

impl Approx {
    pub const ZERO: Approx = Approx { value: 0.0, radius: 0.0 };
    pub const ONE: Approx = Approx { value: 1.0, radius: 0.0 };

    pub fn exact(value: f64) -> Self {
        Self { value, radius: 0.0 }
    }

    pub fn new(value: f64, radius: f64) -> Self {
        Self { value, radius: radius.abs() }
    }

    /// A value known only to a relative accuracy of `ulps` units of roundoff.
    pub fn with_relative(value: f64, ulps: f64) -> Self {
        Self::new(value, value.abs() * ulps * UNIT_ROUNDOFF)
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.value - self.radius
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.value + self.radius
    }

    pub fn is_exact(&self) -> bool {
        self.radius == 0.0
    }

    pub fn mul(self, other: Approx) -> Approx {
        let (p, e) = two_prod(self.value, other.value);
        let mut r = self.value.abs() * other.radius
            + other.value.abs() * self.radius
            + self.radius * other.radius
            + e.abs();
        if p != 0.0 && p.abs() < RESIDUAL_UNSAFE {
            r += f64::MIN_POSITIVE;
        }
        Approx { value: p, radius: inflate(r) }
    }

    pub fn add(self, other: Approx) -> Approx {
        let (s, e) = two_sum(self.value, other.value);
        Approx {
            value: s,
            radius: inflate(self.radius + other.radius + e.abs()),
        }
    }

    pub fn sub(self, other: Approx) -> Approx {
        self.add(Approx { value: -other.value, radius: other.radius })
    }

    /// Division by a value whose interval excludes zero.
    pub fn div(self, other: Approx) -> Approx {
        let q = self.value / other.value;
        let rem = (-q).mul_add(other.value, self.value);
        let denom = other.value.abs() - other.radius;
        debug_assert!(denom > 0.0, "divisor interval contains zero");
        let mut r = (rem.abs() + self.radius + q.abs() * other.radius) / denom;
        if q != 0.0 && q.abs() < RESIDUAL_UNSAFE {
            r += f64::MIN_POSITIVE;
        }
        Approx { value: q, radius: inflate(r) }
    }
}

/// Extended-range float `mantissa * 2^exponent`, mantissa in `[0.5, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtFloat {
    mantissa: f64,
    exponent: i64,
}

/// Split a finite non-zero float into `(m, e)` with `x = m * 2^e`, `|m|` in `[0.5, 1)`.
fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        // subnormal
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let m_bits = (bits & !(0x7ffu64 << 52)) | (1022u64 << 52);
    (f64::from_bits(m_bits), biased - 1022)
}

/// `m * 2^e` without intermediate overflow.
fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    if e > 2100 {
        return m.signum() * f64::INFINITY;
    }
    if e < -2200 {
        return 0.0;
    }
    let mut x = m;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

impl ExtFloat {
    pub const ZERO: ExtFloat = ExtFloat { mantissa: 0.0, exponent: 0 };
    pub const ONE: ExtFloat = ExtFloat { mantissa: 0.5, exponent: 1 };

    pub fn from_f64(x: f64) -> Self {
        let (mantissa, exponent) = frexp(x);
        Self { mantissa, exponent }
    }

    /// `exp(l)` without overflow.
    pub fn from_ln(l: f64) -> Self {
        if l == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let e = (l / std::f64::consts::LN_2).floor();
        let m = (l - e * std::f64::consts::LN_2).exp();
        let (m, de) = frexp(m);
        Self { mantissa: m, exponent: e as i64 + de }
    }

    pub fn mul(self, other: ExtFloat) -> Self {
        let (m, e) = frexp(self.mantissa * other.mantissa);
        Self { mantissa: m, exponent: self.exponent + other.exponent + e }
    }

    pub fn mul_f64(self, x: f64) -> Self {
        self.mul(Self::from_f64(x))
    }

    pub fn div(self, other: ExtFloat) -> Self {
        let (m, e) = frexp(self.mantissa / other.mantissa);
        Self { mantissa: m, exponent: self.exponent - other.exponent + e }
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.mantissa, self.exponent)
    }

    pub fn ln(self) -> f64 {
        self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// `(mantissa, binary exponent)` with the mantissa in `[0.5, 1)`.
    pub fn parts(&self) -> (f64, i64) {
        (self.mantissa, self.exponent)
    }

    /// True when the value is representable as a finite, normal `f64`.
    pub fn in_f64_range(&self) -> bool {
        self.mantissa == 0.0 || (-1021..=1024).contains(&self.exponent)
    }
}

impl std::fmt::Display for ExtFloat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.in_f64_range() {
            write!(f, "{}", self.to_f64())
        } else {
            write!(f, "{}*2^{}", self.mantissa, self.exponent)
        }
    }
}

/// Number of directly summed terms before the Euler-Maclaurin tail.
const ZETA_TERMS: u32 = 100;

fn check_zeta_domain(s: f64) -> Result<()> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::Domain(format!("zeta(s) requires finite s > 1, got {s}")));
    }
    Ok(())
}

/// Riemann zeta with a rigorous-in-practice radius: summation rounding plus
/// the first omitted Euler-Maclaurin term (B_6).
pub fn zeta_approx(s: f64) -> Result<Approx> {
    check_zeta_domain(s)?;
    if s >= 24.0 {
        // terms fall below 1e-20 within a handful of steps
        let mut acc = CompensatedSum::new();
        let mut terms = Vec::new();
        let mut m = 2u32;
        loop {
            let t = (m as f64).powf(-s);
            if t < 1e-20 {
                break;
            }
            terms.push(t);
            m += 1;
        }
        // sum_{j >= m} j^{-s} <= m^{-s} + m^{1-s}/(s-1)
        let mf = m as f64;
        let tail = mf.powf(-s) * (1.0 + mf / (s - 1.0));
        for t in terms.iter().rev() {
            acc.add(*t);
        }
        acc.add(1.0);
        let value = acc.value();
        return Ok(Approx::new(value, tail + acc.error_bound() + 4.0 * UNIT_ROUNDOFF * (value - 1.0)));
    }
    let n = ZETA_TERMS as f64;
    let mut acc = CompensatedSum::new();
    // tail first (smallest), then the terms from small to large
    let n_s = n.powf(-s);
    let tail = n_s * n / (s - 1.0) + 0.5 * n_s + s / 12.0 * n_s / n
        - s * (s + 1.0) * (s + 2.0) / 720.0 * n_s / (n * n * n);
    acc.add(tail);
    for m in (2..ZETA_TERMS).rev() {
        acc.add((m as f64).powf(-s));
    }
    acc.add(1.0);
    let value = acc.value();
    let remainder =
        2.0 * s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * n_s / n.powi(5);
    // powf is faithful to within a couple of ulps per term
    let rounding = acc.error_bound() + 4.0 * UNIT_ROUNDOFF * value + 8.0 * UNIT_ROUNDOFF * tail.abs();
    Ok(Approx::new(value, remainder + rounding))
}

/// `zeta(s) = sum_{m>=1} m^{-s}` for `s > 1`.
pub fn zeta(s: f64) -> Result<f64> {
    Ok(zeta_approx(s)?.value)
}

/// `sum_{m>=2} m^{-s} ln m`, i.e. `-zeta'(s)`, for `s > 1`.
pub fn zeta_log_moment(s: f64) -> Result<f64> {
    check_zeta_domain(s)?;
    let n = ZETA_TERMS as f64;
    let ln_n = n.ln();
    let n_s = n.powf(-s);
    let sm1 = s - 1.0;
    let integral = n_s * n * (ln_n / sm1 + 1.0 / (sm1 * sm1));
    let half = 0.5 * n_s * ln_n;
    // f(x) = x^-s ln x; f'(x) = x^{-s-1}(1 - s ln x)
    let d1 = n_s / n * (1.0 - s * ln_n);
    // f'''(x) = x^{-s-3}[(s+2)(2s+1) + s(s+1) - s(s+1)(s+2) ln x]
    let d3 = n_s / (n * n * n)
        * ((s + 2.0) * (2.0 * s + 1.0) + s * (s + 1.0) - s * (s + 1.0) * (s + 2.0) * ln_n);
    let tail = integral + half - d1 / 12.0 + d3 / 720.0;
    let mut acc = CompensatedSum::new();
    acc.add(tail);
    for m in (2..ZETA_TERMS).rev() {
        let mf = m as f64;
        acc.add(mf.powf(-s) * mf.ln());
    }
    Ok(acc.value())
}
