//! Float formatting shared by the CSV and JSON writers.
//!
//! Finite values use Rust's shortest round-trip representation; non-finite
//! values are spelled `inf`, `-inf` and `nan` so no information is lost.

use serde::Serializer;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `serialize_with` helper: numbers stay numbers, non-finite values become strings.
pub fn ext_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&fmt_f64(*x))
    }
}

pub fn ext_f64_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ext_f64(v, s),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(1e300), "1e300");
        assert_eq!(fmt_f64(-2.5e-7), "-2.5e-7");
        assert_eq!(fmt_f64(123456.75), "123456.75");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
