//! Float formatting with 17 significant digits, shared by every JSON and CSV
//! writer so outputs diff exactly across runs and implementations.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// `x` with exactly 17 significant digits. Positional notation for
/// exponents in `-5..17`, scientific otherwise. Non-finite values print as
/// `NaN`, `inf`, `-inf`.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let sci = format!("{:.16e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mant),
    };
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    if !(-5..17).contains(&exp) {
        return format!("{sign}{mant}e{exp}");
    }
    if exp >= 0 {
        let cut = exp as usize + 1;
        let (int, frac) = digits.split_at(cut);
        if frac.is_empty() {
            format!("{sign}{int}.0")
        } else {
            format!("{sign}{int}.{frac}")
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{digits}")
    }
}

struct Sig17Pretty<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17Pretty<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17-significant-digit floats and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17Pretty(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positional_and_scientific() {
        assert_eq!(sig17(0.71), "0.70999999999999996");
        assert_eq!(sig17(1.0), "1.0000000000000000");
        assert_eq!(sig17(-0.9), "-0.90000000000000002");
        assert_eq!(sig17(123.5), "123.50000000000000");
        assert_eq!(sig17(1e-7), "9.9999999999999995e-8");
        assert_eq!(sig17(2.5e-6), "2.5000000000000002e-6");
        assert_eq!(sig17(0.0), "0.0");
        assert_eq!(sig17(1e20), "1.0000000000000000e20");
    }

    #[test]
    fn round_trips_bit_exactly() {
        for x in [
            0.1,
            1.0 / 3.0,
            2.0f64.sqrt() * 1e-9,
            -7.25e12,
            f64::MIN_POSITIVE,
            5e-324,
        ] {
            let back: f64 = sig17(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
    }

    #[test]
    fn json_uses_sig17() {
        let s = to_json(&serde_json::json!({"v": [0.5, 2]})).unwrap();
        assert!(s.contains("0.50000000000000000"), "{s}");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["v"][0].as_f64(), Some(0.5));
    }
}
