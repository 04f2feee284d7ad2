//! Parsing of quadratic-surd constants such as `2+sqrt(3)` or `(3+sqrt(33))/2`.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn surd_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // a [+-] [b[*]] sqrt(c)
        Regex::new(
            r"^(?P<a>[+-]?\d+(?:\.\d+)?)?(?:(?P<sign>[+-])?(?P<b>\d+(?:\.\d+)?)?\*?sqrt\((?P<c>\d+(?:\.\d+)?)\))?$",
        )
        .expect("static regex")
    })
}

fn radical_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"√(\d+(?:\.\d+)?)").expect("static regex"))
}

/// Parse a plain number or an expression of the form `a ± b·sqrt(c)`,
/// optionally wrapped as `(…)/d` or `-(…)/d`. Anything else is rejected.
pub fn parse_surd(input: &str) -> Result<f64> {
    let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    let compact = radical_regex().replace_all(&compact, "sqrt(${1})").into_owned();
    if compact.is_empty() {
        return Err(Error::InvalidArgument("empty constant".into()));
    }
    if let Some(rest) = compact.strip_prefix("-(") {
        return parse_surd(&format!("({rest}")).map(|x| -x);
    }
    let (numerator, denominator) = match compact.rfind('/') {
        Some(pos) => {
            let den: f64 = compact[pos + 1..]
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad denominator in {input:?}")))?;
            if den == 0.0 {
                return Err(Error::InvalidArgument(format!("zero denominator in {input:?}")));
            }
            (&compact[..pos], den)
        }
        None => (compact.as_str(), 1.0),
    };
    let numerator = numerator
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .unwrap_or(numerator);

    let caps = surd_regex()
        .captures(numerator)
        .ok_or_else(|| Error::InvalidArgument(format!("unsupported constant {input:?}")))?;
    let a = caps.name("a").map(|m| m.as_str().parse::<f64>().unwrap()).unwrap_or(0.0);
    let surd = match caps.name("c") {
        Some(c) => {
            let c: f64 = c.as_str().parse().unwrap();
            let b = caps.name("b").map(|m| m.as_str().parse::<f64>().unwrap()).unwrap_or(1.0);
            let sign = match caps.name("sign").map(|m| m.as_str()) {
                Some("-") => -1.0,
                Some(_) => 1.0,
                // "sqrt(3)" alone is fine, "2sqrt(3)" (no operator after a) is not
                None if caps.name("a").is_some() => {
                    return Err(Error::InvalidArgument(format!("unsupported constant {input:?}")))
                }
                None => 1.0,
            };
            sign * b * c.sqrt()
        }
        None if caps.name("a").is_none() => {
            return Err(Error::InvalidArgument(format!("unsupported constant {input:?}")))
        }
        None => 0.0,
    };
    Ok((a + surd) / denominator)
}

/// A JSON scalar given either as a number or as a surd string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64> {
        match self {
            Scalar::Number(x) => Ok(*x),
            Scalar::Expr(s) => parse_surd(s),
        }
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::Number(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_surds() {
        assert_eq!(parse_surd("3").unwrap(), 3.0);
        assert_eq!(parse_surd("-2.5").unwrap(), -2.5);
        assert_eq!(parse_surd("2+sqrt(3)").unwrap(), 2.0 + 3f64.sqrt());
        assert_eq!(parse_surd("2 - sqrt(3)").unwrap(), 2.0 - 3f64.sqrt());
        assert_eq!(parse_surd("1+2*sqrt(7)").unwrap(), 1.0 + 2.0 * 7f64.sqrt());
        assert_eq!(parse_surd("sqrt(2)").unwrap(), 2f64.sqrt());
        assert_eq!(parse_surd("(3+sqrt(33))/2").unwrap(), (3.0 + 33f64.sqrt()) / 2.0);
        assert_eq!(parse_surd("2+√3").unwrap(), 2.0 + 3f64.sqrt());
        assert_eq!(parse_surd("-(2-sqrt(3))/2").unwrap(), -((2.0 - 3f64.sqrt()) / 2.0));
    }

    #[test]
    fn rejects_other_expressions() {
        for bad in ["", "2*3", "sin(1)", "2sqrt(3)", "sqrt(3)+2", "1/0", "x", "-(x)", "--(3)"] {
            assert!(parse_surd(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn scalar_json() {
        let s: Scalar = serde_json::from_str("\"2+sqrt(3)\"").unwrap();
        assert!((s.value().unwrap() - 3.732050807568877).abs() < 1e-15);
        let s: Scalar = serde_json::from_str("3.0").unwrap();
        assert_eq!(s.value().unwrap(), 3.0);
    }
}
