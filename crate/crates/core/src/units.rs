//! SI-suffixed number parsing shared by the netlist, parameter files and CLI flags.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitError(pub String);

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid number '{}'", self.0)
    }
}

impl std::error::Error for UnitError {}

fn suffix_exponent(c: char) -> Option<i32> {
    Some(match c.to_ascii_lowercase() {
        'a' => -18,
        'f' => -15,
        'p' => -12,
        'n' => -9,
        'u' => -6,
        'm' => -3,
        'k' => 3,
        _ => return None,
    })
}

/// Parses `1.5`, `1f`, `500n`, `2.5e-9`, `10p`. A trailing unit word after the
/// suffix (`1fF`, `250nA`) is tolerated when it is purely alphabetic.
pub fn parse_si(text: &str) -> Result<f64, UnitError> {
    let s = text.trim();
    let err = || UnitError(text.to_string());
    let bytes = s.as_bytes();
    let mut end = 0;
    if end < bytes.len() && (bytes[end] == b'+' || bytes[end] == b'-') {
        end += 1;
    }
    while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
        end += 1;
    }
    // exponent, only if followed by a digit (or sign + digit)
    if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
        let mut k = end + 1;
        if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
            k += 1;
        }
        if k < bytes.len() && bytes[k].is_ascii_digit() {
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            end = k;
        }
    }
    let number = &s[..end];
    let rest = &s[end..];
    // The suffix is folded into the decimal exponent so `500n` parses to the
    // same f64 as `500e-9`.
    let value: f64 = match rest.chars().next() {
        None => number.parse().map_err(|_| err())?,
        Some(c) => {
            let shift = suffix_exponent(c).ok_or_else(err)?;
            if !rest[c.len_utf8()..].chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(err());
            }
            let (base, exp) = match number.find(['e', 'E']) {
                Some(i) => (&number[..i], number[i + 1..].parse::<i32>().map_err(|_| err())?),
                None => (number, 0),
            };
            base.parse::<f64>().map_err(|_| err())?;
            format!("{base}e{}", exp + shift).parse().map_err(|_| err())?
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(err())
    }
}

/// Shortest text that parses back to exactly `v`.
pub fn format_exact(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_si("1f").unwrap(), 1e-15);
        assert_eq!(parse_si("500n").unwrap(), 500e-9);
        assert_eq!(parse_si("10p").unwrap(), 10e-12);
        assert_eq!(parse_si("1.2").unwrap(), 1.2);
        assert_eq!(parse_si("2k").unwrap(), 2000.0);
        assert_eq!(parse_si("50a").unwrap(), 50e-18);
        assert_eq!(parse_si("250nA").unwrap(), 250e-9);
        assert_eq!(parse_si("1e-15").unwrap(), 1e-15);
        assert_eq!(parse_si("2.5e3n").unwrap(), 2.5e-6);
        assert_eq!(parse_si("-0.4").unwrap(), -0.4);
        assert_eq!(parse_si("3M").unwrap(), 3e-3);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1x", "1n5", "--1", "1e", "inf"] {
            assert!(parse_si(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn exact_format_round_trips() {
        for v in [1e-15, 0.1 + 0.2, 250e-9, -1.2, 0.0, 6.02e23] {
            assert_eq!(parse_si(&format_exact(v)).unwrap(), v);
        }
    }
}
