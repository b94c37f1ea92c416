//! Integer polynomials with zero constant term, the configuration generator.
//!
//! Text forms accepted by [`Polynomial::from_str`]:
//!
//! * coefficient lists, constant term first: `"0,0,1"` is `d^2`;
//! * the shorthand `"d^k"`;
//! * sums of monomials such as `"d^2+d"` or `"2d^3 - 5d"`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    /// `coeffs[i]` multiplies `d^i`. `coeffs[0] == 0` and the last entry is nonzero.
    coeffs: Vec<i64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<i64>) -> Result<Self> {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(Error::InvalidPolynomial(
                "degree must be at least 1".to_string(),
            ));
        }
        if coeffs[0] != 0 {
            return Err(Error::InvalidPolynomial(format!(
                "constant term must be 0, got {}",
                coeffs[0]
            )));
        }
        Ok(Self { coeffs })
    }

    /// `d^k` for `k >= 1`.
    pub fn monomial(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPolynomial(
                "degree must be at least 1".to_string(),
            ));
        }
        let mut coeffs = vec![0; k as usize + 1];
        coeffs[k as usize] = 1;
        Self::new(coeffs)
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn leading_coefficient(&self) -> i64 {
        *self.coeffs.last().expect("validated non-empty")
    }

    /// Returns `Some(k)` when the polynomial is exactly `d^k`.
    pub fn as_monomial(&self) -> Option<u32> {
        let (lead, rest) = self.coeffs.split_last()?;
        (*lead == 1 && rest.iter().all(|&c| c == 0)).then(|| self.degree())
    }

    /// Exact value of `P(d)` by Horner's rule.
    pub fn eval(&self, d: i64) -> BigInt {
        let d = BigInt::from(d);
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, &c| acc * &d + c)
    }

    /// `P(d)` in 64-bit arithmetic; overflow is reported, never wrapped.
    pub fn eval_i64(&self, d: i64) -> Result<i64> {
        self.eval(d)
            .to_i64()
            .ok_or_else(|| Error::Overflow(format!("P({d}) for P = {}", self.expression())))
    }

    /// Human-readable form, e.g. `d^2 + d`.
    pub fn expression(&self) -> String {
        let mut out = String::new();
        for (power, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let magnitude = c.unsigned_abs();
            if out.is_empty() {
                if c < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if c < 0 { " - " } else { " + " });
            }
            if magnitude != 1 {
                out.push_str(&magnitude.to_string());
            }
            out.push('d');
            if power > 1 {
                out.push('^');
                out.push_str(&power.to_string());
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    /// Canonical coefficient-list form, which parses back to the same value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(i64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Polynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() {
            return Err(Error::InvalidPolynomial("empty input".to_string()));
        }
        if text.contains('d') {
            parse_expression(&text)
        } else {
            let coeffs = text
                .split(',')
                .map(|part| {
                    part.parse::<i64>().map_err(|_| {
                        Error::InvalidPolynomial(format!("bad coefficient {part:?} in {s:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Self::new(coeffs)
        }
    }
}

fn parse_expression(text: &str) -> Result<Polynomial> {
    let bad = |why: &str| Error::InvalidPolynomial(format!("{why} in {text:?}"));

    // Split into signed terms.
    let mut terms = Vec::new();
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        if (ch == '+' || ch == '-') && i > start {
            terms.push(&text[start..i]);
            start = i;
        }
    }
    terms.push(&text[start..]);

    let mut coeffs: Vec<i64> = Vec::new();
    for term in terms {
        let (sign, body) = match term.as_bytes().first() {
            Some(b'+') => (1i64, &term[1..]),
            Some(b'-') => (-1i64, &term[1..]),
            _ => (1i64, term),
        };
        if body.is_empty() {
            return Err(bad("dangling sign"));
        }
        let (coeff, power) = match body.find('d') {
            None => return Err(bad("constant terms are not allowed")),
            Some(pos) => {
                let head = body[..pos].trim_end_matches('*');
                let coeff: i64 = if head.is_empty() {
                    1
                } else {
                    head.parse().map_err(|_| bad("bad coefficient"))?
                };
                let tail = &body[pos + 1..];
                let power: usize = if tail.is_empty() {
                    1
                } else if let Some(exp) = tail.strip_prefix('^') {
                    exp.parse().map_err(|_| bad("bad exponent"))?
                } else {
                    return Err(bad("unexpected characters after d"));
                };
                (coeff, power)
            }
        };
        if power == 0 {
            return Err(bad("constant terms are not allowed"));
        }
        if power > 64 {
            return Err(bad("exponent too large"));
        }
        if coeffs.len() <= power {
            coeffs.resize(power + 1, 0);
        }
        coeffs[power] = coeffs[power]
            .checked_add(sign * coeff)
            .ok_or_else(|| bad("coefficient overflow"))?;
    }
    Polynomial::new(coeffs)
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
