//! Exact rational costs with an explicit infinity.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use thiserror::Error;

pub type Rational = Rational64;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid cost literal `{0}`")]
pub struct CostParseError(pub String);

/// Parse a non-negative cost written as an integer, a fraction `a/b` or a decimal.
pub fn parse_rational(s: &str) -> Result<Rational, CostParseError> {
    let err = || CostParseError(s.to_string());
    let s = s.trim();
    let value = if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| err())?;
        let b: i64 = b.trim().parse().map_err(|_| err())?;
        if b == 0 {
            return Err(err());
        }
        Rational::new(a, b)
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) || frac.len() > 12 {
            return Err(err());
        }
        let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
        if int < 0 || int.to_string().starts_with('-') && int == 0 {
            return Err(err());
        }
        let den = 10i64.pow(frac.len() as u32);
        let num: i64 = frac.parse().map_err(|_| err())?;
        Rational::from_integer(int) + Rational::new(num, den)
    } else {
        Rational::from_integer(s.parse().map_err(|_| err())?)
    };
    if value.is_negative() {
        return Err(err());
    }
    Ok(value)
}

/// Render a rational the way [`parse_rational`] reads it back.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A DP cost: a finite rational or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cost {
    Finite(Rational),
    Infinite,
}

impl Cost {
    pub fn zero() -> Self {
        Cost::Finite(Rational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn finite(&self) -> Option<Rational> {
        match self {
            Cost::Finite(r) => Some(*r),
            Cost::Infinite => None,
        }
    }
}

impl From<Rational> for Cost {
    fn from(r: Rational) -> Self {
        Cost::Finite(r)
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => a.cmp(b),
            (Cost::Finite(_), Cost::Infinite) => Ordering::Less,
            (Cost::Infinite, Cost::Finite(_)) => Ordering::Greater,
            (Cost::Infinite, Cost::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        match (self, rhs) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Infinite,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(r) => write!(f, "{}", format_rational(r)),
            Cost::Infinite => write!(f, "inf"),
        }
    }
}
