//! Exact rationals and the extended value `∞` used for ray lengths and
//! self-valuations.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;
use core::ops::Add;
use core::str::FromStr;

use num_traits::{Signed, Zero};

pub type Q = num_rational::Rational64;

pub fn q(n: i64) -> Q {
    Q::from_integer(n)
}

pub fn frac(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// A rational number or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ext {
    Finite(Q),
    Infinite,
}

impl Ext {
    pub fn finite(self) -> Option<Q> {
        match self {
            Ext::Finite(v) => Some(v),
            Ext::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Ext::Infinite)
    }

    pub fn min(self, other: Ext) -> Ext {
        core::cmp::min(self, other)
    }

    pub fn mul_int(self, m: u64) -> Ext {
        match self {
            Ext::Finite(v) => Ext::Finite(v * q(m as i64)),
            Ext::Infinite => Ext::Infinite,
        }
    }

    pub fn div_int(self, m: u64) -> Ext {
        match self {
            Ext::Finite(v) => Ext::Finite(v / q(m as i64)),
            Ext::Infinite => Ext::Infinite,
        }
    }

    pub fn cmp_q(self, v: Q) -> Ordering {
        self.cmp(&Ext::Finite(v))
    }
}

impl From<Q> for Ext {
    fn from(v: Q) -> Self {
        Ext::Finite(v)
    }
}

impl Add for Ext {
    type Output = Ext;
    fn add(self, rhs: Ext) -> Ext {
        match (self, rhs) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a + b),
            _ => Ext::Infinite,
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(v) => write!(f, "{}", DisplayQ(*v)),
            Ext::Infinite => f.write_str("inf"),
        }
    }
}

/// Formats a rational as `p` or `p/q` in lowest terms.
pub struct DisplayQ(pub Q);

impl fmt::Display for DisplayQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational {text:?}")]
pub struct ParseRationalError {
    pub text: String,
}

pub fn parse_q(text: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError { text: String::from(text) };
    let t = text.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n = i64::from_str(n).map_err(|_| err())?;
    let d = i64::from_str(d).map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Q::new(n, d))
}

pub fn parse_ext(text: &str) -> Result<Ext, ParseRationalError> {
    match text.trim() {
        "inf" | "+inf" | "∞" => Ok(Ext::Infinite),
        t => parse_q(t).map(Ext::Finite),
    }
}

pub(crate) fn is_positive(v: Q) -> bool {
    v.is_positive()
}
