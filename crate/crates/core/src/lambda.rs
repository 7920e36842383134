//! Exact arithmetic in the ordered abelian groups used for coordinates and
//! distances.
//!
//! Three value groups are supported: ℤ, ℚ and ℚ×ℚ ordered
//! lexicographically. All arithmetic happens in the divisible hull ℚ⊗Λ so
//! that scaling by a rational is always defined. For ℤ this means values
//! are stored as rationals; integrality is a property of sampled inputs,
//! not of the arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational used for coordinates, matrix entries and scalings.
pub type Q = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LambdaError {
    #[error("value group mismatch: {0} vs {1}")]
    SpecMismatch(LambdaSpec, LambdaSpec),
    #[error("cannot parse scalar {0:?}: {1}")]
    Parse(String, String),
    #[error("unknown value group {0:?} (expected Z, Q or QxQ_lex)")]
    UnknownSpec(String),
}

/// Which totally ordered abelian group Λ the building is defined over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LambdaSpec {
    #[serde(rename = "Z")]
    Integers,
    #[serde(rename = "Q")]
    Rationals,
    /// ℚ×ℚ with lexicographic order; the second coordinate is infinitesimal
    /// relative to the first.
    #[serde(rename = "QxQ_lex")]
    LexPair,
}

impl LambdaSpec {
    pub fn name(self) -> &'static str {
        match self {
            LambdaSpec::Integers => "Z",
            LambdaSpec::Rationals => "Q",
            LambdaSpec::LexPair => "QxQ_lex",
        }
    }
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LambdaSpec {
    type Err = LambdaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Z" | "z" | "integers" => Ok(LambdaSpec::Integers),
            "Q" | "q" | "rationals" => Ok(LambdaSpec::Rationals),
            "QxQ_lex" | "lex" | "lex_pair" => Ok(LambdaSpec::LexPair),
            other => Err(LambdaError::UnknownSpec(other.to_string())),
        }
    }
}

/// An element of ℚ⊗Λ.
///
/// For ℤ and ℚ the `minor` component is always zero. Ordering is by
/// `(major, minor)`, which is the lexicographic order for pairs and the
/// usual order otherwise.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scalar {
    spec: LambdaSpec,
    major: Q,
    minor: Q,
}

impl Scalar {
    pub fn zero(spec: LambdaSpec) -> Self {
        Scalar { spec, major: Q::zero(), minor: Q::zero() }
    }

    pub fn from_q(spec: LambdaSpec, value: Q) -> Self {
        Scalar { spec, major: value, minor: Q::zero() }
    }

    pub fn from_int(spec: LambdaSpec, value: i64) -> Self {
        Self::from_q(spec, Q::from_integer(value))
    }

    /// A lexicographic pair. Panics if `spec` is not [`LambdaSpec::LexPair`]
    /// and `minor` is nonzero.
    pub fn pair(spec: LambdaSpec, major: Q, minor: Q) -> Self {
        assert!(
            spec == LambdaSpec::LexPair || minor.is_zero(),
            "second coordinate only exists in the lexicographic group"
        );
        Scalar { spec, major, minor }
    }

    /// The smallest "natural" positive element: `1` for ℤ and ℚ, the
    /// infinitesimal `(0,1)` for the lexicographic group.
    pub fn infinitesimal(spec: LambdaSpec) -> Self {
        match spec {
            LambdaSpec::LexPair => Scalar { spec, major: Q::zero(), minor: Q::from_integer(1) },
            _ => Self::from_int(spec, 1),
        }
    }

    pub fn spec(&self) -> LambdaSpec {
        self.spec
    }

    pub fn major(&self) -> Q {
        self.major
    }

    pub fn minor(&self) -> Q {
        self.minor
    }

    pub fn is_zero(&self) -> bool {
        self.major.is_zero() && self.minor.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn signum(&self) -> Ordering {
        match self.major.cmp(&Q::zero()) {
            Ordering::Equal => self.minor.cmp(&Q::zero()),
            o => o,
        }
    }

    /// True if the value is an element of Λ itself rather than only of the
    /// divisible hull.
    pub fn in_group(&self) -> bool {
        match self.spec {
            LambdaSpec::Integers => self.major.is_integer(),
            _ => true,
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -*self
        } else {
            *self
        }
    }

    /// Total-order comparison that refuses to mix value groups.
    pub fn compare(&self, other: &Scalar) -> Result<Ordering, LambdaError> {
        if self.spec != other.spec {
            return Err(LambdaError::SpecMismatch(self.spec, other.spec));
        }
        Ok(self.cmp(other))
    }

    pub fn scale(&self, factor: Q) -> Self {
        Scalar { spec: self.spec, major: self.major * factor, minor: self.minor * factor }
    }

    pub fn parse(spec: LambdaSpec, text: &str) -> Result<Self, LambdaError> {
        let t = text.trim();
        let err = |m: &str| LambdaError::Parse(text.to_string(), m.to_string());
        if let Some(inner) = t.strip_prefix('(') {
            let inner = inner.strip_suffix(')').ok_or_else(|| err("unclosed pair"))?;
            if spec != LambdaSpec::LexPair {
                return Err(err("pairs are only valid in QxQ_lex"));
            }
            let (a, b) = inner.split_once(',').ok_or_else(|| err("pair needs two components"))?;
            let major = parse_q(a).map_err(|m| err(&m))?;
            let minor = parse_q(b).map_err(|m| err(&m))?;
            return Ok(Scalar { spec, major, minor });
        }
        let value = parse_q(t).map_err(|m| err(&m))?;
        Ok(Scalar::from_q(spec, value))
    }

    fn check(&self, other: &Scalar) {
        assert_eq!(self.spec, other.spec, "arithmetic across value groups");
    }
}

fn parse_q(text: &str) -> Result<Q, String> {
    let t = text.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num: i64 = num.parse().map_err(|e| format!("numerator: {e}"))?;
    let den: i64 = den.parse().map_err(|e| format!("denominator: {e}"))?;
    if den <= 0 {
        return Err("denominator must be positive".into());
    }
    Ok(Q::new(num, den))
}

pub(crate) fn fmt_q(q: &Q) -> String {
    if q.is_integer() {
        format!("{}", q.numer())
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.major.cmp(&other.major).then_with(|| self.minor.cmp(&other.minor))
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        self.check(&rhs);
        Scalar { spec: self.spec, major: self.major + rhs.major, minor: self.minor + rhs.minor }
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self = *self + rhs;
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        self.check(&rhs);
        Scalar { spec: self.spec, major: self.major - rhs.major, minor: self.minor - rhs.minor }
    }
}

impl SubAssign for Scalar {
    fn sub_assign(&mut self, rhs: Scalar) {
        *self = *self - rhs;
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { spec: self.spec, major: -self.major, minor: -self.minor }
    }
}

impl Mul<Q> for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Q) -> Scalar {
        self.scale(rhs)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.spec {
            LambdaSpec::LexPair => write!(f, "({},{})", fmt_q(&self.major), fmt_q(&self.minor)),
            _ => f.write_str(&fmt_q(&self.major)),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn compare_examples() {
        let a = Scalar::from_q(LambdaSpec::Rationals, q(3, 2));
        assert_eq!(a.compare(&a).unwrap(), Ordering::Equal);

        let lex = LambdaSpec::LexPair;
        let x = Scalar::pair(lex, q(1, 1), q(0, 1));
        let y = Scalar::pair(lex, q(0, 1), q(5, 1));
        assert_eq!(x.compare(&y).unwrap(), Ordering::Greater);

        let u = Scalar::pair(lex, q(0, 1), q(-1, 1));
        assert_eq!(u.compare(&Scalar::zero(lex)).unwrap(), Ordering::Less);
    }

    #[test]
    fn compare_rejects_mixed_groups() {
        let a = Scalar::from_int(LambdaSpec::Integers, 1);
        let b = Scalar::from_int(LambdaSpec::Rationals, 1);
        assert_eq!(
            a.compare(&b),
            Err(LambdaError::SpecMismatch(LambdaSpec::Integers, LambdaSpec::Rationals))
        );
    }

    #[test]
    fn abs_examples() {
        let r = LambdaSpec::Rationals;
        assert_eq!(Scalar::from_q(r, q(-7, 3)).abs(), Scalar::from_q(r, q(7, 3)));
        let lex = LambdaSpec::LexPair;
        assert_eq!(
            Scalar::pair(lex, q(-1, 1), q(4, 1)).abs(),
            Scalar::pair(lex, q(1, 1), q(-4, 1))
        );
        assert!(Scalar::zero(r).abs().is_zero());
    }

    #[test]
    fn text_encoding() {
        let r = LambdaSpec::Rationals;
        assert_eq!(Scalar::parse(r, "6/4").unwrap().to_string(), "3/2");
        assert_eq!(Scalar::parse(r, "-5").unwrap().to_string(), "-5");
        let lex = LambdaSpec::LexPair;
        let p = Scalar::parse(lex, "(1/2,-3)").unwrap();
        assert_eq!(p.to_string(), "(1/2,-3)");
        assert!(Scalar::parse(r, "(1,2)").is_err());
        assert!(Scalar::parse(r, "1/0").is_err());
        assert!(Scalar::parse(r, "x").is_err());
    }

    #[test]
    fn infinitesimal_is_below_every_standard_positive() {
        let lex = LambdaSpec::LexPair;
        let eps = Scalar::infinitesimal(lex);
        assert!(eps.is_positive());
        assert!(eps < Scalar::from_q(lex, q(1, 1_000_000)));
    }

    fn arb_scalar() -> impl Strategy<Value = Scalar> {
        (-50i64..50, 1i64..8, -50i64..50, 1i64..8)
            .prop_map(|(a, b, c, d)| Scalar::pair(LambdaSpec::LexPair, q(a, b), q(c, d)))
    }

    proptest! {
        #[test]
        fn group_laws(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            let zero = Scalar::zero(LambdaSpec::LexPair);
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a + zero, a);
            prop_assert_eq!(a + (-a), zero);
            prop_assert_eq!(a + b, b + a);
        }

        #[test]
        fn order_is_translation_invariant(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            if a < b {
                prop_assert!(a + c < b + c);
            }
        }

        #[test]
        fn abs_is_subadditive(a in arb_scalar(), b in arb_scalar()) {
            prop_assert!((a + b).abs() <= a.abs() + b.abs());
            prop_assert!(a.abs() >= Scalar::zero(LambdaSpec::LexPair));
            prop_assert_eq!(a.abs().is_zero(), a.is_zero());
        }
    }
}
