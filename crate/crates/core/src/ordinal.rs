//! Ordinals below epsilon-zero in Cantor normal form.
//!
//! Text grammar (whitespace ignored):
//!
//! ```text
//! expr := term ('+' term)*
//! term := atom ('*' nat)?
//! atom := nat | 'w' | 'w' '^' nat | 'w' '^' '(' expr ')'
//! ```
//!
//! Sums are evaluated left to right with ordinal absorption, so `1+w`
//! normalizes to `w`. Canonical output always parenthesizes exponents above
//! one: `w^(2)+w*3+5`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordinal {
    terms: Vec<Term>,
}

/// `omega^exponent * coefficient`, coefficient >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub exponent: Ordinal,
    pub coefficient: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrdinalKind {
    Zero,
    Successor(Ordinal),
    Limit,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            return Self::zero();
        }
        Ordinal {
            terms: vec![Term {
                exponent: Self::zero(),
                coefficient: n,
            }],
        }
    }

    pub fn omega() -> Self {
        Self::omega_pow(Self::finite(1), 1)
    }

    pub fn omega_pow(exponent: Ordinal, coefficient: u64) -> Self {
        assert!(coefficient > 0, "coefficient must be positive");
        Ordinal {
            terms: vec![Term {
                exponent,
                coefficient,
            }],
        }
    }

    /// Builds an ordinal from terms, validating the normal-form invariants.
    pub fn from_terms(terms: Vec<Term>) -> Result<Self> {
        if terms.iter().any(|t| t.coefficient == 0) {
            return Err(Error::ZeroCoefficient);
        }
        if terms.windows(2).any(|w| w[0].exponent <= w[1].exponent) {
            return Err(Error::Invalid(
                "exponents must be strictly decreasing".into(),
            ));
        }
        Ok(Ordinal { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_finite(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [t] if t.exponent.is_zero() => Some(t.coefficient),
            _ => None,
        }
    }

    pub fn successor(&self) -> Ordinal {
        let mut out = self.clone();
        out.push_term(Self::zero(), 1)
            .expect("successor coefficient overflow");
        out
    }

    pub fn classify(&self) -> OrdinalKind {
        match self.terms.last() {
            None => OrdinalKind::Zero,
            Some(last) if last.exponent.is_zero() => {
                let mut pred = self.clone();
                let tail = pred.terms.last_mut().unwrap();
                tail.coefficient -= 1;
                if tail.coefficient == 0 {
                    pred.terms.pop();
                }
                OrdinalKind::Successor(pred)
            }
            Some(_) => OrdinalKind::Limit,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.classify(), OrdinalKind::Limit)
    }

    /// The `m`-th element (m >= 1) of the canonical cofinal sequence of a limit ordinal.
    ///
    /// Writing `a = g + w^e`, this is `g + w^(e-1) * m` for successor `e`
    /// and `g + w^(e[m])` for limit `e`.
    pub fn fundamental_sequence(&self, m: u64) -> Result<Ordinal> {
        if m == 0 {
            return Err(Error::Invalid(
                "fundamental sequence index must be positive".into(),
            ));
        }
        if !self.is_limit() {
            return Err(Error::NotLimit(self.to_string()));
        }
        let mut prefix = self.clone();
        let last = prefix.terms.pop().unwrap();
        if last.coefficient > 1 {
            prefix.terms.push(Term {
                exponent: last.exponent.clone(),
                coefficient: last.coefficient - 1,
            });
        }
        match last.exponent.classify() {
            OrdinalKind::Successor(e_pred) => {
                prefix.push_term(e_pred, m)?;
            }
            OrdinalKind::Limit => {
                let e_m = last.exponent.fundamental_sequence(m)?;
                prefix.push_term(e_m, 1)?;
            }
            OrdinalKind::Zero => unreachable!("limit ordinals have a nonzero last exponent"),
        }
        Ok(prefix)
    }

    /// Ordinal addition of a single term `w^exponent * coefficient`.
    fn push_term(&mut self, exponent: Ordinal, coefficient: u64) -> Result<()> {
        if coefficient == 0 {
            return Ok(());
        }
        while self
            .terms
            .last()
            .is_some_and(|t| t.exponent < exponent)
        {
            self.terms.pop();
        }
        match self.terms.last_mut() {
            Some(t) if t.exponent == exponent => {
                t.coefficient = t
                    .coefficient
                    .checked_add(coefficient)
                    .ok_or(Error::Overflow)?;
            }
            _ => self.terms.push(Term {
                exponent,
                coefficient,
            }),
        }
        Ok(())
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            let ord = a
                .exponent
                .cmp(&b.exponent)
                .then(a.coefficient.cmp(&b.coefficient));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str("+")?;
            }
            match t.exponent.as_finite() {
                Some(0) => write!(f, "{}", t.coefficient)?,
                Some(1) => {
                    f.write_str("w")?;
                    if t.coefficient > 1 {
                        write!(f, "*{}", t.coefficient)?;
                    }
                }
                _ => {
                    write!(f, "w^({})", t.exponent)?;
                    if t.coefficient > 1 {
                        write!(f, "*{}", t.coefficient)?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(out)
    }
}

impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nat(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a natural number"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Overflow)
    }

    fn expr(&mut self) -> Result<Ordinal> {
        let mut acc = Ordinal::zero();
        loop {
            let (exponent, coefficient) = self.term()?;
            acc.push_term(exponent, coefficient)?;
            if !self.eat(b'+') {
                return Ok(acc);
            }
        }
    }

    /// Returns `(exponent, coefficient)`; coefficient 0 only for a literal `0`.
    fn term(&mut self) -> Result<(Ordinal, u64)> {
        let (exponent, base) = match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                let exponent = if self.eat(b'^') {
                    if self.eat(b'(') {
                        let e = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.error("expected ')'"));
                        }
                        e
                    } else {
                        Ordinal::finite(self.nat()?)
                    }
                } else {
                    Ordinal::finite(1)
                };
                (exponent, 1)
            }
            Some(c) if c.is_ascii_digit() => (Ordinal::zero(), self.nat()?),
            _ => return Err(self.error("expected a number or 'w'")),
        };
        if self.eat(b'*') {
            let k = self.nat()?;
            if k == 0 {
                return Err(Error::ZeroCoefficient);
            }
            let c = base.checked_mul(k).ok_or(Error::Overflow)?;
            return Ok((exponent, c));
        }
        Ok((exponent, base))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn parses_cnf_terms() {
        let a = o("w^(2)+w*3+5");
        let t = a.terms();
        assert_eq!(t.len(), 3);
        assert_eq!(t[0].exponent, Ordinal::finite(2));
        assert_eq!(t[0].coefficient, 1);
        assert_eq!(t[1].exponent, Ordinal::finite(1));
        assert_eq!(t[1].coefficient, 3);
        assert_eq!(t[2].exponent, Ordinal::zero());
        assert_eq!(t[2].coefficient, 5);
        assert_eq!(a.to_string(), "w^(2)+w*3+5");
    }

    #[test]
    fn zero_and_errors() {
        assert!(o("0").terms().is_empty());
        assert_eq!(Ordinal::from_str("w*0"), Err(Error::ZeroCoefficient));
        assert!(matches!(Ordinal::from_str("w+"), Err(Error::Syntax { .. })));
        assert!(matches!(Ordinal::from_str("w^(2"), Err(Error::Syntax { .. })));
        assert!(matches!(Ordinal::from_str("x"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn normalizes_non_canonical_input() {
        assert_eq!(o("1+w"), o("w"));
        assert_eq!(o("w+w"), o("w*2"));
        assert_eq!(o("w^2").to_string(), "w^(2)");
        assert_eq!(o("w^(0)"), o("1"));
        assert_eq!(o("3+w^(w)+w*2+0"), o("w^(w)+w*2"));
        assert_eq!(o("w^(1)*4").to_string(), "w*4");
    }

    #[test]
    fn comparisons() {
        assert_eq!(o("w*2+3").cmp(&o("w^2")), Ordering::Less);
        assert_eq!(o("w").cmp(&o("w")), Ordering::Equal);
        assert_eq!(o("w^(w)").cmp(&o("w^5*9")), Ordering::Greater);
        assert!(o("w+1") > o("w"));
        assert!(o("0") < o("1"));
    }

    #[test]
    fn classification() {
        assert_eq!(o("0").classify(), OrdinalKind::Zero);
        assert_eq!(o("w+1").classify(), OrdinalKind::Successor(o("w")));
        assert_eq!(o("w^2").classify(), OrdinalKind::Limit);
        assert_eq!(o("1").classify(), OrdinalKind::Successor(o("0")));
    }

    #[test]
    fn fundamental_sequences() {
        assert_eq!(o("w").fundamental_sequence(3).unwrap(), o("3"));
        assert_eq!(o("w^2").fundamental_sequence(3).unwrap(), o("w*3"));
        assert_eq!(o("w*2").fundamental_sequence(4).unwrap(), o("w+4"));
        assert_eq!(o("w^(w)").fundamental_sequence(2).unwrap(), o("w^2"));
        assert_eq!(o("w^(w+1)*2").fundamental_sequence(2).unwrap(), o("w^(w+1)+w^(w)*2"));
        assert!(matches!(o("w+1").fundamental_sequence(1), Err(Error::NotLimit(_))));
        assert!(o("w").fundamental_sequence(0).is_err());
    }
}
