//! Variables and linear integer terms.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Sort of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Bool,
}

/// A named, sorted variable.
///
/// Names coming from the parsers are restricted to `[A-Za-z][A-Za-z0-9_]*`;
/// internally generated names carry one of the reserved characters `$`, `@`,
/// `#`, `'` so fresh-variable generation can never collide with parsed input.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn int(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            sort: Sort::Int,
        }
    }

    pub fn bool(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            sort: Sort::Bool,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// A linear combination `constant + sum coeff_i * var_i` over Int variables.
///
/// Kept canonical at all times: zero coefficients are never stored, and the
/// coefficient map is ordered by variable, so structural equality coincides
/// with equality of linear forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct IntTerm {
    pub constant: BigInt,
    coeffs: BTreeMap<Var, BigInt>,
}

impl IntTerm {
    pub fn zero() -> Self {
        IntTerm::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        IntTerm {
            constant: c.into(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn var(v: Var) -> Self {
        debug_assert_eq!(v.sort, Sort::Int);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, BigInt::one());
        IntTerm {
            constant: BigInt::zero(),
            coeffs,
        }
    }

    /// `true` when the term is a bare variable with coefficient 1.
    pub fn as_var(&self) -> Option<&Var> {
        if self.constant.is_zero() && self.coeffs.len() == 1 {
            let (v, c) = self.coeffs.iter().next().unwrap();
            if c.is_one() {
                return Some(v);
            }
        }
        None
    }

    pub fn as_constant(&self) -> Option<&BigInt> {
        if self.coeffs.is_empty() {
            Some(&self.constant)
        } else {
            None
        }
    }

    pub fn coeff(&self, v: &Var) -> BigInt {
        self.coeffs.get(v).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Var, &BigInt)> {
        self.coeffs.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.is_empty()
    }

    pub fn add_coeff(&mut self, v: Var, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(v.clone()).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn add(&self, other: &IntTerm) -> IntTerm {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (v, c) in &other.coeffs {
            out.add_coeff(v.clone(), c);
        }
        out
    }

    pub fn neg(&self) -> IntTerm {
        IntTerm {
            constant: -&self.constant,
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &IntTerm) -> IntTerm {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> IntTerm {
        if k.is_zero() {
            return IntTerm::zero();
        }
        IntTerm {
            constant: &self.constant * k,
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, c)| (v.clone(), c * k))
                .collect(),
        }
    }

    pub fn add_constant(&self, k: &BigInt) -> IntTerm {
        let mut out = self.clone();
        out.constant += k;
        out
    }

    /// Simultaneous substitution of variables by terms; the result is
    /// re-normalised as a linear combination.
    pub fn substitute(&self, sigma: &BTreeMap<Var, IntTerm>) -> IntTerm {
        let mut out = IntTerm::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            match sigma.get(v) {
                Some(t) => out = out.add(&t.scale(c)),
                None => out.add_coeff(v.clone(), c),
            }
        }
        out
    }

    /// Evaluate under a full integer assignment; `None` if a variable is missing.
    pub fn eval(&self, vals: &BTreeMap<Var, BigInt>) -> Option<BigInt> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * vals.get(v)?;
        }
        Some(acc)
    }

    /// Gcd of all coefficients (not the constant); zero for constant terms.
    pub fn coeff_gcd(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in self.coeffs.values() {
            g = num_integer::Integer::gcd(&g, c);
        }
        g.abs()
    }

    /// Largest bit size over coefficients and the constant.
    pub fn max_bits(&self) -> u64 {
        let mut bits = self.constant.bits();
        for c in self.coeffs.values() {
            bits = bits.max(c.bits());
        }
        bits
    }
}

impl fmt::Display for IntTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if first {
                if c.is_one() {
                    write!(f, "{v}")?;
                } else if *c == BigInt::from(-1) {
                    write!(f, "-{v}")?;
                } else {
                    write!(f, "{c}*{v}")?;
                }
                first = false;
            } else if c.is_negative() {
                let a = -c;
                if a.is_one() {
                    write!(f, " - {v}")?;
                } else {
                    write!(f, " - {a}*{v}")?;
                }
            } else if c.is_one() {
                write!(f, " + {v}")?;
            } else {
                write!(f, " + {c}*{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant.is_positive() {
            write!(f, " + {}", self.constant)?;
        } else if self.constant.is_negative() {
            write!(f, " - {}", -&self.constant)?;
        }
        Ok(())
    }
}

/// Deterministic fresh-name source. Confined to whoever owns it; formulas
/// themselves are immutable values.
#[derive(Debug, Default)]
pub struct NameGen {
    counter: u64,
}

impl NameGen {
    pub fn new() -> Self {
        NameGen::default()
    }

    pub fn fresh(&mut self, prefix: &str, sort: Sort) -> Var {
        let name = format!("{prefix}${}", self.counter);
        self.counter += 1;
        Var { name, sort }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Var {
        Var::int("x")
    }
    fn y() -> Var {
        Var::int("y")
    }

    #[test]
    fn linear_normalisation() {
        // x + x - 2x vanishes
        let t = IntTerm::var(x()).add(&IntTerm::var(x()));
        let t = t.sub(&IntTerm::var(x()).scale(&BigInt::from(2)));
        assert!(t.is_zero());
    }

    #[test]
    fn substitution_renormalises() {
        // (x + x)[x -> 2y] = 4y
        let t = IntTerm::var(x()).add(&IntTerm::var(x()));
        let mut sigma = BTreeMap::new();
        sigma.insert(x(), IntTerm::var(y()).scale(&BigInt::from(2)));
        let s = t.substitute(&sigma);
        assert_eq!(s.coeff(&y()), BigInt::from(4));
        assert!(s.constant.is_zero());
    }

    #[test]
    fn display_is_readable() {
        let t = IntTerm::var(x())
            .add(&IntTerm::var(y()).scale(&BigInt::from(-3)))
            .add_constant(&BigInt::from(7));
        assert_eq!(t.to_string(), "x - 3*y + 7");
        assert_eq!(IntTerm::zero().to_string(), "0");
    }
}
