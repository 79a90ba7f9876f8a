//! Exact multivariate polynomials over the rationals, with arbitrary
//! non-arithmetic terms as opaque atoms. Used to normalize real-arithmetic
//! goals and as the data carrier for the decision procedures.

use crate::syntax::{is_builtin_arith, rat_is_zero, Rat, Term};
use num::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Product of atoms with positive integer exponents; the empty monomial is 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Monomial(pub BTreeMap<Term, u32>);

impl Monomial {
    pub fn unit() -> Monomial {
        Monomial::default()
    }

    pub fn atom(t: Term) -> Monomial {
        let mut m = BTreeMap::new();
        m.insert(t, 1);
        Monomial(m)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.0.clone();
        for (t, e) in &other.0 {
            *m.entry(t.clone()).or_insert(0) += e;
        }
        Monomial(m)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn degree_in(&self, atom: &Term) -> u32 {
        self.0.get(atom).copied().unwrap_or(0)
    }

    /// Remove one factor of `atom`; caller guarantees it divides.
    fn divide_once(&self, atom: &Term) -> Monomial {
        let mut m = self.0.clone();
        match m.get_mut(atom) {
            Some(e) if *e > 1 => *e -= 1,
            Some(_) => {
                m.remove(atom);
            }
            None => panic!("monomial not divisible"),
        }
        Monomial(m)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Polynomial {
    /// Monomial → nonzero coefficient.
    pub terms: BTreeMap<Monomial, Rat>,
}

impl Polynomial {
    pub fn zero() -> Polynomial {
        Polynomial::default()
    }

    pub fn constant(c: Rat) -> Polynomial {
        let mut p = Polynomial::zero();
        if !rat_is_zero(&c) {
            p.terms.insert(Monomial::unit(), c);
        }
        p
    }

    pub fn one() -> Polynomial {
        Polynomial::constant(Rat::one())
    }

    pub fn atom(t: Term) -> Polynomial {
        let mut p = Polynomial::zero();
        p.terms.insert(Monomial::atom(t), Rat::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::unit()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let e = out.terms.entry(m.clone()).or_insert_with(Rat::zero);
            *e += c;
            if rat_is_zero(e) {
                out.terms.remove(m);
            }
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = m1.mul(m2);
                let e = out.terms.entry(m.clone()).or_insert_with(Rat::zero);
                *e += c1 * c2;
                if rat_is_zero(e) {
                    out.terms.remove(&m);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Polynomial {
        if rat_is_zero(c) {
            return Polynomial::zero();
        }
        Polynomial { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, atom: &Term) -> u32 {
        self.terms.keys().map(|m| m.degree_in(atom)).max().unwrap_or(0)
    }

    pub fn atoms(&self) -> BTreeSet<Term> {
        self.terms.keys().flat_map(|m| m.0.keys().cloned()).collect()
    }

    /// `c * atom + rest` with `rest` free of `atom`, when the polynomial is
    /// linear in `atom` with a constant leading coefficient.
    pub fn split_linear_in(&self, atom: &Term) -> Option<(Rat, Polynomial)> {
        if self.degree_in(atom) != 1 {
            return None;
        }
        let mut coeff = Rat::zero();
        let mut rest = Polynomial::zero();
        for (m, c) in &self.terms {
            match m.degree_in(atom) {
                0 => {
                    rest.terms.insert(m.clone(), c.clone());
                }
                1 => {
                    let reduced = m.divide_once(atom);
                    if reduced.degree() != 0 {
                        // leading coefficient is not a plain rational
                        return None;
                    }
                    coeff += c;
                }
                _ => return None,
            }
        }
        if rat_is_zero(&coeff) {
            return None;
        }
        Some((coeff, rest))
    }

    /// Substitute `atom := replacement` everywhere.
    pub fn substitute_atom(&self, atom: &Term, replacement: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let e = m.degree_in(atom);
            let mut base = Monomial(m.0.clone());
            base.0.remove(atom);
            let mut piece = Polynomial { terms: BTreeMap::from([(base, c.clone())]) };
            for _ in 0..e {
                piece = piece.mul(replacement);
            }
            out = out.add(&piece);
        }
        out
    }

    /// Coefficient map for a polynomial of total degree ≤ 1: (coeffs, const).
    pub fn linear_form(&self) -> Option<(BTreeMap<Term, Rat>, Rat)> {
        let mut coeffs = BTreeMap::new();
        let mut konst = Rat::zero();
        for (m, c) in &self.terms {
            match m.degree() {
                0 => konst = c.clone(),
                1 => {
                    let atom = m.0.keys().next().unwrap().clone();
                    coeffs.insert(atom, c.clone());
                }
                _ => return None,
            }
        }
        Some((coeffs, konst))
    }

    /// Exact evaluation under a full assignment of the atoms.
    pub fn eval(&self, assignment: &BTreeMap<Term, Rat>) -> Option<Rat> {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (atom, e) in &m.0 {
                let a = assignment.get(atom)?;
                for _ in 0..*e {
                    v *= a;
                }
            }
            acc += v;
        }
        Some(acc)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mono: Vec<String> = m
                    .0
                    .iter()
                    .map(|(t, e)| {
                        if *e == 1 {
                            format!("{t}")
                        } else {
                            format!("{t}^{e}")
                        }
                    })
                    .collect();
                if mono.is_empty() {
                    format!("{c}")
                } else if c.is_one() {
                    mono.join("*")
                } else {
                    format!("{}*{}", c, mono.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Normalize a term into a polynomial; any non-arithmetic subterm becomes an
/// opaque atom. Conditionals are rejected — they must be desugared first.
pub fn normalize(t: &Term) -> Result<Polynomial, String> {
    match t {
        Term::Num(r) => Ok(Polynomial::constant(r.clone())),
        Term::Var(_) => Ok(Polynomial::atom(t.clone())),
        Term::App(f, args) if is_builtin_arith(f) => {
            let parts: Vec<Polynomial> = args.iter().map(normalize).collect::<Result<_, _>>()?;
            Ok(match f.as_str() {
                "+" => parts[0].add(&parts[1]),
                "-" => parts[0].sub(&parts[1]),
                "*" => parts[0].mul(&parts[1]),
                "neg" => parts[0].neg(),
                _ => unreachable!(),
            })
        }
        Term::App(..) | Term::DiffApp(..) => Ok(Polynomial::atom(t.clone())),
        Term::Cond(..) => Err("conditional term reached the arithmetic layer".into()),
    }
}

/// Normalized difference `lhs - rhs`.
pub fn normalize_diff(lhs: &Term, rhs: &Term) -> Result<Polynomial, String> {
    Ok(normalize(lhs)?.sub(&normalize(rhs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_term_str, parse_theory, Theory};

    fn th() -> Theory {
        parse_theory("func x : R\nfunc y : R\nconjecture dummy : true\n").unwrap()
    }

    fn poly(src: &str) -> Polynomial {
        normalize(&parse_term_str(src, &th()).unwrap()).unwrap()
    }

    fn x() -> Term {
        Term::App("x".into(), vec![])
    }

    #[test]
    fn expansion_and_cancellation() {
        assert_eq!(poly("(x + 1) * (x - 1)"), poly("x * x - 1"));
        assert!(poly("x * y - y * x").is_zero());
        assert_eq!(poly("7 - 4").as_constant(), Some(Rat::from_integer(3.into())));
    }

    #[test]
    fn degrees() {
        assert_eq!(poly("x * x * y + y").degree(), 3);
        assert_eq!(poly("x * x * y + y").degree_in(&x()), 2);
        assert_eq!(Polynomial::zero().degree(), 0);
    }

    #[test]
    fn split_and_substitute() {
        // 2x + y is linear in x with coefficient 2 and remainder y.
        let (c, rest) = poly("2 * x + y").split_linear_in(&x()).unwrap();
        assert_eq!(c, Rat::from_integer(2.into()));
        assert_eq!(rest, poly("y"));
        // x^2 is not linear in x.
        assert!(poly("x * x").split_linear_in(&x()).is_none());
        // substituting x := y + 1 into x^2 gives (y + 1)^2
        let sub = poly("x * x").substitute_atom(&x(), &poly("y + 1"));
        assert_eq!(sub, poly("y * y + 2 * y + 1"));
    }

    #[test]
    fn evaluation() {
        let mut a = BTreeMap::new();
        a.insert(x(), Rat::new(1.into(), 2.into()));
        a.insert(Term::App("y".into(), vec![]), Rat::from_integer(4.into()));
        let v = poly("2 * x * x + y").eval(&a).unwrap();
        assert_eq!(v, Rat::new(9.into(), 2.into()));
        // missing atom: no value
        assert!(poly("x + y").eval(&BTreeMap::new()).is_none());
    }

    #[test]
    fn division_by_nonconstant_is_rejected() {
        let t = parse_term_str("x / y", &th());
        match t {
            Ok(t) => assert!(normalize(&t).is_err()),
            Err(_) => {}
        }
    }
}
