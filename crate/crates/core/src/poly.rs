//! Multivariate polynomials over exact rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exterior::MAX_DIM;

/// Exact coefficient field.
pub type Scalar = BigRational;

pub fn int(v: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(v))
}

pub fn rat(p: i64, q: i64) -> Scalar {
    Scalar::new(BigInt::from(p), BigInt::from(q))
}

pub fn to_f64(s: &Scalar) -> f64 {
    s.to_f64().unwrap_or_else(|| {
        // Very large numerators/denominators: fall back to a scaled division.
        let (n, d) = (s.numer(), s.denom());
        let shift = n.bits().max(d.bits()).saturating_sub(1000);
        let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Canonical `p/q` rendering (`p` alone when the denominator is one).
pub fn format_scalar(s: &Scalar) -> String {
    if s.denom().is_one() {
        s.numer().to_string()
    } else {
        format!("{}/{}", s.numer(), s.denom())
    }
}

/// Parses `p`, `-p`, or `p/q`.
pub fn parse_scalar(text: &str) -> Option<Scalar> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(Scalar::new(p, q))
            }
        }
        None => text.parse::<BigInt>().ok().map(Scalar::from_integer),
    }
}

/// Exponent vector packed one byte per axis, axis 0 in the most significant
/// byte, so the integer order is the lexicographic order on exponents.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(u64);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    fn shift(axis: usize) -> u32 {
        (8 * (MAX_DIM - 1 - axis)) as u32
    }

    pub fn var(axis: usize) -> Self {
        Monomial(1 << Self::shift(axis))
    }

    pub fn from_exponents(exps: &[u32]) -> Self {
        let mut m = 0u64;
        for (i, &e) in exps.iter().enumerate() {
            assert!(e < 256, "exponent {e} too large");
            m |= (e as u64) << Self::shift(i);
        }
        Monomial(m)
    }

    pub fn exponent(&self, axis: usize) -> u32 {
        ((self.0 >> Self::shift(axis)) & 0xff) as u32
    }

    pub fn exponents(&self, n: usize) -> Vec<u32> {
        (0..n).map(|i| self.exponent(i)).collect()
    }

    pub fn degree(&self) -> u32 {
        self.0.to_le_bytes().iter().map(|&b| b as u32).sum()
    }

    pub fn times(self, other: Monomial) -> Monomial {
        // Per-byte addition; exponents stay far below 256 in practice.
        debug_assert!(self
            .0
            .to_le_bytes()
            .iter()
            .zip(other.0.to_le_bytes())
            .all(|(a, b)| (*a as u32 + b as u32) < 256));
        Monomial(self.0 + other.0)
    }

    fn lower(self, axis: usize) -> Monomial {
        Monomial(self.0 - (1 << Self::shift(axis)))
    }
}

/// Polynomial in `n` variables with canonical storage: no zero coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, Scalar>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Scalar) -> Self {
        Self::monomial(n, Monomial::ONE, c)
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Scalar::one())
    }

    /// The coordinate function `x_{axis+1}`.
    pub fn var(n: usize, axis: usize) -> Self {
        Self::monomial(n, Monomial::var(axis), Scalar::one())
    }

    /// Affine coordinate `x_{axis+1} − shift`.
    pub fn shifted_var(n: usize, axis: usize, shift: &Scalar) -> Self {
        let mut p = Self::var(n, axis);
        p.add_term(Monomial::ONE, -shift.clone());
        p
    }

    pub fn monomial(n: usize, m: Monomial, c: Scalar) -> Self {
        let mut p = Self::zero(n);
        p.add_term(m, c);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Polynomial, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (m, v) in &other.terms {
            self.add_term(*m, v * c);
        }
    }

    pub fn scale(&self, c: &Scalar) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.n);
        }
        Polynomial {
            n: self.n,
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn homogeneous_part(&self, r: u32) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == r)
                .map(|(m, v)| (*m, v.clone()))
                .collect(),
        }
    }

    pub fn is_homogeneous(&self, r: u32) -> bool {
        self.terms.keys().all(|m| m.degree() == r)
    }

    /// `∂/∂x_{axis+1}`.
    pub fn partial(&self, axis: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, v) in &self.terms {
            let e = m.exponent(axis);
            if e > 0 {
                out.add_term(m.lower(axis), v * Scalar::from_integer(BigInt::from(e)));
            }
        }
        out
    }

    pub fn eval(&self, x: &[Scalar]) -> Scalar {
        let mut acc = Scalar::zero();
        for (m, v) in &self.terms {
            let mut t = v.clone();
            for (i, xi) in x.iter().enumerate().take(self.n) {
                let e = m.exponent(i);
                if e > 0 {
                    t *= num_traits::pow(xi.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    /// `x ↦ p(x + shift)`.
    pub fn translate(&self, shift: &[Scalar]) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, v) in &self.terms {
            let mut term = Polynomial::constant(self.n, v.clone());
            for (i, s) in shift.iter().enumerate().take(self.n) {
                let e = m.exponent(i);
                if e == 0 {
                    continue;
                }
                let mut base = Polynomial::var(self.n, i);
                base.add_term(Monomial::ONE, s.clone());
                for _ in 0..e {
                    term = &term * &base;
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Restriction to the hyperplane `x_{axis+1} = value`.
    pub fn restrict(&self, axis: usize, value: &Scalar) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, v) in &self.terms {
            let e = m.exponent(axis);
            let stripped = Monomial(m.0 & !(0xffu64 << Monomial::shift(axis)));
            out.add_term(stripped, v * num_traits::pow(value.clone(), e as usize));
        }
        out
    }

    /// Exact integral over the box `Π [lower_i, upper_i]`.
    pub fn integrate_box(&self, lower: &[Scalar], upper: &[Scalar]) -> Scalar {
        let mut cache: Vec<BTreeMap<u32, Scalar>> = vec![BTreeMap::new(); self.n];
        let mut acc = Scalar::zero();
        for (m, v) in &self.terms {
            let mut t = v.clone();
            for i in 0..self.n {
                let e = m.exponent(i);
                let factor = cache[i]
                    .entry(e)
                    .or_insert_with(|| power_integral(&lower[i], &upper[i], e));
                if factor.is_zero() {
                    t = Scalar::zero();
                    break;
                }
                t *= &*factor;
            }
            acc += t;
        }
        acc
    }

    /// Integral over the sub-box spanned by the axes in `axes`, all other
    /// variables left free.
    pub fn integrate_axes(&self, axes: &[usize], lower: &[Scalar], upper: &[Scalar]) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, v) in &self.terms {
            let mut t = v.clone();
            let mut rest = *m;
            for &i in axes {
                let e = m.exponent(i);
                t *= power_integral(&lower[i], &upper[i], e);
                rest = Monomial(rest.0 & !(0xffu64 << Monomial::shift(i)));
            }
            out.add_term(rest, t);
        }
        out
    }

    pub fn to_float(&self) -> FloatPoly {
        FloatPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.exponents(self.n), to_f64(v)))
                .collect(),
        }
    }
}

/// `∫_a^b x^e dx`.
pub fn power_integral(a: &Scalar, b: &Scalar, e: u32) -> Scalar {
    let p = e as usize + 1;
    (num_traits::pow(b.clone(), p) - num_traits::pow(a.clone(), p)) / Scalar::from_integer(BigInt::from(p))
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, v) in &rhs.terms {
            out.add_term(*m, v.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, v) in &rhs.terms {
            out.add_term(*m, -v.clone());
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self.terms.iter().map(|(m, v)| (*m, -v.clone())).collect(),
        }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.n.max(rhs.n));
        for (m1, v1) in &self.terms {
            for (m2, v2) in &rhs.terms {
                out.add_term(m1.times(*m2), v1 * v2);
            }
        }
        out
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    /// Terms in graded order; e.g. `1 - 3/2*x1 + x1*x2^2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|a, b| a.0.degree().cmp(&b.0.degree()).then(b.0.cmp(a.0)));
        for (i, (m, v)) in ordered.into_iter().enumerate() {
            let negative = v.is_negative();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let abs = v.abs();
            let vars: Vec<String> = (0..self.n)
                .filter(|&a| m.exponent(a) > 0)
                .map(|a| match m.exponent(a) {
                    1 => format!("x{}", a + 1),
                    e => format!("x{}^{}", a + 1, e),
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", format_scalar(&abs))?;
            } else if abs.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", format_scalar(&abs), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Floating-point copy of a polynomial for fast pointwise evaluation.
#[derive(Clone, Debug)]
pub struct FloatPoly {
    terms: Vec<(Vec<u32>, f64)>,
}

impl FloatPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(exps, c)| {
                exps.iter()
                    .zip(x)
                    .fold(*c, |acc, (&e, &xi)| if e == 0 { acc } else { acc * xi.powi(e as i32) })
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn arithmetic_is_canonical() {
        let p = &x(2, 0) + &x(2, 1);
        let q = &p - &x(2, 1);
        assert_eq!(q, x(2, 0));
        assert!((&q - &q).is_zero());
        let sq = &p * &p;
        assert_eq!(sq.num_terms(), 3);
        assert_eq!(sq.coefficient(&Monomial::from_exponents(&[1, 1])), int(2));
    }

    #[test]
    fn partial_derivatives() {
        let p = &(&x(2, 0) * &x(2, 0)) * &x(2, 1);
        assert_eq!(p.partial(0), (&x(2, 0) * &x(2, 1)).scale(&int(2)));
        assert_eq!(p.partial(1), &x(2, 0) * &x(2, 0));
        assert!(Polynomial::one(2).partial(0).is_zero());
    }

    #[test]
    fn box_integrals() {
        let lo = vec![int(-1), int(-1)];
        let hi = vec![int(1), int(1)];
        assert_eq!(Polynomial::one(2).integrate_box(&lo, &hi), int(4));
        assert_eq!(x(2, 1).integrate_box(&lo, &hi), int(0));
        let x2sq = &x(2, 1) * &x(2, 1);
        assert_eq!(x2sq.integrate_box(&lo, &hi), rat(4, 3));
        let lo = vec![int(0), int(0)];
        let hi = vec![int(1), int(3)];
        // ∫∫ x1 x2 = 1/2 · 9/2
        assert_eq!((&x(2, 0) * &x(2, 1)).integrate_box(&lo, &hi), rat(9, 4));
    }

    #[test]
    fn translation_and_restriction() {
        let p = &x(2, 0) * &x(2, 1);
        let t = p.translate(&[int(1), int(2)]);
        // (x1+1)(x2+2) at (0, 0)
        assert_eq!(t.eval(&[int(0), int(0)]), int(2));
        assert_eq!(t.eval(&[int(3), int(-1)]), p.eval(&[int(4), int(1)]));
        let r = p.restrict(0, &rat(1, 2));
        assert_eq!(r, x(2, 1).scale(&rat(1, 2)));
    }

    #[test]
    fn display_is_graded() {
        let p = &(&x(2, 0).scale(&rat(-3, 2)) + &Polynomial::one(2)) + &(&x(2, 0) * &x(2, 1));
        assert_eq!(p.to_string(), "1 - 3/2*x1 + x1*x2");
        assert_eq!(Polynomial::zero(3).to_string(), "0");
    }

    #[test]
    fn scalar_text_round_trip() {
        for s in [rat(3, 7), rat(-5, 2), int(0), int(-12)] {
            assert_eq!(parse_scalar(&format_scalar(&s)).unwrap(), s);
        }
        assert!(parse_scalar("1/0").is_none());
    }
}
