//! Differential forms `Σ_α c_α dx^α` with coefficients in a differentiable
//! ring, and the operators `d`, `⋆`, `δ`, `κ`, `κ^δ`, `∧`.
//!
//! The operators that only need differentiation (`d`, `⋆`, `δ`) are generic
//! over [`Coefficient`], so the same code acts on exact polynomial forms and
//! on the closed-form trigonometric fields of the manufactured-solution
//! catalog.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::cell::CellBox;
use crate::error::{Error, Result};
use crate::exterior::{hodge_sign, wedge_sign, MultiIndex};
use crate::poly::{Polynomial, Scalar};

/// A coefficient ring closed under partial differentiation.
pub trait Coefficient: Clone + PartialEq + fmt::Debug {
    fn zero_in(n: usize) -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn negated(&self) -> Self;
    fn derivative(&self, axis: usize) -> Self;
}

impl Coefficient for Polynomial {
    fn zero_in(n: usize) -> Self {
        Polynomial::zero(n)
    }
    fn is_zero(&self) -> bool {
        Polynomial::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn negated(&self) -> Self {
        -self
    }
    fn derivative(&self, axis: usize) -> Self {
        self.partial(axis)
    }
}

/// A `k`-form on `ℝⁿ`. Zero components are never stored, so structural
/// equality is equality of forms.
#[derive(Clone, PartialEq)]
pub struct Form<C> {
    n: usize,
    k: usize,
    terms: BTreeMap<MultiIndex, C>,
}

pub type PolyForm = Form<Polynomial>;

impl<C: Coefficient> Form<C> {
    pub fn zero(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            terms: BTreeMap::new(),
        }
    }

    /// Single component `c dx^α`.
    pub fn term(alpha: MultiIndex, c: C) -> Self {
        let mut f = Self::zero(alpha.dim(), alpha.len());
        f.add_component(alpha, c);
        f
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn component(&self, alpha: &MultiIndex) -> Option<&C> {
        self.terms.get(alpha)
    }

    pub fn add_component(&mut self, alpha: MultiIndex, c: C) {
        debug_assert_eq!(alpha.len(), self.k);
        if c.is_zero() {
            return;
        }
        let updated = match self.terms.get(&alpha) {
            Some(existing) => existing.plus(&c),
            None => c,
        };
        if updated.is_zero() {
            self.terms.remove(&alpha);
        } else {
            self.terms.insert(alpha, updated);
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.k != other.k {
            return Err(Error::domain(format!(
                "form shapes differ: ({}, {}) vs ({}, {})",
                self.n, self.k, other.n, other.k
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_component(*a, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.signed(-1)
    }

    fn signed(&self, s: i8) -> Self {
        if s > 0 {
            return self.clone();
        }
        Self {
            n: self.n,
            k: self.k,
            terms: self.terms.iter().map(|(a, c)| (*a, c.negated())).collect(),
        }
    }

    /// `dω = Σ_α Σ_i ∂_i c_α dx^i ∧ dx^α`. For `k = n` this is the zero
    /// form of degree `n + 1`, which holds no components.
    pub fn exterior_derivative(&self) -> Self {
        let mut out = Self::zero(self.n, self.k + 1);
        if self.k >= self.n {
            return out;
        }
        for (alpha, c) in &self.terms {
            for i in alpha.complement().axes() {
                let di = c.derivative(i);
                if di.is_zero() {
                    continue;
                }
                let (sign, gamma) = wedge_sign(&MultiIndex::single(i, self.n), alpha).expect("axis outside α");
                out.add_component(gamma, if sign > 0 { di } else { di.negated() });
            }
        }
        out
    }

    /// `⋆(c dx^α) = hodge_sign(α) c dx^{α^c}`.
    pub fn hodge(&self) -> Result<Self> {
        if self.k > self.n {
            return Err(Error::domain("Hodge star of a form of degree above n"));
        }
        let mut out = Self::zero(self.n, self.n - self.k);
        for (alpha, c) in &self.terms {
            let c = if hodge_sign(alpha) > 0 { c.clone() } else { c.negated() };
            out.add_component(alpha.complement(), c);
        }
        Ok(out)
    }

    /// `δ_k = (−1)^{n(k+1)+1} ⋆ d ⋆`, the formal L² adjoint of `d_{k−1}`.
    pub fn codifferential(&self) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::domain("codifferential of a 0-form"));
        }
        if self.k > self.n {
            return Err(Error::domain("codifferential of a form of degree above n"));
        }
        let inner = self.hodge()?.exterior_derivative().hodge()?;
        let exponent = self.n * (self.k + 1) + 1;
        Ok(inner.signed(if exponent.is_multiple_of(2) { 1 } else { -1 }))
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> Form<D> {
        let mut out = Form::zero(self.n, self.k);
        for (a, c) in &self.terms {
            out.add_component(*a, f(c));
        }
        out
    }
}

impl PolyForm {
    /// Constant `c dx^α`.
    pub fn constant(alpha: MultiIndex, c: Scalar) -> Self {
        Self::term(alpha, Polynomial::constant(alpha.dim(), c))
    }

    /// `x_τ dx^σ` in coordinates centered at `center` (`x̃_i = x_i − center_i`).
    pub fn centered_monomial(tau: &MultiIndex, sigma: MultiIndex, center: &[Scalar]) -> Self {
        let n = sigma.dim();
        let coef = tau.axes().fold(Polynomial::one(n), |acc, i| {
            &acc * &Polynomial::shifted_var(n, i, &center[i])
        });
        Self::term(sigma, coef)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.map_coefficients(|p| p.scale(c))
    }

    pub fn mul_poly(&self, p: &Polynomial) -> Self {
        self.map_coefficients(|c| c * p)
    }

    /// Linear combination `Σ c_i ω_i` of forms with the given shape.
    pub fn combination<'a>(n: usize, k: usize, items: impl IntoIterator<Item = (&'a Scalar, &'a PolyForm)>) -> Self {
        let mut out = Self::zero(n, k);
        for (c, f) in items {
            if c.is_zero() {
                continue;
            }
            debug_assert_eq!((f.n, f.k), (n, k));
            for (a, p) in &f.terms {
                out.add_component(*a, p.scale(c));
            }
        }
        out
    }

    /// Koszul operator with respect to `center`:
    /// `κ(dx^{α₁}∧…∧dx^{α_k}) = Σ_j (−1)^{j+1} x̃_{α_j} dx^{α₁}∧…(omit j)…∧dx^{α_k}`.
    pub fn koszul(&self, center: &[Scalar]) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::domain("Koszul operator of a 0-form"));
        }
        if center.len() != self.n {
            return Err(Error::domain("Koszul center has the wrong length"));
        }
        let mut out = Self::zero(self.n, self.k - 1);
        for (alpha, c) in &self.terms {
            for (j, axis) in alpha.axes().enumerate() {
                let xt = Polynomial::shifted_var(self.n, axis, &center[axis]);
                let mut coef = c * &xt;
                if j % 2 == 1 {
                    coef = -&coef;
                }
                out.add_component(alpha.without(axis), coef);
            }
        }
        Ok(out)
    }

    /// `κ^δ = ⋆ ∘ κ ∘ ⋆`.
    pub fn koszul_delta(&self, center: &[Scalar]) -> Result<Self> {
        if self.k >= self.n {
            return Err(Error::domain("κ^δ needs a form of degree at most n − 1"));
        }
        self.hodge()?.koszul(center)?.hodge()
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::domain("wedge of forms in different dimensions"));
        }
        if self.k + other.k > self.n {
            return Err(Error::domain(format!(
                "wedge degree {} + {} exceeds n = {}",
                self.k, other.k, self.n
            )));
        }
        let mut out = Self::zero(self.n, self.k + other.k);
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                if let Some((s, g)) = wedge_sign(a, b) {
                    let prod = p * q;
                    out.add_component(g, if s > 0 { prod } else { -&prod });
                }
            }
        }
        Ok(out)
    }

    /// `⟨ω, η⟩_{L²Λᵏ(K)} = Σ_α ∫_K ω_α η_α`, exactly.
    pub fn inner_product(&self, other: &Self, cell: &CellBox) -> Result<Scalar> {
        self.check_same_shape(other)?;
        if cell.dim() != self.n {
            return Err(Error::domain("cell dimension differs from form dimension"));
        }
        let mut acc = Scalar::zero();
        for (a, p) in &self.terms {
            if let Some(q) = other.terms.get(a) {
                acc += (p * q).integrate_box(cell.lower(), cell.upper());
            }
        }
        Ok(acc)
    }

    pub fn evaluate(&self, point: &[Scalar]) -> Result<BTreeMap<MultiIndex, Scalar>> {
        if point.len() != self.n {
            return Err(Error::domain("evaluation point has the wrong length"));
        }
        Ok(self
            .terms
            .iter()
            .map(|(a, p)| (*a, p.eval(point)))
            .filter(|(_, v)| !v.is_zero())
            .collect())
    }

    /// `x ↦ ω(x + shift)` componentwise.
    pub fn translate(&self, shift: &[Scalar]) -> Self {
        self.map_coefficients(|p| p.translate(shift))
    }

    /// Largest total degree among the coefficients (`None` for zero).
    pub fn coefficient_degree(&self) -> Option<u32> {
        self.terms.values().filter_map(|p| p.degree()).max()
    }

    pub fn homogeneous_part(&self, r: u32) -> Self {
        self.map_coefficients(|p| p.homogeneous_part(r))
    }

    pub fn is_homogeneous(&self, r: u32) -> bool {
        self.terms.values().all(|p| p.is_homogeneous(r))
    }
}

impl<C: Coefficient> fmt::Debug for Form<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form(n={}, k={}, {:?})", self.n, self.k, self.terms)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::poly::{int, rat};
    use proptest::prelude::*;

    fn mi(e: &[usize], n: usize) -> MultiIndex {
        MultiIndex::new(e, n).unwrap()
    }
    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }
    fn one(n: usize) -> Polynomial {
        Polynomial::one(n)
    }

    #[test]
    fn exterior_derivative_examples() {
        let w = PolyForm::term(MultiIndex::empty(2), x(2, 0));
        assert_eq!(w.exterior_derivative(), PolyForm::term(mi(&[1], 2), one(2)));
        let w = PolyForm::term(mi(&[1], 2), x(2, 1));
        assert_eq!(w.exterior_derivative(), PolyForm::term(mi(&[1, 2], 2), -&one(2)));
        let w = PolyForm::term(mi(&[1], 2), &x(2, 0) * &x(2, 1));
        assert_eq!(w.exterior_derivative(), PolyForm::term(mi(&[1, 2], 2), -&x(2, 0)));
        let top = PolyForm::term(mi(&[1, 2], 2), x(2, 0));
        let d = top.exterior_derivative();
        assert!(d.is_zero());
        assert_eq!(d.degree(), 3);
    }

    #[test]
    fn hodge_examples() {
        let w = PolyForm::term(MultiIndex::empty(2), one(2));
        assert_eq!(w.hodge().unwrap(), PolyForm::term(mi(&[1, 2], 2), one(2)));
        let w = PolyForm::term(mi(&[2], 2), x(2, 0));
        assert_eq!(w.hodge().unwrap(), PolyForm::term(mi(&[1], 2), -&x(2, 0)));
        let w = PolyForm::term(mi(&[1, 2, 3], 3), one(3));
        assert_eq!(w.hodge().unwrap(), PolyForm::term(MultiIndex::empty(3), one(3)));
    }

    #[test]
    fn codifferential_examples() {
        let w = PolyForm::term(mi(&[1], 2), one(2));
        assert!(w.codifferential().unwrap().is_zero());
        // δ₁ is minus the divergence: δ₁(x₁dx¹) = −1.
        let w = PolyForm::term(mi(&[1], 2), x(2, 0));
        assert_eq!(
            w.codifferential().unwrap(),
            PolyForm::term(MultiIndex::empty(2), -&one(2))
        );
        // δ₂(x₁ dx¹²) = −dx², hand-integrated against dω for ω = b dx².
        let w = PolyForm::term(mi(&[1, 2], 2), x(2, 0));
        assert_eq!(w.codifferential().unwrap(), PolyForm::term(mi(&[2], 2), -&one(2)));
        assert!(PolyForm::zero(2, 0).codifferential().is_err());
    }

    #[test]
    fn koszul_examples() {
        let origin = vec![int(0), int(0)];
        let w = PolyForm::term(mi(&[1], 2), one(2));
        assert_eq!(
            w.koszul(&origin).unwrap(),
            PolyForm::term(MultiIndex::empty(2), x(2, 0))
        );
        let w = PolyForm::term(mi(&[1, 2], 2), one(2));
        let expected = PolyForm::term(mi(&[2], 2), x(2, 0))
            .add(&PolyForm::term(mi(&[1], 2), -&x(2, 1)))
            .unwrap();
        assert_eq!(w.koszul(&origin).unwrap(), expected);
        let w = PolyForm::term(mi(&[1], 1), one(1));
        assert_eq!(
            w.koszul(&[rat(1, 2)]).unwrap(),
            PolyForm::term(MultiIndex::empty(1), Polynomial::shifted_var(1, 0, &rat(1, 2)))
        );
        assert!(PolyForm::zero(2, 0).koszul(&origin).is_err());
    }

    #[test]
    fn koszul_delta_examples() {
        let origin = vec![int(0), int(0)];
        let w = PolyForm::term(MultiIndex::empty(2), one(2));
        let expected = PolyForm::term(mi(&[1], 2), -&x(2, 0))
            .add(&PolyForm::term(mi(&[2], 2), -&x(2, 1)))
            .unwrap();
        assert_eq!(w.koszul_delta(&origin).unwrap(), expected);
        let top = PolyForm::term(mi(&[1, 2], 2), one(2));
        assert!(top.koszul_delta(&origin).is_err());
    }

    #[test]
    fn wedge_examples() {
        let dx1 = PolyForm::term(mi(&[1], 2), one(2));
        let dx2 = PolyForm::term(mi(&[2], 2), one(2));
        assert_eq!(dx1.wedge(&dx2).unwrap(), PolyForm::term(mi(&[1, 2], 2), one(2)));
        assert!(dx1.wedge(&dx1).unwrap().is_zero());
        let a = PolyForm::term(mi(&[1], 2), x(2, 0));
        let b = PolyForm::term(mi(&[2], 2), x(2, 1));
        assert_eq!(
            a.wedge(&b).unwrap(),
            PolyForm::term(mi(&[1, 2], 2), &x(2, 0) * &x(2, 1))
        );
        let vol = PolyForm::term(mi(&[1, 2], 2), one(2));
        assert!(dx1.wedge(&vol).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let t = CellBox::reference(2);
        let dx1 = PolyForm::term(mi(&[1], 2), one(2));
        let x2dx1 = PolyForm::term(mi(&[1], 2), x(2, 1));
        assert_eq!(dx1.inner_product(&dx1, &t).unwrap(), int(4));
        assert_eq!(x2dx1.inner_product(&dx1, &t).unwrap(), int(0));
        assert_eq!(x2dx1.inner_product(&x2dx1, &t).unwrap(), rat(4, 3));
        assert!(dx1.inner_product(&PolyForm::zero(2, 0), &t).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let w = PolyForm::term(mi(&[1], 2), x(2, 0));
        let v = w.evaluate(&[int(2), int(0)]).unwrap();
        assert_eq!(v.into_iter().collect::<Vec<_>>(), vec![(mi(&[1], 2), int(2))]);
        assert!(PolyForm::zero(2, 1).evaluate(&[int(1), int(1)]).unwrap().is_empty());
        let w = PolyForm::term(mi(&[1, 2], 2), &x(2, 0) * &x(2, 1));
        let v = w.evaluate(&[int(1), int(1)]).unwrap();
        assert_eq!(v.get(&mi(&[1, 2], 2)), Some(&int(1)));
    }

    pub(crate) fn arb_form(n: usize, k: usize, max_deg: u32) -> impl Strategy<Value = PolyForm> {
        let alphas = crate::exterior::multi_indices(k, n);
        let count = alphas.len();
        proptest::collection::vec(
            proptest::collection::vec(
                (
                    0u32..=max_deg,
                    0u32..=max_deg,
                    0u32..=max_deg,
                    0u32..=max_deg,
                    -3i64..=3,
                ),
                0..4,
            ),
            count,
        )
        .prop_map(move |comps| {
            let mut f = PolyForm::zero(n, k);
            for (alpha, terms) in alphas.iter().zip(comps) {
                let mut p = Polynomial::zero(n);
                for (a, b, c, d, coef) in terms {
                    let exps = [a, b, c, d];
                    let exps: Vec<u32> = exps[..n].to_vec();
                    if exps.iter().sum::<u32>() > max_deg {
                        continue;
                    }
                    p.add_term(crate::poly::Monomial::from_exponents(&exps), int(coef));
                }
                f.add_component(*alpha, p);
            }
            f
        })
    }

    fn shapes() -> impl Strategy<Value = (usize, usize)> {
        (1usize..=4).prop_flat_map(|n| (Just(n), 0..=n))
    }

    fn arb_shaped(max_deg: u32) -> impl Strategy<Value = PolyForm> {
        shapes().prop_flat_map(move |(n, k)| arb_form(n, k, max_deg))
    }

    fn arb_cell(n: usize) -> impl Strategy<Value = CellBox> {
        proptest::collection::vec((-3i64..=3, 1i64..=4, 1i64..=3), n).prop_map(|v| {
            let lower = v.iter().map(|(a, _, _)| int(*a)).collect();
            let upper = v.iter().map(|(a, w, q)| int(*a) + rat(*w, *q)).collect();
            CellBox::new(lower, upper).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn d_squared_vanishes(w in arb_shaped(3)) {
            prop_assert!(w.exterior_derivative().exterior_derivative().is_zero());
        }

        #[test]
        fn star_star_sign(w in arb_shaped(3)) {
            let (n, k) = (w.dim(), w.degree());
            let ss = w.hodge().unwrap().hodge().unwrap();
            let expected = if (k * (n - k)) % 2 == 0 { w.clone() } else { w.neg() };
            prop_assert_eq!(ss, expected);
        }

        #[test]
        fn delta_squared_vanishes(w in arb_shaped(3)) {
            prop_assume!(w.degree() >= 2);
            prop_assert!(w.codifferential().unwrap().codifferential().unwrap().is_zero());
        }

        /// ⟨d(bη), μ⟩_K = ⟨bη, δμ⟩_K for the bump b = Π (x̃_i² − (h_i/2)²).
        #[test]
        fn integration_by_parts_with_bump(
            (eta, mu, cell) in (1usize..=3)
                .prop_flat_map(|n| (Just(n), 0..n))
                .prop_flat_map(|(n, k)| (arb_form(n, k, 1), arb_form(n, k + 1, 1), arb_cell(n)))
        ) {
            let n = eta.dim();
            let center = cell.center();
            let half: Vec<Scalar> = cell.widths().iter().map(|h| h / int(2)).collect();
            let bump = (0..n).fold(Polynomial::one(n), |acc, i| {
                let xt = Polynomial::shifted_var(n, i, &center[i]);
                let mut f = &xt * &xt;
                f.add_term(crate::poly::Monomial::ONE, -(&half[i] * &half[i]));
                &acc * &f
            });
            let omega = eta.mul_poly(&bump);
            let lhs = omega.exterior_derivative().inner_product(&mu, &cell).unwrap();
            let rhs = omega.inner_product(&mu.codifferential().unwrap(), &cell).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        /// (dκ + κd)ω = (r + k)ω on forms with homogeneous degree-r coefficients.
        #[test]
        fn homotopy_formula(w in arb_shaped(3), r in 0u32..=3) {
            let (n, k) = (w.dim(), w.degree());
            let w = w.homogeneous_part(r);
            let origin = vec![Scalar::zero(); n];
            let dk = if k == 0 {
                PolyForm::zero(n, 0)
            } else {
                w.koszul(&origin).unwrap().exterior_derivative()
            };
            let kd = if k == n {
                PolyForm::zero(n, k)
            } else {
                w.exterior_derivative().koszul(&origin).unwrap()
            };
            let lhs = dk.add(&kd).unwrap();
            prop_assert_eq!(lhs, w.scale(&int((r as usize + k) as i64)));
        }
    }
}
