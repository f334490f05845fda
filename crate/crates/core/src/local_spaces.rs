//! Lowest-order polynomial form spaces on a box, and exact checks of their
//! structure.
//!
//! Every basis is written in coordinates centered at the cell center,
//! `x̃ᵢ = xᵢ − cᵢ`, so that odd monomials integrate to zero on every cell.
//!
//! | kind | span | dimension |
//! |------|------|-----------|
//! | `P0` | `dx^σ` | `C(n,k)` |
//! | `P1Minus` | `𝒫₀Λᵏ + κ𝒫₀Λ^{k+1}` | `C(n+1,k+1)` |
//! | `P1MinusStar` | `𝒫₀Λᵏ + κ^δ𝒫₀Λ^{k−1}` | `C(n+1,k)` |
//! | `Q1Minus` | `x̃_τ dx^σ`, `τ ⊂ σᶜ` | `C(n,k)·2^{n−k}` |
//! | `Q1MinusStar` | `x̃_τ dx^σ`, `τ ⊂ σ` | `C(n,k)·2^k` |
//! | `Q1MinusHomogeneous(r)` | `x̃_τ dx^σ`, `τ ⊂ σᶜ`, `|τ| = r` | `C(n,k)·C(n−k,r)` |

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::cell::CellBox;
use crate::error::{Error, Result};
use crate::exterior::{binomial, multi_indices, subsets, MultiIndex};
use crate::form::PolyForm;
use crate::poly::{Polynomial, Scalar};
use crate::projection::{adjoint_pairing, LocalProjector};
use crate::report::CheckReport;
use crate::span::{first_outside, kernel_of, rank, same_span, span_basis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SpaceKind {
    P0,
    P1Minus,
    P1MinusStar,
    Q1Minus,
    Q1MinusStar,
    Q1MinusHomogeneous(usize),
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::P0 => write!(f, "P0"),
            Self::P1Minus => write!(f, "P1-"),
            Self::P1MinusStar => write!(f, "P1*-"),
            Self::Q1Minus => write!(f, "Q1-"),
            Self::Q1MinusStar => write!(f, "Q1*-"),
            Self::Q1MinusHomogeneous(r) => write!(f, "Q1- ∩ H{r}"),
        }
    }
}

impl SpaceKind {
    pub fn expected_dimension(self, k: usize, n: usize) -> usize {
        match self {
            Self::P0 => binomial(n, k),
            Self::P1Minus => binomial(n + 1, k + 1),
            Self::P1MinusStar => binomial(n + 1, k),
            Self::Q1Minus => binomial(n, k) << (n - k),
            Self::Q1MinusStar => binomial(n, k) << k,
            Self::Q1MinusHomogeneous(r) => binomial(n, k) * binomial(n - k, r),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpaceBasis {
    pub kind: SpaceKind,
    pub k: usize,
    pub cell: CellBox,
    pub elements: Vec<PolyForm>,
}

impl SpaceBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Generator labels `(τ, σ)` of the tensor-product spaces, ordered by `σ`
/// then `τ`.
pub fn q_generators(k: usize, n: usize, star: bool) -> Vec<(MultiIndex, MultiIndex)> {
    let mut out = Vec::new();
    for sigma in multi_indices(k, n) {
        let pool = if star { sigma } else { sigma.complement() };
        let mut taus = subsets(&pool);
        taus.sort();
        out.extend(taus.into_iter().map(|tau| (tau, sigma)));
    }
    out
}

fn constants(k: usize, n: usize) -> Vec<PolyForm> {
    multi_indices(k, n)
        .into_iter()
        .map(|s| PolyForm::constant(s, Scalar::from_integer(1.into())))
        .collect()
}

pub fn basis(kind: SpaceKind, k: usize, cell: &CellBox) -> Result<SpaceBasis> {
    let n = cell.dim();
    if k > n {
        return Err(Error::domain(format!("degree {k} exceeds dimension {n}")));
    }
    let center = cell.center();
    let elements = match kind {
        SpaceKind::P0 => constants(k, n),
        SpaceKind::P1Minus => {
            let mut gens = constants(k, n);
            if k < n {
                for g in constants(k + 1, n) {
                    gens.push(g.koszul(&center)?);
                }
            }
            span_basis(&gens)
        }
        SpaceKind::P1MinusStar => {
            let mut gens = constants(k, n);
            if k > 0 {
                for g in constants(k - 1, n) {
                    gens.push(g.koszul_delta(&center)?);
                }
            }
            span_basis(&gens)
        }
        SpaceKind::Q1Minus | SpaceKind::Q1MinusStar => q_generators(k, n, kind == SpaceKind::Q1MinusStar)
            .into_iter()
            .map(|(tau, sigma)| PolyForm::centered_monomial(&tau, sigma, &center))
            .collect(),
        SpaceKind::Q1MinusHomogeneous(r) => {
            if r > n - k {
                return Err(Error::domain(format!(
                    "no Q1- generators of coefficient degree {r} for k = {k}, n = {n}"
                )));
            }
            q_generators(k, n, false)
                .into_iter()
                .filter(|(tau, _)| tau.len() == r)
                .map(|(tau, sigma)| PolyForm::centered_monomial(&tau, sigma, &center))
                .collect()
        }
    };
    Ok(SpaceBasis {
        kind,
        k,
        cell: cell.clone(),
        elements,
    })
}

/// `𝒬₁⁻Λᵏ` built from its tensor-product definition: for each `σ`, products
/// of the 1D nodal bases `{(bᵢ − xᵢ)/hᵢ, (xᵢ − aᵢ)/hᵢ}` over `i ∉ σ` and `{1}`
/// over `i ∈ σ`.
pub fn tensor_product_basis(k: usize, cell: &CellBox) -> Vec<PolyForm> {
    let n = cell.dim();
    let widths = cell.widths();
    let mut out = Vec::new();
    for sigma in multi_indices(k, n) {
        let mut coefs = vec![Polynomial::one(n)];
        for (i, w) in widths.iter().enumerate() {
            if sigma.contains(i) {
                continue;
            }
            let inv = w.recip();
            let down = Polynomial::shifted_var(n, i, &cell.upper()[i]).scale(&(-&inv));
            let up = Polynomial::shifted_var(n, i, &cell.lower()[i]).scale(&inv);
            coefs = coefs.iter().flat_map(|c| [c * &down, c * &up]).collect();
        }
        out.extend(coefs.into_iter().map(|c| PolyForm::term(sigma, c)));
    }
    out
}

fn d_images(forms: &[PolyForm]) -> Vec<PolyForm> {
    forms.iter().map(|f| f.exterior_derivative()).collect()
}

fn delta_images(forms: &[PolyForm]) -> Result<Vec<PolyForm>> {
    forms.iter().map(|f| f.codifferential()).collect()
}

fn nonzero(forms: Vec<PolyForm>) -> Vec<PolyForm> {
    forms.into_iter().filter(|f| !f.is_zero()).collect()
}

/// `span(a) = span(b)`, with the first witness of a failed inclusion.
fn span_report(lemma: &str, n: usize, k: usize, a: (&str, &[PolyForm]), b: (&str, &[PolyForm])) -> CheckReport {
    let ce = first_outside(a.1, b.1)
        .map(|i| format!("{} lies in {} but not in {}", b.1[i], b.0, a.0))
        .or_else(|| first_outside(b.1, a.1).map(|i| format!("{} lies in {} but not in {}", a.1[i], a.0, b.0)));
    CheckReport::new(lemma, n, k, ce)
}

fn require_local(cell: &CellBox, k: usize, max_k: usize) -> Result<usize> {
    let n = cell.dim();
    if k > max_k.min(n) {
        return Err(Error::domain(format!("degree {k} out of range for n = {n}")));
    }
    Ok(n)
}

/// Exact rank equals the stated dimension for every kind.
pub fn check_dimensions(k: usize, cell: &CellBox) -> Result<Vec<CheckReport>> {
    let n = require_local(cell, k, usize::MAX)?;
    let mut kinds = vec![
        SpaceKind::P0,
        SpaceKind::P1Minus,
        SpaceKind::P1MinusStar,
        SpaceKind::Q1Minus,
        SpaceKind::Q1MinusStar,
    ];
    kinds.extend((0..=n - k).map(SpaceKind::Q1MinusHomogeneous));
    kinds
        .into_iter()
        .map(|kind| {
            let b = basis(kind, k, cell)?;
            let expected = kind.expected_dimension(k, n);
            let r = rank(&b.elements);
            let ce = (r != expected || b.len() != expected)
                .then(|| format!("{kind}: {} elements of rank {r}, expected {expected}", b.len()));
            Ok(CheckReport::new(format!("dimension[{kind}]"), n, k, ce))
        })
        .collect()
}

/// The monomial presentation of `𝒬₁⁻Λᵏ` spans the tensor-product space.
pub fn check_tensor_presentation(k: usize, cell: &CellBox) -> Result<CheckReport> {
    let n = require_local(cell, k, usize::MAX)?;
    let q = basis(SpaceKind::Q1Minus, k, cell)?.elements;
    let t = tensor_product_basis(k, cell);
    let mut report = span_report(
        "q_tensor_presentation",
        n,
        k,
        ("monomial span", &q),
        ("tensor product", &t),
    );
    if report.pass && rank(&t) != SpaceKind::Q1Minus.expected_dimension(k, n) {
        report = CheckReport::new(
            "q_tensor_presentation",
            n,
            k,
            Some("tensor product has the wrong rank".into()),
        );
    }
    Ok(report)
}

/// `𝒫₁⁻Λ⁰ = 𝒫₁Λ⁰`, `𝒫₁⁻Λⁿ = 𝒫₀Λⁿ`, `𝒫₁^{*,-}Λ⁰ = 𝒫₀Λ⁰`, `𝒫₁^{*,-}Λⁿ = 𝒫₁Λⁿ`.
pub fn check_trimmed_endpoints(cell: &CellBox) -> Result<Vec<CheckReport>> {
    let n = cell.dim();
    let p1 = |k: usize| -> Vec<PolyForm> {
        let alpha = multi_indices(k, n)[0];
        let mut v = vec![PolyForm::constant(alpha, Scalar::from_integer(1.into()))];
        v.extend((0..n).map(|i| PolyForm::term(alpha, Polynomial::var(n, i))));
        v
    };
    let top = MultiIndex::full(n);
    let p0_top = vec![PolyForm::constant(top, Scalar::from_integer(1.into()))];
    let p0_zero = vec![PolyForm::constant(MultiIndex::empty(n), Scalar::from_integer(1.into()))];
    Ok(vec![
        span_report(
            "trimmed_endpoint[P1-,0]",
            n,
            0,
            ("P1-", &basis(SpaceKind::P1Minus, 0, cell)?.elements),
            ("P1", &p1(0)),
        ),
        span_report(
            "trimmed_endpoint[P1-,n]",
            n,
            n,
            ("P1-", &basis(SpaceKind::P1Minus, n, cell)?.elements),
            ("P0", &p0_top),
        ),
        span_report(
            "trimmed_endpoint[P1*-,0]",
            n,
            0,
            ("P1*-", &basis(SpaceKind::P1MinusStar, 0, cell)?.elements),
            ("P0", &p0_zero),
        ),
        span_report(
            "trimmed_endpoint[P1*-,n]",
            n,
            n,
            ("P1*-", &basis(SpaceKind::P1MinusStar, n, cell)?.elements),
            ("P1", &p1(n)),
        ),
    ])
}

/// `⋆𝒬₁⁻Λ^{n−k} = 𝒬₁^{*,-}Λᵏ`.
pub fn check_star_duality(k: usize, cell: &CellBox) -> Result<CheckReport> {
    let n = require_local(cell, k, usize::MAX)?;
    let starred = basis(SpaceKind::Q1Minus, n - k, cell)?
        .elements
        .iter()
        .map(|f| f.hodge())
        .collect::<Result<Vec<_>>>()?;
    let direct = basis(SpaceKind::Q1MinusStar, k, cell)?.elements;
    Ok(span_report("star_duality", n, k, ("⋆Q1-", &starred), ("Q1*-", &direct)))
}

/// Each generator of `𝒬₁⁻Λᵏ` is homogeneous in `x̃` of exactly one degree,
/// and the homogeneous components add up to the whole space.
pub fn check_homogeneous_decomposition(k: usize, cell: &CellBox) -> Result<CheckReport> {
    let n = require_local(cell, k, usize::MAX)?;
    let center = cell.center();
    let q = basis(SpaceKind::Q1Minus, k, cell)?.elements;
    let mut ce = None;
    for f in &q {
        let local = f.translate(&center);
        let degrees: Vec<usize> = (0..=n).filter(|&r| local.is_homogeneous(r as u32)).collect();
        if degrees.len() != 1 {
            ce = Some(format!("{f} is homogeneous of degrees {degrees:?}"));
            break;
        }
    }
    if ce.is_none() {
        let mut all = Vec::new();
        let mut total = 0;
        for r in 0..=n - k {
            let comp = basis(SpaceKind::Q1MinusHomogeneous(r), k, cell)?.elements;
            total += rank(&comp);
            all.extend(comp);
        }
        if total != q.len() || !same_span(&all, &q) {
            ce = Some(format!("component ranks sum to {total}, dim is {}", q.len()));
        }
    }
    Ok(CheckReport::new("homogeneous_decomposition", n, k, ce))
}

/// The four equalities linking `d` on `𝒫₁⁻Λᵏ` and `δ` on `𝒫₁^{*,-}Λ^{k+1}`.
pub fn check_local_couple(k: usize, cell: &CellBox) -> Result<Vec<CheckReport>> {
    let n = cell.dim();
    if k >= n {
        return Err(Error::domain(format!(
            "local couple needs k ≤ n − 1, got k = {k}, n = {n}"
        )));
    }
    let p1 = basis(SpaceKind::P1Minus, k, cell)?.elements;
    let star = basis(SpaceKind::P1MinusStar, k + 1, cell)?.elements;
    let p0_next = basis(SpaceKind::P0, k + 1, cell)?.elements;
    let p0 = basis(SpaceKind::P0, k, cell)?.elements;
    let d = d_images(&p1);
    let delta = delta_images(&star)?;
    Ok(vec![
        span_report(
            "local_couple[R(d) = P0]",
            n,
            k,
            ("R(d)", &nonzero(d.clone())),
            ("P0", &p0_next),
        ),
        span_report(
            "local_couple[N(δ) = P0]",
            n,
            k,
            ("N(δ)", &kernel_of(&star, &delta)),
            ("P0", &p0_next),
        ),
        span_report(
            "local_couple[N(d) = P0]",
            n,
            k,
            ("N(d)", &kernel_of(&p1, &d)),
            ("P0", &p0),
        ),
        span_report("local_couple[R(δ) = P0]", n, k, ("R(δ)", &nonzero(delta)), ("P0", &p0)),
    ])
}

/// `N(dᵏ, 𝒬₁⁻Λᵏ) = R(d^{k−1}, 𝒬₁⁻Λ^{k−1})` and the splitting
/// `𝒬₁⁻Λᵏ = R(d^{k−1}) ⊕ κR(dᵏ)`, for `1 ≤ k ≤ n`.
pub fn check_q_exactness(k: usize, cell: &CellBox) -> Result<Vec<CheckReport>> {
    let n = cell.dim();
    if k == 0 || k > n {
        return Err(Error::domain(format!(
            "exactness needs 1 ≤ k ≤ n, got k = {k}, n = {n}"
        )));
    }
    let center = cell.center();
    let q = basis(SpaceKind::Q1Minus, k, cell)?.elements;
    let q_prev = basis(SpaceKind::Q1Minus, k - 1, cell)?.elements;
    let dq = d_images(&q);
    let kernel = kernel_of(&q, &dq);
    let range = nonzero(d_images(&q_prev));
    let exact = span_report("q_exactness", n, k, ("N(d)", &kernel), ("R(d)", &range));

    let lifted: Vec<PolyForm> = if k < n {
        nonzero(dq).iter().map(|f| f.koszul(&center)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let (r_range, r_lift) = (rank(&range), rank(&lifted));
    let union: Vec<PolyForm> = range.iter().chain(&lifted).cloned().collect();
    let ce = if let Some(i) = first_outside(&q, &lifted) {
        Some(format!("κdω = {} is not in Q1-", lifted[i]))
    } else if r_range + r_lift != q.len() || rank(&union) != q.len() {
        Some(format!(
            "rank R(d) = {r_range}, rank κR(d) = {r_lift}, rank of union = {}, dim = {}",
            rank(&union),
            q.len()
        ))
    } else {
        None
    };
    Ok(vec![exact, CheckReport::new("q_decomposition", n, k, ce)])
}

/// `N(δ_k, 𝒬₁^{*,-}Λᵏ) = R(δ_{k+1}, 𝒬₁^{*,-}Λ^{k+1})` for `0 ≤ k ≤ n − 1`,
/// with `δ₀ = 0`.
pub fn check_q_star_exactness(k: usize, cell: &CellBox) -> Result<CheckReport> {
    let n = cell.dim();
    if k >= n {
        return Err(Error::domain(format!(
            "star exactness needs k ≤ n − 1, got k = {k}, n = {n}"
        )));
    }
    let q = basis(SpaceKind::Q1MinusStar, k, cell)?.elements;
    let kernel = if k == 0 {
        q.clone()
    } else {
        kernel_of(&q, &delta_images(&q)?)
    };
    let next = basis(SpaceKind::Q1MinusStar, k + 1, cell)?.elements;
    let range = nonzero(delta_images(&next)?);
    Ok(span_report(
        "q_star_exactness",
        n,
        k,
        ("N(δ)", &kernel),
        ("R(δ)", &range),
    ))
}

/// `⟨x̃_τ dx^σ, x̃_τ' dx^σ'⟩_K ≠ 0` only for `τ = τ' = ∅`, `σ = σ'`, over all
/// pairs from `𝒬₁⁻Λᵏ × 𝒬₁^{*,-}Λᵏ`.
pub fn check_orthogonality(k: usize, cell: &CellBox) -> Result<CheckReport> {
    let n = require_local(cell, k, usize::MAX)?;
    let center = cell.center();
    let left = q_generators(k, n, false);
    let right = q_generators(k, n, true);
    let mut ce = None;
    'outer: for (tau, sigma) in &left {
        let f = PolyForm::centered_monomial(tau, *sigma, &center);
        for (tau2, sigma2) in &right {
            let g = PolyForm::centered_monomial(tau2, *sigma2, &center);
            let ip = f.inner_product(&g, cell)?;
            let expect_nonzero = tau.is_empty() && tau2.is_empty() && sigma == sigma2;
            if ip.is_zero() == expect_nonzero {
                ce = Some(format!("⟨{f}, {g}⟩ = {}", crate::text::scalar_text(&ip)));
                break 'outer;
            }
        }
    }
    Ok(CheckReport::new("orthogonality", n, k, ce))
}

/// `⟨d𝕀ω, μ⟩ − ⟨𝕀ω, δμ⟩ = ⟨dω, μ⟩ − ⟨ω, δμ⟩` for every `ω ∈ 𝒬₁⁻Λᵏ` and
/// `μ ∈ 𝒬₁^{*,-}Λ^{k+1}` basis pair.
pub fn check_ap_identity(k: usize, cell: &CellBox) -> Result<CheckReport> {
    let n = cell.dim();
    if k >= n {
        return Err(Error::domain(format!(
            "adjoint identity needs k ≤ n − 1, got k = {k}, n = {n}"
        )));
    }
    let projector = LocalProjector::new(k, cell)?;
    let tests = basis(SpaceKind::Q1MinusStar, k + 1, cell)?.elements;
    let mut ce = None;
    'outer: for omega in &basis(SpaceKind::Q1Minus, k, cell)?.elements {
        let projected = projector.project(omega)?;
        for mu in &tests {
            let lhs = adjoint_pairing(&projected, mu, cell)?;
            let rhs = adjoint_pairing(omega, mu, cell)?;
            if lhs != rhs {
                ce = Some(format!(
                    "ω = {omega}, μ = {mu}: residual {}",
                    crate::text::scalar_text(&(lhs - rhs))
                ));
                break 'outer;
            }
        }
    }
    Ok(CheckReport::new("adjoint_identity", n, k, ce))
}

/// Monomial forms `x^β dx^σ` with `|β| ≤ max_degree`, centered at the origin.
fn monomial_forms(k: usize, n: usize, max_degree: u32) -> Vec<(u32, PolyForm)> {
    let mut exps: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..n {
        exps = exps
            .into_iter()
            .flat_map(|e| {
                let used: u32 = e.iter().sum();
                (0..=max_degree - used).map(move |p| {
                    let mut e2 = e.clone();
                    e2.push(p);
                    e2
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for sigma in multi_indices(k, n) {
        for e in &exps {
            let m = crate::poly::Monomial::from_exponents(e);
            let coef = Polynomial::monomial(n, m, Scalar::from_integer(1.into()));
            out.push((e.iter().sum(), PolyForm::term(sigma, coef)));
        }
    }
    out
}

/// `d∘d = 0`, `δ∘δ = 0`, `⋆⋆ = (−1)^{k(n−k)}`, `(dκ + κd)ω = (r + k)ω` and the
/// degree shifts of `κ`, `d`, `δ`, `κ^δ`, on every monomial `k`-form of
/// coefficient degree at most `max_degree`.
pub fn check_form_identities(k: usize, n: usize, max_degree: u32) -> Result<Vec<CheckReport>> {
    crate::exterior::check_dim(n)?;
    if k > n {
        return Err(Error::domain(format!("degree {k} exceeds dimension {n}")));
    }
    let origin = vec![Scalar::zero(); n];
    let sign = if (k * (n - k)).is_multiple_of(2) { 1 } else { -1 };
    let mut failures: [Option<String>; 5] = Default::default();
    let note = |slot: &mut Option<String>, msg: String| {
        if slot.is_none() {
            *slot = Some(msg);
        }
    };
    for (r, f) in monomial_forms(k, n, max_degree) {
        let d = f.exterior_derivative();
        if k + 1 < n && !d.exterior_derivative().is_zero() {
            note(&mut failures[0], format!("dd({f}) ≠ 0"));
        }
        if k >= 2 && !f.codifferential()?.codifferential()?.is_zero() {
            note(&mut failures[1], format!("δδ({f}) ≠ 0"));
        }
        let ss = f.hodge()?.hodge()?;
        if ss != f.scale(&Scalar::from_integer(sign.into())) {
            note(&mut failures[2], format!("⋆⋆({f}) = {ss}"));
        }
        let mut homotopy = PolyForm::zero(n, k);
        if k >= 1 {
            homotopy = homotopy.add(&f.koszul(&origin)?.exterior_derivative())?;
        }
        if k < n {
            homotopy = homotopy.add(&d.koszul(&origin)?)?;
        }
        let expected = f.scale(&Scalar::from_integer((r as usize + k).into()));
        if homotopy != expected {
            note(&mut failures[3], format!("(dκ + κd)({f}) = {homotopy}"));
        }
        let shifts = [
            (k >= 1).then(|| f.koszul(&origin).map(|g| (g, r + 1))),
            (k < n).then(|| Ok((d.clone(), r.wrapping_sub(1)))),
            (k >= 1).then(|| f.codifferential().map(|g| (g, r.wrapping_sub(1)))),
            (k < n).then(|| f.koszul_delta(&origin).map(|g| (g, r + 1))),
        ];
        for shifted in shifts.into_iter().flatten() {
            let (g, degree) = shifted?;
            if !g.is_zero() && !g.is_homogeneous(degree) {
                note(
                    &mut failures[4],
                    format!("{g} (from {f}) is not homogeneous of degree {degree}"),
                );
            }
        }
    }
    let names = [
        "d_squared",
        "delta_squared",
        "star_star_sign",
        "homotopy",
        "koszul_grading",
    ];
    Ok(names
        .iter()
        .zip(failures)
        .map(|(name, ce)| CheckReport::new(*name, n, k, ce))
        .collect())
}

/// Every local structural check for all admissible degrees on one cell.
pub fn local_suite(cell: &CellBox) -> Result<Vec<CheckReport>> {
    let n = cell.dim();
    let mut out = check_trimmed_endpoints(cell)?;
    for k in 0..=n {
        out.extend(check_form_identities(k, n, 2)?);
        out.extend(check_dimensions(k, cell)?);
        out.push(check_tensor_presentation(k, cell)?);
        out.push(check_star_duality(k, cell)?);
        out.push(check_homogeneous_decomposition(k, cell)?);
        out.push(check_orthogonality(k, cell)?);
        if k < n {
            out.extend(check_local_couple(k, cell)?);
            out.push(check_q_star_exactness(k, cell)?);
            out.push(check_ap_identity(k, cell)?);
        }
        if k >= 1 {
            out.extend(check_q_exactness(k, cell)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, rat};
    use crate::report::all_pass;
    use crate::text::parse_form;

    fn forms(texts: &[&str], n: usize, k: usize) -> Vec<PolyForm> {
        texts.iter().map(|t| parse_form(t, n, k).unwrap()).collect()
    }

    #[test]
    fn q_basis_on_reference_square() {
        let t = CellBox::reference(2);
        let q = basis(SpaceKind::Q1Minus, 1, &t).unwrap().elements;
        assert_eq!(q, forms(&["1 * dx[1]", "x2 * dx[1]", "1 * dx[2]", "x1 * dx[2]"], 2, 1));
        let qs = basis(SpaceKind::Q1MinusStar, 1, &t).unwrap().elements;
        assert_eq!(qs, forms(&["1 * dx[1]", "x1 * dx[1]", "1 * dx[2]", "x2 * dx[2]"], 2, 1));
        let p = basis(SpaceKind::P1Minus, 0, &t).unwrap().elements;
        assert!(same_span(&p, &forms(&["1 * dx[]", "x1 * dx[]", "x2 * dx[]"], 2, 0)));
    }

    #[test]
    fn centered_on_stretched_box() {
        let k = CellBox::new(vec![int(0), int(0)], vec![int(1), int(3)]).unwrap();
        let q = basis(SpaceKind::Q1Minus, 1, &k).unwrap().elements;
        assert_eq!(q[1], parse_form("(x2 - 3/2) * dx[1]", 2, 1).unwrap());
        assert_eq!(q[3], parse_form("(x1 - 1/2) * dx[2]", 2, 1).unwrap());
        assert_eq!(q[3].inner_product(&q[3], &k).unwrap(), rat(1, 4));
    }

    #[test]
    fn rejects_bad_degrees() {
        let t = CellBox::reference(2);
        assert!(basis(SpaceKind::Q1Minus, 3, &t).is_err());
        assert!(basis(SpaceKind::Q1MinusHomogeneous(2), 1, &t).is_err());
        assert!(check_local_couple(2, &t).is_err());
        assert!(check_q_exactness(0, &t).is_err());
    }

    #[test]
    fn suite_passes_in_low_dimension() {
        for n in 1..=3 {
            let reports = local_suite(&CellBox::reference(n)).unwrap();
            assert!(all_pass(&reports), "{:?}", crate::report::first_failure(&reports));
            let stretched = CellBox::new(vec![int(0); n], (1..=n as i64).map(int).collect()).unwrap();
            let reports = local_suite(&stretched).unwrap();
            assert!(all_pass(&reports), "{:?}", crate::report::first_failure(&reports));
        }
    }

    #[test]
    fn broken_spaces_are_detected() {
        // Span comparisons must name a witness when the spans differ.
        let t = CellBox::reference(2);
        let q = basis(SpaceKind::Q1Minus, 0, &t).unwrap().elements;
        let wrong = basis(SpaceKind::Q1Minus, 1, &t).unwrap().elements;
        let p1 = basis(SpaceKind::P1Minus, 0, &t).unwrap().elements;
        assert!(!same_span(&q, &p1));
        let r = span_report(
            "probe",
            2,
            1,
            ("a", &wrong),
            ("b", &basis(SpaceKind::Q1MinusStar, 1, &t).unwrap().elements),
        );
        assert!(!r.pass);
        assert!(r.counterexample.unwrap().contains("dx"));
    }
}
