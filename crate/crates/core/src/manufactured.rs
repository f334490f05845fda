//! Smooth closed-form fields for convergence studies.
//!
//! Coefficients are trigonometric polynomials `Σ c Π_i f_i(aᵢπxᵢ)` with
//! `f_i ∈ {1, sin, cos}` and integer frequencies `aᵢ`; they form a [`Coefficient`] ring closed under
//! partial derivatives, so `d`, `⋆` and `δ` of catalog entries are exact
//! symbolic operations.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::exterior::{enumerate_multi_indices, MultiIndex};
use crate::form::{Coefficient, Form, PolyForm};
use crate::poly::FloatPoly;
use crate::whitney::Flavor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    One,
    Sin(u32),
    Cos(u32),
}

/// `Σ c Π_i f_i(aᵢπxᵢ)` on `ℝⁿ`.
#[derive(Clone, PartialEq)]
pub struct TrigPoly {
    n: usize,
    terms: BTreeMap<Vec<Factor>, f64>,
}

impl TrigPoly {
    pub fn product(factors: Vec<Factor>, c: f64) -> Self {
        let n = factors.len();
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(factors, c);
        }
        Self { n, terms }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::product(vec![Factor::One; n], c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(fs, c)| {
                fs.iter().zip(x).fold(*c, |acc, (f, &xi)| match f {
                    Factor::One => acc,
                    Factor::Sin(a) => acc * (*a as f64 * PI * xi).sin(),
                    Factor::Cos(a) => acc * (*a as f64 * PI * xi).cos(),
                })
            })
            .sum()
    }

    fn add_term(&mut self, fs: Vec<Factor>, c: f64) {
        let entry = self.terms.entry(fs.clone()).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&fs);
        }
    }
}

impl Coefficient for TrigPoly {
    fn zero_in(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (fs, c) in &other.terms {
            out.add_term(fs.clone(), *c);
        }
        out
    }

    fn negated(&self) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(f, c)| (f.clone(), -c)).collect(),
        }
    }

    fn derivative(&self, axis: usize) -> Self {
        let mut out = Self::zero_in(self.n);
        for (fs, c) in &self.terms {
            let mut g = fs.clone();
            let scale = match fs[axis] {
                Factor::One => continue,
                Factor::Sin(a) => {
                    g[axis] = Factor::Cos(a);
                    a as f64 * PI
                }
                Factor::Cos(a) => {
                    g[axis] = Factor::Sin(a);
                    -(a as f64) * PI
                }
            };
            out.add_term(g, c * scale);
        }
        out
    }
}

impl fmt::Debug for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(fs, c)| {
                let mut s = format!("{c}");
                for (i, fac) in fs.iter().enumerate() {
                    match fac {
                        Factor::One => {}
                        Factor::Sin(a) => s.push_str(&format!("*sin({a}*pi*x{})", i + 1)),
                        Factor::Cos(a) => s.push_str(&format!("*cos({a}*pi*x{})", i + 1)),
                    }
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

pub type TrigForm = Form<TrigPoly>;

/// A `k`-form evaluable at points; components ordered as
/// [`enumerate_multi_indices`].
pub trait FormField: Sync {
    fn dim(&self) -> usize;
    fn degree(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
}

impl FormField for TrigForm {
    fn dim(&self) -> usize {
        Form::dim(self)
    }

    fn degree(&self) -> usize {
        Form::degree(self)
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        enumerate_multi_indices(self.degree(), self.dim())
            .unwrap_or_default()
            .iter()
            .map(|a| self.component(a).map_or(0.0, |c| c.eval(x)))
            .collect()
    }
}

/// Floating copy of a polynomial form for pointwise evaluation.
#[derive(Clone, Debug)]
pub struct FloatForm {
    n: usize,
    k: usize,
    components: Vec<Option<FloatPoly>>,
}

impl FloatForm {
    pub fn new(f: &PolyForm) -> Self {
        let components = enumerate_multi_indices(f.degree(), f.dim())
            .unwrap_or_default()
            .iter()
            .map(|a| f.component(a).map(|p| p.to_float()))
            .collect();
        Self {
            n: f.dim(),
            k: f.degree(),
            components,
        }
    }
}

impl FormField for FloatForm {
    fn dim(&self) -> usize {
        self.n
    }

    fn degree(&self) -> usize {
        self.k
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|p| p.as_ref().map_or(0.0, |p| p.eval(x)))
            .collect()
    }
}

/// A catalog entry: `ω`, `dω`, `δdω` and `f = δdω + ω`, all in closed form.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub name: String,
    pub flavor: Flavor,
    pub omega: TrigForm,
    pub d_omega: TrigForm,
    pub delta_d_omega: TrigForm,
    pub rhs: TrigForm,
}

pub const CATALOG: &[(&str, &str)] = &[
    ("sin", "vanishing trace on the unit cube; pairs with the full flavor"),
    (
        "cos",
        "vanishing trace of the Hodge dual of dω; pairs with the interior flavor",
    ),
    (
        "sinmix",
        "as sin with frequency i along axis i; pairs with the full flavor",
    ),
    (
        "cosmix",
        "as cos with frequency i along axis i; pairs with the interior flavor",
    ),
    ("sinsin", "every component is Π sin(πxᵢ); pairs with the full flavor"),
    ("const", "the constant form dx^{1..k}; pairs with the interior flavor"),
];

pub fn available() -> String {
    CATALOG.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}

type Pattern = Box<dyn Fn(&MultiIndex, usize) -> Factor>;

/// Builds catalog entry `name` as a `k`-form on `ℝⁿ` (domain `[0,1]ⁿ`).
/// Components carry weights `1, 2, 3, …` so that `dω ≠ 0` in general; the
/// `mix` entries use `1, 4, 9, …` since linear weights would match their
/// frequencies and make `ω` closed.
///
/// With equal frequencies on a uniform grid, face integrals of `⋆dω` for
/// `k = n − 1` coincide with a multiple of those of a continuous bilinear
/// field, which makes the consistency residual vanish identically; the
/// `mix` entries avoid that coincidence.
pub fn manufactured(name: &str, n: usize, k: usize) -> Result<Manufactured> {
    let sigmas = enumerate_multi_indices(k, n)?;
    let essential = |a: fn(usize) -> u32| -> Pattern {
        Box::new(move |s, i| {
            if s.contains(i) {
                Factor::Cos(a(i))
            } else {
                Factor::Sin(a(i))
            }
        })
    };
    let natural = |a: fn(usize) -> u32| -> Pattern {
        Box::new(move |s, i| {
            if s.contains(i) {
                Factor::Sin(a(i))
            } else {
                Factor::Cos(a(i))
            }
        })
    };
    let (flavor, factors): (Flavor, Pattern) = match name {
        "sin" => (Flavor::Full, essential(|_| 1)),
        "cos" => (Flavor::Interior, natural(|_| 1)),
        "sinmix" => (Flavor::Full, essential(|i| i as u32 + 1)),
        "cosmix" => (Flavor::Interior, natural(|i| i as u32 + 1)),
        "sinsin" => (Flavor::Full, Box::new(|_, _| Factor::Sin(1))),
        "const" => (Flavor::Interior, Box::new(|_, _| Factor::One)),
        _ => {
            return Err(Error::UnknownSolution {
                name: name.to_string(),
                available: available(),
            })
        }
    };
    let mut omega = TrigForm::zero(n, k);
    for (w, s) in sigmas.iter().enumerate() {
        if name == "const" && w > 0 {
            break;
        }
        let fs = (0..n).map(|i| factors(s, i)).collect();
        let weight = if name.ends_with("mix") {
            (w + 1) * (w + 1)
        } else {
            w + 1
        };
        omega.add_component(*s, TrigPoly::product(fs, weight as f64));
    }
    let d_omega = omega.exterior_derivative();
    let delta_d_omega = if k < n {
        d_omega.codifferential()?
    } else {
        TrigForm::zero(n, k)
    };
    let rhs = delta_d_omega.add(&omega)?;
    Ok(Manufactured {
        name: name.to_string(),
        flavor,
        omega,
        d_omega,
        delta_d_omega,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::wedge_sign;

    fn partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], axis: usize) -> f64 {
        let h = 1e-5;
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[axis] += h;
        b[axis] -= h;
        (f(&a) - f(&b)) / (2.0 * h)
    }

    // d and δ = −Σ_j ι_{e_j} ∂_j by coordinate formulas on closures.
    fn fd_d(n: usize, comp: &dyn Fn(&MultiIndex, &[f64]) -> f64, beta: &MultiIndex, x: &[f64]) -> f64 {
        beta.axes()
            .map(|j| {
                let rest = beta.without(j);
                let (s, _) = wedge_sign(&MultiIndex::single(j, n), &rest).unwrap();
                s as f64 * partial(&|y| comp(&rest, y), x, j)
            })
            .sum()
    }

    fn fd_delta(n: usize, comp: &dyn Fn(&MultiIndex, &[f64]) -> f64, alpha: &MultiIndex, x: &[f64]) -> f64 {
        alpha
            .complement()
            .axes()
            .map(|j| {
                let (s, up) = wedge_sign(&MultiIndex::single(j, n), alpha).unwrap();
                -(s as f64) * partial(&|y| comp(&up, y), x, j)
            })
            .sum()
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let x = [0.31, 0.62, 0.17];
        for n in 1..=3 {
            let x = &x[..n];
            for k in 0..=n {
                for (name, _) in CATALOG {
                    let m = manufactured(name, n, k).unwrap();
                    let omega = |a: &MultiIndex, y: &[f64]| m.omega.component(a).map_or(0.0, |c| c.eval(y));
                    let d_omega = |a: &MultiIndex, y: &[f64]| m.d_omega.component(a).map_or(0.0, |c| c.eval(y));
                    if k < n {
                        for beta in enumerate_multi_indices(k + 1, n).unwrap() {
                            let got = d_omega(&beta, x);
                            let want = fd_d(n, &omega, &beta, x);
                            assert!((got - want).abs() < 1e-6, "{name} n={n} k={k} dω");
                        }
                        // δ of the exact dω, differentiated numerically once
                        for alpha in enumerate_multi_indices(k, n).unwrap() {
                            let got = m.delta_d_omega.component(&alpha).map_or(0.0, |c| c.eval(x));
                            let want = fd_delta(n, &d_omega, &alpha, x);
                            assert!((got - want).abs() < 1e-5, "{name} n={n} k={k} δdω {got} {want}");
                        }
                    } else {
                        assert!(m.d_omega.is_zero() && m.delta_d_omega.is_zero());
                    }
                    let f = m.rhs.eval(x);
                    let w = m.omega.eval(x);
                    let dd = m.delta_d_omega.eval(x);
                    for i in 0..f.len() {
                        assert!((f[i] - w[i] - dd[i]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn delta_d_is_negative_laplacian_on_functions() {
        // δdu = −Δu for 0-forms: sin(πx)sin(πy) ↦ 2π² sin sin
        let m = manufactured("sin", 2, 0).unwrap();
        let x = [0.2, 0.7];
        let u = m.omega.eval(&x)[0];
        let v = m.delta_d_omega.eval(&x)[0];
        assert!((v - 2.0 * PI * PI * u).abs() < 1e-12);
    }

    #[test]
    fn boundary_behavior() {
        // "sin": tangential components vanish on the boundary
        let m = manufactured("sin", 2, 1).unwrap();
        let on_x0 = m.omega.eval(&[0.0, 0.4]);
        assert!(on_x0[1].abs() < 1e-15);
        let on_y1 = m.omega.eval(&[0.3, 1.0]);
        assert!(on_y1[0].abs() < 1e-15);
        // "cos": dω vanishes on the whole boundary in 2D
        let c = manufactured("cos", 2, 1).unwrap();
        assert!(c.d_omega.eval(&[0.0, 0.4])[0].abs() < 1e-14);
        assert!(c.d_omega.eval(&[0.3, 1.0])[0].abs() < 1e-14);
        for name in ["sin", "cos", "sinmix", "cosmix", "sinsin"] {
            for n in 1..=4 {
                for k in 0..n {
                    let m = manufactured(name, n, k).unwrap();
                    let x: Vec<f64> = (0..n).map(|i| 0.13 + 0.21 * i as f64).collect();
                    let size: f64 = m.d_omega.eval(&x).iter().map(|v| v.abs()).sum();
                    assert!(size > 1e-3, "{name} n={n} k={k} is closed");
                }
            }
        }
        let mix = manufactured("sinmix", 3, 1).unwrap();
        let on_x1 = mix.omega.eval(&[1.0, 0.3, 0.6]);
        assert!(on_x1[1].abs() < 1e-14 && on_x1[2].abs() < 1e-14 && on_x1[0].abs() > 0.1);
        assert!(matches!(manufactured("tan", 2, 0), Err(Error::UnknownSolution { .. })));
    }
}
