//! Galerkin discretization of `⟨dω, dμ⟩ + ⟨ω, μ⟩ = ⟨f, μ⟩` in `W^def`,
//! broken error norms, the consistency residual, and convergence sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;
use std::time::Instant;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::PolyForm;
use crate::linalg::SparseRref;
use crate::manufactured::{manufactured, FloatForm, FormField};
use crate::mesh::CubicalMesh;
use crate::modular::solve_multimodular;
use crate::poly::{to_f64, Scalar};
use crate::quadrature::TensorRule;
use crate::whitney::{
    build_constraints, interpolated_generating_set, kernel_space, Flavor, LocalWhitney, Representation, WhitneySpace,
};

/// Largest system solved by exact elimination under [`SolveMethod::Auto`].
pub const EXACT_LIMIT: usize = 500;
/// Largest piecewise coefficient count for which [`BasisChoice::Auto`]
/// eliminates the exact kernel; above it the pruned generators are used.
pub const KERNEL_COLUMN_LIMIT: usize = 1024;
pub const CG_TOLERANCE: f64 = 1e-12;
const DOT_CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Auto,
    Kernel,
    Generators,
}

impl FromStr for BasisChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "kernel" => Ok(Self::Kernel),
            "generators" => Ok(Self::Generators),
            other => Err(Error::parse(format!(
                "unknown basis '{other}' (expected auto, kernel or generators)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Auto,
    Exact,
    Cg,
}

impl FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "exact" => Ok(Self::Exact),
            "cg" => Ok(Self::Cg),
            other => Err(Error::parse(format!(
                "unknown method '{other}' (expected auto, exact or cg)"
            ))),
        }
    }
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::Exact => "exact",
            Self::Cg => "cg",
        })
    }
}

/// Compressed sparse rows of a square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<T>,
}

impl<T: Clone> CsrMatrix<T> {
    fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let mut ptr = vec![0];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for r in rows {
            for (j, v) in r {
                idx.push(j);
                val.push(v);
            }
            ptr.push(idx.len());
        }
        Self { ptr, idx, val }
    }

    pub fn n(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &T)> {
        let r = self.ptr[i]..self.ptr[i + 1];
        self.idx[r.clone()].iter().copied().zip(&self.val[r])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&T> {
        let r = self.ptr[i]..self.ptr[i + 1];
        self.idx[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|p| &self.val[r.start + p])
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            ptr: self.ptr.clone(),
            idx: self.idx.clone(),
            val: self.val.iter().map(f).collect(),
        }
    }

    pub fn sparse_rows(&self) -> Vec<Vec<(usize, T)>> {
        (0..self.n())
            .map(|i| self.row(i).map(|(j, v)| (j, v.clone())).collect())
            .collect()
    }
}

impl CsrMatrix<f64> {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i).copied().unwrap_or(0.0)).collect()
    }

    /// Largest `|G_ij − G_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.val.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = (0..self.n())
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, *v)))
            .map(|(i, j, v)| (v - self.get(j, i).copied().unwrap_or(0.0)).abs())
            .fold(0.0f64, f64::max);
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

impl CsrMatrix<Scalar> {
    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == Some(v)))
    }
}

/// Fixed-order chunked dot product; independent of the thread count.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_chunks(DOT_CHUNK)
        .zip(b.par_chunks(DOT_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

fn generic_dot<T: Clone + Zero + Add<Output = T> + Mul<Output = T>>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// A Galerkin space: an independent list of piecewise Whitney forms with
/// the cell data needed for assembly.
#[derive(Clone, Debug)]
pub struct DiscreteSpace {
    pub k: usize,
    pub flavor: Flavor,
    pub mesh: CubicalMesh,
    pub local: LocalWhitney,
    pub basis: WhitneySpace,
    /// Size of the generating set before pruning (equals `dim` for kernels).
    pub candidates: usize,
    members: Vec<Vec<(usize, Vec<Scalar>)>>,
    supports: Vec<Vec<usize>>,
    centers: Vec<Vec<f64>>,
    mass: Vec<Vec<Scalar>>,
    stiffness: Vec<Vec<Scalar>>,
    d_basis: Vec<PolyForm>,
}

impl DiscreteSpace {
    pub fn build(k: usize, mesh: &CubicalMesh, flavor: Flavor, choice: BasisChoice) -> Result<Self> {
        let local = LocalWhitney::new(k, mesh)?;
        let columns = mesh.num_cells() * local.dim();
        let use_kernel = match choice {
            BasisChoice::Kernel => true,
            BasisChoice::Generators => false,
            BasisChoice::Auto => columns <= KERNEL_COLUMN_LIMIT,
        };
        let (basis, candidates) = if use_kernel {
            let kernel = kernel_space(&build_constraints(k, mesh, flavor)?);
            let len = kernel.len();
            (kernel, len)
        } else {
            let mut gens = interpolated_generating_set(k, mesh, flavor)?;
            let candidates = gens.len();
            let mut e = SparseRref::new(gens.num_columns());
            gens.vectors.retain(|v| e.insert(v));
            (gens, candidates)
        };
        Self::assemble_space(k, mesh, flavor, local, basis, candidates)
    }

    /// Wraps a caller-supplied list; fails with [`Error::DependentBasis`]
    /// unless the vectors are linearly independent.
    pub fn from_vectors(k: usize, mesh: &CubicalMesh, flavor: Flavor, basis: WhitneySpace) -> Result<Self> {
        let local = LocalWhitney::new(k, mesh)?;
        let rank = basis.span_rank();
        if rank != basis.len() {
            return Err(Error::DependentBasis(format!(
                "{} vectors span only {rank} dimensions",
                basis.len()
            )));
        }
        let len = basis.len();
        Self::assemble_space(k, mesh, flavor, local, basis, len)
    }

    fn assemble_space(
        k: usize,
        mesh: &CubicalMesh,
        flavor: Flavor,
        local: LocalWhitney,
        basis: WhitneySpace,
        candidates: usize,
    ) -> Result<Self> {
        let dim = local.dim();
        let mut members: Vec<Vec<(usize, Vec<Scalar>)>> = vec![Vec::new(); mesh.num_cells()];
        let mut supports = vec![Vec::new(); basis.len()];
        for (i, v) in basis.vectors.iter().enumerate() {
            let mut by_cell: BTreeMap<usize, Vec<Scalar>> = BTreeMap::new();
            for (j, x) in v {
                by_cell.entry(j / dim).or_insert_with(|| vec![Scalar::zero(); dim])[j % dim] = x.clone();
            }
            for (c, coefs) in by_cell {
                supports[i].push(c);
                members[c].push((i, coefs));
            }
        }
        let cell = mesh.reference_cell();
        let phis = local.basis();
        let d_basis: Vec<PolyForm> = phis.iter().map(|p| p.exterior_derivative()).collect();
        let gram = |fs: &[PolyForm]| -> Result<Vec<Vec<Scalar>>> {
            fs.iter()
                .map(|a| fs.iter().map(|b| a.inner_product(b, &cell)).collect())
                .collect()
        };
        let mass = gram(phis)?;
        let stiffness = gram(&d_basis)?;
        let centers = (0..mesh.num_cells())
            .map(|c| mesh.cell(c).center().iter().map(to_f64).collect())
            .collect();
        Ok(Self {
            k,
            flavor,
            mesh: mesh.clone(),
            local,
            basis,
            candidates,
            members,
            supports,
            centers,
            mass,
            stiffness,
            d_basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn representation(&self) -> Representation {
        self.basis.representation
    }

    /// Cell-local coefficients `Σ_i x_i v_i`, flattened as cell × local basis.
    pub fn piecewise(&self, x: &[f64]) -> Vec<f64> {
        let dim = self.local.dim();
        self.members
            .par_iter()
            .flat_map_iter(|m| {
                let mut u = vec![0.0; dim];
                for (i, coefs) in m {
                    for (l, c) in coefs.iter().enumerate() {
                        u[l] += x[*i] * to_f64(c);
                    }
                }
                u
            })
            .collect()
    }

    /// Exact cell pieces of `Σ_i x_i v_i` in centered cell coordinates.
    pub fn pieces_exact(&self, x: &[Scalar]) -> Vec<PolyForm> {
        let dim = self.local.dim();
        self.members
            .iter()
            .map(|m| {
                let mut u = vec![Scalar::zero(); dim];
                for (i, coefs) in m {
                    for (l, c) in coefs.iter().enumerate() {
                        u[l] += &x[*i] * c;
                    }
                }
                self.local.projector.combine(&u)
            })
            .collect()
    }

    /// `F_i = Σ_K v_i|_K · ℓ_K` for per-cell local vectors `ℓ_K`.
    fn distribute<T>(&self, members: &[Vec<(usize, Vec<T>)>], loads: &[Vec<T>]) -> Vec<T>
    where
        T: Clone + Zero + Add<Output = T> + Mul<Output = T> + Send + Sync,
    {
        (0..self.dim())
            .into_par_iter()
            .map(|i| {
                self.supports[i].iter().fold(T::zero(), |acc, &c| {
                    let m = &members[c];
                    let p = m.binary_search_by_key(&i, |(b, _)| *b).expect("support lists the cell");
                    acc + generic_dot(&m[p].1, &loads[c])
                })
            })
            .collect()
    }

    fn gram<T>(&self, members: &[Vec<(usize, Vec<T>)>], local: &[Vec<T>]) -> CsrMatrix<T>
    where
        T: Clone + Zero + Add<Output = T> + Mul<Output = T> + Send + Sync,
    {
        let rows = (0..self.dim())
            .into_par_iter()
            .map(|i| {
                let mut acc: BTreeMap<usize, T> = BTreeMap::new();
                for &c in &self.supports[i] {
                    let m = &members[c];
                    let p = m.binary_search_by_key(&i, |(b, _)| *b).expect("support lists the cell");
                    let w: Vec<T> = local.iter().map(|row| generic_dot(row, &m[p].1)).collect();
                    for (j, vj) in m {
                        let x = generic_dot(vj, &w);
                        if !x.is_zero() {
                            let e = acc.entry(*j).or_insert_with(T::zero);
                            *e = e.clone() + x;
                        }
                    }
                }
                acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    fn energy_exact(&self) -> Vec<Vec<Scalar>> {
        self.mass
            .iter()
            .zip(&self.stiffness)
            .map(|(m, s)| m.iter().zip(s).map(|(a, b)| a + b).collect())
            .collect()
    }

    fn members_f64(&self) -> Vec<Vec<(usize, Vec<f64>)>> {
        self.members
            .iter()
            .map(|m| m.iter().map(|(i, c)| (*i, c.iter().map(to_f64).collect())).collect())
            .collect()
    }

    /// Basis values and exterior derivatives at the points of a tensor rule
    /// on the reference cell.
    fn sampled(&self, q: usize) -> Result<Sampled> {
        let widths: Vec<f64> = self.mesh.cell_widths().iter().map(to_f64).collect();
        let rule = TensorRule::centered(q, &widths)?;
        let phi: Vec<FloatForm> = self.local.basis().iter().map(FloatForm::new).collect();
        let dphi: Vec<FloatForm> = self.d_basis.iter().map(FloatForm::new).collect();
        let values = rule
            .points
            .iter()
            .map(|p| phi.iter().map(|f| f.eval(p)).collect())
            .collect();
        let d_values = rule
            .points
            .iter()
            .map(|p| dphi.iter().map(|f| f.eval(p)).collect())
            .collect();
        Ok(Sampled { rule, values, d_values })
    }

    fn check_field(&self, f: &dyn FormField, degree: usize) -> Result<()> {
        if f.dim() != self.mesh.dim() || f.degree() != degree {
            return Err(Error::domain(format!(
                "field is a {}-form on R^{}, expected a {degree}-form on R^{}",
                f.degree(),
                f.dim(),
                self.mesh.dim()
            )));
        }
        Ok(())
    }

    /// Per-cell `ℓ_K[j] = ∫_K a·φⱼ + b·dφⱼ` by quadrature.
    fn quadrature_loads(
        &self,
        a: Option<&dyn FormField>,
        b: Option<&dyn FormField>,
        q: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let s = self.sampled(q)?;
        let dim = self.local.dim();
        Ok(self
            .centers
            .par_iter()
            .map(|center| {
                let mut load = vec![0.0; dim];
                for (p, (pt, w)) in s.rule.points.iter().zip(&s.rule.weights).enumerate() {
                    let x: Vec<f64> = pt.iter().zip(center).map(|(a, c)| a + c).collect();
                    let fa = a.map(|f| f.eval(&x));
                    let fb = b.map(|f| f.eval(&x));
                    for (j, l) in load.iter_mut().enumerate() {
                        let mut v = 0.0;
                        if let Some(fa) = &fa {
                            v += fa.iter().zip(&s.values[p][j]).map(|(x, y)| x * y).sum::<f64>();
                        }
                        if let Some(fb) = &fb {
                            v += fb.iter().zip(&s.d_values[p][j]).map(|(x, y)| x * y).sum::<f64>();
                        }
                        *l += w * v;
                    }
                }
                load
            })
            .collect())
    }
}

#[derive(Clone, Debug)]
struct Sampled {
    rule: TensorRule,
    values: Vec<Vec<Vec<f64>>>,
    d_values: Vec<Vec<Vec<f64>>>,
}

/// Right-hand side data `f`.
#[derive(Clone, Copy)]
pub enum Load<'a> {
    /// Polynomial form in absolute coordinates; integrated exactly.
    Polynomial(&'a PolyForm),
    Field(&'a dyn FormField),
}

#[derive(Clone, Debug)]
pub struct ExactSystem {
    pub g: CsrMatrix<Scalar>,
    pub f: Vec<Scalar>,
}

#[derive(Clone, Debug)]
pub struct DiscreteProblem {
    pub g: CsrMatrix<f64>,
    pub f: Vec<f64>,
    /// Present for polynomial data with `N ≤ EXACT_LIMIT`.
    pub exact: Option<ExactSystem>,
    /// Quadrature points per axis used for the load, if any.
    pub quadrature: Option<usize>,
}

pub fn assemble(space: &DiscreteSpace, load: Load<'_>, quadrature: usize) -> Result<DiscreteProblem> {
    let members = space.members_f64();
    let energy: Vec<Vec<f64>> = space
        .energy_exact()
        .iter()
        .map(|r| r.iter().map(to_f64).collect())
        .collect();
    let g = space.gram(&members, &energy);
    match load {
        Load::Polynomial(f) => {
            if f.dim() != space.mesh.dim() || f.degree() != space.k {
                return Err(Error::domain("load form has the wrong dimension or degree"));
            }
            let cell = space.mesh.reference_cell();
            let loads: Vec<Vec<Scalar>> = (0..space.mesh.num_cells())
                .into_par_iter()
                .map(|c| {
                    let centered = f.translate(&space.mesh.cell(c).center());
                    space
                        .local
                        .basis()
                        .iter()
                        .map(|phi| centered.inner_product(phi, &cell))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            let f_exact = space.distribute(&space.members, &loads);
            let exact = (space.dim() <= EXACT_LIMIT).then(|| ExactSystem {
                g: space.gram(&space.members, &space.energy_exact()),
                f: f_exact.clone(),
            });
            Ok(DiscreteProblem {
                g,
                f: f_exact.iter().map(to_f64).collect(),
                exact,
                quadrature: None,
            })
        }
        Load::Field(f) => {
            space.check_field(f, space.k)?;
            let loads = space.quadrature_loads(Some(f), None, quadrature)?;
            Ok(DiscreteProblem {
                g,
                f: space.distribute(&members, &loads),
                exact: None,
                quadrature: Some(quadrature),
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `‖r‖/‖b‖` after each iteration.
    pub history: Vec<f64>,
}

/// Jacobi-preconditioned conjugate gradients.
pub fn conjugate_gradient(a: &CsrMatrix<f64>, b: &[f64], tolerance: f64, max_iterations: usize) -> Result<CgOutcome> {
    let n = a.n();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            history: Vec::new(),
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    for it in 1..=max_iterations {
        let ap = a.matvec(&p);
        let alpha = rz / dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut().zip(&ap).for_each(|(r, q)| *r -= alpha * q);
        let rel = dot(&r, &r).sqrt() / b_norm;
        history.push(rel);
        if rel <= tolerance {
            return Ok(CgOutcome {
                x,
                iterations: it,
                history,
            });
        }
        z = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        p.par_iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub method: SolveMethod,
    pub coefficients: Vec<f64>,
    pub exact: Option<Vec<Scalar>>,
    pub iterations: usize,
    pub history: Vec<f64>,
}

pub fn solve(problem: &DiscreteProblem, method: SolveMethod) -> Result<Solution> {
    let n = problem.g.n();
    let exact = match method {
        SolveMethod::Exact => true,
        SolveMethod::Cg => false,
        SolveMethod::Auto => problem.exact.is_some() && n <= EXACT_LIMIT,
    };
    if exact {
        let sys = problem
            .exact
            .as_ref()
            .ok_or_else(|| Error::domain("exact elimination needs polynomial data and at most 500 unknowns"))?;
        let x = solve_multimodular(&sys.g.sparse_rows(), &sys.f)?;
        return Ok(Solution {
            method: SolveMethod::Exact,
            coefficients: x.iter().map(to_f64).collect(),
            exact: Some(x),
            iterations: 0,
            history: Vec::new(),
        });
    }
    let out = conjugate_gradient(&problem.g, &problem.f, CG_TOLERANCE, 50 * n.max(1))?;
    Ok(Solution {
        method: SolveMethod::Cg,
        coefficients: out.x,
        exact: None,
        iterations: out.iterations,
        history: out.history,
    })
}

pub fn energy_norm(g: &CsrMatrix<f64>, x: &[f64]) -> f64 {
    dot(x, &g.matvec(x)).max(0.0).sqrt()
}

/// `(‖ω − ω_h‖_{L²}, ‖ω − ω_h‖_{d_h})` summed over cells by quadrature;
/// `piecewise` is the output of [`DiscreteSpace::piecewise`].
pub fn broken_error(
    space: &DiscreteSpace,
    exact: &dyn FormField,
    d_exact: &dyn FormField,
    piecewise: &[f64],
    quadrature: usize,
) -> Result<(f64, f64)> {
    space.check_field(exact, space.k)?;
    let s = space.sampled(quadrature)?;
    let dim = space.local.dim();
    let per_cell: Vec<(f64, f64)> = space
        .centers
        .par_iter()
        .enumerate()
        .map(|(c, center)| {
            let u = &piecewise[c * dim..(c + 1) * dim];
            let (mut l2, mut dd) = (0.0, 0.0);
            for (p, (pt, w)) in s.rule.points.iter().zip(&s.rule.weights).enumerate() {
                let x: Vec<f64> = pt.iter().zip(center).map(|(a, c)| a + c).collect();
                let mut e = exact.eval(&x);
                for (j, uj) in u.iter().enumerate() {
                    for (ei, v) in e.iter_mut().zip(&s.values[p][j]) {
                        *ei -= uj * v;
                    }
                }
                l2 += w * e.iter().map(|v| v * v).sum::<f64>();
                let mut de = d_exact.eval(&x);
                if de.is_empty() {
                    continue;
                }
                for (j, uj) in u.iter().enumerate() {
                    for (ei, v) in de.iter_mut().zip(&s.d_values[p][j]) {
                        *ei -= uj * v;
                    }
                }
                dd += w * de.iter().map(|v| v * v).sum::<f64>();
            }
            (l2, dd)
        })
        .collect();
    let (l2, dd) = per_cell.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Ok((l2.sqrt(), (l2 + dd).sqrt()))
}

/// `sup_μ [⟨dω, d_hμ⟩ − ⟨δdω, μ⟩] / ‖μ‖_{d_h}` over the space, as the
/// `G`-norm of the Riesz representer of the functional.
pub fn consistency_residual(
    space: &DiscreteSpace,
    g: &CsrMatrix<f64>,
    d_exact: &dyn FormField,
    delta_d_exact: &dyn FormField,
    quadrature: usize,
) -> Result<f64> {
    if space.k == space.mesh.dim() {
        return Ok(0.0);
    }
    space.check_field(d_exact, space.k + 1)?;
    space.check_field(delta_d_exact, space.k)?;
    let neg = Negated(delta_d_exact);
    let loads = space.quadrature_loads(Some(&neg), Some(d_exact), quadrature)?;
    let r = space.distribute(&space.members_f64(), &loads);
    let y = conjugate_gradient(g, &r, CG_TOLERANCE, 50 * g.n().max(1))?.x;
    Ok(dot(&r, &y).max(0.0).sqrt())
}

struct Negated<'a>(&'a dyn FormField);

impl FormField for Negated<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn degree(&self) -> usize {
        self.0.degree()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.0.eval(x).into_iter().map(|v| -v).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub k: usize,
    pub solution: String,
    pub flavor: Flavor,
    /// Divisions per axis of the unit cube, one entry per level.
    pub levels: Vec<usize>,
    pub quadrature: usize,
    pub basis: BasisChoice,
}

/// One CSV row of a convergence sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub level: usize,
    pub h: f64,
    pub n_cells: usize,
    pub dim_space: usize,
    #[serde(rename = "err_L2")]
    pub err_l2: f64,
    #[serde(rename = "err_Hd")]
    pub err_hd: f64,
    pub consistency: f64,
    #[serde(rename = "order_L2")]
    pub order_l2: Option<f64>,
    #[serde(rename = "order_Hd")]
    pub order_hd: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelInfo {
    pub level: usize,
    pub representation: Representation,
    pub candidates: usize,
    pub cg_iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Sweep {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub consistency_orders: Vec<Option<f64>>,
    pub levels: Vec<LevelInfo>,
}

impl Sweep {
    /// Orders between the two finest levels: `(L², d_h, consistency)`.
    pub fn final_orders(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        match self.rows.last() {
            Some(r) => (
                r.order_l2,
                r.order_hd,
                self.consistency_orders.last().copied().flatten(),
            ),
            None => (None, None, None),
        }
    }
}

/// `log(e_{i−1}/e_i) / log(h_{i−1}/h_i)`, empty for the first level.
pub fn observed_orders(errors: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| {
            (i > 0 && errors[i] > 0.0 && errors[i - 1] > 0.0)
                .then(|| (errors[i - 1] / errors[i]).ln() / (hs[i - 1] / hs[i]).ln())
        })
        .collect()
}

pub fn convergence_sweep(config: &SweepConfig) -> Result<Sweep> {
    let m = manufactured(&config.solution, config.n, config.k)?;
    let mut rows = Vec::new();
    let mut consistency = Vec::new();
    let mut levels = Vec::new();
    for (level, &div) in config.levels.iter().enumerate() {
        let start = Instant::now();
        let mesh = CubicalMesh::unit(config.n, div)?;
        let space = DiscreteSpace::build(config.k, &mesh, config.flavor, config.basis)?;
        let problem = assemble(&space, Load::Field(&m.rhs), config.quadrature)?;
        let sol = solve(&problem, SolveMethod::Cg)?;
        let u = space.piecewise(&sol.coefficients);
        let (l2, hd) = broken_error(&space, &m.omega, &m.d_omega, &u, config.quadrature)?;
        let cons = consistency_residual(&space, &problem.g, &m.d_omega, &m.delta_d_omega, config.quadrature)?;
        rows.push(SweepRow {
            level,
            h: 1.0 / div as f64,
            n_cells: mesh.num_cells(),
            dim_space: space.dim(),
            err_l2: l2,
            err_hd: hd,
            consistency: cons,
            order_l2: None,
            order_hd: None,
        });
        consistency.push(cons);
        levels.push(LevelInfo {
            level,
            representation: space.representation(),
            candidates: space.candidates,
            cg_iterations: sol.iterations,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.err_l2).collect();
    let hd: Vec<f64> = rows.iter().map(|r| r.err_hd).collect();
    for (r, (a, b)) in rows
        .iter_mut()
        .zip(observed_orders(&l2, &hs).into_iter().zip(observed_orders(&hd, &hs)))
    {
        r.order_l2 = a;
        r.order_hd = b;
    }
    Ok(Sweep {
        config: config.clone(),
        rows,
        consistency_orders: observed_orders(&consistency, &hs),
        levels,
    })
}
