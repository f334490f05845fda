//! The nonconforming Whitney-form space `W^def`.
//!
//! A piecewise Whitney form `ω_h ∈ Π_K 𝒫₁⁻Λᵏ(K)` lies in `W^def` when
//! `Σ_K ⟨dω_h, μ⟩_K − ⟨ω_h, δμ⟩_K = 0` for every conforming dual test field
//! `μ`. Two flavors:
//!
//! * [`Flavor::Interior`]: tests from `VQstar0 Λ^{k+1}` (no boundary
//!   condition on `ω_h`); contains `𝕀_h VQ Λᵏ`.
//! * [`Flavor::Full`]: tests from `VQstar Λ^{k+1}` (vanishing trace imposed
//!   weakly); contains `𝕀_h VQ0 Λᵏ`.
//!
//! Piecewise forms are coefficient vectors: entry `c·dim + j` multiplies the
//! `j`-th local Whitney basis form on cell `c`, written in the cell's
//! centered coordinates.

use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::MultiIndex;
use crate::form::PolyForm;
use crate::global_spaces::{GlobalKind, GlobalSpace};
use crate::linalg::{sparse_dot, SparseRow, SparseRref};
use crate::local_spaces::{basis, SpaceKind};
use crate::mesh::CubicalMesh;
use crate::poly::Scalar;
use crate::projection::{adjoint_pairing, LocalProjector};
use crate::report::CheckReport;
use crate::span::express;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Interior,
    Full,
}

impl Flavor {
    pub fn test_kind(self) -> GlobalKind {
        match self {
            Self::Interior => GlobalKind::VQstar0,
            Self::Full => GlobalKind::VQstar,
        }
    }

    /// Conforming space whose interpolant lies in this flavor of `W^def`.
    pub fn conforming_kind(self) -> GlobalKind {
        match self {
            Self::Interior => GlobalKind::VQ,
            Self::Full => GlobalKind::VQ0,
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Interior => "interior",
            Self::Full => "full",
        })
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(Self::Interior),
            "full" => Ok(Self::Full),
            other => Err(Error::parse(format!(
                "unknown flavor '{other}' (expected interior or full)"
            ))),
        }
    }
}

/// Cell-level data shared by every cell of a uniform grid.
#[derive(Clone, Debug)]
pub struct LocalWhitney {
    pub k: usize,
    pub projector: LocalProjector,
    /// Local matrix of `d`: column `j` holds the coordinates of `dφⱼ` in the
    /// degree-`k+1` Whitney basis (empty when `k = n`).
    pub derivative: Vec<Vec<Scalar>>,
}

impl LocalWhitney {
    pub fn new(k: usize, mesh: &CubicalMesh) -> Result<Self> {
        let cell = mesh.reference_cell();
        let projector = LocalProjector::new(k, &cell)?;
        let derivative = if k < mesh.dim() {
            let next = basis(SpaceKind::P1Minus, k + 1, &cell)?.elements;
            projector
                .trial_basis()
                .iter()
                .map(|phi| {
                    express(&next, &phi.exterior_derivative())
                        .ok_or_else(|| Error::domain("d of a Whitney form left the Whitney space"))
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            k,
            projector,
            derivative,
        })
    }

    pub fn dim(&self) -> usize {
        self.projector.dim()
    }

    pub fn basis(&self) -> &[PolyForm] {
        self.projector.trial_basis()
    }

    /// Local coordinates of a form already in `𝒫₁⁻Λᵏ`.
    pub fn coordinates(&self, f: &PolyForm) -> Option<Vec<Scalar>> {
        express(self.basis(), f)
    }
}

fn add_block(row: &mut Vec<(usize, Scalar)>, offset: usize, values: &[Scalar], scale: &Scalar) {
    for (j, v) in values.iter().enumerate() {
        if !v.is_zero() {
            row.push((offset + j, v * scale));
        }
    }
}

fn normalize(mut row: Vec<(usize, Scalar)>) -> SparseRow {
    row.sort_by_key(|(j, _)| *j);
    let mut out: SparseRow = Vec::with_capacity(row.len());
    for (j, v) in row {
        match out.last_mut() {
            Some((lj, lv)) if *lj == j => *lv += v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

/// The constraint matrix `B`, one sparse row per test basis function.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub k: usize,
    pub flavor: Flavor,
    pub num_cells: usize,
    pub local_dim: usize,
    pub rows: Vec<SparseRow>,
}

impl ConstraintSystem {
    pub fn num_columns(&self) -> usize {
        self.num_cells * self.local_dim
    }

    pub fn residual(&self, v: &[Scalar]) -> Vec<Scalar> {
        self.rows.par_iter().map(|r| sparse_dot(r, v)).collect()
    }

    pub fn annihilates(&self, v: &[Scalar]) -> bool {
        self.rows.par_iter().all(|r| sparse_dot(r, v).is_zero())
    }

    pub fn annihilates_sparse(&self, v: &SparseRow) -> bool {
        let dense = to_dense(v, self.num_columns());
        self.annihilates(&dense)
    }

    pub fn elimination(&self) -> SparseRref {
        let mut e = SparseRref::new(self.num_columns());
        for r in &self.rows {
            e.insert(r);
        }
        e
    }

    pub fn rank(&self) -> usize {
        self.elimination().rank()
    }
}

pub fn to_dense(v: &SparseRow, len: usize) -> Vec<Scalar> {
    let mut out = vec![Scalar::zero(); len];
    for (j, x) in v {
        out[*j] = x.clone();
    }
    out
}

pub fn build_constraints(k: usize, mesh: &CubicalMesh, flavor: Flavor) -> Result<ConstraintSystem> {
    let n = mesh.dim();
    if k > n {
        return Err(Error::domain(format!("degree {k} exceeds dimension {n}")));
    }
    let local = LocalWhitney::new(k, mesh)?;
    let dim = local.dim();
    let rows = if k == n {
        Vec::new()
    } else {
        let tests = GlobalSpace::build(flavor.test_kind(), k + 1, mesh)?;
        let cell = mesh.reference_cell();
        let pairing: Vec<Vec<Scalar>> = tests
            .local_basis()
            .iter()
            .map(|mu| {
                local
                    .basis()
                    .iter()
                    .map(|phi| adjoint_pairing(phi, mu, &cell))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let one = Scalar::from_integer(1.into());
        (0..tests.dim())
            .into_par_iter()
            .map(|g| {
                let mut row = Vec::new();
                for &(c, s) in tests.support(g) {
                    add_block(&mut row, c * dim, &pairing[s], &one);
                }
                normalize(row)
            })
            .collect()
    };
    Ok(ConstraintSystem {
        k,
        flavor,
        num_cells: mesh.num_cells(),
        local_dim: dim,
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Kernel,
    Generators,
}

/// A spanning list of piecewise Whitney forms.
#[derive(Clone, Debug)]
pub struct WhitneySpace {
    pub k: usize,
    pub flavor: Flavor,
    pub num_cells: usize,
    pub local_dim: usize,
    pub representation: Representation,
    pub vectors: Vec<SparseRow>,
}

impl WhitneySpace {
    pub fn num_columns(&self) -> usize {
        self.num_cells * self.local_dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn span_rank(&self) -> usize {
        let mut e = SparseRref::new(self.num_columns());
        for v in &self.vectors {
            e.insert(v);
        }
        e.rank()
    }

    /// Cell pieces of vector `i`, in local coordinates.
    pub fn pieces(&self, i: usize, local: &LocalWhitney) -> Vec<PolyForm> {
        pieces_of(&self.vectors[i], self.num_cells, local)
    }
}

/// Cell pieces of a piecewise coefficient vector.
pub fn pieces_of(v: &SparseRow, num_cells: usize, local: &LocalWhitney) -> Vec<PolyForm> {
    let dim = local.dim();
    let mut coefs = vec![vec![Scalar::zero(); dim]; num_cells];
    for (j, x) in v {
        coefs[j / dim][j % dim] = x.clone();
    }
    coefs.iter().map(|c| local.projector.combine(c)).collect()
}

/// Nullspace of `B` in reduced column echelon form.
pub fn kernel_space(system: &ConstraintSystem) -> WhitneySpace {
    WhitneySpace {
        k: system.k,
        flavor: system.flavor,
        num_cells: system.num_cells,
        local_dim: system.local_dim,
        representation: Representation::Kernel,
        vectors: system.elimination().nullspace_sparse(),
    }
}

/// Coordinates of `𝕀_K ψ` for each local conforming shape `ψ`.
fn projected_shapes(space: &GlobalSpace, local: &LocalWhitney) -> Result<Vec<Vec<Scalar>>> {
    space
        .local_basis()
        .iter()
        .map(|psi| local.projector.coefficients(psi))
        .collect()
}

/// `𝕀_h v` for every global basis function `v` of the conforming space
/// matching the flavor; possibly linearly dependent.
pub fn interpolated_generating_set(k: usize, mesh: &CubicalMesh, flavor: Flavor) -> Result<WhitneySpace> {
    let local = LocalWhitney::new(k, mesh)?;
    let space = GlobalSpace::build(flavor.conforming_kind(), k, mesh)?;
    let shapes = projected_shapes(&space, &local)?;
    let dim = local.dim();
    let one = Scalar::from_integer(1.into());
    let vectors = (0..space.dim())
        .into_par_iter()
        .map(|g| {
            let mut row = Vec::new();
            for &(c, l) in space.support(g) {
                add_block(&mut row, c * dim, &shapes[l], &one);
            }
            normalize(row)
        })
        .collect();
    Ok(WhitneySpace {
        k,
        flavor,
        num_cells: mesh.num_cells(),
        local_dim: dim,
        representation: Representation::Generators,
        vectors,
    })
}

/// Cellwise `d_h` on coefficient vectors.
pub fn apply_d(v: &SparseRow, local: &LocalWhitney) -> SparseRow {
    let dim = local.dim();
    let next_dim = local.derivative.first().map_or(0, |c| c.len());
    let mut row = Vec::new();
    for (j, x) in v {
        let (c, l) = (j / dim, j % dim);
        add_block(&mut row, c * next_dim, &local.derivative[l], x);
    }
    normalize(row)
}

/// Piecewise coordinates of the constant form `c dx^σ` on every cell.
pub fn constant_vector(sigma: MultiIndex, c: &Scalar, num_cells: usize, local: &LocalWhitney) -> Result<SparseRow> {
    let coords = local
        .coordinates(&PolyForm::constant(sigma, c.clone()))
        .ok_or_else(|| Error::domain("constant form outside the Whitney space"))?;
    let one = Scalar::from_integer(1.into());
    let mut row = Vec::new();
    for cell in 0..num_cells {
        add_block(&mut row, cell * local.dim(), &coords, &one);
    }
    Ok(normalize(row))
}

/// Every interpolated conforming basis function satisfies the constraints
/// exactly, and lies in the span of the exact kernel.
pub fn check_interpolant_in_space(k: usize, mesh: &CubicalMesh, flavor: Flavor) -> Result<Vec<CheckReport>> {
    let n = mesh.dim();
    let system = build_constraints(k, mesh, flavor)?;
    let gens = interpolated_generating_set(k, mesh, flavor)?;
    let bad = gens.vectors.iter().position(|v| !system.annihilates_sparse(v));
    let constraint = CheckReport::new(
        format!("interpolant_satisfies_constraints[{flavor}]"),
        n,
        k,
        bad.map(|i| format!("generator {i} has a nonzero constraint residual")),
    );
    let kernel = kernel_space(&system);
    let mut e = SparseRref::new(kernel.num_columns());
    for v in &kernel.vectors {
        e.insert(v);
    }
    let outside = gens.vectors.iter().position(|v| !e.contains(v));
    let (dk, dg) = (kernel.len(), gens.span_rank());
    let span = CheckReport::new(
        format!("generators_in_kernel_span[{flavor}]"),
        n,
        k,
        outside.map(|i| format!("generator {i} is outside the kernel span")),
    )
    .with_detail(format!("dim kernel = {dk}, dim span(generators) = {dg}"));
    Ok(vec![constraint, span])
}

/// `d_h` maps `W^def Λᵏ` into `W^def Λ^{k+1}` and `d_h d_h = 0`, on the
/// exact kernel bases, for every `k`.
pub fn check_whitney_complex(mesh: &CubicalMesh, flavor: Flavor) -> Result<Vec<CheckReport>> {
    let n = mesh.dim();
    let locals = (0..=n)
        .map(|k| LocalWhitney::new(k, mesh))
        .collect::<Result<Vec<_>>>()?;
    let systems = (0..=n)
        .map(|k| build_constraints(k, mesh, flavor))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for k in 0..n {
        let kernel = kernel_space(&systems[k]);
        let mut ce = None;
        for (i, v) in kernel.vectors.iter().enumerate() {
            let dv = apply_d(v, &locals[k]);
            if !systems[k + 1].annihilates_sparse(&dv) {
                ce = Some(format!(
                    "d_h of kernel vector {i} violates the degree-{} constraints",
                    k + 1
                ));
                break;
            }
            if k + 1 < n && !apply_d(&dv, &locals[k + 1]).is_empty() {
                ce = Some(format!("d_h d_h of kernel vector {i} is not zero"));
                break;
            }
        }
        out.push(CheckReport::new(format!("whitney_complex[{flavor}]"), n, k, ce));
    }
    Ok(out)
}

/// `𝕀_h^{k+1} d v = d_h 𝕀_h^k v` for every conforming basis function `v`.
pub fn check_commuting_squares(mesh: &CubicalMesh, flavor: Flavor) -> Result<Vec<CheckReport>> {
    let n = mesh.dim();
    let mut out = Vec::new();
    for k in 0..n {
        let local = LocalWhitney::new(k, mesh)?;
        let next = LocalWhitney::new(k + 1, mesh)?;
        let space = GlobalSpace::build(flavor.conforming_kind(), k, mesh)?;
        let projected = projected_shapes(&space, &local)?;
        let projected_d: Vec<Vec<Scalar>> = space
            .local_basis()
            .iter()
            .map(|psi| next.projector.coefficients(&psi.exterior_derivative()))
            .collect::<Result<_>>()?;
        let one = Scalar::from_integer(1.into());
        let mut ce = None;
        for g in 0..space.dim() {
            let mut interp = Vec::new();
            let mut left = Vec::new();
            for &(c, l) in space.support(g) {
                add_block(&mut interp, c * local.dim(), &projected[l], &one);
                add_block(&mut left, c * next.dim(), &projected_d[l], &one);
            }
            let right = apply_d(&normalize(interp), &local);
            if normalize(left) != right {
                ce = Some(format!("square fails on conforming basis function {g}"));
                break;
            }
        }
        out.push(CheckReport::new(format!("commuting_square[{flavor}]"), n, k, ce));
    }
    Ok(out)
}

/// Every constant `dx^σ` satisfies the interior-flavor constraints.
pub fn check_constants_in_space(mesh: &CubicalMesh) -> Result<Vec<CheckReport>> {
    let n = mesh.dim();
    let mut out = Vec::new();
    for k in 0..=n {
        let local = LocalWhitney::new(k, mesh)?;
        let system = build_constraints(k, mesh, Flavor::Interior)?;
        let mut ce = None;
        for sigma in crate::exterior::multi_indices(k, n) {
            let v = constant_vector(sigma, &Scalar::from_integer(1.into()), mesh.num_cells(), &local)?;
            if !system.annihilates_sparse(&v) {
                ce = Some(format!("dx{sigma} violates the constraints"));
                break;
            }
        }
        out.push(CheckReport::new("constants_in_space", n, k, ce));
    }
    Ok(out)
}

/// Zero-mean-jump rows for piecewise 0-forms: one per interior
/// `(n−1)`-face, `∫_F (φ|_{K⁻} − φ|_{K⁺})`.
pub fn mean_jump_rows(mesh: &CubicalMesh, local: &LocalWhitney) -> Vec<SparseRow> {
    let n = mesh.dim();
    let cell = mesh.reference_cell();
    let dim = local.dim();
    let side_integral = |axis: usize, upper: bool| -> Vec<Scalar> {
        let v = if upper {
            cell.upper()[axis].clone()
        } else {
            cell.lower()[axis].clone()
        };
        let axes: Vec<usize> = (0..n).filter(|&i| i != axis).collect();
        local
            .basis()
            .iter()
            .map(|phi| {
                phi.component(&MultiIndex::empty(n))
                    .map(|p| {
                        p.restrict(axis, &v)
                            .integrate_axes(&axes, cell.lower(), cell.upper())
                            .coefficient(&crate::poly::Monomial::ONE)
                    })
                    .unwrap_or_else(Scalar::zero)
            })
            .collect()
    };
    let mut rows = Vec::new();
    let one = Scalar::from_integer(1.into());
    let minus = -one.clone();
    for c in 0..mesh.num_cells() {
        let pos = mesh.cell_position(c);
        for axis in 0..n {
            if pos[axis] + 1 >= mesh.divisions()[axis] {
                continue;
            }
            let mut next = pos.clone();
            next[axis] += 1;
            let c2 = mesh.cell_index(&next);
            let mut row = Vec::new();
            add_block(&mut row, c * dim, &side_integral(axis, true), &one);
            add_block(&mut row, c2 * dim, &side_integral(axis, false), &minus);
            rows.push(normalize(row));
        }
    }
    rows
}

/// For `k = 0`, the interior-flavor kernel coincides with the piecewise
/// linear functions whose jumps have zero mean on every interior face.
pub fn check_mean_jump_equivalence(mesh: &CubicalMesh) -> Result<CheckReport> {
    let n = mesh.dim();
    let local = LocalWhitney::new(0, mesh)?;
    let system = build_constraints(0, mesh, Flavor::Interior)?;
    let jumps = mean_jump_rows(mesh, &local);
    let cols = system.num_columns();
    let rank_of = |rows: &[&SparseRow]| {
        let mut e = SparseRref::new(cols);
        for r in rows {
            e.insert(r);
        }
        e.rank()
    };
    let rb = rank_of(&system.rows.iter().collect::<Vec<_>>());
    let rj = rank_of(&jumps.iter().collect::<Vec<_>>());
    let both = rank_of(&system.rows.iter().chain(&jumps).collect::<Vec<_>>());
    let ce = (rb != both || rj != both).then(|| format!("rank B = {rb}, rank J = {rj}, rank [B; J] = {both}"));
    Ok(CheckReport::new("mean_jump_equivalence", n, 0, ce)
        .with_detail(format!("rank B = {rb}, rank J = {rj}, rank [B; J] = {both}")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpaceSummary {
    pub k: usize,
    pub flavor: Flavor,
    pub n_cells: usize,
    pub dim_piecewise: usize,
    #[serde(rename = "rank_B")]
    pub rank_b: usize,
    pub dim_kernel: usize,
    pub dim_generators_span: usize,
}

pub fn summarize(k: usize, mesh: &CubicalMesh, flavor: Flavor) -> Result<SpaceSummary> {
    let system = build_constraints(k, mesh, flavor)?;
    let rank_b = system.rank();
    let gens = interpolated_generating_set(k, mesh, flavor)?;
    Ok(SpaceSummary {
        k,
        flavor,
        n_cells: mesh.num_cells(),
        dim_piecewise: system.num_columns(),
        rank_b,
        dim_kernel: system.num_columns() - rank_b,
        dim_generators_span: gens.span_rank(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CellBox;
    use crate::exterior::binomial;
    use crate::report::all_pass;

    #[test]
    fn single_cell_has_no_interior_constraints() {
        for n in 1..=3 {
            let mesh = CubicalMesh::unit(n, 1).unwrap();
            for k in 0..=n {
                let b = build_constraints(k, &mesh, Flavor::Interior).unwrap();
                assert!(b.rows.iter().all(|r| r.is_empty()));
                assert_eq!(kernel_space(&b).len(), binomial(n + 1, k + 1));
            }
        }
    }

    #[test]
    fn two_by_two_counts() {
        let mesh = CubicalMesh::unit(2, 2).unwrap();
        let b0 = build_constraints(0, &mesh, Flavor::Interior).unwrap();
        assert_eq!((b0.rows.len(), b0.num_columns()), (4, 12));
        assert_eq!(b0.rank(), 4);
        let b1 = build_constraints(1, &mesh, Flavor::Interior).unwrap();
        assert_eq!((b1.rows.len(), b1.num_columns()), (1, 12));
        let local = LocalWhitney::new(0, &mesh).unwrap();
        let ones = constant_vector(MultiIndex::empty(2), &Scalar::from_integer(1.into()), 4, &local).unwrap();
        assert!(b0.annihilates_sparse(&ones));
    }

    #[test]
    fn kernel_vectors_satisfy_constraints_and_jumps_vanish() {
        let mesh = CubicalMesh::unit(2, 2).unwrap();
        let system = build_constraints(0, &mesh, Flavor::Interior).unwrap();
        let kernel = kernel_space(&system);
        let local = LocalWhitney::new(0, &mesh).unwrap();
        let jumps = mean_jump_rows(&mesh, &local);
        for v in &kernel.vectors {
            assert!(system.annihilates_sparse(v));
            let dense = to_dense(v, system.num_columns());
            assert!(jumps.iter().all(|r| sparse_dot(r, &dense).is_zero()));
        }
        assert_eq!(kernel.len(), 8);
    }

    #[test]
    fn structural_checks_on_small_grids() {
        for n in 1..=3 {
            let mesh = CubicalMesh::unit(n, 2).unwrap();
            for flavor in [Flavor::Interior, Flavor::Full] {
                for k in 0..=n {
                    let r = check_interpolant_in_space(k, &mesh, flavor).unwrap();
                    assert!(all_pass(&r), "{r:?}");
                }
                assert!(all_pass(&check_whitney_complex(&mesh, flavor).unwrap()));
                assert!(all_pass(&check_commuting_squares(&mesh, flavor).unwrap()));
            }
            assert!(all_pass(&check_constants_in_space(&mesh).unwrap()));
        }
        let stretched = CubicalMesh::build(
            &CellBox::new(
                vec![0.into(), 0.into()].into_iter().map(Scalar::from_integer).collect(),
                vec![Scalar::from_integer(2.into()), Scalar::from_integer(1.into())],
            )
            .unwrap(),
            &[3, 2],
        )
        .unwrap();
        assert!(check_mean_jump_equivalence(&stretched).unwrap().pass);
    }
}
