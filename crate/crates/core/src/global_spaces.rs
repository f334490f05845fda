//! Conforming tensor-product spaces on a grid, stored as per-cell
//! expansions in a shared local basis.
//!
//! `VQ`/`VQ0` use one degree of freedom per `k`-face (interior faces only for
//! `VQ0`). The star kinds are the cellwise Hodge duals:
//! `VQstar Λᵏ = ⋆ VQ Λ^{n−k}`, numbered by `(n−k)`-faces.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::Serialize;

use crate::cell::CellBox;
use crate::error::{Error, Result};
use crate::form::PolyForm;
use crate::mesh::{face_dofs, face_integral, local_faces, local_shapes, CubicalMesh};
use crate::poly::{int, Scalar};
use crate::report::CheckReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum GlobalKind {
    VQ,
    VQ0,
    VQstar,
    VQstar0,
}

impl GlobalKind {
    pub fn is_star(self) -> bool {
        matches!(self, Self::VQstar | Self::VQstar0)
    }

    pub fn vanishes_on_boundary(self) -> bool {
        matches!(self, Self::VQ0 | Self::VQstar0)
    }
}

#[derive(Clone, Debug)]
pub struct GlobalSpace {
    kind: GlobalKind,
    k: usize,
    n: usize,
    cell: CellBox,
    local_basis: Vec<PolyForm>,
    cell_map: Vec<Vec<Option<usize>>>,
    support: Vec<Vec<(usize, usize)>>,
    faces: Vec<usize>,
}

fn star_inverse(f: &PolyForm) -> Result<PolyForm> {
    let (n, k) = (f.dim(), f.degree());
    let s = f.hodge()?;
    Ok(if (k * (n - k)) % 2 == 1 { s.neg() } else { s })
}

impl GlobalSpace {
    pub fn build(kind: GlobalKind, k: usize, mesh: &CubicalMesh) -> Result<Self> {
        let n = mesh.dim();
        if k > n {
            return Err(Error::domain(format!("degree {k} exceeds dimension {n}")));
        }
        let face_dim = if kind.is_star() { n - k } else { k };
        let shapes = local_shapes(face_dim, mesh.cell_widths());
        let local_basis = if kind.is_star() {
            shapes.iter().map(|f| f.hodge()).collect::<Result<Vec<_>>>()?
        } else {
            shapes
        };
        let table = face_dofs(face_dim, mesh)?;
        let mut global_of_face = vec![None; table.num_global];
        let mut faces = Vec::new();
        for (f, slot) in global_of_face.iter_mut().enumerate() {
            if !(kind.vanishes_on_boundary() && table.boundary[f]) {
                *slot = Some(faces.len());
                faces.push(f);
            }
        }
        let cell_map: Vec<Vec<Option<usize>>> = table
            .cell_dofs
            .iter()
            .map(|dofs| dofs.iter().map(|&f| global_of_face[f]).collect())
            .collect();
        let mut support = vec![Vec::new(); faces.len()];
        for (c, map) in cell_map.iter().enumerate() {
            for (l, g) in map.iter().enumerate() {
                if let Some(g) = g {
                    support[*g].push((c, l));
                }
            }
        }
        Ok(Self {
            kind,
            k,
            n,
            cell: mesh.reference_cell(),
            local_basis,
            cell_map,
            support,
            faces,
        })
    }

    pub fn kind(&self) -> GlobalKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.faces.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_map.len()
    }

    /// Centered box on which the local basis is written.
    pub fn reference_cell(&self) -> &CellBox {
        &self.cell
    }

    pub fn local_basis(&self) -> &[PolyForm] {
        &self.local_basis
    }

    pub fn cell_map(&self, c: usize) -> &[Option<usize>] {
        &self.cell_map[c]
    }

    /// `(cell, local index)` pairs on which global function `i` lives.
    pub fn support(&self, i: usize) -> &[(usize, usize)] {
        &self.support[i]
    }

    /// Mesh face carrying global function `i`.
    pub fn face_of(&self, i: usize) -> usize {
        self.faces[i]
    }

    /// Cell pieces of global function `i`, in local coordinates.
    pub fn pieces(&self, i: usize) -> Vec<(usize, PolyForm)> {
        self.support[i]
            .iter()
            .map(|&(c, l)| (c, self.local_basis[l].clone()))
            .collect()
    }

    /// Cell pieces of `Σ cᵢ φᵢ`.
    pub fn piecewise(&self, coefficients: &[Scalar]) -> Vec<PolyForm> {
        self.cell_map
            .iter()
            .map(|map| {
                PolyForm::combination(
                    self.n,
                    self.k,
                    map.iter()
                        .zip(&self.local_basis)
                        .filter_map(|(g, f)| g.map(|g| (&coefficients[g], f))),
                )
            })
            .collect()
    }

    /// Global coefficients of a piecewise form (local coordinates, one piece
    /// per cell), or `None` when it is not in the space.
    pub fn express(&self, pieces: &[PolyForm]) -> Result<Option<Vec<Scalar>>> {
        if pieces.len() != self.num_cells() {
            return Err(Error::domain("one piece per cell is required"));
        }
        let face_dim = if self.kind.is_star() { self.n - self.k } else { self.k };
        let locals = local_faces(face_dim, self.n);
        let mut coef: Vec<Option<Scalar>> = vec![None; self.dim()];
        for (c, piece) in pieces.iter().enumerate() {
            if piece.degree() != self.k {
                return Err(Error::domain("piece has the wrong degree"));
            }
            let primal = if self.kind.is_star() {
                star_inverse(piece)?
            } else {
                piece.clone()
            };
            let mut rebuilt = PolyForm::zero(self.n, self.k);
            for (l, lf) in locals.iter().enumerate() {
                let v = face_integral(&primal, &self.cell, lf);
                match self.cell_map[c][l] {
                    None if !v.is_zero() => return Ok(None),
                    None => {}
                    Some(g) => {
                        match &coef[g] {
                            Some(prev) if *prev != v => return Ok(None),
                            _ => coef[g] = Some(v.clone()),
                        }
                        rebuilt = rebuilt.add(&self.local_basis[l].scale(&v))?;
                    }
                }
            }
            if rebuilt != *piece {
                return Ok(None);
            }
        }
        Ok(Some(coef.into_iter().map(|v| v.unwrap_or_else(Scalar::zero)).collect()))
    }
}

fn d_pieces(pieces: &[PolyForm]) -> Vec<PolyForm> {
    pieces.iter().map(|p| p.exterior_derivative()).collect()
}

fn delta_pieces(pieces: &[PolyForm]) -> Result<Vec<PolyForm>> {
    pieces.iter().map(|p| p.codifferential()).collect()
}

fn unit_vector(dim: usize, i: usize) -> Vec<Scalar> {
    let mut v = vec![Scalar::zero(); dim];
    v[i] = int(1);
    v
}

/// `d` maps each conforming space into the next one, matching the face
/// coboundary, and `d∘d = 0`. `with_bc` selects the `VQ0` chain.
pub fn check_conforming_complex(mesh: &CubicalMesh, with_bc: bool) -> Result<Vec<CheckReport>> {
    let n = mesh.dim();
    let kind = if with_bc { GlobalKind::VQ0 } else { GlobalKind::VQ };
    let label = if with_bc {
        "conforming_complex[VQ0]"
    } else {
        "conforming_complex[VQ]"
    };
    let spaces = (0..=n)
        .map(|k| GlobalSpace::build(kind, k, mesh))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for k in 0..n {
        let (from, to) = (&spaces[k], &spaces[k + 1]);
        let mut ce = None;
        for i in 0..from.dim() {
            let pieces = from.piecewise(&unit_vector(from.dim(), i));
            let dp = d_pieces(&pieces);
            let Some(c) = to.express(&dp)? else {
                ce = Some(format!("d of basis function {i} leaves the degree-{} space", k + 1));
                break;
            };
            // Coboundary: coefficient on G is the incidence of face i in ∂G.
            let fi = from.face_of(i);
            let mismatch = (0..to.dim()).find(|&g| {
                let s = mesh
                    .boundary(k + 1, to.face_of(g))
                    .iter()
                    .find(|(f, _)| *f == fi)
                    .map_or(0, |(_, s)| *s as i64);
                c[g] != int(s)
            });
            if let Some(g) = mismatch {
                ce = Some(format!("d of basis function {i} has coefficient {} on face {g}", c[g]));
                break;
            }
            if d_pieces(&dp).iter().any(|p| !p.is_zero()) {
                ce = Some(format!("dd of basis function {i} is not zero"));
                break;
            }
        }
        out.push(CheckReport::new(label, n, k, ce));
    }
    Ok(out)
}

/// `δ` maps each `VQstar0 Λ^{j}` into `VQstar0 Λ^{j−1}` (or the `VQstar`
/// chain without boundary conditions) and `δ∘δ = 0`.
pub fn check_star_chain(mesh: &CubicalMesh, with_bc: bool) -> Result<Vec<CheckReport>> {
    let n = mesh.dim();
    let kind = if with_bc {
        GlobalKind::VQstar0
    } else {
        GlobalKind::VQstar
    };
    let label = if with_bc {
        "star_chain[VQstar0]"
    } else {
        "star_chain[VQstar]"
    };
    let spaces = (0..=n)
        .map(|k| GlobalSpace::build(kind, k, mesh))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for j in 1..=n {
        let (from, to) = (&spaces[j], &spaces[j - 1]);
        let mut ce = None;
        for i in 0..from.dim() {
            let dp = delta_pieces(&from.piecewise(&unit_vector(from.dim(), i)))?;
            if to.express(&dp)?.is_none() {
                ce = Some(format!("δ of basis function {i} leaves the degree-{} space", j - 1));
                break;
            }
            if j >= 2 && delta_pieces(&dp)?.iter().any(|p| !p.is_zero()) {
                ce = Some(format!("δδ of basis function {i} is not zero"));
                break;
            }
        }
        out.push(CheckReport::new(label, n, j - 1, ce));
    }
    Ok(out)
}

/// Tangential traces (of `⋆⁻¹` of the pieces, for star kinds) agree across
/// every interior cell interface and vanish on `∂Ω` for the `·0` kinds.
pub fn check_conformity(space: &GlobalSpace, mesh: &CubicalMesh) -> Result<CheckReport> {
    let n = mesh.dim();
    let primal: Vec<PolyForm> = space
        .local_basis()
        .iter()
        .map(|f| {
            if space.kind().is_star() {
                star_inverse(f)
            } else {
                Ok(f.clone())
            }
        })
        .collect::<Result<_>>()?;
    let half: Vec<Scalar> = mesh.cell_widths().iter().map(|w| w / int(2)).collect();
    let trace = |f: &PolyForm, axis: usize, upper: bool| -> Vec<(crate::MultiIndex, crate::Polynomial)> {
        let v = if upper { half[axis].clone() } else { -half[axis].clone() };
        f.components()
            .filter(|(a, _)| !a.contains(axis))
            .map(|(a, p)| (*a, p.restrict(axis, &v)))
            .filter(|(_, p)| !p.is_zero())
            .collect()
    };
    let piece = |c: usize, g: usize| -> PolyForm {
        let mut out = PolyForm::zero(n, primal[0].degree());
        for (l, m) in space.cell_map(c).iter().enumerate() {
            if *m == Some(g) {
                out = out.add(&primal[l]).expect("same shape");
            }
        }
        out
    };
    let mut ce = None;
    'cells: for c in 0..mesh.num_cells() {
        let pos = mesh.cell_position(c);
        let here: BTreeSet<usize> = space.cell_map(c).iter().flatten().copied().collect();
        for axis in 0..n {
            if pos[axis] + 1 < mesh.divisions()[axis] {
                let mut next_pos = pos.clone();
                next_pos[axis] += 1;
                let c2 = mesh.cell_index(&next_pos);
                let mut funcs = here.clone();
                funcs.extend(space.cell_map(c2).iter().flatten().copied());
                for g in funcs {
                    if trace(&piece(c, g), axis, true) != trace(&piece(c2, g), axis, false) {
                        ce = Some(format!("function {g} jumps between cells {c} and {c2}"));
                        break 'cells;
                    }
                }
            }
            if space.kind().vanishes_on_boundary() {
                for (edge, upper) in [(0, false), (mesh.divisions()[axis] - 1, true)] {
                    if pos[axis] != edge {
                        continue;
                    }
                    for &g in &here {
                        if !trace(&piece(c, g), axis, upper).is_empty() {
                            ce = Some(format!("function {g} has a boundary trace on cell {c}"));
                            break 'cells;
                        }
                    }
                }
            }
        }
    }
    Ok(CheckReport::new(
        format!("conformity[{:?}]", space.kind()),
        n,
        space.k(),
        ce,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::all_pass;

    #[test]
    fn dimensions_match_examples() {
        let sq = CubicalMesh::unit(2, 2).unwrap();
        assert_eq!(GlobalSpace::build(GlobalKind::VQ, 0, &sq).unwrap().dim(), 9);
        assert_eq!(GlobalSpace::build(GlobalKind::VQstar0, 1, &sq).unwrap().dim(), 4);
        assert_eq!(GlobalSpace::build(GlobalKind::VQ0, 2, &sq).unwrap().dim(), 4);
        assert_eq!(GlobalSpace::build(GlobalKind::VQstar0, 2, &sq).unwrap().dim(), 1);
        let cube = CubicalMesh::unit(3, 2).unwrap();
        for k in 0..=3 {
            let v = GlobalSpace::build(GlobalKind::VQ, k, &cube).unwrap();
            let v0 = GlobalSpace::build(GlobalKind::VQ0, k, &cube).unwrap();
            assert_eq!(v.dim(), cube.num_faces(k));
            assert_eq!(v0.dim(), cube.num_interior_faces(k));
        }
    }

    #[test]
    fn complexes_and_conformity() {
        for (n, m) in [(1, 3), (2, 2), (3, 2)] {
            let mesh = CubicalMesh::unit(n, m).unwrap();
            for bc in [false, true] {
                let r = check_conforming_complex(&mesh, bc).unwrap();
                assert!(all_pass(&r), "{r:?}");
                let r = check_star_chain(&mesh, bc).unwrap();
                assert!(all_pass(&r), "{r:?}");
            }
            for kind in [GlobalKind::VQ, GlobalKind::VQ0, GlobalKind::VQstar, GlobalKind::VQstar0] {
                for k in 0..=n {
                    let space = GlobalSpace::build(kind, k, &mesh).unwrap();
                    let r = check_conformity(&space, &mesh).unwrap();
                    assert!(r.pass, "{r:?}");
                }
            }
        }
    }

    #[test]
    fn express_rejects_broken_functions() {
        let mesh = CubicalMesh::unit(2, 2).unwrap();
        let space = GlobalSpace::build(GlobalKind::VQ, 0, &mesh).unwrap();
        let mut pieces = space.piecewise(&unit_vector(space.dim(), 4));
        assert!(space.express(&pieces).unwrap().is_some());
        pieces[0] = pieces[0].scale(&int(2));
        assert!(space.express(&pieces).unwrap().is_none());
    }
}
