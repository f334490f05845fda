//! Uniform tensor-product grids of a box and their face lattices.
//!
//! A `d`-face is a pair `(σ, p)`: `σ` lists the `d` axes along which the face
//! extends and `p` is its lattice position, with `pᵢ ∈ 0..mᵢ` for `i ∈ σ`
//! (a cell index) and `pᵢ ∈ 0..=mᵢ` for `i ∉ σ` (a vertex index). Faces are
//! numbered lexicographically by `(σ, p)` with the first axis most
//! significant, and every face carries the ascending orientation `dx^σ`.
//!
//! Cell-local forms live in coordinates centered at the cell center.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::cell::CellBox;
use crate::error::{Error, Result};
use crate::exterior::{check_dim, multi_indices, wedge_sign, MultiIndex};
use crate::form::PolyForm;
use crate::linalg::RationalMatrix;
use crate::local_spaces::{basis, SpaceKind};
use crate::poly::{int, Monomial, Polynomial, Scalar};
use crate::report::CheckReport;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    pub sigma: MultiIndex,
    pub position: Vec<usize>,
}

/// A `k`-face of one cell: extension axes `σ` and, for each axis outside
/// `σ`, whether the face sits on the upper side (`side` bit set).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalFace {
    pub sigma: MultiIndex,
    pub side: u32,
}

impl LocalFace {
    pub fn upper(&self, axis: usize) -> bool {
        self.side & (1 << axis) != 0
    }
}

/// Local `k`-faces ordered by `σ`, then by side with the first free axis
/// most significant and the lower side first.
pub fn local_faces(k: usize, n: usize) -> Vec<LocalFace> {
    let mut out = Vec::new();
    for sigma in multi_indices(k, n) {
        let free: Vec<usize> = sigma.complement().axes().collect();
        for code in 0..(1u32 << free.len()) {
            let mut side = 0;
            for (b, &axis) in free.iter().enumerate() {
                if code & (1 << (free.len() - 1 - b)) != 0 {
                    side |= 1 << axis;
                }
            }
            out.push(LocalFace { sigma, side });
        }
    }
    out
}

/// `∫_F tr ω` over a local face of `cell`, with `F` oriented by `dx^σ`.
pub fn face_integral(omega: &PolyForm, cell: &CellBox, face: &LocalFace) -> Scalar {
    let Some(p) = omega.component(&face.sigma) else {
        return Scalar::zero();
    };
    let mut restricted = p.clone();
    for axis in face.sigma.complement().axes() {
        let v = if face.upper(axis) {
            &cell.upper()[axis]
        } else {
            &cell.lower()[axis]
        };
        restricted = restricted.restrict(axis, v);
    }
    let axes: Vec<usize> = face.sigma.axes().collect();
    restricted
        .integrate_axes(&axes, cell.lower(), cell.upper())
        .coefficient(&Monomial::ONE)
}

/// Nodal `𝒬₁⁻Λᵏ` shape functions on the centered box of the given widths,
/// `ψ_F = Π_{i∉σ} λᵢ^{±} · (Π_{i∈σ} hᵢ)⁻¹ dx^σ` with `λᵢ^{±} = ½ ± x̃ᵢ/hᵢ`;
/// `∫_G tr ψ_F = δ_{FG}`, in `local_faces` order.
pub fn local_shapes(k: usize, widths: &[Scalar]) -> Vec<PolyForm> {
    let n = widths.len();
    let half = Scalar::new(1.into(), 2.into());
    local_faces(k, n)
        .into_iter()
        .map(|f| {
            let mut coef = Polynomial::constant(n, f.sigma.axes().fold(Scalar::one(), |acc, i| acc / &widths[i]));
            for i in f.sigma.complement().axes() {
                let mut lambda = Polynomial::var(n, i).scale(&widths[i].recip());
                if !f.upper(i) {
                    lambda = -&lambda;
                }
                lambda.add_term(Monomial::ONE, half.clone());
                coef = &coef * &lambda;
            }
            PolyForm::term(f.sigma, coef)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct CubicalMesh {
    domain: CellBox,
    divisions: Vec<usize>,
    widths: Vec<Scalar>,
    /// Per face dimension: offset of each `σ` block in the global numbering.
    offsets: Vec<BTreeMap<MultiIndex, usize>>,
    counts: Vec<usize>,
}

impl CubicalMesh {
    pub fn build(domain: &CellBox, divisions: &[usize]) -> Result<Self> {
        let n = domain.dim();
        check_dim(n)?;
        if divisions.len() != n {
            return Err(Error::domain(format!(
                "{} divisions given for dimension {n}",
                divisions.len()
            )));
        }
        if divisions.contains(&0) {
            return Err(Error::domain("every axis needs at least one division"));
        }
        let widths: Vec<Scalar> = domain
            .widths()
            .iter()
            .zip(divisions)
            .map(|(w, &m)| w / int(m as i64))
            .collect();
        let mut offsets = Vec::new();
        let mut counts = Vec::new();
        for d in 0..=n {
            let mut block = BTreeMap::new();
            let mut total = 0;
            for sigma in multi_indices(d, n) {
                block.insert(sigma, total);
                total += (0..n)
                    .map(|i| {
                        if sigma.contains(i) {
                            divisions[i]
                        } else {
                            divisions[i] + 1
                        }
                    })
                    .product::<usize>();
            }
            offsets.push(block);
            counts.push(total);
        }
        Ok(Self {
            domain: domain.clone(),
            divisions: divisions.to_vec(),
            widths,
            offsets,
            counts,
        })
    }

    /// `[0, 1]ⁿ` with `m` divisions per axis.
    pub fn unit(n: usize, m: usize) -> Result<Self> {
        check_dim(n)?;
        Self::build(&CellBox::unit(n), &vec![m; n])
    }

    pub fn dim(&self) -> usize {
        self.divisions.len()
    }

    pub fn domain(&self) -> &CellBox {
        &self.domain
    }

    pub fn divisions(&self) -> &[usize] {
        &self.divisions
    }

    pub fn cell_widths(&self) -> &[Scalar] {
        &self.widths
    }

    /// Largest cell edge length.
    pub fn h(&self) -> Scalar {
        self.widths.iter().max().cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn aspect_ratio(&self) -> Scalar {
        self.reference_cell().aspect_ratio()
    }

    /// The centered box congruent to every cell.
    pub fn reference_cell(&self) -> CellBox {
        CellBox::centered(&self.widths).expect("positive widths")
    }

    pub fn num_cells(&self) -> usize {
        self.divisions.iter().product()
    }

    pub fn cell_position(&self, c: usize) -> Vec<usize> {
        let mut pos = vec![0; self.dim()];
        let mut rest = c;
        for i in (0..self.dim()).rev() {
            pos[i] = rest % self.divisions[i];
            rest /= self.divisions[i];
        }
        pos
    }

    pub fn cell_index(&self, position: &[usize]) -> usize {
        position.iter().zip(&self.divisions).fold(0, |acc, (p, m)| acc * m + p)
    }

    pub fn cell(&self, c: usize) -> CellBox {
        let pos = self.cell_position(c);
        let lower: Vec<Scalar> = (0..self.dim())
            .map(|i| &self.domain.lower()[i] + &self.widths[i] * int(pos[i] as i64))
            .collect();
        let upper: Vec<Scalar> = lower.iter().zip(&self.widths).map(|(a, w)| a + w).collect();
        CellBox::new(lower, upper).expect("valid cell")
    }

    pub fn cells(&self) -> Vec<CellBox> {
        (0..self.num_cells()).map(|c| self.cell(c)).collect()
    }

    pub fn num_faces(&self, d: usize) -> usize {
        self.counts[d]
    }

    fn radix(&self, sigma: &MultiIndex, i: usize) -> usize {
        if sigma.contains(i) {
            self.divisions[i]
        } else {
            self.divisions[i] + 1
        }
    }

    pub fn face_index(&self, face: &Face) -> usize {
        let local = (0..self.dim()).fold(0, |acc, i| acc * self.radix(&face.sigma, i) + face.position[i]);
        self.offsets[face.sigma.len()][&face.sigma] + local
    }

    pub fn face(&self, d: usize, index: usize) -> Face {
        let (sigma, offset) = self.offsets[d]
            .iter()
            .rev()
            .find(|(_, &off)| off <= index)
            .map(|(s, o)| (*s, *o))
            .expect("face index in range");
        let mut rest = index - offset;
        let mut position = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            let r = self.radix(&sigma, i);
            position[i] = rest % r;
            rest /= r;
        }
        Face { sigma, position }
    }

    pub fn is_boundary_face(&self, face: &Face) -> bool {
        face.sigma
            .complement()
            .axes()
            .any(|i| face.position[i] == 0 || face.position[i] == self.divisions[i])
    }

    pub fn num_interior_faces(&self, d: usize) -> usize {
        (0..self.num_faces(d))
            .filter(|&f| !self.is_boundary_face(&self.face(d, f)))
            .count()
    }

    /// Global index of a local face of cell `c`.
    pub fn cell_face(&self, c: usize, local: &LocalFace) -> usize {
        let mut position = self.cell_position(c);
        for i in local.sigma.complement().axes() {
            if local.upper(i) {
                position[i] += 1;
            }
        }
        self.face_index(&Face {
            sigma: local.sigma,
            position,
        })
    }

    /// Oriented boundary of a `d`-face as `(index of (d−1)-face, ±1)`, so that
    /// `∫_F dω = Σ s ∫_G ω`.
    pub fn boundary(&self, d: usize, index: usize) -> Vec<(usize, i8)> {
        let face = self.face(d, index);
        let mut out = Vec::new();
        for j in face.sigma.axes() {
            let rest = face.sigma.without(j);
            let (s, _) = wedge_sign(&MultiIndex::single(j, self.dim()), &rest).expect("j ∉ σ∖j");
            let low = face.position.clone();
            let mut high = face.position.clone();
            high[j] += 1;
            out.push((
                self.face_index(&Face {
                    sigma: rest,
                    position: low,
                }),
                -s,
            ));
            out.push((
                self.face_index(&Face {
                    sigma: rest,
                    position: high,
                }),
                s,
            ));
        }
        out.sort();
        out
    }

    /// Cells containing each `d`-face, as `(cell, local face index)`.
    pub fn face_cells(&self, d: usize) -> Vec<Vec<(usize, usize)>> {
        let locals = local_faces(d, self.dim());
        let mut out = vec![Vec::new(); self.num_faces(d)];
        for c in 0..self.num_cells() {
            for (l, lf) in locals.iter().enumerate() {
                out[self.cell_face(c, lf)].push((c, l));
            }
        }
        out
    }
}

/// Degrees of freedom of the conforming `𝒬₁⁻Λᵏ` space: one per `k`-face.
#[derive(Clone, Debug)]
pub struct DofTable {
    pub k: usize,
    pub num_global: usize,
    /// Global face index of each local face, per cell, in `local_faces`
    /// order. All faces share the ascending orientation, so no signs occur.
    pub cell_dofs: Vec<Vec<usize>>,
    pub boundary: Vec<bool>,
}

impl DofTable {
    pub fn num_interior(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }
}

pub fn face_dofs(k: usize, mesh: &CubicalMesh) -> Result<DofTable> {
    let n = mesh.dim();
    if k > n {
        return Err(Error::domain(format!("degree {k} exceeds dimension {n}")));
    }
    let locals = local_faces(k, n);
    let cell_dofs = (0..mesh.num_cells())
        .map(|c| locals.iter().map(|lf| mesh.cell_face(c, lf)).collect())
        .collect();
    let boundary = (0..mesh.num_faces(k))
        .map(|f| mesh.is_boundary_face(&mesh.face(k, f)))
        .collect();
    Ok(DofTable {
        k,
        num_global: mesh.num_faces(k),
        cell_dofs,
        boundary,
    })
}

/// The face functionals applied to the monomial `𝒬₁⁻Λᵏ` basis form a
/// nonsingular square matrix, and the nodal shapes are dual to them.
pub fn check_unisolvence(k: usize, cell: &CellBox) -> Result<CheckReport> {
    let n = cell.dim();
    let q = basis(SpaceKind::Q1Minus, k, cell)?.elements;
    let faces = local_faces(k, n);
    let rows: Vec<Vec<Scalar>> = faces
        .iter()
        .map(|f| q.iter().map(|w| face_integral(w, cell, f)).collect())
        .collect();
    let mut ce = None;
    if rows.len() != q.len() {
        ce = Some(format!("{} faces for {} basis elements", rows.len(), q.len()));
    } else if RationalMatrix::from_rows(rows, q.len()).determinant()?.is_zero() {
        ce = Some("face functionals are singular on Q1-".into());
    } else {
        let centered = cell.to_centered();
        let shapes = local_shapes(k, &cell.widths());
        'outer: for (a, psi) in shapes.iter().enumerate() {
            for (b, f) in faces.iter().enumerate() {
                let v = face_integral(psi, &centered, f);
                let expected = if a == b { Scalar::one() } else { Scalar::zero() };
                if v != expected {
                    ce = Some(format!("shape {a} has integral {v} on face {b}"));
                    break 'outer;
                }
            }
        }
    }
    Ok(CheckReport::new("unisolvence", n, k, ce))
}

/// `∫_F dω = Σ_{G ⊂ ∂F} ±∫_G ω` for every local shape and every local face
/// of one degree higher.
pub fn check_stokes(k: usize, mesh: &CubicalMesh) -> Result<CheckReport> {
    let n = mesh.dim();
    if k >= n {
        return Err(Error::domain("Stokes check needs k ≤ n − 1"));
    }
    let cell = mesh.reference_cell();
    let shapes = local_shapes(k, mesh.cell_widths());
    let lower = local_faces(k, n);
    let upper = local_faces(k + 1, n);
    let mut ce = None;
    'cells: for c in 0..mesh.num_cells() {
        let to_local: BTreeMap<usize, usize> = lower
            .iter()
            .enumerate()
            .map(|(l, lf)| (mesh.cell_face(c, lf), l))
            .collect();
        for uf in &upper {
            let g = mesh.cell_face(c, uf);
            let bd = mesh.boundary(k + 1, g);
            for (l, psi) in shapes.iter().enumerate() {
                let lhs = face_integral(&psi.exterior_derivative(), &cell, uf);
                let rhs: Scalar = bd
                    .iter()
                    .filter(|(f, _)| to_local.get(f) == Some(&l))
                    .map(|(_, s)| int(*s as i64))
                    .sum();
                if lhs != rhs {
                    ce = Some(format!("cell {c}, face {g}, shape {l}: {lhs} ≠ {rhs}"));
                    break 'cells;
                }
            }
        }
    }
    Ok(CheckReport::new("stokes_incidence", n, k, ce))
}
