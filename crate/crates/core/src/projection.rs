//! The adjoint projection onto Whitney forms on one cell, and its cellwise
//! extension to a mesh.
//!
//! For `k < n`, `𝕀ω ∈ 𝒫₁⁻Λᵏ(K)` is fixed by
//! `⟨d𝕀ω, μ⟩ − ⟨𝕀ω, δμ⟩ = ⟨dω, μ⟩ − ⟨ω, δμ⟩` for all `μ ∈ 𝒫₁^{*,-}Λ^{k+1}(K)`;
//! the two spaces have the same dimension `C(n+1, k+1)`. For `k = n` it is the
//! `L²` projection onto constants.

use std::collections::HashMap;

use num_traits::Zero;
use rayon::prelude::*;

use crate::cell::CellBox;
use crate::error::{Error, Result};
use crate::form::PolyForm;
use crate::linalg::RationalMatrix;
use crate::local_spaces::{basis, SpaceKind};
use crate::poly::{to_f64, Scalar};
use crate::report::CheckReport;

/// `⟨dω, μ⟩_K − ⟨ω, δμ⟩_K` for a `k`-form `ω` and a `(k+1)`-form `μ`.
pub fn adjoint_pairing(omega: &PolyForm, mu: &PolyForm, cell: &CellBox) -> Result<Scalar> {
    let d = omega.exterior_derivative().inner_product(mu, cell)?;
    let b = omega.inner_product(&mu.codifferential()?, cell)?;
    Ok(d - b)
}

/// `⟨ω, ω⟩ + ⟨dω, dω⟩` on `K`.
pub fn hd_norm_squared(omega: &PolyForm, cell: &CellBox) -> Result<Scalar> {
    let d = omega.exterior_derivative();
    Ok(omega.inner_product(omega, cell)? + d.inner_product(&d, cell)?)
}

#[derive(Clone, Debug)]
pub struct LocalProjector {
    k: usize,
    cell: CellBox,
    trial: Vec<PolyForm>,
    tests: Vec<PolyForm>,
    test_codiffs: Vec<PolyForm>,
    matrix: RationalMatrix,
    inverse: RationalMatrix,
    inverse_f64: Vec<f64>,
}

impl LocalProjector {
    pub fn new(k: usize, cell: &CellBox) -> Result<Self> {
        let n = cell.dim();
        if k > n {
            return Err(Error::domain(format!("degree {k} exceeds dimension {n}")));
        }
        let trial = basis(SpaceKind::P1Minus, k, cell)?.elements;
        let (tests, test_codiffs) = if k < n {
            let tests = basis(SpaceKind::P1MinusStar, k + 1, cell)?.elements;
            let codiffs = tests.iter().map(|mu| mu.codifferential()).collect::<Result<Vec<_>>>()?;
            (tests, codiffs)
        } else {
            (basis(SpaceKind::P0, n, cell)?.elements, Vec::new())
        };
        let mut out = Self {
            k,
            cell: cell.clone(),
            trial,
            tests,
            test_codiffs,
            matrix: RationalMatrix::zeros(0, 0),
            inverse: RationalMatrix::zeros(0, 0),
            inverse_f64: Vec::new(),
        };
        let rows = out.trial.iter().map(|phi| out.rhs(phi)).collect::<Result<Vec<_>>>()?;
        // rhs(φ_j) is column j of the system matrix.
        let dim = out.trial.len();
        if out.tests.len() != dim {
            return Err(Error::Singular(format!(
                "trial dimension {dim} differs from test dimension {}",
                out.tests.len()
            )));
        }
        let matrix = RationalMatrix::from_rows(rows, dim).transpose();
        let inverse = matrix
            .inverse()
            .map_err(|_| Error::Singular(format!("adjoint projection system for k = {k}, n = {n} is singular")))?;
        out.inverse_f64 = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| to_f64(inverse.get(i, j)))
            .collect();
        out.matrix = matrix;
        out.inverse = inverse;
        Ok(out)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cell(&self) -> &CellBox {
        &self.cell
    }

    pub fn dim(&self) -> usize {
        self.trial.len()
    }

    pub fn trial_basis(&self) -> &[PolyForm] {
        &self.trial
    }

    pub fn test_basis(&self) -> &[PolyForm] {
        &self.tests
    }

    /// `δμ` for each test function (empty when `k = n`).
    pub fn test_codifferentials(&self) -> &[PolyForm] {
        &self.test_codiffs
    }

    pub fn matrix(&self) -> &RationalMatrix {
        &self.matrix
    }

    pub fn determinant(&self) -> Scalar {
        self.matrix.determinant().expect("square by construction")
    }

    /// Right-hand side functionals of `ω`, one per test function.
    pub fn rhs(&self, omega: &PolyForm) -> Result<Vec<Scalar>> {
        if omega.degree() != self.k || omega.dim() != self.cell.dim() {
            return Err(Error::domain("input form has the wrong shape for this projector"));
        }
        if self.test_codiffs.is_empty() {
            return self
                .tests
                .iter()
                .map(|mu| omega.inner_product(mu, &self.cell))
                .collect();
        }
        let d = omega.exterior_derivative();
        self.tests
            .iter()
            .zip(&self.test_codiffs)
            .map(|(mu, dmu)| Ok(d.inner_product(mu, &self.cell)? - omega.inner_product(dmu, &self.cell)?))
            .collect()
    }

    pub fn coefficients_from_rhs(&self, rhs: &[Scalar]) -> Vec<Scalar> {
        self.inverse.mul_vec(rhs)
    }

    pub fn coefficients_from_rhs_f64(&self, rhs: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|i| (0..dim).map(|j| self.inverse_f64[i * dim + j] * rhs[j]).sum())
            .collect()
    }

    /// Coefficients of `𝕀ω` in the trial basis.
    pub fn coefficients(&self, omega: &PolyForm) -> Result<Vec<Scalar>> {
        Ok(self.coefficients_from_rhs(&self.rhs(omega)?))
    }

    pub fn combine(&self, coefficients: &[Scalar]) -> PolyForm {
        PolyForm::combination(self.cell.dim(), self.k, coefficients.iter().zip(&self.trial))
    }

    pub fn project(&self, omega: &PolyForm) -> Result<PolyForm> {
        Ok(self.combine(&self.coefficients(omega)?))
    }
}

pub fn project_cell(omega: &PolyForm, k: usize, cell: &CellBox) -> Result<PolyForm> {
    LocalProjector::new(k, cell)?.project(omega)
}

/// Cellwise projection of a piecewise polynomial form. Projectors are built
/// once per distinct cell shape, in centered coordinates.
pub fn project_mesh(k: usize, cells: &[CellBox], pieces: &[PolyForm]) -> Result<Vec<PolyForm>> {
    if cells.len() != pieces.len() {
        return Err(Error::domain("one piece per cell is required"));
    }
    let mut projectors: HashMap<Vec<Scalar>, LocalProjector> = HashMap::new();
    for cell in cells {
        let w = cell.widths();
        if let std::collections::hash_map::Entry::Vacant(e) = projectors.entry(w) {
            e.insert(LocalProjector::new(k, &cell.to_centered())?);
        }
    }
    cells
        .par_iter()
        .zip(pieces.par_iter())
        .map(|(cell, piece)| {
            let center = cell.center();
            let local = piece.translate(&center);
            let back: Vec<Scalar> = center.iter().map(|c| -c).collect();
            Ok(projectors[&cell.widths()].project(&local)?.translate(&back))
        })
        .collect()
}

/// `𝕀^{k+1} dω = d 𝕀^k ω` on one cell.
pub fn check_commuting(omega: &PolyForm, cell: &CellBox) -> Result<CheckReport> {
    let (n, k) = (cell.dim(), omega.degree());
    if k >= n {
        return Err(Error::domain("commuting check needs k ≤ n − 1"));
    }
    let left = project_cell(&omega.exterior_derivative(), k + 1, cell)?;
    let right = project_cell(omega, k, cell)?.exterior_derivative();
    let ce = (left != right).then(|| format!("ω = {omega}: 𝕀dω = {left}, d𝕀ω = {right}"));
    Ok(CheckReport::new("commuting_projection", n, k, ce))
}

/// `‖ω − 𝕀ω‖_{HΛ} / inf_{η ∈ 𝒫₁⁻Λᵏ} ‖ω − η‖_{HΛ}`; `1` when both vanish.
pub fn quasi_optimality_ratio(omega: &PolyForm, cell: &CellBox) -> Result<f64> {
    let k = omega.degree();
    let p = LocalProjector::new(k, cell)?;
    let err = omega.sub(&p.project(omega)?)?;
    let trial = p.trial_basis();
    let dim = trial.len();
    let d_trial: Vec<PolyForm> = trial.iter().map(|f| f.exterior_derivative()).collect();
    let d_omega = omega.exterior_derivative();
    let mut gram = RationalMatrix::zeros(dim, dim);
    let mut b = vec![Scalar::zero(); dim];
    for i in 0..dim {
        for j in 0..dim {
            let v = trial[i].inner_product(&trial[j], cell)? + d_trial[i].inner_product(&d_trial[j], cell)?;
            gram.set(i, j, v);
        }
        b[i] = trial[i].inner_product(omega, cell)? + d_trial[i].inner_product(&d_omega, cell)?;
    }
    let best = PolyForm::combination(cell.dim(), k, gram.solve_vec(&b)?.iter().zip(trial));
    let best_err = hd_norm_squared(&omega.sub(&best)?, cell)?;
    let proj_err = hd_norm_squared(&err, cell)?;
    if best_err.is_zero() {
        return Ok(if proj_err.is_zero() { 1.0 } else { f64::INFINITY });
    }
    Ok((to_f64(&proj_err) / to_f64(&best_err)).sqrt())
}

/// Nonsingular local systems, identity on `𝒫₁⁻Λᵏ`, idempotence on
/// `𝒬₁⁻Λᵏ` inputs, and `𝕀d = d𝕀` on every `𝒬₁⁻Λᵏ` basis element, for all `k`.
pub fn projection_suite(cell: &CellBox) -> Result<Vec<CheckReport>> {
    let n = cell.dim();
    let mut out = Vec::new();
    for k in 0..=n {
        let p = match LocalProjector::new(k, cell) {
            Ok(p) => p,
            Err(e) => {
                out.push(CheckReport::new("projection_well_posed", n, k, Some(e.to_string())));
                continue;
            }
        };
        let det = p.determinant();
        out.push(
            CheckReport::new(
                "projection_well_posed",
                n,
                k,
                det.is_zero().then(|| "zero determinant".into()),
            )
            .with_detail(format!("det = {}", crate::text::scalar_text(&det))),
        );
        let mut ce = None;
        for phi in p.trial_basis() {
            let got = p.project(phi)?;
            if &got != phi {
                ce = Some(format!("𝕀({phi}) = {got}"));
                break;
            }
        }
        out.push(CheckReport::new("projection_identity_on_whitney", n, k, ce));
        let inputs = basis(SpaceKind::Q1Minus, k, cell)?.elements;
        let mut ce = None;
        for omega in &inputs {
            let once = p.project(omega)?;
            let twice = p.project(&once)?;
            if once != twice {
                ce = Some(format!("ω = {omega}: 𝕀ω = {once}, 𝕀𝕀ω = {twice}"));
                break;
            }
        }
        out.push(CheckReport::new("projection_idempotent", n, k, ce));
        if k < n {
            let next = LocalProjector::new(k + 1, cell)?;
            let mut ce = None;
            for omega in &inputs {
                let left = next.project(&omega.exterior_derivative())?;
                let right = p.project(omega)?.exterior_derivative();
                if left != right {
                    ce = Some(format!("ω = {omega}: 𝕀dω = {left}, d𝕀ω = {right}"));
                    break;
                }
            }
            out.push(CheckReport::new("commuting_projection", n, k, ce));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::MultiIndex;
    use crate::poly::{int, rat, Monomial, Polynomial};

    fn mi(e: &[usize], n: usize) -> MultiIndex {
        MultiIndex::new(e, n).unwrap()
    }

    #[test]
    fn bilinear_projects_to_zero_by_brute_force() {
        // Independent oracle: assemble the 3×3 system by hand on [−1,1]²
        // with trial {1, x1, x2} and tests {dx1, dx2, x1 dx1 + x2 dx2}.
        let cell = CellBox::reference(2);
        let x1x2 = PolyForm::term(
            MultiIndex::empty(2),
            Polynomial::monomial(2, Monomial::from_exponents(&[1, 1]), int(1)),
        );
        let one = PolyForm::constant(MultiIndex::empty(2), int(1));
        let x1 = PolyForm::term(MultiIndex::empty(2), Polynomial::var(2, 0));
        let x2 = PolyForm::term(MultiIndex::empty(2), Polynomial::var(2, 1));
        let e1 = PolyForm::constant(mi(&[1], 2), int(1));
        let e2 = PolyForm::constant(mi(&[2], 2), int(1));
        let radial = PolyForm::term(mi(&[1], 2), Polynomial::var(2, 0))
            .add(&PolyForm::term(mi(&[2], 2), Polynomial::var(2, 1)))
            .unwrap();
        let trial = [one, x1, x2];
        let tests = [e1, e2, radial];
        let rows: Vec<Vec<Scalar>> = tests
            .iter()
            .map(|mu| {
                trial
                    .iter()
                    .map(|phi| adjoint_pairing(phi, mu, &cell).unwrap())
                    .collect()
            })
            .collect();
        let a = RationalMatrix::from_rows(rows, 3);
        assert!(!a.determinant().unwrap().is_zero());
        let rhs: Vec<Scalar> = tests
            .iter()
            .map(|mu| adjoint_pairing(&x1x2, mu, &cell).unwrap())
            .collect();
        let c = a.solve_vec(&rhs).unwrap();
        assert!(c.iter().all(|v| v.is_zero()));
        assert!(project_cell(&x1x2, 0, &cell).unwrap().is_zero());
    }

    #[test]
    fn mixed_one_form_matches_local_solve() {
        let cell = CellBox::reference(2);
        let omega = PolyForm::term(mi(&[1], 2), &Polynomial::one(2) + &Polynomial::var(2, 1));
        let p = LocalProjector::new(1, &cell).unwrap();
        let got = p.project(&omega).unwrap();
        // Oracle: generic 3×3 solve over the explicit Whitney basis
        // {dx1, dx2, x1 dx2 − x2 dx1} against {1·dx12, x1·dx12, x2·dx12}.
        let trial = [
            PolyForm::constant(mi(&[1], 2), int(1)),
            PolyForm::constant(mi(&[2], 2), int(1)),
            PolyForm::term(mi(&[2], 2), Polynomial::var(2, 0))
                .sub(&PolyForm::term(mi(&[1], 2), Polynomial::var(2, 1)))
                .unwrap(),
        ];
        let vol = mi(&[1, 2], 2);
        let tests = [
            PolyForm::constant(vol, int(1)),
            PolyForm::term(vol, Polynomial::var(2, 0)),
            PolyForm::term(vol, Polynomial::var(2, 1)),
        ];
        let rows: Vec<Vec<Scalar>> = tests
            .iter()
            .map(|mu| {
                trial
                    .iter()
                    .map(|phi| adjoint_pairing(phi, mu, &cell).unwrap())
                    .collect()
            })
            .collect();
        let rhs: Vec<Scalar> = tests
            .iter()
            .map(|mu| adjoint_pairing(&omega, mu, &cell).unwrap())
            .collect();
        let c = RationalMatrix::from_rows(rows, 3).solve_vec(&rhs).unwrap();
        let expected = PolyForm::combination(2, 1, c.iter().zip(&trial));
        assert_eq!(got, expected);
        // dx¹ is kept; the x2 dx1 part becomes −½(x1 dx2 − x2 dx1).
        let half_rot = trial[2].scale(&rat(-1, 2));
        assert_eq!(got, trial[0].add(&half_rot).unwrap());
    }

    #[test]
    fn top_degree_is_mean_value() {
        let cell = CellBox::new(vec![int(0), int(0)], vec![int(1), int(3)]).unwrap();
        let vol = mi(&[1, 2], 2);
        let omega = PolyForm::term(vol, &Polynomial::var(2, 0) + &Polynomial::var(2, 1));
        let got = project_cell(&omega, 2, &cell).unwrap();
        assert_eq!(got, PolyForm::constant(vol, int(2)));
        let centered = PolyForm::term(vol, Polynomial::shifted_var(2, 0, &rat(1, 2)));
        assert!(project_cell(&centered, 2, &cell).unwrap().is_zero());
    }

    #[test]
    fn mesh_projection_matches_single_cells() {
        let cells: Vec<CellBox> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| CellBox::new(vec![rat(i, 2), rat(j, 2)], vec![rat(i + 1, 2), rat(j + 1, 2)]).unwrap())
            .collect();
        let bilinear = PolyForm::term(
            MultiIndex::empty(2),
            Polynomial::monomial(2, Monomial::from_exponents(&[1, 1]), int(1)),
        );
        let pieces = vec![bilinear.clone(); 4];
        let got = project_mesh(0, &cells, &pieces).unwrap();
        for (cell, g) in cells.iter().zip(&got) {
            assert_eq!(g, &project_cell(&bilinear, 0, cell).unwrap());
        }
    }

    #[test]
    fn quasi_optimality_is_one_on_the_target_space() {
        let cell = CellBox::reference(2);
        let omega = PolyForm::term(MultiIndex::empty(2), Polynomial::var(2, 0));
        assert_eq!(quasi_optimality_ratio(&omega, &cell).unwrap(), 1.0);
    }
}
