//! Spans of polynomial forms, compared through exact coordinates on the
//! `(dx^σ, monomial)` basis.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::exterior::MultiIndex;
use crate::form::PolyForm;
use crate::linalg::{SparseRow, SparseRref};
use crate::poly::{Monomial, Scalar};

type Key = (MultiIndex, Monomial);

/// Coordinate rows of `forms` over a shared, sorted key set.
fn coordinates<'a>(forms: impl IntoIterator<Item = &'a PolyForm>) -> (Vec<SparseRow>, usize) {
    let forms: Vec<&PolyForm> = forms.into_iter().collect();
    let mut keys: BTreeMap<Key, usize> = BTreeMap::new();
    for f in &forms {
        for (a, p) in f.components() {
            for (m, _) in p.terms() {
                keys.insert((*a, *m), 0);
            }
        }
    }
    for (i, v) in keys.values_mut().enumerate() {
        *v = i;
    }
    let rows = forms
        .iter()
        .map(|f| {
            let mut row: SparseRow = f
                .components()
                .flat_map(|(a, p)| p.terms().map(move |(m, c)| ((*a, *m), c.clone())))
                .map(|(key, c)| (keys[&key], c))
                .collect();
            row.sort_by_key(|(j, _)| *j);
            row
        })
        .collect();
    (rows, keys.len())
}

/// One equation per coordinate, one unknown per input row.
fn transpose(rows: &[SparseRow], cols: usize) -> Vec<SparseRow> {
    let mut out: Vec<SparseRow> = vec![Vec::new(); cols];
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row {
            out[*j].push((i, v.clone()));
        }
    }
    out
}

fn eliminate(rows: &[SparseRow], cols: usize) -> (SparseRref, Vec<usize>) {
    let mut e = SparseRref::new(cols);
    let kept = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| e.insert(r).then_some(i))
        .collect();
    (e, kept)
}

pub fn rank(forms: &[PolyForm]) -> usize {
    let (rows, cols) = coordinates(forms);
    eliminate(&rows, cols).0.rank()
}

/// Indices of a maximal independent subset, chosen greedily in order.
pub fn independent_subset(forms: &[PolyForm]) -> Vec<usize> {
    let (rows, cols) = coordinates(forms);
    eliminate(&rows, cols).1
}

/// Index of the first element of `forms` outside `span(basis)`.
pub fn first_outside(basis: &[PolyForm], forms: &[PolyForm]) -> Option<usize> {
    let (rows, cols) = coordinates(basis.iter().chain(forms));
    let (e, _) = eliminate(&rows[..basis.len()], cols);
    rows[basis.len()..].iter().position(|r| !e.contains(r))
}

pub fn contains(basis: &[PolyForm], forms: &[PolyForm]) -> bool {
    first_outside(basis, forms).is_none()
}

pub fn same_span(a: &[PolyForm], b: &[PolyForm]) -> bool {
    contains(a, b) && contains(b, a)
}

/// Basis of `{Σ cᵢ domainᵢ : Σ cᵢ imagesᵢ = 0}` for a linear map given by the
/// images of a spanning list.
pub fn kernel_of(domain: &[PolyForm], images: &[PolyForm]) -> Vec<PolyForm> {
    assert_eq!(domain.len(), images.len(), "one image per domain element");
    let Some(first) = domain.first() else {
        return Vec::new();
    };
    let (n, k) = (first.dim(), first.degree());
    let (rows, cols) = coordinates(images);
    let equations = transpose(&rows, cols);
    let (e, _) = eliminate(&equations, images.len());
    e.nullspace_sparse()
        .into_iter()
        .map(|v| PolyForm::combination(n, k, v.iter().map(|(i, c)| (c, &domain[*i]))))
        .collect()
}

/// Independent spanning list of `span(forms)`.
pub fn span_basis(forms: &[PolyForm]) -> Vec<PolyForm> {
    independent_subset(forms)
        .into_iter()
        .map(|i| forms[i].clone())
        .collect()
}

/// Coordinates of `f` in an independent list, if `f` lies in its span.
pub fn express(basis: &[PolyForm], f: &PolyForm) -> Option<Vec<Scalar>> {
    let images: Vec<PolyForm> = basis.iter().cloned().chain([f.clone()]).collect();
    let (rows, cols) = coordinates(&images);
    let equations = transpose(&rows, cols);
    let (e, _) = eliminate(&equations, images.len());
    let last = basis.len();
    e.nullspace_sparse().into_iter().find_map(|v| {
        let lead = v.iter().find(|(i, _)| *i == last)?.1.clone();
        let mut out = vec![Scalar::zero(); basis.len()];
        for (i, c) in &v {
            if *i < last {
                out[*i] = -(c / &lead);
            }
        }
        Some(out)
    })
}
