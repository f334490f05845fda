//! Exact linear algebra over `ℚ`.
//!
//! Two elimination routes produce the reduced row echelon form, which is
//! unique, so they can be checked against each other:
//!
//! * [`RationalMatrix::rref`] clears denominators row by row and runs
//!   fraction-free (Bareiss) forward elimination on integers, pivoting on
//!   the first nonzero column with rows taken in the given order, then
//!   normalizes back to rationals.
//! * [`SparseRref`] inserts sparse rows one at a time and keeps the pivot
//!   rows fully reduced; it is the route used for global constraint systems.
//!
//! Nullspace bases are read off the RREF: one vector per free column with a
//! one in that column, i.e. the reduced column echelon form of the kernel.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

/// Reduced row echelon form: `rows[i]` has a one in column `pivots[i]` and
/// zeros in every other pivot column.
#[derive(Clone, Debug, PartialEq)]
pub struct Echelon {
    pub cols: usize,
    pub pivots: Vec<usize>,
    pub rows: Vec<Vec<Scalar>>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn nullity(&self) -> usize {
        self.cols - self.rank()
    }

    pub fn free_columns(&self) -> Vec<usize> {
        let mut is_pivot = vec![false; self.cols];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.cols).filter(|&c| !is_pivot[c]).collect()
    }

    /// Kernel basis, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<Scalar>> {
        self.free_columns()
            .into_iter()
            .map(|f| {
                let mut v = vec![Scalar::zero(); self.cols];
                v[f] = Scalar::one();
                for (row, &p) in self.rows.iter().zip(&self.pivots) {
                    if !row[f].is_zero() {
                        v[p] = -row[f].clone();
                    }
                }
                v
            })
            .collect()
    }
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>, cols: usize) -> Self {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            data.extend(row);
        }
        Self { rows: r, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::domain("matrix product shape mismatch"));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(l, j);
                    if !b.is_zero() {
                        let v = out.get(i, j) + a * b;
                        out.set(i, j, v);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Scalar::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Rows with denominators cleared (each row scaled by a positive integer).
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let lcm = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
                row.iter().map(|v| v.numer() * (&lcm / v.denom())).collect()
            })
            .collect()
    }

    /// Fraction-free forward elimination. Returns the integer echelon rows,
    /// the pivot columns and the parity of the row swaps.
    fn bareiss(&self) -> (Vec<Vec<BigInt>>, Vec<usize>, bool) {
        let mut a = self.integer_rows();
        let mut prev = BigInt::one();
        let mut pivots = Vec::new();
        let mut odd_swaps = false;
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !a[i][c].is_zero()) else {
                continue;
            };
            if p != r {
                a.swap(p, r);
                odd_swaps = !odd_swaps;
            }
            let (top, bottom) = a.split_at_mut(r + 1);
            let pivot_row = &top[r];
            let pivot = pivot_row[c].clone();
            for row in bottom.iter_mut() {
                let factor = row[c].clone();
                for j in (c + 1)..self.cols {
                    let v = &pivot * &row[j] - &factor * &pivot_row[j];
                    row[j] = if prev.is_one() { v } else { v / &prev };
                }
                row[c] = BigInt::zero();
            }
            prev = pivot;
            pivots.push(c);
            r += 1;
        }
        a.truncate(r);
        (a, pivots, odd_swaps)
    }

    pub fn rref(&self) -> Echelon {
        let (ints, pivots, _) = self.bareiss();
        let mut rows: Vec<Vec<Scalar>> = ints
            .into_iter()
            .zip(&pivots)
            .map(|(row, &p)| {
                let pv = row[p].clone();
                row.into_iter().map(|v| Scalar::new(v, pv.clone())).collect()
            })
            .collect();
        // Back substitution: clear each pivot column above its pivot.
        for i in (0..rows.len()).rev() {
            let p = pivots[i];
            let (above, rest) = rows.split_at_mut(i);
            let pivot_row = &rest[0];
            for row in above.iter_mut() {
                if row[p].is_zero() {
                    continue;
                }
                let f = row[p].clone();
                for j in p..self.cols {
                    if !pivot_row[j].is_zero() {
                        row[j] -= &f * &pivot_row[j];
                    }
                }
            }
        }
        Echelon {
            cols: self.cols,
            pivots,
            rows,
        }
    }

    pub fn rank(&self) -> usize {
        self.bareiss().1.len()
    }

    pub fn nullspace(&self) -> Vec<Vec<Scalar>> {
        self.rref().nullspace()
    }

    pub fn determinant(&self) -> Result<Scalar> {
        if self.rows != self.cols {
            return Err(Error::domain("determinant of a non-square matrix"));
        }
        if self.rows == 0 {
            return Ok(Scalar::one());
        }
        let scale = (0..self.rows).fold(BigInt::one(), |acc, i| {
            acc * self.row(i).iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()))
        });
        let (ints, pivots, odd) = self.bareiss();
        if pivots.len() < self.rows {
            return Ok(Scalar::zero());
        }
        let last = ints[self.rows - 1][self.cols - 1].clone();
        let det = Scalar::new(last, scale);
        Ok(if odd { -det } else { det })
    }

    /// Solves `A X = B` for square nonsingular `A`.
    pub fn solve(&self, rhs: &RationalMatrix) -> Result<RationalMatrix> {
        if self.rows != self.cols || rhs.rows != self.rows {
            return Err(Error::domain(
                "solve needs a square matrix and matching right-hand side",
            ));
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, n + rhs.cols);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            for j in 0..rhs.cols {
                aug.set(i, n + j, rhs.get(i, j).clone());
            }
        }
        let e = aug.rref();
        if e.pivots.len() < n || e.pivots[n - 1] != n - 1 {
            return Err(Error::Singular(format!("{n}×{n} system is singular")));
        }
        let mut out = Self::zeros(n, rhs.cols);
        for i in 0..n {
            for j in 0..rhs.cols {
                out.set(i, j, e.rows[i][n + j].clone());
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<RationalMatrix> {
        self.solve(&Self::identity(self.rows))
    }

    pub fn solve_vec(&self, rhs: &[Scalar]) -> Result<Vec<Scalar>> {
        let b = Self::from_rows(rhs.iter().map(|v| vec![v.clone()]).collect(), 1);
        let x = self.solve(&b)?;
        Ok((0..self.rows).map(|i| x.get(i, 0).clone()).collect())
    }
}

/// Sparse row vector with sorted, nonzero entries.
pub type SparseRow = Vec<(usize, Scalar)>;

/// Incremental sparse Gauss–Jordan elimination maintaining a fully reduced
/// set of pivot rows.
#[derive(Clone, Debug, Default)]
pub struct SparseRref {
    cols: usize,
    rows: Vec<BTreeMap<usize, Scalar>>,
    pivot_of_col: BTreeMap<usize, usize>,
    pivots: Vec<usize>,
}

impl SparseRref {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            ..Default::default()
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    fn reduce(&self, row: &SparseRow) -> BTreeMap<usize, Scalar> {
        let mut work: BTreeMap<usize, Scalar> = row.iter().filter(|(_, v)| !v.is_zero()).cloned().collect();
        let pivot_cols: Vec<usize> = work
            .keys()
            .filter(|c| self.pivot_of_col.contains_key(c))
            .copied()
            .collect();
        // Pivot rows are fully reduced, so subtracting one never creates an
        // entry in another pivot column.
        for c in pivot_cols {
            let Some(f) = work.get(&c).cloned() else { continue };
            let prow = &self.rows[self.pivot_of_col[&c]];
            for (j, v) in prow {
                let entry = work.entry(*j).or_insert_with(Scalar::zero);
                *entry -= &f * v;
                if entry.is_zero() {
                    work.remove(j);
                }
            }
        }
        work
    }

    /// Adds a row; returns `true` when it increased the rank.
    pub fn insert(&mut self, row: &SparseRow) -> bool {
        debug_assert!(row.iter().all(|(c, _)| *c < self.cols));
        let mut work = self.reduce(row);
        let Some((&lead, lead_val)) = work.iter().next() else {
            return false;
        };
        let inv = lead_val.recip();
        for v in work.values_mut() {
            *v *= &inv;
        }
        for r in self.rows.iter_mut() {
            if let Some(f) = r.get(&lead).cloned() {
                for (j, v) in &work {
                    let entry = r.entry(*j).or_insert_with(Scalar::zero);
                    *entry -= &f * v;
                    if entry.is_zero() {
                        r.remove(j);
                    }
                }
            }
        }
        self.pivot_of_col.insert(lead, self.rows.len());
        self.rows.push(std::mem::take(&mut work));
        self.pivots.push(lead);
        true
    }

    /// `true` when `row` lies in the row span.
    pub fn contains(&self, row: &SparseRow) -> bool {
        self.reduce(row).is_empty()
    }

    pub fn echelon(&self) -> Echelon {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&i| self.pivots[i]);
        Echelon {
            cols: self.cols,
            pivots: order.iter().map(|&i| self.pivots[i]).collect(),
            rows: order
                .iter()
                .map(|&i| {
                    let mut dense = vec![Scalar::zero(); self.cols];
                    for (j, v) in &self.rows[i] {
                        dense[*j] = v.clone();
                    }
                    dense
                })
                .collect(),
        }
    }

    /// Kernel basis of the inserted rows, one sparse vector per free column.
    pub fn nullspace_sparse(&self) -> Vec<SparseRow> {
        let mut by_free: BTreeMap<usize, Vec<(usize, Scalar)>> = BTreeMap::new();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            for (j, v) in row {
                if *j != p {
                    by_free.entry(*j).or_default().push((p, -v.clone()));
                }
            }
        }
        (0..self.cols)
            .filter(|c| !self.pivot_of_col.contains_key(c))
            .map(|f| {
                let mut v = by_free.remove(&f).unwrap_or_default();
                v.push((f, Scalar::one()));
                v.sort_by_key(|(j, _)| *j);
                v
            })
            .collect()
    }
}

/// Exact solution of the square system `A x = b` given by sparse rows:
/// forward elimination to row echelon form, then back substitution. Fill
/// stays inside the profile of banded matrices.
pub fn solve_sparse(rows: &[SparseRow], rhs: &[Scalar]) -> Result<Vec<Scalar>> {
    let n = rows.len();
    if rhs.len() != n {
        return Err(Error::domain("right-hand side length differs from row count"));
    }
    // pivot column -> (row normalized to a unit lead, right-hand side)
    let mut pivots: BTreeMap<usize, (BTreeMap<usize, Scalar>, Scalar)> = BTreeMap::new();
    for (row, b) in rows.iter().zip(rhs) {
        let mut work: BTreeMap<usize, Scalar> = row.iter().filter(|(_, v)| !v.is_zero()).cloned().collect();
        let mut wb = b.clone();
        let mut cursor = 0;
        loop {
            let next = work.range(cursor..).map(|(c, _)| *c).find(|c| pivots.contains_key(c));
            let Some(c) = next else { break };
            let f = work.remove(&c).expect("key present");
            let (prow, pb) = &pivots[&c];
            for (j, v) in prow.range(c + 1..) {
                let entry = work.entry(*j).or_insert_with(Scalar::zero);
                *entry -= &f * v;
                if entry.is_zero() {
                    work.remove(j);
                }
            }
            wb -= &f * pb;
            cursor = c + 1;
        }
        let Some((&lead, lead_val)) = work.iter().next() else {
            return Err(Error::Singular(format!("dependent row in sparse solve of size {n}")));
        };
        let inv = lead_val.recip();
        for v in work.values_mut() {
            *v *= &inv;
        }
        pivots.insert(lead, (work, wb * inv));
    }
    let mut x = vec![Scalar::zero(); n];
    for (&c, (row, b)) in pivots.iter().rev() {
        let mut v = b.clone();
        for (j, a) in row.range(c + 1..) {
            v -= a * &x[*j];
        }
        x[c] = v;
    }
    Ok(x)
}

pub fn sparse_from_dense(row: &[Scalar]) -> SparseRow {
    row.iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(j, v)| (j, v.clone()))
        .collect()
}

pub fn sparse_dot(row: &SparseRow, v: &[Scalar]) -> Scalar {
    row.iter()
        .filter(|(j, a)| !a.is_zero() && !v[*j].is_zero())
        .fold(Scalar::zero(), |acc, (j, a)| acc + a * &v[*j])
}

pub fn is_zero_vec(v: &[Scalar]) -> bool {
    v.iter().all(|x| x.is_zero())
}

/// Largest absolute entry, for reporting residual sizes.
pub fn max_abs(v: &[Scalar]) -> Scalar {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(Scalar::zero)
}
