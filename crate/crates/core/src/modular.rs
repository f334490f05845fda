//! Exact sparse linear solves by multi-modular elimination.
//!
//! The rational system is scaled to integers row by row, solved modulo a
//! sequence of 62-bit primes, combined by the Chinese remainder theorem and
//! lifted back to rationals by reconstruction. A candidate is accepted only
//! after checking `A x = b` exactly, so the result never depends on the
//! primes being lucky.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{solve_sparse, SparseRow};
use crate::poly::Scalar;

const PRIME_CEILING: u64 = 1 << 62;
const UNLUCKY_LIMIT: usize = 3;
const MAX_PRIMES: usize = 20_000;

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for b in BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Primes below `2^62`, descending.
fn primes() -> impl Iterator<Item = u64> {
    (1..PRIME_CEILING / 2)
        .map(|i| PRIME_CEILING - 2 * i + 1)
        .filter(|&n| is_prime(n))
}

fn residue(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("residue below p")
}

/// Forward elimination and back substitution over `ℤ/p`; `None` when the
/// system is singular modulo `p`.
fn solve_mod(rows: &[Vec<(usize, u64)>], rhs: &[u64], p: u64) -> Option<Vec<u64>> {
    let n = rows.len();
    let mut pivots: BTreeMap<usize, (BTreeMap<usize, u64>, u64)> = BTreeMap::new();
    for (row, &b) in rows.iter().zip(rhs) {
        let mut work: BTreeMap<usize, u64> = row.iter().filter(|(_, v)| *v != 0).copied().collect();
        let mut wb = b;
        let mut cursor = 0;
        while let Some(c) = work.range(cursor..).map(|(c, _)| *c).find(|c| pivots.contains_key(c)) {
            let f = work.remove(&c).expect("key present");
            let (prow, pb) = &pivots[&c];
            for (j, v) in prow.range(c + 1..) {
                let entry = work.entry(*j).or_insert(0);
                *entry = (*entry + p - mul_mod(f, *v, p)) % p;
                if *entry == 0 {
                    work.remove(j);
                }
            }
            wb = (wb + p - mul_mod(f, *pb, p)) % p;
            cursor = c + 1;
        }
        let (&lead, &lead_val) = work.iter().next()?;
        let inv = pow_mod(lead_val, p - 2, p);
        for v in work.values_mut() {
            *v = mul_mod(*v, inv, p);
        }
        pivots.insert(lead, (work, mul_mod(wb, inv, p)));
    }
    let mut x = vec![0u64; n];
    for (&c, (row, b)) in pivots.iter().rev() {
        let mut v = *b;
        for (j, a) in row.range(c + 1..) {
            v = (v + p - mul_mod(*a, x[*j], p)) % p;
        }
        x[c] = v;
    }
    Some(x)
}

/// `a/b ≡ r (mod m)` with `|a|, b ≤ √(m/2)`, if such a fraction exists.
pub fn rational_reconstruction(r: &BigInt, m: &BigInt) -> Option<Scalar> {
    let bound = (m / 2u32).sqrt();
    let (mut r0, mut r1) = (m.clone(), r.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound || !r1.gcd(&t1).is_one() {
        return None;
    }
    Some(Scalar::new(r1, t1))
}

/// Symmetric residue of `r` modulo `m`, in `(−m/2, m/2]`.
fn symmetric(r: &BigInt, m: &BigInt) -> BigInt {
    let r = r.mod_floor(m);
    if &r * 2 > *m {
        r - m
    } else {
        r
    }
}

/// Reconstructs every component, reusing the running common denominator so
/// that most components cost one multiplication.
fn reconstruct_all(residues: &[BigInt], m: &BigInt) -> Option<Vec<Scalar>> {
    let bound = (m / 2u32).sqrt();
    let mut denom = BigInt::one();
    let mut out = Vec::with_capacity(residues.len());
    for r in residues {
        let y = symmetric(&(r * &denom), m);
        if y.abs() <= bound {
            out.push(Scalar::new(y, denom.clone()));
            continue;
        }
        let v = rational_reconstruction(r, m)?;
        denom = denom.lcm(v.denom());
        out.push(v);
    }
    Some(out)
}

fn satisfies(rows: &[SparseRow], rhs: &[Scalar], x: &[Scalar]) -> bool {
    rows.iter().zip(rhs).all(|(row, b)| {
        let lhs = row.iter().fold(Scalar::zero(), |acc, (j, v)| acc + v * &x[*j]);
        lhs == *b
    })
}

/// Exact solution of the square system `A x = b` given by sparse rows.
/// Singular systems are reported as [`Error::Singular`].
pub fn solve_multimodular(rows: &[SparseRow], rhs: &[Scalar]) -> Result<Vec<Scalar>> {
    let n = rows.len();
    if rhs.len() != n {
        return Err(Error::domain("right-hand side length differs from row count"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // Integer rows: scale each equation by the lcm of its denominators.
    let mut int_rows = Vec::with_capacity(n);
    let mut int_rhs = Vec::with_capacity(n);
    for (row, b) in rows.iter().zip(rhs) {
        let l = row.iter().fold(b.denom().clone(), |acc, (_, v)| acc.lcm(v.denom()));
        int_rows.push(
            row.iter()
                .map(|(j, v)| (*j, v.numer() * (&l / v.denom())))
                .collect::<Vec<(usize, BigInt)>>(),
        );
        int_rhs.push(b.numer() * (&l / b.denom()));
    }
    let mut modulus = BigInt::one();
    let mut residues = vec![BigInt::zero(); n];
    let mut used = 0usize;
    let mut unlucky = 0usize;
    let mut next_attempt = 1usize;
    for p in primes() {
        if used >= MAX_PRIMES {
            break;
        }
        let rows_p: Vec<Vec<(usize, u64)>> = int_rows
            .iter()
            .map(|r| r.iter().map(|(j, v)| (*j, residue(v, p))).collect())
            .collect();
        let rhs_p: Vec<u64> = int_rhs.iter().map(|v| residue(v, p)).collect();
        let Some(xp) = solve_mod(&rows_p, &rhs_p, p) else {
            unlucky += 1;
            if unlucky >= UNLUCKY_LIMIT {
                break;
            }
            continue;
        };
        // CRT: x ≡ r (mod M), x ≡ s (mod p)  ⇒  x = r + M·((s − r)·M⁻¹ mod p)
        let big_p = BigInt::from(p);
        let m_inv = pow_mod(residue(&modulus, p), p - 2, p);
        for (r, &s) in residues.iter_mut().zip(&xp) {
            let diff = (s + p - residue(r, p)) % p;
            let t = mul_mod(diff, m_inv, p);
            *r += &modulus * BigInt::from(t);
        }
        modulus *= &big_p;
        used += 1;
        if used == next_attempt {
            next_attempt = if used < 16 { used * 2 } else { used + 16 };
            if let Some(x) = reconstruct_all(&residues, &modulus) {
                if satisfies(rows, rhs, &x) {
                    return Ok(x);
                }
            }
        }
    }
    // Repeated singularity modulo large primes, or no certificate: settle
    // the question over ℚ.
    solve_sparse(rows, rhs)
}
