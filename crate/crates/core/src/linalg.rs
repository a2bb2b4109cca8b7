//! Small dense linear-algebra helpers: Gram-Schmidt, LLL, Hermite normal form.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Squared norms of the Gram-Schmidt vectors of the columns of `basis`.
pub fn gram_schmidt_sq_norms(basis: &DMatrix<f64>) -> Vec<f64> {
    let n = basis.ncols();
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<f64> = basis.column(j).iter().copied().collect();
        for (k, u) in ortho.iter().enumerate() {
            let uu = out[k];
            if uu == 0.0 {
                continue;
            }
            let mu = dot(&v, u) / uu;
            for (a, b) in v.iter_mut().zip(u) {
                *a -= mu * b;
            }
        }
        out.push(dot(&v, &v));
        ortho.push(v);
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// LLL-reduces the columns of `basis`. Returns the reduced basis `B` and the
/// unimodular integer matrix `U` with `B = basis * U`.
pub fn lll_reduce(basis: &DMatrix<f64>, delta: f64) -> (DMatrix<f64>, DMatrix<i64>) {
    let n = basis.ncols();
    let mut b: Vec<Vec<f64>> = (0..n).map(|j| basis.column(j).iter().copied().collect()).collect();
    let mut u: Vec<Vec<i64>> = (0..n)
        .map(|j| (0..n).map(|i| i64::from(i == j)).collect())
        .collect();

    let gso = |b: &Vec<Vec<f64>>| -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = b.len();
        let mut mu = vec![vec![0.0; n]; n];
        let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut bb = vec![0.0; n];
        for i in 0..n {
            let mut v = b[i].clone();
            for j in 0..i {
                mu[i][j] = if bb[j] > 0.0 { dot(&b[i], &bstar[j]) / bb[j] } else { 0.0 };
                for (a, c) in v.iter_mut().zip(&bstar[j]) {
                    *a -= mu[i][j] * c;
                }
            }
            bb[i] = dot(&v, &v);
            bstar.push(v);
        }
        (mu, bb)
    };

    let (mut mu, mut bb) = gso(&b);
    let mut k = 1;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        if guard > 1_000_000 {
            break;
        }
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q != 0.0 {
                let qi = q as i64;
                let (bj, uj) = (b[j].clone(), u[j].clone());
                for (a, c) in b[k].iter_mut().zip(&bj) {
                    *a -= q * c;
                }
                for (a, c) in u[k].iter_mut().zip(&uj) {
                    *a -= qi * c;
                }
                for l in 0..=j {
                    let m = if l == j { 1.0 } else { mu[j][l] };
                    mu[k][l] -= q * m;
                }
            }
        }
        if bb[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * bb[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            let (m2, b2) = gso(&b);
            mu = m2;
            bb = b2;
            k = (k - 1).max(1);
        }
    }

    let reduced = DMatrix::from_fn(basis.nrows(), n, |i, j| b[j][i]);
    let umat = DMatrix::from_fn(n, n, |i, j| u[j][i]);
    (reduced, umat)
}

/// Column-style Hermite normal form of an integer matrix of full row rank:
/// returns a square lower-triangular `H` with positive diagonal and
/// `0 <= H[i][j] < H[i][i]` for `j < i`, spanning the same column lattice as
/// `p`. Extra generator columns (when `p` is wide) are folded in.
pub fn hermite_lower(p: &DMatrix<i64>) -> Result<DMatrix<i64>> {
    let n = p.nrows();
    let m = p.ncols();
    if m < n {
        return Err(Error::InvalidArgument("HNF needs at least as many columns as rows".into()));
    }
    let mut a: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..m).map(|j| BigInt::from(p[(i, j)])).collect())
        .collect();

    for i in 0..n {
        // Fold columns i+1.. into column i so row i has a single nonzero at (i, i).
        for j in (i + 1)..m {
            if a[i][j].is_zero() {
                continue;
            }
            let x = a[i][i].clone();
            let y = a[i][j].clone();
            let eg = x.extended_gcd(&y);
            let (g, s, t) = (eg.gcd, eg.x, eg.y);
            let xg = &x / &g;
            let yg = &y / &g;
            for row in a.iter_mut().skip(i) {
                let ci = row[i].clone();
                let cj = row[j].clone();
                row[i] = &s * &ci + &t * &cj;
                row[j] = &xg * &cj - &yg * &ci;
            }
        }
        if a[i][i].is_zero() {
            return Err(Error::SingularBasis { det: 0.0 });
        }
        if a[i][i].is_negative() {
            for row in a.iter_mut().skip(i) {
                row[i] = -row[i].clone();
            }
        }
        let d = a[i][i].clone();
        for j in 0..i {
            let q = a[i][j].div_floor(&d);
            if !q.is_zero() {
                for row in a.iter_mut().skip(i) {
                    let v = &row[j] - &q * &row[i];
                    row[j] = v;
                }
            }
        }
    }

    let mut h = DMatrix::<i64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            h[(i, j)] = a[i][j]
                .to_i64()
                .ok_or_else(|| Error::Internal("HNF entry overflows i64".into()))?;
        }
    }
    Ok(h)
}

/// Indexes the cosets of the sublattice spanned by the columns of an integer
/// matrix `P` inside `Zⁿ`. Residues are taken against the lower Hermite form
/// of `P`, so the representatives are the vectors `r` with
/// `0 <= r_i < H[i][i]`, numbered in mixed radix (coordinate 0 fastest).
#[derive(Debug, Clone)]
pub struct CosetIndexer {
    h: DMatrix<i64>,
    radices: Vec<u64>,
    count: u64,
}

impl CosetIndexer {
    pub fn new(p: &DMatrix<i64>) -> Result<Self> {
        let h = hermite_lower(p)?;
        let radices: Vec<u64> = (0..h.nrows()).map(|i| h[(i, i)] as u64).collect();
        let mut count: u64 = 1;
        for &r in &radices {
            count = count
                .checked_mul(r)
                .ok_or_else(|| Error::Internal("coset count overflows u64".into()))?;
        }
        Ok(CosetIndexer { h, radices, count })
    }

    pub fn hermite(&self) -> &DMatrix<i64> {
        &self.h
    }

    /// Number of cosets, `|det P|`.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Reduces `v` in place to its canonical representative and returns the
    /// coset index.
    pub fn reduce(&self, v: &mut [i64]) -> u64 {
        let n = self.radices.len();
        let mut index = 0u64;
        let mut place = 1u64;
        for i in 0..n {
            let d = self.h[(i, i)];
            let q = v[i].div_euclid(d);
            if q != 0 {
                for r in i..n {
                    v[r] -= q * self.h[(r, i)];
                }
            }
            index += v[i] as u64 * place;
            place = place.wrapping_mul(self.radices[i]);
        }
        index
    }

    /// Canonical representative of coset `index`.
    pub fn representative(&self, index: u64) -> Vec<i64> {
        let mut rest = index;
        self.radices
            .iter()
            .map(|&r| {
                let d = (rest % r) as i64;
                rest /= r;
                d
            })
            .collect()
    }
}

/// Absolute determinant of an integer matrix, via its Hermite form.
pub fn int_abs_det(p: &DMatrix<i64>) -> Result<u128> {
    if p.nrows() != p.ncols() {
        return Err(Error::InvalidArgument("determinant of a non-square matrix".into()));
    }
    let h = hermite_lower(p)?;
    let mut det: u128 = 1;
    for i in 0..h.nrows() {
        det = det
            .checked_mul(h[(i, i)] as u128)
            .ok_or_else(|| Error::Internal("determinant overflow".into()))?;
    }
    Ok(det)
}

/// Rank over `Z_p` of the rows of `m` (entries taken mod `p`).
pub fn rank_mod_p(m: &[Vec<u64>], p: u64) -> usize {
    let mut rows: Vec<Vec<u64>> = m.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = mod_inverse(rows[rank][col], p);
        for x in rows[rank].iter_mut() {
            *x = (*x * inv) % p;
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][col] != 0 {
                let f = rows[r][col];
                let pivot = rows[rank].clone();
                for (x, y) in rows[r].iter_mut().zip(&pivot) {
                    *x = (*x + p * p - f * y % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    let eg = (a as i128).extended_gcd(&(p as i128));
    eg.x.rem_euclid(p as i128) as u64
}

/// Rounds every entry of `m` to an integer, failing if any entry is farther
/// than `tol` from the nearest integer.
pub fn round_to_integer(m: &DMatrix<f64>, tol: f64) -> Option<DMatrix<i64>> {
    let mut out = DMatrix::<i64>::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            let r = v.round();
            if !r.is_finite() || (v - r).abs() > tol {
                return None;
            }
            out[(i, j)] = r as i64;
        }
    }
    Some(out)
}

#[cfg(test)]
pub(crate) fn to_f64(m: &DMatrix<i64>) -> DMatrix<f64> {
    m.map(|x| x as f64)
}

/// Greatest common divisor of two integers (non-negative).
pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}
