//! Closest-point search: specialized decoders for the classical root lattices
//! and a Schnorr-Euchner sphere decoder for everything else.
//!
//! All decoders share one tie rule: among lattice points whose squared
//! distances to the target lie within [`TIE_EPS`] of the minimum, the
//! lexicographically smallest point (Cartesian coordinates, compared with the
//! same tolerance) wins. The rule is translation compatible, which is what
//! makes coset leaders well defined for non-clean nestings.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::linalg::{lll_reduce, norm_sq};

/// Tolerance on squared distances below which two candidates are tied.
pub const TIE_EPS: f64 = 1e-9;

/// Lexicographic comparison with a per-coordinate tolerance.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > TIE_EPS {
            return x.partial_cmp(y).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Specialized closest-point algorithms, each operating on the lattice in its
/// standard coordinates (see the `named` constructors).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastKind {
    Zn,
    Dn,
    DnDual,
    A2,
    E8,
}

/// Nearest point of `h·Z` to `v`, ties going to the smaller value. The flag
/// reports whether a tie occurred.
#[inline]
fn round_1d(v: f64, h: f64) -> (f64, bool) {
    let lo = (v / h).floor() * h;
    let hi = lo + h;
    let dlo = (v - lo) * (v - lo);
    let dhi = (hi - v) * (hi - v);
    if (dlo - dhi).abs() <= TIE_EPS {
        (lo, true)
    } else if dlo < dhi {
        (lo, false)
    } else {
        (hi, false)
    }
}

fn decode_zn(x: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = round_1d(v, 1.0).0;
    }
}

fn decode_dn(x: &[f64], out: &mut [f64]) {
    let n = x.len();
    let mut parity = 0i64;
    let mut last_tied: Option<usize> = None;
    for i in 0..n {
        let (r, tied) = round_1d(x[i], 1.0);
        out[i] = r;
        parity += r as i64;
        if tied {
            last_tied = Some(i);
        }
    }
    if parity.rem_euclid(2) == 0 {
        return;
    }
    if let Some(j) = last_tied {
        // Flipping a tied coordinate costs nothing; raising the last one is
        // the lexicographically smallest choice.
        out[j] += 1.0;
        return;
    }
    // Flip the coordinate with the largest rounding error.
    let mut worst = 0.0f64;
    for i in 0..n {
        worst = worst.max((x[i] - out[i]).abs());
    }
    let mut first_down: Option<usize> = None;
    let mut last_up: Option<usize> = None;
    for i in 0..n {
        let e = x[i] - out[i];
        // Flip cost is 1 - 2|e|; ties are within TIE_EPS on that cost.
        if 2.0 * (worst - e.abs()) > TIE_EPS {
            continue;
        }
        if e < TIE_EPS {
            if first_down.is_none() {
                first_down = Some(i);
            }
        }
        if e > -TIE_EPS {
            last_up = Some(i);
        }
    }
    if let Some(j) = first_down {
        out[j] -= 1.0;
    } else if let Some(j) = last_up {
        out[j] += 1.0;
    }
}

/// Best of two cosets `base` and `base + shift·1`.
fn decode_union(x: &[f64], out: &mut [f64], shift: f64, inner: fn(&[f64], &mut [f64])) {
    let n = x.len();
    let mut a = vec![0.0; n];
    inner(x, &mut a);
    let xs: Vec<f64> = x.iter().map(|v| v - shift).collect();
    let mut b = vec![0.0; n];
    inner(&xs, &mut b);
    for v in b.iter_mut() {
        *v += shift;
    }
    let da = sq_dist(x, &a);
    let db = sq_dist(x, &b);
    let pick_a = if (da - db).abs() <= TIE_EPS {
        lex_cmp(&a, &b) != Ordering::Greater
    } else {
        da < db
    };
    out.copy_from_slice(if pick_a { &a } else { &b });
}

fn decode_a2(x: &[f64], out: &mut [f64]) {
    let h = 3f64.sqrt();
    let a = [round_1d(x[0], 1.0).0, round_1d(x[1], h).0];
    let b = [
        round_1d(x[0] - 0.5, 1.0).0 + 0.5,
        round_1d(x[1] - 0.5 * h, h).0 + 0.5 * h,
    ];
    let da = sq_dist(x, &a);
    let db = sq_dist(x, &b);
    let pick_a = if (da - db).abs() <= TIE_EPS {
        lex_cmp(&a, &b) != Ordering::Greater
    } else {
        da < db
    };
    out.copy_from_slice(if pick_a { &a } else { &b });
}

impl FastKind {
    /// Nearest point in standard coordinates.
    pub fn decode(self, x: &[f64], out: &mut [f64]) {
        match self {
            FastKind::Zn => decode_zn(x, out),
            FastKind::Dn => decode_dn(x, out),
            FastKind::DnDual => decode_union(x, out, 0.5, decode_zn),
            FastKind::A2 => decode_a2(x, out),
            FastKind::E8 => decode_union(x, out, 0.5, decode_dn),
        }
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Precomputed data for Schnorr-Euchner enumeration on an LLL-reduced basis.
#[derive(Debug, Clone)]
pub struct SphereDecoder {
    n: usize,
    /// Reduced basis, columns.
    reduced: DMatrix<f64>,
    /// `reduced = basis * unimodular`.
    unimodular: DMatrix<i64>,
    /// Orthogonal factor, stored transposed (row-major access to Q^T).
    qt: Vec<f64>,
    /// Upper-triangular factor, row-major.
    r: Vec<f64>,
}

impl SphereDecoder {
    pub fn new(basis: &DMatrix<f64>) -> Self {
        let n = basis.ncols();
        let (reduced, unimodular) = lll_reduce(basis, 0.99);
        let qr = reduced.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        // Make the diagonal of R positive.
        let mut qt = vec![0.0; n * n];
        let mut rr = vec![0.0; n * n];
        for i in 0..n {
            let s = if r[(i, i)] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                rr[i * n + j] = s * r[(i, j)];
                qt[i * n + j] = s * q[(j, i)];
            }
        }
        SphereDecoder { n, reduced, unimodular, qt, r: rr }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn reduced_basis(&self) -> &DMatrix<f64> {
        &self.reduced
    }

    /// Integer coordinates in the original basis of the point with reduced
    /// coordinates `z`.
    pub fn original_coords(&self, z: &[i64]) -> Vec<i64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.unimodular[(i, j)] * z[j]).sum())
            .collect()
    }

    /// Cartesian coordinates of the point with reduced coordinates `z`.
    pub fn point(&self, z: &[i64], out: &mut [f64]) {
        let n = self.n;
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..n {
                if z[j] != 0 {
                    s += self.reduced[(i, j)] * z[j] as f64;
                }
            }
            *o = s;
        }
    }

    /// Visits every lattice point `p` with `‖p - x‖² <= radius_sq`, passing
    /// its reduced coordinates and squared distance. The callback returns the
    /// radius to use from then on, so it can shrink the search.
    pub fn search<F>(&self, x: &[f64], radius_sq: f64, mut visit: F)
    where
        F: FnMut(&[i64], f64) -> f64,
    {
        let n = self.n;
        let r = &self.r;
        let mut y = vec![0.0; n];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..n).map(|j| self.qt[i * n + j] * x[j]).sum();
        }
        let mut radius = radius_sq;
        let mut z = vec![0i64; n];
        let mut center = vec![0.0; n];
        let mut pd = vec![0.0; n + 1];
        let mut z0 = vec![0i64; n];
        let mut dir = vec![1i64; n];
        let mut step = vec![0i64; n];

        let set_level = |k: usize,
                         z: &mut [i64],
                         center: &mut [f64],
                         z0: &mut [i64],
                         dir: &mut [i64],
                         step: &mut [i64]| {
            let mut s = y[k];
            for j in (k + 1)..n {
                s -= r[k * n + j] * z[j] as f64;
            }
            let c = s / r[k * n + k];
            center[k] = c;
            let zr = c.round();
            z0[k] = zr as i64;
            z[k] = z0[k];
            dir[k] = if c >= zr { 1 } else { -1 };
            step[k] = 0;
        };

        let mut k = n - 1;
        set_level(k, &mut z, &mut center, &mut z0, &mut dir, &mut step);
        loop {
            let diff = z[k] as f64 - center[k];
            let rk = r[k * n + k] * diff;
            let d = pd[k + 1] + rk * rk;
            if d <= radius {
                if k == 0 {
                    radius = visit(&z, d);
                    // next sibling at level 0
                    step[0] += 1;
                    z[0] = z0[0] + zigzag(step[0], dir[0]);
                    continue;
                }
                pd[k] = d;
                k -= 1;
                set_level(k, &mut z, &mut center, &mut z0, &mut dir, &mut step);
                continue;
            }
            // Candidates at this level only get farther; climb.
            k += 1;
            if k >= n {
                break;
            }
            step[k] += 1;
            z[k] = z0[k] + zigzag(step[k], dir[k]);
        }
    }

    /// Closest point under the global tie rule. Returns reduced coordinates,
    /// Cartesian coordinates, squared distance and the number of tied
    /// candidates.
    pub fn closest(&self, x: &[f64]) -> (Vec<i64>, Vec<f64>, f64, usize) {
        let n = self.n;
        let mut best = f64::INFINITY;
        let mut cands: Vec<(Vec<i64>, f64)> = Vec::new();
        self.search(x, f64::INFINITY, |z, d| {
            if d < best - TIE_EPS {
                best = d;
                cands.retain(|(_, dd)| *dd <= best + TIE_EPS);
                cands.push((z.to_vec(), d));
            } else if d <= best + TIE_EPS {
                if d < best {
                    best = d;
                }
                cands.push((z.to_vec(), d));
            }
            best + TIE_EPS
        });
        cands.retain(|(_, dd)| *dd <= best + TIE_EPS);
        let mut pt = vec![0.0; n];
        let mut best_pt: Option<(Vec<i64>, Vec<f64>)> = None;
        for (z, _) in &cands {
            self.point(z, &mut pt);
            let better = match &best_pt {
                None => true,
                Some((_, bp)) => lex_cmp(&pt, bp) == Ordering::Less,
            };
            if better {
                best_pt = Some((z.clone(), pt.clone()));
            }
        }
        let (z, p) = best_pt.expect("sphere search always finds a point");
        let d = norm_sq(&p.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
        (z, p, d, cands.len())
    }

    /// All points within `TIE_EPS` of the minimum distance.
    pub fn nearest_set(&self, x: &[f64]) -> Vec<Vec<i64>> {
        let mut best = f64::INFINITY;
        let mut cands: Vec<(Vec<i64>, f64)> = Vec::new();
        self.search(x, f64::INFINITY, |z, d| {
            if d < best {
                best = d;
            }
            if d <= best + TIE_EPS {
                cands.push((z.to_vec(), d));
            }
            best + TIE_EPS
        });
        cands
            .into_iter()
            .filter(|(_, d)| *d <= best + TIE_EPS)
            .map(|(z, _)| z)
            .collect()
    }
}

#[inline]
fn zigzag(step: i64, dir: i64) -> i64 {
    // 0, +1, -1, +2, -2, ... in the direction of `dir` first.
    if step % 2 == 1 {
        dir * (step + 1) / 2
    } else {
        -dir * step / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_order() {
        let s: Vec<i64> = (0..5).map(|t| zigzag(t, 1)).collect();
        assert_eq!(s, vec![0, 1, -1, 2, -2]);
        let s: Vec<i64> = (0..5).map(|t| zigzag(t, -1)).collect();
        assert_eq!(s, vec![0, -1, 1, -2, 2]);
    }

    #[test]
    fn round_ties_go_down() {
        assert_eq!(round_1d(0.5, 1.0), (0.0, true));
        assert_eq!(round_1d(-0.5, 1.0), (-1.0, true));
        assert_eq!(round_1d(0.6, 1.0), (1.0, false));
    }

    #[test]
    fn dn_flip_matches_tie_rule() {
        let mut out = [0.0; 3];
        decode_dn(&[0.6, 0.6, 0.6], &mut out);
        assert_eq!(out, [0.0, 1.0, 1.0]);
        decode_dn(&[0.4, 0.4, 0.4], &mut out);
        assert_eq!(out, [0.0, 0.0, 0.0]);
        decode_dn(&[1.0, 0.0, 0.0], &mut out);
        assert_eq!(out, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn sphere_on_identity() {
        let sd = SphereDecoder::new(&DMatrix::identity(3, 3));
        let (_, p, d, ties) = sd.closest(&[0.2, -0.4, 1.7]);
        assert_eq!(p, vec![0.0, 0.0, 2.0]);
        assert!((d - (0.04 + 0.16 + 0.09)).abs() < 1e-12);
        assert_eq!(ties, 1);
        let (_, p, _, ties) = sd.closest(&[0.5, 0.0, 0.0]);
        assert_eq!(p, vec![0.0, 0.0, 0.0]);
        assert_eq!(ties, 2);
    }
}
