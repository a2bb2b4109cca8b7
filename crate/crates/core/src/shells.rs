//! Shell structure `(norm, count)` of a lattice up to a norm bound.
//!
//! Lattices similar to a standard family get their counts from theta-series
//! products in floating point; anything else is enumerated.

use crate::enumerate::{shell_counts, DEFAULT_CAP};
use crate::error::Result;
use crate::lattice::{Family, Lattice};

/// Shells with norm `<= max_norm`, ascending, zero shell excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Shells {
    pub max_norm: f64,
    pub shells: Vec<(f64, f64)>,
}

impl Shells {
    pub fn min_norm(&self) -> Option<f64> {
        self.shells.first().map(|s| s.0)
    }

    /// `Σ count·w(norm)`.
    pub fn sum<F: Fn(f64) -> f64>(&self, w: F) -> f64 {
        // Smallest terms first.
        self.shells.iter().rev().map(|&(t, c)| c * w(t)).sum()
    }
}

/// Dense series in `u = q^{1/4}` (exponent `e` means norm `e/4`).
struct USeries(Vec<f64>);

impl USeries {
    fn theta3(e_max: usize, dilate: usize) -> Self {
        let mut v = vec![0.0; e_max + 1];
        let mut k = 0usize;
        while 4 * k * k * dilate <= e_max {
            v[4 * k * k * dilate] += if k == 0 { 1.0 } else { 2.0 };
            k += 1;
        }
        USeries(v)
    }

    fn theta4(e_max: usize) -> Self {
        let mut v = vec![0.0; e_max + 1];
        let mut k = 0usize;
        while 4 * k * k <= e_max {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            v[4 * k * k] += if k == 0 { 1.0 } else { 2.0 * s };
            k += 1;
        }
        USeries(v)
    }

    fn theta2(e_max: usize, dilate: usize) -> Self {
        let mut v = vec![0.0; e_max + 1];
        let mut k = 0usize;
        while (2 * k + 1) * (2 * k + 1) * dilate <= e_max {
            v[(2 * k + 1) * (2 * k + 1) * dilate] += 2.0;
            k += 1;
        }
        USeries(v)
    }

    fn mul(&self, other: &USeries) -> USeries {
        let n = self.0.len();
        let nz: Vec<(usize, f64)> = other.0.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, c)| (i, *c)).collect();
        let mut out = vec![0.0; n];
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for &(j, b) in &nz {
                if i + j >= n {
                    break;
                }
                out[i + j] += a * b;
            }
        }
        USeries(out)
    }

    fn pow(&self, e: usize) -> USeries {
        let mut out = vec![0.0; self.0.len()];
        out[0] = 1.0;
        let mut acc = USeries(out);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    fn add(&self, other: &USeries, k: f64) -> USeries {
        USeries(self.0.iter().zip(&other.0).map(|(a, b)| k * (a + b)).collect())
    }
}

fn sigma(k: usize, m: usize) -> f64 {
    let mut s = 0.0;
    let mut d = 1;
    while d * d <= m {
        if m % d == 0 {
            s += (d as f64).powi(k as i32);
            let e = m / d;
            if e != d {
                s += (e as f64).powi(k as i32);
            }
        }
        d += 1;
    }
    s
}

/// Leech counts at norm `2m` for `m <= m_max`, from `E₄³ - 720Δ`.
fn leech_counts(m_max: usize) -> Vec<f64> {
    let len = m_max + 1;
    let mut e4 = vec![0.0; len];
    e4[0] = 1.0;
    for (m, c) in e4.iter_mut().enumerate().skip(1) {
        *c = 240.0 * sigma(3, m);
    }
    let mul = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut o = vec![0.0; len];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate().take(len - i) {
                o[i + j] += x * y;
            }
        }
        o
    };
    let e4_3 = mul(&mul(&e4, &e4), &e4);
    // Δ = x Π (1 - x^k)^24.
    let mut prod = vec![0.0; len];
    prod[0] = 1.0;
    for k in 1..len {
        for _ in 0..24 {
            for i in (k..len).rev() {
                prod[i] -= prod[i - k];
            }
        }
    }
    let mut out = e4_3;
    for m in 1..len {
        out[m] -= 720.0 * prod[m - 1];
    }
    out
}

/// Shell counts of the standard member of `family` (unit norm scale) up to
/// norm `t_max`.
pub fn family_shells(family: Family, n: usize, t_max: f64) -> Vec<(f64, f64)> {
    if family == Family::Leech {
        let m_max = (t_max / 2.0).floor() as usize;
        return leech_counts(m_max)
            .into_iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| *c > 0.5)
            .map(|(m, c)| (2.0 * m as f64, c))
            .collect();
    }
    if family == Family::E8 {
        let m_max = (t_max / 2.0).floor() as usize;
        return (1..=m_max).map(|m| (2.0 * m as f64, 240.0 * sigma(3, m))).collect();
    }
    let e_max = (4.0 * t_max + 1e-9).floor() as usize;
    let series = match family {
        Family::Zn => USeries::theta3(e_max, 1).pow(n),
        Family::Dn => USeries::theta3(e_max, 1).pow(n).add(&USeries::theta4(e_max).pow(n), 0.5),
        Family::DnDual => USeries::theta3(e_max, 1).pow(n).add(&USeries::theta2(e_max, 1).pow(n), 1.0),
        Family::A2 => {
            let a = USeries::theta3(e_max, 1).mul(&USeries::theta3(e_max, 3));
            let b = USeries::theta2(e_max, 1).mul(&USeries::theta2(e_max, 3));
            a.add(&b, 1.0)
        }
        Family::E8 | Family::Leech => unreachable!(),
    };
    series
        .0
        .into_iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| *c > 0.5)
        .map(|(e, c)| (e as f64 / 4.0, c))
        .collect()
}

/// Shells of `lattice` up to `max_norm`. Enumeration is capped at `cap`
/// points for lattices without a known family.
pub fn lattice_shells(lattice: &Lattice, max_norm: f64, cap: usize) -> Result<Shells> {
    let shells = match lattice.similarity() {
        Some(sim) => family_shells(sim.family, lattice.dim(), max_norm / sim.norm_scale * (1.0 + 1e-12))
            .into_iter()
            .map(|(t, c)| (t * sim.norm_scale, c))
            .collect(),
        None => shell_counts(lattice, max_norm, cap)?
            .into_iter()
            .filter(|&(t, _)| t > 1e-12)
            .map(|(t, c)| (t, c as f64))
            .collect(),
    };
    Ok(Shells { max_norm, shells })
}

pub fn lattice_shells_default(lattice: &Lattice, max_norm: f64) -> Result<Shells> {
    lattice_shells(lattice, max_norm, DEFAULT_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::named;

    fn enumerated(tag: &str, t: f64) -> Vec<(f64, f64)> {
        let l = named(tag).unwrap();
        shell_counts(&l, t, DEFAULT_CAP)
            .unwrap()
            .into_iter()
            .skip(1)
            .map(|(a, c)| (a, c as f64))
            .collect()
    }

    fn close(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x.0 - y.0).abs() < 1e-9 && x.1 == y.1)
    }

    #[test]
    fn families_match_enumeration() {
        for (tag, fam, n, t) in [
            ("Z3", Family::Zn, 3, 12.0),
            ("D4", Family::Dn, 4, 10.0),
            ("D3*", Family::DnDual, 3, 6.0),
            ("A2", Family::A2, 2, 13.0),
            ("E8", Family::E8, 8, 8.0),
        ] {
            let f = family_shells(fam, n, t);
            assert!(close(&f, &enumerated(tag, t)), "{tag}: {f:?}");
        }
    }

    #[test]
    fn leech_leading_counts() {
        let s = family_shells(Family::Leech, 24, 8.0);
        assert_eq!(s[0], (4.0, 196560.0));
        assert_eq!(s[1], (6.0, 16773120.0));
        assert_eq!(s[2], (8.0, 398034000.0));
    }

    #[test]
    fn scaled_lattice_shells() {
        let l = named("E8").unwrap().scaled(0.5).unwrap();
        let s = lattice_shells_default(&l, 1.0).unwrap();
        assert_eq!(s.shells, vec![(0.5, 240.0), (1.0, 2160.0)]);
    }
}
