//! Enumeration of lattice points in a ball around the origin.

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticePoint};

/// Default bound on the number of enumerated points.
pub const DEFAULT_CAP: usize = 10_000_000;

const RADIUS_SLACK: f64 = 1e-9;

/// All points with `‖l‖² <= radius_sq` (plus a 1e-9 slack), origin included.
pub fn enumerate_points(lattice: &Lattice, radius_sq: f64) -> Result<Vec<LatticePoint>> {
    enumerate_points_capped(lattice, radius_sq, DEFAULT_CAP)
}

pub fn enumerate_points_capped(lattice: &Lattice, radius_sq: f64, cap: usize) -> Result<Vec<LatticePoint>> {
    if !(radius_sq >= 0.0) {
        return Err(Error::InvalidArgument(format!("radius_sq must be >= 0, got {radius_sq}")));
    }
    let sd = lattice.sphere_decoder();
    let n = lattice.dim();
    let mut out = Vec::new();
    let mut overflow = false;
    let mut buf = vec![0.0; n];
    let origin = vec![0.0; n];
    sd.search(&origin, radius_sq + RADIUS_SLACK, |z, _| {
        if out.len() >= cap {
            overflow = true;
            return -1.0;
        }
        sd.point(z, &mut buf);
        out.push(LatticePoint { coords: buf.clone(), integer_coords: sd.original_coords(z) });
        radius_sq + RADIUS_SLACK
    });
    if overflow {
        return Err(Error::EnumerationCap { cap });
    }
    Ok(out)
}

/// Visits every point with `‖l - center‖² <= radius_sq` without storing
/// them. The callback gets Cartesian coordinates and the squared distance.
/// Returns the number of points visited, or an error once `cap` is passed.
pub fn visit_points<F>(lattice: &Lattice, center: &[f64], radius_sq: f64, cap: usize, mut f: F) -> Result<usize>
where
    F: FnMut(&[f64], f64),
{
    let sd = lattice.sphere_decoder();
    let mut buf = vec![0.0; lattice.dim()];
    let mut count = 0usize;
    let mut overflow = false;
    sd.search(center, radius_sq + RADIUS_SLACK, |z, d| {
        if count >= cap {
            overflow = true;
            return -1.0;
        }
        count += 1;
        sd.point(z, &mut buf);
        f(&buf, d);
        radius_sq + RADIUS_SLACK
    });
    if overflow {
        return Err(Error::EnumerationCap { cap });
    }
    Ok(count)
}

/// Distinct squared norms up to `radius_sq` with their multiplicities,
/// ascending. Norms within `1e-9·(1+norm)` are merged.
pub fn shell_counts(lattice: &Lattice, radius_sq: f64, cap: usize) -> Result<Vec<(f64, u64)>> {
    let mut norms = Vec::new();
    visit_points(lattice, &vec![0.0; lattice.dim()], radius_sq, cap, |_, d| norms.push(d))?;
    Ok(group_norms(norms))
}

pub(crate) fn group_norms(mut norms: Vec<f64>) -> Vec<(f64, u64)> {
    norms.sort_by(f64::total_cmp);
    let mut shells: Vec<(f64, u64)> = Vec::new();
    for v in norms {
        match shells.last_mut() {
            Some((nv, c)) if (v - *nv).abs() <= 1e-9 * (1.0 + nv.abs()) => *c += 1,
            _ => shells.push((v, 1)),
        }
    }
    shells
}

/// Smallest nonzero squared norm and the number of vectors attaining it.
///
/// The search radius is the squared length of the shortest vector of the
/// LLL-reduced basis, which always contains at least one nonzero point.
pub fn min_norm(lattice: &Lattice) -> Result<(f64, u64)> {
    let reduced = lattice.sphere_decoder().reduced_basis();
    let r = (0..reduced.ncols())
        .map(|j| reduced.column(j).norm_squared())
        .fold(f64::INFINITY, f64::min);
    let shells = shell_counts(lattice, r * (1.0 + 1e-9), DEFAULT_CAP)?;
    shells
        .into_iter()
        .find(|&(v, _)| v > 1e-9)
        .ok_or_else(|| Error::Internal("no nonzero vector found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::named;

    #[test]
    fn small_balls() {
        assert_eq!(enumerate_points(&named("Z2").unwrap(), 1.0).unwrap().len(), 5);
        assert_eq!(enumerate_points(&named("E8").unwrap(), 2.0).unwrap().len(), 241);
        assert_eq!(enumerate_points(&named("Z3").unwrap(), 0.0).unwrap().len(), 1);
    }

    #[test]
    fn z2_shells() {
        let s = shell_counts(&named("Z2").unwrap(), 5.0, DEFAULT_CAP).unwrap();
        let counts: Vec<u64> = s.iter().map(|x| x.1).collect();
        assert_eq!(counts, vec![1, 4, 4, 4, 8]);
    }

    #[test]
    fn minimal_norms() {
        assert_eq!(min_norm(&named("Z8").unwrap()).unwrap(), (1.0, 16));
        let (d, k) = min_norm(&named("D4").unwrap()).unwrap();
        assert!((d - 2.0).abs() < 1e-9 && k == 24);
        let (d, k) = min_norm(&named("E8").unwrap()).unwrap();
        assert!((d - 2.0).abs() < 1e-9 && k == 240);
    }

    #[test]
    fn cap_is_enforced() {
        let r = enumerate_points_capped(&named("Z4").unwrap(), 9.0, 100);
        assert_eq!(r.unwrap_err(), Error::EnumerationCap { cap: 100 });
    }
}
