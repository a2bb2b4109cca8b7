//! Monte Carlo statistics of the Voronoi cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decode::sq_dist;
use crate::enumerate::min_norm;
use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Lower bound on the normalized second moment of any n-dimensional cell.
pub const G_SPHERE_LIMIT: f64 = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E);

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiStats {
    pub volume: f64,
    /// Second moment per dimension.
    pub second_moment: f64,
    pub normalized_second_moment: f64,
    /// Standard error of `normalized_second_moment`.
    pub stderr: f64,
    pub min_norm: f64,
    pub kissing: u64,
}

/// Per-dimension mean squared quantization error of uniform points, with its
/// standard error.
pub fn mean_sq_error_mc(lattice: &Lattice, samples: usize, seed: u64) -> (f64, f64) {
    let n = lattice.dim();
    let m = lattice.basis();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut q = vec![0.0; n];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        for v in u.iter_mut() {
            *v = rng.gen::<f64>();
        }
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = (0..n).map(|j| m[(i, j)] * u[j]).sum();
        }
        lattice.quantize_into(&x, &mut q);
        let e = sq_dist(&x, &q) / n as f64;
        sum += e;
        sum_sq += e * e;
    }
    let k = samples as f64;
    let mean = sum / k;
    let var = (sum_sq / k - mean * mean).max(0.0) * k / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Estimates σ² and G(Λ) from `samples` uniform points in a fundamental
/// parallelepiped folded into the Voronoi cell. Deterministic given `seed`.
pub fn second_moment_mc(lattice: &Lattice, samples: usize, seed: u64) -> Result<VoronoiStats> {
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 samples, got {samples}")));
    }
    let n = lattice.dim() as f64;
    let (sigma2, se) = mean_sq_error_mc(lattice, samples, seed);
    let v = lattice.volume();
    let scale = v.powf(2.0 / n);
    let (d, k) = min_norm(lattice)?;
    Ok(VoronoiStats {
        volume: v,
        second_moment: sigma2,
        normalized_second_moment: sigma2 / scale,
        stderr: se / scale,
        min_norm: d,
        kissing: k,
    })
}

/// Normalized second moment: tabulated value if known, otherwise a Monte
/// Carlo estimate with `samples` points.
pub fn normalized_second_moment(lattice: &Lattice, samples: usize, seed: u64) -> f64 {
    if let Some(g) = crate::lattice::known_normalized_second_moment(lattice) {
        return g;
    }
    let (s, _) = mean_sq_error_mc(lattice, samples.max(1000), seed);
    s / lattice.volume().powf(2.0 / lattice.dim() as f64)
}
