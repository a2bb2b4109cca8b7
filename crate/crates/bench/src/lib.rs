//! Shared inputs for the benchmarks.

use nestlat::normal::NormalSampler;

/// `count` Gaussian points in dimension `n` with standard deviation `std`.
pub fn gaussian_points(n: usize, count: usize, std: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = NormalSampler::new(seed);
    (0..count)
        .map(|_| {
            let mut v = vec![0.0; n];
            rng.fill(&mut v, std);
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_inputs() {
        let a = gaussian_points(3, 4, 1.0, 9);
        assert_eq!(a, gaussian_points(3, 4, 1.0, 9));
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|v| v.len() == 3));
    }
}
