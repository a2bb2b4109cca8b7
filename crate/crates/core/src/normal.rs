//! Gaussian helpers: deterministic normal sampling, tail probabilities and
//! Gauss-Legendre quadrature.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation followed by one Halley step against
/// `erfc`, which brings the error far below 1e-9.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549671010344931e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * erfc(-x / SQRT_2) - p;
    let u = e * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Seeded standard-normal generator using the inverse-CDF method, so every
/// draw consumes exactly one uniform.
#[derive(Debug, Clone)]
pub struct NormalSampler {
    rng: ChaCha8Rng,
}

impl NormalSampler {
    pub fn new(seed: u64) -> Self {
        NormalSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn sample(&mut self) -> f64 {
        // Uniform on the open interval (0, 1).
        let u: f64 = (self.rng.gen::<u64>() >> 11) as f64;
        inverse_normal_cdf((u + 0.5) / (1u64 << 53) as f64)
    }

    pub fn fill(&mut self, out: &mut [f64], std_dev: f64) {
        for v in out {
            *v = std_dev * self.sample();
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn craig_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(32);
        let theta = x.iter().map(|t| FRAC_PI_4 * (t + 1.0)).collect();
        let wt = w.iter().map(|v| v * FRAC_PI_4).collect();
        (theta, wt)
    })
}

const FRAC_PI_4: f64 = FRAC_PI_2 / 2.0;

/// `Q(x)` through Craig's form `(1/π)∫₀^{π/2} exp(-x²/(2 sin²θ)) dθ` with a
/// fixed 32-point Gauss-Legendre rule. Valid for `x >= 0`.
pub fn q_craig(x: f64) -> f64 {
    let (theta, w) = craig_rule();
    let h = x * x / 2.0;
    let s: f64 = theta
        .iter()
        .zip(w)
        .map(|(t, wi)| {
            let st = t.sin();
            wi * (-h / (st * st)).exp()
        })
        .sum();
    s / PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_cdf_round_trip() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            let x = inverse_normal_cdf(p);
            let back = 0.5 * erfc(-x / SQRT_2);
            assert!((back - p).abs() <= 1e-9 * p.max(1e-3), "p={p} back={back}");
        }
        assert_eq!(inverse_normal_cdf(0.5), 0.0);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(32);
        let s: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn craig_matches_erfc() {
        for &x in &[0.5, 1.0, 2.0, 4.0, 6.0, 10.0, 20.0] {
            let a = q_craig(x);
            let b = q_function(x);
            assert!(((a - b) / b).abs() < 1e-8, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let mut a = NormalSampler::new(7);
        let mut b = NormalSampler::new(7);
        for _ in 0..100 {
            assert_eq!(a.sample(), b.sample());
        }
    }
}
