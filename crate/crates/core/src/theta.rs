//! Theta series of concrete lattices by direct summation.
//!
//! Small cases enumerate points in a ball whose radius is chosen from a tail
//! bound. Standard families use an exact coset decomposition over a scaled
//! `Zⁿ` or `Dₙ` sublattice, which turns the lattice sum into a short sum of
//! products of one-dimensional sums.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::enumerate::visit_points;
use crate::error::{Error, Result};
use crate::lattice::{Family, Lattice};
use crate::linalg::{gram_schmidt_sq_norms, CosetIndexer};

/// Default absolute tolerance for direct theta sums.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Point budget for the enumeration route.
const ENUM_BUDGET: usize = 20_000_000;

/// A point set written as `∪_c (diag(a)·K + c)` where `K` is `Zⁿ` or, when
/// `parity` is set, `Dₙ`.
#[derive(Debug, Clone)]
pub struct CosetDecomposition {
    pub scales: Vec<f64>,
    pub parity: bool,
    pub shifts: Vec<Vec<f64>>,
}

/// One-dimensional sums `Σ_k s(k) e^{-πτ(ak+c)²}` and their τ-derivatives,
/// with `s(k) = 1` and `s(k) = (-1)^k`.
fn line_sums(a: f64, c: f64, tau: f64) -> [f64; 4] {
    let c = c - a * (c / a).round();
    let (mut f, mut df, mut g, mut dg) = (0.0, 0.0, 0.0, 0.0);
    let kmax = ((40.0 / (PI * tau)).sqrt() / a).ceil() as i64 + 2;
    for k in -kmax..=kmax {
        let v = a * k as f64 + c;
        let v2 = v * v;
        let e = (-PI * tau * v2).exp();
        let sign = if k.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        f += e;
        df -= PI * v2 * e;
        g += sign * e;
        dg -= sign * PI * v2 * e;
    }
    [f, df, g, dg]
}

fn product_pair(factors: &[(f64, f64)]) -> (f64, f64) {
    let mut p = 1.0;
    let mut dp = 0.0;
    for &(v, dv) in factors {
        dp = dp * v + p * dv;
        p *= v;
    }
    (p, dp)
}

impl CosetDecomposition {
    /// `(Θ(τ), dΘ/dτ)`.
    pub fn theta_pair(&self, tau: f64) -> (f64, f64) {
        let n = self.scales.len();
        let mut f = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        let (mut s, mut ds) = (0.0, 0.0);
        for c in &self.shifts {
            f.clear();
            g.clear();
            for i in 0..n {
                let [fv, fd, gv, gd] = line_sums(self.scales[i], c[i], tau);
                f.push((fv, fd));
                g.push((gv, gd));
            }
            let (pf, dpf) = product_pair(&f);
            if self.parity {
                // Reducing c_i modulo a_i flips the parity of k; correct sign.
                let flips: i64 = c
                    .iter()
                    .zip(&self.scales)
                    .map(|(ci, ai)| (ci / ai).round() as i64)
                    .sum();
                let sign = if flips.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
                let (pg, dpg) = product_pair(&g);
                s += 0.5 * (pf + sign * pg);
                ds += 0.5 * (dpf + sign * dpg);
            } else {
                s += pf;
                ds += dpf;
            }
        }
        (s, ds)
    }
}

fn leech_decomposition() -> &'static CosetDecomposition {
    static CACHE: OnceLock<CosetDecomposition> = OnceLock::new();
    CACHE.get_or_init(|| {
        // Leech in √8-scaled integer coordinates contains 4·D24.
        let lat = crate::lattice::leech().expect("Leech basis");
        let h = lat.basis().map(|v| (v * 8f64.sqrt()).round() as i64);
        let mut sub = DMatrix::<i64>::zeros(24, 24);
        sub[(0, 0)] = -4;
        sub[(1, 0)] = -4;
        for j in 1..24 {
            sub[(j - 1, j)] = 4;
            sub[(j, j)] = -4;
        }
        let hf = h.map(|v| v as f64);
        let p = (hf.try_inverse().expect("nonsingular") * sub.map(|v| v as f64)).map(|v| v.round() as i64);
        let idx = CosetIndexer::new(&p).expect("valid sublattice");
        let shifts = (0..idx.count())
            .map(|i| {
                let r = idx.representative(i);
                (0..24)
                    .map(|row| (0..24).map(|col| h[(row, col)] * r[col]).sum::<i64>() as f64 / 8f64.sqrt())
                    .collect()
            })
            .collect();
        CosetDecomposition { scales: vec![2f64.sqrt(); 24], parity: true, shifts }
    })
}

/// Coset decomposition of the standard member of a family.
pub fn family_decomposition(family: Family, n: usize) -> Result<CosetDecomposition> {
    let ones = vec![1.0; n];
    Ok(match family {
        Family::Zn => CosetDecomposition { scales: ones, parity: false, shifts: vec![vec![0.0; n]] },
        Family::Dn => CosetDecomposition { scales: ones, parity: true, shifts: vec![vec![0.0; n]] },
        Family::DnDual => CosetDecomposition {
            scales: ones,
            parity: false,
            shifts: vec![vec![0.0; n], vec![0.5; n]],
        },
        Family::A2 => CosetDecomposition {
            scales: vec![1.0, 3f64.sqrt()],
            parity: false,
            shifts: vec![vec![0.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]],
        },
        Family::E8 => CosetDecomposition {
            scales: ones,
            parity: true,
            shifts: vec![vec![0.0; 8], vec![0.5; 8]],
        },
        Family::Leech => {
            if n != 24 {
                return Err(Error::InvalidArgument("Leech is 24-dimensional".into()));
            }
            leech_decomposition().clone()
        }
    })
}

/// Points of norm at most `t` fit in disjoint Voronoi cells inside the ball
/// of radius `√t + ρ`, with `ρ` a covering-radius bound. With `rho = 0` this
/// is the usual volume estimate of the count.
fn count_bound_with(lattice: &Lattice, t: f64, rho: f64) -> f64 {
    let n = lattice.dim() as f64;
    let log_ball = (n / 2.0) * PI.ln() - statrs::function::gamma::ln_gamma(n / 2.0 + 1.0);
    (log_ball + n * (t.sqrt() + rho).ln() - lattice.volume().ln()).exp()
}

pub(crate) fn covering_bound(lattice: &Lattice) -> f64 {
    let gs = gram_schmidt_sq_norms(lattice.sphere_decoder().reduced_basis());
    0.5 * gs.iter().sum::<f64>().sqrt()
}

pub(crate) fn count_bound(lattice: &Lattice, t: f64) -> f64 {
    count_bound_with(lattice, t, covering_bound(lattice))
}

/// Bound on `Σ_{‖l‖² > r2} w(‖l‖²) e^{-πτ‖l‖²}` for `w = 1` (`deriv =
/// false`) or `w = π t` (`deriv = true`), by summation by parts against the
/// count bound.
pub(crate) fn tail_bound(lattice: &Lattice, tau: f64, r2: f64, deriv: bool) -> f64 {
    let a = PI * tau;
    let g_neg_slope = |t: f64| -> f64 {
        if deriv {
            PI * (a * t - 1.0).max(0.0) * (-a * t).exp()
        } else {
            a * (-a * t).exp()
        }
    };
    let span = 60.0 / a;
    let steps = 4000;
    let h = span / steps as f64;
    let mut s = 0.0;
    for i in 0..=steps {
        let t = r2 + i as f64 * h;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        s += w * count_bound(lattice, t + h) * g_neg_slope(t);
    }
    s * h + count_bound(lattice, r2 + span) * (-a * (r2 + span)).exp() * (1.0 + r2 + span)
}

fn enumeration_radius(lattice: &Lattice, tau: f64, tol: f64) -> Result<f64> {
    let mut r2 = 1.0 / (PI * tau);
    for _ in 0..200 {
        if tail_bound(lattice, tau, r2, false) < tol && tail_bound(lattice, tau, r2, true) < tol {
            if count_bound_with(lattice, r2, 0.0) > ENUM_BUDGET as f64 {
                return Err(Error::EnumerationCap { cap: ENUM_BUDGET });
            }
            return Ok(r2);
        }
        r2 *= 1.2;
    }
    Err(Error::EnumerationCap { cap: ENUM_BUDGET })
}

/// `(Θ(τ), dΘ/dτ)` by enumerating the ball, ignoring any known structure.
pub fn theta_enumerated(lattice: &Lattice, tau: f64, tol: f64) -> Result<(f64, f64)> {
    check_tau(tau)?;
    let r2 = enumeration_radius(lattice, tau, tol)?;
    let mut norms = Vec::new();
    visit_points(lattice, &vec![0.0; lattice.dim()], r2, ENUM_BUDGET, |_, d| norms.push(d))?;
    // Add small terms first.
    norms.sort_by(|a, b| b.total_cmp(a));
    let (mut s, mut ds) = (0.0, 0.0);
    for t in norms {
        let e = (-PI * tau * t).exp();
        s += e;
        ds -= PI * t * e;
    }
    Ok((s, ds))
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

/// `(Θ(τ), dΘ/dτ)` by direct lattice summation. Lattices known to be similar
/// to a standard family use `Θ_{sΛ}(τ) = Θ_Λ(s²τ)` and the coset
/// decomposition; others are enumerated.
pub fn theta_direct_pair(lattice: &Lattice, tau: f64, tol: f64) -> Result<(f64, f64)> {
    check_tau(tau)?;
    if let Some(sim) = lattice.similarity() {
        let d = family_decomposition(sim.family, lattice.dim())?;
        let (v, dv) = d.theta_pair(tau * sim.norm_scale);
        return Ok((v, dv * sim.norm_scale));
    }
    theta_enumerated(lattice, tau, tol)
}

/// `Θ_Λ(τ) = Σ e^{-πτ‖l‖²}`.
pub fn theta_direct(lattice: &Lattice, tau: f64, tol: f64) -> Result<f64> {
    Ok(theta_direct_pair(lattice, tau, tol)?.0)
}

/// `Θ'_Λ(τ) = -Σ π‖l‖² e^{-πτ‖l‖²}`.
pub fn theta_derivative_direct(lattice: &Lattice, tau: f64, tol: f64) -> Result<f64> {
    Ok(theta_direct_pair(lattice, tau, tol)?.1)
}

/// `(Θ, Θ')` from modular forms / Jacobi thetas for lattices similar to a
/// standard family; `None` otherwise.
pub fn theta_modular_pair(lattice: &Lattice, tau: f64) -> Result<Option<(f64, f64)>> {
    let Some(sim) = lattice.similarity() else {
        return Ok(None);
    };
    let (v, dv) = crate::modular::family_theta_pair(sim.family, lattice.dim(), tau * sim.norm_scale)?;
    Ok(Some((v, dv * sim.norm_scale)))
}
