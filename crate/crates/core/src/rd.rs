//! Rate-distortion analysis of nested lattice Wyner-Ziv codes.
//!
//! At high resolution the distortion per dimension splits into a source
//! part `D_S = G(Λ_F)·V_C^{2/n}·2^{-2R}` and a channel part
//! `D_C = (1/n) E‖Q_C(Z)‖²`, and the scheme picks the coarse volume that
//! minimizes their sum.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_traits::ToPrimitive;
use statrs::function::gamma::ln_gamma;

use crate::enumerate::visit_points;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::modular::{siegel_weyl_average, EisensteinPolynomial, ThetaForm};
use crate::qseries::QSeries;
use crate::nesting::{CosetTable, NestedPair};
use crate::normal::q_craig;
use crate::shells::{family_shells, lattice_shells, Shells};
use crate::theta::{count_bound, covering_bound, tail_bound, theta_direct_pair, DEFAULT_TOL};

/// Relative tolerance for truncating coarse-lattice shell sums.
pub const SHELL_TOL: f64 = 1e-13;
/// Relative truncation tolerance of [`dc_accurate`].
pub const ACCURATE_TOL: f64 = 1e-12;
/// Fine-point budget of [`dc_accurate`].
pub const ACCURATE_POINT_CAP: usize = 2_000_000_000;
/// Grid size of [`optimize_vc`].
pub const VC_GRID: usize = 64;
/// Decades of `V_C^{2/n}` searched on either side of the starting volume.
pub const VC_DECADES: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    WzLimit,
    Accurate,
    UpperTheta,
    UpperQIntegral,
    LowerPacking,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::WzLimit => "wz-limit",
            Method::Accurate => "accurate",
            Method::UpperTheta => "upper-theta",
            Method::UpperQIntegral => "upper-q-integral",
            Method::LowerPacking => "lower-packing",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "wz-limit" => Method::WzLimit,
            "accurate" => Method::Accurate,
            "upper-theta" => Method::UpperTheta,
            "upper-q-integral" => Method::UpperQIntegral,
            "lower-packing" => Method::LowerPacking,
            "monte-carlo" => Method::MonteCarlo,
            _ => return Err(Error::Parse(format!("unknown method `{s}`"))),
        })
    }
}

/// One point of a rate-distortion curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RDPoint {
    pub rate: f64,
    pub distortion: f64,
    pub method: Method,
    pub lattice: String,
    pub params: BTreeMap<String, f64>,
}

impl RDPoint {
    pub fn new(rate: f64, distortion: f64, method: Method, lattice: impl Into<String>) -> Self {
        RDPoint { rate, distortion, method, lattice: lattice.into(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    /// `10 log₁₀(D / D_WZ)` at this rate.
    pub fn gap_db(&self, sigma_z_sq: f64) -> f64 {
        gap_db(self.distortion, wz_limit(self.rate, sigma_z_sq))
    }
}

/// Variances of the side information `Y` and the correlation noise `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma_z_sq: f64,
    pub sigma_y_sq: f64,
}

impl NoiseModel {
    pub fn new(sigma_z_sq: f64, sigma_y_sq: f64) -> Result<Self> {
        if !(sigma_z_sq > 0.0) || !(sigma_y_sq > 0.0) {
            return Err(Error::InvalidArgument("variances must be positive".into()));
        }
        Ok(NoiseModel { sigma_z_sq, sigma_y_sq })
    }

    /// Gaussian density of `Z` at squared norm `t` in dimension `n`.
    pub fn density(&self, n: usize, t: f64) -> f64 {
        let s2 = self.sigma_z_sq;
        (-(t / (2.0 * s2)) - 0.5 * n as f64 * (2.0 * PI * s2).ln()).exp()
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { sigma_z_sq: 0.01, sigma_y_sq: 1.0 }
    }
}

/// `σ_Z² 2^{-2R}`.
pub fn wz_limit(rate: f64, sigma_z_sq: f64) -> f64 {
    sigma_z_sq * (-2.0 * rate).exp2()
}

pub fn gap_db(d: f64, d_ref: f64) -> f64 {
    10.0 * (d / d_ref).log10()
}

/// `G·V_C^{2/n}·2^{-2R}`.
pub fn ds_component(g_fine: f64, v_c: f64, rate: f64, n: usize) -> f64 {
    g_fine * v_c.powf(2.0 / n as f64) * (-2.0 * rate).exp2()
}

/// Zador's upper bound `(1/nπ) Γ(n/2+1)^{2/n} Γ(1+2/n)` on the smallest
/// normalized second moment in dimension `n`.
pub fn zador_gn_bound(n: usize) -> f64 {
    let nf = n as f64;
    (ln_gamma(nf / 2.0 + 1.0) * 2.0 / nf + ln_gamma(1.0 + 2.0 / nf)).exp() / (nf * PI)
}

// ---------------------------------------------------------------------------
// Coarse-lattice bounds
// ---------------------------------------------------------------------------

/// Minimal nonzero norm, from the family when known.
pub fn min_norm_of(lattice: &Lattice) -> Result<f64> {
    if let Some(sim) = lattice.similarity() {
        if let Some(&(t, _)) = family_shells(sim.family, lattice.dim(), 4.0).first() {
            return Ok(t * sim.norm_scale);
        }
    }
    Ok(crate::enumerate::min_norm(lattice)?.0)
}

/// Shells of `coarse` far enough out that the Gaussian-weighted tail of
/// `Σ t·e^{-t/8σ²}` is below `SHELL_TOL` of the computed part.
pub fn truncated_shells(coarse: &Lattice, sigma_z_sq: f64) -> Result<Shells> {
    let d = min_norm_of(coarse)?;
    let tau = 1.0 / (8.0 * PI * sigma_z_sq);
    let mut t = (2.0 * d).max(d + 8.0 * sigma_z_sq * 40.0);
    for _ in 0..60 {
        let shells = lattice_shells(coarse, t, crate::enumerate::DEFAULT_CAP)?;
        let head = shells.sum(|x| x * (-x / (8.0 * sigma_z_sq)).exp());
        let tail = tail_bound(coarse, tau, t, true) / PI;
        if tail <= SHELL_TOL * head || head == 0.0 && tail == 0.0 {
            return Ok(shells);
        }
        t *= 1.5;
    }
    Err(Error::EnumerationCap { cap: crate::enumerate::DEFAULT_CAP })
}

/// Theta-series bound `-(1/2πn) Θ'_C(1/(8πσ²))`.
pub fn dc_upper_theta(coarse: &Lattice, sigma_z_sq: f64, n: usize) -> Result<f64> {
    dc_upper_theta_shells(coarse, sigma_z_sq, n)
}

/// The same bound from the derivative of the theta function,
/// `-(1/2πn)·Θ'(1/8πσ²)`. Loses relative accuracy when the bound is tiny.
pub fn dc_upper_theta_modular(coarse: &Lattice, sigma_z_sq: f64, n: usize) -> Result<f64> {
    check_sigma(sigma_z_sq)?;
    let tau = 1.0 / (8.0 * PI * sigma_z_sq);
    let (_, d) = theta_direct_pair(coarse, tau, DEFAULT_TOL)?;
    Ok((-d / (2.0 * PI * n as f64)).max(0.0))
}

/// The same bound summed shell by shell, `(1/2n) Σ ‖l‖² e^{-‖l‖²/8σ²}`.
pub fn dc_upper_theta_shells(coarse: &Lattice, sigma_z_sq: f64, n: usize) -> Result<f64> {
    check_sigma(sigma_z_sq)?;
    let s = truncated_shells(coarse, sigma_z_sq)?;
    Ok(s.sum(|t| t * (-t / (8.0 * sigma_z_sq)).exp()) / (2.0 * n as f64))
}

/// `(1/n) Σ ‖l‖² Q(‖l‖/2σ)` with the Craig form of `Q`.
pub fn dc_upper_q_integral(coarse: &Lattice, sigma_z_sq: f64, n: usize) -> Result<f64> {
    check_sigma(sigma_z_sq)?;
    let s = truncated_shells(coarse, sigma_z_sq)?;
    let sigma = sigma_z_sq.sqrt();
    Ok(s.sum(|t| t * q_craig(t.sqrt() / (2.0 * sigma))) / n as f64)
}

/// `(1/n) Σ ‖l‖² P(z ∈ B(l, r_pack))`.
pub fn dc_lower_packing(coarse: &Lattice, sigma_z_sq: f64, n: usize) -> Result<f64> {
    check_sigma(sigma_z_sq)?;
    let s = truncated_shells(coarse, sigma_z_sq)?;
    let d = s.min_norm().unwrap_or(0.0);
    let k = coarse.dim() as f64;
    let x = d / 4.0 / sigma_z_sq;
    Ok(s.sum(|t| t * ncx2_cdf(k, t / sigma_z_sq, x)) / n as f64)
}

/// Leading term `(K d²/2n) e^{-d²/8σ²}` of the theta-series bound.
pub fn dominant_shell_bound(coarse: &Lattice, sigma_z_sq: f64, n: usize) -> Result<f64> {
    let s = lattice_shells(coarse, min_norm_of(coarse)? * (1.0 + 1e-9), crate::enumerate::DEFAULT_CAP)?;
    let (d, k) = s.shells[0];
    Ok(k * d * (-d / (8.0 * sigma_z_sq)).exp() / (2.0 * n as f64))
}

fn check_sigma(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma_z_sq must be positive, got {s}")));
    }
    Ok(())
}

/// Regularized lower incomplete gamma `P(a, y)`, accurate in relative terms
/// when it is small.
fn gamma_p(a: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y < a + 1.0 {
        // P = e^{-y} y^a / Γ(a+1) · Σ y^i / ((a+1)…(a+i))
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut i = 1.0;
        while term > 1e-17 * sum {
            term *= y / (a + i);
            sum += term;
            i += 1.0;
        }
        (-y + a * y.ln() - ln_gamma(a + 1.0) + sum.ln()).exp()
    } else {
        1.0 - gamma_q(a, y)
    }
}

/// CDF at `x` of the noncentral chi-square with `k` degrees of freedom and
/// noncentrality `λ`, as a Poisson mixture of central ones.
pub fn ncx2_cdf(k: f64, lambda: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mu = lambda / 2.0;
    let y = x / 2.0;
    if mu == 0.0 {
        return gamma_p(k / 2.0, y);
    }
    let lmu = mu.ln();
    let mut sum = 0.0;
    let j_peak = mu.max(y);
    let mut j = 0usize;
    loop {
        let jf = j as f64;
        let lw = -mu + jf * lmu - ln_gamma(jf + 1.0);
        let term = lw.exp() * gamma_p(k / 2.0 + jf, y);
        sum += term;
        if jf > j_peak && (term <= 1e-17 * sum || term == 0.0) {
            break;
        }
        j += 1;
        if j > 100_000_000 {
            break;
        }
    }
    sum.min(1.0)
}

/// Regularized upper incomplete gamma `Q(a, y)`, accurate in relative terms
/// deep in the tail.
fn gamma_q(a: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    if y < a + 1.0 {
        return 1.0 - gamma_p(a, y);
    }
    // Modified Lentz on the continued fraction for Γ(a, y).
    let tiny = 1e-300;
    let mut b = y + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-y + a * y.ln() - ln_gamma(a) + h.ln()).exp()
}

fn chi2_sf(k: f64, x: f64) -> f64 {
    gamma_q(k / 2.0, x / 2.0)
}

// ---------------------------------------------------------------------------
// Accurate channel component
// ---------------------------------------------------------------------------

/// Fine points of a pair grouped by norm, weighted by `‖Q_C(p)‖²`. The
/// channel component at any noise level follows by one sum over the bins:
/// `D_C = (V_F/n) Σ_p ‖Q_C(p)‖² f_Z(p)`.
#[derive(Debug, Clone)]
pub struct DcProfile {
    n: usize,
    v_f: f64,
    r2: f64,
    rho: f64,
    bins: Vec<(f64, f64)>,
    points: usize,
}

impl DcProfile {
    /// Enumerates fine points `p = s + l_C` with `‖p‖² <= r2`, where `s` is
    /// the leader of the coset of `p`, and bins `‖l_C‖²` by `‖p‖²`. Points
    /// strictly inside the coarse packing ball are their own leaders and are
    /// skipped.
    pub fn build(pair: &NestedPair, table: &CosetTable, r2: f64, cap: usize) -> Result<Self> {
        let n = pair.dim();
        if table.len() != pair.nesting_ratio() {
            return Err(Error::InvalidArgument(format!(
                "coset table has {} entries but the pair has index {}",
                table.len(),
                pair.nesting_ratio()
            )));
        }
        let est = count_bound(pair.fine(), r2);
        if est > 4.0 * cap as f64 {
            return Err(Error::EnumerationCap { cap });
        }
        let coarse = pair.coarse();
        let pack2 = min_norm_of(coarse)? / 4.0;
        let quantum = r2.max(1e-300) * 1e-11;
        let mut bins: HashMap<u64, (f64, f64)> = HashMap::new();
        let mut err: Option<Error> = None;
        let points = visit_points(pair.fine(), &vec![0.0; n], r2, cap, |p, d| {
            if d < pack2 * (1.0 - 1e-9) || err.is_some() {
                return;
            }
            let idx = pair.coset_index(&pair.fine().integer_coords(p));
            let w: f64 = match table.leaders() {
                Some(l) => p.iter().zip(&l[idx as usize].coords).map(|(a, b)| (a - b) * (a - b)).sum(),
                None => match pair.leader(idx) {
                    Ok(s) => p.iter().zip(&s.coords).map(|(a, b)| (a - b) * (a - b)).sum(),
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                },
            };
            if w > 1e-12 * pack2 {
                let e = bins.entry((d / quantum).round() as u64).or_insert((d, 0.0));
                e.1 += w;
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        let mut bins: Vec<(f64, f64)> = bins.into_values().collect();
        bins.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(DcProfile { n, v_f: pair.fine().volume(), r2, rho: covering_bound(coarse), bins, points })
    }

    pub fn radius_sq(&self) -> f64 {
        self.r2
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// `(D_C, bound on the truncated tail)` at noise variance `σ²`.
    pub fn eval(&self, sigma_z_sq: f64) -> (f64, f64) {
        let model = NoiseModel { sigma_z_sq, sigma_y_sq: 1.0 };
        let s: f64 = self.bins.iter().rev().map(|&(t, w)| w * model.density(self.n, t)).sum();
        let value = self.v_f * s / self.n as f64;
        (value, accurate_tail(self.n, self.rho, self.r2, sigma_z_sq))
    }

    /// Values for the pair scaled by `s`: `D_C(sΛ, σ²) = s²·D_C(Λ, σ²/s²)`.
    pub fn eval_scaled(&self, s: f64, sigma_z_sq: f64) -> (f64, f64) {
        let (v, t) = self.eval(sigma_z_sq / (s * s));
        (v * s * s, t * s * s)
    }
}

/// Bound on the contribution of fine points beyond `√r2`, using
/// `‖Q_C(p)‖ <= ‖p‖ + ρ` and the chi-square tail, with a factor 2 for the
/// sum-versus-integral discrepancy.
fn accurate_tail(n: usize, rho: f64, r2: f64, sigma_z_sq: f64) -> f64 {
    let nf = n as f64;
    let x = r2 / sigma_z_sq;
    let integral = 2.0 * (sigma_z_sq * nf * chi2_sf(nf + 2.0, x) + rho * rho * chi2_sf(nf, x));
    2.0 * integral / nf
}

/// Squared radius at which the tail bound drops below `target`.
fn accurate_radius(pair: &NestedPair, sigma_z_sq: f64, target: f64) -> Result<f64> {
    let n = pair.dim();
    let rho = covering_bound(pair.coarse());
    let mut lo = min_norm_of(pair.coarse())? / 4.0;
    if accurate_tail(n, rho, lo, sigma_z_sq) <= target {
        return Ok(lo);
    }
    let mut hi = lo.max(sigma_z_sq) * 2.0;
    while accurate_tail(n, rho, hi, sigma_z_sq) > target {
        hi *= 2.0;
        if hi > 1e12 * sigma_z_sq {
            return Err(Error::Internal("no truncation radius meets the tolerance".into()));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if accurate_tail(n, rho, mid, sigma_z_sq) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// High-resolution channel component
/// `(V_F/n) Σ_{l_C} ‖l_C‖² Σ_{l_F ∈ V_C} f_Z(l_F + l_C)`, evaluated as a sum
/// over fine points `p = l_F + l_C` truncated where the Gaussian tail falls
/// below `1e-12` of the packing lower bound.
pub fn dc_accurate(pair: &NestedPair, table: &CosetTable, sigma_z_sq: f64) -> Result<f64> {
    dc_accurate_with(pair, table, sigma_z_sq, ACCURATE_TOL, ACCURATE_POINT_CAP)
}

pub fn dc_accurate_with(pair: &NestedPair, table: &CosetTable, sigma_z_sq: f64, tol: f64, cap: usize) -> Result<f64> {
    check_sigma(sigma_z_sq)?;
    if let Some((h, beta)) = cubic_pair(pair) {
        return Ok(dc_accurate_cubic(h, beta, pair.dim(), sigma_z_sq));
    }
    let n = pair.dim();
    let mut floor = dc_lower_packing(pair.coarse(), sigma_z_sq, n)?;
    if floor <= 0.0 {
        floor = dc_upper_q_integral(pair.coarse(), sigma_z_sq, n)?;
    }
    if floor <= 0.0 {
        return Ok(0.0);
    }
    let r2 = accurate_radius(pair, sigma_z_sq, tol * floor)?;
    let primal_cost = count_bound(pair.fine(), r2);
    if primal_cost > DUAL_SWITCH {
        let dual = DualSum::new(pair, sigma_z_sq, tol * floor)?;
        let rounding = 1e-14 * (sigma_z_sq + dual.rho * dual.rho / n as f64);
        if dual.cost(pair.nesting_ratio()) < primal_cost && rounding <= 1e-6 * floor {
            return dual.eval(pair, table, cap);
        }
    }
    let profile = DcProfile::build(pair, table, r2, cap)?;
    Ok(profile.eval(sigma_z_sq).0 + 0.0)
}

const DUAL_SWITCH: f64 = 1e6;

/// Channel component by Poisson summation over the dual of the coarse
/// lattice, cheap when coarse cells are small next to the noise:
/// `D_C = 1/(nN) Σ_s Σ_{u ∈ Λ_C*} f̂(u)·[(nσ² − 4π²σ⁴‖u‖² + ‖s‖²) cos 2π⟨u,s⟩
/// − 4πσ²⟨u,s⟩ sin 2π⟨u,s⟩]` with `f̂(u) = exp(−2π²σ²‖u‖²)`.
struct DualSum {
    dual: Lattice,
    sigma_z_sq: f64,
    rho: f64,
    r2: f64,
}

impl DualSum {
    fn new(pair: &NestedPair, sigma_z_sq: f64, target: f64) -> Result<Self> {
        let coarse = pair.coarse();
        let dual = Lattice::from_basis("dual", coarse.inverse_basis().transpose())?;
        let rho = covering_bound(coarse);
        let n = pair.dim() as f64;
        // Per-term weight is at most c0 + c2·‖u‖².
        let c0 = n * sigma_z_sq + 2.0 * rho * rho;
        let c2 = 8.0 * PI * PI * sigma_z_sq * sigma_z_sq;
        let tau = 2.0 * PI * sigma_z_sq;
        let tail = |r2: f64| (c0 * tail_bound(&dual, tau, r2, false) + c2 / PI * tail_bound(&dual, tau, r2, true)) / n;
        let mut r2 = 1.0 / (PI * tau);
        for _ in 0..400 {
            if tail(r2) <= target {
                return Ok(DualSum { dual, sigma_z_sq, rho, r2 });
            }
            r2 *= 1.1;
        }
        Err(Error::Internal("no dual truncation radius meets the tolerance".into()))
    }

    fn cost(&self, leaders: u64) -> f64 {
        count_bound(&self.dual, self.r2) * leaders as f64
    }

    fn eval(&self, pair: &NestedPair, table: &CosetTable, cap: usize) -> Result<f64> {
        let n = pair.dim();
        let s2 = self.sigma_z_sq;
        let mut us: Vec<(Vec<f64>, f64)> = Vec::new();
        visit_points(&self.dual, &vec![0.0; n], self.r2, cap, |u, d| {
            us.push((u.to_vec(), (-2.0 * PI * PI * s2 * d).exp()));
        })?;
        us.sort_by(|a, b| a.1.total_cmp(&b.1));
        let nn = pair.nesting_ratio();
        let mut total = 0.0;
        for i in 0..nn {
            let s = table.leader(pair, i)?.coords;
            let ss: f64 = s.iter().map(|v| v * v).sum();
            let mut acc = 0.0;
            for (u, fh) in &us {
                let uu: f64 = u.iter().map(|v| v * v).sum();
                let us_dot: f64 = u.iter().zip(&s).map(|(a, b)| a * b).sum();
                let th = 2.0 * PI * us_dot;
                acc += fh
                    * ((n as f64 * s2 - 4.0 * PI * PI * s2 * s2 * uu + ss) * th.cos()
                        - 4.0 * PI * s2 * us_dot * th.sin());
            }
            total += acc;
        }
        Ok((total / (nn as f64 * n as f64)).max(0.0))
    }
}

/// `(h, β)` when the fine lattice is `hZⁿ` and the coarse one `βhZⁿ` in the
/// same axes.
fn cubic_pair(pair: &NestedPair) -> Option<(f64, u64)> {
    let n = pair.dim();
    let diag = |l: &Lattice| -> Option<f64> {
        let b = l.basis();
        let h = b[(0, 0)].abs();
        let ok = (0..n).all(|i| {
            (0..n).all(|j| if i == j { (b[(i, j)].abs() - h).abs() <= 1e-12 * h } else { b[(i, j)].abs() <= 1e-12 * h })
        });
        (ok && h > 0.0).then_some(h)
    };
    let h = diag(pair.fine())?;
    let hc = diag(pair.coarse())?;
    let beta = (hc / h).round();
    ((hc / h - beta).abs() < 1e-9 && beta >= 1.0).then_some((h, beta as u64))
}

/// High-resolution sum for `hZⁿ ⊃ βhZⁿ`, which factors over coordinates. Leaders
/// lie in `(-βh/2, βh/2]`.
fn dc_accurate_cubic(h: f64, beta: u64, n: usize, sigma_z_sq: f64) -> f64 {
    let sigma = sigma_z_sq.sqrt();
    let kmax = ((40.0 * sigma / h).ceil() as i64).max(1) + beta as i64;
    let b = beta as f64;
    let norm = h / (2.0 * PI * sigma_z_sq).sqrt();
    let (mut mass, mut moment) = (0.0, 0.0);
    for k in (-kmax..=kmax).rev() {
        let x = k as f64 * h;
        let f = norm * (-x * x / (2.0 * sigma_z_sq)).exp();
        let m = (k as f64 / b - 0.5).ceil();
        mass += f;
        moment += f * (b * h * m).powi(2);
    }
    moment * mass.powi(n as i32 - 1)
}

/// Whether `V_F^{2/n} <= σ²/4`, the high-resolution regime.
pub fn high_resolution(pair: &NestedPair, sigma_z_sq: f64) -> bool {
    pair.fine().volume().powf(2.0 / pair.dim() as f64) <= sigma_z_sq / 4.0
}

// ---------------------------------------------------------------------------
// Optimizing the coarse volume
// ---------------------------------------------------------------------------

/// Result of a minimization over `V_C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcOptimum {
    pub v_c: f64,
    pub d_n: f64,
    pub d_s: f64,
    pub d_c: f64,
    /// The grid minimum was at an end of the search range.
    pub at_edge: bool,
}

/// Channel-component bound used by [`optimize_vc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    UpperTheta,
    UpperQIntegral,
    LowerPacking,
}

impl Bound {
    pub fn method(self) -> Method {
        match self {
            Bound::UpperTheta => Method::UpperTheta,
            Bound::UpperQIntegral => Method::UpperQIntegral,
            Bound::LowerPacking => Method::LowerPacking,
        }
    }
}

/// Starting volume of the search: where `D_S` alone equals `σ² 2^{-2R}`.
pub fn vc_center(g: f64, n: usize, sigma_z_sq: f64) -> f64 {
    (sigma_z_sq / g).powf(n as f64 / 2.0)
}

/// Default search interval `[lo, hi]` around [`vc_center`].
pub fn vc_range(g: f64, n: usize, sigma_z_sq: f64) -> (f64, f64) {
    let c = vc_center(g, n, sigma_z_sq);
    let span = 10f64.powf(VC_DECADES * n as f64 / 2.0);
    (c / span, c * span)
}

/// Minimizes `D_S(V_C) + dc(V_C)` over a log grid of `VC_GRID` volumes in
/// `[lo, hi]`, then refines by golden section in `log V_C` to relative
/// `1e-4`. Among several local minima on the grid the one at the largest
/// volume is taken: lower bounds on `D_C` flatten out below `σ²` as the
/// coarse lattice shrinks, which can create a spurious second minimum.
pub fn minimize_vc<F>(g: f64, n: usize, rate: f64, lo: f64, hi: f64, mut dc: F) -> Result<VcOptimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (la, lb) = (lo.ln(), hi.ln());
    let mut eval = |lv: f64| -> Result<(f64, f64, f64)> {
        let v = lv.exp();
        let ds = ds_component(g, v, rate, n);
        let dcv = dc(v)?;
        Ok((ds + dcv, ds, dcv))
    };
    let grid: Vec<f64> = (0..VC_GRID).map(|i| la + (lb - la) * i as f64 / (VC_GRID - 1) as f64).collect();
    let mut vals = Vec::with_capacity(VC_GRID);
    for &lv in &grid {
        vals.push(eval(lv)?.0);
    }
    let interior = (1..VC_GRID - 1).rev().find(|&i| vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1]);
    let i = interior.unwrap_or_else(|| (0..VC_GRID).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0));
    let best = (vals[i], i);
    let at_edge = i == 0 || i == VC_GRID - 1;
    let mut a = grid[i.saturating_sub(1)];
    let mut b = grid[(i + 1).min(VC_GRID - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = eval(c)?.0;
    let mut fd = eval(d)?.0;
    while (b - a) > 1e-4 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c)?.0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d)?.0;
        }
    }
    let mut lv = 0.5 * (a + b);
    let mut r = eval(lv)?;
    if best.0 < r.0 {
        lv = grid[i];
        r = eval(lv)?;
    }
    Ok(VcOptimum { v_c: lv.exp(), d_n: r.0, d_s: r.1, d_c: r.2, at_edge })
}

/// `D_C` of `coarse` rescaled to volume `v_c`.
pub fn dc_bound_at_volume(coarse: &Lattice, bound: Bound, v_c: f64, sigma_z_sq: f64) -> Result<f64> {
    let n = coarse.dim();
    let s = (v_c / coarse.volume()).powf(1.0 / n as f64);
    let s2 = sigma_z_sq / (s * s);
    let v = match bound {
        Bound::UpperTheta => dc_upper_theta(coarse, s2, n)?,
        Bound::UpperQIntegral => dc_upper_q_integral(coarse, s2, n)?,
        Bound::LowerPacking => dc_lower_packing(coarse, s2, n)?,
    };
    Ok(v * s * s)
}

/// `D_n = min_{V_C} D_S + D_C` for a fine lattice with normalized second
/// moment `g` and a coarse lattice family (scaled isotropically).
pub fn optimize_vc_with_g(g: f64, coarse: &Lattice, rate: f64, sigma_z_sq: f64, bound: Bound) -> Result<VcOptimum> {
    check_sigma(sigma_z_sq)?;
    let n = coarse.dim();
    let (lo, hi) = vc_range(g, n, sigma_z_sq);
    minimize_vc(g, n, rate, lo, hi, |v| dc_bound_at_volume(coarse, bound, v, sigma_z_sq))
}

/// [`optimize_vc_with_g`] with `g = G(Λ_F)`.
pub fn optimize_vc(fine: &Lattice, coarse: &Lattice, rate: f64, sigma_z_sq: f64, bound: Bound) -> Result<VcOptimum> {
    if fine.dim() != coarse.dim() {
        return Err(Error::DimensionMismatch { expected: fine.dim(), got: coarse.dim() });
    }
    let g = crate::voronoi::normalized_second_moment(fine, 200_000, 1);
    optimize_vc_with_g(g, coarse, rate, sigma_z_sq, bound)
}

/// `D_n` with the accurate channel component. The search range is the
/// bracket between the optima of the packing and Q-integral bounds,
/// widened by 10% in scale below and 50% above, and a single fine-point
/// profile covers it.
pub fn optimize_vc_accurate(pair: &NestedPair, table: &CosetTable, g: f64, sigma_z_sq: f64) -> Result<VcOptimum> {
    optimize_vc_accurate_with(pair, table, g, sigma_z_sq, ACCURATE_TOL, ACCURATE_POINT_CAP)
}

pub fn optimize_vc_accurate_with(
    pair: &NestedPair,
    table: &CosetTable,
    g: f64,
    sigma_z_sq: f64,
    tol: f64,
    cap: usize,
) -> Result<VcOptimum> {
    check_sigma(sigma_z_sq)?;
    let n = pair.dim();
    let nf = n as f64;
    let rate = pair.rate();
    let lo = optimize_vc_with_g(g, pair.coarse(), rate, sigma_z_sq, Bound::LowerPacking)?;
    let up = optimize_vc_with_g(g, pair.coarse(), rate, sigma_z_sq, Bound::UpperQIntegral)?;
    let v_lo = lo.v_c.min(up.v_c) / 1.1f64.powf(nf);
    let v_hi = lo.v_c.max(up.v_c) * 1.5f64.powf(nf);
    let v0 = pair.coarse().volume();
    let scale = |v: f64| (v / v0).powf(1.0 / nf);
    if let Some((h, beta)) = cubic_pair(pair) {
        return minimize_vc(g, n, rate, v_lo, v_hi, |v| Ok(dc_accurate_cubic(h * scale(v), beta, n, sigma_z_sq)));
    }
    // Largest effective noise in base units is at the smallest volume.
    let s_min = scale(v_lo);
    let s2_max = sigma_z_sq / (s_min * s_min);
    let floor = dc_lower_packing(pair.coarse(), s2_max, n)?.max(1e-300);
    let r2 = accurate_radius(pair, s2_max, tol * floor)?;
    let profile = DcProfile::build(pair, table, r2, cap)?;
    minimize_vc(g, n, rate, v_lo, v_hi, |v| Ok(profile.eval_scaled(scale(v), sigma_z_sq).0))
}

// ---------------------------------------------------------------------------
// Average theta series of even unimodular lattices
// ---------------------------------------------------------------------------

/// Theta series of an even unimodular lattice (or of the Siegel-Weyl
/// average over all of them) in dimension `n`, a multiple of 8.
#[derive(Debug, Clone)]
pub struct UnimodularTheta {
    n: usize,
    poly: EisensteinPolynomial,
    // Count at norm 2m.
    coeffs: Vec<f64>,
}

const UNIMODULAR_TERMS: usize = 400;

impl UnimodularTheta {
    /// The Siegel-Weyl average `E_{n/2}` for `n <= 96`.
    pub fn average(n: usize) -> Result<Self> {
        if n % 8 != 0 {
            return Err(Error::InvalidArgument(format!("dimension {n} is not a multiple of 8")));
        }
        let (poly, q) = siegel_weyl_average(n, UNIMODULAR_TERMS)?;
        Ok(Self::from_parts(n, poly, &q))
    }

    /// The extremal form: no vectors of norm `2, 4, …, 2⌊n/24⌋`.
    pub fn extremal(n: usize) -> Result<Self> {
        let form = ThetaForm::extremal(n)?;
        Ok(Self::from_parts(n, form.to_polynomial(), &form.qexp(UNIMODULAR_TERMS)))
    }

    fn from_parts(n: usize, poly: EisensteinPolynomial, q: &QSeries) -> Self {
        let coeffs = q.coeffs().iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        UnimodularTheta { n, poly, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Count of vectors of norm `2m`.
    pub fn coefficient(&self, m: usize) -> Option<f64> {
        self.coeffs.get(m).copied()
    }

    /// `Σ a_m·2m·e^{-2m·a}` from the q-expansion, or `None` when the
    /// truncation is not negligible.
    fn series_moment(&self, a: f64) -> Option<f64> {
        let mut sum = 0.0;
        let mut last = 0.0;
        for (m, c) in self.coeffs.iter().enumerate().skip(1) {
            let t = 2.0 * m as f64;
            last = c * t * (-t * a).exp();
            sum += last;
        }
        let m = (self.coeffs.len() - 1) as f64;
        let ratio = (-2.0 * a).exp() * ((m + 1.0) / m).powf(self.n as f64 / 2.0);
        if ratio < 0.5 && last / (1.0 - ratio) <= 1e-15 * sum {
            Some(sum)
        } else {
            None
        }
    }

    /// Theta-series bound for the lattice scaled to volume `v_c`.
    pub fn dc_upper(&self, v_c: f64, sigma_z_sq: f64) -> Result<f64> {
        check_sigma(sigma_z_sq)?;
        let s2 = v_c.powf(2.0 / self.n as f64);
        let nf = self.n as f64;
        if let Some(sum) = self.series_moment(s2 / (8.0 * sigma_z_sq)) {
            return Ok(s2 * sum / (2.0 * nf));
        }
        let tau = s2 / (8.0 * PI * sigma_z_sq);
        let (_, d) = self.poly.eval_pair(tau)?;
        Ok((-s2 * d / (2.0 * PI * nf)).max(0.0))
    }

    /// Optimized upper bound on `D_n` with `D_S` from Zador's bound.
    pub fn optimize(&self, rate: f64, sigma_z_sq: f64) -> Result<VcOptimum> {
        let g = zador_gn_bound(self.n);
        let (lo, hi) = vc_range(g, self.n, sigma_z_sq);
        minimize_vc(g, self.n, rate, lo, hi, |v| self.dc_upper(v, sigma_z_sq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::named;
    use crate::nesting::nest_by_scale_rotate;
    use nalgebra::DMatrix;

    #[test]
    fn gamma_q_tail() {
        for (a, y) in [(1.0, 0.5), (2.0, 3.0), (4.5, 20.0), (12.0, 9.0)] {
            let r = statrs::function::gamma::gamma_ur(a, y);
            assert!((gamma_q(a, y) - r).abs() <= 1e-13 * r, "{a} {y}");
        }
        // Q(1, y) = e^{-y}, Q(2, y) = (1 + y)e^{-y}.
        assert!((gamma_q(1.0, 300.0) / (-300.0f64).exp() - 1.0).abs() < 1e-13);
        assert!((gamma_q(2.0, 600.0) / (601.0 * (-600.0f64).exp()) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn wz_limit_values() {
        assert_eq!(wz_limit(1.5, 0.01), 0.00125);
        assert_eq!(wz_limit(0.0, 0.01), 0.01);
        assert!((wz_limit(3.0, 0.01) - 1.5625e-4).abs() < 1e-18);
    }

    #[test]
    fn ds_values() {
        assert!((ds_component(1.0 / 12.0, 1.0, 1.0, 1) - 1.0 / 48.0).abs() < 1e-15);
        let a = ds_component(0.07, 1.0, 1.2, 4);
        let b = ds_component(0.07, 2.0, 1.2, 4);
        assert!((b / a - 2f64.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn zador_bound_properties() {
        assert!(zador_gn_bound(1) >= 1.0 / 12.0);
        let lim = 1.0 / (2.0 * PI * std::f64::consts::E);
        let mut prev = f64::INFINITY;
        for n in 1..200 {
            let z = zador_gn_bound(n);
            assert!(z >= lim && z <= prev);
            prev = z;
        }
        assert!((zador_gn_bound(100_000) - lim).abs() < 1e-4);
    }

    #[test]
    fn ncx2_against_polar_quadrature() {
        // P(|z - μ| <= r) for a standard 2-D Gaussian by quadrature in polar
        // coordinates about μ.
        let oracle = |m: f64, r: f64| -> f64 {
            let (nr, nt) = (2000, 2000);
            let mut s = 0.0;
            for i in 0..nr {
                let rho = (i as f64 + 0.5) * r / nr as f64;
                for j in 0..nt {
                    let th = (j as f64 + 0.5) * 2.0 * PI / nt as f64;
                    let x = m + rho * th.cos();
                    let y = rho * th.sin();
                    s += (-(x * x + y * y) / 2.0).exp() * rho;
                }
            }
            s * (r / nr as f64) * (2.0 * PI / nt as f64) / (2.0 * PI)
        };
        for (m, r) in [(0.0, 1.0), (2.0, 1.0), (4.0, 1.5), (6.0, 3.0)] {
            let a = ncx2_cdf(2.0, m * m, r * r);
            let b = oracle(m, r);
            assert!((a - b).abs() <= 1e-5 * b, "{m} {r}: {a} vs {b}");
        }
        // Central case.
        assert!((ncx2_cdf(2.0, 0.0, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn theta_bound_matches_modular_form() {
        for tag in ["E8", "D4", "Z2", "A2"] {
            let l = named(tag).unwrap().scaled(0.4).unwrap();
            for s2 in [0.01, 0.04] {
                let a = dc_upper_theta_modular(&l, s2, l.dim()).unwrap();
                let b = dc_upper_theta(&l, s2, l.dim()).unwrap();
                assert!((a - b).abs() <= 1e-9 * b, "{tag} {s2}: {a} {b}");
            }
        }
    }

    #[test]
    fn theta_bound_matches_point_sum() {
        for tag in ["E8", "D4", "A2"] {
            let l = named(tag).unwrap();
            let s2 = 0.03;
            let pts = crate::enumerate::enumerate_points(&l, 12.0).unwrap();
            let mut terms: Vec<f64> =
                pts.iter().map(|p| p.coords.iter().map(|c| c * c).sum::<f64>()).filter(|&t| t > 0.0).map(|t| t * (-t / (8.0 * s2)).exp()).collect();
            terms.sort_by(f64::total_cmp);
            let direct = terms.iter().sum::<f64>() / (2.0 * l.dim() as f64);
            let b = dc_upper_theta(&l, s2, l.dim()).unwrap();
            assert!((direct - b).abs() <= 1e-12 * b, "{tag}: {direct} {b}");
        }
    }

    #[test]
    fn dominant_shell_agrees_at_large_distance() {
        let l = named("E8").unwrap();
        let s2 = 2.0 / 90.0;
        let full = dc_upper_theta(&l, s2, 8).unwrap();
        let dom = dominant_shell_bound(&l, s2, 8).unwrap();
        assert!(dom <= full && dom >= 0.99 * full);
    }

    #[test]
    fn one_dimensional_packing_is_exact() {
        // Coarse 4Z: the packing interval is the Voronoi interval.
        let c = Lattice::from_basis("4Z", DMatrix::from_element(1, 1, 4.0)).unwrap();
        let s2: f64 = 0.25;
        let sigma = s2.sqrt();
        let mut exact = 0.0;
        for k in 1..40 {
            let l = 4.0 * k as f64;
            let p = crate::normal::q_function((l - 2.0) / sigma) - crate::normal::q_function((l + 2.0) / sigma);
            exact += 2.0 * l * l * p;
        }
        let v = dc_lower_packing(&c, s2, 1).unwrap();
        assert!((v - exact).abs() <= 1e-9 * exact, "{v} {exact}");
    }

    #[test]
    fn accurate_matches_double_sum_small_pair() {
        let pair = nest_by_scale_rotate(&named("A2").unwrap(), 7.0).unwrap().scaled(0.05).unwrap();
        let table = crate::nesting::coset_leaders(&pair).unwrap();
        let s2 = 0.004;
        let v = dc_accurate(&pair, &table, s2).unwrap();
        // Leaders shifted by every coarse point in a generous ball.
        let model = NoiseModel { sigma_z_sq: s2, sigma_y_sq: 1.0 };
        let mut sum = 0.0;
        visit_points(pair.coarse(), &[0.0, 0.0], 1.0, usize::MAX, |l, t| {
            for s in table.leaders().unwrap() {
                let d: f64 = s.coords.iter().zip(l).map(|(a, b)| (a + b) * (a + b)).sum();
                sum += t * model.density(2, d);
            }
        })
        .unwrap();
        let oracle = pair.fine().volume() * sum / 2.0;
        assert!((v - oracle).abs() <= 1e-9 * oracle, "{v} {oracle}");
    }

    #[test]
    fn accurate_shares_boundary_points() {
        let c = Lattice::from_basis("4Z", DMatrix::from_element(1, 1, 4.0)).unwrap();
        let pair = NestedPair::new(named("Z1").unwrap(), c, crate::nesting::Construction::Explicit).unwrap();
        let s2 = 0.8;
        let model = NoiseModel::new(s2, 1.0).unwrap();
        let mut oracle = 0.0;
        for k in (-60i64..=60).rev() {
            let w = match k.rem_euclid(4) {
                2 => ((4.0 * ((k - 2) / 4) as f64).powi(2) + (4.0 * ((k + 2) / 4) as f64).powi(2)) / 2.0,
                _ => (4.0 * ((k as f64) / 4.0).round()).powi(2),
            };
            oracle += w * model.density(1, (k * k) as f64);
        }
        let table = crate::nesting::coset_leaders(&pair).unwrap();
        let v = dc_accurate(&pair, &table, s2).unwrap();
        assert!((v - oracle).abs() <= 1e-12 * oracle, "{v} {oracle}");
        let generic = DcProfile::build(&pair, &table, 120.0, 1000).unwrap().eval(s2).0;
        assert!((generic - oracle).abs() <= 1e-12 * oracle, "{generic} {oracle}");
    }

    #[test]
    fn cubic_pairs_factor() {
        let fine = named("Z2").unwrap().scaled(0.3).unwrap();
        let coarse = named("Z2").unwrap().scaled(0.9).unwrap();
        let pair = NestedPair::new(fine, coarse, crate::nesting::Construction::Explicit).unwrap();
        let table = crate::nesting::coset_leaders(&pair).unwrap();
        for s2 in [0.02, 0.05] {
            let a = dc_accurate(&pair, &table, s2).unwrap();
            let b = DcProfile::build(&pair, &table, 60.0 * s2, 1_000_000).unwrap().eval(s2).0;
            assert!((a - b).abs() <= 1e-10 * a, "{a} {b}");
        }
    }

    #[test]
    fn dual_sum_matches_fine_enumeration() {
        for (tag, b2, s2) in [("A2", 7.0, 0.6), ("D4", 2.0, 0.3), ("E8", 2.0, 0.25)] {
            let pair = nest_by_scale_rotate(&named(tag).unwrap(), b2).unwrap();
            let table = crate::nesting::coset_leaders(&pair).unwrap();
            let dual = DualSum::new(&pair, s2, 1e-14).unwrap().eval(&pair, &table, 10_000_000).unwrap();
            let r2 = accurate_radius(&pair, s2, 1e-14).unwrap();
            let primal = DcProfile::build(&pair, &table, r2, 100_000_000).unwrap().eval(s2).0;
            assert!((dual - primal).abs() <= 1e-9 * primal, "{tag}: {dual} {primal}");
        }
    }

    #[test]
    fn accurate_between_bounds() {
        let pair = nest_by_scale_rotate(&named("A2").unwrap(), 49.0).unwrap();
        let mut prev = 0.0;
        for s in [3.5, 5.0, 8.0] {
            assert!(high_resolution(&pair, s));
            let a = dc_accurate(&pair, &crate::nesting::coset_leaders(&pair).unwrap(), s).unwrap();
            let lo = dc_lower_packing(pair.coarse(), s, 2).unwrap();
            let hi = dc_upper_q_integral(pair.coarse(), s, 2).unwrap();
            assert!(lo <= a && a <= hi && a > prev, "{s}: {lo} {a} {hi}");
            prev = a;
        }
    }

    #[test]
    fn average_theta_n8_is_e8() {
        let avg = UnimodularTheta::average(8).unwrap();
        let e8 = named("E8").unwrap();
        for v in [0.5, 1.0, 3.0] {
            let a = avg.dc_upper(v, 0.01).unwrap();
            let b = dc_bound_at_volume(&e8, Bound::UpperTheta, v, 0.01).unwrap();
            assert!((a - b).abs() <= 1e-9 * b, "{a} {b}");
        }
    }
}
