//! Jacobi thetas, Eisenstein series, the discriminant, theta series of even
//! unimodular lattices and the Siegel-Weyl average.
//!
//! Numeric evaluation uses the real argument `τ > 0`: Jacobi thetas take
//! `q = e^{-πτ}` and modular forms are evaluated at `x = e^{-2πτ}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::Family;
use crate::qseries::{rat, rat_frac, QSeries};

/// Default cap on the Siegel-Weyl dimension.
pub const SIEGEL_WEYL_CAP: usize = 96;

// ---------------------------------------------------------------------------
// Exact number theory
// ---------------------------------------------------------------------------

/// Bernoulli numbers `B_0..=B_m` (with `B_1 = -1/2`).
pub fn bernoulli_numbers(m: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(m + 1);
    let mut binom_row: Vec<BigInt> = vec![BigInt::one()];
    for n in 0..=m {
        // binom_row holds C(n+1, k) for k = 0..=n+1
        let mut next = vec![BigInt::one(); n + 2];
        for k in 1..=n {
            next[k] = &binom_row[k - 1] + &binom_row[k];
        }
        binom_row = next;
        if n == 0 {
            b.push(BigRational::one());
            continue;
        }
        let mut s = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            s += BigRational::from_integer(binom_row[k].clone()) * bk;
        }
        b.push(-s / rat(n as i64 + 1));
    }
    b
}

pub fn bernoulli(m: usize) -> BigRational {
    bernoulli_numbers(m).pop().expect("nonempty")
}

/// `ζ(1-k)` for even `k >= 2`, equal to `-B_k/k`.
pub fn zeta_one_minus(k: usize) -> BigRational {
    -bernoulli(k) / rat(k as i64)
}

/// `ζ(2j)/π^{2j}`, a rational number.
pub fn zeta_even_over_pi(j: usize) -> BigRational {
    let b = bernoulli(2 * j);
    let mut fact = BigInt::one();
    for i in 2..=(2 * j) {
        fact *= BigInt::from(i);
    }
    let pow2 = BigInt::one() << (2 * j - 1);
    let sign = if j % 2 == 1 { rat(1) } else { rat(-1) };
    sign * b * BigRational::from_integer(pow2) / BigRational::from_integer(fact)
}

fn divisor_power_sum(e: u32, m: usize) -> BigInt {
    let mut s = BigInt::zero();
    let mut d = 1usize;
    while d * d <= m {
        if m % d == 0 {
            s += BigInt::from(d).pow(e);
            let o = m / d;
            if o != d {
                s += BigInt::from(o).pow(e);
            }
        }
        d += 1;
    }
    s
}

fn check_even_weight(k: usize) -> Result<()> {
    if k < 2 || k % 2 == 1 {
        return Err(Error::InvalidArgument(format!("Eisenstein weight must be even and >= 2, got {k}")));
    }
    Ok(())
}

/// Leading coefficient `2/ζ(1-k)` of the Eisenstein series `E_k`.
pub fn eisenstein_constant(k: usize) -> Result<BigRational> {
    check_even_weight(k)?;
    Ok(rat(2) / zeta_one_minus(k))
}

/// `E_k = 1 + (2/ζ(1-k)) Σ σ_{k-1}(m) q^m` to order `t`.
pub fn eisenstein_qexp(k: usize, t: usize) -> Result<QSeries> {
    let c = eisenstein_constant(k)?;
    let mut coeffs = vec![BigRational::one()];
    for m in 1..=t {
        coeffs.push(&c * BigRational::from_integer(divisor_power_sum(k as u32 - 1, m)));
    }
    Ok(QSeries::from_coeffs(coeffs))
}

/// `Δ = (E_4³ - E_6²)/12³` to order `t`.
pub fn discriminant_qexp(t: usize) -> QSeries {
    let e4 = eisenstein_qexp(4, t).expect("valid weight");
    let e6 = eisenstein_qexp(6, t).expect("valid weight");
    (&e4.pow(3) - &e6.pow(2)).scale(&rat_frac(1, 1728))
}

/// Jacobi theta series in the variable `u = q^{1/4}`, to order `t` in `u`.
pub fn jacobi_theta_qexp(which: u8, t: usize) -> Result<QSeries> {
    let mut c = vec![BigRational::zero(); t + 1];
    match which {
        2 => {
            // Σ_{n∈Z} u^{(2n+1)²}, each odd square twice.
            let mut j = 1usize;
            while j * j <= t {
                c[j * j] += rat(2);
                j += 2;
            }
        }
        3 | 4 => {
            c[0] = rat(1);
            let mut j = 1usize;
            while 4 * j * j <= t {
                let sign = if which == 4 && j % 2 == 1 { -2 } else { 2 };
                c[4 * j * j] += rat(sign);
                j += 1;
            }
        }
        _ => return Err(Error::InvalidArgument(format!("no Jacobi theta {which}"))),
    }
    Ok(QSeries::from_coeffs(c))
}

// ---------------------------------------------------------------------------
// Numeric Jacobi thetas
// ---------------------------------------------------------------------------

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

/// `(ϑ(τ), dϑ/dτ)` by direct summation, stopping once a term drops below
/// `tol` times the running sum.
fn jacobi_pair(which: u8, tau: f64, tol: f64) -> Result<(f64, f64)> {
    check_tau(tau)?;
    let (offset, alt) = match which {
        2 => (0.5, false),
        3 => (0.0, false),
        4 => (0.0, true),
        _ => return Err(Error::InvalidArgument(format!("no Jacobi theta {which}"))),
    };
    let (mut s, mut ds) = if offset == 0.0 { (1.0, 0.0) } else { (0.0, 0.0) };
    let start = if offset == 0.0 { 1 } else { 0 };
    for j in start.. {
        let v = j as f64 + offset;
        let e = (-PI * tau * v * v).exp();
        let sign = if alt && j % 2 == 1 { -1.0 } else { 1.0 };
        s += 2.0 * sign * e;
        ds -= 2.0 * sign * PI * v * v * e;
        if e < tol * s.abs().max(1e-300) && e * v * v < tol * ds.abs().max(1e-300) {
            break;
        }
        if e == 0.0 {
            break;
        }
    }
    Ok((s, ds))
}

/// Jacobi theta `ϑ_which(τ)` with `q = e^{-πτ}`.
pub fn jacobi_theta(which: u8, tau: f64, tol: f64) -> Result<f64> {
    Ok(jacobi_pair(which, tau, tol)?.0)
}

/// `dϑ_which/dτ`.
pub fn jacobi_theta_derivative(which: u8, tau: f64, tol: f64) -> Result<f64> {
    Ok(jacobi_pair(which, tau, tol)?.1)
}

// ---------------------------------------------------------------------------
// Numeric Eisenstein series
// ---------------------------------------------------------------------------

/// `(E_k(x), dE_k/dτ)` at `x = e^{-2πτ}` via the Lambert form
/// `1 + c Σ m^{k-1} x^m/(1-x^m)`.
pub fn eisenstein_eval_pair(k: usize, tau: f64) -> Result<(f64, f64)> {
    check_tau(tau)?;
    let c = eisenstein_constant(k)?.to_f64().unwrap_or(f64::NAN);
    let x = (-2.0 * PI * tau).exp();
    let peak = (k as f64 - 1.0) / (2.0 * PI * tau);
    let (mut s, mut ds) = (0.0f64, 0.0f64);
    let mut m = 1usize;
    loop {
        let mf = m as f64;
        let xm = x.powi(m as i32);
        if xm == 0.0 {
            break;
        }
        let base = mf.powi(k as i32 - 1) * xm / (1.0 - xm);
        let term = base;
        let dterm = base * mf / (1.0 - xm);
        s += term;
        ds += dterm;
        if mf > peak && term <= 1e-18 * s.abs() && dterm <= 1e-18 * ds.abs() {
            break;
        }
        m += 1;
    }
    Ok((1.0 + c * s, -2.0 * PI * c * ds))
}

pub fn eisenstein_eval(k: usize, tau: f64) -> Result<f64> {
    Ok(eisenstein_eval_pair(k, tau)?.0)
}

/// `Δ(e^{-2πτ})` through the product `x Π(1-x^m)^{24}`, which avoids the
/// cancellation in `(E_4³ - E_6²)/1728`.
pub fn discriminant_eval(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let x = (-2.0 * PI * tau).exp();
    let mut p = 1.0f64;
    let mut m = 1;
    loop {
        let xm = x.powi(m);
        if xm < 1e-18 {
            break;
        }
        p *= (1.0 - xm).powi(24);
        m += 1;
    }
    Ok(x * p)
}

// ---------------------------------------------------------------------------
// Theta series of even unimodular lattices
// ---------------------------------------------------------------------------

/// `Σ_j b_j E_4^{3(m-j)+k} Δ^j`, the theta series of an even unimodular
/// lattice of dimension `24m + 8k` as a function of `x = e^{-2πτ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaForm {
    m: usize,
    k: usize,
    b: Vec<BigRational>,
}

impl ThetaForm {
    pub fn new(m: usize, k: usize, b: Vec<BigRational>) -> Result<Self> {
        if k > 2 {
            return Err(Error::InvalidArgument(format!("k must be 0, 1 or 2, got {k}")));
        }
        if m == 0 && k == 0 {
            return Err(Error::InvalidArgument("dimension 0".into()));
        }
        if b.len() != m + 1 || !b[0].is_one() {
            return Err(Error::InvalidArgument("need m+1 coefficients with b_0 = 1".into()));
        }
        Ok(ThetaForm { m, k, b })
    }

    /// The form whose theta series has no vectors of norm 2, 4, …, 2m.
    pub fn extremal(n: usize) -> Result<Self> {
        if n == 0 || n % 8 != 0 {
            return Err(Error::InvalidArgument(format!("dimension {n} is not a positive multiple of 8")));
        }
        let m = n / 24;
        let k = (n % 24) / 8;
        let delta = discriminant_qexp(m.max(1));
        let e4 = eisenstein_qexp(4, m.max(1))?;
        let mut b = vec![BigRational::one()];
        // Δ^j starts at x^j with coefficient 1, so the b_j solve triangularly.
        for j in 1..=m {
            let mut partial = QSeries::zero(m.max(1));
            for (i, bi) in b.iter().enumerate() {
                let term = &e4.pow((3 * (m - i) + k) as u32) * &delta.pow(i as u32);
                partial = &partial + &term.scale(bi);
            }
            b.push(-partial.coeff(j));
        }
        ThetaForm::new(m, k, b)
    }

    pub fn e8() -> Self {
        ThetaForm { m: 0, k: 1, b: vec![BigRational::one()] }
    }

    pub fn leech() -> Self {
        ThetaForm { m: 1, k: 0, b: vec![BigRational::one(), rat(-720)] }
    }

    pub fn dim(&self) -> usize {
        24 * self.m + 8 * self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.b
    }

    /// Expansion in `x = q²`: coefficient `s` counts vectors of norm `2s`.
    pub fn qexp(&self, t: usize) -> QSeries {
        let e4 = eisenstein_qexp(4, t).expect("valid weight");
        let delta = discriminant_qexp(t);
        let mut out = QSeries::zero(t);
        for (j, bj) in self.b.iter().enumerate() {
            let term = &e4.pow((3 * (self.m - j) + self.k) as u32) * &delta.pow(j as u32);
            out = &out + &term.scale(bj);
        }
        out
    }

    /// The same form written as a polynomial in `E_4` and `E_6`.
    pub fn to_polynomial(&self) -> EisensteinPolynomial {
        let e4 = EisensteinPolynomial::e4();
        let delta = EisensteinPolynomial::discriminant();
        let mut out = EisensteinPolynomial::zero();
        for (j, bj) in self.b.iter().enumerate() {
            let t = e4.pow(3 * (self.m - j) + self.k).mul(&delta.pow(j)).scale(bj);
            out = out.add(&t);
        }
        out
    }

    fn eval_direct(&self, tau: f64) -> Result<(f64, f64)> {
        let (e2, _) = eisenstein_eval_pair(2, tau)?;
        let (e4, _) = eisenstein_eval_pair(4, tau)?;
        let (e6, _) = eisenstein_eval_pair(6, tau)?;
        let delta = discriminant_eval(tau)?;
        let de4 = -2.0 * PI / 3.0 * (e2 * e4 - e6);
        let ddelta = -2.0 * PI * e2 * delta;
        let (mut v, mut dv) = (0.0, 0.0);
        for (j, bj) in self.b.iter().enumerate() {
            let bj = bj.to_f64().unwrap_or(f64::NAN);
            let a = (3 * (self.m - j) + self.k) as i32;
            let e4a = e4.powi(a);
            let dj = delta.powi(j as i32);
            v += bj * e4a * dj;
            let mut d = 0.0;
            if a > 0 {
                d += a as f64 * e4.powi(a - 1) * de4 * dj;
            }
            if j > 0 {
                d += j as f64 * e4a * delta.powi(j as i32 - 1) * ddelta;
            }
            dv += bj * d;
        }
        Ok((v, dv))
    }
}

/// Value and τ-derivative of a weight-`w` form through `f(τ) = τ^{-w} f(1/τ)`
/// when `τ < 1`, so the series are only summed at `x <= e^{-2π}`.
fn with_inversion<F>(tau: f64, weight: f64, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    check_tau(tau)?;
    if tau >= 1.0 {
        return f(tau);
    }
    let (v, dv) = f(1.0 / tau)?;
    let val = tau.powf(-weight) * v;
    let der = -weight * tau.powf(-weight - 1.0) * v - tau.powf(-weight - 2.0) * dv;
    Ok((val, der))
}

/// `Θ(τ)` of the form, evaluated from `E_4` and `Δ` at `e^{-2πτ}`.
pub fn theta_form_eval(form: &ThetaForm, tau: f64) -> Result<f64> {
    Ok(theta_form_pair(form, tau)?.0)
}

/// `dΘ/dτ` of the form by the chain rule through the Ramanujan system.
pub fn ramanujan_derivative(form: &ThetaForm, tau: f64) -> Result<f64> {
    Ok(theta_form_pair(form, tau)?.1)
}

/// `(Θ(τ), dΘ/dτ)` for a theta form.
pub fn theta_form_pair(form: &ThetaForm, tau: f64) -> Result<(f64, f64)> {
    with_inversion(tau, form.dim() as f64 / 2.0, |t| form.eval_direct(t))
}

/// Variant `-(π/12)((2/7)E₂E₄² + 5E₂E₆² - (37/7)E₄²E₆)` of the Leech
/// derivative. Its first term has the wrong weight and the value disagrees
/// with the direct sum; kept for comparison with
/// [`leech_derivative_closed_form`].
pub fn leech_derivative_variant(tau: f64) -> Result<f64> {
    let e2 = eisenstein_eval(2, tau)?;
    let e4 = eisenstein_eval(4, tau)?;
    let e6 = eisenstein_eval(6, tau)?;
    Ok(-PI / 12.0 * (2.0 / 7.0 * e2 * e4 * e4 + 5.0 * e2 * e6 * e6 - 37.0 / 7.0 * e4 * e4 * e6))
}

/// `dΘ_Λ24/dτ = -(π/12)(14E₂E₄³ + 10E₂E₆² - 24E₄²E₆)`, from
/// `Θ = (7E₄³ + 5E₆²)/12` and the Ramanujan system.
pub fn leech_derivative_closed_form(tau: f64) -> Result<f64> {
    let e2 = eisenstein_eval(2, tau)?;
    let e4 = eisenstein_eval(4, tau)?;
    let e6 = eisenstein_eval(6, tau)?;
    Ok(-PI / 12.0 * (14.0 * e2 * e4.powi(3) + 10.0 * e2 * e6 * e6 - 24.0 * e4 * e4 * e6))
}

// ---------------------------------------------------------------------------
// Polynomials in E4 and E6
// ---------------------------------------------------------------------------

/// `Σ c_{a,b} E_4^a E_6^b` with exact coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EisensteinPolynomial {
    terms: BTreeMap<(usize, usize), BigRational>,
}

impl EisensteinPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(a: usize, b: usize, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((a, b), c);
        }
        EisensteinPolynomial { terms }
    }

    pub fn e4() -> Self {
        Self::monomial(1, 0, BigRational::one())
    }

    pub fn e6() -> Self {
        Self::monomial(0, 1, BigRational::one())
    }

    pub fn discriminant() -> Self {
        let c = rat_frac(1, 1728);
        Self::monomial(3, 0, c.clone()).add(&Self::monomial(0, 2, -c))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &BigRational)> {
        self.terms.iter()
    }

    /// Coefficient of `E_4^a E_6^b`.
    pub fn coeff(&self, a: usize, b: usize) -> BigRational {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (k, v) in &other.terms {
            let e = terms.entry(*k).or_insert_with(BigRational::zero);
            *e += v;
        }
        terms.retain(|_, v| !v.is_zero());
        EisensteinPolynomial { terms }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut terms: BTreeMap<_, _> = self.terms.iter().map(|(k, v)| (*k, v * c)).collect();
        terms.retain(|_, v: &mut BigRational| !v.is_zero());
        EisensteinPolynomial { terms }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &other.terms {
                let e = terms.entry((a1 + a2, b1 + b2)).or_insert_with(BigRational::zero);
                *e += c1 * c2;
            }
        }
        terms.retain(|_, v| !v.is_zero());
        EisensteinPolynomial { terms }
    }

    pub fn pow(&self, e: usize) -> Self {
        let mut out = Self::monomial(0, 0, BigRational::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Weight `4a + 6b` of the leading monomial (all monomials share it for
    /// the forms built here).
    pub fn weight(&self) -> usize {
        self.terms.keys().next().map_or(0, |(a, b)| 4 * a + 6 * b)
    }

    pub fn qexp(&self, t: usize) -> QSeries {
        let e4 = eisenstein_qexp(4, t).expect("valid weight");
        let e6 = eisenstein_qexp(6, t).expect("valid weight");
        let mut out = QSeries::zero(t);
        for ((a, b), c) in &self.terms {
            let term = &e4.pow(*a as u32) * &e6.pow(*b as u32);
            out = &out + &term.scale(c);
        }
        out
    }

    fn eval_direct(&self, tau: f64) -> Result<(f64, f64)> {
        let e2 = eisenstein_eval(2, tau)?;
        let e4 = eisenstein_eval(4, tau)?;
        let e6 = eisenstein_eval(6, tau)?;
        let de4 = -2.0 * PI / 3.0 * (e2 * e4 - e6);
        let de6 = -PI * (e2 * e6 - e4 * e4);
        let (mut v, mut dv) = (0.0, 0.0);
        for ((a, b), c) in &self.terms {
            let c = c.to_f64().unwrap_or(f64::NAN);
            let (a, b) = (*a as i32, *b as i32);
            v += c * e4.powi(a) * e6.powi(b);
            let mut d = 0.0;
            if a > 0 {
                d += a as f64 * e4.powi(a - 1) * de4 * e6.powi(b);
            }
            if b > 0 {
                d += b as f64 * e4.powi(a) * e6.powi(b - 1) * de6;
            }
            dv += c * d;
        }
        Ok((v, dv))
    }

    /// Value and τ-derivative at `x = e^{-2πτ}` (Ramanujan system for the
    /// derivative).
    pub fn eval_pair(&self, tau: f64) -> Result<(f64, f64)> {
        with_inversion(tau, self.weight() as f64, |t| self.eval_direct(t))
    }
}

/// `E_{2j}` as a polynomial in `E_4, E_6` for `j = 2..=jmax`, from the
/// recurrence on `d_k = (2k+3) k! G_{2k+4}` with `G_{2k} = 2ζ(2k)E_{2k}`.
/// Powers of π are factored out so every quantity is rational.
pub fn eisenstein_polynomials(jmax: usize) -> Vec<EisensteinPolynomial> {
    let count = jmax.saturating_sub(1);
    let norm = |k: usize| -> BigRational {
        let mut fact = BigInt::one();
        for i in 2..=k {
            fact *= BigInt::from(i);
        }
        rat((2 * k + 3) as i64) * BigRational::from_integer(fact) * rat(2) * zeta_even_over_pi(k + 2)
    };
    let mut d: Vec<EisensteinPolynomial> = Vec::with_capacity(count);
    if count >= 1 {
        d.push(EisensteinPolynomial::e4().scale(&norm(0)));
    }
    if count >= 2 {
        d.push(EisensteinPolynomial::e6().scale(&norm(1)));
    }
    while d.len() < count {
        let n = d.len() - 2;
        let mut s = EisensteinPolynomial::zero();
        let mut binom = BigInt::one();
        for k in 0..=n {
            s = s.add(&d[k].mul(&d[n - k]).scale(&BigRational::from_integer(binom.clone())));
            binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
        }
        let f = rat_frac((3 * n + 6) as i64, (2 * n + 9) as i64);
        d.push(s.scale(&f));
    }
    d.iter()
        .enumerate()
        .map(|(k, dk)| dk.scale(&(BigRational::one() / norm(k))))
        .collect()
}

/// Average theta series `E_{n/2}` over even unimodular lattices of
/// dimension `n`, as a polynomial and as a q-expansion (in `x = q²`).
pub fn siegel_weyl_average(n: usize, t: usize) -> Result<(EisensteinPolynomial, QSeries)> {
    siegel_weyl_average_capped(n, t, SIEGEL_WEYL_CAP)
}

pub fn siegel_weyl_average_capped(n: usize, t: usize, cap: usize) -> Result<(EisensteinPolynomial, QSeries)> {
    if n < 8 || n % 4 != 0 {
        return Err(Error::InvalidArgument(format!("dimension must be a multiple of 4 and >= 8, got {n}")));
    }
    if n > cap {
        return Err(Error::InvalidArgument(format!("dimension {n} exceeds the cap {cap}")));
    }
    let j = n / 4;
    let poly = eisenstein_polynomials(j).pop().expect("j >= 2");
    let q = poly.qexp(t);
    Ok((poly, q))
}

// ---------------------------------------------------------------------------
// Closed forms for standard families
// ---------------------------------------------------------------------------

const JT_TOL: f64 = 1e-17;

/// `(Θ(τ), dΘ/dτ)` of the standard member of `family` in dimension `n`,
/// from Jacobi thetas (Zⁿ, Dₙ, Dₙ*, E₈, A₂) or the Leech form.
pub fn family_theta_pair(family: Family, n: usize, tau: f64) -> Result<(f64, f64)> {
    check_tau(tau)?;
    let nf = n as f64;
    let pow_pair = |(v, d): (f64, f64), e: f64| (v.powf(e), e * v.powf(e - 1.0) * d);
    let t2 = || jacobi_pair(2, tau, JT_TOL);
    let t3 = || jacobi_pair(3, tau, JT_TOL);
    let t4 = || jacobi_pair(4, tau, JT_TOL);
    Ok(match family {
        Family::Zn => pow_pair(t3()?, nf),
        Family::Dn => {
            let a = pow_pair(t3()?, nf);
            let b = pow_pair(t4()?, nf);
            (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))
        }
        Family::DnDual => {
            let a = pow_pair(t2()?, nf);
            let b = pow_pair(t3()?, nf);
            (a.0 + b.0, a.1 + b.1)
        }
        Family::E8 => {
            if n != 8 {
                return Err(Error::InvalidArgument("E8 is 8-dimensional".into()));
            }
            let a = pow_pair(t2()?, 8.0);
            let b = pow_pair(t3()?, 8.0);
            let c = pow_pair(t4()?, 8.0);
            (0.5 * (a.0 + b.0 + c.0), 0.5 * (a.1 + b.1 + c.1))
        }
        Family::A2 => {
            if n != 2 {
                return Err(Error::InvalidArgument("A2 is 2-dimensional".into()));
            }
            // Θ = ϑ₃(τ)ϑ₃(3τ) + ϑ₂(τ)ϑ₂(3τ) for minimal norm 1.
            let (a3, da3) = t3()?;
            let (b3, db3) = jacobi_pair(3, 3.0 * tau, JT_TOL)?;
            let (a2, da2) = t2()?;
            let (b2, db2) = jacobi_pair(2, 3.0 * tau, JT_TOL)?;
            (a3 * b3 + a2 * b2, da3 * b3 + 3.0 * a3 * db3 + da2 * b2 + 3.0 * a2 * db2)
        }
        Family::Leech => {
            if n != 24 {
                return Err(Error::InvalidArgument("Leech is 24-dimensional".into()));
            }
            theta_form_pair(&ThetaForm::leech(), tau)?
        }
    })
}

/// Exact theta q-series (variable `q = e^{-πτ}`, coefficient `m` counts
/// vectors of norm `m`) of the standard member of a family, to norm `t`.
/// Returns `None` when norms are not integers for the family (A₂, Dₙ*).
pub fn family_theta_qexp(family: Family, n: usize, t: usize) -> Result<Option<QSeries>> {
    // Work in u = q^{1/4}, then keep exponents divisible by 4.
    let tu = 4 * t;
    let th3 = jacobi_theta_qexp(3, tu)?;
    let th4 = jacobi_theta_qexp(4, tu)?;
    let th2 = jacobi_theta_qexp(2, tu)?;
    let series_u = match family {
        Family::Zn => th3.pow(n as u32),
        Family::Dn => (&th3.pow(n as u32) + &th4.pow(n as u32)).scale(&rat_frac(1, 2)),
        Family::E8 => {
            let s = &(&th2.pow(8) + &th3.pow(8)) + &th4.pow(8);
            s.scale(&rat_frac(1, 2))
        }
        Family::Leech => {
            let x = ThetaForm::leech().qexp(t / 2 + 1);
            let mut c = vec![BigRational::zero(); t + 1];
            for (s, v) in x.coeffs().iter().enumerate() {
                if 2 * s <= t {
                    c[2 * s] = v.clone();
                }
            }
            return Ok(Some(QSeries::from_coeffs(c)));
        }
        Family::A2 | Family::DnDual => return Ok(None),
    };
    let c: Vec<BigRational> = (0..=t).map(|m| series_u.coeff(4 * m)).collect();
    Ok(Some(QSeries::from_coeffs(c)))
}

/// Shell list `(norm, count)` from an integer-norm q-series, zero shells
/// skipped.
pub fn shells_from_qexp(q: &QSeries) -> Vec<(f64, u64)> {
    q.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(m, c)| (m as f64, c.to_integer().to_u64().unwrap_or(u64::MAX)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(q: &QSeries, upto: usize) -> Vec<i64> {
        (0..=upto).map(|m| q.coeff(m).to_integer().to_i64().unwrap()).collect()
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_numbers(12);
        assert_eq!(b[2], rat_frac(1, 6));
        assert_eq!(b[4], rat_frac(-1, 30));
        assert_eq!(b[12], rat_frac(-691, 2730));
        assert_eq!(zeta_even_over_pi(1), rat_frac(1, 6));
        assert_eq!(zeta_even_over_pi(2), rat_frac(1, 90));
    }

    #[test]
    fn eisenstein_leading_terms() {
        assert_eq!(ints(&eisenstein_qexp(4, 3).unwrap(), 3), vec![1, 240, 2160, 6720]);
        assert_eq!(ints(&eisenstein_qexp(6, 2).unwrap(), 2), vec![1, -504, -16632]);
        assert_eq!(ints(&eisenstein_qexp(2, 2).unwrap(), 2), vec![1, -24, -72]);
        assert!(eisenstein_qexp(3, 2).is_err());
    }

    #[test]
    fn discriminant_terms() {
        assert_eq!(ints(&discriminant_qexp(4), 4), vec![0, 1, -24, 252, -1472]);
    }

    #[test]
    fn numeric_eisenstein_matches_series() {
        let tau = 0.7;
        let x = (-2.0 * PI * tau).exp();
        for k in [2, 4, 6, 12] {
            let s = eisenstein_qexp(k, 40).unwrap().eval(x);
            let v = eisenstein_eval(k, tau).unwrap();
            assert!((s - v).abs() < 1e-12 * s.abs().max(1.0), "k={k}: {s} vs {v}");
        }
        let d = discriminant_eval(0.7).unwrap();
        let ds = discriminant_qexp(40).eval(x);
        assert!((d - ds).abs() < 1e-13 * ds.abs());
    }

    #[test]
    fn extremal_forms() {
        assert_eq!(ThetaForm::extremal(24).unwrap(), ThetaForm::leech());
        assert_eq!(ThetaForm::extremal(8).unwrap(), ThetaForm::e8());
        let q = ThetaForm::leech().qexp(3);
        assert_eq!(ints(&q, 3), vec![1, 0, 196560, 16773120]);
    }

    #[test]
    fn leech_derivative_forms() {
        let a = ramanujan_derivative(&ThetaForm::leech(), 1.0).unwrap();
        let b = leech_derivative_closed_form(1.0).unwrap();
        assert!(((a - b) / b).abs() < 1e-12);
        let p = leech_derivative_variant(1.0).unwrap();
        assert!(((p - b) / b).abs() > 1e-3);
    }

    #[test]
    fn inversion_is_consistent() {
        let f = ThetaForm::e8();
        let (a, da) = f.eval_direct(0.8).unwrap();
        let (b, db) = theta_form_pair(&f, 0.8).unwrap();
        assert!(((a - b) / a).abs() < 1e-12);
        assert!(((da - db) / da).abs() < 1e-10);
    }

    #[test]
    fn recurrence_small_cases() {
        let polys = eisenstein_polynomials(6);
        assert_eq!(polys[0], EisensteinPolynomial::e4());
        assert_eq!(polys[1], EisensteinPolynomial::e6());
        assert_eq!(polys[2], EisensteinPolynomial::e4().pow(2));
        assert_eq!(polys[3], EisensteinPolynomial::e4().mul(&EisensteinPolynomial::e6()));
        for (j, p) in polys.iter().enumerate() {
            let w = 2 * (j + 2);
            assert_eq!(p.qexp(10), eisenstein_qexp(w, 10).unwrap(), "E_{w}");
        }
    }

    #[test]
    fn siegel_weyl_checks() {
        let (p, q) = siegel_weyl_average(16, 10).unwrap();
        assert_eq!(p, EisensteinPolynomial::e4().pow(2));
        assert_eq!(q.coeff(0), rat(1));
        assert!(siegel_weyl_average(100, 5).is_err());
        assert!(siegel_weyl_average(10, 5).is_err());
    }
}
