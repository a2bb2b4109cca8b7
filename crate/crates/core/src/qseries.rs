//! Truncated power series with exact rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `Σ_{m=0}^{T} c_m q^m`, truncated at order `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<BigRational>,
}

pub(crate) fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn rat_frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl QSeries {
    pub fn zero(truncation: usize) -> Self {
        QSeries { coeffs: vec![BigRational::zero(); truncation + 1] }
    }

    pub fn one(truncation: usize) -> Self {
        let mut s = Self::zero(truncation);
        s.coeffs[0] = BigRational::one();
        s
    }

    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        QSeries { coeffs }
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| rat(c)).collect())
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, m: usize) -> BigRational {
        self.coeffs.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Coefficient as an integer, if it is one.
    pub fn coeff_integer(&self, m: usize) -> Option<BigInt> {
        let c = self.coeff(m);
        c.is_integer().then(|| c.to_integer())
    }

    pub fn truncate(&self, t: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(t + 1, BigRational::zero());
        QSeries { coeffs: c }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        QSeries { coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    /// `q·d/dq`.
    pub fn q_derivative(&self) -> Self {
        QSeries {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| c * rat(m as i64))
                .collect(),
        }
    }

    /// Substitutes `q -> q^k`; the truncation becomes `k·T`.
    pub fn dilate(&self, k: usize) -> Self {
        let mut out = Self::zero(self.truncation() * k);
        for (m, c) in self.coeffs.iter().enumerate() {
            out.coeffs[m * k] = c.clone();
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result = Self::one(self.truncation());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Numeric evaluation at a real `q` with `|q| < 1`.
    pub fn eval(&self, q: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * q + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Space-separated coefficient list, fractions as `p/q`.
    pub fn to_fraction_string(&self) -> String {
        self.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let a = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match m {
                0 => write!(f, "{a}")?,
                _ if a.is_one() => {}
                _ => write!(f, "{a}*")?,
            }
            match m {
                0 => {}
                1 => write!(f, "q")?,
                _ => write!(f, "q^{m}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", self.truncation() + 1)
    }
}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        let t = self.truncation().min(rhs.truncation());
        QSeries { coeffs: (0..=t).map(|m| &self.coeffs[m] + &rhs.coeffs[m]).collect() }
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        let t = self.truncation().min(rhs.truncation());
        QSeries { coeffs: (0..=t).map(|m| &self.coeffs[m] - &rhs.coeffs[m]).collect() }
    }
}

impl Mul for &QSeries {
    type Output = QSeries;
    fn mul(self, rhs: &QSeries) -> QSeries {
        let t = self.truncation().min(rhs.truncation());
        let mut out = vec![BigRational::zero(); t + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(t + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(t + 1 - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        QSeries { coeffs: out }
    }
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        QSeries { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for QSeries {
            type Output = QSeries;
            fn $m(self, rhs: QSeries) -> QSeries {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_respects_truncation() {
        let a = QSeries::from_integers(&[1, 1, 0, 0]);
        let b = QSeries::from_integers(&[1, -1, 0]);
        assert_eq!(&a * &b, QSeries::from_integers(&[1, 0, -1]));
        assert_eq!(a.pow(3), QSeries::from_integers(&[1, 3, 3, 1]));
        assert_eq!((&a + &b).truncation(), 2);
    }

    #[test]
    fn derivative_and_dilate() {
        let a = QSeries::from_integers(&[5, 2, 3]);
        assert_eq!(a.q_derivative(), QSeries::from_integers(&[0, 2, 6]));
        assert_eq!(a.dilate(2), QSeries::from_integers(&[5, 0, 2, 0, 3]));
    }

    #[test]
    fn display() {
        let a = QSeries::from_coeffs(vec![rat(1), rat(-24), rat_frac(1, 2)]);
        assert_eq!(a.to_string(), "1 - 24*q + 1/2*q^2 + O(q^3)");
        assert_eq!(a.to_fraction_string(), "1 -24 1/2");
    }
}
