//! Scalar math on top of `libm`, plus the few special functions the
//! estimators need.

use core::f64::consts::PI;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn ln1p(x: f64) -> f64 {
    libm::log1p(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}
#[inline]
pub fn asin(x: f64) -> f64 {
    libm::asin(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `n!` as a float; exact for `n <= 20`.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Poisson probability mass `P[Z = j]` for `Z ~ Poisson(mean)`.
pub fn poisson_pmf(mean: f64, j: u64) -> f64 {
    if mean == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    exp(j as f64 * ln(mean) - mean - ln_factorial(j))
}

/// Poisson CDF `P[Z <= j]` by direct summation.
pub fn poisson_cdf(mean: f64, j: u64) -> f64 {
    (0..=j).map(|i| poisson_pmf(mean, i)).sum::<f64>().min(1.0)
}

/// Volume of the unit ball in `d` dimensions, with `theta_0 = 1`.
pub(crate) fn ball_volume_any(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * ball_volume_any(d - 2),
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if abs(self.sum) >= abs(x) {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
