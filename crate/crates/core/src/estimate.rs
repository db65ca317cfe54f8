use crate::math::{self, KahanSum};

/// A Monte Carlo (or deterministic) estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Zero exactly when the value comes from a deterministic branch.
    pub std_error: f64,
    pub samples: u64,
    /// Deterministic bound on neglected mass, zero when nothing is truncated.
    pub truncation_bound: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            samples: 0,
            truncation_bound: 0.0,
        }
    }

    pub fn new(value: f64, std_error: f64, samples: u64) -> Self {
        Self {
            value,
            std_error,
            samples,
            truncation_bound: 0.0,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            std_error: self.std_error * math::abs(factor),
            ..self
        }
    }

    /// `|value - target| <= sigmas * std_error`.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        math::abs(self.value - target) <= sigmas * self.std_error
    }

    /// Whether two independent estimates agree within `sigmas` combined
    /// standard errors.
    pub fn agrees_with(&self, other: &Estimate, sigmas: f64) -> bool {
        let se = math::sqrt(self.std_error * self.std_error + other.std_error * other.std_error);
        math::abs(self.value - other.value) <= sigmas * se
    }
}

/// Running first and second moments with compensated sums; mergeable in a
/// fixed order for deterministic parallel reduction.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub count: u64,
    sum: KahanSum,
    sum_sq: KahanSum,
    pub max: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
        if x > self.max {
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum.add(other.sum.value());
        self.sum_sq.add(other.sum_sq.value());
        if other.max > self.max {
            self.max = other.max;
        }
    }

    pub fn sum(&self) -> f64 {
        self.sum.value()
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum.value() / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.mean();
        ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    /// Mean with its standard error.
    pub fn estimate(&self) -> Estimate {
        let se = if self.count == 0 {
            0.0
        } else {
            math::sqrt(self.variance() / self.count as f64)
        };
        Estimate::new(self.mean(), se, self.count)
    }
}
