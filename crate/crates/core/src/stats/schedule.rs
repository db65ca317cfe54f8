use crate::error::ensure;
use crate::math::{self, ball_volume_any};
use crate::pointprocess::DomainSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `n θ r^d = b log n`.
    MildlyDense { b: f64 },
    /// `r = n^{-(1+γ)/d}`, so `n r^d = n^{-γ} -> 0`.
    Sparse { gamma: f64 },
}

/// A radius schedule `n -> r(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSchedule {
    regime: Regime,
    f0: f64,
    f1: f64,
    dim: usize,
}

impl RegimeSchedule {
    /// `f0` is the minimum of the density over the domain and `f1` its
    /// minimum over the boundary. A mildly dense schedule needs
    /// `b < 1 / max(f0, d (f0 - f1/2))`.
    pub fn new(regime: Regime, f0: f64, f1: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        ensure!(f0 > 0.0 && f1 > 0.0, "density bounds must be positive");
        match regime {
            Regime::MildlyDense { b } => {
                let limit = 1.0 / f0.max(dim as f64 * (f0 - f1 / 2.0));
                ensure!(b > 0.0 && b < limit, "mildly dense schedule needs 0 < b < {limit}, got b = {b}");
            }
            Regime::Sparse { gamma } => {
                ensure!(gamma > 0.0 && gamma.is_finite(), "sparse schedule needs gamma > 0, got {gamma}");
            }
        }
        Ok(Self { regime, f0, f1, dim })
    }

    pub fn for_domain(regime: Regime, dom: &DomainSpec) -> Result<Self> {
        let e = dom.extremes();
        Self::new(regime, e.f0, e.f1, dom.dim())
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn f1(&self) -> f64 {
        self.f1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `r(n)` for components of order `k`.
    pub fn radius(&self, n: f64, k: usize) -> Result<f64> {
        ensure!(n >= 3.0 && n.is_finite(), "schedules need n >= 3, got {n}");
        ensure!(k >= 1, "cluster order k must be at least 1");
        let d = self.dim as f64;
        match self.regime {
            Regime::MildlyDense { b } => {
                Ok(math::powf(b * math::ln(n) / (ball_volume_any(self.dim) * n), 1.0 / d))
            }
            Regime::Sparse { gamma } => {
                // n (n r^d)^{k-1} = n^{1 - (k-1) γ} must diverge
                ensure!(
                    (k - 1) as f64 * gamma < 1.0,
                    "sparse schedule with k = {k} needs gamma < {}, got {gamma}",
                    1.0 / (k - 1) as f64
                );
                Ok(math::powf(n, -(1.0 + gamma) / d))
            }
        }
    }
}

pub fn schedule_radius(sched: &RegimeSchedule, n: f64, k: usize) -> Result<f64> {
    sched.radius(n, k)
}
