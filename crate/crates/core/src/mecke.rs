//! Exact finite-n means of the component counts, evaluated by Monte Carlo
//! over the Mecke integrals, and their asymptotic predictors.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::ensure;
use crate::estimate::{Estimate, Moments};
use crate::exec::{batches, Executor, Sequential};
use crate::geometry::is_connected;
use crate::math::{self, ball_volume_any};
use crate::pointprocess::{nu_union_1d, nu_union_coverage, uniform_in_ball, DomainSpec};
use crate::rng::{CounterRng, StreamRole};
use crate::{Error, Result};

/// Parameters of a mean computation for `k`-components of `G(X, r)` with `X`
/// a Poisson process of intensity `n f` (or `n` i.i.d. points from `f`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeckeSpec {
    pub n: f64,
    pub r: f64,
    pub k: usize,
    pub dom: DomainSpec,
    pub outer_samples: u64,
    /// Samples per ν-measure estimate of a union of balls; unused where
    /// that measure is computed exactly.
    pub volume_samples: u64,
    pub seed: u64,
}

impl MeckeSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.n > 0.0 && self.n.is_finite(), "n must be positive and finite, got {}", self.n);
        ensure!(self.k >= 1, "cluster order k must be at least 1");
        ensure!(
            self.r > 0.0 && self.r < self.dom.diameter(),
            "r must lie in (0, {}), got {}",
            self.dom.diameter(),
            self.r
        );
        ensure!(self.outer_samples >= 1000, "outer_samples must be at least 1000");
        ensure!(self.volume_samples >= 1000, "volume_samples must be at least 1000");
        Ok(())
    }
}

/// A Mecke-mean estimate with its nested-sampling audit number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeckeEstimate {
    pub estimate: Estimate,
    /// Mean of `n² Var[ν̂] / 2` over connected draws: the first-order
    /// relative bias of `exp(-n ν̂)` from noise in `ν̂`.
    pub curvature_bound: f64,
    /// Fraction of outer draws forming a connected configuration.
    pub connected_fraction: f64,
}

#[derive(Clone, Copy)]
enum Count {
    Poisson,
    Binomial,
}

/// `I_{n,k} = (n^k/k!) ∫ h_r(x) exp(-n ν(B_r(x))) ν^k(dx)`, the mean number
/// of `k`-components of the Poisson graph.
pub fn estimate_poisson_mean(spec: &MeckeSpec) -> Result<Estimate> {
    Ok(estimate_poisson_mean_with(&Sequential, spec)?.estimate)
}

pub fn estimate_poisson_mean_with<E: Executor>(exec: &E, spec: &MeckeSpec) -> Result<MeckeEstimate> {
    spec.validate()?;
    run(exec, spec, Count::Poisson)
}

/// `E[S_{n,k}] = C(n,k) ∫ h_r(x) (1 - ν(B_r(x)))^{n-k} ν^k(dx)` for `n`
/// i.i.d. points.
pub fn estimate_binomial_mean(spec: &MeckeSpec) -> Result<Estimate> {
    Ok(estimate_binomial_mean_with(&Sequential, spec)?.estimate)
}

pub fn estimate_binomial_mean_with<E: Executor>(exec: &E, spec: &MeckeSpec) -> Result<MeckeEstimate> {
    spec.validate()?;
    ensure!(
        math::floor(spec.n) == spec.n && spec.n >= spec.k as f64,
        "binomial mean needs an integer n >= k, got n = {}",
        spec.n
    );
    run(exec, spec, Count::Binomial)
}

/// Draws `x_1 ~ ν` and `x_2, ..., x_k` uniformly in `B_{(k-1)r}(x_1)`, which
/// contains every configuration with `h_r = 1`; the importance weight is
/// `Π_{j>=2} f(x_j) Vol(B_{(k-1)r})`.
fn run<E: Executor>(exec: &E, spec: &MeckeSpec, count: Count) -> Result<MeckeEstimate> {
    let MeckeSpec { n, r, k, dom, .. } = *spec;
    let d = dom.dim();
    let reach = (k - 1) as f64 * r;
    let ln_reach_volume = math::ln(ball_volume_any(d)) + d as f64 * math::ln(reach.max(f64::MIN_POSITIVE));
    let ln_prefactor = match count {
        Count::Poisson => k as f64 * math::ln(n) - math::ln_factorial(k as u64),
        Count::Binomial => {
            math::ln_gamma(n + 1.0) - math::ln_factorial(k as u64) - math::ln_gamma(n - k as f64 + 1.0)
        }
    };
    let r2 = r * r;
    let parts = batches(spec.outer_samples);
    let results: Vec<Option<(Moments, f64, u64)>> = exec.map(parts.len(), |b| {
        let (index, size) = parts[b];
        let mut rng = CounterRng::stream(spec.seed, index, StreamRole::Points);
        let mut x = vec![0.0; k * d];
        let mut scratch = Vec::new();
        let mut moments = Moments::default();
        let mut curvature = 0.0;
        let mut connected = 0u64;
        for _ in 0..size {
            dom.sample(&mut rng, &mut x[..d]);
            let mut ln_w = 0.0;
            let mut inside = true;
            for j in 1..k {
                let (head, tail) = x.split_at_mut(j * d);
                uniform_in_ball(&mut rng, &head[..d], reach, &mut tail[..d]);
                let f = dom.density(&tail[..d]);
                if f == 0.0 {
                    inside = false;
                    break;
                }
                ln_w += math::ln(f) + ln_reach_volume;
            }
            if !inside || !is_connected(&x, d, r2) {
                moments.push(0.0);
                continue;
            }
            connected += 1;
            let (nu, var) = if d == 1 {
                (nu_union_1d(&dom, &x, r, &mut scratch), 0.0)
            } else {
                nu_union_coverage(&dom, &x, r, spec.volume_samples, &mut rng, &mut scratch)
            };
            curvature += n * n * var / 2.0;
            let tail = match count {
                Count::Poisson => -n * nu,
                Count::Binomial if n == k as f64 => 0.0,
                Count::Binomial if nu >= 1.0 => f64::NEG_INFINITY,
                Count::Binomial => (n - k as f64) * math::ln1p(-nu),
            };
            let term = math::exp(ln_prefactor + ln_w + tail);
            if !term.is_finite() {
                return None;
            }
            moments.push(term);
        }
        Some((moments, curvature, connected))
    });
    let mut total = Moments::default();
    let mut curvature = 0.0;
    let mut connected = 0u64;
    for part in results {
        let (m, c, h) = part.ok_or(Error::NonFinite("Mecke integrand"))?;
        total.merge(&m);
        curvature += c;
        connected += h;
    }
    Ok(MeckeEstimate {
        estimate: total.estimate(),
        curvature_bound: if connected > 0 { curvature / connected as f64 } else { 0.0 },
        connected_fraction: connected as f64 / spec.outer_samples as f64,
    })
}

/// Predictor `(α_k/k) n (f0 n r^d)^{(1-k)(d-1)} exp(-f0 θ n r^d)` for the
/// uniform-density mean.
pub fn uniform_asymptotic_mean(n: f64, r: f64, k: usize, d: usize, f0: f64, alpha_k: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    ensure!(k >= 1, "cluster order k must be at least 1");
    ensure!(
        n > 0.0 && r > 0.0 && f0 > 0.0 && alpha_k > 0.0,
        "n, r, f0 and alpha_k must be positive"
    );
    let nrd = n * math::powi(r, d as i32);
    let exponent = (1 - k as i64) * (d as i64 - 1);
    Ok(alpha_k / k as f64
        * n
        * math::powi(f0 * nrd, exponent as i32)
        * math::exp(-f0 * ball_volume_any(d) * nrd))
}

/// `(n r^d)^{-1} log(I / n)`, which tends to `-θ f_0`.
pub fn log_mean_scaling(n: f64, r: f64, d: usize, mean: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    ensure!(mean > 0.0, "mean must be positive, got {mean}");
    ensure!(n > 0.0 && r > 0.0, "n and r must be positive");
    Ok(math::ln(mean / n) / (n * math::powi(r, d as i32)))
}
