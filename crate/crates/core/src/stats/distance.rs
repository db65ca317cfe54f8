use alloc::vec;
use alloc::vec::Vec;

use crate::error::ensure;
use crate::math::{self, normal_cdf, poisson_pmf};
use crate::rng::{CounterRng, StreamRole};
use crate::stats::ReplicateBatch;
use crate::Result;

const BOOTSTRAP_RESAMPLES: usize = 500;
const POISSON_TAIL: f64 = 1e-12;

/// Empirical total variation distance to a Poisson law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    pub value: f64,
    /// Bootstrap standard error.
    pub std_error: f64,
    /// Expected value of the empirical distance when the data really are
    /// Poisson: the part of `value` due to sampling noise alone.
    pub bias_bound: f64,
    /// `value - bias_bound`; may be slightly negative.
    pub adjusted: f64,
    /// `max(adjusted, 0) + 3 std_error`.
    pub upper: f64,
    /// Largest count included in the sum.
    pub support: u64,
}

/// Largest `j` needed so that the Poisson tail beyond it is below `1e-12`.
fn poisson_support(mean: f64) -> u64 {
    let mut j = math::floor(mean) as u64;
    let mut tail = 1.0 - math::poisson_cdf(mean, j);
    while tail >= POISSON_TAIL {
        j += 1;
        tail -= poisson_pmf(mean, j);
    }
    j
}

/// Total variation between a pmf on `0, 1, ...` and `Poisson(mean)`.
pub fn tv_pmf_to_poisson(pmf: &[f64], mean: f64) -> f64 {
    let support = poisson_support(mean).max(pmf.len().saturating_sub(1) as u64);
    let mut total = math::KahanSum::default();
    let mut covered = 0.0;
    for j in 0..=support {
        let p = pmf.get(j as usize).copied().unwrap_or(0.0);
        let q = poisson_pmf(mean, j);
        covered += q;
        total.add(math::abs(p - q));
    }
    0.5 * (total.value() + (1.0 - covered).max(0.0))
}

fn tv_of_counts(hist: &[u64], n: f64, poisson: &[f64], tail: f64) -> f64 {
    let mut total = math::KahanSum::default();
    for (h, q) in hist.iter().zip(poisson) {
        total.add(math::abs(*h as f64 / n - q));
    }
    0.5 * (total.value() + tail)
}

/// `E|X - Np|` for `X ~ Binomial(N, p)` (de Moivre).
fn binomial_mean_abs_dev(n: u64, p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let nu = math::floor(n as f64 * p) as u64 + 1;
    if nu > n {
        return 0.0;
    }
    let ln_choose = math::ln_factorial(n) - math::ln_factorial(nu) - math::ln_factorial(n - nu);
    2.0 * nu as f64
        * math::exp(ln_choose + nu as f64 * math::ln(p) + (n - nu + 1) as f64 * math::ln1p(-p))
}

/// Total variation between the empirical pmf of the batch and
/// `Poisson(mean)`, truncated where the Poisson tail drops below `1e-12`.
pub fn tv_to_poisson(batch: &ReplicateBatch, mean: f64) -> Result<TvEstimate> {
    ensure!(mean > 0.0 && mean.is_finite(), "Poisson mean must be positive, got {mean}");
    let values = &batch.values;
    ensure!(!values.is_empty(), "empty batch");
    let max_v = values.iter().copied().max().unwrap_or(0);
    let support = poisson_support(mean).max(max_v);
    let poisson: Vec<f64> = (0..=support).map(|j| poisson_pmf(mean, j)).collect();
    let tail = (1.0 - poisson.iter().sum::<f64>()).max(0.0);
    let n = values.len() as f64;
    let mut hist = vec![0u64; support as usize + 1];
    for &v in values {
        hist[v as usize] += 1;
    }
    let value = tv_of_counts(&hist, n, &poisson, tail);

    let mut rng = CounterRng::stream(batch.master_seed, 0, StreamRole::Bootstrap);
    let mut boot = crate::estimate::Moments::default();
    let mut resampled = vec![0u64; hist.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        resampled.iter_mut().for_each(|h| *h = 0);
        for _ in 0..values.len() {
            let v = values[rng.below(values.len() as u64) as usize];
            resampled[v as usize] += 1;
        }
        boot.push(tv_of_counts(&resampled, n, &poisson, tail));
    }

    let bias: f64 = 0.5
        * poisson
            .iter()
            .map(|&q| binomial_mean_abs_dev(values.len() as u64, q) / n)
            .sum::<f64>();
    let std_error = math::sqrt(boot.variance());
    let adjusted = value - bias;
    Ok(TvEstimate {
        value,
        std_error,
        bias_bound: bias,
        adjusted,
        upper: adjusted.max(0.0) + 3.0 * std_error,
        support,
    })
}

/// `sup_z |F(z) - Φ(z)|` for the empirical CDF `F` of `(x - mean)/sqrt(var)`,
/// checked on both sides of every jump.
pub fn kolmogorov_to_normal(batch: &ReplicateBatch, mean: f64, var: f64) -> Result<f64> {
    let xs: Vec<f64> = batch.values.iter().map(|&v| v as f64).collect();
    kolmogorov_distance(&xs, mean, var)
}

pub(crate) fn kolmogorov_distance(xs: &[f64], mean: f64, var: f64) -> Result<f64> {
    ensure!(var > 0.0 && var.is_finite(), "variance must be positive, got {var}");
    ensure!(!xs.is_empty(), "empty sample");
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let sd = math::sqrt(var);
    let mut best = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let below = i as f64 / n;
        while i < sorted.len() && sorted[i] == x {
            i += 1;
        }
        let at = i as f64 / n;
        let phi = normal_cdf((x - mean) / sd);
        best = best.max(math::abs(below - phi)).max(math::abs(at - phi));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `Q_KS(λ) = 2 Σ_{j>=1} (-1)^{j-1} exp(-2 j² λ²)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = math::exp(-2.0 * (j * j) as f64 * lambda * lambda);
        sum += sign * term;
        if term < 1e-16 * sum.abs().max(1e-300) {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value
/// `Q_KS((√m + 0.12 + 0.11/√m) D)`, `m = n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    ensure!(!a.is_empty() && !b.is_empty(), "both samples must be nonempty");
    ensure!(
        a.iter().chain(b).all(|x| x.is_finite()),
        "samples must be finite"
    );
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max(math::abs(i as f64 / na - j as f64 / nb));
    }
    let m = math::sqrt(na * nb / (na + nb));
    let p_value = kolmogorov_tail((m + 0.12 + 0.11 / m) * d);
    Ok(KsResult { statistic: d, p_value })
}
