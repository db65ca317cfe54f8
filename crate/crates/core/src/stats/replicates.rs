use alloc::vec::Vec;

use crate::clusters::component_census;
use crate::error::ensure;
use crate::exec::{Executor, Sequential};
use crate::math;
use crate::pointprocess::{sample_binomial, sample_poisson_on_domain, DomainSpec, ProcessKind};
use crate::rng::{derive_key, StreamRole};
use crate::stats::RegimeSchedule;
use crate::{Estimate, Result};

/// Realized `k`-component counts of independent replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateBatch {
    pub values: Vec<u64>,
    pub n: f64,
    pub r: f64,
    pub k: usize,
    pub kind: ProcessKind,
    pub master_seed: u64,
}

pub fn run_replicates(
    sched: &RegimeSchedule,
    n: f64,
    k: usize,
    dom: &DomainSpec,
    kind: ProcessKind,
    replicates: usize,
    seed: u64,
) -> Result<ReplicateBatch> {
    run_replicates_with(&Sequential, sched, n, k, dom, kind, replicates, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn run_replicates_with<E: Executor>(
    exec: &E,
    sched: &RegimeSchedule,
    n: f64,
    k: usize,
    dom: &DomainSpec,
    kind: ProcessKind,
    replicates: usize,
    seed: u64,
) -> Result<ReplicateBatch> {
    ensure!(sched.dim() == dom.dim(), "schedule and domain differ in dimension");
    let r = sched.radius(n, k)?;
    run_replicates_at(exec, n, r, k, dom, kind, replicates, seed)
}

/// Replicates at an explicit radius.
#[allow(clippy::too_many_arguments)]
pub fn run_replicates_at<E: Executor>(
    exec: &E,
    n: f64,
    r: f64,
    k: usize,
    dom: &DomainSpec,
    kind: ProcessKind,
    replicates: usize,
    seed: u64,
) -> Result<ReplicateBatch> {
    ensure!(replicates >= 1, "need at least one replicate");
    ensure!(k >= 1, "cluster order k must be at least 1");
    ensure!(r > 0.0 && r.is_finite(), "radius must be positive, got {r}");
    match kind {
        ProcessKind::Poisson => ensure!(n > 0.0 && n.is_finite(), "n must be positive, got {n}"),
        ProcessKind::Binomial => ensure!(
            n >= 1.0 && math::floor(n) == n,
            "binomial replicates need an integer n >= 1, got {n}"
        ),
        ProcessKind::Homogeneous => ensure!(false, "replicates run on a domain, not a window"),
    }
    let values = exec
        .map(replicates, |i| {
            let s = derive_key(seed, i as u64, StreamRole::Replicate);
            let sample = match kind {
                ProcessKind::Binomial => sample_binomial(n as usize, dom, s)?,
                _ => sample_poisson_on_domain(n, dom, s)?,
            };
            Ok(component_census(&sample.points, r)?.count(k))
        })
        .into_iter()
        .collect::<Result<Vec<u64>>>()?;
    Ok(ReplicateBatch {
        values,
        n,
        r,
        k,
        kind,
        master_seed: seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanVar {
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    pub se_mean: f64,
    /// Jackknife standard error of `var`.
    pub se_var: f64,
}

struct Sums {
    n: f64,
    s1: f64,
    s2: f64,
}

impl Sums {
    fn of(values: &[u64]) -> Self {
        let mut s1 = math::KahanSum::default();
        let mut s2 = math::KahanSum::default();
        for &v in values {
            let x = v as f64;
            s1.add(x);
            s2.add(x * x);
        }
        Self {
            n: values.len() as f64,
            s1: s1.value(),
            s2: s2.value(),
        }
    }

    /// Mean and unbiased variance with `x` left out (`x = None` keeps all).
    fn moments(&self, x: Option<f64>) -> (f64, f64) {
        let (n, s1, s2) = match x {
            Some(x) => (self.n - 1.0, self.s1 - x, self.s2 - x * x),
            None => (self.n, self.s1, self.s2),
        };
        let mean = s1 / n;
        let var = ((s2 - s1 * mean) / (n - 1.0)).max(0.0);
        (mean, var)
    }
}

/// Jackknife standard error of `stat` from its leave-one-out values.
fn jackknife<F: Fn(f64, f64) -> f64>(values: &[u64], sums: &Sums, stat: F) -> f64 {
    let n = values.len() as f64;
    // values are small integers, so leave-one-out statistics repeat a lot
    let mut distinct: Vec<(u64, u64)> = Vec::new();
    let mut sorted: Vec<u64> = values.to_vec();
    sorted.sort_unstable();
    for v in sorted {
        match distinct.last_mut() {
            Some((x, c)) if *x == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let loo: Vec<(f64, f64)> = distinct
        .iter()
        .map(|&(v, c)| {
            let (m, s) = sums.moments(Some(v as f64));
            (stat(m, s), c as f64)
        })
        .collect();
    let avg = loo.iter().map(|(t, c)| t * c).sum::<f64>() / n;
    let ss: f64 = loo.iter().map(|(t, c)| c * (t - avg) * (t - avg)).sum();
    math::sqrt((n - 1.0) / n * ss)
}

/// Sample mean and variance with standard errors.
pub fn mean_var(batch: &ReplicateBatch) -> Result<MeanVar> {
    let values = &batch.values;
    ensure!(values.len() >= 2, "need at least two values, got {}", values.len());
    let sums = Sums::of(values);
    let (mean, var) = sums.moments(None);
    let se_var = if values.len() == 2 {
        // normal-theory fallback; leave-one-out variances are undefined
        var * math::sqrt(2.0)
    } else {
        jackknife(values, &sums, |_, v| v)
    };
    Ok(MeanVar {
        mean,
        var,
        se_mean: math::sqrt(var / sums.n),
        se_var,
    })
}

/// Variance-to-mean ratio with a jackknife standard error.
pub fn dispersion_index(batch: &ReplicateBatch) -> Result<Estimate> {
    let values = &batch.values;
    ensure!(values.len() >= 3, "need at least three values, got {}", values.len());
    let sums = Sums::of(values);
    let (mean, var) = sums.moments(None);
    ensure!(mean > 0.0, "dispersion index needs a positive mean");
    let se = jackknife(values, &sums, |m, v| if m > 0.0 { v / m } else { 0.0 });
    Ok(Estimate::new(var / mean, se, values.len() as u64))
}
