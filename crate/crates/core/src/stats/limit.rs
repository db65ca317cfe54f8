use alloc::vec;
use alloc::vec::Vec;

use crate::clusters::{grow_origin_cluster, scaled_non_origin, truncated_poisson};
use crate::error::ensure;
use crate::exec::{Executor, Sequential};
use crate::geometry::{lex_cmp, norm, Configuration, EnergyEvaluator, EnergyQuadrature};
use crate::math::{self, ball_volume_any};
use crate::rng::{CounterRng, StreamRole};
use crate::{Error, Result};

pub const DEFAULT_THIN: usize = 10;
const TUNE_WINDOW: usize = 50;

/// Draws from the density proportional to `exp(-g(z))` on `(R^d)^{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLawSample {
    /// Each configuration lists its `k - 1` points in increasing
    /// lexicographic order.
    pub configurations: Vec<Configuration>,
    /// Post-burn-in acceptance rate pooled over chains.
    pub acceptance_rate: f64,
    /// Batch-means effective sample size of `Σ_i |z_i|`, summed over chains.
    pub effective_samples: f64,
    /// Final proposal scale of each chain.
    pub step_scales: Vec<f64>,
    /// Set when the acceptance rate left `(0.1, 0.6)`.
    pub flagged: bool,
}

fn mcmc_quadrature(d: usize) -> EnergyQuadrature {
    match d {
        1 => EnergyQuadrature::ClosedForm,
        2 => EnergyQuadrature::ExactAngular { nodes: 1024 },
        _ => EnergyQuadrature::SphereMonteCarlo { nodes: 4096, seed: 0 },
    }
}

pub fn sample_limit_law(d: usize, k: usize, chains: usize, steps: usize, seed: u64) -> Result<LimitLawSample> {
    sample_limit_law_with(&Sequential, d, k, chains, steps, DEFAULT_THIN, seed)
}

pub fn sample_limit_law_thinned(
    d: usize,
    k: usize,
    chains: usize,
    steps: usize,
    thin: usize,
    seed: u64,
) -> Result<LimitLawSample> {
    sample_limit_law_with(&Sequential, d, k, chains, steps, thin, seed)
}

struct ChainOutput {
    states: Vec<Vec<f64>>,
    accepted: usize,
    proposed: usize,
    ess: f64,
    scale: f64,
}

/// Random-walk Metropolis, one chain per work unit. The first fifth of each
/// chain is burn-in, during which the Gaussian step scale is adapted every
/// 50 steps towards an acceptance rate in `[0.2, 0.4]`; afterwards every
/// `thin`-th state is kept.
pub fn sample_limit_law_with<E: Executor>(
    exec: &E,
    d: usize,
    k: usize,
    chains: usize,
    steps: usize,
    thin: usize,
    seed: u64,
) -> Result<LimitLawSample> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    ensure!(k >= 2, "limit law needs k >= 2, got {k}");
    ensure!(chains >= 1, "need at least one chain");
    ensure!(steps >= 10_000, "need at least 10^4 steps per chain, got {steps}");
    ensure!(thin >= 1, "thinning interval must be positive");
    let energy = EnergyEvaluator::new(d, mcmc_quadrature(d))?;
    let m = k - 1;
    let burn = steps / 5;
    let outputs = exec.map(chains, |c| {
        let mut rng = CounterRng::stream(seed, c as u64, StreamRole::Chain);
        let rate = ball_volume_any(d - 1);
        let mut z = vec![0.0; m * d];
        for p in z.chunks_exact_mut(d) {
            rng.direction(p);
            let rho: f64 = (0..d).map(|_| rng.exponential()).sum::<f64>() / rate;
            p.iter_mut().for_each(|x| *x *= rho);
        }
        let mut g = energy.eval(&z);
        let mut proposal = z.clone();
        let mut scale = 1.0;
        let mut window = 0;
        let (mut accepted, mut proposed) = (0, 0);
        let mut states = Vec::new();
        let mut trace = Vec::new();
        for t in 0..steps {
            for (y, x) in proposal.iter_mut().zip(&z) {
                *y = x + scale * rng.normal();
            }
            let g_new = energy.eval(&proposal);
            let accept = math::ln(rng.open_uniform()) < g - g_new;
            if accept {
                core::mem::swap(&mut z, &mut proposal);
                g = g_new;
            }
            if t < burn {
                window += accept as usize;
                if (t + 1) % TUNE_WINDOW == 0 {
                    let rate = window as f64 / TUNE_WINDOW as f64;
                    if rate < 0.2 {
                        scale *= 0.7;
                    } else if rate > 0.4 {
                        scale *= 1.4;
                    }
                    window = 0;
                }
                continue;
            }
            proposed += 1;
            accepted += accept as usize;
            if (t - burn).is_multiple_of(thin) {
                trace.push(z.chunks_exact(d).map(norm).sum::<f64>());
                let mut pts: Vec<&[f64]> = z.chunks_exact(d).collect();
                pts.sort_by(|a, b| lex_cmp(a, b));
                states.push(pts.concat());
            }
        }
        ChainOutput {
            ess: batch_means_ess(&trace),
            states,
            accepted,
            proposed,
            scale,
        }
    });
    let mut configurations = Vec::new();
    let (mut accepted, mut proposed) = (0, 0);
    let mut ess = 0.0;
    let mut step_scales = Vec::with_capacity(chains);
    for out in outputs {
        accepted += out.accepted;
        proposed += out.proposed;
        ess += out.ess;
        step_scales.push(out.scale);
        configurations.extend(out.states.into_iter().map(|s| Configuration::from_flat_unchecked(d, s)));
    }
    let acceptance_rate = accepted as f64 / proposed.max(1) as f64;
    Ok(LimitLawSample {
        configurations,
        acceptance_rate,
        effective_samples: ess,
        step_scales,
        flagged: !(acceptance_rate > 0.1 && acceptance_rate < 0.6),
    })
}

/// Effective sample size from batch means with `sqrt(n)`-sized batches.
fn batch_means_ess(trace: &[f64]) -> f64 {
    let n = trace.len();
    let b = (math::sqrt(n as f64) as usize).max(1);
    let batches = n / b;
    if batches < 2 {
        return n as f64;
    }
    let used = batches * b;
    let mean = trace[..used].iter().sum::<f64>() / used as f64;
    let var = trace[..used].iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (used - 1) as f64;
    if var == 0.0 {
        return used as f64;
    }
    let bvar = trace[..used]
        .chunks_exact(b)
        .map(|c| {
            let m = c.iter().sum::<f64>() / b as f64;
            (m - mean) * (m - mean)
        })
        .sum::<f64>()
        / (batches - 1) as f64;
    (used as f64 * var / (b as f64 * bvar)).min(used as f64)
}

pub const DEFAULT_ATTEMPT_BUDGET: u64 = 100_000_000;

/// Origin clusters conditioned on having exactly `k` points.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedClusters {
    /// `λ (C(λ) \ {o})` per draw, points in increasing lexicographic order.
    pub draws: Vec<Configuration>,
    /// Origin clusters the plain rejection loop would have drawn, including
    /// those skipped because the origin had `k` or more neighbors.
    pub attempts: u64,
    /// Origin clusters actually simulated.
    pub simulated: u64,
    /// Fewer than the requested draws were produced.
    pub budget_exhausted: bool,
}

pub fn conditioned_cluster_sample(
    lambda: f64,
    d: usize,
    k: usize,
    draws_wanted: usize,
    seed: u64,
) -> Result<ConditionedClusters> {
    conditioned_cluster_sample_with(&Sequential, lambda, d, k, draws_wanted, DEFAULT_ATTEMPT_BUDGET, seed)
}

/// Rejection sampling of `C(λ)` given `|C(λ)| = k`.
///
/// Attempts whose origin has `k` or more neighbors cannot succeed, so their
/// number before the next useful attempt is drawn directly from the
/// geometric law, and only the remaining attempts are simulated with the
/// neighbor count conditioned to be below `k`. Each draw is an independent
/// task. `budget` caps the total number of simulated clusters; draws are
/// kept in task order up to the point where the cap is reached.
pub fn conditioned_cluster_sample_with<E: Executor>(
    exec: &E,
    lambda: f64,
    d: usize,
    k: usize,
    draws_wanted: usize,
    budget: u64,
    seed: u64,
) -> Result<ConditionedClusters> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    ensure!(k >= 1, "cluster order k must be at least 1");
    ensure!(lambda > 0.0 && lambda.is_finite(), "intensity must be positive and finite");
    ensure!(draws_wanted >= 1, "need at least one draw");
    ensure!(budget >= 1, "attempt budget must be positive");
    let mu = lambda * ball_volume_any(d);
    let mass = (math::exp(-mu) * crate::clusters::scaled_poisson_head(mu, k)).min(1.0);
    let ln_fail = math::ln1p(-mass);
    let results = exec.map(draws_wanted, |i| {
        let mut rng = CounterRng::stream(seed, i as u64, StreamRole::Attempt);
        let (mut attempts, mut simulated) = (0u64, 0u64);
        loop {
            if simulated >= budget {
                return (None, attempts, simulated);
            }
            let skipped = if mass >= 1.0 {
                0
            } else {
                let g = math::floor(math::ln(rng.open_uniform()) / ln_fail);
                if g >= u64::MAX as f64 { u64::MAX } else { g as u64 }
            };
            attempts = attempts.saturating_add(skipped).saturating_add(1);
            let n0 = truncated_poisson(&mut rng, mu, k as u64 - 1);
            let key = rng.next_u64();
            simulated += 1;
            if let Some(c) = grow_origin_cluster(lambda, d, k, key, Some(n0)) {
                if c.len() / d == k {
                    return (Some(scaled_non_origin(&c, d, lambda)), attempts, simulated);
                }
            }
        }
    });
    let mut out = ConditionedClusters {
        draws: Vec::with_capacity(draws_wanted),
        attempts: 0,
        simulated: 0,
        budget_exhausted: false,
    };
    for (draw, attempts, simulated) in results {
        if draw.is_none() || out.simulated + simulated > budget {
            out.budget_exhausted = true;
            break;
        }
        out.attempts = out.attempts.saturating_add(attempts);
        out.simulated += simulated;
        out.draws.extend(draw);
    }
    if out.draws.is_empty() {
        return Err(Error::BudgetExhausted { attempts: out.attempts.max(budget) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clusters::{cluster_diameter, estimate_cluster_probability};
    use crate::stats::ks_two_sample;

    #[test]
    fn laplace_target_moments() {
        let s = sample_limit_law(1, 2, 4, 50_000, 3).unwrap();
        assert!(!s.flagged, "{s:?}");
        let xs: Vec<f64> = s.configurations.iter().map(|c| c.point(0)[0].abs()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        // |z| ~ Exp(1): sd 1
        let se = 1.0 / s.effective_samples.sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn planar_radial_law() {
        let s = sample_limit_law(2, 2, 2, 40_000, 5).unwrap();
        assert!(!s.flagged);
        let rs: Vec<f64> = s.configurations.iter().map(|c| norm(c.point(0))).collect();
        let mean = rs.iter().sum::<f64>() / rs.len() as f64;
        // Gamma(2, 2): mean 1, sd 1/sqrt(2)
        let se = (0.5f64).sqrt() / s.effective_samples.sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn limit_law_is_deterministic_and_sorted() {
        let a = sample_limit_law(2, 3, 2, 10_000, 1).unwrap();
        let b = sample_limit_law(2, 3, 2, 10_000, 1).unwrap();
        assert_eq!(a, b);
        for c in &a.configurations {
            assert_eq!(c.len(), 2);
            assert_ne!(lex_cmp(c.point(0), c.point(1)), core::cmp::Ordering::Greater);
        }
        assert!(sample_limit_law(2, 1, 1, 10_000, 1).is_err());
        assert!(sample_limit_law(2, 2, 1, 9_999, 1).is_err());
    }

    #[test]
    fn ess_of_independent_draws_is_near_length() {
        let mut rng = CounterRng::new(1);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.normal()).collect();
        let ess = batch_means_ess(&xs);
        assert!(ess > 5000.0, "{ess}");
        let ar: Vec<f64> = xs
            .iter()
            .scan(0.0, |s, x| {
                *s = 0.95 * *s + x;
                Some(*s)
            })
            .collect();
        assert!(batch_means_ess(&ar) < 1000.0);
    }

    #[test]
    fn singleton_clusters_are_empty() {
        let c = conditioned_cluster_sample(3.0, 2, 1, 5, 1).unwrap();
        assert_eq!(c.draws.len(), 5);
        assert!(c.draws.iter().all(|d| d.is_empty()));
    }

    #[test]
    fn attempts_per_draw_match_cluster_probability() {
        let (lambda, d, k) = (2.0, 1, 2);
        let c = conditioned_cluster_sample(lambda, d, k, 4000, 7).unwrap();
        let p = estimate_cluster_probability(lambda, d, k, 200_000, 8).unwrap();
        let per_draw = c.attempts as f64 / c.draws.len() as f64;
        let expected = 1.0 / p.probability.value;
        // geometric attempts: relative sd about 1/sqrt(draws)
        assert!((per_draw / expected - 1.0).abs() < 0.06, "{per_draw} vs {expected}");
        for draw in &c.draws {
            assert_eq!(draw.len(), 1);
            assert!(draw.point(0)[0].abs() <= lambda);
        }
    }

    #[test]
    fn budget_exhaustion() {
        // pairs are impossible to find in a handful of attempts at high intensity
        let r = conditioned_cluster_sample_with(&Sequential, 30.0, 2, 2, 3, 5, 1);
        assert!(matches!(r, Err(Error::BudgetExhausted { .. })));
        let partial = conditioned_cluster_sample_with(&Sequential, 1.0, 1, 2, 200, 300, 1).unwrap();
        assert!(partial.budget_exhausted && !partial.draws.is_empty() && partial.draws.len() < 200);
        assert!(partial.simulated <= 300);
    }

    #[test]
    fn conditioned_pairs_approach_the_limit_law() {
        let lim = sample_limit_law(1, 2, 4, 25_000, 2).unwrap();
        let target: Vec<f64> = lim.configurations.iter().step_by(4).take(2000).map(|c| c.point(0)[0]).collect();
        let hi = conditioned_cluster_sample(8.0, 1, 2, 2000, 3).unwrap();
        let xs: Vec<f64> = hi.draws.iter().map(|c| c.point(0)[0]).collect();
        assert!(ks_two_sample(&xs, &target).unwrap().p_value > 0.01);
        let diam: Vec<f64> = hi
            .draws
            .iter()
            .map(|c| {
                let mut full = Configuration::from_points(1, &[[0.0]]).unwrap();
                full.push(c.point(0));
                cluster_diameter(&full).unwrap()
            })
            .collect();
        assert!(diam.iter().all(|&x| x <= 8.0));
    }
}
