//! The limit constants `α_k` and the sparse-regime connectivity integral.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::ensure;
use crate::estimate::{Estimate, Moments};
use crate::exec::{batches, Executor, Sequential, BATCH};
use crate::geometry::{is_connected, EnergyEvaluator, EnergyQuadrature};
use crate::math::{self, ball_volume_any};
use crate::rng::{derive_key, CounterRng, StreamRole};
use crate::{Error, Result};

/// Closed form of `α_k(d)` where one is known: `α_1 = 1`, `α_k(1) = k`, and
/// `α_2(d) = d! θ_d / θ_{d-1}^d`.
pub fn alpha_closed_form(d: usize, k: usize) -> Option<f64> {
    if d == 0 || k == 0 {
        return None;
    }
    match (d, k) {
        (_, 1) => Some(1.0),
        (1, k) => Some(k as f64),
        (d, 2) => Some(
            math::factorial(d as u32) * ball_volume_any(d) / math::powi(ball_volume_any(d - 1), d as i32),
        ),
        _ => None,
    }
}

/// Importance weights above this share of the total flag an estimate as
/// unreliable.
pub const MAX_WEIGHT_SHARE: f64 = 0.05;

pub const DEFAULT_ALPHA_SAMPLES: u64 = 200_000;

/// Energy quadrature used inside the `α_k` integrand: exact for `d = 1`,
/// 1024 angles for `d = 2`, 2048 directions for `d >= 3`.
pub fn alpha_quadrature(d: usize) -> EnergyQuadrature {
    match d {
        1 => EnergyQuadrature::ClosedForm,
        2 => EnergyQuadrature::ExactAngular { nodes: 1024 },
        _ => EnergyQuadrature::SphereMonteCarlo { nodes: 2048, seed: 0 },
    }
}

/// `α_k` together with importance-weight diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub estimate: Estimate,
    /// Largest single weight divided by the sum of all weights.
    pub max_weight_share: f64,
    pub reliable: bool,
    /// Proposal rate relative to `θ_{d-1}`.
    pub proposal_rate: f64,
}

/// Rate multiplier of the radial proposal. The weight of a draw grows like
/// `exp(γ θ_{d-1} Σ|z_i| - g(z))` and `g(z) >= θ_{d-1} max|z_i|`, so the
/// second moment is finite once `γ < 2 / (k - 1)`. For `k = 2` the choice
/// `γ = 1` makes the weight constant.
fn proposal_rate(k: usize) -> f64 {
    (1.5 / (k - 1) as f64).min(1.0)
}

/// Importance-sampling estimate of `α_k = (1/(k-1)!) ∫ exp(-g(z)) dz` over
/// `(R^d)^{k-1}`.
pub fn estimate_alpha(
    d: usize,
    k: usize,
    mc_samples: u64,
    quad: EnergyQuadrature,
    seed: u64,
) -> Result<Estimate> {
    Ok(estimate_alpha_with(&Sequential, d, k, mc_samples, quad, seed)?.estimate)
}

/// As [`estimate_alpha`], run on `exec`, with weight diagnostics.
///
/// Each point is drawn independently with a uniform direction and a
/// `Gamma(d, γ θ_{d-1})` radius. For `d = 2` every draw evaluates `g` on an
/// angular grid with a fresh random offset and for `d >= 3` on a freshly
/// rotated direction set, so quadrature error averages out rather than
/// biasing the result.
pub fn estimate_alpha_with<E: Executor>(
    exec: &E,
    d: usize,
    k: usize,
    mc_samples: u64,
    quad: EnergyQuadrature,
    seed: u64,
) -> Result<AlphaEstimate> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    ensure!(k >= 2, "cluster order k must be at least 2, got {k}");
    ensure!(mc_samples >= 10_000, "need at least 10^4 samples, got {mc_samples}");
    let energy = EnergyEvaluator::new(d, quad)?;
    let beta = ball_volume_any(d - 1);
    let gamma = proposal_rate(k);
    let rate = gamma * beta;
    let m = k - 1;
    // 1/q for one point at radius ρ is c * exp(rate * ρ)
    let ln_c = math::ln_factorial(d as u64) + math::ln(ball_volume_any(d)) - d as f64 * math::ln(rate);
    let rotate = matches!(quad, EnergyQuadrature::SphereMonteCarlo { .. });

    let parts = batches(mc_samples);
    let results: Vec<Option<(Moments, f64)>> = exec.map(parts.len(), |b| {
        let (index, size) = parts[b];
        let mut rng = CounterRng::stream(seed, index, StreamRole::Proposal);
        let mut z = vec![0.0; m * d];
        let mut scratch = Vec::new();
        let mut rotation = vec![0.0; d * d];
        let mut moments = Moments::default();
        for _ in 0..size {
            let mut radial = 0.0;
            for p in z.chunks_exact_mut(d) {
                rng.direction(p);
                let mut rho = 0.0;
                for _ in 0..d {
                    rho += rng.exponential();
                }
                rho /= rate;
                radial += rho;
                for x in p.iter_mut() {
                    *x *= rho;
                }
            }
            let g = match quad {
                EnergyQuadrature::ClosedForm => energy.eval(&z),
                EnergyQuadrature::ExactAngular { .. } => {
                    let shift = rng.uniform();
                    energy.eval_shifted(&z, shift, &mut scratch)
                }
                EnergyQuadrature::SphereMonteCarlo { .. } if rotate => {
                    random_rotation(&mut rng, d, &mut rotation);
                    scratch.clear();
                    for p in z.chunks_exact(d) {
                        for row in rotation.chunks_exact(d) {
                            scratch.push(row.iter().zip(p).map(|(a, b)| a * b).sum());
                        }
                    }
                    energy.eval(&scratch)
                }
                _ => energy.eval(&z),
            };
            let w = math::exp(m as f64 * ln_c + rate * radial - g);
            if !w.is_finite() {
                return None;
            }
            moments.push(w);
        }
        Some((moments, moments.max))
    });

    let mut total = Moments::default();
    for part in results {
        let (m, _) = part.ok_or(Error::NonFinite("importance weight"))?;
        total.merge(&m);
    }
    let norm = math::factorial(m as u32);
    let estimate = total.estimate().scaled(1.0 / norm);
    let share = if total.sum() > 0.0 { total.max / total.sum() } else { 1.0 };
    Ok(AlphaEstimate {
        estimate,
        max_weight_share: share,
        reliable: share < MAX_WEIGHT_SHARE,
        proposal_rate: gamma,
    })
}

/// Haar-distributed orthogonal matrix (row-major) by Gram-Schmidt on
/// Gaussian rows.
fn random_rotation(rng: &mut CounterRng, d: usize, out: &mut [f64]) {
    for i in 0..d {
        loop {
            for j in 0..d {
                out[i * d + j] = rng.normal();
            }
            for prev in 0..i {
                let (done, row) = out.split_at_mut(i * d);
                let q = &done[prev * d..(prev + 1) * d];
                let c: f64 = row[..d].iter().zip(q).map(|(a, b)| a * b).sum();
                for j in 0..d {
                    row[j] -= c * q[j];
                }
            }
            let n = math::sqrt(out[i * d..(i + 1) * d].iter().map(|x| x * x).sum());
            if n > 1e-8 {
                for x in &mut out[i * d..(i + 1) * d] {
                    *x /= n;
                }
                break;
            }
        }
    }
}

/// Monte Carlo estimate of `∫ h_1((o, x)) dx` over `(R^d)^{k-1}`: uniform
/// draws from `[-(k-1), k-1]^{d(k-1)}`, which contains every connected
/// configuration, times the box volume.
pub fn sparse_connectivity_constant(d: usize, k: usize, mc_samples: u64, seed: u64) -> Result<Estimate> {
    sparse_connectivity_constant_with(&Sequential, d, k, mc_samples, seed)
}

pub fn sparse_connectivity_constant_with<E: Executor>(
    exec: &E,
    d: usize,
    k: usize,
    mc_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    ensure!(k >= 2, "cluster order k must be at least 2, got {k}");
    ensure!(mc_samples > 0, "mc_samples must be positive");
    let half = (k - 1) as f64;
    let box_volume = math::powi(2.0 * half, (d * (k - 1)) as i32);
    let parts = batches(mc_samples);
    let hits: u64 = exec
        .map(parts.len(), |b| {
            let (index, size) = parts[b];
            let mut rng = CounterRng::new(derive_key(seed, index, StreamRole::Points));
            let mut pts = vec![0.0; k * d];
            let mut hits = 0u64;
            for _ in 0..size {
                for x in &mut pts[d..] {
                    *x = rng.uniform_in(-half, half);
                }
                if is_connected(&pts, d, 1.0) {
                    hits += 1;
                }
            }
            hits
        })
        .into_iter()
        .sum();
    debug_assert!(mc_samples >= BATCH || parts.len() == 1);
    let p = hits as f64 / mc_samples as f64;
    Ok(Estimate::new(
        box_volume * p,
        box_volume * math::sqrt(p * (1.0 - p) / mc_samples as f64),
        mc_samples,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn closed_forms() {
        assert_eq!(alpha_closed_form(7, 1), Some(1.0));
        assert_eq!(alpha_closed_form(1, 3), Some(3.0));
        assert!((alpha_closed_form(2, 2).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(alpha_closed_form(1, 2), Some(2.0));
        // α_2(3) = 3! (4π/3) / π^3
        assert!((alpha_closed_form(3, 2).unwrap() - 8.0 / (PI * PI)).abs() < 1e-14);
        assert_eq!(alpha_closed_form(2, 3), None);
        assert_eq!(alpha_closed_form(0, 2), None);
    }

    #[test]
    fn alpha_matches_closed_forms() {
        for (d, k) in [(1, 2), (1, 3), (2, 2)] {
            let e = estimate_alpha_with(&Sequential, d, k, 50_000, alpha_quadrature(d), 11).unwrap();
            let target = alpha_closed_form(d, k).unwrap();
            assert!(
                e.estimate.within(target, 3.0) || (e.estimate.value - target).abs() < 1e-12,
                "d={d} k={k}: {e:?}"
            );
            assert!(e.reliable, "{e:?}");
        }
    }

    #[test]
    fn alpha_rejects_bad_input() {
        assert!(estimate_alpha(0, 2, 10_000, EnergyQuadrature::ClosedForm, 0).is_err());
        assert!(estimate_alpha(1, 1, 10_000, EnergyQuadrature::ClosedForm, 0).is_err());
        assert!(estimate_alpha(1, 2, 9_999, EnergyQuadrature::ClosedForm, 0).is_err());
        assert!(estimate_alpha(2, 2, 10_000, EnergyQuadrature::ClosedForm, 0).is_err());
    }

    #[test]
    fn alpha_is_deterministic_in_seed() {
        let q = alpha_quadrature(2);
        let a = estimate_alpha(2, 3, 10_000, q, 5).unwrap();
        let b = estimate_alpha(2, 3, 10_000, q, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn alpha_standard_error_follows_root_n() {
        let mut ratio = 0.0;
        let reps = 20;
        for s in 0..reps {
            let a = estimate_alpha(1, 3, 10_000, EnergyQuadrature::ClosedForm, s).unwrap();
            let b = estimate_alpha(1, 3, 20_000, EnergyQuadrature::ClosedForm, 100 + s).unwrap();
            ratio += b.std_error / a.std_error;
        }
        ratio /= reps as f64;
        assert!((0.6..=0.82).contains(&ratio), "{ratio}");
    }

    #[test]
    fn weight_diagnostic_small_orders() {
        for d in 1..=3 {
            for k in 2..=4 {
                let e = estimate_alpha_with(&Sequential, d, k, 20_000, alpha_quadrature(d), 3).unwrap();
                assert!(e.reliable, "d={d} k={k}: {e:?}");
                assert!(e.estimate.value > 0.0);
            }
        }
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = CounterRng::new(1);
        let mut m = vec![0.0; 16];
        random_rotation(&mut rng, 4, &mut m);
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..4).map(|t| m[i * 4 + t] * m[j * 4 + t]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sparse_constant_two_points_is_ball_volume() {
        for d in 1..=3 {
            let e = sparse_connectivity_constant(d, 2, 200_000, 9).unwrap();
            assert!(e.within(ball_volume_any(d), 3.0), "d={d}: {e:?}");
        }
    }

    #[test]
    fn sparse_constant_three_points_on_line() {
        // grid oracle over [-2, 2]^2 of 1{(0, x, y) connected at r = 1}
        let m = 2000;
        let h = 4.0 / m as f64;
        let mut hits = 0u64;
        for i in 0..m {
            let x = -2.0 + (i as f64 + 0.5) * h;
            for j in 0..m {
                let y = -2.0 + (j as f64 + 0.5) * h;
                if is_connected(&[0.0, x, y], 1, 1.0) {
                    hits += 1;
                }
            }
        }
        let oracle = hits as f64 * h * h;
        // both in [-1, 1], or one chained through the other: 4 + 1 + 1
        assert!((oracle - 6.0).abs() < 0.01, "{oracle}");
        let e = sparse_connectivity_constant(1, 3, 200_000, 2).unwrap();
        assert!(e.within(oracle, 3.0), "{e:?}");
    }
}
