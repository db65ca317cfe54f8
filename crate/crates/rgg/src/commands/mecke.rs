use rgg_core::constants::{alpha_closed_form, estimate_alpha_with, DEFAULT_ALPHA_SAMPLES};
use rgg_core::mecke::{
    estimate_binomial_mean_with, estimate_poisson_mean_with, log_mean_scaling, uniform_asymptotic_mean,
    MeckeSpec,
};
use rgg_core::pointprocess::DomainSpec;
use rgg_core::constants::alpha_quadrature;
use rgg_core::rng::{derive_key, StreamRole};
use serde_json::{json, Value};

use super::{build_domain, echo, required, resolve_seed, DensityArg, Output, ProcessArg, RadiusRule, RunOptions, ShapeArg};
use crate::output::{num, ResultRecord};
use crate::{config, CliResult, Parallel};

crate::params! {
    /// Exact mean number of k-components at finite n, by the Mecke formula.
    pub struct MeckeParams {
        /// Dimension
        d: usize,
        /// Component order [default: 1]
        k: usize,
        /// Poisson intensity scale, or number of points for a binomial process
        n: f64,
        /// Connection radius
        r: f64,
        /// Mildly dense schedule n*theta*r^d = b*log(n), instead of r
        b: f64,
        /// Sparse schedule r = n^(-(1+gamma)/d), instead of r
        gamma: f64,
        /// Sampling region [default: cube]
        shape: ShapeArg,
        /// Density on the region [default: uniform]
        density: DensityArg,
        /// Slope of the affine density 1 + slope*x_1, in (-1, 1) [default: 0]
        #[arg(allow_negative_numbers = true)]
        slope: f64,
        /// Point process whose mean is computed [default: poisson]
        process: ProcessArg,
        /// Outer Monte Carlo samples [default: 100000]
        outer: u64,
        /// Samples per ball-union measure where it is not exact [default: 2000]
        volume_samples: u64,
        /// alpha_k for the asymptotic predictor; closed form or estimated when absent
        alpha: f64,
        /// Master seed; drawn from entropy and printed when absent
        seed: u64,
    }
}

/// `α_k`, from the closed form when there is one.
pub fn alpha_value(d: usize, k: usize, seed: u64) -> CliResult<f64> {
    if let Some(a) = alpha_closed_form(d, k) {
        return Ok(a);
    }
    let s = derive_key(seed, 0, StreamRole::Proposal);
    Ok(estimate_alpha_with(&Parallel, d, k, DEFAULT_ALPHA_SAMPLES, alpha_quadrature(d), s)?
        .estimate
        .value)
}

/// Uniform-density predictor, or `None` for non-uniform domains.
pub fn predictor(dom: &DomainSpec, n: f64, r: f64, k: usize, alpha: f64) -> CliResult<Option<f64>> {
    if !dom.is_uniform() {
        return Ok(None);
    }
    let f0 = dom.extremes().f0;
    Ok(Some(uniform_asymptotic_mean(n, r, k, dom.dim(), f0, alpha)?))
}

pub fn run(flags: &MeckeParams, opts: &RunOptions, warn: &mut dyn FnMut(String)) -> CliResult<Output> {
    let mut p: MeckeParams = config::resolve(opts.config.as_deref(), flags, warn)?;
    let d = required(&p.d, "d")?;
    let k = *p.k.get_or_insert(1);
    let n = required(&p.n, "n")?;
    let dom = build_domain(d, &mut p.shape, &mut p.density, &mut p.slope)?;
    let r = RadiusRule::new(p.r, p.b, p.gamma, &dom)?.radius(n, k)?;
    let process = *p.process.get_or_insert(ProcessArg::Poisson);
    let spec = MeckeSpec {
        n,
        r,
        k,
        dom,
        outer_samples: *p.outer.get_or_insert(100_000),
        volume_samples: *p.volume_samples.get_or_insert(2000),
        seed: resolve_seed(&mut p.seed, warn),
    };
    let est = match process {
        ProcessArg::Poisson => estimate_poisson_mean_with(&Parallel, &spec)?,
        ProcessArg::Binomial => estimate_binomial_mean_with(&Parallel, &spec)?,
    };
    let alpha = match (p.alpha, dom.is_uniform()) {
        (Some(a), _) => Some(a),
        (None, true) => Some(alpha_value(d, k, spec.seed)?),
        (None, false) => None,
    };
    let pred = match alpha {
        Some(a) => predictor(&dom, n, r, k, a)?,
        None => None,
    };
    let log_scaling = if est.estimate.value > 0.0 {
        num(log_mean_scaling(n, r, d, est.estimate.value)?)
    } else {
        Value::Null
    };
    Ok(Output {
        record: ResultRecord {
            command: "mecke".into(),
            parameters: echo(&p)?,
            seed: spec.seed,
            value: num(est.estimate.value),
            std_error: num(est.estimate.std_error),
            diagnostics: json!({
                "r": num(r),
                "n_r_d": num(n * r.powi(d as i32)),
                "curvature_bound": num(est.curvature_bound),
                "connected_fraction": num(est.connected_fraction),
                "alpha_k": alpha.map(num),
                "asymptotic_predictor": pred.map(num),
                "log_mean_scaling": log_scaling,
                "f0": num(dom.extremes().f0),
            }),
            wall_time_ms: None,
        },
        table: None,
    })
}
