use rgg_core::constants::{alpha_closed_form, alpha_quadrature, estimate_alpha_with, DEFAULT_ALPHA_SAMPLES};
use rgg_core::geometry::EnergyQuadrature;
use serde_json::json;

use super::{echo, required, resolve_seed, Output, RunOptions};
use crate::output::{num, ResultRecord};
use crate::{config, CliResult, Parallel};

crate::params! {
    /// Limit constant alpha_k by importance sampling.
    pub struct AlphaParams {
        /// Dimension
        d: usize,
        /// Cluster order, at least 2
        k: usize,
        /// Importance samples, at least 10^4 [default: 200000]
        samples: u64,
        /// Quadrature nodes for g; angles when d = 2, directions when d >= 3 [default: 1024 / 2048]
        nodes: usize,
        /// Master seed; drawn from entropy and printed when absent
        seed: u64,
    }
}

pub fn run(flags: &AlphaParams, opts: &RunOptions, warn: &mut dyn FnMut(String)) -> CliResult<Output> {
    let mut p: AlphaParams = config::resolve(opts.config.as_deref(), flags, warn)?;
    let d = required(&p.d, "d")?;
    let k = required(&p.k, "k")?;
    let samples = *p.samples.get_or_insert(DEFAULT_ALPHA_SAMPLES);
    let quad = match (alpha_quadrature(d.max(1)), p.nodes) {
        (EnergyQuadrature::ExactAngular { .. }, Some(nodes)) => EnergyQuadrature::ExactAngular { nodes },
        (EnergyQuadrature::SphereMonteCarlo { seed, .. }, Some(nodes)) => {
            EnergyQuadrature::SphereMonteCarlo { nodes, seed }
        }
        (q, _) => q,
    };
    let seed = resolve_seed(&mut p.seed, warn);
    let a = estimate_alpha_with(&Parallel, d, k, samples, quad, seed)?;
    Ok(Output {
        record: ResultRecord {
            command: "alpha".into(),
            parameters: echo(&p)?,
            seed,
            value: num(a.estimate.value),
            std_error: num(a.estimate.std_error),
            diagnostics: json!({
                "closed_form": alpha_closed_form(d, k).map(num),
                "max_weight_share": num(a.max_weight_share),
                "reliable": a.reliable,
                "proposal_rate": num(a.proposal_rate),
                "samples": a.estimate.samples,
            }),
            wall_time_ms: None,
        },
        table: None,
    })
}
