use rgg_core::clusters::estimate_cluster_probability_with;
use rgg_core::constants::alpha_closed_form;
use rgg_core::rng::{derive_key, StreamRole};
use serde_json::{json, Value};

use super::{echo, fmt, required, resolve_seed, Output, RunOptions};
use crate::output::{num, ResultRecord, Table};
use crate::{config, CliResult, Parallel};

crate::params! {
    /// Probability p_k(lambda) that the origin cluster of the Boolean model has k points.
    pub struct PbmParams {
        /// Dimension
        d: usize,
        /// Cluster order
        k: usize,
        /// Intensities, comma separated
        #[arg(value_delimiter = ',')]
        lambda_grid: Vec<f64>,
        /// Origin-cluster draws per intensity [default: 100000]
        replicates: u64,
        /// Master seed; drawn from entropy and printed when absent
        seed: u64,
    }
}

pub const COLUMNS: [&str; 8] = [
    "lambda",
    "p_hat",
    "p_std_error",
    "rescaled",
    "rescaled_std_error",
    "hits",
    "draws",
    "conditioning_mass",
];

pub fn run(flags: &PbmParams, opts: &RunOptions, warn: &mut dyn FnMut(String)) -> CliResult<Output> {
    let mut p: PbmParams = config::resolve(opts.config.as_deref(), flags, warn)?;
    let d = required(&p.d, "d")?;
    let k = required(&p.k, "k")?;
    let grid = required(&p.lambda_grid, "lambda_grid")?;
    let draws = *p.replicates.get_or_insert(100_000);
    let seed = resolve_seed(&mut p.seed, warn);
    let mut table = Table::new(&COLUMNS);
    let (mut values, mut errors) = (Vec::new(), Vec::new());
    for (i, &lambda) in grid.iter().enumerate() {
        let s = derive_key(seed, i as u64, StreamRole::Replicate);
        let e = estimate_cluster_probability_with(&Parallel, lambda, d, k, draws, s)?;
        table.push([
            fmt(lambda),
            fmt(e.probability.value),
            fmt(e.probability.std_error),
            fmt(e.rescaled.value),
            fmt(e.rescaled.std_error),
            e.hits.to_string(),
            e.draws.to_string(),
            fmt(e.conditioning_mass),
        ]);
        values.push(num(e.rescaled.value));
        errors.push(num(e.rescaled.std_error));
    }
    Ok(Output {
        record: ResultRecord {
            command: "pbm".into(),
            parameters: echo(&p)?,
            seed,
            value: Value::Array(values),
            std_error: Value::Array(errors),
            diagnostics: json!({
                "value_is": "lambda^((k-1)(d-1)) exp(theta_d lambda) p_hat per lambda",
                "limit_closed_form": alpha_closed_form(d, k).map(num),
                "columns": COLUMNS,
                "rows": table.to_json(),
            }),
            wall_time_ms: None,
        },
        table: Some(table),
    })
}
