use rgg_core::rng::{derive_key, StreamRole};
use rgg_core::stats::{
    conditioned_cluster_sample_with, ks_two_sample, sample_limit_law_with, DEFAULT_ATTEMPT_BUDGET, DEFAULT_THIN,
};
use rgg_core::Configuration;
use serde_json::{json, Value};

use super::{echo, fmt, required, resolve_seed, Output, RunOptions};
use crate::output::{num, ResultRecord, Table};
use crate::{CliResult, Parallel, config};

crate::params! {
    /// Sampler for the limit law of scaled k-clusters, optionally compared with simulated clusters at one intensity.
    pub struct LimitLawParams {
        /// Dimension
        d: usize,
        /// Cluster order, at least 2
        k: usize,
        /// Independent Metropolis chains [default: 4]
        chains: usize,
        /// Steps per chain, at least 10^4 [default: 100000]
        steps: usize,
        /// Keep every thin-th state after burn-in [default: 10]
        thin: usize,
        /// Intensity of the Boolean model to compare against; no comparison when absent
        lambda: f64,
        /// Draws per side of the two-sample test [default: 2000]
        draws: usize,
        /// Master seed; drawn from entropy and printed when absent
        seed: u64,
    }
}

/// The compared marginal: first coordinate of the lexicographically
/// smallest point.
pub fn marginal(c: &Configuration) -> f64 {
    c.point(0)[0]
}

/// `m` states evenly spread over the chain output.
pub fn spread<T: Clone>(xs: &[T], m: usize) -> Vec<T> {
    if xs.len() <= m {
        return xs.to_vec();
    }
    (0..m).map(|i| xs[i * xs.len() / m].clone()).collect()
}

fn push_rows(t: &mut Table, source: &str, cs: &[Configuration]) {
    for (i, c) in cs.iter().enumerate() {
        for (j, x) in c.points().enumerate() {
            let mut row = vec![source.to_string(), i.to_string(), j.to_string()];
            row.extend(x.iter().map(|v| fmt(*v)));
            t.push(row);
        }
    }
}

pub fn run(flags: &LimitLawParams, opts: &RunOptions, warn: &mut dyn FnMut(String)) -> CliResult<Output> {
    let mut p: LimitLawParams = config::resolve(opts.config.as_deref(), flags, warn)?;
    let d = required(&p.d, "d")?;
    let k = required(&p.k, "k")?;
    let chains = *p.chains.get_or_insert(4);
    let steps = *p.steps.get_or_insert(100_000);
    let thin = *p.thin.get_or_insert(DEFAULT_THIN);
    let seed = resolve_seed(&mut p.seed, warn);
    let s = sample_limit_law_with(&Parallel, d, k, chains, steps, thin, derive_key(seed, 0, StreamRole::Chain))?;

    let mut header: Vec<String> = ["source", "draw", "point"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=d).map(|a| format!("x{a}")));
    let mut table = Table { header, rows: Vec::new() };
    push_rows(&mut table, "limit", &s.configurations);

    let mean_norm_sum = s
        .configurations
        .iter()
        .map(|c| c.points().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).sum::<f64>())
        .sum::<f64>()
        / s.configurations.len() as f64;
    let mut diagnostics = json!({
        "acceptance_rate": num(s.acceptance_rate),
        "effective_samples": num(s.effective_samples),
        "flagged": s.flagged,
        "step_scales": s.step_scales.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "kept_states": s.configurations.len(),
        "mean_sum_of_norms": num(mean_norm_sum),
    });
    let (value, std_error) = match p.lambda {
        None => (num(mean_norm_sum), Value::Null),
        Some(lambda) => {
            let draws = *p.draws.get_or_insert(2000);
            let key = derive_key(seed, 1, StreamRole::Attempt);
            let c = conditioned_cluster_sample_with(&Parallel, lambda, d, k, draws, DEFAULT_ATTEMPT_BUDGET, key)?;
            push_rows(&mut table, "cluster", &c.draws);
            let a: Vec<f64> = c.draws.iter().map(marginal).collect();
            let b: Vec<f64> = spread(&s.configurations, draws).iter().map(marginal).collect();
            let ks = ks_two_sample(&a, &b)?;
            diagnostics["comparison"] = json!({
                "lambda": num(lambda),
                "cluster_draws": a.len(),
                "limit_draws": b.len(),
                "attempts": c.attempts,
                "simulated": c.simulated,
                "budget_exhausted": c.budget_exhausted,
                "ks_p_value": num(ks.p_value),
                "marginal": "first coordinate of the lexicographically smallest point",
            });
            (num(ks.statistic), Value::Null)
        }
    };
    Ok(Output {
        record: ResultRecord {
            command: "limit-law".into(),
            parameters: echo(&p)?,
            seed,
            value,
            std_error,
            diagnostics,
            wall_time_ms: None,
        },
        table: Some(table),
    })
}
