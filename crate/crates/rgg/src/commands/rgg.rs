use std::collections::BTreeMap;

use rgg_core::clusters::component_census;
use rgg_core::pointprocess::{sample_binomial, sample_poisson_on_domain, ProcessKind};
use rgg_core::rng::{derive_key, StreamRole};
use rgg_core::stats::{dispersion_index, mean_var, run_replicates_at};
use serde_json::json;

use super::{build_domain, echo, required, resolve_seed, DensityArg, Output, ProcessArg, RadiusRule, RunOptions, ShapeArg};
use crate::output::{num, ResultRecord, Table};
use crate::{config, CliResult, Parallel};

crate::params! {
    /// Replicated k-component counts of a random geometric graph on a domain.
    pub struct RggParams {
        /// Dimension
        d: usize,
        /// Component order [default: 1]
        k: usize,
        /// Poisson mean count, or number of points for a binomial process
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
        /// Point process [default: poisson]
        process: ProcessArg,
        /// Number of replicates [default: 1000]
        replicates: usize,
        /// Master seed; drawn from entropy and printed when absent
        seed: u64,
    }
}

pub fn run(flags: &RggParams, opts: &RunOptions, warn: &mut dyn FnMut(String)) -> CliResult<Output> {
    let mut p: RggParams = config::resolve(opts.config.as_deref(), flags, warn)?;
    let d = required(&p.d, "d")?;
    let k = *p.k.get_or_insert(1);
    let n = required(&p.n, "n")?;
    let dom = build_domain(d, &mut p.shape, &mut p.density, &mut p.slope)?;
    let r = RadiusRule::new(p.r, p.b, p.gamma, &dom)?.radius(n, k)?;
    let kind: ProcessKind = (*p.process.get_or_insert(ProcessArg::Poisson)).into();
    let reps = *p.replicates.get_or_insert(1000);
    let seed = resolve_seed(&mut p.seed, warn);

    let batch = run_replicates_at(&Parallel, n, r, k, &dom, kind, reps, seed)?;
    // full census of the first replicate
    let s0 = derive_key(seed, 0, StreamRole::Replicate);
    let first = match kind {
        ProcessKind::Binomial => sample_binomial(n as usize, &dom, s0)?,
        _ => sample_poisson_on_domain(n, &dom, s0)?,
    };
    let census = component_census(&first.points, r)?;
    let census: BTreeMap<usize, u64> = census.counts().clone();

    let mut table = Table::new(&["replicate", "count"]);
    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
    for (i, v) in batch.values.iter().enumerate() {
        table.push([i as u64, *v]);
        *hist.entry(*v).or_default() += 1;
    }
    let (mean, se, spread) = if reps >= 3 {
        let mv = mean_var(&batch)?;
        let disp = dispersion_index(&batch).ok();
        (
            mv.mean,
            num(mv.se_mean),
            json!({
                "var": num(mv.var),
                "var_std_error": num(mv.se_var),
                "var_over_mean": disp.map(|e| num(e.value)),
                "var_over_mean_std_error": disp.map(|e| num(e.std_error)),
            }),
        )
    } else {
        let m = batch.values.iter().sum::<u64>() as f64 / reps as f64;
        (m, serde_json::Value::Null, serde_json::Value::Null)
    };
    Ok(Output {
        record: ResultRecord {
            command: "rgg".into(),
            parameters: echo(&p)?,
            seed,
            value: num(mean),
            std_error: se,
            diagnostics: json!({
                "r": num(r),
                "n_r_d": num(n * r.powi(d as i32)),
                "spread": spread,
                "count_histogram": hist,
                "first_replicate_census": census,
                "first_replicate_points": first.points.len(),
            }),
            wall_time_ms: None,
        },
        table: Some(table),
    })
}
