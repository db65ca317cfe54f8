use clap::ValueEnum;
use rgg_core::clusters::cluster_diameter;
use rgg_core::geometry::unit_ball_volume;
use rgg_core::mecke::{estimate_binomial_mean_with, estimate_poisson_mean_with, log_mean_scaling, MeckeSpec};
use rgg_core::pointprocess::{DomainSpec, ProcessKind};
use rgg_core::rng::{derive_key, StreamRole};
use rgg_core::stats::{
    conditioned_cluster_sample_with, dispersion_index, kolmogorov_to_normal, mean_var, run_replicates_at,
    tv_to_poisson, ReplicateBatch, DEFAULT_ATTEMPT_BUDGET,
};
use rgg_core::{Configuration, Estimate};
use serde_json::{json, Value};

use super::mecke::{alpha_value, predictor};
use super::{build_domain, echo, fmt, required, resolve_seed, DensityArg, Output, ProcessArg, RadiusRule, RunOptions, ShapeArg};
use crate::output::{num, ResultRecord, Table};
use crate::{config, CliError, CliResult, Parallel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Replicate means against the Mecke mean and the asymptotic constant
    Mean,
    /// Variance-to-mean ratio with jackknife bands
    Variance,
    /// Total variation distance to the Poisson law
    Poisson,
    /// Kolmogorov distance to the normal law
    Clt,
    /// Log-scaling of the mean count
    Lln,
    /// Scaled diameter of conditioned Boolean-model clusters
    Compression,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Mean => "mean",
            Check::Variance => "variance",
            Check::Poisson => "poisson",
            Check::Clt => "clt",
            Check::Lln => "lln",
            Check::Compression => "compression",
        }
    }
}

crate::params! {
    /// Parameters shared by the verification checks; each check reads the ones it needs.
    pub struct VerifyParams {
        /// Dimension
        d: usize,
        /// Component order [default: 1; 2 for compression]
        k: usize,
        /// Mildly dense schedule n*theta*r^d = b*log(n)
        b: f64,
        /// Sparse schedule r = n^(-(1+gamma)/d)
        gamma: f64,
        /// Values of n, comma separated
        #[arg(value_delimiter = ',')]
        n_grid: Vec<f64>,
        /// Sampling region [default: cube]
        shape: ShapeArg,
        /// Density on the region [default: uniform]
        density: DensityArg,
        /// Slope of the affine density 1 + slope*x_1, in (-1, 1) [default: 0]
        #[arg(allow_negative_numbers = true)]
        slope: f64,
        /// Point process [default: poisson]
        process: ProcessArg,
        /// Replicates per n [default: 1000]
        replicates: usize,
        /// Outer samples of each Mecke mean [default: 100000]
        outer: u64,
        /// Samples per ball-union measure where it is not exact [default: 2000]
        volume_samples: u64,
        /// Intensities for compression, comma separated [default: 4,8,16]
        #[arg(value_delimiter = ',')]
        lambda_grid: Vec<f64>,
        /// Conditioned clusters per intensity for compression [default: 2000]
        draws: usize,
        /// Compression threshold on lambda * diameter [default: 20]
        threshold: f64,
        /// Master seed; drawn from entropy and printed when absent
        seed: u64,
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn non_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

struct GridPoint {
    n: f64,
    r: f64,
    batch: ReplicateBatch,
}

struct Setup {
    d: usize,
    k: usize,
    dom: DomainSpec,
    kind: ProcessKind,
    seed: u64,
    outer: u64,
    volume_samples: u64,
}

impl Setup {
    fn mecke(&self, i: usize, n: f64, r: f64) -> CliResult<Estimate> {
        let spec = MeckeSpec {
            n,
            r,
            k: self.k,
            dom: self.dom,
            outer_samples: self.outer,
            volume_samples: self.volume_samples,
            seed: derive_key(self.seed, i as u64, StreamRole::Volume),
        };
        let e = match self.kind {
            ProcessKind::Binomial => estimate_binomial_mean_with(&Parallel, &spec)?,
            _ => estimate_poisson_mean_with(&Parallel, &spec)?,
        };
        Ok(e.estimate)
    }
}

pub fn run(check: Check, flags: &VerifyParams, opts: &RunOptions, warn: &mut dyn FnMut(String)) -> CliResult<Output> {
    let mut p: VerifyParams = config::resolve(opts.config.as_deref(), flags, warn)?;
    let d = required(&p.d, "d")?;
    if check == Check::Compression {
        return compression(p, d, warn);
    }
    let k = *p.k.get_or_insert(1);
    let grid = required(&p.n_grid, "n_grid")?;
    let dom = build_domain(d, &mut p.shape, &mut p.density, &mut p.slope)?;
    let rule = RadiusRule::new(None, p.b, p.gamma, &dom)?;
    let kind: ProcessKind = (*p.process.get_or_insert(ProcessArg::Poisson)).into();
    let reps = *p.replicates.get_or_insert(1000);
    let needs_mecke = matches!(check, Check::Mean | Check::Poisson | Check::Clt);
    if needs_mecke {
        p.outer.get_or_insert(100_000);
        p.volume_samples.get_or_insert(2000);
    }
    let setup = Setup {
        d,
        k,
        dom,
        kind,
        seed: resolve_seed(&mut p.seed, warn),
        outer: p.outer.unwrap_or(100_000),
        volume_samples: p.volume_samples.unwrap_or(2000),
    };
    let mut points = Vec::with_capacity(grid.len());
    for (i, &n) in grid.iter().enumerate() {
        let r = rule.radius(n, k)?;
        let s = derive_key(setup.seed, i as u64, StreamRole::Replicate);
        let batch = run_replicates_at(&Parallel, n, r, k, &dom, kind, reps, s)?;
        points.push(GridPoint { n, r, batch });
    }
    let (table, primary, summary) = match check {
        Check::Mean => mean_rows(&setup, &points)?,
        Check::Variance => variance_rows(&setup, &points)?,
        Check::Poisson => poisson_rows(&setup, &points)?,
        Check::Clt => clt_rows(&setup, &points)?,
        Check::Lln => lln_rows(&setup, &points)?,
        Check::Compression => unreachable!(),
    };
    finish(check, &p, setup.seed, table, primary, summary)
}

fn finish(
    check: Check,
    p: &VerifyParams,
    seed: u64,
    table: Table,
    primary: Vec<(f64, f64)>,
    summary: Value,
) -> CliResult<Output> {
    Ok(Output {
        record: ResultRecord {
            command: format!("verify {}", check.name()),
            parameters: echo(p)?,
            seed,
            value: Value::Array(primary.iter().map(|x| num(x.0)).collect()),
            std_error: Value::Array(primary.iter().map(|x| num(x.1)).collect()),
            diagnostics: json!({ "summary": summary, "rows": table.to_json() }),
            wall_time_ms: None,
        },
        table: Some(table),
    })
}

fn n_r_d(pt: &GridPoint, d: usize) -> f64 {
    pt.n * pt.r.powi(d as i32)
}

type Rows = (Table, Vec<(f64, f64)>, Value);

fn mean_rows(s: &Setup, points: &[GridPoint]) -> CliResult<Rows> {
    let mut t = Table::new(&[
        "n", "r", "n_r_d", "mean", "mean_std_error", "mecke_mean", "mecke_std_error", "z_score", "agrees",
        "rescaled_mean", "limit", "rescaled_gap",
    ]);
    let alpha = if s.dom.is_uniform() { Some(alpha_value(s.d, s.k, s.seed)?) } else { None };
    let mut out = Vec::new();
    let (mut gaps, mut all_agree) = (Vec::new(), true);
    for (i, pt) in points.iter().enumerate() {
        let mv = mean_var(&pt.batch)?;
        let m = s.mecke(i, pt.n, pt.r)?;
        let se = (mv.se_mean.powi(2) + m.std_error.powi(2)).sqrt();
        let z = (mv.mean - m.value) / se;
        let agrees = z.abs() <= 3.0;
        all_agree &= agrees;
        let (rescaled, limit, gap) = match alpha {
            Some(a) => {
                let scale = predictor(&s.dom, pt.n, pt.r, s.k, a)?.unwrap_or(f64::NAN) / (a / s.k as f64);
                let lim = a / s.k as f64;
                let resc = mv.mean / scale;
                (resc, lim, (resc - lim).abs())
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        gaps.push(gap);
        t.push([
            fmt(pt.n), fmt(pt.r), fmt(n_r_d(pt, s.d)), fmt(mv.mean), fmt(mv.se_mean), fmt(m.value),
            fmt(m.std_error), fmt(z), agrees.to_string(), fmt(rescaled), fmt(limit), fmt(gap),
        ]);
        out.push((mv.mean, mv.se_mean));
    }
    let summary = json!({
        "all_agree": all_agree,
        "gap_shrinks": gaps.len() >= 2 && gaps.last() < gaps.first(),
    });
    Ok((t, out, summary))
}

fn variance_rows(s: &Setup, points: &[GridPoint]) -> CliResult<Rows> {
    let mut t = Table::new(&[
        "n", "r", "n_r_d", "mean", "var", "var_over_mean", "var_over_mean_std_error", "covers_one", "in_band",
    ]);
    let mut out = Vec::new();
    let mut ok = true;
    for pt in points {
        let mv = mean_var(&pt.batch)?;
        let disp = dispersion_index(&pt.batch)?;
        let covers = (disp.value - 1.0).abs() <= 3.0 * disp.std_error;
        let band = (0.85..=1.15).contains(&disp.value);
        ok &= covers && band;
        t.push([
            fmt(pt.n), fmt(pt.r), fmt(n_r_d(pt, s.d)), fmt(mv.mean), fmt(mv.var), fmt(disp.value),
            fmt(disp.std_error), covers.to_string(), band.to_string(),
        ]);
        out.push((disp.value, disp.std_error));
    }
    Ok((t, out, json!({ "band": [0.85, 1.15], "all_within": ok })))
}

fn poisson_rows(s: &Setup, points: &[GridPoint]) -> CliResult<Rows> {
    let mut t = Table::new(&[
        "n", "r", "n_r_d", "mecke_mean", "tv", "tv_std_error", "bias_bound", "adjusted", "upper",
    ]);
    let mut out = Vec::new();
    for (i, pt) in points.iter().enumerate() {
        let m = s.mecke(i, pt.n, pt.r)?;
        let tv = tv_to_poisson(&pt.batch, m.value)?;
        t.push([
            pt.n, pt.r, n_r_d(pt, s.d), m.value, tv.value, tv.std_error, tv.bias_bound, tv.adjusted, tv.upper,
        ]
        .map(fmt));
        out.push((tv.adjusted, tv.std_error));
    }
    let adj: Vec<f64> = out.iter().map(|x| x.0).collect();
    Ok((t, out, json!({ "strictly_decreasing": strictly_decreasing(&adj) })))
}

fn clt_rows(s: &Setup, points: &[GridPoint]) -> CliResult<Rows> {
    let mut t = Table::new(&["n", "r", "n_r_d", "mecke_mean", "mean", "var", "kolmogorov"]);
    let mut out = Vec::new();
    for (i, pt) in points.iter().enumerate() {
        let m = s.mecke(i, pt.n, pt.r)?;
        let mv = mean_var(&pt.batch)?;
        let dk = kolmogorov_to_normal(&pt.batch, m.value, mv.var)?;
        t.push([pt.n, pt.r, n_r_d(pt, s.d), m.value, mv.mean, mv.var, dk].map(fmt));
        // the Kolmogorov distance has no closed-form error
        out.push((dk, f64::NAN));
    }
    let dk: Vec<f64> = out.iter().map(|x| x.0).collect();
    Ok((t, out, json!({ "strictly_decreasing": strictly_decreasing(&dk) })))
}

fn lln_rows(s: &Setup, points: &[GridPoint]) -> CliResult<Rows> {
    let theta = unit_ball_volume(s.d)?;
    let target = -theta * s.dom.extremes().f0;
    let mut t = Table::new(&["n", "r", "n_r_d", "mean", "statistic", "target", "gap"]);
    let mut out = Vec::new();
    for pt in points {
        let mv = mean_var(&pt.batch)?;
        if mv.mean <= 0.0 {
            return Err(CliError::Core(rgg_core::Error::NonFinite("log of a zero mean count")));
        }
        let stat = log_mean_scaling(pt.n, pt.r, s.d, mv.mean)?;
        // delta method
        let se = mv.se_mean / mv.mean / n_r_d(pt, s.d);
        t.push([pt.n, pt.r, n_r_d(pt, s.d), mv.mean, stat, target, (stat - target).abs()].map(fmt));
        out.push((stat, se));
    }
    let gaps: Vec<f64> = out.iter().map(|x| (x.0 - target).abs()).collect();
    Ok((t, out, json!({ "target": num(target), "gap_strictly_decreasing": strictly_decreasing(&gaps) })))
}

fn compression(mut p: VerifyParams, d: usize, warn: &mut dyn FnMut(String)) -> CliResult<Output> {
    let k = *p.k.get_or_insert(2);
    let grid = p.lambda_grid.get_or_insert_with(|| vec![4.0, 8.0, 16.0]).clone();
    let draws = *p.draws.get_or_insert(2000);
    let threshold = *p.threshold.get_or_insert(20.0);
    let seed = resolve_seed(&mut p.seed, warn);
    let mut t = Table::new(&[
        "lambda", "draws", "attempts", "fraction_above", "mean_scaled_diameter", "max_scaled_diameter",
    ]);
    let mut out = Vec::new();
    for (i, &lambda) in grid.iter().enumerate() {
        let s = derive_key(seed, i as u64, StreamRole::Replicate);
        let c = conditioned_cluster_sample_with(&Parallel, lambda, d, k, draws, DEFAULT_ATTEMPT_BUDGET, s)?;
        let mut diams = Vec::with_capacity(c.draws.len());
        for z in &c.draws {
            // the draws omit the origin
            let mut full = Configuration::empty(d);
            full.push(&vec![0.0; d]);
            for x in z.points() {
                full.push(x);
            }
            diams.push(cluster_diameter(&full)?);
        }
        let m = diams.len() as f64;
        let frac = diams.iter().filter(|&&x| x > threshold).count() as f64 / m;
        let mean = diams.iter().sum::<f64>() / m;
        let max = diams.iter().cloned().fold(0.0, f64::max);
        t.push([fmt(lambda), diams.len().to_string(), c.attempts.to_string(), fmt(frac), fmt(mean), fmt(max)]);
        out.push((frac, (frac * (1.0 - frac) / m).sqrt()));
    }
    let fr: Vec<f64> = out.iter().map(|x| x.0).collect();
    let summary = json!({
        "strictly_decreasing": strictly_decreasing(&fr),
        "non_increasing": non_increasing(&fr),
    });
    finish(Check::Compression, &p, seed, t, out, summary)
}
