//! Acceptance suite. Runs every criterion at full size, prints one
//! PASS/FAIL line each, and exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use rgg::commands::limit_law::{marginal, spread};
use rgg::Parallel;
use rgg_core::clusters::{brute_force_census, component_census, estimate_cluster_probability_with};
use rgg_core::constants::{alpha_closed_form, alpha_quadrature, estimate_alpha_with};
use rgg_core::geometry::{quasi_grav_energy, scaled_shell_energy, EnergyQuadrature};
use rgg_core::mecke::{estimate_binomial_mean_with, estimate_poisson_mean_with, uniform_asymptotic_mean, MeckeSpec};
use rgg_core::pointprocess::{sample_binomial, DomainSpec, ProcessKind};
use rgg_core::rng::CounterRng;
use rgg_core::stats::{
    conditioned_cluster_sample_with, dispersion_index, kolmogorov_to_normal, ks_two_sample, mean_var,
    run_replicates_at, run_replicates_with, sample_limit_law_with, tv_to_poisson, Regime, RegimeSchedule,
    DEFAULT_ATTEMPT_BUDGET,
};
use rgg_core::{Configuration, Estimate};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn mecke(kind: ProcessKind, n: f64, r: f64, k: usize, dom: DomainSpec, outer: u64, seed: u64) -> Result<Estimate, String> {
    let spec = MeckeSpec {
        n,
        r,
        k,
        dom,
        outer_samples: outer,
        volume_samples: 2000,
        seed,
    };
    let e = match kind {
        ProcessKind::Binomial => estimate_binomial_mean_with(&Parallel, &spec),
        _ => estimate_poisson_mean_with(&Parallel, &spec),
    };
    Ok(e.map_err(err)?.estimate)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn c1_closed_forms() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (d, k) in [(1, 2), (1, 3), (2, 2)] {
        let start = Instant::now();
        let a = estimate_alpha_with(&Parallel, d, k, 200_000, alpha_quadrature(d), 100 + k as u64).map_err(err)?;
        let exact = alpha_closed_form(d, k).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let pass = a.estimate.within(exact, 3.0) && secs < 60.0;
        ok &= pass;
        notes.push(format!(
            "a_{k}({d}) = {:.6} ± {:.1e} vs {exact:.6}, {secs:.1}s",
            a.estimate.value, a.estimate.std_error
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

fn c2_energy() -> Outcome {
    let mut rng = CounterRng::new(2);
    let quad = EnergyQuadrature::ExactAngular { nodes: 4096 };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = [rng.uniform_in(-5.0, 5.0), rng.uniform_in(-5.0, 5.0)];
        let z = Configuration::from_points(2, &[p]).map_err(err)?;
        let g = quasi_grav_energy(&z, quad).map_err(err)?;
        // θ_1 = 2
        let expected = 2.0 * (p[0] * p[0] + p[1] * p[1]).sqrt();
        worst = worst.max((g - expected).abs() / expected);
    }
    let mut exact_1d = true;
    for _ in 0..100 {
        let xs: Vec<f64> = (0..4).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
        let z = Configuration::from_flat(1, xs.clone()).map_err(err)?;
        let g = quasi_grav_energy(&z, EnergyQuadrature::ClosedForm).map_err(err)?;
        let pos = xs.iter().cloned().fold(0.0, f64::max);
        let neg = xs.iter().map(|x| -x).fold(0.0, f64::max);
        exact_1d &= g == pos + neg;
    }
    let z = Configuration::from_points(2, &[[1.0, 0.0], [0.0, 1.0], [-0.5, 0.3]]).map_err(err)?;
    let g = quasi_grav_energy(&z, quad).map_err(err)?;
    let rs = [0.2, 0.1, 0.05, 0.025];
    let mut gaps = Vec::new();
    for &r in &rs {
        gaps.push((scaled_shell_energy(&z, r, 400_000, 3).map_err(err)?.value - g).abs());
    }
    let slope = fitted_slope(&rs, &gaps);
    Ok((
        worst <= 1e-4 && exact_1d && slope >= 0.8,
        format!("max rel err {worst:.1e}, d=1 exact {exact_1d}, slope {slope:.3}"),
    ))
}

fn c3_pbm_trend() -> Outcome {
    let start = Instant::now();
    let alpha = estimate_alpha_with(&Parallel, 2, 2, 200_000, alpha_quadrature(2), 31).map_err(err)?.estimate;
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, lambda) in [4.0, 6.0, 8.0].into_iter().enumerate() {
        let p = estimate_cluster_probability_with(&Parallel, lambda, 2, 2, 500_000, 300 + i as u64).map_err(err)?;
        let se = (p.rescaled.std_error.powi(2) + alpha.std_error.powi(2)).sqrt();
        let gap = (p.rescaled.value - alpha.value).abs();
        let pass = gap <= 3.0 * se + 2.0 / lambda;
        ok &= pass;
        notes.push(format!("λ={lambda}: {:.4} ± {:.4}", p.rescaled.value, p.rescaled.std_error));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    Ok((ok, format!("{} vs α = {:.4}, {secs:.0}s", notes.join(", "), alpha.value)))
}

/// Area of `B_r((u, v)) ∩ [0, 1]^2`, by chords: `x = u + r sin t`.
fn disk_square_area(u: f64, v: f64, r: f64) -> f64 {
    const M: usize = 512;
    let mut total = 0.0;
    for i in 0..M {
        let t = -0.5 * PI + (i as f64 + 0.5) * PI / M as f64;
        let x = u + r * t.sin();
        if !(0.0..=1.0).contains(&x) {
            continue;
        }
        let h = r * t.cos();
        let chord = ((v + h).min(1.0) - (v - h).max(0.0)).max(0.0);
        total += chord * r * t.cos();
    }
    total * PI / M as f64
}

/// `n ∫ exp(-n |B_r(x) ∩ A|) dx` on the unit square by the midpoint rule on
/// one quarter.
fn isolated_mean_oracle(n: f64, r: f64) -> f64 {
    const Q: usize = 400;
    let h = 0.5 / Q as f64;
    let mut total = 0.0;
    for i in 0..Q {
        for j in 0..Q {
            let (u, v) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            total += (-n * disk_square_area(u, v, r)).exp();
        }
    }
    4.0 * n * total * h * h
}

fn c4_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = CounterRng::new(4);
    let mut mismatches = 0;
    for i in 0..500u64 {
        let d = 1 + rng.below(3) as usize;
        let n = 1 + rng.below(500) as usize;
        let r = rng.uniform_in(0.001, 0.3);
        let pts = sample_binomial(n, &DomainSpec::uniform_cube(d).map_err(err)?, 1000 + i).map_err(err)?.points;
        if component_census(&pts, r).map_err(err)? != brute_force_census(&pts, r).map_err(err)? {
            mismatches += 1;
        }
    }
    let dom = DomainSpec::uniform_cube(2).map_err(err)?;
    let mut within = 0;
    let mut worst_z: f64 = 0.0;
    for (i, (n, nthetar2)) in [50.0, 100.0, 200.0, 400.0, 800.0]
        .into_iter()
        .flat_map(|n| [(n, 1.0), (n, 2.5)])
        .enumerate()
    {
        let r = (nthetar2 / (n * PI)).sqrt();
        let e = mecke(ProcessKind::Poisson, n, r, 1, dom, 200_000, 40 + i as u64)?;
        let oracle = isolated_mean_oracle(n, r);
        let z = (e.value - oracle) / e.std_error;
        worst_z = worst_z.max(z.abs());
        if z.abs() <= 3.0 {
            within += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        mismatches == 0 && within == 10 && secs < 300.0,
        format!("census mismatches {mismatches}/500, grid oracle within 3σ {within}/10 (max |z| {worst_z:.2}), {secs:.0}s"),
    ))
}

fn c5_mean_law() -> Outcome {
    let dom = DomainSpec::uniform_cube(2).map_err(err)?;
    let sched = RegimeSchedule::for_domain(Regime::MildlyDense { b: 0.3 }, &dom).map_err(err)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for (j, kind) in [ProcessKind::Poisson, ProcessKind::Binomial].into_iter().enumerate() {
        let mut gaps = Vec::new();
        for (i, n) in [400.0, 1600.0].into_iter().enumerate() {
            let seed = 500 + 10 * j as u64 + i as u64;
            let batch = run_replicates_with(&Parallel, &sched, n, 1, &dom, kind, 4000, seed).map_err(err)?;
            let mv = mean_var(&batch).map_err(err)?;
            let m = mecke(kind, n, batch.r, 1, dom, 1_000_000, seed)?;
            let agree = Estimate::new(mv.mean, mv.se_mean, 0).agrees_with(&m, 3.0);
            ok &= agree;
            // rescaled mean against α_1 / 1 = 1
            let scale = uniform_asymptotic_mean(n, batch.r, 1, 2, 1.0, 1.0).map_err(err)?;
            gaps.push((mv.mean / scale - 1.0).abs());
            notes.push(format!("{kind:?} n={n}: {:.2} ± {:.2} vs {:.2}", mv.mean, mv.se_mean, m.value));
        }
        ok &= gaps[1] < gaps[0];
        notes.push(format!("gap {:.3} -> {:.3}", gaps[0], gaps[1]));
    }
    Ok((ok, notes.join("; ")))
}

fn c6_variance_law() -> Outcome {
    // n r = 6 on [0, 1]
    let dom = DomainSpec::uniform_cube(1).map_err(err)?;
    let n = 100_000.0;
    let r = 6.0 / n;
    let mut ok = true;
    let mut notes = Vec::new();
    for (j, kind) in [ProcessKind::Poisson, ProcessKind::Binomial].into_iter().enumerate() {
        let batch = run_replicates_at(&Parallel, n, r, 1, &dom, kind, 5000, 600 + j as u64).map_err(err)?;
        let mv = mean_var(&batch).map_err(err)?;
        let disp = dispersion_index(&batch).map_err(err)?;
        let pass = (0.85..=1.15).contains(&disp.value) && disp.within(1.0, 3.0);
        ok &= pass;
        notes.push(format!("{kind:?}: mean {:.3}, var/mean {:.3} ± {:.3}", mv.mean, disp.value, disp.std_error));
    }
    Ok((ok, format!("d=1, n r^d = 6, 5000 replicates; {}", notes.join("; "))))
}

fn c7_poisson_approximation() -> Outcome {
    let dom = DomainSpec::uniform_cube(1).map_err(err)?;
    let sched = RegimeSchedule::for_domain(Regime::MildlyDense { b: 0.9 }, &dom).map_err(err)?;
    let mut adjusted = Vec::new();
    let mut notes = Vec::new();
    for (i, n) in [200.0, 2000.0, 20000.0].into_iter().enumerate() {
        let seed = 700 + i as u64;
        let batch = run_replicates_with(&Parallel, &sched, n, 1, &dom, ProcessKind::Poisson, 100_000, seed).map_err(err)?;
        let m = mecke(ProcessKind::Poisson, n, batch.r, 1, dom, 200_000, seed)?;
        let tv = tv_to_poisson(&batch, m.value).map_err(err)?;
        adjusted.push(tv.adjusted);
        notes.push(format!("n={n}: {:.4} (se {:.4}, bias {:.4})", tv.adjusted, tv.std_error, tv.bias_bound));
    }
    let ok = *adjusted.last().unwrap() <= 0.05 && strictly_decreasing(&adjusted);
    Ok((ok, format!("d=1, b=0.9; {}", notes.join(", "))))
}

fn c8_clt() -> Outcome {
    let dom = DomainSpec::uniform_cube(2).map_err(err)?;
    let sched = RegimeSchedule::for_domain(Regime::MildlyDense { b: 0.3 }, &dom).map_err(err)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for (j, kind) in [ProcessKind::Poisson, ProcessKind::Binomial].into_iter().enumerate() {
        let mut dks = Vec::new();
        for (i, n) in [50.0, 800.0, 12800.0].into_iter().enumerate() {
            let seed = 800 + 10 * j as u64 + i as u64;
            let batch = run_replicates_with(&Parallel, &sched, n, 1, &dom, kind, 10_000, seed).map_err(err)?;
            let m = mecke(kind, n, batch.r, 1, dom, 1_000_000, seed)?;
            let mv = mean_var(&batch).map_err(err)?;
            let dk = kolmogorov_to_normal(&batch, m.value, mv.var).map_err(err)?;
            if m.value >= 30.0 {
                ok &= dk <= 0.08;
            }
            dks.push(dk);
        }
        ok &= strictly_decreasing(&dks);
        notes.push(format!("{kind:?}: {:.4}, {:.4}, {:.4}", dks[0], dks[1], dks[2]));
    }
    Ok((ok, format!("d=2, b=0.3, n=50,800,12800; {}", notes.join("; "))))
}

fn c9_limit_law() -> Outcome {
    let limit = sample_limit_law_with(&Parallel, 1, 2, 4, 100_000, 10, 900).map_err(err)?;
    let reference: Vec<f64> = spread(&limit.configurations, 2000).iter().map(marginal).collect();
    let mut stats = Vec::new();
    for (i, lambda) in [2.0, 8.0].into_iter().enumerate() {
        let c = conditioned_cluster_sample_with(&Parallel, lambda, 1, 2, 2000, DEFAULT_ATTEMPT_BUDGET, 910 + i as u64)
            .map_err(err)?;
        let xs: Vec<f64> = c.draws.iter().map(marginal).collect();
        stats.push(ks_two_sample(&xs, &reference).map_err(err)?);
    }
    let ok = !limit.flagged && stats[1].p_value >= 0.01 && stats[1].statistic < stats[0].statistic;
    Ok((
        ok,
        format!(
            "λ=8: D={:.4} p={:.3}; λ=2: D={:.4}; MCMC acceptance {:.2}",
            stats[1].statistic, stats[1].p_value, stats[0].statistic, limit.acceptance_rate
        ),
    ))
}

fn c10_sparse() -> Outcome {
    let dom = DomainSpec::uniform_cube(2).map_err(err)?;
    let sched = RegimeSchedule::for_domain(Regime::Sparse { gamma: 0.6 }, &dom).map_err(err)?;
    let mut notes = Vec::new();
    let mut last = (0.0, 0.0);
    for (i, n) in [1e3, 1e4, 1e5].into_iter().enumerate() {
        let batch = run_replicates_with(&Parallel, &sched, n, 2, &dom, ProcessKind::Poisson, 1000, 1000 + i as u64)
            .map_err(err)?;
        let mv = mean_var(&batch).map_err(err)?;
        // ∫ f² = 1 on the uniform square
        let target = n * (n * batch.r * batch.r) * PI / 2.0;
        let disp = dispersion_index(&batch).map_err(err)?;
        last = (mv.mean / target, disp.value);
        notes.push(format!("n={n:e}: ratio {:.3}, var/mean {:.3}", last.0, last.1));
    }
    let ok = (last.0 - 1.0).abs() <= 0.1 && (0.85..=1.15).contains(&last.1);
    Ok((ok, format!("d=2, k=2, γ=0.6; {}", notes.join(", "))))
}

fn run_cli(args: &[String], threads: &str, csv: &std::path::Path) -> Result<(Vec<u8>, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rgg"))
        .args(args)
        .arg("--csv")
        .arg(csv)
        .env("RGG_THREADS", threads)
        .output()
        .map_err(err)?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok((out.stdout, std::fs::read(csv).unwrap_or_default()))
}

fn c11_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("rgg-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(err)?;
    let grid = "--d 1 --b 0.5 --n-grid 100,400 --replicates 200 --outer 20000 --seed 1";
    let commands = [
        "alpha --d 2 --k 3 --samples 20000 --seed 1".to_string(),
        "energy --d 3 --z 1,0,0;0,1,0 --r 0.1 --samples 20000 --seed 1".to_string(),
        "pbm --d 2 --k 2 --lambda-grid 2,4 --replicates 20000 --seed 1".to_string(),
        "rgg --d 2 --n 500 --b 0.3 --replicates 200 --seed 1".to_string(),
        "rgg --d 2 --n 500 --r 0.05 --process binomial --density affine --slope -0.4 --replicates 200 --seed 1".to_string(),
        "mecke --d 2 --k 2 --n 300 --b 0.3 --outer 20000 --seed 1".to_string(),
        "mecke --d 2 --n 200 --r 0.05 --shape ball --process binomial --outer 20000 --seed 1".to_string(),
        format!("verify mean {grid}"),
        format!("verify variance {grid}"),
        format!("verify poisson {grid}"),
        format!("verify clt {grid}"),
        format!("verify lln {grid}"),
        "verify compression --d 1 --k 3 --lambda-grid 2,4 --draws 200 --seed 1".to_string(),
        "limit-law --d 2 --k 2 --steps 10000 --lambda 4 --draws 300 --seed 1".to_string(),
    ];
    let mut differing = Vec::new();
    for cmd in &commands {
        let args: Vec<String> = cmd.split_whitespace().map(String::from).collect();
        let a = run_cli(&args, "1", &dir.join("a.csv"))?;
        let b = run_cli(&args, "1", &dir.join("b.csv"))?;
        let c = run_cli(&args, "4", &dir.join("c.csv"))?;
        if a != b || a != c {
            differing.push(args[0].clone());
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok((
        differing.is_empty(),
        format!("{} invocations, differing: {differing:?}", commands.len()),
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("C1", "closed-form constants", c1_closed_forms),
        ("C2", "energy identities", c2_energy),
        ("C3", "Boolean-model rescaling trend", c3_pbm_trend),
        ("C4", "oracle equivalence", c4_oracles),
        ("C5", "mean law", c5_mean_law),
        ("C6", "variance law", c6_variance_law),
        ("C7", "Poisson approximation", c7_poisson_approximation),
        ("C8", "normal approximation", c8_clt),
        ("C9", "conditional limit law", c9_limit_law),
        ("C10", "sparse regime", c10_sparse),
        ("C11", "CLI determinism", c11_determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('C')).collect();
    let mut failed = 0;
    let total = Instant::now();
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{id:<4} {name:<31} {}  [{:.1}s] {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed, {:.0}s total", total.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
