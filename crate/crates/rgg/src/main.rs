use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rgg::commands::{alpha, energy, limit_law, mecke, pbm, rgg as graph, verify, Output, RunOptions};
use rgg::{parallel, CliResult};

/// Fixed-order clusters in random geometric graphs and the Poisson Boolean
/// model. Every run prints one JSON record; `--csv` also writes the row table.
/// Set RGG_THREADS to fix the number of worker threads; results do not depend
/// on it.
#[derive(Parser, Debug)]
#[command(name = "rgg", version)]
struct Cli {
    #[command(flatten)]
    opts: RunOptions,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limit constant alpha_k
    Alpha(alpha::AlphaParams),
    /// Energy g(z) and its finite-radius version
    Energy(energy::EnergyParams),
    /// Cluster-size probabilities of the Boolean model over an intensity grid
    Pbm(pbm::PbmParams),
    /// Replicated component counts of a random geometric graph
    Rgg(graph::RggParams),
    /// Exact finite-n mean component count
    Mecke(mecke::MeckeParams),
    /// Empirical checks of the limit theorems over a grid
    Verify {
        #[arg(value_enum)]
        check: verify::Check,
        #[command(flatten)]
        params: verify::VerifyParams,
    },
    /// Limit law of scaled clusters
    LimitLaw(limit_law::LimitLawParams),
}

fn dispatch(cli: &Cli, warn: &mut dyn FnMut(String)) -> CliResult<Output> {
    let o = &cli.opts;
    match &cli.command {
        Command::Alpha(p) => alpha::run(p, o, warn),
        Command::Energy(p) => energy::run(p, o, warn),
        Command::Pbm(p) => pbm::run(p, o, warn),
        Command::Rgg(p) => graph::run(p, o, warn),
        Command::Mecke(p) => mecke::run(p, o, warn),
        Command::Verify { check, params } => verify::run(*check, params, o, warn),
        Command::LimitLaw(p) => limit_law::run(p, o, warn),
    }
}

fn emit(out: &Output, opts: &RunOptions) -> CliResult<()> {
    let json = out.record.to_json()?;
    match &opts.output {
        Some(path) => std::fs::write(path, json)?,
        None => std::io::stdout().lock().write_all(json.as_bytes())?,
    }
    if let Some(path) = &opts.csv {
        match &out.table {
            Some(t) => t.write_file(path)?,
            None => eprintln!("warning: `{}` has no table; --csv ignored", out.record.command),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = parallel::init_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let start = Instant::now();
    let result = dispatch(&cli, &mut |w| eprintln!("{w}")).and_then(|mut out| {
        if cli.opts.timing {
            out.record.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        emit(&out, &cli.opts)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

