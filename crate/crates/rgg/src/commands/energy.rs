use rgg_core::geometry::{
    quasi_grav_energy, scaled_shell_energy, Configuration, EnergyQuadrature, DEFAULT_ANGULAR_NODES,
    DEFAULT_SPHERE_NODES,
};
use serde_json::{json, Value};

use super::{echo, required, resolve_seed, Output, RunOptions};
use crate::output::{num, ResultRecord};
use crate::{config, CliError, CliResult};

crate::params! {
    /// Energy g(z) and, given r, its finite-radius version g_r(z).
    pub struct EnergyParams {
        /// Dimension
        d: usize,
        /// Points z_1..z_m: coordinates separated by commas, points by semicolons, e.g. "1,0;0,1"
        z: String,
        /// Radius for g_r; needs r * max|z_i| <= 1
        r: f64,
        /// Quadrature nodes for g [default: 4096 angles for d = 2, 200000 directions for d >= 3]
        nodes: usize,
        /// Monte Carlo directions for g_r [default: 100000]
        samples: u64,
        /// Master seed; drawn from entropy and printed when absent
        seed: u64,
    }
}

pub fn parse_points(d: usize, text: &str) -> CliResult<Configuration> {
    let mut coords = Vec::new();
    for (i, point) in text.split(';').enumerate() {
        let xs: Vec<f64> = point
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::config(format!("z: point {i}: {e}")))?;
        if xs.len() != d {
            return Err(CliError::config(format!(
                "z: point {i} has {} coordinates, expected d = {d}",
                xs.len()
            )));
        }
        coords.extend(xs);
    }
    Ok(Configuration::from_flat(d, coords)?)
}

pub fn run(flags: &EnergyParams, opts: &RunOptions, warn: &mut dyn FnMut(String)) -> CliResult<Output> {
    let mut p: EnergyParams = config::resolve(opts.config.as_deref(), flags, warn)?;
    let d = required(&p.d, "d")?;
    let z = parse_points(d, &required(&p.z, "z")?)?;
    let samples = *p.samples.get_or_insert(100_000);
    let seed = resolve_seed(&mut p.seed, warn);
    let quad = match d {
        1 => EnergyQuadrature::ClosedForm,
        2 => EnergyQuadrature::ExactAngular {
            nodes: *p.nodes.get_or_insert(DEFAULT_ANGULAR_NODES),
        },
        _ => EnergyQuadrature::SphereMonteCarlo {
            nodes: *p.nodes.get_or_insert(DEFAULT_SPHERE_NODES),
            seed,
        },
    };
    let g = quasi_grav_energy(&z, quad)?;
    let g_r = match p.r {
        Some(r) => {
            let e = scaled_shell_energy(&z, r, samples, seed)?;
            json!({
                "r": num(r),
                "value": num(e.value),
                "std_error": num(e.std_error),
                "abs_difference": num((e.value - g).abs()),
            })
        }
        None => Value::Null,
    };
    Ok(Output {
        record: ResultRecord {
            command: "energy".into(),
            parameters: echo(&p)?,
            seed,
            value: num(g),
            // sphere Monte Carlo carries an error this command does not estimate
            std_error: if d <= 2 { num(0.0) } else { Value::Null },
            diagnostics: json!({ "points": z.len(), "g_r": g_r }),
            wall_time_ms: None,
        },
        table: None,
    })
}
