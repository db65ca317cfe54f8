//! Subcommand implementations. Each command resolves its parameters (file,
//! flags, defaults, seed), runs the library, and returns a record plus an
//! optional CSV table.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rgg_core::pointprocess::{Density, DomainSpec, ProcessKind, Shape};
use rgg_core::stats::{Regime, RegimeSchedule};
use serde::{Deserialize, Serialize};

use crate::output::{ResultRecord, Table};
use crate::{CliError, CliResult};

pub mod alpha;
pub mod energy;
pub mod limit_law;
pub mod mecke;
pub mod pbm;
pub mod rgg;
pub mod verify;

/// Options that control where results go; not part of the echoed parameters.
#[derive(Args, Debug, Clone, Default)]
pub struct RunOptions {
    /// TOML file with parameters; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON record to this file instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Also write the per-row table as CSV (grid commands)
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Add wall_time_ms to the record (makes output run-dependent)
    #[arg(long, global = true)]
    pub timing: bool,
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Output {
    pub record: ResultRecord,
    pub table: Option<Table>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeArg {
    Cube,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityArg {
    Uniform,
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessArg {
    Poisson,
    Binomial,
}

impl From<ProcessArg> for ProcessKind {
    fn from(p: ProcessArg) -> Self {
        match p {
            ProcessArg::Poisson => ProcessKind::Poisson,
            ProcessArg::Binomial => ProcessKind::Binomial,
        }
    }
}

/// Declares a parameter record: every field is an optional long flag and an
/// optional config key of the same name; unset fields are not serialized.
#[macro_export]
macro_rules! params {
    ($(#[$sm:meta])* pub struct $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty,)* }) => {
        $(#[$sm])*
        #[derive(clap::Args, Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            $(
                $(#[$fm])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

pub fn build_domain(
    d: usize,
    shape: &mut Option<ShapeArg>,
    density: &mut Option<DensityArg>,
    slope: &mut Option<f64>,
) -> CliResult<DomainSpec> {
    let shape = match *shape.get_or_insert(ShapeArg::Cube) {
        ShapeArg::Cube => Shape::UnitCube,
        ShapeArg::Ball => Shape::UnitBall,
    };
    let slope_value = *slope.get_or_insert(0.0);
    let density = match *density.get_or_insert(DensityArg::Uniform) {
        DensityArg::Uniform if slope_value != 0.0 => {
            return Err(CliError::config("slope is only used with density = affine"))
        }
        DensityArg::Uniform => Density::Uniform,
        DensityArg::Affine => Density::Affine { slope: slope_value },
    };
    Ok(DomainSpec::new(shape, density, d)?)
}

/// Radius choice: an explicit `r`, or a schedule given by `b` or `gamma`.
#[derive(Debug, Clone, Copy)]
pub enum RadiusRule {
    Fixed(f64),
    Schedule(RegimeSchedule),
}

impl RadiusRule {
    pub fn new(r: Option<f64>, b: Option<f64>, gamma: Option<f64>, dom: &DomainSpec) -> CliResult<Self> {
        let regime = match (r, b, gamma) {
            (Some(r), None, None) => return Ok(RadiusRule::Fixed(r)),
            (None, Some(b), None) => Regime::MildlyDense { b },
            (None, None, Some(gamma)) => Regime::Sparse { gamma },
            (None, None, None) => return Err(CliError::config("missing radius: give r, b or gamma")),
            _ => return Err(CliError::config("give exactly one of r, b and gamma")),
        };
        Ok(RadiusRule::Schedule(RegimeSchedule::for_domain(regime, dom)?))
    }

    pub fn radius(&self, n: f64, k: usize) -> CliResult<f64> {
        match self {
            RadiusRule::Fixed(r) => Ok(*r),
            RadiusRule::Schedule(s) => Ok(s.radius(n, k)?),
        }
    }
}

pub fn required<T: Clone>(v: &Option<T>, name: &str) -> CliResult<T> {
    v.clone()
        .ok_or_else(|| CliError::config(format!("missing required parameter `{name}`")))
}

/// The seed to use: the given one, or a fresh one reported on stderr.
pub fn resolve_seed(seed: &mut Option<u64>, warn: &mut dyn FnMut(String)) -> u64 {
    *seed.get_or_insert_with(|| {
        use std::hash::{BuildHasher, Hasher};
        let mut h = std::collections::hash_map::RandomState::new().build_hasher();
        h.write_u64(std::process::id() as u64);
        let s = h.finish();
        warn(format!("seed: {s}"));
        s
    })
}

/// Serialized parameter echo.
pub fn echo<P: Serialize>(p: &P) -> CliResult<serde_json::Value> {
    Ok(serde_json::to_value(p)?)
}

pub fn fmt(x: f64) -> String {
    format!("{x}")
}
