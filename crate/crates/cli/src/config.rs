use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use whitney_cubes::manufactured::manufactured;
use whitney_cubes::quadrature::DEFAULT_POINTS;
use whitney_cubes::solver::{BasisChoice, SolveMethod};
use whitney_cubes::verify::{DEFAULT_SEED, MAX_DIM};
use whitney_cubes::whitney::Flavor;

pub const DEFAULT_DUMP_LIMIT: usize = 512;
pub const DEFAULT_MIN_ORDER: f64 = 0.9;
const MAX_LEVELS: usize = 8;

#[derive(Debug, Parser)]
#[command(
    name = "whitney-cubes",
    version,
    about = "Nonconforming Whitney forms on cubical meshes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Run the exact structural suites (mesh diagrams too when --grid is given)
    Verify,
    /// Convergence sweep for a manufactured solution on refined unit cubes
    Convergence,
    /// Solve the discrete problem on one mesh and report errors
    Solve,
    /// Dump the kernel basis and the interpolated generating set
    Basis,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Verify => "verify",
            Self::Convergence => "convergence",
            Self::Solve => "solve",
            Self::Basis => "basis",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every command; each one overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Space dimension n
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Form degree k
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Divisions per axis, e.g. 2,2,2 (a single value applies to every axis)
    #[arg(long, global = true, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Number of refinement levels
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    #[arg(long, global = true, value_parser = parse_flavor)]
    pub flavor: Option<Flavor>,
    /// Gauss points per axis for non-polynomial data
    #[arg(long, global = true)]
    pub quad: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Manufactured solution name
    #[arg(long, global = true)]
    pub solution: Option<String>,
    /// Galerkin basis: auto, kernel or generators
    #[arg(long, global = true, value_parser = parse_basis)]
    pub basis: Option<BasisChoice>,
    /// Linear solver: auto, exact or cg
    #[arg(long, global = true, value_parser = parse_method)]
    pub method: Option<SolveMethod>,
    /// Order threshold for the convergence pass line
    #[arg(long, global = true)]
    pub min_order: Option<f64>,
    /// Largest piecewise dimension the basis dump accepts
    #[arg(long, global = true)]
    pub dump_limit: Option<usize>,
    /// TOML file with defaults for any of the flags above
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn parse_flavor(s: &str) -> Result<Flavor, String> {
    Flavor::from_str(s).map_err(|e| e.to_string())
}

fn parse_basis(s: &str) -> Result<BasisChoice, String> {
    BasisChoice::from_str(s).map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<SolveMethod, String> {
    SolveMethod::from_str(s).map_err(|e| e.to_string())
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dim: Option<usize>,
    pub k: Option<usize>,
    pub grid: Option<Vec<usize>>,
    pub levels: Option<usize>,
    pub flavor: Option<Flavor>,
    pub quad: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub solution: Option<String>,
    pub basis: Option<BasisChoice>,
    pub method: Option<SolveMethod>,
    pub min_order: Option<f64>,
    pub dump_limit: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// Validated configuration of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    pub levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flavor: Option<Flavor>,
    pub quad: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    pub solution: String,
    pub basis: BasisChoice,
    pub method: SolveMethod,
    pub min_order: f64,
    pub dump_limit: usize,
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, String> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let dim = flags.dim.or(file.dim).ok_or("--dim is required")?;
        if dim == 0 || dim > MAX_DIM {
            return Err(format!("--dim must lie in 1..={MAX_DIM}, got {dim}"));
        }
        let k = flags.k.or(file.k);
        if let Some(k) = k {
            if k > dim {
                return Err(format!("--k must not exceed --dim ({k} > {dim})"));
            }
        }
        let grid = match flags.grid.or(file.grid) {
            Some(g) if g.len() == 1 => Some(vec![g[0]; dim]),
            Some(g) if g.len() != dim => return Err(format!("--grid has {} entries for dimension {dim}", g.len())),
            g => g,
        };
        if grid.as_ref().is_some_and(|g| g.contains(&0)) {
            return Err("--grid entries must be positive".into());
        }
        let levels = flags.levels.or(file.levels).unwrap_or(3);
        if levels == 0 || levels > MAX_LEVELS {
            return Err(format!("--levels must lie in 1..={MAX_LEVELS}, got {levels}"));
        }
        let quad = flags.quad.or(file.quad).unwrap_or(DEFAULT_POINTS);
        if quad == 0 || quad > 64 {
            return Err(format!("--quad must lie in 1..=64, got {quad}"));
        }
        let threads = flags.threads.or(file.threads);
        if threads == Some(0) {
            return Err("--threads must be positive".into());
        }
        let min_order = flags.min_order.or(file.min_order).unwrap_or(DEFAULT_MIN_ORDER);
        if !min_order.is_finite() {
            return Err("--min-order must be finite".into());
        }
        let solution = flags.solution.or(file.solution).unwrap_or_else(|| "sin".into());
        manufactured(&solution, dim, k.unwrap_or(0)).map_err(|e| e.to_string())?;
        Ok(Self {
            command,
            dim,
            k,
            grid,
            levels,
            flavor: flags.flavor.or(file.flavor),
            quad,
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            threads,
            output: flags.output.or(file.output),
            format: flags.format.or(file.format),
            solution,
            basis: flags.basis.or(file.basis).unwrap_or(BasisChoice::Auto),
            method: flags.method.or(file.method).unwrap_or(SolveMethod::Auto),
            min_order,
            dump_limit: flags.dump_limit.or(file.dump_limit).unwrap_or(DEFAULT_DUMP_LIMIT),
        })
    }

    pub fn k_or(&self, default: usize) -> usize {
        self.k.unwrap_or(default)
    }

    /// Coarsest uniform division count for sweeps and single solves.
    pub fn base_divisions(&self) -> Result<usize, String> {
        match &self.grid {
            None => Ok(if self.dim <= 2 { 4 } else { 2 }),
            Some(g) if g.iter().all(|&m| m == g[0]) => Ok(g[0]),
            Some(_) => Err("this command needs the same number of divisions on every axis".into()),
        }
    }
}
