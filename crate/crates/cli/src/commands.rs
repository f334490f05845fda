use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use whitney_cubes::exterior::MultiIndex;
use whitney_cubes::manufactured::manufactured;
use whitney_cubes::mesh::CubicalMesh;
use whitney_cubes::report::{all_pass, first_failure, CheckReport};
use whitney_cubes::solver::{
    assemble, broken_error, convergence_sweep, energy_norm, solve, DiscreteSpace, Load, SolveMethod, SweepConfig,
};
use whitney_cubes::verify::verify;
use whitney_cubes::whitney::{
    build_constraints, interpolated_generating_set, kernel_space, summarize, Flavor, LocalWhitney, SpaceSummary,
    WhitneySpace,
};
use whitney_cubes::{int, CellBox, Error, PolyForm, Scalar};

use crate::config::{Format, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or usage; exit status 2.
    Config(String),
    /// A computation failed; exit status 1.
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Parse(_) | Error::UnknownSolution { .. } => Self::Config(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

/// Rendered result of one command.
#[derive(Debug)]
pub struct Output {
    pub body: String,
    /// Run manifest written next to a CSV `--output` file.
    pub manifest: Option<String>,
    /// Human-readable lines for the terminal.
    pub summary: Vec<String>,
    pub pass: bool,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn versions() -> serde_json::Value {
    json!({ "whitney-cubes": whitney_cubes::VERSION, "cli": env!("CARGO_PKG_VERSION") })
}

#[derive(Serialize)]
struct CheckRow<'a> {
    lemma: &'a str,
    n: usize,
    k: usize,
    pass: bool,
    counterexample: &'a str,
}

pub fn cmd_verify(config: &RunConfig) -> Result<Output, CliError> {
    let mut reports = verify(config.dim, config.grid.as_deref(), config.seed)?;
    if let Some(k) = config.k {
        reports.retain(|r| r.k == k);
    }
    let pass = all_pass(&reports);
    let failed = reports.iter().filter(|r| !r.pass).count();
    let first = first_failure(&reports).cloned();
    let body = match config.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&json!({
            "command": "verify",
            "config": config,
            "pass": pass,
            "checks": reports.len(),
            "failed": failed,
            "first_failure": first,
            "reports": reports,
        })),
        Format::Csv => to_csv(
            &reports
                .iter()
                .map(|r| CheckRow {
                    lemma: &r.lemma,
                    n: r.n,
                    k: r.k,
                    pass: r.pass,
                    counterexample: r.counterexample.as_deref().unwrap_or(""),
                })
                .collect::<Vec<_>>(),
        )?,
    };
    let mut summary = vec![format!(
        "verify n={}: {} checks, {} failed: {}",
        config.dim,
        reports.len(),
        failed,
        if pass { "PASS" } else { "FAIL" }
    )];
    if let Some(f) = first {
        summary.push(format!("first failure: {}", describe(&f)));
    }
    Ok(Output {
        body,
        manifest: None,
        summary,
        pass,
    })
}

fn describe(r: &CheckReport) -> String {
    format!(
        "{} (n={}, k={}): {}",
        r.lemma,
        r.n,
        r.k,
        r.counterexample.as_deref().unwrap_or("no counterexample recorded")
    )
}

fn resolve_flavor(config: &RunConfig, natural: Flavor, summary: &mut Vec<String>) -> Flavor {
    match config.flavor {
        Some(f) if f != natural => {
            summary.push(format!(
                "warning: solution '{}' satisfies the boundary conditions of the {natural} flavor, not {f}",
                config.solution
            ));
            f
        }
        Some(f) => f,
        None => natural,
    }
}

pub fn cmd_convergence(config: &RunConfig) -> Result<Output, CliError> {
    let start = Instant::now();
    let (n, k) = (config.dim, config.k_or(0));
    let base = config.base_divisions().map_err(CliError::Config)?;
    let natural = manufactured(&config.solution, n, k)?.flavor;
    let mut summary = Vec::new();
    let flavor = resolve_flavor(config, natural, &mut summary);
    let sweep_config = SweepConfig {
        n,
        k,
        solution: config.solution.clone(),
        flavor,
        levels: (0..config.levels).map(|l| base << l).collect(),
        quadrature: config.quad,
        basis: config.basis,
    };
    let sweep = convergence_sweep(&sweep_config)?;
    let (order_l2, order_hd, order_consistency) = sweep.final_orders();
    // Top forms have no derivative part; the L² order is the relevant one.
    let (label, order) = if k == n { ("L2", order_l2) } else { ("Hd", order_hd) };
    let mut pass = true;
    match order {
        None => summary.push("orders: none (a single level)".into()),
        Some(o) => {
            let mut line = format!("order_{label} = {o:.3}");
            pass &= o >= config.min_order;
            if k < n {
                match order_consistency {
                    Some(c) => {
                        line.push_str(&format!(", consistency order = {c:.3}"));
                        pass &= c >= config.min_order;
                    }
                    None => line.push_str(", consistency residual vanishes"),
                }
            }
            line.push_str(&format!(
                " (threshold {}): {}",
                config.min_order,
                if pass { "PASS" } else { "FAIL" }
            ));
            summary.push(line);
        }
    }
    let manifest = to_json(&json!({
        "command": "convergence",
        "config": config,
        "sweep": sweep_config,
        "versions": versions(),
        "rows": sweep.rows,
        "consistency_orders": sweep.consistency_orders,
        "levels": sweep.levels,
        "pass": pass,
        "seconds": start.elapsed().as_secs_f64(),
    }));
    Ok(match config.format.unwrap_or(Format::Csv) {
        Format::Csv => Output {
            body: to_csv(&sweep.rows)?,
            manifest: Some(manifest),
            summary,
            pass,
        },
        Format::Json => Output {
            body: manifest,
            manifest: None,
            summary,
            pass,
        },
    })
}

#[derive(Serialize)]
struct SolveRow {
    n: usize,
    k: usize,
    flavor: Flavor,
    solution: String,
    n_cells: usize,
    dim_space: usize,
    method: SolveMethod,
    iterations: usize,
    #[serde(rename = "err_L2")]
    err_l2: f64,
    #[serde(rename = "err_Hd")]
    err_hd: f64,
    energy_norm: f64,
    /// Relative energy-norm gap between exact and CG solutions, when both ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_cg_gap: Option<f64>,
    seconds: f64,
}

pub fn cmd_solve(config: &RunConfig) -> Result<Output, CliError> {
    let start = Instant::now();
    let (n, k) = (config.dim, config.k_or(0));
    let m = manufactured(&config.solution, n, k)?;
    let mut summary = Vec::new();
    let flavor = resolve_flavor(config, m.flavor, &mut summary);
    let mesh = CubicalMesh::unit(n, config.base_divisions().map_err(CliError::Config)?)?;
    let space = DiscreteSpace::build(k, &mesh, flavor, config.basis)?;
    // The constant entry is polynomial, which enables exact elimination.
    let constant = (config.solution == "const").then(|| {
        let sigma = MultiIndex::new(&(1..=k).collect::<Vec<_>>(), n).expect("valid multi-index");
        PolyForm::constant(sigma, int(1))
    });
    let load = match &constant {
        Some(f) => Load::Polynomial(f),
        None => Load::Field(&m.rhs),
    };
    let problem = assemble(&space, load, config.quad)?;
    let sol = solve(&problem, config.method)?;
    let exact_cg_gap = if sol.method == SolveMethod::Exact {
        let cg = solve(&problem, SolveMethod::Cg)?;
        let diff: Vec<f64> = sol
            .coefficients
            .iter()
            .zip(&cg.coefficients)
            .map(|(a, b)| a - b)
            .collect();
        let scale = energy_norm(&problem.g, &sol.coefficients);
        Some(energy_norm(&problem.g, &diff) / if scale > 0.0 { scale } else { 1.0 })
    } else {
        None
    };
    let (err_l2, err_hd) = broken_error(
        &space,
        &m.omega,
        &m.d_omega,
        &space.piecewise(&sol.coefficients),
        config.quad,
    )?;
    let row = SolveRow {
        n,
        k,
        flavor,
        solution: config.solution.clone(),
        n_cells: mesh.num_cells(),
        dim_space: space.dim(),
        method: sol.method,
        iterations: sol.iterations,
        err_l2,
        err_hd,
        energy_norm: energy_norm(&problem.g, &sol.coefficients),
        exact_cg_gap,
        seconds: start.elapsed().as_secs_f64(),
    };
    summary.push(format!(
        "solve n={n} k={k} {flavor}: N={} via {}, err_L2={:.3e}, err_Hd={:.3e}",
        row.dim_space, row.method, row.err_l2, row.err_hd
    ));
    let body = match config.format.unwrap_or(Format::Json) {
        Format::Json => {
            to_json(&json!({ "command": "solve", "config": config, "versions": versions(), "result": row }))
        }
        Format::Csv => to_csv(&[row])?,
    };
    Ok(Output {
        body,
        manifest: None,
        summary,
        pass: true,
    })
}

/// One nonzero cell piece of a dumped basis vector, in absolute coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DumpedPiece {
    pub vector: usize,
    pub cell: usize,
    pub form: String,
}

fn dump(space: &WhitneySpace, local: &LocalWhitney, cells: &[CellBox]) -> Vec<DumpedPiece> {
    let mut out = Vec::new();
    for i in 0..space.len() {
        for (c, piece) in space.pieces(i, local).iter().enumerate() {
            if piece.is_zero() {
                continue;
            }
            let back: Vec<Scalar> = cells[c].center().iter().map(|x| -x).collect();
            out.push(DumpedPiece {
                vector: i,
                cell: c,
                form: piece.translate(&back).to_string(),
            });
        }
    }
    out
}

pub fn cmd_basis(config: &RunConfig) -> Result<Output, CliError> {
    let (n, k) = (config.dim, config.k_or(0));
    let flavor = config.flavor.unwrap_or(Flavor::Interior);
    let divisions = config.grid.clone().unwrap_or_else(|| vec![1; n]);
    let mesh = CubicalMesh::build(&CellBox::unit(n), &divisions)?;
    let local = LocalWhitney::new(k, &mesh)?;
    let columns = mesh.num_cells() * local.dim();
    if columns > config.dump_limit {
        return Err(CliError::Config(format!(
            "piecewise dimension {columns} exceeds the dump limit {}; use a smaller --grid or raise --dump-limit",
            config.dump_limit
        )));
    }
    let kernel = kernel_space(&build_constraints(k, &mesh, flavor)?);
    let generators = interpolated_generating_set(k, &mesh, flavor)?;
    let summary_row: SpaceSummary = summarize(k, &mesh, flavor)?;
    let cells = mesh.cells();
    let kernel_dump = dump(&kernel, &local, &cells);
    let generator_dump = dump(&generators, &local, &cells);
    let grid_text = divisions.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
    let body = match config.format {
        None => {
            let mut s = format!("# n={n} k={k} flavor={flavor} grid={grid_text}\n");
            s.push_str(&format!("# kernel basis: {} vectors\n", kernel.len()));
            for p in &kernel_dump {
                s.push_str(&format!("kernel {} cell {}: {}\n", p.vector, p.cell, p.form));
            }
            s.push_str(&format!("# generating set: {} vectors\n", generators.len()));
            for p in &generator_dump {
                s.push_str(&format!("generator {} cell {}: {}\n", p.vector, p.cell, p.form));
            }
            s.push_str("# dimensions\n");
            s.push_str(&to_csv(&[&summary_row])?);
            s
        }
        Some(Format::Csv) => to_csv(&[&summary_row])?,
        Some(Format::Json) => to_json(&json!({
            "command": "basis",
            "config": config,
            "dimensions": summary_row,
            "kernel": kernel_dump,
            "generators": generator_dump,
        })),
    };
    let summary = vec![format!(
        "basis n={n} k={k} {flavor}: piecewise {}, rank_B {}, kernel {}, generators span {}",
        summary_row.dim_piecewise, summary_row.rank_b, summary_row.dim_kernel, summary_row.dim_generators_span
    )];
    Ok(Output {
        body,
        manifest: None,
        summary,
        pass: true,
    })
}
