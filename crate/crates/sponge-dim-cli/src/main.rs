//! Batch interface to the sponge-dimension library.
//!
//! Eight subcommands cover the pipeline: `validate` and `hypothesis` check a
//! specification document, `dim` maximizes the variational objective (with an
//! optional box-counting cross-check), `family` solves the candidate-measure
//! family at one `(t, rho)` or along a `t`-grid, `trace` follows pointwise
//! dimension along a word sampled from the optimal measure, `boxcount` fits a
//! box-counting slope, `export` writes cover geometry, and `landscape`
//! tabulates the objective for external plotting.
//!
//! Conventions shared by every subcommand:
//! - data goes to standard output or the `--out` path; messages go to
//!   standard error;
//! - json reports embed the settings that produced them; csv outputs print
//!   the settings as a single json line on standard error instead, so the
//!   csv stays machine-readable;
//! - identical argv (and seed) produce byte-identical data output;
//! - exit 0 on success, 1 on invalid input or constraint violations, 2 on
//!   numeric non-convergence, 3 on i/o failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;
use sponge_dim::boxes::{
    box_count_estimate, default_deltas, export_geometry, generate_cover, oracle_comparison,
    GeometryFormat, DEFAULT_COVER_CAP, DEFAULT_DELTA_COUNT,
};
use sponge_dim::dimension::objective;
use sponge_dim::family::{default_t_grid, family_curve, fiber_roots, solve_lambda2};
use sponge_dim::hypothesis::{check_generic_hypothesis, DEFAULT_GRID};
use sponge_dim::optimize::{maximize, OptimizerConfig};
use sponge_dim::spec::{validate_document, SpecDocument};
use sponge_dim::symbolic::{pointwise_dimension_trace, sample_word};
use sponge_dim::{Error as LibError, NestedDistribution, SpongeSpec};

/// One-sided slack allowed between the box-counting slope and the formula
/// value in `dim --oracle`; grid counts only undercount, so only a slope
/// below `formula - ORACLE_TOLERANCE` is flagged.
const ORACLE_TOLERANCE: f64 = 0.15;

#[derive(Parser)]
#[command(
    name = "sponge-dim",
    version,
    about = "Hausdorff dimension of self-affine Sierpinski sponges",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write data output to this path instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for internal parallelism; falls back to the
    /// SPONGE_DIM_THREADS environment variable, then to all cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a specification document against the geometric constraints.
    ///
    /// Prints the full violation report; exits 1 when the document is
    /// invalid.
    Validate {
        /// Path to a sponge specification document (json).
        spec: PathBuf,
    },
    /// Scan the column separation condition over t in [0, 1].
    Hypothesis {
        spec: PathBuf,
        /// Number of t grid points to scan.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Maximize the variational objective and report the dimension.
    Dim {
        spec: PathBuf,
        /// Stationarity tolerance of the optimizer.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Random restarts in addition to the uniform start.
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        /// Base seed for the restart sampler.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Cross-check the result against the box-counting oracle.
        #[arg(long)]
        oracle: bool,
        /// Subdivision depth of the oracle cover.
        #[arg(long, default_value_t = 6, requires = "oracle")]
        depth: usize,
    },
    /// Solve the candidate-measure family at one (t, rho) or on a t-grid.
    Family {
        spec: PathBuf,
        /// Target t, strictly inside the column-root interval; omit to sweep
        /// a grid across that interval.
        #[arg(long)]
        t: Option<f64>,
        /// Family exponent rho.
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        /// Grid size of the sweep when --t is omitted.
        #[arg(long, default_value_t = 10)]
        grid: usize,
    },
    /// Sample a word from the optimal measure and trace pointwise dimension.
    ///
    /// Csv columns: n, L1, L2, d_pn, beta_n, eta_n.
    Trace {
        spec: PathBuf,
        /// Word length (trace rows stop there).
        #[arg(long, default_value_t = 10_000)]
        length: usize,
        /// Seed for both the optimizer restarts and the sampled word.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Stationarity tolerance of the optimizer.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Random restarts in addition to the uniform start.
        #[arg(long, default_value_t = 16)]
        restarts: usize,
    },
    /// Count grid cells over the depth-n cover and fit the dimension slope.
    ///
    /// Csv columns: delta, count; the fitted slope is reported on standard
    /// error (or use --json for the full estimate).
    Boxcount {
        spec: PathBuf,
        /// Subdivision depth of the cover.
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Number of geometric grid scales (at least 3).
        #[arg(long, default_value_t = DEFAULT_DELTA_COUNT)]
        grid: usize,
        /// Emit the full estimate as json instead of csv.
        #[arg(long)]
        json: bool,
    },
    /// Write the cover geometry for external viewers.
    Export {
        spec: PathBuf,
        /// Subdivision depth of the cover.
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Output format: obj or json.
        #[arg(long, default_value = "obj")]
        format: String,
    },
    /// Tabulate the objective over a weight-simplex slice or the family curve.
    ///
    /// The default mode needs a spec with exactly three columns and emits
    /// csv columns p1, p2, p3, objective; --family sweeps t at fixed rho
    /// instead and emits t, rho, alpha, lambda1, lambda2, objective.
    Landscape {
        spec: PathBuf,
        /// Simplex subdivisions per edge, or family-curve points.
        #[arg(long, default_value_t = 40)]
        grid: usize,
        /// Sweep the family curve over t instead of a simplex slice.
        #[arg(long)]
        family: bool,
        /// Family exponent rho (only with --family).
        #[arg(long, default_value_t = 1.0, requires = "family")]
        rho: f64,
    },
}

/// A failed run, classified by exit code: invalid input (1), numeric
/// non-convergence (2), i/o (3).
enum Failure {
    Input(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numeric(m) | Failure::Io(m) => m,
        }
    }
}

impl From<LibError> for Failure {
    fn from(e: LibError) -> Self {
        match e {
            LibError::NonConvergence(_) | LibError::BracketNotFound(_) => {
                Failure::Numeric(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are data, not errors; usage mistakes are
            // invalid input.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    if let Some(n) = resolve_threads(cli.threads)? {
        // Thread count affects scheduling only; every parallel reduction in
        // the library is order-independent, so outputs do not change.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Validate { spec } => run_validate(&spec, out),
        Command::Hypothesis { spec, grid } => run_hypothesis(&spec, grid, out),
        Command::Dim {
            spec,
            tol,
            restarts,
            seed,
            oracle,
            depth,
        } => run_dim(&spec, tol, restarts, seed, oracle, depth, out),
        Command::Family { spec, t, rho, grid } => run_family(&spec, t, rho, grid, out),
        Command::Trace {
            spec,
            length,
            seed,
            tol,
            restarts,
        } => run_trace(&spec, length, seed, tol, restarts, out),
        Command::Boxcount {
            spec,
            depth,
            grid,
            json,
        } => run_boxcount(&spec, depth, grid, json, out),
        Command::Export { spec, depth, format } => run_export(&spec, depth, &format, out),
        Command::Landscape {
            spec,
            grid,
            family,
            rho,
        } => run_landscape(&spec, grid, family, rho, out),
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    let (n, origin) = match flag {
        Some(n) => (Some(n), "--threads"),
        None => match std::env::var("SPONGE_DIM_THREADS") {
            Ok(s) => {
                let n = s.trim().parse::<usize>().map_err(|_| {
                    Failure::Input(format!(
                        "SPONGE_DIM_THREADS must be a positive integer, got {s:?}"
                    ))
                })?;
                (Some(n), "SPONGE_DIM_THREADS")
            }
            Err(_) => (None, ""),
        },
    };
    if n == Some(0) {
        return Err(Failure::Input(format!("{origin} must be positive")));
    }
    Ok(n)
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<SpongeSpec, Failure> {
    let text = read_file(path)?;
    SpongeSpec::parse_json(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Writes data to `--out` or standard output.
fn emit_data(out: Option<&Path>, data: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, data).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization");
    text.push('\n');
    text
}

/// One json line of provenance on standard error, for the csv subcommands.
fn settings_line(settings: &serde_json::Value) {
    eprintln!("settings: {settings}");
}

fn positive(value: f64, flag: &str) -> Result<(), Failure> {
    if !(value > 0.0) {
        return Err(Failure::Input(format!(
            "{flag} must be positive, got {value}"
        )));
    }
    Ok(())
}

fn run_validate(path: &Path, out: Option<&Path>) -> Result<u8, Failure> {
    let text = read_file(path)?;
    let doc: SpecDocument = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let report = validate_document(&doc);
    let payload = json!({
        "settings": { "subcommand": "validate", "spec": path.display().to_string() },
        "report": report,
    });
    emit_data(out, &pretty(&payload))?;
    if report.ok {
        Ok(0)
    } else {
        eprintln!(
            "invalid specification ({} violation{}): {}",
            report.violations.len(),
            if report.violations.len() == 1 { "" } else { "s" },
            report.first_message()
        );
        Ok(1)
    }
}

fn run_hypothesis(path: &Path, grid: usize, out: Option<&Path>) -> Result<u8, Failure> {
    let spec = load_spec(path)?;
    let report = check_generic_hypothesis(&spec, grid);
    if !report.holds {
        eprintln!(
            "hypothesis fails: {}",
            report.reason.as_deref().unwrap_or("separation gap vanishes")
        );
    }
    let payload = json!({
        "settings": {
            "subcommand": "hypothesis",
            "spec": path.display().to_string(),
            "grid": grid,
        },
        "report": report,
    });
    emit_data(out, &pretty(&payload))?;
    Ok(0)
}

fn run_dim(
    path: &Path,
    tol: f64,
    restarts: usize,
    seed: u64,
    oracle: bool,
    depth: usize,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    positive(tol, "--tol")?;
    let spec = load_spec(path)?;
    let cfg = OptimizerConfig {
        restarts,
        seed,
        stationarity_tol: tol,
        ..OptimizerConfig::default()
    };
    let mut report = maximize(&spec, &cfg)?;
    if oracle {
        let cmp = oracle_comparison(
            &spec,
            depth,
            None,
            report.dimension,
            ORACLE_TOLERANCE,
            DEFAULT_COVER_CAP,
        )?;
        if !cmp.consistent {
            eprintln!(
                "oracle: box-counting slope {} falls more than {} below the formula value {}",
                cmp.estimate.slope, cmp.tolerance, cmp.formula_dimension
            );
        }
        report.oracle = Some(cmp);
    }
    let converged = report.diagnostics.converged;
    let stationarity = report.diagnostics.stationarity;
    emit_data(out, &pretty(&json!(report)))?;
    if converged {
        Ok(0)
    } else {
        eprintln!(
            "optimizer did not converge: stationarity {stationarity} exceeds tolerance {tol} \
             (best value reported anyway)"
        );
        Ok(2)
    }
}

fn run_family(
    path: &Path,
    t: Option<f64>,
    rho: f64,
    grid: usize,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    positive(rho, "--rho")?;
    let spec = load_spec(path)?;
    let roots = fiber_roots(&spec);
    let solutions = match t {
        Some(t) => vec![solve_lambda2(&spec, t, rho)?],
        None => {
            if !roots.applicable() {
                return Err(Failure::Input(format!(
                    "family is degenerate: every column root equals {}",
                    roots.t_lower
                )));
            }
            let ts = default_t_grid(&roots, grid.max(1));
            let mut solutions = Vec::with_capacity(ts.len());
            for point in family_curve(&spec, &ts, rho)? {
                match point.solution {
                    Some(s) => solutions.push(s),
                    None => eprintln!(
                        "t = {}: {}",
                        point.t,
                        point.error.unwrap_or_else(|| "did not converge".into())
                    ),
                }
            }
            if solutions.is_empty() {
                return Err(Failure::Numeric(
                    "no family grid point converged".into(),
                ));
            }
            solutions
        }
    };
    let payload = json!({
        "settings": {
            "subcommand": "family",
            "spec": path.display().to_string(),
            "t": t,
            "rho": rho,
            "grid": grid,
        },
        "roots": roots,
        "solutions": solutions,
    });
    emit_data(out, &pretty(&payload))?;
    Ok(0)
}

fn run_trace(
    path: &Path,
    length: usize,
    seed: u64,
    tol: f64,
    restarts: usize,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    positive(tol, "--tol")?;
    let spec = load_spec(path)?;
    let cfg = OptimizerConfig {
        restarts,
        seed,
        stationarity_tol: tol,
        ..OptimizerConfig::default()
    };
    let report = maximize(&spec, &cfg)?;
    let t = report.objective.t;
    let word = sample_word(&spec, &report.p, t, length, seed)?;
    let rows = pointwise_dimension_trace(&spec, &report.p, t, &word, length)?;
    settings_line(&json!({
        "subcommand": "trace",
        "spec": path.display().to_string(),
        "length": length,
        "seed": seed,
        "tol": tol,
        "restarts": restarts,
        "dimension": report.dimension,
        "t": t,
    }));
    let mut csv = String::with_capacity(rows.len() * 64 + 40);
    csv.push_str("n,L1,L2,d_pn,beta_n,eta_n\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n, r.l1, r.l2, r.d_pn, r.beta_n, r.eta_n
        ));
    }
    emit_data(out, &csv)?;
    if report.diagnostics.converged {
        Ok(0)
    } else {
        eprintln!("optimizer did not converge; the trace uses the best weights found");
        Ok(2)
    }
}

fn run_boxcount(
    path: &Path,
    depth: usize,
    grid: usize,
    json_output: bool,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    if depth == 0 {
        return Err(Failure::Input("--depth must be positive".into()));
    }
    let spec = load_spec(path)?;
    let cover = generate_cover(&spec, depth, DEFAULT_COVER_CAP)?;
    let deltas = default_deltas(&cover, grid);
    let estimate = box_count_estimate(&cover, &deltas)?;
    if json_output {
        let payload = json!({
            "settings": {
                "subcommand": "boxcount",
                "spec": path.display().to_string(),
                "depth": depth,
                "scales": grid,
            },
            "report": estimate,
        });
        emit_data(out, &pretty(&payload))?;
        return Ok(0);
    }
    settings_line(&json!({
        "subcommand": "boxcount",
        "spec": path.display().to_string(),
        "depth": depth,
        "scales": grid,
        "slope": estimate.slope,
        "slope_std_error": estimate.slope_std_error,
    }));
    let mut csv = String::from("delta,count\n");
    for (delta, count) in estimate.deltas.iter().zip(&estimate.counts) {
        csv.push_str(&format!("{delta},{count}\n"));
    }
    emit_data(out, &csv)?;
    Ok(0)
}

fn run_export(path: &Path, depth: usize, format: &str, out: Option<&Path>) -> Result<u8, Failure> {
    let format: GeometryFormat = format.parse().map_err(Failure::from)?;
    let spec = load_spec(path)?;
    let cover = generate_cover(&spec, depth, DEFAULT_COVER_CAP)?;
    let text = export_geometry(&cover, format)?;
    settings_line(&json!({
        "subcommand": "export",
        "spec": path.display().to_string(),
        "depth": depth,
        "format": format!("{format:?}").to_lowercase(),
        "boxes": cover.boxes.len(),
    }));
    emit_data(out, &text)?;
    Ok(0)
}

fn run_landscape(
    path: &Path,
    grid: usize,
    family: bool,
    rho: f64,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    if grid == 0 {
        return Err(Failure::Input("--grid must be positive".into()));
    }
    let spec = load_spec(path)?;
    if family {
        positive(rho, "--rho")?;
        let roots = fiber_roots(&spec);
        if !roots.applicable() {
            return Err(Failure::Input(format!(
                "family is degenerate: every column root equals {}",
                roots.t_lower
            )));
        }
        let ts = default_t_grid(&roots, grid);
        settings_line(&json!({
            "subcommand": "landscape",
            "spec": path.display().to_string(),
            "mode": "family",
            "grid": grid,
            "rho": rho,
            "t_lower": roots.t_lower,
            "t_upper": roots.t_upper,
        }));
        let mut csv = String::from("t,rho,alpha,lambda1,lambda2,objective\n");
        for point in family_curve(&spec, &ts, rho)? {
            match point.solution {
                Some(s) => csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    s.t, s.rho, s.alpha, s.lambda1, s.lambda2, s.objective.total
                )),
                None => eprintln!(
                    "t = {}: {}",
                    point.t,
                    point.error.unwrap_or_else(|| "did not converge".into())
                ),
            }
        }
        emit_data(out, &csv)?;
        return Ok(0);
    }
    if spec.pair_count() != 3 {
        return Err(Failure::Input(format!(
            "the simplex slice needs exactly 3 columns, this spec has {}; \
             use --family for the curve mode",
            spec.pair_count()
        )));
    }
    settings_line(&json!({
        "subcommand": "landscape",
        "spec": path.display().to_string(),
        "mode": "simplex",
        "grid": grid,
    }));
    let g = grid as f64;
    let mut csv = String::from("p1,p2,p3,objective\n");
    for i in 0..=grid {
        for j in 0..=(grid - i) {
            let k = grid - i - j;
            let w = [i as f64 / g, j as f64 / g, k as f64 / g];
            let p = NestedDistribution::from_flat(&spec, &w)?;
            let value = objective(&spec, &p, 1e-12)?.total;
            csv.push_str(&format!("{},{},{},{value}\n", w[0], w[1], w[2]));
        }
    }
    emit_data(out, &csv)?;
    Ok(0)
}
