//! Command-line front end for the approximation experiments.
//!
//! Three subcommands cover the experiment pipeline:
//!
//! * `approx`   — approximate one signal with one method, emitting the step
//!   table, the boundary list, and the achieved MSE,
//! * `sweep`    — N-sweep with repeated seeded swarm runs and aggregate MSE
//!   statistics, plus `N log10E` plot-data tables,
//! * `balance`  — per-segment errors and the max/min error ratio.
//!
//! Exit codes: 0 success, 1 I/O or numeric failure, 2 usage error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::approx::{self, build_approximation, BoundaryVector};
use crate::dar_bruckstein::{db_boundaries, derivative_density};
use crate::dp::{dp_optimal, GridSpec};
use crate::pgm;
use crate::pso::{self, derive_seed, SwarmConfig};
use crate::signal::{read_csv_values, DiscretizedSignal, NoiseSpec};

/// Seed stream index reserved for the additive-noise generator.
const NOISE_STREAM: u64 = 0x6E01_5E;

#[derive(Parser)]
#[command(
    name = "segapprox",
    about = "N-segment piecewise-constant signal approximation toolkit",
    version
)]
struct Cli {
    /// Worker threads for repeated swarm runs (default: all cores).
    /// Output is identical regardless of this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Dar-Bruckstein adaptive sampling
    Db,
    /// direct minimisation with SPSO-2011
    Pso,
    /// exact dynamic programming on the refined grid
    Dp,
}

#[derive(Args)]
struct SourceFlags {
    /// Signal source: `chirp`, `csv:<path>`, `pgm:<path>:<row>`,
    /// or `steps:<count>:<seed>`
    #[arg(long)]
    source: String,
    /// Discretization cells for the chirp source
    #[arg(long, default_value_t = 100_000)]
    cells: usize,
    /// Standard deviation of additive Gaussian noise (0 = none)
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Domain `<a>:<b>` for csv sources (default: unit-width cells)
    #[arg(long)]
    domain: Option<String>,
}

#[derive(Args)]
struct SwarmFlags {
    #[arg(long, default_value_t = 1000)]
    swarm_size: usize,
    #[arg(long, default_value_t = 20)]
    neighbours: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Iterations without global improvement before the topology is re-drawn
    #[arg(long, default_value_t = 15)]
    stagnation: usize,
    /// Stop early once the energy falls to this value or below
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

impl SwarmFlags {
    fn config(&self, seed: u64) -> SwarmConfig {
        SwarmConfig {
            n_particles: self.swarm_size,
            neighbours: self.neighbours,
            max_iter: self.max_iter,
            stagnation_reset: self.stagnation,
            energy_tolerance: self.tolerance,
            seed,
            ..SwarmConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Approximate a signal with a given number of segments
    Approx {
        #[command(flatten)]
        source: SourceFlags,
        /// Number of segments N
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        method: Method,
        /// Candidate-grid refinement for the dp method
        #[arg(long, default_value_t = 4)]
        refine: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        swarm: SwarmFlags,
        /// Also write `<prefix>_approx.dat` and `<prefix>_boundaries.dat`
        #[arg(long)]
        out_prefix: Option<PathBuf>,
        /// Write the swarm convergence trace (`iter energy` lines, pso only)
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sweep over segment counts with repeated swarm runs
    Sweep {
        #[command(flatten)]
        source: SourceFlags,
        /// Ascending list of segment counts, e.g. `5,10,20`
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also run the exact grid oracle and add a dp_mse column
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 4)]
        refine: usize,
        #[command(flatten)]
        swarm: SwarmFlags,
        /// Write the plot tables to `<prefix>_mse_db.dat` / `<prefix>_mse_pso.dat`
        #[arg(long)]
        out_prefix: Option<PathBuf>,
    },
    /// Report per-segment errors and the error-balance ratio
    Balance {
        #[command(flatten)]
        source: SourceFlags,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 4)]
        refine: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        swarm: SwarmFlags,
    },
}

enum AppError {
    Usage(String),
    Failure(String),
}

impl AppError {
    fn failure(err: impl std::fmt::Display) -> Self {
        AppError::Failure(err.to_string())
    }
}

fn parse_source(flags: &SourceFlags, seed: u64) -> Result<DiscretizedSignal, AppError> {
    let spec = flags.source.as_str();
    let signal = if spec == "chirp" {
        DiscretizedSignal::chirp(flags.cells).map_err(AppError::failure)?
    } else if let Some(path) = spec.strip_prefix("csv:") {
        let values = read_csv_values(Path::new(path)).map_err(AppError::failure)?;
        let (a, b) = match &flags.domain {
            Some(d) => {
                let (a, b) = d
                    .split_once(':')
                    .ok_or_else(|| AppError::Usage(format!("bad domain `{d}`, expected <a>:<b>")))?;
                let parse = |t: &str| {
                    t.parse::<f64>()
                        .map_err(|_| AppError::Usage(format!("bad domain endpoint `{t}`")))
                };
                (parse(a)?, parse(b)?)
            }
            None => (0.0, values.len() as f64),
        };
        DiscretizedSignal::from_values(values, a, b).map_err(AppError::failure)?
    } else if let Some(rest) = spec.strip_prefix("pgm:") {
        let (path, row) = rest
            .rsplit_once(':')
            .ok_or_else(|| AppError::Usage(format!("bad source `{spec}`, expected pgm:<path>:<row>")))?;
        let row: usize = row
            .parse()
            .map_err(|_| AppError::Usage(format!("bad row `{row}`")))?;
        pgm::load_pgm_row(Path::new(path), row).map_err(AppError::failure)?
    } else if let Some(rest) = spec.strip_prefix("steps:") {
        let (count, sseed) = rest
            .split_once(':')
            .ok_or_else(|| AppError::Usage(format!("bad source `{spec}`, expected steps:<count>:<seed>")))?;
        let count: usize = count
            .parse()
            .map_err(|_| AppError::Usage(format!("bad step count `{count}`")))?;
        let sseed: u64 = sseed
            .parse()
            .map_err(|_| AppError::Usage(format!("bad step seed `{sseed}`")))?;
        DiscretizedSignal::steps(count, sseed).map_err(AppError::failure)?
    } else {
        return Err(AppError::Usage(format!(
            "unknown source `{spec}`; expected chirp, csv:<path>, pgm:<path>:<row>, or steps:<count>:<seed>"
        )));
    };
    if flags.sigma > 0.0 {
        signal
            .add_gaussian_noise(NoiseSpec {
                sigma: flags.sigma,
                seed: derive_seed(seed, NOISE_STREAM),
            })
            .map_err(AppError::failure)
    } else {
        Ok(signal)
    }
}

fn solve(
    signal: &DiscretizedSignal,
    n: usize,
    method: Method,
    refine: usize,
    config: &SwarmConfig,
) -> Result<BoundaryVector, AppError> {
    if n == 0 {
        return Err(AppError::Usage("--n must be at least 1".into()));
    }
    match method {
        Method::Db => {
            if n == 1 {
                return BoundaryVector::empty(signal.a(), signal.b()).map_err(AppError::failure);
            }
            let dens = derivative_density(signal).map_err(AppError::failure)?;
            db_boundaries(&dens, n).map_err(AppError::failure)
        }
        Method::Pso => pso::run(signal, n, config)
            .map(|(bv, _, _)| bv)
            .map_err(AppError::failure),
        Method::Dp => {
            let grid = GridSpec::new(refine).map_err(AppError::failure)?;
            dp_optimal(signal, n, grid)
                .map(|(bv, _)| bv)
                .map_err(AppError::failure)
        }
    }
}

/// Runs one swarm while recording the global best after every iteration.
fn traced_pso(
    signal: &DiscretizedSignal,
    n: usize,
    config: &SwarmConfig,
) -> Result<(BoundaryVector, String), AppError> {
    let mut table = String::from("iter energy\n");
    if n <= 1 {
        let (bounds, e, _) = pso::run(signal, n, config).map_err(AppError::failure)?;
        let _ = writeln!(table, "0 {e}");
        return Ok((bounds, table));
    }
    let mut state = pso::init_swarm(signal, n, config).map_err(AppError::failure)?;
    let _ = writeln!(table, "0 {}", state.best_energy());
    while state.iteration() < config.max_iter && state.best_energy() > config.energy_tolerance {
        pso::step(&mut state, signal, config);
        let _ = writeln!(table, "{} {}", state.iteration(), state.best_energy());
    }
    let bounds = BoundaryVector::new(signal.a(), signal.b(), state.best_position().to_vec())
        .map_err(AppError::failure)?;
    Ok((bounds, table))
}

#[allow(clippy::too_many_arguments)]
fn cmd_approx(
    source: &SourceFlags,
    n: usize,
    method: Method,
    refine: usize,
    seed: u64,
    swarm: &SwarmFlags,
    out_prefix: Option<&Path>,
    trace: Option<&Path>,
) -> Result<String, AppError> {
    let signal = parse_source(source, seed)?;
    let bounds = match trace {
        None => solve(&signal, n, method, refine, &swarm.config(seed))?,
        Some(path) => {
            if method != Method::Pso {
                return Err(AppError::Usage(
                    "--trace is only available with --method pso".into(),
                ));
            }
            let config = swarm.config(seed);
            let (bounds, trace_table) = traced_pso(&signal, n, &config)?;
            write_file(path, &trace_table)?;
            bounds
        }
    };
    let approx = build_approximation(&signal, &bounds).map_err(AppError::failure)?;

    let mut table = Vec::new();
    approx::write_step_table(&approx, &mut table).map_err(AppError::failure)?;
    let table = String::from_utf8(table).expect("step table is ASCII");

    let mut out = table.clone();
    let boundary_list = bounds
        .boundaries()
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let _ = writeln!(out, "# boundaries: {boundary_list}");
    let _ = writeln!(out, "# mse: {}", approx.mse);

    if let Some(prefix) = out_prefix {
        write_file(&suffixed(prefix, "_approx.dat"), &table)?;
        let mut blist = String::new();
        for x in bounds.boundaries() {
            let _ = writeln!(blist, "{x}");
        }
        write_file(&suffixed(prefix, "_boundaries.dat"), &blist)?;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    source: &SourceFlags,
    n_list: &[usize],
    runs: usize,
    seed: u64,
    oracle: bool,
    refine: usize,
    swarm: &SwarmFlags,
    out_prefix: Option<&Path>,
) -> Result<String, AppError> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(AppError::Usage(
            "--n-list must be a nonempty ascending list of positive integers".into(),
        ));
    }
    let signal = parse_source(source, seed)?;
    let density = derivative_density(&signal).map_err(AppError::failure)?;
    let grid = GridSpec::new(refine).map_err(AppError::failure)?;

    let mut out = String::new();
    let header = if oracle {
        "N db_mse pso_mean pso_std pso_min pso_max dp_mse"
    } else {
        "N db_mse pso_mean pso_std pso_min pso_max"
    };
    let _ = writeln!(out, "{header}");
    let mut db_table = String::from("N log10E\n");
    let mut pso_table = String::from("N log10Min\n");
    for &n in n_list {
        let db_bv = db_boundaries(&density, n).map_err(AppError::failure)?;
        let db_mse = approx::energy(&signal, &db_bv).map_err(AppError::failure)?;
        let stats = pso::multi_run(&signal, n, &swarm.config(derive_seed(seed, n as u64)), runs)
            .map_err(AppError::failure)?;
        let _ = write!(
            out,
            "{n} {db_mse:.6} {:.6} {:.6} {:.6} {:.6}",
            stats.mean, stats.std_dev, stats.min, stats.max
        );
        if oracle {
            let (_, dp_mse) = dp_optimal(&signal, n, grid).map_err(AppError::failure)?;
            let _ = write!(out, " {dp_mse:.6}");
        }
        out.push('\n');
        let _ = writeln!(db_table, "{n} {:.6}", db_mse.log10());
        let _ = writeln!(pso_table, "{n} {:.6}", stats.min.log10());
    }

    if let Some(prefix) = out_prefix {
        write_file(&suffixed(prefix, "_mse_db.dat"), &db_table)?;
        write_file(&suffixed(prefix, "_mse_pso.dat"), &pso_table)?;
    } else {
        let _ = write!(out, "\n{db_table}\n{pso_table}");
    }
    Ok(out)
}

fn cmd_balance(
    source: &SourceFlags,
    n: usize,
    method: Method,
    refine: usize,
    seed: u64,
    swarm: &SwarmFlags,
) -> Result<String, AppError> {
    let signal = parse_source(source, seed)?;
    let bounds = solve(&signal, n, method, refine, &swarm.config(seed))?;
    let approx = build_approximation(&signal, &bounds).map_err(AppError::failure)?;
    let report = approx::segment_error_report(&approx);
    let mut out = String::from("segment error\n");
    for (i, e) in approx.segment_errors.iter().enumerate() {
        let _ = writeln!(out, "{i} {e}");
    }
    let _ = writeln!(out, "# min: {}", report.min_error);
    let _ = writeln!(out, "# max: {}", report.max_error);
    let _ = writeln!(out, "# ratio: {}", report.ratio);
    Ok(out)
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_file(path: &Path, contents: &str) -> Result<(), AppError> {
    fs::write(path, contents)
        .map_err(|e| AppError::Failure(format!("cannot write {}: {e}", path.display())))
}

/// Entry point used by the `segapprox` binary.
pub fn run_cli() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // ignore the error if a pool already exists (e.g. repeated calls in tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let result = match &cli.command {
        Command::Approx {
            source,
            n,
            method,
            refine,
            seed,
            swarm,
            out_prefix,
            trace,
        } => cmd_approx(
            source,
            *n,
            *method,
            *refine,
            *seed,
            swarm,
            out_prefix.as_deref(),
            trace.as_deref(),
        ),
        Command::Sweep {
            source,
            n_list,
            runs,
            seed,
            oracle,
            refine,
            swarm,
            out_prefix,
        } => cmd_sweep(
            source,
            n_list,
            *runs,
            *seed,
            *oracle,
            *refine,
            swarm,
            out_prefix.as_deref(),
        ),
        Command::Balance {
            source,
            n,
            method,
            refine,
            seed,
            swarm,
        } => cmd_balance(source, *n, *method, *refine, *seed, swarm),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
