use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{error::ErrorKind, Parser, Subcommand};
use xxz_rectify::lattice::{build_geometry, GeometryKind};
use xxz_rectify::transport::{scan_six_site, sweep, SolveOptions, SCAN_DELTAS};
use xxz_rectify_cli::config::{ConfigError, RunConfig};
use xxz_rectify_cli::{output, presets};

const EXIT_CONFIG: u8 = 1;
const EXIT_UNCONVERGED: u8 = 2;

/// Spin-current rectification sweeps for boundary-driven XXZ lattices.
#[derive(Parser)]
#[command(name = "xxz-rectify", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Run a bundled configuration (see --list-presets)
    #[arg(long, global = true)]
    preset: Option<String>,

    /// CSV destination; overrides output.path from the config
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads for the sweep; overrides `workers` in the config (0 = all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Print the named geometries with site and reservoir counts
    #[arg(long)]
    list_geometries: bool,

    /// Print the bundled presets
    #[arg(long)]
    list_presets: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep Δ for one configuration file
    Run { config: Option<PathBuf> },
    /// Solve every six-site sub-lattice of the triangle under a homogeneous field
    ScanSixSite {
        #[arg(long)]
        left: usize,
        #[arg(long)]
        right: usize,
        #[arg(long)]
        h: f64,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Unconverged,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn pin_blas_threads() {
    extern "C" {
        fn openblas_set_num_threads(n: std::os::raw::c_int);
    }
    // the worker pool already provides the parallelism; nested BLAS threads
    // only oversubscribe
    unsafe { openblas_set_num_threads(1) }
}

fn list_geometries() {
    println!("{:<14} {:>5} {:>10} {:>5} {:>6} {:>8} {:>8}", "name", "sites", "columns", "left", "right", "gamma_L", "gamma_R");
    for kind in GeometryKind::NAMED {
        let spec = build_geometry(&kind).expect("named geometries are valid");
        let columns: Vec<String> = spec.column_sizes().iter().map(|c| c.to_string()).collect();
        println!(
            "{:<14} {:>5} {:>10} {:>5} {:>6} {:>8} {:>8}",
            kind.name(),
            spec.n_sites(),
            columns.join(","),
            spec.left_reservoir().len(),
            spec.right_reservoir().len(),
            spec.left_reservoir()[0].gamma,
            spec.right_reservoir()[0].gamma
        );
    }
}

fn list_presets() {
    for (name, text) in presets::PRESETS {
        let about = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
        println!("{name:<32} {about}");
    }
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Config(format!("--workers: {e}")))
}

/// Opens the CSV sink: a file if a path is given, stdout otherwise.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Failure::Config(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn run(cfg: RunConfig, cli: &Cli) -> Result<(), Failure> {
    let plan = cfg.plan()?;
    let workers = cli.workers.unwrap_or(cfg.workers);
    let path = cli.output.clone().or(cfg.output.path.as_ref().map(PathBuf::from));
    // fail on an unwritable destination before spending time on the sweep
    let out = sink(path.as_deref())?;
    let label = cfg.name.as_deref().unwrap_or("run");
    let pool = worker_pool(workers)?;
    eprintln!(
        "{label}: {} sites, {} rows, {} workers",
        plan.spec.n_sites(),
        plan.deltas.len(),
        pool.current_num_threads()
    );
    let start = Instant::now();
    let rows = pool
        .install(|| sweep(&plan.spec, &plan.params, &plan.drive, &plan.deltas, &plan.options))
        .map_err(|e| Failure::Config(e.to_string()))?;
    for row in &rows {
        eprintln!("{}", output::summary_line(row));
    }
    output::write_sweep(out, &rows, cfg.output.timing).map_err(|e| Failure::Config(format!("writing CSV: {e}")))?;
    let failed = rows.iter().filter(|r| r.failed()).count();
    eprintln!(
        "{label}: {} rows, {failed} failed, {:.1} s{}",
        rows.len(),
        start.elapsed().as_secs_f64(),
        path.map(|p| format!(", written to {}", p.display())).unwrap_or_default()
    );
    if failed > 0 {
        Err(Failure::Unconverged)
    } else {
        Ok(())
    }
}

fn scan(left: usize, right: usize, h: f64, cli: &Cli) -> Result<(), Failure> {
    if left == 0 || right == 0 {
        return Err(Failure::Config("--left and --right must be at least 1".into()));
    }
    if !h.is_finite() {
        return Err(Failure::Config("--h must be finite".into()));
    }
    let out = cli.output.as_deref().map(|p| sink(Some(p))).transpose()?;
    let pool = worker_pool(cli.workers.unwrap_or(0))?;
    let start = Instant::now();
    let report = pool
        .install(|| scan_six_site(left, right, h, &SolveOptions::default()))
        .map_err(|e| Failure::Config(e.to_string()))?;
    for e in report.entries.iter().filter(|e| e.row.failed()) {
        eprintln!("geometry {}: {}", e.geometry + 1, output::summary_line(&e.row));
    }
    if let Some(out) = out {
        output::write_scan(out, &report, true).map_err(|e| Failure::Config(format!("writing CSV: {e}")))?;
    }
    let deltas: Vec<String> = SCAN_DELTAS.iter().map(|d| output::format_number(*d)).collect();
    println!(
        "six-site scan (left {left}, right {right}, h = {}): {} geometries x Δ in {{{}}}, max |R| = {:.3e}, \
         {} degenerate, {} failed, {:.1} s",
        output::format_number(h),
        report.geometries.len(),
        deltas.join(", "),
        report.max_abs_r(),
        report.degenerate(),
        report.failures(),
        start.elapsed().as_secs_f64()
    );
    if report.failures() > 0 {
        Err(Failure::Unconverged)
    } else {
        Ok(())
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    if cli.list_geometries || cli.list_presets {
        if cli.list_geometries {
            list_geometries();
        }
        if cli.list_presets {
            list_presets();
        }
        return Ok(());
    }
    match (&cli.command, &cli.preset) {
        (Some(Command::ScanSixSite { left, right, h }), _) => scan(*left, *right, *h, cli),
        (Some(Command::Run { config: Some(_) }), Some(_)) => {
            Err(Failure::Config("give either a config file or --preset, not both".into()))
        }
        (Some(Command::Run { config: Some(path) }), None) => run(RunConfig::load(path)?, cli),
        (Some(Command::Run { config: None }) | None, Some(name)) => run(presets::load(name)?, cli),
        (Some(Command::Run { config: None }) | None, None) => {
            Err(Failure::Config("nothing to do: give `run <config>`, --preset <name> or a listing flag".into()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    pin_blas_threads();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Unconverged) => ExitCode::from(EXIT_UNCONVERGED),
    }
}
