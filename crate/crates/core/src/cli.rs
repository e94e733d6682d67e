//! `rotavg` command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags or flag values),
//! 2 on runtime, parse and numerical errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certificate::{certify, default_tolerance, Certificate};
use crate::error::Error;
use crate::graph::{objective, RaGraph};
use crate::io::{self, BenchCell, BenchReport, ConfigEcho, Report};
use crate::solvers::{solve, Algorithm, Init, Solution, SolverConfig, SweepOrder};
use crate::synth::{generate, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "rotavg", version, about = "Rotation averaging on SO(3)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic instance and its ground truth (`<out>.truth`).
    Generate(GenerateArgs),
    /// Solve an instance with BCD or SUM.
    Solve(SolveArgs),
    /// Check the global-optimality certificate of a solution.
    Certify(CertifyArgs),
    /// Run a grid of synthetic experiments and aggregate per cell.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    /// Noise angle standard deviation in radians.
    #[arg(long, allow_negative_numbers = true)]
    phi: f64,
    /// Edge-drop probability in [0, 1).
    #[arg(long, allow_negative_numbers = true)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Read --phi as the variance of the noise angle.
    #[arg(long)]
    phi_is_variance: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgorithmArg {
    Bcd,
    Sum,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Bcd => Algorithm::Bcd,
            AlgorithmArg::Sum => Algorithm::Sum,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    Identity,
    Random,
    SpanningTree,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepArg {
    GaussSeidel,
    Jacobi,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Bcd)]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    eps: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = InitArg::SpanningTree)]
    init: InitArg,
    /// Start from this solution file instead of --init.
    #[arg(long, conflicts_with = "init")]
    init_solution: Option<PathBuf>,
    /// Seed for --init random.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Solve SUM subproblems on one thread.
    #[arg(long)]
    serial: bool,
    /// BCD update order.
    #[arg(long, value_enum, default_value_t = SweepArg::GaussSeidel)]
    sweep: SweepArg,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    /// Defaults to 1e-6 times the vertex count.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    phi_list: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    p_list: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [AlgorithmArg::Bcd, AlgorithmArg::Sum])]
    algorithms: Vec<AlgorithmArg>,
    /// Run `r` of every cell uses seed `seed + r`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    eps: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long)]
    phi_is_variance: bool,
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Certify(a) => cmd_certify(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn emit(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<(), Failure> {
    writeln!(out, "{line}").map_err(|e| Failure::Runtime(e.into()))
}

fn truth_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".truth");
    PathBuf::from(s)
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let spec = SynthSpec {
        n: a.n,
        phi: a.phi,
        p: a.p,
        seed: a.seed,
        phi_is_variance: a.phi_is_variance,
    };
    spec.validate().map_err(usage)?;
    let inst = generate(&spec)?;
    io::write_graph(&a.out, &inst.graph)?;
    let truth = truth_path(&a.out);
    io::write_solution(&truth, &inst.truth)?;
    emit(
        out,
        format_args!(
            "n={} edges={} graph={} truth={}",
            inst.graph.vertex_count(),
            inst.graph.edge_count(),
            a.out.display(),
            truth.display()
        ),
    )
}

fn solver_config(a: &SolveArgs) -> Result<SolverConfig, Failure> {
    let init = match (&a.init_solution, a.init) {
        (Some(path), _) => Init::Explicit(io::read_solution(path)?),
        (None, InitArg::Identity) => Init::Identity,
        (None, InitArg::Random) => Init::Random { seed: a.seed },
        (None, InitArg::SpanningTree) => Init::SpanningTree,
    };
    Ok(SolverConfig {
        epsilon: a.eps,
        max_iter: a.max_iter,
        init,
        parallel: !a.serial,
        sweep: match a.sweep {
            SweepArg::GaussSeidel => SweepOrder::GaussSeidel,
            SweepArg::Jacobi => SweepOrder::Jacobi,
        },
        check_feasibility: false,
    })
}

fn init_name(a: &SolveArgs) -> String {
    match (&a.init_solution, a.init) {
        (Some(p), _) => format!("explicit:{}", p.display()),
        (None, InitArg::Identity) => "identity".into(),
        (None, InitArg::Random) => "random".into(),
        (None, InitArg::SpanningTree) => "spanning-tree".into(),
    }
}

fn solve_report(
    g: &RaGraph,
    algorithm: Algorithm,
    sol: &Solution,
    cert: &Certificate,
) -> Result<Report, Error> {
    let obj = objective(g, &sol.rotations)?;
    Ok(Report {
        n: g.vertex_count(),
        num_edges: g.edge_count(),
        algorithm: Some(algorithm.to_string()),
        avg_error: obj / g.edge_count().max(1) as f64,
        objective: obj,
        iterations: Some(sol.trace.iterations),
        converged: Some(sol.trace.converged),
        time_s: Some(sol.trace.time_s()),
        mu: sol.mu,
        min_eig: cert.min_eig,
        asymmetry: cert.asymmetry,
        optimal: cert.optimal,
        tol: cert.tol,
        seed: None,
        config: ConfigEcho::default(),
    })
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<(), Failure> {
    // Flag checks come before any file access so bad values are usage errors.
    SolverConfig {
        epsilon: a.eps,
        max_iter: a.max_iter,
        ..SolverConfig::default()
    }
    .validate()
    .map_err(usage)?;
    let g = io::read_graph(&a.graph)?;
    let cfg = solver_config(a)?;
    let algorithm = Algorithm::from(a.algorithm);
    let sol = solve(&g, algorithm, &cfg)?;
    let cert = certify(&g, &sol.rotations, default_tolerance(g.vertex_count()))?;

    if let Some(path) = &a.out {
        io::write_solution(path, &sol.rotations)?;
    }
    if let Some(path) = &a.trace {
        io::write_trace(path, &sol.trace)?;
    }
    let mut report = solve_report(&g, algorithm, &sol, &cert)?;
    report.seed = matches!(a.init, InitArg::Random).then_some(a.seed);
    report.config = ConfigEcho {
        graph: Some(a.graph.display().to_string()),
        solution: a.out.as_ref().map(|p| p.display().to_string()),
        epsilon: Some(cfg.epsilon),
        max_iter: Some(cfg.max_iter),
        init: Some(init_name(a)),
        sweep: (algorithm == Algorithm::Bcd).then(|| {
            match cfg.sweep {
                SweepOrder::GaussSeidel => "gauss-seidel",
                SweepOrder::Jacobi => "jacobi",
            }
            .to_string()
        }),
        parallel: (algorithm == Algorithm::Sum).then_some(cfg.parallel),
    };
    if let Some(path) = &a.report {
        io::write_json(path, &report)?;
    }
    emit(
        out,
        format_args!(
            "algorithm={} objective={} avg_error={} iterations={} converged={} time_s={:.6} min_eig={:e} optimal={}",
            algorithm,
            io::format_f64(report.objective),
            io::format_f64(report.avg_error),
            sol.trace.iterations,
            sol.trace.converged,
            sol.trace.time_s(),
            cert.min_eig,
            cert.optimal
        ),
    )
}

fn cmd_certify(a: &CertifyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if let Some(t) = a.tol {
        if t.is_nan() || t <= 0.0 {
            return Err(Failure::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let g = io::read_graph(&a.graph)?;
    let r = io::read_solution(&a.solution)?;
    if r.len() != g.vertex_count() {
        return Err(Error::invalid(format!(
            "solution has {} rotations but graph has {} vertices",
            r.len(),
            g.vertex_count()
        ))
        .into());
    }
    let tol = a.tol.unwrap_or_else(|| default_tolerance(g.vertex_count()));
    let cert = certify(&g, &r, tol)?;
    let obj = objective(&g, &r)?;
    let report = Report {
        n: g.vertex_count(),
        num_edges: g.edge_count(),
        algorithm: None,
        avg_error: obj / g.edge_count().max(1) as f64,
        objective: obj,
        iterations: None,
        converged: None,
        time_s: None,
        mu: None,
        min_eig: cert.min_eig,
        asymmetry: cert.asymmetry,
        optimal: cert.optimal,
        tol: cert.tol,
        seed: None,
        config: ConfigEcho {
            graph: Some(a.graph.display().to_string()),
            solution: Some(a.solution.display().to_string()),
            ..ConfigEcho::default()
        },
    };
    if let Some(path) = &a.report {
        io::write_json(path, &report)?;
    }
    emit(
        out,
        format_args!(
            "min_eig={:e} asymmetry={:e} tol={:e} optimal={}",
            cert.min_eig, cert.asymmetry, cert.tol, cert.optimal
        ),
    )
}

#[derive(Default)]
struct Accumulator {
    avg_error: f64,
    min_eig: f64,
    time_s: f64,
    iterations: f64,
    converged: usize,
    runs: usize,
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.runs == 0 {
        return Err(Failure::Usage("--runs must be at least 1".into()));
    }
    let base = SolverConfig {
        epsilon: a.eps,
        max_iter: a.max_iter,
        parallel: !a.serial,
        ..SolverConfig::default()
    };
    base.validate().map_err(usage)?;
    for &n in &a.n_list {
        for &phi in &a.phi_list {
            for &p in &a.p_list {
                SynthSpec {
                    n,
                    phi,
                    p,
                    seed: a.seed,
                    phi_is_variance: a.phi_is_variance,
                }
                .validate()
                .map_err(usage)?;
            }
        }
    }
    let mut algorithms: Vec<Algorithm> = Vec::new();
    for alg in a.algorithms.iter().map(|&x| Algorithm::from(x)) {
        if !algorithms.contains(&alg) {
            algorithms.push(alg);
        }
    }

    emit(
        out,
        format_args!(
            "{:>6} {:>8} {:>6} {:>5} {:>14} {:>12} {:>12}",
            "n", "phi", "p", "alg", "avg_error", "min_eig", "time_s"
        ),
    )?;
    let mut cells = Vec::new();
    for &n in &a.n_list {
        for &phi in &a.phi_list {
            for &p in &a.p_list {
                let mut acc: Vec<Accumulator> = algorithms
                    .iter()
                    .map(|_| Accumulator {
                        min_eig: f64::INFINITY,
                        ..Accumulator::default()
                    })
                    .collect();
                for run in 0..a.runs {
                    let spec = SynthSpec {
                        n,
                        phi,
                        p,
                        seed: a.seed.wrapping_add(run as u64),
                        phi_is_variance: a.phi_is_variance,
                    };
                    let inst = generate(&spec)?;
                    for (k, &alg) in algorithms.iter().enumerate() {
                        let sol = solve(&inst.graph, alg, &base)?;
                        let cert = certify(&inst.graph, &sol.rotations, default_tolerance(n))?;
                        let obj = objective(&inst.graph, &sol.rotations)?;
                        let c = &mut acc[k];
                        c.avg_error += obj / inst.graph.edge_count() as f64;
                        c.min_eig = c.min_eig.min(cert.min_eig);
                        c.time_s += sol.trace.time_s();
                        c.iterations += sol.trace.iterations as f64;
                        c.converged += sol.trace.converged as usize;
                        c.runs += 1;
                    }
                }
                for (alg, c) in algorithms.iter().zip(acc) {
                    let runs = c.runs as f64;
                    let cell = BenchCell {
                        n,
                        phi,
                        p,
                        algorithm: alg.to_string(),
                        runs: c.runs,
                        mean_avg_error: c.avg_error / runs,
                        min_min_eig: c.min_eig,
                        mean_time_s: c.time_s / runs,
                        mean_iterations: c.iterations / runs,
                        converged_runs: c.converged,
                    };
                    emit(
                        out,
                        format_args!(
                            "{:>6} {:>8} {:>6} {:>5} {:>14.6} {:>12.3e} {:>12.6}",
                            cell.n,
                            cell.phi,
                            cell.p,
                            cell.algorithm,
                            cell.mean_avg_error,
                            cell.min_min_eig,
                            cell.mean_time_s
                        ),
                    )?;
                    cells.push(cell);
                }
            }
        }
    }
    if let Some(path) = &a.report {
        io::write_json(
            path,
            &BenchReport {
                seed: a.seed,
                phi_is_variance: a.phi_is_variance,
                epsilon: a.eps,
                max_iter: a.max_iter,
                cells,
            },
        )?;
    }
    Ok(())
}
