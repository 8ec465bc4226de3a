//! `qnp`: runs the benchmark cases, reports circuit resources, and applies
//! single operators for debugging. `QNP_THREADS` caps worker parallelism.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qnp_core::field::{BoundaryKind, Field2D};
use qnp_core::multigrid::{apply_operator_sliding_window, Backend, CallCounters, SolverConfig};
use qnp_core::pde_suite::{
    run_convection_diffusion_case, run_diffusion_case, run_linear_system_case,
    run_navier_stokes_case, run_poisson_case, NsOptions,
};
use qnp_core::qconv::circuit_stats;
use qnp_core::stencils::{
    assemble_operator, central_convection_kernel, convfem_convection_kernel,
    convfem_diffusion_kernel, identity_kernel, laplacian_fdm_kernel, upwind_convection_kernel,
    OperatorSpec,
};

use config::{load_config_file, parse_backend, parse_grid, parse_scheme, RunConfig};

#[derive(Parser)]
#[command(name = "qnp", version, about = "Hybrid quantum-classical multigrid PDE solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark case and emit metrics and field snapshots.
    Run(RunArgs),
    /// Report circuit resources (qubits, gates, depth) for a window size.
    Stats(StatsArgs),
    /// Apply one operator to a field with both backends and compare.
    Convolve(ConvolveArgs),
}

#[derive(Args)]
struct RunArgs {
    /// linear | poisson | diffusion | convection-diffusion | navier-stokes
    #[arg(long)]
    case: Option<String>,
    /// quantum | classical | hybrid-spot-check
    #[arg(long, value_parser = parse_backend)]
    backend: Option<Backend>,
    /// Quantum window size.
    #[arg(long = "K")]
    window: Option<usize>,
    /// Grid as HxW (linear case only).
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Maximum W-cycles per solve.
    #[arg(long)]
    cycles: Option<usize>,
    /// Relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Time steps for the transient cases.
    #[arg(long)]
    steps: Option<usize>,
    /// Pre-smoothing sweeps.
    #[arg(long)]
    eta: Option<usize>,
    /// Post-smoothing sweeps.
    #[arg(long)]
    phi: Option<usize>,
    /// Jacobi damping factor.
    #[arg(long)]
    omega: Option<f64>,
    /// Convection-diffusion spatial scheme: central | convfem.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<qnp_core::pde_suite::CdScheme>,
    /// Output directory (default qnp-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized inputs.
    #[arg(long)]
    seed: Option<u64>,
    /// Also emit PGM heatmaps of the field snapshots.
    #[arg(long)]
    heatmaps: bool,
    /// key=value file mirroring these flags (flags take precedence).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Window size K.
    #[arg(long = "K", default_value_t = 4)]
    window: usize,
    /// Directory to write circuit_stats.json into (also printed to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvolveArgs {
    /// Input field CSV (header H,W,h). Generated from --seed when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// identity | laplacian | upwind | central | convfem-diffusion | convfem-convection
    #[arg(long, default_value = "laplacian")]
    kernel: String,
    /// x velocity for convection kernels.
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    /// y velocity for convection kernels.
    #[arg(long, default_value_t = 0.5)]
    v: f64,
    #[arg(long, value_parser = parse_backend, default_value = "quantum")]
    backend: Backend,
    #[arg(long = "K", default_value_t = 4)]
    window: usize,
    /// Output field CSV.
    #[arg(long, default_value = "convolved.csv")]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(threads) = std::env::var("QNP_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: QNP_THREADS must be a positive integer, got '{threads}'");
                return ExitCode::FAILURE;
            }
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_case(args),
        Command::Stats(args) => stats(args),
        Command::Convolve(args) => convolve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run_case(args: RunArgs) -> Result<(), String> {
    let from_file = match &args.config {
        Some(path) => load_config_file(path)?,
        None => RunConfig::default(),
    };
    let from_flags = RunConfig {
        case: args.case,
        backend: args.backend,
        window: args.window,
        grid: args.grid,
        cycles: args.cycles,
        tol: args.tol,
        steps: args.steps,
        eta: args.eta,
        phi: args.phi,
        omega: args.omega,
        scheme: args.scheme,
        out: args.out,
        seed: args.seed,
        heatmaps: if args.heatmaps { Some(true) } else { None },
    };
    let merged = from_flags.or(from_file);
    let case = merged
        .case
        .clone()
        .ok_or_else(|| "no case given (use --case or a config file)".to_string())?;
    let out_dir = merged
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("qnp-out").join(&case));
    let overrides = merged.overrides();

    let report = match case.as_str() {
        "linear" => {
            let (h, w) = merged.grid.unwrap_or((16, 32));
            run_linear_system_case(h, w, &overrides)
        }
        "poisson" => run_poisson_case(&overrides),
        "diffusion" => run_diffusion_case(&overrides),
        "convection-diffusion" | "cd" => run_convection_diffusion_case(&overrides),
        "navier-stokes" | "ns" => {
            let opts = NsOptions {
                steps: merged.steps.unwrap_or(2000),
                backend: merged.backend.unwrap_or(Backend::HybridSpotCheck),
                window: merged.window.unwrap_or(4),
                snapshot_interval: if merged.heatmaps.unwrap_or(false) { 500 } else { 0 },
                ..NsOptions::default()
            };
            run_navier_stokes_case(&opts).map(|(report, _)| report)
        }
        other => {
            return Err(format!(
                "unknown case '{other}' (expected linear | poisson | diffusion | convection-diffusion | navier-stokes)"
            ))
        }
    }
    .map_err(|e| e.to_string())?;

    output::emit_report(&out_dir, &report, merged.heatmaps.unwrap_or(false))
        .map_err(|e| format!("cannot write {out_dir:?}: {e}"))?;
    println!("case {} -> {}", report.name, out_dir.display());
    for (k, v) in &report.metrics {
        println!("  {k} = {v:.6e}");
    }
    if let Some(step) = report.failed_at_step {
        return Err(format!("case diverged at step {step}"));
    }
    Ok(())
}

fn stats_json(window: usize) -> Result<String, String> {
    let s = circuit_stats(window).map_err(|e| e.to_string())?;
    Ok(format!(
        "{{\n  \"K\": {window},\n  \"n_qubits\": {},\n  \"gate_count\": {},\n  \"depth\": {},\n  \"counting_convention\": \"{}\"\n}}\n",
        s.n_qubits, s.gate_count, s.depth, s.counting_convention
    ))
}

fn stats(args: StatsArgs) -> Result<(), String> {
    let json = stats_json(args.window)?;
    print!("{json}");
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir).map_err(|e| format!("cannot create {dir:?}: {e}"))?;
        let path = dir.join("circuit_stats.json");
        std::fs::write(&path, &json).map_err(|e| format!("cannot write {path:?}: {e}"))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn kernel_by_name(name: &str, u: f64, v: f64) -> Result<OperatorSpec, String> {
    let kernel = match name {
        "identity" => identity_kernel(),
        "laplacian" => laplacian_fdm_kernel(1.0).map_err(|e| e.to_string())?,
        "upwind" => upwind_convection_kernel(u, v, 1.0).map_err(|e| e.to_string())?,
        "central" => central_convection_kernel(u, v, 1.0).map_err(|e| e.to_string())?,
        "convfem-diffusion" => convfem_diffusion_kernel(1.0).map_err(|e| e.to_string())?,
        "convfem-convection" => {
            convfem_convection_kernel(u, v, 1.0).map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown kernel '{other}'")),
    };
    assemble_operator(&[(1.0, kernel)], name, 1.0).map_err(|e| e.to_string())
}

fn convolve(args: ConvolveArgs) -> Result<(), String> {
    let field = match &args.input {
        Some(path) => output::read_field_csv(path).map_err(|e| format!("{path:?}: {e}"))?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            Field2D::from_fn(10, 10, 1.0, BoundaryKind::DirichletZero, |_, _| {
                rng.gen_range(-1.0..1.0)
            })
        }
    };
    let op = kernel_by_name(&args.kernel, args.u, args.v)?;

    let quantum_config = SolverConfig {
        backend: Backend::Quantum,
        window: args.window,
        ..SolverConfig::default()
    };
    let classical_config = SolverConfig {
        backend: Backend::Classical,
        ..SolverConfig::default()
    };
    let counters = CallCounters::default();
    let q = apply_operator_sliding_window(&field, &op, &quantum_config, &counters)
        .map_err(|e| e.to_string())?;
    let c = apply_operator_sliding_window(&field, &op, &classical_config, &counters)
        .map_err(|e| e.to_string())?;
    let diff = q.max_abs_diff(&c).map_err(|e| e.to_string())?;
    println!(
        "kernel {} on {}x{}: max |quantum - classical| = {diff:.3e} ({} quantum windows)",
        args.kernel,
        field.height(),
        field.width(),
        counters.quantum_calls()
    );
    let selected = match args.backend {
        Backend::Quantum => &q,
        _ => &c,
    };
    output::write_field_csv(&args.out, selected)
        .map_err(|e| format!("cannot write {:?}: {e}", args.out))?;
    println!("wrote {}", args.out.display());
    Ok(())
}
