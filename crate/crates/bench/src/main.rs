use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pint_bench::{compare, run_mgrit, run_sequential, MgritReport, Overrides, RunConfig, RunError};

#[derive(Parser)]
#[command(
    name = "pint-bench",
    version,
    about = "Sequential vs. MGRIT time integration of eddy-current problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the random Dahlquist forcing.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classical time stepping; writes sequential.csv.
    RunSequential,
    /// MGRIT solve; writes convergence.csv and work_model.csv.
    RunMgrit,
    /// Both, with the discrepancy and the modelled speedup.
    Compare,
    /// Print the effective configuration as JSON.
    PrintConfig,
}

fn load(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        workers: cli.workers,
        out: cli.out.clone(),
        seed: cli.seed,
    });
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let cfg = load(cli)?;
    match cli.command {
        Command::PrintConfig => {
            cfg.validate()?;
            println!("{}", cfg.to_json());
        }
        Command::RunSequential => {
            let r = run_sequential(&cfg)?;
            println!(
                "sequential: {} steps, phi = {}, final t = {}, |u|_2 = {:e}, |u|_max = {:e}",
                r.nt, r.phi_count, r.final_t, r.final_l2_norm, r.final_max_abs
            );
        }
        Command::RunMgrit => {
            let r = run_mgrit(&cfg)?;
            print_mgrit(&r);
        }
        Command::Compare => {
            let c = compare(&cfg)?;
            print_mgrit(&c.mgrit);
            println!(
                "modelled best speedup: {:.3} at {} workers",
                c.best_speedup, c.best_workers
            );
            match c.crossover_workers {
                Some(p) => println!("modelled speedup exceeds 1 from {p} workers"),
                None => println!("modelled speedup stays below 1 for the listed worker counts"),
            }
        }
    }
    Ok(())
}

fn print_mgrit(r: &MgritReport) {
    println!(
        "mgrit: {} relaxation, factors {:?}, {} workers, {} iterations, residual {:e} -> {:e} ({})",
        r.relaxation,
        r.factors,
        r.num_workers,
        r.iterations,
        r.initial_residual,
        r.final_residual,
        if r.converged { "converged" } else { "not converged" }
    );
    println!(
        "phi per iteration: {:.1} ({:.3} Nt)",
        r.phi_per_iteration,
        r.phi_per_iteration / r.nt as f64
    );
    if let Some(d) = r.discrepancy {
        println!("discrepancy vs sequential: {d:e}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
