//! `gfbs` — run, certify, and cross-check the algorithm zoo from config files.
//!
//! Exit codes: `0` success / all requested checks pass, `1` configuration or
//! check failure, `2` solver failure, `3` oracle failure.

use clap::{Args, Parser, Subcommand};
use gfbs::bench::{self, BenchError};
use gfbs::certify::{certify_static, certify_trace, CertifyOptions};
use gfbs::config::RunConfig;
use gfbs::engine::EngineError;
use gfbs::report::CertificateReport;
use gfbs::zoo::{self, AlgorithmFitting, ZooError};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "gfbs",
    about = "Preconditioned forward-backward splitting: run, certify, compare",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one fitting and write its iteration trace as CSV.
    Run(CommonArgs),
    /// Verify static and per-iteration certificates against the oracle.
    Certify(CommonArgs),
    /// Compare the engine trajectory against the native implementation.
    Compare(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file(s); repeat the flag to fan runs across workers.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Override the problem seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the iteration budget from the config.
    #[arg(long)]
    iters: Option<usize>,
    /// Override the stopping tolerance from the config.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads when several configs are given.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

const COMPARE_TOL: f64 = 1e-8;

fn main() {
    let cli = Cli::parse();
    let (args, per_config): (&CommonArgs, fn(&RunConfig) -> i32) = match &cli.cmd {
        Cmd::Run(a) => (a, cmd_run),
        Cmd::Certify(a) => (a, cmd_certify),
        Cmd::Compare(a) => (a, cmd_compare),
    };
    std::process::exit(dispatch(args, per_config));
}

/// Load every config (applying flag overrides), then fan the jobs across
/// `--jobs` workers. The process exit code is the worst per-config code.
fn dispatch(args: &CommonArgs, per_config: fn(&RunConfig) -> i32) -> i32 {
    let mut configs = Vec::new();
    for path in &args.configs {
        match RunConfig::load(path) {
            Ok(mut cfg) => {
                if let Some(seed) = args.seed {
                    cfg.seed = seed;
                }
                if let Some(iters) = args.iters {
                    cfg.iters = iters;
                }
                if let Some(tol) = args.tol {
                    cfg.tol = tol;
                }
                if let Some(out) = &args.out {
                    cfg.out_dir = Some(out.clone());
                }
                configs.push(cfg);
            }
            Err(message) => {
                eprintln!("{message}");
                return 1;
            }
        }
    }

    let workers = args.jobs.max(1).min(configs.len().max(1));
    if workers <= 1 {
        return configs.iter().map(per_config).max().unwrap_or(0);
    }
    let queue = Mutex::new(configs.into_iter());
    let worst = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut worst = 0;
                    loop {
                        let next = queue.lock().unwrap().next();
                        match next {
                            Some(cfg) => worst = worst.max(per_config(&cfg)),
                            None => break worst,
                        }
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).max()
    });
    worst.unwrap_or(0)
}

fn zoo_exit_code(e: &ZooError) -> i32 {
    match e {
        ZooError::Engine(EngineError::SolverFailure { .. }) => 2,
        ZooError::Bench(BenchError::OracleNotConverged(_)) => 3,
        _ => 1,
    }
}

/// Generate the instance and assemble the fitting described by the config.
fn build_fitting(cfg: &RunConfig) -> Result<AlgorithmFitting, (i32, String)> {
    let problem = bench::generate(cfg.kind, cfg.seed, cfg.dims)
        .map_err(|e| (1, format!("cannot generate problem: {e}")))?;
    let params = cfg.params_over(zoo::default_params(cfg.algo, &problem));
    zoo::build(cfg.algo, &problem, &params)
        .map_err(|e| (zoo_exit_code(&e), format!("cannot build `{}`: {e}", cfg.algo)))
}

/// Out-of-range parameters are a warning, not an error: print them and
/// report whether the whole parameter set is admissible.
fn warn_inadmissible(fitting: &AlgorithmFitting) -> bool {
    let mut admissible = true;
    for item in &fitting.admissible {
        if !item.pass {
            admissible = false;
            eprintln!(
                "warning: {} outside its admissible range (slack {:.3e}); convergence guarantees void",
                item.name, item.worst_slack
            );
        }
    }
    admissible
}

fn file_stem(cfg: &RunConfig) -> String {
    format!("{}_{}_seed{}", cfg.algo, cfg.kind, cfg.seed)
}

fn write_out(cfg: &RunConfig, file_name: &str, contents: &str) -> Result<PathBuf, String> {
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return Err(format!("cannot create {}: {e}", dir.display()));
    }
    let path = dir.join(file_name);
    std::fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn cmd_run(cfg: &RunConfig) -> i32 {
    let fitting = match build_fitting(cfg) {
        Ok(f) => f,
        Err((code, message)) => {
            eprintln!("{message}");
            return code;
        }
    };
    let admissible = warn_inadmissible(&fitting);
    let mut opts = fitting.run_options(cfg.iters);
    opts.stop_tol = cfg.tol;
    let start = Instant::now();
    let trace = match fitting.model.run(&fitting.x0, &opts) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("solver failure: {e}");
            return 2;
        }
    };
    let wall = start.elapsed().as_secs_f64();
    let path = match write_out(cfg, &format!("{}.csv", file_stem(cfg)), &trace.to_csv()) {
        Ok(p) => p,
        Err(message) => {
            eprintln!("{message}");
            return 1;
        }
    };
    println!(
        "run algo={} problem={} seed={} iterations={} final_residual={:.6e} wall_time_s={:.3} admissible={} trace={}",
        cfg.algo,
        cfg.kind,
        cfg.seed,
        trace.iterations(),
        trace.final_residual(),
        wall,
        admissible,
        path.display()
    );
    0
}

/// Restrict a report to the checks named in the config (all gating checks
/// when none are named), and decide the pass/fail verdict.
fn verdict(report: &CertificateReport, requested: &[String]) -> (bool, Vec<String>) {
    if requested.is_empty() {
        return (report.all_pass(), Vec::new());
    }
    let mut missing = Vec::new();
    let mut ok = true;
    for name in requested {
        match report.find(name) {
            Some(item) => ok &= item.pass || item.informational,
            None => {
                ok = false;
                missing.push(name.clone());
            }
        }
    }
    (ok, missing)
}

fn cmd_certify(cfg: &RunConfig) -> i32 {
    let problem = match bench::generate(cfg.kind, cfg.seed, cfg.dims) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot generate problem: {e}");
            return 1;
        }
    };
    // The oracle gate comes first: certificates are meaningless without a
    // trusted reference point.
    if let Err(e) = bench::oracle_solve(&problem) {
        let code = if matches!(e, BenchError::OracleNotConverged(_)) {
            3
        } else {
            1
        };
        eprintln!("oracle failure: {e}");
        return code;
    }
    let fitting = match build_fitting(cfg) {
        Ok(f) => f,
        Err((code, message)) => {
            eprintln!("{message}");
            return code;
        }
    };
    warn_inadmissible(&fitting);

    let opts = CertifyOptions::default();
    let mut report = match certify_static(&fitting.model, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("certification failed: {e}");
            return 2;
        }
    };
    for item in &fitting.admissible {
        report.push(item.clone());
    }
    if let Some(x_star) = &fitting.x_star {
        let run = fitting
            .model
            .run(&fitting.x0, &fitting.run_options(cfg.iters));
        match run {
            Ok(trace) => match certify_trace(&fitting.model, &trace, x_star, &opts) {
                Ok(r) => report.extend(r),
                Err(e) => {
                    eprintln!("certification failed: {e}");
                    return 2;
                }
            },
            Err(e) => {
                eprintln!("solver failure: {e}");
                return 2;
            }
        }
    }

    let (pass, missing) = verdict(&report, &cfg.checks);
    for name in &missing {
        eprintln!("requested check `{name}` not produced for this fitting");
    }
    let text = report.to_string();
    print!("{text}");
    match write_out(cfg, &format!("{}_report.txt", file_stem(cfg)), &text) {
        Ok(path) => println!(
            "certify algo={} problem={} seed={} verdict={} report={}",
            cfg.algo,
            cfg.kind,
            cfg.seed,
            if pass { "PASS" } else { "FAIL" },
            path.display()
        ),
        Err(message) => {
            eprintln!("{message}");
            return 1;
        }
    }
    if pass {
        0
    } else {
        1
    }
}

fn cmd_compare(cfg: &RunConfig) -> i32 {
    let mut fitting = match build_fitting(cfg) {
        Ok(f) => f,
        Err((code, message)) => {
            eprintln!("{message}");
            return code;
        }
    };
    match zoo::equivalence_deviation(&mut fitting, cfg.iters) {
        Ok(dev) => {
            println!(
                "compare algo={} problem={} seed={} iterations={} max_deviation={:.6e}",
                cfg.algo, cfg.kind, cfg.seed, cfg.iters, dev
            );
            if dev <= COMPARE_TOL {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("comparison failed: {e}");
            zoo_exit_code(&e)
        }
    }
}
