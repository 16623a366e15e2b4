use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use risp_core::diagnostics::fit_power_law;
use risp_core::harness::{
    apply_override, check_gradients, load_spec, preset_spec, read_trace, run_experiment, spec_to_string,
    ExperimentReport, ExperimentSpec, RunStatus, PRESETS,
};

/// Restarted inertia with score-based priors: run, sweep and inspect
/// desk-scale reconstruction experiments.
#[derive(Parser, Debug)]
#[command(name = "risp", version)]
struct Cli {
    /// Worker threads for independent runs; `RISP_THREADS` takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every solver of a spec on every instance.
    Run {
        spec: PathBuf,
        /// Replace the spec's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Finite-difference check of the fidelity and prior gradients.
    CheckGrad {
        spec: PathBuf,
        /// Largest acceptable relative error.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Fit a power law to the gradient-norm column of a trace.
    RateFit {
        trace: PathBuf,
        /// Window start (first-column units); default drops the first 10%.
        #[arg(long)]
        from: Option<f64>,
        /// Window end; defaults to the last row.
        #[arg(long)]
        to: Option<f64>,
    },
    /// Rerun a spec once per value of one parameter.
    Sweep {
        spec: PathBuf,
        /// Dotted path such as `solver.risp.inertia` or `problem.lambda`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Print the spec of a reference hyperparameter preset.
    Preset {
        /// One of the preset keys; `list` prints them all.
        key: String,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("RISP_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n = v.trim().parse::<usize>().with_context(|| format!("RISP_THREADS={v} is not a thread count"))?;
            Ok(Some(n))
        }
        _ => Ok(flag),
    }
}

fn spec_base(path: &Path) -> Option<&Path> {
    path.parent().filter(|p| !p.as_os_str().is_empty())
}

fn print_report(report: &ExperimentReport) {
    println!("solver,instance,status,iterations,restarts,final_psnr,iters_to_target,min_grad_norm");
    for r in &report.rows {
        println!(
            "{},{},{},{},{},{},{},{:.3e}",
            r.solver,
            r.instance,
            r.status.as_str(),
            r.iterations,
            r.restarts,
            r.final_psnr.map_or(String::new(), |p| format!("{p:.2}")),
            r.iters_to_target.map_or(String::new(), |k| k.to_string()),
            r.min_grad_norm
        );
        if !r.message.is_empty() {
            eprintln!("{} instance {}: {}", r.solver, r.instance, r.message);
        }
    }
    println!("# summary written to {}", report.summary_path.display());
}

fn diverged(report: &ExperimentReport) -> bool {
    report.rows.iter().any(|r| r.status != RunStatus::Ok)
}

fn run(spec: &ExperimentSpec, threads: Option<usize>, base: Option<&Path>) -> Result<bool> {
    print!("{}", spec.header()?);
    let report = run_experiment(spec, threads, base)?;
    print_report(&report);
    Ok(!diverged(&report))
}

/// Directory-safe rendering of a sweep value.
fn slug(value: &str) -> String {
    value.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

fn execute(cli: Cli) -> Result<bool> {
    let threads = threads(cli.threads)?;
    match cli.command {
        Command::Run { spec: path, output_dir } => {
            let mut spec = load_spec(&path)?;
            if let Some(dir) = output_dir {
                spec.output_dir = dir;
            }
            run(&spec, threads, spec_base(&path))
        }
        Command::CheckGrad { spec: path, tol } => {
            let spec = load_spec(&path)?;
            let mut ok = true;
            for c in check_gradients(&spec, spec_base(&path))? {
                let pass = c.error < tol;
                ok &= pass;
                println!("{:<20} {:<6} {:.3e} {}", c.component, c.point, c.error, if pass { "ok" } else { "FAIL" });
            }
            Ok(ok)
        }
        Command::RateFit { trace, from, to } => {
            let table = read_trace(&trace)?;
            let window = match (from, to) {
                (None, None) => None,
                (lo, hi) => {
                    let last = table.times().last().copied().unwrap_or(0.0);
                    Some((lo.unwrap_or(0.0), hi.unwrap_or(last)))
                }
            };
            let fit = fit_power_law(&table.times(), &table.grad_norms(), window)?;
            println!("slope {:.6}", fit.slope);
            println!("intercept {:.6}", fit.intercept);
            println!("r_squared {:.6}", fit.r_squared);
            println!("window {} {}", fit.window.0, fit.window.1);
            println!("points {}", fit.series.len());
            Ok(true)
        }
        Command::Sweep { spec: path, param, values } => {
            let spec = load_spec(&path)?;
            let mut ok = true;
            for value in &values {
                let mut point = apply_override(&spec, &param, value)?;
                point.output_dir = spec.output_dir.join(format!("{}={}", slug(&param), slug(value)));
                println!("# {param} = {value}");
                ok &= run(&point, threads, spec_base(&path))?;
            }
            Ok(ok)
        }
        Command::Preset { key, size, max_iter, out } => {
            if key == "list" {
                for p in PRESETS {
                    println!("{}", p.key);
                }
                return Ok(true);
            }
            let text = spec_to_string(&preset_spec(&key, size, max_iter)?)?;
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_path_safe() {
        assert_eq!(slug("solver.risp.inertia"), "solver.risp.inertia");
        assert_eq!(slug("\"a b\"/c"), "_a_b__c");
    }

    #[test]
    fn parses_sweep_values() {
        let cli = Cli::parse_from(["risp", "sweep", "s.toml", "--param", "problem.lambda", "--values", "1,2.5"]);
        let Command::Sweep { values, .. } = cli.command else { panic!() };
        assert_eq!(values, ["1", "2.5"]);
    }
}
