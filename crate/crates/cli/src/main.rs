use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pqga::harness::{
    bounds_summary, load_config, run_experiment, verify_bounds, write_outputs, ExperimentConfig, HarnessError,
    EXIT_BOUND_FAILURE, EXIT_SOLVER_FAILURE,
};

#[derive(Parser)]
#[command(
    name = "pqga",
    version,
    about = "Online optimization with periodic updates and long-term constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured policy and write CSV traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare measured regret and violation with the closed-form bounds.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the bound values for the configured parameters without running.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    Ok(load_config(path)?)
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            let outcome = run_experiment(&cfg)?;
            let files = write_outputs(&outcome, &cfg.out)?;
            for p in files.policies.iter().chain([&files.summary, &files.metadata]) {
                println!("{}", p.display());
            }
            Ok(if outcome.failed() { EXIT_SOLVER_FAILURE } else { 0 })
        }
        Command::Verify { config } => {
            let cfg = load(&config)?;
            let report = verify_bounds(&cfg)?;
            print!("{report}");
            Ok(if report.passed() { 0 } else { EXIT_BOUND_FAILURE })
        }
        Command::Bounds { config } => {
            let cfg = load(&config)?;
            print!("{}", bounds_summary(&cfg)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn configs() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
    }

    fn invoke(args: &[&str]) -> Result<i32, HarnessError> {
        run(Cli::try_parse_from(std::iter::once("pqga").chain(args.iter().copied())).unwrap())
    }

    fn write_config(dir: &Path, text: &str) -> String {
        let path = dir.join("config.toml");
        std::fs::write(&path, text).unwrap();
        path.to_str().unwrap().to_string()
    }

    #[test]
    fn run_writes_every_policy() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = configs().join("synthetic.toml");
        let out = tmp.path().join("out");
        let code = invoke(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code.unwrap(), 0);
        for name in ["pqga", "superslot", "per_period", "delayed", "offline", "summary"] {
            assert!(out.join(format!("{name}.csv")).is_file(), "{name}");
        }
        let meta = std::fs::read_to_string(out.join("metadata.txt")).unwrap();
        assert!(meta.contains("seed = 9"), "{meta}");
    }

    #[test]
    fn verify_and_bounds_succeed_on_shipped_configs() {
        let synthetic = configs().join("synthetic.toml");
        assert_eq!(invoke(&["verify", "--config", synthetic.to_str().unwrap()]).unwrap(), 0);
        let desk = configs().join("desk_mimo.toml");
        assert_eq!(invoke(&["bounds", "--config", desk.to_str().unwrap()]).unwrap(), 0);
    }

    #[test]
    fn configuration_errors_exit_with_two() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = write_config(tmp.path(), "horizon = 10\n");
        let err = invoke(&["run", "--config", &cfg]).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
        let err = invoke(&["bounds", "--config", "/nonexistent/config.toml"]).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }

    #[test]
    fn solver_failures_exit_with_three() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("out");
        let cfg = write_config(
            tmp.path(),
            "seed = 1\nhorizon = 20\npolicies = [\"pqga\", \"offline\"]\n\
             [problem]\nkind = \"synthetic\"\n\
             [algorithm]\ncorollary = 4\ntarget = \"static\"\ninner_max_iters = 1\n",
        );
        let code = invoke(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code.unwrap(), EXIT_SOLVER_FAILURE);
        // the partial trace is still written
        assert!(out.join("pqga.csv").is_file());
    }
}
