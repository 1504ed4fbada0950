//! Configuration-driven experiment runner over `ymcal_core`.
//!
//! Exit codes of [`run`] and [`sweep`]: 0 when every requested check passes,
//! 2 when a check fails, 1 on configuration, numerical or I/O errors.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod sweep;

use std::path::{Path, PathBuf};

use config::ExperimentConfig;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

/// Environment variable that fixes the worker count, overriding the config.
pub const THREADS_VAR: &str = "YMCAL_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        source: ymcal_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("environment: {0}")]
    Environment(String),
}

/// Progress notes on stderr; silent unless verbose.
#[derive(Clone, Copy, Debug, Default)]
pub struct Log {
    pub verbose: bool,
}

impl Log {
    pub fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[ymcal] {}", msg.as_ref());
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::parse(&text)
}

/// Worker count: `YMCAL_THREADS` wins over the config, which wins over all cores.
pub fn worker_count(cfg: &ExperimentConfig) -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Environment(format!(
                "{THREADS_VAR}={v:?} is not a positive integer"
            ))),
        },
        Err(_) => Ok(cfg.workers),
    }
}

fn with_pool<T: Send>(cfg: &ExperimentConfig, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = worker_count(cfg)? {
        b = b.num_threads(k);
    }
    let pool = b
        .build()
        .map_err(|e| CliError::Environment(e.to_string()))?;
    Ok(pool.install(f))
}

fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir))
}

fn report_error(e: &CliError) -> i32 {
    eprintln!("ymcal: {e}");
    EXIT_ERROR
}

/// Runs one experiment point and returns the exit code.
pub fn run(config: &Path, out: Option<&Path>, log: Log) -> i32 {
    let outcome = load_config(config).and_then(|cfg| {
        let dir = output_dir(&cfg, out);
        with_pool(&cfg, || pipeline::run_point(&cfg, &dir, &log))?
    });
    match outcome {
        Ok(o) => {
            for r in &o.reports {
                println!(
                    "{:<40} {} C = {:e}",
                    r.name,
                    if r.pass { "pass" } else { "FAIL" },
                    r.measured_constant
                );
            }
            if o.all_pass() {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => report_error(&e),
    }
}

/// Runs the amplitude × resolution sweep and returns the exit code.
pub fn sweep(config: &Path, out: Option<&Path>, log: Log) -> i32 {
    let outcome = load_config(config).and_then(|cfg| {
        let dir = output_dir(&cfg, out);
        with_pool(&cfg, || sweep::run_sweep(&cfg, &dir, &log))?
    });
    match outcome {
        Ok(o) => {
            for s in &o.scaling {
                println!(
                    "{:<40} n = {:<4} {} exponent {:.3}",
                    s.name, s.n, s.quantity, s.exponent
                );
            }
            for r in &o.refinement {
                println!(
                    "{:<40} a = {:e} n {} -> {} order {:.3}",
                    r.name, r.amplitude, r.n_coarse, r.n_fine, r.order
                );
            }
            if o.all_pass() {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => report_error(&e),
    }
}
