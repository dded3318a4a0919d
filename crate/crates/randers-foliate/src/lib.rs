//! Front end for `randers-foliate-core`: run configuration, parallel
//! resolution sweeps, report files and field dumps.

pub mod config;
pub mod dump;
pub mod output;

use std::fmt::Write as _;

use randers_foliate_core::grid::{build_example, CATALOG};
use randers_foliate_core::verify::{all_pass, evaluate_formulas, merge_reports, Formula, ResidualReport};
use rayon::prelude::*;

pub use config::{ConfigError, Format, RawConfig, RunConfig};

/// Environment fallback for `--jobs`.
pub const JOBS_ENV: &str = "RANDERS_FOLIATE_JOBS";

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Compute(randers_foliate_core::Error),
    Io(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Compute(e) => write!(f, "computation failed: {e}"),
            RunError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            // Building an example can reject parameters (‖β‖ ≥ 1 and the like).
            RunError::Compute(randers_foliate_core::Error::Validation(_))
            | RunError::Compute(randers_foliate_core::Error::Domain { .. }) => 2,
            _ => 1,
        }
    }
}

/// Builds the example at every resolution and evaluates the formulas, one
/// job per resolution on at most `jobs` workers. The merged output does not
/// depend on the worker count.
pub fn run_reports(cfg: &RunConfig) -> Result<Vec<ResidualReport>, RunError> {
    let jobs = cfg.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| RunError::Io(format!("cannot start worker pool: {e}")))?;
    // The identity suite does not depend on the grid: run it once.
    let geometric: Vec<Formula> = cfg.formulas.iter().copied().filter(|f| *f != Formula::Appendix).collect();
    let per_res: Vec<Result<Vec<ResidualReport>, RunError>> = pool.install(|| {
        cfg.resolutions
            .par_iter()
            .map(|&res| {
                let m = build_example(&cfg.example, res).map_err(RunError::Compute)?;
                let mut formulas = geometric.clone();
                if res == cfg.resolutions[0] && cfg.formulas.contains(&Formula::Appendix) {
                    formulas.push(Formula::Appendix);
                }
                evaluate_formulas(&m, cfg.scheme, &formulas, cfg.seed).map_err(RunError::Compute)
            })
            .collect()
    });
    let mut all = Vec::new();
    for r in per_res {
        all.extend(r?);
    }
    Ok(merge_reports(all))
}

/// Runs and writes the report. Returns the exit code: 0 when every
/// applicable verdict passes, 1 otherwise.
pub fn run(cfg: &RunConfig) -> Result<(i32, Vec<ResidualReport>), RunError> {
    let reports = run_reports(cfg)?;
    if let Some(path) = &cfg.out {
        let io = |e: &dyn std::fmt::Display| RunError::Io(format!("cannot write {}: {e}", path.display()));
        match cfg.format {
            Format::Json => std::fs::write(path, output::to_json(&reports)).map_err(|e| io(&e))?,
            Format::Csv => {
                let f = std::fs::File::create(path).map_err(|e| io(&e))?;
                output::write_csv(&reports, std::io::BufWriter::new(f)).map_err(|e| io(&e))?;
            }
        }
    }
    Ok((if all_pass(&reports) { 0 } else { 1 }, reports))
}

/// Example names, parameters with defaults, and hypothesis profiles, in
/// catalog order; then the formula groups.
pub fn list_catalog() -> String {
    let mut s = String::from("examples:\n");
    for e in CATALOG {
        let _ = writeln!(s, "{}: {}", e.name, e.profile);
        let _ = writeln!(s, "    {} (default resolution {})", e.summary, e.default_resolution);
        for p in e.params {
            let _ = writeln!(s, "    --param {}={}  {}", p.name, p.default, p.help);
        }
    }
    s.push_str("\nformulas (comma-separated, or all):\n");
    for f in Formula::ALL {
        let _ = writeln!(s, "{:<24} {}", f.name(), f.summary());
    }
    s
}
