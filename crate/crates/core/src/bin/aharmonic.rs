use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use aharmonic::chart::MetricSpec;
use aharmonic::experiment::{exit, run_scenario, run_suite, to_json, Overrides, Scenario};
use aharmonic::hessian::{cordes_suite, identity_suite, CordesPairReport, IdentityStudy};
use aharmonic::model::{builtin_model, log_grid, structure_report, ModelSpec, StructureReport};
use aharmonic::verdicts::Status;
use aharmonic::Error;

#[derive(Parser)]
#[command(name = "aharmonic", version, about = "Level-curve convexity experiments for a-harmonic functions on surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// grid size N (N x N nodes)
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// profile samples for run/suite, Cordes samples for identities
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// verdict tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write profile.csv, verdicts.json, diagnostics.json
    Run { config: PathBuf },
    /// Run every *.json scenario in a directory
    Suite {
        dir: PathBuf,
        /// scenarios solved concurrently
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
    /// Structure report (alpha, beta, (A'), (A'') class) for a model spec
    CheckModel { model: PathBuf },
    /// Identity refinement studies and Cordes sampling
    Identities { chart: PathBuf },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IdentityConfig {
    #[serde(default = "flat")]
    metric: MetricSpec,
    #[serde(default = "default_grids")]
    grids: Vec<usize>,
}

fn flat() -> MetricSpec {
    MetricSpec::Flat
}

fn default_grids() -> Vec<usize> {
    vec![64, 128, 256]
}

#[derive(Serialize)]
struct ModelReport {
    model: String,
    alpha: f64,
    beta: f64,
    structure: StructureReport,
}

#[derive(Serialize)]
struct IdentityReport {
    studies: Vec<IdentityStudy>,
    cordes: Vec<CordesPairReport>,
    pass: bool,
}

fn fail(stage: &str, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error[{stage}]: {e}");
    ExitCode::from(exit::ERROR as u8)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_out(dir: &Option<PathBuf>, file: &str, body: &str) -> Result<(), Error> {
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
        std::fs::write(d.join(file), body)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = cli.common;
    let overrides = Overrides {
        grid: c.grid,
        samples: c.samples,
        tol: c.tol,
        seed: c.seed,
    };
    match cli.command {
        Command::Run { config } => {
            let sc = match Scenario::load(&config).and_then(|s| s.with_overrides(&overrides)) {
                Ok(s) => s,
                Err(e) => return fail("config", e),
            };
            let bundle = match run_scenario(&sc) {
                Ok(b) => b,
                Err(e) => return fail(e.stage, e.error),
            };
            let out = c.out.unwrap_or_else(|| PathBuf::from("out").join(&sc.name));
            if let Err(e) = bundle.write_to(&out) {
                return fail("output", e);
            }
            for v in &bundle.verdicts {
                let margin = v.margin.map_or("-".to_string(), |m| format!("{m:+.3e}"));
                println!("{:<16} {:<15} margin {margin}", v.name, status_word(v.status));
            }
            for w in &bundle.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", out.display());
            ExitCode::from(if bundle.any_fail() { exit::FAIL } else { exit::OK } as u8)
        }
        Command::Suite { dir, workers } => {
            let out = c.out.unwrap_or_else(|| PathBuf::from("out").join("suite"));
            match run_suite(&dir, &out, &overrides, workers) {
                Ok(summary) => {
                    if summary.rows.is_empty() {
                        eprintln!("no scenario configs in {}", dir.display());
                    } else {
                        print!("{}", summary.table());
                    }
                    ExitCode::from(summary.exit_code as u8)
                }
                Err(e) => {
                    if let Error::Io(ref io) = e {
                        if io.kind() == std::io::ErrorKind::NotFound {
                            eprintln!("error[config]: {}: {io}", dir.display());
                            return ExitCode::from(exit::NOTHING_TO_RUN as u8);
                        }
                    }
                    fail("suite", e)
                }
            }
        }
        Command::CheckModel { model } => {
            let spec: ModelSpec = match read_json(&model) {
                Ok(s) => s,
                Err(e) => return fail("config", e),
            };
            let m = match builtin_model(&spec) {
                Ok(m) => m,
                Err(e) => return fail("model", e),
            };
            let report = match structure_report(&m, &log_grid(1e-6, 1e3, 400)) {
                Ok(r) => r,
                Err(e) => return fail("model", e),
            };
            let body = match to_json(&ModelReport {
                model: m.name().to_string(),
                alpha: m.alpha(),
                beta: m.beta(),
                structure: report,
            }) {
                Ok(b) => b,
                Err(e) => return fail("output", e),
            };
            print!("{body}");
            if let Err(e) = write_out(&c.out, "model_report.json", &body) {
                return fail("output", e);
            }
            ExitCode::from(exit::OK as u8)
        }
        Command::Identities { chart } => {
            let cfg: IdentityConfig = match read_json(&chart) {
                Ok(s) => s,
                Err(e) => return fail("config", e),
            };
            let grids = match c.grid {
                Some(n) => vec![n / 4, n / 2, n],
                None => cfg.grids,
            };
            let studies = match identity_suite(&cfg.metric, &grids) {
                Ok(s) => s,
                Err(e) => return fail("identities", e),
            };
            let n = c.samples.unwrap_or(1_000_000) as u64;
            let cordes = match cordes_suite(n, c.seed.unwrap_or(0)) {
                Ok(r) => r,
                Err(e) => return fail("identities", e),
            };
            let tol = c.tol.unwrap_or(1e-10);
            let mut pass = true;
            for s in &studies {
                let ok = s.min_order() >= 1.8 && s.quadratic_residual.is_none_or(|q| q <= tol);
                pass &= ok;
                println!(
                    "{:<14} residuals {:?} min order {:.2} {}",
                    format!("{:?}", s.identity),
                    s.residuals.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>(),
                    s.min_order(),
                    if ok { "ok" } else { "FAIL" }
                );
            }
            for r in &cordes {
                let ok = r.claim.violations == 0 && r.discriminant.positive == 0;
                pass &= ok;
                println!(
                    "cordes {:<28} violations {} worst slack {:.3e} {}",
                    r.label,
                    r.claim.violations,
                    r.claim.worst_slack,
                    if ok { "ok" } else { "FAIL" }
                );
            }
            let body = match to_json(&IdentityReport { studies, cordes, pass }) {
                Ok(b) => b,
                Err(e) => return fail("output", e),
            };
            if let Err(e) = write_out(&c.out, "identities.json", &body) {
                return fail("output", e);
            }
            ExitCode::from(if pass { exit::OK } else { exit::FAIL } as u8)
        }
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::NotApplicable => "not_applicable",
    }
}
