//! Scenario configs and the solve -> profile -> verdicts pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{build_chart_with, curvature_sign, CurvatureSign, MetricSpec, Topology};
use crate::complex::{duality_report, stream_function, system_coefficients, DualityReport};
use crate::error::{Error, Result};
use crate::level::{build_profile, coarea_identity, gauss_bonnet_check, GaussBonnet, Profile};
use crate::model::{builtin_model, conjugate_model, ModelSpec};
use crate::solver::{extremum_report, pde_residual, solve_dirichlet, ExtremumReport, SolverDiagnostics, SolverOptions};
use crate::verdicts::{evaluate, PinchedAttestation, Status, Verdict, VerdictContext, VerdictKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    #[serde(default = "flat")]
    pub metric: MetricSpec,
    #[serde(default = "annulus")]
    pub topology: Topology,
    pub r_outer: f64,
    /// Euclidean radius of the inner circle; defaults to 1 (0.9 / R for the hyperbolic disk)
    #[serde(default)]
    pub inner_radius: Option<f64>,
}

fn flat() -> MetricSpec {
    MetricSpec::Flat
}

fn annulus() -> Topology {
    Topology::AnnulusInDisk
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_sigma: usize,
    pub n_theta: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_sigma: 128, n_theta: 128 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub solver: f64,
    pub verdict: f64,
    pub cross_validation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: 1e-8,
            verdict: 1e-3,
            cross_validation: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub chart: ChartConfig,
    pub model: ModelSpec,
    pub t1: f64,
    pub t2: f64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// solver settings other than the tolerance
    #[serde(default)]
    pub solver: Option<SolverOptions>,
    #[serde(default = "all_verdicts")]
    pub verdicts: Vec<VerdictKind>,
    #[serde(default)]
    pub pinched: Option<PinchedAttestation>,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    17
}

fn all_verdicts() -> Vec<VerdictKind> {
    VerdictKind::ALL.to_vec()
}

/// Command-line overrides applied on top of a config.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.t1 < self.t2) {
            return Err(Error::Config(format!("need t1 < t2, got {} and {}", self.t1, self.t2)));
        }
        if self.samples < 9 {
            return Err(Error::Config(format!("samples must be at least 9, got {}", self.samples)));
        }
        builtin_model(&self.model).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(n) = o.grid {
            self.grid = GridConfig { n_sigma: n, n_theta: n };
        }
        if let Some(k) = o.samples {
            self.samples = k;
        }
        if let Some(t) = o.tol {
            self.tolerances.verdict = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut o = self.solver.clone().unwrap_or_default();
        o.tol = self.tolerances.solver;
        o
    }
}

/// A pipeline failure, tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|error| StageError { stage: name, error })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub scenario: String,
    pub model: String,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub grid: GridConfig,
    pub solver: SolverDiagnostics,
    pub pde_residual: f64,
    pub extremum: ExtremumReport,
    pub curvature_sign: CurvatureSign,
    pub verdict_context: VerdictContext,
    /// worst |coarea - fd| / |fd| for L' and L'' away from the two end samples
    pub cross_validation: [f64; 2],
    /// integral of L dt, area integral of |grad u|_g, relative gap
    pub coarea_identity: [f64; 3],
    pub gauss_bonnet: GaussBonnet,
    /// sup of |a1| + |a2|; None when the system could not be formed
    pub ellipticity_sup: Option<f64>,
    pub duality: Option<DualityReport>,
    pub conjugate_residual: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ResultBundle {
    pub scenario: Scenario,
    pub profile: Profile,
    pub verdicts: Vec<Verdict>,
    pub diagnostics: Diagnostics,
}

impl ResultBundle {
    pub fn any_fail(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == Status::Fail)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut csv = Vec::new();
        self.profile.write_csv(&mut csv)?;
        fs::write(dir.join("profile.csv"), csv)?;
        fs::write(dir.join("verdicts.json"), to_json(&self.verdicts)?)?;
        fs::write(dir.join("diagnostics.json"), to_json(&self.diagnostics)?)?;
        Ok(())
    }
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn run_scenario(sc: &Scenario) -> std::result::Result<ResultBundle, StageError> {
    let chart = stage(
        "chart",
        build_chart_with(
            sc.chart.r_outer,
            sc.grid.n_sigma,
            sc.grid.n_theta,
            sc.chart.metric.clone(),
            sc.chart.topology,
            sc.chart.inner_radius,
        ),
    )?;
    let chart = Arc::new(chart);
    let model = stage("model", builtin_model(&sc.model))?;
    let sol = stage("solve", solve_dirichlet(Arc::clone(&chart), &model, sc.t1, sc.t2, &sc.solver_options()))?;
    let profile = stage("profile", build_profile(&sol, sc.samples))?;
    let ctx = stage("verdicts", VerdictContext::from_solution(&sol))?;
    let verdicts = stage(
        "verdicts",
        evaluate(&sc.verdicts, &profile, &ctx, sc.pinched.as_ref(), sc.tolerances.verdict),
    )?;

    let mut warnings = Vec::new();
    let sign = curvature_sign(chart.curvature(), 1e-8);
    if sign != CurvatureSign::Nonpositive {
        warnings.push(format!("curvature is {sign:?} on the annulus; curvature-gated verdicts are not applicable"));
    }
    let extremum = extremum_report(&sol);
    if !extremum.above_floor {
        warnings.push(format!(
            "interior |grad u|_g = {:.3e} is below the floor {:.3e}",
            extremum.min_grad_interior, extremum.floor
        ));
    }
    let (e1, e2) = profile.cross_validation(1);
    if e1 > sc.tolerances.cross_validation || e2 > 3.0 * sc.tolerances.cross_validation {
        warnings.push(format!("coarea and spline derivatives differ: L' {e1:.2e}, L'' {e2:.2e}"));
    }
    let (lhs, rhs, gap) = stage("profile", coarea_identity(&sol, 24))?;
    let t_mid = 0.5 * (sc.t1 + sc.t2);
    let gauss_bonnet = stage("profile", gauss_bonnet_check(&sol, t_mid))?;
    let ellipticity_sup = match system_coefficients(&sol) {
        Ok(c) => {
            if c.sup_bound >= 1.0 {
                warnings.push(format!("sup |a1| + |a2| = {} is not below 1", c.sup_bound));
            }
            Some(c.sup_bound)
        }
        Err(e) => {
            warnings.push(format!("complex system not formed: {e}"));
            None
        }
    };
    let (duality, conjugate_residual) = match stream_function(&sol) {
        Ok(st) => (
            duality_report(&sol, &st).ok(),
            Some(crate::complex::conjugate_residual(&st, &conjugate_model(&model))),
        ),
        Err(e) => {
            warnings.push(format!("stream function failed: {e}"));
            (None, None)
        }
    };
    for v in &verdicts {
        if v.status == Status::NotApplicable {
            if let Some(n) = &v.note {
                warnings.push(format!("{} not applicable: {n}", v.name));
            }
        }
    }

    let diagnostics = Diagnostics {
        scenario: sc.name.clone(),
        model: model.name().to_string(),
        alpha: model.alpha(),
        beta: model.beta(),
        seed: sc.seed,
        grid: sc.grid,
        solver: sol.diagnostics.clone(),
        pde_residual: pde_residual(&sol),
        extremum,
        curvature_sign: sign,
        verdict_context: ctx,
        cross_validation: [e1, e2],
        coarea_identity: [lhs, rhs, gap],
        gauss_bonnet,
        ellipticity_sup,
        duality,
        conjugate_residual,
        warnings,
    };
    Ok(ResultBundle {
        scenario: sc.clone(),
        profile,
        verdicts,
        diagnostics,
    })
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const NOTHING_TO_RUN: i32 = 2;
    pub const ERROR: i32 = 3;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub config: String,
    pub scenario: Option<String>,
    /// verdict name -> status, empty when the scenario errored
    pub verdicts: BTreeMap<String, Status>,
    pub error: Option<String>,
    pub warnings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub rows: Vec<SuiteRow>,
    pub exit_code: i32,
}

impl SuiteSummary {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let names: Vec<String> = VerdictKind::ALL
            .iter()
            .map(|k| serde_json::to_value(k).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .collect();
        out.push_str(&format!("{:<28}", "scenario"));
        for n in &names {
            out.push_str(&format!(" {n:>16}"));
        }
        out.push_str("  warnings\n");
        for r in &self.rows {
            out.push_str(&format!("{:<28}", r.scenario.as_deref().unwrap_or(&r.config)));
            if let Some(e) = &r.error {
                out.push_str(&format!(" error: {e}\n"));
                continue;
            }
            for n in &names {
                let s = match r.verdicts.get(n) {
                    Some(Status::Pass) => "pass",
                    Some(Status::Fail) => "FAIL",
                    Some(Status::NotApplicable) => "n/a",
                    None => "-",
                };
                out.push_str(&format!(" {s:>16}"));
            }
            out.push_str(&format!("  {}\n", r.warnings));
        }
        out
    }
}

/// JSON configs in `dir`, sorted by file name.
pub fn suite_configs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.is_file())
        .collect();
    paths.sort();
    Ok(paths)
}

/// Runs every config in `dir` on a bounded worker pool and writes one
/// bundle per scenario under `out/<name>` plus `out/summary.json`.
pub fn run_suite(dir: &Path, out: &Path, overrides: &Overrides, workers: usize) -> Result<SuiteSummary> {
    use rayon::prelude::*;
    let paths = suite_configs(dir)?;
    if paths.is_empty() {
        return Ok(SuiteSummary {
            rows: Vec::new(),
            exit_code: exit::NOTHING_TO_RUN,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows: Vec<(SuiteRow, bool)> = pool.install(|| {
        paths
            .par_iter()
            .map(|p| {
                let config = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
                let sc = match Scenario::load(p).and_then(|s| s.with_overrides(overrides)) {
                    Ok(s) => s,
                    Err(e) => {
                        return (
                            SuiteRow {
                                config,
                                scenario: None,
                                verdicts: BTreeMap::new(),
                                error: Some(format!("[config] {e}")),
                                warnings: 0,
                            },
                            false,
                        )
                    }
                };
                let result = run_scenario(&sc).and_then(|b| {
                    stage("output", b.write_to(&out.join(&sc.name)))?;
                    Ok(b)
                });
                match result {
                    Ok(b) => (
                        SuiteRow {
                            config,
                            scenario: Some(sc.name.clone()),
                            verdicts: b.verdicts.iter().map(|v| (v.name.clone(), v.status)).collect(),
                            error: None,
                            warnings: b.diagnostics.warnings.len(),
                        },
                        b.any_fail(),
                    ),
                    Err(e) => (
                        SuiteRow {
                            config,
                            scenario: Some(sc.name.clone()),
                            verdicts: BTreeMap::new(),
                            error: Some(e.to_string()),
                            warnings: 0,
                        },
                        false,
                    ),
                }
            })
            .collect()
    });
    let errored = rows.iter().any(|r| r.0.error.is_some());
    let failed = rows.iter().any(|r| r.1);
    let exit_code = if rows.iter().all(|r| r.0.error.is_some()) {
        exit::NOTHING_TO_RUN
    } else if errored {
        exit::ERROR
    } else if failed {
        exit::FAIL
    } else {
        exit::OK
    };
    let summary = SuiteSummary {
        rows: rows.into_iter().map(|r| r.0).collect(),
        exit_code,
    };
    fs::create_dir_all(out)?;
    fs::write(out.join("summary.json"), to_json(&summary)?)?;
    Ok(summary)
}
