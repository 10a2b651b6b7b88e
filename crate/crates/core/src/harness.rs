//! Experiment orchestration: config loading, figure-style runners, and
//! deterministic CSV/report emission.
//!
//! Config files are strict JSON (unknown keys rejected). Output file names
//! derive from a hash of the canonical config serialization plus a run label,
//! so identical configs overwrite their own artifacts and nothing else.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt_f64;
use crate::objective::{generate_quadratics, PenaltyModel};
use crate::schedule::{tuned_sigma, ActivationSchedule};
use crate::solver::{LambdaPolicy, RunTrace, Solver, SolverConfig, Variant};
use crate::splitting::{compute_constants, TheoryConstants};
use crate::topology::{generate_rgg, metropolis_weights, DEFAULT_RETRY_CAP};

/// Fraction of trailing iterations averaged for the limiting error.
pub const LIMITING_TAIL_FRACTION: f64 = 0.05;
/// A run has saturated once its error is within this factor of the limit.
pub const SATURATION_FACTOR: f64 = 1.1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("io ({path}): {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("run: {0}")]
    Run(String),
}

impl HarnessError {
    fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}

/// The paper's default connectivity radius `sqrt(ln n / n)`.
pub fn default_radius(n: usize) -> f64 {
    ((n as f64).ln() / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SingleRun,
    CompareSchedules,
    Histogram,
    AlphaSweep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphParams {
    /// Connectivity radius; `null` means `sqrt(ln n / n)`.
    pub radius: Option<f64>,
    pub seed: u64,
}

/// Step size `alpha`, either fixed or expressed as `1 / (factor * L)` with
/// `L` the realized Lipschitz constant of the generated problem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum AlphaSpec {
    Value(f64),
    InvLFactor(f64),
}

impl AlphaSpec {
    pub fn resolve(&self, l: f64) -> Result<f64, HarnessError> {
        let alpha = match *self {
            AlphaSpec::Value(v) => v,
            AlphaSpec::InvLFactor(f) => {
                if !(f > 0.0) {
                    return Err(HarnessError::Config(format!(
                        "inv_l_factor must be > 0, got {f}"
                    )));
                }
                1.0 / (f * l)
            }
        };
        if !(alpha > 0.0) {
            return Err(HarnessError::Config(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(alpha)
    }
}

/// A schedule whose geometric decay may be left to the tuned rule
/// `sigma = 1 - c alpha mu` (resolved after the problem is generated).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    AlwaysOn,
    GeometricToOne {
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        c: Option<f64>,
    },
    CappedGeometric {
        p_max: f64,
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        c: Option<f64>,
    },
    Constant {
        p: f64,
    },
    Safeguarded {
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        c: Option<f64>,
        p_floor: f64,
        sigma_cap: f64,
    },
}

fn resolve_sigma(
    sigma: Option<f64>,
    c: Option<f64>,
    alpha: f64,
    mu: f64,
) -> Result<f64, HarnessError> {
    match (sigma, c) {
        (Some(s), None) => Ok(s),
        (None, Some(c)) => tuned_sigma(alpha, mu, c).map_err(|e| HarnessError::Config(e.to_string())),
        (Some(_), Some(_)) => Err(HarnessError::Config(
            "schedule: give sigma or c, not both".into(),
        )),
        (None, None) => Err(HarnessError::Config(
            "schedule: one of sigma or c is required".into(),
        )),
    }
}

impl ScheduleSpec {
    pub fn resolve(&self, alpha: f64, mu: f64) -> Result<ActivationSchedule, HarnessError> {
        let schedule = match self {
            ScheduleSpec::AlwaysOn => ActivationSchedule::AlwaysOn,
            ScheduleSpec::GeometricToOne { sigma, c } => ActivationSchedule::GeometricToOne {
                sigma: resolve_sigma(*sigma, *c, alpha, mu)?,
            },
            ScheduleSpec::CappedGeometric { p_max, sigma, c } => {
                ActivationSchedule::CappedGeometric {
                    p_max: *p_max,
                    sigma: resolve_sigma(*sigma, *c, alpha, mu)?,
                }
            }
            ScheduleSpec::Constant { p } => ActivationSchedule::Constant { p: *p },
            ScheduleSpec::Safeguarded {
                sigma,
                c,
                p_floor,
                sigma_cap,
            } => ActivationSchedule::Safeguarded {
                sigma: resolve_sigma(*sigma, *c, alpha, mu)?,
                p_floor: *p_floor,
                sigma_cap: *sigma_cap,
            },
        };
        schedule
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(schedule)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ScheduleSpec::AlwaysOn => "always_on",
            ScheduleSpec::GeometricToOne { .. } => "geometric_to_one",
            ScheduleSpec::CappedGeometric { .. } => "capped_geometric",
            ScheduleSpec::Constant { .. } => "constant",
            ScheduleSpec::Safeguarded { .. } => "safeguarded",
        }
    }
}

fn default_eps() -> f64 {
    1.0
}
fn default_rho() -> f64 {
    1.0
}
fn default_max_iters() -> u64 {
    5000
}
fn default_lambda() -> LambdaPolicy {
    LambdaPolicy::Zero
}
fn default_paths() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    pub alpha: AlphaSpec,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_lambda")]
    pub lambda_policy: LambdaPolicy,
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    #[serde(default)]
    pub target_rel_error: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub diagnostics_enabled: bool,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub problem: ProblemParams,
    pub graph: GraphParams,
    pub solver: SolverParams,
    pub schedules: Vec<ScheduleSpec>,
    #[serde(default = "default_paths")]
    pub paths: u64,
    /// Relative-error target for histogram cost measurements.
    #[serde(default)]
    pub target_error: Option<f64>,
    /// Alpha grid for the sweep experiment.
    #[serde(default)]
    pub alphas: Option<Vec<AlphaSpec>>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.problem.n == 0 || self.problem.p == 0 {
            return Err(HarnessError::Config("n and p must be >= 1".into()));
        }
        if !(self.solver.eps > 0.0) {
            return Err(HarnessError::Config("eps must be > 0".into()));
        }
        if !(self.solver.rho >= 0.0) {
            return Err(HarnessError::Config("rho must be >= 0".into()));
        }
        if !(self.solver.theta >= 0.0) {
            return Err(HarnessError::Config("theta must be >= 0".into()));
        }
        if self.paths == 0 {
            return Err(HarnessError::Config("paths must be >= 1".into()));
        }
        if self.schedules.is_empty() {
            return Err(HarnessError::Config("at least one schedule is required".into()));
        }
        match self.kind {
            ExperimentKind::CompareSchedules => {
                if self.schedules.len() < 2 {
                    return Err(HarnessError::Config(
                        "compare_schedules needs at least two schedules".into(),
                    ));
                }
            }
            ExperimentKind::Histogram => {
                if self.paths < 2 {
                    return Err(HarnessError::Config("histogram needs paths >= 2".into()));
                }
                if self.target_error.is_none() {
                    return Err(HarnessError::Config(
                        "histogram needs target_error".into(),
                    ));
                }
            }
            ExperimentKind::AlphaSweep => {
                let count = self.alphas.as_ref().map_or(0, |a| a.len());
                if count < 1 {
                    return Err(HarnessError::Config(
                        "alpha_sweep needs a non-empty alphas list".into(),
                    ));
                }
            }
            ExperimentKind::SingleRun => {}
        }
        Ok(())
    }

    /// Replaces every seed in the spec with one master seed.
    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.problem.seed = seed;
        self.graph.seed = seed;
        self.solver.seed = seed;
        self
    }

    /// Short deterministic hash of the canonical serialization, used as the
    /// output-file prefix.
    pub fn config_hash(&self) -> String {
        let text = serde_json::to_string(self).expect("serializable");
        // FNV-1a, 64-bit
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Loads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
    let spec: ExperimentSpec = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

/// Instantiates the graph, problem and penalty model described by a spec.
pub fn build_model(spec: &ExperimentSpec) -> Result<PenaltyModel, HarnessError> {
    build_model_with_alpha(spec, &spec.solver.alpha)
}

fn build_model_with_alpha(
    spec: &ExperimentSpec,
    alpha: &AlphaSpec,
) -> Result<PenaltyModel, HarnessError> {
    let radius = spec.graph.radius.unwrap_or_else(|| default_radius(spec.problem.n));
    let graph = generate_rgg(spec.problem.n, radius, spec.graph.seed, DEFAULT_RETRY_CAP)
        .map_err(|e| HarnessError::Run(e.to_string()))?;
    let weighted = metropolis_weights(graph).map_err(|e| HarnessError::Run(e.to_string()))?;
    let problem = generate_quadratics(spec.problem.n, spec.problem.p, spec.problem.seed);
    let alpha = alpha.resolve(problem.l)?;
    Ok(PenaltyModel::new(problem, weighted, alpha))
}

fn solver_config(
    spec: &ExperimentSpec,
    model: &PenaltyModel,
    schedule: ActivationSchedule,
) -> SolverConfig {
    let variant = if schedule == ActivationSchedule::AlwaysOn {
        Variant::Standard
    } else {
        Variant::Idling
    };
    SolverConfig {
        alpha: model.alpha,
        eps: spec.solver.eps,
        rho: spec.solver.rho,
        theta: spec.solver.theta,
        lambda_policy: spec.solver.lambda_policy,
        schedule,
        variant,
        max_iters: spec.solver.max_iters,
        target_rel_error: spec.solver.target_rel_error,
        seed: spec.solver.seed,
        diagnostics_enabled: spec.solver.diagnostics_enabled,
        x0: spec.solver.x0.clone(),
    }
}

/// Bound constants evaluated at the spec's parameters, for summaries.
pub fn spec_constants(
    spec: &ExperimentSpec,
    model: &PenaltyModel,
) -> Result<TheoryConstants, HarnessError> {
    compute_constants(
        model.alpha,
        model.problem.mu,
        model.problem.l,
        spec.solver.theta,
        spec.solver.rho,
        model.graph.w_min,
        model.graph.w_max,
        spec.solver.eps,
        0.5,
        0.5,
    )
    .map_err(|e| HarnessError::Run(e.to_string()))
}

/// One labeled run and its scalar summaries.
#[derive(Debug, Clone)]
pub struct LabeledRun {
    pub label: String,
    pub schedule: ActivationSchedule,
    pub trace: RunTrace,
    pub limiting_error: f64,
    pub cost_to_target: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub runs: Vec<LabeledRun>,
}

fn run_one(
    spec: &ExperimentSpec,
    model: &PenaltyModel,
    schedule: ActivationSchedule,
    label: String,
    path: u64,
) -> Result<LabeledRun, HarnessError> {
    let config = solver_config(spec, model, schedule.clone());
    let solver = Solver::new(model, config).map_err(|e| HarnessError::Run(e.to_string()))?;
    let trace = solver.run(path).map_err(|e| HarnessError::Run(e.to_string()))?;
    let limiting_error = if trace.rows.is_empty() {
        0.0
    } else {
        trace.limiting_error(LIMITING_TAIL_FRACTION)
    };
    let cost_to_target = spec.target_error.and_then(|t| trace.cost_to_target(t));
    Ok(LabeledRun {
        label,
        schedule,
        trace,
        limiting_error,
        cost_to_target,
    })
}

/// Runs the single configured schedule once (path 0).
pub fn run_single(spec: &ExperimentSpec) -> Result<LabeledRun, HarnessError> {
    spec.validate()?;
    let model = build_model(spec)?;
    let schedule = spec.schedules[0].resolve(model.alpha, model.problem.mu)?;
    let label = format!("s0_{}", spec.schedules[0].label());
    run_one(spec, &model, schedule, label, 0)
}

/// Runs every schedule under a shared model and matched seeds.
pub fn run_compare(spec: &ExperimentSpec) -> Result<CompareOutcome, HarnessError> {
    spec.validate()?;
    let model = build_model(spec)?;
    let mut runs = Vec::with_capacity(spec.schedules.len());
    for (i, s) in spec.schedules.iter().enumerate() {
        let schedule = s.resolve(model.alpha, model.problem.mu)?;
        let label = format!("s{i}_{}", s.label());
        runs.push(run_one(spec, &model, schedule, label, 0)?);
    }
    Ok(CompareOutcome { runs })
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramRow {
    pub path_index: u64,
    /// Cost at the first target crossing, or the total cost spent when the
    /// path never reached the target.
    pub cost_to_target: f64,
    pub reached: bool,
}

#[derive(Debug, Clone)]
pub struct HistogramOutcome {
    pub rows: Vec<HistogramRow>,
    /// AlwaysOn cost to the same target; `None` when it never reached it.
    pub reference_cost: Option<f64>,
}

/// Multi-path cost-to-target study; paths fan out across workers and the
/// result order is by path index.
pub fn run_histogram(spec: &ExperimentSpec) -> Result<HistogramOutcome, HarnessError> {
    spec.validate()?;
    let target = spec
        .target_error
        .ok_or_else(|| HarnessError::Config("histogram needs target_error".into()))?;
    let model = build_model(spec)?;
    let schedule = spec
        .schedules
        .iter()
        .find(|s| !matches!(s, ScheduleSpec::AlwaysOn))
        .unwrap_or(&spec.schedules[0])
        .resolve(model.alpha, model.problem.mu)?;
    let mut config = solver_config(spec, &model, schedule);
    config.target_rel_error = Some(target);
    let solver = Solver::new(&model, config).map_err(|e| HarnessError::Run(e.to_string()))?;
    let rows: Result<Vec<HistogramRow>, HarnessError> = (0..spec.paths)
        .into_par_iter()
        .map(|path| {
            let trace = solver.run(path).map_err(|e| HarnessError::Run(e.to_string()))?;
            let (cost, reached) = match trace.cost_to_target(target) {
                Some(c) => (c, true),
                None => (
                    trace.rows.last().map_or(0.0, |r| r.cost_per_node),
                    trace.reached_target,
                ),
            };
            Ok(HistogramRow {
                path_index: path,
                cost_to_target: cost,
                reached: reached || trace.reached_target,
            })
        })
        .collect();
    // AlwaysOn reference, computed once
    let mut ref_config = solver_config(spec, &model, ActivationSchedule::AlwaysOn);
    ref_config.target_rel_error = Some(target);
    let ref_solver = Solver::new(&model, ref_config).map_err(|e| HarnessError::Run(e.to_string()))?;
    let ref_trace = ref_solver
        .run(0)
        .map_err(|e| HarnessError::Run(e.to_string()))?;
    let reference_cost = if ref_trace.reached_target && ref_trace.rows.is_empty() {
        Some(0.0)
    } else {
        ref_trace.cost_to_target(target)
    };
    Ok(HistogramOutcome {
        rows: rows?,
        reference_cost,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub limiting_rel_error: f64,
    /// Cost at the first iteration within `SATURATION_FACTOR` of the limit.
    pub cost_to_saturation: f64,
}

/// Limiting accuracy and saturation cost across an alpha grid, under the
/// first configured schedule.
pub fn run_alpha_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>, HarnessError> {
    spec.validate()?;
    let alphas = spec
        .alphas
        .clone()
        .ok_or_else(|| HarnessError::Config("alpha_sweep needs alphas".into()))?;
    let mut rows = Vec::with_capacity(alphas.len());
    for alpha in &alphas {
        let model = build_model_with_alpha(spec, alpha)?;
        let schedule = spec.schedules[0].resolve(model.alpha, model.problem.mu)?;
        let run = run_one(spec, &model, schedule, "sweep".into(), 0)?;
        let saturation = SATURATION_FACTOR * run.limiting_error;
        let cost = run
            .trace
            .rows
            .iter()
            .find(|r| r.rel_error <= saturation)
            .map_or(0.0, |r| r.cost_per_node);
        rows.push(SweepRow {
            alpha: model.alpha,
            limiting_rel_error: run.limiting_error,
            cost_to_saturation: cost,
        });
    }
    Ok(rows)
}

fn write_file(path: &Path, content: &str) -> Result<(), HarnessError> {
    fs::write(path, content).map_err(HarnessError::io(path))
}

fn metadata_sidecar(
    spec: &ExperimentSpec,
    model: &PenaltyModel,
    label: &str,
) -> Result<String, HarnessError> {
    let constants = spec_constants(spec, model)?;
    let generated_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let value = serde_json::json!({
        "label": label,
        "spec": spec,
        "graph": {
            "n": model.graph.n(),
            "edges": model.graph.graph.edges.len(),
            "w_min": model.graph.w_min,
            "w_max": model.graph.w_max,
            "retries": model.graph.graph.retries,
        },
        "problem": { "mu": model.problem.mu, "l": model.problem.l },
        "alpha": model.alpha,
        "constants": constants,
        "generated_at": generated_at,
    });
    serde_json::to_string_pretty(&value).map_err(|e| HarnessError::Run(e.to_string()))
}

/// Writes one CSV + metadata sidecar per trace plus a plain-text summary.
///
/// Returns the paths written. Everything except the sidecar's
/// `generated_at` field is byte-deterministic for a fixed spec.
pub fn write_outputs(
    runs: &[LabeledRun],
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(out_dir).map_err(HarnessError::io(out_dir))?;
    let model = build_model(spec)?;
    let hash = spec.config_hash();
    let mut written = Vec::new();
    let mut summary = String::new();
    for run in runs {
        let csv_path = out_dir.join(format!("{hash}_{}.csv", run.label));
        write_file(&csv_path, &run.trace.to_csv())?;
        written.push(csv_path);
        let meta_path = out_dir.join(format!("{hash}_{}.meta.json", run.label));
        write_file(&meta_path, &metadata_sidecar(spec, &model, &run.label)?)?;
        written.push(meta_path);
        summary.push_str(&format!(
            "{}: limiting_error = {}, cost_to_target = {}\n",
            run.label,
            fmt_f64(run.limiting_error),
            run.cost_to_target
                .map_or_else(|| "n/a".to_string(), fmt_f64),
        ));
    }
    summary.push('\n');
    summary.push_str(&spec_constants(spec, &model)?.report());
    let summary_path = out_dir.join(format!("{hash}_summary.txt"));
    write_file(&summary_path, &summary)?;
    written.push(summary_path);
    Ok(written)
}

/// Histogram CSV: `path_index,cost_to_target,reached`.
pub fn write_histogram(
    outcome: &HistogramOutcome,
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(out_dir).map_err(HarnessError::io(out_dir))?;
    let mut csv = String::from("path_index,cost_to_target,reached\n");
    for row in &outcome.rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            row.path_index,
            fmt_f64(row.cost_to_target),
            row.reached
        ));
    }
    if let Some(r) = outcome.reference_cost {
        csv.push_str(&format!("# always_on_reference_cost = {}\n", fmt_f64(r)));
    }
    let path = out_dir.join(format!("{}_histogram.csv", spec.config_hash()));
    write_file(&path, &csv)?;
    Ok(path)
}

/// Sweep CSV: `alpha,limiting_rel_error,cost_to_saturation`.
pub fn write_sweep(
    rows: &[SweepRow],
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(out_dir).map_err(HarnessError::io(out_dir))?;
    let mut csv = String::from("alpha,limiting_rel_error,cost_to_saturation\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(row.alpha),
            fmt_f64(row.limiting_rel_error),
            fmt_f64(row.cost_to_saturation)
        ));
    }
    let path = out_dir.join(format!("{}_sweep.csv", spec.config_hash()));
    write_file(&path, &csv)?;
    Ok(path)
}

/// Ordinary least-squares line fit; returns `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}
