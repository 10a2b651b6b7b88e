//! Standard and idling DQN iterations as deterministic state machines.
//!
//! Both variants run two strictly ordered phases per iteration: every node's
//! preliminary direction `d_i` is final before any combined direction `s_i`
//! reads it. Neighbor sums run in ascending index order, which makes runs
//! bit-reproducible and makes the idling step with an all-on schedule
//! bit-identical to the standard step.

use nalgebra::{Cholesky, DVector, Dyn};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt_f64;
use crate::objective::PenaltyModel;
use crate::rng::{stream_rng, Stream};
use crate::schedule::{sample_activations, ActivationSchedule};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("relative error undefined: the aggregate minimizer is zero")]
    ZeroGlobalMinimizer,
}

/// Choice of the diagonal correction matrices `Lambda_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPolicy {
    /// `Lambda_i = 0`: one communication round per iteration.
    Zero,
    /// `Lambda_i = -rho I`.
    MinusRhoI,
    /// `Lambda_i = -I`; requires `rho >= 1` for the safeguard.
    MinusI,
}

impl LambdaPolicy {
    /// The scalar lambda with `Lambda_i = lambda * I`.
    pub fn scalar(self, rho: f64) -> f64 {
        match self {
            LambdaPolicy::Zero => 0.0,
            LambdaPolicy::MinusRhoI => -rho,
            LambdaPolicy::MinusI => -1.0,
        }
    }

    /// Communication rounds per activation (metadata only).
    pub fn comm_rounds(self) -> u32 {
        match self {
            LambdaPolicy::Zero => 1,
            _ => 2,
        }
    }
}

/// Which iteration the runner executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Standard DQN; ignores the activation stream entirely.
    Standard,
    /// DQN with idling; an always-on schedule reproduces the standard run.
    Idling,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub eps: f64,
    pub rho: f64,
    pub theta: f64,
    pub lambda_policy: LambdaPolicy,
    pub schedule: ActivationSchedule,
    pub variant: Variant,
    pub max_iters: u64,
    pub target_rel_error: Option<f64>,
    pub seed: u64,
    pub diagnostics_enabled: bool,
    /// Initial stacked iterate; `None` means the zero vector.
    pub x0: Option<Vec<f64>>,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.alpha > 0.0) {
            return Err(SolverError::InvalidConfig("alpha must be > 0".into()));
        }
        if !(self.eps > 0.0) {
            return Err(SolverError::InvalidConfig("eps must be > 0".into()));
        }
        if !(self.rho >= 0.0) {
            return Err(SolverError::InvalidConfig("rho must be >= 0".into()));
        }
        if !(self.theta >= 0.0) {
            return Err(SolverError::InvalidConfig("theta must be >= 0".into()));
        }
        if self.lambda_policy == LambdaPolicy::MinusI && self.rho < 1.0 {
            return Err(SolverError::InvalidConfig(
                "lambda policy minus_i needs rho >= 1 to satisfy ||Lambda_i|| <= rho".into(),
            ));
        }
        self.schedule
            .validate()
            .map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

/// Mutable per-run state.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub k: u64,
    pub x: DVector<f64>,
    pub rng: ChaCha8Rng,
    pub cumulative_activations: u64,
    pub per_node_activations: Vec<u64>,
}

/// One recorded iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: u64,
    pub p_k: f64,
    pub active: usize,
    pub cost_per_node: f64,
    pub rel_error: f64,
    pub phi_gap: f64,
    pub inexactness: Option<f64>,
}

/// Complete per-run record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    /// Communication rounds per activation implied by the lambda policy.
    pub comm_rounds_per_activation: u32,
    /// Max of ||x^k||^2 over the run (iterate magnitude bound estimate).
    pub max_x_sq: f64,
    /// Max of ||grad F(x^k)||^2 over the run; tracked under diagnostics.
    pub max_grad_f_sq: Option<f64>,
    pub reached_target: bool,
}

impl RunTrace {
    /// Mean relative error over the last `frac` share of iterations.
    pub fn limiting_error(&self, frac: f64) -> f64 {
        let len = self.rows.len();
        let tail = ((len as f64 * frac).ceil() as usize).clamp(1, len);
        let slice = &self.rows[len - tail..];
        slice.iter().map(|r| r.rel_error).sum::<f64>() / tail as f64
    }

    /// Per-node activation cost at the first iteration whose relative error
    /// is at or below `target`.
    pub fn cost_to_target(&self, target: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.rel_error <= target)
            .map(|r| r.cost_per_node)
    }

    /// CSV serialization with 17-significant-digit floats.
    pub fn to_csv(&self) -> String {
        let with_inexact = self.rows.iter().any(|r| r.inexactness.is_some());
        let mut out = String::from("iter,p_k,active,cost_per_node,rel_error,phi_gap");
        if with_inexact {
            out.push_str(",inexactness");
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                r.k,
                fmt_f64(r.p_k),
                r.active,
                fmt_f64(r.cost_per_node),
                fmt_f64(r.rel_error),
                fmt_f64(r.phi_gap),
            ));
            if with_inexact {
                out.push(',');
                if let Some(v) = r.inexactness {
                    out.push_str(&fmt_f64(v));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// The paper's accuracy metric: `(1/n) sum_i ||x_i - x_global|| / ||x_global||`.
pub fn relative_error(x: &DVector<f64>, x_global: &DVector<f64>) -> Result<f64, SolverError> {
    let p = x_global.len();
    let norm = x_global.norm();
    if norm == 0.0 {
        return Err(SolverError::ZeroGlobalMinimizer);
    }
    let n = x.len() / p;
    let sum: f64 = (0..n)
        .map(|i| (x.rows(i * p, p) - x_global).norm())
        .sum();
    Ok(sum / (n as f64 * norm))
}

/// Iteration engine bound to one model and config. The per-node blocks of
/// `A(x)` are constant for quadratic costs and factorized once.
pub struct Solver<'a> {
    pub model: &'a PenaltyModel,
    pub config: SolverConfig,
    a_factors: Vec<Cholesky<f64, Dyn>>,
    lambda: f64,
}

impl<'a> Solver<'a> {
    pub fn new(model: &'a PenaltyModel, config: SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        if (config.alpha - model.alpha).abs() > 0.0 {
            return Err(SolverError::InvalidConfig(format!(
                "config alpha {} does not match model alpha {}",
                config.alpha, model.alpha
            )));
        }
        let x = DVector::zeros(model.dim());
        let a_factors = crate::splitting::assemble_a(model, &x, config.theta)
            .into_iter()
            .map(|b| b.cholesky().expect("A blocks are SPD"))
            .collect();
        let lambda = config.lambda_policy.scalar(config.rho);
        Ok(Solver {
            model,
            config,
            a_factors,
            lambda,
        })
    }

    /// Fresh state for sample path `path`.
    pub fn initial_state(&self, path: u64) -> SolverState {
        let n = self.model.n();
        let x = match &self.config.x0 {
            Some(v) => {
                assert_eq!(v.len(), self.model.dim(), "x0 has wrong length");
                DVector::from_column_slice(v)
            }
            None => DVector::zeros(self.model.dim()),
        };
        SolverState {
            k: 0,
            x,
            rng: stream_rng(self.config.seed, Stream::Activation(path)),
            cumulative_activations: 0,
            per_node_activations: vec![0; n],
        }
    }

    /// One standard DQN iteration: every node is active.
    pub fn dqn_step(&self, state: &mut SolverState) {
        let (n, p) = (self.model.n(), self.model.p());
        let w = &self.model.graph.w;
        let alpha = self.config.alpha;
        // phase 1: all d_i
        let mut d = Vec::with_capacity(n);
        for i in 0..n {
            let xi = state.x.rows(i * p, p).into_owned();
            let mut acc = alpha * self.model.problem.local_gradient(i, &xi);
            for &j in self.model.graph.neighbors(i) {
                acc += w[(i, j)] * (&xi - state.x.rows(j * p, p));
            }
            d.push(self.a_factors[i].solve(&acc));
        }
        // phase 2: all s_i, then the update
        for i in 0..n {
            let mut s = -&d[i];
            if self.lambda != 0.0 {
                let mut coupling = DVector::zeros(p);
                for &j in self.model.graph.neighbors(i) {
                    coupling += w[(i, j)] * &d[j];
                }
                if self.config.theta > 0.0 {
                    coupling += self.config.theta * (1.0 - w[(i, i)]) * &d[i];
                }
                s += self.lambda * coupling;
            }
            let mut xi = state.x.rows_mut(i * p, p);
            xi += self.config.eps * s;
            state.per_node_activations[i] += 1;
        }
        state.cumulative_activations += n as u64;
        state.k += 1;
    }

    /// One idling iteration: sample activations, update active nodes only.
    ///
    /// Returns the realized activation bits.
    pub fn idling_dqn_step(&self, state: &mut SolverState) -> Vec<bool> {
        let (n, p) = (self.model.n(), self.model.p());
        let w = &self.model.graph.w;
        let alpha = self.config.alpha;
        let p_k = self.config.schedule.probability_at(state.k);
        let xi_bits = sample_activations(p_k, n, &mut state.rng);
        // phase 1: d_i for active nodes; the gradient is scaled by alpha/p_k
        // and only mutually active couplings survive in w_ij^k
        let mut d = vec![DVector::zeros(p); n];
        for i in 0..n {
            if !xi_bits[i] {
                continue;
            }
            let xi = state.x.rows(i * p, p).into_owned();
            let mut acc = (alpha / p_k) * self.model.problem.local_gradient(i, &xi);
            for &j in self.model.graph.neighbors(i) {
                if xi_bits[j] {
                    acc += w[(i, j)] * (&xi - state.x.rows(j * p, p));
                }
            }
            d[i] = self.a_factors[i].solve(&acc);
        }
        // phase 2: s_i for active nodes
        let mut active = 0usize;
        for i in 0..n {
            if !xi_bits[i] {
                continue;
            }
            let mut s = -&d[i];
            if self.lambda != 0.0 {
                let mut coupling = DVector::zeros(p);
                for &j in self.model.graph.neighbors(i) {
                    if xi_bits[j] {
                        coupling += w[(i, j)] * &d[j];
                    }
                }
                if self.config.theta > 0.0 {
                    // w_ii^k accumulated in the same ascending order as w_ii
                    let mut off = 0.0;
                    for &j in self.model.graph.neighbors(i) {
                        off += if xi_bits[j] { w[(i, j)] } else { 0.0 };
                    }
                    let w_ii_k = 1.0 - off;
                    coupling += self.config.theta * (1.0 - w_ii_k) * &d[i];
                }
                s += self.lambda * coupling;
            }
            let mut block = state.x.rows_mut(i * p, p);
            block += self.config.eps * s;
            state.per_node_activations[i] += 1;
            active += 1;
        }
        state.cumulative_activations += active as u64;
        state.k += 1;
        xi_bits
    }

    /// The standard-DQN direction evaluated at `x` (Eq.-18-style reference
    /// used by the inexactness diagnostic).
    pub fn reference_direction(&self, x: &DVector<f64>) -> DVector<f64> {
        let (n, p) = (self.model.n(), self.model.p());
        let w = &self.model.graph.w;
        let alpha = self.config.alpha;
        let mut g = Vec::with_capacity(n);
        for i in 0..n {
            let xi = x.rows(i * p, p).into_owned();
            let mut acc = alpha * self.model.problem.local_gradient(i, &xi);
            for &j in self.model.graph.neighbors(i) {
                acc += w[(i, j)] * (&xi - x.rows(j * p, p));
            }
            g.push(self.a_factors[i].solve(&acc));
        }
        let mut s = DVector::zeros(n * p);
        for i in 0..n {
            let mut si = -&g[i];
            if self.lambda != 0.0 {
                let mut coupling = DVector::zeros(p);
                for &j in self.model.graph.neighbors(i) {
                    coupling += w[(i, j)] * &g[j];
                }
                if self.config.theta > 0.0 {
                    coupling += self.config.theta * (1.0 - w[(i, i)]) * &g[i];
                }
                si += self.lambda * coupling;
            }
            s.rows_mut(i * p, p).copy_from(&si);
        }
        s
    }

    /// The idling direction at `x` for a given activation draw, with zero
    /// blocks for idle nodes. Mirrors `idling_dqn_step` bit-for-bit, so with
    /// all nodes active it reproduces `reference_direction` exactly.
    pub fn realized_direction(&self, x: &DVector<f64>, p_k: f64, bits: &[bool]) -> DVector<f64> {
        let (n, p) = (self.model.n(), self.model.p());
        let w = &self.model.graph.w;
        let alpha = self.config.alpha;
        let mut d = vec![DVector::zeros(p); n];
        for i in 0..n {
            if !bits[i] {
                continue;
            }
            let xi = x.rows(i * p, p).into_owned();
            let mut acc = (alpha / p_k) * self.model.problem.local_gradient(i, &xi);
            for &j in self.model.graph.neighbors(i) {
                if bits[j] {
                    acc += w[(i, j)] * (&xi - x.rows(j * p, p));
                }
            }
            d[i] = self.a_factors[i].solve(&acc);
        }
        let mut s = DVector::zeros(n * p);
        for i in 0..n {
            if !bits[i] {
                continue;
            }
            let mut si = -&d[i];
            if self.lambda != 0.0 {
                let mut coupling = DVector::zeros(p);
                for &j in self.model.graph.neighbors(i) {
                    if bits[j] {
                        coupling += w[(i, j)] * &d[j];
                    }
                }
                if self.config.theta > 0.0 {
                    let mut off = 0.0;
                    for &j in self.model.graph.neighbors(i) {
                        off += if bits[j] { w[(i, j)] } else { 0.0 };
                    }
                    let w_ii_k = 1.0 - off;
                    coupling += self.config.theta * (1.0 - w_ii_k) * &d[i];
                }
                si += self.lambda * coupling;
            }
            s.rows_mut(i * p, p).copy_from(&si);
        }
        s
    }

    /// Runs until `max_iters` or the target relative error, recording one
    /// trace row per iteration.
    pub fn run(&self, path: u64) -> Result<RunTrace, SolverError> {
        let mut state = self.initial_state(path);
        let mut rows = Vec::new();
        let mut max_x_sq = state.x.norm_squared();
        let mut max_grad_f_sq: Option<f64> = if self.config.diagnostics_enabled {
            Some(self.model.aggregate_gradient(&state.x).norm_squared())
        } else {
            None
        };
        let mut reached_target = false;
        // target already satisfied at the initial point: record nothing
        if let Some(target) = self.config.target_rel_error {
            let err0 = relative_error(&state.x, &self.model.problem.x_global)?;
            if err0 <= target {
                return Ok(RunTrace {
                    rows,
                    comm_rounds_per_activation: self.config.lambda_policy.comm_rounds(),
                    max_x_sq,
                    max_grad_f_sq,
                    reached_target: true,
                });
            }
        }
        while state.k < self.config.max_iters {
            let k = state.k;
            let p_k = match self.config.variant {
                Variant::Standard => 1.0,
                Variant::Idling => self.config.schedule.probability_at(k),
            };
            let x_before = if self.config.diagnostics_enabled {
                Some(state.x.clone())
            } else {
                None
            };
            let (active, bits) = match self.config.variant {
                Variant::Standard => {
                    self.dqn_step(&mut state);
                    (self.model.n(), None)
                }
                Variant::Idling => {
                    let bits = self.idling_dqn_step(&mut state);
                    (bits.iter().filter(|&&b| b).count(), Some(bits))
                }
            };
            let rel_error = relative_error(&state.x, &self.model.problem.x_global)?;
            let phi_gap = self
                .model
                .penalty_gap(&state.x)
                .expect("state dimension is fixed");
            let inexactness = x_before.map(|x0| {
                let s_hat = self.reference_direction(&x0);
                match &bits {
                    // the standard step is the reference direction itself
                    None => 0.0,
                    Some(bits) => (self.realized_direction(&x0, p_k, bits) - s_hat).norm(),
                }
            });
            max_x_sq = max_x_sq.max(state.x.norm_squared());
            if let Some(m) = max_grad_f_sq.as_mut() {
                *m = m.max(self.model.aggregate_gradient(&state.x).norm_squared());
            }
            rows.push(TraceRow {
                k,
                p_k,
                active,
                cost_per_node: state.cumulative_activations as f64 / self.model.n() as f64,
                rel_error,
                phi_gap,
                inexactness,
            });
            if let Some(target) = self.config.target_rel_error {
                if rel_error <= target {
                    reached_target = true;
                    break;
                }
            }
        }
        Ok(RunTrace {
            rows,
            comm_rounds_per_activation: self.config.lambda_policy.comm_rounds(),
            max_x_sq,
            max_grad_f_sq,
            reached_target,
        })
    }
}
