//! Strongly convex quadratic cost families and the penalty reformulation.
//!
//! Each node `i` owns the cost `f_i(x) = 1/2 (x - b_i)^T A_i (x - b_i)`. The
//! consensus problem `min sum f_i(x)` is relaxed to the unconstrained penalty
//! function `Phi(x) = alpha * sum f_i(x_i) + 1/2 x^T (I - Z) x` over the
//! stacked variable, whose minimizer sits within O(alpha) of the true
//! consensus optimum per node.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream_rng, Stream};
use crate::topology::WeightedGraph;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("dimension mismatch: expected stacked vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("problem file: {0}")]
    File(String),
}

/// Per-node quadratic costs `f_i(x) = 1/2 (x - b_i)^T A_i (x - b_i)`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    /// Symmetric positive definite cost Hessians.
    pub a_list: Vec<DMatrix<f64>>,
    /// Cost centers.
    pub b_list: Vec<DVector<f64>>,
    /// Smallest realized Hessian eigenvalue over all nodes.
    pub mu: f64,
    /// Largest realized Hessian spectral norm over all nodes.
    pub l: f64,
    /// Minimizer of `sum_i f_i(x)`.
    pub x_global: DVector<f64>,
}

fn uniform_1_31(rng: &mut impl Rng) -> f64 {
    1.0 + 30.0 * rng.random::<f64>()
}

/// Generates the random quadratic family.
///
/// Centers have i.i.d. uniform [1, 31] entries. Each Hessian is
/// `A_i = Q_i D_i Q_i^T` with uniform [1, 31] diagonal `D_i` and `Q_i` the
/// orthonormal eigenvector matrix of a symmetrized standard Gaussian draw.
pub fn generate_quadratics(n: usize, p: usize, seed: u64) -> QuadraticProblem {
    assert!(n >= 1 && p >= 1);
    let mut rng = stream_rng(seed, Stream::Problem);
    let mut a_list = Vec::with_capacity(n);
    let mut b_list = Vec::with_capacity(n);
    let mut mu = f64::INFINITY;
    let mut l = f64::NEG_INFINITY;
    for _ in 0..n {
        let b = DVector::from_fn(p, |_, _| uniform_1_31(&mut rng));
        let gauss: DMatrix<f64> =
            DMatrix::from_fn(p, p, |_, _| StandardNormal.sample(&mut rng));
        let sym = 0.5 * (&gauss + gauss.transpose());
        let q = sym.symmetric_eigen().eigenvectors;
        let d = DVector::from_fn(p, |_, _| uniform_1_31(&mut rng));
        mu = mu.min(d.min());
        l = l.max(d.max());
        let a = &q * DMatrix::from_diagonal(&d) * q.transpose();
        let a = 0.5 * (&a + a.transpose());
        a_list.push(a);
        b_list.push(b);
    }
    let x_global = solve_global(&a_list, &b_list);
    QuadraticProblem {
        n,
        p,
        seed,
        a_list,
        b_list,
        mu,
        l,
        x_global,
    }
}

fn solve_global(a_list: &[DMatrix<f64>], b_list: &[DVector<f64>]) -> DVector<f64> {
    let p = b_list[0].len();
    let mut sum_a = DMatrix::zeros(p, p);
    let mut sum_ab = DVector::zeros(p);
    for (a, b) in a_list.iter().zip(b_list) {
        sum_a += a;
        sum_ab += a * b;
    }
    sum_a
        .cholesky()
        .expect("sum of SPD matrices is SPD")
        .solve(&sum_ab)
}

impl QuadraticProblem {
    /// Value, gradient and Hessian of `f_i` at `x`.
    pub fn local_cost(&self, i: usize, x: &DVector<f64>) -> (f64, DVector<f64>, &DMatrix<f64>) {
        let diff = x - &self.b_list[i];
        let grad = &self.a_list[i] * &diff;
        let value = 0.5 * diff.dot(&grad);
        (value, grad, &self.a_list[i])
    }

    /// Gradient of `f_i` at `x`.
    pub fn local_gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.a_list[i] * (x - &self.b_list[i])
    }

    /// `(sum A_i)^{-1} sum A_i b_i`, the minimizer of the aggregate cost.
    pub fn global_minimizer(&self) -> DVector<f64> {
        solve_global(&self.a_list, &self.b_list)
    }

    /// Residual scale used by the minimizer invariants:
    /// `1e-10 * n * L * max_i ||b_i||`.
    pub fn residual_scale(&self) -> f64 {
        let max_b = self
            .b_list
            .iter()
            .map(|b| b.norm())
            .fold(0.0, f64::max);
        1e-10 * self.n as f64 * self.l * max_b
    }
}

/// Flat serialization of a problem instance (matrices row-major).
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    n: usize,
    p: usize,
    seed: u64,
    a_list: Vec<Vec<f64>>,
    b_list: Vec<Vec<f64>>,
    mu: f64,
    l: f64,
}

impl QuadraticProblem {
    pub fn to_json(&self) -> String {
        let file = ProblemFile {
            n: self.n,
            p: self.p,
            seed: self.seed,
            a_list: self
                .a_list
                .iter()
                .map(|a| a.transpose().as_slice().to_vec())
                .collect(),
            b_list: self.b_list.iter().map(|b| b.as_slice().to_vec()).collect(),
            mu: self.mu,
            l: self.l,
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, ObjectiveError> {
        let file: ProblemFile =
            serde_json::from_str(text).map_err(|e| ObjectiveError::File(e.to_string()))?;
        if file.a_list.len() != file.n || file.b_list.len() != file.n {
            return Err(ObjectiveError::File("node count mismatch".into()));
        }
        let a_list: Vec<DMatrix<f64>> = file
            .a_list
            .iter()
            .map(|rows| DMatrix::from_row_slice(file.p, file.p, rows))
            .collect();
        let b_list: Vec<DVector<f64>> = file
            .b_list
            .iter()
            .map(|b| DVector::from_column_slice(b))
            .collect();
        let x_global = solve_global(&a_list, &b_list);
        Ok(QuadraticProblem {
            n: file.n,
            p: file.p,
            seed: file.seed,
            a_list,
            b_list,
            mu: file.mu,
            l: file.l,
            x_global,
        })
    }
}

/// The penalty function bound to a problem, a weight matrix and `alpha`.
#[derive(Debug, Clone)]
pub struct PenaltyModel {
    pub problem: QuadraticProblem,
    pub graph: WeightedGraph,
    pub alpha: f64,
    /// Minimizer of the penalty function (stacked np-vector).
    pub x_penalty: DVector<f64>,
    /// Strong convexity modulus `alpha * mu`.
    pub mu_phi: f64,
    /// Gradient Lipschitz constant `alpha * L + 2 (1 - w_min)`.
    pub l_phi: f64,
}

impl PenaltyModel {
    pub fn new(problem: QuadraticProblem, graph: WeightedGraph, alpha: f64) -> Self {
        assert!(alpha > 0.0, "alpha must be positive");
        assert_eq!(problem.n, graph.n(), "problem and graph node counts differ");
        let x_penalty = penalty_minimizer(&problem, &graph, alpha);
        let mu_phi = alpha * problem.mu;
        let l_phi = alpha * problem.l + 2.0 * (1.0 - graph.w_min);
        PenaltyModel {
            problem,
            graph,
            alpha,
            x_penalty,
            mu_phi,
            l_phi,
        }
    }

    pub fn n(&self) -> usize {
        self.problem.n
    }

    pub fn p(&self) -> usize {
        self.problem.p
    }

    pub fn dim(&self) -> usize {
        self.problem.n * self.problem.p
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), ObjectiveError> {
        if x.len() != self.dim() {
            return Err(ObjectiveError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `Phi(x)` via the edge-sum form of the quadratic coupling.
    pub fn penalty_value(&self, x: &DVector<f64>) -> Result<f64, ObjectiveError> {
        self.check_dim(x)?;
        let p = self.p();
        let mut cost = 0.0;
        for i in 0..self.n() {
            let xi = x.rows(i * p, p).into_owned();
            let (v, _, _) = self.problem.local_cost(i, &xi);
            cost += v;
        }
        let mut coupling = 0.0;
        for &(i, j) in &self.graph.graph.edges {
            let diff = x.rows(i * p, p) - x.rows(j * p, p);
            coupling += self.graph.w[(i, j)] * diff.norm_squared();
        }
        Ok(self.alpha * cost + 0.5 * coupling)
    }

    /// Blockwise gradient: `alpha grad f_i(x_i) + sum_j w_ij (x_i - x_j)`.
    pub fn penalty_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, ObjectiveError> {
        self.check_dim(x)?;
        let p = self.p();
        let mut grad = DVector::zeros(self.dim());
        for i in 0..self.n() {
            let xi = x.rows(i * p, p).into_owned();
            let mut gi = self.alpha * self.problem.local_gradient(i, &xi);
            for &j in self.graph.neighbors(i) {
                let diff = &xi - x.rows(j * p, p);
                gi += self.graph.w[(i, j)] * diff;
            }
            grad.rows_mut(i * p, p).copy_from(&gi);
        }
        Ok(grad)
    }

    /// Stacked gradient of `F(x) = sum f_i(x_i)`.
    pub fn aggregate_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.p();
        let mut grad = DVector::zeros(self.dim());
        for i in 0..self.n() {
            let xi = x.rows(i * p, p).into_owned();
            grad.rows_mut(i * p, p)
                .copy_from(&self.problem.local_gradient(i, &xi));
        }
        grad
    }

    /// `Phi(x) - Phi(x_penalty)`, the penalty optimality gap.
    pub fn penalty_gap(&self, x: &DVector<f64>) -> Result<f64, ObjectiveError> {
        Ok(self.penalty_value(x)? - self.penalty_value(&self.x_penalty)?)
    }
}

/// Solves the np x np SPD system
/// `(alpha blockdiag(A_i) + (I - Z)) x = alpha blockdiag(A_i) b` directly.
pub fn penalty_minimizer(
    problem: &QuadraticProblem,
    graph: &WeightedGraph,
    alpha: f64,
) -> DVector<f64> {
    let (n, p) = (problem.n, problem.p);
    let dim = n * p;
    let mut system = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for i in 0..n {
        let block = alpha * &problem.a_list[i];
        system
            .view_mut((i * p, i * p), (p, p))
            .copy_from(&block);
        rhs.rows_mut(i * p, p)
            .copy_from(&(&block * &problem.b_list[i]));
    }
    // I - Z = (I_n - W) kron I_p
    for i in 0..n {
        for k in 0..p {
            system[(i * p + k, i * p + k)] += 1.0 - graph.w[(i, i)];
        }
        for &j in graph.neighbors(i) {
            for k in 0..p {
                system[(i * p + k, j * p + k)] -= graph.w[(i, j)];
            }
        }
    }
    system
        .cholesky()
        .expect("penalty system is SPD for alpha > 0")
        .solve(&rhs)
}
