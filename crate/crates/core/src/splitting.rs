//! Hessian splitting, randomized effective weights, and theoretical constants.
//!
//! The penalty Hessian decomposes as `A(x) - G`, with `A(x)` block diagonal
//! and `G` carrying the off-diagonal coupling plus a theta-weighted diagonal
//! correction. Under idling, the realized weight matrix `W^k` zeroes the
//! coupling of inactive pairs while the diagonal absorbs the freed row mass.
//! Every block of `G` (and `G^k`) is a scalar multiple of the p x p identity,
//! so the blocked operators are represented by their scalar n x n matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::PenaltyModel;
use crate::topology::WeightedGraph;

#[derive(Debug, Error)]
pub enum SplittingError {
    #[error("invalid constants input: {0}")]
    InvalidInput(String),
    #[error("nu(eps) = {nu} >= 1; the limiting-error bound requires nu(eps) < 1")]
    NuOutOfRange { nu: f64 },
}

/// Diagonal blocks `A_i = alpha * hess f_i(x_i) + (1 + theta)(1 - w_ii) I`.
///
/// Under idling the diagonal uses the deterministic `w_ii`, not the realized
/// `w_ii^k`.
pub fn assemble_a(model: &PenaltyModel, x: &DVector<f64>, theta: f64) -> Vec<DMatrix<f64>> {
    assert!(theta >= 0.0);
    let p = model.p();
    let _ = x; // quadratic costs: the Hessian does not depend on x
    (0..model.n())
        .map(|i| {
            let shift = (1.0 + theta) * (1.0 - model.graph.w[(i, i)]);
            model.alpha * &model.problem.a_list[i] + shift * DMatrix::identity(p, p)
        })
        .collect()
}

/// Scalar n x n representation of `G = Z_u + theta (I - Z_d)`:
/// off-diagonal `w_ij` on edges, diagonal `theta (1 - w_ii)`.
pub fn assemble_g(graph: &WeightedGraph, theta: f64) -> DMatrix<f64> {
    assert!(theta >= 0.0);
    let n = graph.n();
    let mut g = DMatrix::zeros(n, n);
    for &(i, j) in &graph.graph.edges {
        g[(i, j)] = graph.w[(i, j)];
        g[(j, i)] = graph.w[(j, i)];
    }
    for i in 0..n {
        g[(i, i)] = theta * (1.0 - graph.w[(i, i)]);
    }
    g
}

/// Spectral norm of a symmetric scalar-block operator via its n x n matrix.
pub fn scalar_spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

/// Realized weights for one activation draw.
#[derive(Debug, Clone)]
pub struct EffectiveWeights {
    pub xi: Vec<bool>,
    /// `w_ij^k = w_ij xi_i xi_j` off the diagonal, diagonal restores row sums.
    pub w_k: DMatrix<f64>,
}

/// Builds `W^k` from the activation bits.
///
/// The diagonal is accumulated in ascending neighbor order so that an
/// all-active draw reproduces `W` bit-for-bit.
pub fn effective_weights(graph: &WeightedGraph, xi: &[bool]) -> EffectiveWeights {
    let n = graph.n();
    assert_eq!(xi.len(), n);
    let mut w_k = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for &j in graph.neighbors(i) {
            let v = if xi[i] && xi[j] { graph.w[(i, j)] } else { 0.0 };
            w_k[(i, j)] = v;
            off += v;
        }
        w_k[(i, i)] = 1.0 - off;
    }
    EffectiveWeights {
        xi: xi.to_vec(),
        w_k,
    }
}

impl EffectiveWeights {
    /// Scalar n x n representation of `G^k = Z_u^k + theta (I - Z_d^k)`.
    pub fn g_k(&self, theta: f64) -> DMatrix<f64> {
        let n = self.w_k.nrows();
        let mut g = self.w_k.clone();
        for i in 0..n {
            g[(i, i)] = theta * (1.0 - self.w_k[(i, i)]);
        }
        g
    }
}

/// Constants and safeguards from the convergence analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryConstants {
    // inputs, recorded for downstream use
    pub alpha: f64,
    pub mu: f64,
    pub l: f64,
    pub theta: f64,
    pub rho: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub eps: f64,
    // derived bounds
    pub c_a: f64,
    pub c_g: f64,
    pub c_h: f64,
    pub c_r: f64,
    pub beta: f64,
    pub l_phi: f64,
    pub mu_phi: f64,
    pub delta: f64,
    pub q: f64,
    pub rho_bar: f64,
    pub eps_bar: f64,
    pub nu_eps: f64,
    /// True when the requested step size exceeds `eps_bar`. The run is still
    /// allowed (the experiments use full step size), but the descent theory
    /// no longer applies.
    pub eps_exceeds_bar: bool,
}

/// Evaluates the bound constants for the given parameter set.
///
/// `delta_fraction` places `delta` inside its admissible interval
/// `(0, 1/(alpha L + (1+theta)(1-w_min)))`; `q_fraction` places `q` inside
/// `(0, delta)`.
#[allow(clippy::too_many_arguments)]
pub fn compute_constants(
    alpha: f64,
    mu: f64,
    l: f64,
    theta: f64,
    rho: f64,
    w_min: f64,
    w_max: f64,
    eps: f64,
    delta_fraction: f64,
    q_fraction: f64,
) -> Result<TheoryConstants, SplittingError> {
    if !(mu > 0.0 && l >= mu) {
        return Err(SplittingError::InvalidInput(format!(
            "need 0 < mu <= L, got mu={mu}, L={l}"
        )));
    }
    if !(alpha > 0.0 && rho >= 0.0 && theta >= 0.0 && eps > 0.0) {
        return Err(SplittingError::InvalidInput(
            "need alpha > 0, rho >= 0, theta >= 0, eps > 0".into(),
        ));
    }
    if !(w_min > 0.0 && w_min <= w_max && w_max < 1.0) {
        return Err(SplittingError::InvalidInput(format!(
            "need 0 < w_min <= w_max < 1, got w_min={w_min}, w_max={w_max}"
        )));
    }
    if !(delta_fraction > 0.0 && delta_fraction < 1.0 && q_fraction > 0.0 && q_fraction < 1.0) {
        return Err(SplittingError::InvalidInput(
            "delta_fraction and q_fraction must be in (0,1)".into(),
        ));
    }
    let lower = alpha * mu + (1.0 + theta) * (1.0 - w_max);
    let upper = alpha * l + (1.0 + theta) * (1.0 - w_min);
    let c_a = 1.0 / lower;
    let c_g = (1.0 + theta) * (1.0 - w_min);
    let c_h = 1.0 + rho * c_g;
    let c_r = c_h * c_a;
    let beta = (1.0 + rho * c_g) / lower;
    let l_phi = alpha * l + 2.0 * (1.0 - w_min);
    let mu_phi = alpha * mu;
    let delta = delta_fraction / upper;
    let q = q_fraction * delta;
    let rho_bar = (lower / ((1.0 - w_min) * (1.0 + theta))) * (1.0 / upper - delta);
    let eps_bar = (delta - q) / (2.0 * l_phi * (beta * beta + q * q));
    let nu_eps = nu_of_eps(eps, mu_phi, l_phi, beta, delta, q);
    Ok(TheoryConstants {
        alpha,
        mu,
        l,
        theta,
        rho,
        w_min,
        w_max,
        eps,
        c_a,
        c_g,
        c_h,
        c_r,
        beta,
        l_phi,
        mu_phi,
        delta,
        q,
        rho_bar,
        eps_bar,
        nu_eps,
        eps_exceeds_bar: eps > eps_bar,
    })
}

/// `nu(eps) = 1 + mu_phi (eps^2 L_phi (beta^2 + q^2) - eps (delta - q))`.
pub fn nu_of_eps(eps: f64, mu_phi: f64, l_phi: f64, beta: f64, delta: f64, q: f64) -> f64 {
    1.0 + mu_phi * (eps * eps * l_phi * (beta * beta + q * q) - eps * (delta - q))
}

impl TheoryConstants {
    /// Re-evaluates `nu` at a different step size.
    pub fn nu_at(&self, eps: f64) -> f64 {
        nu_of_eps(eps, self.mu_phi, self.l_phi, self.beta, self.delta, self.q)
    }

    /// `h(eps) = (eps^2 L_phi + eps/q) / (1 - nu(eps))`.
    pub fn h_of_eps(&self, eps: f64) -> Result<f64, SplittingError> {
        let nu = self.nu_at(eps);
        if nu >= 1.0 {
            return Err(SplittingError::NuOutOfRange { nu });
        }
        Ok((eps * eps * self.l_phi + eps / self.q) / (1.0 - nu))
    }

    /// Flat `name = value` report, one entry per line.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let mut kv = |name: &str, value: f64| {
            out.push_str(&format!("{name} = {}\n", crate::fmt_f64(value)));
        };
        kv("alpha", self.alpha);
        kv("mu", self.mu);
        kv("L", self.l);
        kv("theta", self.theta);
        kv("rho", self.rho);
        kv("w_min", self.w_min);
        kv("w_max", self.w_max);
        kv("eps", self.eps);
        kv("C_A", self.c_a);
        kv("C_G", self.c_g);
        kv("C_H", self.c_h);
        kv("C_R", self.c_r);
        kv("beta", self.beta);
        kv("L_phi", self.l_phi);
        kv("mu_phi", self.mu_phi);
        kv("delta", self.delta);
        kv("q", self.q);
        kv("rho_bar", self.rho_bar);
        kv("eps_bar", self.eps_bar);
        kv("nu_eps", self.nu_eps);
        out.push_str(&format!("eps_exceeds_bar = {}\n", self.eps_exceeds_bar));
        out
    }
}

/// Limiting-error diagnostic `E = (1 - p_min) h(eps) l(rho)` for persisting
/// idling, with the gradient/iterate magnitude bounds `c_f`, `c_x` supplied
/// or estimated from a completed run. Diagnostic, not a certified bound.
pub fn limiting_error_bound(
    constants: &TheoryConstants,
    p_min: f64,
    c_f: f64,
    c_x: f64,
) -> Result<f64, SplittingError> {
    if !(p_min > 0.0 && p_min <= 1.0) {
        return Err(SplittingError::InvalidInput(format!(
            "p_min must be in (0,1], got {p_min}"
        )));
    }
    if !(c_f > 0.0 && c_x > 0.0) {
        return Err(SplittingError::InvalidInput(
            "C_F and C_x must be positive".into(),
        ));
    }
    let h = constants.h_of_eps(constants.eps)?;
    let ca2 = constants.c_a * constants.c_a;
    let alpha2 = constants.alpha * constants.alpha;
    let c_g_small = 2.0 * ca2 * (alpha2 * c_f / p_min + 8.0 * c_x);
    let c_g2 = 2.0 * ca2 * (alpha2 * c_f / 2.0 + c_x);
    let one_plus = 1.0 + constants.rho * constants.c_g;
    let l_rho = (4.0 / constants.mu_phi)
        * (one_plus * one_plus * c_g_small + constants.rho * constants.rho * c_g2);
    Ok((1.0 - p_min) * h * l_rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::generate_quadratics;
    use crate::topology::{generate_rgg, metropolis_weights, Graph, DEFAULT_RETRY_CAP};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::Rng;

    fn k2_weighted() -> WeightedGraph {
        let g = Graph {
            n: 2,
            coords: vec![[0.0, 0.0], [1.0, 1.0]],
            edges: vec![(0, 1)],
            neighbors: vec![vec![1], vec![0]],
            retries: 0,
        };
        metropolis_weights(g).unwrap()
    }

    fn model(n: usize, p: usize, alpha: f64) -> PenaltyModel {
        let g = generate_rgg(n, 0.7, 8, DEFAULT_RETRY_CAP).unwrap();
        let wg = metropolis_weights(g).unwrap();
        PenaltyModel::new(generate_quadratics(n, p, 19), wg, alpha)
    }

    /// Dense np x np Hessian of Phi: alpha blockdiag(A_i) + (I - Z).
    fn dense_hessian(m: &PenaltyModel) -> DMatrix<f64> {
        let (n, p) = (m.n(), m.p());
        let mut h = DMatrix::zeros(n * p, n * p);
        for i in 0..n {
            let block = m.alpha * &m.problem.a_list[i];
            h.view_mut((i * p, i * p), (p, p)).copy_from(&block);
            for k in 0..p {
                h[(i * p + k, i * p + k)] += 1.0 - m.graph.w[(i, i)];
            }
            for &j in m.graph.neighbors(i) {
                for k in 0..p {
                    h[(i * p + k, j * p + k)] -= m.graph.w[(i, j)];
                }
            }
        }
        h
    }

    #[test]
    fn k2_block_hand_value() {
        // theta=0, w_ii=3/4, alpha=0.01, unit cost Hessians -> A_i = 0.26 I
        let wg = k2_weighted();
        let mut prob = generate_quadratics(2, 3, 1);
        for a in prob.a_list.iter_mut() {
            *a = DMatrix::identity(3, 3);
        }
        let m = PenaltyModel::new(prob, wg, 0.01);
        let x = DVector::zeros(m.dim());
        let blocks = assemble_a(&m, &x, 0.0);
        for b in &blocks {
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if i == j { 0.26 } else { 0.0 };
                    assert_abs_diff_eq!(b[(i, j)], expected, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn block_eigenvalue_bounds() {
        let m = model(10, 4, 0.05);
        let theta = 0.3;
        let x = DVector::zeros(m.dim());
        let lower = m.alpha * m.problem.mu + (1.0 + theta) * (1.0 - m.graph.w_max);
        let upper = m.alpha * m.problem.l + (1.0 + theta) * (1.0 - m.graph.w_min);
        for b in assemble_a(&m, &x, theta) {
            for ev in b.symmetric_eigen().eigenvalues.iter() {
                assert!(*ev >= lower - 1e-10 && *ev <= upper + 1e-10);
            }
        }
    }

    #[test]
    fn g_zero_theta_has_zero_diagonal() {
        let m = model(8, 3, 0.1);
        let g = assemble_g(&m.graph, 0.0);
        for i in 0..8 {
            assert_eq!(g[(i, i)], 0.0);
        }
    }

    #[test]
    fn splitting_reconstructs_hessian() {
        let m = model(7, 3, 0.08);
        let theta = 0.2;
        let x = DVector::zeros(m.dim());
        let a_blocks = assemble_a(&m, &x, theta);
        let g = assemble_g(&m.graph, theta);
        let (n, p) = (m.n(), m.p());
        let mut assembled = DMatrix::zeros(n * p, n * p);
        for i in 0..n {
            assembled
                .view_mut((i * p, i * p), (p, p))
                .copy_from(&a_blocks[i]);
            for j in 0..n {
                for k in 0..p {
                    assembled[(i * p + k, j * p + k)] -= g[(i, j)];
                }
            }
        }
        let direct = dense_hessian(&m);
        assert!((assembled - direct).abs().max() < 1e-12);
    }

    #[test]
    fn k2_g_norm() {
        let wg = k2_weighted();
        let g = assemble_g(&wg, 0.0);
        let norm = scalar_spectral_norm(&g);
        assert_abs_diff_eq!(norm, 0.25, epsilon = 1e-12);
        let c_g = (1.0 + 0.0) * (1.0 - wg.w_min);
        assert!(norm <= c_g + 1e-12);
    }

    #[test]
    fn effective_weights_all_on_is_w() {
        let m = model(9, 2, 0.1);
        let ew = effective_weights(&m.graph, &vec![true; 9]);
        assert_eq!(ew.w_k.as_slice(), m.graph.w.as_slice());
    }

    #[test]
    fn effective_weights_all_off_is_identity() {
        let m = model(9, 2, 0.1);
        let ew = effective_weights(&m.graph, &vec![false; 9]);
        assert_eq!(ew.w_k, DMatrix::identity(9, 9));
    }

    #[test]
    fn effective_weights_invariants() {
        let m = model(12, 2, 0.1);
        let mut rng = crate::rng::stream_rng(3, crate::rng::Stream::Activation(0));
        for _ in 0..50 {
            let xi: Vec<bool> = (0..12).map(|_| rng.random::<f64>() < 0.5).collect();
            let ew = effective_weights(&m.graph, &xi);
            for i in 0..12 {
                let row: f64 = (0..12).map(|j| ew.w_k[(i, j)]).sum();
                assert_abs_diff_eq!(row, 1.0, epsilon = 1e-12);
                assert!(ew.w_k[(i, i)] >= m.graph.w[(i, i)] - 1e-15);
                if !xi[i] {
                    assert_eq!(ew.w_k[(i, i)], 1.0);
                    for j in 0..12 {
                        if j != i {
                            assert_eq!(ew.w_k[(i, j)], 0.0);
                        }
                    }
                }
                for j in 0..12 {
                    assert_eq!(ew.w_k[(i, j)], ew.w_k[(j, i)]);
                }
            }
            // ||G^k|| <= (1+theta)(1-w_min) for any theta
            for theta in [0.0, 0.5] {
                let norm = scalar_spectral_norm(&ew.g_k(theta));
                assert!(norm <= (1.0 + theta) * (1.0 - m.graph.w_min) + 1e-12);
            }
        }
    }

    #[test]
    fn effective_weight_mean_matches_p_squared() {
        let m = model(10, 2, 0.1);
        let p_act = 0.6;
        let (i, j) = m.graph.graph.edges[0];
        let w_ij = m.graph.w[(i, j)];
        let mut rng = crate::rng::stream_rng(5, crate::rng::Stream::Activation(1));
        let trials = 100_000usize;
        let mut sum = 0.0;
        for _ in 0..trials {
            let xi: Vec<bool> = (0..10).map(|_| rng.random::<f64>() < p_act).collect();
            if xi[i] && xi[j] {
                sum += w_ij;
            }
        }
        let mean = sum / trials as f64;
        let expected = p_act * p_act * w_ij;
        // Bernoulli(p^2) scaled by w_ij: sd = w_ij sqrt(p^2 (1-p^2) / trials)
        let se = w_ij * (p_act * p_act * (1.0 - p_act * p_act) / trials as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean}, expected {expected}, se {se}"
        );
    }

    #[test]
    fn constants_hand_derived_example() {
        let c = compute_constants(0.01, 1.0, 2.0, 0.0, 0.0, 0.5, 0.9, 1.0, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(c.c_a, 1.0 / 0.11, epsilon = 1e-9);
        assert_abs_diff_eq!(c.c_g, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.beta, 1.0 / 0.11, epsilon = 1e-9);
        assert_abs_diff_eq!(c.l_phi, 1.02, epsilon = 1e-12);
        assert_abs_diff_eq!(c.mu_phi, 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(c.delta, 0.5 / 0.52, epsilon = 1e-9);
        let expected_rho_bar = (0.11 / 0.5) * (1.0 / 0.52 - 0.5 / 0.52);
        assert_abs_diff_eq!(c.rho_bar, expected_rho_bar, epsilon = 1e-9);
        // q and admissibility interior checks
        assert!(c.q > 0.0 && c.q < c.delta);
        assert!(c.delta < c.beta);
        assert!(c.delta < 1.0 / (0.01 * 2.0 + 0.5));
    }

    #[test]
    fn rho_zero_beta_equals_c_a() {
        let c = compute_constants(0.02, 1.5, 3.0, 0.1, 0.0, 0.55, 0.8, 0.5, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(c.beta, c.c_a, epsilon = 1e-14);
    }

    #[test]
    fn nu_is_in_unit_interval_up_to_eps_bar() {
        let c = compute_constants(0.01, 1.0, 2.0, 0.0, 1.0, 0.5, 0.9, 1.0, 0.5, 0.5).unwrap();
        for step in 1..=20 {
            let eps = c.eps_bar * step as f64 / 20.0;
            let nu = c.nu_at(eps);
            assert!(nu > 0.0 && nu < 1.0, "nu({eps}) = {nu}");
        }
    }

    #[test]
    fn h_and_nu_monotone_on_grid() {
        // h grows with the step size; the contraction factor nu is a parabola
        // minimized exactly at eps_bar, so on (0, eps_bar] it falls.
        let c = compute_constants(0.01, 1.0, 2.0, 0.0, 1.0, 0.5, 0.9, 1.0, 0.5, 0.5).unwrap();
        let mut prev_h = 0.0;
        let mut prev_nu = f64::INFINITY;
        for step in 1..=50 {
            let eps = c.eps_bar * step as f64 / 50.0;
            let h = c.h_of_eps(eps).unwrap();
            let nu = c.nu_at(eps);
            assert!(h > prev_h, "h not increasing at eps={eps}");
            assert!(nu < prev_nu, "nu not decreasing at eps={eps}");
            prev_h = h;
            prev_nu = nu;
        }
    }

    #[test]
    fn g_a_inverse_norm_bound() {
        // ||G^k A^{-1}(x)|| <= (1+theta)(1-w_min) / (alpha mu + (1+theta)(1-w_min))
        let m = model(8, 3, 0.05);
        let theta = 0.2;
        let x = DVector::zeros(m.dim());
        let a_blocks = assemble_a(&m, &x, theta);
        let (n, p) = (m.n(), m.p());
        let mut a_inv = DMatrix::zeros(n * p, n * p);
        for (i, b) in a_blocks.iter().enumerate() {
            let inv = b.clone().cholesky().unwrap().inverse();
            a_inv.view_mut((i * p, i * p), (p, p)).copy_from(&inv);
        }
        let bound = ((1.0 + theta) * (1.0 - m.graph.w_min))
            / (m.alpha * m.problem.mu + (1.0 + theta) * (1.0 - m.graph.w_min));
        let mut rng = crate::rng::stream_rng(9, crate::rng::Stream::Activation(2));
        for _ in 0..10 {
            let xi: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.5).collect();
            let ew = effective_weights(&m.graph, &xi);
            let gk = ew.g_k(theta);
            let mut gk_big = DMatrix::zeros(n * p, n * p);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..p {
                        gk_big[(i * p + k, j * p + k)] = gk[(i, j)];
                    }
                }
            }
            let product = &gk_big * &a_inv;
            let norm = product.singular_values().max();
            assert!(norm <= bound + 1e-10, "norm {norm} > bound {bound}");
        }
    }

    #[test]
    fn limiting_error_vanishes_without_idling() {
        let c = compute_constants(0.01, 1.0, 2.0, 0.0, 1.0, 0.5, 0.9, 1e-3, 0.5, 0.5).unwrap();
        let e = limiting_error_bound(&c, 1.0, 10.0, 100.0).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn limiting_error_positive_at_rho_zero() {
        let c = compute_constants(0.01, 1.0, 2.0, 0.0, 0.0, 0.5, 0.9, 1e-3, 0.5, 0.5).unwrap();
        let e = limiting_error_bound(&c, 0.5, 10.0, 100.0).unwrap();
        assert!(e > 0.0);
    }

    #[test]
    fn limiting_error_decreases_in_p_min() {
        let c = compute_constants(0.01, 1.0, 2.0, 0.0, 1.0, 0.5, 0.9, 1e-3, 0.5, 0.5).unwrap();
        let values: Vec<f64> = [0.5, 0.7, 0.9]
            .iter()
            .map(|&p| limiting_error_bound(&c, p, 10.0, 100.0).unwrap())
            .collect();
        assert!(values[0] > values[1] && values[1] > values[2]);
    }

    #[test]
    fn limiting_error_rejects_nu_at_least_one() {
        // full step size makes nu >= 1 for these constants
        let c = compute_constants(0.01, 1.0, 2.0, 0.0, 1.0, 0.5, 0.9, 1.0, 0.5, 0.5).unwrap();
        assert!(c.eps_exceeds_bar);
        assert!(matches!(
            limiting_error_bound(&c, 0.5, 10.0, 100.0),
            Err(SplittingError::NuOutOfRange { .. })
        ));
    }

    #[test]
    fn report_contains_all_names() {
        let c = compute_constants(0.01, 1.0, 2.0, 0.0, 1.0, 0.5, 0.9, 1.0, 0.5, 0.5).unwrap();
        let report = c.report();
        for name in ["C_A", "C_G", "beta", "rho_bar", "eps_bar", "nu_eps"] {
            assert!(report.contains(name), "missing {name}");
        }
    }
}
