//! Mean and mean-square analysis of partial-diffusion RLS under noisy links.
//!
//! For large iteration counts the stacked network error evolves as
//!
//! ```text
//! w~_i = lambda B_i w~_{i-1} - B_i Gamma s_i - v_i
//! ```
//!
//! Here `Gamma = (1 - lambda) diag{R_u,k^-1}`, `s_i` stacks `u_k' v_k(i)` and
//! `v_i` is the aggregate link noise. Taking moments gives the following:
//!
//! * Mean: `E w~_i = lambda Q E w~_{i-1}` with `Q = E[B]`.
//! * Weighted variance: `E|w~_i|^2_sigma = E|w~_{i-1}|^2_{F sigma} +
//!   vec(G)' Phi sigma + vec(R_v)' sigma`, with `Phi = E[B' (x) B']` and
//!   `F = lambda^2 Phi`.
//! * Steady state: the network MSD is `(vec(G)' Phi + vec(R_v)') sigma`,
//!   where `sigma` solves `(I - F) sigma = vec(I_NM) / N`.

pub mod moments;
pub mod oracle;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::CombinationMatrix;
use crate::selection::{transmission_probability, SchemeKind};
use crate::signal::{GroundTruth, LinkNoiseProfile, NodeProfile};

pub use moments::{
    mean_matrix_q, pair_moment, second_moment_phi, selection_second_moment, SecondMoment,
};

/// Residual bound for the steady-state linear solves.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// `Gamma = (1 - lambda) diag{R_u,k^-1}`.
pub fn gamma_matrix(profiles: &[NodeProfile], lambda: f64) -> Result<DMatrix<f64>> {
    block_diagonal(profiles, |p, m| (1.0 - lambda) / p.r_u()[m], lambda)
}

/// `G = Gamma E[s s'] Gamma`, block `k` equal to
/// `(1 - lambda)^2 sigma2_v,k R_u,k^-1`.
pub fn noise_matrix_g(profiles: &[NodeProfile], lambda: f64) -> Result<DMatrix<f64>> {
    block_diagonal(
        profiles,
        |p, m| (1.0 - lambda).powi(2) * p.sigma2_v() / p.r_u()[m],
        lambda,
    )
}

fn block_diagonal(
    profiles: &[NodeProfile],
    entry: impl Fn(&NodeProfile, usize) -> f64,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::config(format!("forgetting factor {lambda} outside (0, 1]")));
    }
    let dim = profiles.first().map(NodeProfile::dim).unwrap_or(0);
    if profiles.iter().any(|p| p.dim() != dim) {
        return Err(Error::config("node profiles have different dimensions"));
    }
    let nm = profiles.len() * dim;
    let mut out = DMatrix::zeros(nm, nm);
    for (k, p) in profiles.iter().enumerate() {
        for m in 0..dim {
            out[(k * dim + m, k * dim + m)] = entry(p, m);
        }
    }
    Ok(out)
}

/// Covariance of the aggregate link noise received by each node,
/// `v_k = sum_l a_lk K_l v_lk`. Block `k` is
/// `rho sum_{l in N_k \ k} a_lk^2 sigma2_psi,lk I_M`: selection matrices are
/// idempotent 0/1 diagonals with mean `rho I`, and links are independent.
pub fn link_noise_covariance(
    weights: &CombinationMatrix,
    link_noise: &LinkNoiseProfile,
    dim: usize,
    rho: f64,
) -> DMatrix<f64> {
    let n = weights.n_nodes();
    let index = link_noise.index();
    let mut out = DMatrix::zeros(n * dim, n * dim);
    for k in 0..n {
        let total: f64 = index
            .incoming(k)
            .map(|pos| {
                let link = index.links()[pos];
                weights.weight(link.source, k).powi(2) * link_noise.variances()[pos]
            })
            .sum();
        for m in 0..dim {
            out[(k * dim + m, k * dim + m)] = rho * total;
        }
    }
    out
}

/// Spectral radius via the real Schur form.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 0)
        .ok_or_else(|| Error::numeric("Schur decomposition did not converge"))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub lambda: f64,
    /// Spectral radius of `lambda Q`.
    pub spectral_radius_mean: f64,
    /// Spectral radius of `lambda^2 Phi`.
    pub spectral_radius_ms: f64,
}

impl StabilityReport {
    /// Whether the radii equal `lambda` and `lambda^2` within `tol`.
    pub fn matches_forgetting_factor(&self, tol: f64) -> bool {
        (self.spectral_radius_mean - self.lambda).abs() <= tol
            && (self.spectral_radius_ms - self.lambda * self.lambda).abs() <= tol
    }
}

/// Steady-state network MSD, linear scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsdPrediction {
    pub msd_ideal: f64,
    pub msd_noisy: f64,
    /// Additive degradation caused by link noise.
    pub noise_penalty: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transient: Option<Vec<f64>>,
}

/// The analysis matrices for one configuration.
#[derive(Debug, Clone)]
pub struct TheoryModel {
    pub q: DMatrix<f64>,
    pub phi: SecondMoment,
    pub gamma: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub rv: DMatrix<f64>,
    pub lambda: f64,
    pub rho: f64,
    pub kind: SchemeKind,
    pub entries: usize,
    pub warnings: Vec<String>,
}

impl TheoryModel {
    pub fn build(
        weights: &CombinationMatrix,
        profiles: &[NodeProfile],
        link_noise: &LinkNoiseProfile,
        kind: SchemeKind,
        entries: usize,
        lambda: f64,
    ) -> Result<Self> {
        let n = weights.n_nodes();
        if profiles.len() != n {
            return Err(Error::config(format!(
                "{} node profiles for {n} nodes",
                profiles.len()
            )));
        }
        let dim = profiles[0].dim();
        moments::check_size(n, dim)?;
        let rho = transmission_probability(entries, dim)?;
        let mut warnings = Vec::new();
        if kind != SchemeKind::UniformSubset && !dim.is_multiple_of(entries) {
            let msg = format!(
                "L = {entries} does not divide M = {dim}: partition subsets are unequal, \
                 theory uses the nominal rho = L/M = {rho}"
            );
            warn!("{msg}");
            warnings.push(msg);
        }
        Ok(TheoryModel {
            q: mean_matrix_q(weights, dim, rho)?,
            phi: second_moment_phi(weights, kind, entries, dim)?,
            gamma: gamma_matrix(profiles, lambda)?,
            g: noise_matrix_g(profiles, lambda)?,
            rv: link_noise_covariance(weights, link_noise, dim, rho),
            lambda,
            rho,
            kind,
            entries,
            warnings,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.phi.n_nodes()
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    /// Same model with the link noise removed.
    pub fn ideal(&self) -> Self {
        let mut out = self.clone();
        out.rv.fill(0.0);
        out
    }

    /// Radii of `lambda Q` and `lambda^2 Phi`. Phi is handled block by block;
    /// its spectrum is the union of the block spectra.
    pub fn stability_checks(&self) -> Result<StabilityReport> {
        let rq = spectral_radius(&(&self.q * self.lambda))?;
        let mut rphi = 0.0f64;
        for (_, block) in self.phi.blocks() {
            rphi = rphi.max(spectral_radius(block)?);
        }
        Ok(StabilityReport {
            lambda: self.lambda,
            spectral_radius_mean: rq,
            spectral_radius_ms: self.lambda * self.lambda * rphi,
        })
    }

    /// Diagonal entries `X[(p,t),(p,t)]` of a block-diagonal NM matrix laid out
    /// as the local `(t, t)` vector of length `N^2`.
    fn diag_block_vector(&self, m: &DMatrix<f64>, t: usize) -> DVector<f64> {
        let (n, dim) = (self.n_nodes(), self.dim());
        let mut v = DVector::zeros(n * n);
        for p in 0..n {
            v[p * n + p] = m[(p * dim + t, p * dim + t)];
        }
        v
    }

    /// Solves `(I - F) sigma = vec(I_NM) / N` on the `(t, t)` blocks, which are
    /// the only ones with a nonzero right-hand side.
    fn steady_state_weights(&self) -> Result<Vec<DVector<f64>>> {
        if self.lambda >= 1.0 {
            return Err(Error::domain(
                "theory undefined at λ=1 (singular system)",
            ));
        }
        let n = self.n_nodes();
        let l2 = self.lambda * self.lambda;
        (0..self.dim())
            .map(|t| {
                let block = self.phi.block(t, t);
                let a = DMatrix::identity(n * n, n * n) - block * l2;
                let mut rhs = DVector::zeros(n * n);
                for p in 0..n {
                    rhs[p * n + p] = 1.0 / n as f64;
                }
                solve_refined(&a, &rhs)
            })
            .collect()
    }

    pub fn steady_state_msd(&self) -> Result<MsdPrediction> {
        let sigmas = self.steady_state_weights()?;
        let (mut ideal, mut penalty, mut noisy) = (0.0, 0.0, 0.0);
        for (t, sigma) in sigmas.iter().enumerate() {
            let g = self.diag_block_vector(&self.g, t);
            let r = self.diag_block_vector(&self.rv, t);
            let gphi = self.phi.block(t, t).tr_mul(&g);
            ideal += gphi.dot(sigma);
            penalty += r.dot(sigma);
            noisy += (gphi + r).dot(sigma);
        }
        Ok(MsdPrediction {
            msd_ideal: ideal,
            msd_noisy: noisy,
            noise_penalty: penalty,
            transient: None,
        })
    }

    /// Predicted network MSD after `0..=iterations` steps, starting from zero
    /// estimates (initial error `w_o` at every node).
    ///
    /// Iterates `x_{j+1} = F x_j` from `x_0 = vec(I) / N` and accumulates
    /// `m_j = |w~_0|^2_{x_j} + sum_{i<j} (vec(G)' Phi + vec(R_v)') x_i`.
    pub fn transient_msd(&self, w_o: &GroundTruth, iterations: usize) -> Result<Vec<f64>> {
        let (n, dim) = (self.n_nodes(), self.dim());
        if w_o.dim() != dim {
            return Err(Error::config("ground truth dimension does not match the model"));
        }
        let l2 = self.lambda * self.lambda;
        let mut xs: Vec<DVector<f64>> = (0..dim)
            .map(|_| {
                let mut x = DVector::zeros(n * n);
                for p in 0..n {
                    x[p * n + p] = 1.0 / n as f64;
                }
                x
            })
            .collect();
        let drive: Vec<DVector<f64>> = (0..dim)
            .map(|t| {
                let g = self.diag_block_vector(&self.g, t);
                self.phi.block(t, t).tr_mul(&g) + self.diag_block_vector(&self.rv, t)
            })
            .collect();

        let mut out = Vec::with_capacity(iterations + 1);
        let mut accumulated = 0.0;
        for j in 0..=iterations {
            let initial: f64 = (0..dim).map(|t| w_o.vector()[t].powi(2) * xs[t].sum()).sum();
            out.push(initial + accumulated);
            if j == iterations {
                break;
            }
            for t in 0..dim {
                accumulated += drive[t].dot(&xs[t]);
                xs[t] = self.phi.block(t, t) * &xs[t] * l2;
            }
        }
        Ok(out)
    }

    /// `E w~_i = (lambda Q)^i E w~_0` for `i = 0..=iterations`.
    pub fn mean_recursion_predict(
        &self,
        initial: &DVector<f64>,
        iterations: usize,
    ) -> Result<Vec<DVector<f64>>> {
        if initial.len() != self.q.nrows() {
            return Err(Error::config(format!(
                "initial mean error has length {}, expected {}",
                initial.len(),
                self.q.nrows()
            )));
        }
        let lq = &self.q * self.lambda;
        let mut out = Vec::with_capacity(iterations + 1);
        out.push(initial.clone());
        for i in 0..iterations {
            let next = &lq * &out[i];
            out.push(next);
        }
        Ok(out)
    }
}

/// LU solve followed by iterative refinement; fails if the final residual
/// exceeds [`SOLVE_RESIDUAL_TOL`].
fn solve_refined(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let mut x = lu
        .solve(b)
        .ok_or_else(|| Error::numeric("singular steady-state system"))?;
    let mut residual = f64::INFINITY;
    for _ in 0..4 {
        let r = b - a * &x;
        residual = r.amax();
        if residual <= SOLVE_RESIDUAL_TOL * 1e-3 {
            break;
        }
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    let final_residual = (b - a * &x).amax();
    if !(final_residual <= SOLVE_RESIDUAL_TOL) {
        return Err(Error::numeric(format!(
            "steady-state solve residual {final_residual:e} (before last refinement {residual:e})"
        )));
    }
    Ok(x)
}

/// `10 log10(x)`, floored at -300 dB.
pub fn to_db(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    (10.0 * x.log10()).max(-300.0)
}
