//! Monte-Carlo estimates of the moments in [`super::moments`], used to check
//! the closed forms against sampled transition matrices.
//!
//! Two selection samplers are available. [`scheme_selections`] reproduces the
//! simulator (sequential with a random phase, stochastic, uniform-subset).
//! [`moment_exact_selections`] draws uniform `L`-subsets, shared across nodes
//! for the sequential kind and independent otherwise; its first and pairwise
//! moments are exactly the ones the closed forms assume, for every `L`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::moments::{mean_matrix_q, second_moment_phi};
use super::link_noise_covariance;
use crate::error::{Error, Result};
use crate::network::CombinationMatrix;
use crate::rng::{stream, Purpose, StreamRng};
use crate::selection::{transmission_probability, SchemeKind, SelectionMatrix, SelectionScheme};
use crate::signal::{draw_noise_vector, LinkNoiseProfile};

/// Largest `N M` for which the sampled second moment is formed.
pub const MAX_SAMPLED_STACKED_DIM: usize = 12;

/// Uniform `L`-subsets with the pairing structure of `kind`.
pub fn moment_exact_selections<R: Rng>(
    kind: SchemeKind,
    entries: usize,
    dim: usize,
    n_nodes: usize,
    rng: &mut R,
) -> Vec<SelectionMatrix> {
    let mut draw = || SelectionMatrix::from_indices(dim, index::sample(rng, dim, entries));
    if kind.shares_pattern_across_nodes() {
        vec![draw(); n_nodes]
    } else {
        (0..n_nodes).map(|_| draw()).collect()
    }
}

/// Selections at a uniformly random point of the schedule.
pub fn scheme_selections<R: Rng>(
    scheme: &SelectionScheme,
    n_nodes: usize,
    rng: &mut R,
) -> Vec<SelectionMatrix> {
    let iteration = rng.random_range(0..scheme.partition().len() as u64);
    (0..n_nodes).map(|k| scheme.select(k, iteration, rng)).collect()
}

/// One realization of `B` for the given selections.
pub fn transition_matrix(weights: &CombinationMatrix, selections: &[SelectionMatrix]) -> DMatrix<f64> {
    let n = weights.n_nodes();
    let dim = selections[0].dim();
    let mut b = DMatrix::zeros(n * dim, n * dim);
    for p in 0..n {
        for t in 0..dim {
            b[(p * dim + t, p * dim + t)] = 1.0;
        }
        for q in (0..n).filter(|&q| q != p) {
            let a = weights.weight(q, p);
            if a == 0.0 {
                continue;
            }
            for t in selections[q].selected() {
                b[(p * dim + t, q * dim + t)] += a;
                b[(p * dim + t, p * dim + t)] -= a;
            }
        }
    }
    b
}

/// Sample mean of `B` over `draws` selections from `sampler`.
pub fn sampled_mean_transition(
    weights: &CombinationMatrix,
    draws: usize,
    seed: u64,
    mut sampler: impl FnMut(&mut StreamRng) -> Vec<SelectionMatrix>,
) -> DMatrix<f64> {
    let mut rng = stream(seed, 0, Purpose::Oracle, 1);
    let mut acc: Option<DMatrix<f64>> = None;
    for _ in 0..draws {
        let b = transition_matrix(weights, &sampler(&mut rng));
        match acc.as_mut() {
            Some(a) => *a += b,
            None => acc = Some(b),
        }
    }
    acc.map(|a| a / draws as f64).unwrap_or_else(|| DMatrix::zeros(0, 0))
}

/// Sample mean of `B' (x) B'` as a dense `(NM)^2 x (NM)^2` matrix.
pub fn sampled_second_moment(
    weights: &CombinationMatrix,
    dim: usize,
    draws: usize,
    seed: u64,
    mut sampler: impl FnMut(&mut StreamRng) -> Vec<SelectionMatrix>,
) -> Result<DMatrix<f64>> {
    let nm = weights.n_nodes() * dim;
    if nm > MAX_SAMPLED_STACKED_DIM {
        return Err(Error::Resource(format!(
            "sampled second moment needs N M <= {MAX_SAMPLED_STACKED_DIM}, got {nm}"
        )));
    }
    let mut rng = stream(seed, 0, Purpose::Oracle, 2);
    let mut acc = DMatrix::zeros(nm * nm, nm * nm);
    let mut nonzero = Vec::new();
    for _ in 0..draws {
        let b = transition_matrix(weights, &sampler(&mut rng));
        nonzero.clear();
        // entries (i, k, B'[i, k]) of the transpose
        for k in 0..nm {
            for i in 0..nm {
                let v = b[(k, i)];
                if v != 0.0 {
                    nonzero.push((i, k, v));
                }
            }
        }
        for &(i, k, x) in &nonzero {
            for &(j, l, y) in &nonzero {
                acc[(i * nm + j, k * nm + l)] += x * y;
            }
        }
    }
    Ok(acc / draws as f64)
}

/// Sample covariance of the aggregate link noise `v_k = sum_l a_lk K_l v_lk`
/// and the standard error of each entry.
pub fn sampled_link_noise_covariance(
    weights: &CombinationMatrix,
    link_noise: &LinkNoiseProfile,
    kind: SchemeKind,
    entries: usize,
    dim: usize,
    draws: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    transmission_probability(entries, dim)?;
    if draws < 2 {
        return Err(Error::config("at least two draws are needed for a standard error"));
    }
    let n = weights.n_nodes();
    let nm = n * dim;
    let index = link_noise.index();
    let mut rng = stream(seed, 0, Purpose::Oracle, 3);
    let mut sum = DMatrix::<f64>::zeros(nm, nm);
    let mut sum_sq = DMatrix::<f64>::zeros(nm, nm);
    let mut v = DVector::zeros(nm);
    for _ in 0..draws {
        let selections = moment_exact_selections(kind, entries, dim, n, &mut rng);
        v.fill(0.0);
        for (pos, link) in index.links().iter().enumerate() {
            let noise = draw_noise_vector(link_noise.variances()[pos], dim, &mut rng);
            let a = weights.weight(link.source, link.sink);
            for t in selections[link.source].selected() {
                v[link.sink * dim + t] += a * noise[t];
            }
        }
        for c in 0..nm {
            for r in 0..nm {
                let x = v[r] * v[c];
                sum[(r, c)] += x;
                sum_sq[(r, c)] += x * x;
            }
        }
    }
    let count = draws as f64;
    let mean = sum / count;
    let stderr = DMatrix::from_fn(nm, nm, |r, c| {
        let var = (sum_sq[(r, c)] / count - mean[(r, c)].powi(2)).max(0.0) * count / (count - 1.0);
        (var / count).sqrt()
    });
    Ok((mean, stderr))
}

/// Outcome of comparing a sampled moment with its closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub name: String,
    pub draws: usize,
    /// Largest absolute error, or largest error in standard errors for
    /// sigma-based checks.
    pub max_error: f64,
    /// Row and column of the largest error.
    pub location: (usize, usize),
    pub threshold: f64,
    pub passed: bool,
}

impl std::fmt::Display for MomentCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: max error {:.3e} at ({}, {}), threshold {:.1e}, {} draws",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_error,
            self.location.0,
            self.location.1,
            self.threshold,
            self.draws
        )
    }
}

/// Max absolute entrywise difference between `estimate` and `reference`.
pub fn compare_matrices(
    name: impl Into<String>,
    estimate: &DMatrix<f64>,
    reference: &DMatrix<f64>,
    threshold: f64,
    draws: usize,
) -> Result<MomentCheck> {
    if estimate.shape() != reference.shape() {
        return Err(Error::config(format!(
            "cannot compare {:?} with {:?}",
            estimate.shape(),
            reference.shape()
        )));
    }
    let mut max_error = 0.0;
    let mut location = (0, 0);
    for c in 0..estimate.ncols() {
        for r in 0..estimate.nrows() {
            let e = (estimate[(r, c)] - reference[(r, c)]).abs();
            if !(e <= max_error) {
                max_error = e;
                location = (r, c);
            }
        }
    }
    Ok(MomentCheck {
        name: name.into(),
        draws,
        max_error,
        location,
        threshold,
        passed: max_error <= threshold,
    })
}

/// Per-comparison bound, in standard errors, that keeps the chance of any
/// false alarm over `count` independent comparisons equal to that of a single
/// two-sided `sigmas` bound (Sidak correction).
pub fn familywise_sigma_bound(sigmas: f64, count: usize) -> f64 {
    let normal = Normal::standard();
    let single = 2.0 * (1.0 - normal.cdf(sigmas));
    let each = 1.0 - (1.0 - single).powf(1.0 / count.max(1) as f64);
    normal.inverse_cdf(1.0 - each / 2.0)
}

/// Compares a sampled symmetric matrix with its closed form in units of the
/// estimate's standard error. Only the upper triangle is tested, and the
/// bound is family-wise over those entries; see [`familywise_sigma_bound`].
pub fn compare_within_sigma(
    name: impl Into<String>,
    estimate: &DMatrix<f64>,
    stderr: &DMatrix<f64>,
    reference: &DMatrix<f64>,
    sigmas: f64,
    draws: usize,
) -> Result<MomentCheck> {
    if estimate.shape() != reference.shape() || stderr.shape() != reference.shape() {
        return Err(Error::config("matrices to compare have different shapes"));
    }
    let z = DMatrix::from_fn(estimate.nrows(), estimate.ncols(), |r, c| {
        let diff = (estimate[(r, c)] - reference[(r, c)]).abs();
        if r > c || diff <= 1e-15 {
            0.0
        } else {
            diff / stderr[(r, c)]
        }
    });
    let n = estimate.nrows();
    let bound = familywise_sigma_bound(sigmas, n * (n + 1) / 2);
    compare_matrices(name, &z, &DMatrix::zeros(n, n), bound, draws)
}

/// Draw counts and seed for [`validate_moments`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSettings {
    pub mean_draws: usize,
    pub second_moment_draws: usize,
    pub noise_draws: usize,
    pub seed: u64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            mean_draws: 100_000,
            second_moment_draws: 200_000,
            noise_draws: 100_000,
            seed: 0,
        }
    }
}

pub const MEAN_THRESHOLD: f64 = 5e-3;
pub const SECOND_MOMENT_THRESHOLD: f64 = 1e-2;
pub const NOISE_SIGMAS: f64 = 3.0;

/// Runs every oracle that fits the configuration: `E[B]` against `Q` with the
/// moment-exact sampler (and with the scheme's own sampler when `L` divides
/// `M`), `E[B' (x) B']` against `Phi` when `N M` is small enough, and the
/// aggregate link-noise covariance against its closed form.
pub fn validate_moments(
    weights: &CombinationMatrix,
    link_noise: &LinkNoiseProfile,
    kind: SchemeKind,
    entries: usize,
    dim: usize,
    settings: &OracleSettings,
) -> Result<Vec<MomentCheck>> {
    let n = weights.n_nodes();
    let rho = transmission_probability(entries, dim)?;
    let q = mean_matrix_q(weights, dim, rho)?;
    let mut checks = Vec::new();

    let sampled = sampled_mean_transition(weights, settings.mean_draws, settings.seed, |rng| {
        moment_exact_selections(kind, entries, dim, n, rng)
    });
    checks.push(compare_matrices("E[B] vs Q", &sampled, &q, MEAN_THRESHOLD, settings.mean_draws)?);

    let scheme = SelectionScheme::new(kind, entries, dim)?;
    if scheme.is_balanced() {
        let sampled = sampled_mean_transition(weights, settings.mean_draws, settings.seed ^ 1, |rng| {
            scheme_selections(&scheme, n, rng)
        });
        checks.push(compare_matrices(
            format!("E[B] vs Q ({} sampler)", kind.as_str()),
            &sampled,
            &q,
            MEAN_THRESHOLD,
            settings.mean_draws,
        )?);
    }

    if n * dim <= MAX_SAMPLED_STACKED_DIM {
        let phi = second_moment_phi(weights, kind, entries, dim)?.to_dense()?;
        let sampled = sampled_second_moment(weights, dim, settings.second_moment_draws, settings.seed, |rng| {
            moment_exact_selections(kind, entries, dim, n, rng)
        })?;
        checks.push(compare_matrices(
            "E[B' (x) B'] vs Phi",
            &sampled,
            &phi,
            SECOND_MOMENT_THRESHOLD,
            settings.second_moment_draws,
        )?);
    }

    let rv = link_noise_covariance(weights, link_noise, dim, rho);
    let (mean, stderr) = sampled_link_noise_covariance(
        weights,
        link_noise,
        kind,
        entries,
        dim,
        settings.noise_draws,
        settings.seed,
    )?;
    checks.push(compare_within_sigma(
        "link noise covariance vs R_v (max |z|, family-wise 3-sigma)",
        &mean,
        &stderr,
        &rv,
        NOISE_SIGMAS,
        settings.noise_draws,
    )?);
    Ok(checks)
}
