//! Synthetic data: the linear measurement model, per-node statistical
//! profiles, link-noise draws and the batch stacks used by the least-squares
//! oracle.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Link, LinkIndex};

/// The unknown parameter vector all nodes estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth(DVector<f64>);

impl GroundTruth {
    pub fn new(w: DVector<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("ground truth must be a non-empty finite vector"));
        }
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::config("ground truth must be nonzero"));
        }
        Ok(GroundTruth(w))
    }

    /// Unit-variance Gaussian entries.
    pub fn draw<R: Rng>(dim: usize, rng: &mut R) -> Self {
        loop {
            let w = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Ok(g) = GroundTruth::new(w) {
                return g;
            }
        }
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Diagonal regressor covariance and measurement-noise variance of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeProfile {
    r_u: Vec<f64>,
    sigma2_v: f64,
}

impl NodeProfile {
    pub fn new(r_u: Vec<f64>, sigma2_v: f64) -> Result<Self> {
        if r_u.is_empty() {
            return Err(Error::config("regressor covariance must have at least one entry"));
        }
        if let Some(bad) = r_u.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::config(format!(
                "regressor covariance entries must be positive, got {bad}"
            )));
        }
        if !(sigma2_v.is_finite() && sigma2_v >= 0.0) {
            return Err(Error::config(format!(
                "measurement noise variance must be >= 0, got {sigma2_v}"
            )));
        }
        Ok(NodeProfile { r_u, sigma2_v })
    }

    /// Diagonal of the regressor covariance.
    pub fn r_u(&self) -> &[f64] {
        &self.r_u
    }

    pub fn sigma2_v(&self) -> f64 {
        self.sigma2_v
    }

    pub fn dim(&self) -> usize {
        self.r_u.len()
    }

    pub fn trace_r_u(&self) -> f64 {
        self.r_u.iter().sum()
    }
}

/// Per-directed-link noise variances, aligned with a [`LinkIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinkNoiseProfile {
    index: LinkIndex,
    variances: Vec<f64>,
}

impl LinkNoiseProfile {
    pub fn new(index: LinkIndex, variances: Vec<f64>) -> Result<Self> {
        if variances.len() != index.len() {
            return Err(Error::config(format!(
                "{} link variances given for {} links",
                variances.len(),
                index.len()
            )));
        }
        if let Some(bad) = variances.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::config(format!("link noise variance must be >= 0, got {bad}")));
        }
        Ok(LinkNoiseProfile { index, variances })
    }

    /// All links ideal.
    pub fn noiseless(index: LinkIndex) -> Self {
        let variances = vec![0.0; index.len()];
        LinkNoiseProfile { index, variances }
    }

    pub fn index(&self) -> &LinkIndex {
        &self.index
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn variance(&self, link: Link) -> Option<f64> {
        self.index.position(link).map(|p| self.variances[p])
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::config(format!("link noise scale must be >= 0, got {factor}")));
        }
        Ok(LinkNoiseProfile {
            index: self.index.clone(),
            variances: self.variances.iter().map(|v| v * factor).collect(),
        })
    }
}

/// Sampling ranges for seeded profile generation. Each quantity is drawn
/// uniformly from its closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRanges {
    pub r_u: [f64; 2],
    pub sigma2_v: [f64; 2],
    pub sigma2_psi: [f64; 2],
}

impl Default for ProfileRanges {
    fn default() -> Self {
        ProfileRanges {
            r_u: [0.5, 2.0],
            sigma2_v: [0.001, 0.01],
            sigma2_psi: [1e-4, 1e-2],
        }
    }
}

impl ProfileRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [
            ("r_u", self.r_u),
            ("sigma2_v", self.sigma2_v),
            ("sigma2_psi", self.sigma2_psi),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= 0.0) {
                return Err(Error::config(format!("invalid {name} range [{lo}, {hi}]")));
            }
        }
        if self.r_u[0] <= 0.0 {
            return Err(Error::config("r_u range must be strictly positive"));
        }
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn generate_node_profiles<R: Rng>(
    n_nodes: usize,
    dim: usize,
    ranges: &ProfileRanges,
    rng: &mut R,
) -> Result<Vec<NodeProfile>> {
    ranges.validate()?;
    (0..n_nodes)
        .map(|_| {
            let r_u = (0..dim).map(|_| uniform(rng, ranges.r_u)).collect();
            let sigma2_v = uniform(rng, ranges.sigma2_v);
            NodeProfile::new(r_u, sigma2_v)
        })
        .collect()
}

pub fn generate_link_noise<R: Rng>(
    index: &LinkIndex,
    ranges: &ProfileRanges,
    rng: &mut R,
) -> Result<LinkNoiseProfile> {
    ranges.validate()?;
    let variances = (0..index.len()).map(|_| uniform(rng, ranges.sigma2_psi)).collect();
    LinkNoiseProfile::new(index.clone(), variances)
}

/// Zero-mean Gaussian regressor with independent entries of variance `r_u[m]`.
pub fn draw_regressor<R: Rng>(profile: &NodeProfile, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(
        profile.dim(),
        profile
            .r_u
            .iter()
            .map(|&r| r.sqrt() * rng.sample::<f64, _>(StandardNormal)),
    )
}

/// `d = u w_o + v` with `v ~ N(0, sigma2_v)`. A noise sample is always drawn so
/// the stream position does not depend on the variance.
pub fn draw_measurement<R: Rng>(
    u: &DVector<f64>,
    w_o: &GroundTruth,
    sigma2_v: f64,
    rng: &mut R,
) -> f64 {
    let noise: f64 = rng.sample(StandardNormal);
    u.dot(w_o.vector()) + sigma2_v.sqrt() * noise
}

/// Noise vector for one transmission over `link`, covariance `sigma2 I_M`.
pub fn draw_link_noise<R: Rng>(
    link: Link,
    profile: &LinkNoiseProfile,
    dim: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let var = profile
        .variance(link)
        .ok_or_else(|| Error::config(format!("link {link} is not in the link-noise profile")))?;
    Ok(draw_noise_vector(var, dim, rng))
}

pub(crate) fn draw_noise_vector<R: Rng>(variance: f64, dim: usize, rng: &mut R) -> DVector<f64> {
    let sd = variance.sqrt();
    DVector::from_fn(dim, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// One observation of a node, optionally with the noise sample that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub u: DVector<f64>,
    pub d: f64,
    pub noise: Option<f64>,
}

/// Stacked data of one node, newest sample first.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchDataset {
    pub y: DVector<f64>,
    pub h: DMatrix<f64>,
    /// Present only when every sample carried its noise value.
    pub v: Option<DVector<f64>>,
    /// Diagonal of the exponential weighting, `1, lambda, lambda^2, ...`.
    pub lambda_weights: DVector<f64>,
    pub lambda: f64,
}

impl BatchDataset {
    pub fn n_samples(&self) -> usize {
        self.y.len()
    }
}

/// Stacks a node's history (given oldest first) newest-first, with the
/// newest sample weighted one.
pub fn assemble_batch(history: &[Sample], lambda: f64) -> Result<BatchDataset> {
    let n = history.len();
    if n == 0 {
        return Err(Error::config("cannot assemble a batch from an empty history"));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::config(format!("forgetting factor {lambda} outside (0, 1]")));
    }
    let dim = history[0].u.len();
    if history.iter().any(|s| s.u.len() != dim) {
        return Err(Error::config("regressors in the history have different lengths"));
    }
    let newest_first = || history.iter().rev();
    let y = DVector::from_iterator(n, newest_first().map(|s| s.d));
    let h = DMatrix::from_fn(n, dim, |r, c| history[n - 1 - r].u[c]);
    let v = newest_first()
        .map(|s| s.noise)
        .collect::<Option<Vec<f64>>>()
        .map(DVector::from_vec);
    let lambda_weights = DVector::from_iterator(n, (0..n).map(|j| lambda.powi(j as i32)));
    Ok(BatchDataset {
        y,
        h,
        v,
        lambda_weights,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{enumerate_links, Topology};
    use crate::rng::{stream, Purpose};

    #[test]
    fn profile_invariants() {
        assert!(NodeProfile::new(vec![0.0, 0.0], 0.1).is_err());
        assert!(NodeProfile::new(vec![1.0, -1.0], 0.1).is_err());
        assert!(NodeProfile::new(vec![1.0], -0.1).is_err());
        assert!(NodeProfile::new(vec![1.0], 0.0).is_ok());
        assert!(GroundTruth::new(DVector::zeros(3)).is_err());
    }

    #[test]
    fn regressor_covariance_matches_profile() {
        let p = NodeProfile::new(vec![1.0, 1.0], 0.0).unwrap();
        let mut rng = stream(3, 0, Purpose::NodeData, 0);
        let n = 100_000;
        let mut cov = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let u = draw_regressor(&p, &mut rng);
            cov += &u * u.transpose();
        }
        cov /= n as f64;
        assert!((cov[(0, 0)] - 1.0).abs() < 0.05);
        assert!((cov[(1, 1)] - 1.0).abs() < 0.05);
        assert!(cov[(0, 1)].abs() < 0.05);
    }

    #[test]
    fn draws_are_reproducible() {
        let p = NodeProfile::new(vec![0.7, 1.3, 2.0], 0.01).unwrap();
        let seq = |seed| {
            let mut rng = stream(seed, 1, Purpose::NodeData, 2);
            (0..5).map(|_| draw_regressor(&p, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(seq(9), seq(9));
        assert_ne!(seq(9), seq(10));
    }

    #[test]
    fn measurement_cases() {
        let mut rng = stream(1, 0, Purpose::NodeData, 0);
        let w = GroundTruth::new(DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        let u = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        assert_eq!(draw_measurement(&u, &w, 0.0, &mut rng), 2.0);

        let w = GroundTruth::new(DVector::from_vec(vec![0.3, -1.2, 0.5])).unwrap();
        let u = DVector::from_vec(vec![0.1, 0.4, -2.0]);
        assert_eq!(draw_measurement(&u, &w, 0.0, &mut rng), u.dot(w.vector()));

        // u = 0: pure noise with the requested variance
        let zero = DVector::zeros(3);
        let n = 100_000;
        let var: f64 = (0..n)
            .map(|_| draw_measurement(&zero, &w, 0.25, &mut rng).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((var - 0.25).abs() < 0.25 * 0.02);
    }

    fn two_link_profile(var: f64) -> LinkNoiseProfile {
        let t = Topology::from_edges(2, &[(0, 1)]).unwrap();
        let idx = enumerate_links(&t);
        LinkNoiseProfile::new(idx, vec![var, var]).unwrap()
    }

    #[test]
    fn link_noise_statistics() {
        let prof = two_link_profile(0.01);
        let l0 = Link { source: 1, sink: 0 };
        let l1 = Link { source: 0, sink: 1 };
        let mut r0 = stream(5, 0, Purpose::LinkNoise, 0);
        let mut r1 = stream(5, 0, Purpose::LinkNoise, 1);
        let n = 100_000;
        let m = 2;
        let mut var = vec![0.0; m];
        let mut cross = DMatrix::<f64>::zeros(m, m);
        for _ in 0..n {
            let a = draw_link_noise(l0, &prof, m, &mut r0).unwrap();
            let b = draw_link_noise(l1, &prof, m, &mut r1).unwrap();
            for j in 0..m {
                var[j] += a[j] * a[j];
            }
            cross += &a * b.transpose();
        }
        for v in var {
            let v = v / n as f64;
            assert!((0.009..=0.011).contains(&v), "variance {v}");
        }
        cross /= n as f64;
        assert!(cross.iter().all(|c| c.abs() < 3e-3));
    }

    #[test]
    fn ideal_link_is_silent_and_unknown_link_errors() {
        let prof = two_link_profile(0.0);
        let mut rng = stream(5, 0, Purpose::LinkNoise, 0);
        let v = draw_link_noise(Link { source: 1, sink: 0 }, &prof, 4, &mut rng).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
        let err = draw_link_noise(Link { source: 0, sink: 0 }, &prof, 4, &mut rng);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    fn sample(d: f64, u: &[f64]) -> Sample {
        Sample {
            u: DVector::from_row_slice(u),
            d,
            noise: None,
        }
    }

    #[test]
    fn batch_stacking() {
        assert!(assemble_batch(&[], 1.0).is_err());

        let b = assemble_batch(&[sample(3.0, &[1.0, 2.0])], 0.9).unwrap();
        assert_eq!(b.y.as_slice(), &[3.0]);
        assert_eq!(b.lambda_weights.as_slice(), &[1.0]);

        let b = assemble_batch(&[sample(1.0, &[1.0, 0.0]), sample(2.0, &[0.0, 1.0])], 0.5).unwrap();
        assert_eq!(b.lambda_weights.as_slice(), &[1.0, 0.5]);
        // newest first
        assert_eq!(b.y.as_slice(), &[2.0, 1.0]);
        assert_eq!(b.h.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0]);
        assert!(b.v.is_none());

        let hist: Vec<Sample> = (0..5).map(|i| sample(i as f64, &[1.0])).collect();
        let b = assemble_batch(&hist, 1.0).unwrap();
        assert!(b.lambda_weights.iter().all(|w| *w == 1.0));
    }
}
