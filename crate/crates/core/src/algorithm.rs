//! Partial-diffusion RLS with noisy links.
//!
//! Each iteration has two phases. In the adaptation phase every node runs one
//! exponentially weighted RLS update, seeded with its current combined
//! estimate `w`, which produces the intermediate estimate `psi`. In the
//! combination phase every node sends `L` selected entries of `psi` to its
//! neighbors. Each link adds independent noise to what it carries. A node then
//! averages what it received. Entries a neighbor did not send are replaced by
//! the node's own entries, and those replacements are noise-free.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::{CombinationMatrix, Link, Topology};
use crate::rng::{stream, Purpose, StreamRng};
use crate::selection::{SelectionMatrix, SelectionScheme};
use crate::signal::{draw_noise_vector, BatchDataset, GroundTruth, LinkNoiseProfile};

/// Default RLS regularization: `P = delta^-1 I` at start.
pub const DEFAULT_DELTA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    /// Combined estimate.
    pub w: DVector<f64>,
    /// Intermediate (post-adaptation) estimate.
    pub psi: DVector<f64>,
    /// Inverse of the exponentially weighted regressor correlation.
    pub p: DMatrix<f64>,
}

impl NodeState {
    /// Zero estimates, `P = delta^-1 I`.
    pub fn init(dim: usize, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::config(format!("regularization delta must be > 0, got {delta}")));
        }
        if dim == 0 {
            return Err(Error::config("estimate dimension must be positive"));
        }
        Ok(NodeState {
            w: DVector::zeros(dim),
            psi: DVector::zeros(dim),
            p: DMatrix::identity(dim, dim) / delta,
        })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(self.psi.iter()).chain(self.p.iter()).all(|x| x.is_finite())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.p.clone().cholesky().is_some()
    }

    /// One RLS update with forgetting factor `lambda`, using `w` as the prior:
    ///
    /// ```text
    /// P   <- (P - P u' u P / (lambda + u P u')) / lambda
    /// psi <- w + P u' (d - u w)
    /// ```
    ///
    /// `P` is re-symmetrized afterwards.
    pub fn adapt(&mut self, u: &DVector<f64>, d: f64, lambda: f64) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::config(format!(
                "regressor has length {}, state has dimension {}",
                u.len(),
                self.dim()
            )));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::config(format!("forgetting factor {lambda} outside (0, 1]")));
        }
        if !d.is_finite() || u.iter().any(|x| !x.is_finite()) || !self.is_finite() {
            return Err(Error::numeric("non-finite input to RLS adaptation"));
        }
        let pu = &self.p * u;
        let denom = lambda + u.dot(&pu);
        self.p.ger(-1.0 / denom, &pu, &pu, 1.0);
        self.p /= lambda;
        let sym = (&self.p + self.p.transpose()) * 0.5;
        self.p = sym;
        debug_assert!(self.is_positive_definite(), "P lost positive definiteness");

        let err = d - u.dot(&self.w);
        self.psi = &self.w + (&self.p * u) * err;
        Ok(())
    }
}

/// Noisy entries of a neighbor's intermediate estimate as received by a sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub source: usize,
    pub selection: SelectionMatrix,
    /// Received values of the selected entries, in ascending entry order.
    pub values: Vec<f64>,
}

/// Partial-diffusion combination at node `k`:
///
/// ```text
/// w_k = a_kk psi_k + sum_l a_lk [ K_l psi_lk + (I - K_l) psi_k ]
/// ```
///
/// where `psi_lk` is the noisy copy of `psi_l` received over link `l -> k` and
/// `K_l` selects what `l` transmitted. `received` must hold exactly one
/// transmission from every neighbor of `k` other than `k`.
pub fn combine_partial(
    k: usize,
    own_psi: &DVector<f64>,
    received: &[Transmission],
    topology: &Topology,
    weights: &CombinationMatrix,
) -> Result<DVector<f64>> {
    let dim = own_psi.len();
    let expected: Vec<usize> = topology.neighbors_excluding_self(k).collect();
    let mut got: Vec<usize> = received.iter().map(|t| t.source).collect();
    got.sort_unstable();
    if got != expected {
        return Err(Error::config(format!(
            "node {k} received from {got:?}, expected exactly {expected:?}"
        )));
    }

    let mut w = own_psi * weights.weight(k, k);
    for tx in received {
        if tx.selection.dim() != dim || tx.selection.count() != tx.values.len() {
            return Err(Error::config(format!(
                "transmission {} -> {k} carries {} values for {} selected entries",
                tx.source,
                tx.values.len(),
                tx.selection.count()
            )));
        }
        let a = weights.weight(tx.source, k);
        let mut values = tx.values.iter();
        for t in 0..dim {
            let x = if tx.selection.is_selected(t) {
                *values.next().expect("length checked above")
            } else {
                own_psi[t]
            };
            w[t] += a * x;
        }
    }
    Ok(w)
}

/// Regressor and measurement of one node at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub u: DVector<f64>,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub nodes: Vec<NodeState>,
    /// Number of completed iterations.
    pub iteration: u64,
}

impl NetworkState {
    pub fn init(n_nodes: usize, dim: usize, delta: f64) -> Result<Self> {
        let node = NodeState::init(dim, delta)?;
        Ok(NetworkState {
            nodes: vec![node; n_nodes],
            iteration: 0,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_finite(&self) -> bool {
        self.nodes.iter().all(NodeState::is_finite)
    }
}

/// Per-run random streams used by the combination phase: one selection stream
/// per node and one noise stream per directed link.
#[derive(Debug, Clone)]
pub struct Channels {
    selection: Vec<StreamRng>,
    links: Vec<StreamRng>,
}

impl Channels {
    pub fn new(master_seed: u64, run: u64, n_nodes: usize, n_links: usize) -> Self {
        Channels {
            selection: (0..n_nodes)
                .map(|k| stream(master_seed, run, Purpose::Selection, k as u64))
                .collect(),
            links: (0..n_links)
                .map(|m| stream(master_seed, run, Purpose::LinkNoise, m as u64))
                .collect(),
        }
    }
}

/// Everything a network step needs besides data and state.
#[derive(Debug, Clone)]
pub struct PdrlsNetwork {
    pub topology: Topology,
    pub weights: CombinationMatrix,
    pub link_noise: LinkNoiseProfile,
    pub scheme: SelectionScheme,
    pub lambda: f64,
}

impl PdrlsNetwork {
    pub fn new(
        topology: Topology,
        weights: CombinationMatrix,
        link_noise: LinkNoiseProfile,
        scheme: SelectionScheme,
        lambda: f64,
    ) -> Result<Self> {
        if weights.n_nodes() != topology.n_nodes() {
            return Err(Error::config("combination matrix and topology sizes differ"));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::config(format!("forgetting factor {lambda} outside (0, 1]")));
        }
        Ok(PdrlsNetwork {
            topology,
            weights,
            link_noise,
            scheme,
            lambda,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.topology.n_nodes()
    }

    pub fn dim(&self) -> usize {
        self.scheme.dim()
    }

    /// One adapt-then-combine iteration over the whole network.
    pub fn step(
        &self,
        state: &NetworkState,
        data: &[Observation],
        channels: &mut Channels,
    ) -> Result<NetworkState> {
        let n = self.n_nodes();
        let dim = self.dim();
        if state.n_nodes() != n || data.len() != n {
            return Err(Error::config(format!(
                "network has {n} nodes, state has {}, data has {}",
                state.n_nodes(),
                data.len()
            )));
        }

        let mut nodes = state.nodes.clone();
        for (node, obs) in nodes.iter_mut().zip(data) {
            node.adapt(&obs.u, obs.d, self.lambda)?;
        }

        let selections: Vec<SelectionMatrix> = (0..n)
            .map(|k| self.scheme.select(k, state.iteration, &mut channels.selection[k]))
            .collect();

        let index = self.link_noise.index();
        let mut combined = Vec::with_capacity(n);
        for k in 0..n {
            let mut received = Vec::new();
            for pos in index.incoming(k) {
                let Link { source, .. } = index.links()[pos];
                // the full vector is drawn so stream positions do not depend on selection
                let noise = draw_noise_vector(self.link_noise.variances()[pos], dim, &mut channels.links[pos]);
                let selection = selections[source].clone();
                let values = selection
                    .selected()
                    .map(|t| nodes[source].psi[t] + noise[t])
                    .collect();
                received.push(Transmission {
                    source,
                    selection,
                    values,
                });
            }
            combined.push(combine_partial(k, &nodes[k].psi, &received, &self.topology, &self.weights)?);
        }
        for (node, w) in nodes.iter_mut().zip(combined) {
            node.w = w;
        }
        Ok(NetworkState {
            nodes,
            iteration: state.iteration + 1,
        })
    }
}

/// Weighted least-squares solution `(H' L H + r I)^-1 H' L y`.
///
/// With `regularization = Some(delta)` the ridge term is
/// `r = delta * lambda^n` for `n` stacked samples, which is exactly what an RLS
/// recursion started from `P = delta^-1 I` and a zero estimate solves.
pub fn batch_ls_solve(dataset: &BatchDataset, regularization: Option<f64>) -> Result<DVector<f64>> {
    let h = &dataset.h;
    let dim = h.ncols();
    let mut weighted_h = h.clone();
    for (r, &lw) in dataset.lambda_weights.iter().enumerate() {
        weighted_h.row_mut(r).scale_mut(lw);
    }
    let mut normal = h.transpose() * &weighted_h;
    if let Some(delta) = regularization {
        let r = delta * dataset.lambda.powi(dataset.n_samples() as i32);
        for i in 0..dim {
            normal[(i, i)] += r;
        }
    }
    let rhs = weighted_h.transpose() * &dataset.y;

    let chol = normal
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric("normal matrix is singular"))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(lo > hi * 1e-7) {
        return Err(Error::numeric("normal matrix is numerically singular"));
    }
    Ok(chol.solve(&rhs))
}

/// Stacked error `col{w_o - w_k}` over nodes.
pub fn error_vectors(state: &NetworkState, w_o: &GroundTruth) -> DVector<f64> {
    let dim = w_o.dim();
    let mut out = DVector::zeros(state.n_nodes() * dim);
    for (k, node) in state.nodes.iter().enumerate() {
        out.rows_mut(k * dim, dim).copy_from(&(w_o.vector() - &node.w));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_uniform_combination, enumerate_links};
    use crate::selection::SchemeKind;
    use crate::signal::{assemble_batch, draw_measurement, draw_regressor, NodeProfile, Sample};
    use approx::assert_abs_diff_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn init_values() {
        let s = NodeState::init(2, 0.01).unwrap();
        assert_abs_diff_eq!(s.p, DMatrix::identity(2, 2) * 100.0, epsilon = 1e-12);
        assert_eq!(s.w, DVector::zeros(2));
        assert!(s.is_positive_definite());
        assert!(NodeState::init(2, 0.0).is_err());
        assert!(NodeState::init(2, -1.0).is_err());
    }

    #[test]
    fn scalar_hand_example() {
        let mut s = NodeState::init(1, 1.0).unwrap();
        s.adapt(&v(&[1.0]), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.p[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.psi[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_regressor_only_inflates_p() {
        let mut s = NodeState::init(3, 0.5).unwrap();
        s.w = v(&[1.0, 2.0, 3.0]);
        let p0 = s.p.clone();
        s.adapt(&DVector::zeros(3), 7.0, 0.9).unwrap();
        assert_abs_diff_eq!(s.p, p0 / 0.9, epsilon = 1e-12);
        assert_eq!(s.psi, s.w);
    }

    #[test]
    fn adapt_uses_w_as_prior() {
        let mut s = NodeState::init(1, 1.0).unwrap();
        s.psi = v(&[10.0]);
        s.w = v(&[0.0]);
        s.adapt(&v(&[1.0]), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.psi[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let mut s = NodeState::init(2, 1.0).unwrap();
        assert!(matches!(s.adapt(&v(&[f64::NAN, 0.0]), 1.0, 1.0), Err(Error::Numeric(_))));
        assert!(matches!(s.adapt(&v(&[1.0, 0.0]), f64::INFINITY, 1.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn information_matrix_accumulates() {
        // lambda = 1: P^-1 = delta I + sum u' u
        let delta = 0.01;
        let prof = NodeProfile::new(vec![1.0, 0.5, 2.0, 1.5], 0.0).unwrap();
        let mut rng = stream(4, 0, Purpose::NodeData, 0);
        let mut s = NodeState::init(4, delta).unwrap();
        let mut info = DMatrix::identity(4, 4) * delta;
        for _ in 0..60 {
            let u = draw_regressor(&prof, &mut rng);
            let prev_inv = s.p.clone().try_inverse().unwrap();
            s.adapt(&u, 0.0, 0.97).unwrap();
            // one-step matrix inversion lemma identity
            let cur_inv = s.p.clone().try_inverse().unwrap();
            let expected = prev_inv * 0.97 + &u * u.transpose();
            let scale = expected.amax();
            assert!((cur_inv - expected).amax() / scale < 1e-9);
        }
        let mut s = NodeState::init(4, delta).unwrap();
        for _ in 0..60 {
            let u = draw_regressor(&prof, &mut rng);
            s.adapt(&u, 0.0, 1.0).unwrap();
            info += &u * u.transpose();
        }
        let inv = s.p.clone().try_inverse().unwrap();
        assert!((inv - info).amax() < 1e-8);
    }

    fn pair() -> (Topology, CombinationMatrix) {
        let t = Topology::from_edges(2, &[(0, 1)]).unwrap();
        let a = build_uniform_combination(&t);
        (t, a)
    }

    #[test]
    fn full_diffusion_average() {
        let (t, a) = pair();
        let rx = [Transmission {
            source: 1,
            selection: SelectionMatrix::full(2),
            values: vec![3.0, 3.0],
        }];
        let w = combine_partial(0, &v(&[1.0, 1.0]), &rx, &t, &a).unwrap();
        assert_eq!(w, v(&[2.0, 2.0]));
    }

    #[test]
    fn partial_substitutes_own_entries_and_noise_is_linear() {
        let (t, a) = pair();
        let sel = SelectionMatrix::from_diag(vec![true, false]);
        let clean = [Transmission {
            source: 1,
            selection: sel.clone(),
            values: vec![3.0],
        }];
        let w = combine_partial(0, &v(&[1.0, 1.0]), &clean, &t, &a).unwrap();
        assert_eq!(w, v(&[2.0, 1.0]));

        let noise = 0.37;
        let noisy = [Transmission {
            source: 1,
            selection: sel,
            values: vec![3.0 + noise],
        }];
        let wn = combine_partial(0, &v(&[1.0, 1.0]), &noisy, &t, &a).unwrap();
        assert_abs_diff_eq!(wn - w, v(&[0.5 * noise, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn combine_rejects_bad_input() {
        let (t, a) = pair();
        let psi = v(&[1.0, 1.0]);
        assert!(combine_partial(0, &psi, &[], &t, &a).is_err());
        let bad = [Transmission {
            source: 1,
            selection: SelectionMatrix::full(2),
            values: vec![1.0],
        }];
        assert!(combine_partial(0, &psi, &bad, &t, &a).is_err());
    }

    fn network(
        t: Topology,
        kind: SchemeKind,
        entries: usize,
        dim: usize,
        link_var: f64,
        lambda: f64,
    ) -> PdrlsNetwork {
        let a = build_uniform_combination(&t);
        let idx = enumerate_links(&t);
        let vars = vec![link_var; idx.len()];
        let noise = LinkNoiseProfile::new(idx, vars).unwrap();
        let scheme = SelectionScheme::new(kind, entries, dim).unwrap();
        PdrlsNetwork::new(t, a, noise, scheme, lambda).unwrap()
    }

    fn run(net: &PdrlsNetwork, w_o: &GroundTruth, sigma2_v: f64, steps: usize, seed: u64) -> NetworkState {
        let n = net.n_nodes();
        let dim = net.dim();
        let prof = NodeProfile::new(vec![1.0; dim], sigma2_v).unwrap();
        let mut data_rng: Vec<_> = (0..n).map(|k| stream(seed, 0, Purpose::NodeData, k as u64)).collect();
        let mut ch = Channels::new(seed, 0, n, net.link_noise.index().len());
        let mut state = NetworkState::init(n, dim, DEFAULT_DELTA).unwrap();
        for _ in 0..steps {
            let data: Vec<Observation> = data_rng
                .iter_mut()
                .map(|r| {
                    let u = draw_regressor(&prof, r);
                    let d = draw_measurement(&u, w_o, sigma2_v, r);
                    Observation { u, d }
                })
                .collect();
            state = net.step(&state, &data, &mut ch).unwrap();
        }
        state
    }

    #[test]
    fn noiseless_full_diffusion_converges() {
        // averaging re-injects error along directions a node already knows, so
        // the decay is roughly 1/i rather than the finite-time exactness of a
        // lone RLS filter
        let t = Topology::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let net = network(t, SchemeKind::Stochastic, 4, 4, 0.0, 1.0);
        let w_o = GroundTruth::new(v(&[0.5, -1.0, 2.0, 0.25])).unwrap();
        let err = |steps| {
            let state = run(&net, &w_o, 0.0, steps, 3);
            assert_eq!(state.iteration, steps as u64);
            state
                .nodes
                .iter()
                .map(|node| (&node.w - w_o.vector()).amax())
                .fold(0.0, f64::max)
        };
        let (e50, e400) = (err(50), err(400));
        assert!(e50 < 0.1, "{e50}");
        assert!(e400 < e50 / 4.0, "{e50} -> {e400}");
    }

    #[test]
    fn zero_link_noise_matches_clean_path_bitwise() {
        let t = Topology::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let noisy = network(t.clone(), SchemeKind::UniformSubset, 2, 4, 0.0, 0.99);
        let w_o = GroundTruth::new(v(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        let a = run(&noisy, &w_o, 0.01, 50, 8);

        // clean path: combine with the exact neighbor values
        let n = 3;
        let dim = 4;
        let prof = NodeProfile::new(vec![1.0; dim], 0.01).unwrap();
        let mut data_rng: Vec<_> = (0..n).map(|k| stream(8, 0, Purpose::NodeData, k as u64)).collect();
        let mut sel_rng: Vec<_> = (0..n).map(|k| stream(8, 0, Purpose::Selection, k as u64)).collect();
        let mut state = NetworkState::init(n, dim, DEFAULT_DELTA).unwrap();
        for i in 0..50 {
            for (k, node) in state.nodes.iter_mut().enumerate() {
                let u = draw_regressor(&prof, &mut data_rng[k]);
                let d = draw_measurement(&u, &w_o, 0.01, &mut data_rng[k]);
                node.adapt(&u, d, 0.99).unwrap();
            }
            let sels: Vec<_> = (0..n).map(|k| noisy.scheme.select(k, i, &mut sel_rng[k])).collect();
            let ws: Vec<_> = (0..n)
                .map(|k| {
                    let rx: Vec<_> = noisy
                        .topology
                        .neighbors_excluding_self(k)
                        .map(|l| Transmission {
                            source: l,
                            selection: sels[l].clone(),
                            values: sels[l].selected().map(|e| state.nodes[l].psi[e]).collect(),
                        })
                        .collect();
                    combine_partial(k, &state.nodes[k].psi, &rx, &noisy.topology, &noisy.weights).unwrap()
                })
                .collect();
            for (node, w) in state.nodes.iter_mut().zip(ws) {
                node.w = w;
            }
        }
        for (x, y) in a.nodes.iter().zip(&state.nodes) {
            assert_eq!(x.w.as_slice(), y.w.as_slice());
        }
    }

    #[test]
    fn single_node_is_plain_rls() {
        let t = Topology::from_edges(1, &[]).unwrap();
        let net = network(t, SchemeKind::Sequential, 1, 3, 0.0, 0.98);
        let w_o = GroundTruth::new(v(&[1.0, -1.0, 0.5])).unwrap();
        let state = run(&net, &w_o, 0.01, 30, 2);

        let prof = NodeProfile::new(vec![1.0; 3], 0.01).unwrap();
        let mut r = stream(2, 0, Purpose::NodeData, 0);
        let mut s = NodeState::init(3, DEFAULT_DELTA).unwrap();
        for _ in 0..30 {
            let u = draw_regressor(&prof, &mut r);
            let d = draw_measurement(&u, &w_o, 0.01, &mut r);
            s.adapt(&u, d, 0.98).unwrap();
            s.w = s.psi.clone();
        }
        assert_eq!(state.nodes[0].w, s.w);
    }

    #[test]
    fn batch_solve_cases() {
        let one = assemble_batch(
            &[Sample {
                u: v(&[1.0]),
                d: 2.0,
                noise: None,
            }],
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(batch_ls_solve(&one, None).unwrap()[0], 2.0, epsilon = 1e-15);

        // lambda = 1 is ordinary least squares
        let hist: Vec<Sample> = [(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]
            .iter()
            .map(|&(x, c)| Sample {
                u: v(&[x, c]),
                d: 2.0 * x + 1.0 + if x == 2.0 { 0.3 } else { 0.0 },
                noise: None,
            })
            .collect();
        let b = assemble_batch(&hist, 1.0).unwrap();
        let sol = batch_ls_solve(&b, None).unwrap();
        let ols = (b.h.transpose() * &b.h).try_inverse().unwrap() * b.h.transpose() * &b.y;
        assert_abs_diff_eq!(sol, ols, epsilon = 1e-12);

        // underdetermined without regularization
        let b = assemble_batch(&hist[..1], 1.0).unwrap();
        assert!(batch_ls_solve(&b, None).is_err());
        assert!(batch_ls_solve(&b, Some(0.01)).is_ok());
    }

    #[test]
    fn chained_recursion_matches_batch() {
        let (dim, lambda, delta) = (4, 0.95, 0.01);
        let prof = NodeProfile::new(vec![1.0, 0.6, 1.4, 2.0], 0.05).unwrap();
        let w_o = GroundTruth::new(v(&[0.1, 0.2, -0.3, 0.4])).unwrap();
        let mut rng = stream(21, 0, Purpose::NodeData, 0);
        let mut s = NodeState::init(dim, delta).unwrap();
        let mut hist = Vec::new();
        for _ in 0..50 {
            let u = draw_regressor(&prof, &mut rng);
            let d = draw_measurement(&u, &w_o, prof.sigma2_v(), &mut rng);
            s.adapt(&u, d, lambda).unwrap();
            s.w = s.psi.clone();
            hist.push(Sample { u, d, noise: None });
        }
        let batch = assemble_batch(&hist, lambda).unwrap();
        let psi = batch_ls_solve(&batch, Some(delta)).unwrap();
        assert!((psi - &s.psi).amax() < 1e-8);
    }

    #[test]
    fn error_vector_blocks() {
        let w_o = GroundTruth::new(v(&[1.0, 2.0])).unwrap();
        let mut state = NetworkState::init(3, 2, 1.0).unwrap();
        assert_eq!(error_vectors(&state, &w_o).as_slice(), &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        for n in &mut state.nodes {
            n.w = w_o.vector().clone();
        }
        assert!(error_vectors(&state, &w_o).iter().all(|x| *x == 0.0));
        state.nodes[1].w[0] += 0.5;
        assert_eq!(error_vectors(&state, &w_o).as_slice(), &[0.0, 0.0, -0.5, 0.0, 0.0, 0.0]);
    }
}
