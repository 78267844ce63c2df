//! First and second moments of the random network transition matrix.
//!
//! The stacked error recursion is driven by an `NM x NM` matrix `B` made of
//! `N x N` blocks, each an `M x M` *diagonal* matrix:
//!
//! ```text
//! B[p,p] = I - sum_{l in N_p \ p} a_lp K_l
//! B[p,q] = a_qp K_q            for q in N_p \ p
//! ```
//!
//! Because every block is diagonal, entry `t` of one node only ever couples to
//! entry `t` of other nodes. Write `b_t` for the `N x N` scalar matrix holding
//! the `t`-th diagonal of every block. Then `E[B' (x) B']` splits into `M^2`
//! independent `N^2 x N^2` blocks `E[b_t' (x) b_s']`, one per entry pair
//! `(t, s)`. [`SecondMoment`] stores exactly those blocks.
//!
//! Global indexing: stacked vectors are node-major, so entry `t` of node `p`
//! sits at `p M + t`. Inside block `(t, s)`, the local row/column index of the
//! node pair `(p, q)` is `p N + q`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::CombinationMatrix;
use crate::selection::{transmission_probability, SchemeKind};

/// Largest `N M` the theory accepts.
pub const MAX_STACKED_DIM: usize = 128;
/// Largest number of stored second-moment entries (`M^2 N^4`).
pub const MAX_SECOND_MOMENT_ENTRIES: usize = 1 << 26;
/// Largest `N M` for which the dense `(NM)^2 x (NM)^2` matrix may be formed.
pub const MAX_DENSE_STACKED_DIM: usize = 64;

/// `E[kappa_{t,p} kappa_{s,q}]`: probability that node `p` transmits entry `t`
/// and node `q` transmits entry `s` at the same iteration.
///
/// Within one node any two distinct entries are co-selected with probability
/// `rho (L - 1) / (M - 1)`. Under the sequential scheme every node shares the
/// same pattern, so the within-node value also applies across nodes. Under the
/// random schemes nodes draw independently, which gives `rho^2`.
pub fn pair_moment(
    kind: SchemeKind,
    t: usize,
    p: usize,
    s: usize,
    q: usize,
    entries: usize,
    dim: usize,
) -> f64 {
    let rho = entries as f64 / dim as f64;
    if entries == dim {
        return 1.0;
    }
    if p == q || kind.shares_pattern_across_nodes() {
        if t == s {
            rho
        } else {
            rho * (entries - 1) as f64 / (dim - 1) as f64
        }
    } else {
        rho * rho
    }
}

/// `E[kappa_{t,p} K_q]` as an `M x M` diagonal matrix.
pub fn selection_second_moment(
    kind: SchemeKind,
    t: usize,
    p: usize,
    q: usize,
    entries: usize,
    dim: usize,
) -> Result<DMatrix<f64>> {
    transmission_probability(entries, dim)?;
    if t >= dim {
        return Err(Error::config(format!("entry index {t} outside 0..{dim}")));
    }
    Ok(DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            pair_moment(kind, t, p, r, q, entries, dim)
        } else {
            0.0
        }
    }))
}

/// `Q = E[B]`. Every block is a multiple of `I_M`:
/// `(1 - rho sum_{l != p} a_lp)` on the diagonal and `rho a_qp` elsewhere.
pub fn mean_matrix_q(weights: &CombinationMatrix, dim: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::config(format!("transmission probability {rho} outside (0, 1]")));
    }
    let n = weights.n_nodes();
    let mut q = DMatrix::zeros(n * dim, n * dim);
    for p in 0..n {
        for r in 0..n {
            let value = if r == p {
                let outgoing: f64 = (0..n).filter(|&l| l != p).map(|l| weights.weight(l, p)).sum();
                1.0 - rho * outgoing
            } else {
                rho * weights.weight(r, p)
            };
            if value != 0.0 {
                for t in 0..dim {
                    q[(p * dim + t, r * dim + t)] = value;
                }
            }
        }
    }
    Ok(q)
}

/// A scalar entry of `b_t` written as `constant + sum_l coeff_l kappa_{t,l}`.
#[derive(Debug, Clone)]
struct AffineSelection {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

/// Nonzero entries `(p, q)` of `b_t` as affine forms in the selection variables.
fn transition_forms(weights: &CombinationMatrix) -> Vec<(usize, usize, AffineSelection)> {
    let n = weights.n_nodes();
    let mut out = Vec::new();
    for p in 0..n {
        for q in 0..n {
            if p == q {
                let terms = (0..n)
                    .filter(|&l| l != p && weights.weight(l, p) != 0.0)
                    .map(|l| (l, -weights.weight(l, p)))
                    .collect();
                out.push((p, q, AffineSelection { constant: 1.0, terms }));
            } else if weights.weight(q, p) != 0.0 {
                let terms = vec![(q, weights.weight(q, p))];
                out.push((p, q, AffineSelection { constant: 0.0, terms }));
            }
        }
    }
    out
}

/// `E[B' (x) B']` in block form. See the module docs for the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMoment {
    n_nodes: usize,
    dim: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl SecondMoment {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Block for the entry pair `(t, s)`, of size `N^2 x N^2`.
    pub fn block(&self, t: usize, s: usize) -> &DMatrix<f64> {
        &self.blocks[t * self.dim + s]
    }

    pub fn blocks(&self) -> impl Iterator<Item = ((usize, usize), &DMatrix<f64>)> {
        let dim = self.dim;
        self.blocks
            .iter()
            .enumerate()
            .map(move |(i, b)| ((i / dim, i % dim), b))
    }

    /// Side length of the full matrix, `(NM)^2`.
    pub fn full_size(&self) -> usize {
        let nm = self.n_nodes * self.dim;
        nm * nm
    }

    /// Entry of the full `(NM)^2 x (NM)^2` matrix.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let nm = self.n_nodes * self.dim;
        let (a, b) = (row / nm, row % nm);
        let (c, d) = (col / nm, col % nm);
        let (qa, t) = (a / self.dim, a % self.dim);
        let (qb, s) = (b / self.dim, b % self.dim);
        let (pc, t2) = (c / self.dim, c % self.dim);
        let (pd, s2) = (d / self.dim, d % self.dim);
        if t != t2 || s != s2 {
            return 0.0;
        }
        let n = self.n_nodes;
        self.block(t, s)[(qa * n + qb, pc * n + pd)]
    }

    /// Largest deviation of a column sum from one, over all blocks.
    pub fn max_column_sum_error(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.column_iter().map(|c| (c.sum() - 1.0).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.blocks.iter().map(|b| b.min()).fold(f64::INFINITY, f64::min)
    }

    /// Assembles the full dense matrix. Only allowed for `N M <= 64`.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let nm = self.n_nodes * self.dim;
        if nm > MAX_DENSE_STACKED_DIM {
            return Err(Error::Resource(format!(
                "dense second moment needs N M <= {MAX_DENSE_STACKED_DIM}, got {nm}"
            )));
        }
        let size = nm * nm;
        let n = self.n_nodes;
        let mut out = DMatrix::zeros(size, size);
        for ((t, s), block) in self.blocks() {
            for i in 0..n * n {
                let (qa, qb) = (i / n, i % n);
                let row = (qa * self.dim + t) * nm + qb * self.dim + s;
                for j in 0..n * n {
                    let v = block[(i, j)];
                    if v != 0.0 {
                        let (pc, pd) = (j / n, j % n);
                        let col = (pc * self.dim + t) * nm + pd * self.dim + s;
                        out[(row, col)] = v;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Exact `E[B' (x) B']` from the first and pairwise selection moments.
pub fn second_moment_phi(
    weights: &CombinationMatrix,
    kind: SchemeKind,
    entries: usize,
    dim: usize,
) -> Result<SecondMoment> {
    let rho = transmission_probability(entries, dim)?;
    let n = weights.n_nodes();
    check_size(n, dim)?;

    let forms = transition_forms(weights);
    let mut blocks = Vec::with_capacity(dim * dim);
    for t in 0..dim {
        for s in 0..dim {
            let mut block = DMatrix::zeros(n * n, n * n);
            // block[(qa, qb), (pc, pd)] = E[b_t(pc, qa) b_s(pd, qb)]
            for (pc, qa, f) in &forms {
                for (pd, qb, g) in &forms {
                    let mut v = f.constant * g.constant;
                    let f_sum: f64 = f.terms.iter().map(|(_, c)| c).sum();
                    let g_sum: f64 = g.terms.iter().map(|(_, c)| c).sum();
                    v += f.constant * rho * g_sum + g.constant * rho * f_sum;
                    for &(l, c) in &f.terms {
                        for &(m, d) in &g.terms {
                            v += c * d * pair_moment(kind, t, l, s, m, entries, dim);
                        }
                    }
                    block[(qa * n + qb, pc * n + pd)] = v;
                }
            }
            blocks.push(block);
        }
    }
    Ok(SecondMoment {
        n_nodes: n,
        dim,
        blocks,
    })
}

pub(crate) fn check_size(n: usize, dim: usize) -> Result<()> {
    let nm = n * dim;
    if nm > MAX_STACKED_DIM {
        return Err(Error::Resource(format!(
            "N M = {nm} exceeds the theory bound {MAX_STACKED_DIM}"
        )));
    }
    let stored = dim * dim * n.pow(4);
    if stored > MAX_SECOND_MOMENT_ENTRIES {
        return Err(Error::Resource(format!(
            "second moment would hold {stored} entries (limit {MAX_SECOND_MOMENT_ENTRIES})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_uniform_combination, Topology};
    use approx::assert_abs_diff_eq;

    fn pair_network() -> CombinationMatrix {
        build_uniform_combination(&Topology::from_edges(2, &[(0, 1)]).unwrap())
    }

    #[test]
    fn q_two_nodes() {
        let q = mean_matrix_q(&pair_network(), 2, 0.5).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.75, 0.0, 0.25, 0.0, //
                0.0, 0.75, 0.0, 0.25, //
                0.25, 0.0, 0.75, 0.0, //
                0.0, 0.25, 0.0, 0.75,
            ],
        );
        assert_abs_diff_eq!(q, expected, epsilon = 1e-15);

        // enumerate the two equally likely selections of the neighbor (M = 2, L = 1)
        let b = |k: [f64; 2]| {
            let mut m = DMatrix::zeros(4, 4);
            for t in 0..2 {
                m[(t, t)] = 1.0 - 0.5 * k[t];
                m[(t, 2 + t)] = 0.5 * k[t];
                m[(2 + t, 2 + t)] = 1.0 - 0.5 * k[t];
                m[(2 + t, t)] = 0.5 * k[t];
            }
            m
        };
        let avg = (b([1.0, 0.0]) + b([0.0, 1.0])) * 0.5;
        assert_abs_diff_eq!(q, avg, epsilon = 1e-15);
    }

    #[test]
    fn q_full_diffusion_is_a_transpose_kron_identity() {
        let t = Topology::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let a = build_uniform_combination(&t);
        let q = mean_matrix_q(&a, 2, 1.0).unwrap();
        for p in 0..3 {
            for r in 0..3 {
                assert_abs_diff_eq!(q[(p * 2, r * 2)], a.weight(r, p), epsilon = 1e-15);
                assert_abs_diff_eq!(q[(p * 2 + 1, r * 2 + 1)], a.weight(r, p), epsilon = 1e-15);
                assert_eq!(q[(p * 2, r * 2 + 1)], 0.0);
            }
        }
    }

    #[test]
    fn selection_moments() {
        let m = selection_second_moment(SchemeKind::Stochastic, 0, 1, 1, 1, 2).unwrap();
        assert_abs_diff_eq!(m, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]), epsilon = 1e-15);
        let m = selection_second_moment(SchemeKind::Sequential, 0, 0, 1, 1, 2).unwrap();
        assert_abs_diff_eq!(m, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]), epsilon = 1e-15);
        let m = selection_second_moment(SchemeKind::Stochastic, 1, 0, 1, 1, 2).unwrap();
        assert_abs_diff_eq!(m, DMatrix::identity(2, 2) * 0.25, epsilon = 1e-15);
        for kind in [SchemeKind::Sequential, SchemeKind::Stochastic] {
            for (p, q) in [(0, 0), (0, 1)] {
                let m = selection_second_moment(kind, 2, p, q, 4, 4).unwrap();
                assert_eq!(m, DMatrix::identity(4, 4));
            }
        }
        assert_eq!(selection_second_moment(SchemeKind::Stochastic, 0, 0, 0, 1, 1).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn selection_moment_formula_matches_enumeration() {
        // same node: enumerate all L-subsets of M entries uniformly
        fn subsets(m: usize, l: usize) -> Vec<Vec<usize>> {
            (0u32..(1 << m))
                .filter(|b| b.count_ones() as usize == l)
                .map(|b| (0..m).filter(|i| b >> i & 1 == 1).collect())
                .collect()
        }
        for (m, l) in [(4, 2), (5, 3), (6, 1), (3, 2)] {
            let all = subsets(m, l);
            for t in 0..m {
                let formula = selection_second_moment(SchemeKind::Stochastic, t, 0, 0, l, m).unwrap();
                for s in 0..m {
                    let count = all.iter().filter(|x| x.contains(&t) && x.contains(&s)).count();
                    let exact = count as f64 / all.len() as f64;
                    assert_abs_diff_eq!(formula[(s, s)], exact, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn phi_full_diffusion_is_deterministic_kron() {
        let t = Topology::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let a = build_uniform_combination(&t);
        let phi = second_moment_phi(&a, SchemeKind::Stochastic, 2, 2).unwrap();
        let b = mean_matrix_q(&a, 2, 1.0).unwrap();
        let bt = b.transpose();
        let kron = bt.kronecker(&bt);
        assert_abs_diff_eq!(phi.to_dense().unwrap(), kron, epsilon = 1e-15);
    }

    #[test]
    fn dense_and_entry_views_agree() {
        let t = Topology::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let a = build_uniform_combination(&t);
        let phi = second_moment_phi(&a, SchemeKind::Sequential, 1, 3).unwrap();
        let dense = phi.to_dense().unwrap();
        for r in (0..81).step_by(7) {
            for c in 0..81 {
                assert_eq!(dense[(r, c)], phi.entry(r, c));
            }
        }
        let col_err = dense
            .column_iter()
            .map(|c| (c.sum() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(col_err < 1e-12);
    }

    #[test]
    fn size_bounds() {
        let t = Topology::from_edges(2, &[(0, 1)]).unwrap();
        let a = build_uniform_combination(&t);
        assert!(matches!(second_moment_phi(&a, SchemeKind::Stochastic, 1, 65), Err(Error::Resource(_))));
        let phi = second_moment_phi(&a, SchemeKind::Stochastic, 1, 40).unwrap();
        assert!(matches!(phi.to_dense(), Err(Error::Resource(_))));
    }
}
