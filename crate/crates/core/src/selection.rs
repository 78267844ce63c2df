//! Entry-selection matrices for partial diffusion.
//!
//! At every iteration each node transmits `L` of the `M` entries of its
//! intermediate estimate. Which entries go out is described by a diagonal 0/1
//! matrix, stored here as its diagonal.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the transmitted entries are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Round-robin over a fixed partition, identical at every node.
    Sequential,
    /// Each node draws one partition subset uniformly at random per iteration.
    Stochastic,
    /// Each node draws a uniformly random `L`-subset of the entries.
    UniformSubset,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Sequential => "sequential",
            SchemeKind::Stochastic => "stochastic",
            SchemeKind::UniformSubset => "uniform-subset",
        }
    }

    /// Whether all nodes transmit the same entries at a given iteration.
    pub fn shares_pattern_across_nodes(self) -> bool {
        matches!(self, SchemeKind::Sequential)
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(SchemeKind::Sequential),
            "stochastic" => Ok(SchemeKind::Stochastic),
            "uniform-subset" => Ok(SchemeKind::UniformSubset),
            other => Err(Error::config(format!("unknown selection scheme '{other}'"))),
        }
    }
}

/// Disjoint subsets of `0..M` covering every entry, each of size `1..=L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    subsets: Vec<Vec<usize>>,
}

impl Partition {
    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    /// Number of subsets, `ceil(M / L)`.
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }
}

fn check_entries(entries: usize, dim: usize) -> Result<()> {
    if entries == 0 || entries > dim {
        return Err(Error::config(format!(
            "number of transmitted entries L = {entries} must lie in 1..={dim}"
        )));
    }
    Ok(())
}

/// Canonical contiguous partition `{0..L}, {L..2L}, ...`; the last subset may
/// be smaller.
pub fn build_partition(dim: usize, entries: usize) -> Result<Partition> {
    check_entries(entries, dim)?;
    let subsets = (0..dim)
        .step_by(entries)
        .map(|start| (start..(start + entries).min(dim)).collect())
        .collect();
    Ok(Partition { subsets })
}

/// Marginal probability that a given entry is transmitted, `L / M`.
pub fn transmission_probability(entries: usize, dim: usize) -> Result<f64> {
    check_entries(entries, dim)?;
    Ok(entries as f64 / dim as f64)
}

/// Diagonal of an entry-selection matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionMatrix {
    diag: Vec<bool>,
}

impl SelectionMatrix {
    pub fn from_indices(dim: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut diag = vec![false; dim];
        for i in indices {
            diag[i] = true;
        }
        SelectionMatrix { diag }
    }

    pub fn from_diag(diag: Vec<bool>) -> Self {
        SelectionMatrix { diag }
    }

    pub fn full(dim: usize) -> Self {
        SelectionMatrix {
            diag: vec![true; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    #[inline]
    pub fn is_selected(&self, entry: usize) -> bool {
        self.diag[entry]
    }

    pub fn count(&self) -> usize {
        self.diag.iter().filter(|&&b| b).count()
    }

    pub fn diag(&self) -> &[bool] {
        &self.diag
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.diag.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// A selection rule for a fixed `(L, M)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionScheme {
    kind: SchemeKind,
    entries: usize,
    dim: usize,
    partition: Partition,
    phase: usize,
}

impl SelectionScheme {
    pub fn new(kind: SchemeKind, entries: usize, dim: usize) -> Result<Self> {
        let partition = build_partition(dim, entries)?;
        Ok(SelectionScheme {
            kind,
            entries,
            dim,
            partition,
            phase: 0,
        })
    }

    /// Shifts the sequential schedule by `phase` iterations. Other kinds are
    /// unaffected.
    pub fn with_phase(mut self, phase: usize) -> Self {
        self.phase = phase % self.partition.len();
        self
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn entries(&self) -> usize {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn transmission_probability(&self) -> f64 {
        self.entries as f64 / self.dim as f64
    }

    /// Whether every partition subset has exactly `L` entries.
    pub fn is_balanced(&self) -> bool {
        self.dim.is_multiple_of(self.entries)
    }

    /// Entries node `node` transmits at `iteration`. The result depends only on
    /// the scheme, the iteration and the draws taken from `rng`; the sequential
    /// rule ignores both `node` and `rng`.
    pub fn select<R: Rng>(&self, _node: usize, iteration: u64, rng: &mut R) -> SelectionMatrix {
        match self.kind {
            SchemeKind::Sequential => {
                let b = self.partition.len() as u64;
                let k = ((iteration % b) as usize + self.phase) % self.partition.len();
                SelectionMatrix::from_indices(self.dim, self.partition.subsets[k].iter().copied())
            }
            SchemeKind::Stochastic => {
                let k = rng.random_range(0..self.partition.len());
                SelectionMatrix::from_indices(self.dim, self.partition.subsets[k].iter().copied())
            }
            SchemeKind::UniformSubset => {
                let picked = index::sample(rng, self.dim, self.entries);
                SelectionMatrix::from_indices(self.dim, picked)
            }
        }
    }
}
