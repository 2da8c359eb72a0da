use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::GenealogyTree;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationAtom {
    /// Child node of the edge carrying the mutation.
    pub edge: usize,
    /// Distance below the child node, in `[0, edge length)`.
    pub depth: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MutationOverlay {
    pub atoms: Vec<MutationAtom>,
}

/// Poisson(μ · length) mutations on every edge, uniformly placed.
pub fn drop_mutations<R: Rng + ?Sized>(tree: &GenealogyTree, params: &ModelParams, rng: &mut R) -> MutationOverlay {
    let mut atoms = Vec::new();
    if params.mu == 0.0 {
        return MutationOverlay { atoms };
    }
    for edge in 0..tree.nodes.len() {
        let len = tree.edge_length(edge);
        if len <= 0.0 {
            continue;
        }
        let count = match Poisson::new(params.mu * len) {
            Ok(p) => p.sample(rng) as u64,
            Err(_) => 0,
        };
        for _ in 0..count {
            atoms.push(MutationAtom { edge, depth: len * rng.random::<f64>() });
        }
    }
    MutationOverlay { atoms }
}

/// Number of sampled leaves carrying each mutation.
pub fn leafset_counts(tree: &GenealogyTree, overlay: &MutationOverlay) -> Vec<usize> {
    let below = tree.leaf_counts();
    overlay.atoms.iter().map(|a| below[a.edge]).collect()
}

/// Histogram of carrier counts over `0..=n`.
pub fn carrier_histogram(counts: &[usize], n: usize) -> Vec<u64> {
    let mut h = vec![0u64; n + 1];
    for &c in counts {
        h[c.min(n)] += 1;
    }
    h
}
