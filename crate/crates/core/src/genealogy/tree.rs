use serde::{Deserialize, Serialize};

use super::{LeafConfig, ZetaVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootMode {
    /// Rooted at the MRCA of the sample.
    SampleMrca,
    /// Rooted at the MRCA of the whole population.
    PopulationMrca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    /// 0 at the leaves, negative below.
    pub time: f64,
    pub parent: Option<usize>,
    pub leaf_label: Option<usize>,
}

/// Rooted tree stored as a parent-pointer node list. Built trees place the
/// leaf at ordered position `k` at node id `k - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenealogyTree {
    pub nodes: Vec<Node>,
    pub root: usize,
    pub root_mode: RootMode,
}

/// Builds the ancestral tree: a branch left of the spine hangs from the first
/// strictly deeper branch on its right at its own depth, a branch right of
/// the spine from the first strictly deeper one on its left. The spine counts
/// as infinitely deep and is cut at the root depth of `mode`.
pub fn build_tree(config: &LeafConfig, zetas: &ZetaVector, mode: RootMode) -> Result<GenealogyTree> {
    config.validate()?;
    zetas.validate(config)?;
    let n = config.n;
    let spine = config.spine_index;
    let z = &zetas.zetas;
    if let Some(k) = (1..=n).find(|&k| k != spine && z[k] <= 0.0) {
        return Err(Error::InvalidConfig(format!("branch {k} has zero depth")));
    }

    // next strictly deeper branch toward the spine, by monotone stack
    let mut target = vec![0usize; n + 1];
    let mut stack = vec![spine];
    for k in (1..spine).rev() {
        while stack.len() > 1 && z[*stack.last().unwrap()] <= z[k] {
            stack.pop();
        }
        target[k] = *stack.last().unwrap();
        stack.push(k);
    }
    stack.truncate(1);
    for k in spine + 1..=n {
        while stack.len() > 1 && z[*stack.last().unwrap()] <= z[k] {
            stack.pop();
        }
        target[k] = *stack.last().unwrap();
        stack.push(k);
    }

    let mut hanging: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for k in (1..=n).filter(|&k| k != spine) {
        hanging[target[k]].push(k);
    }

    let mut nodes: Vec<Node> =
        (1..=n).map(|k| Node { id: k - 1, time: 0.0, parent: None, leaf_label: Some(config.labels[k - 1]) }).collect();
    let mut attach_node = vec![usize::MAX; n + 1];
    let mut bottom = vec![usize::MAX; n + 1];
    for b in 1..=n {
        let mut on_branch = std::mem::take(&mut hanging[b]);
        on_branch.sort_by(|&a, &c| z[a].total_cmp(&z[c]).then(a.cmp(&c)));
        let mut cur = b - 1;
        let mut i = 0;
        while i < on_branch.len() {
            let depth = z[on_branch[i]];
            let id = nodes.len();
            nodes.push(Node { id, time: -depth, parent: None, leaf_label: None });
            nodes[cur].parent = Some(id);
            // equal depths on one branch share a node
            while i < on_branch.len() && z[on_branch[i]] == depth {
                attach_node[on_branch[i]] = id;
                i += 1;
            }
            cur = id;
        }
        bottom[b] = cur;
    }
    for k in (1..=n).filter(|&k| k != spine) {
        nodes[bottom[k]].parent = Some(attach_node[k]);
    }

    let depth = match mode {
        RootMode::SampleMrca => zetas.sample_depth(),
        RootMode::PopulationMrca => zetas.population_depth(),
    };
    let spine_bottom = bottom[spine];
    let bottom_depth = -nodes[spine_bottom].time;
    assert!(depth >= bottom_depth, "root above the deepest spine attachment");
    let root = if depth > bottom_depth {
        let id = nodes.len();
        nodes.push(Node { id, time: -depth, parent: None, leaf_label: None });
        nodes[spine_bottom].parent = Some(id);
        id
    } else {
        spine_bottom
    };

    let tree = GenealogyTree { nodes, root, root_mode: mode };
    debug_assert!(tree.check().is_ok(), "{:?}", tree.check());
    Ok(tree)
}

impl GenealogyTree {
    /// Structural invariants: one root, leaves at time 0, positive edges.
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let roots: Vec<_> = self.nodes.iter().filter(|v| v.parent.is_none()).collect();
        if roots.len() != 1 || roots[0].id != self.root {
            return bad(format!("expected exactly one root, found {}", roots.len()));
        }
        for (i, v) in self.nodes.iter().enumerate() {
            if v.id != i {
                return bad(format!("node {i} carries id {}", v.id));
            }
            if v.leaf_label.is_some() && v.time != 0.0 {
                return bad(format!("leaf {i} is not at time 0"));
            }
            if let Some(p) = v.parent {
                if p >= self.nodes.len() || !(self.nodes[p].time < v.time) {
                    return bad(format!("edge {i} -> {p} has nonpositive length"));
                }
            }
        }
        let children = self.children();
        if let Some(v) = self.nodes.iter().find(|v| v.leaf_label.is_none() && children[v.id].is_empty()) {
            return bad(format!("internal node {} has no children", v.id));
        }
        Ok(())
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|v| v.leaf_label.is_some()).count()
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.nodes.len()];
        for v in &self.nodes {
            if let Some(p) = v.parent {
                ch[p].push(v.id);
            }
        }
        ch
    }

    /// Length of the edge above `id` (0 for the root).
    pub fn edge_length(&self, id: usize) -> f64 {
        match self.nodes[id].parent {
            Some(p) => self.nodes[id].time - self.nodes[p].time,
            None => 0.0,
        }
    }

    pub fn total_length(&self) -> f64 {
        (0..self.nodes.len()).map(|i| self.edge_length(i)).sum()
    }

    /// Depth of the root below the leaves.
    pub fn height(&self) -> f64 {
        -self.nodes[self.root].time
    }

    /// Number of leaves below every node.
    pub fn leaf_counts(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        // children are strictly later in time than parents
        order.sort_by(|&a, &b| self.nodes[b].time.total_cmp(&self.nodes[a].time));
        let mut count: Vec<usize> = self.nodes.iter().map(|v| usize::from(v.leaf_label.is_some())).collect();
        for &i in &order {
            if let Some(p) = self.nodes[i].parent {
                count[p] += count[i];
            }
        }
        count
    }

    /// Entry `k` is the total length of tree points ancestral to exactly `k` leaves.
    pub fn length_by_carrier_count(&self) -> Vec<f64> {
        let counts = self.leaf_counts();
        let mut out = vec![0.0; self.n_leaves() + 1];
        for (i, &c) in counts.iter().enumerate() {
            out[c] += self.edge_length(i);
        }
        out
    }

    /// Node id of the most recent common ancestor of `leaves` (node ids).
    pub fn mrca(&self, leaves: &[usize]) -> Option<usize> {
        let (&first, rest) = leaves.split_first()?;
        let mut path = vec![first];
        while let Some(p) = self.nodes[*path.last().unwrap()].parent {
            path.push(p);
        }
        let mut deepest = 0;
        for &leaf in rest {
            let mut v = leaf;
            let idx = loop {
                if let Some(i) = path.iter().position(|&u| u == v) {
                    break i;
                }
                v = self.nodes[v].parent?;
            };
            deepest = deepest.max(idx);
        }
        Some(path[deepest])
    }

    /// Time to the MRCA of the leaves at the given ordered positions (1-based).
    pub fn tmrca(&self, positions: &[usize]) -> Result<f64> {
        let n = self.n_leaves();
        if positions.is_empty() || positions.iter().any(|&k| k == 0 || k > n) {
            return Err(Error::Index(format!("leaf positions must lie in 1..={n}")));
        }
        let ids: Vec<usize> = positions.iter().map(|k| k - 1).collect();
        let m = self.mrca(&ids).ok_or_else(|| Error::Index("leaves share no ancestor".into()))?;
        Ok(-self.nodes[m].time)
    }

    /// For every non-root edge, the sorted leaf labels below it and its length.
    /// Two trees are isomorphic exactly when these lists (and heights) agree.
    pub fn clade_signature(&self) -> Vec<(Vec<usize>, f64)> {
        let children = self.children();
        let mut labels: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[b].time.total_cmp(&self.nodes[a].time));
        for &i in &order {
            let mut ls: Vec<usize> = self.nodes[i].leaf_label.into_iter().collect();
            for &c in &children[i] {
                ls.extend_from_slice(&labels[c]);
            }
            ls.sort_unstable();
            labels[i] = ls;
        }
        let mut sig: Vec<(Vec<usize>, f64)> = (0..self.nodes.len())
            .filter(|&i| i != self.root)
            .map(|i| (labels[i].clone(), self.edge_length(i)))
            .collect();
        sig.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        sig
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(xs: &[f64]) -> LeafConfig {
        LeafConfig::from_positions(xs.to_vec()).unwrap()
    }

    #[test]
    fn single_leaf_trees() {
        let c = cfg(&[-1.0, 0.0, 2.0]);
        let z = ZetaVector { zetas: vec![0.4, 0.0, 0.9] };
        let t = build_tree(&c, &z, RootMode::SampleMrca).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.root, 0);
        assert_eq!(t.total_length(), 0.0);
        let t = build_tree(&c, &z, RootMode::PopulationMrca).unwrap();
        assert_eq!(t.nodes.len(), 2);
        assert_eq!(t.total_length(), 0.9);
    }

    #[test]
    fn five_leaf_attachment_pattern() {
        // spine at the third position; ζ1 < ζ2 so branch 1 hangs from branch 2
        let c = cfg(&[-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let z = ZetaVector { zetas: vec![5.0, 0.5, 1.5, 0.0, 1.2, 2.0, 4.0] };
        let t = build_tree(&c, &z, RootMode::SampleMrca).unwrap();
        t.check().unwrap();
        let parent_time = |leaf: usize| t.nodes[t.nodes[leaf].parent.unwrap()].time;
        // leaf 1 joins branch 2 at depth 0.5
        assert_eq!(t.mrca(&[0, 1]), t.nodes[0].parent);
        assert_eq!(parent_time(0), -0.5);
        // branches 2, 4, 5 reach the spine at their own depths
        assert_eq!(t.tmrca(&[2, 3]).unwrap(), 1.5);
        assert_eq!(t.tmrca(&[3, 4]).unwrap(), 1.2);
        assert_eq!(t.tmrca(&[3, 5]).unwrap(), 2.0);
        assert_eq!(t.height(), 2.0);
        assert_eq!(t.n_leaves(), 5);
    }

    #[test]
    fn equal_depths_share_a_node() {
        let c = cfg(&[-3.0, -2.0, -1.0, 0.0, 1.0]);
        let z = ZetaVector { zetas: vec![1.0, 0.7, 0.7, 0.0, 1.0] };
        let t = build_tree(&c, &z, RootMode::SampleMrca).unwrap();
        t.check().unwrap();
        let children = t.children();
        assert_eq!(children[t.root].len(), 3);
        assert_eq!(t.root, t.nodes[0].parent.unwrap());
    }

    #[test]
    fn zero_depth_branch_is_rejected() {
        let c = cfg(&[-3.0, -2.0, 0.0, 1.0]);
        let z = ZetaVector { zetas: vec![1.0, 0.0, 0.0, 1.0] };
        assert!(build_tree(&c, &z, RootMode::SampleMrca).is_err());
    }

    #[test]
    fn tmrca_index_errors() {
        let c = cfg(&[-1.0, 0.0, 1.0, 2.0]);
        let z = ZetaVector { zetas: vec![1.0, 0.0, 0.3, 1.0] };
        let t = build_tree(&c, &z, RootMode::SampleMrca).unwrap();
        assert!(t.tmrca(&[]).is_err());
        assert!(t.tmrca(&[0, 1]).is_err());
        assert!(t.tmrca(&[1, 3]).is_err());
        assert_eq!(t.tmrca(&[1, 2]).unwrap(), 0.3);
    }
}
