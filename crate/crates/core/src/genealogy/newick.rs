//! Newick text for genealogy trees. Leaves are named `X{label}`; lengths use
//! the shortest round-trip decimal form.

use std::fmt::Write;

use super::{GenealogyTree, Node, RootMode};
use crate::error::{Error, Result};

pub fn newick_export(tree: &GenealogyTree) -> String {
    let children = tree.children();
    let mut out = String::new();
    if children[tree.root].is_empty() {
        // a lone leaf is written as a root with one zero-length edge
        let label = tree.nodes[tree.root].leaf_label.unwrap_or(0);
        return format!("(X{label}:0.0);");
    }
    write_node(tree, &children, tree.root, &mut out);
    out.push(';');
    out
}

fn write_node(tree: &GenealogyTree, children: &[Vec<usize>], id: usize, out: &mut String) {
    let node = &tree.nodes[id];
    if children[id].is_empty() {
        let _ = write!(out, "X{}", node.leaf_label.unwrap_or(usize::MAX));
    } else {
        out.push('(');
        for (i, &c) in children[id].iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write_node(tree, children, c, out);
        }
        out.push(')');
    }
    if id != tree.root {
        let _ = write!(out, ":{:?}", tree.edge_length(id));
    }
}

struct Parsed {
    parent: Option<usize>,
    length: f64,
    label: Option<usize>,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    nodes: Vec<Parsed>,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Newick { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn token(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len()
            && !b"(),:;".contains(&self.s[self.pos])
            && !self.s[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("")
    }

    fn subtree(&mut self, parent: Option<usize>) -> Result<usize> {
        let id = self.nodes.len();
        self.nodes.push(Parsed { parent, length: 0.0, label: None });
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                self.subtree(Some(id))?;
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
            // internal labels are ignored
            self.token();
        } else {
            let name = self.token().to_string();
            let label = name
                .strip_prefix('X')
                .and_then(|d| d.parse::<usize>().ok())
                .ok_or_else(|| self.err("leaf names must look like X<index>"))?;
            self.nodes[id].label = Some(label);
        }
        if self.peek() == Some(b':') {
            self.pos += 1;
            let tok = self.token().to_string();
            let len: f64 = tok.parse().map_err(|_| self.err("bad branch length"))?;
            if !(len >= 0.0 && len.is_finite()) {
                return Err(self.err("branch lengths must be finite and nonnegative"));
            }
            self.nodes[id].length = len;
        } else if parent.is_some() {
            return Err(self.err("missing branch length"));
        }
        Ok(id)
    }
}

/// Parses Newick text into a tree with leaves at time 0. A root whose only
/// child has length 0 is collapsed onto that child; a unary root is read as
/// a population-rooted tree.
pub fn newick_parse(text: &str) -> Result<GenealogyTree> {
    let mut p = Parser { s: text.as_bytes(), pos: 0, nodes: Vec::new() };
    p.subtree(None)?;
    if p.peek() != Some(b';') {
        return Err(p.err("expected ';'"));
    }
    p.pos += 1;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    let mut nodes = p.nodes;

    let mut n_children = vec![0usize; nodes.len()];
    for v in &nodes {
        if let Some(q) = v.parent {
            n_children[q] += 1;
        }
    }
    let mut root = 0;
    if n_children[0] == 1 {
        let only = (1..nodes.len()).find(|&i| nodes[i].parent == Some(0)).unwrap();
        if nodes[only].length == 0.0 {
            nodes[only].parent = None;
            root = only;
        }
    }
    let mode = if n_children[root] == 1 { RootMode::PopulationMrca } else { RootMode::SampleMrca };

    // parents precede children in preorder, so one pass accumulates distances
    let mut dist = vec![0.0; nodes.len()];
    for i in 0..nodes.len() {
        if let Some(q) = nodes[i].parent {
            dist[i] = dist[q] + nodes[i].length;
        }
    }
    let kept: Vec<usize> = (0..nodes.len()).filter(|&i| i == root || reaches(&nodes, i, root)).collect();
    let height = kept.iter().filter(|&&i| nodes[i].label.is_some()).map(|&i| dist[i]).fold(0.0, f64::max);
    let mut new_id = vec![usize::MAX; nodes.len()];
    for (k, &i) in kept.iter().enumerate() {
        new_id[i] = k;
    }
    let out: Vec<Node> = kept
        .iter()
        .enumerate()
        .map(|(k, &i)| Node {
            id: k,
            time: if nodes[i].label.is_some() { 0.0 } else { dist[i] - height },
            parent: nodes[i].parent.map(|q| new_id[q]),
            leaf_label: nodes[i].label,
        })
        .collect();
    let tree = GenealogyTree { nodes: out, root: new_id[root], root_mode: mode };
    Ok(tree)
}

fn reaches(nodes: &[Parsed], mut i: usize, root: usize) -> bool {
    while let Some(q) = nodes[i].parent {
        if q == root {
            return true;
        }
        i = q;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genealogy::{build_tree, LeafConfig, ZetaVector};

    #[test]
    fn lone_leaf_round_trip() {
        let c = LeafConfig::from_positions(vec![-1.0, 0.0, 1.0]).unwrap();
        let z = ZetaVector { zetas: vec![0.3, 0.0, 0.2] };
        let t = build_tree(&c, &z, RootMode::SampleMrca).unwrap();
        let s = newick_export(&t);
        assert_eq!(s, "(X0:0.0);");
        let back = newick_parse(&s).unwrap();
        assert_eq!(back.nodes.len(), 1);
        assert_eq!(back.n_leaves(), 1);
    }

    #[test]
    fn parse_errors() {
        assert!(newick_parse("(X0:1.0,X1:1.0)").is_err());
        assert!(newick_parse("(X0:1.0,Y1:1.0);").is_err());
        assert!(newick_parse("(X0:1.0,X1);").is_err());
        assert!(newick_parse("(X0:1.0,X1:-2);").is_err());
        assert!(newick_parse("(X0:1.0,X1:1.0);x").is_err());
    }

    #[test]
    fn simple_cherry() {
        let t = newick_parse(" ( X0:1.5 , X1:1.5 ) ;").unwrap();
        t.check().unwrap();
        assert_eq!(t.height(), 1.5);
        assert_eq!(t.total_length(), 3.0);
        assert_eq!(t.root_mode, RootMode::SampleMrca);
    }
}
