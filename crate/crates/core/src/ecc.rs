//! Finite disjointness constraints for continuous candidate groups via a
//! greedy edge clique cover of the group intersection graph.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lp::LpRow;
use crate::types::{CandidateGroup, GroupId};

/// Undirected simple graph on group ids. Vertices are kept sorted by id and
/// `adjacency[i]` lists the neighbours of vertex `i` in increasing order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntersectionGraph {
    pub vertices: Vec<GroupId>,
    pub adjacency: Vec<Vec<usize>>,
}

impl IntersectionGraph {
    /// Graph from explicit vertex ids and id pairs. Self-loops are rejected,
    /// duplicate edges are merged.
    pub fn from_edges(vertices: &[GroupId], edges: &[(GroupId, GroupId)]) -> Result<Self> {
        let mut ids = vertices.to_vec();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate vertex id");
        }
        let pos: HashMap<GroupId, usize> = ids.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let mut adjacency = vec![Vec::new(); ids.len()];
        for &(a, b) in edges {
            let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) else {
                return invalid(format!("edge ({a}, {b}) references an unknown vertex"));
            };
            if i == j {
                return invalid(format!("self-loop on {a}"));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(IntersectionGraph { vertices: ids, adjacency })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Edges as vertex-index pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_edges());
        for (i, adj) in self.adjacency.iter().enumerate() {
            out.extend(adj.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n_vertices();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut k = 0;
            while k < comp.len() {
                for &j in &self.adjacency[comp[k]] {
                    if !seen[j] {
                        seen[j] = true;
                        comp.push(j);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Pairwise overlap graph of the groups' regions. All regions must be of the
/// same kind (all index sets or all continuous shapes).
pub fn build_intersection_graph(groups: &[CandidateGroup]) -> Result<IntersectionGraph> {
    if let Some(first) = groups.first() {
        let discrete = first.region.is_discrete();
        if groups.iter().any(|g| g.region.is_discrete() != discrete) {
            return invalid("cannot mix discrete and continuous groups in one intersection graph");
        }
    }
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|&i| groups[i].id);
    if order.windows(2).any(|w| groups[w[0]].id == groups[w[1]].id) {
        return invalid("duplicate group id");
    }
    let regions: Vec<_> = order.iter().map(|&i| &groups[i].region).collect();
    let upper: Vec<Vec<usize>> = (0..regions.len())
        .into_par_iter()
        .map(|i| -> Result<Vec<usize>> {
            let mut adj = Vec::new();
            for j in i + 1..regions.len() {
                if regions[i].overlaps(regions[j])? {
                    adj.push(j);
                }
            }
            Ok(adj)
        })
        .collect::<Result<_>>()?;
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); regions.len()];
    for (i, adj) in upper.iter().enumerate() {
        for &j in adj {
            adjacency[j].push(i);
        }
    }
    for (i, adj) in upper.into_iter().enumerate() {
        adjacency[i].extend(adj);
    }
    Ok(IntersectionGraph { vertices: order.iter().map(|&i| groups[i].id).collect(), adjacency })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CliqueCover {
    /// Each clique as sorted group ids.
    pub cliques: Vec<Vec<GroupId>>,
    /// Elementary operations spent (adjacency scans and degree updates).
    pub operations: u64,
}

/// Greedy edge clique cover. Uncovered edges are visited in lexicographic
/// order; each one seeds a clique that is grown by the common neighbour with
/// the most uncovered incident edges (ties to the lowest id). Components are
/// processed independently.
pub fn edge_clique_cover(graph: &IntersectionGraph) -> CliqueCover {
    let parts: Vec<(Vec<Vec<usize>>, u64)> =
        graph.components().into_par_iter().filter(|c| c.len() > 1).map(|c| cover_component(graph, &c)).collect();
    let mut out = CliqueCover::default();
    for (cliques, ops) in parts {
        out.operations += ops;
        out.cliques.extend(cliques.into_iter().map(|c| c.into_iter().map(|i| graph.vertices[i]).collect()));
    }
    out
}

fn cover_component(graph: &IntersectionGraph, comp: &[usize]) -> (Vec<Vec<usize>>, u64) {
    let adj = &graph.adjacency;
    // covered[i][k] refers to the edge (i, adj[i][k])
    let mut covered: HashMap<usize, Vec<bool>> = comp.iter().map(|&i| (i, vec![false; adj[i].len()])).collect();
    let mut residual: HashMap<usize, usize> = comp.iter().map(|&i| (i, adj[i].len())).collect();
    let mut ops = 0u64;
    let mut cliques = Vec::new();
    for &u in comp {
        for (ku, &v) in adj[u].iter().enumerate() {
            if v < u || covered[&u][ku] {
                continue;
            }
            let mut clique = vec![u, v];
            let mut cand = intersect(&adj[u], &adj[v], &mut ops);
            while !cand.is_empty() {
                let mut best = cand[0];
                for &w in &cand[1..] {
                    ops += 1;
                    if residual[&w] > residual[&best] {
                        best = w;
                    }
                }
                clique.push(best);
                cand = intersect(&cand, &adj[best], &mut ops);
            }
            clique.sort_unstable();
            for (a, &x) in clique.iter().enumerate() {
                for &y in &clique[a + 1..] {
                    let kx = adj[x].binary_search(&y).unwrap();
                    ops += 1;
                    if !covered[&x][kx] {
                        let ky = adj[y].binary_search(&x).unwrap();
                        covered.get_mut(&x).unwrap()[kx] = true;
                        covered.get_mut(&y).unwrap()[ky] = true;
                        *residual.get_mut(&x).unwrap() -= 1;
                        *residual.get_mut(&y).unwrap() -= 1;
                    }
                }
            }
            cliques.push(clique);
        }
    }
    (cliques, ops)
}

fn intersect(a: &[usize], b: &[usize], ops: &mut u64) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        *ops += 1;
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Whether every edge lies in some clique and every clique is complete.
pub fn validate_cover(graph: &IntersectionGraph, cliques: &[Vec<GroupId>]) -> Result<()> {
    let pos: HashMap<GroupId, usize> = graph.vertices.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let mut covered = std::collections::HashSet::new();
    for c in cliques {
        let mut ix = Vec::with_capacity(c.len());
        for g in c {
            ix.push(*pos.get(g).ok_or_else(|| crate::Error::Validation(format!("unknown id {g} in cover")))?);
        }
        for (a, &x) in ix.iter().enumerate() {
            for &y in &ix[a + 1..] {
                if !graph.has_edge(x, y) {
                    return invalid(format!("clique contains non-adjacent {} and {}", graph.vertices[x], graph.vertices[y]));
                }
                covered.insert((x.min(y), x.max(y)));
            }
        }
    }
    for e in graph.edges() {
        if !covered.contains(&e) {
            return invalid(format!("edge ({}, {}) not covered", graph.vertices[e.0], graph.vertices[e.1]));
        }
    }
    Ok(())
}

/// One row `sum_{G in C} x_G <= 1` per clique, with variables indexed by
/// position in `groups`.
pub fn clique_constraints(cliques: &[Vec<GroupId>], groups: &[CandidateGroup]) -> Result<Vec<LpRow>> {
    let pos: HashMap<GroupId, usize> = groups.iter().enumerate().map(|(i, g)| (g.id, i)).collect();
    cliques
        .iter()
        .map(|c| {
            let coeffs = c
                .iter()
                .map(|g| pos.get(g).map(|&i| (i, 1.0)).ok_or_else(|| crate::Error::Validation(format!("unknown id {g} in clique"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(LpRow::new(coeffs, 1.0))
        })
        .collect()
}

/// Cliques as whitespace-separated id lists, one per line.
pub fn cliques_to_lines(cliques: &[Vec<GroupId>]) -> String {
    let mut s = String::new();
    for c in cliques {
        let line: Vec<String> = c.iter().map(|g| g.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}
