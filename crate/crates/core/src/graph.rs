//! Directed labeled graphs with internal and boundary vertices, orientation
//! classes, and the subgraph/quotient constructions used by the coalgebra.
//!
//! An orientation class is determined by a labeled graph together with the
//! concatenated sequence of its edges (per-vertex out-edge lists in vertex
//! order). Every relabeling of internal vertices or reordering of out-edges
//! induces a permutation of that sequence; its parity is the sign relating the
//! two representatives.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::perm::{parity_of, permutations};

/// Target of an edge. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Internal(usize),
    Boundary(usize),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Internal(i) => write!(f, "v{}", i + 1),
            Target::Boundary(j) => write!(f, "b{}", j + 1),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge from vertex v{from} points to missing vertex {target}")]
    DanglingTarget { from: usize, target: String },
    #[error("graph has {got} out-edge lists but n = {n}")]
    VertexCount { n: usize, got: usize },
    #[error("edge {0} is not an internal edge")]
    NotInternalEdge(usize),
    #[error("edge index {index} out of range ({edges} edges)")]
    EdgeOutOfRange { index: usize, edges: usize },
    #[error("invalid vertex subset: {0}")]
    InvalidSubset(String),
}

/// A directed graph with `n` internal vertices and `m` ordered boundary
/// vertices. Only internal vertices have outgoing edges.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedGraph {
    n: usize,
    m: usize,
    out: Vec<Vec<Target>>,
}

impl DirectedGraph {
    pub fn new(n: usize, m: usize, out: Vec<Vec<Target>>) -> Result<Self, GraphError> {
        if out.len() != n {
            return Err(GraphError::VertexCount { n, got: out.len() });
        }
        for (v, targets) in out.iter().enumerate() {
            for t in targets {
                let ok = match *t {
                    Target::Internal(i) => i < n,
                    Target::Boundary(j) => j < m,
                };
                if !ok {
                    return Err(GraphError::DanglingTarget {
                        from: v + 1,
                        target: t.to_string(),
                    });
                }
            }
        }
        Ok(DirectedGraph { n, m, out })
    }

    pub(crate) fn from_parts_unchecked(n: usize, m: usize, out: Vec<Vec<Target>>) -> Self {
        debug_assert_eq!(out.len(), n);
        DirectedGraph { n, m, out }
    }

    /// The empty graph, the unit of the algebra.
    pub fn empty() -> Self {
        DirectedGraph {
            n: 0,
            m: 0,
            out: Vec::new(),
        }
    }

    /// Edgeless graph on `m` boundary vertices.
    pub fn boundary_only(m: usize) -> Self {
        DirectedGraph {
            n: 0,
            m,
            out: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn out_edges(&self) -> &[Vec<Target>] {
        &self.out
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out[v].len()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.out.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn is_empty_graph(&self) -> bool {
        self.n == 0 && self.m == 0
    }

    /// Global edge sequence as (source, target) pairs.
    pub fn edges(&self) -> Vec<(usize, Target)> {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(v, ts)| ts.iter().map(move |t| (v, *t)))
            .collect()
    }

    pub fn edge(&self, index: usize) -> Result<(usize, Target), GraphError> {
        let edges = self.edge_count();
        let mut k = index;
        for (v, ts) in self.out.iter().enumerate() {
            if k < ts.len() {
                return Ok((v, ts[k]));
            }
            k -= ts.len();
        }
        Err(GraphError::EdgeOutOfRange { index, edges })
    }

    /// Number of edges minus `2n + m - 2`.
    pub fn excess(&self) -> i64 {
        self.edge_count() as i64 - (2 * self.n as i64 + self.m as i64 - 2)
    }

    /// Canonical key string: `n,m;[t11 t12|t21 ...]`.
    pub fn key(&self) -> String {
        let body: Vec<String> = self
            .out
            .iter()
            .map(|ts| ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        format!("{},{};[{}]", self.n, self.m, body.join("|"))
    }

    /// Parses a key produced by [`DirectedGraph::key`].
    pub fn from_key(key: &str) -> Result<Self, String> {
        let (head, body) = key.split_once(';').ok_or_else(|| format!("bad graph key `{key}`"))?;
        let (n, m) = head.split_once(',').ok_or_else(|| format!("bad graph key `{key}`"))?;
        let n: usize = n.trim().parse().map_err(|_| format!("bad n in key `{key}`"))?;
        let m: usize = m.trim().parse().map_err(|_| format!("bad m in key `{key}`"))?;
        let body = body
            .trim()
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| format!("bad edge list in key `{key}`"))?;
        let mut out = Vec::new();
        if n > 0 {
            for part in body.split('|') {
                let mut ts = Vec::new();
                for tok in part.split_whitespace() {
                    ts.push(parse_target(tok)?);
                }
                out.push(ts);
            }
        } else if !body.trim().is_empty() {
            return Err(format!("key `{key}` has edges but no internal vertices"));
        }
        DirectedGraph::new(n, m, out).map_err(|e| e.to_string())
    }

    /// Applies the internal relabeling `perm` (old index -> new index) and
    /// sorts every out-edge list. Returns the new graph and the parity of the
    /// induced permutation of the global edge sequence.
    pub fn relabel(&self, perm: &[usize]) -> (DirectedGraph, i8) {
        relabel_sorted(self, perm)
    }

    fn has_repeated_target(&self) -> bool {
        self.out.iter().any(|ts| {
            let set: BTreeSet<_> = ts.iter().collect();
            set.len() != ts.len()
        })
    }
}

pub(crate) fn parse_target(tok: &str) -> Result<Target, String> {
    let (kind, idx) = tok.split_at(1.min(tok.len()));
    let i: usize = idx.parse().map_err(|_| format!("bad vertex `{tok}`"))?;
    if i == 0 {
        return Err(format!("vertex labels start at 1, got `{tok}`"));
    }
    match kind {
        "v" => Ok(Target::Internal(i - 1)),
        "b" => Ok(Target::Boundary(i - 1)),
        _ => Err(format!("bad vertex `{tok}`")),
    }
}

impl fmt::Display for DirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

fn relabel_sorted(g: &DirectedGraph, perm: &[usize]) -> (DirectedGraph, i8) {
    let map_t = |t: Target| match t {
        Target::Internal(i) => Target::Internal(perm[i]),
        b => b,
    };
    // starting offset of each old vertex block in the global sequence
    let mut offset = vec![0usize; g.n];
    for v in 1..g.n {
        offset[v] = offset[v - 1] + g.out[v - 1].len();
    }
    let mut new_out: Vec<Vec<Target>> = vec![Vec::new(); g.n];
    let mut new_ids: Vec<Vec<usize>> = vec![Vec::new(); g.n];
    for v in 0..g.n {
        let mut items: Vec<(Target, usize)> = g.out[v]
            .iter()
            .enumerate()
            .map(|(k, t)| (map_t(*t), offset[v] + k))
            .collect();
        items.sort();
        new_out[perm[v]] = items.iter().map(|x| x.0).collect();
        new_ids[perm[v]] = items.iter().map(|x| x.1).collect();
    }
    let seq: Vec<usize> = new_ids.into_iter().flatten().collect();
    (
        DirectedGraph {
            n: g.n,
            m: g.m,
            out: new_out,
        },
        parity_of(&seq),
    )
}

/// A canonical graph with a sign in {-1, 0, +1}; zero marks a degenerate
/// orientation class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrientedGraphTerm {
    pub graph: DirectedGraph,
    pub sign: i8,
}

impl OrientedGraphTerm {
    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }
}

/// Result of canonicalization together with the relabeling that produced it.
#[derive(Debug, Clone)]
pub struct Canonical {
    pub term: OrientedGraphTerm,
    /// old internal index -> canonical internal index
    pub relabel: Vec<usize>,
}

/// Canonical representative over all internal relabelings and per-vertex edge
/// reorderings; the sign is the parity of the induced edge permutation.
pub fn canonicalize(g: &DirectedGraph) -> OrientedGraphTerm {
    canonicalize_with_perm(g).term
}

pub fn canonicalize_with_perm(g: &DirectedGraph) -> Canonical {
    if g.has_repeated_target() {
        // swapping two identical edges is an odd automorphism
        let (graph, _) = relabel_sorted(g, &(0..g.n).collect::<Vec<_>>());
        return Canonical {
            term: OrientedGraphTerm {
                graph: canonicalize_ignoring_sign(&graph),
                sign: 0,
            },
            relabel: (0..g.n).collect(),
        };
    }
    let mut best: Option<(DirectedGraph, i8, Vec<usize>)> = None;
    let mut degenerate = false;
    for perm in permutations(g.n) {
        let (cand, sign) = relabel_sorted(g, &perm);
        match &best {
            None => best = Some((cand, sign, perm)),
            Some((b, bs, _)) => match cand.cmp(b) {
                std::cmp::Ordering::Less => {
                    best = Some((cand, sign, perm));
                    degenerate = false;
                }
                std::cmp::Ordering::Equal => {
                    if sign != *bs {
                        degenerate = true;
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }
    let (graph, sign, relabel) = best.expect("at least the identity permutation");
    Canonical {
        term: OrientedGraphTerm {
            graph,
            sign: if degenerate { 0 } else { sign },
        },
        relabel,
    }
}

fn canonicalize_ignoring_sign(g: &DirectedGraph) -> DirectedGraph {
    permutations(g.n)
        .map(|p| relabel_sorted(g, &p).0)
        .min()
        .unwrap_or_else(|| g.clone())
}

/// Builds a graph from explicit out-edge lists and canonicalizes it.
pub fn make_graph(n: usize, m: usize, out: Vec<Vec<Target>>) -> Result<OrientedGraphTerm, GraphError> {
    Ok(canonicalize(&DirectedGraph::new(n, m, out)?))
}

/// Admissibility switches for the graph class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassPredicate {
    pub forbid_loops: bool,
    pub forbid_parallel_edges: bool,
    pub require_internal_outdegree_at_least_one: bool,
}

impl Default for ClassPredicate {
    fn default() -> Self {
        ClassPredicate {
            forbid_loops: true,
            forbid_parallel_edges: true,
            require_internal_outdegree_at_least_one: true,
        }
    }
}

impl ClassPredicate {
    pub fn allows(&self, g: &DirectedGraph) -> bool {
        is_in_class(g, self)
    }
}

pub fn is_in_class(g: &DirectedGraph, c: &ClassPredicate) -> bool {
    for (v, ts) in g.out.iter().enumerate() {
        if c.require_internal_outdegree_at_least_one && ts.is_empty() {
            return false;
        }
        if c.forbid_loops && ts.contains(&Target::Internal(v)) {
            return false;
        }
        if c.forbid_parallel_edges {
            let set: BTreeSet<_> = ts.iter().collect();
            if set.len() != ts.len() {
                return false;
            }
        }
    }
    true
}

pub fn excess(g: &DirectedGraph) -> i64 {
    g.excess()
}

/// Labeled outcome of contracting an internal edge, before recanonicalization.
/// The merged vertex has index 0; the remaining vertices keep their relative
/// order. `sign` is the parity of moving the contracted edge to the front with
/// the source block and target block leading the sequence.
#[derive(Debug, Clone)]
pub struct LabeledContraction {
    pub graph: DirectedGraph,
    pub sign: i8,
    pub source: usize,
    pub target: usize,
    /// new index of every old vertex (source and target both map to 0)
    pub vertex_map: Vec<usize>,
}

pub fn contract_labeled(g: &DirectedGraph, e: usize) -> Result<LabeledContraction, GraphError> {
    let (s, t) = g.edge(e)?;
    let t = match t {
        Target::Internal(t) if t != s => t,
        _ => return Err(GraphError::NotInternalEdge(e)),
    };
    // local position of e within the source block
    let start: usize = g.out[..s].iter().map(Vec::len).sum();
    let local = e - start;

    let mut offset = vec![0usize; g.n];
    for v in 1..g.n {
        offset[v] = offset[v - 1] + g.out[v - 1].len();
    }
    let mut seq = vec![e];
    seq.extend((0..g.out[s].len()).filter(|&k| k != local).map(|k| offset[s] + k));
    seq.extend((0..g.out[t].len()).map(|k| offset[t] + k));
    for v in (0..g.n).filter(|&v| v != s && v != t) {
        seq.extend((0..g.out[v].len()).map(|k| offset[v] + k));
    }
    let sign = parity_of(&seq);

    let mut vertex_map = vec![0usize; g.n];
    let mut next = 1;
    for v in 0..g.n {
        if v != s && v != t {
            vertex_map[v] = next;
            next += 1;
        }
    }
    let map_t = |x: Target| match x {
        Target::Internal(i) => Target::Internal(vertex_map[i]),
        b => b,
    };
    let mut out = vec![Vec::new(); g.n - 1];
    out[0] = g.out[s]
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != local)
        .map(|(_, x)| map_t(*x))
        .chain(g.out[t].iter().map(|x| map_t(*x)))
        .collect();
    for v in (0..g.n).filter(|&v| v != s && v != t) {
        out[vertex_map[v]] = g.out[v].iter().map(|x| map_t(*x)).collect();
    }
    Ok(LabeledContraction {
        graph: DirectedGraph {
            n: g.n - 1,
            m: g.m,
            out,
        },
        sign,
        source: s,
        target: t,
        vertex_map,
    })
}

/// Contracts internal edge `e` of the canonical representative of `t`.
/// Returns `None` when the result leaves the class or is degenerate.
pub fn contract_edge(
    t: &OrientedGraphTerm,
    e: usize,
    c: &ClassPredicate,
) -> Result<Option<OrientedGraphTerm>, GraphError> {
    let lc = contract_labeled(&t.graph, e)?;
    if t.sign == 0 || !is_in_class(&lc.graph, c) {
        return Ok(None);
    }
    let canon = canonicalize(&lc.graph);
    let sign = canon.sign * lc.sign * t.sign;
    if sign == 0 {
        return Ok(None);
    }
    Ok(Some(OrientedGraphTerm {
        graph: canon.graph,
        sign,
    }))
}

/// A vertex subset: internal indices (sorted) and a consecutive boundary run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexSubset {
    pub internal: Vec<usize>,
    /// first boundary index of the run
    pub run_start: usize,
    pub run_len: usize,
}

impl VertexSubset {
    pub fn len(&self) -> usize {
        self.internal.len() + self.run_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, t: Target) -> bool {
        match t {
            Target::Internal(i) => self.internal.binary_search(&i).is_ok(),
            Target::Boundary(j) => j >= self.run_start && j < self.run_start + self.run_len,
        }
    }

    /// Builds a subset from listed vertices; the boundary part must be a
    /// nonempty consecutive run.
    pub fn from_vertices(vertices: &[Target]) -> Result<Self, GraphError> {
        let mut internal: Vec<usize> = Vec::new();
        let mut bd: Vec<usize> = Vec::new();
        for v in vertices {
            match *v {
                Target::Internal(i) => internal.push(i),
                Target::Boundary(j) => bd.push(j),
            }
        }
        internal.sort_unstable();
        internal.dedup();
        bd.sort_unstable();
        bd.dedup();
        if bd.is_empty() {
            return Err(GraphError::InvalidSubset("subset must meet the boundary".into()));
        }
        if bd.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(GraphError::InvalidSubset(
                "boundary vertices must be consecutive".into(),
            ));
        }
        Ok(VertexSubset {
            internal,
            run_start: bd[0],
            run_len: bd.len(),
        })
    }
}

impl fmt::Display for VertexSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.internal.iter().map(|i| format!("v{}", i + 1)).collect();
        parts.extend((self.run_start..self.run_start + self.run_len).map(|j| format!("b{}", j + 1)));
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Labeled outcome of collapsing a normal subset. The subgraph keeps the
/// subset's internal vertices in increasing order; the quotient keeps the
/// complement in increasing order with the collapsed vertex at boundary
/// position `run_start`.
#[derive(Debug, Clone)]
pub struct LabeledCollapse {
    pub sub: DirectedGraph,
    pub quotient: DirectedGraph,
    /// parity of sorting the edge sequence into (subset-sourced, rest)
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collapse {
    pub sub: OrientedGraphTerm,
    pub quotient: OrientedGraphTerm,
}

impl Collapse {
    pub fn sign(&self) -> i8 {
        self.sub.sign * self.quotient.sign
    }
}

fn check_subset(g: &DirectedGraph, w: &VertexSubset) -> Result<(), GraphError> {
    if w.run_len == 0 {
        return Err(GraphError::InvalidSubset("subset must meet the boundary".into()));
    }
    if w.run_start + w.run_len > g.m {
        return Err(GraphError::InvalidSubset(format!("boundary run exceeds m = {}", g.m)));
    }
    if w.internal.iter().any(|&i| i >= g.n) {
        return Err(GraphError::InvalidSubset("internal vertex out of range".into()));
    }
    if w.internal.windows(2).any(|p| p[0] >= p[1]) {
        return Err(GraphError::InvalidSubset(
            "internal vertices must be sorted and distinct".into(),
        ));
    }
    if w.len() < 2 {
        return Err(GraphError::InvalidSubset("subset needs at least two vertices".into()));
    }
    if w.len() == g.n + g.m {
        return Err(GraphError::InvalidSubset("subset must be proper".into()));
    }
    Ok(())
}

/// Splits `g` along `w` without class checks. `None` when an edge sourced in
/// the subset leaves it.
pub fn collapse_labeled(g: &DirectedGraph, w: &VertexSubset) -> Result<Option<LabeledCollapse>, GraphError> {
    check_subset(g, w)?;
    let in_w = |v: usize| w.internal.binary_search(&v).is_ok();
    for &v in &w.internal {
        if g.out[v].iter().any(|t| !w.contains(*t)) {
            return Ok(None);
        }
    }
    let rest: Vec<usize> = (0..g.n).filter(|&v| !in_w(v)).collect();

    let mut sub_index = vec![usize::MAX; g.n];
    for (k, &v) in w.internal.iter().enumerate() {
        sub_index[v] = k;
    }
    let mut quot_index = vec![usize::MAX; g.n];
    for (k, &v) in rest.iter().enumerate() {
        quot_index[v] = k;
    }
    let sub_out: Vec<Vec<Target>> = w
        .internal
        .iter()
        .map(|&v| {
            g.out[v]
                .iter()
                .map(|t| match *t {
                    Target::Internal(i) => Target::Internal(sub_index[i]),
                    Target::Boundary(j) => Target::Boundary(j - w.run_start),
                })
                .collect()
        })
        .collect();
    let quot_bd = |j: usize| {
        if j < w.run_start {
            j
        } else {
            j + 1 - w.run_len
        }
    };
    let quot_out: Vec<Vec<Target>> = rest
        .iter()
        .map(|&v| {
            g.out[v]
                .iter()
                .map(|t| {
                    if w.contains(*t) {
                        Target::Boundary(w.run_start)
                    } else {
                        match *t {
                            Target::Internal(i) => Target::Internal(quot_index[i]),
                            Target::Boundary(j) => Target::Boundary(quot_bd(j)),
                        }
                    }
                })
                .collect()
        })
        .collect();

    let mut offset = vec![0usize; g.n];
    for v in 1..g.n {
        offset[v] = offset[v - 1] + g.out[v - 1].len();
    }
    let mut seq: Vec<usize> = Vec::with_capacity(g.edge_count());
    for &v in w.internal.iter().chain(rest.iter()) {
        seq.extend((0..g.out[v].len()).map(|k| offset[v] + k));
    }

    Ok(Some(LabeledCollapse {
        sub: DirectedGraph {
            n: w.internal.len(),
            m: w.run_len,
            out: sub_out,
        },
        quotient: DirectedGraph {
            n: rest.len(),
            m: g.m - w.run_len + 1,
            out: quot_out,
        },
        sign: parity_of(&seq),
    }))
}

/// Collapses `w` to a single boundary vertex. `Ok(None)` means not normal.
pub fn collapse_normal_subgraph(
    t: &OrientedGraphTerm,
    w: &VertexSubset,
    c: &ClassPredicate,
) -> Result<Option<Collapse>, GraphError> {
    let Some(lc) = collapse_labeled(&t.graph, w)? else {
        return Ok(None);
    };
    if !is_in_class(&lc.sub, c) || !is_in_class(&lc.quotient, c) {
        return Ok(None);
    }
    let mut sub = canonicalize(&lc.sub);
    let quotient = canonicalize(&lc.quotient);
    if sub.sign == 0 || quotient.sign == 0 || t.sign == 0 {
        // a degenerate factor still marks the subset as normal; the term is zero
        sub.sign = 0;
        return Ok(Some(Collapse { sub, quotient }));
    }
    sub.sign *= lc.sign * t.sign;
    Ok(Some(Collapse { sub, quotient }))
}

/// All subsets admitted by [`collapse_normal_subgraph`], in a fixed order.
pub fn enumerate_normal_subsets(t: &OrientedGraphTerm, c: &ClassPredicate) -> Vec<VertexSubset> {
    normal_subsets_of(&t.graph, c)
}

pub(crate) fn normal_subsets_of(g: &DirectedGraph, c: &ClassPredicate) -> Vec<VertexSubset> {
    let mut found = Vec::new();
    for run_len in 1..=g.m {
        for run_start in 0..=(g.m - run_len) {
            for mask in 0u64..(1u64 << g.n) {
                let internal: Vec<usize> = (0..g.n).filter(|v| mask >> v & 1 == 1).collect();
                let w = VertexSubset {
                    internal,
                    run_start,
                    run_len,
                };
                if w.len() < 2 || w.len() == g.n + g.m {
                    continue;
                }
                if let Ok(Some(lc)) = collapse_labeled(g, &w) {
                    if is_in_class(&lc.sub, c) && is_in_class(&lc.quotient, c) {
                        found.push(w);
                    }
                }
            }
        }
    }
    found.sort();
    found
}

/// All canonical admissible graphs with `n` internal vertices, `m` boundary
/// vertices and excess `l`, sign +1, without degenerate classes.
pub fn enumerate_graphs(n: usize, m: usize, l: i64, c: &ClassPredicate) -> Vec<OrientedGraphTerm> {
    let edges = l + 2 * n as i64 + m as i64 - 2;
    if edges < 0 {
        return Vec::new();
    }
    let edges = edges as usize;
    if n == 0 {
        return if edges == 0 {
            vec![OrientedGraphTerm {
                graph: DirectedGraph::boundary_only(m),
                sign: 1,
            }]
        } else {
            Vec::new()
        };
    }
    // candidate out-sets per vertex: subsets of the allowed targets
    let options: Vec<Vec<Vec<Target>>> = (0..n)
        .map(|v| {
            let targets: Vec<Target> = (0..n)
                .filter(|&u| u != v || !c.forbid_loops)
                .map(Target::Internal)
                .chain((0..m).map(Target::Boundary))
                .collect();
            let min = usize::from(c.require_internal_outdegree_at_least_one);
            (0u64..(1u64 << targets.len()))
                .filter(|mask| (mask.count_ones() as usize) >= min)
                .map(|mask| {
                    targets
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| mask >> k & 1 == 1)
                        .map(|(_, t)| *t)
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut choice = vec![0usize; n];
    enumerate_rec(0, edges, &options, &mut choice, &mut |out| {
        let g = DirectedGraph { n, m, out };
        if !is_in_class(&g, c) {
            return;
        }
        let canon = canonicalize(&g);
        if canon.sign != 0 {
            seen.insert(canon.graph);
        }
    });
    seen.into_iter()
        .map(|graph| OrientedGraphTerm { graph, sign: 1 })
        .collect()
}

fn enumerate_rec(
    v: usize,
    remaining: usize,
    options: &[Vec<Vec<Target>>],
    choice: &mut Vec<usize>,
    emit: &mut dyn FnMut(Vec<Vec<Target>>),
) {
    if v == options.len() {
        if remaining == 0 {
            emit(choice.iter().enumerate().map(|(u, &k)| options[u][k].clone()).collect());
        }
        return;
    }
    for k in 0..options[v].len() {
        let d = options[v][k].len();
        if d <= remaining {
            choice[v] = k;
            enumerate_rec(v + 1, remaining - d, options, choice, emit);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Target::{Boundary as B, Internal as V};

    pub(crate) fn w2() -> DirectedGraph {
        DirectedGraph::new(1, 2, vec![vec![B(0), B(1)]]).unwrap()
    }

    fn p1() -> OrientedGraphTerm {
        make_graph(1, 2, vec![vec![B(0)]]).unwrap()
    }

    #[test]
    fn make_graph_examples() {
        let t = make_graph(1, 2, vec![vec![B(0), B(1)]]).unwrap();
        assert_eq!((t.graph.clone(), t.sign), (w2(), 1));
        let t = make_graph(1, 2, vec![vec![B(1), B(0)]]).unwrap();
        assert_eq!((t.graph, t.sign), (w2(), -1));
        let t = make_graph(0, 2, vec![]).unwrap();
        assert_eq!((t.graph, t.sign), (DirectedGraph::boundary_only(2), 1));
    }

    #[test]
    fn dangling_and_count_errors() {
        assert!(matches!(
            DirectedGraph::new(1, 2, vec![vec![B(8)]]),
            Err(GraphError::DanglingTarget { .. })
        ));
        assert!(matches!(
            DirectedGraph::new(2, 0, vec![vec![]]),
            Err(GraphError::VertexCount { .. })
        ));
    }

    #[test]
    fn vertex_swap_sign() {
        let a = canonicalize(&DirectedGraph::new(2, 2, vec![vec![B(0)], vec![B(1)]]).unwrap());
        let b = canonicalize(&DirectedGraph::new(2, 2, vec![vec![B(1)], vec![B(0)]]).unwrap());
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.sign * b.sign, -1);
    }

    #[test]
    fn odd_automorphism_is_degenerate() {
        // oracle: both labelings are the same labeled graph up to the swap, and the
        // swap reverses the two-edge sequence
        let g = DirectedGraph::new(2, 1, vec![vec![B(0)], vec![B(0)]]).unwrap();
        let (swapped, parity) = g.relabel(&[1, 0]);
        assert_eq!(swapped, g);
        assert_eq!(parity, -1);
        assert_eq!(canonicalize(&g).sign, 0);
    }

    #[test]
    fn class_membership() {
        let c = ClassPredicate::default();
        assert!(is_in_class(&w2(), &c));
        assert!(!is_in_class(&DirectedGraph::new(1, 0, vec![vec![V(0)]]).unwrap(), &c));
        assert!(!is_in_class(
            &DirectedGraph::new(1, 1, vec![vec![B(0), B(0)]]).unwrap(),
            &c
        ));
        let lax = ClassPredicate {
            forbid_parallel_edges: false,
            ..c
        };
        assert!(is_in_class(
            &DirectedGraph::new(1, 1, vec![vec![B(0), B(0)]]).unwrap(),
            &lax
        ));
    }

    #[test]
    fn excess_values() {
        assert_eq!(w2().excess(), 0);
        assert_eq!(DirectedGraph::boundary_only(2).excess(), 0);
        assert_eq!(p1().graph.excess(), -1);
    }

    #[test]
    fn contraction_examples() {
        let c = ClassPredicate::default();
        let e3 = make_graph(2, 2, vec![vec![V(1), B(0)], vec![B(1)]]).unwrap();
        let idx = e3.graph.edges().iter().position(|(_, t)| matches!(t, V(_))).unwrap();
        let r = contract_edge(&e3, idx, &c).unwrap().unwrap();
        assert_eq!(r.graph, w2());
        // hand-applied: the representative is v1:[v2,b1], v2:[b2]; moving e first is
        // the identity, merge gives v:[b1,b2]
        assert_eq!(
            r.sign * e3.sign,
            canonicalize(&DirectedGraph::new(2, 2, vec![vec![V(1), B(0)], vec![B(1)]]).unwrap()).sign
        );

        let e4 = make_graph(2, 2, vec![vec![V(1), B(0)], vec![B(0), B(1)]]).unwrap();
        let idx = e4.graph.edges().iter().position(|(_, t)| matches!(t, V(_))).unwrap();
        assert_eq!(contract_edge(&e4, idx, &c).unwrap(), None);

        let bidx = e3.graph.edges().iter().position(|(_, t)| matches!(t, B(_))).unwrap();
        assert!(matches!(
            contract_edge(&e3, bidx, &c),
            Err(GraphError::NotInternalEdge(_))
        ));
    }

    #[test]
    fn e3_contraction_sign_is_plus() {
        let c = ClassPredicate::default();
        let g = DirectedGraph::new(2, 2, vec![vec![V(1), B(0)], vec![B(1)]]).unwrap();
        let lc = contract_labeled(&g, 0).unwrap();
        assert_eq!(lc.sign, 1);
        assert_eq!(lc.graph, w2());
        let e3 = canonicalize(&g);
        let idx = e3.graph.edges().iter().position(|(_, t)| matches!(t, V(_))).unwrap();
        let r = contract_edge(&e3, idx, &c).unwrap().unwrap();
        // same class whichever representative we start from
        assert_eq!(r, OrientedGraphTerm { graph: w2(), sign: 1 });
    }

    #[test]
    fn collapse_examples() {
        let c = ClassPredicate::default();
        let l1 = DirectedGraph::new(1, 1, vec![vec![B(0)]]).unwrap();
        let b2 = DirectedGraph::boundary_only(2);
        let p = p1();
        let w = VertexSubset::from_vertices(&[V(0), B(0)]).unwrap();
        let col = collapse_normal_subgraph(&p, &w, &c).unwrap().unwrap();
        assert_eq!(
            (col.sub.graph.clone(), col.quotient.graph.clone()),
            (l1.clone(), b2.clone())
        );
        assert_eq!(col.sign(), 1);
        let w = VertexSubset::from_vertices(&[B(0), B(1)]).unwrap();
        let col = collapse_normal_subgraph(&p, &w, &c).unwrap().unwrap();
        assert_eq!((col.sub.graph.clone(), col.quotient.graph.clone()), (b2, l1));
        assert_eq!(col.sign(), 1);

        let w2t = OrientedGraphTerm { graph: w2(), sign: 1 };
        let w = VertexSubset::from_vertices(&[V(0), B(0)]).unwrap();
        assert_eq!(collapse_normal_subgraph(&w2t, &w, &c).unwrap(), None);
    }

    #[test]
    fn subset_errors() {
        let c = ClassPredicate::default();
        let w2t = OrientedGraphTerm { graph: w2(), sign: 1 };
        assert!(VertexSubset::from_vertices(&[B(0), B(2)]).is_err());
        assert!(VertexSubset::from_vertices(&[V(0)]).is_err());
        let all = VertexSubset {
            internal: vec![0],
            run_start: 0,
            run_len: 2,
        };
        assert!(collapse_normal_subgraph(&w2t, &all, &c).is_err());
        let single = VertexSubset {
            internal: vec![],
            run_start: 0,
            run_len: 1,
        };
        assert!(collapse_normal_subgraph(&w2t, &single, &c).is_err());
    }

    #[test]
    fn normal_subset_examples() {
        let c = ClassPredicate::default();
        let subs = enumerate_normal_subsets(&p1(), &c);
        let names: Vec<String> = subs.iter().map(|w| w.to_string()).collect();
        assert_eq!(names.len(), 2);
        assert!(names.contains(&"{v1,b1}".to_string()));
        assert!(names.contains(&"{b1,b2}".to_string()));
        let w2t = OrientedGraphTerm { graph: w2(), sign: 1 };
        assert!(enumerate_normal_subsets(&w2t, &c).is_empty());
        let b2 = OrientedGraphTerm {
            graph: DirectedGraph::boundary_only(2),
            sign: 1,
        };
        assert!(enumerate_normal_subsets(&b2, &c).is_empty());
    }

    #[test]
    fn enumeration_examples() {
        let c = ClassPredicate::default();
        assert_eq!(enumerate_graphs(0, 2, 0, &c).len(), 1);
        assert!(enumerate_graphs(1, 2, 0, &c).iter().any(|t| t.graph == w2()));
        // brute force: one internal vertex, one boundary vertex, one edge; only v1->b1
        let mut brute = BTreeSet::new();
        for target in [V(0), B(0)] {
            let g = DirectedGraph::new(1, 1, vec![vec![target]]).unwrap();
            if is_in_class(&g, &c) {
                brute.insert(canonicalize(&g).graph);
            }
        }
        assert_eq!(brute.len(), 1);
        assert_eq!(enumerate_graphs(1, 1, 0, &c).len(), 1);
    }

    #[test]
    fn key_round_trip() {
        let g = DirectedGraph::new(2, 2, vec![vec![V(1), B(0)], vec![B(1)]]).unwrap();
        assert_eq!(g.key(), "2,2;[v2 b1|b2]");
        assert_eq!(DirectedGraph::from_key(&g.key()).unwrap(), g);
        assert_eq!(
            DirectedGraph::from_key("0,2;[]").unwrap(),
            DirectedGraph::boundary_only(2)
        );
    }
}
