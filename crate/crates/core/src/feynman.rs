//! Feynman rules on graphs: the polydifferential operator attached to a
//! graph with polyvector fields on its internal vertices, the weighted
//! expansions `U_n = Σ W(Γ)·U_Γ`, and the two evaluations of the L∞
//! obstruction.
//!
//! Conventions:
//! * `labeled_evaluate(g, γ)` puts `γ_v` on internal vertex `v` of the
//!   labeled graph `g` and sums over all basic states. It ignores the order
//!   of vertices; only the order of each vertex's out-edges matters.
//! * `evaluate_U(t, γ) = sign(t) · labeled_evaluate(t.graph, γ)`.
//! * Relabeling a graph and moving the states along costs the Koszul sign of
//!   the vertex permutation with out-degrees as degrees.
//! * `full_evaluate(c, γ)` is the skew-symmetrized rule of the class of `c`:
//!   the signed sum of `labeled_evaluate` over all distinct relabelings of
//!   `c`. The expansions `U_n` and the obstruction use it.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::algebra::{differential_graph, reduced_coproduct_graph};
use crate::cobar::{delta_on_weight, WeightFunctional};
use crate::graph::{
    canonicalize, canonicalize_with_perm, collapse_labeled, contract_edge, contract_labeled, enumerate_graphs,
    ClassPredicate, DirectedGraph, GraphError, OrientedGraphTerm, Target, VertexSubset,
};
use crate::lincomb::{format_q, q, Q};
use crate::perm::{koszul_sign, parity_of, permutations};
use crate::polyalg::{bullet, wedge_compose, AlgebraError, PolyDiffOperator, PolyVectorField, Polynomial};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FeynmanError {
    #[error("state has {got} fields but the graph has {expected} internal vertices")]
    StateCount { expected: usize, got: usize },
    #[error("vertex v{vertex} has out-degree {expected} but its field has arity {got}")]
    Signature { vertex: usize, expected: usize, got: usize },
    #[error("dimension mismatch: fields of dimension {0}, expected {1}")]
    Dimension(usize, usize),
    #[error("edge {0} is not an internal edge")]
    NotInternalEdge(usize),
    #[error("contraction of edge {0} leaves the class or is degenerate")]
    Inadmissible(usize),
    #[error("subset {0} is not normal")]
    NotNormal(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

fn sign_q(s: i8) -> Q {
    q(s as i64)
}

fn field_arity(f: &PolyVectorField) -> Option<usize> {
    if f.is_zero() {
        None
    } else {
        f.arity()
    }
}

/// Arities used as Koszul degrees; zero fields count as even.
pub fn state_degrees(states: &[PolyVectorField]) -> Vec<usize> {
    states.iter().map(|f| field_arity(f).unwrap_or(0)).collect()
}

fn check_state(g: &DirectedGraph, states: &[PolyVectorField], dim: usize) -> Result<(), FeynmanError> {
    if states.len() != g.n() {
        return Err(FeynmanError::StateCount {
            expected: g.n(),
            got: states.len(),
        });
    }
    for (v, f) in states.iter().enumerate() {
        if f.dim() != dim {
            return Err(FeynmanError::Dimension(f.dim(), dim));
        }
        match f.arity() {
            Some(k) if k != g.out_degree(v) => {
                return Err(FeynmanError::Signature {
                    vertex: v + 1,
                    expected: g.out_degree(v),
                    got: k,
                })
            }
            None if !f.is_zero() => {
                return Err(FeynmanError::Signature {
                    vertex: v + 1,
                    expected: g.out_degree(v),
                    got: usize::MAX,
                })
            }
            _ => {}
        }
    }
    Ok(())
}

fn signature_matches(g: &DirectedGraph, states: &[PolyVectorField]) -> bool {
    states.len() == g.n()
        && states
            .iter()
            .enumerate()
            .all(|(v, f)| field_arity(f) == Some(g.out_degree(v)))
}

/// Signed coefficient tuples of a homogeneous field: every ordering of every
/// stored index set, with its sign.
fn coefficient_tuples(f: &PolyVectorField) -> Vec<(Vec<usize>, Polynomial)> {
    let mut out = Vec::new();
    for (idx, c) in f.terms() {
        for p in permutations(idx.len()) {
            let tuple: Vec<usize> = p.iter().map(|&k| idx[k]).collect();
            out.push((tuple.clone(), f.signed_coeff(&tuple)));
            let _ = c;
        }
    }
    out
}

/// Feynman rule of a labeled graph: `Σ_I Π_v ∂^{in(v)} ⟨γ_v | I(out(v))⟩ ·
/// Π_j ∂^{in(b_j)} f_j`.
pub fn labeled_evaluate(
    g: &DirectedGraph,
    states: &[PolyVectorField],
    dim: usize,
) -> Result<PolyDiffOperator, FeynmanError> {
    check_state(g, states, dim)?;
    let mut out = PolyDiffOperator::zero(dim, g.m());
    if states.iter().any(|f| f.is_zero()) {
        return Ok(out);
    }
    let tuples: Vec<Vec<(Vec<usize>, Polynomial)>> = states.iter().map(coefficient_tuples).collect();
    let mut in_int = vec![vec![0u32; dim]; g.n()];
    let mut in_bd = vec![vec![0u32; dim]; g.m()];
    let mut chosen: Vec<usize> = vec![0; g.n()];
    dfs(g, &tuples, 0, &mut chosen, &mut in_int, &mut in_bd, &mut out);
    Ok(out)
}

fn dfs(
    g: &DirectedGraph,
    tuples: &[Vec<(Vec<usize>, Polynomial)>],
    v: usize,
    chosen: &mut Vec<usize>,
    in_int: &mut Vec<Vec<u32>>,
    in_bd: &mut Vec<Vec<u32>>,
    out: &mut PolyDiffOperator,
) {
    if v == g.n() {
        let dim = out.dim();
        let mut coeff = Polynomial::one(dim);
        for (u, &k) in chosen.iter().enumerate() {
            coeff = coeff.mul(&tuples[u][k].1.derivative_multi(&in_int[u]));
            if coeff.is_zero() {
                return;
            }
        }
        out.add_term(in_bd.clone(), coeff);
        return;
    }
    for (k, (tuple, _)) in tuples[v].iter().enumerate() {
        chosen[v] = k;
        for (t, &i) in g.out_edges()[v].iter().zip(tuple) {
            match *t {
                Target::Internal(u) => in_int[u][i] += 1,
                Target::Boundary(j) => in_bd[j][i] += 1,
            }
        }
        dfs(g, tuples, v + 1, chosen, in_int, in_bd, out);
        for (t, &i) in g.out_edges()[v].iter().zip(tuple) {
            match *t {
                Target::Internal(u) => in_int[u][i] -= 1,
                Target::Boundary(j) => in_bd[j][i] -= 1,
            }
        }
    }
}

/// Feynman rule of an oriented graph term: its sign times the labeled rule
/// of its canonical graph.
#[allow(non_snake_case)]
pub fn evaluate_U(
    t: &OrientedGraphTerm,
    states: &[PolyVectorField],
    dim: usize,
) -> Result<PolyDiffOperator, FeynmanError> {
    let u = labeled_evaluate(&t.graph, states, dim)?;
    Ok(u.scaled(&sign_q(t.sign)))
}

/// Moves `states` along a relabeling (`relabel[v]` = new index of `v`) and
/// returns them with the Koszul sign of the move.
pub fn relabel_states(states: &[PolyVectorField], relabel: &[usize]) -> (Vec<PolyVectorField>, i8) {
    let n = states.len();
    let mut order = vec![0usize; n];
    for (v, &r) in relabel.iter().enumerate() {
        order[r] = v;
    }
    let moved: Vec<PolyVectorField> = order.iter().map(|&v| states[v].clone()).collect();
    (moved, koszul_sign(&state_degrees(states), &order))
}

/// The labeled rule computed through the canonical form:
/// `U'(g, γ) = κ · evaluate_U(canonicalize(g), relabeled γ)`. `None` for
/// degenerate classes.
pub fn evaluate_via_canonical(
    g: &DirectedGraph,
    states: &[PolyVectorField],
    dim: usize,
) -> Result<Option<PolyDiffOperator>, FeynmanError> {
    let canon = canonicalize_with_perm(g);
    if canon.term.sign == 0 {
        return Ok(None);
    }
    let (moved, kappa) = relabel_states(states, &canon.relabel);
    Ok(Some(evaluate_U(&canon.term, &moved, dim)?.scaled(&sign_q(kappa))))
}

/// Distinct relabelings of `g` with their edge-sequence parities; `None`
/// when the class is degenerate.
pub fn relabeling_orbit(g: &DirectedGraph) -> Option<Vec<(DirectedGraph, i8)>> {
    let mut seen: BTreeMap<DirectedGraph, i8> = BTreeMap::new();
    for p in permutations(g.n()) {
        let (h, s) = g.relabel(&p);
        match seen.get(&h) {
            Some(&prev) if prev != s => return None,
            Some(_) => {}
            None => {
                seen.insert(h, s);
            }
        }
    }
    Some(seen.into_iter().collect())
}

/// Skew-symmetrized rule of the class of `g`: `Σ_λ sign(λ)·U'(λ, γ)` over the
/// distinct relabelings `λ`; relabelings whose out-degrees do not match the
/// state contribute zero.
pub fn full_evaluate(
    g: &DirectedGraph,
    states: &[PolyVectorField],
    dim: usize,
    arity: usize,
) -> Result<PolyDiffOperator, FeynmanError> {
    let mut out = PolyDiffOperator::zero(dim, arity);
    let Some(orbit) = relabeling_orbit(g) else {
        return Ok(out);
    };
    for (h, s) in orbit {
        if !signature_matches(&h, states) {
            continue;
        }
        out.add_scaled(&labeled_evaluate(&h, states, dim)?, &sign_q(s))?;
    }
    Ok(out)
}

/// Weighted graph expansions `U_k(γ_1…γ_k) = Σ_{Γ ∈ G⁰_{k,m}} W(Γ)·U_Γ(γ)`
/// with `U_0 = W(B2)·m_A`.
pub struct Expansion<'a> {
    pub weights: &'a WeightFunctional,
    pub class: ClassPredicate,
    pub dim: usize,
    graphs: HashMap<(usize, usize), Vec<DirectedGraph>>,
}

impl<'a> Expansion<'a> {
    pub fn new(weights: &'a WeightFunctional, class: ClassPredicate, dim: usize) -> Self {
        Expansion {
            weights,
            class,
            dim,
            graphs: HashMap::new(),
        }
    }

    fn graphs(&mut self, n: usize, m: usize) -> &[DirectedGraph] {
        let c = self.class;
        self.graphs
            .entry((n, m))
            .or_insert_with(|| enumerate_graphs(n, m, 0, &c).into_iter().map(|t| t.graph).collect())
    }

    /// Output arity of `U_k` on fields of total arity `total`: `total − 2k + 2`.
    pub fn arity(k: usize, total: usize) -> Option<usize> {
        (total + 2).checked_sub(2 * k)
    }

    pub fn evaluate(&mut self, states: &[PolyVectorField]) -> Result<Option<PolyDiffOperator>, FeynmanError> {
        if states.iter().any(|f| f.is_zero()) {
            return Ok(None);
        }
        let total: usize = state_degrees(states).iter().sum();
        let Some(m) = Self::arity(states.len(), total) else {
            return Ok(None);
        };
        let dim = self.dim;
        let mut out = PolyDiffOperator::zero(dim, m);
        let graphs: Vec<DirectedGraph> = self.graphs(states.len(), m).to_vec();
        for g in graphs {
            let w = self.weights.eval_graph(&g);
            if w.is_zero() {
                continue;
            }
            if states.is_empty() {
                // only B2 has excess 0 among edgeless graphs
                out.add_scaled(&PolyDiffOperator::multiplication(dim), &w)?;
            } else {
                out.add_scaled(&full_evaluate(&g, states, dim, m)?, &w)?;
            }
        }
        Ok(Some(out))
    }
}

/// Outcome of an identity check: both sides and whether they agree.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub lhs: PolyDiffOperator,
    pub rhs: PolyDiffOperator,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Increasing `k`-subsets of `0..n`.
fn choose_positions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// All graphs obtained from `g` by retargeting each edge in `movable` to any
/// vertex of `pool`; the identity retargeting included.
fn lifts(g: &DirectedGraph, movable: &[usize], pool: &[Target]) -> Vec<DirectedGraph> {
    let edges = g.edges();
    let mut out = Vec::new();
    let mut choice = vec![0usize; movable.len()];
    loop {
        let mut adj: Vec<Vec<Target>> = g.out_edges().to_vec();
        let mut offset = vec![0usize; g.n()];
        for v in 1..g.n() {
            offset[v] = offset[v - 1] + g.out_degree(v - 1);
        }
        for (k, &e) in movable.iter().enumerate() {
            let (s, _) = edges[e];
            adj[s][e - offset[s]] = pool[choice[k]];
        }
        out.push(DirectedGraph::new(g.n(), g.m(), adj).expect("retargeting keeps the graph valid"));
        // next choice
        let mut k = 0;
        loop {
            if k == movable.len() {
                return out;
            }
            choice[k] += 1;
            if choice[k] < pool.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Edge-contraction identity on the canonical graph of `t`: the rule of the
/// contracted graph with `γ_i•γ_j` on the merged vertex equals the signed
/// sum of the rules of all lifts of the contraction, i.e. all ways of
/// splitting the merged vertex's out-edges back over `i` and `j` and of
/// redistributing the other edges entering `{i, j}`:
/// `Σ_lifts ±U_Λ(γ) = ε·U_{Γ/e}(γ_i•γ_j, …)`. `Γ` itself is one of the
/// lifts; it is the only one when `γ_i` is a vector field and nothing else
/// enters `i` or `j`.
pub fn lemma_bullet_check(
    t: &OrientedGraphTerm,
    e: usize,
    states: &[PolyVectorField],
    dim: usize,
    c: &ClassPredicate,
) -> Result<IdentityCheck, FeynmanError> {
    let g = &t.graph;
    check_state(g, states, dim)?;
    let (s, target) = g.edge(e)?;
    let j = match target {
        Target::Internal(j) if j != s => j,
        _ => return Err(FeynmanError::NotInternalEdge(e)),
    };
    let Some(contracted) = contract_edge(t, e, c)? else {
        return Err(FeynmanError::Inadmissible(e));
    };
    let lc = contract_labeled(g, e)?;

    // left side: the merged out-list R ++ J (R = other edges of the source,
    // J = edges of the target) split back over the two endpoints in every
    // way, with the shuffle sign, and edges entering {s, j} from outside
    // redistributed; the contracted edge sits in front of the source's list
    let pos = g.out_edges()[s]
        .iter()
        .position(|t| *t == Target::Internal(j))
        .expect("edge of s");
    let mut merged: Vec<Target> = g.out_edges()[s].clone();
    merged.remove(pos);
    let r_len = merged.len();
    merged.extend(g.out_edges()[j].iter().copied());
    let pos_sign = if pos % 2 == 0 { 1 } else { -1 };
    let mut lhs = PolyDiffOperator::zero(dim, g.m());
    for split in choose_positions(merged.len(), merged.len() - r_len) {
        let rest: Vec<usize> = (0..merged.len()).filter(|k| !split.contains(k)).collect();
        let mut order = rest.clone();
        order.extend(split.iter().copied());
        let shuffle = parity_of(&order);
        let mut adj = g.out_edges().to_vec();
        adj[s] = std::iter::once(Target::Internal(j))
            .chain(rest.iter().map(|&k| merged[k]))
            .collect();
        adj[j] = split.iter().map(|&k| merged[k]).collect();
        let base = DirectedGraph::new(g.n(), g.m(), adj)?;
        let base_edges = base.edges();
        let movable: Vec<usize> = base_edges
            .iter()
            .enumerate()
            .filter(|(_, (src, tg))| *src != s && *src != j && matches!(tg, Target::Internal(x) if *x == s || *x == j))
            .map(|(k, _)| k)
            .collect();
        for h in lifts(&base, &movable, &[Target::Internal(s), Target::Internal(j)]) {
            lhs.add_scaled(
                &labeled_evaluate(&h, states, dim)?,
                &sign_q(t.sign * pos_sign * shuffle),
            )?;
        }
    }

    // right side through the canonical contracted term
    let mut merged_states = vec![PolyVectorField::zero(dim); g.n() - 1];
    merged_states[0] = bullet(&states[s], &states[j])?;
    for v in 0..g.n() {
        if v != s && v != j {
            merged_states[lc.vertex_map[v]] = states[v].clone();
        }
    }
    // block sign of moving the source and target blocks to the front
    let mut order = vec![s, j];
    order.extend((0..g.n()).filter(|&v| v != s && v != j));
    let blocks = koszul_sign(&state_degrees(states), &order);
    let canon = canonicalize_with_perm(&lc.graph);
    let (moved, kappa) = relabel_states(&merged_states, &canon.relabel);
    let rhs = if merged_states[0].is_zero() {
        PolyDiffOperator::zero(dim, g.m())
    } else {
        evaluate_U(&contracted, &moved, dim)?.scaled(&sign_q(blocks * kappa))
    };
    Ok(IdentityCheck { lhs, rhs })
}

/// Contraction identity summed over all one-edge extensions:
/// `Σ_Γ [dΓ : Γ′]·U_Γ(γ) = Σ_{i≠j} ε(i,j)·U_{Γ′}(γ_i•γ_j, rest)`, with the
/// skew-symmetrized rules on both sides.
pub fn corollary_bullet_check(
    target: &OrientedGraphTerm,
    states: &[PolyVectorField],
    dim: usize,
    c: &ClassPredicate,
) -> Result<IdentityCheck, FeynmanError> {
    let n = states.len();
    let gp = &target.graph;
    if n != gp.n() + 1 {
        return Err(FeynmanError::StateCount {
            expected: gp.n() + 1,
            got: n,
        });
    }
    let m = gp.m();
    let mut lhs = PolyDiffOperator::zero(dim, m);
    let l = gp.excess() - 1;
    for cand in enumerate_graphs(n, m, l, c) {
        let coeff = differential_graph(&cand.graph, c).coeff(gp) * sign_q(target.sign);
        if coeff.is_zero() {
            continue;
        }
        lhs.add_scaled(&full_evaluate(&cand.graph, states, dim, m)?, &coeff)?;
    }
    let rhs = bullet_insertions(states, dim, |merged| {
        if merged[0].is_zero() {
            return Ok(None);
        }
        Ok(Some(full_evaluate(gp, merged, dim, m)?.scaled(&sign_q(target.sign))))
    })?
    .unwrap_or_else(|| PolyDiffOperator::zero(dim, m));
    Ok(IdentityCheck { lhs, rhs })
}

/// `Σ_{i≠j} ε(i,j)·F(γ_i•γ_j, γ_rest…)` where `ε(i,j)` is the Koszul sign of
/// moving `γ_i, γ_j` to the front.
fn bullet_insertions(
    states: &[PolyVectorField],
    dim: usize,
    mut f: impl FnMut(&[PolyVectorField]) -> Result<Option<PolyDiffOperator>, FeynmanError>,
) -> Result<Option<PolyDiffOperator>, FeynmanError> {
    let n = states.len();
    let degrees = state_degrees(states);
    let mut out: Option<PolyDiffOperator> = None;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut order = vec![i, j];
            order.extend((0..n).filter(|&v| v != i && v != j));
            let eps = koszul_sign(&degrees, &order);
            let mut merged = vec![bullet(&states[i], &states[j])?];
            merged.extend(order[2..].iter().map(|&v| states[v].clone()));
            if merged[0].is_zero() {
                continue;
            }
            if let Some(v) = f(&merged)? {
                match out.as_mut() {
                    Some(acc) => acc.add_scaled(&v, &sign_q(eps))?,
                    None => out = Some(v.scaled(&sign_q(eps))),
                }
            }
        }
    }
    let _ = dim;
    Ok(out)
}

/// Collapse identity for a normal subset `w` of the canonical graph of `t`:
/// summing the rule over all ways of retargeting the edges that enter `w`
/// from outside to the vertices of `w` gives the insertion of the subgraph's
/// rule into the quotient's rule at the collapsed boundary position,
/// `Σ_lifts U_Γ(γ) = U_{Γ/γ}(γ_{Sᶜ}) ∘_p U_γ(γ_S)` (plain insertion).
/// Both factors are evaluated through their canonical forms.
pub fn lemma_pp_check(
    t: &OrientedGraphTerm,
    w: &VertexSubset,
    states: &[PolyVectorField],
    dim: usize,
    c: &ClassPredicate,
) -> Result<IdentityCheck, FeynmanError> {
    let g = &t.graph;
    check_state(g, states, dim)?;
    let Some(lc) = collapse_labeled(g, w)? else {
        return Err(FeynmanError::NotNormal(w.to_string()));
    };
    if !crate::graph::is_in_class(&lc.sub, c) || !crate::graph::is_in_class(&lc.quotient, c) {
        return Err(FeynmanError::NotNormal(w.to_string()));
    }
    let in_w = |v: usize| w.internal.binary_search(&v).is_ok();
    let movable: Vec<usize> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, (src, tg))| !in_w(*src) && w.contains(*tg))
        .map(|(k, _)| k)
        .collect();
    let pool: Vec<Target> = w
        .internal
        .iter()
        .map(|&v| Target::Internal(v))
        .chain((w.run_start..w.run_start + w.run_len).map(Target::Boundary))
        .collect();
    let mut lhs = PolyDiffOperator::zero(dim, g.m());
    for h in lifts(g, &movable, &pool) {
        lhs.add_scaled(&labeled_evaluate(&h, states, dim)?, &sign_q(t.sign))?;
    }

    let sub_states: Vec<PolyVectorField> = w.internal.iter().map(|&v| states[v].clone()).collect();
    let quot_states: Vec<PolyVectorField> = (0..g.n()).filter(|&v| !in_w(v)).map(|v| states[v].clone()).collect();
    let via = |h: &DirectedGraph, s: &[PolyVectorField]| -> Result<PolyDiffOperator, FeynmanError> {
        match evaluate_via_canonical(h, s, dim)? {
            Some(u) => Ok(u),
            None => labeled_evaluate(h, s, dim),
        }
    };
    let sub_u = via(&lc.sub, &sub_states)?;
    let quot_u = via(&lc.quotient, &quot_states)?;
    let rhs = quot_u.insert_at(&sub_u, w.run_start)?.scaled(&sign_q(t.sign));
    Ok(IdentityCheck { lhs, rhs })
}

/// Per-graph coefficients of the obstruction.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct GraphCoefficient {
    /// `W(dΓ) + W(Δ_b Γ)` as assembled from the two resummed sums
    pub c_gamma: String,
    /// `δW(Γ)` from the cochain side
    pub delta_w: String,
    pub w_of_d: String,
    pub w_of_coproduct: String,
}

/// Both evaluations of the obstruction for states on `n` vertices and `m`
/// boundary arguments.
#[derive(Debug, Clone)]
pub struct Obstruction {
    pub n: usize,
    pub m: usize,
    pub coefficients: BTreeMap<String, GraphCoefficient>,
    /// `Σ W(dΓ)·U_Γ(γ)` and `Σ W(Δ_bΓ)·U_Γ(γ)` over `Γ ∈ G^{-1}_{n,m}`
    pub contraction_resummed: PolyDiffOperator,
    pub insertion_resummed: PolyDiffOperator,
    /// `Σ_{i≠j} ε·U_{n−1}(γ_i•γ_j, …)` and `Σ_k U_{n−k} ∘∧ U_k`
    pub contraction_direct: PolyDiffOperator,
    pub insertion_direct: PolyDiffOperator,
    /// `Σ δW(Γ)·U_Γ(γ)`
    pub cochain_side: PolyDiffOperator,
    pub lhs: Polynomial,
    pub rhs: Polynomial,
    pub direct: Polynomial,
}

impl Obstruction {
    /// The resummed and direct operators agree and both equal the cochain side.
    pub fn paths_agree(&self) -> bool {
        let mut res = self.contraction_resummed.clone();
        let mut dir = self.contraction_direct.clone();
        if res.add_scaled(&self.insertion_resummed, &Q::one()).is_err()
            || dir.add_scaled(&self.insertion_direct, &Q::one()).is_err()
        {
            return false;
        }
        res == dir && res == self.cochain_side && self.lhs == self.rhs && self.lhs == self.direct
    }

    pub fn is_zero(&self) -> bool {
        self.cochain_side.is_zero()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "m": self.m,
            "graphs": self.coefficients,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "direct": self.direct.to_json(),
            "agree": self.paths_agree(),
        })
    }
}

fn scaled_sum(dim: usize, arity: usize) -> PolyDiffOperator {
    PolyDiffOperator::zero(dim, arity)
}

/// Assembles the obstruction (contraction part plus insertion part) both by resummation over
/// `G^{-1}_{n,m}` and directly from the expansions, together with the
/// per-graph coefficient table.
pub fn assemble_obstruction(
    n: usize,
    m: usize,
    w: &WeightFunctional,
    states: &[PolyVectorField],
    args: &[Polynomial],
    dim: usize,
    c: &ClassPredicate,
) -> Result<Obstruction, FeynmanError> {
    if states.len() != n {
        return Err(FeynmanError::StateCount {
            expected: n,
            got: states.len(),
        });
    }
    if args.len() != m {
        return Err(AlgebraError::Arity(format!("{} arguments for {} boundary vertices", args.len(), m)).into());
    }
    for f in states {
        if f.dim() != dim {
            return Err(FeynmanError::Dimension(f.dim(), dim));
        }
        if f.is_zero() || f.arity().is_none() {
            return Err(FeynmanError::Signature {
                vertex: 0,
                expected: 0,
                got: usize::MAX,
            });
        }
    }
    let total: usize = state_degrees(states).iter().sum();
    if total + 3 != 2 * n + m {
        return Err(AlgebraError::Arity(format!(
            "fields of total arity {total} on {n} vertices give excess −1 graphs with {} boundary vertices, not {m}",
            (total + 3) as i64 - 2 * n as i64
        ))
        .into());
    }

    let mut contraction_res = scaled_sum(dim, m);
    let mut insertion_res = scaled_sum(dim, m);
    let mut cochain = scaled_sum(dim, m);
    let mut coefficients = BTreeMap::new();
    for t in enumerate_graphs(n, m, -1, c) {
        let wd = w.eval(&differential_graph(&t.graph, c));
        let mut wb = Q::zero();
        for (k, coeff) in reduced_coproduct_graph(&t.graph, c).iter() {
            wb += coeff * w.eval_graph(&k[0]) * w.eval_graph(&k[1]);
        }
        let dw = delta_on_weight(w, &t, c);
        if wd.is_zero() && wb.is_zero() && dw.is_zero() {
            continue;
        }
        let u = if n == 0 {
            boundary_product(dim, m)
        } else {
            full_evaluate(&t.graph, states, dim, m)?
        };
        contraction_res.add_scaled(&u, &wd)?;
        insertion_res.add_scaled(&u, &wb)?;
        cochain.add_scaled(&u, &dw)?;
        coefficients.insert(
            t.graph.key(),
            GraphCoefficient {
                c_gamma: format_q(&(&wd + &wb)),
                delta_w: format_q(&dw),
                w_of_d: format_q(&wd),
                w_of_coproduct: format_q(&wb),
            },
        );
    }

    let mut exp = Expansion::new(w, *c, dim);
    let contraction_dir =
        bullet_insertions(states, dim, |merged| exp.evaluate(merged))?.unwrap_or_else(|| scaled_sum(dim, m));
    let mut insertion_dir = scaled_sum(dim, m);
    let degrees = state_degrees(states);
    for s in 0..=n {
        // inner factor U_s on the first s fields of each permutation, outer U_{n−s}
        let exp_cell = std::cell::RefCell::new(Expansion::new(w, *c, dim));
        let eval = |fs: &[PolyVectorField]| -> Result<PolyDiffOperator, AlgebraError> {
            let total: usize = state_degrees(fs).iter().sum();
            let arity = Expansion::arity(fs.len(), total).unwrap_or(0);
            match exp_cell.borrow_mut().evaluate(fs) {
                Ok(Some(u)) => Ok(u),
                Ok(None) => Ok(PolyDiffOperator::zero(dim, arity)),
                Err(FeynmanError::Algebra(e)) => Err(e),
                Err(e) => Err(AlgebraError::Format(e.to_string())),
            }
        };
        let term = wedge_compose(s, n - s, states, &degrees, eval, eval, |inner, outer| {
            if inner.arity() == 0 || outer.arity() == 0 {
                // the collapsed subgraph always meets the boundary
                return Ok(PolyDiffOperator::zero(dim, m));
            }
            outer.insertion_sum(inner)
        })?;
        if let Some(term) = term {
            insertion_dir.add_scaled(&term, &Q::one())?;
        }
    }

    let lhs = {
        let mut o = contraction_res.clone();
        o.add_scaled(&insertion_res, &Q::one())?;
        o.apply(args)?
    };
    let rhs = cochain.apply(args)?;
    let direct = {
        let mut o = contraction_dir.clone();
        o.add_scaled(&insertion_dir, &Q::one())?;
        o.apply(args)?
    };
    Ok(Obstruction {
        n,
        m,
        coefficients,
        contraction_resummed: contraction_res,
        insertion_resummed: insertion_res,
        contraction_direct: contraction_dir,
        insertion_direct: insertion_dir,
        cochain_side: cochain,
        lhs,
        rhs,
        direct,
    })
}

/// Rule of the edgeless graph `B_m`: the `m`-fold product.
pub fn boundary_product(dim: usize, m: usize) -> PolyDiffOperator {
    let mut o = PolyDiffOperator::zero(dim, m);
    o.add_term(vec![vec![0; dim]; m], Polynomial::one(dim));
    o
}

/// Canonical term of a graph given by explicit edges (test and CLI helper).
pub fn term_of(g: &DirectedGraph) -> OrientedGraphTerm {
    canonicalize(g)
}
