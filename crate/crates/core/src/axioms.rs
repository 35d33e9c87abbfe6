//! Exhaustive identity checks for the graph algebra.
//!
//! Each check runs over a list of basis graphs (or pairs of them) and records
//! every instance where the two sides differ.

use serde::Serialize;

use crate::algebra::{
    apply_in_slot, as_tensor1, coproduct, counit, degree, differential, differential_graph, product, product_graphs,
    reduced_coproduct_graph, sign_of_degree, tensor2_product, unit, Antipode, GraphVector, TensorVector,
};
use crate::graph::{enumerate_graphs, ClassPredicate, DirectedGraph};

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct AxiomReport {
    pub axiom: String,
    pub instances: usize,
    pub failures: usize,
    /// keys of the first few failing graphs (pairs joined by ` * `)
    pub witnesses: Vec<String>,
}

impl AxiomReport {
    fn new(axiom: &str) -> Self {
        AxiomReport {
            axiom: axiom.to_string(),
            instances: 0,
            failures: 0,
            witnesses: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok {
            self.failures += 1;
            if self.witnesses.len() < 5 {
                self.witnesses.push(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Basis graphs with `n <= max_n`, `m <= max_m` and excess in `excesses`.
pub fn graph_universe(max_n: usize, max_m: usize, excesses: &[i64], c: &ClassPredicate) -> Vec<DirectedGraph> {
    let mut out = Vec::new();
    for n in 0..=max_n {
        for m in 0..=max_m {
            for &l in excesses {
                out.extend(enumerate_graphs(n, m, l, c).into_iter().map(|t| t.graph));
            }
        }
    }
    out.sort();
    out.dedup();
    out.retain(|g| !g.is_empty_graph());
    out
}

fn single(g: &DirectedGraph) -> GraphVector {
    GraphVector::single(g.clone(), num_traits::One::one())
}

fn d_tensor(v: &TensorVector, c: &ClassPredicate) -> TensorVector {
    let mut out = apply_in_slot(v, 0, 1, |g| as_tensor1(&differential_graph(g, c)));
    out.add(&apply_in_slot(v, 1, 1, |g| as_tensor1(&differential_graph(g, c))));
    out
}

fn full_coproduct_graph(g: &DirectedGraph, c: &ClassPredicate) -> TensorVector {
    coproduct(&single(g), c)
}

pub fn check_d_squared(graphs: &[DirectedGraph], c: &ClassPredicate) -> AxiomReport {
    let mut r = AxiomReport::new("d^2 = 0");
    for g in graphs {
        let dd = differential(&differential_graph(g, c), c);
        r.record(dd.is_zero(), || g.key());
    }
    r
}

pub fn check_graded_commutativity(pairs: &[(DirectedGraph, DirectedGraph)]) -> AxiomReport {
    let mut r = AxiomReport::new("graded commutativity");
    for (a, b) in pairs {
        let ab = product(&single(a), &single(b));
        let ba = product(&single(b), &single(a)).scaled(&sign_of_degree(degree(a) * degree(b)));
        r.record(ab == ba, || format!("{} * {}", a.key(), b.key()));
    }
    r
}

pub fn check_leibniz(pairs: &[(DirectedGraph, DirectedGraph)], c: &ClassPredicate) -> AxiomReport {
    let mut r = AxiomReport::new("Leibniz rule for d");
    for (a, b) in pairs {
        let lhs = differential(&product(&single(a), &single(b)), c);
        let mut rhs = product(&differential_graph(a, c), &single(b));
        rhs.add_scaled(
            &product(&single(a), &differential_graph(b, c)),
            &sign_of_degree(degree(a)),
        );
        r.record(lhs == rhs, || format!("{} * {}", a.key(), b.key()));
    }
    r
}

pub fn check_coassociativity(graphs: &[DirectedGraph], c: &ClassPredicate) -> AxiomReport {
    let mut r = AxiomReport::new("coassociativity");
    for g in graphs {
        let delta = full_coproduct_graph(g, c);
        let left = apply_in_slot(&delta, 0, 0, |x| full_coproduct_graph(x, c));
        let right = apply_in_slot(&delta, 1, 0, |x| full_coproduct_graph(x, c));
        r.record(left == right, || g.key());
    }
    r
}

pub fn check_coderivation(graphs: &[DirectedGraph], c: &ClassPredicate) -> AxiomReport {
    let mut r = AxiomReport::new("coderivation");
    for g in graphs {
        let lhs = differential_graph(g, c).map_linear(|x| reduced_coproduct_graph(x, c));
        let rhs = d_tensor(&reduced_coproduct_graph(g, c), c);
        r.record(lhs == rhs, || g.key());
    }
    r
}

pub fn check_multiplicativity(pairs: &[(DirectedGraph, DirectedGraph)], c: &ClassPredicate) -> AxiomReport {
    let mut r = AxiomReport::new("coproduct multiplicativity");
    for (a, b) in pairs {
        let lhs = coproduct(&product(&single(a), &single(b)), c);
        let rhs = tensor2_product(&full_coproduct_graph(a, c), &full_coproduct_graph(b, c));
        r.record(lhs == rhs, || format!("{} * {}", a.key(), b.key()));
    }
    r
}

pub fn check_counit(graphs: &[DirectedGraph], c: &ClassPredicate) -> AxiomReport {
    let mut r = AxiomReport::new("counit laws");
    for g in graphs {
        let delta = full_coproduct_graph(g, c);
        let mut left = GraphVector::zero();
        let mut right = GraphVector::zero();
        for (k, coeff) in delta.iter() {
            left.add_scaled(&single(&k[1]), &(coeff * counit(&single(&k[0]))));
            right.add_scaled(&single(&k[0]), &(coeff * counit(&single(&k[1]))));
        }
        let id = single(g);
        r.record(left == id && right == id, || g.key());
    }
    r
}

/// Both convolution identities `m(S⊗id)Δ = m(id⊗S)Δ = unit∘counit`.
pub fn check_antipode(graphs: &[DirectedGraph], c: &ClassPredicate) -> (AxiomReport, AxiomReport) {
    let mut left_r = AxiomReport::new("antipode m(S⊗id)Δ");
    let mut right_r = AxiomReport::new("antipode m(id⊗S)Δ");
    let mut s = Antipode::new(*c);
    for g in graphs {
        let delta = full_coproduct_graph(g, c);
        let expect = unit().scaled(&counit(&single(g)));
        let mut left = GraphVector::zero();
        let mut right = GraphVector::zero();
        for (k, coeff) in delta.iter() {
            left.add_scaled(&product(&s.of_graph(&k[0]), &single(&k[1])), coeff);
            right.add_scaled(&product(&single(&k[0]), &s.of_graph(&k[1])), coeff);
        }
        left_r.record(left == expect, || g.key());
        right_r.record(right == expect, || g.key());
    }
    (left_r, right_r)
}

/// Products of two basis graphs together with their factor pair.
pub fn product_graph_list(pairs: &[(DirectedGraph, DirectedGraph)]) -> Vec<DirectedGraph> {
    let mut out: Vec<DirectedGraph> = pairs
        .iter()
        .map(|(a, b)| product_graphs(a, b))
        .filter(|t| t.sign != 0)
        .map(|t| t.graph)
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Ranges of the Hopf identity suite: single graphs with `n ≤ max_n`,
/// `m ≤ max_m` and excess in `excesses`, plus products of pairs drawn from
/// the smaller universe `n ≤ pair_max_n`, `m ≤ pair_max_m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteRange {
    pub max_n: usize,
    pub max_m: usize,
    pub excesses: Vec<i64>,
    pub pair_max_n: usize,
    pub pair_max_m: usize,
}

/// Runs every Hopf identity over a range. Unary identities run on the
/// single graphs and on the products of the pairs; binary identities run on
/// the pairs.
pub fn hopf_suite(range: &SuiteRange, c: &ClassPredicate) -> Vec<AxiomReport> {
    let singles = graph_universe(range.max_n, range.max_m, &range.excesses, c);
    let small = graph_universe(range.pair_max_n, range.pair_max_m, &range.excesses, c);
    let pairs: Vec<(DirectedGraph, DirectedGraph)> = small
        .iter()
        .flat_map(|a| small.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    let mut unary = singles;
    unary.extend(product_graph_list(&pairs));
    unary.sort();
    unary.dedup();
    let (left, right) = check_antipode(&unary, c);
    vec![
        check_d_squared(&unary, c),
        check_graded_commutativity(&pairs),
        check_leibniz(&pairs, c),
        check_coassociativity(&unary, c),
        check_coderivation(&unary, c),
        check_multiplicativity(&pairs, c),
        check_counit(&unary, c),
        left,
        right,
    ]
}
