//! The free module on orientation classes with its product, coproduct,
//! differential, counit and antipode.
//!
//! Koszul signs use the edge count as degree; the empty graph is the unit.

use std::collections::HashMap;

use num_traits::One;

use crate::graph::{
    canonicalize, collapse_normal_subgraph, contract_edge, normal_subsets_of, ClassPredicate, DirectedGraph,
    OrientedGraphTerm, Target,
};
use crate::lincomb::{q, LinComb, Q};

pub type GraphVector = LinComb<DirectedGraph>;
/// Elements of tensor powers; every key has the same length within one vector.
pub type TensorVector = LinComb<Vec<DirectedGraph>>;

pub fn unit() -> GraphVector {
    GraphVector::single(DirectedGraph::empty(), Q::one())
}

pub fn from_term(t: &OrientedGraphTerm) -> GraphVector {
    GraphVector::single(t.graph.clone(), q(t.sign as i64))
}

pub fn from_graph(g: &DirectedGraph) -> GraphVector {
    from_term(&canonicalize(g))
}

pub fn degree(g: &DirectedGraph) -> usize {
    g.edge_count()
}

fn koszul(a: usize, b: usize) -> Q {
    if a % 2 == 1 && b % 2 == 1 {
        q(-1)
    } else {
        Q::one()
    }
}

/// Disjoint union with the second graph's labels shifted after the first's.
pub fn disjoint_union(a: &DirectedGraph, b: &DirectedGraph) -> DirectedGraph {
    let shift = |t: &Target| match *t {
        Target::Internal(i) => Target::Internal(i + a.n()),
        Target::Boundary(j) => Target::Boundary(j + a.m()),
    };
    let mut out: Vec<Vec<Target>> = a.out_edges().to_vec();
    out.extend(b.out_edges().iter().map(|ts| ts.iter().map(shift).collect()));
    DirectedGraph::from_parts_unchecked(a.n() + b.n(), a.m() + b.m(), out)
}

pub fn product_graphs(a: &DirectedGraph, b: &DirectedGraph) -> OrientedGraphTerm {
    canonicalize(&disjoint_union(a, b))
}

pub fn product(a: &GraphVector, b: &GraphVector) -> GraphVector {
    let mut out = GraphVector::zero();
    for (ga, ca) in a.iter() {
        for (gb, cb) in b.iter() {
            let t = product_graphs(ga, gb);
            if t.sign != 0 {
                out.add_term(t.graph, ca * cb * q(t.sign as i64));
            }
        }
    }
    out
}

/// Reduced coproduct of a single canonical graph.
pub fn reduced_coproduct_graph(g: &DirectedGraph, c: &ClassPredicate) -> TensorVector {
    let t = OrientedGraphTerm {
        graph: g.clone(),
        sign: 1,
    };
    let mut out = TensorVector::zero();
    for w in normal_subsets_of(g, c) {
        if let Ok(Some(col)) = collapse_normal_subgraph(&t, &w, c) {
            let s = col.sign();
            if s != 0 {
                out.add_term(vec![col.sub.graph, col.quotient.graph], q(s as i64));
            }
        }
    }
    out
}

pub fn reduced_coproduct(a: &GraphVector, c: &ClassPredicate) -> TensorVector {
    a.map_linear(|g| reduced_coproduct_graph(g, c))
}

pub fn coproduct(a: &GraphVector, c: &ClassPredicate) -> TensorVector {
    a.map_linear(|g| {
        let mut v = reduced_coproduct_graph(g, c);
        if g.is_empty_graph() {
            v.add_term(vec![g.clone(), g.clone()], Q::one());
        } else {
            v.add_term(vec![g.clone(), DirectedGraph::empty()], Q::one());
            v.add_term(vec![DirectedGraph::empty(), g.clone()], Q::one());
        }
        v
    })
}

pub fn differential_graph(g: &DirectedGraph, c: &ClassPredicate) -> GraphVector {
    let t = OrientedGraphTerm {
        graph: g.clone(),
        sign: 1,
    };
    let mut out = GraphVector::zero();
    for (idx, (s, target)) in g.edges().into_iter().enumerate() {
        if let Target::Internal(v) = target {
            if v == s {
                continue;
            }
            if let Ok(Some(r)) = contract_edge(&t, idx, c) {
                out.add_term(r.graph, q(r.sign as i64));
            }
        }
    }
    out
}

pub fn differential(a: &GraphVector, c: &ClassPredicate) -> GraphVector {
    a.map_linear(|g| differential_graph(g, c))
}

pub fn counit(a: &GraphVector) -> Q {
    a.coeff(&DirectedGraph::empty())
}

/// Recursive antipode with a per-instance memo table keyed on canonical graphs.
#[derive(Debug, Default)]
pub struct Antipode {
    class: ClassPredicate,
    memo: HashMap<DirectedGraph, GraphVector>,
}

impl Antipode {
    pub fn new(class: ClassPredicate) -> Self {
        Antipode {
            class,
            memo: HashMap::new(),
        }
    }

    pub fn of_graph(&mut self, g: &DirectedGraph) -> GraphVector {
        if let Some(v) = self.memo.get(g) {
            return v.clone();
        }
        let result = if g.is_empty_graph() {
            unit()
        } else {
            let mut s = GraphVector::single(g.clone(), q(-1));
            let split = reduced_coproduct_graph(g, &self.class);
            for (pair, coeff) in split.iter() {
                let left = self.of_graph(&pair[0]);
                let right = GraphVector::single(pair[1].clone(), Q::one());
                s.add_scaled(&product(&left, &right), &-coeff.clone());
            }
            s
        };
        self.memo.insert(g.clone(), result.clone());
        result
    }

    pub fn apply(&mut self, a: &GraphVector) -> GraphVector {
        let mut out = GraphVector::zero();
        for (g, c) in a.iter() {
            out.add_scaled(&self.of_graph(g), c);
        }
        out
    }
}

pub fn antipode(a: &GraphVector, c: &ClassPredicate) -> GraphVector {
    Antipode::new(*c).apply(a)
}

/// Splits `g` into connected factors whose boundary vertices form
/// consecutive blocks in increasing order (boundary-free factors first), so
/// that `[g] = sign · [F1]···[Fk]` with canonical `Fi`. `None` when the
/// boundary blocks interleave, i.e. `g` is not such a product.
pub fn connected_factors(g: &DirectedGraph) -> Option<(i8, Vec<DirectedGraph>)> {
    let (n, m) = (g.n(), g.m());
    let mut parent: Vec<usize> = (0..n + m).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for (s, t) in g.edges() {
        let tv = match t {
            Target::Internal(i) => i,
            Target::Boundary(j) => n + j,
        };
        let (a, b) = (find(&mut parent, s), find(&mut parent, tv));
        parent[a] = b;
    }
    // group vertices by component, ordered by first vertex
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for v in 0..n + m {
        let r = find(&mut parent, v);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, members)) => members.push(v),
            None => groups.push((r, vec![v])),
        }
    }
    let mut internal_only: Vec<Vec<usize>> = Vec::new();
    let mut with_boundary: Vec<Vec<usize>> = Vec::new();
    for (_, members) in groups {
        if members.iter().any(|&v| v >= n) {
            with_boundary.push(members);
        } else {
            internal_only.push(members);
        }
    }
    with_boundary.sort_by_key(|ms| *ms.iter().find(|&&v| v >= n).expect("has boundary"));
    // boundary blocks must tile 0..m in order
    let mut next_bd = n;
    for ms in &with_boundary {
        for &v in ms.iter().filter(|&&v| v >= n) {
            if v != next_bd {
                return None;
            }
            next_bd += 1;
        }
    }
    let mut factors = Vec::new();
    let mut concat = DirectedGraph::empty();
    let mut sign: i8 = 1;
    for ms in internal_only.iter().chain(with_boundary.iter()) {
        let internal: Vec<usize> = ms.iter().copied().filter(|&v| v < n).collect();
        let bd_start = ms.iter().copied().find(|&v| v >= n).map_or(0, |v| v - n);
        let bd_len = ms.iter().filter(|&&v| v >= n).count();
        let local = |v: usize| internal.iter().position(|&u| u == v).expect("same component");
        let out: Vec<Vec<Target>> = internal
            .iter()
            .map(|&v| {
                g.out_edges()[v]
                    .iter()
                    .map(|t| match *t {
                        Target::Internal(i) => Target::Internal(local(i)),
                        Target::Boundary(j) => Target::Boundary(j - bd_start),
                    })
                    .collect()
            })
            .collect();
        let labeled = DirectedGraph::from_parts_unchecked(internal.len(), bd_len, out);
        let f = canonicalize(&labeled);
        sign *= f.sign;
        factors.push(f.graph);
        concat = disjoint_union(&concat, &labeled);
    }
    // the concatenation is a relabeling of g: [concat] = s·[g]
    sign *= canonicalize(&concat).sign;
    Some((sign, factors))
}

/// Tensor of two elements, concatenating keys.
pub fn tensor(a: &TensorVector, b: &TensorVector) -> TensorVector {
    let mut out = TensorVector::zero();
    for (ka, ca) in a.iter() {
        for (kb, cb) in b.iter() {
            let mut k = ka.clone();
            k.extend(kb.iter().cloned());
            out.add_term(k, ca * cb);
        }
    }
    out
}

pub fn as_tensor1(a: &GraphVector) -> TensorVector {
    a.iter().map(|(g, c)| (vec![g.clone()], c.clone())).collect()
}

/// Applies a linear map `H -> H^{⊗k}` in slot `slot`, with the Koszul sign
/// `(-1)^{map_degree * deg(left factors)}`.
pub fn apply_in_slot(
    v: &TensorVector,
    slot: usize,
    map_degree: usize,
    mut f: impl FnMut(&DirectedGraph) -> TensorVector,
) -> TensorVector {
    let mut out = TensorVector::zero();
    for (key, c) in v.iter() {
        let left_deg: usize = key[..slot].iter().map(degree).sum();
        let sign = koszul(map_degree, left_deg);
        let image = f(&key[slot]);
        for (ik, ic) in image.iter() {
            let mut k: Vec<DirectedGraph> = key[..slot].to_vec();
            k.extend(ik.iter().cloned());
            k.extend(key[slot + 1..].iter().cloned());
            out.add_term(k, c * ic * &sign);
        }
    }
    out
}

/// Componentwise product on `H ⊗ H`: `(a⊗b)(c⊗d) = (-1)^{|b||c|} ac ⊗ bd`.
pub fn tensor2_product(x: &TensorVector, y: &TensorVector) -> TensorVector {
    let mut out = TensorVector::zero();
    for (kx, cx) in x.iter() {
        for (ky, cy) in y.iter() {
            let s = koszul(degree(&kx[1]), degree(&ky[0]));
            let left = product_graphs(&kx[0], &ky[0]);
            let right = product_graphs(&kx[1], &ky[1]);
            let sign = left.sign as i64 * right.sign as i64;
            if sign != 0 {
                out.add_term(vec![left.graph, right.graph], cx * cy * s * q(sign));
            }
        }
    }
    out
}

/// Multiplies the two tensor factors: `m(a ⊗ b) = ab`.
pub fn multiply_factors(v: &TensorVector) -> GraphVector {
    let mut out = GraphVector::zero();
    for (k, c) in v.iter() {
        let t = product_graphs(&k[0], &k[1]);
        if t.sign != 0 {
            out.add_term(t.graph, c * q(t.sign as i64));
        }
    }
    out
}

pub fn is_homogeneous(a: &GraphVector) -> Option<usize> {
    let mut degs = a.keys().map(degree);
    let first = degs.next()?;
    degs.all(|d| d == first).then_some(first)
}

pub fn sign_of_degree(d: usize) -> Q {
    if d % 2 == 0 {
        Q::one()
    } else {
        -Q::one()
    }
}
