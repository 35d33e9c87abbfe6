//! The cobar complex of the graph coalgebra: words of non-empty graphs, the
//! total differential `D = D_d + D_Δ`, weight functionals and their
//! coboundary `δW`, and truncated ranks of the dual differential.
//!
//! Sign conventions (degree of a letter = edges − 1):
//! * both parts act as graded derivations, picking up `(-1)^{Σ (e_j − 1)}`
//!   over the letters to the left of the one acted on;
//! * splicing `Δ_b Γ = Σ γ⊗γ'` into a word carries the extra sign
//!   `(-1)^{e_γ}` (suspension of the left factor). With it, `D_d D_Δ +
//!   D_Δ D_d = 0` is exactly the coderivation identity and `D_Δ² = 0` is
//!   exactly coassociativity of `Δ_b`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::algebra::{connected_factors, differential_graph, reduced_coproduct_graph};
use crate::graph::{canonicalize, enumerate_graphs, ClassPredicate, DirectedGraph, OrientedGraphTerm};
use crate::linalg::{Echelon, SparseRow};
use crate::lincomb::{format_q, parse_q, q, LinComb, Q};

/// A word of canonical non-empty graphs.
pub type CobarWord = Vec<DirectedGraph>;
pub type CobarVector = LinComb<CobarWord>;

/// Separator between letters in serialized words.
pub const WORD_SEPARATOR: &str = " ⊗ ";

pub fn cobar_degree(word: &[DirectedGraph]) -> i64 {
    word.iter().map(|g| g.edge_count() as i64 - 1).sum()
}

pub fn word_key(word: &[DirectedGraph]) -> String {
    word.iter().map(|g| g.key()).collect::<Vec<_>>().join(WORD_SEPARATOR)
}

pub fn word_from_key(key: &str) -> Result<CobarWord, String> {
    key.split(WORD_SEPARATOR.trim())
        .map(|k| {
            let g = DirectedGraph::from_key(k.trim())?;
            if g.is_empty_graph() {
                return Err("cobar letters must be non-empty graphs".to_string());
            }
            Ok(g)
        })
        .collect()
}

fn parity(k: i64) -> Q {
    if k.rem_euclid(2) == 0 {
        Q::one()
    } else {
        -Q::one()
    }
}

/// One-letter word vector `[Γ]` with the sign of the term.
pub fn letter(t: &OrientedGraphTerm) -> CobarVector {
    if t.sign == 0 || t.graph.is_empty_graph() {
        return CobarVector::zero();
    }
    CobarVector::single(vec![t.graph.clone()], q(t.sign as i64))
}

/// Memoizes the per-letter images `d` and `Δ_b` used by the differential.
#[derive(Debug, Default)]
pub struct CobarDifferential {
    class: ClassPredicate,
    d_cache: HashMap<DirectedGraph, Vec<(DirectedGraph, Q)>>,
    split_cache: HashMap<DirectedGraph, Vec<(DirectedGraph, DirectedGraph, Q)>>,
}

impl CobarDifferential {
    pub fn new(class: ClassPredicate) -> Self {
        CobarDifferential {
            class,
            ..Default::default()
        }
    }

    fn d_of(&mut self, g: &DirectedGraph) -> &[(DirectedGraph, Q)] {
        let c = self.class;
        self.d_cache.entry(g.clone()).or_insert_with(|| {
            differential_graph(g, &c)
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect()
        })
    }

    fn split_of(&mut self, g: &DirectedGraph) -> &[(DirectedGraph, DirectedGraph, Q)] {
        let c = self.class;
        self.split_cache.entry(g.clone()).or_insert_with(|| {
            reduced_coproduct_graph(g, &c)
                .iter()
                .map(|(k, v)| {
                    let s = parity(k[0].edge_count() as i64);
                    (k[0].clone(), k[1].clone(), v * s)
                })
                .collect()
        })
    }

    /// `D_d` on a single word.
    pub fn d_part(&mut self, word: &[DirectedGraph]) -> CobarVector {
        let mut out = CobarVector::zero();
        let mut left = 0i64;
        for (pos, g) in word.iter().enumerate() {
            let sign = parity(left);
            for (img, c) in self.d_of(g).to_vec() {
                let mut w = word.to_vec();
                w[pos] = img;
                out.add_term(w, c * &sign);
            }
            left += g.edge_count() as i64 - 1;
        }
        out
    }

    /// `D_Δ` on a single word.
    pub fn splice_part(&mut self, word: &[DirectedGraph]) -> CobarVector {
        let mut out = CobarVector::zero();
        let mut left = 0i64;
        for (pos, g) in word.iter().enumerate() {
            let sign = parity(left);
            for (a, b, c) in self.split_of(g).to_vec() {
                let mut w = Vec::with_capacity(word.len() + 1);
                w.extend_from_slice(&word[..pos]);
                w.push(a);
                w.push(b);
                w.extend_from_slice(&word[pos + 1..]);
                out.add_term(w, c * &sign);
            }
            left += g.edge_count() as i64 - 1;
        }
        out
    }

    pub fn word(&mut self, word: &[DirectedGraph]) -> CobarVector {
        let mut out = self.d_part(word);
        out.add(&self.splice_part(word));
        out
    }

    pub fn apply(&mut self, v: &CobarVector) -> CobarVector {
        let mut out = CobarVector::zero();
        for (w, c) in v.iter() {
            out.add_scaled(&self.word(w), c);
        }
        out
    }
}

/// Total cobar differential `D = D_d + D_Δ`.
pub fn cobar_differential(v: &CobarVector, c: &ClassPredicate) -> CobarVector {
    CobarDifferential::new(*c).apply(v)
}

/// A multiplicative rational functional on graphs. Values are looked up in
/// the table first; graphs absent from it that split into connected factors
/// (boundary blocks in order) evaluate to the signed product of their
/// factors' values; everything else is zero. The empty graph has value 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightFunctional {
    table: BTreeMap<DirectedGraph, Q>,
}

impl WeightFunctional {
    pub fn new() -> Self {
        WeightFunctional::default()
    }

    /// Sets the value on the orientation class of `g` (any labeling; the
    /// value is transported to the canonical representative with its sign).
    /// Degenerate classes are ignored since they are zero in the algebra.
    pub fn set(&mut self, g: &DirectedGraph, value: Q) {
        let t = canonicalize(g);
        if t.sign == 0 || t.graph.is_empty_graph() {
            return;
        }
        let v = value * q(t.sign as i64);
        if v.is_zero() {
            self.table.remove(&t.graph);
        } else {
            self.table.insert(t.graph, v);
        }
    }

    pub fn table(&self) -> &BTreeMap<DirectedGraph, Q> {
        &self.table
    }

    /// Value on a canonical graph.
    pub fn eval_graph(&self, g: &DirectedGraph) -> Q {
        if g.is_empty_graph() {
            return Q::one();
        }
        if let Some(v) = self.table.get(g) {
            return v.clone();
        }
        match connected_factors(g) {
            Some((sign, factors)) if factors.len() >= 2 && sign != 0 => {
                let mut v = q(sign as i64);
                for f in &factors {
                    v *= self.eval_graph(f);
                    if v.is_zero() {
                        break;
                    }
                }
                v
            }
            _ => Q::zero(),
        }
    }

    pub fn eval(&self, v: &LinComb<DirectedGraph>) -> Q {
        v.iter()
            .map(|(g, c)| c * self.eval_graph(g))
            .fold(Q::zero(), |a, b| a + b)
    }

    pub fn eval_term(&self, t: &OrientedGraphTerm) -> Q {
        self.eval_graph(&t.graph) * q(t.sign as i64)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .table
            .iter()
            .map(|(g, v)| (g.key(), serde_json::Value::String(format_q(v))))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: BTreeMap<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| format!("weight table: {e}"))?;
        let mut w = WeightFunctional::new();
        for (k, v) in raw {
            let g = DirectedGraph::from_key(&k).map_err(|e| format!("weight key `{k}`: {e}"))?;
            let value = match v {
                serde_json::Value::String(s) => parse_q(&s)?,
                serde_json::Value::Number(n) => parse_q(&n.to_string())?,
                other => return Err(format!("weight value for `{k}` must be a rational string, got {other}")),
            };
            if g.is_empty_graph() {
                if value != Q::one() {
                    return Err("the empty graph has fixed weight 1".to_string());
                }
                continue;
            }
            w.set(&g, value);
        }
        Ok(w)
    }
}

/// `δW(Γ) = W(dΓ) + W(Δ_b Γ)` where `W(γ⊗γ') = W(γ)W(γ')`.
pub fn delta_on_weight(w: &WeightFunctional, t: &OrientedGraphTerm, c: &ClassPredicate) -> Q {
    if t.sign == 0 {
        return Q::zero();
    }
    let mut total = w.eval(&differential_graph(&t.graph, c));
    for (k, coeff) in reduced_coproduct_graph(&t.graph, c).iter() {
        total += coeff * w.eval_graph(&k[0]) * w.eval_graph(&k[1]);
    }
    total * q(t.sign as i64)
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct CocycleWitness {
    pub graph: String,
    pub delta_w: String,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct CocycleReport {
    pub cocycle: bool,
    pub graphs_checked: usize,
    pub witnesses: Vec<CocycleWitness>,
}

/// Checks `δW = 0` on every graph of excess −1 with `n ≤ n_max`, `m ≤ m_max`.
pub fn is_cocycle(w: &WeightFunctional, n_max: usize, m_max: usize, c: &ClassPredicate) -> CocycleReport {
    let mut witnesses = Vec::new();
    let mut checked = 0;
    for n in 0..=n_max {
        for m in 0..=m_max {
            for t in enumerate_graphs(n, m, -1, c) {
                checked += 1;
                let v = delta_on_weight(w, &t, c);
                if !v.is_zero() {
                    witnesses.push(CocycleWitness {
                        graph: t.graph.key(),
                        delta_w: format_q(&v),
                    });
                }
            }
        }
    }
    CocycleReport {
        cocycle: witnesses.is_empty(),
        graphs_checked: checked,
        witnesses,
    }
}

/// A rational functional on cobar words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DualCochain {
    pub values: BTreeMap<CobarWord, Q>,
}

impl DualCochain {
    /// The character of `w` on words of length ≤ `max_len` built from
    /// `letters`: `[a1,…,ak] ↦ (-1)^{Σ_i (k−i)·e(a_i)} Π W(a_i)`. The sign
    /// undoes the suspension signs of the splice, so pairing with `D[Γ]`
    /// reproduces `δW(Γ)`.
    pub fn character(w: &WeightFunctional, letters: &[DirectedGraph], max_len: usize) -> Self {
        let mut values = BTreeMap::new();
        let mut frontier: Vec<(CobarWord, Q)> = vec![(Vec::new(), Q::one())];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for (word, v) in &frontier {
                for g in letters {
                    let val = w.eval_graph(g);
                    if val.is_zero() {
                        continue;
                    }
                    let mut nw = word.clone();
                    nw.push(g.clone());
                    next.push((nw, v * val));
                }
            }
            for (word, v) in &next {
                values.insert(word.clone(), v * Self::suspension_sign(word));
            }
            frontier = next;
        }
        DualCochain { values }
    }

    fn suspension_sign(word: &[DirectedGraph]) -> Q {
        let k = word.len();
        parity(
            word.iter()
                .enumerate()
                .map(|(i, g)| ((k - 1 - i) * g.edge_count()) as i64)
                .sum(),
        )
    }

    pub fn pair(&self, v: &CobarVector) -> Q {
        v.iter()
            .map(|(w, c)| self.values.get(w).map_or_else(Q::zero, |x| x * c))
            .fold(Q::zero(), |a, b| a + b)
    }
}

/// Bounds of a truncated cobar complex: total edges and word length, plus
/// per-letter vertex bounds (edgeless letters `B_m` exist for every `m`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Truncation {
    pub max_edges: usize,
    pub max_len: usize,
    pub max_n: usize,
    pub max_m: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct RankRecord {
    pub degree: i64,
    pub dim: usize,
    /// rank of `δ` leaving this degree (= rank of `D` into it)
    pub rank: usize,
    pub nullity: usize,
    /// basis words of this degree whose `D`-image leaves the truncation
    pub escaped: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct RankReport {
    pub truncation: Truncation,
    pub basis_size: usize,
    pub records: Vec<RankRecord>,
    /// basis words `w` with `D w` inside the truncation and `D(D w) ≠ 0`
    pub d_squared_failures: usize,
    pub d_squared_witnesses: Vec<String>,
    /// `rank δ_{k−1} + rank δ_k ≤ dim_k` for every `k`, and the truncated
    /// matrices compose to zero
    pub image_in_kernel: bool,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CobarError {
    #[error("truncation too large: {basis} basis words exceed the limit of {limit}")]
    TooLarge { basis: usize, limit: usize },
}

/// Default cap on the number of basis words of a truncation.
pub const BASIS_LIMIT: usize = 10_000;

/// Letters admitted by a truncation: canonical non-empty graphs with at
/// most `max_edges` edges, `n ≤ max_n`, `m ≤ max_m`.
pub fn truncation_letters(tr: &Truncation, c: &ClassPredicate) -> Vec<DirectedGraph> {
    let mut out = BTreeSet::new();
    for n in 0..=tr.max_n {
        for m in 0..=tr.max_m {
            for e in 0..=tr.max_edges as i64 {
                let l = e - 2 * n as i64 - m as i64 + 2;
                for t in enumerate_graphs(n, m, l, c) {
                    if !t.graph.is_empty_graph() {
                        out.insert(t.graph);
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// All words of length `1..=max_len` over `letters` with total edge count at
/// most `max_edges`.
pub fn truncation_words(
    letters: &[DirectedGraph],
    max_edges: usize,
    max_len: usize,
    limit: usize,
) -> Result<Vec<CobarWord>, CobarError> {
    let mut out: Vec<CobarWord> = Vec::new();
    let mut frontier: Vec<(CobarWord, usize)> = vec![(Vec::new(), 0)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (w, e) in &frontier {
            for g in letters {
                let e2 = e + g.edge_count();
                if e2 <= max_edges {
                    let mut nw = w.clone();
                    nw.push(g.clone());
                    next.push((nw, e2));
                }
            }
        }
        out.extend(next.iter().map(|(w, _)| w.clone()));
        if out.len() > limit {
            return Err(CobarError::TooLarge {
                basis: out.len(),
                limit,
            });
        }
        frontier = next;
    }
    Ok(out)
}

fn in_truncation(word: &[DirectedGraph], tr: &Truncation) -> bool {
    word.len() <= tr.max_len
        && word.iter().map(|g| g.edge_count()).sum::<usize>() <= tr.max_edges
        && word.iter().all(|g| g.n() <= tr.max_n && g.m() <= tr.max_m)
}

fn to_integer_row(v: &CobarVector, index: &HashMap<CobarWord, usize>) -> SparseRow {
    let mut entries: Vec<(usize, Q)> = v
        .iter()
        .filter_map(|(w, c)| index.get(w).map(|&i| (i, c.clone())))
        .collect();
    entries.sort_by_key(|(i, _)| *i);
    crate::linalg::integer_row(entries)
}

/// Ranks of the dual differential on a truncated cobar complex.
pub fn truncated_cohomology_ranks(tr: &Truncation, c: &ClassPredicate, limit: usize) -> Result<RankReport, CobarError> {
    let letters = truncation_letters(tr, c);
    let words = truncation_words(&letters, tr.max_edges, tr.max_len, limit)?;
    let index: HashMap<CobarWord, usize> = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let mut dd = CobarDifferential::new(*c);

    let mut by_degree: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, w) in words.iter().enumerate() {
        by_degree.entry(cobar_degree(w)).or_default().push(i);
    }

    // D restricted to the truncation, one row per basis word
    let mut images: Vec<CobarVector> = Vec::with_capacity(words.len());
    let mut escaped = vec![false; words.len()];
    for (i, w) in words.iter().enumerate() {
        let full = dd.word(w);
        let mut kept = CobarVector::zero();
        for (img, coeff) in full.iter() {
            if in_truncation(img, tr) {
                kept.add_term(img.clone(), coeff.clone());
            } else {
                escaped[i] = true;
            }
        }
        images.push(kept);
    }

    // D²: exact on words whose image stays inside, and for truncated matrices
    let mut d_squared_failures = 0;
    let mut d_squared_witnesses = Vec::new();
    let mut truncated_square_zero = true;
    for (i, w) in words.iter().enumerate() {
        let mut sq = CobarVector::zero();
        let mut sq_full = CobarVector::zero();
        for (img, coeff) in images[i].iter() {
            let j = index[img];
            sq.add_scaled(&images[j], coeff);
            if !escaped[i] {
                sq_full.add_scaled(&dd.word(img), coeff);
            }
        }
        if !sq.is_zero() {
            truncated_square_zero = false;
        }
        if !escaped[i] && !sq_full.is_zero() {
            d_squared_failures += 1;
            if d_squared_witnesses.len() < 5 {
                d_squared_witnesses.push(word_key(w));
            }
        }
    }

    // rank of D from degree k+1 into degree k equals rank of δ out of degree k
    let mut rank_into: BTreeMap<i64, usize> = BTreeMap::new();
    for (&deg, members) in &by_degree {
        let mut e = Echelon::new();
        let mut rows: Vec<SparseRow> = members.iter().map(|&i| to_integer_row(&images[i], &index)).collect();
        rows.sort_by_key(|r| r.len());
        for r in rows {
            if !r.is_empty() {
                e.insert(r);
            }
        }
        rank_into.insert(deg - 1, e.rank());
    }

    let mut records = Vec::new();
    let mut image_in_kernel = truncated_square_zero;
    for (&deg, members) in &by_degree {
        let dim = members.len();
        let rank = rank_into.get(&deg).copied().unwrap_or(0);
        let incoming = rank_into.get(&(deg - 1)).copied().unwrap_or(0);
        if incoming + rank > dim {
            image_in_kernel = false;
        }
        records.push(RankRecord {
            degree: deg,
            dim,
            rank,
            nullity: dim - rank,
            escaped: members.iter().filter(|&&i| escaped[i]).count(),
        });
    }

    Ok(RankReport {
        truncation: *tr,
        basis_size: words.len(),
        records,
        d_squared_failures,
        d_squared_witnesses,
        image_in_kernel,
    })
}

/// Ranges of the `D² = 0` word suite. Letters are the canonical non-empty
/// graphs with at most `letter_edges` edges, `n ≤ max_n`, `m ≤ max_m`.
/// Words of length ≤ `exhaustive_len` are checked exhaustively; longer words
/// up to `max_len` exhaustively when their total edge count is at most
/// `exhaustive_edges`, plus `samples` seeded random words of each longer
/// length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WordSuite {
    pub letter_edges: usize,
    pub max_n: usize,
    pub max_m: usize,
    pub max_len: usize,
    pub exhaustive_len: usize,
    pub exhaustive_edges: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct DSquaredReport {
    pub suite: WordSuite,
    pub seed: u64,
    pub letters: usize,
    pub words_checked: usize,
    pub failures: usize,
    /// keys of the first failing words
    pub witnesses: Vec<String>,
}

impl DSquaredReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// The cobar differential on interned letters with integer coefficients
/// (the images of `d` and `Δ_b` on basis graphs are integral). Used by the
/// word suite, where words number in the hundreds of thousands.
struct InternedDifferential {
    class: ClassPredicate,
    ids: HashMap<DirectedGraph, u32>,
    graphs: Vec<DirectedGraph>,
    /// per letter: edge count, `d` image, signed `Δ_b` splits
    images: Vec<Option<(i64, Vec<(u32, i64)>, Vec<(u32, u32, i64)>)>>,
}

impl InternedDifferential {
    fn new(class: ClassPredicate) -> Self {
        InternedDifferential {
            class,
            ids: HashMap::new(),
            graphs: Vec::new(),
            images: Vec::new(),
        }
    }

    fn intern(&mut self, g: &DirectedGraph) -> u32 {
        if let Some(&i) = self.ids.get(g) {
            return i;
        }
        let i = self.graphs.len() as u32;
        self.ids.insert(g.clone(), i);
        self.graphs.push(g.clone());
        self.images.push(None);
        i
    }

    fn integral(c: &Q) -> i64 {
        assert!(c.is_integer(), "non-integral structure constant {c}");
        i64::try_from(c.to_integer()).expect("structure constant fits in i64")
    }

    fn images(&mut self, id: u32) -> (i64, Vec<(u32, i64)>, Vec<(u32, u32, i64)>) {
        if let Some(img) = &self.images[id as usize] {
            return img.clone();
        }
        let g = self.graphs[id as usize].clone();
        let d: Vec<(u32, i64)> = differential_graph(&g, &self.class)
            .iter()
            .map(|(k, c)| (self.intern(k), Self::integral(c)))
            .collect();
        let split: Vec<(u32, u32, i64)> = reduced_coproduct_graph(&g, &self.class)
            .iter()
            .map(|(k, c)| {
                let s = if k[0].edge_count() % 2 == 0 { 1 } else { -1 };
                (self.intern(&k[0]), self.intern(&k[1]), s * Self::integral(c))
            })
            .collect();
        let img = (g.edge_count() as i64, d, split);
        self.images[id as usize] = Some(img.clone());
        img
    }

    fn word(&mut self, word: &[u32], scale: i64, out: &mut HashMap<Vec<u32>, i64>) {
        let mut left = 0i64;
        for pos in 0..word.len() {
            let (edges, d, split) = self.images(word[pos]);
            let sign = if left % 2 == 0 { scale } else { -scale };
            for (img, c) in d {
                let mut w = word.to_vec();
                w[pos] = img;
                *out.entry(w).or_insert(0) += c * sign;
            }
            for (a, b, c) in split {
                let mut w = Vec::with_capacity(word.len() + 1);
                w.extend_from_slice(&word[..pos]);
                w.push(a);
                w.push(b);
                w.extend_from_slice(&word[pos + 1..]);
                *out.entry(w).or_insert(0) += c * sign;
            }
            left += edges - 1;
        }
    }

    fn d_squared_vanishes(&mut self, word: &[u32]) -> bool {
        let mut once = HashMap::new();
        self.word(word, 1, &mut once);
        let mut twice = HashMap::new();
        for (w, c) in once {
            if c != 0 {
                self.word(&w, c, &mut twice);
            }
        }
        twice.values().all(|&c| c == 0)
    }
}

/// Checks `D(D w) = 0` over the words of a suite.
pub fn d_squared_suite(suite: &WordSuite, seed: u64, c: &ClassPredicate) -> DSquaredReport {
    use rand::{Rng, SeedableRng};
    let tr = Truncation {
        max_edges: suite.letter_edges,
        max_len: 1,
        max_n: suite.max_n,
        max_m: suite.max_m,
    };
    let letters = truncation_letters(&tr, c);
    let mut dd = InternedDifferential::new(*c);
    let ids: Vec<u32> = letters.iter().map(|g| dd.intern(g)).collect();
    let edges: Vec<usize> = letters.iter().map(|g| g.edge_count()).collect();
    let mut report = DSquaredReport {
        suite: *suite,
        seed,
        letters: letters.len(),
        words_checked: 0,
        failures: 0,
        witnesses: Vec::new(),
    };
    let mut check = |w: &[usize], report: &mut DSquaredReport| {
        report.words_checked += 1;
        let word: Vec<u32> = w.iter().map(|&i| ids[i]).collect();
        if !dd.d_squared_vanishes(&word) {
            report.failures += 1;
            if report.witnesses.len() < 5 {
                let gs: Vec<DirectedGraph> = w.iter().map(|&i| letters[i].clone()).collect();
                report.witnesses.push(word_key(&gs));
            }
        }
    };
    // exhaustive part, words as letter indices
    let mut frontier: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
    for len in 1..=suite.max_len {
        let mut next = Vec::new();
        for (w, e) in &frontier {
            for (i, &ei) in edges.iter().enumerate() {
                if len > suite.exhaustive_len && e + ei > suite.exhaustive_edges {
                    continue;
                }
                let mut nw = w.clone();
                nw.push(i);
                next.push((nw, e + ei));
            }
        }
        for (w, _) in &next {
            check(w, &mut report);
        }
        frontier = next;
    }
    // sampled part
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    if !letters.is_empty() {
        for len in suite.exhaustive_len + 1..=suite.max_len {
            for _ in 0..suite.samples {
                let w: Vec<usize> = (0..len).map(|_| rng.gen_range(0..letters.len())).collect();
                check(&w, &mut report);
            }
        }
    }
    report
}

/// JSON form of a cobar vector: word key → "p/q".
pub fn cobar_vector_json(v: &CobarVector) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = v
        .iter()
        .map(|(w, c)| (word_key(w), serde_json::Value::String(format_q(c))))
        .collect();
    serde_json::Value::Object(map)
}

impl fmt::Display for RankRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "degree {}: dim {} rank {} nullity {} escaped {}",
            self.degree, self.dim, self.rank, self.nullity, self.escaped
        )
    }
}
