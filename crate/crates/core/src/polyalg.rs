//! Polynomial polyvector fields and polydifferential operators over exact
//! rationals: the pre-Lie bullet, the Schouten bracket, Gerstenhaber
//! composition and bracket, the Hochschild differential, and the
//! symmetrized composition `∘∧`.
//!
//! Multi-indices are exponent vectors of length `d`; variable and odd
//! variable indices are 0-based internally and 1-based in JSON.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;
use serde_json::{json, Value};

use crate::lincomb::{format_q, parse_q, q, Q};
use crate::perm::{factorial, koszul_sign, parity_of, permutations};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("malformed input: {0}")]
    Format(String),
}

fn check_dim(a: usize, b: usize) -> Result<(), AlgebraError> {
    if a == b {
        Ok(())
    } else {
        Err(AlgebraError::Dimension(a, b))
    }
}

fn sign_q(s: i8) -> Q {
    q(s as i64)
}

fn random_rational<R: Rng>(rng: &mut R) -> Q {
    let mut num = 0;
    while num == 0 {
        num = rng.gen_range(-4i64..=4);
    }
    Q::new(num.into(), rng.gen_range(1i64..=3).into())
}

// ---------------------------------------------------------------- Polynomial

/// Multivariate polynomial in `x_1..x_d` with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Q) -> Self {
        Self::monomial(dim, vec![0; dim], c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Q::one())
    }

    pub fn monomial(dim: usize, exps: Vec<u32>, c: Q) -> Self {
        assert_eq!(exps.len(), dim, "exponent vector length");
        let mut p = Polynomial::zero(dim);
        p.add_term(exps, c);
        p
    }

    /// The coordinate `x_{i+1}`.
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(dim, e, Q::one())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Q> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &Polynomial) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c.clone());
        }
    }

    pub fn add_scaled(&mut self, other: &Polynomial, s: &Q) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c * s);
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        p.add_assign(other);
        p
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        p.add_scaled(other, &-Q::one());
        p
    }

    pub fn scaled(&self, s: &Q) -> Polynomial {
        if s.is_zero() {
            return Polynomial::zero(self.dim);
        }
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// `∂/∂x_{i+1}`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * q(e[i] as i64));
            }
        }
        out
    }

    /// `∂^α` for an exponent vector `α`.
    pub fn derivative_multi(&self, alpha: &[u32]) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (e, c) in &self.terms {
            if e.iter().zip(alpha).any(|(x, a)| x < a) {
                continue;
            }
            let mut coeff = c.clone();
            for (x, a) in e.iter().zip(alpha) {
                for k in 0..*a {
                    coeff *= q((x - k) as i64);
                }
            }
            out.add_term(e.iter().zip(alpha).map(|(x, a)| x - a).collect(), coeff);
        }
        out
    }

    /// `y ↦ f(A y)`.
    pub fn substitute_linear(&self, a: &[Vec<Q>]) -> Polynomial {
        let images: Vec<Polynomial> = (0..self.dim)
            .map(|i| {
                let mut p = Polynomial::zero(self.dim);
                for j in 0..self.dim {
                    p.add_scaled(&Polynomial::var(self.dim, j), &a[i][j]);
                }
                p
            })
            .collect();
        let mut out = Polynomial::zero(self.dim);
        for (e, c) in &self.terms {
            let mut t = Polynomial::constant(self.dim, c.clone());
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t = t.mul(&images[i]);
                }
            }
            out.add_assign(&t);
        }
        out
    }

    /// Random polynomial of total degree ≤ `max_deg` with up to `max_terms` terms.
    pub fn random<R: Rng>(dim: usize, max_deg: u32, max_terms: usize, rng: &mut R) -> Polynomial {
        let mut p = Polynomial::zero(dim);
        let count = rng.gen_range(1..=max_terms.max(1));
        for _ in 0..count {
            let mut e = vec![0u32; dim];
            let deg = rng.gen_range(0..=max_deg);
            for _ in 0..deg {
                e[rng.gen_range(0..dim)] += 1;
            }
            p.add_term(e, random_rational(rng));
        }
        p
    }

    pub fn to_json(&self) -> Value {
        let map: serde_json::Map<String, Value> = self
            .terms
            .iter()
            .map(|(e, c)| {
                (
                    e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                    Value::String(format_q(c)),
                )
            })
            .collect();
        Value::Object(map)
    }

    pub fn from_json(dim: usize, v: &Value) -> Result<Polynomial, AlgebraError> {
        let obj = v
            .as_object()
            .ok_or_else(|| AlgebraError::Format("polynomial must be an object".into()))?;
        let mut p = Polynomial::zero(dim);
        for (k, c) in obj {
            let exps: Vec<u32> = if k.trim().is_empty() {
                Vec::new()
            } else {
                k.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<u32>()
                            .map_err(|_| AlgebraError::Format(format!("bad exponent key `{k}`")))
                    })
                    .collect::<Result<_, _>>()?
            };
            check_dim(exps.len(), dim)?;
            let c = match c {
                Value::String(s) => parse_q(s).map_err(AlgebraError::Format)?,
                Value::Number(n) => parse_q(&n.to_string()).map_err(AlgebraError::Format)?,
                _ => return Err(AlgebraError::Format(format!("bad coefficient for `{k}`"))),
            };
            p.add_term(exps, c);
        }
        Ok(p)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| {
                        if k == 1 {
                            format!("x{}", i + 1)
                        } else {
                            format!("x{}^{}", i + 1, k)
                        }
                    })
                    .collect();
                if mono.is_empty() {
                    format!("{c}")
                } else {
                    format!("{c}*{}", mono.join("*"))
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

// ----------------------------------------------------------- PolyVectorField

/// Skew multivector `Σ c_I(x) ψ_{i1}…ψ_{ik}` with strictly increasing `I`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolyVectorField {
    dim: usize,
    terms: BTreeMap<Vec<usize>, Polynomial>,
}

/// Sorts an index tuple, returning the sign of the sorting permutation, or
/// `None` when an index repeats.
fn sort_indices(idx: &[usize]) -> Option<(Vec<usize>, i8)> {
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.sort_by_key(|&k| idx[k]);
    let sorted: Vec<usize> = order.iter().map(|&k| idx[k]).collect();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sorted, parity_of(&order)))
}

impl PolyVectorField {
    pub fn zero(dim: usize) -> Self {
        PolyVectorField {
            dim,
            terms: BTreeMap::new(),
        }
    }

    /// `c · ψ_{i1}…ψ_{ik}` for any index tuple (skew-normalized).
    pub fn term(dim: usize, psi: &[usize], c: Polynomial) -> Self {
        let mut v = PolyVectorField::zero(dim);
        v.add_term(psi, c);
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Polynomial> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Common arity of all terms; `None` for zero or inhomogeneous fields.
    pub fn arity(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|k| k.len());
        let first = it.next()?;
        it.all(|k| k == first).then_some(first)
    }

    pub fn add_term(&mut self, psi: &[usize], c: Polynomial) {
        assert!(psi.iter().all(|&i| i < self.dim), "odd variable out of range");
        let Some((sorted, s)) = sort_indices(psi) else { return };
        let entry = self
            .terms
            .entry(sorted.clone())
            .or_insert_with(|| Polynomial::zero(self.dim));
        entry.add_scaled(&c, &sign_q(s));
        if entry.is_zero() {
            self.terms.remove(&sorted);
        }
    }

    pub fn add_scaled(&mut self, other: &PolyVectorField, s: &Q) {
        for (k, c) in &other.terms {
            self.add_term(k, c.scaled(s));
        }
    }

    pub fn add(&self, other: &PolyVectorField) -> PolyVectorField {
        let mut v = self.clone();
        v.add_scaled(other, &Q::one());
        v
    }

    pub fn scaled(&self, s: &Q) -> PolyVectorField {
        let mut v = PolyVectorField::zero(self.dim);
        v.add_scaled(self, s);
        v
    }

    /// Homogeneous components by arity.
    pub fn components(&self) -> BTreeMap<usize, PolyVectorField> {
        let mut out: BTreeMap<usize, PolyVectorField> = BTreeMap::new();
        for (k, c) in &self.terms {
            out.entry(k.len())
                .or_insert_with(|| PolyVectorField::zero(self.dim))
                .add_term(k, c.clone());
        }
        out
    }

    /// Signed coefficient `⟨γ | dx_{j1}⊗…⊗dx_{jk}⟩` on an arbitrary tuple.
    pub fn signed_coeff(&self, idx: &[usize]) -> Polynomial {
        match sort_indices(idx) {
            Some((sorted, s)) => self
                .terms
                .get(&sorted)
                .map_or_else(|| Polynomial::zero(self.dim), |c| c.scaled(&sign_q(s))),
            None => Polynomial::zero(self.dim),
        }
    }

    pub fn wedge(&self, other: &PolyVectorField) -> Result<PolyVectorField, AlgebraError> {
        check_dim(self.dim, other.dim)?;
        let mut out = PolyVectorField::zero(self.dim);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut idx = ka.clone();
                idx.extend(kb.iter().copied());
                out.add_term(&idx, ca.mul(cb));
            }
        }
        Ok(out)
    }

    /// Left derivative `∂/∂ψ_{i+1}`: removes `ψ_i` from position `p` with
    /// sign `(-1)^{p−1}`.
    pub fn psi_derivative(&self, i: usize) -> PolyVectorField {
        let mut out = PolyVectorField::zero(self.dim);
        for (k, c) in &self.terms {
            if let Some(p) = k.iter().position(|&j| j == i) {
                let mut rest = k.clone();
                rest.remove(p);
                out.add_term(&rest, c.scaled(&sign_q(if p % 2 == 0 { 1 } else { -1 })));
            }
        }
        out
    }

    /// `∂/∂x_{i+1}` on the coefficients.
    pub fn x_derivative(&self, i: usize) -> PolyVectorField {
        let mut out = PolyVectorField::zero(self.dim);
        for (k, c) in &self.terms {
            out.add_term(k, c.derivative(i));
        }
        out
    }

    /// `γ ↦ γ` in coordinates `x = A y`: coefficients become `c(A y)` and
    /// `ψ^x_i = Σ_j B_{ji} ψ^y_j` with `B = A^{-1}`.
    pub fn change_basis(&self, a: &[Vec<Q>], b: &[Vec<Q>]) -> PolyVectorField {
        let mut out = PolyVectorField::zero(self.dim);
        for (k, c) in &self.terms {
            let c2 = c.substitute_linear(a);
            let mut acc = PolyVectorField::term(self.dim, &[], c2);
            for &i in k {
                let mut img = PolyVectorField::zero(self.dim);
                for j in 0..self.dim {
                    img.add_term(&[j], Polynomial::constant(self.dim, b[j][i].clone()));
                }
                acc = acc.wedge(&img).expect("same dimension");
            }
            out.add_scaled(&acc, &Q::one());
        }
        out
    }

    /// Random homogeneous field of the given arity.
    pub fn random<R: Rng>(dim: usize, arity: usize, max_deg: u32, max_terms: usize, rng: &mut R) -> PolyVectorField {
        assert!(arity <= dim, "arity exceeds dimension");
        let mut v = PolyVectorField::zero(dim);
        let count = rng.gen_range(1..=max_terms.max(1));
        for _ in 0..count {
            let mut idx: Vec<usize> = (0..dim).collect();
            for k in 0..arity {
                let j = rng.gen_range(k..dim);
                idx.swap(k, j);
            }
            idx.truncate(arity);
            v.add_term(&idx, Polynomial::random(dim, max_deg, 2, rng));
        }
        v
    }

    /// Random field with constant coefficients.
    pub fn random_constant<R: Rng>(dim: usize, arity: usize, rng: &mut R) -> PolyVectorField {
        Self::random(dim, arity, 0, 3, rng)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(k, c)| json!({"psi": k.iter().map(|i| i + 1).collect::<Vec<_>>(), "coeff": c.to_json()}))
                .collect(),
        )
    }

    pub fn from_json(dim: usize, v: &Value) -> Result<PolyVectorField, AlgebraError> {
        let arr = v
            .as_array()
            .ok_or_else(|| AlgebraError::Format("polyvector field must be a list".into()))?;
        let mut out = PolyVectorField::zero(dim);
        for rec in arr {
            let psi: Vec<usize> = rec
                .get("psi")
                .and_then(Value::as_array)
                .ok_or_else(|| AlgebraError::Format("record needs `psi`".into()))?
                .iter()
                .map(|x| match x.as_u64() {
                    Some(i) if i >= 1 && (i as usize) <= dim => Ok(i as usize - 1),
                    _ => Err(AlgebraError::Format(format!("bad odd variable index {x}"))),
                })
                .collect::<Result<_, _>>()?;
            let coeff = Polynomial::from_json(
                dim,
                rec.get("coeff")
                    .ok_or_else(|| AlgebraError::Format("record needs `coeff`".into()))?,
            )?;
            out.add_term(&psi, coeff);
        }
        Ok(out)
    }
}

/// `γ₁•γ₂ = Σ_i ∂γ₁/∂ψ_i ∧ ∂γ₂/∂x_i` with the left odd derivative.
pub fn bullet(a: &PolyVectorField, b: &PolyVectorField) -> Result<PolyVectorField, AlgebraError> {
    check_dim(a.dim, b.dim)?;
    let mut out = PolyVectorField::zero(a.dim);
    for i in 0..a.dim {
        let da = a.psi_derivative(i);
        if da.is_zero() {
            continue;
        }
        out.add_scaled(&da.wedge(&b.x_derivative(i))?, &Q::one());
    }
    Ok(out)
}

/// Schouten bracket of homogeneous components, extended bilinearly:
/// `[γ₁,γ₂] = (−1)^{k₁−1} γ₁•γ₂ − (−1)^{(k₁−1)(k₂−1)} (−1)^{k₂−1} γ₂•γ₁`.
///
/// With the left odd derivative, `(−1)^{k−1} γ•η` is the right-derivative
/// product, whose graded commutator satisfies the Jacobi identity; on vector
/// fields (`k₁ = k₂ = 1`) this is `γ₁•γ₂ − γ₂•γ₁`.
pub fn schouten_bracket(a: &PolyVectorField, b: &PolyVectorField) -> Result<PolyVectorField, AlgebraError> {
    check_dim(a.dim, b.dim)?;
    let odd = |k: usize| if k % 2 == 0 { q(-1) } else { q(1) }; // (−1)^{k−1}
    let mut out = PolyVectorField::zero(a.dim);
    for (ka, ca) in a.components() {
        for (kb, cb) in b.components() {
            // (k₁−1)(k₂−1) is odd exactly when both arities are even
            let swap_sign = if ka % 2 == 0 && kb % 2 == 0 { q(-1) } else { q(1) };
            out.add_scaled(&bullet(&ca, &cb)?, &odd(ka));
            out.add_scaled(&bullet(&cb, &ca)?, &-(swap_sign * odd(kb)));
        }
    }
    Ok(out)
}

/// Commutator of first-order operators `X = Σ X_i ∂_i`, computed directly on
/// the coefficient vectors: `[X,Y]_i = X(Y_i) − Y(X_i)`.
pub fn vector_field_commutator(x: &PolyVectorField, y: &PolyVectorField) -> Result<PolyVectorField, AlgebraError> {
    check_dim(x.dim, y.dim)?;
    let d = x.dim;
    let comp = |v: &PolyVectorField, i: usize| v.terms.get(&vec![i]).cloned().unwrap_or_else(|| Polynomial::zero(d));
    let apply = |v: &PolyVectorField, f: &Polynomial| {
        let mut out = Polynomial::zero(d);
        for j in 0..d {
            out.add_assign(&comp(v, j).mul(&f.derivative(j)));
        }
        out
    };
    let mut out = PolyVectorField::zero(d);
    for i in 0..d {
        let c = apply(x, &comp(y, i)).sub(&apply(y, &comp(x, i)));
        out.add_term(&[i], c);
    }
    Ok(out)
}

// ---------------------------------------------------------- PolyDiffOperator

/// `(f_1..f_m) ↦ Σ c(x) Π_j ∂^{α_j} f_j`.
#[derive(Debug, Clone)]
pub struct PolyDiffOperator {
    dim: usize,
    arity: usize,
    terms: BTreeMap<Vec<Vec<u32>>, Polynomial>,
}

/// Equality as maps: zero operators are equal whatever their nominal arity.
impl PartialEq for PolyDiffOperator {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.terms == other.terms && (self.arity == other.arity || self.terms.is_empty())
    }
}

impl Eq for PolyDiffOperator {}

/// All ways to write `alpha` as an ordered sum of `parts` exponent vectors,
/// with the multinomial coefficient `Π_v α_v! / Π_parts Π_v μ_v!`.
fn splittings(alpha: &[u32], parts: usize) -> Vec<(Vec<Vec<u32>>, Q)> {
    let dim = alpha.len();
    let mut out: Vec<(Vec<Vec<u32>>, Q)> = vec![(vec![vec![0; dim]; parts], Q::one())];
    for v in 0..dim {
        let mut next = Vec::new();
        for (split, c) in &out {
            // distribute alpha[v] among the parts
            let mut comps = Vec::new();
            compositions(alpha[v], parts, &mut Vec::new(), &mut comps);
            for comp in comps {
                let mut s = split.clone();
                let mut coeff = c * Q::from_integer(factorial(alpha[v] as usize).into());
                for (p, &k) in comp.iter().enumerate() {
                    s[p][v] = k;
                    coeff /= Q::from_integer(factorial(k as usize).into());
                }
                next.push((s, coeff));
            }
        }
        out = next;
    }
    out
}

fn compositions(total: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 0 {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if parts == 1 {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for k in 0..=total {
        cur.push(k);
        compositions(total - k, parts - 1, cur, out);
        cur.pop();
    }
}

impl PolyDiffOperator {
    pub fn zero(dim: usize, arity: usize) -> Self {
        PolyDiffOperator {
            dim,
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Vec<u32>>, Polynomial> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Multiplication `m_A(f,g) = fg`.
    pub fn multiplication(dim: usize) -> Self {
        let mut m = PolyDiffOperator::zero(dim, 2);
        m.add_term(vec![vec![0; dim]; 2], Polynomial::one(dim));
        m
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = PolyDiffOperator::zero(dim, 1);
        m.add_term(vec![vec![0; dim]], Polynomial::one(dim));
        m
    }

    pub fn add_term(&mut self, derivs: Vec<Vec<u32>>, c: Polynomial) {
        assert_eq!(derivs.len(), self.arity, "derivative tuple length");
        if c.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(derivs.clone())
            .or_insert_with(|| Polynomial::zero(self.dim));
        entry.add_assign(&c);
        if entry.is_zero() {
            self.terms.remove(&derivs);
        }
    }

    pub fn add_scaled(&mut self, other: &PolyDiffOperator, s: &Q) -> Result<(), AlgebraError> {
        check_dim(self.dim, other.dim)?;
        if self.arity != other.arity {
            if other.is_zero() {
                return Ok(());
            }
            if self.is_zero() {
                self.arity = other.arity;
            } else {
                return Err(AlgebraError::Arity(format!(
                    "adding arity {} to arity {}",
                    other.arity, self.arity
                )));
            }
        }
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c.scaled(s));
        }
        Ok(())
    }

    pub fn scaled(&self, s: &Q) -> PolyDiffOperator {
        let mut out = PolyDiffOperator::zero(self.dim, self.arity);
        out.add_scaled(self, s).expect("same shape");
        out
    }

    pub fn sub(&self, other: &PolyDiffOperator) -> Result<PolyDiffOperator, AlgebraError> {
        let mut out = self.clone();
        out.add_scaled(other, &-Q::one())?;
        Ok(out)
    }

    pub fn apply(&self, args: &[Polynomial]) -> Result<Polynomial, AlgebraError> {
        if args.len() != self.arity {
            return Err(AlgebraError::Arity(format!(
                "operator of arity {} applied to {} arguments",
                self.arity,
                args.len()
            )));
        }
        let mut out = Polynomial::zero(self.dim);
        for (derivs, c) in &self.terms {
            let mut t = c.clone();
            for (alpha, f) in derivs.iter().zip(args) {
                check_dim(f.dim(), self.dim)?;
                t = t.mul(&f.derivative_multi(alpha));
                if t.is_zero() {
                    break;
                }
            }
            out.add_assign(&t);
        }
        Ok(out)
    }

    /// Unsigned insertion `Φ₁(f_1,…,Φ₂(f_i,…,f_{i+r−1}),…)` at 0-based slot `i`.
    pub fn insert_at(&self, inner: &PolyDiffOperator, slot: usize) -> Result<PolyDiffOperator, AlgebraError> {
        check_dim(self.dim, inner.dim)?;
        if slot >= self.arity {
            return Err(AlgebraError::Arity(format!(
                "slot {} of arity {}",
                slot + 1,
                self.arity
            )));
        }
        let r = inner.arity;
        let mut out = PolyDiffOperator::zero(self.dim, self.arity + r - 1);
        for (d1, c1) in &self.terms {
            for (d2, c2) in &inner.terms {
                for (split, mult) in splittings(&d1[slot], r + 1) {
                    let coeff = c1.mul(&c2.derivative_multi(&split[0])).scaled(&mult);
                    if coeff.is_zero() {
                        continue;
                    }
                    let mut derivs: Vec<Vec<u32>> = d1[..slot].to_vec();
                    for (j, beta) in d2.iter().enumerate() {
                        derivs.push(beta.iter().zip(&split[j + 1]).map(|(a, b)| a + b).collect());
                    }
                    derivs.extend(d1[slot + 1..].iter().cloned());
                    out.add_term(derivs, coeff);
                }
            }
        }
        Ok(out)
    }

    /// Sum of unsigned insertions over all slots.
    pub fn insertion_sum(&self, inner: &PolyDiffOperator) -> Result<PolyDiffOperator, AlgebraError> {
        let mut out = PolyDiffOperator::zero(self.dim, (self.arity + inner.arity).saturating_sub(1));
        for i in 0..self.arity {
            out.add_scaled(&self.insert_at(inner, i)?, &Q::one())?;
        }
        Ok(out)
    }

    /// Random operator with derivative orders ≤ `max_order` per slot.
    pub fn random<R: Rng>(
        dim: usize,
        arity: usize,
        max_order: u32,
        max_deg: u32,
        max_terms: usize,
        rng: &mut R,
    ) -> Self {
        let mut out = PolyDiffOperator::zero(dim, arity);
        let count = rng.gen_range(1..=max_terms.max(1));
        for _ in 0..count {
            let derivs: Vec<Vec<u32>> = (0..arity)
                .map(|_| {
                    let mut a = vec![0u32; dim];
                    for _ in 0..rng.gen_range(0..=max_order) {
                        a[rng.gen_range(0..dim)] += 1;
                    }
                    a
                })
                .collect();
            out.add_term(derivs, Polynomial::random(dim, max_deg, 2, rng));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "arity": self.arity,
            "terms": self.terms.iter().map(|(d, c)| json!({"derivatives": d, "coeff": c.to_json()})).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(dim: usize, v: &Value) -> Result<PolyDiffOperator, AlgebraError> {
        let arity = v
            .get("arity")
            .and_then(Value::as_u64)
            .ok_or_else(|| AlgebraError::Format("operator needs `arity`".into()))? as usize;
        let mut out = PolyDiffOperator::zero(dim, arity);
        for rec in v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| AlgebraError::Format("operator needs `terms`".into()))?
        {
            let derivs: Vec<Vec<u32>> = serde_json::from_value(rec.get("derivatives").cloned().unwrap_or(Value::Null))
                .map_err(|e| AlgebraError::Format(format!("derivatives: {e}")))?;
            if derivs.len() != arity || derivs.iter().any(|a| a.len() != dim) {
                return Err(AlgebraError::Format(
                    "derivatives must list one exponent vector per slot".into(),
                ));
            }
            let c = Polynomial::from_json(
                dim,
                rec.get("coeff")
                    .ok_or_else(|| AlgebraError::Format("term needs `coeff`".into()))?,
            )?;
            out.add_term(derivs, c);
        }
        Ok(out)
    }
}

/// `Φ₁∘Φ₂ = Σ_i (−1)^{(i−1)(r−1)} Φ₁(…, Φ₂(f_i,…), …)`.
pub fn gerstenhaber_compose(a: &PolyDiffOperator, b: &PolyDiffOperator) -> Result<PolyDiffOperator, AlgebraError> {
    check_dim(a.dim, b.dim)?;
    let r = b.arity;
    let mut out = PolyDiffOperator::zero(a.dim, (a.arity + r).saturating_sub(1));
    for i in 0..a.arity {
        // 0-based slot i: (−1)^{i(r−1)}
        let s = if i % 2 == 1 && r % 2 == 0 { q(-1) } else { q(1) };
        out.add_scaled(&a.insert_at(b, i)?, &s)?;
    }
    Ok(out)
}

/// `(−1)^{k₁k₂}` for degrees `k = arity − 1` (arity 0 has odd degree −1).
fn degree_sign(arity1: usize, arity2: usize) -> Q {
    if arity1 % 2 == 0 && arity2 % 2 == 0 {
        q(-1)
    } else {
        q(1)
    }
}

/// `[Φ₁,Φ₂] = Φ₁∘Φ₂ − (−1)^{k₁k₂} Φ₂∘Φ₁` with `k = arity − 1`.
pub fn gerstenhaber_bracket(a: &PolyDiffOperator, b: &PolyDiffOperator) -> Result<PolyDiffOperator, AlgebraError> {
    let mut out = gerstenhaber_compose(a, b)?;
    out.add_scaled(&gerstenhaber_compose(b, a)?, &-degree_sign(a.arity, b.arity))?;
    Ok(out)
}

/// Hochschild differential `[m_A, Φ]`.
pub fn hochschild_d(phi: &PolyDiffOperator) -> Result<PolyDiffOperator, AlgebraError> {
    gerstenhaber_bracket(&PolyDiffOperator::multiplication(phi.dim), phi)
}

/// `(U_k ∘∧ U_l)(γ₁…γ_n) = 1/(k!l!) Σ_σ ε(σ) compose(U_k(γ_σ(1..k)), U_l(γ_σ(k+1..n)))`
/// where `ε(σ)` is the Koszul sign of the permutation for the degrees
/// `degrees[i]` of the `γ`s and `compose` is the chosen composition.
pub fn wedge_compose<T: Clone>(
    k: usize,
    l: usize,
    gammas: &[T],
    degrees: &[usize],
    mut outer: impl FnMut(&[T]) -> Result<PolyDiffOperator, AlgebraError>,
    mut inner: impl FnMut(&[T]) -> Result<PolyDiffOperator, AlgebraError>,
    mut compose: impl FnMut(&PolyDiffOperator, &PolyDiffOperator) -> Result<PolyDiffOperator, AlgebraError>,
) -> Result<Option<PolyDiffOperator>, AlgebraError> {
    let n = gammas.len();
    if k + l != n || degrees.len() != n {
        return Err(AlgebraError::Arity(format!("k + l = {} but {} arguments", k + l, n)));
    }
    let mut out: Option<PolyDiffOperator> = None;
    for sigma in permutations(n) {
        let eps = koszul_sign(degrees, &sigma);
        if eps == 0 {
            continue;
        }
        let permuted: Vec<T> = sigma.iter().map(|&i| gammas[i].clone()).collect();
        let a = outer(&permuted[..k])?;
        let b = inner(&permuted[k..])?;
        let c = compose(&a, &b)?;
        match out.as_mut() {
            Some(acc) => acc.add_scaled(&c, &sign_q(eps))?,
            None => out = Some(c.scaled(&sign_q(eps))),
        }
    }
    let norm = Q::new(1.into(), (factorial(k) * factorial(l)).into());
    Ok(out.map(|o| o.scaled(&norm)))
}

/// Inverse of a small square rational matrix; `None` when singular.
pub fn invert(a: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Random invertible rational matrix with small entries.
pub fn random_invertible<R: Rng>(dim: usize, rng: &mut R) -> (Vec<Vec<Q>>, Vec<Vec<Q>>) {
    loop {
        let a: Vec<Vec<Q>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| Q::new(rng.gen_range(-3i64..=3).into(), rng.gen_range(1i64..=2).into()))
                    .collect()
            })
            .collect();
        if let Some(b) = invert(&a) {
            return (a, b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x(d: usize, i: usize) -> Polynomial {
        Polynomial::var(d, i)
    }
    fn field(d: usize, psi: &[usize], c: Polynomial) -> PolyVectorField {
        PolyVectorField::term(d, psi, c)
    }

    #[test]
    fn bullet_examples() {
        let a = field(2, &[0], x(2, 1));
        let b = field(2, &[1], x(2, 0));
        assert_eq!(bullet(&a, &b).unwrap(), field(2, &[1], x(2, 1)));
        assert_eq!(bullet(&b, &a).unwrap(), field(2, &[0], x(2, 0)));
        let pi = field(2, &[0, 1], Polynomial::one(2));
        assert!(bullet(&pi, &pi).unwrap().is_zero());
    }

    #[test]
    fn schouten_examples() {
        let a = field(2, &[0], x(2, 1));
        let b = field(2, &[1], x(2, 0));
        let mut expect = field(2, &[1], x(2, 1));
        expect.add_scaled(&field(2, &[0], x(2, 0)), &q(-1));
        assert_eq!(schouten_bracket(&a, &b).unwrap(), expect);
        let d1 = field(2, &[0], Polynomial::one(2));
        let d2 = field(2, &[1], Polynomial::one(2));
        assert!(schouten_bracket(&d1, &d2).unwrap().is_zero());
        let g = field(2, &[0], x(2, 0));
        assert!(schouten_bracket(&g, &g).unwrap().is_zero());
    }

    #[test]
    fn signed_coefficients() {
        let pi = field(2, &[0, 1], Polynomial::one(2));
        assert_eq!(pi.signed_coeff(&[1, 0]), Polynomial::constant(2, q(-1)));
        assert!(pi.signed_coeff(&[0, 0]).is_zero());
        assert_eq!(field(2, &[1, 0], Polynomial::one(2)), pi.scaled(&q(-1)));
    }

    #[test]
    fn gerstenhaber_examples() {
        let m = PolyDiffOperator::multiplication(2);
        assert!(gerstenhaber_compose(&m, &m).unwrap().is_zero());
        let id = PolyDiffOperator::identity(2);
        let br = gerstenhaber_bracket(&m, &id).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = Polynomial::random(2, 2, 3, &mut rng);
        let g = Polynomial::random(2, 2, 3, &mut rng);
        assert_eq!(br.apply(&[f.clone(), g.clone()]).unwrap(), f.mul(&g));
        assert!(hochschild_d(&m).unwrap().is_zero());
        assert!(gerstenhaber_compose(&m, &PolyDiffOperator::zero(2, 2))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn insertion_matches_direct_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = PolyDiffOperator::random(2, 2, 2, 1, 3, &mut rng);
            let b = PolyDiffOperator::random(2, 2, 2, 1, 3, &mut rng);
            let fs: Vec<Polynomial> = (0..3).map(|_| Polynomial::random(2, 3, 3, &mut rng)).collect();
            let direct = a.apply(&[b.apply(&fs[..2]).unwrap(), fs[2].clone()]).unwrap();
            assert_eq!(a.insert_at(&b, 0).unwrap().apply(&fs).unwrap(), direct);
            let direct = a.apply(&[fs[0].clone(), b.apply(&fs[1..]).unwrap()]).unwrap();
            assert_eq!(a.insert_at(&b, 1).unwrap().apply(&fs).unwrap(), direct);
        }
    }

    #[test]
    fn polynomial_calculus() {
        let p = x(2, 0).mul(&x(2, 0)).mul(&x(2, 1));
        assert_eq!(p.derivative_multi(&[2, 1]), Polynomial::constant(2, q(2)));
        assert_eq!(p.derivative(0), x(2, 0).mul(&x(2, 1)).scaled(&q(2)));
        let a = vec![vec![q(0), q(1)], vec![q(1), q(0)]];
        assert_eq!(p.substitute_linear(&a), x(2, 1).mul(&x(2, 1)).mul(&x(2, 0)));
        let b = invert(&a).unwrap();
        assert_eq!(b, a);
    }

    #[test]
    fn json_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = PolyVectorField::random(3, 2, 2, 3, &mut rng);
        assert_eq!(PolyVectorField::from_json(3, &v.to_json()).unwrap(), v);
        let o = PolyDiffOperator::random(3, 2, 2, 2, 3, &mut rng);
        assert_eq!(PolyDiffOperator::from_json(3, &o.to_json()).unwrap(), o);
    }

    #[test]
    fn wedge_compose_counts() {
        // constant evaluators: the sum is n!/(k!l!) copies of one term
        let m = PolyDiffOperator::multiplication(2);
        let id = PolyDiffOperator::identity(2);
        let gammas = vec![0usize, 1, 2];
        let r = wedge_compose(
            2,
            1,
            &gammas,
            &[0, 0, 0],
            |_| Ok(m.clone()),
            |_| Ok(id.clone()),
            |a, b| a.insertion_sum(b),
        )
        .unwrap()
        .unwrap();
        assert_eq!(r, m.scaled(&q(6)));
    }
}
