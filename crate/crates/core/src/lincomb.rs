//! Sparse formal linear combinations with exact rational coefficients.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qq(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `"p/q"` in lowest terms (denominator always written).
pub fn format_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_q(s: &str) -> Result<Q, String> {
    let s = s.trim();
    let parse_int = |t: &str| t.trim().parse::<BigInt>().map_err(|_| format!("bad rational `{s}`"));
    match s.split_once('/') {
        Some((a, b)) => {
            let den = parse_int(b)?;
            if den.is_zero() {
                return Err(format!("zero denominator in `{s}`"));
            }
            Ok(Q::new(parse_int(a)?, den))
        }
        None => Ok(Q::from_integer(parse_int(s)?)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinComb<K: Ord> {
    terms: BTreeMap<K, Q>,
}

impl<K: Ord> Default for LinComb<K> {
    fn default() -> Self {
        LinComb { terms: BTreeMap::new() }
    }
}

impl<K: Ord + Clone> LinComb<K> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(key: K, coeff: Q) -> Self {
        let mut v = Self::zero();
        v.add_term(key, coeff);
        v
    }

    pub fn add_term(&mut self, key: K, coeff: Q) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, scale: &Q) {
        if scale.is_zero() {
            return;
        }
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c * scale);
        }
    }

    pub fn add(&mut self, other: &Self) {
        self.add_scaled(other, &Q::one());
    }

    pub fn sub(&mut self, other: &Self) {
        self.add_scaled(other, &-Q::one());
    }

    pub fn scaled(&self, scale: &Q) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, scale);
        out
    }

    pub fn coeff(&self, key: &K) -> Q {
        self.terms.get(key).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Q)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.keys()
    }

    /// Linear extension of `f` over the terms.
    pub fn map_linear<K2: Ord + Clone>(&self, mut f: impl FnMut(&K) -> LinComb<K2>) -> LinComb<K2> {
        let mut out = LinComb::zero();
        for (k, c) in &self.terms {
            out.add_scaled(&f(k), c);
        }
        out
    }

    pub fn max_abs_coeff(&self) -> Q {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(Q::zero)
    }
}

impl<K: Ord + Clone> FromIterator<(K, Q)> for LinComb<K> {
    fn from_iter<T: IntoIterator<Item = (K, Q)>>(iter: T) -> Self {
        let mut v = Self::zero();
        for (k, c) in iter {
            v.add_term(k, c);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_format() {
        assert_eq!(format_q(&qq(2, 4)), "1/2");
        assert_eq!(format_q(&q(-3)), "-3/1");
        assert_eq!(parse_q("6/-4").unwrap(), qq(-3, 2));
        assert_eq!(parse_q("7").unwrap(), q(7));
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn cancellation_drops_terms() {
        let mut v = LinComb::single("a", q(2));
        v.add_term("a", q(-2));
        assert!(v.is_zero());
    }
}
