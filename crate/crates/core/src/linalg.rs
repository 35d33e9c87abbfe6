//! Exact rank of sparse integer matrices by fraction-free elimination.
//!
//! Rows are reduced against pivots with integer combinations
//! `a·row − b·pivot` and then divided by their content, so every
//! intermediate value is an integer and no rounding ever happens.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::lincomb::Q;

/// A sparse row: strictly increasing column indices with nonzero entries.
pub type SparseRow = Vec<(usize, BigInt)>;

fn primitive(mut row: SparseRow) -> SparseRow {
    let mut g = BigInt::zero();
    for (_, v) in &row {
        g = g.gcd(v);
        if g.is_one() {
            break;
        }
    }
    if !g.is_zero() && !g.is_one() {
        for (_, v) in row.iter_mut() {
            *v /= &g;
        }
    }
    if row.first().is_some_and(|(_, v)| v.is_negative()) {
        for (_, v) in row.iter_mut() {
            *v = -&*v;
        }
    }
    row
}

/// `a·x − b·y` for sparse rows.
fn combine(a: &BigInt, x: &SparseRow, b: &BigInt, y: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j >= y.len() || (i < x.len() && x[i].0 < y[j].0);
        let take_y = i >= x.len() || (j < y.len() && y[j].0 < x[i].0);
        let (col, v) = if take_x {
            i += 1;
            (x[i - 1].0, a * &x[i - 1].1)
        } else if take_y {
            j += 1;
            (y[j - 1].0, -(b * &y[j - 1].1))
        } else {
            i += 1;
            j += 1;
            (x[i - 1].0, a * &x[i - 1].1 - b * &y[j - 1].1)
        };
        if !v.is_zero() {
            out.push((col, v));
        }
    }
    out
}

/// Incremental row echelon form keyed by leading column.
#[derive(Debug, Default)]
pub struct Echelon {
    pivots: BTreeMap<usize, SparseRow>,
}

impl Echelon {
    pub fn new() -> Self {
        Echelon::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Reduces `row` against the current pivots; returns the (primitive)
    /// remainder, empty when `row` lies in the span.
    pub fn reduce(&self, row: SparseRow) -> SparseRow {
        let mut row = primitive(row);
        while let Some((lead, lead_val)) = row.first().cloned() {
            let Some(p) = self.pivots.get(&lead) else { break };
            let pv = &p[0].1;
            let g = lead_val.gcd(pv);
            let a = pv / &g;
            let b = &lead_val / &g;
            row = primitive(combine(&a, &row, &b, p));
        }
        row
    }

    /// Inserts `row`; returns true when it increased the rank.
    pub fn insert(&mut self, row: SparseRow) -> bool {
        let r = self.reduce(row);
        match r.first() {
            Some((lead, _)) => {
                self.pivots.insert(*lead, r);
                true
            }
            None => false,
        }
    }
}

/// Exact rank of a sparse integer matrix given by rows.
pub fn rank(rows: impl IntoIterator<Item = SparseRow>) -> usize {
    let mut rows: Vec<SparseRow> = rows.into_iter().filter(|r| !r.is_empty()).collect();
    // sparse rows first keeps fill-in low
    rows.sort_by_key(|r| r.len());
    let mut e = Echelon::new();
    for r in rows {
        e.insert(r);
    }
    e.rank()
}

/// Clears denominators of a rational row, producing an integer row with the
/// same span. Entries must be listed with increasing columns.
pub fn integer_row(entries: impl IntoIterator<Item = (usize, Q)>) -> SparseRow {
    let entries: Vec<(usize, Q)> = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
    let mut l = BigInt::one();
    for (_, v) in &entries {
        l = l.lcm(v.denom());
    }
    entries
        .into_iter()
        .map(|(c, v)| (c, (v * Q::from_integer(l.clone())).to_integer()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[(usize, i64)]) -> SparseRow {
        v.iter().map(|&(c, x)| (c, BigInt::from(x))).collect()
    }

    #[test]
    fn rank_small() {
        assert_eq!(rank(vec![]), 0);
        assert_eq!(rank(vec![row(&[(0, 2), (1, 4)]), row(&[(0, 1), (1, 2)])]), 1);
        assert_eq!(
            rank(vec![
                row(&[(0, 2), (1, 3)]),
                row(&[(0, 4), (2, 1)]),
                row(&[(1, 6), (2, -1)])
            ]),
            2
        );
        assert_eq!(rank(vec![row(&[(0, 1)]), row(&[(1, 1)]), row(&[(2, 1)])]), 3);
    }

    #[test]
    fn rank_hilbert_like() {
        // 1/(i+j+1) scaled rows of a 4x4 Hilbert matrix are independent
        let rows = (0..4).map(|i| integer_row((0..4).map(|j| (j, Q::new(1.into(), (i + j + 1).into())))));
        assert_eq!(rank(rows), 4);
    }
}
