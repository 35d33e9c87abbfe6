//! Permutations, parities and Koszul signs.

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next: Option<Vec<usize>> = Some((0..n).collect());
    std::iter::from_fn(move || {
        let cur = next.take()?;
        let mut p = cur.clone();
        // standard next-permutation step
        if let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) {
            let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
            p.swap(i - 1, j);
            p[i..].reverse();
            next = Some(p);
        }
        Some(cur)
    })
}

/// Sign of the permutation that sorts `seq` (distinct entries).
pub fn parity_of(seq: &[usize]) -> i8 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Koszul sign of rearranging items with the given degrees into `order`
/// (`order[k]` is the old position of the item placed at position k).
pub fn koszul_sign(degrees: &[usize], order: &[usize]) -> i8 {
    let mut odd = 0usize;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if order[i] > order[j] && degrees[order[i]] % 2 == 1 && degrees[order[j]] % 2 == 1 {
                odd += 1;
            }
        }
    }
    if odd % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_parity() {
        assert_eq!(permutations(0).count(), 1);
        assert_eq!(permutations(4).count(), 24);
        let even = permutations(4).filter(|p| parity_of(p) == 1).count();
        assert_eq!(even, 12);
        assert_eq!(parity_of(&[1, 0]), -1);
        assert_eq!(parity_of(&[2, 0, 1]), 1);
    }

    #[test]
    fn koszul() {
        assert_eq!(koszul_sign(&[1, 1], &[1, 0]), -1);
        assert_eq!(koszul_sign(&[2, 1], &[1, 0]), 1);
        assert_eq!(koszul_sign(&[1, 3, 1], &[2, 0, 1]), 1);
    }
}
