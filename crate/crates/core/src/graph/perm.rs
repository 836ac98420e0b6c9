use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bijection on `0..n`, stored as `map[i] = π(i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(Error::Parameter(format!(
                    "{map:?} is not a permutation of 0..{n}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    /// Uniform draw from all `n!` permutations.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Self { map }
    }

    /// Transposition of `a` and `b`.
    pub fn swap(n: usize, a: usize, b: usize) -> Result<Self> {
        if a >= n || b >= n {
            return Err(Error::Parameter(format!("swap({a}, {b}) out of range for n = {n}")));
        }
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(a, b);
        Ok(Self { map })
    }

    /// The `rank`-th permutation of `0..n` in lexicographic order.
    pub fn unrank(n: usize, mut rank: u64) -> Result<Self> {
        let total = factorial(n).ok_or_else(|| Error::Size(format!("{n}! overflows")))?;
        if rank >= total {
            return Err(Error::Parameter(format!("rank {rank} >= {n}!")));
        }
        let mut pool: Vec<usize> = (0..n).collect();
        let mut map = Vec::with_capacity(n);
        for i in (0..n).rev() {
            let f = factorial(i).unwrap();
            let idx = (rank / f) as usize;
            rank %= f;
            map.push(pool.remove(idx));
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Self {
        let mut map = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            map[v] = i;
        }
        Self { map }
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "cannot compose permutations of size {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        })
    }

    /// Advances to the lexicographic successor; returns `false` after the last one.
    pub fn next_lexicographic(&mut self) -> bool {
        next_permutation(&mut self.map)
    }

    /// All `n!` permutations in lexicographic order.
    pub fn all(n: usize) -> AllPermutations {
        AllPermutations {
            current: Some((0..n).collect()),
        }
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map
    }
}

pub struct AllPermutations {
    current: Option<Vec<usize>>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.current.take()?;
        let mut succ = cur.clone();
        if next_permutation(&mut succ) {
            self.current = Some(succ);
        }
        Some(Permutation { map: cur })
    }
}

/// In-place lexicographic successor. Works on multisets too, which is what
/// the modular-ID enumeration relies on.
pub fn next_permutation<T: Ord>(xs: &mut [T]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

pub fn factorial(n: usize) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

/// `n! / (n-k)!`, the number of ordered k-tuples of distinct elements.
pub fn falling_factorial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    ((n - k + 1) as u64..=n as u64).try_fold(1u64, |acc, v| acc.checked_mul(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::new(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 0..9 {
            let p = Permutation::random(n, &mut rng);
            let id = p.compose(&p.inverse()).unwrap();
            assert!(id.is_identity());
            assert!(id.inverse().is_identity());
        }
    }

    #[test]
    fn enumeration_matches_unrank() {
        let all: Vec<_> = Permutation::all(4).collect();
        assert_eq!(all.len(), 24);
        for (r, p) in all.iter().enumerate() {
            assert_eq!(*p, Permutation::unrank(4, r as u64).unwrap());
        }
        assert_eq!(Permutation::all(0).count(), 1);
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling_factorial(5, 3), Some(60));
        assert_eq!(falling_factorial(7, 7), factorial(7));
        assert_eq!(falling_factorial(7, 0), Some(1));
    }

    #[test]
    fn multiset_successor() {
        let mut xs = vec![0, 0, 1, 1];
        let mut count = 1;
        while next_permutation(&mut xs) {
            count += 1;
        }
        assert_eq!(count, 6);
    }
}
