//! Summation and summary statistics.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum of equal-length vectors.
#[derive(Clone, Debug)]
pub struct VecSum {
    sum: Vec<f64>,
    comp: Vec<f64>,
    count: u64,
}

impl VecSum {
    pub fn new(dim: usize) -> Self {
        Self {
            sum: vec![0.0; dim],
            comp: vec![0.0; dim],
            count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn add(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.sum.len(), "vector length changed during summation");
        for ((s, c), &v) in self.sum.iter_mut().zip(&mut self.comp).zip(x) {
            let t = *s + v;
            if s.abs() >= v.abs() {
                *c += (*s - t) + v;
            } else {
                *c += (v - t) + *s;
            }
            *s = t;
        }
        self.count += 1;
    }

    /// Folds another partial sum in (both compensation terms are kept).
    pub fn merge(&mut self, other: &VecSum) {
        assert_eq!(other.sum.len(), self.sum.len());
        let count = self.count + other.count;
        self.add(&other.sum);
        self.add(&other.comp);
        self.count = count;
    }

    pub fn total(&self) -> Vec<f64> {
        self.sum.iter().zip(&self.comp).map(|(s, c)| s + c).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.total().into_iter().map(|x| x / n).collect()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut acc = VecSum::new(1);
    for &x in xs {
        acc.add(&[x]);
    }
    acc.mean()[0]
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Standard deviation with divisor `n`.
pub fn sd_population(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Standard deviation with divisor `n - 1` (0 for a single value).
pub fn sd_sample(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Table-style summary of a set of accuracies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
    /// Population standard deviation (divisor `n`).
    pub sd: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub sd_sample: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            count: xs.len(),
            mean: mean(xs),
            median: median(xs),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            sd: sd_population(xs),
            sd_sample: sd_sample(xs),
        }
    }

    /// Field-wise comparison within `tol`.
    pub fn approx_eq(&self, other: &Summary, tol: f64) -> bool {
        self.count == other.count
            && [
                (self.mean, other.mean),
                (self.median, other.median),
                (self.max, other.max),
                (self.min, other.min),
                (self.sd, other.sd),
                (self.sd_sample, other.sd_sample),
            ]
            .iter()
            .all(|(a, b)| (a - b).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rows() {
        let s = Summary::of(&[10.0; 5]);
        assert_eq!(s.mean, 10.0);
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.sd_sample, 0.0);
        assert_eq!(s.median, 10.0);
    }

    #[test]
    fn two_rows_population_convention() {
        let s = Summary::of(&[20.0, 40.0]);
        assert_eq!(s.mean, 30.0);
        assert_eq!(s.sd, 10.0);
        assert!((s.sd_sample - 200f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.median, 30.0);
        assert_eq!((s.min, s.max), (20.0, 40.0));
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = VecSum::new(1);
        acc.add(&[1e16]);
        for _ in 0..1000 {
            acc.add(&[1.0]);
        }
        acc.add(&[-1e16]);
        assert_eq!(acc.total()[0], 1000.0);
    }

    #[test]
    fn merge_preserves_count_and_total() {
        let mut a = VecSum::new(2);
        let mut b = VecSum::new(2);
        a.add(&[1.0, 2.0]);
        b.add(&[3.0, 4.0]);
        b.add(&[5.0, 6.0]);
        a.merge(&b);
        assert_eq!(a.count(), 3);
        assert_eq!(a.mean(), vec![3.0, 4.0]);
    }
}
