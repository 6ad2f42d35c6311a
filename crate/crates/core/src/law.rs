//! Exact laws of sums of independent lattice variables.
//!
//! Identical i.i.d. steps are grouped by their composition (how many times
//! each support point occurred), which turns an `N`-step product into
//! `C(N + k - 1, k - 1)` weighted atoms. Blocks of different steps are then
//! combined by a cartesian product.

use crate::error::Result;
use crate::limits;

/// Weighted atoms of a finite law, in generation order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Atoms {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Atoms {
    pub fn point(value: f64) -> Self {
        Self {
            values: vec![value],
            probs: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(&v, &p)| p * f(v))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|v| v)
    }

    /// Central second moment.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expectation(|v| (v - m) * (v - m))
    }

    /// Cartesian combination of two independent laws.
    pub fn combine<F: Fn(f64, f64) -> f64>(
        &self,
        other: &Atoms,
        op: F,
        cap: u128,
    ) -> Result<Atoms> {
        limits::check((self.len() as u128) * (other.len() as u128), cap)?;
        let mut out = Atoms {
            values: Vec::with_capacity(self.len() * other.len()),
            probs: Vec::with_capacity(self.len() * other.len()),
        };
        for (&a, &pa) in self.values.iter().zip(&self.probs) {
            for (&b, &pb) in other.values.iter().zip(&other.probs) {
                out.values.push(op(a, b));
                out.probs.push(pa * pb);
            }
        }
        Ok(out)
    }

    /// Sorts atoms by value; the returned pair is (values, cumulative masses).
    pub fn cdf(&self) -> (Vec<f64>, Vec<f64>) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        let mut acc = 0.0;
        let mut xs = Vec::with_capacity(idx.len());
        let mut cs = Vec::with_capacity(idx.len());
        for i in idx {
            acc += self.probs[i];
            xs.push(self.values[i]);
            cs.push(acc);
        }
        (xs, cs)
    }
}

/// `ln(i!)` for `i = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// Number of compositions of `n` into `k` nonnegative parts.
pub fn composition_count(n: usize, k: usize) -> u128 {
    if k == 0 {
        return u128::from(n == 0);
    }
    // C(n + k - 1, k - 1) computed incrementally
    let mut c: u128 = 1;
    for i in 1..k {
        c = c.saturating_mul((n + i) as u128) / i as u128;
    }
    c
}

/// Visits every composition `counts` of `n` into `k` parts, lexicographically
/// with the first part largest first.
pub fn for_each_composition<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k == 0 {
        if n == 0 {
            f(&[]);
        }
        return;
    }
    let mut counts = vec![0usize; k];
    fn rec<F: FnMut(&[usize])>(pos: usize, left: usize, counts: &mut [usize], f: &mut F) {
        let k = counts.len();
        if pos == k - 1 {
            counts[pos] = left;
            f(counts);
            return;
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, f);
        }
    }
    rec(0, n, &mut counts, &mut f);
}

/// Law of `n` i.i.d. draws from `probs`, reported per composition.
///
/// `value(counts)` maps a composition to the atom's value. Compositions with
/// a positive count on a zero-probability point are dropped.
pub fn multinomial<F: Fn(&[usize]) -> f64>(
    probs: &[f64],
    n: usize,
    value: F,
    cap: u128,
) -> Result<Atoms> {
    let k = probs.len();
    limits::check(composition_count(n, k), cap)?;
    let lf = ln_factorials(n);
    let ln_p: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
    let mut out = Atoms::default();
    for_each_composition(n, k, |counts| {
        let mut ln_mass = lf[n];
        for (i, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if probs[i] == 0.0 {
                return;
            }
            ln_mass += c as f64 * ln_p[i] - lf[c];
        }
        out.values.push(value(counts));
        out.probs.push(ln_mass.exp());
    });
    Ok(out)
}
