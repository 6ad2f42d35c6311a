#![allow(dead_code)]

use lecam::lattice::{LatticeMarket, ProductMeasure, StepReturns};
use rand::rngs::StdRng;
use rand::Rng;

/// Discounted values of one step that straddle 1.
pub fn straddling_values(rng: &mut StdRng, k: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..1.6)).collect();
        if k == 3 && rng.gen_bool(0.2) {
            v[1] = 1.0;
        }
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo < 0.97 && hi > 1.03 {
            return v;
        }
    }
}

pub fn random_probs(rng: &mut StdRng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
    let head: f64 = p[..k - 1].iter().sum();
    p[k - 1] = 1.0 - head;
    p
}

/// A free-of-arbitrage lattice with `n` steps, supports of size 2 or 3 and
/// random bond rates.
pub fn random_market(rng: &mut StdRng, max_n: usize, max_k: usize) -> LatticeMarket {
    let n = rng.gen_range(1..=max_n);
    let iid = rng.gen_bool(0.5);
    let mut steps: Vec<StepReturns> = Vec::with_capacity(n);
    let mut rates: Vec<f64> = Vec::with_capacity(n);
    for j in 0..n {
        if iid && j > 0 {
            steps.push(steps[0].clone());
            rates.push(rates[0]);
            continue;
        }
        let k = rng.gen_range(2..=max_k);
        let rate = if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen_range(0.0..0.05)
        };
        let gross = straddling_values(rng, k)
            .iter()
            .map(|v| v * (1.0 + rate))
            .collect();
        steps.push(StepReturns::new(gross, random_probs(rng, k)).unwrap());
        rates.push(rate);
    }
    let s0 = rng.gen_range(0.5..2.0);
    LatticeMarket::new(s0, 1.0, steps, rates).unwrap()
}

/// A strictly positive martingale measure: random positive weights on the
/// vertices of every step.
pub fn random_martingale_measure(rng: &mut StdRng, m: &LatticeMarket) -> ProductMeasure {
    let set = m.solve_martingale_measures().unwrap();
    let steps = set
        .steps()
        .iter()
        .map(|s| random_vertex_mix(rng, &s.vertices()))
        .collect();
    ProductMeasure::new(steps)
}

pub fn random_vertex_mix(rng: &mut StdRng, vertices: &[Vec<f64>]) -> Vec<f64> {
    let w = random_probs(rng, vertices.len() + 1);
    let k = vertices[0].len();
    let mut q = vec![0.0; k];
    for (v, wi) in vertices.iter().zip(&w) {
        for c in 0..k {
            q[c] += wi * v[c];
        }
    }
    // spread the spare weight over the barycenter so every entry is positive
    let bary: Vec<f64> = (0..k)
        .map(|c| vertices.iter().map(|v| v[c]).sum::<f64>() / vertices.len() as f64)
        .collect();
    for c in 0..k {
        q[c] += w[vertices.len()] * bary[c];
    }
    q
}
