//! Discrete-time markets whose discounted prices are filtered likelihood
//! processes.
//!
//! A [`LatticeMarket`] has one risky asset, a bond with deterministic
//! per-step simple rates and independent per-step return laws. Paths are
//! indexed in mixed radix with the first step most significant, so the node
//! reached after `t` steps by path `p` is `p / (k_t * ... * k_{N-1})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{FiniteExperiment, Partition, EXACT_TOL};
use crate::law::{self, Atoms};
use crate::limits;

/// Names of the measures in an induced experiment.
pub const MEASURE_Q: &str = "Q";
pub const MEASURE_Q1: &str = "Q1";
pub const MEASURE_P: &str = "P";

/// Return law of one period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReturns {
    labels: Vec<String>,
    gross: Vec<f64>,
    probs: Vec<f64>,
}

impl StepReturns {
    /// Gross (undiscounted) returns with their real-world probabilities.
    pub fn new(gross: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let labels = default_labels(gross.len());
        Self::with_labels(labels, gross, probs)
    }

    pub fn with_labels(labels: Vec<String>, gross: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if gross.is_empty() || gross.len() != probs.len() || labels.len() != gross.len() {
            return Err(Error::InvalidParams(
                "step returns need matching nonempty values, probabilities and labels".into(),
            ));
        }
        if let Some(v) = gross.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "return value {v} is not positive"
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "real-world probability {p} is not strictly positive"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidParams(format!(
                "step probabilities sum to {total}"
            )));
        }
        Ok(Self {
            labels,
            gross,
            probs,
        })
    }

    pub fn len(&self) -> usize {
        self.gross.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gross.is_empty()
    }

    pub fn gross(&self) -> &[f64] {
        &self.gross
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

fn default_labels(k: usize) -> Vec<String> {
    match k {
        2 => vec!["u".into(), "d".into()],
        3 => vec!["u".into(), "m".into(), "d".into()],
        _ => (0..k).map(|i| i.to_string()).collect(),
    }
}

/// One risky asset and a bond on the grid `0, T/N, ..., T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeMarket {
    s0: f64,
    horizon: f64,
    steps: Vec<StepReturns>,
    bond_rates: Vec<f64>,
}

impl LatticeMarket {
    pub fn new(
        s0: f64,
        horizon: f64,
        steps: Vec<StepReturns>,
        bond_rates: Vec<f64>,
    ) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidParams(
                "market needs at least one step".into(),
            ));
        }
        if steps.len() != bond_rates.len() {
            return Err(Error::InvalidParams(format!(
                "{} steps but {} bond rates",
                steps.len(),
                bond_rates.len()
            )));
        }
        if !(s0.is_finite() && s0 > 0.0) || !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParams(format!("s0 = {s0}, T = {horizon}")));
        }
        if let Some(r) = bond_rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::InvalidParams(format!("bond rate {r} is negative")));
        }
        Ok(Self {
            s0,
            horizon,
            steps,
            bond_rates,
        })
    }

    /// Cox-Ross-Rubinstein market with gross factors `u > d > 0`, gross bond
    /// factor `r >= 1` per step and real-world up-probability `p`.
    ///
    /// The horizon is `n` (unit steps); see [`LatticeMarket::with_horizon`].
    pub fn crr(u: f64, d: f64, r: f64, p: f64, n: usize, s0: f64) -> Result<Self> {
        if !(u > d && d > 0.0) || !(r >= 1.0) || !(p > 0.0 && p < 1.0) || !(s0 > 0.0) || n == 0 {
            return Err(Error::InvalidParams(format!(
                "CRR needs u > d > 0, r >= 1, 0 < p < 1, s0 > 0, N >= 1 (got u={u}, d={d}, r={r}, p={p}, s0={s0}, N={n})"
            )));
        }
        let step = StepReturns::new(vec![u, d], vec![p, 1.0 - p])?;
        Self::new(s0, n as f64, vec![step; n], vec![r - 1.0; n])
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParams(format!("T = {horizon}")));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> &[StepReturns] {
        &self.steps
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn bond_rates(&self) -> &[f64] {
        &self.bond_rates
    }

    /// Discounted gross returns `ũ = u / (1 + r_j)` of step `j`.
    pub fn discounted_returns(&self, j: usize) -> Vec<f64> {
        let b = 1.0 + self.bond_rates[j];
        self.steps[j].gross.iter().map(|u| u / b).collect()
    }

    /// Bond value `∏_{j<t} (1 + r_j)` after `t` steps.
    pub fn bond(&self, t: usize) -> f64 {
        self.bond_rates[..t].iter().map(|r| 1.0 + r).product()
    }

    /// Discount factor `1 / S^0_T`.
    pub fn discount(&self) -> f64 {
        1.0 / self.bond(self.n_steps())
    }

    pub fn path_count(&self) -> u128 {
        limits::product_size(self.steps.iter().map(|s| s.len()))
    }

    /// Number of nodes at level `t`.
    pub fn node_count(&self, t: usize) -> usize {
        self.steps[..t].iter().map(|s| s.len()).product()
    }

    /// Real-world product measure.
    pub fn real_world(&self) -> ProductMeasure {
        ProductMeasure {
            steps: self.steps.iter().map(|s| s.probs.clone()).collect(),
        }
    }

    /// All equivalent martingale measures, step by step.
    ///
    /// Per step the closed set `{q in simplex : Σ q_k ũ_k = 1}` is returned
    /// through its vertices. A strictly positive solution exists iff
    /// `min ũ < 1 < max ũ` or every `ũ_k = 1`.
    pub fn solve_martingale_measures(&self) -> Result<MartingaleMeasureSet> {
        let steps = (0..self.n_steps())
            .map(|j| solve_step(j, &self.discounted_returns(j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MartingaleMeasureSet { steps })
    }

    /// True iff every step admits exactly one martingale measure.
    pub fn is_complete(&self) -> Result<bool> {
        Ok(self.solve_martingale_measures()?.is_complete())
    }

    /// Node values `X_t / X_0` for every level `t = 0..=N`.
    ///
    /// These do not depend on the martingale measure; their identification
    /// with restricted likelihood ratios does.
    pub fn likelihood_process(&self) -> Result<NodeValues> {
        limits::check(self.path_count(), limits::max_paths())?;
        let mut levels = vec![vec![1.0]];
        for j in 0..self.n_steps() {
            let ret = self.discounted_returns(j);
            let prev = levels.last().expect("root level");
            let mut next = Vec::with_capacity(prev.len() * ret.len());
            for &x in prev {
                for &u in &ret {
                    next.push(x * u);
                }
            }
            levels.push(next);
        }
        Ok(NodeValues { levels })
    }

    /// The financial experiment `{Q1, Q, P}` on all paths, with
    /// `dQ1/dQ = X_T / X_0`.
    pub fn induced_experiment(&self, q: &ProductMeasure) -> Result<FiniteExperiment> {
        self.check_measure(q)?;
        limits::check(
            self.path_count(),
            limits::max_paths().min(limits::DEFAULT_MAX_PRODUCT),
        )?;
        let n = self.path_count() as usize;
        let mut outcomes = Vec::with_capacity(n);
        let mut mq = Vec::with_capacity(n);
        let mut mq1 = Vec::with_capacity(n);
        let mut mp = Vec::with_capacity(n);
        let real = self.real_world();
        self.for_each_path(q, |idx, prob, x| {
            let labels: Vec<&str> = idx
                .iter()
                .enumerate()
                .map(|(j, &k)| self.steps[j].labels[k].as_str())
                .collect();
            outcomes.push(labels.join(","));
            mq.push(prob);
            mq1.push(prob * x[x.len() - 1]);
            mp.push(real.path_prob(idx));
        });
        Ok(FiniteExperiment::from_parts(
            outcomes,
            vec![MEASURE_Q.into(), MEASURE_Q1.into(), MEASURE_P.into()],
            vec![mq, mq1, mp],
            0,
        ))
    }

    /// Checks `E_Q[X_T/X_0 | F_t] = X_t/X_0` at every node by backward
    /// induction. False for measures that are not strictly positive
    /// probability vectors.
    pub fn verify_representation(&self, q: &ProductMeasure) -> Result<bool> {
        if !self.is_equivalent(q) {
            return Ok(false);
        }
        let x = self.likelihood_process()?;
        let mut values = x.levels[self.n_steps()].clone();
        for t in (0..self.n_steps()).rev() {
            let k = self.steps[t].len();
            let qt = &q.steps[t];
            let parent: Vec<f64> = values
                .chunks(k)
                .map(|children| children.iter().zip(qt).map(|(v, p)| v * p).sum())
                .collect();
            let ok = parent
                .iter()
                .zip(&x.levels[t])
                .all(|(v, x)| (v - x).abs() <= EXACT_TOL * x.abs().max(1.0));
            if !ok {
                return Ok(false);
            }
            values = parent;
        }
        Ok(true)
    }

    /// Market on the remaining steps after observing `state`.
    ///
    /// The new initial price is the observed `S_t`; return laws and bond
    /// rates of steps `t+1..N` are unchanged.
    pub fn complementary_market(&self, state: &PathState) -> Result<LatticeMarket> {
        self.check_state(state)?;
        let t = state.t();
        if t == 0 {
            return Ok(self.clone());
        }
        if t == self.n_steps() {
            return Err(Error::InvalidState(
                "no steps remain after the horizon".into(),
            ));
        }
        let s_t = self.price_at(state);
        let n = self.n_steps() as f64;
        LatticeMarket::new(
            s_t,
            self.horizon * (n - t as f64) / n,
            self.steps[t..].to_vec(),
            self.bond_rates[t..].to_vec(),
        )
    }

    /// Asset price `S_t` at the node reached by `state`.
    pub fn price_at(&self, state: &PathState) -> f64 {
        state
            .indices()
            .iter()
            .enumerate()
            .fold(self.s0, |s, (j, &k)| s * self.steps[j].gross[k])
    }

    /// Martingale-measure criterion through complementary experiments.
    ///
    /// With `Q* = g Q / E_Q g`, compares `E_{Q'_1(t)}[g | F_t]` against
    /// `E_Q[g | F_t]` at every grid time and node, and separately checks
    /// whether `Q*` makes the discounted price a martingale.
    pub fn verify_mm_criterion(&self, q: &ProductMeasure, g: &[f64]) -> Result<CriterionReport> {
        let exp = self.induced_experiment(q)?;
        if g.len() != exp.len() {
            return Err(Error::InvalidParams(format!(
                "g has {} values for {} paths",
                g.len(),
                exp.len()
            )));
        }
        if let Some(v) = g.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "g must be positive, found {v}"
            )));
        }
        let mut rows = Vec::new();
        let mut condition_holds = true;
        for t in 0..=self.n_steps() {
            let part = self.node_partition(t);
            let comp = exp.complementary(&part)?;
            let lhs = comp.conditional_expectation(g, MEASURE_Q1, &part)?;
            let rhs = exp.conditional_expectation(g, MEASURE_Q, &part)?;
            for (node, block) in part.blocks().iter().enumerate() {
                let w = block[0];
                let gap = (lhs[w] - rhs[w]).abs();
                if gap > CRITERION_TOL * rhs[w].abs().max(1.0) {
                    condition_holds = false;
                }
                rows.push(CriterionRow {
                    t,
                    node,
                    lhs: lhs[w],
                    rhs: rhs[w],
                });
            }
        }
        let total: f64 = g.iter().zip(exp.base()).map(|(a, b)| a * b).sum();
        let q_star: Vec<f64> = g
            .iter()
            .zip(exp.base())
            .map(|(a, b)| a * b / total)
            .collect();
        let is_martingale_measure = self.is_martingale_path_measure(&q_star)?;
        Ok(CriterionReport {
            rows,
            condition_holds,
            is_martingale_measure,
        })
    }

    /// Whether a general (not necessarily product) path measure makes
    /// `X_t` a martingale, checked one step at a time at every node.
    pub fn is_martingale_path_measure(&self, probs: &[f64]) -> Result<bool> {
        if probs.len() as u128 != self.path_count() {
            return Err(Error::InvalidParams("path measure has wrong length".into()));
        }
        let x = self.likelihood_process()?;
        let mut mass = probs.to_vec();
        for t in (0..self.n_steps()).rev() {
            let k = self.steps[t].len();
            // aggregate masses from level t+1 (one entry per node) to level t
            let parents: Vec<f64> = mass.chunks(k).map(|c| c.iter().sum()).collect();
            for (n, children) in mass.chunks(k).enumerate() {
                if parents[n] <= 0.0 {
                    continue;
                }
                let cond: f64 = children
                    .iter()
                    .enumerate()
                    .map(|(c, m)| m * x.levels[t + 1][n * k + c])
                    .sum::<f64>()
                    / parents[n];
                let xt = x.levels[t][n];
                if (cond - xt).abs() > CRITERION_TOL * xt.abs().max(1.0) {
                    return Ok(false);
                }
            }
            mass = parents;
        }
        Ok(true)
    }

    /// Standard-form check: pushes the experiment through the normalized
    /// price trajectory at `times`, groups paths with equal trajectories, and
    /// verifies that on the image the restricted likelihood ratio up to each
    /// time equals the projection at that time.
    pub fn image_experiment_check(&self, q: &ProductMeasure, times: &[usize]) -> Result<bool> {
        let mut times = times.to_vec();
        times.sort_unstable();
        times.dedup();
        if times.iter().any(|&t| t > self.n_steps()) {
            return Err(Error::InvalidParams("time outside the grid".into()));
        }
        let exp = self.induced_experiment(q)?;
        let x = self.likelihood_process()?;
        let suffix: Vec<usize> = (0..=self.n_steps())
            .map(|t| self.steps[t..].iter().map(|s| s.len()).product())
            .collect();
        let traj_at = |p: usize, t: usize| x.levels[t][p / suffix[t]];
        let keys: Vec<Vec<String>> = (0..exp.len())
            .map(|p| times.iter().map(|&t| value_key(traj_at(p, t))).collect())
            .collect();
        let image_part = Partition::from_keys(&keys);
        let image = exp.restrict(&image_part)?;
        let reps: Vec<usize> = image_part.blocks().iter().map(|b| b[0]).collect();
        for (pos, &t) in times.iter().enumerate() {
            let prefix: Vec<&[String]> = reps.iter().map(|&p| &keys[p][..=pos]).collect();
            let part = Partition::from_keys(&prefix);
            let restricted = image.restrict(&part)?;
            let ratio = restricted.likelihood_ratio(MEASURE_Q1, MEASURE_Q)?;
            for (b, block) in part.blocks().iter().enumerate() {
                let pi_t = traj_at(reps[block[0]], t);
                if restricted.base()[b] > 0.0 && (ratio[b] - pi_t).abs() > EXACT_TOL * pi_t.max(1.0)
                {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Partition of the paths by the node reached after `t` steps.
    pub fn node_partition(&self, t: usize) -> Partition {
        let suffix: usize = self.steps[t..].iter().map(|s| s.len()).product();
        let n = self.path_count() as usize;
        let keys: Vec<usize> = (0..n).map(|p| p / suffix).collect();
        Partition::from_keys(&keys)
    }

    /// Visits all paths in index order with their probability under `q` and
    /// the trajectory `X_0/X_0, ..., X_N/X_0`.
    pub fn for_each_path<F: FnMut(&[usize], f64, &[f64])>(&self, q: &ProductMeasure, mut f: F) {
        let n = self.n_steps();
        let rets: Vec<Vec<f64>> = (0..n).map(|j| self.discounted_returns(j)).collect();
        let mut idx = vec![0usize; n];
        let mut x = vec![1.0; n + 1];
        let mut p = vec![1.0; n + 1];
        fn rec<F: FnMut(&[usize], f64, &[f64])>(
            j: usize,
            rets: &[Vec<f64>],
            q: &ProductMeasure,
            idx: &mut [usize],
            x: &mut [f64],
            p: &mut [f64],
            f: &mut F,
        ) {
            if j == rets.len() {
                f(idx, p[j], x);
                return;
            }
            for k in 0..rets[j].len() {
                idx[j] = k;
                x[j + 1] = x[j] * rets[j][k];
                p[j + 1] = p[j] * q.steps[j][k];
                rec(j + 1, rets, q, idx, x, p, f);
            }
        }
        rec(0, &rets, q, &mut idx, &mut x, &mut p, &mut f);
    }

    /// Law of `X_T / X_0` under a product measure, recombining runs of
    /// identical steps by composition.
    pub fn terminal_law(&self, q: &ProductMeasure) -> Result<Atoms> {
        self.check_measure(q)?;
        let mut law = Atoms::point(1.0);
        let mut j = 0;
        while j < self.n_steps() {
            let ret = self.discounted_returns(j);
            let mut end = j + 1;
            while end < self.n_steps()
                && self.discounted_returns(end) == ret
                && q.steps[end] == q.steps[j]
            {
                end += 1;
            }
            let block = law::multinomial(
                &q.steps[j],
                end - j,
                |counts| {
                    counts
                        .iter()
                        .zip(&ret)
                        .map(|(&c, u)| u.powi(c as i32))
                        .product()
                },
                limits::DEFAULT_MAX_ATOMS,
            )?;
            law = if j == 0 {
                block
            } else {
                law.combine(&block, |a, b| a * b, limits::DEFAULT_MAX_ATOMS)?
            };
            j = end;
        }
        Ok(law)
    }

    pub(crate) fn check_measure(&self, q: &ProductMeasure) -> Result<()> {
        if q.steps.len() != self.n_steps()
            || q.steps
                .iter()
                .zip(&self.steps)
                .any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::InvalidParams(
                "measure does not match the market's step supports".into(),
            ));
        }
        for s in &q.steps {
            let total: f64 = s.iter().sum();
            if s.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParams(format!("invalid step measure {s:?}")));
            }
        }
        Ok(())
    }

    fn is_equivalent(&self, q: &ProductMeasure) -> bool {
        self.check_measure(q).is_ok() && q.steps.iter().flatten().all(|p| *p > 0.0)
    }

    pub(crate) fn check_state(&self, state: &PathState) -> Result<()> {
        if state.t() > self.n_steps() {
            return Err(Error::InvalidState(format!(
                "t = {} beyond N = {}",
                state.t(),
                self.n_steps()
            )));
        }
        for (j, &k) in state.indices().iter().enumerate() {
            if k >= self.steps[j].len() {
                return Err(Error::InvalidState(format!(
                    "index {k} invalid at step {j}"
                )));
            }
        }
        Ok(())
    }
}

/// Tolerance of the criterion checks, which compare conditional means of
/// arbitrary positive functions.
pub const CRITERION_TOL: f64 = 1e-10;

fn value_key(x: f64) -> String {
    format!("{x:.12e}")
}

fn solve_step(step: usize, v: &[f64]) -> Result<StepSolution> {
    let all_one = v.iter().all(|&x| x == 1.0);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !all_one && !(lo < 1.0 && hi > 1.0) {
        return Err(Error::NoArbitrageViolation {
            step,
            reason: format!("discounted returns lie in [{lo}, {hi}], which does not straddle 1"),
        });
    }
    let k = v.len();
    let mut vertices = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if v[i] > 1.0 && v[j] < 1.0 {
                let mut q = vec![0.0; k];
                q[i] = (1.0 - v[j]) / (v[i] - v[j]);
                q[j] = (v[i] - 1.0) / (v[i] - v[j]);
                vertices.push(q);
            }
        }
    }
    for i in 0..k {
        if v[i] == 1.0 {
            let mut q = vec![0.0; k];
            q[i] = 1.0;
            vertices.push(q);
        }
    }
    if vertices.len() == 1 {
        Ok(StepSolution::Unique(vertices.pop().expect("one vertex")))
    } else {
        let interior = barycenter(&vertices);
        Ok(StepSolution::Polytope { vertices, interior })
    }
}

fn barycenter(vertices: &[Vec<f64>]) -> Vec<f64> {
    let k = vertices[0].len();
    let m = vertices.len() as f64;
    (0..k)
        .map(|c| vertices.iter().map(|v| v[c]).sum::<f64>() / m)
        .collect()
}

/// Martingale measures of one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSolution {
    /// The unique (strictly positive) martingale measure.
    Unique(Vec<f64>),
    /// Vertices of the closed solution polytope (possibly on the simplex
    /// boundary) plus a strictly positive interior point.
    Polytope {
        vertices: Vec<Vec<f64>>,
        interior: Vec<f64>,
    },
}

impl StepSolution {
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            StepSolution::Unique(q) => vec![q.clone()],
            StepSolution::Polytope { vertices, .. } => vertices.clone(),
        }
    }

    pub fn interior_point(&self) -> &[f64] {
        match self {
            StepSolution::Unique(q) => q,
            StepSolution::Polytope { interior, .. } => interior,
        }
    }

    pub fn is_unique(&self) -> bool {
        matches!(self, StepSolution::Unique(_))
    }
}

/// All equivalent martingale measures of a lattice market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleMeasureSet {
    steps: Vec<StepSolution>,
}

impl MartingaleMeasureSet {
    pub fn steps(&self) -> &[StepSolution] {
        &self.steps
    }

    pub fn is_complete(&self) -> bool {
        self.steps.iter().all(StepSolution::is_unique)
    }

    /// The measure when the market is complete.
    pub fn unique(&self) -> Option<ProductMeasure> {
        self.is_complete().then(|| self.interior_point())
    }

    /// A strictly positive member (the vertex barycenter per step).
    pub fn interior_point(&self) -> ProductMeasure {
        ProductMeasure {
            steps: self
                .steps
                .iter()
                .map(|s| s.interior_point().to_vec())
                .collect(),
        }
    }

    /// Whether `q` is a strictly positive martingale measure of `market`.
    pub fn contains(&self, market: &LatticeMarket, q: &ProductMeasure) -> bool {
        market.is_equivalent(q)
            && q.steps.iter().enumerate().all(|(j, qj)| {
                let m: f64 = qj
                    .iter()
                    .zip(market.discounted_returns(j))
                    .map(|(p, u)| p * u)
                    .sum();
                (m - 1.0).abs() <= EXACT_TOL
            })
    }
}

/// A product measure on paths: one probability vector per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductMeasure {
    steps: Vec<Vec<f64>>,
}

impl ProductMeasure {
    pub fn new(steps: Vec<Vec<f64>>) -> Self {
        Self { steps }
    }

    /// The same vector at each of `n` steps.
    pub fn iid(q: Vec<f64>, n: usize) -> Self {
        Self { steps: vec![q; n] }
    }

    pub fn steps(&self) -> &[Vec<f64>] {
        &self.steps
    }

    /// Marginal on steps `t..N`.
    pub fn suffix(&self, t: usize) -> ProductMeasure {
        ProductMeasure {
            steps: self.steps[t..].to_vec(),
        }
    }

    pub fn path_prob(&self, indices: &[usize]) -> f64 {
        indices
            .iter()
            .enumerate()
            .map(|(j, &k)| self.steps[j][k])
            .product()
    }
}

/// Values at every node of the (non-recombining) tree, level by level.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeValues {
    pub levels: Vec<Vec<f64>>,
}

impl NodeValues {
    pub fn at(&self, state: &PathState, market: &LatticeMarket) -> f64 {
        let mut node = 0usize;
        for (j, &k) in state.indices().iter().enumerate() {
            node = node * market.steps[j].len() + k;
        }
        self.levels[state.t()][node]
    }
}

/// The observed path prefix up to time `t`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathState {
    indices: Vec<usize>,
}

impl PathState {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn root() -> Self {
        Self::default()
    }

    /// Parses comma-separated step labels such as `"u,d"`.
    pub fn parse(market: &LatticeMarket, text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Self::root());
        }
        let mut indices = Vec::new();
        for (j, label) in text.split(',').map(str::trim).enumerate() {
            let step = market.steps.get(j).ok_or_else(|| {
                Error::InvalidState(format!("more than {} steps", market.n_steps()))
            })?;
            let k = step.labels.iter().position(|l| l == label).ok_or_else(|| {
                Error::InvalidState(format!("unknown label `{label}` at step {j}"))
            })?;
            indices.push(k);
        }
        Ok(Self { indices })
    }

    pub fn t(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// One comparison of the criterion at time `t` and node `node`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionRow {
    pub t: usize,
    pub node: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub rows: Vec<CriterionRow>,
    /// `E_{Q'_1(t)}[g | F_t] = E_Q[g | F_t]` for all `t` and nodes.
    pub condition_holds: bool,
    /// `g Q / E_Q g` is a martingale measure.
    pub is_martingale_measure: bool,
}

impl CriterionReport {
    pub fn equivalent(&self) -> bool {
        self.condition_holds == self.is_martingale_measure
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketDoc {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T", default = "default_horizon")]
    horizon: f64,
    s0: f64,
    #[serde(default)]
    bond: BondDoc,
    returns: ReturnsDoc,
}

fn default_horizon() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BondDoc {
    PerStep { r_simple_per_step: Vec<f64> },
    Const { r#const: f64 },
}

impl Default for BondDoc {
    fn default() -> Self {
        BondDoc::Const { r#const: 0.0 }
    }
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ReturnsDoc {
    Crr {
        u: f64,
        d: f64,
        #[serde(default = "half")]
        p: f64,
    },
    Table {
        values: Vec<f64>,
        probs: Vec<f64>,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
}

fn half() -> f64 {
    0.5
}

impl LatticeMarket {
    /// Parses a market spec.
    ///
    /// Return values are gross undiscounted factors; bond rates are simple
    /// per-step rates, either one constant or a list of `N` values.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MarketDoc = serde_json::from_str(text)?;
        if doc.n == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        let rates = match doc.bond {
            BondDoc::Const { r#const } => vec![r#const; doc.n],
            BondDoc::PerStep { r_simple_per_step } => r_simple_per_step,
        };
        let step = match doc.returns {
            ReturnsDoc::Crr { u, d, p } => {
                if !(u > d && d > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "CRR needs u > d > 0 (u={u}, d={d})"
                    )));
                }
                StepReturns::new(vec![u, d], vec![p, 1.0 - p])?
            }
            ReturnsDoc::Table {
                values,
                probs,
                labels,
            } => match labels {
                Some(l) => StepReturns::with_labels(l, values, probs)?,
                None => StepReturns::new(values, probs)?,
            },
        };
        LatticeMarket::new(doc.s0, doc.horizon, vec![step; doc.n], rates)
    }
}
