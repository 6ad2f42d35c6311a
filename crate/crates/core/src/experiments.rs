//! Exact finite statistical experiments.
//!
//! A [`FiniteExperiment`] is a finite outcome set carrying a small family of
//! named probability vectors, one of which (the *base*) dominates all the
//! others. Everything here is exact up to floating point: likelihood ratios,
//! power functions of tests, Neyman-Pearson tests, Bayes risks, products,
//! restriction to the sub-σ-field generated by a [`Partition`], and the
//! complementary experiment that carries the residual likelihood.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits;

/// Tolerance for identities that only involve `+`, `*` and `/` of inputs.
pub const EXACT_TOL: f64 = 1e-12;

/// A finite outcome space with a named family of probability vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteExperiment {
    outcomes: Vec<String>,
    names: Vec<String>,
    measures: Vec<Vec<f64>>,
    base: usize,
}

#[derive(Deserialize)]
struct ExperimentDoc {
    outcomes: Vec<serde_json::Value>,
    measures: BTreeMap<String, Vec<f64>>,
    base: String,
}

impl FiniteExperiment {
    /// Builds and validates an experiment.
    ///
    /// Every vector must be nonnegative, sum to one within [`EXACT_TOL`] and
    /// vanish wherever the base measure vanishes.
    pub fn new<S: Into<String>>(
        outcomes: Vec<String>,
        measures: Vec<(S, Vec<f64>)>,
        base: &str,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidExperiment("empty outcome set".into()));
        }
        let mut names = Vec::with_capacity(measures.len());
        let mut vecs = Vec::with_capacity(measures.len());
        for (name, v) in measures {
            let name = name.into();
            if names.contains(&name) {
                return Err(Error::InvalidExperiment(format!(
                    "duplicate measure `{name}`"
                )));
            }
            if v.len() != outcomes.len() {
                return Err(Error::InvalidExperiment(format!(
                    "measure `{name}` has {} entries for {} outcomes",
                    v.len(),
                    outcomes.len()
                )));
            }
            if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::InvalidExperiment(format!(
                    "measure `{name}` has invalid mass {x}"
                )));
            }
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > EXACT_TOL {
                return Err(Error::InvalidExperiment(format!(
                    "measure `{name}` sums to {total}"
                )));
            }
            names.push(name);
            vecs.push(v);
        }
        let base = names
            .iter()
            .position(|n| n == base)
            .ok_or_else(|| Error::UnknownMeasure(base.to_string()))?;
        for (name, v) in names.iter().zip(&vecs) {
            if let Some(w) = (0..outcomes.len()).find(|&w| vecs[base][w] == 0.0 && v[w] > 0.0) {
                return Err(Error::AbsoluteContinuityViolation {
                    num: name.clone(),
                    den: names[base].clone(),
                    outcome: w,
                });
            }
        }
        Ok(Self {
            outcomes,
            names,
            measures: vecs,
            base,
        })
    }

    /// Internal constructor for experiments that are valid by construction.
    pub(crate) fn from_parts(
        outcomes: Vec<String>,
        names: Vec<String>,
        measures: Vec<Vec<f64>>,
        base: usize,
    ) -> Self {
        debug_assert_eq!(names.len(), measures.len());
        debug_assert!(measures.iter().all(|m| m.len() == outcomes.len()));
        Self {
            outcomes,
            names,
            measures,
            base,
        }
    }

    /// Parses `{"outcomes": [...], "measures": {"Q": [...]}, "base": "Q"}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ExperimentDoc = serde_json::from_str(text)?;
        let outcomes = doc
            .outcomes
            .into_iter()
            .map(|v| match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            })
            .collect();
        Self::new(outcomes, doc.measures.into_iter().collect(), &doc.base)
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn base_name(&self) -> &str {
        &self.names[self.base]
    }

    pub fn base(&self) -> &[f64] {
        &self.measures[self.base]
    }

    pub fn measure(&self, name: &str) -> Result<&[f64]> {
        self.index_of(name).map(|i| self.measures[i].as_slice())
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownMeasure(name.to_string()))
    }

    /// `d num / d den` with the convention `0/0 = 0`.
    pub fn likelihood_ratio(&self, num: &str, den: &str) -> Result<Vec<f64>> {
        let n = self.measure(num)?;
        let d = self.measure(den)?;
        ratio(n, d).map_err(|outcome| Error::AbsoluteContinuityViolation {
            num: num.to_string(),
            den: den.to_string(),
            outcome,
        })
    }

    /// Power `E_mu(test)` of a test under measure `mu`.
    pub fn power(&self, test: &Test, mu: &str) -> Result<f64> {
        let m = self.measure(mu)?;
        self.check_test(test)?;
        Ok(dot(test.values(), m))
    }

    /// Neyman-Pearson test of `null` against `alt` with cutoff `c`.
    ///
    /// Rejects (value 1) where `d alt / d null > c`, randomizes with `gamma`
    /// on ties and accepts otherwise. A tie is `|ratio - c| <= 1e-12 * max(1, c)`
    /// so that cutoffs computed from prices still hit lattice atoms.
    pub fn neyman_pearson(&self, null: &str, alt: &str, c: f64, gamma: f64) -> Result<Test> {
        if !(c >= 0.0) || !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParams(format!(
                "Neyman-Pearson cutoff {c} / randomization {gamma}"
            )));
        }
        let null_m = self.measure(null)?;
        let alt_m = self.measure(alt)?;
        let tie = EXACT_TOL * c.max(1.0);
        let values = null_m
            .iter()
            .zip(alt_m)
            .map(|(&n, &a)| {
                if n == 0.0 && a == 0.0 {
                    // outside both supports the test value is irrelevant
                    return 0.0;
                }
                // the ratio is +inf where only the alternative charges
                let r = if n > 0.0 { a / n } else { f64::INFINITY };
                if (r - c).abs() <= tie {
                    gamma
                } else if r > c {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Test { values })
    }

    /// Bayes risk `λ0 E_null(φ) + λ1 E_alt(1 - φ)`.
    pub fn bayes_risk(
        &self,
        null: &str,
        alt: &str,
        test: &Test,
        priors: BinaryPriors,
    ) -> Result<f64> {
        let type_one = self.power(test, null)?;
        let type_two = 1.0 - self.power(test, alt)?;
        Ok(priors.lambda0() * type_one + priors.lambda1() * type_two)
    }

    /// Minimal Bayes risk and the Neyman-Pearson test with `c = λ0 / λ1`
    /// (no randomization) that attains it.
    pub fn min_bayes_risk(
        &self,
        null: &str,
        alt: &str,
        priors: BinaryPriors,
    ) -> Result<(f64, Test)> {
        let c = priors.lambda0() / priors.lambda1();
        let test = self.neyman_pearson(null, alt, c, 0.0)?;
        let risk = self.bayes_risk(null, alt, &test, priors)?;
        Ok((risk, test))
    }

    /// The experiment restricted to the σ-field generated by `part`.
    ///
    /// Outcomes become blocks; every measure is summed over each block.
    pub fn restrict(&self, part: &Partition) -> Result<FiniteExperiment> {
        self.check_partition(part)?;
        let outcomes = part
            .blocks()
            .iter()
            .map(|b| {
                if b.len() == 1 {
                    self.outcomes[b[0]].clone()
                } else {
                    let labels: Vec<&str> = b.iter().map(|&w| self.outcomes[w].as_str()).collect();
                    format!("{{{}}}", labels.join(","))
                }
            })
            .collect();
        let measures = self
            .measures
            .iter()
            .map(|m| {
                part.blocks()
                    .iter()
                    .map(|b| b.iter().map(|&w| m[w]).sum())
                    .collect()
            })
            .collect();
        Ok(FiniteExperiment::from_parts(
            outcomes,
            self.names.clone(),
            measures,
            self.base,
        ))
    }

    /// The complementary experiment `E'` with respect to `part`.
    ///
    /// `E'` lives on the full outcome space, keeps the base measure and for
    /// every other measure uses the density `L / E_base[L | block]`, so that
    /// `L = L' * L_restricted` pointwise. On blocks where the restricted
    /// ratio vanishes `L` vanishes too and the residual density is set to 1.
    pub fn complementary(&self, part: &Partition) -> Result<FiniteExperiment> {
        self.check_partition(part)?;
        let base = self.base();
        let block_base: Vec<f64> = part
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&w| base[w]).sum())
            .collect();
        let mut measures = Vec::with_capacity(self.measures.len());
        for (i, m) in self.measures.iter().enumerate() {
            if i == self.base {
                measures.push(m.clone());
                continue;
            }
            let mut out = vec![0.0; self.len()];
            for (b, block) in part.blocks().iter().enumerate() {
                if block_base[b] == 0.0 {
                    continue;
                }
                let block_mass: f64 = block.iter().map(|&w| m[w]).sum();
                for &w in block {
                    if base[w] == 0.0 {
                        continue;
                    }
                    out[w] = if block_mass == 0.0 {
                        base[w]
                    } else {
                        // base(w) * (m(w)/base(w)) / (block_mass/block_base)
                        m[w] * block_base[b] / block_mass
                    };
                }
            }
            measures.push(out);
        }
        Ok(FiniteExperiment::from_parts(
            self.outcomes.clone(),
            self.names.clone(),
            measures,
            self.base,
        ))
    }

    /// `E_mu[f | part]` evaluated at every outcome (0 on `mu`-null blocks).
    pub fn conditional_expectation(
        &self,
        f: &[f64],
        mu: &str,
        part: &Partition,
    ) -> Result<Vec<f64>> {
        let m = self.measure(mu)?;
        self.check_partition(part)?;
        if f.len() != self.len() {
            return Err(Error::InvalidParams(
                "function length differs from outcome count".into(),
            ));
        }
        let mut out = vec![0.0; self.len()];
        for block in part.blocks() {
            let mass: f64 = block.iter().map(|&w| m[w]).sum();
            let value = if mass > 0.0 {
                block.iter().map(|&w| m[w] * f[w]).sum::<f64>() / mass
            } else {
                0.0
            };
            for &w in block {
                out[w] = value;
            }
        }
        Ok(out)
    }

    fn check_test(&self, test: &Test) -> Result<()> {
        if test.len() != self.len() {
            return Err(Error::InvalidParams(format!(
                "test has {} values for {} outcomes",
                test.len(),
                self.len()
            )));
        }
        Ok(())
    }

    fn check_partition(&self, part: &Partition) -> Result<()> {
        if part.outcome_count() != self.len() {
            return Err(Error::InvalidParams(format!(
                "partition covers {} outcomes, experiment has {}",
                part.outcome_count(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// Product experiment of factors sharing the same measure names.
///
/// Outcomes are ordered lexicographically with the first factor varying
/// slowest; labels are joined with `,`.
pub fn product(factors: &[FiniteExperiment]) -> Result<FiniteExperiment> {
    product_with_cap(factors, limits::DEFAULT_MAX_PRODUCT)
}

pub fn product_with_cap(factors: &[FiniteExperiment], cap: u128) -> Result<FiniteExperiment> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidParams("product of zero experiments".into()))?;
    limits::check(limits::product_size(factors.iter().map(|f| f.len())), cap)?;
    let names = first.names.clone();
    let base_name = first.base_name().to_string();
    let mut index_maps = Vec::with_capacity(factors.len());
    for f in factors {
        let mut sorted_a: Vec<&String> = f.names.iter().collect();
        let mut sorted_b: Vec<&String> = names.iter().collect();
        sorted_a.sort();
        sorted_b.sort();
        if sorted_a != sorted_b || f.base_name() != base_name {
            return Err(Error::InvalidParams(
                "product factors must share measure names and base".into(),
            ));
        }
        index_maps.push(
            names
                .iter()
                .map(|n| f.index_of(n))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let mut outcomes = first.outcomes.clone();
    let mut measures: Vec<Vec<f64>> = index_maps[0]
        .iter()
        .map(|&i| first.measures[i].clone())
        .collect();
    for (f, map) in factors.iter().zip(&index_maps).skip(1) {
        let mut next_outcomes = Vec::with_capacity(outcomes.len() * f.len());
        for a in &outcomes {
            for b in &f.outcomes {
                next_outcomes.push(format!("{a},{b}"));
            }
        }
        outcomes = next_outcomes;
        for (m, &fi) in measures.iter_mut().zip(map) {
            let fm = &f.measures[fi];
            let mut next = Vec::with_capacity(m.len() * fm.len());
            for &x in m.iter() {
                for &y in fm {
                    next.push(x * y);
                }
            }
            *m = next;
        }
    }
    let base = names.iter().position(|n| *n == base_name).unwrap_or(0);
    Ok(FiniteExperiment::from_parts(
        outcomes, names, measures, base,
    ))
}

/// A `[0, 1]`-valued function on outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Test {
    values: Vec<f64>,
}

impl Test {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParams(format!(
                "test value {v} outside [0, 1]"
            )));
        }
        Ok(Self { values })
    }

    pub fn constant(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn indicator<I: IntoIterator<Item = bool>>(flags: I) -> Self {
        Self {
            values: flags
                .into_iter()
                .map(|b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `1 - φ`.
    pub fn complement(&self) -> Test {
        Test {
            values: self.values.iter().map(|v| 1.0 - v).collect(),
        }
    }
}

/// Disjoint cover of `0..n` by nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidParams("empty partition block".into()));
            }
            for &w in block {
                if w >= n || block_of[w] != usize::MAX {
                    return Err(Error::InvalidParams(format!(
                        "outcome {w} is out of range or in two blocks"
                    )));
                }
                block_of[w] = b;
            }
        }
        if block_of.contains(&usize::MAX) {
            return Err(Error::InvalidParams(
                "partition does not cover all outcomes".into(),
            ));
        }
        Ok(Self { blocks, block_of })
    }

    /// One block holding everything.
    pub fn trivial(n: usize) -> Self {
        Self {
            blocks: vec![(0..n).collect()],
            block_of: vec![0; n],
        }
    }

    /// Singleton blocks.
    pub fn discrete(n: usize) -> Self {
        Self {
            blocks: (0..n).map(|w| vec![w]).collect(),
            block_of: (0..n).collect(),
        }
    }

    /// Groups outcomes with equal keys; blocks appear in first-seen order.
    pub fn from_keys<K: Eq + Hash>(keys: &[K]) -> Self {
        let mut seen: HashMap<&K, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(keys.len());
        for (w, k) in keys.iter().enumerate() {
            let b = *seen.entry(k).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(w);
            block_of.push(b);
        }
        Self { blocks, block_of }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, outcome: usize) -> usize {
        self.block_of[outcome]
    }

    pub fn outcome_count(&self) -> usize {
        self.block_of.len()
    }
}

/// Prior weights `(λ0, λ1)` on the null and the alternative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryPriors {
    lambda0: f64,
    lambda1: f64,
}

impl BinaryPriors {
    /// Priors `(λ0, 1 - λ0)`; `λ0` must lie in `[0, 1)`.
    ///
    /// The closed end at zero admits the degenerate prior produced by a
    /// call with zero strike.
    pub fn new(lambda0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda0) {
            return Err(Error::InvalidParams(format!("prior λ0 = {lambda0}")));
        }
        Ok(Self {
            lambda0,
            lambda1: 1.0 - lambda0,
        })
    }

    /// Priors `(c / (1 + c), 1 / (1 + c))` for which the Neyman-Pearson test
    /// with cutoff `c` is a Bayes test.
    pub fn from_cutoff(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParams(format!("cutoff {c}")));
        }
        Ok(Self {
            lambda0: c / (1.0 + c),
            lambda1: 1.0 / (1.0 + c),
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }
}

pub(crate) fn ratio(num: &[f64], den: &[f64]) -> std::result::Result<Vec<f64>, usize> {
    num.iter()
        .zip(den)
        .enumerate()
        .map(|(w, (&n, &d))| {
            if d > 0.0 {
                Ok(n / d)
            } else if n == 0.0 {
                Ok(0.0)
            } else {
                Err(w)
            }
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point() -> FiniteExperiment {
        FiniteExperiment::new(
            vec!["up".into(), "down".into()],
            vec![
                ("Q", vec![1.0 / 3.0, 2.0 / 3.0]),
                ("Q1", vec![2.0 / 3.0, 1.0 / 3.0]),
            ],
            "Q",
        )
        .unwrap()
    }

    fn call_experiment() -> FiniteExperiment {
        // one-step CRR call: Q = (2/3, 1/3) on (down, up), Q1 = (1/3, 2/3)
        FiniteExperiment::new(
            vec!["down".into(), "up".into()],
            vec![
                ("Q", vec![2.0 / 3.0, 1.0 / 3.0]),
                ("Q1", vec![1.0 / 3.0, 2.0 / 3.0]),
            ],
            "Q",
        )
        .unwrap()
    }

    fn bernoulli(p: f64) -> FiniteExperiment {
        FiniteExperiment::new(
            vec!["1".into(), "0".into()],
            vec![("Q", vec![0.5, 0.5]), ("P", vec![p, 1.0 - p])],
            "Q",
        )
        .unwrap()
    }

    #[test]
    fn ratio_identity_and_division() {
        let e = two_point();
        assert_eq!(e.likelihood_ratio("Q", "Q").unwrap(), vec![1.0, 1.0]);
        let r = e.likelihood_ratio("Q1", "Q").unwrap();
        assert_abs_diff_eq!(r[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.5, epsilon = 1e-15);
        let mean: f64 = dot(&r, e.measure("Q").unwrap());
        assert_abs_diff_eq!(mean, 1.0, epsilon = EXACT_TOL);
    }

    #[test]
    fn ratio_with_null_numerator() {
        let e = FiniteExperiment::new(
            vec!["a".into(), "b".into()],
            vec![("Q", vec![0.5, 0.5]), ("Q1", vec![1.0, 0.0])],
            "Q",
        )
        .unwrap();
        assert_eq!(e.likelihood_ratio("Q1", "Q").unwrap(), vec![2.0, 0.0]);
        // reversed direction is not absolutely continuous
        assert!(matches!(
            e.likelihood_ratio("Q", "Q1"),
            Err(Error::AbsoluteContinuityViolation { outcome: 1, .. })
        ));
    }

    #[test]
    fn construction_rejects_bad_vectors() {
        let bad_sum = FiniteExperiment::new(vec!["a".into()], vec![("Q", vec![0.9])], "Q");
        assert!(matches!(bad_sum, Err(Error::InvalidExperiment(_))));
        let not_dominated = FiniteExperiment::new(
            vec!["a".into(), "b".into()],
            vec![("Q", vec![1.0, 0.0]), ("P", vec![0.5, 0.5])],
            "Q",
        );
        assert!(matches!(
            not_dominated,
            Err(Error::AbsoluteContinuityViolation { .. })
        ));
        let no_base = FiniteExperiment::new(vec!["a".into()], vec![("Q", vec![1.0])], "P");
        assert!(matches!(no_base, Err(Error::UnknownMeasure(_))));
    }

    #[test]
    fn power_examples() {
        let e = two_point();
        assert_eq!(e.power(&Test::constant(2, 1.0).unwrap(), "Q").unwrap(), 1.0);
        assert_eq!(e.power(&Test::constant(2, 0.0).unwrap(), "Q").unwrap(), 0.0);
        let phi = Test::new(vec![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(e.power(&phi, "Q").unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(Test::new(vec![1.5]).is_err());
    }

    #[test]
    fn neyman_pearson_examples() {
        let e = call_experiment();
        // ratios (0.5, 2)
        let phi = e.neyman_pearson("Q", "Q1", 1.25, 0.0).unwrap();
        assert_eq!(phi.values(), &[0.0, 1.0]);
        let tie = e.neyman_pearson("Q", "Q1", 2.0, 0.5).unwrap();
        assert_eq!(tie.values(), &[0.0, 0.5]);
        let zero = e.neyman_pearson("Q", "Q1", 0.0, 0.0).unwrap();
        assert_eq!(zero.values(), &[1.0, 1.0]);
    }

    #[test]
    fn neyman_pearson_zero_cutoff_is_support_indicator() {
        let e = FiniteExperiment::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![("Q", vec![0.25, 0.25, 0.5]), ("Q1", vec![0.5, 0.5, 0.0])],
            "Q",
        )
        .unwrap();
        let phi = e.neyman_pearson("Q", "Q1", 0.0, 0.0).unwrap();
        assert_eq!(phi.values(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn bayes_risk_examples() {
        let e = call_experiment();
        let priors = BinaryPriors::new(5.0 / 9.0).unwrap();
        let zero = Test::constant(2, 0.0).unwrap();
        let one = Test::constant(2, 1.0).unwrap();
        assert_abs_diff_eq!(
            e.bayes_risk("Q", "Q1", &zero, priors).unwrap(),
            priors.lambda1(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            e.bayes_risk("Q", "Q1", &one, priors).unwrap(),
            priors.lambda0(),
            epsilon = 1e-15
        );
        let phi = Test::new(vec![0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(
            e.bayes_risk("Q", "Q1", &phi, priors).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        // (s0 - p) / (s0 + K) with s0 = 4, K = 5, p = 1
        assert_abs_diff_eq!((4.0 - 1.0) / (4.0 + 5.0), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn min_bayes_risk_examples() {
        let e = call_experiment();
        let (risk, phi) = e
            .min_bayes_risk("Q", "Q1", BinaryPriors::new(5.0 / 9.0).unwrap())
            .unwrap();
        assert_abs_diff_eq!(risk, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(phi.values(), &[0.0, 1.0]);

        let same = FiniteExperiment::new(
            vec!["a".into(), "b".into()],
            vec![("Q", vec![0.3, 0.7]), ("Q1", vec![0.3, 0.7])],
            "Q",
        )
        .unwrap();
        for l0 in [0.2, 0.5, 0.8] {
            let (risk, _) = same
                .min_bayes_risk("Q", "Q1", BinaryPriors::new(l0).unwrap())
                .unwrap();
            assert_abs_diff_eq!(risk, l0.min(1.0 - l0), epsilon = 1e-15);
        }

        let disjoint = FiniteExperiment::new(
            vec!["a".into(), "b".into()],
            vec![
                ("Q", vec![1.0, 0.0]),
                ("Q1", vec![0.0, 1.0]),
                ("M", vec![0.5, 0.5]),
            ],
            "M",
        )
        .unwrap();
        let (risk, _) = disjoint
            .min_bayes_risk("Q", "Q1", BinaryPriors::new(0.5).unwrap())
            .unwrap();
        assert_eq!(risk, 0.0);
    }

    #[test]
    fn product_examples() {
        let single = product(&[bernoulli(1.0 / 3.0)]).unwrap();
        assert_eq!(single, bernoulli(1.0 / 3.0));

        let pair = product(&[bernoulli(1.0 / 3.0), bernoulli(1.0 / 3.0)]).unwrap();
        let p = pair.measure("P").unwrap();
        let expected = [1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 4.0 / 9.0];
        for (a, b) in p.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(pair.outcomes()[0], "1,1");

        let cap = product_with_cap(&[bernoulli(0.5), bernoulli(0.5), bernoulli(0.5)], 4);
        assert!(matches!(cap, Err(Error::SizeLimit { size: 8, cap: 4 })));
    }

    #[test]
    fn product_ratios_multiply() {
        let factors = [bernoulli(0.2), bernoulli(0.6), bernoulli(0.9)];
        let prod = product(&factors).unwrap();
        let lr = prod.likelihood_ratio("P", "Q").unwrap();
        let single: Vec<Vec<f64>> = factors
            .iter()
            .map(|f| f.likelihood_ratio("P", "Q").unwrap())
            .collect();
        for (w, &r) in lr.iter().enumerate() {
            let (i, j, k) = (w / 4, (w / 2) % 2, w % 2);
            let brute = single[0][i] * single[1][j] * single[2][k];
            assert_abs_diff_eq!(r, brute, epsilon = 1e-14);
        }
    }

    #[test]
    fn restrict_examples() {
        let e = two_point();
        let trivial = e.restrict(&Partition::trivial(2)).unwrap();
        assert_eq!(trivial.len(), 1);
        for name in e.names() {
            assert_abs_diff_eq!(trivial.measure(name).unwrap()[0], 1.0, epsilon = 1e-15);
        }
        assert_eq!(e.restrict(&Partition::discrete(2)).unwrap(), e);

        let pair = product(&[bernoulli(1.0 / 3.0), bernoulli(1.0 / 3.0)]).unwrap();
        let by_first = Partition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let r = pair.restrict(&by_first).unwrap();
        assert_abs_diff_eq!(r.measure("P").unwrap()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.measure("P").unwrap()[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(r.outcomes()[0], "{1,1,1,0}");
    }

    #[test]
    fn restricted_ratio_is_conditional_expectation() {
        let pair = product(&[bernoulli(0.2), bernoulli(0.7)]).unwrap();
        let part = Partition::from_keys(&[0, 0, 1, 1]);
        let lr = pair.likelihood_ratio("P", "Q").unwrap();
        let cond = pair.conditional_expectation(&lr, "Q", &part).unwrap();
        let restricted = pair
            .restrict(&part)
            .unwrap()
            .likelihood_ratio("P", "Q")
            .unwrap();
        for w in 0..4 {
            assert_abs_diff_eq!(cond[w], restricted[part.block_of(w)], epsilon = 1e-14);
        }
    }

    #[test]
    fn complementary_trivial_and_discrete() {
        let pair = product(&[bernoulli(0.2), bernoulli(0.7)]).unwrap();
        let trivial = pair.complementary(&Partition::trivial(4)).unwrap();
        for name in pair.names() {
            for (a, b) in trivial
                .measure(name)
                .unwrap()
                .iter()
                .zip(pair.measure(name).unwrap())
            {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
            }
        }
        let discrete = pair.complementary(&Partition::discrete(4)).unwrap();
        for r in discrete.likelihood_ratio("P", "Q").unwrap() {
            assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn complementary_on_null_block_keeps_probability() {
        let e = FiniteExperiment::new(
            (0..4).map(|i| i.to_string()).collect(),
            vec![("Q", vec![0.25; 4]), ("Q1", vec![0.5, 0.5, 0.0, 0.0])],
            "Q",
        )
        .unwrap();
        let part = Partition::from_keys(&[0, 0, 1, 1]);
        let c = e.complementary(&part).unwrap();
        let total: f64 = c.measure("Q1").unwrap().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
        assert_eq!(c.measure("Q1").unwrap(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn json_literal() {
        let e = FiniteExperiment::from_json(
            r#"{"outcomes": ["up", "down"], "measures": {"Q": [0.5, 0.5], "Q1": [0.75, 0.25]}, "base": "Q"}"#,
        )
        .unwrap();
        assert_eq!(e.base_name(), "Q");
        assert_eq!(e.likelihood_ratio("Q1", "Q").unwrap(), vec![1.5, 0.5]);
        assert!(FiniteExperiment::from_json("{\"outcomes\": []}").is_err());
    }

    #[test]
    fn priors() {
        let p = BinaryPriors::from_cutoff(1.25).unwrap();
        assert_abs_diff_eq!(p.lambda0(), 5.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.lambda1(), 4.0 / 9.0, epsilon = 1e-15);
        assert!(BinaryPriors::new(1.0).is_err());
        assert!(BinaryPriors::from_cutoff(-1.0).is_err());
    }
}
