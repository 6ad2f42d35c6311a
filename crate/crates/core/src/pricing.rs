//! Option prices as linear combinations of test powers.
//!
//! A payoff is a finite sum of legs `(a S_T - K) φ(S)`, where `φ` is a
//! `{0, 1}`-valued test on the price path. Under a martingale measure `Q`
//! the discounted price of one leg is `a s0 E_{Q1}(φ) - disc K E_Q(φ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{BinaryPriors, FiniteExperiment, Test, EXACT_TOL};
use crate::lattice::{
    LatticeMarket, PathState, ProductMeasure, StepSolution, MEASURE_Q, MEASURE_Q1,
};
use crate::law::Atoms;
use crate::limits;

/// Relative tolerance for strict comparisons of prices with strikes and
/// barriers, so that mathematically exact ties are treated alike whichever
/// way the node value was multiplied out.
pub const TIE_TOL: f64 = 1e-12;

/// Cap on the number of vertex combinations visited by [`price_bounds`].
pub const MAX_VERTEX_COMBINATIONS: u128 = 1 << 16;

/// The test `φ` of one leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Indicator {
    Always,
    /// `1{S_T > level}`
    Above {
        level: f64,
    },
    /// `1{S_T < level}`
    Below {
        level: f64,
    },
    /// `1{S_T > level} 1{max_t S_t < barrier}` on grid times `0..=N`.
    UpAndOut {
        level: f64,
        barrier: f64,
    },
}

fn above(s: f64, level: f64) -> bool {
    s > level + TIE_TOL * level.abs().max(1.0)
}

fn below(s: f64, level: f64) -> bool {
    s < level - TIE_TOL * level.abs().max(1.0)
}

impl Indicator {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Indicator::UpAndOut { .. })
    }

    /// Value on the terminal price alone; path tests are rejected.
    pub fn terminal(&self, s_t: f64) -> Result<f64> {
        Ok(match *self {
            Indicator::Always => 1.0,
            Indicator::Above { level } => f64::from(u8::from(above(s_t, level))),
            Indicator::Below { level } => f64::from(u8::from(below(s_t, level))),
            Indicator::UpAndOut { .. } => return Err(Error::PathDependenceUnsupported),
        })
    }

    /// Value on a price path `S_0, ..., S_N`.
    pub fn on_path(&self, path: &[f64]) -> f64 {
        let s_t = path[path.len() - 1];
        let hit = match *self {
            Indicator::Always => true,
            Indicator::Above { level } => above(s_t, level),
            Indicator::Below { level } => below(s_t, level),
            Indicator::UpAndOut { level, barrier } => {
                above(s_t, level) && path.iter().all(|&s| below(s, barrier))
            }
        };
        f64::from(u8::from(hit))
    }
}

/// One term `(a S_T - strike) φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Leg {
    pub a: f64,
    pub strike: f64,
    pub test: Indicator,
}

impl Leg {
    pub fn value(&self, path: &[f64]) -> f64 {
        let phi = self.test.on_path(path);
        if phi == 0.0 {
            0.0
        } else {
            (self.a * path[path.len() - 1] - self.strike) * phi
        }
    }
}

/// A finite sum of legs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Payoff {
    legs: Vec<Leg>,
}

fn check_level(name: &str, k: f64) -> Result<()> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "{name} = {k} must be finite and nonnegative"
        )))
    }
}

impl Payoff {
    pub fn new(legs: Vec<Leg>) -> Result<Self> {
        if legs.is_empty() {
            return Err(Error::InvalidParams("payoff needs at least one leg".into()));
        }
        Ok(Self { legs })
    }

    /// `(S_T - K) 1{S_T > K}`
    pub fn call(k: f64) -> Result<Self> {
        check_level("K", k)?;
        Self::new(vec![Leg {
            a: 1.0,
            strike: k,
            test: Indicator::Above { level: k },
        }])
    }

    /// `(-S_T + K) 1{S_T < K}`
    pub fn put(k: f64) -> Result<Self> {
        check_level("K", k)?;
        Self::new(vec![Leg {
            a: -1.0,
            strike: -k,
            test: Indicator::Below { level: k },
        }])
    }

    /// Call plus put at the same strike.
    pub fn straddle(k: f64) -> Result<Self> {
        Self::strangle(k, k)
    }

    /// Put at `k1` plus call at `k2`, `k1 <= k2`.
    pub fn strangle(k1: f64, k2: f64) -> Result<Self> {
        if k1 > k2 {
            return Err(Error::InvalidParams(format!(
                "strangle needs K1 <= K2 (got {k1} > {k2})"
            )));
        }
        Self::sum(vec![Self::put(k1)?, Self::call(k2)?])
    }

    /// Pays 1 when `S_T > K`: `a = 0`, strike `-1`.
    pub fn digital(k: f64) -> Result<Self> {
        check_level("K", k)?;
        Self::new(vec![Leg {
            a: 0.0,
            strike: -1.0,
            test: Indicator::Above { level: k },
        }])
    }

    /// Up-and-out call; an infinite barrier gives the plain call.
    pub fn barrier_up_out(k: f64, barrier: f64) -> Result<Self> {
        check_level("K", k)?;
        if barrier == f64::INFINITY {
            return Self::call(k);
        }
        if !(barrier.is_finite() && barrier > 0.0) {
            return Err(Error::InvalidParams(format!(
                "barrier B = {barrier} must be positive"
            )));
        }
        Self::new(vec![Leg {
            a: 1.0,
            strike: k,
            test: Indicator::UpAndOut { level: k, barrier },
        }])
    }

    pub fn sum(parts: Vec<Payoff>) -> Result<Self> {
        Self::new(parts.into_iter().flat_map(|p| p.legs).collect())
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn is_terminal(&self) -> bool {
        self.legs.iter().all(|l| l.test.is_terminal())
    }

    /// Undiscounted payoff on a price path `S_0, ..., S_N`.
    pub fn value(&self, path: &[f64]) -> f64 {
        self.legs.iter().map(|l| l.value(path)).sum()
    }

    /// The strike of a single plain call leg.
    pub fn as_call(&self) -> Option<f64> {
        match self.legs.as_slice() {
            [Leg {
                a,
                strike,
                test: Indicator::Above { level },
            }] if *a == 1.0 && strike == level => Some(*strike),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PayoffSpec = serde_json::from_str(text)?;
        spec.build()
    }
}

/// Payoff spec as read from JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffSpec {
    Call {
        #[serde(rename = "K")]
        k: f64,
    },
    Put {
        #[serde(rename = "K")]
        k: f64,
    },
    Straddle {
        #[serde(rename = "K")]
        k: f64,
    },
    Strangle {
        #[serde(rename = "K1")]
        k1: f64,
        #[serde(rename = "K2")]
        k2: f64,
    },
    Digital {
        #[serde(rename = "K")]
        k: f64,
    },
    BarrierUpOut {
        #[serde(rename = "K")]
        k: f64,
        /// `null` or absent means no barrier.
        #[serde(rename = "B", default)]
        b: Option<f64>,
    },
    Sum {
        terms: Vec<PayoffSpec>,
    },
}

impl PayoffSpec {
    pub fn build(&self) -> Result<Payoff> {
        match self {
            PayoffSpec::Call { k } => Payoff::call(*k),
            PayoffSpec::Put { k } => Payoff::put(*k),
            PayoffSpec::Straddle { k } => Payoff::straddle(*k),
            PayoffSpec::Strangle { k1, k2 } => Payoff::strangle(*k1, *k2),
            PayoffSpec::Digital { k } => Payoff::digital(*k),
            PayoffSpec::BarrierUpOut { k, b } => {
                Payoff::barrier_up_out(*k, b.unwrap_or(f64::INFINITY))
            }
            PayoffSpec::Sum { terms } => {
                Payoff::sum(terms.iter().map(PayoffSpec::build).collect::<Result<_>>()?)
            }
        }
    }
}

/// Powers of one leg's test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegPowers {
    pub a: f64,
    pub strike: f64,
    /// `E_{Q1}(φ)`
    pub power_q1: f64,
    /// `E_Q(φ)`
    pub power_q: f64,
}

/// Price assembled from test powers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceReport {
    pub price: f64,
    pub s0: f64,
    pub discount: f64,
    pub legs: Vec<LegPowers>,
}

impl PriceReport {
    pub fn from_powers(s0: f64, discount: f64, legs: Vec<LegPowers>) -> Self {
        let price = legs
            .iter()
            .map(|l| l.a * s0 * l.power_q1 - discount * l.strike * l.power_q)
            .sum();
        Self {
            price,
            s0,
            discount,
            legs,
        }
    }

    pub const CSV_HEADER: &'static str = "price,discount,powers_q1,powers_q";

    /// One CSV row; per-leg powers are joined with `;`.
    pub fn csv_row(&self) -> String {
        let join = |f: fn(&LegPowers) -> f64| {
            self.legs
                .iter()
                .map(|l| fmt_g(f(l)))
                .collect::<Vec<_>>()
                .join(";")
        };
        format!(
            "{},{},{},{}",
            fmt_g(self.price),
            fmt_g(self.discount),
            join(|l| l.power_q1),
            join(|l| l.power_q)
        )
    }
}

/// Formats with 12 significant digits and no trailing zeros.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mant, e) = s.split_once('e').expect("exponent");
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{mant}e{e}")
    }
}

/// Factor turning `X_T / X_0` into `S_T`.
fn terminal_scale(m: &LatticeMarket) -> f64 {
    m.s0() / m.discount()
}

/// `E_Q((S^0_T)^{-1} H)` computed directly.
///
/// Terminal payoffs use the recombined law of `S_T`; path-dependent ones
/// enumerate all paths (capped by [`limits::max_paths`]).
pub fn price_direct(m: &LatticeMarket, q: &ProductMeasure, payoff: &Payoff) -> Result<f64> {
    let disc = m.discount();
    if payoff.is_terminal() {
        let law = m.terminal_law(q)?;
        let scale = terminal_scale(m);
        return Ok(law.expectation(|x| disc * payoff.value(&[scale * x])));
    }
    m.check_measure(q)?;
    limits::check(m.path_count(), limits::max_paths())?;
    let bonds: Vec<f64> = (0..=m.n_steps()).map(|t| m.bond(t)).collect();
    let mut total = 0.0;
    let mut path = vec![0.0; m.n_steps() + 1];
    m.for_each_path(q, |_, prob, x| {
        for (t, s) in path.iter_mut().enumerate() {
            *s = m.s0() * x[t] * bonds[t];
        }
        total += prob * disc * payoff.value(&path);
    });
    Ok(total)
}

/// Price through the powers `E_{Q1}(φ)` and `E_Q(φ)` of each leg's test.
///
/// The powers are computed on the induced experiment over all paths when
/// that fits under the path cap, otherwise on the law of `S_T`.
pub fn price_via_tests(
    m: &LatticeMarket,
    q: &ProductMeasure,
    payoff: &Payoff,
) -> Result<PriceReport> {
    let cap = limits::max_paths().min(limits::DEFAULT_MAX_PRODUCT);
    let legs = if m.path_count() <= cap {
        powers_on_paths(m, q, payoff)?
    } else if payoff.is_terminal() {
        powers_on_law(m, &m.terminal_law(q)?, payoff)?
    } else {
        return Err(Error::SizeLimit {
            size: m.path_count(),
            cap,
        });
    };
    Ok(PriceReport::from_powers(m.s0(), m.discount(), legs))
}

fn powers_on_paths(
    m: &LatticeMarket,
    q: &ProductMeasure,
    payoff: &Payoff,
) -> Result<Vec<LegPowers>> {
    let exp = m.induced_experiment(q)?;
    let bonds: Vec<f64> = (0..=m.n_steps()).map(|t| m.bond(t)).collect();
    let mut tests = vec![Vec::with_capacity(exp.len()); payoff.legs.len()];
    let mut path = vec![0.0; m.n_steps() + 1];
    m.for_each_path(q, |_, _, x| {
        for (t, s) in path.iter_mut().enumerate() {
            *s = m.s0() * x[t] * bonds[t];
        }
        for (leg, values) in payoff.legs.iter().zip(tests.iter_mut()) {
            values.push(leg.test.on_path(&path));
        }
    });
    payoff
        .legs
        .iter()
        .zip(tests)
        .map(|(leg, values)| {
            let test = Test::indicator(values.into_iter().map(|v| v == 1.0));
            Ok(LegPowers {
                a: leg.a,
                strike: leg.strike,
                power_q1: exp.power(&test, MEASURE_Q1)?,
                power_q: exp.power(&test, MEASURE_Q)?,
            })
        })
        .collect()
}

fn powers_on_law(m: &LatticeMarket, law: &Atoms, payoff: &Payoff) -> Result<Vec<LegPowers>> {
    let scale = terminal_scale(m);
    payoff
        .legs
        .iter()
        .map(|leg| {
            let mut q1 = 0.0;
            let mut q0 = 0.0;
            for (&x, &p) in law.values.iter().zip(&law.probs) {
                let phi = leg.test.terminal(scale * x)?;
                q0 += p * phi;
                q1 += p * x * phi;
            }
            Ok(LegPowers {
                a: leg.a,
                strike: leg.strike,
                power_q1: q1,
                power_q: q0,
            })
        })
        .collect()
}

/// A European call seen as a Bayes testing problem of `Q` against `Q1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NpDecomposition {
    /// Critical value `K disc / s0`.
    pub c: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub price: f64,
    /// `(s0 - p) / (s0 + K disc)`
    pub closed_form_risk: f64,
    /// Bayes risk of the Neyman-Pearson test, computed on the experiment.
    pub bayes_risk: f64,
    /// The Neyman-Pearson test on the atoms of `X_T / X_0`.
    #[serde(skip)]
    pub test: Test,
    /// The experiment `{Q1, Q}` restricted to `X_T / X_0`.
    #[serde(skip)]
    pub experiment: FiniteExperiment,
}

/// Neyman-Pearson decomposition of a European call price.
pub fn np_decomposition(
    m: &LatticeMarket,
    q: &ProductMeasure,
    payoff: &Payoff,
) -> Result<NpDecomposition> {
    let k = payoff.as_call().ok_or(Error::NotACall)?;
    let disc = m.discount();
    let s0 = m.s0();
    let c = k * disc / s0;
    let priors = BinaryPriors::from_cutoff(c)?;
    let experiment = terminal_experiment(&m.terminal_law(q)?)?;
    let test = experiment.neyman_pearson(MEASURE_Q, MEASURE_Q1, c, 0.0)?;
    let bayes_risk = experiment.bayes_risk(MEASURE_Q, MEASURE_Q1, &test, priors)?;
    let price = price_direct(m, q, payoff)?;
    Ok(NpDecomposition {
        c,
        lambda0: priors.lambda0(),
        lambda1: priors.lambda1(),
        price,
        closed_form_risk: (s0 - price) / (s0 + k * disc),
        bayes_risk,
        test,
        experiment,
    })
}

/// The experiment `{Q, Q1}` on the (merged) atoms of `X_T / X_0`.
fn terminal_experiment(law: &Atoms) -> Result<FiniteExperiment> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (xs, cs) = law.cdf();
    let mut prev = 0.0;
    for (x, c) in xs.into_iter().zip(cs) {
        let p = c - prev;
        prev = c;
        match merged.last_mut() {
            Some((v, mass)) if (*v - x).abs() <= EXACT_TOL * v.abs().max(1.0) => *mass += p,
            _ => merged.push((x, p)),
        }
    }
    let outcomes = merged.iter().map(|(x, _)| format!("{x:.12e}")).collect();
    let q: Vec<f64> = merged.iter().map(|(_, p)| *p).collect();
    let q1: Vec<f64> = merged.iter().map(|(x, p)| x * p).collect();
    let (q, q1) = (normalize(q), normalize(q1));
    FiniteExperiment::new(outcomes, vec![(MEASURE_Q, q), (MEASURE_Q1, q1)], MEASURE_Q)
}

/// Removes rounding drift from aggregated masses.
fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= total);
    v
}

/// Price at the node `state`, in currency units at time `t`.
///
/// Uses the complementary market started at the observed price, which is
/// the updated test `φ_t` of the original payoff.
pub fn dynamic_price(
    m: &LatticeMarket,
    q: &ProductMeasure,
    payoff: &Payoff,
    state: &PathState,
) -> Result<f64> {
    if !payoff.is_terminal() {
        return Err(Error::PathDependenceUnsupported);
    }
    m.check_measure(q)?;
    let t = state.t();
    if t == m.n_steps() {
        m.check_state(state)?;
        let s = m.price_at(state);
        return Ok(payoff.value(&[s]));
    }
    let rest = m.complementary_market(state)?;
    price_direct(&rest, &q.suffix(t), payoff)
}

/// Lowest and highest price over product martingale measures built from
/// the per-step solution vertices.
pub fn price_bounds(m: &LatticeMarket, payoff: &Payoff) -> Result<(f64, f64)> {
    let set = m.solve_martingale_measures()?;
    let choices: Vec<Vec<Vec<f64>>> = set.steps().iter().map(StepSolution::vertices).collect();
    limits::check(
        limits::product_size(choices.iter().map(Vec::len)),
        MAX_VERTEX_COMBINATIONS,
    )?;
    let mut pick = vec![0usize; choices.len()];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    loop {
        let q = ProductMeasure::new(
            pick.iter()
                .zip(&choices)
                .map(|(&i, c)| c[i].clone())
                .collect(),
        );
        let p = price_direct(m, &q, payoff)?;
        lo = lo.min(p);
        hi = hi.max(p);
        // odometer over vertex choices, last step fastest
        let mut j = pick.len();
        loop {
            if j == 0 {
                return Ok((lo, hi));
            }
            j -= 1;
            pick[j] += 1;
            if pick[j] < choices[j].len() {
                break;
            }
            pick[j] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_step() -> (LatticeMarket, ProductMeasure) {
        let m = LatticeMarket::crr(2.0, 0.5, 1.0, 0.5, 1, 4.0).unwrap();
        let q = m.solve_martingale_measures().unwrap().unique().unwrap();
        (m, q)
    }

    fn two_step() -> (LatticeMarket, ProductMeasure) {
        let m = LatticeMarket::crr(2.0, 0.5, 1.0, 0.5, 2, 4.0).unwrap();
        let q = m.solve_martingale_measures().unwrap().unique().unwrap();
        (m, q)
    }

    #[test]
    fn payoff_constructors() {
        let call0 = Payoff::call(0.0).unwrap();
        assert_eq!(call0.value(&[3.0]), 3.0);
        assert_eq!(
            Payoff::strangle(5.0, 5.0).unwrap(),
            Payoff::straddle(5.0).unwrap()
        );
        assert_eq!(
            Payoff::barrier_up_out(5.0, f64::INFINITY).unwrap(),
            Payoff::call(5.0).unwrap()
        );
        assert!(Payoff::call(-1.0).is_err());
        assert!(Payoff::strangle(6.0, 5.0).is_err());
        assert_eq!(Payoff::put(5.0).unwrap().value(&[2.0]), 3.0);
        assert_eq!(Payoff::digital(5.0).unwrap().value(&[8.0]), 1.0);
        let b = Payoff::barrier_up_out(5.0, 10.0).unwrap();
        assert_eq!(b.value(&[4.0, 8.0, 9.0]), 4.0);
        assert_eq!(b.value(&[4.0, 12.0, 9.0]), 0.0);
        assert_eq!(b.value(&[4.0, 8.0, 10.0]), 0.0);
        assert_eq!(Payoff::call(5.0).unwrap().as_call(), Some(5.0));
        assert_eq!(Payoff::digital(5.0).unwrap().as_call(), None);
    }

    #[test]
    fn payoff_json() {
        let p = Payoff::from_json(r#"{"type": "barrier_up_out", "K": 5, "B": null}"#).unwrap();
        assert_eq!(p, Payoff::call(5.0).unwrap());
        let s = Payoff::from_json(
            r#"{"type": "sum", "terms": [{"type": "put", "K": 4}, {"type": "call", "K": 6}]}"#,
        )
        .unwrap();
        assert_eq!(s, Payoff::strangle(4.0, 6.0).unwrap());
        assert!(Payoff::from_json(r#"{"type": "asian", "K": 1}"#).is_err());
    }

    #[test]
    fn one_step_prices() {
        let (m, q) = one_step();
        let call = Payoff::call(5.0).unwrap();
        assert_abs_diff_eq!(price_direct(&m, &q, &call).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            price_direct(&m, &q, &Payoff::call(0.0).unwrap()).unwrap(),
            4.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            price_direct(&m, &q, &Payoff::digital(5.0).unwrap()).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );

        let r = price_via_tests(&m, &q, &call).unwrap();
        assert_abs_diff_eq!(r.legs[0].power_q1, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.legs[0].power_q, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.price, 1.0, epsilon = 1e-15);

        let put = price_via_tests(&m, &q, &Payoff::put(5.0).unwrap()).unwrap();
        assert_abs_diff_eq!(put.legs[0].power_q1, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(put.legs[0].power_q, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(put.price, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.price - put.price, 4.0 - 5.0, epsilon = 1e-15);
    }

    #[test]
    fn routes_agree_on_two_steps() {
        let (m, q) = two_step();
        for p in [
            Payoff::call(3.0),
            Payoff::put(3.0),
            Payoff::straddle(4.0),
            Payoff::strangle(2.0, 6.0),
            Payoff::digital(4.0),
            Payoff::barrier_up_out(3.0, 10.0),
        ] {
            let p = p.unwrap();
            let direct = price_direct(&m, &q, &p).unwrap();
            let tests = price_via_tests(&m, &q, &p).unwrap();
            assert_abs_diff_eq!(direct, tests.price, epsilon = 1e-12);
            let law = powers_on_law(&m, &m.terminal_law(&q).unwrap(), &p);
            if p.is_terminal() {
                let r = PriceReport::from_powers(m.s0(), m.discount(), law.unwrap());
                assert_abs_diff_eq!(direct, r.price, epsilon = 1e-12);
            } else {
                assert!(matches!(law, Err(Error::PathDependenceUnsupported)));
            }
        }
    }

    #[test]
    fn np_examples() {
        let (m, q) = one_step();
        let np = np_decomposition(&m, &q, &Payoff::call(5.0).unwrap()).unwrap();
        assert_abs_diff_eq!(np.c, 1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(np.lambda0, 5.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(np.lambda1, 4.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(np.closed_form_risk, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(np.bayes_risk, 1.0 / 3.0, epsilon = 1e-15);

        let zero = np_decomposition(&m, &q, &Payoff::call(0.0).unwrap()).unwrap();
        assert_eq!((zero.c, zero.lambda0), (0.0, 0.0));
        assert_abs_diff_eq!(zero.bayes_risk, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(zero.closed_form_risk, 0.0, epsilon = 1e-15);

        let sym = LatticeMarket::crr(2.0, 0.5, 1.0, 0.5, 1, 4.0).unwrap();
        let at_money = np_decomposition(&sym, &q, &Payoff::call(4.0).unwrap()).unwrap();
        assert_eq!(at_money.c, 1.0);
        assert_eq!((at_money.lambda0, at_money.lambda1), (0.5, 0.5));

        assert!(matches!(
            np_decomposition(&m, &q, &Payoff::put(5.0).unwrap()),
            Err(Error::NotACall)
        ));
    }

    #[test]
    fn dynamic_examples() {
        let (m, q) = two_step();
        let call = Payoff::call(5.0).unwrap();
        let p0 = dynamic_price(&m, &q, &call, &PathState::root()).unwrap();
        assert_abs_diff_eq!(p0, price_direct(&m, &q, &call).unwrap(), epsilon = 1e-15);
        let up = dynamic_price(&m, &q, &call, &PathState::parse(&m, "u").unwrap()).unwrap();
        assert_abs_diff_eq!(up, 11.0 / 3.0, epsilon = 1e-14);
        let down = dynamic_price(&m, &q, &call, &PathState::parse(&m, "d").unwrap()).unwrap();
        assert_eq!(down, 0.0);
        let end = dynamic_price(&m, &q, &call, &PathState::parse(&m, "u,u").unwrap()).unwrap();
        assert_eq!(end, 11.0);
        // tower property
        assert_abs_diff_eq!(p0, up / 3.0 + down * 2.0 / 3.0, epsilon = 1e-14);
        assert!(matches!(
            dynamic_price(
                &m,
                &q,
                &Payoff::barrier_up_out(5.0, 9.0).unwrap(),
                &PathState::root()
            ),
            Err(Error::PathDependenceUnsupported)
        ));
    }

    #[test]
    fn bounds_examples() {
        let (m, q) = one_step();
        let call = Payoff::call(5.0).unwrap();
        let (lo, hi) = price_bounds(&m, &call).unwrap();
        let p = price_direct(&m, &q, &call).unwrap();
        assert_abs_diff_eq!(lo, p, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, p, epsilon = 1e-15);

        let step =
            crate::lattice::StepReturns::new(vec![1.5, 1.0, 0.5], vec![0.25, 0.5, 0.25]).unwrap();
        let tri = LatticeMarket::new(1.0, 1.0, vec![step], vec![0.0]).unwrap();
        let (lo, hi) = price_bounds(&tri, &Payoff::call(1.0).unwrap()).unwrap();
        assert_eq!((lo, hi), (0.0, 0.25));
        let (lo, hi) = price_bounds(&tri, &Payoff::call(0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(7.965567455405804), "7.96556745541");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(1e-9), "1e-9");
        assert_eq!(fmt_g(1.5e15), "1.5e15");
        assert_eq!(fmt_g(4096.0), "4096");
    }
}
