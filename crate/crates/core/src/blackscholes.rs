//! The Black-Scholes limit: a Gaussian binary experiment.
//!
//! With `v = ∫σ²` and `R = ∫r` over `[0, T]`, the log-likelihood
//! `log dQ1/dQ` is `N(-v/2, v)` under `Q` and `N(v/2, v)` under `Q1`, and
//! `S_T = s0 e^R dQ1/dQ`. Prices of terminal payoffs are assembled from
//! normal probabilities of the likelihood ratio exceeding a cutoff.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::{Indicator, LegPowers, Payoff, PriceReport};

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A Gauss-Legendre rule, kept around for repeated integrals.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    /// `∫_a^b f`
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// `∫_a^b f` by an `n`-node Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    GaussLegendre::new(n).integrate(f, a, b)
}

/// A right-continuous step function on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseDoc", into = "PiecewiseDoc")]
pub struct PiecewiseConst {
    /// `(start, value)` pairs with increasing starts, the first at 0.
    pieces: Vec<(f64, f64)>,
}

impl PiecewiseConst {
    pub fn constant(value: f64) -> Self {
        Self {
            pieces: vec![(0.0, value)],
        }
    }

    pub fn new(pieces: Vec<(f64, f64)>) -> Result<Self> {
        match pieces.first() {
            Some((t, _)) if *t == 0.0 => {}
            _ => {
                return Err(Error::InvalidParams(
                    "piecewise function must start at t = 0".into(),
                ))
            }
        }
        if pieces.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParams("piece starts must increase".into()));
        }
        if pieces.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidParams("piece values must be finite".into()));
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn at(&self, t: f64) -> f64 {
        self.pieces
            .iter()
            .rev()
            .find(|(s, _)| *s <= t)
            .map_or(self.pieces[0].1, |(_, v)| *v)
    }

    /// `∫_a^b h(f(u)) du`.
    pub fn integral_of<H: Fn(f64) -> f64>(&self, a: f64, b: f64, h: H) -> f64 {
        let mut total = 0.0;
        for (i, &(start, value)) in self.pieces.iter().enumerate() {
            let end = self.pieces.get(i + 1).map_or(f64::INFINITY, |p| p.0);
            let lo = start.max(a);
            let hi = end.min(b);
            if hi > lo {
                total += (hi - lo) * h(value);
            }
        }
        total
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.integral_of(a, b, |v| v)
    }

    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        self.values_on(a, b).fold(f64::INFINITY, f64::min)
    }

    pub fn max_on(&self, a: f64, b: f64) -> f64 {
        self.values_on(a, b).fold(f64::NEG_INFINITY, f64::max)
    }

    fn values_on(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        self.pieces
            .iter()
            .enumerate()
            .filter_map(move |(i, &(start, v))| {
                let end = self.pieces.get(i + 1).map_or(f64::INFINITY, |p| p.0);
                (start < b && end > a).then_some(v)
            })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PiecewiseDoc {
    Const {
        #[serde(rename = "const")]
        value: f64,
    },
    Pieces {
        pieces: Vec<(f64, f64)>,
    },
}

impl TryFrom<PiecewiseDoc> for PiecewiseConst {
    type Error = Error;

    fn try_from(doc: PiecewiseDoc) -> Result<Self> {
        match doc {
            PiecewiseDoc::Const { value } => PiecewiseConst::new(vec![(0.0, value)]),
            PiecewiseDoc::Pieces { pieces } => PiecewiseConst::new(pieces),
        }
    }
}

impl From<PiecewiseConst> for PiecewiseDoc {
    fn from(f: PiecewiseConst) -> Self {
        if f.pieces.len() == 1 {
            PiecewiseDoc::Const {
                value: f.pieces[0].1,
            }
        } else {
            PiecewiseDoc::Pieces { pieces: f.pieces }
        }
    }
}

/// Black-Scholes model with piecewise-constant volatility and rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BSModel {
    pub s0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub sigma: PiecewiseConst,
    #[serde(default = "zero_rate")]
    pub rate: PiecewiseConst,
}

fn zero_rate() -> PiecewiseConst {
    PiecewiseConst::constant(0.0)
}

impl BSModel {
    pub fn new(s0: f64, horizon: f64, sigma: PiecewiseConst, rate: PiecewiseConst) -> Result<Self> {
        let m = Self {
            s0,
            horizon,
            sigma,
            rate,
        };
        m.validate()?;
        Ok(m)
    }

    /// Constant parameters.
    pub fn constant(s0: f64, sigma: f64, rate: f64, horizon: f64) -> Result<Self> {
        Self::new(
            s0,
            horizon,
            PiecewiseConst::constant(sigma),
            PiecewiseConst::constant(rate),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: BSModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s0.is_finite() && self.s0 > 0.0)
            || !(self.horizon.is_finite() && self.horizon > 0.0)
        {
            return Err(Error::InvalidParams(format!(
                "s0 = {}, T = {} must be positive",
                self.s0, self.horizon
            )));
        }
        if !(self.variance() > 0.0) {
            return Err(Error::InvalidParams("∫σ² must be positive".into()));
        }
        Ok(())
    }

    /// `∫_0^T σ²`
    pub fn variance(&self) -> f64 {
        self.variance_until(self.horizon)
    }

    pub fn variance_until(&self, t: f64) -> f64 {
        self.sigma.integral_of(0.0, t, |s| s * s)
    }

    /// `∫_0^T r`
    pub fn integrated_rate(&self) -> f64 {
        self.rate_until(self.horizon)
    }

    pub fn rate_until(&self, t: f64) -> f64 {
        self.rate.integral(0.0, t)
    }

    /// `exp(-∫_0^T r)`
    pub fn discount(&self) -> f64 {
        (-self.integrated_rate()).exp()
    }

    /// The limit experiment `{Q1, Q}`.
    pub fn experiment(&self) -> GaussianBinaryExperiment {
        GaussianBinaryExperiment { v: self.variance() }
    }

    /// Likelihood-ratio cutoff equivalent to `S_T > level`.
    pub fn cutoff(&self, level: f64) -> f64 {
        level * self.discount() / self.s0
    }
}

/// Two Gaussian shifts: `log dQ1/dQ` is `N(-v/2, v)` under `Q` and
/// `N(v/2, v)` under `Q1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianBinaryExperiment {
    pub v: f64,
}

impl GaussianBinaryExperiment {
    pub fn new(v: f64) -> Result<Self> {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParams(format!(
                "variance v = {v} must be positive"
            )));
        }
        Ok(Self { v })
    }

    /// `Q(log LR in (a, b))`
    pub fn prob_q(&self, a: f64, b: f64) -> f64 {
        self.interval(a, b, -0.5 * self.v)
    }

    /// `Q1(log LR in (a, b))`
    pub fn prob_q1(&self, a: f64, b: f64) -> f64 {
        self.interval(a, b, 0.5 * self.v)
    }

    fn interval(&self, a: f64, b: f64, mean: f64) -> f64 {
        let sd = self.v.sqrt();
        normal_cdf((b - mean) / sd) - normal_cdf((a - mean) / sd)
    }

    /// `Q(LR > c)`, the size of the Neyman-Pearson test.
    pub fn power_q(&self, c: f64) -> f64 {
        self.tail(c, -0.5 * self.v)
    }

    /// `Q1(LR > c)`
    pub fn power_q1(&self, c: f64) -> f64 {
        self.tail(c, 0.5 * self.v)
    }

    fn tail(&self, c: f64, mean: f64) -> f64 {
        if c <= 0.0 {
            return 1.0;
        }
        normal_cdf((mean - c.ln()) / self.v.sqrt())
    }
}

fn check_strike(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "strike K = {k} must be positive"
        )))
    }
}

/// Closed-form call price `s0 Φ(-x + √v) - e^{-R} K Φ(-x)` with
/// `x = (log(K/s0) - R + v/2) / √v`.
pub fn bs_call_price(model: &BSModel, k: f64) -> Result<f64> {
    check_strike(k)?;
    let v = model.variance();
    let r = model.integrated_rate();
    let sd = v.sqrt();
    let x = ((k / model.s0).ln() - r + 0.5 * v) / sd;
    Ok(model.s0 * normal_cdf(-x + sd) - (-r).exp() * k * normal_cdf(-x))
}

/// Call price from the powers of the Neyman-Pearson test `1{LR > c}`,
/// `c = (K/s0) e^{-R}`, in the Gaussian limit experiment.
pub fn limit_price_via_np(model: &BSModel, k: f64) -> Result<PriceReport> {
    check_strike(k)?;
    let exp = model.experiment();
    let c = model.cutoff(k);
    Ok(PriceReport::from_powers(
        model.s0,
        model.discount(),
        vec![LegPowers {
            a: 1.0,
            strike: k,
            power_q1: exp.power_q1(c),
            power_q: exp.power_q(c),
        }],
    ))
}

/// Price of a payoff whose tests depend on `S_T` only, with powers computed
/// exactly in the limit experiment.
pub fn limit_price_terminal(model: &BSModel, payoff: &Payoff) -> Result<PriceReport> {
    let exp = model.experiment();
    let legs = payoff
        .legs()
        .iter()
        .map(|leg| {
            let (power_q1, power_q) = match leg.test {
                Indicator::Always => (1.0, 1.0),
                Indicator::Above { level } => {
                    let c = model.cutoff(level);
                    (exp.power_q1(c), exp.power_q(c))
                }
                Indicator::Below { level } => {
                    let c = model.cutoff(level);
                    (1.0 - exp.power_q1(c), 1.0 - exp.power_q(c))
                }
                Indicator::UpAndOut { .. } => {
                    return Err(Error::UnsupportedTest(
                        "barrier tests depend on the whole path".into(),
                    ))
                }
            };
            Ok(LegPowers {
                a: leg.a,
                strike: leg.strike,
                power_q1,
                power_q,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriceReport::from_powers(model.s0, model.discount(), legs))
}
