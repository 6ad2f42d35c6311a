//! Discrete models built from a tangent path and their Black-Scholes limit.
//!
//! A tangent `g` at `P0` (centered, unit variance, bounded below by `-C`)
//! defines the path `dP_θ/dP0 = 1 + θ g` for `0 <= θ < 1/C`. Period `j` of the
//! `N`-step model has gross return `1 + s_j g` with `s_j = σ_j √(T/N)` and
//! bond rate `ρ_j T/N`; its martingale measure on the path is `P_{θ_j √(T/N)}`
//! with `θ_j = ρ_j / σ_j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackscholes::{limit_price_terminal, normal_cdf, BSModel, PiecewiseConst};
use crate::error::{Error, Result};
use crate::experiments::EXACT_TOL;
use crate::lattice::{LatticeMarket, ProductMeasure, StepReturns};
use crate::law::{self, Atoms};
use crate::pricing::{price_direct, Payoff};

/// Number of grid points of the CDF distance.
pub const CDF_GRID_POINTS: usize = 1000;

/// Cap on convolved atoms when a report needs the whole law.
pub const MAX_LAW_ATOMS: u128 = 10_000_000;

/// A validated tangent `g` at `P0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentPath {
    labels: Vec<String>,
    p0: Vec<f64>,
    g: Vec<f64>,
    c: f64,
}

/// Builds a tangent path, checking `∫g dP0 = 0`, `∫g² dP0 = 1` and that
/// `g` is bounded below by `-C` with `C = -min g`.
pub fn make_tangent(p0: Vec<f64>, g: Vec<f64>) -> Result<TangentPath> {
    TangentPath::new(p0, g)
}

impl TangentPath {
    pub fn new(p0: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let labels = match p0.len() {
            2 => vec!["u".into(), "d".into()],
            3 => vec!["u".into(), "m".into(), "d".into()],
            k => (0..k).map(|i| i.to_string()).collect(),
        };
        Self::with_labels(labels, p0, g)
    }

    pub fn with_labels(labels: Vec<String>, p0: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if p0.is_empty() || p0.len() != g.len() || labels.len() != p0.len() {
            return Err(Error::InvalidTangent(
                "P0, g and labels must have equal nonzero length".into(),
            ));
        }
        if p0.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidTangent("P0 must be strictly positive".into()));
        }
        let total: f64 = p0.iter().sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidTangent(format!("P0 sums to {total}")));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidTangent("g must be finite".into()));
        }
        let mean: f64 = p0.iter().zip(&g).map(|(p, x)| p * x).sum();
        if mean.abs() > EXACT_TOL {
            return Err(Error::InvalidTangent(format!(
                "∫g dP0 = {mean}, expected 0"
            )));
        }
        let second: f64 = p0.iter().zip(&g).map(|(p, x)| p * x * x).sum();
        if (second - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidTangent(format!(
                "∫g² dP0 = {second}, expected 1"
            )));
        }
        let c = -g.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self { labels, p0, g, c })
    }

    /// Cox-Ross-Rubinstein tangent on (up, down):
    /// `P0 = (b, a)/(a+b)`, `g = (a, -b)/√(ab)`.
    pub fn crr(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidTangent(format!(
                "a = {a}, b = {b} must be positive"
            )));
        }
        let s = (a * b).sqrt();
        Self::new(vec![b / (a + b), a / (a + b)], vec![a / s, -b / s])
    }

    /// `P0 = (0.3, 0.4, 0.3)`, `g = (1, 0, -1)/√0.6`.
    pub fn trinomial_symmetric() -> Self {
        let h = 1.0 / 0.6f64.sqrt();
        Self::new(vec![0.3, 0.4, 0.3], vec![h, 0.0, -h]).expect("valid symmetric tangent")
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The lower bound `C = -min g`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Supremum `1/C` of admissible parameters.
    pub fn theta_max(&self) -> f64 {
        1.0 / self.c
    }

    /// `P_θ = P0 (1 + θ g)`.
    pub fn path_measure(&self, theta: f64) -> Result<Vec<f64>> {
        if !(theta >= 0.0 && theta < self.theta_max()) {
            return Err(Error::ThetaOutOfRange {
                theta,
                max: self.theta_max(),
            });
        }
        Ok(self
            .p0
            .iter()
            .zip(&self.g)
            .map(|(p, x)| p * (1.0 + theta * x))
            .collect())
    }

    /// `|∫ (1 + σ g)/(1 + ρ) dP_θ - 1|` for one period.
    pub fn martingale_residual(&self, sigma: f64, rho: f64, theta: f64) -> Result<f64> {
        let q = self.path_measure(theta)?;
        let m: f64 = q
            .iter()
            .zip(&self.g)
            .map(|(q, x)| q * (1.0 + sigma * x) / (1.0 + rho))
            .sum();
        Ok((m - 1.0).abs())
    }

    /// The martingale measure `P_{ρ/σ}` of one period with volatility
    /// `sigma` and simple rate `rho`.
    pub fn one_period_mm(&self, sigma: f64, rho: f64) -> Result<Vec<f64>> {
        if !(sigma > 0.0 && sigma.is_finite()) || !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParams(format!("σ = {sigma}, ρ = {rho}")));
        }
        if rho == 0.0 {
            return Ok(self.p0.clone());
        }
        if !(-self.c > -sigma / rho) {
            return Err(Error::LemmaHypothesisViolated(format!(
                "essinf g = {} is not above -σ/ρ = {}",
                -self.c,
                -sigma / rho
            )));
        }
        let theta = rho / sigma;
        let q = self.path_measure(theta)?;
        let residual = self.martingale_residual(sigma, rho, theta)?;
        if residual > EXACT_TOL {
            return Err(Error::InvalidState(format!(
                "martingale residual {residual} at θ = ρ/σ"
            )));
        }
        Ok(q)
    }
}

/// Per-step volatilities and rates of the `N`-step model, with the limit
/// functions they approximate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    horizon: f64,
    /// `σ_{j,N}`
    sigma: Vec<f64>,
    /// `ρ_{j,N}`, annualized; the simple rate of period `j` is `ρ_j T/N`.
    rho: Vec<f64>,
    limit_sigma: PiecewiseConst,
    limit_rate: PiecewiseConst,
}

impl Schedule {
    pub fn new(
        horizon: f64,
        sigma: Vec<f64>,
        rho: Vec<f64>,
        limit_sigma: PiecewiseConst,
        limit_rate: PiecewiseConst,
    ) -> Result<Self> {
        if sigma.is_empty() || sigma.len() != rho.len() {
            return Err(Error::InvalidParams(
                "schedule needs N >= 1 matching σ and ρ".into(),
            ));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParams(format!("T = {horizon}")));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParams("volatilities must be positive".into()));
        }
        if rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidParams("rates must be nonnegative".into()));
        }
        Ok(Self {
            horizon,
            sigma,
            rho,
            limit_sigma,
            limit_rate,
        })
    }

    /// Discretizes limit functions: `σ_{j,N}` is the limit volatility at the
    /// cell midpoint and `ρ_{j,N} = (N/T)(exp(∫_cell r) - 1)`, which makes the
    /// bond exact at every grid time.
    pub fn from_limits(
        sigma: &PiecewiseConst,
        rate: &PiecewiseConst,
        n: usize,
        horizon: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        let h = horizon / n as f64;
        let vols = (0..n).map(|j| sigma.at((j as f64 + 0.5) * h)).collect();
        let rates = (0..n)
            .map(|j| {
                let r = rate.integral(j as f64 * h, (j + 1) as f64 * h);
                r.exp_m1() / h
            })
            .collect();
        Self::new(horizon, vols, rates, sigma.clone(), rate.clone())
    }

    pub fn for_model(bs: &BSModel, n: usize) -> Result<Self> {
        Self::from_limits(&bs.sigma, &bs.rate, n, bs.horizon)
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    fn dt(&self) -> f64 {
        self.horizon / self.n() as f64
    }

    /// Period volatility `σ_j √(T/N)`.
    pub fn step_vol(&self, j: usize) -> f64 {
        self.sigma[j] * self.dt().sqrt()
    }

    /// Period simple rate `ρ_j T/N`.
    pub fn step_rate(&self, j: usize) -> f64 {
        self.rho[j] * self.dt()
    }

    /// Period parameter `θ_j √(T/N)` of the martingale measure.
    pub fn step_theta(&self, j: usize) -> f64 {
        self.rho[j] / self.sigma[j] * self.dt().sqrt()
    }

    /// Number of periods `[tN/T]` up to `t`.
    pub fn steps_until(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.horizon * (1.0 + 1e-12)) {
            return Err(Error::InvalidParams(format!("t = {t} outside [0, T]")));
        }
        Ok(((t / self.horizon * self.n() as f64) + 1e-9)
            .floor()
            .min(self.n() as f64) as usize)
    }

    /// `∫_0^T (σ_N - σ)²` for the step function `σ_N`.
    pub fn l2_gap(&self) -> f64 {
        let h = self.dt();
        (0..self.n())
            .map(|j| {
                let s = self.sigma[j];
                self.limit_sigma
                    .integral_of(j as f64 * h, (j + 1) as f64 * h, |v| (v - s) * (v - s))
            })
            .sum()
    }

    /// Checks `δ <= σ_j <= K` and `ρ_j <= R`.
    pub fn check_bounds(&self, delta: f64, k: f64, r_max: f64) -> Result<()> {
        if let Some((j, s)) = self
            .sigma
            .iter()
            .enumerate()
            .find(|(_, s)| !(**s >= delta && **s <= k))
        {
            return Err(Error::InvalidParams(format!(
                "σ_{j} = {s} outside [{delta}, {k}]"
            )));
        }
        if let Some((j, r)) = self.rho.iter().enumerate().find(|(_, r)| **r > r_max) {
            return Err(Error::InvalidParams(format!("ρ_{j} = {r} above {r_max}")));
        }
        Ok(())
    }

    /// `α_{t,N} = Σ_{k <= n(t)} (θ_k √(T/N))²`
    pub fn alpha(&self, t: f64) -> Result<f64> {
        let n = self.steps_until(t)?;
        Ok((0..n).map(|j| self.step_theta(j).powi(2)).sum())
    }

    /// `max_{j <= n(t)} σ_j √(T/N)`
    pub fn noether_max(&self, t: f64) -> Result<f64> {
        let n = self.steps_until(t)?;
        Ok((0..n).map(|j| self.step_vol(j)).fold(0.0, f64::max))
    }

    /// `|T/N Σ_{j <= n(t)} σ_j² - ∫_0^t σ²|`
    pub fn riemann_gap(&self, t: f64) -> Result<f64> {
        let n = self.steps_until(t)?;
        let sum: f64 = (0..n).map(|j| self.sigma[j].powi(2)).sum::<f64>() * self.dt();
        Ok((sum - self.limit_sigma.integral_of(0.0, t, |s| s * s)).abs())
    }

    pub fn limit_variance(&self, t: f64) -> f64 {
        self.limit_sigma.integral_of(0.0, t, |s| s * s)
    }

    pub fn limit_rate(&self, t: f64) -> f64 {
        self.limit_rate.integral(0.0, t)
    }
}

/// A lattice market with its designated martingale measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub market: LatticeMarket,
    /// `Q_N(j) = P_{θ_j √(T/N)}` per period.
    pub designated: ProductMeasure,
}

/// The `N`-step model of `schedule` along `path`, started at `s0`.
pub fn build_discrete_model(
    path: &TangentPath,
    schedule: &Schedule,
    s0: f64,
) -> Result<DiscreteModel> {
    let mut steps: Vec<StepReturns> = Vec::with_capacity(schedule.n());
    let mut rates = Vec::with_capacity(schedule.n());
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(schedule.n());
    for j in 0..schedule.n() {
        let s = schedule.step_vol(j);
        if s >= path.theta_max() {
            return Err(Error::ThetaOutOfRange {
                theta: s,
                max: path.theta_max(),
            });
        }
        let rate = schedule.step_rate(j);
        // consecutive equal periods share their vectors
        if j > 0
            && schedule.sigma[j] == schedule.sigma[j - 1]
            && schedule.rho[j] == schedule.rho[j - 1]
        {
            steps.push(steps[j - 1].clone());
            rates.push(rate);
            qs.push(qs[j - 1].clone());
            continue;
        }
        let gross = path.g.iter().map(|x| 1.0 + s * x).collect();
        steps.push(StepReturns::with_labels(
            path.labels.clone(),
            gross,
            path.p0.clone(),
        )?);
        rates.push(rate);
        let q = if rate == 0.0 {
            path.p0.clone()
        } else {
            let theta = schedule.step_theta(j);
            if theta >= path.theta_max() {
                return Err(Error::ThetaOutOfRange {
                    theta,
                    max: path.theta_max(),
                });
            }
            path.one_period_mm(s, rate)?
        };
        qs.push(q);
    }
    let market = LatticeMarket::new(s0, schedule.horizon(), steps, rates)?;
    Ok(DiscreteModel {
        market,
        designated: ProductMeasure::new(qs),
    })
}

/// Mean and variance of a sum of independent per-period variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

fn sum_moments<F: Fn(usize) -> (Vec<f64>, Vec<f64>)>(n: usize, period: F) -> Moments {
    let mut mean = 0.0;
    let mut variance = 0.0;
    for j in 0..n {
        let (values, probs) = period(j);
        let m: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        let v: f64 = values
            .iter()
            .zip(&probs)
            .map(|(x, p)| p * (x - m) * (x - m))
            .sum();
        mean += m;
        variance += v;
    }
    Moments { mean, variance }
}

/// Exact law of `Σ_{j<n} f_j(x_j)` with `x_j ~ probs_j`, grouping runs of
/// identical periods by composition.
fn convolved_law<F>(n: usize, period: F, cap: u128) -> Result<Atoms>
where
    F: Fn(usize) -> (Vec<f64>, Vec<f64>),
{
    let mut law = Atoms::point(0.0);
    let mut j = 0;
    while j < n {
        let (values, probs) = period(j);
        let mut end = j + 1;
        while end < n && period(end) == (values.clone(), probs.clone()) {
            end += 1;
        }
        let block = law::multinomial(
            &probs,
            end - j,
            |counts| counts.iter().zip(&values).map(|(&c, v)| c as f64 * v).sum(),
            cap,
        )?;
        law = law.combine(&block, |a, b| a + b, cap)?;
        j = end;
    }
    Ok(law)
}

/// `sup_x |F(x) - Φ((x - mean)/sd)|` over an evenly spaced grid on
/// `mean ± 5 sd`.
pub fn cdf_sup_distance(law: &Atoms, mean: f64, sd: f64) -> f64 {
    let (xs, cs) = law.cdf();
    let mut worst: f64 = 0.0;
    let mut i = 0;
    let mut acc = 0.0;
    for k in 0..CDF_GRID_POINTS {
        let x = mean - 5.0 * sd + 10.0 * sd * k as f64 / (CDF_GRID_POINTS - 1) as f64;
        while i < xs.len() && xs[i] <= x {
            acc = cs[i];
            i += 1;
        }
        worst = worst.max((acc - normal_cdf((x - mean) / sd)).abs());
    }
    worst
}

/// Noether statistics and the law of `log S_t` under `P0^N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanReport {
    pub t: f64,
    pub steps: usize,
    pub noether_max: f64,
    pub riemann_gap: f64,
    pub l2_gap: f64,
    pub alpha: f64,
    /// Moments of `log S_t` under `P0^N`.
    pub log_s: Moments,
    /// Target `(-∫σ²/2, ∫σ²)`.
    pub target: Moments,
    pub mean_gap: f64,
    pub var_gap: f64,
    /// `None` when the convolved law exceeds [`MAX_LAW_ATOMS`].
    pub cdf_distance: Option<f64>,
}

fn log_returns(path: &TangentPath, schedule: &Schedule, j: usize) -> Vec<f64> {
    let s = schedule.step_vol(j);
    path.g.iter().map(|x| (s * x).ln_1p()).collect()
}

fn check_vol_range(path: &TangentPath, schedule: &Schedule, n: usize) -> Result<()> {
    for j in 0..n {
        let s = schedule.step_vol(j);
        if s >= path.theta_max() {
            return Err(Error::ThetaOutOfRange {
                theta: s,
                max: path.theta_max(),
            });
        }
    }
    Ok(())
}

pub fn lan_diagnostics(path: &TangentPath, schedule: &Schedule, t: f64) -> Result<LanReport> {
    let n = schedule.steps_until(t)?;
    check_vol_range(path, schedule, n)?;
    let period = |j| (log_returns(path, schedule, j), path.p0.clone());
    let log_s = sum_moments(n, period);
    let v = schedule.limit_variance(t);
    let target = Moments {
        mean: -0.5 * v,
        variance: v,
    };
    let cdf_distance = match convolved_law(n, period, MAX_LAW_ATOMS) {
        Ok(law) if v > 0.0 => Some(cdf_sup_distance(&law, target.mean, v.sqrt())),
        Ok(_) | Err(Error::SizeLimit { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(LanReport {
        t,
        steps: n,
        noether_max: schedule.noether_max(t)?,
        riemann_gap: schedule.riemann_gap(t)?,
        l2_gap: schedule.l2_gap(),
        alpha: schedule.alpha(t)?,
        mean_gap: (log_s.mean - target.mean).abs(),
        var_gap: (log_s.variance - target.variance).abs(),
        log_s,
        target,
        cdf_distance,
    })
}

/// Laws under the designated martingale measure `Q_N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThirdLemmaReport {
    pub t: f64,
    pub steps: usize,
    /// Moments of `Z_t = Σ s_j g(x_j)`, target mean `∫r`.
    pub z: Moments,
    /// Moments of `log S_t`, target `(∫(r - σ²/2), ∫σ²)`.
    pub log_s: Moments,
    pub integrated_rate: f64,
    pub integrated_variance: f64,
    pub z_mean_gap: f64,
    pub mean_gap: f64,
    pub var_gap: f64,
}

pub fn third_lemma_check(
    path: &TangentPath,
    schedule: &Schedule,
    t: f64,
) -> Result<ThirdLemmaReport> {
    let n = schedule.steps_until(t)?;
    check_vol_range(path, schedule, n)?;
    let mut qs = Vec::with_capacity(n);
    for j in 0..n {
        qs.push(path.one_period_mm(schedule.step_vol(j), schedule.step_rate(j))?);
    }
    let z = sum_moments(n, |j| {
        let s = schedule.step_vol(j);
        (path.g.iter().map(|x| s * x).collect(), qs[j].clone())
    });
    let log_s = sum_moments(n, |j| (log_returns(path, schedule, j), qs[j].clone()));
    let r = schedule.limit_rate(t);
    let v = schedule.limit_variance(t);
    Ok(ThirdLemmaReport {
        t,
        steps: n,
        z_mean_gap: (z.mean - r).abs(),
        mean_gap: (log_s.mean - (r - 0.5 * v)).abs(),
        var_gap: (log_s.variance - v).abs(),
        z,
        log_s,
        integrated_rate: r,
        integrated_variance: v,
    })
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub p_n: f64,
    pub p_bs: f64,
    pub abs_gap: f64,
    pub noether_max: f64,
    /// `|Var_{Q_N}(log S_T) - ∫σ²|`
    pub var_gap: f64,
}

impl ConvergenceRow {
    pub const CSV_HEADER: &'static str = "N,p_N,p_BS,abs_gap,noether_max,var_gap";
}

/// Prices `payoff` in the `N`-step model under `Q_N` for every `N` and
/// compares with the limit price.
pub fn convergence_study(
    path: &TangentPath,
    bs: &BSModel,
    payoff: &Payoff,
    ns: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    if !payoff.is_terminal() {
        return Err(Error::PathDependenceUnsupported);
    }
    let p_bs = limit_price_terminal(bs, payoff)?.price;
    ns.par_iter()
        .map(|&n| {
            let schedule = Schedule::for_model(bs, n)?;
            let model = build_discrete_model(path, &schedule, bs.s0)?;
            let p_n = price_direct(&model.market, &model.designated, payoff)?;
            let third = third_lemma_check(path, &schedule, bs.horizon)?;
            Ok(ConvergenceRow {
                n,
                p_n,
                p_bs,
                abs_gap: (p_n - p_bs).abs(),
                noether_max: schedule.noether_max(bs.horizon)?,
                var_gap: third.var_gap,
            })
        })
        .collect()
}

/// Tangent as read from a study spec.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TangentSpec {
    Crr { a: f64, b: f64 },
    TrinomialSymmetric,
    Custom { p0: Vec<f64>, g: Vec<f64> },
}

impl TangentSpec {
    pub fn build(&self) -> Result<TangentPath> {
        match self {
            TangentSpec::Crr { a, b } => TangentPath::crr(*a, *b),
            TangentSpec::TrinomialSymmetric => Ok(TangentPath::trinomial_symmetric()),
            TangentSpec::Custom { p0, g } => TangentPath::new(p0.clone(), g.clone()),
        }
    }
}

/// A convergence study spec.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub tangent: TangentSpec,
    pub bs: BSModel,
    pub payoff: crate::pricing::PayoffSpec,
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    /// Bounds `δ <= σ <= K`, `ρ <= R` validated for every `N`.
    #[serde(default)]
    pub bounds: Option<ScheduleBounds>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBounds {
    pub delta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

/// A parsed study.
#[derive(Debug, Clone)]
pub struct Study {
    pub tangent: TangentPath,
    pub bs: BSModel,
    pub payoff: Payoff,
    pub ns: Vec<usize>,
    pub bounds: Option<ScheduleBounds>,
}

impl Study {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: StudySpec = serde_json::from_str(text)?;
        if spec.ns.is_empty() || spec.ns.contains(&0) {
            return Err(Error::InvalidParams(
                "Ns must be a nonempty list of positive integers".into(),
            ));
        }
        let bs = BSModel::new(spec.bs.s0, spec.bs.horizon, spec.bs.sigma, spec.bs.rate)?;
        Ok(Self {
            tangent: spec.tangent.build()?,
            bs,
            payoff: spec.payoff.build()?,
            ns: spec.ns,
            bounds: spec.bounds,
        })
    }

    pub fn run(&self) -> Result<Vec<ConvergenceRow>> {
        if let Some(b) = self.bounds {
            for &n in &self.ns {
                Schedule::for_model(&self.bs, n)?.check_bounds(b.delta, b.k, b.r)?;
            }
        }
        convergence_study(&self.tangent, &self.bs, &self.payoff, &self.ns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tangent_examples() {
        let crr = TangentPath::crr(1.0, 1.0).unwrap();
        assert_eq!(crr.g(), &[1.0, -1.0]);
        assert_eq!(crr.p0(), &[0.5, 0.5]);
        assert_eq!(crr.c(), 1.0);
        let lop = TangentPath::crr(1.0, 3.0).unwrap();
        assert_abs_diff_eq!(lop.g()[0], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(
            make_tangent(vec![0.5, 0.5], vec![0.0, 0.0]),
            Err(Error::InvalidTangent(_))
        ));
        assert!(matches!(
            make_tangent(vec![0.5, 0.5], vec![1.0, 0.0]),
            Err(Error::InvalidTangent(_))
        ));
        let tri = TangentPath::trinomial_symmetric();
        let mean: f64 = tri.p0().iter().zip(tri.g()).map(|(p, g)| p * g).sum();
        let second: f64 = tri.p0().iter().zip(tri.g()).map(|(p, g)| p * g * g).sum();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(second, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn path_measure_examples() {
        let crr = TangentPath::crr(1.0, 1.0).unwrap();
        assert_eq!(crr.path_measure(0.0).unwrap(), vec![0.5, 0.5]);
        let q = crr.path_measure(0.2).unwrap();
        assert_abs_diff_eq!(q[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 0.4, epsilon = 1e-15);
        assert!(matches!(
            crr.path_measure(1.0),
            Err(Error::ThetaOutOfRange { .. })
        ));
    }

    #[test]
    fn one_period_examples() {
        let crr = TangentPath::crr(1.0, 1.0).unwrap();
        assert_eq!(crr.one_period_mm(0.2, 0.0).unwrap(), vec![0.5, 0.5]);
        let q = crr.one_period_mm(0.2, 0.05).unwrap();
        let (a, b, s, r) = (1.0, 1.0, 0.2, 0.05);
        let tau = (s * b + r * f64::sqrt(a * b)) / (s * (a + b));
        assert_abs_diff_eq!(q[0], 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(q[0], tau, epsilon = 1e-15);
        // the lattice solver finds the same measure
        let m = LatticeMarket::crr(1.2, 0.8, 1.05, 0.5, 1, 1.0).unwrap();
        let solved = m.solve_martingale_measures().unwrap().unique().unwrap();
        assert_abs_diff_eq!(solved.steps()[0][0], 0.625, epsilon = 1e-15);
        assert!(matches!(
            crr.one_period_mm(0.2, 0.5),
            Err(Error::LemmaHypothesisViolated(_))
        ));
    }

    #[test]
    fn uniqueness_on_the_path() {
        let tri = TangentPath::trinomial_symmetric();
        let (s, r) = (0.1, 0.02);
        let theta = r / s;
        assert!(tri.martingale_residual(s, r, theta).unwrap() <= 1e-15);
        for k in 0..100 {
            let th = tri.theta_max() * k as f64 / 100.0;
            if (th - theta).abs() > 1e-6 {
                assert!(tri.martingale_residual(s, r, th).unwrap() > 1e-9);
            }
        }
    }

    #[test]
    fn discrete_model_examples() {
        let crr = TangentPath::crr(1.0, 1.0).unwrap();
        let flat = PiecewiseConst::constant(0.2);
        let zero = PiecewiseConst::constant(0.0);
        let s1 = Schedule::from_limits(&flat, &zero, 1, 1.0).unwrap();
        let m1 = build_discrete_model(&crr, &s1, 1.0).unwrap();
        assert_eq!(m1.market.discounted_returns(0), vec![1.2, 0.8]);
        assert_eq!(m1.designated.steps()[0], vec![0.5, 0.5]);

        let rate = PiecewiseConst::constant(0.05);
        let s = Schedule::from_limits(&flat, &rate, 16, 1.0).unwrap();
        assert_abs_diff_eq!(s.noether_max(1.0).unwrap(), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(m1.market.bond(1), 1.0, epsilon = 1e-15);
        let m = build_discrete_model(&crr, &s, 1.0).unwrap();
        assert_abs_diff_eq!(m.market.bond(16), 0.05f64.exp(), epsilon = 1e-14);
        let set = m.market.solve_martingale_measures().unwrap();
        assert!(set.contains(&m.market, &m.designated));

        let tri = TangentPath::trinomial_symmetric();
        let mt = build_discrete_model(&tri, &s, 1.0).unwrap();
        let set = mt.market.solve_martingale_measures().unwrap();
        assert!(!set.is_complete());
        assert!(set.contains(&mt.market, &mt.designated));

        let coarse = Schedule::from_limits(&PiecewiseConst::constant(2.0), &zero, 1, 1.0).unwrap();
        assert!(matches!(
            build_discrete_model(&crr, &coarse, 1.0),
            Err(Error::ThetaOutOfRange { .. })
        ));
    }

    #[test]
    fn lan_examples() {
        let crr = TangentPath::crr(1.0, 1.0).unwrap();
        let flat = PiecewiseConst::constant(0.2);
        let zero = PiecewiseConst::constant(0.0);
        for n in [1, 7, 64] {
            let s = Schedule::from_limits(&flat, &zero, n, 1.0).unwrap();
            let r = lan_diagnostics(&crr, &s, 1.0).unwrap();
            assert!(r.var_gap <= 3.0 * 0.04 / n as f64);
            assert!(r.cdf_distance.is_some());
            assert!(r.riemann_gap < 1e-15);
        }
        let s = Schedule::from_limits(&flat, &zero, 4096, 1.0).unwrap();
        let r = lan_diagnostics(&crr, &s, 1.0).unwrap();
        assert!(r.cdf_distance.unwrap() < 0.02);
        assert_eq!(r.alpha, 0.0);

        let t = third_lemma_check(&crr, &s, 1.0).unwrap();
        assert_abs_diff_eq!(t.z.mean, 0.0, epsilon = 1e-15);

        let rate = PiecewiseConst::constant(0.05);
        let s = Schedule::from_limits(&flat, &rate, 4096, 1.0).unwrap();
        let t = third_lemma_check(&crr, &s, 1.0).unwrap();
        assert!(t.mean_gap < 2e-3);
        let half = third_lemma_check(&crr, &s, 0.5).unwrap();
        assert_eq!(half.steps, 2048);

        let two = PiecewiseConst::new(vec![(0.0, 0.1), (0.5, 0.3)]).unwrap();
        let gaps: Vec<f64> = [16, 256, 4096]
            .iter()
            .map(|&n| {
                let s = Schedule::from_limits(&two, &zero, n, 1.0).unwrap();
                assert_abs_diff_eq!(s.limit_variance(1.0), 0.05, epsilon = 1e-15);
                third_lemma_check(&crr, &s, 1.0).unwrap().var_gap
            })
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
    }

    #[test]
    fn schedule_checks() {
        let two = PiecewiseConst::new(vec![(0.0, 0.1), (0.33, 0.3)]).unwrap();
        let zero = PiecewiseConst::constant(0.0);
        let a = Schedule::from_limits(&two, &zero, 5, 1.0).unwrap().l2_gap();
        let b = Schedule::from_limits(&two, &zero, 50, 1.0)
            .unwrap()
            .l2_gap();
        assert!(a > b && b > 0.0);
        let s = Schedule::from_limits(&two, &zero, 10, 1.0).unwrap();
        assert!(s.check_bounds(0.05, 0.5, 0.1).is_ok());
        assert!(s.check_bounds(0.2, 0.5, 0.1).is_err());
    }

    #[test]
    fn convergence_examples() {
        let crr = TangentPath::crr(1.0, 1.0).unwrap();
        let bs = BSModel::constant(100.0, 0.2, 0.0, 1.0).unwrap();
        let zero_strike =
            convergence_study(&crr, &bs, &Payoff::call(0.0).unwrap(), &[1, 2, 5]).unwrap();
        for row in zero_strike {
            assert_abs_diff_eq!(row.p_n, 100.0, epsilon = 1e-12);
        }
        let rows = convergence_study(&crr, &bs, &Payoff::call(100.0).unwrap(), &[16, 256]).unwrap();
        assert_eq!(rows[0].n, 16);
        assert!(rows[1].abs_gap < rows[0].abs_gap);
        assert_abs_diff_eq!(rows[0].p_bs, 7.965567455405804, epsilon = 1e-10);
    }

    #[test]
    fn study_json() {
        let s = Study::from_json(
            r#"{"tangent": {"type": "crr", "a": 1, "b": 1},
                "bs": {"s0": 100, "T": 1, "sigma": {"const": 0.2}, "rate": {"const": 0.0}},
                "payoff": {"type": "call", "K": 100}, "Ns": [4, 8]}"#,
        )
        .unwrap();
        assert_eq!(s.run().unwrap().len(), 2);
        assert!(Study::from_json(
            r#"{"tangent": {"type": "trinomial_symmetric"}, "bs": {"s0": 1, "T": 1, "sigma": {"const": 0.2}},
                "payoff": {"type": "call", "K": 1}, "Ns": []}"#
        )
        .is_err());
    }
}
