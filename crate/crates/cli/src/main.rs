use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lecam::lan::{lan_diagnostics, third_lemma_check, ConvergenceRow, Schedule, Study};
use lecam::lattice::{
    LatticeMarket, MartingaleMeasureSet, PathState, ProductMeasure, StepSolution,
};
use lecam::pricing::{
    dynamic_price, fmt_g, np_decomposition, price_bounds, price_direct, price_via_tests, Payoff,
    PriceReport,
};
use lecam::Error;
use serde_json::json;

mod output;

use output::{Report, Table};

/// Prices options as powers of likelihood-ratio tests on lattice markets.
#[derive(Parser)]
#[command(name = "lecam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Price a payoff directly and through test powers.
    Price {
        #[command(flatten)]
        inputs: PricingInputs,
        /// Report the no-arbitrage interval instead of a single price.
        #[arg(long, conflicts_with = "measure")]
        bounds: bool,
    },
    /// Price at one node of the tree.
    Dynamics {
        #[command(flatten)]
        inputs: PricingInputs,
        /// Comma separated step labels, e.g. "u,d". Empty for the root.
        #[arg(long)]
        state: String,
    },
    /// Solve for the martingale measures; exit 1 when incomplete.
    Complete {
        #[arg(long)]
        market: PathBuf,
    },
    /// No-arbitrage price interval over vertex measures.
    Bounds {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        payoff: PathBuf,
    },
    /// Neyman-Pearson decomposition of a call price.
    Np {
        #[command(flatten)]
        inputs: PricingInputs,
    },
    /// Convergence of discrete prices to the Black-Scholes limit.
    Converge {
        #[arg(long)]
        study: PathBuf,
        /// Exit 4 when the last gap exceeds this.
        #[arg(long, allow_negative_numbers = true)]
        threshold: Option<f64>,
    },
    /// LAN and third-lemma diagnostics for every N of a study.
    LanReport {
        #[arg(long)]
        study: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
}

#[derive(Args)]
struct PricingInputs {
    #[arg(long)]
    market: PathBuf,
    #[arg(long)]
    payoff: PathBuf,
    /// `designated`, `interior`, or step probabilities such as
    /// "0.25,0.5,0.25" (one list per step separated by ';' if they differ).
    #[arg(long)]
    measure: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Spec(String),
    Incomplete,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Incomplete => 1,
            Failure::Lib(Error::NoArbitrageViolation { .. }) => 2,
            Failure::Lib(_) | Failure::Spec(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Spec(s) => f.write_str(s),
            Failure::Incomplete => f.write_str(
                "market is incomplete: pass --bounds or choose a measure with --measure",
            ),
        }
    }
}

type Outcome = Result<Report, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Spec(format!("{}: {e}", path.display())))
}

fn load_market(path: &Path) -> Result<LatticeMarket, Failure> {
    Ok(LatticeMarket::from_json(&read(path)?)?)
}

fn load_payoff(path: &Path) -> Result<Payoff, Failure> {
    Ok(Payoff::from_json(&read(path)?)?)
}

fn load_study(path: &Path) -> Result<Study, Failure> {
    Ok(Study::from_json(&read(path)?)?)
}

fn parse_probs(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Spec(format!("bad probability `{p}`: {e}")))
        })
        .collect()
}

fn select_measure(m: &LatticeMarket, selector: Option<&str>) -> Result<ProductMeasure, Failure> {
    let set = m.solve_martingale_measures()?;
    let q = match selector.unwrap_or("designated") {
        "designated" => set.unique().ok_or(Failure::Incomplete)?,
        "interior" => set.interior_point(),
        list => {
            let per_step: Vec<Vec<f64>> =
                list.split(';').map(parse_probs).collect::<Result<_, _>>()?;
            let q = match per_step.len() {
                1 => ProductMeasure::iid(per_step[0].clone(), m.n_steps()),
                n if n == m.n_steps() => ProductMeasure::new(per_step),
                n => {
                    return Err(Failure::Spec(format!(
                        "measure has {n} steps, market has {}",
                        m.n_steps()
                    )))
                }
            };
            check_member(&set, m, &q)?;
            q
        }
    };
    Ok(q)
}

fn check_member(
    set: &MartingaleMeasureSet,
    m: &LatticeMarket,
    q: &ProductMeasure,
) -> Result<(), Failure> {
    let shapes_match = q
        .steps()
        .iter()
        .zip(m.steps())
        .all(|(qj, s)| qj.len() == s.len());
    if shapes_match && set.contains(m, q) {
        Ok(())
    } else {
        Err(Failure::Spec(
            "the given measure is not an equivalent martingale measure of the market".into(),
        ))
    }
}

fn cmd_price(inputs: &PricingInputs, bounds: bool) -> Outcome {
    let m = load_market(&inputs.market)?;
    let payoff = load_payoff(&inputs.payoff)?;
    if bounds {
        return bounds_report(&m, &payoff);
    }
    let q = select_measure(&m, inputs.measure.as_deref())?;
    let direct = price_direct(&m, &q, &payoff)?;
    let via: PriceReport = price_via_tests(&m, &q, &payoff)?;
    let diff = (direct - via.price).abs();
    let table = Table::new(format!("price_direct,abs_diff,{}", PriceReport::CSV_HEADER)).row(
        format!("{},{},{}", fmt_g(direct), fmt_g(diff), via.csv_row()),
    );
    Ok(Report::new(
        table,
        json!({ "price_direct": direct, "abs_diff": diff, "via_tests": via }),
    ))
}

fn bounds_report(m: &LatticeMarket, payoff: &Payoff) -> Outcome {
    let (lo, hi) = price_bounds(m, payoff)?;
    let table = Table::new("lower,upper").row(format!("{},{}", fmt_g(lo), fmt_g(hi)));
    Ok(Report::new(table, json!({ "lower": lo, "upper": hi })))
}

fn cmd_dynamics(inputs: &PricingInputs, state: &str) -> Outcome {
    let m = load_market(&inputs.market)?;
    let payoff = load_payoff(&inputs.payoff)?;
    let q = select_measure(&m, inputs.measure.as_deref())?;
    let state = PathState::parse(&m, state)?;
    let price = dynamic_price(&m, &q, &payoff, &state)?;
    let s_t = m.price_at(&state);
    let labels: Vec<&str> = state
        .indices()
        .iter()
        .zip(m.steps())
        .map(|(&k, s)| s.labels()[k].as_str())
        .collect();
    let table = Table::new("t,state,S_t,price").row(format!(
        "{},{},{},{}",
        state.t(),
        labels.join(";"),
        fmt_g(s_t),
        fmt_g(price)
    ));
    Ok(Report::new(
        table,
        json!({ "t": state.t(), "state": labels, "S_t": s_t, "price": price }),
    ))
}

fn join_probs(q: &[f64]) -> String {
    q.iter().map(|&p| fmt_g(p)).collect::<Vec<_>>().join(";")
}

fn cmd_complete(market: &Path) -> Outcome {
    let m = load_market(market)?;
    let set = m.solve_martingale_measures()?;
    let mut table = Table::new("step,kind,vertex,probs");
    let mut steps = Vec::new();
    for (j, s) in set.steps().iter().enumerate() {
        let kind = if s.is_unique() { "unique" } else { "polytope" };
        let vertices = s.vertices();
        for (v, q) in vertices.iter().enumerate() {
            table = table.row(format!("{j},{kind},{v},{}", join_probs(q)));
        }
        let mut entry = json!({ "step": j, "kind": kind, "vertices": vertices });
        if let StepSolution::Polytope { interior, .. } = s {
            entry["interior"] = json!(interior);
        }
        steps.push(entry);
    }
    let complete = set.is_complete();
    let mut summary = format!("complete: {complete}");
    if let Some(q) = set.unique() {
        summary += &format!(", tau = {}", fmt_g(q.steps()[0][0]));
    }
    let mut report = Report::new(table, json!({ "complete": complete, "steps": steps }));
    report.summary = Some(summary);
    report.status = if complete { 0 } else { 1 };
    Ok(report)
}

fn cmd_bounds(market: &Path, payoff: &Path) -> Outcome {
    bounds_report(&load_market(market)?, &load_payoff(payoff)?)
}

fn cmd_np(inputs: &PricingInputs) -> Outcome {
    let m = load_market(&inputs.market)?;
    let payoff = load_payoff(&inputs.payoff)?;
    let q = select_measure(&m, inputs.measure.as_deref())?;
    let np = np_decomposition(&m, &q, &payoff)?;
    let table = Table::new("c,lambda0,lambda1,price,closed_form_risk,bayes_risk").row(
        [
            np.c,
            np.lambda0,
            np.lambda1,
            np.price,
            np.closed_form_risk,
            np.bayes_risk,
        ]
        .map(fmt_g)
        .join(","),
    );
    Ok(Report::new(
        table,
        serde_json::to_value(&np).map_err(Error::from)?,
    ))
}

fn cmd_converge(study: &Path, threshold: Option<f64>) -> Outcome {
    if let Some(t) = threshold {
        if t.is_nan() || t <= 0.0 {
            return Err(Failure::Spec(format!("threshold {t} must be positive")));
        }
    }
    let rows = load_study(study)?.run()?;
    let mut table = Table::new(ConvergenceRow::CSV_HEADER);
    for r in &rows {
        table = table.row(
            [
                r.n.to_string(),
                fmt_g(r.p_n),
                fmt_g(r.p_bs),
                fmt_g(r.abs_gap),
                fmt_g(r.noether_max),
                fmt_g(r.var_gap),
            ]
            .join(","),
        );
    }
    let mut report = Report::new(table, json!({ "rows": rows }));
    if let (Some(t), [_, .., last]) = (threshold, rows.as_slice()) {
        if last.abs_gap > t {
            report.summary = Some(format!(
                "gap {} at N = {} exceeds threshold {}",
                fmt_g(last.abs_gap),
                last.n,
                fmt_g(t)
            ));
            report.status = 4;
        }
    }
    Ok(report)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

fn cmd_lan_report(study: &Path, t: f64) -> Outcome {
    let study = load_study(study)?;
    let mut table = Table::new(
        "N,steps,noether_max,riemann_gap,l2_gap,alpha,mean_gap,var_gap,q_mean_gap,q_var_gap,cdf_distance",
    );
    let mut rows = Vec::new();
    for &n in &study.ns {
        let schedule = Schedule::for_model(&study.bs, n)?;
        let lan = lan_diagnostics(&study.tangent, &schedule, t)?;
        let third = third_lemma_check(&study.tangent, &schedule, t)?;
        table = table.row(format!(
            "{n},{},{},{},{},{},{},{},{},{},{}",
            lan.steps,
            fmt_g(lan.noether_max),
            fmt_g(lan.riemann_gap),
            fmt_g(lan.l2_gap),
            fmt_g(lan.alpha),
            fmt_g(lan.mean_gap),
            fmt_g(lan.var_gap),
            fmt_g(third.mean_gap),
            fmt_g(third.var_gap),
            opt(lan.cdf_distance)
        ));
        rows.push(json!({ "N": n, "lan": lan, "third_lemma": third }));
    }
    Ok(Report::new(table, json!({ "t": t, "rows": rows })))
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Price { inputs, bounds } => cmd_price(inputs, *bounds),
        Command::Dynamics { inputs, state } => cmd_dynamics(inputs, state),
        Command::Complete { market } => cmd_complete(market),
        Command::Bounds { market, payoff } => cmd_bounds(market, payoff),
        Command::Np { inputs } => cmd_np(inputs),
        Command::Converge { study, threshold } => cmd_converge(study, *threshold),
        Command::LanReport { study, t } => cmd_lan_report(study, *t),
    }
}

fn main() -> ExitCode {
    // usage errors share the spec-error code; 2 is reserved for arbitrage
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            let text = match cli.format {
                Format::Csv => report.table.to_csv(),
                Format::Json => report.to_json(),
            };
            if let Err(e) = output::emit(cli.output.as_deref(), &text) {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
            if let Some(s) = &report.summary {
                eprintln!("{s}");
            }
            ExitCode::from(report.status)
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
