//! Option prices as power functions of tests.
//!
//! Finite statistical experiments, lattice markets whose discounted prices
//! are likelihood processes, pricing through Neyman-Pearson tests, the
//! Black-Scholes limit experiment and the LAN convergence harness.
//!
//! ```
//! use lecam::{price_via_tests, LatticeMarket, Payoff};
//!
//! let market = LatticeMarket::crr(2.0, 0.5, 1.0, 0.5, 1, 4.0)?;
//! let q = market.solve_martingale_measures()?.unique().unwrap();
//! let report = price_via_tests(&market, &q, &Payoff::call(5.0)?)?;
//! assert!((report.price - 1.0).abs() < 1e-12);
//! # Ok::<(), lecam::Error>(())
//! ```

// `!(x > 0.0)` style checks are meant to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blackscholes;
pub mod error;
pub mod experiments;
pub mod lan;
pub mod lattice;
pub mod law;
pub mod limits;
pub mod pricing;

pub use blackscholes::{
    bs_call_price, limit_price_terminal, limit_price_via_np, normal_cdf, BSModel,
    GaussianBinaryExperiment, PiecewiseConst,
};
pub use error::{Error, Result};
pub use experiments::{product, BinaryPriors, FiniteExperiment, Partition, Test};
pub use lan::{
    build_discrete_model, convergence_study, lan_diagnostics, make_tangent, third_lemma_check,
    ConvergenceRow, DiscreteModel, Schedule, Study, TangentPath,
};
pub use lattice::{
    LatticeMarket, MartingaleMeasureSet, PathState, ProductMeasure, StepReturns, StepSolution,
};
pub use pricing::{
    dynamic_price, np_decomposition, price_bounds, price_direct, price_via_tests, Payoff,
    PriceReport,
};
