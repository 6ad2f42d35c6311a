//! The guide's chapters as doc comments, so `cargo test --doc` runs every
//! snippet against the current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/markets.md")]
pub mod markets {}
#[doc = include_str!("../../../book/src/pricing.md")]
pub mod pricing {}
#[doc = include_str!("../../../book/src/limit.md")]
pub mod limit {}
#[doc = include_str!("../../../book/src/convergence.md")]
pub mod convergence {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
