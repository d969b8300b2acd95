//! Irrigation and fishing commons simulator.
//!
//! A linear chain of farming households draws water from a river that ends in
//! a lake holding an age-structured fish population. Each year every household
//! decides how many fields to plant and how many fish to target; the decision
//! comes from one of five pipelines:
//!
//! - `procedural`: fixed rules driven by last year's yield and water,
//! - `generative`: a prompted language model picks the field count,
//! - `naive-egta`: a language model extracts abstract games once and then
//!   picks abstract actions every year,
//! - `expert-egta`: hand-built payoff models solved for Nash equilibria, with
//!   an optional Pigouvian tax,
//! - `centralized`: a national authority allocates fields from a moving-average
//!   inflow forecast.
//!
//! The [`ecology`] module advances the world by one year given those
//! decisions, and [`harness`] runs full simulations, sweeps and output
//! emission.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ecology;
pub mod equilibrium;
pub mod error;
pub mod games;
pub mod gateway;
pub mod harness;
pub mod policies;

pub use error::{Error, Result};
