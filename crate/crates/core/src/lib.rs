//! Quasi-static musculoskeletal analysis of trunk muscle loading in normal
//! and crutch-assisted walking.
//!
//! The pipeline: build a [`model::Model`], pose it with a
//! [`scenarios::ScenarioSnapshot`], compute joint moments with
//! [`dynamics::inverse_dynamics`], share them across muscles with
//! [`redundancy::solve_static_optimization`], then summarize bilateral
//! activation symmetry with the [`report`] module.

pub mod dynamics;
pub mod error;
pub mod kinematics;
pub mod model;
pub mod pipeline;
pub mod redundancy;
pub mod report;
pub mod scenarios;

pub use error::{Error, Result, Violation};
