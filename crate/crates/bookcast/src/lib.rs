//! Two-stage appointment prediction and staffing toolkit.
//!
//! Shortlisted customers either show up for their appointment or not, and
//! those who show either book the premium service or not. This crate learns
//! both decisions from tabular history and turns the predicted demand into a
//! staffing requirement:
//!
//! 1. [`dataset`] ingests CSV data against a declared schema, derives the
//!    show/booked target flags and drops canceled rows.
//! 2. [`synthgen`] generates calibrated synthetic corpora so the whole
//!    pipeline is reproducible without confidential customer data.
//! 3. [`prep`] partitions train/test and rebalances skewed training sets.
//! 4. [`learners`] trains the four from-scratch classifiers: a Gini binary
//!    tree, a chi-square multiway tree, logistic regression and a
//!    one-hidden-layer neural net.
//! 5. [`evaluate`] scores models: confusion matrices, accuracy/hit/
//!    specificity rates, ROC curves, AUC and its quality band.
//! 6. [`cascade`] ranks candidate models per target, picks champions and
//!    chains stage 1 (show) into stage 2 (booked given shown).
//! 7. [`planner`] converts forecast demand into time required/available,
//!    the staffing ratio and the optimal head count.
//!
//! The `examples/` directory walks each capability end to end; the
//! `bookcast` binary exposes the same pipeline as subcommands
//! (`generate`, `train`, `evaluate`, `score`, `plan`, `report`).

pub mod cascade;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod fsutil;
pub mod learners;
pub mod planner;
pub mod prep;
pub mod rng;
pub mod stats;
pub mod synthgen;

pub use error::{Error, Result};
