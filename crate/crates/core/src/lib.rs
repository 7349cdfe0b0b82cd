//! Gradient tree boosting with optional Nesterov acceleration.
//!
//! This crate holds the numerical core: datasets and splitting, the synthetic
//! benchmark generators, convex losses with their line searches, least-squares
//! regression trees, the GB/AGB training loops, the trained ensemble with
//! replay prediction, and evaluation metrics. It is `no_std` and only needs
//! `alloc`; file formats, the benchmark harness and the CLI live in the `agb`
//! crate.
//!
//! ```
//! use agb_core::{boosting::{train, Algorithm, TrainConfig}, data::Task, losses::LossKind,
//!                synthetic::{generate_model, DesignKind, ModelSpec}};
//!
//! let spec = ModelSpec::new(3, DesignKind::Uncorrelated, 200, 8, 1).unwrap();
//! let ds = generate_model(&spec).unwrap();
//! assert_eq!(ds.task(), Task::Regression);
//! let config = TrainConfig::new(Algorithm::Agb, LossKind::Squared, 0.1, 50, 2).unwrap();
//! let (model, trace) = train(&ds, &config, None).unwrap();
//! assert_eq!(model.iterations(), 50);
//! assert!(trace.train_risk[50] < trace.train_risk[0]);
//! ```
#![no_std]
#![warn(missing_docs)]

extern crate alloc;

pub mod boosting;
pub mod data;
mod error;
pub mod evaluation;
pub mod losses;
pub mod model;
pub mod rng;
pub mod synthetic;
pub mod trees;

pub use error::{Error, Result};
