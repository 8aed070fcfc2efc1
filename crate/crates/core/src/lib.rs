//! Rule-based text augmentation with soft labels.
//!
//! The crate bundles the four EDA perturbations, AEDA punctuation insertion
//! and softEDA (EDA whose augmented copies carry label-smoothed targets),
//! together with a small from-scratch text CNN, a training loop with early
//! stopping, and an experiment runner that compares the methods and emits
//! accuracy/gain tables.

pub mod augment;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod labels;
pub mod lexicon;
pub mod model;
pub mod report;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
