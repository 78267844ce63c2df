//! Partial-diffusion recursive least-squares over adaptive networks with
//! noisy inter-node links.
//!
//! The crate has two halves that check each other:
//!
//! * a seeded, reproducible simulator ([`algorithm`], [`experiment`]) that
//!   runs the distributed estimator on synthetic data ([`signal`]) over a
//!   random graph ([`network`]) with partial entry exchange ([`selection`]);
//! * closed-form mean and mean-square analysis ([`theory`]) that predicts the
//!   steady-state network mean-square deviation, with and without link noise.

pub mod algorithm;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod network;
pub mod report;
pub mod rng;
pub mod selection;
pub mod signal;
pub mod theory;

pub use error::{Error, Result};
