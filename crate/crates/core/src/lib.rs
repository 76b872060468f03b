//! Simulation and numerical tools for strategic binary classification.
//!
//! A population of agents with one-dimensional features `x` and labels `y`
//! responds to a deployed threshold classifier `f_θ(x) = 1{x ≥ θ}`. The crate
//! models several response types (perfectly informed best response, noisy
//! perception of the threshold, non-strategic agents and mixtures of these),
//! materializes the induced distribution map `D(θ)`, and analyzes retraining
//! dynamics and optimal thresholds on top of it.
//!
//! The crate is `no_std` and only needs `alloc`. All randomness flows through
//! [`RandomSource`], so every sampler is a pure function of its inputs.

#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod aggregate;
pub mod base;
pub mod cost;
pub mod dynamics;
mod error;
pub mod estimation;
pub mod num;
pub mod response;
pub mod risk;
pub mod rng;
pub mod threshold;

pub use base::{BaseDistribution, Component, ComponentKind, Label};
pub use cost::{Cost, CostFunction, CostKind};
pub use error::{Error, Result};
pub use num::Interval;
pub use response::{Agent, AgentDraw, Behavior, Respond, ResponseModel};
pub use rng::RandomSource;
pub use threshold::{ThetaGrid, ThresholdClassifier};
