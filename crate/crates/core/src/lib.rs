//! Exact behavioural distances, quantitative modal logic and bisimulation
//! games on finite probabilistic transition systems.
//!
//! All arithmetic is over arbitrary-precision rationals.

pub mod approx;
pub mod eval;
pub mod fixtures;
pub mod formula;
pub mod game;
pub mod lp;
pub mod metrics;
pub mod rational;
pub mod suite;
pub mod system;
pub mod transport;

pub use rational::Rational;
