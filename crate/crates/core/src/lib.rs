//! Simulation of Gaussian fluid queues and their heavy- and light-traffic
//! scaling limits.
//!
//! The input is a centered Gaussian process `X` with stationary increments,
//! described entirely by its variance function `sigma^2`. The crate samples
//! `X` exactly on a grid, computes the stationary workload
//! `Q(t) = sup_{s <= t} (X(t) - X(s) - c (t - s))`, solves for the time scale
//! `delta(c)` with `c delta / sigma(delta) = 1`, and compares the rescaled
//! workload `Q(delta t) / sigma(delta)` against the fractional Brownian motion
//! queue it converges to.

pub mod entropy;
pub mod error;
pub mod experiments;
pub mod path;
pub mod queue;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod variance;

pub use error::{Error, Result};
pub use path::{EmbeddingReport, GridSpec, Method, PathSample, PathSampler, SamplerOptions};
pub use queue::{QueueConfig, WorkloadPath, WorkloadSimulator};
pub use rng::SeedTrace;
pub use scaling::{solve_delta, DeltaSolution, Regime};
pub use stats::EmpiricalSample;
pub use variance::{ModelKind, ModelSpec, Rescaled, VarianceFunction, VarianceModel};
