//! Regularized empirical loss minimization under per-coordinate sign
//! constraints.
//!
//! The feasible set is the cone `S = {w : c ⊙ w >= 0}` defined by a
//! [`SignPattern`] with entries in {−1, 0, +1}. Two stochastic solvers are
//! provided, each in a binary/regression and a multiclass form:
//!
//! * [`pegasos`]: mini-batch subgradient steps followed by a sign correction
//!   and a projection onto a ball known to contain the optimum.
//! * [`sdca`]: dual coordinate ascent where the primal iterate is recovered
//!   as `w = Π_S(Xα / (λn))`.
//!
//! ```
//! use signcon::{dataio, LossFamily, LossSpec, SignPattern, TrainConfig};
//!
//! let pattern = SignPattern::from_ints(&[1, -1, 0]).unwrap();
//! let data = dataio::synth_classification(7, 60, 3, &pattern, 0.1).unwrap();
//! let loss = LossSpec::new(LossFamily::Hinge, data.labels()).unwrap();
//! let config = TrainConfig::new(0.1, 20 * data.len()).with_seed(1);
//! let run = signcon::sdca::train_sdca(&data, &loss, &config, &pattern).unwrap();
//! assert!(pattern.is_feasible(run.averaged.weights()));
//! ```

pub mod config;
pub mod data;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod pegasos;
pub mod projection;
pub mod sdca;
pub mod sign;
pub mod trace;

pub(crate) mod linalg;

pub use config::{DualUpdate, TrainConfig};
pub use data::{DataMatrix, Labels, Target};
pub use error::{Error, Result};
pub use losses::{LossFamily, LossSpec, Smoothness};
pub use model::{DualState, PrimalModel};
pub use objective::{dual_objective, primal_objective};
pub use sign::{Sign, SignPattern};
pub use trace::{ConvergenceTrace, TraceRow};
