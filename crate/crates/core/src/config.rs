//! Solver configuration.

use crate::error::{Error, Result};

/// How SDCA chooses the dual step `Δα`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualUpdate {
    /// Exact coordinate maximization where available, the lower-bound step
    /// otherwise (logistic loss).
    #[default]
    Auto,
    /// Exact maximization of the local dual objective.
    ClosedForm,
    /// The step that maximizes a quadratic lower bound of the local dual
    /// objective; needs a smooth loss.
    LowerBound,
}

/// Settings shared by both solvers. Fields that only one solver reads are
/// ignored by the other.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Regularization weight `λ > 0`.
    pub lambda: f64,
    /// Iteration count `T`.
    pub iterations: usize,
    /// SDCA averaging burn-in `T0`; `None` picks `max(n, T/2)`, falling back
    /// to `T/2` when that is not below `T`.
    pub burn_in: Option<usize>,
    /// Pegasos mini-batch size `k`.
    pub batch_size: usize,
    pub seed: u64,
    /// Record a trace row every this many epochs; `None` disables tracing.
    pub trace_every: Option<f64>,
    pub dual_update: DualUpdate,
}

impl TrainConfig {
    pub fn new(lambda: f64, iterations: usize) -> Self {
        TrainConfig {
            lambda,
            iterations,
            burn_in: None,
            batch_size: 1,
            seed: 0,
            trace_every: None,
            dual_update: DualUpdate::Auto,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_batch_size(mut self, k: usize) -> Self {
        self.batch_size = k;
        self
    }

    pub fn with_burn_in(mut self, t0: usize) -> Self {
        self.burn_in = Some(t0);
        self
    }

    pub fn with_trace_every(mut self, epochs: f64) -> Self {
        self.trace_every = Some(epochs);
        self
    }

    pub fn with_dual_update(mut self, update: DualUpdate) -> Self {
        self.dual_update = update;
        self
    }

    pub(crate) fn validate_common(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("need at least one iteration".into()));
        }
        if let Some(e) = self.trace_every {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "trace stride must be positive, got {e}"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn validate_pegasos(&self, n: usize) -> Result<()> {
        self.validate_common()?;
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::InvalidConfig(format!(
                "batch size must be in 1..={n}, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }

    /// Resolves `T0` for `n` examples.
    pub fn effective_burn_in(&self, n: usize) -> usize {
        let t = self.iterations;
        match self.burn_in {
            Some(t0) => t0,
            None => {
                let t0 = n.max(t / 2);
                if t0 >= t {
                    t / 2
                } else {
                    t0
                }
            }
        }
    }

    pub(crate) fn validate_sdca(&self, n: usize) -> Result<usize> {
        self.validate_common()?;
        let t0 = self.effective_burn_in(n);
        if t0 >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "burn-in T0={t0} must be below T={}",
                self.iterations
            )));
        }
        Ok(t0)
    }
}
