//! Experiment harnesses: paired constrained/unconstrained trials on random
//! splits, and convergence curves against a reference optimum.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::TrainConfig;
use crate::data::DataMatrix;
use crate::dataio;
use crate::error::{Error, Result};
use crate::losses::{LossFamily, LossSpec};
use crate::metrics;
use crate::model::PrimalModel;
use crate::oracle::{self, OracleOptions};
use crate::pegasos;
use crate::sdca;
use crate::sign::SignPattern;
use crate::trace::ConvergenceTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Sdca,
    Pegasos,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Sdca => "sdca",
            Solver::Pegasos => "pegasos",
        })
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdca" => Ok(Solver::Sdca),
            "pegasos" => Ok(Solver::Pegasos),
            other => Err(Error::InvalidConfig(format!(
                "unknown solver `{other}`, expected sdca or pegasos"
            ))),
        }
    }
}

/// Trains `solver` for `epochs` passes and returns its averaged model.
pub fn fit(
    solver: Solver,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    epochs: usize,
    seed: u64,
    pattern: &SignPattern,
) -> Result<PrimalModel> {
    let config = TrainConfig::new(lambda, epochs.max(1) * data.len()).with_seed(seed);
    match solver {
        Solver::Sdca => sdca::train_sdca(data, loss, &config, pattern).map(|r| r.averaged),
        Solver::Pegasos => pegasos::train_pegasos(data, loss, &config, pattern).map(|r| r.averaged),
    }
}

/// Settings for [`paired_sign_trials`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub n_train: usize,
    pub trials: usize,
    pub seed: u64,
    pub lambda: f64,
    pub epochs: usize,
    pub loss: LossFamily,
    pub solver: Solver,
}

/// Test ROC-AUC of one split, with and without the sign constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub unconstrained: f64,
    pub constrained: f64,
}

impl TrialOutcome {
    pub fn improvement(&self) -> f64 {
        self.constrained - self.unconstrained
    }
}

/// Trial `t` splits with seed `seed + t` and trains both models with the
/// same seed, so the pair differs only in the constraints. Trials run in
/// parallel; the result is in trial order and does not depend on the
/// thread count.
pub fn paired_sign_trials(data: &DataMatrix, pattern: &SignPattern, spec: &TrialSpec) -> Result<Vec<TrialOutcome>> {
    if spec.trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    if pattern.classes() != 1 || pattern.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            what: "sign pattern size",
            expected: data.dim(),
            found: pattern.len(),
        });
    }
    let free = SignPattern::unconstrained(data.dim());
    (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = spec.seed.wrapping_add(trial as u64);
            let (train, test) = dataio::train_test_split(data, spec.n_train, seed)?;
            let loss = LossSpec::new(spec.loss, train.labels())?;
            let truth = test
                .labels()
                .values()
                .ok_or_else(|| Error::InvalidLabels("trials need binary labels".into()))?;
            let auc = |p: &SignPattern| -> Result<f64> {
                let model = fit(spec.solver, &train, &loss, spec.lambda, spec.epochs, seed, p)?;
                metrics::roc_auc(&model.score_all(&test)?, truth)
            };
            Ok(TrialOutcome {
                trial,
                unconstrained: auc(&free)?,
                constrained: auc(pattern)?,
            })
        })
        .collect()
}

/// Aggregate of a set of [`TrialOutcome`]s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub mean_unconstrained: f64,
    pub mean_constrained: f64,
    /// Fraction of trials where the constrained model scored strictly higher.
    pub improved_fraction: f64,
}

impl TrialSummary {
    pub fn of(outcomes: &[TrialOutcome]) -> Option<TrialSummary> {
        if outcomes.is_empty() {
            return None;
        }
        let n = outcomes.len() as f64;
        Some(TrialSummary {
            mean_unconstrained: outcomes.iter().map(|o| o.unconstrained).sum::<f64>() / n,
            mean_constrained: outcomes.iter().map(|o| o.constrained).sum::<f64>() / n,
            improved_fraction: outcomes.iter().filter(|o| o.improvement() > 0.0).count() as f64 / n,
        })
    }

    pub fn mean_improvement(&self) -> f64 {
        self.mean_constrained - self.mean_unconstrained
    }
}

/// One solver's trace in a [`Benchmark`].
#[derive(Debug, Clone)]
pub struct Curve {
    /// `sdca` or `pegasos-k<batch>`.
    pub name: String,
    pub trace: ConvergenceTrace,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    /// Reference optimum from [`oracle::reference_solve`].
    pub p_star: f64,
    pub curves: Vec<Curve>,
}

impl Benchmark {
    /// `(epoch, P(w) − P★)` for the named curve. Pegasos is scored at its
    /// running average, the model it returns; SDCA at its current iterate.
    pub fn suboptimality(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        self.curves.iter().find(|c| c.name == name).map(|c| {
            c.trace
                .rows()
                .iter()
                .map(|r| (r.epoch, r.primal_average.unwrap_or(r.primal) - self.p_star))
                .collect()
        })
    }
}

/// Runs SDCA and Pegasos (mini-batches of 10 and 100, capped at `n`) for
/// `epochs` passes, sampling a trace row every `trace_every` epochs.
pub fn convergence_benchmark(
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    pattern: &SignPattern,
    epochs: usize,
    seed: u64,
    trace_every: f64,
) -> Result<Benchmark> {
    let n = data.len();
    if epochs == 0 {
        return Err(Error::InvalidConfig("need at least one epoch".into()));
    }
    let options = OracleOptions {
        tol: 1e-9,
        ..OracleOptions::default()
    };
    let p_star = oracle::reference_solve(data, loss, lambda, pattern, &options)?.objective;

    let sdca_cfg = TrainConfig::new(lambda, epochs * n)
        .with_seed(seed)
        .with_trace_every(trace_every);
    let mut curves = vec![Curve {
        name: "sdca".into(),
        trace: sdca::train_sdca(data, loss, &sdca_cfg, pattern)?.trace,
    }];
    for k in [10usize, 100] {
        let k = k.min(n);
        let cfg = TrainConfig::new(lambda, (epochs * n).div_ceil(k))
            .with_seed(seed)
            .with_batch_size(k)
            .with_trace_every(trace_every);
        curves.push(Curve {
            name: format!("pegasos-k{k}"),
            trace: pegasos::train_pegasos(data, loss, &cfg, pattern)?.trace,
        });
    }
    Ok(Benchmark { p_star, curves })
}
