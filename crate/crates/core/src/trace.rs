//! Diagnostics recorded while a solver runs.

use std::time::Instant;

use crate::error::Result;

/// One diagnostic sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Examples processed divided by `n`.
    pub epoch: f64,
    /// `P` at the current iterate.
    pub primal: f64,
    /// `P` at the running average of the iterates (Pegasos only).
    pub primal_average: Option<f64>,
    pub dual: Option<f64>,
    /// `primal − dual`.
    pub gap: Option<f64>,
    /// Solver time so far, excluding time spent evaluating diagnostics.
    pub wall_ms: f64,
}

/// Rows with strictly increasing epochs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `row`; rows whose epoch does not exceed the last one are
    /// dropped.
    pub fn push(&mut self, row: TraceRow) {
        if self.rows.last().is_none_or(|r| row.epoch > r.epoch) {
            self.rows.push(row);
        }
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

/// Decides when a row is due and keeps evaluation time out of `wall_ms`.
pub(crate) struct Recorder {
    stride: f64,
    next: f64,
    solver_ms: f64,
    clock: Instant,
}

impl Recorder {
    pub(crate) fn new(stride: f64) -> Self {
        Recorder {
            stride,
            next: stride,
            solver_ms: 0.0,
            clock: Instant::now(),
        }
    }

    pub(crate) fn due(&self, epoch: f64) -> bool {
        epoch >= self.next
    }

    /// Stops the solver clock, builds a row from the elapsed solver time,
    /// and restarts the clock.
    pub(crate) fn sample(
        &mut self,
        trace: &mut ConvergenceTrace,
        epoch: f64,
        row: impl FnOnce(f64) -> Result<TraceRow>,
    ) -> Result<()> {
        self.solver_ms += self.clock.elapsed().as_secs_f64() * 1e3;
        while self.next <= epoch {
            self.next += self.stride;
        }
        trace.push(row(self.solver_ms)?);
        self.clock = Instant::now();
        Ok(())
    }
}
