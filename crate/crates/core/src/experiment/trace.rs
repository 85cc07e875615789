//! Per-epoch (or per-round) metric traces and their CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "phase,step,train_accuracy,test_accuracy,train_loss,test_loss,wall_seconds";

/// One completed epoch (`phase = "epoch"`) or round (`phase = "round"`).
/// Training-set columns are empty when training evaluation is off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub phase: String,
    pub step: usize,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: f64,
    pub train_loss: Option<f64>,
    pub test_loss: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentTrace {
    pub rows: Vec<TraceRow>,
}

impl ExperimentTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn test_accuracies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.test_accuracy).collect()
    }
}

pub fn write_trace_csv(trace: &ExperimentTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if trace.rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for row in &trace.rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::path(path, e))
}

pub fn read_trace_csv(path: &Path) -> Result<ExperimentTrace> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::Format(format!(
            "{}: unexpected CSV header {header:?}",
            path.display()
        )));
    }
    let rows = r.deserialize().collect::<std::result::Result<Vec<TraceRow>, _>>()?;
    Ok(ExperimentTrace { rows })
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    sum / n as f64
}

fn mean_of_optional(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.collect::<Option<Vec<f64>>>().map(|v| mean_of(v.into_iter()))
}

/// Pointwise mean over trials. Traces must agree on length, phase and step.
/// An optional column is averaged only if every trial has it.
pub fn average_trials(traces: &[ExperimentTrace]) -> Result<ExperimentTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Validation("no traces to average".into()))?;
    for (t, trace) in traces.iter().enumerate() {
        if trace.rows.len() != first.rows.len() {
            return Err(Error::Validation(format!(
                "trace {t} has {} rows, trace 0 has {}",
                trace.rows.len(),
                first.rows.len()
            )));
        }
        for (a, b) in trace.rows.iter().zip(&first.rows) {
            if (&a.phase, a.step) != (&b.phase, b.step) {
                return Err(Error::Validation(format!(
                    "trace {t} has row {} {} where trace 0 has {} {}",
                    a.phase, a.step, b.phase, b.step
                )));
            }
        }
    }
    let rows = (0..first.rows.len())
        .map(|k| {
            let col = || traces.iter().map(move |t| &t.rows[k]);
            TraceRow {
                phase: first.rows[k].phase.clone(),
                step: first.rows[k].step,
                train_accuracy: mean_of_optional(col().map(|r| r.train_accuracy)),
                test_accuracy: mean_of(col().map(|r| r.test_accuracy)),
                train_loss: mean_of_optional(col().map(|r| r.train_loss)),
                test_loss: mean_of(col().map(|r| r.test_loss)),
                wall_seconds: mean_of(col().map(|r| r.wall_seconds)),
            }
        })
        .collect();
    Ok(ExperimentTrace { rows })
}
