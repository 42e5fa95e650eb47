//! Scenario files, simulation runs and exports.
//!
//! A [`Scenario`] wires a [`SignalModel`] into an observer and a frequency-locked
//! loop. [`run`] steps the loop on a fixed grid and records a [`TraceRow`] per
//! logging step; [`metrics`] reduces the trace to per-event settling figures.

mod config;
mod report;
mod run;

use thiserror::Error;

pub use config::{
    parse_scenario, preset, preset_file, FllEntry, FrequencyEntry, HarmonicEntry, ObserverEntry, ScenarioFile,
    SegmentEntry, SimEntry, DEFAULT_OMEGA0, DEFAULT_POLE_RE, DEFAULT_STEP, PRESET_FRACTIONS, PRESET_FUNDAMENTAL,
    PRESET_NAMES,
};
pub use report::{
    compare, csv_header, event_windows, export, metrics, read_csv, response_grid, run_all, write_csv, write_metrics,
    write_response_csv, Comparison, ComparisonRow, EventComparison, ExportPaths, FREQUENCY_FRACTION, SETTLING_FRACTION,
};
pub use run::{run, HarmonicColumns, RunFailure, RunOutput, TraceRow};

use crate::extraction::ExtractionError;
use crate::fll::FllConfig;
use crate::observer::ObserverGains;
use crate::signal::{SignalError, SignalModel};
use crate::steady_state::ResponseError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("cannot compare: {0}")]
    MismatchedSchedules(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub duration: f64,
    pub step: f64,
    /// `duration / step`, rounded.
    pub steps: usize,
    pub log_every: usize,
    pub seed: u64,
    pub noise_amp: Option<f64>,
    /// Low-pass cutoff in rad/s.
    pub lpf: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub signal: SignalModel,
    pub gains: ObserverGains,
    pub fll: FllConfig,
    /// Initial `ω̂`. Equals `ω(0)` when the FLL is off.
    pub omega0: f64,
    pub sim: SimSettings,
}
