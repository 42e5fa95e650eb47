use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::extraction::ExtractionError;
use crate::fll::FllError;
use crate::observer::ObserverError;
use crate::placement::PlacementError;
use crate::scenario::ScenarioError;
use crate::signal::SignalError;
use crate::steady_state::ResponseError;

/// Crate-level error wrapping the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Fll(#[from] FllError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
