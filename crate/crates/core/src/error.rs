use thiserror::Error;

use crate::model::Modality;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sensor {index} coincides with the source")]
    CoincidentSensor { index: usize },

    #[error("too few sensors: {n} (need at least 3)")]
    TooFewSensors { n: usize },

    #[error("reference index {index} out of range for {n} sensors")]
    InvalidReference { index: usize, n: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("singular Fisher information matrix (det = {det:e})")]
    SingularFim { det: f64 },

    #[error("unsupported measurement combination {combo}: analytic bound requires TDOA")]
    UnsupportedCombo { combo: String },

    #[error("zero information: no active modality contributes")]
    ZeroInformation,

    #[error("empty measurement combination")]
    EmptyCombo,

    #[error("measurement block {0:?} missing or has the wrong length")]
    MeasurementShape(Modality),

    #[error("optimizer stalled: step size {step:e} underflowed after singular FIM rejections")]
    Stall { step: f64 },

    #[error("estimator diverged: {0}")]
    Diverged(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scenario file: {0}")]
    ScenarioFile(String),

    #[error("scenario validation failed: {0}")]
    Validation(String),

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
