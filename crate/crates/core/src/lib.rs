//! Cramér-Rao bounds and optimal sensor placement for 2-D source localization
//! with any combination of TDOA, AOA, RSS and TOA measurements.
//!
//! The geometry and information math ([`model`], [`fim`], [`bounds`],
//! [`constraints`], [`optimizer`]) is generic over [`Scalar`] (`f32` or `f64`);
//! the Monte Carlo layer ([`simulate`]) and file I/O work in `f64`.

// `!(x > 0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod constraints;
pub mod error;
pub mod fim;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod output;
pub mod scalar;
pub mod scenario_file;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{MeasurementCombo, Modality};
pub use scalar::Scalar;

pub type SourcePosition = model::SourcePosition<f64>;
pub type SensorPolar = model::SensorPolar<f64>;
pub type Geometry = model::Geometry<f64>;
pub type NoiseModel = model::NoiseModel<f64>;
pub type Scenario = model::Scenario<f64>;
pub type Fim = fim::Fim<f64>;
pub type BoundInputs = bounds::BoundInputs<f64>;
pub type ConstraintReport = constraints::ConstraintReport<f64>;
pub type OptimizerConfig = optimizer::OptimizerConfig<f64>;
pub type Trajectory = optimizer::Trajectory<f64>;

pub type Geometry32 = model::Geometry<f32>;
pub type Scenario32 = model::Scenario<f32>;
pub type Fim32 = fim::Fim<f32>;
