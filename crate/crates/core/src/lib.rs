#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod correlate;
pub mod embed;
pub mod entropy;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod netmetrics;
pub mod scalar;
pub mod shockwave;
pub mod stats;
pub mod synthetic;
pub mod windows;

pub use error::{Error, ErrorKind, Result};
pub use matrix::Variable;
pub use scalar::Scalar;

pub type ReturnPanel = corpus::ReturnPanel<f64>;
pub type ReturnPanelF32 = corpus::ReturnPanel<f32>;
pub type PricePanel = corpus::PricePanel<f64>;
pub type PricePanelF32 = corpus::PricePanel<f32>;
pub type LabeledMatrix = matrix::LabeledMatrix<f64>;
pub type LabeledMatrixF32 = matrix::LabeledMatrix<f32>;
pub type CorrelationMatrix = correlate::CorrelationMatrix<f64>;
pub type CorrelationMatrixF32 = correlate::CorrelationMatrix<f32>;
pub type DiscretePanel = entropy::DiscretePanel<f64>;
pub type QuadTEMatrix = entropy::QuadTEMatrix<f64>;
pub type QuadTEMatrixF32 = entropy::QuadTEMatrix<f32>;
pub type DistanceMatrix = netmetrics::DistanceMatrix<f64>;
pub type Embedding = embed::Embedding<f64>;
pub type PropagationMatrix = shockwave::PropagationMatrix<f64>;
pub type ShockTrajectory = shockwave::ShockTrajectory<f64>;
pub type WindowSeries = windows::WindowSeries<f64>;
