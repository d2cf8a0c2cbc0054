//! Classical and quantum metrics on the parameter spaces of the Dicke and
//! Lipkin-Meshkov-Glick models, their scalar curvature, and the finite-size
//! analysis of the LMG precursors.

pub mod analysis;
pub mod dicke;
pub mod error;
pub mod geometry;
pub mod lmg;
pub mod torus;

pub use dicke::ActionAssignment;
pub use error::{Error, Result};
pub use geometry::{MetricField, MetricTensor2D, ParameterPoint};
