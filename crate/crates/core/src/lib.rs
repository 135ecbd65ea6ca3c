//! Numerical laboratory for the gauge-adjusted Bach flow near metrics of
//! constant sectional curvature: curvature pipeline, linearization,
//! splitting, spectral estimates, indicial roots and flow experiments.

pub mod cli_reports;
pub mod curvature_ops;
pub mod decomposition;
pub mod error;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod indicial;
pub mod linearized_operator;
pub mod modal;
pub mod model_spaces;
pub mod samples;
pub mod spectral_analysis;
pub mod tensor_fields;

pub use error::{Error, Result};
pub use field::{Symmetry, TensorField};
pub use geometry::Geometry;
pub use grid::{Axis, Deriv, Grid, Scheme};
pub use model_spaces::{make_model, Chart, ChartParams, ModelSpace};
pub use rustfft::num_complex::Complex64;
