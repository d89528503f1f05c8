//! Multiphase level-set scene parsing.
//!
//! Coarse per-class scores are turned into one signed level-set plane per
//! class, evolved under a region-competition speed with a shared curvature
//! regularizer, and read back as a partition by per-pixel argmin. A small
//! linear predictor closes the loop by taking the refined partition as input
//! for its next prediction.
//!
//! Everything numeric is generic over [`Real`]; the aliases below fix the
//! scalar type for the common cases.

pub mod dtrans;
pub mod error;
pub mod fields;
pub mod io;
pub mod learner;
pub mod metrics;
pub mod mls;
pub mod region;
pub mod scalar;
pub mod synth;

pub use dtrans::{edt, init_phi, BinaryMask};
pub use error::{Error, Result};
pub use fields::{Grid, LabelMap, Stack, VectorField2};
pub use learner::{LinearPredictor, PredictorParams, TrainConfig};
pub use metrics::{confusion, mean_iou, pixel_accuracy, ConfusionMatrix};
pub use mls::{assign, evolve, refine, EvolutionConfig};
pub use scalar::Real;

pub type ScalarField = Grid<f64>;
pub type FieldStack = Stack<f64>;
/// Per-class scores in `[0, 1]`.
pub type ScoreStack = Stack<f64>;
/// Per-class level sets, negative inside.
pub type LevelSetStack = Stack<f64>;

pub type ScalarField32 = Grid<f32>;
pub type FieldStack32 = Stack<f32>;
pub type ScoreStack32 = Stack<f32>;
pub type LevelSetStack32 = Stack<f32>;
