//! A four-block CNN written from scratch: conv 3x3 (stride 1, padding 1)
//! -> ReLU -> 2x2 max pool per block, filters doubling per block, then one
//! linear layer with an output per class. Kaiming-initialised, trained with
//! mean cross-entropy, and checkable against finite differences in `f64`.

pub mod dataset;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod tensor;
pub mod train;

pub use dataset::ImageSet;
pub use gradcheck::{grad_check, grad_check_with, GradCheckReport};
pub use loss::cross_entropy;
pub use model::{kaiming_init, CnnConfig, CnnModel};
pub use optim::OptimizerKind;
pub use tensor::{Scalar, Tensor4};
pub use train::{select_checkpoint, train, Checkpoint, TrainConfig, TrainOutcome};
