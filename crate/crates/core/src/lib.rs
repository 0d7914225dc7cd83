//! Unsupervised single-image deraining built on a bidirectional
//! two-generator / two-discriminator adversarial framework with cycle
//! contrastive learning (in semantic and discriminant embedding spaces) and
//! location contrastive learning between generator inputs and outputs.

pub mod config;
pub mod losses;
pub mod networks;
pub mod datasets;
pub mod error;
pub mod rng;

pub use config::Config;
pub use datasets::ImageTensor;
pub use error::{Error, Result};
pub use rng::RngHub;
