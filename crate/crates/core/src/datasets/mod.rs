//! Data ingestion: unpaired training collections, paired evaluation sets,
//! preprocessing, and the procedural toy dataset.

mod image_tensor;
mod pairs;
mod preprocess;
mod rain;
mod toygen;
mod unpaired;

pub use image_tensor::ImageTensor;
pub use pairs::PairedEvalSet;
pub use preprocess::{
    crop_to_geometry, denormalize_to_rgb8, normalize_rgb8, pad_to_multiple, preprocess,
    EvalGeometry, Mode, Preprocessed, PreprocessOptions,
};
pub use rain::{synth_rain, RainParams};
pub use toygen::{generate_toy_dataset, ToyDataSpec, ToyDataSummary};
pub use unpaired::{load_image, UnpairedDataset};
