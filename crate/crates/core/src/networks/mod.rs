//! Network definitions: the two generators, the two discriminators, the
//! frozen semantic encoder, and the projection heads.

mod discriminator;
mod generator;
mod heads;
mod layers;
pub mod ops;
mod semantic;

pub use discriminator::{tap_channels as discriminator_tap_channels, Discriminator, DiscriminatorOutput};
pub use generator::{
    tap_channels as generator_tap_channels, tapped_residual_block, Generator, GeneratorTaps,
};
pub use heads::{
    encode_content, encode_discriminant, sample_locations, Domain, HeadBank, PatchFeatureSet,
    PatchLocations, ProjectionHead,
};
pub use layers::{gaussian_tensor, gaussian_vec, Conv2d, ConvTranspose2d, Linear};
pub use semantic::{ClipVit, SemanticEncoder, StandinCnn, CACHE_ENV};
