//! Projection heads and the embedding extraction paths built on them.
//!
//! Two families of two-layer MLP heads exist, each with distinct parameters
//! per (domain, tapped layer) pair: content heads projecting sampled
//! generator-encoder patches into the unit sphere for the location loss,
//! and discriminant heads projecting pooled discriminator activations into
//! the discriminant space for the inter cycle loss.

use std::collections::BTreeMap;

use candle_core::{DType, Device, Tensor, Var};
use rand::Rng;

use crate::config::{DiscriminatorSpec, GeneratorSpec};
use crate::datasets::ImageTensor;
use crate::error::{Error, Result};
use crate::rng::RngHub;

use super::discriminator::{self, Discriminator};
use super::generator::{self, GeneratorTaps};
use super::layers::Linear;
use super::ops::{global_avg_pool, unit_normalize};

/// Which side of the translation an image belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Domain {
    Rainy,
    RainFree,
}

impl Domain {
    pub fn tag(&self) -> &'static str {
        match self {
            Domain::Rainy => "rainy",
            Domain::RainFree => "rainfree",
        }
    }
}

/// Two affine maps with one ReLU in between.
pub struct ProjectionHead {
    fc1: Linear,
    fc2: Linear,
}

impl ProjectionHead {
    fn new(rng: &mut impl Rng, in_dim: usize, out_dim: usize, dtype: DType, device: &Device) -> Result<Self> {
        Ok(Self {
            fc1: Linear::new(rng, in_dim, out_dim, dtype, device)?,
            fc2: Linear::new(rng, out_dim, out_dim, dtype, device)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.fc2.forward(&self.fc1.forward(x, false)?.relu()?, false)
    }

    fn named_parameters(&self, prefix: &str) -> Vec<(String, Var)> {
        vec![
            (format!("{prefix}.fc1.w"), self.fc1.w.clone()),
            (format!("{prefix}.fc1.b"), self.fc1.b.clone()),
            (format!("{prefix}.fc2.w"), self.fc2.w.clone()),
            (format!("{prefix}.fc2.b"), self.fc2.b.clone()),
        ]
    }
}

/// All projection heads of a model, keyed by family, domain and tap index.
pub struct HeadBank {
    lcl: BTreeMap<(Domain, usize), ProjectionHead>,
    disc: BTreeMap<(Domain, usize), ProjectionHead>,
    projection_dim: usize,
}

impl HeadBank {
    pub fn new(
        gen_spec: &GeneratorSpec,
        disc_spec: &DiscriminatorSpec,
        projection_dim: usize,
        hub: &RngHub,
        dtype: DType,
        device: &Device,
    ) -> Result<Self> {
        let mut lcl = BTreeMap::new();
        let mut disc = BTreeMap::new();
        for domain in [Domain::Rainy, Domain::RainFree] {
            for (i, in_dim) in generator::tap_channels(gen_spec).iter().enumerate() {
                let mut rng = hub.stream(&format!("init/heads/lcl/{}/{}", domain.tag(), i));
                lcl.insert((domain, i), ProjectionHead::new(&mut rng, *in_dim, projection_dim, dtype, device)?);
            }
            for (i, in_dim) in discriminator::tap_channels(disc_spec).iter().enumerate() {
                let mut rng = hub.stream(&format!("init/heads/disc/{}/{}", domain.tag(), i));
                disc.insert((domain, i), ProjectionHead::new(&mut rng, *in_dim, projection_dim, dtype, device)?);
            }
        }
        Ok(Self { lcl, disc, projection_dim })
    }

    pub fn projection_dim(&self) -> usize {
        self.projection_dim
    }

    pub fn lcl_head(&self, domain: Domain, tap: usize) -> Result<&ProjectionHead> {
        self.lcl
            .get(&(domain, tap))
            .ok_or_else(|| Error::Contract(format!("no content head for {}/{tap}", domain.tag())))
    }

    pub fn disc_head(&self, domain: Domain, tap: usize) -> Result<&ProjectionHead> {
        self.disc
            .get(&(domain, tap))
            .ok_or_else(|| Error::Contract(format!("no discriminant head for {}/{tap}", domain.tag())))
    }

    pub fn named_parameters(&self) -> Vec<(String, Var)> {
        let mut out = Vec::new();
        for ((domain, tap), head) in &self.lcl {
            out.extend(head.named_parameters(&format!("heads.lcl.{}.{tap}", domain.tag())));
        }
        for ((domain, tap), head) in &self.disc {
            out.extend(head.named_parameters(&format!("heads.disc.{}.{tap}", domain.tag())));
        }
        out
    }
}

/// Sampled spatial indices, one list of flat `h*w` offsets per tapped layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchLocations {
    pub per_layer: Vec<Vec<u32>>,
}

/// Draw `num_locations` distinct flat indices per layer (all of them, in
/// random order, when a layer has fewer positions than requested).
pub fn sample_locations(
    layer_hw: &[(usize, usize)],
    num_locations: usize,
    rng: &mut impl Rng,
) -> PatchLocations {
    let per_layer = layer_hw
        .iter()
        .map(|&(h, w)| {
            let total = h * w;
            let take = num_locations.min(total);
            if take < num_locations {
                log::warn!("capping sampled locations to {take} for a {h}x{w} layer");
            }
            rand::seq::index::sample(rng, total, take)
                .into_iter()
                .map(|i| i as u32)
                .collect()
        })
        .collect();
    PatchLocations { per_layer }
}

/// Per-layer projected patch features at the sampled locations, plus the
/// locations themselves so a later pass can replay them exactly.
pub struct PatchFeatureSet {
    pub locations: PatchLocations,
    /// One `[b, L, d]` tensor per tapped layer, rows unit-normalized.
    pub features: Vec<Tensor>,
}

/// Project tapped generator activations at fixed sampled locations.
///
/// Passing the locations recorded from the input-image call replays them
/// bit-identically on the output image, which is what makes same-location
/// patches positives.
pub fn encode_content(
    taps: &GeneratorTaps,
    heads: &HeadBank,
    domain: Domain,
    locations: &PatchLocations,
    norm_epsilon: f64,
) -> Result<PatchFeatureSet> {
    if locations.per_layer.len() != taps.tensors.len() {
        return Err(Error::Contract(format!(
            "location list covers {} layers but the generator taps {}",
            locations.per_layer.len(),
            taps.tensors.len()
        )));
    }
    let mut features = Vec::with_capacity(taps.tensors.len());
    for (tap_idx, (tap, idx)) in taps.tensors.iter().zip(&locations.per_layer).enumerate() {
        let (b, c, h, w) = tap.dims4()?;
        if let Some(&bad) = idx.iter().find(|&&i| i as usize >= h * w) {
            return Err(Error::Contract(format!(
                "location {bad} out of range for a {h}x{w} layer"
            )));
        }
        let idx_t = Tensor::from_vec(idx.clone(), (idx.len(),), tap.device())?;
        let flat = tap.reshape((b, c, h * w))?.transpose(1, 2)?.contiguous()?;
        let picked = flat.index_select(&idx_t, 1)?;
        let projected = heads.lcl_head(domain, tap_idx)?.forward(&picked)?;
        features.push(unit_normalize(&projected, norm_epsilon)?);
    }
    Ok(PatchFeatureSet { locations: locations.clone(), features })
}

/// Pool each tapped discriminator activation and project it into the
/// discriminant space. Returns one unnormalized `[b, d]` vector per tap;
/// the inter loss measures raw L1 distances between them.
///
/// `stop_disc_grad` detaches the taps first, so the loss trains the heads
/// but not the discriminator encoder (ablation toggle).
pub fn encode_discriminant(
    disc: &Discriminator,
    heads: &HeadBank,
    domain: Domain,
    img: &ImageTensor,
    stop_disc_grad: bool,
) -> Result<Vec<Tensor>> {
    let taps = disc.encoder_taps(img)?;
    let mut out = Vec::with_capacity(taps.len());
    for (i, tap) in taps.iter().enumerate() {
        let tap = if stop_disc_grad { tap.detach() } else { tap.clone() };
        let pooled = global_avg_pool(&tap)?;
        out.push(heads.disc_head(domain, i)?.forward(&pooled)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::generator::Generator;
    use crate::networks::ops::{checksum_vars, scalar_value};

    fn toy_gen_spec() -> GeneratorSpec {
        GeneratorSpec { num_residual_blocks: 2, base_channels: 8, downsample_stages: 2 }
    }

    fn toy_disc_spec() -> DiscriminatorSpec {
        DiscriminatorSpec { num_stride2_layers: 3, base_channels: 8 }
    }

    fn bank() -> HeadBank {
        let hub = RngHub::new(11);
        HeadBank::new(&toy_gen_spec(), &toy_disc_spec(), 16, &hub, DType::F32, &Device::Cpu).unwrap()
    }

    fn random_image(h: usize, w: usize) -> ImageTensor {
        let t = candle_core::Tensor::randn(0f32, 0.4f32, (1, 3, h, w), &Device::Cpu)
            .unwrap()
            .clamp(-1.0, 1.0)
            .unwrap();
        ImageTensor::new(t).unwrap()
    }

    #[test]
    fn domains_have_distinct_parameters() {
        let heads = bank();
        let named = heads.named_parameters();
        let rainy = named.iter().filter(|(n, _)| n.contains(".rainy."));
        let rainfree = named.iter().filter(|(n, _)| n.contains(".rainfree."));
        let hr = checksum_vars(rainy.map(|(n, v)| (n.as_str(), v))).unwrap();
        let hf = checksum_vars(rainfree.map(|(n, v)| (n.as_str(), v))).unwrap();
        assert_ne!(hr, hf);
    }

    #[test]
    fn sampling_caps_and_replays() {
        let hub = RngHub::new(1);
        let layers = [(8usize, 8usize), (2, 2)];
        let locs = sample_locations(&layers, 16, &mut hub.stream("locs"));
        assert_eq!(locs.per_layer[0].len(), 16);
        assert_eq!(locs.per_layer[1].len(), 4, "capped at h*w");
        let again = sample_locations(&layers, 16, &mut hub.stream("locs"));
        assert_eq!(locs, again);
        // distinct indices
        let mut sorted = locs.per_layer[0].clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 16);
    }

    #[test]
    fn content_features_are_unit_norm_and_replayable() {
        let hub = RngHub::new(2);
        let gen = Generator::new(&toy_gen_spec(), &mut hub.stream("init/g"), DType::F32, &Device::Cpu).unwrap();
        let heads = bank();
        let img = random_image(32, 32);
        let (out, taps_in) = gen.forward_with_taps(&img).unwrap();
        let hw: Vec<(usize, usize)> = taps_in
            .tensors
            .iter()
            .map(|t| (t.dims()[2], t.dims()[3]))
            .collect();
        let locs = sample_locations(&hw, 12, &mut hub.stream("lcl/e0/s0"));
        let set_in = encode_content(&taps_in, &heads, Domain::Rainy, &locs, 1e-8).unwrap();
        let (_, taps_out) = gen.forward_with_taps(&out).unwrap();
        let set_out = encode_content(&taps_out, &heads, Domain::RainFree, &locs, 1e-8).unwrap();
        assert_eq!(set_in.locations, set_out.locations);
        for f in &set_in.features {
            let norms = f.sqr().unwrap().sum(candle_core::D::Minus1).unwrap().sqrt().unwrap();
            let v: Vec<f32> = norms.flatten_all().unwrap().to_vec1().unwrap();
            for n in v {
                assert!((n - 1.0).abs() < 1e-5, "norm {n} not unit");
            }
        }
    }

    #[test]
    fn discriminant_embeddings_zero_distance_for_identical_inputs() {
        let hub = RngHub::new(3);
        let disc = Discriminator::new(&toy_disc_spec(), &mut hub.stream("init/d"), DType::F32, &Device::Cpu).unwrap();
        let heads = bank();
        let img = random_image(32, 32);
        let a = encode_discriminant(&disc, &heads, Domain::RainFree, &img, false).unwrap();
        let b = encode_discriminant(&disc, &heads, Domain::RainFree, &img, false).unwrap();
        assert_eq!(a.len(), disc.num_taps());
        for (x, y) in a.iter().zip(&b) {
            let d = scalar_value(&crate::networks::ops::l1_distance(x, y).unwrap()).unwrap();
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn location_mismatch_is_contract_violation() {
        let hub = RngHub::new(4);
        let gen = Generator::new(&toy_gen_spec(), &mut hub.stream("init/g"), DType::F32, &Device::Cpu).unwrap();
        let heads = bank();
        let (_, taps) = gen.forward_with_taps(&random_image(32, 32)).unwrap();
        let locs = PatchLocations { per_layer: vec![vec![0u32]; 2] };
        let err = encode_content(&taps, &heads, Domain::Rainy, &locs, 1e-8).err().unwrap();
        assert!(matches!(err, Error::Contract(_)));
    }
}
