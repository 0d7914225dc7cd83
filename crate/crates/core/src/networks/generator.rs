//! ResNet-style generator with reflection padding, instance norm, strided
//! downsampling, transposed-conv upsampling and a tanh output, plus tapped
//! encoder activations for the location loss.

use candle_core::{DType, Device, Tensor};
use rand::Rng;

use crate::config::GeneratorSpec;
use crate::datasets::ImageTensor;
use crate::error::{Error, Result};

use super::layers::{Conv2d, ConvTranspose2d};
use super::ops::{instance_norm, reflection_pad};

const IN_EPS: f64 = 1e-5;

/// Residual block index (1-based) whose output is tapped; the convention
/// follows the contrastive-unpaired-translation recipe of spreading taps
/// across the encoder, using the 4th block when the generator has one.
pub fn tapped_residual_block(spec: &GeneratorSpec) -> usize {
    spec.num_residual_blocks.min(4)
}

/// Channel widths of the tapped activations, in tap order:
/// input image, stem output, each downsample output, tapped residual block.
pub fn tap_channels(spec: &GeneratorSpec) -> Vec<usize> {
    let mut dims = vec![3, spec.base_channels];
    for i in 1..=spec.downsample_stages {
        dims.push(spec.base_channels << i);
    }
    dims.push(spec.base_channels << spec.downsample_stages);
    dims
}

struct ResBlock {
    conv1: Conv2d,
    conv2: Conv2d,
}

impl ResBlock {
    fn new(rng: &mut impl Rng, channels: usize, dtype: DType, device: &Device) -> Result<Self> {
        Ok(Self {
            conv1: Conv2d::new(rng, channels, channels, 3, 1, 0, dtype, device)?,
            conv2: Conv2d::new(rng, channels, channels, 3, 1, 0, dtype, device)?,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let h = self.conv1.forward(&reflection_pad(x, 1)?, false)?;
        let h = instance_norm(&h, IN_EPS)?.relu()?;
        let h = self.conv2.forward(&reflection_pad(&h, 1)?, false)?;
        let h = instance_norm(&h, IN_EPS)?;
        Ok((x + h)?)
    }
}

pub struct Generator {
    spec: GeneratorSpec,
    stem: Conv2d,
    downs: Vec<Conv2d>,
    blocks: Vec<ResBlock>,
    ups: Vec<ConvTranspose2d>,
    head: Conv2d,
}

/// Encoder activations recorded during a forward pass, one per tap.
pub struct GeneratorTaps {
    pub tensors: Vec<Tensor>,
}

impl Generator {
    pub fn new(spec: &GeneratorSpec, rng: &mut impl Rng, dtype: DType, device: &Device) -> Result<Self> {
        if spec.num_residual_blocks < 1 {
            return Err(Error::Config("generator needs at least one residual block".into()));
        }
        let bc = spec.base_channels;
        let stem = Conv2d::new(rng, 3, bc, 7, 1, 0, dtype, device)?;
        let mut downs = Vec::new();
        for i in 0..spec.downsample_stages {
            downs.push(Conv2d::new(rng, bc << i, bc << (i + 1), 3, 2, 1, dtype, device)?);
        }
        let inner = bc << spec.downsample_stages;
        let mut blocks = Vec::new();
        for _ in 0..spec.num_residual_blocks {
            blocks.push(ResBlock::new(rng, inner, dtype, device)?);
        }
        let mut ups = Vec::new();
        for i in (0..spec.downsample_stages).rev() {
            ups.push(ConvTranspose2d::new(rng, bc << (i + 1), bc << i, 3, 2, 1, 1, dtype, device)?);
        }
        let head = Conv2d::new(rng, bc, 3, 7, 1, 0, dtype, device)?;
        Ok(Self { spec: spec.clone(), stem, downs, blocks, ups, head })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// Number of tapped activations (`tap_channels(spec).len()`).
    pub fn num_taps(&self) -> usize {
        2 + self.spec.downsample_stages + 1
    }

    /// Forward pass returning both the translated image and the tapped
    /// encoder activations. Training-path inputs must already be divisible
    /// by the generator stride; the eval path pads beforehand.
    pub fn forward_with_taps(&self, input: &ImageTensor) -> Result<(ImageTensor, GeneratorTaps)> {
        let x = input.data();
        let (_, _, h, w) = x.dims4()?;
        let stride = 1usize << self.spec.downsample_stages;
        if h % stride != 0 || w % stride != 0 {
            return Err(Error::Shape(format!(
                "generator input {h}x{w} not divisible by stride {stride}; pad eval inputs first"
            )));
        }
        let mut taps = Vec::with_capacity(self.num_taps());
        taps.push(x.clone());
        let mut cur = self.stem.forward(&reflection_pad(x, 3)?, false)?;
        cur = instance_norm(&cur, IN_EPS)?.relu()?;
        taps.push(cur.clone());
        for down in &self.downs {
            cur = down.forward(&cur, false)?;
            cur = instance_norm(&cur, IN_EPS)?.relu()?;
            taps.push(cur.clone());
        }
        let tap_block = tapped_residual_block(&self.spec);
        for (i, block) in self.blocks.iter().enumerate() {
            cur = block.forward(&cur)?;
            if i + 1 == tap_block {
                taps.push(cur.clone());
            }
        }
        for up in &self.ups {
            cur = up.forward(&cur, false)?;
            cur = instance_norm(&cur, IN_EPS)?.relu()?;
        }
        let out = self.head.forward(&reflection_pad(&cur, 3)?, false)?.tanh()?;
        Ok((ImageTensor::from_bounded(out)?, GeneratorTaps { tensors: taps }))
    }

    pub fn forward(&self, input: &ImageTensor) -> Result<ImageTensor> {
        Ok(self.forward_with_taps(input)?.0)
    }

    pub fn named_parameters(&self, prefix: &str) -> Vec<(String, candle_core::Var)> {
        let mut out = Vec::new();
        let mut push = |name: String, vars: Vec<&candle_core::Var>| {
            for (i, v) in vars.into_iter().enumerate() {
                let suffix = if i == 0 { "w" } else { "b" };
                out.push((format!("{name}.{suffix}"), v.clone()));
            }
        };
        push(format!("{prefix}.stem"), self.stem.parameters());
        for (i, d) in self.downs.iter().enumerate() {
            push(format!("{prefix}.down{i}"), d.parameters());
        }
        for (i, b) in self.blocks.iter().enumerate() {
            push(format!("{prefix}.res{i}.conv1"), b.conv1.parameters());
            push(format!("{prefix}.res{i}.conv2"), b.conv2.parameters());
        }
        for (i, u) in self.ups.iter().enumerate() {
            push(format!("{prefix}.up{i}"), u.parameters());
        }
        push(format!("{prefix}.head"), self.head.parameters());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::ops::checksum_vars;
    use crate::rng::RngHub;
    use candle_core::Device;

    fn toy_spec() -> GeneratorSpec {
        GeneratorSpec { num_residual_blocks: 2, base_channels: 8, downsample_stages: 2 }
    }

    fn build(seed: u64) -> Generator {
        let hub = RngHub::new(seed);
        Generator::new(&toy_spec(), &mut hub.stream("init/g"), DType::F32, &Device::Cpu).unwrap()
    }

    fn random_image(h: usize, w: usize) -> ImageTensor {
        let t = candle_core::Tensor::randn(0f32, 0.4f32, (1, 3, h, w), &Device::Cpu)
            .unwrap()
            .clamp(-1.0, 1.0)
            .unwrap();
        ImageTensor::new(t).unwrap()
    }

    #[test]
    fn output_shape_matches_input() {
        let g = build(0);
        for size in [32usize, 64] {
            let out = g.forward(&random_image(size, size)).unwrap();
            assert_eq!((out.height(), out.width()), (size, size));
        }
    }

    #[test]
    fn output_stays_in_tanh_range() {
        let g = build(1);
        let out = g.forward(&random_image(32, 32)).unwrap();
        let v: Vec<f32> = out.data().flatten_all().unwrap().to_vec1().unwrap();
        assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = build(7);
        let b = build(7);
        let pa = a.named_parameters("g");
        let pb = b.named_parameters("g");
        let ha = checksum_vars(pa.iter().map(|(n, v)| (n.as_str(), v))).unwrap();
        let hb = checksum_vars(pb.iter().map(|(n, v)| (n.as_str(), v))).unwrap();
        assert_eq!(ha, hb);
        let c = build(8);
        let pc = c.named_parameters("g");
        let hc = checksum_vars(pc.iter().map(|(n, v)| (n.as_str(), v))).unwrap();
        assert_ne!(ha, hc);
    }

    #[test]
    fn indivisible_input_is_a_shape_error() {
        let g = build(2);
        let err = g.forward(&random_image(30, 32)).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn taps_have_documented_channels() {
        let g = build(3);
        let (_, taps) = g.forward_with_taps(&random_image(32, 32)).unwrap();
        let dims = tap_channels(&toy_spec());
        assert_eq!(taps.tensors.len(), dims.len());
        for (t, c) in taps.tensors.iter().zip(&dims) {
            assert_eq!(t.dims()[1], *c);
        }
        // spatial sizes: 32, 32, 16, 8, 8
        let sizes: Vec<usize> = taps.tensors.iter().map(|t| t.dims()[2]).collect();
        assert_eq!(sizes, vec![32, 32, 16, 8, 8]);
    }
}
