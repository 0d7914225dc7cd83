//! PatchGAN discriminator: a stack of stride-2 conv stages followed by two
//! stride-1 stages, emitting a 2-D grid of patch logits. The stride-2
//! stages double as the encoder whose activations feed the discriminant
//! embedding space.

use candle_core::{DType, Device, Tensor};
use rand::Rng;

use crate::config::DiscriminatorSpec;
use crate::datasets::ImageTensor;
use crate::error::Result;

use super::layers::Conv2d;
use super::ops::{instance_norm, leaky_relu};

const IN_EPS: f64 = 1e-5;
const LRELU_SLOPE: f64 = 0.2;
/// Channel growth is capped at 8x the base width, the PatchGAN convention.
const MAX_MULT: usize = 8;

/// Channel widths of the tapped activations (one per stride-2 stage).
pub fn tap_channels(spec: &DiscriminatorSpec) -> Vec<usize> {
    (0..spec.num_stride2_layers)
        .map(|i| spec.base_channels * (1usize << i).min(MAX_MULT))
        .collect()
}

pub struct Discriminator {
    spec: DiscriminatorSpec,
    strided: Vec<Conv2d>,
    penultimate: Conv2d,
    head: Conv2d,
}

pub struct DiscriminatorOutput {
    /// `[b, 1, ph, pw]` patch logit map.
    pub logits: Tensor,
    /// Post-activation output of each stride-2 stage.
    pub taps: Vec<Tensor>,
}

impl Discriminator {
    pub fn new(spec: &DiscriminatorSpec, rng: &mut impl Rng, dtype: DType, device: &Device) -> Result<Self> {
        let mut strided = Vec::new();
        let mut in_c = 3;
        for i in 0..spec.num_stride2_layers {
            let out_c = spec.base_channels * (1usize << i).min(MAX_MULT);
            strided.push(Conv2d::new(rng, in_c, out_c, 4, 2, 1, dtype, device)?);
            in_c = out_c;
        }
        let pen_c = spec.base_channels * (1usize << spec.num_stride2_layers).min(MAX_MULT);
        let penultimate = Conv2d::new(rng, in_c, pen_c, 4, 1, 1, dtype, device)?;
        let head = Conv2d::new(rng, pen_c, 1, 4, 1, 1, dtype, device)?;
        Ok(Self { spec: spec.clone(), strided, penultimate, head })
    }

    pub fn spec(&self) -> &DiscriminatorSpec {
        &self.spec
    }

    pub fn num_taps(&self) -> usize {
        self.strided.len()
    }

    /// Full forward pass. With `detach_params` the logits still carry
    /// gradient with respect to the input image but not to the
    /// discriminator's own weights; the generator step uses this so its
    /// adversarial term cannot push the discriminator toward misclassifying.
    pub fn forward(&self, img: &ImageTensor, detach_params: bool) -> Result<DiscriminatorOutput> {
        let mut cur = img.data().clone();
        let mut taps = Vec::with_capacity(self.strided.len());
        for (i, conv) in self.strided.iter().enumerate() {
            cur = conv.forward(&cur, detach_params)?;
            if i > 0 {
                cur = instance_norm(&cur, IN_EPS)?;
            }
            cur = leaky_relu(&cur, LRELU_SLOPE)?;
            taps.push(cur.clone());
        }
        cur = self.penultimate.forward(&cur, detach_params)?;
        cur = leaky_relu(&instance_norm(&cur, IN_EPS)?, LRELU_SLOPE)?;
        let logits = self.head.forward(&cur, detach_params)?;
        Ok(DiscriminatorOutput { logits, taps })
    }

    /// Encoder activations only (live parameters), for the discriminant
    /// embedding space.
    pub fn encoder_taps(&self, img: &ImageTensor) -> Result<Vec<Tensor>> {
        let mut cur = img.data().clone();
        let mut taps = Vec::with_capacity(self.strided.len());
        for (i, conv) in self.strided.iter().enumerate() {
            cur = conv.forward(&cur, false)?;
            if i > 0 {
                cur = instance_norm(&cur, IN_EPS)?;
            }
            cur = leaky_relu(&cur, LRELU_SLOPE)?;
            taps.push(cur.clone());
        }
        Ok(taps)
    }

    pub fn named_parameters(&self, prefix: &str) -> Vec<(String, candle_core::Var)> {
        let mut out = Vec::new();
        let mut push = |name: String, vars: Vec<&candle_core::Var>| {
            for (i, v) in vars.into_iter().enumerate() {
                let suffix = if i == 0 { "w" } else { "b" };
                out.push((format!("{name}.{suffix}"), v.clone()));
            }
        };
        for (i, conv) in self.strided.iter().enumerate() {
            push(format!("{prefix}.s{i}"), conv.parameters());
        }
        push(format!("{prefix}.pen"), self.penultimate.parameters());
        push(format!("{prefix}.head"), self.head.parameters());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHub;

    fn build(spec: &DiscriminatorSpec) -> Discriminator {
        let hub = RngHub::new(5);
        Discriminator::new(spec, &mut hub.stream("init/d"), DType::F32, &Device::Cpu).unwrap()
    }

    fn random_image(h: usize, w: usize) -> ImageTensor {
        let t = candle_core::Tensor::randn(0f32, 0.4f32, (1, 3, h, w), &Device::Cpu)
            .unwrap()
            .clamp(-1.0, 1.0)
            .unwrap();
        ImageTensor::new(t).unwrap()
    }

    #[test]
    fn default_patch_map_sizes() {
        // 70x70-receptive-field spec: 256 -> 30x30 and 128 -> 14x14.
        let d = build(&DiscriminatorSpec::default());
        let out = d.forward(&random_image(256, 256), false).unwrap();
        assert_eq!(out.logits.dims(), &[1, 1, 30, 30]);
        let out = d.forward(&random_image(128, 128), false).unwrap();
        assert_eq!(out.logits.dims(), &[1, 1, 14, 14]);
    }

    #[test]
    fn taps_match_declared_channels() {
        let spec = DiscriminatorSpec { num_stride2_layers: 3, base_channels: 16 };
        let d = build(&spec);
        let out = d.forward(&random_image(64, 64), false).unwrap();
        assert_eq!(out.taps.len(), 3);
        let dims: Vec<usize> = out.taps.iter().map(|t| t.dims()[1]).collect();
        assert_eq!(dims, tap_channels(&spec));
    }

    #[test]
    fn detached_forward_same_logits() {
        let d = build(&DiscriminatorSpec { num_stride2_layers: 3, base_channels: 8 });
        let img = random_image(64, 64);
        let a: Vec<f32> = d.forward(&img, false).unwrap().logits.flatten_all().unwrap().to_vec1().unwrap();
        let b: Vec<f32> = d.forward(&img, true).unwrap().logits.flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(a, b);
    }
}
