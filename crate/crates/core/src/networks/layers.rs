//! Parameterized layers. All weights are drawn from a seeded zero-mean
//! Gaussian with sigma 0.02 and biases start at zero; every layer can run a
//! forward pass with its parameters detached so a loss can flow gradients
//! through a network's input without training the network itself.

use candle_core::{DType, Device, Tensor, Var};
use rand::Rng;

use crate::error::Result;

pub const INIT_SIGMA: f64 = 0.02;

/// Box-Muller samples; avoids an extra dependency and stays identical
/// across platforms for a given generator.
pub fn gaussian_vec(rng: &mut impl Rng, n: usize, sigma: f64) -> Vec<f32> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push((r * theta.cos() * sigma) as f32);
        if out.len() < n {
            out.push((r * theta.sin() * sigma) as f32);
        }
    }
    out
}

pub fn gaussian_tensor(
    rng: &mut impl Rng,
    shape: &[usize],
    sigma: f64,
    dtype: DType,
    device: &Device,
) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let data = gaussian_vec(rng, n, sigma);
    Ok(Tensor::from_vec(data, shape, device)?.to_dtype(dtype)?)
}

fn param(t: Tensor) -> Result<Var> {
    Ok(Var::from_tensor(&t)?)
}

fn maybe_detach(v: &Var, detach: bool) -> Tensor {
    if detach {
        v.as_tensor().detach()
    } else {
        v.as_tensor().clone()
    }
}

pub struct Conv2d {
    pub w: Var,
    pub b: Var,
    stride: usize,
    zero_pad: usize,
}

impl Conv2d {
    pub fn new(
        rng: &mut impl Rng,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        zero_pad: usize,
        dtype: DType,
        device: &Device,
    ) -> Result<Self> {
        let w = param(gaussian_tensor(rng, &[out_c, in_c, kernel, kernel], INIT_SIGMA, dtype, device)?)?;
        let b = param(Tensor::zeros((out_c,), dtype, device)?)?;
        Ok(Self { w, b, stride, zero_pad })
    }

    pub fn forward(&self, x: &Tensor, detach_params: bool) -> Result<Tensor> {
        let w = maybe_detach(&self.w, detach_params);
        let b = maybe_detach(&self.b, detach_params);
        let out_c = w.dims()[0];
        let y = x.conv2d(&w, self.zero_pad, self.stride, 1, 1)?;
        Ok(y.broadcast_add(&b.reshape((1, out_c, 1, 1))?)?)
    }

    pub fn parameters(&self) -> Vec<&Var> {
        vec![&self.w, &self.b]
    }
}

pub struct ConvTranspose2d {
    pub w: Var,
    pub b: Var,
    stride: usize,
    pad: usize,
    out_pad: usize,
}

impl ConvTranspose2d {
    pub fn new(
        rng: &mut impl Rng,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        out_pad: usize,
        dtype: DType,
        device: &Device,
    ) -> Result<Self> {
        let w = param(gaussian_tensor(rng, &[in_c, out_c, kernel, kernel], INIT_SIGMA, dtype, device)?)?;
        let b = param(Tensor::zeros((out_c,), dtype, device)?)?;
        Ok(Self { w, b, stride, pad, out_pad })
    }

    pub fn forward(&self, x: &Tensor, detach_params: bool) -> Result<Tensor> {
        let w = maybe_detach(&self.w, detach_params);
        let b = maybe_detach(&self.b, detach_params);
        let out_c = w.dims()[1];
        let y = x.conv_transpose2d(&w, self.pad, self.out_pad, self.stride, 1)?;
        Ok(y.broadcast_add(&b.reshape((1, out_c, 1, 1))?)?)
    }

    pub fn parameters(&self) -> Vec<&Var> {
        vec![&self.w, &self.b]
    }
}

pub struct Linear {
    pub w: Var,
    pub b: Var,
}

impl Linear {
    pub fn new(rng: &mut impl Rng, in_d: usize, out_d: usize, dtype: DType, device: &Device) -> Result<Self> {
        let w = param(gaussian_tensor(rng, &[out_d, in_d], INIT_SIGMA, dtype, device)?)?;
        let b = param(Tensor::zeros((out_d,), dtype, device)?)?;
        Ok(Self { w, b })
    }

    /// `x` is `[..., in_d]`.
    pub fn forward(&self, x: &Tensor, detach_params: bool) -> Result<Tensor> {
        let w = maybe_detach(&self.w, detach_params);
        let b = maybe_detach(&self.b, detach_params);
        Ok(x.broadcast_matmul(&w.t()?)?.broadcast_add(&b)?)
    }

    pub fn parameters(&self) -> Vec<&Var> {
        vec![&self.w, &self.b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_moments_roughly_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = gaussian_vec(&mut rng, 20_000, 0.02);
        let mean: f32 = v.iter().sum::<f32>() / v.len() as f32;
        let var: f32 = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f32>() / v.len() as f32;
        assert!(mean.abs() < 1e-3);
        assert!((var.sqrt() - 0.02).abs() < 2e-3);
    }

    #[test]
    fn detached_forward_matches_live_forward() {
        let dev = Device::Cpu;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let conv = Conv2d::new(&mut rng, 3, 4, 3, 1, 1, DType::F32, &dev).unwrap();
        let x = Tensor::randn(0f32, 1f32, (1, 3, 8, 8), &dev).unwrap();
        let a: Vec<f32> = conv.forward(&x, false).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        let b: Vec<f32> = conv.forward(&x, true).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conv_transpose_doubles_spatial_size() {
        let dev = Device::Cpu;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let up = ConvTranspose2d::new(&mut rng, 4, 2, 3, 2, 1, 1, DType::F32, &dev).unwrap();
        let x = Tensor::randn(0f32, 1f32, (1, 4, 8, 8), &dev).unwrap();
        let y = up.forward(&x, false).unwrap();
        assert_eq!(y.dims(), &[1, 2, 16, 16]);
    }
}
