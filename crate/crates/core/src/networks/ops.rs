//! Small tensor helpers shared by the network definitions: padding,
//! normalization, differentiable resize, pooling, and parameter checksums.

use candle_core::{DType, Tensor, Var};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Mirror-pad the two spatial axes of a `[b, c, h, w]` tensor without
/// repeating the edge sample (PyTorch `ReflectionPad2d` convention).
pub fn reflection_pad(t: &Tensor, pad: usize) -> Result<Tensor> {
    if pad == 0 {
        return Ok(t.clone());
    }
    let (_, _, h, w) = t.dims4()?;
    if pad >= h || pad >= w {
        return Err(Error::Shape(format!(
            "reflection pad {pad} too large for {h}x{w} input"
        )));
    }
    let out = index_axis(t, 2, &reflect_indices(h, pad))?;
    index_axis(&out, 3, &reflect_indices(w, pad))
}

fn reflect_indices(n: usize, pad: usize) -> Vec<u32> {
    let mut idx = Vec::with_capacity(n + 2 * pad);
    for i in 0..(n + 2 * pad) {
        let mut j = i as i64 - pad as i64;
        let n = n as i64;
        while j < 0 || j >= n {
            if j < 0 {
                j = -j;
            }
            if j >= n {
                j = 2 * n - 2 - j;
            }
        }
        idx.push(j as u32);
    }
    idx
}

fn index_axis(t: &Tensor, axis: usize, idx: &[u32]) -> Result<Tensor> {
    let idx = Tensor::from_vec(idx.to_vec(), (idx.len(),), t.device())?;
    Ok(t.index_select(&idx, axis)?)
}

/// Per-channel, per-sample normalization over the spatial axes (no affine
/// parameters), the CycleGAN convention.
pub fn instance_norm(t: &Tensor, eps: f64) -> Result<Tensor> {
    let mu = t.mean_keepdim(2)?.mean_keepdim(3)?;
    let centered = t.broadcast_sub(&mu)?;
    let var = centered.sqr()?.mean_keepdim(2)?.mean_keepdim(3)?;
    Ok(centered.broadcast_div(&(var + eps)?.sqrt()?)?)
}

pub fn leaky_relu(t: &Tensor, slope: f64) -> Result<Tensor> {
    Ok((t.relu()? - (t.neg()?.relu()? * slope)?)?)
}

/// Global spatial average: `[b, c, h, w] -> [b, c]`.
pub fn global_avg_pool(t: &Tensor) -> Result<Tensor> {
    Ok(t.flatten_from(2)?.mean(2)?)
}

/// Differentiable bilinear resize implemented as two interpolation matrix
/// products, so gradients flow through it into the image.
pub fn resize_bilinear(t: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let (b, c, h, w) = t.dims4()?;
    if (h, w) == (out_h, out_w) {
        return Ok(t.clone());
    }
    let dtype = t.dtype();
    let rows = interp_matrix(h, out_h, dtype, t)?; // [out_h, h]
    let cols = interp_matrix(w, out_w, dtype, t)?.t()?; // [w, out_w]
    let flat = t.reshape((b * c, h, w))?;
    let out = rows
        .unsqueeze(0)?
        .broadcast_matmul(&flat)?
        .broadcast_matmul(&cols.unsqueeze(0)?)?;
    Ok(out.reshape((b, c, out_h, out_w))?)
}

fn interp_matrix(in_n: usize, out_n: usize, dtype: DType, like: &Tensor) -> Result<Tensor> {
    let scale = in_n as f64 / out_n as f64;
    let mut weights = vec![0f32; out_n * in_n];
    for o in 0..out_n {
        let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, in_n as f64 - 1.0);
        let lo = src.floor() as usize;
        let hi = (lo + 1).min(in_n - 1);
        let frac = (src - lo as f64) as f32;
        weights[o * in_n + lo] += 1.0 - frac;
        weights[o * in_n + hi] += frac;
    }
    Ok(Tensor::from_vec(weights, (out_n, in_n), like.device())?.to_dtype(dtype)?)
}

/// Normalize each row of a `[..., d]` tensor to unit L2 length. The epsilon
/// enters as `sqrt(sum_sq + eps^2)` so tiny rows stay finite without
/// noticeably shrinking ordinary ones.
pub fn unit_normalize(t: &Tensor, eps: f64) -> Result<Tensor> {
    let norm = (t.sqr()?.sum_keepdim(candle_core::D::Minus1)? + eps * eps)?.sqrt()?;
    Ok(t.broadcast_div(&norm)?)
}

/// Mean L1 distance between two `[b, d]` embeddings: the L1 norm over the
/// feature axis, averaged over the batch.
pub fn l1_distance(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let diff = (a - b)?.abs()?;
    Ok(diff.sum(candle_core::D::Minus1)?.mean_all()?)
}

/// SHA-256 over the little-endian bytes of the named tensors, in order.
/// Bitwise-stable across runs; used for the frozen-parameter invariants.
pub fn checksum_tensors<'a>(entries: impl Iterator<Item = (&'a str, &'a Tensor)>) -> Result<String> {
    let mut hasher = Sha256::new();
    for (name, t) in entries {
        hasher.update(name.as_bytes());
        match t.dtype() {
            DType::F64 => {
                for v in t.flatten_all()?.to_vec1::<f64>()? {
                    hasher.update(v.to_le_bytes());
                }
            }
            _ => {
                for v in t.detach().to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()? {
                    hasher.update(v.to_le_bytes());
                }
            }
        }
    }
    Ok(hex_string(&hasher.finalize()))
}

pub fn checksum_vars<'a>(entries: impl Iterator<Item = (&'a str, &'a Var)>) -> Result<String> {
    checksum_tensors(entries.map(|(n, v)| (n, v.as_tensor())))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Extract a scalar loss value as f64 regardless of the tensor dtype.
pub fn scalar_value(t: &Tensor) -> Result<f64> {
    Ok(t.detach().to_dtype(DType::F64)?.to_scalar::<f64>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::Device;

    #[test]
    fn reflection_indices_match_convention() {
        // n=4, pad=2: [2 1 | 0 1 2 3 | 2 1]
        assert_eq!(reflect_indices(4, 2), vec![2, 1, 0, 1, 2, 3, 2, 1]);
    }

    #[test]
    fn reflection_pad_shape_and_values() {
        let dev = Device::Cpu;
        let t = Tensor::from_vec((0..16).map(|v| v as f32).collect::<Vec<_>>(), (1, 1, 4, 4), &dev).unwrap();
        let p = reflection_pad(&t, 1).unwrap();
        assert_eq!(p.dims(), &[1, 1, 6, 6]);
        let v: Vec<f32> = p.flatten_all().unwrap().to_vec1().unwrap();
        // first padded row mirrors row 1 of the source, itself width-padded
        assert_eq!(&v[0..6], &[5.0, 4.0, 5.0, 6.0, 7.0, 6.0]);
    }

    #[test]
    fn instance_norm_zero_mean_unit_var() {
        let dev = Device::Cpu;
        let t = Tensor::from_vec(
            (0..32).map(|v| v as f32 * 0.3 - 2.0).collect::<Vec<_>>(),
            (1, 2, 4, 4),
            &dev,
        )
        .unwrap();
        let n = instance_norm(&t, 1e-9).unwrap();
        let per_channel = n.flatten_from(2).unwrap();
        let mu: Vec<f32> = per_channel.mean(2).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        for m in mu {
            assert!(m.abs() < 1e-5);
        }
        let var: Vec<f32> = per_channel.sqr().unwrap().mean(2).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        for v in var {
            assert!((v - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn leaky_relu_values() {
        let dev = Device::Cpu;
        let t = Tensor::from_vec(vec![-2.0f32, 0.0, 3.0], (3,), &dev).unwrap();
        let v: Vec<f32> = leaky_relu(&t, 0.2).unwrap().to_vec1().unwrap();
        assert_eq!(v, vec![-0.4, 0.0, 3.0]);
    }

    #[test]
    fn resize_identity_when_same_size() {
        let dev = Device::Cpu;
        let t = Tensor::randn(0f32, 1f32, (1, 3, 8, 8), &dev).unwrap();
        let r = resize_bilinear(&t, 8, 8).unwrap();
        let a: Vec<f32> = t.flatten_all().unwrap().to_vec1().unwrap();
        let b: Vec<f32> = r.flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn resize_preserves_constant_images() {
        let dev = Device::Cpu;
        let t = Tensor::full(0.37f32, (1, 3, 10, 14), &dev).unwrap();
        let r = resize_bilinear(&t, 7, 5).unwrap();
        let v: Vec<f32> = r.flatten_all().unwrap().to_vec1().unwrap();
        for x in v {
            assert!((x - 0.37).abs() < 1e-6);
        }
    }

    #[test]
    fn unit_normalize_rows() {
        let dev = Device::Cpu;
        let t = Tensor::from_vec(vec![3.0f32, 4.0, 0.0, 5.0], (2, 2), &dev).unwrap();
        let n = unit_normalize(&t, 0.0).unwrap();
        let v: Vec<f32> = n.flatten_all().unwrap().to_vec1().unwrap();
        assert!((v[0] - 0.6).abs() < 1e-6);
        assert!((v[1] - 0.8).abs() < 1e-6);
        assert!((v[3] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn l1_distance_means_over_batch() {
        let dev = Device::Cpu;
        let a = Tensor::from_vec(vec![1.0f32, 2.0, 3.0, 4.0], (2, 2), &dev).unwrap();
        let b = Tensor::zeros((2, 2), DType::F32, &dev).unwrap();
        let d = scalar_value(&l1_distance(&a, &b).unwrap()).unwrap();
        assert!((d - 5.0).abs() < 1e-6); // (1+2 + 3+4)/2
    }

    #[test]
    fn checksums_detect_changes() {
        let dev = Device::Cpu;
        let a = Tensor::from_vec(vec![1.0f32, 2.0], (2,), &dev).unwrap();
        let b = Tensor::from_vec(vec![1.0f32, 2.0], (2,), &dev).unwrap();
        let c = Tensor::from_vec(vec![1.0f32, 2.5], (2,), &dev).unwrap();
        let ha = checksum_tensors([("x", &a)].into_iter()).unwrap();
        let hb = checksum_tensors([("x", &b)].into_iter()).unwrap();
        let hc = checksum_tensors([("x", &c)].into_iter()).unwrap();
        assert_eq!(ha, hb);
        assert_ne!(ha, hc);
    }
}
