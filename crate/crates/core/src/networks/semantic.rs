//! Frozen semantic embedding backends.
//!
//! Two backends sit behind one interface: a CLIP-style ViT image tower
//! loaded from a safetensors file, and a frozen randomly-initialized small
//! CNN stand-in that needs no downloaded weights. Both hold their weights
//! as plain tensors (never `Var`s), so no optimizer can ever touch them,
//! while gradients still flow through the resize/remap into the image.

use std::collections::HashMap;
use std::path::PathBuf;

use candle_core::{DType, Device, Tensor, D};
use rand::Rng;

use crate::config::{SemanticConfig, SemanticTap};
use crate::datasets::ImageTensor;
use crate::error::{Error, Result};

use super::layers::gaussian_tensor;
use super::ops::{checksum_tensors, resize_bilinear};

/// Environment variable naming the directory that caches pretrained weights.
pub const CACHE_ENV: &str = "CCL_DERAIN_CACHE";
const DEFAULT_WEIGHTS_NAME: &str = "clip-vit-image.safetensors";

pub enum SemanticEncoder {
    Standin(StandinCnn),
    ClipVit(ClipVit),
}

impl SemanticEncoder {
    pub fn build(cfg: &SemanticConfig, standin_seed_stream: &mut impl Rng, dtype: DType, device: &Device) -> Result<Self> {
        match cfg.backend {
            crate::config::SemanticBackendKind::Standin => Ok(Self::Standin(StandinCnn::new(
                cfg.input_size,
                cfg.embedding_dim,
                cfg.tap,
                standin_seed_stream,
                dtype,
                device,
            )?)),
            crate::config::SemanticBackendKind::ClipVit => {
                let path = resolve_weights_path(cfg)?;
                Ok(Self::ClipVit(ClipVit::load(&path, cfg.tap, dtype, device)?))
            }
        }
    }

    /// Pooled embedding `[b, dim]`. Gradients reach the input image but
    /// never the encoder weights.
    pub fn embed(&self, img: &ImageTensor) -> Result<Tensor> {
        match self {
            Self::Standin(s) => s.embed(img.data()),
            Self::ClipVit(c) => c.embed(img.data()),
        }
    }

    /// Output width under the configured tap.
    pub fn embedding_dim(&self) -> usize {
        match self {
            Self::Standin(s) => s.embedding_dim(),
            Self::ClipVit(c) => c.embedding_dim(),
        }
    }

    pub fn input_size(&self) -> usize {
        match self {
            Self::Standin(s) => s.input_size,
            Self::ClipVit(c) => c.input_size,
        }
    }

    /// Bitwise checksum over every weight; the frozen invariant asserts
    /// this never changes across training steps.
    pub fn checksum(&self) -> Result<String> {
        match self {
            Self::Standin(s) => s.checksum(),
            Self::ClipVit(c) => c.checksum(),
        }
    }
}

fn resolve_weights_path(cfg: &SemanticConfig) -> Result<PathBuf> {
    let path = match &cfg.weights_file {
        Some(p) => PathBuf::from(p),
        None => match std::env::var_os(CACHE_ENV) {
            Some(dir) => PathBuf::from(dir).join(DEFAULT_WEIGHTS_NAME),
            None => {
                return Err(Error::BackendUnavailable(format!(
                    "no `semantic.weights_file` configured and ${CACHE_ENV} is unset"
                )))
            }
        },
    };
    if !path.is_file() {
        return Err(Error::BackendUnavailable(format!(
            "weight file {} not found",
            path.display()
        )));
    }
    Ok(path)
}

/// Frozen random 4-layer CNN. Deterministic for a given seed stream, so the
/// full contrastive loss path is testable without pretrained weights.
pub struct StandinCnn {
    pub input_size: usize,
    tap: SemanticTap,
    // (weight, bias) per stage; stage channel plan scales with the
    // requested embedding width.
    stages: Vec<(Tensor, Tensor)>,
}

impl StandinCnn {
    pub fn new(
        input_size: usize,
        embedding_dim: usize,
        tap: SemanticTap,
        rng: &mut impl Rng,
        dtype: DType,
        device: &Device,
    ) -> Result<Self> {
        if input_size < 16 {
            return Err(Error::Config("semantic.input_size must be at least 16".into()));
        }
        if embedding_dim < 8 {
            return Err(Error::Config("semantic.embedding_dim must be at least 8".into()));
        }
        let plan = [
            (embedding_dim / 8).max(4),
            (embedding_dim / 4).max(4),
            (embedding_dim / 2).max(4),
            embedding_dim,
        ];
        let mut stages = Vec::new();
        let mut in_c = 3;
        for out_c in plan {
            let w = gaussian_tensor(rng, &[out_c, in_c, 3, 3], 0.2, dtype, device)?;
            let b = Tensor::zeros((out_c,), dtype, device)?;
            stages.push((w, b));
            in_c = out_c;
        }
        Ok(Self { input_size, tap, stages })
    }

    fn embed(&self, img: &Tensor) -> Result<Tensor> {
        let mut cur = resize_bilinear(img, self.input_size, self.input_size)?;
        let mut penultimate = None;
        let last = self.stages.len() - 1;
        for (i, (w, b)) in self.stages.iter().enumerate() {
            let out_c = w.dims()[0];
            cur = cur.conv2d(w, 1, 2, 1, 1)?;
            cur = cur.broadcast_add(&b.reshape((1, out_c, 1, 1))?)?.relu()?;
            if i + 1 == last {
                penultimate = Some(cur.clone());
            }
        }
        let target = match self.tap {
            SemanticTap::Pooled => cur,
            SemanticTap::Penultimate => penultimate.expect("at least two stages"),
        };
        Ok(target.flatten_from(2)?.mean(2)?)
    }

    fn embedding_dim(&self) -> usize {
        let idx = match self.tap {
            SemanticTap::Pooled => self.stages.len() - 1,
            SemanticTap::Penultimate => self.stages.len() - 2,
        };
        self.stages[idx].0.dims()[0]
    }

    fn checksum(&self) -> Result<String> {
        let named: Vec<(String, &Tensor)> = self
            .stages
            .iter()
            .enumerate()
            .flat_map(|(i, (w, b))| [(format!("s{i}.w"), w), (format!("s{i}.b"), b)])
            .collect();
        checksum_tensors(named.iter().map(|(n, t)| (n.as_str(), *t)))
    }
}

/// CLIP-style pre-LN ViT image tower. Architecture hyperparameters are
/// derived from the weight file itself: width and patch size from the patch
/// embedding, depth from the block count, grid size from the positional
/// embedding, heads as width / 64 (minimum 1), output width from `proj`.
///
/// Expected tensor names (the image half of the original CLIP state dict):
///   conv1.weight, class_embedding, positional_embedding,
///   ln_pre.{weight,bias}, transformer.resblocks.N.{ln_1,ln_2}.{weight,bias},
///   transformer.resblocks.N.attn.{in_proj_weight,in_proj_bias},
///   transformer.resblocks.N.attn.out_proj.{weight,bias},
///   transformer.resblocks.N.mlp.{c_fc,c_proj}.{weight,bias},
///   ln_post.{weight,bias}, proj
pub struct ClipVit {
    pub input_size: usize,
    patch: usize,
    width: usize,
    heads: usize,
    depth: usize,
    tap: SemanticTap,
    tensors: HashMap<String, Tensor>,
}

/// CLIP preprocessing statistics, applied after mapping [-1,1] to [0,1].
const CLIP_MEAN: [f64; 3] = [0.48145466, 0.4578275, 0.40821073];
const CLIP_STD: [f64; 3] = [0.26862954, 0.26130258, 0.27577711];

impl ClipVit {
    pub fn load(path: &std::path::Path, tap: SemanticTap, dtype: DType, device: &Device) -> Result<Self> {
        let raw = candle_core::safetensors::load(path, device)
            .map_err(|e| Error::BackendUnavailable(format!("could not read {}: {e}", path.display())))?;
        let mut tensors = HashMap::new();
        for (name, t) in raw {
            let name = name.strip_prefix("visual.").unwrap_or(&name).to_string();
            tensors.insert(name, t.to_dtype(dtype)?);
        }
        let conv1 = tensors
            .get("conv1.weight")
            .ok_or_else(|| Error::BackendUnavailable(format!("{}: missing conv1.weight", path.display())))?;
        let width = conv1.dims()[0];
        let patch = conv1.dims()[2];
        let mut depth = 0;
        while tensors.contains_key(&format!("transformer.resblocks.{depth}.ln_1.weight")) {
            depth += 1;
        }
        if depth == 0 {
            return Err(Error::BackendUnavailable(format!(
                "{}: no transformer blocks found",
                path.display()
            )));
        }
        let pos = tensors
            .get("positional_embedding")
            .ok_or_else(|| Error::BackendUnavailable(format!("{}: missing positional_embedding", path.display())))?;
        let tokens = pos.dims()[0];
        let grid = ((tokens - 1) as f64).sqrt().round() as usize;
        if grid * grid + 1 != tokens {
            return Err(Error::BackendUnavailable(format!(
                "{}: positional embedding has {tokens} tokens, not a square grid + class token",
                path.display()
            )));
        }
        for required in ["class_embedding", "ln_pre.weight", "ln_post.weight", "proj"] {
            if !tensors.contains_key(required) {
                return Err(Error::BackendUnavailable(format!(
                    "{}: missing {required}",
                    path.display()
                )));
            }
        }
        Ok(Self {
            input_size: grid * patch,
            patch,
            width,
            heads: (width / 64).max(1),
            depth,
            tap,
            tensors,
        })
    }

    fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::BackendUnavailable(format!("weight {name} missing")))
    }

    fn embedding_dim(&self) -> usize {
        match self.tap {
            SemanticTap::Pooled => self.get("proj").map(|p| p.dims()[1]).unwrap_or(0),
            SemanticTap::Penultimate => self.width,
        }
    }

    fn embed(&self, img: &Tensor) -> Result<Tensor> {
        let x = resize_bilinear(img, self.input_size, self.input_size)?;
        // [-1,1] -> [0,1] -> CLIP channel statistics.
        let x = ((x + 1.0)? * 0.5)?;
        let mean = Tensor::from_vec(CLIP_MEAN.to_vec(), (1, 3, 1, 1), x.device())?.to_dtype(x.dtype())?;
        let std = Tensor::from_vec(CLIP_STD.to_vec(), (1, 3, 1, 1), x.device())?.to_dtype(x.dtype())?;
        let x = x.broadcast_sub(&mean)?.broadcast_div(&std)?;

        let b = x.dims()[0];
        let patches = x.conv2d(self.get("conv1.weight")?, 0, self.patch, 1, 1)?;
        let grid = patches.dims()[2];
        let seq = patches.reshape((b, self.width, grid * grid))?.transpose(1, 2)?;
        let class = self
            .get("class_embedding")?
            .reshape((1, 1, self.width))?
            .broadcast_as((b, 1, self.width))?;
        let mut h = Tensor::cat(&[&class, &seq], 1)?;
        h = h.broadcast_add(&self.get("positional_embedding")?.unsqueeze(0)?)?;
        h = self.layer_norm(&h, "ln_pre")?;
        for i in 0..self.depth {
            h = self.block(&h, i)?;
        }
        let class_token = h.narrow(1, 0, 1)?.squeeze(1)?;
        let pooled = self.layer_norm_2d(&class_token, "ln_post")?;
        match self.tap {
            SemanticTap::Penultimate => Ok(pooled),
            SemanticTap::Pooled => Ok(pooled.matmul(self.get("proj")?)?),
        }
    }

    fn block(&self, x: &Tensor, i: usize) -> Result<Tensor> {
        let p = format!("transformer.resblocks.{i}");
        let attned = self.attention(&self.layer_norm(x, &format!("{p}.ln_1"))?, &p)?;
        let x = (x + attned)?;
        let fed = self.mlp(&self.layer_norm(&x, &format!("{p}.ln_2"))?, &p)?;
        Ok((x + fed)?)
    }

    fn attention(&self, x: &Tensor, prefix: &str) -> Result<Tensor> {
        let (b, t, w) = x.dims3()?;
        let heads = self.heads;
        let dh = w / heads;
        let qkv = x
            .broadcast_matmul(&self.get(&format!("{prefix}.attn.in_proj_weight"))?.t()?)?
            .broadcast_add(self.get(&format!("{prefix}.attn.in_proj_bias"))?)?;
        let split = |off: usize| -> Result<Tensor> {
            Ok(qkv
                .narrow(2, off * w, w)?
                .reshape((b, t, heads, dh))?
                .transpose(1, 2)?
                .contiguous()?)
        };
        let q = split(0)?;
        let k = split(1)?;
        let v = split(2)?;
        let scale = 1.0 / (dh as f64).sqrt();
        let scores = (q.matmul(&k.transpose(2, 3)?.contiguous()?)? * scale)?;
        let attn = softmax_last(&scores)?;
        let out = attn.matmul(&v)?.transpose(1, 2)?.reshape((b, t, w))?;
        Ok(out
            .broadcast_matmul(&self.get(&format!("{prefix}.attn.out_proj.weight"))?.t()?)?
            .broadcast_add(self.get(&format!("{prefix}.attn.out_proj.bias"))?)?)
    }

    fn mlp(&self, x: &Tensor, prefix: &str) -> Result<Tensor> {
        let h = x
            .broadcast_matmul(&self.get(&format!("{prefix}.mlp.c_fc.weight"))?.t()?)?
            .broadcast_add(self.get(&format!("{prefix}.mlp.c_fc.bias"))?)?;
        let h = quick_gelu(&h)?;
        Ok(h
            .broadcast_matmul(&self.get(&format!("{prefix}.mlp.c_proj.weight"))?.t()?)?
            .broadcast_add(self.get(&format!("{prefix}.mlp.c_proj.bias"))?)?)
    }

    fn layer_norm(&self, x: &Tensor, name: &str) -> Result<Tensor> {
        let mu = x.mean_keepdim(D::Minus1)?;
        let xc = x.broadcast_sub(&mu)?;
        let var = xc.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = xc.broadcast_div(&(var + 1e-5)?.sqrt()?)?;
        Ok(normed
            .broadcast_mul(self.get(&format!("{name}.weight"))?)?
            .broadcast_add(self.get(&format!("{name}.bias"))?)?)
    }

    fn layer_norm_2d(&self, x: &Tensor, name: &str) -> Result<Tensor> {
        self.layer_norm(x, name)
    }

    fn checksum(&self) -> Result<String> {
        let mut names: Vec<&String> = self.tensors.keys().collect();
        names.sort();
        let entries: Vec<(&str, &Tensor)> = names
            .iter()
            .map(|n| (n.as_str(), &self.tensors[*n]))
            .collect();
        checksum_tensors(entries.into_iter())
    }
}

/// The original CLIP activation: `x * sigmoid(1.702 x)`.
fn quick_gelu(x: &Tensor) -> Result<Tensor> {
    let s = ((x * 1.702)?.neg()?.exp()? + 1.0)?.recip()?;
    Ok((x * s)?)
}

fn softmax_last(x: &Tensor) -> Result<Tensor> {
    let m = x.max_keepdim(D::Minus1)?.detach();
    let e = x.broadcast_sub(&m)?.exp()?;
    let s = e.sum_keepdim(D::Minus1)?;
    Ok(e.broadcast_div(&s)?)
}
