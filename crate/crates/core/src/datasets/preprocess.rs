//! Decoding-side preprocessing: resize / crop / flip for training,
//! native-size padding for evaluation, and the `[0,255] <-> [-1,1]` maps.

use candle_core::{DType, Device, Tensor};
use image::{imageops, DynamicImage, RgbImage};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::image_tensor::ImageTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy)]
pub struct PreprocessOptions {
    /// Train: intermediate resize target before the random crop.
    pub resize_to: usize,
    /// Train: output side length.
    pub crop_size: usize,
    /// Eval: pad height/width up to a multiple of this (generator stride).
    pub pad_multiple: usize,
}

/// Original size recorded when eval padding was applied, so outputs can be
/// cropped back before metrics or file output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalGeometry {
    pub orig_h: usize,
    pub orig_w: usize,
    pub padded_h: usize,
    pub padded_w: usize,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub tensor: ImageTensor,
    /// Present in eval mode only.
    pub geometry: Option<EvalGeometry>,
}

/// Map an 8-bit RGB image into a `[1, 3, h, w]` tensor in `[-1, 1]`.
pub fn normalize_rgb8(img: &RgbImage, device: &Device) -> Result<Tensor> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut chw = vec![0f32; 3 * h * w];
    for (y, x, p) in iter_pixels(img) {
        for c in 0..3 {
            chw[c * h * w + y * w + x] = p[c] as f32 / 127.5 - 1.0;
        }
    }
    Ok(Tensor::from_vec(chw, (1, 3, h, w), device)?)
}

fn iter_pixels(img: &RgbImage) -> impl Iterator<Item = (usize, usize, [u8; 3])> + '_ {
    img.enumerate_pixels().map(|(x, y, p)| (y as usize, x as usize, p.0))
}

/// Map a `[3, h, w]` or `[1, 3, h, w]` tensor in `[-1, 1]` back to 8-bit RGB,
/// rounding to the nearest integer.
pub fn denormalize_to_rgb8(tensor: &Tensor) -> Result<RgbImage> {
    let t = match tensor.dims().len() {
        4 => {
            if tensor.dims()[0] != 1 {
                return Err(Error::Shape("denormalize expects a single image".into()));
            }
            tensor.squeeze(0)?
        }
        3 => tensor.clone(),
        d => return Err(Error::Shape(format!("expected 3- or 4-D tensor, got {d}-D"))),
    };
    let (c, h, w) = t.dims3()?;
    if c != 3 {
        return Err(Error::Shape(format!("expected 3 channels, got {c}")));
    }
    let data: Vec<f32> = t.detach().to_dtype(DType::F32)?.flatten_all()?.to_vec1()?;
    let mut img = RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let px = [0, 1, 2].map(|ch| {
                let v = (data[ch * h * w + y * w + x] + 1.0) * 127.5;
                v.round().clamp(0.0, 255.0) as u8
            });
            img.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    Ok(img)
}

/// Preprocess one decoded image.
///
/// Train mode: bilinear resize to `resize_to`, random `crop_size` crop,
/// horizontal flip with probability 0.5, then normalization. Deterministic
/// given `seed`. Eval mode: native size, replicate-padded on the right and
/// bottom to a multiple of `pad_multiple`, with the original size recorded.
pub fn preprocess(img: &DynamicImage, mode: Mode, seed: u64, opts: &PreprocessOptions, device: &Device) -> Result<Preprocessed> {
    let rgb = img.to_rgb8();
    if rgb.width() == 0 || rgb.height() == 0 {
        return Err(Error::InvalidInput("image has a zero dimension".into()));
    }
    match mode {
        Mode::Train => {
            if opts.resize_to < opts.crop_size {
                return Err(Error::Config(format!(
                    "resize_to ({}) smaller than crop_size ({})",
                    opts.resize_to, opts.crop_size
                )));
            }
            let resized = imageops::resize(
                &rgb,
                opts.resize_to as u32,
                opts.resize_to as u32,
                imageops::FilterType::Triangle,
            );
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let span = (opts.resize_to - opts.crop_size) as u32;
            let x0 = if span == 0 { 0 } else { rng.gen_range(0..=span) };
            let y0 = if span == 0 { 0 } else { rng.gen_range(0..=span) };
            let mut cropped = imageops::crop_imm(&resized, x0, y0, opts.crop_size as u32, opts.crop_size as u32).to_image();
            if rng.gen_bool(0.5) {
                cropped = imageops::flip_horizontal(&cropped);
            }
            let tensor = ImageTensor::new(normalize_rgb8(&cropped, device)?)?;
            Ok(Preprocessed { tensor, geometry: None })
        }
        Mode::Eval => {
            let (_h, _w) = (rgb.height() as usize, rgb.width() as usize);
            let normalized = normalize_rgb8(&rgb, device)?;
            let (padded, geometry) = pad_to_multiple(&normalized, opts.pad_multiple)?;
            let tensor = ImageTensor::new(padded)?;
            Ok(Preprocessed { tensor, geometry: Some(geometry) })
        }
    }
}

/// Replicate-pad the bottom/right of a `[b, c, h, w]` tensor so both spatial
/// dims are multiples of `multiple`.
pub fn pad_to_multiple(t: &Tensor, multiple: usize) -> Result<(Tensor, EvalGeometry)> {
    let (_, _, h, w) = t.dims4()?;
    let target_h = h.div_ceil(multiple) * multiple;
    let target_w = w.div_ceil(multiple) * multiple;
    let geometry = EvalGeometry { orig_h: h, orig_w: w, padded_h: target_h, padded_w: target_w };
    let mut out = t.clone();
    if target_h != h {
        out = replicate_pad_axis(&out, 2, target_h)?;
    }
    if target_w != w {
        out = replicate_pad_axis(&out, 3, target_w)?;
    }
    Ok((out, geometry))
}

fn replicate_pad_axis(t: &Tensor, axis: usize, target: usize) -> Result<Tensor> {
    let n = t.dims()[axis];
    let idx: Vec<u32> = (0..target).map(|i| i.min(n - 1) as u32).collect();
    let idx = Tensor::from_vec(idx, (target,), t.device())?;
    Ok(t.index_select(&idx, axis)?)
}

/// Crop a padded eval output back to the recorded original size.
pub fn crop_to_geometry(t: &Tensor, geometry: &EvalGeometry) -> Result<Tensor> {
    Ok(t.narrow(2, 0, geometry.orig_h)?.narrow(3, 0, geometry.orig_w)?)
}
