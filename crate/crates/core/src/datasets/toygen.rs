//! Generator for the committed desk-scale dataset: procedural "scenes"
//! (gradients plus simple shapes) with paired rain composited on top.
//!
//! Layout written under the output root:
//!   train/clean/NNNN.png   train/rainy/NNNN.png
//!   test/clean/NNNN.png    test/rainy/NNNN.png    test/manifest.txt
//!
//! The manifest pairs each rainy test image with its ground truth, relative
//! to the manifest's directory.

use std::path::{Path, PathBuf};

use candle_core::Device;
use image::{Rgb, RgbImage};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngHub;

use super::image_tensor::ImageTensor;
use super::preprocess::{denormalize_to_rgb8, normalize_rgb8};
use super::rain::{synth_rain, RainParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyDataSpec {
    pub train_images: usize,
    pub test_images: usize,
    pub size: usize,
    pub seed: u64,
    /// Rain recipe; the per-image seed is derived from `seed` and the image
    /// index, so the `seed` field inside is ignored here.
    pub rain: RainParams,
}

impl Default for ToyDataSpec {
    fn default() -> Self {
        Self {
            train_images: 200,
            test_images: 20,
            size: 64,
            seed: 2024,
            rain: RainParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ToyDataSummary {
    pub root: PathBuf,
    pub train_images: usize,
    pub test_images: usize,
    pub manifest: PathBuf,
}

pub fn generate_toy_dataset(spec: &ToyDataSpec, out_root: &Path) -> Result<ToyDataSummary> {
    let hub = RngHub::new(spec.seed);
    let device = Device::Cpu;
    for sub in ["train/clean", "train/rainy", "test/clean", "test/rainy"] {
        std::fs::create_dir_all(out_root.join(sub)).map_err(|e| Error::io(out_root.join(sub), e))?;
    }
    let mut manifest = String::new();
    let total = spec.train_images + spec.test_images;
    for i in 0..total {
        let clean = procedural_scene(spec.size, &mut hub.stream(&format!("toy/scene/{i}")));
        let clean_tensor = ImageTensor::new(normalize_rgb8(&clean, &device)?)?;
        let rain = RainParams { seed: hub.child_seed(&format!("toy/rain/{i}")), ..spec.rain.clone() };
        let rainy_tensor = synth_rain(&clean_tensor, &rain)?;
        let rainy = denormalize_to_rgb8(rainy_tensor.data())?;
        let (split, idx) = if i < spec.train_images { ("train", i) } else { ("test", i - spec.train_images) };
        let clean_path = out_root.join(format!("{split}/clean/{idx:04}.png"));
        let rainy_path = out_root.join(format!("{split}/rainy/{idx:04}.png"));
        clean.save(&clean_path).map_err(|e| Error::image(&clean_path, e))?;
        rainy.save(&rainy_path).map_err(|e| Error::image(&rainy_path, e))?;
        if split == "test" {
            manifest.push_str(&format!("rainy/{idx:04}.png clean/{idx:04}.png\n"));
        }
    }
    let manifest_path = out_root.join("test/manifest.txt");
    std::fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(ToyDataSummary {
        root: out_root.to_path_buf(),
        train_images: spec.train_images,
        test_images: spec.test_images,
        manifest: manifest_path,
    })
}

/// A small synthetic scene: two-color gradient background, a few filled
/// shapes, occasionally a horizon band. Enough structure for SSIM to be
/// meaningful while staying cheap to produce.
fn procedural_scene(size: usize, rng: &mut impl Rng) -> RgbImage {
    let mut img = RgbImage::new(size as u32, size as u32);
    let a = random_color(rng);
    let b = random_color(rng);
    let diag = rng.gen_bool(0.5);
    for y in 0..size {
        for x in 0..size {
            let t = if diag {
                (x + y) as f32 / (2 * size - 2) as f32
            } else {
                y as f32 / (size - 1) as f32
            };
            img.put_pixel(x as u32, y as u32, lerp_color(a, b, t));
        }
    }
    if rng.gen_bool(0.4) {
        let band_y = rng.gen_range(size / 4..3 * size / 4);
        let color = random_color(rng);
        for y in band_y..size {
            for x in 0..size {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
    let shapes = rng.gen_range(3..=6);
    for _ in 0..shapes {
        let color = random_color(rng);
        if rng.gen_bool(0.5) {
            let cx = rng.gen_range(0..size) as i64;
            let cy = rng.gen_range(0..size) as i64;
            let r = rng.gen_range(size / 12..size / 4) as i64;
            for y in (cy - r).max(0)..(cy + r + 1).min(size as i64) {
                for x in (cx - r).max(0)..(cx + r + 1).min(size as i64) {
                    let dx = x - cx;
                    let dy = y - cy;
                    if dx * dx + dy * dy <= r * r {
                        img.put_pixel(x as u32, y as u32, color);
                    }
                }
            }
        } else {
            let x0 = rng.gen_range(0..size);
            let y0 = rng.gen_range(0..size);
            let w = rng.gen_range(size / 10..size / 3);
            let h = rng.gen_range(size / 10..size / 3);
            for y in y0..(y0 + h).min(size) {
                for x in x0..(x0 + w).min(size) {
                    img.put_pixel(x as u32, y as u32, color);
                }
            }
        }
    }
    img
}

fn random_color(rng: &mut impl Rng) -> Rgb<u8> {
    Rgb([rng.gen_range(25..=230), rng.gen_range(25..=230), rng.gen_range(25..=230)])
}

fn lerp_color(a: Rgb<u8>, b: Rgb<u8>, t: f32) -> Rgb<u8> {
    Rgb([0, 1, 2].map(|c| (a.0[c] as f32 + (b.0[c] as f32 - a.0[c] as f32) * t).round() as u8))
}
