//! Procedural rain streaks for the desk-scale paired toy dataset.
//!
//! The model is deliberately simple: oriented anti-aliased line segments
//! deposited into an intensity layer, blurred with a small Gaussian, then
//! added on top of the clean image and clamped. The addition happens in the
//! `[-1, 1]` tensor domain (a unit of layer intensity spans two tensor
//! units), so a zero layer returns the input bit-for-bit.

use candle_core::Tensor;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngHub;

use super::image_tensor::ImageTensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RainParams {
    pub num_streaks: usize,
    /// Nominal streak length in pixels (each streak jitters around it).
    pub streak_length: f64,
    /// Streak tilt in degrees from vertical; per-streak jitter of a few
    /// degrees is applied on top.
    pub streak_angle: f64,
    /// Peak deposit per streak, in [0, 1] intensity units.
    pub streak_intensity: f64,
    /// Gaussian blur applied to the finished layer, in pixels.
    pub blur_sigma: f64,
    pub seed: u64,
}

impl Default for RainParams {
    fn default() -> Self {
        Self {
            num_streaks: 90,
            streak_length: 13.0,
            streak_angle: 12.0,
            streak_intensity: 0.65,
            blur_sigma: 0.55,
            seed: 0,
        }
    }
}

impl RainParams {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.streak_intensity) {
            return Err(Error::Config(format!(
                "streak_intensity {} outside [0, 1]",
                self.streak_intensity
            )));
        }
        if self.blur_sigma < 0.0 || self.streak_length < 0.0 {
            return Err(Error::Config("rain lengths must be non-negative".into()));
        }
        Ok(())
    }
}

/// Composite a rain layer over a clean batch. Deterministic given
/// `params.seed`; per batch item the stream is keyed by its index.
pub fn synth_rain(clean: &ImageTensor, params: &RainParams) -> Result<ImageTensor> {
    params.validate()?;
    if params.num_streaks == 0 || params.streak_intensity == 0.0 {
        return Ok(clean.clone());
    }
    let (b, _, h, w) = clean.data().dims4()?;
    let hub = RngHub::new(params.seed);
    let mut layers = Vec::with_capacity(b);
    for item in 0..b {
        let mut rng = hub.stream(&format!("rain/{item}"));
        let mut layer = rasterize_streaks(h, w, params, &mut rng);
        if params.blur_sigma > 0.0 {
            layer = gaussian_blur(&layer, h, w, params.blur_sigma);
        }
        layers.extend(layer);
    }
    let layer = Tensor::from_vec(layers, (b, 1, h, w), clean.data().device())?
        .to_dtype(clean.dtype())?;
    // One intensity unit spans two units of the [-1, 1] range.
    let rainy = clean
        .data()
        .broadcast_add(&(layer * 2.0)?)?
        .clamp(-1.0, 1.0)?;
    ImageTensor::new(rainy)
}

fn rasterize_streaks(h: usize, w: usize, params: &RainParams, rng: &mut impl Rng) -> Vec<f32> {
    let mut layer = vec![0f32; h * w];
    for _ in 0..params.num_streaks {
        let cx = rng.gen_range(0.0..w as f64);
        let cy = rng.gen_range(0.0..h as f64);
        let angle = (params.streak_angle + rng.gen_range(-6.0..6.0)).to_radians();
        let len = params.streak_length * rng.gen_range(0.75..1.25);
        let amp = (params.streak_intensity * rng.gen_range(0.55..1.0)) as f32;
        let (dx, dy) = (angle.sin(), angle.cos());
        let step = 0.25;
        let steps = (len / step).ceil() as i64;
        for s in 0..=steps {
            let t = s as f64 * step - len / 2.0;
            deposit(&mut layer, h, w, cx + t * dx, cy + t * dy, amp * step as f32);
        }
    }
    for v in &mut layer {
        *v = v.min(1.0);
    }
    layer
}

/// Bilinear splat of `amount` at a fractional position.
fn deposit(layer: &mut [f32], h: usize, w: usize, x: f64, y: f64, amount: f32) {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = (x - x0) as f32;
    let fy = (y - y0) as f32;
    let mut add = |ix: i64, iy: i64, weight: f32| {
        if ix >= 0 && iy >= 0 && (ix as usize) < w && (iy as usize) < h {
            layer[iy as usize * w + ix as usize] += amount * weight;
        }
    };
    let (ix, iy) = (x0 as i64, y0 as i64);
    add(ix, iy, (1.0 - fx) * (1.0 - fy));
    add(ix + 1, iy, fx * (1.0 - fy));
    add(ix, iy + 1, (1.0 - fx) * fy);
    add(ix + 1, iy + 1, fx * fy);
}

fn gaussian_blur(layer: &[f32], h: usize, w: usize, sigma: f64) -> Vec<f32> {
    let radius = (sigma * 3.0).ceil().max(1.0) as i64;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for i in -radius..=radius {
        kernel.push((-(i as f64 * i as f64) / (2.0 * sigma * sigma)).exp() as f32);
    }
    let sum: f32 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    // Horizontal then vertical pass, clamping at the edges.
    let mut tmp = vec![0f32; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sx = (x as i64 + ki as i64 - radius).clamp(0, w as i64 - 1) as usize;
                acc += k * layer[y * w + sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0f32; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sy = (y as i64 + ki as i64 - radius).clamp(0, h as i64 - 1) as usize;
                acc += k * tmp[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}
