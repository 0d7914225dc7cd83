//! Naive full-reference quality metrics on interleaved 8-bit RGB buffers.
//!
//! These deliberately re-derive every convention (BT.601 luma, the 11x11
//! sigma-1.5 Gaussian window, valid-window averaging) with double loops so
//! they can stand as an independent check of the fast implementation.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
    Luma,
    /// Metric per channel, averaged.
    Rgb,
}

fn luma_plane(rgb: &[u8], w: usize, h: usize) -> Vec<f64> {
    assert_eq!(rgb.len(), w * h * 3);
    let mut out = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let r = rgb[3 * i] as f64;
        let g = rgb[3 * i + 1] as f64;
        let b = rgb[3 * i + 2] as f64;
        out.push(0.299 * r + 0.587 * g + 0.114 * b);
    }
    out
}

fn channel_plane(rgb: &[u8], w: usize, h: usize, c: usize) -> Vec<f64> {
    assert_eq!(rgb.len(), w * h * 3);
    (0..w * h).map(|i| rgb[3 * i + c] as f64).collect()
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s / a.len() as f64
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical planes.
pub fn reference_psnr(a: &[u8], b: &[u8], w: usize, h: usize, mode: ChannelMode, max_val: f64) -> f64 {
    let m = match mode {
        ChannelMode::Luma => mse(&luma_plane(a, w, h), &luma_plane(b, w, h)),
        ChannelMode::Rgb => {
            let mut s = 0.0;
            for c in 0..3 {
                s += mse(&channel_plane(a, w, h, c), &channel_plane(b, w, h, c));
            }
            s / 3.0
        }
    };
    if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_val * max_val / m).log10()
    }
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_window() -> Vec<f64> {
    let mut win = vec![0.0; SSIM_WINDOW * SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for y in 0..SSIM_WINDOW {
        for x in 0..SSIM_WINDOW {
            let dy = y as f64 - c;
            let dx = x as f64 - c;
            let v = (-(dx * dx + dy * dy) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            win[y * SSIM_WINDOW + x] = v;
            sum += v;
        }
    }
    for v in &mut win {
        *v /= sum;
    }
    win
}

fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    assert!(w >= SSIM_WINDOW && h >= SSIM_WINDOW, "image smaller than the SSIM window");
    let win = gaussian_window();
    let c1 = (0.01 * 255.0) * (0.01 * 255.0);
    let c2 = (0.03 * 255.0) * (0.03 * 255.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for oy in 0..=(h - SSIM_WINDOW) {
        for ox in 0..=(w - SSIM_WINDOW) {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            for wy in 0..SSIM_WINDOW {
                for wx in 0..SSIM_WINDOW {
                    let g = win[wy * SSIM_WINDOW + wx];
                    let idx = (oy + wy) * w + ox + wx;
                    mu_a += g * a[idx];
                    mu_b += g * b[idx];
                }
            }
            let mut var_a = 0.0;
            let mut var_b = 0.0;
            let mut cov = 0.0;
            for wy in 0..SSIM_WINDOW {
                for wx in 0..SSIM_WINDOW {
                    let g = win[wy * SSIM_WINDOW + wx];
                    let idx = (oy + wy) * w + ox + wx;
                    let da = a[idx] - mu_a;
                    let db = b[idx] - mu_b;
                    var_a += g * da * da;
                    var_b += g * db * db;
                    cov += g * da * db;
                }
            }
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    total / count as f64
}

/// Windowed structural similarity with the standard 11x11 Gaussian window.
pub fn reference_ssim(a: &[u8], b: &[u8], w: usize, h: usize, mode: ChannelMode) -> f64 {
    match mode {
        ChannelMode::Luma => ssim_plane(&luma_plane(a, w, h), &luma_plane(b, w, h), w, h),
        ChannelMode::Rgb => {
            let mut s = 0.0;
            for c in 0..3 {
                s += ssim_plane(&channel_plane(a, w, h, c), &channel_plane(b, w, h, c), w, h);
            }
            s / 3.0
        }
    }
}
