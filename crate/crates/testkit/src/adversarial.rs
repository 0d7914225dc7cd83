//! Scalar references for the adversarial objectives over patch logit maps.
//!
//! Both return `(g_term, d_term)` where the generator term is the
//! non-saturating objective and the discriminator term is the sum of the
//! real and fake halves, each half averaged over its logits.

fn mean(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `softplus(x) = ln(1 + e^x)` computed stably.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log-form (vanilla) GAN loss on raw logits.
/// g = mean(-log sigmoid(fake)); d = mean(-log sigmoid(real)) + mean(-log(1 - sigmoid(fake))).
pub fn reference_vanilla(real_logits: &[f64], fake_logits: &[f64]) -> (f64, f64) {
    let g = mean(&fake_logits.iter().map(|&x| softplus(-x)).collect::<Vec<_>>());
    let d_real = mean(&real_logits.iter().map(|&x| softplus(-x)).collect::<Vec<_>>());
    let d_fake = mean(&fake_logits.iter().map(|&x| softplus(x)).collect::<Vec<_>>());
    (g, d_real + d_fake)
}

/// Least-squares GAN loss on raw outputs with targets 1 (real) and 0 (fake).
/// g = mean((fake - 1)^2); d = mean((real - 1)^2) + mean(fake^2).
pub fn reference_lsgan(real_out: &[f64], fake_out: &[f64]) -> (f64, f64) {
    let g = mean(&fake_out.iter().map(|&x| (x - 1.0) * (x - 1.0)).collect::<Vec<_>>());
    let d_real = mean(&real_out.iter().map(|&x| (x - 1.0) * (x - 1.0)).collect::<Vec<_>>());
    let d_fake = mean(&fake_out.iter().map(|&x| x * x).collect::<Vec<_>>());
    (g, d_real + d_fake)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lsgan_closed_forms() {
        let (g, d) = reference_lsgan(&[1.0, 1.0], &[0.0, 0.0]);
        assert_eq!(g, 1.0);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn vanilla_uniform_zero_logits() {
        // sigmoid(0) = 0.5 on both halves: d = -2 ln 0.5 = 1.3863
        let (g, d) = reference_vanilla(&[0.0, 0.0, 0.0], &[0.0]);
        assert!((d - 2.0 * 2.0f64.ln()).abs() < 1e-12);
        assert!((g - 2.0f64.ln()).abs() < 1e-12);
    }
}
