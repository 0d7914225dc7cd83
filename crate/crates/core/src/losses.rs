//! Training objectives: adversarial terms, the intra/inter cycle
//! contrastive losses, the location contrastive loss, and their weighted
//! total.
//!
//! Cycle-loss conventions:
//! - distances are mean-over-batch L1 norms of embedding differences;
//! - each ratio denominator carries an epsilon so coinciding images stay
//!   finite;
//! - multi-layer variants average the per-layer ratio, so the magnitude is
//!   insensitive to the tap count;
//! - the two branch terms of each loss are summed.
//!
//! By default the opposite-domain (negative-side) embeddings are detached,
//! so pushing away from a negative never trains the network that produced
//! it; the `detach_negatives` toggle exposes the alternative.

use candle_core::{DType, Device, Tensor, D};
use serde::Serialize;

use crate::config::{AdversarialMode, LossConfig};
use crate::datasets::ImageTensor;
use crate::error::{Error, Result};
use crate::networks::ops::{l1_distance, scalar_value};
use crate::networks::{
    encode_discriminant, Discriminator, Domain, HeadBank, PatchFeatureSet, SemanticEncoder,
};

/// Trade-off weights of the total objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossWeights {
    /// Location contrastive term.
    pub lambda1: f64,
    /// Intra cycle term.
    pub lambda2: f64,
    /// Inter cycle term.
    pub lambda3: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda1: 0.5, lambda2: 0.5, lambda3: 0.05 }
    }
}

impl From<&LossConfig> for LossWeights {
    fn from(cfg: &LossConfig) -> Self {
        Self { lambda1: cfg.lambda1, lambda2: cfg.lambda2, lambda3: cfg.lambda3 }
    }
}

/// Location-loss hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LclConfig {
    pub temperature: f64,
    /// Expected negatives per query; `None` derives locations - 1.
    pub num_negatives: Option<usize>,
    pub epsilon: f64,
}

impl Default for LclConfig {
    fn default() -> Self {
        Self { temperature: 0.07, num_negatives: None, epsilon: 1e-8 }
    }
}

impl From<&LossConfig> for LclConfig {
    fn from(cfg: &LossConfig) -> Self {
        Self {
            temperature: cfg.temperature,
            num_negatives: cfg.num_negatives,
            epsilon: cfg.lcl_epsilon,
        }
    }
}

/// Gates over the optional terms of a ratio loss (negatives for the intra
/// loss, positives for the inter loss).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub use_fake: bool,
    pub use_real: bool,
}

impl Selection {
    pub fn both() -> Self {
        Self { use_fake: true, use_real: true }
    }

    fn ensure_nonempty(&self, what: &str) -> Result<()> {
        if !self.use_fake && !self.use_real {
            return Err(Error::Config(format!("{what}: both selections disabled")));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Adversarial

/// Generator-side adversarial term on the patch logits of fake images
/// (non-saturating for the log form; target 1 for least squares).
pub fn adversarial_g(fake_logits: &Tensor, mode: AdversarialMode) -> Result<Tensor> {
    match mode {
        AdversarialMode::Lsgan => Ok((fake_logits - 1.0)?.sqr()?.mean_all()?),
        AdversarialMode::Vanilla => Ok(softplus(&fake_logits.neg()?)?.mean_all()?),
    }
}

/// Discriminator-side term: real and fake halves each averaged over their
/// patch logits, then summed.
pub fn adversarial_d(real_logits: &Tensor, fake_logits: &Tensor, mode: AdversarialMode) -> Result<Tensor> {
    match mode {
        AdversarialMode::Lsgan => {
            let real = (real_logits - 1.0)?.sqr()?.mean_all()?;
            let fake = fake_logits.sqr()?.mean_all()?;
            Ok((real + fake)?)
        }
        AdversarialMode::Vanilla => {
            let real = softplus(&real_logits.neg()?)?.mean_all()?;
            let fake = softplus(fake_logits)?.mean_all()?;
            Ok((real + fake)?)
        }
    }
}

/// Both adversarial terms for one discriminator. The generator term runs
/// the discriminator with detached parameters (gradient flows to the
/// generator only); the discriminator term sees the fake detached.
pub fn adversarial_loss(
    disc: &Discriminator,
    disc_name: &str,
    real: &ImageTensor,
    fake: &ImageTensor,
    mode: AdversarialMode,
) -> Result<(Tensor, Tensor)> {
    let g_logits = disc.forward(fake, true)?.logits;
    let g_term = adversarial_g(&g_logits, mode)?;
    let real_logits = disc.forward(real, false)?.logits;
    let fake_logits = disc.forward(&fake.detached(), false)?.logits;
    let d_term = adversarial_d(&real_logits, &fake_logits, mode)?;
    for (term, label) in [(&g_term, "g"), (&d_term, "d")] {
        if !scalar_value(term)?.is_finite() {
            return Err(Error::NonFinite { term: format!("adv_{label}({disc_name})") });
        }
    }
    Ok((g_term, d_term))
}

/// `ln(1 + e^x)`, stable for large |x|.
fn softplus(x: &Tensor) -> Result<Tensor> {
    let relu = x.relu()?;
    let exp = x.abs()?.neg()?.exp()?;
    Ok((relu + (exp + 1.0)?.log()?)?)
}

// ---------------------------------------------------------------------------
// Intra cycle loss (semantic space)

/// One ratio `|q - pos|_1 / (sum of enabled |q - neg|_1 + eps)` on pooled
/// embeddings.
pub fn intra_ratio(
    query: &Tensor,
    positive: &Tensor,
    neg_fake: Option<&Tensor>,
    neg_real: Option<&Tensor>,
    epsilon: f64,
) -> Result<Tensor> {
    if neg_fake.is_none() && neg_real.is_none() {
        return Err(Error::Config("intra ratio needs at least one negative".into()));
    }
    let numerator = l1_distance(query, positive)?;
    let mut denominator = Tensor::full(epsilon, (), query.device())?.to_dtype(query.dtype())?;
    for neg in [neg_fake, neg_real].into_iter().flatten() {
        denominator = (denominator + l1_distance(query, neg)?)?;
    }
    Ok((numerator / denominator)?)
}

pub struct IntraOutput {
    pub total: Tensor,
    pub branch_i: Tensor,
    pub branch_ii: Tensor,
}

/// Intra cycle loss over both branches in the frozen semantic space.
///
/// Branch i anchors the reconstructed rainy image against its source and
/// pushes it from the rain-free images; branch ii mirrors it on the
/// rain-free side. `selection` gates the generated (fake) and real
/// negatives per the ablation strategies.
#[allow(clippy::too_many_arguments)]
pub fn intra_ccl(
    encoder: &SemanticEncoder,
    r_star: &ImageTensor,
    r: &ImageTensor,
    n_tilde: &ImageTensor,
    n: &ImageTensor,
    n_star: &ImageTensor,
    r_tilde: &ImageTensor,
    selection: Selection,
    epsilon: f64,
    detach_negatives: bool,
) -> Result<IntraOutput> {
    selection.ensure_nonempty("intra negatives")?;
    let maybe_detached = |img: &ImageTensor| if detach_negatives { img.detached() } else { img.clone() };
    let e_r_star = encoder.embed(r_star)?;
    let e_n_star = encoder.embed(n_star)?;
    let e_r = encoder.embed(r)?;
    let e_n = encoder.embed(n)?;
    let e_n_tilde = if selection.use_fake { Some(encoder.embed(&maybe_detached(n_tilde))?) } else { None };
    let e_r_tilde = if selection.use_fake { Some(encoder.embed(&maybe_detached(r_tilde))?) } else { None };
    let branch_i = intra_ratio(
        &e_r_star,
        &e_r,
        e_n_tilde.as_ref(),
        selection.use_real.then_some(&e_n),
        epsilon,
    )?;
    let branch_ii = intra_ratio(
        &e_n_star,
        &e_n,
        e_r_tilde.as_ref(),
        selection.use_real.then_some(&e_r),
        epsilon,
    )?;
    let total = (&branch_i + &branch_ii)?;
    Ok(IntraOutput { total, branch_i, branch_ii })
}

// ---------------------------------------------------------------------------
// Inter cycle loss (discriminant space)

/// One branch of the inter loss for a single tapped layer.
///
/// Numerator terms: `|recon - pos|` (kept by the real selection),
/// `|fake - pos|` (kept by either selection since it involves both), and
/// `|recon - fake|` (kept by the fake selection). The denominator pushes
/// both same-domain embeddings away from the opposite-domain one.
pub fn inter_ratio(
    recon: &Tensor,
    fake: &Tensor,
    positive: &Tensor,
    negative: &Tensor,
    selection: Selection,
    epsilon: f64,
) -> Result<Tensor> {
    selection.ensure_nonempty("inter positives")?;
    let mut numerator = Tensor::zeros((), recon.dtype(), recon.device())?;
    if selection.use_real {
        numerator = (numerator + l1_distance(recon, positive)?)?;
    }
    numerator = (numerator + l1_distance(fake, positive)?)?;
    if selection.use_fake {
        numerator = (numerator + l1_distance(recon, fake)?)?;
    }
    let denominator = ((l1_distance(recon, negative)? + l1_distance(fake, negative)?)? + epsilon)?;
    Ok((numerator / denominator)?)
}

pub struct InterOutput {
    pub total: Tensor,
    pub loss_n: Tensor,
    pub loss_r: Tensor,
}

/// Inter loss from per-layer embedding lists (one entry per tapped
/// discriminator stage). Ratios are averaged over layers, the two domain
/// branches summed.
#[allow(clippy::too_many_arguments)]
pub fn inter_ccl_from_embeddings(
    gn_n_star: &[Tensor],
    gn_n_tilde: &[Tensor],
    gn_n: &[Tensor],
    gr_r_star: &[Tensor],
    gr_r_tilde: &[Tensor],
    gr_r: &[Tensor],
    selection: Selection,
    epsilon: f64,
    detach_negatives: bool,
) -> Result<InterOutput> {
    let layers = gn_n_star.len();
    for list in [gn_n_tilde, gn_n, gr_r_star, gr_r_tilde, gr_r] {
        if list.len() != layers {
            return Err(Error::Contract("embedding lists cover different tap counts".into()));
        }
    }
    if layers == 0 {
        return Err(Error::Contract("no tapped layers".into()));
    }
    let maybe_detach = |t: &Tensor| if detach_negatives { t.detach() } else { t.clone() };
    let mut loss_n = Tensor::zeros((), gn_n_star[0].dtype(), gn_n_star[0].device())?;
    let mut loss_r = loss_n.clone();
    for l in 0..layers {
        loss_n = (loss_n
            + inter_ratio(
                &gn_n_star[l],
                &gn_n_tilde[l],
                &gn_n[l],
                &maybe_detach(&gr_r[l]),
                selection,
                epsilon,
            )?)?;
        loss_r = (loss_r
            + inter_ratio(
                &gr_r_star[l],
                &gr_r_tilde[l],
                &gr_r[l],
                &maybe_detach(&gn_n[l]),
                selection,
                epsilon,
            )?)?;
    }
    let scale = 1.0 / layers as f64;
    let loss_n = (loss_n * scale)?;
    let loss_r = (loss_r * scale)?;
    let total = (&loss_n + &loss_r)?;
    Ok(InterOutput { total, loss_n, loss_r })
}

/// Inter loss straight from images: embeds all six through the matching
/// discriminator encoders and heads, then applies
/// [`inter_ccl_from_embeddings`].
#[allow(clippy::too_many_arguments)]
pub fn inter_ccl(
    d_n: &Discriminator,
    d_r: &Discriminator,
    heads: &HeadBank,
    n_star: &ImageTensor,
    n_tilde: &ImageTensor,
    n: &ImageTensor,
    r_star: &ImageTensor,
    r_tilde: &ImageTensor,
    r: &ImageTensor,
    selection: Selection,
    epsilon: f64,
    detach_negatives: bool,
    stop_disc_grad: bool,
) -> Result<InterOutput> {
    let gn = |img: &ImageTensor| encode_discriminant(d_n, heads, Domain::RainFree, img, stop_disc_grad);
    let gr = |img: &ImageTensor| encode_discriminant(d_r, heads, Domain::Rainy, img, stop_disc_grad);
    inter_ccl_from_embeddings(
        &gn(n_star)?,
        &gn(n_tilde)?,
        &gn(n)?,
        &gr(r_star)?,
        &gr(r_tilde)?,
        &gr(r)?,
        selection,
        epsilon,
        detach_negatives,
    )
}

// ---------------------------------------------------------------------------
// Location contrastive loss

/// Patch-wise InfoNCE between generator output (queries) and input (keys)
/// at identical sampled locations; every other location of the same layer
/// serves as a negative. Feature rows are unit vectors, so the dot product
/// is the cosine similarity.
pub fn lcl(queries: &PatchFeatureSet, keys: &PatchFeatureSet, cfg: &LclConfig) -> Result<Tensor> {
    if cfg.temperature <= 0.0 {
        return Err(Error::Config("temperature must be positive".into()));
    }
    if queries.locations != keys.locations {
        return Err(Error::Contract(
            "query and key sets were sampled at different locations".into(),
        ));
    }
    if queries.features.len() != keys.features.len() || queries.features.is_empty() {
        return Err(Error::Contract("query/key layer counts differ or are empty".into()));
    }
    let mut total = Tensor::zeros((), queries.features[0].dtype(), queries.features[0].device())?;
    for (q, k) in queries.features.iter().zip(&keys.features) {
        let (b, l, _d) = q.dims3()?;
        if let Some(expected) = cfg.num_negatives {
            if l != expected + 1 {
                return Err(Error::Config(format!(
                    "num_negatives = {expected} but {l} locations were sampled"
                )));
            }
        }
        let logits = (q.matmul(&k.transpose(1, 2)?.contiguous()?)? / cfg.temperature)?;
        let eye = eye_like(l, &logits)?;
        let positives = logits.broadcast_mul(&eye)?.sum(D::Minus1)?; // [b, l]
        let lse = log_sum_exp_last(&logits)?; // [b, l]
        total = (total + (lse - positives)?.mean_all()?)?;
        debug_assert_eq!(q.dims()[0], b);
    }
    Ok((total * (1.0 / queries.features.len() as f64))?)
}

fn eye_like(n: usize, like: &Tensor) -> Result<Tensor> {
    let mut data = vec![0f32; n * n];
    for i in 0..n {
        data[i * n + i] = 1.0;
    }
    Ok(Tensor::from_vec(data, (n, n), like.device())?.to_dtype(like.dtype())?)
}

fn log_sum_exp_last(x: &Tensor) -> Result<Tensor> {
    let m = x.max_keepdim(D::Minus1)?.detach();
    let sum = x.broadcast_sub(&m)?.exp()?.sum_keepdim(D::Minus1)?;
    Ok(sum.log()?.broadcast_add(&m)?.squeeze(D::Minus1)?)
}

// ---------------------------------------------------------------------------
// Total

/// Scalar pieces of one training step's objective, exported per step into
/// the loss log.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LossReport {
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub adv_g: f64,
    pub adv_d: f64,
    pub lcl: f64,
    pub intra: f64,
    pub inter: f64,
    pub total: f64,
    pub intra_i: f64,
    pub intra_ii: f64,
    pub l_n: f64,
    pub l_r: f64,
}

impl LossReport {
    /// The JSON-lines record written per step.
    pub fn log_record(&self) -> serde_json::Value {
        serde_json::json!({
            "epoch": self.epoch,
            "step": self.step,
            "lr": self.lr,
            "adv_g": self.adv_g,
            "adv_d": self.adv_d,
            "lcl": self.lcl,
            "intra": self.intra,
            "inter": self.inter,
            "total": self.total,
        })
    }

    pub fn ensure_finite(&self) -> Result<()> {
        for (name, v) in [
            ("adv_g", self.adv_g),
            ("adv_d", self.adv_d),
            ("lcl", self.lcl),
            ("intra", self.intra),
            ("inter", self.inter),
            ("total", self.total),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite { term: name.into() });
            }
        }
        Ok(())
    }
}

/// Weighted sum of the generator-side terms. Disabled terms pass `None`
/// and contribute nothing. Errors name the first non-finite term.
pub fn total_loss(
    adv_g: Option<&Tensor>,
    lcl_term: Option<&Tensor>,
    intra: Option<&Tensor>,
    inter: Option<&Tensor>,
    weights: &LossWeights,
    dtype: DType,
    device: &Device,
) -> Result<Tensor> {
    let mut total = Tensor::zeros((), dtype, device)?;
    for (term, weight, name) in [
        (adv_g, 1.0, "adv_g"),
        (lcl_term, weights.lambda1, "lcl"),
        (intra, weights.lambda2, "intra"),
        (inter, weights.lambda3, "inter"),
    ] {
        if let Some(t) = term {
            if !scalar_value(t)?.is_finite() {
                return Err(Error::NonFinite { term: name.into() });
            }
            total = (total + (t * weight)?)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::PatchLocations;

    fn dev() -> Device {
        Device::Cpu
    }

    fn scalar(v: f64) -> Tensor {
        Tensor::full(v, (), &dev()).unwrap().to_dtype(DType::F64).unwrap().reshape((1, 1)).unwrap()
    }

    #[test]
    fn lsgan_closed_forms() {
        let zeros = Tensor::zeros((1, 1, 3, 3), DType::F32, &dev()).unwrap();
        let ones = Tensor::ones((1, 1, 3, 3), DType::F32, &dev()).unwrap();
        let g = scalar_value(&adversarial_g(&zeros, AdversarialMode::Lsgan).unwrap()).unwrap();
        assert!((g - 1.0).abs() < 1e-7);
        let d = scalar_value(&adversarial_d(&ones, &zeros, AdversarialMode::Lsgan).unwrap()).unwrap();
        assert!(d.abs() < 1e-7);
    }

    #[test]
    fn vanilla_uniform_half_probability() {
        let zeros = Tensor::zeros((1, 1, 2, 2), DType::F32, &dev()).unwrap();
        let d = scalar_value(&adversarial_d(&zeros, &zeros, AdversarialMode::Vanilla).unwrap()).unwrap();
        assert!((d - 2.0 * std::f64::consts::LN_2).abs() < 1e-6, "expected 1.3863, got {d}");
        let g = scalar_value(&adversarial_g(&zeros, AdversarialMode::Vanilla).unwrap()).unwrap();
        assert!((g - std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn intra_hand_case() {
        // scalar embeddings 1, 2, 4, 5 -> 1/7
        let v = intra_ratio(&scalar(1.0), &scalar(2.0), Some(&scalar(4.0)), Some(&scalar(5.0)), 0.0).unwrap();
        assert!((scalar_value(&v).unwrap() - 1.0 / 7.0).abs() < 1e-9);
    }

    #[test]
    fn intra_zero_numerator() {
        let v = intra_ratio(&scalar(2.0), &scalar(2.0), Some(&scalar(4.0)), None, 1e-7).unwrap();
        assert_eq!(scalar_value(&v).unwrap(), 0.0);
    }

    #[test]
    fn inter_hand_case() {
        // recon 0, fake 1, pos 2, neg 5 -> 4/9
        let v = inter_ratio(&scalar(0.0), &scalar(1.0), &scalar(2.0), &scalar(5.0), Selection::both(), 0.0).unwrap();
        assert!((scalar_value(&v).unwrap() - 4.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn inter_zero_numerator() {
        let v = inter_ratio(&scalar(3.0), &scalar(3.0), &scalar(3.0), &scalar(5.0), Selection::both(), 0.0).unwrap();
        assert_eq!(scalar_value(&v).unwrap(), 0.0);
    }

    #[test]
    fn selections_gate_terms() {
        // fake-only intra: denominator only the fake distance
        let fake_only = intra_ratio(&scalar(1.0), &scalar(2.0), Some(&scalar(4.0)), None, 0.0).unwrap();
        assert!((scalar_value(&fake_only).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        // real-only inter: numerator |recon-pos| + |fake-pos|
        let real_only = inter_ratio(
            &scalar(0.0),
            &scalar(1.0),
            &scalar(2.0),
            &scalar(5.0),
            Selection { use_fake: false, use_real: true },
            0.0,
        )
        .unwrap();
        assert!((scalar_value(&real_only).unwrap() - 3.0 / 9.0).abs() < 1e-9);
        // fake-only inter: numerator |fake-pos| + |recon-fake|
        let fake_only = inter_ratio(
            &scalar(0.0),
            &scalar(1.0),
            &scalar(2.0),
            &scalar(5.0),
            Selection { use_fake: true, use_real: false },
            0.0,
        )
        .unwrap();
        assert!((scalar_value(&fake_only).unwrap() - 2.0 / 9.0).abs() < 1e-9);
    }

    fn feature_set(rows: Vec<Vec<f64>>) -> PatchFeatureSet {
        let l = rows.len();
        let d = rows[0].len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let t = Tensor::from_vec(flat, (1, l, d), &dev()).unwrap();
        let t = crate::networks::ops::unit_normalize(&t, 0.0).unwrap();
        PatchFeatureSet {
            locations: PatchLocations { per_layer: vec![(0..l as u32).collect()] },
            features: vec![t],
        }
    }

    #[test]
    fn lcl_orthogonal_closed_form() {
        // q == k+ with the single negative orthogonal, tau = 1:
        // both rows hit ln(1 + e^-1)
        let q = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let k = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let cfg = LclConfig { temperature: 1.0, num_negatives: Some(1), epsilon: 0.0 };
        let v = scalar_value(&lcl(&q, &k, &cfg).unwrap()).unwrap();
        assert!((v - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-6);
    }

    #[test]
    fn lcl_all_equal_is_ln_n_plus_one() {
        let q = feature_set(vec![vec![0.6, 0.8], vec![0.6, 0.8]]);
        let k = feature_set(vec![vec![0.6, 0.8], vec![0.6, 0.8]]);
        let cfg = LclConfig { temperature: 0.07, num_negatives: None, epsilon: 0.0 };
        let v = scalar_value(&lcl(&q, &k, &cfg).unwrap()).unwrap();
        assert!((v - 2.0f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn lcl_sharp_temperature_limit() {
        let q = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let k = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let cfg = LclConfig { temperature: 1e-3, num_negatives: None, epsilon: 0.0 };
        let v = scalar_value(&lcl(&q, &k, &cfg).unwrap()).unwrap();
        assert!(v.abs() < 1e-9, "loss should vanish as tau -> 0, got {v}");
    }

    #[test]
    fn lcl_rejects_mismatched_locations() {
        let q = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let mut k = feature_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        k.locations = PatchLocations { per_layer: vec![vec![1, 0]] };
        let err = lcl(&q, &k, &LclConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn total_hand_case_and_weights() {
        let parts: Vec<Tensor> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|v| Tensor::full(*v as f32, (), &dev()).unwrap())
            .collect();
        let w = LossWeights::default();
        let total = total_loss(
            Some(&parts[0]),
            Some(&parts[1]),
            Some(&parts[2]),
            Some(&parts[3]),
            &w,
            DType::F32,
            &dev(),
        )
        .unwrap();
        let v = scalar_value(&total).unwrap();
        assert!((v - 3.7).abs() < 1e-6);
        let none = total_loss(None, None, None, None, &w, DType::F32, &dev()).unwrap();
        assert_eq!(scalar_value(&none).unwrap(), 0.0);
    }

    #[test]
    fn total_names_non_finite_term() {
        let nan = Tensor::full(f32::NAN, (), &dev()).unwrap();
        let err = total_loss(None, None, Some(&nan), None, &LossWeights::default(), DType::F32, &dev())
            .unwrap_err();
        match err {
            Error::NonFinite { term } => assert_eq!(term, "intra"),
            other => panic!("unexpected error {other}"),
        }
    }
}
