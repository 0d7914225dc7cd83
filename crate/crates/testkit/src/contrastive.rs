//! Scalar-loop references for the ratio-form cycle losses and the
//! location-contrastive cross-entropy.

/// Which terms of a ratio loss are kept. For the intra loss the flags select
/// denominator (negative) terms; for the inter loss they select numerator
/// (positive) terms.
#[derive(Debug, Clone, Copy)]
pub struct RatioFlags {
    pub use_fake: bool,
    pub use_real: bool,
}

impl RatioFlags {
    pub fn both() -> Self {
        Self { use_fake: true, use_real: true }
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "embedding length mismatch");
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).abs();
    }
    s
}

/// One branch of the intra cycle loss on pooled semantic embeddings:
/// `|q - pos|_1 / (|q - neg_fake|_1 + |q - neg_real|_1 + eps)` with the
/// denominator terms gated by `flags`.
pub fn reference_intra_branch(
    query: &[f64],
    positive: &[f64],
    neg_fake: &[f64],
    neg_real: &[f64],
    flags: RatioFlags,
    eps: f64,
) -> f64 {
    assert!(flags.use_fake || flags.use_real, "at least one negative required");
    let num = l1(query, positive);
    let mut den = eps;
    if flags.use_fake {
        den += l1(query, neg_fake);
    }
    if flags.use_real {
        den += l1(query, neg_real);
    }
    num / den
}

/// One branch of the inter cycle loss on discriminant embeddings for a single
/// tapped layer. `recon` is the reconstructed image's embedding, `fake` the
/// generated one, `positive` the real same-domain one and `negative` the
/// opposite-domain one. Numerator terms:
///   real-positive terms: |recon - pos|, |fake - pos|
///   fake-positive terms: |fake - pos|, |recon - fake|
/// The middle term involves both the real and the generated image, so either
/// flag keeps it. The denominator is not gated.
pub fn reference_inter_branch(
    recon: &[f64],
    fake: &[f64],
    positive: &[f64],
    negative: &[f64],
    flags: RatioFlags,
    eps: f64,
) -> f64 {
    assert!(flags.use_fake || flags.use_real, "at least one positive required");
    let mut num = 0.0;
    if flags.use_real {
        num += l1(recon, positive);
    }
    if flags.use_real || flags.use_fake {
        num += l1(fake, positive);
    }
    if flags.use_fake {
        num += l1(recon, fake);
    }
    let den = l1(recon, negative) + l1(fake, negative) + eps;
    num / den
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Location-contrastive cross-entropy, scalar loops only.
///
/// `queries[i]` is matched against `keys[i]` as its positive; every other key
/// of the same set serves as a negative, so `num_negatives` must equal
/// `keys.len() - 1`. Returns the mean over queries of
/// `-log( exp(sim+ / tau) / (exp(sim+ / tau) + sum_j exp(sim-_j / tau)) )`.
pub fn reference_lcl(queries: &[Vec<f64>], keys: &[Vec<f64>], tau: f64, num_negatives: usize) -> f64 {
    assert!(tau > 0.0, "temperature must be positive");
    assert_eq!(queries.len(), keys.len(), "query/key count mismatch");
    assert_eq!(num_negatives + 1, keys.len(), "N must be the other locations");
    let mut total = 0.0;
    for (i, q) in queries.iter().enumerate() {
        let pos = cosine(q, &keys[i]) / tau;
        // log-sum-exp over the positive and all negatives, stabilized.
        let mut logits = Vec::with_capacity(keys.len());
        logits.push(pos);
        for (j, k) in keys.iter().enumerate() {
            if j != i {
                logits.push(cosine(q, k) / tau);
            }
        }
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for l in &logits {
            sum += (l - m).exp();
        }
        total += m + sum.ln() - pos;
    }
    total / queries.len() as f64
}

/// Weighted total: `adv + l1 * lcl + l2 * intra + l3 * inter`.
pub fn reference_total(adv: f64, lcl: f64, intra: f64, inter: f64, lambdas: (f64, f64, f64)) -> f64 {
    adv + lambdas.0 * lcl + lambdas.1 * intra + lambdas.2 * inter
}
