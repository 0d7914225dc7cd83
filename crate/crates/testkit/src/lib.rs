//! Independent brute-force oracles used by the acceptance suite.
//!
//! Everything in this crate is written as plain scalar loops over `f64`
//! slices. It deliberately shares no code with the main crates so that an
//! agreement between the two is evidence of correctness rather than of a
//! common bug. Keep it that way: no dependency on `ccl-derain-core`, no
//! tensor library, no shared helpers.

pub mod adversarial;
pub mod contrastive;
pub mod grad;
pub mod quality;
pub mod rng;

pub use adversarial::{reference_lsgan, reference_vanilla};
pub use contrastive::{
    reference_inter_branch, reference_intra_branch, reference_lcl, reference_total, RatioFlags,
};
pub use grad::{finite_diff_grad, finite_diff_grad_at, FiniteDiff};
pub use quality::{reference_psnr, reference_ssim, ChannelMode};
pub use rng::SplitMix64;

/// One expected-value case, tagged with where the number came from.
#[derive(Debug, Clone)]
pub struct OracleCase {
    pub name: &'static str,
    pub expected: f64,
    pub tolerance: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Value stated by the source publication.
    Paper,
    /// Value computed here by an independent route (closed form, brute force).
    Derived,
    /// Value that follows immediately from the definition.
    Trivial,
}

impl OracleCase {
    pub fn check(&self, actual: f64) -> Result<(), String> {
        if (actual - self.expected).abs() <= self.tolerance {
            Ok(())
        } else {
            Err(format!(
                "{}: expected {} +/- {}, got {}",
                self.name, self.expected, self.tolerance, actual
            ))
        }
    }
}

/// Relative error with an absolute floor, for comparing oracle vs. main values.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-12);
    (a - b).abs() / denom
}
