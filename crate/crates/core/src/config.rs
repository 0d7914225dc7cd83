//! Run configuration.
//!
//! A config file (YAML) plus repeatable `--set key.path=value` overrides
//! fully determine a run. The resolved config is echoed into the output
//! directory next to every checkpoint so results stay reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub semantic: SemanticConfig,
    pub losses: LossConfig,
    pub trainer: TrainerConfig,
    pub metrics: MetricConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Root directory holding the rainy/clean subdirectories.
    pub root: String,
    pub rainy_subdir: String,
    pub clean_subdir: String,
    /// Two-column manifest (rainy_path, gt_path) for paired evaluation.
    pub eval_pairs_manifest: Option<String>,
    /// Training images are scaled to this size before the random crop.
    pub resize_to: usize,
    pub crop_size: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            root: String::new(),
            rainy_subdir: "rainy".into(),
            clean_subdir: "clean".into(),
            eval_pairs_manifest: None,
            resize_to: 286,
            crop_size: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub generator: GeneratorSpec,
    pub discriminator: DiscriminatorSpec,
    /// Output dimension of every projection head.
    pub projection_dim: usize,
    /// Spatial locations sampled per tapped layer for the location loss.
    pub num_locations: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorSpec::default(),
            discriminator: DiscriminatorSpec::default(),
            projection_dim: 256,
            num_locations: 256,
        }
    }
}

/// ResNet-style generator: stem conv, strided downsamples, residual blocks,
/// transposed-conv upsamples, tanh output. Output shape equals input shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSpec {
    pub num_residual_blocks: usize,
    pub base_channels: usize,
    pub downsample_stages: usize,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self { num_residual_blocks: 9, base_channels: 64, downsample_stages: 2 }
    }
}

/// PatchGAN discriminator: `num_stride2_layers` strided stages followed by
/// two stride-1 stages; emits a 2-D patch logit map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscriminatorSpec {
    pub num_stride2_layers: usize,
    pub base_channels: usize,
}

impl Default for DiscriminatorSpec {
    fn default() -> Self {
        Self { num_stride2_layers: 3, base_channels: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemanticBackendKind {
    /// Frozen randomly-initialized small CNN; needs no downloaded weights.
    Standin,
    /// CLIP-style ViT image tower loaded from a safetensors file.
    ClipVit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticTap {
    Pooled,
    Penultimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemanticConfig {
    pub backend: SemanticBackendKind,
    pub tap: SemanticTap,
    /// Stand-in only: side length the image is resized to before encoding.
    pub input_size: usize,
    /// Stand-in only: output embedding width. The ViT backend declares its
    /// own dimension from the weight file.
    pub embedding_dim: usize,
    /// Explicit weight file for the ViT backend; defaults to
    /// `$CCL_DERAIN_CACHE/clip-vit-image.safetensors`.
    pub weights_file: Option<String>,
}

impl Default for SemanticConfig {
    fn default() -> Self {
        Self {
            backend: SemanticBackendKind::ClipVit,
            tap: SemanticTap::Pooled,
            input_size: 64,
            embedding_dim: 128,
            weights_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversarialMode {
    Lsgan,
    Vanilla,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub adversarial_mode: AdversarialMode,
    /// Weight of the location contrastive loss.
    pub lambda1: f64,
    /// Weight of the intra cycle loss.
    pub lambda2: f64,
    /// Weight of the inter cycle loss.
    pub lambda3: f64,
    /// Temperature of the location contrastive loss.
    pub temperature: f64,
    /// Expected negatives per query; `null` derives it as locations - 1.
    pub num_negatives: Option<usize>,
    /// Added to vector norms before the cosine in the location loss.
    pub lcl_epsilon: f64,
    /// Added to the ratio denominators of the cycle losses.
    pub ratio_epsilon: f64,
    /// Keep the generated-image term in the intra denominators.
    pub use_fake_negatives: bool,
    /// Keep the real-image term in the intra denominators.
    pub use_real_negatives: bool,
    /// Keep numerator terms involving the generated same-domain image.
    pub use_fake_positives: bool,
    /// Keep numerator terms involving the real same-domain image.
    pub use_real_positives: bool,
    /// Treat negative-side embeddings as constants (no gradient).
    pub detach_negatives: bool,
    /// Ablation toggle: block inter-loss gradients at the discriminator taps.
    pub stop_disc_grad: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            adversarial_mode: AdversarialMode::Lsgan,
            lambda1: 0.5,
            lambda2: 0.5,
            lambda3: 0.05,
            temperature: 0.07,
            num_negatives: None,
            lcl_epsilon: 1e-8,
            ratio_epsilon: 1e-7,
            use_fake_negatives: true,
            use_real_negatives: true,
            use_fake_positives: true,
            use_real_positives: true,
            detach_negatives: true,
            stop_disc_grad: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub epochs: usize,
    pub decay_start_epoch: usize,
    pub lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub batch_size: usize,
    /// Write a checkpoint every this many epochs (the final epoch always gets one).
    pub checkpoint_every: usize,
    pub enable_adv: bool,
    pub enable_lcl: bool,
    pub enable_intra: bool,
    pub enable_inter: bool,
    /// Optional cap on steps per epoch, e.g. for ablation budgets.
    pub max_steps_per_epoch: Option<usize>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            epochs: 400,
            decay_start_epoch: 200,
            lr: 2e-4,
            adam_beta1: 0.5,
            adam_beta2: 0.999,
            batch_size: 1,
            checkpoint_every: 50,
            enable_adv: true,
            enable_lcl: true,
            enable_intra: true,
            enable_inter: true,
            max_steps_per_epoch: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelMode {
    /// BT.601 luma.
    #[serde(rename = "y")]
    Luma,
    #[serde(rename = "rgb")]
    Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub channel_mode: ChannelMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { channel_mode: ChannelMode::Luma }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            semantic: SemanticConfig::default(),
            losses: LossConfig::default(),
            trainer: TrainerConfig::default(),
            metrics: MetricConfig::default(),
        }
    }
}

impl Config {
    /// Paper-scale defaults: 256-crop training, ResNet-9 generator, 400 epochs.
    pub fn full() -> Self {
        Self::default()
    }

    /// Desk-scale profile sized so the convergence check finishes on a
    /// two-core CPU box: 64x64 crops, a slim generator, 30 epochs.
    pub fn toy() -> Self {
        let mut cfg = Self::default();
        cfg.data.resize_to = 72;
        cfg.data.crop_size = 64;
        cfg.model.generator = GeneratorSpec { num_residual_blocks: 3, base_channels: 16, downsample_stages: 2 };
        cfg.model.discriminator = DiscriminatorSpec { num_stride2_layers: 3, base_channels: 24 };
        cfg.model.projection_dim = 64;
        cfg.model.num_locations = 64;
        cfg.semantic.backend = SemanticBackendKind::Standin;
        cfg.semantic.input_size = 32;
        cfg.semantic.embedding_dim = 64;
        cfg.trainer.epochs = 30;
        cfg.trainer.decay_start_epoch = 15;
        cfg.trainer.checkpoint_every = 10;
        cfg
    }

    pub fn from_yaml_str(text: &str) -> Result<Self> {
        let value: serde_yaml::Value = serde_yaml::from_str(text)
            .map_err(|e| Error::Config(format!("could not parse config: {e}")))?;
        validate_keys(&value)?;
        serde_yaml::from_value(value).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn from_yaml_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_yaml_str(&text)
    }

    pub fn to_yaml_string(&self) -> String {
        serde_yaml::to_string(self).expect("config serializes")
    }

    /// Apply one `key.path=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key.path=value")))?;
        let mut value = serde_yaml::to_value(&*self).expect("config serializes");
        set_path(&mut value, path.trim(), raw.trim())?;
        *self = serde_yaml::from_value(value)
            .map_err(|e| Error::Config(format!("override `{assignment}` rejected: {e}")))?;
        Ok(())
    }

    /// Cross-field checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        let t = &self.trainer;
        if t.decay_start_epoch >= t.epochs {
            return Err(Error::Config(format!(
                "trainer.decay_start_epoch ({}) must be < trainer.epochs ({})",
                t.decay_start_epoch, t.epochs
            )));
        }
        if t.batch_size < 1 {
            return Err(Error::Config("trainer.batch_size must be >= 1".into()));
        }
        let l = &self.losses;
        if l.lambda1 < 0.0 || l.lambda2 < 0.0 || l.lambda3 < 0.0 {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        if l.temperature <= 0.0 {
            return Err(Error::Config("losses.temperature must be positive".into()));
        }
        if let Some(n) = l.num_negatives {
            if n < 1 {
                return Err(Error::Config("losses.num_negatives must be >= 1".into()));
            }
        }
        if t.enable_intra && !l.use_fake_negatives && !l.use_real_negatives {
            return Err(Error::Config(
                "intra loss enabled but both negative selections are off".into(),
            ));
        }
        if t.enable_inter && !l.use_fake_positives && !l.use_real_positives {
            return Err(Error::Config(
                "inter loss enabled but both positive selections are off".into(),
            ));
        }
        let g = &self.model.generator;
        if g.num_residual_blocks < 1 {
            return Err(Error::Config("model.generator.num_residual_blocks must be >= 1".into()));
        }
        let stride = 1usize << g.downsample_stages;
        if self.data.crop_size % stride != 0 {
            return Err(Error::Config(format!(
                "data.crop_size ({}) must be divisible by 2^downsample_stages ({stride})",
                self.data.crop_size
            )));
        }
        if self.data.resize_to < self.data.crop_size {
            return Err(Error::Config(format!(
                "data.resize_to ({}) must be >= data.crop_size ({})",
                self.data.resize_to, self.data.crop_size
            )));
        }
        Ok(())
    }
}

/// All valid dotted leaf paths, derived from the default config tree.
pub fn known_keys() -> Vec<String> {
    let value = serde_yaml::to_value(Config::default()).expect("config serializes");
    let mut keys = Vec::new();
    collect_paths(&value, String::new(), &mut keys);
    keys.sort();
    keys
}

fn collect_paths(value: &serde_yaml::Value, prefix: String, out: &mut Vec<String>) {
    match value {
        serde_yaml::Value::Mapping(map) => {
            for (k, v) in map {
                let name = k.as_str().unwrap_or_default();
                let path = if prefix.is_empty() { name.to_string() } else { format!("{prefix}.{name}") };
                collect_paths(v, path, out);
            }
        }
        _ => out.push(prefix),
    }
}

fn validate_keys(value: &serde_yaml::Value) -> Result<()> {
    let reference = serde_yaml::to_value(Config::default()).expect("config serializes");
    let mut bad = Vec::new();
    find_unknown(value, &reference, String::new(), &mut bad);
    match bad.first() {
        None => Ok(()),
        Some(key) => Err(unknown_key_error(key)),
    }
}

fn find_unknown(
    value: &serde_yaml::Value,
    reference: &serde_yaml::Value,
    prefix: String,
    out: &mut Vec<String>,
) {
    if let (serde_yaml::Value::Mapping(map), serde_yaml::Value::Mapping(ref_map)) = (value, reference) {
        for (k, v) in map {
            let name = k.as_str().unwrap_or_default();
            let path = if prefix.is_empty() { name.to_string() } else { format!("{prefix}.{name}") };
            match ref_map.get(k) {
                Some(ref_v) => find_unknown(v, ref_v, path, out),
                None => out.push(path),
            }
        }
    }
}

fn unknown_key_error(key: &str) -> Error {
    let mut candidates = known_keys();
    candidates.sort_by_key(|k| levenshtein(key, k));
    let nearest: Vec<&str> = candidates.iter().take(3).map(String::as_str).collect();
    Error::Config(format!("unknown config key `{key}`; nearest valid keys: {}", nearest.join(", ")))
}

fn set_path(root: &mut serde_yaml::Value, path: &str, raw: &str) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    let mut node = &mut *root;
    for (i, seg) in segments.iter().enumerate() {
        let map = node
            .as_mapping_mut()
            .ok_or_else(|| unknown_key_error(path))?;
        let key = serde_yaml::Value::String((*seg).to_string());
        if !map.contains_key(&key) {
            return Err(unknown_key_error(path));
        }
        node = map.get_mut(&key).expect("key just checked");
        if i + 1 == segments.len() {
            *node = parse_scalar(node, raw)?;
            return Ok(());
        }
    }
    Err(unknown_key_error(path))
}

/// Interpret the raw override text, coercing to the type already present at
/// the target so e.g. a numeric-looking path stays a string.
fn parse_scalar(current: &serde_yaml::Value, raw: &str) -> Result<serde_yaml::Value> {
    use serde_yaml::Value;
    match current {
        Value::String(_) => Ok(Value::String(raw.to_string())),
        _ => serde_yaml::from_str(raw)
            .map_err(|e| Error::Config(format!("could not parse override value `{raw}`: {e}"))),
    }
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            cur[j] = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_publication_values() {
        let cfg = Config::full();
        assert_eq!(cfg.losses.lambda1, 0.5);
        assert_eq!(cfg.losses.lambda2, 0.5);
        assert_eq!(cfg.losses.lambda3, 0.05);
        assert_eq!(cfg.trainer.epochs, 400);
        assert_eq!(cfg.trainer.decay_start_epoch, 200);
        assert_eq!(cfg.trainer.lr, 2e-4);
        assert_eq!(cfg.trainer.adam_beta1, 0.5);
        assert_eq!(cfg.trainer.adam_beta2, 0.999);
        assert_eq!(cfg.trainer.batch_size, 1);
        assert_eq!(cfg.data.resize_to, 286);
        assert_eq!(cfg.data.crop_size, 256);
        assert_eq!(cfg.model.generator.num_residual_blocks, 9);
        assert_eq!(cfg.model.generator.base_channels, 64);
        cfg.validate().unwrap();
        Config::toy().validate().unwrap();
    }

    #[test]
    fn yaml_round_trip() {
        let cfg = Config::toy();
        let text = cfg.to_yaml_string();
        let back = Config::from_yaml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn overrides_parse_types() {
        let mut cfg = Config::full();
        cfg.apply_override("trainer.epochs=1").unwrap();
        cfg.apply_override("trainer.enable_adv=false").unwrap();
        cfg.apply_override("losses.lambda1=0.25").unwrap();
        cfg.apply_override("data.root=/tmp/somewhere").unwrap();
        assert_eq!(cfg.trainer.epochs, 1);
        assert!(!cfg.trainer.enable_adv);
        assert_eq!(cfg.losses.lambda1, 0.25);
        assert_eq!(cfg.data.root, "/tmp/somewhere");
    }

    #[test]
    fn unknown_override_lists_nearest_keys() {
        let mut cfg = Config::full();
        let err = cfg.apply_override("trainer.epoch=1").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown config key `trainer.epoch`"), "{msg}");
        assert!(msg.contains("trainer.epochs"), "{msg}");
    }

    #[test]
    fn unknown_file_key_rejected() {
        let err = Config::from_yaml_str("trainer:\n  epochz: 3\n").unwrap_err();
        assert!(err.to_string().contains("epochz"));
    }

    #[test]
    fn numeric_looking_string_stays_string() {
        let mut cfg = Config::full();
        cfg.apply_override("data.root=0007").unwrap();
        assert_eq!(cfg.data.root, "0007");
    }

    #[test]
    fn validation_catches_bad_schedule() {
        let mut cfg = Config::full();
        cfg.trainer.decay_start_epoch = 500;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn validation_catches_empty_selections() {
        let mut cfg = Config::full();
        cfg.losses.use_fake_negatives = false;
        cfg.losses.use_real_negatives = false;
        assert!(cfg.validate().is_err());
    }
}
