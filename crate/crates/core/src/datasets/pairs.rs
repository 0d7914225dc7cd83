//! Paired (rainy, ground-truth) sets for full-reference evaluation.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PairedEvalSet {
    pairs: Vec<(PathBuf, PathBuf)>,
}

impl PairedEvalSet {
    /// Parse a two-column whitespace-separated manifest of
    /// `rainy_path gt_path` lines. Relative paths resolve against the
    /// manifest's directory. Blank lines and `#` comments are ignored.
    pub fn from_manifest(manifest: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let base = manifest.parent().unwrap_or_else(|| Path::new("."));
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (rainy, gt) = match (cols.next(), cols.next(), cols.next()) {
                (Some(r), Some(g), None) => (r, g),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "{}:{}: expected two columns (rainy_path gt_path)",
                        manifest.display(),
                        lineno + 1
                    )))
                }
            };
            let resolve = |p: &str| -> PathBuf {
                let path = Path::new(p);
                if path.is_absolute() { path.to_path_buf() } else { base.join(path) }
            };
            pairs.push((resolve(rainy), resolve(gt)));
        }
        if pairs.is_empty() {
            return Err(Error::EmptyDataset(format!("manifest {} lists no pairs", manifest.display())));
        }
        let set = Self { pairs };
        set.validate_dimensions()?;
        Ok(set)
    }

    pub fn from_pairs(pairs: Vec<(PathBuf, PathBuf)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset("no evaluation pairs".into()));
        }
        let set = Self { pairs };
        set.validate_dimensions()?;
        Ok(set)
    }

    fn validate_dimensions(&self) -> Result<()> {
        for (rainy, gt) in &self.pairs {
            let dims = |p: &Path| -> Result<(u32, u32)> {
                image::ImageReader::open(p)
                    .map_err(image::ImageError::IoError)
                    .and_then(|r| r.with_guessed_format().map_err(image::ImageError::IoError))
                    .and_then(|r| r.into_dimensions())
                    .map_err(|e| Error::image(p, e))
            };
            let (rw, rh) = dims(rainy)?;
            let (gw, gh) = dims(gt)?;
            if (rw, rh) != (gw, gh) {
                return Err(Error::InvalidInput(format!(
                    "pair dimensions differ: {} is {rw}x{rh}, {} is {gw}x{gh}",
                    rainy.display(),
                    gt.display()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(PathBuf, PathBuf)> {
        self.pairs.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::RgbImage;

    #[test]
    fn manifest_parses_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a_rain.png", "a_gt.png"] {
            RgbImage::new(10, 12).save(dir.path().join(name)).unwrap();
        }
        std::fs::write(dir.path().join("m.txt"), "# pairs\na_rain.png a_gt.png\n").unwrap();
        let set = PairedEvalSet::from_manifest(&dir.path().join("m.txt")).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let dir = tempfile::tempdir().unwrap();
        RgbImage::new(10, 10).save(dir.path().join("r.png")).unwrap();
        RgbImage::new(10, 11).save(dir.path().join("g.png")).unwrap();
        std::fs::write(dir.path().join("m.txt"), "r.png g.png\n").unwrap();
        assert!(PairedEvalSet::from_manifest(&dir.path().join("m.txt")).is_err());
    }

    #[test]
    fn empty_manifest_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.txt"), "# nothing\n").unwrap();
        let err = PairedEvalSet::from_manifest(&dir.path().join("m.txt")).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset(_)));
    }
}
