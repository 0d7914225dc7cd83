//! Unpaired rainy/clean image collections.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Two independently sampled image collections. Read-only after
/// construction; listing order is sorted so iteration is reproducible.
#[derive(Debug, Clone)]
pub struct UnpairedDataset {
    rainy: Vec<PathBuf>,
    clean: Vec<PathBuf>,
}

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

impl UnpairedDataset {
    pub fn load(root: &Path, rainy_subdir: &str, clean_subdir: &str) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::Config(format!("data root {} is not a directory", root.display())));
        }
        let rainy = list_images(&root.join(rainy_subdir))?;
        let clean = list_images(&root.join(clean_subdir))?;
        Ok(Self { rainy, clean })
    }

    pub fn num_rainy(&self) -> usize {
        self.rainy.len()
    }

    pub fn num_clean(&self) -> usize {
        self.clean.len()
    }

    pub fn rainy_path(&self, i: usize) -> &Path {
        &self.rainy[i]
    }

    pub fn clean_path(&self, i: usize) -> &Path {
        &self.clean[i]
    }

    /// Steps per epoch under independent sampling: the smaller side's length
    /// divided by the batch size.
    pub fn steps_per_epoch(&self, batch_size: usize) -> usize {
        self.rainy.len().min(self.clean.len()) / batch_size
    }

    /// Shuffle both sides independently and pair them up to the smaller
    /// length. Deterministic given the generator.
    pub fn epoch_pairs(&self, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
        let mut r: Vec<usize> = (0..self.rainy.len()).collect();
        let mut c: Vec<usize> = (0..self.clean.len()).collect();
        r.shuffle(rng);
        c.shuffle(rng);
        r.into_iter().zip(c).collect()
    }
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("image directory {} does not exist", dir.display())));
    }
    let mut candidates: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                .unwrap_or(false)
        })
        .collect();
    candidates.sort();
    if candidates.is_empty() {
        return Err(Error::EmptyDataset(format!("no images in {}", dir.display())));
    }
    let mut valid = Vec::with_capacity(candidates.len());
    for path in candidates {
        match image::ImageReader::open(&path)
            .map_err(image::ImageError::IoError)
            .and_then(|r| r.with_guessed_format().map_err(image::ImageError::IoError))
            .and_then(|r| r.into_dimensions())
        {
            Ok((w, h)) if w > 0 && h > 0 => valid.push(path),
            Ok(_) => log::warn!("skipping degenerate image {}", path.display()),
            Err(e) => log::warn!("skipping undecodable image {}: {e}", path.display()),
        }
    }
    if valid.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "all files in {} were undecodable",
            dir.display()
        )));
    }
    Ok(valid)
}

/// Decode one image from disk.
pub fn load_image(path: &Path) -> Result<image::DynamicImage> {
    image::ImageReader::open(path)
        .map_err(image::ImageError::IoError)
        .and_then(|r| r.with_guessed_format().map_err(image::ImageError::IoError))
        .and_then(|r| r.decode())
        .map_err(|e| Error::image(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHub;
    use image::RgbImage;

    fn write_png(path: &Path, v: u8) {
        RgbImage::from_pixel(8, 8, image::Rgb([v, v, v])).save(path).unwrap();
    }

    fn make_root(rainy: usize, clean: usize) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("rainy")).unwrap();
        std::fs::create_dir(dir.path().join("clean")).unwrap();
        for i in 0..rainy {
            write_png(&dir.path().join(format!("rainy/{i:04}.png")), i as u8);
        }
        for i in 0..clean {
            write_png(&dir.path().join(format!("clean/{i:04}.png")), i as u8);
        }
        dir
    }

    #[test]
    fn counts_pass_through() {
        let root = make_root(3, 5);
        let ds = UnpairedDataset::load(root.path(), "rainy", "clean").unwrap();
        assert_eq!((ds.num_rainy(), ds.num_clean()), (3, 5));
        assert_eq!(ds.steps_per_epoch(1), 3);
    }

    #[test]
    fn missing_directory_is_config_error() {
        let root = make_root(1, 1);
        let err = UnpairedDataset::load(root.path(), "nope", "clean").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn empty_directory_is_empty_dataset_error() {
        let root = make_root(1, 1);
        std::fs::create_dir(root.path().join("empty")).unwrap();
        let err = UnpairedDataset::load(root.path(), "empty", "clean").unwrap_err();
        assert!(matches!(err, Error::EmptyDataset(_)));
    }

    #[test]
    fn undecodable_files_are_skipped_with_warning() {
        let root = make_root(2, 2);
        std::fs::write(root.path().join("rainy/junk.png"), b"not a png").unwrap();
        let ds = UnpairedDataset::load(root.path(), "rainy", "clean").unwrap();
        assert_eq!(ds.num_rainy(), 2);
    }

    #[test]
    fn all_undecodable_is_an_error() {
        let root = make_root(1, 1);
        std::fs::create_dir(root.path().join("bad")).unwrap();
        std::fs::write(root.path().join("bad/a.png"), b"junk").unwrap();
        let err = UnpairedDataset::load(root.path(), "bad", "clean").unwrap_err();
        assert!(matches!(err, Error::EmptyDataset(_)));
    }

    #[test]
    fn epoch_pairs_deterministic_given_seed() {
        let root = make_root(4, 6);
        let ds = UnpairedDataset::load(root.path(), "rainy", "clean").unwrap();
        let hub = RngHub::new(7);
        let a = ds.epoch_pairs(&mut hub.stream("data/e0"));
        let b = ds.epoch_pairs(&mut hub.stream("data/e0"));
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        let c = ds.epoch_pairs(&mut hub.stream("data/e1"));
        assert_ne!(a, c);
    }
}
