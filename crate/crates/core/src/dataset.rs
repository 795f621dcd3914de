//! Ground-truth samples: a seeded generator of textured images with one
//! injected textured disc, and a loader for `img_NNN.pgm` /
//! `img_NNN_mask.pgm` directories.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::write_atomic;
use crate::imaging::{read_pgm, write_pgm, BinaryMask, GrayImage};
use crate::segmenter::connected_components;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub image: GrayImage,
    pub mask: BinaryMask,
}

impl Sample {
    /// Checks that `mask` matches the image and holds exactly one
    /// 8-connected object.
    pub fn new(id: impl Into<String>, image: GrayImage, mask: BinaryMask) -> Result<Self> {
        let id = id.into();
        if !mask.same_shape(image.width(), image.height()) {
            return Err(Error::dataset(format!(
                "{id}: mask is {}x{}, image is {}x{}",
                mask.width(),
                mask.height(),
                image.width(),
                image.height()
            )));
        }
        match connected_components(&mask).len() {
            1 => Ok(Self { id, image, mask }),
            0 => Err(Error::dataset(format!("{id}: mask is empty"))),
            n => Err(Error::dataset(format!(
                "{id}: mask has {n} separate objects, expected one"
            ))),
        }
    }
}

/// Oriented sinusoidal grating; frequencies in cycles per pixel, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextureSpec {
    pub frequency: (f64, f64),
    pub angle: (f64, f64),
    /// Peak deviation from mid-gray.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub count: usize,
    pub width: usize,
    pub height: usize,
    /// Inclusive disc radius range in pixels.
    pub radius: (usize, usize),
    /// Minimum gap between the disc and the image border.
    pub margin: usize,
    pub background: TextureSpec,
    pub disc: TextureSpec,
    /// Uniform noise in `[-noise, noise]` added to every pixel.
    pub noise: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            count: 30,
            width: 128,
            height: 128,
            radius: (16, 28),
            margin: 10,
            background: TextureSpec {
                frequency: (0.092, 0.095),
                angle: (125.0, 185.0),
                amplitude: 100.0,
            },
            disc: TextureSpec {
                frequency: (0.33, 0.37),
                angle: (115.0, 175.0),
                amplitude: 60.0,
            },
            noise: 30.0,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    /// Scaled-down task: 64x64 images, correspondingly smaller discs.
    pub fn small(count: usize, seed: u64) -> Self {
        Self {
            count,
            width: 64,
            height: 64,
            radius: (14, 20),
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (rmin, rmax) = self.radius;
        if rmin == 0 || rmin > rmax {
            return Err(Error::config(format!("invalid radius range {rmin}..={rmax}")));
        }
        let need = 2 * (rmax + self.margin) + 1;
        if need > self.width || need > self.height {
            return Err(Error::config(format!(
                "disc of radius {rmax} with margin {} needs {need}x{need} pixels, image is {}x{}",
                self.margin, self.width, self.height
            )));
        }
        for (name, t) in [("background", &self.background), ("disc", &self.disc)] {
            if !(t.frequency.0 <= t.frequency.1 && t.angle.0 <= t.angle.1 && t.frequency.0 >= 0.0) {
                return Err(Error::config(format!("{name} texture has an empty range")));
            }
        }
        if !(self.noise >= 0.0) {
            return Err(Error::config("noise amplitude must be non-negative"));
        }
        Ok(())
    }
}

struct Grating {
    kx: f64,
    ky: f64,
    phase: f64,
    amplitude: f64,
}

impl Grating {
    fn draw(spec: &TextureSpec, rng: &mut ChaCha8Rng) -> Self {
        let f = uniform(rng, spec.frequency);
        let theta = uniform(rng, spec.angle).to_radians();
        Self {
            kx: 2.0 * PI * f * theta.cos(),
            ky: 2.0 * PI * f * theta.sin(),
            phase: rng.gen_range(0.0..2.0 * PI),
            amplitude: spec.amplitude,
        }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.amplitude * (self.kx * x as f64 + self.ky * y as f64 + self.phase).sin()
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo < hi {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

pub fn sample_id(index: usize) -> String {
    format!("img_{index:03}")
}

/// One sample; each index draws from its own ChaCha stream of `cfg.seed`.
pub fn generate_sample(cfg: &SyntheticConfig, index: usize) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let r = rng.gen_range(cfg.radius.0..=cfg.radius.1);
    let lo = r + cfg.margin;
    let cx = rng.gen_range(lo..=cfg.width - 1 - lo) as i64;
    let cy = rng.gen_range(lo..=cfg.height - 1 - lo) as i64;
    let background = Grating::draw(&cfg.background, &mut rng);
    let disc = Grating::draw(&cfg.disc, &mut rng);

    let r2 = (r * r) as i64;
    let inside = |x: usize, y: usize| {
        let (dx, dy) = (x as i64 - cx, y as i64 - cy);
        dx * dx + dy * dy <= r2
    };
    let mask = BinaryMask::from_fn(cfg.width, cfg.height, inside);
    let image = GrayImage::from_fn(cfg.width, cfg.height, |x, y| {
        let texture = if inside(x, y) { &disc } else { &background };
        let noise = if cfg.noise > 0.0 {
            rng.gen_range(-cfg.noise..=cfg.noise)
        } else {
            0.0
        };
        (128.0 + texture.at(x, y) + noise).round().clamp(0.0, 255.0) as u8
    })?;
    Sample::new(sample_id(index), image, mask)
}

pub fn generate_dataset(cfg: &SyntheticConfig) -> Result<Vec<Sample>> {
    cfg.validate()?;
    (0..cfg.count).map(|i| generate_sample(cfg, i)).collect()
}

/// Writes `<id>.pgm` and `<id>_mask.pgm` per sample.
pub fn save_dataset(dir: &Path, samples: &[Sample]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    for s in samples {
        write_atomic(&dir.join(format!("{}.pgm", s.id)), &write_pgm(&s.image))?;
        write_atomic(
            &dir.join(format!("{}_mask.pgm", s.id)),
            &write_pgm(&s.mask.to_gray()),
        )?;
    }
    Ok(())
}

pub fn read_pgm_file(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    read_pgm(&bytes).map_err(|e| e.in_file(path))
}

/// Loads every `<id>.pgm` / `<id>_mask.pgm` pair in `dir`, sorted by id.
pub fn load_dataset(dir: &Path) -> Result<Vec<Sample>> {
    let mut images = BTreeMap::new();
    let mut masks = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::from(e).in_file(dir))?;
    for entry in entries {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_suffix(".pgm") else {
            continue;
        };
        match stem.strip_suffix("_mask") {
            Some(id) => masks.insert(id.to_string(), path.clone()),
            None => images.insert(stem.to_string(), path.clone()),
        };
    }
    if let Some(orphan) = masks.keys().find(|id| !images.contains_key(*id)) {
        return Err(Error::dataset(format!("mask {orphan}_mask.pgm has no image")).in_file(dir));
    }
    let mut samples = Vec::with_capacity(images.len());
    for (id, image_path) in images {
        let mask_path = masks.get(&id).ok_or_else(|| {
            Error::dataset(format!("image {id}.pgm has no {id}_mask.pgm")).in_file(&image_path)
        })?;
        let image = read_pgm_file(&image_path)?;
        let mask = BinaryMask::from_gray(&read_pgm_file(mask_path)?);
        samples.push(Sample::new(id, image, mask).map_err(|e| e.in_file(mask_path))?);
    }
    if samples.is_empty() {
        log::warn!("no samples found in {}", dir.display());
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{feature_map, GlcmConfig, GlcmOptions};

    #[test]
    fn empty_and_deterministic() {
        let cfg = SyntheticConfig { count: 0, ..SyntheticConfig::default() };
        assert!(generate_dataset(&cfg).unwrap().is_empty());
        let cfg = SyntheticConfig { count: 3, ..SyntheticConfig::default() };
        assert_eq!(generate_dataset(&cfg).unwrap(), generate_dataset(&cfg).unwrap());
        let other = SyntheticConfig { seed: 43, ..cfg.clone() };
        assert_ne!(generate_dataset(&cfg).unwrap(), generate_dataset(&other).unwrap());
    }

    #[test]
    fn prefix_stability() {
        // sample i does not depend on how many samples are requested
        let few = generate_dataset(&SyntheticConfig { count: 2, ..SyntheticConfig::default() }).unwrap();
        let many = generate_dataset(&SyntheticConfig { count: 5, ..SyntheticConfig::default() }).unwrap();
        assert_eq!(few[..], many[..2]);
    }

    #[test]
    fn masks_are_exact_discs() {
        let cfg = SyntheticConfig { count: 8, ..SyntheticConfig::default() };
        for s in generate_dataset(&cfg).unwrap() {
            let (x0, y0, x1, y1) = s.mask.bbox().unwrap();
            // odd-width bbox centred on an integer centre
            let (cx, cy) = ((x0 + x1) as i64 / 2, (y0 + y1) as i64 / 2);
            let r = (x1 - x0) as i64 / 2;
            assert!(r as usize >= cfg.radius.0 && r as usize <= cfg.radius.1);
            assert!(x0 >= cfg.margin && x1 + cfg.margin < cfg.width);
            for y in 0..cfg.height {
                for x in 0..cfg.width {
                    let (dx, dy) = (x as i64 - cx, y as i64 - cy);
                    assert_eq!(s.mask.get(x, y), dx * dx + dy * dy <= r * r);
                }
            }
        }
    }

    #[test]
    fn infeasible_geometry() {
        let cfg = SyntheticConfig { width: 40, ..SyntheticConfig::default() };
        assert!(matches!(generate_dataset(&cfg), Err(Error::Config(_))));
        let cfg = SyntheticConfig { radius: (10, 5), ..SyntheticConfig::default() };
        assert!(generate_dataset(&cfg).is_err());
    }

    #[test]
    fn disc_contrast_is_separable() {
        // Mean window contrast inside the disc vs outside, in pooled-std units.
        let cfg = SyntheticConfig::default();
        let samples = generate_dataset(&cfg).unwrap();
        let glcm = GlcmConfig::new(GlcmOptions::default(), 13).unwrap();
        let mut separated = 0;
        for s in &samples {
            let fm = feature_map(&s.image, &glcm).unwrap();
            let (mut inside, mut outside) = (Vec::new(), Vec::new());
            for (i, p) in fm.pixels().iter().enumerate() {
                if s.mask.bits()[i] {
                    inside.push(p[1]);
                } else {
                    outside.push(p[1]);
                }
            }
            let stats = |v: &[f64]| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64)
            };
            let ((mi, vi), (mo, vo)) = (stats(&inside), stats(&outside));
            let pooled = ((vi + vo) / 2.0).sqrt();
            if (mi - mo).abs() > 0.5 * pooled {
                separated += 1;
            }
        }
        assert!(separated * 10 >= samples.len() * 9, "{separated}/{}", samples.len());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_dataset(dir.path()).unwrap().is_empty());
        let samples = generate_dataset(&SyntheticConfig::small(3, 5)).unwrap();
        save_dataset(dir.path(), &samples).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), samples);
    }

    #[test]
    fn loader_rejects_orphans_and_bad_masks() {
        let dir = tempfile::tempdir().unwrap();
        let samples = generate_dataset(&SyntheticConfig::small(1, 5)).unwrap();
        fs::write(dir.path().join("img_000.pgm"), write_pgm(&samples[0].image)).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("img_000"), "{err}");

        // two blobs in the mask
        let two = BinaryMask::from_fn(64, 64, |x, y| (y == 5 || y == 50) && x < 10);
        fs::write(dir.path().join("img_000_mask.pgm"), write_pgm(&two.to_gray())).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("img_000"), "{err}");

        fs::remove_file(dir.path().join("img_000.pgm")).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("img_000_mask"), "{err}");
    }
}
