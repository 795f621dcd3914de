//! Dense per-pixel Haralick features over a sliding `n x n` window.
//!
//! The quantized image is mirror-padded by `n / 2` so every pixel has a full
//! window. Each row keeps one pair histogram per offset and slides it one
//! column at a time, so the cost per pixel is linear in `n` rather than
//! quadratic.

use std::fs;
use std::io::Write;
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{compute_glcm, haralick, quantize, reflect, Glcm, GlcmConfig, GrayImage, QuantizedImage};
use crate::error::Result;

pub const CHANNEL_NAMES: [&str; 4] = ["asm", "contrast", "correlation", "entropy"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    levels: usize,
    /// `[asm, contrast, correlation, entropy]` per pixel, row-major.
    pixels: Vec<[f64; 4]>,
}

impl FeatureMap {
    pub fn from_pixels(width: usize, height: usize, levels: usize, pixels: Vec<[f64; 4]>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(crate::error::Error::contract("feature map size does not match its dimensions"));
        }
        Ok(Self {
            width,
            height,
            levels,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn pixels(&self) -> &[[f64; 4]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 4] {
        self.pixels[y * self.width + x]
    }

    pub fn channel(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.pixels.iter().map(move |p| p[c])
    }

    /// Pixel features rescaled to `[0, 1]` (see [`super::HaralickVector::normalized`]).
    pub fn normalized(&self, index: usize) -> [f64; 4] {
        let [asm, contrast, correlation, entropy] = self.pixels[index];
        super::HaralickVector {
            asm,
            contrast,
            correlation,
            entropy,
        }
        .normalized(self.levels)
    }

    /// Writes one CSV file per channel (`asm.csv`, ...) into `dir`.
    pub fn write_csv_planes(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (c, name) in CHANNEL_NAMES.iter().enumerate() {
            let mut out = Vec::new();
            for row in self.pixels.chunks(self.width) {
                let line: Vec<String> = row.iter().map(|p| format!("{}", p[c])).collect();
                writeln!(out, "{}", line.join(","))?;
            }
            fs::write(dir.join(format!("{name}.csv")), out)?;
        }
        Ok(())
    }
}

fn pad(q: &QuantizedImage, half: usize) -> QuantizedImage {
    let width = q.width + 2 * half;
    let height = q.height + 2 * half;
    let mut values = Vec::with_capacity(width * height);
    for y in 0..height {
        let sy = reflect(y as isize - half as isize, q.height);
        for x in 0..width {
            let sx = reflect(x as isize - half as isize, q.width);
            values.push(q.get(sx, sy));
        }
    }
    QuantizedImage {
        width,
        height,
        levels: q.levels,
        values,
    }
}

struct OffsetPlane {
    /// Anchor range within a window, relative to its top-left corner.
    x_range: (usize, usize),
    y_range: (usize, usize),
    /// Pair code `a * levels + b` at each anchor of the padded image.
    codes: Vec<u16>,
}

fn offset_planes(padded: &QuantizedImage, cfg: &GlcmConfig) -> Vec<OffsetPlane> {
    let n = cfg.window as i64;
    let g = cfg.levels();
    cfg.options
        .offsets
        .iter()
        .filter_map(|&(dx, dy)| {
            let (dx, dy) = (dx as i64, dy as i64);
            let x_range = ((-dx).max(0), n - 1 - dx.max(0));
            let y_range = ((-dy).max(0), n - 1 - dy.max(0));
            // offset longer than the window: no pairs
            if x_range.0 > x_range.1 || y_range.0 > y_range.1 {
                return None;
            }
            let mut codes = vec![0u16; padded.values.len()];
            for y in 0..padded.height as i64 {
                for x in 0..padded.width as i64 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= padded.width as i64 || ny >= padded.height as i64 {
                        continue;
                    }
                    let a = padded.get(x as usize, y as usize) as usize;
                    let b = padded.get(nx as usize, ny as usize) as usize;
                    codes[y as usize * padded.width + x as usize] = (a * g + b) as u16;
                }
            }
            Some(OffsetPlane {
                x_range: (x_range.0 as usize, x_range.1 as usize),
                y_range: (y_range.0 as usize, y_range.1 as usize),
                codes,
            })
        })
        .collect()
}

fn row_features(
    y: usize,
    width: usize,
    padded: &QuantizedImage,
    planes: &[OffsetPlane],
    cfg: &GlcmConfig,
    out: &mut [[f64; 4]],
) -> Result<()> {
    let g = cfg.levels();
    let pw = padded.width;
    let mut hists: Vec<Vec<u32>> = vec![vec![0u32; g * g]; planes.len()];
    for (plane, hist) in planes.iter().zip(hists.iter_mut()) {
        for ay in y + plane.y_range.0..=y + plane.y_range.1 {
            for ax in plane.x_range.0..=plane.x_range.1 {
                hist[plane.codes[ay * pw + ax] as usize] += 1;
            }
        }
    }
    let mut counts = vec![0u32; g * g];
    for (x, slot) in out.iter_mut().enumerate().take(width) {
        if x > 0 {
            for (plane, hist) in planes.iter().zip(hists.iter_mut()) {
                let leaving = x - 1 + plane.x_range.0;
                let entering = x + plane.x_range.1;
                for ay in y + plane.y_range.0..=y + plane.y_range.1 {
                    hist[plane.codes[ay * pw + leaving] as usize] -= 1;
                    hist[plane.codes[ay * pw + entering] as usize] += 1;
                }
            }
        }
        counts.fill(0);
        for hist in &hists {
            for (c, &h) in counts.iter_mut().zip(hist) {
                *c += h;
            }
        }
        if cfg.options.symmetric {
            for i in 0..g {
                for j in i..g {
                    let s = counts[i * g + j] + counts[j * g + i];
                    counts[i * g + j] = s;
                    counts[j * g + i] = s;
                }
            }
        }
        *slot = haralick(&Glcm::from_counts(g, &counts)?).to_array();
    }
    Ok(())
}

/// Haralick features of the `cfg.window`-sized window centred on every pixel.
pub fn feature_map(image: &GrayImage, cfg: &GlcmConfig) -> Result<FeatureMap> {
    let q = quantize(image, cfg.levels());
    let padded = pad(&q, cfg.window / 2);
    let planes = offset_planes(&padded, cfg);
    let (width, height) = (image.width(), image.height());
    let mut pixels = vec![[0.0; 4]; width * height];

    #[cfg(feature = "parallel")]
    let rows = pixels.par_chunks_mut(width);
    #[cfg(not(feature = "parallel"))]
    let rows = pixels.chunks_mut(width);

    rows.enumerate()
        .try_for_each(|(y, row)| row_features(y, width, &padded, &planes, cfg, row))?;

    Ok(FeatureMap {
        width,
        height,
        levels: cfg.levels(),
        pixels,
    })
}

/// Reference implementation: cut each window out and run
/// [`compute_glcm`] + [`haralick`] on it directly.
pub fn feature_map_naive(image: &GrayImage, cfg: &GlcmConfig) -> Result<FeatureMap> {
    let q = quantize(image, cfg.levels());
    let padded = pad(&q, cfg.window / 2);
    let mut pixels = Vec::with_capacity(image.width() * image.height());
    for y in 0..image.height() {
        for x in 0..image.width() {
            pixels.push(haralick(&window_glcm(&padded, x, y, cfg)?).to_array());
        }
    }
    Ok(FeatureMap {
        width: image.width(),
        height: image.height(),
        levels: cfg.levels(),
        pixels,
    })
}

fn window_glcm(padded: &QuantizedImage, x: usize, y: usize, cfg: &GlcmConfig) -> Result<Glcm> {
    let n = cfg.window;
    let values = (0..n)
        .flat_map(|dy| (0..n).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| padded.get(x + dx, y + dy))
        .collect();
    compute_glcm(
        &QuantizedImage {
            width: n,
            height: n,
            levels: padded.levels,
            values,
        },
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::GlcmOptions;

    fn cfg(window: usize) -> GlcmConfig {
        GlcmConfig::new(GlcmOptions::default(), window).unwrap()
    }

    fn noise(width: usize, height: usize, seed: u64) -> GrayImage {
        let mut s = seed | 1;
        GrayImage::from_fn(width, height, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 24) as u8
        })
        .unwrap()
    }

    #[test]
    fn constant_image_features() {
        let img = GrayImage::filled(20, 15, 77).unwrap();
        let fm = feature_map(&img, &cfg(9)).unwrap();
        for p in fm.pixels() {
            assert_eq!(*p, [1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn tiny_images_are_padded() {
        let img = GrayImage::filled(1, 1, 200).unwrap();
        let fm = feature_map(&img, &cfg(21)).unwrap();
        assert_eq!(fm.pixels(), &[[1.0, 0.0, 0.0, 0.0]]);
    }

    #[test]
    fn half_images_match_constant_windows_away_from_seam() {
        let img = GrayImage::from_fn(40, 20, |x, _| if x < 20 { 10 } else { 240 }).unwrap();
        let fm = feature_map(&img, &cfg(9)).unwrap();
        for y in 0..20 {
            for x in (0..15).chain(25..40) {
                assert_eq!(fm.get(x, y), [1.0, 0.0, 0.0, 0.0], "({x},{y})");
            }
        }
        assert_ne!(fm.get(19, 10), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sliding_matches_naive_windows() {
        for (seed, window) in [(3u64, 3usize), (11, 5), (29, 9)] {
            let img = noise(16, 16, seed);
            let fast = feature_map(&img, &cfg(window)).unwrap();
            let slow = feature_map_naive(&img, &cfg(window)).unwrap();
            assert_eq!(fast, slow);
            // and through the public single-window route
            let q = quantize(&img, 8);
            let padded = pad(&q, window / 2);
            for (y, x) in [(0, 0), (7, 3), (15, 15)] {
                let h = haralick(&window_glcm(&padded, x, y, &cfg(window)).unwrap());
                let got = fast.get(x, y);
                for c in 0..4 {
                    assert!((h.to_array()[c] - got[c]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn asymmetric_and_one_sided_offsets_match_naive() {
        let options = GlcmOptions {
            levels: 5,
            offsets: vec![(2, -1), (0, 3)],
            symmetric: false,
        };
        let cfg = GlcmConfig::new(options, 7).unwrap();
        let img = noise(13, 9, 5);
        assert_eq!(feature_map(&img, &cfg).unwrap(), feature_map_naive(&img, &cfg).unwrap());
    }

    #[test]
    fn periodic_texture_repeats_its_features() {
        let period = 6;
        let img = GrayImage::from_fn(48, 48, |x, y| ((x % period) * 40 + (y % 3) * 10) as u8).unwrap();
        let fm = feature_map(&img, &cfg(9)).unwrap();
        for y in 5..43 {
            for x in 5..(43 - period) {
                let (pa, pb) = (fm.get(x, y), fm.get(x + period, y));
                for c in 0..4 {
                    assert!((pa[c] - pb[c]).abs() < 1e-9);
                }
            }
        }
    }
}
