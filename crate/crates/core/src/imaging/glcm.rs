//! Gray-level co-occurrence matrices and the Haralick statistics we use:
//! angular second moment, contrast, correlation and entropy.

use serde::{Deserialize, Serialize};

use super::GrayImage;
use crate::error::{Error, Result};

/// Settings shared by every window size: quantization, displacements, symmetry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlcmOptions {
    pub levels: usize,
    /// `(dx, dy)` displacements; pairs from all offsets go into one matrix.
    pub offsets: Vec<(i32, i32)>,
    pub symmetric: bool,
}

impl Default for GlcmOptions {
    fn default() -> Self {
        Self {
            levels: 8,
            // distance 1 at 0, 45, 90 and 135 degrees
            offsets: vec![(1, 0), (1, 1), (0, 1), (-1, 1)],
            symmetric: true,
        }
    }
}

impl GlcmOptions {
    pub fn validate(&self) -> Result<()> {
        if !(2..=256).contains(&self.levels) {
            return Err(Error::config(format!(
                "GLCM levels must lie in 2..=256, got {}",
                self.levels
            )));
        }
        if self.offsets.is_empty() {
            return Err(Error::config("GLCM needs at least one offset"));
        }
        if self.offsets.contains(&(0, 0)) {
            return Err(Error::config("GLCM offset (0, 0) is degenerate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlcmConfig {
    pub options: GlcmOptions,
    /// Odd window side `n`.
    pub window: usize,
}

impl GlcmConfig {
    pub fn new(options: GlcmOptions, window: usize) -> Result<Self> {
        options.validate()?;
        if window < 3 || window % 2 == 0 {
            return Err(Error::config(format!(
                "GLCM window must be odd and at least 3, got {window}"
            )));
        }
        Ok(Self { options, window })
    }

    pub fn levels(&self) -> usize {
        self.options.levels
    }
}

/// Image whose values were reduced to `0..levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedImage {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub values: Vec<u8>,
}

impl QuantizedImage {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }
}

/// Maps `p` to `floor(p * levels / 256)`.
pub fn quantize(image: &GrayImage, levels: usize) -> QuantizedImage {
    assert!((2..=256).contains(&levels), "levels must lie in 2..=256");
    QuantizedImage {
        width: image.width(),
        height: image.height(),
        levels,
        values: image
            .pixels()
            .iter()
            .map(|&p| (p as usize * levels / 256) as u8)
            .collect(),
    }
}

/// Normalized co-occurrence matrix, row-major `levels x levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    matrix: Vec<f64>,
}

impl Glcm {
    /// Normalizes raw pair counts; `counts.len()` must be `levels^2`.
    pub fn from_counts(levels: usize, counts: &[u32]) -> Result<Self> {
        debug_assert_eq!(counts.len(), levels * levels);
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        if total == 0 {
            return Err(Error::contract("no co-occurring pixel pairs in window"));
        }
        let total = total as f64;
        Ok(Self {
            levels,
            matrix: counts.iter().map(|&c| c as f64 / total).collect(),
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.levels + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.matrix
    }
}

/// Adds pair counts for every offset over the `w x h` window anchored at
/// `(x0, y0)` in `src`.
fn accumulate_pairs(
    src: &QuantizedImage,
    (x0, y0, w, h): (usize, usize, usize, usize),
    options: &GlcmOptions,
    counts: &mut [u32],
) {
    let g = options.levels;
    for &(dx, dy) in &options.offsets {
        for y in 0..h as i64 {
            let ny = y + dy as i64;
            if ny < 0 || ny >= h as i64 {
                continue;
            }
            for x in 0..w as i64 {
                let nx = x + dx as i64;
                if nx < 0 || nx >= w as i64 {
                    continue;
                }
                let a = src.get(x0 + x as usize, y0 + y as usize) as usize;
                let b = src.get(x0 + nx as usize, y0 + ny as usize) as usize;
                counts[a * g + b] += 1;
                if options.symmetric {
                    counts[b * g + a] += 1;
                }
            }
        }
    }
}

/// Co-occurrence matrix of a whole (quantized) window.
pub fn compute_glcm(window: &QuantizedImage, cfg: &GlcmConfig) -> Result<Glcm> {
    let g = cfg.levels();
    if window.levels != g {
        return Err(Error::contract(format!(
            "window quantized to {} levels, config expects {g}",
            window.levels
        )));
    }
    if window.values.iter().any(|&v| v as usize >= g) {
        return Err(Error::contract("window value exceeds the gray-level count"));
    }
    let mut counts = vec![0u32; g * g];
    accumulate_pairs(
        window,
        (0, 0, window.width, window.height),
        &cfg.options,
        &mut counts,
    );
    Glcm::from_counts(g, &counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HaralickVector {
    pub asm: f64,
    pub contrast: f64,
    pub correlation: f64,
    /// In bits.
    pub entropy: f64,
}

impl HaralickVector {
    pub fn to_array(self) -> [f64; 4] {
        [self.asm, self.contrast, self.correlation, self.entropy]
    }

    /// Rescales each feature to `[0, 1]` for `levels` gray levels.
    pub fn normalized(self, levels: usize) -> [f64; 4] {
        let g = levels as f64;
        [
            self.asm,
            self.contrast / ((g - 1.0) * (g - 1.0)),
            (self.correlation + 1.0) / 2.0,
            self.entropy / (2.0 * g.log2()),
        ]
    }
}

pub fn haralick(glcm: &Glcm) -> HaralickVector {
    let g = glcm.levels;
    let p = &glcm.matrix;

    let mut asm = 0.0;
    let mut contrast = 0.0;
    let mut entropy = 0.0;
    let mut mu_x = 0.0;
    let mut mu_y = 0.0;
    for i in 0..g {
        for j in 0..g {
            let v = p[i * g + j];
            if v == 0.0 {
                continue;
            }
            asm += v * v;
            let d = i as f64 - j as f64;
            contrast += d * d * v;
            entropy -= v * v.log2();
            mu_x += i as f64 * v;
            mu_y += j as f64 * v;
        }
    }

    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for i in 0..g {
        for j in 0..g {
            let v = p[i * g + j];
            if v == 0.0 {
                continue;
            }
            let di = i as f64 - mu_x;
            let dj = j as f64 - mu_y;
            var_x += di * di * v;
            var_y += dj * dj * v;
            cov += di * dj * v;
        }
    }
    let denom = (var_x * var_y).sqrt();
    // Degenerate marginals (a single occupied row or column) carry no correlation.
    let correlation = if denom > 1e-12 {
        (cov / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    };

    HaralickVector {
        asm,
        contrast,
        correlation,
        entropy: entropy.max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn window(size: usize, levels: usize, values: Vec<u8>) -> QuantizedImage {
        QuantizedImage {
            width: size,
            height: size,
            levels,
            values,
        }
    }

    fn counts_glcm(levels: usize, entries: &[(usize, usize, u32)]) -> Glcm {
        let mut counts = vec![0; levels * levels];
        for &(i, j, c) in entries {
            counts[i * levels + j] = c;
        }
        Glcm::from_counts(levels, &counts).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let img = GrayImage::new(4, 1, vec![0, 255, 128, 31]).unwrap();
        let q = quantize(&img, 8);
        assert_eq!(q.values, vec![0, 7, 4, 0]);
    }

    #[test]
    fn constant_window_is_a_single_entry() {
        let cfg = GlcmConfig::new(GlcmOptions::default(), 9).unwrap();
        let glcm = compute_glcm(&window(9, 8, vec![5; 81]), &cfg).unwrap();
        assert_eq!(glcm.get(5, 5), 1.0);
        assert_eq!(glcm.entries().iter().filter(|&&v| v > 0.0).count(), 1);
        let h = haralick(&glcm);
        assert_eq!(h.asm, 1.0);
        assert_eq!(h.contrast, 0.0);
        assert_eq!(h.correlation, 0.0);
        assert_eq!(h.entropy, 0.0);
    }

    #[test]
    fn checkerboard_horizontal_pairs() {
        let options = GlcmOptions {
            levels: 2,
            offsets: vec![(1, 0)],
            symmetric: true,
        };
        let cfg = GlcmConfig { options, window: 2 };
        let glcm = compute_glcm(&window(2, 2, vec![0, 1, 1, 0]), &cfg).unwrap();
        assert_eq!(glcm.entries(), &[0.0, 0.5, 0.5, 0.0]);
        let h = haralick(&glcm);
        assert!((h.contrast - 1.0).abs() < 1e-12);
        assert!((h.correlation + 1.0).abs() < 1e-12);
        assert!((h.asm - 0.5).abs() < 1e-12);
        assert!((h.entropy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn off_diagonal_single_entry() {
        let h = haralick(&counts_glcm(8, &[(2, 5, 7)]));
        assert_eq!(h.asm, 1.0);
        assert_eq!(h.contrast, 9.0);
        assert_eq!(h.entropy, 0.0);
        assert_eq!(h.correlation, 0.0);
    }

    #[test]
    fn uniform_glcm() {
        let counts = vec![1u32; 64];
        let h = haralick(&Glcm::from_counts(8, &counts).unwrap());
        assert!((h.asm - 1.0 / 64.0).abs() < 1e-15);
        assert!((h.entropy - 6.0).abs() < 1e-12);
        assert!(h.correlation.abs() < 1e-12);
    }

    #[test]
    fn too_small_window_has_no_pairs() {
        let options = GlcmOptions {
            levels: 2,
            offsets: vec![(0, 1)],
            symmetric: true,
        };
        let cfg = GlcmConfig { options, window: 3 };
        let one_row = QuantizedImage {
            width: 3,
            height: 1,
            levels: 2,
            values: vec![0, 1, 0],
        };
        assert!(matches!(compute_glcm(&one_row, &cfg), Err(Error::Contract(_))));
    }

    #[test]
    fn config_validation() {
        assert!(GlcmConfig::new(GlcmOptions::default(), 8).is_err());
        assert!(GlcmConfig::new(GlcmOptions::default(), 1).is_err());
        let bad = GlcmOptions {
            levels: 1,
            ..GlcmOptions::default()
        };
        assert!(GlcmConfig::new(bad, 9).is_err());
    }

    proptest! {
        #[test]
        fn random_windows_obey_invariants(
            levels in 2usize..=16,
            size in 3usize..12,
            seed in any::<u64>(),
            symmetric in any::<bool>(),
        ) {
            let mut state = seed | 1;
            let values = (0..size * size).map(|_| {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                (state % levels as u64) as u8
            }).collect();
            let options = GlcmOptions { levels, symmetric, ..GlcmOptions::default() };
            let cfg = GlcmConfig { options, window: size };
            let glcm = compute_glcm(&window(size, levels, values), &cfg).unwrap();
            let sum: f64 = glcm.entries().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(glcm.entries().iter().all(|&v| v >= 0.0));
            if symmetric {
                for i in 0..levels {
                    for j in 0..levels {
                        prop_assert_eq!(glcm.get(i, j), glcm.get(j, i));
                    }
                }
            }
            let h = haralick(&glcm);
            let g = levels as f64;
            prop_assert!(h.asm > 0.0 && h.asm <= 1.0);
            prop_assert!(h.contrast >= 0.0 && h.contrast <= (g - 1.0) * (g - 1.0));
            prop_assert!((-1.0..=1.0).contains(&h.correlation));
            prop_assert!(h.entropy >= 0.0 && h.entropy <= 2.0 * g.log2() + 1e-12);
            for v in h.normalized(levels) {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }
}
