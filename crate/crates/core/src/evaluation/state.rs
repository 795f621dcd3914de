//! Image-state features and their discretization into Q-table keys.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, FeatureMap};
use crate::qlearn::StateKey;

/// Descriptor of a segmentation result.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateFeatures {
    /// Number of objects.
    pub x1: f64,
    /// Object area over image area.
    pub x2: f64,
    /// Object area over reference area.
    pub x3: f64,
    /// Mean normalized texture over the object.
    pub x4: f64,
}

/// Per-channel mean of the `[0, 1]`-normalized Haralick features over `mask`.
pub fn region_texture(mask: &BinaryMask, fm: &FeatureMap) -> Option<[f64; 4]> {
    let mut sum = [0.0; 4];
    let mut n = 0usize;
    for (i, _) in mask.bits().iter().enumerate().filter(|(_, &b)| b) {
        let v = fm.normalized(i);
        for c in 0..4 {
            sum[c] += v[c];
        }
        n += 1;
    }
    (n > 0).then(|| sum.map(|s| s / n as f64))
}

pub fn featurize(
    object: &BinaryMask,
    count: usize,
    fm: &FeatureMap,
    reference: &BinaryMask,
) -> Result<StateFeatures> {
    let (w, h) = (fm.width(), fm.height());
    if !object.same_shape(w, h) || !reference.same_shape(w, h) {
        return Err(Error::contract("object, reference and feature map differ in size"));
    }
    let ref_area = reference.area();
    if ref_area == 0 {
        return Err(Error::dataset("reference mask is empty"));
    }
    let x1 = count as f64;
    let Some(texture) = region_texture(object, fm) else {
        return Ok(StateFeatures {
            x1,
            ..StateFeatures::default()
        });
    };
    let area = object.area() as f64;
    Ok(StateFeatures {
        x1,
        x2: area / (w * h) as f64,
        x3: area / ref_area as f64,
        x4: texture.iter().sum::<f64>() / 4.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizerConfig {
    /// Object-count bins `0, 1, ..., n - 2, >= n - 1`.
    pub count_bins: usize,
    pub image_ratio_bins: usize,
    pub reference_ratio_bins: usize,
    /// Upper edge of the reference-ratio range; larger values fall into the top bin.
    pub reference_ratio_max: f64,
    pub texture_bins: usize,
}

impl Default for DiscretizerConfig {
    fn default() -> Self {
        Self {
            count_bins: 5,
            image_ratio_bins: 8,
            reference_ratio_bins: 8,
            reference_ratio_max: 2.0,
            texture_bins: 8,
        }
    }
}

impl DiscretizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bins = [
            self.count_bins,
            self.image_ratio_bins,
            self.reference_ratio_bins,
            self.texture_bins,
        ];
        if bins.iter().any(|&b| b == 0 || b > 256) {
            return Err(Error::config("discretizer bin counts must lie in 1..=256"));
        }
        if !(self.reference_ratio_max > 0.0) {
            return Err(Error::config("reference_ratio_max must be positive"));
        }
        Ok(())
    }

    /// Number of distinct non-start keys.
    pub fn key_space(&self) -> usize {
        self.count_bins * self.image_ratio_bins * self.reference_ratio_bins * self.texture_bins
    }
}

/// Uniform bins over `[0, max]`; the top bin is closed and absorbs overflow.
fn uniform_bin(value: f64, max: f64, bins: usize) -> u8 {
    if !(value > 0.0) {
        return 0;
    }
    let b = (value / max * bins as f64).floor() as usize;
    b.min(bins - 1) as u8
}

pub fn discretize(f: &StateFeatures, cfg: &DiscretizerConfig) -> StateKey {
    let count = (f.x1.max(0.0).round() as usize).min(cfg.count_bins - 1) as u8;
    StateKey::Bins([
        count,
        uniform_bin(f.x2, 1.0, cfg.image_ratio_bins),
        uniform_bin(f.x3, cfg.reference_ratio_max, cfg.reference_ratio_bins),
        uniform_bin(f.x4, 1.0, cfg.texture_bins),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{feature_map, GlcmConfig, GlcmOptions, GrayImage};
    use proptest::prelude::*;

    fn constant_fm(w: usize, h: usize) -> FeatureMap {
        let img = GrayImage::filled(w, h, 100).unwrap();
        feature_map(&img, &GlcmConfig::new(GlcmOptions::default(), 9).unwrap()).unwrap()
    }

    #[test]
    fn identical_object_and_reference() {
        let fm = constant_fm(128, 128);
        let mask = BinaryMask::from_fn(128, 128, |x, y| x < 10 && y < 10);
        let f = featurize(&mask, 1, &fm, &mask).unwrap();
        assert_eq!(f.x1, 1.0);
        assert_eq!(f.x2, 100.0 / 16384.0);
        assert_eq!(f.x3, 1.0);
        // constant texture: asm 1, contrast 0, correlation 0 -> 0.5, entropy 0
        assert_eq!(f.x4, 0.375);
    }

    #[test]
    fn empty_object() {
        let fm = constant_fm(16, 16);
        let reference = BinaryMask::from_fn(16, 16, |x, _| x < 4);
        let f = featurize(&BinaryMask::empty(16, 16), 3, &fm, &reference).unwrap();
        assert_eq!(f, StateFeatures { x1: 3.0, x2: 0.0, x3: 0.0, x4: 0.0 });
    }

    #[test]
    fn featurize_contracts() {
        let fm = constant_fm(16, 16);
        let m = BinaryMask::from_fn(16, 16, |x, _| x < 4);
        assert!(matches!(featurize(&m, 1, &fm, &BinaryMask::empty(16, 16)), Err(Error::Dataset(_))));
        assert!(matches!(
            featurize(&BinaryMask::empty(8, 16), 1, &fm, &m),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn discretize_examples() {
        let cfg = DiscretizerConfig::default();
        assert_eq!(cfg.key_space(), 2560);
        assert_eq!(discretize(&StateFeatures::default(), &cfg), StateKey::Bins([0, 0, 0, 0]));
        let f = StateFeatures { x1: 9.0, x2: 1.0, x3: 5.0, x4: 0.999 };
        assert_eq!(discretize(&f, &cfg), StateKey::Bins([4, 7, 7, 7]));
        let f = StateFeatures { x1: 2.0, x2: 0.125, x3: 1.0, x4: 0.3 };
        assert_eq!(discretize(&f, &cfg), StateKey::Bins([2, 1, 4, 2]));
    }

    proptest! {
        #[test]
        fn discretize_is_total_and_bin_stable(
            x1 in 0u32..20, x2 in 0.0f64..=1.0, x3 in 0.0f64..10.0, x4 in 0.0f64..=1.0,
        ) {
            let cfg = DiscretizerConfig::default();
            let f = StateFeatures { x1: x1 as f64, x2, x3, x4 };
            let StateKey::Bins(b) = discretize(&f, &cfg) else { panic!("start key") };
            prop_assert!(b[0] < 5 && b[1] < 8 && b[2] < 8 && b[3] < 8);
            // moving to the lower edge of the same bin keeps the key
            let lower = StateFeatures {
                x1: f.x1,
                x2: b[1] as f64 / 8.0,
                x3: if b[2] == 7 { f.x3 } else { b[2] as f64 * 0.25 },
                x4: b[3] as f64 / 8.0,
            };
            prop_assert_eq!(discretize(&lower, &cfg), discretize(&f, &cfg));
        }
    }
}
