//! Difference measure between a segmentation and its ground truth, and the
//! three-band reward built on it.

use serde::{Deserialize, Serialize};

use super::state::region_texture;
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, FeatureMap};

/// Normalized discrepancies, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Differences {
    /// Object count.
    pub d1: f64,
    /// Size, as bounding-box diagonal.
    pub d2: f64,
    /// Surface, as pixel area.
    pub d3: f64,
    /// Mean texture.
    pub d4: f64,
}

impl Differences {
    pub fn to_array(self) -> [f64; 4] {
        [self.d1, self.d2, self.d3, self.d4]
    }
}

fn bbox_diagonal(mask: &BinaryMask) -> Option<f64> {
    mask.bbox().map(|(x0, y0, x1, y1)| {
        let w = (x1 - x0 + 1) as f64;
        let h = (y1 - y0 + 1) as f64;
        w.hypot(h)
    })
}

/// Compares a result object (with object count `count`) against the
/// single-object reference, using textures from the same feature map.
pub fn compute_differences(
    object: &BinaryMask,
    count: usize,
    reference: &BinaryMask,
    fm: &FeatureMap,
) -> Result<Differences> {
    let (w, h) = (fm.width(), fm.height());
    if !object.same_shape(w, h) || !reference.same_shape(w, h) {
        return Err(Error::contract("object, reference and feature map differ in size"));
    }
    let Some(ref_diag) = bbox_diagonal(reference) else {
        return Err(Error::dataset("reference mask is empty"));
    };
    let d1 = (count as f64 - 1.0).abs().min(1.0);
    let Some(diag) = bbox_diagonal(object) else {
        return Ok(Differences {
            d1,
            d2: 1.0,
            d3: 1.0,
            d4: 1.0,
        });
    };
    let ref_area = reference.area() as f64;
    let d2 = ((diag - ref_diag).abs() / ref_diag).min(1.0);
    let d3 = ((object.area() as f64 - ref_area).abs() / ref_area).min(1.0);
    let ours = region_texture(object, fm).expect("object is non-empty");
    let theirs = region_texture(reference, fm).expect("reference is non-empty");
    let d4 = (ours.iter().zip(&theirs).map(|(a, b)| (a - b).abs()).sum::<f64>() / 4.0).min(1.0);
    Ok(Differences { d1, d2, d3, d4 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DifferenceWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl Default for DifferenceWeights {
    fn default() -> Self {
        Self {
            w1: 0.25,
            w2: 0.25,
            w3: 0.25,
            w4: 0.25,
        }
    }
}

impl DifferenceWeights {
    pub fn new(w1: f64, w2: f64, w3: f64, w4: f64) -> Result<Self> {
        let w = Self { w1, w2, w3, w4 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.w1, self.w2, self.w3, self.w4];
        if ws.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::config("difference weights must be non-negative"));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("difference weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Weighted sum `D = sum_i w_i d_i`.
pub fn compute_d(d: &Differences, w: &DifferenceWeights) -> f64 {
    w.w1 * d.d1 + w.w2 * d.d2 + w.w3 * d.d3 + w.w4 * d.d4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Success threshold on `D`.
    pub eps: f64,
    /// Width of the neutral band above `eps`.
    pub delta: f64,
    pub r_pos: f64,
    pub r_zero: f64,
    pub r_neg: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            eps: 0.05,
            delta: 0.10,
            r_pos: 10.0,
            r_zero: 0.0,
            r_neg: -10.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::config("reward eps must be positive"));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::config("reward delta must be non-negative"));
        }
        if ![self.r_pos, self.r_zero, self.r_neg].iter().all(|r| r.is_finite()) {
            return Err(Error::config("reward values must be finite"));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.r_pos.abs().max(self.r_zero.abs()).max(self.r_neg.abs())
    }
}

/// Returns `(reward, terminal)`.
///
/// `D < eps` succeeds and ends the episode, `eps <= D < eps + delta` is
/// neutral, anything larger is punished. `D == eps` counts as neutral.
pub fn reward(d: f64, cfg: &RewardConfig) -> (f64, bool) {
    if d < cfg.eps {
        (cfg.r_pos, true)
    } else if d < cfg.eps + cfg.delta {
        (cfg.r_zero, false)
    } else {
        (cfg.r_neg, false)
    }
}
