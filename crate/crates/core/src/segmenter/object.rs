use serde::{Deserialize, Serialize};

use super::components::{connected_components, Component};
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, FeatureMap, GrayImage};

/// Per-pixel z-scored feature vectors; zero-variance channels become 0.
pub fn normalize_features(fm: &FeatureMap) -> Vec<Vec<f64>> {
    let n = fm.pixels().len() as f64;
    let mut mean = [0.0; 4];
    for p in fm.pixels() {
        for c in 0..4 {
            mean[c] += p[c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 4];
    for p in fm.pixels() {
        for c in 0..4 {
            var[c] += (p[c] - mean[c]).powi(2);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|v| {
            let sd = (v / n).sqrt();
            if sd > 1e-12 {
                1.0 / sd
            } else {
                0.0
            }
        })
        .collect();
    fm.pixels()
        .iter()
        .map(|p| (0..4).map(|c| (p[c] - mean[c]) * scale[c]).collect())
        .collect()
}

/// Cluster index per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub width: usize,
    pub height: usize,
    pub k: usize,
    pub labels: Vec<usize>,
}

impl Labeling {
    pub fn new(width: usize, height: usize, k: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::contract("labeling size does not match its dimensions"));
        }
        if labels.iter().any(|&l| l >= k) {
            return Err(Error::contract(format!("label out of range for k = {k}")));
        }
        Ok(Self {
            width,
            height,
            k,
            labels,
        })
    }

    pub fn cluster_mask(&self, cluster: usize) -> BinaryMask {
        BinaryMask::new(
            self.width,
            self.height,
            self.labels.iter().map(|&l| l == cluster).collect(),
        )
        .expect("labeling has positive dimensions")
    }

    /// Labels spread over distinct gray levels for viewing.
    pub fn to_gray(&self) -> GrayImage {
        let step = 255 / (self.k.max(2) - 1);
        GrayImage::new(
            self.width,
            self.height,
            self.labels.iter().map(|&l| (l * step).min(255) as u8).collect(),
        )
        .expect("labeling has positive dimensions")
    }
}

/// Which components contribute to the object count `x1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountScope {
    /// Qualifying components of the cluster holding the selected object.
    #[default]
    SelectedCluster,
    /// Qualifying components of every cluster.
    AllClusters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedObject {
    pub mask: BinaryMask,
    /// Object count `x1`.
    pub count: usize,
    pub cluster: Option<usize>,
    pub dice: f64,
}

struct Candidate {
    cluster: usize,
    component: Component,
}

fn candidates(lab: &Labeling, min_area: usize) -> (Vec<Candidate>, Vec<usize>) {
    let mut all = Vec::new();
    let mut per_cluster = vec![0; lab.k];
    for cluster in 0..lab.k {
        for component in connected_components(&lab.cluster_mask(cluster)) {
            if component.area() >= min_area.max(1) {
                per_cluster[cluster] += 1;
                all.push(Candidate { cluster, component });
            }
        }
    }
    (all, per_cluster)
}

fn finish(
    lab: &Labeling,
    chosen: Option<Candidate>,
    per_cluster: &[usize],
    scope: CountScope,
    reference: Option<&BinaryMask>,
) -> ExtractedObject {
    match chosen {
        None => ExtractedObject {
            mask: BinaryMask::empty(lab.width, lab.height),
            count: 0,
            cluster: None,
            dice: 0.0,
        },
        Some(c) => {
            let mask = c.component.mask();
            let count = match scope {
                CountScope::SelectedCluster => per_cluster[c.cluster],
                CountScope::AllClusters => per_cluster.iter().sum(),
            };
            ExtractedObject {
                dice: reference.map_or(0.0, |r| mask.dice(r)),
                mask,
                count,
                cluster: Some(c.cluster),
            }
        }
    }
}

pub fn extract_object(lab: &Labeling, reference: &BinaryMask, min_area: usize) -> Result<ExtractedObject> {
    extract_object_with(lab, reference, min_area, CountScope::default())
}

/// Picks the qualifying component with the best Dice overlap against
/// `reference`; ties go to the larger area, then to scan order.
pub fn extract_object_with(
    lab: &Labeling,
    reference: &BinaryMask,
    min_area: usize,
    scope: CountScope,
) -> Result<ExtractedObject> {
    if !reference.same_shape(lab.width, lab.height) {
        return Err(Error::contract(format!(
            "reference mask is {}x{}, labeling is {}x{}",
            reference.width(),
            reference.height(),
            lab.width,
            lab.height
        )));
    }
    let (all, per_cluster) = candidates(lab, min_area);
    let ref_area = reference.area();
    let mut best: Option<(f64, Candidate)> = None;
    for cand in all {
        let inter = cand
            .component
            .pixels()
            .iter()
            .filter(|&&i| reference.bits()[i])
            .count();
        let dice = 2.0 * inter as f64 / (cand.component.area() + ref_area) as f64;
        let better = match &best {
            None => true,
            Some((d, b)) => {
                dice > *d
                    || (dice == *d
                        && (cand.component.area() > b.component.area()
                            || (cand.component.area() == b.component.area()
                                && cand.component.first_pixel() < b.component.first_pixel())))
            }
        };
        if better {
            best = Some((dice, cand));
        }
    }
    Ok(finish(lab, best.map(|(_, c)| c), &per_cluster, scope, Some(reference)))
}

/// Selection without ground truth: the largest qualifying component that
/// does not touch the image border, else the largest overall.
pub fn largest_object(lab: &Labeling, min_area: usize, scope: CountScope) -> ExtractedObject {
    let (all, per_cluster) = candidates(lab, min_area);
    let pick = |interior_only: bool| {
        all.iter()
            .enumerate()
            .filter(|(_, c)| !interior_only || !c.component.touches_border())
            .max_by(|(_, a), (_, b)| {
                a.component
                    .area()
                    .cmp(&b.component.area())
                    .then(b.component.first_pixel().cmp(&a.component.first_pixel()))
            })
            .map(|(i, _)| i)
    };
    let chosen = pick(true).or_else(|| pick(false));
    let chosen = chosen.map(|i| all.into_iter().nth(i).expect("index from enumerate"));
    finish(lab, chosen, &per_cluster, scope, None)
}
