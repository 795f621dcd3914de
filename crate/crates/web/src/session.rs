//! Everything the page does, in plain Rust so it can be tested natively.

use paramtune::dataset::{generate_dataset, SyntheticConfig};
use paramtune::evaluation::{Pipeline, PipelineSettings};
use paramtune::imaging::{BinaryMask, GrayImage};
use paramtune::param_space::{reference_operators, ActionSpace};
use paramtune::qlearn::{train, LearnerConfig, QTable};
use paramtune::{Error, Result};
use serde::Serialize;

const PALETTE: [[u8; 3]; 5] = [
    [68, 119, 170],
    [238, 102, 119],
    [34, 136, 51],
    [204, 187, 68],
    [170, 51, 119],
];
const OUTLINE: [u8; 3] = [255, 255, 255];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentMetrics {
    pub action: usize,
    pub n: i64,
    pub k: i64,
    pub objects: f64,
    pub d: f64,
    pub reward: f64,
    pub terminal: bool,
    pub dice: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentView {
    /// Clusters in false colour with the chosen object outlined.
    pub rgba: Vec<u8>,
    pub metrics: SegmentMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub action: usize,
    pub n: i64,
    pub k: i64,
    pub mean_d: f64,
    pub steps: Vec<usize>,
    pub reached_terminal: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub action: usize,
    pub n: i64,
    pub k: i64,
    pub mean_d: f64,
}

/// A synthetic dataset and its memoizing pipeline.
pub struct Session {
    pipeline: Pipeline,
}

fn gray_rgba(image: &GrayImage) -> Vec<u8> {
    image.pixels().iter().flat_map(|&v| [v, v, v, 255]).collect()
}

fn on_edge(mask: &BinaryMask, x: usize, y: usize) -> bool {
    if !mask.get(x, y) {
        return false;
    }
    let (w, h) = (mask.width(), mask.height());
    x == 0 || y == 0 || x + 1 == w || y + 1 == h
        || !mask.get(x - 1, y) || !mask.get(x + 1, y) || !mask.get(x, y - 1) || !mask.get(x, y + 1)
}

impl Session {
    pub fn new(count: usize, seed: u64) -> Result<Self> {
        let samples = generate_dataset(&SyntheticConfig::small(count, seed))?;
        let space = ActionSpace::new(reference_operators())?;
        Ok(Self {
            pipeline: Pipeline::new(space, PipelineSettings::small(), samples)?,
        })
    }

    pub fn count(&self) -> usize {
        self.pipeline.samples().len()
    }

    pub fn width(&self) -> usize {
        self.pipeline.samples()[0].image.width()
    }

    pub fn height(&self) -> usize {
        self.pipeline.samples()[0].image.height()
    }

    fn sample(&self, index: usize) -> Result<&paramtune::dataset::Sample> {
        self.pipeline
            .samples()
            .get(index)
            .ok_or_else(|| Error::contract(format!("no sample {index}")))
    }

    fn describe(&self, action: usize) -> Result<(i64, i64)> {
        let a = self.pipeline.space().action(action)?;
        let v: Vec<i64> = a.values().collect();
        Ok((v[0], v[1]))
    }

    pub fn image_rgba(&self, index: usize) -> Result<Vec<u8>> {
        Ok(gray_rgba(&self.sample(index)?.image))
    }

    pub fn mask_rgba(&self, index: usize) -> Result<Vec<u8>> {
        Ok(gray_rgba(&self.sample(index)?.mask.to_gray()))
    }

    pub fn segment(&self, index: usize, n: i64, k: i64) -> Result<SegmentView> {
        let action = self.pipeline.space().index_of(&[n, k])?;
        let outcome = self.pipeline.evaluate(index, action)?;
        let seg = self.pipeline.segment(index, action)?;
        let lab = &seg.labeling;
        let mask = &seg.object.mask;
        let mut rgba = Vec::with_capacity(lab.labels.len() * 4);
        for (i, &label) in lab.labels.iter().enumerate() {
            let (x, y) = (i % lab.width, i / lab.width);
            let [r, g, b] = if on_edge(mask, x, y) {
                OUTLINE
            } else {
                PALETTE[label % PALETTE.len()]
            };
            rgba.extend([r, g, b, 255]);
        }
        Ok(SegmentView {
            rgba,
            metrics: SegmentMetrics {
                action,
                n,
                k,
                objects: outcome.features.x1,
                d: outcome.d,
                reward: outcome.reward,
                terminal: outcome.terminal,
                dice: outcome.dice,
            },
        })
    }

    pub fn train(&self, episodes: usize, seed: u64) -> Result<TrainSummary> {
        let cfg = LearnerConfig {
            num_episodes: episodes,
            seed,
            ..LearnerConfig::default()
        };
        let mut q = QTable::new(self.pipeline.space().count());
        let report = train(self.count(), |i| Ok(self.pipeline.env(i)), &mut q, &cfg)?;
        let action = report.greedy_action;
        let (n, k) = self.describe(action)?;
        Ok(TrainSummary {
            action,
            n,
            k,
            mean_d: self.pipeline.mean_d(action)?,
            steps: report.episodes.iter().map(|e| e.steps).collect(),
            reached_terminal: report.episodes.iter().map(|e| e.reached_terminal).collect(),
        })
    }

    /// Every action ranked by mean `D`, best first.
    pub fn gridsearch(&self) -> Result<Vec<GridRow>> {
        let mut rows = Vec::new();
        for action in 0..self.pipeline.space().count() {
            let (n, k) = self.describe(action)?;
            rows.push(GridRow {
                action,
                n,
                k,
                mean_d: self.pipeline.mean_d(action)?,
            });
        }
        rows.sort_by(|a, b| a.mean_d.total_cmp(&b.mean_d).then(a.action.cmp(&b.action)));
        Ok(rows)
    }
}
