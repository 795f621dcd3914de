//! The full segmentation pipeline as a memoized tuning environment.
//!
//! For one sample and one action: feature map for window `n`, z-scored
//! k-means with `k` clusters, object extraction against the ground truth,
//! state features, differences, `D` and reward. Results are cached per
//! `(sample, action)` and feature maps per `(sample, n)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::reward::{compute_d, compute_differences, reward, DifferenceWeights, Differences, RewardConfig};
use super::state::{discretize, featurize, DiscretizerConfig, StateFeatures};
use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::imaging::{feature_map, FeatureMap, GlcmConfig, GlcmOptions};
use crate::param_space::ActionSpace;
use crate::qlearn::{Environment, StateKey, Step};
use crate::segmenter::{
    extract_object_with, kmeans, largest_object, normalize_features, CountScope, ExtractedObject,
    KMeansConfig, Labeling,
};

pub const WINDOW_PARAM: (&str, &str) = ("GLCM", "n");
pub const CLUSTERS_PARAM: (&str, &str) = ("KMEANS", "k");

/// Everything about the pipeline that is not tuned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub glcm: GlcmOptions,
    pub kmeans: KMeansConfig,
    /// Components smaller than this are ignored as speckle.
    pub min_area: usize,
    pub count_scope: CountScope,
    pub discretizer: DiscretizerConfig,
    pub weights: DifferenceWeights,
    pub reward: RewardConfig,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            glcm: GlcmOptions::default(),
            kmeans: KMeansConfig::default(),
            min_area: 50,
            count_scope: CountScope::default(),
            discretizer: DiscretizerConfig::default(),
            weights: DifferenceWeights::default(),
            reward: RewardConfig::default(),
        }
    }
}

impl PipelineSettings {
    /// Settings scaled for 64x64 images.
    pub fn small() -> Self {
        Self {
            min_area: 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.glcm.validate()?;
        self.kmeans.with_k(1).validate()?;
        self.discretizer.validate()?;
        self.weights.validate()?;
        self.reward.validate()
    }
}

/// Scalar outcome of one pipeline run; what the learner and the oracle see.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub window: usize,
    pub clusters: usize,
    pub features: StateFeatures,
    pub differences: Differences,
    pub d: f64,
    pub reward: f64,
    pub terminal: bool,
    pub state: StateKey,
    pub dice: f64,
}

/// Full intermediate products of a single run, for inspection.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub features: FeatureMap,
    pub labeling: Labeling,
    pub object: ExtractedObject,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CacheStats {
    /// Pipeline executions actually performed.
    pub evaluations: usize,
    pub hits: usize,
    pub feature_maps: usize,
}

pub struct Pipeline {
    space: ActionSpace,
    settings: PipelineSettings,
    samples: Vec<Sample>,
    /// `(window, k)` per action index.
    params: Vec<(usize, usize)>,
    feature_cache: Mutex<HashMap<(usize, usize), Arc<FeatureMap>>>,
    step_cache: Mutex<HashMap<(usize, usize), StepOutcome>>,
    evaluations: AtomicUsize,
    hits: AtomicUsize,
    feature_maps: AtomicUsize,
}

/// Reads `(window, k)` off every action and checks both are usable.
pub fn pipeline_params(space: &ActionSpace) -> Result<Vec<(usize, usize)>> {
    for (op, param) in [WINDOW_PARAM, CLUSTERS_PARAM] {
        let known = space
            .operators()
            .iter()
            .any(|o| o.name == op && o.parameters.iter().any(|p| p.name == param));
        if !known {
            return Err(Error::config(format!("pipeline needs parameter `{op}.{param}`")));
        }
    }
    (0..space.count())
        .map(|i| {
            let a = space.action(i)?;
            let n = a.value(space, WINDOW_PARAM.0, WINDOW_PARAM.1).expect("checked above");
            let k = a.value(space, CLUSTERS_PARAM.0, CLUSTERS_PARAM.1).expect("checked above");
            if n < 3 || n % 2 == 0 {
                return Err(Error::config(format!("GLCM.n = {n} is not an odd window >= 3")));
            }
            if k < 1 {
                return Err(Error::config(format!("KMEANS.k = {k} must be at least 1")));
            }
            Ok((n as usize, k as usize))
        })
        .collect()
}

impl Pipeline {
    pub fn new(space: ActionSpace, settings: PipelineSettings, samples: Vec<Sample>) -> Result<Self> {
        settings.validate()?;
        let params = pipeline_params(&space)?;
        Ok(Self {
            space,
            settings,
            samples,
            params,
            feature_cache: Mutex::default(),
            step_cache: Mutex::default(),
            evaluations: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
            feature_maps: AtomicUsize::new(0),
        })
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn settings(&self) -> &PipelineSettings {
        &self.settings
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn params(&self, action: usize) -> Result<(usize, usize)> {
        self.params.get(action).copied().ok_or(Error::OutOfRange {
            index: action,
            count: self.params.len(),
        })
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            evaluations: self.evaluations.load(Ordering::Relaxed),
            hits: self.hits.load(Ordering::Relaxed),
            feature_maps: self.feature_maps.load(Ordering::Relaxed),
        }
    }

    fn sample(&self, index: usize) -> Result<&Sample> {
        self.samples
            .get(index)
            .ok_or_else(|| Error::contract(format!("no sample at index {index}")))
    }

    fn features(&self, sample: usize, window: usize) -> Result<Arc<FeatureMap>> {
        if let Some(fm) = self.feature_cache.lock().expect("cache lock").get(&(sample, window)) {
            return Ok(fm.clone());
        }
        let cfg = GlcmConfig::new(self.settings.glcm.clone(), window)?;
        let fm = Arc::new(feature_map(&self.sample(sample)?.image, &cfg)?);
        self.feature_maps.fetch_add(1, Ordering::Relaxed);
        Ok(self
            .feature_cache
            .lock()
            .expect("cache lock")
            .entry((sample, window))
            .or_insert(fm)
            .clone())
    }

    fn cluster(&self, fm: &FeatureMap, k: usize) -> Result<Labeling> {
        let points = normalize_features(fm);
        let result = kmeans(&points, &self.settings.kmeans.with_k(k))?;
        Labeling::new(fm.width(), fm.height(), k, result.assignments)
    }

    /// Memoized scalar outcome of `action` on `sample`.
    pub fn evaluate(&self, sample: usize, action: usize) -> Result<StepOutcome> {
        if let Some(hit) = self.step_cache.lock().expect("cache lock").get(&(sample, action)) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*hit);
        }
        let outcome = self.run(sample, action)?;
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        Ok(*self
            .step_cache
            .lock()
            .expect("cache lock")
            .entry((sample, action))
            .or_insert(outcome))
    }

    fn run(&self, sample: usize, action: usize) -> Result<StepOutcome> {
        let (window, k) = self.params(action)?;
        let s = self.sample(sample)?;
        let fm = self
            .features(sample, window)
            .map_err(|e| e.in_stage("glcm", action))?;
        let labeling = self.cluster(&fm, k).map_err(|e| e.in_stage("kmeans", action))?;
        let object = extract_object_with(&labeling, &s.mask, self.settings.min_area, self.settings.count_scope)
            .map_err(|e| e.in_stage("extract", action))?;
        let features = featurize(&object.mask, object.count, &fm, &s.mask)
            .map_err(|e| e.in_stage("featurize", action))?;
        let differences = compute_differences(&object.mask, object.count, &s.mask, &fm)
            .map_err(|e| e.in_stage("differences", action))?;
        let d = compute_d(&differences, &self.settings.weights);
        let (r, terminal) = reward(d, &self.settings.reward);
        Ok(StepOutcome {
            window,
            clusters: k,
            features,
            differences,
            d,
            reward: r,
            terminal,
            state: discretize(&features, &self.settings.discretizer),
            dice: object.dice,
        })
    }

    /// Uncached run that keeps the labeling and object mask.
    pub fn segment(&self, sample: usize, action: usize) -> Result<Segmentation> {
        let (window, k) = self.params(action)?;
        let s = self.sample(sample)?;
        let features = (*self.features(sample, window)?).clone();
        let labeling = self.cluster(&features, k)?;
        let object = extract_object_with(&labeling, &s.mask, self.settings.min_area, self.settings.count_scope)?;
        Ok(Segmentation {
            features,
            labeling,
            object,
        })
    }

    /// Mean `D` of `action` over every sample.
    pub fn mean_d(&self, action: usize) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::config("dataset is empty"));
        }
        let mut sum = 0.0;
        for s in 0..self.samples.len() {
            sum += self.evaluate(s, action)?.d;
        }
        Ok(sum / self.samples.len() as f64)
    }

    /// Environment bound to one sample.
    pub fn env(&self, sample: usize) -> PipelineEnv<'_> {
        PipelineEnv {
            pipeline: self,
            sample,
            trace: None,
        }
    }
}

/// Segments a bare image without ground truth: largest interior component.
pub fn segment_unsupervised(
    image: &crate::imaging::GrayImage,
    window: usize,
    k: usize,
    settings: &PipelineSettings,
) -> Result<Segmentation> {
    let cfg = GlcmConfig::new(settings.glcm.clone(), window)?;
    let features = feature_map(image, &cfg)?;
    let points = normalize_features(&features);
    let result = kmeans(&points, &settings.kmeans.with_k(k))?;
    let labeling = Labeling::new(features.width(), features.height(), k, result.assignments)?;
    let object = largest_object(&labeling, settings.min_area, settings.count_scope);
    Ok(Segmentation {
        features,
        labeling,
        object,
    })
}

/// One row of the optional per-step trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub episode: usize,
    pub sample: String,
    pub action: usize,
    pub outcome: StepOutcome,
}

pub struct PipelineEnv<'a> {
    pipeline: &'a Pipeline,
    sample: usize,
    trace: Option<(usize, &'a RefCell<Vec<TraceRow>>)>,
}

impl<'a> PipelineEnv<'a> {
    pub fn with_trace(mut self, episode: usize, sink: &'a RefCell<Vec<TraceRow>>) -> Self {
        self.trace = Some((episode, sink));
        self
    }
}

impl Environment for PipelineEnv<'_> {
    fn action_count(&self) -> usize {
        self.pipeline.space.count()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let outcome = self.pipeline.evaluate(self.sample, action)?;
        if let Some((episode, sink)) = self.trace {
            sink.borrow_mut().push(TraceRow {
                episode,
                sample: self.pipeline.samples[self.sample].id.clone(),
                action,
                outcome,
            });
        }
        Ok(Step {
            next_state: outcome.state,
            reward: outcome.reward,
            terminal: outcome.terminal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, SyntheticConfig};
    use crate::imaging::{BinaryMask, GrayImage};
    use crate::param_space::{reference_operators, OperatorSpec, ParameterSpec};
    use crate::qlearn::Environment;

    fn reference_pipeline(count: usize) -> Pipeline {
        let samples = generate_dataset(&SyntheticConfig::small(count, 3)).unwrap();
        Pipeline::new(ActionSpace::new(reference_operators()).unwrap(), PipelineSettings::small(), samples).unwrap()
    }

    fn space(ns: &[i64], ks: &[i64]) -> ActionSpace {
        ActionSpace::new(vec![
            OperatorSpec::new("GLCM", vec![ParameterSpec::new("n", ns.to_vec())]),
            OperatorSpec::new("KMEANS", vec![ParameterSpec::new("k", ks.to_vec())]),
        ])
        .unwrap()
    }

    #[test]
    fn results_are_memoized() {
        let p = reference_pipeline(2);
        let first = p.evaluate(1, 7).unwrap();
        assert_eq!(p.stats(), CacheStats { evaluations: 1, hits: 0, feature_maps: 1 });
        assert_eq!(p.evaluate(1, 7).unwrap(), first);
        assert_eq!(p.stats(), CacheStats { evaluations: 1, hits: 1, feature_maps: 1 });
        // same window, other k: the feature map is reused
        p.evaluate(1, 8).unwrap();
        assert_eq!(p.stats().feature_maps, 1);
        p.evaluate(0, 8).unwrap();
        assert_eq!(p.stats(), CacheStats { evaluations: 3, hits: 1, feature_maps: 2 });
    }

    #[test]
    fn single_cluster_is_punished() {
        let p = reference_pipeline(3);
        for s in 0..3 {
            for n in 0..7 {
                let o = p.evaluate(s, n * 5).unwrap();
                assert_eq!(o.clusters, 1);
                assert_eq!((o.reward, o.terminal), (-10.0, false), "{o:?}");
                assert_eq!(o.features.x2, 1.0);
            }
        }
    }

    #[test]
    fn separable_image_is_segmented_exactly() {
        // flat left half, checkerboard right half
        let image = GrayImage::from_fn(40, 30, |x, y| if x < 20 { 100 } else if (x + y) % 2 == 0 { 0 } else { 255 }).unwrap();
        let mask = BinaryMask::from_fn(40, 30, |x, _| x >= 20);
        let sample = Sample::new("half", image, mask.clone()).unwrap();
        let p = Pipeline::new(space(&[3], &[2]), PipelineSettings::default(), vec![sample]).unwrap();
        let seg = p.segment(0, 0).unwrap();
        let o = p.evaluate(0, 0).unwrap();
        // windows straddling the edge make the boundary column ambiguous
        assert!(seg.object.dice > 0.95, "{}", seg.object.dice);
        assert!(o.d < 0.05 && o.terminal, "{o:?}");
        assert_eq!(o.features.x1, 1.0);
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let image = GrayImage::filled(2, 2, 9).unwrap();
        let mask = BinaryMask::from_fn(2, 2, |x, y| x == 0 && y == 0);
        let sample = Sample::new("tiny", image, mask).unwrap();
        let p = Pipeline::new(space(&[3], &[5]), PipelineSettings::default(), vec![sample]).unwrap();
        match p.evaluate(0, 0).unwrap_err() {
            Error::Stage { stage, action, .. } => assert_eq!((stage, action), ("kmeans", 0)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(p.evaluate(1, 0), Err(Error::Contract(_))));
        assert!(matches!(p.evaluate(0, 1), Err(Error::OutOfRange { index: 1, count: 1 })));
    }

    #[test]
    fn spaces_without_pipeline_parameters_are_rejected() {
        assert!(pipeline_params(&space(&[4], &[2])).unwrap_err().is_config());
        assert!(pipeline_params(&space(&[3], &[0])).unwrap_err().is_config());
        let other = ActionSpace::new(vec![OperatorSpec::new("BLUR", vec![ParameterSpec::new("sigma", vec![1])])]).unwrap();
        assert!(pipeline_params(&other).unwrap_err().to_string().contains("GLCM.n"));
    }

    #[test]
    fn trace_records_every_step() {
        let p = reference_pipeline(1);
        let sink = RefCell::new(Vec::new());
        let mut env = p.env(0).with_trace(4, &sink);
        assert_eq!(env.action_count(), 35);
        let step = env.step(12).unwrap();
        env.step(0).unwrap();
        let rows = sink.into_inner();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].episode, rows[0].sample.as_str(), rows[0].action), (4, "img_000", 12));
        assert_eq!(rows[0].outcome.state, step.next_state);
        assert_eq!((rows[0].outcome.window, rows[0].outcome.clusters), (13, 3));
    }
}
