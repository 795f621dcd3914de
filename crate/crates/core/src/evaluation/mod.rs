//! State featurization, the difference measure `D`, rewards, and the
//! pipeline environment that ties them to the segmenter.

mod env;
mod reward;
mod state;

pub use env::{
    pipeline_params, segment_unsupervised, CacheStats, Pipeline, PipelineEnv, PipelineSettings,
    Segmentation, StepOutcome, TraceRow, CLUSTERS_PARAM, WINDOW_PARAM,
};
pub use reward::{compute_d, compute_differences, reward, DifferenceWeights, Differences, RewardConfig};
pub use state::{discretize, featurize, region_texture, DiscretizerConfig, StateFeatures};
