//! Automatic parameter adjustment for an image-processing pipeline with
//! tabular Q-learning.
//!
//! The pipeline computes dense GLCM texture features with window size `n`,
//! clusters them with k-means into `k` classes and extracts the object that
//! best matches a ground-truth mask. Each `(n, k)` pair is one action; the
//! learner is rewarded when the extracted object is close to the ground truth.
//!
//! ```no_run
//! use paramtune::dataset::{generate_dataset, SyntheticConfig};
//! use paramtune::evaluation::{Pipeline, PipelineSettings};
//! use paramtune::param_space::{reference_operators, ActionSpace};
//! use paramtune::qlearn::{train, LearnerConfig, QTable};
//!
//! let samples = generate_dataset(&SyntheticConfig::default())?;
//! let space = ActionSpace::new(reference_operators())?;
//! let pipeline = Pipeline::new(space, PipelineSettings::default(), samples)?;
//! let cfg = LearnerConfig::default();
//! let mut q = QTable::new(pipeline.space().count());
//! let report = train(pipeline.samples().len(), |i| Ok(pipeline.env(i)), &mut q, &cfg)?;
//! println!("best action: {}", pipeline.space().action(report.greedy_action)?);
//! # Ok::<(), paramtune::Error>(())
//! ```

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod fsio;
pub mod imaging;
pub mod param_space;
pub mod qlearn;
pub mod segmenter;

pub use error::{Error, Result};
