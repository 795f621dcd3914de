//! The four subcommands. Each `run_*` function does the work on an in-memory
//! pipeline; each `cmd_*` function adds config loading, the output lock and
//! report files.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use paramtune::dataset::{read_pgm_file, save_dataset, Sample};
use paramtune::evaluation::{
    region_texture, segment_unsupervised, Pipeline, Segmentation, StepOutcome, TraceRow,
};
use paramtune::fsio::write_atomic;
use paramtune::imaging::{write_pgm, BinaryMask};
use paramtune::param_space::ActionSpace;
use paramtune::qlearn::{train, QTable, TrainingReport};
use paramtune::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::lock::OutputLock;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

fn parameters(space: &ActionSpace, index: usize) -> Result<BTreeMap<String, i64>> {
    Ok(space.describe(&space.action(index)?).into_iter().collect())
}

pub fn build_pipeline(cfg: &RunConfig) -> Result<Pipeline> {
    let samples = cfg.samples()?;
    if samples.is_empty() {
        return Err(Error::config("dataset is empty"));
    }
    Pipeline::new(cfg.space()?, cfg.pipeline.clone(), samples)
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub count: usize,
    pub seed: u64,
    pub config: paramtune::dataset::SyntheticConfig,
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<Manifest> {
    let synthetic = cfg
        .synthetic()
        .ok_or_else(|| Error::config("generate needs a synthetic dataset source"))?;
    let samples = paramtune::dataset::generate_dataset(&synthetic)?;
    let out = &cfg.output_dir;
    let _lock = OutputLock::acquire(out)?;
    save_dataset(out, &samples)?;
    let manifest = Manifest {
        count: samples.len(),
        seed: synthetic.seed,
        config: synthetic,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub reached_terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestAction {
    pub index: usize,
    pub parameters: BTreeMap<String, i64>,
    pub mean_d: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainingReport,
    pub q: QTable,
    pub best: BestAction,
    pub trace: Vec<TraceRow>,
}

impl TrainOutcome {
    pub fn curve(&self) -> Vec<CurveRow> {
        self.report
            .episodes
            .iter()
            .map(|e| CurveRow {
                episode: e.episode,
                steps: e.steps,
                total_reward: e.total_reward,
                reached_terminal: e.reached_terminal,
            })
            .collect()
    }
}

pub fn run_train(pipeline: &Pipeline, cfg: &RunConfig) -> Result<TrainOutcome> {
    let learner = cfg.learner();
    let mut q = QTable::new(pipeline.space().count());
    let sink = RefCell::new(Vec::new());
    let episode = Cell::new(0);
    let report = train(
        pipeline.samples().len(),
        |sample| {
            let env = pipeline.env(sample);
            let e = episode.replace(episode.get() + 1);
            Ok(if cfg.trace { env.with_trace(e, &sink) } else { env })
        },
        &mut q,
        &learner,
    )?;
    let index = report.greedy_action;
    let best = BestAction {
        index,
        parameters: parameters(pipeline.space(), index)?,
        mean_d: pipeline.mean_d(index)?,
    };
    Ok(TrainOutcome {
        report,
        q,
        best,
        trace: sink.into_inner(),
    })
}

#[derive(Serialize)]
struct TraceCsvRow<'a> {
    episode: usize,
    sample: &'a str,
    action: usize,
    window: usize,
    clusters: usize,
    d: f64,
    reward: f64,
    terminal: bool,
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let pipeline = build_pipeline(cfg)?;
    let out = &cfg.output_dir;
    let _lock = OutputLock::acquire(out)?;
    let outcome = run_train(&pipeline, cfg)?;
    write_csv(&out.join("learning_curve.csv"), &outcome.curve())?;
    write_json(&out.join("qtable.json"), &outcome.q.entries())?;
    write_json(&out.join("best_action.json"), &outcome.best)?;
    if cfg.trace {
        let rows: Vec<_> = outcome
            .trace
            .iter()
            .map(|t| TraceCsvRow {
                episode: t.episode,
                sample: &t.sample,
                action: t.action,
                window: t.outcome.window,
                clusters: t.outcome.clusters,
                d: t.outcome.d,
                reward: t.outcome.reward,
                terminal: t.outcome.terminal,
            })
            .collect();
        write_csv(&out.join("trace.csv"), &rows)?;
    }
    let s = pipeline.stats();
    log::info!(
        "training done: {} pipeline runs, {} cache hits, {} feature maps",
        s.evaluations,
        s.hits,
        s.feature_maps
    );
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub index: usize,
    pub parameters: BTreeMap<String, i64>,
    pub mean_d: f64,
    /// Lowest `D` over the samples.
    pub min_d: f64,
    /// Fraction of samples on which the action reaches the success band.
    pub terminal_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub best: BestAction,
    /// Ascending by mean `D`, ties by index.
    pub rows: Vec<OracleRow>,
}

/// Evaluates every action on every sample through the shared cache.
pub fn run_gridsearch(pipeline: &Pipeline) -> Result<OracleReport> {
    let (actions, samples) = (pipeline.space().count(), pipeline.samples().len());
    let outcomes: Vec<StepOutcome> = (0..actions * samples)
        .into_par_iter()
        .map(|i| pipeline.evaluate(i % samples, i / samples))
        .collect::<Result<_>>()?;
    let mut rows = outcomes
        .chunks(samples)
        .enumerate()
        .map(|(index, per_sample)| {
            let n = per_sample.len() as f64;
            Ok(OracleRow {
                index,
                parameters: parameters(pipeline.space(), index)?,
                mean_d: per_sample.iter().map(|o| o.d).sum::<f64>() / n,
                min_d: per_sample.iter().map(|o| o.d).fold(f64::INFINITY, f64::min),
                terminal_rate: per_sample.iter().filter(|o| o.terminal).count() as f64 / n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.mean_d.total_cmp(&b.mean_d).then(a.index.cmp(&b.index)));
    let top = &rows[0];
    if let Some(r) = rows.iter().find(|r| r.mean_d < top.mean_d) {
        return Err(Error::contract(format!(
            "oracle argmin {} has mean D {} above action {} ({})",
            top.index, top.mean_d, r.index, r.mean_d
        )));
    }
    Ok(OracleReport {
        best: BestAction {
            index: top.index,
            parameters: top.parameters.clone(),
            mean_d: top.mean_d,
        },
        rows,
    })
}

#[derive(Serialize)]
struct OracleCsvRow {
    rank: usize,
    index: usize,
    parameters: String,
    mean_d: f64,
    min_d: f64,
    terminal_rate: f64,
}

pub fn cmd_gridsearch(cfg: &RunConfig) -> Result<OracleReport> {
    let pipeline = build_pipeline(cfg)?;
    let out = &cfg.output_dir;
    let _lock = OutputLock::acquire(out)?;
    let report = run_gridsearch(&pipeline)?;
    let rows: Vec<_> = report
        .rows
        .iter()
        .enumerate()
        .map(|(rank, r)| OracleCsvRow {
            rank,
            index: r.index,
            parameters: r
                .parameters
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" "),
            mean_d: r.mean_d,
            min_d: r.min_d,
            terminal_rate: r.terminal_rate,
        })
        .collect();
    write_csv(&out.join("gridsearch.csv"), &rows)?;
    write_json(&out.join("oracle.json"), &report.best)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub index: usize,
    pub parameters: BTreeMap<String, i64>,
    pub x1: f64,
    pub x2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x3: Option<f64>,
    pub x4: f64,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub supervised: Option<Supervised>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Supervised {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub reward: f64,
    pub terminal: bool,
    pub dice: f64,
}

#[derive(Debug, Clone)]
pub struct EvaluateRequest {
    pub action: String,
    pub image: PathBuf,
    pub mask: Option<PathBuf>,
    /// Also write one CSV per Haralick channel.
    pub dump_features: bool,
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub metrics: Metrics,
    pub segmentation: Segmentation,
}

/// Evaluates one action on one image; with a mask the object is chosen by
/// best overlap, without one the largest interior component is used.
pub fn run_evaluate(cfg: &RunConfig, action: usize, image: paramtune::imaging::GrayImage, mask: Option<BinaryMask>) -> Result<EvaluateOutcome> {
    let space = cfg.space()?;
    let parameters = parameters(&space, action)?;
    match mask {
        Some(mask) => {
            let sample = Sample::new("input", image, mask)?;
            let pipeline = Pipeline::new(space, cfg.pipeline.clone(), vec![sample])?;
            let o = pipeline.evaluate(0, action)?;
            let segmentation = pipeline.segment(0, action)?;
            Ok(EvaluateOutcome {
                metrics: Metrics {
                    index: action,
                    parameters,
                    x1: o.features.x1,
                    x2: o.features.x2,
                    x3: Some(o.features.x3),
                    x4: o.features.x4,
                    supervised: Some(Supervised {
                        d1: o.differences.d1,
                        d2: o.differences.d2,
                        d3: o.differences.d3,
                        d4: o.differences.d4,
                        d: o.d,
                        reward: o.reward,
                        terminal: o.terminal,
                        dice: o.dice,
                    }),
                },
                segmentation,
            })
        }
        None => {
            let (window, k) = paramtune::evaluation::pipeline_params(&space)?[action];
            let seg = segment_unsupervised(&image, window, k, &cfg.pipeline)?;
            let area = seg.object.mask.area() as f64;
            let x4 = region_texture(&seg.object.mask, &seg.features)
                .map_or(0.0, |t| t.iter().sum::<f64>() / 4.0);
            Ok(EvaluateOutcome {
                metrics: Metrics {
                    index: action,
                    parameters,
                    x1: seg.object.count as f64,
                    x2: area / (image.width() * image.height()) as f64,
                    x3: None,
                    x4,
                    supervised: None,
                },
                segmentation: seg,
            })
        }
    }
}

pub fn cmd_evaluate(cfg: &RunConfig, req: &EvaluateRequest) -> Result<EvaluateOutcome> {
    let space = cfg.space()?;
    let action = space.parse_assignment(&req.action)?;
    let image = read_pgm_file(&req.image)?;
    let mask = match &req.mask {
        Some(p) => Some(BinaryMask::from_gray(&read_pgm_file(p)?)),
        None => None,
    };
    let out = &cfg.output_dir;
    let _lock = OutputLock::acquire(out)?;
    let outcome = run_evaluate(cfg, action, image, mask)?;
    let seg = &outcome.segmentation;
    write_atomic(&out.join("labeling.pgm"), &write_pgm(&seg.labeling.to_gray()))?;
    write_atomic(&out.join("object.pgm"), &write_pgm(&seg.object.mask.to_gray()))?;
    write_json(&out.join("metrics.json"), &outcome.metrics)?;
    if req.dump_features {
        let dir = out.join("features");
        fs::create_dir_all(&dir).map_err(|e| Error::from(e).in_file(&dir))?;
        seg.features.write_csv_planes(&dir)?;
    }
    Ok(outcome)
}
