use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use paramtune::dataset::SyntheticConfig;
use paramtune::evaluation::PipelineSettings;
use paramtune::param_space::{OperatorSpec, ParameterSpec};
use paramtune_cli::{cmd_gridsearch, cmd_train, DatasetSource, RunConfig};
use serde_json::Value;

fn write_config(dir: &Path, name: &str, cfg: &RunConfig) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, cfg.to_json()).unwrap();
    path
}

fn small_config(count: usize, episodes: usize) -> RunConfig {
    let mut cfg = RunConfig::reference_task(5);
    cfg.dataset = DatasetSource::Synthetic(SyntheticConfig::small(count, 5));
    cfg.learner.num_episodes = episodes;
    cfg
}

fn paramtune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paramtune"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", &small_config(4, 0));
    let config = config.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = paramtune(&["generate", "--config", config, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 9, "{names:?}");
    assert!(names.contains(&"img_003_mask.pgm".to_string()));
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let manifest = read_json(&a.join("manifest.json"));
    assert_eq!((manifest["count"].as_u64(), manifest["seed"].as_u64()), (Some(4), Some(5)));

    let c = dir.path().join("c");
    let o = paramtune(&["generate", "--config", config, "--seed", "6", "--out", c.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(read_json(&c.join("manifest.json"))["seed"].as_u64(), Some(6));
    assert_ne!(fs::read(a.join("img_000.pgm")).unwrap(), fs::read(c.join("img_000.pgm")).unwrap());
}

#[test]
fn zero_episodes_recommend_the_first_action() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(2, 0);
    cfg.output_dir = dir.path().join("out");
    let t = cmd_train(&cfg).unwrap();
    assert!(t.report.episodes.is_empty());
    assert_eq!(t.best.index, 0);
    assert!(csv_rows(&cfg.output_dir.join("learning_curve.csv")).is_empty());
    let best = read_json(&cfg.output_dir.join("best_action.json"));
    assert_eq!(best["parameters"], serde_json::json!({"GLCM.n": 9, "KMEANS.k": 1}));
}

#[test]
fn training_reports_every_episode() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(3, 25);
    cfg.trace = true;
    cfg.output_dir = dir.path().join("out");
    let t = cmd_train(&cfg).unwrap();
    let out = &cfg.output_dir;
    let curve = csv_rows(&out.join("learning_curve.csv"));
    assert_eq!(curve.len(), 25);
    let steps: usize = curve.iter().map(|r| r[1].parse::<usize>().unwrap()).sum();
    assert_eq!(csv_rows(&out.join("trace.csv")).len(), steps);
    let q = read_json(&out.join("qtable.json"));
    assert!(!q.as_array().unwrap().is_empty());
    assert_eq!(read_json(&out.join("best_action.json"))["index"].as_u64(), Some(t.best.index as u64));
    assert!(!out.join(".paramtune.lock").exists());

    // same seed, same bytes
    let first = fs::read(out.join("qtable.json")).unwrap();
    cmd_train(&cfg).unwrap();
    assert_eq!(fs::read(out.join("qtable.json")).unwrap(), first);
}

#[test]
fn gridsearch_over_a_single_action() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(2, 0);
    cfg.operators = vec![
        OperatorSpec::new("GLCM", vec![ParameterSpec::new("n", vec![11])]),
        OperatorSpec::new("KMEANS", vec![ParameterSpec::new("k", vec![3])]),
    ];
    cfg.output_dir = dir.path().join("out");
    let r = cmd_gridsearch(&cfg).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.best.index, 0);
    let rows = csv_rows(&cfg.output_dir.join("gridsearch.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][2], "GLCM.n=11 KMEANS.k=3");
    assert_eq!(read_json(&cfg.output_dir.join("oracle.json"))["index"].as_u64(), Some(0));
}

#[test]
fn gridsearch_rows_are_sorted_by_mean_d() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(2, 0);
    cfg.output_dir = dir.path().join("out");
    let r = cmd_gridsearch(&cfg).unwrap();
    assert_eq!(r.rows.len(), 35);
    assert!(r.rows.windows(2).all(|w| w[0].mean_d <= w[1].mean_d));
    assert_eq!(r.rows[0].index, r.best.index);
    // the shared cache agrees with a fresh evaluation
    let p = paramtune_cli::build_pipeline(&cfg).unwrap();
    for row in &r.rows {
        assert_eq!(p.mean_d(row.index).unwrap(), row.mean_d);
    }
}

#[test]
fn directory_datasets_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let gen = write_config(dir.path(), "gen.json", &small_config(2, 0));
    let data = dir.path().join("data");
    let o = paramtune(&["generate", "--config", gen.to_str().unwrap(), "--out", data.to_str().unwrap()]);
    assert!(o.status.success());

    let mut cfg = small_config(2, 4);
    cfg.dataset = DatasetSource::Directory("data".into());
    let train = write_config(dir.path(), "train.json", &cfg);
    let out = dir.path().join("out");
    let o = paramtune(&["train", "--config", train.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&out.join("learning_curve.csv")).len(), 4);
}

#[test]
fn evaluate_with_and_without_mask() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", &small_config(1, 0));
    let config = config.to_str().unwrap();
    let data = dir.path().join("data");
    assert!(paramtune(&["generate", "--config", config, "--out", data.to_str().unwrap()]).status.success());
    let image = data.join("img_000.pgm");
    let mask = data.join("img_000_mask.pgm");

    let sup = dir.path().join("sup");
    let o = paramtune(&[
        "evaluate", "--config", config, "--out", sup.to_str().unwrap(), "--action", "n=13,k=3",
        "--image", image.to_str().unwrap(), "--mask", mask.to_str().unwrap(), "--dump-features",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&sup.join("metrics.json"));
    assert_eq!(m["index"].as_u64(), Some(12));
    let d = m["D"].as_f64().unwrap();
    let parts: f64 = ["d1", "d2", "d3", "d4"].iter().map(|k| m[k].as_f64().unwrap()).sum();
    assert!((d - parts / 4.0).abs() < 1e-12);
    assert!(m["x3"].is_number());
    assert!(sup.join("labeling.pgm").exists() && sup.join("object.pgm").exists());
    assert!(sup.join("features").read_dir().unwrap().count() >= 4);

    let bare = dir.path().join("bare");
    let o = paramtune(&[
        "evaluate", "--config", config, "--out", bare.to_str().unwrap(), "--action", "k=3, n=13",
        "--image", image.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&bare.join("metrics.json"));
    for key in ["D", "d1", "reward", "x3"] {
        assert!(m.get(key).is_none(), "{key} present without a mask");
    }
    assert!(m["x2"].as_f64().unwrap() > 0.0);
    // same segmentation settings, same clustering
    assert_eq!(fs::read(sup.join("labeling.pgm")).unwrap(), fs::read(bare.join("labeling.pgm")).unwrap());
}

#[test]
fn exit_codes_separate_config_from_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", &small_config(1, 0));
    let config = config.to_str().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"learner": {"alpha": 2}}"#).unwrap();
    let missing = dir.path().join("none.pgm");

    let code = |args: &[&str]| paramtune(args).status.code();
    assert_eq!(code(&["train", "--config", bad.to_str().unwrap(), "--out", out]), Some(2));
    assert_eq!(
        code(&["evaluate", "--config", config, "--out", out, "--action", "n=14,k=3", "--image", missing.to_str().unwrap()]),
        Some(2)
    );
    assert_eq!(
        code(&["evaluate", "--config", config, "--out", out, "--action", "n=13,k=3", "--image", missing.to_str().unwrap()]),
        Some(1)
    );

    fs::create_dir_all(dir.path().join("out")).unwrap();
    fs::write(dir.path().join("out/.paramtune.lock"), "1").unwrap();
    let o = paramtune(&["generate", "--config", config, "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("in use"));
}

#[test]
fn config_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "run.json", &small_config(1, 0));
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!(cfg.pipeline, PipelineSettings::small());
}

#[test]
fn shipped_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let reference = RunConfig::load(&root.join("reference.json")).unwrap();
    let expected = RunConfig {
        output_dir: "out/reference".into(),
        ..RunConfig::reference_task(1)
    };
    assert_eq!(reference.synthetic(), expected.synthetic());
    assert_eq!(reference.learner(), expected.learner());
    assert_eq!(reference.pipeline, expected.pipeline);
    assert_eq!(reference.output_dir, expected.output_dir);
    let default = RunConfig::load(&root.join("default.json")).unwrap();
    assert_eq!(default.synthetic(), RunConfig::default().synthetic());
}
