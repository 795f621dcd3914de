//! Trains on the 10-image reference task and compares the learned action
//! with an exhaustive search.
//!
//! cargo run --release -p paramtune --example compare -- [seed] [episodes]

use paramtune::dataset::{generate_dataset, SyntheticConfig};
use paramtune::evaluation::{Pipeline, PipelineSettings};
use paramtune::param_space::{reference_operators, ActionSpace};
use paramtune::qlearn::{train, LearnerConfig, QTable};

fn main() -> paramtune::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let seed = args.next().unwrap_or(1);
    let episodes = args.next().unwrap_or(300) as usize;

    let samples = generate_dataset(&SyntheticConfig::small(10, seed))?;
    let space = ActionSpace::new(reference_operators())?;
    let pipeline = Pipeline::new(space, PipelineSettings::small(), samples)?;

    let cfg = LearnerConfig { seed, num_episodes: episodes, ..LearnerConfig::default() };
    let mut q = QTable::new(pipeline.space().count());
    let report = train(10, |i| Ok(pipeline.env(i)), &mut q, &cfg)?;

    let mut ranked = Vec::new();
    for a in 0..pipeline.space().count() {
        ranked.push((pipeline.mean_d(a)?, a));
    }
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let show = |a: usize| pipeline.space().action(a).map(|x| x.to_string());
    println!("learned {} (mean D {:.4})", show(report.greedy_action)?, pipeline.mean_d(report.greedy_action)?);
    println!("best    {} (mean D {:.4})", show(ranked[0].1)?, ranked[0].0);
    for (d, a) in ranked.iter().take(5) {
        println!("  {:<24} {d:.4}", show(*a)?);
    }
    let tenth = (episodes / 10).max(1);
    let mean = |s: &[paramtune::qlearn::EpisodeStats]| s.iter().map(|e| e.steps as f64).sum::<f64>() / s.len().max(1) as f64;
    if !report.episodes.is_empty() {
        println!(
            "steps per episode: first {:.1}, last {:.1}",
            mean(&report.episodes[..tenth.min(report.episodes.len())]),
            mean(&report.episodes[report.episodes.len().saturating_sub(tenth)..])
        );
    }
    Ok(())
}
