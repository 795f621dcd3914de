//! Tabular Q-learning with an epsilon-greedy policy.
//!
//! Each episode starts from the distinguished [`StateKey::Start`] state and
//! steps until the environment reports a terminal transition or the step cap
//! is reached. Absent table entries read as 0, and terminal transitions do
//! not bootstrap.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretized state. `Start` precedes the first action of every episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StateKey {
    Start,
    Bins([u8; 4]),
}

impl StateKey {
    pub fn bins(&self) -> Option<[u8; 4]> {
        match self {
            StateKey::Start => None,
            StateKey::Bins(b) => Some(*b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QEntry {
    /// `null` for the start state.
    pub state_bins: Option<[u8; 4]>,
    pub action_index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    actions: usize,
    rows: BTreeMap<StateKey, Vec<f64>>,
}

impl QTable {
    pub fn new(actions: usize) -> Self {
        Self {
            actions,
            rows: BTreeMap::new(),
        }
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn get(&self, state: StateKey, action: usize) -> f64 {
        self.rows.get(&state).map_or(0.0, |row| row[action])
    }

    pub fn set(&mut self, state: StateKey, action: usize, value: f64) {
        let actions = self.actions;
        self.rows.entry(state).or_insert_with(|| vec![0.0; actions])[action] = value;
    }

    pub fn max(&self, state: StateKey) -> f64 {
        self.rows
            .get(&state)
            .map_or(0.0, |row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Greedy action; ties go to the lowest index.
    pub fn argmax(&self, state: StateKey) -> usize {
        self.rows.get(&state).map_or(0, |row| argmax(row))
    }

    /// Number of states with at least one written entry.
    pub fn states(&self) -> usize {
        self.rows.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateKey, &[f64])> {
        self.rows.iter().map(|(s, r)| (*s, r.as_slice()))
    }

    /// Every stored entry, states in key order.
    pub fn entries(&self) -> Vec<QEntry> {
        self.rows
            .iter()
            .flat_map(|(s, row)| {
                row.iter().enumerate().map(move |(a, &v)| QEntry {
                    state_bins: s.bins(),
                    action_index: a,
                    value: v,
                })
            })
            .collect()
    }

    pub fn from_entries(actions: usize, entries: &[QEntry]) -> Result<Self> {
        let mut q = Self::new(actions);
        for e in entries {
            if e.action_index >= actions {
                return Err(Error::OutOfRange {
                    index: e.action_index,
                    count: actions,
                });
            }
            if !e.value.is_finite() {
                return Err(Error::Numeric("non-finite Q value".into()));
            }
            let state = e.state_bins.map_or(StateKey::Start, StateKey::Bins);
            q.set(state, e.action_index, e.value);
        }
        Ok(q)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    /// Learning rate in `(0, 1]`.
    pub alpha: f64,
    /// Discount factor in `[0, 1)`.
    pub gamma: f64,
    /// Exploration probability.
    pub epsilon: f64,
    pub max_steps_per_episode: usize,
    pub num_episodes: usize,
    /// Set from the run's seed, not read from configuration files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 0.1,
            max_steps_per_episode: 100,
            num_episodes: 300,
            seed: 1,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!("gamma = {} not in [0, 1)", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(format!("epsilon = {} not in [0, 1]", self.epsilon)));
        }
        if self.max_steps_per_episode == 0 {
            return Err(Error::config("max_steps_per_episode must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: StateKey,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateKey,
    pub terminal: bool,
}

/// What the environment reports after an action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub next_state: StateKey,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Environment {
    fn action_count(&self) -> usize;
    fn step(&mut self, action: usize) -> Result<Step>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    pub sample: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub reached_terminal: bool,
    pub final_action: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub episodes: Vec<EpisodeStats>,
    pub greedy_action: usize,
}

/// Epsilon-greedy choice over `actions` actions.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    state: StateKey,
    actions: usize,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    debug_assert!(actions >= 1);
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        rng.gen_range(0..actions)
    } else {
        q.argmax(state)
    }
}

/// `Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))`.
pub fn q_update(q: &mut QTable, t: &Transition, cfg: &LearnerConfig) -> Result<f64> {
    let current = q.get(t.state, t.action);
    let bootstrap = if t.terminal { 0.0 } else { q.max(t.next_state) };
    // same update, written so that alpha = 1 lands exactly on the target
    let value = (1.0 - cfg.alpha) * current + cfg.alpha * (t.reward + cfg.gamma * bootstrap);
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "Q update produced {value} for action {}",
            t.action
        )));
    }
    q.set(t.state, t.action, value);
    Ok(value)
}

pub fn run_episode<E: Environment + ?Sized, R: Rng + ?Sized>(
    env: &mut E,
    q: &mut QTable,
    cfg: &LearnerConfig,
    rng: &mut R,
    episode: usize,
) -> Result<EpisodeStats> {
    let actions = env.action_count();
    let mut state = StateKey::Start;
    let mut total_reward = 0.0;
    let mut steps = 0;
    let mut last_action = 0;
    let mut reached_terminal = false;
    while steps < cfg.max_steps_per_episode {
        let action = select_action(q, state, actions, cfg.epsilon, rng);
        let step = env.step(action)?;
        let t = Transition {
            state,
            action,
            reward: step.reward,
            next_state: step.next_state,
            terminal: step.terminal,
        };
        q_update(q, &t, cfg)?;
        steps += 1;
        total_reward += step.reward;
        last_action = action;
        state = step.next_state;
        if step.terminal {
            reached_terminal = true;
            break;
        }
    }
    Ok(EpisodeStats {
        episode,
        sample: 0,
        steps,
        total_reward,
        reached_terminal,
        final_action: last_action,
    })
}

/// Runs `cfg.num_episodes` episodes over `samples` images in round-robin
/// order, sharing one Q-table.
///
/// Every image's episodes begin in [`StateKey::Start`], so the recommended
/// action is the greedy action there.
pub fn train<E, F>(samples: usize, mut make_env: F, q: &mut QTable, cfg: &LearnerConfig) -> Result<TrainingReport>
where
    E: Environment,
    F: FnMut(usize) -> Result<E>,
{
    cfg.validate()?;
    if samples == 0 {
        return Err(Error::config("training needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut episodes = Vec::with_capacity(cfg.num_episodes);
    for e in 0..cfg.num_episodes {
        let sample = e % samples;
        let mut env = make_env(sample)?;
        if env.action_count() != q.actions() {
            return Err(Error::contract(format!(
                "environment has {} actions, Q-table {}",
                env.action_count(),
                q.actions()
            )));
        }
        let mut stats = run_episode(&mut env, q, cfg, &mut rng, e)?;
        stats.sample = sample;
        episodes.push(stats);
    }
    Ok(TrainingReport {
        episodes,
        greedy_action: q.argmax(StateKey::Start),
    })
}
