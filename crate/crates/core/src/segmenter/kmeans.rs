//! Lloyd's k-means with deterministic farthest-point seeding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings besides `k` itself; `k` comes from the action under evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    #[serde(skip)]
    pub k: usize,
    pub max_iters: usize,
    /// Stop once an iteration improves inertia by less than this.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 1,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

impl KMeansConfig {
    pub fn with_k(&self, k: usize) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k-means needs k >= 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("k-means needs max_iters >= 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::config("k-means tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step, first to last.
    pub history: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, ties to the lowest index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = dist2(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn farthest_point_init(points: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let first = (0..points.len())
        .min_by(|&a, &b| {
            points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("non-empty point set");
    let mut centroids = vec![points[first].clone()];
    let mut nearest_d: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while centroids.len() < k {
        let mut pick = 0;
        for (i, &d) in nearest_d.iter().enumerate() {
            if d > nearest_d[pick] {
                pick = i;
            }
        }
        let chosen = points[pick].clone();
        for (d, p) in nearest_d.iter_mut().zip(points) {
            *d = d.min(dist2(p, &chosen));
        }
        centroids.push(chosen);
    }
    centroids
}

pub fn kmeans(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<KMeansResult> {
    cfg.validate()?;
    if points.len() < cfg.k {
        return Err(Error::config(format!(
            "k-means with k = {} needs at least that many points, got {}",
            cfg.k,
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::contract("k-means points differ in dimension"));
    }

    let k = cfg.k;
    let mut centroids = farthest_point_init(points, k);
    let mut assignments = vec![0usize; points.len()];
    let mut distances = vec![0.0; points.len()];
    let mut history = Vec::new();

    for iter in 0..cfg.max_iters {
        let mut inertia = 0.0;
        for ((p, a), d) in points.iter().zip(&mut assignments).zip(&mut distances) {
            let (c, dd) = nearest(p, &centroids);
            *a = c;
            *d = dd;
            inertia += dd;
        }
        let improved = history.last().map_or(f64::INFINITY, |&prev: &f64| prev - inertia);
        history.push(inertia);
        if improved < cfg.tol || iter + 1 == cfg.max_iters {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sizes[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            }
        }
        // Reseed each empty cluster with the point currently worst served.
        for c in 0..k {
            if sizes[c] == 0 {
                let mut far = 0;
                for (i, &d) in distances.iter().enumerate() {
                    if d > distances[far] {
                        far = i;
                    }
                }
                centroids[c] = points[far].clone();
                distances[far] = 0.0;
            }
        }
    }

    let inertia = *history.last().expect("at least one iteration");
    Ok(KMeansResult {
        centroids,
        assignments,
        inertia,
        history,
    })
}
