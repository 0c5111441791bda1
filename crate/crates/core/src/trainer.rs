//! Choosing `eps` by minimizing the mean filtered cost over training queries.
//!
//! The search is a five-round bracketing: sample an equally spaced grid over
//! the current interval, keep the best point seen so far, halve the radius
//! and re-center on the best point, clamped to `[0, eps_max]`.
//!
//! Evaluating one `eps` only needs each training query's `S` candidates and
//! the distances among them, because the filter never looks at a cutoff
//! entry outside the candidate list. [`TrainingSet`] precomputes those once
//! so every grid point costs `O(|Q| K S)` instead of a full table build. It
//! produces bit-identical values to [`expected_f`], which builds the real
//! table.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::build_cutoff_table;
use crate::dataset::{sq_dist, QuerySet, VectorDataset};
use crate::error::{Error, Result};
use crate::filter::{greedy_filter, search_and_filter, FilterParams};
use crate::index::NeighborIndex;
use crate::objective::{check_lambda, cost_f, CostBreakdown};

pub const DEFAULT_WIDTH_SCHEDULE: [usize; 5] = [10, 10, 10, 10, 100];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eps_max: f64,
    pub rounds: usize,
    /// Grid divisions per round; round `t` evaluates `width_schedule[t] + 1`
    /// points.
    pub width_schedule: Vec<usize>,
    pub lambda: f64,
    pub s_candidates: usize,
    pub k_results: usize,
}

impl TrainConfig {
    /// Default five-round schedule.
    pub fn new(eps_max: f64, lambda: f64, s_candidates: usize, k_results: usize) -> Result<Self> {
        let cfg = Self {
            eps_max,
            rounds: DEFAULT_WIDTH_SCHEDULE.len(),
            width_schedule: DEFAULT_WIDTH_SCHEDULE.to_vec(),
            lambda,
            s_candidates,
            k_results,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_schedule(mut self, width_schedule: Vec<usize>) -> Result<Self> {
        self.rounds = width_schedule.len();
        self.width_schedule = width_schedule;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_max > 0.0 && self.eps_max.is_finite()) {
            return Err(Error::invalid(format!(
                "eps_max must be positive and finite, got {}",
                self.eps_max
            )));
        }
        if self.rounds == 0 || self.width_schedule.len() != self.rounds {
            return Err(Error::invalid(format!(
                "schedule has {} entries for {} rounds",
                self.width_schedule.len(),
                self.rounds
            )));
        }
        if self.width_schedule.contains(&0) {
            return Err(Error::invalid("grid widths must be at least 1"));
        }
        check_lambda(self.lambda)?;
        if self.k_results < 2 {
            return Err(Error::invalid("training needs K >= 2 for the diversity term"));
        }
        FilterParams::new(self.s_candidates, self.k_results, true).map(|_| ())
    }

    fn filter_params(&self) -> FilterParams {
        FilterParams {
            s_candidates: self.s_candidates,
            k_results: self.k_results,
            safeguard: true,
        }
    }
}

/// Mean cost at one `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub mean_f: f64,
    /// Queries that contributed.
    pub evaluated: usize,
    /// Queries whose result had fewer than two IDs.
    pub skipped: usize,
}

fn mean_of(per_query: Vec<Option<f64>>) -> Result<CostEstimate> {
    let skipped = per_query.iter().filter(|f| f.is_none()).count();
    let evaluated = per_query.len() - skipped;
    if evaluated == 0 {
        return Err(Error::invalid("no training query produced two or more results"));
    }
    let sum = per_query.into_iter().flatten().fold(0.0, |acc, f| acc + f);
    Ok(CostEstimate {
        mean_f: sum / evaluated as f64,
        evaluated,
        skipped,
    })
}

/// Maximum squared distance among all pairs of `n_samples` distinct vectors
/// drawn with a seeded RNG (all vectors when `n_samples >= N`).
pub fn estimate_eps_max(data: &VectorDataset, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::invalid("need at least 2 samples to estimate eps_max"));
    }
    let n = data.n_vectors();
    let picked: Vec<usize> = if n_samples >= n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = sample(&mut rng, n, n_samples).into_vec();
        v.sort_unstable();
        v
    };
    let mut best = 0.0f64;
    for (a, &i) in picked.iter().enumerate() {
        for &j in &picked[a + 1..] {
            best = best.max(sq_dist(data.row(i), data.row(j)));
        }
    }
    Ok(best)
}

/// Reference evaluation: build the cutoff table at `eps`, run the filter with
/// the safeguard on for every training query, and average the cost.
pub fn expected_f<I: NeighborIndex>(
    eps: f64,
    queries: &QuerySet,
    index: &I,
    data: &VectorDataset,
    cfg: &TrainConfig,
) -> Result<CostEstimate> {
    cfg.validate()?;
    queries.ensure_dim(data.dim())?;
    let table = build_cutoff_table(index, eps)?;
    let params = cfg.filter_params();
    let per_query = (0..queries.n_queries())
        .into_par_iter()
        .map(|qi| {
            let q = queries.query(qi);
            let result = search_and_filter(q, index, &table, &params)?;
            if result.ids.len() < 2 {
                return Ok(None);
            }
            Ok(Some(cost_f(q, &result.ids, data, cfg.lambda)?.total))
        })
        .collect::<Result<Vec<_>>>()?;
    mean_of(per_query)
}

/// One query's candidates with every distance the filter and cost need.
#[derive(Debug, Clone)]
struct CandidateBlock {
    ids: Vec<u32>,
    query_dist: Vec<f64>,
    /// Condensed upper triangle of pairwise squared distances.
    pair: Vec<f64>,
}

impl CandidateBlock {
    #[inline]
    fn pair(&self, a: usize, b: usize) -> f64 {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        let s = self.ids.len();
        self.pair[i * s - i * (i + 1) / 2 + (j - i - 1)]
    }

    fn cost_at(&self, eps: f64, k: usize, lambda: f64) -> Result<Option<f64>> {
        let s = self.ids.len();
        let result = greedy_filter((0..s as u32).collect(), k, true, |head| {
            let h = head as usize;
            (0..s)
                .filter(|&j| j != h && self.pair(h, j) < eps)
                .map(|j| j as u32)
                .collect::<Vec<u32>>()
        })?;
        if result.ids.len() < 2 {
            return Ok(None);
        }
        // Same accumulation order as `cost_f`: ascending database ID.
        let mut local: Vec<usize> = result.ids.iter().map(|&l| l as usize).collect();
        local.sort_unstable_by_key(|&l| self.ids[l]);
        let sum = local.iter().fold(0.0, |acc, &l| acc + self.query_dist[l]);
        let mut min_pair = f64::INFINITY;
        for (x, &a) in local.iter().enumerate() {
            for &b in &local[x + 1..] {
                min_pair = min_pair.min(self.pair(a, b));
            }
        }
        Ok(Some(
            CostBreakdown::from_parts(sum, local.len(), min_pair, lambda).total,
        ))
    }
}

/// Precomputed candidate neighborhoods for a fixed set of training queries
/// and a fixed `S`.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    blocks: Vec<CandidateBlock>,
}

impl TrainingSet {
    pub fn new<I: NeighborIndex>(
        queries: &QuerySet,
        index: &I,
        data: &VectorDataset,
        s_candidates: usize,
    ) -> Result<Self> {
        queries.ensure_dim(data.dim())?;
        if index.size() != data.n_vectors() {
            return Err(Error::invalid("index and dataset sizes differ"));
        }
        let blocks = (0..queries.n_queries())
            .into_par_iter()
            .map(|qi| {
                let hits = index.knn(queries.query(qi), s_candidates)?;
                let ids: Vec<u32> = hits.iter().map(|h| h.id).collect();
                let query_dist = hits.iter().map(|h| h.dist).collect();
                let s = ids.len();
                let mut pair = Vec::with_capacity(s * s.saturating_sub(1) / 2);
                for a in 0..s {
                    let xa = data.row(ids[a] as usize);
                    for &b in &ids[a + 1..] {
                        pair.push(sq_dist(xa, data.row(b as usize)));
                    }
                }
                Ok(CandidateBlock {
                    ids,
                    query_dist,
                    pair,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks })
    }

    pub fn n_queries(&self) -> usize {
        self.blocks.len()
    }

    /// Equals [`expected_f`] at the same `eps`, `K` and `lambda`.
    pub fn expected_f(&self, eps: f64, k: usize, lambda: f64) -> Result<CostEstimate> {
        check_lambda(lambda)?;
        if eps.is_nan() || eps < 0.0 {
            return Err(Error::invalid(format!("eps must be non-negative, got {eps}")));
        }
        let per_query = self
            .blocks
            .par_iter()
            .map(|b| b.cost_at(eps, k, lambda))
            .collect::<Result<Vec<_>>>()?;
        mean_of(per_query)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub eps: f64,
    pub mean_f: f64,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub eps_star: f64,
    pub f_star: f64,
    /// Every grid evaluation in order, repeated points included.
    pub trace: Vec<TraceRow>,
}

/// The bracketing loop over an arbitrary objective. Repeated grid points are
/// evaluated once and served from a cache. Ties keep the smaller `eps`.
pub fn bracket_minimize<F>(eps_max: f64, schedule: &[usize], mut objective: F) -> Result<TrainResult>
where
    F: FnMut(f64) -> Result<CostEstimate>,
{
    if !(eps_max > 0.0 && eps_max.is_finite()) || schedule.is_empty() || schedule.contains(&0) {
        return Err(Error::invalid("bracketing needs eps_max > 0 and widths >= 1"));
    }
    let mut cache: HashMap<u64, CostEstimate> = HashMap::new();
    let mut left = 0.0f64;
    let mut right = eps_max;
    let mut radius = right - left;
    let mut best = (f64::INFINITY, f64::INFINITY);
    let mut trace = Vec::with_capacity(schedule.iter().map(|w| w + 1).sum());
    for (round, &width) in schedule.iter().enumerate() {
        let step = (right - left) / width as f64;
        for i in 0..=width {
            let eps = if i == width { right } else { left + step * i as f64 };
            let est = match cache.get(&eps.to_bits()) {
                Some(e) => *e,
                None => {
                    let e = objective(eps)?;
                    cache.insert(eps.to_bits(), e);
                    e
                }
            };
            trace.push(TraceRow {
                round,
                eps,
                mean_f: est.mean_f,
                skipped: est.skipped,
            });
            let (best_eps, best_f) = best;
            if est.mean_f < best_f || (est.mean_f == best_f && eps < best_eps) {
                best = (eps, est.mean_f);
            }
        }
        radius /= 2.0;
        left = (best.0 - radius).max(0.0);
        right = (best.0 + radius).min(eps_max);
    }
    Ok(TrainResult {
        eps_star: best.0,
        f_star: best.1,
        trace,
    })
}

/// Learns `eps*` for the given training queries.
pub fn train_epsilon<I: NeighborIndex>(
    queries: &QuerySet,
    index: &I,
    data: &VectorDataset,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    let set = TrainingSet::new(queries, index, data, cfg.s_candidates)?;
    train_on(&set, cfg)
}

/// [`train_epsilon`] over an existing [`TrainingSet`].
pub fn train_on(set: &TrainingSet, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    bracket_minimize(cfg.eps_max, &cfg.width_schedule, |eps| {
        set.expected_f(eps, cfg.k_results, cfg.lambda)
    })
}
