//! The diversified-search cost and the methods it is used to compare.
//!
//! For a selection `K` of size `k` and weight `lambda`:
//!
//! ```text
//! f(K) = (1 - lambda) / k * sum_{i in K} |q - x_i|^2  -  lambda * min_{i != j in K} |x_i - x_j|^2
//! ```
//!
//! Lower is better. The first part is reported as `search_term`, the second
//! (non-positive) part as `diversity_term`. Query distances are summed in
//! ascending-ID order, so the cost of a set does not depend on how the
//! selection is ordered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{sq_dist, VectorDataset};
use crate::error::{Error, Result};

/// Upper bound on the subsets [`brute_force_optimal`] will enumerate.
pub const MAX_ENUMERATED_SUBSETS: u128 = 1_000_000;

/// Lloyd iterations used by [`clustering_baseline`].
pub const KMEANS_MAX_ITERS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub search_term: f64,
    pub diversity_term: f64,
    pub total: f64,
}

impl CostBreakdown {
    /// `query_dist_sum` must be accumulated in ascending-ID order.
    pub(crate) fn from_parts(query_dist_sum: f64, k: usize, min_pair: f64, lambda: f64) -> Self {
        let search_term = (1.0 - lambda) / k as f64 * query_dist_sum;
        // `+ 0.0` turns -0.0 into 0.0 when lambda is zero.
        let diversity_term = -lambda * min_pair + 0.0;
        Self {
            search_term,
            diversity_term,
            total: search_term + diversity_term,
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::invalid(format!("lambda must lie in [0, 1], got {lambda}")))
    }
}

fn check_query(query: &[f32], data: &VectorDataset) -> Result<()> {
    if query.len() == data.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: data.dim(),
            actual: query.len(),
        })
    }
}

/// Validated copy of `ids`, sorted ascending.
fn sorted_unique(ids: &[u32], data: &VectorDataset) -> Result<Vec<u32>> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateId(w[0]));
        }
    }
    for &id in &sorted {
        data.check_id(id)?;
    }
    Ok(sorted)
}

/// Cost of `selection` for `query`. Needs at least two IDs, since the
/// diversity term is a minimum over pairs.
pub fn cost_f(
    query: &[f32],
    selection: &[u32],
    data: &VectorDataset,
    lambda: f64,
) -> Result<CostBreakdown> {
    check_lambda(lambda)?;
    check_query(query, data)?;
    if selection.len() < 2 {
        return Err(Error::invalid(format!(
            "cost needs at least 2 selected ids, got {}",
            selection.len()
        )));
    }
    let ids = sorted_unique(selection, data)?;
    let sum: f64 = ids
        .iter()
        .map(|&i| sq_dist(query, data.row(i as usize)))
        .fold(0.0, |acc, d| acc + d);
    let mut min_pair = f64::INFINITY;
    for (a, &i) in ids.iter().enumerate() {
        for &j in &ids[a + 1..] {
            min_pair = min_pair.min(sq_dist(data.row(i as usize), data.row(j as usize)));
        }
    }
    Ok(CostBreakdown::from_parts(sum, ids.len(), min_pair, lambda))
}

/// `n choose k`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exact minimizer of the cost over all `k`-subsets of `candidates`.
///
/// Returns the subset (ascending IDs) and its total cost. Ties go to the
/// lexicographically smallest ID set. Refuses to enumerate more than
/// [`MAX_ENUMERATED_SUBSETS`] subsets.
pub fn brute_force_optimal(
    query: &[f32],
    candidates: &[u32],
    k: usize,
    data: &VectorDataset,
    lambda: f64,
) -> Result<(Vec<u32>, f64)> {
    check_lambda(lambda)?;
    check_query(query, data)?;
    let ids = sorted_unique(candidates, data)?;
    let n = ids.len();
    if k < 2 || k > n {
        return Err(Error::invalid(format!(
            "need 2 <= k <= {n} candidates, got k={k}"
        )));
    }
    let subsets = binomial(n, k);
    if subsets > MAX_ENUMERATED_SUBSETS {
        return Err(Error::TooManySubsets {
            subsets,
            limit: MAX_ENUMERATED_SUBSETS,
        });
    }
    let qd: Vec<f64> = ids
        .iter()
        .map(|&i| sq_dist(query, data.row(i as usize)))
        .collect();
    let mut pair = vec![0.0f64; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let d = sq_dist(data.row(ids[a] as usize), data.row(ids[b] as usize));
            pair[a * n + b] = d;
            pair[b * n + a] = d;
        }
    }

    let mut combo: Vec<usize> = (0..k).collect();
    let mut best = (f64::INFINITY, combo.clone());
    loop {
        let sum = combo.iter().fold(0.0, |acc, &a| acc + qd[a]);
        let mut min_pair = f64::INFINITY;
        for (x, &a) in combo.iter().enumerate() {
            for &b in &combo[x + 1..] {
                min_pair = min_pair.min(pair[a * n + b]);
            }
        }
        let f = CostBreakdown::from_parts(sum, k, min_pair, lambda).total;
        if f < best.0 {
            best = (f, combo.clone());
        }
        // Next combination in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
            break;
        };
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
    Ok((best.1.into_iter().map(|a| ids[a]).collect(), best.0))
}

fn check_baseline_args(candidates: &[u32], k: usize, data: &VectorDataset) -> Result<()> {
    if k == 0 || k > candidates.len() {
        return Err(Error::invalid(format!(
            "need 1 <= k <= {} candidates, got k={k}",
            candidates.len()
        )));
    }
    sorted_unique(candidates, data).map(|_| ())
}

/// Greedy max-min selection.
///
/// Starts from the candidate nearest to the query, then repeatedly adds the
/// candidate whose distance to the current selection is largest. Ties go to
/// the smaller ID. Returns IDs in selection order.
pub fn gmm_baseline(
    query: &[f32],
    candidates: &[u32],
    k: usize,
    data: &VectorDataset,
) -> Result<Vec<u32>> {
    check_query(query, data)?;
    check_baseline_args(candidates, k, data)?;
    let row = |i: usize| data.row(candidates[i] as usize);

    let mut start = 0;
    let mut start_d = f64::INFINITY;
    for i in 0..candidates.len() {
        let d = sq_dist(query, row(i));
        if d < start_d || (d == start_d && candidates[i] < candidates[start]) {
            start = i;
            start_d = d;
        }
    }
    let mut taken = vec![false; candidates.len()];
    let mut gap = vec![f64::INFINITY; candidates.len()];
    let mut picked = Vec::with_capacity(k);
    let mut next = start;
    loop {
        taken[next] = true;
        picked.push(candidates[next]);
        if picked.len() == k {
            break;
        }
        let anchor = row(next);
        let mut far: Option<usize> = None;
        for j in 0..candidates.len() {
            if taken[j] {
                continue;
            }
            gap[j] = gap[j].min(sq_dist(anchor, row(j)));
            far = match far {
                Some(f) if gap[f] > gap[j] || (gap[f] == gap[j] && candidates[f] < candidates[j]) => {
                    Some(f)
                }
                _ => Some(j),
            };
        }
        next = far.expect("k <= candidates");
    }
    Ok(picked)
}

fn sq_dist_f64(a: &[f32], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let d = f64::from(x) - y;
        acc += d * d;
    }
    acc
}

/// k-means over the candidate vectors (k-means++ seeding, at most
/// [`KMEANS_MAX_ITERS`] Lloyd rounds), then the nearest candidate to each
/// centroid. A candidate already claimed by an earlier centroid is passed over
/// for the next nearest one.
pub fn clustering_baseline(
    candidates: &[u32],
    k: usize,
    data: &VectorDataset,
    seed: u64,
) -> Result<Vec<u32>> {
    check_baseline_args(candidates, k, data)?;
    let s = candidates.len();
    let dim = data.dim();
    let row = |i: usize| data.row(candidates[i] as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);
    let mut chosen = vec![false; s];
    let first = rng.random_range(0..s);
    chosen[first] = true;
    centroids.extend(row(first).iter().map(|&v| f64::from(v)));
    let mut weight: Vec<f64> = (0..s).map(|i| sq_dist(row(i), row(first))).collect();
    while centroids.len() < k * dim {
        let total: f64 = weight.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in weight.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            chosen.iter().position(|&c| !c).expect("k <= candidates")
        };
        chosen[pick] = true;
        centroids.extend(row(pick).iter().map(|&v| f64::from(v)));
        for (i, w) in weight.iter_mut().enumerate() {
            *w = w.min(sq_dist(row(i), row(pick)));
        }
        weight[pick] = 0.0;
    }

    // Lloyd iterations.
    let mut assign = vec![usize::MAX; s];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, slot) in assign.iter_mut().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for c in 0..k {
                let d = sq_dist_f64(row(i), &centroids[c * dim..(c + 1) * dim]);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if *slot != best.1 {
                *slot = best.1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for (acc, &v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *acc += f64::from(v);
            }
        }
        for c in 0..k {
            // Empty clusters keep their previous centroid.
            if counts[c] > 0 {
                for d in 0..dim {
                    centroids[c * dim + d] = sums[c * dim + d] / counts[c] as f64;
                }
            }
        }
    }

    let mut used = vec![false; s];
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let centroid = &centroids[c * dim..(c + 1) * dim];
        let mut best: Option<(f64, usize)> = None;
        for i in (0..s).filter(|&i| !used[i]) {
            let d = sq_dist_f64(row(i), centroid);
            let better = match best {
                None => true,
                Some((bd, bi)) => d < bd || (d == bd && candidates[i] < candidates[bi]),
            };
            if better {
                best = Some((d, i));
            }
        }
        let (_, i) = best.expect("k <= candidates");
        used[i] = true;
        out.push(candidates[i]);
    }
    Ok(out)
}
