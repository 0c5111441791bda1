//! Greedy diversification of a candidate list using the cutoff table.
//!
//! Candidates arrive sorted by distance to the query. The filter repeatedly
//! accepts the nearest remaining candidate and deletes that candidate's
//! cutoff list from the pool, so any two accepted IDs are at least
//! `sqrt(eps)` apart. Only IDs are touched; the original vectors are never
//! read.
//!
//! With the safeguard on, a deletion that would leave too few candidates to
//! reach `k` is skipped, pruning stops, and the result is topped up with the
//! nearest remaining candidates. The distance guarantee no longer holds for
//! such results, which are flagged as `truncated`.

use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffTable;
use crate::error::{Error, Result};
use crate::index::NeighborIndex;
use crate::ordered_set::OrderedSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Candidates fetched from the backbone (`S`).
    pub s_candidates: usize,
    /// Results kept after filtering (`K`).
    pub k_results: usize,
    pub safeguard: bool,
}

impl FilterParams {
    pub fn new(s_candidates: usize, k_results: usize, safeguard: bool) -> Result<Self> {
        let p = Self {
            s_candidates,
            k_results,
            safeguard,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_results == 0 || self.k_results > self.s_candidates {
            return Err(Error::invalid(format!(
                "need 1 <= K <= S, got K={} S={}",
                self.k_results, self.s_candidates
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiverseResult {
    /// Accepted IDs in acceptance order, followed by any safeguard fill.
    pub ids: Vec<u32>,
    /// Set when the safeguard filled the result or fewer than `k` IDs came
    /// back. Only untruncated results carry the pairwise distance guarantee.
    pub truncated: bool,
}

/// Filters `candidates` (nearest first) down to at most `k` diverse IDs.
pub fn filter_candidates(
    candidates: &[u32],
    table: &CutoffTable,
    k: usize,
    safeguard: bool,
) -> Result<DiverseResult> {
    let n = table.n_vectors();
    if let Some(&id) = candidates.iter().find(|&&id| id as usize >= n) {
        return Err(Error::IdOutOfRange { id, len: n });
    }
    greedy_filter(candidates.to_vec(), k, safeguard, |id| table.list(id))
}

/// The selection loop, parameterized over how a head's cutoff list is found.
/// The trainer uses this with lists restricted to one query's candidates.
pub(crate) fn greedy_filter<F, L>(
    candidates: Vec<u32>,
    k: usize,
    safeguard: bool,
    mut cutoff_list: F,
) -> Result<DiverseResult>
where
    F: FnMut(u32) -> L,
    L: AsRef<[u32]>,
{
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut pool = OrderedSet::new(candidates)?;
    let mut ids = Vec::with_capacity(k.min(pool.len()));
    let mut truncated = false;
    while ids.len() < k {
        let Ok(head) = pool.pop() else {
            truncated = true;
            break;
        };
        ids.push(head);
        if ids.len() == k {
            break;
        }
        let list = cutoff_list(head);
        let list = list.as_ref();
        if safeguard {
            let doomed = list.iter().filter(|&&id| pool.contains(id)).count();
            if ids.len() + pool.len() - doomed < k {
                let missing = k - ids.len();
                ids.extend(pool.drain_in_order().into_iter().take(missing));
                truncated = true;
                break;
            }
        }
        for &id in list {
            pool.remove(id);
        }
    }
    truncated |= ids.len() < k;
    Ok(DiverseResult { ids, truncated })
}

/// Backbone k-NN for `S` candidates, then [`filter_candidates`].
pub fn search_and_filter<I: NeighborIndex + ?Sized>(
    query: &[f32],
    index: &I,
    table: &CutoffTable,
    params: &FilterParams,
) -> Result<DiverseResult> {
    params.validate()?;
    if table.n_vectors() != index.size() {
        return Err(Error::invalid(format!(
            "table covers {} vectors, index holds {}",
            table.n_vectors(),
            index.size()
        )));
    }
    let candidates: Vec<u32> = index
        .knn(query, params.s_candidates)?
        .into_iter()
        .map(|h| h.id)
        .collect();
    filter_candidates(&candidates, table, params.k_results, params.safeguard)
}

/// An index, its cutoff table and the filter settings bundled together.
#[derive(Debug)]
pub struct LotusFilter<'a, I: NeighborIndex + ?Sized> {
    index: &'a I,
    table: &'a CutoffTable,
    params: FilterParams,
}

impl<'a, I: NeighborIndex + ?Sized> LotusFilter<'a, I> {
    pub fn new(index: &'a I, table: &'a CutoffTable, params: FilterParams) -> Result<Self> {
        params.validate()?;
        if table.n_vectors() != index.size() {
            return Err(Error::invalid(format!(
                "table covers {} vectors, index holds {}",
                table.n_vectors(),
                index.size()
            )));
        }
        Ok(Self {
            index,
            table,
            params,
        })
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn table(&self) -> &CutoffTable {
        self.table
    }

    pub fn search(&self, query: &[f32]) -> Result<DiverseResult> {
        search_and_filter(query, self.index, self.table, &self.params)
    }
}
