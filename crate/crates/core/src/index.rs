//! Search backbone: the [`NeighborIndex`] contract and an exact reference
//! implementation.

use std::cmp::Ordering;

use crate::dataset::{sq_dist, sq_dist_lanes, VectorDataset};
use crate::error::{Error, Result};

/// One search hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    /// Squared distance to the query.
    pub dist: f64,
}

fn by_dist_then_id(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.dist.total_cmp(&b.dist).then(a.id.cmp(&b.id))
}

/// What the filter needs from a search backbone.
///
/// `knn` returns `min(s, size())` distinct IDs sorted by ascending distance,
/// ties by ascending ID. `range_search` returns IDs whose squared distance is
/// strictly below `eps`. An approximate backbone may miss neighbors but must
/// keep the output format.
pub trait NeighborIndex: Sync {
    fn size(&self) -> usize;

    fn dim(&self) -> usize;

    fn knn(&self, query: &[f32], s: usize) -> Result<Vec<Neighbor>>;

    /// Ascending IDs within squared distance `< eps` of `point`.
    fn range_search(&self, point: &[f32], eps: f64) -> Result<Vec<u32>>;

    /// Like [`range_search`](Self::range_search) around database row `row`,
    /// with `row` itself excluded.
    fn range_search_row(&self, row: u32, eps: f64) -> Result<Vec<u32>>;
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && !eps.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(format!("eps must be non-negative, got {eps}")))
    }
}

/// Datasets smaller than this are scanned without a pivot partition.
const PARTITION_MIN_VECTORS: usize = 2048;
/// Target bucket size. Pivots need to be about as many as the data has
/// clusters, or buckets straddle clusters and prune nothing.
const POINTS_PER_PIVOT: usize = 64;
const MAX_PIVOTS: usize = 4096;

/// Pivot partition used to skip whole buckets during range search.
#[derive(Debug)]
struct Partition {
    pivots: Vec<u32>,
    radii: Vec<f64>,
    buckets: Vec<Vec<u32>>,
}

impl Partition {
    /// Farthest-first pivot selection starting from row 0, then each point
    /// joins its nearest pivot's bucket.
    fn build(data: &VectorDataset, n_pivots: usize) -> Self {
        let n = data.n_vectors();
        let mut nearest = vec![0u32; n];
        let mut best = vec![f64::INFINITY; n];
        let mut pivots = Vec::with_capacity(n_pivots);
        let mut next = 0usize;
        for p in 0..n_pivots {
            pivots.push(next as u32);
            let pivot = data.row(next);
            let mut far = (f64::NEG_INFINITY, 0usize);
            for (i, row) in data.rows().enumerate() {
                let d = sq_dist_lanes(pivot, row);
                if d < best[i] {
                    best[i] = d;
                    nearest[i] = p as u32;
                }
                if best[i] > far.0 {
                    far = (best[i], i);
                }
            }
            if far.0 <= 0.0 {
                break;
            }
            next = far.1;
        }
        let mut buckets = vec![Vec::new(); pivots.len()];
        let mut radii = vec![0.0f64; pivots.len()];
        for i in 0..n {
            let b = nearest[i] as usize;
            buckets[b].push(i as u32);
            radii[b] = radii[b].max(best[i].sqrt());
        }
        Self {
            pivots,
            radii,
            buckets,
        }
    }
}

/// Exhaustive k-NN and exact range search over a borrowed dataset.
///
/// Range search skips buckets whose triangle-inequality lower bound clears
/// `sqrt(eps)` by a relative margin wide enough to absorb the rounding of the
/// pivot kernel. Every surviving point is checked with the exact kernel, so
/// results equal a full scan.
#[derive(Debug)]
pub struct ExactIndex<'a> {
    data: &'a VectorDataset,
    partition: Option<Partition>,
}

impl<'a> ExactIndex<'a> {
    pub fn build(data: &'a VectorDataset) -> Result<Self> {
        let n = data.n_vectors();
        if n == 0 {
            return Err(Error::invalid("cannot index an empty dataset"));
        }
        if n > u32::MAX as usize {
            return Err(Error::invalid(format!("{n} vectors exceed the u32 id space")));
        }
        let partition = (n >= PARTITION_MIN_VECTORS).then(|| {
            let pivots = n.div_ceil(POINTS_PER_PIVOT).min(MAX_PIVOTS);
            Partition::build(data, pivots)
        });
        Ok(Self { data, partition })
    }

    pub fn dataset(&self) -> &'a VectorDataset {
        self.data
    }

    fn check_dim(&self, v: &[f32]) -> Result<()> {
        if v.len() == self.data.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.data.dim(),
                actual: v.len(),
            })
        }
    }

    fn scan(&self, point: &[f32], eps: f64, skip: Option<u32>) -> Vec<u32> {
        let mut out = Vec::new();
        if eps <= 0.0 {
            return out;
        }
        let mut visit = |id: u32| {
            if Some(id) != skip && sq_dist(point, self.data.row(id as usize)) < eps {
                out.push(id);
            }
        };
        match &self.partition {
            None => (0..self.data.n_vectors() as u32).for_each(&mut visit),
            Some(part) => {
                let reach = eps.sqrt() * (1.0 + 1e-9) + 1e-12;
                for (b, &pivot) in part.pivots.iter().enumerate() {
                    let d = sq_dist_lanes(point, self.data.row(pivot as usize)).sqrt();
                    let r = part.radii[b];
                    if d - r > reach + 1e-9 * (d + r) {
                        continue;
                    }
                    part.buckets[b].iter().copied().for_each(&mut visit);
                }
                out.sort_unstable();
            }
        }
        out
    }
}

impl NeighborIndex for ExactIndex<'_> {
    fn size(&self) -> usize {
        self.data.n_vectors()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn knn(&self, query: &[f32], s: usize) -> Result<Vec<Neighbor>> {
        self.check_dim(query)?;
        if s == 0 {
            return Err(Error::invalid("k-NN needs s >= 1"));
        }
        let mut all: Vec<Neighbor> = self
            .data
            .rows()
            .enumerate()
            .map(|(i, row)| Neighbor {
                id: i as u32,
                dist: sq_dist(query, row),
            })
            .collect();
        if s < all.len() {
            all.select_nth_unstable_by(s - 1, by_dist_then_id);
            all.truncate(s);
        }
        all.sort_unstable_by(by_dist_then_id);
        Ok(all)
    }

    fn range_search(&self, point: &[f32], eps: f64) -> Result<Vec<u32>> {
        self.check_dim(point)?;
        check_eps(eps)?;
        Ok(self.scan(point, eps, None))
    }

    fn range_search_row(&self, row: u32, eps: f64) -> Result<Vec<u32>> {
        self.data.check_id(row)?;
        check_eps(eps)?;
        Ok(self.scan(self.data.row(row as usize), eps, Some(row)))
    }
}

/// Builds the reference exact index.
pub fn build_index(data: &VectorDataset) -> Result<ExactIndex<'_>> {
    ExactIndex::build(data)
}
