//! Diversified nearest-neighbor search by post-filtering.
//!
//! A backbone index returns the `S` nearest candidates for a query. A cutoff
//! table, built once, lists for every database vector the IDs lying within
//! squared distance `eps` of it. The filter walks the candidates nearest
//! first, accepts one, strikes its table entries from the remaining pool and
//! repeats until `K` results are accepted. Accepted results are pairwise at
//! least `sqrt(eps)` apart, and the filter never touches a vector.
//!
//! ```
//! use lotusfilter::{build_cutoff_table, build_index, search_and_filter, FilterParams, VectorDataset};
//!
//! let data = VectorDataset::new(1, vec![0.0, 0.1, 1.0, 1.05, 2.0])?;
//! let index = build_index(&data)?;
//! let table = build_cutoff_table(&index, 0.25)?;
//! let params = FilterParams::new(5, 3, false)?;
//! let result = search_and_filter(&[0.0], &index, &table, &params)?;
//! assert_eq!(result.ids, [0, 2, 4]);
//! # Ok::<(), lotusfilter::Error>(())
//! ```

pub mod bench;
pub mod cutoff;
pub mod dataset;
pub mod error;
pub mod filter;
pub mod index;
pub mod objective;
pub mod ordered_set;
pub mod trainer;

pub use cutoff::{build_cutoff_table, CutoffTable};
pub use dataset::{generate_synthetic, squared_distance, QuerySet, SyntheticMixture, VectorDataset};
pub use error::{Error, Result};
pub use filter::{filter_candidates, search_and_filter, DiverseResult, FilterParams, LotusFilter};
pub use index::{build_index, ExactIndex, Neighbor, NeighborIndex};
pub use objective::{
    brute_force_optimal, clustering_baseline, cost_f, gmm_baseline, CostBreakdown,
};
pub use ordered_set::OrderedSet;
pub use trainer::{
    estimate_eps_max, expected_f, train_epsilon, CostEstimate, TrainConfig, TrainResult,
    TrainingSet,
};
