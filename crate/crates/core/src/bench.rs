//! Evaluation harness: runs the diversification methods over a query batch
//! and reports cost terms, per-phase latency and memory overhead.
//!
//! Timing: one untimed warm-up pass, then `trials` timed passes. Each pass
//! yields a mean ms/query per phase; the report carries both the median and
//! the mean across passes.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffTable;
use crate::dataset::{QuerySet, VectorDataset};
use crate::error::{Error, Result};
use crate::filter::filter_candidates;
use crate::index::NeighborIndex;
use crate::objective::{
    brute_force_optimal, check_lambda, clustering_baseline, cost_f, gmm_baseline,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain top-K from the backbone.
    None,
    Clustering,
    Gmm,
    Lotus,
    /// Exhaustive subset search; only feasible for tiny `S`.
    Brute,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::None,
        Method::Clustering,
        Method::Gmm,
        Method::Lotus,
        Method::Brute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Clustering => "clustering",
            Method::Gmm => "gmm",
            Method::Lotus => "lotus",
            Method::Brute => "brute",
        }
    }

    /// Bits of auxiliary state: baselines keep the original `f32` vectors
    /// (`32 N D`), the filter keeps its table (`64 L N`).
    pub fn memory_bits(self, data: &VectorDataset, table: Option<&CutoffTable>) -> u64 {
        match self {
            Method::None => 0,
            Method::Clustering | Method::Gmm | Method::Brute => {
                32 * data.n_vectors() as u64 * data.dim() as u64
            }
            Method::Lotus => table.map_or(0, CutoffTable::memory_bits),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub lambda: f64,
    pub s_candidates: usize,
    pub k_results: usize,
    pub safeguard: bool,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.k_results < 2 || self.k_results > self.s_candidates {
            return Err(Error::invalid(format!(
                "evaluation needs 2 <= K <= S, got K={} S={}",
                self.k_results, self.s_candidates
            )));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods requested"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub median_ms: f64,
    pub mean_ms: f64,
}

impl Timing {
    fn from_trials(mut per_query_ms: Vec<f64>) -> Self {
        let mean_ms = per_query_ms.iter().sum::<f64>() / per_query_ms.len() as f64;
        per_query_ms.sort_by(f64::total_cmp);
        let n = per_query_ms.len();
        let median_ms = if n % 2 == 1 {
            per_query_ms[n / 2]
        } else {
            (per_query_ms[n / 2 - 1] + per_query_ms[n / 2]) / 2.0
        };
        Self { median_ms, mean_ms }
    }
}

/// Cost statistics restricted to results the filter did not truncate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UntruncatedStats {
    pub count: usize,
    pub mean_diversity_term: f64,
    /// Largest (least diverse) diversity term in the population.
    pub max_diversity_term: f64,
    pub mean_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    pub mean_search_term: f64,
    pub mean_diversity_term: f64,
    pub mean_f: f64,
    /// Standard error of `mean_f` across queries.
    pub f_std_err: f64,
    pub search: Timing,
    pub filter: Timing,
    pub total: Timing,
    pub memory_bits: u64,
    pub truncation_rate: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub untruncated: Option<UntruncatedStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_vectors: usize,
    pub dim: usize,
    pub n_queries: usize,
    pub config: EvalConfig,
    pub eps: Option<f64>,
    pub avg_list_length: Option<f64>,
    pub rows: Vec<MethodRow>,
}

impl EvalReport {
    pub fn row(&self, method: Method) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Aligned text table of the same numbers the JSON carries.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "N={} D={} queries={} lambda={} S={} K={}",
            self.n_vectors,
            self.dim,
            self.n_queries,
            self.config.lambda,
            self.config.s_candidates,
            self.config.k_results
        );
        if let (Some(eps), Some(l)) = (self.eps, self.avg_list_length) {
            out += &format!(" eps={eps} L={l:.2}");
        }
        out += "\n";
        out += &format!(
            "{:<11} {:>10} {:>10} {:>10} {:>11} {:>11} {:>11} {:>11} {:>7}\n",
            "method", "search", "divers.", "f", "search ms", "filter ms", "total ms", "memory bit", "trunc"
        );
        for r in &self.rows {
            out += &format!(
                "{:<11} {:>10.4} {:>10.4} {:>10.4} {:>11.4} {:>11.4} {:>11.4} {:>11.3e} {:>7.3}\n",
                r.method.name(),
                r.mean_search_term,
                r.mean_diversity_term,
                r.mean_f,
                r.search.median_ms,
                r.filter.median_ms,
                r.total.median_ms,
                r.memory_bits as f64,
                r.truncation_rate
            );
        }
        out
    }
}

struct Selection {
    ids: Vec<u32>,
    truncated: bool,
}

fn select(
    method: Method,
    query: &[f32],
    candidates: &[u32],
    data: &VectorDataset,
    table: Option<&CutoffTable>,
    cfg: &EvalConfig,
    query_seed: u64,
) -> Result<Selection> {
    let k = cfg.k_results.min(candidates.len());
    let plain = |ids: Vec<u32>| Selection {
        truncated: ids.len() < cfg.k_results,
        ids,
    };
    Ok(match method {
        Method::None => plain(candidates[..k].to_vec()),
        Method::Gmm => plain(gmm_baseline(query, candidates, k, data)?),
        Method::Clustering => plain(clustering_baseline(candidates, k, data, query_seed)?),
        Method::Brute => {
            let (ids, _) = brute_force_optimal(query, candidates, k, data, cfg.lambda)?;
            plain(ids)
        }
        Method::Lotus => {
            let table = table.ok_or_else(|| Error::invalid("lotus method needs a cutoff table"))?;
            let r = filter_candidates(candidates, table, cfg.k_results, cfg.safeguard)?;
            Selection {
                ids: r.ids,
                truncated: r.truncated,
            }
        }
    })
}

fn std_err(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Runs one method over every query.
pub fn evaluate_method<I: NeighborIndex>(
    method: Method,
    data: &VectorDataset,
    index: &I,
    table: Option<&CutoffTable>,
    queries: &QuerySet,
    cfg: &EvalConfig,
) -> Result<MethodRow> {
    cfg.validate()?;
    queries.ensure_dim(data.dim())?;
    let n_q = queries.n_queries();
    let fetch = if method == Method::None {
        cfg.k_results
    } else {
        cfg.s_candidates
    };

    let mut selections = Vec::new();
    let mut search_ms = Vec::with_capacity(cfg.trials);
    let mut filter_ms = Vec::with_capacity(cfg.trials);
    let mut total_ms = Vec::with_capacity(cfg.trials);
    // Pass 0 is the warm-up.
    for pass in 0..=cfg.trials {
        let mut search_s = 0.0;
        let mut filter_s = 0.0;
        let mut out = Vec::with_capacity(n_q);
        for qi in 0..n_q {
            let q = queries.query(qi);
            let t0 = Instant::now();
            let hits = index.knn(q, fetch)?;
            let candidates: Vec<u32> = hits.iter().map(|h| h.id).collect();
            let t1 = Instant::now();
            let sel = select(method, q, &candidates, data, table, cfg, cfg.seed.wrapping_add(qi as u64))?;
            let t2 = Instant::now();
            search_s += (t1 - t0).as_secs_f64();
            filter_s += (t2 - t1).as_secs_f64();
            out.push(sel);
        }
        if pass > 0 {
            let per_query = 1e3 / n_q as f64;
            search_ms.push(search_s * per_query);
            filter_ms.push(filter_s * per_query);
            total_ms.push((search_s + filter_s) * per_query);
        }
        selections = out;
    }

    let mut search_terms = Vec::with_capacity(n_q);
    let mut diversity_terms = Vec::with_capacity(n_q);
    let mut fs = Vec::with_capacity(n_q);
    let mut clean = Vec::new();
    let mut truncated = 0;
    let mut skipped = 0;
    for (qi, sel) in selections.iter().enumerate() {
        truncated += usize::from(sel.truncated);
        if sel.ids.len() < 2 {
            skipped += 1;
            continue;
        }
        let c = cost_f(queries.query(qi), &sel.ids, data, cfg.lambda)?;
        search_terms.push(c.search_term);
        diversity_terms.push(c.diversity_term);
        fs.push(c.total);
        if !sel.truncated {
            clean.push(c);
        }
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let untruncated = (method == Method::Lotus && !clean.is_empty()).then(|| {
        let count = clean.len();
        UntruncatedStats {
            count,
            mean_diversity_term: clean.iter().map(|c| c.diversity_term).sum::<f64>() / count as f64,
            max_diversity_term: clean
                .iter()
                .map(|c| c.diversity_term)
                .fold(f64::NEG_INFINITY, f64::max),
            mean_f: clean.iter().map(|c| c.total).sum::<f64>() / count as f64,
        }
    });
    Ok(MethodRow {
        method,
        mean_search_term: mean(&search_terms),
        mean_diversity_term: mean(&diversity_terms),
        mean_f: mean(&fs),
        f_std_err: std_err(&fs),
        search: Timing::from_trials(search_ms),
        filter: Timing::from_trials(filter_ms),
        total: Timing::from_trials(total_ms),
        memory_bits: method.memory_bits(data, table),
        truncation_rate: truncated as f64 / n_q as f64,
        evaluated: fs.len(),
        skipped,
        untruncated,
    })
}

/// Runs every requested method and collects the rows in request order.
pub fn evaluate<I: NeighborIndex>(
    data: &VectorDataset,
    index: &I,
    table: Option<&CutoffTable>,
    queries: &QuerySet,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    let rows = cfg
        .methods
        .iter()
        .map(|&m| evaluate_method(m, data, index, table, queries, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        n_vectors: data.n_vectors(),
        dim: data.dim(),
        n_queries: queries.n_queries(),
        config: cfg.clone(),
        eps: table.map(CutoffTable::epsilon),
        avg_list_length: table.map(CutoffTable::avg_list_length),
        rows,
    })
}

/// Filter-only latency and cost at one `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub s_candidates: usize,
    pub k_results: usize,
    pub eps: f64,
    pub avg_list_length: f64,
    pub filter: Timing,
    pub search: Timing,
    pub mean_f: f64,
    pub f_std_err: f64,
    pub truncation_rate: f64,
}

/// Candidate lists for every query, fetched once.
pub fn candidate_lists<I: NeighborIndex>(
    index: &I,
    queries: &QuerySet,
    s: usize,
) -> Result<(Vec<Vec<u32>>, Timing)> {
    let start = Instant::now();
    let lists = queries
        .iter()
        .map(|q| Ok(index.knn(q, s)?.into_iter().map(|h| h.id).collect()))
        .collect::<Result<Vec<_>>>()?;
    let ms = start.elapsed().as_secs_f64() * 1e3 / queries.n_queries() as f64;
    Ok((lists, Timing { median_ms: ms, mean_ms: ms }))
}

/// Times only the filter step over precomputed candidate lists: one warm-up
/// pass, then `trials` passes, returning ms/query.
pub fn time_filter(
    candidates: &[Vec<u32>],
    table: &CutoffTable,
    k: usize,
    safeguard: bool,
    trials: usize,
) -> Result<Timing> {
    if trials == 0 || candidates.is_empty() {
        return Err(Error::invalid("need at least one trial and one query"));
    }
    let mut per_query = Vec::with_capacity(trials);
    for pass in 0..=trials {
        let start = Instant::now();
        for c in candidates {
            std::hint::black_box(filter_candidates(c, table, k, safeguard)?);
        }
        if pass > 0 {
            per_query.push(start.elapsed().as_secs_f64() * 1e3 / candidates.len() as f64);
        }
    }
    Ok(Timing::from_trials(per_query))
}

/// One point of an `S` sweep: filter timing plus mean cost of the filtered
/// results at this table's `eps`.
#[allow(clippy::too_many_arguments)]
pub fn scaling_point<I: NeighborIndex>(
    data: &VectorDataset,
    index: &I,
    table: &CutoffTable,
    queries: &QuerySet,
    s: usize,
    k: usize,
    lambda: f64,
    safeguard: bool,
    trials: usize,
) -> Result<ScalingRow> {
    check_lambda(lambda)?;
    if k < 2 || k > s {
        return Err(Error::invalid(format!("need 2 <= K <= S, got K={k} S={s}")));
    }
    let (lists, search) = candidate_lists(index, queries, s)?;
    let filter = time_filter(&lists, table, k, safeguard, trials)?;
    let mut fs = Vec::with_capacity(lists.len());
    let mut truncated = 0;
    for (qi, c) in lists.iter().enumerate() {
        let r = filter_candidates(c, table, k, safeguard)?;
        truncated += usize::from(r.truncated);
        if r.ids.len() >= 2 {
            fs.push(cost_f(queries.query(qi), &r.ids, data, lambda)?.total);
        }
    }
    Ok(ScalingRow {
        s_candidates: s,
        k_results: k,
        eps: table.epsilon(),
        avg_list_length: table.avg_list_length(),
        filter,
        search,
        mean_f: fs.iter().sum::<f64>() / fs.len().max(1) as f64,
        f_std_err: std_err(&fs),
        truncation_rate: truncated as f64 / lists.len() as f64,
    })
}

/// For each pair of rows where `S` doubles, the ratio of median filter times.
pub fn doubling_ratios(rows: &[ScalingRow]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for a in rows {
        for b in rows {
            if b.s_candidates == 2 * a.s_candidates && a.k_results == b.k_results {
                out.push((a.s_candidates, b.filter.median_ms / a.filter.median_ms));
            }
        }
    }
    out
}
