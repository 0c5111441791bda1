//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Criteria run one after another on purpose: several
//! of them time code, and parallel tests would skew the clocks.
//!
//! `cargo test -p lotusfilter --test acceptance -- <substring>` runs only the
//! criteria whose name contains the substring.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{brute_lists, brute_sq, naive_filter, random_table, uniform_dataset, TombstoneSet};
use lotusfilter::bench::{evaluate, scaling_point, time_filter, EvalConfig, Method};
use lotusfilter::trainer::train_on;
use lotusfilter::{
    brute_force_optimal, build_cutoff_table, build_index, clustering_baseline, cost_f,
    estimate_eps_max, filter_candidates, gmm_baseline, search_and_filter, train_epsilon,
    CutoffTable, FilterParams, NeighborIndex, OrderedSet, QuerySet, SyntheticMixture,
    TrainConfig, TrainingSet, VectorDataset,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and limits.
const DIVERSITY_RUNTIME_LIMIT_S: f64 = 30.0;
const TRAINER_RELATIVE_TOL: f64 = 0.01;
const TRAINER_RUNTIME_LIMIT_S: f64 = 600.0;
const TRAINER_GRID_POINTS: usize = 1000;
const FILTER_TO_SEARCH_MAX: f64 = 0.10;
const DOUBLING_RATIO_MAX: f64 = 2.5;
const DIM_RATIO_MAX: f64 = 1.3;
const S_SWEEP_STD_ERRS: f64 = 1.0;

// Shared synthetic benchmark: 100 clusters of 100 points in 16 dimensions.
const BENCH_CLUSTERS: usize = 100;
const BENCH_PER_CLUSTER: usize = 100;
const BENCH_DIM: usize = 16;
const BENCH_SPREAD: f64 = 0.1;
const BENCH_SEED: u64 = 20_240_601;
const TRAIN_QUERIES: usize = 1000;
const HELD_OUT_QUERIES: usize = 500;
const EPS_MAX_SAMPLES: usize = 1000;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

struct Bench {
    data: VectorDataset,
    train: QuerySet,
    held_out: QuerySet,
    eps_max: f64,
}

impl Bench {
    fn new() -> Self {
        let mix = SyntheticMixture::new(BENCH_CLUSTERS, BENCH_DIM, BENCH_SPREAD, BENCH_SEED).unwrap();
        let data = mix.base(BENCH_PER_CLUSTER).unwrap();
        let train = QuerySet::head_of(&data, TRAIN_QUERIES).unwrap();
        let held_out = mix.queries(HELD_OUT_QUERIES).unwrap();
        let eps_max = estimate_eps_max(&data, EPS_MAX_SAMPLES, BENCH_SEED).unwrap();
        Self {
            data,
            train,
            held_out,
            eps_max,
        }
    }
}

fn pairs_at_least(ids: &[u32], data: &VectorDataset, eps: f64) -> bool {
    ids.iter().enumerate().all(|(a, &i)| {
        ids[a + 1..]
            .iter()
            .all(|&j| brute_sq(data.row(i as usize), data.row(j as usize)) >= eps)
    })
}

fn diversity_bound() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    let mut truncated = 0;
    let mut pairs = 0usize;
    for _ in 0..1000 {
        let data = uniform_dataset(&mut rng, 500, 8);
        // Squared distances between uniform points in [0,1)^8 sit around 1.3.
        let eps = (rng.random_range((1e-3f64).ln()..(4.0f64).ln())).exp();
        let index = build_index(&data).unwrap();
        let table = build_cutoff_table(&index, eps).unwrap();
        let s = rng.random_range(1..=500);
        let k = rng.random_range(1..=s);
        let q: Vec<f32> = (0..8).map(|_| rng.random()).collect();
        let r = search_and_filter(&q, &index, &table, &FilterParams::new(s, k, false).unwrap())
            .unwrap();
        truncated += usize::from(r.truncated);
        pairs += r.ids.len() * (r.ids.len() - 1) / 2;
        if !pairs_at_least(&r.ids, &data, eps) {
            violations += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        violations == 0 && secs < DIVERSITY_RUNTIME_LIMIT_S,
        format!(
            "1000 instances, {pairs} pairs checked, {violations} violations, \
             {truncated} truncated, {secs:.1}s (limit {DIVERSITY_RUNTIME_LIMIT_S}s)"
        ),
    )
}

fn filter_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let mut kinds = [0usize; 3];
    for i in 0..1000 {
        let s = rng.random_range(1..=200);
        let k = rng.random_range(1..=s);
        let n = s + rng.random_range(0..50);
        let kind = i % 3;
        kinds[kind] += 1;
        let p = match kind {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..0.2),
        };
        let table = random_table(&mut rng, n, p);
        let mut ids: Vec<u32> = (0..n as u32).collect();
        ids.shuffle(&mut rng);
        ids.truncate(s);
        let safeguard = rng.random_bool(0.5);
        let got = filter_candidates(&ids, &table, k, safeguard).unwrap();
        let (want, want_trunc) = naive_filter(&ids, &table, k, safeguard);
        if got.ids != want || got.truncated != want_trunc {
            mismatches += 1;
        }
    }
    (
        mismatches == 0,
        format!(
            "1000 instances (empty {}, complete {}, random {}), {mismatches} mismatches",
            kinds[0], kinds[1], kinds[2]
        ),
    )
}

fn ordered_set_differential() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..10_000 {
        let v = rng.random_range(0..64usize);
        let mut ids: Vec<u32> = (0..128).collect();
        ids.shuffle(&mut rng);
        ids.truncate(v);
        let mut fast = OrderedSet::new(ids.clone()).unwrap();
        let mut slow = TombstoneSet::new(&ids);
        let mut ok = true;
        for _ in 0..rng.random_range(0..2 * v + 2) {
            match rng.random_range(0..10) {
                0..=3 => ok &= fast.pop().ok() == slow.pop(),
                4..=7 => {
                    let id = rng.random_range(0..128);
                    ok &= fast.remove(id) == (slow.len() != {
                        slow.remove(id);
                        slow.len()
                    });
                }
                8 => ok &= fast.len() == slow.len(),
                _ => ok &= fast.drain_in_order() == slow.drain(),
            }
            ok &= fast.len() == slow.len();
        }
        // Finish consuming the set so the cursor bound covers a full pass.
        while let Ok(id) = fast.pop() {
            ok &= Some(id) == slow.pop();
        }
        ok &= slow.pop().is_none();
        if v > 0 {
            worst_ratio = worst_ratio.max(fast.cursor_advances() as f64 / v as f64);
        }
        ok &= fast.cursor_advances() <= v;
        mismatches += usize::from(!ok);
    }
    (
        mismatches == 0,
        format!("10000 traces, {mismatches} mismatches, max cursor advances / V = {worst_ratio:.3}"),
    )
}

fn exact_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let mut untruncated = 0;
    for inst in 0..200 {
        let mix = SyntheticMixture::new(5, 4, 0.15, 100 + inst).unwrap();
        let data = mix.base(20).unwrap();
        let q = mix.queries(1).unwrap().query(0).to_vec();
        let lambda: f64 = rng.random();
        let eps = rng.random_range(0.0..0.5);
        let index = build_index(&data).unwrap();
        let table = build_cutoff_table(&index, eps).unwrap();
        let cands: Vec<u32> = index.knn(&q, 10).unwrap().iter().map(|h| h.id).collect();

        let (_, best) = brute_force_optimal(&q, &cands, 3, &data, lambda).unwrap();
        let lotus = filter_candidates(&cands, &table, 3, true).unwrap();
        let gmm = gmm_baseline(&q, &cands, 3, &data).unwrap();
        let clus = clustering_baseline(&cands, 3, &data, inst).unwrap();
        let f = |ids: &[u32]| cost_f(&q, ids, &data, lambda).unwrap();
        let lf = f(&lotus.ids);
        let mut ok = best <= lf.total && best <= f(&gmm).total && best <= f(&clus).total;
        if !lotus.truncated {
            untruncated += 1;
            ok &= lf.diversity_term <= -lambda * eps;
        }
        failures += usize::from(!ok);
    }
    (
        failures == 0,
        format!("200 instances (S=10, K=3), {untruncated} untruncated, {failures} failures"),
    )
}

fn top1_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = uniform_dataset(&mut rng, 2000, 8);
    let index = build_index(&data).unwrap();
    let tables: Vec<CutoffTable> = [0.0, 0.05, 0.2, 0.6, 2.0]
        .iter()
        .map(|&e| build_cutoff_table(&index, e).unwrap())
        .collect();
    let mut misses = 0;
    for _ in 0..1000 {
        let q: Vec<f32> = (0..8).map(|_| rng.random()).collect();
        let table = &tables[rng.random_range(0..tables.len())];
        let s = rng.random_range(1..=300);
        let k = rng.random_range(1..=s);
        let params = FilterParams::new(s, k, rng.random_bool(0.5)).unwrap();
        let r = search_and_filter(&q, &index, table, &params).unwrap();
        // Independent nearest neighbor: smallest distance, then smallest ID.
        let nearest = (0..data.n_vectors())
            .map(|i| (brute_sq(&q, data.row(i)), i as u32))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .unwrap()
            .1;
        misses += usize::from(r.ids.first() != Some(&nearest));
    }
    (misses == 0, format!("1000 queries, {misses} misses"))
}

fn table_structure() -> Outcome {
    let mix = SyntheticMixture::new(20, 16, 0.1, 6).unwrap();
    let data = mix.base(50).unwrap();
    let index = build_index(&data).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut problems = Vec::new();

    let eps = 0.4;
    let table = build_cutoff_table(&index, eps).unwrap();
    let expect = brute_lists(&data, eps);
    let mut asymmetric = 0;
    for (n, list) in table.lists().enumerate() {
        if list.contains(&(n as u32)) {
            problems.push(format!("self reference at {n}"));
        }
        if list != expect[n].as_slice() {
            problems.push(format!("list {n} differs from brute force"));
        }
        asymmetric += list
            .iter()
            .filter(|&&j| !table.list(j).contains(&(n as u32)))
            .count();
    }
    if asymmetric > 0 {
        problems.push(format!("{asymmetric} asymmetric entries"));
    }
    let entries: usize = expect.iter().map(Vec::len).sum();
    if table.memory_bits() != 64 * entries as u64 {
        problems.push("memory_bits mismatch".into());
    }

    let mut pairs = 0;
    while pairs < 20 {
        let a: f64 = rng.random_range(0.0..1.5);
        let b: f64 = rng.random_range(0.0..1.5);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = build_cutoff_table(&index, lo).unwrap();
        let big = build_cutoff_table(&index, hi).unwrap();
        let nested = (0..data.n_vectors() as u32).all(|n| {
            let wide = big.list(n);
            small.list(n).iter().all(|id| wide.binary_search(id).is_ok())
        });
        if !nested {
            problems.push(format!("L({lo:.3}) not within L({hi:.3})"));
        }
        pairs += 1;
    }
    (
        problems.is_empty(),
        format!(
            "N=1000, eps={eps}, L={:.2}, {} bits, 20 monotonicity pairs; {}",
            table.avg_list_length(),
            table.memory_bits(),
            if problems.is_empty() {
                "no problems".to_string()
            } else {
                problems.join("; ")
            }
        ),
    )
}

fn trainer_quality(bench: &Bench) -> Outcome {
    let (lambda, s, k) = (0.3, 150, 30);
    let start = Instant::now();
    let index = build_index(&bench.data).unwrap();
    let cfg = TrainConfig::new(bench.eps_max, lambda, s, k).unwrap();
    let trained = train_epsilon(&bench.train, &index, &bench.data, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let set = TrainingSet::new(&bench.train, &index, &bench.data, s).unwrap();
    let (grid_eps, grid_min) = (0..TRAINER_GRID_POINTS)
        .map(|i| {
            let eps = bench.eps_max * i as f64 / (TRAINER_GRID_POINTS - 1) as f64;
            (eps, set.expected_f(eps, k, lambda).unwrap().mean_f)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let gap = trained.f_star - grid_min;
    let ok = gap <= TRAINER_RELATIVE_TOL * grid_min.abs() && secs < TRAINER_RUNTIME_LIMIT_S;
    (
        ok,
        format!(
            "eps*={:.4} f*={:.5}; grid min f={grid_min:.5} at eps={grid_eps:.4}; \
             relative gap {:.4} (tol {TRAINER_RELATIVE_TOL}); eps_max={:.3}; train {secs:.1}s",
            trained.eps_star,
            trained.f_star,
            gap / grid_min.abs(),
            bench.eps_max
        ),
    )
}

fn trends(bench: &Bench) -> Vec<(&'static str, Outcome)> {
    let (s, k) = (150, 30);
    let index = build_index(&bench.data).unwrap();
    let set = TrainingSet::new(&bench.train, &index, &bench.data, s).unwrap();
    let mut out = Vec::new();

    // (a) and (b) at lambda = 0.3.
    let lambda = 0.3;
    let cfg = TrainConfig::new(bench.eps_max, lambda, s, k).unwrap();
    let eps = train_on(&set, &cfg).unwrap().eps_star;
    let table = build_cutoff_table(&index, eps).unwrap();
    let eval = EvalConfig {
        lambda,
        s_candidates: s,
        k_results: k,
        safeguard: true,
        trials: 1,
        seed: BENCH_SEED,
        methods: Method::ALL.to_vec(),
    };
    let methods = vec![Method::None, Method::Clustering, Method::Gmm, Method::Lotus];
    let report = evaluate(
        &bench.data,
        &index,
        Some(&table),
        &bench.held_out,
        &EvalConfig { methods, ..eval },
    )
    .unwrap();
    let row = |m| report.row(m).unwrap();
    let div = |m| row(m).mean_diversity_term;
    let gmm = div(Method::Gmm);
    out.push((
        "trend (a) gmm most diverse",
        (
            gmm < div(Method::None) && gmm < div(Method::Clustering),
            format!(
                "diversity term none={:.4} clustering={:.4} gmm={gmm:.4}",
                div(Method::None),
                div(Method::Clustering)
            ),
        ),
    ));
    let (lotus_f, none_f) = (row(Method::Lotus).mean_f, row(Method::None).mean_f);
    out.push((
        "trend (b) lotus beats plain top-K",
        (
            lotus_f <= none_f,
            format!("eps*={eps:.4}: f lotus={lotus_f:.5} none={none_f:.5} (held-out queries)"),
        ),
    ));

    // (c) lambda sweep.
    let lambdas = [0.1, 0.3, 0.5];
    let mut points = Vec::new();
    for &lambda in &lambdas {
        let cfg = TrainConfig::new(bench.eps_max, lambda, s, k).unwrap();
        let eps = train_on(&set, &cfg).unwrap().eps_star;
        let l = build_cutoff_table(&index, eps).unwrap().avg_list_length();
        points.push((lambda, eps, l));
    }
    let rising = points.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].2 >= w[0].2)
        && points[points.len() - 1].1 > points[0].1
        && points[points.len() - 1].2 > points[0].2;
    out.push((
        "trend (c) eps* and L grow with lambda",
        (
            rising,
            points
                .iter()
                .map(|(lam, e, l)| format!("lambda={lam}: eps*={e:.4} L={l:.2}"))
                .collect::<Vec<_>>()
                .join("; "),
        ),
    ));
    out
}

fn filter_vs_search() -> Outcome {
    let (s, k, lambda) = (500, 100, 0.3);
    let mix = SyntheticMixture::new(1000, 128, 0.05, 7).unwrap();
    let data = mix.base(100).unwrap();
    let index = build_index(&data).unwrap();
    // Within-cluster squared distances concentrate near 2 * 128 * 0.05^2 = 0.64,
    // so this keeps roughly a third of each cluster in every list.
    let eps = 0.6;
    let build = Instant::now();
    let table = build_cutoff_table(&index, eps).unwrap();
    let build_s = build.elapsed().as_secs_f64();
    let queries = mix.queries(200).unwrap();
    let row = scaling_point(&data, &index, &table, &queries, s, k, lambda, true, 5).unwrap();
    let ratio = row.filter.median_ms / row.search.median_ms;
    (
        ratio < FILTER_TO_SEARCH_MAX,
        format!(
            "N=100000 D=128 S={s} K={k} eps={eps:.4} L={:.2} (table {build_s:.1}s): \
             filter {:.4} ms vs search {:.3} ms, ratio {ratio:.4} (limit {FILTER_TO_SEARCH_MAX})",
            table.avg_list_length(),
            row.filter.median_ms,
            row.search.median_ms
        ),
    )
}

/// Median filter ms/query per workload. Rounds cycle through the workloads so
/// clock drift and scheduler noise fall on all of them alike.
fn interleaved_medians(workloads: &[Vec<Vec<u32>>], table: &CutoffTable, k: usize) -> Vec<f64> {
    let mut rounds = vec![Vec::new(); workloads.len()];
    for _ in 0..15 {
        for (w, lists) in workloads.iter().enumerate() {
            rounds[w].push(time_filter(lists, table, k, true, 3).unwrap().median_ms);
        }
    }
    rounds
        .iter_mut()
        .map(|r| {
            r.sort_by(f64::total_cmp);
            r[r.len() / 2]
        })
        .collect()
}

fn scaling(bench: &Bench) -> Vec<(&'static str, Outcome)> {
    let mut out = Vec::new();
    let index = build_index(&bench.data).unwrap();
    let k = 30;
    // The trained operating point for lambda = 0.3.
    let set = TrainingSet::new(&bench.train, &index, &bench.data, 150).unwrap();
    let cfg = TrainConfig::new(bench.eps_max, 0.3, 150, k).unwrap();
    let eps = train_on(&set, &cfg).unwrap().eps_star;
    let table = build_cutoff_table(&index, eps).unwrap();
    let ss = [50, 100, 200, 400, 800];
    let lists: Vec<Vec<Vec<u32>>> = ss
        .iter()
        .map(|&s| lotusfilter::bench::candidate_lists(&index, &bench.held_out, s).unwrap().0)
        .collect();
    let medians = interleaved_medians(&lists, &table, k);
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    out.push((
        "scaling: doubling S",
        (
            worst <= DOUBLING_RATIO_MAX,
            format!(
                "K={k} eps={eps:.4} L={:.2}; S={ss:?} median ms {:?}; ratios {:?} (limit {DOUBLING_RATIO_MAX})",
                table.avg_list_length(),
                medians.iter().map(|m| format!("{m:.5}")).collect::<Vec<_>>(),
                ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
            ),
        ),
    ));

    // Only D changes: the 512-d data is the 8-d data padded with zeros, so
    // both indexes return the same candidates and the filter sees identical
    // inputs.
    let (n_c, per, s, k) = (50, 100, 200, 30);
    let small = SyntheticMixture::new(n_c, 8, 0.1, 8).unwrap().base(per).unwrap();
    let padded: Vec<f32> = small
        .rows()
        .flat_map(|r| r.iter().copied().chain(std::iter::repeat_n(0.0, 504)))
        .collect();
    let large = VectorDataset::new(512, padded).unwrap();
    let table = build_cutoff_table(&build_index(&small).unwrap(), 0.1).unwrap();
    let lists: Vec<Vec<Vec<u32>>> = [&small, &large]
        .iter()
        .map(|data| {
            let index = build_index(data).unwrap();
            let queries = QuerySet::head_of(data, 500).unwrap();
            lotusfilter::bench::candidate_lists(&index, &queries, s).unwrap().0
        })
        .collect();
    assert_eq!(lists[0], lists[1], "padding changed the candidates");
    let times = interleaved_medians(&lists, &table, k);
    let ratio = times[0].max(times[1]) / times[0].min(times[1]);
    out.push((
        "scaling: filter time independent of D",
        (
            ratio <= DIM_RATIO_MAX,
            format!(
                "N=5000 S={s} K={k} L={:.2}: D=8 {:.5} ms, D=512 {:.5} ms, ratio {ratio:.3} (limit {DIM_RATIO_MAX})",
                table.avg_list_length(),
                times[0],
                times[1]
            ),
        ),
    ));
    out
}

fn cost_falls_with_s(bench: &Bench) -> Outcome {
    let (k, lambda) = (20, 0.3);
    let index = build_index(&bench.data).unwrap();
    let mut rows = Vec::new();
    for mult in [1, 2, 3, 5] {
        let s = k * mult;
        let set = TrainingSet::new(&bench.train, &index, &bench.data, s).unwrap();
        let cfg = TrainConfig::new(bench.eps_max, lambda, s, k).unwrap();
        let eps = train_on(&set, &cfg).unwrap().eps_star;
        let table = build_cutoff_table(&index, eps).unwrap();
        let row =
            scaling_point(&bench.data, &index, &table, &bench.held_out, s, k, lambda, true, 1).unwrap();
        rows.push(row);
    }
    let ok = rows.windows(2).all(|w| {
        let se = (w[0].f_std_err.powi(2) + w[1].f_std_err.powi(2)).sqrt();
        w[1].mean_f <= w[0].mean_f + S_SWEEP_STD_ERRS * se
    });
    (
        ok,
        format!(
            "K={k} lambda={lambda}: {}",
            rows.iter()
                .map(|r| format!(
                    "S={} eps*={:.3} f={:.5}±{:.5}",
                    r.s_candidates, r.eps, r.mean_f, r.f_std_err
                ))
                .collect::<Vec<_>>()
                .join("; ")
        ),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));
    let mut failed = 0;
    let mut ran = 0;
    let mut report = |name: &str, outcome: std::thread::Result<Outcome>, secs: f64| {
        ran += 1;
        let (ok, detail) = outcome.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        failed += usize::from(!ok);
        println!("{} {name}: {detail} [{secs:.1}s]", if ok { "PASS" } else { "FAIL" });
    };

    let single: [Criterion; 7] = [
        ("diversity bound", diversity_bound),
        ("greedy filter oracle", filter_oracle),
        ("ordered set differential", ordered_set_differential),
        ("exact oracle sanity", exact_oracle),
        ("top-1 preservation", top1_preservation),
        ("cutoff table structure", table_structure),
        ("trend (d) filter vs exact search", filter_vs_search),
    ];
    for (name, f) in single {
        if wanted(name) {
            let t = Instant::now();
            let outcome = catch_unwind(f);
            report(name, outcome, t.elapsed().as_secs_f64());
        }
    }

    let bench_names = [
        "trainer quality",
        "trend (a)",
        "trend (b)",
        "trend (c)",
        "scaling",
        "cost falls as S grows",
    ];
    if bench_names.iter().any(|n| wanted(n)) {
        let bench = Bench::new();
        if wanted("trainer quality") {
            let t = Instant::now();
            let outcome = catch_unwind(AssertUnwindSafe(|| trainer_quality(&bench)));
            report("trainer quality", outcome, t.elapsed().as_secs_f64());
        }
        if ["trend (a)", "trend (b)", "trend (c)"].iter().any(|n| wanted(n)) {
            let t = Instant::now();
            match catch_unwind(AssertUnwindSafe(|| trends(&bench))) {
                Ok(rows) => {
                    let secs = t.elapsed().as_secs_f64();
                    for (name, o) in rows {
                        report(name, Ok(o), secs);
                    }
                }
                Err(e) => report("trends (a)-(c)", Err(e), t.elapsed().as_secs_f64()),
            }
        }
        if wanted("scaling") {
            let t = Instant::now();
            match catch_unwind(AssertUnwindSafe(|| scaling(&bench))) {
                Ok(rows) => {
                    let secs = t.elapsed().as_secs_f64();
                    for (name, o) in rows {
                        report(name, Ok(o), secs);
                    }
                }
                Err(e) => report("scaling", Err(e), t.elapsed().as_secs_f64()),
            }
        }
        if wanted("cost falls as S grows") {
            let t = Instant::now();
            let outcome = catch_unwind(AssertUnwindSafe(|| cost_falls_with_s(&bench)));
            report("cost falls as S grows", outcome, t.elapsed().as_secs_f64());
        }
    }

    println!("acceptance: {ran} checked, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
