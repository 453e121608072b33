// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Acceptance checks. Each criterion prints one PASS or FAIL line; the
//! process exits nonzero if any criterion fails.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use hypermod::experiments::{
    angle_approximation_check, median, run_convergence_experiment, run_rows, ExperimentConfig,
};
use hypermod::geometry::{ModelParams, PolarPoint};
use hypermod::graph::{build_graph_fast, build_graph_naive, build_model_graph, Graph};
use hypermod::modularity::{
    brute_force_modularity, check_lemma_hypotheses, edge_removal_holds, exact_score,
    greedy_optimize, part_stats, sector_indices, sector_partition, Partition,
};
use hypermod::sampling::{sample_points, PointSet, SampleMode, Seed};
use hypermod::stats::{
    average_local_clustering, defect_volume_x, expected_avg_degree, expected_vol_box,
    global_clustering, tail_exponent,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn seeds(count: u64) -> impl Iterator<Item = u64> {
    1..=count
}

fn disc_points(params: &ModelParams, mode: SampleMode, seed: u64) -> Vec<PolarPoint> {
    match sample_points(params, mode, Seed(seed)).unwrap() {
        PointSet::Disc(p) => p,
        PointSet::Band(_) => unreachable!("disc mode"),
    }
}

fn model_graph(alpha: f64, nu: f64, n: f64, seed: u64) -> Graph {
    let params = ModelParams::new(alpha, nu, n).unwrap();
    let points = sample_points(&params, SampleMode::Poisson, Seed(seed)).unwrap();
    build_model_graph(points, &params, None).unwrap()
}

/// Five seeded Poisson graphs at alpha = 0.75, nu = 1, n = 1e5, shared by the
/// degree, tail and clustering criteria.
fn dense_tail_graphs() -> &'static [Graph] {
    static GRAPHS: OnceLock<Vec<Graph>> = OnceLock::new();
    GRAPHS.get_or_init(|| seeds(5).map(|s| model_graph(0.75, 1.0, 1e5, s)).collect())
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let p: f64 = rng.random_range(0.1..0.9);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// `a/b <= c/d` for positive denominators.
fn frac_le((a, b): (i128, i128), (c, d): (i128, i128)) -> bool {
    a * d <= c * b
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Partition {
    Partition::from_labels((0..n).map(|_| rng.random_range(0..k)))
}

/// Splits `0..n` into consecutive runs, the vertex-order analogue of sectors.
fn random_intervals(rng: &mut ChaCha8Rng, n: usize) -> Partition {
    let mut part = 0;
    let labels: Vec<usize> = (0..n)
        .map(|v| {
            if v > 0 && rng.random::<f64>() < 0.4 {
                part += 1;
            }
            part
        })
        .collect();
    Partition::new(labels).unwrap()
}

fn generator_oracle() -> Outcome {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for &alpha in &[0.6, 1.0, 1.8] {
        for &n in &[100.0, 500.0, 2000.0] {
            let params = ModelParams::new(alpha, 2.0, n).unwrap();
            for seed in seeds(20) {
                let pts = disc_points(&params, SampleMode::Binomial, seed);
                let fast: Vec<_> = build_graph_fast(&pts, params.radius()).edges().collect();
                let naive: Vec<_> = build_graph_naive(&pts, params.radius()).edges().collect();
                checked += 1;
                if fast != naive {
                    mismatches.push(format!("alpha={alpha} n={n} seed={seed}"));
                }
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{checked} samples, {} mismatches {:?}",
            mismatches.len(),
            mismatches
        ),
    )
}

fn modularity_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut greedy_over = 0;
    let mut partition_over = 0;
    for i in 0..1000 {
        let n = rng.random_range(1..=7);
        let g = random_graph(&mut rng, n);
        let opt = brute_force_modularity(&g, 8).unwrap();
        let best = (opt.numerator, opt.denominator);
        let greedy = greedy_optimize(&g, Seed(i), 10);
        if !frac_le(exact_score(&g, &greedy).unwrap(), best) {
            greedy_over += 1;
        }
        for _ in 0..3 {
            let k = rng.random_range(1..=n);
            for part in [random_intervals(&mut rng, n), random_labels(&mut rng, n, k)] {
                if !frac_le(exact_score(&g, &part).unwrap(), best) {
                    partition_over += 1;
                }
            }
        }
    }
    let two_triangles =
        Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
    let p3 = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let edgeless = Graph::from_edges(4, &[]).unwrap();
    let tt = brute_force_modularity(&two_triangles, 8).unwrap();
    let hand = [
        2 * tt.numerator == tt.denominator,
        brute_force_modularity(&p3, 8).unwrap().numerator == 0,
        brute_force_modularity(&edgeless, 8).unwrap().numerator == 0,
    ];
    outcome(
        greedy_over == 0 && partition_over == 0 && hand.iter().all(|&h| h),
        format!(
            "1000 graphs: greedy above optimum {greedy_over}, sampled partitions above optimum {partition_over}, \
             hand values (two triangles 1/2, P3 0, edgeless 0) {hand:?}"
        ),
    )
}

fn edge_removal_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut instances = 0;
    while instances < 500 {
        let n = rng.random_range(2..=7);
        let g = random_graph(&mut rng, n);
        let mut edges: Vec<_> = g.edges().collect();
        if edges.is_empty() {
            continue;
        }
        edges.shuffle(&mut rng);
        let removed = rng.random_range(1..=edges.len());
        let reduced = g.without_edges(&edges[..removed]).unwrap();
        let full = brute_force_modularity(&g, 8).unwrap();
        let cut = brute_force_modularity(&reduced, 8).unwrap();
        if !edge_removal_holds(&full, &cut, removed, edges.len()) {
            violations += 1;
        }
        instances += 1;
    }
    outcome(
        violations == 0,
        format!("{instances} instances, {violations} violations"),
    )
}

fn partition_bound_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut pairs = 0;
    // model graphs with their sector partitions
    for seed in seeds(100) {
        let g = model_graph(0.9, 2.0, 300.0, seed);
        if g.edge_count() == 0 {
            continue;
        }
        let part = sector_partition(&g, 1 + (seed as usize % 6)).unwrap();
        let hyp = check_lemma_hypotheses(&g, &part).unwrap();
        violations += usize::from(!hyp.holds_for(&part_stats(&g, &part).unwrap()));
        pairs += 1;
    }
    // arbitrary graphs with arbitrary labelings
    while pairs < 1000 {
        let n = rng.random_range(2..=40);
        let g = random_graph(&mut rng, n);
        if g.edge_count() == 0 {
            continue;
        }
        let k = rng.random_range(1..=n.min(8));
        let part = if rng.random::<bool>() {
            random_labels(&mut rng, n, k)
        } else {
            random_intervals(&mut rng, n)
        };
        let hyp = check_lemma_hypotheses(&g, &part).unwrap();
        violations += usize::from(!hyp.holds_for(&part_stats(&g, &part).unwrap()));
        pairs += 1;
    }
    outcome(
        violations == 0,
        format!("{pairs} pairs, {violations} violations"),
    )
}

fn average_degree() -> Outcome {
    let target = expected_avg_degree(0.75, 1.0).unwrap();
    let means: Vec<f64> = dense_tail_graphs()
        .iter()
        .map(|g| 2.0 * g.edge_count() as f64 / g.vertex_count() as f64)
        .collect();
    let med = median(means.clone());
    let rel = (med / target - 1.0).abs();
    outcome(
        rel <= 0.15,
        format!(
            "median {med:.4} vs {target:.4} (off by {:.1}%), per seed {means:.3?}",
            100.0 * rel
        ),
    )
}

fn degree_tail() -> Outcome {
    let estimates: Vec<f64> = dense_tail_graphs()
        .iter()
        .map(|g| tail_exponent(&g.degrees(), 10).unwrap())
        .collect();
    let med = median(estimates.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (exponent, d_min) = (2.5, 10usize);
    let synthetic: Vec<usize> = (0..100_000)
        .map(|_| {
            let u: f64 = rng.random();
            let x = (d_min as f64 - 0.5) * (1.0 - u).powf(-1.0 / (exponent - 1.0));
            (x + 0.5).floor() as usize
        })
        .collect();
    let self_test = tail_exponent(&synthetic, d_min).unwrap();
    let pass = (med - 2.5).abs() <= 0.3 && (self_test - 2.5).abs() <= 0.1;
    outcome(
        pass,
        format!("model median {med:.3} (per seed {estimates:.3?}), synthetic Pareto(2.5) estimate {self_test:.3}"),
    )
}

fn angle_approximation() -> Outcome {
    let check = angle_approximation_check(30.0, 0.8, 0.05, 10_000, Seed(7)).unwrap();
    outcome(
        check.violations == 0,
        format!(
            "{} pairs, max |theta_R/T_R - 1| = {:.4}, {} at or above 0.05",
            check.pairs, check.max_relative_error, check.violations
        ),
    )
}

fn convergence_trend() -> Outcome {
    let mut cfg = ExperimentConfig::new(0.9, 2.0, vec![1_000, 3_000, 10_000, 30_000, 100_000]);
    cfg.t = 16;
    let rows = run_rows(&cfg, |_| Ok(())).unwrap();
    let failed = rows.iter().filter(|r| r.failed).count();
    let medians: Vec<f64> = cfg
        .n_values
        .iter()
        .map(|&n| {
            median(
                rows.iter()
                    .filter(|r| r.n == n)
                    .map(|r| r.sector_score)
                    .collect(),
            )
        })
        .collect();
    let drops: Vec<f64> = medians
        .windows(2)
        .map(|w| w[0] - w[1])
        .filter(|&d| d > 0.0)
        .collect();
    let monotone = drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.01);
    let last = *medians.last().unwrap();
    outcome(
        failed == 0 && monotone && last >= 0.70,
        format!(
            "medians by n {medians:.4?}, final {last:.4} (threshold 0.70), failed rows {failed}"
        ),
    )
}

fn defect_volume_decay() -> Outcome {
    let mut good = 0;
    let mut worst = Vec::new();
    for seed in seeds(10) {
        let g = model_graph(1.0, 1.0, 1e5, seed);
        let radius = g.params().unwrap().radius();
        let total = defect_volume_x(&g, 0.0, radius).unwrap() as f64;
        let mut max_ratio = 0.0f64;
        let mut ok = true;
        for y in 1..=6 {
            let y = y as f64;
            let ratio = defect_volume_x(&g, y, radius).unwrap() as f64 / total;
            let bound = 3.0 * (-y / 2.0).exp();
            ok &= ratio <= bound;
            max_ratio = max_ratio.max(ratio / bound);
        }
        good += usize::from(ok);
        worst.push(max_ratio);
    }
    outcome(
        good >= 9,
        format!("{good}/10 seeds within 3e^(-y/2) for y = 1..6; largest ratio/bound per seed {worst:.3?}"),
    )
}

fn box_volume() -> Outcome {
    let (alpha, nu, n, y, t) = (1.0, 1.0, 1e4, 4.0, 8usize);
    let params = ModelParams::new(alpha, nu, n).unwrap();
    let target = expected_vol_box(alpha, nu, n, y, t).unwrap();
    let volumes: Vec<f64> = seeds(20)
        .map(|seed| {
            let points = sample_points(&params, SampleMode::Band { y_max: y }, Seed(seed)).unwrap();
            let g = build_model_graph(points, &params, Some(y)).unwrap();
            let boxes = sector_indices(&g, t).unwrap();
            // raw index t + 1 is the box (hI, 2hI] x [0, y]
            (0..g.vertex_count())
                .filter(|&v| boxes[v] == t + 1)
                .map(|v| g.degree(v))
                .sum::<usize>() as f64
        })
        .collect();
    let mean = volumes.iter().sum::<f64>() / volumes.len() as f64;
    let rel = (mean / target - 1.0).abs();
    outcome(
        rel <= 0.10,
        format!(
            "mean vol(A1) {mean:.1} vs {target:.1} (off by {:.1}%) over 20 seeds",
            100.0 * rel
        ),
    )
}

fn inner_disc_emptiness() -> Outcome {
    let (alpha, delta) = (1.0, 0.4);
    let params = ModelParams::new(alpha, 1.0, 1e5).unwrap();
    let cutoff = delta * params.radius();
    let counts: Vec<usize> = seeds(10)
        .map(|seed| {
            disc_points(&params, SampleMode::Poisson, seed)
                .iter()
                .filter(|p| p.r < cutoff)
                .count()
        })
        .collect();
    let empty = counts.iter().filter(|&&c| c == 0).count();
    outcome(
        empty >= 9,
        format!("{empty}/10 seeds with no point below r = {cutoff:.3}; counts {counts:?}"),
    )
}

fn sampling_law() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for (seed, alpha) in [(12, 0.75), (13, 1.0)] {
        let params = ModelParams::new(alpha, 1.0, 1e5).unwrap();
        let radius = params.radius();
        let pts = disc_points(&params, SampleMode::Binomial, seed);
        let mut radii: Vec<f64> = pts.iter().map(|p| p.r).collect();
        radii.sort_by(f64::total_cmp);
        let count = radii.len() as f64;
        let denom = (alpha * radius).cosh() - 1.0;
        let ks = radii
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let f = ((alpha * r).cosh() - 1.0) / denom;
                (f - i as f64 / count)
                    .abs()
                    .max((f - (i + 1) as f64 / count).abs())
            })
            .fold(0.0, f64::max);
        let bins = 100;
        let mut hist = vec![0.0f64; bins];
        for p in &pts {
            let b = ((p.theta.rem_euclid(TAU) / TAU) * bins as f64) as usize;
            hist[b.min(bins - 1)] += 1.0;
        }
        let expected = count / bins as f64;
        let chi2: f64 = hist
            .iter()
            .map(|&o| (o - expected).powi(2) / expected)
            .sum();
        let p_value = ChiSquared::new((bins - 1) as f64).unwrap().sf(chi2);
        pass &= ks < 0.01 && p_value > 0.001;
        details.push(format!(
            "alpha={alpha}: KS {ks:.5}, angle chi-square p {p_value:.3}"
        ));
    }
    outcome(pass, details.join("; "))
}

fn clustering() -> Outcome {
    let small: Vec<Graph> = seeds(5).map(|s| model_graph(0.75, 1.0, 1e4, s)).collect();
    let global_small = median(small.iter().map(global_clustering).collect());
    let global_large = median(dense_tail_graphs().iter().map(global_clustering).collect());
    let local_small = median(small.iter().map(average_local_clustering).collect());
    let local_large = median(
        dense_tail_graphs()
            .iter()
            .map(average_local_clustering)
            .collect(),
    );
    let ratio = global_small.max(global_large) / global_small.min(global_large);
    outcome(
        global_small > 0.0 && global_large > 0.0 && ratio <= 2.0,
        format!(
            "median global clustering {global_small:.4} (n=1e4) vs {global_large:.4} (n=1e5), ratio {ratio:.2}; \
             average local clustering {local_small:.4} vs {local_large:.4}"
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(0.9, 2.0, vec![1_000, 5_000]);
    cfg.seeds = vec![1, 2, 3];
    let mut outputs = Vec::new();
    for (run, threads) in [1usize, 8, 8].into_iter().enumerate() {
        let path = dir.path().join(format!("run{run}.csv"));
        cfg.output_path = path.to_string_lossy().into_owned();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_convergence_experiment(&cfg)).unwrap();
        outputs.push(std::fs::read(&path).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same,
        format!(
            "3 runs (1, 8, 8 threads), {} bytes each, identical: {same}",
            outputs[0].len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 14] = [
        ("generator oracle equivalence", generator_oracle),
        ("modularity oracle", modularity_oracle),
        ("edge removal bound", edge_removal_check),
        ("partition lower bound", partition_bound_check),
        ("average degree", average_degree),
        ("degree tail exponent", degree_tail),
        ("critical angle approximation", angle_approximation),
        ("sector modularity trend", convergence_trend),
        ("defect volume decay", defect_volume_decay),
        ("expected box volume", box_volume),
        ("inner disc emptiness", inner_disc_emptiness),
        ("sampling law", sampling_law),
        ("clustering", clustering),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failures += usize::from(!result.pass);
        println!(
            "criterion {:>2} {}: {} ({:.1}s) {}",
            i + 1,
            name,
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
