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

//! Modularity of vertex partitions.
//!
//! For a graph with `m` edges and a partition into parts `A`, the score is
//! `sum_A e(A)/m - (vol(A)/2m)^2`: coverage minus degree tax. Edge counts and
//! volumes are accumulated as integers and each of the two terms is formed by
//! a single division, so equal partitions always produce bit-equal scores.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Geometry, Graph};
use crate::sampling::Seed;

/// Default cap on the vertex count for exhaustive search.
pub const BRUTE_FORCE_MAX_N: usize = 8;

/// A partition of `0..n` into `k` nonempty parts with dense ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    part_of: Vec<usize>,
    part_count: usize,
}

impl Partition {
    /// Validates that ids are dense: every id in `0..k` is used, where `k - 1`
    /// is the largest id.
    pub fn new(part_of: Vec<usize>) -> Result<Partition> {
        let part_count = part_of.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; part_count];
        for &p in &part_of {
            used[p] = true;
        }
        if let Some(missing) = used.iter().position(|&u| !u) {
            return Err(Error::contract(format!(
                "part {missing} of {part_count} is empty"
            )));
        }
        Ok(Partition {
            part_of,
            part_count,
        })
    }

    /// Compacts arbitrary labels into dense ids in order of first appearance.
    pub fn from_labels<T: std::hash::Hash + Eq>(labels: impl IntoIterator<Item = T>) -> Partition {
        let mut ids = HashMap::new();
        let part_of: Vec<usize> = labels
            .into_iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l).or_insert(next)
            })
            .collect();
        Partition {
            part_count: ids.len(),
            part_of,
        }
    }

    /// The one-part partition `{V}`.
    pub fn trivial(n: usize) -> Partition {
        Partition {
            part_of: vec![0; n],
            part_count: usize::from(n > 0),
        }
    }

    pub fn singletons(n: usize) -> Partition {
        Partition {
            part_of: (0..n).collect(),
            part_count: n,
        }
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.part_of[v]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.part_of
    }

    pub fn part_count(&self) -> usize {
        self.part_count
    }

    pub fn vertex_count(&self) -> usize {
        self.part_of.len()
    }
}

/// Per-part aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartStats {
    /// Edges with both ends in the part.
    pub internal: u64,
    pub volume: u64,
    /// Edges with exactly one end in the part.
    pub boundary: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularityBreakdown {
    pub coverage: f64,
    pub degree_tax: f64,
    pub score: f64,
    pub k: usize,
    pub per_part: Vec<PartStats>,
}

fn check_cover(g: &Graph, part: &Partition) -> Result<()> {
    if part.vertex_count() != g.vertex_count() {
        return Err(Error::contract(format!(
            "partition covers {} vertices, graph has {}",
            part.vertex_count(),
            g.vertex_count()
        )));
    }
    Ok(())
}

pub fn part_stats(g: &Graph, part: &Partition) -> Result<Vec<PartStats>> {
    check_cover(g, part)?;
    let mut stats = vec![
        PartStats {
            internal: 0,
            volume: 0,
            boundary: 0
        };
        part.part_count()
    ];
    for (u, v) in g.edges() {
        let (a, b) = (part.part_of(u), part.part_of(v));
        if a == b {
            stats[a].internal += 1;
        } else {
            stats[a].boundary += 1;
            stats[b].boundary += 1;
        }
    }
    for v in 0..g.vertex_count() {
        stats[part.part_of(v)].volume += g.degree(v) as u64;
    }
    Ok(stats)
}

fn breakdown_from_parts(m: u64, per_part: Vec<PartStats>) -> ModularityBreakdown {
    let k = per_part.len();
    if m == 0 {
        return ModularityBreakdown {
            coverage: 0.0,
            degree_tax: 0.0,
            score: 0.0,
            k,
            per_part,
        };
    }
    let internal: u64 = per_part.iter().map(|p| p.internal).sum();
    let squares: u128 = per_part.iter().map(|p| u128::from(p.volume).pow(2)).sum();
    let coverage = internal as f64 / m as f64;
    let degree_tax = squares as f64 / (u128::from(2 * m).pow(2)) as f64;
    ModularityBreakdown {
        coverage,
        degree_tax,
        score: coverage - degree_tax,
        k,
        per_part,
    }
}

pub fn modularity_score(g: &Graph, part: &Partition) -> Result<ModularityBreakdown> {
    let per_part = part_stats(g, part)?;
    Ok(breakdown_from_parts(g.edge_count() as u64, per_part))
}

/// The score as an exact fraction `numerator / denominator`, with denominator
/// `4m^2` (or `0 / 1` for an edgeless graph). Use this to compare scores of
/// different partitions without rounding ties apart.
pub fn exact_score(g: &Graph, part: &Partition) -> Result<(i128, i128)> {
    let m = g.edge_count() as u64;
    if m == 0 {
        check_cover(g, part)?;
        return Ok((0, 1));
    }
    let parts = part_stats(g, part)?;
    Ok((exact_numerator(m, &parts), 4 * i128::from(m).pow(2)))
}

/// Splits the vertices into `2t` equal angular sectors `(i pi/t, (i+1) pi/t]`
/// (disc) or boxes `(i I/t, (i+1) I/t]` (band), `i = -t..t`. Empty sectors are
/// dropped and the remaining ids compacted in angular order.
pub fn sector_partition(g: &Graph, t: usize) -> Result<Partition> {
    if t == 0 {
        return Err(Error::domain("sector count parameter t must be at least 1"));
    }
    let raw = sector_indices(g, t)?;
    let mut used = vec![false; 2 * t];
    for &s in &raw {
        used[s] = true;
    }
    let mut remap = vec![0; 2 * t];
    let mut next = 0;
    for s in 0..2 * t {
        if used[s] {
            remap[s] = next;
            next += 1;
        }
    }
    Ok(Partition {
        part_of: raw.iter().map(|&s| remap[s]).collect(),
        part_count: next,
    })
}

/// Raw sector index in `0..2t` for every vertex.
pub fn sector_indices(g: &Graph, t: usize) -> Result<Vec<usize>> {
    let (coords, scale): (Vec<f64>, f64) = match g.geometry() {
        Geometry::Abstract => {
            return Err(Error::contract("sector partition needs vertex locations"));
        }
        Geometry::Disc { points, .. } => (points.iter().map(|p| p.theta).collect(), PI),
        Geometry::Band {
            points, half_width, ..
        } => (points.iter().map(|p| p.x).collect(), *half_width),
    };
    let t_f = t as f64;
    Ok(coords
        .iter()
        .map(|&c| {
            // c in (i * scale / t, (i + 1) * scale / t] maps to i + t
            let i = (c * t_f / scale).ceil() as i64 - 1;
            (i + t as i64).clamp(0, 2 * t as i64 - 1) as usize
        })
        .collect())
}

/// Maximum of the modularity score over all partitions, found by exhaustive
/// enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularityOptimum {
    pub score: f64,
    pub best: Partition,
    /// Exact score `numerator / denominator` with denominator `4m^2`
    /// (1 for edgeless graphs).
    pub numerator: i128,
    pub denominator: i128,
}

/// Restricted growth strings of length `n` in lexicographic order: `a[0] = 0`
/// and `a[i] <= 1 + max(a[..i])`. Each one encodes a distinct set partition.
pub struct RestrictedGrowth {
    current: Vec<usize>,
    prefix_max: Vec<usize>,
    started: bool,
}

impl RestrictedGrowth {
    pub fn new(n: usize) -> RestrictedGrowth {
        RestrictedGrowth {
            current: vec![0; n],
            prefix_max: vec![0; n],
            started: false,
        }
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let n = self.current.len();
        if !self.started {
            self.started = true;
            return Some(self.current.clone());
        }
        // prefix_max[i] = max(a[0..i]), with prefix_max[0] = 0
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.current[i] <= self.prefix_max[i] {
                self.current[i] += 1;
                let m = self.prefix_max[i].max(self.current[i]);
                for j in i + 1..n {
                    self.current[j] = 0;
                    self.prefix_max[j] = m;
                }
                return Some(self.current.clone());
            }
        }
        None
    }
}

/// Exact score numerator `4m * sum e(A) - sum vol(A)^2` over denominator `4m^2`.
fn exact_numerator(m: u64, parts: &[PartStats]) -> i128 {
    let internal: i128 = parts.iter().map(|p| i128::from(p.internal)).sum();
    let squares: i128 = parts.iter().map(|p| i128::from(p.volume).pow(2)).sum();
    4 * i128::from(m) * internal - squares
}

pub fn brute_force_modularity(g: &Graph, max_n: usize) -> Result<ModularityOptimum> {
    let n = g.vertex_count();
    if n > max_n {
        return Err(Error::TooLarge {
            vertices: n,
            max: max_n,
        });
    }
    let m = g.edge_count() as u64;
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let degrees = g.degrees();
    let mut best_rgs = vec![0; n];
    let mut best_num = i128::MIN;
    for rgs in RestrictedGrowth::new(n) {
        let k = rgs.iter().max().map_or(0, |&x| x + 1);
        let mut internal = 0i128;
        let mut volumes = vec![0i128; k];
        for &(u, v) in &edges {
            if rgs[u] == rgs[v] {
                internal += 1;
            }
        }
        for v in 0..n {
            volumes[rgs[v]] += degrees[v] as i128;
        }
        let num = 4 * i128::from(m) * internal - volumes.iter().map(|v| v * v).sum::<i128>();
        if num > best_num {
            best_num = num;
            best_rgs = rgs;
        }
    }
    let best = Partition::new(best_rgs)?;
    let breakdown = modularity_score(g, &best)?;
    let (numerator, denominator) = if m == 0 {
        (0, 1)
    } else {
        (best_num, 4 * i128::from(m).pow(2))
    };
    Ok(ModularityOptimum {
        score: breakdown.score,
        best,
        numerator,
        denominator,
    })
}

/// Weighted multigraph used between Louvain levels.
struct Level {
    /// Neighbor lists `(node, weight)` without self-loops.
    adjacency: Vec<Vec<(usize, u64)>>,
    /// Weighted degree including twice the self-loop weight.
    strength: Vec<u64>,
}

impl Level {
    fn from_graph(g: &Graph) -> Level {
        let adjacency: Vec<Vec<(usize, u64)>> = (0..g.vertex_count())
            .map(|v| g.neighbors(v).iter().map(|&w| (w, 1)).collect())
            .collect();
        let strength = (0..g.vertex_count()).map(|v| g.degree(v) as u64).collect();
        Level {
            adjacency,
            strength,
        }
    }

    fn len(&self) -> usize {
        self.strength.len()
    }

    /// Collapses each community to one node.
    fn aggregate(&self, community: &[usize], count: usize) -> Level {
        let mut maps: Vec<HashMap<usize, u64>> = vec![HashMap::new(); count];
        let mut strength = vec![0u64; count];
        for v in 0..self.len() {
            let c = community[v];
            strength[c] += self.strength[v];
            for &(w, weight) in &self.adjacency[v] {
                let d = community[w];
                if d != c {
                    *maps[c].entry(d).or_insert(0) += weight;
                }
            }
        }
        let adjacency = maps
            .into_iter()
            .map(|m| {
                let mut list: Vec<(usize, u64)> = m.into_iter().collect();
                list.sort_unstable();
                list
            })
            .collect();
        Level {
            adjacency,
            strength,
        }
    }
}

/// One local-moving phase. Returns whether any node changed community.
fn local_moves(level: &Level, community: &mut [usize], two_m: u64, rng: &mut ChaCha8Rng) -> bool {
    let n = level.len();
    let mut totals = vec![0u64; n];
    for v in 0..n {
        totals[community[v]] += level.strength[v];
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut links: HashMap<usize, u64> = HashMap::new();
    let mut any_move = false;
    loop {
        order.shuffle(rng);
        let mut moved = false;
        for &v in &order {
            let own = community[v];
            let k_v = i128::from(level.strength[v]);
            totals[own] -= level.strength[v];
            links.clear();
            links.insert(own, 0);
            for &(w, weight) in &level.adjacency[v] {
                *links.entry(community[w]).or_insert(0) += weight;
            }
            // gain(c) is proportional to 2m * k_in(c) - tot(c) * k_v
            let gain = |c: usize, k_in: u64| {
                i128::from(two_m) * i128::from(k_in) - i128::from(totals[c]) * k_v
            };
            let mut best = own;
            let mut best_gain = gain(own, links[&own]);
            let mut candidates: Vec<(usize, u64)> = links.iter().map(|(&c, &w)| (c, w)).collect();
            candidates.sort_unstable();
            for (c, k_in) in candidates {
                if c != own && gain(c, k_in) > best_gain {
                    best = c;
                    best_gain = gain(c, k_in);
                }
            }
            totals[best] += level.strength[v];
            if best != own {
                community[v] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        any_move = true;
    }
    any_move
}

/// Louvain-style baseline: local moves from singletons, then aggregation,
/// repeated until nothing moves or `max_passes` levels are done. The result
/// is compared with `{V}` and the better of the two is returned, so its score
/// is never negative.
pub fn greedy_optimize(g: &Graph, seed: Seed, max_passes: usize) -> Partition {
    let n = g.vertex_count();
    let m = g.edge_count() as u64;
    if m == 0 {
        return Partition::trivial(n);
    }
    let base = ChaCha8Rng::seed_from_u64(seed.0);
    let mut level = Level::from_graph(g);
    let mut assignment: Vec<usize> = (0..n).collect();
    for pass in 0..max_passes {
        let mut rng = base.clone();
        rng.set_stream(pass as u64);
        let mut community: Vec<usize> = (0..level.len()).collect();
        if !local_moves(&level, &mut community, 2 * m, &mut rng) {
            break;
        }
        let compact = Partition::from_labels(community.iter().copied());
        for a in assignment.iter_mut() {
            *a = compact.part_of(*a);
        }
        level = level.aggregate(compact.assignments(), compact.part_count());
    }
    let found = Partition::from_labels(assignment);
    match exact_score(g, &found) {
        Ok((num, _)) if num >= 0 => found,
        _ => Partition::trivial(n),
    }
}

/// `1 - k eps / 2 - 1/k - k delta^2`.
pub fn lemma_lower_bound(k: usize, eps: f64, delta: f64) -> f64 {
    let k = k as f64;
    1.0 - k * eps / 2.0 - 1.0 / k - k * delta * delta
}

/// Smallest `eps`, `delta` for which every part satisfies
/// `e(A, not A) <= eps m` and `|vol(A) - 2m/k| <= 2m delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaHypotheses {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    /// Largest boundary count over parts.
    max_boundary: u64,
    /// Largest `|k vol(A) - 2m|` over parts.
    max_imbalance: u64,
    m: u64,
}

impl LemmaHypotheses {
    pub fn bound(&self) -> f64 {
        lemma_lower_bound(self.k, self.eps, self.delta)
    }

    /// Decides `score >= bound` in exact integer arithmetic. At `k = 2` the
    /// bound is attained by every partition, so a floating comparison would
    /// misreport ties.
    pub fn holds_for(&self, parts: &[PartStats]) -> bool {
        let (m, k) = (i128::from(self.m), self.k as i128);
        let b = i128::from(self.max_boundary);
        let d = i128::from(self.max_imbalance);
        // both sides multiplied by 4 m^2 k
        let score = k * exact_numerator(self.m, parts);
        let bound = 4 * m * m * k - 2 * m * k * k * b - 4 * m * m - d * d;
        score >= bound
    }
}

pub fn check_lemma_hypotheses(g: &Graph, part: &Partition) -> Result<LemmaHypotheses> {
    let m = g.edge_count() as u64;
    if m == 0 {
        return Err(Error::domain("lemma hypotheses need at least one edge"));
    }
    let parts = part_stats(g, part)?;
    let k = parts.len() as u64;
    let max_boundary = parts.iter().map(|p| p.boundary).max().unwrap_or(0);
    let max_imbalance = parts
        .iter()
        .map(|p| (k * p.volume).abs_diff(2 * m))
        .max()
        .unwrap_or(0);
    Ok(LemmaHypotheses {
        k: parts.len(),
        eps: max_boundary as f64 / m as f64,
        delta: max_imbalance as f64 / (2.0 * m as f64 * k as f64),
        max_boundary,
        max_imbalance,
        m,
    })
}

/// `2 |E_0| / |E|`, the bound on how far deleting `E_0` can move modularity.
pub fn edge_removal_bound(removed: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::domain(
            "edge removal bound needs a nonempty edge set",
        ));
    }
    if removed > total {
        return Err(Error::domain(format!(
            "cannot remove {removed} of {total} edges"
        )));
    }
    Ok(2.0 * removed as f64 / total as f64)
}

/// Checks `|mod(G) - mod(G')| < 2 |E_0| / |E|` exactly from two optima, where
/// `G'` is `G` with `removed` of its `total` edges deleted.
pub fn edge_removal_holds(
    full: &ModularityOptimum,
    reduced: &ModularityOptimum,
    removed: usize,
    total: usize,
) -> bool {
    // a/b - c/d compared with 2r/t, all denominators positive
    let (a, b) = (full.numerator, full.denominator);
    let (c, d) = (reduced.numerator, reduced.denominator);
    let diff = (a * d - c * b).abs();
    diff * (total as i128) < 2 * (removed as i128) * b * d
}

/// Band cutoff `y_eps = ln(6 / eps) / (alpha - 1/2)`.
pub fn y_epsilon(eps: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.5) {
        return Err(Error::domain(format!(
            "y_eps needs alpha > 1/2, got {alpha}"
        )));
    }
    if !(eps > 0.0 && eps < 6.0) {
        return Err(Error::domain(format!("y_eps needs 0 < eps < 6, got {eps}")));
    }
    Ok((6.0 / eps).ln() / (alpha - 0.5))
}
