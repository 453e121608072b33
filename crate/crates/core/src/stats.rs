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

//! Graph statistics and the model's closed-form targets.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connected_components, Graph};
use crate::modularity::{part_stats, Partition};

/// Fewest tail samples [`tail_exponent`] accepts.
pub const MIN_TAIL_SAMPLES: usize = 100;

/// Limiting average degree `8 alpha^2 nu / (pi (2 alpha - 1)^2)`.
pub fn expected_avg_degree(alpha: f64, nu: f64) -> Result<f64> {
    if !(alpha > 0.5) {
        return Err(Error::domain(format!(
            "average degree is unbounded for alpha <= 1/2, got {alpha}"
        )));
    }
    if !(nu > 0.0) {
        return Err(Error::domain(format!("nu must be positive, got {nu}")));
    }
    Ok(8.0 * alpha * alpha * nu / (PI * (2.0 * alpha - 1.0).powi(2)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub histogram: BTreeMap<usize, usize>,
    pub mean: f64,
    pub max: usize,
    pub isolated_count: usize,
}

pub fn degree_stats(g: &Graph) -> DegreeSummary {
    let mut histogram = BTreeMap::new();
    for v in 0..g.vertex_count() {
        *histogram.entry(g.degree(v)).or_insert(0) += 1;
    }
    let n = g.vertex_count();
    DegreeSummary {
        mean: if n == 0 {
            0.0
        } else {
            (2 * g.edge_count()) as f64 / n as f64
        },
        max: histogram.keys().next_back().copied().unwrap_or(0),
        isolated_count: histogram.get(&0).copied().unwrap_or(0),
        histogram,
    }
}

/// Continuous maximum-likelihood estimate of a power-law tail exponent with
/// the usual half-unit discreteness correction:
/// `1 + k / sum_{d >= d_min} ln(d / (d_min - 1/2))`.
pub fn tail_exponent(degrees: &[usize], d_min: usize) -> Result<f64> {
    if d_min == 0 {
        return Err(Error::domain("d_min must be at least 1"));
    }
    let shift = d_min as f64 - 0.5;
    let (k, log_sum) = degrees
        .iter()
        .filter(|&&d| d >= d_min)
        .fold((0usize, 0.0f64), |(k, s), &d| {
            (k + 1, s + (d as f64 / shift).ln())
        });
    if k < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientData {
            found: k,
            needed: MIN_TAIL_SAMPLES,
        });
    }
    Ok(1.0 + k as f64 / log_sum)
}

/// Number of triangles through each vertex. Each edge is oriented towards the
/// endpoint with the larger `(degree, id)` and the forward lists of its two
/// ends are intersected, so every triangle is found once.
pub fn triangles_per_vertex(g: &Graph) -> Vec<u64> {
    let n = g.vertex_count();
    let rank = |v: usize| (g.degree(v), v);
    let forward: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            g.neighbors(u)
                .iter()
                .copied()
                .filter(|&w| rank(w) > rank(u))
                .collect()
        })
        .collect();
    let mut counts = vec![0u64; n];
    for u in 0..n {
        for &v in &forward[u] {
            let (a, b) = (&forward[u], &forward[v]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        counts[u] += 1;
                        counts[v] += 1;
                        counts[a[i]] += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    counts
}

pub fn triangle_count(g: &Graph) -> u64 {
    triangles_per_vertex(g).iter().sum::<u64>() / 3
}

/// Mean over all vertices of `T_v / C(deg v, 2)`, counting vertices of degree
/// below 2 as 0.
pub fn average_local_clustering(g: &Graph) -> f64 {
    let n = g.vertex_count();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = triangles_per_vertex(g)
        .iter()
        .enumerate()
        .filter(|&(v, _)| g.degree(v) >= 2)
        .map(|(v, &t)| {
            let d = g.degree(v) as f64;
            t as f64 / (d * (d - 1.0) / 2.0)
        })
        .sum();
    total / n as f64
}

/// `3T / sum_v C(deg v, 2)`, or 0 when no vertex has two neighbors.
pub fn global_clustering(g: &Graph) -> f64 {
    let wedges: u64 = (0..g.vertex_count())
        .map(|v| {
            let d = g.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if wedges == 0 {
        return 0.0;
    }
    (3 * triangle_count(g)) as f64 / wedges as f64
}

/// Sum of degrees over vertices whose defect radius lies in `[y1, y2]`.
pub fn defect_volume_x(g: &Graph, y1: f64, y2: f64) -> Result<u64> {
    if !(y1 >= 0.0 && y1 < y2) {
        return Err(Error::domain(format!(
            "need 0 <= y1 < y2, got [{y1}, {y2}]"
        )));
    }
    let defects = g
        .defects()
        .ok_or_else(|| Error::contract("defect volume needs vertex locations"))?;
    Ok(defects
        .iter()
        .enumerate()
        .filter(|(_, &y)| y >= y1 && y <= y2)
        .map(|(v, _)| g.degree(v) as u64)
        .sum())
}

/// Expected volume of one box of width `I/t` in the band graph cut at height `y`:
/// `2 h I [beta / (alpha - 1/2) (1 - e^{-y (alpha - 1/2)})]^2` with `h = 1/t`,
/// `I = (pi/2) n / nu` and `beta = 2 nu alpha / pi`.
pub fn expected_vol_box(alpha: f64, nu: f64, n: f64, y: f64, t: usize) -> Result<f64> {
    if !(alpha > 0.5) {
        return Err(Error::domain(format!(
            "box volume needs alpha > 1/2, got {alpha}"
        )));
    }
    if !(nu > 0.0 && n > 0.0 && y > 0.0) || t == 0 {
        return Err(Error::domain(format!(
            "need nu, n, y > 0 and t >= 1, got nu = {nu}, n = {n}, y = {y}, t = {t}"
        )));
    }
    let h = 1.0 / t as f64;
    let half_width = 0.5 * PI * n / nu;
    let beta = 2.0 * nu * alpha / PI;
    let excess = alpha - 0.5;
    let bracket = beta / excess * (-(-y * excess).exp_m1());
    Ok(2.0 * h * half_width * bracket * bracket)
}

/// `e(A, not A)` for every part.
pub fn sector_boundary_edges(g: &Graph, part: &Partition) -> Result<Vec<u64>> {
    Ok(part_stats(g, part)?
        .into_iter()
        .map(|p| p.boundary)
        .collect())
}

/// Flat per-graph statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    pub mean_degree: f64,
    pub max_degree: usize,
    pub isolated: usize,
    pub clustering: f64,
    pub components: usize,
    pub largest_component_fraction: f64,
    pub d_min: usize,
    /// `None` when fewer than [`MIN_TAIL_SAMPLES`] degrees reach `d_min`.
    pub tail_exponent: Option<f64>,
}

pub fn graph_stats(g: &Graph, d_min: usize) -> GraphStats {
    let degrees = degree_stats(g);
    let components = connected_components(g);
    let n = g.vertex_count();
    GraphStats {
        n,
        m: g.edge_count(),
        mean_degree: degrees.mean,
        max_degree: degrees.max,
        isolated: degrees.isolated_count,
        clustering: global_clustering(g),
        components: components.count(),
        largest_component_fraction: if n == 0 {
            0.0
        } else {
            components.largest() as f64 / n as f64
        },
        d_min,
        tail_exponent: tail_exponent(&g.degrees(), d_min).ok(),
    }
}
