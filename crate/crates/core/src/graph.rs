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

//! Immutable simple graphs in compressed adjacency form, and the builders for
//! the disc and band models.
//!
//! [`build_graph_naive`] is the quadratic reference. [`build_graph_fast`] puts
//! vertices into radial bands of unit defect height, sorts each band by angle,
//! and for every (vertex, band) pair only visits the angular window allowed by
//! the critical angle at the band's inner radius. Every candidate is then
//! confirmed with the same exact predicate the reference uses, so the two
//! builders agree edge for edge.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{band_distance, cosh_distance, theta_r, BandPoint, ModelParams, PolarPoint};
use crate::sampling::PointSet;

/// Relative slack added to pruning windows; the exact predicate decides.
const WINDOW_SLACK: f64 = 1e-9;

/// Vertex locations carried by a graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// No locations, e.g. a graph read from an edge list.
    Abstract,
    Disc {
        points: Vec<PolarPoint>,
        radius: f64,
    },
    Band {
        points: Vec<BandPoint>,
        y_max: f64,
        half_width: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    geometry: Geometry,
    params: Option<ModelParams>,
}

impl Graph {
    /// Builds a graph on `n` vertices from an undirected edge list. Duplicate
    /// edges are merged; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut lists = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::contract(format!(
                    "edge ({u}, {v}) out of range for {n} vertices"
                )));
            }
            if u == v {
                return Err(Error::contract(format!("self-loop at vertex {u}")));
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self::from_sorted_lists(lists, Geometry::Abstract))
    }

    fn from_sorted_lists(lists: Vec<Vec<usize>>, geometry: Geometry) -> Graph {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut total = 0;
        for list in &lists {
            total += list.len();
            offsets.push(total);
        }
        let mut targets = Vec::with_capacity(total);
        for list in lists {
            targets.extend(list);
        }
        Graph {
            offsets,
            targets,
            geometry,
            params: None,
        }
    }

    pub fn empty() -> Graph {
        Self::from_sorted_lists(Vec::new(), Geometry::Abstract)
    }

    /// Attaches vertex locations; their count must match the vertex count.
    pub fn with_geometry(mut self, geometry: Geometry) -> Result<Graph> {
        let count = match &geometry {
            Geometry::Abstract => self.vertex_count(),
            Geometry::Disc { points, .. } => points.len(),
            Geometry::Band { points, .. } => points.len(),
        };
        if count != self.vertex_count() {
            return Err(Error::contract(format!(
                "{count} locations for {} vertices",
                self.vertex_count()
            )));
        }
        self.geometry = geometry;
        Ok(self)
    }

    pub fn with_params(mut self, params: ModelParams) -> Graph {
        self.params = Some(params);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Sorted neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.vertex_count()).map(|v| self.degree(v)).collect()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn params(&self) -> Option<&ModelParams> {
        self.params.as_ref()
    }

    /// Defect radius of every vertex, if the graph carries locations.
    pub fn defects(&self) -> Option<Vec<f64>> {
        match &self.geometry {
            Geometry::Abstract => None,
            Geometry::Disc { points, radius } => {
                Some(points.iter().map(|p| p.defect(*radius)).collect())
            }
            Geometry::Band { points, .. } => Some(points.iter().map(|p| p.y).collect()),
        }
    }

    /// Subgraph induced by `keep`, relabeled `0..keep.len()` in the given order.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Graph {
        let mut relabel = vec![usize::MAX; self.vertex_count()];
        for (new, &old) in keep.iter().enumerate() {
            relabel[old] = new;
        }
        let lists = keep
            .iter()
            .map(|&old| {
                let mut list: Vec<usize> = self
                    .neighbors(old)
                    .iter()
                    .map(|&w| relabel[w])
                    .filter(|&w| w != usize::MAX)
                    .collect();
                list.sort_unstable();
                list
            })
            .collect();
        let geometry = match &self.geometry {
            Geometry::Abstract => Geometry::Abstract,
            Geometry::Disc { points, radius } => Geometry::Disc {
                points: keep.iter().map(|&v| points[v]).collect(),
                radius: *radius,
            },
            Geometry::Band {
                points,
                y_max,
                half_width,
            } => Geometry::Band {
                points: keep.iter().map(|&v| points[v]).collect(),
                y_max: *y_max,
                half_width: *half_width,
            },
        };
        let mut g = Self::from_sorted_lists(lists, geometry);
        g.params = self.params;
        g
    }

    /// The same vertex set with the listed edges deleted.
    pub fn without_edges(&self, removed: &[(usize, usize)]) -> Result<Graph> {
        let drop: std::collections::HashSet<(usize, usize)> =
            removed.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        let kept: Vec<(usize, usize)> = self.edges().filter(|e| !drop.contains(e)).collect();
        let mut g = Graph::from_edges(self.vertex_count(), &kept)?;
        g.geometry = self.geometry.clone();
        g.params = self.params;
        Ok(g)
    }
}

/// Counters reported by [`build_graph_fast_with_stats`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Exact-predicate evaluations. Each unordered pair is visited from both ends.
    pub candidate_checks: u64,
    pub bands: usize,
}

fn adjacent_disc(p: &PolarPoint, q: &PolarPoint, cosh_radius: f64) -> bool {
    cosh_distance(p, q) <= cosh_radius
}

/// Quadratic reference: `{i, j}` is an edge iff the hyperbolic distance is at most `R`.
pub fn build_graph_naive(points: &[PolarPoint], radius: f64) -> Graph {
    let cosh_radius = radius.cosh();
    let lists: Vec<Vec<usize>> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            (0..points.len())
                .filter(|&j| j != i && adjacent_disc(&points[i], &points[j], cosh_radius))
                .collect()
        })
        .collect();
    Graph::from_sorted_lists(
        lists,
        Geometry::Disc {
            points: points.to_vec(),
            radius,
        },
    )
}

pub fn build_graph_fast(points: &[PolarPoint], radius: f64) -> Graph {
    build_graph_fast_with_stats(points, radius).0
}

struct Band {
    /// Smallest radius a member can have.
    inner_radius: f64,
    /// Member vertex ids sorted by angle.
    members: Vec<usize>,
    thetas: Vec<f64>,
}

/// Index ranges of `sorted` whose values lie in `[center - width, center + width]`
/// taken cyclically on a circle of circumference `2 * half`.
fn cyclic_window(sorted: &[f64], center: f64, width: f64, half: f64) -> [Range<usize>; 2] {
    let all = [0..sorted.len(), 0..0];
    if width >= half {
        return all;
    }
    let lower = |v: f64| sorted.partition_point(|&t| t < v);
    let upper = |v: f64| sorted.partition_point(|&t| t <= v);
    let (lo, hi) = (center - width, center + width);
    if lo < -half {
        [lower(lo + 2.0 * half)..sorted.len(), 0..upper(hi)]
    } else if hi > half {
        [lower(lo)..sorted.len(), 0..upper(hi - 2.0 * half)]
    } else {
        [lower(lo)..upper(hi), 0..0]
    }
}

pub fn build_graph_fast_with_stats(points: &[PolarPoint], radius: f64) -> (Graph, BuildStats) {
    let cosh_radius = radius.cosh();
    let band_count = radius.max(0.0).floor() as usize + 1;
    let mut bands: Vec<Band> = (0..band_count)
        .map(|b| Band {
            inner_radius: (radius - (b + 1) as f64).max(0.0),
            members: Vec::new(),
            thetas: Vec::new(),
        })
        .collect();
    for (i, p) in points.iter().enumerate() {
        let y = (radius - p.r).max(0.0);
        let b = (y.floor() as usize).min(band_count - 1);
        bands[b].members.push(i);
    }
    for band in &mut bands {
        band.members
            .sort_by(|&a, &b| points[a].theta.total_cmp(&points[b].theta).then(a.cmp(&b)));
        band.thetas = band.members.iter().map(|&i| points[i].theta).collect();
    }

    let checks = AtomicU64::new(0);
    let lists: Vec<Vec<usize>> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let p = &points[i];
            let mut found = Vec::new();
            let mut local_checks = 0u64;
            for band in &bands {
                if band.members.is_empty() {
                    continue;
                }
                let width = if band.inner_radius <= 0.0 || p.r + band.inner_radius <= radius {
                    PI
                } else {
                    match theta_r(p.r, band.inner_radius, radius) {
                        Ok(t) => t * (1.0 + WINDOW_SLACK) + 1e-12,
                        Err(_) => PI,
                    }
                };
                for range in cyclic_window(&band.thetas, p.theta, width, PI) {
                    for &j in &band.members[range] {
                        if j == i {
                            continue;
                        }
                        local_checks += 1;
                        if adjacent_disc(p, &points[j], cosh_radius) {
                            found.push(j);
                        }
                    }
                }
            }
            checks.fetch_add(local_checks, Ordering::Relaxed);
            found.sort_unstable();
            found
        })
        .collect();
    let stats = BuildStats {
        candidate_checks: checks.into_inner(),
        bands: band_count,
    };
    let graph = Graph::from_sorted_lists(
        lists,
        Geometry::Disc {
            points: points.to_vec(),
            radius,
        },
    );
    (graph, stats)
}

fn adjacent_band(p: &BandPoint, q: &BandPoint, half_width: f64) -> bool {
    band_distance(p.x, q.x, half_width) < (0.5 * (p.y + q.y)).exp()
}

/// Band graph: `p ~ q` iff `|x - x'|_B < e^{(y + y')/2}`, strict.
///
/// Built by sorting on `x` and scanning, for each point, the window of
/// half-width `e^{(y + y_max)/2}`, which bounds every possible neighbor.
pub fn build_band_graph(points: &[BandPoint], y_max: f64, half_width: f64) -> Result<Graph> {
    if let Some(p) = points.iter().find(|p| p.y > y_max || p.y < 0.0) {
        return Err(Error::contract(format!(
            "band point with y = {} outside [0, {y_max}]",
            p.y
        )));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(a.cmp(&b)));
    let xs: Vec<f64> = order.iter().map(|&i| points[i].x).collect();
    let lists: Vec<Vec<usize>> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let p = &points[i];
            let width = (0.5 * (p.y + y_max)).exp() * (1.0 + WINDOW_SLACK);
            let mut found = Vec::new();
            for range in cyclic_window(&xs, p.x, width, half_width) {
                for &j in &order[range] {
                    if j != i && adjacent_band(p, &points[j], half_width) {
                        found.push(j);
                    }
                }
            }
            found.sort_unstable();
            found
        })
        .collect();
    Ok(Graph::from_sorted_lists(
        lists,
        Geometry::Band {
            points: points.to_vec(),
            y_max,
            half_width,
        },
    ))
}

/// Quadratic reference for [`build_band_graph`].
pub fn build_band_graph_naive(points: &[BandPoint], y_max: f64, half_width: f64) -> Graph {
    let lists = (0..points.len())
        .map(|i| {
            (0..points.len())
                .filter(|&j| j != i && adjacent_band(&points[i], &points[j], half_width))
                .collect()
        })
        .collect();
    Graph::from_sorted_lists(
        lists,
        Geometry::Band {
            points: points.to_vec(),
            y_max,
            half_width,
        },
    )
}

/// Builds the model graph for a sampled point set with the fast generator.
pub fn build_model_graph(
    points: PointSet,
    params: &ModelParams,
    y_max: Option<f64>,
) -> Result<Graph> {
    let g = match points {
        PointSet::Disc(pts) => build_graph_fast(&pts, params.radius()),
        PointSet::Band(pts) => {
            let y_max = y_max.unwrap_or_else(|| params.radius());
            build_band_graph(&pts, y_max, params.half_width())?
        }
    };
    Ok(g.with_params(*params))
}

/// Connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    /// Dense component id per vertex, numbered by smallest member.
    pub component_of: Vec<usize>,
    /// Component sizes, largest first.
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }
}

pub fn connected_components(g: &Graph) -> Components {
    let n = g.vertex_count();
    let mut component_of = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        component_of[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in g.neighbors(v) {
                if component_of[w] == usize::MAX {
                    component_of[w] = id;
                    queue.push_back(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Components {
        component_of,
        sizes,
    }
}
