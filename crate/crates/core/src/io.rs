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

//! Tab-separated file formats.
//!
//! Points:
//! ```text
//! #kpkbv-points v1 alpha=<a> nu=<v> n=<n> R=<R> mode=<m> seed=<s>
//! <index>\t<r>\t<theta>        (band mode: <index>\t<x>\t<y>)
//! ```
//! Edges:
//! ```text
//! #kpkbv-edges v1 n=<n> m=<m>
//! <u>\t<v>                     (u < v, lexicographic order)
//! ```
//! Partitions are `<vertex>\t<part>` lines and degree histograms are
//! `<degree>\t<count>` lines.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{BandPoint, ModelParams, PolarPoint};
use crate::graph::{Geometry, Graph};
use crate::modularity::Partition;
use crate::sampling::{PointSet, SampleMode, Seed};
use crate::stats::DegreeSummary;

const POINTS_MAGIC: &str = "#kpkbv-points";
const EDGES_MAGIC: &str = "#kpkbv-edges";
const VERSION: &str = "v1";

/// A point file: the sample together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PointsFile {
    pub params: ModelParams,
    pub mode: SampleMode,
    pub seed: Seed,
    pub points: PointSet,
}

impl PointsFile {
    /// Vertex locations in the form a [`Graph`] carries them.
    pub fn geometry(&self) -> Geometry {
        match &self.points {
            PointSet::Disc(p) => Geometry::Disc {
                points: p.clone(),
                radius: self.params.radius(),
            },
            PointSet::Band(p) => Geometry::Band {
                points: p.clone(),
                y_max: match self.mode {
                    SampleMode::Band { y_max } => y_max,
                    _ => self.params.radius(),
                },
                half_width: self.params.half_width(),
            },
        }
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(write_err(path))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(write_err(path))
}

pub fn write_points<W: Write>(out: &mut W, file: &PointsFile) -> std::io::Result<()> {
    let p = &file.params;
    writeln!(
        out,
        "{POINTS_MAGIC} {VERSION} alpha={} nu={} n={} R={} mode={} seed={}",
        p.alpha(),
        p.nu(),
        p.n(),
        p.radius(),
        file.mode,
        file.seed.0
    )?;
    match &file.points {
        PointSet::Disc(points) => {
            for (i, q) in points.iter().enumerate() {
                writeln!(out, "{i}\t{}\t{}", sci(q.r), sci(q.theta))?;
            }
        }
        PointSet::Band(points) => {
            for (i, q) in points.iter().enumerate() {
                writeln!(out, "{i}\t{}\t{}", sci(q.x), sci(q.y))?;
            }
        }
    }
    Ok(())
}

pub fn save_points(path: &Path, file: &PointsFile) -> Result<()> {
    let mut out = create(path)?;
    write_points(&mut out, file)
        .and_then(|_| out.flush())
        .map_err(write_err(path))
}

struct LineReader<R> {
    inner: R,
    path: PathBuf,
    line: usize,
}

impl<R: BufRead> LineReader<R> {
    fn new(inner: R, path: &Path) -> Self {
        LineReader {
            inner,
            path: path.to_path_buf(),
            line: 0,
        }
    }

    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        let mut buf = String::new();
        self.line += 1;
        match self.inner.read_line(&mut buf) {
            Ok(0) => Ok(None),
            Ok(_) => Ok(Some(buf.trim_end_matches(['\n', '\r']).to_string())),
            Err(e) => Err(Error::io(&self.path, e)),
        }
    }

    fn parse<T: std::str::FromStr>(&self, field: Option<&str>, what: &str) -> Result<T> {
        field
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| self.fail(format!("bad or missing {what}")))
    }

    /// Reads the header line and returns its `key=value` fields.
    fn header(&mut self, magic: &str) -> Result<HashMap<String, String>> {
        let line = self.next_line()?.ok_or_else(|| self.fail("empty file"))?;
        let mut words = line.split_whitespace();
        if words.next() != Some(magic) || words.next() != Some(VERSION) {
            return Err(self.fail(format!("expected header `{magic} {VERSION} ...`")));
        }
        words
            .map(|w| {
                w.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| self.fail(format!("malformed header field {w:?}")))
            })
            .collect()
    }
}

pub fn read_points<R: BufRead>(input: R, path: &Path) -> Result<PointsFile> {
    let mut reader = LineReader::new(input, path);
    let header = reader.header(POINTS_MAGIC)?;
    let get = |k: &str| header.get(k).map(String::as_str);
    let alpha: f64 = reader.parse(get("alpha"), "alpha")?;
    let nu: f64 = reader.parse(get("nu"), "nu")?;
    let n: f64 = reader.parse(get("n"), "n")?;
    let radius: f64 = reader.parse(get("R"), "R")?;
    let mode: SampleMode = reader.parse(get("mode"), "mode")?;
    let seed: u64 = reader.parse(get("seed"), "seed")?;
    let params =
        ModelParams::with_radius(alpha, nu, n, radius).map_err(|e| reader.fail(e.to_string()))?;
    let mut coords = Vec::new();
    while let Some(line) = reader.next_line()? {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split('\t');
        let index: usize = reader.parse(f.next(), "index")?;
        if index != coords.len() {
            return Err(reader.fail(format!("expected index {}, found {index}", coords.len())));
        }
        let a: f64 = reader.parse(f.next(), "first coordinate")?;
        let b: f64 = reader.parse(f.next(), "second coordinate")?;
        coords.push((a, b));
    }
    let points = match mode {
        SampleMode::Band { .. } => PointSet::Band(
            coords
                .into_iter()
                .map(|(x, y)| BandPoint { x, y })
                .collect(),
        ),
        _ => PointSet::Disc(
            coords
                .into_iter()
                .map(|(r, theta)| PolarPoint::new(r, theta))
                .collect(),
        ),
    };
    Ok(PointsFile {
        params,
        mode,
        seed: Seed(seed),
        points,
    })
}

pub fn load_points(path: &Path) -> Result<PointsFile> {
    read_points(open(path)?, path)
}

pub fn write_edges<W: Write>(out: &mut W, g: &Graph) -> std::io::Result<()> {
    writeln!(
        out,
        "{EDGES_MAGIC} {VERSION} n={} m={}",
        g.vertex_count(),
        g.edge_count()
    )?;
    for (u, v) in g.edges() {
        writeln!(out, "{u}\t{v}")?;
    }
    Ok(())
}

pub fn save_edges(path: &Path, g: &Graph) -> Result<()> {
    let mut out = create(path)?;
    write_edges(&mut out, g)
        .and_then(|_| out.flush())
        .map_err(write_err(path))
}

pub fn read_edges<R: BufRead>(input: R, path: &Path) -> Result<Graph> {
    let mut reader = LineReader::new(input, path);
    let header = reader.header(EDGES_MAGIC)?;
    let n: usize = reader.parse(header.get("n").map(String::as_str), "n")?;
    let m: usize = reader.parse(header.get("m").map(String::as_str), "m")?;
    let mut edges = Vec::with_capacity(m);
    while let Some(line) = reader.next_line()? {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split('\t');
        let u: usize = reader.parse(f.next(), "u")?;
        let v: usize = reader.parse(f.next(), "v")?;
        edges.push((u, v));
    }
    let g = Graph::from_edges(n, &edges).map_err(|e| reader.fail(e.to_string()))?;
    if g.edge_count() != m || edges.len() != m {
        return Err(reader.fail(format!(
            "header declares m={m}, body has {} lines and {} distinct edges",
            edges.len(),
            g.edge_count()
        )));
    }
    Ok(g)
}

pub fn load_edges(path: &Path) -> Result<Graph> {
    read_edges(open(path)?, path)
}

pub fn write_partition<W: Write>(out: &mut W, part: &Partition) -> std::io::Result<()> {
    for (v, p) in part.assignments().iter().enumerate() {
        writeln!(out, "{v}\t{p}")?;
    }
    Ok(())
}

pub fn save_partition(path: &Path, part: &Partition) -> Result<()> {
    let mut out = create(path)?;
    write_partition(&mut out, part)
        .and_then(|_| out.flush())
        .map_err(write_err(path))
}

/// Reads `vertex\tpart` lines for vertices `0..n`. Part labels may be any
/// nonnegative integers; they are compacted in order of first appearance by
/// vertex.
pub fn read_partition<R: BufRead>(input: R, path: &Path, n: usize) -> Result<Partition> {
    let mut reader = LineReader::new(input, path);
    let mut labels: Vec<Option<u64>> = vec![None; n];
    while let Some(line) = reader.next_line()? {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split('\t');
        let v: usize = reader.parse(f.next(), "vertex")?;
        let p: u64 = reader.parse(f.next(), "part")?;
        let slot = labels
            .get_mut(v)
            .ok_or_else(|| Error::contract(format!("vertex {v} out of range for {n} vertices")))?;
        if slot.replace(p).is_some() {
            return Err(reader.fail(format!("vertex {v} assigned twice")));
        }
    }
    if let Some(v) = labels.iter().position(Option::is_none) {
        return Err(Error::contract(format!("vertex {v} has no part")));
    }
    Ok(Partition::from_labels(labels.into_iter().flatten()))
}

pub fn load_partition(path: &Path, n: usize) -> Result<Partition> {
    read_partition(open(path)?, path, n)
}

pub fn write_histogram<W: Write>(out: &mut W, summary: &DegreeSummary) -> std::io::Result<()> {
    for (d, c) in &summary.histogram {
        writeln!(out, "{d}\t{c}")?;
    }
    Ok(())
}
