//! Plain-text file formats.
//!
//! Graph file:
//!
//! ```text
//! RAG 1 <n> <m>
//! <i> <j> <r11> <r12> <r13> <r21> <r22> <r23> <r31> <r32> <r33>
//! ...
//! ```
//!
//! Solution file: `RAS 1 <n>` followed by `n` lines of nine numbers.
//! Lines starting with `#` and blank lines are ignored on read. Numbers are
//! written in the shortest form that parses back to the same `f64`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Measurement, RaGraph, RotationStack};
use crate::so3::{self, Rotation};
use crate::solvers::ConvergenceTrace;
use crate::tol;

const GRAPH_MAGIC: &str = "RAG";
const SOLUTION_MAGIC: &str = "RAS";
const FORMAT_VERSION: &str = "1";

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn push_rotation(line: &mut String, r: &Rotation) {
    for (k, v) in r.to_row_array().iter().enumerate() {
        if k > 0 {
            line.push(' ');
        }
        line.push_str(&format_f64(*v));
    }
}

pub fn write_graph_to<W: Write>(mut w: W, g: &RaGraph) -> Result<()> {
    writeln!(
        w,
        "{GRAPH_MAGIC} {FORMAT_VERSION} {} {}",
        g.vertex_count(),
        g.edge_count()
    )?;
    let mut line = String::new();
    for e in g.edges() {
        line.clear();
        write!(line, "{} {} ", e.i, e.j).expect("writing to a String");
        push_rotation(&mut line, &e.rel);
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_graph(path: impl AsRef<Path>, g: &RaGraph) -> Result<()> {
    write_graph_to(BufWriter::new(File::create(path)?), g)
}

pub fn write_solution_to<W: Write>(mut w: W, r: &RotationStack) -> Result<()> {
    writeln!(w, "{SOLUTION_MAGIC} {FORMAT_VERSION} {}", r.len())?;
    let mut line = String::new();
    for rot in r.iter() {
        line.clear();
        push_rotation(&mut line, rot);
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_solution(path: impl AsRef<Path>, r: &RotationStack) -> Result<()> {
    write_solution_to(BufWriter::new(File::create(path)?), r)
}

pub fn write_trace_to<W: Write>(mut w: W, trace: &ConvergenceTrace) -> Result<()> {
    writeln!(w, "iter,objective,residual,time_s")?;
    for rec in &trace.records {
        writeln!(
            w,
            "{},{},{},{}",
            rec.iteration,
            format_f64(rec.objective),
            format_f64(rec.residual),
            format_f64(rec.time_s)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: impl AsRef<Path>, trace: &ConvergenceTrace) -> Result<()> {
    write_trace_to(BufWriter::new(File::create(path)?), trace)
}

/// Non-comment lines with their 1-based line numbers.
struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(r: R) -> Self {
        Lines {
            inner: r.lines(),
            number: 0,
        }
    }

    fn next_content(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            let line = line?;
            self.number += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Ok(Some((self.number, trimmed.to_string())));
        }
        Ok(None)
    }
}

fn parse_header(lines: &mut Lines<impl BufRead>, magic: &str, counts: usize) -> Result<Vec<usize>> {
    let (no, line) = lines
        .next_content()?
        .ok_or_else(|| Error::parse(lines.number.max(1), "missing header"))?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 2 + counts || fields[0] != magic {
        return Err(Error::parse(
            no,
            format!("expected header '{magic} {FORMAT_VERSION} ...'"),
        ));
    }
    if fields[1] != FORMAT_VERSION {
        return Err(Error::parse(
            no,
            format!("unsupported format version '{}'", fields[1]),
        ));
    }
    fields[2..]
        .iter()
        .map(|f| {
            f.parse::<usize>()
                .map_err(|_| Error::parse(no, format!("invalid count '{f}'")))
        })
        .collect()
}

fn parse_rotation(no: usize, fields: &[&str]) -> Result<Rotation> {
    let mut entries = [0.0; 9];
    for (slot, f) in entries.iter_mut().zip(fields) {
        *slot = f
            .parse::<f64>()
            .map_err(|_| Error::parse(no, format!("invalid number '{f}'")))?;
        if !slot.is_finite() {
            return Err(Error::parse(no, format!("non-finite entry '{f}'")));
        }
    }
    let m = nalgebra::Matrix3::from_row_slice(&entries);
    if so3::is_rotation(&m, tol::ORTHOGONALITY) {
        return Rotation::new(m).map_err(|e| Error::parse(no, e.to_string()));
    }
    if so3::is_rotation(&m, tol::FILE_ROTATION) {
        return so3::nearest_rotation(&m).map_err(|e| Error::parse(no, e.to_string()));
    }
    Err(Error::parse(
        no,
        format!(
            "matrix is not a rotation (orthogonality error {:.3e}, det {:.6})",
            so3::orthogonality_error(&m),
            m.determinant()
        ),
    ))
}

pub fn read_graph_from<R: BufRead>(r: R) -> Result<RaGraph> {
    let mut lines = Lines::new(r);
    let header = parse_header(&mut lines, GRAPH_MAGIC, 2)?;
    let (n, m) = (header[0], header[1]);
    if n == 0 {
        return Err(Error::parse(
            lines.number,
            "graph must have at least one vertex",
        ));
    }
    let mut edges = Vec::with_capacity(m);
    let mut seen = HashSet::with_capacity(m);
    while let Some((no, line)) = lines.next_content()? {
        if edges.len() == m {
            return Err(Error::parse(
                no,
                format!("more than the declared {m} edges"),
            ));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 11 {
            return Err(Error::parse(
                no,
                format!("expected 11 fields, found {}", fields.len()),
            ));
        }
        let index = |f: &str| -> Result<usize> {
            let v = f
                .parse::<usize>()
                .map_err(|_| Error::parse(no, format!("invalid vertex index '{f}'")))?;
            if v >= n {
                return Err(Error::parse(
                    no,
                    format!("vertex index {v} out of range for n = {n}"),
                ));
            }
            Ok(v)
        };
        let (i, j) = (index(fields[0])?, index(fields[1])?);
        if i == j {
            return Err(Error::parse(no, format!("self-loop on vertex {i}")));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(Error::parse(
                no,
                format!("duplicate edge between {i} and {j}"),
            ));
        }
        edges.push(Measurement {
            i,
            j,
            rel: parse_rotation(no, &fields[2..])?,
        });
    }
    if edges.len() != m {
        return Err(Error::parse(
            lines.number,
            format!("declared {m} edges, found {}", edges.len()),
        ));
    }
    RaGraph::new(n, edges)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<RaGraph> {
    read_graph_from(BufReader::new(File::open(path)?))
}

pub fn read_solution_from<R: BufRead>(r: R) -> Result<RotationStack> {
    let mut lines = Lines::new(r);
    let n = parse_header(&mut lines, SOLUTION_MAGIC, 1)?[0];
    let mut rotations = Vec::with_capacity(n);
    while let Some((no, line)) = lines.next_content()? {
        if rotations.len() == n {
            return Err(Error::parse(
                no,
                format!("more than the declared {n} rotations"),
            ));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(Error::parse(
                no,
                format!("expected 9 fields, found {}", fields.len()),
            ));
        }
        rotations.push(parse_rotation(no, &fields)?);
    }
    if rotations.len() != n {
        return Err(Error::parse(
            lines.number,
            format!("declared {n} rotations, found {}", rotations.len()),
        ));
    }
    Ok(RotationStack::new(rotations))
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<RotationStack> {
    read_solution_from(BufReader::new(File::open(path)?))
}

/// Settings a run was produced with, echoed into its report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub graph: Option<String>,
    pub solution: Option<String>,
    pub epsilon: Option<f64>,
    pub max_iter: Option<usize>,
    pub init: Option<String>,
    pub sweep: Option<String>,
    pub parallel: Option<bool>,
}

/// Per-run report. `avg_error` is `objective / num_edges`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n: usize,
    pub num_edges: usize,
    pub algorithm: Option<String>,
    pub avg_error: f64,
    pub objective: f64,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub time_s: Option<f64>,
    pub mu: Option<f64>,
    pub min_eig: f64,
    pub asymmetry: f64,
    pub optimal: bool,
    pub tol: f64,
    pub seed: Option<u64>,
    pub config: ConfigEcho,
}

/// One aggregate per `(n, phi, p, algorithm)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub n: usize,
    pub phi: f64,
    pub p: f64,
    pub algorithm: String,
    pub runs: usize,
    pub mean_avg_error: f64,
    pub min_min_eig: f64,
    pub mean_time_s: f64,
    pub mean_iterations: f64,
    pub converged_runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub phi_is_variance: bool,
    pub epsilon: f64,
    pub max_iter: usize,
    pub cells: Vec<BenchCell>,
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let r = BufReader::new(File::open(path)?);
    serde_json::from_reader(r).map_err(|e| Error::parse(e.line(), e.to_string()))
}
