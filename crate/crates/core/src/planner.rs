//! Distance fields over mesh vertices and discrete steepest descent along
//! mesh edges.

use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::coords::CoordinateField;
use crate::divergence::DistanceFn;
use crate::error::{Error, Result};
use crate::geometry::TriMesh;

/// Per-vertex distance to a fixed target vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    target: usize,
    values: Vec<f64>,
    generator: String,
}

impl DistanceField {
    /// Wraps precomputed values. The target must have value zero and every
    /// value must be finite and nonnegative.
    pub fn from_values(target: usize, values: Vec<f64>, generator: &str) -> Result<Self> {
        if target >= values.len() {
            return Err(Error::Planner(format!(
                "target {target} out of range for {} vertices",
                values.len()
            )));
        }
        if values[target] != 0.0 {
            return Err(Error::Planner(format!(
                "value at the target is {}, expected 0",
                values[target]
            )));
        }
        if let Some(v) = values.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Planner(format!(
                "value at vertex {v} is {}",
                values[v]
            )));
        }
        Ok(DistanceField {
            target,
            values,
            generator: generator.to_string(),
        })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Header `field k target generator`, then one value per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24 + 32);
        let _ = writeln!(
            out,
            "field {} {} {}",
            self.values.len(),
            self.target,
            self.generator
        );
        for x in &self.values {
            let _ = writeln!(out, "{x:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty field file"))?;
        let (k, target, generator) = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["field", k, t, g] => (
                k.parse::<usize>()
                    .map_err(|e| Error::parse(1, format!("bad k: {e}")))?,
                t.parse::<usize>()
                    .map_err(|e| Error::parse(1, format!("bad target: {e}")))?,
                g.to_string(),
            ),
            _ => return Err(Error::parse(1, "expected `field k target generator`")),
        };
        let mut values = Vec::with_capacity(k);
        for (i, line) in lines {
            values.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(i + 1, format!("bad value: {e}")))?,
            );
        }
        if values.len() != k {
            return Err(Error::parse(
                0,
                format!("expected {k} values, got {}", values.len()),
            ));
        }
        Self::from_values(target, values, &generator)
    }
}

/// `field[v] = d(coords[v], coords[target])` for every mesh vertex.
pub fn distance_field(
    mesh: &TriMesh,
    coords: &CoordinateField,
    target: usize,
    dist: &DistanceFn,
) -> Result<DistanceField> {
    if coords.k() != mesh.num_vertices() {
        return Err(Error::Planner(format!(
            "coordinate field has {} rows but the mesh has {} vertices",
            coords.k(),
            mesh.num_vertices()
        )));
    }
    if target >= mesh.num_vertices() {
        return Err(Error::Planner(format!(
            "target {target} is not a mesh vertex"
        )));
    }
    if mesh.is_boundary(target) {
        return Err(Error::Planner(format!(
            "target {target} is a boundary vertex; choose an interior target"
        )));
    }
    let y = coords.row(target);
    let mut values: Vec<f64> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| dist.eval_unchecked(coords.row(v), y))
        .collect();
    values[target] = 0.0;
    DistanceField::from_values(target, values, dist.name())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    Reached,
    Stuck,
}

impl fmt::Display for PathStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathStatus::Reached => "reached",
            PathStatus::Stuck => "stuck",
        })
    }
}

/// A descent path from a source vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub vertices: Vec<usize>,
    pub values: Vec<f64>,
    pub status: PathStatus,
}

impl PlannedPath {
    pub fn terminal(&self) -> usize {
        *self.vertices.last().expect("paths are never empty")
    }

    /// Header `path status len`, then one vertex index per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("path {} {}\n", self.status, self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    /// Reads the vertex list back; values are taken from `field`.
    pub fn from_text(text: &str, field: &DistanceField) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty path file"))?;
        let (status, len) = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["path", s, n] => (
                match s {
                    "reached" => PathStatus::Reached,
                    "stuck" => PathStatus::Stuck,
                    other => return Err(Error::parse(1, format!("unknown status `{other}`"))),
                },
                n.parse::<usize>()
                    .map_err(|e| Error::parse(1, format!("bad length: {e}")))?,
            ),
            _ => return Err(Error::parse(1, "expected `path status len`")),
        };
        let mut vertices = Vec::with_capacity(len);
        for (i, line) in lines {
            let v: usize = line
                .trim()
                .parse()
                .map_err(|e| Error::parse(i + 1, format!("bad vertex: {e}")))?;
            if v >= field.len() {
                return Err(Error::parse(i + 1, format!("vertex {v} out of range")));
            }
            vertices.push(v);
        }
        if vertices.len() != len || len == 0 {
            return Err(Error::parse(
                0,
                format!("expected {len} vertices, got {}", vertices.len()),
            ));
        }
        let values = vertices.iter().map(|&v| field.value(v)).collect();
        Ok(PlannedPath {
            vertices,
            values,
            status,
        })
    }
}

/// Neighbour of `v` with the smallest field value strictly below `v`'s,
/// lowest index on ties.
pub fn steepest_neighbor(mesh: &TriMesh, field: &DistanceField, v: usize) -> Option<usize> {
    let here = field.value(v);
    let mut best: Option<usize> = None;
    for &u in &mesh.neighbors()[v] {
        let fu = field.value(u);
        if fu < here && best.is_none_or(|b| fu < field.value(b)) {
            best = Some(u);
        }
    }
    best
}

/// Steepest descent from `source` until the target is reached or no
/// neighbour improves.
pub fn descend(mesh: &TriMesh, field: &DistanceField, source: usize) -> Result<PlannedPath> {
    if field.len() != mesh.num_vertices() {
        return Err(Error::Planner("field does not match the mesh".into()));
    }
    if source >= mesh.num_vertices() {
        return Err(Error::Planner(format!(
            "source {source} is not a mesh vertex"
        )));
    }
    if mesh.is_boundary(source) {
        return Err(Error::Planner(format!(
            "source {source} is a boundary vertex; choose an interior source"
        )));
    }
    let mut vertices = vec![source];
    let mut values = vec![field.value(source)];
    let mut v = source;
    for _ in 0..mesh.num_vertices() {
        if v == field.target() {
            break;
        }
        match steepest_neighbor(mesh, field, v) {
            Some(u) => {
                v = u;
                vertices.push(u);
                values.push(field.value(u));
            }
            None => break,
        }
    }
    let status = if v == field.target() {
        PathStatus::Reached
    } else {
        PathStatus::Stuck
    };
    Ok(PlannedPath {
        vertices,
        values,
        status,
    })
}

/// Next hop of every vertex under steepest descent (`None` at the target and
/// at local minima).
pub fn path_tree(mesh: &TriMesh, field: &DistanceField) -> Vec<Option<usize>> {
    (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| {
            if v == field.target() {
                None
            } else {
                steepest_neighbor(mesh, field, v)
            }
        })
        .collect()
}

/// Interior vertices other than the target with no improving neighbour.
pub fn stuck_vertices(mesh: &TriMesh, field: &DistanceField, tree: &[Option<usize>]) -> Vec<usize> {
    mesh.interior_vertices()
        .filter(|&v| v != field.target() && tree[v].is_none())
        .collect()
}
