use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{dist, DomainSpec, Point, TriMesh};

/// Boundary-condition shape attached to each segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// Indicator of the half-open segment.
    Box,
    /// Piecewise linear hat centred on a breakpoint.
    Tent,
    /// Normalized Gaussian bump centred on the segment midpoint.
    Gaussian,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Box => "box",
            BasisKind::Tent => "tent",
            BasisKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(BasisKind::Box),
            "tent" => Ok(BasisKind::Tent),
            "gaussian" => Ok(BasisKind::Gaussian),
            other => Err(Error::Partition(format!(
                "unknown basis `{other}` (expected box, tent or gaussian)"
            ))),
        }
    }
}

/// A segment start on a boundary loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    /// Mesh vertex index.
    pub vertex: usize,
    /// Position of the vertex within its boundary loop.
    pub position: usize,
    /// Arc length from the loop's first vertex.
    pub arclength: f64,
}

/// Partition of every boundary loop into segments.
///
/// Segments are numbered loop by loop, in increasing arc length within each
/// loop. Segment `i` of a loop runs from breakpoint `i` up to (excluding)
/// breakpoint `i + 1`, the last one wrapping around.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPartition {
    loops: Vec<Vec<Breakpoint>>,
    loop_lengths: Vec<f64>,
    basis: BasisKind,
}

impl BoundaryPartition {
    /// Builds a partition from breakpoint positions (indices into each mesh
    /// boundary loop). Every loop needs at least one breakpoint.
    pub fn from_positions(
        mesh: &TriMesh,
        positions: Vec<Vec<usize>>,
        basis: BasisKind,
    ) -> Result<Self> {
        let nloops = mesh.boundary_loops().len();
        if positions.len() != nloops {
            return Err(Error::Partition(format!(
                "{} breakpoint lists for {nloops} boundary loops",
                positions.len()
            )));
        }
        let mut loops = Vec::with_capacity(nloops);
        let mut loop_lengths = Vec::with_capacity(nloops);
        for (l, mut pos) in positions.into_iter().enumerate() {
            let lp = &mesh.boundary_loops()[l];
            if pos.is_empty() {
                return Err(Error::Partition(format!(
                    "boundary loop {l} has no breakpoint"
                )));
            }
            if let Some(&p) = pos.iter().find(|&&p| p >= lp.len()) {
                return Err(Error::Partition(format!(
                    "position {p} is outside boundary loop {l} ({} vertices)",
                    lp.len()
                )));
            }
            pos.sort_unstable();
            if pos.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Partition(format!(
                    "boundary loop {l} has an empty segment (repeated breakpoint)"
                )));
            }
            let (s, total) = mesh.loop_arclength(l);
            loops.push(
                pos.into_iter()
                    .map(|p| Breakpoint {
                        vertex: lp[p],
                        position: p,
                        arclength: s[p],
                    })
                    .collect(),
            );
            loop_lengths.push(total);
        }
        let partition = BoundaryPartition {
            loops,
            loop_lengths,
            basis,
        };
        if partition.len() < 3 {
            return Err(Error::Partition(format!(
                "need at least 3 segments, got {}",
                partition.len()
            )));
        }
        Ok(partition)
    }

    /// `counts[l]` breakpoints on loop `l` at equal arc-length spacing,
    /// starting from the loop's first vertex; each snapped to the nearest
    /// loop vertex.
    pub fn uniform(mesh: &TriMesh, counts: &[usize], basis: BasisKind) -> Result<Self> {
        if counts.len() != mesh.boundary_loops().len() {
            return Err(Error::Partition(format!(
                "{} counts for {} boundary loops",
                counts.len(),
                mesh.boundary_loops().len()
            )));
        }
        let positions = counts
            .iter()
            .enumerate()
            .map(|(l, &c)| {
                let (s, total) = mesh.loop_arclength(l);
                (0..c)
                    .map(|t| nearest_arclength(&s, total, t as f64 * total / c as f64))
                    .collect()
            })
            .collect();
        Self::from_positions(mesh, positions, basis)
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn with_basis(mut self, basis: BasisKind) -> Self {
        self.basis = basis;
        self
    }

    /// Total number of segments over all loops.
    pub fn len(&self) -> usize {
        self.loops.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn loops(&self) -> &[Vec<Breakpoint>] {
        &self.loops
    }

    /// All breakpoints in segment order.
    pub fn breakpoints(&self) -> impl Iterator<Item = &Breakpoint> {
        self.loops.iter().flatten()
    }

    /// Global index of the first segment on loop `l`.
    pub fn offset(&self, l: usize) -> usize {
        self.loops[..l].iter().map(Vec::len).sum()
    }

    /// Arc length of every segment, in segment order.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for (bps, &total) in self.loops.iter().zip(&self.loop_lengths) {
            for i in 0..bps.len() {
                out.push(span(bps, i, total));
            }
        }
        out
    }

    /// Boundary-condition vectors, one per segment, each of length
    /// `mesh.num_vertices()`. Interior entries are zero; at every boundary
    /// vertex the vectors sum to one.
    ///
    /// Gaussian weights only couple vertices to segments of their own loop,
    /// and far-away weights may underflow to zero for large segment counts.
    pub fn basis_vectors(&self, mesh: &TriMesh) -> Vec<Vec<f64>> {
        let k = mesh.num_vertices();
        let mut b = vec![vec![0.0; k]; self.len()];
        for (l, bps) in self.loops.iter().enumerate() {
            let lp = &mesh.boundary_loops()[l];
            let (s, total) = mesh.loop_arclength(l);
            let off = self.offset(l);
            let q = bps.len();
            match self.basis {
                BasisKind::Box | BasisKind::Tent => {
                    for (p, &v) in lp.iter().enumerate() {
                        let i = segment_of(bps, p);
                        if self.basis == BasisKind::Box {
                            b[off + i][v] = 1.0;
                            continue;
                        }
                        let len = span(bps, i, total);
                        let t = (s[p] - bps[i].arclength).rem_euclid(total) / len;
                        let t = t.clamp(0.0, 1.0);
                        b[off + i][v] += 1.0 - t;
                        b[off + (i + 1) % q][v] += t;
                    }
                }
                BasisKind::Gaussian => {
                    let mids: Vec<(f64, f64)> = (0..q)
                        .map(|i| {
                            let len = span(bps, i, total);
                            ((bps[i].arclength + len / 2.0).rem_euclid(total), len / 2.0)
                        })
                        .collect();
                    let mut logw = vec![0.0; q];
                    for (p, &v) in lp.iter().enumerate() {
                        for (i, &(m, sigma)) in mids.iter().enumerate() {
                            let d = (s[p] - m).abs();
                            let d = d.min(total - d);
                            logw[i] = -d * d / (2.0 * sigma * sigma);
                        }
                        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let sum: f64 = logw.iter().map(|w| (w - top).exp()).sum();
                        for i in 0..q {
                            b[off + i][v] = (logw[i] - top).exp() / sum;
                        }
                    }
                }
            }
        }
        b
    }
}

/// Arc length of segment `i` of a loop with the given breakpoints.
fn span(bps: &[Breakpoint], i: usize, total: f64) -> f64 {
    if bps.len() == 1 {
        return total;
    }
    let next = bps[(i + 1) % bps.len()].arclength;
    (next - bps[i].arclength).rem_euclid(total)
}

/// Segment (local to the loop) containing loop position `p`.
fn segment_of(bps: &[Breakpoint], p: usize) -> usize {
    match bps.partition_point(|b| b.position <= p) {
        0 => bps.len() - 1,
        i => i - 1,
    }
}

fn nearest_arclength(s: &[f64], total: f64, target: f64) -> usize {
    let target = target.rem_euclid(total);
    (0..s.len())
        .min_by(|&a, &b| {
            let da = (s[a] - target).abs().min(total - (s[a] - target).abs());
            let db = (s[b] - target).abs().min(total - (s[b] - target).abs());
            da.total_cmp(&db)
        })
        .unwrap_or(0)
}

fn nearest_position(mesh: &TriMesh, lp: &[usize], p: Point) -> usize {
    (0..lp.len())
        .min_by(|&a, &b| {
            dist(mesh.vertices()[lp[a]], p).total_cmp(&dist(mesh.vertices()[lp[b]], p))
        })
        .unwrap_or(0)
}

/// One breakpoint at the mesh vertex nearest each polygon vertex, with every
/// polygon edge split into equal pieces no longer than `max_seg_len`
/// (pass `f64::INFINITY` for one segment per edge).
pub fn partition_boundary(
    mesh: &TriMesh,
    domain: &DomainSpec,
    max_seg_len: f64,
    basis: BasisKind,
) -> Result<BoundaryPartition> {
    if !(max_seg_len > 0.0) {
        return Err(Error::Partition(format!(
            "max_seg_len must be positive, got {max_seg_len}"
        )));
    }
    let mesh_loops = mesh.boundary_loops();
    let domain_loops: Vec<&[Point]> = domain.loops().collect();
    if domain_loops.len() != mesh_loops.len() {
        return Err(Error::Partition(format!(
            "domain has {} loops but the mesh has {}",
            domain_loops.len(),
            mesh_loops.len()
        )));
    }

    // match each domain loop to the mesh loop closest to its first vertex
    let mut positions: Vec<Vec<usize>> = vec![Vec::new(); mesh_loops.len()];
    let mut taken = vec![false; mesh_loops.len()];
    for (d, poly) in domain_loops.iter().enumerate() {
        let gap_to = |l: usize| {
            let lp = &mesh_loops[l];
            dist(
                mesh.vertices()[lp[nearest_position(mesh, lp, poly[0])]],
                poly[0],
            )
        };
        let l = (0..mesh_loops.len())
            .min_by(|&a, &b| gap_to(a).total_cmp(&gap_to(b)))
            .unwrap_or(0);
        if std::mem::replace(&mut taken[l], true) {
            return Err(Error::Partition(format!(
                "domain loop {d} matches an already matched mesh loop"
            )));
        }
        positions[l] = split_loop(mesh, l, poly, max_seg_len)
            .map_err(|e| Error::Partition(format!("domain loop {d}: {e}")))?;
    }
    BoundaryPartition::from_positions(mesh, positions, basis)
}

fn split_loop(
    mesh: &TriMesh,
    l: usize,
    poly: &[Point],
    max_seg_len: f64,
) -> std::result::Result<Vec<usize>, String> {
    let lp = &mesh.boundary_loops()[l];
    let len = lp.len();
    let (s, total) = mesh.loop_arclength(l);
    let corners: Vec<usize> = poly
        .iter()
        .map(|&p| nearest_position(mesh, lp, p))
        .collect();
    let rel = |p: usize| (p + len - corners[0]) % len;
    for i in 1..corners.len() {
        if rel(corners[i]) <= rel(corners[i - 1]) {
            return Err(format!(
                "polygon vertices {} and {i} are out of order or share a mesh vertex",
                i - 1
            ));
        }
    }

    let mut out = Vec::new();
    for i in 0..corners.len() {
        let (a, b) = (corners[i], corners[(i + 1) % corners.len()]);
        out.push(a);
        let (sa, mut sb) = (s[a], s[b]);
        if sb <= sa {
            sb += total;
        }
        let edge = sb - sa;
        let pieces = ((edge / max_seg_len) * (1.0 - 1e-9)).ceil().max(1.0) as usize;
        let gap = (b + len - a) % len;
        let gap = if gap == 0 { len } else { gap };
        let mut prev = 0;
        for t in 1..pieces {
            let target = sa + t as f64 * edge / pieces as f64;
            // nearest loop vertex strictly between the two corners
            let step = (1..gap)
                .min_by(|&x, &y| {
                    let off = |x: usize| (s[(a + x) % len] - sa).rem_euclid(total);
                    (off(x) - (target - sa))
                        .abs()
                        .total_cmp(&(off(y) - (target - sa)).abs())
                })
                .filter(|&x| x > prev)
                .ok_or_else(|| {
                    format!(
                        "max_seg_len {max_seg_len} is below the local boundary spacing (empty segment on edge {i})"
                    )
                })?;
            prev = step;
            out.push((a + step) % len);
        }
    }
    Ok(out)
}
