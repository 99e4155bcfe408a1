use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::OnceLock;

use super::cdt::triangulate;
use super::{dist, orient, signed_area, DomainSpec, Normalizer, Point, PREDICATE_EPS};
use crate::error::{Error, Result};

/// A triangulated planar region with its boundary loops.
///
/// Triangles are CCW. Boundary loops are cyclic vertex lists traversed with
/// the interior on the left, outer loop first.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
    is_boundary: Vec<bool>,
    neighbors: OnceLock<Vec<Vec<usize>>>,
}

impl TriMesh {
    /// Builds a mesh and extracts its boundary loops. The loop with the
    /// largest signed area comes first.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let loops = validate(&vertices, &triangles)?;
        Ok(Self::assemble(vertices, triangles, loops))
    }

    /// Builds a mesh whose boundary must match `loops` (up to the starting
    /// vertex of each loop); the given order and rotation are kept.
    pub fn with_loops(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        loops: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let found = validate(&vertices, &triangles)?;
        let directed = |ls: &[Vec<usize>]| -> HashSet<(usize, usize)> {
            ls.iter()
                .flat_map(|l| (0..l.len()).map(move |i| (l[i], l[(i + 1) % l.len()])))
                .collect()
        };
        if found.len() != loops.len() || directed(&found) != directed(&loops) {
            return Err(Error::Mesh(
                "boundary loops do not match the triangle boundary".into(),
            ));
        }
        Ok(Self::assemble(vertices, triangles, loops))
    }

    fn assemble(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, loops: Vec<Vec<usize>>) -> Self {
        let mut is_boundary = vec![false; vertices.len()];
        for &v in loops.iter().flatten() {
            is_boundary[v] = true;
        }
        TriMesh {
            vertices,
            triangles,
            boundary_loops: loops,
            is_boundary,
            neighbors: OnceLock::new(),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| !self.is_boundary[v])
    }

    /// Sorted undirected edge list `(lo, hi)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Sorted vertex adjacency lists.
    pub fn neighbors(&self) -> &[Vec<usize>] {
        self.neighbors.get_or_init(|| {
            let mut adj = vec![Vec::new(); self.vertices.len()];
            for (a, b) in self.edges() {
                adj[a].push(b);
                adj[b].push(a);
            }
            for l in &mut adj {
                l.sort_unstable();
            }
            adj
        })
    }

    /// Smallest and mean edge length.
    pub fn edge_length_stats(&self) -> (f64, f64) {
        let edges = self.edges();
        let mut min = f64::INFINITY;
        let mut sum = 0.0;
        for &(a, b) in &edges {
            let l = dist(self.vertices[a], self.vertices[b]);
            min = min.min(l);
            sum += l;
        }
        (min, sum / edges.len().max(1) as f64)
    }

    /// Arc-length position of every vertex of boundary loop `l`, starting at
    /// zero on its first vertex, plus the total loop length.
    pub fn loop_arclength(&self, l: usize) -> (Vec<f64>, f64) {
        let lp = &self.boundary_loops[l];
        let mut s = Vec::with_capacity(lp.len());
        let mut acc = 0.0;
        for i in 0..lp.len() {
            s.push(acc);
            acc += dist(self.vertices[lp[i]], self.vertices[lp[(i + 1) % lp.len()]]);
        }
        (s, acc)
    }
}

/// Checks the mesh invariants and returns the boundary loops.
fn validate(vertices: &[Point], triangles: &[[usize; 3]]) -> Result<Vec<Vec<usize>>> {
    if triangles.is_empty() {
        return Err(Error::Mesh("no triangles".into()));
    }
    let norm = Normalizer::from_points(vertices.iter());
    let mut directed: HashSet<(usize, usize)> = HashSet::with_capacity(triangles.len() * 3);
    for (t, tri) in triangles.iter().enumerate() {
        if tri.iter().any(|&v| v >= vertices.len()) {
            return Err(Error::Mesh(format!(
                "triangle {t} references a missing vertex"
            )));
        }
        let [a, b, c] = tri.map(|v| norm.apply(vertices[v]));
        if orient(a, b, c) <= PREDICATE_EPS {
            return Err(Error::Mesh(format!(
                "triangle {t} is not CCW or has zero area"
            )));
        }
        for k in 0..3 {
            if !directed.insert((tri[k], tri[(k + 1) % 3])) {
                return Err(Error::Mesh(format!(
                    "edge ({}, {}) shared by more than two triangles or inconsistently oriented",
                    tri[k],
                    tri[(k + 1) % 3]
                )));
            }
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in &directed {
        if !directed.contains(&(b, a)) && next.insert(a, b).is_some() {
            return Err(Error::Mesh(format!("boundary pinches at vertex {a}")));
        }
    }
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut seen = HashSet::new();
    let mut loops = Vec::new();
    for s in starts {
        if seen.contains(&s) {
            continue;
        }
        let mut lp = vec![s];
        seen.insert(s);
        let mut cur = next[&s];
        while cur != s {
            if !seen.insert(cur) {
                return Err(Error::Mesh(format!("boundary pinches at vertex {cur}")));
            }
            lp.push(cur);
            cur = *next
                .get(&cur)
                .ok_or_else(|| Error::Mesh(format!("open boundary at vertex {cur}")))?;
        }
        loops.push(lp);
    }
    let area = |l: &Vec<usize>| signed_area(&l.iter().map(|&v| vertices[v]).collect::<Vec<_>>());
    if let Some(outer) =
        (0..loops.len()).max_by(|&i, &j| area(&loops[i]).total_cmp(&area(&loops[j])))
    {
        let o = loops.remove(outer);
        loops.insert(0, o);
    }
    Ok(loops)
}

/// Tuning knobs for [`generate_dense_mesh`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Target edge length; also the interior grid spacing.
    pub h: f64,
    /// Boundary sample spacing as a fraction of `h` (at most 1).
    pub boundary_ratio: f64,
    /// Minimum distance from a grid point to the boundary, as a fraction of `h`.
    pub clearance: f64,
}

impl MeshOptions {
    pub fn new(h: f64) -> Self {
        MeshOptions {
            h,
            boundary_ratio: 0.5,
            clearance: 0.5,
        }
    }
}

/// Dense triangulation of `domain`: boundary resampled at spacing at most
/// `h`, interior seeded with an axis-aligned grid of spacing `h` centered on
/// the bounding box, CDT constrained by the boundary, exterior and hole
/// triangles dropped.
///
/// Vertex order: outer loop samples, then each hole's samples, then grid
/// points row by row. Loop `i` starts at vertex 0 of polygon loop `i`.
pub fn generate_dense_mesh(domain: &DomainSpec, h: f64) -> Result<TriMesh> {
    generate_dense_mesh_with(domain, &MeshOptions::new(h))
}

pub fn generate_dense_mesh_with(domain: &DomainSpec, opts: &MeshOptions) -> Result<TriMesh> {
    let h = opts.h;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Mesh(format!(
            "edge length must be positive, got {h}"
        )));
    }
    if !(opts.boundary_ratio > 0.0 && opts.boundary_ratio <= 1.0) {
        return Err(Error::Mesh("boundary ratio must lie in (0, 1]".into()));
    }
    let diameter = domain.diameter();
    if h >= diameter {
        return Err(Error::Mesh(format!(
            "h = {h} collapses the boundary (domain diameter {diameter})"
        )));
    }
    for (i, lp) in domain.loops().enumerate() {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in lp {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let size = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
        if h >= size {
            return Err(Error::Mesh(format!(
                "h = {h} collapses boundary loop {i} (size {size})"
            )));
        }
    }

    let spacing = h * opts.boundary_ratio;
    let mut points: Vec<Point> = Vec::new();
    let mut loops: Vec<Vec<usize>> = Vec::new();
    let mut segments: Vec<[usize; 2]> = Vec::new();
    for lp in domain.loops() {
        let start = points.len();
        for i in 0..lp.len() {
            let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
            let pieces = ((dist(a, b) / spacing) - 1e-9).ceil().max(1.0) as usize;
            for k in 0..pieces {
                let t = k as f64 / pieces as f64;
                points.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        let ids: Vec<usize> = (start..points.len()).collect();
        for i in 0..ids.len() {
            segments.push([ids[i], ids[(i + 1) % ids.len()]]);
        }
        loops.push(ids);
    }

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in domain.outer() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let nx = ((hi[0] - lo[0]) / (2.0 * h)).ceil() as i64;
    let ny = ((hi[1] - lo[1]) / (2.0 * h)).ceil() as i64;
    let min_clear = opts.clearance * h;
    for j in -ny..=ny {
        for i in -nx..=nx {
            let p = [center[0] + i as f64 * h, center[1] + j as f64 * h];
            if domain.contains(p) && domain.distance_to_boundary(p) >= min_clear.max(1e-9 * h) {
                points.push(p);
            }
        }
    }

    let (triangles, constrained) = triangulate(&points, &segments)?;
    let depth = constraint_depth(&triangles, &constrained);
    let kept: Vec<[usize; 3]> = triangles
        .into_iter()
        .zip(depth)
        .filter(|&(_, d)| d % 2 == 1)
        .map(|(t, _)| t)
        .collect();
    if kept.is_empty() {
        return Err(Error::Mesh("no triangles inside the domain".into()));
    }
    check_connected(&kept)?;
    if let Some(v) = used_vertices(&kept, points.len()) {
        return Err(Error::Mesh(format!(
            "vertex {v} is not covered by any triangle"
        )));
    }
    TriMesh::with_loops(points, kept, loops)
}

/// Number of constraint edges crossed on the cheapest walk from the exterior
/// to each triangle. Odd depth means inside the domain; this agrees with a
/// centroid containment test but stays exact for the hull slivers that
/// nearly collinear boundary samples produce.
fn constraint_depth(tris: &[[usize; 3]], constrained: &HashSet<(usize, usize)>) -> Vec<usize> {
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let mut depth = vec![usize::MAX; tris.len()];
    let mut queue = VecDeque::new();
    for (e, owners) in &by_edge {
        if let [t] = owners.as_slice() {
            let d = usize::from(constrained.contains(e));
            if d < depth[*t] {
                depth[*t] = d;
            }
        }
    }
    for (t, &d) in depth.iter().enumerate() {
        if d != usize::MAX {
            queue.push_back(t);
        }
    }
    // 0-1 BFS with re-relaxation
    while let Some(t) = queue.pop_front() {
        for k in 0..3 {
            let (a, b) = (tris[t][k], tris[t][(k + 1) % 3]);
            let e = (a.min(b), a.max(b));
            let w = usize::from(constrained.contains(&e));
            for &u in &by_edge[&e] {
                if u != t && depth[t] + w < depth[u] {
                    depth[u] = depth[t] + w;
                    if w == 0 {
                        queue.push_front(u);
                    } else {
                        queue.push_back(u);
                    }
                }
            }
        }
    }
    depth
}

fn used_vertices(tris: &[[usize; 3]], n: usize) -> Option<usize> {
    let mut used = vec![false; n];
    for &v in tris.iter().flatten() {
        used[v] = true;
    }
    used.iter().position(|u| !u)
}

fn check_connected(tris: &[[usize; 3]]) -> Result<()> {
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let mut seen = vec![false; tris.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(t) = queue.pop_front() {
        for k in 0..3 {
            let (a, b) = (tris[t][k], tris[t][(k + 1) % 3]);
            for &u in &by_edge[&(a.min(b), a.max(b))] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
    }
    if count != tris.len() {
        return Err(Error::Mesh(format!(
            "mesh is disconnected ({count} of {} triangles reachable)",
            tris.len()
        )));
    }
    Ok(())
}

/// Index of the lowest-numbered triangle containing `p` (edges and vertices
/// count as inside), or `None` when `p` is outside the mesh.
pub fn point_location(mesh: &TriMesh, p: Point) -> Option<usize> {
    let norm = Normalizer::from_points(mesh.vertices.iter());
    let q = norm.apply(p);
    mesh.triangles.iter().position(|t| {
        let [a, b, c] = t.map(|v| norm.apply(mesh.vertices[v]));
        orient(a, b, q) >= -PREDICATE_EPS
            && orient(b, c, q) >= -PREDICATE_EPS
            && orient(c, a, q) >= -PREDICATE_EPS
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{constrained_delaunay, load_domain};

    pub(crate) fn ngon(n: usize, r: f64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [r * t.cos(), r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn disk_mesh_containment() {
        let d = DomainSpec::new(ngon(64, 1.0), vec![]).unwrap();
        let m = generate_dense_mesh(&d, 0.1).unwrap();
        assert_eq!(m.boundary_loops().len(), 1);
        assert!(m.boundary_loops()[0].len() >= 64);
        for t in m.triangles() {
            let c = [
                (m.vertices()[t[0]][0] + m.vertices()[t[1]][0] + m.vertices()[t[2]][0]) / 3.0,
                (m.vertices()[t[0]][1] + m.vertices()[t[1]][1] + m.vertices()[t[2]][1]) / 3.0,
            ];
            assert!(d.contains(c));
        }
    }

    #[test]
    fn square_with_hole_euler() {
        let d = load_domain(
            "outer 4\n0 0\n1 0\n1 1\n0 1\nhole 4\n0.3 0.3\n0.7 0.3\n0.7 0.7\n0.3 0.7\n",
        )
        .unwrap();
        let m = generate_dense_mesh(&d, 0.05).unwrap();
        assert_eq!(m.boundary_loops().len(), 2);
        let (v, e, f) = (
            m.num_vertices() as i64,
            m.edges().len() as i64,
            m.triangles().len() as i64,
        );
        assert_eq!(v - e + f, 0);
        // hole loop interior on the left: clockwise
        let hole: Vec<Point> = m.boundary_loops()[1]
            .iter()
            .map(|&i| m.vertices()[i])
            .collect();
        assert!(signed_area(&hole) < 0.0);
        for t in m.triangles() {
            let c = [
                (m.vertices()[t[0]][0] + m.vertices()[t[1]][0] + m.vertices()[t[2]][0]) / 3.0,
                (m.vertices()[t[0]][1] + m.vertices()[t[1]][1] + m.vertices()[t[2]][1]) / 3.0,
            ];
            assert!(!(c[0] > 0.3 && c[0] < 0.7 && c[1] > 0.3 && c[1] < 0.7));
        }
    }

    #[test]
    fn boundary_edges_survive() {
        let d = load_domain("outer 6\n0 0\n2 0\n2 1\n1 1\n1 2\n0 2\n").unwrap();
        let m = generate_dense_mesh(&d, 0.1).unwrap();
        let edges: HashSet<_> = m.edges().into_iter().collect();
        for lp in m.boundary_loops() {
            for i in 0..lp.len() {
                let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                assert!(edges.contains(&(a.min(b), a.max(b))));
            }
        }
        // loop 0 starts at polygon vertex 0
        assert_eq!(m.vertices()[m.boundary_loops()[0][0]], [0.0, 0.0]);
    }

    #[test]
    fn oversized_h_is_rejected() {
        let d = load_domain("outer 4\n0 0\n1 0\n1 1\n0 1\n").unwrap();
        assert!(matches!(generate_dense_mesh(&d, 10.0), Err(Error::Mesh(_))));
        assert!(generate_dense_mesh(&d, 0.0).is_err());
    }

    #[test]
    fn locate_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let m = constrained_delaunay(&pts, &[]).unwrap();
        let t0 = m.triangles()[0];
        let c = [
            (pts[t0[0]][0] + pts[t0[1]][0] + pts[t0[2]][0]) / 3.0,
            (pts[t0[0]][1] + pts[t0[1]][1] + pts[t0[2]][1]) / 3.0,
        ];
        assert_eq!(point_location(&m, c), Some(0));
        assert_eq!(point_location(&m, [50.0, 50.0]), None);
        // the diagonal (0, 2) is shared by both triangles
        assert_eq!(point_location(&m, [0.5, 0.5]), Some(0));
    }

    #[test]
    fn with_loops_rejects_mismatch() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(TriMesh::with_loops(pts.clone(), vec![[0, 1, 2]], vec![vec![1, 2, 0]]).is_ok());
        assert!(TriMesh::with_loops(pts, vec![[0, 1, 2]], vec![vec![0, 2, 1]]).is_err());
    }
}
