//! Greedy routing over a sparse set of sites: divergence distance matrix,
//! local Voronoi test, augmented Delaunay graph and greedy routes.

use std::collections::{HashSet, VecDeque};
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coords::CoordinateField;
use crate::divergence::DistanceFn;
use crate::error::{Error, Result};
use crate::geometry::{
    constrained_delaunay, dist, point_segment_distance, signed_area, DomainSpec, Point, TriMesh,
};

/// Sites are kept at least this factor times `sqrt(area / m)` apart.
pub const SEPARATION_FACTOR: f64 = 0.7;

/// Sampling gives up after this many draws per requested site.
pub const ATTEMPTS_PER_SITE: usize = 100;

/// Interior mesh vertices chosen as routing sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    vertices: Vec<usize>,
    positions: Vec<Point>,
    seed: u64,
}

impl SiteSet {
    /// Sites at the given mesh vertices, in order.
    pub fn from_vertices(mesh: &TriMesh, vertices: Vec<usize>, seed: u64) -> Result<Self> {
        let mut seen = HashSet::with_capacity(vertices.len());
        for &v in &vertices {
            if v >= mesh.num_vertices() || mesh.is_boundary(v) {
                return Err(Error::Routing(format!(
                    "site vertex {v} is not an interior vertex"
                )));
            }
            if !seen.insert(v) {
                return Err(Error::Routing(format!("site vertex {v} appears twice")));
            }
        }
        let positions = vertices.iter().map(|&v| mesh.vertices()[v]).collect();
        Ok(SiteSet {
            vertices,
            positions,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Area enclosed by the mesh.
pub fn mesh_area(mesh: &TriMesh) -> f64 {
    mesh.triangles()
        .iter()
        .map(|t| {
            signed_area(&[
                mesh.vertices()[t[0]],
                mesh.vertices()[t[1]],
                mesh.vertices()[t[2]],
            ])
        })
        .sum()
}

/// Distance from `p` to the nearest boundary edge of the mesh.
pub fn distance_to_mesh_boundary(mesh: &TriMesh, p: Point) -> f64 {
    let pts = mesh.vertices();
    mesh.boundary_loops()
        .iter()
        .flat_map(|l| (0..l.len()).map(move |i| (l[i], l[(i + 1) % l.len()])))
        .map(|(a, b)| point_segment_distance(p, pts[a], pts[b]))
        .fold(f64::INFINITY, f64::min)
}

/// Draws `m` sites by rejection from interior vertices at least `clearance`
/// from the boundary (default: the mean mesh edge length), keeping them
/// `0.7 sqrt(area / m)` apart. Deterministic for a given seed.
pub fn sample_sites(
    mesh: &TriMesh,
    m: usize,
    seed: u64,
    clearance: Option<f64>,
) -> Result<SiteSet> {
    if m < 2 {
        return Err(Error::Routing(format!("need at least 2 sites, got {m}")));
    }
    let clearance = clearance.unwrap_or_else(|| mesh.edge_length_stats().1);
    let candidates: Vec<usize> = mesh
        .interior_vertices()
        .filter(|&v| distance_to_mesh_boundary(mesh, mesh.vertices()[v]) >= clearance)
        .collect();
    if candidates.len() < m {
        return Err(Error::Routing(format!(
            "only {} interior vertices meet the clearance {clearance}, {m} sites requested",
            candidates.len()
        )));
    }
    let separation = SEPARATION_FACTOR * (mesh_area(mesh) / m as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for _ in 0..ATTEMPTS_PER_SITE * m {
        if chosen.len() == m {
            break;
        }
        let v = candidates[rng.random_range(0..candidates.len())];
        let p = mesh.vertices()[v];
        if chosen
            .iter()
            .all(|&u| dist(mesh.vertices()[u], p) >= separation)
        {
            chosen.push(v);
        }
    }
    if chosen.len() < m {
        return Err(Error::Routing(format!(
            "placed only {} of {m} sites {separation:.4} apart after {} attempts",
            chosen.len(),
            ATTEMPTS_PER_SITE * m
        )));
    }
    SiteSet::from_vertices(mesh, chosen, seed)
}

/// Coordinate rows of the sites only: the `m × n` payload a router stores.
pub fn site_payload(coords: &CoordinateField, sites: &SiteSet) -> Result<CoordinateField> {
    let values = sites
        .vertices()
        .iter()
        .flat_map(|&v| coords.row(v).iter().copied())
        .collect();
    CoordinateField::from_values(sites.len(), coords.n(), values, coords.basis())
}

/// `D[s][t]`: distance from site `s` to target site `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    values: Vec<f64>,
    generator: String,
}

impl DistanceMatrix {
    /// Wraps row-major values; the diagonal must be zero and all entries
    /// finite and nonnegative.
    pub fn from_values(m: usize, values: Vec<f64>, generator: &str) -> Result<Self> {
        if values.len() != m * m {
            return Err(Error::Routing(format!(
                "{} values for an {m} x {m} matrix",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Routing(format!(
                "D[{}][{}] = {} is not finite and nonnegative",
                i / m,
                i % m,
                values[i]
            )));
        }
        if let Some(s) = (0..m).find(|&s| values[s * m + s] != 0.0) {
            return Err(Error::Routing(format!("D[{s}][{s}] is not zero")));
        }
        Ok(DistanceMatrix {
            m,
            values,
            generator: generator.to_string(),
        })
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.values[s * self.m + t]
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    /// Largest `|D[s][t] - D[t][s]|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.m {
            for t in s + 1..self.m {
                worst = worst.max((self.get(s, t) - self.get(t, s)).abs());
            }
        }
        worst
    }
}

/// Pairwise site distances; rows are computed in parallel.
pub fn distance_matrix(
    coords: &CoordinateField,
    sites: &SiteSet,
    dist: &DistanceFn,
) -> Result<DistanceMatrix> {
    let m = sites.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|s| {
            let x = coords.row(sites.vertices()[s]);
            (0..m)
                .map(|t| {
                    if s == t {
                        0.0
                    } else {
                        dist.eval_unchecked(x, coords.row(sites.vertices()[t]))
                    }
                })
                .collect()
        })
        .collect();
    DistanceMatrix::from_values(m, rows.concat(), dist.name())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeTag {
    Delaunay,
    Augmented,
}

impl fmt::Display for EdgeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeTag::Delaunay => "delaunay",
            EdgeTag::Augmented => "augmented",
        })
    }
}

/// Undirected graph over sites with tagged edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteGraph {
    sites: SiteSet,
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize, EdgeTag)>,
    generator: String,
}

impl SiteGraph {
    /// Graph with the given edges (`i < j` not required; duplicates rejected).
    pub fn new(
        sites: SiteSet,
        edges: Vec<(usize, usize, EdgeTag)>,
        generator: &str,
    ) -> Result<Self> {
        let mut g = SiteGraph {
            adjacency: vec![Vec::new(); sites.len()],
            sites,
            edges: Vec::with_capacity(edges.len()),
            generator: generator.to_string(),
        };
        for (a, b, tag) in edges {
            if a >= g.sites.len() || b >= g.sites.len() || a == b {
                return Err(Error::Routing(format!("invalid edge ({a}, {b})")));
            }
            if !g.add_edge(a, b, tag) {
                return Err(Error::Routing(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(g)
    }

    /// Adds an undirected edge; returns false if it already exists.
    pub fn add_edge(&mut self, a: usize, b: usize, tag: EdgeTag) -> bool {
        let Err(pos) = self.adjacency[a].binary_search(&b) else {
            return false;
        };
        self.adjacency[a].insert(pos, b);
        let pos = self.adjacency[b].binary_search(&a).unwrap_err();
        self.adjacency[b].insert(pos, a);
        self.edges.push((a.min(b), a.max(b), tag));
        true
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Sorted neighbour list of site `s`.
    pub fn neighbors(&self, s: usize) -> &[usize] {
        &self.adjacency[s]
    }

    /// Edges in insertion order, each as `(lo, hi, tag)`.
    pub fn edges(&self) -> &[(usize, usize, EdgeTag)] {
        &self.edges
    }

    pub fn count(&self, tag: EdgeTag) -> usize {
        self.edges.iter().filter(|e| e.2 == tag).count()
    }

    /// Name of the distance the graph was made greedy for.
    pub fn generator(&self) -> &str {
        &self.generator
    }

    /// Graph file: `generator g`, `sites m` + `vertex x y` lines,
    /// `edges e` + `i j tag` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "generator {}", self.generator);
        let _ = writeln!(out, "sites {} {}", self.sites.len(), self.sites.seed());
        for (v, p) in self.sites.vertices().iter().zip(self.sites.positions()) {
            let _ = writeln!(out, "{v} {:?} {:?}", p[0], p[1]);
        }
        let _ = writeln!(out, "edges {}", self.edges.len());
        for (a, b, tag) in &self.edges {
            let _ = writeln!(out, "{a} {b} {tag}");
        }
        out
    }

    /// Parses a graph file; site vertices are checked against `mesh`. The
    /// `generator` line is optional (empty name when absent).
    pub fn from_text(text: &str, mesh: &TriMesh) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = || {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, "unexpected end of graph file"))
        };

        let (mut ln, mut l) = next()?;
        let mut generator = String::new();
        if let ["generator", g] = l.split_whitespace().collect::<Vec<_>>()[..] {
            generator = g.to_string();
            (ln, l) = next()?;
        }
        let (m, seed) = match l.split_whitespace().collect::<Vec<_>>()[..] {
            ["sites", m] => (parse_num(ln, m)?, 0),
            ["sites", m, seed] => (parse_num(ln, m)?, parse_num::<u64>(ln, seed)?),
            _ => return Err(Error::parse(ln, "expected `sites <m>`")),
        };
        let mut vertices = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = next()?;
            let tok: Vec<&str> = l.split_whitespace().collect();
            let [v, x, y] = tok[..] else {
                return Err(Error::parse(ln, "expected `vertex x y`"));
            };
            let v: usize = parse_num(ln, v)?;
            let p: Point = [parse_num(ln, x)?, parse_num(ln, y)?];
            if v >= mesh.num_vertices()
                || dist(mesh.vertices()[v], p) > 1e-9 * (1.0 + p[0].abs() + p[1].abs())
            {
                return Err(Error::parse(
                    ln,
                    format!("site vertex {v} does not match the mesh"),
                ));
            }
            vertices.push(v);
        }
        let (ln, l) = next()?;
        let e: usize = match l.split_whitespace().collect::<Vec<_>>()[..] {
            ["edges", e] => parse_num(ln, e)?,
            _ => return Err(Error::parse(ln, "expected `edges <e>`")),
        };
        let mut edges = Vec::with_capacity(e);
        for _ in 0..e {
            let (ln, l) = next()?;
            let tok: Vec<&str> = l.split_whitespace().collect();
            let [a, b, tag] = tok[..] else {
                return Err(Error::parse(ln, "expected `i j tag`"));
            };
            let tag = match tag {
                "delaunay" => EdgeTag::Delaunay,
                "augmented" => EdgeTag::Augmented,
                other => return Err(Error::parse(ln, format!("unknown edge tag `{other}`"))),
            };
            edges.push((parse_num(ln, a)?, parse_num(ln, b)?, tag));
        }
        if let Ok((ln, _)) = next() {
            return Err(Error::parse(ln, "trailing content after the edge list"));
        }
        let sites = SiteSet::from_vertices(mesh, vertices, seed)?;
        SiteGraph::new(sites, edges, &generator)
    }
}

fn parse_num<T: std::str::FromStr>(ln: usize, tok: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    tok.parse()
        .map_err(|e| Error::parse(ln, format!("bad number `{tok}`: {e}")))
}

/// Delaunay graph of the sites, constrained by the domain boundary: polygon
/// vertices join the triangulation and polygon edges are constraints; only
/// site-to-site edges are kept.
pub fn site_delaunay(sites: &SiteSet, domain: &DomainSpec, generator: &str) -> Result<SiteGraph> {
    let m = sites.len();
    let mut points: Vec<Point> = sites.positions().to_vec();
    let mut segments = Vec::new();
    for lp in domain.loops() {
        let base = points.len();
        points.extend_from_slice(lp);
        for i in 0..lp.len() {
            segments.push([base + i, base + (i + 1) % lp.len()]);
        }
    }
    let edges: Vec<(usize, usize, EdgeTag)> = if m == 2 {
        vec![(0, 1, EdgeTag::Delaunay)]
    } else {
        let cdt = constrained_delaunay(&points, &segments)?;
        let mut e: Vec<(usize, usize)> = cdt
            .triangles()
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .filter(|&(a, b)| b < m && domain.contains(midpoint(points[a], points[b])))
            .collect();
        e.sort_unstable();
        e.dedup();
        e.into_iter()
            .map(|(a, b)| (a, b, EdgeTag::Delaunay))
            .collect()
    };
    SiteGraph::new(sites.clone(), edges, generator)
}

fn midpoint(a: Point, b: Point) -> Point {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
}

/// Sites `t != s` closer (as targets) to `s` than to every neighbour of `s`:
/// `D[s][t] < D[r][t]` for all `r` in `N(s)`.
pub fn local_voronoi_violators(graph: &SiteGraph, d: &DistanceMatrix, s: usize) -> Vec<usize> {
    let nbrs = graph.neighbors(s);
    (0..graph.len())
        .filter(|&t| t != s && nbrs.iter().all(|&r| d.get(s, t) < d.get(r, t)))
        .collect()
}

fn has_violator(graph: &SiteGraph, d: &DistanceMatrix, s: usize) -> bool {
    let nbrs = graph.neighbors(s);
    (0..graph.len()).any(|t| t != s && nbrs.iter().all(|&r| d.get(s, t) < d.get(r, t)))
}

/// Site graph made greedy for `d`: starting from the constrained Delaunay
/// graph, each site in index order gets edges to its Euclidean-nearest
/// non-neighbours until it has no local Voronoi violator; sweeps repeat
/// until one adds nothing.
pub fn augment_to_greedy(
    sites: &SiteSet,
    domain: &DomainSpec,
    d: &DistanceMatrix,
) -> Result<SiteGraph> {
    if sites.len() < 2 {
        return Err(Error::Routing("need at least 2 sites".into()));
    }
    if d.len() != sites.len() {
        return Err(Error::Routing(format!(
            "distance matrix is {0} x {0} for {1} sites",
            d.len(),
            sites.len()
        )));
    }
    let mut graph = site_delaunay(sites, domain, d.generator())?;
    let pos = sites.positions();
    loop {
        let mut added = false;
        for s in 0..graph.len() {
            while has_violator(&graph, d, s) {
                let nearest = (0..graph.len())
                    .filter(|&u| u != s && graph.neighbors(s).binary_search(&u).is_err())
                    .min_by(|&a, &b| dist(pos[s], pos[a]).total_cmp(&dist(pos[s], pos[b])));
                let Some(u) = nearest else { break };
                graph.add_edge(s, u, EdgeTag::Augmented);
                added = true;
            }
        }
        if !added {
            return Ok(graph);
        }
    }
}

/// Greedy route from `s` to `t`: always the neighbour with the smallest
/// distance to `t`, which must strictly decrease.
pub fn greedy_route(
    graph: &SiteGraph,
    d: &DistanceMatrix,
    s: usize,
    t: usize,
) -> Result<Vec<usize>> {
    if s >= graph.len() || t >= graph.len() {
        return Err(Error::Routing(format!("sites {s}, {t} out of range")));
    }
    let mut route = vec![s];
    let mut cur = s;
    while cur != t {
        let next =
            best_hop(graph, d, cur, t).ok_or(Error::GreedyViolation { at: cur, target: t })?;
        route.push(next);
        cur = next;
    }
    Ok(route)
}

fn best_hop(graph: &SiteGraph, d: &DistanceMatrix, cur: usize, t: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &u in graph.neighbors(cur) {
        if d.get(u, t) < d.get(cur, t) && best.is_none_or(|b| d.get(u, t) < d.get(b, t)) {
            best = Some(u);
        }
    }
    best
}

/// Next hop of every site towards `t` (`None` at `t`).
pub fn routing_tree(graph: &SiteGraph, d: &DistanceMatrix, t: usize) -> Result<Vec<Option<usize>>> {
    (0..graph.len())
        .map(|s| {
            if s == t {
                Ok(None)
            } else {
                best_hop(graph, d, s, t)
                    .map(Some)
                    .ok_or(Error::GreedyViolation { at: s, target: t })
            }
        })
        .collect()
}

/// Mesh vertices `z` with `d(s, z) < d(r, z)` for every neighbour `r` of
/// site `s`; the cell may be disconnected.
pub fn local_voronoi_region(
    mesh: &TriMesh,
    coords: &CoordinateField,
    graph: &SiteGraph,
    s: usize,
    dist: &DistanceFn,
) -> Vec<usize> {
    let row = |site: usize| coords.row(graph.sites().vertices()[site]);
    let xs = row(s);
    (0..mesh.num_vertices())
        .into_par_iter()
        .filter(|&z| {
            let y = coords.row(z);
            let ds = dist.eval_unchecked(xs, y);
            graph
                .neighbors(s)
                .iter()
                .all(|&r| ds < dist.eval_unchecked(row(r), y))
        })
        .collect()
}

/// Number of mesh-edge connected components of a vertex subset.
pub fn component_count(mesh: &TriMesh, region: &[usize]) -> usize {
    let inside: HashSet<usize> = region.iter().copied().collect();
    let mut seen: HashSet<usize> = HashSet::with_capacity(region.len());
    let mut count = 0;
    for &start in region {
        if !seen.insert(start) {
            continue;
        }
        count += 1;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in &mesh.neighbors()[v] {
                if inside.contains(&u) && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::{compute_coordinates, partition_boundary, BasisKind, BoundaryPartition};
    use crate::divergence::ConvexGenerator;
    use crate::geometry::{generate_dense_mesh, load_domain};
    use proptest::prelude::*;

    fn matrix(rows: &[&[f64]]) -> DistanceMatrix {
        DistanceMatrix::from_values(rows.len(), rows.concat(), "test").unwrap()
    }

    fn line_sites(m: usize) -> (TriMesh, SiteSet) {
        let d = load_domain("outer 4\n0 0\n1 0\n1 1\n0 1\n").unwrap();
        let mesh = generate_dense_mesh(&d, 0.1).unwrap();
        let v: Vec<usize> = mesh.interior_vertices().take(m).collect();
        let s = SiteSet::from_vertices(&mesh, v, 0).unwrap();
        (mesh, s)
    }

    #[test]
    fn clique_has_no_violators() {
        let (_, sites) = line_sites(4);
        let edges = (0..4)
            .flat_map(|a| (a + 1..4).map(move |b| (a, b, EdgeTag::Delaunay)))
            .collect();
        let g = SiteGraph::new(sites, edges, "test").unwrap();
        let d = matrix(&[
            &[0.0, 1.0, 2.0, 3.0],
            &[1.5, 0.0, 1.0, 2.0],
            &[2.5, 1.0, 0.0, 1.0],
            &[3.5, 2.0, 1.0, 0.0],
        ]);
        for s in 0..4 {
            assert!(local_voronoi_violators(&g, &d, s).is_empty());
        }
    }

    #[test]
    fn star_with_excluded_site() {
        // s = 0 linked to 1 and 2; site 3 is nearer to 0 than to either neighbour
        let (_, sites) = line_sites(4);
        let g = SiteGraph::new(
            sites,
            vec![(0, 1, EdgeTag::Delaunay), (0, 2, EdgeTag::Delaunay)],
            "test",
        )
        .unwrap();
        let d = matrix(&[
            &[0.0, 1.0, 1.0, 1.0],
            &[1.0, 0.0, 2.0, 5.0],
            &[1.0, 2.0, 0.0, 5.0],
            &[1.0, 5.0, 5.0, 0.0],
        ]);
        assert_eq!(local_voronoi_violators(&g, &d, 0), vec![3]);
        assert!(matches!(
            greedy_route(&g, &d, 1, 3),
            Err(Error::GreedyViolation { .. })
        ));
    }

    #[test]
    fn three_sites_need_no_augmentation() {
        let d = load_domain("outer 4\n0 0\n1 0\n1 1\n0 1\n").unwrap();
        let mesh = generate_dense_mesh(&d, 0.05).unwrap();
        let sites = sample_sites(&mesh, 3, 5, None).unwrap();
        let p = partition_boundary(&mesh, &d, 0.5, BasisKind::Box).unwrap();
        let c = compute_coordinates(&mesh, &p).unwrap();
        let dm = distance_matrix(&c, &sites, &ConvexGenerator::kl().into()).unwrap();
        let g = augment_to_greedy(&sites, &d, &dm).unwrap();
        assert_eq!(g.count(EdgeTag::Delaunay), 3);
        assert_eq!(g.count(EdgeTag::Augmented), 0);
    }

    #[test]
    fn greedy_graph_on_square_with_hole() {
        let d = load_domain(
            "outer 4\n0 0\n1 0\n1 1\n0 1\nhole 4\n0.4 0.4\n0.6 0.4\n0.6 0.6\n0.4 0.6\n",
        )
        .unwrap();
        let mesh = generate_dense_mesh(&d, 0.03).unwrap();
        let sites = sample_sites(&mesh, 40, 9, None).unwrap();
        let p = partition_boundary(&mesh, &d, 0.25, BasisKind::Box).unwrap();
        let c = compute_coordinates(&mesh, &p).unwrap();
        for g in [ConvexGenerator::kl(), ConvexGenerator::hellinger()] {
            let dm = distance_matrix(&c, &sites, &g.into()).unwrap();
            let graph = augment_to_greedy(&sites, &d, &dm).unwrap();
            // no Delaunay edge crosses the hole
            for &(a, b, tag) in graph.edges() {
                if tag == EdgeTag::Delaunay {
                    let (pa, pb) = (sites.positions()[a], sites.positions()[b]);
                    assert!(d.contains(midpoint(pa, pb)));
                }
            }
            for s in 0..graph.len() {
                assert!(local_voronoi_violators(&graph, &dm, s).is_empty());
                let tree = routing_tree(&graph, &dm, s).unwrap();
                assert_eq!(tree[s], None);
                for t in 0..graph.len() {
                    let r = greedy_route(&graph, &dm, s, t).unwrap();
                    assert!(r.len() <= graph.len());
                    assert!(r.windows(2).all(|w| dm.get(w[1], t) < dm.get(w[0], t)));
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_spread() {
        let d = load_domain("outer 4\n0 0\n1 0\n1 1\n0 1\n").unwrap();
        let mesh = generate_dense_mesh(&d, 0.02).unwrap();
        let a = sample_sites(&mesh, 50, 1, None).unwrap();
        assert_eq!(a, sample_sites(&mesh, 50, 1, None).unwrap());
        assert_ne!(a, sample_sites(&mesh, 50, 2, None).unwrap());
        let sep = SEPARATION_FACTOR * (1.0f64 / 50.0).sqrt();
        let clearance = mesh.edge_length_stats().1;
        for (i, p) in a.positions().iter().enumerate() {
            assert!(d.distance_to_boundary(*p) >= clearance - 1e-12);
            for q in &a.positions()[..i] {
                assert!(dist(*p, *q) >= sep);
            }
        }
        assert!(sample_sites(&mesh, 1, 1, None).is_err());
        assert!(sample_sites(&mesh, 5000, 1, None).is_err());
    }

    #[test]
    fn matrix_properties_and_payload() {
        let d = load_domain("outer 5\n0 0\n2 0\n2 1\n1 0.5\n0 1\n").unwrap();
        let mesh = generate_dense_mesh(&d, 0.05).unwrap();
        let sites = sample_sites(&mesh, 20, 4, None).unwrap();
        let p = partition_boundary(&mesh, &d, 0.5, BasisKind::Box).unwrap();
        let c = compute_coordinates(&mesh, &p).unwrap();
        let h = distance_matrix(&c, &sites, &ConvexGenerator::hellinger().into()).unwrap();
        assert!(h.max_asymmetry() < 1e-12);
        let kl = distance_matrix(&c, &sites, &ConvexGenerator::kl().into()).unwrap();
        assert!(kl.max_asymmetry() > 0.0);
        let payload = site_payload(&c, &sites).unwrap();
        assert_eq!(payload.values().len(), sites.len() * c.n());
        assert_eq!(payload.row(3), c.row(sites.vertices()[3]));
    }

    #[test]
    fn graph_file_roundtrip_and_regions() {
        let d = load_domain("outer 4\n0 0\n1 0\n1 1\n0 1\n").unwrap();
        let mesh = generate_dense_mesh(&d, 0.05).unwrap();
        let sites = sample_sites(&mesh, 12, 3, None).unwrap();
        let p = partition_boundary(&mesh, &d, 0.5, BasisKind::Box).unwrap();
        let c = compute_coordinates(&mesh, &p).unwrap();
        let kl: DistanceFn = ConvexGenerator::kl().into();
        let dm = distance_matrix(&c, &sites, &kl).unwrap();
        let g = augment_to_greedy(&sites, &d, &dm).unwrap();
        let text = g.to_text();
        let back = SiteGraph::from_text(&text, &mesh).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
        for s in 0..g.len() {
            let region = local_voronoi_region(&mesh, &c, &g, s, &kl);
            assert!(region.contains(&sites.vertices()[s]));
            assert!(component_count(&mesh, &region) >= 1);
        }
    }

    fn disk(n: usize) -> DomainSpec {
        let pts: Vec<String> = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                format!("{:?} {:?}", t.cos(), t.sin())
            })
            .collect();
        load_domain(&format!("outer {n}\n{}\n", pts.join("\n"))).unwrap()
    }

    #[test]
    fn two_sites_on_disk() {
        let d = disk(32);
        let mesh = generate_dense_mesh(&d, 0.1).unwrap();
        let sites = sample_sites(&mesh, 2, 11, None).unwrap();
        assert_ne!(sites.vertices()[0], sites.vertices()[1]);
        let dm = DistanceMatrix::from_values(2, vec![0.0, 1.0, 2.0, 0.0], "kl").unwrap();
        let g = augment_to_greedy(&sites, &d, &dm).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(greedy_route(&g, &dm, 0, 0).unwrap(), vec![0]);
        assert_eq!(greedy_route(&g, &dm, 1, 0).unwrap(), vec![1, 0]);
    }

    #[test]
    fn routing_trees_are_trees() {
        let d = disk(64);
        let mesh = generate_dense_mesh(&d, 0.05).unwrap();
        let sites = sample_sites(&mesh, 30, 2, None).unwrap();
        let p = BoundaryPartition::uniform(&mesh, &[12], BasisKind::Box).unwrap();
        let c = compute_coordinates(&mesh, &p).unwrap();
        for g in [ConvexGenerator::kl(), ConvexGenerator::hellinger()] {
            let dm = distance_matrix(&c, &sites, &g.into()).unwrap();
            let graph = augment_to_greedy(&sites, &d, &dm).unwrap();
            for t in 0..graph.len() {
                let tree = routing_tree(&graph, &dm, t).unwrap();
                assert_eq!(tree.iter().filter(|h| h.is_some()).count(), graph.len() - 1);
                for s in 0..graph.len() {
                    // following next hops reaches t within m - 1 steps
                    let (mut cur, mut hops) = (s, 0);
                    while let Some(next) = tree[cur] {
                        assert!(graph.neighbors(cur).contains(&next));
                        cur = next;
                        hops += 1;
                        assert!(hops < graph.len());
                    }
                    assert_eq!(cur, t);
                    assert_eq!(greedy_route(&graph, &dm, s, t).unwrap().len(), hops + 1);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn adding_edges_never_grows_violators(
            values in prop::collection::vec(0.01f64..10.0, 36),
            edges in prop::collection::vec((0usize..6, 0usize..6), 0..10),
            extra in (0usize..6, 0usize..6),
        ) {
            let (_, sites) = line_sites(6);
            let mut values = values;
            for s in 0..6 {
                values[s * 6 + s] = 0.0;
            }
            let dm = DistanceMatrix::from_values(6, values, "test").unwrap();
            let mut g = SiteGraph::new(sites, Vec::new(), "test").unwrap();
            for (a, b) in edges {
                if a != b {
                    g.add_edge(a, b, EdgeTag::Delaunay);
                }
            }
            let before: Vec<Vec<usize>> = (0..6).map(|s| local_voronoi_violators(&g, &dm, s)).collect();
            if extra.0 != extra.1 {
                g.add_edge(extra.0, extra.1, EdgeTag::Augmented);
            }
            for s in 0..6 {
                let after = local_voronoi_violators(&g, &dm, s);
                prop_assert!(after.iter().all(|t| before[s].contains(t)));
            }
        }
    }
}
