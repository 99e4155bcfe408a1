use std::collections::{HashMap, HashSet, VecDeque};

use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{incircle, orient, Normalizer, Point, TriMesh, PREDICATE_EPS};
use crate::error::{Error, Result};

type Edge = (usize, usize);

#[inline]
fn key(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Constrained Delaunay triangulation of `points` containing every segment
/// in `segments` as an edge (a segment through an intermediate input point is
/// split there). Cocircular configurations are resolved by choosing the
/// diagonal incident to the lowest vertex index.
pub fn constrained_delaunay(points: &[Point], segments: &[[usize; 2]]) -> Result<TriMesh> {
    let (triangles, _) = triangulate(points, segments)?;
    TriMesh::new(points.to_vec(), triangles)
}

/// Same as [`constrained_delaunay`] but returns the raw triangle list and the
/// set of constrained edges, for callers that cull triangles afterwards.
pub(crate) fn triangulate(
    points: &[Point],
    segments: &[[usize; 2]],
) -> Result<(Vec<[usize; 3]>, HashSet<Edge>)> {
    if points.len() < 3 {
        return Err(Error::Triangulation(
            "fewer than 3 non-collinear points".into(),
        ));
    }
    if let Some(i) = points
        .iter()
        .position(|p| !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(Error::Triangulation(format!("point {i} is not finite")));
    }
    let norm = Normalizer::from_points(points.iter());
    let local: Vec<Point> = points.iter().map(|&p| norm.apply(p)).collect();

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut handles: Vec<FixedVertexHandle> = Vec::with_capacity(points.len());
    for (i, p) in local.iter().enumerate() {
        let h = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::Triangulation(format!("point {i}: {e:?}")))?;
        if h.index() != i {
            return Err(Error::Triangulation(format!(
                "duplicate points {} and {i}",
                h.index()
            )));
        }
        handles.push(h);
    }
    if cdt.num_inner_faces() == 0 {
        return Err(Error::Triangulation(
            "fewer than 3 non-collinear points".into(),
        ));
    }

    for (s, &[a, b]) in segments.iter().enumerate() {
        if a >= points.len() || b >= points.len() {
            return Err(Error::Triangulation(format!(
                "segment {s} references a missing point"
            )));
        }
        if a == b {
            return Err(Error::Triangulation(format!("segment {s} is degenerate")));
        }
        if !cdt.can_add_constraint(handles[a], handles[b]) {
            return Err(Error::Triangulation(format!(
                "segment {s} ({a}, {b}) crosses another constraint"
            )));
        }
        cdt.add_constraint(handles[a], handles[b]);
    }

    let constrained: HashSet<Edge> = cdt
        .undirected_edges()
        .filter(|e| e.is_constraint_edge())
        .map(|e| {
            let [u, v] = e.vertices();
            key(u.fix().index(), v.fix().index())
        })
        .collect();

    let mut triangles: Vec<[usize; 3]> = cdt
        .inner_faces()
        .map(|f| {
            let [a, b, c] = f.vertices().map(|v| v.fix().index());
            if orient(local[a], local[b], local[c]) < 0.0 {
                [a, c, b]
            } else {
                [a, b, c]
            }
        })
        .collect();

    break_cocircular_ties(&local, &mut triangles, &constrained);
    Ok((triangles, constrained))
}

/// Flips every unconstrained diagonal of a cocircular convex quad onto the
/// quad's lowest-index vertex. Each flip lowers the multiset of edge minimum
/// endpoints, so the loop terminates.
fn break_cocircular_ties(pts: &[Point], tris: &mut [[usize; 3]], constrained: &HashSet<Edge>) {
    let mut owners: HashMap<Edge, Vec<usize>> = HashMap::with_capacity(tris.len() * 3 / 2 + 8);
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            owners
                .entry(key(tri[k], tri[(k + 1) % 3]))
                .or_default()
                .push(t);
        }
    }
    let mut queue: VecDeque<Edge> = owners
        .iter()
        .filter(|(_, o)| o.len() == 2)
        .map(|(&e, _)| e)
        .collect();
    // deterministic processing order
    queue.make_contiguous().sort_unstable();

    while let Some(e) = queue.pop_front() {
        if constrained.contains(&e) {
            continue;
        }
        let (t1, t2) = match owners.get(&e).map(Vec::as_slice) {
            Some(&[t1, t2]) => (t1, t2),
            _ => continue,
        };
        // orient t1 as (u, v, a) and t2 as (v, u, b)
        let (u, v, a) = rotate_to_edge(tris[t1], e.0, e.1);
        let (_, _, b) = rotate_to_edge(tris[t2], v, u);
        let m = u.min(v).min(a).min(b);
        if m == u || m == v {
            continue;
        }
        if incircle(pts[u], pts[v], pts[a], pts[b]).abs() > PREDICATE_EPS {
            continue;
        }
        // strictly convex quad u, b, v, a
        if orient(pts[a], pts[b], pts[u]) >= -PREDICATE_EPS
            || orient(pts[a], pts[b], pts[v]) <= PREDICATE_EPS
        {
            continue;
        }
        tris[t1] = [u, b, a];
        tris[t2] = [b, v, a];
        owners.remove(&e);
        owners.insert(key(a, b), vec![t1, t2]);
        replace_owner(&mut owners, key(u, b), t2, t1);
        replace_owner(&mut owners, key(v, a), t1, t2);
        for edge in [key(u, b), key(b, v), key(v, a), key(a, u)] {
            queue.push_back(edge);
        }
    }
}

fn rotate_to_edge(t: [usize; 3], u: usize, v: usize) -> (usize, usize, usize) {
    for k in 0..3 {
        if t[k] == u && t[(k + 1) % 3] == v {
            return (u, v, t[(k + 2) % 3]);
        }
        if t[k] == v && t[(k + 1) % 3] == u {
            return (v, u, t[(k + 2) % 3]);
        }
    }
    unreachable!("edge ({u}, {v}) not in triangle {t:?}")
}

fn replace_owner(owners: &mut HashMap<Edge, Vec<usize>>, e: Edge, from: usize, to: usize) {
    if let Some(o) = owners.get_mut(&e) {
        for t in o.iter_mut() {
            if *t == from {
                *t = to;
            }
        }
    }
}
