//! Planar domains, constrained Delaunay triangulation and dense meshing.

mod cdt;
mod domain;
mod mesh;
mod meshfile;

pub use cdt::constrained_delaunay;
pub use domain::{load_domain, DomainSpec};
pub use mesh::{
    generate_dense_mesh, generate_dense_mesh_with, point_location, MeshOptions, TriMesh,
};

/// A point in the plane.
pub type Point = [f64; 2];

/// Tolerance for the orientation and in-circle predicates, applied to
/// coordinates normalized to the unit bounding box.
pub const PREDICATE_EPS: f64 = 1e-12;

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

/// Twice the signed area of `abc`; positive when counter-clockwise.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// Positive when `d` lies strictly inside the circumcircle of the CCW
/// triangle `abc`.
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

/// Signed area of a closed polyline (shoelace); positive for CCW.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| cross(poly[i], poly[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

/// Even-odd ray test. Points exactly on an edge may land on either side.
pub fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Euclidean distance from `p` to the segment `ab`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Closed-segment intersection test, touching endpoints included.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point, eps: f64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    let proper = ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps));
    if proper {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o.abs() <= eps
            && r[0] >= p[0].min(q[0]) - eps
            && r[0] <= p[0].max(q[0]) + eps
            && r[1] >= p[1].min(q[1]) - eps
            && r[1] <= p[1].max(q[1]) + eps
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// Affine map of a point set onto its unit bounding box (aspect preserved).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    origin: Point,
    scale: f64,
}

impl Normalizer {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if !lo[0].is_finite() {
            return Normalizer {
                origin: [0.0, 0.0],
                scale: 1.0,
            };
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        Normalizer {
            origin: lo,
            scale: if extent > 0.0 { extent } else { 1.0 },
        }
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        [
            (p[0] - self.origin[0]) / self.scale,
            (p[1] - self.origin[1]) / self.scale,
        ]
    }

    #[inline]
    pub fn invert(&self, p: Point) -> Point {
        [
            p[0] * self.scale + self.origin[0],
            p[1] * self.scale + self.origin[1],
        ]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incircle_sign() {
        let (a, b, c) = ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert!(incircle(a, b, c, [0.5, 0.5]) > 0.0);
        assert!(incircle(a, b, c, [2.0, 2.0]) < 0.0);
        assert!(incircle(a, b, c, [1.0, 1.0]).abs() < 1e-15);
    }

    #[test]
    fn segment_intersection_cases() {
        let e = 1e-12;
        assert!(segments_intersect(
            [0.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [1.0, 0.0],
            e
        ));
        assert!(!segments_intersect(
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0],
            e
        ));
        // T-junction
        assert!(segments_intersect(
            [0.0, 0.0],
            [2.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            e
        ));
        // collinear, disjoint
        assert!(!segments_intersect(
            [0.0, 0.0],
            [1.0, 0.0],
            [2.0, 0.0],
            [3.0, 0.0],
            e
        ));
    }

    #[test]
    fn normalizer_roundtrip() {
        let pts = [[2.0, 3.0], [6.0, 5.0]];
        let n = Normalizer::from_points(&pts);
        assert_eq!(n.apply([2.0, 3.0]), [0.0, 0.0]);
        assert_eq!(n.apply([6.0, 5.0]), [1.0, 0.5]);
        assert_eq!(n.invert(n.apply([4.5, 4.25])), [4.5, 4.25]);
    }
}
