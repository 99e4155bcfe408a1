use std::fmt::Write as _;

use super::{
    dist, point_in_polygon, point_segment_distance, segments_intersect, signed_area, Normalizer,
    Point, PREDICATE_EPS,
};
use crate::error::{Error, Result};

/// A polygonal domain: one CCW outer loop and any number of CW holes.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    outer: Vec<Point>,
    holes: Vec<Vec<Point>>,
}

impl DomainSpec {
    /// Validates the loops and fixes their orientation.
    pub fn new(outer: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self> {
        let mut domain = DomainSpec { outer, holes };
        domain.validate()?;
        if signed_area(&domain.outer) < 0.0 {
            domain.outer.reverse();
        }
        for hole in &mut domain.holes {
            if signed_area(hole) > 0.0 {
                hole.reverse();
            }
        }
        Ok(domain)
    }

    pub fn outer(&self) -> &[Point] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    /// Outer loop first, then holes in file order.
    pub fn loops(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    pub fn area(&self) -> f64 {
        self.loops().map(signed_area).sum()
    }

    /// Diagonal of the bounding box.
    pub fn diameter(&self) -> f64 {
        let (w, h) = bbox_extent(&self.outer);
        w.hypot(h)
    }

    pub fn normalizer(&self) -> Normalizer {
        Normalizer::from_points(self.outer.iter())
    }

    /// Strictly-inside test (outer interior minus hole interiors).
    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, &self.outer) && !self.holes.iter().any(|h| point_in_polygon(p, h))
    }

    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.loops()
            .flat_map(|l| {
                (0..l.len()).map(move |i| point_segment_distance(p, l[i], l[(i + 1) % l.len()]))
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut emit = |tag: &str, l: &[Point]| {
            let _ = writeln!(out, "{tag} {}", l.len());
            for p in l {
                let _ = writeln!(out, "{:?} {:?}", p[0], p[1]);
            }
        };
        emit("outer", &self.outer);
        for h in &self.holes {
            emit("hole", h);
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let norm = self.normalizer();
        let outer: Vec<Point> = self.outer.iter().map(|&p| norm.apply(p)).collect();
        let holes: Vec<Vec<Point>> = self
            .holes
            .iter()
            .map(|h| h.iter().map(|&p| norm.apply(p)).collect())
            .collect();
        check_simple(&outer, "outer loop")?;
        for (i, h) in holes.iter().enumerate() {
            check_simple(h, &format!("hole {i}"))?;
            for &p in h {
                let on_outer = (0..outer.len()).any(|k| {
                    point_segment_distance(p, outer[k], outer[(k + 1) % outer.len()])
                        <= PREDICATE_EPS
                });
                if on_outer || !point_in_polygon(p, &outer) {
                    return Err(Error::Topology(format!(
                        "hole {i} vertex ({}, {}) is not strictly inside the outer loop",
                        norm.invert(p)[0],
                        norm.invert(p)[1]
                    )));
                }
            }
            if loops_cross(h, &outer) {
                return Err(Error::Topology(format!("hole {i} crosses the outer loop")));
            }
            for (j, g) in holes.iter().enumerate().take(i) {
                if loops_cross(h, g)
                    || h.iter().any(|&p| point_in_polygon(p, g))
                    || g.iter().any(|&p| point_in_polygon(p, h))
                {
                    return Err(Error::Topology(format!("holes {j} and {i} overlap")));
                }
            }
        }
        Ok(())
    }
}

fn bbox_extent(poly: &[Point]) -> (f64, f64) {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi[0] - lo[0], hi[1] - lo[1])
}

fn check_simple(poly: &[Point], what: &str) -> Result<()> {
    let n = poly.len();
    if n < 3 {
        return Err(Error::Topology(format!("{what} has fewer than 3 vertices")));
    }
    if poly.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Topology(format!(
            "{what} has a non-finite coordinate"
        )));
    }
    for i in 0..n {
        if dist(poly[i], poly[(i + 1) % n]) <= PREDICATE_EPS {
            return Err(Error::Topology(format!(
                "{what} has a zero-length edge at vertex {i}"
            )));
        }
    }
    if signed_area(poly).abs() <= PREDICATE_EPS {
        return Err(Error::Topology(format!("{what} has zero area")));
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // shared vertex only; a fold-back puts the far endpoint on the other edge
                let (far_ab, far_cd) = if j == i + 1 { (a, d) } else { (b, c) };
                if point_segment_distance(far_cd, a, b) <= PREDICATE_EPS
                    || point_segment_distance(far_ab, c, d) <= PREDICATE_EPS
                {
                    return Err(Error::Topology(format!(
                        "{what} folds back on itself at edges {i} and {j}"
                    )));
                }
            } else if segments_intersect(a, b, c, d, PREDICATE_EPS) {
                return Err(Error::Topology(format!(
                    "{what} self-intersects at edges {i} and {j}"
                )));
            }
        }
    }
    Ok(())
}

fn loops_cross(p: &[Point], q: &[Point]) -> bool {
    (0..p.len()).any(|i| {
        let (a, b) = (p[i], p[(i + 1) % p.len()]);
        (0..q.len()).any(|j| segments_intersect(a, b, q[j], q[(j + 1) % q.len()], PREDICATE_EPS))
    })
}

/// Parses a domain file: `outer n` followed by `n` lines `x y`, then zero or
/// more `hole n` blocks. Blank lines and `#` comments are ignored.
pub fn load_domain(text: &str) -> Result<DomainSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut outer: Option<Vec<Point>> = None;
    let mut holes = Vec::new();
    while let Some((lineno, line)) = lines.next() {
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap_or_default();
        let count: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(lineno, format!("expected `{tag} <count>`")))?;
        if parts.next().is_some() {
            return Err(Error::parse(lineno, "trailing tokens after loop header"));
        }
        let mut pts = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| Error::parse(lineno, "unexpected end of file inside loop"))?;
            pts.push(parse_point(ln, l)?);
        }
        match tag {
            "outer" if outer.is_none() => outer = Some(pts),
            "outer" => return Err(Error::parse(lineno, "more than one outer loop")),
            "hole" if outer.is_some() => holes.push(pts),
            "hole" => return Err(Error::parse(lineno, "hole before outer loop")),
            other => return Err(Error::parse(lineno, format!("unknown block `{other}`"))),
        }
    }
    let outer = outer.ok_or_else(|| Error::parse(0, "missing outer loop"))?;
    DomainSpec::new(outer, holes)
}

fn parse_point(lineno: usize, line: &str) -> Result<Point> {
    let v: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::parse(lineno, format!("bad coordinate: {e}")))?;
    match v.as_slice() {
        [x, y] if x.is_finite() && y.is_finite() => Ok([*x, *y]),
        [_, _] => Err(Error::parse(lineno, "non-finite coordinate")),
        _ => Err(Error::parse(lineno, "expected two coordinates")),
    }
}
