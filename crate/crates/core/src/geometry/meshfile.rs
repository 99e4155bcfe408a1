use std::fmt::Write as _;

use super::{Point, TriMesh};
use crate::error::{Error, Result};

impl TriMesh {
    /// Mesh file text: `vertices k` + `x y b` lines, `triangles f` + `i j k`
    /// lines, then one `loop n` block of vertex indices per boundary loop.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.num_vertices() * 48);
        let _ = writeln!(out, "vertices {}", self.num_vertices());
        for (v, p) in self.vertices().iter().enumerate() {
            let _ = writeln!(
                out,
                "{:?} {:?} {}",
                p[0],
                p[1],
                u8::from(self.is_boundary(v))
            );
        }
        let _ = writeln!(out, "triangles {}", self.triangles().len());
        for t in self.triangles() {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        for l in self.boundary_loops() {
            let _ = writeln!(out, "loop {}", l.len());
            for v in l {
                let _ = writeln!(out, "{v}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, l) = next_line(&mut lines)?;
        let k = count_of(ln, l, "vertices")?;

        let mut vertices: Vec<Point> = Vec::with_capacity(k);
        let mut flags = Vec::with_capacity(k);
        for _ in 0..k {
            let (ln, l) = next_line(&mut lines)?;
            let tok: Vec<&str> = l.split_whitespace().collect();
            let [x, y, b] = tok[..] else {
                return Err(Error::parse(ln, "expected `x y b`"));
            };
            let x: f64 = x
                .parse()
                .map_err(|e| Error::parse(ln, format!("bad x: {e}")))?;
            let y: f64 = y
                .parse()
                .map_err(|e| Error::parse(ln, format!("bad y: {e}")))?;
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::parse(ln, "non-finite coordinate"));
            }
            flags.push(match b {
                "0" => false,
                "1" => true,
                _ => return Err(Error::parse(ln, "boundary flag must be 0 or 1")),
            });
            vertices.push([x, y]);
        }

        let (ln, l) = next_line(&mut lines)?;
        let f = count_of(ln, l, "triangles")?;
        let mut triangles = Vec::with_capacity(f);
        for _ in 0..f {
            let (ln, l) = next_line(&mut lines)?;
            let idx = indices(ln, l, k)?;
            let [a, b, c] = idx[..] else {
                return Err(Error::parse(ln, "expected `i j k`"));
            };
            triangles.push([a, b, c]);
        }

        let mut loops = Vec::new();
        while let Some((ln, l)) = lines.next() {
            let n = count_of(ln, l, "loop")?;
            let mut lp = Vec::with_capacity(n);
            for _ in 0..n {
                let (ln, l) = next_line(&mut lines)?;
                match indices(ln, l, k)?[..] {
                    [v] => lp.push(v),
                    _ => return Err(Error::parse(ln, "expected one vertex index")),
                }
            }
            loops.push(lp);
        }

        let mesh = TriMesh::with_loops(vertices, triangles, loops)?;
        if let Some(v) = (0..k).find(|&v| flags[v] != mesh.is_boundary(v)) {
            return Err(Error::Mesh(format!(
                "boundary flag of vertex {v} disagrees with the boundary loops"
            )));
        }
        Ok(mesh)
    }
}

fn next_line<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<(usize, &'a str)> {
    lines
        .next()
        .ok_or_else(|| Error::parse(0, "unexpected end of mesh file"))
}

fn count_of(ln: usize, line: &str, tag: &str) -> Result<usize> {
    match line.split_whitespace().collect::<Vec<_>>()[..] {
        [t, n] if t == tag => n
            .parse()
            .map_err(|e| Error::parse(ln, format!("bad count: {e}"))),
        _ => Err(Error::parse(ln, format!("expected `{tag} <count>`"))),
    }
}

fn indices(ln: usize, line: &str, k: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            let v: usize = t
                .parse()
                .map_err(|e| Error::parse(ln, format!("bad index `{t}`: {e}")))?;
            if v >= k {
                return Err(Error::parse(ln, format!("index {v} out of range")));
            }
            Ok(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_dense_mesh, load_domain};

    #[test]
    fn roundtrip_with_hole() {
        let d = load_domain("outer 4\n0 0\n1 0\n1 1\n0 1\nhole 3\n0.3 0.3\n0.6 0.3\n0.3 0.6\n")
            .unwrap();
        let m = generate_dense_mesh(&d, 0.1).unwrap();
        let text = m.to_text();
        let back = TriMesh::from_text(&text).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_loops(), m.boundary_loops());
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn malformed_files() {
        let ok = "vertices 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 1 2\nloop 3\n0\n1\n2\n";
        assert!(TriMesh::from_text(ok).is_ok());
        let bad_flag = ok.replace("0 1 1\n", "0 1 0\n");
        assert!(matches!(TriMesh::from_text(&bad_flag), Err(Error::Mesh(_))));
        let bad_index = ok.replace("0 1 2\n", "0 1 7\n");
        assert!(matches!(
            TriMesh::from_text(&bad_index),
            Err(Error::Parse { line: 6, .. })
        ));
        let bad_loop = ok.replace("loop 3\n0\n1\n2\n", "loop 3\n0\n2\n1\n");
        assert!(TriMesh::from_text(&bad_loop).is_err());
        assert!(TriMesh::from_text("vertices 1\n0 0\n").is_err());
        assert!(TriMesh::from_text("").is_err());
    }
}
