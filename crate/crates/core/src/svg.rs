//! Minimal SVG figures: mesh, distance-field shading, site graphs, paths and
//! markers, drawn in the order the layer methods are called.

use std::fmt::Write as _;

use crate::geometry::{Point, TriMesh};
use crate::routing::{EdgeTag, SiteGraph};

pub const MESH_GRAY: &str = "#b0b0b0";
pub const DELAUNAY_BLACK: &str = "#000000";
pub const AUGMENTED_RED: &str = "#d62728";
pub const BREAKPOINT_BLUE: &str = "#1f5fd6";
pub const TARGET_RED: &str = "#e00000";
pub const SOURCE_GREEN: &str = "#1a9e3a";

const COLORMAP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Colour for `t` in `[0, 1]` (clamped) on a five-stop perceptual ramp.
pub fn colormap(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        1.0
    };
    let x = t * (COLORMAP.len() - 1) as f64;
    let i = (x.floor() as usize).min(COLORMAP.len() - 2);
    let w = x - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (COLORMAP[i][k] * (1.0 - w) + COLORMAP[i + 1][k] * w).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// An SVG canvas fitted to a mesh's bounding box with y pointing up.
#[derive(Debug, Clone)]
pub struct Figure {
    min: Point,
    scale: f64,
    width: f64,
    height: f64,
    body: String,
}

impl Figure {
    /// Canvas about `size` pixels across its longer side.
    pub fn new(mesh: &TriMesh, size: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let margin = 0.03 * span;
        let min = [lo[0] - margin, lo[1] - margin];
        let scale = size / (span + 2.0 * margin);
        Figure {
            min,
            scale,
            width: (hi[0] - lo[0] + 2.0 * margin) * scale,
            height: (hi[1] - lo[1] + 2.0 * margin) * scale,
            body: String::new(),
        }
    }

    fn xy(&self, p: Point) -> (f64, f64) {
        (
            (p[0] - self.min[0]) * self.scale,
            self.height - (p[1] - self.min[1]) * self.scale,
        )
    }

    fn line(&mut self, a: Point, b: Point, color: &str, width: f64) {
        let ((x1, y1), (x2, y2)) = (self.xy(a), self.xy(b));
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{width}"/>"#
        );
    }

    /// Fills each triangle with the mean of its vertex values, normalised
    /// linearly to the finite range of `values`.
    pub fn field(&mut self, mesh: &TriMesh, values: &[f64]) -> &mut Self {
        let finite = values.iter().copied().filter(|v| v.is_finite());
        let lo = finite.clone().fold(f64::INFINITY, f64::min);
        let hi = finite.fold(f64::NEG_INFINITY, f64::max);
        let range = if hi > lo { hi - lo } else { 1.0 };
        self.body.push_str("<g stroke=\"none\">\n");
        for t in mesh.triangles() {
            let mean = t.iter().map(|&v| values[v]).sum::<f64>() / 3.0;
            let pts: Vec<String> = t
                .iter()
                .map(|&v| {
                    let (x, y) = self.xy(mesh.vertices()[v]);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                self.body,
                r#"<polygon points="{}" fill="{}"/>"#,
                pts.join(" "),
                colormap((mean - lo) / range)
            );
        }
        self.body.push_str("</g>\n");
        self
    }

    /// Thin gray mesh edges.
    pub fn mesh(&mut self, mesh: &TriMesh) -> &mut Self {
        for (a, b) in mesh.edges() {
            self.line(mesh.vertices()[a], mesh.vertices()[b], MESH_GRAY, 0.4);
        }
        self
    }

    /// Site graph: Delaunay edges black, augmented edges red, sites as dots.
    pub fn site_graph(&mut self, graph: &SiteGraph) -> &mut Self {
        let pos = graph.sites().positions();
        for &(a, b, tag) in graph.edges() {
            let color = match tag {
                EdgeTag::Delaunay => DELAUNAY_BLACK,
                EdgeTag::Augmented => AUGMENTED_RED,
            };
            self.line(pos[a], pos[b], color, 1.0);
        }
        for &p in pos {
            self.dot(p, 2.0, DELAUNAY_BLACK);
        }
        self
    }

    /// Polyline through mesh vertices, thick black.
    pub fn path(&mut self, mesh: &TriMesh, vertices: &[usize]) -> &mut Self {
        let pts: Vec<String> = vertices
            .iter()
            .map(|&v| {
                let (x, y) = self.xy(mesh.vertices()[v]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{DELAUNAY_BLACK}" stroke-width="2.5" stroke-linejoin="round"/>"#,
            pts.join(" ")
        );
        self
    }

    /// Filled circle of radius `r` pixels.
    pub fn dot(&mut self, p: Point, r: f64, color: &str) -> &mut Self {
        let (x, y) = self.xy(p);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{color}"/>"#
        );
        self
    }

    pub fn finish(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_dense_mesh, load_domain};

    #[test]
    fn colormap_ends_and_clamping() {
        assert_eq!(colormap(0.0), "#440154");
        assert_eq!(colormap(1.0), "#fde725");
        assert_eq!(colormap(-3.0), colormap(0.0));
        assert_eq!(colormap(f64::NAN), colormap(1.0));
    }

    #[test]
    fn layers_appear_in_order() {
        let d = load_domain("outer 4\n0 0\n2 0\n2 1\n0 1\n").unwrap();
        let mesh = generate_dense_mesh(&d, 0.25).unwrap();
        let values: Vec<f64> = mesh.vertices().iter().map(|p| p[0]).collect();
        let mut fig = Figure::new(&mesh, 400.0);
        fig.field(&mesh, &values)
            .mesh(&mesh)
            .path(&mesh, &[0, 1, 2])
            .dot(mesh.vertices()[0], 4.0, TARGET_RED);
        let svg = fig.finish();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains(r#"width="400""#));
        let (poly, line, path, dot) = (
            svg.find("<polygon").unwrap(),
            svg.find("<line").unwrap(),
            svg.find("<polyline").unwrap(),
            svg.find("<circle").unwrap(),
        );
        assert!(poly < line && line < path && path < dot);
        assert_eq!(svg.matches("<polygon").count(), mesh.triangles().len());
        assert_eq!(svg, fig.finish());
    }
}
