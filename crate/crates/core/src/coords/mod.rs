//! Reduced coordinates: discrete harmonic measures of every mesh vertex with
//! respect to a partition of the domain boundary.

mod laplace;
mod partition;

use std::fmt::Write as _;

pub use laplace::{cotangent_weights, LaplaceSystem};
pub use partition::{partition_boundary, BasisKind, BoundaryPartition, Breakpoint};

use crate::error::{Error, Result};
use crate::geometry::TriMesh;

/// Lower clamp applied to interior coordinates before renormalization.
pub const CLAMP_FLOOR: f64 = 1e-12;

/// Relative residual above which a column solve is reported as failed.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

/// Raw solver statistics, measured before clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    /// Smallest interior coordinate.
    pub min_entry: f64,
    /// Largest interior deviation of a row sum from one.
    pub max_row_error: f64,
    /// Largest relative residual over all columns.
    pub max_residual: f64,
}

/// `k × n` matrix of coordinates, one row per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateField {
    k: usize,
    n: usize,
    values: Vec<f64>,
    basis: BasisKind,
    clamp: f64,
    diagnostics: Option<SolveDiagnostics>,
}

impl CoordinateField {
    /// Wraps row-major values; every entry must be finite and nonnegative.
    pub fn from_values(k: usize, n: usize, values: Vec<f64>, basis: BasisKind) -> Result<Self> {
        if values.len() != k * n {
            return Err(Error::Rows(format!(
                "{} values for a {k} x {n} field",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Rows(format!(
                "entry ({}, {}) = {} is not a finite nonnegative number",
                i / n,
                i % n,
                values[i]
            )));
        }
        Ok(CoordinateField {
            k,
            n,
            values,
            basis,
            clamp: CLAMP_FLOOR,
            diagnostics: None,
        })
    }

    /// Number of rows (mesh vertices).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of columns (boundary segments).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn clamp(&self) -> f64 {
        self.clamp
    }

    pub fn diagnostics(&self) -> Option<&SolveDiagnostics> {
        self.diagnostics.as_ref()
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.values[v * self.n..(v + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cache file text: header `coords k n basis`, then one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24 + 32);
        let _ = writeln!(out, "coords {} {} {}", self.k, self.n, self.basis);
        for row in self.rows() {
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{x:?}");
            }
            out.push('\n');
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
            .ok_or_else(|| Error::parse(1, "empty coordinate file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (k, n, basis) = match parts.as_slice() {
            ["coords", k, n, b] => (
                k.parse::<usize>()
                    .map_err(|e| Error::parse(1, format!("bad k: {e}")))?,
                n.parse::<usize>()
                    .map_err(|e| Error::parse(1, format!("bad n: {e}")))?,
                b.parse::<BasisKind>()
                    .map_err(|e| Error::parse(1, e.to_string()))?,
            ),
            _ => return Err(Error::parse(1, "expected `coords k n basis`")),
        };
        if n == 0 {
            return Err(Error::parse(1, "n must be positive"));
        }
        let mut values = Vec::with_capacity(k * n);
        for _ in 0..k {
            let (i, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("expected {k} rows")))?;
            let start = values.len();
            for tok in line.split_whitespace() {
                let x: f64 = tok
                    .parse()
                    .map_err(|e| Error::parse(i + 1, format!("bad value `{tok}`: {e}")))?;
                values.push(x);
            }
            if values.len() - start != n {
                return Err(Error::parse(i + 1, format!("expected {n} values per row")));
            }
        }
        if let Some((i, _)) = lines.next() {
            return Err(Error::parse(i + 1, "trailing content after the last row"));
        }
        Self::from_values(k, n, values, basis)
    }
}

/// Solves one Dirichlet problem per boundary vector against the shared
/// factorization. Returns vertex-indexed columns (boundary entries copied
/// from the input) and the largest relative residual.
pub fn solve_columns(system: &LaplaceSystem, basis: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
    let rhs: Vec<Vec<f64>> = basis.iter().map(|b| system.rhs(b)).collect();
    let sols = system.solve_many(&rhs);
    let mut worst: f64 = 0.0;
    let mut columns = Vec::with_capacity(basis.len());
    for (j, (x, b)) in sols.iter().zip(&rhs).enumerate() {
        let ax = system.apply(x);
        let num = ax
            .iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        let den = b.iter().map(|q| q * q).sum::<f64>().sqrt();
        let residual = if den > 0.0 { num / den } else { num };
        if !(residual <= RESIDUAL_LIMIT) {
            return Err(Error::Numerical {
                column: j,
                residual,
            });
        }
        worst = worst.max(residual);
        let mut col = basis[j].clone();
        for (i, &xi) in x.iter().enumerate() {
            col[system.vertex_of(i)] = xi;
        }
        columns.push(col);
    }
    Ok((columns, worst))
}

/// Full coordinate field for the given boundary vectors: interior rows are
/// clamped below at `clamp` and renormalized, boundary rows are the basis
/// values themselves.
pub fn solve_coordinates(
    system: &LaplaceSystem,
    basis: &[Vec<f64>],
    kind: BasisKind,
    clamp: f64,
) -> Result<CoordinateField> {
    let n = basis.len();
    if n < 3 {
        return Err(Error::Partition(format!(
            "need at least 3 segments, got {n}"
        )));
    }
    let k = basis[0].len();
    let (columns, max_residual) = solve_columns(system, basis)?;

    let mut values = vec![0.0; k * n];
    for (j, col) in columns.iter().enumerate() {
        for (v, &x) in col.iter().enumerate() {
            values[v * n + j] = x;
        }
    }
    let mut min_entry = f64::INFINITY;
    let mut max_row_error: f64 = 0.0;
    for i in 0..system.len() {
        let row = &mut values[system.vertex_of(i) * n..][..n];
        let raw_sum: f64 = row.iter().sum();
        max_row_error = max_row_error.max((raw_sum - 1.0).abs());
        for x in row.iter_mut() {
            min_entry = min_entry.min(*x);
            *x = x.max(clamp);
        }
        let sum: f64 = row.iter().sum();
        for x in row.iter_mut() {
            *x /= sum;
        }
    }

    let mut field = CoordinateField::from_values(k, n, values, kind)?;
    field.clamp = clamp;
    field.diagnostics = Some(SolveDiagnostics {
        min_entry,
        max_row_error,
        max_residual,
    });
    Ok(field)
}

/// Assembles, factorizes and solves for the coordinates of `partition`.
pub fn compute_coordinates(
    mesh: &TriMesh,
    partition: &BoundaryPartition,
) -> Result<CoordinateField> {
    let system = LaplaceSystem::assemble(mesh)?;
    let basis = partition.basis_vectors(mesh);
    solve_coordinates(&system, &basis, partition.basis(), CLAMP_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_dense_mesh, load_domain, DomainSpec};

    fn l_shape() -> (DomainSpec, TriMesh) {
        let d = load_domain("outer 6\n0 0\n2 0\n2 1\n1 1\n1 2\n0 2\n").unwrap();
        let m = generate_dense_mesh(&d, 0.1).unwrap();
        (d, m)
    }

    #[test]
    fn constant_boundary_data_extends_to_constant() {
        let (d, m) = l_shape();
        let p = partition_boundary(&m, &d, f64::INFINITY, BasisKind::Box).unwrap();
        let sys = LaplaceSystem::assemble(&m).unwrap();
        let ones: Vec<f64> = (0..m.num_vertices())
            .map(|v| if m.is_boundary(v) { 1.0 } else { 0.0 })
            .collect();
        let (cols, _) = solve_columns(&sys, &vec![ones; p.len()]).unwrap();
        for col in cols {
            assert!(col.iter().all(|x| (x - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn box_coordinates_partition_unity() {
        let (d, m) = l_shape();
        let p = partition_boundary(&m, &d, 0.5, BasisKind::Box).unwrap();
        let c = compute_coordinates(&m, &p).unwrap();
        assert_eq!((c.k(), c.n()), (m.num_vertices(), p.len()));
        let diag = c.diagnostics().unwrap();
        assert!(diag.min_entry >= -1e-12, "{diag:?}");
        assert!(diag.max_row_error < 1e-9, "{diag:?}");
        for row in c.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
        let b = p.basis_vectors(&m);
        for v in 0..m.num_vertices() {
            if m.is_boundary(v) {
                for j in 0..c.n() {
                    assert_eq!(c.row(v)[j], b[j][v]);
                }
            } else {
                assert!(c.row(v).iter().all(|&x| x > 0.0));
            }
        }
    }

    #[test]
    fn other_bases_also_sum_to_one() {
        let (d, m) = l_shape();
        for kind in [BasisKind::Tent, BasisKind::Gaussian] {
            let p = partition_boundary(&m, &d, 1.0, kind).unwrap();
            let c = compute_coordinates(&m, &p).unwrap();
            assert!(c.diagnostics().unwrap().max_row_error < 1e-9);
            assert_eq!(c.basis(), kind);
        }
    }

    #[test]
    fn cache_roundtrip_is_exact() {
        let (d, m) = l_shape();
        let p = partition_boundary(&m, &d, 1.0, BasisKind::Box).unwrap();
        let c = compute_coordinates(&m, &p).unwrap();
        let text = c.to_text();
        assert!(text.starts_with(&format!("coords {} {} box\n", c.k(), c.n())));
        let back = CoordinateField::from_text(&text).unwrap();
        assert_eq!(back.values(), c.values());
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn malformed_cache_is_rejected() {
        assert!(CoordinateField::from_text("").is_err());
        assert!(CoordinateField::from_text("coords 1 2 box\n0.5\n").is_err());
        assert!(CoordinateField::from_text("coords 1 2 hat\n0.5 0.5\n").is_err());
        assert!(CoordinateField::from_text("coords 1 2 box\n0.5 -0.5\n").is_err());
        assert!(CoordinateField::from_text("coords 1 2 box\n0.5 0.5\n1 0\n").is_err());
        let ok = CoordinateField::from_text("coords 1 2 box\n0.5 0.5\n").unwrap();
        assert_eq!(ok.row(0), &[0.5, 0.5]);
    }
}
