use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::linalg::LltError;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::geometry::{cross, dot, sub, TriMesh};

/// Cotangent stiffness matrix restricted to the interior vertices, with its
/// Cholesky factorization.
///
/// `A[i][i]` is the sum of all edge weights at interior vertex `i`, and
/// `A[i][j] = -w_ij` for interior neighbours. Couplings to boundary vertices
/// are kept apart and moved to the right-hand side at solve time.
#[derive(Debug)]
pub struct LaplaceSystem {
    unknown: Vec<Option<usize>>,
    vertex: Vec<usize>,
    weights: Vec<((usize, usize), f64)>,
    diag: Vec<f64>,
    off: Vec<Vec<(usize, f64)>>,
    coupling: Vec<Vec<(usize, f64)>>,
    llt: Llt<usize, f64>,
}

/// Cotangent weight `(cot α + cot β) / 2` for every mesh edge, sorted by
/// edge. Boundary edges get a single cotangent.
pub fn cotangent_weights(mesh: &TriMesh) -> Vec<((usize, usize), f64)> {
    let pts = mesh.vertices();
    let mut w: Vec<((usize, usize), f64)> = Vec::with_capacity(mesh.triangles().len() * 3);
    for t in mesh.triangles() {
        for k in 0..3 {
            let (c, a, b) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let (u, v) = (sub(pts[a], pts[c]), sub(pts[b], pts[c]));
            let cot = dot(u, v) / cross(u, v);
            w.push(((a.min(b), a.max(b)), 0.5 * cot));
        }
    }
    w.sort_unstable_by_key(|x| x.0);
    let mut merged: Vec<((usize, usize), f64)> = Vec::with_capacity(w.len() / 2 + 1);
    for (e, x) in w {
        match merged.last_mut() {
            Some((last, acc)) if *last == e => *acc += x,
            _ => merged.push((e, x)),
        }
    }
    merged
}

impl LaplaceSystem {
    /// Assembles the cotangent system and factorizes it once.
    pub fn assemble(mesh: &TriMesh) -> Result<Self> {
        let k = mesh.num_vertices();
        let mut unknown = vec![None; k];
        let mut vertex = Vec::new();
        for v in mesh.interior_vertices() {
            unknown[v] = Some(vertex.len());
            vertex.push(v);
        }
        let m = vertex.len();
        if m == 0 {
            return Err(Error::Mesh("mesh has no interior vertices".into()));
        }

        let weights = cotangent_weights(mesh);
        let mut diag = vec![0.0; m];
        let mut off = vec![Vec::new(); m];
        let mut coupling = vec![Vec::new(); m];
        for &((a, b), w) in &weights {
            match (unknown[a], unknown[b]) {
                (Some(i), Some(j)) => {
                    diag[i] += w;
                    diag[j] += w;
                    off[i].push((j, -w));
                    off[j].push((i, -w));
                }
                (Some(i), None) => {
                    diag[i] += w;
                    coupling[i].push((b, w));
                }
                (None, Some(j)) => {
                    diag[j] += w;
                    coupling[j].push((a, w));
                }
                (None, None) => {}
            }
        }

        let mut triplets = Vec::with_capacity(m + weights.len());
        for i in 0..m {
            triplets.push(Triplet::new(i, i, diag[i]));
            for &(j, x) in &off[i] {
                if j > i {
                    triplets.push(Triplet::new(j, i, x));
                }
            }
        }
        let lower = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &triplets)
            .map_err(|e| Error::Mesh(format!("sparse assembly failed: {e:?}")))?;
        let llt = lower.sp_cholesky(Side::Lower).map_err(|e| match e {
            LltError::Numeric(
                faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index },
            ) => Error::NotPositiveDefinite { pivot: index },
            other => Error::Mesh(format!("factorization failed: {other}")),
        })?;

        Ok(LaplaceSystem {
            unknown,
            vertex,
            weights,
            diag,
            off,
            coupling,
            llt,
        })
    }

    /// Number of interior unknowns.
    pub fn len(&self) -> usize {
        self.vertex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex.is_empty()
    }

    /// Unknown index of mesh vertex `v`, or `None` on the boundary.
    pub fn unknown_of(&self, v: usize) -> Option<usize> {
        self.unknown[v]
    }

    /// Mesh vertex of unknown `i`.
    pub fn vertex_of(&self, i: usize) -> usize {
        self.vertex[i]
    }

    /// All edge weights, sorted by `(lo, hi)` vertex pair.
    pub fn edge_weights(&self) -> &[((usize, usize), f64)] {
        &self.weights
    }

    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let e = (a.min(b), a.max(b));
        self.weights
            .binary_search_by(|x| x.0.cmp(&e))
            .ok()
            .map(|i| self.weights[i].1)
    }

    /// Matrix entry `A[i][j]` over unknowns.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.off[i]
            .iter()
            .find(|&&(c, _)| c == j)
            .map_or(0.0, |&(_, x)| x)
    }

    /// Total weight from unknown `i` to the boundary; equals the row sum of A.
    pub fn boundary_coupling(&self, i: usize) -> f64 {
        self.coupling[i].iter().map(|&(_, w)| w).sum()
    }

    /// `A x` computed from the assembled entries.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.diag[i] * x[i] + self.off[i].iter().map(|&(j, a)| a * x[j]).sum::<f64>())
            .collect()
    }

    /// Right-hand side for boundary data `g` indexed by mesh vertex.
    pub fn rhs(&self, g: &[f64]) -> Vec<f64> {
        self.coupling
            .iter()
            .map(|c| c.iter().map(|&(b, w)| w * g[b]).sum())
            .collect()
    }

    /// Solves `A x = rhs` with the stored factorization.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }

    /// Solves for several right-hand sides at once (columns of the result
    /// follow the input order).
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = self.len();
        let b = Mat::from_fn(m, rhs.len(), |i, j| rhs[j][i]);
        let x = self.llt.solve(&b);
        (0..rhs.len())
            .map(|j| (0..m).map(|i| x[(i, j)]).collect())
            .collect()
    }

    /// Harmonic extension of boundary data `g` (indexed by mesh vertex);
    /// interior values are filled in, boundary values kept.
    pub fn extend(&self, g: &[f64]) -> Vec<f64> {
        let x = self.solve(&self.rhs(g));
        let mut out = g.to_vec();
        for (i, &v) in self.vertex.iter().enumerate() {
            out[v] = x[i];
        }
        out
    }
}
