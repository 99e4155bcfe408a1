//! Closed-form harmonic measure on the unit disk.
//!
//! For `z` inside the disk the *antipode* `ψ(θ)` of a boundary angle `θ` is
//! the second intersection of the chord through `e^{iθ}` and `z` with the
//! circle. With `v = e^{iθ} − z` it is `ψ = arg(−v/v̄ · e^{−iθ})`, and the
//! harmonic measure of the arc `(θ_j, θ_{j+1})` seen from `z` is the length
//! of the antipodal arc divided by `2π`. Its gradient is
//! `i/(π(1−|z|²)) · (e^{iψ_{j+1}} − e^{iψ_j})`.
//!
//! Everything here serves as ground truth for the mesh solver and as the
//! numerical certificate that the reduced-divergence gradient never vanishes
//! away from the target.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::divergence::ConvexGenerator;
use crate::error::{Error, Result};

pub mod verify;

/// Points with `|z| ≥ 1 − DISK_GUARD` are rejected.
pub const DISK_GUARD: f64 = 1e-9;

/// A point strictly inside the unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if z.norm() < 1.0 - DISK_GUARD && z.re.is_finite() && z.im.is_finite() {
            Ok(DiskPoint(z))
        } else {
            Err(Error::Rows(format!(
                "{z} is not strictly inside the unit disk"
            )))
        }
    }

    pub fn from_xy(x: f64, y: f64) -> Result<Self> {
        Self::new(Complex64::new(x, y))
    }

    pub fn origin() -> Self {
        DiskPoint(Complex64::new(0.0, 0.0))
    }

    pub fn z(&self) -> Complex64 {
        self.0
    }
}

/// Increasing breakpoints `θ_1 < … < θ_n` in `(−π, π]`; arc `j` runs from
/// `θ_j` to `θ_{j+1}`, the last one wrapping to `θ_1 + 2π`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirclePartition {
    thetas: Vec<f64>,
}

impl CirclePartition {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if thetas.len() < 2 {
            return Err(Error::Partition("need at least two breakpoints".into()));
        }
        if thetas.iter().any(|&t| !(t > -PI && t <= PI)) {
            return Err(Error::Partition("breakpoints must lie in (-pi, pi]".into()));
        }
        if thetas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Partition(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(CirclePartition { thetas })
    }

    /// `θ_j = −π + 2πj/n`, `j = 1..n`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|j| -PI + TAU * j as f64 / n as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// Start and (unwrapped) end angle of arc `j`.
    pub fn arc(&self, j: usize) -> (f64, f64) {
        let n = self.thetas.len();
        let end = if j + 1 == n {
            self.thetas[0] + TAU
        } else {
            self.thetas[j + 1]
        };
        (self.thetas[j], end)
    }

    pub fn arc_length(&self, j: usize) -> f64 {
        let (a, b) = self.arc(j);
        b - a
    }

    /// Image of the partition under [`mobius_map`] with parameter `a`.
    ///
    /// Disk automorphisms keep the cyclic order, so the images are the old
    /// breakpoints rotated by some offset `r`: new arc `k` is the image of
    /// old arc `(k + r) mod n`. Returns the new partition and `r`.
    pub fn mobius_image(&self, a: DiskPoint) -> Result<(CirclePartition, usize)> {
        let mapped: Vec<f64> = self
            .thetas
            .iter()
            .map(|&t| wrap_angle(mobius_map(a, Complex64::from_polar(1.0, t)).arg()))
            .collect();
        let r = (0..mapped.len())
            .min_by(|&i, &j| mapped[i].total_cmp(&mapped[j]))
            .unwrap_or(0);
        let n = mapped.len();
        let rotated = (0..n).map(|k| mapped[(k + r) % n]).collect();
        Ok((CirclePartition::new(rotated)?, r))
    }
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_angle(t: f64) -> f64 {
    let w = (t + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Cyclic difference `b − a` mapped into `[0, 2π)`.
#[inline]
fn ccw_gap(a: f64, b: f64) -> f64 {
    (b - a).rem_euclid(TAU)
}

/// Poisson kernel `(1/2π) (1 − |z|²) / |z − e^{iθ}|²`.
pub fn poisson_kernel(z: DiskPoint, theta: f64) -> f64 {
    let z = z.0;
    (1.0 - z.norm_sqr()) / (z - Complex64::from_polar(1.0, theta)).norm_sqr() / TAU
}

/// Antipode of `θ` relative to `z`, in `(−π, π]`.
pub fn antipode(z: DiskPoint, theta: f64) -> f64 {
    let e = Complex64::from_polar(1.0, theta);
    let v = e - z.0;
    let w = -v / v.conj() * e.conj();
    wrap_angle(w.arg())
}

/// Harmonic measure of the arc from `a` counter-clockwise to `b`.
pub fn arc_measure(z: DiskPoint, a: f64, b: f64) -> f64 {
    let gap = ccw_gap(antipode(z, a), antipode(z, b));
    // a full-circle arc has coinciding antipodes
    if gap == 0.0 && ccw_gap(a, b) == 0.0 && a != b {
        1.0
    } else {
        gap / TAU
    }
}

/// Harmonic measure `φ_j(z)` of arc `j` (0-based).
pub fn harmonic_measure(z: DiskPoint, partition: &CirclePartition, j: usize) -> f64 {
    let (a, b) = partition.arc(j);
    arc_measure(z, a, b)
}

/// All `n` reduced coordinates of `z`.
pub fn harmonic_measures(z: DiskPoint, partition: &CirclePartition) -> Vec<f64> {
    let psi: Vec<f64> = partition.thetas().iter().map(|&t| antipode(z, t)).collect();
    let n = psi.len();
    (0..n)
        .map(|j| ccw_gap(psi[j], psi[(j + 1) % n]) / TAU)
        .collect()
}

/// `∇φ_j(z)` as a planar vector.
pub fn grad_harmonic_measure(z: DiskPoint, partition: &CirclePartition, j: usize) -> [f64; 2] {
    let (a, b) = partition.arc(j);
    let g = gradient_factor(z)
        * (Complex64::from_polar(1.0, antipode(z, b)) - Complex64::from_polar(1.0, antipode(z, a)));
    [g.re, g.im]
}

#[inline]
fn gradient_factor(z: DiskPoint) -> Complex64 {
    Complex64::new(0.0, 1.0 / (PI * (1.0 - z.0.norm_sqr())))
}

/// Reduced distance from `z` to the origin in the target-weighted form
/// `Σ_j φ_j(0) f(φ_j(z) / φ_j(0))`.
pub fn divergence_to_origin(z: DiskPoint, partition: &CirclePartition, f: &ConvexGenerator) -> f64 {
    let phi = harmonic_measures(z, partition);
    (0..partition.len())
        .map(|j| {
            let p0 = partition.arc_length(j) / TAU;
            p0 * f.f(phi[j] / p0)
        })
        .sum()
}

/// `∇ Σ_j φ_j(0) f(φ_j(z)/φ_j(0)) = Σ_j f′(φ_j(z)/φ_j(0)) ∇φ_j(z)`.
pub fn grad_divergence(z: DiskPoint, partition: &CirclePartition, f: &ConvexGenerator) -> [f64; 2] {
    let n = partition.len();
    let psi: Vec<Complex64> = partition
        .thetas()
        .iter()
        .map(|&t| Complex64::from_polar(1.0, antipode(z, t)))
        .collect();
    let phi = harmonic_measures(z, partition);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let p0 = partition.arc_length(j) / TAU;
        acc += f.df(phi[j] / p0) * (psi[(j + 1) % n] - psi[j]);
    }
    let g = gradient_factor(z) * acc;
    [g.re, g.im]
}

/// Disk automorphism `(z − a) / (1 − ā z)` sending `a` to the origin.
pub fn mobius_map(a: DiskPoint, z: Complex64) -> Complex64 {
    let a = a.0;
    (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z)
}

/// Adaptive Simpson integration to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Harmonic measure of the arc `(a, b)` by quadrature of the Poisson kernel;
/// an oracle independent of the antipode formula.
pub fn poisson_arc_integral(z: DiskPoint, a: f64, b: f64, tol: f64) -> f64 {
    // split into pieces so the kernel peak is always resolved
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + k as f64 * h;
            integrate(&|t| poisson_kernel(z, t), lo, lo + h, tol / pieces as f64)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64, y: f64) -> DiskPoint {
        DiskPoint::from_xy(x, y).unwrap()
    }

    #[test]
    fn kernel_values() {
        for &t in &[-3.0, -1.0, 0.0, 0.4, PI] {
            assert!((poisson_kernel(DiskPoint::origin(), t) - 1.0 / TAU).abs() < 1e-16);
        }
        assert!((poisson_kernel(c(0.5, 0.0), 0.0) - 3.0 / TAU).abs() < 1e-15);
    }

    #[test]
    fn kernel_integrates_to_one() {
        for z in [c(0.0, 0.0), c(0.3, -0.4), c(-0.9, 0.1), c(0.0, 0.95)] {
            let total = poisson_arc_integral(z, -PI, PI, 1e-13);
            assert!((total - 1.0).abs() < 1e-10, "{total}");
        }
    }

    #[test]
    fn antipode_examples() {
        assert!((antipode(DiskPoint::origin(), 0.3) - (0.3 - PI)).abs() < 1e-15);
        assert!(antipode(c(0.5, 0.0), PI).abs() < 1e-15);
        // chord from i through 0.5 meets the circle again at 0.8 - 0.6i
        let expected = (-0.6f64).atan2(0.8);
        assert!((antipode(c(0.5, 0.0), PI / 2.0) - expected).abs() < 1e-14);
        assert!((expected + 0.6435011087932844).abs() < 1e-15);
    }

    #[test]
    fn chord_product_identity() {
        let z = c(0.5, 0.0);
        let v = Complex64::from_polar(1.0, PI / 2.0) - z.z();
        let w = Complex64::from_polar(1.0, antipode(z, PI / 2.0)) - z.z();
        assert!((v.norm() * w.norm() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn uniform_partition_at_origin() {
        let p = CirclePartition::uniform(4).unwrap();
        for j in 0..4 {
            assert!((harmonic_measure(DiskPoint::origin(), &p, j) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn half_disk_measure_two_ways() {
        let z = c(0.5, 0.0);
        let by_antipode = arc_measure(z, -PI / 2.0, PI / 2.0);
        let by_quadrature = poisson_arc_integral(z, -PI / 2.0, PI / 2.0, 1e-13);
        assert!((by_antipode - by_quadrature).abs() < 1e-9);
        // reflex angle α subtended at z by ±i: (2α − π)/2π
        assert!((by_antipode - 0.7951672353008665).abs() < 1e-12);
    }

    #[test]
    fn partition_validation() {
        assert!(CirclePartition::new(vec![0.0]).is_err());
        assert!(CirclePartition::new(vec![0.5, 0.2]).is_err());
        assert!(CirclePartition::new(vec![-PI, 0.0]).is_err());
        assert!(CirclePartition::new(vec![0.0, PI]).is_ok());
        let u = CirclePartition::uniform(8).unwrap();
        let total: f64 = (0..8).map(|j| u.arc_length(j)).sum();
        assert!((total - TAU).abs() < 1e-14);
    }

    #[test]
    fn disk_point_guard() {
        assert!(DiskPoint::from_xy(1.0, 0.0).is_err());
        assert!(DiskPoint::from_xy(0.0, 1.0 - 1e-10).is_err());
        assert!(DiskPoint::from_xy(0.0, 0.999).is_ok());
    }

    #[test]
    fn gradient_at_origin_quarter_arc() {
        let p = CirclePartition::new(vec![0.0, PI / 2.0]).unwrap();
        let g = grad_harmonic_measure(DiskPoint::origin(), &p, 0);
        assert!((g[0] - 1.0 / PI).abs() < 1e-15);
        assert!((g[1] - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn divergence_gradient_vanishes_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(2..12);
            let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
            t.sort_by(f64::total_cmp);
            t.dedup();
            let Ok(p) = CirclePartition::new(t) else {
                continue;
            };
            for f in [ConvexGenerator::kl(), ConvexGenerator::hellinger()] {
                let g = grad_divergence(DiskPoint::origin(), &p, &f);
                assert!(g[0].hypot(g[1]) < 1e-13);
            }
        }
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(0.25) - 0.25).abs() < 1e-16);
    }

    #[test]
    fn mobius_basics() {
        let a = c(0.3, -0.2);
        assert!(mobius_map(a, a.z()).norm() < 1e-16);
        let z = Complex64::new(0.1, 0.7);
        assert_eq!(mobius_map(DiskPoint::origin(), z), z);
        let b = mobius_map(a, Complex64::from_polar(1.0, 2.0));
        assert!((b.norm() - 1.0).abs() < 1e-15);
    }
}
