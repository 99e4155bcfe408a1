//! Randomized certification of the disk identities.
//!
//! Each check draws its samples from a seeded generator, evaluates one
//! identity or bound, and records the worst residual seen next to the
//! threshold it must stay under.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::divergence::ConvexGenerator;

/// Outcome of one certification check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<44} samples={:<6} worst={:.3e} threshold={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.worst,
            self.threshold
        )
    }
}

/// Worst residual must stay below the threshold.
fn below(name: &str, samples: usize, worst: f64, threshold: f64) -> Check {
    Check {
        name: name.into(),
        samples,
        worst,
        threshold,
        passed: worst < threshold,
    }
}

/// Worst (smallest) value must stay above the threshold.
fn above(name: &str, samples: usize, worst: f64, threshold: f64) -> Check {
    Check {
        name: name.into(),
        samples,
        worst,
        threshold,
        passed: worst > threshold,
    }
}

/// Uniform point in the annulus `r_min < |z| ≤ r_max`.
pub fn random_point(rng: &mut impl Rng, r_min: f64, r_max: f64) -> DiskPoint {
    let r = rng.random_range(r_min * r_min..r_max * r_max).sqrt();
    let t = rng.random_range(-PI..PI);
    DiskPoint::new(Complex64::from_polar(r, t)).expect("radius below 1")
}

/// `n` sorted uniform breakpoints, resampled until adjacent ones are at
/// least `1e-6` apart.
pub fn random_partition(rng: &mut impl Rng, n: usize) -> CirclePartition {
    loop {
        let mut t: Vec<f64> = (0..n)
            .map(|_| wrap_angle(rng.random_range(-PI..PI)))
            .collect();
        t.sort_by(f64::total_cmp);
        let wrap_gap = t[0] + TAU - t[n - 1];
        if t.windows(2).all(|w| w[1] - w[0] > 1e-6) && wrap_gap > 1e-6 {
            if let Ok(p) = CirclePartition::new(t) {
                return p;
            }
        }
    }
}

fn cyclic_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Chord identity `1/v̄ = −w/(1−|z|²)` and the antipode involution.
pub fn check_chord_identities(samples: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut chord, mut invol) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let z = random_point(&mut rng, 0.0, 0.95);
        let theta = rng.random_range(-PI..PI);
        let e = Complex64::from_polar(1.0, theta);
        let v = e - z.z();
        let psi = antipode(z, theta);
        let w = Complex64::from_polar(1.0, psi) - z.z();
        let res = (1.0 / v.conj() + w / (1.0 - z.z().norm_sqr())).norm();
        chord = chord.max(res);
        invol = invol.max(cyclic_distance(antipode(z, psi), theta));
    }
    vec![
        below(
            "chord identity |1/conj(v) + w/(1-|z|^2)|",
            samples,
            chord,
            1e-12,
        ),
        below("antipode involution", samples, invol, 1e-10),
    ]
}

/// Partition of unity and vanishing gradient sum.
pub fn check_partition_of_unity(samples: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum_err, mut grad_err) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let n = rng.random_range(2..=32);
        let p = random_partition(&mut rng, n);
        let z = random_point(&mut rng, 0.0, 0.95);
        let phi = harmonic_measures(z, &p);
        sum_err = sum_err.max((phi.iter().sum::<f64>() - 1.0).abs());
        let mut g = [0.0, 0.0];
        for j in 0..n {
            let gj = grad_harmonic_measure(z, &p, j);
            g[0] += gj[0];
            g[1] += gj[1];
        }
        grad_err = grad_err.max(g[0].hypot(g[1]));
    }
    vec![
        below("sum_j phi_j = 1", samples, sum_err, 1e-12),
        below("sum_j grad phi_j = 0", samples, grad_err, 1e-12),
    ]
}

/// Analytic `∇φ_j` against central differences of `φ_j` with step `1e-6`.
pub fn check_gradient_finite_differences(samples: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for s in 0..samples {
        let n = [3, 8, 16][s % 3];
        let p = random_partition(&mut rng, n);
        let z = random_point(&mut rng, 0.0, 0.95);
        let j = rng.random_range(0..n);
        let g = grad_harmonic_measure(z, &p, j);
        let (a, b) = p.arc(j);
        let phi = |dx: f64, dy: f64| {
            let q = DiskPoint::new(z.z() + Complex64::new(dx, dy)).expect("inside");
            arc_measure(q, a, b)
        };
        let fd = [
            (phi(h, 0.0) - phi(-h, 0.0)) / (2.0 * h),
            (phi(0.0, h) - phi(0.0, -h)) / (2.0 * h),
        ];
        let rel = (g[0] - fd[0]).hypot(g[1] - fd[1]) / g[0].hypot(g[1]);
        worst = worst.max(rel);
    }
    below(
        "grad phi_j vs central differences (rel)",
        samples,
        worst,
        1e-6,
    )
}

/// Nonvanishing divergence gradient away from the target, `n > 2`.
///
/// The gradient vanishes linearly at the origin, so the certified quantity
/// is `‖∇d_f(z)‖ / |z|`.
pub fn check_gradient_nonvanishing(
    samples: usize,
    seed: u64,
    n: usize,
    f: &ConvexGenerator,
) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let p = random_partition(&mut rng, n);
        let z = random_point(&mut rng, 1e-3, 0.95);
        let g = grad_divergence(z, &p, f);
        worst = worst.min(g[0].hypot(g[1]) / z.z().norm());
    }
    above(
        &format!("|grad d_f|/|z| > 0 (n={n}, f={})", f.name()),
        samples,
        worst,
        1e-12,
    )
}

/// Chain-rule gradient against central differences of the distance itself.
pub fn check_divergence_gradient_fd(samples: usize, seed: u64, f: &ConvexGenerator) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for s in 0..samples {
        let n = [3, 4, 8, 16][s % 4];
        let p = random_partition(&mut rng, n);
        let z = random_point(&mut rng, 0.05, 0.9);
        let g = grad_divergence(z, &p, f);
        let d = |dx: f64, dy: f64| {
            divergence_to_origin(
                DiskPoint::new(z.z() + Complex64::new(dx, dy)).expect("inside"),
                &p,
                f,
            )
        };
        let fd = [
            (d(h, 0.0) - d(-h, 0.0)) / (2.0 * h),
            (d(0.0, h) - d(0.0, -h)) / (2.0 * h),
        ];
        let rel = (g[0] - fd[0]).hypot(g[1] - fd[1]) / g[0].hypot(g[1]).max(1e-3);
        worst = worst.max(rel);
    }
    below(
        &format!("grad d_f vs central differences (f={})", f.name()),
        samples,
        worst,
        1e-5,
    )
}

/// Two-arc control: on the antipodal partition every point of the vertical
/// diameter has the origin's coordinates, hence zero distance and no
/// gradient along the diameter. For a generic pair of breakpoints the same
/// holds on the circle through both breakpoints and the origin.
pub fn check_two_arc_locus(samples: usize, seed: u64, f: &ConvexGenerator) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let antipodal = CirclePartition::new(vec![-PI / 2.0, PI / 2.0]).expect("valid");
    let (mut dist, mut along) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let y = rng.random_range(-0.95..0.95);
        let z = DiskPoint::from_xy(0.0, y).expect("inside");
        dist = dist.max(divergence_to_origin(z, &antipodal, f).abs());
        along = along.max(grad_divergence(z, &antipodal, f)[1].abs());
    }
    let mut circle = 0.0f64;
    for _ in 0..samples {
        let p = random_partition(&mut rng, 2);
        let (t1, t2) = (p.thetas()[0], p.thetas()[1]);
        // circumcircle of e^{it1}, e^{it2}, 0
        let (a, b) = (
            Complex64::from_polar(1.0, t1),
            Complex64::from_polar(1.0, t2),
        );
        let d = 2.0 * (a.re * b.im - a.im * b.re);
        if d.abs() < 1e-3 {
            continue;
        }
        let center = Complex64::new(
            (b.im * a.norm_sqr() - a.im * b.norm_sqr()) / d,
            (a.re * b.norm_sqr() - b.re * a.norm_sqr()) / d,
        );
        let r = center.norm();
        let s = rng.random_range(-PI..PI);
        let q = center + Complex64::from_polar(r, s);
        if q.norm() > 0.95 {
            continue;
        }
        let z = DiskPoint::new(q).expect("inside");
        circle = circle.max(divergence_to_origin(z, &p, f).abs());
    }
    vec![
        below(
            &format!("n=2 diameter: d_f = 0 (f={})", f.name()),
            samples,
            dist,
            1e-12,
        ),
        below(
            &format!("n=2 diameter: grad along diameter (f={})", f.name()),
            samples,
            along,
            1e-10,
        ),
        below(
            &format!("n=2 circle: d_f = 0 (f={})", f.name()),
            samples,
            circle,
            1e-12,
        ),
    ]
}

/// Invariance of harmonic measure and reduced distance under disk
/// automorphisms, with breakpoints transported by the same map.
pub fn check_mobius_invariance(samples: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (kl, hel) = (ConvexGenerator::kl(), ConvexGenerator::hellinger());
    let (mut measure, mut distance) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let n = rng.random_range(3..=16);
        let p = random_partition(&mut rng, n);
        let a = random_point(&mut rng, 0.0, 0.9);
        let x = random_point(&mut rng, 0.0, 0.9);
        let y = random_point(&mut rng, 0.0, 0.9);
        let (q, r) = p
            .mobius_image(a)
            .expect("automorphism keeps breakpoints distinct");
        let mx = DiskPoint::new(mobius_map(a, x.z())).expect("inside");
        let my = DiskPoint::new(mobius_map(a, y.z())).expect("inside");
        let px = harmonic_measures(x, &p);
        let py = harmonic_measures(y, &p);
        // reorder transported coordinates back to the original arc order
        let unrotate = |v: Vec<f64>| -> Vec<f64> { (0..n).map(|j| v[(j + n - r) % n]).collect() };
        let qx = unrotate(harmonic_measures(mx, &q));
        let qy = unrotate(harmonic_measures(my, &q));
        for j in 0..n {
            measure = measure.max((px[j] - qx[j]).abs());
        }
        for g in [&kl, &hel] {
            let before = g.divergence_unchecked(&px, &py);
            let after = g.divergence_unchecked(&qx, &qy);
            distance = distance.max((before - after).abs());
        }
    }
    vec![
        below(
            "mobius invariance of harmonic measure",
            samples,
            measure,
            1e-10,
        ),
        below(
            "mobius invariance of reduced distance",
            samples,
            distance,
            1e-10,
        ),
    ]
}

/// Full suite at the default sample counts.
pub fn run_all(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    out.extend(check_chord_identities(10_000, seed));
    out.extend(check_partition_of_unity(10_000, seed + 1));
    out.push(check_gradient_finite_differences(1_000, seed + 2));
    let gens = [
        ConvexGenerator::kl(),
        ConvexGenerator::hellinger(),
        ConvexGenerator::tv_smoothed(),
    ];
    for (gi, f) in gens.iter().enumerate() {
        for (ni, n) in [3usize, 4, 8, 16].into_iter().enumerate() {
            out.push(check_gradient_nonvanishing(
                1_000,
                seed + 10 + (gi * 4 + ni) as u64,
                n,
                f,
            ));
        }
    }
    for (gi, f) in gens[..2].iter().enumerate() {
        out.push(check_divergence_gradient_fd(
            1_000,
            seed + 30 + gi as u64,
            f,
        ));
        out.extend(check_two_arc_locus(1_000, seed + 40 + gi as u64, f));
    }
    out.extend(check_mobius_invariance(1_000, seed + 50));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let mut checks = check_chord_identities(500, 1);
        checks.extend(check_partition_of_unity(500, 2));
        checks.push(check_gradient_finite_differences(200, 3));
        checks.push(check_gradient_nonvanishing(
            200,
            4,
            3,
            &ConvexGenerator::kl(),
        ));
        checks.push(check_divergence_gradient_fd(
            100,
            5,
            &ConvexGenerator::hellinger(),
        ));
        checks.extend(check_two_arc_locus(100, 6, &ConvexGenerator::kl()));
        checks.extend(check_mobius_invariance(200, 7));
        for c in &checks {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn two_arc_gradient_can_vanish_off_origin() {
        // the n = 2 degeneracy: a nonzero point with zero gradient
        let p = CirclePartition::new(vec![-PI / 2.0, PI / 2.0]).unwrap();
        let z = DiskPoint::from_xy(0.0, 0.4).unwrap();
        let g = grad_divergence(z, &p, &ConvexGenerator::kl());
        assert!(g[0].hypot(g[1]) < 1e-12);
    }
}
