//! Convex generators and the reduced f-divergence between coordinate rows.
//!
//! For rows `x`, `y` of positive reduced coordinates the distance is
//! `d_f(x, y) = Σ_j x_j f(y_j / x_j)`. It is nonnegative and vanishes only
//! when the rows agree, but in general it is neither symmetric nor a metric.
//! Swapping the arguments is the same as switching to the dual generator
//! `f*(x) = x f(1/x)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smoothing width of the total-variation generator.
pub const TV_SMOOTHING: f64 = 1e-8;

/// Built-in generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    /// `f(x) = -log x`
    Kl,
    /// `f(x) = 2(1 - √x)`
    Hellinger,
    /// `f(x) = √((1-x)² + ε²) - ε`, a differentiable stand-in for `|1 - x|`.
    TvSmoothed,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Kl => "kl",
            GeneratorKind::Hellinger => "hellinger",
            GeneratorKind::TvSmoothed => "tv",
        }
    }
}

/// A strictly convex `f` on `(0, ∞)` with `f(1) = 0`, its derivative, and the
/// limits `f(0⁺)` and `f*(0⁺) = lim_{x→∞} f(x)/x` (either may be `+∞`).
#[derive(Clone)]
pub struct ConvexGenerator {
    name: String,
    f: ScalarFn,
    df: ScalarFn,
    f0: f64,
    fstar0: f64,
}

impl fmt::Debug for ConvexGenerator {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("ConvexGenerator")
            .field("name", &self.name)
            .field("f0", &self.f0)
            .field("fstar0", &self.fstar0)
            .finish()
    }
}

impl ConvexGenerator {
    pub fn new(kind: GeneratorKind) -> Self {
        match kind {
            GeneratorKind::Kl => Self::raw("kl", |x| -x.ln(), |x| -1.0 / x, f64::INFINITY, 0.0),
            GeneratorKind::Hellinger => Self::raw(
                "hellinger",
                |x| 2.0 * (1.0 - x.sqrt()),
                |x| -1.0 / x.sqrt(),
                2.0,
                0.0,
            ),
            GeneratorKind::TvSmoothed => {
                let e = TV_SMOOTHING;
                Self::raw(
                    "tv",
                    move |x| ((1.0 - x).powi(2) + e * e).sqrt() - e,
                    move |x| (x - 1.0) / ((1.0 - x).powi(2) + e * e).sqrt(),
                    (1.0 + e * e).sqrt() - e,
                    1.0,
                )
            }
        }
    }

    pub fn kl() -> Self {
        Self::new(GeneratorKind::Kl)
    }

    pub fn hellinger() -> Self {
        Self::new(GeneratorKind::Hellinger)
    }

    pub fn tv_smoothed() -> Self {
        Self::new(GeneratorKind::TvSmoothed)
    }

    /// The exact total-variation generator `|1 - x|`. It is convex but not
    /// strictly so and has a kink at 1 (the derivative returned there is 0),
    /// so it is only suitable for evaluating distances.
    pub fn total_variation() -> Self {
        Self::raw(
            "tv-exact",
            |x| (1.0 - x).abs(),
            |x| {
                if x > 1.0 {
                    1.0
                } else if x < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            },
            1.0,
            1.0,
        )
    }

    /// A user-supplied generator, checked for `f(1) = 0` and sampled convexity.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f0: f64,
        fstar0: f64,
    ) -> Result<Self> {
        let g = Self::raw(name, f, df, f0, fstar0);
        g.validate()?;
        Ok(g)
    }

    fn raw(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f0: f64,
        fstar0: f64,
    ) -> Self {
        ConvexGenerator {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
            f0,
            fstar0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    #[inline]
    pub fn df(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    /// `f(0⁺)`.
    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// `f*(0⁺) = lim_{x→∞} f(x)/x`.
    pub fn fstar0(&self) -> f64 {
        self.fstar0
    }

    /// `f*(x) = x f(1/x)`, with `f*′(x) = f(1/x) − f′(1/x)/x` and the two
    /// limits exchanged.
    pub fn dual(&self) -> Self {
        let (f, df) = (self.f.clone(), self.df.clone());
        let f2 = f.clone();
        let name = match self
            .name
            .strip_prefix("dual(")
            .and_then(|s| s.strip_suffix(')'))
        {
            Some(inner) => inner.to_string(),
            None => format!("dual({})", self.name),
        };
        Self::raw(
            name,
            move |x| x * f(1.0 / x),
            move |x| f2(1.0 / x) - df(1.0 / x) / x,
            self.fstar0,
            self.f0,
        )
    }

    /// Checks `f(1) = 0`, convexity on 10^3 sampled triples in `(1e-6, 1e6)`
    /// (up to rounding), and strict convexity on a few triples around 1.
    pub fn validate(&self) -> Result<()> {
        let at_one = self.f(1.0);
        if !(at_one.abs() <= 1e-14) {
            return Err(Error::Generator(format!(
                "{}: f(1) = {at_one:e}, expected 0",
                self.name
            )));
        }
        let chord_gap = |x: f64, y: f64, z: f64| {
            let (fx, fy, fz) = (self.f(x), self.f(y), self.f(z));
            let interp = fx + (fz - fx) * (y - x) / (z - x);
            let scale = 1.0f64.max(fx.abs()).max(fy.abs()).max(fz.abs());
            (interp - fy, scale)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..1000 {
            let mut t: [f64; 3] = std::array::from_fn(|_| 10f64.powf(rng.random_range(-6.0..6.0)));
            t.sort_by(f64::total_cmp);
            let [x, y, z] = t;
            if !(x < y && y < z) {
                continue;
            }
            let (gap, scale) = chord_gap(x, y, z);
            if !gap.is_finite() || gap < -1e-12 * scale {
                return Err(Error::Generator(format!(
                    "{}: convexity fails on ({x:e}, {y:e}, {z:e})",
                    self.name
                )));
            }
        }
        for (x, y, z) in [
            (0.5, 1.0, 2.0),
            (0.9, 1.0, 1.1),
            (1e-3, 1.0, 1e3),
            (0.25, 0.5, 1.0),
        ] {
            let (gap, scale) = chord_gap(x, y, z);
            if !(gap > 1e-9 * scale) {
                return Err(Error::Generator(format!(
                    "{}: not strictly convex on ({x}, {y}, {z})",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// `Σ_j x_j f(y_j / x_j)` without argument checks.
    #[inline]
    ///
    /// A zero entry takes the limit of its term: `y_j f*(0)` when `x_j = 0`
    /// and `x_j f(0)` when `y_j = 0` (zero times an infinite limit is taken
    /// as zero). Boundary rows of a box-basis field contain such zeros.
    pub fn divergence_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d: f64 = x
            .iter()
            .zip(y)
            .map(|(&xj, &yj)| {
                if xj > 0.0 && yj > 0.0 {
                    xj * self.f(yj / xj)
                } else if yj > 0.0 {
                    yj * self.fstar0
                } else if xj > 0.0 {
                    xj * self.f0
                } else {
                    0.0
                }
            })
            .sum();
        d.max(0.0)
    }
}

fn check_rows(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Rows(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

fn check_positive(row: &[f64], which: &str) -> Result<()> {
    if let Some(j) = row.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Rows(format!(
            "{which}[{j}] = {} is not strictly positive",
            row[j]
        )));
    }
    Ok(())
}

/// Reduced f-divergence `Σ_j x_j f(y_j / x_j)` between two coordinate rows.
/// The first row plays the role of the current point, the second the target.
pub fn reduced_divergence(x: &[f64], y: &[f64], g: &ConvexGenerator) -> Result<f64> {
    check_rows(x, y)?;
    check_positive(x, "x")?;
    check_positive(y, "y")?;
    Ok(g.divergence_unchecked(x, y))
}

/// Squared Euclidean distance between coordinate rows; the naive baseline.
pub fn euclidean_sq(x: &[f64], y: &[f64]) -> Result<f64> {
    check_rows(x, y)?;
    Ok(euclidean_sq_unchecked(x, y))
}

#[inline]
pub fn euclidean_sq_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Distance used to build fields and matrices: a divergence or the naive
/// squared difference.
#[derive(Debug, Clone)]
pub enum DistanceFn {
    Divergence(ConvexGenerator),
    L2,
}

impl DistanceFn {
    /// Parses the `kl | hellinger | tv | l2` flag values.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "kl" => DistanceFn::Divergence(ConvexGenerator::kl()),
            "hellinger" | "h" => DistanceFn::Divergence(ConvexGenerator::hellinger()),
            "tv" => DistanceFn::Divergence(ConvexGenerator::tv_smoothed()),
            "l2" => DistanceFn::L2,
            other => {
                return Err(Error::Generator(format!(
                    "unknown distance `{other}` (expected kl, hellinger, tv or l2)"
                )))
            }
        })
    }

    pub fn name(&self) -> &str {
        match self {
            DistanceFn::Divergence(g) => g.name(),
            DistanceFn::L2 => "l2",
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            DistanceFn::Divergence(g) => reduced_divergence(x, y, g),
            DistanceFn::L2 => euclidean_sq(x, y),
        }
    }

    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            DistanceFn::Divergence(g) => g.divergence_unchecked(x, y),
            DistanceFn::L2 => euclidean_sq_unchecked(x, y),
        }
    }
}

impl From<ConvexGenerator> for DistanceFn {
    fn from(g: ConvexGenerator) -> Self {
        DistanceFn::Divergence(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    fn rand_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }

    #[test]
    fn builtin_values() {
        let kl = ConvexGenerator::kl();
        assert!((kl.f(2.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kl.f0(), f64::INFINITY);
        assert_eq!(kl.fstar0(), 0.0);
        let h = ConvexGenerator::hellinger();
        assert_eq!(h.f(4.0), -2.0);
        assert_eq!(h.f0(), 2.0);
        assert_eq!(h.fstar0(), 0.0);
        for g in [kl, h, ConvexGenerator::tv_smoothed()] {
            g.validate().unwrap();
            assert_eq!(g.f(1.0), 0.0);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for g in [
            ConvexGenerator::kl(),
            ConvexGenerator::hellinger(),
            ConvexGenerator::kl().dual(),
            ConvexGenerator::hellinger().dual(),
        ] {
            for &x in &[0.05, 0.3, 0.9, 1.7, 6.0] {
                let h = 1e-6 * x;
                let fd = (g.f(x + h) - g.f(x - h)) / (2.0 * h);
                assert!(
                    (fd - g.df(x)).abs() < 1e-6 * (1.0 + fd.abs()),
                    "{} at {x}",
                    g.name()
                );
            }
        }
    }

    #[test]
    fn dual_of_kl() {
        let d = ConvexGenerator::kl().dual();
        assert!(d.f(1.0).abs() < 1e-15);
        assert!((d.f(2.0) - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((d.f(3.5) - 3.5 * 3.5f64.ln()).abs() < 1e-14);
        assert_eq!(d.f0(), 0.0);
        assert_eq!(d.fstar0(), f64::INFINITY);
        d.validate().unwrap();
        assert_eq!(d.dual().name(), "kl");
    }

    #[test]
    fn dual_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for g in [
            ConvexGenerator::kl(),
            ConvexGenerator::hellinger(),
            ConvexGenerator::tv_smoothed(),
        ] {
            let dd = g.dual().dual();
            for _ in 0..200 {
                let x = 10f64.powf(rng.random_range(-3.0..3.0));
                let scale = 1.0f64.max(g.f(x).abs());
                assert!((dd.f(x) - g.f(x)).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn exact_tv_is_self_dual() {
        let tv = ConvexGenerator::total_variation();
        let d = tv.dual();
        for &x in &[1e-3, 0.2, 0.5, 1.0, 1.5, 3.0, 40.0] {
            assert!((d.f(x) - tv.f(x)).abs() < 1e-12);
        }
        assert!(tv.validate().is_err());
    }

    #[test]
    fn custom_generators_are_validated() {
        let chi2 = ConvexGenerator::custom(
            "chi2",
            |x| (x - 1.0).powi(2),
            |x| 2.0 * (x - 1.0),
            1.0,
            f64::INFINITY,
        );
        assert!(chi2.is_ok());
        let shifted = ConvexGenerator::custom("bad", |x| x * x, |x| 2.0 * x, 0.0, f64::INFINITY);
        assert!(matches!(shifted, Err(Error::Generator(_))));
        let concave =
            ConvexGenerator::custom("concave", |x| x.ln(), |x| 1.0 / x, f64::NEG_INFINITY, 0.0);
        assert!(concave.is_err());
        let linear = ConvexGenerator::custom("linear", |x| x - 1.0, |_| 1.0, -1.0, 1.0);
        assert!(linear.is_err());
    }

    #[test]
    fn kl_example() {
        // independent evaluation of the two terms
        let expected = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        let d = reduced_divergence(&[0.5, 0.5], &[0.25, 0.75], &ConvexGenerator::kl()).unwrap();
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 0.143841036).abs() < 1e-9);
    }

    #[test]
    fn zero_entries_take_limits() {
        let y = [0.2, 0.3, 0.5];
        let kl = ConvexGenerator::kl();
        // x is an indicator row: only the first term survives for KL
        let d = kl.divergence_unchecked(&[1.0, 0.0, 0.0], &y);
        assert!((d - -(0.2f64).ln()).abs() < 1e-15);
        // the limit agrees with a vanishing positive entry
        let eps = 1e-14;
        let near = kl.divergence_unchecked(&[1.0 - 2.0 * eps, eps, eps], &y);
        assert!((near - d).abs() < 1e-10);
        let tv = ConvexGenerator::tv_smoothed();
        let d = tv.divergence_unchecked(&[1.0, 0.0, 0.0], &y);
        assert!((d - (tv.f(0.2) + 0.8 * tv.fstar0())).abs() < 1e-15);
        assert!(kl.divergence_unchecked(&y, &[1.0, 0.0, 0.0]).is_infinite());
        assert!(reduced_divergence(&[1.0, 0.0, 0.0], &y, &kl).is_err());
    }

    #[test]
    fn row_errors() {
        let kl = ConvexGenerator::kl();
        assert!(matches!(
            reduced_divergence(&[0.5, 0.5], &[1.0], &kl),
            Err(Error::Rows(_))
        ));
        assert!(matches!(
            reduced_divergence(&[1.0, 0.0], &[0.5, 0.5], &kl),
            Err(Error::Rows(_))
        ));
        assert!(euclidean_sq(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn euclidean_values() {
        assert_eq!(euclidean_sq(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(euclidean_sq(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn kl_is_asymmetric() {
        let kl = ConvexGenerator::kl();
        let (x, y) = ([0.1, 0.9], [0.5, 0.5]);
        let a = reduced_divergence(&x, &y, &kl).unwrap();
        let b = reduced_divergence(&y, &x, &kl).unwrap();
        assert!((a - b).abs() > 1e-3);
    }

    #[test]
    fn distance_names() {
        assert_eq!(DistanceFn::from_name("kl").unwrap().name(), "kl");
        assert_eq!(DistanceFn::from_name("l2").unwrap().name(), "l2");
        assert!(DistanceFn::from_name("js").is_err());
    }

    proptest! {
        #[test]
        fn duality_and_bounds(seed in any::<u64>(), n in 2usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = rand_row(&mut rng, n);
            let y = rand_row(&mut rng, n);
            for g in [ConvexGenerator::kl(), ConvexGenerator::hellinger(), ConvexGenerator::tv_smoothed()] {
                let d = reduced_divergence(&x, &y, &g).unwrap();
                let back = reduced_divergence(&y, &x, &g.dual()).unwrap();
                prop_assert!((d - back).abs() <= 1e-12 * (1.0 + d.abs()));
                prop_assert!(d >= g.f(1.0));
                let upper = g.f0() + g.fstar0();
                if upper.is_finite() {
                    prop_assert!(d <= upper + 1e-12);
                }
                prop_assert_eq!(reduced_divergence(&x, &x, &g).unwrap(), 0.0);
            }
            let h = ConvexGenerator::hellinger();
            let dxy = reduced_divergence(&x, &y, &h).unwrap();
            let dyx = reduced_divergence(&y, &x, &h).unwrap();
            prop_assert!((dxy - dyx).abs() < 1e-12);
            let closed: f64 = 2.0 - 2.0 * x.iter().zip(&y).map(|(a, b)| (a * b).sqrt()).sum::<f64>();
            prop_assert!((dxy - closed.max(0.0)).abs() < 1e-12);
        }
    }
}
