//! Concrete test-function collections with base point at the origin: the
//! disc, the polydisc, the symmetrized bidisc and the quotient domains of the
//! bidisc, together with the evaluation map x -> (psi_t(x))_t and interior
//! membership helpers.
//!
//! Circle-parametrized collections are discretized to `n_alpha` equispaced
//! unimodular parameters. That truncation is a desk-scale necessity, so it is
//! a visible parameter with a refinement helper rather than a hidden choice.
//! New collections plug in by providing an evaluation map that vanishes at a
//! base point and stays strictly inside the unit disc on the domain.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Interior means sup_t |psi_t(x)| < 1 - INTERIOR_MARGIN, which keeps
/// resolvents downstream well conditioned.
pub const INTERIOR_MARGIN: f64 = 1e-9;

const DENOM_FLOOR: f64 = 1e-14;

/// A point of the underlying set, one complex coordinate per ambient
/// dimension. JSON form: `[[re,im],...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<Complex64>,
}

impl Point {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Self { coords }
    }

    pub fn disc(z: Complex64) -> Self {
        Self { coords: vec![z] }
    }

    pub fn pair(a: Complex64, b: Complex64) -> Self {
        Self { coords: vec![a, b] }
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|z| z.norm() <= 1e-12)
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coords.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        if pairs.iter().any(|[re, im]| !re.is_finite() || !im.is_finite()) {
            return Err(serde::de::Error::custom("point coordinates must be finite"));
        }
        Ok(Point {
            coords: pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        })
    }
}

/// Identifier of one test function inside a family: a plain index for finite
/// collections, a circle parameter alpha for circle-parametrized ones.
#[derive(Clone, Debug, PartialEq)]
pub enum TestLabel {
    Index(usize),
    Alpha(Complex64),
}

/// The evaluation map E(x) restricted to the working subset of the family:
/// values[t] = psi_t(x).
#[derive(Clone, Debug)]
pub struct TestVector {
    pub values: Vec<Complex64>,
    pub labels: Vec<TestLabel>,
}

impl TestVector {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// A concrete collection of test functions with base point at the origin.
/// JSON descriptor: `{"kind":"disc"}`, `{"kind":"polydisc","d":2}`,
/// `{"kind":"symmetrized_bidisc","n_alpha":64}`,
/// `{"kind":"quotient_bidisc","t":2,"n_alpha":64}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFamily {
    Disc,
    Polydisc { d: usize },
    SymmetrizedBidisc {
        #[serde(default = "default_n_alpha")]
        n_alpha: usize,
    },
    QuotientBidisc {
        t: u32,
        #[serde(default = "default_n_alpha")]
        n_alpha: usize,
    },
}

/// Working-subset size used when a circle-family descriptor omits it.
fn default_n_alpha() -> usize {
    64
}

impl TestFamily {
    pub fn symmetrized_bidisc(n_alpha: usize) -> Result<Self> {
        if n_alpha < 2 {
            return Err(Error::Invalid("n_alpha must be at least 2".into()));
        }
        Ok(TestFamily::SymmetrizedBidisc { n_alpha })
    }

    pub fn quotient_bidisc(t: u32, n_alpha: usize) -> Result<Self> {
        if n_alpha < 2 {
            return Err(Error::Invalid("n_alpha must be at least 2".into()));
        }
        if t == 0 {
            return Err(Error::Invalid("t must be positive".into()));
        }
        Ok(TestFamily::QuotientBidisc { t, n_alpha })
    }

    /// Validates the descriptor invariants (useful after JSON parsing).
    pub fn validate(&self) -> Result<()> {
        match *self {
            TestFamily::Polydisc { d } if d == 0 => {
                Err(Error::Invalid("polydisc dimension must be positive".into()))
            }
            TestFamily::SymmetrizedBidisc { n_alpha } | TestFamily::QuotientBidisc { n_alpha, .. }
                if n_alpha < 2 =>
            {
                Err(Error::Invalid("n_alpha must be at least 2".into()))
            }
            TestFamily::QuotientBidisc { t, .. } if t == 0 => {
                Err(Error::Invalid("t must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            TestFamily::Disc => 1,
            TestFamily::Polydisc { d } => d,
            TestFamily::SymmetrizedBidisc { .. } | TestFamily::QuotientBidisc { .. } => 2,
        }
    }

    /// Every family here vanishes on all its test functions at the origin.
    pub fn base_point(&self) -> Point {
        Point::new(vec![Complex64::new(0.0, 0.0); self.ambient_dim()])
    }

    /// Size of the working subset of the family.
    pub fn test_count(&self) -> usize {
        match *self {
            TestFamily::Disc => 1,
            TestFamily::Polydisc { d } => d,
            TestFamily::SymmetrizedBidisc { n_alpha } | TestFamily::QuotientBidisc { n_alpha, .. } => {
                n_alpha
            }
        }
    }

    pub fn is_circle_parametrized(&self) -> bool {
        matches!(
            self,
            TestFamily::SymmetrizedBidisc { .. } | TestFamily::QuotientBidisc { .. }
        )
    }

    /// Equispaced unimodular parameters for circle families.
    pub fn alphas(&self) -> Vec<Complex64> {
        match *self {
            TestFamily::SymmetrizedBidisc { n_alpha } | TestFamily::QuotientBidisc { n_alpha, .. } => {
                (0..n_alpha)
                    .map(|k| {
                        let th = std::f64::consts::TAU * k as f64 / n_alpha as f64;
                        Complex64::new(th.cos(), th.sin())
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn labels(&self) -> Vec<TestLabel> {
        if self.is_circle_parametrized() {
            self.alphas().into_iter().map(TestLabel::Alpha).collect()
        } else {
            (0..self.test_count()).map(TestLabel::Index).collect()
        }
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, family expects {}",
                x.dim(),
                self.ambient_dim()
            )));
        }
        Ok(())
    }

    /// The single circle-parametrized test function of the family at
    /// parameter `alpha`, for families that have one.
    pub fn eval_circle(&self, alpha: Complex64, x: &Point) -> Result<Complex64> {
        self.check_point(x)?;
        match *self {
            TestFamily::SymmetrizedBidisc { .. } => {
                let (s, p) = (x.coords[0], x.coords[1]);
                let den = Complex64::new(2.0, 0.0) - alpha * s;
                if den.norm() < DENOM_FLOOR {
                    return Err(Error::SingularDenominator { denom: den.norm() });
                }
                Ok((alpha * p.scale(2.0) - s) / den)
            }
            TestFamily::QuotientBidisc { t, .. } => {
                let (p1, p2) = (x.coords[0], x.coords[1]);
                let den = Complex64::new(2.0, 0.0) - alpha * p1;
                if den.norm() < DENOM_FLOOR {
                    return Err(Error::SingularDenominator { denom: den.norm() });
                }
                Ok((alpha * p2.powu(t) .scale(2.0) - p1) / den)
            }
            _ => Err(Error::UnsupportedRepresentation(
                "family is not circle-parametrized".into(),
            )),
        }
    }

    /// Evaluate the whole working subset at x.
    pub fn evaluate_tests(&self, x: &Point) -> Result<TestVector> {
        self.check_point(x)?;
        let values = match *self {
            TestFamily::Disc => vec![x.coords[0]],
            TestFamily::Polydisc { .. } => x.coords.clone(),
            TestFamily::SymmetrizedBidisc { .. } | TestFamily::QuotientBidisc { .. } => self
                .alphas()
                .into_iter()
                .map(|alpha| self.eval_circle(alpha, x))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(TestVector { values, labels: self.labels() })
    }

    /// sup_t |psi_t(x)| over the working subset; `< 1` is the interior test.
    pub fn sup_norm(&self, x: &Point) -> Result<f64> {
        Ok(self.evaluate_tests(x)?.sup_norm())
    }

    pub fn is_interior(&self, x: &Point) -> Result<bool> {
        Ok(self.sup_norm(x)? < 1.0 - INTERIOR_MARGIN)
    }

    /// Doubles n_alpha until the sup norm at x stabilizes within 1e-6 over
    /// two consecutive doublings (the grid sup can plateau for one step
    /// without having converged) and returns the stabilized value with the
    /// n_alpha that achieved it. Non-circle families return their exact sup
    /// norm unchanged.
    pub fn stabilized_sup_norm(&self, x: &Point) -> Result<(f64, usize)> {
        if !self.is_circle_parametrized() {
            return Ok((self.sup_norm(x)?, self.test_count()));
        }
        let mut n = match *self {
            TestFamily::SymmetrizedBidisc { n_alpha } | TestFamily::QuotientBidisc { n_alpha, .. } => {
                n_alpha
            }
            _ => unreachable!(),
        };
        let mut current = self.with_n_alpha(n).sup_norm(x)?;
        let mut stable_steps = 0;
        loop {
            let next_n = n * 2;
            let next = self.with_n_alpha(next_n).sup_norm(x)?;
            if (next - current).abs() <= 1e-6 {
                stable_steps += 1;
            } else {
                stable_steps = 0;
            }
            if stable_steps >= 2 || next_n > 1 << 20 {
                return Ok((next, next_n));
            }
            n = next_n;
            current = next;
        }
    }

    fn with_n_alpha(&self, n_alpha: usize) -> TestFamily {
        match *self {
            TestFamily::SymmetrizedBidisc { .. } => TestFamily::SymmetrizedBidisc { n_alpha },
            TestFamily::QuotientBidisc { t, .. } => TestFamily::QuotientBidisc { t, n_alpha },
            ref other => other.clone(),
        }
    }

    /// Matrix of test values over a sample set, one row per test function:
    /// psi[(t, i)] = psi_t(points[i]).
    pub fn psi_matrix(&self, points: &[Point]) -> Result<ComplexMatrix> {
        let tcount = self.test_count();
        let mut psi = ComplexMatrix::zeros(tcount, points.len());
        for (i, x) in points.iter().enumerate() {
            let tv = self.evaluate_tests(x)?;
            for t in 0..tcount {
                psi[(t, i)] = tv.values[t];
            }
        }
        Ok(psi)
    }
}

/// Sample-point generator for the quotient domains: maps a bidisc point z to
/// (E1(z1^m, z2^m), (z1 z2)^{m/t}), the proper map onto the quotient.
/// m = t = 1 is the symmetrization map (z1 + z2, z1 z2).
pub fn quotient_map(t: u32, m: u32, z1: Complex64, z2: Complex64) -> Result<Point> {
    if t == 0 || m == 0 || m % t != 0 {
        return Err(Error::Divisibility { t, m });
    }
    if z1.norm() >= 1.0 || z2.norm() >= 1.0 {
        return Err(Error::NotInterior { sup: z1.norm().max(z2.norm()) });
    }
    let a = z1.powu(m);
    let b = z2.powu(m);
    Ok(Point::pair(a + b, (z1 * z2).powu(m / t)))
}
