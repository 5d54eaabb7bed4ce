//! Carriers, the neutral group interfaces, and the base groups with known
//! Haar measures: `(ℝ,+)`, the circle `[0,1)` under addition mod 1, and
//! `(ℝⁿ,+)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Dual;
use crate::measure::{IntervalSet, MassClass, MeasureSpec};

/// Point of a (possibly multi-dimensional) carrier.
pub type Point = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Carrier {
    FullLine,
    /// `(lo, hi)`.
    OpenInterval { lo: f64, hi: f64 },
    /// `(0, ∞)`.
    HalfLine,
    /// `[0, 1)` with wraparound.
    Circle,
    /// `[lo, hi)`, `hi` may be `+∞`.
    HalfOpen { lo: f64, hi: f64 },
    Product { dim: usize },
}

impl Carrier {
    pub fn open_interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "open interval ({lo}, {hi}) needs finite lo < hi"
            )));
        }
        Ok(Carrier::OpenInterval { lo, hi })
    }

    pub fn half_open(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && lo < hi) || hi.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "half-open interval [{lo}, {hi}) needs finite lo < hi"
            )));
        }
        Ok(Carrier::HalfOpen { lo, hi })
    }

    pub fn product(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(Carrier::Product { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            Carrier::Product { dim } => *dim,
            _ => 1,
        }
    }

    /// Infimum and supremum of a one-dimensional carrier.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Carrier::FullLine | Carrier::Product { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Carrier::OpenInterval { lo, hi } | Carrier::HalfOpen { lo, hi } => (lo, hi),
            Carrier::HalfLine => (0.0, f64::INFINITY),
            Carrier::Circle => (0.0, 1.0),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Carrier::FullLine | Carrier::Product { .. } => x.is_finite(),
            Carrier::OpenInterval { lo, hi } => lo < x && x < hi,
            Carrier::HalfLine => 0.0 < x && x < f64::INFINITY,
            Carrier::Circle => (0.0..1.0).contains(&x),
            Carrier::HalfOpen { lo, hi } => lo <= x && x < hi,
        }
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().all(|&x| self.contains(x))
    }

    /// Whether every piece of `s` lies within the closure of the carrier.
    pub fn contains_set(&self, s: &IntervalSet) -> bool {
        let (lo, hi) = self.bounds();
        s.pieces().iter().all(|&(a, b)| a >= lo && b <= hi)
    }

    pub fn ensure(&self, x: f64) -> Result<f64> {
        if self.contains(x) {
            Ok(x)
        } else {
            Err(Error::PointOutsideCarrier(x))
        }
    }

    /// Carrier-specific sampler: uniform on bounded carriers, a standard
    /// normal pushed into unbounded ones.
    pub fn sample_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.bounds();
        loop {
            let x = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => rng.random_range(lo..hi),
                (false, false) => rng.sample::<f64, _>(StandardNormal),
                (true, false) => match self {
                    Carrier::HalfLine => rng.sample::<f64, _>(StandardNormal).exp(),
                    _ => lo + rng.sample::<f64, _>(StandardNormal).abs(),
                },
                (false, true) => hi - rng.sample::<f64, _>(StandardNormal).abs(),
            };
            if self.contains(x) {
                return x;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        (0..self.dim()).map(|_| {
            match self {
                Carrier::Product { .. } => rng.sample::<f64, _>(StandardNormal),
                _ => self.sample_scalar(rng),
            }
        })
        .collect()
    }
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Carrier::FullLine => f.write_str("(-inf, inf)"),
            Carrier::OpenInterval { lo, hi } => write!(f, "({lo}, {hi})"),
            Carrier::HalfLine => f.write_str("(0, inf)"),
            Carrier::Circle => f.write_str("[0, 1) mod 1"),
            Carrier::HalfOpen { lo, hi } => write!(f, "[{lo}, {hi})"),
            Carrier::Product { dim } => write!(f, "R^{dim}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compactness {
    Compact,
    LocallyCompactNoncompact,
    NonLocallyCompact,
}

/// Structural facts declared by construction and propagated through
/// transports. None of these are detected numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Tags {
    pub abelian: bool,
    pub compactness: Compactness,
    pub dense_in_itself: bool,
    /// The metric is two-sided invariant.
    pub invariant_metric: bool,
}

impl Tags {
    pub const fn abelian(compactness: Compactness) -> Self {
        Tags {
            abelian: true,
            compactness,
            dense_in_itself: true,
            invariant_metric: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

/// A group on a carrier, with points represented as coordinate slices.
pub trait Group: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn carrier(&self) -> Carrier;
    fn tags(&self) -> Tags;
    fn identity(&self) -> Point;
    fn op(&self, x: &[f64], y: &[f64]) -> Result<Point>;
    fn invert(&self, x: &[f64]) -> Result<Point>;
    fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64>;

    fn dim(&self) -> usize {
        self.carrier().dim()
    }
}

/// A group on a one-dimensional carrier.
pub trait ScalarGroup: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn carrier(&self) -> Carrier;
    fn tags(&self) -> Tags;
    fn identity(&self) -> f64;
    fn op(&self, x: f64, y: f64) -> Result<f64>;
    fn invert(&self, x: f64) -> Result<f64>;
    fn metric(&self, x: f64, y: f64) -> Result<f64>;

    /// `g ⊙ s` (left) or `s ⊙ g` (right).
    ///
    /// The default assumes `x ↦ g ⊙ x` is an increasing homeomorphism of the
    /// carrier, which holds for every transport of `(ℝ,+)` by a monotone map.
    fn translate_set(&self, g: f64, s: &IntervalSet, side: Side) -> Result<IntervalSet> {
        monotone_translate(self, g, s, side)
    }
}

/// Translation of an interval set along an increasing, carrier-preserving
/// map: interior endpoints move, carrier boundary endpoints stay put.
pub fn monotone_translate<G: ScalarGroup + ?Sized>(
    group: &G,
    g: f64,
    s: &IntervalSet,
    side: Side,
) -> Result<IntervalSet> {
    let carrier = group.carrier();
    if !carrier.contains_set(s) {
        return Err(Error::SetOutsideSupport(s.to_string()));
    }
    let (lo, hi) = carrier.bounds();
    let shift = |x: f64| -> Result<f64> {
        if x <= lo {
            Ok(lo)
        } else if x >= hi {
            Ok(hi)
        } else {
            match side {
                Side::Left => group.op(g, x),
                Side::Right => group.op(x, g),
            }
        }
    };
    let mut pieces = Vec::with_capacity(s.pieces().len());
    for &(a, b) in s.pieces() {
        pieces.push((shift(a)?, shift(b)?));
    }
    IntervalSet::from_pieces(pieces)
}

/// A scalar group seen through one-element points.
#[derive(Debug, Clone)]
pub struct Lifted(pub Arc<dyn ScalarGroup>);

impl Group for Lifted {
    fn name(&self) -> String {
        self.0.name()
    }
    fn carrier(&self) -> Carrier {
        self.0.carrier()
    }
    fn tags(&self) -> Tags {
        self.0.tags()
    }
    fn identity(&self) -> Point {
        vec![self.0.identity()]
    }
    fn op(&self, x: &[f64], y: &[f64]) -> Result<Point> {
        Ok(vec![self.0.op(scalar(x)?, scalar(y)?)?])
    }
    fn invert(&self, x: &[f64]) -> Result<Point> {
        Ok(vec![self.0.invert(scalar(x)?)?])
    }
    fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.0.metric(scalar(x)?, scalar(y)?)
    }
}

impl<T: ScalarGroup + ?Sized> ScalarGroup for Arc<T> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn carrier(&self) -> Carrier {
        (**self).carrier()
    }
    fn tags(&self) -> Tags {
        (**self).tags()
    }
    fn identity(&self) -> f64 {
        (**self).identity()
    }
    fn op(&self, x: f64, y: f64) -> Result<f64> {
        (**self).op(x, y)
    }
    fn invert(&self, x: f64) -> Result<f64> {
        (**self).invert(x)
    }
    fn metric(&self, x: f64, y: f64) -> Result<f64> {
        (**self).metric(x, y)
    }
    fn translate_set(&self, g: f64, s: &IntervalSet, side: Side) -> Result<IntervalSet> {
        (**self).translate_set(g, s, side)
    }
}

fn scalar(p: &[f64]) -> Result<f64> {
    match p {
        [x] => Ok(*x),
        _ => Err(Error::DimensionMismatch {
            expected: 1,
            got: p.len(),
        }),
    }
}

/// A group whose left translations can be differentiated with dual numbers.
pub trait LieGroup: Group {
    /// `g ⊙ x` with `x` carrying tangent directions.
    fn translate_dual(&self, g: &[f64], x: &[Dual]) -> Result<Vec<Dual>>;
}

/// Neutral handle on any constructed group.
#[derive(Debug, Clone)]
pub enum GroupSpec {
    Scalar(Arc<dyn ScalarGroup>),
    Vector(Arc<dyn LieGroup>),
}

impl GroupSpec {
    pub fn as_group(&self) -> Arc<dyn Group> {
        match self {
            GroupSpec::Scalar(g) => Arc::new(Lifted(g.clone())),
            GroupSpec::Vector(g) => g.clone(),
        }
    }

    pub fn as_scalar(&self) -> Option<&Arc<dyn ScalarGroup>> {
        match self {
            GroupSpec::Scalar(g) => Some(g),
            GroupSpec::Vector(_) => None,
        }
    }

    pub fn as_lie(&self) -> Option<&Arc<dyn LieGroup>> {
        match self {
            GroupSpec::Scalar(_) => None,
            GroupSpec::Vector(g) => Some(g),
        }
    }
}

/// `(ℝ, +, |x−y|)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RealLine;

impl ScalarGroup for RealLine {
    fn name(&self) -> String {
        "real-line".into()
    }
    fn carrier(&self) -> Carrier {
        Carrier::FullLine
    }
    fn tags(&self) -> Tags {
        Tags::abelian(Compactness::LocallyCompactNoncompact)
    }
    fn identity(&self) -> f64 {
        0.0
    }
    fn op(&self, x: f64, y: f64) -> Result<f64> {
        Carrier::FullLine.ensure(x + y)
    }
    fn invert(&self, x: f64) -> Result<f64> {
        Ok(-Carrier::FullLine.ensure(x)?)
    }
    fn metric(&self, x: f64, y: f64) -> Result<f64> {
        Ok((x - y).abs())
    }
}

/// `[0,1)` under addition mod 1 with the arc metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct Circle;

impl Circle {
    /// `(x + y) mod 1` for `x, y ∈ [0,1)`; exact on dyadic rationals.
    pub fn add(x: f64, y: f64) -> f64 {
        let s = x + y;
        if s >= 1.0 {
            s - 1.0
        } else {
            s
        }
    }

    pub fn negate(x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            1.0 - x
        }
    }

    pub fn arc(x: f64, y: f64) -> f64 {
        let d = (x - y).abs();
        d.min(1.0 - d)
    }

    /// Rotates `s ⊆ [0,1)` by `t`; a piece crossing 1 splits in two.
    pub fn rotate_set(t: f64, s: &IntervalSet) -> Result<IntervalSet> {
        let mut pieces = Vec::with_capacity(s.pieces().len() + 1);
        for &(a, b) in s.pieces() {
            let a2 = a + t;
            let b2 = b + t;
            if a2 >= 1.0 {
                pieces.push((a2 - 1.0, b2 - 1.0));
            } else if b2 > 1.0 {
                pieces.push((a2, 1.0));
                pieces.push((0.0, b2 - 1.0));
            } else {
                pieces.push((a2, b2));
            }
        }
        IntervalSet::from_pieces(pieces)
    }
}

impl ScalarGroup for Circle {
    fn name(&self) -> String {
        "circle".into()
    }
    fn carrier(&self) -> Carrier {
        Carrier::Circle
    }
    fn tags(&self) -> Tags {
        Tags::abelian(Compactness::Compact)
    }
    fn identity(&self) -> f64 {
        0.0
    }
    fn op(&self, x: f64, y: f64) -> Result<f64> {
        Ok(Circle::add(Carrier::Circle.ensure(x)?, Carrier::Circle.ensure(y)?))
    }
    fn invert(&self, x: f64) -> Result<f64> {
        Ok(Circle::negate(Carrier::Circle.ensure(x)?))
    }
    fn metric(&self, x: f64, y: f64) -> Result<f64> {
        Ok(Circle::arc(x, y))
    }
    fn translate_set(&self, g: f64, s: &IntervalSet, _side: Side) -> Result<IntervalSet> {
        if !Carrier::Circle.contains_set(s) {
            return Err(Error::SetOutsideSupport(s.to_string()));
        }
        Circle::rotate_set(Carrier::Circle.ensure(g)?, s)
    }
}

/// `(ℝⁿ, +)` with the Euclidean metric.
#[derive(Debug, Clone, Copy)]
pub struct RealN {
    dim: usize,
}

impl RealN {
    pub fn new(dim: usize) -> Result<Self> {
        Carrier::product(dim)?;
        Ok(Self { dim })
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        check_dim(self.dim, p.len())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

impl Group for RealN {
    fn name(&self) -> String {
        format!("real-n:{}", self.dim)
    }
    fn carrier(&self) -> Carrier {
        Carrier::Product { dim: self.dim }
    }
    fn tags(&self) -> Tags {
        Tags::abelian(Compactness::LocallyCompactNoncompact)
    }
    fn identity(&self) -> Point {
        vec![0.0; self.dim]
    }
    fn op(&self, x: &[f64], y: &[f64]) -> Result<Point> {
        self.check(x)?;
        self.check(y)?;
        Ok(x.iter().zip(y).map(|(a, b)| a + b).collect())
    }
    fn invert(&self, x: &[f64]) -> Result<Point> {
        self.check(x)?;
        Ok(x.iter().map(|a| -a).collect())
    }
    fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(euclidean(x, y))
    }
}

impl LieGroup for RealN {
    fn translate_dual(&self, g: &[f64], x: &[Dual]) -> Result<Vec<Dual>> {
        self.check(g)?;
        check_dim(self.dim, x.len())?;
        Ok(g.iter().zip(x).map(|(&a, &b)| Dual::constant(a) + b).collect())
    }
}

pub fn base_real_line() -> (Arc<dyn ScalarGroup>, MeasureSpec) {
    (Arc::new(RealLine), MeasureSpec::lebesgue(Carrier::FullLine))
}

pub fn base_circle() -> (Arc<dyn ScalarGroup>, MeasureSpec) {
    let mut m = MeasureSpec::lebesgue(Carrier::Circle);
    m.mass_class = MassClass::Probability;
    (Arc::new(Circle), m)
}

pub fn base_real_n(n: usize) -> Result<(Arc<dyn LieGroup>, MeasureSpec)> {
    let g = RealN::new(n)?;
    Ok((Arc::new(g), MeasureSpec::lebesgue(g.carrier())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn real_line_basics() {
        let (g, m) = base_real_line();
        assert_eq!(g.op(2.0, 3.0).unwrap(), 5.0);
        assert_eq!(ScalarGroup::identity(&g), 0.0);
        let len = m.integrate(&IntervalSet::interval(0.0, 4.0).unwrap(), 1e-12).unwrap();
        assert_eq!(len, 4.0);
    }

    #[test]
    fn circle_basics() {
        let (g, m) = base_circle();
        assert_eq!(g.op(0.75, 0.5).unwrap(), 0.25);
        assert_eq!(g.invert(0.25).unwrap(), 0.75);
        assert_eq!(g.invert(0.0).unwrap(), 0.0);
        let total = m.integrate(&IntervalSet::interval(0.0, 1.0).unwrap(), 1e-12).unwrap();
        assert_eq!(total, 1.0);
        assert!(matches!(g.op(1.0, 0.5), Err(Error::PointOutsideCarrier(_))));
    }

    #[test]
    fn circle_is_exactly_associative_on_dyadics() {
        let dyadic: Vec<f64> = (0..64).map(|k| k as f64 / 64.0).collect();
        for &x in &dyadic {
            for &y in dyadic.iter().step_by(3) {
                for &z in dyadic.iter().step_by(7) {
                    let l = Circle::add(Circle::add(x, y), z);
                    let r = Circle::add(x, Circle::add(y, z));
                    assert_eq!(l, r);
                }
            }
        }
    }

    #[test]
    fn real_n_basics() {
        let (g, _) = base_real_n(2).unwrap();
        assert_eq!(g.op(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), vec![3.0, 3.0]);
        assert_eq!(g.metric(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let (g3, _) = base_real_n(3).unwrap();
        assert_eq!(g3.identity(), vec![0.0; 3]);
        assert!(matches!(base_real_n(0), Err(Error::InvalidDimension(0))));
        assert!(matches!(
            g.op(&[1.0], &[2.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn base_metrics_satisfy_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let scalars: [Arc<dyn ScalarGroup>; 2] = [Arc::new(RealLine), Arc::new(Circle)];
        for g in &scalars {
            let c = ScalarGroup::carrier(g);
            for _ in 0..1000 {
                let (x, y, z) = (c.sample_scalar(&mut rng), c.sample_scalar(&mut rng), c.sample_scalar(&mut rng));
                let lhs = g.metric(x, z).unwrap();
                let rhs = g.metric(x, y).unwrap() + g.metric(y, z).unwrap();
                assert!(lhs <= rhs + 1e-15);
            }
        }
        let g = RealN::new(4).unwrap();
        for _ in 0..1000 {
            let (x, y, z) = (g.carrier().sample(&mut rng), g.carrier().sample(&mut rng), g.carrier().sample(&mut rng));
            assert!(g.metric(&x, &z).unwrap() <= g.metric(&x, &y).unwrap() + g.metric(&y, &z).unwrap() + 1e-12);
        }
    }

    #[test]
    fn base_measures_are_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (line, lebesgue) = base_real_line();
        let (circle, arc_length) = base_circle();
        for _ in 0..200 {
            let a: f64 = rng.random_range(-5.0..5.0);
            let s = IntervalSet::interval(a, a + rng.random_range(0.0..3.0)).unwrap();
            let g: f64 = rng.random_range(-10.0..10.0);
            for side in [Side::Left, Side::Right] {
                let t = line.translate_set(g, &s, side).unwrap();
                assert!((t.length() - s.length()).abs() <= 1e-10);
                assert!(
                    (lebesgue.integrate(&t, 1e-12).unwrap() - lebesgue.integrate(&s, 1e-12).unwrap()).abs()
                        <= 1e-10
                );
            }
            let a: f64 = rng.random_range(0.0..0.9);
            let s = IntervalSet::interval(a, rng.random_range(a..1.0)).unwrap();
            let t = circle.translate_set(rng.random_range(0.0..1.0), &s, Side::Left).unwrap();
            assert!((t.length() - s.length()).abs() <= 1e-10);
            assert!(
                (arc_length.integrate(&t, 1e-12).unwrap() - arc_length.integrate(&s, 1e-12).unwrap()).abs()
                    <= 1e-10
            );
        }
    }

    #[test]
    fn circle_rotation_wraps() {
        let s = IntervalSet::interval(0.5, 0.75).unwrap();
        let t = Circle.translate_set(0.75, &s, Side::Left).unwrap();
        assert_eq!(t.pieces(), &[(0.25, 0.5)]);
        let s = IntervalSet::interval(0.5, 0.9).unwrap();
        let t = Circle.translate_set(0.25, &s, Side::Left).unwrap();
        assert_eq!(t.pieces().len(), 2);
    }
}
