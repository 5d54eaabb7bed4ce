//! Group structures carried across a bijection, with their pushforward
//! measures, and the worked examples as built-ins.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Dual, Params};
use crate::groups::{
    base_real_line, check_dim, euclidean, Carrier, Compactness, Group, GroupSpec, LieGroup, Point, ScalarGroup, Side,
    Tags,
};
use crate::measure::{pushforward, Bijection1D, IntervalSet, MassClass, MeasureSpec};

/// `x ⊙_f y = f(f⁻¹x ⊙ f⁻¹y)` on the codomain of `f`.
#[derive(Debug, Clone)]
pub struct Transported {
    base: Arc<dyn ScalarGroup>,
    map: Bijection1D,
    identity: f64,
}

impl Transported {
    pub fn new(base: Arc<dyn ScalarGroup>, map: Bijection1D) -> Result<Self> {
        if base.carrier().bounds() != map.domain.bounds() {
            return Err(Error::Construction(format!(
                "{} is defined on {}, but the base group lives on {}",
                map.label,
                map.domain,
                base.carrier()
            )));
        }
        let identity = map.forward(base.identity())?;
        map.codomain.ensure(identity)?;
        Ok(Self { base, map, identity })
    }

    pub fn map(&self) -> &Bijection1D {
        &self.map
    }

    pub fn base(&self) -> &Arc<dyn ScalarGroup> {
        &self.base
    }

    fn pull(&self, x: f64) -> Result<f64> {
        self.map.codomain.ensure(x)?;
        self.map.inverse(x)
    }

    fn push(&self, x: f64) -> Result<f64> {
        self.map.codomain.ensure(self.map.forward(x)?)
    }
}

impl ScalarGroup for Transported {
    fn name(&self) -> String {
        format!("{} via {}", self.base.name(), self.map.label)
    }
    fn carrier(&self) -> Carrier {
        self.map.codomain
    }
    fn tags(&self) -> Tags {
        self.base.tags()
    }
    fn identity(&self) -> f64 {
        self.identity
    }
    fn op(&self, x: f64, y: f64) -> Result<f64> {
        let (a, b) = (self.pull(x)?, self.pull(y)?);
        self.push(self.base.op(a, b)?)
    }
    fn invert(&self, x: f64) -> Result<f64> {
        self.push(self.base.invert(self.pull(x)?)?)
    }
    fn metric(&self, x: f64, y: f64) -> Result<f64> {
        self.base.metric(self.pull(x)?, self.pull(y)?)
    }
    fn translate_set(&self, g: f64, s: &IntervalSet, side: Side) -> Result<IntervalSet> {
        let pre = self.map.preimage_set(s)?;
        let moved = self.base.translate_set(self.pull(g)?, &pre, side)?;
        self.map.image_set(&moved)
    }
}

/// The concrete map a transport was built from.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Identity,
    Map {
        forward: String,
        inverse: String,
        params: Params,
        #[serde(skip)]
        bijection: Bijection1D,
    },
    Shear {
        n: usize,
    },
}

impl Witness {
    fn of(f: &Bijection1D) -> Self {
        Witness::Map {
            forward: f.forward.to_string(),
            inverse: f.inverse.to_string(),
            params: f.params.clone(),
            bijection: f.clone(),
        }
    }

    pub fn bijection(&self) -> Option<&Bijection1D> {
        match self {
            Witness::Map { bijection, .. } => Some(bijection),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransportResult {
    pub group: GroupSpec,
    /// The pushforward of `base_measure`.
    pub measure: MeasureSpec,
    pub base_measure: MeasureSpec,
    pub witness: Witness,
    pub provenance: String,
}

pub fn transport_group(base: Arc<dyn ScalarGroup>, f: &Bijection1D) -> Result<Arc<dyn ScalarGroup>> {
    Ok(Arc::new(Transported::new(base, f.clone())?))
}

pub fn transport_measure(base_measure: &MeasureSpec, f: &Bijection1D) -> Result<MeasureSpec> {
    pushforward(base_measure, f)
}

/// Transport a scalar group and its Haar measure along `f`.
pub fn transport(base: Arc<dyn ScalarGroup>, base_measure: MeasureSpec, f: &Bijection1D) -> Result<TransportResult> {
    let provenance = format!("{} transported by {}", base.name(), f);
    let group = transport_group(base, f)?;
    let measure = transport_measure(&base_measure, f)?;
    Ok(TransportResult {
        group: GroupSpec::Scalar(group),
        measure,
        base_measure,
        witness: Witness::of(f),
        provenance,
    })
}

fn open(c: f64, x: f64) -> Result<f64> {
    if x > -c && x < c {
        Ok(x)
    } else {
        Err(Error::PointOutsideCarrier(x))
    }
}

/// `(−c, c)` with `x ⊕ y = (x+y)/(1+xy/c²)`.
#[derive(Debug, Clone, Copy)]
pub struct VelocityGroup {
    pub c: f64,
}

impl VelocityGroup {
    fn rapidity(&self, x: f64) -> f64 {
        2.0 * (x / self.c).atanh()
    }
}

impl ScalarGroup for VelocityGroup {
    fn name(&self) -> String {
        format!("velocity:{}", self.c)
    }
    fn carrier(&self) -> Carrier {
        Carrier::OpenInterval { lo: -self.c, hi: self.c }
    }
    fn tags(&self) -> Tags {
        Tags::abelian(Compactness::LocallyCompactNoncompact)
    }
    fn identity(&self) -> f64 {
        0.0
    }
    fn op(&self, x: f64, y: f64) -> Result<f64> {
        let c = self.c;
        open(c, x)?;
        open(c, y)?;
        open(c, (x + y) / (1.0 + (x / c) * (y / c)))
    }
    fn invert(&self, x: f64) -> Result<f64> {
        Ok(-open(self.c, x)?)
    }
    fn metric(&self, x: f64, y: f64) -> Result<f64> {
        open(self.c, x)?;
        open(self.c, y)?;
        Ok((self.rapidity(x) - self.rapidity(y)).abs())
    }
}

/// `(0, ∞)` under multiplication with `|ln x − ln y|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogGroup;

impl ScalarGroup for LogGroup {
    fn name(&self) -> String {
        "log".into()
    }
    fn carrier(&self) -> Carrier {
        Carrier::HalfLine
    }
    fn tags(&self) -> Tags {
        Tags::abelian(Compactness::LocallyCompactNoncompact)
    }
    fn identity(&self) -> f64 {
        1.0
    }
    fn op(&self, x: f64, y: f64) -> Result<f64> {
        Carrier::HalfLine.ensure(x)?;
        Carrier::HalfLine.ensure(y)?;
        Carrier::HalfLine.ensure(x * y)
    }
    fn invert(&self, x: f64) -> Result<f64> {
        Carrier::HalfLine.ensure(1.0 / Carrier::HalfLine.ensure(x)?)
    }
    fn metric(&self, x: f64, y: f64) -> Result<f64> {
        Carrier::HalfLine.ensure(x)?;
        Carrier::HalfLine.ensure(y)?;
        Ok((x.ln() - y.ln()).abs())
    }
}

/// `(−c, c)` with `x ⊕ y = (2c/π)·atan(tan(πx/2c) + tan(πy/2c))`.
#[derive(Debug, Clone, Copy)]
pub struct ArctanGroup {
    pub c: f64,
}

impl ArctanGroup {
    fn chart(&self, x: f64) -> Result<f64> {
        open(self.c, x)?;
        Ok((std::f64::consts::FRAC_PI_2 * x / self.c).tan())
    }

    fn unchart(&self, t: f64) -> Result<f64> {
        open(self.c, self.c * t.atan() / std::f64::consts::FRAC_PI_2)
    }
}

impl ScalarGroup for ArctanGroup {
    fn name(&self) -> String {
        format!("arctan:{}", self.c)
    }
    fn carrier(&self) -> Carrier {
        Carrier::OpenInterval { lo: -self.c, hi: self.c }
    }
    fn tags(&self) -> Tags {
        Tags::abelian(Compactness::LocallyCompactNoncompact)
    }
    fn identity(&self) -> f64 {
        0.0
    }
    fn op(&self, x: f64, y: f64) -> Result<f64> {
        self.unchart(self.chart(x)? + self.chart(y)?)
    }
    fn invert(&self, x: f64) -> Result<f64> {
        Ok(-open(self.c, x)?)
    }
    fn metric(&self, x: f64, y: f64) -> Result<f64> {
        Ok((self.chart(x)? - self.chart(y)?).abs())
    }
}

pub fn velocity_group(c: f64) -> Result<TransportResult> {
    let f = Bijection1D::velocity(c)?;
    let carrier = f.codomain;
    // Lebesgue scaled by c/2 pushes forward to exactly c²/(c²−t²).
    let base_measure = MeasureSpec::scaled_lebesgue(Carrier::FullLine, c / 2.0);
    let mut measure = MeasureSpec::from_expr(
        "c^2/(c^2-x^2)",
        Params::from([("c".to_string(), c)]),
        carrier,
        MassClass::SigmaFiniteNonfinite,
    )?;
    measure.label = format!("c²/(c²−t²) dt, c = {c}");
    Ok(TransportResult {
        group: GroupSpec::Scalar(Arc::new(VelocityGroup { c })),
        measure,
        base_measure,
        witness: Witness::of(&f),
        provenance: format!("real-line transported by {f}"),
    })
}

pub fn log_group() -> Result<TransportResult> {
    let f = Bijection1D::exp();
    let mut measure = MeasureSpec::from_expr("1/x", Params::new(), Carrier::HalfLine, MassClass::SigmaFiniteNonfinite)?;
    measure.label = "dx/x".into();
    Ok(TransportResult {
        group: GroupSpec::Scalar(Arc::new(LogGroup)),
        measure,
        base_measure: MeasureSpec::lebesgue(Carrier::FullLine),
        witness: Witness::of(&f),
        provenance: format!("real-line transported by {f}"),
    })
}

pub fn arctan_group(c: f64) -> Result<TransportResult> {
    let f = Bijection1D::arctan(c)?;
    let base_measure = MeasureSpec::lebesgue(Carrier::FullLine);
    let measure = pushforward(&base_measure, &f)?;
    Ok(TransportResult {
        group: GroupSpec::Scalar(Arc::new(ArctanGroup { c })),
        measure,
        base_measure,
        witness: Witness::of(&f),
        provenance: format!("real-line transported by {f}"),
    })
}

/// The identity transport of the real line.
pub fn identity_transport() -> Result<TransportResult> {
    let (line, lebesgue) = base_real_line();
    transport(line, lebesgue, &Bijection1D::identity())
}

/// `f(x) = (x₁, x₁² + x₂, x₃, …, xₙ)`.
fn shear<T: Copy + Add<Output = T> + Mul<Output = T>>(x: &[T]) -> Vec<T> {
    let mut out = x.to_vec();
    out[1] = x[0] * x[0] + x[1];
    out
}

fn unshear<T: Copy + Sub<Output = T> + Mul<Output = T>>(x: &[T]) -> Vec<T> {
    let mut out = x.to_vec();
    out[1] = x[1] - x[0] * x[0];
    out
}

fn shear_op<T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T>>(x: &[T], y: &[T]) -> Vec<T> {
    let (u, v) = (unshear(x), unshear(y));
    let sum: Vec<T> = u.iter().zip(&v).map(|(&a, &b)| a + b).collect();
    shear(&sum)
}

/// `ℝⁿ` (n ≥ 3) with addition transported by the quadratic shear.
#[derive(Debug, Clone, Copy)]
pub struct ShearGroup {
    n: usize,
}

impl ShearGroup {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        check_dim(self.n, p.len())
    }
}

impl Group for ShearGroup {
    fn name(&self) -> String {
        format!("shear:{}", self.n)
    }
    fn carrier(&self) -> Carrier {
        Carrier::Product { dim: self.n }
    }
    fn tags(&self) -> Tags {
        Tags::abelian(Compactness::LocallyCompactNoncompact)
    }
    fn identity(&self) -> Point {
        vec![0.0; self.n]
    }
    fn op(&self, x: &[f64], y: &[f64]) -> Result<Point> {
        self.check(x)?;
        self.check(y)?;
        Ok(shear_op(x, y))
    }
    fn invert(&self, x: &[f64]) -> Result<Point> {
        self.check(x)?;
        let neg: Vec<f64> = unshear(x).iter().map(|a| -a).collect();
        Ok(shear(&neg))
    }
    fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(euclidean(&unshear(x), &unshear(y)))
    }
}

impl LieGroup for ShearGroup {
    fn translate_dual(&self, g: &[f64], x: &[Dual]) -> Result<Vec<Dual>> {
        self.check(g)?;
        check_dim(self.n, x.len())?;
        let g: Vec<Dual> = g.iter().map(|&a| Dual::constant(a)).collect();
        Ok(shear_op(&g, x))
    }
}

pub fn shear_group(n: usize) -> Result<TransportResult> {
    let g = ShearGroup::new(n)?;
    let lebesgue = MeasureSpec::lebesgue(Carrier::Product { dim: n });
    Ok(TransportResult {
        group: GroupSpec::Vector(Arc::new(g)),
        measure: lebesgue.clone(),
        base_measure: lebesgue,
        witness: Witness::Shear { n },
        provenance: format!("real-n:{n} transported by (x₁, x₁²+x₂, x₃, …)"),
    })
}

/// Outcome of searching for an ordering along which the metric is additive.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// Indices `h` with `ρ(a_{h(1)}, a_{h(n)}) = Σ ρ(a_{h(k)}, a_{h(k+1)})`.
    Chain { order: Vec<usize>, residual: f64 },
    /// No tried ordering closes the chain; `best` is the smallest gap seen.
    Refuted { tried: usize, best: f64 },
}

pub const CHAIN_TOL: f64 = 1e-9;
const BRUTE_FORCE_MAX: usize = 8;

fn chain_gap<M>(metric: &M, points: &[Point], order: &[usize]) -> Result<f64>
where
    M: Fn(&[f64], &[f64]) -> Result<f64>,
{
    let (first, last) = (order[0], order[order.len() - 1]);
    let direct = metric(&points[first], &points[last])?;
    let mut sum = 0.0;
    for w in order.windows(2) {
        sum += metric(&points[w[0]], &points[w[1]])?;
    }
    Ok((direct - sum).abs())
}

/// Look for an ordering of `points` along which `metric` is additive.
///
/// Tries the order induced by `key` and its reverse, then the order by
/// distance from one end of a diameter, then every permutation for small
/// inputs.
pub fn one_dimensionality_certificate<M>(
    metric: M,
    points: &[Point],
    key: Option<&dyn Fn(&[f64]) -> Result<f64>>,
) -> Result<Certificate>
where
    M: Fn(&[f64], &[f64]) -> Result<f64>,
{
    let n = points.len();
    if n < 2 {
        return Ok(Certificate::Chain { order: (0..n).collect(), residual: 0.0 });
    }
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    if let Some(key) = key {
        let keys = points.iter().map(|p| key(p)).collect::<Result<Vec<f64>>>()?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
        candidates.push(order.iter().rev().copied().collect());
        candidates.push(order);
    }
    let mut far = (0, 1, f64::NEG_INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let d = metric(&points[i], &points[j])?;
            if d > far.2 {
                far = (i, j, d);
            }
        }
    }
    let from_end = (0..n).map(|k| metric(&points[far.0], &points[k])).collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| from_end[a].total_cmp(&from_end[b]));
    candidates.push(order);

    let mut best = f64::INFINITY;
    let mut tried = 0;
    // Candidates are popped from the back: key order, its reverse, diameter order.
    candidates.reverse();
    for order in &candidates {
        tried += 1;
        let gap = chain_gap(&metric, points, order)?;
        if gap <= CHAIN_TOL {
            return Ok(Certificate::Chain { order: order.clone(), residual: gap });
        }
        best = best.min(gap);
    }
    if n <= BRUTE_FORCE_MAX {
        let mut order: Vec<usize> = (0..n).collect();
        loop {
            tried += 1;
            let gap = chain_gap(&metric, points, &order)?;
            if gap <= CHAIN_TOL {
                return Ok(Certificate::Chain { order, residual: gap });
            }
            best = best.min(gap);
            if !next_permutation(&mut order) {
                break;
            }
        }
    }
    Ok(Certificate::Refuted { tried, best })
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("a larger element exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Certificate for a one-dimensional group, keyed by the chart when known.
pub fn scalar_certificate(group: &dyn ScalarGroup, chart: Option<&Bijection1D>, points: &[f64]) -> Result<Certificate> {
    let pts: Vec<Point> = points.iter().map(|&x| vec![x]).collect();
    let metric = |a: &[f64], b: &[f64]| group.metric(a[0], b[0]);
    match chart {
        Some(f) => {
            let key = |p: &[f64]| f.inverse(p[0]);
            one_dimensionality_certificate(metric, &pts, Some(&key))
        }
        None => {
            let key = |p: &[f64]| Ok(p[0]);
            one_dimensionality_certificate(metric, &pts, Some(&key))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{base_circle, Circle, RealLine};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn scalar(t: &TransportResult) -> &Arc<dyn ScalarGroup> {
        t.group.as_scalar().unwrap()
    }

    #[test]
    fn exp_transport_multiplies() {
        let (line, lebesgue) = base_real_line();
        let t = transport(line, lebesgue, &Bijection1D::exp()).unwrap();
        let g = scalar(&t);
        assert!((g.op(2.0, 3.0).unwrap() - 6.0).abs() < 1e-14);
        assert_eq!(g.identity(), 1.0);
        assert!((g.invert(4.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((g.metric(1.0, E).unwrap() - 1.0).abs() < 1e-15);
        assert!((t.measure.integrate(&IntervalSet::interval(1.0, E).unwrap(), 1e-10).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_transport_is_the_line() {
        let t = identity_transport().unwrap();
        let g = scalar(&t);
        assert_eq!(g.op(2.0, 3.5).unwrap(), 5.5);
        assert_eq!(g.metric(-1.0, 2.0).unwrap(), 3.0);
        let s = IntervalSet::interval(-1.0, 4.0).unwrap();
        assert_eq!(t.measure.integrate(&s, 1e-10).unwrap(), 5.0);
        assert_eq!(g.tags(), RealLine.tags());
    }

    #[test]
    fn velocity_examples() {
        let t = velocity_group(1.0).unwrap();
        let g = scalar(&t);
        assert_eq!(g.op(0.0, 0.3).unwrap(), 0.3);
        assert!((g.op(0.5, 0.5).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(g.invert(0.4).unwrap(), -0.4);
        let generic = Transported::new(Arc::new(RealLine), Bijection1D::velocity(1.0).unwrap()).unwrap();
        assert!((generic.op(0.5, 0.5).unwrap() - 0.8).abs() < 1e-12);
        // f(−f⁻¹(v)) = −v.
        assert!((generic.invert(0.4).unwrap() + 0.4).abs() < 1e-15);
        assert!(matches!(g.op(1.0, 0.0), Err(Error::PointOutsideCarrier(_))));
    }

    #[test]
    fn closed_forms_match_generic_transport() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let line: Arc<dyn ScalarGroup> = Arc::new(RealLine);
        let cases: Vec<(Arc<dyn ScalarGroup>, Bijection1D)> = vec![
            (Arc::new(VelocityGroup { c: 2.0 }), Bijection1D::velocity(2.0).unwrap()),
            (Arc::new(LogGroup), Bijection1D::exp()),
            (Arc::new(ArctanGroup { c: 1.5 }), Bijection1D::arctan(1.5).unwrap()),
        ];
        for (closed, f) in cases {
            let generic = Transported::new(line.clone(), f).unwrap();
            for _ in 0..1000 {
                let x = closed.carrier().sample_scalar(&mut rng);
                let y = closed.carrier().sample_scalar(&mut rng);
                let (a, b) = (closed.op(x, y).unwrap(), generic.op(x, y).unwrap());
                assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0), "{}: {x} ⊙ {y}: {a} vs {b}", closed.name());
            }
        }
    }

    #[test]
    fn metric_is_transported_isometrically() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for f in [Bijection1D::velocity(1.0).unwrap(), Bijection1D::arctan(1.0).unwrap(), Bijection1D::exp()] {
            let g = Transported::new(Arc::new(RealLine), f.clone()).unwrap();
            for _ in 0..200 {
                let a: f64 = rng.random_range(-3.0..3.0);
                let b: f64 = rng.random_range(-3.0..3.0);
                let d = g.metric(f.forward(a).unwrap(), f.forward(b).unwrap()).unwrap();
                assert!((d - (a - b).abs()).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())), "{}", f.label);
            }
        }
    }

    #[test]
    fn arctan_example() {
        let t = arctan_group(1.0).unwrap();
        let g = scalar(&t);
        let expect = 2.0 / PI * (2.0 * (PI / 8.0).tan()).atan();
        assert!((g.op(0.25, 0.25).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.440436).abs() < 1e-6);
        assert_eq!(g.op(0.0, 0.7).unwrap(), 0.7);
        assert!(g.op(0.6, g.invert(0.6).unwrap()).unwrap().abs() < 1e-15);
        // Density of the pushforward is (π/2c)·sec²(πx/2c).
        let want = PI / 2.0 / (PI / 8.0).cos().powi(2);
        assert!((t.measure.density(0.25).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn shear_examples() {
        let t = shear_group(5).unwrap();
        let g = t.group.as_group();
        assert_eq!(g.op(&[1.0; 5], &[2.0; 5]).unwrap(), vec![3.0, 7.0, 3.0, 3.0, 3.0]);
        let y = vec![0.3, -1.2, 4.0, 0.5, 2.0];
        assert_eq!(g.op(&[0.0; 5], &y).unwrap(), y);
        let g3 = ShearGroup::new(3).unwrap();
        let p = g3.op(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p[1] - 0.0, 2.0);
        assert!(matches!(ShearGroup::new(2), Err(Error::InvalidDimension(2))));
        assert!(matches!(g3.op(&[1.0; 4], &[1.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn shear_second_component_is_cross_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = ShearGroup::new(4).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = g.op(&x, &y).unwrap();
            let want = x[1] + y[1] + 2.0 * x[0] * y[0];
            assert!((p[1] - want).abs() <= 1e-12 * want.abs().max(1.0));
            assert_eq!(p[0], x[0] + y[0]);
            assert_eq!(p[3], x[3] + y[3]);
            let inv = g.invert(&x).unwrap();
            let e = g.op(&x, &inv).unwrap();
            assert!(e.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn transported_circle_rotates_through_the_chart() {
        let (circle, _) = base_circle();
        let f = Bijection1D::from_strings(
            "x^2",
            "sqrt(x)",
            Params::new(),
            Carrier::Circle,
            Carrier::half_open(0.0, 1.0).unwrap(),
            crate::measure::Monotone::Increasing,
        )
        .unwrap();
        let g = Transported::new(circle, f).unwrap();
        let s = IntervalSet::interval(0.25, 0.5625).unwrap(); // [0.5, 0.75) upstairs
        let t = g.translate_set(0.25, &s, Side::Left).unwrap(); // rotate by 0.5
        let want = Circle::rotate_set(0.5, &IntervalSet::interval(0.5, 0.75).unwrap()).unwrap();
        let got: Vec<(f64, f64)> = t.pieces().iter().map(|&(a, b)| (a.sqrt(), b.sqrt())).collect();
        assert_eq!(got, want.pieces());
    }

    #[test]
    fn transport_rejects_mismatched_domain() {
        let (circle, _) = base_circle();
        assert!(matches!(Transported::new(circle, Bijection1D::exp()), Err(Error::Construction(_))));
    }

    #[test]
    fn certificate_examples() {
        let line = RealLine;
        match scalar_certificate(&line, None, &[0.5, 0.1, 0.3]).unwrap() {
            Certificate::Chain { order, .. } => {
                let pts: Vec<f64> = order.iter().map(|&i| [0.5, 0.1, 0.3][i]).collect();
                assert!(pts == [0.1, 0.3, 0.5] || pts == [0.5, 0.3, 0.1]);
            }
            other => panic!("{other:?}"),
        }
        let pts = [1.0, E, E.powi(3)];
        assert!(matches!(scalar_certificate(&LogGroup, None, &pts).unwrap(), Certificate::Chain { .. }));
        let plane = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let c = one_dimensionality_certificate(|a, b| Ok(euclidean(a, b)), &plane, None).unwrap();
        assert!(matches!(c, Certificate::Refuted { tried: 7, .. }), "{c:?}");
    }

    #[test]
    fn certificate_without_key_uses_diameter_order() {
        let pts: Vec<Point> = [3.0, -1.0, 7.5, 0.25].iter().map(|&x| vec![x]).collect();
        let c = one_dimensionality_certificate(|a, b| Ok((a[0] - b[0]).abs()), &pts, None).unwrap();
        assert!(matches!(c, Certificate::Chain { .. }));
    }

    #[test]
    fn permutations_are_exhaustive() {
        let mut v = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut v) {
            count += 1;
        }
        assert_eq!(count, 24);
    }
}
