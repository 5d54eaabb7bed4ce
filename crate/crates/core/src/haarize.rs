//! Turning a diffused measure on the line into the Haar measure of a
//! constructed group.
//!
//! A probability measure `μ` becomes the Haar measure of the compact group
//! obtained by pulling the circle back along its cdf. A σ-finite measure is
//! first normalized part by part to a probability `μ₁`, matched against the
//! same construction applied to Lebesgue measure, and the group of the line
//! is pulled back along the resulting isomorphism.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{Carrier, Circle, Compactness, ScalarGroup, Side, Tags};
use crate::measure::{numeric_quantile, Density, DensityFn, Distribution, IntervalSet, MassClass, MeasureSpec, QUANTILE_TOL};

/// Countable escape sequence `a₀, a₁, …` used to make a cdf onto `(0,1)`
/// into a bijection onto `[0,1)`: `a₀ ↦ 0` and `aₙ ↦ F(aₙ₋₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HotelShift {
    /// `aₙ = origin + n·step`.
    Arithmetic { origin: f64, step: f64 },
    /// `aₙ = lo + (hi − lo)(1 − 2^{−(n+1)})`, for bounded supports.
    Geometric { lo: f64, hi: f64 },
}

impl HotelShift {
    /// `aₙ = n`.
    pub fn integers() -> Self {
        HotelShift::Arithmetic { origin: 0.0, step: 1.0 }
    }

    /// A sequence inside `support`: integers on the line, integer steps
    /// from the finite end of a ray, halving steps on a bounded interval.
    pub fn default_for(support: Carrier) -> Self {
        let (lo, hi) = support.bounds();
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => Self::integers(),
            (true, false) => HotelShift::Arithmetic { origin: lo + 1.0, step: 1.0 },
            (false, true) => HotelShift::Arithmetic { origin: hi - 1.0, step: -1.0 },
            (true, true) => HotelShift::Geometric { lo, hi },
        }
    }

    pub fn point(&self, n: usize) -> f64 {
        match *self {
            HotelShift::Arithmetic { origin, step } => origin + n as f64 * step,
            HotelShift::Geometric { lo, hi } => lo + (hi - lo) * (1.0 - 0.5f64.powi(n as i32 + 1)),
        }
    }

    fn nearest(&self, x: f64) -> Option<usize> {
        let n = match *self {
            HotelShift::Arithmetic { origin, step } => ((x - origin) / step).round(),
            HotelShift::Geometric { lo, hi } => (-(1.0 - (x - lo) / (hi - lo)).log2() - 1.0).round(),
        };
        (n >= 0.0 && n.is_finite() && n < 1e15).then_some(n as usize)
    }

    /// `n` with `aₙ = x` exactly.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let n = self.nearest(x)?;
        (n.saturating_sub(1)..=n + 1).find(|&k| self.point(k) == x)
    }

    fn validate(&self, support: Carrier) -> Result<()> {
        if let HotelShift::Arithmetic { step, .. } = self {
            if *step == 0.0 || !step.is_finite() {
                return Err(Error::InvalidArgument("escape step must be finite and nonzero".into()));
            }
        }
        // Geometric points are distinct in f64 only up to about n = 52.
        let (lo, hi) = support.bounds();
        for n in 0..48 {
            let a = self.point(n);
            if !(a > lo && a < hi) {
                return Err(Error::InvalidArgument(format!("escape point a{n} = {a} is not inside {support}")));
            }
        }
        let heads_out = match *self {
            HotelShift::Arithmetic { step, .. } => (step > 0.0 && hi.is_finite()) || (step < 0.0 && lo.is_finite()),
            HotelShift::Geometric { hi: h, .. } => h > hi,
        };
        if heads_out {
            return Err(Error::InvalidArgument(format!("escape sequence leaves {support}")));
        }
        Ok(())
    }
}

/// Sampled check that the cdf strictly increases wherever it lies in `(0,1)`.
pub fn check_strictly_increasing(d: &dyn Distribution) -> Result<()> {
    let support = d.support();
    let (lo, hi) = support.bounds();
    let at = |t: f64| -> f64 {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => lo + t * (hi - lo),
            (true, false) => lo + t / (1.0 - t),
            (false, true) => hi - (1.0 - t) / t,
            (false, false) => (t - 0.5) / (t * (1.0 - t)),
        }
    };
    const N: usize = 1024;
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..N {
        let x = at(i as f64 / N as f64);
        let f = d.cdf(x);
        if !(0.0..=1.0).contains(&f) || f.is_nan() {
            return Err(Error::CdfNotStrictlyIncreasing(format!("cdf({x}) = {f} is not a probability")));
        }
        if let Some((px, pf)) = prev {
            // A tie is a plateau when the density vanishes across it, or when
            // the density claims more mass than rounding can hide.
            let (p0, p1) = (d.pdf(px), d.pdf(x));
            let tie = f == pf && f > 0.0 && f < 1.0;
            let plateau = tie && ((p0 == 0.0 && p1 == 0.0) || 0.5 * (p0 + p1) * (x - px) > 1e-14);
            if f < pf || plateau {
                return Err(Error::CdfNotStrictlyIncreasing(format!("cdf is flat or decreasing on [{px}, {x}]")));
            }
        }
        prev = Some((x, f));
    }
    if d.closed_left() && d.cdf(lo) != 0.0 {
        return Err(Error::CdfNotStrictlyIncreasing(format!("cdf({lo}) is not 0 at the closed end")));
    }
    Ok(())
}

/// A diffused probability on the line made into the Haar measure of the
/// compact group `x ⊙ y = φ⁻¹((φx + φy) mod 1)`.
#[derive(Debug, Clone)]
pub struct HaarizedGroup {
    dist: Arc<dyn Distribution>,
    shift: Option<HotelShift>,
    identity: f64,
}

impl HaarizedGroup {
    pub fn distribution(&self) -> &Arc<dyn Distribution> {
        &self.dist
    }

    pub fn shift(&self) -> Option<HotelShift> {
        self.shift
    }

    /// The Haar measure: the input distribution itself.
    pub fn measure(&self) -> MeasureSpec {
        MeasureSpec::from_distribution(self.dist.clone())
    }

    /// The corrected cdf, a bijection of the support onto `[0,1)`.
    pub fn phi(&self, x: f64) -> Result<f64> {
        let support = self.dist.support();
        if !support.contains(x) {
            return Err(Error::PointOutsideCarrier(x));
        }
        if let Some(shift) = self.shift {
            match shift.index_of(x) {
                Some(0) => return Ok(0.0),
                Some(n) => return Ok(self.dist.cdf(shift.point(n - 1))),
                None => {}
            }
        }
        let u = self.dist.cdf(x);
        if u >= 1.0 {
            return Err(Error::PointOutsideCarrier(x));
        }
        Ok(u)
    }

    pub fn phi_inv(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        if u == 0.0 {
            return Ok(self.identity);
        }
        let x = self.dist.quantile(u)?;
        if let Some(shift) = self.shift {
            if let Some(m) = shift.nearest(x) {
                for k in m.saturating_sub(1)..=m + 1 {
                    if self.dist.cdf(shift.point(k)) == u {
                        return Ok(shift.point(k + 1));
                    }
                }
            }
        }
        Ok(x)
    }

    /// `φ(s)` as a subset of `[0,1)`, up to the countably many escape points.
    pub fn image(&self, s: &IntervalSet) -> Result<IntervalSet> {
        let (lo, hi) = self.dist.support().bounds();
        let f = |x: f64| if x <= lo { 0.0 } else if x >= hi { 1.0 } else { self.dist.cdf(x) };
        IntervalSet::from_pieces(s.pieces().iter().map(|&(a, b)| (f(a), f(b))).collect())
    }

    /// `φ⁻¹(t)` for `t ⊆ [0,1)`, up to the escape points.
    pub fn preimage(&self, t: &IntervalSet) -> Result<IntervalSet> {
        let (lo, hi) = self.dist.support().bounds();
        let q = |u: f64| -> Result<f64> {
            if u <= 0.0 {
                Ok(lo)
            } else if u >= 1.0 {
                Ok(hi)
            } else {
                self.dist.quantile(u)
            }
        };
        let mut pieces = Vec::with_capacity(t.pieces().len());
        for &(a, b) in t.pieces() {
            pieces.push((q(a)?, q(b)?));
        }
        IntervalSet::from_pieces(pieces)
    }
}

impl ScalarGroup for HaarizedGroup {
    fn name(&self) -> String {
        format!("haarized {}", self.dist.name())
    }
    fn carrier(&self) -> Carrier {
        self.dist.support()
    }
    fn tags(&self) -> Tags {
        Tags::abelian(Compactness::Compact)
    }
    fn identity(&self) -> f64 {
        self.identity
    }
    fn op(&self, x: f64, y: f64) -> Result<f64> {
        self.phi_inv(Circle::add(self.phi(x)?, self.phi(y)?))
    }
    fn invert(&self, x: f64) -> Result<f64> {
        self.phi_inv(Circle::negate(self.phi(x)?))
    }
    fn metric(&self, x: f64, y: f64) -> Result<f64> {
        Ok(Circle::arc(self.phi(x)?, self.phi(y)?))
    }
    fn translate_set(&self, g: f64, s: &IntervalSet, _side: Side) -> Result<IntervalSet> {
        if !self.carrier().contains_set(s) {
            return Err(Error::SetOutsideSupport(s.to_string()));
        }
        let rotated = Circle::rotate_set(self.phi(g)?, &self.image(s)?)?;
        self.preimage(&rotated)
    }
}

/// Build the compact group whose Haar measure is `d`. Distributions whose
/// cdf already reaches 0 inside the support need no escape sequence; any
/// `shift` passed for them is ignored.
pub fn haarize_probability(d: Arc<dyn Distribution>, shift: Option<HotelShift>) -> Result<HaarizedGroup> {
    check_strictly_increasing(d.as_ref())?;
    let support = d.support();
    let (shift, identity) = if d.closed_left() {
        (None, support.bounds().0)
    } else {
        let s = shift.unwrap_or_else(|| HotelShift::default_for(support));
        s.validate(support)?;
        (Some(s), s.point(0))
    };
    Ok(HaarizedGroup { dist: d, shift, identity })
}

/// Partition of a carrier into countably many parts `Y₁, Y₂, …`.
#[derive(Debug, Clone, PartialEq)]
pub enum Partition {
    /// Unit intervals `[j, j+1)` of the line, enumerated from the center
    /// outward: `k = 1, 2, 3, 4, 5, …` ↔ `j = 0, 1, −1, 2, −2, …`.
    Unit,
    Explicit(Vec<IntervalSet>),
}

/// Tail bound target `Σ_{k>K} 2^{−k} < SERIES_TAIL`.
pub const SERIES_TAIL: f64 = 1e-12;

/// Smallest `K` with `2^{−K} < SERIES_TAIL`.
pub fn truncation_index() -> usize {
    let mut k = 0;
    while 0.5f64.powi(k as i32) >= SERIES_TAIL {
        k += 1;
    }
    k
}

impl Partition {
    pub fn explicit(parts: Vec<IntervalSet>, carrier: Carrier) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::PartitionMismatch("no parts".into()));
        }
        let mut union = IntervalSet::empty();
        let mut total = 0.0;
        for p in &parts {
            if p.is_empty() {
                return Err(Error::PartitionMismatch("empty part".into()));
            }
            if !union.intersect(p).is_empty() {
                return Err(Error::PartitionMismatch(format!("part {p} overlaps an earlier part")));
            }
            union = union.union(p);
            total += p.length();
        }
        let (lo, hi) = carrier.bounds();
        if union.pieces() != [(lo, hi)] {
            return Err(Error::PartitionMismatch(format!("parts cover {union}, not {carrier}")));
        }
        let _ = total;
        Ok(Partition::Explicit(parts))
    }

    pub fn unit_offset(k: usize) -> i64 {
        assert!(k >= 1, "parts are numbered from 1");
        let m = (k / 2) as i64;
        if k == 1 {
            0
        } else if k.is_multiple_of(2) {
            m
        } else {
            -m
        }
    }

    pub fn unit_index(j: i64) -> usize {
        match j {
            0 => 1,
            j if j > 0 => 2 * j as usize,
            j => 2 * j.unsigned_abs() as usize + 1,
        }
    }

    /// `Σ 2^{−k}` over unit parts `[i, i+1)` with `i < j`.
    pub fn unit_weight_below(j: i64) -> f64 {
        if j <= 0 {
            2.0 / 3.0 * 0.25f64.powi((1 - j).min(i32::MAX as i64) as i32)
        } else {
            1.0 - 0.25f64.powi((j - 1).min(i32::MAX as i64) as i32) / 3.0
        }
    }

    /// The `j` with `weight_below(j) ≤ u < weight_below(j+1)`.
    fn unit_locate(u: f64) -> i64 {
        let mut j = if u < 1.0 / 6.0 {
            1 - ((2.0 / (3.0 * u)).log(4.0)).ceil() as i64
        } else if u < 2.0 / 3.0 {
            0
        } else {
            1 + ((1.0 / (3.0 * (1.0 - u))).log(4.0)).floor() as i64
        };
        while Self::unit_weight_below(j + 1) <= u {
            j += 1;
        }
        while j > i64::MIN / 4 && Self::unit_weight_below(j) > u {
            j -= 1;
        }
        j
    }

    /// Part endpoints strictly inside `(a, b)`.
    pub fn boundaries(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            Partition::Unit => {
                let (lo, hi) = (a.max(-1e6).floor() as i64 + 1, b.min(1e6).ceil() as i64);
                (lo..hi).map(|j| j as f64).filter(|&t| t > a && t < b).collect()
            }
            Partition::Explicit(parts) => parts
                .iter()
                .flat_map(|p| p.pieces().iter().flat_map(|&(x, y)| [x, y]))
                .filter(|&t| t > a && t < b)
                .collect(),
        }
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            Partition::Unit => None,
            Partition::Explicit(p) => Some(p.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn part(&self, k: usize) -> Result<IntervalSet> {
        match self {
            Partition::Unit => {
                let j = Self::unit_offset(k) as f64;
                IntervalSet::interval(j, j + 1.0)
            }
            Partition::Explicit(p) => p
                .get(k.wrapping_sub(1))
                .cloned()
                .ok_or_else(|| Error::PartitionMismatch(format!("no part {k}"))),
        }
    }

    pub fn index_of(&self, x: f64) -> Option<usize> {
        match self {
            Partition::Unit => x.is_finite().then(|| Self::unit_index(x.floor() as i64)),
            Partition::Explicit(p) => p.iter().position(|s| s.contains(x)).map(|i| i + 1),
        }
    }

    /// Indices of parts meeting `s`, ascending. Sets meeting infinitely
    /// many parts are truncated to `k ≤ max_k`.
    pub fn parts_meeting(&self, s: &IntervalSet, max_k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        match self {
            Partition::Unit => {
                let cap = (max_k / 2 + 1) as f64;
                for &(a, b) in s.pieces() {
                    let lo = a.max(-cap).floor() as i64;
                    let hi = b.min(cap + 1.0).ceil() as i64;
                    for j in lo..hi {
                        let (pa, pb) = (j as f64, j as f64 + 1.0);
                        if a < pb && pa < b {
                            let k = Self::unit_index(j);
                            if k <= max_k {
                                out.push(k);
                            }
                        }
                    }
                }
            }
            Partition::Explicit(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i < max_k && !p.intersect(s).is_empty() {
                        out.push(i + 1);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Partition::Unit => f.write_str("unit intervals, center-outward"),
            Partition::Explicit(p) => write!(f, "{} explicit parts", p.len()),
        }
    }
}

/// Largest part index reachable in f64 (`2^{−k}` is still nonzero).
const MAX_PART: usize = 1074;
const PART_TOL: f64 = 1e-13;

/// `μ₁(Y) = Σ_k μ(Y ∩ Y_k) / (2^k μ(Y_k))`.
#[derive(Debug)]
pub struct Normalized {
    base: MeasureSpec,
    parts: Partition,
    masses: Mutex<BTreeMap<usize, f64>>,
}

impl Normalized {
    pub fn base(&self) -> &MeasureSpec {
        &self.base
    }

    pub fn partition(&self) -> &Partition {
        &self.parts
    }

    /// `μ(Y_k)`, computed once per part.
    pub fn part_mass(&self, k: usize) -> Result<f64> {
        if let Some(&m) = self.masses.lock().expect("mass cache poisoned").get(&k) {
            return Ok(m);
        }
        let part = self.parts.part(k)?;
        let rough = self.base.integrate(&part, 1e-6)?;
        let m = self.base.integrate(&part, PART_TOL * rough.max(1.0))?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::ZeroOrInfinitePartMass { k, mass: m });
        }
        self.masses.lock().expect("mass cache poisoned").insert(k, m);
        Ok(m)
    }

    /// `(k, μ(s ∩ Y_k)/μ(Y_k))` for every part `s` meets (up to `MAX_PART`),
    /// so that `μ₁(s) = Σ 2^{−k}·ratio`.
    pub fn ratios(&self, s: &IntervalSet) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for k in self.parts.parts_meeting(s, MAX_PART) {
            let part = self.parts.part(k)?;
            let piece = part.intersect(s);
            let m = self.part_mass(k)?;
            let r = if piece == part { 1.0 } else { self.base.integrate(&piece, PART_TOL * m)? / m };
            out.push((k, r));
        }
        Ok(out)
    }

    pub fn mass(&self, s: &IntervalSet) -> Result<f64> {
        Ok(self.ratios(s)?.iter().map(|&(k, r)| 0.5f64.powi(k as i32) * r).sum())
    }

    /// Mass of the first `K` parts plus the bound on the rest.
    pub fn truncated_total(&self) -> Result<(f64, usize, f64)> {
        let k_max = truncation_index();
        let mut total = 0.0;
        for k in 1..=k_max {
            let part = self.parts.part(k);
            match part {
                Ok(p) => {
                    let m = self.part_mass(k)?;
                    total += 0.5f64.powi(k as i32) * self.base.integrate(&p, PART_TOL * m.max(1.0))? / m;
                }
                Err(_) => break,
            }
        }
        Ok((total, k_max, 0.5f64.powi(k_max as i32)))
    }

    fn weight(&self, x: f64) -> Result<f64> {
        let k = self.parts.index_of(x).ok_or(Error::PointOutsideCarrier(x))?;
        Ok(0.5f64.powi(k as i32) / self.part_mass(k)?)
    }

    fn constant_density(&self) -> Option<f64> {
        match self.base.density {
            Density::Constant(c) => Some(c),
            _ => None,
        }
    }
}

impl Distribution for Normalized {
    fn name(&self) -> String {
        format!("normalized {} over {}", self.base.label, self.parts)
    }
    fn support(&self) -> Carrier {
        self.base.carrier
    }
    fn pdf(&self, x: f64) -> f64 {
        match (self.base.density(x), self.weight(x)) {
            (Ok(p), Ok(w)) => p * w,
            _ => 0.0,
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.base.carrier.bounds();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let result = match &self.parts {
            Partition::Unit => {
                let j = x.floor();
                let k = Partition::unit_index(j as i64);
                self.part_mass(k).and_then(|m| {
                    let within = match self.constant_density() {
                        Some(c) => c * (x - j),
                        None if x == j => 0.0,
                        None => self.base.integrate(&IntervalSet::interval(j, x)?, PART_TOL * m)?,
                    };
                    Ok(Partition::unit_weight_below(j as i64) + 0.5f64.powi(k as i32) * within / m)
                })
            }
            Partition::Explicit(_) => IntervalSet::interval(lo, x).and_then(|s| self.mass(&s)),
        };
        result.map(|v| v.clamp(0.0, 1.0)).unwrap_or(f64::NAN)
    }
    fn quantile(&self, u: f64) -> Result<f64> {
        crate::measure::check_unit(u)?;
        match (&self.parts, self.constant_density()) {
            (Partition::Unit, Some(c)) => {
                let j = Partition::unit_locate(u);
                let k = Partition::unit_index(j);
                let m = self.part_mass(k)?;
                let frac = (u - Partition::unit_weight_below(j)) * 2f64.powi(k as i32) * m / c;
                let x = j as f64 + frac.clamp(0.0, 1.0);
                // Polish the last ulps against the cdf.
                let r = self.cdf(x) - u;
                if r.abs() <= QUANTILE_TOL {
                    Ok(x)
                } else {
                    numeric_quantile(self, u)
                }
            }
            _ => numeric_quantile(self, u),
        }
    }
    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        self.parts.boundaries(a, b)
    }
}

/// Normalize a σ-finite measure to the probability `μ₁` over `parts`.
/// Checks the first `K` part masses up front; later parts are checked when
/// first used.
pub fn normalize_sigma_finite(m: &MeasureSpec, parts: Partition) -> Result<Arc<Normalized>> {
    if m.carrier.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: m.carrier.dim() });
    }
    if parts == Partition::Unit && m.carrier != Carrier::FullLine {
        return Err(Error::PartitionMismatch(format!("unit partition covers the line, not {}", m.carrier)));
    }
    let n = Normalized { base: m.clone(), parts, masses: Mutex::new(BTreeMap::new()) };
    let check = n.parts.len().unwrap_or(usize::MAX).min(truncation_index());
    for k in 1..=check {
        n.part_mass(k)?;
    }
    Ok(Arc::new(n))
}

/// `x ⊙ y = φ⁻¹(φx + φy)` with `φ = F₂⁻¹ ∘ F₁`, where `F₁` is the cdf of the
/// normalized input and `F₂` that of normalized Lebesgue measure.
#[derive(Debug, Clone)]
pub struct SigmaFiniteGroup {
    mu1: Arc<Normalized>,
    mu2: Arc<Normalized>,
    identity: f64,
}

impl SigmaFiniteGroup {
    pub fn mu1(&self) -> &Arc<Normalized> {
        &self.mu1
    }

    pub fn mu2(&self) -> &Arc<Normalized> {
        &self.mu2
    }

    pub fn phi(&self, x: f64) -> Result<f64> {
        if !self.mu1.support().contains(x) {
            return Err(Error::PointOutsideCarrier(x));
        }
        self.mu2.quantile(self.mu1.cdf(x))
    }

    pub fn phi_inv(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::PointOutsideCarrier(y));
        }
        self.mu1.quantile(self.mu2.cdf(y))
    }

    fn phi_endpoint(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.mu1.support().bounds();
        if x <= lo {
            Ok(f64::NEG_INFINITY)
        } else if x >= hi {
            Ok(f64::INFINITY)
        } else {
            self.phi(x)
        }
    }

    fn phi_inv_endpoint(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.mu1.support().bounds();
        if y == f64::NEG_INFINITY {
            Ok(lo)
        } else if y == f64::INFINITY {
            Ok(hi)
        } else {
            self.phi_inv(y)
        }
    }

    /// `μ*(X) = Σ_k 2^k λ₂(X_k) μ₁(X ∩ φ⁻¹X_k)`, summed over the finitely
    /// many base parts `φ(X)` meets.
    pub fn mu_star(&self, x: &IntervalSet) -> Result<f64> {
        if x.is_empty() {
            return Ok(0.0);
        }
        if !x.is_bounded() {
            return Err(Error::InvalidArgument(format!("{x} meets infinitely many parts")));
        }
        let image = IntervalSet::from_pieces(
            x.pieces().iter().map(|&(a, b)| Ok((self.phi_endpoint(a)?, self.phi_endpoint(b)?))).collect::<Result<_>>()?,
        )?;
        let mut total = 0.0;
        for k in self.mu2.partition().parts_meeting(&image, usize::MAX) {
            let base_part = self.mu2.partition().part(k)?;
            let lambda_k = self.mu2.part_mass(k)?;
            let pulled = IntervalSet::from_pieces(
                base_part
                    .pieces()
                    .iter()
                    .map(|&(a, b)| Ok((self.phi_inv_endpoint(a)?, self.phi_inv_endpoint(b)?)))
                    .collect::<Result<_>>()?,
            )?;
            for (j, r) in self.mu1.ratios(&x.intersect(&pulled))? {
                total += 2f64.powi(k as i32 - j as i32) * lambda_k * r;
            }
        }
        Ok(total)
    }
}

impl ScalarGroup for SigmaFiniteGroup {
    fn name(&self) -> String {
        format!("σ-finite haarization of {}", self.mu1.base().label)
    }
    fn carrier(&self) -> Carrier {
        self.mu1.support()
    }
    fn tags(&self) -> Tags {
        Tags::abelian(Compactness::LocallyCompactNoncompact)
    }
    fn identity(&self) -> f64 {
        self.identity
    }
    fn op(&self, x: f64, y: f64) -> Result<f64> {
        self.phi_inv(self.phi(x)? + self.phi(y)?)
    }
    fn invert(&self, x: f64) -> Result<f64> {
        self.phi_inv(-self.phi(x)?)
    }
    fn metric(&self, x: f64, y: f64) -> Result<f64> {
        Ok((self.phi(x)? - self.phi(y)?).abs())
    }
}

/// Density of `μ*`: `2^{k−j} λ₂(X_k) p(x) / μ(Y_j)` for `x ∈ Y_j`, `φx ∈ X_k`.
#[derive(Debug)]
struct MuStarDensity {
    group: Arc<SigmaFiniteGroup>,
}

impl DensityFn for MuStarDensity {
    fn density(&self, x: f64) -> Result<f64> {
        let g = &self.group;
        let j = g.mu1.partition().index_of(x).ok_or(Error::PointOutsideCarrier(x))?;
        let y = g.phi(x)?;
        let k = g.mu2.partition().index_of(y).ok_or(Error::PointOutsideCarrier(y))?;
        let p = g.mu1.base().density(x)?;
        Ok(2f64.powi(k as i32 - j as i32) * g.mu2.part_mass(k)? * p / g.mu1.part_mass(j)?)
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let g = &self.group;
        let mut pts = g.mu1.partition().boundaries(a, b);
        if let (Ok(pa), Ok(pb)) = (g.phi_endpoint(a), g.phi_endpoint(b)) {
            for y in g.mu2.partition().boundaries(pa, pb) {
                if let Ok(x) = g.phi_inv(y) {
                    pts.push(x);
                }
            }
        }
        pts
    }
}

/// `μ*` as a density measure on the group's carrier.
pub fn mu_star(group: &Arc<SigmaFiniteGroup>) -> MeasureSpec {
    MeasureSpec::custom(
        format!("μ* for {}", group.mu1.base().label),
        group.carrier(),
        Arc::new(MuStarDensity { group: group.clone() }),
        MassClass::SigmaFiniteNonfinite,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub samples: usize,
    pub agreements: usize,
    pub equivalent: bool,
}

#[derive(Debug, Clone)]
pub struct SigmaFiniteHaar {
    pub group: Arc<SigmaFiniteGroup>,
    pub mu_star: MeasureSpec,
    /// Parts used for the normalization tail bound.
    pub truncation: usize,
    pub tail_bound: f64,
    pub equivalence: EquivalenceReport,
}

const NULL_THRESHOLD: f64 = 1e-12;

/// Full pipeline: normalize `m` over `parts`, normalize Lebesgue measure on
/// the line over `base_parts`, match the two through their cdfs and pull
/// back the additive group of the line.
pub fn haarize_sigma_finite(m: &MeasureSpec, parts: Partition, base_parts: Partition) -> Result<SigmaFiniteHaar> {
    let mu1 = normalize_sigma_finite(m, parts)?;
    let mu2 = normalize_sigma_finite(&MeasureSpec::lebesgue(Carrier::FullLine), base_parts)?;
    let (total, truncation, tail_bound) = mu1.truncated_total()?;
    if (total + tail_bound - 1.0).abs() > 1e-8 {
        return Err(Error::Construction(format!("normalized mass is {total}, not 1")));
    }
    let identity = mu1.quantile(mu2.cdf(0.0))?;
    let group = Arc::new(SigmaFiniteGroup { mu1, mu2, identity });

    // Null sets of μ* and μ agree: compare positivity on a fixed grid of
    // short and long intervals across the central parts.
    let (lo, hi) = m.carrier.bounds();
    let (a, b) = (lo.max(-8.0), hi.min(8.0));
    let mut samples = 0;
    let mut agreements = 0;
    for i in 0..64 {
        for w in [1e-3, 0.37, 1.5] {
            let x0 = a + (b - a) * i as f64 / 64.0;
            let s = IntervalSet::interval(x0, (x0 + w).min(b))?;
            samples += 1;
            let star = group.mu_star(&s)?;
            let orig = m.integrate(&s, 1e-14)?;
            if (star > NULL_THRESHOLD) == (orig > NULL_THRESHOLD) {
                agreements += 1;
            }
        }
    }
    let equivalence = EquivalenceReport { samples, agreements, equivalent: samples == agreements };
    let mu_star = mu_star(&group);
    Ok(SigmaFiniteHaar { group, mu_star, truncation, tail_bound, equivalence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Beta, Cauchy, Exponential, Normal, Uniform};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn iv(a: f64, b: f64) -> IntervalSet {
        IntervalSet::interval(a, b).unwrap()
    }

    #[test]
    fn uniform_reduces_to_circle() {
        let g = haarize_probability(Arc::new(Uniform), None).unwrap();
        assert!(g.shift().is_none());
        assert_eq!(g.identity(), 0.0);
        assert_eq!(g.op(0.25, 0.5).unwrap(), 0.75);
        assert_eq!(g.op(0.75, 0.5).unwrap(), 0.25);
        assert_eq!(g.translate_set(0.5, &iv(0.25, 0.5), Side::Left).unwrap(), iv(0.75, 1.0));
        assert_eq!(g.translate_set(0.75, &iv(0.5, 0.75), Side::Left).unwrap(), iv(0.25, 0.5));
    }

    #[test]
    fn exponential_wraps_to_identity() {
        let g = haarize_probability(Arc::new(Exponential::new(1.0).unwrap()), None).unwrap();
        assert!(g.shift().is_none());
        assert_eq!(g.identity(), 0.0);
        let p = g.op(LN_2, LN_2).unwrap();
        assert!(g.metric(p, 0.0).unwrap() < 1e-15, "{p}");
        let t = g.translate_set(LN_2, &iv(0.0, LN_2), Side::Left).unwrap();
        assert_eq!(t.pieces().len(), 1);
        assert!((t.pieces()[0].0 - LN_2).abs() < 1e-12);
        assert_eq!(t.pieces()[0].1, f64::INFINITY);
    }

    #[test]
    fn normal_uses_integer_escape_points() {
        let g = haarize_probability(Arc::new(Normal::standard()), None).unwrap();
        assert_eq!(g.shift(), Some(HotelShift::integers()));
        assert_eq!(g.identity(), 0.0);
        assert_eq!(g.phi(0.0).unwrap(), 0.0);
        for x in [-1.7, 0.3, 2.5] {
            assert!((g.op(0.0, x).unwrap() - x).abs() < 1e-9);
        }
        // φ is exact on escape points.
        for n in 0..6 {
            let a = n as f64;
            assert_eq!(g.phi_inv(g.phi(a).unwrap()).unwrap(), a);
        }
        assert_eq!(g.phi(1.0).unwrap(), 0.5);
    }

    #[test]
    fn phi_round_trips_on_the_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dists: Vec<Arc<dyn Distribution>> = vec![
            Arc::new(Normal::standard()),
            Arc::new(Cauchy::new(0.0, 1.0).unwrap()),
            Arc::new(Exponential::new(2.0).unwrap()),
            Arc::new(Beta::new(2.0, 3.0).unwrap()),
        ];
        for d in dists {
            let g = haarize_probability(d, None).unwrap();
            for _ in 0..200 {
                let u: f64 = rng.random_range(0.0..1.0);
                let back = g.phi(g.phi_inv(u).unwrap()).unwrap();
                assert!((back - u).abs() <= 1e-10, "{}: {u} → {back}", g.name());
            }
        }
    }

    #[test]
    fn haar_invariance_for_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = haarize_probability(Arc::new(Normal::standard()), None).unwrap();
        let m = g.measure();
        for _ in 0..40 {
            let a: f64 = rng.random_range(-2.5..2.0);
            let e = iv(a, a + rng.random_range(0.01..1.5));
            let h: f64 = rng.random_range(-3.0..3.0);
            let t = g.translate_set(h, &e, Side::Left).unwrap();
            let (before, after) = (m.integrate(&e, 1e-10).unwrap(), m.integrate(&t, 1e-10).unwrap());
            assert!((before - after).abs() <= 1e-8, "{e} by {h}: {before} vs {after}");
        }
    }

    #[test]
    fn escape_sequences_stay_inside() {
        assert!(HotelShift::integers().validate(Carrier::FullLine).is_ok());
        assert!(HotelShift::integers().validate(Carrier::open_interval(-1.0, 1.0).unwrap()).is_err());
        let g = HotelShift::default_for(Carrier::open_interval(-1.0, 1.0).unwrap());
        assert!(g.validate(Carrier::open_interval(-1.0, 1.0).unwrap()).is_ok());
        assert_eq!(g.point(0), 0.0);
        assert_eq!(g.index_of(0.5), Some(1));
        assert_eq!(g.index_of(0.4), None);
    }

    #[test]
    fn flat_cdf_is_rejected() {
        let m = MeasureSpec::from_expr(
            "abs(x)",
            crate::expr::Params::new(),
            Carrier::open_interval(-1.0, 1.0).unwrap(),
            MassClass::Probability,
        )
        .unwrap();
        let gap = crate::measure::DensityDistribution::new(m).unwrap();
        // Density vanishes only at 0: the cdf is still strictly increasing.
        assert!(haarize_probability(Arc::new(gap), None).is_ok());
        #[derive(Debug)]
        struct Plateau;
        impl Distribution for Plateau {
            fn name(&self) -> String {
                "plateau".into()
            }
            fn support(&self) -> Carrier {
                Carrier::half_open(0.0, 3.0).unwrap()
            }
            fn pdf(&self, x: f64) -> f64 {
                if (1.0..2.0).contains(&x) { 0.0 } else { 0.5 }
            }
            fn cdf(&self, x: f64) -> f64 {
                (0.5 * x.clamp(0.0, 1.0) + 0.5 * (x - 2.0).clamp(0.0, 1.0)).clamp(0.0, 1.0)
            }
        }
        assert!(matches!(haarize_probability(Arc::new(Plateau), None), Err(Error::CdfNotStrictlyIncreasing(_))));
    }

    #[test]
    fn unit_partition_enumeration() {
        let js: Vec<i64> = (1..=7).map(Partition::unit_offset).collect();
        assert_eq!(js, [0, 1, -1, 2, -2, 3, -3]);
        for k in 1..200 {
            assert_eq!(Partition::unit_index(Partition::unit_offset(k)), k);
        }
        // Oracle: direct sum of 2^{−k} over parts left of j.
        for j in -12..12i64 {
            let direct: f64 = (1..200usize)
                .filter(|&k| Partition::unit_offset(k) < j)
                .map(|k| 0.5f64.powi(k as i32))
                .sum();
            assert!((Partition::unit_weight_below(j) - direct).abs() < 1e-15, "{j}");
        }
        assert_eq!(truncation_index(), 40);
    }

    #[test]
    fn unit_locate_brackets() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let u: f64 = rng.random_range(1e-12..1.0 - 1e-12);
            let j = Partition::unit_locate(u);
            assert!(Partition::unit_weight_below(j) <= u && u < Partition::unit_weight_below(j + 1), "{u}");
        }
    }

    #[test]
    fn normalized_lebesgue_examples() {
        let mu1 = normalize_sigma_finite(&MeasureSpec::lebesgue(Carrier::FullLine), Partition::Unit).unwrap();
        assert_eq!(mu1.mass(&iv(0.0, 1.0)).unwrap(), 0.5);
        assert_eq!(mu1.mass(&iv(0.0, 0.5)).unwrap(), 0.25);
        let whole = mu1.mass(&IntervalSet::interval(f64::NEG_INFINITY, f64::INFINITY).unwrap()).unwrap();
        assert!((whole - 1.0).abs() < 1e-15);
        let (total, k, tail) = mu1.truncated_total().unwrap();
        assert_eq!(k, 40);
        assert!((total + tail - 1.0).abs() < 1e-15);
        for x in [-5.5, -0.2, 0.0, 0.7, 3.25] {
            let direct = mu1.mass(&IntervalSet::interval(f64::NEG_INFINITY, x).unwrap()).unwrap();
            assert!((mu1.cdf(x) - direct).abs() < 1e-15, "{x}");
            let q = mu1.quantile(mu1.cdf(x)).unwrap();
            assert!((q - x).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_weighted_measure() {
        let m = MeasureSpec::from_expr(
            "1 + x^2",
            crate::expr::Params::new(),
            Carrier::FullLine,
            MassClass::SigmaFiniteNonfinite,
        )
        .unwrap();
        let mu1 = normalize_sigma_finite(&m, Partition::Unit).unwrap();
        assert!((mu1.part_mass(2).unwrap() - (1.0 + 1.0 / 3.0 * 7.0)).abs() < 1e-12);
        assert!((mu1.mass(&iv(1.0, 2.0)).unwrap() - 0.25).abs() < 1e-15);
        let x = mu1.quantile(0.3).unwrap();
        assert!((mu1.cdf(x) - 0.3).abs() <= QUANTILE_TOL);
    }

    #[test]
    fn partition_validation() {
        let parts = vec![iv(0.0, 0.5), iv(0.5, 1.0)];
        assert!(Partition::explicit(parts, Carrier::half_open(0.0, 1.0).unwrap()).is_ok());
        let overlap = vec![iv(0.0, 0.6), iv(0.5, 1.0)];
        assert!(matches!(
            Partition::explicit(overlap, Carrier::half_open(0.0, 1.0).unwrap()),
            Err(Error::PartitionMismatch(_))
        ));
        let short = vec![iv(0.0, 0.5)];
        assert!(Partition::explicit(short, Carrier::half_open(0.0, 1.0).unwrap()).is_err());
        let half = MeasureSpec::from_expr("1", crate::expr::Params::new(), Carrier::HalfLine, MassClass::SigmaFiniteNonfinite)
            .unwrap();
        assert!(matches!(normalize_sigma_finite(&half, Partition::Unit), Err(Error::PartitionMismatch(_))));
    }

    #[test]
    fn zero_mass_part_is_rejected() {
        let m = MeasureSpec::from_expr(
            "abs(x) - x",
            crate::expr::Params::new(),
            Carrier::FullLine,
            MassClass::SigmaFiniteNonfinite,
        )
        .unwrap();
        assert!(matches!(
            normalize_sigma_finite(&m, Partition::Unit),
            Err(Error::ZeroOrInfinitePartMass { k: 1, .. })
        ));
    }

    fn identity_scenario() -> SigmaFiniteHaar {
        haarize_sigma_finite(&MeasureSpec::lebesgue(Carrier::FullLine), Partition::Unit, Partition::Unit).unwrap()
    }

    #[test]
    fn identity_scenario_recovers_lebesgue() {
        let h = identity_scenario();
        let g = &h.group;
        assert_eq!(g.identity(), 0.0);
        for x in [-3.7, -0.5, 0.0, 1.25, 6.5] {
            assert!((g.phi(x).unwrap() - x).abs() < 1e-12);
        }
        assert!((g.mu_star(&iv(0.0, 3.0)).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(g.mu_star(&IntervalSet::empty()).unwrap(), 0.0);
        for j in -3..4 {
            let p = iv(j as f64, j as f64 + 1.0);
            assert!((g.mu_star(&p).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((h.mu_star.integrate(&iv(-1.5, 2.0), 1e-10).unwrap() - 3.5).abs() < 1e-9);
        assert!((g.op(1.5, 2.25).unwrap() - 3.75).abs() < 1e-12);
        assert!(h.equivalence.equivalent);
        assert_eq!(h.truncation, 40);
    }

    #[test]
    fn mu_star_of_first_parts_telescopes() {
        let h = identity_scenario();
        let mut total = 0.0;
        for k in 1..=9 {
            total += h.group.mu_star(&Partition::Unit.part(k).unwrap()).unwrap();
        }
        assert!((total - 9.0).abs() < 1e-11);
    }

    #[test]
    fn mu_star_is_invariant_for_weighted_input() {
        let m = MeasureSpec::from_expr(
            "exp(-x/4)",
            crate::expr::Params::new(),
            Carrier::FullLine,
            MassClass::SigmaFiniteNonfinite,
        )
        .unwrap();
        let h = haarize_sigma_finite(&m, Partition::Unit, Partition::Unit).unwrap();
        assert!(h.equivalence.equivalent);
        let g = &h.group;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let a: f64 = rng.random_range(-2.0..2.0);
            let x = iv(a, a + rng.random_range(0.1..2.0));
            let h1: f64 = rng.random_range(-1.5..1.5);
            let h2: f64 = rng.random_range(-1.5..1.5);
            let left = g.translate_set(h1, &x, Side::Left).unwrap();
            let both = g.translate_set(h2, &left, Side::Right).unwrap();
            let (before, after) = (g.mu_star(&x).unwrap(), g.mu_star(&both).unwrap());
            assert!((before - after).abs() <= 1e-6, "{x}: {before} vs {after}");
            let dens = h.mu_star.integrate(&x, 1e-10).unwrap();
            assert!((dens - before).abs() <= 1e-6, "{x}: density route {dens} vs series {before}");
        }
    }
}
