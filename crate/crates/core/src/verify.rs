//! Sampled falsification of group axioms, metric and measure invariance,
//! pushforward consistency and volume preservation.
//!
//! Every check is registered by name behind [`Check`] and produces a
//! [`Report`]. Sampling is seeded per check so reports are reproducible.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Dual;
use crate::groups::{Carrier, Group, GroupSpec, LieGroup, Point, ScalarGroup, Side};
use crate::haarize::{HaarizedGroup, SigmaFiniteHaar};
use crate::measure::{preimage_set, Bijection1D, IntervalSet, MeasureSpec};
use crate::transport::{scalar_certificate, Certificate, TransportResult};

pub const REPORT_SCHEMA: u32 = 1;
pub const ALGEBRAIC_TOL: f64 = 1e-9;
pub const MEASURE_TOL: f64 = 1e-6;
pub const PUSHFORWARD_TOL: f64 = 1e-7;
pub const QUADRATURE_TOL: f64 = 1e-8;
pub const JACOBIAN_TOL: f64 = 1e-8;
/// Masses above this count as positive.
pub const POSITIVE_MASS: f64 = 1e-12;
const MAX_WITNESSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Residuals were within tolerance but some evaluations failed.
    Inconclusive,
    /// A structural tag that is asserted by construction, not tested.
    DeclaredOnly,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
            Verdict::DeclaredOnly => "declared",
        })
    }
}

/// A sample whose residual exceeded the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offender {
    pub index: usize,
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub check: String,
    pub target: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub witnesses: Vec<Offender>,
    pub errors: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass | Verdict::DeclaredOnly)
    }

    fn declared(check: &str, target: &str, note: String) -> Self {
        Report {
            schema: REPORT_SCHEMA,
            check: check.into(),
            target: target.into(),
            samples: 0,
            max_residual: 0.0,
            tolerance: 0.0,
            verdict: Verdict::DeclaredOnly,
            witnesses: Vec::new(),
            errors: 0,
            note: Some(note),
        }
    }
}

/// Render reports as an aligned text table.
pub fn table(reports: &[Report]) -> String {
    let headers = ["check", "target", "samples", "max residual", "tolerance", "errors", "verdict"];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            [
                r.check.clone(),
                r.target.clone(),
                r.samples.to_string(),
                format!("{:.3e}", r.max_residual),
                if r.tolerance == 0.0 { "0".into() } else { format!("{:.0e}", r.tolerance) },
                r.errors.to_string(),
                r.verdict.to_string(),
            ]
        })
        .collect();
    let mut widths = headers.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&mut out, &headers.map(String::from));
    line(&mut out, &widths.map(|w| "-".repeat(w)));
    for row in &rows {
        line(&mut out, row);
    }
    out
}

/// Accumulates per-sample residuals into a report.
struct Tally {
    check: String,
    target: String,
    tolerance: f64,
    samples: usize,
    max: f64,
    offenders: Vec<Offender>,
    errors: usize,
    quadrature_failures: usize,
}

impl Tally {
    fn new(check: &str, target: &str, tolerance: f64) -> Self {
        Tally {
            check: check.into(),
            target: target.into(),
            tolerance,
            samples: 0,
            max: 0.0,
            offenders: Vec::new(),
            errors: 0,
            quadrature_failures: 0,
        }
    }

    fn record(&mut self, index: usize, outcome: Result<(f64, String)>) {
        self.samples += 1;
        match outcome {
            Ok((r, detail)) => {
                let r = if r.is_nan() { f64::INFINITY } else { r };
                self.max = self.max.max(r);
                if r > self.tolerance {
                    self.offenders.push(Offender { index, residual: r, detail });
                }
            }
            Err(Error::QuadratureFailure { .. }) => {
                self.errors += 1;
                self.quadrature_failures += 1;
            }
            Err(_) => self.errors += 1,
        }
    }

    fn finish(mut self, note: Option<String>) -> Report {
        let verdict = if !self.offenders.is_empty() {
            Verdict::Fail
        } else if self.quadrature_failures > 0 || self.errors * 10 > self.samples || self.samples == self.errors {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        // Keep the largest offenders, reported in sample order.
        self.offenders.sort_by(|a, b| b.residual.total_cmp(&a.residual).then(a.index.cmp(&b.index)));
        self.offenders.truncate(MAX_WITNESSES);
        self.offenders.sort_by_key(|o| o.index);
        Report {
            schema: REPORT_SCHEMA,
            check: self.check,
            target: self.target,
            samples: self.samples,
            max_residual: self.max,
            tolerance: self.tolerance,
            verdict,
            witnesses: self.offenders,
            errors: self.errors,
            note,
        }
    }
}

/// Associativity, two-sided identity and two-sided inverses, each measured
/// in the group's own metric.
pub fn check_group_axioms<R: Rng + ?Sized>(g: &dyn Group, n: usize, tol: f64, rng: &mut R) -> Report {
    let mut t = Tally::new("axioms", &g.name(), tol);
    let carrier = g.carrier();
    let e = g.identity();
    for i in 0..n {
        let (x, y, z) = (carrier.sample(rng), carrier.sample(rng), carrier.sample(rng));
        let outcome = (|| -> Result<(f64, String)> {
            let xy = g.op(&x, &y)?;
            let yz = g.op(&y, &z)?;
            let left = g.op(&xy, &z)?;
            let right = g.op(&x, &yz)?;
            for p in [&xy, &yz, &left, &right] {
                if !carrier.contains_point(p) {
                    return Ok((f64::INFINITY, format!("closure: {p:?} left the carrier")));
                }
            }
            let inv = g.invert(&x)?;
            let parts = [
                ("associativity", g.metric(&left, &right)?),
                ("right identity", g.metric(&g.op(&x, &e)?, &x)?),
                ("left identity", g.metric(&g.op(&e, &x)?, &x)?),
                ("right inverse", g.metric(&g.op(&x, &inv)?, &e)?),
                ("left inverse", g.metric(&g.op(&inv, &x)?, &e)?),
            ];
            let (what, r) = parts.iter().fold(("", 0.0f64), |acc, &(w, r)| if r > acc.1 { (w, r) } else { acc });
            Ok((r, format!("{what} at x={x:?}, y={y:?}, z={z:?}")))
        })();
        t.record(i, outcome);
    }
    t.finish(None)
}

pub fn check_abelian<R: Rng + ?Sized>(g: &dyn Group, n: usize, tol: f64, rng: &mut R) -> Report {
    let mut t = Tally::new("abelian", &g.name(), tol);
    let carrier = g.carrier();
    for i in 0..n {
        let (x, y) = (carrier.sample(rng), carrier.sample(rng));
        let outcome = g
            .op(&x, &y)
            .and_then(|xy| Ok((g.metric(&xy, &g.op(&y, &x)?)?, format!("x={x:?}, y={y:?}"))));
        t.record(i, outcome);
    }
    t.finish(None)
}

/// `|ρ(h₁xh₂, h₁yh₂) − ρ(x,y)|` over sampled quadruples.
pub fn check_metric_invariance<R: Rng + ?Sized>(g: &dyn Group, n: usize, tol: f64, rng: &mut R) -> Report {
    let mut t = Tally::new("metric-invariance", &g.name(), tol);
    let carrier = g.carrier();
    for i in 0..n {
        let (x, y, h1, h2) = (carrier.sample(rng), carrier.sample(rng), carrier.sample(rng), carrier.sample(rng));
        let outcome = (|| -> Result<(f64, String)> {
            let tx = g.op(&g.op(&h1, &x)?, &h2)?;
            let ty = g.op(&g.op(&h1, &y)?, &h2)?;
            let r = (g.metric(&tx, &ty)? - g.metric(&x, &y)?).abs();
            Ok((r, format!("x={x:?}, y={y:?}, h1={h1:?}, h2={h2:?}")))
        })();
        t.record(i, outcome);
    }
    let note = (!g.tags().invariant_metric).then(|| "metric is not declared two-sided invariant".to_string());
    t.finish(note)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    Left,
    Right,
    TwoSided,
}

impl std::str::FromStr for Sidedness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Sidedness::Left),
            "right" => Ok(Sidedness::Right),
            "two-sided" | "both" => Ok(Sidedness::TwoSided),
            _ => Err(Error::UnknownSelector(format!("sidedness {s}"))),
        }
    }
}

/// A set with the elements it is translated by.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceCase {
    pub set: IntervalSet,
    pub left: Option<f64>,
    pub right: Option<f64>,
}

impl InvarianceCase {
    pub fn translate(&self, g: &dyn ScalarGroup) -> Result<IntervalSet> {
        let mut s = self.set.clone();
        if let Some(h) = self.left {
            s = g.translate_set(h, &s, Side::Left)?;
        }
        if let Some(h) = self.right {
            s = g.translate_set(h, &s, Side::Right)?;
        }
        Ok(s)
    }
}

impl fmt::Display for InvarianceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(h) = self.left {
            write!(f, "{h} ⊙ ")?;
        }
        write!(f, "({})", self.set)?;
        if let Some(h) = self.right {
            write!(f, " ⊙ {h}")?;
        }
        Ok(())
    }
}

/// A random set of one or two pieces with sampled endpoints.
pub fn random_set<R: Rng + ?Sized>(carrier: Carrier, rng: &mut R) -> IntervalSet {
    loop {
        let k = if rng.random_bool(0.5) { 1 } else { 2 };
        let mut pts: Vec<f64> = (0..2 * k).map(|_| carrier.sample_scalar(rng)).collect();
        pts.sort_by(f64::total_cmp);
        if let Ok(s) = IntervalSet::from_pieces(pts.chunks(2).map(|c| (c[0], c[1])).collect()) {
            if !s.is_empty() {
                return s;
            }
        }
    }
}

pub fn random_cases<R: Rng + ?Sized>(carrier: Carrier, n: usize, side: Sidedness, rng: &mut R) -> Vec<InvarianceCase> {
    (0..n)
        .map(|_| {
            let set = random_set(carrier, rng);
            let h1 = carrier.sample_scalar(rng);
            let h2 = carrier.sample_scalar(rng);
            InvarianceCase {
                set,
                left: (side != Sidedness::Right).then_some(h1),
                right: (side != Sidedness::Left).then_some(h2),
            }
        })
        .collect()
}

/// `|m(h₁ ⊙ E ⊙ h₂) − m(E)|`, both masses by quadrature.
pub fn check_measure_invariance(
    g: &dyn ScalarGroup,
    m: &MeasureSpec,
    cases: &[InvarianceCase],
    tol: f64,
    quad_tol: f64,
) -> Report {
    let mut t = Tally::new("invariance", &g.name(), tol);
    for (i, case) in cases.iter().enumerate() {
        let outcome = (|| -> Result<(f64, String)> {
            let moved = case.translate(g)?;
            let before = m.integrate(&case.set, quad_tol)?;
            let after = m.integrate(&moved, quad_tol)?;
            Ok(((after - before).abs(), format!("{case} = {moved}: {before} vs {after}")))
        })();
        t.record(i, outcome);
    }
    t.finish(None)
}

/// Density route against preimage route: `pushed(Y)` vs `base(f⁻¹Y)`.
pub fn check_pushforward_consistency(
    base: &MeasureSpec,
    f: &Bijection1D,
    pushed: &MeasureSpec,
    sets: &[IntervalSet],
    tol: f64,
    quad_tol: f64,
) -> Report {
    let mut t = Tally::new("pushforward", &f.label, tol);
    for (i, y) in sets.iter().enumerate() {
        let outcome = (|| -> Result<(f64, String)> {
            let density_route = pushed.integrate(y, quad_tol)?;
            let preimage_route = base.integrate(&preimage_set(f, y)?, quad_tol)?;
            Ok(((density_route - preimage_route).abs(), format!("{y}: {density_route} vs {preimage_route}")))
        })();
        t.record(i, outcome);
    }
    t.finish(None)
}

/// Positivity of `m(E)` and `m(h₁ ⊙ E ⊙ h₂)` must agree; residual 1 per
/// disagreement.
pub fn check_quasi_invariance(g: &dyn ScalarGroup, m: &MeasureSpec, cases: &[InvarianceCase], quad_tol: f64) -> Report {
    let mut t = Tally::new("quasi-invariance", &g.name(), 0.0);
    for (i, case) in cases.iter().enumerate() {
        let outcome = (|| -> Result<(f64, String)> {
            let moved = case.translate(g)?;
            let before = m.integrate(&case.set, quad_tol)?;
            let after = m.integrate(&moved, quad_tol)?;
            let agree = (before > POSITIVE_MASS) == (after > POSITIVE_MASS);
            Ok((if agree { 0.0 } else { 1.0 }, format!("{case} = {moved}: {before} vs {after}")))
        })();
        t.record(i, outcome);
    }
    t.finish(None)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("nonempty");
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    det
}

/// Jacobian of `x ↦ g ⊙ x` at `x`, one dual-number pass per column.
pub fn left_translation_jacobian(group: &dyn LieGroup, g: &[f64], x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let mut jac = vec![vec![0.0; n]; n];
    for col in 0..n {
        let seeded: Vec<Dual> = x.iter().enumerate().map(|(i, &v)| Dual::new(v, if i == col { 1.0 } else { 0.0 })).collect();
        let out = group.translate_dual(g, &seeded)?;
        for (row, d) in out.iter().enumerate() {
            jac[row][col] = d.eps;
        }
    }
    Ok(jac)
}

/// `||det J(x ↦ g ⊙ x)| − 1|` at sampled `(g, x)`.
pub fn check_jacobian_unimodular<R: Rng + ?Sized>(group: &dyn LieGroup, n: usize, tol: f64, rng: &mut R) -> Report {
    let mut t = Tally::new("jacobian", &group.name(), tol);
    let carrier = group.carrier();
    for i in 0..n {
        let (g, x) = (carrier.sample(rng), carrier.sample(rng));
        let outcome = left_translation_jacobian(group, &g, &x)
            .map(|j| ((determinant(j).abs() - 1.0).abs(), format!("g={g:?}, x={x:?}")));
        t.record(i, outcome);
    }
    t.finish(None)
}

/// Chain equality along an ordering of each point set; refutations fail.
pub fn check_one_dimensionality(
    g: &dyn ScalarGroup,
    chart: Option<&Bijection1D>,
    point_sets: &[Vec<f64>],
) -> Report {
    let mut t = Tally::new("one-dimensional", &g.name(), crate::transport::CHAIN_TOL);
    for (i, pts) in point_sets.iter().enumerate() {
        let outcome = scalar_certificate(g, chart, pts).map(|c| match c {
            Certificate::Chain { residual, .. } => (residual, format!("{pts:?}")),
            Certificate::Refuted { best, tried } => (best, format!("refuted after {tried} orderings: {pts:?}")),
        });
        t.record(i, outcome);
    }
    t.finish(None)
}

/// Compactness and density-in-itself are asserted by construction.
pub fn declared_tags(g: &dyn Group) -> Vec<Report> {
    let tags = g.tags();
    let name = g.name();
    vec![
        Report::declared("compactness", &name, format!("{:?}", tags.compactness).to_lowercase()),
        Report::declared("dense-in-itself", &name, tags.dense_in_itself.to_string()),
    ]
}

/// What a check runs against.
#[derive(Debug, Clone)]
pub struct Target {
    pub label: String,
    pub group: GroupSpec,
    /// Haar measure on the group's carrier.
    pub measure: Option<MeasureSpec>,
    /// For transports: the chart and the measure it pushes forward.
    pub chart: Option<Bijection1D>,
    pub base_measure: Option<MeasureSpec>,
}

impl Target {
    pub fn from_transport(t: &TransportResult) -> Self {
        Target {
            label: t.group.as_group().name(),
            group: t.group.clone(),
            measure: Some(t.measure.clone()),
            chart: t.witness.bijection().cloned(),
            base_measure: Some(t.base_measure.clone()),
        }
    }

    pub fn haarized(h: &HaarizedGroup) -> Self {
        Target {
            label: ScalarGroup::name(h),
            group: GroupSpec::Scalar(Arc::new(h.clone())),
            measure: Some(h.measure()),
            chart: None,
            base_measure: None,
        }
    }

    pub fn sigma_finite(h: &SigmaFiniteHaar) -> Self {
        Target {
            label: h.group.name(),
            group: GroupSpec::Scalar(h.group.clone()),
            measure: Some(h.mu_star.clone()),
            chart: None,
            base_measure: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub samples: usize,
    /// Overrides the check's default tolerance.
    pub tol: Option<f64>,
    pub quad_tol: f64,
    pub side: Sidedness,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { samples: 1000, tol: None, quad_tol: QUADRATURE_TOL, side: Sidedness::TwoSided }
    }
}

/// A named verification strategy.
pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn default_tol(&self) -> f64;
    fn applies(&self, _target: &Target) -> bool {
        true
    }
    fn run(&self, target: &Target, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Report>>;
}

fn needs_scalar<'a>(check: &str, target: &'a Target) -> Result<&'a Arc<dyn ScalarGroup>> {
    target
        .group
        .as_scalar()
        .ok_or_else(|| Error::InvalidArgument(format!("{check} needs a one-dimensional group, got {}", target.label)))
}

fn needs_measure<'a>(check: &str, target: &'a Target) -> Result<&'a MeasureSpec> {
    target
        .measure
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("{check} needs a measure on {}", target.label)))
}

struct Axioms;
struct Abelian;
struct MetricInvariance;
struct MeasureInvariance;
struct Pushforward;
struct QuasiInvariance;
struct Jacobian;
struct OneDimensional;
struct DeclaredTags;

impl Check for Axioms {
    fn name(&self) -> &'static str {
        "axioms"
    }
    fn summary(&self) -> &'static str {
        "closure, associativity, identity and inverses in the group metric"
    }
    fn default_tol(&self) -> f64 {
        ALGEBRAIC_TOL
    }
    fn run(&self, target: &Target, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Report>> {
        let tol = cfg.tol.unwrap_or(self.default_tol());
        Ok(vec![check_group_axioms(target.group.as_group().as_ref(), cfg.samples, tol, rng)])
    }
}

impl Check for Abelian {
    fn name(&self) -> &'static str {
        "abelian"
    }
    fn summary(&self) -> &'static str {
        "x ⊙ y against y ⊙ x in the group metric"
    }
    fn default_tol(&self) -> f64 {
        ALGEBRAIC_TOL
    }
    fn run(&self, target: &Target, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Report>> {
        let tol = cfg.tol.unwrap_or(self.default_tol());
        Ok(vec![check_abelian(target.group.as_group().as_ref(), cfg.samples, tol, rng)])
    }
}

impl Check for MetricInvariance {
    fn name(&self) -> &'static str {
        "metric-invariance"
    }
    fn applies(&self, target: &Target) -> bool {
        target.group.as_group().tags().invariant_metric
    }
    fn summary(&self) -> &'static str {
        "ρ(h₁xh₂, h₁yh₂) against ρ(x, y)"
    }
    fn default_tol(&self) -> f64 {
        ALGEBRAIC_TOL
    }
    fn run(&self, target: &Target, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Report>> {
        let tol = cfg.tol.unwrap_or(self.default_tol());
        Ok(vec![check_metric_invariance(target.group.as_group().as_ref(), cfg.samples, tol, rng)])
    }
}

/// Caps the number of quadrature-backed samples per run.
const MEASURE_SAMPLES: usize = 100;

impl Check for MeasureInvariance {
    fn name(&self) -> &'static str {
        "invariance"
    }
    fn applies(&self, target: &Target) -> bool {
        target.measure.is_some() || target.group.as_lie().is_some()
    }
    fn summary(&self) -> &'static str {
        "Haar measure of translated sets (volume preservation for ℝⁿ groups)"
    }
    fn default_tol(&self) -> f64 {
        MEASURE_TOL
    }
    fn run(&self, target: &Target, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Report>> {
        let tol = cfg.tol.unwrap_or(self.default_tol());
        match &target.group {
            GroupSpec::Scalar(g) => {
                let m = needs_measure(self.name(), target)?;
                let cases = random_cases(g.carrier(), cfg.samples.min(MEASURE_SAMPLES), cfg.side, rng);
                Ok(vec![check_measure_invariance(g.as_ref(), m, &cases, tol, cfg.quad_tol)])
            }
            GroupSpec::Vector(g) => {
                let mut r = check_jacobian_unimodular(g.as_ref(), cfg.samples.min(MEASURE_SAMPLES), JACOBIAN_TOL, rng);
                r.check = self.name().into();
                r.note = Some("volume preservation of left translations".into());
                Ok(vec![r])
            }
        }
    }
}

impl Check for Pushforward {
    fn name(&self) -> &'static str {
        "pushforward"
    }
    fn applies(&self, target: &Target) -> bool {
        target.chart.is_some() && target.base_measure.is_some() && target.measure.is_some()
    }
    fn summary(&self) -> &'static str {
        "density route against preimage route for transported measures"
    }
    fn default_tol(&self) -> f64 {
        PUSHFORWARD_TOL
    }
    fn run(&self, target: &Target, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Report>> {
        let tol = cfg.tol.unwrap_or(self.default_tol());
        let (Some(f), Some(base)) = (&target.chart, &target.base_measure) else {
            return Err(Error::InvalidArgument(format!("{} is not a transport along a chart", target.label)));
        };
        let pushed = needs_measure(self.name(), target)?;
        let sets: Vec<IntervalSet> = (0..cfg.samples.min(MEASURE_SAMPLES)).map(|_| random_set(f.codomain, rng)).collect();
        Ok(vec![check_pushforward_consistency(base, f, pushed, &sets, tol, cfg.quad_tol.min(tol / 10.0))])
    }
}

impl Check for QuasiInvariance {
    fn name(&self) -> &'static str {
        "quasi-invariance"
    }
    fn applies(&self, target: &Target) -> bool {
        target.group.as_scalar().is_some() && target.measure.is_some()
    }
    fn summary(&self) -> &'static str {
        "positivity of mass is preserved by two-sided translation"
    }
    fn default_tol(&self) -> f64 {
        0.0
    }
    fn run(&self, target: &Target, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Report>> {
        let g = needs_scalar(self.name(), target)?;
        let m = needs_measure(self.name(), target)?;
        let cases = random_cases(g.carrier(), cfg.samples.min(2 * MEASURE_SAMPLES), cfg.side, rng);
        Ok(vec![check_quasi_invariance(g.as_ref(), m, &cases, cfg.quad_tol)])
    }
}

impl Check for Jacobian {
    fn name(&self) -> &'static str {
        "jacobian"
    }
    fn applies(&self, target: &Target) -> bool {
        target.group.as_lie().is_some()
    }
    fn summary(&self) -> &'static str {
        "|det J| = 1 for left translations, by dual numbers"
    }
    fn default_tol(&self) -> f64 {
        JACOBIAN_TOL
    }
    fn run(&self, target: &Target, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Report>> {
        let tol = cfg.tol.unwrap_or(self.default_tol());
        let g = target
            .group
            .as_lie()
            .ok_or_else(|| Error::InvalidArgument(format!("jacobian needs an ℝⁿ group, got {}", target.label)))?;
        Ok(vec![check_jacobian_unimodular(g.as_ref(), cfg.samples.min(MEASURE_SAMPLES), tol, rng)])
    }
}

impl Check for OneDimensional {
    fn name(&self) -> &'static str {
        "one-dimensional"
    }
    fn applies(&self, target: &Target) -> bool {
        target.group.as_scalar().is_some_and(|g| g.tags().compactness != crate::groups::Compactness::Compact)
    }
    fn summary(&self) -> &'static str {
        "an ordering along which the metric is additive"
    }
    fn default_tol(&self) -> f64 {
        crate::transport::CHAIN_TOL
    }
    fn run(&self, target: &Target, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Report>> {
        let g = needs_scalar(self.name(), target)?;
        let carrier = g.carrier();
        let sets: Vec<Vec<f64>> = (0..cfg.samples.min(MEASURE_SAMPLES))
            .map(|_| {
                let k = rng.random_range(3..9);
                (0..k).map(|_| carrier.sample_scalar(rng)).collect()
            })
            .collect();
        Ok(vec![check_one_dimensionality(g.as_ref(), target.chart.as_ref(), &sets)])
    }
}

impl Check for DeclaredTags {
    fn name(&self) -> &'static str {
        "tags"
    }
    fn summary(&self) -> &'static str {
        "compactness and density-in-itself, reported as declared"
    }
    fn default_tol(&self) -> f64 {
        0.0
    }
    fn run(&self, target: &Target, _cfg: &CheckConfig, _rng: &mut ChaCha8Rng) -> Result<Vec<Report>> {
        Ok(declared_tags(target.group.as_group().as_ref()))
    }
}

/// All checks, in declaration order.
pub fn registry() -> Vec<Box<dyn Check>> {
    vec![
        Box::new(Axioms),
        Box::new(Abelian),
        Box::new(MetricInvariance),
        Box::new(MeasureInvariance),
        Box::new(Pushforward),
        Box::new(QuasiInvariance),
        Box::new(Jacobian),
        Box::new(OneDimensional),
        Box::new(DeclaredTags),
    ]
}

/// Names of the checks that apply to `target`, in declaration order.
pub fn applicable(target: &Target) -> Vec<String> {
    registry().iter().filter(|c| c.applies(target)).map(|c| c.name().to_string()).collect()
}

pub fn lookup(name: &str) -> Result<Box<dyn Check>> {
    registry()
        .into_iter()
        .find(|c| c.name() == name)
        .ok_or_else(|| Error::UnknownSelector(format!("check {name}")))
}

/// Run the named checks in order. Each check samples from its own ChaCha
/// stream of `seed`, so adding or removing a check leaves the others'
/// samples unchanged.
pub fn run_checks(target: &Target, names: &[String], cfg: &CheckConfig, seed: u64) -> Result<Vec<Report>> {
    let all = registry();
    let mut out = Vec::new();
    for name in names {
        let (stream, check) = all
            .iter()
            .enumerate()
            .find(|(_, c)| c.name() == name)
            .ok_or_else(|| Error::UnknownSelector(format!("check {name}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64 + 1);
        out.extend(check.run(target, cfg, &mut rng)?);
    }
    Ok(out)
}

/// Deliberately broken groups and measures, each paired with the check
/// that must reject it.
pub mod mutants {
    use super::*;
    use crate::expr::Params;
    use crate::groups::{euclidean, Compactness, RealLine, Tags};
    use crate::measure::MassClass;
    use crate::transport::{log_group, velocity_group, ShearGroup};

    /// The identity nudged by `eps` in its first coordinate.
    #[derive(Debug)]
    pub struct ShiftedIdentity {
        pub inner: Arc<dyn Group>,
        pub eps: f64,
    }

    impl Group for ShiftedIdentity {
        fn name(&self) -> String {
            format!("{} with shifted identity", self.inner.name())
        }
        fn carrier(&self) -> Carrier {
            self.inner.carrier()
        }
        fn tags(&self) -> Tags {
            self.inner.tags()
        }
        fn identity(&self) -> Point {
            let mut e = self.inner.identity();
            e[0] += self.eps;
            e
        }
        fn op(&self, x: &[f64], y: &[f64]) -> Result<Point> {
            self.inner.op(x, y)
        }
        fn invert(&self, x: &[f64]) -> Result<Point> {
            self.inner.invert(x)
        }
        fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
            self.inner.metric(x, y)
        }
    }

    /// `x ⊙ y = x + y + ε·x²y` on the line: not associative.
    #[derive(Debug)]
    pub struct SkewedSum {
        pub eps: f64,
    }

    impl ScalarGroup for SkewedSum {
        fn name(&self) -> String {
            "skewed sum".into()
        }
        fn carrier(&self) -> Carrier {
            Carrier::FullLine
        }
        fn tags(&self) -> Tags {
            RealLine.tags()
        }
        fn identity(&self) -> f64 {
            0.0
        }
        fn op(&self, x: f64, y: f64) -> Result<f64> {
            Ok(x + y + self.eps * x * x * y)
        }
        fn invert(&self, x: f64) -> Result<f64> {
            Ok(-x)
        }
        fn metric(&self, x: f64, y: f64) -> Result<f64> {
            Ok((x - y).abs())
        }
    }

    /// The affine group `(s, b)·(t, d) = (s + t, eˢd + b)` of upper
    /// triangular 2×2 matrices, in log-scale coordinates.
    #[derive(Debug)]
    pub struct Affine;

    impl Group for Affine {
        fn name(&self) -> String {
            "affine 2×2".into()
        }
        fn carrier(&self) -> Carrier {
            Carrier::Product { dim: 2 }
        }
        fn tags(&self) -> Tags {
            Tags { abelian: false, invariant_metric: false, ..Tags::abelian(Compactness::LocallyCompactNoncompact) }
        }
        fn identity(&self) -> Point {
            vec![0.0, 0.0]
        }
        fn op(&self, x: &[f64], y: &[f64]) -> Result<Point> {
            Ok(vec![x[0] + y[0], x[0].exp() * y[1] + x[1]])
        }
        fn invert(&self, x: &[f64]) -> Result<Point> {
            Ok(vec![-x[0], -(-x[0]).exp() * x[1]])
        }
        fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
            Ok(euclidean(x, y))
        }
    }

    /// The line with the metric `|x³ − y³|`, falsely tagged invariant.
    #[derive(Debug)]
    pub struct CubicMetric;

    impl ScalarGroup for CubicMetric {
        fn name(&self) -> String {
            "real line with cubic metric".into()
        }
        fn carrier(&self) -> Carrier {
            Carrier::FullLine
        }
        fn tags(&self) -> Tags {
            RealLine.tags()
        }
        fn identity(&self) -> f64 {
            0.0
        }
        fn op(&self, x: f64, y: f64) -> Result<f64> {
            Ok(x + y)
        }
        fn invert(&self, x: f64) -> Result<f64> {
            Ok(-x)
        }
        fn metric(&self, x: f64, y: f64) -> Result<f64> {
            Ok((x.powi(3) - y.powi(3)).abs())
        }
    }

    /// A shear translation with one coordinate stretched by `1 + eps`.
    #[derive(Debug)]
    pub struct StretchedShear {
        pub inner: ShearGroup,
        pub eps: f64,
    }

    impl Group for StretchedShear {
        fn name(&self) -> String {
            format!("{} stretched", self.inner.name())
        }
        fn carrier(&self) -> Carrier {
            self.inner.carrier()
        }
        fn tags(&self) -> Tags {
            self.inner.tags()
        }
        fn identity(&self) -> Point {
            self.inner.identity()
        }
        fn op(&self, x: &[f64], y: &[f64]) -> Result<Point> {
            let mut p = self.inner.op(x, y)?;
            p[2] *= 1.0 + self.eps;
            Ok(p)
        }
        fn invert(&self, x: &[f64]) -> Result<Point> {
            self.inner.invert(x)
        }
        fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
            self.inner.metric(x, y)
        }
    }

    impl LieGroup for StretchedShear {
        fn translate_dual(&self, g: &[f64], x: &[Dual]) -> Result<Vec<Dual>> {
            let mut p = self.inner.translate_dual(g, x)?;
            p[2] = p[2] * Dual::constant(1.0 + self.eps);
            Ok(p)
        }
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
    #[serde(rename_all = "kebab-case")]
    pub enum Mutant {
        ShiftedIdentity,
        SkewedSum,
        Affine,
        CubicMetric,
        WrongHaarMeasure,
        ScaledDensity,
        OneSidedDensity,
        StretchedShear,
        EuclideanPlane,
    }

    impl Mutant {
        pub const ALL: [Mutant; 9] = [
            Mutant::ShiftedIdentity,
            Mutant::SkewedSum,
            Mutant::Affine,
            Mutant::CubicMetric,
            Mutant::WrongHaarMeasure,
            Mutant::ScaledDensity,
            Mutant::OneSidedDensity,
            Mutant::StretchedShear,
            Mutant::EuclideanPlane,
        ];

        /// The check expected to reject this mutant.
        pub fn paired_check(self) -> &'static str {
            match self {
                Mutant::ShiftedIdentity | Mutant::SkewedSum => "axioms",
                Mutant::Affine => "abelian",
                Mutant::CubicMetric => "metric-invariance",
                Mutant::WrongHaarMeasure => "invariance",
                Mutant::ScaledDensity => "pushforward",
                Mutant::OneSidedDensity => "quasi-invariance",
                Mutant::StretchedShear => "jacobian",
                Mutant::EuclideanPlane => "one-dimensional",
            }
        }

        /// Run the paired check against the mutant.
        pub fn run(self, seed: u64) -> Result<Report> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let quad = QUADRATURE_TOL;
            let mut report = match self {
                Mutant::ShiftedIdentity => {
                    let v = velocity_group(1.0)?.group.as_group();
                    check_group_axioms(&ShiftedIdentity { inner: v, eps: 1e-6 }, 200, ALGEBRAIC_TOL, &mut rng)
                }
                Mutant::SkewedSum => check_group_axioms(&crate::groups::Lifted(Arc::new(SkewedSum { eps: 1e-6 })), 200, ALGEBRAIC_TOL, &mut rng),
                Mutant::Affine => check_abelian(&Affine, 200, ALGEBRAIC_TOL, &mut rng),
                Mutant::CubicMetric => {
                    check_metric_invariance(&crate::groups::Lifted(Arc::new(CubicMetric)), 200, ALGEBRAIC_TOL, &mut rng)
                }
                Mutant::WrongHaarMeasure => {
                    // Lebesgue measure is not invariant under multiplication.
                    let log = log_group()?;
                    let g = log.group.as_scalar().expect("scalar").clone();
                    let m = MeasureSpec::lebesgue(Carrier::HalfLine);
                    let cases = random_cases(g.carrier(), 50, Sidedness::TwoSided, &mut rng);
                    check_measure_invariance(g.as_ref(), &m, &cases, MEASURE_TOL, quad)
                }
                Mutant::ScaledDensity => {
                    let v = velocity_group(1.0)?;
                    let f = v.witness.bijection().expect("chart").clone();
                    let wrong = MeasureSpec::from_expr(
                        "1.5*c^2/(c^2-x^2)",
                        Params::from([("c".to_string(), 1.0)]),
                        f.codomain,
                        MassClass::SigmaFiniteNonfinite,
                    )?;
                    let sets: Vec<IntervalSet> = (0..50).map(|_| random_set(f.codomain, &mut rng)).collect();
                    check_pushforward_consistency(&v.base_measure, &f, &wrong, &sets, PUSHFORWARD_TOL, quad / 10.0)
                }
                Mutant::OneSidedDensity => {
                    // Vanishes on the negative half-line, so translates can become null.
                    let m = MeasureSpec::from_expr("abs(x) + x", Params::new(), Carrier::FullLine, MassClass::SigmaFiniteNonfinite)?;
                    let cases = random_cases(Carrier::FullLine, 200, Sidedness::TwoSided, &mut rng);
                    check_quasi_invariance(&RealLine, &m, &cases, quad)
                }
                Mutant::StretchedShear => {
                    let inner = ShearGroup::new(4)?;
                    check_jacobian_unimodular(&StretchedShear { inner, eps: 1e-3 }, 100, JACOBIAN_TOL, &mut rng)
                }
                Mutant::EuclideanPlane => {
                    let plane = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
                    let cert = crate::transport::one_dimensionality_certificate(|a, b| Ok(euclidean(a, b)), &plane, None)?;
                    let mut t = Tally::new("one-dimensional", "euclidean plane", crate::transport::CHAIN_TOL);
                    let r = match &cert {
                        Certificate::Chain { residual, .. } => *residual,
                        Certificate::Refuted { best, .. } => *best,
                    };
                    t.record(0, Ok((r, format!("{cert:?}"))));
                    t.finish(None)
                }
            };
            report.note = Some(format!("mutant {self:?}"));
            Ok(report)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::mutants::Mutant;
    use super::*;
    use crate::groups::{base_circle, base_real_line, RealLine};
    use crate::haarize::haarize_probability;
    use crate::measure::Normal;
    use crate::transport::{arctan_group, identity_transport, log_group, shear_group, velocity_group};

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(2024)
    }

    #[test]
    fn velocity_axioms_pass() {
        let v = velocity_group(1.0).unwrap();
        let r = check_group_axioms(v.group.as_group().as_ref(), 1000, ALGEBRAIC_TOL, &mut rng());
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn circle_axioms_exact_on_dyadics() {
        let (c, _) = base_circle();
        let g = crate::groups::Lifted(c);
        let mut worst = 0.0f64;
        for a in 0..16 {
            for b in 0..16 {
                for d in 0..16 {
                    let (x, y, z) = ([a as f64 / 16.0], [b as f64 / 16.0], [d as f64 / 16.0]);
                    let l = g.op(&g.op(&x, &y).unwrap(), &z).unwrap();
                    let r = g.op(&x, &g.op(&y, &z).unwrap()).unwrap();
                    worst = worst.max(g.metric(&l, &r).unwrap());
                }
            }
        }
        assert_eq!(worst, 0.0);
    }

    #[test]
    fn reports_are_reproducible() {
        let t = Target::from_transport(&arctan_group(1.0).unwrap());
        let names: Vec<String> = ["axioms", "invariance"].map(String::from).to_vec();
        let cfg = CheckConfig { samples: 50, ..CheckConfig::default() };
        let a = run_checks(&t, &names, &cfg, 7).unwrap();
        let b = run_checks(&t, &names, &cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = run_checks(&t, &names, &cfg, 8).unwrap();
        assert_ne!(a[0].max_residual, c[0].max_residual);
    }

    #[test]
    fn streams_are_independent_of_check_selection() {
        let t = Target::from_transport(&log_group().unwrap());
        let cfg = CheckConfig { samples: 30, ..CheckConfig::default() };
        let both = run_checks(&t, &["axioms".into(), "abelian".into()], &cfg, 1).unwrap();
        let alone = run_checks(&t, &["abelian".into()], &cfg, 1).unwrap();
        assert_eq!(both[1], alone[0]);
    }

    #[test]
    fn shear_abelian_and_unimodular() {
        let s = shear_group(3).unwrap();
        let r = check_abelian(s.group.as_group().as_ref(), 500, ALGEBRAIC_TOL, &mut rng());
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        let lie = s.group.as_lie().unwrap();
        let r = check_jacobian_unimodular(lie.as_ref(), 100, JACOBIAN_TOL, &mut rng());
        assert_eq!(r.verdict, Verdict::Pass);
        let j = left_translation_jacobian(lie.as_ref(), &[0.0; 3], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(determinant(j), 1.0);
    }

    #[test]
    fn metric_invariance_for_builtins() {
        for t in [log_group().unwrap(), identity_transport().unwrap(), velocity_group(1.0).unwrap()] {
            let r = check_metric_invariance(t.group.as_group().as_ref(), 500, ALGEBRAIC_TOL, &mut rng());
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        }
    }

    #[test]
    fn measure_invariance_examples() {
        let (line, lebesgue) = base_real_line();
        let case = InvarianceCase { set: IntervalSet::interval(0.0, 1.0).unwrap(), left: Some(7.0), right: None };
        let r = check_measure_invariance(line.as_ref(), &lebesgue, &[case], MEASURE_TOL, QUADRATURE_TOL);
        assert_eq!(r.max_residual, 0.0);

        let v = velocity_group(1.0).unwrap();
        let case = InvarianceCase { set: IntervalSet::interval(0.0, 0.5).unwrap(), left: Some(0.3), right: None };
        let r = check_measure_invariance(v.group.as_scalar().unwrap().as_ref(), &v.measure, &[case], MEASURE_TOL, QUADRATURE_TOL);
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");

        let h = haarize_probability(Arc::new(Normal::standard()), None).unwrap();
        let t = Target::haarized(&h);
        let cfg = CheckConfig { samples: 100, ..CheckConfig::default() };
        let r = run_checks(&t, &["invariance".into()], &cfg, 3).unwrap();
        assert_eq!(r[0].verdict, Verdict::Pass, "{:?}", r[0]);
    }

    #[test]
    fn pushforward_examples() {
        let log = log_group().unwrap();
        let f = log.witness.bijection().unwrap();
        let e = IntervalSet::interval(1.0, std::f64::consts::E).unwrap();
        let r = check_pushforward_consistency(&log.base_measure, f, &log.measure, &[e], PUSHFORWARD_TOL, 1e-10);
        assert_eq!(r.verdict, Verdict::Pass);
        let id = identity_transport().unwrap();
        let f = id.witness.bijection().unwrap();
        let s = IntervalSet::interval(-2.0, 3.0).unwrap();
        let r = check_pushforward_consistency(&id.base_measure, f, &id.measure, &[s], PUSHFORWARD_TOL, 1e-10);
        assert_eq!(r.max_residual, 0.0);
        let v = velocity_group(1.0).unwrap();
        let f = v.witness.bijection().unwrap();
        let s = IntervalSet::interval(-0.9, 0.9).unwrap();
        let r = check_pushforward_consistency(&v.base_measure, f, &v.measure, &[s], PUSHFORWARD_TOL, 1e-10);
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn quasi_invariance_examples() {
        let v = velocity_group(1.0).unwrap();
        let g = v.group.as_scalar().unwrap();
        let cases = [
            InvarianceCase { set: IntervalSet::interval(0.1, 0.2).unwrap(), left: Some(0.5), right: Some(-0.2) },
            InvarianceCase { set: IntervalSet::empty(), left: Some(0.5), right: None },
        ];
        let r = check_quasi_invariance(g.as_ref(), &v.measure, &cases, QUADRATURE_TOL);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn tags_are_declared_only() {
        let r = declared_tags(&crate::groups::Lifted(Arc::new(RealLine)));
        assert!(r.iter().all(|r| r.verdict == Verdict::DeclaredOnly && r.samples == 0));
    }

    #[test]
    fn every_mutant_fails_its_check() {
        for m in Mutant::ALL {
            let r = m.run(11).unwrap();
            assert_eq!(r.check, m.paired_check(), "{m:?}");
            assert_eq!(r.verdict, Verdict::Fail, "{m:?}: {r:?}");
            assert!(!r.witnesses.is_empty() && r.witnesses.len() <= 10);
        }
    }

    #[test]
    fn table_has_a_row_per_report() {
        let t = Target::from_transport(&log_group().unwrap());
        let cfg = CheckConfig { samples: 20, ..CheckConfig::default() };
        let reports = run_checks(&t, &["axioms".into(), "tags".into()], &cfg, 0).unwrap();
        let text = table(&reports);
        assert_eq!(text.lines().count(), 2 + reports.len());
        assert!(text.contains("declared"));
    }

    #[test]
    fn applicability_follows_the_target() {
        let shear = Target::from_transport(&shear_group(3).unwrap());
        let names = applicable(&shear);
        assert!(names.contains(&"jacobian".to_string()));
        assert!(!names.contains(&"pushforward".to_string()));
        let log = Target::from_transport(&log_group().unwrap());
        let names = applicable(&log);
        assert!(names.contains(&"pushforward".to_string()) && !names.contains(&"jacobian".to_string()));
    }

    #[test]
    fn unknown_check_is_rejected() {
        assert!(matches!(lookup("nope"), Err(Error::UnknownSelector(_))));
    }
}
