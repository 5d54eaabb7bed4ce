//! Borel sets as finite interval unions, density measures, quadrature,
//! distributions, and pushforward of measures along bijections.

mod bijection;
mod distribution;
mod interval_set;
pub mod quadrature;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use bijection::{Bijection1D, Monotone};
pub use distribution::{
    numeric_quantile, Beta, Cauchy, DensityDistribution, Distribution, Exponential, Normal, Uniform,
    QUANTILE_TOL,
};
pub use interval_set::IntervalSet;

pub(crate) use distribution::check_unit;
pub use quadrature::{Estimate, Quadrature};


use crate::error::{Error, Result};
use crate::expr::{Expr, Params};
use crate::groups::Carrier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassClass {
    Probability,
    SigmaFiniteNonfinite,
    QuasiFinite,
}

/// Density supplied by code rather than an expression.
pub trait DensityFn: Send + Sync + fmt::Debug {
    fn density(&self, x: f64) -> Result<f64>;

    /// Points in `(a, b)` where the density may jump.
    fn breakpoints(&self, _a: f64, _b: f64) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone)]
pub enum Density {
    Constant(f64),
    Expr { expr: Expr, params: Params },
    Distribution(Arc<dyn Distribution>),
    /// `p(f⁻¹(x))·|d f⁻¹/dx|`.
    Pushforward { base: Box<MeasureSpec>, map: Bijection1D },
    Custom(Arc<dyn DensityFn>),
}

/// A measure with a density with respect to length on its carrier.
/// The density is taken to vanish off the carrier.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    pub label: String,
    pub carrier: Carrier,
    pub density: Density,
    pub mass_class: MassClass,
}

impl MeasureSpec {
    pub fn lebesgue(carrier: Carrier) -> Self {
        Self::scaled_lebesgue(carrier, 1.0)
    }

    pub fn scaled_lebesgue(carrier: Carrier, scale: f64) -> Self {
        let (lo, hi) = carrier.bounds();
        let mass_class = if (hi - lo).is_finite() && carrier.dim() == 1 {
            MassClass::QuasiFinite
        } else {
            MassClass::SigmaFiniteNonfinite
        };
        Self {
            label: if scale == 1.0 {
                "lebesgue".into()
            } else {
                format!("{scale}·lebesgue")
            },
            carrier,
            density: Density::Constant(scale),
            mass_class,
        }
    }

    pub fn from_expr(text: &str, params: Params, carrier: Carrier, mass_class: MassClass) -> Result<Self> {
        let names: Vec<&str> = params.keys().map(String::as_str).collect();
        let expr = Expr::parse_with_params(text, &names)?;
        Ok(Self {
            label: format!("density {text}"),
            carrier,
            density: Density::Expr { expr, params },
            mass_class,
        })
    }

    pub fn from_distribution(d: Arc<dyn Distribution>) -> Self {
        Self {
            label: d.name(),
            carrier: d.support(),
            density: Density::Distribution(d),
            mass_class: MassClass::Probability,
        }
    }

    pub fn custom(label: impl Into<String>, carrier: Carrier, density: Arc<dyn DensityFn>, mass_class: MassClass) -> Self {
        Self {
            label: label.into(),
            carrier,
            density: Density::Custom(density),
            mass_class,
        }
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        if !self.carrier.contains(x) {
            return Ok(0.0);
        }
        match &self.density {
            Density::Constant(c) => Ok(*c),
            Density::Expr { expr, params } => expr.eval(x, params),
            Density::Distribution(d) => Ok(d.pdf(x)),
            Density::Pushforward { base, map } => {
                let y = map.inverse(x)?;
                let jac = map.inverse_derivative(x)?.abs();
                Ok(base.density(y)? * jac)
            }
            Density::Custom(f) => f.density(x),
        }
    }

    /// Points in `(a, b)` where the density may jump.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = match &self.density {
            Density::Constant(_) | Density::Expr { .. } => Vec::new(),
            Density::Distribution(d) => d.breakpoints(a, b),
            Density::Custom(f) => f.breakpoints(a, b),
            Density::Pushforward { base, map } => {
                let (pa, pb) = (map.inverse(a).unwrap_or(f64::NAN), map.inverse(b).unwrap_or(f64::NAN));
                let (lo, hi) = if pa <= pb { (pa, pb) } else { (pb, pa) };
                if lo.is_nan() || hi.is_nan() {
                    Vec::new()
                } else {
                    base.breakpoints(lo, hi).into_iter().filter_map(|t| map.forward(t).ok()).collect()
                }
            }
        };
        pts.retain(|&t| t > a && t < b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Mass of `s ∩ carrier` with absolute error at most `tol`.
    pub fn integrate(&self, s: &IntervalSet, tol: f64) -> Result<f64> {
        if self.carrier.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.carrier.dim() });
        }
        let (lo, hi) = self.carrier.bounds();
        let clipped = s.intersect_interval(lo, hi);
        if let Density::Constant(c) = self.density {
            return Ok(c * clipped.length());
        }
        let mut panels = Vec::new();
        for &(a, b) in clipped.pieces() {
            let mut start = a;
            for t in self.breakpoints(a, b) {
                panels.push((start, t));
                start = t;
            }
            panels.push((start, b));
        }
        let quad = Quadrature::with_tol(tol / panels.len().max(1) as f64);
        let mut total = 0.0;
        for (a, b) in panels {
            total += quad.integrate(|x| self.density(x), a, b)?.value;
        }
        Ok(total)
    }

    /// Total mass on the carrier.
    pub fn total_mass(&self, tol: f64) -> Result<f64> {
        let (lo, hi) = self.carrier.bounds();
        self.integrate(&IntervalSet::interval(lo, hi)?, tol)
    }
}

/// `f⁻¹(s)` for a monotone bijection.
pub fn preimage_set(f: &Bijection1D, s: &IntervalSet) -> Result<IntervalSet> {
    f.preimage_set(s)
}

/// The measure `Y ↦ m(f⁻¹(Y))` on `f`'s codomain, represented by the
/// change-of-variables density `p(f⁻¹(x))·|d f⁻¹/dx|(x)`.
pub fn pushforward(m: &MeasureSpec, f: &Bijection1D) -> Result<MeasureSpec> {
    if m.carrier.bounds() != f.domain.bounds() {
        return Err(Error::Construction(format!(
            "measure lives on {} but the map is defined on {}",
            m.carrier, f.domain
        )));
    }
    // Probe the inverse derivative on a deterministic grid of the codomain.
    let (lo, hi) = f.codomain.bounds();
    for k in 1..64 {
        let t = k as f64 / 64.0;
        let y = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => lo + t * (hi - lo),
            (true, false) => lo + t / (1.0 - t),
            (false, true) => hi - t / (1.0 - t),
            (false, false) => (t - 0.5) / (t * (1.0 - t)),
        };
        if !f.codomain.contains(y) {
            continue;
        }
        if let Err(e) = f.inverse_derivative(y) {
            return Err(Error::Construction(format!("d f⁻¹/dx undefined at {y}: {e}")));
        }
    }
    Ok(MeasureSpec {
        label: format!("pushforward of {} along {}", m.label, f.label),
        carrier: f.codomain,
        density: Density::Pushforward { base: Box::new(m.clone()), map: f.clone() },
        mass_class: m.mass_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn c1() -> Params {
        Params::from([("c".to_string(), 1.0)])
    }

    #[test]
    fn lebesgue_length() {
        let m = MeasureSpec::lebesgue(Carrier::FullLine);
        assert_eq!(m.integrate(&IntervalSet::interval(2.0, 5.0).unwrap(), 1e-10).unwrap(), 3.0);
    }

    #[test]
    fn reciprocal_density() {
        let m = MeasureSpec::from_expr("1/x", Params::new(), Carrier::HalfLine, MassClass::SigmaFiniteNonfinite).unwrap();
        let v = m.integrate(&IntervalSet::interval(1.0, E).unwrap(), 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn velocity_density_closed_form() {
        let m = MeasureSpec::from_expr(
            "c^2/(c^2-x^2)",
            c1(),
            Carrier::open_interval(-1.0, 1.0).unwrap(),
            MassClass::SigmaFiniteNonfinite,
        )
        .unwrap();
        let v = m.integrate(&IntervalSet::interval(0.0, 0.5).unwrap(), 1e-10).unwrap();
        // Antiderivative (c/2)·ln((c+t)/(c−t)).
        assert!((v - 0.5 * 3f64.ln()).abs() < 1e-10);
        assert!((v - 0.549306).abs() < 1e-6);
    }

    #[test]
    fn integration_clips_to_carrier() {
        let m = MeasureSpec::from_distribution(Arc::new(Exponential::new(1.0).unwrap()));
        let outside = IntervalSet::interval(-2.0, -1.0).unwrap();
        assert_eq!(m.integrate(&outside, 1e-10).unwrap(), 0.0);
        let straddle = IntervalSet::interval(-1.0, 1.0).unwrap();
        assert!((m.integrate(&straddle, 1e-12).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn pushforward_through_exp_is_reciprocal_density() {
        let m = pushforward(&MeasureSpec::lebesgue(Carrier::FullLine), &Bijection1D::exp()).unwrap();
        assert_eq!(m.carrier, Carrier::HalfLine);
        for x in [0.1, 1.0, 2.5, 40.0] {
            assert!((m.density(x).unwrap() - 1.0 / x).abs() < 1e-15 / x.min(1.0));
        }
    }

    #[test]
    fn pushforward_through_velocity_chart() {
        // Unit Lebesgue pushes forward to 2c/(c²−t²); the c/2-normalized
        // Lebesgue measure gives c²/(c²−t²).
        let f = Bijection1D::velocity(1.0).unwrap();
        let unit = pushforward(&MeasureSpec::lebesgue(Carrier::FullLine), &f).unwrap();
        let half = pushforward(&MeasureSpec::scaled_lebesgue(Carrier::FullLine, 0.5), &f).unwrap();
        for t in [-0.9, -0.3, 0.0, 0.5, 0.99] {
            let expect = 1.0 / (1.0 - t * t);
            assert!((unit.density(t).unwrap() - 2.0 * expect).abs() < 1e-12 * expect);
            assert!((half.density(t).unwrap() - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn pushforward_through_identity_keeps_density() {
        let base = MeasureSpec::from_distribution(Arc::new(Normal::standard()));
        let m = pushforward(&base, &Bijection1D::identity()).unwrap();
        for x in [-2.0, 0.0, 0.3, 1.7] {
            assert_eq!(m.density(x).unwrap(), base.density(x).unwrap());
        }
    }

    #[test]
    fn pushforward_requires_matching_domain() {
        let m = MeasureSpec::lebesgue(Carrier::Circle);
        assert!(matches!(pushforward(&m, &Bijection1D::exp()), Err(Error::Construction(_))));
    }

    #[test]
    fn pushforward_rejects_nondifferentiable_inverse() {
        let f = Bijection1D::from_strings(
            "x*abs(x)",
            "x/sqrt(abs(x))",
            Params::new(),
            Carrier::FullLine,
            Carrier::FullLine,
            Monotone::Increasing,
        )
        .unwrap();
        // Every grid point is fine except the kink at 0, which the grid hits.
        assert!(matches!(
            pushforward(&MeasureSpec::lebesgue(Carrier::FullLine), &f),
            Err(Error::Construction(_))
        ));
    }

    fn random_set<R: Rng>(rng: &mut R, carrier: Carrier) -> IntervalSet {
        let k = rng.random_range(1..4);
        let pts: Vec<f64> = (0..2 * k).map(|_| carrier.sample_scalar(rng)).collect();
        let mut pts = pts;
        pts.sort_by(f64::total_cmp);
        IntervalSet::from_pieces(pts.chunks(2).map(|c| (c[0], c[1])).collect()).unwrap()
    }

    #[test]
    fn density_route_matches_preimage_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let bases = [
            MeasureSpec::lebesgue(Carrier::FullLine),
            MeasureSpec::from_distribution(Arc::new(Normal::standard())),
        ];
        let maps = Bijection1D::catalogue();
        for _ in 0..100 {
            let f = &maps[rng.random_range(0..maps.len())];
            let base = &bases[rng.random_range(0..bases.len())];
            let pushed = pushforward(base, f).unwrap();
            let y = random_set(&mut rng, f.codomain);
            let density_route = pushed.integrate(&y, 1e-10).unwrap();
            let preimage_route = base.integrate(&preimage_set(f, &y).unwrap(), 1e-10).unwrap();
            assert!(
                (density_route - preimage_route).abs() <= 1e-7,
                "{} on {y}: {density_route} vs {preimage_route}",
                f.label
            );
        }
    }

    #[test]
    fn pushforward_conserves_probability() {
        let base = MeasureSpec::from_distribution(Arc::new(Normal::new(0.5, 2.0).unwrap()));
        for f in Bijection1D::catalogue() {
            let m = pushforward(&base, &f).unwrap();
            assert_eq!(m.mass_class, MassClass::Probability);
            let total = m.total_mass(1e-10).unwrap();
            assert!((total - 1.0).abs() <= 1e-7, "{}: {total}", f.label);
        }
    }
}
