//! Diffused probability distributions on the line: density, cdf, quantile.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::erfc;

use super::bijection::positive;
use super::MeasureSpec;
use crate::error::{Error, Result};
use crate::groups::Carrier;

/// Accuracy target `|cdf(quantile(u)) − u|`.
pub const QUANTILE_TOL: f64 = 1e-12;

pub trait Distribution: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    /// Support carrier; the cdf is strictly increasing on it.
    fn support(&self) -> Carrier;
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;

    fn quantile(&self, u: f64) -> Result<f64> {
        numeric_quantile(self, u)
    }

    /// Points in `(a, b)` where the density may jump.
    fn breakpoints(&self, _a: f64, _b: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Whether the cdf reaches 0 at a point of the support (the left
    /// endpoint is closed), so the cdf alone is a bijection onto `[0,1)`.
    fn closed_left(&self) -> bool {
        matches!(self.support(), Carrier::HalfOpen { .. } | Carrier::Circle)
    }
}

pub(crate) fn check_unit(u: f64) -> Result<f64> {
    if u > 0.0 && u < 1.0 {
        Ok(u)
    } else {
        Err(Error::ProbabilityOutOfRange(u))
    }
}

/// Quantile by bracketing bisection with safeguarded Newton steps.
pub fn numeric_quantile<D: Distribution + ?Sized>(d: &D, u: f64) -> Result<f64> {
    check_unit(u)?;
    let (slo, shi) = d.support().bounds();
    let mut lo = if slo.is_finite() { slo } else { -1.0 };
    while !slo.is_finite() && d.cdf(lo) > u {
        lo *= 2.0;
        if !lo.is_finite() {
            return Err(Error::QuantileNonConvergence(u));
        }
    }
    let mut hi = if shi.is_finite() { shi } else { lo.max(0.0) + 1.0 };
    while !shi.is_finite() && d.cdf(hi) < u {
        hi = 2.0 * hi + 1.0;
        if !hi.is_finite() {
            return Err(Error::QuantileNonConvergence(u));
        }
    }
    let mut x = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, x);
    for _ in 0..400 {
        let r = d.cdf(x) - u;
        if r.abs() < best.0 {
            best = (r.abs(), x);
        }
        if r.abs() <= 0.1 * QUANTILE_TOL {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let p = d.pdf(x);
        let newton = x - r / p;
        let next = if p > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x || next <= lo && next >= hi {
            break;
        }
        x = next;
        if !(lo < hi) || hi - lo <= f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let (r, xb) = best;
    if r <= QUANTILE_TOL {
        Ok(xb)
    } else {
        Err(Error::QuantileNonConvergence(u))
    }
}

/// Uniform on `[0,1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl Distribution for Uniform {
    fn name(&self) -> String {
        "uniform".into()
    }
    fn support(&self) -> Carrier {
        Carrier::HalfOpen { lo: 0.0, hi: 1.0 }
    }
    fn pdf(&self, x: f64) -> f64 {
        if (0.0..1.0).contains(&x) {
            1.0
        } else {
            0.0
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
    fn quantile(&self, u: f64) -> Result<f64> {
        check_unit(u)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        Ok(Self { rate: positive("rate", rate)? })
    }
}

impl Distribution for Exponential {
    fn name(&self) -> String {
        format!("exponential:{}", self.rate)
    }
    fn support(&self) -> Carrier {
        Carrier::HalfOpen { lo: 0.0, hi: f64::INFINITY }
    }
    fn pdf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.rate * (-self.rate * x).exp()
        } else {
            0.0
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }
    fn quantile(&self, u: f64) -> Result<f64> {
        Ok(-(-check_unit(u)?).ln_1p() / self.rate)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Normal {
    mean: f64,
    sd: f64,
}

impl Normal {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidArgument(format!("mean {mean} is not finite")));
        }
        Ok(Self { mean, sd: positive("sd", sd)? })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, sd: 1.0 }
    }
}

impl Distribution for Normal {
    fn name(&self) -> String {
        format!("normal:{},{}", self.mean, self.sd)
    }
    fn support(&self) -> Carrier {
        Carrier::FullLine
    }
    fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        (-0.5 * z * z).exp() / (self.sd * (2.0 * PI).sqrt())
    }
    fn cdf(&self, x: f64) -> f64 {
        0.5 * erfc(-(x - self.mean) / (self.sd * SQRT_2))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Cauchy {
    loc: f64,
    scale: f64,
}

impl Cauchy {
    pub fn new(loc: f64, scale: f64) -> Result<Self> {
        if !loc.is_finite() {
            return Err(Error::InvalidArgument(format!("location {loc} is not finite")));
        }
        Ok(Self { loc, scale: positive("scale", scale)? })
    }
}

impl Distribution for Cauchy {
    fn name(&self) -> String {
        format!("cauchy:{},{}", self.loc, self.scale)
    }
    fn support(&self) -> Carrier {
        Carrier::FullLine
    }
    fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        1.0 / (PI * self.scale * (1.0 + z * z))
    }
    fn cdf(&self, x: f64) -> f64 {
        // atan2 keeps full relative accuracy in both tails.
        1.0f64.atan2(-(x - self.loc) / self.scale) / PI
    }
    fn quantile(&self, u: f64) -> Result<f64> {
        let u = check_unit(u)?;
        Ok(if u < 0.5 {
            self.loc - self.scale / (PI * u).tan()
        } else {
            self.loc + self.scale / (PI * (1.0 - u)).tan()
        })
    }
}

/// Beta(a, b) on `[0,1)`; quantile by numeric inversion.
#[derive(Debug, Clone, Copy)]
pub struct Beta {
    a: f64,
    b: f64,
    ln_norm: f64,
}

impl Beta {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let (a, b) = (positive("a", a)?, positive("b", b)?);
        Ok(Self { a, b, ln_norm: ln_beta(a, b) })
    }
}

impl Distribution for Beta {
    fn name(&self) -> String {
        format!("beta:{},{}", self.a, self.b)
    }
    fn support(&self) -> Carrier {
        Carrier::HalfOpen { lo: 0.0, hi: 1.0 }
    }
    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        ((self.a - 1.0) * x.ln() + (self.b - 1.0) * (-x).ln_1p() - self.ln_norm).exp()
    }
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            beta_reg(self.a, self.b, x)
        }
    }
}

/// Probability measure given by a density; cdf by quadrature.
#[derive(Debug, Clone)]
pub struct DensityDistribution {
    measure: MeasureSpec,
    closed_left: bool,
    tol: f64,
}

impl DensityDistribution {
    /// `measure` must have total mass 1 on its carrier within `1e−8`.
    pub fn new(measure: MeasureSpec) -> Result<Self> {
        let (lo, hi) = measure.carrier.bounds();
        let total = measure.integrate(&super::IntervalSet::interval(lo, hi)?, 1e-11)?;
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::Construction(format!("density integrates to {total}, not 1")));
        }
        let closed_left = matches!(measure.carrier, Carrier::HalfOpen { .. } | Carrier::Circle);
        Ok(Self { measure, closed_left, tol: 1e-13 })
    }
}

impl Distribution for DensityDistribution {
    fn name(&self) -> String {
        self.measure.label.clone()
    }
    fn support(&self) -> Carrier {
        self.measure.carrier
    }
    fn pdf(&self, x: f64) -> f64 {
        self.measure.density(x).unwrap_or(0.0)
    }
    fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.measure.carrier.bounds();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let Ok(s) = super::IntervalSet::interval(lo, x) else {
            return 0.0;
        };
        self.measure.integrate(&s, self.tol).unwrap_or(f64::NAN).clamp(0.0, 1.0)
    }
    fn closed_left(&self) -> bool {
        self.closed_left
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_quantile() {
        assert_eq!(Uniform.quantile(0.25).unwrap(), 0.25);
    }

    #[test]
    fn exponential_median() {
        let d = Exponential::new(1.0).unwrap();
        assert!((d.quantile(0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((numeric_quantile(&d, 0.5).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_against_bisection_oracle() {
        // Oracle: plain bisection on the cdf, independent of the Newton path.
        let d = Normal::standard();
        let (mut lo, mut hi) = (0.0f64, 5.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if d.cdf(mid) < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = d.quantile(0.975).unwrap();
        assert!((q - lo).abs() < 1e-11);
        assert!((q - 1.959964).abs() < 1e-6);
    }

    #[test]
    fn quantiles_meet_tolerance() {
        let dists: Vec<Box<dyn Distribution>> = vec![
            Box::new(Uniform),
            Box::new(Exponential::new(2.5).unwrap()),
            Box::new(Normal::new(1.0, 3.0).unwrap()),
            Box::new(Cauchy::new(-1.0, 0.5).unwrap()),
            Box::new(Beta::new(2.0, 5.0).unwrap()),
            Box::new(Beta::new(0.5, 0.5).unwrap()),
        ];
        for d in &dists {
            for k in 1..200 {
                let u = k as f64 / 200.0;
                let x = d.quantile(u).unwrap();
                assert!((d.cdf(x) - u).abs() <= QUANTILE_TOL, "{} at {u}", d.name());
            }
            for u in [1e-9, 1e-4, 1.0 - 1e-4, 1.0 - 1e-9] {
                if d.name() == "beta:0.5,0.5" && u == 1.0 - 1e-9 {
                    continue;
                }
                let x = d.quantile(u).unwrap_or_else(|e| panic!("{} at {u}: {e}", d.name()));
                assert!((d.cdf(x) - u).abs() <= QUANTILE_TOL, "{} at {u}", d.name());
            }
        }
    }

    #[test]
    fn unrepresentable_quantile_is_reported() {
        // The arcsine quantile at 1 − 1e-9 is 1 − 2.5e-18, which rounds to 1.
        let d = Beta::new(0.5, 0.5).unwrap();
        assert!(matches!(d.quantile(1.0 - 1e-9), Err(Error::QuantileNonConvergence(_))));
    }

    #[test]
    fn out_of_range_probability() {
        assert!(matches!(Normal::standard().quantile(0.0), Err(Error::ProbabilityOutOfRange(_))));
        assert!(matches!(Uniform.quantile(1.0), Err(Error::ProbabilityOutOfRange(_))));
    }

    #[test]
    fn closed_left_flags() {
        assert!(Uniform.closed_left());
        assert!(Exponential::new(1.0).unwrap().closed_left());
        assert!(!Normal::standard().closed_left());
        assert!(!Cauchy::new(0.0, 1.0).unwrap().closed_left());
    }

    #[test]
    fn density_distribution_matches_closed_form() {
        let m = MeasureSpec::from_expr(
            "exp(-x)",
            crate::expr::Params::new(),
            Carrier::HalfOpen { lo: 0.0, hi: f64::INFINITY },
            super::super::MassClass::Probability,
        )
        .unwrap();
        let d = DensityDistribution::new(m).unwrap();
        let e = Exponential::new(1.0).unwrap();
        for x in [0.1, 0.7, 2.0, 5.0] {
            assert!((d.cdf(x) - e.cdf(x)).abs() < 1e-11);
        }
        assert!((d.quantile(0.5).unwrap() - 2f64.ln()).abs() < 1e-10);
    }
}
