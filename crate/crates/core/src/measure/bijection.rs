use std::fmt;

use rand::Rng;
use serde::Serialize;

use super::IntervalSet;
use crate::error::{Error, Result};
use crate::expr::{Expr, Params};
use crate::groups::Carrier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotone {
    Increasing,
    Decreasing,
}

/// A monotone bijection `domain → codomain` given by a forward/inverse
/// expression pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Bijection1D {
    pub label: String,
    pub forward: Expr,
    pub inverse: Expr,
    pub params: Params,
    pub domain: Carrier,
    pub codomain: Carrier,
    pub monotone: Monotone,
}

impl Bijection1D {
    pub fn new(
        label: impl Into<String>,
        forward: Expr,
        inverse: Expr,
        params: Params,
        domain: Carrier,
        codomain: Carrier,
        monotone: Monotone,
    ) -> Result<Self> {
        for name in forward.params().into_iter().chain(inverse.params()) {
            if !params.contains_key(&name) {
                return Err(Error::UnboundParameter(name));
            }
        }
        if domain.dim() != 1 || codomain.dim() != 1 {
            return Err(Error::InvalidArgument("bijections act on one-dimensional carriers".into()));
        }
        Ok(Self {
            label: label.into(),
            forward,
            inverse,
            params,
            domain,
            codomain,
            monotone,
        })
    }

    pub fn from_strings(
        forward: &str,
        inverse: &str,
        params: Params,
        domain: Carrier,
        codomain: Carrier,
        monotone: Monotone,
    ) -> Result<Self> {
        let names: Vec<&str> = params.keys().map(String::as_str).collect();
        let f = Expr::parse_with_params(forward, &names)?;
        let g = Expr::parse_with_params(inverse, &names)?;
        Self::new(format!("x ↦ {forward}"), f, g, params, domain, codomain, monotone)
    }

    pub fn identity() -> Self {
        Self::new("identity", Expr::Var, Expr::Var, Params::new(), Carrier::FullLine, Carrier::FullLine, Monotone::Increasing)
            .expect("identity is well-formed")
    }

    /// `exp : ℝ → (0, ∞)`.
    pub fn exp() -> Self {
        Self::from_strings("exp(x)", "ln(x)", Params::new(), Carrier::FullLine, Carrier::HalfLine, Monotone::Increasing)
            .expect("exp is well-formed")
    }

    /// `y ↦ c(eʸ−1)/(1+eʸ) : ℝ → (−c, c)`.
    pub fn velocity(c: f64) -> Result<Self> {
        positive("c", c)?;
        let mut b = Self::from_strings(
            "c*(exp(x)-1)/(1+exp(x))",
            "ln((c+x)/(c-x))",
            Params::from([("c".to_string(), c)]),
            Carrier::FullLine,
            Carrier::open_interval(-c, c)?,
            Monotone::Increasing,
        )?;
        b.label = format!("velocity chart, c = {c}");
        Ok(b)
    }

    /// `x ↦ 2c·atan(x)/π : ℝ → (−c, c)`.
    pub fn arctan(c: f64) -> Result<Self> {
        positive("c", c)?;
        let mut b = Self::from_strings(
            "2*c*atan(x)/pi",
            "tan(pi*x/(2*c))",
            Params::from([("c".to_string(), c)]),
            Carrier::FullLine,
            Carrier::open_interval(-c, c)?,
            Monotone::Increasing,
        )?;
        b.label = format!("arctan chart, c = {c}");
        Ok(b)
    }

    pub fn negation() -> Self {
        Self::from_strings("-x", "-x", Params::new(), Carrier::FullLine, Carrier::FullLine, Monotone::Decreasing)
            .expect("negation is well-formed")
    }

    /// `x ↦ a·x + b`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("affine map needs finite a ≠ 0, got {a}")));
        }
        Self::from_strings(
            "a*x + b",
            "(x - b)/a",
            Params::from([("a".to_string(), a), ("b".to_string(), b)]),
            Carrier::FullLine,
            Carrier::FullLine,
            if a > 0.0 { Monotone::Increasing } else { Monotone::Decreasing },
        )
    }

    /// The built-in bijections.
    pub fn catalogue() -> Vec<Self> {
        let mut out = vec![Self::identity(), Self::exp(), Self::negation()];
        for c in [0.5, 1.0, 3.0] {
            out.push(Self::velocity(c).expect("c > 0"));
            out.push(Self::arctan(c).expect("c > 0"));
        }
        out.push(Self::affine(-2.5, 1.0).expect("a ≠ 0"));
        out
    }

    pub fn forward(&self, x: f64) -> Result<f64> {
        self.forward.eval(x, &self.params)
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        self.inverse.eval(y, &self.params)
    }

    pub fn inverse_derivative(&self, y: f64) -> Result<f64> {
        self.inverse.derivative_at(y, &self.params)
    }

    /// Sampled check of monotonicity and `inverse ∘ forward = id` within
    /// `1e−10·max(1,|x|)`. Returns the worst relative round-trip residual.
    pub fn validate<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<f64> {
        let mut xs: Vec<f64> = (0..samples).map(|_| self.domain.sample_scalar(rng)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut worst: f64 = 0.0;
        let mut prev: Option<f64> = None;
        for &x in &xs {
            let y = self.forward(x)?;
            if !self.codomain.contains(y) {
                return Err(Error::Construction(format!("{}: f({x}) = {y} leaves the codomain", self.label)));
            }
            if let Some(p) = prev {
                let ok = match self.monotone {
                    Monotone::Increasing => y >= p,
                    Monotone::Decreasing => y <= p,
                };
                if !ok {
                    return Err(Error::Construction(format!("{}: not {:?} near {x}", self.label, self.monotone)));
                }
            }
            prev = Some(y);
            let back = self.inverse(y)?;
            let r = (back - x).abs() / x.abs().max(1.0);
            worst = worst.max(r);
            if r > 1e-10 {
                return Err(Error::Construction(format!(
                    "{}: inverse(forward({x})) = {back}",
                    self.label
                )));
            }
        }
        Ok(worst)
    }

    fn map_endpoints(
        s: &IntervalSet,
        from: Carrier,
        to: Carrier,
        decreasing: bool,
        map: impl Fn(f64) -> Result<f64>,
    ) -> Result<IntervalSet> {
        let (flo, fhi) = from.bounds();
        let (tlo, thi) = to.bounds();
        let (at_lo, at_hi) = if decreasing { (thi, tlo) } else { (tlo, thi) };
        let image = |x: f64| -> Result<f64> {
            if x <= flo {
                Ok(at_lo)
            } else if x >= fhi {
                Ok(at_hi)
            } else {
                map(x)
            }
        };
        let mut pieces = Vec::with_capacity(s.pieces().len());
        for &(a, b) in s.pieces() {
            let (ia, ib) = (image(a)?, image(b)?);
            pieces.push(if decreasing { (ib, ia) } else { (ia, ib) });
        }
        IntervalSet::from_pieces(pieces)
    }

    /// `f⁻¹(s)`. Decreasing maps swap endpoints; the half-open convention
    /// moves a single boundary point, which no diffused measure sees.
    pub fn preimage_set(&self, s: &IntervalSet) -> Result<IntervalSet> {
        if !self.codomain.contains_set(s) {
            return Err(Error::SetOutsideCodomain(s.to_string()));
        }
        Self::map_endpoints(s, self.codomain, self.domain, self.monotone == Monotone::Decreasing, |y| {
            self.inverse(y)
        })
    }

    /// `f(s)`.
    pub fn image_set(&self, s: &IntervalSet) -> Result<IntervalSet> {
        if !self.domain.contains_set(s) {
            return Err(Error::SetOutsideSupport(s.to_string()));
        }
        Self::map_endpoints(s, self.domain, self.codomain, self.monotone == Monotone::Decreasing, |x| {
            self.forward(x)
        })
    }
}

impl fmt::Display for Bijection1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f(x) = {}, f⁻¹(x) = {}", self.forward, self.inverse)?;
        for (k, v) in &self.params {
            write!(f, ", {k} = {v}")?;
        }
        Ok(())
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}
