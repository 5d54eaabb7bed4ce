//! Name-addressable constructions: `velocity:1`, `normal:0,1`, `shear:5`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Params;
use crate::groups::{base_circle, base_real_line, base_real_n, Carrier, GroupSpec, ScalarGroup};
use crate::measure::{Beta, Bijection1D, Cauchy, Distribution, Exponential, MeasureSpec, Monotone, Normal, Uniform};
use crate::transport::{arctan_group, log_group, shear_group, transport, velocity_group, TransportResult, Witness};

/// `name` or `name:a,b,…` with numeric arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    pub name: String,
    pub args: Vec<f64>,
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (text, None),
        };
        if name.is_empty() {
            return Err(Error::UnknownSelector(text.into()));
        }
        let args = match rest {
            None => Vec::new(),
            Some(r) => r
                .split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("`{a}` in `{text}` is not a number")))
                })
                .collect::<Result<_>>()?,
        };
        Ok(Selector { name: name.into(), args })
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            let args: Vec<String> = self.args.iter().map(f64::to_string).collect();
            write!(f, ":{}", args.join(","))?;
        }
        Ok(())
    }
}

fn arity(sel: &Selector, n: usize) -> Result<()> {
    if sel.args.len() == n {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("`{}` takes {n} argument(s), got {}", sel.name, sel.args.len())))
    }
}

fn dimension(x: f64) -> Result<usize> {
    if x.fract() == 0.0 && (1.0..=1e6).contains(&x) {
        Ok(x as usize)
    } else {
        Err(Error::InvalidArgument(format!("dimension {x} is not a positive integer")))
    }
}

/// One catalogue row.
#[derive(Debug, Clone, Serialize)]
pub struct EntryInfo {
    pub kind: &'static str,
    pub signature: &'static str,
    pub summary: &'static str,
    pub formulas: Vec<(&'static str, &'static str)>,
}

/// A named group construction.
pub trait GroupFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn info(&self) -> EntryInfo;
    fn build(&self, sel: &Selector) -> Result<TransportResult>;
}

/// A named distribution family.
pub trait DistributionFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn info(&self) -> EntryInfo;
    fn build(&self, sel: &Selector) -> Result<Arc<dyn Distribution>>;
}

struct Builtin<T: ?Sized + 'static> {
    name: &'static str,
    signature: &'static str,
    summary: &'static str,
    formulas: &'static [(&'static str, &'static str)],
    build: fn(&Selector) -> Result<Arc<T>>,
}

impl<T: ?Sized> Builtin<T> {
    fn info(&self, kind: &'static str) -> EntryInfo {
        EntryInfo { kind, signature: self.signature, summary: self.summary, formulas: self.formulas.to_vec() }
    }
}

impl GroupFactory for Builtin<TransportResult> {
    fn name(&self) -> &'static str {
        self.name
    }
    fn info(&self) -> EntryInfo {
        Builtin::info(self, "group")
    }
    fn build(&self, sel: &Selector) -> Result<TransportResult> {
        (self.build)(sel).map(Arc::unwrap_or_clone)
    }
}

impl DistributionFactory for Builtin<dyn Distribution> {
    fn name(&self) -> &'static str {
        self.name
    }
    fn info(&self) -> EntryInfo {
        Builtin::info(self, "distribution")
    }
    fn build(&self, sel: &Selector) -> Result<Arc<dyn Distribution>> {
        (self.build)(sel)
    }
}

fn untransported(group: GroupSpec, measure: MeasureSpec, provenance: &str) -> TransportResult {
    TransportResult { group, base_measure: measure.clone(), measure, witness: Witness::Identity, provenance: provenance.into() }
}

pub fn groups() -> Vec<Box<dyn GroupFactory>> {
    vec![
        Box::new(Builtin::<TransportResult> {
            name: "real-line",
            signature: "real-line",
            summary: "the additive reals",
            formulas: &[("op", "x + y"), ("metric", "|x − y|"), ("haar", "dx")],
            build: |s| {
                arity(s, 0)?;
                let (g, m) = base_real_line();
                Ok(Arc::new(untransported(GroupSpec::Scalar(g), m, "base group")))
            },
        }),
        Box::new(Builtin::<TransportResult> {
            name: "circle",
            signature: "circle",
            summary: "[0,1) under addition mod 1",
            formulas: &[("op", "(x + y) mod 1"), ("metric", "min(|x − y|, 1 − |x − y|)"), ("haar", "dx on [0,1)")],
            build: |s| {
                arity(s, 0)?;
                let (g, m) = base_circle();
                Ok(Arc::new(untransported(GroupSpec::Scalar(g), m, "base group")))
            },
        }),
        Box::new(Builtin::<TransportResult> {
            name: "real-n",
            signature: "real-n:<n>",
            summary: "ℝⁿ under componentwise addition",
            formulas: &[("op", "x + y"), ("metric", "‖x − y‖₂"), ("haar", "dx₁⋯dxₙ")],
            build: |s| {
                arity(s, 1)?;
                let (g, m) = base_real_n(dimension(s.args[0])?)?;
                Ok(Arc::new(untransported(GroupSpec::Vector(g), m, "base group")))
            },
        }),
        Box::new(Builtin::<TransportResult> {
            name: "velocity",
            signature: "velocity:<c>",
            summary: "relativistic velocity addition on (−c, c)",
            formulas: &[
                ("map", "x ↦ c(eˣ − 1)/(1 + eˣ)"),
                ("op", "(x + y)/(1 + xy/c²)"),
                ("metric", "|ln((c+x)/(c−x)) − ln((c+y)/(c−y))|"),
                ("haar", "c²/(c² − t²) dt"),
            ],
            build: |s| {
                arity(s, 1)?;
                velocity_group(s.args[0]).map(Arc::new)
            },
        }),
        Box::new(Builtin::<TransportResult> {
            name: "log",
            signature: "log",
            summary: "positive reals under multiplication",
            formulas: &[("map", "x ↦ exp(x)"), ("op", "x·y"), ("metric", "|ln x − ln y|"), ("haar", "dx/x")],
            build: |s| {
                arity(s, 0)?;
                log_group().map(Arc::new)
            },
        }),
        Box::new(Builtin::<TransportResult> {
            name: "arctan",
            signature: "arctan:<c>",
            summary: "(−c, c) transported by a scaled arctangent",
            formulas: &[
                ("map", "x ↦ (2c/π)·atan(x)"),
                ("op", "(2c/π)·atan(tan(πx/2c) + tan(πy/2c))"),
                ("metric", "|tan(πx/2c) − tan(πy/2c)|"),
                ("haar", "(π/2c)·sec²(πt/2c) dt"),
            ],
            build: |s| {
                arity(s, 1)?;
                arctan_group(s.args[0]).map(Arc::new)
            },
        }),
        Box::new(Builtin::<TransportResult> {
            name: "shear",
            signature: "shear:<n>",
            summary: "ℝⁿ (n ≥ 3) transported by the shear (x₁, x₁² + x₂, x₃, …)",
            formulas: &[
                ("map", "(x₁, x₁² + x₂, x₃, …, xₙ)"),
                ("op", "(x₁+y₁, x₂+y₂+2x₁y₁, x₃+y₃, …)"),
                ("metric", "‖f⁻¹x − f⁻¹y‖₂"),
                ("haar", "dx₁⋯dxₙ"),
            ],
            build: |s| {
                arity(s, 1)?;
                shear_group(dimension(s.args[0])?).map(Arc::new)
            },
        }),
    ]
}

pub fn distributions() -> Vec<Box<dyn DistributionFactory>> {
    vec![
        Box::new(Builtin::<dyn Distribution> {
            name: "uniform",
            signature: "uniform",
            summary: "uniform on [0,1)",
            formulas: &[("pdf", "1"), ("cdf", "x")],
            build: |s| {
                arity(s, 0)?;
                Ok(Arc::new(Uniform))
            },
        }),
        Box::new(Builtin::<dyn Distribution> {
            name: "exponential",
            signature: "exponential:<rate>",
            summary: "exponential on [0,∞)",
            formulas: &[("pdf", "λ·exp(−λx)"), ("cdf", "1 − exp(−λx)")],
            build: |s| {
                arity(s, 1)?;
                Ok(Arc::new(Exponential::new(s.args[0])?))
            },
        }),
        Box::new(Builtin::<dyn Distribution> {
            name: "normal",
            signature: "normal:<mean>,<sd>",
            summary: "Gaussian on the line",
            formulas: &[("pdf", "exp(−(x−m)²/2σ²)/(σ√(2π))"), ("cdf", "erfc(−(x−m)/(σ√2))/2")],
            build: |s| {
                arity(s, 2)?;
                Ok(Arc::new(Normal::new(s.args[0], s.args[1])?))
            },
        }),
        Box::new(Builtin::<dyn Distribution> {
            name: "cauchy",
            signature: "cauchy:<loc>,<scale>",
            summary: "Cauchy on the line",
            formulas: &[("pdf", "s/(π((x−l)² + s²))"), ("cdf", "1/2 + atan((x−l)/s)/π")],
            build: |s| {
                arity(s, 2)?;
                Ok(Arc::new(Cauchy::new(s.args[0], s.args[1])?))
            },
        }),
        Box::new(Builtin::<dyn Distribution> {
            name: "beta",
            signature: "beta:<a>,<b>",
            summary: "beta on [0,1), numeric quantile",
            formulas: &[("pdf", "x^(a−1)(1−x)^(b−1)/B(a,b)"), ("cdf", "I_x(a, b)")],
            build: |s| {
                arity(s, 2)?;
                Ok(Arc::new(Beta::new(s.args[0], s.args[1])?))
            },
        }),
    ]
}

pub fn build_group(selector: &str) -> Result<TransportResult> {
    let sel: Selector = selector.parse()?;
    groups()
        .iter()
        .find(|g| g.name() == sel.name)
        .ok_or_else(|| Error::UnknownSelector(selector.into()))?
        .build(&sel)
}

pub fn build_distribution(selector: &str) -> Result<Arc<dyn Distribution>> {
    let sel: Selector = selector.parse()?;
    distributions()
        .iter()
        .find(|d| d.name() == sel.name)
        .ok_or_else(|| Error::UnknownSelector(selector.into()))?
        .build(&sel)
}

/// `line`, `half-line`, `circle`, `(a,b)` or `[a,b)`.
pub fn parse_carrier(text: &str) -> Result<Carrier> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    match t.as_str() {
        "line" | "real-line" | "R" => return Ok(Carrier::FullLine),
        "half-line" | "positive" => return Ok(Carrier::HalfLine),
        "circle" => return Ok(Carrier::Circle),
        _ => {}
    }
    let bad = || Error::InvalidArgument(format!("cannot read carrier `{text}`"));
    let open_left = t.starts_with('(');
    if !(open_left || t.starts_with('[')) || !t.ends_with(')') {
        return Err(bad());
    }
    let (a, b) = t[1..t.len() - 1].split_once(',').ok_or_else(bad)?;
    let num = |s: &str| -> Result<f64> {
        match s {
            "inf" | "+inf" | "∞" => Ok(f64::INFINITY),
            "-inf" | "−∞" | "-∞" => Ok(f64::NEG_INFINITY),
            _ => s.parse().map_err(|_| bad()),
        }
    };
    let (lo, hi) = (num(a)?, num(b)?);
    match (open_left, lo, hi) {
        (true, lo, hi) if lo == f64::NEG_INFINITY && hi == f64::INFINITY => Ok(Carrier::FullLine),
        (true, lo, hi) if lo == 0.0 && hi == f64::INFINITY => Ok(Carrier::HalfLine),
        (true, lo, hi) => Carrier::open_interval(lo, hi),
        (false, lo, hi) => Carrier::half_open(lo, hi),
    }
}

/// `name=value` pairs separated by commas.
pub fn parse_params(text: &str) -> Result<Params> {
    let mut params = Params::new();
    for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected name=value, got `{pair}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::InvalidArgument(format!("`{v}` is not a number")))?;
        params.insert(k.trim().to_string(), v);
    }
    Ok(params)
}

/// A user-supplied transport of a one-dimensional base group.
#[derive(Debug, Clone)]
pub struct CustomTransport {
    pub base: String,
    pub forward: String,
    pub inverse: String,
    pub params: Params,
    pub domain: Option<Carrier>,
    pub codomain: Carrier,
    pub decreasing: bool,
}

impl CustomTransport {
    pub fn build(&self) -> Result<TransportResult> {
        let (base, base_measure): (Arc<dyn ScalarGroup>, MeasureSpec) = match self.base.as_str() {
            "real-line" => base_real_line(),
            "circle" => base_circle(),
            other => {
                return Err(Error::UnknownSelector(format!("{other} (custom transports take real-line or circle)")))
            }
        };
        let monotone = if self.decreasing { Monotone::Decreasing } else { Monotone::Increasing };
        let f = Bijection1D::from_strings(
            &self.forward,
            &self.inverse,
            self.params.clone(),
            self.domain.unwrap_or(base.carrier()),
            self.codomain,
            monotone,
        )?;
        transport(base, base_measure, &f)
    }
}

/// A measure by name: a group selector's Haar measure, `dist:<selector>`,
/// or `lebesgue`.
pub fn build_measure(selector: &str) -> Result<MeasureSpec> {
    if let Some(d) = selector.strip_prefix("dist:") {
        return Ok(MeasureSpec::from_distribution(build_distribution(d)?));
    }
    if selector == "lebesgue" {
        return Ok(MeasureSpec::lebesgue(Carrier::FullLine));
    }
    let t = build_group(selector)?;
    if t.group.as_scalar().is_none() {
        return Err(Error::InvalidArgument(format!("{selector} is not one-dimensional")));
    }
    Ok(t.measure)
}
