//! Adaptive double-exponential (tanh-sinh) quadrature.
//!
//! Finite intervals use the tanh-sinh rule directly; nodes are generated
//! from the complement `1 − tanh u` so they crowd the endpoints without
//! rounding onto them, which handles integrable endpoint singularities.
//! Half-infinite intervals are folded onto `[0,1)` by `x = a + t/(1−t)`
//! and the whole line is split at 0. Intervals that do not converge within
//! the level cap are bisected.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const MAX_LEVEL: u32 = 8;
const MIN_LEVEL: u32 = 3;
const T_MAX: f64 = 6.5;
const MAX_DEPTH: u32 = 40;
/// Nodes closer than this (in normalized units) to an endpoint may fail
/// to evaluate; their contribution is dropped.
const EDGE_SLACK: f64 = 1e-8;
/// Relative accuracy below which a panel counts as converged whatever the
/// requested tolerance.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Absolute error target.
    pub tol: f64,
    /// Evaluation budget across the whole integral.
    pub max_evals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_evals: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

impl Quadrature {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> Result<Estimate>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tol)));
        }
        if a.is_nan() || b.is_nan() || a > b {
            return Err(Error::InvalidArgument(format!("bad integration range [{a}, {b})")));
        }
        let mut evals = 0;
        let mut done = 0.0;
        let result = self.dispatch(&f, a, b, &mut evals, &mut done);
        match result {
            Ok((value, error)) => Ok(Estimate { value, error, evals }),
            Err(Error::QuadratureFailure { estimate, evals }) => Err(Error::QuadratureFailure {
                estimate: done + if estimate.is_nan() { 0.0 } else { estimate },
                evals,
            }),
            Err(e) => Err(e),
        }
    }

    fn dispatch<F>(&self, f: &F, a: f64, b: f64, evals: &mut usize, done: &mut f64) -> Result<(f64, f64)>
    where
        F: Fn(f64) -> Result<f64>,
    {
        Ok(if a == b {
            (0.0, 0.0)
        } else {
            match (a.is_finite(), b.is_finite()) {
                (true, true) => self.adaptive(f, a, b, self.tol, 0, evals, done)?,
                (true, false) => self.right_tail(f, a, self.tol, evals, done)?,
                (false, true) => {
                    let g = |x: f64| f(-x);
                    self.right_tail(&g, -b, self.tol, evals, done)?
                }
                (false, false) => {
                    let (v1, e1) = self.right_tail(f, 0.0, self.tol / 2.0, evals, done)?;
                    let g = |x: f64| f(-x);
                    let (v2, e2) = self.right_tail(&g, 0.0, self.tol / 2.0, evals, done)?;
                    (v1 + v2, e1 + e2)
                }
            }
        })
    }

    fn right_tail<F>(&self, f: &F, a: f64, tol: f64, evals: &mut usize, done: &mut f64) -> Result<(f64, f64)>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let g = |t: f64| -> Result<f64> {
            let s = 1.0 - t;
            if s <= 0.0 {
                return Ok(0.0);
            }
            let x = a + t / s;
            if !x.is_finite() {
                return Ok(0.0);
            }
            Ok(f(x)? / (s * s))
        };
        self.adaptive(&g, 0.0, 1.0, tol, 0, evals, done)
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive<F>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
        evals: &mut usize,
        done: &mut f64,
    ) -> Result<(f64, f64)>
    where
        F: Fn(f64) -> Result<f64>,
    {
        match tanh_sinh(f, a, b, tol, self.max_evals, evals)? {
            Outcome::Converged(v, e) => {
                *done += v;
                Ok((v, e))
            }
            Outcome::Stalled(v) => {
                let mid = 0.5 * (a + b);
                if depth >= MAX_DEPTH || !(a < mid && mid < b) {
                    return Err(Error::QuadratureFailure { estimate: v, evals: *evals });
                }
                let (l, el) = self.adaptive(f, a, mid, tol / 2.0, depth + 1, evals, done)?;
                let (r, er) = self.adaptive(f, mid, b, tol / 2.0, depth + 1, evals, done)?;
                Ok((l + r, el + er))
            }
        }
    }
}

enum Outcome {
    Converged(f64, f64),
    Stalled(f64),
}

fn tanh_sinh<F>(f: &F, a: f64, b: f64, tol: f64, budget: usize, evals: &mut usize) -> Result<Outcome>
where
    F: Fn(f64) -> Result<f64>,
{
    let half = 0.5 * (b - a);
    let center = a + half;
    let mut eval = |x: f64, d: f64| -> Result<f64> {
        *evals += 1;
        if *evals > budget {
            return Err(Error::QuadratureFailure { estimate: f64::NAN, evals: *evals });
        }
        match f(x) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) | Err(Error::Domain(_)) if d < EDGE_SLACK => Ok(0.0),
            Ok(v) => Err(Error::Domain(format!("integrand is {v} at {x}"))),
            Err(e) => Err(e),
        }
    };

    let mut sum = 0.0;
    let mut previous = f64::NAN;
    for level in 0..=MAX_LEVEL {
        let step = 0.5f64.powi(level as i32);
        let mut k: u64 = if level == 0 { 0 } else { 1 };
        let stride: u64 = if level == 0 { 1 } else { 2 };
        loop {
            let t = k as f64 * step;
            if t > T_MAX {
                break;
            }
            let u = FRAC_PI_2 * t.sinh();
            let cu = u.cosh();
            let w = FRAC_PI_2 * t.cosh() / (cu * cu);
            // 1 − tanh(u), accurate for large u.
            let d = (-u).exp() / cu;
            if w == 0.0 || d == 0.0 {
                break;
            }
            let offset = half * d;
            if k == 0 {
                sum += w * eval(center, 1.0)?;
            } else {
                let xr = b - offset;
                let xl = a + offset;
                if !(xl > a || xr < b) {
                    break;
                }
                if xl > a {
                    sum += w * eval(xl, d)?;
                }
                if xr < b {
                    sum += w * eval(xr, d)?;
                }
            }
            k += stride;
        }
        let estimate = half * step * sum;
        if level >= MIN_LEVEL {
            let err = (estimate - previous).abs();
            if err <= tol.max(ROUNDING_FLOOR * estimate.abs()) {
                return Ok(Outcome::Converged(estimate, err));
            }
            if level == MAX_LEVEL {
                return Ok(Outcome::Stalled(estimate));
            }
        }
        previous = estimate;
    }
    unreachable!("the loop returns at MAX_LEVEL")
}
