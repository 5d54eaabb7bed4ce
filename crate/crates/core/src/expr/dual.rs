use std::ops::{Add, Div, Mul, Neg, Sub};

/// Forward-mode dual number `re + eps·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub const fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    pub const fn constant(re: f64) -> Self {
        Self { re, eps: 0.0 }
    }

    /// A dual seeded as the independent variable.
    pub const fn variable(re: f64) -> Self {
        Self { re, eps: 1.0 }
    }

    fn chain(self, value: f64, slope: f64) -> Self {
        Self::new(value, slope * self.eps)
    }

    pub fn exp(self) -> Self {
        let v = self.re.exp();
        self.chain(v, v)
    }

    pub fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re)
    }

    pub fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    pub fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    pub fn tan(self) -> Self {
        let c = self.re.cos();
        self.chain(self.re.tan(), 1.0 / (c * c))
    }

    pub fn atan(self) -> Self {
        self.chain(self.re.atan(), 1.0 / (1.0 + self.re * self.re))
    }

    pub fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }

    pub fn abs(self) -> Self {
        self.chain(self.re.abs(), self.re.signum())
    }

    /// `self^rhs`; uses the power rule when the exponent carries no derivative so
    /// that negative bases with integral exponents stay differentiable.
    pub fn pow(self, rhs: Self) -> Self {
        let v = self.re.powf(rhs.re);
        if rhs.eps == 0.0 {
            let slope = if rhs.re == 0.0 {
                0.0
            } else {
                rhs.re * self.re.powf(rhs.re - 1.0)
            };
            return Self::new(v, slope * self.eps);
        }
        Self::new(v, v * (rhs.eps * self.re.ln() + rhs.re * self.eps / self.re))
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.re * rhs.re, self.re * rhs.eps + self.eps * rhs.re)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Self::new(
            self.re / rhs.re,
            (self.eps * rhs.re - self.re * rhs.eps) / (rhs.re * rhs.re),
        )
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}
