//! Static output nonlinearities `ψ₀: ℝˡ → ℝ` in the feedback path.
//!
//! Only a closed vocabulary is supported so that Lipschitz constants and
//! monotonicity can be checked mechanically.

use crate::{Error, Result};

/// A continuous piecewise-linear scalar function.
///
/// With breakpoints `b_1 < … < b_k` and slopes `s_0, …, s_k`, slope `s_0`
/// applies left of `b_1` and `s_k` right of `b_k`. The function takes the
/// value `offset` at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    offset: f64,
}

impl PiecewiseLinear {
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, offset: f64) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::param(format!(
                "piecewise_linear needs {} slopes for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                slopes.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("piecewise_linear breakpoints must be strictly increasing"));
        }
        if breakpoints.iter().chain(&slopes).chain([&offset]).any(|v| !v.is_finite()) {
            return Err(Error::param("piecewise_linear parameters must be finite"));
        }
        Ok(Self { breakpoints, slopes, offset })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    // Ramp expansion s_0·y + Σ (s_k − s_{k−1})·max(y − b_k, 0), shifted so
    // that the origin maps to `offset`.
    fn ramp_sum(&self, y: f64) -> f64 {
        let mut v = self.slopes[0] * y;
        for (k, b) in self.breakpoints.iter().enumerate() {
            v += (self.slopes[k + 1] - self.slopes[k]) * (y - b).max(0.0);
        }
        v
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.offset + self.ramp_sum(y) - self.ramp_sum(0.0)
    }
}

/// Linear interpolation through `(xs, ys)`, extended linearly by the end
/// segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Table {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::param("custom_table needs at least two (x, y) points of equal count"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("custom_table abscissae must be strictly increasing"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::param("custom_table entries must be finite"));
        }
        Ok(Self { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    fn segment_slopes(&self) -> Vec<f64> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn eval(&self, y: f64) -> f64 {
        let n = self.xs.len();
        let k = match self.xs.partition_point(|&x| x <= y) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let t = (y - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.ys[k] + t * (self.ys[k + 1] - self.ys[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StaticNonlinearity {
    /// Identically zero, for any input dimension.
    Zero,
    /// `ψ₀(y) = (p/b)·(−½)(m₀ − m₁)(|y+1| − |y−1| − 2y)`, the Chua diode term.
    ScaledPwlChua { m0: f64, m1: f64, p: f64, b: f64 },
    PiecewiseLinear(PiecewiseLinear),
    Table(Table),
}

impl StaticNonlinearity {
    pub fn chua(m0: f64, m1: f64, p: f64, b: f64) -> Result<Self> {
        if b == 0.0 || ![m0, m1, p, b].iter().all(|v| v.is_finite()) {
            return Err(Error::param("scaled_pwl_chua needs finite parameters and b != 0"));
        }
        Ok(Self::ScaledPwlChua { m0, m1, p, b })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::ScaledPwlChua { .. } => "scaled_pwl_chua",
            Self::PiecewiseLinear(_) => "piecewise_linear",
            Self::Table(_) => "custom_table",
        }
    }

    /// Required input dimension, `None` when any dimension is accepted.
    pub fn arity(&self) -> Option<usize> {
        match self {
            Self::Zero => None,
            _ => Some(1),
        }
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        if let Some(a) = self.arity() {
            if y.len() != a {
                return Err(Error::param(format!(
                    "{} takes {a} input(s), got {}",
                    self.kind_name(),
                    y.len()
                )));
            }
        }
        Ok(match self {
            Self::Zero => 0.0,
            _ => self.eval_scalar(y[0]),
        })
    }

    /// Evaluation on a scalar input. `Zero` ignores its argument.
    pub fn eval_scalar(&self, y: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::ScaledPwlChua { m0, m1, p, b } => {
                (p / b) * (-0.5) * (m0 - m1) * ((y + 1.0).abs() - (y - 1.0).abs() - 2.0 * y)
            }
            Self::PiecewiseLinear(pw) => pw.eval(y),
            Self::Table(t) => t.eval(y),
        }
    }

    /// Breakpoints and per-piece slopes for the piecewise-linear kinds.
    pub fn pieces(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Zero => Some((Vec::new(), vec![0.0])),
            Self::ScaledPwlChua { m0, m1, p, b } => {
                let s = (p / b) * (m0 - m1);
                Some((vec![-1.0, 1.0], vec![s, 0.0, s]))
            }
            Self::PiecewiseLinear(pw) => Some((pw.breakpoints.clone(), pw.slopes.clone())),
            Self::Table(t) => {
                let seg = t.segment_slopes();
                let mut slopes = Vec::with_capacity(seg.len() + 2);
                slopes.push(seg[0]);
                slopes.extend_from_slice(&seg);
                slopes.push(*seg.last().unwrap());
                Some((t.xs.clone(), slopes))
            }
        }
    }

    /// Global Lipschitz constant (the largest slope magnitude).
    pub fn lipschitz(&self) -> f64 {
        self.pieces()
            .map(|(_, s)| s.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chua() -> StaticNonlinearity {
        StaticNonlinearity::chua(-8.0 / 7.0, -5.0 / 7.0, 15.6, 1.0).unwrap()
    }

    #[test]
    fn chua_values() {
        let f = chua();
        assert_eq!(f.eval(&[0.0]).unwrap(), 0.0);
        assert!(f.eval(&[0.5]).unwrap().abs() < 1e-14);
        assert_relative_eq!(f.eval(&[2.0]).unwrap(), -15.6 * 3.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn chua_arity_checked() {
        assert!(matches!(chua().eval(&[1.0, 2.0]), Err(Error::InvalidParameter(_))));
        assert_eq!(StaticNonlinearity::Zero.eval(&[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn chua_slopes_and_lipschitz() {
        let (bp, s) = chua().pieces().unwrap();
        assert_eq!(bp, vec![-1.0, 1.0]);
        assert_relative_eq!(s[0], -15.6 * 3.0 / 7.0, epsilon = 1e-12);
        assert_eq!(s[1], 0.0);
        assert_relative_eq!(chua().lipschitz(), 15.6 * 3.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn pwl_matches_chua_kind() {
        let (bp, s) = chua().pieces().unwrap();
        let pw = StaticNonlinearity::PiecewiseLinear(PiecewiseLinear::new(bp, s, 0.0).unwrap());
        for k in -40..=40 {
            let y = k as f64 * 0.137;
            assert_relative_eq!(pw.eval_scalar(y), chua().eval_scalar(y), epsilon = 1e-12);
        }
    }

    #[test]
    fn pwl_offset_and_validation() {
        let pw = PiecewiseLinear::new(vec![1.0], vec![2.0, -1.0], 3.0).unwrap();
        assert_eq!(pw.eval(0.0), 3.0);
        assert_eq!(pw.eval(1.0), 5.0);
        assert_eq!(pw.eval(3.0), 3.0);
        assert!(PiecewiseLinear::new(vec![1.0, 0.0], vec![0.0; 3], 0.0).is_err());
        assert!(PiecewiseLinear::new(vec![1.0], vec![0.0], 0.0).is_err());
    }

    #[test]
    fn table_interpolates_and_extrapolates() {
        let t = Table::new(vec![-1.0, 0.0, 2.0], vec![1.0, 0.0, -4.0]).unwrap();
        assert_eq!(t.eval(-2.0), 2.0);
        assert_eq!(t.eval(-0.5), 0.5);
        assert_eq!(t.eval(1.0), -2.0);
        assert_eq!(t.eval(3.0), -6.0);
        let nl = StaticNonlinearity::Table(t);
        assert_eq!(nl.lipschitz(), 2.0);
        assert!(Table::new(vec![0.0], vec![0.0]).is_err());
    }
}
