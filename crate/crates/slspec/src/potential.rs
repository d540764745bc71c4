//! Potentials `q` on `[0, π]`.
//!
//! A potential is either one of the analytic built-ins (zero, constant, or a
//! trigonometric polynomial) or a table of uniformly spaced samples read as
//! a piecewise-linear function. Sampled potentials expose their grid width
//! so the integrator can land exactly on the kinks.

use std::fmt;

pub const DEFAULT_SAMPLE_COUNT: usize = 2049;

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialError {
    /// Sampled potentials need at least two nodes.
    TooFewSamples { count: usize },
    NonFiniteValue,
}

impl fmt::Display for PotentialError {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialError::TooFewSamples { count } => {
                write!(out, "TooFewSamples: got {count}, need at least 2")
            }
            PotentialError::NonFiniteValue => write!(out, "NonFiniteValue in potential data"),
        }
    }
}

impl std::error::Error for PotentialError {}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Zero,
    Constant(f64),
    /// `a₀ + Σ_k a_k cos(kx) + Σ_k b_k sin(kx)`; `cos[0]` is the constant.
    Trig { cos: Vec<f64>, sin: Vec<f64> },
    /// Uniform samples on `[0, π]`, piecewise linear in between.
    Samples(Vec<f64>),
}

/// A real potential on `[0, π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    kind: Kind,
}

impl Potential {
    pub fn zero() -> Self {
        Potential { kind: Kind::Zero }
    }

    pub fn constant(c: f64) -> Result<Self, PotentialError> {
        if !c.is_finite() {
            return Err(PotentialError::NonFiniteValue);
        }
        Ok(Potential { kind: Kind::Constant(c) })
    }

    /// Trigonometric polynomial `cos[0] + Σ_{k≥1} cos[k]·cos(kx) + Σ_{k≥1} sin[k-1]·sin(kx)`.
    pub fn trig(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, PotentialError> {
        if cos.iter().chain(sin.iter()).any(|v| !v.is_finite()) {
            return Err(PotentialError::NonFiniteValue);
        }
        Ok(Potential { kind: Kind::Trig { cos, sin } })
    }

    /// Uniform samples at `x_i = iπ/(m-1)`, `i = 0 … m-1`.
    pub fn from_samples(values: Vec<f64>) -> Result<Self, PotentialError> {
        if values.len() < 2 {
            return Err(PotentialError::TooFewSamples { count: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PotentialError::NonFiniteValue);
        }
        Ok(Potential { kind: Kind::Samples(values) })
    }

    /// Samples an arbitrary function on the default grid.
    pub fn sampled(f: impl Fn(f64) -> f64, count: usize) -> Result<Self, PotentialError> {
        let m = count.max(2);
        let values = (0..m)
            .map(|i| f(std::f64::consts::PI * i as f64 / (m - 1) as f64))
            .collect();
        Self::from_samples(values)
    }

    /// Evaluates `q(x)`; arguments outside `[0, π]` clamp to the endpoints.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Constant(c) => *c,
            Kind::Trig { cos, sin } => {
                let mut v = 0.0;
                for (k, &a) in cos.iter().enumerate() {
                    v += if k == 0 { a } else { a * (k as f64 * x).cos() };
                }
                for (k, &b) in sin.iter().enumerate() {
                    v += b * ((k + 1) as f64 * x).sin();
                }
                v
            }
            Kind::Samples(values) => {
                let m = values.len();
                let w = std::f64::consts::PI / (m - 1) as f64;
                let t = (x / w).clamp(0.0, (m - 1) as f64);
                let i = (t.floor() as usize).min(m - 2);
                let frac = t - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    /// Grid spacing for sampled potentials (the integrator must stop at the
    /// kinks); `None` for analytic kinds.
    pub fn grid_width(&self) -> Option<f64> {
        match &self.kind {
            Kind::Samples(values) => Some(std::f64::consts::PI / (values.len() - 1) as f64),
            _ => None,
        }
    }

    /// A rough uniform bound on |q| used for bracketing heuristics.
    pub fn sup_bound(&self) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Constant(c) => c.abs(),
            Kind::Trig { cos, sin } => {
                cos.iter().map(|a| a.abs()).sum::<f64>() + sin.iter().map(|b| b.abs()).sum::<f64>()
            }
            Kind::Samples(values) => values.iter().fold(0.0, |m, v| v.abs().max(m)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn builtin_kinds_evaluate() {
        assert_eq!(Potential::zero().eval(1.0), 0.0);
        assert_eq!(Potential::constant(2.5).unwrap().eval(0.3), 2.5);
        let q = Potential::trig(vec![0.5, 0.0, 1.0], vec![0.25]).unwrap();
        // q(x) = 0.5 + cos(2x) + 0.25 sin(x)
        let x = 0.7;
        assert_relative_eq!(q.eval(x), 0.5 + (2.0 * x).cos() + 0.25 * x.sin(), epsilon = 1e-15);
    }

    #[test]
    fn sampled_potential_interpolates_linearly() {
        let q = Potential::from_samples(vec![0.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(q.eval(PI / 4.0), 0.5, epsilon = 1e-14);
        assert_relative_eq!(q.eval(PI / 2.0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(q.eval(3.0 * PI / 4.0), 0.5, epsilon = 1e-14);
        assert_eq!(q.grid_width(), Some(PI / 2.0));
        // Out-of-range arguments clamp.
        assert_relative_eq!(q.eval(-1.0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(q.eval(4.0), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sampling_matches_the_source_function() {
        let q = Potential::sampled(|x| (2.0 * x).cos(), DEFAULT_SAMPLE_COUNT).unwrap();
        for i in 0..50 {
            let x = PI * i as f64 / 49.0;
            assert_relative_eq!(q.eval(x), (2.0 * x).cos(), epsilon = 3e-6);
        }
    }

    #[test]
    fn rejects_bad_data() {
        assert!(matches!(
            Potential::from_samples(vec![1.0]),
            Err(PotentialError::TooFewSamples { count: 1 })
        ));
        assert!(matches!(
            Potential::from_samples(vec![1.0, f64::NAN]),
            Err(PotentialError::NonFiniteValue)
        ));
    }
}
