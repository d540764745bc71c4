//! Dense univariate polynomials with `f64` coefficients.
//!
//! Coefficients are stored in ascending order of degree. The zero polynomial
//! is represented by an empty coefficient vector and reports degree 0, which
//! is the convention used by the boundary-function index throughout the
//! crate. Construction trims trailing (exact) zero coefficients so that the
//! degree of a nonzero polynomial is always the position of its last stored
//! coefficient.

use std::fmt;

/// A polynomial `c₀ + c₁ λ + c₂ λ² + …` with real coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, trimming trailing
    /// exact zeros.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    /// The constant polynomial `c`.
    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `∏_k (r_k - λ)` — note the factors are `root - λ`, not `λ - root`.
    pub fn from_roots_descending_factors(roots: &[f64]) -> Self {
        let mut p = Polynomial::constant(1.0);
        for &r in roots {
            p = p.mul(&Polynomial::new(vec![r, -1.0]));
        }
        p
    }

    /// Monic polynomial `∏_k (λ - r_k)`.
    pub fn monic_from_roots(roots: &[f64]) -> Self {
        let mut p = Polynomial::constant(1.0);
        for &r in roots {
            p = p.mul(&Polynomial::new(vec![-r, 1.0]));
        }
        p
    }

    /// True when all coefficients are (exactly) zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the convention that the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Ascending coefficients; empty for the zero polynomial.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Leading coefficient; 0 for the zero polynomial.
    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Horner evaluation at a complex point.
    pub fn eval_complex(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Derivative polynomial.
    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Polynomial::new(coeffs)
    }

    /// Sum of two polynomials.
    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeffs.get(i).copied().unwrap_or(0.0)
                + other.coeffs.get(i).copied().unwrap_or(0.0);
        }
        Polynomial::new(coeffs)
    }

    /// Product of two polynomials.
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::new(coeffs)
    }

    /// The polynomial scaled by `c`.
    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// Real roots of the polynomial, ascending.
    ///
    /// Intended for the low-degree monic polynomials produced by the inverse
    /// pipeline, whose roots are simple and real. Degrees 1 and 2 use closed
    /// forms; higher degrees go through the companion matrix and discard
    /// roots whose imaginary part exceeds `1e-6` times the root scale. Every
    /// root is polished with a few Newton steps.
    pub fn real_roots(&self) -> Vec<f64> {
        let n = self.degree();
        if self.is_zero() || n == 0 {
            return Vec::new();
        }
        let mut roots = match n {
            1 => vec![-self.coeffs[0] / self.coeffs[1]],
            2 => {
                let (c, b, a) = (self.coeffs[0], self.coeffs[1], self.coeffs[2]);
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    return Vec::new();
                }
                // Stable quadratic formula: avoid cancellation in b ± √disc.
                let q = -0.5 * (b + b.signum() * disc.sqrt());
                if q == 0.0 {
                    vec![0.0, 0.0]
                } else {
                    vec![q / a, c / q]
                }
            }
            _ => self.companion_real_roots(),
        };
        let deriv = self.derivative();
        for r in roots.iter_mut() {
            for _ in 0..3 {
                let d = deriv.eval(*r);
                if d != 0.0 {
                    let step = self.eval(*r) / d;
                    if step.is_finite() {
                        *r -= step;
                    }
                }
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
    }

    fn companion_real_roots(&self) -> Vec<f64> {
        let n = self.degree();
        let lead = self.leading();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -self.coeffs[i] / lead;
        }
        let eigs = m.complex_eigenvalues();
        let scale = eigs.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        eigs.iter()
            .filter(|z| z.im.abs() <= 1e-6 * scale)
            .map(|z| z.re)
            .collect()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(out, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(out, " {} ", if c < 0.0 { "-" } else { "+" })?;
            } else if c < 0.0 {
                write!(out, "-")?;
            }
            match k {
                0 => write!(out, "{}", c.abs())?,
                1 => write!(out, "{}·λ", c.abs())?,
                _ => write!(out, "{}·λ^{}", c.abs(), k)?,
            }
            first = false;
        }
        Ok(())
    }
}
