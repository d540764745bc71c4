//! Rational Herglotz-Nevanlinna boundary functions.
//!
//! A boundary condition coefficient has the form
//!
//! ```text
//! f(λ) = h₀ λ + h + Σ_{k=1}^{d} δ_k / (h_k - λ),      h₀ ≥ 0, δ_k > 0,
//! ```
//!
//! with strictly increasing real poles `h_1 < … < h_d`, or is identically
//! `∞` (a Dirichlet condition). Such `f` maps the open upper half-plane into
//! itself and is strictly increasing between consecutive poles.
//!
//! The fraction decomposition writes `f = f↑ / f↓` with
//!
//! ```text
//! f↓(λ) = h₀' ∏_k (h_k - λ),    h₀' = 1/h₀ if h₀ > 0, otherwise 1,
//! f↑(λ) = f(λ) · f↓(λ)          (a polynomial),
//! ```
//!
//! and for `f = ∞`: `f↑ = -1`, `f↓ = 0`. The index `ind f = deg f↑ + deg f↓`
//! (degree of the zero polynomial taken as 0, index of `∞` as `-1`) governs
//! eigenvalue asymptotics: `ind f = 2d + 1` when `h₀ > 0` and `2d` otherwise.
//!
//! Normal form excludes `h₀ = 0, h = 0, d ≥ 1`, which would give the
//! off-pattern index `2d - 1`; such functions still arise as shifts `f + α`
//! with `α = -h` and are reported as errors rather than silently accepted.

use crate::poly::Polynomial;
use std::fmt;

/// Relative guard radius around a pole inside which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-12;

/// Errors for construction and evaluation of boundary functions.
#[derive(Clone, Debug, PartialEq)]
pub enum HnError {
    /// A residue `δ_k` is zero or negative.
    NonpositiveResidue { index: usize, value: f64 },
    /// Poles are not strictly increasing.
    UnorderedPoles { index: usize },
    /// The linear coefficient `h₀` is negative.
    NegativeLinearCoefficient { value: f64 },
    /// `h₀ = 0`, `h = 0` and at least one pole: the index would fall outside
    /// `{2d, 2d+1}`.
    NotNormalForm,
    /// A coefficient is NaN or infinite.
    NonFiniteCoefficient,
    /// `poles` and `residues` have different lengths.
    MismatchedPoleData { poles: usize, residues: usize },
    /// Evaluation requested within the guard radius of a pole.
    PoleEvaluation { lambda: f64, pole: f64 },
    /// Evaluation or shift requested on `f = ∞`.
    InfinityNotEvaluable,
    /// A shift by `α = 0` was requested.
    ZeroShift,
}

impl fmt::Display for HnError {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HnError::NonpositiveResidue { index, value } => {
                write!(out, "NonpositiveResidue: residue {value} at index {index}")
            }
            HnError::UnorderedPoles { index } => {
                write!(out, "UnorderedPoles: pole at index {index} does not increase")
            }
            HnError::NegativeLinearCoefficient { value } => {
                write!(out, "NegativeLinearCoefficient: h0 = {value}")
            }
            HnError::NotNormalForm => write!(
                out,
                "NotNormalForm: h0 = 0 and h = 0 with at least one pole"
            ),
            HnError::NonFiniteCoefficient => write!(out, "NonFiniteCoefficient"),
            HnError::MismatchedPoleData { poles, residues } => write!(
                out,
                "MismatchedPoleData: {poles} poles but {residues} residues"
            ),
            HnError::PoleEvaluation { lambda, pole } => {
                write!(out, "PoleEvaluation: λ = {lambda} is within guard of pole {pole}")
            }
            HnError::InfinityNotEvaluable => write!(out, "InfinityNotEvaluable"),
            HnError::ZeroShift => write!(out, "ZeroShift: shift offset must be nonzero"),
        }
    }
}

impl std::error::Error for HnError {}

/// A rational Herglotz-Nevanlinna function, or `∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalBoundaryFunction {
    h0: f64,
    h: f64,
    poles: Vec<f64>,
    residues: Vec<f64>,
    is_infinity: bool,
}

impl RationalBoundaryFunction {
    /// Builds and validates a finite rational boundary function.
    pub fn new(h0: f64, h: f64, poles: Vec<f64>, residues: Vec<f64>) -> Result<Self, HnError> {
        let f = RationalBoundaryFunction { h0, h, poles, residues, is_infinity: false };
        f.validate()?;
        Ok(f)
    }

    /// The constant function `f ≡ h` (includes `f = 0`).
    pub fn constant(h: f64) -> Self {
        RationalBoundaryFunction { h0: 0.0, h, poles: Vec::new(), residues: Vec::new(), is_infinity: false }
    }

    /// The affine function `f(λ) = h₀ λ + h`.
    pub fn linear(h0: f64, h: f64) -> Result<Self, HnError> {
        Self::new(h0, h, Vec::new(), Vec::new())
    }

    /// The boundary function `∞` (Dirichlet condition).
    pub fn infinity() -> Self {
        RationalBoundaryFunction { h0: 0.0, h: 0.0, poles: Vec::new(), residues: Vec::new(), is_infinity: true }
    }

    /// Checks the shape constraints: `h₀ ≥ 0`, residues positive, poles
    /// strictly increasing, all data finite, and normal form (`h₀ > 0` or
    /// `h ≠ 0` whenever there is at least one pole).
    pub fn validate(&self) -> Result<(), HnError> {
        if self.is_infinity {
            return Ok(());
        }
        if !self.h0.is_finite()
            || !self.h.is_finite()
            || self.poles.iter().any(|p| !p.is_finite())
            || self.residues.iter().any(|d| !d.is_finite())
        {
            return Err(HnError::NonFiniteCoefficient);
        }
        if self.poles.len() != self.residues.len() {
            return Err(HnError::MismatchedPoleData {
                poles: self.poles.len(),
                residues: self.residues.len(),
            });
        }
        if self.h0 < 0.0 {
            return Err(HnError::NegativeLinearCoefficient { value: self.h0 });
        }
        for (k, &d) in self.residues.iter().enumerate() {
            if d <= 0.0 {
                return Err(HnError::NonpositiveResidue { index: k, value: d });
            }
        }
        for k in 1..self.poles.len() {
            if self.poles[k] <= self.poles[k - 1] {
                return Err(HnError::UnorderedPoles { index: k });
            }
        }
        if self.h0 == 0.0 && self.h == 0.0 && !self.poles.is_empty() {
            return Err(HnError::NotNormalForm);
        }
        Ok(())
    }

    /// True for the `∞` boundary function.
    pub fn is_infinity(&self) -> bool {
        self.is_infinity
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Poles `h_1 < … < h_d`; empty for `∞`.
    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn residues(&self) -> &[f64] {
        &self.residues
    }

    /// Number of poles `d`.
    pub fn pole_count(&self) -> usize {
        self.poles.len()
    }

    /// `h₀' = 1/h₀` when `h₀ > 0`, otherwise 1.
    pub fn h0_prime(&self) -> f64 {
        if self.h0 > 0.0 {
            1.0 / self.h0
        } else {
            1.0
        }
    }

    /// The fraction decomposition `(f↑, f↓)`; `(-1, 0)` for `f = ∞`.
    ///
    /// Both parts are exact polynomial expansions:
    /// `f↓ = h₀' ∏ (h_k - λ)` and
    /// `f↑ = (h₀ λ + h) f↓ + h₀' Σ_k δ_k ∏_{j≠k} (h_j - λ)`.
    pub fn fraction_parts(&self) -> (Polynomial, Polynomial) {
        if self.is_infinity {
            return (Polynomial::constant(-1.0), Polynomial::zero());
        }
        let down = Polynomial::from_roots_descending_factors(&self.poles).scale(self.h0_prime());
        let affine = Polynomial::new(vec![self.h, self.h0]);
        let mut up = affine.mul(&down);
        for k in 0..self.poles.len() {
            let others: Vec<f64> = self
                .poles
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &p)| p)
                .collect();
            let term = Polynomial::from_roots_descending_factors(&others)
                .scale(self.h0_prime() * self.residues[k]);
            up = up.add(&term);
        }
        (up, down)
    }

    /// `ind f = deg f↑ + deg f↓`, with `ind ∞ = -1`.
    pub fn index(&self) -> i64 {
        if self.is_infinity {
            return -1;
        }
        let d = self.poles.len() as i64;
        if self.h0 > 0.0 {
            2 * d + 1
        } else {
            2 * d
        }
    }

    /// Evaluates `f(λ)`.
    ///
    /// Fails within `POLE_GUARD · max(1, |h_k|)` of a pole, and on `f = ∞`.
    pub fn eval(&self, lambda: f64) -> Result<f64, HnError> {
        self.check_evaluable(lambda)?;
        let mut v = self.h0 * lambda + self.h;
        for (&p, &d) in self.poles.iter().zip(&self.residues) {
            v += d / (p - lambda);
        }
        Ok(v)
    }

    /// Evaluates `f'(λ) = h₀ + Σ δ_k / (h_k - λ)²`.
    pub fn eval_derivative(&self, lambda: f64) -> Result<f64, HnError> {
        self.check_evaluable(lambda)?;
        let mut v = self.h0;
        for (&p, &d) in self.poles.iter().zip(&self.residues) {
            let g = p - lambda;
            v += d / (g * g);
        }
        Ok(v)
    }

    fn check_evaluable(&self, lambda: f64) -> Result<(), HnError> {
        if self.is_infinity {
            return Err(HnError::InfinityNotEvaluable);
        }
        for &p in &self.poles {
            if (lambda - p).abs() <= POLE_GUARD * p.abs().max(1.0) {
                return Err(HnError::PoleEvaluation { lambda, pole: p });
            }
        }
        Ok(())
    }

    /// `f'(λ) f↓(λ)²` evaluated in pole-safe polynomial form:
    /// `h₀ f↓(λ)² + Σ_k δ_k (h₀' ∏_{j≠k}(h_j - λ))²`.
    ///
    /// Equals the Wronskian `f↑' f↓ - f↑ f↓'` of the fraction parts; it is
    /// finite (and nonnegative) even at the poles, and is 0 for `f = ∞`.
    pub fn fraction_wronskian(&self, lambda: f64) -> f64 {
        if self.is_infinity {
            return 0.0;
        }
        let hp = self.h0_prime();
        let mut down = hp;
        for &p in &self.poles {
            down *= p - lambda;
        }
        let mut v = self.h0 * down * down;
        for k in 0..self.poles.len() {
            let mut partial = hp;
            for (j, &p) in self.poles.iter().enumerate() {
                if j != k {
                    partial *= p - lambda;
                }
            }
            v += self.residues[k] * partial * partial;
        }
        v
    }

    /// The shifted function `f + α` (same poles, same residues, `h ↦ h + α`).
    ///
    /// Fails when `α = 0`, when `f = ∞`, and when the shift leaves normal
    /// form (`h + α = 0` with `h₀ = 0` and at least one pole).
    pub fn shift(&self, alpha: f64) -> Result<Self, HnError> {
        if self.is_infinity {
            return Err(HnError::InfinityNotEvaluable);
        }
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(HnError::ZeroShift);
        }
        RationalBoundaryFunction::new(
            self.h0,
            self.h + alpha,
            self.poles.clone(),
            self.residues.clone(),
        )
    }

    /// Number of poles `h_k ≤ λ` (used by the Prüfer-angle bookkeeping).
    pub fn poles_at_most(&self, lambda: f64) -> usize {
        self.poles.iter().filter(|&&p| p <= lambda).count()
    }

    /// Number of poles `h_k < λ`.
    pub fn poles_below(&self, lambda: f64) -> usize {
        self.poles.iter().filter(|&&p| p < lambda).count()
    }
}

impl fmt::Display for RationalBoundaryFunction {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinity {
            return write!(out, "∞");
        }
        write!(out, "{}·λ + {}", self.h0, self.h)?;
        for (&p, &d) in self.poles.iter().zip(&self.residues) {
            write!(out, " + {d}/({p} - λ)")?;
        }
        Ok(())
    }
}
