//! Entire characteristic functions rebuilt from their zero sequences.
//!
//! A characteristic function of the boundary value problem has simple real
//! zeros `η₀ < η₁ < …` with `√ηₙ = n − L + σ/(πn) + O(n⁻³)` for a
//! half-integer `L ≥ -1/2`, and it is recovered *exactly* (normalization
//! included) as the canonical product over those zeros:
//!
//! ```text
//! L integer:      G(λ) = −∏_{n<L}(ηₙ−λ) · π(η_L−λ) · ∏_{n>L}(ηₙ−λ)/(n−L)²
//! L = m − 1/2:    G(λ) = −∏_{n<m}(ηₙ−λ) ·            ∏_{n≥m}(ηₙ−λ)/(n−L)²
//! ```
//!
//! (So `G < 0` below the lowest zero, matching a shooting characteristic
//! function.) Numerically only finitely many zeros are known; the rest of
//! the product is completed in two stages controlled by the fitted
//! asymptotic parameters: explicit model zeros
//! `ηₙ ≈ (n − L + σ/(πn) + c₂/(πn³))²` out to a buffer index `M`, then an
//! Euler–Maclaurin estimate of `Σ_{n>M} ln((η(t)−λ)/(t−L)²)` with the sum's
//! integral taken in the variable `u = 1/t`, where the integrand is smooth
//! down to `u = 0`.
//!
//! All magnitudes are accumulated as sign plus log, so deep negative
//! arguments (where the product grows like `e^{π√|λ|}`) stay representable.

use crate::poly;
use std::f64::consts::PI;
use std::fmt;

/// Number of explicit model zeros appended beyond the data.
const MODEL_BUFFER: usize = 40;
/// Simpson subdivisions for the `u = 1/t` tail integrals.
const TAIL_PANELS: usize = 64;
/// Relative distance below which a factor counts as "at" a data zero and
/// derivative evaluation switches to the removed-factor form.
const NEAR_ZERO: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum ProductError {
    TooFewZeros { count: usize },
    NonincreasingZeros { index: usize },
    NonFiniteInput,
    /// `2L` must be an integer `≥ -1`.
    InvalidLevel { two_l: i64 },
    /// A top zero strays too far from its asymptotic slot `(n-L)²`.
    InconsistentAsymptotics { index: usize },
    /// The level estimate from the data is not near a half-integer.
    NoHalfIntegerFit { estimate: f64 },
    /// Neither decay order fits the gap sequence.
    AmbiguousGapOrder { cv0: f64, cv1: f64 },
    /// The fitted gap coefficient vanishes.
    VanishingNu,
    /// Evaluation above the last usable zero slot.
    BeyondDataRange { lambda: f64 },
    NonFiniteValue,
}

impl fmt::Display for ProductError {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductError::TooFewZeros { count } => write!(out, "TooFewZeros: got {count}"),
            ProductError::NonincreasingZeros { index } => {
                write!(out, "NonincreasingZeros at index {index}")
            }
            ProductError::NonFiniteInput => write!(out, "NonFiniteInput"),
            ProductError::InvalidLevel { two_l } => write!(out, "InvalidLevel: 2L = {two_l}"),
            ProductError::InconsistentAsymptotics { index } => {
                write!(out, "InconsistentAsymptotics at zero index {index}")
            }
            ProductError::NoHalfIntegerFit { estimate } => {
                write!(out, "NoHalfIntegerFit: level estimate {estimate}")
            }
            ProductError::AmbiguousGapOrder { cv0, cv1 } => {
                write!(out, "AmbiguousGapOrder: coefficient of variation {cv0} / {cv1}")
            }
            ProductError::VanishingNu => write!(out, "VanishingNu"),
            ProductError::BeyondDataRange { lambda } => {
                write!(out, "BeyondDataRange: λ = {lambda} exceeds the known zeros")
            }
            ProductError::NonFiniteValue => write!(out, "NonFiniteValue"),
        }
    }
}

impl std::error::Error for ProductError {}

/// Fitted zero asymptotics `√ηₙ ≈ n − L + (σ + c₂/n² + c₄/n⁴)/(πn)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticFit {
    /// `2L` (so half-integer levels stay exact).
    pub two_l: i64,
    pub sigma: f64,
    /// Second-order coefficient `c₂`.
    pub sigma_correction: f64,
    /// Fourth-order coefficient `c₄`.
    pub sigma_correction2: f64,
    /// RMS misfit of `σₙ = πn(√ηₙ − n + L)` against the fitted model.
    pub residual: f64,
}

/// Fitted gap asymptotics `√λₙ − √μₙ = ν (n−L)^{-(2r+1)} (1 + O(n⁻²))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapFit {
    /// `r ∈ {0, 1}`: 0 when the base boundary function has `h₀ = 0`.
    pub r: u8,
    pub nu: f64,
    /// Coefficient of variation of the rescaled gaps at the chosen order.
    pub cv: f64,
}

/// Least squares fit of `y ≈ a + b·x` returning `(a, b, rms_residual)`.
fn fit_two_term(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    let (a, b) = if det.abs() > 1e-300 {
        ((sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det)
    } else {
        (sy / n, 0.0)
    };
    let mut rss = 0.0;
    for &(x, y) in pts {
        let e = y - a - b * x;
        rss += e * e;
    }
    (a, b, (rss / n).sqrt())
}

/// Fits `σ` and its decay corrections for a prescribed level `2L`.
///
/// In the shifted variable `w = n − L` the square-root expansion contains
/// only even corrections: `√ηₙ = w + σ/(πw) + c₂/(πw³) + c₄/(πw⁵) + …`.
/// The sequence `σₙ = πw(√ηₙ − w)` is therefore matched to `σ + c₂x + c₄x²`
/// with `x = 1/w²` over the upper three quarters of the data. Fitting in
/// `w` rather than `n` matters: in powers of `1/n` the same expansion picks
/// up odd terms proportional to `L`, and truncating them leaks a constant
/// scale error into rebuilt products. Short sequences fall back to two,
/// then one term.
pub fn fit_sigma_with_level(zeros: &[f64], two_l: i64) -> AsymptoticFit {
    let l = two_l as f64 / 2.0;
    let n_total = zeros.len();
    let start = (n_total / 4).max(1);
    let mut pts = Vec::new();
    for (n, &eta) in zeros.iter().enumerate().skip(start) {
        let w = n as f64 - l;
        if eta <= 0.0 || w <= 0.5 {
            continue;
        }
        pts.push((1.0 / (w * w), PI * w * (eta.sqrt() - w)));
    }
    if pts.len() < 3 {
        return AsymptoticFit {
            two_l,
            sigma: 0.0,
            sigma_correction: 0.0,
            sigma_correction2: 0.0,
            residual: f64::INFINITY,
        };
    }
    if pts.len() < 8 {
        let (sigma, c2, residual) = fit_two_term(&pts);
        return AsymptoticFit { two_l, sigma, sigma_correction: c2, sigma_correction2: 0.0, residual };
    }
    // Normal equations for y ≈ σ + c₂ x + c₄ x² with x = 1/(n−L)².
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut b = nalgebra::Vector3::<f64>::zeros();
    for &(x, y) in &pts {
        let row = nalgebra::Vector3::new(1.0, x, x * x);
        a += row * row.transpose();
        b += row * y;
    }
    let Some(sol) = a.lu().solve(&b) else {
        let (sigma, c2, residual) = fit_two_term(&pts);
        return AsymptoticFit { two_l, sigma, sigma_correction: c2, sigma_correction2: 0.0, residual };
    };
    let (sigma, c2, c4) = (sol[0], sol[1], sol[2]);
    let mut rss = 0.0;
    for &(x, y) in &pts {
        let e = y - sigma - c2 * x - c4 * x * x;
        rss += e * e;
    }
    let residual = (rss / pts.len() as f64).sqrt();
    AsymptoticFit { two_l, sigma, sigma_correction: c2, sigma_correction2: c4, residual }
}

/// Estimates the half-integer level and `σ` from a zero sequence.
pub fn fit_asymptotics(zeros: &[f64]) -> Result<AsymptoticFit, ProductError> {
    if zeros.len() < 6 {
        return Err(ProductError::TooFewZeros { count: zeros.len() });
    }
    let start = (2 * zeros.len() / 3).max(1);
    let mut pts = Vec::new();
    for (n, &eta) in zeros.iter().enumerate().skip(start) {
        if eta > 0.0 {
            pts.push((1.0 / n as f64, n as f64 - eta.sqrt()));
        }
    }
    if pts.len() < 3 {
        return Err(ProductError::TooFewZeros { count: pts.len() });
    }
    // dₙ = n − √ηₙ = L − (σ/π)·(1/n) + O(n⁻²)
    let (level, _, _) = fit_two_term(&pts);
    let two_l = (2.0 * level).round() as i64;
    if (level - two_l as f64 / 2.0).abs() > 0.2 {
        return Err(ProductError::NoHalfIntegerFit { estimate: level });
    }
    if two_l < -1 {
        return Err(ProductError::InvalidLevel { two_l });
    }
    Ok(fit_sigma_with_level(zeros, two_l))
}

/// Detects the gap decay order `r` and fits the coefficient `ν` of
/// `√λₙ − √μₙ = ν (n−L)^{-(2r+1)} (1 + O(n⁻²))`.
pub fn fit_gap(lambdas: &[f64], mus: &[f64], two_l: i64) -> Result<GapFit, ProductError> {
    let l = two_l as f64 / 2.0;
    let n_total = lambdas.len().min(mus.len());
    let start = (n_total / 2).max(1);
    let mut base = Vec::new();
    for n in start..n_total {
        let nf = n as f64;
        if lambdas[n] > 0.0 && mus[n] > 0.0 && nf - l > 0.5 {
            base.push((nf - l, lambdas[n].sqrt() - mus[n].sqrt()));
        }
    }
    if base.len() < 4 {
        return Err(ProductError::TooFewZeros { count: base.len() });
    }
    let stats = |r: u32| {
        let vals: Vec<f64> = base.iter().map(|&(w, g)| g * w.powi(2 * r as i32 + 1)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        (mean, var.sqrt() / mean.abs().max(1e-300))
    };
    let (_, cv0) = stats(0);
    let (_, cv1) = stats(1);
    let r: u8 = if cv0 <= cv1 { 0 } else { 1 };
    let cv = cv0.min(cv1);
    if cv > 0.5 {
        return Err(ProductError::AmbiguousGapOrder { cv0, cv1 });
    }
    let pts: Vec<(f64, f64)> = base
        .iter()
        .map(|&(w, g)| (1.0 / (w * w), g * w.powi(2 * r as i32 + 1)))
        .collect();
    let (nu, _, _) = fit_two_term(&pts);
    let scale = pts.iter().map(|p| p.1.abs()).fold(0.0f64, f64::max);
    if nu.abs() <= 1e-8 * scale.max(1.0) {
        return Err(ProductError::VanishingNu);
    }
    Ok(GapFit { r, nu, cv })
}

/// An entire function represented by finitely many leading zeros plus the
/// asymptotic law of the remaining ones.
#[derive(Clone, Debug)]
pub struct ProductFunction {
    zeros: Vec<f64>,
    two_l: i64,
    l: f64,
    sigma: f64,
    sigma_correction: f64,
    sigma_correction2: f64,
}

impl ProductFunction {
    /// Builds the product from zeros sorted in increasing order and a fitted
    /// (or theoretical) asymptotic law.
    pub fn build(zeros: Vec<f64>, fit: &AsymptoticFit) -> Result<Self, ProductError> {
        if zeros.len() < 3 {
            return Err(ProductError::TooFewZeros { count: zeros.len() });
        }
        if zeros.iter().any(|z| !z.is_finite()) || !fit.sigma.is_finite() {
            return Err(ProductError::NonFiniteInput);
        }
        for (i, w) in zeros.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(ProductError::NonincreasingZeros { index: i + 1 });
            }
        }
        if fit.two_l < -1 {
            return Err(ProductError::InvalidLevel { two_l: fit.two_l });
        }
        let l = fit.two_l as f64 / 2.0;
        let n_top = zeros.len() - 1;
        // The data must reach past the unnormalized head of the product.
        let norm_start = if fit.two_l % 2 == 0 {
            (fit.two_l / 2 + 1) as usize
        } else {
            ((fit.two_l + 1) / 2) as usize
        };
        if n_top < norm_start {
            return Err(ProductError::TooFewZeros { count: zeros.len() });
        }
        for n in (norm_start.max(n_top.saturating_sub(2)))..=n_top {
            let eta = zeros[n];
            if eta <= 0.0 {
                return Err(ProductError::InconsistentAsymptotics { index: n });
            }
            let slot = n as f64 - l + fit.sigma / (PI * (n as f64 - l));
            if (eta.sqrt() - slot).abs() > 0.3 {
                return Err(ProductError::InconsistentAsymptotics { index: n });
            }
        }
        Ok(ProductFunction {
            zeros,
            two_l: fit.two_l,
            l,
            sigma: fit.sigma,
            sigma_correction: fit.sigma_correction,
            sigma_correction2: fit.sigma_correction2,
        })
    }

    /// Builds the product by fitting the asymptotics from the zeros alone.
    pub fn from_zeros(zeros: Vec<f64>) -> Result<Self, ProductError> {
        let fit = fit_asymptotics(&zeros)?;
        ProductFunction::build(zeros, &fit)
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }
    pub fn two_l(&self) -> i64 {
        self.two_l
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Index of the `π`-normalized slot (integer `L` only).
    fn pi_slot(&self) -> Option<usize> {
        if self.two_l % 2 == 0 {
            Some((self.two_l / 2) as usize)
        } else {
            None
        }
    }

    /// First index carrying the `(n−L)⁻²` normalizer.
    fn norm_start(&self) -> usize {
        if self.two_l % 2 == 0 {
            (self.two_l / 2 + 1) as usize
        } else {
            ((self.two_l + 1) / 2) as usize
        }
    }

    /// Square root of the model zero at (real-valued) index `t`. The
    /// expansion runs in even powers of `1/(t−L)`, matching the parity of
    /// the eigenvalue asymptotics in that variable.
    fn model_w(&self, t: f64) -> f64 {
        let u = t - self.l;
        u + self.sigma / (PI * u)
            + self.sigma_correction / (PI * u * u * u)
            + self.sigma_correction2 / (PI * u.powi(5))
    }

    fn model_w_prime(&self, t: f64) -> f64 {
        let u = t - self.l;
        1.0 - self.sigma / (PI * u * u)
            - 3.0 * self.sigma_correction / (PI * u.powi(4))
            - 5.0 * self.sigma_correction2 / (PI * u.powi(6))
    }

    /// Last explicit model index for an evaluation at `lambda`.
    fn model_top(&self, lambda: f64) -> usize {
        let by_lambda = (self.l + 2.0 * lambda.max(0.0).sqrt() + 10.0).ceil() as usize;
        (self.zeros.len() - 1 + MODEL_BUFFER).max(by_lambda)
    }

    /// Sign and natural log of `|G(λ)|`, optionally skipping the linear
    /// factor of one data zero (its constant normalizer stays in place).
    fn eval_log_skip(&self, lambda: f64, skip: Option<usize>) -> Result<(i8, f64), ProductError> {
        if !lambda.is_finite() {
            return Err(ProductError::NonFiniteInput);
        }
        let mut sign: i8 = -1;
        let mut logm = 0.0f64;
        let pi_slot = self.pi_slot();
        let norm_start = self.norm_start();
        for (n, &eta) in self.zeros.iter().enumerate() {
            if pi_slot == Some(n) {
                logm += PI.ln();
            } else if n >= norm_start {
                logm -= 2.0 * (n as f64 - self.l).ln();
            }
            if skip == Some(n) {
                continue;
            }
            let factor = eta - lambda;
            if factor == 0.0 {
                return Ok((0, f64::NEG_INFINITY));
            }
            if factor < 0.0 {
                sign = -sign;
            }
            logm += factor.abs().ln();
        }
        // Explicit model zeros past the data.
        let n_top = self.zeros.len() - 1;
        let m_top = self.model_top(lambda);
        for n in (n_top + 1)..=m_top {
            let w = self.model_w(n as f64);
            let factor = w * w - lambda;
            if factor <= 1e-8 * (w * w).max(lambda.abs()) {
                return Err(ProductError::BeyondDataRange { lambda });
            }
            logm += factor.ln() - 2.0 * (n as f64 - self.l).ln();
        }
        // Euler–Maclaurin for Σ_{n>M} ln((η(n)−λ)/(n−L)²).
        logm += self.log_tail(lambda, m_top);
        if !logm.is_finite() && logm != f64::NEG_INFINITY {
            return Err(ProductError::NonFiniteValue);
        }
        Ok((sign, logm))
    }

    /// `Σ_{n=M+1}^∞ g(n)` with `g(t) = ln((w(t)²−λ)/(t−L)²)` via the
    /// midpoint-free Euler–Maclaurin formula `∫_{M+1}^∞ g + g(M+1)/2 −
    /// g'(M+1)/12`, the integral taken in `u = 1/t`.
    fn log_tail(&self, lambda: f64, m_top: usize) -> f64 {
        let g = |t: f64| {
            let w = self.model_w(t);
            (w * w - lambda).ln() - 2.0 * (t - self.l).ln()
        };
        let t1 = (m_top + 1) as f64;
        let integrand = |u: f64| {
            if u == 0.0 {
                2.0 * self.sigma / PI - lambda
            } else {
                let t = 1.0 / u;
                g(t) * t * t
            }
        };
        let integral = simpson(&integrand, 1.0 / t1);
        let w1 = self.model_w(t1);
        let gp1 = 2.0 * w1 * self.model_w_prime(t1) / (w1 * w1 - lambda) - 2.0 / (t1 - self.l);
        integral + g(t1) / 2.0 - gp1 / 12.0
    }

    /// `Σ_n −1/(ηₙ−λ)` over all zeros (data, model, tail), optionally
    /// skipping one data index.
    fn log_derivative_sum(&self, lambda: f64, skip: Option<usize>) -> Result<f64, ProductError> {
        let mut acc = 0.0f64;
        for (n, &eta) in self.zeros.iter().enumerate() {
            if skip == Some(n) {
                continue;
            }
            let factor = eta - lambda;
            if factor == 0.0 {
                return Err(ProductError::NonFiniteValue);
            }
            acc -= 1.0 / factor;
        }
        let n_top = self.zeros.len() - 1;
        let m_top = self.model_top(lambda);
        for n in (n_top + 1)..=m_top {
            let w = self.model_w(n as f64);
            acc -= 1.0 / (w * w - lambda);
        }
        // Tail of the sum by Euler–Maclaurin in u = 1/t.
        let t1 = (m_top + 1) as f64;
        let r = |t: f64| {
            let w = self.model_w(t);
            -1.0 / (w * w - lambda)
        };
        let integrand = |u: f64| {
            if u == 0.0 {
                -1.0
            } else {
                let t = 1.0 / u;
                r(t) * t * t
            }
        };
        let integral = simpson(&integrand, 1.0 / t1);
        let w1 = self.model_w(t1);
        let eta1 = w1 * w1;
        let rp1 = 2.0 * w1 * self.model_w_prime(t1) / ((eta1 - lambda) * (eta1 - lambda));
        acc += integral + r(t1) / 2.0 - rp1 / 12.0;
        Ok(acc)
    }

    /// Sign and natural log of `|G(λ)|`.
    pub fn eval_log(&self, lambda: f64) -> Result<(i8, f64), ProductError> {
        self.eval_log_skip(lambda, None)
    }

    pub fn eval(&self, lambda: f64) -> Result<f64, ProductError> {
        let (sign, logm) = self.eval_log(lambda)?;
        if sign == 0 {
            return Ok(0.0);
        }
        if logm > 708.0 {
            return Err(ProductError::NonFiniteValue);
        }
        Ok(sign as f64 * logm.exp())
    }

    /// `G'(λ)`, switching to the removed-factor form near a data zero so the
    /// value stays accurate where `G` itself vanishes.
    pub fn derivative(&self, lambda: f64) -> Result<f64, ProductError> {
        let mut k_near = 0usize;
        let mut best = f64::INFINITY;
        for (k, &eta) in self.zeros.iter().enumerate() {
            let d = (lambda - eta).abs();
            if d < best {
                best = d;
                k_near = k;
            }
        }
        let eta = self.zeros[k_near];
        if best <= NEAR_ZERO * eta.abs().max(1.0) {
            // G = A·(η_k − λ): G' = −A·(1 − (η_k − λ)·A'/A).
            let (sign, logm) = self.eval_log_skip(lambda, Some(k_near))?;
            if sign == 0 || logm > 708.0 {
                return Err(ProductError::NonFiniteValue);
            }
            let a = sign as f64 * logm.exp();
            let sk = self.log_derivative_sum(lambda, Some(k_near))?;
            Ok(-a * (1.0 - (eta - lambda) * sk))
        } else {
            let g = self.eval(lambda)?;
            let s = self.log_derivative_sum(lambda, None)?;
            let v = g * s;
            if !v.is_finite() {
                return Err(ProductError::NonFiniteValue);
            }
            Ok(v)
        }
    }
}

/// Composite Simpson rule on `[0, umax]`.
fn simpson(f: &dyn Fn(f64) -> f64, umax: f64) -> f64 {
    let h = umax / TAIL_PANELS as f64;
    let mut acc = f(0.0) + f(umax);
    for j in 1..TAIL_PANELS {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(j as f64 * h);
    }
    acc * h / 3.0
}

/// Expands `∏ (τ_k − λ)` over a chosen subset into polynomial form.
pub fn poles_to_polynomial(taus: &[f64]) -> poly::Polynomial {
    poly::Polynomial::from_roots_descending_factors(taus)
}
