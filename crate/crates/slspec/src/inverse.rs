//! Two-spectra inverse problem.
//!
//! Given the spectra `{λₙ}` of `P(q, f, F)` and `{μₙ}` of the companion
//! `P(q, f+α, F)`, the characteristic functions `Φ` and `Ψ` are rebuilt as
//! canonical products over the data, and everything else follows from exact
//! identities:
//!
//! * the gaps obey `√λₙ − √μₙ = ν (n−L)^{-(2r+1)}(1 + O(n⁻²))` with
//!   `πν = α h₀'²` and `r = ind f − 2d ∈ {0, 1}`; its sign fixes which
//!   spectrum interlaces from below;
//! * `Φ − Ψ = −α f↓ χ(0, ·)`, so the poles of `f` hide among the real zeros
//!   `τ₀ < τ₁ < …` of `Φ − Ψ`; a candidate pole set `{τ_i : i ∈ S}` with
//!   `|S| = d ≤ L + (1−r)/2` yields `f↓ = p = ∏(τᵢ − λ)` (reported in the
//!   normalization `h₀' = 1`, `α = πν`);
//! * the norming constants follow from `γₙ = πν p²(λₙ) Φ'(λₙ)/Ψ(λₙ)`.
//!
//! Every candidate is cross-examined: the `γₙ` must be positive with the
//! `(π/2)(n−L)^{2·ind f}` growth, the weighted sums `Σ λₙᵏ p(λₙ)/γₙ`
//! (`k < d`) must vanish, and the Hankel matrix of the moments
//! `sⱼ = Σ λₙʲ/γₙ` must be positive definite, re-deriving the pole
//! polynomial through an independent linear-algebra route whose roots are
//! compared against the chosen `τ` subset. Infinite sums over the spectrum
//! are completed by fitting the two-term decay of their terms and summing
//! the fitted tail explicitly.

use crate::direct::{BoundaryValueProblem, CharKind, DirectError, SolverConfig, SpectralData};
use crate::poly::Polynomial;
use crate::products::{
    fit_asymptotics, fit_gap, AsymptoticFit, GapFit, ProductError, ProductFunction,
};
use nalgebra::{DMatrix, DVector};
use std::fmt;

/// Relative tolerance used to declare a data collision between spectra.
const COMMON_POINT_GUARD: f64 = 1e-12;
/// Relative accuracy target for refined `τ` zeros.
const TAU_REFINE: f64 = 1e-9;
/// Relative tolerance on completed-sum tail bounds (Hankel moments).
const TAIL_TOLERANCE: f64 = 1e-6;
/// Gate on the normalized zero-sum residuals during candidate screening.
const ZERO_SUM_GATE: f64 = 1e-3;
/// Matching tolerance between a true pole and a `τ` zero in round trips.
const POLE_MATCH: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub enum InverseError {
    TooFewEigenvalues { count: usize },
    MismatchedLengths { lambdas: usize, mus: usize },
    NotInterlacing { index: usize },
    CommonPoint { value: f64 },
    /// The two spectra imply different half-integer levels.
    MismatchedLevels { two_l_lambda: i64, two_l_mu: i64 },
    /// `L = -1/2` with `r = 1` admits no solution in this class.
    ExceptionCase,
    /// The gap sign contradicts the interlacing direction.
    DirectionMismatch { nu: f64, mu_first: bool },
    /// More pole candidates than `L + (1-r)/2` allows.
    CardinalityExceeded { d: usize, max: usize },
    NonpositiveGamma { index: usize, value: f64 },
    InsufficientZerosFound { found: usize, needed: usize },
    IndefiniteHankel { min_eigenvalue: f64 },
    /// A completed sum's tail estimate exceeds its error budget.
    TailTooLarge { moment: usize, bound: f64, tol: f64 },
    /// A true pole of `f` has no matching zero of `Φ - Ψ`.
    PoleTauMismatch { pole: f64 },
    Product(ProductError),
    Direct(DirectError),
}

impl fmt::Display for InverseError {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InverseError::TooFewEigenvalues { count } => {
                write!(out, "TooFewEigenvalues: got {count}, need at least 10")
            }
            InverseError::MismatchedLengths { lambdas, mus } => {
                write!(out, "MismatchedLengths: {lambdas} λ's vs {mus} μ's")
            }
            InverseError::NotInterlacing { index } => write!(out, "NotInterlacing at index {index}"),
            InverseError::CommonPoint { value } => {
                write!(out, "CommonPoint: both spectra contain {value}")
            }
            InverseError::MismatchedLevels { two_l_lambda, two_l_mu } => {
                write!(out, "MismatchedLevels: 2L = {two_l_lambda} vs {two_l_mu}")
            }
            InverseError::ExceptionCase => {
                write!(out, "ExceptionCase: L = -1/2 with r = 1 is not solvable")
            }
            InverseError::DirectionMismatch { nu, mu_first } => {
                write!(out, "DirectionMismatch: ν = {nu} against μ-first = {mu_first}")
            }
            InverseError::CardinalityExceeded { d, max } => {
                write!(out, "CardinalityExceeded: {d} poles requested, at most {max}")
            }
            InverseError::NonpositiveGamma { index, value } => {
                write!(out, "NonpositiveGamma: γ_{index} = {value}")
            }
            InverseError::InsufficientZerosFound { found, needed } => {
                write!(out, "InsufficientZerosFound: {found} of {needed}")
            }
            InverseError::IndefiniteHankel { min_eigenvalue } => {
                write!(out, "IndefiniteHankel: smallest eigenvalue {min_eigenvalue}")
            }
            InverseError::TailTooLarge { moment, bound, tol } => {
                write!(out, "TailTooLarge: moment {moment} tail bound {bound} > {tol}")
            }
            InverseError::PoleTauMismatch { pole } => {
                write!(out, "PoleTauMismatch: no τ zero matches pole {pole}")
            }
            InverseError::Product(e) => write!(out, "product: {e}"),
            InverseError::Direct(e) => write!(out, "direct solver: {e}"),
        }
    }
}

impl std::error::Error for InverseError {}

impl From<ProductError> for InverseError {
    fn from(e: ProductError) -> Self {
        InverseError::Product(e)
    }
}

impl From<DirectError> for InverseError {
    fn from(e: DirectError) -> Self {
        InverseError::Direct(e)
    }
}

/// Which spectrum interlaces from below.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterlaceOrder {
    MuFirst,
    LambdaFirst,
}

/// Validated two-spectra input with its fitted asymptotic parameters.
#[derive(Clone, Debug)]
pub struct TwoSpectraData {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    pub fit_lambda: AsymptoticFit,
    pub fit_mu: AsymptoticFit,
    pub gap: GapFit,
    pub order: InterlaceOrder,
}

impl TwoSpectraData {
    /// `d ≤ L + (1−r)/2`, the cap on how many poles `f` may carry.
    pub fn max_pole_count(&self) -> usize {
        let two_l = self.fit_lambda.two_l;
        let r = self.gap.r as i64;
        let cap = if two_l % 2 == 0 { two_l / 2 } else { (two_l + 1) / 2 - r };
        cap.max(0) as usize
    }
}

/// Checks strict interlacing and reports which spectrum starts.
pub fn interlace_check(lambdas: &[f64], mus: &[f64]) -> Result<InterlaceOrder, InverseError> {
    for (i, w) in lambdas.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(InverseError::NotInterlacing { index: i + 1 });
        }
    }
    for (i, w) in mus.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(InverseError::NotInterlacing { index: i + 1 });
        }
    }
    for (i, &lam) in lambdas.iter().enumerate() {
        for &mu in &mus[i.saturating_sub(1)..(i + 2).min(mus.len())] {
            if (lam - mu).abs() <= COMMON_POINT_GUARD * lam.abs().max(1.0) {
                return Err(InverseError::CommonPoint { value: lam });
            }
        }
    }
    let n = lambdas.len().min(mus.len());
    if mus[0] < lambdas[0] {
        for i in 0..n {
            if !(mus[i] < lambdas[i]) || (i + 1 < n && !(lambdas[i] < mus[i + 1])) {
                return Err(InverseError::NotInterlacing { index: i });
            }
        }
        Ok(InterlaceOrder::MuFirst)
    } else {
        for i in 0..n {
            if !(lambdas[i] < mus[i]) || (i + 1 < n && !(mus[i] < lambdas[i + 1])) {
                return Err(InverseError::NotInterlacing { index: i });
            }
        }
        Ok(InterlaceOrder::LambdaFirst)
    }
}

/// Validates a pair of spectra and extracts the asymptotic parameters
/// `(L, σ, σ', r, ν)` that drive the reconstruction.
pub fn validate_two_spectra(lambdas: &[f64], mus: &[f64]) -> Result<TwoSpectraData, InverseError> {
    if lambdas.len() != mus.len() {
        return Err(InverseError::MismatchedLengths { lambdas: lambdas.len(), mus: mus.len() });
    }
    if lambdas.len() < 10 {
        return Err(InverseError::TooFewEigenvalues { count: lambdas.len() });
    }
    let order = interlace_check(lambdas, mus)?;
    let fit_lambda = fit_asymptotics(lambdas)?;
    let fit_mu = fit_asymptotics(mus)?;
    if fit_lambda.two_l != fit_mu.two_l {
        return Err(InverseError::MismatchedLevels {
            two_l_lambda: fit_lambda.two_l,
            two_l_mu: fit_mu.two_l,
        });
    }
    let gap = fit_gap(lambdas, mus, fit_lambda.two_l)?;
    if fit_lambda.two_l == -1 && gap.r == 1 {
        return Err(InverseError::ExceptionCase);
    }
    let mu_first = order == InterlaceOrder::MuFirst;
    if (gap.nu > 0.0) != mu_first {
        return Err(InverseError::DirectionMismatch { nu: gap.nu, mu_first });
    }
    Ok(TwoSpectraData {
        lambdas: lambdas.to_vec(),
        mus: mus.to_vec(),
        fit_lambda,
        fit_mu,
        gap,
        order,
    })
}

/// Sign-preserving square-root coordinate used for scan grids.
fn sqrt_coord(lambda: f64) -> f64 {
    lambda.signum() * lambda.abs().sqrt()
}

fn from_sqrt_coord(g: f64) -> f64 {
    g * g.abs()
}

/// Locates the real zeros `τ₀ < τ₁ < …` of `Φ − Ψ` within the data window.
///
/// The window reaches from below both spectra up to the top `λ`; the scan
/// walks a uniform grid in `sign(λ)√|λ|`, collects sign changes, subdivides
/// cells where `|Φ − Ψ|` dips without changing sign (near-tangency pairs),
/// and refines every bracket by bisection.
pub fn find_tau_zeros(data: &TwoSpectraData) -> Result<Vec<f64>, InverseError> {
    let phi = ProductFunction::build(data.lambdas.clone(), &data.fit_lambda)?;
    let psi = ProductFunction::build(data.mus.clone(), &data.fit_mu)?;
    let w = |lambda: f64| -> Result<f64, InverseError> {
        Ok(phi.eval(lambda)? - psi.eval(lambda)?)
    };
    let bottom = data.lambdas[0].min(data.mus[0]);
    let spread = (data.lambdas[1] - data.lambdas[0]).abs();
    let floor = bottom - (5.0 * spread).max(10.0).max(0.25 * bottom.abs());
    let top = *data.lambdas.last().unwrap();

    let g_lo = sqrt_coord(floor);
    let g_hi = sqrt_coord(top);
    let steps = ((g_hi - g_lo) / 0.02).ceil() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|j| from_sqrt_coord(g_lo + (g_hi - g_lo) * j as f64 / steps as f64))
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for &x in &grid {
        values.push(w(x)?);
    }

    let mut brackets: Vec<(f64, f64)> = Vec::new();
    for j in 1..grid.len() {
        if values[j - 1] == 0.0 {
            continue;
        }
        if values[j].signum() != values[j - 1].signum() {
            brackets.push((grid[j - 1], grid[j]));
        }
    }
    // Near-tangency: a deep dip of |W| without a sign change may hide a
    // close pair of zeros.
    for j in 1..grid.len().saturating_sub(1) {
        let dip = values[j].abs();
        let side = values[j - 1].abs().max(values[j + 1].abs());
        if dip < 1e-3 * side
            && values[j - 1].signum() == values[j].signum()
            && values[j].signum() == values[j + 1].signum()
        {
            let (a, b) = (grid[j - 1], grid[j + 1]);
            let mut prev_x = a;
            let mut prev_v = values[j - 1];
            for k in 1..=64 {
                let x = a + (b - a) * k as f64 / 64.0;
                let v = w(x)?;
                if v.signum() != prev_v.signum() && prev_v != 0.0 {
                    brackets.push((prev_x, x));
                }
                prev_x = x;
                prev_v = v;
            }
        }
    }
    brackets.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());

    let mut taus = Vec::with_capacity(brackets.len());
    for &(mut a, mut b) in &brackets {
        let mut fa = w(a)?;
        for _ in 0..200 {
            if b - a <= TAU_REFINE * a.abs().max(1.0) {
                break;
            }
            let m = 0.5 * (a + b);
            let fm = w(m)?;
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        taus.push(0.5 * (a + b));
    }
    taus.dedup_by(|x, y| (*x - *y).abs() <= 1e-8 * x.abs().max(1.0));
    Ok(taus)
}

/// Everything the inverse step reports for one pole-candidate choice.
#[derive(Clone, Debug)]
pub struct InverseOutput {
    /// Indices into `taus` chosen as poles of `f`.
    pub index_set: Vec<usize>,
    /// All located zeros of `Φ − Ψ`.
    pub taus: Vec<f64>,
    /// The chosen pole abscissas themselves.
    pub poles: Vec<f64>,
    /// `f↓(λ) = ∏ (τᵢ − λ)` in the `h₀' = 1` normalization.
    pub recovered_down: Polynomial,
    pub d: usize,
    pub r: u8,
    /// `α = πν` in the `h₀' = 1` normalization.
    pub alpha: f64,
    pub h0_prime: f64,
    pub nu: f64,
    pub two_l: i64,
    /// Recovered norming constants of `P(q, f, F)`.
    pub gammas: Vec<f64>,
    /// Mean of `γₙ / ((π/2)(n−L)^{2·ind f})` over the top quarter.
    pub gamma_asymptotic_ratio: f64,
    /// Normalized residuals of `Σₙ λₙᵏ f↓(λₙ)/γₙ`, `k < d`.
    pub zero_sum_residuals: Vec<f64>,
    /// Poles recovered independently through the moment Hankel system.
    pub hankel_poles: Vec<f64>,
    /// Smallest eigenvalue of the moment Hankel matrix (`d ≥ 1` only).
    pub hankel_min_eigenvalue: Option<f64>,
}

/// Completes `Σₙ termₙ` over the whole spectrum from its leading terms:
/// fits `termₙ (n−L)^m ≈ c + c₂/n²` on the top half and sums the fitted
/// tail explicitly. Returns the completed sum and a tail error bound.
fn completed_sum(terms: &[f64], l: f64, m: i64) -> (f64, f64) {
    let n_top = terms.len() - 1;
    let start = (terms.len() / 2).max(1);
    let mut pts = Vec::new();
    for (n, &t) in terms.iter().enumerate().skip(start) {
        let nf = n as f64;
        if nf - l <= 0.5 {
            continue;
        }
        pts.push((1.0 / (nf * nf), t * (nf - l).powi(m as i32)));
    }
    let head: f64 = terms.iter().sum();
    if pts.len() < 3 {
        return (head, f64::INFINITY);
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    let (c, c2) = if det.abs() > 1e-300 {
        ((sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det)
    } else {
        (sy / n, 0.0)
    };
    let mut rss = 0.0;
    for &(x, y) in &pts {
        let e = y - c - c2 * x;
        rss += e * e;
    }
    let rho = (rss / n).sqrt();

    // Explicit tail summation of the fitted law plus an integral remainder.
    let mut tail = 0.0;
    let mut weight = 0.0;
    let cutoff = n_top + 4000;
    for k in (n_top + 1)..=cutoff {
        let kf = k as f64;
        let wgt = (kf - l).powi(-(m as i32));
        tail += wgt * (c + c2 / (kf * kf));
        weight += wgt;
    }
    let t_mid = cutoff as f64 + 0.5 - l;
    let remainder_weight = t_mid.powi(1 - m as i32) / (m as f64 - 1.0);
    tail += c * remainder_weight;
    weight += remainder_weight;
    (head + tail, rho * weight)
}

/// Recovers spectral data for one pole-candidate subset of the `τ` zeros.
pub fn recover_with_index_set(
    data: &TwoSpectraData,
    taus: &[f64],
    index_set: &[usize],
) -> Result<InverseOutput, InverseError> {
    let d = index_set.len();
    let d_max = data.max_pole_count();
    if d > d_max {
        return Err(InverseError::CardinalityExceeded { d, max: d_max });
    }
    let mut index_set: Vec<usize> = index_set.to_vec();
    index_set.sort_unstable();
    index_set.dedup();
    if index_set.len() != d || index_set.iter().any(|&i| i >= taus.len()) {
        return Err(InverseError::InsufficientZerosFound {
            found: taus.len(),
            needed: index_set.last().map_or(0, |i| i + 1),
        });
    }
    let poles: Vec<f64> = index_set.iter().map(|&i| taus[i]).collect();
    let p = Polynomial::from_roots_descending_factors(&poles);

    let phi = ProductFunction::build(data.lambdas.clone(), &data.fit_lambda)?;
    let psi = ProductFunction::build(data.mus.clone(), &data.fit_mu)?;
    let two_l = data.fit_lambda.two_l;
    let l = two_l as f64 / 2.0;
    let r = data.gap.r;
    let nu = data.gap.nu;
    let alpha = std::f64::consts::PI * nu;

    let mut gammas = Vec::with_capacity(data.lambdas.len());
    for (n, &lam) in data.lambdas.iter().enumerate() {
        let dphi = phi.derivative(lam)?;
        let psi_v = psi.eval(lam)?;
        let pv = p.eval(lam);
        let gamma = alpha * pv * pv * dphi / psi_v;
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(InverseError::NonpositiveGamma { index: n, value: gamma });
        }
        gammas.push(gamma);
    }

    // Growth check: γₙ ≈ (π/2)(n−L)^{2 ind f} with ind f = 2d + r.
    let ind_f = 2 * d as i64 + r as i64;
    let start = 3 * data.lambdas.len() / 4;
    let mut ratio_acc = 0.0;
    let mut ratio_n = 0;
    for (n, &g) in gammas.iter().enumerate().skip(start) {
        let nf = n as f64;
        if nf - l <= 0.5 {
            continue;
        }
        ratio_acc += g / (std::f64::consts::FRAC_PI_2 * (nf - l).powi(2 * ind_f as i32));
        ratio_n += 1;
    }
    let gamma_asymptotic_ratio = if ratio_n > 0 { ratio_acc / ratio_n as f64 } else { f64::NAN };

    // Zero sums Σ λₙᵏ p(λₙ)/γₙ, k < d, completed by tail fitting and
    // normalized by the corresponding absolute sums.
    let mut zero_sum_residuals = Vec::with_capacity(d);
    for k in 0..d {
        let terms: Vec<f64> = data
            .lambdas
            .iter()
            .zip(&gammas)
            .map(|(&lam, &g)| lam.powi(k as i32) * p.eval(lam) / g)
            .collect();
        let m = 2 * (d as i64) + 2 * (r as i64) - 2 * k as i64;
        let (total, _bound) = completed_sum(&terms, l, m);
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        zero_sum_residuals.push(total.abs() / scale.max(1e-300));
    }

    // Moment Hankel route: sⱼ = Σ λₙʲ/γₙ for j ≤ 2d−1; positive definite
    // by theory, and its orthogonal-polynomial solution reproduces p.
    let mut hankel_poles = Vec::new();
    let mut hankel_min_eigenvalue = None;
    if d >= 1 {
        let mut moments = Vec::with_capacity(2 * d);
        for j in 0..(2 * d) {
            let terms: Vec<f64> = data
                .lambdas
                .iter()
                .zip(&gammas)
                .map(|(&lam, &g)| lam.powi(j as i32) / g)
                .collect();
            let m = 2 * ind_f - 2 * j as i64;
            let (total, bound) = completed_sum(&terms, l, m);
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            let tol = TAIL_TOLERANCE * scale.max(1e-300);
            if bound > tol {
                return Err(InverseError::TailTooLarge { moment: j, bound, tol });
            }
            moments.push(total);
        }
        let h = DMatrix::from_fn(d, d, |i, j| moments[i + j]);
        let min_eig = h
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        hankel_min_eigenvalue = Some(min_eig);
        let chol = h.clone().cholesky();
        let Some(chol) = chol else {
            return Err(InverseError::IndefiniteHankel { min_eigenvalue: min_eig });
        };
        let rhs = DVector::from_fn(d, |k, _| -moments[d + k]);
        let sol = chol.solve(&rhs);
        // Monic λ^d + Σ cᵢ λⁱ whose roots are the recovered poles.
        let mut coeffs: Vec<f64> = sol.iter().copied().collect();
        coeffs.push(1.0);
        hankel_poles = Polynomial::new(coeffs).real_roots();
    }

    Ok(InverseOutput {
        index_set,
        taus: taus.to_vec(),
        poles,
        recovered_down: p,
        d,
        r,
        alpha,
        h0_prime: 1.0,
        nu,
        two_l,
        gammas,
        gamma_asymptotic_ratio,
        zero_sum_residuals,
        hankel_poles,
        hankel_min_eigenvalue,
    })
}

/// Validates the spectra, finds the `τ` zeros, and recovers spectral data
/// for one chosen pole index set.
pub fn recover(
    lambdas: &[f64],
    mus: &[f64],
    index_set: &[usize],
) -> Result<InverseOutput, InverseError> {
    let data = validate_two_spectra(lambdas, mus)?;
    let taus = find_tau_zeros(&data)?;
    recover_with_index_set(&data, &taus, index_set)
}

/// All pole-candidate subsets drawn from the first `k_max` zeros of `Φ−Ψ`.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    pub taus: Vec<f64>,
    pub admissible: Vec<InverseOutput>,
    pub rejected: Vec<(Vec<usize>, String)>,
}

/// Enumerates every subset of the first `k_max` `τ` zeros up to the
/// cardinality cap, screening each through the full consistency battery.
/// The surviving candidates are exactly the finite solution ambiguity of
/// the two-spectra problem; their ground norming constants are reported for
/// distinctness checks.
pub fn enumerate_candidates(
    lambdas: &[f64],
    mus: &[f64],
    k_max: usize,
) -> Result<CandidateSet, InverseError> {
    let data = validate_two_spectra(lambdas, mus)?;
    let taus = find_tau_zeros(&data)?;
    let k = k_max.min(taus.len()).min(16);
    let d_max = data.max_pole_count();
    let mut admissible = Vec::new();
    let mut rejected = Vec::new();
    for mask in 0u32..(1 << k) {
        if (mask.count_ones() as usize) > d_max {
            continue;
        }
        let subset: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        match recover_with_index_set(&data, &taus, &subset) {
            Ok(out) => {
                if let Some(&worst) =
                    out.zero_sum_residuals.iter().max_by(|a, b| a.partial_cmp(b).unwrap())
                {
                    if worst > ZERO_SUM_GATE {
                        rejected.push((subset, format!("zero-sum residual {worst:.3e}")));
                        continue;
                    }
                }
                if !(0.2..5.0).contains(&out.gamma_asymptotic_ratio) {
                    rejected.push((
                        subset,
                        format!("norming constant growth ratio {}", out.gamma_asymptotic_ratio),
                    ));
                    continue;
                }
                admissible.push(out);
            }
            Err(e) => rejected.push((subset, e.to_string())),
        }
    }
    Ok(CandidateSet { taus, admissible, rejected })
}

/// Outcome of a direct-then-inverse round trip on a known problem.
#[derive(Clone, Debug)]
pub struct RoundTrip {
    pub lambda_data: SpectralData,
    pub mus: Vec<f64>,
    pub output: InverseOutput,
    /// Max relative error of recovered vs direct `γₙ` over the lower half.
    pub max_gamma_rel_error: f64,
    /// `|τ − h_k|` per true pole, via the `Φ−Ψ` route.
    pub pole_errors_tau: Vec<f64>,
    /// `|ĥ_k − h_k|` per true pole, via the Hankel route.
    pub pole_errors_hankel: Vec<f64>,
    /// Recovered `πν` against the true `α h₀'²`.
    pub alpha_rel_error: f64,
    /// `σ_λ − σ_μ`, which must equal `α` for even `ind f` and `0` otherwise.
    pub sigma_difference: f64,
    pub sigma_difference_expected: f64,
    /// Fitted gap order against `h₀ > 0`.
    pub r_matches_theory: bool,
}

/// Runs the direct solver on both members of the pair, feeds the two
/// spectra through the full inverse pipeline (choosing the pole subset by
/// matching the true poles against the located `τ` zeros), and quantifies
/// every recovered object against its directly computed counterpart.
pub fn roundtrip(
    problem: &BoundaryValueProblem,
    count: usize,
    cfg: &SolverConfig,
) -> Result<RoundTrip, InverseError> {
    let lambda_data = problem.spectral_data(count, cfg)?;
    let mu_data = problem.eigenvalues(CharKind::Psi, count, cfg)?;
    let data = validate_two_spectra(&lambda_data.eigenvalues, &mu_data.eigenvalues)?;
    let taus = find_tau_zeros(&data)?;

    // Match each true pole to the nearest located τ, injectively.
    let true_poles = problem.f().poles();
    let mut index_set = Vec::with_capacity(true_poles.len());
    let mut pole_errors_tau = Vec::with_capacity(true_poles.len());
    for &h in true_poles {
        let mut best: Option<(usize, f64)> = None;
        for (i, &tau) in taus.iter().enumerate() {
            if index_set.contains(&i) {
                continue;
            }
            let err = (tau - h).abs();
            if best.map_or(true, |(_, e)| err < e) {
                best = Some((i, err));
            }
        }
        match best {
            Some((i, err)) if err <= POLE_MATCH * (1.0 + h.abs()) => {
                index_set.push(i);
                pole_errors_tau.push(err);
            }
            _ => return Err(InverseError::PoleTauMismatch { pole: h }),
        }
    }
    let output = recover_with_index_set(&data, &taus, &index_set)?;

    let gammas_direct = lambda_data.gammas.as_ref().expect("direct data carries γ");
    let mut max_gamma_rel_error = 0.0f64;
    for n in 0..=(count / 2).min(count - 1) {
        let err = (output.gammas[n] - gammas_direct[n]).abs() / gammas_direct[n];
        max_gamma_rel_error = max_gamma_rel_error.max(err);
    }

    let mut pole_errors_hankel = Vec::with_capacity(true_poles.len());
    if output.hankel_poles.len() == true_poles.len() {
        let mut sorted_true: Vec<f64> = true_poles.to_vec();
        sorted_true.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (h, hh) in sorted_true.iter().zip(&output.hankel_poles) {
            pole_errors_hankel.push((h - hh).abs());
        }
    }

    let h0p = problem.f().h0_prime();
    let alpha_true = problem.alpha() * h0p * h0p;
    let alpha_rel_error = (output.alpha - alpha_true).abs() / alpha_true.abs();

    let sigma_difference = data.fit_lambda.sigma - data.fit_mu.sigma;
    let ind_f = problem.f().index();
    let sigma_difference_expected = if ind_f % 2 == 0 { problem.alpha() } else { 0.0 };
    let r_matches_theory = (output.r == 1) == (problem.f().h0() > 0.0);

    Ok(RoundTrip {
        lambda_data,
        mus: mu_data.eigenvalues,
        output,
        max_gamma_rel_error,
        pole_errors_tau,
        pole_errors_hankel,
        alpha_rel_error,
        sigma_difference,
        sigma_difference_expected,
        r_matches_theory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// 31 eigenvalues n² of the Neumann problem.
    fn neumann_lambdas() -> Vec<f64> {
        (0..31).map(|n| (n * n) as f64).collect()
    }

    /// 31 zeros of √λ sin(√λπ) + cos(√λπ): μ₀ = −u² with coth(uπ) = u, then
    /// tan(tπ) = −1/t on (n − 1/2, n).
    fn neumann_mus() -> Vec<f64> {
        let mut mus = Vec::with_capacity(31);
        let mut lo = 0.5;
        let mut hi = 1.5;
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if 1.0 / (m * PI).tanh() - m > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        mus.push(-lo * lo);
        for n in 1..31 {
            let mut lo = n as f64 - 0.5 + 1e-9;
            let mut hi = n as f64 - 1e-12;
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if (m * PI).tan() + 1.0 / m < 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            mus.push(lo * lo);
        }
        mus
    }

    /// Synthetic pair with 2L = 2, r = 1, ν = −0.2 (λ's interlace first).
    fn synthetic_pair() -> (Vec<f64>, Vec<f64>) {
        let mut lams = vec![-2.0];
        let mut mus = vec![-1.0];
        for n in 1..36 {
            let nf = n as f64;
            let sl = nf - 1.0 + 0.3 / (PI * nf);
            lams.push(sl * sl);
            if n == 1 {
                mus.push(0.5);
            } else {
                let sm = sl + 0.2 / (nf - 1.0).powi(3);
                mus.push(sm * sm);
            }
        }
        (lams, mus)
    }

    #[test]
    fn neumann_pair_validates_with_positive_nu() {
        let data = validate_two_spectra(&neumann_lambdas(), &neumann_mus()).unwrap();
        assert_eq!(data.fit_lambda.two_l, 0);
        assert_eq!(data.gap.r, 0);
        assert_eq!(data.order, InterlaceOrder::MuFirst);
        assert_relative_eq!(data.gap.nu, 1.0 / PI, max_relative = 1e-4);
        assert_relative_eq!(data.fit_lambda.sigma - data.fit_mu.sigma, 1.0, epsilon = 1e-4);
        assert_eq!(data.max_pole_count(), 0);
    }

    #[test]
    fn tau_zeros_recover_the_interior_dirichlet_spectrum() {
        // Φ − Ψ = −cos(√λ π), zeros at (k + 1/2)².
        let data = validate_two_spectra(&neumann_lambdas(), &neumann_mus()).unwrap();
        let taus = find_tau_zeros(&data).unwrap();
        assert!(taus.len() >= 10, "found {} τ zeros", taus.len());
        for (k, &tau) in taus.iter().take(6).enumerate() {
            let expected = (k as f64 + 0.5).powi(2);
            assert_relative_eq!(tau, expected, max_relative = 1e-5);
        }
    }

    #[test]
    fn neumann_norming_constants_are_recovered_tightly() {
        let out = recover(&neumann_lambdas(), &neumann_mus(), &[]).unwrap();
        assert_relative_eq!(out.gammas[0], PI, max_relative = 1e-6);
        for n in 1..16 {
            assert_relative_eq!(out.gammas[n], PI / 2.0, max_relative = 1e-6);
        }
        assert_relative_eq!(out.alpha, 1.0, max_relative = 1e-3);
        assert!((out.gamma_asymptotic_ratio - 1.0).abs() < 0.05);
        assert_eq!(out.d, 0);
        assert!(out.hankel_min_eigenvalue.is_none());
    }

    #[test]
    fn cardinality_cap_applies_at_level_zero() {
        let err = recover(&neumann_lambdas(), &neumann_mus(), &[0]).unwrap_err();
        assert!(matches!(err, InverseError::CardinalityExceeded { d: 1, max: 0 }));
    }

    #[test]
    fn recovery_is_deterministic() {
        let a = recover(&neumann_lambdas(), &neumann_mus(), &[]).unwrap();
        let b = recover(&neumann_lambdas(), &neumann_mus(), &[]).unwrap();
        assert_eq!(a.gammas, b.gammas);
        assert_eq!(a.taus, b.taus);
    }

    #[test]
    fn exception_case_is_rejected_before_direction() {
        // λₙ = (n+1/2)², √μₙ = √λₙ + 0.1/(n+1/2)³: L = −1/2 with r = 1.
        let mut lams = Vec::new();
        let mut mus = Vec::new();
        for n in 0..31 {
            let t = n as f64 + 0.5;
            lams.push(t * t);
            let tm = t + 0.1 / (t * t * t);
            mus.push(tm * tm);
        }
        let err = validate_two_spectra(&lams, &mus).unwrap_err();
        assert_eq!(err, InverseError::ExceptionCase);
    }

    #[test]
    fn collisions_and_interlacing_violations_are_reported() {
        let lams = neumann_lambdas();
        let mut mus = neumann_mus();
        let orig = mus[3];
        mus[3] = lams[3];
        assert!(matches!(
            validate_two_spectra(&lams, &mus),
            Err(InverseError::CommonPoint { .. })
        ));
        mus[3] = lams[4] + 0.5; // jumps past λ₄: not interlacing
        assert!(matches!(
            validate_two_spectra(&lams, &mus),
            Err(InverseError::NotInterlacing { .. })
        ));
        mus[3] = orig;
        validate_two_spectra(&lams, &mus).unwrap();
    }

    #[test]
    fn swapped_spectra_with_stale_direction_produce_negative_gammas() {
        // Swapping the spectra while keeping the old ν > 0 flips the sign of
        // every recovered γ.
        let data = validate_two_spectra(&neumann_lambdas(), &neumann_mus()).unwrap();
        let forged = TwoSpectraData {
            lambdas: data.mus.clone(),
            mus: data.lambdas.clone(),
            fit_lambda: data.fit_mu,
            fit_mu: data.fit_lambda,
            gap: data.gap,
            order: data.order,
        };
        let taus = find_tau_zeros(&forged).unwrap();
        let err = recover_with_index_set(&forged, &taus, &[]).unwrap_err();
        assert!(matches!(err, InverseError::NonpositiveGamma { index: 0, .. }));
    }

    #[test]
    fn synthetic_pair_supports_multiple_candidates() {
        let (lams, mus) = synthetic_pair();
        let data = validate_two_spectra(&lams, &mus).unwrap();
        assert_eq!(data.fit_lambda.two_l, 2);
        assert_eq!(data.gap.r, 1);
        assert_eq!(data.order, InterlaceOrder::LambdaFirst);
        assert_relative_eq!(data.gap.nu, -0.2, max_relative = 1e-3);
        assert_eq!(data.max_pole_count(), 1);

        let set = enumerate_candidates(&lams, &mus, 3).unwrap();
        let attempted = set.admissible.len() + set.rejected.len();
        assert_eq!(attempted, 4, "∅ plus three singletons");
        assert!(set.admissible.len() >= 2, "admissible: {}", set.admissible.len());
        // Ground norming constants distinguish the candidates.
        for i in 0..set.admissible.len() {
            for j in (i + 1)..set.admissible.len() {
                let a = set.admissible[i].gammas[0];
                let b = set.admissible[j].gammas[0];
                assert!(
                    (a - b).abs() > 1e-6 * a.abs().max(b.abs()),
                    "candidates {i} and {j} share γ₀ = {a}"
                );
            }
        }
    }

    #[test]
    fn hankel_route_reproduces_the_chosen_pole() {
        let (lams, mus) = synthetic_pair();
        let data = validate_two_spectra(&lams, &mus).unwrap();
        let taus = find_tau_zeros(&data).unwrap();
        let out = recover_with_index_set(&data, &taus, &[1]).unwrap();
        assert_eq!(out.d, 1);
        assert!(out.hankel_min_eigenvalue.unwrap() > 0.0);
        assert_eq!(out.hankel_poles.len(), 1);
        assert_relative_eq!(
            out.hankel_poles[0],
            out.poles[0],
            max_relative = 1e-2,
            epsilon = 1e-2
        );
        assert!(out.zero_sum_residuals[0] < 1e-3, "residual {}", out.zero_sum_residuals[0]);
    }
}
