//! Spectral toolkit for one-dimensional Schrödinger boundary value problems
//! whose boundary conditions depend rationally on the spectral parameter.
//!
//! The equation is `-y'' + q(x) y = λ y` on `[0, π]` with boundary conditions
//!
//! ```text
//! y'(0) / y(0) = -f(λ),      y'(π) / y(π) = F(λ),
//! ```
//!
//! where `f` and `F` are rational Herglotz-Nevanlinna functions
//! (`h₀ λ + h + Σ δ_k / (h_k - λ)` with `h₀ ≥ 0`, `δ_k > 0`); `F = ∞` encodes
//! a Dirichlet condition at the right endpoint. The crate provides:
//!
//! * [`hn`] — the boundary-function algebra: validation, the polynomial
//!   fraction decomposition `f = f↑ / f↓`, the index `ind f`, evaluation, and
//!   shifts `f ↦ f + α`;
//! * [`direct`] — a shooting solver for the characteristic functions, complete
//!   eigenvalue enumeration by Prüfer-angle counting, coupling constants
//!   `β_n`, norming constants `γ_n`, and the Weyl function `m = -Ψ/Φ`;
//! * [`products`] — entire functions rebuilt from their zero sequences via
//!   canonical products with an asymptotic tail model, plus the asymptotic
//!   fits (`L`, `σ`) and gap fits (`r`, `ν`) used by the inverse problem;
//! * [`inverse`] — the two-spectra inverse pipeline: validate a pair of
//!   interlacing spectra, locate the zeros `τ_k` of `Φ - Ψ`, synthesize
//!   norming constants, and recover the denominator polynomial `f↓` through a
//!   Hankel moment system.
//!
//! Everything is deterministic: identical inputs produce identical outputs.

pub mod direct;
pub mod hn;
pub mod inverse;
pub mod ode;
pub mod poly;
pub mod potential;
pub mod products;

pub use direct::{BoundaryValueProblem, CharKind, SolverConfig, SpectralData};
pub use hn::RationalBoundaryFunction;
pub use poly::Polynomial;
pub use potential::Potential;
pub use products::ProductFunction;
