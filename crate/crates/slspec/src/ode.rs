//! Adaptive Runge-Kutta-Fehlberg 7(8) integration.
//!
//! The solver advances with the 8th-order solution and controls the step
//! from the classical embedded error estimate
//! `h · 41/840 · (k₀ + k₁₀ - k₁₁ - k₁₂)`. It is used in three roles:
//!
//! * the linear shooting system `(y, y')` for characteristic functions,
//! * the same system augmented with `z' = y²` so the norming-constant
//!   quadrature is performed by the integrator itself, on its own accepted
//!   steps and at its own order,
//! * the scalar Prüfer angle equation used for eigenvalue counting.
//!
//! States are fixed-size arrays over a scalar type; `f64` and `Complex64`
//! are supported so that the Weyl function can be evaluated off the real
//! axis with the same code path.
//!
//! Step sizes honor an external cap (callers bound them by a fraction of
//! the local oscillation wavelength `2π/√max(|λ|,1)`) and never straddle a
//! breakpoint of a piecewise-linear sampled potential: integration stops at
//! every grid node, so the right-hand side is smooth within each step and
//! the method keeps its full order.

use num_complex::Complex64;
use std::fmt;

/// Scalar types the integrator can advance.
pub trait OdeScalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
{
    const ZERO: Self;
    fn from_re(x: f64) -> Self;
    /// Multiplication by a real factor.
    fn scale(self, c: f64) -> Self;
    /// Modulus.
    fn norm(self) -> f64;
}

impl OdeScalar for f64 {
    const ZERO: f64 = 0.0;
    fn from_re(x: f64) -> f64 {
        x
    }
    fn scale(self, c: f64) -> f64 {
        self * c
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for Complex64 {
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    fn from_re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }
    fn scale(self, c: f64) -> Complex64 {
        self * c
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

/// Integration failures.
#[derive(Clone, Debug, PartialEq)]
pub enum OdeError {
    /// The controller pushed the step below the representable resolution.
    StepSizeUnderflow { x: f64 },
    /// The state left the finite range.
    NonfiniteState { x: f64 },
    /// The step budget was exhausted.
    TooManySteps { x: f64 },
}

impl fmt::Display for OdeError {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::StepSizeUnderflow { x } => write!(out, "StepSizeUnderflow at x = {x}"),
            OdeError::NonfiniteState { x } => write!(out, "NonfiniteState at x = {x}"),
            OdeError::TooManySteps { x } => write!(out, "TooManySteps at x = {x}"),
        }
    }
}

impl std::error::Error for OdeError {}

/// Tolerances and step constraints for one integration span.
#[derive(Clone, Debug)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on |h|; callers derive it from the oscillation wavelength.
    pub max_step: f64,
    /// Uniform breakpoint spacing (grid nodes at integer multiples), if the
    /// right-hand side has kinks there.
    pub grid_width: Option<f64>,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(rtol: f64, atol: f64) -> Self {
        StepControl { rtol, atol, max_step: f64::INFINITY, grid_width: None, max_steps: 2_000_000 }
    }
}

// Fehlberg 7(8) tableau (13 stages). C: nodes, A: stage coefficients,
// B8: 8th-order weights, the error estimate uses stages 0, 10, 11, 12.
const STAGES: usize = 13;

const C: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    1.0 / 2.0,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

const A: [[f64; STAGES - 1]; STAGES - 1] = {
    let mut a = [[0.0; STAGES - 1]; STAGES - 1];
    a[0][0] = 2.0 / 27.0;
    a[1][0] = 1.0 / 36.0;
    a[1][1] = 1.0 / 12.0;
    a[2][0] = 1.0 / 24.0;
    a[2][2] = 1.0 / 8.0;
    a[3][0] = 5.0 / 12.0;
    a[3][2] = -25.0 / 16.0;
    a[3][3] = 25.0 / 16.0;
    a[4][0] = 1.0 / 20.0;
    a[4][3] = 1.0 / 4.0;
    a[4][4] = 1.0 / 5.0;
    a[5][0] = -25.0 / 108.0;
    a[5][3] = 125.0 / 108.0;
    a[5][4] = -65.0 / 27.0;
    a[5][5] = 125.0 / 54.0;
    a[6][0] = 31.0 / 300.0;
    a[6][4] = 61.0 / 225.0;
    a[6][5] = -2.0 / 9.0;
    a[6][6] = 13.0 / 900.0;
    a[7][0] = 2.0;
    a[7][3] = -53.0 / 6.0;
    a[7][4] = 704.0 / 45.0;
    a[7][5] = -107.0 / 9.0;
    a[7][6] = 67.0 / 90.0;
    a[7][7] = 3.0;
    a[8][0] = -91.0 / 108.0;
    a[8][3] = 23.0 / 108.0;
    a[8][4] = -976.0 / 135.0;
    a[8][5] = 311.0 / 54.0;
    a[8][6] = -19.0 / 60.0;
    a[8][7] = 17.0 / 6.0;
    a[8][8] = -1.0 / 12.0;
    a[9][0] = 2383.0 / 4100.0;
    a[9][3] = -341.0 / 164.0;
    a[9][4] = 4496.0 / 1025.0;
    a[9][5] = -301.0 / 82.0;
    a[9][6] = 2133.0 / 4100.0;
    a[9][7] = 45.0 / 82.0;
    a[9][8] = 45.0 / 164.0;
    a[9][9] = 18.0 / 41.0;
    a[10][0] = 3.0 / 205.0;
    a[10][5] = -6.0 / 41.0;
    a[10][6] = -3.0 / 205.0;
    a[10][7] = -3.0 / 41.0;
    a[10][8] = 3.0 / 41.0;
    a[10][9] = 6.0 / 41.0;
    a[11][0] = -1777.0 / 4100.0;
    a[11][3] = -341.0 / 164.0;
    a[11][4] = 4496.0 / 1025.0;
    a[11][5] = -289.0 / 82.0;
    a[11][6] = 2193.0 / 4100.0;
    a[11][7] = 51.0 / 82.0;
    a[11][8] = 33.0 / 164.0;
    a[11][9] = 12.0 / 41.0;
    a[11][11] = 1.0;
    a
};

const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

const ERR_WEIGHT: f64 = 41.0 / 840.0;

/// One embedded step from `(x, y)` with signed step `h`.
///
/// Returns the 8th-order solution and a normalized error estimate
/// (≤ 1 means the step meets the tolerances).
fn rk_step<S: OdeScalar, const N: usize>(
    rhs: &mut impl FnMut(f64, &[S; N]) -> [S; N],
    x: f64,
    y: &[S; N],
    h: f64,
    ctl: &StepControl,
) -> ([S; N], f64) {
    let mut k = [[S::ZERO; N]; STAGES];
    k[0] = rhs(x, y);
    for i in 1..STAGES {
        let mut yi = *y;
        for j in 0..i {
            let a = A[i - 1][j];
            if a != 0.0 {
                for n in 0..N {
                    yi[n] = yi[n] + k[j][n].scale(a * h);
                }
            }
        }
        k[i] = rhs(x + C[i] * h, &yi);
    }

    let mut y8 = *y;
    for i in 0..STAGES {
        if B8[i] != 0.0 {
            for n in 0..N {
                y8[n] = y8[n] + k[i][n].scale(B8[i] * h);
            }
        }
    }

    let mut err = 0.0_f64;
    for n in 0..N {
        let e = (k[0][n] + k[10][n] - k[11][n] - k[12][n]).scale(ERR_WEIGHT * h);
        let sc = ctl.atol + ctl.rtol * y[n].norm().max(y8[n].norm());
        let r = e.norm() / sc;
        err += r * r;
    }
    (y8, (err / N as f64).sqrt())
}

/// Integrates from `x0` to `x1` (either direction) and returns the final
/// state. Steps stop exactly on the grid nodes named by
/// `ctl.grid_width` so that piecewise-smooth right-hand sides are only ever
/// sampled inside their smooth cells.
pub fn integrate<S: OdeScalar, const N: usize>(
    rhs: &mut impl FnMut(f64, &[S; N]) -> [S; N],
    x0: f64,
    x1: f64,
    y0: [S; N],
    ctl: &StepControl,
) -> Result<[S; N], OdeError> {
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut x = x0;
    let mut y = y0;
    let mut h_abs = (span.abs() / 16.0).min(ctl.max_step).min(span.abs());
    let mut steps = 0usize;

    while (x1 - x) * dir > 0.0 {
        steps += 1;
        if steps > ctl.max_steps {
            return Err(OdeError::TooManySteps { x });
        }

        let remaining = (x1 - x).abs();
        let mut target = remaining;
        if let Some(w) = ctl.grid_width {
            // Distance to the next grid node strictly ahead of x.
            let pos = x / w;
            let next = if dir > 0.0 { pos.floor() + 1.0 } else { pos.ceil() - 1.0 };
            let mut dist = (next * w - x).abs();
            if dist < 1e-12 * w {
                dist += w;
            }
            target = target.min(dist);
        }
        let mut h = h_abs.min(ctl.max_step).min(target);
        if h < 1e-14 * x.abs().max(1.0) {
            return Err(OdeError::StepSizeUnderflow { x });
        }
        // Snap to the stop point when nearly there to avoid a sliver step.
        if h > target * (1.0 - 1e-9) {
            h = target;
        }

        let (y_new, err) = rk_step(rhs, x, &y, dir * h, ctl);

        if !err.is_finite() {
            return Err(OdeError::NonfiniteState { x });
        }
        if err <= 1.0 {
            x += dir * h;
            y = y_new;
            for v in &y {
                if !v.norm().is_finite() {
                    return Err(OdeError::NonfiniteState { x });
                }
            }
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.125)).min(5.0) };
            h_abs = h * grow.max(0.2);
        } else {
            h_abs = h * (0.9 * err.powf(-0.125)).max(0.1);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn harmonic(lambda: f64) -> impl FnMut(f64, &[f64; 2]) -> [f64; 2] {
        move |_x, y| [y[1], -lambda * y[0]]
    }

    #[test]
    fn oscillatory_closed_form() {
        // y'' = -y, y(0) = 1, y'(0) = 0 over [0, π]: y(π) = -1, y'(π) = 0.
        let ctl = StepControl::new(1e-12, 1e-12);
        let y = integrate(&mut harmonic(1.0), 0.0, std::f64::consts::PI, [1.0, 0.0], &ctl).unwrap();
        assert_relative_eq!(y[0], -1.0, epsilon = 1e-11);
        assert_relative_eq!(y[1], 0.0, epsilon = 1e-11);
    }

    #[test]
    fn hyperbolic_closed_form() {
        // y'' = +y: y(π) = cosh π, y'(π) = sinh π.
        let ctl = StepControl::new(1e-12, 1e-12);
        let y = integrate(&mut harmonic(-1.0), 0.0, std::f64::consts::PI, [1.0, 0.0], &ctl).unwrap();
        assert_relative_eq!(y[0], std::f64::consts::PI.cosh(), max_relative = 1e-11);
        assert_relative_eq!(y[1], std::f64::consts::PI.sinh(), max_relative = 1e-11);
    }

    #[test]
    fn high_frequency_keeps_relative_accuracy() {
        // λ = 10⁴: 50 oscillations across the interval.
        let lambda: f64 = 1.0e4;
        let mut ctl = StepControl::new(1e-12, 1e-14);
        ctl.max_step = 2.0 * std::f64::consts::PI / lambda.sqrt() / 3.0;
        let y = integrate(&mut harmonic(lambda), 0.0, std::f64::consts::PI, [1.0, 0.0], &ctl).unwrap();
        let s = lambda.sqrt();
        assert_relative_eq!(y[0], (s * std::f64::consts::PI).cos(), epsilon = 1e-9);
        assert_relative_eq!(y[1] / s, -(s * std::f64::consts::PI).sin(), epsilon = 1e-9);
    }

    #[test]
    fn backward_integration_reverses_forward() {
        let ctl = StepControl::new(1e-12, 1e-12);
        let fwd = integrate(&mut harmonic(2.5), 0.0, 2.0, [0.3, -1.1], &ctl).unwrap();
        let back = integrate(&mut harmonic(2.5), 2.0, 0.0, fwd, &ctl).unwrap();
        assert_relative_eq!(back[0], 0.3, epsilon = 1e-10);
        assert_relative_eq!(back[1], -1.1, epsilon = 1e-10);
    }

    #[test]
    fn complex_states_integrate() {
        use num_complex::Complex64;
        // y' = i y from 1: y(t) = e^{it}.
        let mut rhs = |_x: f64, y: &[Complex64; 1]| [y[0] * Complex64::new(0.0, 1.0)];
        let ctl = StepControl::new(1e-12, 1e-12);
        let y = integrate(&mut rhs, 0.0, 1.0, [Complex64::new(1.0, 0.0)], &ctl).unwrap();
        assert_relative_eq!(y[0].re, 1.0_f64.cos(), epsilon = 1e-11);
        assert_relative_eq!(y[0].im, 1.0_f64.sin(), epsilon = 1e-11);
    }

    #[test]
    fn grid_breakpoints_preserve_order_for_kinked_rhs() {
        // y' = |sin-like triangle wave| built from a kink at multiples of w;
        // the integrator must stop at nodes to keep high accuracy.
        let w = 0.1;
        let mut rhs = |x: f64, _y: &[f64; 1]| {
            let t = (x / w).floor();
            let frac = x / w - t;
            [if (t as i64) % 2 == 0 { frac } else { 1.0 - frac }]
        };
        let mut ctl = StepControl::new(1e-12, 1e-12);
        ctl.grid_width = Some(w);
        // Integral over [0, 1] of the triangle wave = 10 segments · w/2 · 1 = 0.5.
        let y = integrate(&mut rhs, 0.0, 1.0, [0.0], &ctl).unwrap();
        assert_relative_eq!(y[0], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn error_estimate_converges_at_high_order() {
        // Halving the tolerance must not blow up the step count: order-8
        // scaling means tightening rtol by 256 roughly halves step size.
        let count_steps = |rtol: f64| {
            let mut evals = 0usize;
            let mut rhs = |_x: f64, y: &[f64; 2]| {
                evals += 1;
                [y[1], -25.0 * y[0]]
            };
            let ctl = StepControl::new(rtol, 1e-14);
            integrate(&mut rhs, 0.0, std::f64::consts::PI, [1.0, 0.0], &ctl).unwrap();
            evals
        };
        let coarse = count_steps(1e-6);
        let fine = count_steps(1e-12);
        assert!(
            (fine as f64) < 8.0 * coarse as f64,
            "expected high-order scaling, got {coarse} -> {fine} evaluations"
        );
    }
}
