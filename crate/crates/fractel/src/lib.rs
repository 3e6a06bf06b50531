//! Numerics for the time-fractional telegraph equation
//!
//! ```text
//! d^a u / dy^a + b d^(a/2) u / dy^(a/2) - u_xx + c u = f(x, y)
//! ```
//!
//! on a rectangle, with Caputo time derivatives of order `a = 2*beta` in
//! (0, 2). The crate evaluates the free-space fundamental solution, builds
//! the rectangle Green function by the method of images, assembles the
//! closed-form solution of the first boundary value problem, and
//! cross-checks everything against grid-based fractional calculus
//! operators and an independent finite difference scheme.
//!
//! Modules follow the pipeline:
//!
//! * [`specfun`] - Wright and confluent hypergeometric limit series and
//!   the composed kernels of the fundamental solution.
//! * [`fraccalc`] - grid-based Riemann-Liouville / Caputo operators and
//!   the identity-test surface for the fractional Green formula.
//! * [`greenfn`] - the fundamental solution, its fractional derivatives,
//!   and the image-series Green function.
//! * [`solver`] - quadrature assembly of the boundary value problem
//!   solution and its verification report.
//! * [`oracle`] - implicit finite difference reference solver.
//! * [`battery`] - the runnable identity-check suite shared with the CLI.

pub mod battery;
pub mod dd;
mod error;
pub mod fraccalc;
pub mod gammafn;
pub mod greenfn;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};

/// Problem constants: orders, coefficients and the rectangle.
///
/// `beta` is always `alpha / 2`; `b1 = -b/2` and `a = b1^2 - c` are the
/// derived kernel constants; `n` is the number of initial traces
/// (`n - 1 < alpha <= n`).
#[derive(Clone, Copy, Debug)]
pub struct ProblemParams {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub c: f64,
    pub a1: f64,
    pub a2: f64,
    pub t_max: f64,
}

impl ProblemParams {
    pub fn new(alpha: f64, b: f64, c: f64, a1: f64, a2: f64, t_max: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidParam(format!(
                "alpha must lie in (0, 2), got {alpha}"
            )));
        }
        if !(a1 < a2) {
            return Err(Error::InvalidParam(format!(
                "need a1 < a2, got a1 = {a1}, a2 = {a2}"
            )));
        }
        if !(t_max > 0.0) {
            return Err(Error::InvalidParam(format!("need T > 0, got {t_max}")));
        }
        if !b.is_finite() || !c.is_finite() {
            return Err(Error::InvalidParam("b and c must be finite".into()));
        }
        Ok(ProblemParams {
            alpha,
            beta: alpha / 2.0,
            b,
            c,
            a1,
            a2,
            t_max,
        })
    }

    /// b1 = -b/2.
    #[inline]
    pub fn b1(&self) -> f64 {
        -self.b / 2.0
    }

    /// a = b1^2 - c.
    #[inline]
    pub fn a_coef(&self) -> f64 {
        self.b1() * self.b1() - self.c
    }

    /// Number of initial traces: 1 for alpha <= 1, 2 for alpha > 1.
    #[inline]
    pub fn n(&self) -> usize {
        if self.alpha > 1.0 {
            2
        } else {
            1
        }
    }

    /// sin(pi (alpha - n)); exactly zero at alpha = 1.
    #[inline]
    pub fn gamma_n_alpha(&self) -> f64 {
        gammafn::sin_pi(self.alpha - self.n() as f64)
    }

    /// Kernel constants consumed by [`specfun`].
    pub fn kernel_params(&self) -> specfun::KernelParams {
        specfun::KernelParams::new(self.b, self.c, self.beta)
    }

    /// Domain width a2 - a1.
    #[inline]
    pub fn width(&self) -> f64 {
        self.a2 - self.a1
    }
}
