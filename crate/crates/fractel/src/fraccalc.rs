//! Grid-based Riemann-Liouville and Caputo operators, the power rule,
//! the singular S-operator, and the identity-check surface for the
//! fractional Green formula.
//!
//! All weakly singular quadrature is product integration exact on
//! piecewise-linear interpolants: the kernel `|y - s|^(-nu-1)` is
//! absorbed into per-segment weights in closed form, so no quadrature
//! node ever sits on the singularity.

use crate::gammafn::{gamma, recip_gamma, sin_pi};
use crate::quadrature::{graded_panels, integrate_panels, weakly_singular, GaussRule};
use crate::{Error, Result};

/// A function known on an ascending grid, with optional derivatives at
/// the left endpoint for Caputo head subtraction.
#[derive(Clone, Debug)]
pub struct SampledFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    derivs_at_a: Option<Vec<f64>>,
}

impl SampledFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, derivs_at_a: Option<Vec<f64>>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(Error::Grid(format!(
                "need matching nodes/values with >= 2 entries, got {} / {}",
                nodes.len(),
                values.len()
            )));
        }
        if !nodes.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Grid("nodes must be strictly increasing".into()));
        }
        Ok(SampledFunction {
            nodes,
            values,
            derivs_at_a,
        })
    }

    /// Sample a closure on a given grid.
    pub fn from_fn<F: Fn(f64) -> f64>(
        grid: Vec<f64>,
        f: F,
        derivs_at_a: Option<Vec<f64>>,
    ) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        SampledFunction::new(grid, values, derivs_at_a)
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    #[inline]
    pub fn upper(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs_at_a(&self) -> Option<&[f64]> {
        self.derivs_at_a.as_deref()
    }

    fn segment_of(&self, x: f64) -> usize {
        // Largest i with nodes[i] <= x, clamped to a valid segment start.
        match self.nodes.binary_search_by(|n| n.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.nodes.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.nodes.len() - 2),
        }
    }

    /// Piecewise-linear interpolation.
    pub fn interp(&self, x: f64) -> f64 {
        let i = self.segment_of(x);
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// First or second derivative from the quadratic through the three
    /// grid nodes nearest to x (exact for quadratics on any grid).
    pub fn derivative_at(&self, x: f64, order: usize) -> Result<f64> {
        if self.nodes.len() < 3 {
            return Err(Error::Grid("need >= 3 nodes for derivatives".into()));
        }
        let i = self.segment_of(x).clamp(1, self.nodes.len() - 2);
        let (x0, x1, x2) = (self.nodes[i - 1], self.nodes[i], self.nodes[i + 1]);
        let (f0, f1, f2) = (self.values[i - 1], self.values[i], self.values[i + 1]);
        let d01 = (f1 - f0) / (x1 - x0);
        let d12 = (f2 - f1) / (x2 - x1);
        let dd = (d12 - d01) / (x2 - x0);
        match order {
            1 => Ok(d01 + dd * (2.0 * x - x0 - x1)),
            2 => Ok(2.0 * dd),
            _ => Err(Error::InvalidParam(format!(
                "derivative order {order} unsupported"
            ))),
        }
    }

    fn check_range(&self, y: f64) -> Result<()> {
        let span = self.upper() - self.a();
        let tol = 1e-12 * span.max(1.0);
        if y < self.a() - tol || y > self.upper() + tol {
            return Err(Error::Grid(format!(
                "evaluation point {y} outside grid [{}, {}]",
                self.a(),
                self.upper()
            )));
        }
        Ok(())
    }
}

/// Fractional order `nu > 0` with `n - 1 < nu <= n`.
#[derive(Clone, Copy, Debug)]
pub struct FracOrder {
    pub nu: f64,
    pub n: usize,
}

impl FracOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParam(format!(
                "fractional order must be positive, got {nu}"
            )));
        }
        Ok(FracOrder {
            nu,
            n: nu.ceil() as usize,
        })
    }
}

/// `A^p - B^p` for `A >= B >= 0` without subtractive cancellation.
fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    if b == 0.0 {
        return a.powf(p);
    }
    if a == b {
        return 0.0;
    }
    let r = (a - b) / b;
    if r > 0.25 {
        a.powf(p) - b.powf(p)
    } else {
        b.powf(p) * (p * r.ln_1p()).exp_m1()
    }
}

/// Riemann-Liouville integral `D^order f(y)` for `order < 0`.
///
/// Product integration: on each segment the linear interpolant of `f`
/// times `(y - s)^(p-1)` is integrated in closed form, `p = -order`.
pub fn rl_integral(f: &SampledFunction, order: f64, y: f64) -> Result<f64> {
    if !(order < 0.0) {
        return Err(Error::InvalidParam(format!(
            "rl_integral needs order < 0, got {order}"
        )));
    }
    f.check_range(y)?;
    let p = -order;
    if y <= f.a() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for i in 0..f.nodes.len() - 1 {
        let s_l = f.nodes[i];
        if s_l >= y {
            break;
        }
        let s_r = f.nodes[i + 1].min(y);
        let h = f.nodes[i + 1] - f.nodes[i];
        let slope = (f.values[i + 1] - f.values[i]) / h;
        let big_a = y - s_l;
        let big_b = y - s_r;
        let d1 = pow_diff(big_a, big_b, p) / p;
        let d2 = pow_diff(big_a, big_b, p + 1.0) / (p + 1.0);
        acc += f.values[i] * d1 + slope * (big_a * d1 - d2);
    }
    Ok(acc * recip_gamma(p))
}

/// Fractional integral exact on piecewise-quadratic interpolants; used
/// inside the derivative path, where the n-fold difference would
/// otherwise amplify the piecewise-linear quadrature error.
fn rl_integral_pq(f: &SampledFunction, order: f64, y: f64) -> Result<f64> {
    if f.nodes.len() < 3 {
        return rl_integral(f, order, y);
    }
    f.check_range(y)?;
    let p = -order;
    if y <= f.a() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for i in 0..f.nodes.len() - 1 {
        let s_l = f.nodes[i];
        if s_l >= y {
            break;
        }
        let s_r = f.nodes[i + 1].min(y);
        // Quadratic through the three nodes nearest this segment, written
        // as c0 + c1 u + c2 u^2 with u = s - s_l.
        let j = i.clamp(1, f.nodes.len() - 2);
        let (x0, x1, x2) = (f.nodes[j - 1], f.nodes[j], f.nodes[j + 1]);
        let (f0, f1, f2) = (f.values[j - 1], f.values[j], f.values[j + 1]);
        let d01 = (f1 - f0) / (x1 - x0);
        let d12 = (f2 - f1) / (x2 - x1);
        let dd = (d12 - d01) / (x2 - x0);
        let (c0, c1, c2) = if i >= 1 {
            (f1, d01 + dd * (x1 - x0), dd)
        } else {
            (f0, d01 - dd * (x1 - x0), dd)
        };
        let big_a = y - s_l;
        let big_b = y - s_r;
        let d1 = pow_diff(big_a, big_b, p) / p;
        let d2 = pow_diff(big_a, big_b, p + 1.0) / (p + 1.0);
        let d3 = pow_diff(big_a, big_b, p + 2.0) / (p + 2.0);
        let m1 = big_a * d1 - d2;
        let m2 = big_a * big_a * d1 - 2.0 * big_a * d2 + d3;
        acc += c0 * d1 + c1 * m1 + c2 * m2;
    }
    Ok(acc * recip_gamma(p))
}

/// Riemann-Liouville derivative: n-th finite difference of the running
/// fractional integral `D^(nu - n)`, on a step tied to the local grid.
pub fn rl_derivative(f: &SampledFunction, order: FracOrder, y: f64) -> Result<f64> {
    f.check_range(y)?;
    let (nu, n) = (order.nu, order.n);
    let frac = nu - n as f64; // in [-1, 0)
    let i = f.segment_of(y);
    let h_local = f.nodes[i + 1] - f.nodes[i];
    let span = f.upper() - f.a();
    let h = if n == 2 {
        // Balance the h^2 stencil truncation against the inner quadrature
        // error divided by h^2.
        (h_local.max(1e-14 * span).powf(0.75) * span.powf(0.25)).max(h_local)
    } else {
        h_local.max(1e-9 * span)
    };
    let upper = f.upper();
    let lower = f.a();
    let g = |t: f64| -> Result<f64> {
        if frac == 0.0 {
            Ok(f.interp(t))
        } else {
            rl_integral_pq(f, frac, t)
        }
    };
    let d = |h: f64| -> Result<f64> {
        match n {
            1 => {
                if y + h <= upper && y - h >= lower {
                    Ok((g(y + h)? - g(y - h)?) / (2.0 * h))
                } else if y + 2.0 * h <= upper {
                    Ok((-3.0 * g(y)? + 4.0 * g(y + h)? - g(y + 2.0 * h)?) / (2.0 * h))
                } else if y - 2.0 * h >= lower {
                    Ok((3.0 * g(y)? - 4.0 * g(y - h)? + g(y - 2.0 * h)?) / (2.0 * h))
                } else {
                    Err(Error::Grid("grid too short for derivative stencil".into()))
                }
            }
            2 => {
                if y + h <= upper && y - h >= lower {
                    Ok((g(y + h)? - 2.0 * g(y)? + g(y - h)?) / (h * h))
                } else if y + 3.0 * h <= upper {
                    Ok((2.0 * g(y)? - 5.0 * g(y + h)? + 4.0 * g(y + 2.0 * h)?
                        - g(y + 3.0 * h)?)
                        / (h * h))
                } else if y - 3.0 * h >= lower {
                    Ok((2.0 * g(y)? - 5.0 * g(y - h)? + 4.0 * g(y - 2.0 * h)?
                        - g(y - 3.0 * h)?)
                        / (h * h))
                } else {
                    Err(Error::Grid("grid too short for derivative stencil".into()))
                }
            }
            _ => Err(Error::InvalidParam(format!(
                "rl_derivative supports n in {{1, 2}}, got n = {n}"
            ))),
        }
    };
    let value = d(h)?;
    // Coarse truncation estimate from a doubled step; warn only.
    if let Ok(coarse) = d(2.0 * h) {
        let est = (value - coarse).abs() / 3.0;
        if est > 0.05 * value.abs().max(1e-6) {
            log::warn!(
                "rl_derivative truncation estimate {est:.2e} is large at y = {y} \
                 (value {value:.4e}); grid may be too coarse"
            );
        }
    }
    Ok(value)
}

/// Caputo derivative via Taylor-head subtraction: `D^nu [f - T]` where T
/// is the degree n-1 Taylor polynomial of f at the left endpoint.
pub fn caputo_derivative(f: &SampledFunction, order: FracOrder, y: f64) -> Result<f64> {
    let n = order.n;
    let a = f.a();
    let mut head = vec![0.0; n];
    match f.derivs_at_a() {
        Some(d) if d.len() >= n => head.copy_from_slice(&d[..n]),
        Some(_) | None => {
            head[0] = f.values[0];
            if n >= 2 {
                if f.nodes.len() < 3 {
                    return Err(Error::MissingData(
                        "caputo needs derivs_at_a or >= 3 nodes to estimate f'(a)".into(),
                    ));
                }
                // One-sided three-point estimate of f'(a)
                let (x0, x1, x2) = (f.nodes[0], f.nodes[1], f.nodes[2]);
                let (f0, f1, f2) = (f.values[0], f.values[1], f.values[2]);
                let d01 = (f1 - f0) / (x1 - x0);
                let d12 = (f2 - f1) / (x2 - x1);
                head[1] = d01 - (d12 - d01) / (x2 - x0) * (x1 - x0);
            }
        }
    }
    let shifted: Vec<f64> = f
        .nodes
        .iter()
        .zip(&f.values)
        .map(|(&s, &v)| {
            let mut t = 0.0;
            let mut pw = 1.0;
            for (k, &hk) in head.iter().enumerate() {
                if k > 0 {
                    pw *= (s - a) / k as f64;
                }
                t += hk * pw;
            }
            v - t
        })
        .collect();
    let g = SampledFunction::new(f.nodes.clone(), shifted, Some(vec![0.0; n]))?;
    rl_derivative(&g, order, y)
}

/// Apply `D^order` of any sign: integral, identity, or derivative.
pub fn rl_apply(f: &SampledFunction, order: f64, y: f64) -> Result<f64> {
    if order < 0.0 {
        rl_integral(f, order, y)
    } else if order == 0.0 {
        f.check_range(y)?;
        Ok(f.interp(y))
    } else {
        rl_derivative(f, FracOrder::new(order)?, y)
    }
}

/// Closed-form `D^alpha |y - a|^(mu - 1) = Gamma(mu)/Gamma(mu - alpha)
/// |y - a|^(mu - alpha - 1)`, with reciprocal-gamma zeros at the poles.
pub fn power_rule(mu: f64, alpha: f64, y: f64, a: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParam(format!(
            "power rule needs mu > 0, got {mu}"
        )));
    }
    let r = recip_gamma(mu - alpha);
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma(mu) * r * (y - a).abs().powf(mu - alpha - 1.0))
}

/// Singular integral operator
/// `S g (xi) = (1/pi) int_s^y g(tau)/(tau - xi) ((tau - s)/(s - xi))^delta dtau`
/// for `xi < s < y`, with a closed-form endpoint weight at `tau = s`.
pub fn s_operator(delta: f64, s: f64, y: f64, g: &SampledFunction, xi: f64) -> Result<f64> {
    if !(delta > -1.0) {
        return Err(Error::InvalidParam(format!(
            "s_operator needs delta > -1, got {delta}"
        )));
    }
    if !(xi < s && s < y) {
        return Err(Error::Domain(format!(
            "s_operator needs xi < s < y, got xi = {xi}, s = {s}, y = {y}"
        )));
    }
    let tol = 1e-10 * (y - s).max(1.0);
    if (g.a() - s).abs() > tol || (g.upper() - y).abs() > tol {
        return Err(Error::Grid(format!(
            "sample must cover [{s}, {y}], covers [{}, {}]",
            g.a(),
            g.upper()
        )));
    }
    // psi(tau) = g(tau)/(tau - xi) sampled on the nodes; integrate
    // psi_PL (tau - s)^delta exactly per segment.
    let psi: Vec<f64> = g
        .nodes
        .iter()
        .zip(&g.values)
        .map(|(&t, &v)| v / (t - xi))
        .collect();
    let mut acc = 0.0;
    for i in 0..g.nodes.len() - 1 {
        let (t_l, t_r) = (g.nodes[i], g.nodes[i + 1]);
        let (u_l, u_r) = (t_l - s, t_r - s);
        let c0 = psi[i];
        let c1 = (psi[i + 1] - psi[i]) / (t_r - t_l);
        let p1 = pow_diff(u_r, u_l, delta + 1.0) / (delta + 1.0);
        let p2 = pow_diff(u_r, u_l, delta + 2.0) / (delta + 2.0);
        acc += c0 * p1 + c1 * (p2 - u_l * p1);
    }
    Ok(acc * (s - xi).powf(-delta) / std::f64::consts::PI)
}

/// S-operator for a callable `g(tau) = g_smooth(tau) (y - tau)^upper_exp`
/// whose upper-endpoint singularity a sample cannot carry.
pub fn s_operator_fn<F: Fn(f64) -> f64>(
    delta: f64,
    s: f64,
    y: f64,
    g_smooth: F,
    upper_exp: f64,
    xi: f64,
) -> Result<f64> {
    if !(xi < s && s < y) {
        return Err(Error::Domain(format!(
            "s_operator_fn needs xi < s < y, got xi = {xi}, s = {s}, y = {y}"
        )));
    }
    let v = weakly_singular(|tau| g_smooth(tau) / (tau - xi), s, y, delta, upper_exp);
    Ok(v * (s - xi).powf(-delta) / std::f64::consts::PI)
}

/// Residual of the fractional Newton-Leibniz composition rule
/// `D^delta D^nu f = D^(delta+nu) f - sum_k |y-a|^(-delta-k)/Gamma(1-delta-k)
/// lim_{t->a} D^(nu-k) f(t)`.
pub fn check_newton_leibniz(f: &SampledFunction, delta: f64, nu: f64, y: f64) -> Result<f64> {
    let order = FracOrder::new(nu)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let a = f.a();
    // Inner derivative sampled on the native grid.
    let inner: Result<Vec<f64>> = f
        .nodes
        .iter()
        .map(|&t| {
            if t <= a {
                rl_derivative(f, order, f.nodes[1])
            } else {
                rl_derivative(f, order, t)
            }
        })
        .collect();
    let g = SampledFunction::new(f.nodes.clone(), inner?, None)?;
    let lhs = rl_apply(&g, delta, y)?;

    let mut rhs = rl_apply(f, delta + nu, y)?;
    for k in 1..=order.n {
        let coef = (y - a).powf(-delta - k as f64) * recip_gamma(1.0 - delta - k as f64);
        if coef == 0.0 {
            continue;
        }
        // Estimate lim_{t->a} D^(nu-k) f by geometric extrapolation from
        // three small offsets.
        let mut vals = Vec::new();
        for j in [8usize, 4, 2] {
            let idx = j.min(f.nodes.len() - 1);
            vals.push(rl_apply(f, nu - k as f64, f.nodes[idx])?);
        }
        let lim = crate::quadrature::geometric_extrapolate(&vals);
        rhs -= coef * lim;
    }
    Ok((lhs - rhs).abs())
}

/// Right-sided kernel `v(y; eta)` together with its anchored-at-`y`
/// Riemann-Liouville derivatives, supplied in closed form.
///
/// The Green-formula check needs `D^order_{y eta} v` for kernels that
/// blow up at `eta = y`; samples cannot represent that, so the kernel
/// carries its own derivative rule.
pub trait VKernel {
    fn eval(&self, eta: f64) -> f64;
    /// `D^order_{y eta} v(y; eta)`.
    fn rl_right(&self, order: f64, eta: f64) -> f64;
    /// Exponent p such that v behaves like `(y - eta)^(p-1)` near eta = y.
    fn singular_exponent(&self) -> f64;
}

/// `v(y; eta) = (y - eta)^(p - 1)`.
pub struct PowerVKernel {
    pub y: f64,
    pub p: f64,
}

impl VKernel for PowerVKernel {
    fn eval(&self, eta: f64) -> f64 {
        (self.y - eta).powf(self.p - 1.0)
    }

    fn rl_right(&self, order: f64, eta: f64) -> f64 {
        // Right-sided power rule (the |y - a| form of the left-sided one)
        gamma(self.p) * recip_gamma(self.p - order) * (self.y - eta).powf(self.p - order - 1.0)
    }

    fn singular_exponent(&self) -> f64 {
        self.p
    }
}

/// Both sides of the Caputo Green formula on `[0, y - eps]`.
#[derive(Clone, Copy, Debug)]
pub struct GreenFormulaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub correction: f64,
    pub residual: f64,
}

/// Assemble the fractional Green formula
///
/// ```text
/// int_0^ye (v du^a - u D^a v) deta =
///     sum_k u^(k-1)(ye) D^(a-k) v|_ye - sum_k u^(k-1)(0) D^(a-k) v|_0
///     + sin(pi (a - n)) int_0^ye du^a S^(n-a) v deta
/// ```
///
/// and return the mismatch. The correction integral is evaluated through
/// the reduction of `D^(a-n) S^(n-a)` to an explicit weakly singular
/// integral, after moving the Caputo derivative onto `u^(n)` by
/// fractional integration by parts.
pub fn check_green_formula_caputo(
    u: &SampledFunction,
    v: &dyn VKernel,
    alpha: f64,
    eps: f64,
    y: f64,
) -> Result<GreenFormulaReport> {
    let order = FracOrder::new(alpha)?;
    let n = order.n;
    if !(eps > 0.0 && eps < y) {
        return Err(Error::InvalidParam(format!(
            "need 0 < eps < y, got eps = {eps}, y = {y}"
        )));
    }
    let ye = y - eps;
    if u.a().abs() > 1e-12 || u.upper() < ye - 1e-12 {
        return Err(Error::Grid(format!(
            "u must be sampled on [0, >= {ye}], covers [{}, {}]",
            u.a(),
            u.upper()
        )));
    }
    let gamma_n = sin_pi(alpha - n as f64);
    let rule = GaussRule::get(16);

    // LHS, graded into both endpoints: D^a v is steep near ye and the
    // Caputo kernel is singular at 0.
    let mut panels = graded_panels(0.0, ye * 0.5, false, 0.5, 20, 2);
    panels.extend(graded_panels(ye * 0.5, ye, true, 0.5, 24, 2));
    let mut lhs = 0.0;
    for &(pa, pb) in &panels {
        lhs += rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| {
                let eta = 0.5 * (pa + pb) + 0.5 * (pb - pa) * t;
                let du = caputo_derivative(u, order, eta).unwrap_or(f64::NAN);
                w * (v.eval(eta) * du - u.interp(eta) * v.rl_right(alpha, eta))
            })
            .sum::<f64>()
            * 0.5
            * (pb - pa);
    }
    if !lhs.is_finite() {
        return Err(Error::Quadrature {
            term: "green-formula-lhs",
            detail: "non-finite quadrature".into(),
        });
    }

    // Boundary sums with the D^(a-k) traces.
    let mut rhs = 0.0;
    for k in 1..=n {
        let u_trace_ye = if k == 1 {
            u.interp(ye)
        } else {
            u.derivative_at(ye, k - 1)?
        };
        let u_trace_0 = match u.derivs_at_a() {
            Some(d) if d.len() >= k => d[k - 1],
            _ => {
                if k == 1 {
                    u.values()[0]
                } else {
                    u.derivative_at(u.a(), k - 1)?
                }
            }
        };
        rhs += u_trace_ye * v.rl_right(alpha - k as f64, ye);
        rhs -= u_trace_0 * v.rl_right(alpha - k as f64, 0.0);
    }

    // Correction term.
    let mut correction = 0.0;
    if gamma_n != 0.0 {
        let coef = gamma(alpha - n as f64 + 1.0) / std::f64::consts::PI;
        let p_exp = v.singular_exponent();
        let kernel_at = |eta: f64| -> f64 {
            coef * weakly_singular(
                |tau| (tau - eta).powf(n as f64 - alpha - 1.0),
                ye,
                y,
                0.0,
                p_exp - 1.0,
            )
        };
        let panels = graded_panels(0.0, ye, true, 0.5, 20, 6);
        correction = integrate_panels(&panels, rule, |eta| {
            let un = u.derivative_at(eta, n).unwrap_or(f64::NAN);
            un * kernel_at(eta)
        });
        correction *= gamma_n;
    }

    let rhs_total = rhs + correction;
    Ok(GreenFormulaReport {
        lhs,
        rhs: rhs_total,
        correction,
        residual: (lhs - rhs_total).abs(),
    })
}

/// Residual of the reduction
/// `D^(a-k)_{ye eta} S^(n-a)_{ye y} g = (-1)^(n-k) Gamma(a-k+1)/pi
///  int_ye^y g(tau) (tau - eta)^(k-1-a) dtau`
/// for the power family `g = (y - tau)^(q-1)`, at one probe point.
///
/// The left side runs through the grid operators applied to the sampled
/// S-transform (with its endpoint singularity peeled off in closed
/// form); the right side is the explicit integral.
pub fn mam331_residual(alpha: f64, k: usize, q: f64, y: f64, eps: f64, eta: f64) -> Result<f64> {
    let order = FracOrder::new(alpha)?;
    let n = order.n;
    if k > n {
        return Err(Error::InvalidParam(format!("need k <= n, got k = {k}")));
    }
    let ye = y - eps;
    if !(eta < ye && eta >= 0.0) {
        return Err(Error::Domain(format!(
            "need 0 <= eta < ye, got eta = {eta}, ye = {ye}"
        )));
    }
    let na = n as f64 - alpha;

    // Singular-head coefficient: S g (eta) ~ C (ye - eta)^(alpha - n),
    // C = (1/pi) int_ye^y g(tau) (tau - ye)^(n - alpha - 1) dtau.
    let c_head = weakly_singular(|tau| (tau - ye).powf(na - 1.0), ye, y, 0.0, q - 1.0)
        / std::f64::consts::PI;

    // Sample the regular remainder on a grid clustered toward ye.
    let m = 1600;
    let mut nodes = Vec::with_capacity(m + 1);
    let mut vals = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let t = ye * (i as f64 / m as f64).powf(1.6);
        let s_val = if t == 0.0 {
            0.0
        } else {
            s_operator_fn(na, ye, y, |_| 1.0, q - 1.0, ye - t)? - c_head * t.powf(alpha - n as f64)
        };
        nodes.push(t);
        vals.push(s_val);
    }
    let reg = SampledFunction::new(nodes, vals, None)?;

    let t_probe = ye - eta;
    let lhs_reg = rl_apply(&reg, alpha - k as f64, t_probe)?;
    // Head term in closed form:
    // D^(a-k) t^(a-n) = Gamma(a-n+1)/Gamma(k-n+1) t^(k-n)
    let head = c_head
        * gamma(alpha - n as f64 + 1.0)
        * recip_gamma(k as f64 - n as f64 + 1.0)
        * t_probe.powf(k as f64 - n as f64);
    let lhs = lhs_reg + head;

    let sign = if (n - k) % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = sign * gamma(alpha - k as f64 + 1.0) / std::f64::consts::PI
        * weakly_singular(
            |tau| (tau - eta).powf(k as f64 - 1.0 - alpha),
            ye,
            y,
            0.0,
            q - 1.0,
        );
    Ok((lhs - rhs).abs())
}

/// Uniform grid on [a, b] with m+1 nodes.
pub fn uniform_grid(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect()
}

/// Grid clustered toward `a` with exponent `power` (1 is uniform).
pub fn graded_grid(a: f64, b: f64, m: usize, power: f64) -> Vec<f64> {
    (0..=m)
        .map(|i| a + (b - a) * (i as f64 / m as f64).powf(power))
        .collect()
}
