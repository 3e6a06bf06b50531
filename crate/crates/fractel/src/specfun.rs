//! Special functions of the fundamental solution: the Wright function
//! `phi(delta, mu; z)`, the confluent hypergeometric limit function
//! `0F1(nu; z)`, and the composed kernels `h0` and `g` together with
//! their tau- and x-derivatives.
//!
//! The Wright series alternates for z < 0 and cancels down to far below
//! the largest term, so terms are formed in log space with double-double
//! arithmetic ([`crate::dd`]) and summed in double-double. A hard cap of
//! 400 terms plus a cancellation estimate turns unreachable accuracy into
//! a `NonConvergent` error instead of silent noise.

use crate::dd::{self, Dd};
use crate::{Error, Result};
use std::sync::OnceLock;

/// Hard cap on Wright series terms.
pub const WRIGHT_TERM_CAP: usize = 400;

/// Arguments of the Wright function `phi(delta, mu; z)`.
#[derive(Clone, Copy, Debug)]
pub struct WrightArg {
    pub delta: f64,
    pub mu: f64,
    pub z: f64,
}

impl WrightArg {
    /// delta is restricted to (-1, 0]: the series converges for every z
    /// there and that is the only range the kernels use.
    pub fn new(delta: f64, mu: f64, z: f64) -> Result<Self> {
        if !(delta > -1.0 && delta <= 0.0) {
            return Err(Error::InvalidParam(format!(
                "wright delta must lie in (-1, 0], got {delta}"
            )));
        }
        if !mu.is_finite() || !z.is_finite() {
            return Err(Error::InvalidParam("wright mu and z must be finite".into()));
        }
        Ok(WrightArg { delta, mu, z })
    }
}

/// Kernel constants `b1 = -b/2`, `a = b1^2 - c` and the order `beta`.
#[derive(Clone, Copy, Debug)]
pub struct KernelParams {
    b1: f64,
    a: f64,
    beta: f64,
}

impl KernelParams {
    pub fn new(b: f64, c: f64, beta: f64) -> KernelParams {
        assert!(beta > 0.0 && beta < 1.0, "beta must lie in (0,1)");
        let b1 = -b / 2.0;
        KernelParams {
            b1,
            a: b1 * b1 - c,
            beta,
        }
    }

    /// Construct from the derived constants, asserting consistency with
    /// the generating (b, c) pair.
    pub fn from_parts(b1: f64, a: f64, beta: f64, b: f64, c: f64) -> KernelParams {
        assert!((b1 - (-b / 2.0)).abs() <= 1e-12 * (1.0 + b.abs()));
        assert!((a - (b1 * b1 - c)).abs() <= 1e-12 * (1.0 + c.abs() + b1 * b1));
        assert!(beta > 0.0 && beta < 1.0);
        KernelParams { b1, a, beta }
    }

    #[inline]
    pub fn b1(&self) -> f64 {
        self.b1
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

fn ln_factorials() -> &'static Vec<Dd> {
    static LF: OnceLock<Vec<Dd>> = OnceLock::new();
    LF.get_or_init(|| dd::ln_factorials(WRIGHT_TERM_CAP + 1))
}

/// Wright series with a full error report, used by the table builder.
///
/// Returns `(value, noise)` where `noise` estimates the absolute error
/// left after double-double cancellation.
pub(crate) fn wright_phi_dd(delta: f64, mu: f64, z: f64) -> Result<(f64, f64)> {
    if z == 0.0 {
        return Ok((dd::recip_gamma(mu).to_f64(), 0.0));
    }
    let lf = ln_factorials();
    let ln_abs_z = Dd::from_f64(z.abs()).ln();
    let neg = z < 0.0;
    let mut sum = Dd::ZERO;
    let mut max_ln = f64::NEG_INFINITY;
    let mut small_run = 0usize;
    let mut k = 0usize;
    while k <= WRIGHT_TERM_CAP {
        // The gamma argument delta*k + mu is carried in double-double:
        // rounding it to f64 would poison the largest terms at the
        // 1e-13 level for non-representable delta.
        let q = Dd::mul_exact(delta, k as f64).add_f64(mu);
        let (ln_g, sign_g) = dd::ln_abs_gamma_dd(q);
        if sign_g != 0 {
            let ln_term = ln_abs_z.mul_f64(k as f64).sub(lf[k]).sub(ln_g);
            let lt = ln_term.hi;
            if lt > 700.0 {
                return Err(Error::NonConvergent(format!(
                    "wright term overflow at k = {k} (delta {delta}, mu {mu}, z {z})"
                )));
            }
            max_ln = max_ln.max(lt);
            let mut term = ln_term.exp();
            let mut s = sign_g as f64;
            if neg && k % 2 == 1 {
                s = -s;
            }
            if s < 0.0 {
                term = term.neg();
            }
            sum = sum.add(term);
            // Terms decay super-exponentially past the peak; four
            // consecutive negligible (non-pole) terms end the sum.
            if lt < (max_ln - 80.0).min(-40.0) {
                small_run += 1;
                if small_run >= 4 {
                    break;
                }
            } else {
                small_run = 0;
            }
        }
        k += 1;
    }
    if k > WRIGHT_TERM_CAP {
        return Err(Error::NonConvergent(format!(
            "wright series hit the {WRIGHT_TERM_CAP}-term cap (delta {delta}, mu {mu}, z {z})"
        )));
    }
    let noise = max_ln.exp() * 1e-31 * (k as f64).sqrt().max(1.0);
    Ok((sum.to_f64(), noise))
}

/// Wright function `phi(delta, mu; z) = sum_k z^k / (k! Gamma(delta k + mu))`.
///
/// Terms whose gamma argument is a non-positive integer contribute exactly
/// zero. The result satisfies an absolute-or-relative error bound of `tol`;
/// if the cancellation estimate cannot certify that, the call fails with
/// `NonConvergent`.
pub fn wright_phi(arg: WrightArg, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParam("wright tol must be positive".into()));
    }
    let (value, noise) = wright_phi_dd(arg.delta, arg.mu, arg.z)?;
    if noise > tol && noise > tol * value.abs() {
        return Err(Error::NonConvergent(format!(
            "wright cancellation noise {noise:.3e} exceeds tol {tol:.3e} \
             (delta {}, mu {}, z {})",
            arg.delta, arg.mu, arg.z
        )));
    }
    Ok(value)
}

const HYP_F64_NEG_LIMIT: f64 = -225.0;
const HYP_TOL: f64 = 1e-15;

/// Confluent hypergeometric limit function `0F1(nu; z)`.
///
/// For `nu = 1` this reduces to `I0(2 sqrt(z))` for z >= 0 and
/// `J0(2 sqrt(-z))` for z < 0.
pub fn hyp0f1(nu: f64, z: f64) -> Result<f64> {
    if nu <= 0.0 && nu == nu.round() {
        return Err(Error::InvalidParam(format!(
            "0F1 pole: nu = {nu} is a non-positive integer"
        )));
    }
    if z >= HYP_F64_NEG_LIMIT {
        // Plain f64 recurrence; no harmful cancellation this side.
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut comp = 0.0f64; // Kahan correction
        for j in 0..3000 {
            let jf = j as f64;
            term *= z / ((jf + 1.0) * (jf + nu));
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            if term.abs() < HYP_TOL * sum.abs().max(1e-30) && j > 2 {
                return Ok(sum);
            }
        }
        Err(Error::NonConvergent(format!("0F1({nu}; {z}) series stalled")))
    } else {
        // Deep oscillatory region: double-double recurrence.
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        let mut max_abs = 1.0f64;
        for j in 0..6000 {
            let jf = j as f64;
            let den = Dd::from_f64(jf + 1.0).mul(Dd::new(jf, 0.0).add_f64(nu));
            term = term.mul_f64(z).div(den);
            sum = sum.add(term);
            max_abs = max_abs.max(term.hi.abs());
            if term.hi.abs() < 1e-20 * sum.hi.abs().max(1e-30) && j > 4 {
                let noise = max_abs * 1e-31;
                if noise > 1e-13 * sum.to_f64().abs().max(1e-10) {
                    return Err(Error::NonConvergent(format!(
                        "0F1({nu}; {z}) cancellation beyond working precision"
                    )));
                }
                return Ok(sum.to_f64());
            }
        }
        Err(Error::NonConvergent(format!("0F1({nu}; {z}) series stalled")))
    }
}

/// Derivative basis `B_p(w) = d^p/dw^p 0F1(1; w) = 0F1(p+1; w) / p!`
/// evaluated for p = 0..=pmax.
fn b_basis(w: f64, pmax: u32) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(pmax as usize + 1);
    let mut fact = 1.0f64;
    for p in 0..=pmax {
        if p > 0 {
            fact *= p as f64;
        }
        out.push(hyp0f1(p as f64 + 1.0, w)? / fact);
    }
    Ok(out)
}

/// One monomial-times-basis term `c * x^i * tau^l * B_p(w)`,
/// `w = a (tau^2 - x^2) / 4`.
#[derive(Clone, Copy, Debug)]
struct HTerm {
    c: f64,
    i: u32,
    l: u32,
    p: u32,
}

/// Symbolic form of `d^m/dx^m L1^k h0(x, tau)` where
/// `h0 = 0F1(1; a (tau^2 - x^2) / 4)` and `L1 = d/dtau + b1`.
///
/// Differentiation acts on the term list exactly; evaluation sums the
/// monomials against the `B_p` basis. The quarter in the argument of
/// `h0` is what makes `L1^2 + b L1 - dxx + c` annihilate it.
#[derive(Clone, Debug)]
pub struct H0Operator {
    terms: Vec<HTerm>,
    pmax: u32,
    a: f64,
    b1: f64,
}

impl H0Operator {
    /// Build the operator for given x-derivative order `m` and `L1` power `k`.
    pub fn new(kp: &KernelParams, m: u32, k: u32) -> H0Operator {
        let mut op = H0Operator {
            terms: vec![HTerm {
                c: 1.0,
                i: 0,
                l: 0,
                p: 0,
            }],
            pmax: 0,
            a: kp.a(),
            b1: kp.b1(),
        };
        for _ in 0..k {
            op = op.l1();
        }
        for _ in 0..m {
            op = op.dx();
        }
        op
    }

    fn merged(mut terms: Vec<HTerm>, a: f64, b1: f64) -> H0Operator {
        terms.sort_by_key(|t| (t.i, t.l, t.p));
        let mut out: Vec<HTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            if t.c == 0.0 {
                continue;
            }
            if let Some(last) = out.last_mut() {
                if last.i == t.i && last.l == t.l && last.p == t.p {
                    last.c += t.c;
                    continue;
                }
            }
            out.push(t);
        }
        out.retain(|t| t.c != 0.0);
        let pmax = out.iter().map(|t| t.p).max().unwrap_or(0);
        H0Operator {
            terms: out,
            pmax,
            a,
            b1,
        }
    }

    /// d/dtau of the represented function.
    pub fn dtau(&self) -> H0Operator {
        let mut next = Vec::with_capacity(self.terms.len() * 2);
        for t in &self.terms {
            if t.l > 0 {
                next.push(HTerm {
                    c: t.c * t.l as f64,
                    i: t.i,
                    l: t.l - 1,
                    p: t.p,
                });
            }
            next.push(HTerm {
                c: t.c * self.a * 0.5,
                i: t.i,
                l: t.l + 1,
                p: t.p + 1,
            });
        }
        H0Operator::merged(next, self.a, self.b1)
    }

    /// d/dx of the represented function.
    pub fn dx(&self) -> H0Operator {
        let mut next = Vec::with_capacity(self.terms.len() * 2);
        for t in &self.terms {
            if t.i > 0 {
                next.push(HTerm {
                    c: t.c * t.i as f64,
                    i: t.i - 1,
                    l: t.l,
                    p: t.p,
                });
            }
            next.push(HTerm {
                c: -t.c * self.a * 0.5,
                i: t.i + 1,
                l: t.l,
                p: t.p + 1,
            });
        }
        H0Operator::merged(next, self.a, self.b1)
    }

    /// `L1 = d/dtau + b1` applied once.
    pub fn l1(&self) -> H0Operator {
        let mut next = self.dtau().terms;
        for t in &self.terms {
            next.push(HTerm {
                c: t.c * self.b1,
                ..*t
            });
        }
        H0Operator::merged(next, self.a, self.b1)
    }

    /// Evaluate at (x, tau); requires tau >= |x| only for the caller's
    /// domain semantics, the expression itself is entire.
    pub fn eval(&self, x: f64, tau: f64) -> Result<f64> {
        let w = self.a * 0.25 * (tau * tau - x * x);
        let basis = b_basis(w, self.pmax)?;
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.c * x.powi(t.i as i32) * tau.powi(t.l as i32) * basis[t.p as usize];
        }
        Ok(acc)
    }

    /// Evaluate on the diagonal tau = |x|, where w = 0 and B_p(0) = 1/p!.
    pub fn eval_diag(&self, x: f64) -> f64 {
        let ax = x.abs();
        let mut acc = 0.0;
        for t in &self.terms {
            let mut fact = 1.0;
            for q in 1..=t.p {
                fact *= q as f64;
            }
            acc += t.c * x.powi(t.i as i32) * ax.powi(t.l as i32) / fact;
        }
        acc
    }
}

/// `d^m/dx^m L1^k h0(x, tau)` with `h0(x, tau) = 0F1(1; a (tau^2 - x^2)/4)`.
///
/// Errors with `Domain` when `tau < |x|`.
pub fn kernel_h0(x: f64, tau: f64, kp: &KernelParams, m: u32, k: u32) -> Result<f64> {
    if tau < x.abs() {
        return Err(Error::Domain(format!(
            "kernel_h0 requires tau >= |x|, got tau = {tau}, x = {x}"
        )));
    }
    if m > 2 {
        return Err(Error::InvalidParam(format!(
            "kernel_h0 supports m in 0..=2, got {m}"
        )));
    }
    if k > 8 {
        return Err(Error::InvalidParam(format!(
            "kernel_h0 supports k in 0..=8, got {k}"
        )));
    }
    H0Operator::new(kp, m, k).eval(x, tau)
}

/// Riemann-Liouville derivative of the subordination kernel in y:
/// `D^nu_{0y} g(y, tau) = e^{b1 tau} y^{-nu-1} phi(-beta, -nu; -tau y^-beta)`,
/// where `g(y, tau) = e^{b1 tau} y^{-1} phi(-beta, 0; -tau y^-beta)`.
///
/// `nu = 0` reproduces `g` itself.
pub fn kernel_g_dnu(y: f64, tau: f64, nu: f64, kp: &KernelParams) -> Result<f64> {
    if y <= 0.0 {
        return Err(Error::Domain(format!("kernel_g_dnu requires y > 0, got {y}")));
    }
    if tau < 0.0 {
        return Err(Error::Domain(format!(
            "kernel_g_dnu requires tau >= 0, got {tau}"
        )));
    }
    let beta = kp.beta();
    let s = tau * y.powf(-beta);
    let phi = wright_phi(WrightArg::new(-beta, -nu, -s)?, 1e-12)?;
    Ok((kp.b1() * tau).exp() * y.powf(-nu - 1.0) * phi)
}

/// Chebyshev table of `s -> phi(-beta, mu; -s)` on `[0, s_max]`.
///
/// `s_max` is chosen so the dropped tail sits below the requested floor
/// (or where the term cap stops the series, whichever comes first), and
/// the stored suffix envelope supports truncation decisions downstream.
#[derive(Clone, Debug)]
pub struct WrightTable {
    beta: f64,
    mu: f64,
    s_max: f64,
    coeffs: Vec<f64>,
    env_step: f64,
    env: Vec<f64>,
    max_abs: f64,
}

impl WrightTable {
    pub fn build(beta: f64, mu: f64, floor: f64) -> Result<WrightTable> {
        assert!(beta > 0.0 && beta < 1.0);
        let floor = floor.max(1e-16);
        // Scan outward for the cutoff. Values below the cancellation noise
        // estimate are numerically zero; once the noise floor itself rises
        // above the target floor the cutoff cannot move further out.
        let step = 0.25;
        let mut scale = 0.0f64;
        let mut last_needed = 0.0f64;
        let mut s = 0.0;
        let mut s_hard = f64::INFINITY;
        while s <= 400.0 {
            match wright_phi_dd(-beta, mu, -s) {
                Ok((v, noise)) => {
                    if v.abs() > 4.0 * noise {
                        scale = scale.max(v.abs());
                        if v.abs() > floor * scale.max(1e-6) {
                            last_needed = s;
                        }
                    }
                    if noise > 0.25 * floor * scale.max(1e-6) && s > 2.0 {
                        s_hard = s;
                        break;
                    }
                }
                Err(_) => {
                    // Term cap reached: freeze the cutoff here.
                    s_hard = s - step;
                    break;
                }
            }
            if s > last_needed + 3.0 && s > 4.0 {
                break;
            }
            s += step;
        }
        let s_max = (last_needed + 2.0).min(s_hard).max(2.0);

        // Chebyshev fit, doubling until the midpoint check passes.
        let mut n = 128usize;
        loop {
            let coeffs = Self::fit(beta, mu, s_max, n)?;
            let table = WrightTable {
                beta,
                mu,
                s_max,
                coeffs,
                env_step: 0.0,
                env: Vec::new(),
                max_abs: scale,
            };
            let mut max_err = 0.0f64;
            let checks = 3 * n + 1;
            for i in 0..=checks {
                let sv = s_max * i as f64 / checks as f64;
                let (want, noise) = wright_phi_dd(-beta, mu, -sv)?;
                let err = ((table.eval(sv) - want).abs() - 4.0 * noise).max(0.0);
                max_err = max_err.max(err);
            }
            if max_err <= 3e-14 * scale.max(1e-3) || n >= 2048 {
                if max_err > 1e-10 * scale.max(1e-3) {
                    return Err(Error::Truncation(format!(
                        "wright table for beta {beta}, mu {mu} stuck at err {max_err:.3e}"
                    )));
                }
                return Ok(table.with_envelope());
            }
            n *= 2;
        }
    }

    fn fit(beta: f64, mu: f64, s_max: f64, n: usize) -> Result<Vec<f64>> {
        let mut vals = Vec::with_capacity(n);
        for j in 0..n {
            let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
            let s = 0.5 * s_max * (1.0 + theta.cos());
            let (v, noise) = wright_phi_dd(-beta, mu, -s)?;
            // Below the noise estimate the value is numerically zero.
            vals.push(if v.abs() > 4.0 * noise { v } else { 0.0 });
        }
        let mut coeffs = vec![0.0f64; n];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in vals.iter().enumerate() {
                let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
                acc += v * (k as f64 * theta).cos();
            }
            *ck = acc * 2.0 / n as f64;
        }
        coeffs[0] *= 0.5;
        // Drop the negligible high tail to shorten Clenshaw loops.
        let cutoff = 1e-16 * vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
        let mut keep = coeffs.len();
        while keep > 8 && coeffs[keep - 1].abs() < cutoff && coeffs[keep - 2].abs() < cutoff {
            keep -= 1;
        }
        coeffs.truncate(keep);
        Ok(coeffs)
    }

    fn with_envelope(mut self) -> WrightTable {
        let n = 512;
        let step = self.s_max / n as f64;
        let mut vals: Vec<f64> = (0..=n)
            .map(|i| self.eval(i as f64 * step).abs())
            .collect();
        for i in (0..n).rev() {
            vals[i] = vals[i].max(vals[i + 1]);
        }
        self.env_step = step;
        self.env = vals;
        self
    }

    /// phi(-beta, mu; -s); zero beyond the cutoff.
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        if s > self.s_max {
            return 0.0;
        }
        // Clenshaw on t in [-1, 1], s = s_max (1 + t)/2
        let t = 2.0 * s / self.s_max - 1.0;
        let t2 = 2.0 * t;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().rev() {
            let tmp = b1;
            b1 = t2 * b1 - b2 + c;
            b2 = tmp;
        }
        b1 - t * b2
    }

    /// Upper bound on |phi| over [s, infinity).
    pub fn envelope(&self, s: f64) -> f64 {
        if self.env.is_empty() {
            return self.max_abs;
        }
        if s >= self.s_max {
            return 0.0;
        }
        let i = (s / self.env_step) as usize;
        self.env[i.min(self.env.len() - 1)]
    }

    #[inline]
    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    #[inline]
    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gammafn;
    use crate::quadrature::adaptive;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn wright_trivial_values() {
        // Only the k = 0 term survives at z = 0
        let v = wright_phi(WrightArg::new(-0.5, 1.0, 0.0).unwrap(), 1e-12).unwrap();
        assert_eq!(v, 1.0);
        // 1/Gamma(0) = 0
        let v = wright_phi(WrightArg::new(-0.5, 0.0, 0.0).unwrap(), 1e-12).unwrap();
        assert_eq!(v, 0.0);
        assert!(WrightArg::new(-1.0, 0.0, 0.0).is_err());
        assert!(WrightArg::new(0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn wright_gaussian_closed_form() {
        // phi(-1/2, 1/2; -z) = exp(-z^2/4)/sqrt(pi)
        for i in 0..=25 {
            let z = 5.0 * i as f64 / 25.0;
            let want = (-z * z / 4.0).exp() / SQRT_PI;
            let got = wright_phi(WrightArg::new(-0.5, 0.5, -z).unwrap(), 1e-13).unwrap();
            assert!(
                (got - want).abs() <= 1e-8 * want.abs(),
                "z = {z}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn wright_mu_zero_closed_form_deep() {
        // phi(-1/2, 0; -r) = (r / (2 sqrt(pi))) exp(-r^2/4); r = 10 needs
        // roughly 21 digits of cancellation, well past plain f64.
        for &r in &[0.5, 3.0, 7.0, 10.0] {
            let want = r / (2.0 * SQRT_PI) * (-r * r / 4.0).exp();
            let got = wright_phi(WrightArg::new(-0.5, 0.0, -r).unwrap(), 1e-13).unwrap();
            // The contract is absolute-or-relative <= tol; at r = 10 the
            // cancellation residue sits near 1e-19 absolute.
            let tol = (1e-9 * want.abs()).max(1e-15);
            assert!((got - want).abs() <= tol, "r = {r}: {got} vs {want}");
        }
    }

    #[test]
    fn wright_deep_tail_non_representable_delta() {
        // delta = -0.4 is not exactly representable; the gamma argument
        // delta*k + mu must stay in double-double or the tail collapses.
        // Reference values from an 80-digit direct summation (mpmath).
        let cases = [
            (10.0, 2.80943638216e-7, 1e-10),
            (13.0, 8.00846522398e-11, 1e-9),
            (15.0, 1.56962141565e-13, 1e-4),
            (16.0, 5.54711567117e-15, 2e-2),
        ];
        for (s, want, rel) in cases {
            let got = wright_phi(WrightArg::new(-0.4, 0.2, -s).unwrap(), 1e-12).unwrap();
            assert!(
                ((got - want) / want).abs() < rel,
                "s = {s}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn wright_erfc_closed_form() {
        // phi(-1/2, 1; -r) = erfc(r/2); erfc by independent quadrature.
        for &r in &[0.3, 1.0, 2.5, 4.0] {
            let erfc = 2.0 / SQRT_PI * adaptive(&|t: f64| (-t * t).exp(), r / 2.0, 30.0, 1e-13, 30);
            let got = wright_phi(WrightArg::new(-0.5, 1.0, -r).unwrap(), 1e-13).unwrap();
            assert!((got - erfc).abs() < 1e-10, "r = {r}: {got} vs {erfc}");
        }
    }

    #[test]
    fn wright_z_zero_equals_recip_gamma() {
        for &delta in &[-0.9, -0.5, -0.25, -0.05] {
            for &mu in &[-2.0, -1.5, -1.0, -0.3, 0.0, 0.4, 1.0, 2.7] {
                let v = wright_phi(WrightArg::new(delta, mu, 0.0).unwrap(), 1e-13).unwrap();
                let want = gammafn::recip_gamma(mu);
                assert!((v - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn wright_recurrence_in_mu() {
        // phi(d, mu-1; z) = d z phi'(d, mu; z) + (mu - 1) phi(d, mu; z),
        // with the z-derivative taken by central differences.
        let h = 1e-6;
        for &(d, mu, z) in &[(-0.4, 1.3, -1.5), (-0.5, 0.8, -2.0), (-0.7, 1.9, -0.7)] {
            let f = |zz: f64| wright_phi(WrightArg::new(d, mu, zz).unwrap(), 1e-13).unwrap();
            let dphi = (f(z + h) - f(z - h)) / (2.0 * h);
            let lhs = wright_phi(WrightArg::new(d, mu - 1.0, z).unwrap(), 1e-13).unwrap();
            let rhs = d * z * dphi + (mu - 1.0) * f(z);
            assert!((lhs - rhs).abs() < 1e-8, "({d},{mu},{z}): {lhs} vs {rhs}");
        }
    }

    // Independent Bessel oracles via their integral representations.
    fn bessel_i0(v: f64) -> f64 {
        adaptive(
            &|t: f64| (v * t.cos()).exp(),
            0.0,
            std::f64::consts::PI,
            1e-14,
            30,
        ) / std::f64::consts::PI
    }

    fn bessel_j0(v: f64) -> f64 {
        adaptive(
            &|t: f64| (v * t.sin()).cos(),
            0.0,
            std::f64::consts::PI / 2.0,
            1e-14,
            30,
        ) * 2.0
            / std::f64::consts::PI
    }

    #[test]
    fn hyp0f1_trivial_and_bessel() {
        assert_eq!(hyp0f1(1.0, 0.0).unwrap(), 1.0);
        assert!(hyp0f1(0.0, 1.0).is_err());
        assert!(hyp0f1(-3.0, 1.0).is_err());
        let i0 = bessel_i0(2.0);
        assert!((hyp0f1(1.0, 1.0).unwrap() - i0).abs() < 1e-10 * i0);
        let j0 = bessel_j0(2.0);
        assert!((hyp0f1(1.0, -1.0).unwrap() - j0).abs() < 1e-10);
    }

    #[test]
    fn hyp0f1_bessel_reduction_sweep() {
        let mut z = -50.0;
        while z <= 50.0 {
            let got = hyp0f1(1.0, z).unwrap();
            let want = if z >= 0.0 {
                bessel_i0(2.0 * z.sqrt())
            } else {
                bessel_j0(2.0 * (-z).sqrt())
            };
            let scale = want.abs().max(1e-3);
            assert!(
                (got - want).abs() <= 1e-10 * scale,
                "z = {z}: {got} vs {want}"
            );
            z += 6.25;
        }
    }

    #[test]
    fn h0_trivial_values() {
        let kp = KernelParams::new(1.0, 0.5, 0.5); // a = 0.25 - 0.5 < 0
        // On the diagonal the argument vanishes: h0 = 1
        for &x in &[-1.3, 0.0, 0.4, 2.0] {
            assert!((kernel_h0(x, x.abs(), &kp, 0, 0).unwrap() - 1.0).abs() < 1e-15);
        }
        // a = 0 collapses h0 to 1 everywhere
        let kp0 = KernelParams::new(0.0, 0.0, 0.5);
        assert_eq!(kernel_h0(0.0, 1.0, &kp0, 0, 0).unwrap(), 1.0);
        assert!(kernel_h0(0.5, 0.2, &kp, 0, 0).is_err());
    }

    #[test]
    fn h0_l1_matches_finite_difference() {
        // (d/dtau + b1) h0 against a central difference of the k = 0 kernel
        let kp = KernelParams::new(1.0, 0.0, 0.5); // b1 = -0.5, a = 0.25
        let (x, tau) = (0.2, 0.7);
        let h = 1e-5;
        let f = |t: f64| kernel_h0(x, t, &kp, 0, 0).unwrap();
        let fd = (f(tau + h) - f(tau - h)) / (2.0 * h) + kp.b1() * f(tau);
        let got = kernel_h0(x, tau, &kp, 0, 1).unwrap();
        assert!((got - fd).abs() < 1e-9, "{got} vs {fd}");
    }

    #[test]
    fn h0_x_derivatives_match_finite_difference() {
        let kp = KernelParams::new(0.8, -0.3, 0.5);
        let (x, tau) = (0.35, 1.1);
        let h = 1e-5;
        for k in 0..=2u32 {
            let f = |xx: f64| kernel_h0(xx, tau, &kp, 0, k).unwrap();
            let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
            let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            let g1 = kernel_h0(x, tau, &kp, 1, k).unwrap();
            let g2 = kernel_h0(x, tau, &kp, 2, k).unwrap();
            assert!((g1 - d1).abs() < 1e-8, "k = {k}: {g1} vs {d1}");
            assert!((g2 - d2).abs() < 5e-5, "k = {k}: {g2} vs {d2}");
        }
    }

    #[test]
    fn g_kernel_trivial_values() {
        let kp = KernelParams::new(0.0, 0.0, 0.4);
        // tau = 0, nu = 0: phi(-beta, 0; 0) = 1/Gamma(0) = 0
        assert_eq!(kernel_g_dnu(1.0, 0.0, 0.0, &kp).unwrap(), 0.0);
        // tau = 0, nu = beta - 1: 1/Gamma(1 - beta)
        let want = gammafn::recip_gamma(1.0 - 0.4);
        let got = kernel_g_dnu(1.0, 0.0, 0.4 - 1.0, &kp).unwrap();
        assert!((got - want).abs() < 1e-14);
        assert!(kernel_g_dnu(0.0, 1.0, 0.0, &kp).is_err());
        assert!(kernel_g_dnu(1.0, -1.0, 0.0, &kp).is_err());
    }

    #[test]
    fn g_kernel_heat_case_closed_form() {
        // beta = 1/2, b1 = 0: g(y, tau) = tau y^{-3/2} e^{-tau^2/(4y)} / (2 sqrt(pi))
        let kp = KernelParams::new(0.0, 0.0, 0.5);
        for &(y, tau) in &[(0.5f64, 0.3f64), (1.0, 1.2), (0.2, 0.8)] {
            let want = tau * y.powf(-1.5) * (-tau * tau / (4.0 * y)).exp() / (2.0 * SQRT_PI);
            let got = kernel_g_dnu(y, tau, 0.0, &kp).unwrap();
            assert!(
                (got - want).abs() < 1e-12 * want.abs().max(1e-12),
                "(y,tau)=({y},{tau}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn wright_table_matches_direct_eval() {
        let table = WrightTable::build(0.5, 0.0, 1e-15).unwrap();
        assert!(table.s_max() >= 10.0);
        for i in 0..200 {
            let s = table.s_max() * i as f64 / 199.0;
            let want = s / (2.0 * SQRT_PI) * (-s * s / 4.0).exp();
            assert!(
                (table.eval(s) - want).abs() < 1e-12,
                "s = {s}: {} vs {want}",
                table.eval(s)
            );
        }
        assert_eq!(table.eval(table.s_max() + 1.0), 0.0);
        // Envelope is a decreasing upper bound
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let s = table.s_max() * i as f64 / 20.0;
            let e = table.envelope(s);
            assert!(e <= prev + 1e-18);
            assert!(e + 1e-15 >= table.eval(s).abs());
            prev = e;
        }
    }

    #[test]
    fn wright_table_generic_orders() {
        for &(beta, mu) in &[(0.7, 0.3), (0.4, -0.6), (0.5, 1.0), (0.7, -0.7)] {
            let table = WrightTable::build(beta, mu, 1e-15).unwrap();
            for i in 0..60 {
                let s = table.s_max() * i as f64 / 59.0;
                let (want, noise) = wright_phi_dd(-beta, mu, -s).unwrap();
                assert!(
                    (table.eval(s) - want).abs() < 1e-12 * table.max_abs().max(1e-3) + noise,
                    "beta {beta} mu {mu} s {s}"
                );
            }
        }
    }
}
