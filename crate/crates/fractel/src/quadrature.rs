//! Gauss-Legendre rules, graded panel layouts, and a small adaptive
//! integrator used for smooth one-dimensional integrands.

use std::sync::{Mutex, OnceLock};

/// Gauss-Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Build an n-point rule by Newton iteration on the Legendre polynomial.
    pub fn build(n: usize) -> GaussRule {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Evaluate P_n and P_n' by recurrence
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Shared cached rule for a given order.
    pub fn get(n: usize) -> &'static GaussRule {
        static CACHE: OnceLock<Mutex<Vec<(usize, &'static GaussRule)>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        let mut guard = cache.lock().unwrap();
        if let Some(&(_, r)) = guard.iter().find(|(k, _)| *k == n) {
            return r;
        }
        let leaked: &'static GaussRule = Box::leak(Box::new(GaussRule::build(n)));
        guard.push((n, leaked));
        leaked
    }

    /// Integrate f over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Panels over [a, b], geometrically graded toward one endpoint.
///
/// `depth` extra levels with ratio `ratio` are inserted at the graded end;
/// the rest of the interval is split uniformly into `uniform` panels.
pub fn graded_panels(a: f64, b: f64, toward_b: bool, ratio: f64, depth: usize, uniform: usize) -> Vec<(f64, f64)> {
    assert!(b > a && ratio > 0.0 && ratio < 1.0);
    let mut cuts = Vec::with_capacity(depth + uniform + 1);
    // Graded zone occupies the half of the interval next to the singular end.
    let len = b - a;
    let mut panels = Vec::with_capacity(depth + uniform);
    // Uniform zone over the far half, graded zone shrinking toward the end.
    let split = 0.5 * len;
    let n_uni = uniform.max(1);
    for i in 0..n_uni {
        let t0 = i as f64 / n_uni as f64;
        let t1 = (i + 1) as f64 / n_uni as f64;
        cuts.push((split * t0, split * t1));
    }
    let mut w = split;
    let mut pos = split;
    for i in 0..depth {
        let next = if i + 1 == depth { len } else { pos + w * (1.0 - ratio) };
        cuts.push((pos, next.min(len)));
        w *= ratio;
        pos = next;
        if pos >= len {
            break;
        }
    }
    for (u0, u1) in cuts {
        if toward_b {
            panels.push((a + u0, a + u1));
        } else {
            panels.push((b - u1, b - u0));
        }
    }
    if !toward_b {
        panels.reverse();
    }
    panels
}

/// Integrate over a panel list with a fixed rule.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    panels: &[(f64, f64)],
    rule: &GaussRule,
    mut f: F,
) -> f64 {
    let mut acc = 0.0;
    for &(a, b) in panels {
        if b > a {
            acc += rule.integrate(a, b, &mut f);
        }
    }
    acc
}

/// Adaptive Gauss integration by interval bisection; compares an n-point
/// estimate against its two-halves refinement.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: usize) -> f64 {
    let rule = GaussRule::get(12);
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        rule: &GaussRule,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = rule.integrate(a, m, f);
        let right = rule.integrate(m, b, f);
        let err = (left + right - whole).abs();
        if err <= tol || depth == 0 {
            return left + right;
        }
        rec(f, rule, a, m, left, 0.5 * tol, depth - 1)
            + rec(f, rule, m, b, right, 0.5 * tol, depth - 1)
    }
    let whole = rule.integrate(a, b, f);
    rec(f, rule, a, b, whole, tol, max_depth)
}

/// Integral of `phi(t) (t-a)^ea (b-t)^eb` over [a, b] with exponents > -1.
///
/// Each half is regularized by substituting the corresponding power, which
/// removes the endpoint singularity exactly; the transformed integrand is
/// then only finitely differentiable at the origin, so panels stay graded.
pub fn weakly_singular<F: Fn(f64) -> f64>(phi: F, a: f64, b: f64, ea: f64, eb: f64) -> f64 {
    assert!(ea > -1.0 && eb > -1.0, "exponents must be integrable");
    if b <= a {
        return 0.0;
    }
    let rule = GaussRule::get(16);
    let m = 0.5 * (a + b);
    let mut acc = 0.0;
    // Left half: weight (t-a)^ea, smooth remainder phi(t)(b-t)^eb
    {
        let q = 1.0 / (1.0 + ea);
        let w_top = (m - a).powf(1.0 + ea);
        let panels = graded_panels(0.0, w_top, false, 0.4, 24, 3);
        acc += integrate_panels(&panels, rule, |w| {
            let t = a + w.powf(q);
            phi(t) * (b - t).powf(eb)
        }) * q;
    }
    // Right half: weight (b-t)^eb
    {
        let q = 1.0 / (1.0 + eb);
        let w_top = (b - m).powf(1.0 + eb);
        let panels = graded_panels(0.0, w_top, false, 0.4, 24, 3);
        acc += integrate_panels(&panels, rule, |w| {
            let t = b - w.powf(q);
            phi(t) * (t - a).powf(ea)
        }) * q;
    }
    acc
}

/// Richardson extrapolation with known exponents: fits
/// `v_i = L + sum_j C_j (h0 r^i)^(e_j)` through exactly
/// `exponents.len() + 1` trailing values and returns L.
pub fn power_extrapolate(values: &[f64], h0: f64, ratio: f64, exponents: &[f64]) -> f64 {
    let m = exponents.len() + 1;
    assert!(values.len() >= m, "need {m} values");
    let tail = &values[values.len() - m..];
    let i0 = values.len() - m;
    // Row i: L + sum_j C_j h_i^e_j = v_i
    let mut a = vec![vec![0.0f64; m]; m];
    let mut b = vec![0.0f64; m];
    for (i, &v) in tail.iter().enumerate() {
        let h = h0 * ratio.powi((i0 + i) as i32);
        a[i][0] = 1.0;
        for (j, &e) in exponents.iter().enumerate() {
            a[i][j + 1] = h.powf(e);
        }
        b[i] = v;
    }
    // Gaussian elimination with partial pivoting on the tiny system
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            return *tail.last().unwrap();
        }
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for cc in col..m {
                a[r][cc] -= f * a[col][cc];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0f64; m];
    for r in (0..m).rev() {
        let mut s = b[r];
        for cc in r + 1..m {
            s -= a[r][cc] * x[cc];
        }
        x[r] = s / a[r][r];
    }
    x[0]
}

/// Extrapolate a geometric sequence of estimates v(d0 r^i) -> limit as d -> 0.
///
/// Assumes v_i = L + C q^i; uses the last three entries.
pub fn geometric_extrapolate(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n >= 3);
    let (v1, v2, v3) = (values[n - 3], values[n - 2], values[n - 1]);
    let d1 = v2 - v1;
    let d2 = v3 - v2;
    if d1.abs() < 1e-300 || (d2 / d1).abs() >= 1.0 {
        return v3;
    }
    let q = d2 / d1;
    v3 + d2 * q / (1.0 - q)
}
