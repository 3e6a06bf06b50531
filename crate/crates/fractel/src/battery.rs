//! Runnable identity-check battery: every analytic identity the library
//! is built on, evaluated at desk scale with pass/fail thresholds. The
//! CLI `identities` command prints one line per item; the acceptance
//! suite asserts the same surface with its own pinned tolerances.

use crate::fraccalc::{
    self, caputo_derivative, check_green_formula_caputo, check_newton_leibniz, mam331_residual,
    power_rule, rl_apply, rl_integral, FracOrder, PowerVKernel, SampledFunction,
};
use crate::gammafn::gamma;
use crate::greenfn::{GammaKernel, GreenFunction, Side};
use crate::quadrature::{adaptive, power_extrapolate};
use crate::specfun::{hyp0f1, wright_phi, WrightArg};
use crate::{ProblemParams, Result};

/// One identity check outcome.
#[derive(Clone, Debug)]
pub struct IdentityResult {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn item(name: &'static str, value: f64, threshold: f64) -> IdentityResult {
    IdentityResult {
        name,
        value,
        threshold,
        pass: value.is_finite() && value <= threshold,
    }
}

/// Run the full battery at the given parameter set.
pub fn run_identities(params: &ProblemParams) -> Result<Vec<IdentityResult>> {
    let mut out = Vec::new();
    let sqrt_pi = std::f64::consts::PI.sqrt();

    // Wright function against the Gaussian closed form.
    let mut worst = 0.0f64;
    for i in 0..=40 {
        let z = 5.0 * i as f64 / 40.0;
        let want = (-z * z / 4.0).exp() / sqrt_pi;
        let got = wright_phi(WrightArg::new(-0.5, 0.5, -z)?, 1e-13)?;
        worst = worst.max((got - want).abs() / want);
    }
    out.push(item("wright-gaussian-closed-form", worst, 1e-8));

    // 0F1 against Bessel integral representations.
    let bessel_i0 = |v: f64| {
        adaptive(&|t: f64| (v * t.cos()).exp(), 0.0, std::f64::consts::PI, 1e-14, 30)
            / std::f64::consts::PI
    };
    let bessel_j0 = |v: f64| {
        adaptive(
            &|t: f64| (v * t.sin()).cos(),
            0.0,
            std::f64::consts::PI / 2.0,
            1e-14,
            30,
        ) * 2.0
            / std::f64::consts::PI
    };
    let mut worst = 0.0f64;
    let mut z = -50.0;
    while z <= 50.0 {
        let got = hyp0f1(1.0, z)?;
        let want = if z >= 0.0 {
            bessel_i0(2.0 * z.sqrt())
        } else {
            bessel_j0(2.0 * (-z).sqrt())
        };
        worst = worst.max((got - want).abs() / want.abs().max(1e-3));
        z += 12.5;
    }
    out.push(item("hyp0f1-bessel-reduction", worst, 1e-10));

    // Grid power rule at one representative pair.
    let f = SampledFunction::from_fn(
        fraccalc::graded_grid(0.0, 1.0, 4096, 2.0),
        |s| s * s,
        None,
    )?;
    let got = rl_apply(&f, 0.5, 0.9)?;
    let want = power_rule(3.0, 0.5, 0.9, 0.0)?;
    out.push(item(
        "power-rule-grid-agreement",
        (got - want).abs() / want.abs(),
        1e-4,
    ));

    // Newton-Leibniz composition for f = s^beta.
    let beta = params.beta;
    let f = SampledFunction::from_fn(
        fraccalc::uniform_grid(0.0, 1.0, 2048),
        |s| s.powf(beta),
        None,
    )?;
    out.push(item(
        "newton-leibniz-composition",
        check_newton_leibniz(&f, -0.4, beta, 0.8)?,
        2e-3,
    ));

    // Fractional integration by parts at order -beta.
    {
        let m = 2048;
        let fa = |s: f64| s * s;
        let hb = |s: f64| (1.0 - s) * (2.0 + s);
        let hs = SampledFunction::from_fn(fraccalc::uniform_grid(0.0, 1.0, m), hb, None)?;
        let refl = SampledFunction::from_fn(fraccalc::uniform_grid(0.0, 1.0, m), |t| fa(1.0 - t), None)?;
        let rule = crate::quadrature::GaussRule::get(16);
        let panels = crate::quadrature::graded_panels(0.0, 1.0, true, 0.5, 18, 6);
        let left = crate::quadrature::integrate_panels(&panels, rule, |s| {
            if s <= 0.0 {
                0.0
            } else {
                fa(s) * rl_integral(&hs, -beta, s).unwrap_or(f64::NAN)
            }
        });
        let right = crate::quadrature::integrate_panels(&panels, rule, |s| {
            if s >= 1.0 {
                0.0
            } else {
                hb(s) * rl_integral(&refl, -beta, 1.0 - s).unwrap_or(f64::NAN)
            }
        });
        out.push(item("fractional-by-parts", (left - right).abs(), 1e-5));
    }

    // Caputo Green formula at the configured alpha.
    {
        let u = SampledFunction::from_fn(
            fraccalc::uniform_grid(0.0, 0.95, 2048),
            |s| s * s,
            Some(vec![0.0, 0.0]),
        )?;
        let v = PowerVKernel { y: 1.0, p: beta };
        let rep = check_green_formula_caputo(&u, &v, params.alpha, 0.1, 1.0)?;
        out.push(item("caputo-green-formula", rep.residual, 1e-3));
        if params.alpha == 1.0 {
            out.push(item("green-formula-zero-correction", rep.correction.abs(), 0.0));
        }
    }

    // S-operator reduction (k = n) at the configured alpha.
    let n = FracOrder::new(params.alpha)?.n;
    out.push(item(
        "s-operator-reduction",
        mam331_residual(params.alpha, n, 0.5, 1.0, 0.25, 0.4)?,
        1e-4,
    ));

    // Caputo kills constants.
    {
        let f = SampledFunction::from_fn(
            fraccalc::uniform_grid(0.0, 1.0, 512),
            |_| 2.0,
            Some(vec![2.0, 0.0]),
        )?;
        let v = caputo_derivative(&f, FracOrder::new(params.alpha)?, 0.7)?;
        out.push(item("caputo-annihilates-constants", v.abs(), 1e-10));
    }

    // Fundamental solution annihilation at two probes.
    {
        let kernel = GammaKernel::new(*params, 1e-9)?;
        let xm = 0.5 * (params.a1 + params.a2);
        let probe = 0.25 * params.width();
        let r1 = kernel.residual_l_gamma(probe.max(0.1), 0.5 * params.t_max)?;
        let r2 = kernel.residual_l_gamma(-probe.max(0.1), 0.25 * params.t_max)?;
        out.push(item("fundamental-solution-annihilation", r1.max(r2), 1e-3));

        // Delta-family limit with exponent-aware extrapolation.
        let (w1, w2) = (xm - 3.0 * params.width(), xm + 3.0 * params.width());
        let mut vals = Vec::new();
        for i in 0..4 {
            let h = (0.1 * params.t_max) * 0.5f64.powi(i);
            vals.push(kernel.delta_limit_check(&|_| 1.0, w1, w2, xm, h)?);
        }
        let lim = power_extrapolate(
            &vals,
            0.1 * params.t_max,
            0.5,
            &[beta, 2.0 * beta, 3.0 * beta],
        );
        out.push(item("delta-family-limit", (lim - 1.0).abs(), 1e-2));

        // Jump relation on both sides.
        let yj = 0.5 * params.t_max;
        let plus = kernel.jump_check(&|_| 1.0, Side::Plus, yj, 0.0)?;
        let minus = kernel.jump_check(&|_| 1.0, Side::Minus, yj, 0.0)?;
        out.push(item(
            "boundary-jump-limits",
            (plus + 0.5).abs().max((minus - 0.5).abs()),
            1e-2,
        ));
    }

    // Heat-kernel reduction (fixed classical parameters).
    {
        let ph = ProblemParams::new(1.0, 0.0, 0.0, -4.0, 4.0, 2.0)?;
        let kernel = GammaKernel::new(ph, 1e-10)?;
        let mut worst = 0.0f64;
        for &x in &[-1.0, 0.0, 0.7, 1.5] {
            for &y in &[0.3, 0.8] {
                let got = kernel.gamma_eval(x, y, 0.0, 0)?;
                let want =
                    (4.0 * std::f64::consts::PI * y).sqrt().recip() * (-x * x / (4.0 * y)).exp();
                worst = worst.max((got - want).abs() / want);
            }
        }
        out.push(item("heat-kernel-reduction", worst, 1e-6));
    }

    // Green function boundary structure.
    {
        let kernel = GammaKernel::new(*params, 1e-8)?;
        let green = GreenFunction::new(kernel, 1e-10, 40)?;
        let xm = 0.5 * (params.a1 + params.a2);
        let y = 0.5 * params.t_max;
        let v1 = green
            .green_eval(xm, y, params.a1, 0.0, 0.0, 0)?
            .abs();
        let v2 = green
            .green_eval(xm, y, params.a2, 0.0, 0.0, 0)?
            .abs();
        out.push(item("green-boundary-vanishing", v1.max(v2), 1e-12));
    }

    // Power rule spot identities.
    out.push(item(
        "power-rule-halfint",
        (power_rule(2.0, 0.5, 1.0, 0.0)? - 1.0 / gamma(1.5)).abs(),
        1e-13,
    ));

    Ok(out)
}
