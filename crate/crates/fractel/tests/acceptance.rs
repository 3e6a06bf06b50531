//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured figure. Tests serialize on a mutex so the runtime
//! limits are meaningful on a single core (run with `--nocapture` to see
//! every line).

use fractel::fraccalc::{
    self, check_green_formula_caputo, power_rule, rl_apply, PowerVKernel, SampledFunction,
};
use fractel::gammafn::gamma;
use fractel::greenfn::{GammaKernel, GreenFunction, Side};
use fractel::oracle::{cross_validate, fd_solve, FDGrid};
use fractel::quadrature::{adaptive, power_extrapolate};
use fractel::solver::{
    solve_grid_cfg, solve_point_cfg, Func1, GridSpec, ProblemData, QuadConfig,
};
use fractel::specfun::{hyp0f1, wright_phi, WrightArg};
use fractel::ProblemParams;
use std::sync::Mutex;
use std::time::Instant;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

const SQRT_PI: f64 = 1.772_453_850_905_516;

#[test]
fn criterion_01_special_function_identities() {
    let _guard = serial();
    let t0 = Instant::now();
    // Wright vs the Gaussian closed form, z in [0, 5], relative 1e-8
    let mut worst_w = 0.0f64;
    for i in 0..=50 {
        let z = 5.0 * i as f64 / 50.0;
        let want = (-z * z / 4.0).exp() / SQRT_PI;
        let got = wright_phi(WrightArg::new(-0.5, 0.5, -z).unwrap(), 1e-13).unwrap();
        worst_w = worst_w.max((got - want).abs() / want);
    }
    assert!(worst_w <= 1e-8, "wright closed form deviates {worst_w:.3e}");

    // 0F1(1, z) vs Bessel reductions through integral representations
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
    let mut worst_b = 0.0f64;
    let mut z = -50.0;
    while z <= 50.0 {
        let got = hyp0f1(1.0, z).unwrap();
        let want = if z >= 0.0 {
            bessel_i0(2.0 * z.sqrt())
        } else {
            bessel_j0(2.0 * (-z).sqrt())
        };
        worst_b = worst_b.max((got - want).abs() / want.abs().max(1e-3));
        z += 2.5;
    }
    assert!(worst_b <= 1e-10, "bessel reduction deviates {worst_b:.3e}");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 1.0, "criterion 1 took {dt:.2}s (limit 1s)");
    println!(
        "criterion 01 special-function-identities: PASS \
         (wright {worst_w:.2e}, bessel {worst_b:.2e}, {dt:.2}s)"
    );
}

#[test]
fn criterion_02_power_rule_convergence() {
    let _guard = serial();
    let t0 = Instant::now();
    let mut all_final_rel = 0.0f64;
    let mut worst_order = f64::INFINITY;
    for &(mu, nu) in &[(1.3, -0.5), (2.0, 0.5), (3.0, 1.5), (1.3, 0.5)] {
        let want = power_rule(mu, nu, 0.9, 0.0).unwrap();
        let mut errs = Vec::new();
        for lvl in 0..=4 {
            let m = 256 << lvl;
            let f = SampledFunction::from_fn(
                fraccalc::graded_grid(0.0, 1.0, m, 2.0),
                |s| s.powf(mu - 1.0),
                None,
            )
            .unwrap();
            let got = rl_apply(&f, nu, 0.9).unwrap();
            errs.push((got - want).abs());
        }
        // Observed order over the four halvings, ignoring rounding floors
        for w in errs.windows(2) {
            if w[1] > 1e-11 {
                worst_order = worst_order.min((w[0] / w[1]).log2());
            }
        }
        all_final_rel = all_final_rel.max(errs[4] / want.abs());
    }
    assert!(
        worst_order >= 1.5,
        "observed convergence order {worst_order:.2} below 1.5"
    );
    assert!(
        all_final_rel <= 1e-4,
        "final relative error {all_final_rel:.3e} above 1e-4"
    );
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 10.0, "criterion 2 took {dt:.2}s (limit 10s)");
    println!(
        "criterion 02 power-rule-convergence: PASS \
         (order {worst_order:.2}, final rel {all_final_rel:.2e}, {dt:.2}s)"
    );
}

#[test]
fn criterion_03_caputo_green_formula() {
    let _guard = serial();
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for &alpha in &[0.6, 1.4] {
        let beta = alpha / 2.0;
        for &eps in &[0.2, 0.1] {
            let u = SampledFunction::from_fn(
                fraccalc::uniform_grid(0.0, 1.0 - eps / 2.0, 2048),
                |s| s * s,
                Some(vec![0.0, 0.0]),
            )
            .unwrap();
            let v = PowerVKernel { y: 1.0, p: beta };
            let rep = check_green_formula_caputo(&u, &v, alpha, eps, 1.0).unwrap();
            worst = worst.max(rep.residual);
            assert!(
                rep.residual <= 1e-3,
                "alpha {alpha}, eps {eps}: residual {:.3e}",
                rep.residual
            );
        }
    }
    // Classical case: the correction term is exactly zero.
    let u = SampledFunction::from_fn(
        fraccalc::uniform_grid(0.0, 0.95, 1024),
        |s| s * s,
        Some(vec![0.0, 0.0]),
    )
    .unwrap();
    let v = PowerVKernel { y: 1.0, p: 0.75 };
    let rep = check_green_formula_caputo(&u, &v, 1.0, 0.1, 1.0).unwrap();
    assert_eq!(rep.correction, 0.0, "correction at alpha = 1 must vanish");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 30.0, "criterion 3 took {dt:.2}s (limit 30s)");
    println!(
        "criterion 03 caputo-green-formula: PASS \
         (max residual {worst:.2e}, zero correction at alpha = 1, {dt:.2}s)"
    );
}

#[test]
fn criterion_04_fundamental_solution_annihilation() {
    let _guard = serial();
    let t0 = Instant::now();
    let probes = [(0.5, 0.5), (1.0, 0.25), (-0.8, 0.75), (0.3, 1.0), (1.5, 0.4)];
    let mut worst = 0.0f64;
    for &(alpha, b, c) in &[(0.8, 1.0, 1.0), (1.4, 0.5, 0.0), (1.0, 0.0, 0.0)] {
        let p = ProblemParams::new(alpha, b, c, -2.0, 2.0, 1.5).unwrap();
        let kernel = GammaKernel::new(p, 1e-9).unwrap();
        for &(x, y) in &probes {
            let r = kernel.residual_l_gamma(x, y).unwrap();
            worst = worst.max(r);
            assert!(
                r <= 1e-3,
                "(alpha {alpha}, b {b}, c {c}) at ({x},{y}): residual {r:.3e}"
            );
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 120.0, "criterion 4 took {dt:.2}s (limit 2min)");
    println!(
        "criterion 04 fundamental-solution-annihilation: PASS \
         (max residual {worst:.2e} over 15 probes, {dt:.2}s)"
    );
}

#[test]
fn criterion_05_heat_kernel_reduction() {
    let _guard = serial();
    let t0 = Instant::now();
    let p = ProblemParams::new(1.0, 0.0, 0.0, -4.0, 4.0, 2.0).unwrap();
    let kernel = GammaKernel::new(p, 1e-10).unwrap();
    let mut worst = 0.0f64;
    for i in 0..9 {
        let x = -2.0 + 0.5 * i as f64;
        for j in 0..5 {
            let y = 0.25 + 0.25 * j as f64;
            let got = kernel.gamma_eval(x, y, 0.0, 0).unwrap();
            let want =
                (4.0 * std::f64::consts::PI * y).sqrt().recip() * (-x * x / (4.0 * y)).exp();
            worst = worst.max((got - want).abs() / want);
        }
    }
    assert!(worst <= 1e-6, "max relative deviation {worst:.3e}");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 30.0, "criterion 5 took {dt:.2}s (limit 30s)");
    println!(
        "criterion 05 heat-kernel-reduction: PASS \
         (max relative deviation {worst:.2e} on 9x5 grid, {dt:.2}s)"
    );
}

#[test]
fn criterion_06_green_function_structure() {
    let _guard = serial();
    let t0 = Instant::now();
    let p = ProblemParams::new(1.4, 0.5, 0.25, 0.0, 1.0, 1.0).unwrap();
    let image_tol = 1e-10;
    let green = GreenFunction::new(GammaKernel::new(p, 1e-9).unwrap(), image_tol, 24).unwrap();
    // Exact boundary vanishing
    let mut worst_bc = 0.0f64;
    for &(x, y, eta) in &[(0.3, 0.5, 0.0), (0.7, 0.9, 0.2), (0.5, 1.0, 0.6)] {
        worst_bc = worst_bc.max(green.green_eval(x, y, p.a1, eta, 0.0, 0).unwrap().abs());
        worst_bc = worst_bc.max(green.green_eval(x, y, p.a2, eta, 0.0, 0).unwrap().abs());
    }
    assert!(worst_bc <= 1e-12, "boundary values reach {worst_bc:.3e}");
    // Tail stability under shell-cap doubling
    let green2 = GreenFunction::new(GammaKernel::new(p, 1e-9).unwrap(), image_tol, 48).unwrap();
    let mut worst_tail = 0.0f64;
    for &(x, y, xi, eta) in &[(0.3, 0.9, 0.7, 0.1), (0.6, 0.5, 0.4, 0.0), (0.2, 1.0, 0.9, 0.5)] {
        let v1 = green.green_eval(x, y, xi, eta, 0.0, 0).unwrap();
        let v2 = green2.green_eval(x, y, xi, eta, 0.0, 0).unwrap();
        worst_tail = worst_tail.max((v1 - v2).abs());
    }
    assert!(
        worst_tail <= 2.0 * image_tol,
        "shell-cap doubling moved values by {worst_tail:.3e}"
    );
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "criterion 06 green-function-structure: PASS \
         (boundary {worst_bc:.1e}, tail shift {worst_tail:.1e} <= 2 image_tol, {dt:.2}s)"
    );
}

#[test]
fn criterion_07_delta_and_jump_limits() {
    let _guard = serial();
    let t0 = Instant::now();
    let p = ProblemParams::new(0.8, 1.0, 1.0, -3.0, 3.0, 1.0).unwrap();
    let kernel = GammaKernel::new(p, 1e-9).unwrap();
    let beta = p.beta;
    let exps = [beta, 2.0 * beta, 3.0 * beta];

    // Delta family: q = 1 and q = xi at x = 0.3
    let x = 0.3;
    for (label, q, want) in [
        ("one", Box::new(|_: f64| 1.0) as Box<dyn Fn(f64) -> f64>, 1.0),
        ("id", Box::new(|xi: f64| xi), x),
    ] {
        let mut vals = Vec::new();
        for i in 0..4 {
            let h = 0.1 * 0.5f64.powi(i);
            vals.push(kernel.delta_limit_check(&q, -3.0, 3.0, x, h).unwrap());
        }
        let errs: Vec<f64> = vals.iter().map(|v| (v - want).abs()).collect();
        assert!(
            errs[0] > errs[1] && errs[1] > errs[2],
            "delta({label}) errors not monotone: {errs:?}"
        );
        let lim = power_extrapolate(&vals, 0.1, 0.5, &exps);
        assert!(
            (lim - want).abs() <= 1e-2,
            "delta({label}) extrapolates to {lim} (want {want})"
        );
    }

    // Jump limits on both sides, offsets halving
    let y = 0.5;
    let plus = kernel.jump_check(&|_| 1.0, Side::Plus, y, 0.0).unwrap();
    let minus = kernel.jump_check(&|_| 1.0, Side::Minus, y, 0.0).unwrap();
    assert!(
        (plus + 0.5).abs() <= 1e-2 && (minus - 0.5).abs() <= 1e-2,
        "jump limits: plus {plus}, minus {minus}"
    );
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "criterion 07 delta-and-jump-limits: PASS \
         (jump {plus:.4}/{minus:.4}, {dt:.2}s)"
    );
}

fn manufactured_quadratic(p: ProblemParams) -> ProblemData {
    let (alpha, beta, b, c) = (p.alpha, p.beta, p.b, p.c);
    ProblemData::new(
        p,
        vec![Box::new(|_| 0.0) as Box<Func1>, Box::new(|_| 0.0)],
        Box::new(|y: f64| y * y),
        Box::new(|y: f64| y * y),
        Box::new(move |_, y: f64| {
            2.0 * y.powf(2.0 - alpha) / gamma(3.0 - alpha)
                + 2.0 * b * y.powf(2.0 - beta) / gamma(3.0 - beta)
                + c * y * y
        }),
    )
    .unwrap()
}

#[test]
fn criterion_08_manufactured_solution() {
    let _guard = serial();
    let t0 = Instant::now();
    let p = ProblemParams::new(1.4, 0.5, 0.25, 0.0, 1.0, 1.0).unwrap();
    let data = manufactured_quadratic(p);
    let green = GreenFunction::new(GammaKernel::new(p, 1e-8).unwrap(), 1e-10, 60).unwrap();
    let grid = GridSpec { nx: 21, ny: 21 };
    let field = solve_grid_cfg(&data, &grid, &green, &QuadConfig::normal(), false).unwrap();
    let mut worst = 0.0f64;
    for (j, &y) in field.ys.iter().enumerate() {
        for i in 0..field.xs.len() {
            worst = worst.max((field.at(i, j) - y * y).abs());
        }
    }
    assert!(worst <= 5e-3, "max-norm error {worst:.3e} on 21x21 grid");

    // Independent difference scheme agrees at 9 interior probes
    let probes: Vec<(f64, f64)> = [0.25, 0.5, 0.75]
        .iter()
        .flat_map(|&x| [0.25, 0.5, 0.75].iter().map(move |&y| (x, y)))
        .collect();
    let report = cross_validate(&data, &FDGrid::new(64, 64).unwrap(), &green, &probes).unwrap();
    assert!(
        report.max_diff <= 1e-2,
        "methods disagree by {:.3e}",
        report.max_diff
    );
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 300.0, "criterion 8 took {dt:.2}s (limit 5min)");
    println!(
        "criterion 08 manufactured-solution: PASS \
         (field max error {worst:.2e}, cross-method {:.2e}, {dt:.2}s)",
        report.max_diff
    );
}

#[test]
fn criterion_09_constant_exactness() {
    let _guard = serial();
    let t0 = Instant::now();
    let p = ProblemParams::new(0.8, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
    let c = p.c;
    let data = ProblemData::new(
        p,
        vec![Box::new(|_| 1.0) as Box<Func1>],
        Box::new(|_| 1.0),
        Box::new(|_| 1.0),
        Box::new(move |_, _| c),
    )
    .unwrap();
    let green = GreenFunction::new(GammaKernel::new(p, 1e-10).unwrap(), 1e-11, 60).unwrap();
    let mut worst_solver = 0.0f64;
    for &(x, y) in &[(0.5, 0.5), (0.25, 0.8), (0.75, 0.3)] {
        let u = solve_point_cfg(x, y, &data, &green, &QuadConfig::high()).unwrap();
        worst_solver = worst_solver.max((u - 1.0).abs());
    }
    assert!(
        worst_solver <= 1e-6,
        "solver constant error {worst_solver:.3e}"
    );

    // The difference scheme reproduces constants to rounding, for both
    // trace counts.
    let mut worst_fd = 0.0f64;
    for &alpha in &[0.8, 1.4] {
        let p = ProblemParams::new(alpha, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let n = p.n();
        let mut tau: Vec<Box<Func1>> = vec![Box::new(|_| 1.0)];
        if n == 2 {
            tau.push(Box::new(|_| 0.0));
        }
        let c = p.c;
        let data = ProblemData::new(
            p,
            tau,
            Box::new(|_| 1.0),
            Box::new(|_| 1.0),
            Box::new(move |_, _| c),
        )
        .unwrap();
        let field = fd_solve(&data, &FDGrid::new(32, 32).unwrap()).unwrap();
        for &v in &field.values {
            worst_fd = worst_fd.max((v - 1.0).abs());
        }
    }
    assert!(worst_fd <= 1e-12, "oracle constant error {worst_fd:.3e}");
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "criterion 09 constant-exactness: PASS \
         (solver {worst_solver:.2e} <= 1e-6, oracle {worst_fd:.2e} <= 1e-12, {dt:.2}s)"
    );
}

#[test]
fn criterion_10_linearity() {
    let _guard = serial();
    let t0 = Instant::now();
    let p = ProblemParams::new(0.8, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
    let green = GreenFunction::new(GammaKernel::new(p, 1e-8).unwrap(), 1e-10, 60).unwrap();
    let mk = |amp_t: f64, amp_f: f64| {
        ProblemData::new(
            p,
            vec![Box::new(move |x: f64| amp_t * x * (1.0 - x)) as Box<Func1>],
            Box::new(|_| 0.0),
            Box::new(|_| 0.0),
            Box::new(move |x: f64, y: f64| amp_f * (x + 2.0 * y)),
        )
        .unwrap()
    };
    let data_a = mk(1.0, 0.5);
    let data_b = mk(-0.3, 1.25);
    let lam = 0.6180339887;
    let data_sum = ProblemData::new(
        p,
        vec![Box::new(move |x: f64| {
            (1.0 - 0.3 * lam) * x * (1.0 - x)
        }) as Box<Func1>],
        Box::new(|_| 0.0),
        Box::new(|_| 0.0),
        Box::new(move |x: f64, y: f64| (0.5 + 1.25 * lam) * (x + 2.0 * y)),
    )
    .unwrap();
    let cfg = QuadConfig::normal();
    let mut worst = 0.0f64;
    for &(x, y) in &[(0.35, 0.45), (0.7, 0.9)] {
        let ua = solve_point_cfg(x, y, &data_a, &green, &cfg).unwrap();
        let ub = solve_point_cfg(x, y, &data_b, &green, &cfg).unwrap();
        let us = solve_point_cfg(x, y, &data_sum, &green, &cfg).unwrap();
        worst = worst.max((us - (ua + lam * ub)).abs());
    }
    assert!(worst <= 1e-10, "superposition deviation {worst:.3e}");
    let dt = t0.elapsed().as_secs_f64();
    println!("criterion 10 linearity: PASS (deviation {worst:.2e}, {dt:.2}s)");
}
