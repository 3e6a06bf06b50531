//! Command implementations and the CSV boundary.
//!
//! CSV schema: header `x,y,value[,err_est]`, rows emitted row-major over
//! y then x, every float serialized with the shortest round-trip decimal
//! form so identical runs produce byte-identical files.

use crate::config::{ConfigError, RunConfig};
use fractel::battery;
use fractel::greenfn::{GammaKernel, GreenFunction};
use fractel::oracle::{cross_validate, fd_solve, FDGrid};
use fractel::solver::{solve_grid_cfg, verify_solution, GridSpec, SolutionField};
use fractel::Error;
use std::io::Write;
use std::path::Path;

pub enum RunError {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParam(_) | Error::Compatibility(_) => RunError::Config(e.to_string()),
            other => RunError::Numerical(other.to_string()),
        }
    }
}

type Outcome = Result<bool, RunError>;

/// Shortest round-trip float formatting keeps CSV output deterministic
/// and exactly re-readable.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_field_csv(path: &Path, field: &SolutionField) -> Result<(), RunError> {
    let mut out = String::new();
    let with_err = field.err_est.is_some();
    out.push_str(if with_err { "x,y,value,err_est\n" } else { "x,y,value\n" });
    for (j, &y) in field.ys.iter().enumerate() {
        for (i, &x) in field.xs.iter().enumerate() {
            out.push_str(&fmt_f64(x));
            out.push(',');
            out.push_str(&fmt_f64(y));
            out.push(',');
            out.push_str(&fmt_f64(field.at(i, j)));
            if let Some(err) = &field.err_est {
                out.push(',');
                out.push_str(&fmt_f64(err[j * field.xs.len() + i]));
            }
            out.push('\n');
        }
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| RunError::Numerical(format!("cannot write {}: {e}", path.display())))
}

/// Read back a CSV written by [`write_field_csv`].
pub fn read_field_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Numerical(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        let mut parts = line.split(',');
        let x = parts.next().and_then(|s| s.parse().ok());
        let y = parts.next().and_then(|s| s.parse().ok());
        let v = parts.next().and_then(|s| s.parse().ok());
        match (x, y, v) {
            (Some(x), Some(y), Some(v)) => rows.push((x, y, v)),
            _ => return Err(RunError::Numerical(format!("malformed CSV line: {line}"))),
        }
    }
    Ok(rows)
}

fn grid_nodes(cfg: &RunConfig) -> (Vec<f64>, Vec<f64>) {
    let p = &cfg.params;
    let gs = GridSpec {
        nx: cfg.grid.nx,
        ny: cfg.grid.ny,
    };
    let params = fractel::ProblemParams::new(p.alpha, p.b, p.c, p.a1, p.a2, p.t_max).unwrap();
    (gs.x_nodes(&params), gs.y_nodes(&params))
}

pub fn run_gamma(cfg: &RunConfig, out: &Path, tol: Option<f64>) -> Outcome {
    let params = cfg.problem_params()?;
    let kernel = GammaKernel::new(params, tol.unwrap_or(cfg.tolerances.kernel_tol))?;
    let (xs, ys) = grid_nodes(cfg);
    let orders = if cfg.gamma_orders.is_empty() {
        vec![(0.0, 0u32)]
    } else {
        cfg.gamma_orders.iter().map(|o| (o.nu, o.m)).collect()
    };
    for (idx, &(nu, m)) in orders.iter().enumerate() {
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for &y in &ys {
            for &x in &xs {
                values.push(kernel.gamma_eval(x, y, nu, m)?);
            }
        }
        let field = SolutionField {
            xs: xs.clone(),
            ys: ys.clone(),
            values,
            err_est: None,
            meta: Default::default(),
        };
        let path = out.join(format!("gamma_{idx}.csv"));
        write_field_csv(&path, &field)?;
        println!("gamma: wrote {} (nu = {nu}, m = {m})", path.display());
    }
    Ok(true)
}

pub fn run_green(cfg: &RunConfig, out: &Path, tol: Option<f64>) -> Outcome {
    let params = cfg.problem_params()?;
    let kernel = GammaKernel::new(params, tol.unwrap_or(cfg.tolerances.kernel_tol))?;
    let green = GreenFunction::new(kernel, cfg.tolerances.image_tol, 60)?;
    let (xs, ys) = grid_nodes(cfg);
    let gp = &cfg.green_point;
    let mut values = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            if y > gp.eta {
                values.push(green.green_eval(x, y, gp.xi, gp.eta, gp.nu, gp.m)?);
            } else {
                values.push(f64::NAN);
            }
        }
    }
    let field = SolutionField {
        xs,
        ys,
        values,
        err_est: None,
        meta: Default::default(),
    };
    let path = out.join("green.csv");
    write_field_csv(&path, &field)?;
    println!(
        "green: wrote {} (xi = {}, eta = {}, nu = {}, m = {})",
        path.display(),
        gp.xi,
        gp.eta,
        gp.nu,
        gp.m
    );
    Ok(true)
}

pub fn run_solve(cfg: &RunConfig, out: &Path, tol: Option<f64>) -> Outcome {
    let data = cfg.problem_data()?;
    let kernel = GammaKernel::new(*data.params(), tol.unwrap_or(cfg.tolerances.kernel_tol))?;
    let green = GreenFunction::new(kernel, cfg.tolerances.image_tol, 60)?;
    let quad = cfg.quad_config(tol);
    let grid = GridSpec {
        nx: cfg.grid.nx,
        ny: cfg.grid.ny,
    };
    let field = solve_grid_cfg(&data, &grid, &green, &quad, true)?;
    let path = out.join("solution.csv");
    write_field_csv(&path, &field)?;
    let report = verify_solution(&field, &data);
    println!("solve: wrote {}", path.display());
    println!(
        "verify: ic {:.3e}{} bc ({:.3e}, {:.3e}) residual max {:.3e} mean {:.3e} nan {}",
        report.ic_max,
        report
            .ic_deriv_max
            .map(|v| format!(" ic' {v:.3e}"))
            .unwrap_or_default(),
        report.bc_max[0],
        report.bc_max[1],
        report.residual_max,
        report.residual_mean,
        report.nan_count
    );
    let ok = report.worst() <= cfg.tolerances.verify_tol && report.nan_count == 0;
    if !ok {
        println!(
            "verification tolerance {:.1e} exceeded",
            cfg.tolerances.verify_tol
        );
    }
    Ok(ok)
}

pub fn run_oracle(cfg: &RunConfig, out: &Path) -> Outcome {
    let data = cfg.problem_data()?;
    let field = fd_solve(&data, &FDGrid::new(cfg.fd_grid.nx, cfg.fd_grid.ny)?)?;
    let path = out.join("oracle.csv");
    write_field_csv(&path, &field)?;
    println!("oracle: wrote {}", path.display());
    Ok(true)
}

pub fn run_verify(cfg: &RunConfig, out: &Path, tol: Option<f64>) -> Outcome {
    let data = cfg.problem_data()?;
    let kernel = GammaKernel::new(*data.params(), tol.unwrap_or(cfg.tolerances.kernel_tol))?;
    let green = GreenFunction::new(kernel, cfg.tolerances.image_tol, 60)?;
    let quad = cfg.quad_config(tol);
    let grid = GridSpec {
        nx: cfg.grid.nx,
        ny: cfg.grid.ny,
    };
    let field = solve_grid_cfg(&data, &grid, &green, &quad, true)?;
    write_field_csv(&out.join("solution.csv"), &field)?;
    let fd = fd_solve(&data, &FDGrid::new(cfg.fd_grid.nx, cfg.fd_grid.ny)?)?;
    write_field_csv(&out.join("oracle.csv"), &fd)?;
    let report = verify_solution(&field, &data);
    // Probes: a 3x3 interior lattice away from y = 0.
    let p = data.params();
    let probes: Vec<(f64, f64)> = (1..=3)
        .flat_map(|i| {
            (1..=3).map(move |j| {
                (
                    p.a1 + p.width() * i as f64 / 4.0,
                    p.t_max * (0.25 + 0.25 * (j - 1) as f64),
                )
            })
        })
        .collect();
    let cross = cross_validate(&data, &FDGrid::new(cfg.fd_grid.nx, cfg.fd_grid.ny)?, &green, &probes)?;
    println!(
        "verify: field ic {:.3e} bc ({:.3e}, {:.3e}) residual {:.3e}",
        report.ic_max, report.bc_max[0], report.bc_max[1], report.residual_max
    );
    println!(
        "cross: max {:.3e} mean {:.3e} (fd self {:.3e}, green self {:.3e})",
        cross.max_diff, cross.mean_diff, cross.fd_self_est, cross.green_self_est
    );
    let ok = report.worst() <= cfg.tolerances.verify_tol
        && cross.max_diff <= cfg.tolerances.cross_tol
        && report.nan_count == 0;
    if !ok {
        println!("verification tolerances exceeded");
    }
    Ok(ok)
}

pub fn run_convergence(cfg: &RunConfig, out: &Path) -> Outcome {
    let data = cfg.problem_data()?;
    let exact = match &cfg.exact {
        Some(src) => Some(
            crate::expr::Expr::parse(src)
                .map_err(|e| RunError::Config(format!("in exact expression: {e}")))?,
        ),
        None => None,
    };
    let base_ny = cfg.fd_grid.ny.max(8);
    let nx = cfg.fd_grid.nx.max(8);
    let mut rows = Vec::new();
    let mut prev_field: Option<SolutionField> = None;
    let mut prev_err: Option<f64> = None;
    println!("convergence: fd time-step halving study (nx = {nx})");
    println!("{:>8} {:>14} {:>8}", "ny", "error", "order");
    for lvl in 0..4 {
        let ny = base_ny << lvl;
        let field = fd_solve(&data, &FDGrid::new(nx, ny)?)?;
        let err = match &exact {
            Some(e) => {
                let mut worst = 0.0f64;
                for (j, &y) in field.ys.iter().enumerate() {
                    for (i, &x) in field.xs.iter().enumerate() {
                        worst = worst.max((field.at(i, j) - e.eval(x, y)).abs());
                    }
                }
                worst
            }
            None => match &prev_field {
                // Self-difference at shared nodes
                Some(prev) => {
                    let mut worst = 0.0f64;
                    for (j, &y) in prev.ys.iter().enumerate() {
                        for (i, &x) in prev.xs.iter().enumerate() {
                            worst = worst.max((prev.at(i, j) - field.interp(x, y)).abs());
                        }
                    }
                    worst
                }
                None => f64::NAN,
            },
        };
        let order = match prev_err {
            Some(pe) if err > 0.0 && pe.is_finite() && err.is_finite() => (pe / err).log2(),
            _ => f64::NAN,
        };
        println!("{ny:>8} {err:>14.6e} {order:>8.2}");
        rows.push((ny as f64, err, order));
        prev_err = Some(err);
        prev_field = Some(field);
    }
    let mut text = String::from("ny,error,order\n");
    for (ny, err, order) in &rows {
        text += &format!("{},{},{}\n", fmt_f64(*ny), fmt_f64(*err), fmt_f64(*order));
    }
    std::fs::write(out.join("convergence.csv"), text)
        .map_err(|e| RunError::Numerical(format!("cannot write convergence.csv: {e}")))?;
    Ok(true)
}

pub fn run_identities(cfg: &RunConfig) -> Outcome {
    let params = cfg.problem_params()?;
    let results = battery::run_identities(&params)?;
    let mut all_pass = true;
    for r in &results {
        println!(
            "{:<36} {} (value {:.3e}, threshold {:.1e})",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.value,
            r.threshold
        );
        all_pass &= r.pass;
    }
    Ok(all_pass)
}
