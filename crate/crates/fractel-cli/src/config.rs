//! Run configuration: a single JSON file holding the problem constants,
//! analytic data expressions, grids, and tolerances.

use crate::expr::Expr;
use fractel::solver::{Func1, ProblemData, QuadConfig};
use fractel::ProblemParams;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub fd_grid: GridConfig,
    #[serde(default)]
    pub tolerances: TolConfig,
    /// Optional exact solution expression for convergence studies.
    #[serde(default)]
    pub exact: Option<String>,
    /// Evaluation request for the `gamma` command.
    #[serde(default)]
    pub gamma_orders: Vec<OrderSpec>,
    /// Source-point request for the `green` command.
    #[serde(default)]
    pub green_point: GreenPoint,
    /// Optional default command, overridden by the CLI subcommand.
    #[serde(default)]
    pub command: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Initial traces tau_1 (and tau_2 when alpha > 1), expressions in x.
    pub tau: Vec<String>,
    /// Boundary traces, expressions in y.
    pub phi1: String,
    pub phi2: String,
    /// Source term, expression in x and y.
    pub f: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            tau: vec!["0".into()],
            phi1: "0".into(),
            phi2: "0".into(),
            f: "0".into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: 21, ny: 21 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TolConfig {
    pub kernel_tol: f64,
    pub image_tol: f64,
    pub compat_tol: f64,
    /// "normal" or "high"
    pub quad: String,
    /// Verification gate for `solve`/`verify` (exit 1 beyond it).
    pub verify_tol: f64,
    /// Cross-method gate for `verify`.
    pub cross_tol: f64,
}

impl Default for TolConfig {
    fn default() -> Self {
        TolConfig {
            kernel_tol: 1e-8,
            image_tol: 1e-10,
            compat_tol: 1e-8,
            quad: "normal".into(),
            verify_tol: 5e-3,
            cross_tol: 1e-2,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderSpec {
    pub nu: f64,
    #[serde(default)]
    pub m: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenPoint {
    pub xi: f64,
    pub eta: f64,
    pub nu: f64,
    pub m: u32,
}

impl Default for GreenPoint {
    fn default() -> Self {
        GreenPoint {
            xi: 0.5,
            eta: 0.0,
            nu: 0.0,
            m: 0,
        }
    }
}

/// A configuration error message suitable for exit code 2.
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        if !(p.alpha > 0.0 && p.alpha < 2.0) {
            return Err(ConfigError(format!(
                "params.alpha must lie in (0, 2), got {}",
                p.alpha
            )));
        }
        if !(p.a1 < p.a2) {
            return Err(ConfigError(format!(
                "params require a1 < a2, got a1 = {}, a2 = {}",
                p.a1, p.a2
            )));
        }
        if !(p.t_max > 0.0) {
            return Err(ConfigError(format!("params.T must be positive, got {}", p.t_max)));
        }
        if !(self.tolerances.kernel_tol > 0.0 && self.tolerances.image_tol > 0.0) {
            return Err(ConfigError("tolerances must be positive".into()));
        }
        if self.grid.nx < 3 || self.grid.ny < 3 {
            return Err(ConfigError("grid needs nx, ny >= 3".into()));
        }
        match self.tolerances.quad.as_str() {
            "normal" | "high" => {}
            other => {
                return Err(ConfigError(format!(
                    "tolerances.quad must be \"normal\" or \"high\", got \"{other}\""
                )))
            }
        }
        let n = if p.alpha > 1.0 { 2 } else { 1 };
        if self.data.tau.len() != n {
            return Err(ConfigError(format!(
                "data.tau needs exactly {n} expression(s) for alpha = {}",
                p.alpha
            )));
        }
        Ok(())
    }

    pub fn problem_params(&self) -> Result<ProblemParams, ConfigError> {
        ProblemParams::new(
            self.params.alpha,
            self.params.b,
            self.params.c,
            self.params.a1,
            self.params.a2,
            self.params.t_max,
        )
        .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn quad_config(&self, tol_override: Option<f64>) -> QuadConfig {
        let mut q = if self.tolerances.quad == "high" {
            QuadConfig::high()
        } else {
            QuadConfig::normal()
        };
        // A tighter global tolerance upgrades the table fineness.
        if let Some(t) = tol_override {
            if t < 1e-9 {
                q.fine_tables = true;
            }
        }
        q
    }

    pub fn problem_data(&self) -> Result<ProblemData, ConfigError> {
        let params = self.problem_params()?;
        let parse1 = |src: &str, var_y: bool| -> Result<Box<Func1>, ConfigError> {
            let e = Expr::parse(src)
                .map_err(|er| ConfigError(format!("in expression '{src}': {er}")))?;
            Ok(if var_y {
                Box::new(move |y: f64| e.eval(0.0, y))
            } else {
                Box::new(move |x: f64| e.eval(x, 0.0))
            })
        };
        let mut tau: Vec<Box<Func1>> = Vec::new();
        for t in &self.data.tau {
            tau.push(parse1(t, false)?);
        }
        let phi1 = parse1(&self.data.phi1, true)?;
        let phi2 = parse1(&self.data.phi2, true)?;
        let fe = Expr::parse(&self.data.f)
            .map_err(|er| ConfigError(format!("in expression '{}': {er}", self.data.f)))?;
        ProblemData::with_compat_tol(
            params,
            tau,
            phi1,
            phi2,
            Box::new(move |x, y| fe.eval(x, y)),
            self.tolerances.compat_tol,
        )
        .map_err(|e| ConfigError(e.to_string()))
    }
}
