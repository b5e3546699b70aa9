//! The run configuration document (TOML) and its translation into library
//! objects.
//!
//! ```toml
//! name = "brownian_sde"
//!
//! [symbol]
//! kind = "sde"            # sde | stable_like | relativistic | zero
//! dim = 1
//! drift = ["0"]
//! sigma = [["x"]]         # rows of σ(x)
//! driver = { family = "brownian" }
//!
//! [schedule]
//! k_max = 9
//!
//! [simulation]
//! seed = 7
//! n_paths = 100
//!
//! [verify]
//! test_function = { kind = "smooth_cutoff", rho = 0.5 }
//! ```
//!
//! Every section other than `symbol` is optional and falls back to the
//! defaults below. Coefficients use the library's expression grammar.

use std::path::PathBuf;

use feller_core::checker::ProbeSchedule;
use feller_core::generator::{HermiteTerm, TestFunction};
use feller_core::simulator::StepConfig;
use feller_core::verifier::SimConfig;
use feller_core::{
    make_relativistic_symbol, make_sde_symbol, make_stable_like_symbol, ExponentFamily,
    MatrixField, ScalarField, SymbolField, VectorField,
};
use serde::{Deserialize, Serialize};

/// A configuration problem, located by its field path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub symbol: SymbolDecl,
    #[serde(default)]
    pub schedule: ScheduleDecl,
    #[serde(default)]
    pub simulation: SimulationDecl,
    #[serde(default)]
    pub verify: VerifyDecl,
    #[serde(default)]
    pub generator: GeneratorDecl,
    #[serde(default)]
    pub output: OutputDecl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolDecl {
    /// ℓ(x)·ξ-drift plus ψ(σ(x)ᵀξ) for a driver exponent ψ.
    Sde {
        dim: usize,
        drift: Vec<String>,
        sigma: Vec<Vec<String>>,
        driver: ExponentFamily,
    },
    /// φ(x)|ξ|^{α(x)}.
    StableLike {
        dim: usize,
        phi: String,
        alpha: String,
    },
    /// κ(x)[(|ξ|² + m(x)²)^{α(x)/2} − m(x)^{α(x)}].
    Relativistic {
        dim: usize,
        kappa: String,
        m: String,
        alpha: String,
    },
    Zero {
        dim: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDecl {
    /// Probe radii 2^k for k = 0..=k_max.
    #[serde(default = "d_k_max")]
    pub k_max: u32,
    #[serde(default = "d_two")]
    pub n_directions: usize,
    #[serde(default = "d_xi_samples")]
    pub xi_samples: usize,
    /// Ball radii r for ν(x, B(−x, r)).
    #[serde(default = "d_mapping_radii")]
    pub mapping_radii: Vec<f64>,
    /// Radii of the compact balls for local boundedness.
    #[serde(default = "d_compacts")]
    pub compacts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDecl {
    /// Mandatory for `simulate` and `verify`, unless given by `--seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_one")]
    pub horizon: f64,
    #[serde(default = "d_paths")]
    pub n_paths: usize,
    #[serde(default = "d_r_max")]
    pub r_max: f64,
    #[serde(default = "d_dt")]
    pub delta: f64,
    /// Start state; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Write every grid state, or only the endpoints of each path.
    #[serde(default = "d_true")]
    pub record_all: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Largest probe radius for the λ estimate; defaults to min(1e4, r_max).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunctionDecl {
    GaussianBump {
        center: Vec<f64>,
        width: f64,
    },
    PolynomialTimesGaussian {
        center: Vec<f64>,
        width: f64,
        terms: Vec<TermDecl>,
    },
    SmoothCutoff {
        rho: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDecl {
    pub coef: f64,
    pub orders: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyDecl {
    /// Compactly supported test function for the vanishing check.
    #[serde(default = "d_cutoff")]
    pub test_function: TestFunctionDecl,
    #[serde(default = "d_half")]
    pub t: f64,
    #[serde(default = "d_eps")]
    pub eps: f64,
    #[serde(default = "d_vanishing_radii")]
    pub vanishing_radii: Vec<f64>,
    #[serde(default = "d_paths_verify")]
    pub n_paths: usize,
    #[serde(default = "d_starts")]
    pub containment_starts: Vec<Vec<f64>>,
    #[serde(default = "d_containment_radii")]
    pub containment_radii: Vec<f64>,
    #[serde(default = "d_one")]
    pub containment_t: f64,
    /// Test function for the generator-consistency check.
    #[serde(default = "d_bump")]
    pub generator_function: TestFunctionDecl,
    #[serde(default = "d_points")]
    pub generator_points: Vec<Vec<f64>>,
    #[serde(default = "d_dt")]
    pub h: f64,
    #[serde(default = "d_generator_paths")]
    pub generator_paths: usize,
    /// The O(h) bias allowance is `bias_per_h · h`.
    #[serde(default = "d_bias")]
    pub bias_per_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Characteristics,
    Fourier,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDecl {
    #[serde(default = "d_bump")]
    pub test_function: TestFunctionDecl,
    /// Evaluation points.
    #[serde(default = "d_generator_grid")]
    pub points: Vec<Vec<f64>>,
    #[serde(default = "d_route")]
    pub route: Route,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDecl {
    #[serde(default = "d_out")]
    pub dir: PathBuf,
}

fn d_k_max() -> u32 {
    9
}
fn d_two() -> usize {
    2
}
fn d_xi_samples() -> usize {
    8
}
fn d_mapping_radii() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn d_compacts() -> Vec<f64> {
    vec![1.0, 4.0]
}
fn d_dt() -> f64 {
    1e-3
}
fn d_one() -> f64 {
    1.0
}
fn d_half() -> f64 {
    0.5
}
fn d_paths() -> usize {
    100
}
fn d_r_max() -> f64 {
    1e6
}
fn d_true() -> bool {
    true
}
fn d_cutoff() -> TestFunctionDecl {
    TestFunctionDecl::SmoothCutoff { rho: 0.5 }
}
fn d_bump() -> TestFunctionDecl {
    TestFunctionDecl::GaussianBump {
        center: vec![0.0],
        width: 1.0,
    }
}
fn d_eps() -> f64 {
    0.01
}
fn d_vanishing_radii() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 40.0]
}
fn d_paths_verify() -> usize {
    2000
}
fn d_starts() -> Vec<Vec<f64>> {
    vec![vec![-1.0], vec![0.0], vec![1.0]]
}
fn d_containment_radii() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0]
}
fn d_points() -> Vec<Vec<f64>> {
    vec![vec![0.0]]
}
fn d_generator_paths() -> usize {
    100_000
}
fn d_bias() -> f64 {
    5.0
}
fn d_generator_grid() -> Vec<Vec<f64>> {
    (0..=20).map(|k| vec![-2.0 + 0.2 * k as f64]).collect()
}
fn d_route() -> Route {
    Route::Both
}
fn d_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ScheduleDecl {
    fn default() -> Self {
        ScheduleDecl {
            k_max: d_k_max(),
            n_directions: d_two(),
            xi_samples: d_xi_samples(),
            mapping_radii: d_mapping_radii(),
            compacts: d_compacts(),
        }
    }
}

impl Default for SimulationDecl {
    fn default() -> Self {
        SimulationDecl {
            seed: None,
            dt: d_dt(),
            horizon: d_one(),
            n_paths: d_paths(),
            r_max: d_r_max(),
            delta: d_dt(),
            x0: None,
            record_all: true,
            lambda: None,
            intensity_radius: None,
        }
    }
}

impl Default for VerifyDecl {
    fn default() -> Self {
        VerifyDecl {
            test_function: d_cutoff(),
            t: d_half(),
            eps: d_eps(),
            vanishing_radii: d_vanishing_radii(),
            n_paths: d_paths_verify(),
            containment_starts: d_starts(),
            containment_radii: d_containment_radii(),
            containment_t: d_one(),
            generator_function: d_bump(),
            generator_points: d_points(),
            h: d_dt(),
            generator_paths: d_generator_paths(),
            bias_per_h: d_bias(),
        }
    }
}

impl Default for GeneratorDecl {
    fn default() -> Self {
        GeneratorDecl {
            test_function: d_bump(),
            points: d_generator_grid(),
            route: d_route(),
        }
    }
}

impl Default for OutputDecl {
    fn default() -> Self {
        OutputDecl { dir: d_out() }
    }
}

fn expr(field: &str, src: &str) -> Result<ScalarField, ConfigError> {
    ScalarField::parse(src).map_err(|e| field_err(field, e))
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn increasing(field: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() {
        return Err(field_err(field, "must not be empty"));
    }
    for (k, r) in v.iter().enumerate() {
        positive(&format!("{field}[{k}]"), *r)?;
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(field_err(field, "must be strictly increasing"));
    }
    Ok(())
}

fn point(field: &str, x: &[f64], dim: usize) -> Result<(), ConfigError> {
    if x.len() != dim {
        return Err(field_err(
            field,
            format!("expected {dim} coordinates, got {}", x.len()),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(field_err(field, "coordinates must be finite"));
    }
    Ok(())
}

impl SymbolDecl {
    pub fn dim(&self) -> usize {
        match self {
            SymbolDecl::Sde { dim, .. }
            | SymbolDecl::StableLike { dim, .. }
            | SymbolDecl::Relativistic { dim, .. }
            | SymbolDecl::Zero { dim } => *dim,
        }
    }

    pub fn build(&self) -> Result<SymbolField, ConfigError> {
        let dim = self.dim();
        if dim == 0 {
            return Err(field_err("symbol.dim", "must be at least 1"));
        }
        match self {
            SymbolDecl::Sde {
                drift,
                sigma,
                driver,
                ..
            } => {
                if drift.len() != dim {
                    return Err(field_err(
                        "symbol.drift",
                        format!("expected {dim} components, got {}", drift.len()),
                    ));
                }
                let drift = drift
                    .iter()
                    .enumerate()
                    .map(|(k, s)| expr(&format!("symbol.drift[{k}]"), s))
                    .collect::<Result<Vec<_>, _>>()?;
                if sigma.len() != dim {
                    return Err(field_err(
                        "symbol.sigma",
                        format!("expected {dim} rows, got {}", sigma.len()),
                    ));
                }
                let cols = sigma[0].len();
                let mut entries = Vec::new();
                for (i, row) in sigma.iter().enumerate() {
                    if row.len() != cols || cols == 0 {
                        return Err(field_err(
                            format!("symbol.sigma[{i}]"),
                            "rows must have one common, non-zero length",
                        ));
                    }
                    for (j, s) in row.iter().enumerate() {
                        entries.push(expr(&format!("symbol.sigma[{i}][{j}]"), s)?);
                    }
                }
                let sigma = MatrixField::new(dim, cols, entries)
                    .map_err(|e| field_err("symbol.sigma", e))?;
                make_sde_symbol(VectorField::new(drift), sigma, driver.clone())
                    .map_err(|e| field_err("symbol", e))
            }
            SymbolDecl::StableLike { phi, alpha, .. } => {
                make_stable_like_symbol(dim, expr("symbol.phi", phi)?, expr("symbol.alpha", alpha)?)
                    .map_err(|e| field_err("symbol", e))
            }
            SymbolDecl::Relativistic {
                kappa, m, alpha, ..
            } => make_relativistic_symbol(
                dim,
                expr("symbol.kappa", kappa)?,
                expr("symbol.m", m)?,
                expr("symbol.alpha", alpha)?,
            )
            .map_err(|e| field_err("symbol", e)),
            SymbolDecl::Zero { .. } => Ok(SymbolField::zero(dim)),
        }
    }
}

impl TestFunctionDecl {
    pub fn build(&self, field: &str, dim: usize) -> Result<TestFunction, ConfigError> {
        let f = match self {
            TestFunctionDecl::GaussianBump { center, width } => {
                point(&format!("{field}.center"), center, dim)?;
                TestFunction::gaussian_bump(center.clone(), *width)
            }
            TestFunctionDecl::PolynomialTimesGaussian {
                center,
                width,
                terms,
            } => {
                point(&format!("{field}.center"), center, dim)?;
                let terms = terms
                    .iter()
                    .map(|t| HermiteTerm {
                        coef: t.coef,
                        orders: t.orders.clone(),
                    })
                    .collect();
                TestFunction::polynomial_times_gaussian(center.clone(), *width, terms)
            }
            TestFunctionDecl::SmoothCutoff { rho } => TestFunction::smooth_cutoff(dim, *rho),
        };
        f.map_err(|e| field_err(field, e))
    }
}

impl ScheduleDecl {
    pub fn build(&self, dim: usize) -> Result<ProbeSchedule, ConfigError> {
        if self.k_max < 2 {
            return Err(field_err(
                "schedule.k_max",
                "at least 3 radii are needed for a trend",
            ));
        }
        if dim >= 2 && self.n_directions < 2 {
            return Err(field_err(
                "schedule.n_directions",
                "at least 2 directions are needed in d ≥ 2",
            ));
        }
        if self.xi_samples == 0 {
            return Err(field_err("schedule.xi_samples", "must be at least 1"));
        }
        increasing("schedule.mapping_radii", &self.mapping_radii)?;
        increasing("schedule.compacts", &self.compacts)?;
        let s = ProbeSchedule::geometric(dim, self.k_max, self.n_directions, self.xi_samples);
        s.validate().map_err(|e| field_err("schedule", e))?;
        Ok(s)
    }
}

impl SimulationDecl {
    /// The step configuration, with `record_all` from the config.
    pub fn step(&self) -> Result<StepConfig, ConfigError> {
        positive("simulation.dt", self.dt)?;
        positive("simulation.horizon", self.horizon)?;
        positive("simulation.r_max", self.r_max)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(field_err(
                "simulation.delta",
                format!("must lie in (0, 1), got {}", self.delta),
            ));
        }
        if self.dt > self.horizon {
            return Err(field_err("simulation.dt", "must not exceed the horizon"));
        }
        Ok(StepConfig {
            horizon: self.horizon,
            dt: self.dt,
            r_max: self.r_max,
            delta: self.delta,
            record_all: self.record_all,
        })
    }

    pub fn sim(&self, seed: u64) -> Result<SimConfig, ConfigError> {
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(field_err(
                    "simulation.lambda",
                    format!("must be finite and non-negative, got {l}"),
                ));
            }
        }
        let mut sim = SimConfig {
            step: self.step()?,
            seed,
            lambda: self.lambda,
            ..SimConfig::default()
        };
        if let Some(r) = self.intensity_radius {
            positive("simulation.intensity_radius", r)?;
            sim.intensity_radius = r;
        }
        Ok(sim)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Syntax(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs serialize")
    }

    /// Checks every section that does not depend on the subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let dim = self.symbol.dim();
        self.symbol.build()?;
        self.schedule.build(dim)?;
        self.simulation.step()?;
        if self.simulation.n_paths == 0 {
            return Err(field_err("simulation.n_paths", "must be at least 1"));
        }
        if let Some(x0) = &self.simulation.x0 {
            point("simulation.x0", x0, dim)?;
        }
        let v = &self.verify;
        v.test_function.build("verify.test_function", dim)?;
        v.generator_function
            .build("verify.generator_function", dim)?;
        positive("verify.t", v.t)?;
        positive("verify.containment_t", v.containment_t)?;
        positive("verify.h", v.h)?;
        if !(v.eps > 0.0 && v.eps < 1.0) {
            return Err(field_err(
                "verify.eps",
                format!("must lie in (0, 1), got {}", v.eps),
            ));
        }
        if !(v.bias_per_h >= 0.0 && v.bias_per_h.is_finite()) {
            return Err(field_err(
                "verify.bias_per_h",
                "must be finite and non-negative",
            ));
        }
        for (name, n) in [
            ("verify.n_paths", v.n_paths),
            ("verify.generator_paths", v.generator_paths),
        ] {
            if n < 100 {
                return Err(field_err(name, format!("must be at least 100, got {n}")));
            }
        }
        increasing("verify.vanishing_radii", &v.vanishing_radii)?;
        increasing("verify.containment_radii", &v.containment_radii)?;
        for (k, x) in v.containment_starts.iter().enumerate() {
            point(&format!("verify.containment_starts[{k}]"), x, dim)?;
        }
        for (k, x) in v.generator_points.iter().enumerate() {
            point(&format!("verify.generator_points[{k}]"), x, dim)?;
        }
        self.generator
            .test_function
            .build("generator.test_function", dim)?;
        for (k, x) in self.generator.points.iter().enumerate() {
            point(&format!("generator.points[{k}]"), x, dim)?;
        }
        Ok(())
    }

    pub fn x0(&self) -> Vec<f64> {
        self.simulation
            .x0
            .clone()
            .unwrap_or_else(|| vec![0.0; self.symbol.dim()])
    }
}
