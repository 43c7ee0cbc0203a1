//! Experiment configuration, registry and CSV emission.
//!
//! A config is a TOML file with a top-level `experiment` name, a `[params]`
//! table (alpha, beta, r0), an optional `[grid]` table for the transform
//! grids and an `[options]` table whose keys depend on the experiment.
//! Unknown keys are rejected everywhere. Running an experiment writes
//! `<name>.csv` (result table) and `<name>_plot.csv` (long-format plot
//! data), both carrying the config hash and library version.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::jacobi::{c_asymptotic_fit, log_grid, JacobiParams, DEFAULT_R0};
use crate::multiplier::{
    convergence_experiment, default_r_schedule, endpoint_growth, kernel_bound_check, maximal, Region,
};
use crate::report::{fmt_float, ExperimentReport};
use crate::series::{
    bessel_envelope, gangolli_fit, hc_a_coefficient, hc_b_coefficient, hc_coeffs, hc_coeffs_alt, phi_bessel, phi_hc,
};
use crate::transform::{
    lorentz_norm, lp_norm, make_radial_grid, make_spectral_grid, JacobiTransform, Normalization, TestFunction,
    DEFAULT_LAMBDA_MAX, DEFAULT_NODES_PER_PANEL, DEFAULT_RADIAL_PANELS_PER_UNIT, DEFAULT_SPECTRAL_PANELS_PER_UNIT,
    DEFAULT_T_MAX,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Compute(#[from] Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("experiment {experiment} failed: {}", failed.join("; "))]
    Failed { experiment: String, failed: Vec<String> },
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "phi-cross-check",
        description: "2F1 route against the local Bessel (t <= R0) and Harish-Chandra (t > R0) expansions at random (lambda, t)",
    },
    ExperimentInfo {
        name: "c-asymptotics",
        description: "growth exponent and expansion residual of |c|^-2, log-derivative bounds of c",
    },
    ExperimentInfo {
        name: "hc-gangolli",
        description: "agreement of the two Gamma_k recursions, polynomial growth fit, beta = -1/2 product form",
    },
    ExperimentInfo {
        name: "plancherel",
        description: "round-trip constant, shape defect and Plancherel norm ratio for smooth bumps",
    },
    ExperimentInfo {
        name: "convergence-sweep",
        description: "L^p and pointwise errors of S_R f as R grows, for smooth and discontinuous f",
    },
    ExperimentInfo {
        name: "kernel-bounds",
        description: "maxima of |K_R|/bound over region grids as R doubles",
    },
    ExperimentInfo {
        name: "endpoint-growth",
        description: "endpoint functional against (log R)^(1/p0') with a linear regression",
    },
    ExperimentInfo {
        name: "lorentz-norms",
        description: "||S_* f|| / ||f|| in L^p and Lorentz norms for f supported in [0, R0], p across p0 and p1",
    },
];

/// Registered experiment names with one-line descriptions.
pub fn list_experiments() -> String {
    let width = EXPERIMENTS.iter().map(|e| e.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for e in EXPERIMENTS {
        writeln!(s, "{:width$}  {}", e.name, e.description).unwrap();
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
}

fn default_r0() -> f64 {
    DEFAULT_R0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub t_max: f64,
    pub lambda_max: f64,
    pub radial_panels_per_unit: usize,
    pub spectral_panels_per_unit: usize,
    pub nodes_per_panel: usize,
    pub normalization: String,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_max: DEFAULT_T_MAX,
            lambda_max: DEFAULT_LAMBDA_MAX,
            radial_panels_per_unit: DEFAULT_RADIAL_PANELS_PER_UNIT,
            spectral_panels_per_unit: DEFAULT_SPECTRAL_PANELS_PER_UNIT,
            nodes_per_panel: DEFAULT_NODES_PER_PANEL,
            normalization: Normalization::Unitary.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    #[serde(default)]
    output_dir: Option<String>,
    params: ParamsConfig,
    #[serde(default)]
    grid: GridConfig,
    #[serde(default)]
    options: toml::Table,
}

/// Test function as written in a config: `{ kind = "bump", sigma, center }`
/// or `{ kind = "indicator", a, b }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionSpec {
    Bump { sigma: f64, center: f64 },
    Indicator { a: f64, b: f64 },
}

impl FunctionSpec {
    fn validate(&self, t_max: f64) -> HarnessResult<TestFunction> {
        match *self {
            FunctionSpec::Bump { sigma, center } => {
                if !(sigma > 0.0 && center >= 0.0 && center < t_max) {
                    return Err(config_err(format!("options.functions: bump needs sigma > 0 and 0 <= center < t_max, got sigma={sigma}, center={center}")));
                }
                Ok(TestFunction::Bump { sigma, center })
            }
            FunctionSpec::Indicator { a, b } => {
                if !(0.0 <= a && a < b && b <= t_max) {
                    return Err(config_err(format!("options.functions: indicator needs 0 <= a < b <= t_max, got a={a}, b={b}")));
                }
                Ok(TestFunction::Indicator { a, b })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiCrossOptions {
    pub samples: usize,
    pub seed: u64,
    pub lambda_range: [f64; 2],
    pub t_range: [f64; 2],
    pub bessel_order: usize,
    pub tolerance: f64,
}

impl Default for PhiCrossOptions {
    fn default() -> Self {
        Self { samples: 500, seed: 7, lambda_range: [0.5, 50.0], t_range: [0.01, 8.0], bessel_order: 3, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CAsymptoticsOptions {
    pub lambda_range: [f64; 2],
    pub points: usize,
    pub order: usize,
    pub growth_tolerance: f64,
    pub expected_gain: f64,
    pub gain_tolerance: f64,
    pub log_derivative_range: [f64; 2],
    pub log_derivative_points: usize,
    pub max_variation: f64,
    pub finite_difference_tolerance: f64,
}

impl Default for CAsymptoticsOptions {
    fn default() -> Self {
        Self {
            lambda_range: [1e2, 1e5],
            points: 64,
            order: 3,
            growth_tolerance: 0.02,
            expected_gain: 2.0,
            gain_tolerance: 0.3,
            log_derivative_range: [1.0, 1e4],
            log_derivative_points: 41,
            max_variation: 10.0,
            finite_difference_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HcGangolliOptions {
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
    pub lambda_range: [f64; 2],
    pub tolerance: f64,
    pub gangolli_lambdas: Vec<f64>,
    pub gangolli_k: usize,
    pub product_alpha: f64,
    pub product_lambdas: Vec<f64>,
    pub product_k: usize,
    pub product_tolerance: f64,
}

impl Default for HcGangolliOptions {
    fn default() -> Self {
        Self {
            k: 100,
            samples: 50,
            seed: 11,
            lambda_range: [0.5, 50.0],
            tolerance: 1e-10,
            gangolli_lambdas: vec![1.0, 10.0, 40.0],
            gangolli_k: 800,
            product_alpha: 1.5,
            product_lambdas: vec![0.5, 4.0, 30.0],
            product_k: 100,
            product_tolerance: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlancherelOptions {
    /// (sigma, center) pairs
    pub bumps: Vec<[f64; 2]>,
    pub tolerance: f64,
    pub doubling_check: bool,
    pub doubling_tolerance: f64,
}

impl Default for PlancherelOptions {
    fn default() -> Self {
        Self {
            bumps: vec![[0.5, 2.0], [0.3, 1.5], [0.8, 3.0]],
            tolerance: 1e-3,
            doubling_check: false,
            doubling_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceOptions {
    pub functions: Vec<FunctionSpec>,
    /// defaults to [p0 + 0.05, 2]
    pub p_values: Option<Vec<f64>>,
    pub r_schedule: Vec<f64>,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            functions: vec![
                FunctionSpec::Bump { sigma: 0.5, center: 2.0 },
                FunctionSpec::Indicator { a: 1.0, b: 2.0 },
            ],
            p_values: None,
            r_schedule: vec![2.5, 5.0, 10.0, 20.0, 40.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelBoundsOptions {
    pub regions: Vec<String>,
    /// regions reported without a pass/fail check
    pub tabulate: Vec<String>,
    pub cutoffs: Vec<f64>,
    pub small: Vec<f64>,
    pub large: Vec<f64>,
}

impl Default for KernelBoundsOptions {
    fn default() -> Self {
        Self {
            regions: vec!["A3".into(), "A4".into()],
            tabulate: vec!["A1".into()],
            cutoffs: vec![2.0, 5.0, 10.0, 20.0],
            small: vec![0.05, 0.15, 0.3, 0.5],
            large: vec![3.0, 4.0, 6.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointOptions {
    pub cutoffs: Vec<f64>,
}

impl Default for EndpointOptions {
    fn default() -> Self {
        Self { cutoffs: (2..=9).map(|k| 2f64.powi(k)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LorentzOptions {
    pub function: FunctionSpec,
    /// defaults to p0 ± 0.1, p0, 2, p1 ± 0.1, p1
    pub p_values: Option<Vec<f64>>,
    /// q = 0 stands for the weak norm q = ∞
    pub q_values: Vec<f64>,
    pub r_schedule: Option<Vec<f64>>,
}

impl Default for LorentzOptions {
    fn default() -> Self {
        Self {
            function: FunctionSpec::Indicator { a: 0.2, b: 0.9 },
            p_values: None,
            q_values: vec![1.0, 0.0],
            r_schedule: None,
        }
    }
}

/// Options of one registered experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOptions {
    PhiCross(PhiCrossOptions),
    CAsymptotics(CAsymptoticsOptions),
    HcGangolli(HcGangolliOptions),
    Plancherel(PlancherelOptions),
    Convergence(ConvergenceOptions),
    KernelBounds(KernelBoundsOptions),
    Endpoint(EndpointOptions),
    Lorentz(LorentzOptions),
}

impl ExperimentOptions {
    fn parse(name: &str, table: toml::Table) -> HarnessResult<Self> {
        fn typed<T: DeserializeOwned>(table: toml::Table) -> HarnessResult<T> {
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| config_err(format!("options: {e}")))
        }
        Ok(match name {
            "phi-cross-check" => Self::PhiCross(typed(table)?),
            "c-asymptotics" => Self::CAsymptotics(typed(table)?),
            "hc-gangolli" => Self::HcGangolli(typed(table)?),
            "plancherel" => Self::Plancherel(typed(table)?),
            "convergence-sweep" => Self::Convergence(typed(table)?),
            "kernel-bounds" => Self::KernelBounds(typed(table)?),
            "endpoint-growth" => Self::Endpoint(typed(table)?),
            "lorentz-norms" => Self::Lorentz(typed(table)?),
            _ => {
                let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
                return Err(config_err(format!("experiment: unknown experiment `{name}`; expected one of {}", names.join(", "))));
            }
        })
    }

    fn to_table(&self) -> toml::Table {
        fn table<T: Serialize>(v: &T) -> toml::Table {
            match toml::Value::try_from(v).expect("options serialize") {
                toml::Value::Table(t) => t,
                _ => unreachable!("options are structs"),
            }
        }
        match self {
            Self::PhiCross(o) => table(o),
            Self::CAsymptotics(o) => table(o),
            Self::HcGangolli(o) => table(o),
            Self::Plancherel(o) => table(o),
            Self::Convergence(o) => table(o),
            Self::KernelBounds(o) => table(o),
            Self::Endpoint(o) => table(o),
            Self::Lorentz(o) => table(o),
        }
    }
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub output_dir: Option<PathBuf>,
    pub params: JacobiParams,
    pub grid: GridConfig,
    pub normalization: Normalization,
    pub options: ExperimentOptions,
}

/// Everything that determines the numbers; hashed for provenance.
#[derive(Serialize)]
struct CanonicalConfig<'a> {
    experiment: &'a str,
    params: ParamsConfig,
    grid: &'a GridConfig,
    options: toml::Table,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> HarnessResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let params = JacobiParams::with_r0(raw.params.alpha, raw.params.beta, raw.params.r0)
            .map_err(|e| config_err(format!("params: {e}")))?;
        let normalization =
            Normalization::parse(&raw.grid.normalization).map_err(|e| config_err(format!("grid: {e}")))?;
        let g = &raw.grid;
        if !(g.t_max > 1.0 && g.t_max.is_finite()) {
            return Err(config_err(format!("grid.t_max must be finite and above 1, got {}", g.t_max)));
        }
        if !(g.lambda_max > 0.0 && g.lambda_max.is_finite()) {
            return Err(config_err(format!("grid.lambda_max must be positive, got {}", g.lambda_max)));
        }
        for (key, v) in [
            ("radial_panels_per_unit", g.radial_panels_per_unit),
            ("spectral_panels_per_unit", g.spectral_panels_per_unit),
            ("nodes_per_panel", g.nodes_per_panel),
        ] {
            if v == 0 {
                return Err(config_err(format!("grid.{key} must be positive")));
            }
        }
        let options = ExperimentOptions::parse(&raw.experiment, raw.options)?;
        let cfg = Self {
            experiment: raw.experiment,
            output_dir: raw.output_dir.map(PathBuf::from),
            params,
            grid: raw.grid,
            normalization,
            options,
        };
        cfg.validate_options()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    /// Default configuration of a registered experiment at (α, β) = (1.3, 0.2).
    pub fn default_for(experiment: &str) -> HarnessResult<Self> {
        Self::from_toml_str(&format!("experiment = \"{experiment}\"\n[params]\nalpha = 1.3\nbeta = 0.2\n"))
    }

    /// Canonical TOML of everything that affects the numbers (not the output
    /// directory), with defaults filled in.
    pub fn canonical(&self) -> String {
        let c = CanonicalConfig {
            experiment: &self.experiment,
            params: ParamsConfig { alpha: self.params.alpha, beta: self.params.beta, r0: self.params.r0 },
            grid: &self.grid,
            options: self.options.to_table(),
        };
        toml::to_string(&c).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    fn validate_options(&self) -> HarnessResult<()> {
        let range = |key: &str, r: [f64; 2], lo: f64| -> HarnessResult<()> {
            if !(r[0] >= lo && r[1] > r[0] && r[1].is_finite()) {
                return Err(config_err(format!("options.{key} must be an increasing pair above {lo}, got {r:?}")));
            }
            Ok(())
        };
        let increasing = |key: &str, v: &[f64]| -> HarnessResult<()> {
            if v.is_empty() || v[0] <= 0.0 || v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_err(format!("options.{key} must be a non-empty increasing list of positive values")));
            }
            Ok(())
        };
        match &self.options {
            ExperimentOptions::PhiCross(o) => {
                range("lambda_range", o.lambda_range, 0.0)?;
                range("t_range", o.t_range, 0.0)?;
                if o.lambda_range[0] == 0.0 || o.t_range[0] == 0.0 {
                    return Err(config_err("options.lambda_range and options.t_range must start above 0"));
                }
                if o.samples == 0 || o.bessel_order > crate::series::MAX_ORDER {
                    return Err(config_err("options.samples must be positive and options.bessel_order at most 6"));
                }
            }
            ExperimentOptions::CAsymptotics(o) => {
                range("lambda_range", o.lambda_range, 1.0)?;
                range("log_derivative_range", o.log_derivative_range, 0.0)?;
                if o.order == 0 || o.points < o.order + 4 || o.log_derivative_points < 2 {
                    return Err(config_err("options.order must be positive with points >= order + 4"));
                }
            }
            ExperimentOptions::HcGangolli(o) => {
                range("lambda_range", o.lambda_range, 0.0)?;
                if o.lambda_range[0] == 0.0 || o.k == 0 || o.samples == 0 {
                    return Err(config_err("options.lambda_range must avoid 0; options.k and options.samples positive"));
                }
                if o.gangolli_k < 8 || o.gangolli_lambdas.contains(&0.0) {
                    return Err(config_err("options.gangolli_k must be at least 8 and gangolli_lambdas avoid 0"));
                }
                JacobiParams::with_r0(o.product_alpha, -0.5, self.params.r0)
                    .map_err(|e| config_err(format!("options.product_alpha: {e}")))?;
            }
            ExperimentOptions::Plancherel(o) => {
                if o.bumps.is_empty() {
                    return Err(config_err("options.bumps must not be empty"));
                }
                for b in &o.bumps {
                    FunctionSpec::Bump { sigma: b[0], center: b[1] }.validate(self.grid.t_max)?;
                }
            }
            ExperimentOptions::Convergence(o) => {
                if o.functions.is_empty() {
                    return Err(config_err("options.functions must not be empty"));
                }
                for f in &o.functions {
                    f.validate(self.grid.t_max)?;
                }
                for p in o.p_values.iter().flatten() {
                    if !(*p > 1.0 && *p <= 2.0) {
                        return Err(config_err(format!("options.p_values: need p in (1, 2], got {p}")));
                    }
                }
                increasing("r_schedule", &o.r_schedule)?;
                if o.r_schedule.iter().chain(&[40.0]).any(|&r| r > self.grid.lambda_max) {
                    return Err(config_err("options.r_schedule (and R = 40) must not exceed grid.lambda_max"));
                }
            }
            ExperimentOptions::KernelBounds(o) => {
                for r in o.regions.iter().chain(&o.tabulate) {
                    Region::parse(r).map_err(|e| config_err(format!("options.regions: {e}")))?;
                }
                increasing("cutoffs", &o.cutoffs)?;
                increasing("small", &o.small)?;
                increasing("large", &o.large)?;
                if o.cutoffs.last().unwrap() > &self.grid.lambda_max {
                    return Err(config_err("options.cutoffs must not exceed grid.lambda_max"));
                }
            }
            ExperimentOptions::Endpoint(o) => {
                increasing("cutoffs", &o.cutoffs)?;
                if o.cutoffs[0] < 2.0 {
                    return Err(config_err("options.cutoffs must be at least 2"));
                }
            }
            ExperimentOptions::Lorentz(o) => {
                o.function.validate(self.grid.t_max)?;
                for p in o.p_values.iter().flatten() {
                    if !(*p > 1.0 && p.is_finite()) {
                        return Err(config_err(format!("options.p_values: need 1 < p < ∞, got {p}")));
                    }
                }
                if o.q_values.iter().any(|&q| q < 0.0) {
                    return Err(config_err("options.q_values must be positive (0 for the weak norm)"));
                }
                if let Some(s) = &o.r_schedule {
                    increasing("r_schedule", s)?;
                    if s.last().unwrap() > &self.grid.lambda_max {
                        return Err(config_err("options.r_schedule must not exceed grid.lambda_max"));
                    }
                }
            }
        }
        Ok(())
    }

    /// The Jacobi transform on the configured grids, each density multiplied
    /// by `refine`.
    pub fn transform(&self, refine: usize) -> crate::Result<JacobiTransform> {
        let g = &self.grid;
        let r = make_radial_grid(&self.params, g.t_max, g.radial_panels_per_unit * refine, g.nodes_per_panel)?;
        let s = make_spectral_grid(
            &self.params,
            g.lambda_max,
            g.spectral_panels_per_unit * refine,
            g.nodes_per_panel,
            self.normalization,
        )?;
        JacobiTransform::new(self.params, Arc::new(r), Arc::new(s))
    }
}

fn base_report(cfg: &ExperimentConfig, columns: &[&str]) -> ExperimentReport {
    let mut rep = ExperimentReport::new(&cfg.experiment, columns);
    rep.meta("alpha", fmt_float(cfg.params.alpha));
    rep.meta("beta", fmt_float(cfg.params.beta));
    rep.meta("r0", fmt_float(cfg.params.r0));
    rep
}

/// Runs the configured experiment and returns its report without writing
/// anything.
pub fn run_experiment(cfg: &ExperimentConfig) -> HarnessResult<ExperimentReport> {
    Ok(match &cfg.options {
        ExperimentOptions::PhiCross(o) => phi_cross_check(cfg, o)?,
        ExperimentOptions::CAsymptotics(o) => c_asymptotics(cfg, o)?,
        ExperimentOptions::HcGangolli(o) => hc_gangolli(cfg, o)?,
        ExperimentOptions::Plancherel(o) => plancherel(cfg, o)?,
        ExperimentOptions::Convergence(o) => convergence(cfg, o)?,
        ExperimentOptions::KernelBounds(o) => kernel_bounds(cfg, o)?,
        ExperimentOptions::Endpoint(o) => endpoint(cfg, o)?,
        ExperimentOptions::Lorentz(o) => lorentz(cfg, o)?,
    })
}

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub table_path: PathBuf,
    pub plot_path: PathBuf,
}

/// Runs the experiment, writes `<name>.csv` and `<name>_plot.csv` into
/// `out_dir` (or the configured directory, or `out`), and fails with the
/// failed checks after writing if any check did not pass.
pub fn run(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> HarnessResult<RunOutput> {
    let report = run_experiment(cfg)?;
    let dir = out_dir.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| "out".into());
    std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Io { path: dir.clone(), source })?;
    let hash = cfg.hash();
    let table_path = dir.join(format!("{}.csv", cfg.experiment));
    let plot_path = dir.join(format!("{}_plot.csv", cfg.experiment));
    for (path, text) in [(&table_path, report.to_csv(&hash)), (&plot_path, report.plot_csv(&hash))] {
        std::fs::write(path, text).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
    }
    if !report.passed() {
        let failed = report.failed_checks().iter().map(|c| format!("{} ({})", c.name, c.detail)).collect();
        return Err(HarnessError::Failed { experiment: cfg.experiment.clone(), failed });
    }
    Ok(RunOutput { report, table_path, plot_path })
}

fn phi_cross_check(cfg: &ExperimentConfig, o: &PhiCrossOptions) -> HarnessResult<ExperimentReport> {
    let p = &cfg.params;
    let mut rep = base_report(cfg, &["lambda", "t", "route", "phi_2f1", "phi_expansion", "abs_diff", "rel_diff"]);
    rep.meta("seed", o.seed);
    rep.meta("bessel_order", o.bessel_order);
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut worst = [0.0f64; 2];
    for _ in 0..o.samples {
        let l = rng.random_range(o.lambda_range[0]..o.lambda_range[1]);
        let t = rng.random_range(o.t_range[0]..o.t_range[1]);
        let exact = p.phi_real(l, t)?;
        // relative to the local amplitude of φ, so zeros of φ do not count
        let (route, approx, amplitude, k) = if t <= p.r0 {
            ("bessel", phi_bessel(p, l, t, o.bessel_order)?, bessel_envelope(p, l, t), 0)
        } else {
            let c = p.c_function(Complex64::new(l, 0.0))?;
            ("harish-chandra", phi_hc(p, l, t)?, 2.0 * c.norm() * (-p.rho * t).exp(), 1)
        };
        let d = (exact - approx).abs();
        let rel = d / exact.abs().max(amplitude);
        worst[k] = worst[k].max(rel);
        rep.push_row(vec![l.into(), t.into(), route.into(), exact.into(), approx.into(), d.into(), rel.into()]);
        rep.point(route, t, rel);
    }
    rep.meta("max_rel_bessel", fmt_float(worst[0]));
    rep.meta("max_rel_harish_chandra", fmt_float(worst[1]));
    let m = worst[0].max(worst[1]);
    rep.check(
        "cross-route",
        m < o.tolerance,
        format!("max relative disagreement {m:.3e} (bessel {:.3e}, harish-chandra {:.3e})", worst[0], worst[1]),
    );
    Ok(rep)
}

fn c_asymptotics(cfg: &ExperimentConfig, o: &CAsymptoticsOptions) -> HarnessResult<ExperimentReport> {
    let p = &cfg.params;
    let mut rep = base_report(cfg, &["quantity", "lambda", "value"]);
    let grid = log_grid(o.lambda_range[0], o.lambda_range[1], o.points);
    let lead = c_asymptotic_fit(p, 1, &grid)?;
    let full = c_asymptotic_fit(p, o.order, &grid)?;
    rep.meta("leading_constant", fmt_float(full.leading_constant));
    for (j, c) in full.correction_coeffs.iter().enumerate() {
        rep.meta(&format!("c{}", j + 1), fmt_float(*c));
    }
    let growth_gap = (lead.growth_exponent - (2.0 * p.alpha + 1.0)).abs();
    rep.push_row(vec!["growth_exponent".into(), f64::NAN.into(), lead.growth_exponent.into()]);
    rep.check(
        "growth-exponent",
        growth_gap < o.growth_tolerance,
        format!("fitted {:.6}, expected {:.6}", lead.growth_exponent, 2.0 * p.alpha + 1.0),
    );
    let gain = match (lead.residual_decay_exponent, full.residual_decay_exponent) {
        (Some(a), Some(b)) => b - a,
        _ => f64::NAN,
    };
    rep.push_row(vec!["residual_gain".into(), f64::NAN.into(), gain.into()]);
    rep.check(
        "residual-gain",
        (gain - o.expected_gain).abs() <= o.gain_tolerance,
        format!("order {} residual decays {gain:.4} powers faster than order 1", o.order),
    );
    for &l in &grid {
        let d = p.inv_c_abs_sq(l);
        rep.point("inv_c_abs_sq", l, d);
    }

    let lgrid = log_grid(o.log_derivative_range[0], o.log_derivative_range[1], o.log_derivative_points);
    let mut fd_worst = 0.0f64;
    for (order, pow) in [(1u8, 1i32), (2, 2)] {
        let name = format!("lambda^{pow}|d^{order}c/c|");
        let mut v = Vec::with_capacity(lgrid.len());
        for &l in &lgrid {
            let x = p.c_log_derivative(l, order)?.norm() * l.powi(pow);
            rep.push_row(vec![name.clone().into(), l.into(), x.into()]);
            rep.point(&name, l, x);
            v.push(x);
        }
        let mx = v.iter().cloned().fold(0.0, f64::max);
        let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
        rep.check(
            &format!("log-derivative-{order}"),
            mx / mn < o.max_variation,
            format!("variation {:.3} over [{}, {}]", mx / mn, o.log_derivative_range[0], o.log_derivative_range[1]),
        );
    }
    for &l in &lgrid {
        let h = 1e-4 * l;
        let ratio = p.c_function(Complex64::new(l + h, 0.0))? / p.c_function(Complex64::new(l - h, 0.0))?;
        let fd = ratio.ln() / (2.0 * h);
        let v = p.c_log_derivative(l, 1)?;
        fd_worst = fd_worst.max((fd - v).norm() / v.norm());
    }
    rep.check(
        "log-derivative-finite-difference",
        fd_worst < o.finite_difference_tolerance,
        format!("max relative difference {fd_worst:.3e}"),
    );
    Ok(rep)
}

fn hc_gangolli(cfg: &ExperimentConfig, o: &HcGangolliOptions) -> HarnessResult<ExperimentReport> {
    let p = &cfg.params;
    let mut rep = base_report(cfg, &["quantity", "lambda", "value"]);
    rep.meta("seed", o.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut worst = 0.0f64;
    for _ in 0..o.samples {
        let l = rng.random_range(o.lambda_range[0]..o.lambda_range[1]);
        let a = hc_coeffs(p, Complex64::new(l, 0.0), o.k)?;
        let b = hc_coeffs_alt(p, Complex64::new(l, 0.0), o.k)?;
        let d = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm() / x.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        worst = worst.max(d);
        rep.push_row(vec!["recursion_rel_diff".into(), l.into(), d.into()]);
        rep.point("recursion_rel_diff", l, d);
    }
    rep.check("recursions-agree", worst < o.tolerance, format!("max relative difference {worst:.3e} at K = {}", o.k));

    let fit = gangolli_fit(p, &o.gangolli_lambdas, o.gangolli_k)?;
    rep.push_row(vec!["gangolli_k_fit".into(), f64::NAN.into(), fit.k_fit.into()]);
    rep.push_row(vec!["gangolli_d_fit".into(), f64::NAN.into(), fit.d_fit.into()]);
    rep.push_row(vec!["gangolli_curvature".into(), f64::NAN.into(), fit.curvature.into()]);
    rep.check(
        "gangolli-polynomial",
        fit.passes,
        format!("d = {:.4}, curvature {:.4e} over k in [K/2, K], K = {}", fit.d_fit, fit.curvature, o.gangolli_k),
    );

    let q = JacobiParams::with_r0(o.product_alpha, -0.5, p.r0)?;
    let mut prod_worst = 0.0f64;
    let mut b_zero = true;
    for &l in &o.product_lambdas {
        let lam = Complex64::new(l, 0.0);
        let h = hc_coeffs(&q, lam, o.product_k)?;
        let mut prod = Complex64::new(1.0, 0.0);
        for k in 0..o.product_k {
            b_zero &= (0..=k).all(|j| hc_b_coefficient(&q, lam, j, k) == Complex64::new(0.0, 0.0));
            prod *= hc_a_coefficient(&q, lam, k);
            prod_worst = prod_worst.max((h.values[k + 1] - prod).norm() / prod.norm());
        }
        rep.push_row(vec!["product_rel_diff".into(), l.into(), prod_worst.into()]);
    }
    rep.check(
        "product-shortcut",
        b_zero && prod_worst < o.product_tolerance,
        format!("beta = -1/2: cross terms vanish {b_zero}, max relative difference {prod_worst:.3e}"),
    );
    Ok(rep)
}

fn plancherel(cfg: &ExperimentConfig, o: &PlancherelOptions) -> HarnessResult<ExperimentReport> {
    let mut rep = base_report(
        cfg,
        &["sigma", "center", "refine", "kappa", "predicted_kappa", "shape_defect", "norm_mu", "norm_nu", "ratio", "predicted_ratio"],
    );
    rep.meta("normalization", cfg.normalization.name());
    let refinements: &[usize] = if o.doubling_check { &[1, 2] } else { &[1] };
    let mut results: Vec<Vec<(f64, f64)>> = Vec::new();
    for &refine in refinements {
        let tr = cfg.transform(refine)?;
        let c = cfg.normalization.forward_constant(&cfg.params);
        let mut level = Vec::new();
        for b in &o.bumps {
            let f = TestFunction::Bump { sigma: b[0], center: b[1] };
            let g = tr.sample(|t| f.eval(t));
            let rt = tr.round_trip(&g)?;
            let pc = tr.plancherel_check(&g)?;
            // ‖F f‖²_ν = C κ ‖f‖²_μ for forward constant C
            let predicted_ratio = (c * rt.kappa).sqrt();
            rep.push_row(vec![
                b[0].into(),
                b[1].into(),
                refine.into(),
                rt.kappa.into(),
                rt.predicted.into(),
                rt.shape_defect.into(),
                pc.norm_mu.into(),
                pc.norm_nu.into(),
                pc.ratio().into(),
                predicted_ratio.into(),
            ]);
            rep.point(&format!("kappa refine={refine}"), b[1], rt.kappa);
            if refine == 1 {
                let label = f.label();
                let dk = (rt.kappa - rt.predicted).abs();
                let dr = (pc.ratio() - predicted_ratio).abs();
                rep.check(
                    &format!("{label} round-trip"),
                    dk < o.tolerance && rt.shape_defect < o.tolerance && dr < o.tolerance,
                    format!("|kappa - predicted| {dk:.3e}, shape defect {:.3e}, ratio defect {dr:.3e}", rt.shape_defect),
                );
            }
            level.push((rt.kappa, pc.ratio()));
        }
        results.push(level);
    }
    if o.doubling_check {
        let change = results[0]
            .iter()
            .zip(&results[1])
            .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
            .fold(0.0, f64::max);
        rep.check(
            "grid-doubling",
            change < o.doubling_tolerance,
            format!("largest change of kappa or ratio under doubling {change:.3e}"),
        );
    }
    Ok(rep)
}

fn convergence(cfg: &ExperimentConfig, o: &ConvergenceOptions) -> HarnessResult<ExperimentReport> {
    let p = &cfg.params;
    let tr = cfg.transform(1)?;
    let ps = o.p_values.clone().unwrap_or_else(|| vec![p.p0 + 0.05, 2.0]);
    let mut rep: Option<ExperimentReport> = None;
    for spec in &o.functions {
        let f = spec.validate(cfg.grid.t_max)?;
        for &pp in &ps {
            let r = convergence_experiment(&tr, &f, pp, &o.r_schedule)?;
            match rep.as_mut() {
                None => {
                    let mut first = base_report(cfg, &r.columns.iter().map(String::as_str).collect::<Vec<_>>());
                    first.absorb(r);
                    rep = Some(first);
                }
                Some(acc) => acc.absorb(r),
            }
        }
    }
    Ok(rep.expect("at least one function"))
}

fn kernel_bounds(cfg: &ExperimentConfig, o: &KernelBoundsOptions) -> HarnessResult<ExperimentReport> {
    let p = &cfg.params;
    let sgrid = make_spectral_grid(
        p,
        cfg.grid.lambda_max,
        cfg.grid.spectral_panels_per_unit,
        cfg.grid.nodes_per_panel,
        cfg.normalization,
    )?;
    let mut rep = base_report(cfg, &["region", "R", "max_ratio", "argmax_t", "argmax_r", "cells"]);
    let mut regions: Vec<(Region, bool)> = Vec::new();
    for name in &o.regions {
        regions.push((Region::parse(name)?, true));
    }
    for name in &o.tabulate {
        let r = Region::parse(name)?;
        if !regions.iter().any(|(x, _)| *x == r) {
            regions.push((r, false));
        }
    }
    for (region, checked) in regions {
        let (ts, rs) = match region {
            Region::A1 => (o.small.clone(), o.small.clone()),
            Region::A3 => (o.large.clone(), o.small.clone()),
            Region::A4 => (o.small.clone(), o.large.clone()),
            Region::A2 => return Err(config_err("options.regions: no kernel bound is defined on A2")),
        };
        let mut r = kernel_bound_check(p, region, &ts, &rs, &o.cutoffs, &sgrid)?;
        if !checked {
            r.checks.clear();
        }
        rep.absorb(r);
    }
    Ok(rep)
}

fn endpoint(cfg: &ExperimentConfig, o: &EndpointOptions) -> HarnessResult<ExperimentReport> {
    let r = endpoint_growth(&cfg.params, &o.cutoffs)?;
    let mut rep = base_report(cfg, &r.columns.iter().map(String::as_str).collect::<Vec<_>>());
    rep.absorb(r);
    Ok(rep)
}

fn lorentz(cfg: &ExperimentConfig, o: &LorentzOptions) -> HarnessResult<ExperimentReport> {
    let p = &cfg.params;
    let f = o.function.validate(cfg.grid.t_max)?;
    if f.eval(p.r0 + 1e-9) != 0.0 || matches!(f, TestFunction::Bump { .. }) {
        return Err(config_err("options.function must be an indicator supported in [0, r0]"));
    }
    let tr = cfg.transform(1)?;
    let schedule = o.r_schedule.clone().unwrap_or_else(|| {
        default_r_schedule().into_iter().filter(|&r| r <= cfg.grid.lambda_max).collect()
    });
    let ps = o.p_values.clone().unwrap_or_else(|| {
        vec![p.p0 - 0.1, p.p0, p.p0 + 0.1, 2.0, p.p1 - 0.1, p.p1, p.p1 + 0.1]
    });
    let fg = tr.sample(|t| f.eval(t));
    let fh = tr.forward(&fg)?;
    let star = maximal(&tr, &fh, &schedule)?;
    let mut rep = base_report(cfg, &["p", "q", "f_norm", "maximal_norm", "ratio"]);
    rep.meta("function", f.label());
    rep.meta("schedule_len", schedule.len());
    rep.meta("schedule_max", fmt_float(*schedule.last().unwrap()));
    let mut finite = true;
    for &pp in &ps {
        let a = lp_norm(&fg, pp)?;
        let b = lp_norm(&star, pp)?;
        finite &= (b / a).is_finite();
        rep.push_row(vec![pp.into(), pp.into(), a.into(), b.into(), (b / a).into()]);
        rep.point("Lp", pp, b / a);
        for &q in &o.q_values {
            let qq = if q == 0.0 { f64::INFINITY } else { q };
            let a = lorentz_norm(&fg, pp, qq)?;
            let b = lorentz_norm(&star, pp, qq)?;
            finite &= (b / a).is_finite();
            rep.push_row(vec![pp.into(), qq.into(), a.into(), b.into(), (b / a).into()]);
            rep.point(&format!("Lorentz q={qq}"), pp, b / a);
        }
    }
    rep.check("finite", finite, "every norm ratio is finite");
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lists_every_experiment() {
        let s = list_experiments();
        for name in ["phi-cross-check", "c-asymptotics", "hc-gangolli", "plancherel", "convergence-sweep", "kernel-bounds", "endpoint-growth", "lorentz-norms"] {
            assert!(s.contains(name), "{name}");
            assert!(ExperimentConfig::default_for(name).is_ok(), "{name}");
        }
    }

    #[test]
    fn validation_names_the_key() {
        let e = ExperimentConfig::from_toml_str("experiment = \"plancherel\"\n[params]\nalpha = 0.2\nbeta = 0.4\n").unwrap_err();
        assert!(e.to_string().contains("alpha"), "{e}");
        let e = ExperimentConfig::from_toml_str("experiment = \"plancherel\"\n[params]\nalpha = 1\nbeta = 0\ngamma = 2\n")
            .unwrap_err();
        assert!(e.to_string().contains("gamma"), "{e}");
        let e = ExperimentConfig::from_toml_str("experiment = \"plancherel\"\n[params]\nalpha = 1\nbeta = 0\n[options]\nsamples = 3\n")
            .unwrap_err();
        assert!(e.to_string().contains("samples"), "{e}");
        let e = ExperimentConfig::from_toml_str("experiment = \"nope\"\n[params]\nalpha = 1\nbeta = 0\n").unwrap_err();
        assert!(e.to_string().contains("experiment"), "{e}");
        let e = ExperimentConfig::from_toml_str(
            "experiment = \"convergence-sweep\"\n[params]\nalpha = 1\nbeta = 0\n[options]\nfunctions = [{ kind = \"indicator\", a = 2, b = 1 }]\n",
        )
        .unwrap_err();
        assert!(e.to_string().contains("functions"), "{e}");
    }

    #[test]
    fn hash_ignores_defaults_and_output_dir() {
        let a = ExperimentConfig::from_toml_str("experiment = \"endpoint-growth\"\noutput_dir = \"x\"\n[params]\nalpha = 1.3\nbeta = 0.2\n")
            .unwrap();
        let b = ExperimentConfig::from_toml_str(
            "experiment = \"endpoint-growth\"\n[params]\nalpha = 1.3\nbeta = 0.2\nr0 = 1.05\n[grid]\nt_max = 12.0\n",
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        let c = ExperimentConfig::from_toml_str("experiment = \"endpoint-growth\"\n[params]\nalpha = 1.3\nbeta = 0.25\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn quick_experiments_pass() {
        for name in ["phi-cross-check", "c-asymptotics"] {
            let cfg = ExperimentConfig::default_for(name).unwrap();
            let rep = run_experiment(&cfg).unwrap();
            assert!(rep.passed(), "{name}: {:?}", rep.failed_checks());
        }
    }

    #[test]
    fn run_writes_both_files() {
        let dir = std::env::temp_dir().join(format!("jacobi-harness-unit-{}", std::process::id()));
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"phi-cross-check\"\n[params]\nalpha = 1.3\nbeta = 0.2\n[options]\nsamples = 20\n",
        )
        .unwrap();
        let out = run(&cfg, Some(&dir)).unwrap();
        let table = std::fs::read_to_string(&out.table_path).unwrap();
        let plot = std::fs::read_to_string(&out.plot_path).unwrap();
        let hash = cfg.hash();
        assert!(table.contains(&format!("# config_hash={hash}")));
        assert!(table.contains(&format!("# library_version={}", crate::report::LIBRARY_VERSION)));
        assert_eq!(table.lines().filter(|l| l.starts_with(&hash)).count(), 20);
        assert!(plot.contains("config_hash,experiment,series,x,y"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
