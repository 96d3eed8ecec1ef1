//! Scenario configs and the command implementations behind the `radpair`
//! binary.
//!
//! A config is a TOML document:
//!
//! ```toml
//! k_S = 1.0
//! models = ["jones-hore", "normalized-jh"]
//! weight_scheme = "corrected"        # optional, or "kominis"
//! initial_state = "equal-mixture"    # or { matrix = [[re, im], ...] } or { random_seed = 42 }
//!
//! [space]
//! dim = 2
//! singlet_indices = [0]
//!
//! [integrator]                       # optional
//! method = "rk45-adaptive"           # or "rk4-fixed"
//! dt = 1e-3                          # rk4 step, default 1e-3 / k_S
//! rel_tol = 1e-9
//! abs_tol = 1e-12
//!
//! [time]
//! t_end = 10.0
//! n_snapshots = 101
//!
//! [outputs]                          # optional
//! csv_path = "trajectory.csv"
//! report_path = "report.json"
//! ```

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::integrator::{integrate, Method, MethodName, TimeGrid, Trajectory};
use crate::kinetics::{mixture_from_initial, reconstruct, WeightScheme};
use crate::models::{ModelKind, RateParams};
use crate::parallel::{self, Execution};
use crate::spinspace::{random_density_matrix, CMatrix, DensityMatrix, SpinSpace, Tolerances};
use crate::verify::{run_scenario, ConsistencyReport, DivergencePoint, Scenario, StateClass};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTEGRATION: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dim: usize,
    pub singlet_indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PureSinglet,
    PureTriplet,
    EqualMixture,
    StSuperposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Preset(Preset),
    Explicit(ExplicitMatrix),
    Random(RandomState),
}

/// Row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitMatrix {
    pub matrix: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomState {
    pub random_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_method")]
    pub method: MethodName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: default_method(),
            dt: None,
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
        }
    }
}

fn default_method() -> MethodName {
    MethodName::Rk45Adaptive
}

fn default_rel_tol() -> f64 {
    1e-9
}

fn default_abs_tol() -> f64 {
    1e-12
}

fn default_weight_scheme() -> WeightScheme {
    WeightScheme::Corrected
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub n_snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_csv_path")]
    pub csv_path: String,
    #[serde(default = "default_report_path")]
    pub report_path: String,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            csv_path: default_csv_path(),
            report_path: default_report_path(),
        }
    }
}

fn default_csv_path() -> String {
    "trajectory.csv".into()
}

fn default_report_path() -> String {
    "report.json".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "k_S")]
    pub k_s: f64,
    pub models: Vec<ModelKind>,
    #[serde(default = "default_weight_scheme")]
    pub weight_scheme: WeightScheme,
    pub initial_state: InitialState,
    pub space: SpaceConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// The document could not be parsed into the schema.
    Parse(String),
    /// A parsed value violates an invariant.
    Invalid { key: &'static str, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(msg) => write!(f, "config parse error: {msg}"),
            ConfigError::Invalid { key, message } => write!(f, "config error at `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

impl ScenarioConfig {
    pub fn spin_space(&self) -> Result<Arc<SpinSpace>, ConfigError> {
        SpinSpace::new(self.space.dim, &self.space.singlet_indices)
            .map(Arc::new)
            .map_err(|e| invalid("space", e.to_string()))
    }

    pub fn dt(&self) -> f64 {
        self.integrator.dt.unwrap_or(1e-3 / self.k_s)
    }

    pub fn method(&self) -> Method {
        match self.integrator.method {
            MethodName::Rk4Fixed => Method::Rk4Fixed { dt: self.dt() },
            MethodName::Rk45Adaptive => Method::Rk45Adaptive {
                rel_tol: self.integrator.rel_tol,
                abs_tol: self.integrator.abs_tol,
            },
        }
    }

    pub fn grid(&self) -> Result<TimeGrid, ConfigError> {
        TimeGrid::uniform(self.time.t_end, self.time.n_snapshots).map_err(|e| invalid("time", e.to_string()))
    }

    pub fn params(&self) -> Result<RateParams, ConfigError> {
        RateParams::new(self.k_s).map_err(|e| invalid("k_S", e.to_string()))
    }

    pub fn state_class(&self) -> StateClass {
        match &self.initial_state {
            InitialState::Preset(Preset::StSuperposition) => StateClass::Superposition,
            InitialState::Preset(_) => StateClass::Preset,
            InitialState::Explicit(_) => StateClass::Explicit,
            InitialState::Random(_) => StateClass::Random,
        }
    }

    pub fn initial_label(&self) -> String {
        match &self.initial_state {
            InitialState::Preset(p) => serde_plain_name(p),
            InitialState::Explicit(_) => "explicit".into(),
            InitialState::Random(r) => format!("random seed={}", r.random_seed),
        }
    }

    /// Builds the initial density matrix.
    pub fn initial_density(&self) -> Result<DensityMatrix, ConfigError> {
        let space = self.spin_space()?;
        let dim = space.dim();
        let key = "initial_state";
        let first_singlet = space.singlet_indices()[0];
        let triplets = space.triplet_indices();
        let first_triplet = triplets[0];
        let rho = match &self.initial_state {
            InitialState::Preset(Preset::PureSinglet) => DensityMatrix::basis_state(space, first_singlet),
            InitialState::Preset(Preset::PureTriplet) => DensityMatrix::basis_state(space, first_triplet),
            InitialState::Preset(Preset::EqualMixture) => {
                let n_s = space.singlet_indices().len() as f64;
                let n_t = triplets.len() as f64;
                let diag: Vec<f64> = (0..dim)
                    .map(|i| if space.is_singlet(i) { 0.5 / n_s } else { 0.5 / n_t })
                    .collect();
                DensityMatrix::diagonal(space, &diag)
            }
            InitialState::Preset(Preset::StSuperposition) => {
                let mut m = CMatrix::zeros(dim, dim);
                for &i in &[first_singlet, first_triplet] {
                    for &j in &[first_singlet, first_triplet] {
                        m[(i, j)] = Complex64::new(0.5, 0.0);
                    }
                }
                DensityMatrix::from_matrix(space, m)
            }
            InitialState::Explicit(ExplicitMatrix { matrix }) => {
                if matrix.len() != dim * dim {
                    return Err(invalid(
                        key,
                        format!(
                            "expected {} [re, im] pairs for dimension {dim}, got {}",
                            dim * dim,
                            matrix.len()
                        ),
                    ));
                }
                let m = CMatrix::from_fn(dim, dim, |i, j| {
                    let [re, im] = matrix[i * dim + j];
                    Complex64::new(re, im)
                });
                DensityMatrix::from_matrix(space, m)
            }
            InitialState::Random(RandomState { random_seed }) => Ok(random_density_matrix(space, *random_seed)),
        };
        rho.map_err(|e| invalid(key, e.to_string()))
    }

    /// Checks every invariant, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.k_s > 0.0) || !self.k_s.is_finite() {
            return Err(invalid(
                "k_S",
                format!("must be a positive finite rate, got {}", self.k_s),
            ));
        }
        if self.models.is_empty() {
            return Err(invalid("models", "at least one model is required"));
        }
        self.spin_space()?;
        if !(self.time.t_end > 0.0) || !self.time.t_end.is_finite() {
            return Err(invalid("time.t_end", format!("must be > 0, got {}", self.time.t_end)));
        }
        if self.time.n_snapshots < 2 {
            return Err(invalid(
                "time.n_snapshots",
                format!("must be >= 2, got {}", self.time.n_snapshots),
            ));
        }
        if let Some(dt) = self.integrator.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(invalid("integrator.dt", format!("must be > 0, got {dt}")));
            }
        }
        if !(self.integrator.rel_tol > 0.0) {
            return Err(invalid(
                "integrator.rel_tol",
                format!("must be > 0, got {}", self.integrator.rel_tol),
            ));
        }
        if !(self.integrator.abs_tol > 0.0) {
            return Err(invalid(
                "integrator.abs_tol",
                format!("must be > 0, got {}", self.integrator.abs_tol),
            ));
        }
        let rho = self.initial_density()?;
        let tol = Tolerances::default();
        let check = rho.validate(&tol);
        if check.hermiticity_deviation > tol.herm_warn {
            return Err(invalid(
                "initial_state",
                format!("matrix is not Hermitian (deviation {:e})", check.hermiticity_deviation),
            ));
        }
        if check.min_eigenvalue < -tol.psd_warn {
            return Err(invalid(
                "initial_state",
                format!(
                    "matrix is not positive semidefinite (min eigenvalue {:e})",
                    check.min_eigenvalue
                ),
            ));
        }
        if (check.trace - 1.0).abs() > tol.trace {
            return Err(invalid(
                "initial_state",
                format!("trace must be 1, got {}", check.trace),
            ));
        }
        for (key, path) in [
            ("outputs.csv_path", &self.outputs.csv_path),
            ("outputs.report_path", &self.outputs.report_path),
        ] {
            if path.trim().is_empty() {
                return Err(invalid(key, "path must not be empty"));
            }
        }
        Ok(())
    }
}

fn serde_plain_name<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Parses and validates a config document, applying defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Serializes a config (with defaults made explicit) back to TOML.
pub fn emit_config(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("config is always representable as TOML")
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io { path: PathBuf, message: String },
    Integration(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Integration(_) => EXIT_INTEGRATION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Integration(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_config(&text)?)
}

/// Replaces the seed of a random initial state. Returns whether it applied.
pub fn override_seed(config: &mut ScenarioConfig, seed: u64) -> bool {
    match &mut config.initial_state {
        InitialState::Random(r) => {
            r.random_seed = seed;
            true
        }
        _ => false,
    }
}

/// Numbers are written with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(contents.as_bytes()).map_err(io_err(path))
}

/// `dir/stem_suffix.ext` for a configured output path.
fn suffixed(out_dir: &Path, configured: &str, suffix: &str, default_ext: &str) -> PathBuf {
    let base = out_dir.join(configured);
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = base
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| default_ext.to_string());
    base.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

/// Header `t, trace, p_singlet, p_triplet, re_i_j, im_i_j` over the upper
/// triangle in row-major order.
pub fn csv_header(dim: usize) -> String {
    let mut cols = vec!["t".to_string(), "trace".into(), "p_singlet".into(), "p_triplet".into()];
    for i in 0..dim {
        for j in i..dim {
            cols.push(format!("re_{i}_{j}"));
            cols.push(format!("im_{i}_{j}"));
        }
    }
    cols.join(",")
}

fn csv_row(t: f64, rho: &DensityMatrix) -> String {
    let mut cols = vec![
        fmt_num(t),
        fmt_num(rho.trace()),
        fmt_num(rho.singlet_probability()),
        fmt_num(rho.triplet_probability()),
    ];
    let m = rho.matrix();
    for i in 0..rho.dim() {
        for j in i..rho.dim() {
            cols.push(fmt_num(m[(i, j)].re));
            cols.push(fmt_num(m[(i, j)].im));
        }
    }
    cols.join(",")
}

pub fn states_csv(times: &[f64], states: &[DensityMatrix]) -> String {
    let dim = states.first().map_or(0, DensityMatrix::dim);
    let mut out = csv_header(dim);
    out.push('\n');
    for (&t, rho) in times.iter().zip(states) {
        out.push_str(&csv_row(t, rho));
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    states_csv(&traj.times, &traj.states)
}

pub fn divergence_csv(curve: &[DivergencePoint]) -> String {
    let mut out = String::from("t,p_singlet_corrected,p_singlet_disputed,difference\n");
    for p in curve {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_num(p.t),
            fmt_num(p.p_singlet_corrected),
            fmt_num(p.p_singlet_disputed),
            fmt_num(p.difference)
        ));
    }
    out
}

/// Artifacts a command wrote, plus its exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

fn integrate_all(config: &ScenarioConfig) -> Result<Vec<Trajectory>, CliError> {
    let rho = config.initial_density()?;
    let params = config.params()?;
    let grid = config.grid()?;
    let method = config.method();
    let tol = Tolerances::default();
    parallel::map(&config.models, Execution::Parallel, |&model| {
        integrate(model, &rho, &params, &grid, method, &tol)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(CliError::Integration)
}

fn echo_config(config: &ScenarioConfig, out_dir: &Path, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = out_dir.join("config.echo.toml");
    write_file(&path, &emit_config(config))?;
    files.push(path);
    Ok(())
}

/// `run`: one trajectory CSV per model plus the kinetic-mixture reconstruction
/// under the configured weight scheme.
pub fn cmd_run(config: &ScenarioConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let trajectories = integrate_all(config)?;
    let mut files = Vec::new();
    for traj in &trajectories {
        let path = suffixed(out_dir, &config.outputs.csv_path, traj.model.name(), "csv");
        write_file(&path, &trajectory_csv(traj))?;
        files.push(path);
    }

    let rho = config.initial_density()?;
    let grid = config.grid()?;
    let mix = mixture_from_initial(&rho).map_err(CliError::Integration)?;
    let states = grid
        .times()
        .iter()
        .map(|&t| reconstruct(mix.weights(config.weight_scheme, t, config.k_s)?, &mix))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Integration)?;
    let path = suffixed(
        out_dir,
        &config.outputs.csv_path,
        &format!("mixture-{}", config.weight_scheme),
        "csv",
    );
    write_file(&path, &states_csv(grid.times(), &states))?;
    files.push(path);
    echo_config(config, out_dir, &mut files)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDocument {
    pub scenario: ReportScenario,
    pub checks: Vec<crate::verify::CheckRecord>,
    pub divergence_curve: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportScenario {
    pub initial_state: String,
    #[serde(flatten)]
    pub descriptor: crate::verify::ScenarioDescriptor,
}

/// Builds the verification scenario a config describes. Verification always
/// uses fixed-step RK4 with the configured `dt`.
pub fn scenario_from_config(config: &ScenarioConfig) -> Result<Scenario, ConfigError> {
    Ok(Scenario {
        label: config.initial_label(),
        class: config.state_class(),
        rho_init: config.initial_density()?,
        k_s: config.k_s,
        grid: config.grid()?,
        dt: config.dt(),
    })
}

/// `verify`: runs the consistency checks and writes the JSON report and the
/// divergence curve.
pub fn cmd_verify(config: &ScenarioConfig, out_dir: &Path) -> Result<(Outcome, ConsistencyReport), CliError> {
    let scenario = scenario_from_config(config)?;
    let report = run_scenario(&scenario);
    let mut files = Vec::new();

    let curve_path = suffixed(out_dir, &config.outputs.report_path, "divergence", "json").with_extension("csv");
    let curve_ref = if report.divergence_curve.is_empty() {
        None
    } else {
        write_file(&curve_path, &divergence_csv(&report.divergence_curve))?;
        files.push(curve_path.clone());
        curve_path.file_name().map(|n| n.to_string_lossy().into_owned())
    };

    let document = ReportDocument {
        scenario: ReportScenario {
            initial_state: config.initial_label(),
            descriptor: report.scenario.clone(),
        },
        checks: report.checks.clone(),
        divergence_curve: curve_ref,
        passed: report.passed(),
    };
    let report_path = out_dir.join(&config.outputs.report_path);
    let json = serde_json::to_string_pretty(&document).expect("report serializes");
    write_file(&report_path, &(json + "\n"))?;
    files.push(report_path);
    echo_config(config, out_dir, &mut files)?;
    let exit_code = if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok((Outcome { exit_code, files }, report))
}

/// `compare`: singlet probability of every model on a shared grid.
pub fn cmd_compare(config: &ScenarioConfig, out_dir: &Path) -> Result<(Outcome, String), CliError> {
    let trajectories = integrate_all(config)?;
    let mut table = String::from("t");
    for traj in &trajectories {
        table.push_str(&format!(",p_singlet_{}", traj.model.name()));
    }
    table.push('\n');
    for (i, &t) in trajectories[0].times.iter().enumerate() {
        table.push_str(&fmt_num(t));
        for traj in &trajectories {
            table.push(',');
            table.push_str(&fmt_num(traj.observables[i].p_singlet));
        }
        table.push('\n');
    }
    let path = suffixed(out_dir, &config.outputs.csv_path, "compare", "csv");
    write_file(&path, &table)?;
    let mut files = vec![path];
    echo_config(config, out_dir, &mut files)?;
    Ok((
        Outcome {
            exit_code: EXIT_OK,
            files,
        },
        table,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
k_S = 1.0
models = ["jones-hore"]
initial_state = "equal-mixture"

[space]
dim = 2
singlet_indices = [0]

[time]
t_end = 10.0
n_snapshots = 101
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.integrator.method, MethodName::Rk45Adaptive);
        assert_eq!(c.integrator.rel_tol, 1e-9);
        assert_eq!(c.integrator.abs_tol, 1e-12);
        assert_eq!(c.weight_scheme, WeightScheme::Corrected);
        assert_eq!(c.dt(), 1e-3);
        assert_eq!(c.models, vec![ModelKind::JonesHoreUnnormalized]);
        assert_eq!(c.initial_state, InitialState::Preset(Preset::EqualMixture));
    }

    #[test]
    fn negative_rate_names_key() {
        let text = MINIMAL.replace("k_S = 1.0", "k_S = -1.0");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("k_S"), "{err}");
    }

    #[test]
    fn non_hermitian_matrix_names_initial_state() {
        let text = MINIMAL.replace(
            "initial_state = \"equal-mixture\"",
            "initial_state = { matrix = [[0.5, 0.0], [0.2, 0.0], [0.0, 0.0], [0.5, 0.0]] }",
        );
        let err = parse_config(&text).unwrap_err();
        assert!(
            matches!(
                err,
                ConfigError::Invalid {
                    key: "initial_state",
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn unknown_key_is_an_error() {
        let text = MINIMAL.replace("[time]", "[time]\nt_start = 0.0");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("t_start"), "{err}");
        let text = format!("colour = \"blue\"\n{MINIMAL}");
        assert!(parse_config(&text).unwrap_err().to_string().contains("colour"));
    }

    #[test]
    fn type_mismatch_is_an_error() {
        let text = MINIMAL.replace("n_snapshots = 101", "n_snapshots = \"many\"");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("n_snapshots"), "{err}");
    }

    #[test]
    fn invariant_violations_name_keys() {
        let cases = [
            ("n_snapshots = 101", "n_snapshots = 1", "time.n_snapshots"),
            ("t_end = 10.0", "t_end = 0.0", "time.t_end"),
            ("models = [\"jones-hore\"]", "models = []", "models"),
            ("singlet_indices = [0]", "singlet_indices = [0, 1]", "space"),
        ];
        for (from, to, key) in cases {
            let err = parse_config(&MINIMAL.replace(from, to)).unwrap_err();
            assert!(err.to_string().contains(key), "{key}: {err}");
        }
        let err = parse_config(&MINIMAL.replace("\"jones-hore\"", "\"zeno\"")).unwrap_err();
        assert!(err.to_string().contains("zeno"), "{err}");
    }

    #[test]
    fn explicit_and_random_states() {
        let text = MINIMAL.replace(
            "initial_state = \"equal-mixture\"",
            "initial_state = { matrix = [[0.5, 0.0], [0.0, 0.5], [0.0, -0.5], [0.5, 0.0]] }",
        );
        let c = parse_config(&text).unwrap();
        let rho = c.initial_density().unwrap();
        assert_eq!(rho.matrix()[(0, 1)], Complex64::new(0.0, 0.5));

        let text = MINIMAL.replace(
            "initial_state = \"equal-mixture\"",
            "initial_state = { random_seed = 9 }",
        );
        let mut c = parse_config(&text).unwrap();
        assert_eq!(c.state_class(), StateClass::Random);
        assert!(override_seed(&mut c, 10));
        assert_eq!(c.initial_state, InitialState::Random(RandomState { random_seed: 10 }));
    }

    #[test]
    fn presets_in_electron_pair_space() {
        let text = MINIMAL.replace("dim = 2", "dim = 4");
        let c = parse_config(&text).unwrap();
        let rho = c.initial_density().unwrap();
        assert_eq!(rho.singlet_probability(), 0.5);
        assert!((rho.matrix()[(3, 3)].re - 0.5 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn config_round_trips() {
        let mut c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&emit_config(&c)).unwrap(), c);
        c.integrator.dt = Some(2e-3);
        c.weight_scheme = WeightScheme::Kominis;
        c.initial_state = InitialState::Explicit(ExplicitMatrix {
            matrix: vec![[0.3, 0.0], [0.1, 0.2], [0.1, -0.2], [0.7, 0.0]],
        });
        assert_eq!(parse_config(&emit_config(&c)).unwrap(), c);
    }

    #[test]
    fn csv_header_layout() {
        assert_eq!(
            csv_header(2),
            "t,trace,p_singlet,p_triplet,re_0_0,im_0_0,re_0_1,im_0_1,re_1_1,im_1_1"
        );
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn suffixed_paths() {
        let p = suffixed(Path::new("out"), "traj.csv", "haberkorn", "csv");
        assert_eq!(p, Path::new("out/traj_haberkorn.csv"));
        let p = suffixed(Path::new("out"), "runs/x", "jones-hore", "csv");
        assert_eq!(p, Path::new("out/runs/x_jones-hore.csv"));
    }
}
