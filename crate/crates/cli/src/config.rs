//! Experiment configuration files (TOML, one experiment per file).

use std::path::{Path, PathBuf};

use hydrochain::initial::{MacroProfile, ProfileSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Hydro,
    Equilibrium,
    MatrixVerify,
    WignerLe,
}

fn one() -> f64 {
    1.0
}
fn unit_profile() -> ProfileSpec {
    ProfileSpec::Constant { value: 1.0 }
}
fn two() -> usize {
    2
}
fn lambda_m() -> f64 {
    5.0
}
fn rho() -> f64 {
    0.25
}
fn n_modes() -> usize {
    64
}
fn out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn projection_modes() -> usize {
    4
}
fn xi() -> i64 {
    2
}
fn k_fixed() -> f64 {
    0.25
}
fn det_samples() -> usize {
    1000
}

/// One experiment. `temperature0` is the profile `β₀⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: Kind,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub ensemble_size: usize,
    #[serde(default)]
    pub t_end: f64,
    #[serde(default)]
    pub t_snapshots: Vec<f64>,
    #[serde(default = "unit_profile")]
    pub tau0: ProfileSpec,
    #[serde(default = "unit_profile")]
    pub temperature0: ProfileSpec,
    #[serde(default = "two")]
    pub eta_max: usize,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// Smallest admissible `λ` for the Laplace-side checks.
    #[serde(default = "lambda_m")]
    pub lambda_m: f64,
    #[serde(default = "rho")]
    pub rho: f64,
    #[serde(default = "n_modes")]
    pub n_modes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "out_dir")]
    pub output_dir: PathBuf,
    /// Number of Fourier modes `|η| ≤ P` in the hydrodynamic error norm.
    #[serde(default = "projection_modes")]
    pub projection_modes: usize,
    /// `h(v)` in the local-equilibrium test function `e^{2πiηu} h(v)`.
    #[serde(default)]
    pub test_h: Option<ProfileSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub matrix: MatrixParams,
}

/// Pass/fail thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub hydro_r: f64,
    pub hydro_e: f64,
    pub z_moments: f64,
    pub z_spectrum: f64,
    pub z_wigner: f64,
    pub det: f64,
    pub inverse: f64,
    pub conv_order: f64,
    pub trig: f64,
    pub overline: f64,
    pub mech_pairing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hydro_r: 0.05,
            hydro_e: 0.1,
            z_moments: 4.0,
            z_spectrum: 5.0,
            z_wigner: 4.0,
            det: 1e-9,
            inverse: 1e-8,
            conv_order: 0.8,
            trig: 1e-10,
            overline: 1e-6,
            mech_pairing: 1e-4,
        }
    }
}

/// Parameters of the matrix sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatrixParams {
    pub eta: i64,
    pub xi: i64,
    pub k_fixed: f64,
    pub det_samples: usize,
    pub det_max_n: usize,
    pub overline_n: usize,
    pub pairing_n: usize,
}

impl Default for MatrixParams {
    fn default() -> Self {
        MatrixParams {
            eta: 1,
            xi: xi(),
            k_fixed: k_fixed(),
            det_samples: det_samples(),
            det_max_n: 1024,
            overline_n: 32,
            pairing_n: 256,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: ExperimentConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Built-in matrix verification sweep.
    pub fn matrix_preset() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            kind: Kind::MatrixVerify,
            n_list: (4..=12).map(|p| 1usize << p).collect(),
            gamma: 1.0,
            ensemble_size: 0,
            t_end: 0.0,
            t_snapshots: Vec::new(),
            tau0: ProfileSpec::Cosine {
                mean: 1.0,
                amplitude: 0.5,
                mode: 1,
            },
            temperature0: unit_profile(),
            eta_max: 2,
            lambdas: vec![5.0],
            lambda_m: lambda_m(),
            rho: rho(),
            n_modes: n_modes(),
            seed: 0,
            output_dir: PathBuf::from("out/verify-matrix"),
            projection_modes: projection_modes(),
            test_h: None,
            tolerances: Tolerances::default(),
            matrix: MatrixParams::default(),
        }
    }

    pub fn tau0(&self) -> Result<MacroProfile, ConfigError> {
        MacroProfile::from_spec(&self.tau0).map_err(|e| bad(format!("tau0: {e}")))
    }

    pub fn temperature0(&self) -> Result<MacroProfile, ConfigError> {
        MacroProfile::from_spec(&self.temperature0).map_err(|e| bad(format!("temperature0: {e}")))
    }

    pub fn test_h(&self) -> Result<MacroProfile, ConfigError> {
        match &self.test_h {
            Some(s) => MacroProfile::from_spec(s).map_err(|e| bad(format!("test_h: {e}"))),
            None => Ok(MacroProfile::cosine(1.0, 0.5, 1)),
        }
    }

    fn stochastic(&self) -> bool {
        self.kind != Kind::MatrixVerify
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_list.is_empty() {
            return Err(bad("n_list is empty"));
        }
        let n_min = *self.n_list.iter().min().expect("nonempty");
        if n_min < 2 {
            return Err(bad("every n must be at least 2"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(bad("gamma must be positive"));
        }
        if 2 * self.eta_max >= n_min {
            return Err(bad(format!("need 2·eta_max < min(n_list) = {n_min}")));
        }
        if self.eta_max > hydrochain::wigner::MAX_ETA {
            return Err(bad(format!("eta_max at most {}", hydrochain::wigner::MAX_ETA)));
        }
        if !(self.rho > 0.0 && self.rho < 0.5) {
            return Err(bad("rho must lie in (0, 1/2)"));
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(bad("lambdas must be positive"));
        }
        self.tau0()?;
        let temp = self.temperature0()?;
        // β₀ > 0 on every grid the run samples, and on a fine grid.
        for n in self.n_list.iter().copied().chain([4096]) {
            if temp.min_on_grid(n) <= 0.0 {
                return Err(bad(format!("temperature0 is not positive on the grid of size {n}")));
            }
        }
        self.test_h()?;
        if self.stochastic() {
            if self.ensemble_size < 2 {
                return Err(bad("ensemble_size must be at least 2"));
            }
            if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
                return Err(bad("t_end must be nonnegative"));
            }
            if self.t_snapshots.iter().any(|&t| !(0.0..=self.t_end).contains(&t)) {
                return Err(bad("t_snapshots must lie in [0, t_end]"));
            }
        }
        match self.kind {
            Kind::Hydro => {
                if self.t_snapshots.is_empty() {
                    return Err(bad("hydro needs t_snapshots"));
                }
            }
            Kind::Equilibrium => {
                if self.tau0().map(|p| p.max_mode())? != 0 || temp.max_mode() != 0 {
                    return Err(bad("equilibrium needs constant tau0 and temperature0"));
                }
                if self.t_snapshots.is_empty() {
                    return Err(bad("equilibrium needs t_snapshots"));
                }
            }
            Kind::MatrixVerify | Kind::WignerLe => {
                if self.lambdas.is_empty() {
                    return Err(bad("lambdas is empty"));
                }
                if let Some(l) = self.lambdas.iter().find(|&&l| l < self.lambda_m) {
                    return Err(bad(format!("lambda {l} below lambda_m = {}", self.lambda_m)));
                }
            }
        }
        if self.kind == Kind::WignerLe {
            let lmin = self.lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
            let need = hydrochain::wigner::HORIZON_FACTOR / lmin;
            if self.t_end < need {
                return Err(bad(format!("t_end {} shorter than 8/lambda_min = {need}", self.t_end)));
            }
        }
        Ok(())
    }

    /// `γ Σ_n n³ t_end · ensemble_size`, the expected number of flips.
    pub fn estimated_events(&self) -> f64 {
        if !self.stochastic() {
            return 0.0;
        }
        let s: f64 = self.n_list.iter().map(|&n| (n as f64).powi(3)).sum();
        self.gamma * s * self.t_end * self.ensemble_size as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HYDRO: &str = r#"
schema_version = 1
kind = "hydro"
n_list = [16, 32]
ensemble_size = 8
t_end = 0.01
t_snapshots = [0.0, 0.01]
tau0 = { type = "cosine", mean = 1.0, amplitude = 0.5 }
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(HYDRO).unwrap();
        assert_eq!(c.kind, Kind::Hydro);
        assert_eq!(c.gamma, 1.0);
        assert_eq!(c.temperature0, ProfileSpec::Constant { value: 1.0 });
        assert_eq!(c.rho, 0.25);
        assert_eq!(c.tolerances.hydro_r, 0.05);
        assert!((c.estimated_events() - (16f64.powi(3) + 32f64.powi(3)) * 0.01 * 8.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_documents() {
        let unknown = format!("{HYDRO}\nbogus = 1\n");
        assert!(matches!(ExperimentConfig::from_toml(&unknown), Err(ConfigError::Parse(_))));
        let version = HYDRO.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(ExperimentConfig::from_toml(&version), Err(ConfigError::Invalid(_))));
        let empty = HYDRO.replace("n_list = [16, 32]", "n_list = []");
        assert!(ExperimentConfig::from_toml(&empty).is_err());
        let eta = format!("{HYDRO}\neta_max = 8\n");
        assert!(ExperimentConfig::from_toml(&eta).is_err());
        let snap = HYDRO.replace("t_snapshots = [0.0, 0.01]", "t_snapshots = [0.0, 0.02]");
        assert!(ExperimentConfig::from_toml(&snap).is_err());
        let temp = format!("{HYDRO}\ntemperature0 = {{ type = \"cosine\", mean = 0.1, amplitude = 0.5 }}\n");
        assert!(ExperimentConfig::from_toml(&temp).is_err());
        let eq = HYDRO.replace("\"hydro\"", "\"equilibrium\"");
        assert!(ExperimentConfig::from_toml(&eq).is_err());
    }

    #[test]
    fn wigner_horizon_and_lambda_floor() {
        let base = r#"
schema_version = 1
kind = "wigner_le"
n_list = [32]
ensemble_size = 4
lambdas = [10.0]
"#;
        assert!(ExperimentConfig::from_toml(&format!("{base}t_end = 0.5\n")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{base}t_end = 0.8\n")).is_ok());
        let low = base.replace("[10.0]", "[1.0]");
        assert!(ExperimentConfig::from_toml(&format!("{low}t_end = 8.0\n")).is_err());
    }

    #[test]
    fn preset_is_valid() {
        ExperimentConfig::matrix_preset().validate().unwrap();
    }
}
