//! TOML run configuration.
//!
//! Keys carry the physical names (`E_e`, `sqrtn_V`, `Gamma_c_nu`, ...).
//! Unknown keys and duplicate keys are rejected by the parser.

use std::f64::consts::PI;
use std::path::PathBuf;

use fano_core::model::ValidationReport;
use fano_core::{validate_spec, SystemSpec};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("invalid configuration\n{0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct SystemSection {
    #[serde(default = "default_e_nu")]
    E_nu: Vec<f64>,
    E_e: f64,
    sqrtn_V: f64,
    mu_nu_e: Vec<f64>,
    sqrtn_mu_nu_c: Vec<f64>,
    #[serde(default = "default_theta")]
    theta: f64,
    #[serde(default = "one")]
    I_in: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RatesSection {
    Gamma_c_nu: Vec<f64>,
    #[serde(default = "default_gamma_vib")]
    Gamma_vib: f64,
    gamma_e_nu: Option<Vec<f64>>,
    gamma_k_nu: Option<Vec<f64>>,
    #[serde(default)]
    gamma_k_e: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct ContinuumSection {
    /// Half-bandwidth; defaults to 40γ.
    W: Option<f64>,
    N_k: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct FieldSection {
    #[serde(default = "default_field")]
    F: f64,
    #[serde(default = "default_delta")]
    laser_delta: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { F: default_field(), laser_delta: default_delta() }
    }
}

/// Laser scan, in reduced units ε = (ω_L − E_e)/γ.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_eps_min")]
    pub eps_min: f64,
    #[serde(default = "default_eps_max")]
    pub eps_max: f64,
    #[serde(default = "default_scan_points")]
    pub points: usize,
    #[serde(default = "default_method")]
    pub method: String,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { eps_min: -6.0, eps_max: 6.0, points: 61, method: default_method() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct EmissionConfig {
    /// Defaults to E_e.
    pub omega_L: Option<f64>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub points: Option<usize>,
    pub line_points: Option<usize>,
    pub line_span: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// CSV to fit; synthetic data when absent.
    pub input: Option<PathBuf>,
    #[serde(default = "default_x_column")]
    pub x_column: String,
    #[serde(default = "default_y_column")]
    pub y_column: String,
    /// standard | shifted | full | all
    #[serde(default = "default_fit_model")]
    pub model: String,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_wide_min")]
    pub eps_min: f64,
    #[serde(default = "default_wide_max")]
    pub eps_max: f64,
    #[serde(default = "default_wide_points")]
    pub points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub eta_min: f64,
    #[serde(default = "one")]
    pub eta_max: f64,
    #[serde(default = "default_eta_points")]
    pub eta_points: usize,
    #[serde(default = "default_wide_min")]
    pub eps_min: f64,
    #[serde(default = "default_wide_max")]
    pub eps_max: f64,
    #[serde(default = "default_wide_points")]
    pub eps_points: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

/// Measured prefactors for `extract-params`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ExtractConfig {
    pub B_abs: f64,
    pub B_ray: f64,
    pub B_ram: f64,
    pub gamma: f64,
    pub q: f64,
    pub eta_ram: f64,
    pub F: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: SystemSection,
    rates: RatesSection,
    #[serde(default)]
    continuum: ContinuumSection,
    #[serde(default)]
    field: FieldSection,
    #[serde(default)]
    scan: ScanConfig,
    #[serde(default)]
    emission: EmissionConfig,
    #[serde(default)]
    fit: FitConfig,
    #[serde(default)]
    study: StudyConfig,
    extract: Option<ExtractConfig>,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: SystemSpec,
    pub w: f64,
    pub n_k: usize,
    pub scan: ScanConfig,
    pub emission: EmissionConfig,
    pub fit: FitConfig,
    pub study: StudyConfig,
    pub extract: Option<ExtractConfig>,
    pub output: OutputConfig,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let n_nu = raw.system.E_nu.len();
    let spec = SystemSpec {
        e_nu: raw.system.E_nu,
        e_e: raw.system.E_e,
        sqrtn_v: raw.system.sqrtn_V,
        mu_nu_e: raw.system.mu_nu_e,
        sqrtn_mu_nu_c: raw.system.sqrtn_mu_nu_c,
        gamma_c_nu: raw.rates.Gamma_c_nu,
        gamma_vib: raw.rates.Gamma_vib,
        gamma_e_nu: raw.rates.gamma_e_nu.unwrap_or_else(|| vec![0.0; n_nu]),
        gamma_k_nu: raw.rates.gamma_k_nu.unwrap_or_else(|| vec![0.0; n_nu]),
        gamma_k_e: raw.rates.gamma_k_e,
        field: raw.field.F,
        laser_delta: raw.field.laser_delta,
        theta: raw.system.theta,
        i_in: raw.system.I_in,
    };
    let report = validate_spec(&spec);
    if !report.passed() {
        return Err(ConfigError::Invalid(violations(&report)));
    }
    let gamma = PI * spec.sqrtn_v * spec.sqrtn_v;
    let cfg = RunConfig {
        w: raw.continuum.W.unwrap_or(40.0 * gamma),
        n_k: raw.continuum.N_k.unwrap_or(401),
        spec,
        scan: raw.scan,
        emission: raw.emission,
        fit: raw.fit,
        study: raw.study,
        extract: raw.extract,
        output: raw.output,
    };
    cfg.check()?;
    Ok(cfg)
}

fn violations(report: &ValidationReport) -> String {
    report
        .violations
        .iter()
        .map(|v| format!("  {}: {}", v.field, v.message))
        .collect::<Vec<_>>()
        .join("\n")
}

impl RunConfig {
    fn check(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        if !(self.w > 0.0 && self.w.is_finite()) {
            bad.push(format!("  continuum.W: must be positive, got {}", self.w));
        }
        if self.n_k < 3 || self.n_k % 2 == 0 {
            bad.push(format!("  continuum.N_k: must be odd and >= 3, got {}", self.n_k));
        }
        if self.scan.points < 2 || !(self.scan.eps_min < self.scan.eps_max) {
            bad.push("  scan: need points >= 2 and eps_min < eps_max".to_string());
        }
        if !matches!(self.scan.method.as_str(), "direct" | "weak_field") {
            bad.push(format!("  scan.method: expected direct or weak_field, got '{}'", self.scan.method));
        }
        if !matches!(self.fit.model.as_str(), "standard" | "shifted" | "full" | "all") {
            bad.push(format!("  fit.model: expected standard, shifted, full or all, got '{}'", self.fit.model));
        }
        if self.fit.points < 6 || !(self.fit.eps_min < self.fit.eps_max) || !(self.fit.noise >= 0.0) {
            bad.push("  fit: need points >= 6, eps_min < eps_max and noise >= 0".to_string());
        }
        let st = &self.study;
        if st.eta_points < 1 || st.eps_points < 6 || !(st.eps_min < st.eps_max) || !(st.eta_min <= st.eta_max) {
            bad.push("  study: need eta_points >= 1, eps_points >= 6 and ordered ranges".to_string());
        }
        let em = &self.emission;
        if em.points.is_some_and(|n| n < 2) || em.line_points.is_some_and(|n| n < 2) {
            bad.push("  emission: point counts must be >= 2".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad.join("\n")))
        }
    }
}

fn default_e_nu() -> Vec<f64> {
    vec![0.0, 2.0]
}
fn default_theta() -> f64 {
    PI / 2.0
}
fn one() -> f64 {
    1.0
}
fn default_gamma_vib() -> f64 {
    0.02
}
fn default_field() -> f64 {
    1e-3
}
fn default_delta() -> f64 {
    1e-3
}
fn default_eps_min() -> f64 {
    -6.0
}
fn default_eps_max() -> f64 {
    6.0
}
fn default_scan_points() -> usize {
    61
}
fn default_method() -> String {
    "direct".into()
}
fn default_x_column() -> String {
    "epsilon".into()
}
fn default_y_column() -> String {
    "N_excited".into()
}
fn default_fit_model() -> String {
    "all".into()
}
fn default_q() -> f64 {
    4.0
}
fn default_wide_min() -> f64 {
    -10.0
}
fn default_wide_max() -> f64 {
    10.0
}
fn default_wide_points() -> usize {
    401
}
fn default_eta_points() -> usize {
    11
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[system]
E_e = 20.0
sqrtn_V = 0.5641895835477563
mu_nu_e = [1.772453850905516, 0.886226925452758]
sqrtn_mu_nu_c = [1.0, 0.5]

[rates]
Gamma_c_nu = [0.5, 0.5]
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.spec.e_nu, vec![0.0, 2.0]);
        assert_eq!(cfg.spec.gamma_vib, 0.02);
        assert_eq!(cfg.spec.gamma_e_nu, vec![0.0, 0.0]);
        assert_eq!(cfg.n_k, 401);
        assert!((cfg.w - 40.0).abs() < 1e-12);
        assert_eq!(cfg.scan.points, 61);
        assert_eq!(cfg.study.eps_points, 401);
        assert!(cfg.extract.is_none());
    }

    #[test]
    fn negative_vibrational_rate_is_invalid() {
        let text = MINIMAL.replace("[rates]", "[rates]\nGamma_vib = -1");
        match parse_config(&text) {
            Err(ConfigError::Invalid(msg)) => assert!(msg.contains("Gamma_vib") || msg.contains("gamma_vib"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_named() {
        let text = MINIMAL.replace("E_e = 20.0", "E_e = 20.0\nE_e = 21.0");
        match parse_config(&text) {
            Err(ConfigError::Syntax(msg)) => {
                assert!(msg.contains("E_e"), "{msg}");
                assert!(msg.contains("line"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = MINIMAL.replace("[rates]", "[rates]\nGamma_typo = 1.0");
        match parse_config(&text) {
            Err(ConfigError::Syntax(msg)) => assert!(msg.contains("Gamma_typo"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_required_key() {
        let text = MINIMAL.replace("E_e = 20.0\n", "");
        match parse_config(&text) {
            Err(ConfigError::Syntax(msg)) => assert!(msg.contains("E_e"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn even_point_count_is_invalid() {
        let text = format!("{MINIMAL}\n[continuum]\nN_k = 400\n");
        assert!(matches!(parse_config(&text), Err(ConfigError::Invalid(_))));
    }
}
