//! Closed-form wideband results: Fano profiles, populations, extinction,
//! per-process emission parameters and parameter extraction.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{reduced_parameters, ModelError, SystemSpec};
use crate::spectra::angular_prefactor;

/// Speed of light in the internal unit system (ħ = 1).
pub const SPEED_OF_LIGHT: f64 = 1.0;
/// Vacuum permittivity in the internal unit system.
pub const EPSILON_0: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("sum of continuum decay rates is zero; B_abs is undefined")]
    NoContinuumDecay,
    #[error("unknown process '{0}'")]
    UnknownProcess(String),
    #[error("process '{0}' needs at least {1} ground levels")]
    MissingLevel(Process, usize),
    #[error("{0} is not an emission process")]
    NotEmission(Process),
    #[error("extraction input '{0}' must be positive, got {1}")]
    NonPositive(&'static str, f64),
}

/// Classic Fano profile (q+ε)²/(ε²+1).
pub fn fano_h(eps: f64, q: f64) -> f64 {
    (q + eps) * (q + eps) / (eps * eps + 1.0)
}

/// Modified profile α(q+ε)²/(ε²+1) + η(q+1)/(ε²+1).
///
/// Negative for q < −1 with η > 0.
pub fn profile_f(eps: f64, q: f64, eta: f64, alpha: f64) -> f64 {
    let den = eps * eps + 1.0;
    alpha * (q + eps) * (q + eps) / den + eta * (q + 1.0) / den
}

/// Weak-field wideband population shape h(ε,q) + 2η(q²+1)/(ε²+1).
///
/// This is what the discretized model converges to; it differs from
/// [`profile_f`] in the Lorentzian weight whenever η > 0.
pub fn population_shape(eps: f64, q: f64, eta: f64) -> f64 {
    fano_h(eps, q) + 2.0 * eta * (q * q + 1.0) / (eps * eps + 1.0)
}

/// Normalized Lorentzian (Δ/π)/((ω−ω₀)²+Δ²).
pub fn lorentzian(omega: f64, omega0: f64, delta: f64) -> f64 {
    let x = omega - omega0;
    delta / PI / (x * x + delta * delta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prefactors {
    pub b_abs: f64,
    pub b_ray: f64,
    pub b_ram: f64,
}

/// B_abs = πnμ_0c²F²/(2ΣΓ_cν), B_ray = πnμ_0c²·B_abs, B_ram = πnμ_1c²·B_abs.
///
/// B_ram is zero with a single ground level.
pub fn prefactor_constants(spec: &SystemSpec) -> Result<Prefactors, AnalyticError> {
    let sum = spec.sum_gamma_c();
    if !(sum > 0.0) {
        return Err(AnalyticError::NoContinuumDecay);
    }
    let m0 = spec.sqrtn_mu_nu_c[0];
    let b_abs = PI * m0 * m0 * spec.field * spec.field / (2.0 * sum);
    let b_ram = match spec.sqrtn_mu_nu_c.get(1) {
        Some(m1) => PI * m1 * m1 * b_abs,
        None => 0.0,
    };
    Ok(Prefactors { b_abs, b_ray: PI * m0 * m0 * b_abs, b_ram })
}

/// N_excited = B_abs·f(ε, q, η, 1).
pub fn excited_population_analytic(spec: &SystemSpec, omega_l: f64) -> Result<f64, AnalyticError> {
    let rp = reduced_parameters(spec)?;
    let b = prefactor_constants(spec)?.b_abs;
    Ok(b * profile_f(rp.epsilon_of(omega_l), rp.q_nu[0], rp.eta, 1.0))
}

/// Extinction coefficient (nπμ_0c²/(cε₀))·ω_L·h(ε, q). Independent of η.
pub fn extinction_coefficient(spec: &SystemSpec, omega_l: f64) -> Result<f64, AnalyticError> {
    let rp = reduced_parameters(spec)?;
    let m0 = spec.sqrtn_mu_nu_c[0];
    let pre = PI * m0 * m0 / (SPEED_OF_LIGHT * EPSILON_0);
    Ok(pre * omega_l * profile_f(rp.epsilon_of(omega_l), rp.q_nu[0], 0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Process {
    Populations,
    Rayleigh,
    Raman,
    FluorDiscrete0,
    FluorDiscrete1,
    FluorContinuum0,
    FluorContinuum1,
}

impl Process {
    pub const ALL: [Process; 7] = [
        Process::Populations,
        Process::Rayleigh,
        Process::Raman,
        Process::FluorDiscrete0,
        Process::FluorDiscrete1,
        Process::FluorContinuum0,
        Process::FluorContinuum1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Process::Populations => "populations",
            Process::Rayleigh => "rayleigh",
            Process::Raman => "raman",
            Process::FluorDiscrete0 => "fluor_discrete_0",
            Process::FluorDiscrete1 => "fluor_discrete_1",
            Process::FluorContinuum0 => "fluor_continuum_0",
            Process::FluorContinuum1 => "fluor_continuum_1",
        }
    }

    /// Ground level the emission ends in (0 for populations).
    pub fn final_level(self) -> usize {
        match self {
            Process::Raman | Process::FluorDiscrete1 | Process::FluorContinuum1 => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Process {
    type Err = AnalyticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Process::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| AnalyticError::UnknownProcess(s.to_string()))
    }
}

/// Profile half of a process row: f(ε·eps_scale, q_eff, eta_w, alpha) scaled by `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSpec {
    pub alpha: f64,
    pub eta_w: f64,
    pub q_eff: f64,
    pub eps_scale: f64,
    pub b: f64,
}

impl ProfileSpec {
    pub fn eval(&self, eps: f64) -> f64 {
        self.b * profile_f(eps * self.eps_scale, self.q_eff, self.eta_w, self.alpha)
    }
}

/// Emission lineshape: a Lorentzian at `center`, shifted with the laser
/// when `follows_laser` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineshapeSpec {
    /// Absolute center, or the offset from ω_L when `follows_laser`.
    pub center: f64,
    pub follows_laser: bool,
    pub half_width: f64,
}

impl LineshapeSpec {
    pub fn center_at(&self, omega_l: f64) -> f64 {
        if self.follows_laser {
            omega_l + self.center
        } else {
            self.center
        }
    }
}

/// One row of the per-process parameter table.
///
/// Weights are taken verbatim with ħ = 1. Rows ending in ν = 1 use q_1 as the
/// asymmetry and μ_1 dipoles. The fluorescence rows reuse B_ray (ν = 0) and
/// B_ram (ν = 1) as their prefactors. Populations carry no lineshape and
/// return a zero-width one.
pub fn table1_row(process: Process, spec: &SystemSpec) -> Result<(ProfileSpec, LineshapeSpec), AnalyticError> {
    let rp = reduced_parameters(spec)?;
    let pre = prefactor_constants(spec)?;
    let nu = process.final_level();
    if nu >= spec.n_nu() {
        return Err(AnalyticError::MissingLevel(process, nu + 1));
    }
    let g = rp.gamma;
    let ge0 = spec.gamma_e_nu[0];
    let ge1 = spec.gamma_e_nu.get(1).copied().unwrap_or(0.0);
    let scale = g / (g + ge0);
    let q = rp.q_nu[nu];
    let sum_gc = spec.sum_gamma_c();
    let wvib = spec.omega_vib();
    let b_nu = if nu == 0 { pre.b_ray } else { pre.b_ram };
    let laser = |offset: f64, half_width: f64| LineshapeSpec { center: offset, follows_laser: true, half_width };
    let fixed = |center: f64, half_width: f64| LineshapeSpec { center, follows_laser: false, half_width };
    let coherent_weight = {
        let mu_e = spec.mu_nu_e[nu];
        let mu_c = spec.sqrtn_mu_nu_c[nu];
        mu_e * mu_e / (mu_c * mu_c) * rp.eta
    };
    let cont_weight = ge0 * ge0 / ((g + ge0) * (g + ge0)) / (q * q + 1.0);
    let row = match process {
        Process::Populations => (
            ProfileSpec { alpha: 1.0, eta_w: rp.eta, q_eff: q, eps_scale: 1.0, b: pre.b_abs },
            laser(0.0, 0.0),
        ),
        Process::Rayleigh => (
            ProfileSpec { alpha: 1.0, eta_w: coherent_weight, q_eff: q, eps_scale: 1.0, b: pre.b_ray },
            laser(0.0, spec.laser_delta),
        ),
        Process::Raman => (
            ProfileSpec { alpha: 1.0, eta_w: coherent_weight, q_eff: q, eps_scale: 1.0, b: pre.b_ram },
            laser(-wvib, 0.5 * spec.gamma_vib),
        ),
        Process::FluorDiscrete0 | Process::FluorDiscrete1 => {
            let width = if nu == 0 { g + ge0 } else { g + ge1 + 0.5 * spec.gamma_vib };
            (
                ProfileSpec {
                    alpha: 0.0,
                    eta_w: scale * scale * rp.eta,
                    q_eff: q * scale,
                    eps_scale: scale,
                    b: b_nu,
                },
                fixed(spec.e_e - spec.e_nu[nu], width),
            )
        }
        Process::FluorContinuum0 | Process::FluorContinuum1 => {
            let width = if nu == 0 { sum_gc + 2.0 * ge0 } else { sum_gc + ge0 + ge1 + 0.5 * spec.gamma_vib };
            (
                ProfileSpec { alpha: 1.0, eta_w: cont_weight, q_eff: q * scale, eps_scale: scale, b: b_nu },
                laser(if nu == 0 { 0.0 } else { -wvib }, width),
            )
        }
    };
    Ok(row)
}

/// d²σ/dΩdω = A(θ)·B·R(ω, ω₀, Δ)·f(ε', q', η', α) for one emission process.
pub fn emission_cross_section_analytic(
    process: Process,
    spec: &SystemSpec,
    omega: f64,
    omega_l: f64,
) -> Result<f64, AnalyticError> {
    if process == Process::Populations {
        return Err(AnalyticError::NotEmission(process));
    }
    let rp = reduced_parameters(spec)?;
    let (prof, line) = table1_row(process, spec)?;
    let a = angular_prefactor(omega, spec.theta, spec.i_in);
    let r = lorentzian(omega, line.center_at(omega_l), line.half_width);
    Ok(a * r * prof.eval(rp.epsilon_of(omega_l)))
}

/// Model parameters recovered from fitted profile constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractedParams {
    pub sum_gamma_c: f64,
    pub sqrtn_v: f64,
    pub sqrtn_mu_0c: f64,
    pub mu_0e: f64,
    pub sqrtn_mu_1c: f64,
    pub mu_1e: f64,
}

pub fn extract_parameters(
    b_abs: f64,
    b_ray: f64,
    b_ram: f64,
    gamma: f64,
    q: f64,
    eta_ram: f64,
    field: f64,
) -> Result<ExtractedParams, AnalyticError> {
    for (name, v) in [
        ("B_abs", b_abs),
        ("B_ray", b_ray),
        ("B_ram", b_ram),
        ("gamma", gamma),
        ("q", q),
        ("eta_ram", eta_ram),
        ("F", field),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(AnalyticError::NonPositive(name, v));
        }
    }
    Ok(ExtractedParams {
        sum_gamma_c: b_ray / (b_abs * b_abs) * field * field / 2.0,
        sqrtn_v: (gamma / PI).sqrt(),
        sqrtn_mu_0c: (b_ray / (PI * b_abs)).sqrt(),
        mu_0e: (b_ray * gamma / b_abs).sqrt() * q,
        sqrtn_mu_1c: (b_ram / (PI * b_abs)).sqrt(),
        mu_1e: 8.0 * eta_ram * gamma * b_abs * b_ram / (PI * b_ray * field * field),
    })
}

/// The Raman weight η·μ_1e/(nμ_1c²) that the extraction relation for μ_1e inverts.
///
/// Linear in μ_1e, unlike the tabulated Raman weight η·μ_1e²/(nμ_1c²).
pub fn eta_ram_for_extraction(spec: &SystemSpec) -> Result<f64, AnalyticError> {
    if spec.n_nu() < 2 {
        return Err(AnalyticError::MissingLevel(Process::Raman, 2));
    }
    let rp = reduced_parameters(spec)?;
    let m1 = spec.sqrtn_mu_nu_c[1];
    Ok(rp.eta * spec.mu_nu_e[1] / (m1 * m1))
}
