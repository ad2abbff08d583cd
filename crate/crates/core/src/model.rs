//! Physical parameters, wideband reduction and continuum discretization.
//!
//! Units: ħ = 1 throughout, every rate is stored as an energy.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("zero continuum coupling: gamma = pi * sqrtn_V^2 vanishes")]
    ZeroCoupling,
    #[error("continuum point count must be odd and >= 3, got {0}")]
    BadPointCount(usize),
    #[error("continuum half-bandwidth must be positive, got {0}")]
    BadBandwidth(f64),
    #[error("invalid spec: {0}")]
    Invalid(String),
}

/// Parameters of the dissipative Fano model.
///
/// `sqrtn_v` and `sqrtn_mu_nu_c` carry the density of states folded in
/// (√n·V and √n·μ_νc), the only combinations optical data can identify.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    /// Ground vibrational energies, `e_nu[0] == 0`.
    pub e_nu: Vec<f64>,
    pub e_e: f64,
    pub sqrtn_v: f64,
    pub mu_nu_e: Vec<f64>,
    pub sqrtn_mu_nu_c: Vec<f64>,
    /// Decay rate of every continuum state into ground level ν.
    pub gamma_c_nu: Vec<f64>,
    pub gamma_vib: f64,
    pub gamma_e_nu: Vec<f64>,
    pub gamma_k_nu: Vec<f64>,
    pub gamma_k_e: f64,
    /// Field amplitude; `field * mu` is an energy.
    pub field: f64,
    /// Laser half-linewidth δ.
    pub laser_delta: f64,
    pub theta: f64,
    pub i_in: f64,
}

impl SystemSpec {
    pub fn n_nu(&self) -> usize {
        self.e_nu.len()
    }

    pub fn sum_gamma_c(&self) -> f64 {
        self.gamma_c_nu.iter().sum()
    }

    /// ħω_vib = E_1 − E_0, zero with a single ground level.
    pub fn omega_vib(&self) -> f64 {
        if self.e_nu.len() > 1 {
            self.e_nu[1] - self.e_nu[0]
        } else {
            0.0
        }
    }

    pub fn with_field(&self, field: f64) -> Self {
        Self { field, ..self.clone() }
    }

    /// Reference two-level-ground configuration with γ = 1.
    ///
    /// `q` sets μ_0e through q_0 = μ_0e / (π √nV √nμ_0c); `eta` sets the
    /// continuum decay split evenly over both ground levels.
    pub fn reference(q: f64, eta: f64) -> Self {
        let sqrtn_v = 1.0 / PI.sqrt();
        let sqrtn_mu_nu_c = vec![1.0, 0.5];
        let q1 = 0.5;
        let gamma = PI * sqrtn_v * sqrtn_v;
        let sum_gc = 4.0 * gamma * eta;
        Self {
            e_nu: vec![0.0, 2.0],
            e_e: 20.0,
            sqrtn_v,
            mu_nu_e: vec![
                q * PI * sqrtn_v * sqrtn_mu_nu_c[0],
                q1 * PI * sqrtn_v * sqrtn_mu_nu_c[1],
            ],
            sqrtn_mu_nu_c,
            gamma_c_nu: vec![0.5 * sum_gc, 0.5 * sum_gc],
            gamma_vib: 0.02,
            gamma_e_nu: vec![0.0, 0.0],
            gamma_k_nu: vec![0.0, 0.0],
            gamma_k_e: 0.0,
            field: 1e-3,
            laser_delta: 1e-3,
            theta: PI / 2.0,
            i_in: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: &'static str, message: impl Into<String>) {
        self.violations.push(Violation { field, message: message.into() });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed() {
            return write!(f, "pass");
        }
        write!(f, "fail")?;
        for v in &self.violations {
            write!(f, "\n  {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

pub fn validate_spec(spec: &SystemSpec) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let n = spec.e_nu.len();
    if n == 0 {
        rep.push("E_nu", "at least one ground level is required");
    } else {
        if spec.e_nu[0] != 0.0 {
            rep.push("E_nu", "E_0 must be 0");
        }
        if spec.e_nu.windows(2).any(|w| !(w[1] > w[0])) {
            rep.push("E_nu", "energies must be strictly increasing");
        }
    }
    let lists: [(&'static str, &Vec<f64>); 5] = [
        ("mu_nu_e", &spec.mu_nu_e),
        ("sqrtn_mu_nu_c", &spec.sqrtn_mu_nu_c),
        ("Gamma_c_nu", &spec.gamma_c_nu),
        ("gamma_e_nu", &spec.gamma_e_nu),
        ("gamma_k_nu", &spec.gamma_k_nu),
    ];
    for (name, list) in lists {
        if list.len() != n {
            rep.push(name, format!("length {} does not match E_nu length {n}", list.len()));
        }
        if list.iter().any(|x| !x.is_finite()) {
            rep.push(name, "non-finite entry");
        }
    }
    let rate_lists: [(&'static str, &Vec<f64>); 3] = [
        ("Gamma_c_nu", &spec.gamma_c_nu),
        ("gamma_e_nu", &spec.gamma_e_nu),
        ("gamma_k_nu", &spec.gamma_k_nu),
    ];
    for (name, list) in rate_lists {
        if list.iter().any(|&x| x < 0.0) {
            rep.push(name, "negative rate");
        }
    }
    let rates: [(&'static str, f64); 3] = [
        ("Gamma_vib", spec.gamma_vib),
        ("gamma_k_e", spec.gamma_k_e),
        ("laser_delta", spec.laser_delta),
    ];
    for (name, x) in rates {
        if !x.is_finite() {
            rep.push(name, "non-finite value");
        } else if x < 0.0 {
            rep.push(name, "negative rate");
        }
    }
    if !spec.sqrtn_v.is_finite() || spec.sqrtn_v <= 0.0 {
        rep.push("sqrtn_V", "zero continuum coupling");
    }
    if !spec.e_e.is_finite() {
        rep.push("E_e", "non-finite value");
    }
    if !spec.field.is_finite() {
        rep.push("F", "non-finite value");
    }
    if !spec.theta.is_finite() {
        rep.push("theta", "non-finite value");
    }
    if !(spec.i_in > 0.0) || !spec.i_in.is_finite() {
        rep.push("I_in", "incident intensity must be positive");
    }
    rep
}

/// Wideband parameters γ, q_ν, η.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedParams {
    pub gamma: f64,
    pub q_nu: Vec<f64>,
    pub eta: f64,
    pub e_e: f64,
}

impl ReducedParams {
    /// ε = (ħω_L − E_e)/γ.
    pub fn epsilon_of(&self, omega_l: f64) -> f64 {
        (omega_l - self.e_e) / self.gamma
    }

    pub fn omega_of(&self, eps: f64) -> f64 {
        self.e_e + self.gamma * eps
    }
}

pub fn reduced_parameters(spec: &SystemSpec) -> Result<ReducedParams, ModelError> {
    let gamma = PI * spec.sqrtn_v * spec.sqrtn_v;
    if !(gamma > 0.0) {
        return Err(ModelError::ZeroCoupling);
    }
    let q_nu = spec
        .mu_nu_e
        .iter()
        .zip(&spec.sqrtn_mu_nu_c)
        .map(|(&mu_e, &mu_c)| mu_e / (PI * spec.sqrtn_v * mu_c))
        .collect();
    Ok(ReducedParams {
        gamma,
        q_nu,
        eta: spec.sum_gamma_c() / (4.0 * gamma),
        e_e: spec.e_e,
    })
}

/// Finite basis `[ν = 0..g, e, k_0..k_{N_k−1}]` with a uniform continuum.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedModel {
    pub spec: SystemSpec,
    pub w: f64,
    pub n_k: usize,
    pub de: f64,
    /// Per-state e–k coupling √n·V·√dE.
    pub v: f64,
    /// Per-state continuum dipoles √n·μ_νc·√dE.
    pub mu_disc: Vec<f64>,
    pub e_k: Vec<f64>,
}

impl DiscretizedModel {
    pub fn n_nu(&self) -> usize {
        self.spec.e_nu.len()
    }

    /// Number of excited states (e plus the continuum).
    pub fn n_x(&self) -> usize {
        self.n_k + 1
    }

    pub fn dim(&self) -> usize {
        self.n_nu() + 1 + self.n_k
    }

    pub fn index_e(&self) -> usize {
        self.n_nu()
    }

    pub fn index_k(&self, j: usize) -> usize {
        self.n_nu() + 1 + j
    }

    pub fn is_excited(&self, l: usize) -> bool {
        l >= self.n_nu()
    }

    /// Golden-rule width π v²/dE.
    pub fn gamma(&self) -> f64 {
        PI * self.v * self.v / self.de
    }

    /// Bare energy of basis state `l`.
    pub fn energy(&self, l: usize) -> f64 {
        let g = self.n_nu();
        if l < g {
            self.spec.e_nu[l]
        } else if l == g {
            self.spec.e_e
        } else {
            self.e_k[l - g - 1]
        }
    }

    /// Transition dipole between ground level `nu` and excited index `x`
    /// (0 = e, 1 + j = k_j).
    pub fn dipole(&self, nu: usize, x: usize) -> f64 {
        if x == 0 {
            self.spec.mu_nu_e[nu]
        } else {
            self.mu_disc[nu]
        }
    }

    pub fn has_dephasing(&self) -> bool {
        let s = &self.spec;
        s.gamma_k_e != 0.0
            || s.gamma_e_nu.iter().any(|&x| x != 0.0)
            || s.gamma_k_nu.iter().any(|&x| x != 0.0)
    }
}

pub fn discretize(spec: &SystemSpec, w: f64, n_k: usize) -> Result<DiscretizedModel, ModelError> {
    if n_k < 3 || n_k % 2 == 0 {
        return Err(ModelError::BadPointCount(n_k));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(ModelError::BadBandwidth(w));
    }
    let rep = validate_spec(spec);
    if !rep.passed() {
        return Err(ModelError::Invalid(rep.to_string()));
    }
    let de = 2.0 * w / (n_k - 1) as f64;
    let half = (n_k - 1) / 2;
    let e_k = (0..n_k)
        .map(|j| spec.e_e + (j as f64 - half as f64) * de)
        .collect();
    let root = de.sqrt();
    Ok(DiscretizedModel {
        spec: spec.clone(),
        w,
        n_k,
        de,
        v: spec.sqrtn_v * root,
        mu_disc: spec.sqrtn_mu_nu_c.iter().map(|m| m * root).collect(),
        e_k,
    })
}
