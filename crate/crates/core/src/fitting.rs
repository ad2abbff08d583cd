//! Least-squares fits of Fano-type profiles and the q_eff error study.

use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::profile_f;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {0} data points, got {1}")]
    TooFewPoints(usize, usize),
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("data series is constant")]
    Constant,
    #[error("non-finite data")]
    NonFinite,
    #[error("every start diverged")]
    Diverged,
    #[error("unknown model kind '{0}'")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// C·h((x−x₀)/w, q)
    Standard,
    /// C·(h((x−x₀)/w, q) + D)
    Shifted,
    /// C·f((x−x₀)/w, q, η, 1)
    Full,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Standard => "standard",
            ModelKind::Shifted => "shifted",
            ModelKind::Full => "full",
        }
    }

    fn n_params(self) -> usize {
        match self {
            ModelKind::Standard => 4,
            _ => 5,
        }
    }

    /// Value and parameter gradient at x. Parameters: [C, x₀, w, q, (D | η)].
    fn eval(self, x: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let (c, x0, w, q) = (p[0], p[1], p[2], p[3]);
        let u = (x - x0) / w;
        let den = u * u + 1.0;
        let s = q + u;
        let h = s * s / den;
        let dh_du = 2.0 * s * (1.0 - q * u) / (den * den);
        let dh_dq = 2.0 * s / den;
        let (shape, ds_du, ds_dq) = match self {
            ModelKind::Standard => (h, dh_du, dh_dq),
            ModelKind::Shifted => (h + p[4], dh_du, dh_dq),
            ModelKind::Full => {
                let eta = p[4];
                let l = eta * (q + 1.0) / den;
                (h + l, dh_du - 2.0 * u * l / den, dh_dq + eta / den)
            }
        };
        grad[0] = shape;
        grad[1] = -c * ds_du / w;
        grad[2] = -c * ds_du * u / w;
        grad[3] = c * ds_dq;
        match self {
            ModelKind::Standard => {}
            ModelKind::Shifted => grad[4] = c,
            ModelKind::Full => grad[4] = c * (q + 1.0) / den,
        }
        c * shape
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(ModelKind::Standard),
            "shifted" => Ok(ModelKind::Shifted),
            "full" => Ok(ModelKind::Full),
            other => Err(FitError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when ‖Δp‖ ≤ xtol·(‖p‖ + xtol).
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 500, xtol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// ‖Jᵀr‖ at the returned parameters.
    pub grad_norm: f64,
}

/// Levenberg–Marquardt with Marquardt diagonal scaling.
///
/// `model(x, p, grad)` returns the model value and writes ∂m/∂p into `grad`.
pub fn levenberg_marquardt<M>(model: M, xs: &[f64], ys: &[f64], p0: &[f64], opts: LmOptions) -> LmOutcome
where
    M: Fn(f64, &[f64], &mut [f64]) -> f64,
{
    let n = p0.len();
    let mut grad = vec![0.0; n];
    let normal = |p: &[f64], grad: &mut [f64]| -> (Mat<f64>, Vec<f64>, f64) {
        let mut a = Mat::<f64>::zeros(n, n);
        let mut g = vec![0.0; n];
        let mut sse = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            let r = y - model(x, p, grad);
            sse += r * r;
            for i in 0..n {
                g[i] += grad[i] * r;
                for j in 0..=i {
                    a[(i, j)] += grad[i] * grad[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                a[(j, i)] = a[(i, j)];
            }
        }
        (a, g, sse)
    };
    let sse_of = |p: &[f64], grad: &mut [f64]| -> f64 {
        xs.iter().zip(ys).map(|(&x, &y)| (y - model(x, p, grad)).powi(2)).sum()
    };

    let mut p = p0.to_vec();
    let (mut a, mut g, mut sse) = normal(&p, &mut grad);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter && sse.is_finite() {
        iterations += 1;
        if sse == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let m = Mat::from_fn(n, n, |i, j| {
                if i == j {
                    a[(i, i)] + lambda * a[(i, i)].max(1e-300)
                } else {
                    a[(i, j)]
                }
            });
            let rhs = Mat::from_fn(n, 1, |i, _| g[i]);
            let step = m.partial_piv_lu().solve(&rhs);
            let trial: Vec<f64> = (0..n).map(|i| p[i] + step[(i, 0)]).collect();
            let trial_sse = sse_of(&trial, &mut grad);
            if trial_sse.is_finite() && trial_sse <= sse {
                let dn: f64 = (0..n).map(|i| step[(i, 0)].powi(2)).sum::<f64>().sqrt();
                let pn: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                p = trial;
                (a, g, sse) = normal(&p, &mut grad);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if dn <= opts.xtol * (pn + opts.xtol) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // No descent direction left at machine precision.
            converged = true;
            break;
        }
    }
    let grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    LmOutcome { params: p, sse, iterations, converged, grad_norm }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub kind: ModelKind,
    pub c: f64,
    pub x0: f64,
    pub width: f64,
    pub q: f64,
    /// Background offset (shifted model).
    pub d: Option<f64>,
    /// Lorentzian weight (full model).
    pub eta: Option<f64>,
    pub sse: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl FitReport {
    pub fn eval(&self, x: f64) -> f64 {
        let mut grad = [0.0; 5];
        self.kind.eval(x, &self.params(), &mut grad)
    }

    fn params(&self) -> Vec<f64> {
        let mut p = vec![self.c, self.x0, self.width, self.q];
        if let Some(v) = self.d.or(self.eta) {
            p.push(v);
        }
        p
    }
}

/// Extra starting points on top of the built-in multi-start grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitInit {
    pub q_starts: Option<Vec<f64>>,
    pub eta_start: Option<f64>,
    pub lm: LmOptions,
}

const Q_STARTS: [f64; 10] = [0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0, 8.0, -8.0];

fn check_data(xs: &[f64], ys: &[f64]) -> Result<(), FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 8 {
        return Err(FitError::TooFewPoints(8, xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
        return Err(FitError::Constant);
    }
    Ok(())
}

/// Starting points from the peak/trough positions: a Fano profile peaks at
/// u = 1/q and vanishes at u = −q.
fn starts(kind: ModelKind, xs: &[f64], ys: &[f64], init: &FitInit) -> Vec<Vec<f64>> {
    let (imax, imin) = ys.iter().enumerate().fold((0, 0), |(a, b), (i, &y)| {
        (if y > ys[a] { i } else { a }, if y < ys[b] { i } else { b })
    });
    let (xmax, xmin) = (xs[imax], xs[imin]);
    let (ymax, ymin) = (ys[imax], ys[imin]);
    let edge = 0.5 * (ys[0] + ys[ys.len() - 1]);
    let span = (xs[xs.len() - 1] - xs[0]).abs().max(f64::MIN_POSITIVE);
    let half = {
        let level = 0.5 * (ymax + edge);
        let mut l = imax;
        while l > 0 && ys[l] > level {
            l -= 1;
        }
        let mut r = imax;
        while r + 1 < ys.len() && ys[r] > level {
            r += 1;
        }
        (0.5 * (xs[r] - xs[l]).abs()).max(span * 1e-3)
    };
    let qs = init.q_starts.clone().unwrap_or_else(|| Q_STARTS.to_vec());
    let mut out = Vec::new();
    for &q in &qs {
        let sep = xmax - xmin;
        let mut widths = vec![half];
        if sep != 0.0 {
            let w = sep / (1.0 / q + q);
            if w.is_finite() && w != 0.0 {
                widths.push(w);
            }
        }
        for w in widths {
            let x0 = xmax - w / q;
            let base = match kind {
                ModelKind::Standard => 0.0,
                ModelKind::Shifted => ymin.min(edge),
                ModelKind::Full => 0.0,
            };
            let c = ((ymax - base) / (1.0 + q * q)).max(f64::MIN_POSITIVE);
            let mut p = vec![c, x0, w, q];
            match kind {
                ModelKind::Standard => {}
                ModelKind::Shifted => p.push(base / c),
                ModelKind::Full => p.push(init.eta_start.unwrap_or(0.2)),
            }
            out.push(p);
        }
    }
    out
}

/// Maps (w, q) to (−w, −q) when the width came out negative; the full model
/// also rescales η to keep η(q+1) fixed.
fn fold(kind: ModelKind, p: &mut [f64]) {
    if p[2] >= 0.0 {
        return;
    }
    if kind == ModelKind::Full {
        let q = p[3];
        if (1.0 - q).abs() < 1e-12 {
            return;
        }
        p[4] *= (q + 1.0) / (1.0 - q);
    }
    p[2] = -p[2];
    p[3] = -p[3];
}

pub fn fit_profile(xs: &[f64], ys: &[f64], kind: ModelKind, init: &FitInit) -> Result<FitReport, FitError> {
    check_data(xs, ys)?;
    let model = |x: f64, p: &[f64], g: &mut [f64]| kind.eval(x, p, g);
    let mut best: Option<LmOutcome> = None;
    for p0 in starts(kind, xs, ys, init) {
        let mut out = levenberg_marquardt(model, xs, ys, &p0, init.lm);
        if !out.sse.is_finite() || out.params.iter().any(|v| !v.is_finite()) || out.params[2] == 0.0 {
            continue;
        }
        fold(kind, &mut out.params);
        best = Some(match best {
            None => out,
            Some(b) => {
                let tol = 1e-12 * b.sse.max(out.sse).max(f64::MIN_POSITIVE);
                let tie = (out.sse - b.sse).abs() <= tol;
                if (tie && out.params[3].abs() < b.params[3].abs()) || (!tie && out.sse < b.sse) {
                    out
                } else {
                    b
                }
            }
        });
    }
    let b = best.ok_or(FitError::Diverged)?;
    debug_assert_eq!(b.params.len(), kind.n_params());
    Ok(FitReport {
        kind,
        c: b.params[0],
        x0: b.params[1],
        width: b.params[2],
        q: b.params[3],
        d: (kind == ModelKind::Shifted).then(|| b.params[4]),
        eta: (kind == ModelKind::Full).then(|| b.params[4]),
        sse: b.sse,
        converged: b.converged,
        iterations: b.iterations,
        grad_norm: b.grad_norm,
    })
}

/// Parameters of a synthetic profile C·f((ε−x₀)/w, q, η, α).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub c: f64,
    pub q: f64,
    pub eta: f64,
    pub alpha: f64,
    pub x0: f64,
    pub width: f64,
}

impl SynthParams {
    pub fn new(q: f64, eta: f64) -> Self {
        Self { c: 1.0, q, eta, alpha: 1.0, x0: 0.0, width: 1.0 }
    }

    pub fn eval(&self, eps: f64) -> f64 {
        self.c * profile_f((eps - self.x0) / self.width, self.q, self.eta, self.alpha)
    }
}

/// Profile values plus N(0, σ²) noise, reproducible per seed.
pub fn synth_profile(params: &SynthParams, eps_grid: &[f64], noise_sigma: f64, seed: u64) -> Vec<f64> {
    let clean = eps_grid.iter().map(|&e| params.eval(e));
    if noise_sigma <= 0.0 {
        return clean.collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma).expect("finite sigma");
    clean.map(|v| v + normal.sample(&mut rng)).collect()
}

/// Uniform grid of `n` points on [lo, hi].
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStudyRow {
    pub eta: f64,
    pub qeff_standard: Result<f64, FitError>,
    pub qeff_shifted: Result<f64, FitError>,
    pub q_true: f64,
}

impl ErrorStudyRow {
    pub fn relerr_standard(&self) -> Option<f64> {
        self.qeff_standard.as_ref().ok().map(|q| (q - self.q_true).abs() / self.q_true)
    }

    pub fn relerr_shifted(&self) -> Option<f64> {
        self.qeff_shifted.as_ref().ok().map(|q| (q - self.q_true).abs() / self.q_true)
    }
}

/// Fits noiseless C·f(ε, q_true, η, 1) with the standard and shifted models.
pub fn model_error_study(q_true: f64, eta_grid: &[f64], eps_grid: &[f64]) -> Vec<ErrorStudyRow> {
    let init = FitInit::default();
    eta_grid
        .par_iter()
        .map(|&eta| {
            let ys = synth_profile(&SynthParams::new(q_true, eta), eps_grid, 0.0, 0);
            let q_of = |kind| fit_profile(eps_grid, &ys, kind, &init).map(|r| r.q);
            ErrorStudyRow {
                eta,
                qeff_standard: q_of(ModelKind::Standard),
                qeff_shifted: q_of(ModelKind::Shifted),
                q_true,
            }
        })
        .collect()
}
