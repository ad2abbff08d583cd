//! Emission spectra through the quantum regression theorem, their
//! decomposition into Lorentzian components, and absorption scans.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{lorentzian, table1_row, AnalyticError, Process, EPSILON_0, SPEED_OF_LIGHT};
use crate::blocks::{BlockRhs, BlockSolver, SolveError};
use crate::fitting::{levenberg_marquardt, LmOptions};
use crate::liouvillian::Superoperator;
use crate::linalg::norm;
use crate::model::{reduced_parameters, DiscretizedModel, ModelError, SystemSpec};
use crate::steadystate::{solve_direct, weak_field_population};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("laser half-width must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("frequency grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error("expected an emission spectrum")]
    NotEmission,
    #[error("only {0} grid points inside the {1} window")]
    SparseWindow(usize, Process),
    #[error("{0} fit did not converge")]
    FitFailed(Process),
}

/// A(θ) = ω⁴ sin²θ / (8π³ c³ ε₀ I_in), with ħ = 1.
pub fn angular_prefactor(omega: f64, theta: f64, i_in: f64) -> f64 {
    let s = theta.sin();
    omega.powi(4) * s * s / (i_in * 8.0 * PI.powi(3) * SPEED_OF_LIGHT.powi(3) * EPSILON_0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisKind {
    /// Emitted frequency ω at fixed laser frequency.
    Emission { omega_l: f64 },
    /// Laser frequency ω_L.
    Laser,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    pub axis: AxisKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// ε of each grid point (laser axis only).
    pub epsilon: Option<Vec<f64>>,
    pub field: f64,
    pub delta: f64,
}

impl SpectrumSeries {
    /// The same series divided by A(θ) at each emitted frequency.
    pub fn without_prefactor(&self, theta: f64, i_in: f64) -> SpectrumSeries {
        let values = match self.axis {
            AxisKind::Emission { .. } => {
                self.grid.iter().zip(&self.values).map(|(&w, &v)| v / angular_prefactor(w, theta, i_in)).collect()
            }
            AxisKind::Laser => self.values.clone(),
        };
        SpectrumSeries { values, ..self.clone() }
    }

    /// Trapezoidal integral over the whole grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    /// Trapezoidal integral of `values − model(ω)` over [lo, hi].
    pub fn integral_between(&self, lo: f64, hi: f64, model: impl Fn(f64) -> f64) -> f64 {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .grid
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .map(|(&w, &v)| (w, v - model(w)))
            .unzip();
        trapezoid(&x, &y)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum()
}

fn check_grid(grid: &[f64]) -> Result<(), SpectraError> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|v| !v.is_finite()) {
        return Err(SpectraError::BadGrid);
    }
    Ok(())
}

/// Solves (z·1 − A)x = rhs by sparse LU.
pub fn resolvent_solve(a: &Superoperator, z: c64, rhs: &[c64]) -> Result<Vec<c64>, SolveError> {
    let n = a.dim();
    assert_eq!(rhs.len(), n, "rhs length must equal the superoperator dimension");
    if rhs.iter().all(|v| *v == c64::new(0.0, 0.0)) {
        return Ok(vec![c64::new(0.0, 0.0); n]);
    }
    let mut trip: Vec<Triplet<usize, usize, c64>> =
        a.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, -v)).collect();
    trip.extend((0..n).map(|i| Triplet::new(i, i, z)));
    let m = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &trip).map_err(|_| SolveError::Singular(z))?;
    let lu = m.sp_lu().map_err(|_| SolveError::Singular(z))?;
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let sol = lu.solve(&b);
    let x: Vec<c64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let ax = a.apply(&x);
    let r: Vec<c64> = (0..n).map(|i| z * x[i] - ax[i] - rhs[i]).collect();
    let rel = norm(&r) / norm(rhs);
    if !(rel < 1e-10) {
        return Err(SolveError::Singular(z));
    }
    Ok(x)
}

/// Emission spectrum at laser frequency ω_L.
///
/// S(ω) = A(θ)·Re Tr[D⁺ (z − A)⁻¹ D⁻ρ_ss], z = δ + i(ω − ω_L), with A the
/// field-dressed RWA Liouvillian and D⁻ the lowering part of the dipole.
pub fn emission_spectrum(
    solver: &BlockSolver,
    field: f64,
    omega_l: f64,
    omega_grid: &[f64],
    delta: f64,
) -> Result<SpectrumSeries, SpectraError> {
    if !(delta > 0.0) {
        return Err(SpectraError::NonPositiveDelta(delta));
    }
    check_grid(omega_grid)?;
    let ss = solver.steady_state(field, omega_l)?;
    let (g, p) = solver.dims();
    let phi = solver.phi();
    let rhs = BlockRhs {
        gg: Some(phi * &ss.xg),
        gx: Some(solver.dipole_times_x(ss.xt.as_ref())),
        xg: None,
        xx: None,
    };
    let spec = &solver.model().spec;
    let values = omega_grid
        .par_iter()
        .map(|&w| {
            let z = c64::new(delta, w - omega_l);
            let st = solver.resolvent(field, omega_l, z, &rhs)?;
            let mut acc = 0.0;
            for nu in 0..g {
                for x in 0..p {
                    acc += (phi[(nu, x)] * st.gx[(nu, x)]).re;
                }
            }
            Ok(angular_prefactor(w, spec.theta, spec.i_in) * acc)
        })
        .collect::<Result<Vec<f64>, SolveError>>()?;
    Ok(SpectrumSeries {
        axis: AxisKind::Emission { omega_l },
        grid: omega_grid.to_vec(),
        values,
        epsilon: None,
        field,
        delta,
    })
}

/// Coarse uniform grid on [lo, hi] merged with fine windows of ±`span`
/// half-widths around the Rayleigh and Raman lines.
pub fn emission_grid(spec: &SystemSpec, omega_l: f64, lo: f64, hi: f64, n_coarse: usize, n_line: usize, span: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = crate::fitting::linspace(lo, hi, n_coarse);
    let mut lines = vec![(omega_l, spec.laser_delta)];
    if spec.n_nu() > 1 {
        lines.push((omega_l - spec.omega_vib(), 0.5 * spec.gamma_vib + spec.laser_delta));
    }
    for (c, hw) in lines {
        if hw > 0.0 {
            pts.extend(crate::fitting::linspace(c - span * hw, c + span * hw, n_line));
        }
    }
    pts.retain(|w| w.is_finite() && *w >= lo && *w <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    pts
}

/// One fitted emission component.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    pub component: Process,
    pub center: f64,
    pub half_width: f64,
    pub area: f64,
    /// RMS residual of the local fit relative to the window maximum.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFit {
    pub process: Process,
    pub result: Result<PeakReport, SpectraError>,
}

/// Lorentzian sum plus linear background. Per line: [area, center, half-width];
/// two trailing background terms b₀ + b₁(ω − ω_ref).
fn lorentz_model(n_lines: usize, w_ref: f64) -> impl Fn(f64, &[f64], &mut [f64]) -> f64 {
    move |w: f64, p: &[f64], grad: &mut [f64]| {
        let mut v = 0.0;
        for l in 0..n_lines {
            let (a, c, hw) = (p[3 * l], p[3 * l + 1], p[3 * l + 2]);
            let x = w - c;
            let den = x * x + hw * hw;
            let r = hw / PI / den;
            v += a * r;
            grad[3 * l] = r;
            grad[3 * l + 1] = a * 2.0 * x * hw / PI / (den * den);
            grad[3 * l + 2] = a * (x * x - hw * hw) / PI / (den * den);
        }
        let b = 3 * n_lines;
        grad[b] = 1.0;
        grad[b + 1] = w - w_ref;
        v + p[b] + p[b + 1] * (w - w_ref)
    }
}

struct Window {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

fn window(s: &SpectrumSeries, lo: f64, hi: f64, mask: &[(f64, f64)]) -> Window {
    let (xs, ys) = s
        .grid
        .iter()
        .zip(&s.values)
        .filter(|(w, _)| **w >= lo && **w <= hi && !mask.iter().any(|(a, b)| **w > *a && **w < *b))
        .map(|(&w, &v)| (w, v))
        .unzip();
    Window { xs, ys }
}

fn fit_lines(win: &Window, guesses: &[(f64, f64)], w_ref: f64) -> Option<(Vec<f64>, f64)> {
    let n = guesses.len();
    let model = lorentz_model(n, w_ref);
    let ymax = win.ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = 0.5 * (win.ys[0] + win.ys[win.ys.len() - 1]);
    let mut p0 = Vec::with_capacity(3 * n + 2);
    for &(c, hw) in guesses {
        let peak = win
            .xs
            .iter()
            .zip(&win.ys)
            .min_by(|a, b| (a.0 - c).abs().total_cmp(&(b.0 - c).abs()))
            .map_or(ymax, |(_, y)| *y - edge);
        p0.extend([peak * PI * hw, c, hw]);
    }
    p0.extend([edge, 0.0]);
    let out = levenberg_marquardt(&model, &win.xs, &win.ys, &p0, LmOptions { max_iter: 500, xtol: 1e-12 });
    if !out.sse.is_finite() {
        return None;
    }
    let rms = (out.sse / win.xs.len() as f64).sqrt() / ymax.max(f64::MIN_POSITIVE);
    let mut p = out.params;
    for l in 0..n {
        if p[3 * l + 2] < 0.0 {
            p[3 * l + 2] = -p[3 * l + 2];
            p[3 * l] = -p[3 * l];
        }
    }
    Some((p, rms))
}

/// Window sizes for [`component_analysis`], in expected half-widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentOptions {
    pub narrow_span: f64,
    pub broad_span: f64,
}

impl Default for ComponentOptions {
    fn default() -> Self {
        Self { narrow_span: 40.0, broad_span: 1.5 }
    }
}

/// Local Lorentzian fits of every emission component.
///
/// Fits run on S(ω)/A(θ), so areas exclude the angular prefactor. Each
/// component gets its own window around the expected center with a linear
/// background. Narrow lines (Rayleigh, Raman) come first; their windows are
/// then masked out of the broad fluorescence fits, which separates the
/// Rayleigh line from continuum fluorescence at the same center.
pub fn component_analysis(s: &SpectrumSeries, spec: &SystemSpec, opts: ComponentOptions) -> Vec<ComponentFit> {
    let omega_l = match s.axis {
        AxisKind::Emission { omega_l } => omega_l,
        AxisKind::Laser => {
            return vec![ComponentFit { process: Process::Rayleigh, result: Err(SpectraError::NotEmission) }];
        }
    };
    let mut resid = s.without_prefactor(spec.theta, spec.i_in);
    let processes = [
        Process::Rayleigh,
        Process::Raman,
        Process::FluorDiscrete0,
        Process::FluorDiscrete1,
        Process::FluorContinuum0,
        Process::FluorContinuum1,
    ];
    let mut out = Vec::new();
    let mut mask = Vec::new();
    for process in processes.into_iter().filter(|p| p.final_level() < spec.n_nu()) {
        let narrow = matches!(process, Process::Rayleigh | Process::Raman);
        let (c, hw) = match table1_row(process, spec) {
            // The Raman pole sits at Γ_vib/2 + δ once z is regularized by δ.
            Ok((_, l)) => (l.center_at(omega_l), l.half_width + if process == Process::Raman { s.delta } else { 0.0 }),
            Err(e) => {
                out.push(ComponentFit { process, result: Err(e.into()) });
                continue;
            }
        };
        if !(hw > 0.0) {
            continue;
        }
        let span = if narrow { opts.narrow_span } else { opts.broad_span };
        let (lo, hi) = (c - span * hw, c + span * hw);
        let win = window(&resid, lo, hi, if narrow { &[] } else { &mask });
        if narrow {
            mask.push((lo, hi));
        }
        if win.xs.len() < 8 {
            out.push(ComponentFit { process, result: Err(SpectraError::SparseWindow(win.xs.len(), process)) });
            continue;
        }
        let result = fit_lines(&win, &[(c, hw)], c)
            .map(|(p, rms)| PeakReport { component: process, center: p[1], half_width: p[2], area: p[0], residual: rms })
            .filter(|r| r.area.is_finite() && r.center >= lo && r.center <= hi && r.half_width < hi - lo)
            .ok_or(SpectraError::FitFailed(process));
        if let (true, Ok(r)) = (narrow, &result) {
            for (w, v) in resid.grid.iter().zip(resid.values.iter_mut()) {
                *v -= r.area * lorentzian(*w, r.center, r.half_width);
            }
        }
        out.push(ComponentFit { process, result });
    }
    out
}

/// A fitted component as a function of ω, without the angular prefactor.
pub fn component_curve(r: &PeakReport) -> impl Fn(f64) -> f64 + '_ {
    move |w| r.area * lorentzian(w, r.center, r.half_width)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMethod {
    /// Full steady state at every laser frequency.
    Direct,
    /// Second-order amplitude route, O(N_k) per point; no dephasing allowed.
    WeakField,
}

/// N_excited over a laser-frequency grid.
pub fn absorption_scan(
    model: &DiscretizedModel,
    omega_l_grid: &[f64],
    field: f64,
    method: ScanMethod,
) -> Result<SpectrumSeries, SpectraError> {
    check_grid(omega_l_grid)?;
    let rp = reduced_parameters(&model.spec)?;
    let values = match method {
        ScanMethod::Direct => {
            let solver = BlockSolver::new(model)?;
            omega_l_grid
                .par_iter()
                .map(|&w| solve_direct(&solver, field, w).map(|st| st.excited_population()))
                .collect::<Result<Vec<f64>, SolveError>>()?
        }
        ScanMethod::WeakField => omega_l_grid
            .par_iter()
            .map(|&w| weak_field_population(model, field, w))
            .collect::<Result<Vec<f64>, SolveError>>()?,
    };
    Ok(SpectrumSeries {
        axis: AxisKind::Laser,
        grid: omega_l_grid.to_vec(),
        values,
        epsilon: Some(omega_l_grid.iter().map(|&w| rp.epsilon_of(w)).collect()),
        field,
        delta: model.spec.laser_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::linspace;

    #[test]
    fn prefactor_shape() {
        assert_eq!(angular_prefactor(2.0, 0.0, 1.0), 0.0);
        let a = angular_prefactor(2.0, PI / 2.0, 1.0);
        assert!(a >= angular_prefactor(2.0, 1.0, 1.0));
        assert!((angular_prefactor(4.0, PI / 2.0, 1.0) / a - 16.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_two_lorentzians() {
        let xs = linspace(-5.0, 5.0, 2001);
        let ys: Vec<f64> = xs
            .iter()
            .map(|&w| 2.0 * lorentzian(w, -0.7, 0.05) + 0.5 * lorentzian(w, 0.3, 0.8) + 0.01)
            .collect();
        let win = Window { xs, ys };
        let (p, _) = fit_lines(&win, &[(-0.65, 0.06), (0.2, 1.0)], 0.0).unwrap();
        let want = [2.0, -0.7, 0.05, 0.5, 0.3, 0.8];
        for (got, w) in p.iter().zip(want) {
            assert!((got - w).abs() < 0.02 * w.abs(), "{p:?}");
        }
    }

    #[test]
    fn grid_is_sorted_and_bounded() {
        let spec = SystemSpec::reference(1.0, 0.25);
        let g = emission_grid(&spec, 20.0, 10.0, 25.0, 101, 41, 30.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(g[0] >= 10.0 && *g.last().unwrap() <= 25.0);
        assert!(g.iter().any(|w| (w - 18.0).abs() < 1e-3));
    }
}
