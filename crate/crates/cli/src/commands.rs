use std::path::Path;

use fano_core::analytic::{eta_ram_for_extraction, population_shape};
use fano_core::fitting::{linspace, synth_profile, SynthParams};
use fano_core::spectra::{emission_grid, ComponentOptions, SpectraError};
use fano_core::{
    absorption_scan, component_analysis, discretize, emission_spectrum, excited_population_analytic,
    extinction_coefficient, extract_parameters, fit_profile, model_error_study, prefactor_constants,
    reduced_parameters, table1_row, AnalyticError, BlockSolver, FitError, FitInit, ModelKind, Process, ScanMethod,
    SolveError,
};
use fano_core::model::ModelError;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{num, read_columns, write_outputs, Cell, IoError, RunMeta, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Config(_) => 65,
            CliError::Numerical(_) => 70,
            CliError::Io(_) => 74,
        }
    }
}

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(ConfigError::Invalid(format!("  {msg}")))
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        config_err(e)
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        config_err(e)
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        match e {
            SpectraError::Model(m) => m.into(),
            SpectraError::Analytic(a) => a.into(),
            SpectraError::NonPositiveDelta(_) | SpectraError::BadGrid => config_err(e),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub struct Outcome {
    pub table: Table,
    pub summary: Value,
}

pub fn run(command: &str, cfg: &RunConfig, meta: &RunMeta, out_dir: &Path) -> Result<(), CliError> {
    let outcome = match command {
        "validate" => validate(cfg)?,
        "absorption-scan" => absorption(cfg)?,
        "emission-spectrum" => emission(cfg)?,
        "analytic-profile" => analytic_profile(cfg)?,
        "fit" => fit(cfg, meta.seed)?,
        "compare-models" => compare_models(cfg)?,
        "extract-params" => extract(cfg)?,
        other => return Err(CliError::Usage(format!("unknown command '{other}'"))),
    };
    let path = write_outputs(out_dir, meta, &outcome.table, outcome.summary)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn finite_or_fail(what: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(CliError::Numerical(format!("{what}: non-finite value at point {i}"))),
        None => Ok(()),
    }
}

fn validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rp = reduced_parameters(&cfg.spec)?;
    let mut t = Table::new(&["quantity", "value"]);
    t.push(vec!["gamma".into(), rp.gamma.into()]);
    t.push(vec!["eta".into(), rp.eta.into()]);
    for (nu, q) in rp.q_nu.iter().enumerate() {
        t.push(vec![Cell::Text(format!("q_{nu}")), (*q).into()]);
    }
    t.push(vec!["W".into(), cfg.w.into()]);
    t.push(vec!["N_k".into(), (cfg.n_k as f64).into()]);
    println!("pass: gamma = {:.6e}, eta = {:.6e}, q = {:?}", rp.gamma, rp.eta, rp.q_nu);
    let summary = json!({
        "valid": true,
        "gamma": num(rp.gamma),
        "eta": num(rp.eta),
        "q_nu": rp.q_nu.iter().map(|&q| num(q)).collect::<Vec<_>>(),
        "W": num(cfg.w),
        "N_k": cfg.n_k,
    });
    Ok(Outcome { table: t, summary })
}

fn scan_grid(cfg: &RunConfig) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let rp = reduced_parameters(&cfg.spec)?;
    let eps = linspace(cfg.scan.eps_min, cfg.scan.eps_max, cfg.scan.points);
    let omega = eps.iter().map(|&e| rp.omega_of(e)).collect();
    Ok((eps, omega))
}

fn absorption(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = discretize(&cfg.spec, cfg.w, cfg.n_k)?;
    let (eps, omega) = scan_grid(cfg)?;
    let method = if cfg.scan.method == "weak_field" { ScanMethod::WeakField } else { ScanMethod::Direct };
    let series = absorption_scan(&model, &omega, cfg.spec.field, method)?;
    finite_or_fail("N_excited", &series.values)?;

    // Without continuum decay the closed-form prefactor is undefined.
    let analytic: Option<Vec<f64>> = omega
        .iter()
        .map(|&w| excited_population_analytic(&cfg.spec, w).ok())
        .collect();
    let peak = analytic.as_ref().map(|f| f.iter().fold(0.0f64, |m, v| m.max(v.abs())));

    let mut t = Table::new(&["omega_L", "epsilon", "N_excited", "f_analytic", "rel_dev"]);
    for i in 0..omega.len() {
        let n = series.values[i];
        let (fa, dev) = match (&analytic, peak) {
            (Some(f), Some(p)) if p > 0.0 => (f[i], (n - f[i]) / p),
            _ => (f64::NAN, f64::NAN),
        };
        t.push(vec![omega[i].into(), eps[i].into(), n.into(), fa.into(), dev.into()]);
    }

    let mut summary = json!({
        "method": cfg.scan.method,
        "W": num(cfg.w),
        "N_k": cfg.n_k,
        "F": num(cfg.spec.field),
        "peak_N_excited": num(series.values.iter().cloned().fold(f64::MIN, f64::max)),
    });
    if let Some(f) = &analytic {
        let rp = reduced_parameters(&cfg.spec)?;
        let q = rp.q_nu[0];
        let shape: Vec<f64> = eps.iter().map(|&e| population_shape(e, q, rp.eta)).collect();
        summary["max_rel_dev"] = num(max_rel_dev(&series.values, f, 1.0));
        summary["fitted_scale"] = num(best_scale(&series.values, f));
        summary["max_rel_dev_fitted"] = num(max_rel_dev(&series.values, f, best_scale(&series.values, f)));
        summary["max_rel_dev_population_shape"] =
            num(max_rel_dev(&series.values, &shape, best_scale(&series.values, &shape)));
    }
    Ok(Outcome { table: t, summary })
}

/// Least-squares B for data ≈ B·model.
fn best_scale(data: &[f64], model: &[f64]) -> f64 {
    let num: f64 = data.iter().zip(model).map(|(d, m)| d * m).sum();
    let den: f64 = model.iter().map(|m| m * m).sum();
    num / den
}

/// max |data − B·model| / max |B·model|
fn max_rel_dev(data: &[f64], model: &[f64], b: f64) -> f64 {
    let peak = model.iter().fold(0.0f64, |m, v| m.max((b * v).abs()));
    data.iter().zip(model).map(|(d, m)| (d - b * m).abs()).fold(0.0, f64::max) / peak
}

fn emission(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = &cfg.spec;
    let rp = reduced_parameters(spec)?;
    let em = &cfg.emission;
    let omega_l = em.omega_L.unwrap_or(spec.e_e);
    let e_min = spec.e_nu.iter().cloned().fold(f64::INFINITY, f64::min);
    let e_max = spec.e_nu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = em.omega_min.unwrap_or(omega_l.min(spec.e_e) - (e_max - e_min) - 6.0 * rp.gamma);
    let hi = em.omega_max.unwrap_or(omega_l.max(spec.e_e) + 6.0 * rp.gamma);
    if !(lo < hi) || !(lo > 0.0) {
        return Err(config_err(format!("emission window [{lo}, {hi}] must be positive and ordered")));
    }
    let grid = emission_grid(
        spec,
        omega_l,
        lo,
        hi,
        em.points.unwrap_or(801),
        em.line_points.unwrap_or(201),
        em.line_span.unwrap_or(40.0),
    );
    let model = discretize(spec, cfg.w, cfg.n_k)?;
    let solver = BlockSolver::new(&model)?;
    let series = emission_spectrum(&solver, spec.field, omega_l, &grid, spec.laser_delta)?;
    finite_or_fail("S", &series.values)?;
    let reduced = series.without_prefactor(spec.theta, spec.i_in);

    let mut t = Table::new(&["omega", "epsilon", "S", "S_reduced"]);
    for i in 0..grid.len() {
        t.push(vec![grid[i].into(), rp.epsilon_of(grid[i]).into(), series.values[i].into(), reduced.values[i].into()]);
    }
    let components: Vec<Value> = component_analysis(&series, spec, ComponentOptions::default())
        .into_iter()
        .map(|c| match c.result {
            Ok(r) => json!({
                "process": c.process.name(),
                "center": num(r.center),
                "half_width": num(r.half_width),
                "area": num(r.area),
                "residual": num(r.residual),
            }),
            Err(e) => json!({ "process": c.process.name(), "error": e.to_string() }),
        })
        .collect();
    let summary = json!({
        "omega_L": num(omega_l),
        "epsilon_L": num(rp.epsilon_of(omega_l)),
        "delta": num(spec.laser_delta),
        "points": grid.len(),
        "components": components,
    });
    Ok(Outcome { table: t, summary })
}

fn analytic_profile(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = &cfg.spec;
    let rp = reduced_parameters(spec)?;
    let pre = prefactor_constants(spec)?;
    let (eps, omega) = scan_grid(cfg)?;
    let rows: Vec<_> = Process::ALL
        .iter()
        .filter(|p| **p != Process::Populations && p.final_level() < spec.n_nu())
        .map(|&p| table1_row(p, spec).map(|(prof, line)| (p, prof, line)))
        .collect::<Result<_, _>>()?;

    let mut columns = vec!["omega_L", "epsilon", "N_excited", "N_excited_shape", "extinction"];
    columns.extend(rows.iter().map(|(p, _, _)| p.name()));
    let mut t = Table::new(&columns);
    for (&e, &w) in eps.iter().zip(&omega) {
        let mut row: Vec<Cell> = vec![
            w.into(),
            e.into(),
            excited_population_analytic(spec, w)?.into(),
            (pre.b_abs * population_shape(e, rp.q_nu[0], rp.eta)).into(),
            extinction_coefficient(spec, w)?.into(),
        ];
        row.extend(rows.iter().map(|(_, prof, _)| Cell::Num(prof.eval(e))));
        t.push(row);
    }
    let processes: Vec<Value> = rows
        .iter()
        .map(|(p, prof, line)| {
            json!({
                "process": p.name(),
                "q_eff": num(prof.q_eff),
                "eta_w": num(prof.eta_w),
                "alpha": num(prof.alpha),
                "eps_scale": num(prof.eps_scale),
                "B": num(prof.b),
                "center": num(line.center),
                "follows_laser": line.follows_laser,
                "half_width": num(line.half_width),
            })
        })
        .collect();
    let summary = json!({
        "B_abs": num(pre.b_abs),
        "B_ray": num(pre.b_ray),
        "B_ram": num(pre.b_ram),
        "gamma": num(rp.gamma),
        "eta": num(rp.eta),
        "processes": processes,
    });
    Ok(Outcome { table: t, summary })
}

fn fit_kinds(name: &str) -> Vec<ModelKind> {
    match name {
        "all" => vec![ModelKind::Standard, ModelKind::Shifted, ModelKind::Full],
        other => vec![other.parse().expect("checked when parsing the config")],
    }
}

fn fit(cfg: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let fc = &cfg.fit;
    let (xs, ys, source) = match &fc.input {
        Some(path) => {
            let (xs, ys) = read_columns(path, &fc.x_column, &fc.y_column)?;
            (xs, ys, json!({ "input": path.display().to_string(), "x": fc.x_column, "y": fc.y_column }))
        }
        None => {
            let params = SynthParams::new(fc.q, fc.eta);
            let xs = linspace(fc.eps_min, fc.eps_max, fc.points);
            let peak = xs.iter().map(|&e| params.eval(e).abs()).fold(0.0, f64::max);
            let ys = synth_profile(&params, &xs, fc.noise * peak, seed);
            (xs, ys, json!({ "synthetic": { "q": num(fc.q), "eta": num(fc.eta), "noise": num(fc.noise) } }))
        }
    };
    let init = FitInit::default();
    let mut t = Table::new(&["model", "C", "x0", "width", "q", "D", "eta", "sse", "converged", "iterations"]);
    let mut fits = Vec::new();
    for kind in fit_kinds(&fc.model) {
        let r = fit_profile(&xs, &ys, kind, &init)?;
        t.push(vec![
            kind.name().into(),
            r.c.into(),
            r.x0.into(),
            r.width.into(),
            r.q.into(),
            r.d.into(),
            r.eta.into(),
            r.sse.into(),
            (if r.converged { 1.0 } else { 0.0 }).into(),
            (r.iterations as f64).into(),
        ]);
        fits.push(json!({
            "model": kind.name(),
            "q": num(r.q),
            "eta": r.eta.map(num),
            "D": r.d.map(num),
            "sse": num(r.sse),
            "converged": r.converged,
        }));
    }
    Ok(Outcome { table: t, summary: json!({ "data": source, "points": xs.len(), "fits": fits }) })
}

fn compare_models(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let st = &cfg.study;
    let etas = linspace(st.eta_min, st.eta_max, st.eta_points);
    let eps = linspace(st.eps_min, st.eps_max, st.eps_points);
    let rows = model_error_study(st.q, &etas, &eps);
    let mut t = Table::new(&["eta", "qeff_standard", "qeff_shifted", "relerr_standard", "relerr_shifted"]);
    let mut failures = Vec::new();
    for r in &rows {
        for (name, res) in [("standard", &r.qeff_standard), ("shifted", &r.qeff_shifted)] {
            if let Err(e) = res {
                failures.push(json!({ "eta": num(r.eta), "model": name, "error": e.to_string() }));
            }
        }
        t.push(vec![
            r.eta.into(),
            r.qeff_standard.clone().ok().into(),
            r.qeff_shifted.clone().ok().into(),
            r.relerr_standard().into(),
            r.relerr_shifted().into(),
        ]);
    }
    let summary = json!({
        "q": num(st.q),
        "eps_range": [num(st.eps_min), num(st.eps_max)],
        "eps_points": st.eps_points,
        "failures": failures,
    });
    Ok(Outcome { table: t, summary })
}

const EXTRACTED: [&str; 6] = ["sum_Gamma_c", "sqrtn_V", "sqrtn_mu_0c", "mu_0e", "sqrtn_mu_1c", "mu_1e"];

fn extract(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = &cfg.spec;
    let (inputs, reference) = match &cfg.extract {
        Some(x) => ([x.B_abs, x.B_ray, x.B_ram, x.gamma, x.q, x.eta_ram, x.F], None),
        None => {
            // Forward-model the prefactors of the configured system, then invert them.
            if spec.n_nu() < 2 {
                return Err(config_err("extract-params needs two ground levels"));
            }
            let pre = prefactor_constants(spec)?;
            let rp = reduced_parameters(spec)?;
            let inputs = [pre.b_abs, pre.b_ray, pre.b_ram, rp.gamma, rp.q_nu[0], eta_ram_for_extraction(spec)?, spec.field];
            let truth = [
                spec.sum_gamma_c(),
                spec.sqrtn_v,
                spec.sqrtn_mu_nu_c[0],
                spec.mu_nu_e[0],
                spec.sqrtn_mu_nu_c[1],
                spec.mu_nu_e[1],
            ];
            (inputs, Some(truth))
        }
    };
    let [b_abs, b_ray, b_ram, gamma, q, eta_ram, field] = inputs;
    let p = extract_parameters(b_abs, b_ray, b_ram, gamma, q, eta_ram, field).map_err(config_err)?;
    let values = [p.sum_gamma_c, p.sqrtn_v, p.sqrtn_mu_0c, p.mu_0e, p.sqrtn_mu_1c, p.mu_1e];
    let mut t = Table::new(&["quantity", "value", "reference", "rel_err"]);
    let mut summary = json!({
        "inputs": {
            "B_abs": num(b_abs), "B_ray": num(b_ray), "B_ram": num(b_ram),
            "gamma": num(gamma), "q": num(q), "eta_ram": num(eta_ram), "F": num(field),
        },
        "from_system": reference.is_some(),
    });
    for (i, name) in EXTRACTED.iter().enumerate() {
        let r = reference.map(|r| r[i]);
        let err = r.map(|r| (values[i] - r).abs() / r.abs());
        t.push(vec![(*name).into(), values[i].into(), r.into(), err.into()]);
        summary[*name] = num(values[i]);
    }
    Ok(Outcome { table: t, summary })
}
