//! Stationary states of the RWA Liouvillian: direct, dense reference and
//! second-order perturbative solutions.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Scale, Side};

use crate::blocks::{BlockSolver, BlockState, SolveError};
use crate::linalg::{arrow_solve, ZERO};
use crate::liouvillian::{lindblad_rhs, Superoperator};
use crate::model::DiscretizedModel;

const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Hermitian d×d density matrix (trace 1 for physical states).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub mat: Mat<c64>,
}

impl DensityMatrix {
    pub fn new(mat: Mat<c64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    /// Pure state |l⟩⟨l|.
    pub fn basis(d: usize, l: usize) -> Self {
        let mut mat = Mat::zeros(d, d);
        mat[(l, l)] = c64::new(1.0, 0.0);
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|l| self.mat[(l, l)]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut e = 0.0f64;
        for l in 0..d {
            for m in 0..=l {
                e = e.max((self.mat[(l, m)] - self.mat[(m, l)].conj()).norm());
            }
        }
        e
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let h = Mat::from_fn(d, d, |l, m| (self.mat[(l, m)] + self.mat[(m, l)].conj()) * 0.5);
        h.self_adjoint_eigenvalues(Side::Lower)
            .map(|ev| ev.into_iter().fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::NAN)
    }

    /// Trace-norm ‖self − other‖₁.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let d = self.dim();
        let diff = Mat::from_fn(d, d, |l, m| {
            let a = self.mat[(l, m)] - other.mat[(l, m)];
            let b = (self.mat[(m, l)] - other.mat[(m, l)]).conj();
            (a + b) * 0.5
        });
        diff.self_adjoint_eigenvalues(Side::Lower)
            .map(|ev| ev.into_iter().map(f64::abs).sum())
            .unwrap_or(f64::NAN)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.mat - &other.mat).norm_max()
    }
}

/// Populations of e plus all continuum states.
pub fn excited_population(rho: &DensityMatrix, model: &DiscretizedModel) -> f64 {
    (model.n_nu()..model.dim()).map(|l| rho.mat[(l, l)].re).sum()
}

/// Steady state with the excited block kept in the eigenbasis of the
/// excited Hamiltonian; populations are O(p²) without reconstruction.
#[derive(Debug, Clone)]
pub struct SteadyState<'a> {
    pub solver: &'a BlockSolver,
    pub field: f64,
    pub omega_l: f64,
    pub blocks: BlockState,
}

impl SteadyState<'_> {
    pub fn excited_population(&self) -> f64 {
        self.solver.trace_x(self.blocks.xt.as_ref()).re
    }

    pub fn ground_population(&self, nu: usize) -> f64 {
        self.blocks.gg[(nu, nu)].re
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix::new(self.solver.assemble(&self.blocks))
    }

    /// ‖A ρ‖_max, with A applied in matrix form.
    pub fn residual(&self, rho: &DensityMatrix) -> f64 {
        lindblad_rhs(self.solver.model(), self.field, self.omega_l, rho.mat.as_ref()).norm_max()
    }
}

/// Upper bound on ‖A‖_∞ from the model parameters.
pub fn liouvillian_norm_bound(model: &DiscretizedModel, field: f64, omega_l: f64) -> f64 {
    let s = &model.spec;
    let g = model.n_nu();
    let mut hmax = 0.0f64;
    for l in 0..model.dim() {
        let shift = if model.is_excited(l) { omega_l } else { 0.0 };
        let mut row = (model.energy(l) - shift).abs();
        if l < g {
            row += 0.5 * field.abs() * (s.mu_nu_e[l].abs() + model.n_k as f64 * model.mu_disc[l].abs());
        } else if l == g {
            row += model.n_k as f64 * model.v.abs()
                + 0.5 * field.abs() * s.mu_nu_e.iter().map(|m| m.abs()).sum::<f64>();
        } else {
            row += model.v.abs() + 0.5 * field.abs() * model.mu_disc.iter().map(|m| m.abs()).sum::<f64>();
        }
        hmax = hmax.max(row);
    }
    let deph = s
        .gamma_e_nu
        .iter()
        .chain(&s.gamma_k_nu)
        .fold(s.gamma_k_e, |a, &b| a.max(b));
    2.0 * hmax + 2.0 * s.sum_gamma_c() + 2.0 * s.gamma_vib * g as f64 + deph
}

/// Steady state of A(F, ω_L) through the block solver.
pub fn solve_direct(solver: &BlockSolver, field: f64, omega_l: f64) -> Result<SteadyState<'_>, SolveError> {
    let blocks = solver.steady_state(field, omega_l)?;
    Ok(SteadyState { solver, field, omega_l, blocks })
}

/// Dense reference route: replaces the (0,0) row of A by the trace
/// functional and LU-solves. Only for small d.
pub fn solve_direct_dense(a: &Superoperator) -> Result<DensityMatrix, SolveError> {
    let d = a.d();
    let n = a.dim();
    let mut m = a.to_dense();
    let row = a.index(0, 0);
    for c in 0..n {
        m[(row, c)] = ZERO;
    }
    for l in 0..d {
        m[(row, a.index(l, l))] = c64::new(1.0, 0.0);
    }
    let mut rhs = Mat::<c64>::zeros(n, 1);
    rhs[(row, 0)] = c64::new(1.0, 0.0);
    let lu = m.full_piv_lu();
    let x = lu.solve(&rhs);
    if !x.norm_max().is_finite() {
        return Err(SolveError::Degenerate("trace-augmented system is singular".into()));
    }
    let rho = Mat::from_fn(d, d, |l, mm| x[(a.index(l, mm), 0)]);
    Ok(DensityMatrix::new(rho))
}

/// Number of singular values of A below `rel_tol · σ_max`.
pub fn kernel_dimension(a: &Superoperator, rel_tol: f64) -> usize {
    let sv = a.to_dense().singular_values().expect("svd converges");
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s <= rel_tol * smax).count()
}

/// Second-order weak-field state ρ⁰ + ρ¹ + ρ², split by order.
#[derive(Debug, Clone)]
pub struct PerturbativeState {
    pub rho0: DensityMatrix,
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
}

impl PerturbativeState {
    pub fn total(&self) -> DensityMatrix {
        DensityMatrix::new(&(&self.rho0.mat + &self.rho1.mat) + &self.rho2.mat)
    }
}

/// Expansion to second order in the field around ρ⁰ = |0⟩⟨0|.
///
/// Order 1 lives on ground–excited coherences; order 2 on the excited block
/// and the ground block, with the trace deficit moved onto ρ_00.
pub fn solve_perturbative(solver: &BlockSolver, field: f64, omega_l: f64) -> Result<PerturbativeState, SolveError> {
    let model = solver.model();
    let s = &model.spec;
    let (g, p) = (model.n_nu(), model.n_x());
    let d = model.dim();
    if g > 1 && s.gamma_vib <= 0.0 {
        return Err(SolveError::Degenerate("excited ground levels do not relax (Gamma_vib = 0)".into()));
    }
    let f2 = 0.5 * field;
    let (r0, c0) = first_order(model, field, omega_l);
    let mut gx = Mat::<c64>::zeros(g, p);
    let mut xg = Mat::<c64>::zeros(p, g);
    for x in 0..p {
        gx[(0, x)] = r0[x];
        xg[(x, 0)] = c0[x];
    }
    let k = Mat::from_fn(p, p, |i, j| {
        let lam = solver.eigenvalues();
        (I * (lam[i] - lam[j].conj())).inv()
    });
    let xt0 = solver.xt_from(k.as_ref(), f2, gx.as_ref(), xg.as_ref(), ZERO);
    let xt = if s.gamma_k_e != 0.0 {
        let unit = solver.xt_from(k.as_ref(), f2, Mat::zeros(g, p).as_ref(), Mat::zeros(p, g).as_ref(), c64::new(1.0, 0.0));
        let cs = solver.x_ee(unit.as_ref());
        let sv = solver.x_ee(xt0.as_ref()) / (c64::new(1.0, 0.0) - cs);
        &xt0 + &(&unit * Scale(sv))
    } else {
        xt0
    };
    let x2 = solver.reconstruct_x(xt.as_ref());
    let n_cont = solver.trace_x(xt.as_ref()) - x2[(0, 0)];
    let phi = solver.phi();
    let phic = phi * &xg;
    let rphi = &gx * phi.transpose();
    let mut gg = Mat::<c64>::zeros(g, g);
    let decay = |nu: usize| if nu == 0 { 0.0 } else { s.gamma_vib };
    for nu in 0..g {
        for mu in 0..g {
            if nu != mu {
                let src = -I * f2 * (phic[(nu, mu)] - rphi[(nu, mu)]);
                let den = I * (s.e_nu[nu] - s.e_nu[mu]) + 0.5 * (decay(nu) + decay(mu));
                gg[(nu, mu)] = src / den;
            }
        }
    }
    let mut pops = ZERO;
    for nu in 1..g {
        gg[(nu, nu)] = n_cont * (s.gamma_c_nu[nu] / s.gamma_vib);
        pops += gg[(nu, nu)];
    }
    gg[(0, 0)] = -(solver.trace_x(xt.as_ref()) + pops);
    let mut rho1 = Mat::<c64>::zeros(d, d);
    for x in 0..p {
        rho1[(0, g + x)] = r0[x];
        rho1[(g + x, 0)] = c0[x];
    }
    let mut rho2 = Mat::<c64>::zeros(d, d);
    for nu in 0..g {
        for mu in 0..g {
            rho2[(nu, mu)] = gg[(nu, mu)];
        }
    }
    for a in 0..p {
        for b in 0..p {
            rho2[(g + a, g + b)] = x2[(a, b)];
        }
    }
    Ok(PerturbativeState {
        rho0: DensityMatrix::basis(d, 0),
        rho1: DensityMatrix::new(rho1),
        rho2: DensityMatrix::new(rho2),
    })
}

/// First-order coherences ρ_{0x} (row) and ρ_{x0} (column).
fn first_order(model: &DiscretizedModel, field: f64, omega_l: f64) -> (Vec<c64>, Vec<c64>) {
    let s = &model.spec;
    let g = model.n_nu();
    let p = model.n_x();
    let f2 = 0.5 * field;
    let gamma_sum = s.sum_gamma_c();
    let md: Vec<c64> = (0..p)
        .map(|x| {
            let h = model.energy(g + x) - omega_l;
            let (decay, deph) = if x == 0 { (0.0, s.gamma_e_nu[0]) } else { (gamma_sum, s.gamma_k_nu[0]) };
            c64::new(-0.5 * decay - deph, h - s.e_nu[0])
        })
        .collect();
    let off = I * model.v;
    let src: Vec<c64> = (0..p).map(|x| -I * f2 * model.dipole(0, x)).collect();
    // r M = −iΦ_0 with M symmetric
    let r0 = arrow_solve(md[0], &md[1..], off, &src);
    let conj_md: Vec<c64> = md.iter().map(|m| m.conj()).collect();
    let src_c: Vec<c64> = src.iter().map(|v| -*v).collect();
    // N c = iΦ_0ᵀ with N = conj(M)
    let c0 = arrow_solve(conj_md[0], &conj_md[1..], off.conj(), &src_c);
    (r0, c0)
}

/// Weak-field excited population ‖ψ‖² from the first-order amplitude
/// ψ = ρ_{x0}, valid to O(F²) when every pure dephasing rate vanishes.
///
/// Cost is O(N_k), so it reaches continuum grids far beyond what the
/// block solver can diagonalize.
pub fn weak_field_population(model: &DiscretizedModel, field: f64, omega_l: f64) -> Result<f64, SolveError> {
    if model.has_dephasing() {
        return Err(SolveError::Unsupported(
            "weak-field amplitude route requires all pure dephasing rates to vanish".into(),
        ));
    }
    if model.spec.sum_gamma_c() <= 0.0 {
        return Err(SolveError::Degenerate("continuum states do not decay".into()));
    }
    let (_, c0) = first_order(model, field, omega_l);
    Ok(c0.iter().map(|z| z.norm_sqr()).sum())
}
