//! Block-structured resolvent of the RWA Liouvillian.
//!
//! The density matrix splits into ground–ground `G` (g×g), ground–excited
//! `R` (g×p), excited–ground `C` (p×g) and excited–excited `X` (p×p), with
//! p = N_k + 1. The `X` equation is a Sylvester equation in the non-Hermitian
//! excited Hamiltonian
//!
//! B = H_x − (i/2)Γ̂ − iγ_ke P_e,
//!
//! which is diagonalized once per model (B = VΛV⁻¹). Eliminating `X` leaves
//! a system in (R, C, G, X_ee) of size 2gp + g² + 1, solved with GMRES and
//! an arrow-matrix block preconditioner. Every operator application costs
//! O(g p²); `X` itself is only reconstructed (O(p³)) on request.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef, Scale};
use thiserror::Error;

use crate::linalg::{arrow_solve, gmres, GmresOptions, ZERO};
use crate::model::DiscretizedModel;

const I: c64 = c64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("degenerate steady state: {0}")]
    Degenerate(String),
    #[error("linear solver did not converge (relative residual {0:.3e})")]
    NotConverged(f64),
    #[error("eigendecomposition of the excited block failed")]
    Eigen,
    #[error("singular resolvent at z = {0}")]
    Singular(c64),
    #[error("{0}")]
    Unsupported(String),
}

/// Eigendecomposition of the excited block plus the per-model products the
/// reduced operator needs.
#[derive(Debug, Clone)]
pub struct BlockSolver {
    model: DiscretizedModel,
    g: usize,
    p: usize,
    lam: Vec<c64>,
    v: Mat<c64>,
    w: Mat<c64>,
    /// V†V, for traces of X = V X̃ V†.
    q: Mat<c64>,
    /// Row e of V.
    ve: Vec<c64>,
    /// Column e of V⁻¹.
    we: Vec<c64>,
    /// Dipoles μ_{ν x} (g×p, real).
    phi: Mat<c64>,
    /// Φ V (g×p).
    phiv: Mat<c64>,
    /// V⁻¹ Φᵀ (p×g).
    a_hat: Mat<c64>,
    gamma_x: Vec<f64>,
}

/// Field, frame and Laplace variable of one reduced operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpParams {
    pub field: f64,
    pub omega_l: f64,
    pub z: c64,
    /// Replace the ground (0,0) equation by the trace condition (z must be 0).
    pub steady: bool,
}

/// Right-hand side of (z − A)ρ = Y in block form. Absent blocks are zero.
#[derive(Debug, Clone, Default)]
pub struct BlockRhs {
    pub gg: Option<Mat<c64>>,
    pub gx: Option<Mat<c64>>,
    pub xg: Option<Mat<c64>>,
    pub xx: Option<Mat<c64>>,
}

/// Solution blocks; the excited block is kept in the eigenbasis.
#[derive(Debug, Clone)]
pub struct BlockState {
    pub gg: Mat<c64>,
    pub gx: Mat<c64>,
    pub xg: Mat<c64>,
    /// X̃ with X = V X̃ V†.
    pub xt: Mat<c64>,
    pub iterations: usize,
    pub rel_residual: f64,
}

struct Functionals {
    /// Φ X (g×p), unscaled by the field.
    phix: Mat<c64>,
    /// X Φ† (p×g), unscaled by the field.
    xphi: Mat<c64>,
    trx: c64,
    xee: c64,
}

pub(crate) struct ReducedOp<'a> {
    s: &'a BlockSolver,
    par: OpParams,
    f2: f64,
    k: Mat<c64>,
    c_s: c64,
    /// Diagonal of M_ν per ground level.
    md: Vec<Vec<c64>>,
    off: c64,
    ground_decay: Vec<f64>,
}

impl BlockSolver {
    pub fn new(model: &DiscretizedModel) -> Result<Self, SolveError> {
        let g = model.n_nu();
        let p = model.n_x();
        let s = &model.spec;
        let gamma_sum = s.sum_gamma_c();
        let mut gamma_x = vec![gamma_sum; p];
        gamma_x[0] = 0.0;
        let mut b0 = Mat::<c64>::zeros(p, p);
        for x in 0..p {
            let h = model.energy(g + x);
            b0[(x, x)] = c64::new(h, -0.5 * gamma_x[x]);
        }
        b0[(0, 0)] -= I * s.gamma_k_e;
        for x in 1..p {
            b0[(0, x)] = c64::new(model.v, 0.0);
            b0[(x, 0)] = c64::new(model.v, 0.0);
        }
        let eig = b0.eigen().map_err(|_| SolveError::Eigen)?;
        let v = eig.U().to_owned();
        let lam: Vec<c64> = (0..p).map(|i| eig.S().column_vector()[i]).collect();
        let w = v.partial_piv_lu().inverse();
        let q = v.adjoint() * &v;
        let ve: Vec<c64> = (0..p).map(|j| v[(0, j)]).collect();
        let we: Vec<c64> = (0..p).map(|i| w[(i, 0)]).collect();
        let phi = Mat::from_fn(g, p, |nu, x| c64::new(model.dipole(nu, x), 0.0));
        let phiv = &phi * &v;
        let a_hat = &w * phi.transpose();
        Ok(Self { model: model.clone(), g, p, lam, v, w, q, ve, we, phi, phiv, a_hat, gamma_x })
    }

    pub fn model(&self) -> &DiscretizedModel {
        &self.model
    }

    /// Eigenvalues of B at ω_L = 0.
    pub fn eigenvalues(&self) -> &[c64] {
        &self.lam
    }

    /// ‖V V⁻¹ − 1‖_max, a conditioning diagnostic.
    pub fn inverse_error(&self) -> f64 {
        let id = &self.v * &self.w;
        let mut e = 0.0f64;
        for i in 0..self.p {
            for j in 0..self.p {
                let t = if i == j { 1.0 } else { 0.0 };
                e = e.max((id[(i, j)] - c64::new(t, 0.0)).norm());
            }
        }
        e
    }

    /// Slowest decay rate among excited-block eigenmodes.
    pub fn min_excited_decay(&self) -> f64 {
        self.lam.iter().map(|l| -l.im).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn operator(&self, par: OpParams) -> ReducedOp<'_> {
        let (g, p) = (self.g, self.p);
        let s = &self.model.spec;
        let z = par.z;
        let k = Mat::from_fn(p, p, |i, j| (z + I * (self.lam[i] - self.lam[j].conj())).inv());
        let c_s = if s.gamma_k_e != 0.0 {
            let mut acc = ZERO;
            for i in 0..p {
                let li = self.ve[i] * self.we[i];
                for j in 0..p {
                    acc += li * k[(i, j)] * (self.ve[j] * self.we[j]).conj();
                }
            }
            acc * (2.0 * s.gamma_k_e)
        } else {
            ZERO
        };
        let ground_decay: Vec<f64> = (0..g).map(|nu| if nu == 0 { 0.0 } else { s.gamma_vib }).collect();
        let md = (0..g)
            .map(|nu| {
                (0..p)
                    .map(|x| {
                        let h = self.model.energy(g + x) - par.omega_l;
                        let deph = if x == 0 { s.gamma_e_nu[nu] } else { s.gamma_k_nu[nu] };
                        c64::new(
                            -0.5 * self.gamma_x[x] - deph - 0.5 * ground_decay[nu],
                            h - s.e_nu[nu],
                        )
                    })
                    .collect()
            })
            .collect();
        ReducedOp {
            s: self,
            par,
            f2: 0.5 * par.field,
            k,
            c_s,
            md,
            off: I * self.model.v,
            ground_decay,
        }
    }

    fn check_steady(&self) -> Result<(), SolveError> {
        let scale = self.lam.iter().map(|l| l.norm()).fold(1.0, f64::max);
        if self.min_excited_decay() <= 1e-13 * scale {
            return Err(SolveError::Degenerate(
                "an excited-state mode does not decay (all continuum rates and e-k dephasing vanish)".into(),
            ));
        }
        if self.g > 1 && self.model.spec.gamma_vib <= 0.0 {
            return Err(SolveError::Degenerate("excited ground levels do not relax (Gamma_vib = 0)".into()));
        }
        Ok(())
    }

    /// Steady state of the field-dressed Liouvillian.
    pub fn steady_state(&self, field: f64, omega_l: f64) -> Result<BlockState, SolveError> {
        self.check_steady()?;
        let op = self.operator(OpParams { field, omega_l, z: ZERO, steady: true });
        op.solve(&BlockRhs::default())
    }

    /// Solves (z − A)ρ = Y.
    pub fn resolvent(&self, field: f64, omega_l: f64, z: c64, rhs: &BlockRhs) -> Result<BlockState, SolveError> {
        let op = self.operator(OpParams { field, omega_l, z, steady: false });
        op.solve(rhs)
    }

    /// Tr X.
    pub fn trace_x(&self, xt: MatRef<'_, c64>) -> c64 {
        let mut acc = ZERO;
        for j in 0..self.p {
            for i in 0..self.p {
                acc += xt[(i, j)] * self.q[(j, i)];
            }
        }
        acc
    }

    /// X_ee.
    pub fn x_ee(&self, xt: MatRef<'_, c64>) -> c64 {
        let mut acc = ZERO;
        for i in 0..self.p {
            let mut row = ZERO;
            for j in 0..self.p {
                row += xt[(i, j)] * self.ve[j].conj();
            }
            acc += self.ve[i] * row;
        }
        acc
    }

    /// μ X as a g×p matrix (rows: ground levels).
    pub fn dipole_times_x(&self, xt: MatRef<'_, c64>) -> Mat<c64> {
        (&self.phiv * xt) * self.v.adjoint()
    }

    /// X = V X̃ V†.
    pub fn reconstruct_x(&self, xt: MatRef<'_, c64>) -> Mat<c64> {
        (&self.v * xt) * self.v.adjoint()
    }

    /// Full d×d matrix from the blocks.
    pub fn assemble(&self, st: &BlockState) -> Mat<c64> {
        let (g, p) = (self.g, self.p);
        let x = self.reconstruct_x(st.xt.as_ref());
        let d = g + p;
        Mat::from_fn(d, d, |l, m| match (l < g, m < g) {
            (true, true) => st.gg[(l, m)],
            (true, false) => st.gx[(l, m - g)],
            (false, true) => st.xg[(l - g, m)],
            (false, false) => x[(l - g, m - g)],
        })
    }

    pub(crate) fn dims(&self) -> (usize, usize) {
        (self.g, self.p)
    }

    pub(crate) fn phi(&self) -> MatRef<'_, c64> {
        self.phi.as_ref()
    }

    /// X̃ of the excited block for given R, C and X_ee (z-dependent through K).
    pub(crate) fn xt_from(&self, k: MatRef<'_, c64>, f2: f64, gx: MatRef<'_, c64>, xg: MatRef<'_, c64>, s: c64) -> Mat<c64> {
        let p = self.p;
        let rt = gx * self.w.adjoint();
        let ct = &self.w * xg;
        let a = &self.a_hat * Scale(c64::new(f2, 0.0));
        let t1 = &a * &rt;
        let t2 = &ct * a.adjoint();
        let gke = 2.0 * self.model.spec.gamma_k_e;
        Mat::from_fn(p, p, |i, j| {
            let mut t = -I * (t1[(i, j)] - t2[(i, j)]);
            if gke != 0.0 {
                t += s * gke * self.we[i] * self.we[j].conj();
            }
            k[(i, j)] * t
        })
    }
}

fn pack(gx: &Mat<c64>, xg: &Mat<c64>, gg: &Mat<c64>, s: c64) -> Vec<c64> {
    let (g, p) = (gx.nrows(), gx.ncols());
    let mut u = Vec::with_capacity(2 * g * p + g * g + 1);
    for nu in 0..g {
        for x in 0..p {
            u.push(gx[(nu, x)]);
        }
    }
    for nu in 0..g {
        for x in 0..p {
            u.push(xg[(x, nu)]);
        }
    }
    for nu in 0..g {
        for mu in 0..g {
            u.push(gg[(nu, mu)]);
        }
    }
    u.push(s);
    u
}

fn unpack(u: &[c64], g: usize, p: usize) -> (Mat<c64>, Mat<c64>, Mat<c64>, c64) {
    let gx = Mat::from_fn(g, p, |nu, x| u[nu * p + x]);
    let off = g * p;
    let xg = Mat::from_fn(p, g, |x, nu| u[off + nu * p + x]);
    let off = 2 * g * p;
    let gg = Mat::from_fn(g, g, |nu, mu| u[off + nu * g + mu]);
    (gx, xg, gg, u[off + g * g])
}

impl ReducedOp<'_> {
    fn functionals(&self, xt: MatRef<'_, c64>) -> Functionals {
        let s = self.s;
        let phix = (&s.phiv * xt) * s.v.adjoint();
        let xphi = &s.v * (xt * s.phiv.adjoint());
        Functionals { phix, xphi, trx: s.trace_x(xt), xee: s.x_ee(xt) }
    }

    fn xt_lin(&self, gx: &Mat<c64>, xg: &Mat<c64>, s: c64) -> Mat<c64> {
        self.s.xt_from(self.k.as_ref(), self.f2, gx.as_ref(), xg.as_ref(), s)
    }

    /// Row ν of R times M_ν.
    fn row_times_m(&self, nu: usize, r: &Mat<c64>) -> Vec<c64> {
        let p = self.s.p;
        let md = &self.md[nu];
        let mut out = vec![ZERO; p];
        let mut head = r[(nu, 0)] * md[0];
        for x in 1..p {
            head += r[(nu, x)] * self.off;
            out[x] = r[(nu, x)] * md[x] + r[(nu, 0)] * self.off;
        }
        out[0] = head;
        out
    }

    /// N_ν c for column ν of C, with N_ν = conj(M_ν).
    fn n_times_col(&self, nu: usize, c: &Mat<c64>) -> Vec<c64> {
        let p = self.s.p;
        let md = &self.md[nu];
        let off = self.off.conj();
        let mut out = vec![ZERO; p];
        let mut head = c[(0, nu)] * md[0].conj();
        for x in 1..p {
            head += c[(x, nu)] * off;
            out[x] = c[(x, nu)] * md[x].conj() + c[(0, nu)] * off;
        }
        out[0] = head;
        out
    }

    fn apply(&self, u: &[c64]) -> Vec<c64> {
        let (g, p) = self.s.dims();
        let (gx, xg, gg, s) = unpack(u, g, p);
        let xt = self.xt_lin(&gx, &xg, s);
        let fx = self.functionals(xt.as_ref());
        let (out_gx, out_xg, out_gg) = self.blocks_out(&gx, &xg, &gg, &fx);
        pack(&out_gx, &out_xg, &out_gg, s - fx.xee)
    }

    fn blocks_out(&self, gx: &Mat<c64>, xg: &Mat<c64>, gg: &Mat<c64>, fx: &Functionals) -> (Mat<c64>, Mat<c64>, Mat<c64>) {
        let (g, p) = self.s.dims();
        let z = self.par.z;
        let f2 = c64::new(self.f2, 0.0);
        let phi = self.s.phi();
        let spec = &self.s.model.spec;
        let mut out_gx = Mat::<c64>::zeros(g, p);
        for nu in 0..g {
            let rm = self.row_times_m(nu, gx);
            for x in 0..p {
                let mut acc = z * gx[(nu, x)] - rm[x] + I * f2 * fx.phix[(nu, x)];
                for mu in 0..g {
                    acc -= I * f2 * gg[(nu, mu)] * phi[(mu, x)];
                }
                out_gx[(nu, x)] = acc;
            }
        }
        let mut out_xg = Mat::<c64>::zeros(p, g);
        for nu in 0..g {
            let nc = self.n_times_col(nu, xg);
            for x in 0..p {
                let mut acc = z * xg[(x, nu)] - nc[x] - I * f2 * fx.xphi[(x, nu)];
                for mu in 0..g {
                    acc += I * f2 * phi[(mu, x)] * gg[(mu, nu)];
                }
                out_xg[(x, nu)] = acc;
            }
        }
        let phic = phi * xg;
        let rphi = gx * phi.transpose();
        let n_cont = fx.trx - fx.xee;
        let mut out_gg = Mat::<c64>::zeros(g, g);
        for nu in 0..g {
            for mu in 0..g {
                let mut acc = gg[(nu, mu)]
                    * (z + I * (spec.e_nu[nu] - spec.e_nu[mu])
                        + 0.5 * (self.ground_decay[nu] + self.ground_decay[mu]));
                acc += I * f2 * (phic[(nu, mu)] - rphi[(nu, mu)]);
                if nu == mu {
                    acc -= n_cont * spec.gamma_c_nu[nu];
                }
                out_gg[(nu, mu)] = acc;
            }
        }
        let relax: c64 = (1..g).map(|nu| gg[(nu, nu)]).sum();
        out_gg[(0, 0)] -= relax * spec.gamma_vib;
        if self.par.steady {
            let tr: c64 = (0..g).map(|nu| gg[(nu, nu)]).sum();
            out_gg[(0, 0)] = tr + fx.trx;
        }
        (out_gx, out_xg, out_gg)
    }

    fn precond(&self, y: &[c64]) -> Vec<c64> {
        let (g, p) = self.s.dims();
        let (ygx, yxg, ygg, ys) = unpack(y, g, p);
        let z = self.par.z;
        let spec = &self.s.model.spec;
        let mut gx = Mat::<c64>::zeros(g, p);
        let mut xg = Mat::<c64>::zeros(p, g);
        for nu in 0..g {
            let md = &self.md[nu];
            let dk: Vec<c64> = md[1..].iter().map(|m| z - m).collect();
            let rhs: Vec<c64> = (0..p).map(|x| ygx[(nu, x)]).collect();
            let r = arrow_solve(z - md[0], &dk, -self.off, &rhs);
            for x in 0..p {
                gx[(nu, x)] = r[x];
            }
            let dk: Vec<c64> = md[1..].iter().map(|m| z - m.conj()).collect();
            let rhs: Vec<c64> = (0..p).map(|x| yxg[(x, nu)]).collect();
            let c = arrow_solve(z - md[0].conj(), &dk, -self.off.conj(), &rhs);
            for x in 0..p {
                xg[(x, nu)] = c[x];
            }
        }
        let mut gg = Mat::<c64>::zeros(g, g);
        let safe = |den: c64| if den.norm() == 0.0 { c64::new(1.0, 0.0) } else { den };
        for nu in 0..g {
            for mu in 0..g {
                if nu != mu {
                    let den = z
                        + I * (spec.e_nu[nu] - spec.e_nu[mu])
                        + 0.5 * (self.ground_decay[nu] + self.ground_decay[mu]);
                    gg[(nu, mu)] = ygg[(nu, mu)] / safe(den);
                }
            }
        }
        let mut pops = ZERO;
        for nu in 1..g {
            gg[(nu, nu)] = ygg[(nu, nu)] / safe(z + spec.gamma_vib);
            pops += gg[(nu, nu)];
        }
        gg[(0, 0)] = if self.par.steady {
            ygg[(0, 0)] - pops
        } else {
            (ygg[(0, 0)] + pops * spec.gamma_vib) / safe(z)
        };
        let s = ys / safe(c64::new(1.0, 0.0) - self.c_s);
        pack(&gx, &xg, &gg, s)
    }

    pub(crate) fn solve(&self, rhs: &BlockRhs) -> Result<BlockState, SolveError> {
        let (g, p) = self.s.dims();
        let zero_g = || Mat::<c64>::zeros(g, g);
        let mut ygg = rhs.gg.clone().unwrap_or_else(zero_g);
        let mut ygx = rhs.gx.clone().unwrap_or_else(|| Mat::zeros(g, p));
        let mut yxg = rhs.xg.clone().unwrap_or_else(|| Mat::zeros(p, g));
        let spec = &self.s.model.spec;
        let f2 = c64::new(self.f2, 0.0);
        let mut xt_y = None;
        let mut ys = ZERO;
        if let Some(yx) = &rhs.xx {
            let wy = (&self.s.w * yx) * self.s.w.adjoint();
            let xt = Mat::from_fn(p, p, |i, j| self.k[(i, j)] * wy[(i, j)]);
            let fx = self.functionals(xt.as_ref());
            for nu in 0..g {
                for x in 0..p {
                    ygx[(nu, x)] -= I * f2 * fx.phix[(nu, x)];
                    yxg[(x, nu)] += I * f2 * fx.xphi[(x, nu)];
                }
                ygg[(nu, nu)] += (fx.trx - fx.xee) * spec.gamma_c_nu[nu];
            }
            ys = fx.xee;
            xt_y = Some((xt, fx.trx));
        }
        if self.par.steady {
            let tr_y = xt_y.as_ref().map_or(ZERO, |(_, t)| *t);
            ygg[(0, 0)] = c64::new(1.0, 0.0) - tr_y;
        }
        let b = pack(&ygx, &yxg, &ygg, ys);
        let x0 = self.precond(&b);
        let out = gmres(|u| self.apply(u), |u| self.precond(u), &b, Some(x0), GmresOptions::default());
        if !out.converged && !(out.rel_residual < 1e-11) {
            return Err(SolveError::NotConverged(out.rel_residual));
        }
        let (gx, xg, gg, s) = unpack(&out.x, g, p);
        let mut xt = self.xt_lin(&gx, &xg, s);
        if let Some((xy, _)) = xt_y {
            xt += xy;
        }
        Ok(BlockState { gg, gx, xg, xt, iterations: out.iterations, rel_residual: out.rel_residual })
    }
}
