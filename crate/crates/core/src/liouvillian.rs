//! RWA Liouvillian on vectorized density matrices.
//!
//! Vec convention: ρ_lm sits at flat index `l * d + m`, so the map
//! ρ ↦ LρR is represented by L ⊗ Rᵀ.

use faer::sparse::{SparseRowMat, Triplet};
use faer::{c64, Mat, MatRef};

use crate::model::DiscretizedModel;

const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Real symmetric Hamiltonian stored as its nonzero entries (both triangles).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseHermitian {
    pub fn to_dense(&self) -> Mat<c64> {
        let mut h = Mat::<c64>::zeros(self.dim, self.dim);
        for &(i, j, x) in &self.entries {
            h[(i, j)] += c64::new(x, 0.0);
        }
        h
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.0 == i && e.1 == j)
            .map(|e| e.2)
            .sum()
    }
}

/// Sparse operator on C^{d²} with row-major (CSR) storage.
#[derive(Debug, Clone)]
pub struct Superoperator {
    d: usize,
    names: Vec<String>,
    mat: SparseRowMat<usize, c64>,
}

impl Superoperator {
    pub fn from_triplets(d: usize, names: Vec<String>, mut t: Vec<(usize, usize, c64)>) -> Self {
        assert_eq!(names.len(), d);
        let n = d * d;
        t.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<Triplet<usize, usize, c64>> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            match merged.last_mut() {
                Some(last) if last.row == r && last.col == c => last.val += v,
                _ => merged.push(Triplet::new(r, c, v)),
            }
        }
        merged.retain(|e| e.val != c64::new(0.0, 0.0));
        let mat = SparseRowMat::try_new_from_triplets(n, n, &merged)
            .expect("triplet indices are in range");
        Self { d, names, mat }
    }

    pub fn zero(d: usize, names: Vec<String>) -> Self {
        Self::from_triplets(d, names, Vec::new())
    }

    /// Side length d of the density matrix.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Vectorized dimension d².
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub fn nnz(&self) -> usize {
        self.mat.val().len()
    }

    pub fn index(&self, l: usize, m: usize) -> usize {
        l * self.d + m
    }

    pub fn pair(&self, idx: usize) -> (usize, usize) {
        (idx / self.d, idx % self.d)
    }

    /// State labels of flat index `idx`, e.g. `("e", "g0")`.
    pub fn label(&self, idx: usize) -> (&str, &str) {
        let (l, m) = self.pair(idx);
        (&self.names[l], &self.names[m])
    }

    pub fn matrix(&self) -> &SparseRowMat<usize, c64> {
        &self.mat
    }

    pub fn triplets(&self) -> Vec<(usize, usize, c64)> {
        let rp = self.mat.row_ptr();
        let ci = self.mat.col_idx();
        let val = self.mat.val();
        let mut out = Vec::with_capacity(val.len());
        for r in 0..self.dim() {
            for p in rp[r]..rp[r + 1] {
                out.push((r, ci[p], val[p]));
            }
        }
        out
    }

    pub fn apply(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![c64::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        assert_eq!(x.len(), self.dim());
        let rp = self.mat.row_ptr();
        let ci = self.mat.col_idx();
        let val = self.mat.val();
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for p in rp[r]..rp[r + 1] {
                acc += val[p] * x[ci[p]];
            }
            *yr = acc;
        }
    }

    /// Applies the operator to a density matrix in matrix form.
    pub fn apply_mat(&self, rho: MatRef<'_, c64>) -> Mat<c64> {
        let y = self.apply(&vec_of(rho));
        unvec(&y, self.d)
    }

    pub fn to_dense(&self) -> Mat<c64> {
        self.mat.to_dense()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let rp = self.mat.row_ptr();
        let val = self.mat.val();
        (0..self.dim())
            .map(|r| val[rp[r]..rp[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        let mut t = self.triplets();
        t.extend(other.triplets());
        Self::from_triplets(self.d, self.names.clone(), t)
    }
}

pub fn vec_of(rho: MatRef<'_, c64>) -> Vec<c64> {
    let d = rho.nrows();
    let mut v = Vec::with_capacity(d * d);
    for l in 0..d {
        for m in 0..d {
            v.push(rho[(l, m)]);
        }
    }
    v
}

pub fn unvec(v: &[c64], d: usize) -> Mat<c64> {
    assert_eq!(v.len(), d * d);
    Mat::from_fn(d, d, |l, m| v[l * d + m])
}

pub fn state_names(model: &DiscretizedModel) -> Vec<String> {
    let g = model.n_nu();
    (0..model.dim())
        .map(|l| {
            if l < g {
                format!("g{l}")
            } else if l == g {
                "e".to_string()
            } else {
                format!("k{}", l - g - 1)
            }
        })
        .collect()
}

pub fn build_rwa_hamiltonian(model: &DiscretizedModel, field: f64, omega_l: f64) -> SparseHermitian {
    let d = model.dim();
    let g = model.n_nu();
    let e = model.index_e();
    let mut entries = Vec::new();
    for l in 0..d {
        let shift = if model.is_excited(l) { omega_l } else { 0.0 };
        entries.push((l, l, model.energy(l) - shift));
    }
    for j in 0..model.n_k {
        let k = model.index_k(j);
        entries.push((e, k, model.v));
        entries.push((k, e, model.v));
    }
    if field != 0.0 {
        for nu in 0..g {
            for x in 0..model.n_x() {
                let c = 0.5 * field * model.dipole(nu, x);
                if c != 0.0 {
                    entries.push((nu, g + x, c));
                    entries.push((g + x, nu, c));
                }
            }
        }
    }
    SparseHermitian { dim: d, entries }
}

fn push_commutator(h: &SparseHermitian, t: &mut Vec<(usize, usize, c64)>) {
    let d = h.dim;
    for &(i, j, x) in &h.entries {
        let a = -I * x;
        for m in 0..d {
            // H ρ
            t.push((i * d + m, j * d + m, a));
            // −ρ H: (ρH)_{l,j} picks H_{i,j} ρ_{l,i}
            t.push((m * d + j, m * d + i, -a));
        }
    }
}

/// rate · (A ρ A† − ½{A†A, ρ}) for A = |a⟩⟨b|.
fn push_jump(d: usize, a: usize, b: usize, rate: f64, t: &mut Vec<(usize, usize, c64)>) {
    if rate == 0.0 {
        return;
    }
    t.push((a * d + a, b * d + b, c64::new(rate, 0.0)));
    let h = c64::new(-0.5 * rate, 0.0);
    for m in 0..d {
        t.push((b * d + m, b * d + m, h));
        t.push((m * d + b, m * d + b, h));
    }
}

fn push_continuum(model: &DiscretizedModel, t: &mut Vec<(usize, usize, c64)>) {
    let d = model.dim();
    for (nu, &rate) in model.spec.gamma_c_nu.iter().enumerate() {
        assert!(rate >= 0.0, "negative continuum rate");
        for j in 0..model.n_k {
            push_jump(d, nu, model.index_k(j), rate, t);
        }
    }
}

fn push_vib(model: &DiscretizedModel, t: &mut Vec<(usize, usize, c64)>) {
    let d = model.dim();
    assert!(model.spec.gamma_vib >= 0.0, "negative vibrational rate");
    for nu in 1..model.n_nu() {
        push_jump(d, 0, nu, model.spec.gamma_vib, t);
    }
}

/// Pure-dephasing rate of the coherence (l, m).
/// Rates that are not of the form |p_l − p_m|² break complete positivity,
/// and ρ can pick up small negative eigenvalues.
pub fn dephasing_rate(model: &DiscretizedModel, l: usize, m: usize) -> f64 {
    let g = model.n_nu();
    let e = model.index_e();
    let s = &model.spec;
    let (lo, hi) = if l <= m { (l, m) } else { (m, l) };
    if lo == hi || hi < g {
        0.0
    } else if lo < g {
        if hi == e {
            s.gamma_e_nu[lo]
        } else {
            s.gamma_k_nu[lo]
        }
    } else if lo == e {
        s.gamma_k_e
    } else {
        0.0
    }
}

fn push_dephasing(model: &DiscretizedModel, t: &mut Vec<(usize, usize, c64)>) {
    let d = model.dim();
    for l in 0..d {
        for m in 0..d {
            let r = dephasing_rate(model, l, m);
            assert!(r >= 0.0, "negative dephasing rate");
            if r != 0.0 {
                t.push((l * d + m, l * d + m, c64::new(-r, 0.0)));
            }
        }
    }
}

pub fn build_dissipator_continuum(model: &DiscretizedModel) -> Superoperator {
    let mut t = Vec::new();
    push_continuum(model, &mut t);
    Superoperator::from_triplets(model.dim(), state_names(model), t)
}

pub fn build_dissipator_vib(model: &DiscretizedModel) -> Superoperator {
    let mut t = Vec::new();
    push_vib(model, &mut t);
    Superoperator::from_triplets(model.dim(), state_names(model), t)
}

pub fn build_dephasing(model: &DiscretizedModel) -> Superoperator {
    let mut t = Vec::new();
    push_dephasing(model, &mut t);
    Superoperator::from_triplets(model.dim(), state_names(model), t)
}

/// A = −i(H⊗1 − 1⊗Hᵀ) + continuum + vibrational + dephasing dissipators.
pub fn assemble_liouvillian(model: &DiscretizedModel, field: f64, omega_l: f64) -> Superoperator {
    let h = build_rwa_hamiltonian(model, field, omega_l);
    let mut t = Vec::new();
    push_commutator(&h, &mut t);
    push_continuum(model, &mut t);
    push_vib(model, &mut t);
    push_dephasing(model, &mut t);
    Superoperator::from_triplets(model.dim(), state_names(model), t)
}

/// dρ/dt evaluated directly in matrix form, without the superoperator.
pub fn lindblad_rhs(
    model: &DiscretizedModel,
    field: f64,
    omega_l: f64,
    rho: MatRef<'_, c64>,
) -> Mat<c64> {
    let d = model.dim();
    let g = model.n_nu();
    let s = &model.spec;
    let h = build_rwa_hamiltonian(model, field, omega_l);
    let mut out = Mat::<c64>::zeros(d, d);
    for &(i, j, x) in &h.entries {
        let a = -I * x;
        for m in 0..d {
            out[(i, m)] += a * rho[(j, m)];
            out[(m, j)] -= a * rho[(m, i)];
        }
    }
    let n_cont: c64 = (0..model.n_k).map(|j| rho[(model.index_k(j), model.index_k(j))]).sum();
    let sum_gc = s.sum_gamma_c();
    for (nu, &rate) in s.gamma_c_nu.iter().enumerate() {
        out[(nu, nu)] += n_cont * rate;
    }
    let decay = |l: usize| -> f64 {
        if l > g {
            sum_gc
        } else if l > 0 && l < g {
            s.gamma_vib
        } else {
            0.0
        }
    };
    for nu in 1..g {
        out[(0, 0)] += rho[(nu, nu)] * s.gamma_vib;
    }
    for l in 0..d {
        for m in 0..d {
            let r = 0.5 * (decay(l) + decay(m)) + dephasing_rate(model, l, m);
            out[(l, m)] -= rho[(l, m)] * r;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{discretize, SystemSpec};

    fn small() -> DiscretizedModel {
        let mut s = SystemSpec::reference(1.5, 0.3);
        s.gamma_e_nu = vec![0.1, 0.2];
        s.gamma_k_nu = vec![0.05, 0.07];
        s.gamma_k_e = 0.03;
        s.field = 0.3;
        discretize(&s, 3.0, 5).unwrap()
    }

    fn random_rho(d: usize, seed: u64) -> Mat<c64> {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = Mat::from_fn(d, d, |_, _| c64::new(next(), next()));
        Mat::from_fn(d, d, |l, m| a[(l, m)] + a[(m, l)].conj())
    }

    #[test]
    fn hamiltonian_blocks() {
        let m = small();
        let h0 = build_rwa_hamiltonian(&m, 0.0, m.spec.e_e);
        assert_eq!(h0.get(m.index_e(), m.index_e()), 0.0);
        for nu in 0..m.n_nu() {
            for l in m.n_nu()..m.dim() {
                assert_eq!(h0.get(nu, l), 0.0);
            }
        }
        let h = build_rwa_hamiltonian(&m, 0.3, 19.0).to_dense();
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                assert_eq!(h[(i, j)], h[(j, i)].conj());
            }
        }
    }

    #[test]
    fn superoperator_matches_matrix_form() {
        let m = small();
        let a = assemble_liouvillian(&m, 0.3, 19.5);
        let rho = random_rho(m.dim(), 3);
        let x = a.apply_mat(rho.as_ref());
        let y = lindblad_rhs(&m, 0.3, 19.5, rho.as_ref());
        let err = (&x - &y).norm_max();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn continuum_population_flow() {
        let m = small();
        let op = build_dissipator_continuum(&m);
        let d = m.dim();
        let k = m.index_k(2);
        let mut rho = Mat::<c64>::zeros(d, d);
        rho[(k, k)] = c64::new(1.0, 0.0);
        let out = op.apply_mat(rho.as_ref());
        assert!((out[(k, k)].re + m.spec.sum_gamma_c()).abs() < 1e-15);
        for nu in 0..m.n_nu() {
            assert!((out[(nu, nu)].re - m.spec.gamma_c_nu[nu]).abs() < 1e-15);
        }
    }

    #[test]
    fn vibrational_relaxation() {
        let m = small();
        let op = build_dissipator_vib(&m);
        let d = m.dim();
        let mut rho = Mat::<c64>::zeros(d, d);
        rho[(1, 1)] = c64::new(1.0, 0.0);
        rho[(1, 0)] = c64::new(1.0, 0.0);
        let out = op.apply_mat(rho.as_ref());
        let gv = m.spec.gamma_vib;
        assert!((out[(0, 0)].re - gv).abs() < 1e-15);
        assert!((out[(1, 1)].re + gv).abs() < 1e-15);
        assert!((out[(1, 0)].re + 0.5 * gv).abs() < 1e-15);
    }

    #[test]
    fn single_level_has_no_vibrational_term() {
        let mut s = SystemSpec::reference(1.0, 0.2);
        for list in [&mut s.mu_nu_e, &mut s.sqrtn_mu_nu_c, &mut s.gamma_c_nu, &mut s.gamma_e_nu, &mut s.gamma_k_nu] {
            list.truncate(1);
        }
        s.e_nu.truncate(1);
        let m = discretize(&s, 3.0, 5).unwrap();
        assert_eq!(build_dissipator_vib(&m).nnz(), 0);
    }

    #[test]
    fn dephasing_is_diagonal() {
        let m = small();
        let op = build_dephasing(&m);
        let d = m.dim();
        for (r, c, v) in op.triplets() {
            assert_eq!(r, c);
            let (l, mm) = op.pair(r);
            assert_ne!(l, mm);
            assert_eq!(v.re, -dephasing_rate(&m, mm, l));
        }
        let e = m.index_e();
        assert_eq!(dephasing_rate(&m, e, 0), m.spec.gamma_e_nu[0]);
        assert_eq!(op.label(e * d + 1), ("e", "g1"));
    }

    #[test]
    fn zero_field_fixed_point() {
        let m = small();
        let a = assemble_liouvillian(&m, 0.0, 20.0);
        let mut v = vec![c64::new(0.0, 0.0); a.dim()];
        v[0] = c64::new(1.0, 0.0);
        let out = a.apply(&v);
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }
}
