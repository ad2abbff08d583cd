//! Small numerical kernels: restarted GMRES and arrow-matrix solves.

use faer::c64;

pub(crate) const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

pub fn norm(x: &[c64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(x: &[c64], y: &[c64]) -> c64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    /// Target ‖b − Ax‖ / ‖b‖.
    pub tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { restart: 60, max_iter: 3000, tol: 1e-14 }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<c64>,
    pub iterations: usize,
    /// True relative residual of the returned iterate.
    pub rel_residual: f64,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES for `A x = b`.
pub fn gmres<A, M>(apply: A, precond: M, b: &[c64], x0: Option<Vec<c64>>, opts: GmresOptions) -> GmresOutcome
where
    A: Fn(&[c64]) -> Vec<c64>,
    M: Fn(&[c64]) -> Vec<c64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.unwrap_or_else(|| vec![ZERO; n]);
    if bnorm == 0.0 {
        return GmresOutcome { x: vec![ZERO; n], iterations: 0, rel_residual: 0.0, converged: true };
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let residual = |x: &[c64]| -> Vec<c64> {
        let ax = apply(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    };
    let mut r = residual(&x);
    let mut rel = norm(&r) / bnorm;
    let mut stagnant = 0;
    while rel > opts.tol && iterations < opts.max_iter {
        let beta = norm(&r);
        let mut basis: Vec<Vec<c64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut zs: Vec<Vec<c64>> = Vec::with_capacity(m);
        let mut h: Vec<Vec<c64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<c64> = Vec::with_capacity(m);
        let mut gvec = vec![c64::new(beta, 0.0)];
        for j in 0..m {
            iterations += 1;
            let z = precond(&basis[j]);
            let mut w = apply(&z);
            zs.push(z);
            let mut col = vec![ZERO; j + 2];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    col[i] += c;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= c * vk;
                    }
                }
            }
            let hn = norm(&w);
            col[j + 1] = c64::new(hn, 0.0);
            for i in 0..j {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = a * cs[i] + sn[i] * bb;
                col[i + 1] = -sn[i].conj() * a + bb * cs[i];
            }
            let (a, bb) = (col[j], col[j + 1]);
            let t = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == 0.0 {
                (0.0, c64::new(1.0, 0.0))
            } else {
                (a.norm() / t, (a / a.norm()) * bb.conj() / t)
            };
            col[j] = a * c + s * bb;
            col[j + 1] = ZERO;
            let gj = gvec[j];
            gvec[j] = gj * c;
            gvec.push(-s.conj() * gj);
            cs.push(c);
            sn.push(s);
            h.push(col);
            let est = gvec[j + 1].norm() / bnorm;
            if hn == 0.0 || est <= opts.tol * 0.5 || iterations >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|z| z / hn).collect());
        }
        let k = h.len();
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut acc = gvec[i];
            for jj in i + 1..k {
                acc -= h[jj][i] * y[jj];
            }
            y[i] = acc / h[i][i];
        }
        for (yj, zj) in y.iter().zip(&zs) {
            for (xi, zi) in x.iter_mut().zip(zj) {
                *xi += yj * zi;
            }
        }
        r = residual(&x);
        let new_rel = norm(&r) / bnorm;
        if new_rel > 0.5 * rel {
            stagnant += 1;
            if stagnant >= 3 {
                rel = new_rel;
                break;
            }
        } else {
            stagnant = 0;
        }
        rel = new_rel;
    }
    GmresOutcome { converged: rel <= opts.tol * 10.0, x, iterations, rel_residual: rel }
}

/// Solves M x = y for the symmetric arrow matrix with head diagonal `d0`,
/// tail diagonal `dk` and constant head–tail coupling `c`.
///
/// Component 0 of `x`/`y` is the head.
pub fn arrow_solve(d0: c64, dk: &[c64], c: c64, y: &[c64]) -> Vec<c64> {
    assert_eq!(y.len(), dk.len() + 1);
    let mut schur = d0;
    let mut rhs = y[0];
    for (dj, yj) in dk.iter().zip(&y[1..]) {
        let inv = dj.inv();
        schur -= c * c * inv;
        rhs -= c * yj * inv;
    }
    let x0 = rhs / schur;
    let mut x = Vec::with_capacity(y.len());
    x.push(x0);
    for (dj, yj) in dk.iter().zip(&y[1..]) {
        x.push((yj - c * x0) / dj);
    }
    x
}
