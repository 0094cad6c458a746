//! Small sparse kit: CSR storage with a fixed pattern, ILU(0), restarted GMRES and PCG.

use crate::error::{AlapError, Result};

#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    diag: Vec<usize>,
}

impl Csr {
    /// Builds a matrix with the given sorted column lists; every row must contain its diagonal.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, r) in rows.iter().enumerate() {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            let d = r.binary_search(&i).expect("pattern row without diagonal");
            diag.push(cols.len() + d);
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        Csr { n, row_ptr, cols, vals: vec![0.0; nnz], diag }
    }

    pub fn zero(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Position of entry `(i, j)` in `vals`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        r.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    pub fn diag_position(&self, i: usize) -> usize {
        self.diag[i]
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            y[i] = s;
        }
    }
}

/// Incomplete LU factorization with zero fill on the matrix pattern.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: Csr,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        // scatter map for row i
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (s, e) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in s..e {
                pos[lu.cols[p]] = p;
            }
            for p in s..e {
                let k = lu.cols[p];
                if k >= i {
                    break;
                }
                let dk = lu.vals[lu.diag[k]];
                let lik = lu.vals[p] / dk;
                lu.vals[p] = lik;
                for q in lu.diag[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.cols[q];
                    let pj = pos[j];
                    if pj != usize::MAX {
                        lu.vals[pj] -= lik * lu.vals[q];
                    }
                }
            }
            let d = lu.vals[lu.diag[i]];
            if !(d.abs() > 0.0) || !d.is_finite() {
                return Err(AlapError::SingularJacobian(format!("zero pivot in ILU(0) at row {i}")));
            }
            for p in s..e {
                pos[lu.cols[p]] = usize::MAX;
            }
        }
        Ok(Ilu0 { lu })
    }

    /// Solves `LU z = r` in place.
    pub fn apply(&self, z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = z[i];
            for p in lu.row_ptr[i]..lu.diag[i] {
                s -= lu.vals[p] * z[lu.cols[p]];
            }
            z[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = z[i];
            for p in lu.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.vals[p] * z[lu.cols[p]];
            }
            z[i] = s / lu.vals[lu.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn nrm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned restarted GMRES; `x` holds the initial guess on entry.
pub fn gmres(a: &Csr, m: &Ilu0, b: &[f64], x: &mut [f64], rtol: f64, restart: usize, max_iter: usize) -> KrylovStats {
    let n = a.n;
    let bnorm = nrm(b).max(1e-300);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    let mut v: Vec<Vec<f64>> = (0..=restart).map(|_| vec![0.0; n]).collect();
    let mut h = vec![vec![0.0; restart]; restart + 1];
    let mut cs = vec![0.0; restart];
    let mut sn = vec![0.0; restart];
    let mut g = vec![0.0; restart + 1];
    loop {
        a.matvec(x, &mut w);
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        let beta = nrm(&r);
        if beta / bnorm <= rtol || total >= max_iter {
            return KrylovStats { iterations: total, rel_residual: beta / bnorm, converged: beta / bnorm <= rtol };
        }
        for i in 0..n {
            v[0][i] = r[i] / beta;
        }
        g.iter_mut().for_each(|e| *e = 0.0);
        g[0] = beta;
        let mut k = 0;
        while k < restart && total < max_iter {
            z.copy_from_slice(&v[k]);
            m.apply(&mut z);
            a.matvec(&z, &mut w);
            // modified Gram–Schmidt
            for j in 0..=k {
                let hj = dot(&w, &v[j]);
                h[j][k] = hj;
                for i in 0..n {
                    w[i] -= hj * v[j][i];
                }
            }
            let hn = nrm(&w);
            h[k + 1][k] = hn;
            if hn > 0.0 {
                for i in 0..n {
                    v[k + 1][i] = w[i] / hn;
                }
            }
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let den = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if den == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / den;
                sn[k] = h[k + 1][k] / den;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            let res = g[k + 1].abs();
            k += 1;
            total += 1;
            if res / bnorm <= rtol || hn == 0.0 {
                break;
            }
        }
        // back substitution and update x += M⁻¹ V y
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        w.iter_mut().for_each(|e| *e = 0.0);
        for j in 0..k {
            for i in 0..n {
                w[i] += y[j] * v[j][i];
            }
        }
        m.apply(&mut w);
        for i in 0..n {
            x[i] += w[i];
        }
    }
}

/// Preconditioned conjugate gradients for symmetric positive definite systems.
pub fn pcg(a: &Csr, m: &Ilu0, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> KrylovStats {
    let n = a.n;
    let bnorm = nrm(b).max(1e-300);
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    a.matvec(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let mut z = r.clone();
    m.apply(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut it = 0;
    let mut rel = nrm(&r) / bnorm;
    while rel > rtol && it < max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z.copy_from_slice(&r);
        m.apply(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        rel = nrm(&r) / bnorm;
    }
    KrylovStats { iterations: it, rel_residual: rel, converged: rel <= rtol }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize, shift: f64, skew: f64) -> Csr {
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut r = vec![i];
                if i > 0 {
                    r.insert(0, i - 1);
                }
                if i + 1 < n {
                    r.push(i + 1);
                }
                r
            })
            .collect();
        let mut a = Csr::from_pattern(&rows);
        for i in 0..n {
            let d = a.diag_position(i);
            a.vals[d] = 2.0 + shift;
            if i > 0 {
                let p = a.position(i, i - 1).unwrap();
                a.vals[p] = -1.0 - skew;
            }
            if i + 1 < n {
                let p = a.position(i, i + 1).unwrap();
                a.vals[p] = -1.0 + skew;
            }
        }
        a
    }

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        let a = laplace_1d(50, 0.1, 0.3);
        let m = Ilu0::new(&a).unwrap();
        let x0: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; 50];
        a.matvec(&x0, &mut b);
        m.apply(&mut b);
        for i in 0..50 {
            assert!((b[i] - x0[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn gmres_and_pcg_solve() {
        let a = laplace_1d(200, 0.01, 0.2);
        let m = Ilu0::new(&laplace_1d(200, 0.01, 0.0)).unwrap();
        let x0: Vec<f64> = (0..200).map(|i| (i as f64 * 0.05).cos()).collect();
        let mut b = vec![0.0; 200];
        a.matvec(&x0, &mut b);
        let mut x = vec![0.0; 200];
        let st = gmres(&a, &m, &b, &mut x, 1e-12, 30, 2000);
        assert!(st.converged);
        assert!(x.iter().zip(&x0).all(|(p, q)| (p - q).abs() < 1e-8));

        let s = laplace_1d(200, 0.01, 0.0);
        let mut b = vec![0.0; 200];
        s.matvec(&x0, &mut b);
        let jac = {
            let mut d = s.clone();
            for i in 0..200 {
                for p in d.row_ptr[i]..d.row_ptr[i + 1] {
                    if d.cols[p] != i {
                        d.vals[p] = 0.0;
                    }
                }
            }
            Ilu0::new(&d).unwrap()
        };
        let mut x = vec![0.0; 200];
        let st = pcg(&s, &jac, &b, &mut x, 1e-12, 5000);
        assert!(st.converged);
        assert!(x.iter().zip(&x0).all(|(p, q)| (p - q).abs() < 1e-7));
    }
}
