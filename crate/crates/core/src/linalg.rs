//! Sparse matrices and the Krylov solver used by every implicit step.
//!
//! Systems are assembled as triplets, compressed to CSR with sorted columns
//! and solved with right-preconditioned BiCGSTAB (van der Vorst, 1992) using
//! an ILU(0) preconditioner. Everything runs sequentially in a fixed order so
//! repeated solves are bit-identical.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Triplets {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Triplets {
        Triplets {
            n,
            entries: Vec::with_capacity(8 * n),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Sums duplicates and keeps explicit zeros so the pattern is stable.
    pub fn into_csr(mut self) -> CsrMatrix {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            y[i] = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(p) => self.vals[self.row_ptr[i] + p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.cols[p]] += self.vals[p];
            }
        }
        d
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Ilu0> {
        let mut lu = a.clone();
        let n = a.n;
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            for p in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.cols[p] == i {
                    *d = p;
                }
            }
            if *d == usize::MAX {
                return Err(Error::InvalidParameter(format!("row {i} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                pos[lu.cols[p]] = p;
            }
            for p in start..end {
                let k = lu.cols[p];
                if k >= i {
                    break;
                }
                let pivot = lu.vals[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::InvalidParameter(format!("zero pivot in row {k}")));
                }
                lu.vals[p] /= pivot;
                let lik = lu.vals[p];
                for q in diag[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.cols[q];
                    if pos[j] != usize::MAX {
                        lu.vals[pos[j]] -= lik * lu.vals[q];
                    }
                }
            }
            for p in start..end {
                pos[lu.cols[p]] = usize::MAX;
            }
            if lu.vals[diag[i]] == 0.0 {
                return Err(Error::InvalidParameter(format!("zero pivot in row {i}")));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = r[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                s -= lu.vals[p] * z[lu.cols[p]];
            }
            z[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = z[i];
            for p in self.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.vals[p] * z[lu.cols[p]];
            }
            z[i] = s / lu.vals[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Relative residual `|b - A x| / |b|` of the returned solution.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &CsrMatrix, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.mul_into(x, r);
    for i in 0..r.len() {
        r[i] = b[i] - r[i];
    }
}

/// Solves `A x = b` to relative residual `tol`.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    let bnorm = norm(b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let m = Ilu0::new(a)?;
    let mut r = vec![0.0; n];
    residual(a, b, &x, &mut r);
    let mut rel = norm(&r) / bnorm;
    let mut iterations = 0;

    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];

    // outer loop restarts the shadow residual after a breakdown
    while rel > tol && iterations < max_iter {
        let rhat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        while iterations < max_iter {
            iterations += 1;
            let rho_new = dot(&rhat, &r);
            if rho_new.abs() < 1e-300 || omega == 0.0 {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            m.apply(&p, &mut ph);
            a.mul_into(&ph, &mut v);
            let rv = dot(&rhat, &v);
            if rv.abs() < 1e-300 {
                break;
            }
            alpha = rho / rv;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) / bnorm <= tol {
                for i in 0..n {
                    x[i] += alpha * ph[i];
                }
                break;
            }
            m.apply(&s, &mut sh);
            a.mul_into(&sh, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..n {
                x[i] += alpha * ph[i] + omega * sh[i];
                r[i] = s[i] - omega * t[i];
            }
            if norm(&r) / bnorm <= tol {
                break;
            }
        }
        // recurrence drift: always judge on the true residual
        residual(a, b, &x, &mut r);
        rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            break;
        }
    }
    if rel <= tol {
        Ok((
            x,
            SolveStats {
                iterations,
                residual: rel,
            },
        ))
    } else {
        Err(Error::LinearSolver {
            iterations,
            residual: rel,
        })
    }
}
