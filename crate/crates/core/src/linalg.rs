//! Small dense linear algebra used by the solvers.
//!
//! Design widths stay tiny (intercept plus features times degree), so a
//! hand-rolled Cholesky is all that is needed.

/// Cholesky factor `L` (row-major, lower triangular) of a symmetric
/// positive-definite matrix.
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factor a row-major symmetric matrix. Returns `None` when a pivot is
    /// not strictly positive.
    pub fn new(a: &[f64], n: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[i * n + j];
                for t in 0..j {
                    sum -= l[i * n + t] * l[j * n + t];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Some(Cholesky { n, l })
    }

    /// Solve `A x = b` in place via forward and back substitution.
    pub fn solve_into(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut sum = b[i];
            for t in 0..i {
                sum -= self.l[i * n + t] * b[t];
            }
            b[i] = sum / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut sum = b[i];
            for t in i + 1..n {
                sum -= self.l[t * n + i] * b[t];
            }
            b[i] = sum / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut out = b.to_vec();
        self.solve_into(&mut out);
        out
    }
}

/// Householder QR of a row-major `m x w` matrix with `w <= m`.
///
/// `q` is the full `m x m` orthogonal factor, `r` the `m x w` triangular
/// factor; columns `w..m` of `q` span the null space of the transpose.
pub struct Qr {
    pub m: usize,
    pub w: usize,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    /// Number of diagonal entries of R above the rank tolerance.
    pub rank: usize,
}

pub fn householder_qr(b: &[f64], m: usize, w: usize) -> Qr {
    debug_assert_eq!(b.len(), m * w);
    debug_assert!(w <= m);
    let mut r = b.to_vec();
    let mut q = vec![0.0; m * m];
    for i in 0..m {
        q[i * m + i] = 1.0;
    }
    let mut v = vec![0.0; m];
    for k in 0..w {
        // Householder vector for column k below the diagonal.
        let mut norm2 = 0.0;
        for i in k..m {
            norm2 += r[i * w + k] * r[i * w + k];
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[k * w + k] >= 0.0 { -norm } else { norm };
        for i in 0..m {
            v[i] = if i < k { 0.0 } else { r[i * w + k] };
        }
        v[k] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // R <- H R with H = I - 2 v v^T / (v^T v).
        for col in k..w {
            let mut dot = 0.0;
            for i in k..m {
                dot += v[i] * r[i * w + col];
            }
            let scale = 2.0 * dot / vnorm2;
            for i in k..m {
                r[i * w + col] -= scale * v[i];
            }
        }
        // Q <- Q H.
        for row in 0..m {
            let mut dot = 0.0;
            for i in k..m {
                dot += q[row * m + i] * v[i];
            }
            let scale = 2.0 * dot / vnorm2;
            for i in k..m {
                q[row * m + i] -= scale * v[i];
            }
        }
    }
    let mut max_diag = 0.0_f64;
    for k in 0..w {
        max_diag = max_diag.max(r[k * w + k].abs());
    }
    let tol = 1e-12 * max_diag.max(1e-300);
    let rank = (0..w).take_while(|&k| r[k * w + k].abs() > tol).count();
    Qr { m, w, q, r, rank }
}

impl Qr {
    /// Solve `R[..w, ..w] x = b` (upper triangular back substitution).
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let w = self.w;
        debug_assert_eq!(b.len(), w);
        let mut x = b.to_vec();
        for i in (0..w).rev() {
            let mut sum = x[i];
            for j in i + 1..w {
                sum -= self.r[i * self.w + j] * x[j];
            }
            x[i] = sum / self.r[i * self.w + i];
        }
        x
    }

    /// Column `col` of Q.
    pub fn q_column(&self, col: usize) -> Vec<f64> {
        (0..self.m).map(|row| self.q[row * self.m + col]).collect()
    }
}

/// Ridge-regularized least squares `argmin ||y - A theta||^2 + ridge ||theta||^2`
/// via the normal equations. `a` is row-major with `n` rows and `m` columns.
pub fn ridge_least_squares(a: &[f64], n: usize, m: usize, y: &[f64], ridge: f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * m);
    debug_assert_eq!(y.len(), n);
    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for row in 0..n {
        let r = &a[row * m..(row + 1) * m];
        for i in 0..m {
            rhs[i] += r[i] * y[row];
            for j in 0..=i {
                gram[i * m + j] += r[i] * r[j];
            }
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            gram[i * m + j] = gram[j * m + i];
        }
        gram[i * m + i] += ridge;
    }
    let chol = Cholesky::new(&gram, m).expect("ridge keeps the Gram matrix positive definite");
    chol.solve(&rhs)
}
