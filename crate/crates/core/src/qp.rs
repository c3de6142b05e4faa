//! Primal active-set solver for least squares under row-wise lower bounds.
//!
//! Solves
//!
//! ```text
//!     minimize    ||y - A theta||^2 + ridge ||theta||^2
//!     subject to  A theta >= lower   (one bound per design row)
//! ```
//!
//! from a feasible starting point. The sequential quantile fits call this
//! once per level, warm-starting each solve at the previous level's
//! coefficients, which satisfy the new bounds by construction. The Gram
//! factorization depends only on `A` and is shared across targets.

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, Cholesky};

/// Ridge applied to the Gram matrix; guards against constant or
/// duplicated expanded columns.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Absolute slack allowed on the row bounds.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Scaled first-order optimality residual required from every solve.
pub const KKT_TOLERANCE: f64 = 1e-6;

const DEFAULT_MAX_ITERATIONS: usize = 20_000;

/// Optimality certificate for one solve.
#[derive(Debug, Clone, Copy)]
pub struct QpReport {
    pub iterations: usize,
    /// `max(0, lower_r - (A theta)_r)` over all rows.
    pub max_violation: f64,
    /// Scaled stationarity residual of the Lagrangian gradient.
    pub stationarity: f64,
    /// Working-set size at the optimum.
    pub active: usize,
}

/// Reusable solver state for one design matrix.
pub struct BoundedLsq {
    /// Row-major copy of the design matrix.
    a: Vec<f64>,
    rows: usize,
    cols: usize,
    ridge: f64,
    /// Ridged Gram matrix `A^T A + ridge I`, row-major `cols x cols`.
    gram: Vec<f64>,
    chol: Cholesky,
    /// Euclidean norm of every design row, for relative thresholds.
    row_norms: Vec<f64>,
    max_iterations: usize,
}

impl BoundedLsq {
    pub fn new(a: &ArrayView2<f64>, ridge: f64) -> Result<Self> {
        let rows = a.nrows();
        let cols = a.ncols();
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput("design matrix"));
        }
        let data: Vec<f64> = a.iter().cloned().collect();
        let mut gram = vec![0.0; cols * cols];
        let mut row_norms = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = &data[r * cols..(r + 1) * cols];
            row_norms.push(row.iter().map(|v| v * v).sum::<f64>().sqrt());
            for i in 0..cols {
                for j in 0..=i {
                    gram[i * cols + j] += row[i] * row[j];
                }
            }
        }
        for i in 0..cols {
            for j in i + 1..cols {
                gram[i * cols + j] = gram[j * cols + i];
            }
            gram[i * cols + i] += ridge;
        }
        let chol = Cholesky::new(&gram, cols).ok_or_else(|| {
            Error::InvalidParameter("Gram matrix is not positive definite".into())
        })?;
        Ok(BoundedLsq {
            a: data,
            rows,
            cols,
            ridge,
            gram,
            chol,
            row_norms,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.a[r * self.cols..(r + 1) * self.cols]
    }

    /// `A theta` for the current coefficients.
    pub fn apply(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| dot(self.row(r), theta))
            .collect()
    }

    fn gradient_half(&self, theta: &[f64], aty: &[f64], ax: &[f64]) -> Vec<f64> {
        // g = (A^T A + ridge I) theta - A^T y, assembled as A^T (A theta) + ridge theta - A^T y.
        let mut g = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            let axr = ax[r];
            for c in 0..self.cols {
                g[c] += row[c] * axr;
            }
        }
        for c in 0..self.cols {
            g[c] += self.ridge * theta[c] - aty[c];
        }
        g
    }

    /// Solve the equality-constrained step with the null-space method:
    /// minimize the quadratic model over `{p : a_r^T p = 0, r in working}`.
    /// Returns `(p, beta, reduced_inf)`: the step, the working-set
    /// multipliers of the half-gradient system, and the infinity norm of
    /// the reduced gradient `Z^T g`. The reduced norm decides stationarity;
    /// it is computed before the (possibly ill-conditioned) system solve,
    /// so it is trustworthy at gradient scale.
    fn equality_step(&self, g: &[f64], working: &[usize]) -> (Vec<f64>, Vec<f64>, f64) {
        let m = self.cols;
        let w = working.len();
        if w == 0 {
            let reduced_inf = g.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            let u = self.chol.solve(g);
            return (u.iter().map(|v| -v).collect(), Vec::new(), reduced_inf);
        }
        // B = A_W^T, factored as Q R; the trailing Q columns span the
        // null space of A_W.
        let mut b = vec![0.0; m * w];
        for (col, &r) in working.iter().enumerate() {
            let row = self.row(r);
            for i in 0..m {
                b[i * w + col] = row[i];
            }
        }
        let qr = householder_qr(&b, m, w);

        let beta = if qr.rank == w {
            // Least-squares multipliers of B beta = g.
            let mut q1tg = vec![0.0; w];
            for (col, entry) in q1tg.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..m {
                    acc += qr.q[i * m + col] * g[i];
                }
                *entry = acc;
            }
            qr.solve_upper(&q1tg)
        } else {
            // Numerically dependent working set (adds are guarded, so this
            // is a corner case): flag the first dependent column so the
            // caller drops it.
            let mut beta = vec![0.0; w];
            beta[qr.rank] = -1.0;
            return (vec![0.0; m], beta, 0.0);
        };

        let free = m - w;
        if free == 0 {
            return (vec![0.0; m], beta, 0.0);
        }
        // Reduced SPD system (Z^T G Z) pz = -Z^T g.
        let z: Vec<Vec<f64>> = (w..m).map(|col| qr.q_column(col)).collect();
        let mut gz = vec![0.0; m * free]; // G Z, column per null direction
        for (j, zj) in z.iter().enumerate() {
            for i in 0..m {
                let mut acc = 0.0;
                for t in 0..m {
                    acc += self.gram[i * m + t] * zj[t];
                }
                gz[i * free + j] = acc;
            }
        }
        let mut hz = vec![0.0; free * free];
        for (i, zi) in z.iter().enumerate() {
            for j in 0..free {
                let mut acc = 0.0;
                for t in 0..m {
                    acc += zi[t] * gz[t * free + j];
                }
                hz[i * free + j] = acc;
            }
        }
        let mut rhs = vec![0.0; free];
        for (j, zj) in z.iter().enumerate() {
            rhs[j] = -dot(zj, g);
        }
        let reduced_inf = rhs.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let pz = match Cholesky::new(&hz, free) {
            Some(chol) => chol.solve(&rhs),
            None => {
                // G is positive definite, so this only happens under severe
                // rounding; retreat to a zero step and let multipliers act.
                return (vec![0.0; m], beta, 0.0);
            }
        };
        let mut p = vec![0.0; m];
        for (j, zj) in z.iter().enumerate() {
            for i in 0..m {
                p[i] += zj[i] * pz[j];
            }
        }
        (p, beta, reduced_inf)
    }

    /// Minimize from a feasible `start`. `level` only labels errors.
    pub fn solve(
        &self,
        y: &[f64],
        lower: &[f64],
        start: &[f64],
        level: f64,
    ) -> Result<(Vec<f64>, QpReport)> {
        let (theta, _, report) = self.solve_warm(y, lower, start, &[], level)?;
        Ok((theta, report))
    }

    /// Like [`Self::solve`], but seeds the working set (rows must be tight
    /// at `start`; others are ignored) and returns the final working set
    /// for the next warm start. Consecutive quantile levels share most of
    /// their active rows, which keeps the pivot count small.
    pub fn solve_warm(
        &self,
        y: &[f64],
        lower: &[f64],
        start: &[f64],
        warm_working: &[usize],
        level: f64,
    ) -> Result<(Vec<f64>, Vec<usize>, QpReport)> {
        if y.len() != self.rows || lower.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                actual: y.len().min(lower.len()),
            });
        }
        if start.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: start.len(),
            });
        }
        let mut theta = start.to_vec();
        let mut ax = self.apply(&theta);
        let start_violation = max_violation(&ax, lower);
        if start_violation > FEASIBILITY_SLACK {
            return Err(Error::InvalidParameter(format!(
                "infeasible start for q={level}: bound violated by {start_violation:e}"
            )));
        }

        let mut aty = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            for c in 0..self.cols {
                aty[c] += row[c] * y[r];
            }
        }
        let grad_scale = 1.0 + aty.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let mut working: Vec<usize> = Vec::new();
        let mut in_working = vec![false; self.rows];
        for &r in warm_working {
            if r < self.rows
                && !in_working[r]
                && working.len() < self.cols
                && (ax[r] - lower[r]).abs() <= FEASIBILITY_SLACK
            {
                working.push(r);
                in_working[r] = true;
            }
        }
        // Degenerate vertices (many rows exactly at their bound, e.g. warm
        // starts) need an anti-cycling rule. Fast pivots run first; after a
        // run of zero-length steps the minimal-index rule takes over.
        let mut zero_steps = 0usize;

        for iteration in 1..=self.max_iterations {
            let stalled = zero_steps > 3 * self.cols + 10;
            let g = self.gradient_half(&theta, &aty, &ax);
            let (p, beta, reduced_inf) = self.equality_step(&g, &working);

            let theta_scale = 1.0 + theta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let p_norm = p.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

            if reduced_inf <= 1e-10 * grad_scale || p_norm <= 1e-12 * theta_scale {
                // Stationary on the working set; check dual feasibility.
                // Multipliers of the original gradient are 2 * beta.
                let negatives = working
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| beta[i] < -1e-10 * grad_scale);
                let drop = if stalled {
                    negatives.map(|(i, _)| i).min_by_key(|&i| working[i])
                } else {
                    negatives
                        .min_by(|a, b| beta[a.0].total_cmp(&beta[b.0]))
                        .map(|(i, _)| i)
                };
                match drop {
                    Some(i) => {
                        in_working[working[i]] = false;
                        working.remove(i);
                        zero_steps += 1;
                        continue;
                    }
                    None => {
                        let report = self.report(
                            iteration, &ax, lower, &g, &working, &beta, grad_scale,
                        );
                        return Ok((theta, working, report));
                    }
                }
            }

            // Largest feasible step along p, capped at the full step. Rows
            // whose direction component is negligible relative to the row
            // and step scale are skipped: they are numerically dependent on
            // the working set and cannot be added to it.
            let ap = self.apply(&p);
            let p_norm2 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut alpha = 1.0_f64;
            let mut blocking: Option<usize> = None;
            let mut blocking_rate = 0.0_f64;
            for r in 0..self.rows {
                if in_working[r] || ap[r] >= -1e-11 * self.row_norms[r] * p_norm2 {
                    continue;
                }
                let step = ((lower[r] - ax[r]) / ap[r]).max(0.0);
                if step < alpha - 1e-15 {
                    alpha = step;
                    blocking = Some(r);
                    blocking_rate = ap[r].abs();
                } else if step <= alpha + 1e-15
                    && blocking.is_some()
                    && !stalled
                    && ap[r].abs() > blocking_rate
                {
                    // Among ties prefer the strongest blocker; under the
                    // anti-cycling rule the first (lowest) index stands.
                    blocking = Some(r);
                    blocking_rate = ap[r].abs();
                }
            }
            for c in 0..self.cols {
                theta[c] += alpha * p[c];
            }
            ax = self.apply(&theta);
            if let Some(r) = blocking {
                working.push(r);
                in_working[r] = true;
            }
            if alpha > 1e-14 {
                zero_steps = 0;
            } else {
                zero_steps += 1;
            }
        }

        Err(Error::SolverDiverged {
            quantile: level,
            iterations: self.max_iterations,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        iterations: usize,
        ax: &[f64],
        lower: &[f64],
        g: &[f64],
        working: &[usize],
        beta: &[f64],
        grad_scale: f64,
    ) -> QpReport {
        // Stationarity of the Lagrangian: 2 g - A_W^T (2 beta) = 0.
        let mut resid = g.to_vec();
        for (i, &r) in working.iter().enumerate() {
            let row = self.row(r);
            for c in 0..self.cols {
                resid[c] -= row[c] * beta[i];
            }
        }
        let stationarity =
            2.0 * resid.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / grad_scale;
        QpReport {
            iterations,
            max_violation: max_violation(ax, lower),
            stationarity,
            active: working.len(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_violation(ax: &[f64], lower: &[f64]) -> f64 {
    ax.iter()
        .zip(lower)
        .fold(0.0_f64, |m, (&v, &l)| m.max(l - v))
}
