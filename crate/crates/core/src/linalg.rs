//! Discrete operators and the linear solvers behind the implicit steps.
//!
//! Both second-order operators split as `L_r + D_zz`. The axial part is
//! diagonalized with sine (zero value at the lids) or cosine (zero slope)
//! vectors, leaving one tridiagonal radial solve per axial mode.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Solves a tridiagonal system. `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: rhs.len(),
        });
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Domain("singular tridiagonal system".into()));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Domain("singular tridiagonal system".into()));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Axial boundary behaviour seen by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LidCondition {
    Dirichlet,
    Neumann,
}

/// Radial part of a second-order operator, as a tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    /// Positive weights in which the operator is symmetric, if any.
    pub weights: Option<Vec<f64>>,
}

impl RadialOperator {
    /// `(1/r^3)(r^3 f_r)_r` in flux form, zero value at the wall.
    pub fn cubic(grid: &Grid) -> Self {
        let n = grid.nr;
        let dr = grid.dr;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let (rm, rp) = (grid.face_r(i), grid.face_r(i + 1));
            let w = (rp.powi(4) - rm.powi(4)) / 4.0;
            weights[i] = w;
            let a = rm.powi(3) / (dr * w);
            let c = rp.powi(3) / (dr * w);
            lower[i] = a;
            upper[i] = c;
            diag[i] = -(a + c);
        }
        // ghost beyond the wall is -f
        diag[n - 1] -= upper[n - 1];
        upper[n - 1] = 0.0;
        Self {
            lower,
            diag,
            upper,
            weights: Some(weights),
        }
    }

    /// `f_rr - f_r / r` centered, zero value at the wall.
    ///
    /// The plain stencil annihilates both `r^2` and `r^4` in the first cell, so
    /// that row instead applies `r^2 (1/r^3)(r^3 w_r)_r` to `w = f / r^2`,
    /// which is exact on both and keeps the row sum negative.
    pub fn swirl(grid: &Grid) -> Self {
        let n = grid.nr;
        let dr = grid.dr;
        let mut lower = vec![0.0; n];
        let mut diag = vec![-2.0 / (dr * dr); n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let r = grid.r_centers[i];
            lower[i] = 1.0 / (dr * dr) + 1.0 / (2.0 * r * dr);
            upper[i] = 1.0 / (dr * dr) - 1.0 / (2.0 * r * dr);
        }
        let rp = grid.face_r(1);
        let c0 = 4.0 / (dr * rp);
        let (r0, r1) = (grid.r_centers[0], grid.r_centers[1]);
        lower[0] = 0.0;
        diag[0] = -c0;
        upper[0] = c0 * r0 * r0 / (r1 * r1);
        // ghost beyond the wall is -r^2 (f / r^2) mirrored
        let (rl, rg) = (grid.r_centers[n - 1], grid.r_centers[n - 1] + dr);
        diag[n - 1] -= upper[n - 1] * rg * rg / (rl * rl);
        upper[n - 1] = 0.0;
        Self {
            lower,
            diag,
            upper,
            weights: None,
        }
    }

    fn apply_row(&self, x: &[f64], nz: usize, i: usize, j: usize) -> f64 {
        let n = self.diag.len();
        let mut s = self.diag[i] * x[i * nz + j];
        if i > 0 {
            s += self.lower[i] * x[(i - 1) * nz + j];
        }
        if i + 1 < n {
            s += self.upper[i] * x[(i + 1) * nz + j];
        }
        s
    }
}

/// Orthogonal eigenvectors of the axial second difference.
#[derive(Debug, Clone)]
pub struct AxialBasis {
    pub condition: LidCondition,
    nz: usize,
    /// `vectors[k * nz + j]`
    vectors: Vec<f64>,
    norms_sq: Vec<f64>,
    /// Eigenvalues of `D_zz`, all `<= 0`.
    pub eigenvalues: Vec<f64>,
}

impl AxialBasis {
    pub fn new(nz: usize, dz: f64, condition: LidCondition) -> Self {
        let n = nz as f64;
        let mut vectors = Vec::with_capacity(nz * nz);
        let mut eigenvalues = Vec::with_capacity(nz);
        for m in 0..nz {
            let k = match condition {
                LidCondition::Dirichlet => (m + 1) as f64,
                LidCondition::Neumann => m as f64,
            };
            for j in 0..nz {
                let theta = k * PI * (j as f64 + 0.5) / n;
                vectors.push(match condition {
                    LidCondition::Dirichlet => theta.sin(),
                    LidCondition::Neumann => theta.cos(),
                });
            }
            let s = (k * PI / (2.0 * n)).sin();
            eigenvalues.push(-4.0 / (dz * dz) * s * s);
        }
        let norms_sq = vectors.chunks(nz).map(|v| v.iter().map(|x| x * x).sum()).collect();
        Self {
            condition,
            nz,
            vectors,
            norms_sq,
            eigenvalues,
        }
    }

    fn forward(&self, values: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            let v = &self.vectors[m * self.nz..(m + 1) * self.nz];
            *o = v.iter().zip(values).map(|(a, b)| a * b).sum::<f64>() / self.norms_sq[m];
        }
    }

    fn inverse(&self, coeffs: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (m, c) in coeffs.iter().enumerate() {
            let v = &self.vectors[m * self.nz..(m + 1) * self.nz];
            for (o, a) in out.iter_mut().zip(v) {
                *o += c * a;
            }
        }
    }
}

/// Direct solver for `(alpha I - beta (L_r + D_zz)) x = b`.
#[derive(Debug, Clone)]
pub struct SeparableSolver {
    pub radial: RadialOperator,
    pub axial: AxialBasis,
    nr: usize,
    nz: usize,
    dz: f64,
}

impl SeparableSolver {
    pub fn new(grid: &Grid, radial: RadialOperator, lids: LidCondition) -> Self {
        Self {
            axial: AxialBasis::new(grid.nz, grid.dz, lids),
            radial,
            nr: grid.nr,
            nz: grid.nz,
            dz: grid.dz,
        }
    }

    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `y = alpha x - beta (L_r + D_zz) x`.
    pub fn apply(&self, alpha: f64, beta: f64, x: &[f64]) -> Vec<f64> {
        let (nr, nz) = (self.nr, self.nz);
        let inv_dz2 = 1.0 / (self.dz * self.dz);
        let dirichlet = self.axial.condition == LidCondition::Dirichlet;
        let mut y = vec![0.0; nr * nz];
        for i in 0..nr {
            for j in 0..nz {
                let c = x[i * nz + j];
                let below = if j > 0 {
                    x[i * nz + j - 1]
                } else if dirichlet {
                    -c
                } else {
                    c
                };
                let above = if j + 1 < nz {
                    x[i * nz + j + 1]
                } else if dirichlet {
                    -c
                } else {
                    c
                };
                let lap = self.radial.apply_row(x, nz, i, j) + (below - 2.0 * c + above) * inv_dz2;
                y[i * nz + j] = alpha * c - beta * lap;
            }
        }
        y
    }

    pub fn solve(&self, alpha: f64, beta: f64, b: &[f64]) -> Result<Vec<f64>> {
        let (nr, nz) = (self.nr, self.nz);
        if b.len() != nr * nz {
            return Err(Error::Dimension {
                expected: nr * nz,
                got: b.len(),
            });
        }
        let mut hat = vec![0.0; nr * nz];
        for i in 0..nr {
            self.axial.forward(&b[i * nz..(i + 1) * nz], &mut hat[i * nz..(i + 1) * nz]);
        }
        let lower: Vec<f64> = self.radial.lower.iter().map(|l| -beta * l).collect();
        let upper: Vec<f64> = self.radial.upper.iter().map(|u| -beta * u).collect();
        let mut col = vec![0.0; nr];
        for m in 0..nz {
            let shift = alpha - beta * self.axial.eigenvalues[m];
            let diag: Vec<f64> = self.radial.diag.iter().map(|d| shift - beta * d).collect();
            for i in 0..nr {
                col[i] = hat[i * nz + m];
            }
            let sol = solve_tridiagonal(&lower, &diag, &upper, &col)?;
            for i in 0..nr {
                hat[i * nz + m] = sol[i];
            }
        }
        let mut x = vec![0.0; nr * nz];
        for i in 0..nr {
            self.axial.inverse(&hat[i * nz..(i + 1) * nz], &mut x[i * nz..(i + 1) * nz]);
        }
        Ok(x)
    }

    /// Diagonal of `alpha I - beta (L_r + D_zz)`.
    pub fn diagonal(&self, alpha: f64, beta: f64) -> Vec<f64> {
        let (nr, nz) = (self.nr, self.nz);
        let inv_dz2 = 1.0 / (self.dz * self.dz);
        let mut out = Vec::with_capacity(nr * nz);
        for i in 0..nr {
            for j in 0..nz {
                let mut dzz = -2.0 * inv_dz2;
                if j == 0 || j + 1 == nz {
                    let ghost = if self.axial.condition == LidCondition::Dirichlet { -1.0 } else { 1.0 };
                    dzz += ghost * inv_dz2 * if nz == 1 { 2.0 } else { 1.0 };
                }
                out.push(alpha - beta * (self.radial.diag[i] + dzz));
            }
        }
        out
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IterativeSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients in the inner product
/// `<x, y> = sum w_k x_k y_k`, for operators symmetric positive definite in it.
pub fn pcg<A: Fn(&[f64]) -> Vec<f64>>(
    apply: A,
    diagonal: &[f64],
    weights: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<IterativeSolution> {
    let n = b.len();
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).zip(weights).map(|((a, b), w)| a * b * w).sum() };
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(IterativeSolution {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diagonal).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 1..=max_iter {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        res = dot(&r, &r).sqrt() / b_norm;
        if res <= tol {
            return Ok(IterativeSolution {
                x,
                iterations: it,
                relative_residual: res,
            });
        }
        for k in 0..n {
            z[k] = r[k] / diagonal[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}
