//! Stream-function problems with zero boundary values and the elliptic
//! estimate reports built from their solutions.

use crate::error::{Error, Result};
use crate::fields::{Closure, Parity, ScalarField};
use crate::grid::Grid;
use crate::linalg::{pcg, LidCondition, RadialOperator, SeparableSolver};
use crate::norms::l2_sq;

/// Relative residual accepted from either solver.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// `-Delta psi + psi / r^2 = omega_phi`
    Stream,
    /// `-Delta psi1 - (2/r) psi1_r = Gamma`
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Axial eigen-decomposition plus radial tridiagonal solves.
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradients in the operator's natural weight.
    Pcg,
}

/// `(1/r)(r f_r)_r - f / r^2` in flux form with zero value at the wall.
fn stream_radial(grid: &Grid) -> RadialOperator {
    let n = grid.nr;
    let dr = grid.dr;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let r = grid.r_centers[i];
        let a = grid.face_r(i) / (r * dr * dr);
        let c = grid.face_r(i + 1) / (r * dr * dr);
        lower[i] = a;
        upper[i] = c;
        diag[i] = -(a + c) - 1.0 / (r * r);
        weights[i] = r;
    }
    diag[n - 1] -= upper[n - 1];
    upper[n - 1] = 0.0;
    RadialOperator {
        lower,
        diag,
        upper,
        weights: Some(weights),
    }
}

/// Discrete `-L` for one of the two stream problems, ready to solve repeatedly.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    pub kind: StreamKind,
    solver: SeparableSolver,
    weights: Vec<f64>,
    max_iter: usize,
}

impl EllipticOperator {
    pub fn new(grid: &Grid, kind: StreamKind) -> Self {
        let radial = match kind {
            StreamKind::Modified => RadialOperator::cubic(grid),
            StreamKind::Stream => stream_radial(grid),
        };
        let w_r = radial.weights.clone().unwrap_or_else(|| vec![1.0; grid.nr]);
        let weights = (0..grid.len()).map(|k| w_r[k / grid.nz]).collect();
        Self {
            kind,
            solver: SeparableSolver::new(grid, radial, LidCondition::Dirichlet),
            weights,
            max_iter: 50 * (grid.nr + grid.nz),
        }
    }

    /// Weights `w_k` in which the matrix is symmetric: `r^3`-type for the
    /// modified problem, `r` for the plain one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `-L x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.solver.apply(0.0, 1.0, x)
    }

    /// `|(-L x) - b| / |b|` in the natural weight (0 when `b = 0` and `x = 0`).
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.apply(x);
        let dot = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).zip(&self.weights).map(|((a, b), w)| a * b * w).sum() };
        let r: Vec<f64> = ax.iter().zip(b).map(|(a, b)| a - b).collect();
        let bn = dot(b, b).sqrt();
        let rn = dot(&r, &r).sqrt();
        if bn == 0.0 {
            rn
        } else {
            rn / bn
        }
    }

    /// Solves `-L x = b` and checks the residual.
    pub fn solve_values(&self, b: &[f64], method: SolverMethod) -> Result<(Vec<f64>, f64)> {
        let x = match method {
            SolverMethod::Direct => self.solver.solve(0.0, 1.0, b)?,
            SolverMethod::Pcg => {
                let diag = self.solver.diagonal(0.0, 1.0);
                pcg(|x| self.apply(x), &diag, &self.weights, b, SOLVER_TOLERANCE, self.max_iter)?.x
            }
        };
        let res = self.relative_residual(&x, b);
        if !(res <= SOLVER_TOLERANCE) {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: res,
            });
        }
        Ok((x, res))
    }

    pub fn solve(&self, rhs: &ScalarField, grid: &Grid, method: SolverMethod) -> Result<(ScalarField, f64)> {
        let (expected, closure) = match self.kind {
            StreamKind::Modified => (Parity::Even, Closure::PSI1),
            StreamKind::Stream => (Parity::Odd, Closure::OMEGA_PHI),
        };
        if rhs.parity() != expected {
            return Err(Error::Contract(format!(
                "right-hand side must have {expected:?} parity, got {:?}",
                rhs.parity()
            )));
        }
        let (x, res) = self.solve_values(&rhs.values, method)?;
        Ok((ScalarField::new(grid, x, closure)?, res))
    }
}

/// `psi1` with `-Delta psi1 - (2/r) psi1_r = Gamma`, `psi1 = 0` on the boundary.
pub fn solve_modified_stream(gamma: &ScalarField, grid: &Grid) -> Result<ScalarField> {
    EllipticOperator::new(grid, StreamKind::Modified)
        .solve(gamma, grid, SolverMethod::Direct)
        .map(|(x, _)| x)
}

/// `psi` with `-Delta psi + psi / r^2 = omega_phi`, `psi = 0` on the boundary.
pub fn solve_stream(omega_phi: &ScalarField, grid: &Grid) -> Result<ScalarField> {
    EllipticOperator::new(grid, StreamKind::Stream)
        .solve(omega_phi, grid, SolverMethod::Direct)
        .map(|(x, _)| x)
}

/// Named left-hand terms of an elliptic estimate and its constant-free right side.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub terms: Vec<(&'static str, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `None` when the right side vanishes.
    pub ratio: Option<f64>,
}

impl EstimateReport {
    fn new(terms: Vec<(&'static str, f64)>, rhs: f64) -> Self {
        let lhs = terms.iter().map(|t| t.1).sum();
        Self {
            terms,
            lhs,
            rhs,
            ratio: if rhs > 0.0 { Some(lhs / rhs) } else { None },
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.0 == name).map(|t| t.1)
    }

    /// Sum of a subset of terms.
    pub fn partial(&self, names: &[&str]) -> f64 {
        names.iter().filter_map(|n| self.term(n)).sum()
    }
}

fn check_pair(psi1: &ScalarField, gamma: &ScalarField, grid: &Grid) -> Result<()> {
    let op = EllipticOperator::new(grid, StreamKind::Modified);
    let res = op.relative_residual(&psi1.values, &gamma.values);
    if !(res <= 1e-8) {
        return Err(Error::Contract(format!(
            "psi1 does not solve the modified stream problem for Gamma (relative residual {res:.3e})"
        )));
    }
    Ok(())
}

fn trace_sq(trace: &[f64], grid: &Grid) -> f64 {
    trace.iter().map(|v| v * v).sum::<f64>() * grid.dz
}

/// Second-derivative terms of `psi1`, axis and wall traces, against `|Gamma|_2^2`.
/// Traces are plain `dz` integrals along the axis and the wall.
pub fn h2_report(psi1: &ScalarField, gamma: &ScalarField, grid: &Grid) -> Result<EstimateReport> {
    check_pair(psi1, gamma, grid)?;
    let pr = psi1.d_r(grid);
    let pz = psi1.d_z(grid);
    let prr = psi1.d_rr(grid);
    let prz = pr.d_z(grid);
    let pzz = psi1.d_zz(grid);
    let pr_over_r = pr.times_r_pow(grid, -1, Closure::free(Parity::Even));
    let terms = vec![
        ("psi_rr", l2_sq(&prr.values, grid)),
        ("psi_rz", l2_sq(&prz.values, grid)),
        ("psi_zz", l2_sq(&pzz.values, grid)),
        ("psi_r_over_r", l2_sq(&pr_over_r.values, grid)),
        ("axis_psi_z", trace_sq(&pz.axis_trace(), grid)),
        ("wall_psi_r", trace_sq(&pr.wall_trace(), grid)),
    ];
    Ok(EstimateReport::new(terms, l2_sq(&gamma.values, grid)))
}

/// Names of the terms making up the smaller third-order estimate.
pub const H3_Z_TERMS: [&str; 3] = ["psi_zzr", "psi_zzz", "axis_psi_zz"];
/// Names of the terms making up the full third-order estimate.
pub const H3_FULL_TERMS: [&str; 5] = ["psi_rrz", "psi_zzr", "psi_zzz", "axis_psi_zz", "wall_psi_rz"];

/// Third-derivative terms of `psi1` against `|Gamma_z|_2^2`. The primary
/// `lhs` is the full set; `psi_rz_over_r` is reported as a separate term.
pub fn h3_report(psi1: &ScalarField, gamma: &ScalarField, grid: &Grid) -> Result<EstimateReport> {
    check_pair(psi1, gamma, grid)?;
    let pr = psi1.d_r(grid);
    let prz = pr.d_z(grid);
    let pzz = psi1.d_zz(grid);
    let prrz = psi1.d_rr(grid).d_z(grid);
    let pzzr = pzz.d_r(grid);
    let pzzz = pzz.d_z(grid);
    let prz_over_r = prz.times_r_pow(grid, -1, Closure::free(Parity::Even));
    let full = vec![
        ("psi_rrz", l2_sq(&prrz.values, grid)),
        ("psi_zzr", l2_sq(&pzzr.values, grid)),
        ("psi_zzz", l2_sq(&pzzz.values, grid)),
        ("axis_psi_zz", trace_sq(&pzz.axis_trace(), grid)),
        ("wall_psi_rz", trace_sq(&prz.wall_trace(), grid)),
    ];
    let rhs = l2_sq(&gamma.d_z(grid).values, grid);
    let mut report = EstimateReport::new(full, rhs);
    report.terms.push(("psi_rz_over_r", l2_sq(&prz_over_r.values, grid)));
    Ok(report)
}
