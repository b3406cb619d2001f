//! Time integration of the closed `(u, Gamma)` system.
//!
//! Only the swirl `u` and `Gamma` are evolved. After every stage `psi1` is
//! recovered from `Gamma`, the meridional velocity from `psi1`, and
//! `v_phi = u / r`, `Phi = -u_z / r^2` from the swirl.

use crate::cases::{builtin_scenario, Scenario, ScenarioOptions};
use crate::elliptic::{h2_report, h3_report, EllipticOperator, SolverMethod, StreamKind, H3_Z_TERMS};
use crate::error::{Error, Result};
use crate::fields::{
    divergence, phi_from_swirl, velocity_from_stream, Closure, Edge, Forcing, Parity, ScalarField, State,
};
use crate::grid::Grid;
use crate::linalg::{LidCondition, RadialOperator, SeparableSolver};
use crate::norms::{cumulative_integral, gradient_sq, l2_sq, lp_power_mean, lp_values, running_v_norm, Diagnostics, TimeSeries};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Forward Euler transport, backward Euler diffusion.
    #[default]
    Imex1,
    /// Half-step predictor, then midpoint transport with Crank-Nicolson diffusion.
    Imex2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Advection {
    /// Minmod-limited upwind reconstruction; never creates new extrema.
    #[default]
    Upwind,
    /// Plain centered differences.
    Centered,
}

/// Everything needed to march one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nu: f64,
    pub radius: f64,
    pub half_height: f64,
    pub nr: usize,
    pub nz: usize,
    pub dt: f64,
    pub horizon: f64,
    pub scenario: String,
    pub scenario_options: ScenarioOptions,
    pub cfl_safety: f64,
    pub record_every: usize,
    pub scheme: Scheme,
    pub advection: Advection,
    /// Keep full states on every recorded snapshot (the first and last are always kept).
    pub keep_states: bool,
    /// Exponents `s` for which `|v_phi|_s` and `|f_phi|_s` are recorded.
    pub lebesgue_exponents: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            radius: 1.0,
            half_height: 1.0,
            nr: 32,
            nz: 32,
            dt: 1e-3,
            horizon: 0.1,
            scenario: "rest".into(),
            scenario_options: ScenarioOptions::default(),
            cfl_safety: 0.5,
            record_every: 10,
            scheme: Scheme::Imex1,
            advection: Advection::Upwind,
            keep_states: false,
            lebesgue_exponents: vec![4.0, 6.0, 10.0],
        }
    }
}

impl SimConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.radius, self.half_height, self.nr, self.nz)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::config("nu", format!("must be positive, got {}", self.nu)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("T", format!("must be nonnegative, got {}", self.horizon)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::config("cfl_safety", format!("must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every", "must be at least 1"));
        }
        if let Some(s) = self.lebesgue_exponents.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::config("s_values", format!("exponents must be positive, got {s}")));
        }
        self.grid().map(|_| ())
    }
}

/// Outcome of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub t_new: f64,
    pub cfl: f64,
    pub elliptic_residual: f64,
    /// Largest extrapolated `|u|` on the wall.
    pub wall_u: f64,
    /// Largest extrapolated `|u_z|` on the lids.
    pub lid_u_z: f64,
    /// Largest extrapolated `|Gamma|` on the boundary.
    pub gamma_boundary: f64,
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Limited upwind difference across cell `k` of a line with `n` cells.
fn upwind_difference<G: Fn(isize) -> f64>(get: G, k: isize, n: isize, vel: f64) -> f64 {
    let slope = |m: isize| {
        if m < 0 || m >= n {
            0.0
        } else {
            minmod(get(m) - get(m - 1), get(m + 1) - get(m))
        }
    };
    if vel >= 0.0 {
        (get(k) + 0.5 * slope(k)) - (get(k - 1) + 0.5 * slope(k - 1))
    } else {
        (get(k + 1) - 0.5 * slope(k + 1)) - (get(k) - 0.5 * slope(k))
    }
}

/// `v_r f_r + v_z f_z`.
pub fn advect(f: &ScalarField, v_r: &ScalarField, v_z: &ScalarField, grid: &Grid, scheme: Advection) -> Vec<f64> {
    let (nr, nz) = (grid.nr as isize, grid.nz as isize);
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..nr {
        for j in 0..nz {
            let k = (i * nz + j) as usize;
            let (a, b) = (v_r.values[k], v_z.values[k]);
            let value = match scheme {
                Advection::Centered => {
                    a * (f.value_ext(i + 1, j) - f.value_ext(i - 1, j)) / (2.0 * grid.dr)
                        + b * (f.value_ext(i, j + 1) - f.value_ext(i, j - 1)) / (2.0 * grid.dz)
                }
                Advection::Upwind => {
                    let dr = if a == 0.0 { 0.0 } else { upwind_difference(|m| f.transport_ext(m, j), i, nr, a) };
                    let dz = if b == 0.0 { 0.0 } else { upwind_difference(|m| f.transport_ext(i, m), j, nz, b) };
                    a * dr / grid.dr + b * dz / grid.dz
                }
            };
            out.push(value);
        }
    }
    out
}

/// Solvers and settings shared by every step of a run.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub grid: Grid,
    pub nu: f64,
    pub scheme: Scheme,
    pub advection: Advection,
    pub cfl_safety: f64,
    swirl: SeparableSolver,
    gamma: SeparableSolver,
    elliptic: EllipticOperator,
}

impl Integrator {
    pub fn new(grid: &Grid, nu: f64, scheme: Scheme, advection: Advection, cfl_safety: f64) -> Self {
        Self {
            grid: grid.clone(),
            nu,
            scheme,
            advection,
            cfl_safety,
            swirl: SeparableSolver::new(grid, RadialOperator::swirl(grid), LidCondition::Neumann),
            gamma: SeparableSolver::new(grid, RadialOperator::cubic(grid), LidCondition::Dirichlet),
            elliptic: EllipticOperator::new(grid, StreamKind::Modified),
        }
    }

    pub fn from_config(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self::new(&config.grid()?, config.nu, config.scheme, config.advection, config.cfl_safety))
    }

    /// `Delta u - (2/r) u_r` as used by the implicit solve.
    pub fn swirl_diffusion(&self, u: &[f64]) -> Vec<f64> {
        self.swirl.apply(0.0, -1.0, u)
    }

    /// `Delta f + (2/r) f_r` with zero boundary values.
    pub fn cubic_diffusion(&self, f: &[f64]) -> Vec<f64> {
        self.gamma.apply(0.0, -1.0, f)
    }

    /// Completes a state from the evolved pair.
    pub fn derive(&self, t: f64, u: Vec<f64>, gamma: Vec<f64>) -> Result<(State, f64)> {
        let grid = &self.grid;
        let u = ScalarField::new(grid, u, Closure::SWIRL)?;
        let gamma = ScalarField::new(grid, gamma, Closure::GAMMA)?;
        let (psi1, residual) = self.elliptic.solve(&gamma, grid, SolverMethod::Direct)?;
        let mut v = velocity_from_stream(&psi1, grid)?;
        v.v_phi = u.times_r_pow(grid, -1, Closure::V_PHI);
        let phi = phi_from_swirl(&u, grid)?;
        Ok((
            State {
                t,
                u,
                gamma,
                psi1,
                v,
                phi,
            },
            residual,
        ))
    }

    pub fn cfl(&self, state: &State, dt: f64) -> f64 {
        dt * state.v.advective_rate(&self.grid)
    }

    /// Transport, reaction and source terms of both evolution equations.
    fn explicit(&self, s: &State, forcing: &Forcing, scheme: Advection) -> (Vec<f64>, Vec<f64>) {
        let grid = &self.grid;
        let adv_u = advect(&s.u, &s.v.v_r, &s.v.v_z, grid, scheme);
        let adv_g = advect(&s.gamma, &s.v.v_r, &s.v.v_z, grid, scheme);
        let f0 = forcing.f0(grid);
        let eu = adv_u.iter().zip(&f0.values).map(|(a, f)| -a + f).collect();
        let mut eg = Vec::with_capacity(grid.len());
        for i in 0..grid.nr {
            let r2 = grid.r_centers[i] * grid.r_centers[i];
            for j in 0..grid.nz {
                let k = grid.idx(i, j);
                eg.push(-adv_g[k] - 2.0 * s.u.values[k] / r2 * s.phi.values[k] + forcing.fbar_phi.values[k]);
            }
        }
        (eu, eg)
    }

    fn check_cfl(&self, state: &State, dt: f64) -> Result<f64> {
        let cfl = self.cfl(state, dt);
        if !(cfl <= self.cfl_safety) {
            return Err(Error::StepSize {
                t: state.t,
                cfl,
                limit: self.cfl_safety,
            });
        }
        Ok(cfl)
    }

    fn euler(&self, s: &State, forcing: &Forcing, dt: f64) -> Result<(State, f64)> {
        let (eu, eg) = self.explicit(s, forcing, self.advection);
        let us: Vec<f64> = s.u.values.iter().zip(&eu).map(|(u, e)| u + dt * e).collect();
        let gs: Vec<f64> = s.gamma.values.iter().zip(&eg).map(|(g, e)| g + dt * e).collect();
        let u1 = self.swirl.solve(1.0, dt * self.nu, &us)?;
        let g1 = self.gamma.solve(1.0, dt * self.nu, &gs)?;
        self.derive(s.t + dt, u1, g1)
    }

    /// Advances by `dt`. `forcing` is evaluated at whatever times the scheme needs.
    pub fn step<F: Fn(f64) -> Result<Forcing>>(&self, state: &State, forcing: F, dt: f64) -> Result<(State, StepReport)> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let cfl = self.check_cfl(state, dt)?;
        let f_n = forcing(state.t)?;
        let (next, residual) = match self.scheme {
            Scheme::Imex1 => self.euler(state, &f_n, dt)?,
            Scheme::Imex2 => {
                let (half, _) = self.euler(state, &f_n, 0.5 * dt)?;
                self.check_cfl(&half, dt)?;
                let f_half = forcing(state.t + 0.5 * dt)?;
                let (eu, eg) = self.explicit(&half, &f_half, self.advection);
                let b = 0.5 * dt * self.nu;
                let mut ru = self.swirl.apply(1.0, -b, &state.u.values);
                let mut rg = self.gamma.apply(1.0, -b, &state.gamma.values);
                for k in 0..ru.len() {
                    ru[k] += dt * eu[k];
                    rg[k] += dt * eg[k];
                }
                let u1 = self.swirl.solve(1.0, b, &ru)?;
                let g1 = self.gamma.solve(1.0, b, &rg)?;
                self.derive(state.t + dt, u1, g1)?
            }
        };
        let report = self.report(&next, cfl, residual);
        Ok((next, report))
    }

    fn report(&self, s: &State, cfl: f64, residual: f64) -> StepReport {
        let max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let free_u = s.u.clone().with_closure(Closure::free(Parity::Odd2));
        let uz = s.u.d_z(&self.grid);
        let (ub, ut) = uz.lid_traces();
        let free_g = s.gamma.clone().with_closure(Closure::free(Parity::Even));
        let (gb, gt) = free_g.lid_traces();
        StepReport {
            t_new: s.t,
            cfl,
            elliptic_residual: residual,
            wall_u: max(&free_u.wall_trace()),
            lid_u_z: max(&ub).max(max(&ut)),
            gamma_boundary: max(&free_g.wall_trace()).max(max(&gb)).max(max(&gt)),
        }
    }
}

fn state_config(nu: f64) -> (f64, Scheme, Advection) {
    (nu, Scheme::Imex1, Advection::Centered)
}

/// One step of the first-order scheme with a frozen force.
pub fn step(state: &State, forcing: &Forcing, grid: &Grid, nu: f64, dt: f64, cfl_safety: f64) -> Result<(State, StepReport)> {
    let (nu, scheme, adv) = state_config(nu);
    let integrator = Integrator::new(grid, nu, scheme, adv, cfl_safety);
    integrator.step(state, |_| Ok(forcing.clone()), dt)
}

/// `-v.grad u + nu (Delta u - (2/r) u_r) + f0`, centered transport.
pub fn rhs_swirl(state: &State, forcing: &Forcing, grid: &Grid, nu: f64) -> ScalarField {
    let integ = Integrator::new(grid, nu, Scheme::Imex1, Advection::Centered, 1.0);
    let (eu, _) = integ.explicit(state, forcing, Advection::Centered);
    let diff = integ.swirl_diffusion(&state.u.values);
    let values = eu.iter().zip(diff).map(|(e, d)| e + nu * d).collect();
    ScalarField::from_raw(grid, values, Closure::free(Parity::Odd2))
}

/// `-v.grad Gamma + nu (Delta + (2/r) d_r) Gamma - 2 (v_phi / r) Phi + Fbar_phi`, centered transport.
pub fn rhs_gamma(state: &State, forcing: &Forcing, grid: &Grid, nu: f64) -> ScalarField {
    let integ = Integrator::new(grid, nu, Scheme::Imex1, Advection::Centered, 1.0);
    let adv = advect(&state.gamma, &state.v.v_r, &state.v.v_z, grid, Advection::Centered);
    let diff = integ.cubic_diffusion(&state.gamma.values);
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.nr {
        let r = grid.r_centers[i];
        for j in 0..grid.nz {
            let k = grid.idx(i, j);
            values.push(-adv[k] + nu * diff[k] - 2.0 * state.v.v_phi.values[k] / r * state.phi.values[k] + forcing.fbar_phi.values[k]);
        }
    }
    ScalarField::from_raw(grid, values, Closure::free(Parity::Even))
}

/// Time derivative of `Phi` implied by its own transport equation:
/// `-v.grad Phi + nu (Delta + (2/r) d_r) Phi + (omega_r d_r + omega_z d_z)(v_r / r) + Fbar_r`.
pub fn rhs_phi_diagnostic(state: &State, forcing: &Forcing, grid: &Grid, nu: f64) -> ScalarField {
    let integ = Integrator::new(grid, nu, Scheme::Imex1, Advection::Centered, 1.0);
    let adv = advect(&state.phi, &state.v.v_r, &state.v.v_z, grid, Advection::Centered);
    let diff = integ.cubic_diffusion(&state.phi.values);
    // v_r / r = -psi1_z
    let w = state.psi1.d_z(grid).scaled(-1.0);
    let (w_r, w_z) = (w.d_r(grid), w.d_z(grid));
    let omega_r = state.phi.times_r_pow(grid, 1, Closure::OMEGA_R);
    let omega_z = state.u.d_r(grid).times_r_pow(grid, -1, Closure::OMEGA_Z);
    let fbar_r = forcing.fbar_r(grid);
    let values = (0..grid.len())
        .map(|k| {
            -adv[k] + nu * diff[k] + omega_r.values[k] * w_r.values[k] + omega_z.values[k] * w_z.values[k] + fbar_r.values[k]
        })
        .collect();
    ScalarField::from_raw(grid, values, Closure::free(Parity::Even))
}

fn grad_int(f: &ScalarField, grid: &Grid) -> f64 {
    grid.integrate_unchecked(&gradient_sq(f, grid))
}

/// Instantaneous diagnostics of a state and the force acting on it.
/// Running quantities (`grad_v_l2_cum`, `x`, `f0_inf_cum`) and the step
/// bookkeeping (`cfl`, `elliptic_residual`) are filled in by the caller.
pub fn diagnose(state: &State, forcing: &Forcing, grid: &Grid, exponents: &[f64]) -> Result<Diagnostics> {
    let v = &state.v;
    let mut d = Diagnostics::default();
    let r_pow = |values: &[f64], k: i32| -> Vec<f64> {
        values.iter().enumerate().map(|(n, x)| x * grid.r_centers[n / grid.nz].powi(k)).collect()
    };
    d.v_sq = l2_sq(&v.v_r.values, grid) + l2_sq(&v.v_phi.values, grid) + l2_sq(&v.v_z.values, grid);
    d.v_l2 = d.v_sq.sqrt();
    d.grad_v_sq = grad_int(&v.v_r, grid) + grad_int(&v.v_phi, grid) + grad_int(&v.v_z, grid);
    d.metric_sq = l2_sq(&r_pow(&v.v_r.values, -1), grid) + l2_sq(&r_pow(&v.v_phi.values, -1), grid);
    d.u_inf = state.u.max_abs();
    d.vphi_inf = v.v_phi.max_abs();
    d.gamma_l2 = l2_sq(&state.gamma.values, grid).sqrt();
    d.phi_l2 = l2_sq(&state.phi.values, grid).sqrt();
    d.grad_phi_sq = grad_int(&state.phi, grid);
    d.grad_gamma_sq = grad_int(&state.gamma, grid);
    d.gamma_z_sq = l2_sq(&state.gamma.d_z(grid).values, grid);

    let u_z = state.u.d_z(grid).with_closure(Closure::new(Parity::Odd2, Edge::Dirichlet, Edge::Dirichlet));
    let u_r = state.u.d_r(grid).with_closure(Closure::new(Parity::Odd, Edge::Extrapolate, Edge::Neumann));
    d.u_z_sq = l2_sq(&u_z.values, grid);
    d.grad_u_z_sq = grad_int(&u_z, grid);
    d.u_r_sq = l2_sq(&u_r.values, grid);
    d.u_rr_sq = l2_sq(&state.u.d_rr(grid).values, grid);
    d.u_rz_sq = l2_sq(&u_r.d_z(grid).values, grid);

    let omega_r = u_z.times_r_pow(grid, -1, Closure::OMEGA_R).scaled(-1.0);
    let omega_z = u_r.times_r_pow(grid, -1, Closure::OMEGA_Z);
    d.omega_r_sq = l2_sq(&omega_r.values, grid);
    d.grad_omega_r_sq = grad_int(&omega_r, grid);
    d.omega_z_sq = l2_sq(&omega_z.values, grid);
    d.grad_omega_z_sq = grad_int(&omega_z, grid);

    let density: Vec<f64> = (0..grid.len())
        .map(|k| {
            let r = grid.r_centers[k / grid.nz];
            v.v_phi.values[k] / r * state.phi.values[k] * state.gamma.values[k]
        })
        .collect();
    d.interaction = grid.integrate_unchecked(&density);

    let psi = state.psi1.times_r_pow(grid, 1, Closure::new(Parity::Odd, Edge::Dirichlet, Edge::Dirichlet));
    d.psi_h1_sq = l2_sq(&psi.values, grid) + grad_int(&psi, grid);
    d.psi1_sq = l2_sq(&state.psi1.values, grid);
    let psi_z = psi.d_z(grid).with_closure(Closure::new(Parity::Odd, Edge::Dirichlet, Edge::Extrapolate));
    d.psi_z_h1_sq = l2_sq(&psi_z.values, grid) + grad_int(&psi_z, grid);
    d.psi1_z_sq = l2_sq(&state.psi1.d_z(grid).values, grid);

    let h2 = h2_report(&state.psi1, &state.gamma, grid)?;
    let h3 = h3_report(&state.psi1, &state.gamma, grid)?;
    d.h2_lhs = h2.lhs;
    d.h3a_lhs = h3.partial(&H3_Z_TERMS);
    d.h3b_lhs = h3.lhs;
    d.h3_weighted_sq = h3.term("psi_rz_over_r").unwrap_or(0.0);
    d.divergence_l2 = l2_sq(&divergence(v, grid).values, grid).sqrt();

    let f0 = forcing.f0(grid);
    let f1 = forcing.f1(grid);
    let (c_r, _, c_z) = forcing.curl(grid);
    let fbar_r = forcing.fbar_r(grid);
    d.f_l2 = (l2_sq(&forcing.f_r.values, grid) + l2_sq(&forcing.f_phi.values, grid) + l2_sq(&forcing.f_z.values, grid)).sqrt();
    d.f0_inf = f0.max_abs();
    d.f0_l2 = l2_sq(&f0.values, grid).sqrt();
    d.fphi_over_r_inf = f1.max_abs();
    d.fbar_r_65 = lp_values(&fbar_r.values, 1.2, grid)?;
    d.fbar_phi_65 = lp_values(&forcing.fbar_phi.values, 1.2, grid)?;
    d.f_r_curl_65 = lp_values(&c_r.values, 1.2, grid)?;
    d.f_z_curl_65 = lp_values(&c_z.values, 1.2, grid)?;
    let wall: Vec<f64> = forcing.f_phi.wall_trace().iter().map(|x| x.abs().powi(3)).collect();
    d.fphi_l3_wall = grid.integrate_wall(&wall)?.cbrt();
    d.fphi_inf = forcing.f_phi.max_abs();
    let rf4: Vec<f64> = r_pow(&forcing.f_phi.values, 1).iter().map(|x| x.powi(4)).collect();
    d.r_fphi_l4_4 = grid.integrate_unchecked(&rf4);
    let vphi2_over_r: Vec<f64> = r_pow(&v.v_phi.values.iter().map(|x| x * x).collect::<Vec<_>>(), -1);
    d.vphi2_over_r_sq = l2_sq(&vphi2_over_r, grid);
    d.lebesgue = exponents
        .iter()
        .map(|&s| (s, lp_power_mean(&v.v_phi.values, s, grid), lp_power_mean(&forcing.f_phi.values, s, grid)))
        .collect();
    Ok(d)
}

/// Fills the running columns of a recorded series from its instantaneous ones.
pub fn fill_running_columns(series: &mut TimeSeries) {
    let times = series.times.clone();
    let grad_v = series.column(|d| d.grad_v_sq);
    let cum = cumulative_integral(&times, &grad_v);
    let x_phi = running_v_norm(&times, &series.column(|d| d.phi_l2), &series.column(|d| d.grad_phi_sq));
    let x_gamma = running_v_norm(&times, &series.column(|d| d.gamma_l2), &series.column(|d| d.grad_gamma_sq));
    for (k, snap) in series.snapshots.iter_mut().enumerate() {
        snap.diagnostics.grad_v_l2_cum = cum[k].max(0.0).sqrt();
        snap.diagnostics.x = (x_phi[k] * x_phi[k] + x_gamma[k] * x_gamma[k]).sqrt();
    }
}

/// A run that stopped early.
#[derive(Debug)]
pub struct RunFailure {
    pub step: usize,
    pub t: f64,
    pub error: Error,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub series: TimeSeries,
    pub failure: Option<RunFailure>,
}

/// Number of steps and the length of the last one.
fn step_plan(horizon: f64, dt: f64) -> (usize, f64) {
    if horizon == 0.0 {
        return (0, dt);
    }
    let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let last = horizon - (n - 1) as f64 * dt;
    (n, last)
}

/// Marches `scenario` under `config`, recording what it can even if a step fails.
pub fn run_scenario(config: &SimConfig, scenario: &Scenario) -> Result<RunOutcome> {
    let integ = Integrator::from_config(config)?;
    let grid = integ.grid.clone();
    let (u0, g0) = scenario.initial(&grid);
    let (mut state, mut residual) = integ.derive(0.0, u0, g0)?;
    let forcing_at = |t: f64| -> Result<Forcing> { Ok(scenario.forcing(&grid, t)) };
    let mut series = TimeSeries::new();
    let mut f0_cum = 0.0;
    let exps = &config.lebesgue_exponents;

    let record = |series: &mut TimeSeries, state: &State, forcing: &Forcing, cfl: f64, residual: f64, f0_cum: f64, keep: bool| -> Result<()> {
        let mut d = diagnose(state, forcing, &grid, exps)?;
        d.cfl = cfl;
        d.elliptic_residual = residual;
        d.f0_inf_cum = f0_cum;
        series.push(state.t, keep.then(|| state.clone()), d)
    };

    let f_init = forcing_at(0.0)?;
    record(&mut series, &state, &f_init, integ.cfl(&state, config.dt), residual, 0.0, true)?;
    let (n, last) = step_plan(config.horizon, config.dt);
    let mut failure = None;
    for k in 1..=n {
        let dt = if k == n { last } else { config.dt };
        let t_n = state.t;
        let f_n = forcing_at(t_n)?;
        let mut f0_rate = f_n.f0(&grid).max_abs();
        if config.scheme == Scheme::Imex2 {
            f0_rate = f0_rate.max(forcing_at(t_n + 0.5 * dt)?.f0(&grid).max_abs());
        }
        match integ.step(&state, forcing_at, dt) {
            Ok((next, report)) => {
                state = next;
                residual = report.elliptic_residual;
                f0_cum += dt * f0_rate;
                if k == n {
                    // the recorded time is the nominal horizon
                    state.t = config.horizon;
                }
                if k % config.record_every == 0 || k == n {
                    let f = forcing_at(state.t)?;
                    let keep = config.keep_states || k == n;
                    record(&mut series, &state, &f, report.cfl, residual, f0_cum, keep)?;
                }
            }
            Err(error) => {
                failure = Some(RunFailure { step: k, t: t_n, error });
                break;
            }
        }
    }
    if failure.is_some() && series.snapshots.last().is_some_and(|s| s.state.is_none()) {
        // keep the last good state for inspection
        if state.t > *series.times.last().unwrap_or(&0.0) {
            let f = forcing_at(state.t)?;
            record(&mut series, &state, &f, 0.0, residual, f0_cum, true)?;
        }
    }
    fill_running_columns(&mut series);
    Ok(RunOutcome { series, failure })
}

/// Builds the configured scenario and marches it, stopping at the first failure.
pub fn run_partial(config: &SimConfig) -> Result<RunOutcome> {
    config.validate()?;
    let grid = config.grid()?;
    let scenario = builtin_scenario(&config.scenario, &config.scenario_options, &grid, config.nu)?;
    run_scenario(config, &scenario)
}

/// Marches the configured scenario to its horizon.
pub fn run(config: &SimConfig) -> Result<TimeSeries> {
    let outcome = run_partial(config)?;
    match outcome.failure {
        Some(f) => Err(f.error),
        None => Ok(outcome.series),
    }
}

/// Relative `L_2` gap at the horizon between `Phi` carried by its own
/// transport equation and `Phi = -u_z / r^2` from the marched swirl.
pub fn phi_consistency(config: &SimConfig) -> Result<f64> {
    let integ = Integrator::from_config(config)?;
    let grid = integ.grid.clone();
    let scenario = builtin_scenario(&config.scenario, &config.scenario_options, &grid, config.nu)?;
    let (u0, g0) = scenario.initial(&grid);
    let (mut state, _) = integ.derive(0.0, u0, g0)?;
    let forcing_at = |t: f64| -> Result<Forcing> { Ok(scenario.forcing(&grid, t)) };
    let mut carried = state.phi.values.clone();
    let mut rate = rhs_phi_diagnostic(&state, &forcing_at(0.0)?, &grid, config.nu).values;
    let (n, last) = step_plan(config.horizon, config.dt);
    for k in 1..=n {
        let dt = if k == n { last } else { config.dt };
        let (next, _) = integ.step(&state, forcing_at, dt)?;
        state = next;
        let next_rate = rhs_phi_diagnostic(&state, &forcing_at(state.t)?, &grid, config.nu).values;
        for i in 0..carried.len() {
            carried[i] += 0.5 * dt * (rate[i] + next_rate[i]);
        }
        rate = next_rate;
    }
    let diff: Vec<f64> = carried.iter().zip(&state.phi.values).map(|(a, b)| a - b).collect();
    let denom = l2_sq(&state.phi.values, &grid).sqrt();
    if denom == 0.0 {
        return Err(Error::Domain("Phi vanishes at the horizon; relative gap undefined".into()));
    }
    Ok(l2_sq(&diff, &grid).sqrt() / denom)
}
