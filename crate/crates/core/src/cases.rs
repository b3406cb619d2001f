//! Built-in initial data, forcing and exact solutions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::certificates::d8_sq;
use crate::dynamics::{run_scenario, SimConfig};
use crate::error::{Error, Result};
use crate::fields::{Closure, Forcing, Parity, ScalarField, State};
use crate::grid::Grid;
use crate::norms::{gauss, l2_sq};

/// `f(r, z)`.
pub type Profile = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `f(r, z, t)`.
pub type Source = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

pub const SCENARIOS: [&str; 5] = ["rest", "swirl_decay", "vortex_ring", "manufactured_full", "small_data"];

/// Knobs shared by the built-in scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOptions {
    /// Overrides the scenario's own amplitude.
    pub amplitude: Option<f64>,
    /// Strength of a steady smooth body force added to `swirl_decay` and `vortex_ring`.
    pub forcing: f64,
    /// `small_data` targets `G2 = margin / (kappa + 1)^(3/2)`.
    pub small_data_margin: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            amplitude: None,
            forcing: 0.0,
            small_data_margin: 0.9,
        }
    }
}

/// Exact `u`, `Gamma` and `psi1`.
#[derive(Clone)]
pub struct Exact {
    pub u: Source,
    pub gamma: Source,
    pub psi1: Source,
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub amplitude: f64,
    pub u0: Profile,
    pub gamma0: Profile,
    pub f_r: Option<Source>,
    pub f_phi: Option<Source>,
    pub f_z: Option<Source>,
    /// Known `(curl f)_phi / r`; when absent it is differenced from the samples.
    pub fbar_phi: Option<Source>,
    pub exact: Option<Exact>,
    /// Step size the amplitude was chosen for at the default 32 x 32 grid.
    pub nominal_dt: f64,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("amplitude", &self.amplitude)
            .field("forced", &self.is_forced())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

/// Boundary and axis behaviour of the initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct Compatibility {
    /// `max |u0|` on `r = R`.
    pub wall_u: f64,
    /// `max |u0_z|` on `z = +-a`.
    pub lid_u_z: f64,
    /// `max |Gamma0|` on the lateral boundary.
    pub boundary_gamma: f64,
    /// `max |u0(h, z)| / h^2` at a small `h`, finite for data vanishing like `r^2`.
    pub axis_u_over_r2: f64,
    pub compatible: bool,
}

const COMPAT_TOL: f64 = 1e-10;

impl Scenario {
    pub fn is_forced(&self) -> bool {
        self.f_r.is_some() || self.f_phi.is_some() || self.f_z.is_some() || self.fbar_phi.is_some()
    }

    /// Initial `(u, Gamma)` samples.
    pub fn initial(&self, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
        (grid.sample(|r, z| (self.u0)(r, z)), grid.sample(|r, z| (self.gamma0)(r, z)))
    }

    pub fn forcing(&self, grid: &Grid, t: f64) -> Forcing {
        if !self.is_forced() {
            return Forcing::zero(grid, t);
        }
        let sample = |s: &Option<Source>, parity: Parity| match s {
            Some(f) => ScalarField::from_fn(grid, Closure::free(parity), |r, z| f(r, z, t)),
            None => ScalarField::zeros(grid, Closure::free(parity)),
        };
        let f_r = sample(&self.f_r, Parity::Odd);
        let f_phi = sample(&self.f_phi, Parity::Odd);
        let f_z = sample(&self.f_z, Parity::Even);
        match &self.fbar_phi {
            Some(_) => Forcing::with_fbar_phi(t, f_r, f_phi, f_z, sample(&self.fbar_phi, Parity::Even)),
            None => Forcing::from_components(grid, t, f_r, f_phi, f_z),
        }
    }

    /// Samples the boundary conditions of the initial data.
    pub fn compatibility(&self, grid: &Grid) -> Compatibility {
        let (rr, a) = (grid.radius, grid.half_height);
        let n = 64;
        let zs: Vec<f64> = (0..=n).map(|k| -a + 2.0 * a * k as f64 / n as f64).collect();
        let rs: Vec<f64> = (0..=n).map(|k| rr * k as f64 / n as f64).collect();
        let eps = 1e-6 * a;
        let u_z = |r: f64, z: f64| ((self.u0)(r, z + eps) - (self.u0)(r, z - eps)) / (2.0 * eps);
        let wall_u = zs.iter().map(|&z| (self.u0)(rr, z).abs()).fold(0.0, f64::max);
        let lid_u_z = rs.iter().map(|&r| u_z(r, a).abs().max(u_z(r, -a).abs())).fold(0.0, f64::max);
        let boundary_gamma = zs
            .iter()
            .map(|&z| (self.gamma0)(rr, z).abs())
            .chain(rs.iter().map(|&r| (self.gamma0)(r, a).abs().max((self.gamma0)(r, -a).abs())))
            .fold(0.0, f64::max);
        let h = 1e-4 * rr;
        let axis_u_over_r2 = zs.iter().map(|&z| (self.u0)(h, z).abs() / (h * h)).fold(0.0, f64::max);
        let scale = 1.0 + self.amplitude.abs();
        let compatible = wall_u <= COMPAT_TOL * scale
            && lid_u_z <= 1e-6 * scale
            && boundary_gamma <= COMPAT_TOL * scale
            && axis_u_over_r2.is_finite()
            && axis_u_over_r2 <= 1e6 * scale;
        Compatibility {
            wall_u,
            lid_u_z,
            boundary_gamma,
            axis_u_over_r2,
            compatible,
        }
    }

    /// Weighted `L_2` norms of the residuals of the swirl and `Gamma` equations
    /// on the exact solution at time `t`. Derivatives are centered differences
    /// of the exact formulas with step `h = dr`, so a correct force gives `O(h^2)`.
    pub fn mms_residual(&self, grid: &Grid, nu: f64, t: f64) -> Result<(f64, f64)> {
        let exact = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::Contract(format!("scenario {} has no exact solution", self.name)))?;
        let h = grid.dr.min(grid.dz);
        let d = |f: &Source, r: f64, z: f64, t: f64| {
            let fr = (f(r + h, z, t) - f(r - h, z, t)) / (2.0 * h);
            let fz = (f(r, z + h, t) - f(r, z - h, t)) / (2.0 * h);
            let frr = (f(r + h, z, t) - 2.0 * f(r, z, t) + f(r - h, z, t)) / (h * h);
            let fzz = (f(r, z + h, t) - 2.0 * f(r, z, t) + f(r, z - h, t)) / (h * h);
            let ft = (f(r, z, t + h) - f(r, z, t - h)) / (2.0 * h);
            (fr, fz, frr, fzz, ft)
        };
        let forcing = |s: &Option<Source>, r: f64, z: f64| s.as_ref().map_or(0.0, |f| f(r, z, t));
        let mut res_u = Vec::with_capacity(grid.len());
        let mut res_g = Vec::with_capacity(grid.len());
        for &r in &grid.r_centers {
            for &z in &grid.z_centers {
                let (p_r, p_z, ..) = d(&exact.psi1, r, z, t);
                let (v_r, v_z) = (-r * p_z, r * p_r + 2.0 * (exact.psi1)(r, z, t));
                let (u_r, u_z, u_rr, u_zz, u_t) = d(&exact.u, r, z, t);
                let f0 = r * forcing(&self.f_phi, r, z);
                res_u.push(u_t + v_r * u_r + v_z * u_z - nu * (u_rr - u_r / r + u_zz) - f0);
                let (g_r, g_z, g_rr, g_zz, g_t) = d(&exact.gamma, r, z, t);
                let u = (exact.u)(r, z, t);
                let phi = -u_z / (r * r);
                let fbar = forcing(&self.fbar_phi, r, z);
                res_g.push(
                    g_t + v_r * g_r + v_z * g_z - nu * (g_rr + 3.0 * g_r / r + g_zz) + 2.0 * u / (r * r) * phi - fbar,
                );
            }
        }
        Ok((l2_sq(&res_u, grid).sqrt(), l2_sq(&res_g, grid).sqrt()))
    }
}

fn profile<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Profile {
    Arc::new(f)
}

fn source<F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Source {
    Arc::new(f)
}

fn zero_profile() -> Profile {
    profile(|_, _| 0.0)
}

fn base(name: &str, amplitude: f64) -> Scenario {
    Scenario {
        name: name.into(),
        amplitude,
        u0: zero_profile(),
        gamma0: zero_profile(),
        f_r: None,
        f_phi: None,
        f_z: None,
        fbar_phi: None,
        exact: None,
        nominal_dt: 1e-3,
    }
}

/// Adds the steady force `f_phi = s r (R^2 - r^2)(1 + cos(pi z / a)) / R^3`,
/// `f_r = s r (R^2 - r^2) sin(pi z / a) / R^3`, `f_z = 0`.
fn add_steady_forcing(sc: &mut Scenario, strength: f64, radius: f64, half_height: f64) {
    if strength == 0.0 {
        return;
    }
    let (rr, a) = (radius, half_height);
    let c = strength / rr.powi(3);
    sc.f_phi = Some(source(move |r, z, _| c * r * (rr * rr - r * r) * (1.0 + (PI * z / a).cos())));
    sc.f_r = Some(source(move |r, z, _| c * r * (rr * rr - r * r) * (PI * z / a).sin()));
    sc.fbar_phi = Some(source(move |r, z, _| c * (rr * rr - r * r) * (PI / a) * (PI * z / a).cos()));
}

fn swirl_profile(amplitude: f64, radius: f64, half_height: f64) -> Profile {
    let (rr, a) = (radius, half_height);
    profile(move |r, z| amplitude * r * r * (rr * rr - r * r) / rr.powi(4) * (1.0 + (PI * z / a).cos()))
}

fn swirl_decay(amplitude: f64, opts: &ScenarioOptions, grid: &Grid) -> Scenario {
    let mut sc = base("swirl_decay", amplitude);
    sc.u0 = swirl_profile(amplitude, grid.radius, grid.half_height);
    add_steady_forcing(&mut sc, opts.forcing, grid.radius, grid.half_height);
    sc
}

fn vortex_ring(amplitude: f64, opts: &ScenarioOptions, grid: &Grid) -> Scenario {
    let mut sc = base("vortex_ring", amplitude);
    let (r0, w) = (0.5 * grid.radius, 0.25 * grid.radius.min(grid.half_height));
    sc.gamma0 = profile(move |r, z| {
        let d2 = ((r - r0) * (r - r0) + z * z) / (w * w);
        if d2 < 1.0 {
            amplitude * (1.0 - 1.0 / (1.0 - d2)).exp()
        } else {
            0.0
        }
    });
    add_steady_forcing(&mut sc, opts.forcing, grid.radius, grid.half_height);
    sc
}

/// Exact solution
/// `u = A e^-t r^2 (R^2 - r^2)(1 + cos 2kz)`, `psi1 = A e^-t (R^2 - r^2)^3 cos kz`
/// with `k = pi / 2a`, and the force that makes it satisfy both equations.
fn manufactured_full(amplitude: f64, nu: f64, grid: &Grid) -> Scenario {
    let (rr, a) = (grid.radius, grid.half_height);
    let k = PI / (2.0 * a);
    let amp = amplitude;
    let decay = move |t: f64| amp * (-t).exp();
    let rho = move |r: f64| rr * rr - r * r;
    // swirl radial factor h = r^2 rho and axial factor Z = 1 + cos 2kz
    let h = move |r: f64| r * r * rho(r);
    let h1 = move |r: f64| 2.0 * rr * rr * r - 4.0 * r.powi(3);
    let zf = move |z: f64| 1.0 + (2.0 * k * z).cos();
    let zf1 = move |z: f64| -2.0 * k * (2.0 * k * z).sin();
    let zf2 = move |z: f64| -4.0 * k * k * (2.0 * k * z).cos();
    // Gamma radial factor g and its derivatives
    let g = move |r: f64| {
        let p = rho(r);
        24.0 * p * p - 24.0 * r * r * p + k * k * p.powi(3)
    };
    let g1_over_r = move |r: f64| {
        let p = rho(r);
        -96.0 * p - 48.0 * rr * rr + 96.0 * r * r - 6.0 * k * k * p * p
    };
    let g2 = move |r: f64| {
        let p = rho(r);
        -96.0 * p + 480.0 * r * r - 48.0 * rr * rr + k * k * (-6.0 * p * p + 24.0 * r * r * p)
    };
    let v_r = move |r: f64, z: f64, t: f64| decay(t) * r * k * rho(r).powi(3) * (k * z).sin();
    let v_z = move |r: f64, z: f64, t: f64| {
        let p = rho(r);
        decay(t) * (k * z).cos() * (-6.0 * r * r * p * p + 2.0 * p.powi(3))
    };
    let u = move |r: f64, z: f64, t: f64| decay(t) * h(r) * zf(z);
    let gamma = move |r: f64, z: f64, t: f64| decay(t) * g(r) * (k * z).cos();
    // Phi = -u_z / r^2
    let phi = move |r: f64, z: f64, t: f64| -decay(t) * rho(r) * zf1(z);

    let f0 = move |r: f64, z: f64, t: f64| {
        let s = decay(t);
        let ut = -u(r, z, t);
        let adv = v_r(r, z, t) * s * h1(r) * zf(z) + v_z(r, z, t) * s * h(r) * zf1(z);
        // u_rr - u_r / r + u_zz with h'' - h'/r = -8 r^2
        let diff = s * (-8.0 * r * r * zf(z) + h(r) * zf2(z));
        ut + adv - nu * diff
    };
    let fbar_phi = move |r: f64, z: f64, t: f64| {
        let s = decay(t);
        let (c, sn) = ((k * z).cos(), (k * z).sin());
        let gt = -gamma(r, z, t);
        let adv = v_r(r, z, t) * s * r * g1_over_r(r) * c - v_z(r, z, t) * s * k * g(r) * sn;
        let diff = s * c * (g2(r) + 3.0 * g1_over_r(r) - k * k * g(r));
        let reaction = 2.0 * s * rho(r) * zf(z) * phi(r, z, t);
        gt + adv - nu * diff + reaction
    };
    let mut sc = base("manufactured_full", amplitude);
    sc.u0 = profile(move |r, z| u(r, z, 0.0));
    sc.gamma0 = profile(move |r, z| gamma(r, z, 0.0));
    sc.f_phi = Some(source(move |r, z, t| f0(r, z, t) / r));
    // f_z = 0 and f_r = r int_{-a}^z fbar_phi dz'
    sc.f_r = Some(source(move |r, z, t| {
        let mid = 0.5 * (z - a);
        r * (gauss(-a, mid, |s| fbar_phi(r, s, t)) + gauss(mid, z, |s| fbar_phi(r, s, t)))
    }));
    sc.fbar_phi = Some(source(fbar_phi));
    sc.exact = Some(Exact {
        u: source(u),
        gamma: source(gamma),
        psi1: source(move |r, z, t| decay(t) * rho(r).powi(3) * (k * z).cos()),
    });
    sc
}

/// `G2 = G^3 + G1` and `kappa = D1^2 + D8^2` for unforced data with zero meridional velocity.
fn small_data_constants(shape: &[f64], amplitude: f64, grid: &Grid, nu: f64) -> (f64, f64) {
    let vphi: Vec<f64> = shape
        .iter()
        .enumerate()
        .map(|(k, u)| amplitude * u / grid.r_centers[k / grid.nz])
        .collect();
    let vphi_inf = vphi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let vphi2_over_r: Vec<f64> = vphi
        .iter()
        .enumerate()
        .map(|(k, v)| v * v / grid.r_centers[k / grid.nz])
        .collect();
    let g = l2_sq(&vphi2_over_r, grid).sqrt();
    let g2 = g.powi(3) + vphi_inf;
    let kappa = 2.0 * l2_sq(&vphi, grid) + d8_sq(nu);
    (g2, kappa)
}

fn small_data(opts: &ScenarioOptions, grid: &Grid, nu: f64) -> Result<Scenario> {
    let margin = opts.small_data_margin;
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::config("small_data_margin", format!("must lie in (0, 1), got {margin}")));
    }
    let shape = grid.sample(|r, z| swirl_profile(1.0, grid.radius, grid.half_height)(r, z));
    let gap = |amp: f64| {
        let (g2, kappa) = small_data_constants(&shape, amp, grid, nu);
        g2 - margin * (kappa + 1.0).powf(-1.5)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while gap(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let amplitude = opts.amplitude.map_or(lo, |a| a.min(lo));
    let (g2, kappa) = small_data_constants(&shape, amplitude, grid, nu);
    if !(g2 <= (kappa + 1.0).powf(-1.5)) {
        return Err(Error::Contract(format!(
            "small_data amplitude {amplitude} gives G2 = {g2} above (kappa + 1)^(-3/2) with kappa = {kappa}"
        )));
    }
    let mut sc = base("small_data", amplitude);
    sc.u0 = swirl_profile(amplitude, grid.radius, grid.half_height);
    Ok(sc)
}

/// Looks up a scenario by name and instantiates it for `grid` and `nu`.
pub fn builtin_scenario(name: &str, opts: &ScenarioOptions, grid: &Grid, nu: f64) -> Result<Scenario> {
    let amp = |default: f64| opts.amplitude.unwrap_or(default);
    match name {
        "rest" => {
            let mut sc = base("rest", 0.0);
            let zero = source(|_, _, _| 0.0);
            sc.exact = Some(Exact {
                u: zero.clone(),
                gamma: zero.clone(),
                psi1: zero,
            });
            Ok(sc)
        }
        "swirl_decay" => Ok(swirl_decay(amp(1.0), opts, grid)),
        "vortex_ring" => Ok(vortex_ring(amp(10.0), opts, grid)),
        "manufactured_full" => Ok(manufactured_full(amp(1.0), nu, grid)),
        "small_data" => small_data(opts, grid, nu),
        _ => Err(Error::UnknownScenario {
            name: name.into(),
            available: SCENARIOS.join(", "),
        }),
    }
}

/// Final-time errors of a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub resolutions: Vec<usize>,
    pub error_u: Vec<f64>,
    pub error_gamma: Vec<f64>,
    /// Least-squares slope of `log error` against `log h`; `None` when any error is zero.
    pub order_u: Option<f64>,
    pub order_gamma: Option<f64>,
}

fn fitted_order(hs: &[f64], errors: &[f64]) -> Option<f64> {
    if errors.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Runs `scenario` at `Nr = Nz = n` for each resolution, scaling `dt` with `h`
/// from `config.dt` at the first resolution, and measures the final-time errors.
pub fn convergence_study(scenario: &str, resolutions: &[usize], config: &SimConfig) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(Error::Contract(format!("need at least 3 resolutions, got {}", resolutions.len())));
    }
    let n0 = resolutions[0] as f64;
    let mut report = ConvergenceReport {
        resolutions: resolutions.to_vec(),
        error_u: Vec::new(),
        error_gamma: Vec::new(),
        order_u: None,
        order_gamma: None,
    };
    let mut hs = Vec::new();
    for &n in resolutions {
        let mut cfg = config.clone();
        cfg.nr = n;
        cfg.nz = n;
        cfg.dt = config.dt * n0 / n as f64;
        cfg.record_every = usize::MAX;
        let grid = cfg.grid()?;
        let sc = builtin_scenario(scenario, &cfg.scenario_options, &grid, cfg.nu)?;
        let exact = sc
            .exact
            .clone()
            .ok_or_else(|| Error::Contract(format!("scenario {scenario} has no exact solution")))?;
        let outcome = run_scenario(&cfg, &sc)?;
        if let Some(f) = outcome.failure {
            return Err(f.error);
        }
        let last: &State = outcome
            .series
            .last_state()
            .ok_or_else(|| Error::Contract("run kept no final state".into()))?;
        let t = last.t;
        let eu: Vec<f64> = grid.sample(|r, z| (exact.u)(r, z, t)).iter().zip(&last.u.values).map(|(a, b)| a - b).collect();
        let eg: Vec<f64> =
            grid.sample(|r, z| (exact.gamma)(r, z, t)).iter().zip(&last.gamma.values).map(|(a, b)| a - b).collect();
        report.error_u.push(l2_sq(&eu, &grid).sqrt());
        report.error_gamma.push(l2_sq(&eg, &grid).sqrt());
        hs.push(grid.dr);
    }
    report.order_u = fitted_order(&hs, &report.error_u);
    report.order_gamma = fitted_order(&hs, &report.error_gamma);
    Ok(report)
}
