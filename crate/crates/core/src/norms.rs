//! Lebesgue and energy norms, time series of diagnostics, and the functional
//! inequalities (one-dimensional Hardy, Sobolev and weighted interpolation).

use crate::error::{Error, Result};
use crate::fields::{Edge, ScalarField, State};
use crate::grid::Grid;

fn check_exponent(p: f64, name: &str) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("{name} must lie in [1, inf], got {p}")));
    }
    Ok(())
}

/// `(int |f|^p r^-beta dx)^(1/p)` for raw samples; `p = inf` gives the grid maximum of `|f| r^-beta`.
pub fn lp_weighted(values: &[f64], p: f64, beta: f64, grid: &Grid) -> Result<f64> {
    check_exponent(p, "p")?;
    if values.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: values.len(),
        });
    }
    if p.is_infinite() {
        let mut m: f64 = 0.0;
        for i in 0..grid.nr {
            let w = grid.r_centers[i].powf(-beta);
            for v in &values[i * grid.nz..(i + 1) * grid.nz] {
                m = m.max(v.abs() * w);
            }
        }
        return Ok(m);
    }
    let mut sum = 0.0;
    for i in 0..grid.nr {
        let w = grid.radial_weights[i] * grid.r_centers[i].powf(-beta * p);
        let row: f64 = values[i * grid.nz..(i + 1) * grid.nz].iter().map(|v| v.abs().powf(p)).sum();
        sum += w * row;
    }
    Ok(sum.powf(1.0 / p))
}

pub fn lp_values(values: &[f64], p: f64, grid: &Grid) -> Result<f64> {
    lp_weighted(values, p, 0.0, grid)
}

/// `|f|_{p, Omega}`.
pub fn lp_norm(f: &ScalarField, p: f64, grid: &Grid) -> Result<f64> {
    lp_values(&f.values, p, grid)
}

/// Pointwise `|grad f|^2 = f_r^2 + f_z^2`.
pub fn gradient_sq(f: &ScalarField, grid: &Grid) -> Vec<f64> {
    let fr = f.d_r(grid);
    let fz = f.d_z(grid);
    fr.values.iter().zip(&fz.values).map(|(a, b)| a * a + b * b).collect()
}

/// `int f^2 dx`.
pub fn l2_sq(values: &[f64], grid: &Grid) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    grid.integrate_unchecked(&sq)
}

/// Trapezoidal weights for samples at `times`.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let h = times[k] - times[k - 1];
        w[k - 1] += 0.5 * h;
        w[k] += 0.5 * h;
    }
    w
}

/// `|g|_{L_q(0,t)}` for nonnegative samples `g(t_k)`.
pub fn time_norm(times: &[f64], values: &[f64], q: f64) -> Result<f64> {
    check_exponent(q, "q")?;
    if times.is_empty() {
        return Err(Error::Contract("empty time series".into()));
    }
    if times.len() != values.len() {
        return Err(Error::Dimension {
            expected: times.len(),
            got: values.len(),
        });
    }
    if q.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let w = trapezoid_weights(times);
    let s: f64 = w.iter().zip(values).map(|(w, v)| w * v.abs().powf(q)).sum();
    Ok(s.powf(1.0 / q))
}

/// Cumulative trapezoidal integral of `values` over `times`.
pub fn cumulative_integral(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for k in 0..values.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// `sup_{s<=t} |f(s)|_2 + (int_0^t |grad f|_2^2)^(1/2)` at every recorded `t`.
pub fn running_v_norm(times: &[f64], l2: &[f64], grad_sq: &[f64]) -> Vec<f64> {
    let cum = cumulative_integral(times, grad_sq);
    let mut sup: f64 = 0.0;
    l2.iter()
        .zip(cum)
        .map(|(a, g)| {
            sup = sup.max(*a);
            sup + g.max(0.0).sqrt()
        })
        .collect()
}

/// Exponents of a mixed space-time norm `|r^-beta D^k f|_{p,q,Omega^t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub p: f64,
    pub q: f64,
    pub derivative_order: u8,
    pub weight_exponent: f64,
}

impl NormSpec {
    pub fn new(p: f64, q: f64, derivative_order: u8, weight_exponent: f64) -> Result<Self> {
        check_exponent(p, "p")?;
        check_exponent(q, "q")?;
        if derivative_order > 1 {
            return Err(Error::Domain(format!("derivative order must be 0 or 1, got {derivative_order}")));
        }
        if weight_exponent.is_nan() || weight_exponent < 0.0 {
            return Err(Error::Domain(format!("weight exponent must be >= 0, got {weight_exponent}")));
        }
        Ok(Self {
            p,
            q,
            derivative_order,
            weight_exponent,
        })
    }

    pub fn plain(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, 0, 0.0)
    }

    /// The spatial part at one instant.
    pub fn spatial(&self, f: &ScalarField, grid: &Grid) -> Result<f64> {
        if self.derivative_order == 0 {
            lp_weighted(&f.values, self.p, self.weight_exponent, grid)
        } else {
            let g: Vec<f64> = gradient_sq(f, grid).iter().map(|v| v.sqrt()).collect();
            lp_weighted(&g, self.p, self.weight_exponent, grid)
        }
    }
}

/// `|f|_{p,q,Omega^t}` of a field selected from every stored state.
pub fn mixed_norm<F>(series: &TimeSeries, select: F, spec: &NormSpec, grid: &Grid) -> Result<f64>
where
    F: Fn(&State) -> &ScalarField,
{
    let values = series.state_values(|s| spec.spatial(select(s), grid))?;
    time_norm(&series.times, &values, spec.q)
}

/// `|f|_{2,inf,Omega^t} + |grad f|_{2,Omega^t}`.
pub fn v_norm<F>(series: &TimeSeries, select: F, grid: &Grid) -> Result<f64>
where
    F: Fn(&State) -> &ScalarField,
{
    let sup = mixed_norm(series, &select, &NormSpec::plain(2.0, f64::INFINITY)?, grid)?;
    let grad = mixed_norm(series, &select, &NormSpec::new(2.0, 2.0, 1, 0.0)?, grid)?;
    Ok(sup + grad)
}

/// `|v_phi|_{s,inf,Omega^t} / |v_phi|_{inf,Omega^t}` over the recorded series.
///
/// Snapshots with a stored state are evaluated directly; the others fall back
/// on a recorded `vphi_s` column for the same `s`.
pub fn lambda_s(series: &TimeSeries, s: f64, grid: &Grid) -> Result<f64> {
    if s.is_nan() || s <= 0.0 {
        return Err(Error::Domain(format!("lambda needs s > 0, got {s}")));
    }
    if series.is_empty() {
        return Err(Error::Contract("empty time series".into()));
    }
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for snap in &series.snapshots {
        let value = match &snap.state {
            Some(state) => {
                den = den.max(state.v.v_phi.max_abs());
                lp_power_mean(&state.v.v_phi.values, s, grid)
            }
            None => {
                den = den.max(snap.diagnostics.vphi_inf);
                snap.diagnostics.lebesgue_vphi(s).ok_or_else(|| {
                    Error::Contract(format!("snapshot has neither a state nor a vphi_s{s} column"))
                })?
            }
        };
        num = num.max(value);
    }
    if den == 0.0 {
        return Err(Error::Domain("v_phi vanishes identically; lambda is undefined".into()));
    }
    Ok(num / den)
}

/// `(int |f|^s dx)^(1/s)` for any `s > 0`.
pub fn lp_power_mean(values: &[f64], s: f64, grid: &Grid) -> f64 {
    let mut sum = 0.0;
    for i in 0..grid.nr {
        let row: f64 = values[i * grid.nz..(i + 1) * grid.nz].iter().map(|v| v.abs().powf(s)).sum();
        sum += grid.radial_weights[i] * row;
    }
    sum.powf(1.0 / s)
}

#[allow(clippy::excessive_precision)]
const GAUSS_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
#[allow(clippy::excessive_precision)]
const GAUSS_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

pub(crate) fn gauss<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    GAUSS_NODES.iter().zip(GAUSS_WEIGHTS).map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// `int_a^b x^m dx` for `0 <= a < b`; infinite when divergent at 0.
fn power_integral(a: f64, b: f64, m: f64) -> f64 {
    if (m + 1.0).abs() < 1e-14 {
        if a == 0.0 {
            f64::INFINITY
        } else {
            (b / a).ln()
        }
    } else if m < -1.0 && a == 0.0 {
        f64::INFINITY
    } else {
        (b.powf(m + 1.0) - a.powf(m + 1.0)) / (m + 1.0)
    }
}

/// Both sides of the one-dimensional Hardy inequality
/// `|x^-beta F|_p <= |beta - 1/p|^-1 |x^(1-beta) f|_p`
/// for `f` piecewise constant on `samples.len()` equal cells covering `(0, x_max)`.
pub fn hardy_ratio(samples: &[f64], x_max: f64, beta: f64, p: f64) -> Result<(f64, f64)> {
    check_exponent(p, "p")?;
    if samples.is_empty() || !(x_max > 0.0) {
        return Err(Error::Domain("need at least one sample on a positive window".into()));
    }
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    if (beta - inv_p).abs() < 1e-14 {
        return Err(Error::Domain(format!("beta must differ from 1/p = {inv_p}")));
    }
    let n = samples.len();
    let h = x_max / n as f64;
    let forward = beta > inv_p;
    // F at cell edges
    let mut edges = vec![0.0; n + 1];
    if forward {
        for k in 0..n {
            edges[k + 1] = edges[k] + samples[k] * h;
        }
    } else {
        for k in (0..n).rev() {
            edges[k] = edges[k + 1] + samples[k] * h;
        }
    }
    let big_f = |k: usize, x: f64| {
        let t = (x - k as f64 * h) / h;
        edges[k] * (1.0 - t) + edges[k + 1] * t
    };
    let constant = 1.0 / (beta - inv_p).abs();

    if p.is_infinite() {
        let mut lhs: f64 = 0.0;
        let mut rhs: f64 = 0.0;
        for k in 0..n {
            for m in 0..=64 {
                let x = (k as f64 + m as f64 / 64.0) * h;
                if x == 0.0 {
                    continue;
                }
                lhs = lhs.max(x.powf(-beta) * big_f(k, x).abs());
                rhs = rhs.max(x.powf(1.0 - beta) * samples[k].abs());
            }
        }
        if forward {
            lhs = lhs.max(x_max.powf(-beta) * edges[n].abs());
        }
        return Ok((lhs, constant * rhs));
    }

    let bp = beta * p;
    let mut lhs_p = 0.0;
    for k in 0..n {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        let integrand = |x: f64| x.powf(-bp) * big_f(k, x).abs().powf(p);
        if k == 0 {
            let mut hi = b;
            for _ in 0..80 {
                let lo = 0.5 * hi;
                lhs_p += gauss(lo, hi, integrand);
                hi = lo;
            }
        } else {
            // split at a root of the linear piece so |F|^p stays smooth
            let (fa, fb) = (edges[k], edges[k + 1]);
            if fa * fb < 0.0 {
                let root = a + (b - a) * fa / (fa - fb);
                lhs_p += gauss(a, root, integrand) + gauss(root, b, integrand);
            } else {
                lhs_p += gauss(a, b, integrand);
            }
        }
    }
    if forward {
        lhs_p += edges[n].abs().powf(p) * x_max.powf(1.0 - bp) / (bp - 1.0);
    }
    let m = (1.0 - beta) * p;
    let mut rhs_p = 0.0;
    for k in 0..n {
        if samples[k] != 0.0 {
            rhs_p += samples[k].abs().powf(p) * power_integral(k as f64 * h, (k + 1) as f64 * h, m);
        }
    }
    Ok((lhs_p.powf(1.0 / p), constant * rhs_p.powf(1.0 / p)))
}

/// Which interpolation inequality to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interpolation {
    /// `sum_{|alpha|=r} |D^alpha f|_p <= c |f|_{p1}^(1-theta) |f|_{W^l_{p2}}^theta` in three dimensions.
    Sobolev { p: f64, r: u8, p1: f64, p2: f64, l: u8 },
    /// `(int |f|^q r^-s)^(1/q) <= c |f|_p^(1-kappa) |grad f|_p^kappa`.
    HardyWeighted { p: f64, s: f64, q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationReport {
    pub lhs: f64,
    /// Right-hand side without the unspecified constant.
    pub rhs: f64,
    /// `lhs / rhs`, an empirical lower bound on the best constant; 0 for the zero field.
    pub ratio: f64,
    pub exponents: Vec<(&'static str, f64)>,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

pub fn interpolation_ratio(kind: Interpolation, f: &ScalarField, grid: &Grid) -> Result<InterpolationReport> {
    match kind {
        Interpolation::HardyWeighted { p, s, q } => {
            if !(p > 1.0 && p <= 3.0) {
                return Err(Error::Domain(format!("need 1 < p <= 3, got p = {p}")));
            }
            if !(0.0..=p).contains(&s) {
                return Err(Error::Domain(format!("need 0 <= s <= p, got s = {s}")));
            }
            if s >= 2.0 {
                return Err(Error::Domain(format!("need s < 2, got s = {s}")));
            }
            let q_max = if p == 3.0 { f64::INFINITY } else { p * (3.0 - s) / (3.0 - p) };
            if !(q >= p && q <= q_max * (1.0 + 1e-12)) {
                return Err(Error::Domain(format!("need q in [{p}, {q_max}], got q = {q}")));
            }
            if f.closure.wall != Edge::Dirichlet || f.closure.lids != Edge::Dirichlet {
                return Err(Error::Domain(
                    "weighted interpolation needs a field vanishing on the wall and both lids".into(),
                ));
            }
            let a = (3.0 - s) / q - 3.0 / p + 1.0;
            let b = 3.0 / p - (3.0 - s) / q;
            let lhs = lp_weighted(&f.values, q, s / q, grid)?;
            let f_p = lp_norm(f, p, grid)?;
            let grad: Vec<f64> = gradient_sq(f, grid).iter().map(|v| v.sqrt()).collect();
            let g_p = lp_values(&grad, p, grid)?;
            let rhs = f_p.powf(a) * g_p.powf(b);
            Ok(InterpolationReport {
                lhs,
                rhs,
                ratio: ratio(lhs, rhs),
                exponents: vec![("f", a), ("grad_f", b)],
            })
        }
        Interpolation::Sobolev { p, r, p1, p2, l } => {
            for (x, name) in [(p, "p"), (p1, "p1"), (p2, "p2")] {
                check_exponent(x, name)?;
            }
            if r >= l || l > 2 {
                return Err(Error::Domain(format!("need 0 <= r < l <= 2, got r = {r}, l = {l}")));
            }
            let n = 3.0;
            let (rf, lf) = (r as f64, l as f64);
            let denom = n / p2 - lf - n / p1;
            if denom == 0.0 {
                return Err(Error::Domain("interpolation exponent is undetermined".into()));
            }
            let theta = (n / p - rf - n / p1) / denom;
            if theta < rf / lf - 1e-12 || theta > 1.0 + 1e-12 {
                return Err(Error::Domain(format!("theta = {theta} outside [{}, 1]", rf / lf)));
            }
            let fr = f.d_r(grid);
            let fz = f.d_z(grid);
            let lhs = if r == 0 {
                lp_norm(f, p, grid)?
            } else {
                lp_norm(&fr, p, grid)? + lp_norm(&fz, p, grid)?
            };
            let mut w = lp_norm(f, p2, grid)? + lp_norm(&fr, p2, grid)? + lp_norm(&fz, p2, grid)?;
            if l == 2 {
                w += lp_norm(&f.d_rr(grid), p2, grid)?
                    + lp_norm(&fr.d_z(grid), p2, grid)?
                    + lp_norm(&f.d_zz(grid), p2, grid)?;
            }
            let rhs = lp_norm(f, p1, grid)?.powf(1.0 - theta) * w.powf(theta);
            Ok(InterpolationReport {
                lhs,
                rhs,
                ratio: ratio(lhs, rhs),
                exponents: vec![("theta", theta)],
            })
        }
    }
}

macro_rules! diagnostics {
    ($($(#[$doc:meta])* $name:ident),* $(,)?) => {
        /// Scalar diagnostics recorded at one instant. Quantities ending in
        /// `_sq` are squared `L_2` norms; `_cum` are running time integrals.
        #[derive(Debug, Clone, Default, PartialEq)]
        pub struct Diagnostics {
            $($(#[$doc])* pub $name: f64,)*
            /// `(s, |v_phi|_s, |f_phi|_s)` for each tracked exponent.
            pub lebesgue: Vec<(f64, f64, f64)>,
        }

        impl Diagnostics {
            /// Fixed column names, in output order.
            pub const COLUMNS: &'static [&'static str] = &[$(stringify!($name)),*];

            fn fixed_values(&self) -> Vec<f64> {
                vec![$(self.$name),*]
            }

            fn set_fixed(&mut self, name: &str, value: f64) -> bool {
                match name {
                    $(stringify!($name) => { self.$name = value; true })*
                    _ => false,
                }
            }
        }
    };
}

diagnostics! {
    v_l2, grad_v_l2_cum, u_inf, gamma_l2, phi_l2,
    /// Running `sqrt(|Phi|_V^2 + |Gamma|_V^2)`.
    x,
    cfl, elliptic_residual,
    v_sq, grad_v_sq, metric_sq, vphi_inf,
    /// Running `sum dt |f0|_inf` as used by the time stepper.
    f0_inf_cum,
    grad_phi_sq, grad_gamma_sq, gamma_z_sq,
    u_z_sq, grad_u_z_sq, u_r_sq, u_rr_sq, u_rz_sq,
    omega_r_sq, grad_omega_r_sq, omega_z_sq, grad_omega_z_sq,
    interaction,
    psi_h1_sq, psi1_sq, psi_z_h1_sq, psi1_z_sq,
    h2_lhs, h3a_lhs, h3b_lhs, h3_weighted_sq, divergence_l2,
    f_l2, f0_inf, f0_l2, fphi_over_r_inf, fbar_r_65, fbar_phi_65, f_r_curl_65, f_z_curl_65,
    fphi_l3_wall, fphi_inf, r_fphi_l4_4, vphi2_over_r_sq,
}

fn exponent_label(s: f64) -> String {
    format!("{s}")
}

impl Diagnostics {
    pub fn lebesgue_vphi(&self, s: f64) -> Option<f64> {
        self.lebesgue.iter().find(|e| e.0 == s).map(|e| e.1)
    }

    pub fn lebesgue_fphi(&self, s: f64) -> Option<f64> {
        self.lebesgue.iter().find(|e| e.0 == s).map(|e| e.2)
    }

    /// Column names including the per-exponent ones.
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Self::COLUMNS.iter().map(|s| s.to_string()).collect();
        for (s, _, _) in &self.lebesgue {
            names.push(format!("vphi_s{}", exponent_label(*s)));
            names.push(format!("fphi_s{}", exponent_label(*s)));
        }
        names
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = self.fixed_values();
        for (_, a, b) in &self.lebesgue {
            v.push(*a);
            v.push(*b);
        }
        v
    }

    /// Rebuilds a record from `(name, value)` pairs; every fixed column must be present.
    pub fn from_named(pairs: &[(String, f64)]) -> Result<Self> {
        let mut out = Self::default();
        let mut seen = vec![false; Self::COLUMNS.len()];
        for (name, value) in pairs {
            if let Some(k) = Self::COLUMNS.iter().position(|c| c == name) {
                out.set_fixed(name, *value);
                seen[k] = true;
            } else if let Some(s) = name.strip_prefix("vphi_s") {
                let s: f64 = s.parse().map_err(|_| Error::Artifact(format!("bad column {name}")))?;
                match out.lebesgue.iter_mut().find(|e| e.0 == s) {
                    Some(e) => e.1 = *value,
                    None => out.lebesgue.push((s, *value, 0.0)),
                }
            } else if let Some(s) = name.strip_prefix("fphi_s") {
                let s: f64 = s.parse().map_err(|_| Error::Artifact(format!("bad column {name}")))?;
                match out.lebesgue.iter_mut().find(|e| e.0 == s) {
                    Some(e) => e.2 = *value,
                    None => out.lebesgue.push((s, 0.0, *value)),
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Artifact(format!("missing column {}", Self::COLUMNS[k])));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: Option<State>,
    pub diagnostics: Diagnostics,
}

/// Recorded trajectory on `[0, t]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl TimeSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, state: Option<State>, diagnostics: Diagnostics) -> Result<()> {
        match self.times.last() {
            None if t != 0.0 => return Err(Error::Contract(format!("series must start at t = 0, got {t}"))),
            Some(&last) if t <= last => {
                return Err(Error::Contract(format!("times must increase: {t} after {last}")))
            }
            _ => {}
        }
        self.times.push(t);
        self.snapshots.push(Snapshot { state, diagnostics });
        Ok(())
    }

    pub fn dt_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.times)
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// One diagnostic across all snapshots.
    pub fn column<F: Fn(&Diagnostics) -> f64>(&self, f: F) -> Vec<f64> {
        self.snapshots.iter().map(|s| f(&s.diagnostics)).collect()
    }

    /// Evaluates `f` on every snapshot's state; all snapshots must hold one.
    pub fn state_values<F: Fn(&State) -> Result<f64>>(&self, f: F) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::Contract("empty time series".into()));
        }
        self.snapshots
            .iter()
            .map(|s| match &s.state {
                Some(state) => f(state),
                None => Err(Error::Contract("snapshot without a stored state".into())),
            })
            .collect()
    }

    pub fn last_state(&self) -> Option<&State> {
        self.snapshots.iter().rev().find_map(|s| s.state.as_ref())
    }

    pub fn first_state(&self) -> Option<&State> {
        self.snapshots.first().and_then(|s| s.state.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Closure, Parity, VelocityField};
    use std::f64::consts::PI;

    fn unit(n: usize) -> Grid {
        Grid::new(1.0, 1.0, n, n).unwrap()
    }

    fn state_with(grid: &Grid, t: f64, f: ScalarField) -> State {
        let mut v = VelocityField::zeros(grid);
        v.v_phi = f.clone().with_closure(Closure::V_PHI);
        State {
            t,
            u: ScalarField::zeros(grid, Closure::SWIRL),
            gamma: f,
            psi1: ScalarField::zeros(grid, Closure::PSI1),
            v,
            phi: ScalarField::zeros(grid, Closure::PHI),
        }
    }

    fn series_of(grid: &Grid, times: &[f64], f: impl Fn(f64) -> ScalarField) -> TimeSeries {
        let mut s = TimeSeries::new();
        for &t in times {
            s.push(t, Some(state_with(grid, t, f(t))), Diagnostics::default()).unwrap();
        }
        s
    }

    #[test]
    fn lp_examples() {
        let g = unit(16);
        let one = ScalarField::from_fn(&g, Closure::PSI1, |_, _| 1.0);
        assert!((lp_norm(&one, 2.0, &g).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-12);
        let r = ScalarField::from_fn(&g, Closure::V_R, |r, _| r);
        assert_eq!(lp_norm(&r, f64::INFINITY, &g).unwrap(), 1.0 - g.dr / 2.0);
        assert!(matches!(lp_norm(&r, 0.5, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn lp_of_cos_converges() {
        // 2 pi * (1/2) * int cos^2 = pi (1 + sin 2 / 2)
        let exact = (PI * (1.0 + (2.0f64).sin() / 2.0)).sqrt();
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| {
                let g = unit(n);
                let f = ScalarField::from_fn(&g, Closure::PSI1, |_, z| z.cos());
                (lp_norm(&f, 2.0, &g).unwrap() - exact).abs()
            })
            .collect();
        assert!(errs[0] < 1e-2 && errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn time_norm_examples() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let c = vec![2.5; times.len()];
        assert!((time_norm(&times, &c, 1.0).unwrap() - 2.5).abs() < 1e-12);
        let decay: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        assert_eq!(time_norm(&times, &decay, f64::INFINITY).unwrap(), 1.0);
        let expect = ((1.0 - (-2.0f64).exp()) / 2.0).sqrt();
        assert!((time_norm(&times, &decay, 2.0).unwrap() - expect).abs() < 1e-4);
        assert!(matches!(time_norm(&[], &[], 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn mixed_norm_of_decaying_field() {
        let g = unit(8);
        let times: Vec<f64> = (0..=50).map(|k| k as f64 / 50.0).collect();
        let base = ScalarField::from_fn(&g, Closure::PSI1, |r, z| (1.0 - r * r) * (PI * z / 2.0).cos());
        let s = series_of(&g, &times, |t| base.scaled((-t).exp()));
        let spec = NormSpec::plain(2.0, 2.0).unwrap();
        let got = mixed_norm(&s, |st| &st.gamma, &spec, &g).unwrap();
        let expect = lp_norm(&base, 2.0, &g).unwrap() * ((1.0 - (-2.0f64).exp()) / 2.0).sqrt();
        assert!((got - expect).abs() < 1e-3 * expect);
        assert!(matches!(
            mixed_norm(&TimeSeries::new(), |st| &st.gamma, &spec, &g),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn v_norm_of_static_field() {
        // |f|_2^2 = 2 pi (1/6), |grad f|_2^2 = 2 pi (1 + pi^2 / 24)
        // on t in [0,1] with f = (1 - r^2) cos(pi z / 2).
        let f2 = 2.0 * PI / 6.0;
        let g2 = 2.0 * PI * (1.0 + PI * PI / 24.0);
        let exact = f2.sqrt() + g2.sqrt();
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| {
                let g = unit(n);
                let f = ScalarField::from_fn(&g, Closure::PSI1, |r, z| (1.0 - r * r) * (PI * z / 2.0).cos());
                let s = series_of(&g, &[0.0, 0.5, 1.0], |_| f.clone());
                (v_norm(&s, |st| &st.gamma, &g).unwrap() - exact).abs()
            })
            .collect();
        assert!(errs[0] < 2e-2 && errs[0] / errs[1] > 3.0, "{errs:?}");
        let g = unit(8);
        let zero = series_of(&g, &[0.0, 1.0], |_| ScalarField::zeros(&g, Closure::PSI1));
        assert_eq!(v_norm(&zero, |st| &st.gamma, &g).unwrap(), 0.0);
    }

    #[test]
    fn lambda_examples() {
        let g = Grid::new(1.3, 0.7, 8, 10).unwrap();
        let vol = 2.0 * PI * 0.7 * 1.3 * 1.3;
        let s = series_of(&g, &[0.0, 1.0], |_| ScalarField::from_fn(&g, Closure::V_PHI, |_, _| 0.4));
        for p in [2.0, 4.0, 6.0] {
            assert!((lambda_s(&s, p, &g).unwrap() - vol.powf(1.0 / p)).abs() < 1e-12);
        }
        let mut spike = vec![0.0; g.len()];
        spike[g.idx(3, 4)] = 2.0;
        let f = ScalarField::new(&g, spike, Closure::V_PHI).unwrap();
        let s = series_of(&g, &[0.0], |_| f.clone());
        let w = g.weight(3);
        assert!((lambda_s(&s, 4.0, &g).unwrap() - w.powf(0.25)).abs() < 1e-12);
        let z = series_of(&g, &[0.0], |_| ScalarField::zeros(&g, Closure::V_PHI));
        assert!(matches!(lambda_s(&z, 4.0, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn hardy_examples() {
        let mut f = vec![1.0; 100];
        f.extend(vec![0.0; 100]);
        let (lhs, rhs) = hardy_ratio(&f, 2.0, 1.0, 2.0).unwrap();
        assert!((lhs - 2f64.sqrt()).abs() < 1e-10, "{lhs}");
        assert!((rhs - 2.0).abs() < 1e-12);
        assert_eq!(hardy_ratio(&[0.0; 10], 1.0, 1.0, 2.0).unwrap(), (0.0, 0.0));
        assert!(matches!(hardy_ratio(&f, 2.0, 0.5, 2.0), Err(Error::Domain(_))));
        let (l2, r2) = hardy_ratio(&f.iter().map(|v| -3.0 * v).collect::<Vec<_>>(), 2.0, 1.0, 2.0).unwrap();
        assert!((l2 - 3.0 * lhs).abs() < 1e-10 && (r2 - 3.0 * rhs).abs() < 1e-10);
    }

    #[test]
    fn hardy_backward_branch() {
        // f = 1 on [0,1], beta = 0, p = 2: F = 1 - x, lhs^2 = 1/3, rhs = 2 * sqrt(1/3)
        let f = vec![1.0; 64];
        let (lhs, rhs) = hardy_ratio(&f, 1.0, 0.0, 2.0).unwrap();
        assert!((lhs - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((rhs - 2.0 * (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn interpolation_examples() {
        let g = unit(16);
        let f = ScalarField::from_fn(&g, Closure::PSI1, |r, z| (1.0 - r * r) * (PI * z / 2.0).cos());
        let rep = interpolation_ratio(Interpolation::HardyWeighted { p: 2.0, s: 0.0, q: 2.0 }, &f, &g).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-12);
        let zero = ScalarField::zeros(&g, Closure::PSI1);
        let rep = interpolation_ratio(Interpolation::HardyWeighted { p: 2.0, s: 1.0, q: 2.0 }, &zero, &g).unwrap();
        assert_eq!(rep.ratio, 0.0);
        let bad = interpolation_ratio(Interpolation::HardyWeighted { p: 2.0, s: 1.0, q: 9.0 }, &f, &g);
        assert!(matches!(bad, Err(Error::Domain(m)) if m.contains("q")));
        let free = f.clone().with_closure(Closure::free(Parity::Even));
        assert!(interpolation_ratio(Interpolation::HardyWeighted { p: 2.0, s: 1.0, q: 2.0 }, &free, &g).is_err());
    }

    #[test]
    fn weighted_ratio_stable_under_refinement() {
        let ratios: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let g = unit(n);
                let f = ScalarField::from_fn(&g, Closure::PSI1, |r, z| (1.0 - r * r) * (PI * z / 2.0).cos());
                interpolation_ratio(Interpolation::HardyWeighted { p: 2.0, s: 1.0, q: 2.0 }, &f, &g)
                    .unwrap()
                    .ratio
            })
            .collect();
        for w in ratios.windows(2) {
            assert!((w[0] - w[1]).abs() < 0.1 * w[1], "{ratios:?}");
        }
    }

    #[test]
    fn sobolev_theta() {
        let g = unit(16);
        let f = ScalarField::from_fn(&g, Closure::PSI1, |r, z| (1.0 - r * r) * (PI * z / 2.0).cos());
        // 3/6 - 0 = (1 - theta) 3/2 + theta (3/2 - 1)  =>  theta = 1
        let rep = interpolation_ratio(Interpolation::Sobolev { p: 6.0, r: 0, p1: 2.0, p2: 2.0, l: 1 }, &f, &g).unwrap();
        assert!((rep.exponents[0].1 - 1.0).abs() < 1e-12);
        assert!(rep.ratio > 0.0 && rep.ratio.is_finite());
        let bad = interpolation_ratio(Interpolation::Sobolev { p: 100.0, r: 1, p1: 2.0, p2: 2.0, l: 2 }, &f, &g);
        assert!(bad.is_err());
    }

    #[test]
    fn diagnostics_round_trip() {
        let mut d = Diagnostics {
            v_l2: 1.5,
            x: 2.0,
            interaction: -0.25,
            ..Default::default()
        };
        d.lebesgue.push((4.0, 0.3, 0.1));
        let pairs: Vec<(String, f64)> = d.column_names().into_iter().zip(d.values()).collect();
        assert_eq!(Diagnostics::from_named(&pairs).unwrap(), d);
        assert_eq!(d.lebesgue_vphi(4.0), Some(0.3));
        assert!(Diagnostics::from_named(&pairs[1..]).is_err());
    }

    #[test]
    fn series_times_must_increase() {
        let mut s = TimeSeries::new();
        assert!(s.push(0.5, None, Diagnostics::default()).is_err());
        s.push(0.0, None, Diagnostics::default()).unwrap();
        assert!(s.push(0.0, None, Diagnostics::default()).is_err());
        s.push(0.1, None, Diagnostics::default()).unwrap();
        assert_eq!(s.dt_weights(), vec![0.05, 0.05]);
    }
}
