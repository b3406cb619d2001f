//! Data constants, inequality ledgers and the small-data fixed point.
//!
//! Inequalities with explicit constants are checked strictly. The others hold
//! up to an unspecified constant `c`; for those the ratio `lhs / rhs` with
//! `c = 1` is recorded so that it can be compared across resolutions.

use std::fmt;

use crate::dynamics::Advection;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::norms::{cumulative_integral, hardy_ratio, lambda_s, time_norm, Diagnostics, TimeSeries};

/// `D8^2 = max(nu/4, nu^2/8, 27/(4 nu^3), 1/4)`.
pub fn d8_sq(nu: f64) -> f64 {
    [nu / 4.0, nu * nu / 8.0, 27.0 / (4.0 * nu.powi(3)), 0.25]
        .into_iter()
        .fold(0.0, f64::max)
}

/// Constants built from the initial data and the forcing on `[0, t]`, with every
/// unspecified constant set to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConstants {
    pub t: f64,
    pub nu: f64,
    /// `D1^2 = 3 |f|_{2,1}^2 + 2 |v(0)|_2^2`.
    pub d1: f64,
    /// `3 |f|_{2,1} + 2 |v(0)|_2`, the unsquared variant.
    pub d1_linear: f64,
    /// `|f0|_{inf,1} + |u(0)|_inf`.
    pub d2: f64,
    pub d_star: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub d6: f64,
    pub d7: f64,
    pub d8: f64,
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    /// `D1^2 + D8^2`.
    pub kappa: f64,
    /// `(kappa + 1)^(1/2)`.
    pub c1: f64,
}

impl DataConstants {
    /// Smallness of the data required by the small-data existence argument.
    pub fn small_data_hypothesis(&self) -> bool {
        self.g2 <= (self.kappa + 1.0).powf(-1.5)
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("viscosity must be positive, got {nu}")));
    }
    Ok(())
}

/// Constants for the data on `[0, t_k]`, where `t_k` is the `k`-th recorded time.
pub fn data_constants_upto(series: &TimeSeries, k: usize, nu: f64) -> Result<DataConstants> {
    check_nu(nu)?;
    if k >= series.len() {
        return Err(Error::Contract(format!("snapshot {k} out of range for {} snapshots", series.len())));
    }
    let times = &series.times[..=k];
    let col = |f: fn(&Diagnostics) -> f64| -> Vec<f64> { series.snapshots[..=k].iter().map(|s| f(&s.diagnostics)).collect() };
    let tn = |f: fn(&Diagnostics) -> f64, q: f64| time_norm(times, &col(f), q);
    let d0 = &series.snapshots[0].diagnostics;

    let f_21 = tn(|d| d.f_l2, 1.0)?;
    let d1_sq = 3.0 * f_21 * f_21 + 2.0 * d0.v_sq;
    let d1 = d1_sq.sqrt();
    let d1_linear = 3.0 * f_21 + 2.0 * d0.v_sq.sqrt();
    let d2 = tn(|d| d.f0_inf, 1.0)? + d0.u_inf;
    let d_star = d2.min(1.0);
    let d3 = (tn(|d| d.fbar_r_65, 2.0)? + tn(|d| d.fbar_phi_65, 2.0)?) / (2.0 * nu).sqrt() + d0.phi_l2 + d0.gamma_l2;
    let f0_sq = tn(|d| d.f0_l2, 2.0)?.powi(2);
    let d4_sq = (d1_sq + d2 * d2 + d0.u_z_sq + f0_sq) / nu;
    let d5_sq = d1_sq * (1.0 + d2) + d1_sq * d2 * d2 + d0.u_r_sq + f0_sq;
    let (d4, d5) = (d4_sq.sqrt(), d5_sq.sqrt());
    let curl_sq = tn(|d| d.f_r_curl_65, 2.0)?.powi(2) + tn(|d| d.f_z_curl_65, 2.0)?.powi(2);
    let d6_sq = (d4 + d5) * tn(|d| d.fphi_l3_wall, 2.0)? + curl_sq / nu + d0.omega_r_sq + d0.omega_z_sq;
    let d7 = 2f64.sqrt() * d2.sqrt() * tn(|d| d.fphi_over_r_inf, 1.0)?.sqrt() + d0.vphi_inf;
    let d8 = d8_sq(nu).sqrt();
    let g_sq = tn(|d| d.fbar_phi_65, 2.0)?.powi(2)
        + d0.gamma_l2 * d0.gamma_l2
        + tn(|d| d.r_fphi_l4_4, 1.0)?
        + d0.vphi2_over_r_sq;
    let g = g_sq.sqrt();
    let g1 = tn(|d| d.fphi_inf, 1.0)? + d0.vphi_inf;
    let g2 = g.powi(3) + g1;
    let kappa = d1_sq + d8 * d8;
    Ok(DataConstants {
        t: times[k],
        nu,
        d1,
        d1_linear,
        d2,
        d_star,
        d3,
        d4,
        d5,
        d6: d6_sq.sqrt(),
        d7,
        d8,
        g,
        g1,
        g2,
        kappa,
        c1: (kappa + 1.0).sqrt(),
    })
}

/// Constants over the whole recorded horizon.
pub fn data_constants(series: &TimeSeries, nu: f64) -> Result<DataConstants> {
    if series.is_empty() {
        return Err(Error::Contract("empty time series".into()));
    }
    data_constants_upto(series, series.len() - 1, nu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Explicit constants; pass or fail.
    Strict,
    /// Holds up to an unspecified constant; the ratio is recorded.
    Tracked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Tracked,
    Skipped,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Strict => "strict",
            Mode::Tracked => "tracked",
        })
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Tracked => "tracked",
            Status::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub name: String,
    pub mode: Mode,
    pub lhs: f64,
    /// Right-hand side with every unspecified constant set to 1.
    pub rhs: f64,
    pub ratio: Option<f64>,
    pub status: Status,
    /// Time at which the reported sides were taken, for per-time checks.
    pub t: Option<f64>,
    /// Tolerance, hypotheses or the reason an entry was skipped.
    pub note: String,
}

impl LedgerEntry {
    fn ratio_of(lhs: f64, rhs: f64) -> Option<f64> {
        (rhs > 0.0 && rhs.is_finite() && lhs.is_finite()).then(|| lhs / rhs)
    }

    /// A strict comparison `lhs <= rhs (1 + rel) + abs`.
    pub fn strict(name: &str, lhs: f64, rhs: f64, rel: f64, abs: f64) -> Self {
        let pass = lhs.is_finite() && rhs.is_finite() && lhs <= rhs * (1.0 + rel) + abs;
        Self {
            name: name.into(),
            mode: Mode::Strict,
            lhs,
            rhs,
            ratio: Self::ratio_of(lhs, rhs),
            status: if pass { Status::Pass } else { Status::Fail },
            t: None,
            note: format!("tolerance rel {rel:e} abs {abs:e}"),
        }
    }

    /// A ratio-only comparison; `0 / 0` is skipped.
    pub fn tracked(name: &str, lhs: f64, rhs: f64) -> Self {
        let ratio = Self::ratio_of(lhs, rhs);
        let (status, note) = if lhs == 0.0 && rhs == 0.0 {
            (Status::Skipped, "both sides vanish".to_string())
        } else if ratio.is_none() {
            (Status::Skipped, "right-hand side is zero or not finite".to_string())
        } else {
            (Status::Tracked, String::new())
        };
        Self {
            name: name.into(),
            mode: Mode::Tracked,
            lhs,
            rhs,
            ratio,
            status,
            t: None,
            note,
        }
    }

    pub fn skipped(name: &str, mode: Mode, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            mode,
            lhs: 0.0,
            rhs: 0.0,
            ratio: None,
            status: Status::Skipped,
            t: None,
            note: reason.into(),
        }
    }

    fn at(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    fn with_note(mut self, note: impl AsRef<str>) -> Self {
        if !note.as_ref().is_empty() {
            if !self.note.is_empty() {
                self.note.push_str("; ");
            }
            self.note.push_str(note.as_ref());
        }
        self
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Settings for the ledgers.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateOptions {
    pub nu: f64,
    pub advection: Advection,
    /// Exponent `epsilon_0` of the order reduction bound, in `(0, 1)`.
    pub eps0: f64,
    /// Exponent `delta` of the `Phi, Gamma` energy bound, in `(0, 1)`.
    pub delta: f64,
    pub s_values: Vec<f64>,
    /// Threshold separating the two `lambda(s)` cases.
    pub c0: f64,
    /// Lebesgue exponent `sigma > 3` of the interaction bound.
    pub sigma: f64,
    /// Interpolation weight `d` in `(0, 1)` of the interaction bound.
    pub d: f64,
    /// Relative truncation allowance of the energy inequality.
    pub energy_tol: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            nu: 1.0,
            advection: Advection::Upwind,
            eps0: 0.1,
            delta: 0.1,
            s_values: vec![4.0, 6.0, 10.0],
            c0: 0.5,
            sigma: 4.0,
            d: 0.5,
            energy_tol: 1e-3,
        }
    }
}

impl CertificateOptions {
    pub fn validate(&self) -> Result<()> {
        check_nu(self.nu)?;
        let unit = |v: f64, name: &str| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit(self.eps0, "eps0")?;
        unit(self.delta, "delta")?;
        unit(self.d, "d")?;
        if !(self.sigma > 3.0) {
            return Err(Error::Domain(format!("sigma must exceed 3, got {}", self.sigma)));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::Domain(format!("c0 must be positive, got {}", self.c0)));
        }
        if let Some(s) = self.s_values.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::Domain(format!("s values must be positive, got {s}")));
        }
        Ok(())
    }
}

/// Keeps the per-time strict comparison with the largest excess `lhs - rhs`.
fn worst_of(name: &str, sides: impl Iterator<Item = (f64, f64, f64)>, rel: f64, abs: f64) -> LedgerEntry {
    let mut worst: Option<(f64, f64, f64)> = None;
    let mut worst_excess = f64::NEG_INFINITY;
    for (t, lhs, rhs) in sides {
        let excess = lhs - rhs * (1.0 + rel);
        if excess > worst_excess || excess.is_nan() {
            worst_excess = if excess.is_nan() { f64::INFINITY } else { excess };
            worst = Some((t, lhs, rhs));
        }
    }
    match worst {
        Some((t, lhs, rhs)) => LedgerEntry::strict(name, lhs, rhs, rel, abs).at(t),
        None => LedgerEntry::skipped(name, Mode::Strict, "empty time series"),
    }
}

fn require(series: &TimeSeries) -> Result<()> {
    if series.is_empty() {
        return Err(Error::Contract("empty time series".into()));
    }
    Ok(())
}

/// `|v(t)|^2 + nu int (|grad v|^2 + (v_r^2 + v_phi^2)/r^2) <= 3 |f|_{2,1}^2 + 2 |v(0)|^2` at every recorded `t`.
pub fn energy_ledger(series: &TimeSeries, nu: f64, tol: f64) -> Result<LedgerEntry> {
    require(series)?;
    check_nu(nu)?;
    let times = &series.times;
    let dissipation: Vec<f64> = series.snapshots.iter().map(|s| s.diagnostics.grad_v_sq + s.diagnostics.metric_sq).collect();
    let diss = cumulative_integral(times, &dissipation);
    let f_int = cumulative_integral(times, &series.column(|d| d.f_l2));
    let v0 = series.snapshots[0].diagnostics.v_sq;
    let sides = (0..series.len()).map(|k| {
        let lhs = series.snapshots[k].diagnostics.v_sq + nu * diss[k];
        (times[k], lhs, 3.0 * f_int[k] * f_int[k] + 2.0 * v0)
    });
    Ok(worst_of("energy", sides, tol, 0.0))
}

/// `|u(t)|_inf <= sum dt |f0|_inf + |u(0)|_inf` at every recorded `t`.
pub fn max_principle_ledger(series: &TimeSeries, advection: Advection) -> Result<LedgerEntry> {
    require(series)?;
    let u0 = series.snapshots[0].diagnostics.u_inf;
    let sides = series
        .times
        .iter()
        .zip(&series.snapshots)
        .map(|(t, s)| (*t, s.diagnostics.u_inf, s.diagnostics.f0_inf_cum + u0));
    Ok(match advection {
        Advection::Upwind => worst_of("swirl_max_principle", sides, 0.0, 1e-10),
        Advection::Centered => {
            let e = worst_of("swirl_max_principle", sides, 1e-3, 0.0);
            let verdict = if e.failed() { "exceeds" } else { "within" };
            LedgerEntry {
                mode: Mode::Tracked,
                status: Status::Tracked,
                ..e
            }
            .with_note(format!("centered transport is not monotone; {verdict} 1e-3"))
        }
    })
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(*v))
}

fn integral(series: &TimeSeries, f: fn(&Diagnostics) -> f64) -> f64 {
    cumulative_integral(&series.times, &series.column(f)).last().copied().unwrap_or(0.0)
}

/// Stream function energy bounds, both against `D1^2`.
pub fn stream_energy_ledger(series: &TimeSeries, dc: &DataConstants) -> Result<[LedgerEntry; 2]> {
    require(series)?;
    let d1_sq = dc.d1 * dc.d1;
    let inst = sup(&series.column(|d| d.psi_h1_sq + d.psi1_sq));
    let integ = integral(series, |d| d.psi_z_h1_sq + d.psi1_z_sq);
    Ok([
        LedgerEntry::tracked("stream_energy", inst, d1_sq),
        LedgerEntry::tracked("stream_energy_z", integ, d1_sq),
    ])
}

/// `|I|` with `I = int_0^t int (v_phi / r) Phi Gamma`.
pub fn interaction_integral(series: &TimeSeries) -> Result<f64> {
    require(series)?;
    Ok(integral(series, |d| d.interaction))
}

/// `(t, X(t))` with `X^2 = |Phi|_V^2 + |Gamma|_V^2`.
pub fn x_trajectory(series: &TimeSeries) -> Vec<(f64, f64)> {
    series.times.iter().copied().zip(series.column(|d| d.x)).collect()
}

/// `X^2 <= (D2^2 / D*^2)(1 + |v_phi|_inf^(2 delta) R^(2 delta) / (delta^2 D2^2))(|I| + D3^2)`.
pub fn phi_gamma_energy_ledger(series: &TimeSeries, dc: &DataConstants, delta: f64, radius: f64) -> Result<LedgerEntry> {
    require(series)?;
    let x = series.snapshots.last().map_or(0.0, |s| s.diagnostics.x);
    let vphi = sup(&series.column(|d| d.vphi_inf));
    let i = interaction_integral(series)?.abs();
    // D2^2 / D*^2 = max(1, D2^2); without swirl (D2 = 0 forces v_phi = 0) the correction term is absent
    let correction = if dc.d2 > 0.0 {
        (vphi * radius).powf(2.0 * delta) / (delta * delta * dc.d2 * dc.d2)
    } else {
        0.0
    };
    let rhs = (dc.d2 * dc.d2).max(1.0) * (1.0 + correction) * (i + dc.d3 * dc.d3);
    Ok(LedgerEntry::tracked("phi_gamma_energy", x * x, rhs).with_note(format!("delta = {delta}")))
}

/// `|I| <= D2^d D0^(1-d) |Phi|^a0 |Gamma|^a0 |grad Phi|^(1-a0) |grad Gamma|^(1-a0)`
/// with `a0 = (sigma - 3)(1 - d) / (3 sigma)` and `D0 = sup_t |v_phi|_sigma`.
pub fn interaction_ledger(series: &TimeSeries, dc: &DataConstants, sigma: f64, d: f64) -> Result<LedgerEntry> {
    require(series)?;
    let name = "interaction";
    let Some(d0) = series
        .snapshots
        .iter()
        .map(|s| s.diagnostics.lebesgue_vphi(sigma))
        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
    else {
        return Ok(LedgerEntry::skipped(name, Mode::Tracked, format!("|v_phi|_{sigma} was not recorded")));
    };
    let a0 = (sigma - 3.0) * (1.0 - d) / (3.0 * sigma);
    let l2 = |f: fn(&Diagnostics) -> f64| -> Result<f64> { time_norm(&series.times, &series.column(f), 2.0) };
    let (phi, gamma) = (l2(|d| d.phi_l2)?, l2(|d| d.gamma_l2)?);
    let (gphi, ggamma) = (l2(|d| d.grad_phi_sq.sqrt())?, l2(|d| d.grad_gamma_sq.sqrt())?);
    let rhs = dc.d2.powf(d) * d0.powf(1.0 - d) * (phi * gamma).powf(a0) * (gphi * ggamma).powf(1.0 - a0);
    let lhs = interaction_integral(series)?.abs();
    Ok(LedgerEntry::tracked(name, lhs, rhs).with_note(format!("sigma = {sigma}, d = {d}, alpha0 = {a0:.6}")))
}

fn instantaneous_ratio(series: &TimeSeries, name: &str, lhs: fn(&Diagnostics) -> f64, rhs: fn(&Diagnostics) -> f64) -> LedgerEntry {
    // worst instant over the run
    let mut best: Option<(f64, f64, f64)> = None;
    let mut any_nonzero = false;
    for (t, s) in series.times.iter().zip(&series.snapshots) {
        let (l, r) = (lhs(&s.diagnostics), rhs(&s.diagnostics));
        any_nonzero |= l != 0.0;
        if r > 0.0 && best.is_none_or(|(_, bl, br)| l / r > bl / br) {
            best = Some((*t, l, r));
        }
    }
    match best {
        Some((t, l, r)) => LedgerEntry::tracked(name, l, r).at(t),
        None if !any_nonzero => LedgerEntry::tracked(name, 0.0, 0.0),
        None => LedgerEntry::skipped(name, Mode::Tracked, "right-hand side vanishes while the left does not"),
    }
}

/// Elliptic bounds of `psi1` by `Gamma`, taken at the worst recorded instant.
pub fn elliptic_ledgers(series: &TimeSeries) -> Result<Vec<LedgerEntry>> {
    require(series)?;
    Ok(vec![
        instantaneous_ratio(series, "h2", |d| d.h2_lhs, |d| d.gamma_l2 * d.gamma_l2),
        instantaneous_ratio(series, "h3_z", |d| d.h3a_lhs, |d| d.gamma_z_sq),
        instantaneous_ratio(series, "h3_full", |d| d.h3b_lhs, |d| d.gamma_z_sq),
        instantaneous_ratio(series, "h3_weighted", |d| d.h3_weighted_sq, |d| d.gamma_z_sq),
    ])
}

/// Energy bounds for `u_z` and `u_r` against `D4^2` and `D5^2`.
pub fn gradient_swirl_ledger(series: &TimeSeries, dc: &DataConstants) -> Result<[LedgerEntry; 2]> {
    require(series)?;
    let nu = dc.nu;
    let lhs_z = sup(&series.column(|d| d.u_z_sq)) + nu * integral(series, |d| d.grad_u_z_sq);
    let lhs_r = sup(&series.column(|d| d.u_r_sq)) + nu * integral(series, |d| d.u_rr_sq + d.u_rz_sq);
    Ok([
        LedgerEntry::tracked("swirl_gradient_z", lhs_z, dc.d4 * dc.d4),
        LedgerEntry::tracked("swirl_gradient_r", lhs_r, dc.d5 * dc.d5),
    ])
}

/// Order reduction bound for `omega_r`, `omega_z` and `omega_r / r = Phi`.
pub fn order_reduction_ledger(series: &TimeSeries, dc: &DataConstants, eps0: f64, radius: f64) -> Result<LedgerEntry> {
    require(series)?;
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::Domain(format!("eps0 must lie in (0, 1), got {eps0}")));
    }
    let v_sq = |l2: fn(&Diagnostics) -> f64, grad: fn(&Diagnostics) -> f64| {
        let v = sup(&series.column(l2)).sqrt() + integral(series, grad).max(0.0).sqrt();
        v * v
    };
    let lhs = v_sq(|d| d.omega_r_sq, |d| d.grad_omega_r_sq)
        + v_sq(|d| d.omega_z_sq, |d| d.grad_omega_z_sq)
        + integral(series, |d| d.phi_l2 * d.phi_l2);
    let vr = sup(&series.column(|d| d.vphi_inf)) * radius;
    let grad_gamma = integral(series, |d| d.grad_gamma_sq).max(0.0).sqrt();
    let rhs = (vr.powf(eps0) / eps0 + vr.powf(2.0 * eps0) / (eps0 * eps0)) * grad_gamma / dc.nu + dc.d6 * dc.d6;
    Ok(LedgerEntry::tracked("order_reduction", lhs, rhs).with_note(format!("eps0 = {eps0}")))
}

/// `|v_phi(t)|_inf <= (D2 / sqrt(nu)) D1^(1/4) X(t)^(3/4) + D7` with constants on `[0, t]`.
pub fn vphi_sup_ledger(series: &TimeSeries, nu: f64) -> Result<LedgerEntry> {
    require(series)?;
    let mut sides = Vec::with_capacity(series.len());
    for k in 0..series.len() {
        let dc = data_constants_upto(series, k, nu)?;
        let d = &series.snapshots[k].diagnostics;
        let rhs = dc.d2 / nu.sqrt() * dc.d1.powf(0.25) * d.x.powf(0.75) + dc.d7;
        sides.push((series.times[k], d.vphi_inf, rhs));
    }
    Ok(worst_of("vphi_sup", sides.into_iter(), 0.0, 1e-12))
}

/// `|v_phi(t)|_s <= c0^(1-s) (D1^2 + |f_phi|_{s,1}) + |v_phi(0)|_s` with `c0 = lambda(s)`.
pub fn vphi_s_norm_ledger(series: &TimeSeries, dc: &DataConstants, s: f64, grid: &Grid) -> Result<LedgerEntry> {
    require(series)?;
    let name = format!("vphi_s_norm_{s}");
    let lambda = match lambda_s(series, s, grid) {
        Ok(l) => l,
        Err(Error::Domain(reason)) => return Ok(LedgerEntry::skipped(&name, Mode::Tracked, reason)),
        Err(e) => return Err(e),
    };
    let column = |pick: fn(&Diagnostics, f64) -> Option<f64>| -> Result<Vec<f64>> {
        series
            .snapshots
            .iter()
            .map(|snap| pick(&snap.diagnostics, s).ok_or_else(|| Error::Contract(format!("|.|_{s} was not recorded"))))
            .collect()
    };
    let vphi = match column(|d, s| d.lebesgue_vphi(s)) {
        Ok(v) => v,
        Err(e) => return Ok(LedgerEntry::skipped(&name, Mode::Tracked, e.to_string())),
    };
    let fphi = column(|d, s| d.lebesgue_fphi(s))?;
    let f_s1 = time_norm(&series.times, &fphi, 1.0)?;
    let rhs = lambda.powf(1.0 - s) * (dc.d1 * dc.d1 + f_s1) + vphi[0];
    Ok(LedgerEntry::tracked(&name, sup(&vphi), rhs).with_note(format!("c0 = lambda({s}) = {lambda:.6}")))
}

/// Both sides of the Hardy inequality on one radial profile, for `beta = 1` and `beta = 0` with `p = 2`.
pub fn hardy_ledger(samples: &[f64], radius: f64) -> Result<[LedgerEntry; 2]> {
    let entry = |beta: f64| -> Result<LedgerEntry> {
        let (lhs, rhs) = hardy_ratio(samples, radius, beta, 2.0)?;
        Ok(LedgerEntry::strict(&format!("hardy_beta{beta}"), lhs, rhs, 1e-12, 0.0))
    };
    Ok([entry(1.0)?, entry(0.0)?])
}

/// Outcome of `M_{n+1} = kappa M_n^3 + G2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub kappa: f64,
    pub g2: f64,
    /// Last iterate.
    pub m: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    /// `G2 > (kappa + 1)^(-3/2)`.
    pub hypothesis_violated: bool,
    /// `|M - (kappa M^3 + G2)|` at the last iterate.
    pub residual: f64,
    /// Ratio of the last two nonzero increments.
    pub contraction: Option<f64>,
}

pub const FIXED_POINT_STEP_TOL: f64 = 1e-14;
pub const FIXED_POINT_MAX_ITER: usize = 1_000_000;

pub fn small_data_fixed_point(kappa: f64, g2: f64) -> Result<FixedPointReport> {
    if !(kappa >= 0.0 && g2 >= 0.0 && kappa.is_finite() && g2.is_finite()) {
        return Err(Error::Domain(format!("kappa and G2 must be finite and nonnegative, got {kappa}, {g2}")));
    }
    let bound = if kappa > 0.0 { 10.0 / kappa.sqrt() } else { f64::INFINITY };
    let mut m = g2;
    let (mut prev_inc, mut contraction) = (None::<f64>, None);
    let mut report = FixedPointReport {
        kappa,
        g2,
        m,
        iterations: 0,
        converged: false,
        diverged: false,
        hypothesis_violated: g2 > (kappa + 1.0).powf(-1.5),
        residual: f64::INFINITY,
        contraction: None,
    };
    for n in 1..=FIXED_POINT_MAX_ITER {
        let next = kappa * m * m * m + g2;
        let inc = (next - m).abs();
        if let Some(p) = prev_inc {
            if p > 0.0 && inc > 0.0 {
                contraction = Some(inc / p);
            }
        }
        prev_inc = Some(inc);
        m = next;
        report.iterations = n;
        if !m.is_finite() || m > bound {
            report.diverged = true;
            break;
        }
        if inc <= FIXED_POINT_STEP_TOL {
            report.converged = true;
            break;
        }
    }
    report.m = m;
    report.residual = (m - (kappa * m * m * m + g2)).abs();
    report.contraction = contraction;
    Ok(report)
}

/// `|v_phi|_{inf, Omega^t} <= 1 / c1` and `<= M`, strict only under the smallness hypothesis.
pub fn small_data_ledger(series: &TimeSeries, dc: &DataConstants) -> Result<(LedgerEntry, FixedPointReport)> {
    require(series)?;
    let fp = small_data_fixed_point(dc.kappa, dc.g2)?;
    let lhs = sup(&series.column(|d| d.vphi_inf));
    let name = "small_data_sup";
    if !dc.small_data_hypothesis() {
        return Ok((
            LedgerEntry::skipped(
                name,
                Mode::Strict,
                format!("smallness hypothesis fails: G2 = {:.6e} > (kappa + 1)^(-3/2) = {:.6e}", dc.g2, (dc.kappa + 1.0).powf(-1.5)),
            ),
            fp,
        ));
    }
    let mut entry = LedgerEntry::strict(name, lhs, 1.0 / dc.c1, 0.0, 1e-12);
    if fp.converged && lhs > fp.m * (1.0 + 1e-12) {
        entry.status = Status::Fail;
    }
    let note = format!("M = {:.6e}, G2 = {:.6e}, kappa = {:.6e}", fp.m, dc.g2, dc.kappa);
    Ok((entry.with_note(note), fp))
}

/// Which side of `c0` each `lambda(s)` falls on.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaCase {
    pub s: f64,
    pub lambda: Option<f64>,
    /// `lambda(s) >= c0`.
    pub at_least_c0: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub constants: DataConstants,
    pub options: CertificateOptions,
    pub entries: Vec<LedgerEntry>,
    pub x: Vec<(f64, f64)>,
    pub lambdas: Vec<LambdaCase>,
    pub fixed_point: Option<FixedPointReport>,
}

impl CertificateReport {
    pub fn strict_failures(&self) -> Vec<&LedgerEntry> {
        self.entries.iter().filter(|e| e.failed()).collect()
    }

    pub fn all_strict_pass(&self) -> bool {
        self.strict_failures().is_empty()
    }

    pub fn entry(&self, name: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn record(entries: &mut Vec<LedgerEntry>, name: &str, mode: Mode, result: Result<Vec<LedgerEntry>>) {
    match result {
        Ok(list) => entries.extend(list),
        Err(e) => entries.push(LedgerEntry::skipped(name, mode, format!("error: {e}"))),
    }
}

/// Runs every ledger over a completed series. Sub-ledger errors become skipped entries.
pub fn certificate_report(series: &TimeSeries, grid: &Grid, options: &CertificateOptions) -> Result<CertificateReport> {
    require(series)?;
    options.validate()?;
    let nu = options.nu;
    let dc = data_constants(series, nu)?;
    let mut entries = Vec::new();
    record(&mut entries, "energy", Mode::Strict, energy_ledger(series, nu, options.energy_tol).map(|e| vec![e]));
    record(
        &mut entries,
        "swirl_max_principle",
        Mode::Strict,
        max_principle_ledger(series, options.advection).map(|e| vec![e]),
    );
    record(&mut entries, "vphi_sup", Mode::Strict, vphi_sup_ledger(series, nu).map(|e| vec![e]));
    let hardy = match series.last_state() {
        Some(state) => {
            let j = grid.nz / 2;
            let profile: Vec<f64> = (0..grid.nr).map(|i| state.u.at(i, j)).collect();
            hardy_ledger(&profile, grid.radius).map(Vec::from)
        }
        None => Ok(vec![LedgerEntry::skipped("hardy", Mode::Strict, "no stored state")]),
    };
    record(&mut entries, "hardy", Mode::Strict, hardy);
    let mut fixed_point = None;
    match small_data_ledger(series, &dc) {
        Ok((e, fp)) => {
            entries.push(e);
            fixed_point = Some(fp);
        }
        Err(e) => entries.push(LedgerEntry::skipped("small_data_sup", Mode::Strict, format!("error: {e}"))),
    }
    record(&mut entries, "stream_energy", Mode::Tracked, stream_energy_ledger(series, &dc).map(Vec::from));
    record(
        &mut entries,
        "phi_gamma_energy",
        Mode::Tracked,
        phi_gamma_energy_ledger(series, &dc, options.delta, grid.radius).map(|e| vec![e]),
    );
    record(
        &mut entries,
        "interaction",
        Mode::Tracked,
        interaction_ledger(series, &dc, options.sigma, options.d).map(|e| vec![e]),
    );
    record(&mut entries, "elliptic", Mode::Tracked, elliptic_ledgers(series));
    record(&mut entries, "swirl_gradient", Mode::Tracked, gradient_swirl_ledger(series, &dc).map(Vec::from));
    record(
        &mut entries,
        "order_reduction",
        Mode::Tracked,
        order_reduction_ledger(series, &dc, options.eps0, grid.radius).map(|e| vec![e]),
    );
    for &s in &options.s_values {
        let name = format!("vphi_s_norm_{s}");
        record(&mut entries, &name, Mode::Tracked, vphi_s_norm_ledger(series, &dc, s, grid).map(|e| vec![e]));
    }
    let lambdas = options
        .s_values
        .iter()
        .map(|&s| {
            let lambda = lambda_s(series, s, grid).ok();
            LambdaCase {
                s,
                lambda,
                at_least_c0: lambda.map(|l| l >= options.c0),
            }
        })
        .collect();
    Ok(CertificateReport {
        constants: dc,
        options: options.clone(),
        entries,
        x: x_trajectory(series),
        lambdas,
        fixed_point,
    })
}
