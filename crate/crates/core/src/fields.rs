//! Field containers and second-order finite differences in `(r, z)`.
//!
//! Every [`ScalarField`] carries a [`Closure`]: how its ghost values are
//! filled at the axis (by parity), at the lateral wall and at the lids.
//! Derivatives are centered everywhere; ghosts supply the missing neighbour.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Behaviour of a field as `r -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// `c0 + c2 r^2 + ...`
    Even,
    /// `c1 r + c3 r^3 + ...`
    Odd,
    /// `c2 r^2 + c3 r^3 + ...` (the swirl).
    Odd2,
}

impl Parity {
    /// Parity of the radial derivative.
    pub fn d_r(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::Odd2 => Parity::Odd,
        }
    }
}

/// Ghost rule at an outer boundary (wall `r = R` or lids `z = +-a`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// Field vanishes on the face; cubic extrapolation through the zero.
    Dirichlet,
    /// Normal derivative vanishes; mirror.
    Neumann,
    /// No condition; cubic extrapolation from the interior.
    Extrapolate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Closure {
    pub axis: Parity,
    pub wall: Edge,
    pub lids: Edge,
}

impl Closure {
    pub const fn new(axis: Parity, wall: Edge, lids: Edge) -> Self {
        Self { axis, wall, lids }
    }
    pub const fn free(axis: Parity) -> Self {
        Self::new(axis, Edge::Extrapolate, Edge::Extrapolate)
    }

    pub const SWIRL: Closure = Closure::new(Parity::Odd2, Edge::Dirichlet, Edge::Neumann);
    pub const GAMMA: Closure = Closure::new(Parity::Even, Edge::Dirichlet, Edge::Dirichlet);
    pub const PHI: Closure = Closure::GAMMA;
    pub const PSI1: Closure = Closure::GAMMA;
    pub const V_R: Closure = Closure::new(Parity::Odd, Edge::Dirichlet, Edge::Neumann);
    pub const V_PHI: Closure = Closure::new(Parity::Odd, Edge::Dirichlet, Edge::Neumann);
    pub const V_Z: Closure = Closure::new(Parity::Even, Edge::Neumann, Edge::Dirichlet);
    pub const OMEGA_R: Closure = Closure::new(Parity::Odd, Edge::Dirichlet, Edge::Dirichlet);
    pub const OMEGA_PHI: Closure = Closure::OMEGA_R;
    pub const OMEGA_Z: Closure = Closure::new(Parity::Even, Edge::Extrapolate, Edge::Neumann);
}

// Ghost weights at +h/2 beyond a face, from cells at -h/2, -3h/2, ...
const DIRICHLET_GHOST: [f64; 3] = [-3.0, 1.0, -0.2];
const EXTRAP_GHOST: [f64; 4] = [4.0, -6.0, 4.0, -1.0];
// Face value from cells at -h/2, -3h/2, -5h/2, -7h/2.
const FACE_EXTRAP: [f64; 4] = [2.1875, -2.1875, 1.3125, -0.3125];

fn edge_ghost(edge: Edge, inner: [f64; 4]) -> f64 {
    match edge {
        Edge::Dirichlet => {
            DIRICHLET_GHOST[0] * inner[0] + DIRICHLET_GHOST[1] * inner[1] + DIRICHLET_GHOST[2] * inner[2]
        }
        Edge::Neumann => inner[0],
        Edge::Extrapolate => EXTRAP_GHOST
            .iter()
            .zip(inner.iter())
            .map(|(w, f)| w * f)
            .sum(),
    }
}

fn edge_face(edge: Edge, inner: [f64; 4]) -> f64 {
    match edge {
        Edge::Dirichlet => 0.0,
        _ => FACE_EXTRAP.iter().zip(inner.iter()).map(|(w, f)| w * f).sum(),
    }
}

/// Scalar samples at cell centers together with their ghost closure.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub closure: Closure,
    nr: usize,
    nz: usize,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>, closure: Closure) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            closure,
            nr: grid.nr,
            nz: grid.nz,
        })
    }

    pub fn zeros(grid: &Grid, closure: Closure) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            closure,
            nr: grid.nr,
            nz: grid.nz,
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &Grid, closure: Closure, f: F) -> Self {
        Self {
            values: grid.sample(f),
            closure,
            nr: grid.nr,
            nz: grid.nz,
        }
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>, closure: Closure) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            values,
            closure,
            nr: grid.nr,
            nz: grid.nz,
        }
    }

    pub fn parity(&self) -> Parity {
        self.closure.axis
    }

    pub fn with_closure(mut self, closure: Closure) -> Self {
        self.closure = closure;
        self
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nr, self.nz)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nz + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Value at `(i, j)` where one index may step one cell outside the grid.
    pub fn value_ext(&self, i: isize, j: isize) -> f64 {
        let (nr, nz) = (self.nr as isize, self.nz as isize);
        if j < 0 || j >= nz {
            let step: isize = if j < 0 { 1 } else { -1 };
            let first = if j < 0 { 0 } else { nz - 1 };
            let inner = [0, 1, 2, 3].map(|k| self.value_ext(i, first + step * k));
            return edge_ghost(self.closure.lids, inner);
        }
        if i < 0 {
            let mirror = self.value_ext(-1 - i, j);
            return match self.closure.axis {
                Parity::Even | Parity::Odd2 => mirror,
                Parity::Odd => -mirror,
            };
        }
        if i >= nr {
            let inner = [0, 1, 2, 3].map(|k| self.at((nr - 1 - k) as usize, j as usize));
            return edge_ghost(self.closure.wall, inner);
        }
        self.at(i as usize, j as usize)
    }

    /// Like [`value_ext`](Self::value_ext) but with ghosts that never leave the
    /// range of the interior: zero-value edges use the negated mirror, all
    /// others the plain mirror. Used by monotone transport.
    pub fn transport_ext(&self, i: isize, j: isize) -> f64 {
        let (nr, nz) = (self.nr as isize, self.nz as isize);
        let flip = |edge: Edge| if edge == Edge::Dirichlet { -1.0 } else { 1.0 };
        if j < 0 {
            return flip(self.closure.lids) * self.at(i as usize, (-1 - j) as usize);
        }
        if j >= nz {
            return flip(self.closure.lids) * self.at(i as usize, (2 * nz - 1 - j) as usize);
        }
        if i < 0 {
            let s = if self.closure.axis == Parity::Odd { -1.0 } else { 1.0 };
            return s * self.at((-1 - i) as usize, j as usize);
        }
        if i >= nr {
            return flip(self.closure.wall) * self.at((2 * nr - 1 - i) as usize, j as usize);
        }
        self.at(i as usize, j as usize)
    }

    fn map_stencil<F: Fn(&Self, isize, isize) -> f64>(&self, grid: &Grid, closure: Closure, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nr as isize {
            for j in 0..grid.nz as isize {
                values.push(f(self, i, j));
            }
        }
        Self::from_raw(grid, values, closure)
    }

    /// `d/dr`, centered. The result has flipped parity and free outer edges.
    pub fn d_r(&self, grid: &Grid) -> Self {
        let h2 = 2.0 * grid.dr;
        self.map_stencil(grid, Closure::free(self.parity().d_r()), |f, i, j| {
            (f.value_ext(i + 1, j) - f.value_ext(i - 1, j)) / h2
        })
    }

    /// `d/dz`, centered. Same parity, free outer edges.
    pub fn d_z(&self, grid: &Grid) -> Self {
        let h2 = 2.0 * grid.dz;
        self.map_stencil(grid, Closure::free(self.parity()), |f, i, j| {
            (f.value_ext(i, j + 1) - f.value_ext(i, j - 1)) / h2
        })
    }

    pub fn d_rr(&self, grid: &Grid) -> Self {
        let h2 = grid.dr * grid.dr;
        let parity = match self.parity() {
            Parity::Odd => Parity::Odd,
            _ => Parity::Even,
        };
        self.map_stencil(grid, Closure::free(parity), |f, i, j| {
            (f.value_ext(i + 1, j) - 2.0 * f.value_ext(i, j) + f.value_ext(i - 1, j)) / h2
        })
    }

    pub fn d_zz(&self, grid: &Grid) -> Self {
        let h2 = grid.dz * grid.dz;
        self.map_stencil(grid, Closure::free(self.parity()), |f, i, j| {
            (f.value_ext(i, j + 1) - 2.0 * f.value_ext(i, j) + f.value_ext(i, j - 1)) / h2
        })
    }

    /// Pointwise `r^k * f` (negative `k` allowed; cell centers never sit at `r = 0`).
    pub fn times_r_pow(&self, grid: &Grid, k: i32, closure: Closure) -> Self {
        let mut values = self.values.clone();
        for i in 0..grid.nr {
            let w = grid.r_centers[i].powi(k);
            for v in &mut values[i * grid.nz..(i + 1) * grid.nz] {
                *v *= w;
            }
        }
        Self::from_raw(grid, values, closure)
    }

    /// Values extrapolated to the axis, one per axial cell.
    pub fn axis_trace(&self) -> Vec<f64> {
        (0..self.nz)
            .map(|j| match self.parity() {
                Parity::Even => (9.0 * self.at(0, j) - self.at(1, j)) / 8.0,
                Parity::Odd | Parity::Odd2 => 0.0,
            })
            .collect()
    }

    /// Values extrapolated to the wall `r = R`, one per axial cell.
    pub fn wall_trace(&self) -> Vec<f64> {
        let nr = self.nr;
        (0..self.nz)
            .map(|j| edge_face(self.closure.wall, [0, 1, 2, 3].map(|k| self.at(nr - 1 - k, j))))
            .collect()
    }

    /// Values extrapolated to the lids, `(bottom, top)`, one per radial cell.
    pub fn lid_traces(&self) -> (Vec<f64>, Vec<f64>) {
        let nz = self.nz;
        let bottom = (0..self.nr)
            .map(|i| edge_face(self.closure.lids, [0, 1, 2, 3].map(|k| self.at(i, k))))
            .collect();
        let top = (0..self.nr)
            .map(|i| edge_face(self.closure.lids, [0, 1, 2, 3].map(|k| self.at(i, nz - 1 - k))))
            .collect();
        (bottom, top)
    }
}

/// Pointwise linear combination helper: `alpha * f + beta * g` with `f`'s closure.
pub fn axpby(alpha: f64, f: &ScalarField, beta: f64, g: &ScalarField) -> ScalarField {
    let mut out = f.clone();
    for (o, b) in out.values.iter_mut().zip(&g.values) {
        *o = alpha * *o + beta * b;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub v_r: ScalarField,
    pub v_phi: ScalarField,
    pub v_z: ScalarField,
}

impl VelocityField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            v_r: ScalarField::zeros(grid, Closure::V_R),
            v_phi: ScalarField::zeros(grid, Closure::V_PHI),
            v_z: ScalarField::zeros(grid, Closure::V_Z),
        }
    }

    /// Largest `|v_r| / dr + |v_z| / dz` over the grid.
    pub fn advective_rate(&self, grid: &Grid) -> f64 {
        self.v_r
            .values
            .iter()
            .zip(&self.v_z.values)
            .fold(0.0, |m, (a, b)| m.max(a.abs() / grid.dr + b.abs() / grid.dz))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VorticityField {
    pub omega_r: ScalarField,
    pub omega_phi: ScalarField,
    pub omega_z: ScalarField,
}

/// One time level of the closed system. `u` and `gamma` are evolved; the
/// rest is derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: ScalarField,
    pub gamma: ScalarField,
    pub psi1: ScalarField,
    pub v: VelocityField,
    pub phi: ScalarField,
}

/// Sampled body force plus the derived sources.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub t: f64,
    pub f_r: ScalarField,
    pub f_phi: ScalarField,
    pub f_z: ScalarField,
    /// `(curl f)_phi / r`, the source of the rescaled azimuthal vorticity.
    pub fbar_phi: ScalarField,
}

impl Forcing {
    pub fn zero(grid: &Grid, t: f64) -> Self {
        Self {
            t,
            f_r: ScalarField::zeros(grid, Closure::free(Parity::Odd)),
            f_phi: ScalarField::zeros(grid, Closure::free(Parity::Odd)),
            f_z: ScalarField::zeros(grid, Closure::free(Parity::Even)),
            fbar_phi: ScalarField::zeros(grid, Closure::free(Parity::Even)),
        }
    }

    /// Builds the force with a known `(curl f)_phi / r` instead of the discrete one.
    pub fn with_fbar_phi(t: f64, f_r: ScalarField, f_phi: ScalarField, f_z: ScalarField, fbar_phi: ScalarField) -> Self {
        Self {
            t,
            f_r,
            f_phi,
            f_z,
            fbar_phi,
        }
    }

    /// Builds the force from components; `fbar_phi` is taken from the discrete curl.
    pub fn from_components(grid: &Grid, t: f64, f_r: ScalarField, f_phi: ScalarField, f_z: ScalarField) -> Self {
        let mut out = Self {
            t,
            f_r,
            f_phi,
            f_z,
            fbar_phi: ScalarField::zeros(grid, Closure::free(Parity::Even)),
        };
        let (_, f_phi_curl, _) = out.curl(grid);
        out.fbar_phi = f_phi_curl.times_r_pow(grid, -1, Closure::free(Parity::Even));
        out
    }

    pub fn is_zero(&self) -> bool {
        [&self.f_r, &self.f_phi, &self.f_z, &self.fbar_phi]
            .iter()
            .all(|f| f.values.iter().all(|v| *v == 0.0))
    }

    /// `f0 = r f_phi`, the swirl source.
    pub fn f0(&self, grid: &Grid) -> ScalarField {
        self.f_phi.times_r_pow(grid, 1, Closure::free(Parity::Odd2))
    }

    /// `f1 = f_phi / r`.
    pub fn f1(&self, grid: &Grid) -> ScalarField {
        self.f_phi.times_r_pow(grid, -1, Closure::free(Parity::Even))
    }

    /// Discrete `curl f = (-f_phi,z, f_r,z - f_z,r, (1/r)(r f_phi),r)`.
    pub fn curl(&self, grid: &Grid) -> (ScalarField, ScalarField, ScalarField) {
        let c_r = self.f_phi.d_z(grid).scaled(-1.0);
        let c_phi = axpby(1.0, &self.f_r.d_z(grid), -1.0, &self.f_z.d_r(grid))
            .with_closure(Closure::free(Parity::Odd));
        let c_z = axpby(1.0, &self.f_phi.d_r(grid), 1.0, &self.f_phi.times_r_pow(grid, -1, Closure::free(Parity::Even)));
        (c_r, c_phi, c_z)
    }

    /// `(curl f)_r / r`.
    pub fn fbar_r(&self, grid: &Grid) -> ScalarField {
        let (c_r, _, _) = self.curl(grid);
        c_r.times_r_pow(grid, -1, Closure::free(Parity::Even))
    }
}

/// Meridional velocity from the modified stream function:
/// `v_r = -r psi1_z`, `v_z = r psi1_r + 2 psi1`. `v_phi` is left zero.
pub fn velocity_from_stream(psi1: &ScalarField, grid: &Grid) -> Result<VelocityField> {
    if psi1.parity() != Parity::Even {
        return Err(Error::Contract(format!(
            "modified stream function must be even at the axis, got {:?}",
            psi1.parity()
        )));
    }
    let psi_z = psi1.d_z(grid);
    let psi_r = psi1.d_r(grid);
    let mut v_r = psi_z.times_r_pow(grid, 1, Closure::V_R);
    v_r.values.iter_mut().for_each(|v| *v = -*v);
    let r_psi_r = psi_r.times_r_pow(grid, 1, Closure::V_Z);
    let v_z = axpby(1.0, &r_psi_r, 2.0, psi1).with_closure(Closure::V_Z);
    Ok(VelocityField {
        v_r,
        v_phi: ScalarField::zeros(grid, Closure::V_PHI),
        v_z,
    })
}

/// `omega_r = -v_phi,z`, `omega_phi = v_r,z - v_z,r`, `omega_z = v_phi,r + v_phi / r`.
pub fn vorticity_from_velocity(v: &VelocityField, grid: &Grid) -> Result<VorticityField> {
    if v.v_r.parity() != Parity::Odd || v.v_phi.parity() != Parity::Odd || v.v_z.parity() != Parity::Even {
        return Err(Error::Contract(
            "velocity components must be tagged (odd, odd, even) at the axis".into(),
        ));
    }
    let omega_r = v.v_phi.d_z(grid).scaled(-1.0).with_closure(Closure::OMEGA_R);
    let omega_phi = axpby(1.0, &v.v_r.d_z(grid), -1.0, &v.v_z.d_r(grid)).with_closure(Closure::OMEGA_PHI);
    let over_r = v.v_phi.times_r_pow(grid, -1, Closure::OMEGA_Z);
    let omega_z = axpby(1.0, &v.v_phi.d_r(grid), 1.0, &over_r).with_closure(Closure::OMEGA_Z);
    Ok(VorticityField {
        omega_r,
        omega_phi,
        omega_z,
    })
}

/// `Phi = omega_r / r = -u_z / r^2`, computed from the swirl.
pub fn phi_from_swirl(u: &ScalarField, grid: &Grid) -> Result<ScalarField> {
    if u.parity() != Parity::Odd2 {
        return Err(Error::Contract(format!(
            "swirl must carry odd2 parity, got {:?}",
            u.parity()
        )));
    }
    let mut phi = u.d_z(grid).times_r_pow(grid, -2, Closure::PHI);
    phi.values.iter_mut().for_each(|v| *v = -*v);
    Ok(phi)
}

/// `omega_z = (1/r) u_r` evaluated from the swirl.
pub fn omega_z_from_swirl(u: &ScalarField, grid: &Grid) -> ScalarField {
    u.d_r(grid).times_r_pow(grid, -1, Closure::OMEGA_Z)
}

/// `(1/r)(r v_r)_r + v_z,z`.
pub fn divergence(v: &VelocityField, grid: &Grid) -> ScalarField {
    let mut out = Vec::with_capacity(grid.len());
    let vr = &v.v_r;
    for i in 0..grid.nr as isize {
        let r = grid.r_centers[i as usize];
        let (rp, rm) = (r + grid.dr, r - grid.dr);
        for j in 0..grid.nz as isize {
            let flux_r = (rp * vr.value_ext(i + 1, j) - rm * vr.value_ext(i - 1, j)) / (2.0 * grid.dr * r);
            let dz = (v.v_z.value_ext(i, j + 1) - v.v_z.value_ext(i, j - 1)) / (2.0 * grid.dz);
            out.push(flux_r + dz);
        }
    }
    ScalarField::from_raw(grid, out, Closure::free(Parity::Even))
}

/// Least-squares fit of the leading axis expansion on the innermost samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub parity: Parity,
    /// Leading two coefficients per axial cell.
    pub coefficients: Vec<[f64; 2]>,
    /// Largest absolute misfit at the fitted samples.
    pub max_residual: f64,
}

pub fn axis_expansion_check(f: &ScalarField, grid: &Grid) -> Result<ExpansionReport> {
    if grid.nr < 3 {
        return Err(Error::Domain("need at least three radial samples".into()));
    }
    let powers = match f.parity() {
        Parity::Even => [0, 2],
        Parity::Odd => [1, 3],
        Parity::Odd2 => [2, 3],
    };
    let rs = &grid.r_centers[..3];
    let mut coefficients = Vec::with_capacity(grid.nz);
    let mut max_residual: f64 = 0.0;
    for j in 0..grid.nz {
        let basis: Vec<[f64; 2]> = rs.iter().map(|r| [r.powi(powers[0]), r.powi(powers[1])]).collect();
        let ys: Vec<f64> = (0..3).map(|i| f.at(i, j)).collect();
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (b, y) in basis.iter().zip(&ys) {
            a11 += b[0] * b[0];
            a12 += b[0] * b[1];
            a22 += b[1] * b[1];
            b1 += b[0] * y;
            b2 += b[1] * y;
        }
        let det = a11 * a22 - a12 * a12;
        let c0 = (b1 * a22 - b2 * a12) / det;
        let c1 = (a11 * b2 - a12 * b1) / det;
        for (b, y) in basis.iter().zip(&ys) {
            max_residual = max_residual.max((c0 * b[0] + c1 * b[1] - y).abs());
        }
        coefficients.push([c0, c1]);
    }
    Ok(ExpansionReport {
        parity: f.parity(),
        coefficients,
        max_residual,
    })
}
