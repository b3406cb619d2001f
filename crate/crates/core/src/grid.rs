//! Cell-centered discretization of the meridional half-section
//! `(0, R) x (-a, a)` with midpoint quadrature for the measure `2 pi r dr dz`.
//!
//! Samples are stored r-major: index `i * nz + j` is the cell at `(r_i, z_j)`.
//! No sample sits on the axis; the smallest radius is `dr / 2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub radius: f64,
    pub half_height: f64,
    pub nr: usize,
    pub nz: usize,
    pub dr: f64,
    pub dz: f64,
    pub r_centers: Vec<f64>,
    pub z_centers: Vec<f64>,
    /// `2 pi r_i dr dz`, one per radial index (independent of `j`).
    pub radial_weights: Vec<f64>,
}

impl Grid {
    pub fn new(radius: f64, half_height: f64, nr: usize, nz: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::config("R", format!("radius must be positive, got {radius}")));
        }
        if !(half_height > 0.0) || !half_height.is_finite() {
            return Err(Error::config(
                "a",
                format!("half-height must be positive, got {half_height}"),
            ));
        }
        if nr < 4 {
            return Err(Error::config("Nr", format!("need at least 4 radial cells, got {nr}")));
        }
        if nz < 4 {
            return Err(Error::config("Nz", format!("need at least 4 axial cells, got {nz}")));
        }
        let dr = radius / nr as f64;
        let dz = 2.0 * half_height / nz as f64;
        let r_centers: Vec<f64> = (0..nr).map(|i| (i as f64 + 0.5) * dr).collect();
        let z_centers = (0..nz)
            .map(|j| -half_height + (j as f64 + 0.5) * dz)
            .collect();
        let radial_weights = r_centers.iter().map(|r| 2.0 * PI * r * dr * dz).collect();
        Ok(Self {
            radius,
            half_height,
            nr,
            nz,
            dr,
            dz,
            r_centers,
            z_centers,
            radial_weights,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    /// Radius of the face between cells `i - 1` and `i` (`face_r(0) == 0`).
    #[inline]
    pub fn face_r(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    /// Volume weight of cell `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.radial_weights[i]
    }

    /// Exact volume of the cylinder, `2 pi a R^2`.
    pub fn volume(&self) -> f64 {
        2.0 * PI * self.half_height * self.radius * self.radius
    }

    /// Samples `f(r, z)` at every cell center.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &r in &self.r_centers {
            for &z in &self.z_centers {
                out.push(f(r, z));
            }
        }
        out
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: n,
            });
        }
        Ok(())
    }

    /// Midpoint quadrature of `\int_Omega f dx`.
    pub fn integrate(&self, field: &[f64]) -> Result<f64> {
        self.check_len(field.len())?;
        Ok(self.integrate_unchecked(field))
    }

    pub(crate) fn integrate_unchecked(&self, field: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.nr {
            let row = &field[i * self.nz..(i + 1) * self.nz];
            let s: f64 = row.iter().sum();
            total += s * self.radial_weights[i];
        }
        total
    }

    /// Integral over the lateral wall `r = R` of values given per axial cell.
    pub fn integrate_wall(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nz {
            return Err(Error::Dimension {
                expected: self.nz,
                got: values.len(),
            });
        }
        Ok(2.0 * PI * self.radius * self.dz * values.iter().sum::<f64>())
    }

    /// Integral over both lids `z = +-a` of values given per radial cell
    /// (`bottom` then `top`).
    pub fn integrate_lids(&self, bottom: &[f64], top: &[f64]) -> Result<f64> {
        for v in [bottom, top] {
            if v.len() != self.nr {
                return Err(Error::Dimension {
                    expected: self.nr,
                    got: v.len(),
                });
            }
        }
        let mut total = 0.0;
        for i in 0..self.nr {
            total += 2.0 * PI * self.r_centers[i] * self.dr * (bottom[i] + top[i]);
        }
        Ok(total)
    }

    /// Line integral `\int_{-a}^{a} g dz` of per-axial-cell values.
    pub fn integrate_dz(&self, values: &[f64]) -> f64 {
        self.dz * values.iter().sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid_layout() {
        let g = Grid::new(1.0, 1.0, 4, 4).unwrap();
        assert_eq!(g.dr, 0.25);
        assert_eq!(g.r_centers, vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.z_centers[0], -0.75);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let err = Grid::new(0.0, 1.0, 8, 8).unwrap_err().to_string();
        assert!(err.contains("R"), "{err}");
        let err = Grid::new(1.0, -1.0, 8, 8).unwrap_err().to_string();
        assert!(err.contains(": a:") || err.contains("a:"), "{err}");
        let err = Grid::new(1.0, 1.0, 3, 8).unwrap_err().to_string();
        assert!(err.contains("Nr"), "{err}");
        let err = Grid::new(1.0, 1.0, 8, 2).unwrap_err().to_string();
        assert!(err.contains("Nz"), "{err}");
    }

    #[test]
    fn constant_quadrature_is_exact() {
        for (nr, nz) in [(4, 4), (7, 13), (32, 16)] {
            let g = Grid::new(1.0, 1.0, nr, nz).unwrap();
            let v = g.integrate(&vec![1.0; g.len()]).unwrap();
            assert!((v - 2.0 * PI).abs() < 1e-12 * 2.0 * PI);
        }
        let g = Grid::new(2.0, 0.5, 8, 8).unwrap();
        // direct summation of the weights against the closed-form volume
        let direct: f64 = (0..g.nr).map(|i| g.weight(i) * g.nz as f64).sum();
        assert!((direct - 4.0 * PI).abs() < 1e-12 * 4.0 * PI);
        assert!((g.integrate(&vec![1.0; g.len()]).unwrap() - 4.0 * PI).abs() < 1e-12 * 4.0 * PI);
        assert_eq!(g.integrate(&vec![0.0; g.len()]).unwrap(), 0.0);
    }

    #[test]
    fn integrate_r_converges_at_second_order() {
        let exact = 4.0 * PI / 3.0;
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| {
                let g = Grid::new(1.0, 1.0, n, n).unwrap();
                (g.integrate(&g.sample(|r, _| r)).unwrap() - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "order {order}");
        }
    }

    #[test]
    fn richardson_on_r_cos_z() {
        // \int 2 pi r * r cos z dr dz over (0,1)x(-1,1) = 2 pi * (1/3) * 2 sin 1
        let exact = 2.0 * PI / 3.0 * 2.0 * 1f64.sin();
        let q = |n: usize| {
            let g = Grid::new(1.0, 1.0, n, n).unwrap();
            g.integrate(&g.sample(|r, z| r * z.cos())).unwrap()
        };
        let (coarse, fine) = (q(16), q(32));
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        assert!((fine - exact).abs() < (coarse - exact).abs() / 3.5);
        assert!((extrapolated - exact).abs() < 0.05 * (fine - exact).abs());
    }

    #[test]
    fn boundary_quadrature_of_constants() {
        let g = Grid::new(1.5, 0.7, 9, 11).unwrap();
        let wall = g.integrate_wall(&vec![1.0; g.nz]).unwrap();
        assert!((wall - 2.0 * PI * 1.5 * 1.4).abs() < 1e-12);
        let lids = g.integrate_lids(&vec![1.0; g.nr], &vec![1.0; g.nr]).unwrap();
        assert!((lids - 2.0 * PI * 1.5 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn linearity() {
        let g = Grid::new(1.0, 1.0, 10, 6).unwrap();
        let f = g.sample(|r, z| r * r + z);
        let h = g.sample(|r, z| (r * z).sin());
        let comb: Vec<f64> = f.iter().zip(&h).map(|(a, b)| 2.5 * a - 0.5 * b).collect();
        let lhs = g.integrate(&comb).unwrap();
        let rhs = 2.5 * g.integrate(&f).unwrap() - 0.5 * g.integrate(&h).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let g = Grid::new(1.0, 1.0, 4, 4).unwrap();
        assert!(matches!(g.integrate(&[1.0; 3]), Err(Error::Dimension { .. })));
    }
}
