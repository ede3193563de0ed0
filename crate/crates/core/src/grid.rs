//! Uniform cell-centred mesh on `[0, L]` with no-flux boundaries.
//!
//! Cell `i` has centre `(i + 1/2) h`. Interior face `f` sits between cells
//! `f` and `f + 1`, so a cell field has `N` entries and a face field `N - 1`.
//! The two boundary faces carry no flux and are never stored.

use serde::Serialize;

use crate::error::{Error, Result};

/// Values per cell, length `N`.
pub type CellField = Vec<f64>;
/// Values per interior face, length `N - 1`.
pub type FaceField = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    length: f64,
    cells: usize,
    h: f64,
    eps: Vec<f64>,
    eps_face: Vec<f64>,
    eps_min: f64,
    eps_max: f64,
}

impl Grid {
    /// Mesh with constant permittivity.
    pub fn uniform(length: f64, cells: usize, eps: f64) -> Result<Self> {
        Self::with_permittivity(length, vec![eps; cells])
    }

    /// Mesh with per-cell permittivity; the cell count is `eps.len()`.
    pub fn with_permittivity(length: f64, eps: Vec<f64>) -> Result<Self> {
        let cells = eps.len();
        if cells < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells, got {cells}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("domain length must be positive, got {length}")));
        }
        if let Some((i, e)) = eps.iter().enumerate().find(|(_, e)| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidGrid(format!("permittivity must be positive, eps[{i}] = {e}")));
        }
        let eps_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
        let eps_max = eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // harmonic mean keeps the flux eps * dpsi/dx continuous across a jump
        let eps_face = eps.windows(2).map(|e| 2.0 * e[0] * e[1] / (e[0] + e[1])).collect();
        Ok(Self {
            length,
            cells,
            h: length / cells as f64,
            eps,
            eps_face,
            eps_min,
            eps_max,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn faces(&self) -> usize {
        self.cells - 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn eps_face(&self) -> &[f64] {
        &self.eps_face
    }

    pub fn eps_min(&self) -> f64 {
        self.eps_min
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn cell_centers(&self) -> CellField {
        (0..self.cells).map(|i| (i as f64 + 0.5) * self.h).collect()
    }

    /// Positions of the interior faces.
    pub fn face_positions(&self) -> FaceField {
        (1..self.cells).map(|i| i as f64 * self.h).collect()
    }

    pub fn check_cells(&self, f: &[f64]) -> Result<()> {
        if f.len() == self.cells {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected: self.cells, got: f.len() })
        }
    }

    pub fn check_faces(&self, j: &[f64]) -> Result<()> {
        if j.len() == self.faces() {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected: self.faces(), got: j.len() })
        }
    }

    pub fn face_gradient(&self, f: &[f64]) -> Result<FaceField> {
        self.check_cells(f)?;
        Ok(self.face_gradient_unchecked(f))
    }

    #[inline]
    pub(crate) fn face_gradient_unchecked(&self, f: &[f64]) -> FaceField {
        let inv_h = 1.0 / self.h;
        f.windows(2).map(|w| (w[1] - w[0]) * inv_h).collect()
    }

    /// `(j[i] - j[i-1]) / h` with zero flux through both boundary faces.
    pub fn divergence_of_face_flux(&self, j: &[f64]) -> Result<CellField> {
        self.check_faces(j)?;
        Ok(self.divergence_unchecked(j))
    }

    #[inline]
    pub(crate) fn divergence_unchecked(&self, j: &[f64]) -> CellField {
        let inv_h = 1.0 / self.h;
        let n = self.cells;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let right = if i + 1 < n { j[i] } else { 0.0 };
            let left = if i > 0 { j[i - 1] } else { 0.0 };
            out.push((right - left) * inv_h);
        }
        out
    }

    /// Midpoint rule `h * sum f[i]`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_cells(f)?;
        Ok(self.integrate_unchecked(f))
    }

    #[inline]
    pub(crate) fn integrate_unchecked(&self, f: &[f64]) -> f64 {
        self.h * f.iter().sum::<f64>()
    }

    /// `h * sum_faces j[f]`, the face quadrature used by every gradient term.
    #[inline]
    pub fn integrate_faces(&self, j: &[f64]) -> f64 {
        self.h * j.iter().sum::<f64>()
    }

    /// Arithmetic mean of a cell field on the interior faces.
    pub fn face_average(&self, f: &[f64]) -> Result<FaceField> {
        self.check_cells(f)?;
        Ok(f.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
    }

    /// Continuum Neumann Poincare constant `(L / pi)^2`.
    pub fn poincare_constant(&self) -> f64 {
        poincare_constant(self.length)
    }

    /// Poincare constant of this discrete stencil: the reciprocal of the
    /// smallest nonzero eigenvalue `(4 / h^2) sin^2(pi h / (2 L))` of the
    /// cell-centred Neumann Laplacian. Never smaller than the continuum value.
    pub fn discrete_poincare_constant(&self) -> f64 {
        let s = (std::f64::consts::PI * self.h / (2.0 * self.length)).sin();
        self.h * self.h / (4.0 * s * s)
    }
}

/// `(L / pi)^2`, the optimal constant for zero-mean functions on an interval.
pub fn poincare_constant(length: f64) -> f64 {
    let r = length / std::f64::consts::PI;
    r * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::uniform(1.0, 1, 1.0).is_err());
        assert!(Grid::uniform(0.0, 4, 1.0).is_err());
        assert!(Grid::with_permittivity(1.0, vec![1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = Grid::uniform(2.0, 10, 1.0).unwrap();
        assert!(g.face_gradient(&[3.0; 10]).unwrap().iter().all(|&d| d == 0.0));
        let x = g.cell_centers();
        for d in g.face_gradient(&x).unwrap() {
            assert_relative_eq!(d, 1.0, max_relative = 1e-12);
        }
        assert!(matches!(g.face_gradient(&[0.0; 9]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn gradient_of_cosine_is_second_order() {
        let err = |n: usize| {
            let g = Grid::uniform(1.0, n, 1.0).unwrap();
            let f: Vec<f64> = g.cell_centers().iter().map(|x| (PI * x).cos()).collect();
            g.face_gradient(&f)
                .unwrap()
                .iter()
                .zip(g.face_positions())
                .map(|(d, x)| (d + PI * (PI * x).sin()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e1 < 1e-2);
        assert!((e1 / e2 - 4.0).abs() < 0.1, "ratio {}", e1 / e2);
    }

    #[test]
    fn divergence_examples() {
        let g = Grid::uniform(1.0, 8, 1.0).unwrap();
        assert!(g.divergence_of_face_flux(&[0.0; 7]).unwrap().iter().all(|&d| d == 0.0));
        let d = g.divergence_of_face_flux(&[1.0; 7]).unwrap();
        assert_eq!(d[0], 8.0);
        assert_eq!(d[7], -8.0);
        assert!(d[1..7].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(Grid::uniform(1.0, 7, 1.0).unwrap().integrate(&[1.0; 7]).unwrap(), 1.0);
        assert_relative_eq!(Grid::uniform(3.0, 5, 1.0).unwrap().integrate(&[2.5; 5]).unwrap(), 7.5);
        let g = Grid::uniform(1.0, 100, 1.0).unwrap();
        assert_relative_eq!(g.integrate(&g.cell_centers()).unwrap(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn poincare_examples() {
        assert_relative_eq!(poincare_constant(PI), 1.0);
        assert_relative_eq!(poincare_constant(1.0), 0.101_321_183_642_337_77, max_relative = 1e-14);
        assert_relative_eq!(poincare_constant(2.0), 4.0 / (PI * PI), max_relative = 1e-15);
    }

    #[test]
    fn discrete_poincare_constant_is_from_above() {
        for n in [8, 128, 512] {
            let g = Grid::uniform(1.0, n, 1.0).unwrap();
            assert!(g.discrete_poincare_constant() >= g.poincare_constant());
        }
        let g = Grid::uniform(1.0, 128, 1.0).unwrap();
        assert!(g.discrete_poincare_constant() / g.poincare_constant() - 1.0 < 1e-4);
    }

    #[test]
    fn telescoping_divergence() {
        let g = Grid::uniform(1.7, 33, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let j: Vec<f64> = (0..32).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let total = g.integrate(&g.divergence_of_face_flux(&j).unwrap()).unwrap();
            assert!(total.abs() < 1e-12);
        }
    }

    #[test]
    fn summation_by_parts() {
        let g = Grid::uniform(2.0, 64, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let f: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let j: Vec<f64> = (0..63).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let div = g.divergence_of_face_flux(&j).unwrap();
            let lhs = g.integrate(&f.iter().zip(&div).map(|(a, b)| a * b).collect::<Vec<_>>()).unwrap();
            let grad = g.face_gradient(&f).unwrap();
            let rhs = -g.integrate_faces(&grad.iter().zip(&j).map(|(a, b)| a * b).collect::<Vec<_>>());
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn discrete_poincare_on_random_fields() {
        let g = Grid::uniform(1.0, 128, 1.0).unwrap();
        let cp = g.poincare_constant();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..1000 {
            let mut f: Vec<f64> = if k % 2 == 0 {
                (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect()
            } else {
                let coef: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
                g.cell_centers()
                    .iter()
                    .map(|x| {
                        coef.iter()
                            .enumerate()
                            .map(|(m, c)| c * ((m + 1) as f64 * PI * x).cos())
                            .sum()
                    })
                    .collect()
            };
            let mean = g.integrate(&f).unwrap();
            f.iter_mut().for_each(|v| *v -= mean);
            let l2: f64 = g.integrate(&f.iter().map(|v| v * v).collect::<Vec<_>>()).unwrap();
            let grad = g.face_gradient(&f).unwrap();
            let h1 = g.integrate_faces(&grad.iter().map(|d| d * d).collect::<Vec<_>>());
            assert!(l2 <= cp * h1, "sample {k}: {l2} > {}", cp * h1);
        }
    }
}
