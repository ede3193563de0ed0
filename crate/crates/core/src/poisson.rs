//! Neumann problem `-(eps psi')' = p - n` with zero boundary flux and zero mean.
//!
//! The cell-centred system is tridiagonal with the constants as its kernel.
//! Summing its rows from the left boundary turns it into a bidiagonal one:
//! the face flux `eps_f (psi[i+1] - psi[i]) / h` equals minus the charge to
//! the left of face `i`. That recurrence is solved directly in one pass and
//! the mean is removed afterwards.

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid};

/// Potential generated by the charge density `p - n`.
///
/// Errors with [`Error::Compatibility`] when `int (n - p)` exceeds the
/// round-off tolerance `1e-12 max(int n, int p, 1)`.
pub fn solve_poisson(g: &Grid, n: &[f64], p: &[f64]) -> Result<CellField> {
    g.check_cells(n)?;
    g.check_cells(p)?;
    let int_n = g.integrate_unchecked(n);
    let int_p = g.integrate_unchecked(p);
    let tol = 1e-12 * int_n.max(int_p).max(1.0);
    let charge = int_n - int_p;
    if !(charge.abs() <= tol) {
        return Err(Error::Compatibility { charge, tol });
    }
    let rho: Vec<f64> = p.iter().zip(n).map(|(p, n)| p - n).collect();
    Ok(solve_unchecked(g, &rho))
}

/// Solves with an arbitrary source after projecting it onto zero mean.
pub fn solve_with_source(g: &Grid, rho: &[f64]) -> Result<CellField> {
    g.check_cells(rho)?;
    let psi = solve_unchecked(g, rho);
    if psi.iter().all(|v| v.is_finite()) {
        Ok(psi)
    } else {
        Err(Error::Solver("non-finite potential".into()))
    }
}

pub(crate) fn solve_unchecked(g: &Grid, rho: &[f64]) -> CellField {
    let h = g.h();
    let cells = g.cells();
    let mean = rho.iter().sum::<f64>() / cells as f64;
    if rho.iter().all(|&r| r == mean) {
        return vec![0.0; cells];
    }
    let mut psi = Vec::with_capacity(cells);
    psi.push(0.0);
    let mut left_charge = 0.0;
    for (f, &eps_f) in g.eps_face().iter().enumerate() {
        left_charge += rho[f] - mean;
        let flux = -h * left_charge;
        psi.push(psi[f] + h * flux / eps_f);
    }
    let shift = psi.iter().sum::<f64>() / cells as f64;
    psi.iter_mut().for_each(|v| *v -= shift);
    psi
}

/// `h sum_faces eps_f (grad psi)^2`, twice the field energy.
pub fn dirichlet_energy(g: &Grid, psi: &[f64]) -> Result<f64> {
    g.check_cells(psi)?;
    Ok(dirichlet_energy_unchecked(g, psi))
}

pub(crate) fn dirichlet_energy_unchecked(g: &Grid, psi: &[f64]) -> f64 {
    let inv_h = 1.0 / g.h();
    let sum: f64 = psi
        .windows(2)
        .zip(g.eps_face())
        .map(|(w, e)| {
            let d = (w[1] - w[0]) * inv_h;
            e * d * d
        })
        .sum();
    g.h() * sum
}

/// Squared discrete `H^1` norm `h sum psi^2 + h sum_faces (grad psi)^2`.
pub fn h1_norm_sq(g: &Grid, psi: &[f64]) -> f64 {
    let inv_h = 1.0 / g.h();
    let l2: f64 = psi.iter().map(|v| v * v).sum();
    let grad: f64 = psi
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) * inv_h;
            d * d
        })
        .sum();
    g.h() * (l2 + grad)
}
