//! Cell states `(n, p, u)`, their derived fields and admissibility checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid};
use crate::model::ModelFunctions;
use crate::poisson;

/// Electron density `n`, hole density `p` and internal energy `u` per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub n: CellField,
    pub p: CellField,
    pub u: CellField,
}

/// Uniform temperature floor `c_theta` and energy ceiling `C_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub c_theta: f64,
    pub c_u_max: f64,
}

impl Bounds {
    pub fn new(c_theta: f64, c_u_max: f64) -> Result<Self> {
        if !(c_theta > 0.0 && c_theta.is_finite()) {
            return Err(Error::Domain { what: "c_theta", value: c_theta });
        }
        if !(c_u_max > 0.0 && c_u_max.is_finite()) {
            return Err(Error::Domain { what: "C_u", value: c_u_max });
        }
        Ok(Self { c_theta, c_u_max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedFields {
    pub theta: CellField,
    pub gamma: CellField,
    pub psi: CellField,
    pub y_n: CellField,
    pub y_p: CellField,
}

impl State {
    pub fn new(n: CellField, p: CellField, u: CellField) -> Result<Self> {
        if p.len() != n.len() {
            return Err(Error::LengthMismatch { expected: n.len(), got: p.len() });
        }
        if u.len() != n.len() {
            return Err(Error::LengthMismatch { expected: n.len(), got: u.len() });
        }
        Ok(Self { n, p, u })
    }

    /// Spatially constant state.
    pub fn constant(cells: usize, n: f64, p: f64, u: f64) -> Self {
        Self {
            n: vec![n; cells],
            p: vec![p; cells],
            u: vec![u; cells],
        }
    }

    pub fn cells(&self) -> usize {
        self.n.len()
    }

    pub fn check_grid(&self, g: &Grid) -> Result<()> {
        g.check_cells(&self.n)?;
        g.check_cells(&self.p)?;
        g.check_cells(&self.u)
    }

    /// Errors unless `n`, `p` and `u` are strictly positive and finite.
    pub fn check_positive(&self) -> Result<()> {
        for (field, values) in [("n", &self.n), ("p", &self.p), ("u", &self.u)] {
            if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::Positivity { field, cell, value });
            }
        }
        Ok(())
    }

    /// `p - n`, the source of Poisson's equation.
    pub fn charge_density(&self) -> CellField {
        self.p.iter().zip(&self.n).map(|(p, n)| p - n).collect()
    }
}

/// Round-off tolerance on the total charge: `1e-12 max(int n, int p, 1)`.
pub fn charge_tol(s: &State, g: &Grid) -> f64 {
    let int_n = g.integrate_unchecked(&s.n);
    let int_p = g.integrate_unchecked(&s.p);
    1e-12 * int_n.max(int_p).max(1.0)
}

/// `1 / theta = sigma'(u) + (n + p) w'(u) / w(u)`.
#[inline]
pub fn inverse_temperature(m: &ModelFunctions, n: f64, p: f64, u: f64) -> f64 {
    m.sigma_d1(u) + (n + p) * m.w_log_d1(u)
}

/// `gamma = -sigma''(u) - (n + p) w''(u) / w(u)`.
#[inline]
pub fn gamma(m: &ModelFunctions, n: f64, p: f64, u: f64) -> f64 {
    -m.sigma_d2(u) + (n + p) * m.w_neg_d2_over_w(u)
}

/// Temperature per cell. Requires `u > 0` and `n, p >= 0` only, so it is
/// also defined on states with vacuum cells.
pub fn temperature(s: &State, m: &ModelFunctions) -> Result<CellField> {
    s.n.iter()
        .zip(&s.p)
        .zip(&s.u)
        .enumerate()
        .map(|(i, ((&n, &p), &u))| {
            if !(u > 0.0) {
                return Err(Error::Positivity { field: "u", cell: i, value: u });
            }
            if !(n >= 0.0) {
                return Err(Error::Positivity { field: "n", cell: i, value: n });
            }
            if !(p >= 0.0) {
                return Err(Error::Positivity { field: "p", cell: i, value: p });
            }
            Ok(1.0 / inverse_temperature(m, n, p, u))
        })
        .collect()
}

/// Temperature, `gamma`, the potential and both chemical potentials
/// `y_c = -log(c / w(u))`.
pub fn derive_fields(s: &State, m: &ModelFunctions, g: &Grid) -> Result<DerivedFields> {
    s.check_grid(g)?;
    s.check_positive()?;
    let psi = poisson::solve_poisson(g, &s.n, &s.p)?;
    let cells = s.cells();
    let mut d = DerivedFields {
        theta: Vec::with_capacity(cells),
        gamma: Vec::with_capacity(cells),
        psi,
        y_n: Vec::with_capacity(cells),
        y_p: Vec::with_capacity(cells),
    };
    for i in 0..cells {
        let (n, p, u) = (s.n[i], s.p[i], s.u[i]);
        let w = m.w(u);
        d.theta.push(1.0 / inverse_temperature(m, n, p, u));
        d.gamma.push(gamma(m, n, p, u));
        d.y_n.push(-(n / w).ln());
        d.y_p.push(-(p / w).ln());
    }
    Ok(d)
}

/// Per-cell admissibility with respect to the temperature floor and the
/// energy ceiling, plus the implied bounds `u >= c_u` and `theta <= C_theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub positive: bool,
    pub energy_ceiling: bool,
    pub temperature_floor: bool,
    pub charge_compatible: bool,
    pub implied_energy_floor: bool,
    pub implied_temperature_ceiling: bool,
    pub min_u: f64,
    pub max_u: f64,
    pub min_theta: f64,
    pub max_theta: f64,
    pub max_density: f64,
    pub c_u: f64,
    pub c_theta_max: f64,
    pub charge: f64,
    pub charge_tol: f64,
}

impl AdmissibilityReport {
    /// The hypotheses themselves; the implied bounds are reported separately.
    pub fn admissible(&self) -> bool {
        self.positive && self.energy_ceiling && self.temperature_floor && self.charge_compatible
    }
}

pub fn check_admissible(s: &State, b: &Bounds, m: &ModelFunctions, g: &Grid) -> Result<AdmissibilityReport> {
    s.check_grid(g)?;
    let c_u = m.inverse_sigma_prime(1.0 / b.c_theta)?;
    let c_theta_max = 1.0 / m.sigma_d1(b.c_u_max);
    let positive = s.check_positive().is_ok();
    let fold = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    };
    let (min_u, max_u) = fold(&s.u);
    let (min_theta, max_theta) = if min_u > 0.0 {
        let theta = temperature(s, m).unwrap_or_else(|_| vec![f64::NAN; s.cells()]);
        fold(&theta)
    } else {
        (f64::NAN, f64::NAN)
    };
    let max_density = s.n.iter().chain(&s.p).copied().fold(f64::NEG_INFINITY, f64::max);
    let charge = g.integrate_unchecked(&s.n) - g.integrate_unchecked(&s.p);
    let tol = charge_tol(s, g);
    let energy_ceiling = max_u <= b.c_u_max;
    let temperature_floor = min_theta >= b.c_theta;
    Ok(AdmissibilityReport {
        positive,
        energy_ceiling,
        temperature_floor,
        charge_compatible: charge.abs() <= tol,
        // implied by the two hypotheses; reported as a cross-check
        implied_energy_floor: !(energy_ceiling && temperature_floor) || min_u >= c_u * (1.0 - 1e-12),
        implied_temperature_ceiling: !(energy_ceiling && temperature_floor)
            || max_theta <= c_theta_max * (1.0 + 1e-12),
        min_u,
        max_u,
        min_theta,
        max_theta,
        max_density,
        c_u,
        c_theta_max,
        charge,
        charge_tol: tol,
    })
}
