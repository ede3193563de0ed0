//! Closed-form equilibrium for given total energy and zero total charge.
//!
//! Without doping and with no-flux boundaries the equilibrium potential
//! vanishes, so all of the energy is internal: `u_inf = E0 / |Omega|`, and
//! both carrier densities sit at the unconstrained maximiser `w(u_inf)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals;
use crate::grid::Grid;
use crate::model::ModelFunctions;
use crate::poisson;
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub energy: f64,
    pub u_inf: f64,
    pub n_inf: f64,
    pub p_inf: f64,
    pub theta_inf: f64,
    pub psi_inf: f64,
    /// Energy multiplier, `1 / theta_inf`.
    pub eta: f64,
    /// Charge multiplier, always zero here.
    pub kappa: f64,
}

impl Equilibrium {
    pub fn state(&self, cells: usize) -> State {
        State::constant(cells, self.n_inf, self.p_inf, self.u_inf)
    }
}

/// Equilibrium with total energy `e0` and total charge `q0` on `g`.
pub fn compute_equilibrium(e0: f64, q0: f64, g: &Grid, m: &ModelFunctions) -> Result<Equilibrium> {
    if !(e0 > 0.0 && e0.is_finite()) {
        return Err(Error::Domain { what: "E0", value: e0 });
    }
    let u_inf = e0 / g.length();
    let tol = 1e-12 * (2.0 * m.w(u_inf) * g.length()).max(1.0);
    if !(q0.abs() <= tol) {
        return Err(Error::NonzeroCharge { charge: q0, tol });
    }
    Ok(from_energy_density(u_inf, e0, m))
}

fn from_energy_density(u_inf: f64, energy: f64, m: &ModelFunctions) -> Equilibrium {
    let w = m.w_jet(u_inf);
    let eta = m.sigma_d1(u_inf) + 2.0 * w.d1;
    Equilibrium {
        energy,
        u_inf,
        n_inf: w.value,
        p_inf: w.value,
        theta_inf: 1.0 / eta,
        psi_inf: 0.0,
        eta,
        kappa: 0.0,
    }
}

/// One line of [`verify_equilibrium`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumCheck {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub checks: Vec<EquilibriumCheck>,
}

impl EquilibriumReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&EquilibriumCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const EQUILIBRIUM_TOL: f64 = 1e-10;

/// Evaluates the functionals on the constant equilibrium state and checks
/// that `H`, `P`, `R` and `psi` vanish while energy and charge match.
pub fn verify_equilibrium(eq: &Equilibrium, m: &ModelFunctions, g: &Grid) -> Result<EquilibriumReport> {
    let s = eq.state(g.cells());
    let psi = poisson::solve_poisson(g, &s.n, &s.p)?;
    let psi_max = psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let reaction = functionals::reaction(eq.n_inf, eq.p_inf, eq.u_inf, m);
    let mut checks = Vec::new();
    let mut push = |name, value: f64, expected: f64, scale: f64| {
        checks.push(EquilibriumCheck {
            name,
            value,
            expected,
            pass: (value - expected).abs() <= EQUILIBRIUM_TOL * scale,
        });
    };
    push("relative_entropy", functionals::relative_entropy(&s, eq, m, g)?, 0.0, 1.0);
    push("entropy_production", functionals::entropy_production(&s, m, g)?, 0.0, 1.0);
    push("reaction", reaction, 0.0, 1.0);
    push("reactive_term", functionals::reactive_entropy_term(eq.n_inf, eq.p_inf, eq.u_inf, m)?, 0.0, 1.0);
    push("potential", psi_max, 0.0, 1.0);
    push("energy", functionals::total_energy(&s, g)?, eq.energy, eq.energy.max(1.0));
    push("charge", functionals::total_charge(&s, g)?, 0.0, 1.0);
    Ok(EquilibriumReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PowerWeight, ReactionRate, ThermalEntropy};
    use approx::assert_relative_eq;

    fn model() -> ModelFunctions {
        ModelFunctions::new(
            ThermalEntropy::Log { a: 1.0 },
            PowerWeight { b: 1.0, beta: 0.25 },
            ReactionRate::Constant { f0: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn closed_form_example() {
        let g = Grid::uniform(1.0, 20, 1.0).unwrap();
        let eq = compute_equilibrium(2.0, 0.0, &g, &model()).unwrap();
        assert_eq!(eq.u_inf, 2.0);
        assert_relative_eq!(eq.n_inf, 3f64.powf(0.25), max_relative = 1e-15);
        assert_eq!(eq.n_inf, eq.p_inf);
        assert_relative_eq!(1.0 / eq.theta_inf, 0.5 + 0.5 * 3f64.powf(-0.75), max_relative = 1e-15);
        assert_relative_eq!(1.0 / eq.theta_inf, 0.719_345_668_825_415_4, max_relative = 1e-12);
        assert_eq!(eq.kappa, 0.0);
        assert_eq!(eq.psi_inf, 0.0);
    }

    #[test]
    fn charge_and_domain_errors() {
        let g = Grid::uniform(1.0, 20, 1.0).unwrap();
        assert!(matches!(compute_equilibrium(1.0, 0.1, &g, &model()), Err(Error::NonzeroCharge { .. })));
        assert!(compute_equilibrium(0.0, 0.0, &g, &model()).is_err());
    }

    #[test]
    fn energy_density_scales_with_length() {
        let g = Grid::uniform(2.0, 20, 1.0).unwrap();
        assert_eq!(compute_equilibrium(2.0, 0.0, &g, &model()).unwrap().u_inf, 1.0);
    }

    #[test]
    fn verification_passes_and_detects_perturbation() {
        let m = model();
        let g = Grid::uniform(1.0, 32, 1.0).unwrap();
        let eq = compute_equilibrium(2.0, 0.0, &g, &m).unwrap();
        let r = verify_equilibrium(&eq, &m, &g).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(r.check("reactive_term").unwrap().value, 0.0);

        let mut shifted = from_energy_density(eq.u_inf + 1e-3, eq.energy, &m);
        shifted.energy = eq.energy;
        let r = verify_equilibrium(&shifted, &m, &g).unwrap();
        assert!(!r.check("energy").unwrap().pass);
    }

    #[test]
    fn detailed_balance_is_exact() {
        let m = model();
        let g = Grid::uniform(1.0, 4, 1.0).unwrap();
        for e0 in [0.1, 0.7, 1.0, 3.3, 10.0] {
            let eq = compute_equilibrium(e0, 0.0, &g, &m).unwrap();
            let w = m.w(eq.u_inf);
            assert_eq!(eq.n_inf * eq.p_inf, w * w);
        }
    }
}
