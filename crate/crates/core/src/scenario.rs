//! Named parameter sets and the precomputed objects every pipeline needs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::ConstantSet;
use crate::equilibrium::{compute_equilibrium, Equilibrium};
use crate::error::{Error, Result};
use crate::functionals;
use crate::grid::Grid;
use crate::model::{ModelFunctions, PowerWeight, ReactionRate, ThermalEntropy};
use crate::state::{Bounds, State};

/// Permittivity profile on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Permittivity {
    Uniform { value: f64 },
    /// `left` on `x < interface`, `right` beyond.
    Layered { left: f64, right: f64, interface: f64 },
}

impl Permittivity {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            Permittivity::Uniform { value } => value,
            Permittivity::Layered { left, right, interface } => {
                if x < interface {
                    left
                } else {
                    right
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub model: ModelFunctions,
    pub length: f64,
    pub permittivity: Permittivity,
    pub bounds: Bounds,
    /// Total energy `E0`.
    pub energy: f64,
}

impl Scenario {
    pub fn grid(&self, cells: usize) -> Result<Grid> {
        if cells < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells, got {cells}")));
        }
        let h = self.length / cells as f64;
        let eps = (0..cells).map(|i| self.permittivity.at((i as f64 + 0.5) * h)).collect();
        Grid::with_permittivity(self.length, eps)
    }

    pub fn setup(&self, cells: usize) -> Result<Setup> {
        Setup::new(self.name.clone(), self.model, self.grid(cells)?, self.bounds, self.energy)
    }
}

/// Log entropy, constant recombination, unit interval.
pub fn scenario_a() -> Scenario {
    Scenario {
        name: "A".into(),
        model: ModelFunctions {
            sigma: ThermalEntropy::Log { a: 1.0 },
            weight: PowerWeight { b: 1.0, beta: 0.25 },
            rate: ReactionRate::Constant { f0: 1.0 },
        },
        length: 1.0,
        permittivity: Permittivity::Uniform { value: 1.0 },
        bounds: Bounds { c_theta: 0.5, c_u_max: 2.0 },
        energy: 1.0,
    }
}

/// Power entropy with Shockley-Read-Hall recombination.
pub fn scenario_b() -> Scenario {
    Scenario {
        name: "B".into(),
        model: ModelFunctions {
            sigma: ThermalEntropy::Power { a: 2.0, alpha: 0.5 },
            weight: PowerWeight { b: 1.0, beta: 0.25 },
            rate: ReactionRate::Srh { k1: 0.2, k2: 0.1, k3: 0.1 },
        },
        length: 1.0,
        permittivity: Permittivity::Uniform { value: 1.0 },
        bounds: Bounds { c_theta: 0.4, c_u_max: 2.5 },
        energy: 1.0,
    }
}

/// Log entropy on a longer, two-layer dielectric.
pub fn scenario_c() -> Scenario {
    Scenario {
        name: "C".into(),
        model: ModelFunctions {
            sigma: ThermalEntropy::Log { a: 0.5 },
            weight: PowerWeight { b: 2.0, beta: 0.2 },
            rate: ReactionRate::Constant { f0: 2.0 },
        },
        length: 2.0,
        permittivity: Permittivity::Layered { left: 1.0, right: 2.5, interface: 0.8 },
        bounds: Bounds { c_theta: 0.5, c_u_max: 3.0 },
        energy: 3.0,
    }
}

pub fn reference_scenarios() -> Vec<Scenario> {
    vec![scenario_a(), scenario_b(), scenario_c()]
}

/// Everything derived from a scenario at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Setup {
    pub name: String,
    pub model: ModelFunctions,
    pub grid: Grid,
    pub bounds: Bounds,
    pub equilibrium: Equilibrium,
    pub constants: ConstantSet,
}

impl Setup {
    pub fn new(name: String, model: ModelFunctions, grid: Grid, bounds: Bounds, energy: f64) -> Result<Self> {
        let model = ModelFunctions::new(model.sigma, model.weight, model.rate)?;
        let bounds = Bounds::new(bounds.c_theta, bounds.c_u_max)?;
        let equilibrium = compute_equilibrium(energy, 0.0, &grid, &model)?;
        let constants = ConstantSet::compute(&bounds, &model, &grid, &equilibrium)?;
        Ok(Self { name, model, grid, bounds, equilibrium, constants })
    }

    /// Same setup relative to the equilibrium with energy `energy`.
    pub fn with_energy(&self, energy: f64) -> Result<Self> {
        Self::new(self.name.clone(), self.model, self.grid.clone(), self.bounds, energy)
    }
}

/// Equilibrium plus one cosine mode per component:
/// `n = n_inf (1 + a cos(pi x / L))`, `p = p_inf (1 - a cos(2 pi x / L))`,
/// `u = u_inf (1 + a cos(3 pi x / L))`. `p` is shifted so the total charge
/// vanishes; the energy generally differs from the equilibrium's.
pub fn perturbed_equilibrium(g: &Grid, eq: &Equilibrium, amplitude: f64) -> Result<State> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::Domain { what: "amplitude", value: amplitude });
    }
    let k = PI / g.length();
    let x = g.cell_centers();
    let n: Vec<f64> = x.iter().map(|x| eq.n_inf * (1.0 + amplitude * (k * x).cos())).collect();
    let mut p: Vec<f64> = x.iter().map(|x| eq.p_inf * (1.0 - amplitude * (2.0 * k * x).cos())).collect();
    let u = x.iter().map(|x| eq.u_inf * (1.0 + amplitude * (3.0 * k * x).cos())).collect();
    let shift = (g.integrate_unchecked(&n) - g.integrate_unchecked(&p)) / g.length();
    p.iter_mut().for_each(|v| *v += shift);
    let s = State::new(n, p, u)?;
    s.check_positive()?;
    Ok(s)
}

/// Total energy of `s`, for re-centring the equilibrium on an initial state.
pub fn energy_of(s: &State, g: &Grid) -> Result<f64> {
    functionals::total_energy(s, g)
}
