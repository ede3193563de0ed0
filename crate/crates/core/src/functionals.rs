//! Entropy, energy, charge, relative entropy and entropy production.
//!
//! Gradient terms live on interior faces. Cell coefficients (`n`, `p`,
//! `theta`, `w'/w`, `-w''/w`, `-sigma''`) are averaged arithmetically to the
//! faces, `eps` harmonically, and face quadrature is `h sum_faces`. The face
//! value of `gamma` is assembled from the averaged primitives,
//! `gamma_f = -sigma''_f + (n_f + p_f) (-w''/w)_f`, which keeps the two
//! expansions of the entropy production algebraically identical on the mesh.

use serde::Serialize;

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{boltzmann, weighted_boltzmann, ModelFunctions};
use crate::poisson;
use crate::state::State;

/// Coefficients and gradients on one interior face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub n: f64,
    pub p: f64,
    pub theta: f64,
    /// `w'/w`
    pub omega: f64,
    /// `-w''/w`
    pub chi: f64,
    /// `-sigma''`
    pub s2: f64,
    pub gamma: f64,
    pub eps: f64,
    pub dn: f64,
    pub dp: f64,
    pub du: f64,
    pub dpsi: f64,
    /// gradient of `1 / theta`
    pub dinv_theta: f64,
}

/// Cell coefficients together with the potential and the face data.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub psi: Vec<f64>,
    pub inv_theta: Vec<f64>,
    pub faces: Vec<Face>,
}

impl Discretization {
    /// Requires a strictly positive, charge-neutral state on `g`.
    pub fn new(s: &State, m: &ModelFunctions, g: &Grid) -> Result<Self> {
        s.check_grid(g)?;
        s.check_positive()?;
        let psi = poisson::solve_poisson(g, &s.n, &s.p)?;
        Ok(Self::with_potential(s, m, g, psi))
    }

    /// Skips the checks; `psi` must solve Poisson's equation for `s`.
    pub(crate) fn with_potential(s: &State, m: &ModelFunctions, g: &Grid, psi: Vec<f64>) -> Self {
        let cells = s.cells();
        let mut inv_theta = Vec::with_capacity(cells);
        let mut omega = Vec::with_capacity(cells);
        let mut chi = Vec::with_capacity(cells);
        let mut s2 = Vec::with_capacity(cells);
        for i in 0..cells {
            let u = s.u[i];
            let (d1, d2) = m.sigma_d12(u);
            let om = m.w_log_d1(u);
            inv_theta.push(d1 + (s.n[i] + s.p[i]) * om);
            omega.push(om);
            chi.push(m.w_neg_d2_over_w(u));
            s2.push(-d2);
        }
        let inv_h = 1.0 / g.h();
        let faces = (0..cells - 1)
            .map(|f| {
                let r = f + 1;
                let n = 0.5 * (s.n[f] + s.n[r]);
                let p = 0.5 * (s.p[f] + s.p[r]);
                let chi_f = 0.5 * (chi[f] + chi[r]);
                let s2_f = 0.5 * (s2[f] + s2[r]);
                Face {
                    n,
                    p,
                    theta: 0.5 * (1.0 / inv_theta[f] + 1.0 / inv_theta[r]),
                    omega: 0.5 * (omega[f] + omega[r]),
                    chi: chi_f,
                    s2: s2_f,
                    gamma: s2_f + (n + p) * chi_f,
                    eps: g.eps_face()[f],
                    dn: (s.n[r] - s.n[f]) * inv_h,
                    dp: (s.p[r] - s.p[f]) * inv_h,
                    du: (s.u[r] - s.u[f]) * inv_h,
                    dpsi: (psi[r] - psi[f]) * inv_h,
                    dinv_theta: (inv_theta[r] - inv_theta[f]) * inv_h,
                }
            })
            .collect();
        Self { psi, inv_theta, faces }
    }
}

/// `S(n, p, u) = sigma(u) + n log w(u) - lambda(n) + p log w(u) - lambda(p)`.
pub fn entropy_density(n: f64, p: f64, u: f64, m: &ModelFunctions) -> Result<f64> {
    let sigma = m.eval_sigma(u)?.value;
    let log_w = m.w(u).ln();
    Ok(sigma + n * log_w - boltzmann(n)? + p * log_w - boltzmann(p)?)
}

pub fn total_entropy(s: &State, m: &ModelFunctions, g: &Grid) -> Result<f64> {
    s.check_grid(g)?;
    let mut sum = 0.0;
    for i in 0..s.cells() {
        sum += entropy_density(s.n[i], s.p[i], s.u[i], m)?;
    }
    Ok(g.h() * sum)
}

/// `int u + (1/2) h sum_faces eps_f (grad psi)^2`.
pub fn total_energy(s: &State, g: &Grid) -> Result<f64> {
    s.check_grid(g)?;
    let psi = poisson::solve_poisson(g, &s.n, &s.p)?;
    Ok(total_energy_with_potential(s, g, &psi))
}

pub(crate) fn total_energy_with_potential(s: &State, g: &Grid, psi: &[f64]) -> f64 {
    g.integrate_unchecked(&s.u) + 0.5 * poisson::dirichlet_energy_unchecked(g, psi)
}

/// `int (q_n n + q_p p)` with `q_n = -1`, `q_p = +1`.
pub fn total_charge(s: &State, g: &Grid) -> Result<f64> {
    s.check_grid(g)?;
    Ok(g.integrate_unchecked(&s.p) - g.integrate_unchecked(&s.n))
}

/// Recombination `R = F(n, p) (w(u)^2 - n p)`.
pub fn reaction(n: f64, p: f64, u: f64, m: &ModelFunctions) -> f64 {
    let w = m.w(u);
    m.rate_prefactor(n, p) * (w * w - n * p)
}

/// `F (n p - w^2) log(n p / w^2)`, the entropy produced by recombination.
pub fn reactive_entropy_term(n: f64, p: f64, u: f64, m: &ModelFunctions) -> Result<f64> {
    if !(n * p > 0.0) {
        return Err(Error::Domain { what: "reactive entropy term (n p)", value: n * p });
    }
    Ok(reactive_unchecked(n, p, m.w(u), m.rate_prefactor(n, p)))
}

#[inline]
pub(crate) fn reactive_unchecked(n: f64, p: f64, w: f64, f: f64) -> f64 {
    let w2 = w * w;
    let r = (n * p - w2) / w2;
    f * w2 * r * r.ln_1p()
}

fn reactive_integral(s: &State, m: &ModelFunctions, g: &Grid) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..s.cells() {
        let (n, p) = (s.n[i], s.p[i]);
        if !(n * p > 0.0) {
            return Err(Error::ReactiveDivergence { cell: i });
        }
        sum += reactive_unchecked(n, p, m.w(s.u[i]), m.rate_prefactor(n, p));
    }
    Ok(g.h() * sum)
}

/// The four nonnegative groups of the relative entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeEntropyParts {
    /// `int n log(n/w) - n + w + p log(p/w) - p + w`
    pub densities: f64,
    /// `-2 int w(u) - w'(u_inf)(u - u_inf) - w(u_inf)`
    pub weight: f64,
    /// `-int sigma(u) - sigma'(u_inf)(u - u_inf) - sigma(u_inf)`
    pub thermal: f64,
    /// `(1 / (2 theta_inf)) int eps |grad psi|^2`
    pub field: f64,
}

impl RelativeEntropyParts {
    pub fn total(&self) -> f64 {
        self.densities + self.weight + self.thermal + self.field
    }
}

pub fn relative_entropy_parts(s: &State, eq: &Equilibrium, m: &ModelFunctions, g: &Grid) -> Result<RelativeEntropyParts> {
    s.check_grid(g)?;
    s.check_positive()?;
    let psi = poisson::solve_poisson(g, &s.n, &s.p)?;
    Ok(relative_entropy_with_potential(s, eq, m, g, &psi))
}

pub(crate) fn relative_entropy_with_potential(
    s: &State,
    eq: &Equilibrium,
    m: &ModelFunctions,
    g: &Grid,
    psi: &[f64],
) -> RelativeEntropyParts {
    let (mut dens, mut weight, mut thermal) = (0.0, 0.0, 0.0);
    for i in 0..s.cells() {
        let u = s.u[i];
        let w = m.w(u);
        dens += weighted_boltzmann(s.n[i], w) + weighted_boltzmann(s.p[i], w);
        weight -= 2.0 * m.w_remainder(u, eq.u_inf);
        thermal -= m.sigma_remainder(u, eq.u_inf);
    }
    let h = g.h();
    RelativeEntropyParts {
        densities: h * dens,
        weight: h * weight,
        thermal: h * thermal,
        field: poisson::dirichlet_energy_unchecked(g, psi) / (2.0 * eq.theta_inf),
    }
}

pub fn relative_entropy(s: &State, eq: &Equilibrium, m: &ModelFunctions, g: &Grid) -> Result<f64> {
    Ok(relative_entropy_parts(s, eq, m, g)?.total())
}

/// The four nonnegative summands of the entropy production.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductionParts {
    pub reactive: f64,
    pub electrons: f64,
    pub holes: f64,
    pub energy: f64,
}

impl ProductionParts {
    pub fn total(&self) -> f64 {
        self.reactive + self.electrons + self.holes + self.energy
    }
}

pub fn entropy_production_parts(s: &State, m: &ModelFunctions, g: &Grid) -> Result<ProductionParts> {
    let d = Discretization::new(s, m, g)?;
    production_with(s, m, g, &d)
}

pub(crate) fn production_with(s: &State, m: &ModelFunctions, g: &Grid, d: &Discretization) -> Result<ProductionParts> {
    let (mut e, mut ho, mut en) = (0.0, 0.0, 0.0);
    for f in &d.faces {
        let it = 1.0 / f.theta;
        let a = f.dn - f.n * f.omega * f.du - f.n * it * f.dpsi;
        let b = f.dp - f.p * f.omega * f.du + f.p * it * f.dpsi;
        let c = f.du + it * (f.p - f.n) * f.omega * f.dpsi / f.gamma;
        e += a * a / f.n;
        ho += b * b / f.p;
        en += f.gamma * c * c;
    }
    let h = g.h();
    Ok(ProductionParts {
        reactive: reactive_integral(s, m, g)?,
        electrons: h * e,
        holes: h * ho,
        energy: h * en,
    })
}

pub fn entropy_production(s: &State, m: &ModelFunctions, g: &Grid) -> Result<f64> {
    Ok(entropy_production_parts(s, m, g)?.total())
}

/// The entropy production expanded around the cross term
/// `-2 int (w'/w) (grad n + grad p) . grad u`.
pub fn entropy_production_recast(s: &State, m: &ModelFunctions, g: &Grid) -> Result<f64> {
    let d = Discretization::new(s, m, g)?;
    recast_with(s, m, g, &d)
}

pub(crate) fn recast_with(s: &State, m: &ModelFunctions, g: &Grid, d: &Discretization) -> Result<f64> {
    let mut sum = 0.0;
    for f in &d.faces {
        let it = 1.0 / f.theta;
        let a = f.dn - f.n * it * f.dpsi;
        let b = f.dp + f.p * it * f.dpsi;
        let dnp = f.n - f.p;
        sum += -2.0 * f.omega * (f.dn + f.dp) * f.du
            + a * a / f.n
            + b * b / f.p
            + (f.s2 + (f.omega * f.omega + f.chi) * (f.n + f.p)) * f.du * f.du
            + it * it * f.omega * f.omega * dnp * dnp * f.dpsi * f.dpsi / f.gamma;
    }
    Ok(reactive_integral(s, m, g)? + g.h() * sum)
}

/// Right-hand side of the dissipative lower bound, weighted by `eps / eps_max`.
pub fn dissipative_lower_bound_rhs(s: &State, m: &ModelFunctions, g: &Grid, g_w: f64) -> Result<f64> {
    let d = Discretization::new(s, m, g)?;
    lower_bound_with(s, m, g, &d, g_w)
}

pub(crate) fn lower_bound_with(s: &State, m: &ModelFunctions, g: &Grid, d: &Discretization, g_w: f64) -> Result<f64> {
    let eps_max = g.eps_max();
    let mut sum = 0.0;
    for f in &d.faces {
        let it = 1.0 / f.theta;
        let a = f.dn - f.n * it * f.dpsi;
        let b = f.dp + f.p * it * f.dpsi;
        let dnp = f.n - f.p;
        let inner = a * a / f.n
            + b * b / f.p
            + (f.s2 + (f.omega * f.omega + f.chi) * (f.n + f.p)) * f.du * f.du
            + it * it * f.omega * f.omega * dnp * dnp * f.dpsi * f.dpsi / f.gamma;
        sum += f.eps / eps_max * inner;
    }
    Ok(reactive_integral(s, m, g)? + (0.5 - g_w) * g.h() * sum)
}

/// `int gamma^-1 |grad (1/theta)|^2`.
pub fn inv_temp_gradient_functional(s: &State, m: &ModelFunctions, g: &Grid) -> Result<f64> {
    let d = Discretization::new(s, m, g)?;
    Ok(inv_temp_with(g, &d))
}

pub(crate) fn inv_temp_with(g: &Grid, d: &Discretization) -> f64 {
    g.h() * d.faces.iter().map(|f| f.dinv_theta * f.dinv_theta / f.gamma).sum::<f64>()
}

/// Every functional at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub entropy: f64,
    pub energy: f64,
    pub charge: f64,
    pub relative_entropy: f64,
    pub production: f64,
    pub production_recast: f64,
    pub reactive_term: f64,
    pub dissipative_lower_bound: f64,
    pub inv_temp_gradient: f64,
}

pub fn evaluate(s: &State, eq: &Equilibrium, m: &ModelFunctions, g: &Grid, g_w: f64) -> Result<FunctionalReport> {
    let d = Discretization::new(s, m, g)?;
    let parts = production_with(s, m, g, &d)?;
    Ok(FunctionalReport {
        entropy: total_entropy(s, m, g)?,
        energy: total_energy_with_potential(s, g, &d.psi),
        charge: total_charge(s, g)?,
        relative_entropy: relative_entropy_with_potential(s, eq, m, g, &d.psi).total(),
        production: parts.total(),
        production_recast: recast_with(s, m, g, &d)?,
        reactive_term: parts.reactive,
        dissipative_lower_bound: lower_bound_with(s, m, g, &d, g_w)?,
        inv_temp_gradient: inv_temp_with(g, &d),
    })
}
