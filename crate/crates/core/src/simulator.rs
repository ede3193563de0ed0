//! Explicit time integration of the drift-diffusion-reaction system with
//! self-consistent Poisson coupling and an internal-energy equation.
//!
//! One step of size `dt`:
//!
//! 1. face fluxes `j_n`, `j_p`, `j_u` and cell reactions from the old state;
//! 2. `n' = n + dt (-div j_n + R)`, `p' = p + dt (-div j_p + R)`;
//! 3. `psi'` from Poisson's equation for `(n', p')`;
//! 4. `u' = u + dt (-div j_u + J)` with the Joule power `J` assembled per face
//!    as `(j_n - j_p) grad psi` and split half to each neighbouring cell.
//!
//! With [`JouleCoupling::Midpoint`] the potential gradient in `J` is the mean
//! of the old and new gradients. The field energy then changes by exactly
//! minus the Joule work, so the discrete total energy is conserved to
//! round-off. [`JouleCoupling::Explicit`] uses the old gradient and conserves
//! energy only to first order in `dt`.
//!
//! Steps that leave the positivity floor, drop below the temperature floor
//! or exceed the energy ceiling are retried with half the step.

use serde::{Deserialize, Serialize};

use crate::constants::ConstantSet;
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::functionals::{self, Discretization};
use crate::grid::{FaceField, Grid};
use crate::model::ModelFunctions;
use crate::poisson;
use crate::state::{self, Bounds, State};

pub const MAX_HALVINGS: u32 = 40;
/// Samples emitted between reaching a fixed point and `t_end`.
pub const REST_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JouleCoupling {
    #[default]
    Midpoint,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt_init: f64,
    pub cfl: f64,
    pub sample_every: usize,
    /// `None` means `1e-12 N_max`.
    pub positivity_floor: Option<f64>,
    pub joule: JouleCoupling,
    /// Jump to `t_end` once a step leaves the state bitwise unchanged.
    pub fast_forward: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt_init: 1e-3,
            cfl: 0.2,
            sample_every: 100,
            positivity_floor: None,
            joule: JouleCoupling::Midpoint,
            fast_forward: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Domain { what: "t_end", value: self.t_end });
        }
        if !(self.dt_init > 0.0) {
            return Err(Error::Domain { what: "dt_init", value: self.dt_init });
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Domain { what: "cfl", value: self.cfl });
        }
        if self.sample_every == 0 {
            return Err(Error::Domain { what: "sample_every", value: 0.0 });
        }
        if let Some(floor) = self.positivity_floor {
            if !(floor > 0.0) {
                return Err(Error::Domain { what: "positivity_floor", value: floor });
            }
        }
        Ok(())
    }
}

/// Particle and energy fluxes on the interior faces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxSet {
    pub j_n: FaceField,
    pub j_p: FaceField,
    pub j_u: FaceField,
}

/// Per-face fluxes and the drift speeds entering the step restriction.
fn face_fluxes(d: &Discretization) -> (FluxSet, f64) {
    let faces = d.faces.len();
    let mut j = FluxSet {
        j_n: Vec::with_capacity(faces),
        j_p: Vec::with_capacity(faces),
        j_u: Vec::with_capacity(faces),
    };
    let mut max_speed = 0.0f64;
    for f in &d.faces {
        let it = 1.0 / f.theta;
        let dnp = f.n - f.p;
        let a = dnp * f.omega * f.omega / f.gamma;
        let v_n = it * (1.0 + a) * f.dpsi;
        let v_p = -it * (1.0 - a) * f.dpsi;
        j.j_n.push(-f.dn + f.n * v_n);
        j.j_p.push(-f.dp + f.p * v_p);
        j.j_u.push(-f.du + it * dnp / f.gamma * f.omega * f.dpsi);
        max_speed = max_speed.max(v_n.abs()).max(v_p.abs());
    }
    (j, max_speed)
}

pub fn compute_fluxes(s: &State, m: &ModelFunctions, g: &Grid) -> Result<FluxSet> {
    let d = Discretization::new(s, m, g)?;
    Ok(face_fluxes(&d).0)
}

/// Time derivatives of `n`, `p` and `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rhs {
    pub dn: Vec<f64>,
    pub dp: Vec<f64>,
    pub du: Vec<f64>,
}

/// Right-hand side with the Joule power evaluated at the current potential.
pub fn rhs(s: &State, m: &ModelFunctions, g: &Grid) -> Result<Rhs> {
    let d = Discretization::new(s, m, g)?;
    let (j, _) = face_fluxes(&d);
    let mut dn = g.divergence_unchecked(&j.j_n);
    let mut dp = g.divergence_unchecked(&j.j_p);
    let mut du = g.divergence_unchecked(&j.j_u);
    let work: Vec<f64> = (0..d.faces.len())
        .map(|f| (j.j_n[f] - j.j_p[f]) * d.faces[f].dpsi)
        .collect();
    let joule = distribute(&work, s.cells());
    for i in 0..s.cells() {
        let r = functionals::reaction(s.n[i], s.p[i], s.u[i], m);
        dn[i] = -dn[i] + r;
        dp[i] = -dp[i] + r;
        du[i] = -du[i] + joule[i];
    }
    Ok(Rhs { dn, dp, du })
}

/// Splits per-face values half to each adjacent cell.
fn distribute(face: &[f64], cells: usize) -> Vec<f64> {
    (0..cells)
        .map(|i| {
            let left = if i > 0 { face[i - 1] } else { 0.0 };
            let right = if i < face.len() { face[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// One diagnostic record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub entropy: f64,
    pub energy: f64,
    pub charge: f64,
    pub relative_entropy: f64,
    pub production: f64,
    pub l1_n: f64,
    pub l1_p: f64,
    pub l1_u: f64,
    pub h1_psi: f64,
    pub dt: f64,
    /// `H0 exp(-t / (C1 C2))`
    pub envelope: f64,
    /// `C3 exp(-t / (C1 C2))`
    pub distance_bound: f64,
}

impl Sample {
    /// Largest squared distance bounded by the convergence estimate.
    pub fn max_squared_distance(&self) -> f64 {
        self.l1_n
            .powi(2)
            .max(self.l1_p.powi(2))
            .max(self.l1_u.powi(2))
            .max(self.h1_psi.powi(2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub h0: f64,
    pub predicted_rate: f64,
    pub c3: f64,
    pub steps: u64,
    pub rejections: u64,
    /// Time at which the discrete map reached a fixed point, if it did.
    pub fixed_point_time: Option<f64>,
    pub final_state: State,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn max_charge_drift(&self) -> f64 {
        let q0 = self.samples[0].charge;
        self.samples.iter().map(|s| (s.charge - q0).abs()).fold(0.0, f64::max)
    }

    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        self.samples.iter().map(|s| ((s.energy - e0) / e0).abs()).fold(0.0, f64::max)
    }

    /// Samples with `H` above the envelope, allowing relative round-off.
    pub fn envelope_violations(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.relative_entropy > s.envelope * (1.0 + 1e-12) + 1e-300)
            .count()
    }

    pub fn distance_bound_violations(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.max_squared_distance() > s.distance_bound * (1.0 + 1e-12) + 1e-300)
            .count()
    }

    /// Samples where the entropy dropped by more than `1e-8 (1 + |S|)`.
    pub fn entropy_decrease_violations(&self) -> usize {
        self.samples
            .windows(2)
            .filter(|w| w[1].entropy < w[0].entropy - 1e-8 * (1.0 + w[0].entropy.abs()))
            .count()
    }

    /// Least-squares slope of `-log H` over the second half of the samples
    /// whose `H` is above the round-off floor `1e-14 H0`. `None` when fewer
    /// than three such samples exist, e.g. for runs starting at equilibrium.
    pub fn fitted_decay_rate(&self) -> Option<f64> {
        let floor = 1e-14 * self.h0;
        let usable: Vec<&Sample> = self
            .samples
            .iter()
            .filter(|s| s.relative_entropy > floor && s.relative_entropy > 0.0)
            .filter(|s| self.fixed_point_time.is_none_or(|t| s.t <= t))
            .collect();
        let tail = &usable[usable.len() / 2..];
        if tail.len() < 3 {
            return None;
        }
        let k = tail.len() as f64;
        let mt = tail.iter().map(|s| s.t).sum::<f64>() / k;
        let my = tail.iter().map(|s| s.relative_entropy.ln()).sum::<f64>() / k;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for s in tail {
            let dx = s.t - mt;
            sxy += dx * (s.relative_entropy.ln() - my);
            sxx += dx * dx;
        }
        (sxx > 0.0).then(|| -sxy / sxx)
    }
}

/// A successful step.
#[derive(Debug, Clone, PartialEq)]
pub struct Accepted {
    pub state: State,
    pub psi: Vec<f64>,
    pub dt: f64,
    pub halvings: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    model: ModelFunctions,
    grid: Grid,
    bounds: Bounds,
    config: SimConfig,
    floor: f64,
}

struct Tendency {
    fluxes: FluxSet,
    reaction: Vec<f64>,
    dpsi: Vec<f64>,
    cap: f64,
    /// Spacing of the grid the density increments are rounded to.
    quantum: f64,
}

/// Spacing of the doubles next to `x > 0`: its unit in the last place.
fn ulp(x: f64) -> f64 {
    let exponent = f64::from_bits(x.to_bits() & 0x7ff0_0000_0000_0000);
    (exponent * f64::EPSILON).max(f64::MIN_POSITIVE)
}

/// `x` rounded to a multiple of the power of two `q`; exact scaling.
#[inline]
fn quantize(x: f64, q: f64) -> f64 {
    (x / q).round() * q
}

impl Simulator {
    pub fn new(model: ModelFunctions, grid: Grid, bounds: Bounds, config: SimConfig) -> Result<Self> {
        config.validate()?;
        let w = model.w_jet(bounds.c_u_max);
        let n_max = w.value / (bounds.c_theta * w.d1);
        let floor = config.positivity_floor.unwrap_or(1e-12 * n_max);
        Ok(Self { model, grid, bounds, config, floor })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn model(&self) -> &ModelFunctions {
        &self.model
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn positivity_floor(&self) -> f64 {
        self.floor
    }

    fn tendency(&self, s: &State, d: &Discretization) -> Tendency {
        let (fluxes, speed) = face_fluxes(d);
        let m = &self.model;
        let g = &self.grid;
        let mut reaction = Vec::with_capacity(s.cells());
        let mut stiff = 0.0f64;
        let mut relax = 0.0f64;
        let mut largest = 0.0f64;
        for i in 0..s.cells() {
            let (n, p, u) = (s.n[i], s.p[i], s.u[i]);
            largest = largest.max(n).max(p);
            let f = m.rate_prefactor(n, p);
            let w = m.w(u);
            reaction.push(f * (w * w - n * p));
            stiff = stiff.max(f * (n + p));
            // dielectric relaxation rate of the local charge imbalance
            relax = relax.max(d.inv_theta[i] * (n + p) / g.eps()[i]);
        }
        let h = g.h();
        let diffusive = 1.0f64.max(0.5 * speed * h);
        let mut cap = self.config.cfl * h * h / diffusive;
        if stiff > 0.0 {
            cap = cap.min(self.config.cfl / stiff);
        }
        if relax > 0.0 {
            cap = cap.min(self.config.cfl / relax);
        }
        Tendency {
            fluxes,
            reaction,
            dpsi: d.faces.iter().map(|f| f.dpsi).collect(),
            cap,
            quantum: ulp(largest),
        }
    }

    /// Candidate state for step `dt`, or `None` if it leaves the admissible set.
    fn advance(&self, s: &State, tend: &Tendency, dt: f64) -> Option<(State, Vec<f64>)> {
        let g = &self.grid;
        let cells = s.cells();
        let inv_h = 1.0 / g.h();
        let j = &tend.fluxes;
        // net outflow of a face field from cell i; boundary faces carry nothing
        let div = |f: &[f64], i: usize| {
            let right = if i + 1 < cells { f[i] } else { 0.0 };
            let left = if i > 0 { f[i - 1] } else { 0.0 };
            (right - left) * inv_h
        };
        // Near equilibrium all densities share one binade, so adding raw
        // increments rounds them onto the same ulp grid every step and the
        // rounding errors add up coherently in the charge. Face transfers
        // and reaction increments rounded to a common power-of-two quantum
        // instead telescope and cancel exactly, and adding them is exact.
        let q = tend.quantum;
        let transfer = |f: &[f64], i: usize| {
            let right = if i + 1 < cells { quantize(dt * inv_h * f[i], q) } else { 0.0 };
            let left = if i > 0 { quantize(dt * inv_h * f[i - 1], q) } else { 0.0 };
            right - left
        };
        let mut n = Vec::with_capacity(cells);
        let mut p = Vec::with_capacity(cells);
        let mut rho = Vec::with_capacity(cells);
        for i in 0..cells {
            let r = quantize(dt * tend.reaction[i], q);
            let ni = s.n[i] + (r - transfer(&j.j_n, i));
            let pi = s.p[i] + (r - transfer(&j.j_p, i));
            if !(ni >= self.floor && pi >= self.floor && ni.is_finite() && pi.is_finite()) {
                return None;
            }
            n.push(ni);
            p.push(pi);
            rho.push(pi - ni);
        }
        let psi = poisson::solve_unchecked(g, &rho);
        let midpoint = self.config.joule == JouleCoupling::Midpoint;
        let work = |f: usize| {
            let dpsi = if midpoint {
                0.5 * (tend.dpsi[f] + (psi[f + 1] - psi[f]) * inv_h)
            } else {
                tend.dpsi[f]
            };
            (j.j_n[f] - j.j_p[f]) * dpsi
        };
        let mut u = Vec::with_capacity(cells);
        let mut work_left = 0.0;
        for i in 0..cells {
            let work_right = if i + 1 < cells { work(i) } else { 0.0 };
            let joule = 0.5 * (work_left + work_right);
            work_left = work_right;
            let ui = s.u[i] + dt * (joule - div(&j.j_u, i));
            if !(ui >= self.floor && ui <= self.bounds.c_u_max && ui.is_finite()) {
                return None;
            }
            let theta = 1.0 / state::inverse_temperature(&self.model, n[i], p[i], ui);
            if !(theta >= self.bounds.c_theta) {
                return None;
            }
            u.push(ui);
        }
        Some((State { n, p, u }, psi))
    }

    fn try_step(&self, s: &State, tend: &Tendency, dt: f64, t: f64) -> Result<Accepted> {
        let mut dt = dt;
        for halvings in 0..=MAX_HALVINGS {
            if let Some((state, psi)) = self.advance(s, tend, dt) {
                return Ok(Accepted { state, psi, dt, halvings });
            }
            dt *= 0.5;
        }
        Err(Error::StepFailure { t, halvings: MAX_HALVINGS })
    }

    /// One explicit step attempting `dt` first, halving on rejection.
    pub fn step(&self, s: &State, dt: f64) -> Result<Accepted> {
        s.check_grid(&self.grid)?;
        let d = Discretization::new(s, &self.model, &self.grid)?;
        let tend = self.tendency(s, &d);
        self.try_step(s, &tend, dt, 0.0)
    }

    /// Largest step allowed by the diffusive, reactive and dielectric limits.
    pub fn step_cap(&self, s: &State) -> Result<f64> {
        let d = Discretization::new(s, &self.model, &self.grid)?;
        Ok(self.tendency(s, &d).cap)
    }

    #[allow(clippy::too_many_arguments)]
    fn sample(&self, s: &State, psi: &[f64], eq: &Equilibrium, t: f64, dt: f64, h0: f64, c3: f64, rate: f64) -> Result<Sample> {
        let m = &self.model;
        let g = &self.grid;
        let d = Discretization::with_potential(s, m, g, psi.to_vec());
        let l1 = |v: &[f64], target: f64| g.h() * v.iter().map(|x| (x - target).abs()).sum::<f64>();
        let decay = (-t * rate).exp();
        Ok(Sample {
            t,
            entropy: functionals::total_entropy(s, m, g)?,
            energy: functionals::total_energy_with_potential(s, g, psi),
            charge: functionals::total_charge(s, g)?,
            relative_entropy: functionals::relative_entropy_with_potential(s, eq, m, g, psi).total(),
            production: functionals::production_with(s, m, g, &d)?.total(),
            l1_n: l1(&s.n, eq.n_inf),
            l1_p: l1(&s.p, eq.p_inf),
            l1_u: l1(&s.u, eq.u_inf),
            h1_psi: poisson::h1_norm_sq(g, psi).sqrt(),
            dt,
            envelope: h0 * decay,
            distance_bound: c3 * decay,
        })
    }

    /// Integrates from `s0` to `t_end`, sampling every `sample_every`
    /// accepted steps and at `t_end`.
    pub fn run(&self, s0: &State, eq: &Equilibrium, consts: &ConstantSet) -> Result<Trajectory> {
        let m = &self.model;
        let g = &self.grid;
        s0.check_grid(g)?;
        s0.check_positive()?;
        let psi0 = poisson::solve_poisson(g, &s0.n, &s0.p)?;
        let h0 = functionals::relative_entropy_with_potential(s0, eq, m, g, &psi0).total();
        let rate = consts.eep.rate;
        let c3 = consts.eep.c3(h0);
        let t_end = self.config.t_end;

        let mut samples = vec![self.sample(s0, &psi0, eq, 0.0, 0.0, h0, c3, rate)?];
        let mut s = s0.clone();
        let mut psi = psi0;
        let mut t = 0.0;
        let mut steps = 0u64;
        let mut rejections = 0u64;
        let mut fixed_point_time = None;
        let mut first = true;

        while t < t_end {
            let d = Discretization::with_potential(&s, m, g, psi);
            let tend = self.tendency(&s, &d);
            let remaining = t_end - t;
            let mut dt = tend.cap;
            if first {
                dt = dt.min(self.config.dt_init);
                first = false;
            }
            let truncated = remaining <= dt;
            if truncated {
                dt = remaining;
            }
            let acc = self.try_step(&s, &tend, dt, t)?;
            rejections += u64::from(acc.halvings);
            steps += 1;
            let unchanged = acc.state == s;
            t = if truncated && acc.halvings == 0 { t_end } else { t + acc.dt };
            if t + acc.dt == t && t < t_end {
                return Err(Error::StepFailure { t, halvings: acc.halvings });
            }
            s = acc.state;
            psi = acc.psi;

            if self.config.fast_forward && unchanged && !truncated && acc.halvings == 0 && t < t_end {
                // the step size depends on the state alone, so every later
                // step reproduces this one bit for bit
                fixed_point_time = Some(t);
                samples.push(self.sample(&s, &psi, eq, t, acc.dt, h0, c3, rate)?);
                let span = t_end - t;
                for k in 1..=REST_SAMPLES {
                    let tk = if k == REST_SAMPLES { t_end } else { t + span * k as f64 / REST_SAMPLES as f64 };
                    samples.push(self.sample(&s, &psi, eq, tk, acc.dt, h0, c3, rate)?);
                }
                break;
            }
            if steps.is_multiple_of(self.config.sample_every as u64) || t >= t_end {
                samples.push(self.sample(&s, &psi, eq, t, acc.dt, h0, c3, rate)?);
            }
        }

        Ok(Trajectory {
            samples,
            h0,
            predicted_rate: rate,
            c3,
            steps,
            rejections,
            fixed_point_time,
            final_state: s,
        })
    }
}
