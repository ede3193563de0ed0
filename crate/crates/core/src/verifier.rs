//! Randomized and deterministic checks of the functional inequalities.
//!
//! Every check yields a [`CheckRecord`] with `pass <=> lhs <= rhs * margin`.
//! Inputs are hashed into a digest so a record can be matched to its
//! reproduction from `(seed, configuration)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::functionals::{self, Discretization};
use crate::grid::Grid;
use crate::model::{boltzmann, boltzmann_1p, ModelFunctions};
use crate::scenario::Setup;
use crate::simulator::Trajectory;
use crate::state::{check_admissible, Bounds, State};

/// Margin on checks involving the continuum constants.
pub const DEFAULT_MARGIN: f64 = 1.1;
/// Margin on exact inequalities, absorbing round-off only.
pub const EXACT_MARGIN: f64 = 1.0 + 1e-9;
/// Pass threshold for the median relative error of the entropy law.
pub const PRODUCTION_LAW_TOL: f64 = 0.05;

const MODES: usize = 5;
const MAX_RETRIES: u32 = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub digest: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    /// Offending state, kept only on failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<State>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, digest: String, lhs: f64, rhs: f64, margin: f64) -> Self {
        Self {
            name: name.into(),
            digest,
            lhs,
            rhs,
            margin,
            pass: lhs <= rhs * margin,
            state: None,
        }
    }

    fn keep_state_on_failure(mut self, s: &State) -> Self {
        if !self.pass {
            self.state = Some(s.clone());
        }
        self
    }

    /// `lhs / rhs`, with `0/0 = 0`.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Aggregate over all records sharing a name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub count: usize,
    pub failures: usize,
    pub max_ratio: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.records.extend(other.records);
    }

    /// One summary per check name, in order of first appearance.
    pub fn summary(&self) -> Vec<CheckSummary> {
        let mut out: Vec<CheckSummary> = Vec::new();
        for r in &self.records {
            let i = match out.iter().position(|s| s.name == r.name) {
                Some(i) => i,
                None => {
                    out.push(CheckSummary {
                        name: r.name.clone(),
                        count: 0,
                        failures: 0,
                        max_ratio: 0.0,
                        margin: r.margin,
                    });
                    out.len() - 1
                }
            };
            let s = &mut out[i];
            s.count += 1;
            s.failures += usize::from(!r.pass);
            s.max_ratio = s.max_ratio.max(r.ratio());
        }
        out
    }
}

/// FNV-1a over the bit patterns of `values`.
pub fn digest<'a>(values: impl IntoIterator<Item = &'a f64>) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

fn state_digest(s: &State) -> String {
    digest(s.n.iter().chain(&s.p).chain(&s.u))
}

/// Decorrelated per-item seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Zero-mean field from the first cosine modes, scaled to sup-norm 1 on
/// the cell centres.
fn cosine_field(rng: &mut ChaCha8Rng, x: &[f64], length: f64) -> Vec<f64> {
    let coef: Vec<f64> = (0..MODES).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut phi: Vec<f64> = x
        .iter()
        .map(|x| {
            coef.iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * PI * x / length).cos())
                .sum()
        })
        .collect();
    let sup = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if sup > 0.0 {
        phi.iter_mut().for_each(|v| *v /= sup);
    }
    phi
}

/// Random admissible state near `eq` with the same total energy and zero
/// total charge.
///
/// Each component is `eq * (1 + a * phi)` with `phi` a random combination
/// of the first five cosine modes and `a` uniform in `[0, amplitude]`.
/// `p` and then `u` are shifted by constants so that the charge vanishes
/// and the energy equals `eq.energy`. Inadmissible draws are retried with
/// halved amplitude.
pub fn random_admissible_state(
    seed: u64,
    g: &Grid,
    m: &ModelFunctions,
    b: &Bounds,
    eq: &Equilibrium,
    amplitude: f64,
) -> Result<State> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::Domain { what: "amplitude", value: amplitude });
    }
    if amplitude == 0.0 {
        return Ok(eq.state(g.cells()));
    }
    let x = g.cell_centers();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amp = amplitude;
    for _ in 0..=MAX_RETRIES {
        let mut draw = |base: f64| {
            let a = amp * rng.gen::<f64>();
            let phi = cosine_field(&mut rng, &x, g.length());
            phi.into_iter().map(|v| base * (1.0 + a * v)).collect::<Vec<f64>>()
        };
        let n = draw(eq.n_inf);
        let mut p = draw(eq.p_inf);
        let mut u = draw(eq.u_inf);
        let shift = (g.integrate_unchecked(&n) - g.integrate_unchecked(&p)) / g.length();
        p.iter_mut().for_each(|v| *v += shift);
        let s = State { n, p, u: u.clone() };
        if s.check_positive().is_ok() {
            let e = functionals::total_energy(&s, g)?;
            let du = (eq.energy - e) / g.length();
            u.iter_mut().for_each(|v| *v += du);
            let s = State { u, ..s };
            if s.check_positive().is_ok() && check_admissible(&s, b, m, g)?.admissible() {
                return Ok(s);
            }
        }
        amp *= 0.5;
    }
    Err(Error::Generation { retries: MAX_RETRIES })
}

/// `Q = int (n - n_inf)^2 + (p - p_inf)^2 + (u - u_inf)^2`.
pub fn quadratic_distance(s: &State, eq: &Equilibrium, g: &Grid) -> f64 {
    let sq = |v: &[f64], c: f64| v.iter().map(|x| (x - c) * (x - c)).sum::<f64>();
    g.h() * (sq(&s.n, eq.n_inf) + sq(&s.p, eq.p_inf) + sq(&s.u, eq.u_inf))
}

/// `H <= C1 C2 P`.
pub fn check_eep(s: &State, setup: &Setup, margin: f64) -> Result<CheckRecord> {
    let (h, p) = entropy_and_production(s, setup)?;
    Ok(CheckRecord::new("eep", state_digest(s), h, setup.constants.eep.c1c2() * p, margin).keep_state_on_failure(s))
}

/// `H <= C1 Q` and `Q <= C2 P`.
pub fn check_quadratic_sandwich(s: &State, setup: &Setup, margin: f64) -> Result<[CheckRecord; 2]> {
    let (h, p) = entropy_and_production(s, setup)?;
    let q = quadratic_distance(s, &setup.equilibrium, &setup.grid);
    let d = state_digest(s);
    let eep = &setup.constants.eep;
    Ok([
        CheckRecord::new("sandwich_upper", d.clone(), h, eep.c1 * q, margin).keep_state_on_failure(s),
        CheckRecord::new("sandwich_lower", d, q, eep.c2 * p, margin).keep_state_on_failure(s),
    ])
}

fn entropy_and_production(s: &State, setup: &Setup) -> Result<(f64, f64)> {
    let (m, g) = (&setup.model, &setup.grid);
    let d = Discretization::new(s, m, g)?;
    let h = functionals::relative_entropy_with_potential(s, &setup.equilibrium, m, g, &d.psi).total();
    let p = functionals::production_with(s, m, g, &d)?.total();
    Ok((h, p))
}

/// Every state-level check: EEP, both sandwich halves, the bound on the
/// inverse-temperature gradient and the dissipative lower bound.
pub fn check_state(s: &State, setup: &Setup, margin: f64) -> Result<Vec<CheckRecord>> {
    let (m, g) = (&setup.model, &setup.grid);
    let d = Discretization::new(s, m, g)?;
    let h = functionals::relative_entropy_with_potential(s, &setup.equilibrium, m, g, &d.psi).total();
    let p = functionals::production_with(s, m, g, &d)?.total();
    let q = quadratic_distance(s, &setup.equilibrium, g);
    let grad = functionals::inv_temp_with(g, &d);
    let lower = functionals::lower_bound_with(s, m, g, &d, setup.constants.hypothesis.g_w)?;
    let c = &setup.constants;
    let dg = state_digest(s);
    let rec = |name: &str, lhs, rhs| CheckRecord::new(name, dg.clone(), lhs, rhs, margin).keep_state_on_failure(s);
    Ok(vec![
        rec("eep", h, c.eep.c1c2() * p),
        rec("sandwich_upper", h, c.eep.c1 * q),
        rec("sandwich_lower", q, c.eep.c2 * p),
        rec("inv_temp_gradient", grad, 2.0 * p),
        rec("dissipative_lower_bound", lower, c.dissipation_factor() * p),
    ])
}

/// `int (f log(f/g) - f + g) >= 3 / (2 |f|_1 + 4 |g|_1) |f - g|_1^2`.
pub fn ckp_lower_bound(f: &[f64], g_field: &[f64], grid: &Grid) -> Result<CheckRecord> {
    grid.check_cells(f)?;
    grid.check_cells(g_field)?;
    if let Some(v) = f.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain { what: "f", value: *v });
    }
    if let Some(v) = g_field.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain { what: "g", value: *v });
    }
    let h = grid.h();
    let mut entropy = 0.0;
    for (&fi, &gi) in f.iter().zip(g_field) {
        // g lambda(f/g), accurate near f = g
        entropy += if fi == 0.0 { gi } else { gi * boltzmann_1p((fi - gi) / gi) };
    }
    let entropy = h * entropy;
    let l1 = |v: &[f64]| h * v.iter().sum::<f64>();
    let dist = h * f.iter().zip(g_field).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let bound = 3.0 / (2.0 * l1(f) + 4.0 * l1(g_field)) * dist * dist;
    let d = digest(f.iter().chain(g_field));
    Ok(CheckRecord::new("ckp", d, bound, entropy, EXACT_MARGIN))
}

/// Seeded scalar inequalities: the logarithmic mean bound, the quadratic
/// bound on `lambda` and both bounds on the ratios of `w`.
pub fn scalar_inequality_suite(sample_count: usize, seed: u64, m: &ModelFunctions, g_w: f64) -> Result<VerificationReport> {
    if sample_count == 0 {
        return Err(Error::Domain { what: "sample_count", value: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_uniform = |lo: f64, hi: f64| (rng.gen_range(lo.ln()..hi.ln())).exp();
    let mut records = Vec::with_capacity(4 * sample_count);
    let k = g_w + 0.5;
    for _ in 0..sample_count {
        let x = log_uniform(1e-3, 1e3);
        let y = log_uniform(1e-3, 1e3);
        let z = log_uniform(1e-4, 1e2);
        let u = log_uniform(1e-4, 1e4);

        // 4 (sqrt x - sqrt y)^2 without cancellation
        let sum = x.sqrt() + y.sqrt();
        let lhs = 4.0 * (x - y) * (x - y) / (sum * sum);
        let rhs = (x - y) * ((x - y) / y).ln_1p();
        records.push(CheckRecord::new("log_mean", digest(&[x, y]), lhs, rhs, EXACT_MARGIN));

        records.push(CheckRecord::new("lambda_quadratic", digest(&[z]), boltzmann(z)?, (z - 1.0) * (z - 1.0), EXACT_MARGIN));

        let om = m.w_log_d1(u);
        let chi = m.w_neg_d2_over_w(u);
        records.push(CheckRecord::new("weight_ratio_a", digest(&[u]), 2.0 / k * om * om, k * (om * om + chi), EXACT_MARGIN));
        // w'' / w = -chi
        let rhs = 1.0 - 2.0 / k * om * om / chi;
        records.push(CheckRecord::new("weight_ratio_b", digest(&[u]), 0.5 - g_w, rhs, EXACT_MARGIN));
    }
    Ok(VerificationReport { records })
}

/// Random positive field pairs for [`ckp_lower_bound`]: white noise over
/// three decades, with zeros in `f` and near-coincident pairs mixed in.
pub fn ckp_suite(sample_count: usize, seed: u64, grid: &Grid) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = grid.cells();
    let mut records = Vec::with_capacity(sample_count);
    for i in 0..sample_count {
        let g: Vec<f64> = (0..cells).map(|_| rng.gen_range(-3.0f64..3.0).exp()).collect();
        let f: Vec<f64> = match i % 3 {
            0 => (0..cells).map(|_| rng.gen_range(-3.0f64..3.0).exp()).collect(),
            1 => (0..cells)
                .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-3.0f64..3.0).exp() })
                .collect(),
            _ => {
                let d = 10f64.powf(rng.gen_range(-6.0..-1.0));
                g.iter().map(|g| g * (1.0 + d * rng.gen_range(-1.0..1.0))).collect()
            }
        };
        records.push(ckp_lower_bound(&f, &g, grid)?);
    }
    Ok(VerificationReport { records })
}

/// `states` random admissible states spread round-robin over `setups`,
/// each checked with [`check_state`].
pub fn eep_battery(setups: &[Setup], states: usize, seed: u64, amplitude: f64, margin: f64, exec: Execution) -> Result<VerificationReport> {
    if setups.is_empty() {
        return Err(Error::Domain { what: "scenario count", value: 0.0 });
    }
    let results = exec.map(states, |i| {
        let setup = &setups[i % setups.len()];
        let s = random_admissible_state(
            derive_seed(seed, i as u64),
            &setup.grid,
            &setup.model,
            &setup.bounds,
            &setup.equilibrium,
            amplitude,
        )?;
        check_state(&s, setup, margin)
    });
    let mut records = Vec::with_capacity(5 * states);
    for r in results {
        records.extend(r?);
    }
    Ok(VerificationReport { records })
}

/// Median relative error between the centred difference of `S` and `P`
/// at interior samples.
///
/// Samples after a detected fixed point, and samples where `P dt` is
/// below the round-off of `S`, carry no information and are skipped. With
/// nothing left the trajectory is at rest and the check passes.
pub fn check_entropy_production_law(traj: &Trajectory) -> Result<CheckRecord> {
    let s = &traj.samples;
    if s.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: s.len() });
    }
    let stop = traj.fixed_point_time.unwrap_or(f64::INFINITY);
    let mut errors: Vec<f64> = s
        .windows(3)
        .filter(|w| w[2].t <= stop)
        .filter_map(|w| {
            let span = w[2].t - w[0].t;
            let p = w[1].production;
            let floor = 1e-10 * (1.0 + w[1].entropy.abs());
            if span <= 0.0 || p * span < floor {
                return None;
            }
            let rate = (w[2].entropy - w[0].entropy) / span;
            Some((rate - p).abs() / p)
        })
        .collect();
    let d = digest(s.iter().flat_map(|x| [&x.t, &x.entropy, &x.production]));
    let median = if errors.is_empty() {
        0.0
    } else {
        errors.sort_by(f64::total_cmp);
        let k = errors.len() / 2;
        if errors.len() % 2 == 1 {
            errors[k]
        } else {
            0.5 * (errors[k - 1] + errors[k])
        }
    };
    Ok(CheckRecord::new("entropy_production_law", d, median, PRODUCTION_LAW_TOL, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{reference_scenarios, scenario_a};
    use approx::assert_relative_eq;

    #[test]
    fn zero_amplitude_gives_equilibrium() {
        let su = scenario_a().setup(32).unwrap();
        let s = random_admissible_state(7, &su.grid, &su.model, &su.bounds, &su.equilibrium, 0.0).unwrap();
        assert_eq!(s, su.equilibrium.state(32));
        for r in check_state(&s, &su, DEFAULT_MARGIN).unwrap() {
            assert!(r.pass, "{r:?}");
            assert_eq!(r.lhs, 0.0, "{}", r.name);
        }
    }

    #[test]
    fn generation_is_reproducible_and_constrained() {
        for sc in reference_scenarios() {
            let su = sc.setup(64).unwrap();
            let gen = |seed| random_admissible_state(seed, &su.grid, &su.model, &su.bounds, &su.equilibrium, 0.3).unwrap();
            let a = gen(11);
            assert_eq!(a, gen(11));
            assert_ne!(a, gen(12));
            let q = functionals::total_charge(&a, &su.grid).unwrap();
            let e = functionals::total_energy(&a, &su.grid).unwrap();
            assert!(q.abs() < 1e-13);
            assert_relative_eq!(e, su.equilibrium.energy, max_relative = 1e-13);
            assert!(functionals::relative_entropy(&a, &su.equilibrium, &su.model, &su.grid).unwrap() > 0.0);
        }
    }

    #[test]
    fn tight_bounds_fail_to_generate() {
        let su = scenario_a().setup(32).unwrap();
        let eq = su.equilibrium;
        let b = Bounds { c_theta: eq.theta_inf * 1.0001, c_u_max: su.bounds.c_u_max };
        let r = random_admissible_state(1, &su.grid, &su.model, &b, &eq, 0.5);
        assert!(matches!(r, Err(Error::Generation { .. })));
    }

    #[test]
    fn sandwich_implies_eep_on_random_states() {
        let su = scenario_a().setup(128).unwrap();
        for seed in 0..20 {
            let s = random_admissible_state(seed, &su.grid, &su.model, &su.bounds, &su.equilibrium, 0.3).unwrap();
            let e = check_eep(&s, &su, DEFAULT_MARGIN).unwrap();
            let [up, low] = check_quadratic_sandwich(&s, &su, DEFAULT_MARGIN).unwrap();
            assert!(e.pass && up.pass && low.pass);
            assert!(up.ratio() * low.ratio() >= e.ratio() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn eep_ratio_stays_bounded_near_equilibrium() {
        let su = scenario_a().setup(128).unwrap();
        let ratio = |amp| {
            let s = random_admissible_state(3, &su.grid, &su.model, &su.bounds, &su.equilibrium, amp).unwrap();
            check_eep(&s, &su, 1.0).unwrap().ratio()
        };
        let r: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4].into_iter().map(ratio).collect();
        for w in r.windows(2) {
            assert!(w[1] < 2.0 * w[0] && w[1] > 0.5 * w[0], "{r:?}");
        }
        assert!(r.iter().all(|x| *x < 1.0));
    }

    #[test]
    fn ckp_examples() {
        let g = Grid::uniform(1.0, 10, 1.0).unwrap();
        let one = vec![1.0; 10];
        let r = ckp_lower_bound(&one, &one, &g).unwrap();
        assert!(r.pass);
        assert_eq!(r.lhs, 0.0);
        let r = ckp_lower_bound(&[2.0; 10], &one, &g).unwrap();
        assert_relative_eq!(r.rhs, 2.0 * 2f64.ln() - 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.lhs, 0.375, max_relative = 1e-14);
        assert!(r.pass);
        assert!(ckp_lower_bound(&[-1.0; 10], &one, &g).is_err());
        assert!(ckp_lower_bound(&one, &[0.0; 10], &g).is_err());
    }

    #[test]
    fn scalar_examples() {
        let m = scenario_a().model;
        let rep = scalar_inequality_suite(1000, 5, &m, 1.0 / 3.0).unwrap();
        assert!(rep.all_pass());
        assert_eq!(rep.summary().len(), 4);
        assert_eq!(rep.summary()[0].count, 1000);
        // x = 4, y = 1
        let rhs: f64 = 3.0 * 4f64.ln();
        assert_relative_eq!(rhs, 4.158_883_083_359_672, max_relative = 1e-15);
    }

    #[test]
    fn summary_counts_failures() {
        let rep = VerificationReport {
            records: vec![
                CheckRecord::new("a", String::new(), 1.0, 2.0, 1.0),
                CheckRecord::new("a", String::new(), 3.0, 2.0, 1.0),
                CheckRecord::new("b", String::new(), 0.0, 0.0, 1.0),
            ],
        };
        let s = rep.summary();
        assert_eq!(s[0].failures, 1);
        assert_eq!(s[0].max_ratio, 1.5);
        assert_eq!(s[1].count, 1);
        assert!(!rep.all_pass());
    }

    #[test]
    fn battery_modes_agree() {
        let setups: Vec<Setup> = reference_scenarios().iter().map(|s| s.setup(64).unwrap()).collect();
        let a = eep_battery(&setups, 12, 9, 0.3, DEFAULT_MARGIN, Execution::Sequential).unwrap();
        let b = eep_battery(&setups, 12, 9, 0.3, DEFAULT_MARGIN, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 60);
        assert!(a.all_pass(), "{:?}", a.failures().collect::<Vec<_>>());
    }
}
