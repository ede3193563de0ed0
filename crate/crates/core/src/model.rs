//! Model functions: thermal entropy, equilibrium density and reaction rate.
//!
//! The entropy density of the two-species system is
//! `S(n, p, u) = sigma(u) + n log w(u) - lambda(n) + p log w(u) - lambda(p)`
//! with the Boltzmann function `lambda(s) = s log s - s + 1`. This module
//! evaluates the three model families together with their first two
//! derivatives, and certifies the structural hypotheses the entropy method
//! needs (monotonicity, concavity and the ratio bounds between `w`, `w'`,
//! `w''` and `sigma'`, `sigma''`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value and first two derivatives of a scalar function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn as_tuple(self) -> (f64, f64, f64) {
        (self.value, self.d1, self.d2)
    }
}

/// Thermal entropy `sigma(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThermalEntropy {
    /// `sigma(u) = a log u`
    Log { a: f64 },
    /// `sigma(u) = a u^alpha`, `alpha` in (0, 1)
    Power { a: f64, alpha: f64 },
}

/// Equilibrium density `w(u) = b (1 + u)^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerWeight {
    pub b: f64,
    pub beta: f64,
}

/// Prefactor `F(n, p, u)` of the recombination term `F (w^2 - n p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionRate {
    Constant { f0: f64 },
    /// Shockley-Read-Hall type `1 / (k1 + k2 n + k3 p)`.
    Srh { k1: f64, k2: f64, k3: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFunctions {
    pub sigma: ThermalEntropy,
    pub weight: PowerWeight,
    pub rate: ReactionRate,
}

/// Constants certifying the ratio hypotheses on `w` and `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioConstants {
    /// `(w')^2 <= -g_w w'' w`
    pub g_w: f64,
    /// `-w'' w <= G_w (w')^2`
    pub big_g_w: f64,
    /// `-sigma'' w <= G_sigma(c_u) sigma' w'` on `[c_u, inf)`
    pub g_sigma: f64,
}

fn positive(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

fn unit_open(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

impl ModelFunctions {
    /// Builds a model after checking parameter ranges.
    ///
    /// `beta` only has to lie in (0, 1) here; the stronger `beta < 1/3`
    /// needed by the entropy method is enforced by [`Self::ratio_constants`]
    /// and reported by [`check_hypotheses`].
    pub fn new(sigma: ThermalEntropy, weight: PowerWeight, rate: ReactionRate) -> Result<Self> {
        match sigma {
            ThermalEntropy::Log { a } => positive("sigma.a", a)?,
            ThermalEntropy::Power { a, alpha } => {
                positive("sigma.a", a)?;
                unit_open("sigma.alpha", alpha)?;
            }
        }
        positive("weight.b", weight.b)?;
        unit_open("weight.beta", weight.beta)?;
        match rate {
            ReactionRate::Constant { f0 } => positive("rate.F0", f0)?,
            ReactionRate::Srh { k1, k2, k3 } => {
                positive("rate.k1", k1)?;
                if !(k2 >= 0.0 && k2.is_finite()) {
                    return Err(Error::Domain { what: "rate.k2", value: k2 });
                }
                if !(k3 >= 0.0 && k3.is_finite()) {
                    return Err(Error::Domain { what: "rate.k3", value: k3 });
                }
            }
        }
        Ok(Self { sigma, weight, rate })
    }

    pub fn eval_sigma(&self, u: f64) -> Result<Jet> {
        if !(u > 0.0) {
            return Err(Error::Domain { what: "sigma(u)", value: u });
        }
        Ok(self.sigma_jet(u))
    }

    pub fn eval_w(&self, u: f64) -> Result<Jet> {
        if !(u >= 0.0) {
            return Err(Error::Domain { what: "w(u)", value: u });
        }
        Ok(self.w_jet(u))
    }

    /// Unchecked `sigma` jet; callers guarantee `u > 0`.
    #[inline]
    pub fn sigma_jet(&self, u: f64) -> Jet {
        match self.sigma {
            ThermalEntropy::Log { a } => Jet {
                value: a * u.ln(),
                d1: a / u,
                d2: -a / (u * u),
            },
            ThermalEntropy::Power { a, alpha } => {
                let value = a * u.powf(alpha);
                let d1 = alpha * value / u;
                Jet {
                    value,
                    d1,
                    d2: (alpha - 1.0) * d1 / u,
                }
            }
        }
    }

    #[inline]
    pub fn sigma_d1(&self, u: f64) -> f64 {
        match self.sigma {
            ThermalEntropy::Log { a } => a / u,
            ThermalEntropy::Power { a, alpha } => a * alpha * u.powf(alpha - 1.0),
        }
    }

    #[inline]
    pub fn sigma_d2(&self, u: f64) -> f64 {
        match self.sigma {
            ThermalEntropy::Log { a } => -a / (u * u),
            ThermalEntropy::Power { a, alpha } => a * alpha * (alpha - 1.0) * u.powf(alpha - 2.0),
        }
    }

    /// `(sigma'(u), sigma''(u))` with a single power evaluation.
    #[inline]
    pub fn sigma_d12(&self, u: f64) -> (f64, f64) {
        match self.sigma {
            ThermalEntropy::Log { a } => (a / u, -a / (u * u)),
            ThermalEntropy::Power { a, alpha } => {
                let d1 = a * alpha * u.powf(alpha - 1.0);
                (d1, (alpha - 1.0) * d1 / u)
            }
        }
    }

    /// Unchecked `w` jet; callers guarantee `u >= 0`.
    #[inline]
    pub fn w_jet(&self, u: f64) -> Jet {
        let PowerWeight { b, beta } = self.weight;
        let s = 1.0 + u;
        let value = b * s.powf(beta);
        let d1 = beta * value / s;
        Jet {
            value,
            d1,
            d2: (beta - 1.0) * d1 / s,
        }
    }

    #[inline]
    pub fn w(&self, u: f64) -> f64 {
        self.weight.b * (1.0 + u).powf(self.weight.beta)
    }

    /// `w'(u) / w(u)`, exact for the power family.
    #[inline]
    pub fn w_log_d1(&self, u: f64) -> f64 {
        self.weight.beta / (1.0 + u)
    }

    /// `-w''(u) / w(u)`, positive.
    #[inline]
    pub fn w_neg_d2_over_w(&self, u: f64) -> f64 {
        let beta = self.weight.beta;
        let s = 1.0 + u;
        beta * (1.0 - beta) / (s * s)
    }

    /// Reaction prefactor `F(n, p, u)`.
    #[inline]
    pub fn rate_prefactor(&self, n: f64, p: f64) -> f64 {
        match self.rate {
            ReactionRate::Constant { f0 } => f0,
            ReactionRate::Srh { k1, k2, k3 } => 1.0 / (k1 + k2 * n + k3 * p),
        }
    }

    /// Lower bound `c_F` of the reaction prefactor on states with
    /// `n, p <= n_max`.
    pub fn rate_lower_bound(&self, n_max: f64) -> f64 {
        match self.rate {
            ReactionRate::Constant { f0 } => f0,
            ReactionRate::Srh { k1, k2, k3 } => 1.0 / (k1 + (k2 + k3) * n_max),
        }
    }

    /// The unique `u` with `sigma'(u) = y`.
    pub fn inverse_sigma_prime(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain { what: "(sigma')^-1(y)", value: y });
        }
        Ok(match self.sigma {
            ThermalEntropy::Log { a } => a / y,
            ThermalEntropy::Power { a, alpha } => (a * alpha / y).powf(1.0 / (1.0 - alpha)),
        })
    }

    /// `sigma(u) - sigma(u0) - sigma'(u0) (u - u0)`, evaluated without
    /// cancellation for `u` close to `u0`. Non-positive by concavity.
    pub fn sigma_remainder(&self, u: f64, u0: f64) -> f64 {
        let d = (u - u0) / u0;
        match self.sigma {
            ThermalEntropy::Log { a } => a * log1p_minus_identity(d),
            ThermalEntropy::Power { a, alpha } => a * u0.powf(alpha) * binomial_remainder(alpha, d),
        }
    }

    /// `w(u) - w(u0) - w'(u0) (u - u0)`, evaluated without cancellation.
    pub fn w_remainder(&self, u: f64, u0: f64) -> f64 {
        let PowerWeight { b, beta } = self.weight;
        let s0 = 1.0 + u0;
        b * s0.powf(beta) * binomial_remainder(beta, (u - u0) / s0)
    }

    /// `(g_w, G_w, G_sigma(c_u))` in closed form for the power weight.
    pub fn ratio_constants(&self, c_u: f64) -> Result<RatioConstants> {
        positive("c_u", c_u)?;
        let beta = self.weight.beta;
        if beta >= 1.0 / 3.0 {
            return Err(Error::Hypothesis(format!(
                "beta = {beta} gives g_w = beta/(1-beta) = {} >= 1/2",
                beta / (1.0 - beta)
            )));
        }
        let g_sigma = match self.sigma {
            ThermalEntropy::Log { .. } => (1.0 + c_u) / (beta * c_u),
            ThermalEntropy::Power { alpha, .. } => (1.0 - alpha) * (1.0 + c_u) / (beta * c_u),
        };
        Ok(RatioConstants {
            g_w: beta / (1.0 - beta),
            big_g_w: (1.0 - beta) / beta,
            g_sigma,
        })
    }
}

/// Boltzmann function `lambda(s) = s log s - s + 1` with `lambda(0) = 1`.
pub fn boltzmann(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain { what: "lambda(s)", value: s });
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let x = s - 1.0;
    if x.abs() < 0.5 {
        Ok(boltzmann_1p(x))
    } else {
        Ok(s * s.ln() - s + 1.0)
    }
}

/// `lambda(1 + x)` for `x > -1`, accurate to relative round-off near `x = 0`.
#[inline]
pub fn boltzmann_1p(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // sum_{k>=2} (-1)^k x^k / (k (k - 1))
        let x2 = x * x;
        x2 * (0.5 + x * (-1.0 / 6.0 + x * (1.0 / 12.0 + x * (-1.0 / 20.0 + x / 30.0))))
    } else {
        (1.0 + x) * x.ln_1p() - x
    }
}

/// `c log(c / w) - c + w = w lambda(c / w)`, accurate near `c = w`.
#[inline]
pub fn weighted_boltzmann(c: f64, w: f64) -> f64 {
    if c == 0.0 {
        return w;
    }
    w * boltzmann_1p((c - w) / w)
}

/// `log(1 + d) - d`.
#[inline]
pub fn log1p_minus_identity(d: f64) -> f64 {
    if d.abs() < 1e-3 {
        let d2 = d * d;
        d2 * (-0.5 + d * (1.0 / 3.0 + d * (-0.25 + d * (0.2 - d / 6.0))))
    } else {
        d.ln_1p() - d
    }
}

/// `(1 + d)^a - 1 - a d`.
#[inline]
pub fn binomial_remainder(a: f64, d: f64) -> f64 {
    if d.abs() < 1e-3 {
        // a(a-1)/2 d^2 + a(a-1)(a-2)/6 d^3 + ...
        let c2 = a * (a - 1.0) / 2.0;
        let c3 = c2 * (a - 2.0) / 3.0;
        let c4 = c3 * (a - 3.0) / 4.0;
        let c5 = c4 * (a - 4.0) / 5.0;
        let c6 = c5 * (a - 5.0) / 6.0;
        d * d * (c2 + d * (c3 + d * (c4 + d * (c5 + d * c6))))
    } else {
        (a * d.ln_1p()).exp_m1() - a * d
    }
}

/// Number of log-spaced points used to confirm the hypotheses.
pub const HYPOTHESIS_SAMPLES: usize = 10_000;
/// Sampling interval for the hypothesis checks.
pub const HYPOTHESIS_RANGE: (f64, f64) = (1e-6, 1e6);
/// Lower cut-offs `c` at which the `G_sigma(c)` hypothesis is confirmed.
pub const G_SIGMA_CUTOFFS: [f64; 5] = [1e-3, 1e-2, 1e-1, 1.0, 10.0];

const SAMPLE_RTOL: f64 = 1e-12;

pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                (a + (b - a) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisEntry {
    pub name: String,
    pub statement: String,
    pub pass: bool,
    /// Closed-form certifying constant, if the hypothesis has one.
    pub constant: Option<f64>,
    pub samples: usize,
    pub sampled_failures: usize,
    /// Largest sampled value of `lhs / rhs` (at most 1 when the check holds).
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub entries: Vec<HypothesisEntry>,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&HypothesisEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

struct Tally {
    samples: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self { samples: 0, failures: 0, worst: f64::NEG_INFINITY }
    }

    /// Records `lhs <= rhs` up to relative round-off.
    fn le(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        if !(lhs <= rhs + SAMPLE_RTOL * rhs.abs().max(lhs.abs())) {
            self.failures += 1;
        }
        if rhs != 0.0 {
            self.worst = self.worst.max(lhs / rhs);
        }
    }

    fn holds(&mut self, ok: bool) {
        self.samples += 1;
        if !ok {
            self.failures += 1;
        }
    }
}

/// Confirms (M1), (M2), (W1)-(W3) and (R) for `model`.
///
/// Closed-form constants are the certificate; the log-spaced sampling over
/// [`HYPOTHESIS_RANGE`] only confirms them. Failures are reported, never
/// raised.
pub fn check_hypotheses(model: &ModelFunctions) -> HypothesisReport {
    let grid = log_spaced(HYPOTHESIS_RANGE.0, HYPOTHESIS_RANGE.1, HYPOTHESIS_SAMPLES);
    let beta = model.weight.beta;
    let g_w = beta / (1.0 - beta);
    let big_g_w = (1.0 - beta) / beta;
    let mut entries = Vec::new();

    let mut m1 = Tally::new();
    for &u in &grid {
        let s = model.sigma_jet(u);
        m1.holds(s.d1 > 0.0 && s.d2 < 0.0);
    }
    entries.push(HypothesisEntry {
        name: "M1".into(),
        statement: "sigma' > 0 and sigma'' < 0 on (0, inf)".into(),
        pass: m1.failures == 0,
        constant: None,
        samples: m1.samples,
        sampled_failures: m1.failures,
        worst_ratio: 0.0,
    });

    let mut m2 = Tally::new();
    m2.holds(model.w(0.0) > 0.0);
    for &u in &grid {
        let w = model.w_jet(u);
        m2.holds(w.value > 0.0 && w.d1 > 0.0 && w.d2 < 0.0);
    }
    entries.push(HypothesisEntry {
        name: "M2".into(),
        statement: "w' > 0, w'' < 0 on (0, inf) and w(0) > 0".into(),
        pass: m2.failures == 0,
        constant: Some(model.w(0.0)),
        samples: m2.samples,
        sampled_failures: m2.failures,
        worst_ratio: 0.0,
    });

    let mut w1 = Tally::new();
    let mut w2 = Tally::new();
    for &u in &grid {
        let w = model.w_jet(u);
        w1.le(w.d1 * w.d1, -g_w * w.d2 * w.value);
        w2.le(-w.d2 * w.value, big_g_w * w.d1 * w.d1);
    }
    entries.push(HypothesisEntry {
        name: "W1".into(),
        statement: "(w')^2 <= -g_w w'' w with g_w = beta/(1-beta) < 1/2".into(),
        pass: w1.failures == 0 && g_w < 0.5,
        constant: Some(g_w),
        samples: w1.samples,
        sampled_failures: w1.failures,
        worst_ratio: w1.worst,
    });
    entries.push(HypothesisEntry {
        name: "W2".into(),
        statement: "-w'' w <= G_w (w')^2 with G_w = (1-beta)/beta".into(),
        pass: w2.failures == 0,
        constant: Some(big_g_w),
        samples: w2.samples,
        sampled_failures: w2.failures,
        worst_ratio: w2.worst,
    });

    let mut w3 = Tally::new();
    let mut w3_constant = None;
    for &c in &G_SIGMA_CUTOFFS {
        let g_sigma = match model.sigma {
            ThermalEntropy::Log { .. } => (1.0 + c) / (beta * c),
            ThermalEntropy::Power { alpha, .. } => (1.0 - alpha) * (1.0 + c) / (beta * c),
        };
        if c == 1.0 {
            w3_constant = Some(g_sigma);
        }
        for &u in grid.iter().filter(|&&u| u >= c) {
            let s = model.sigma_jet(u);
            let w = model.w_jet(u);
            w3.le(-s.d2 * w.value, g_sigma * s.d1 * w.d1);
        }
    }
    entries.push(HypothesisEntry {
        name: "W3".into(),
        statement: "-sigma'' w <= G_sigma(c) sigma' w' on [c, inf); constant reported for c = 1".into(),
        pass: w3.failures == 0,
        constant: w3_constant,
        samples: w3.samples,
        sampled_failures: w3.failures,
        worst_ratio: w3.worst,
    });

    let c_f = match model.rate {
        ReactionRate::Constant { f0 } => f0,
        ReactionRate::Srh { k1, .. } => 1.0 / k1,
    };
    entries.push(HypothesisEntry {
        name: "R".into(),
        statement: "F(n, p, u) > 0; c_F > 0 once n, p are bounded".into(),
        pass: c_f > 0.0,
        constant: None,
        samples: 0,
        sampled_failures: 0,
        worst_ratio: 0.0,
    });

    HypothesisReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn log_model(a: f64, b: f64, beta: f64) -> ModelFunctions {
        ModelFunctions::new(
            ThermalEntropy::Log { a },
            PowerWeight { b, beta },
            ReactionRate::Constant { f0: 1.0 },
        )
        .unwrap()
    }

    fn power_model(a: f64, alpha: f64, beta: f64) -> ModelFunctions {
        ModelFunctions::new(
            ThermalEntropy::Power { a, alpha },
            PowerWeight { b: 1.0, beta },
            ReactionRate::Constant { f0: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn sigma_examples() {
        let m = log_model(1.0, 1.0, 0.25);
        assert_eq!(m.eval_sigma(1.0).unwrap().as_tuple(), (0.0, 1.0, -1.0));
        assert!(matches!(m.eval_sigma(0.0), Err(Error::Domain { .. })));

        let (v, d1, d2) = power_model(2.0, 0.5, 0.25).eval_sigma(4.0).unwrap().as_tuple();
        assert_relative_eq!(v, 4.0, max_relative = 1e-15);
        assert_relative_eq!(d1, 0.5, max_relative = 1e-15);
        assert_relative_eq!(d2, -0.0625, max_relative = 1e-15);
    }

    #[test]
    fn w_examples() {
        let (v, d1, d2) = log_model(1.0, 1.0, 0.25).eval_w(0.0).unwrap().as_tuple();
        assert_eq!((v, d1, d2), (1.0, 0.25, -0.1875));
        let (v, d1, d2) = log_model(1.0, 2.0, 0.25).eval_w(0.0).unwrap().as_tuple();
        assert_eq!((v, d1, d2), (2.0, 0.5, -0.375));
        let (v, d1, d2) = log_model(1.0, 1.0, 0.25).eval_w(3.0).unwrap().as_tuple();
        assert_relative_eq!(v, 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(d1, 0.25 * 4f64.powf(-0.75), max_relative = 1e-15);
        assert_relative_eq!(d2, -0.1875 * 4f64.powf(-1.75), max_relative = 1e-15);
        assert!(log_model(1.0, 1.0, 0.25).eval_w(-1e-9).is_err());
    }

    #[test]
    fn boltzmann_examples() {
        assert_eq!(boltzmann(1.0).unwrap(), 0.0);
        assert_eq!(boltzmann(0.0).unwrap(), 1.0);
        assert_relative_eq!(boltzmann(std::f64::consts::E).unwrap(), 1.0, max_relative = 1e-15);
        assert!(boltzmann(-0.1).is_err());
    }

    #[test]
    fn boltzmann_branches_agree() {
        for &x in &[-0.4f64, -1e-2, -1.1e-3, -9e-4, 1e-5, 9e-4, 1.1e-3, 0.3] {
            let naive = (1.0 + x) * (1.0 + x).ln() - (1.0 + x) + 1.0;
            assert_relative_eq!(boltzmann_1p(x), naive, max_relative = 1e-8);
        }
        // x = 1e-9: naive evaluation loses everything, the series does not
        assert_relative_eq!(boltzmann_1p(1e-9), 0.5e-18, max_relative = 1e-8);
    }

    #[test]
    fn inverse_sigma_prime_examples() {
        assert_relative_eq!(log_model(1.0, 1.0, 0.25).inverse_sigma_prime(2.0).unwrap(), 0.5);
        assert_eq!(log_model(1.0, 1.0, 0.25).inverse_sigma_prime(1.0).unwrap(), 1.0);
        assert_relative_eq!(
            power_model(2.0, 0.5, 0.25).inverse_sigma_prime(1.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(log_model(1.0, 1.0, 0.25).inverse_sigma_prime(0.0).is_err());
    }

    #[test]
    fn ratio_constant_examples() {
        let rc = log_model(1.0, 1.0, 0.25).ratio_constants(1.0).unwrap();
        assert_relative_eq!(rc.g_w, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(rc.big_g_w, 3.0, max_relative = 1e-15);
        assert_relative_eq!(rc.g_sigma, 8.0, max_relative = 1e-15);
        let rc = power_model(1.0, 0.5, 0.25).ratio_constants(1.0).unwrap();
        assert_relative_eq!(rc.g_sigma, 4.0, max_relative = 1e-15);
        assert!(matches!(
            log_model(1.0, 1.0, 0.4).ratio_constants(1.0),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn hypotheses_pass_for_reference_model() {
        let report = check_hypotheses(&log_model(1.0, 1.0, 0.25));
        assert!(report.all_pass(), "{report:#?}");
        // the W1 ratio is constant for the power family
        assert_relative_eq!(report.entry("W1").unwrap().worst_ratio, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn w1_fails_for_large_beta() {
        let report = check_hypotheses(&log_model(1.0, 1.0, 0.5));
        assert!(!report.entry("W1").unwrap().pass);
        assert!(report.entry("W2").unwrap().pass);
    }

    #[test]
    fn remainders_match_direct_evaluation() {
        for m in [log_model(1.3, 0.7, 0.2), power_model(2.0, 0.4, 0.3)] {
            for &(u, u0) in &[(0.3, 1.0), (2.5, 1.0), (1.2, 1.1), (0.9, 0.8)] {
                let s = m.sigma_jet(u0);
                let direct = m.sigma_jet(u).value - s.value - s.d1 * (u - u0);
                assert_relative_eq!(m.sigma_remainder(u, u0), direct, max_relative = 1e-9);
                let w0 = m.w_jet(u0);
                let direct = m.w(u) - w0.value - w0.d1 * (u - u0);
                assert_relative_eq!(m.w_remainder(u, u0), direct, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn srh_rate_and_lower_bound() {
        let m = ModelFunctions::new(
            ThermalEntropy::Log { a: 1.0 },
            PowerWeight { b: 1.0, beta: 0.25 },
            ReactionRate::Srh { k1: 1.0, k2: 0.0, k3: 0.0 },
        )
        .unwrap();
        assert_eq!(m.rate_lower_bound(24.0), 1.0);
        assert!(ModelFunctions::new(
            ThermalEntropy::Log { a: 1.0 },
            PowerWeight { b: 1.0, beta: 0.25 },
            ReactionRate::Srh { k1: 0.0, k2: 1.0, k3: 1.0 },
        )
        .is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn any_model() -> impl Strategy<Value = ModelFunctions> {
            (0.1f64..5.0, 0.05f64..0.95, 0.1f64..5.0, 0.02f64..0.33, any::<bool>()).prop_map(
                |(a, alpha, b, beta, log)| {
                    let sigma = if log {
                        ThermalEntropy::Log { a }
                    } else {
                        ThermalEntropy::Power { a, alpha }
                    };
                    ModelFunctions::new(sigma, PowerWeight { b, beta }, ReactionRate::Constant { f0: 1.0 })
                        .unwrap()
                },
            )
        }

        proptest! {
            #[test]
            fn signs_of_derivatives(m in any_model(), logu in -13.0f64..13.0) {
                let u = logu.exp();
                let s = m.sigma_jet(u);
                let w = m.w_jet(u);
                prop_assert!(s.d1 > 0.0 && s.d2 < 0.0);
                prop_assert!(w.value > 0.0 && w.d1 > 0.0 && w.d2 < 0.0);
            }

            #[test]
            fn power_weight_ratio_is_constant(m in any_model(), logu in -13.0f64..13.0) {
                let w = m.w_jet(logu.exp());
                let beta = m.weight.beta;
                let ratio = w.d1 * w.d1 / (-w.d2 * w.value);
                prop_assert!((ratio - beta / (1.0 - beta)).abs() <= 1e-12 * ratio);
            }

            #[test]
            fn inverse_sigma_prime_roundtrip(m in any_model(), logu in -13.0f64..13.0) {
                let u = logu.exp();
                let back = m.inverse_sigma_prime(m.sigma_d1(u)).unwrap();
                prop_assert!((back - u).abs() <= 1e-12 * u);
            }

            #[test]
            fn boltzmann_below_quadratic(s in 1e-12f64..=100.0) {
                let z = boltzmann(s).unwrap();
                prop_assert!(z >= 0.0);
                prop_assert!(z <= (s - 1.0) * (s - 1.0) * (1.0 + 1e-12) + 1e-300);
            }
        }
    }
}
