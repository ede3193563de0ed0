//! Explicit constants of the entropy–entropy-production estimate.
//!
//! Everything here is a closed-form function of the model, the bounds
//! `(c_theta, C_u)`, the mesh geometry and the equilibrium. The curvature
//! constants are additionally confirmed on a dense sample, and the more
//! conservative of the two values is kept.

use serde::Serialize;

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{log_spaced, ModelFunctions};
use crate::state::Bounds;

/// Sample count used to confirm the curvature constants.
pub const CURVATURE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisConstants {
    pub g_w: f64,
    pub big_g_w: f64,
    pub g_sigma: f64,
    pub c_theta: f64,
    pub c_u_max: f64,
    /// `(sigma')^-1(1 / c_theta)`
    pub c_u: f64,
    /// `1 / sigma'(C_u)`
    pub c_theta_max: f64,
    /// `w(C_u) / (c_theta w'(C_u))`
    pub n_max: f64,
    pub c_f: f64,
    pub c_p: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub length: f64,
}

pub fn compute_hypothesis_constants(b: &Bounds, m: &ModelFunctions, g: &Grid) -> Result<HypothesisConstants> {
    let c_u = m.inverse_sigma_prime(1.0 / b.c_theta)?;
    let rc = m.ratio_constants(c_u)?;
    let w = m.w_jet(b.c_u_max);
    let n_max = w.value / (b.c_theta * w.d1);
    Ok(HypothesisConstants {
        g_w: rc.g_w,
        big_g_w: rc.big_g_w,
        g_sigma: rc.g_sigma,
        c_theta: b.c_theta,
        c_u_max: b.c_u_max,
        c_u,
        c_theta_max: 1.0 / m.sigma_d1(b.c_u_max),
        n_max,
        c_f: m.rate_lower_bound(n_max),
        c_p: g.poincare_constant(),
        eps_min: g.eps_min(),
        eps_max: g.eps_max(),
        length: g.length(),
    })
}

/// Half the extreme values of `-sigma''` and `-w''` on the relevant bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureConstants {
    /// `(1/2) sup_[c_u, C_u] (-sigma'')`
    pub big_k_sigma: f64,
    /// `(1/2) sup_[c_u, C_u] (-w'')`
    pub big_k_w: f64,
    /// `(1/2) inf_(0, C_u] (-sigma'')`
    pub k_sigma: f64,
    /// `(1/2) inf_[0, C_u] (-w'')`
    pub k_w: f64,
}

fn neg_w2(m: &ModelFunctions, u: f64) -> f64 {
    -m.w_jet(u).d2
}

pub fn compute_curvature_constants(
    hc: &HypothesisConstants,
    eq: &Equilibrium,
    m: &ModelFunctions,
) -> Result<CurvatureConstants> {
    let (lo, hi) = (hc.c_u, hc.c_u_max);
    if !(lo <= eq.u_inf && eq.u_inf <= hi) {
        return Err(Error::Band { u_inf: eq.u_inf, c_u: lo, upper: hi });
    }
    // both second derivatives are monotone for the built-in families
    let closed = CurvatureConstants {
        big_k_sigma: 0.5 * (-m.sigma_d2(lo)).max(-m.sigma_d2(hi)),
        big_k_w: 0.5 * neg_w2(m, lo).max(neg_w2(m, hi)),
        k_sigma: 0.5 * -m.sigma_d2(hi),
        k_w: 0.5 * neg_w2(m, 0.0).min(neg_w2(m, hi)),
    };
    let band = linspace(lo, hi, CURVATURE_SAMPLES);
    let below = log_spaced(hi * 1e-6, hi, CURVATURE_SAMPLES);
    let full = linspace(0.0, hi, CURVATURE_SAMPLES);
    let sup = |f: &dyn Fn(f64) -> f64, xs: &[f64]| xs.iter().map(|&u| f(u)).fold(f64::NEG_INFINITY, f64::max);
    let inf = |f: &dyn Fn(f64) -> f64, xs: &[f64]| xs.iter().map(|&u| f(u)).fold(f64::INFINITY, f64::min);
    let s2 = |u: f64| -m.sigma_d2(u);
    let w2 = |u: f64| neg_w2(m, u);
    Ok(CurvatureConstants {
        big_k_sigma: closed.big_k_sigma.max(0.5 * sup(&s2, &band)),
        big_k_w: closed.big_k_w.max(0.5 * sup(&w2, &band)),
        k_sigma: closed.k_sigma.min(0.5 * inf(&s2, &below)),
        k_w: closed.k_w.min(0.5 * inf(&w2, &full)),
    })
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { hi } else { lo + step * i as f64 }).collect()
}

/// Pointwise confirmation of a quadratic Taylor-remainder bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureCertificate {
    pub name: &'static str,
    pub samples: usize,
    pub failures: usize,
    /// Largest `remainder / (constant (u - u_inf)^2)` for upper bounds,
    /// smallest for lower bounds.
    pub extreme_ratio: f64,
    pub pass: bool,
}

/// Checks `k (u - u_inf)^2 <= -remainder(u) <= K (u - u_inf)^2` for both
/// `sigma` and `w` on their respective sampling bands.
pub fn certify_curvature(
    hc: &HypothesisConstants,
    k: &CurvatureConstants,
    eq: &Equilibrium,
    m: &ModelFunctions,
) -> Vec<CurvatureCertificate> {
    let u0 = eq.u_inf;
    let band = linspace(hc.c_u, hc.c_u_max, CURVATURE_SAMPLES);
    let below = log_spaced(hc.c_u_max * 1e-6, hc.c_u_max, CURVATURE_SAMPLES);
    let full = linspace(0.0, hc.c_u_max, CURVATURE_SAMPLES);
    let rem_s = |u: f64| -m.sigma_remainder(u, u0);
    let rem_w = |u: f64| -m.w_remainder(u, u0);
    let check = |name, f: &dyn Fn(f64) -> f64, c: f64, xs: &[f64], upper: bool| {
        let mut failures = 0;
        let mut extreme = if upper { 0.0 } else { f64::INFINITY };
        let mut samples = 0;
        for &u in xs {
            let q = (u - u0) * (u - u0);
            if q == 0.0 {
                continue;
            }
            samples += 1;
            let ratio = f(u) / (c * q);
            // relative slack for the rounding of the remainder itself
            if upper {
                extreme = f64::max(extreme, ratio);
                failures += usize::from(ratio > 1.0 + 1e-9);
            } else {
                extreme = f64::min(extreme, ratio);
                failures += usize::from(ratio < 1.0 - 1e-9);
            }
        }
        CurvatureCertificate {
            name,
            samples,
            failures,
            extreme_ratio: extreme,
            pass: failures == 0,
        }
    };
    vec![
        check("K_sigma", &rem_s, k.big_k_sigma, &band, true),
        check("K_w", &rem_w, k.big_k_w, &band, true),
        check("k_sigma", &rem_s, k.k_sigma, &below, false),
        check("k_w", &rem_w, k.k_w, &full, false),
    ]
}

/// All constants of the decay estimate. `c3` is the Corollary prefactor for
/// unit initial relative entropy; multiply by `H0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EepConstants {
    pub c1: f64,
    pub c2_tilde: f64,
    pub c2: f64,
    pub c3_per_h0: f64,
    /// `1 / (C1 C2)`
    pub rate: f64,
}

impl EepConstants {
    pub fn c1c2(&self) -> f64 {
        self.c1 * self.c2
    }

    pub fn c3(&self, h0: f64) -> f64 {
        self.c3_per_h0 * h0
    }
}

pub fn compute_c1(hc: &HypothesisConstants, k: &CurvatureConstants, eq: &Equilibrium, m: &ModelFunctions) -> f64 {
    let w0 = m.w_jet(0.0);
    let first = 2.0 / w0.value + hc.c_p / (eq.theta_inf * hc.eps_min);
    let second = 2.0 * (2.0 * w0.d1 * w0.d1 / w0.value + k.big_k_w) + k.big_k_sigma;
    first.max(second)
}

/// `(C2_tilde, C2)`.
pub fn compute_c2(hc: &HypothesisConstants, m: &ModelFunctions) -> Result<(f64, f64)> {
    if !(hc.g_w < 0.5) {
        return Err(Error::Hypothesis(format!("g_w = {} must be below 1/2", hc.g_w)));
    }
    let s1 = m.sigma_d1(hc.c_u_max);
    let s2 = m.sigma_d2(hc.c_u_max);
    let w = m.w_jet(hc.c_u_max);
    let (eps_min, eps_max, c_p) = (hc.eps_min, hc.eps_max, hc.c_p);
    let big_g = hc.g_sigma.max(hc.big_g_w);
    let reaction = f64::max(1.0, s1 / (4.0 * eps_max * hc.c_f)) + 2.0 * big_g * big_g;
    let coupling = 2.0 * eps_max / (1.0 - 2.0 * hc.g_w);
    let poincare = (c_p / eps_min) * (c_p * w.value * w.value / (4.0 * eps_min * hc.c_theta * w.d1 * w.d1) - 1.0 / s2);
    let c2_tilde = reaction * coupling * f64::max(1.0 / s1, poincare);
    let w0 = m.w_jet(0.0).d1;
    Ok((c2_tilde, (2.0 + f64::max(4.0 * w0 * w0 - 1.0, 0.0)) * c2_tilde))
}

pub fn compute_c3(hc: &HypothesisConstants, k: &CurvatureConstants, eq: &Equilibrium, m: &ModelFunctions, h0: f64) -> f64 {
    let omega = hc.length;
    let w = m.w_jet(hc.c_u_max);
    let w0 = m.w_jet(0.0).d1;
    let densities = 2.0 * omega
        * (2.0 * w.value / (3.0 * hc.c_theta * w.d1) + 4.0 * w.value / 3.0 + w0 * w0 / (2.0 * k.k_w));
    let energy = omega / k.k_sigma;
    let field = 2.0 * (1.0 + hc.c_p) * eq.theta_inf / hc.eps_min;
    densities.max(energy).max(field) * h0
}

pub fn compute_eep_constants(
    hc: &HypothesisConstants,
    k: &CurvatureConstants,
    eq: &Equilibrium,
    m: &ModelFunctions,
) -> Result<EepConstants> {
    let c1 = compute_c1(hc, k, eq, m);
    let (c2_tilde, c2) = compute_c2(hc, m)?;
    Ok(EepConstants {
        c1,
        c2_tilde,
        c2,
        c3_per_h0: compute_c3(hc, k, eq, m, 1.0),
        rate: 1.0 / (c1 * c2),
    })
}

/// The complete constant set for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantSet {
    pub hypothesis: HypothesisConstants,
    pub curvature: CurvatureConstants,
    pub eep: EepConstants,
}

impl ConstantSet {
    pub fn compute(b: &Bounds, m: &ModelFunctions, g: &Grid, eq: &Equilibrium) -> Result<Self> {
        let hypothesis = compute_hypothesis_constants(b, m, g)?;
        let curvature = compute_curvature_constants(&hypothesis, eq, m)?;
        let eep = compute_eep_constants(&hypothesis, &curvature, eq, m)?;
        Ok(Self { hypothesis, curvature, eep })
    }

    /// `1 + 2 max{G_sigma, G_w}^2 (g_w + 1/2)`, the factor in front of the
    /// entropy production in the dissipative lower bound.
    pub fn dissipation_factor(&self) -> f64 {
        let g = self.hypothesis.g_sigma.max(self.hypothesis.big_g_w);
        1.0 + 2.0 * g * g * (self.hypothesis.g_w + 0.5)
    }
}
