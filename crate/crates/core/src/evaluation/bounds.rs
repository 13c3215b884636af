//! Second-order rate curves: achievability, converse and the normal
//! approximation, each itemized into explicit components.

use crate::codec::{jar_half_width, Mode};
use crate::composition::{density_tail, exact_tail_cond_entropy, TailSide};
use crate::error::{Error, Result};
use crate::gaussian::q_inverse;
use crate::numeric::KahanSum;
use crate::rate::{
    rate_cond_entropy, rate_mutual_info, surprisal_tilted_moments, tilted_stats, xi_lower_prefactor,
    xi_lower_prefactor_with, DEFAULT_BERRY_ESSEEN,
};
use crate::source::{
    conditional_entropy, mutual_info_t, mutual_information, sigma2_d, sigma2_h, JointSource, TypeVector,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

const VARIANCE_FLOOR: f64 = 1e-20;

/// Step of the η search grid.
pub const ETA_STEP: f64 = 0.05;

/// Upper end of the η search; far beyond any value a positive-variance
/// source needs at the block lengths the exact tails can reach.
const ETA_STEPS_MAX: u32 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    AchievabilityFixed,
    AchievabilityVariable,
    ConverseFixed,
    ConverseVariable,
    NormalApprox,
}

impl BoundKind {
    pub fn achievability(mode: Mode) -> Self {
        match mode {
            Mode::Fixed => BoundKind::AchievabilityFixed,
            Mode::Variable => BoundKind::AchievabilityVariable,
        }
    }

    pub fn converse(mode: Mode) -> Self {
        match mode {
            Mode::Fixed => BoundKind::ConverseFixed,
            Mode::Variable => BoundKind::ConverseVariable,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::AchievabilityFixed => "achievability-fixed",
            BoundKind::AchievabilityVariable => "achievability-variable",
            BoundKind::ConverseFixed => "converse-fixed",
            BoundKind::ConverseVariable => "converse-variable",
            BoundKind::NormalApprox => "normal-approx",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One point of a rate curve. `rate_nats` is the compensated sum of
/// `components` taken in key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurvePoint {
    pub n: usize,
    /// Error target; for converse curves the schedule value 1/√(n ln n).
    pub eps: f64,
    pub mode: Mode,
    pub bound_kind: BoundKind,
    pub rate_nats: f64,
    /// Named additive terms. `leading` and `dispersion` are always present.
    pub components: BTreeMap<String, f64>,
    /// Constants the terms were computed from (σ, κ, η, ...).
    pub parameters: BTreeMap<String, f64>,
}

impl BoundCurvePoint {
    fn new(
        n: usize,
        eps: f64,
        mode: Mode,
        bound_kind: BoundKind,
        terms: &[(&str, f64)],
        params: &[(&str, f64)],
    ) -> Self {
        let components: BTreeMap<String, f64> = terms.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        let rate_nats = components.values().copied().collect::<KahanSum>().value();
        Self {
            n,
            eps,
            mode,
            bound_kind,
            rate_nats,
            components,
            parameters: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn leading(&self) -> f64 {
        self.components["leading"]
    }

    pub fn dispersion(&self) -> f64 {
        self.components["dispersion"]
    }

    /// Everything except the leading and dispersion terms.
    pub fn correction(&self) -> f64 {
        self.components
            .iter()
            .filter(|(k, _)| *k != "leading" && *k != "dispersion")
            .map(|(_, v)| *v)
            .collect::<KahanSum>()
            .value()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("block length must be >= 1".into()))
    } else {
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidEps(eps))
    }
}

/// σ_H(X|Y) or σ_D(P_X;P), the dispersion constant of each family.
pub fn dispersion_sigma(src: &JointSource, mode: Mode) -> f64 {
    match mode {
        Mode::Fixed => sigma2_h(src).max(0.0).sqrt(),
        Mode::Variable => sigma2_d(src, src.marginal_x()).max(0.0).sqrt(),
    }
}

fn second_order(sigma: f64, eps: f64, n: usize) -> f64 {
    sigma * (-eps.ln() / n as f64).sqrt()
}

fn check_achievability_hypotheses(src: &JointSource, mode: Mode) -> Result<()> {
    if !src.is_strictly_positive() {
        return Err(Error::HypothesisViolated("joint pmf has a zero entry".into()));
    }
    match mode {
        Mode::Variable if mutual_information(src) <= 1e-15 => Err(Error::HypothesisViolated("I(X;Y) = 0".into())),
        Mode::Fixed if sigma2_h(src) <= VARIANCE_FLOOR => Err(Error::HypothesisViolated("sigma_H(X|Y) = 0".into())),
        _ => Ok(()),
    }
}

/// H(X|Y) + σ√(−ln ε/n) with σ = σ_H(X|Y) (fixed) or σ_D(P_X;P) (variable).
pub fn achievability_bound(src: &JointSource, n: usize, eps: f64, mode: Mode) -> Result<BoundCurvePoint> {
    check_n(n)?;
    check_eps(eps)?;
    check_achievability_hypotheses(src, mode)?;
    let sigma = dispersion_sigma(src, mode);
    Ok(BoundCurvePoint::new(
        n,
        eps,
        mode,
        BoundKind::achievability(mode),
        &[
            ("leading", conditional_entropy(src)),
            ("dispersion", second_order(sigma, eps, n)),
        ],
        &[("sigma", sigma)],
    ))
}

/// The leading two terms plus the explicit parts of a concrete
/// construction with constants (κ_w, κ_o): the jar-width excess
/// σ(1/√κ_w − 1)√(−ln ε/n), the offset κ_o(−ln ε)/n and, for variable
/// codes, the type header ln|𝒯_n(𝒳)|/n.
pub fn achievability_bound_with_kappa(
    src: &JointSource,
    n: usize,
    eps: f64,
    mode: Mode,
    kappa: [f64; 2],
) -> Result<BoundCurvePoint> {
    let base = achievability_bound(src, n, eps, mode)?;
    if !(kappa[0] > 0.0 && kappa[1] > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa constants must be positive, got {kappa:?}"
        )));
    }
    let sigma = base.parameters["sigma"];
    let width = jar_half_width(sigma, eps, kappa[0], n) - base.dispersion();
    let offset = kappa[1] * (-eps.ln()) / n as f64;
    let mut terms = vec![
        ("leading", base.leading()),
        ("dispersion", base.dispersion()),
        ("width", width),
        ("offset", offset),
    ];
    if mode == Mode::Variable {
        let types = crate::composition::count_types(n as u64, src.nx());
        terms.push(("type_header", crate::numeric::ln_biguint(&types) / n as f64));
    }
    Ok(BoundCurvePoint::new(
        n,
        eps,
        mode,
        base.bound_kind,
        &terms,
        &[("sigma", sigma), ("kappa_width", kappa[0]), ("kappa_offset", kappa[1])],
    ))
}

/// The converse error schedule ε_n = 1/√(n ln n).
pub fn converse_eps(n: usize) -> f64 {
    let nf = n as f64;
    1.0 / (nf * nf.ln()).sqrt()
}

fn check_converse_n(n: usize) -> Result<()> {
    if n < 3 {
        Err(Error::InvalidParameter(format!("converse curves need n >= 3, got {n}")))
    } else {
        Ok(())
    }
}

/// Half-width δ_n(η) = σ√(ln n / n) − η/√(n ln n).
pub fn converse_delta(sigma: f64, eta: f64, n: usize) -> f64 {
    let nf = n as f64;
    let ln_n = nf.ln();
    sigma * (ln_n / nf).sqrt() - eta / (nf * ln_n).sqrt()
}

fn eta_grid() -> impl Iterator<Item = f64> {
    (0..=ETA_STEPS_MAX).map(|k| k as f64 * ETA_STEP)
}

fn round_up_to_grid(eta: f64) -> f64 {
    if eta <= 0.0 {
        0.0
    } else {
        (eta / ETA_STEP - 1e-9).ceil() * ETA_STEP
    }
}

/// Smallest η ≥ 0 on the 0.05 grid with
/// Pr{(1/n) ln(p(Yⁿ|xⁿ)/q_t(Yⁿ)) < I(t;P) − δ_n(η)} ≥ 3ε_n for xⁿ of type t,
/// δ_n(η) = σ_D(t;P)√(ln n/n) − η/√(n ln n).
///
/// The tail is exact while the enumeration fits the budget. Past it, η comes
/// from requiring ξ(λ)e^{η/σ_D}·√(ln n) ≥ 3 with the exact-exponent
/// prefactor ξ at the tilt of δ_n(0).
pub fn calibrate_eta(src: &JointSource, t: &TypeVector, n: usize, budget: u64) -> Result<f64> {
    check_converse_n(n)?;
    if t.n() != n as u64 {
        return Err(Error::InvalidType(format!("type sums to {}, expected {n}", t.n())));
    }
    if !t.has_full_support() {
        return Err(Error::InvalidRegime("type does not have full support".into()));
    }
    let probs = t.probs();
    let s2 = sigma2_d(src, &probs);
    if !(s2 > VARIANCE_FLOOR) {
        return Err(Error::InvalidRegime("sigma_D(t;P) vanishes".into()));
    }
    let sigma = s2.sqrt();
    let info = mutual_info_t(src, &probs);
    let target = 3.0 * converse_eps(n);
    let tail = |eta: f64| density_tail(src, t, info - converse_delta(sigma, eta, n), TailSide::Below, budget);
    match search_eta(tail, target) {
        Err(Error::BudgetExceeded { .. }) => {
            let delta = converse_delta(sigma, 0.0, n).max(0.0);
            let lambda = rate_mutual_info(src, &probs, delta)?.lambda_star;
            let stats = tilted_stats(src, &probs, lambda)?;
            let xi = xi_lower_prefactor(&stats, n as u64, lambda)?;
            Ok(closed_form_eta(sigma, xi, n))
        }
        other => other,
    }
}

/// The fixed-rate analogue of [`calibrate_eta`]: smallest η ≥ 0 on the grid
/// with Pr{−(1/n) ln p(Xⁿ|Yⁿ) > H(X|Y) + δ_n(η)} ≥ 3ε_n, δ_n(η) built from
/// σ_H(X|Y).
pub fn calibrate_eta_fixed(src: &JointSource, n: usize, budget: u64) -> Result<f64> {
    check_converse_n(n)?;
    let s2 = sigma2_h(src);
    if !(s2 > VARIANCE_FLOOR) {
        return Err(Error::InvalidRegime("sigma_H(X|Y) vanishes".into()));
    }
    let sigma = s2.sqrt();
    let target = 3.0 * converse_eps(n);
    let tail = |eta: f64| {
        let delta = converse_delta(sigma, eta, n);
        if delta < 0.0 {
            // below the mean: the tail only grows, and the exact routine
            // takes nonnegative offsets
            return Ok(1.0);
        }
        exact_tail_cond_entropy(src, n as u64, delta, budget)
    };
    match search_eta(tail, target) {
        Err(Error::BudgetExceeded { .. }) => {
            let delta = converse_delta(sigma, 0.0, n).max(0.0);
            let lambda = rate_cond_entropy(src, delta)?.lambda_star;
            let (v2, v3) = surprisal_tilted_moments(src, lambda);
            let xi = xi_lower_prefactor_with(v2, v3, n as u64, lambda, DEFAULT_BERRY_ESSEEN)?;
            Ok(closed_form_eta(sigma, xi, n))
        }
        other => other,
    }
}

fn search_eta(mut tail: impl FnMut(f64) -> Result<f64>, target: f64) -> Result<f64> {
    for eta in eta_grid() {
        if tail(eta)? >= target {
            return Ok(eta);
        }
    }
    Err(Error::InvalidRegime(format!(
        "no eta <= {} reaches the tail target",
        ETA_STEPS_MAX as f64 * ETA_STEP
    )))
}

/// η with e^{η/σ}·η₁ ≥ 3 and η₁ = ξ√(ln n), rounded up to the grid.
fn closed_form_eta(sigma: f64, xi: f64, n: usize) -> f64 {
    let eta1 = xi * (n as f64).ln().sqrt();
    round_up_to_grid(sigma * (3.0 / eta1).ln())
}

/// Lower curve for codes with error at most ε_n = 1/√(n ln n):
/// H(X|Y) + σ√(−ln ε_n/n) − η/√(n ln n) − ln 2/n − (−ln ε_n)/n, and in
/// variable mode also −(|𝒳|−1) ln n/(2n). η is calibrated at the type
/// nearest P_X (variable) or on the conditional surprisal (fixed).
pub fn converse_bound(src: &JointSource, n: usize, mode: Mode, budget: u64) -> Result<BoundCurvePoint> {
    check_converse_n(n)?;
    let eps_n = converse_eps(n);
    let nf = n as f64;
    let ln_n = nf.ln();
    let sigma = dispersion_sigma(src, mode);
    let eta = match mode {
        Mode::Fixed => calibrate_eta_fixed(src, n, budget)?,
        Mode::Variable => {
            let t = TypeVector::rounded(src.marginal_x(), n as u64)?;
            calibrate_eta(src, &t, n, budget)?
        }
    };
    let mut terms = vec![
        ("leading", conditional_entropy(src)),
        ("dispersion", second_order(sigma, eps_n, n)),
        ("eta", -eta / (nf * ln_n).sqrt()),
        ("ln2", -std::f64::consts::LN_2 / nf),
        ("eps", eps_n.ln() / nf),
    ];
    if mode == Mode::Variable {
        terms.push(("type_overhead", -((src.nx() - 1) as f64) * ln_n / (2.0 * nf)));
    }
    Ok(BoundCurvePoint::new(
        n,
        eps_n,
        mode,
        BoundKind::converse(mode),
        &terms,
        &[("sigma", sigma), ("eta", eta)],
    ))
}

/// H(X|Y) + σQ⁻¹(ε)/√n.
pub fn normal_approximation(src: &JointSource, n: usize, eps: f64, mode: Mode) -> Result<BoundCurvePoint> {
    check_n(n)?;
    check_eps(eps)?;
    let sigma = dispersion_sigma(src, mode);
    if !(sigma * sigma > VARIANCE_FLOOR) {
        return Err(Error::ZeroVariance);
    }
    let quantile = q_inverse(eps);
    Ok(BoundCurvePoint::new(
        n,
        eps,
        mode,
        BoundKind::NormalApprox,
        &[
            ("leading", conditional_entropy(src)),
            ("dispersion", sigma * quantile / (n as f64).sqrt()),
        ],
        &[("sigma", sigma), ("q_inverse", quantile)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rounding() {
        assert_eq!(round_up_to_grid(-1.0), 0.0);
        assert_eq!(round_up_to_grid(0.05), 0.05);
        assert!((round_up_to_grid(0.051) - 0.10).abs() < 1e-15);
    }

    #[test]
    fn schedule() {
        let e = converse_eps(100);
        assert!((e - 1.0 / (100.0 * 100f64.ln()).sqrt()).abs() < 1e-15);
        assert!(converse_bound(&JointSource::dsbs(0.1).unwrap(), 2, Mode::Fixed, 1000).is_err());
    }

    #[test]
    fn components_sum() {
        let s = JointSource::dsbs(0.1).unwrap();
        let p = achievability_bound_with_kappa(&s, 50, 0.01, Mode::Variable, [1.5, 2.0]).unwrap();
        let sum: f64 = p.components.values().sum();
        assert!((p.rate_nats - sum).abs() < 1e-12);
        assert!(p.correction() > 0.0);
    }
}
