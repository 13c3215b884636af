//! Code construction for both families.

use super::calibrate::calibrate_c0;
use super::code::{CodeSpec, Layout, TypeBinning};
use super::prf::{ceil_exp, field_width};
use crate::composition::{count_types, enumerate_types, type_class_size, type_probability, JarSpec};
use crate::error::{Error, Result};
use crate::numeric::{ln_biguint, KahanSum};
use crate::source::{conditional_entropy, f_of_t, mutual_information, sigma2_d, sigma2_h, JointSource};
use std::collections::HashMap;
use std::sync::OnceLock;

/// Variances below this are treated as zero.
pub(crate) const VARIANCE_FLOOR: f64 = 1e-20;

/// Slack on the Γ_X radius comparison so grid-aligned distances are inside.
const GAMMA_TOL: f64 = 1e-12;

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidEps(eps))
    }
}

pub(crate) fn check_kappa(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// δ_n = σ√((−ln ε/κ)/n).
pub fn jar_half_width(sigma: f64, eps: f64, kappa: f64, n: usize) -> f64 {
    sigma * ((-eps.ln() / kappa) / n as f64).sqrt()
}

/// L1 radius of Γ_X: c₀√(ln n / n).
pub fn gamma_radius(c0: f64, n: usize) -> f64 {
    c0 * ((n as f64).ln() / n as f64).sqrt()
}

pub(crate) fn in_gamma(distance: f64, radius: f64) -> bool {
    distance <= radius + GAMMA_TOL
}

pub(crate) fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Fixed-rate code: R = H(X|Y) + δ_n + κ₄(−ln ε)/n, M = ⌈e^{nR}⌉, jar
/// threshold H(X|Y) + δ_n.
pub fn build_fixed_code(
    src: &JointSource,
    n: usize,
    eps: f64,
    kappa3: f64,
    kappa4: f64,
    seed: u64,
) -> Result<CodeSpec> {
    if n == 0 {
        return Err(Error::InvalidParameter("block length must be >= 1".into()));
    }
    check_eps(eps)?;
    check_kappa("kappa3", kappa3)?;
    check_kappa("kappa4", kappa4)?;
    let s2 = sigma2_h(src);
    if s2 <= VARIANCE_FLOOR {
        return Err(Error::ZeroVariance);
    }
    let delta_n = jar_half_width(s2.sqrt(), eps, kappa3, n);
    let rate = conditional_entropy(src) + delta_n + kappa4 * (-eps.ln()) / n as f64;
    let bins = ceil_exp(n as f64 * rate);
    let ln_bins = ln_biguint(&bins);
    Ok(CodeSpec {
        source: src.clone(),
        n,
        eps,
        kappa: [kappa3, kappa4],
        seed,
        rate_nats: ln_bins / n as f64,
        layout: Layout::Fixed {
            delta_n,
            rate,
            payload_bits: field_width(&bins),
            bins,
            ln_bins,
            jar: JarSpec::conditional_entropy(src, delta_n),
        },
        type_lookup: HashMap::new(),
        scan: OnceLock::new(),
    })
}

/// Variable-rate code: types within Γ_X are binned into
/// M(t) = ⌈e^{n(F(t) + δ_n(t) + κ₂(−ln ε)/n)}⌉ bins with
/// δ_n(t) = σ_D(t;P)√((−ln ε/κ₁)/n); other types are indexed losslessly.
/// `c0 = None` calibrates the Γ_X radius.
pub fn build_variable_code(
    src: &JointSource,
    n: usize,
    eps: f64,
    kappa1: f64,
    kappa2: f64,
    c0: Option<f64>,
    seed: u64,
    budget: u64,
) -> Result<CodeSpec> {
    if n == 0 {
        return Err(Error::InvalidParameter("block length must be >= 1".into()));
    }
    check_eps(eps)?;
    check_kappa("kappa1", kappa1)?;
    check_kappa("kappa2", kappa2)?;
    if mutual_information(src) <= 1e-15 {
        return Err(Error::ZeroMutualInfo);
    }
    let c0 = match c0 {
        Some(c) if c >= 0.0 && c.is_finite() => c,
        Some(c) => return Err(Error::InvalidParameter(format!("c0 must be >= 0, got {c}"))),
        None => calibrate_c0(src, n, budget)?,
    };
    let type_count = count_types(n as u64, src.nx());
    let needed = ln_biguint(&type_count).exp();
    if needed > budget as f64 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let radius = gamma_radius(c0, n);
    let px = src.marginal_x();
    let log_eps = -eps.ln();
    let classes: Vec<TypeBinning> = enumerate_types(n as u64, src.nx())
        .into_iter()
        .map(|t| {
            let probs = t.probs();
            let probability = type_probability(px, &t);
            if in_gamma(l1_distance(&probs, px), radius) {
                let delta = jar_half_width(sigma2_d(src, &probs).max(0.0).sqrt(), eps, kappa1, n);
                let rate = f_of_t(src, &probs) + delta + kappa2 * log_eps / n as f64;
                let bins = ceil_exp((n as f64 * rate).max(0.0));
                let jar = JarSpec::mutual_information(src, t.clone(), delta)?;
                Ok(TypeBinning {
                    t,
                    probability,
                    in_gamma: true,
                    delta_n: Some(delta),
                    rate: Some(rate),
                    ln_payload_count: ln_biguint(&bins),
                    payload_bits: field_width(&bins),
                    payload_count: bins,
                    jar: Some(jar),
                })
            } else {
                let size = type_class_size(&t);
                Ok(TypeBinning {
                    t,
                    probability,
                    in_gamma: false,
                    delta_n: None,
                    rate: None,
                    ln_payload_count: size.ln,
                    payload_bits: field_width(&size.count),
                    payload_count: size.count,
                    jar: None,
                })
            }
        })
        .collect::<Result<_>>()?;
    let ln_type_count = ln_biguint(&type_count);
    let expected_payload: KahanSum = classes.iter().map(|c| c.probability * c.ln_payload_count).collect();
    let rate_nats = (ln_type_count + expected_payload.value()) / n as f64;
    let type_lookup = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.t.counts().to_vec(), i))
        .collect();
    Ok(CodeSpec {
        source: src.clone(),
        n,
        eps,
        kappa: [kappa1, kappa2],
        seed,
        rate_nats,
        layout: Layout::Variable {
            c0,
            gamma_radius: radius,
            type_bits: field_width(&type_count),
            type_count,
            ln_type_count,
            classes,
        },
        type_lookup,
        scan: OnceLock::new(),
    })
}
