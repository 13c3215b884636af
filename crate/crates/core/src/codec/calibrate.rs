//! Exact error accounting over joint compositions, and the parameter
//! calibrations built on it.
//!
//! A code's error splits into a jar miss (the source sequence fails its own
//! jar test) and a collision (another jar member shares its bin). Both
//! depend on a sequence pair only through its joint composition, and the
//! binning average of the collision event is 1 − (1 − 1/M)^{N−1} with N the
//! jar size, so everything reduces to sums over compositions.

use super::build::{gamma_radius, in_gamma, jar_half_width, l1_distance, VARIANCE_FLOOR};
use super::code::{CodeSpec, Layout, Mode};
use super::prf::ceil_exp;
use crate::composition::{
    composition_count, enumerate_types, for_each_composition, jar_cardinality, type_probability, JarCount, JarSpec,
};
use crate::error::{Error, Result};
use crate::numeric::{exceeds, falls_below, KahanSum};
use crate::source::{
    conditional_entropy, density_table, f_of_t, mutual_info_t, mutual_information, q_t, sigma2_d, sigma2_h,
    JointSource, TypeVector,
};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;
use std::collections::HashMap;

/// Pr over the random binning that at least one of the other N − 1 jar
/// members lands in a given bin out of M.
pub fn collision_probability(bins: &BigUint, jar_size: &BigUint) -> f64 {
    if *jar_size <= BigUint::from(1u32) {
        return 0.0;
    }
    let others = (jar_size - 1u32).to_f64().unwrap_or(f64::INFINITY);
    let m = bins.to_f64().unwrap_or(f64::INFINITY);
    if m <= 1.0 {
        return 1.0;
    }
    -(others * (-1.0 / m).ln_1p()).exp_m1()
}

/// The two parts of a code's exact binning-averaged error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorTerms {
    pub jar_miss: f64,
    pub collision: f64,
}

impl ErrorTerms {
    pub fn total(&self) -> f64 {
        self.jar_miss + self.collision
    }
}

#[derive(Debug, Clone, Copy)]
struct Record {
    prob: f64,
    x_type: u32,
    y_type: u32,
    /// −(1/n) ln p(xⁿ|yⁿ)
    surprisal: f64,
    /// (1/n) ln(p(yⁿ|xⁿ)/q_t(yⁿ)) with t the x-type
    density: f64,
}

/// Every joint composition at block length n with its probability, its
/// marginal types and both per-letter scores.
#[derive(Debug, Clone)]
pub struct ErrorModel {
    source: JointSource,
    n: usize,
    budget: u64,
    x_types: Vec<TypeVector>,
    y_types: Vec<TypeVector>,
    records: Vec<Record>,
}

impl ErrorModel {
    pub fn new(src: &JointSource, n: usize, budget: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("block length must be >= 1".into()));
        }
        let (nx, ny) = (src.nx(), src.ny());
        let cells: Vec<(usize, usize)> = (0..nx)
            .flat_map(|x| (0..ny).map(move |y| (x, y)))
            .filter(|&(x, y)| src.p(x, y) > 0.0)
            .collect();
        let needed = composition_count(n as u64, cells.len());
        if needed > budget as f64 {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let x_types = enumerate_types(n as u64, nx);
        let y_types = enumerate_types(n as u64, ny);
        let x_lookup: HashMap<&[u64], u32> = x_types
            .iter()
            .enumerate()
            .map(|(i, t)| (t.counts(), i as u32))
            .collect();
        let y_lookup: HashMap<&[u64], u32> = y_types
            .iter()
            .enumerate()
            .map(|(i, t)| (t.counts(), i as u32))
            .collect();
        // per x-type density tables are built on demand
        let mut densities: HashMap<u32, Vec<Option<f64>>> = HashMap::new();
        let ln_p: Vec<f64> = cells.iter().map(|&(x, y)| src.p(x, y).ln()).collect();
        let surprisal: Vec<f64> = cells.iter().map(|&(x, y)| -src.p_x_given_y(x, y).ln()).collect();
        let ln_fact: Vec<f64> = (0..=n as u64).map(ln_factorial).collect();
        let nf = n as f64;
        let mut records = Vec::new();
        let mut xt = vec![0u64; nx];
        let mut yt = vec![0u64; ny];
        for_each_composition(n as u64, cells.len(), |k| {
            xt.iter_mut().for_each(|v| *v = 0);
            yt.iter_mut().for_each(|v| *v = 0);
            let mut ln = ln_fact[n];
            let mut s = 0.0;
            for (i, &c) in k.iter().enumerate() {
                if c > 0 {
                    let (x, y) = cells[i];
                    xt[x] += c;
                    yt[y] += c;
                    ln += c as f64 * ln_p[i] - ln_fact[c as usize];
                    s += c as f64 * surprisal[i];
                }
            }
            let x_type = x_lookup[xt.as_slice()];
            let dens = densities.entry(x_type).or_insert_with(|| {
                let probs: Vec<f64> = xt.iter().map(|&c| c as f64 / nf).collect();
                density_table(src, &q_t(src, &probs))
            });
            let mut d = 0.0;
            for (i, &c) in k.iter().enumerate() {
                if c > 0 {
                    let (x, y) = cells[i];
                    d += c as f64 * dens[x * ny + y].expect("positive cell");
                }
            }
            records.push(Record {
                prob: ln.exp(),
                x_type,
                y_type: y_lookup[yt.as_slice()],
                surprisal: s / nf,
                density: d / nf,
            });
        });
        Ok(Self {
            source: src.clone(),
            n,
            budget,
            x_types,
            y_types,
            records,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// A side-information sequence of the given type (symbols in order).
    fn canonical_y(&self, y_type: u32) -> Vec<usize> {
        let t = &self.y_types[y_type as usize];
        t.counts()
            .iter()
            .enumerate()
            .flat_map(|(b, &c)| std::iter::repeat_n(b, c as usize))
            .collect()
    }

    fn jar_size(&self, jar: &JarSpec, y_type: u32) -> Result<JarCount> {
        jar_cardinality(jar, &self.canonical_y(y_type), self.budget)
    }

    /// Pr{score > thr} for the conditional surprisal.
    fn fixed_miss(&self, threshold: f64) -> f64 {
        self.records
            .iter()
            .filter(|r| exceeds(r.surprisal, threshold))
            .map(|r| r.prob)
            .collect::<KahanSum>()
            .value()
    }

    /// Jar-member mass per y-type for the conditional-entropy jar.
    fn fixed_member_mass(&self, threshold: f64) -> Vec<KahanSum> {
        let mut mass = vec![KahanSum::new(); self.y_types.len()];
        for r in &self.records {
            if !exceeds(r.surprisal, threshold) {
                mass[r.y_type as usize].add(r.prob);
            }
        }
        mass
    }

    /// Exact binning-averaged error terms of a code at this block length.
    pub fn terms(&self, spec: &CodeSpec) -> Result<ErrorTerms> {
        if spec.n != self.n || spec.source != self.source {
            return Err(Error::InvalidParameter("code does not match the error model".into()));
        }
        match &spec.layout {
            Layout::Fixed { bins, jar, .. } => {
                let miss = self.fixed_miss(jar.threshold);
                let mass = self.fixed_member_mass(jar.threshold);
                let mut coll = KahanSum::new();
                for (yt, m) in mass.iter().enumerate() {
                    if m.value() > 0.0 {
                        let size = self.jar_size(jar, yt as u32)?;
                        coll.add(m.value() * collision_probability(bins, &size.count));
                    }
                }
                Ok(ErrorTerms {
                    jar_miss: miss,
                    collision: coll.value(),
                })
            }
            Layout::Variable { classes, .. } => {
                let slot: Vec<Option<&super::code::TypeBinning>> = self
                    .x_types
                    .iter()
                    .map(|t| spec.type_index(t).map(|i| &classes[i]).filter(|c| c.in_gamma))
                    .collect();
                let mut miss = KahanSum::new();
                let mut mass: HashMap<(u32, u32), KahanSum> = HashMap::new();
                for r in &self.records {
                    let Some(class) = slot[r.x_type as usize] else { continue };
                    let jar = class.jar.as_ref().expect("binned types carry a jar");
                    if falls_below(r.density, jar.threshold) {
                        miss.add(r.prob);
                    } else {
                        mass.entry((r.x_type, r.y_type)).or_default().add(r.prob);
                    }
                }
                let mut keys: Vec<_> = mass.keys().copied().collect();
                keys.sort_unstable();
                let mut coll = KahanSum::new();
                for key in keys {
                    let class = slot[key.0 as usize].expect("binned");
                    let jar = class.jar.as_ref().expect("binned types carry a jar");
                    let size = self.jar_size(jar, key.1)?;
                    coll.add(mass[&key].value() * collision_probability(&class.payload_count, &size.count));
                }
                Ok(ErrorTerms {
                    jar_miss: miss.value(),
                    collision: coll.value(),
                })
            }
        }
    }
}

/// Smallest c₀ on a 0.01 grid with Pr{τ(Xⁿ) ∉ Γ_X} ≤ 1/n².
pub fn calibrate_c0(src: &JointSource, n: usize, budget: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter("c0 calibration needs n >= 2".into()));
    }
    let needed = composition_count(n as u64, src.nx());
    if needed > budget as f64 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let px = src.marginal_x();
    let mut law: Vec<(f64, f64)> = enumerate_types(n as u64, src.nx())
        .iter()
        .map(|t| (l1_distance(&t.probs(), px), type_probability(px, t)))
        .collect();
    law.sort_by(|a, b| a.0.total_cmp(&b.0));
    // suffix[i]: mass of the i-th closest type and everything farther
    let mut suffix = vec![0.0; law.len() + 1];
    let mut acc = KahanSum::new();
    for (i, (_, p)) in law.iter().enumerate().rev() {
        acc.add(*p);
        suffix[i] = acc.value();
    }
    let limit = 1.0 / (n as f64 * n as f64);
    let unit = gamma_radius(1.0, n);
    for k in 0u64.. {
        let c0 = k as f64 / 100.0;
        let radius = c0 * unit;
        let inside = law.partition_point(|&(d, _)| in_gamma(d, radius));
        if suffix[inside] <= limit {
            return Ok(c0);
        }
        if inside == law.len() {
            break;
        }
    }
    unreachable!("a radius covering every type leaves no mass outside")
}

/// Outcome of a κ calibration with the exact terms it achieved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaCalibration {
    pub mode: Mode,
    /// (κ₃, κ₄) or (κ₁, κ₂).
    pub kappa: [f64; 2],
    pub c0: Option<f64>,
    pub jar_miss: f64,
    pub collision: f64,
}

/// Jar-width constants tried in order: 1.1, then downward in steps of 0.1.
/// The jar-miss probability only grows with κ, so the first feasible value
/// is the widest-constant jar that meets ε/2.
fn width_grid() -> impl Iterator<Item = f64> {
    (1..=11).rev().map(|k| k as f64 / 10.0)
}

/// Rate-offset constants, smallest first: 0.1, 0.2, …, 100.
fn offset_grid() -> impl Iterator<Item = f64> {
    (1..=1000).map(|k| k as f64 / 10.0)
}

/// Chooses (κ₃, κ₄) or (κ₁, κ₂) so that the exact jar-miss probability and
/// the exact binning-averaged collision term are each at most ε/2.
pub fn calibrate_kappas(src: &JointSource, n: usize, eps: f64, mode: Mode, budget: u64) -> Result<KappaCalibration> {
    super::build::check_eps(eps)?;
    let model = ErrorModel::new(src, n, budget)?;
    match mode {
        Mode::Fixed => calibrate_fixed(&model, eps),
        Mode::Variable => calibrate_variable(&model, eps, None),
    }
}

/// [`calibrate_kappas`] for a variable code with a given Γ_X constant.
pub fn calibrate_kappas_with_c0(
    src: &JointSource,
    n: usize,
    eps: f64,
    c0: f64,
    budget: u64,
) -> Result<KappaCalibration> {
    super::build::check_eps(eps)?;
    let model = ErrorModel::new(src, n, budget)?;
    calibrate_variable(&model, eps, Some(c0))
}

fn calibrate_fixed(model: &ErrorModel, eps: f64) -> Result<KappaCalibration> {
    let src = &model.source;
    let n = model.n;
    let s2 = sigma2_h(src);
    if s2 <= VARIANCE_FLOOR {
        return Err(Error::ZeroVariance);
    }
    let h = conditional_entropy(src);
    let half = eps / 2.0;
    let (kappa3, miss, delta) = width_grid()
        .map(|k| {
            let delta = jar_half_width(s2.sqrt(), eps, k, n);
            (k, model.fixed_miss(h + delta), delta)
        })
        .find(|&(_, miss, _)| miss <= half)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "jar-miss probability exceeds eps/2 for every width constant at n = {n}"
            ))
        })?;
    let jar = JarSpec::conditional_entropy(src, delta);
    let mass = model.fixed_member_mass(jar.threshold);
    let sizes: Vec<(f64, BigUint)> = mass
        .iter()
        .enumerate()
        .filter(|(_, m)| m.value() > 0.0)
        .map(|(yt, m)| Ok((m.value(), model.jar_size(&jar, yt as u32)?.count)))
        .collect::<Result<_>>()?;
    let log_eps = -eps.ln();
    for kappa4 in offset_grid() {
        let rate = h + delta + kappa4 * log_eps / n as f64;
        let bins = ceil_exp(n as f64 * rate);
        let coll: KahanSum = sizes
            .iter()
            .map(|(m, size)| m * collision_probability(&bins, size))
            .collect();
        if coll.value() <= half {
            return Ok(KappaCalibration {
                mode: Mode::Fixed,
                kappa: [kappa3, kappa4],
                c0: None,
                jar_miss: miss,
                collision: coll.value(),
            });
        }
    }
    Err(Error::Infeasible(format!(
        "collision term exceeds eps/2 for every kappa4 <= 100 at n = {n}"
    )))
}

struct GammaType {
    x_type: u32,
    sigma_d: f64,
    info: f64,
    f: f64,
    t: TypeVector,
}

fn calibrate_variable(model: &ErrorModel, eps: f64, c0: Option<f64>) -> Result<KappaCalibration> {
    let src = &model.source;
    let n = model.n;
    if mutual_information(src) <= 1e-15 {
        return Err(Error::ZeroMutualInfo);
    }
    let c0 = match c0 {
        Some(c) => c,
        None => calibrate_c0(src, n, model.budget)?,
    };
    let radius = gamma_radius(c0, n);
    let px = src.marginal_x();
    let gamma: Vec<GammaType> = model
        .x_types
        .iter()
        .enumerate()
        .filter(|(_, t)| in_gamma(l1_distance(&t.probs(), px), radius))
        .map(|(i, t)| {
            let probs = t.probs();
            GammaType {
                x_type: i as u32,
                sigma_d: sigma2_d(src, &probs).max(0.0).sqrt(),
                info: mutual_info_t(src, &probs),
                f: f_of_t(src, &probs),
                t: t.clone(),
            }
        })
        .collect();
    let mut slot = vec![None; model.x_types.len()];
    for (g, gt) in gamma.iter().enumerate() {
        slot[gt.x_type as usize] = Some(g);
    }
    let half = eps / 2.0;
    let threshold = |g: &GammaType, k: f64| g.info - jar_half_width(g.sigma_d, eps, k, n);
    let miss_at = |k: f64| -> f64 {
        let thr: Vec<f64> = gamma.iter().map(|g| threshold(g, k)).collect();
        model
            .records
            .iter()
            .filter_map(|r| slot[r.x_type as usize].map(|g| (r, thr[g])))
            .filter(|(r, thr)| falls_below(r.density, *thr))
            .map(|(r, _)| r.prob)
            .collect::<KahanSum>()
            .value()
    };
    let (kappa1, miss) = width_grid()
        .map(|k| (k, miss_at(k)))
        .find(|&(_, m)| m <= half)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "jar-miss probability exceeds eps/2 for every width constant at n = {n}"
            ))
        })?;
    // member mass per (Γ type, y-type), then jar sizes once
    let mut mass: HashMap<(usize, u32), KahanSum> = HashMap::new();
    let thr: Vec<f64> = gamma.iter().map(|g| threshold(g, kappa1)).collect();
    for r in &model.records {
        if let Some(g) = slot[r.x_type as usize] {
            if !falls_below(r.density, thr[g]) {
                mass.entry((g, r.y_type)).or_default().add(r.prob);
            }
        }
    }
    let mut keys: Vec<_> = mass.keys().copied().collect();
    keys.sort_unstable();
    let mut sizes = Vec::with_capacity(keys.len());
    for key in keys {
        let g = &gamma[key.0];
        let jar = JarSpec::mutual_information_at(src, g.t.clone(), thr[key.0])?;
        sizes.push((key.0, mass[&key].value(), model.jar_size(&jar, key.1)?.count));
    }
    let log_eps = -eps.ln();
    for kappa2 in offset_grid() {
        let bins: Vec<BigUint> = gamma
            .iter()
            .map(|g| {
                let rate = g.f + jar_half_width(g.sigma_d, eps, kappa1, n) + kappa2 * log_eps / n as f64;
                ceil_exp((n as f64 * rate).max(0.0))
            })
            .collect();
        let coll: KahanSum = sizes
            .iter()
            .map(|(g, m, size)| m * collision_probability(&bins[*g], size))
            .collect();
        if coll.value() <= half {
            return Ok(KappaCalibration {
                mode: Mode::Variable,
                kappa: [kappa1, kappa2],
                c0: Some(c0),
                jar_miss: miss,
                collision: coll.value(),
            });
        }
    }
    Err(Error::Infeasible(format!(
        "collision term exceeds eps/2 for every kappa2 <= 100 at n = {n}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collision_edges() {
        let one = BigUint::from(1u32);
        let two = BigUint::from(2u32);
        assert_eq!(collision_probability(&one, &two), 1.0);
        assert_eq!(collision_probability(&two, &one), 0.0);
        let c = collision_probability(&BigUint::from(4u32), &BigUint::from(3u32));
        assert!((c - (1.0 - 0.75f64.powi(2))).abs() < 1e-15);
    }

    #[test]
    fn c0_for_two_uniform_symbols() {
        // types (0,2), (1,1), (2,0) with mass 1/4, 1/2, 1/4 at L1 distance 1, 0, 1;
        // the outer pair must be inside, so c₀√(ln 2/2) ≥ 1
        let s = JointSource::dsbs(0.1).unwrap();
        let c0 = calibrate_c0(&s, 2, 1000).unwrap();
        assert_eq!(c0, 1.70);
        assert!(1.69 * gamma_radius(1.0, 2) < 1.0);
    }
}
