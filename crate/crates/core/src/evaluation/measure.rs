//! Measured error of a constructed code: Monte Carlo over full
//! encode/decode runs, and the semi-analytic estimator that averages the
//! binning in closed form.

use super::bounds::{achievability_bound, converse_bound, normal_approximation};
use crate::codec::{collision_probability, decode, encode, CodeSpec, CodeSummary, ErrorModel, Layout, Mode};
use crate::composition::{jar_cardinality, sample_pair_sequences, JarSpec, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::rng::trial_seed;
use crate::source::{conditional_entropy, JointSource, TypeVector};
use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Trials handled by one parallel work item. Fixed so that the merge order,
/// and with it every emitted digit, does not depend on the thread count.
const CHUNK: u64 = 512;

/// Wilson score interval for `successes` out of `trials` at the 95% level.
pub fn wilson_interval(p_hat: f64, trials: u64) -> [f64; 2] {
    if trials == 0 {
        return [0.0, 1.0];
    }
    let n = trials as f64;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
    // the limits are exactly 0 and 1 at the edges; center ± half only rounds there
    let lo = if p_hat <= 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if p_hat >= 1.0 { 1.0 } else { (center + half).min(1.0) };
    [lo, hi]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    MonteCarlo,
    SemiAnalyticSampled,
    SemiAnalyticExhaustive,
}

/// How [`semi_analytic_error`] averages over source pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Trials(u64),
    /// Exact sum over joint compositions.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub estimator: Estimator,
    pub code: CodeSummary,
    /// Sampled pairs; 0 for the exhaustive estimator.
    pub trials: u64,
    pub error_count: u64,
    pub jar_miss_count: u64,
    pub collision_count: u64,
    /// Estimated jar-miss probability.
    pub jar_miss: f64,
    /// Estimated collision probability.
    pub collision: f64,
    pub p_e_hat: f64,
    pub p_e_ci_lo: f64,
    pub p_e_ci_hi: f64,
    pub measured_rate_nats: f64,
    pub predicted_achievability_nats: Option<f64>,
    pub predicted_converse_nats: Option<f64>,
    pub normal_approx_nats: Option<f64>,
    /// measured_rate_nats − H(X|Y).
    pub redundancy_measured: f64,
    pub master_seed: u64,
}

fn check_source(src: &JointSource, spec: &CodeSpec) -> Result<()> {
    if *src != spec.source {
        return Err(Error::InvalidParameter("code was built for a different source".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    misses: u64,
    collisions: u64,
    contribution: KahanSum,
    length: KahanSum,
}

impl Tally {
    fn merge(&mut self, other: &Tally) {
        self.misses += other.misses;
        self.collisions += other.collisions;
        self.contribution.merge(&other.contribution);
        self.length.merge(&other.length);
    }
}

/// Runs `per_trial` over chunks in parallel and merges the chunk tallies in
/// chunk order.
fn run_trials(trials: u64, per_trial: impl Fn(u64, &mut Tally) -> Result<()> + Sync) -> Result<Tally> {
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                per_trial(i, &mut t)?;
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    let mut total = Tally::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

fn jar_of<'a>(spec: &'a CodeSpec, x: &[usize]) -> Result<Option<&'a JarSpec>> {
    let t = TypeVector::of_sequence(x, spec.source.nx())?;
    Ok(spec.jar_for(&t))
}

struct Predictions {
    achievability: Option<f64>,
    converse: Option<f64>,
    normal: Option<f64>,
}

/// Curve values at the code's (n, ε); a curve whose hypotheses fail at this
/// source or block length is left out.
fn predictions(spec: &CodeSpec) -> Predictions {
    let (src, n, eps, mode) = (&spec.source, spec.n, spec.eps, spec.mode());
    Predictions {
        achievability: achievability_bound(src, n, eps, mode).ok().map(|p| p.rate_nats),
        converse: converse_bound(src, n, mode, DEFAULT_BUDGET).ok().map(|p| p.rate_nats),
        normal: normal_approximation(src, n, eps, mode).ok().map(|p| p.rate_nats),
    }
}

fn report(
    spec: &CodeSpec,
    estimator: Estimator,
    trials: u64,
    tally: &Tally,
    exact: Option<(f64, f64)>,
    measured_rate: f64,
    master_seed: u64,
) -> EvaluationReport {
    let (jar_miss, collision, p_e_hat, ci) = match exact {
        Some((miss, coll)) => {
            let p = (miss + coll).clamp(0.0, 1.0);
            (miss, coll, p, [p, p])
        }
        None => {
            let n = trials as f64;
            let miss = tally.misses as f64 / n;
            let coll = match estimator {
                Estimator::MonteCarlo => tally.collisions as f64 / n,
                _ => tally.contribution.value() / n,
            };
            let p = (miss + coll).clamp(0.0, 1.0);
            (miss, coll, p, wilson_interval(p, trials))
        }
    };
    let pred = predictions(spec);
    EvaluationReport {
        estimator,
        code: spec.summary(),
        trials,
        error_count: tally.misses + tally.collisions,
        jar_miss_count: tally.misses,
        collision_count: tally.collisions,
        jar_miss,
        collision,
        p_e_hat,
        p_e_ci_lo: ci[0],
        p_e_ci_hi: ci[1],
        measured_rate_nats: measured_rate,
        predicted_achievability_nats: pred.achievability,
        predicted_converse_nats: pred.converse,
        normal_approx_nats: pred.normal,
        redundancy_measured: measured_rate - conditional_entropy(&spec.source),
        master_seed,
    }
}

fn sampled_rate(spec: &CodeSpec, tally: &Tally, trials: u64) -> f64 {
    match spec.mode() {
        Mode::Fixed => spec.rate_nats,
        Mode::Variable => tally.length.value() / (trials as f64 * spec.n as f64),
    }
}

/// Draws `trials` i.i.d. pairs, trial i seeded by `trial_seed(master_seed, i)`,
/// and runs the real encoder and decoder on each. An error is a jar miss
/// when xⁿ is outside its own jar and a collision otherwise.
pub fn monte_carlo_error(
    src: &JointSource,
    spec: &CodeSpec,
    trials: u64,
    master_seed: u64,
) -> Result<EvaluationReport> {
    check_source(src, spec)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    spec.scan_index()?;
    let tally = run_trials(trials, |i, tally| {
        let (x, y) = sample_pair_sequences(src, spec.n, trial_seed(master_seed, i));
        let cw = encode(spec, &x)?;
        tally.length.add(cw.idealized_length_nats);
        let correct = match decode(spec, &cw, &y) {
            Ok(xhat) => xhat == x,
            Err(Error::DecodeFailure) => false,
            Err(e) => return Err(e),
        };
        if !correct {
            match jar_of(spec, &x)? {
                Some(jar) if jar.contains(&x, &y) => tally.collisions += 1,
                _ => tally.misses += 1,
            }
        }
        Ok(())
    })?;
    let rate = sampled_rate(spec, &tally, trials);
    Ok(report(
        spec,
        Estimator::MonteCarlo,
        trials,
        &tally,
        None,
        rate,
        master_seed,
    ))
}

/// Bin count and jar that decoding of xⁿ would use; `None` on the lossless
/// branch of a variable code.
fn binning_of<'a>(spec: &'a CodeSpec, t: &TypeVector) -> Option<(&'a BigUint, &'a JarSpec)> {
    match &spec.layout {
        Layout::Fixed { bins, jar, .. } => Some((bins, jar)),
        Layout::Variable { classes, .. } => {
            let c = &classes[spec.type_index(t)?];
            Some((&c.payload_count, c.jar()?))
        }
    }
}

/// Binning-averaged error of one pair: 1 on a jar miss, otherwise the
/// probability 1 − (1 − 1/M)^{N−1} that another of the N jar members shares
/// the bin of xⁿ.
pub fn semi_analytic_contribution(spec: &CodeSpec, x: &[usize], y: &[usize], budget: u64) -> Result<f64> {
    let t = TypeVector::of_sequence(x, spec.source.nx())?;
    let Some((bins, jar)) = binning_of(spec, &t) else {
        return Ok(0.0);
    };
    if !jar.contains(x, y) {
        return Ok(1.0);
    }
    let size = jar_cardinality(jar, y, budget)?;
    Ok(collision_probability(bins, &size.count))
}

/// Semi-analytic error: exact over the binning, sampled or exhaustive over
/// the source. Counts lexicographic tie-break wins as errors, so it bounds
/// the decoder's error from above.
pub fn semi_analytic_error(
    src: &JointSource,
    spec: &CodeSpec,
    sampling: Sampling,
    master_seed: u64,
    budget: u64,
) -> Result<EvaluationReport> {
    check_source(src, spec)?;
    match sampling {
        Sampling::Exhaustive => {
            let terms = ErrorModel::new(src, spec.n, budget)?.terms(spec)?;
            let tally = Tally::default();
            Ok(report(
                spec,
                Estimator::SemiAnalyticExhaustive,
                0,
                &tally,
                Some((terms.jar_miss, terms.collision)),
                spec.rate_nats,
                master_seed,
            ))
        }
        Sampling::Trials(0) => Err(Error::InvalidParameter("trials must be >= 1".into())),
        Sampling::Trials(trials) => {
            let k = src.nx();
            // jar sizes depend only on (x-type, y-type); one pass collects
            // the keys, the sizes are computed once each
            let samples: Vec<(Vec<usize>, Vec<usize>)> = (0..trials)
                .into_par_iter()
                .map(|i| sample_pair_sequences(src, spec.n, trial_seed(master_seed, i)))
                .collect();
            let mut keys: BTreeMap<(Vec<u64>, Vec<u64>), f64> = BTreeMap::new();
            for (x, y) in &samples {
                let t = TypeVector::of_sequence(x, k)?;
                if let Some((_, jar)) = binning_of(spec, &t) {
                    if jar.contains(x, y) {
                        let yt = TypeVector::of_sequence(y, src.ny())?;
                        keys.insert((t.counts().to_vec(), yt.counts().to_vec()), 0.0);
                    }
                }
            }
            let list: Vec<(Vec<u64>, Vec<u64>)> = keys.keys().cloned().collect();
            let values: Vec<f64> = list
                .par_iter()
                .map(|(tc, yc)| {
                    let t = TypeVector::new(tc.clone())?;
                    let (bins, jar) = binning_of(spec, &t).expect("collected from binned types");
                    let y: Vec<usize> = yc
                        .iter()
                        .enumerate()
                        .flat_map(|(b, &c)| std::iter::repeat_n(b, c as usize))
                        .collect();
                    Ok(collision_probability(bins, &jar_cardinality(jar, &y, budget)?.count))
                })
                .collect::<Result<_>>()?;
            for (key, v) in list.into_iter().zip(values) {
                keys.insert(key, v);
            }
            let tally = run_trials(trials, |i, tally| {
                let (x, y) = &samples[i as usize];
                let t = TypeVector::of_sequence(x, k)?;
                if spec.mode() == Mode::Variable {
                    tally.length.add(encode(spec, x)?.idealized_length_nats);
                }
                let Some((_, jar)) = binning_of(spec, &t) else {
                    return Ok(());
                };
                if !jar.contains(x, y) {
                    tally.misses += 1;
                    return Ok(());
                }
                let yt = TypeVector::of_sequence(y, src.ny())?;
                tally
                    .contribution
                    .add(keys[&(t.counts().to_vec(), yt.counts().to_vec())]);
                Ok(())
            })?;
            let rate = sampled_rate(spec, &tally, trials);
            Ok(report(
                spec,
                Estimator::SemiAnalyticSampled,
                trials,
                &tally,
                None,
                rate,
                master_seed,
            ))
        }
    }
}
