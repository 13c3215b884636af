//! Exact method-of-types combinatorics.
//!
//! Probabilities of per-letter additive events depend on a sequence pair only
//! through its joint composition k(x,y), so tails are computed by enumerating
//! compositions and weighting each with multinomial(n; k)·Π p^k. These sums
//! are the reference values the rest of the crate is tested against.

use crate::error::{Error, Result};
use crate::numeric::{exceeds, falls_below, ln_biguint, KahanSum};
use crate::rng::SplitMix64;
use crate::source::{conditional_entropy, density_table, mutual_info_t, q_t, JointSource, TypeVector};
use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use statrs::function::factorial::ln_factorial;

/// Default cap on the number of enumerated compositions.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Binomial coefficient C(n, k).
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of compositions of n into `parts` nonnegative parts, as f64.
pub fn composition_count(n: u64, parts: usize) -> f64 {
    if parts == 0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let k = (parts - 1) as u64;
    // ln C(n+k, k) is plenty accurate for budget checks
    (ln_factorial(n + k) - ln_factorial(n) - ln_factorial(k)).exp().round()
}

fn check_budget(needed: f64, budget: u64) -> Result<()> {
    if needed > budget as f64 {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

/// |𝒯_n(𝒳)| = C(n + k − 1, k − 1).
pub fn count_types(n: u64, alphabet_size: usize) -> BigUint {
    if alphabet_size == 0 {
        return BigUint::ZERO;
    }
    binomial(n + alphabet_size as u64 - 1, alphabet_size as u64 - 1)
}

/// Multinomial coefficient (Σc)! / Π c!.
pub fn multinomial(counts: &[u64]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total = 0u64;
    for &c in counts {
        total += c;
        acc *= binomial(total, c);
    }
    acc
}

/// ln of the multinomial coefficient via log-factorials.
pub fn ln_multinomial(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    ln_factorial(n) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
}

/// Size of a type class, exact and as a natural log.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeClassSize {
    pub count: BigUint,
    pub ln: f64,
}

pub fn type_class_size(t: &TypeVector) -> TypeClassSize {
    TypeClassSize {
        count: multinomial(t.counts()),
        ln: ln_multinomial(t.counts()),
    }
}

/// Calls `f` on every composition of `n` into `parts` parts, in ascending
/// lexicographic order of the count vector.
pub fn for_each_composition(n: u64, parts: usize, mut f: impl FnMut(&[u64])) {
    if parts == 0 {
        if n == 0 {
            f(&[]);
        }
        return;
    }
    let mut c = vec![0u64; parts];
    c[parts - 1] = n;
    loop {
        f(&c);
        // rightmost position that can take one unit from its tail
        let mut i = parts - 1;
        let mut tail = c[parts - 1];
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if tail > 0 {
                break;
            }
            tail += c[i];
        }
        c[i] += 1;
        for v in &mut c[i + 1..] {
            *v = 0;
        }
        c[parts - 1] = tail - 1;
    }
}

/// All types of length-n sequences over k symbols, lexicographically ordered.
/// Empty for n = 0, which has no type.
pub fn enumerate_types(n: u64, k: usize) -> Vec<TypeVector> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for_each_composition(n, k, |c| out.push(TypeVector::new(c.to_vec()).expect("n >= 1")));
    out
}

/// Pr{τ(Xⁿ) = t} under i.i.d. `px`.
pub fn type_probability(px: &[f64], t: &TypeVector) -> f64 {
    let mut ln = ln_multinomial(t.counts());
    for (&c, &p) in t.counts().iter().zip(px) {
        if c > 0 {
            if p <= 0.0 {
                return 0.0;
            }
            ln += c as f64 * p.ln();
        }
    }
    ln.exp()
}

/// Joint type k(x,y) of a sequence pair, row-major by x.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointComposition {
    nx: usize,
    ny: usize,
    counts: Vec<u64>,
}

impl JointComposition {
    pub fn new(nx: usize, ny: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != nx * ny {
            return Err(Error::LengthMismatch {
                expected: nx * ny,
                got: counts.len(),
            });
        }
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::InvalidType("empty composition".into()));
        }
        Ok(Self { nx, ny, counts })
    }

    pub fn of_pair(x: &[usize], y: &[usize], nx: usize, ny: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let mut counts = vec![0u64; nx * ny];
        for (&a, &b) in x.iter().zip(y) {
            if a >= nx {
                return Err(Error::SymbolOutOfRange { symbol: a, size: nx });
            }
            if b >= ny {
                return Err(Error::SymbolOutOfRange { symbol: b, size: ny });
            }
            counts[a * ny + b] += 1;
        }
        Self::new(nx, ny, counts)
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.ny + y]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn x_type(&self) -> TypeVector {
        let c = (0..self.nx)
            .map(|x| (0..self.ny).map(|y| self.count(x, y)).sum())
            .collect();
        TypeVector::new(c).expect("nonempty")
    }

    pub fn y_type(&self) -> TypeVector {
        let c = (0..self.ny)
            .map(|y| (0..self.nx).map(|x| self.count(x, y)).sum())
            .collect();
        TypeVector::new(c).expect("nonempty")
    }

    /// ln of multinomial(n; k)·Π p(x,y)^k, the probability of the joint type class.
    pub fn ln_probability(&self, src: &JointSource) -> f64 {
        let mut ln = ln_multinomial(&self.counts);
        for (&k, &p) in self.counts.iter().zip(src.pmf()) {
            if k > 0 {
                if p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                ln += k as f64 * p.ln();
            }
        }
        ln
    }
}

/// Every joint composition of n over an nx × ny grid.
pub fn joint_compositions(nx: usize, ny: usize, n: u64, budget: u64) -> Result<Vec<JointComposition>> {
    check_budget(composition_count(n, nx * ny), budget)?;
    let mut out = Vec::new();
    for_each_composition(n, nx * ny, |k| {
        out.push(JointComposition {
            nx,
            ny,
            counts: k.to_vec(),
        })
    });
    Ok(out)
}

/// Cells of the joint pmf with positive probability: (ln p, per-letter score).
struct Cell {
    ln_p: f64,
    score: f64,
}

/// Streams every joint composition of n over `cells`, handing the callback
/// the composition's log-probability and mean score. Work is split by the
/// count of the first cell; partial sums are combined in that fixed order.
fn sum_over_compositions<F>(cells: &[Cell], n: u64, budget: u64, thresholds: usize, visit: F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64, &mut [KahanSum]) + Sync,
{
    let m = cells.len();
    check_budget(composition_count(n, m), budget)?;
    if m == 0 {
        return Ok(vec![0.0; thresholds]);
    }
    let ln_fact: Vec<f64> = (0..=n).map(ln_factorial).collect();
    let nf = n as f64;
    let partials: Vec<Vec<KahanSum>> = (0..=n)
        .into_par_iter()
        .map(|k0| {
            let mut acc = vec![KahanSum::new(); thresholds];
            let head_ln = ln_fact[n as usize] - ln_fact[k0 as usize] + k0 as f64 * cells[0].ln_p;
            let head_score = k0 as f64 * cells[0].score;
            if m == 1 {
                if k0 == n {
                    visit(head_ln, head_score / nf, &mut acc);
                }
                return acc;
            }
            for_each_composition(n - k0, m - 1, |rest| {
                let mut ln = head_ln;
                let mut score = head_score;
                for (c, &k) in cells[1..].iter().zip(rest) {
                    if k > 0 {
                        ln += k as f64 * c.ln_p - ln_fact[k as usize];
                        score += k as f64 * c.score;
                    }
                }
                visit(ln, score / nf, &mut acc);
            });
            acc
        })
        .collect();
    let mut total = vec![KahanSum::new(); thresholds];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total.iter().map(|s| s.value().clamp(0.0, 1.0)).collect())
}

fn surprisal_cells(src: &JointSource) -> Vec<Cell> {
    (0..src.nx())
        .flat_map(|x| (0..src.ny()).map(move |y| (x, y)))
        .filter(|&(x, y)| src.p(x, y) > 0.0)
        .map(|(x, y)| Cell {
            ln_p: src.p(x, y).ln(),
            score: -src.p_x_given_y(x, y).ln(),
        })
        .collect()
}

/// Pr{−(1/n) ln p(Xⁿ|Yⁿ) > H(X|Y) + δ}, exact.
pub fn exact_tail_cond_entropy(src: &JointSource, n: u64, delta: f64, budget: u64) -> Result<f64> {
    Ok(exact_tails_cond_entropy(src, n, &[delta], budget)?[0])
}

/// [`exact_tail_cond_entropy`] for several deviations in one enumeration pass.
pub fn exact_tails_cond_entropy(src: &JointSource, n: u64, deltas: &[f64], budget: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("block length must be >= 1".into()));
    }
    let h = conditional_entropy(src);
    let thresholds: Vec<f64> = deltas.iter().map(|d| h + d).collect();
    sum_over_compositions(&surprisal_cells(src), n, budget, deltas.len(), |ln_p, score, acc| {
        let p = ln_p.exp();
        for (a, &thr) in acc.iter_mut().zip(&thresholds) {
            if exceeds(score, thr) {
                a.add(p);
            }
        }
    })
}

/// Σ over all joint compositions of multinomial · Π p^k; equals 1 up to rounding.
pub fn total_composition_mass(src: &JointSource, n: u64, budget: u64) -> Result<f64> {
    Ok(
        sum_over_compositions(&surprisal_cells(src), n, budget, 1, |ln_p, _, acc| {
            acc[0].add(ln_p.exp())
        })?[0],
    )
}

/// Comparison used for conditional-density tail events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    /// score ≤ threshold
    AtMost,
    /// score < threshold
    Below,
}

/// Per-x laws of the y-composition: (mean-score contribution, ln prob) pairs.
fn density_group_laws(src: &JointSource, t: &TypeVector) -> Result<Vec<Vec<(f64, f64)>>> {
    if t.alphabet_size() != src.nx() {
        return Err(Error::InvalidType(format!(
            "type over {} symbols, |X| = {}",
            t.alphabet_size(),
            src.nx()
        )));
    }
    let probs = t.probs();
    let q = q_t(src, &probs);
    let dens = density_table(src, &q);
    let ny = src.ny();
    let mut groups = Vec::new();
    for (x, &nx) in t.counts().iter().enumerate() {
        if nx == 0 {
            continue;
        }
        let cells: Vec<(f64, f64)> = (0..ny)
            .filter_map(|y| dens[x * ny + y].map(|d| (src.p_y_given_x(x, y).ln(), d)))
            .collect();
        let base = ln_factorial(nx);
        let mut law = Vec::new();
        for_each_composition(nx, cells.len(), |k| {
            let mut ln = base;
            let mut score = 0.0;
            for (&(lp, d), &c) in cells.iter().zip(k) {
                if c > 0 {
                    ln += c as f64 * lp - ln_factorial(c);
                    score += c as f64 * d;
                }
            }
            law.push((score, ln));
        });
        groups.push(law);
    }
    Ok(groups)
}

fn product_size(groups: &[Vec<(f64, f64)>]) -> f64 {
    groups.iter().map(|g| g.len() as f64).product()
}

/// Visits the cartesian product of per-x laws with the summed score sum and
/// log-probability.
fn walk_product(groups: &[Vec<(f64, f64)>], score: f64, ln: f64, f: &mut impl FnMut(f64, f64)) {
    match groups.split_first() {
        None => f(score, ln),
        Some((head, rest)) => {
            for &(s, l) in head {
                walk_product(rest, score + s, ln + l, f);
            }
        }
    }
}

/// Pr{(1/n) ln(p(Yⁿ|xⁿ)/q_t(Yⁿ)) ≤ I(t;P) − δ | Xⁿ = xⁿ} for any xⁿ of type t.
pub fn exact_tail_mutual_info(src: &JointSource, t: &TypeVector, delta: f64, budget: u64) -> Result<f64> {
    if !t.has_full_support() {
        return Err(Error::TypeNotFullSupport);
    }
    let thr = mutual_info_t(src, &t.probs()) - delta;
    density_tail(src, t, thr, TailSide::AtMost, budget)
}

/// Conditional-density tail at an absolute threshold on the mean score.
///
/// The largest per-x group is sorted once; every combination of the other
/// groups then picks up its share through a prefix sum.
pub fn density_tail(src: &JointSource, t: &TypeVector, threshold: f64, side: TailSide, budget: u64) -> Result<f64> {
    let mut groups = density_group_laws(src, t)?;
    groups.sort_by_key(|g| g.len());
    let mut last = groups.pop().expect("type has at least one symbol");
    check_budget(product_size(&groups), budget)?;
    last.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut prefix = Vec::with_capacity(last.len() + 1);
    let mut run = KahanSum::new();
    prefix.push(0.0);
    for &(_, ln) in &last {
        run.add(ln.exp());
        prefix.push(run.value());
    }
    let n = t.n() as f64;
    let hit = |score: f64| match side {
        TailSide::AtMost => !exceeds(score, threshold),
        TailSide::Below => falls_below(score, threshold),
    };
    let mut acc = KahanSum::new();
    walk_product(&groups, 0.0, 0.0, &mut |s, ln| {
        let k = last.partition_point(|&(sl, _)| hit((s + sl) / n));
        if k > 0 {
            acc.add(ln.exp() * prefix[k]);
        }
    });
    Ok(acc.value().clamp(0.0, 1.0))
}

/// A finite law of a mean score, sorted, with accurate tail sums on both sides.
#[derive(Debug, Clone)]
pub struct ScoreLaw {
    scores: Vec<f64>,
    /// prefix[i] = Pr{score among the first i atoms}
    prefix: Vec<f64>,
    /// suffix[i] = Pr{score among atoms i..}
    suffix: Vec<f64>,
}

impl ScoreLaw {
    fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let scores: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let mut prefix = Vec::with_capacity(atoms.len() + 1);
        let mut acc = KahanSum::new();
        prefix.push(0.0);
        for a in &atoms {
            acc.add(a.1);
            prefix.push(acc.value());
        }
        let mut suffix = vec![0.0; atoms.len() + 1];
        let mut acc = KahanSum::new();
        for (i, a) in atoms.iter().enumerate().rev() {
            acc.add(a.1);
            suffix[i] = acc.value();
        }
        Self { scores, prefix, suffix }
    }

    /// Law of −(1/n) ln p(Xⁿ|Yⁿ) under the joint source.
    pub fn cond_entropy(src: &JointSource, n: u64, budget: u64) -> Result<Self> {
        let cells = surprisal_cells(src);
        check_budget(composition_count(n, cells.len()), budget)?;
        let ln_fact: Vec<f64> = (0..=n).map(ln_factorial).collect();
        let mut atoms = Vec::new();
        for_each_composition(n, cells.len(), |k| {
            let mut ln = ln_fact[n as usize];
            let mut s = 0.0;
            for (c, &kk) in cells.iter().zip(k) {
                if kk > 0 {
                    ln += kk as f64 * c.ln_p - ln_fact[kk as usize];
                    s += kk as f64 * c.score;
                }
            }
            atoms.push((s / n as f64, ln.exp()));
        });
        Ok(Self::from_atoms(atoms))
    }

    /// Law of (1/n) ln(p(Yⁿ|xⁿ)/q_t(Yⁿ)) given xⁿ of type t.
    pub fn density(src: &JointSource, t: &TypeVector, budget: u64) -> Result<Self> {
        let groups = density_group_laws(src, t)?;
        check_budget(product_size(&groups), budget)?;
        let n = t.n() as f64;
        let mut atoms = Vec::new();
        walk_product(&groups, 0.0, 0.0, &mut |s, ln| atoms.push((s / n, ln.exp())));
        Ok(Self::from_atoms(atoms))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Pr{score > thr} (ties count as equal).
    pub fn prob_above(&self, thr: f64) -> f64 {
        let i = self.scores.partition_point(|&s| !exceeds(s, thr));
        self.suffix[i]
    }

    /// Pr{score < thr}.
    pub fn prob_below(&self, thr: f64) -> f64 {
        let i = self.scores.partition_point(|&s| falls_below(s, thr));
        self.prefix[i]
    }

    /// Pr{score ≤ thr}.
    pub fn prob_at_most(&self, thr: f64) -> f64 {
        let i = self.scores.partition_point(|&s| !exceeds(s, thr));
        self.prefix[i]
    }
}

/// Which score a jar thresholds.
#[derive(Debug, Clone, PartialEq)]
pub enum JarKind {
    /// {xⁿ : −(1/n) ln p(xⁿ|yⁿ) ≤ threshold}
    ConditionalEntropy,
    /// {xⁿ of type t : (1/n) ln(p(yⁿ|xⁿ)/q_t(yⁿ)) ≥ threshold}
    MutualInformation(TypeVector),
}

/// A jar of x-sequences around a side-information sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct JarSpec {
    pub kind: JarKind,
    pub threshold: f64,
    nx: usize,
    ny: usize,
    /// Per-letter scores, row-major by x; ±inf on forbidden cells.
    cell_scores: Vec<f64>,
}

impl JarSpec {
    /// Conditional-entropy jar with threshold H(X|Y) + δ.
    pub fn conditional_entropy(src: &JointSource, delta: f64) -> Self {
        Self::conditional_entropy_at(src, conditional_entropy(src) + delta)
    }

    pub fn conditional_entropy_at(src: &JointSource, threshold: f64) -> Self {
        let cell_scores = src
            .surprisal_table()
            .into_iter()
            .map(|s| s.unwrap_or(f64::INFINITY))
            .collect();
        Self {
            kind: JarKind::ConditionalEntropy,
            threshold,
            nx: src.nx(),
            ny: src.ny(),
            cell_scores,
        }
    }

    /// Mutual-information jar for type t with threshold I(t;P) − δ.
    pub fn mutual_information(src: &JointSource, t: TypeVector, delta: f64) -> Result<Self> {
        let thr = mutual_info_t(src, &t.probs()) - delta;
        Self::mutual_information_at(src, t, thr)
    }

    pub fn mutual_information_at(src: &JointSource, t: TypeVector, threshold: f64) -> Result<Self> {
        if t.alphabet_size() != src.nx() {
            return Err(Error::InvalidType("type alphabet does not match source".into()));
        }
        let q = q_t(src, &t.probs());
        let cell_scores = density_table(src, &q)
            .into_iter()
            .map(|d| d.unwrap_or(f64::NEG_INFINITY))
            .collect();
        Ok(Self {
            kind: JarKind::MutualInformation(t),
            threshold,
            nx: src.nx(),
            ny: src.ny(),
            cell_scores,
        })
    }

    #[inline]
    fn cell(&self, x: usize, y: usize) -> f64 {
        self.cell_scores[x * self.ny + y]
    }

    fn admits(&self, mean_score: f64) -> bool {
        match self.kind {
            JarKind::ConditionalEntropy => !exceeds(mean_score, self.threshold),
            JarKind::MutualInformation(_) => !falls_below(mean_score, self.threshold),
        }
    }

    /// Mean per-letter score of the pair (∓inf on forbidden cells).
    pub fn score(&self, x: &[usize], y: &[usize]) -> f64 {
        let s: f64 = x.iter().zip(y).map(|(&a, &b)| self.cell(a, b)).sum();
        s / x.len() as f64
    }

    pub fn contains(&self, x: &[usize], y: &[usize]) -> bool {
        debug_assert_eq!(x.len(), y.len());
        if let JarKind::MutualInformation(t) = &self.kind {
            let mut counts = vec![0u64; self.nx];
            for &a in x {
                counts[a] += 1;
            }
            if counts != t.counts() {
                return false;
            }
        }
        self.admits(self.score(x, y))
    }
}

/// Exact jar size.
#[derive(Debug, Clone, PartialEq)]
pub struct JarCount {
    pub count: BigUint,
    pub ln: f64,
}

/// Number of xⁿ in the jar centered at `y`, by enumerating the x-composition
/// within each group of positions sharing a y-symbol.
pub fn jar_cardinality(jar: &JarSpec, y: &[usize], budget: u64) -> Result<JarCount> {
    let n = y.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty side-information sequence".into()));
    }
    let mut group_sizes = vec![0u64; jar.ny];
    for &b in y {
        if b >= jar.ny {
            return Err(Error::SymbolOutOfRange {
                symbol: b,
                size: jar.ny,
            });
        }
        group_sizes[b] += 1;
    }
    if let JarKind::MutualInformation(t) = &jar.kind {
        if t.n() != n as u64 {
            return Err(Error::LengthMismatch {
                expected: t.n() as usize,
                got: n,
            });
        }
    }
    // per y-group: (x-counts, score sum, multiplicity)
    type Entry = (Vec<u64>, f64, BigUint);
    let mut groups: Vec<Vec<Entry>> = Vec::new();
    let mut size = 1.0;
    for (b, &m) in group_sizes.iter().enumerate() {
        if m == 0 {
            continue;
        }
        let allowed: Vec<usize> = (0..jar.nx).filter(|&a| jar.cell(a, b).is_finite()).collect();
        size *= composition_count(m, allowed.len());
        check_budget(size, budget)?;
        let mut entries = Vec::new();
        for_each_composition(m, allowed.len(), |k| {
            let mut counts = vec![0u64; jar.nx];
            let mut s = 0.0;
            for (&a, &c) in allowed.iter().zip(k) {
                counts[a] = c;
                s += c as f64 * jar.cell(a, b);
            }
            entries.push((counts, s, multinomial(k)));
        });
        groups.push(entries);
    }
    let target = match &jar.kind {
        JarKind::MutualInformation(t) => Some(t.counts().to_vec()),
        JarKind::ConditionalEntropy => None,
    };
    let mut total = BigUint::ZERO;
    let mut counts = vec![0u64; jar.nx];
    jar_walk(
        jar,
        &groups,
        &target,
        n as f64,
        &mut counts,
        0.0,
        &BigUint::one(),
        &mut total,
    );
    let ln = ln_biguint(&total);
    Ok(JarCount { count: total, ln })
}

#[allow(clippy::too_many_arguments)]
fn jar_walk(
    jar: &JarSpec,
    groups: &[Vec<(Vec<u64>, f64, BigUint)>],
    target: &Option<Vec<u64>>,
    n: f64,
    counts: &mut Vec<u64>,
    score: f64,
    mult: &BigUint,
    total: &mut BigUint,
) {
    match groups.split_first() {
        None => {
            if target.as_ref().is_some_and(|t| t != counts) {
                return;
            }
            if jar.admits(score / n) {
                *total += mult;
            }
        }
        Some((head, rest)) => {
            for (k, s, m) in head {
                for (c, v) in counts.iter_mut().zip(k) {
                    *c += v;
                }
                let over = target
                    .as_ref()
                    .is_some_and(|t| counts.iter().zip(t).any(|(c, t)| c > t));
                if !over {
                    jar_walk(jar, rest, target, n, counts, score + s, &(mult * m), total);
                }
                for (c, v) in counts.iter_mut().zip(k) {
                    *c -= v;
                }
            }
        }
    }
}

/// Draws n i.i.d. pairs from the joint pmf with SplitMix64 seeded by `seed`.
pub fn sample_pair_sequences(src: &JointSource, n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let cdf = joint_cdf(src);
    let mut rng = SplitMix64::new(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let cell = rng.sample_cdf(&cdf);
        xs.push(cell / src.ny());
        ys.push(cell % src.ny());
    }
    (xs, ys)
}

/// Cumulative table over row-major cells.
pub(crate) fn joint_cdf(src: &JointSource) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = src
        .pmf()
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // the last positive cell absorbs rounding
    if let Some(last) = src.pmf().iter().rposition(|&p| p > 0.0) {
        for v in &mut cdf[last..] {
            *v = 1.0;
        }
    }
    cdf
}
