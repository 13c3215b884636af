//! Composition sums against full sequence enumeration, and the large-deviation
//! bounds they must respect.

use swcoding::composition::{
    exact_tail_cond_entropy, exact_tail_mutual_info, exact_tails_cond_entropy, jar_cardinality, joint_compositions,
    total_composition_mass, JarSpec, DEFAULT_BUDGET,
};
use swcoding::numeric::KahanSum;
use swcoding::rate::{rate_cond_entropy, rate_mutual_info, tilted_stats, xi_lower_prefactor};
use swcoding::rng::SplitMix64;
use swcoding::source::{conditional_entropy, entropy_of_type, mutual_info_t};
use swcoding::{JointSource, TypeVector};

fn digits(mut idx: u64, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = (idx % base as u64) as usize;
        idx /= base as u64;
    }
    out
}

/// Pr{−(1/n) ln p(Xⁿ|Yⁿ) > H + δ} by walking every pair of sequences.
fn brute_cond_tail(src: &JointSource, n: usize, delta: f64) -> f64 {
    let (nx, ny) = (src.nx(), src.ny());
    let py: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| src.p(x, y)).sum()).collect();
    let thr = conditional_entropy(src) + delta;
    let cells = (nx * ny) as u64;
    let mut total = KahanSum::new();
    for idx in 0..cells.pow(n as u32) {
        let seq = digits(idx, nx * ny, n);
        let mut prob = 1.0;
        let mut score = 0.0;
        for &c in &seq {
            let (x, y) = (c / ny, c % ny);
            let p = src.p(x, y);
            prob *= p;
            if p > 0.0 {
                score -= (p / py[y]).ln();
            }
        }
        if prob > 0.0 && score / n as f64 > thr + 1e-12 * thr.abs().max(1.0) {
            total.add(prob);
        }
    }
    total.value()
}

/// Pr{(1/n) ln(p(Yⁿ|xⁿ)/q_t(Yⁿ)) ≤ I(t) − δ} by walking every yⁿ.
fn brute_density_tail(src: &JointSource, x: &[usize], delta: f64) -> f64 {
    let (nx, ny, n) = (src.nx(), src.ny(), x.len());
    let mut t = vec![0.0; nx];
    for &a in x {
        t[a] += 1.0 / n as f64;
    }
    let px: Vec<f64> = (0..nx).map(|a| (0..ny).map(|b| src.p(a, b)).sum()).collect();
    let w = |a: usize, b: usize| src.p(a, b) / px[a];
    let q: Vec<f64> = (0..ny).map(|b| (0..nx).map(|a| t[a] * w(a, b)).sum()).collect();
    let thr = mutual_info_t(src, &t) - delta;
    let mut total = 0.0;
    for idx in 0..(ny as u64).pow(n as u32) {
        let y = digits(idx, ny, n);
        let mut prob = 1.0;
        let mut score = 0.0;
        for (&a, &b) in x.iter().zip(&y) {
            prob *= w(a, b);
            score += (w(a, b) / q[b]).ln();
        }
        if prob > 0.0 && score / n as f64 <= thr + 1e-12 * thr.abs().max(1.0) {
            total += prob;
        }
    }
    total
}

fn random_sources() -> Vec<JointSource> {
    let shapes = [(2, 2), (2, 3), (3, 2), (2, 2), (3, 2)];
    shapes
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| JointSource::random_positive(a, b, 100 + i as u64, 0.02).unwrap())
        .collect()
}

#[test]
fn dsbs_cond_tail_matches_full_enumeration() {
    let s = JointSource::dsbs(0.1).unwrap();
    let exact = exact_tail_cond_entropy(&s, 8, 0.2, DEFAULT_BUDGET).unwrap();
    let brute = brute_cond_tail(&s, 8, 0.2);
    assert!((exact - brute).abs() < 1e-12, "{exact} vs {brute}");
}

#[test]
fn binary_cond_tails_match_enumeration_up_to_ten() {
    let sources = [
        JointSource::dsbs(0.1).unwrap(),
        JointSource::random_positive(2, 2, 7, 0.02).unwrap(),
    ];
    for s in &sources {
        for n in 1..=10usize {
            let deltas = [0.0, 0.1, 0.3];
            let exact = exact_tails_cond_entropy(s, n as u64, &deltas, DEFAULT_BUDGET).unwrap();
            for (&d, &e) in deltas.iter().zip(&exact) {
                let b = brute_cond_tail(s, n, d);
                assert!((e - b).abs() < 1e-12, "n={n} δ={d}: {e} vs {b}");
            }
        }
    }
}

#[test]
fn dsbs_density_tail_matches_enumeration() {
    let s = JointSource::dsbs(0.1).unwrap();
    let t = TypeVector::new(vec![4, 4]).unwrap();
    let exact = exact_tail_mutual_info(&s, &t, 0.2, DEFAULT_BUDGET).unwrap();
    // the value must not depend on which sequence of the type is fixed
    for x in [[0, 0, 0, 0, 1, 1, 1, 1], [1, 0, 1, 0, 1, 0, 1, 0]] {
        let brute = brute_density_tail(&s, &x, 0.2);
        assert!((exact - brute).abs() < 1e-12, "{exact} vs {brute}");
    }
}

#[test]
fn binary_density_tails_match_enumeration_up_to_ten() {
    let s = JointSource::random_positive(2, 2, 21, 0.02).unwrap();
    for n in 2..=10usize {
        let x: Vec<usize> = (0..n).map(|i| usize::from(i % 3 == 0)).collect();
        let t = TypeVector::of_sequence(&x, 2).unwrap();
        for d in [0.0, 0.05, 0.2] {
            let e = exact_tail_mutual_info(&s, &t, d, DEFAULT_BUDGET).unwrap();
            let b = brute_density_tail(&s, &x, d);
            assert!((e - b).abs() < 1e-12, "n={n} δ={d}: {e} vs {b}");
        }
    }
}

#[test]
fn composition_mass_is_complete() {
    let mut sources = random_sources();
    sources.push(JointSource::dsbs(0.1).unwrap());
    for s in &sources {
        for n in [1u64, 5, 17, 40] {
            let m = total_composition_mass(s, n, DEFAULT_BUDGET).unwrap();
            assert!((m - 1.0).abs() < 1e-10, "n={n}: {m}");
        }
    }
    let s = JointSource::dsbs(0.2).unwrap();
    let ln_sum: Vec<f64> = joint_compositions(2, 2, 6, DEFAULT_BUDGET)
        .unwrap()
        .iter()
        .map(|k| k.ln_probability(&s).exp())
        .collect();
    assert_eq!(ln_sum.len(), 84);
    assert!((ln_sum.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn delta_grid() -> Vec<f64> {
    (1..=8).map(|i| 0.05 * i as f64).collect()
}

#[test]
fn cond_tail_below_chernoff_bound() {
    let mut sources = random_sources();
    sources.insert(0, JointSource::dsbs(0.1).unwrap());
    let deltas = delta_grid();
    for s in &sources {
        let bounds: Vec<_> = deltas.iter().map(|&d| rate_cond_entropy(s, d).unwrap().value).collect();
        for n in [4u64, 8, 16, 32, 64] {
            let tails = exact_tails_cond_entropy(s, n, &deltas, 20_000_000).unwrap();
            for ((tail, r), d) in tails.iter().zip(&bounds).zip(&deltas) {
                let bound = r.chernoff_bound(n);
                assert!(*tail <= bound * (1.0 + 1e-9) + 1e-15, "n={n} δ={d}: {tail} > {bound}");
            }
        }
    }
}

#[test]
fn density_tail_below_chernoff_bound() {
    let mut sources = random_sources();
    sources.insert(0, JointSource::dsbs(0.1).unwrap());
    for s in &sources {
        for n in [4u64, 8, 16, 32, 64] {
            let t = TypeVector::rounded(s.marginal_x(), n).unwrap();
            if !t.has_full_support() {
                continue;
            }
            for d in delta_grid() {
                let tail = exact_tail_mutual_info(s, &t, d, DEFAULT_BUDGET).unwrap();
                let bound = rate_mutual_info(s, &t.probs(), d).unwrap().value.chernoff_bound(n);
                assert!(tail <= bound * (1.0 + 1e-9) + 1e-15, "n={n} δ={d}: {tail} > {bound}");
            }
        }
    }
}

#[test]
fn density_tail_above_prefactor_lower_bound() {
    let mut sources = random_sources();
    sources.insert(0, JointSource::dsbs(0.1).unwrap());
    let delta = 0.1;
    let mut checked = 0;
    for s in &sources {
        for n in [64u64, 128, 256] {
            let t = TypeVector::rounded(s.marginal_x(), n).unwrap();
            let probs = t.probs();
            let point = rate_mutual_info(s, &probs, delta).unwrap();
            if !point.value.is_finite() || !(point.lambda_star > 0.0 && point.lambda_star.is_finite()) {
                continue;
            }
            let stats = tilted_stats(s, &probs, point.lambda_star).unwrap();
            let Ok(xi) = xi_lower_prefactor(&stats, n, point.lambda_star) else {
                continue;
            };
            let lower = xi * point.value.chernoff_bound(n);
            let tail = exact_tail_mutual_info(s, &t, delta, DEFAULT_BUDGET).unwrap();
            assert!(tail >= lower, "n={n}: tail {tail} < {lower}");
            checked += 1;
        }
    }
    assert!(checked >= 3);
}

#[test]
fn cond_entropy_jar_matches_full_scan() {
    let s = JointSource::dsbs(0.1).unwrap();
    let mut rng = SplitMix64::new(77);
    let n = 10;
    for _ in 0..5 {
        let y: Vec<usize> = (0..n).map(|_| (rng.next_u64() % 2) as usize).collect();
        let jar = JarSpec::conditional_entropy(&s, 0.1);
        let thr = conditional_entropy(&s) + 0.1;
        let mut brute = 0u64;
        for idx in 0..1u64 << n {
            let x = digits(idx, 2, n);
            let score: f64 = x.iter().zip(&y).map(|(&a, &b)| -s.p_x_given_y(a, b).ln()).sum::<f64>() / n as f64;
            if score <= thr + 1e-12 {
                brute += 1;
            }
            assert_eq!(jar.contains(&x, &y), score <= thr + 1e-12);
        }
        let count = jar_cardinality(&jar, &y, DEFAULT_BUDGET).unwrap();
        assert_eq!(count.count, brute.into());
    }
}

#[test]
fn mutual_info_jar_matches_scan_and_size_bound() {
    let mut sources = random_sources();
    sources.insert(0, JointSource::dsbs(0.1).unwrap());
    let mut rng = SplitMix64::new(4);
    for s in sources.iter().filter(|s| s.nx() == 2) {
        for n in [8usize, 10, 12] {
            let y: Vec<usize> = (0..n).map(|_| (rng.next_u64() % s.ny() as u64) as usize).collect();
            let t = TypeVector::rounded(s.marginal_x(), n as u64).unwrap();
            for delta in [0.0, 0.05, 0.1, 0.3] {
                let jar = JarSpec::mutual_information(s, t.clone(), delta).unwrap();
                let brute = (0..1u64 << n).filter(|&i| jar.contains(&digits(i, 2, n), &y)).count();
                let count = jar_cardinality(&jar, &y, DEFAULT_BUDGET).unwrap();
                assert_eq!(count.count, (brute as u64).into());
                let cap = n as f64 * (entropy_of_type(&t) - mutual_info_t(s, &t.probs()) + delta);
                assert!(count.ln <= cap + 1e-9, "ln|J| {} > {cap}", count.ln);
            }
        }
    }
}
