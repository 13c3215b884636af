//! Large-deviation rate functions for the conditional surprisal and for the
//! conditional information density, plus the tilted statistics behind the
//! exact-exponent lower bound.
//!
//! Both rate functions have the form
//!
//! ```text
//! r = sup_{λ≥0} [ λ c − Σ_g w_g ln E_g e^{λ S} ]
//! ```
//!
//! over a finite family of groups g, each a finite law of a score S. The
//! objective is concave with derivative `c − Σ_g w_g E_{g,λ}[S]`, where
//! `E_{g,λ}` is the exponentially tilted mean, so its maximizer is found by
//! bisection on the derivative.

use crate::error::{Error, Result};
use crate::gaussian::{ln_q_function, q_inverse};
use crate::numeric::kahan_sum;
use crate::source::{conditional_entropy, density_table, mutual_info_t, q_t, JointSource};
use serde::Serialize;

/// Default Berry-Esseen constant for the exact-exponent prefactor.
pub const DEFAULT_BERRY_ESSEEN: f64 = 0.4748;

const LAMBDA_START: f64 = 64.0;
const LAMBDA_LIMIT: f64 = 1e30;
const BISECTION_TOL: f64 = 1e-12;
const BOUNDARY_TOL: f64 = 1e-12;

/// A rate value; `Unbounded` marks a deviation the score cannot reach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RateValue {
    Finite(f64),
    Unbounded,
}

impl RateValue {
    /// `f64::INFINITY` for `Unbounded`, handy for e^{−n r}.
    pub fn as_f64(self) -> f64 {
        match self {
            RateValue::Finite(v) => v,
            RateValue::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, RateValue::Finite(_))
    }

    /// e^{−n r}, zero when unbounded.
    pub fn chernoff_bound(self, n: u64) -> f64 {
        match self {
            RateValue::Finite(v) => (-(n as f64) * v).exp(),
            RateValue::Unbounded => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFunctionPoint {
    pub delta: f64,
    /// Maximizing tilt; `f64::INFINITY` when the supremum is only approached.
    pub lambda_star: f64,
    pub value: RateValue,
    /// Second derivative of the log-MGF term at the maximizer (a tilted
    /// variance); the rate's curvature in delta is its reciprocal.
    pub curvature: f64,
}

struct Atom {
    prob: f64,
    score: f64,
}

struct Group {
    weight: f64,
    atoms: Vec<Atom>,
    max_score: f64,
}

/// Weighted family of finite score laws.
struct GroupedLaw {
    groups: Vec<Group>,
}

struct Tilted {
    log_mgf: f64,
    mean: f64,
    var: f64,
}

impl GroupedLaw {
    fn new(groups: Vec<(f64, Vec<Atom>)>) -> Self {
        let groups = groups
            .into_iter()
            .filter(|(w, atoms)| *w > 0.0 && !atoms.is_empty())
            .map(|(weight, atoms)| {
                let max_score = atoms.iter().map(|a| a.score).fold(f64::NEG_INFINITY, f64::max);
                Group {
                    weight,
                    atoms,
                    max_score,
                }
            })
            .collect();
        Self { groups }
    }

    fn group_tilt(g: &Group, lambda: f64) -> Tilted {
        let shifted: Vec<f64> = g
            .atoms
            .iter()
            .map(|a| a.prob * (lambda * (a.score - g.max_score)).exp())
            .collect();
        let z: f64 = shifted.iter().sum();
        let mean = g.atoms.iter().zip(&shifted).map(|(a, w)| w * a.score).sum::<f64>() / z;
        let var = g
            .atoms
            .iter()
            .zip(&shifted)
            .map(|(a, w)| w * (a.score - mean).powi(2))
            .sum::<f64>()
            / z;
        Tilted {
            log_mgf: lambda * g.max_score + z.ln(),
            mean,
            var,
        }
    }

    fn tilt(&self, lambda: f64) -> Tilted {
        let mut out = Tilted {
            log_mgf: 0.0,
            mean: 0.0,
            var: 0.0,
        };
        for g in &self.groups {
            let t = Self::group_tilt(g, lambda);
            out.log_mgf += g.weight * t.log_mgf;
            out.mean += g.weight * t.mean;
            out.var += g.weight * t.var;
        }
        out
    }

    fn max_mean(&self) -> f64 {
        kahan_sum(self.groups.iter().map(|g| g.weight * g.max_score))
    }

    /// −Σ_g w_g ln P_g(S = max_g S): the objective's limit as λ → ∞ when the
    /// target sits exactly at the largest achievable mean.
    fn boundary_value(&self) -> f64 {
        -kahan_sum(self.groups.iter().map(|g| {
            let tol = BOUNDARY_TOL * g.max_score.abs().max(1.0);
            let top: f64 = g
                .atoms
                .iter()
                .filter(|a| a.score >= g.max_score - tol)
                .map(|a| a.prob)
                .sum();
            g.weight * top.ln()
        }))
    }

    fn objective(&self, c: f64, lambda: f64) -> f64 {
        lambda * c - self.tilt(lambda).log_mgf
    }

    /// sup_{λ≥0} [λ c − Σ w ln E e^{λS}].
    fn legendre(&self, c: f64, delta: f64) -> RateFunctionPoint {
        let top = self.max_mean();
        let tol = BOUNDARY_TOL * top.abs().max(1.0);
        if c > top + tol {
            return RateFunctionPoint {
                delta,
                lambda_star: f64::INFINITY,
                value: RateValue::Unbounded,
                curvature: 0.0,
            };
        }
        if c >= top - tol {
            return RateFunctionPoint {
                delta,
                lambda_star: f64::INFINITY,
                value: RateValue::Finite(self.boundary_value().max(0.0)),
                curvature: 0.0,
            };
        }
        let slope = |lambda: f64| c - self.tilt(lambda).mean;
        if slope(0.0) <= 0.0 {
            return RateFunctionPoint {
                delta,
                lambda_star: 0.0,
                value: RateValue::Finite(0.0),
                curvature: self.tilt(0.0).var,
            };
        }
        let mut lo = 0.0;
        let mut hi = LAMBDA_START;
        while slope(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > LAMBDA_LIMIT {
                // numerically indistinguishable from the boundary case
                return RateFunctionPoint {
                    delta,
                    lambda_star: f64::INFINITY,
                    value: RateValue::Finite(self.boundary_value().max(0.0)),
                    curvature: 0.0,
                };
            }
        }
        let mut mid = 0.5 * (lo + hi);
        while hi - lo > BISECTION_TOL {
            mid = 0.5 * (lo + hi);
            let d = slope(mid);
            if d.abs() <= BISECTION_TOL {
                break;
            }
            if d > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        RateFunctionPoint {
            delta,
            lambda_star: mid,
            value: RateValue::Finite(self.objective(c, mid).max(0.0)),
            curvature: self.tilt(mid).var,
        }
    }
}

fn surprisal_law(src: &JointSource) -> GroupedLaw {
    let atoms = (0..src.nx())
        .flat_map(|x| (0..src.ny()).map(move |y| (x, y)))
        .filter(|&(x, y)| src.p(x, y) > 0.0)
        .map(|(x, y)| Atom {
            prob: src.p(x, y),
            score: -src.p_x_given_y(x, y).ln(),
        })
        .collect();
    GroupedLaw::new(vec![(1.0, atoms)])
}

/// Negated information density −ln(p(y|x)/q_t(y)) grouped by x, weighted by t.
fn negated_density_law(src: &JointSource, t: &[f64]) -> GroupedLaw {
    let q = q_t(src, t);
    let dens = density_table(src, &q);
    let ny = src.ny();
    let groups = (0..src.nx())
        .map(|x| {
            let atoms = (0..ny)
                .filter_map(|y| {
                    dens[x * ny + y].map(|d| Atom {
                        prob: src.p_y_given_x(x, y),
                        score: -d,
                    })
                })
                .collect();
            (t[x], atoms)
        })
        .collect();
    GroupedLaw::new(groups)
}

fn check_full_support(src: &JointSource, t: &[f64]) -> Result<()> {
    if t.len() != src.nx() {
        return Err(Error::InvalidType(format!(
            "type has {} entries, |X| = {}",
            t.len(),
            src.nx()
        )));
    }
    if t.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::TypeNotFullSupport);
    }
    Ok(())
}

/// r_{X|Y}(δ) = sup_{λ≥0} [λ(H(X|Y)+δ) − ln Σ p(y) p^{1−λ}(x|y)].
pub fn rate_cond_entropy(src: &JointSource, delta: f64) -> Result<RateFunctionPoint> {
    if !(delta >= 0.0) {
        return Err(Error::NegativeDelta(delta));
    }
    let c = conditional_entropy(src) + delta;
    Ok(surprisal_law(src).legendre(c, delta))
}

/// r_−(t,δ) = sup_{λ≥0} [λ(δ − I(t;P)) − Σ_x t(x) ln Σ_y p(y|x)(p(y|x)/q_t(y))^{−λ}].
pub fn rate_mutual_info(src: &JointSource, t: &[f64], delta: f64) -> Result<RateFunctionPoint> {
    if !(delta >= 0.0) {
        return Err(Error::NegativeDelta(delta));
    }
    check_full_support(src, t)?;
    let c = delta - mutual_info_t(src, t);
    Ok(negated_density_law(src, t).legendre(c, delta))
}

/// Upper end of the tilt range on which the density's negative moments exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaBound {
    pub value: RateValue,
    /// Set when some p(x,y) is zero; the sum then runs over the support only.
    pub restricted_support: bool,
}

/// λ*_−(X;Y): for finite alphabets every moment is a finite sum, so the bound
/// is always unbounded.
pub fn lambda_star_max(src: &JointSource) -> LambdaBound {
    LambdaBound {
        value: RateValue::Unbounded,
        restricted_support: !src.is_strictly_positive(),
    }
}

/// Statistics of the exponentially tilted conditional law
/// f_{−λ}(y|x) ∝ p(y|x) (p(y|x)/q_t(y))^{−λ}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltedStats {
    pub lambda: f64,
    /// Row-major |X|×|Y| table of f_{−λ}(y|x).
    pub tilted_pmf: Vec<f64>,
    /// D(t,x,λ): tilted mean of ln(p(y|x)/q_t(y)) for each x.
    pub d_mean: Vec<f64>,
    /// t-average of the tilted central second moments.
    pub sigma2_minus: f64,
    /// t-average of the tilted central absolute third moments.
    pub m3_minus: f64,
}

pub fn tilted_stats(src: &JointSource, t: &[f64], lambda: f64) -> Result<TiltedStats> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("tilt must be >= 0, got {lambda}")));
    }
    check_full_support(src, t)?;
    let q = q_t(src, t);
    let dens = density_table(src, &q);
    let (nx, ny) = (src.nx(), src.ny());
    let mut tilted = vec![0.0; nx * ny];
    let mut d_mean = vec![0.0; nx];
    let mut s2 = 0.0;
    let mut m3 = 0.0;
    for x in 0..nx {
        let row = &dens[x * ny..(x + 1) * ny];
        // shift by the smallest density so the largest exponent is 0
        let dmin = row.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let mut z = 0.0;
        for y in 0..ny {
            if let Some(d) = row[y] {
                let w = src.p_y_given_x(x, y) * (-lambda * (d - dmin)).exp();
                tilted[x * ny + y] = w;
                z += w;
            }
        }
        for v in &mut tilted[x * ny..(x + 1) * ny] {
            *v /= z;
        }
        let f = &tilted[x * ny..(x + 1) * ny];
        let mean: f64 = (0..ny).filter_map(|y| row[y].map(|d| f[y] * d)).sum();
        d_mean[x] = mean;
        let (v2, v3) = (0..ny)
            .filter_map(|y| row[y].map(|d| (f[y], (d - mean).abs())))
            .fold((0.0, 0.0), |(a, b), (w, e)| (a + w * e * e, b + w * e * e * e));
        s2 += t[x] * v2;
        m3 += t[x] * v3;
    }
    Ok(TiltedStats {
        lambda,
        tilted_pmf: tilted,
        d_mean,
        sigma2_minus: s2.max(0.0),
        m3_minus: m3.max(0.0),
    })
}

/// δ²/(2σ²), the small-deviation expansion of either rate function.
pub fn quadratic_approx(sigma2: f64, delta: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(delta * delta / (2.0 * sigma2))
}

/// ξ = e^{nλ²σ²/2} Q(ρ* + √n λ σ) with Q(ρ*) = ½ − 2 C M / (√n σ³), using the
/// default Berry-Esseen constant.
pub fn xi_lower_prefactor(stats: &TiltedStats, n: u64, lambda: f64) -> Result<f64> {
    xi_lower_prefactor_with(stats.sigma2_minus, stats.m3_minus, n, lambda, DEFAULT_BERRY_ESSEEN)
}

/// Prefactor from raw tilted moments and an explicit Berry-Esseen constant.
pub fn xi_lower_prefactor_with(sigma2: f64, m3: f64, n: u64, lambda: f64, berry_esseen: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("block length must be >= 1".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidRegime(format!("tilt must be positive, got {lambda}")));
    }
    let sigma = sigma2.sqrt();
    let sqrt_n = (n as f64).sqrt();
    let target = 0.5 - 2.0 * berry_esseen * m3 / (sqrt_n * sigma2 * sigma);
    if !(target > 0.0) {
        return Err(Error::InvalidRegime(format!(
            "Berry-Esseen correction exceeds 1/2 at n = {n} (Q(rho*) = {target})"
        )));
    }
    let rho = q_inverse(target);
    let a = sqrt_n * lambda * sigma;
    let ln_xi = 0.5 * a * a + ln_q_function(rho + a);
    Ok(ln_xi.exp())
}

/// Tilted variance and absolute third central moment of the conditional
/// surprisal −ln p(X|Y) under p(x,y)e^{λ s}/Z.
pub fn surprisal_tilted_moments(src: &JointSource, lambda: f64) -> (f64, f64) {
    let law = surprisal_law(src);
    let g = &law.groups[0];
    let w: Vec<f64> = g
        .atoms
        .iter()
        .map(|a| a.prob * (lambda * (a.score - g.max_score)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let mean = g.atoms.iter().zip(&w).map(|(a, w)| w * a.score).sum::<f64>() / z;
    let (v2, v3) = g.atoms.iter().zip(&w).fold((0.0, 0.0), |(s2, s3), (a, w)| {
        let e = (a.score - mean).abs();
        (s2 + w * e * e / z, s3 + w * e * e * e / z)
    });
    (v2, v3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::q_function;
    use crate::source::{sigma2_d, sigma2_h};

    fn dsbs() -> JointSource {
        JointSource::dsbs(0.1).unwrap()
    }

    /// Dense grid search over λ ∈ [0, 64] with step 1e-4.
    fn grid_sup(f: impl Fn(f64) -> f64) -> f64 {
        (0..=640_000)
            .map(|i| f(i as f64 * 1e-4))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn ce_objective(src: &JointSource, delta: f64) -> impl Fn(f64) -> f64 + '_ {
        let h = conditional_entropy(src);
        move |l: f64| {
            let mut s = 0.0;
            for x in 0..src.nx() {
                for y in 0..src.ny() {
                    if src.p(x, y) > 0.0 {
                        s += src.marginal_y()[y] * src.p_x_given_y(x, y).powf(1.0 - l);
                    }
                }
            }
            l * (h + delta) - s.ln()
        }
    }

    fn mi_objective<'a>(src: &'a JointSource, t: &'a [f64], delta: f64) -> impl Fn(f64) -> f64 + 'a {
        let q = q_t(src, t);
        let i = mutual_info_t(src, t);
        move |l: f64| {
            let mut acc = 0.0;
            for x in 0..src.nx() {
                let inner: f64 = (0..src.ny())
                    .map(|y| {
                        let p = src.p_y_given_x(x, y);
                        p * (p / q[y]).powf(-l)
                    })
                    .sum();
                acc += t[x] * inner.ln();
            }
            l * (delta - i) - acc
        }
    }

    #[test]
    fn cond_entropy_rate_examples() {
        let s = dsbs();
        let p0 = rate_cond_entropy(&s, 0.0).unwrap();
        assert_eq!(p0.value, RateValue::Finite(0.0));
        assert_eq!(p0.lambda_star, 0.0);
        let max_s = -(0.1f64).ln();
        let beyond = max_s - conditional_entropy(&s) + 0.01;
        assert_eq!(rate_cond_entropy(&s, beyond).unwrap().value, RateValue::Unbounded);
        assert_eq!(rate_cond_entropy(&s, -0.1), Err(Error::NegativeDelta(-0.1)));

        let r = rate_cond_entropy(&s, 0.05).unwrap().value.as_f64();
        let grid = grid_sup(ce_objective(&s, 0.05));
        assert!((r - grid).abs() < 1e-8);
        let quad = 0.05f64.powi(2) / (2.0 * sigma2_h(&s));
        assert!((r - quad).abs() / quad <= 0.10, "r {r} quad {quad}");
    }

    #[test]
    fn boundary_deviation_is_finite() {
        // H + δ exactly at the largest surprisal: the limit −ln P(S = max)
        let s = dsbs();
        let delta = -(0.1f64).ln() - conditional_entropy(&s);
        let p = rate_cond_entropy(&s, delta).unwrap();
        assert!(p.lambda_star.is_infinite());
        assert!((p.value.as_f64() - -(0.1f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn mutual_info_rate_examples() {
        let s = dsbs();
        let t = [0.5, 0.5];
        assert_eq!(rate_mutual_info(&s, &t, 0.0).unwrap().value, RateValue::Finite(0.0));
        let ind = JointSource::independent(&[0.4, 0.6], &[0.3, 0.7]).unwrap();
        assert_eq!(rate_mutual_info(&ind, &t, 0.1).unwrap().value, RateValue::Unbounded);
        let r = rate_mutual_info(&s, &t, 0.05).unwrap().value.as_f64();
        let grid = grid_sup(mi_objective(&s, &t, 0.05));
        assert!((r - grid).abs() < 1e-8, "r {r} grid {grid}");
        assert_eq!(rate_mutual_info(&s, &[1.0, 0.0], 0.1), Err(Error::TypeNotFullSupport));
        assert_eq!(rate_mutual_info(&s, &t, -1.0), Err(Error::NegativeDelta(-1.0)));
    }

    #[test]
    fn lambda_star_max_examples() {
        let b = lambda_star_max(&dsbs());
        assert_eq!(b.value, RateValue::Unbounded);
        assert!(!b.restricted_support);
        let z = crate::source::validate_source(&[vec![0.5, 0.25], vec![0.0, 0.25]]).unwrap();
        let b = lambda_star_max(&z);
        assert_eq!(b.value, RateValue::Unbounded);
        assert!(b.restricted_support);
    }

    #[test]
    fn tilted_stats_examples() {
        let s = dsbs();
        let t = [0.5, 0.5];
        let st = tilted_stats(&s, &t, 0.0).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!((st.tilted_pmf[x * 2 + y] - s.p_y_given_x(x, y)).abs() < 1e-15);
            }
        }
        assert!((st.sigma2_minus - sigma2_d(&s, &t)).abs() < 1e-10);

        let same = crate::source::validate_source(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let st = tilted_stats(&same, &t, 0.7).unwrap();
        assert!(st.sigma2_minus < 1e-15);

        // independent summation at λ = 0.5: per-x two-point laws
        let lambda = 0.5;
        let st = tilted_stats(&s, &t, lambda).unwrap();
        let (a, b) = ((0.9f64 / 0.5).ln(), (0.1f64 / 0.5).ln());
        let wa = 0.9 * (-lambda * a).exp();
        let wb = 0.1 * (-lambda * b).exp();
        let (fa, fb) = (wa / (wa + wb), wb / (wa + wb));
        let mean = fa * a + fb * b;
        let v2 = fa * (a - mean).powi(2) + fb * (b - mean).powi(2);
        let v3 = fa * (a - mean).abs().powi(3) + fb * (b - mean).abs().powi(3);
        assert!((st.d_mean[0] - mean).abs() < 1e-14);
        assert!((st.sigma2_minus - v2).abs() < 1e-14);
        assert!((st.m3_minus - v3).abs() < 1e-14);
        for x in 0..2 {
            let row: f64 = st.tilted_pmf[x * 2..x * 2 + 2].iter().sum();
            assert!((row - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_examples() {
        assert_eq!(quadratic_approx(1.0, 0.0).unwrap(), 0.0);
        assert!((quadratic_approx(1.0, 0.2).unwrap() - 0.02).abs() < 1e-16);
        assert_eq!(quadratic_approx(0.0, 0.2), Err(Error::ZeroVariance));
        // cubic remainder: |r − δ²/2σ²| / δ³ stays bounded
        let s = dsbs();
        let s2 = sigma2_h(&s);
        let ratios: Vec<f64> = [0.01, 0.02, 0.03, 0.04, 0.05]
            .iter()
            .map(|&d| {
                let r = rate_cond_entropy(&s, d).unwrap().value.as_f64();
                (r - quadratic_approx(s2, d).unwrap()).abs() / (d * d * d)
            })
            .collect();
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi < 10.0 && hi / lo < 3.0, "{ratios:?}");
    }

    #[test]
    fn xi_prefactor_examples() {
        let stats = |s2: f64, m3: f64| TiltedStats {
            lambda: 0.0,
            tilted_pmf: vec![],
            d_mean: vec![],
            sigma2_minus: s2,
            m3_minus: m3,
        };
        // direct evaluation with an erfc-based Q
        let st = stats(1.0, 1.0);
        let (n, lambda) = (1_000_000u64, 1e-3);
        let xi = xi_lower_prefactor(&st, n, lambda).unwrap();
        let target = 0.5 - 2.0 * 0.4748 / 1000.0;
        let rho = q_inverse(target);
        let a = 1000.0 * lambda;
        let direct = (0.5 * a * a).exp() * q_function(rho + a);
        assert!(xi > 0.0 && xi < 1.0);
        assert!((xi - direct).abs() < 1e-13);

        assert!(matches!(
            xi_lower_prefactor(&stats(1.0, 10.0), 1, 0.5),
            Err(Error::InvalidRegime(_))
        ));
        assert_eq!(xi_lower_prefactor(&stats(0.0, 1.0), 10, 0.5), Err(Error::ZeroVariance));

        // λ = c/√n: √n λ ξ settles to a constant
        let c = 2.0;
        let vals: Vec<f64> = [1_000u64, 10_000, 100_000]
            .iter()
            .map(|&n| {
                let lambda = c / (n as f64).sqrt();
                xi_lower_prefactor(&st, n, lambda).unwrap() * (n as f64).sqrt() * lambda
            })
            .collect();
        let r1 = vals[1] / vals[0] - 1.0;
        let r2 = vals[2] / vals[1] - 1.0;
        assert!(r2.abs() < r1.abs() && r2.abs() < 0.05, "{vals:?}");
        // limit c·e^{c²/2}·Q(c), approached at rate 1/√n
        let limit = c * (0.5 * c * c).exp() * q_function(c);
        assert!((vals[2] / limit - 1.0).abs() < 0.03, "{vals:?} vs {limit}");
    }
}
