//! Discrete memoryless joint sources and their information quantities.
//!
//! All quantities are in nats. A [`JointSource`] stores p(x,y) row-major
//! (rows indexed by x). Distributions over 𝒳 that are not tied to a block
//! length are passed as plain `&[f64]`; [`TypeVector`] is the empirical
//! composition of a length-n sequence and converts with [`TypeVector::probs`].

use crate::error::{Error, Result};
use crate::numeric::{kahan_sum, xlnx};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Normalization tolerance for probability vectors.
pub const PROB_TOL: f64 = 1e-12;

/// Smallest entry still treated as a positive probability.
const MIN_POSITIVE: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct JointSource {
    nx: usize,
    ny: usize,
    pmf: Vec<f64>,
    strictly_positive: bool,
    px: Vec<f64>,
    py: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct SourceFile {
    pmf: Vec<Vec<f64>>,
}

/// Validates a raw joint pmf matrix, rows indexed by x.
pub fn validate_source(rows: &[Vec<f64>]) -> Result<JointSource> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::EmptySource);
    }
    let ny = rows[0].len();
    for (row, r) in rows.iter().enumerate() {
        if r.len() != ny {
            return Err(Error::RaggedSource {
                row,
                got: r.len(),
                expected: ny,
            });
        }
    }
    let nx = rows.len();
    let mut pmf = Vec::with_capacity(nx * ny);
    for (x, r) in rows.iter().enumerate() {
        for (y, &value) in r.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeEntry { x, y, value });
            }
            pmf.push(value);
        }
    }
    let sum = kahan_sum(pmf.iter().copied());
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::NotNormalized { sum });
    }
    let px: Vec<f64> = (0..nx)
        .map(|x| kahan_sum(pmf[x * ny..(x + 1) * ny].iter().copied()))
        .collect();
    if let Some(x) = px.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroMarginalX { x });
    }
    let py: Vec<f64> = (0..ny).map(|y| kahan_sum((0..nx).map(|x| pmf[x * ny + y]))).collect();
    let strictly_positive = pmf.iter().all(|&p| p >= MIN_POSITIVE);
    Ok(JointSource {
        nx,
        ny,
        pmf,
        strictly_positive,
        px,
        py,
    })
}

impl JointSource {
    /// Parses `{"pmf": [[...], ...]}` and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SourceFile = serde_json::from_str(text).map_err(|e| Error::SourceFile(e.to_string()))?;
        validate_source(&file.pmf)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::SourceFile(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "pmf": self.rows() }).to_string()
    }

    /// Doubly symmetric binary source: X uniform, Y = X flipped w.p. `crossover`.
    pub fn dsbs(crossover: f64) -> Result<Self> {
        let a = 0.5 * (1.0 - crossover);
        let b = 0.5 * crossover;
        validate_source(&[vec![a, b], vec![b, a]])
    }

    /// Product source p(x)p(y).
    pub fn independent(px: &[f64], py: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = px.iter().map(|&a| py.iter().map(|&b| a * b).collect()).collect();
        validate_source(&rows)
    }

    /// A strictly positive source drawn from the crate generator. Entries are
    /// uniform on [floor, 1] before normalization.
    pub fn random_positive(nx: usize, ny: usize, seed: u64, floor: f64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let raw: Vec<f64> = (0..nx * ny).map(|_| floor + (1.0 - floor) * rng.next_f64()).collect();
        let total = kahan_sum(raw.iter().copied());
        let rows: Vec<Vec<f64>> = raw.chunks(ny).map(|r| r.iter().map(|v| v / total).collect()).collect();
        // renormalization can leave the sum a few ulps off, well inside PROB_TOL
        validate_source(&rows)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Membership in 𝒫⁺: every cell strictly positive.
    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    #[inline]
    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.pmf[x * self.ny + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.pmf.chunks(self.ny).map(<[f64]>::to_vec).collect()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn marginal_x(&self) -> &[f64] {
        &self.px
    }

    pub fn marginal_y(&self) -> &[f64] {
        &self.py
    }

    /// p(x|y); zero when p(y) = 0.
    #[inline]
    pub fn p_x_given_y(&self, x: usize, y: usize) -> f64 {
        let py = self.py[y];
        if py > 0.0 {
            self.p(x, y) / py
        } else {
            0.0
        }
    }

    /// p(y|x).
    #[inline]
    pub fn p_y_given_x(&self, x: usize, y: usize) -> f64 {
        self.p(x, y) / self.px[x]
    }

    /// Surprisal table −ln p(x|y), row-major; `None` on zero cells.
    pub fn surprisal_table(&self) -> Vec<Option<f64>> {
        (0..self.nx)
            .flat_map(|x| (0..self.ny).map(move |y| (x, y)))
            .map(|(x, y)| (self.p(x, y) > 0.0).then(|| -self.p_x_given_y(x, y).ln()))
            .collect()
    }
}

/// Empirical composition of a length-n sequence over 𝒳.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeVector {
    counts: Vec<u64>,
}

impl TypeVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidType("empty alphabet".into()));
        }
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::InvalidType("block length must be positive".into()));
        }
        Ok(Self { counts })
    }

    /// Type of `seq` over an alphabet of size `k`.
    pub fn of_sequence(seq: &[usize], k: usize) -> Result<Self> {
        let mut counts = vec![0u64; k];
        for &s in seq {
            if s >= k {
                return Err(Error::SymbolOutOfRange { symbol: s, size: k });
            }
            counts[s] += 1;
        }
        Self::new(counts)
    }

    /// Rounds `dist` to the nearest type at block length `n` (largest remainder).
    pub fn rounded(dist: &[f64], n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidType("block length must be positive".into()));
        }
        let scaled: Vec<f64> = dist.iter().map(|p| p * n as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|v| v.floor() as u64).collect();
        let mut rest = n.saturating_sub(counts.iter().sum::<u64>());
        let mut order: Vec<usize> = (0..dist.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            counts[i] += 1;
            rest -= 1;
        }
        Self::new(counts)
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    pub fn probs(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.counts.iter().all(|&c| c > 0)
    }
}

/// First- and second-order quantities of a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoSummary {
    pub h_xy_cond: f64,
    pub h_x: f64,
    pub i_xy: f64,
    pub sigma2_h: f64,
    pub sigma2_d: f64,
}

/// H(X|Y) = Σ p(x,y)(−ln p(x|y)).
pub fn conditional_entropy(src: &JointSource) -> f64 {
    let terms = (0..src.nx()).flat_map(|x| (0..src.ny()).map(move |y| (x, y)));
    let h = kahan_sum(
        terms
            .filter(|&(x, y)| src.p(x, y) > 0.0)
            .map(|(x, y)| -src.p(x, y) * src.p_x_given_y(x, y).ln()),
    );
    h.max(0.0)
}

/// σ²_H(X|Y): variance of the conditional surprisal −ln p(X|Y).
pub fn sigma2_h(src: &JointSource) -> f64 {
    let h = conditional_entropy(src);
    let second = kahan_sum(
        (0..src.nx())
            .flat_map(|x| (0..src.ny()).map(move |y| (x, y)))
            .filter(|&(x, y)| src.p(x, y) > 0.0)
            .map(|(x, y)| {
                let s = src.p_x_given_y(x, y).ln();
                src.p(x, y) * s * s
            }),
    );
    (second - h * h).max(0.0)
}

/// Shannon entropy of a distribution.
pub fn entropy(dist: &[f64]) -> f64 {
    -kahan_sum(dist.iter().map(|&p| xlnx(p)))
}

/// H(t) of a type.
pub fn entropy_of_type(t: &TypeVector) -> f64 {
    entropy(&t.probs())
}

/// H(X).
pub fn entropy_x(src: &JointSource) -> f64 {
    entropy(src.marginal_x())
}

/// I(X;Y) from the joint pmf: Σ p(x,y) ln(p(x,y)/(p(x)p(y))).
pub fn mutual_information(src: &JointSource) -> f64 {
    let px = src.marginal_x();
    let py = src.marginal_y();
    kahan_sum(
        (0..src.nx())
            .flat_map(|x| (0..src.ny()).map(move |y| (x, y)))
            .filter(|&(x, y)| src.p(x, y) > 0.0)
            .map(|(x, y)| src.p(x, y) * (src.p(x, y) / (px[x] * py[y])).ln()),
    )
    .max(0.0)
}

fn check_dist(src: &JointSource, t: &[f64]) {
    assert_eq!(
        t.len(),
        src.nx(),
        "distribution over X has {} entries, source has |X| = {}",
        t.len(),
        src.nx()
    );
}

/// q_t(y) = Σ_x t(x) p(y|x).
pub fn q_t(src: &JointSource, t: &[f64]) -> Vec<f64> {
    check_dist(src, t);
    (0..src.ny())
        .map(|y| kahan_sum((0..src.nx()).map(|x| t[x] * src.p_y_given_x(x, y))))
        .collect()
}

/// Information density ln(p(y|x)/q_t(y)) for every cell with p(y|x) > 0;
/// `None` elsewhere. Row-major.
pub(crate) fn density_table(src: &JointSource, q: &[f64]) -> Vec<Option<f64>> {
    (0..src.nx())
        .flat_map(|x| (0..src.ny()).map(move |y| (x, y)))
        .map(|(x, y)| {
            let p = src.p_y_given_x(x, y);
            (p > 0.0).then(|| (p / q[y]).ln())
        })
        .collect()
}

/// I(t;P) = Σ_x t(x) Σ_y p(y|x) ln(p(y|x)/q_t(y)).
pub fn mutual_info_t(src: &JointSource, t: &[f64]) -> f64 {
    let q = q_t(src, t);
    let dens = density_table(src, &q);
    let ny = src.ny();
    kahan_sum((0..src.nx()).filter(|&x| t[x] > 0.0).flat_map(|x| {
        let dens = &dens;
        (0..ny).filter_map(move |y| dens[x * ny + y].map(|d| t[x] * src.p_y_given_x(x, y) * d))
    }))
    .max(0.0)
}

/// σ²_D(t;P) = Σ_x t(x) Var_{p(·|x)}[ln(p(Y|x)/q_t(Y))].
///
/// The inner variance is taken under p(·|x) (both moments weighted).
pub fn sigma2_d(src: &JointSource, t: &[f64]) -> f64 {
    let q = q_t(src, t);
    let dens = density_table(src, &q);
    let ny = src.ny();
    let per_x = (0..src.nx()).filter(|&x| t[x] > 0.0).map(|x| {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for y in 0..ny {
            if let Some(d) = dens[x * ny + y] {
                let p = src.p_y_given_x(x, y);
                m1 += p * d;
                m2 += p * d * d;
            }
        }
        t[x] * (m2 - m1 * m1).max(0.0)
    });
    kahan_sum(per_x).max(0.0)
}

/// F(t) = H(t∘P_{Y|X}) − H((t∘P_{Y|X})_𝒴).
pub fn f_of_t(src: &JointSource, t: &[f64]) -> f64 {
    check_dist(src, t);
    let joint: Vec<f64> = (0..src.nx())
        .flat_map(|x| (0..src.ny()).map(move |y| (x, y)))
        .map(|(x, y)| t[x] * src.p_y_given_x(x, y))
        .collect();
    entropy(&joint) - entropy(&q_t(src, t))
}

pub fn info_summary(src: &JointSource) -> InfoSummary {
    InfoSummary {
        h_xy_cond: conditional_entropy(src),
        h_x: entropy_x(src),
        i_xy: mutual_information(src),
        sigma2_h: sigma2_h(src),
        sigma2_d: sigma2_d(src, src.marginal_x()),
    }
}
