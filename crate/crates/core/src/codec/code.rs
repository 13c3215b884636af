//! Code descriptions, codewords and the encode/decode maps.

use super::prf::{bin_from_hash, bin_index, low_word, prf_hash};
use super::seq::{check_sequence, rank_in_type, scan_size, seq_from_index, unrank_in_type};
use crate::composition::JarSpec;
use crate::error::{Error, Result};
use crate::source::{JointSource, TypeVector};
use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

/// Fixed-rate binning or type-indexed variable-rate binning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fixed,
    Variable,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::Variable => "variable",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Mode::Fixed),
            "variable" => Ok(Mode::Variable),
            other => Err(Error::InvalidParameter(format!("unknown mode '{other}'"))),
        }
    }
}

/// How sequences of one type are described in the variable-rate code.
#[derive(Debug, Clone)]
pub struct TypeBinning {
    pub t: TypeVector,
    /// Pr{τ(Xⁿ) = t}.
    pub probability: f64,
    /// Inside Γ_X: binned and jar-decoded. Outside: indexed losslessly.
    pub in_gamma: bool,
    pub delta_n: Option<f64>,
    /// R(t) before rounding the bin count.
    pub rate: Option<f64>,
    /// M(t) when binned, |T(t)| when lossless.
    pub payload_count: BigUint,
    pub ln_payload_count: f64,
    pub payload_bits: u64,
    pub(crate) jar: Option<JarSpec>,
}

impl TypeBinning {
    pub fn jar(&self) -> Option<&JarSpec> {
        self.jar.as_ref()
    }
}

#[derive(Debug, Clone)]
pub enum Layout {
    Fixed {
        delta_n: f64,
        /// R = H(X|Y) + δ_n + κ₄(−ln ε)/n before rounding.
        rate: f64,
        bins: BigUint,
        ln_bins: f64,
        payload_bits: u64,
        jar: JarSpec,
    },
    Variable {
        c0: f64,
        /// c₀√(ln n / n), the L1 radius of Γ_X.
        gamma_radius: f64,
        type_count: BigUint,
        ln_type_count: f64,
        type_bits: u64,
        /// One entry per type, in lexicographic type order.
        classes: Vec<TypeBinning>,
    },
}

/// A constructed code. Immutable after construction; the decoder index is
/// built on first use.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub source: JointSource,
    pub n: usize,
    pub eps: f64,
    /// (κ₃, κ₄) for fixed codes, (κ₁, κ₂) for variable codes.
    pub kappa: [f64; 2],
    pub seed: u64,
    /// ln M / n (fixed) or E[idealized length]/n over the type law (variable).
    pub rate_nats: f64,
    pub layout: Layout,
    pub(crate) type_lookup: HashMap<Vec<u64>, usize>,
    pub(crate) scan: OnceLock<std::result::Result<Arc<ScanIndex>, Error>>,
}

/// Serializable overview of a code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeSummary {
    pub mode: Mode,
    pub n: usize,
    pub eps: f64,
    pub kappa: [f64; 2],
    pub c0: Option<f64>,
    pub seed: u64,
    /// δ_n (fixed) or δ_n(t) at the type nearest P_X (variable).
    pub delta_n: f64,
    /// ln M (fixed) or ln M(t) at the type nearest P_X (variable).
    pub ln_bins: f64,
    pub rate_nats: f64,
    pub types_in_gamma: Option<usize>,
}

impl CodeSpec {
    pub fn mode(&self) -> Mode {
        match self.layout {
            Layout::Fixed { .. } => Mode::Fixed,
            Layout::Variable { .. } => Mode::Variable,
        }
    }

    pub fn classes(&self) -> &[TypeBinning] {
        match &self.layout {
            Layout::Variable { classes, .. } => classes,
            Layout::Fixed { .. } => &[],
        }
    }

    /// Index of a type in the lexicographic type list (variable codes).
    pub fn type_index(&self, t: &TypeVector) -> Option<usize> {
        self.type_lookup.get(t.counts()).copied()
    }

    /// Jar the decoder would search for a sequence of type `t`.
    pub fn jar_for(&self, t: &TypeVector) -> Option<&JarSpec> {
        match &self.layout {
            Layout::Fixed { jar, .. } => Some(jar),
            Layout::Variable { classes, .. } => self.type_index(t).and_then(|i| classes[i].jar.as_ref()),
        }
    }

    pub fn summary(&self) -> CodeSummary {
        match &self.layout {
            Layout::Fixed { delta_n, ln_bins, .. } => CodeSummary {
                mode: Mode::Fixed,
                n: self.n,
                eps: self.eps,
                kappa: self.kappa,
                c0: None,
                seed: self.seed,
                delta_n: *delta_n,
                ln_bins: *ln_bins,
                rate_nats: self.rate_nats,
                types_in_gamma: None,
            },
            Layout::Variable { c0, classes, .. } => {
                let center = TypeVector::rounded(self.source.marginal_x(), self.n as u64).expect("n >= 1");
                let c = &classes[self.type_index(&center).expect("every type is listed")];
                CodeSummary {
                    mode: Mode::Variable,
                    n: self.n,
                    eps: self.eps,
                    kappa: self.kappa,
                    c0: Some(*c0),
                    seed: self.seed,
                    delta_n: c.delta_n.unwrap_or(f64::NAN),
                    ln_bins: c.ln_payload_count,
                    rate_nats: self.rate_nats,
                    types_in_gamma: Some(classes.iter().filter(|c| c.in_gamma).count()),
                }
            }
        }
    }

    fn check_input(&self, x: &[usize]) -> Result<()> {
        check_sequence(x, self.n, self.source.nx())
    }

    fn check_side_info(&self, y: &[usize]) -> Result<()> {
        check_sequence(y, self.n, self.source.ny())
    }

    /// Bin count that applies to sequences of this type; `None` when the type
    /// is coded losslessly.
    fn bins_for(&self, t: &TypeVector) -> Option<&BigUint> {
        match &self.layout {
            Layout::Fixed { bins, .. } => Some(bins),
            Layout::Variable { classes, .. } => {
                let c = &classes[self.type_index(t)?];
                c.in_gamma.then_some(&c.payload_count)
            }
        }
    }

    pub(crate) fn scan_index(&self) -> Result<Arc<ScanIndex>> {
        self.scan.get_or_init(|| ScanIndex::build(self).map(Arc::new)).clone()
    }
}

/// A transmitted description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Codeword {
    pub mode: Mode,
    pub type_index: Option<u64>,
    /// Bin index, or in-type rank on the lossless branch.
    pub payload: BigUint,
    /// ln(type count) (variable) + ln(payload space).
    pub idealized_length_nats: f64,
    pub realized_length_bits: u64,
}

/// Encodes with whichever family the code belongs to.
pub fn encode(spec: &CodeSpec, x: &[usize]) -> Result<Codeword> {
    match spec.mode() {
        Mode::Fixed => encode_fixed(spec, x),
        Mode::Variable => encode_variable(spec, x),
    }
}

/// Fixed-rate encoder: the PRF bin of `x`.
pub fn encode_fixed(spec: &CodeSpec, x: &[usize]) -> Result<Codeword> {
    let Layout::Fixed {
        bins,
        ln_bins,
        payload_bits,
        ..
    } = &spec.layout
    else {
        return Err(Error::InvalidParameter(
            "fixed-rate encoder needs a fixed-rate code".into(),
        ));
    };
    spec.check_input(x)?;
    Ok(Codeword {
        mode: Mode::Fixed,
        type_index: None,
        payload: bin_index(spec.seed, x, bins),
        idealized_length_nats: *ln_bins,
        realized_length_bits: *payload_bits,
    })
}

/// Variable-rate encoder: type index, then the bin within the type class or
/// the in-type rank outside Γ_X.
pub fn encode_variable(spec: &CodeSpec, x: &[usize]) -> Result<Codeword> {
    let Layout::Variable {
        classes,
        ln_type_count,
        type_bits,
        ..
    } = &spec.layout
    else {
        return Err(Error::InvalidParameter(
            "variable-rate encoder needs a variable-rate code".into(),
        ));
    };
    spec.check_input(x)?;
    let t = TypeVector::of_sequence(x, spec.source.nx())?;
    let idx = spec.type_index(&t).expect("every type is listed");
    let class = &classes[idx];
    let payload = if class.in_gamma {
        bin_index(spec.seed, x, &class.payload_count)
    } else {
        rank_in_type(x, spec.source.nx())
    };
    Ok(Codeword {
        mode: Mode::Variable,
        type_index: Some(idx as u64),
        payload,
        idealized_length_nats: ln_type_count + class.ln_payload_count,
        realized_length_bits: type_bits + class.payload_bits,
    })
}

/// Decodes with whichever family the code belongs to.
pub fn decode(spec: &CodeSpec, cw: &Codeword, y: &[usize]) -> Result<Vec<usize>> {
    match spec.mode() {
        Mode::Fixed => decode_fixed(spec, &cw.payload, y),
        Mode::Variable => decode_variable(spec, cw, y),
    }
}

/// Lexicographically smallest member of the conditional-entropy jar around
/// `y` whose bin is `bin`.
pub fn decode_fixed(spec: &CodeSpec, bin: &BigUint, y: &[usize]) -> Result<Vec<usize>> {
    let Layout::Fixed { bins, jar, .. } = &spec.layout else {
        return Err(Error::InvalidParameter(
            "fixed-rate decoder needs a fixed-rate code".into(),
        ));
    };
    if bin >= bins {
        return Err(Error::MalformedCodeword(format!("bin {bin} >= bin count {bins}")));
    }
    spec.check_side_info(y)?;
    spec.scan_index()?.search(spec, 0, bin, bins, jar, y)
}

/// Variable-rate decoder: recover t, then either unrank or search
/// J_t(yⁿ) ∩ bin.
pub fn decode_variable(spec: &CodeSpec, cw: &Codeword, y: &[usize]) -> Result<Vec<usize>> {
    let Layout::Variable { classes, .. } = &spec.layout else {
        return Err(Error::InvalidParameter(
            "variable-rate decoder needs a variable-rate code".into(),
        ));
    };
    let idx = cw
        .type_index
        .ok_or_else(|| Error::MalformedCodeword("missing type index".into()))? as usize;
    let class = classes
        .get(idx)
        .ok_or_else(|| Error::MalformedCodeword(format!("type index {idx} out of range")))?;
    if cw.payload >= class.payload_count {
        return Err(Error::MalformedCodeword(format!(
            "payload {} >= {}",
            cw.payload, class.payload_count
        )));
    }
    spec.check_side_info(y)?;
    if !class.in_gamma {
        return unrank_in_type(&class.t, &cw.payload);
    }
    let jar = class.jar.as_ref().expect("binned types carry a jar");
    spec.scan_index()?
        .search(spec, idx as u32, &cw.payload, &class.payload_count, jar, y)
}

/// Every sequence of the space keyed by (type slot, low bits of its bin),
/// so a decoder touches only one bin's members, in lexicographic order.
#[derive(Debug)]
pub(crate) struct ScanIndex {
    entries: Vec<(u32, u64, u32)>,
}

impl ScanIndex {
    fn build(spec: &CodeSpec) -> Result<Self> {
        let k = spec.source.nx();
        let size = scan_size(k, spec.n)?;
        let mut entries: Vec<(u32, u64, u32)> = (0..size)
            .into_par_iter()
            .filter_map(|i| {
                let x = seq_from_index(i, k, spec.n);
                let (slot, bins) = match &spec.layout {
                    Layout::Fixed { bins, .. } => (0u32, bins),
                    Layout::Variable { .. } => {
                        let t = TypeVector::of_sequence(&x, k).expect("valid sequence");
                        let bins = spec.bins_for(&t)?;
                        (spec.type_index(&t).expect("listed") as u32, bins)
                    }
                };
                let bin = bin_from_hash(prf_hash(spec.seed, &x), bins);
                Some((slot, low_word(&bin), i as u32))
            })
            .collect();
        entries.par_sort_unstable();
        Ok(Self { entries })
    }

    fn search(
        &self,
        spec: &CodeSpec,
        slot: u32,
        bin: &BigUint,
        bins: &BigUint,
        jar: &JarSpec,
        y: &[usize],
    ) -> Result<Vec<usize>> {
        let key = low_word(bin);
        let start = self.entries.partition_point(|e| (e.0, e.1) < (slot, key));
        let wide = bins.bits() > 64;
        for &(s, kw, i) in &self.entries[start..] {
            if (s, kw) != (slot, key) {
                break;
            }
            let x = seq_from_index(i as u64, spec.source.nx(), spec.n);
            if wide && bin_index(spec.seed, &x, bins) != *bin {
                continue;
            }
            if jar.contains(&x, y) {
                return Ok(x);
            }
        }
        Err(Error::DecodeFailure)
    }
}

/// Big-endian bit packing: type field (variable codes), then payload field,
/// each with the fixed width of its count. The last byte is zero-padded.
pub fn pack_codeword(spec: &CodeSpec, cw: &Codeword) -> Result<(Vec<u8>, u64)> {
    let mut w = BitWriter::default();
    match &spec.layout {
        Layout::Fixed { payload_bits, bins, .. } => {
            if cw.payload >= *bins {
                return Err(Error::MalformedCodeword("payload exceeds bin count".into()));
            }
            w.push(&cw.payload, *payload_bits);
        }
        Layout::Variable { type_bits, classes, .. } => {
            let idx = cw
                .type_index
                .ok_or_else(|| Error::MalformedCodeword("missing type index".into()))?;
            let class = classes
                .get(idx as usize)
                .ok_or_else(|| Error::MalformedCodeword("type index out of range".into()))?;
            if cw.payload >= class.payload_count {
                return Err(Error::MalformedCodeword("payload exceeds class count".into()));
            }
            w.push(&BigUint::from(idx), *type_bits);
            w.push(&cw.payload, class.payload_bits);
        }
    }
    Ok((w.bytes, w.len))
}

/// Inverse of [`pack_codeword`]; reads exactly one codeword from the front.
pub fn unpack_codeword(spec: &CodeSpec, bytes: &[u8]) -> Result<Codeword> {
    let mut r = BitReader { bytes, pos: 0 };
    match &spec.layout {
        Layout::Fixed {
            payload_bits,
            bins,
            ln_bins,
            ..
        } => {
            let payload = r.take(*payload_bits)?;
            if payload >= *bins {
                return Err(Error::MalformedCodeword("bin index out of range".into()));
            }
            Ok(Codeword {
                mode: Mode::Fixed,
                type_index: None,
                payload,
                idealized_length_nats: *ln_bins,
                realized_length_bits: *payload_bits,
            })
        }
        Layout::Variable {
            type_bits,
            classes,
            ln_type_count,
            ..
        } => {
            let idx = r.take(*type_bits)?;
            let idx = usize::try_from(&idx).ok().filter(|&i| i < classes.len());
            let idx = idx.ok_or_else(|| Error::MalformedCodeword("type index out of range".into()))?;
            let class = &classes[idx];
            let payload = r.take(class.payload_bits)?;
            if payload >= class.payload_count {
                return Err(Error::MalformedCodeword("payload out of range".into()));
            }
            Ok(Codeword {
                mode: Mode::Variable,
                type_index: Some(idx as u64),
                payload,
                idealized_length_nats: ln_type_count + class.ln_payload_count,
                realized_length_bits: type_bits + class.payload_bits,
            })
        }
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    fn push(&mut self, v: &BigUint, width: u64) {
        for i in (0..width).rev() {
            if self.len % 8 == 0 {
                self.bytes.push(0);
            }
            if v.bit(i) {
                *self.bytes.last_mut().expect("pushed") |= 0x80 >> (self.len % 8);
            }
            self.len += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl BitReader<'_> {
    fn take(&mut self, width: u64) -> Result<BigUint> {
        let mut v = BigUint::ZERO;
        for _ in 0..width {
            let byte = self
                .bytes
                .get((self.pos / 8) as usize)
                .ok_or_else(|| Error::MalformedCodeword("truncated codeword".into()))?;
            v <<= 1u32;
            if byte & (0x80 >> (self.pos % 8)) != 0 {
                v |= BigUint::from(1u32);
            }
            self.pos += 1;
        }
        Ok(v)
    }
}
