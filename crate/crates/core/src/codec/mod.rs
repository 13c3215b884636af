//! Random-binning Slepian-Wolf codes with jar decoding.
//!
//! Two families share one machinery: a fixed-rate code that bins every
//! sequence into M = ⌈e^{nR}⌉ bins and decodes inside a conditional-entropy
//! jar, and a variable-rate code that first sends the type of xⁿ, bins types
//! near P_X into M(t) bins decoded inside a mutual-information jar, and
//! indexes all other types losslessly.

mod build;
mod calibrate;
mod code;
mod prf;
mod seq;

pub use build::{build_fixed_code, build_variable_code, gamma_radius, jar_half_width};
pub use calibrate::{
    calibrate_c0, calibrate_kappas, calibrate_kappas_with_c0, collision_probability, ErrorModel, ErrorTerms,
    KappaCalibration,
};
pub use code::{
    decode, decode_fixed, decode_variable, encode, encode_fixed, encode_variable, pack_codeword, unpack_codeword,
    CodeSpec, CodeSummary, Codeword, Layout, Mode, TypeBinning,
};
pub use prf::{bin_from_hash, bin_index, ceil_exp, field_width, prf_hash};
pub use seq::{rank_in_type, scan_size, seq_from_index, seq_index, unrank_in_type, MAX_SCAN};
