//! Finite-blocklength analysis of Slepian-Wolf coding with decoder side
//! information.
//!
//! The crate covers the whole pipeline for a discrete memoryless source pair
//! (X, Y) where only X is encoded and Y is available at the decoder:
//!
//! - [`source`]: joint sources, entropies, dispersions σ²_H and σ²_D.
//! - [`rate`]: large-deviation rate functions of the conditional surprisal and
//!   of the information density, tilted moments and the exact-exponent
//!   prefactor.
//! - [`composition`]: exact method-of-types enumeration; tail probabilities and
//!   jar sizes used as oracles throughout.
//! - [`codec`]: seeded random-binning codes, fixed-rate and type-indexed
//!   variable-rate, with jar decoding.
//! - [`evaluation`]: Monte Carlo and semi-analytic error measurement,
//!   achievability/converse/normal-approximation curves, CSV sweeps.
//!
//! Everything is measured in nats.

pub mod codec;
pub mod composition;
pub mod error;
pub mod evaluation;
pub mod gaussian;
pub mod numeric;
pub mod rate;
pub mod rng;
pub mod source;

pub use error::{Error, Result};
pub use source::{JointSource, TypeVector};
