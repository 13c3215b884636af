use crate::args::{Common, Format};
use anyhow::{Context, Result};
use serde::Serialize;
use std::io::Write;
use swcoding::numeric::fmt_sig12;
use swcoding::Error;

/// A flag combination the library never sees.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidEps(_)
            | Error::InvalidParameter(_)
            | Error::InvalidType(_)
            | Error::NegativeDelta(_)
            | Error::LengthMismatch { .. }
            | Error::SymbolOutOfRange { .. },
        ) => 2,
        Some(Error::BudgetExceeded { .. }) => 3,
        Some(
            Error::HypothesisViolated(_)
            | Error::ZeroVariance
            | Error::ZeroMutualInfo
            | Error::InvalidRegime(_)
            | Error::TypeNotFullSupport,
        ) => 4,
        _ => 1,
    }
}

/// Writes the rendered output to `--out` or stdout.
pub fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Scale for rate-valued outputs: 1 in nats, 1/ln 2 in bits.
pub fn unit_scale(common: &Common) -> f64 {
    if common.bits {
        std::f64::consts::LOG2_E
    } else {
        1.0
    }
}

pub fn unit_name(common: &Common) -> &'static str {
    if common.bits {
        "bits"
    } else {
        "nats"
    }
}

pub fn num(x: f64) -> String {
    fmt_sig12(x)
}

pub fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig12).unwrap_or_default()
}

/// CSV text from a header and rows of already formatted fields.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn render<T: Serialize + ?Sized>(
    common: &Common,
    value: &T,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<String> {
    match common.format {
        Format::Json => json(value),
        Format::Csv => Ok(csv(header, rows)),
    }
}
