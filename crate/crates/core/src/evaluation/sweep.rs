//! Cross-product sweeps of curves and measured points, written as CSV.

use super::bounds::{achievability_bound, converse_bound, normal_approximation, BoundCurvePoint};
use super::measure::monte_carlo_error;
use crate::codec::{build_fixed_code, build_variable_code, calibrate_kappas, Mode};
use crate::error::{Error, Result};
use crate::numeric::fmt_sig12;
use crate::source::JointSource;
use serde::Serialize;
use std::fmt::Write as _;
use std::str::FromStr;

pub const CSV_HEADER: &str = "source_id,mode,n,eps,bound_kind,rate_nats,term_leading,term_dispersion,term_correction,p_e_hat,p_e_ci_lo,p_e_ci_hi,jar_miss,collision,trials,seed";

/// Which rows a sweep emits for each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Achievability,
    NormalApprox,
    /// A calibrated code run through Monte Carlo.
    Measured,
    Converse,
}

impl CurveKind {
    pub const ALL: [CurveKind; 4] = [
        CurveKind::Achievability,
        CurveKind::NormalApprox,
        CurveKind::Measured,
        CurveKind::Converse,
    ];
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "achievability" => Ok(CurveKind::Achievability),
            "normal-approx" => Ok(CurveKind::NormalApprox),
            "measured" => Ok(CurveKind::Measured),
            "converse" => Ok(CurveKind::Converse),
            other => Err(Error::InvalidParameter(format!("unknown curve kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub source_id: String,
    pub ns: Vec<usize>,
    pub eps: Vec<f64>,
    pub modes: Vec<Mode>,
    pub kinds: Vec<CurveKind>,
    /// Monte Carlo trials per measured point; 0 disables measured rows.
    pub trials: u64,
    pub seed: u64,
    pub budget: u64,
}

/// One CSV row. Fields that do not apply to the row's kind are `None` and
/// print empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub source_id: String,
    pub mode: Mode,
    pub n: usize,
    pub eps: f64,
    pub bound_kind: String,
    pub rate_nats: f64,
    pub term_leading: Option<f64>,
    pub term_dispersion: Option<f64>,
    pub term_correction: Option<f64>,
    pub p_e_hat: Option<f64>,
    pub p_e_ci_lo: Option<f64>,
    pub p_e_ci_hi: Option<f64>,
    pub jar_miss: Option<f64>,
    pub collision: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl SweepRow {
    pub fn from_curve(source_id: &str, p: &BoundCurvePoint) -> Self {
        Self {
            source_id: source_id.to_string(),
            mode: p.mode,
            n: p.n,
            eps: p.eps,
            bound_kind: p.bound_kind.as_str().to_string(),
            rate_nats: p.rate_nats,
            term_leading: Some(p.leading()),
            term_dispersion: Some(p.dispersion()),
            term_correction: Some(p.correction()),
            p_e_hat: None,
            p_e_ci_lo: None,
            p_e_ci_hi: None,
            jar_miss: None,
            collision: None,
            trials: None,
            seed: None,
        }
    }

    pub fn to_csv_line(&self) -> String {
        let f = |v: Option<f64>| v.map(fmt_sig12).unwrap_or_default();
        let u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.source_id.clone(),
            self.mode.to_string(),
            self.n.to_string(),
            fmt_sig12(self.eps),
            self.bound_kind.clone(),
            fmt_sig12(self.rate_nats),
            f(self.term_leading),
            f(self.term_dispersion),
            f(self.term_correction),
            f(self.p_e_hat),
            f(self.p_e_ci_lo),
            f(self.p_e_ci_hi),
            f(self.jar_miss),
            f(self.collision),
            u(self.trials),
            u(self.seed),
        ]
        .join(",")
    }
}

/// Header plus one newline-terminated line per row.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.to_csv_line());
    }
    out
}

/// Calibrates a code at (n, ε) and measures it. `None` when the code cannot
/// be calibrated or decoded within the budgets.
fn measured_row(src: &JointSource, cfg: &SweepConfig, mode: Mode, n: usize, eps: f64) -> Result<Option<SweepRow>> {
    let attempt = || -> Result<SweepRow> {
        let cal = calibrate_kappas(src, n, eps, mode, cfg.budget)?;
        let spec = match mode {
            Mode::Fixed => build_fixed_code(src, n, eps, cal.kappa[0], cal.kappa[1], cfg.seed)?,
            Mode::Variable => {
                build_variable_code(src, n, eps, cal.kappa[0], cal.kappa[1], cal.c0, cfg.seed, cfg.budget)?
            }
        };
        let r = monte_carlo_error(src, &spec, cfg.trials, cfg.seed)?;
        Ok(SweepRow {
            source_id: cfg.source_id.clone(),
            mode,
            n,
            eps,
            bound_kind: format!("measured-{mode}"),
            rate_nats: r.measured_rate_nats,
            term_leading: None,
            term_dispersion: None,
            term_correction: None,
            p_e_hat: Some(r.p_e_hat),
            p_e_ci_lo: Some(r.p_e_ci_lo),
            p_e_ci_hi: Some(r.p_e_ci_hi),
            jar_miss: Some(r.jar_miss),
            collision: Some(r.collision),
            trials: Some(r.trials),
            seed: Some(r.master_seed),
        })
    };
    match attempt() {
        Ok(row) => Ok(Some(row)),
        Err(Error::BudgetExceeded { .. } | Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Rows in a fixed order: for each mode, each n, each ε the selected
/// achievability, normal-approximation and measured rows, then one converse
/// row per (mode, n) at the schedule ε_n. An empty ε list yields no rows.
/// Converse rows need n ≥ 3 and are omitted below that.
pub fn sweep(src: &JointSource, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    for &eps in &cfg.eps {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidEps(eps));
        }
    }
    if let Some(&n) = cfg.ns.iter().find(|&&n| n == 0) {
        return Err(Error::InvalidParameter(format!("block length must be >= 1, got {n}")));
    }
    let wants = |k: CurveKind| cfg.kinds.contains(&k);
    let mut rows = Vec::new();
    if cfg.eps.is_empty() {
        return Ok(rows);
    }
    for &mode in &cfg.modes {
        for &n in &cfg.ns {
            for &eps in &cfg.eps {
                if wants(CurveKind::Achievability) {
                    rows.push(SweepRow::from_curve(
                        &cfg.source_id,
                        &achievability_bound(src, n, eps, mode)?,
                    ));
                }
                if wants(CurveKind::NormalApprox) {
                    rows.push(SweepRow::from_curve(
                        &cfg.source_id,
                        &normal_approximation(src, n, eps, mode)?,
                    ));
                }
                if wants(CurveKind::Measured) && cfg.trials > 0 {
                    rows.extend(measured_row(src, cfg, mode, n, eps)?);
                }
            }
            if wants(CurveKind::Converse) && n >= 3 {
                rows.push(SweepRow::from_curve(
                    &cfg.source_id,
                    &converse_bound(src, n, mode, cfg.budget)?,
                ));
            }
        }
    }
    Ok(rows)
}
