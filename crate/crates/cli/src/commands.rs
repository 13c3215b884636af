use crate::args::*;
use crate::output::{emit, json, num, opt, render, unit_name, unit_scale, UsageError};
use anyhow::Result;
use serde::Serialize;
use swcoding::codec::{
    build_fixed_code, build_variable_code, calibrate_kappas, calibrate_kappas_with_c0, CodeSpec, KappaCalibration, Mode,
};
use swcoding::composition::{exact_tail_cond_entropy, exact_tail_mutual_info};
use swcoding::evaluation::{
    monte_carlo_error, semi_analytic_error, sweep, to_csv, CurveKind, EvaluationReport, Sampling, SweepConfig, SweepRow,
};
use swcoding::rate::{
    rate_cond_entropy, rate_mutual_info, tilted_stats, xi_lower_prefactor, RateFunctionPoint, RateValue,
};
use swcoding::source::info_summary;
use swcoding::{JointSource, TypeVector};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Info(a) => info(a),
        Command::Ratefn(a) => ratefn(a),
        Command::Tail(a) => tail(a),
        Command::Bounds(a) => bounds(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Calibrate(a) => calibrate(a),
    }
}

fn load(common: &Common) -> Result<JointSource> {
    Ok(JointSource::load(&common.source)?)
}

fn source_id(common: &Common) -> String {
    common
        .source
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "source".into())
}

fn info(a: &InfoArgs) -> Result<()> {
    let src = load(&a.common)?;
    let s = info_summary(&src);
    let l2 = std::f64::consts::LN_2;
    let table = [
        ("H(X|Y)", s.h_xy_cond, s.h_xy_cond / l2),
        ("H(X)", s.h_x, s.h_x / l2),
        ("I(X;Y)", s.i_xy, s.i_xy / l2),
        ("sigma2_H", s.sigma2_h, s.sigma2_h / (l2 * l2)),
        ("sigma2_D", s.sigma2_d, s.sigma2_d / (l2 * l2)),
    ];
    #[derive(Serialize)]
    struct Out {
        nats: swcoding::source::InfoSummary,
        bits: swcoding::source::InfoSummary,
    }
    let bits = swcoding::source::InfoSummary {
        h_xy_cond: table[0].2,
        h_x: table[1].2,
        i_xy: table[2].2,
        sigma2_h: table[3].2,
        sigma2_d: table[4].2,
    };
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|(k, n, b)| vec![k.to_string(), num(*n), num(*b)])
        .collect();
    let text = render(&a.common, &Out { nats: s, bits }, &["quantity", "nats", "bits"], &rows)?;
    emit(&a.common, &text)
}

fn rate_cell(v: RateValue, scale: f64) -> String {
    match v {
        RateValue::Finite(r) => num(r * scale),
        RateValue::Unbounded => "inf".into(),
    }
}

fn parse_type(counts: &[u64], src: &JointSource) -> Result<TypeVector> {
    let t = TypeVector::new(counts.to_vec())?;
    if t.alphabet_size() != src.nx() {
        return Err(UsageError(format!(
            "--type has {} counts but |X| = {}",
            t.alphabet_size(),
            src.nx()
        ))
        .into());
    }
    Ok(t)
}

#[derive(Serialize)]
struct RateRow {
    kind: &'static str,
    #[serde(flatten)]
    point: RateFunctionPoint,
}

fn ratefn(a: &RatefnArgs) -> Result<()> {
    let src = load(&a.common)?;
    let t = a.type_counts.as_deref().map(|c| parse_type(c, &src)).transpose()?;
    let scale = unit_scale(&a.common);
    let mut points = Vec::new();
    for &delta in &a.delta {
        points.push(RateRow {
            kind: "conditional-entropy",
            point: rate_cond_entropy(&src, delta)?,
        });
        if let Some(t) = &t {
            points.push(RateRow {
                kind: "information-density",
                point: rate_mutual_info(&src, &t.probs(), delta)?,
            });
        }
    }
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|r| {
            vec![
                r.kind.to_string(),
                num(r.point.delta),
                num(r.point.lambda_star),
                rate_cell(r.point.value, scale),
                num(r.point.curvature),
            ]
        })
        .collect();
    let rate_col = format!("rate_{}", unit_name(&a.common));
    let text = render(
        &a.common,
        &points,
        &["kind", "delta", "lambda_star", &rate_col, "curvature"],
        &rows,
    )?;
    emit(&a.common, &text)
}

#[derive(Serialize)]
struct TailRow {
    kind: &'static str,
    n: usize,
    delta: f64,
    exact: f64,
    upper_bound: f64,
    lower_bound: Option<f64>,
}

/// ξ e^{−n r_−} where the prefactor is defined.
fn density_lower_bound(src: &JointSource, t: &TypeVector, n: usize, point: &RateFunctionPoint) -> Option<f64> {
    let RateValue::Finite(r) = point.value else { return None };
    let lambda = point.lambda_star;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return None;
    }
    let stats = tilted_stats(src, &t.probs(), lambda).ok()?;
    let xi = xi_lower_prefactor(&stats, n as u64, lambda).ok()?;
    Some(xi * (-(n as f64) * r).exp())
}

fn tail(a: &TailArgs) -> Result<()> {
    let src = load(&a.common)?;
    let t = a.type_counts.as_deref().map(|c| parse_type(c, &src)).transpose()?;
    let mut out = Vec::new();
    for &n in &a.n {
        if n == 0 {
            return Err(UsageError("--n must be >= 1".into()).into());
        }
        for &delta in &a.delta {
            let rate = rate_cond_entropy(&src, delta)?;
            out.push(TailRow {
                kind: "conditional-entropy",
                n,
                delta,
                exact: exact_tail_cond_entropy(&src, n as u64, delta, a.common.budget)?,
                upper_bound: rate.value.chernoff_bound(n as u64),
                lower_bound: None,
            });
            if let Some(t) = &t {
                if t.n() != n as u64 {
                    return Err(UsageError(format!("--type sums to {} but --n is {n}", t.n())).into());
                }
                let rate = rate_mutual_info(&src, &t.probs(), delta)?;
                out.push(TailRow {
                    kind: "information-density",
                    n,
                    delta,
                    exact: exact_tail_mutual_info(&src, t, delta, a.common.budget)?,
                    upper_bound: rate.value.chernoff_bound(n as u64),
                    lower_bound: density_lower_bound(&src, t, n, &rate),
                });
            }
        }
    }
    let rows: Vec<Vec<String>> = out
        .iter()
        .map(|r| {
            vec![
                r.kind.to_string(),
                r.n.to_string(),
                num(r.delta),
                num(r.exact),
                num(r.upper_bound),
                opt(r.lower_bound),
            ]
        })
        .collect();
    let text = render(
        &a.common,
        &out,
        &["kind", "n", "delta", "exact_tail", "upper_bound", "lower_bound"],
        &rows,
    )?;
    emit(&a.common, &text)
}

fn kinds(list: &[KindArg]) -> Vec<CurveKind> {
    list.iter()
        .map(|k| match k {
            KindArg::Achievability => CurveKind::Achievability,
            KindArg::NormalApprox => CurveKind::NormalApprox,
            KindArg::Measured => CurveKind::Measured,
            KindArg::Converse => CurveKind::Converse,
        })
        .collect()
}

fn scale_row(mut r: SweepRow, scale: f64) -> SweepRow {
    r.rate_nats *= scale;
    for v in [&mut r.term_leading, &mut r.term_dispersion, &mut r.term_correction] {
        *v = v.map(|x| x * scale);
    }
    r
}

fn write_rows(common: &Common, rows: Vec<SweepRow>) -> Result<()> {
    let scale = unit_scale(common);
    let rows: Vec<SweepRow> = rows.into_iter().map(|r| scale_row(r, scale)).collect();
    let text = match common.format {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let body = to_csv(&rows);
            if common.bits {
                body.replacen("rate_nats", "rate_bits", 1)
            } else {
                body
            }
        }
    };
    emit(common, &text)
}

fn check_eps_list(eps: &[f64]) -> Result<()> {
    for &e in eps {
        if !(e > 0.0 && e < 1.0) {
            return Err(swcoding::Error::InvalidEps(e).into());
        }
    }
    Ok(())
}

fn bounds(a: &BoundsArgs) -> Result<()> {
    let src = load(&a.common)?;
    check_eps_list(&a.eps)?;
    let kinds = kinds(&a.kind);
    if kinds.contains(&CurveKind::Measured) {
        return Err(UsageError("bounds emits curves only; use simulate or sweep for measured points".into()).into());
    }
    if kinds.contains(&CurveKind::Converse) {
        eprintln!("note: converse rows use eps_n = 1/sqrt(n ln n) regardless of --eps");
    }
    let cfg = SweepConfig {
        source_id: source_id(&a.common),
        ns: a.n.clone(),
        eps: a.eps.clone(),
        modes: a.mode.iter().map(|&m| m.into()).collect(),
        kinds,
        trials: 0,
        seed: DEFAULT_SEED,
        budget: a.common.budget,
    };
    write_rows(&a.common, sweep(&src, &cfg)?)
}

fn sweep_cmd(a: &SweepArgs) -> Result<()> {
    let src = load(&a.common)?;
    check_eps_list(&a.eps)?;
    let cfg = SweepConfig {
        source_id: source_id(&a.common),
        ns: a.n.clone(),
        eps: a.eps.clone(),
        modes: a.mode.iter().map(|&m| m.into()).collect(),
        kinds: kinds(&a.kind),
        trials: a.trials,
        seed: a.seed,
        budget: a.common.budget,
    };
    write_rows(&a.common, sweep(&src, &cfg)?)
}

fn pair(a: Option<f64>, b: Option<f64>, names: &str) -> Result<Option<[f64; 2]>> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some([a, b])),
        (None, None) => Ok(None),
        _ => Err(UsageError(format!("{names} must be given together")).into()),
    }
}

/// Builds the requested code, calibrating whichever constants were not given.
fn build_code(src: &JointSource, c: &CodeArgs, budget: u64) -> Result<CodeSpec> {
    let mode: Mode = c.mode.into();
    let spec = match mode {
        Mode::Fixed => {
            if c.kappa1.is_some() || c.kappa2.is_some() || c.c0.is_some() {
                return Err(UsageError("--kappa1, --kappa2 and --c0 apply to variable-rate codes".into()).into());
            }
            let k = match pair(c.kappa3, c.kappa4, "--kappa3 and --kappa4")? {
                Some(k) => k,
                None => report_calibration(calibrate_kappas(src, c.n, c.eps, mode, budget)?).kappa,
            };
            build_fixed_code(src, c.n, c.eps, k[0], k[1], c.seed)?
        }
        Mode::Variable => {
            if c.kappa3.is_some() || c.kappa4.is_some() {
                return Err(UsageError("--kappa3 and --kappa4 apply to fixed-rate codes".into()).into());
            }
            let (k, c0) = match pair(c.kappa1, c.kappa2, "--kappa1 and --kappa2")? {
                Some(k) => (k, c.c0),
                None => {
                    let cal = match c.c0 {
                        Some(c0) => calibrate_kappas_with_c0(src, c.n, c.eps, c0, budget)?,
                        None => calibrate_kappas(src, c.n, c.eps, mode, budget)?,
                    };
                    let cal = report_calibration(cal);
                    (cal.kappa, cal.c0)
                }
            };
            build_variable_code(src, c.n, c.eps, k[0], k[1], c0, c.seed, budget)?
        }
    };
    Ok(spec)
}

fn report_calibration(cal: KappaCalibration) -> KappaCalibration {
    eprintln!(
        "calibrated kappa = ({}, {}), jar miss {}, collision {}",
        num(cal.kappa[0]),
        num(cal.kappa[1]),
        num(cal.jar_miss),
        num(cal.collision)
    );
    cal
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let src = load(&a.common)?;
    let spec = build_code(&src, &a.code, a.common.budget)?;
    let seed = a.code.seed;
    let (report, label): (EvaluationReport, &str) = match a.estimator {
        EstimatorArg::MonteCarlo => (monte_carlo_error(&src, &spec, a.trials, seed)?, "measured"),
        EstimatorArg::SemiSampled => (
            semi_analytic_error(&src, &spec, Sampling::Trials(a.trials), seed, a.common.budget)?,
            "semi-sampled",
        ),
        EstimatorArg::SemiExhaustive => (
            semi_analytic_error(&src, &spec, Sampling::Exhaustive, seed, a.common.budget)?,
            "semi-exhaustive",
        ),
    };
    match a.common.format {
        Format::Json => emit(&a.common, &json(&report)?),
        Format::Csv => {
            let mode = spec.mode();
            let row = SweepRow {
                source_id: source_id(&a.common),
                mode,
                n: spec.n,
                eps: spec.eps,
                bound_kind: format!("{label}-{mode}"),
                rate_nats: report.measured_rate_nats,
                term_leading: None,
                term_dispersion: None,
                term_correction: None,
                p_e_hat: Some(report.p_e_hat),
                p_e_ci_lo: Some(report.p_e_ci_lo),
                p_e_ci_hi: Some(report.p_e_ci_hi),
                jar_miss: Some(report.jar_miss),
                collision: Some(report.collision),
                trials: Some(report.trials),
                seed: Some(seed),
            };
            write_rows(&a.common, vec![row])
        }
    }
}

fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let src = load(&a.common)?;
    let mode: Mode = a.mode.into();
    let cal = match (mode, a.c0) {
        (Mode::Variable, Some(c0)) => calibrate_kappas_with_c0(&src, a.n, a.eps, c0, a.common.budget)?,
        (Mode::Fixed, Some(_)) => return Err(UsageError("--c0 applies to variable-rate codes".into()).into()),
        _ => calibrate_kappas(&src, a.n, a.eps, mode, a.common.budget)?,
    };
    let row = vec![
        mode.to_string(),
        a.n.to_string(),
        num(a.eps),
        num(cal.kappa[0]),
        num(cal.kappa[1]),
        opt(cal.c0),
        num(cal.jar_miss),
        num(cal.collision),
    ];
    let text = render(
        &a.common,
        &cal,
        &[
            "mode",
            "n",
            "eps",
            "kappa_width",
            "kappa_offset",
            "c0",
            "jar_miss",
            "collision",
        ],
        &[row],
    )?;
    emit(&a.common, &text)
}
