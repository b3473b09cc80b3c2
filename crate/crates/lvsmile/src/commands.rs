//! The subcommands. Each turns a resolved config into a table or report.
//!
//! Strike-by-strike commands keep going past a failed strike: the rows that
//! did succeed are still written and the failures come back in
//! [`Outcome::failures`].

use std::fmt::Write as _;

use lvsmile_core::black_scholes::implied_vol;
use lvsmile_core::mc::simulate_calls;
use lvsmile_core::model::{check_series_bound, eta_norm, validity_threshold, DEFAULT_NORM_OFFSET};
use lvsmile_core::pricer::{density, price};
use lvsmile_core::smile::smile_curve;
use lvsmile_core::transforms::{bad_offsets, nudge_offset, Payoff, DEFAULT_CALL_OFFSET};

use crate::config::{Command, RunConfig};
use crate::output::Table;
use crate::CliError;

#[derive(Debug)]
pub enum Output {
    Table(Table),
    Report(String),
}

#[derive(Debug)]
pub struct Outcome {
    pub output: Output,
    /// Advisory messages for stderr.
    pub warnings: Vec<String>,
    /// Strikes that failed, with the reason.
    pub failures: Vec<(f64, lvsmile_core::Error)>,
}

impl Outcome {
    fn table(table: Table) -> Self {
        Self {
            output: Output::Table(table),
            warnings: Vec::new(),
            failures: Vec::new(),
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Price => price_table(cfg),
        Command::Smile => smile_table(cfg),
        Command::Density => density_table(cfg),
        Command::Mc => mc_table(cfg),
        Command::Check => Ok(Outcome {
            output: Output::Report(check_report(cfg)),
            warnings: Vec::new(),
            failures: Vec::new(),
        }),
    }
}

fn lmmr(cfg: &RunConfig, k: f64) -> f64 {
    (k - cfg.params.y()) / cfg.t
}

fn diagnostics_warning(cfg: &RunConfig) -> Option<String> {
    let d = cfg.params.diagnostics(DEFAULT_NORM_OFFSET);
    if d.is_clean() {
        return None;
    }
    let mut msg = String::from("warning: series convergence is not guaranteed");
    if !d.bound_satisfied {
        let _ = write!(
            msg,
            "; eps exceeds a^2/||e^(beta y)|| on (y - {DEFAULT_NORM_OFFSET}, inf)"
        );
    }
    if d.below_threshold {
        let _ = write!(
            msg,
            "; spot y = {} lies below y* = {}",
            cfg.params.y(),
            d.threshold
        );
    }
    Some(msg)
}

fn price_table(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let contour = cfg.contour();
    let mut table = Table::new(vec!["k", "lmmr", "order", "term", "cumulative_price"]);
    let mut out = Outcome::table(Table::new(vec![]));
    for k in cfg.log_strikes() {
        let series = match Payoff::call(k)
            .and_then(|p| price(&cfg.params, &p, cfg.t, cfg.order, &contour))
        {
            Ok(s) => s,
            Err(e) if e.is_numerical() => {
                out.failures.push((k, e));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for m in 0..=cfg.order {
            table.push(vec![
                k.into(),
                lmmr(cfg, k).into(),
                m.into(),
                series.terms[m].into(),
                series.partial_sum(m).into(),
            ]);
        }
    }
    out.output = Output::Table(table);
    out.warnings.extend(diagnostics_warning(cfg));
    Ok(out)
}

fn smile_table(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let curve = smile_curve(
        &cfg.params,
        cfg.t,
        &cfg.log_strikes(),
        cfg.order,
        &cfg.contour(),
        cfg.reference,
    )?;
    if let Some((_, e)) = curve.failures.iter().find(|(_, e)| !e.is_numerical()) {
        return Err(e.clone().into());
    }
    let mut table = Table::new(vec!["k", "lmmr", "order", "sigma_n", "sigma_reference"]);
    for p in &curve.points {
        for (m, s) in p.sigmas.iter().enumerate() {
            table.push(vec![
                p.k.into(),
                p.lmmr.into(),
                m.into(),
                (*s).into(),
                p.reference.into(),
            ]);
        }
    }
    let mut out = Outcome::table(table);
    out.failures = curve.failures;
    out.warnings.extend(diagnostics_warning(cfg));
    Ok(out)
}

fn density_table(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.y_grid();
    let y0 = cfg.params.y();
    let d = density(&cfg.params, cfg.t, y0, cfg.order, &grid, &cfg.contour())?;
    let mut table = Table::new(vec!["y", "order", "p_n"]);
    for (i, &y) in d.y_values.iter().enumerate() {
        for (m, row) in d.p_orders.iter().enumerate() {
            table.push(vec![y.into(), m.into(), row[i].into()]);
        }
    }
    let mut out = Outcome::table(table);
    out.warnings.extend(diagnostics_warning(cfg));
    Ok(out)
}

fn mc_table(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ks = cfg.log_strikes();
    let y = cfg.params.y();
    let estimates = simulate_calls(&cfg.params, cfg.t, &ks, &cfg.mc)?;
    let contour = cfg.contour();
    let mut out = Outcome::table(Table::new(vec![]));
    let mut table = Table::new(vec![
        "k",
        "lmmr",
        "mc_price",
        "std_err",
        "spectral_price",
        "implied_mc",
        "implied_spectral",
    ]);
    for (&k, est) in ks.iter().zip(&estimates) {
        let spectral = match Payoff::call(k)
            .and_then(|p| price(&cfg.params, &p, cfg.t, cfg.order, &contour))
        {
            Ok(s) => Some(s.total),
            Err(e) if e.is_numerical() => {
                out.failures.push((k, e));
                None
            }
            Err(e) => return Err(e.into()),
        };
        let iv = |p: f64| implied_vol(p, cfg.t, y, k).ok();
        table.push(vec![
            k.into(),
            lmmr(cfg, k).into(),
            est.price.into(),
            est.std_error.into(),
            spectral.into(),
            iv(est.price).into(),
            spectral.and_then(iv).into(),
        ]);
    }
    out.output = Output::Table(table);
    out.warnings.extend(diagnostics_warning(cfg));
    Ok(out)
}

/// Plain-text summary of the convergence diagnostics and contour choice.
pub fn check_report(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "a = {}, eps = {}, beta = {}, y = {}, t = {}, order = {}",
        p.a(),
        p.eps(),
        p.beta(),
        p.y(),
        cfg.t,
        cfg.order
    );

    let floor = p.y() - DEFAULT_NORM_OFFSET;
    let bound = if p.eps() == 0.0 {
        "bound trivially satisfied (eps = 0)".to_string()
    } else {
        let verdict = if check_series_bound(p, floor) {
            "satisfied"
        } else {
            "violated"
        };
        match eta_norm(p.beta(), floor) {
            Ok(norm) => format!(
                "bound eps <= a^2/||e^(beta y)||: {verdict} (norm on (y0, inf) with y0 = {floor} is {norm}, a^2/norm = {})",
                p.a() * p.a() / norm
            ),
            Err(_) => format!("bound eps <= a^2/||e^(beta y)||: {verdict} (norm is infinite for beta = 0)"),
        }
    };
    let _ = writeln!(s, "{bound}");

    let y_star = validity_threshold(p);
    let side = if p.y() < y_star { "below" } else { "above" };
    let _ = writeln!(
        s,
        "validity threshold y* = {y_star}; spot y = {} is {side} it",
        p.y()
    );

    let bad = bad_offsets(cfg.order, p.beta());
    if bad.is_empty() {
        let _ = writeln!(s, "bad contour offsets: none");
    } else {
        let list: Vec<String> = bad.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(
            s,
            "bad contour offsets for order {}: {}",
            cfg.order,
            list.join(", ")
        );
    }
    let nudged = nudge_offset(DEFAULT_CALL_OFFSET, cfg.order, p.beta());
    if nudged == DEFAULT_CALL_OFFSET {
        let _ = writeln!(
            s,
            "default call contour Im(lambda) = {DEFAULT_CALL_OFFSET} is clear"
        );
    } else {
        let _ = writeln!(
            s,
            "default call contour Im(lambda) = {DEFAULT_CALL_OFFSET} is nudged to {nudged}"
        );
    }
    if let Some(c) = cfg.contour_offset {
        let near = bad
            .iter()
            .any(|b| (c - b).abs() < lvsmile_core::transforms::NUDGE_WINDOW);
        let _ = writeln!(
            s,
            "requested contour Im(lambda) = {c} {}",
            if near {
                "lies on a bad offset and is used as given"
            } else {
                "is clear"
            }
        );
    }
    s
}
