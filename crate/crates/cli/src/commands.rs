//! Subcommand implementations. Every output is a deterministic function of
//! the configuration and the seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sympass_core::io::{fmt_f64, grid_function_from_csv, grid_function_to_csv};
use sympass_core::trick::{corollary_grid, ScanTable};
use sympass_core::{
    approximate_symmetrization, corollary2_sequence, extract_sbps, refine_to_critical, scan_c, schwarz,
    select_denjoy_points, CriticalPointRecord, Functional, LambdaFamily, NormKind, PSReport, QuarticSurrogate,
};

use crate::checks::{self, CheckOutcome};
use crate::config::RunConfig;
use crate::error::CliError;

pub const SCAN_HEADER: &str = "lambda,c,converged,restarts_dispersion,sweeps,error";
pub const CRITICAL_HEADER: &str = "source,lambda,energy,slope,asymmetry,xnorm,iterations,converged,file";

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("output directory {} not writable: {e}", dir.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(format!("serialization failed: {e}")))
}

/// Keeps free text inside one CSV field.
fn csv_text(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

/// `symmetrize`: greedy polarization of a stored grid function toward `u*`.
pub fn symmetrize(cfg: &RunConfig, input: &Path) -> Result<String, CliError> {
    let text =
        fs::read_to_string(input).map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let u = grid_function_from_csv(&text)?;
    cfg.symmetrization.validate()?;
    let (p, pstar) = cfg.energy.v_exponents(u.domain().dimension);
    let res = approximate_symmetrization(&u, &cfg.symmetrization, NormKind::V { p, pstar }, cfg.seed)?;
    if res.trace.windows(2).any(|w| w[1] > w[0]) {
        return Err(CliError::Invariant("distance trace increased".into()));
    }
    let dir = &cfg.output_dir;
    prepare_dir(dir)?;
    write(dir, "u_star.csv", &grid_function_to_csv(&schwarz(&u)))?;
    write(dir, "u_word.csv", &grid_function_to_csv(&res.function))?;
    let mut word = String::from("index,normal_x,normal_y,offset\n");
    for (k, h) in res.word.items.iter().enumerate() {
        let [a, b] = h.normal().components();
        let _ = writeln!(word, "{k},{a},{b},{}", fmt_f64(h.offset()));
    }
    write(dir, "word.csv", &word)?;
    let mut trace = String::from("iteration,distance\n");
    for (k, d) in res.trace.iter().enumerate() {
        let _ = writeln!(trace, "{k},{}", fmt_f64(*d));
    }
    write(dir, "trace.csv", &trace)?;
    Ok(format!(
        "{} polarizers, distance {:.3e}, converged {}",
        res.word.len(),
        res.distance(),
        res.converged
    ))
}

fn write_scan(dir: &Path, table: &ScanTable) -> Result<(), CliError> {
    let mut csv = format!("{SCAN_HEADER}\n");
    let mut dat = String::from("# lambda c\n");
    for p in &table.points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_f64(p.lambda),
            fmt_f64(p.value),
            p.converged,
            fmt_f64(p.restart_dispersion),
            p.sweeps,
            csv_text(p.error.as_deref().unwrap_or(""))
        );
        if p.value.is_finite() {
            let _ = writeln!(dat, "{} {}", fmt_f64(p.lambda), fmt_f64(p.value));
        }
    }
    write(dir, "c_of_lambda.csv", &csv)?;
    write(dir, "c_of_lambda.dat", &dat)?;
    write(dir, "quotients.csv", &quotients_csv(table))?;
    Ok(())
}

fn scan_table(cfg: &RunConfig, surrogate: bool) -> Result<ScanTable, CliError> {
    let grid = &cfg.scan.lambda_grid;
    let table = if surrogate {
        scan_c(
            &QuarticSurrogate::default(),
            grid,
            cfg.scan.restarts,
            &cfg.minimax,
            cfg.seed,
        )?
    } else {
        let fam = LambdaFamily::new(cfg.energy, cfg.domain)?;
        scan_c(&fam, grid, cfg.scan.restarts, &cfg.minimax, cfg.seed)?
    };
    Ok(table)
}

/// Every left difference quotient `(ĉ(λ_h) - ĉ(λ₀)) / (λ₀ - λ_h)` of the table.
fn quotients_csv(table: &ScanTable) -> String {
    let mut out = String::from("lambda0,lambda_h,quotient\n");
    for (k, p0) in table.points.iter().enumerate() {
        for ph in &table.points[..k] {
            let q = (ph.value - p0.value) / (p0.lambda - ph.lambda);
            let _ = writeln!(out, "{},{},{}", fmt_f64(p0.lambda), fmt_f64(ph.lambda), fmt_f64(q));
        }
    }
    out
}

fn denjoy_csv(cfg: &RunConfig, table: &ScanTable) -> String {
    let pairs: Vec<(f64, f64)> = table.points.iter().map(|p| (p.lambda, p.value)).collect();
    let mut out = String::from("lambda0,q_witness\n");
    for d in select_denjoy_points(&pairs, cfg.scan.quotient_window, cfg.scan.q_cap) {
        let _ = writeln!(out, "{},{}", fmt_f64(d.lambda0), fmt_f64(d.q_witness));
    }
    out
}

/// `scan`: the table `ĉ(λ)` on the configured grid.
pub fn scan(cfg: &RunConfig, surrogate: bool) -> Result<String, CliError> {
    cfg.scan.validate()?;
    cfg.minimax.validate()?;
    if !surrogate {
        cfg.validate()?;
    }
    let dir = &cfg.output_dir;
    prepare_dir(dir)?;
    let table = scan_table(cfg, surrogate)?;
    write_scan(dir, &table)?;
    write(dir, "denjoy_points.csv", &denjoy_csv(cfg, &table))?;
    let failures = table.points.iter().filter(|p| p.error.is_some()).count();
    Ok(format!(
        "{} lambda values, {failures} failed, monotone {}",
        table.points.len(),
        table.monotone
    ))
}

fn lambda_tag(lambda: f64) -> String {
    format!("{lambda:.6}")
}

fn critical_row(source: &str, r: &CriticalPointRecord, file: &str) -> String {
    format!(
        "{source},{},{},{},{},{},{},{},{file}",
        fmt_f64(r.lambda),
        fmt_f64(r.energy),
        fmt_f64(r.slope),
        fmt_f64(r.asymmetry),
        fmt_f64(r.x_norm),
        r.iterations,
        r.converged
    )
}

fn yes(b: bool) -> &'static str {
    if b {
        "verified"
    } else {
        "NOT verified"
    }
}

/// `trick`: scan, sequence extraction at every `λ₀`, Newton refinement and the
/// corollary sequence, with a summary of verified conclusions.
pub fn trick(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let fam = LambdaFamily::new(cfg.energy, cfg.domain)?;
    for &l in &cfg.scan.lambda0 {
        fam.check_lambda(l)?;
    }
    let tc = cfg.trick_config();
    let dir = &cfg.output_dir;
    prepare_dir(dir)?;

    let table = scan_c(&fam, &cfg.scan.lambda_grid, cfg.scan.restarts, &cfg.minimax, cfg.seed)?;
    write_scan(dir, &table)?;
    let denjoy = denjoy_csv(cfg, &table);
    write(dir, "denjoy_points.csv", &denjoy)?;

    let reports: Vec<Result<PSReport, String>> = cfg
        .scan
        .lambda0
        .par_iter()
        .map(|&l| extract_sbps(&fam, l, &tc).map_err(|e| e.to_string()))
        .collect();
    let refined: Vec<Option<Result<CriticalPointRecord, String>>> = reports
        .par_iter()
        .map(|r| {
            let report = r.as_ref().ok()?;
            let member = report.best_member()?;
            Some(
                refine_to_critical(
                    &fam,
                    report.lambda0,
                    &member.u,
                    &cfg.scan.refine,
                    &cfg.symmetrization,
                    cfg.seed,
                )
                .map_err(|e| e.to_string()),
            )
        })
        .collect();

    let (lo, hi) = fam.lambda_interval();
    let sigma = cfg.scan.corollary_sigma;
    let corollary = if 1.0 - sigma >= lo && hi >= 1.0 {
        let grid = corollary_grid(sigma, cfg.scan.corollary_points);
        Some(corollary2_sequence(&fam, &grid, &tc).map_err(|e| e.to_string()))
    } else {
        None
    };

    let mut sbps = format!("{}\n", PSReport::CSV_HEADER);
    let mut critical = format!("{CRITICAL_HEADER}\n");
    let mut summary = String::new();
    let _ = writeln!(summary, "seed {}", cfg.seed);
    let _ = writeln!(
        summary,
        "monotonicity of c(lambda) on {} grid points: {}",
        table.points.len(),
        yes(table.monotone)
    );
    let selected: Vec<&str> = denjoy
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap_or(""))
        .collect();
    let _ = writeln!(summary, "bounded-quotient grid points: [{}]", selected.join(" "));

    for ((&l, report), refined) in cfg.scan.lambda0.iter().zip(&reports).zip(&refined) {
        let tag = lambda_tag(l);
        let _ = writeln!(summary, "\nlambda0 = {tag}");
        let report = match report {
            Ok(r) => r,
            Err(e) => {
                let _ = writeln!(summary, "  extraction failed: {e}");
                continue;
            }
        };
        write(dir, &format!("report_lambda0_{tag}.json"), &json(report)?)?;
        for row in report.csv_rows() {
            let _ = writeln!(sbps, "{row}");
        }
        let v = &report.verdicts;
        let accepted = report.sequence.iter().filter(|r| r.accepted).count();
        let _ = writeln!(
            summary,
            "  c estimate {:.10}, bound M {:.6}, quotient witness {:.6}",
            report.c_estimate, report.bound_m, report.q_witness
        );
        let _ = writeln!(summary, "  bounded difference quotients: {}", yes(report.denjoy_ok));
        let _ = writeln!(
            summary,
            "  sequence: {} members, {accepted} accepted, failed j {:?}",
            report.sequence.len(),
            report.failed_j
        );
        let _ = writeln!(summary, "  energies within 2/j of c: {}", yes(v.energies_in_band));
        let _ = writeln!(summary, "  norms bounded by M + 2: {}", yes(v.bounded));
        let _ = writeln!(summary, "  final slope within threshold: {}", yes(v.final_slope_ok));
        let decay = match (v.asymmetry_decay, report.decay_exponent) {
            (Some(ok), Some(e)) => format!("{} (fitted exponent {e:.4}, target -0.5)", yes(ok)),
            _ => report.decay_note.clone(),
        };
        let _ = writeln!(summary, "  asymmetry decay: {decay}");
        match refined {
            Some(Ok(rec)) => {
                let file = format!("critical_lambda0_{tag}.csv");
                write(dir, &file, &grid_function_to_csv(&rec.u))?;
                let _ = writeln!(critical, "{}", critical_row("lambda0", rec, &file));
                let _ = writeln!(
                    summary,
                    "  refined critical point: {} (slope {:.3e}, asymmetry {:.3e}, energy {:.10})",
                    yes(rec.converged),
                    rec.slope,
                    rec.asymmetry,
                    rec.energy
                );
            }
            Some(Err(e)) => {
                let _ = writeln!(summary, "  refinement failed: {e}");
            }
            None => {
                let _ = writeln!(summary, "  refinement skipped: empty sequence");
            }
        }
    }

    let _ = writeln!(summary, "\ncorollary sequence (sigma = {sigma})");
    match corollary {
        None => {
            let _ = writeln!(summary, "  skipped: [1 - sigma, 1] not inside the lambda interval");
        }
        Some(Err(e)) => {
            let _ = writeln!(summary, "  failed: {e}");
        }
        Some(Ok(rep)) => {
            for e in &rep.entries {
                let tag = lambda_tag(e.record.lambda);
                let file = format!("critical_corollary_{tag}.csv");
                write(dir, &file, &grid_function_to_csv(&e.record.u))?;
                let _ = writeln!(critical, "{}", critical_row("corollary", &e.record, &file));
            }
            write(dir, "corollary.json", &json(&rep)?)?;
            let _ = writeln!(summary, "  lambdas: {:?}", rep.lambdas);
            let _ = writeln!(summary, "  all refined points critical: {}", yes(rep.all_converged));
            let _ = writeln!(summary, "  all refined points symmetric: {}", yes(rep.all_symmetric));
            let _ = writeln!(
                summary,
                "  symmetry chain: {}",
                yes(rep.entries.iter().all(|e| e.chain_ok))
            );
            let _ = writeln!(summary, "  sup norm: {:.6}", rep.sup_norm);
        }
    }

    write(dir, "sbps.csv", &sbps)?;
    write(dir, "critical_points.csv", &critical)?;
    write(dir, "summary.txt", &summary)?;
    Ok(summary)
}

/// `check`: hypothesis validators and property suites.
pub fn check(cfg: &RunConfig, trials: usize) -> Result<(Vec<CheckOutcome>, bool), CliError> {
    cfg.validate()?;
    let outcomes = checks::run_all(cfg, trials)?;
    let all = outcomes.iter().all(|o| o.passed);
    let dir = &cfg.output_dir;
    prepare_dir(dir)?;
    write(dir, "check_report.json", &json(&outcomes)?)?;
    Ok((outcomes, all))
}
