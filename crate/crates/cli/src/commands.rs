use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use symsign::analysis::{
    exponent_ledger, partial_sums, sign_change_report, theorem_check, ExponentLedger, MomentReport,
    SignChangeReport, TheoremRow,
};
use symsign::hecke::{satake, write_coefficients, MIN_FILE_TRUNC};
use symsign::lvalues::{c_constant, EulerProductEstimate, MomentConstant};

use crate::config::{FormSource, Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{emit, fmt12, num, to_json_text};
use crate::tables::{build_form, estimate_bytes, Tables};

/// Slack added to the error exponent in the lower-bound check.
pub const MARGIN: f64 = 0.01;

/// Desk-scale floor for `ln count / ln x`. Heuristic, not part of the bound.
pub const WITNESS_FLOOR: f64 = 0.8;

pub struct SignsBlock {
    pub ledger: ExponentLedger,
    pub report: SignChangeReport,
    pub rows: Vec<TheoremRow>,
}

impl SignsBlock {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub struct CjBlock {
    pub constant: MomentConstant,
    pub x: usize,
    pub slope: f64,
}

impl CjBlock {
    pub fn discrepancy(&self) -> f64 {
        (self.constant.value - self.slope).abs() / self.constant.value
    }
}

fn ledgers(cfg: &RunConfig) -> CliResult<Vec<ExponentLedger>> {
    cfg.j_list
        .iter()
        .map(|&j| exponent_ledger(j, cfg.eps).map_err(CliError::from))
        .collect()
}

pub fn compute_signs(cfg: &RunConfig, t: &mut Tables) -> CliResult<Vec<SignsBlock>> {
    let mut out = Vec::new();
    for ledger in ledgers(cfg)? {
        t.prepare(ledger.j)?;
        let sym = t.sym(ledger.j);
        let report = sign_change_report(sym, &t.ts, &t.sieve, &cfg.checkpoints, cfg.zero_tol)?;
        let rows = theorem_check(&report, &ledger, MARGIN)?;
        out.push(SignsBlock {
            ledger,
            report,
            rows,
        });
    }
    Ok(out)
}

pub fn compute_moments(cfg: &RunConfig, t: &mut Tables) -> CliResult<Vec<MomentReport>> {
    let mut out = Vec::new();
    for &j in &cfg.j_list {
        t.prepare(j)?;
        let sym = t.sym(j);
        out.push(partial_sums(sym, &t.ts, &cfg.checkpoints)?);
    }
    Ok(out)
}

fn check_cj_scope(cfg: &RunConfig) -> CliResult<()> {
    if cfg.j_list.contains(&0) {
        return Err(CliError::Usage(
            "C_j needs j >= 1; for j = 0 the moment is the circle problem".into(),
        ));
    }
    Ok(())
}

pub fn compute_cj(cfg: &RunConfig, t: &mut Tables) -> CliResult<Vec<CjBlock>> {
    check_cj_scope(cfg)?;
    let mut out = Vec::new();
    for &j in &cfg.j_list {
        let constant = c_constant(&t.satake, j, cfg.p_max)?;
        t.prepare(j)?;
        let sym = t.sym(j);
        let slope = partial_sums(sym, &t.ts, &[cfg.x_max])?.s2_slope;
        out.push(CjBlock {
            constant,
            x: cfg.x_max,
            slope,
        });
    }
    Ok(out)
}

/// `|S_1| / x^{j/(j+2) + eps}`.
pub fn s1_bound_ratio(j: u32, x: usize, s1: f64, eps: f64) -> f64 {
    let e = j as f64 / (j as f64 + 2.0) + eps;
    s1.abs() / (x as f64).powf(e)
}

pub fn signs_csv(cfg: &RunConfig, blocks: &[SignsBlock]) -> String {
    let mut s = format!("# {}\n", cfg.echo("signs"));
    s.push_str("j,x,nonzero,sign_changes,witness_exponent,threshold_exponent,pass\n");
    for b in blocks {
        for r in &b.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                b.ledger.j,
                r.x,
                r.nonzero,
                r.count,
                fmt12(r.witness_exponent),
                fmt12(r.threshold_exponent),
                r.pass
            );
        }
    }
    s
}

fn signs_value(cfg: &RunConfig, blocks: &[SignsBlock]) -> Value {
    let results: Vec<Value> = blocks
        .iter()
        .map(|b| {
            let rows: Vec<Value> = b
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "x": r.x,
                        "nonzero": r.nonzero,
                        "sign_changes": r.count,
                        "witness_exponent": num(r.witness_exponent),
                        "threshold_exponent": num(r.threshold_exponent),
                        "pass": r.pass,
                    })
                })
                .collect();
            json!({
                "j": b.ledger.j,
                "gamma_j": b.ledger.gamma_string(),
                "fitted_exponent": b.report.fitted_exponent.map_or(Value::Null, num),
                "rows": rows,
            })
        })
        .collect();
    json!({
        "config": cfg.echo("signs"),
        "zero_tol": cfg.zero_tol.describe(),
        "margin": num(MARGIN),
        "results": results,
    })
}

pub fn moments_csv(cfg: &RunConfig, reports: &[MomentReport]) -> String {
    let mut s = format!("# {}\n", cfg.echo("moments"));
    s.push_str("j,x,S1,S2,S2_over_x,S1_bound_ratio\n");
    for r in reports {
        for (i, &x) in r.checkpoints.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.j,
                x,
                fmt12(r.s1[i]),
                fmt12(r.s2[i]),
                fmt12(r.s2[i] / x as f64),
                fmt12(s1_bound_ratio(r.j, x, r.s1[i], cfg.eps))
            );
        }
    }
    s
}

fn moments_value(cfg: &RunConfig, reports: &[MomentReport]) -> Value {
    let results: Vec<Value> = reports
        .iter()
        .map(|r| {
            let rows: Vec<Value> = r
                .checkpoints
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    json!({
                        "x": x,
                        "S1": num(r.s1[i]),
                        "S2": num(r.s2[i]),
                        "S2_over_x": num(r.s2[i] / x as f64),
                        "S1_bound_ratio": num(s1_bound_ratio(r.j, x, r.s1[i], cfg.eps)),
                    })
                })
                .collect();
            json!({
                "j": r.j,
                "s1_exponent": r.s1_exponent.map_or(Value::Null, num),
                "rows": rows,
            })
        })
        .collect();
    json!({ "config": cfg.echo("moments"), "results": results })
}

fn estimate_value(e: &EulerProductEstimate) -> Value {
    json!({
        "value": num(e.value),
        "log_value": num(e.log_value),
        "p_max": e.p_max,
        "nu_max": e.nu_max,
        "note": e.tail_note,
    })
}

pub fn cj_value(cfg: &RunConfig, blocks: &[CjBlock]) -> Value {
    let results: Vec<Value> = blocks
        .iter()
        .map(|b| {
            let c = &b.constant;
            let factors: Vec<Value> = c
                .l_factors
                .iter()
                .map(|(i, a, t)| {
                    json!({
                        "i": i,
                        "L_sym2i": estimate_value(a),
                        "L_sym2i_chi": estimate_value(t),
                    })
                })
                .collect();
            json!({
                "j": c.j,
                "p_max": c.p_max,
                "L_chi": estimate_value(&c.l_chi),
                "L_factors": factors,
                "H_1": estimate_value(&c.h),
                "C_j": num(c.value),
                "C_j_exact_L_chi": num(c.with_exact_l_chi()),
                "x": b.x,
                "empirical_slope": num(b.slope),
                "discrepancy": num(b.discrepancy()),
                "gamma_j": symsign::analysis::gamma_j(c.j).to_string(),
            })
        })
        .collect();
    json!({ "config": cfg.echo("cj"), "results": results })
}

pub fn cj_csv(cfg: &RunConfig, blocks: &[CjBlock]) -> String {
    let mut s = format!("# {}\n", cfg.echo("cj"));
    s.push_str("j,p_max,L_chi,H_1,C_j,x,empirical_slope,discrepancy,gamma_j\n");
    for b in blocks {
        let c = &b.constant;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            c.j,
            c.p_max,
            fmt12(c.l_chi.value),
            fmt12(c.h.value),
            fmt12(c.value),
            b.x,
            fmt12(b.slope),
            fmt12(b.discrepancy()),
            symsign::analysis::gamma_j(c.j)
        );
    }
    s
}

/// Two columns `ln x  ln count` for checkpoints with at least one change.
pub fn plot_data(b: &SignsBlock) -> String {
    let mut s = format!("# j={} ln(x) ln(sign_changes)\n", b.ledger.j);
    for r in b.rows.iter().filter(|r| r.count > 0) {
        let _ = writeln!(
            s,
            "{} {}",
            fmt12((r.x as f64).ln()),
            fmt12((r.count as f64).ln())
        );
    }
    s
}

fn signs_scope(cfg: &RunConfig) -> CliResult<()> {
    ledgers(cfg).map(|_| ())
}

pub fn cmd_coeffs(cfg: &RunConfig, trunc: usize) -> CliResult<i32> {
    if trunc < MIN_FILE_TRUNC {
        return Err(CliError::Usage(format!(
            "trunc = {trunc}; coefficient files need at least {MIN_FILE_TRUNC} terms"
        )));
    }
    symsign::arith::check_memory(estimate_bytes(trunc, 0), cfg.mem_cap)?;
    let (series, form, report) = match build_form(cfg, trunc) {
        Err(CliError::Check(msg)) => {
            println!("{msg}");
            return Ok(2);
        }
        r => r?,
    };
    let path = match (&cfg.out, &cfg.form) {
        (Some(p), _) => Some(p.clone()),
        (None, FormSource::Builtin { label, .. }) => {
            Some(PathBuf::from(format!("{label}_{trunc}.txt")))
        }
        (None, FormSource::File(_)) => None,
    };
    if let Some(p) = &path {
        let mut buf = Vec::new();
        write_coefficients(&mut buf, form.label(), form.weight(), &series)?;
        fs::write(p, buf)?;
    }
    if let Err(e) = satake(&form) {
        println!("{e}");
        return Ok(2);
    }
    println!(
        "{} weight {}: {}",
        form.label(),
        form.weight(),
        report.summary()
    );
    if let Some(p) = path {
        println!("wrote {}", p.display());
    }
    Ok(0)
}

pub fn cmd_signs(cfg: &RunConfig) -> CliResult<i32> {
    signs_scope(cfg)?;
    let mut t = Tables::build(cfg, cfg.x_max)?;
    let blocks = compute_signs(cfg, &mut t)?;
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => signs_csv(cfg, &blocks),
        Format::Json => to_json_text(&signs_value(cfg, &blocks)),
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(if blocks.iter().all(SignsBlock::passed) {
        0
    } else {
        2
    })
}

pub fn cmd_moments(cfg: &RunConfig) -> CliResult<i32> {
    let mut t = Tables::build(cfg, cfg.x_max)?;
    let reports = compute_moments(cfg, &mut t)?;
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => moments_csv(cfg, &reports),
        Format::Json => to_json_text(&moments_value(cfg, &reports)),
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(0)
}

pub fn cmd_cj(cfg: &RunConfig) -> CliResult<i32> {
    check_cj_scope(cfg)?;
    let mut t = Tables::build(cfg, cfg.table_size())?;
    let blocks = compute_cj(cfg, &mut t)?;
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Csv => cj_csv(cfg, &blocks),
        Format::Json => to_json_text(&cj_value(cfg, &blocks)),
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(0)
}

struct Step {
    name: &'static str,
    code: i32,
    files: Vec<String>,
    error: Option<String>,
}

impl Step {
    fn value(&self) -> Value {
        json!({
            "step": self.name,
            "exit_code": self.code,
            "files": self.files,
            "error": self.error,
        })
    }
}

fn write_file(dir: &Path, name: &str, text: &str, files: &mut Vec<String>) -> CliResult<()> {
    fs::write(dir.join(name), text)?;
    files.push(name.to_string());
    Ok(())
}

fn run_step<F>(steps: &mut Vec<Step>, name: &'static str, f: F)
where
    F: FnOnce(&mut Vec<String>) -> CliResult<i32>,
{
    let mut files = Vec::new();
    let (code, error) = match f(&mut files) {
        Ok(c) => (c, None),
        Err(e) => (e.exit_code(), Some(e.to_string())),
    };
    steps.push(Step {
        name,
        code,
        files,
        error,
    });
}

fn sub_config(cfg: &RunConfig, keep: impl Fn(u32) -> bool) -> Option<RunConfig> {
    let j_list: Vec<u32> = cfg.j_list.iter().copied().filter(|&j| keep(j)).collect();
    (!j_list.is_empty()).then(|| RunConfig {
        j_list,
        ..cfg.clone()
    })
}

fn entry(per_j: &mut [(u32, Value)], j: u32) -> &mut Value {
    &mut per_j.iter_mut().find(|e| e.0 == j).unwrap().1
}

pub const DEFAULT_REPORT_DIR: &str = "symsign-report";

/// Runs every analysis into one directory. Steps run even when earlier ones
/// fail; `manifest.json` records each step's exit code and the overall code
/// is the largest of them.
pub fn cmd_report(cfg: &RunConfig) -> CliResult<i32> {
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_REPORT_DIR));
    fs::create_dir_all(&dir)?;
    let mut steps = Vec::new();
    let mut tables = None;
    run_step(&mut steps, "coeffs", |files| {
        let t = Tables::build(cfg, cfg.table_size())?;
        let mut buf = Vec::new();
        write_coefficients(&mut buf, t.form.label(), t.form.weight(), &t.head)?;
        fs::write(dir.join("coefficients.txt"), buf)?;
        files.push("coefficients.txt".into());
        let summary = format!(
            "{} weight {} trunc {}: {}\n",
            t.form.label(),
            t.form.weight(),
            t.form.trunc(),
            t.hecke.summary()
        );
        write_file(&dir, "hecke.txt", &summary, files)?;
        tables = Some(t);
        Ok(0)
    });
    let mut summary = json!({ "config": cfg.echo("report"), "zero_tol": cfg.zero_tol.describe() });
    if let Some(mut t) = tables {
        summary["hecke"] = json!({
            "label": t.form.label(),
            "weight": t.form.weight(),
            "trunc": t.form.trunc(),
            "passed": t.hecke.passed(),
            "max_multiplicativity_error": num(t.hecke.multiplicativity),
            "max_recurrence_error": num(t.hecke.recurrence),
            "max_divisor_bound_excess": num(t.hecke.deligne),
        });
        let mut per_j: Vec<(u32, Value)> =
            cfg.j_list.iter().map(|&j| (j, json!({ "j": j }))).collect();

        run_step(&mut steps, "signs", |files| {
            let sc = sub_config(cfg, |j| j >= 2)
                .ok_or_else(|| CliError::Usage("no j >= 2 requested".into()))?;
            let blocks = compute_signs(&sc, &mut t)?;
            write_file(&dir, "signs.csv", &signs_csv(&sc, &blocks), files)?;
            for b in &blocks {
                write_file(
                    &dir,
                    &format!("plot_j{}.dat", b.ledger.j),
                    &plot_data(b),
                    files,
                )?;
                let last = b.rows.last().unwrap();
                let e = entry(&mut per_j, b.ledger.j);
                e["gamma_j"] = json!(b.ledger.gamma_string());
                e["delta_range"] =
                    json!([num(b.ledger.delta_range.0), num(b.ledger.delta_range.1)]);
                e["sign_changes"] = json!(last.count);
                e["nonzero"] = json!(last.nonzero);
                e["witness_exponent"] = num(last.witness_exponent);
                e["threshold_exponent"] = num(last.threshold_exponent);
                e["bound_holds_all_checkpoints"] = json!(b.passed());
                e["witness_floor"] = num(WITNESS_FLOOR);
                e["witness_floor_met"] = json!(last.witness_exponent >= WITNESS_FLOOR);
                e["witness_floor_note"] =
                    json!("heuristic desk-scale gate, not implied by the bound");
                e["fitted_sign_exponent"] = b.report.fitted_exponent.map_or(Value::Null, num);
            }
            Ok(if blocks.iter().all(SignsBlock::passed) {
                0
            } else {
                2
            })
        });

        run_step(&mut steps, "moments", |files| {
            let reports = compute_moments(cfg, &mut t)?;
            write_file(&dir, "moments.csv", &moments_csv(cfg, &reports), files)?;
            for r in &reports {
                let max_ratio = r
                    .checkpoints
                    .iter()
                    .zip(&r.s1)
                    .map(|(&x, &s)| s1_bound_ratio(r.j, x, s, cfg.eps))
                    .fold(0.0, f64::max);
                let e = entry(&mut per_j, r.j);
                e["s1_exponent"] = r.s1_exponent.map_or(Value::Null, num);
                e["s1_bound_ratio_max"] = num(max_ratio);
                e["s2_over_x"] = num(r.s2_slope);
            }
            Ok(0)
        });

        run_step(&mut steps, "cj", |files| {
            let sc = sub_config(cfg, |j| j >= 1)
                .ok_or_else(|| CliError::Usage("no j >= 1 requested".into()))?;
            let blocks = compute_cj(&sc, &mut t)?;
            write_file(
                &dir,
                "cj.json",
                &to_json_text(&cj_value(&sc, &blocks)),
                files,
            )?;
            for b in &blocks {
                let e = entry(&mut per_j, b.constant.j);
                e["C_j"] = num(b.constant.value);
                e["discrepancy"] = num(b.discrepancy());
            }
            Ok(0)
        });

        summary["results"] = Value::Array(per_j.into_iter().map(|(_, v)| v).collect());
    }
    let overall = steps.iter().map(|s| s.code).max().unwrap_or(0);
    run_step(&mut steps, "summary", |files| {
        write_file(&dir, "summary.json", &to_json_text(&summary), files)?;
        Ok(0)
    });
    let overall = overall.max(steps.last().unwrap().code);
    let manifest = json!({
        "config": cfg.echo("report"),
        "exit_code": overall,
        "steps": steps.iter().map(Step::value).collect::<Vec<_>>(),
    });
    fs::write(dir.join("manifest.json"), to_json_text(&manifest))?;
    Ok(overall)
}
