use std::collections::BTreeMap;
use std::path::PathBuf;

use symsign::arith::{check_memory, SpfSieve};
use symsign::hecke::{
    normalize, read_coefficients, satake, verify_hecke, Eigenform, HeckeReport, SatakeTable,
    LOAD_TOL, TOL_MULT,
};
use symsign::qseries::{cusp_form_series, IntSeries};
use symsign::sympow::{load_cached, store_cached, sym_sieve, SymCoeffTable};
use symsign::twosquares::{r_sieve, TwoSquaresTable};

use crate::config::{FormSource, RunConfig};
use crate::error::{CliError, CliResult};

pub const CACHE_ENV: &str = "SYMSIGN_CACHE_DIR";

/// Leading coefficients kept for the report's coefficient file.
pub const REPORT_COEFFS: usize = 10_000;

// rough peak for the exact series: BigInt coefficients plus NTT residues
const SERIES_BYTES_PER_TERM: u64 = 256;

/// Bytes the tables for `n` terms and `sym_count` symmetric powers need.
pub fn estimate_bytes(n: usize, sym_count: usize) -> u64 {
    let n64 = n as u64;
    SpfSieve::bytes_needed(n)
        + TwoSquaresTable::bytes_needed(n)
        + 8 * (n64 + 1)
        + SERIES_BYTES_PER_TERM * (n64 + 1)
        + sym_count as u64 * SymCoeffTable::bytes_needed(n)
}

/// Everything the analyses read, built once per run.
pub struct Tables {
    pub form: Eigenform,
    pub satake: SatakeTable,
    pub sieve: SpfSieve,
    pub ts: TwoSquaresTable,
    pub hecke: HeckeReport,
    /// First coefficients of the unnormalized series.
    pub head: IntSeries,
    sym: BTreeMap<u32, SymCoeffTable>,
    mem_cap: u64,
    cache_dir: Option<PathBuf>,
}

/// Exact series and verified normalized form for `n` terms.
pub fn build_form(cfg: &RunConfig, n: usize) -> CliResult<(IntSeries, Eigenform, HeckeReport)> {
    let (series, form, tol) = match &cfg.form {
        FormSource::Builtin { label, weight } => {
            let s = cusp_form_series(*weight, n)?;
            let f = normalize(&s, *weight, label)?;
            (s, f, TOL_MULT)
        }
        FormSource::File(path) => {
            let (h, s) = read_coefficients(path)?;
            if let Some(w) = cfg.weight {
                if w != h.weight {
                    return Err(CliError::Usage(format!(
                        "{} has weight {}, --weight says {w}",
                        path.display(),
                        h.weight
                    )));
                }
            }
            if h.trunc < n {
                return Err(CliError::Usage(format!(
                    "{} stops at m = {}, the run needs {n}",
                    path.display(),
                    h.trunc
                )));
            }
            let s = s.truncated(n)?;
            let f = normalize(&s, h.weight, &h.label)?;
            (s, f, LOAD_TOL)
        }
    };
    let report = verify_hecke(&form, tol);
    if !report.passed() {
        return Err(CliError::Check(report.summary()));
    }
    Ok((series, form, report))
}

impl Tables {
    pub fn build(cfg: &RunConfig, n: usize) -> CliResult<Self> {
        check_memory(estimate_bytes(n, cfg.j_list.len()), cfg.mem_cap)?;
        let (series, form, hecke) = build_form(cfg, n)?;
        let head = series.truncated(n.min(REPORT_COEFFS))?;
        drop(series);
        let satake = satake(&form)?;
        let sieve = SpfSieve::with_cap(n, cfg.mem_cap)?;
        let ts = r_sieve(&sieve, n, cfg.mem_cap)?;
        Ok(Tables {
            form,
            satake,
            sieve,
            ts,
            hecke,
            head,
            sym: BTreeMap::new(),
            mem_cap: cfg.mem_cap,
            cache_dir: std::env::var_os(CACHE_ENV).map(PathBuf::from),
        })
    }

    pub fn trunc(&self) -> usize {
        self.sieve.limit()
    }

    /// Builds the `sym^j` table, or reads it from the cache, unless it is
    /// already loaded.
    pub fn prepare(&mut self, j: u32) -> CliResult<()> {
        if !self.sym.contains_key(&j) {
            let n = self.trunc();
            let label = self.form.label().to_string();
            let cached = self
                .cache_dir
                .as_deref()
                .and_then(|d| load_cached(d, &label, j, n));
            let table = match cached {
                Some(t) => t,
                None => {
                    let t = sym_sieve(&self.satake, &self.sieve, j, n, self.mem_cap)?;
                    if let Some(dir) = &self.cache_dir {
                        store_cached(dir, &t)?;
                    }
                    t
                }
            };
            self.sym.insert(j, table);
        }
        Ok(())
    }

    /// A table loaded by [`Tables::prepare`].
    pub fn sym(&self, j: u32) -> &SymCoeffTable {
        &self.sym[&j]
    }
}
