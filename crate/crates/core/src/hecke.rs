//! Normalized Hecke eigenvalues, Satake angles, and checks of the Hecke
//! relations.
//!
//! An [`Eigenform`] holds `lambda(m) = a(m) / m^((k-1)/2)` for `1 <= m <= N`,
//! where `a(m)` are the integer Fourier coefficients. The Satake angle
//! `theta_p` in `[0, pi]` parameterizes the unit-modulus roots
//! `alpha = e^{i theta}`, `beta = e^{-i theta}` with `alpha + beta = lambda(p)`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{divisor_k, SpfSieve};
use crate::error::{Error, Result};
use crate::qseries::IntSeries;

/// Slack allowed above |lambda(p)| = 2 before input is rejected.
pub const DELIGNE_SLACK: f64 = 1e-9;

/// Default tolerance for the coprime multiplicativity check.
pub const TOL_MULT: f64 = 1e-9;

/// Tolerance applied when ingesting a coefficient file.
pub const LOAD_TOL: f64 = 1e-8;

/// Smallest truncation accepted from a coefficient file.
pub const MIN_FILE_TRUNC: usize = 100;

#[derive(Clone, Debug)]
pub struct Eigenform {
    label: String,
    weight: u32,
    // indexed by m; slot 0 unused
    lam: Vec<f64>,
}

fn check_weight(k: u32) -> Result<()> {
    if !k.is_multiple_of(2) || k < 12 {
        return Err(Error::InvalidArgument(format!(
            "weight {k}: expected an even integer >= 12"
        )));
    }
    Ok(())
}

impl Eigenform {
    /// Wraps precomputed eigenvalues; `lam[0]` is ignored and `lam[1]` must be 1.
    pub fn from_values(label: impl Into<String>, weight: u32, mut lam: Vec<f64>) -> Result<Self> {
        check_weight(weight)?;
        if lam.len() < 2 {
            return Err(Error::InvalidArgument("need at least lambda(1)".into()));
        }
        if lam[1] != 1.0 {
            return Err(Error::NotNormalized(lam[1].to_string()));
        }
        lam[0] = 0.0;
        Ok(Eigenform {
            label: label.into(),
            weight,
            lam,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn trunc(&self) -> usize {
        self.lam.len() - 1
    }

    #[inline]
    pub fn lambda(&self, m: usize) -> f64 {
        self.lam[m]
    }

    /// Eigenvalues indexed by `m`, with a zero placeholder at index 0.
    pub fn table(&self) -> &[f64] {
        &self.lam
    }

    /// Same form with one entry overwritten; used to build corrupted inputs.
    pub fn with_value(mut self, m: usize, v: f64) -> Self {
        self.lam[m] = v;
        self
    }
}

// ln|x| for integers too large for an f64
fn ln_abs(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x.abs() >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn normalize_one(a: &BigInt, m: usize, k: u32) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let mf = m as f64;
    let half = (k - 2) / 2;
    let scale = mf.powi(half as i32);
    match a.to_f64() {
        Some(af) if af.is_finite() && scale.is_finite() => af / scale / mf.sqrt(),
        _ => {
            let sign = if a.sign() == Sign::Minus { -1.0 } else { 1.0 };
            sign * (ln_abs(a) - (k as f64 - 1.0) / 2.0 * mf.ln()).exp()
        }
    }
}

/// Converts an integer q-expansion of weight `k` into normalized eigenvalues.
pub fn normalize(series: &IntSeries, k: u32, label: &str) -> Result<Eigenform> {
    check_weight(k)?;
    if series.trunc() < 1 {
        return Err(Error::InvalidArgument("series has no q^1 term".into()));
    }
    if !series.coeff(1).is_one() {
        return Err(Error::NotNormalized(series.coeff(1).to_string()));
    }
    let mut lam = Vec::with_capacity(series.trunc() + 1);
    lam.push(0.0);
    for m in 1..=series.trunc() {
        lam.push(normalize_one(series.coeff(m), m, k));
    }
    Ok(Eigenform {
        label: label.to_string(),
        weight: k,
        lam,
    })
}

/// Satake angles `theta_p` for every prime `p <= N`.
#[derive(Clone, Debug)]
pub struct SatakeTable {
    label: String,
    primes: Vec<u32>,
    theta: Vec<f64>,
}

impl SatakeTable {
    /// Builds a table from explicit angles; primes must be ascending.
    pub fn from_angles(
        label: impl Into<String>,
        primes: Vec<u32>,
        theta: Vec<f64>,
    ) -> Result<Self> {
        if primes.len() != theta.len() {
            return Err(Error::InvalidArgument(
                "primes and angles differ in length".into(),
            ));
        }
        if primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "primes must be strictly ascending".into(),
            ));
        }
        if let Some(t) = theta
            .iter()
            .find(|t| !(0.0..=std::f64::consts::PI).contains(*t))
        {
            return Err(Error::InvalidArgument(format!("angle {t} outside [0, pi]")));
        }
        Ok(SatakeTable {
            label: label.into(),
            primes,
            theta,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    /// Largest prime covered, or 0 for an empty table.
    pub fn max_prime(&self) -> u32 {
        self.primes.last().copied().unwrap_or(0)
    }

    pub fn theta(&self, p: u32) -> Option<f64> {
        self.primes.binary_search(&p).ok().map(|i| self.theta[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.primes.iter().copied().zip(self.theta.iter().copied())
    }
}

/// Angle with `2 cos(theta) = lambda`, clamping rounding-level excursions
/// past +-2 and rejecting anything larger.
pub fn satake_angle(p: u32, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda.abs() > 2.0 + DELIGNE_SLACK {
        return Err(Error::DeligneViolation {
            p: p as u64,
            value: lambda.abs(),
        });
    }
    Ok((lambda / 2.0).clamp(-1.0, 1.0).acos())
}

pub fn satake(form: &Eigenform) -> Result<SatakeTable> {
    let sieve = SpfSieve::new(form.trunc());
    let mut primes = Vec::new();
    let mut theta = Vec::new();
    for p in sieve.primes() {
        theta.push(satake_angle(p, form.lambda(p as usize))?);
        primes.push(p);
    }
    Ok(SatakeTable {
        label: form.label.clone(),
        primes,
        theta,
    })
}

/// Worst violation of each Hecke relation over the table.
#[derive(Clone, Debug, PartialEq)]
pub struct HeckeReport {
    pub trunc: usize,
    pub tol: f64,
    /// max |lambda(m) - lambda(p^e) lambda(m / p^e)| over m with two or more prime factors
    pub multiplicativity: f64,
    pub multiplicativity_at: usize,
    /// max |lambda(p^{e+1}) - lambda(p) lambda(p^e) + lambda(p^{e-1})|
    pub recurrence: f64,
    pub recurrence_at: usize,
    /// max(|lambda(m)| - d(m), 0)
    pub deligne: f64,
    pub deligne_at: usize,
}

impl HeckeReport {
    pub fn passed(&self) -> bool {
        self.multiplicativity <= self.tol && self.recurrence <= self.tol && self.deligne <= self.tol
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "hecke verification to N = {} at tol {:e}",
            self.trunc, self.tol
        );
        let _ = writeln!(
            s,
            "  multiplicativity  max {:.3e} (m = {})",
            self.multiplicativity, self.multiplicativity_at
        );
        let _ = writeln!(
            s,
            "  prime recurrence  max {:.3e} (m = {})",
            self.recurrence, self.recurrence_at
        );
        let _ = writeln!(
            s,
            "  divisor bound     max {:.3e} (m = {})",
            self.deligne, self.deligne_at
        );
        let _ = write!(
            s,
            "  result: {}",
            if self.passed() { "pass" } else { "FAIL" }
        );
        s
    }
}

/// Checks coprime multiplicativity, the prime-power recurrence, and the
/// bound |lambda(m)| <= d(m). Multiplicativity is checked by splitting off the
/// smallest prime power of each `m`; by induction that covers all coprime pairs.
pub fn verify_hecke(form: &Eigenform, tol: f64) -> HeckeReport {
    let n = form.trunc();
    let sieve = SpfSieve::new(n);
    let lam = form.table();
    let mut rep = HeckeReport {
        trunc: n,
        tol,
        multiplicativity: 0.0,
        multiplicativity_at: 0,
        recurrence: 0.0,
        recurrence_at: 0,
        deligne: 0.0,
        deligne_at: 0,
    };
    for m in 2..=n {
        let p = sieve.smallest_factor(m) as usize;
        let mut pe = 1;
        let mut e = 0;
        let mut rest = m;
        while rest % p == 0 {
            rest /= p;
            pe *= p;
            e += 1;
        }
        if rest > 1 {
            let err = (lam[m] - lam[pe] * lam[rest]).abs();
            if err > rep.multiplicativity || err.is_nan() {
                rep.multiplicativity = if err.is_nan() { f64::INFINITY } else { err };
                rep.multiplicativity_at = m;
            }
        } else if e >= 2 {
            let prev2 = if e == 2 { 1.0 } else { lam[pe / (p * p)] };
            let err = (lam[m] - lam[p] * lam[pe / p] + prev2).abs();
            if err > rep.recurrence || err.is_nan() {
                rep.recurrence = if err.is_nan() { f64::INFINITY } else { err };
                rep.recurrence_at = m;
            }
        }
        let excess = lam[m].abs() - divisor_k(sieve.factorize(m), 2);
        if excess > rep.deligne || excess.is_nan() {
            rep.deligne = if excess.is_nan() {
                f64::INFINITY
            } else {
                excess
            };
            rep.deligne_at = m;
        }
    }
    rep
}

/// Header of a coefficient file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffHeader {
    pub label: String,
    pub weight: u32,
    pub trunc: usize,
}

/// Writes `# eigenform <label> weight=<k> trunc=<N>` then `m a(m)` for `m = 1..=N`.
pub fn write_coefficients<W: Write>(
    mut out: W,
    label: &str,
    weight: u32,
    series: &IntSeries,
) -> std::io::Result<()> {
    let n = series.trunc();
    writeln!(out, "# eigenform {label} weight={weight} trunc={n}")?;
    for m in 1..=n {
        writeln!(out, "{m} {}", series.coeff(m))?;
    }
    Ok(())
}

pub fn save_coefficients(path: &Path, label: &str, weight: u32, series: &IntSeries) -> Result<()> {
    let mut buf = Vec::new();
    write_coefficients(&mut buf, label, weight, series)?;
    fs::write(path, buf)?;
    Ok(())
}

fn parse_header(line: &str, path: &Path) -> Result<CoeffHeader> {
    let err = |msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: msg.to_string(),
    };
    let mut parts = line.split_whitespace();
    if parts.next() != Some("#") || parts.next() != Some("eigenform") {
        return Err(err("expected '# eigenform <label> weight=<k> trunc=<N>'"));
    }
    let label = parts
        .next()
        .ok_or_else(|| err("missing label"))?
        .to_string();
    let weight = parts
        .next()
        .and_then(|s| s.strip_prefix("weight="))
        .and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(|| err("missing or malformed weight=<k>"))?;
    let trunc = parts
        .next()
        .and_then(|s| s.strip_prefix("trunc="))
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| err("missing or malformed trunc=<N>"))?;
    if parts.next().is_some() {
        return Err(err("trailing fields in header"));
    }
    Ok(CoeffHeader {
        label,
        weight,
        trunc,
    })
}

/// Parses a coefficient file without normalizing or verifying it.
pub fn read_coefficients(path: &Path) -> Result<(CoeffHeader, IntSeries)> {
    let text = fs::read_to_string(path)?;
    let err = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        msg,
    };
    let mut lines = text.lines();
    let header = parse_header(lines.next().unwrap_or(""), path)?;
    check_weight(header.weight)?;
    if header.trunc < MIN_FILE_TRUNC {
        return Err(Error::InvalidArgument(format!(
            "trunc={} is below the minimum {MIN_FILE_TRUNC}",
            header.trunc
        )));
    }
    let mut coeffs = Vec::with_capacity(header.trunc + 1);
    coeffs.push(BigInt::zero());
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split_whitespace();
        let m: usize = f
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(lineno, "malformed index".into()))?;
        let a: BigInt = f
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(lineno, "malformed coefficient".into()))?;
        if f.next().is_some() {
            return Err(err(lineno, "trailing fields".into()));
        }
        let expected = coeffs.len();
        if m > header.trunc {
            return Err(err(
                lineno,
                format!("index {m} exceeds trunc={}", header.trunc),
            ));
        }
        if m < expected {
            return Err(err(lineno, format!("duplicate or descending index {m}")));
        }
        if m > expected {
            return Err(err(
                lineno,
                format!("gap: expected index {expected}, found {m}"),
            ));
        }
        coeffs.push(a);
    }
    if coeffs.len() != header.trunc + 1 {
        return Err(err(
            text.lines().count(),
            format!(
                "file ends at index {}, header says trunc={}",
                coeffs.len() - 1,
                header.trunc
            ),
        ));
    }
    Ok((header, IntSeries::new(coeffs)?))
}

/// Reads, normalizes, and verifies an externally tabulated eigenform.
pub fn load_coefficients(path: &Path) -> Result<Eigenform> {
    let (header, series) = read_coefficients(path)?;
    let form = normalize(&series, header.weight, &header.label)?;
    satake(&form)?;
    let rep = verify_hecke(&form, LOAD_TOL);
    if !rep.passed() {
        return Err(Error::HeckeVerification(rep.summary()));
    }
    Ok(form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::delta_series;
    use std::f64::consts::PI;

    fn delta_form(n: usize) -> Eigenform {
        normalize(&delta_series(n).unwrap(), 12, "delta").unwrap()
    }

    #[test]
    fn normalize_delta() {
        let f = delta_form(100);
        assert_eq!(f.lambda(1), 1.0);
        assert!((f.lambda(2) + 0.5303300859).abs() < 1e-10);
        assert_eq!(f.lambda(4), -0.71875);
    }

    #[test]
    fn normalize_rejects() {
        let s = IntSeries::from_i64(&[0, 2, 3]).unwrap();
        assert!(matches!(
            normalize(&s, 12, "x"),
            Err(Error::NotNormalized(_))
        ));
        let s = IntSeries::from_i64(&[0, 1, 3]).unwrap();
        assert!(matches!(
            normalize(&s, 13, "x"),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            normalize(&s, 10, "x"),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn log_space_normalization_matches_direct() {
        let x = BigInt::from(3u32).pow(30);
        let v = normalize_one(&x, 7, 12);
        assert!((v / (x.to_f64().unwrap() / 7f64.powf(5.5)) - 1.0).abs() < 1e-14);
        // a(m) beyond f64 range forces the log-space route
        let big = BigInt::from(7u32).pow(400);
        let v = normalize_one(&big, 10, 800);
        let expect = (400.0 * 7f64.ln() - 399.5 * 10f64.ln()).exp();
        assert!((v / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn satake_boundaries() {
        assert_eq!(satake_angle(2, 2.0).unwrap(), 0.0);
        assert!((satake_angle(2, 0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((satake_angle(2, -0.5303300859).unwrap() - 1.8391714).abs() < 1e-7);
        assert_eq!(satake_angle(2, 2.0 + 1e-10).unwrap(), 0.0);
        assert!(matches!(
            satake_angle(3, 2.1),
            Err(Error::DeligneViolation { .. })
        ));
    }

    #[test]
    fn satake_round_trip() {
        let f = delta_form(5000);
        let st = satake(&f).unwrap();
        assert_eq!(st.primes().len(), 669);
        for (p, t) in st.iter() {
            assert!((2.0 * t.cos() - f.lambda(p as usize)).abs() < 1e-12);
        }
    }

    #[test]
    fn prime_power_closed_form() {
        let f = delta_form(10_000);
        let st = satake(&f).unwrap();
        for (p, t) in st.iter() {
            if t.sin().abs() < 1e-6 {
                continue;
            }
            let mut q = p as usize;
            let mut nu = 1;
            while q <= 10_000 {
                let closed = ((nu + 1) as f64 * t).sin() / t.sin();
                assert!((f.lambda(q) - closed).abs() < 1e-8, "p^nu = {q}");
                q *= p as usize;
                nu += 1;
            }
        }
    }

    #[test]
    fn verify_delta() {
        let f = delta_form(10_000);
        let rep = verify_hecke(&f, 1e-9);
        assert!(rep.passed(), "{}", rep.summary());
        // lambda(4) = lambda(2)^2 - 1
        assert_eq!(f.lambda(4), f.lambda(2).powi(2) - 1.0);
    }

    #[test]
    fn verify_detects_corruption() {
        let f = delta_form(1000);
        let expect = (f.lambda(2) * f.lambda(3)).abs();
        let bad = f.with_value(6, 0.0);
        let rep = verify_hecke(&bad, 1e-9);
        assert!(!rep.passed());
        assert_eq!(rep.multiplicativity_at, 6);
        assert!((rep.multiplicativity - expect).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip_and_rejections() {
        let dir = std::env::temp_dir().join(format!("symsign-hecke-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let s = delta_series(1000).unwrap();
        let path = dir.join("delta.txt");
        save_coefficients(&path, "delta", 12, &s).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().nth(2), Some("2 -24"));
        let f = load_coefficients(&path).unwrap();
        assert_eq!(f.lambda(1), 1.0);
        assert_eq!(f.trunc(), 1000);
        let (h, back) = read_coefficients(&path).unwrap();
        let mut again = Vec::new();
        write_coefficients(&mut again, &h.label, h.weight, &back).unwrap();
        assert_eq!(String::from_utf8(again).unwrap(), text);

        let odd = text.replacen("weight=12", "weight=13", 1);
        fs::write(&path, &odd).unwrap();
        assert!(matches!(
            load_coefficients(&path),
            Err(Error::InvalidArgument(_))
        ));

        let bad = text.replacen("\n2 -24\n", "\n2 200\n", 1);
        fs::write(&path, &bad).unwrap();
        assert!(matches!(
            load_coefficients(&path),
            Err(Error::DeligneViolation { p: 2, .. })
        ));

        let gap = text.replacen("\n3 252\n", "\n", 1);
        fs::write(&path, &gap).unwrap();
        match load_coefficients(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }

        let dup = text.replacen("\n3 252\n", "\n2 -24\n3 252\n", 1);
        fs::write(&path, &dup).unwrap();
        assert!(matches!(
            load_coefficients(&path),
            Err(Error::Parse { line: 4, .. })
        ));

        let short = delta_series(50).unwrap();
        save_coefficients(&path, "delta", 12, &short).unwrap();
        assert!(matches!(
            load_coefficients(&path),
            Err(Error::InvalidArgument(_))
        ));

        let big_m = text.replacen("trunc=1000", "trunc=999", 1);
        fs::write(&path, &big_m).unwrap();
        assert!(matches!(load_coefficients(&path), Err(Error::Parse { .. })));
        fs::remove_dir_all(&dir).unwrap();
    }
}
