//! Statistics on the subsequence `{ lambda_{sym^j}(m) : m <= x, r(m) > 0 }`:
//! sign changes, first and second moments weighted by `r_2`, log-log
//! exponent fits, and the exponent bookkeeping that turns moment bounds into
//! a sign-change lower bound.
//!
//! A sign change is counted between consecutive nonzero terms of opposite
//! sign; terms within the zero tolerance are skipped, never counted. All
//! scans run in ascending `m` on one thread, so results are reproducible.

use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::arith::{divisor_k, SpfSieve};
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;
use crate::sympow::SymCoeffTable;
use crate::twosquares::TwoSquaresTable;

/// Values with `|lambda(m)| <= 10^exponent * d_{j+1}(m)` count as zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroTol {
    pub exponent: i32,
}

impl Default for ZeroTol {
    fn default() -> Self {
        ZeroTol { exponent: -10 }
    }
}

impl ZeroTol {
    pub fn threshold(&self, sieve: &SpfSieve, j: u32, m: usize) -> f64 {
        10f64.powi(self.exponent) * divisor_k(sieve.factorize(m), j + 1)
    }

    pub fn describe(&self) -> String {
        format!(
            "|lambda| <= 1e{} * d_(j+1)(m) treated as zero",
            self.exponent
        )
    }
}

/// Sign-change counts at a list of checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct SignChangeReport {
    pub j: u32,
    pub checkpoints: Vec<usize>,
    pub counts: Vec<u64>,
    pub nonzero_counts: Vec<u64>,
    /// Slope of log count against log x over checkpoints with a positive count.
    pub fitted_exponent: Option<f64>,
    pub zero_tol_policy: String,
}

fn check_checkpoints(cps: &[usize], limit: usize) -> Result<()> {
    if cps.is_empty() {
        return Err(Error::InvalidArgument("empty checkpoint list".into()));
    }
    if cps[0] < 1 || cps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "checkpoints must be positive and strictly ascending".into(),
        ));
    }
    let last = *cps.last().unwrap();
    if last > limit {
        return Err(Error::OutOfRange(format!(
            "checkpoint {last} exceeds table truncation {limit}"
        )));
    }
    Ok(())
}

fn table_limit(sym: &SymCoeffTable, ts: &TwoSquaresTable, sieve: &SpfSieve) -> usize {
    sym.trunc().min(ts.trunc()).min(sieve.limit())
}

/// Counts sign changes of `lambda_{sym^j}(m)` over represented `m`, recording
/// the running totals at each checkpoint.
pub fn sign_change_report(
    sym: &SymCoeffTable,
    ts: &TwoSquaresTable,
    sieve: &SpfSieve,
    checkpoints: &[usize],
    tol: ZeroTol,
) -> Result<SignChangeReport> {
    check_checkpoints(checkpoints, table_limit(sym, ts, sieve))?;
    let j = sym.j();
    let mut counts = Vec::with_capacity(checkpoints.len());
    let mut nonzero_counts = Vec::with_capacity(checkpoints.len());
    let mut last_positive: Option<bool> = None;
    let (mut changes, mut nonzero) = (0u64, 0u64);
    let mut next = 0;
    for m in 1..=*checkpoints.last().unwrap() {
        if ts.is_represented(m) {
            let v = sym.value(m);
            if v.abs() > tol.threshold(sieve, j, m) {
                nonzero += 1;
                let pos = v > 0.0;
                if last_positive.is_some_and(|prev| prev != pos) {
                    changes += 1;
                }
                last_positive = Some(pos);
            }
        }
        if m == checkpoints[next] {
            counts.push(changes);
            nonzero_counts.push(nonzero);
            next += 1;
        }
    }
    let pts: Vec<(f64, f64)> = checkpoints
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&x, &c)| (x as f64, c as f64))
        .collect();
    Ok(SignChangeReport {
        j,
        checkpoints: checkpoints.to_vec(),
        counts,
        nonzero_counts,
        fitted_exponent: fit_exponent(&pts).ok(),
        zero_tol_policy: tol.describe(),
    })
}

/// Sign changes up to a single `x`; returns `(sign_changes, nonzero_terms)`.
pub fn sign_changes(
    sym: &SymCoeffTable,
    ts: &TwoSquaresTable,
    sieve: &SpfSieve,
    x: usize,
    tol: ZeroTol,
) -> Result<(u64, u64)> {
    let r = sign_change_report(sym, ts, sieve, &[x], tol)?;
    Ok((r.counts[0], r.nonzero_counts[0]))
}

/// Sign changes of the weighted sequence `lambda_{sym^j}(m) r_2(m)` over all
/// `m <= x`. Since `r_2 >= 0` this must agree with [`sign_changes`].
pub fn weighted_sign_changes(
    sym: &SymCoeffTable,
    ts: &TwoSquaresTable,
    sieve: &SpfSieve,
    x: usize,
    tol: ZeroTol,
) -> Result<u64> {
    check_checkpoints(&[x], table_limit(sym, ts, sieve))?;
    let mut prev = 0.0f64;
    let mut changes = 0;
    for m in 1..=x {
        let w = 4.0 * ts.r(m) as f64;
        let h = sym.value(m) * w;
        // r_2 scales the zero threshold with the value
        if h.abs() <= tol.threshold(sieve, sym.j(), m) * w || w == 0.0 {
            continue;
        }
        if prev * h < 0.0 {
            changes += 1;
        }
        prev = h;
    }
    Ok(changes)
}

/// `S_1(x) = sum lambda r_2` and `S_2(x) = sum lambda^2 r_2` at checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub j: u32,
    pub checkpoints: Vec<usize>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    /// `S_2(x_max) / x_max`, the empirical leading constant.
    pub s2_slope: f64,
    /// Growth exponent of `|S_1|` over checkpoints where it is nonzero.
    pub s1_exponent: Option<f64>,
}

impl MomentReport {
    pub fn s2_over_x(&self) -> impl Iterator<Item = f64> + '_ {
        self.checkpoints
            .iter()
            .zip(&self.s2)
            .map(|(&x, &s)| s / x as f64)
    }
}

pub fn partial_sums(
    sym: &SymCoeffTable,
    ts: &TwoSquaresTable,
    checkpoints: &[usize],
) -> Result<MomentReport> {
    check_checkpoints(checkpoints, sym.trunc().min(ts.trunc()))?;
    let mut acc1 = CompensatedSum::new();
    let mut acc2 = CompensatedSum::new();
    let (mut s1, mut s2) = (Vec::new(), Vec::new());
    let mut next = 0;
    for m in 1..=*checkpoints.last().unwrap() {
        let r = ts.r(m);
        if r > 0 {
            let w = 4.0 * r as f64;
            let v = sym.value(m);
            acc1.add(v * w);
            acc2.add(v * v * w);
        }
        if m == checkpoints[next] {
            s1.push(acc1.value());
            s2.push(acc2.value());
            next += 1;
        }
    }
    let x_max = *checkpoints.last().unwrap() as f64;
    let pts: Vec<(f64, f64)> = checkpoints
        .iter()
        .zip(&s1)
        .filter(|(_, s)| s.abs() > 0.0)
        .map(|(&x, s)| (x as f64, s.abs()))
        .collect();
    Ok(MomentReport {
        j: sym.j(),
        checkpoints: checkpoints.to_vec(),
        s2_slope: s2.last().unwrap() / x_max,
        s1_exponent: fit_exponent(&pts).ok(),
        s1,
        s2,
    })
}

/// Largest value of `|lambda_{sym^j}(m)| r_2(m) / (4 d_{j+1}(m) d(m))` over
/// `m <= x`, with its location. The ratio is at most 1 for unitary Satake
/// parameters, an explicit form of the `m^epsilon` bound.
pub fn pointwise_bound_ratio(
    sym: &SymCoeffTable,
    ts: &TwoSquaresTable,
    sieve: &SpfSieve,
    x: usize,
) -> Result<(f64, usize)> {
    check_checkpoints(&[x], table_limit(sym, ts, sieve))?;
    let mut best = (0.0, 1);
    for m in 1..=x {
        let r = ts.r(m);
        if r == 0 {
            continue;
        }
        let f: Vec<(u32, u32)> = sieve.factorize(m).collect();
        let bound = 4.0 * divisor_k(f.iter().copied(), sym.j() + 1) * divisor_k(f, 2);
        let ratio = sym.value(m).abs() * 4.0 * r as f64 / bound;
        if ratio > best.0 {
            best = (ratio, m);
        }
    }
    Ok(best)
}

/// `(21 j^2 + 42 j + 19) / (21 j^2 + 42 j + 40)`.
pub fn gamma_j(j: u32) -> Ratio<i64> {
    let j = j as i64;
    let base = 21 * j * j + 42 * j;
    Ratio::new(base + 19, base + 40)
}

/// Exponents feeding the sign-change lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentLedger {
    pub j: u32,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Ratio<i64>,
    /// Open interval of admissible `delta_j`.
    pub delta_range: (f64, f64),
}

impl ExponentLedger {
    pub fn gamma_f64(&self) -> f64 {
        self.gamma.to_f64().unwrap()
    }

    pub fn gamma_string(&self) -> String {
        format!("{}/{}", self.gamma.numer(), self.gamma.denom())
    }
}

pub fn exponent_ledger(j: u32, eps: f64) -> Result<ExponentLedger> {
    if j < 2 {
        return Err(Error::OutOfScope(format!(
            "j = {j}; the sign-change bound needs j >= 2"
        )));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} outside (0, 0.5)"
        )));
    }
    let alpha = eps;
    let beta = j as f64 / (j as f64 + 2.0) + eps;
    let gamma = gamma_j(j);
    let lower = (alpha + beta).max(gamma.to_f64().unwrap());
    Ok(ExponentLedger {
        j,
        eps,
        alpha,
        beta,
        gamma,
        delta_range: (lower, 1.0),
    })
}

/// Ordinary least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidArgument(
            "log-log fit needs positive x and y".into(),
        ));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// One row of the lower-bound check at a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremRow {
    pub x: usize,
    pub count: u64,
    pub nonzero: u64,
    /// `1 - (gamma_j + margin)`
    pub threshold_exponent: f64,
    /// `ln count / ln x`; `-inf` for a zero count.
    pub witness_exponent: f64,
    pub pass: bool,
}

/// Passes at `x` when `count(x) >= x^{1 - (gamma_j + margin)}`.
pub fn theorem_check(
    report: &SignChangeReport,
    ledger: &ExponentLedger,
    margin: f64,
) -> Result<Vec<TheoremRow>> {
    if !(margin > 0.0) {
        return Err(Error::InvalidArgument("margin must be positive".into()));
    }
    let expo = 1.0 - (ledger.gamma_f64() + margin);
    Ok(report
        .checkpoints
        .iter()
        .zip(&report.counts)
        .zip(&report.nonzero_counts)
        .map(|((&x, &count), &nonzero)| {
            let xf = x as f64;
            TheoremRow {
                x,
                count,
                nonzero,
                threshold_exponent: expo,
                witness_exponent: (count as f64).ln() / xf.ln(),
                pass: count as f64 >= xf.powf(expo),
            }
        })
        .collect())
}

/// Powers of two from 2^10 to 2^20 together with 10^4, 10^5, 10^6, keeping
/// those not above `x_max` and always ending at `x_max`.
pub fn default_checkpoints(x_max: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (10..=20)
        .map(|e| 1usize << e)
        .chain([10_000, 100_000, 1_000_000])
        .filter(|&x| x <= x_max)
        .collect();
    v.push(x_max);
    v.sort_unstable();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::DEFAULT_MEM_CAP;
    use crate::twosquares::r_sieve;
    use proptest::prelude::*;

    fn tables(vals: Vec<f64>, j: u32) -> (SymCoeffTable, TwoSquaresTable, SpfSieve) {
        let n = vals.len() - 1;
        let sv = SpfSieve::new(n);
        let ts = r_sieve(&sv, n, DEFAULT_MEM_CAP).unwrap();
        (
            SymCoeffTable::from_values(j, "synthetic", vals).unwrap(),
            ts,
            sv,
        )
    }

    fn naive(sym: &SymCoeffTable, ts: &TwoSquaresTable, sv: &SpfSieve, x: usize) -> u64 {
        let seq: Vec<f64> = (1..=x)
            .filter(|&m| ts.r(m) > 0)
            .filter(|&m| sym.value(m).abs() > ZeroTol::default().threshold(sv, sym.j(), m))
            .map(|m| sym.value(m))
            .collect();
        seq.windows(2).filter(|w| w[0] * w[1] < 0.0).count() as u64
    }

    #[test]
    fn constant_table_has_no_changes() {
        let (s, t, sv) = tables(vec![1.0; 200], 2);
        assert_eq!(
            sign_changes(&s, &t, &sv, 199, ZeroTol::default())
                .unwrap()
                .0,
            0
        );
    }

    #[test]
    fn constructed_alternation() {
        // m = 1, 2, 4 are sums of two squares; 3 is not
        let (s, t, sv) = tables(vec![0.0, 1.0, -1.0, 5.0, 1.0], 2);
        let (c, nz) = sign_changes(&s, &t, &sv, 4, ZeroTol::default()).unwrap();
        assert_eq!((c, nz), (2, 3));
        assert_eq!(
            weighted_sign_changes(&s, &t, &sv, 4, ZeroTol::default()).unwrap(),
            2
        );
    }

    #[test]
    fn zeros_are_skipped() {
        // +, 0, -, within-tolerance, -, + over represented indices
        let vals = vec![0.0, 1.0, 0.0, 9.0, -2.0, 1e-13, 0.0, 0.0, -1.0, 3.0];
        let (s, t, sv) = tables(vals, 2);
        let (c, nz) = sign_changes(&s, &t, &sv, 9, ZeroTol::default()).unwrap();
        assert_eq!(c, 2);
        assert_eq!(nz, 4);
        assert_eq!(c, naive(&s, &t, &sv, 9));
    }

    #[test]
    fn checkpoint_errors() {
        let (s, t, sv) = tables(vec![1.0; 50], 2);
        assert!(sign_change_report(&s, &t, &sv, &[], ZeroTol::default()).is_err());
        assert!(sign_change_report(&s, &t, &sv, &[10, 5], ZeroTol::default()).is_err());
        assert!(matches!(
            sign_changes(&s, &t, &sv, 50, ZeroTol::default()),
            Err(Error::OutOfRange(_))
        ));
        assert!(partial_sums(&s, &t, &[]).is_err());
    }

    #[test]
    fn moments_of_constant_table_count_lattice_points() {
        let n = 100_000;
        let (s, t, _) = tables(vec![1.0; n + 1], 0);
        let rep = partial_sums(&s, &t, &[1000, 10_000, n]).unwrap();
        let direct: u64 = (1..=n).map(|m| 4 * t.r(m) as u64).sum();
        assert_eq!(rep.s2[2], direct as f64);
        assert_eq!(rep.s1, rep.s2);
        assert!((rep.s2_slope - std::f64::consts::PI).abs() < 0.01);
    }

    #[test]
    fn ledger_values() {
        assert_eq!(gamma_j(2), Ratio::new(187, 208));
        assert_eq!(gamma_j(3), Ratio::new(334, 355));
        let l = exponent_ledger(2, 0.05).unwrap();
        assert!((l.alpha + l.beta - 0.6).abs() < 1e-15);
        assert_eq!(l.delta_range, (187.0 / 208.0, 1.0));
        assert_eq!(l.gamma_string(), "187/208");
        assert!(matches!(
            exponent_ledger(1, 0.05),
            Err(Error::OutOfScope(_))
        ));
        assert!(exponent_ledger(2, 0.0).is_err());
        assert!(exponent_ledger(2, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn gamma_increasing_in_unit_interval(j in 2u32..500) {
            let g = gamma_j(j);
            prop_assert!(g > Ratio::new(0, 1) && g < Ratio::new(1, 1));
            prop_assert!(gamma_j(j + 1) > g);
        }

        #[test]
        fn gamma_dominates_small_degrees(j in 2u32..=7, eps in 1e-6f64..=0.1) {
            let l = exponent_ledger(j, eps).unwrap();
            prop_assert!(l.gamma_f64() > l.alpha + l.beta);
            prop_assert_eq!(l.delta_range.0, l.gamma_f64());
        }

        #[test]
        fn gamma_dominates_when_eps_small(j in 2u32..2000, frac in 0.01f64..0.99) {
            let jf = j as f64;
            let room = 2.0 / (jf + 2.0) - 21.0 / (21.0 * jf * jf + 42.0 * jf + 40.0);
            let eps = (frac * room / 2.0).min(0.49);
            let l = exponent_ledger(j, eps).unwrap();
            prop_assert!(l.gamma_f64() > l.alpha + l.beta);
        }
    }

    #[test]
    fn ledger_beyond_degree_seven_is_honest() {
        let l = exponent_ledger(8, 0.1).unwrap();
        assert!(l.alpha + l.beta > l.gamma_f64());
        assert_eq!(l.delta_range.0, l.alpha + l.beta);
    }

    #[test]
    fn fit_examples() {
        assert!((fit_exponent(&[(10.0, 100.0), (100.0, 1e4)]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(
            fit_exponent(&[(3.0, 7.0), (30.0, 7.0), (300.0, 7.0)]).unwrap(),
            0.0
        );
        let s = fit_exponent(&[(10.0, 10.0), (100.0, 90.0), (1000.0, 1100.0)]).unwrap();
        assert!((s - 1.02070).abs() < 1e-4);
        assert!(fit_exponent(&[(1.0, 1.0)]).is_err());
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
        assert!(fit_exponent(&[(-1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn theorem_thresholds() {
        let ledger = exponent_ledger(2, 0.1).unwrap();
        let rep = SignChangeReport {
            j: 2,
            checkpoints: vec![10, 10_000, 20_000],
            counts: vec![0, 2, 3],
            nonzero_counts: vec![1, 10, 10],
            fitted_exponent: None,
            zero_tol_policy: String::new(),
        };
        let rows = theorem_check(&rep, &ledger, 0.01).unwrap();
        assert!((rows[0].threshold_exponent - (1.0 - 187.0 / 208.0 - 0.01)).abs() < 1e-15);
        assert!((10f64.powf(rows[0].threshold_exponent) - 1.2330).abs() < 1e-3);
        assert!(!rows[0].pass);
        assert!(rows[0].witness_exponent.is_infinite());
        // threshold at 10^4 is about 2.30
        assert!(!rows[1].pass);
        assert!(rows[2].pass);
        assert!(theorem_check(&rep, &ledger, 0.0).is_err());
    }

    #[test]
    fn checkpoints_default() {
        let c = default_checkpoints(1_000_000);
        assert_eq!(c.first(), Some(&1024));
        assert_eq!(c.last(), Some(&1_000_000));
        assert!(c.contains(&10_000) && c.contains(&100_000) && c.contains(&524_288));
        assert!(!c.contains(&1_048_576));
        assert_eq!(default_checkpoints(500), vec![500]);
    }
}
