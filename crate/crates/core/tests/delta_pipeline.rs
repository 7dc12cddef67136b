//! End-to-end checks on the discriminant form at x up to 10^6.

use std::sync::OnceLock;

use symsign::analysis::{
    default_checkpoints, partial_sums, pointwise_bound_ratio, sign_change_report, sign_changes,
    weighted_sign_changes, ZeroTol,
};
use symsign::arith::{SpfSieve, DEFAULT_MEM_CAP};
use symsign::hecke::{normalize, satake, Eigenform, SatakeTable};
use symsign::lvalues::{c_constant, stabilization};
use symsign::qseries::delta_series;
use symsign::sympow::{sym_sieve, SymCoeffTable};
use symsign::twosquares::{r_sieve, TwoSquaresTable};

const N: usize = 1_000_000;

struct Setup {
    form: Eigenform,
    satake: SatakeTable,
    sieve: SpfSieve,
    ts: TwoSquaresTable,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let form = normalize(&delta_series(N).unwrap(), 12, "delta").unwrap();
        let satake = satake(&form).unwrap();
        let sieve = SpfSieve::new(N);
        let ts = r_sieve(&sieve, N, DEFAULT_MEM_CAP).unwrap();
        Setup {
            form,
            satake,
            sieve,
            ts,
        }
    })
}

fn table(j: u32) -> SymCoeffTable {
    let s = setup();
    sym_sieve(&s.satake, &s.sieve, j, N, DEFAULT_MEM_CAP).unwrap()
}

// independent recount: collect the nonzero represented values, then compare neighbours
fn naive_count(sym: &SymCoeffTable, s: &Setup, x: usize) -> u64 {
    let tol = ZeroTol::default();
    let kept: Vec<f64> = (1..=x)
        .filter(|&m| s.ts.r(m) > 0)
        .map(|m| (m, sym.value(m)))
        .filter(|&(m, v)| v.abs() > tol.threshold(&s.sieve, sym.j(), m))
        .map(|(_, v)| v)
        .collect();
    kept.windows(2).filter(|w| w[0] * w[1] < 0.0).count() as u64
}

#[test]
fn second_moment_grows_linearly() {
    let rep = partial_sums(&table(2), &setup().ts, &[100_000, N]).unwrap();
    let a = rep.s2[0] / 1e5;
    let b = rep.s2[1] / 1e6;
    assert!((a - b).abs() / b <= 0.15, "{a} vs {b}");
    assert!(rep.s2.windows(2).all(|w| w[0] > 0.0 && w[1] >= w[0]));
}

#[test]
fn first_moment_cancels_at_top() {
    let rep = partial_sums(&table(2), &setup().ts, &[N]).unwrap();
    assert!(rep.s1[0].abs() <= 10f64.powf(3.6), "{}", rep.s1[0]);
}

#[test]
fn counters_agree_with_naive_recount() {
    let s = setup();
    for j in 0..=4 {
        let sym = table(j);
        for x in [1, 2, 10, 99, 1000, 4321, 10_000] {
            let (c, _) = sign_changes(&sym, &s.ts, &s.sieve, x, ZeroTol::default()).unwrap();
            assert_eq!(c, naive_count(&sym, s, x), "j = {j}, x = {x}");
            let w = weighted_sign_changes(&sym, &s.ts, &s.sieve, x, ZeroTol::default()).unwrap();
            assert_eq!(c, w, "weighted counter, j = {j}, x = {x}");
        }
    }
}

#[test]
fn report_invariants_and_prefix_consistency() {
    let s = setup();
    let sym = table(3);
    let cps = default_checkpoints(N);
    let full = sign_change_report(&sym, &s.ts, &s.sieve, &cps, ZeroTol::default()).unwrap();
    assert!(full.counts.windows(2).all(|w| w[0] <= w[1]));
    for (c, nz) in full.counts.iter().zip(&full.nonzero_counts) {
        assert!(*nz == 0 || c < nz);
    }
    let short = sign_change_report(&sym, &s.ts, &s.sieve, &cps[..4], ZeroTol::default()).unwrap();
    assert_eq!(short.counts[..], full.counts[..4]);
    let m_full = partial_sums(&sym, &s.ts, &cps).unwrap();
    let m_short = partial_sums(&sym, &s.ts, &cps[..4]).unwrap();
    assert_eq!(m_short.s1[..], m_full.s1[..4]);
    assert_eq!(m_short.s2[..], m_full.s2[..4]);
}

#[test]
fn pointwise_divisor_bound() {
    let s = setup();
    for j in [0, 2, 3, 4] {
        let (ratio, _) = pointwise_bound_ratio(&table(j), &s.ts, &s.sieve, N).unwrap();
        assert!(ratio <= 1.0 + 1e-9, "j = {j}: {ratio}");
    }
}

#[test]
fn degree_one_constant_matches_slope() {
    let s = setup();
    let sym = table(1);
    for m in 1..=N {
        assert!((sym.value(m) - s.form.lambda(m)).abs() < 1e-12);
    }
    let slope = partial_sums(&sym, &s.ts, &[N]).unwrap().s2_slope;
    let c = c_constant(&s.satake, 1, 100_000).unwrap();
    assert!(
        (c.value - slope).abs() / c.value <= 0.10,
        "{} vs {slope}",
        c.value
    );
}

#[test]
fn constant_estimates_stabilize() {
    let st = stabilization(&setup().satake, 2, &[1000, 10_000, 100_000]).unwrap();
    assert_eq!(st.gaps.len(), 2);
    assert!(st.shrinking, "{st:?}");
}
