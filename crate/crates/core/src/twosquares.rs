//! Sums of two squares through the non-trivial character modulo 4:
//! `r(m) = sum_{d | m} chi(d)` and `r_2(m) = 4 r(m)`.

use rayon::prelude::*;

use crate::arith::{check_memory, SpfSieve};
use crate::error::{Error, Result};

/// The primitive character modulo 4.
#[inline]
pub fn chi(m: u64) -> i8 {
    match m % 4 {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

/// `r(p^nu)`: `nu + 1` for `p = 1 mod 4`, `1` or `0` by parity of `nu` for
/// `p = 3 mod 4`, and `1` at `p = 2`.
#[inline]
pub fn r_prime_power(p: u64, nu: u32) -> u32 {
    match chi(p) {
        1 => nu + 1,
        -1 => u32::from(nu.is_multiple_of(2)),
        _ => 1,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoSquaresTable {
    // indexed by m; slot 0 unused
    r: Vec<u32>,
}

impl TwoSquaresTable {
    pub fn trunc(&self) -> usize {
        self.r.len() - 1
    }

    #[inline]
    pub fn r(&self, m: usize) -> u32 {
        self.r[m]
    }

    /// `r(m) > 0`, i.e. `m` is a sum of two squares.
    #[inline]
    pub fn is_represented(&self, m: usize) -> bool {
        self.r[m] > 0
    }

    pub fn values(&self) -> &[u32] {
        &self.r
    }

    pub fn bytes_needed(n: usize) -> u64 {
        4 * (n as u64 + 1)
    }
}

pub fn r_sieve(sieve: &SpfSieve, n: usize, mem_cap: u64) -> Result<TwoSquaresTable> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "truncation must be at least 1".into(),
        ));
    }
    if sieve.limit() < n {
        return Err(Error::InvalidArgument(format!(
            "factor sieve reaches {}, table needs {n}",
            sieve.limit()
        )));
    }
    check_memory(TwoSquaresTable::bytes_needed(n), mem_cap)?;
    let mut r = vec![0u32; n + 1];
    r[1] = 1;
    r.par_iter_mut().enumerate().skip(2).for_each(|(m, slot)| {
        *slot = sieve
            .factorize(m)
            .map(|(p, e)| r_prime_power(p as u64, e))
            .product();
    });
    Ok(TwoSquaresTable { r })
}

/// `r_2(m) = 4 r(m)`.
pub fn r2(table: &TwoSquaresTable, m: usize) -> Result<u32> {
    if m < 1 || m > table.trunc() {
        return Err(Error::OutOfRange(format!(
            "m = {m} outside 1..={}",
            table.trunc()
        )));
    }
    Ok(4 * table.r(m))
}

/// Counts `(c, d)` in Z^2 with `c^2 + d^2 = m` by enumeration.
pub fn brute_force_r2(m: u64) -> u64 {
    let mut count = 0;
    let mut c: u64 = 0;
    while c * c <= m {
        let rest = m - c * c;
        let d = rest.isqrt();
        if d * d == rest {
            let signs_c = if c == 0 { 1 } else { 2 };
            let signs_d = if d == 0 { 1 } else { 2 };
            count += signs_c * signs_d;
        }
        c += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::DEFAULT_MEM_CAP;

    fn table(n: usize) -> (SpfSieve, TwoSquaresTable) {
        let s = SpfSieve::new(n);
        let t = r_sieve(&s, n, DEFAULT_MEM_CAP).unwrap();
        (s, t)
    }

    #[test]
    fn character_values() {
        assert_eq!(chi(5), 1);
        assert_eq!(chi(3), -1);
        assert_eq!(chi(8), 0);
        assert_eq!(chi(0), 0);
        assert_eq!(chi(2), 0);
        for a in 0..60u64 {
            for b in 0..60u64 {
                assert_eq!(chi(a * b), chi(a) * chi(b));
            }
        }
    }

    #[test]
    fn small_values() {
        let (_, t) = table(100);
        assert_eq!(t.r(1), 1);
        assert_eq!(t.r(5), 2);
        assert_eq!(t.r(9), 1);
        assert_eq!(r2(&t, 1).unwrap(), 4);
        assert_eq!(r2(&t, 3).unwrap(), 0);
        assert_eq!(r2(&t, 25).unwrap(), 12);
        assert!(r2(&t, 0).is_err());
        assert!(r2(&t, 101).is_err());
        assert_eq!(brute_force_r2(2), 4);
        assert_eq!(brute_force_r2(4), 4);
        assert_eq!(brute_force_r2(25), 12);
    }

    #[test]
    fn divisor_sum_definition() {
        let (_, t) = table(3000);
        for m in 1..=3000u64 {
            let s: i64 = (1..=m).filter(|d| m % d == 0).map(|d| chi(d) as i64).sum();
            assert_eq!(s, t.r(m as usize) as i64, "m = {m}");
        }
    }

    #[test]
    fn lattice_oracle() {
        let (_, t) = table(10_000);
        for m in 1..=10_000usize {
            assert_eq!(4 * t.r(m) as u64, brute_force_r2(m as u64), "m = {m}");
        }
    }

    #[test]
    fn fermat_criterion_and_multiplicativity() {
        let (s, t) = table(10_000);
        for m in 1..=10_000usize {
            let ok = s.factorize(m).all(|(p, e)| p % 4 != 3 || e % 2 == 0);
            assert_eq!(t.is_represented(m), ok, "m = {m}");
        }
        for (a, b) in [(5, 13), (9, 25), (4, 65), (49, 17)] {
            assert_eq!(t.r(a * b), t.r(a) * t.r(b));
        }
    }

    #[test]
    fn gauss_circle() {
        let n = 1_000_000;
        let (_, t) = table(n);
        let mut sum = 0u64;
        let mut checks = [1_000usize, 10_000, 100_000, 1_000_000]
            .into_iter()
            .peekable();
        for m in 1..=n {
            sum += 4 * t.r(m) as u64;
            if checks.peek() == Some(&m) {
                checks.next();
                let x = m as f64;
                let dev = (sum as f64 - std::f64::consts::PI * x).abs() / x.sqrt();
                assert!(dev <= 10.0, "x = {m}: deviation {dev}");
            }
        }
    }

    #[test]
    fn resource_cap() {
        let s = SpfSieve::new(1000);
        assert!(matches!(r_sieve(&s, 1000, 10), Err(Error::Resource { .. })));
        assert!(r_sieve(&s, 1001, DEFAULT_MEM_CAP).is_err());
    }
}
