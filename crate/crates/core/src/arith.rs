//! Small arithmetic helpers shared by the sieves: a smallest-prime-factor
//! table, prime lists, and the generalized divisor functions used as
//! magnitude bounds.

use crate::error::{Error, Result};

/// Default memory budget for table construction (4 GiB).
pub const DEFAULT_MEM_CAP: u64 = 4 << 30;

/// Fails with [`Error::Resource`] when `needed` exceeds `cap`.
pub fn check_memory(needed: u64, cap: u64) -> Result<()> {
    if needed > cap {
        return Err(Error::Resource { needed, cap });
    }
    Ok(())
}

/// Smallest prime factor for every integer in `0..=limit`.
///
/// Entries 0 and 1 hold themselves. One `u32` per integer.
#[derive(Clone, Debug)]
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    pub fn new(limit: usize) -> Self {
        assert!(limit < u32::MAX as usize, "sieve limit exceeds u32 range");
        let mut spf = vec![0u32; limit + 1];
        for (i, s) in spf.iter_mut().enumerate().take(2) {
            *s = i as u32;
        }
        for m in (2..=limit).step_by(2) {
            spf[m] = 2;
        }
        let mut p = 3;
        while p <= limit {
            if spf[p] == 0 {
                spf[p] = p as u32;
                let mut q = p * p;
                while q <= limit {
                    if spf[q] == 0 {
                        spf[q] = p as u32;
                    }
                    q += 2 * p;
                }
            }
            p += 2;
        }
        SpfSieve { spf }
    }

    /// Like [`SpfSieve::new`] but checks the allocation against `cap` first.
    pub fn with_cap(limit: usize, cap: u64) -> Result<Self> {
        check_memory(Self::bytes_needed(limit), cap)?;
        Ok(Self::new(limit))
    }

    pub fn bytes_needed(limit: usize) -> u64 {
        (limit as u64 + 1) * 4
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    #[inline]
    pub fn smallest_factor(&self, m: usize) -> u32 {
        self.spf[m]
    }

    #[inline]
    pub fn is_prime(&self, m: usize) -> bool {
        m >= 2 && self.spf[m] as usize == m
    }

    /// Prime factorization of `m` as `(p, exponent)` pairs in ascending `p`.
    pub fn factorize(&self, m: usize) -> Factors<'_> {
        assert!(m >= 1 && m <= self.limit(), "m = {m} outside sieve");
        Factors {
            sieve: self,
            rest: m,
        }
    }

    /// All primes up to the sieve limit, ascending.
    pub fn primes(&self) -> impl Iterator<Item = u32> + '_ {
        self.spf
            .iter()
            .enumerate()
            .skip(2)
            .filter(|&(i, &s)| s as usize == i)
            .map(|(_, &s)| s)
    }
}

/// Iterator over the prime-power factorization of one integer.
pub struct Factors<'a> {
    sieve: &'a SpfSieve,
    rest: usize,
}

impl Iterator for Factors<'_> {
    type Item = (u32, u32);

    fn next(&mut self) -> Option<(u32, u32)> {
        if self.rest <= 1 {
            return None;
        }
        let p = self.sieve.smallest_factor(self.rest);
        let mut e = 0;
        while self.rest > 1 && self.sieve.smallest_factor(self.rest) == p {
            self.rest /= p as usize;
            e += 1;
        }
        Some((p, e))
    }
}

/// Primes up to `limit` by a plain sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut q = i * i;
        while q <= n {
            composite[q] = true;
            q += i;
        }
    }
    out
}

/// Binomial coefficient as a float; exact while the result stays below 2^53.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// The `k`-fold divisor function d_k evaluated from a factorization:
/// d_k(p^e) = C(e + k - 1, k - 1).
pub fn divisor_k<I>(factors: I, k: u32) -> f64
where
    I: IntoIterator<Item = (u32, u32)>,
{
    if k == 0 {
        return 0.0;
    }
    factors
        .into_iter()
        .map(|(_, e)| binomial((e + k - 1) as u64, (k - 1) as u64))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_spf(m: usize) -> usize {
        (2..=m).find(|d| m.is_multiple_of(*d)).unwrap()
    }

    #[test]
    fn spf_matches_trial_division() {
        let s = SpfSieve::new(5000);
        for m in 2..=5000 {
            assert_eq!(s.smallest_factor(m) as usize, trial_spf(m), "m = {m}");
        }
    }

    #[test]
    fn factorization_reassembles() {
        let s = SpfSieve::new(10_000);
        for m in 1..=10_000usize {
            let back: usize = s.factorize(m).map(|(p, e)| (p as usize).pow(e)).product();
            assert_eq!(back, m);
            let ps: Vec<u32> = s.factorize(m).map(|(p, _)| p).collect();
            assert!(ps.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn prime_lists_agree() {
        let s = SpfSieve::new(20_000);
        let a: Vec<u64> = s.primes().map(u64::from).collect();
        assert_eq!(a, primes_up_to(20_000));
        assert_eq!(a.len(), 2262);
    }

    #[test]
    fn divisor_functions() {
        let s = SpfSieve::new(1000);
        // d(12) = 6, d_3(12) = d_3(4) d_3(3) = 6 * 3
        assert_eq!(divisor_k(s.factorize(12), 2), 6.0);
        assert_eq!(divisor_k(s.factorize(12), 3), 18.0);
        assert_eq!(divisor_k(s.factorize(1), 5), 1.0);
        for m in 1..=300usize {
            let d = (1..=m).filter(|x| m % x == 0).count() as f64;
            assert_eq!(divisor_k(s.factorize(m), 2), d);
        }
    }

    #[test]
    fn memory_cap() {
        assert!(SpfSieve::with_cap(1000, 100).is_err());
        assert!(SpfSieve::with_cap(1000, 1 << 20).is_ok());
    }
}
