//! Exact integer convolution through number-theoretic transforms modulo
//! several word-sized primes, reassembled with Garner's algorithm.
//!
//! All primes have the form `c * 2^23 + 1 < 2^31`, so residues multiply in
//! `u64` without overflow and transforms up to length 2^23 are available.

use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

/// log2 of the longest supported transform.
pub const MAX_LOG_LEN: u32 = 23;

#[derive(Clone, Copy, Debug)]
pub(crate) struct NttPrime {
    pub p: u64,
    pub g: u64,
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn primitive_root(p: u64) -> u64 {
    let mut factors = Vec::new();
    let mut m = p - 1;
    let mut d = 2;
    while d * d <= m {
        if m.is_multiple_of(d) {
            factors.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..p)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("prime has a primitive root")
}

pub(crate) fn primes() -> &'static [NttPrime] {
    static PRIMES: OnceLock<Vec<NttPrime>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        (1u64..256)
            .map(|c| (c << MAX_LOG_LEN) + 1)
            .filter(|&p| p < (1 << 31) && is_prime_u64(p))
            .map(|p| NttPrime {
                p,
                g: primitive_root(p),
            })
            .collect()
    })
}

/// Total bits of modulus available when every prime is used.
pub fn capacity_bits() -> f64 {
    primes().iter().map(|q| (q.p as f64).log2()).sum()
}

fn ntt(a: &mut [u64], invert: bool, q: NttPrime) {
    let n = a.len();
    let p = q.p;
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod(q.g, (p - 1) / len as u64, p);
        if invert {
            w = pow_mod(w, p - 2, p);
        }
        let half = len / 2;
        let mut tw = Vec::with_capacity(half);
        let mut cur = 1u64;
        for _ in 0..half {
            tw.push(cur);
            cur = cur * w % p;
        }
        for chunk in a.chunks_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for k in 0..half {
                let u = lo[k];
                let v = hi[k] * tw[k] % p;
                lo[k] = if u + v >= p { u + v - p } else { u + v };
                hi[k] = if u >= v { u - v } else { u + p - v };
            }
        }
        len <<= 1;
    }
    if invert {
        let inv_n = pow_mod(n as u64, p - 2, p);
        for x in a.iter_mut() {
            *x = *x * inv_n % p;
        }
    }
}

fn residue(x: &BigInt, p: u64) -> u64 {
    if let Some(v) = x.to_i64() {
        return v.rem_euclid(p as i64) as u64;
    }
    let r = x % BigInt::from(p);
    let r = r.to_i64().expect("remainder fits");
    r.rem_euclid(p as i64) as u64
}

fn convolve_mod(a: &[BigInt], b: Option<&[BigInt]>, n: usize, q: NttPrime) -> Vec<u64> {
    let size = (2 * n + 1).next_power_of_two();
    let load = |src: &[BigInt]| {
        let mut v = vec![0u64; size];
        for (dst, x) in v.iter_mut().zip(src.iter().take(n + 1)) {
            *dst = residue(x, q.p);
        }
        v
    };
    let mut fa = load(a);
    ntt(&mut fa, false, q);
    match b {
        Some(b) => {
            let mut fb = load(b);
            ntt(&mut fb, false, q);
            for (x, y) in fa.iter_mut().zip(&fb) {
                *x = *x * y % q.p;
            }
        }
        None => {
            for x in fa.iter_mut() {
                *x = *x * *x % q.p;
            }
        }
    }
    ntt(&mut fa, true, q);
    fa.truncate(n + 1);
    fa
}

/// Number of primes needed so their product exceeds `2^(bits + 1)`.
pub(crate) fn primes_needed(bits: u64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, q) in primes().iter().enumerate() {
        acc += (q.p as f64).log2();
        if acc > bits as f64 + 2.0 {
            return Some(i + 1);
        }
    }
    None
}

/// Truncated product of `a` and `b` (or `a` squared when `b` is `None`),
/// reconstructed exactly from `count` residue channels.
pub(crate) fn mul_exact(a: &[BigInt], b: Option<&[BigInt]>, n: usize, count: usize) -> Vec<BigInt> {
    let chans = &primes()[..count];
    let residues: Vec<Vec<u64>> = chans
        .par_iter()
        .map(|&q| convolve_mod(a, b, n, q))
        .collect();

    // inv[i][j] = p_j^{-1} mod p_i for j < i
    let inv: Vec<Vec<u64>> = (0..count)
        .map(|i| {
            (0..i)
                .map(|j| pow_mod(chans[j].p % chans[i].p, chans[i].p - 2, chans[i].p))
                .collect()
        })
        .collect();
    let mut modulus = BigInt::from(1u32);
    for q in chans {
        modulus *= q.p;
    }
    let half = &modulus >> 1usize;

    (0..=n)
        .into_par_iter()
        .map(|idx| {
            let mut digits = [0u64; 32];
            for i in 0..count {
                let p = chans[i].p;
                let mut t = residues[i][idx];
                for j in 0..i {
                    let d = digits[j] % p;
                    t = (t + p - d) % p * inv[i][j] % p;
                }
                digits[i] = t;
            }
            let mut v = BigInt::zero();
            for i in (0..count).rev() {
                v = v * chans[i].p + digits[i];
            }
            if v > half {
                v -= &modulus;
            }
            v
        })
        .collect()
}

pub(crate) fn bits_of(xs: &[BigInt]) -> u64 {
    xs.iter()
        .filter(|x| x.sign() != Sign::NoSign)
        .map(|x| x.bits())
        .max()
        .unwrap_or(0)
}
