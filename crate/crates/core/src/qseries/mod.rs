//! Exact truncated power series over the integers, and the q-expansions of
//! the level-one cusp forms used as eigenvalue sources.
//!
//! A series with truncation `N` stores the coefficients of `q^0 ..= q^N`.
//! Products are exact: short operands use the schoolbook Cauchy product;
//! long ones go through a multi-prime NTT whose modulus is sized from the
//! operands' bit lengths, so the reconstruction never wraps.

mod ntt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub use ntt::capacity_bits as ntt_capacity_bits;

/// Below this truncation the schoolbook product is used.
pub const SCHOOLBOOK_CUTOFF: usize = 256;

/// Largest truncation the schoolbook fallback will attempt when the NTT
/// route cannot hold the coefficient bound.
pub const SCHOOLBOOK_MAX: usize = 100_000;

/// Truncated integer q-expansion, coefficients of `q^0..=q^trunc`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntSeries {
    coeffs: Vec<BigInt>,
}

impl IntSeries {
    pub fn new(coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "series needs at least one coefficient".into(),
            ));
        }
        Ok(IntSeries { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// The constant series 1 truncated at `trunc`.
    pub fn one(trunc: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); trunc + 1];
        coeffs[0] = BigInt::one();
        IntSeries { coeffs }
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &BigInt {
        &self.coeffs[i]
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.coeffs
    }

    /// Drops coefficients above `n`.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.trunc() {
            return Err(Error::InvalidArgument(format!(
                "cannot extend truncation {} to {n}",
                self.trunc()
            )));
        }
        Ok(IntSeries {
            coeffs: self.coeffs[..=n].to_vec(),
        })
    }

    /// Multiplies by `q^k`, keeping the truncation; the result is exact up to
    /// `trunc` because the input is known up to `trunc - k`.
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.trunc();
        let mut coeffs = vec![BigInt::zero(); n + 1];
        if k <= n {
            coeffs[k..].clone_from_slice(&self.coeffs[..=n - k]);
        }
        IntSeries { coeffs }
    }
}

fn schoolbook(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    (0..=n)
        .map(|i| {
            let mut acc = BigInt::zero();
            for t in 0..=i {
                if a[t].is_zero() || b[i - t].is_zero() {
                    continue;
                }
                acc += &a[t] * &b[i - t];
            }
            acc
        })
        .collect()
}

fn product(a: &IntSeries, b: Option<&IntSeries>, n: usize) -> Result<IntSeries> {
    let bb = b.unwrap_or(a);
    let avail = a.trunc().min(bb.trunc());
    if n > avail {
        return Err(Error::InvalidArgument(format!(
            "product truncation {n} exceeds operand truncation {avail}"
        )));
    }
    let (ac, bc) = (&a.coeffs[..=n], &bb.coeffs[..=n]);
    if n < SCHOOLBOOK_CUTOFF {
        return Ok(IntSeries {
            coeffs: schoolbook(ac, bc, n),
        });
    }
    let bound_bits = ntt::bits_of(ac) + ntt::bits_of(bc) + (n as u64 + 1).ilog2() as u64 + 1;
    let fits_len = (2 * n + 1).next_power_of_two() <= 1 << ntt::MAX_LOG_LEN;
    match ntt::primes_needed(bound_bits) {
        Some(count) if fits_len => Ok(IntSeries {
            coeffs: ntt::mul_exact(ac, b.map(|s| &s.coeffs[..=n]), n, count),
        }),
        _ if n <= SCHOOLBOOK_MAX => Ok(IntSeries {
            coeffs: schoolbook(ac, bc, n),
        }),
        _ => Err(Error::Overflow(format!(
            "product to q^{n} needs a {bound_bits}-bit modulus; NTT capacity is {:.0} bits \
             at length 2^{}",
            ntt::capacity_bits(),
            ntt::MAX_LOG_LEN
        ))),
    }
}

/// Exact Cauchy product of `a` and `b`, truncated at `n`.
pub fn series_mul(a: &IntSeries, b: &IntSeries, n: usize) -> Result<IntSeries> {
    product(a, Some(b), n)
}

/// `a * a` truncated at `n`; one forward transform instead of two.
pub fn series_square(a: &IntSeries, n: usize) -> Result<IntSeries> {
    product(a, None, n)
}

/// Schoolbook product regardless of size. Kept public as an independent
/// route for cross-checking the transform path.
pub fn series_mul_schoolbook(a: &IntSeries, b: &IntSeries, n: usize) -> Result<IntSeries> {
    let avail = a.trunc().min(b.trunc());
    if n > avail {
        return Err(Error::InvalidArgument(format!(
            "product truncation {n} exceeds operand truncation {avail}"
        )));
    }
    Ok(IntSeries {
        coeffs: schoolbook(&a.coeffs, &b.coeffs, n),
    })
}

/// `prod_{n >= 1} (1 - q^n)` modulo `q^{n+1}`, from the pentagonal number
/// theorem: coefficient `(-1)^k` at `k(3k -+ 1)/2`.
pub fn euler_product_series(n: usize) -> Result<IntSeries> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "truncation must be at least 1".into(),
        ));
    }
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[0] = BigInt::one();
    for k in 1usize.. {
        let lo = k * (3 * k - 1) / 2;
        if lo > n {
            break;
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        coeffs[lo] = BigInt::from(sign);
        let hi = k * (3 * k + 1) / 2;
        if hi <= n {
            coeffs[hi] = BigInt::from(sign);
        }
    }
    Ok(IntSeries { coeffs })
}

/// `prod (1 - q^n)^3 = sum_k (-1)^k (2k + 1) q^{k(k+1)/2}` modulo `q^{n+1}`.
pub fn euler_cube_series(n: usize) -> IntSeries {
    let mut coeffs = vec![BigInt::zero(); n + 1];
    for k in 0usize.. {
        let e = k * (k + 1) / 2;
        if e > n {
            break;
        }
        let v = (2 * k + 1) as i64;
        coeffs[e] = BigInt::from(if k % 2 == 0 { v } else { -v });
    }
    IntSeries { coeffs }
}

/// The discriminant form `q prod (1 - q^n)^24`, coefficients `tau(m)` for
/// `m <= n`. The 24th power is the cube identity squared three times.
pub fn delta_series(n: usize) -> Result<IntSeries> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "truncation must be at least 1".into(),
        ));
    }
    let m = n - 1;
    let mut s = euler_cube_series(m);
    for _ in 0..3 {
        s = series_square(&s, m)?;
    }
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(BigInt::zero());
    coeffs.extend(s.coeffs);
    Ok(IntSeries { coeffs })
}

/// Normalized Eisenstein series `E_4 = 1 + 240 sum sigma_3(n) q^n` or
/// `E_6 = 1 - 504 sum sigma_5(n) q^n`.
pub fn eisenstein_series(k: u32, n: usize) -> Result<IntSeries> {
    let (scale, power): (i64, u32) = match k {
        4 => (240, 3),
        6 => (-504, 5),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "Eisenstein weight {k} unsupported (expected 4 or 6)"
            )))
        }
    };
    let mut sigma = vec![0u128; n + 1];
    for d in 1..=n {
        let dp = (d as u128)
            .checked_pow(power)
            .ok_or_else(|| Error::Overflow(format!("{d}^{power}")))?;
        for m in (d..=n).step_by(d) {
            sigma[m] = sigma[m]
                .checked_add(dp)
                .ok_or_else(|| Error::Overflow(format!("sigma_{power}({m})")))?;
        }
    }
    let mut coeffs: Vec<BigInt> = sigma.into_iter().map(|s| BigInt::from(s) * scale).collect();
    coeffs[0] = BigInt::one();
    Ok(IntSeries { coeffs })
}

/// Level-one weights whose cusp space is one-dimensional, with the label of
/// the normalized eigenform used for each.
pub const CUSP_FORMS: [(u32, &str); 6] = [
    (12, "delta"),
    (16, "delta_e4"),
    (18, "delta_e6"),
    (20, "delta_e4sq"),
    (22, "delta_e4e6"),
    (26, "delta_e4sqe6"),
];

pub fn label_for_weight(k: u32) -> Option<&'static str> {
    CUSP_FORMS.iter().find(|(w, _)| *w == k).map(|(_, l)| *l)
}

pub fn weight_for_label(label: &str) -> Option<u32> {
    CUSP_FORMS
        .iter()
        .find(|(_, l)| *l == label)
        .map(|(w, _)| *w)
}

/// q-expansion of the unique normalized cusp eigenform of weight `k` for
/// `k` in {12, 16, 18, 20, 22, 26}: `Delta * E_4^a * E_6^b` with `4a + 6b = k - 12`.
pub fn cusp_form_series(k: u32, n: usize) -> Result<IntSeries> {
    let (e4, e6) = match k {
        12 => (0, 0),
        16 => (1, 0),
        18 => (0, 1),
        20 => (2, 0),
        22 => (1, 1),
        26 => (2, 1),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "weight {k}: no one-dimensional level-one cusp space built in"
            )))
        }
    };
    let mut f = delta_series(n)?;
    if e4 > 0 {
        let e = eisenstein_series(4, n)?;
        for _ in 0..e4 {
            f = series_mul(&f, &e, n)?;
        }
    }
    if e6 > 0 {
        let e = eisenstein_series(6, n)?;
        f = series_mul(&f, &e, n)?;
    }
    Ok(f)
}
