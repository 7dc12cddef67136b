//! Dirichlet coefficients of symmetric-power L-functions.
//!
//! At a prime with Satake angle `theta` the j-th symmetric power has local
//! roots `e^{i(j - 2m) theta}`, `m = 0..=j`. The local polynomial
//! `P(T) = prod (1 - root * T)` is real: conjugate roots are paired into
//! quadratics `1 - 2 cos(r theta) T + T^2`, with a factor `1 - T` when `j` is
//! even. The coefficient of `p^{-nu s}` is the `nu`-th term of `1 / P(T)`,
//! obtained by the linear recurrence of the inverse series. Composite indices
//! are assembled multiplicatively over a smallest-prime-factor table.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::arith::{check_memory, SpfSieve};
use crate::error::{Error, Result};
use crate::hecke::SatakeTable;

/// `P(T) = 1 + P_1 T + ... + P_{j+1} T^{j+1}` for one prime.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalEulerPoly {
    j: u32,
    coeffs: Vec<f64>,
}

impl LocalEulerPoly {
    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `P(c T)`: every root scaled by `c`. With `c = chi(p)` this is the local
    /// polynomial of the twist by a character.
    pub fn scaled(&self, c: f64) -> LocalEulerPoly {
        let mut s = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| {
                let v = a * s;
                s *= c;
                v
            })
            .collect();
        LocalEulerPoly { j: self.j, coeffs }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * t + a)
    }

    /// Coefficients `h_0..=h_{nu_max}` of `1 / P(T)`.
    pub fn inverse_series(&self, nu_max: usize) -> Vec<f64> {
        let mut h = Vec::with_capacity(nu_max + 1);
        h.push(1.0);
        for nu in 1..=nu_max {
            let top = nu.min(self.coeffs.len() - 1);
            let mut acc = 0.0;
            for i in 1..=top {
                acc -= self.coeffs[i] * h[nu - i];
            }
            h.push(acc);
        }
        h
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (k, &y) in b.iter().enumerate() {
            out[i + k] += x * y;
        }
    }
    out
}

pub fn local_euler_poly(theta: f64, j: u32) -> LocalEulerPoly {
    let mut coeffs = vec![1.0];
    let j_i = j as i64;
    for m in 0..=j_i {
        let r = j_i - 2 * m;
        if r > 0 {
            coeffs = poly_mul(&coeffs, &[1.0, -2.0 * (r as f64 * theta).cos(), 1.0]);
        } else if r == 0 {
            coeffs = poly_mul(&coeffs, &[1.0, -1.0]);
        }
    }
    LocalEulerPoly { j, coeffs }
}

/// `h_0..=h_{nu_max}`: the coefficients of `p^{-nu s}` in the local factor.
/// `h_1` is `lambda_{sym^j}(p)`.
pub fn local_coeffs(theta: f64, j: u32, nu_max: usize) -> Vec<f64> {
    local_euler_poly(theta, j).inverse_series(nu_max)
}

/// `lambda_{sym^j}(m)` for `1 <= m <= N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymCoeffTable {
    j: u32,
    label: String,
    // indexed by m; slot 0 unused
    vals: Vec<f64>,
}

impl SymCoeffTable {
    /// Wraps explicit values (`vals[0]` ignored, `vals[1]` must be 1).
    pub fn from_values(j: u32, label: impl Into<String>, mut vals: Vec<f64>) -> Result<Self> {
        if vals.len() < 2 || vals[1] != 1.0 {
            return Err(Error::InvalidArgument("table needs vals[1] = 1".into()));
        }
        vals[0] = 0.0;
        Ok(SymCoeffTable {
            j,
            label: label.into(),
            vals,
        })
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn trunc(&self) -> usize {
        self.vals.len() - 1
    }

    #[inline]
    pub fn value(&self, m: usize) -> f64 {
        self.vals[m]
    }

    /// Values indexed by `m`, zero placeholder at index 0.
    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Bytes needed for a table of truncation `n`.
    pub fn bytes_needed(n: usize) -> u64 {
        8 * (n as u64 + 1)
    }
}

struct LocalTable<'a> {
    primes: &'a [u32],
    first: Vec<f64>,
    // (p, h_0..=h_nu_max) for primes with p^2 <= n
    powers: Vec<(u32, Vec<f64>)>,
}

impl LocalTable<'_> {
    #[inline]
    fn coeff(&self, p: u32, e: u32) -> f64 {
        if e == 1 {
            let i = self.primes.binary_search(&p).expect("prime covered");
            return self.first[i];
        }
        let i = self
            .powers
            .binary_search_by_key(&p, |(q, _)| *q)
            .expect("prime power covered");
        self.powers[i].1[e as usize]
    }
}

/// Builds `lambda_{sym^j}(m)` for all `m <= n`. Each entry is the product of
/// its prime-power factors taken in ascending prime order, so the result does
/// not depend on how the range is split across threads.
pub fn sym_sieve(
    satake: &SatakeTable,
    sieve: &SpfSieve,
    j: u32,
    n: usize,
    mem_cap: u64,
) -> Result<SymCoeffTable> {
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
    check_memory(SymCoeffTable::bytes_needed(n), mem_cap)?;
    let largest = (2..=n).rev().find(|&m| sieve.is_prime(m));
    if let Some(p) = largest {
        if satake.theta(p as u32).is_none() {
            return Err(Error::InvalidArgument(format!(
                "Satake table stops at {}, primes up to {p} are needed",
                satake.max_prime()
            )));
        }
    }
    let count = satake.primes().partition_point(|&p| (p as usize) <= n);
    let primes = &satake.primes()[..count];
    let angles = &satake.angles()[..count];
    let first: Vec<f64> = angles
        .par_iter()
        .map(|&t| -local_euler_poly(t, j).coeffs()[1])
        .collect();
    let powers = primes
        .iter()
        .zip(angles)
        .take_while(|(&p, _)| (p as usize) * (p as usize) <= n)
        .map(|(&p, &t)| {
            let nu_max = (n as f64).log(p as f64).floor() as usize + 1;
            (p, local_coeffs(t, j, nu_max))
        })
        .collect();
    let local = LocalTable {
        primes,
        first,
        powers,
    };

    let mut vals = vec![0.0; n + 1];
    vals[1] = 1.0;
    const CHUNK: usize = 1 << 14;
    vals.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (off, slot) in chunk.iter_mut().enumerate() {
                let m = base + off;
                if m < 2 {
                    continue;
                }
                *slot = sieve
                    .factorize(m)
                    .fold(1.0, |acc, (p, e)| acc * local.coeff(p, e));
            }
        });
    Ok(SymCoeffTable {
        j,
        label: satake.label().to_string(),
        vals,
    })
}

const CACHE_MAGIC: &[u8; 4] = b"SYMJ";

/// Binary cache: `SYMJ`, j (u32 LE), N (u64 LE), label length (u32 LE),
/// label bytes, then N doubles (LE) for m = 1..=N.
pub fn write_cache<W: Write>(mut out: W, table: &SymCoeffTable) -> std::io::Result<()> {
    out.write_all(CACHE_MAGIC)?;
    out.write_all(&table.j.to_le_bytes())?;
    out.write_all(&(table.trunc() as u64).to_le_bytes())?;
    out.write_all(&(table.label.len() as u32).to_le_bytes())?;
    out.write_all(table.label.as_bytes())?;
    let mut buf = Vec::with_capacity(8 * table.trunc());
    for v in &table.vals[1..] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)
}

/// Reads a cache written by [`write_cache`], checking it was built for the
/// expected form, degree and truncation.
pub fn read_cache<R: Read>(mut input: R, label: &str, j: u32, n: usize) -> Result<SymCoeffTable> {
    let mut head = [0u8; 20];
    input.read_exact(&mut head)?;
    if &head[..4] != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let cj = u32::from_le_bytes(head[4..8].try_into().unwrap());
    let cn = u64::from_le_bytes(head[8..16].try_into().unwrap());
    let len = u32::from_le_bytes(head[16..20].try_into().unwrap()) as usize;
    let mut lab = vec![0u8; len];
    input.read_exact(&mut lab)?;
    if lab != label.as_bytes() {
        return Err(Error::Cache(format!(
            "cache built for form '{}', wanted '{label}'",
            String::from_utf8_lossy(&lab)
        )));
    }
    if cj != j || cn != n as u64 {
        return Err(Error::Cache(format!(
            "cache holds j={cj}, N={cn}; wanted j={j}, N={n}"
        )));
    }
    let mut raw = vec![0u8; 8 * n];
    input.read_exact(&mut raw)?;
    let mut vals = Vec::with_capacity(n + 1);
    vals.push(0.0);
    vals.extend(
        raw.chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap())),
    );
    SymCoeffTable::from_values(j, label, vals)
}

/// File name used for a cached table inside a cache directory.
pub fn cache_file_name(label: &str, j: u32, n: usize) -> String {
    format!("{label}_sym{j}_{n}.symj")
}

pub fn load_cached(dir: &Path, label: &str, j: u32, n: usize) -> Option<SymCoeffTable> {
    let path = dir.join(cache_file_name(label, j, n));
    let f = fs::File::open(path).ok()?;
    read_cache(std::io::BufReader::new(f), label, j, n).ok()
}

pub fn store_cached(dir: &Path, table: &SymCoeffTable) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(cache_file_name(&table.label, table.j, table.trunc()));
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    write_cache(&mut w, table)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{divisor_k, DEFAULT_MEM_CAP};
    use crate::hecke::{normalize, satake};
    use crate::qseries::delta_series;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    // prod_m (1 - x_m T)^{-1} expanded with complex roots
    fn brute_inverse(theta: f64, j: u32, nu_max: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); nu_max + 1];
        h[0] = Complex64::new(1.0, 0.0);
        for m in 0..=j {
            let x = Complex64::from_polar(1.0, (j as f64 - 2.0 * m as f64) * theta);
            for nu in 1..=nu_max {
                let prev = h[nu - 1];
                h[nu] += x * prev;
            }
        }
        h
    }

    fn delta_setup(n: usize) -> (SatakeTable, SpfSieve, Vec<f64>) {
        let f = normalize(&delta_series(n).unwrap(), 12, "delta").unwrap();
        let st = satake(&f).unwrap();
        (st, SpfSieve::new(n), f.table().to_vec())
    }

    #[test]
    fn small_degree_polynomials() {
        let lam = 0.7f64;
        let t = (lam / 2.0).acos();
        let p1 = local_euler_poly(t, 1);
        assert!((p1.coeffs()[1] + lam).abs() < 1e-15);
        assert!((p1.coeffs()[2] - 1.0).abs() < 1e-15);
        assert_eq!(local_euler_poly(1.234, 0).coeffs(), &[1.0, -1.0]);
        let p2 = local_euler_poly(PI / 2.0, 2);
        let expect = [1.0, 1.0, -1.0, -1.0];
        for (a, b) in p2.coeffs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_angles_have_unit_roots() {
        for j in 0..6 {
            // theta = 0: every root is 1, P = (1 - T)^{j+1}
            let p = local_euler_poly(0.0, j);
            assert!(p.eval(1.0).abs() < 1e-12);
            // theta = pi: roots (-1)^j
            let q = local_euler_poly(PI, j);
            let root = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert!(q.eval(root).abs() < 1e-12);
        }
    }

    #[test]
    fn first_coefficients() {
        for j in 0..7 {
            assert!((local_coeffs(0.0, j, 1)[1] - (j + 1) as f64).abs() < 1e-12);
        }
        let lam = -24.0 / 2f64.powf(5.5);
        let t = (lam / 2.0).acos();
        let h = local_coeffs(t, 2, 1);
        assert!((h[1] - (lam * lam - 1.0)).abs() < 1e-15);
        assert!((h[1] + 0.71875).abs() < 1e-12);
        let h1 = local_coeffs(t, 1, 8);
        for nu in 1..8 {
            assert!((h1[nu + 1] - (lam * h1[nu] - h1[nu - 1])).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn recurrence_matches_complex_expansion(theta in 0.0..PI, j in 0u32..=4, nu in 0usize..=6) {
            let fast = local_coeffs(theta, j, nu);
            let slow = brute_inverse(theta, j, nu);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b.re).abs() < 1e-10);
                prop_assert!(b.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sieve_degree_zero_and_one() {
        let n = 20_000;
        let (st, sv, lam) = delta_setup(n);
        let t0 = sym_sieve(&st, &sv, 0, n, DEFAULT_MEM_CAP).unwrap();
        assert!(t0.values()[1..].iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let t1 = sym_sieve(&st, &sv, 1, n, DEFAULT_MEM_CAP).unwrap();
        for m in 1..=n {
            assert!((t1.value(m) - lam[m]).abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn sieve_matches_factor_and_multiply() {
        let n = 100;
        let (st, sv, _) = delta_setup(n);
        let t = sym_sieve(&st, &sv, 2, n, DEFAULT_MEM_CAP).unwrap();
        for m in 2..=n {
            let mut acc = Complex64::new(1.0, 0.0);
            for (p, e) in sv.factorize(m) {
                acc *= brute_inverse(st.theta(p).unwrap(), 2, e as usize)[e as usize];
            }
            assert!((t.value(m) - acc.re).abs() < 1e-12, "m = {m}");
        }
        let th2 = st.theta(2).unwrap();
        let th3 = st.theta(3).unwrap();
        let expect = local_coeffs(th2, 2, 2)[2] * local_coeffs(th3, 2, 1)[1];
        assert!((t.value(12) - expect).abs() < 1e-15);
    }

    #[test]
    fn clebsch_gordan_at_primes() {
        let n = 10_000;
        let (st, sv, _) = delta_setup(n);
        let tables: Vec<SymCoeffTable> = (0..=12)
            .map(|j| sym_sieve(&st, &sv, j, n, DEFAULT_MEM_CAP).unwrap())
            .collect();
        for j in 0..=6usize {
            for p in sv.primes() {
                let p = p as usize;
                let lhs = tables[j].value(p).powi(2);
                let rhs: f64 = (0..=j).map(|i| tables[2 * i].value(p)).sum();
                assert!((lhs - rhs).abs() < 1e-9, "j = {j}, p = {p}");
            }
        }
    }

    #[test]
    fn divisor_bound_and_prime_bound() {
        let n = 50_000;
        let (st, sv, _) = delta_setup(n);
        for j in 0..=5u32 {
            let t = sym_sieve(&st, &sv, j, n, DEFAULT_MEM_CAP).unwrap();
            assert_eq!(t.value(1), 1.0);
            for m in 2..=n {
                let bound = divisor_k(sv.factorize(m), j + 1);
                assert!(t.value(m).abs() <= bound + 1e-9, "j = {j}, m = {m}");
            }
            for p in sv.primes() {
                assert!(t.value(p as usize).abs() <= (j + 1) as f64 + 1e-12);
            }
            for (a, b) in [(4usize, 9usize), (5, 12), (7, 100), (16, 125)] {
                assert!((t.value(a * b) - t.value(a) * t.value(b)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn thread_partition_independent() {
        let n = 100_000;
        let (st, sv, _) = delta_setup(n);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sym_sieve(&st, &sv, 3, n, DEFAULT_MEM_CAP).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert!(a
            .values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn sieve_errors() {
        let (st, sv, _) = delta_setup(1000);
        assert!(matches!(
            sym_sieve(&st, &sv, 2, 1000, 100),
            Err(Error::Resource { .. })
        ));
        assert!(sym_sieve(&st, &sv, 2, 2000, DEFAULT_MEM_CAP).is_err());
        let big = SpfSieve::new(2000);
        assert!(sym_sieve(&st, &big, 2, 2000, DEFAULT_MEM_CAP).is_err());
    }

    #[test]
    fn cache_round_trip_and_validation() {
        let n = 500;
        let (st, sv, _) = delta_setup(n);
        let t = sym_sieve(&st, &sv, 3, n, DEFAULT_MEM_CAP).unwrap();
        let mut buf = Vec::new();
        write_cache(&mut buf, &t).unwrap();
        assert_eq!(&buf[..4], b"SYMJ");
        assert_eq!(buf.len(), 4 + 4 + 8 + 4 + 5 + 8 * n);
        assert_eq!(read_cache(&buf[..], "delta", 3, n).unwrap(), t);
        assert!(matches!(
            read_cache(&buf[..], "delta_e4", 3, n),
            Err(Error::Cache(_))
        ));
        assert!(matches!(
            read_cache(&buf[..], "delta", 3, n - 1),
            Err(Error::Cache(_))
        ));
        assert!(matches!(
            read_cache(&buf[..], "delta", 2, n),
            Err(Error::Cache(_))
        ));
        assert!(read_cache(&buf[..100], "delta", 3, n).is_err());
    }
}
