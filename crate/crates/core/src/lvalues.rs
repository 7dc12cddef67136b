//! L-values at `s = 1` by truncated Euler products, and the leading constant
//! of the second moment.
//!
//! The Dirichlet series `F(s) = sum lambda_{sym^j}(m)^2 r(m) m^{-s}` factors as
//! `G(s) H(s)` with `G = prod_{i=0..=j} L(sym^{2i}) L(sym^{2i} x chi)`. Locally
//! `H_p = F_p / G_p` has no `p^{-s}` term, so `H` converges well past `s = 1`
//! and the residue of `F` at 1 is `L_chi(1) prod_{i=1..=j} L(sym^{2i}, 1)
//! L(sym^{2i} x chi, 1) H(1)`. The moment constant is four times that.
//!
//! The products for the L-values sit on the edge of absolute convergence at
//! `s = 1`; they are truncated at `p <= p_max` without a rigorous tail bound.

use crate::arith::{binomial, primes_up_to};
use crate::error::{Error, Result};
use crate::hecke::SatakeTable;
use crate::sum::CompensatedSum;
use crate::sympow::{local_coeffs, local_euler_poly, LocalEulerPoly};
use crate::twosquares::{chi, r_prime_power};

/// A truncated Euler product.
#[derive(Clone, Debug, PartialEq)]
pub struct EulerProductEstimate {
    pub value: f64,
    pub log_value: f64,
    pub p_max: u64,
    /// Deepest local expansion used (1 when factors are evaluated in closed form).
    pub nu_max: usize,
    pub tail_note: String,
}

impl EulerProductEstimate {
    fn from_log(log: f64, p_max: u64, nu_max: usize, tail_note: String) -> Self {
        EulerProductEstimate {
            value: log.exp(),
            log_value: log,
            p_max,
            nu_max,
            tail_note,
        }
    }
}

fn covered_primes(satake: &SatakeTable, p_max: u64) -> Result<Vec<(u64, f64)>> {
    let primes = primes_up_to(p_max);
    if let Some(&last) = primes.last() {
        if satake.theta(last as u32).is_none() {
            return Err(Error::InvalidArgument(format!(
                "Satake table stops at {}, p_max = {p_max} needs {last}",
                satake.max_prime()
            )));
        }
    }
    Ok(primes
        .into_iter()
        .map(|p| (p, satake.theta(p as u32).unwrap()))
        .collect())
}

fn local_poly(theta: f64, degree: u32, p: u64, twisted: bool) -> LocalEulerPoly {
    let poly = local_euler_poly(theta, degree);
    if twisted {
        poly.scaled(chi(p) as f64)
    } else {
        poly
    }
}

/// `L(sym^{2i} f, 1)` or, with `twisted`, `L(sym^{2i} f x chi, 1)`, as
/// `prod_{p <= p_max} 1 / P_p(p^{-1})`. Twisted `i = 0` is `L_chi(1)` and needs
/// no Satake data; untwisted `i = 0` is the zeta pole.
pub fn l_value_at_1(
    satake: &SatakeTable,
    i: u32,
    twisted: bool,
    p_max: u64,
) -> Result<EulerProductEstimate> {
    if i == 0 && !twisted {
        return Err(Error::PoleAtOne(
            "sym^0 is the Riemann zeta function".into(),
        ));
    }
    let primes: Vec<(u64, f64)> = if i == 0 {
        primes_up_to(p_max).into_iter().map(|p| (p, 0.0)).collect()
    } else {
        covered_primes(satake, p_max)?
    };
    let mut log = CompensatedSum::new();
    for (p, theta) in primes {
        let v = local_poly(theta, 2 * i, p, twisted).eval(1.0 / p as f64);
        if !(v > 0.0) {
            return Err(Error::Degenerate(format!(
                "local factor at p = {p} evaluates to {v}"
            )));
        }
        log.add(-v.ln());
    }
    let what = if twisted { "twisted " } else { "" };
    Ok(EulerProductEstimate::from_log(
        log.value(),
        p_max,
        1,
        format!(
            "{what}sym^{} Euler product truncated at p <= {p_max}; \
             conditionally convergent at s = 1, tail not bounded",
            2 * i
        ),
    ))
}

/// Local series of `H_p = F_p / G_p` in powers of `p^{-s}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalHFactor {
    pub p: u64,
    pub series: Vec<f64>,
}

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|k| (0..=k).map(|t| a[t] * b[k - t]).sum())
        .collect()
}

/// `a / b` for `b[0] = 1`, truncated to the common length.
pub fn series_div(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if b.first() != Some(&1.0) {
        return Err(Error::Invariant(format!(
            "series division needs constant term 1, found {:?}",
            b.first()
        )));
    }
    let n = a.len().min(b.len());
    let mut q = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = a[k];
        for t in 1..=k {
            acc -= b[t] * q[k - t];
        }
        q.push(acc);
    }
    Ok(q)
}

/// `f_nu = lambda_{sym^j}(p^nu)^2 r(p^nu)` for `nu = 0..=nu_max`.
pub fn f_local(theta: f64, p: u64, j: u32, nu_max: usize) -> Vec<f64> {
    local_coeffs(theta, j, nu_max)
        .into_iter()
        .enumerate()
        .map(|(nu, h)| h * h * r_prime_power(p, nu as u32) as f64)
        .collect()
}

/// Local series of `G_p`: the product of the `2(j + 1)` series of
/// `L(sym^{2i})` and its twist, `i = 0..=j`.
pub fn g_local(theta: f64, p: u64, j: u32, nu_max: usize) -> Vec<f64> {
    let mut g = vec![0.0; nu_max + 1];
    g[0] = 1.0;
    for i in 0..=j {
        for twisted in [false, true] {
            let s = local_poly(theta, 2 * i, p, twisted).inverse_series(nu_max);
            g = series_mul(&g, &s);
        }
    }
    g
}

pub fn h_local(theta: f64, p: u64, j: u32, nu_max: usize) -> Result<LocalHFactor> {
    if nu_max < 2 {
        return Err(Error::InvalidArgument("nu_max must be at least 2".into()));
    }
    let f = f_local(theta, p, j, nu_max);
    let g = g_local(theta, p, j, nu_max);
    Ok(LocalHFactor {
        p,
        series: series_div(&f, &g)?,
    })
}

// Upper bound for |f_nu|: |lambda_{sym^j}(p^nu)| <= C(nu + j, j), r(p^nu) <= nu + 1.
fn f_bound(j: u32, nu: usize) -> f64 {
    binomial((nu + j as usize) as u64, j as u64).powi(2) * (nu + 1) as f64
}

/// Number of terms of `F_p(1/p)` after which the remaining tail is below `tol`.
pub fn local_depth(p: u64, j: u32, tol: f64) -> usize {
    const CAP: usize = 4000;
    let pf = p as f64;
    for nu in 1..CAP {
        let next = f_bound(j, nu + 1) * pf.powi(-((nu + 1) as i32));
        let ratio = f_bound(j, nu + 2) / (f_bound(j, nu + 1) * pf);
        if ratio < 1.0 && next / (1.0 - ratio) < tol {
            return nu;
        }
    }
    CAP
}

/// `H_p(1) = F_p(1/p) * prod_i P_{2i}(1/p) P_{2i}(chi(p)/p)`.
pub fn h_local_at_1(theta: f64, p: u64, j: u32, tol: f64) -> (f64, usize) {
    let depth = local_depth(p, j, tol);
    let t = 1.0 / p as f64;
    let f = f_local(theta, p, j, depth);
    let mut fsum = CompensatedSum::new();
    let mut tp = 1.0;
    for c in f {
        fsum.add(c * tp);
        tp *= t;
    }
    let mut q = 1.0;
    for i in 0..=j {
        q *= local_poly(theta, 2 * i, p, false).eval(t);
        q *= local_poly(theta, 2 * i, p, true).eval(t);
    }
    (fsum.value() * q, depth)
}

/// `H(1)` as a product over `p <= p_max` of local values, each accurate to `tol`.
pub fn h_value_at_1(
    satake: &SatakeTable,
    j: u32,
    p_max: u64,
    tol: f64,
) -> Result<EulerProductEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if p_max < 2 {
        return Err(Error::InvalidArgument("p_max must be at least 2".into()));
    }
    let mut log = CompensatedSum::new();
    let mut nu_max = 0;
    for (p, theta) in covered_primes(satake, p_max)? {
        let (v, depth) = h_local_at_1(theta, p, j, tol);
        if !(v > 0.0) {
            return Err(Error::Degenerate(format!("H_p(1) = {v} at p = {p}")));
        }
        nu_max = nu_max.max(depth);
        log.add(v.ln());
    }
    Ok(EulerProductEstimate::from_log(
        log.value(),
        p_max,
        nu_max,
        format!("local factors 1 + O(p^-2); truncated at p <= {p_max}, local tails < {tol:e}"),
    ))
}

/// Default accuracy of each local factor of `H(1)`.
pub const H_LOCAL_TOL: f64 = 1e-14;

/// The factors of the second-moment constant.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentConstant {
    pub j: u32,
    pub p_max: u64,
    pub l_chi: EulerProductEstimate,
    /// `(i, L(sym^{2i}, 1), L(sym^{2i} x chi, 1))` for `i = 1..=j`.
    pub l_factors: Vec<(u32, EulerProductEstimate, EulerProductEstimate)>,
    pub h: EulerProductEstimate,
    pub value: f64,
    pub log_value: f64,
}

impl MomentConstant {
    /// The constant with `L_chi(1)` replaced by its exact value `pi / 4`.
    pub fn with_exact_l_chi(&self) -> f64 {
        (self.log_value - self.l_chi.log_value + (std::f64::consts::PI / 4.0).ln()).exp()
    }
}

/// `C_j = 4 L_chi(1) prod_{i=1..=j} L(sym^{2i}, 1) L(sym^{2i} x chi, 1) H(1)`.
pub fn c_constant(satake: &SatakeTable, j: u32, p_max: u64) -> Result<MomentConstant> {
    if j < 1 {
        return Err(Error::InvalidArgument("C_j needs j >= 1".into()));
    }
    let l_chi = l_value_at_1(satake, 0, true, p_max)?;
    let mut log = CompensatedSum::new();
    log.add(4f64.ln());
    log.add(l_chi.log_value);
    let mut l_factors = Vec::with_capacity(j as usize);
    for i in 1..=j {
        let a = l_value_at_1(satake, i, false, p_max)?;
        let b = l_value_at_1(satake, i, true, p_max)?;
        log.add(a.log_value);
        log.add(b.log_value);
        l_factors.push((i, a, b));
    }
    let h = h_value_at_1(satake, j, p_max, H_LOCAL_TOL)?;
    log.add(h.log_value);
    let log_value = log.value();
    Ok(MomentConstant {
        j,
        p_max,
        l_chi,
        l_factors,
        h,
        value: log_value.exp(),
        log_value,
    })
}

/// Successive estimates of `log C_j` at increasing prime bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Stabilization {
    pub p_max: Vec<u64>,
    pub log_c: Vec<f64>,
    pub gaps: Vec<f64>,
    /// Each gap at most half the previous one. Heuristic; a `false` flags the
    /// run without invalidating it.
    pub shrinking: bool,
}

pub fn stabilization(satake: &SatakeTable, j: u32, bounds: &[u64]) -> Result<Stabilization> {
    let log_c = bounds
        .iter()
        .map(|&p| c_constant(satake, j, p).map(|c| c.log_value))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = log_c.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let shrinking = gaps.windows(2).all(|g| g[1] <= g[0] / 2.0);
    Ok(Stabilization {
        p_max: bounds.to_vec(),
        log_c,
        gaps,
        shrinking,
    })
}
