//! Closed-form dispersion laws for the two branches, group velocity, the
//! binomial series coefficients of the evolution generator, and truncated
//! approximations of its spectral symbol.
//!
//! The (+) branch is gapless, `omega_plus(k) = c (sqrt(mu^2 + k^2) - mu)`,
//! and the (-) branch has gap `2 mu c`. Their product is `c^2 k^2` for every
//! k, which is the identity that kills cross terms throughout the theory.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::RelwaveError;
use crate::units::PhysicalParams;
use crate::Result;

/// The two positive-frequency solution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// Angular frequency of a branch at wavenumber `k` (magnitude).
///
/// The (+) branch is evaluated as `c k^2 / (sqrt(mu^2 + k^2) + mu)`, which is
/// free of the cancellation that `sqrt(mu^2 + k^2) - mu` suffers at small k.
pub fn omega_branch(k: f64, branch: Branch, params: &PhysicalParams) -> f64 {
    let mu = params.mu;
    let root = mu.hypot(k);
    match branch {
        Branch::Plus => params.c * k * k / (root + mu),
        Branch::Minus => params.c * (root + mu),
    }
}

/// Group velocity `c k / sqrt(mu^2 + k^2)`, identical for both branches.
pub fn group_velocity(k: f64, params: &PhysicalParams) -> f64 {
    params.c * k / params.mu.hypot(k)
}

/// How many series coefficients are kept as exact rationals.
const RATIONAL_CACHE_LEN: usize = 64;

fn coefficient_cache() -> &'static Vec<BigRational> {
    static CACHE: OnceLock<Vec<BigRational>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut coeffs = Vec::with_capacity(RATIONAL_CACHE_LEN);
        // a_1 = 1/2, a_{n+1} = a_n (2n - 1) / (2n + 2).
        let mut a = BigRational::new(BigInt::from(1), BigInt::from(2));
        for n in 1..=RATIONAL_CACHE_LEN {
            coeffs.push(a.clone());
            a *= BigRational::new(BigInt::from(2 * n as i64 - 1), BigInt::from(2 * n as i64 + 2));
        }
        coeffs
    })
}

/// Exact series coefficient `a_n` with `a_1 = 1/2` and, for n >= 2,
/// `a_n = (2n-3)!! / (2n)!!` — the absolute Taylor coefficients of
/// `sqrt(1 + x)`, so that `sum a_n (-x)^n = 1 - sqrt(1 + x)` for |x| < 1.
pub fn series_coeff(n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(RelwaveError::domain("series coefficients start at n = 1"));
    }
    let cache = coefficient_cache();
    if n <= cache.len() {
        return Ok(cache[n - 1].clone());
    }
    let mut a = cache[cache.len() - 1].clone();
    for m in cache.len()..n {
        a *= BigRational::new(BigInt::from(2 * m as i64 - 1), BigInt::from(2 * m as i64 + 2));
    }
    Ok(a)
}

/// `a_n` as a double.
pub fn series_coeff_f64(n: usize) -> Result<f64> {
    Ok(series_coeff(n)?
        .to_f64()
        .expect("series coefficient fits in f64"))
}

/// Partial sum `sum_{n=1..order} a_n (-x)^n`, which tends to
/// `1 - sqrt(1 + x)` for |x| < 1.
pub fn series_partial_sum(x: f64, order: usize) -> Result<f64> {
    if order == 0 {
        return Err(RelwaveError::domain("series order must be at least 1"));
    }
    let mut sum = 0.0;
    let mut power = 1.0;
    for n in 1..=order {
        power *= -x;
        sum += series_coeff_f64(n)? * power;
    }
    Ok(sum)
}

/// Order-N approximation of the (+) branch frequency from the generator
/// series: `omega_tilde(k; N) = -mu c sum_{n<=N} a_n (-k^2/mu^2)^n`.
/// N = 1 gives the Schroedinger symbol `c k^2 / 2 mu`.
pub fn truncated_symbol(k_squared: f64, order: usize, params: &PhysicalParams) -> Result<f64> {
    let x = k_squared / (params.mu * params.mu);
    Ok(-params.mu * params.c * series_partial_sum(x, order)?)
}

/// Tabulated dispersion data for CSV emission.
#[derive(Debug, Clone)]
pub struct DispersionTable {
    pub rows: Vec<DispersionRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct DispersionRow {
    pub k: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub v_group: f64,
}

impl DispersionTable {
    /// Sample both branches and the group velocity on `steps` equally spaced
    /// wavenumbers in `[0, kmax]`.
    pub fn compute(kmax: f64, steps: usize, params: &PhysicalParams) -> Result<Self> {
        if !(kmax > 0.0) || steps < 2 {
            return Err(RelwaveError::domain(
                "dispersion table needs kmax > 0 and at least 2 steps",
            ));
        }
        let rows = (0..steps)
            .map(|i| {
                let k = kmax * i as f64 / (steps - 1) as f64;
                DispersionRow {
                    k,
                    omega_plus: omega_branch(k, Branch::Plus, params),
                    omega_minus: omega_branch(k, Branch::Minus, params),
                    v_group: group_velocity(k, params),
                }
            })
            .collect();
        Ok(DispersionTable { rows })
    }
}
