//! The Gauss measure `m = dx/((1+x) log 2)`, its invariance under the Gauss
//! map, and Monte Carlo experiments with the transfer operator.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cf::{cf_expand, gauss_map, RealSpec};
use crate::error::{Error, Result};
use crate::mc::mc_stats;
use crate::special::{EvalResult, Neumaier};

/// `(√5 − 1)/2`.
pub const GOLDEN: f64 = 0.618_033_988_749_894_848_204_586_834_365_638_1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Domain(format!("need 0 <= lo < hi <= 1, got ({lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }
}

/// `m((lo, hi)) = log((1+hi)/(1+lo))/log 2`.
pub fn gauss_measure(iv: Interval) -> f64 {
    ((iv.hi - iv.lo) / (1.0 + iv.lo)).ln_1p() / LN_2
}

/// Branch `n` of `α⁻¹(iv)`: `(1/(n+hi), 1/(n+lo))`.
pub fn preimage_branch(iv: Interval, n: u64) -> Interval {
    let nf = n as f64;
    Interval { lo: 1.0 / (nf + iv.hi), hi: 1.0 / (nf + iv.lo) }
}

/// `u·log(1 + 1/u) + log(1 + u)`, an antiderivative of `log(1 + 1/u)`.
fn branch_antiderivative_diff(u_hi: f64, u_lo: f64) -> f64 {
    let f = |u: f64| u * (1.0 / u).ln_1p();
    (f(u_hi) - f(u_lo)) + ((u_hi - u_lo) / (1.0 + u_lo)).ln_1p()
}

/// `m(α⁻¹(iv))` summed over the first `n_branches` branches, with the rest
/// approximated by the midpoint integral `∫_{N+1/2}^∞` of the branch mass.
pub fn preimage_measure(iv: Interval, n_branches: u64) -> Result<EvalResult> {
    if n_branches == 0 {
        return Err(Error::Domain("n_branches must be >= 1".into()));
    }
    let width = iv.hi - iv.lo;
    let mut acc = Neumaier::default();
    for n in 1..=n_branches {
        let nf = n as f64;
        // m(branch n) = log1p((hi − lo)/((n+lo)(n+hi+1)))/log 2
        acc.add((width / ((nf + iv.lo) * (nf + iv.hi + 1.0))).ln_1p() / LN_2);
    }
    let m = n_branches as f64 + 0.5;
    let tail = branch_antiderivative_diff(m + iv.hi, m + iv.lo) / LN_2;
    acc.add(tail);
    // midpoint rule error for a convex summand: |h'(N+1/2)|/24 with |h'(t)| ≤ 2·width/t³
    let quad = 2.0 * width / (m * m * m) / 24.0 / LN_2;
    let rounding = 1e-16 * (1.0 + n_branches as f64 * 1e-3) + 4.0 * f64::EPSILON;
    Ok(EvalResult::new(acc.sum(), quad + rounding, n_branches as usize))
}

/// A draw from `m` by the inverse CDF `x = 2^U − 1`.
pub fn sample_gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        let x = (u * LN_2).exp_m1();
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

/// Kolmogorov–Smirnov distance between the sample and `m`.
pub fn ks_statistic_gauss(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = x.ln_1p() / LN_2;
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// `ζ(s)` for real `s > 1` by Euler–Maclaurin.
pub fn zeta(s: f64) -> f64 {
    const N: usize = 32;
    let nf = N as f64;
    let mut acc = Neumaier::default();
    for k in 1..N {
        acc.add((k as f64).powf(-s));
    }
    let ns = nf.powf(-s);
    acc.add(nf * ns / (s - 1.0) + 0.5 * ns);
    // B₂/2!, B₄/4!, B₆/4! derivative corrections
    let t1 = s * ns / nf / 12.0;
    let t2 = s * (s + 1.0) * (s + 2.0) * ns / nf.powi(3) / 720.0;
    let t3 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * ns / nf.powi(5) / 30240.0;
    acc.add(t1 - t2 + t3);
    acc.sum()
}

/// `∫₀¹ log(1/x)^p dm = Γ(p+1) η(p+1) / log 2`.
pub fn log_moment_gauss(p: f64) -> f64 {
    let s = p + 1.0;
    let eta = (1.0 - 2f64.powf(1.0 - s)) * zeta(s);
    statrs::function::gamma::gamma(s) * eta / LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub n: usize,
    pub p: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub pass: bool,
    pub samples: u64,
    pub seed: u64,
}

/// A dyadic point of the given width near `x`; the low bits below f64
/// resolution come from `rng`.
pub(crate) fn dyadic_near<R: Rng + ?Sized>(x: f64, width: u32, rng: &mut R) -> RealSpec {
    let scaled = x * 2f64.powi(width as i32);
    let mut bits = scaled as u128;
    let free = (x.to_bits() >> 52) as i32 - 1075 + width as i32;
    if free > 0 {
        let fill = if free >= 128 { u128::MAX } else { (1u128 << free) - 1 };
        bits |= rng.random::<u128>() & fill;
    }
    let top = if width == 128 { u128::MAX } else { (1u128 << width) - 1 };
    RealSpec::Dyadic { bits: bits.clamp(1, top), width }
}

/// `(T^n l)(x)` for a float `x`, exactly when the dyadic expansion is deep
/// enough and by iterating the Gauss map otherwise.
fn transfer_l_at<R: Rng + ?Sized>(x: f64, n: usize, rng: &mut R) -> Result<f64> {
    let spec = dyadic_near(x, 64, rng);
    let orbit = cf_expand(&spec, n + 1, u128::MAX)?;
    if orbit.depth() > n {
        return Ok(orbit.gamma[n]);
    }
    let mut beta = 1.0;
    let mut a = x;
    for _ in 0..n {
        beta *= a;
        a = gauss_map(a)?;
    }
    Ok(beta * (1.0 / a).ln())
}

/// Monte Carlo estimate of `∫|T^n l|^p dm / ∫ l^p dm`; passes when the
/// estimate minus three standard errors is at most `g^{(n−1)p}`.
pub fn transfer_norm_ratio(n: usize, p: f64, samples: u64, seed: u64) -> Result<NormReport> {
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Domain(format!("p must lie in (1, 2], got {p}")));
    }
    if samples < 2 {
        return Err(Error::Domain("need at least 2 samples".into()));
    }
    let denom = log_moment_gauss(p);
    let stats = mc_stats(samples, seed, |rng: &mut ChaCha8Rng, _| {
        let x = sample_gauss(rng);
        Ok(transfer_l_at(x, n, rng)?.abs().powf(p))
    })?;
    let estimate = stats.mean() / denom;
    let std_error = stats.std_error() / denom;
    let bound = GOLDEN.powf((n as f64 - 1.0) * p);
    Ok(NormReport { n, p, estimate, std_error, bound, pass: estimate - 3.0 * std_error <= bound, samples, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JSetReport {
    pub d: usize,
    pub h: usize,
    pub u: f64,
    pub v: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    /// Informational: the estimate exceeds the bound by more than 3σ.
    pub exceeds_bound: bool,
    pub samples: u64,
    pub seed: u64,
}

/// `m({x : (T^d l)(x) ≥ u and (T^{d+h} l)(x) ≥ v})` by Monte Carlo, beside
/// `2 exp(−2^{(h−2)/2} v exp(2^{(d−2)/2} u))`. Never fails on the comparison.
pub fn j_set_probe(d: usize, h: usize, u: f64, v: f64, samples: u64, seed: u64) -> Result<JSetReport> {
    if h == 0 {
        return Err(Error::Domain("h must be >= 1".into()));
    }
    if !(u >= 0.0 && v >= 0.0) {
        return Err(Error::Domain("u and v must be >= 0".into()));
    }
    let stats = mc_stats(samples, seed, |rng: &mut ChaCha8Rng, _| {
        let x = sample_gauss(rng);
        let spec = dyadic_near(x, 64, rng);
        let orbit = cf_expand(&spec, d + h + 1, u128::MAX)?;
        let at = |k: usize| if k < orbit.depth() { orbit.gamma[k] } else { 0.0 };
        Ok(if at(d) >= u && at(d + h) >= v { 1.0 } else { 0.0 })
    })?;
    let bound = 2.0 * (-(2f64.powf((h as f64 - 2.0) / 2.0)) * v * (2f64.powf((d as f64 - 2.0) / 2.0) * u).exp()).exp();
    let estimate = stats.mean();
    let std_error = stats.std_error();
    Ok(JSetReport {
        d,
        h,
        u,
        v,
        estimate,
        std_error,
        bound,
        exceeds_bound: estimate - 3.0 * std_error > bound,
        samples,
        seed,
    })
}
