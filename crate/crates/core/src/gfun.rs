//! The series `g(x) = Σ_{l≥1} (1 − 2{lx})/l` by direct summation and through
//! `g = W + H`, and the cotangent sums `c₀(r/b) = −Σ_{m<b} (m/b) cot(πmr/b)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{cf_expand, cf_expand_default, CfOrbit, CfTail, RealSpec};
use crate::error::{Error, Result};
use crate::special::{EvalResult, Neumaier};
use crate::wilton::{g_big_orbit_tabulated, h_orbit, wilton_orbit, WiltonEval};

/// `x` as a 128-bit binary fraction plus a bound on `|x − bits/2^128|`.
fn binary_fraction(x: &RealSpec) -> Result<(u128, f64)> {
    match x {
        RealSpec::Rational { .. } => Err(Error::Domain(
            "the series diverges at rationals: terms with b | l contribute Σ 1/l".into(),
        )),
        RealSpec::Dyadic { bits, width } => {
            let shifted = if *width == 128 { *bits } else { bits << (128 - width) };
            Ok((shifted, 0.0))
        }
        RealSpec::CfCoeffs { tail, .. } => {
            let orbit = cf_expand(x, 200, 1u128 << 64)?;
            if *tail == CfTail::Terminate && orbit.terminated() {
                return Err(Error::Domain("terminating continued fraction is rational".into()));
            }
            // the last convergent is below 2^64 only if the expansion stopped on it
            let k = orbit
                .q
                .iter()
                .rposition(|&q| q <= 1u128 << 64)
                .ok_or_else(|| Error::Domain("no usable convergent".into()))?;
            let (p, q) = (orbit.p[k], orbit.q[k]);
            let q_next = orbit.q.get(k + 1).copied().unwrap_or(u128::MAX) as f64;
            // floor(p·2^128 / q) by long division
            let mut rem = p;
            let mut bits = 0u128;
            for _ in 0..128 {
                rem <<= 1;
                bits <<= 1;
                if rem >= q {
                    rem -= q;
                    bits |= 1;
                }
            }
            let err = 1.0 / (q as f64 * q_next) + 2f64.powi(-128);
            Ok((bits, err))
        }
    }
}

/// Partial sums of the series, averaged over the last `averaging_window`
/// of them. The bound is the spread of the window plus `(1 + 2D)/N`, where
/// `D` is the largest `|Σ_{j≤l}(1 − 2{jx})|` seen over the second half of the
/// run; by partial summation the tail past `N` is at most `2·sup|D|/N`.
pub fn g_series_oracle(x: &RealSpec, n_terms: usize, averaging_window: usize) -> Result<EvalResult> {
    x.validate()?;
    if n_terms < 1000 {
        return Err(Error::Domain("g_series_oracle needs n_terms >= 1000".into()));
    }
    if averaging_window == 0 || averaging_window > n_terms {
        return Err(Error::Domain("averaging window must be in 1..=n_terms".into()));
    }
    let (bits, x_err) = binary_fraction(x)?;
    const SCALE: f64 = 1.0 / 340_282_366_920_938_463_463_374_607_431_768_211_456.0; // 2^-128
    let start = n_terms - averaging_window + 1;
    let mut sum = Neumaier::default();
    let mut window = Neumaier::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut frac = 0u128;
    let mut disc = 0.0f64;
    let mut disc_max = 0.0f64;
    for l in 1..=n_terms {
        frac = frac.wrapping_add(bits);
        let t = 1.0 - 2.0 * (frac as f64 * SCALE);
        sum.add(t / l as f64);
        disc += t;
        if 2 * l >= n_terms {
            disc_max = disc_max.max(disc.abs());
        }
        if l >= start {
            let s = sum.sum();
            window.add(s);
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    let value = window.sum() / averaging_window as f64;
    let n = n_terms as f64;
    // moving x by x_err moves each term by at most 2·x_err away from jumps
    let bound = (hi - lo) + (1.0 + 2.0 * disc_max) / start as f64 + 2.0 * x_err * n + 1e-15 * n.ln();
    Ok(EvalResult::new(value, bound, n_terms))
}

/// Oracle with the default window `⌊√n_terms⌋`.
pub fn g_series_oracle_default(x: &RealSpec, n_terms: usize) -> Result<EvalResult> {
    g_series_oracle(x, n_terms, (n_terms as f64).sqrt() as usize)
}

/// `g(x) = W(x) + H(x)` from one orbit expansion.
pub fn g_fast(x: &RealSpec, tol: f64) -> Result<WiltonEval> {
    let orbit = cf_expand_default(x)?;
    g_fast_orbit(&orbit, tol)
}

pub fn g_fast_orbit(orbit: &CfOrbit, tol: f64) -> Result<WiltonEval> {
    let w = wilton_orbit(orbit, tol / 2.0);
    let h = h_orbit(orbit, tol / 2.0)?;
    Ok(WiltonEval {
        value: w.value + h.value,
        abs_error_bound: w.abs_error_bound + h.abs_error_bound + f64::EPSILON * (w.value.abs() + h.value.abs()),
        depth: w.depth.max(h.depth),
        terminated: orbit.terminated(),
    })
}

/// `g` with `W` to full stored depth and `G` from the tabulated `F`.
pub fn g_fast_tabulated(orbit: &CfOrbit) -> Result<WiltonEval> {
    let w = wilton_orbit(orbit, 0.0);
    let g = g_big_orbit_tabulated(orbit)?;
    Ok(WiltonEval {
        value: w.value - 2.0 * g.value,
        abs_error_bound: w.abs_error_bound + 2.0 * g.abs_error_bound,
        depth: w.depth.max(g.depth),
        terminated: orbit.terminated(),
    })
}

fn check_pair(r: u64, b: u64) -> Result<()> {
    if b < 2 || r == 0 || r >= b {
        return Err(Error::Domain(format!("cotangent sum needs 1 <= r < b, got r = {r}, b = {b}")));
    }
    if crate::cf::gcd(r as u128, b as u128) != 1 {
        return Err(Error::Domain(format!("gcd({r}, {b}) != 1")));
    }
    Ok(())
}

/// `cot(πk/b)` for `k = 0..=b/2`, with `cot(π/2) = 0` exactly.
fn cot_table(b: u64) -> Vec<f64> {
    let half = b / 2;
    (0..=half)
        .map(|k| {
            if k == 0 {
                f64::NAN
            } else if 2 * k == b {
                0.0
            } else {
                let t = std::f64::consts::PI * k as f64 / b as f64;
                t.cos() / t.sin()
            }
        })
        .collect()
}

fn cotangent_with(r: u64, b: u64, table: &[f64]) -> f64 {
    let mut acc = Neumaier::default();
    let bf = b as f64;
    for m in 1..b {
        let k = ((m as u128 * r as u128) % b as u128) as u64;
        let c = if 2 * k <= b { table[k as usize] } else { -table[(b - k) as usize] };
        acc.add(-(m as f64 / bf) * c);
    }
    acc.sum()
}

/// `c₀(r/b)`. Terms are folded onto `[0, π/2]` so that `c₀((b−r)/b)` is the
/// exact negative of `c₀(r/b)`.
pub fn cotangent_sum(r: u64, b: u64) -> Result<f64> {
    check_pair(r, b)?;
    Ok(cotangent_with(r, b, &cot_table(b)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub r: u64,
    pub b: u64,
    #[serde(rename = "c0")]
    pub value: f64,
    #[serde(rename = "c0_over_b")]
    pub normalized: f64,
}

/// `c₀(r/b)` for every `r` coprime to `b` with `a0·b ≤ r ≤ a1·b`, ordered by `r`.
pub fn scan_cotangent(b: u64, a0: f64, a1: f64) -> Result<Vec<ScanRecord>> {
    if b < 3 {
        return Err(Error::Domain(format!("scan needs b >= 3, got {b}")));
    }
    if !(0.0 < a0 && a0 < a1 && a1 <= 1.0) {
        return Err(Error::Domain(format!("scan needs 0 < a0 < a1 <= 1, got {a0}, {a1}")));
    }
    let lo = ((a0 * b as f64).ceil() as u64).max(1);
    let hi = ((a1 * b as f64).floor() as u64).min(b - 1);
    let table = cot_table(b);
    let rs: Vec<u64> = (lo..=hi).filter(|&r| crate::cf::gcd(r as u128, b as u128) == 1).collect();
    Ok(rs
        .par_iter()
        .map(|&r| {
            let value = cotangent_with(r, b, &table);
            ScanRecord { r, b, value, normalized: value / b as f64 }
        })
        .collect())
}

/// CSV with header `r,b,c0,c0_over_b`.
pub fn write_scan_csv<W: Write>(records: &[ScanRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in records {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}
