//! Invariant suites run by `wilton-lab verify`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cf::{cf_expand_default, CfOrbit, RealSpec};
use crate::error::{Error, Result};
use crate::gfun::{cotangent_sum, g_fast, g_series_oracle_default};
use crate::measure::{
    gauss_measure, j_set_probe, ks_statistic_gauss, preimage_measure, sample_gauss, transfer_norm_ratio, Interval,
};
use crate::special::{
    a_lambda, a_one, direct_a_oracle, f_func, f_tabulated, phi2, EULER_GAMMA, F_MAX, LN_2PI, PI2_OVER_36,
};
use crate::wilton::{partial_sum_l, wilton};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Cf,
    Special,
    Wilton,
    Gfun,
    Measure,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cf" => Suite::Cf,
            "special" => Suite::Special,
            "wilton" => Suite::Wilton,
            "gfun" => Suite::Gfun,
            "measure" => Suite::Measure,
            "all" => Suite::All,
            _ => return Err(Error::Parse(format!("unknown suite {s:?}"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Cf => "cf",
            Suite::Special => "special",
            Suite::Wilton => "wilton",
            Suite::Gfun => "gfun",
            Suite::Measure => "measure",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    /// Informational checks never fail a run.
    pub hard: bool,
    pub detail: String,
}

impl Check {
    fn hard(suite: Suite, name: &str, passed: bool, detail: String) -> Self {
        Check { suite: suite.to_string(), name: name.into(), passed, hard: true, detail }
    }

    fn info(suite: Suite, name: &str, detail: String) -> Self {
        Check { suite: suite.to_string(), name: name.into(), passed: true, hard: false, detail }
    }

    fn failed(suite: Suite, name: &str, err: Error) -> Self {
        Check::hard(suite, name, false, format!("error: {err}"))
    }
}

/// True when no hard check failed.
pub fn all_hard_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed || !c.hard)
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    match suite {
        Suite::Cf => cf_suite(seed),
        Suite::Special => special_suite(),
        Suite::Wilton => wilton_suite(seed),
        Suite::Gfun => gfun_suite(seed),
        Suite::Measure => measure_suite(seed),
        Suite::All => [Suite::Cf, Suite::Special, Suite::Wilton, Suite::Gfun, Suite::Measure]
            .into_iter()
            .flat_map(|s| run_suite(s, seed))
            .collect(),
    }
}

fn wrap(suite: Suite, name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(suite, name, e))
}

/// `β_k·2^64 = |q_k x − p_k|·2^64` as an integer for a 64-bit dyadic orbit.
fn scaled_beta(orbit: &CfOrbit, bits: u128, k: usize) -> u128 {
    if k == 0 {
        return bits;
    }
    let a = orbit.q[k - 1] * bits;
    let b = orbit.p[k - 1] << 64;
    a.abs_diff(b)
}

/// Counts orbit positions with `α_m α_{m+1} > 1/2` over random 64-bit
/// dyadic orbits, using exact integer `β`.
pub fn orbit_pair_violations(orbits: usize, seed: u64) -> Result<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut pairs = 0;
    for _ in 0..orbits {
        let x = RealSpec::random_dyadic(&mut rng, 64)?;
        let RealSpec::Dyadic { bits, .. } = x else { unreachable!() };
        let orbit = cf_expand_default(&x)?;
        let n = orbit.depth();
        for m in 0..n.saturating_sub(1) {
            // β_{m+1} ≤ β_{m−1}/2 with β_{−1} = 1
            let prev = if m == 0 { 1u128 << 64 } else { scaled_beta(&orbit, bits, m - 1) };
            let next = scaled_beta(&orbit, bits, m + 1);
            pairs += 1;
            if 2 * next > prev || orbit.alpha[m] * orbit.alpha[m + 1] > 0.5 * (1.0 + 4.0 * f64::EPSILON) {
                violations += 1;
            }
        }
    }
    Ok((violations, pairs))
}

fn cf_suite(seed: u64) -> Vec<Check> {
    let s = Suite::Cf;
    vec![
        wrap(s, "orbit pair bound α_m α_{m+1} ≤ 1/2", || {
            let (v, pairs) = orbit_pair_violations(10_000, seed)?;
            Ok(Check::hard(s, "orbit pair bound α_m α_{m+1} ≤ 1/2", v == 0, format!("{v} violations in {pairs} pairs")))
        }),
        wrap(s, "convergent determinant ±1", || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let mut bad = 0;
            for _ in 0..1000 {
                let o = cf_expand_default(&RealSpec::random_dyadic(&mut rng, 64)?)?;
                for k in 1..o.depth() {
                    let lhs = o.p[k] * o.q[k - 1];
                    let rhs = o.p[k - 1] * o.q[k];
                    if lhs.abs_diff(rhs) != 1 {
                        bad += 1;
                    }
                }
            }
            Ok(Check::hard(s, "convergent determinant ±1", bad == 0, format!("{bad} failures")))
        }),
        wrap(s, "golden orbit", || {
            let o = cf_expand_default(&RealSpec::golden())?;
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let err = (0..20).map(|k| (o.beta[k] - g.powi(k as i32 + 1)).abs()).fold(0.0, f64::max);
            Ok(Check::hard(s, "golden orbit", err < 1e-14, format!("max |β_k − g^(k+1)| = {err:.2e}")))
        }),
    ]
}

fn special_suite() -> Vec<Check> {
    let s = Suite::Special;
    vec![
        {
            let a = a_one();
            let d = (a.value - (LN_2PI - EULER_GAMMA)).abs();
            Check::hard(s, "A(1) = log 2π − γ", d < 1e-8, format!("A(1) = {}, diff {d:.2e}", a.value))
        },
        wrap(s, "φ₂ at integers", || {
            let r = phi2(3.0, 1e-12)?;
            let d = (r.value - PI2_OVER_36).abs();
            Ok(Check::hard(s, "φ₂ at integers", d < 1e-12, format!("diff {d:.2e}")))
        }),
        wrap(s, "F(1) = 0", || {
            let f = f_func(1.0, 1e-11)?;
            Ok(Check::hard(s, "F(1) = 0", f.value.abs() <= f.abs_error_bound, format!("F(1) = {:.2e} ± {:.1e}", f.value, f.abs_error_bound)))
        }),
        wrap(s, "A(λ) against breakpoint oracle", || {
            let mut worst: f64 = 0.0;
            let mut ok = true;
            for (p, q) in [(1u64, 2u64), (1, 3), (2, 5), (5, 8), (7, 9)] {
                let a = a_lambda(p as f64 / q as f64, 1e-10)?;
                let o = direct_a_oracle(p, q, 200_000)?;
                let d = (a.value - o.value).abs();
                ok &= d <= a.abs_error_bound + o.abs_error_bound && d < 1e-8;
                worst = worst.max(d);
            }
            Ok(Check::hard(s, "A(λ) against breakpoint oracle", ok, format!("max diff {worst:.2e}")))
        }),
        wrap(s, "|φ₂| ≤ π²/36", || {
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let mut worst: f64 = 0.0;
            for _ in 0..2000 {
                let lam: f64 = rng.random_range(-10.0..10.0);
                let r = phi2(lam, 1e-6)?;
                worst = worst.max(r.value.abs() - r.abs_error_bound);
            }
            Ok(Check::hard(s, "|φ₂| ≤ π²/36", worst <= PI2_OVER_36, format!("max |φ₂| − bound = {worst:.6}")))
        }),
        wrap(s, "F_max covers |F|", || {
            let mut worst: f64 = 0.0;
            for k in 1..=4000 {
                let t = f_tabulated(k as f64 / 4000.0)?;
                worst = worst.max(t.value.abs() + t.abs_error_bound);
            }
            Ok(Check::hard(s, "F_max covers |F|", worst <= F_MAX, format!("max |F| + bound = {worst:.5}, F_max = {F_MAX}")))
        }),
    ]
}

/// Largest `|W(x) − log(1/x) + x W(α(x))| − bounds` over random dyadics;
/// returns `(violations, worst excess)`.
pub fn functional_equation_residuals(points: usize, seed: u64) -> Result<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..points {
        let x = RealSpec::random_dyadic(&mut rng, 64)?;
        let w = wilton(&x, 1e-12)?;
        let shifted = match x.shifted() {
            Ok(y) => y,
            Err(Error::Terminated { .. }) => continue,
            Err(e) => return Err(e),
        };
        let wy = wilton(&shifted, 1e-12)?;
        let xf = x.to_f64();
        let resid = (w.value - (1.0 / xf).ln() + xf * wy.value).abs();
        let allowed = w.abs_error_bound + xf * wy.abs_error_bound + 8.0 * f64::EPSILON * (1.0 / xf).ln().abs().max(1.0);
        worst = worst.max(resid - allowed);
        if resid > allowed {
            violations += 1;
        }
    }
    Ok((violations, worst))
}

fn wilton_suite(seed: u64) -> Vec<Check> {
    let s = Suite::Wilton;
    vec![
        wrap(s, "closed forms", || {
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let a = (wilton(&RealSpec::golden(), 1e-12)?.value - (1.0 / g).ln() / (1.0 + g)).abs();
            let b = (wilton(&RealSpec::sqrt2_minus_one(), 1e-12)?.value - (1.0 + 2f64.sqrt()).ln() / 2f64.sqrt()).abs();
            Ok(Check::hard(s, "closed forms", a < 1e-10 && b < 1e-10, format!("golden {a:.1e}, √2−1 {b:.1e}")))
        }),
        wrap(s, "functional equation", || {
            let (v, worst) = functional_equation_residuals(1000, seed)?;
            Ok(Check::hard(s, "functional equation", v == 0, format!("{v} violations, worst residual − bound = {worst:.2e}")))
        }),
        wrap(s, "alternating brackets", || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            let mut misses = 0;
            let mut total = 0;
            for _ in 0..200 {
                let x = RealSpec::random_dyadic(&mut rng, 64)?;
                let w = wilton(&x, 1e-12)?;
                let depth = cf_expand_default(&x)?.depth();
                for m in 0..(depth.saturating_sub(2) / 2).min(5) {
                    let lo = partial_sum_l(&x, 2 * m + 1)?;
                    let hi = partial_sum_l(&x, 2 * m)?;
                    total += 1;
                    if !(lo - w.abs_error_bound <= w.value && w.value <= hi + w.abs_error_bound) {
                        misses += 1;
                    }
                }
            }
            Ok(Check::info(s, "alternating brackets", format!("{misses} of {total} bracket pairs miss W")))
        }),
    ]
}

fn gfun_suite(seed: u64) -> Vec<Check> {
    let s = Suite::Gfun;
    vec![
        wrap(s, "route equivalence", || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
            let mut bad = 0;
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let x = RealSpec::random_dyadic(&mut rng, 64)?;
                let fast = g_fast(&x, 1e-8)?;
                let oracle = g_series_oracle_default(&x, 1_000_000)?;
                let ratio = (fast.value - oracle.value).abs() / (fast.abs_error_bound + oracle.abs_error_bound);
                worst = worst.max(ratio);
                if ratio > 1.0 {
                    bad += 1;
                }
            }
            Ok(Check::hard(s, "route equivalence", bad == 0, format!("{bad} of 100 outside bounds, worst diff/bound = {worst:.3}")))
        }),
        wrap(s, "antisymmetry", || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
            let tol = 1e-8;
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let bits: u64 = rng.random::<u64>() | 1;
                let a = g_fast(&RealSpec::dyadic(bits as u128, 64)?, tol)?;
                let b = g_fast(&RealSpec::dyadic((1u128 << 64) - bits as u128, 64)?, tol)?;
                worst = worst.max((a.value + b.value).abs());
            }
            Ok(Check::hard(s, "antisymmetry", worst <= 2.0 * tol, format!("max |g(x) + g(1−x)| = {worst:.2e}")))
        }),
        wrap(s, "cotangent sums", || {
            let half = cotangent_sum(1, 2)?;
            let third = (cotangent_sum(1, 3)? - 1.0 / (3.0 * 3f64.sqrt())).abs();
            let mut anti: f64 = 0.0;
            for b in [10u64, 101, 1000, 9973, 10_000] {
                for r in (1..b).step_by((b / 50).max(1) as usize) {
                    if crate::cf::gcd(r as u128, b as u128) == 1 {
                        anti = anti.max((cotangent_sum(b - r, b)? + cotangent_sum(r, b)?).abs());
                    }
                }
            }
            let ok = half == 0.0 && third < 1e-12 && anti < 1e-9;
            Ok(Check::hard(s, "cotangent sums", ok, format!("c₀(1/2) = {half}, c₀(1/3) err {third:.1e}, antisymmetry {anti:.1e}")))
        }),
        wrap(s, "reciprocal pairs", || {
            let b = 101u64;
            let pairs: Vec<String> = [2u64, 3, 5]
                .iter()
                .map(|&r| {
                    let inv = (1..b).find(|&t| (t * r) % b == 1).unwrap_or(0);
                    format!("c₀({r}/{b}) = {:.6}, c₀({inv}/{b}) = {:.6}", cotangent_sum(r, b).unwrap_or(f64::NAN), cotangent_sum(inv, b).unwrap_or(f64::NAN))
                })
                .collect();
            Ok(Check::info(s, "reciprocal pairs", pairs.join("; ")))
        }),
    ]
}

fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    Interval::new(lo, if hi > lo { hi } else { (lo + 1e-3).min(1.0) }).expect("ordered")
}

fn measure_suite(seed: u64) -> Vec<Check> {
    let s = Suite::Measure;
    let mut checks = vec![
        wrap(s, "preimage invariance", || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let iv = random_interval(&mut rng);
                let pre = preimage_measure(iv, 100_000)?;
                worst = worst.max((pre.value - gauss_measure(iv)).abs());
            }
            Ok(Check::hard(s, "preimage invariance", worst <= 1e-9, format!("max |m(α⁻¹I) − m(I)| = {worst:.2e}")))
        }),
        wrap(s, "inverse-CDF sampling", || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 6);
            let mut xs: Vec<f64> = (0..100_000).map(|_| sample_gauss(&mut rng)).collect();
            let ks = ks_statistic_gauss(&mut xs);
            Ok(Check::hard(s, "inverse-CDF sampling", ks < 0.01, format!("KS = {ks:.4}")))
        }),
    ];
    for p in [1.25, 1.5, 2.0] {
        for n in 1..=6 {
            let name = format!("contraction n={n} p={p}");
            checks.push(wrap(s, &name, || {
                let r = transfer_norm_ratio(n, p, 100_000, seed)?;
                Ok(Check::hard(
                    s,
                    &name,
                    r.pass,
                    format!("ratio {:.5} ± {:.5}, bound {:.5}", r.estimate, r.std_error, r.bound),
                ))
            }));
        }
    }
    for (d, h, u, v) in [(0usize, 1usize, 0.0, 0.0), (0, 1, 3.0, 1.0), (1, 2, 1.0, 0.5)] {
        let name = format!("J-set d={d} h={h} u={u} v={v}");
        checks.push(wrap(s, &name, || {
            let r = j_set_probe(d, h, u, v, 100_000, seed)?;
            Ok(Check::info(
                s,
                &name,
                format!("m(J) ≈ {:.5} ± {:.5}, stated bound {:.5}{}", r.estimate, r.std_error, r.bound, if r.exceeds_bound { " (exceeds)" } else { "" }),
            ))
        }));
    }
    checks
}
