//! Wilton's function `W(x) = Σ_k (−1)^k γ_k(x)`, the correction
//! `G(x) = Σ_j (−1)^j β_{j−1}(x) F(α_j(x))` with `H = −2G`, and the transfer
//! operator `(Tf)(x) = x f(α(x))` applied to `l(x) = log(1/x)`.

use serde::Serialize;

use crate::cf::{cf_expand_default, orbit_terms, CfOrbit, RealSpec};
use crate::error::Result;
use crate::special::{f_auto, f_perturbation_bound, f_tabulated, EvalResult, F_MAX};

/// Relative error allowed for the stored orbit points `α_k`.
const ALPHA_REL: f64 = 4.0 * f64::EPSILON;

/// A sum along the Gauss-map orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WiltonEval {
    pub value: f64,
    pub abs_error_bound: f64,
    /// Last orbit index included.
    pub depth: usize,
    /// The input is rational and its expansion ended; `value` is the finite
    /// partial sum.
    pub terminated: bool,
}

impl WiltonEval {
    pub fn as_eval(&self) -> EvalResult {
        EvalResult::new(self.value, self.abs_error_bound, self.depth + 1)
    }

    pub fn contains(&self, other: f64) -> bool {
        (self.value - other).abs() <= self.abs_error_bound
    }
}

/// `W(x)`. The bound may exceed `tol` only when the representation of `x`
/// carries too few partial quotients (short dyadics).
pub fn wilton(x: &RealSpec, tol: f64) -> Result<WiltonEval> {
    let orbit = cf_expand_default(x)?;
    Ok(wilton_orbit(&orbit, tol))
}

/// `W` from an expanded orbit.
pub fn wilton_orbit(orbit: &CfOrbit, tol: f64) -> WiltonEval {
    let n = orbit.depth();
    // suffix[k] bounds Σ_{j≥k} γ_j
    let mut suffix = vec![0.0; n + 1];
    suffix[n] = orbit.gamma_tail_bound();
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + orbit.gamma[k];
    }
    let stop = (0..n).find(|&k| suffix[k + 1] <= tol).unwrap_or(n.saturating_sub(1));
    let mut value = 0.0;
    let mut magnitude = 0.0;
    for k in 0..=stop.min(n.saturating_sub(1)) {
        let t = orbit.gamma[k];
        value += if k % 2 == 0 { t } else { -t };
        magnitude += t;
    }
    let rounding = 4.0 * (stop as f64 + 4.0) * f64::EPSILON * magnitude;
    WiltonEval { value, abs_error_bound: suffix[stop + 1] + rounding, depth: stop, terminated: orbit.terminated() }
}

/// `ℒ(x, n) = Σ_{v≤n} (−1)^v (T^v l)(x)`.
pub fn partial_sum_l(x: &RealSpec, n: usize) -> Result<f64> {
    let orbit = orbit_terms(x, n)?;
    Ok(orbit.gamma[..=n].iter().enumerate().map(|(v, g)| if v % 2 == 0 { *g } else { -*g }).sum())
}

/// `(T^n l)(x) = β_{n−1}(x) log(1/α_n(x)) = γ_n(x)`.
pub fn transfer_apply_l(x: &RealSpec, n: usize) -> Result<f64> {
    Ok(orbit_terms(x, n)?.gamma[n])
}

/// `G(x)`.
pub fn g_big(x: &RealSpec, tol: f64) -> Result<WiltonEval> {
    let orbit = cf_expand_default(x)?;
    g_big_orbit(&orbit, tol)
}

/// `H(x) = −2 G(x)`.
pub fn h_func(x: &RealSpec, tol: f64) -> Result<WiltonEval> {
    let orbit = cf_expand_default(x)?;
    h_orbit(&orbit, tol)
}

pub fn h_orbit(orbit: &CfOrbit, tol: f64) -> Result<WiltonEval> {
    let g = g_big_orbit(orbit, tol / 2.0)?;
    Ok(WiltonEval { value: -2.0 * g.value, abs_error_bound: 2.0 * g.abs_error_bound, ..g })
}

/// `G` from an expanded orbit. Half of `tol` goes to truncation, half to the
/// evaluations of `F`, shared evenly by weight.
pub fn g_big_orbit(orbit: &CfOrbit, tol: f64) -> Result<WiltonEval> {
    let n = orbit.depth();
    // weight[j] bounds Σ_{i≥j} β_{i−1}
    let mut weight = vec![0.0; n + 1];
    weight[n] = orbit.tail_weight();
    for j in (0..n).rev() {
        weight[j] = weight[j + 1] + orbit.beta_prev(j);
    }
    let stop = (0..n).find(|&j| F_MAX * weight[j + 1] <= tol / 2.0).unwrap_or(n.saturating_sub(1));
    let total_weight = weight[0] - weight[stop + 1];
    let eps = tol / (2.0 * total_weight);
    let mut value = 0.0;
    let mut bound = F_MAX * weight[stop + 1];
    for j in 0..=stop {
        let alpha = orbit.alpha[j];
        let f = f_auto(alpha, eps)?;
        let w = orbit.beta_prev(j);
        let term = w * f.value;
        value += if j % 2 == 0 { term } else { -term };
        bound += w * (f.abs_error_bound + f_perturbation_bound(alpha, ALPHA_REL)) + 4.0 * f64::EPSILON * term.abs() * (j as f64 + 2.0);
    }
    Ok(WiltonEval { value, abs_error_bound: bound, depth: stop, terminated: orbit.terminated() })
}

/// `G` over the whole stored orbit with every `F` taken from the table.
/// Cheap and uniformly accurate to about 1e-3; used for sampling.
pub fn g_big_orbit_tabulated(orbit: &CfOrbit) -> Result<WiltonEval> {
    let n = orbit.depth();
    let mut value = 0.0;
    let mut bound = F_MAX * orbit.tail_weight();
    for j in 0..n {
        let alpha = orbit.alpha[j];
        let f = f_tabulated(alpha)?;
        let w = orbit.beta_prev(j);
        value += if j % 2 == 0 { w * f.value } else { -w * f.value };
        bound += w * (f.abs_error_bound + f_perturbation_bound(alpha, ALPHA_REL)) + 4.0 * f64::EPSILON * (w * f.value).abs() * (j as f64 + 2.0);
    }
    Ok(WiltonEval { value, abs_error_bound: bound, depth: n.saturating_sub(1), terminated: orbit.terminated() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{a_one, f_func};

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn wilton_golden_closed_form() {
        let g = golden();
        let w = wilton(&RealSpec::golden(), 1e-12).unwrap();
        let exact = (1.0 / g).ln() / (1.0 + g);
        assert!((w.value - exact).abs() < 1e-10, "{w:?}");
        assert!((w.value - 0.297_405_263_675).abs() < 1e-11);
        assert!(!w.terminated);
    }

    #[test]
    fn wilton_sqrt2_closed_form() {
        let w = wilton(&RealSpec::sqrt2_minus_one(), 1e-12).unwrap();
        let exact = (1.0 + 2f64.sqrt()).ln() / 2f64.sqrt();
        assert!((w.value - exact).abs() < 1e-10);
        assert!((w.value - 0.623_225_2).abs() < 1e-7);
    }

    #[test]
    fn wilton_rational_terminates() {
        let x: RealSpec = "13/29".parse().unwrap();
        let w = wilton(&x, 1e-12).unwrap();
        assert!(w.terminated);
        let l = partial_sum_l(&x, 2).unwrap();
        assert!((w.value - l).abs() < 1e-14);
    }

    #[test]
    fn partial_sums_golden() {
        let g = golden();
        let x = RealSpec::golden();
        assert!((partial_sum_l(&x, 0).unwrap() - (1.0 / g).ln()).abs() < 1e-15);
        let w = (1.0 / g).ln() / (1.0 + g);
        let mut prev = f64::INFINITY;
        for n in 0..30 {
            let err = (partial_sum_l(&x, n).unwrap() - w).abs();
            // the remainder is g^{n+1} W(g)
            assert!((err - g.powi(n as i32 + 1) * w).abs() < 1e-13);
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn transfer_of_log() {
        let x: RealSpec = "7/10".parse().unwrap();
        assert!((transfer_apply_l(&x, 0).unwrap() - (10.0f64 / 7.0).ln()).abs() < 1e-15);
        assert!((transfer_apply_l(&x, 1).unwrap() - 0.7 * (7.0f64 / 3.0).ln()).abs() < 1e-15);
        let g = golden();
        for n in 0..10 {
            let t = transfer_apply_l(&RealSpec::golden(), n).unwrap();
            assert!((t - g.powi(n as i32) * (1.0 / g).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn g_big_golden() {
        let g = golden();
        let tol = 1e-9;
        let big = g_big(&RealSpec::golden(), tol).unwrap();
        let f = f_func(g, 1e-11).unwrap();
        let exact = f.value / (1.0 + g);
        assert!((big.value - exact).abs() <= big.abs_error_bound + f.abs_error_bound);
        assert!(big.abs_error_bound <= tol);
    }

    #[test]
    fn h_is_minus_two_g() {
        let x = RealSpec::sqrt2_minus_one();
        let g = g_big(&x, 1e-8).unwrap();
        let h = h_func(&x, 2e-8).unwrap();
        assert_eq!(h.value, -2.0 * g.value);
    }

    #[test]
    fn h_near_zero() {
        let x = RealSpec::dyadic(1u128 << 37, 64).unwrap(); // 2^-27 ≈ 7.5e-9
        let h = h_func(&x, 1e-6).unwrap();
        assert!((h.value + a_one().value).abs() < 1e-6, "{h:?}");
    }

    #[test]
    fn tabulated_g_agrees() {
        let x = RealSpec::sqrt2_minus_one();
        let orbit = crate::cf::cf_expand_default(&x).unwrap();
        let t = g_big_orbit_tabulated(&orbit).unwrap();
        let a = g_big(&x, 1e-9).unwrap();
        assert!((t.value - a.value).abs() <= t.abs_error_bound + a.abs_error_bound);
        assert!(t.abs_error_bound < 5e-3);
    }

    #[test]
    fn g_minus_first_term_is_order_x() {
        for k in 5..=20 {
            let x = RealSpec::dyadic(1u128 << (64 - k), 64).unwrap();
            let xf = x.to_f64();
            let big = g_big(&x, 1e-9).unwrap();
            let f = f_func(xf, 1e-11).unwrap();
            assert!(((big.value - f.value) / xf).abs() < 2.0, "k = {k}");
        }
    }
}
