//! Monte Carlo estimation of `M_K = ∫₀¹ |g(x)|^K dx` and the calibration
//! integrals `∫₀¹ l(x)^L dx = L!` and `∫₀¹ x^α l(x)^L dx = L!/(1+α)^{L+1}`.
//!
//! Since `g(1 − x) = −g(x)`, `M_K = 2∫₀^{1/2} |g|^K`. The sampler is an even
//! mixture of `x = e^{−u}` with `u ~ Gamma(K+1)` (density `l(x)^K/K!`) and
//! a uniform draw on the integration range.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::cf::cf_expand_default;
use crate::error::{Error, Result};
use crate::gfun::{g_fast_tabulated, g_series_oracle_default};
use crate::mc::{mc_stats, Welford};
use crate::measure::dyadic_near;
use crate::special::a_one;

/// Largest `K` accepted by [`moment_g`].
pub const MAX_K: u32 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ImportanceMc,
    StratifiedMc,
    OracleQuadrature,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::ImportanceMc => "importance_mc",
            Method::StratifiedMc => "stratified_mc",
            Method::OracleQuadrature => "oracle_quadrature",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    #[serde(rename = "K")]
    pub k: u32,
    pub value: f64,
    pub std_error: f64,
    pub prediction: f64,
    #[serde(rename = "ratio")]
    pub ratio_to_prediction: f64,
    /// `M_K / K!`, which tends to `2e^{−A(1)} = 0.56693`.
    pub value_over_factorial: f64,
    /// `M_K / π^K`.
    pub value_over_pi_k: f64,
    pub method: Method,
    pub samples: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_seconds: Option<f64>,
}

impl MomentEstimate {
    fn new(k: u32, stats: (f64, f64), method: Method, samples: u64, seed: u64) -> Self {
        let prediction = prediction(k);
        MomentEstimate {
            k,
            value: stats.0,
            std_error: stats.1,
            prediction,
            ratio_to_prediction: stats.0 / prediction,
            value_over_factorial: stats.0 / statrs::function::gamma::gamma(k as f64 + 1.0),
            value_over_pi_k: stats.0 / std::f64::consts::PI.powi(k as i32),
            method,
            samples,
            seed,
            wall_seconds: None,
        }
    }
}

/// `2 e^{−A(1)} Γ(K+1)`.
pub fn prediction(k: u32) -> f64 {
    let a = a_one().value;
    if k <= 15 {
        2.0 * (-a).exp() * statrs::function::gamma::gamma(k as f64 + 1.0)
    } else {
        (std::f64::consts::LN_2 - a + ln_gamma(k as f64 + 1.0)).exp()
    }
}

/// What is integrated against `dx`.
#[derive(Clone, Copy)]
enum Integrand {
    AbsG { k: u32, width: u32 },
    /// `x^α l(x)^L`
    WeightedLog { alpha: f64, l: u32 },
}

impl Integrand {
    fn eval(&self, x: f64, u: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
        match *self {
            Integrand::AbsG { k, width } => {
                let spec = dyadic_near(x, width, rng);
                let orbit = cf_expand_default(&spec)?;
                Ok(g_fast_tabulated(&orbit)?.value.abs().powi(k as i32))
            }
            Integrand::WeightedLog { alpha, l } => Ok((-alpha * u).exp() * u.powi(l as i32)),
        }
    }
}

fn dyadic_width(k: u32) -> u32 {
    if k <= 10 {
        64
    } else {
        128
    }
}

/// Mixture importance sampling of `∫₀^c f(x) dx`.
fn importance(shape: u32, c: f64, budget: u64, seed: u64, f: Integrand) -> Result<Welford> {
    let gamma = Gamma::new(shape as f64 + 1.0, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
    let log_norm = ln_gamma(shape as f64 + 1.0);
    let uniform_density = 1.0 / c;
    mc_stats(budget, seed, |rng: &mut ChaCha8Rng, _| {
        let u = if rng.random::<bool>() {
            gamma.sample(rng)
        } else {
            // x uniform on (0, c]
            let v: f64 = 1.0 - rng.random::<f64>();
            -(c * v).ln()
        };
        let x = (-u).exp();
        if !(x < c) || x <= 0.0 {
            return Ok(0.0);
        }
        let gamma_density = if u > 0.0 { (shape as f64 * u.ln() - log_norm).exp() } else { 0.0 };
        let density = 0.5 * gamma_density + 0.5 * uniform_density;
        Ok(f.eval(x, u, rng)? / density)
    })
}

fn check_budget(budget: u64) -> Result<()> {
    if budget < 2 {
        return Err(Error::Domain("budget must be at least 2 samples".into()));
    }
    Ok(())
}

/// The importance engine on `∫₀¹ l(x)^L dx`, which equals `L!`.
pub fn calib_moment_l(l: u32, budget: u64, seed: u64) -> Result<MomentEstimate> {
    check_budget(budget)?;
    let w = importance(l, 1.0, budget, seed, Integrand::WeightedLog { alpha: 0.0, l })?;
    let mut est = MomentEstimate::new(l, (w.mean(), w.std_error()), Method::ImportanceMc, budget, seed);
    est.prediction = statrs::function::gamma::gamma(l as f64 + 1.0);
    est.ratio_to_prediction = est.value / est.prediction;
    Ok(est)
}

/// Samples for calibration runs; the relative standard error is then about
/// 2.5·10⁻⁴.
pub const CALIBRATION_BUDGET: u64 = 16_000_000;

/// Pre-flight check run before moment tables: `∫ l^5 = 120` to 0.1%.
pub fn calibration_preflight(seed: u64) -> Result<(bool, MomentEstimate)> {
    let est = calib_moment_l(5, CALIBRATION_BUDGET, seed)?;
    Ok(((est.ratio_to_prediction - 1.0).abs() < 1e-3, est))
}

/// Result of the weighted calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedCalibration {
    pub alpha: f64,
    pub l: u32,
    /// Engine estimate of `∫₀^{1/2} x^α l^L dx`.
    pub lower_half: f64,
    pub std_error: f64,
    /// Exact `∫_{1/2}^1 x^α l^L dx`.
    pub upper_half: f64,
    /// `lower_half + upper_half`.
    pub value: f64,
    /// `Γ(L+1)/(1+α)^{L+1}`.
    pub exact: f64,
    /// `Γ(L+1) exp(−C L)` with `C = log(1+α) − 10⁻⁹`.
    pub decay_bound: f64,
    pub within_bound: bool,
}

/// The importance engine on `∫₀^{1/2} x^α l^L`, completed with the exact
/// `(1/2, 1)` piece and compared with `Γ(L+1)/(1+α)^{L+1}`.
pub fn calib_weighted_moment(alpha: f64, l: u32, budget: u64, seed: u64) -> Result<WeightedCalibration> {
    check_budget(budget)?;
    if !(alpha > 0.0 && alpha <= 4.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 4], got {alpha}")));
    }
    let w = importance(l, 0.5, budget, seed, Integrand::WeightedLog { alpha, l })?;
    let s = l as f64 + 1.0;
    let exact = statrs::function::gamma::gamma(s) / (1.0 + alpha).powf(s);
    // u = l(x) ∈ (0, log 2) on (1/2, 1)
    let upper_half = exact * gamma_lr(s, (1.0 + alpha) * std::f64::consts::LN_2);
    let lower_half = w.mean();
    let c = (1.0 + alpha).ln() - 1e-9;
    let decay_bound = statrs::function::gamma::gamma(s) * (-c * l as f64).exp();
    Ok(WeightedCalibration {
        alpha,
        l,
        lower_half,
        std_error: w.std_error(),
        upper_half,
        value: lower_half + upper_half,
        exact,
        decay_bound,
        within_bound: lower_half - 3.0 * w.std_error() <= decay_bound,
    })
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::Domain(format!("K must lie in 1..={MAX_K}, got {k}")));
    }
    Ok(())
}

/// `M_K` by mixture importance sampling with `g` from the orbit expansion.
pub fn moment_g(k: u32, budget: u64, seed: u64) -> Result<MomentEstimate> {
    check_k(k)?;
    check_budget(budget)?;
    let w = importance(k, 0.5, budget, seed, Integrand::AbsG { k, width: dyadic_width(k) })?;
    Ok(MomentEstimate::new(k, (2.0 * w.mean(), 2.0 * w.std_error()), Method::ImportanceMc, budget, seed))
}

/// Upper end of the `u = log(1/x)` range for stratified sampling, chosen so
/// that `∫_{U}^∞ u^K e^{−u} du < 10⁻⁹ K!`.
fn u_max(k: u32) -> f64 {
    let s = k as f64 + 1.0;
    let mut u = s + 10.0;
    while gamma_ur(s, u) > 1e-9 {
        u += 1.0;
    }
    u
}

/// Stratified sampling of `2∫_{log 2}^{U} |g(e^{−u})|^K e^{−u} du` with
/// equal-width strata in `u`. `eval` gives `g` at a point.
fn stratified<F>(k: u32, budget: u64, seed: u64, strata: u64, eval: F) -> Result<(f64, f64)>
where
    F: Fn(f64, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let lo = std::f64::consts::LN_2;
    let hi = u_max(k);
    let width = (hi - lo) / strata as f64;
    let per = (budget / strata).max(2);
    let mut value = 0.0;
    let mut var = 0.0;
    for s in 0..strata {
        let a = lo + s as f64 * width;
        let stream_seed = seed ^ (s + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let w = mc_stats(per, stream_seed, |rng: &mut ChaCha8Rng, _| {
            let u = a + width * rng.random::<f64>();
            let x = (-u).exp();
            Ok(eval(x, rng)?.abs().powi(k as i32) * x)
        })?;
        value += width * w.mean();
        var += width * width * w.variance() / per as f64;
    }
    Ok((2.0 * value, 2.0 * var.sqrt()))
}

const STRATA: u64 = 64;

/// `M_K` by stratified sampling in `u = log(1/x)`.
pub fn moment_g_stratified(k: u32, budget: u64, seed: u64) -> Result<MomentEstimate> {
    check_k(k)?;
    check_budget(budget)?;
    let width = dyadic_width(k);
    let stats = stratified(k, budget, seed, STRATA, |x, rng| {
        let orbit = cf_expand_default(&dyadic_near(x, width, rng))?;
        Ok(g_fast_tabulated(&orbit)?.value)
    })?;
    let per = (budget / STRATA).max(2);
    Ok(MomentEstimate::new(k, stats, Method::StratifiedMc, per * STRATA, seed))
}

/// `M_K` by stratified sampling with `g` from partial sums of the series
/// (`oracle_terms` terms per point). Slow; for cross-checks at small budgets.
pub fn moment_g_oracle(k: u32, budget: u64, seed: u64, oracle_terms: usize) -> Result<MomentEstimate> {
    check_k(k)?;
    check_budget(budget)?;
    let strata = STRATA.min(budget / 2).max(1);
    let stats = stratified(k, budget, seed, strata, |x, rng| {
        Ok(g_series_oracle_default(&dyadic_near(x, 64, rng), oracle_terms)?.value)
    })?;
    let per = (budget / strata).max(2);
    Ok(MomentEstimate::new(k, stats, Method::OracleQuadrature, per * strata, seed))
}

/// [`moment_g`] for each `K`, all with the same seed.
pub fn moment_table(k_list: &[u32], budget: u64, seed: u64) -> Result<Vec<MomentEstimate>> {
    k_list.iter().map(|&k| moment_g(k, budget, seed)).collect()
}

/// True when every `K ≥ 4` row has both `M_K/prediction` and `M_K/K!` in
/// `(0.2, 2.0)`.
pub fn ratios_bounded(rows: &[MomentEstimate]) -> bool {
    let inside = |v: f64| v > 0.2 && v < 2.0;
    rows.iter().filter(|r| r.k >= 4).all(|r| inside(r.ratio_to_prediction) && inside(r.value_over_factorial))
}

/// JSON array of rows.
pub fn write_table_json<W: Write>(rows: &[MomentEstimate], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}

/// CSV with the same columns as the JSON rows.
pub fn write_table_csv<W: Write>(rows: &[MomentEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::LN_2PI;

    #[test]
    fn prediction_values() {
        let c = prediction(0);
        assert!((c - 0.566_93).abs() < 1e-5);
        assert!((prediction(10) / 3_628_800.0 - c).abs() < 1e-12);
        let a = a_one().value;
        assert!((prediction(10).ln() - (2f64.ln() - a + 3_628_800f64.ln())).abs() < 1e-12);
        assert!((prediction(16) / prediction(15) - 16.0).abs() < 1e-9);
        // A(1) = log 2π − γ
        assert!((c - 2.0 * (crate::special::EULER_GAMMA - LN_2PI).exp()).abs() < 1e-12);
    }

    #[test]
    fn calibration_small() {
        let one = calib_moment_l(1, 200_000, 1).unwrap();
        assert!((one.value - 1.0).abs() < 3.0 * one.std_error + 1e-12);
        let five = calib_moment_l(5, 400_000, 2).unwrap();
        assert!((five.value - 120.0).abs() < 0.003 * 120.0);
        let ten = calib_moment_l(10, 400_000, 3).unwrap();
        assert!((ten.value / 3_628_800.0 - 1.0).abs() < 0.003);
    }

    #[test]
    fn weighted_calibration_small() {
        let r = calib_weighted_moment(1.0, 2, 400_000, 4).unwrap();
        assert!((r.exact - 0.25).abs() < 1e-15);
        assert!((r.value / 0.25 - 1.0).abs() < 0.005);
        let z = calib_weighted_moment(1.0, 0, 100_000, 4).unwrap();
        assert!((z.exact - 0.5).abs() < 1e-15);
        assert!((z.value - 0.5).abs() < 0.005);
        let big = calib_weighted_moment(1.0, 10, 400_000, 5).unwrap();
        assert!(big.within_bound);
        assert!(big.value <= 3_628_800.0 * (-0.5f64 * 10.0).exp());
        assert!(calib_weighted_moment(0.0, 2, 10, 1).is_err());
    }

    #[test]
    fn deterministic_and_symmetric_in_threads() {
        let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| moment_g(4, 30_000, 42)).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| moment_g(4, 30_000, 42)).unwrap();
        assert_eq!(a, b);
        assert!(moment_g(0, 100, 1).is_err());
        assert!(moment_g(15, 100, 1).is_err());
    }

    #[test]
    fn methods_agree_small_k() {
        for k in [1u32, 2, 4] {
            let imp = moment_g(k, 200_000, 7).unwrap();
            let strat = moment_g_stratified(k, 200_000, 8).unwrap();
            let sigma = (imp.std_error.powi(2) + strat.std_error.powi(2)).sqrt();
            assert!((imp.value - strat.value).abs() < 3.0 * sigma, "K = {k}: {imp:?} {strat:?}");
        }
    }

    #[test]
    fn first_moment_against_oracle() {
        let imp = moment_g(1, 400_000, 9).unwrap();
        let oracle = moment_g_oracle(1, 2_048, 10, 20_000).unwrap();
        let sigma = (imp.std_error.powi(2) + oracle.std_error.powi(2)).sqrt();
        assert!((imp.value - oracle.value).abs() < 3.0 * sigma, "{imp:?} {oracle:?}");
    }

    #[test]
    fn csv_mirrors_json() {
        let rows = moment_table(&[2, 3], 20_000, 1).unwrap();
        let mut j = Vec::new();
        write_table_json(&rows, &mut j).unwrap();
        let back: Vec<MomentEstimate> = serde_json::from_slice(&j).unwrap();
        assert_eq!(back, rows);
        let mut c = Vec::new();
        write_table_csv(&rows, &mut c).unwrap();
        let text = String::from_utf8(c).unwrap();
        assert!(text.starts_with("K,value,std_error,prediction,ratio,value_over_factorial,value_over_pi_k,method,samples,seed\n"));
        let from_csv: Vec<MomentEstimate> = csv::Reader::from_reader(text.as_bytes()).deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(from_csv, rows);
    }
}
