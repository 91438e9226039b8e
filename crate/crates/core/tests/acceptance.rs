//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails. Runs without the libtest harness so
//! the lines are always shown.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wilton_core::gfun::{cotangent_sum, g_fast, g_series_oracle_default};
use wilton_core::measure::{gauss_measure, preimage_measure, transfer_norm_ratio, Interval};
use wilton_core::moments::{
    calib_moment_l, calib_weighted_moment, moment_table, ratios_bounded, write_table_json, MomentEstimate, CALIBRATION_BUDGET,
};
use wilton_core::special::{a_one, EULER_GAMMA, LN_2PI};
use wilton_core::verify::{functional_equation_residuals, orbit_pair_violations};
use wilton_core::wilton::wilton;
use wilton_core::RealSpec;

const SEED: u64 = 42;

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn c1_constant_a() -> (bool, String) {
    let (a, dt) = timed(a_one);
    let err = (a.value - (LN_2PI - EULER_GAMMA)).abs();
    (err <= 1e-8 && dt < Duration::from_secs(1), format!("A(1) = {:.12}, err {err:.1e}, {dt:.2?}", a.value))
}

fn c2_closed_forms() -> (bool, String) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (wg, tg) = timed(|| wilton(&RealSpec::golden(), 1e-10).unwrap());
    let (ws, ts) = timed(|| wilton(&RealSpec::sqrt2_minus_one(), 1e-10).unwrap());
    let eg = (wg.value - (1.0 / g).ln() / (1.0 + g)).abs();
    let es = (ws.value - (1.0 + 2f64.sqrt()).ln() / 2f64.sqrt()).abs();
    let limit = Duration::from_millis(1);
    let ok = eg <= 1e-10 && es <= 1e-10 && tg < limit && ts < limit;
    (ok, format!("golden err {eg:.1e} ({tg:.2?}), √2−1 err {es:.1e} ({ts:.2?})"))
}

fn c3_functional_equation() -> (bool, String) {
    let (r, dt) = timed(|| functional_equation_residuals(1000, SEED).unwrap());
    let (violations, worst) = r;
    (violations == 0 && dt < Duration::from_secs(1), format!("{violations} violations, worst residual − bound {worst:.1e}, {dt:.2?}"))
}

fn c4_route_equivalence() -> (bool, String) {
    let (r, dt) = timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut bad = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = RealSpec::random_dyadic(&mut rng, 64).unwrap();
            let fast = g_fast(&x, 1e-8).unwrap();
            let oracle = g_series_oracle_default(&x, 1_000_000).unwrap();
            let ratio = (fast.value - oracle.value).abs() / (fast.abs_error_bound + oracle.abs_error_bound);
            worst = worst.max(ratio);
            if ratio > 1.0 {
                bad += 1;
            }
        }
        (bad, worst)
    });
    let (bad, worst) = r;
    (bad == 0 && dt < Duration::from_secs(120), format!("{bad}/100 outside bounds, worst diff/bound {worst:.3}, {dt:.1?}"))
}

fn c5_calibration() -> (bool, String) {
    let (r, dt) = timed(|| {
        (1..=12)
            .map(|l| calib_moment_l(l, CALIBRATION_BUDGET, SEED).unwrap().ratio_to_prediction)
            .map(|ratio| (ratio - 1.0).abs())
            .fold(0.0f64, f64::max)
    });
    (r <= 1e-3 && dt < Duration::from_secs(60), format!("max |M/L! − 1| = {r:.2e} over L = 1..12, {dt:.1?}"))
}

fn c6_weighted() -> (bool, String) {
    let w = calib_weighted_moment(1.0, 2, 4_000_000, SEED).unwrap();
    let rel = (w.value / 0.25 - 1.0).abs();
    let mut misses = Vec::new();
    for l in 1..=10 {
        let c = calib_weighted_moment(1.0, l, 1_000_000, SEED + l as u64).unwrap();
        if !c.within_bound {
            misses.push(l);
        }
    }
    (rel <= 5e-3 && misses.is_empty(), format!("∫x log²(1/x) = {:.6} (rel err {rel:.1e}), bound misses at L = {misses:?}", w.value))
}

fn c7_moment_asymptotics(rows: &[MomentEstimate], dt: Duration) -> (bool, String) {
    let dev: Vec<f64> = rows.iter().map(|r| (r.value_over_factorial - 0.567).abs()).collect();
    let in_band = rows.iter().all(|r| (0.45..=0.70).contains(&r.value_over_factorial));
    let decreasing = dev.windows(2).all(|w| w[1] < w[0]);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("K={} M/K! {:.5} ± {:.5} (ratio {:.4})", r.k, r.value_over_factorial, r.std_error / factorial(r.k), r.ratio_to_prediction))
        .collect();
    (in_band && decreasing && dt < Duration::from_secs(600), format!("{}; {dt:.1?}", table.join(", ")))
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn c8_bound(rows: &[MomentEstimate]) -> (bool, String) {
    let table: Vec<String> = rows.iter().map(|r| format!("K={} {:.4}/{:.4}", r.k, r.ratio_to_prediction, r.value_over_factorial)).collect();
    (rows.iter().any(|r| r.k == 4) && ratios_bounded(rows), format!("ratio and M/K!: {}", table.join(", ")))
}

fn c9_invariance() -> (bool, String) {
    let (worst, dt) = timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let iv = Interval::new(lo, hi.max(lo + 1e-12)).unwrap();
            let pre = preimage_measure(iv, 100_000).unwrap();
            worst = worst.max((pre.value - gauss_measure(iv)).abs());
        }
        worst
    });
    (worst <= 1e-9 && dt < Duration::from_secs(5), format!("max |m(α⁻¹I) − m(I)| = {worst:.1e}, {dt:.2?}"))
}

fn c10_contraction() -> (bool, String) {
    let (fails, dt) = timed(|| {
        let mut fails = Vec::new();
        for p in [1.25, 1.5, 2.0] {
            for n in 1..=6 {
                let r = transfer_norm_ratio(n, p, 100_000, SEED).unwrap();
                if !r.pass {
                    fails.push(format!("n={n} p={p}: {:.5} ± {:.5} > {:.5}", r.estimate, r.std_error, r.bound));
                }
            }
        }
        fails
    });
    (fails.is_empty() && dt < Duration::from_secs(60), format!("{} of 18 fail {fails:?}, {dt:.1?}", fails.len()))
}

fn c11_orbit_pairs() -> (bool, String) {
    let (violations, pairs) = orbit_pair_violations(10_000, SEED).unwrap();
    (violations == 0, format!("{violations} violations in {pairs} consecutive pairs"))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn c12_cotangent() -> (bool, String) {
    let half = cotangent_sum(1, 2).unwrap();
    let third = (cotangent_sum(1, 3).unwrap() - 1.0 / (3.0 * 3f64.sqrt())).abs();
    let mut anti: f64 = 0.0;
    let mut pairs = 0;
    let mut check = |r: u64, b: u64| {
        if gcd(r, b) == 1 {
            anti = anti.max((cotangent_sum(b - r, b).unwrap() + cotangent_sum(r, b).unwrap()).abs());
            pairs += 1;
        }
    };
    for b in 2..=200u64 {
        for r in 1..b {
            check(r, b);
        }
    }
    for b in [1000u64, 4096, 9973, 10_000] {
        for r in 1..b {
            check(r, b);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..2000 {
        let b = rng.random_range(2..=10_000u64);
        check(rng.random_range(1..b), b);
    }
    let ok = half == 0.0 && third <= 1e-12 && anti <= 1e-9;
    (ok, format!("c₀(1/2) = {half}, c₀(1/3) err {third:.1e}, max antisymmetry defect {anti:.1e} over {pairs} pairs"))
}

fn table_bytes(threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let rows = pool.install(|| moment_table(&[2, 5, 8], 50_000, SEED)).unwrap();
    let mut out = Vec::new();
    write_table_json(&rows, &mut out).unwrap();
    out
}

fn c13_determinism() -> (bool, String) {
    let one = table_bytes(1);
    let same = [2, 4].iter().all(|&t| table_bytes(t) == one);
    (same, format!("moment table bytes for 1, 2 and 4 threads {}", if same { "identical" } else { "differ" }))
}

fn main() {
    let mut outcomes = Vec::new();
    let mut record = |id: u32, name: &'static str, (passed, detail): (bool, String)| {
        println!("{} {id:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        outcomes.push(Outcome { id, name, passed, detail });
    };

    record(1, "constant A", c1_constant_a());
    record(2, "Wilton closed forms", c2_closed_forms());
    record(3, "functional equation", c3_functional_equation());
    record(4, "route equivalence", c4_route_equivalence());
    record(5, "engine calibration", c5_calibration());
    record(6, "weighted calibration", c6_weighted());

    let (main_rows, dt) = timed(|| moment_table(&[6, 8, 10], 10_000_000, SEED).unwrap());
    record(7, "moment asymptotics", c7_moment_asymptotics(&main_rows, dt));
    let mut even_rows = moment_table(&[4], 1_000_000, SEED).unwrap();
    even_rows.extend(main_rows);
    record(8, "two-sided bound", c8_bound(&even_rows));

    record(9, "measure invariance", c9_invariance());
    record(10, "contraction", c10_contraction());
    record(11, "orbit pair invariant", c11_orbit_pairs());
    record(12, "cotangent sums", c12_cotangent());
    record(13, "determinism", c13_determinism());

    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("{} {}: {}", o.id, o.name, o.detail)).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria:\n{}", failed.join("\n"));
        std::process::exit(1);
    }
    println!("all {} criteria passed", outcomes.len());
}
