//! Continued fractions of points in (0,1) and the orbit of the Gauss map
//! `x -> {1/x}`.
//!
//! Rational and dyadic inputs are expanded with Euclid's algorithm in exact
//! integer arithmetic. The Gauss map is expanding, so iterating it in floating
//! point would lose every digit within a few dozen steps; here floating point
//! only enters when the exact remainders are turned into `α_k`, `β_k` and
//! `γ_k`. Because `β_k = r_k / r_{-1}` telescopes, every orbit quantity is a
//! ratio of exact integers and carries only a few ulps of rounding.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Widest dyadic grid supported.
pub const MAX_WIDTH: u32 = 128;

/// Default cap on the number of partial quotients extracted.
pub const DEFAULT_MAX_TERMS: usize = 512;

/// Extra coefficients read past the last orbit index so that the tails
/// `α_k = [0; a_{k+1}, ...]` of a coefficient input are accurate to f64.
const LOOKAHEAD: usize = 80;

/// The part of a continued fraction after the explicit prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CfTail {
    /// The listed block repeats forever.
    Periodic(Vec<u64>),
    /// The expansion ends after the prefix.
    Terminate,
}

/// How a point of (0,1) is presented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealSpec {
    /// `num/den` in lowest terms.
    Rational { num: u128, den: u128 },
    /// `bits / 2^width`.
    Dyadic { bits: u128, width: u32 },
    /// `[0; prefix..., tail...]`; `prefix` holds `a_1, a_2, ...` (the leading
    /// `a_0 = 0` is implicit).
    CfCoeffs { prefix: Vec<u64>, tail: CfTail },
}

impl RealSpec {
    pub fn rational(num: u128, den: u128) -> Result<Self> {
        let x = RealSpec::Rational { num, den };
        x.validate()?;
        Ok(x)
    }

    pub fn dyadic(bits: u128, width: u32) -> Result<Self> {
        let x = RealSpec::Dyadic { bits, width };
        x.validate()?;
        Ok(x)
    }

    pub fn cf(prefix: Vec<u64>, tail: CfTail) -> Result<Self> {
        let x = RealSpec::CfCoeffs { prefix, tail };
        x.validate()?;
        Ok(x)
    }

    /// `[0; (1)]`, i.e. `(√5 − 1)/2`.
    pub fn golden() -> Self {
        RealSpec::CfCoeffs { prefix: vec![], tail: CfTail::Periodic(vec![1]) }
    }

    /// `[0; (2)]`, i.e. `√2 − 1`.
    pub fn sqrt2_minus_one() -> Self {
        RealSpec::CfCoeffs { prefix: vec![], tail: CfTail::Periodic(vec![2]) }
    }

    /// A uniformly random point of the grid `{1, ..., 2^width − 1} / 2^width`.
    pub fn random_dyadic<R: Rng + ?Sized>(rng: &mut R, width: u32) -> Result<Self> {
        check_width(width)?;
        loop {
            let raw: u128 = rng.random();
            let bits = if width == 128 { raw } else { raw & ((1u128 << width) - 1) };
            if bits != 0 {
                return Ok(RealSpec::Dyadic { bits, width });
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RealSpec::Rational { num, den } => {
                if *num == 0 || num >= den {
                    return Err(Error::Domain(format!("{num}/{den} is not in (0,1)")));
                }
                if gcd(*num, *den) != 1 {
                    return Err(Error::Domain(format!("{num}/{den} is not in lowest terms")));
                }
                Ok(())
            }
            RealSpec::Dyadic { bits, width } => {
                check_width(*width)?;
                if *bits == 0 || (*width < 128 && *bits >> *width != 0) {
                    return Err(Error::Domain(format!("dyadic numerator {bits} outside (0, 2^{width})")));
                }
                Ok(())
            }
            RealSpec::CfCoeffs { prefix, tail } => {
                if prefix.contains(&0) {
                    return Err(Error::Domain("partial quotients must be >= 1".into()));
                }
                match tail {
                    CfTail::Periodic(block) => {
                        if block.is_empty() {
                            return Err(Error::Domain("periodic block is empty".into()));
                        }
                        if block.contains(&0) {
                            return Err(Error::Domain("partial quotients must be >= 1".into()));
                        }
                    }
                    CfTail::Terminate => {
                        if prefix.is_empty() {
                            return Err(Error::Domain("[0;] is not a point of (0,1)".into()));
                        }
                        if prefix == &[1] {
                            return Err(Error::Domain("[0;1] equals 1".into()));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// True when the continued fraction is finite.
    pub fn is_rational(&self) -> bool {
        matches!(
            self,
            RealSpec::Rational { .. }
                | RealSpec::Dyadic { .. }
                | RealSpec::CfCoeffs { tail: CfTail::Terminate, .. }
        )
    }

    /// Nearest f64 to the point.
    pub fn to_f64(&self) -> f64 {
        match self {
            RealSpec::Rational { num, den } => *num as f64 / *den as f64,
            RealSpec::Dyadic { bits, width } => *bits as f64 * (-(*width as f64)).exp2(),
            RealSpec::CfCoeffs { prefix, tail } => {
                let coeffs = coefficient_stream(prefix, tail, prefix.len() + LOOKAHEAD);
                let mut x = 0.0;
                for &a in coeffs.iter().rev() {
                    x = 1.0 / (a as f64 + x);
                }
                x
            }
        }
    }

    /// The largest `q_k` kept before the expansion of this point stops by
    /// default: `⌊2^{width/2}⌋` for dyadic grids, unlimited otherwise.
    pub fn default_q_limit(&self) -> u128 {
        match self {
            RealSpec::Dyadic { width, .. } => dyadic_q_limit(*width),
            _ => u128::MAX,
        }
    }

    /// `α(x) = {1/x}` as a new point, exact for every representation.
    pub fn shifted(&self) -> Result<RealSpec> {
        match self {
            RealSpec::Rational { num, den } => {
                let r = den % num;
                if r == 0 {
                    return Err(Error::Terminated { depth: 1 });
                }
                Ok(RealSpec::Rational { num: r, den: *num })
            }
            RealSpec::Dyadic { bits, width } => {
                let (_, r) = Den::pow2(*width).div_rem(*bits)?;
                if r == 0 {
                    return Err(Error::Terminated { depth: 1 });
                }
                let g = gcd(r, *bits);
                Ok(RealSpec::Rational { num: r / g, den: bits / g })
            }
            RealSpec::CfCoeffs { prefix, tail } => {
                if let Some((_, rest)) = prefix.split_first() {
                    if (rest.is_empty() || rest == [1]) && *tail == CfTail::Terminate {
                        return Err(Error::Terminated { depth: 1 });
                    }
                    return Ok(RealSpec::CfCoeffs { prefix: rest.to_vec(), tail: tail.clone() });
                }
                match tail {
                    CfTail::Periodic(block) => {
                        let mut rotated = block[1..].to_vec();
                        rotated.push(block[0]);
                        Ok(RealSpec::CfCoeffs { prefix: vec![], tail: CfTail::Periodic(rotated) })
                    }
                    CfTail::Terminate => Err(Error::Terminated { depth: 0 }),
                }
            }
        }
    }
}

fn check_width(width: u32) -> Result<()> {
    if width == 0 || width > MAX_WIDTH {
        return Err(Error::Domain(format!("dyadic width {width} outside 1..=128")));
    }
    Ok(())
}

fn dyadic_q_limit(width: u32) -> u128 {
    if width == 128 {
        1u128 << 64
    } else {
        (1u128 << width).isqrt()
    }
}

pub(crate) fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn coefficient_stream(prefix: &[u64], tail: &CfTail, len: usize) -> Vec<u64> {
    let mut out: Vec<u64> = prefix.iter().copied().take(len).collect();
    if let CfTail::Periodic(block) = tail {
        let mut i = 0;
        while out.len() < len {
            out.push(block[i % block.len()]);
            i += 1;
        }
    }
    out
}

/// Denominator of an exact input; `2^128` does not fit in a `u128`.
#[derive(Debug, Clone, Copy)]
enum Den {
    Int(u128),
    TwoPow128,
}

impl Den {
    fn pow2(width: u32) -> Den {
        if width == 128 {
            Den::TwoPow128
        } else {
            Den::Int(1u128 << width)
        }
    }

    fn as_f64(self) -> f64 {
        match self {
            Den::Int(d) => d as f64,
            Den::TwoPow128 => 2f64.powi(128),
        }
    }

    fn div_rem(self, d: u128) -> Result<(u128, u128)> {
        match self {
            Den::Int(n) => Ok((n / d, n % d)),
            Den::TwoPow128 => {
                // 2^128 = MAX + 1
                let (q, r) = (u128::MAX / d, u128::MAX % d);
                if r + 1 == d {
                    q.checked_add(1)
                        .map(|q| (q, 0))
                        .ok_or_else(|| Error::Overflow("partial quotient 2^128".into()))
                } else {
                    Ok((q, r + 1))
                }
            }
        }
    }
}

/// Why an expansion stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationReason {
    /// The continued fraction is finite and was read to the end.
    Terminated,
    /// A convergent denominator exceeded the q-limit (or 128 bits).
    QLimit,
    /// The requested number of terms was reached.
    MaxTerms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Truncation {
    /// Number of partial quotients kept.
    pub index: usize,
    pub reason: TruncationReason,
}

/// The Gauss-map orbit of a point together with its convergents.
///
/// Index conventions: `a[k-1] = a_k`, `p[k-1]/q[k-1] = [0; a_1, ..., a_k]`
/// for `k = 1..=n`, and `alpha[k] = α_k`, `beta[k] = β_k`, `gamma[k] = γ_k`
/// for `k = 0..n` where `n = a.len()`.
#[derive(Debug, Clone)]
pub struct CfOrbit {
    pub a: Vec<u128>,
    pub p: Vec<u128>,
    pub q: Vec<u128>,
    pub alpha: Vec<f64>,
    /// `log(1/α_k)`, computed as `log(a_{k+1} + α_{k+1})`.
    pub log_inv_alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `α_n`, zero when the expansion terminated.
    pub alpha_next: f64,
    pub truncated_at: Truncation,
    /// Upper bound for `log(1/α_k)` at every index `k >= n` not stored here.
    pub tail_log_bound: f64,
}

impl CfOrbit {
    pub fn depth(&self) -> usize {
        self.alpha.len()
    }

    pub fn terminated(&self) -> bool {
        self.truncated_at.reason == TruncationReason::Terminated
    }

    /// `β_{k-1}` with `β_{-1} = 1`.
    pub fn beta_prev(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.beta[k - 1]
        }
    }

    /// Upper bound for `Σ_{k >= n} β_{k-1}`, the weight of everything past
    /// the stored orbit. Uses `β_{k+1} <= β_{k-1}/2`.
    pub fn tail_weight(&self) -> f64 {
        if self.terminated() {
            0.0
        } else {
            4.0 * self.beta_prev(self.depth())
        }
    }

    /// Upper bound for `Σ_{k >= n} γ_k`.
    pub fn gamma_tail_bound(&self) -> f64 {
        self.tail_weight() * self.tail_log_bound
    }
}

/// `{1/x}` for a floating point `x ∈ (0,1)`.
pub fn gauss_map(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("gauss_map needs x in (0,1), got {x}")));
    }
    let y = 1.0 / x;
    Ok(y - y.floor())
}

/// `{den/num}` as a reduced fraction; `(0, 1)` when `den/num` is an integer.
pub fn gauss_map_exact(num: u128, den: u128) -> Result<(u128, u128)> {
    if num == 0 || num >= den {
        return Err(Error::Domain(format!("gauss_map needs {num}/{den} in (0,1)")));
    }
    let r = den % num;
    if r == 0 {
        return Ok((0, 1));
    }
    let g = gcd(r, num);
    Ok((r / g, num / g))
}

/// Expand `x` into at most `max_terms` partial quotients, stopping after the
/// first convergent with `q_k > q_limit`. Dyadic inputs additionally stop
/// once `q_k^2 > 2^width`.
pub fn cf_expand(x: &RealSpec, max_terms: usize, q_limit: u128) -> Result<CfOrbit> {
    x.validate()?;
    if max_terms == 0 || q_limit == 0 {
        return Err(Error::Domain("max_terms and q_limit must be >= 1".into()));
    }
    match x {
        RealSpec::Rational { num, den } => {
            expand_exact(*num, Den::Int(*den), max_terms, q_limit, (*den as f64 + 1.0).ln())
        }
        RealSpec::Dyadic { bits, width } => {
            let q_limit = q_limit.min(dyadic_q_limit(*width));
            expand_exact(*bits, Den::pow2(*width), max_terms, q_limit, (*width as f64 + 1.0) * std::f64::consts::LN_2)
        }
        RealSpec::CfCoeffs { prefix, tail } => expand_coeffs(prefix, tail, max_terms, q_limit),
    }
}

/// Expand with the default limits for the representation.
pub fn cf_expand_default(x: &RealSpec) -> Result<CfOrbit> {
    cf_expand(x, DEFAULT_MAX_TERMS, x.default_q_limit())
}

/// The orbit through index `n`; signals termination when the expansion of
/// `x` has fewer than `n + 1` orbit points.
pub fn orbit_terms(x: &RealSpec, n: usize) -> Result<CfOrbit> {
    let orbit = cf_expand(x, n + 1, u128::MAX)?;
    if orbit.depth() < n + 1 {
        return Err(Error::Terminated { depth: orbit.depth() });
    }
    Ok(orbit)
}

struct Convergents {
    p: (u128, u128),
    q: (u128, u128),
}

impl Convergents {
    fn new() -> Self {
        // (p_{k-2}, p_{k-1}) starting from p_{-1} = 1, p_0 = 0
        Convergents { p: (1, 0), q: (0, 1) }
    }

    fn push(&mut self, a: u128) -> Option<(u128, u128)> {
        let p = a.checked_mul(self.p.1)?.checked_add(self.p.0)?;
        let q = a.checked_mul(self.q.1)?.checked_add(self.q.0)?;
        self.p = (self.p.1, p);
        self.q = (self.q.1, q);
        Some((p, q))
    }
}

fn log_inv(a: u128, alpha_next: f64) -> f64 {
    if a == 1 {
        alpha_next.ln_1p()
    } else {
        (a as f64 + alpha_next).ln()
    }
}

fn expand_exact(num: u128, den: Den, max_terms: usize, q_limit: u128, log_cap: f64) -> Result<CfOrbit> {
    let mut a = Vec::new();
    let mut p = Vec::new();
    let mut q = Vec::new();
    // rems[k] = r_k with r_0 = num
    let mut rems = vec![num];
    let mut conv = Convergents::new();

    let (a1, r1) = den.div_rem(num)?;
    let mut pending = Some((a1, r1));
    let mut reason = TruncationReason::MaxTerms;
    while let Some((ak, rk)) = pending.take() {
        let Some((pk, qk)) = conv.push(ak) else {
            reason = TruncationReason::QLimit;
            break;
        };
        a.push(ak);
        p.push(pk);
        q.push(qk);
        rems.push(rk);
        if rk == 0 {
            reason = TruncationReason::Terminated;
            break;
        }
        if qk > q_limit {
            reason = TruncationReason::QLimit;
            break;
        }
        if a.len() >= max_terms {
            break;
        }
        let prev = rems[rems.len() - 2];
        pending = Some(if prev <= u64::MAX as u128 {
            let (prev, cur) = (prev as u64, rk as u64);
            ((prev / cur) as u128, (prev % cur) as u128)
        } else {
            (prev / rk, prev % rk)
        });
    }

    let n = a.len();
    let den_f = den.as_f64();
    let ratio = |k: usize| -> f64 {
        // α_k = r_k / r_{k-1}
        if k == 0 {
            num as f64 / den_f
        } else {
            rems[k] as f64 / rems[k - 1] as f64
        }
    };
    let mut alpha = Vec::with_capacity(n);
    let mut log_inv_alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    for k in 0..n {
        alpha.push(ratio(k));
        let li = log_inv(a[k], ratio(k + 1));
        log_inv_alpha.push(li);
        let beta_prev = if k == 0 { 1.0 } else { beta[k - 1] };
        gamma.push(beta_prev * li);
        beta.push(rems[k] as f64 / den_f);
    }
    let alpha_next = ratio(n);
    let terminated = reason == TruncationReason::Terminated;
    Ok(CfOrbit {
        a,
        p,
        q,
        alpha,
        log_inv_alpha,
        beta,
        gamma,
        alpha_next,
        truncated_at: Truncation { index: n, reason },
        tail_log_bound: if terminated { 0.0 } else { log_cap },
    })
}

fn expand_coeffs(prefix: &[u64], tail: &CfTail, max_terms: usize, q_limit: u128) -> Result<CfOrbit> {
    // [..., a, 1] is the long spelling of [..., a + 1]
    let canonical;
    let prefix = match (tail, prefix) {
        (CfTail::Terminate, [init @ .., a, 1]) => {
            let mut c = init.to_vec();
            c.push(a + 1);
            canonical = c;
            &canonical[..]
        }
        _ => prefix,
    };
    let available = match tail {
        CfTail::Terminate => prefix.len(),
        CfTail::Periodic(_) => usize::MAX,
    };
    let mut conv = Convergents::new();
    let mut a = Vec::new();
    let mut p = Vec::new();
    let mut q = Vec::new();
    let mut reason = if available <= max_terms { TruncationReason::Terminated } else { TruncationReason::MaxTerms };
    let stream = coefficient_stream(prefix, tail, available.min(max_terms));
    for &ak in &stream {
        let Some((pk, qk)) = conv.push(ak as u128) else {
            reason = TruncationReason::QLimit;
            break;
        };
        a.push(ak as u128);
        p.push(pk);
        q.push(qk);
        if qk > q_limit && a.len() < available {
            reason = TruncationReason::QLimit;
            break;
        }
    }
    let n = a.len();
    if reason == TruncationReason::Terminated && n < available {
        reason = TruncationReason::MaxTerms;
    }

    // α_k = 1/(a_{k+1} + α_{k+1}), run backwards from far enough out that the
    // starting guess no longer matters.
    let long = coefficient_stream(prefix, tail, (n + LOOKAHEAD).min(available));
    let mut tails = vec![0.0; long.len() + 1];
    for k in (0..long.len()).rev() {
        tails[k] = 1.0 / (long[k] as f64 + tails[k + 1]);
    }
    let mut alpha = Vec::with_capacity(n);
    let mut log_inv_alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    for k in 0..n {
        alpha.push(tails[k]);
        let li = log_inv(long[k] as u128, tails[k + 1]);
        log_inv_alpha.push(li);
        let beta_prev = if k == 0 { 1.0 } else { beta[k - 1] };
        gamma.push(beta_prev * li);
        beta.push(beta_prev * tails[k]);
    }
    let terminated = reason == TruncationReason::Terminated;
    let tail_log_bound = if terminated {
        0.0
    } else {
        let rest_max = prefix.iter().skip(n).copied().max().unwrap_or(0);
        let block_max = match tail {
            CfTail::Periodic(block) => block.iter().copied().max().unwrap_or(0),
            CfTail::Terminate => 0,
        };
        (rest_max.max(block_max) as f64 + 1.0).ln()
    };
    Ok(CfOrbit {
        a,
        p,
        q,
        alpha,
        log_inv_alpha,
        beta,
        gamma,
        alpha_next: tails[n],
        truncated_at: Truncation { index: n, reason },
        tail_log_bound,
    })
}

impl fmt::Display for RealSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealSpec::Rational { num, den } => write!(f, "{num}/{den}"),
            RealSpec::Dyadic { bits, width } => write!(f, "{bits:#X}/2^{width}"),
            RealSpec::CfCoeffs { prefix, tail } => {
                let mut parts: Vec<String> = prefix.iter().map(|a| a.to_string()).collect();
                if let CfTail::Periodic(block) = tail {
                    let block: Vec<String> = block.iter().map(|a| a.to_string()).collect();
                    parts.push(format!("({})", block.join(",")));
                }
                write!(f, "[0;{}]", parts.join(","))
            }
        }
    }
}

fn parse_uint(s: &str) -> Result<u128> {
    let s = s.trim();
    let parsed = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u128::from_str_radix(hex, 16)
    } else {
        s.parse::<u128>()
    };
    parsed.map_err(|e| Error::Parse(format!("bad integer {s:?}: {e}")))
}

fn parse_cf(body: &str) -> Result<RealSpec> {
    let rest = body
        .strip_prefix('0')
        .and_then(|r| r.trim_start().strip_prefix(';'))
        .ok_or_else(|| Error::Parse(format!("continued fraction must start with '[0;': {body:?}")))?;
    let (head, tail) = match rest.find('(') {
        Some(open) => {
            let close = rest
                .rfind(')')
                .filter(|&c| c > open && rest[c + 1..].trim().is_empty())
                .ok_or_else(|| Error::Parse("unbalanced periodic block".into()))?;
            let block = parse_list(&rest[open + 1..close])?;
            let head = rest[..open].trim().trim_end_matches(',');
            (head, CfTail::Periodic(block))
        }
        None => (rest, CfTail::Terminate),
    };
    let prefix = parse_list(head)?;
    RealSpec::cf(prefix, tail).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_list(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| Error::Parse(format!("bad partial quotient {t:?}: {e}"))))
        .collect()
}

impl FromStr for RealSpec {
    type Err = Error;

    /// Accepts `13/29`, `0xDEADBEEF/2^64`, `dyadic:<seed>`, `[0;2,4,3]` and
    /// `[0;1,2,(3,4)]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(seed) = s.strip_prefix("dyadic:") {
            let seed: u64 = seed.trim().parse().map_err(|e| Error::Parse(format!("bad seed {seed:?}: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            return RealSpec::random_dyadic(&mut rng, 64);
        }
        if let Some(body) = s.strip_prefix('[') {
            let body = body
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse(format!("missing ']' in {s:?}")))?;
            return parse_cf(body.trim());
        }
        let (num, den) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("expected num/den, num/2^w or [0;...], got {s:?}")))?;
        let spec = if let Some(w) = den.trim().strip_prefix("2^") {
            let width: u32 = w.parse().map_err(|e| Error::Parse(format!("bad width {w:?}: {e}")))?;
            RealSpec::Dyadic { bits: parse_uint(num)?, width }
        } else {
            RealSpec::Rational { num: parse_uint(num)?, den: parse_uint(den)? }
        };
        spec.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(spec)
    }
}
