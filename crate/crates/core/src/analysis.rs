//! Exact-rational evaluation of the closed-form loads, ratio bounds,
//! thresholds, and counting comparisons, plus exhaustive parameter scans.
//!
//! Everything here is computed over arbitrary-precision rationals; no
//! floating point enters any formula path. The scans additionally use an
//! integer certificate with early exit so that ranges up to `K = 1000`
//! stay tractable: a point is either certified below the running bound by
//! a partial sum of nonnegative terms, or evaluated exactly in full.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::rational::{binomial, Rational};

/// Errors from formula evaluation and scans.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("require 1 <= r <= K and 1 <= s <= K, got K={num_nodes}, r={r}, s={s}")]
    LoadArgsOutOfRange {
        num_nodes: usize,
        r: usize,
        s: usize,
    },
    #[error("schemes 2 and 3 require r >= 2, got r={r}")]
    SchemeNeedsR2 { r: usize },
    #[error("optimal load is zero at K={num_nodes}, r={r}, s={s}; ratio undefined")]
    OptimalLoadZero {
        num_nodes: usize,
        r: usize,
        s: usize,
    },
    #[error("threshold requires {need}, got r={r}, s={s}")]
    ThresholdArgs {
        r: usize,
        s: usize,
        need: &'static str,
    },
    #[error("symmetric-sum check requires a nonempty list of positive integers with K > max(a)")]
    SymPolyArgs,
    #[error("scan requires Kmax >= 2, got {k_max}")]
    ScanArgs { k_max: usize },
    #[error("scan bound must be positive")]
    ScanBound,
}

fn check_load_args(num_nodes: usize, r: usize, s: usize) -> Result<(), AnalysisError> {
    if r == 0 || s == 0 || r > num_nodes || s > num_nodes {
        return Err(AnalysisError::LoadArgsOutOfRange { num_nodes, r, s });
    }
    Ok(())
}

/// Optimal communication load of the baseline scheme:
/// `sum_l C(K-r, K-l) C(r, l-s) / C(K, s) * (l-r)/(l-1)` over
/// `l` from `max(r+1, s)` to `min(r+s, K)`.
pub fn l_star(num_nodes: usize, r: usize, s: usize) -> Result<Rational, AnalysisError> {
    check_load_args(num_nodes, r, s)?;
    let k = num_nodes as u64;
    let (r64, s64) = (r as u64, s as u64);
    let denominator = binomial(k, s64);
    let mut total = Rational::zero();
    for l in (r64 + 1).max(s64)..=(r64 + s64).min(k) {
        let numerator = binomial(k - r64, k - l) * binomial(r64, l - s64) * BigInt::from(l - r64);
        total += Rational::new(numerator, &denominator * BigInt::from(l - 1));
    }
    Ok(total)
}

/// Uncapped load of scheme 1: `(s/r) * (1 - r/K)`.
pub fn l_scheme1_uncapped(num_nodes: usize, r: usize, s: usize) -> Result<Rational, AnalysisError> {
    check_load_args(num_nodes, r, s)?;
    Ok(Rational::new(
        BigInt::from(s * (num_nodes - r)),
        BigInt::from(r * num_nodes),
    ))
}

/// Load of scheme 1, capped at 1.
pub fn l_scheme1(num_nodes: usize, r: usize, s: usize) -> Result<Rational, AnalysisError> {
    Ok(l_scheme1_uncapped(num_nodes, r, s)?.min(Rational::one()))
}

/// Uncapped load of schemes 2 and 3: `(s/(r-1)) * (1 - r/K)`.
pub fn l_scheme23_uncapped(
    num_nodes: usize,
    r: usize,
    s: usize,
) -> Result<Rational, AnalysisError> {
    check_load_args(num_nodes, r, s)?;
    if r < 2 {
        return Err(AnalysisError::SchemeNeedsR2 { r });
    }
    Ok(Rational::new(
        BigInt::from(s * (num_nodes - r)),
        BigInt::from((r - 1) * num_nodes),
    ))
}

/// Load of schemes 2 and 3, capped at 1.
pub fn l_scheme23(num_nodes: usize, r: usize, s: usize) -> Result<Rational, AnalysisError> {
    Ok(l_scheme23_uncapped(num_nodes, r, s)?.min(Rational::one()))
}

/// Which scheme's load enters a ratio or scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    One,
    Two,
    Three,
}

impl Scheme {
    /// Capped load of this scheme.
    pub fn load(&self, num_nodes: usize, r: usize, s: usize) -> Result<Rational, AnalysisError> {
        match self {
            Scheme::One => l_scheme1(num_nodes, r, s),
            Scheme::Two | Scheme::Three => l_scheme23(num_nodes, r, s),
        }
    }

    /// Smallest K the scheme's ratio bound is stated for.
    fn min_k(&self) -> usize {
        match self {
            Scheme::One => 2,
            Scheme::Two | Scheme::Three => 5,
        }
    }

    /// Computation loads admissible at a given K, ascending.
    fn admissible_r(&self, num_nodes: usize) -> Vec<usize> {
        match self {
            // All r with a nonzero optimal load.
            Scheme::One => (1..num_nodes).collect(),
            // r >= 2 dividing K (proper divisor).
            Scheme::Two => (2..num_nodes).filter(|r| num_nodes % r == 0).collect(),
            // K - r a proper divisor of K, at least 2.
            Scheme::Three => {
                let mut rs: Vec<usize> = (2..num_nodes)
                    .filter(|t| num_nodes % t == 0)
                    .map(|t| num_nodes - t)
                    .collect();
                rs.sort_unstable();
                rs
            }
        }
    }
}

/// Exact ratio of a scheme's load to the optimal load.
pub fn h_ratio(
    num_nodes: usize,
    r: usize,
    s: usize,
    scheme: Scheme,
) -> Result<Rational, AnalysisError> {
    let load = scheme.load(num_nodes, r, s)?;
    let optimal = l_star(num_nodes, r, s)?;
    if optimal.is_zero() {
        return Err(AnalysisError::OptimalLoadZero { num_nodes, r, s });
    }
    Ok(load / optimal)
}

/// Node count above which scheme 1 provably stays within ratio 2:
/// `3rs(7r - s + 1) / (8(r - s + 1))`, for `r >= s`.
pub fn lemma4_threshold(r: usize, s: usize) -> Result<Rational, AnalysisError> {
    if r == 0 || s == 0 || r < s {
        return Err(AnalysisError::ThresholdArgs { r, s, need: "r >= s >= 1" });
    }
    let (r, s) = (r as i64, s as i64);
    Ok(Rational::new(
        BigInt::from(3 * r * s * (7 * r - s + 1)),
        BigInt::from(8 * (r - s + 1)),
    ))
}

/// Node count above which schemes 2 and 3 provably stay within ratio 2.1:
/// `(111r - 15s - 111) rs / (44r - 40s - 44)`, for `r >= s + 2`.
pub fn theorem4_threshold(r: usize, s: usize) -> Result<Rational, AnalysisError> {
    if s == 0 || r < s + 2 {
        return Err(AnalysisError::ThresholdArgs { r, s, need: "r >= s + 2, s >= 1" });
    }
    let (r, s) = (r as i64, s as i64);
    Ok(Rational::new(
        BigInt::from((111 * r - 15 * s - 111) * r * s),
        BigInt::from(44 * r - 40 * s - 44),
    ))
}

fn ceil_to_usize(x: &Rational) -> usize {
    x.ceil().to_integer().to_usize().expect("threshold fits usize")
}

/// Sample node counts at and above the scheme-1 threshold and return the
/// exact ratios there; every entry should be at most 2.
pub fn lemma4_spot_check(
    r: usize,
    s: usize,
    samples: usize,
) -> Result<Vec<(usize, Rational)>, AnalysisError> {
    let start = ceil_to_usize(&lemma4_threshold(r, s)?).max(r).max(s);
    (0..samples)
        .map(|i| {
            // Threshold, the next few integers, then doublings.
            let k = if i < samples / 2 {
                start + i
            } else {
                start * (1 << (i - samples / 2 + 1))
            };
            Ok((k, h_ratio(k, r, s, Scheme::One)?))
        })
        .collect()
}

/// Sample admissible node counts (multiples of r) at and above the
/// scheme-2/3 threshold and return the exact ratios; every entry should be
/// at most 21/10.
pub fn theorem4_spot_check(
    r: usize,
    s: usize,
    samples: usize,
) -> Result<Vec<(usize, Rational)>, AnalysisError> {
    let threshold = ceil_to_usize(&theorem4_threshold(r, s)?).max(s).max(r + 1);
    let start = threshold.div_ceil(r) * r;
    (0..samples)
        .map(|i| {
            let k = if i < samples / 2 {
                start + i * r
            } else {
                start * (1 << (i - samples / 2 + 1))
            };
            Ok((k, h_ratio(k, r, s, Scheme::Two)?))
        })
        .collect()
}

/// Function and file counts of the baseline scheme against the new ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeComparison {
    /// `C(K, s)` reduce functions in the baseline.
    pub functions_baseline: BigInt,
    /// `K / gcd(K, s)` reduce functions in the new schemes.
    pub functions_new: usize,
    /// `C(K, r)` files in the baseline and in scheme 1.
    pub files_baseline: BigInt,
    /// `(K/r)^(r-1)` files in scheme 2, when `r >= 2` divides `K`.
    pub files_scheme2: Option<BigInt>,
    /// `(K/t - 1)(K/t)^(t-1)` files in scheme 3 with `t = K - r`, when
    /// `t >= 2` divides `K`.
    pub files_scheme3: Option<BigInt>,
}

/// Exact counting comparison at one parameter point.
pub fn q_file_comparison(
    num_nodes: usize,
    r: usize,
    s: usize,
) -> Result<SchemeComparison, AnalysisError> {
    check_load_args(num_nodes, r, s)?;
    let k = num_nodes as u64;
    let files_scheme2 = (r >= 2 && num_nodes % r == 0).then(|| {
        BigInt::from(num_nodes / r).pow((r - 1) as u32)
    });
    let t = num_nodes - r;
    let files_scheme3 = (t >= 2 && num_nodes % t == 0).then(|| {
        let q = BigInt::from(num_nodes / t);
        (&q - BigInt::one()) * q.pow((t - 1) as u32)
    });
    Ok(SchemeComparison {
        functions_baseline: binomial(k, s as u64),
        functions_new: num_nodes / num_nodes.gcd(&s),
        files_baseline: binomial(k, r as u64),
        files_scheme2,
        files_scheme3,
    })
}

/// Outcome of the elementary-symmetric-sum inequalities for one instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymPolyReport {
    /// `b_0 .. b_n`, the elementary symmetric sums of the inputs.
    pub sums: Vec<BigInt>,
    /// `(h, part)` for each failed inequality; empty means pass.
    pub failures: Vec<(usize, u8)>,
}

impl SymPolyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check, for positive integers `a` with `K > max(a)`, that for every
/// `1 <= h <= n-1`:
///
/// 1. `(h+1) * b_{h+1} <= sum(a) * b_h`, and
/// 2. `b_{h+1} * K^(n-h-1) <= b_h * K^(n-h)` whenever `K >= sum(a)/(h+1)`,
///
/// where `b_h` is the `h`-th elementary symmetric sum of `a`.
pub fn sym_poly_check(a: &[u64], big_k: u64) -> Result<SymPolyReport, AnalysisError> {
    if a.is_empty() || a.iter().any(|&x| x == 0) || big_k <= *a.iter().max().unwrap() {
        return Err(AnalysisError::SymPolyArgs);
    }
    let n = a.len();
    // Elementary symmetric sums by incremental polynomial expansion.
    let mut sums: Vec<BigInt> = vec![BigInt::zero(); n + 1];
    sums[0] = BigInt::one();
    for (count, &value) in a.iter().enumerate() {
        for h in (1..=count + 1).rev() {
            let carry = &sums[h - 1] * BigInt::from(value);
            sums[h] += carry;
        }
    }

    let total: u64 = a.iter().sum();
    let k_big = BigInt::from(big_k);
    let mut failures = Vec::new();
    for h in 1..n {
        if &sums[h + 1] * BigInt::from((h + 1) as u64) > &sums[h] * BigInt::from(total) {
            failures.push((h, 1u8));
        }
        if big_k as u128 * (h as u128 + 1) >= total as u128 {
            let lhs = &sums[h + 1] * k_big.pow((n - h - 1) as u32);
            let rhs = &sums[h] * k_big.pow((n - h) as u32);
            if lhs > rhs {
                failures.push((h, 2u8));
            }
        }
    }
    Ok(SymPolyReport { sums, failures })
}

/// One evaluated scan point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanPoint {
    pub num_nodes: usize,
    pub r: usize,
    pub s: usize,
    pub ratio: Rational,
}

/// Result of an exhaustive ratio scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanReport {
    pub scheme: Scheme,
    pub k_max: usize,
    pub bound: Rational,
    /// Highest ratio found, ties broken towards the smallest `(K, r, s)`.
    pub worst: Option<ScanPoint>,
    /// Worst point of each node count, ascending in `K`.
    pub per_k_worst: Vec<ScanPoint>,
    /// All points whose ratio exceeds the bound, sorted by `(K, r, s)`.
    pub violations: Vec<ScanPoint>,
    pub points_checked: u64,
}

const DYADIC_BITS: u32 = 20;
const DYADIC_ONE: u128 = 1 << DYADIC_BITS;

/// Largest dyadic `p / 2^20` not exceeding `x`, when `p` fits.
fn dyadic_floor(x: &Rational) -> Option<(u128, u128)> {
    if x.is_negative() {
        return None;
    }
    let scaled: BigInt = (x.numer() << DYADIC_BITS) / x.denom();
    scaled.to_u128().map(|p| (p, DYADIC_ONE))
}

fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n + 1);
    row.push(BigInt::one());
    for j in 0..n {
        let next = (&row[j] * BigInt::from(n - j)) / BigInt::from(j + 1);
        row.push(next);
    }
    row
}

/// Shared per-K state for exact fallback evaluation, built lazily: the lcm
/// of all candidate term denominators and its per-denominator quotients.
struct DenominatorTable {
    lcm: BigInt,
    quotients: Vec<BigInt>, // quotients[d] = lcm / d, d in 1..2K
}

impl DenominatorTable {
    fn new(num_nodes: usize) -> Self {
        let top = (2 * num_nodes).max(2);
        let mut lcm = BigInt::one();
        for d in 1..top {
            lcm = lcm.lcm(&BigInt::from(d));
        }
        let quotients = (0..top)
            .map(|d| if d == 0 { BigInt::zero() } else { &lcm / BigInt::from(d) })
            .collect();
        DenominatorTable { lcm, quotients }
    }
}

struct KScanState {
    num_nodes: usize,
    row_k: Vec<BigInt>,
    denominators: Option<DenominatorTable>,
}

/// Term index range of the optimal-load sum in the substituted form
/// `L* C(K,s) = sum_j C(K-r, j) C(r, s-j) * j / (r+j-1)`.
fn term_range(num_nodes: usize, r: usize, s: usize) -> (usize, usize) {
    (1.max(s.saturating_sub(r)), s.min(num_nodes - r))
}

/// Capped scheme load as an integer fraction `a / b`.
fn load_fraction(scheme: Scheme, num_nodes: usize, r: usize, s: usize) -> (u128, u128) {
    let denominator_factor = match scheme {
        Scheme::One => r,
        Scheme::Two | Scheme::Three => r - 1,
    };
    let numerator = (s * (num_nodes - r)) as u128;
    let denominator = (denominator_factor * num_nodes) as u128;
    if numerator >= denominator {
        (1, 1)
    } else {
        (numerator, denominator)
    }
}

/// Try to certify `H(K, r, s) <= p/q` by accumulating nonnegative terms of
/// the optimal-load sum, largest first, against an integer target. Uses
/// per-term dyadic weight floors, so success is a sound proof; failure says
/// nothing.
#[allow(clippy::too_many_arguments)]
fn certify_ratio_below(
    state: &KScanState,
    row_kr: &[BigInt],
    row_r: &[BigInt],
    r: usize,
    s: usize,
    (a, b): (u128, u128),
    (p, q): (u128, u128),
) -> bool {
    let (lo, hi) = term_range(state.num_nodes, r, s);
    // target = ceil(q * a * C(K,s) * 2^20 / (p * b))
    let scale = q.checked_mul(a).and_then(|x| x.checked_mul(DYADIC_ONE));
    let (Some(scale), Some(divisor)) = (scale, p.checked_mul(b)) else {
        return false;
    };
    let target: BigInt = (&state.row_k[s] * scale + BigInt::from(divisor - 1)) / divisor;

    let mode = ((s + 1) * (state.num_nodes - r + 1) / (state.num_nodes + 2)).clamp(lo, hi);
    let mut acc = BigInt::zero();
    let mut left = mode as i64;
    let mut right = mode as i64 + 1;
    let approx_bits = |j: i64| {
        let j = j as usize;
        row_kr[j].bits() + row_r[s - j].bits()
    };
    loop {
        let take_left = match (left >= lo as i64, right <= hi as i64) {
            (true, true) => approx_bits(left) >= approx_bits(right),
            (true, false) => true,
            (false, true) => false,
            (false, false) => return false, // exhausted below target
        };
        let j = if take_left {
            left -= 1;
            (left + 1) as usize
        } else {
            right += 1;
            (right - 1) as usize
        };
        let weight = (j as u128 * DYADIC_ONE / (r + j - 1) as u128) as u64;
        acc += &row_kr[j] * &row_r[s - j] * weight;
        if acc >= target {
            return true;
        }
    }
}

/// Exact optimal load via the shared denominator table: one reduction per
/// call, no per-term gcd work.
fn l_star_from_rows(
    state: &mut KScanState,
    row_kr: &[BigInt],
    row_r: &[BigInt],
    r: usize,
    s: usize,
) -> Rational {
    let (lo, hi) = term_range(state.num_nodes, r, s);
    let table = state
        .denominators
        .get_or_insert_with(|| DenominatorTable::new(state.num_nodes));
    let mut sum = BigInt::zero();
    for j in lo..=hi {
        sum += &row_kr[j] * &row_r[s - j] * BigInt::from(j as u64) * &table.quotients[r + j - 1];
    }
    Rational::new(sum, &table.lcm * &state.row_k[s])
}

struct KScanOutcome {
    worst: Option<ScanPoint>,
    violations: Vec<ScanPoint>,
    points: u64,
}

fn scan_one_k(num_nodes: usize, scheme: Scheme, bound: &Rational) -> KScanOutcome {
    let mut state = KScanState {
        num_nodes,
        row_k: binomial_row(num_nodes),
        denominators: None,
    };
    let bound_dyadic = dyadic_floor(bound);
    let mut worst: Option<ScanPoint> = None;
    let mut worst_dyadic: Option<(u128, u128)> = None;
    let mut violations = Vec::new();
    let mut points = 0u64;

    for r in scheme.admissible_r(num_nodes) {
        let row_kr = binomial_row(num_nodes - r);
        let row_r = binomial_row(r);
        for s in 1..=num_nodes {
            points += 1;
            let load = load_fraction(scheme, num_nodes, r, s);

            // Certify against the tighter of the running worst and the
            // bound; a certified point can affect neither. Until a worst
            // point exists every point is evaluated exactly.
            let certificate = match (worst_dyadic, bound_dyadic) {
                (Some(m), Some(b)) => Some(if m.0 * b.1 <= b.0 * m.1 { m } else { b }),
                (Some(m), None) => Some(m),
                (None, _) => None,
            };
            if let Some((p, q)) = certificate {
                if p > 0 && certify_ratio_below(&state, &row_kr, &row_r, r, s, load, (p, q)) {
                    continue;
                }
            }

            let optimal = l_star_from_rows(&mut state, &row_kr, &row_r, r, s);
            let ratio = Rational::new(
                BigInt::from(load.0) * optimal.denom(),
                BigInt::from(load.1) * optimal.numer(),
            );
            if *bound < ratio {
                violations.push(ScanPoint {
                    num_nodes,
                    r,
                    s,
                    ratio: ratio.clone(),
                });
            }
            if worst.as_ref().is_none_or(|w| w.ratio < ratio) {
                worst_dyadic = dyadic_floor(&ratio);
                worst = Some(ScanPoint {
                    num_nodes,
                    r,
                    s,
                    ratio,
                });
            }
        }
    }
    KScanOutcome {
        worst,
        violations,
        points,
    }
}

/// Exhaustively evaluate the ratio of a scheme's load to the optimal load
/// over every admissible `(K, r, s)` with `K <= k_max`, reporting the worst
/// point and all violations of `bound`. Parallel over `K`; results are
/// independent of thread count.
pub fn scan_h(k_max: usize, scheme: Scheme, bound: &Rational) -> Result<ScanReport, AnalysisError> {
    if k_max < 2 {
        return Err(AnalysisError::ScanArgs { k_max });
    }
    if !bound.is_positive() {
        return Err(AnalysisError::ScanBound);
    }
    let outcomes: Vec<KScanOutcome> = (scheme.min_k()..=k_max)
        .into_par_iter()
        .map(|k| scan_one_k(k, scheme, bound))
        .collect();

    let mut per_k_worst = Vec::new();
    let mut violations = Vec::new();
    let mut points_checked = 0u64;
    for outcome in outcomes {
        points_checked += outcome.points;
        per_k_worst.extend(outcome.worst);
        violations.extend(outcome.violations);
    }
    let worst = per_k_worst
        .iter()
        .max_by(|a, b| {
            a.ratio
                .cmp(&b.ratio)
                // Prefer the smallest K on ties; per_k_worst ascends in K.
                .then(b.num_nodes.cmp(&a.num_nodes))
        })
        .cloned();
    Ok(ScanReport {
        scheme,
        k_max,
        bound: bound.clone(),
        worst,
        per_k_worst,
        violations,
        points_checked,
    })
}
