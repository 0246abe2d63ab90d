//! The maps `g_d(x) = 1 / (1 + (d-1) x^(k-1))` and `f_d = g_d ∘ g_d` on `[0, 1]`.
//!
//! Fixed points are certified by bisection on integer-cleared polynomials with
//! exact rational sign evaluation:
//!
//! * `φ_α(x) = (d-1) x^k + x - 1`, zero exactly at the fixed point α of `g_d`;
//! * `φ_f(x) = x A^(k-1) + (d-1) x - A^(k-1)` with `A = 1 + (d-1) x^(k-1)`,
//!   zero at the fixed points of `f_d` and positive exactly where `f_d(x) < x`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::count::RatioJson;
use crate::error::{Error, Result};

pub const DEFAULT_PREC: u32 = 128;
/// Denominator size (bits) above which iteration switches to rounded arithmetic.
pub const EXACT_DENOM_BITS: u64 = 1 << 16;
/// Fractional bits kept by rounded iteration.
pub const ROUNDED_BITS: u32 = 256;

const PROBE_GRID: u32 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DynParams {
    pub k: usize,
    pub d: u64,
}

impl DynParams {
    /// Parameters for `g_d` and α; `k >= 2`, `d >= 2`.
    pub fn new(k: usize, d: u64) -> Result<Self> {
        if k < 2 || d < 2 {
            return Err(Error::InvalidParameter(format!(
                "need k >= 2 and d >= 2, got k={k} d={d}"
            )));
        }
        Ok(DynParams { k, d })
    }

    fn dm1(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.d - 1))
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn check_unit(x: &BigRational) -> Result<()> {
    if x.is_negative() || *x > BigRational::one() {
        Err(Error::DomainError(format!("{x} is outside [0, 1]")))
    } else {
        Ok(())
    }
}

fn g_raw(p: DynParams, x: &BigRational) -> BigRational {
    (BigRational::one() + p.dm1() * x.pow(p.k as i32 - 1)).recip()
}

pub fn g(p: DynParams, x: &BigRational) -> Result<BigRational> {
    check_unit(x)?;
    Ok(g_raw(p, x))
}

pub fn f(p: DynParams, x: &BigRational) -> Result<BigRational> {
    check_unit(x)?;
    Ok(g_raw(p, &g_raw(p, x)))
}

pub fn phi_alpha(p: DynParams, x: &BigRational) -> BigRational {
    p.dm1() * x.pow(p.k as i32) + x - BigRational::one()
}

pub fn phi_f(p: DynParams, x: &BigRational) -> BigRational {
    let a = (BigRational::one() + p.dm1() * x.pow(p.k as i32 - 1)).pow(p.k as i32 - 1);
    x * &a + p.dm1() * x - a
}

fn sign(x: &BigRational) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

fn pow2_neg(bits: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << bits)
}

/// Certified root enclosure `[lo, hi]` of a polynomial with opposite signs at the ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: BigRational,
    pub hi: BigRational,
    pub lo_sign: i8,
    pub hi_sign: i8,
    /// Set when bisection hit the root exactly.
    pub exact: Option<BigRational>,
}

impl Enclosure {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn mid_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / rat(2, 1)).to_f64().unwrap_or(f64::NAN)
    }

    /// Distance from `x` to the interval (zero inside).
    pub fn distance(&self, x: &BigRational) -> BigRational {
        if *x < self.lo {
            &self.lo - x
        } else if *x > self.hi {
            x - &self.hi
        } else {
            BigRational::zero()
        }
    }

    pub fn to_json(&self) -> EnclosureJson {
        EnclosureJson {
            lo: (&self.lo).into(),
            hi: (&self.hi).into(),
            lo_decimal: decimal_floor(&self.lo, 40),
            hi_decimal: decimal_ceil(&self.hi, 40),
            lo_sign: self.lo_sign,
            hi_sign: self.hi_sign,
            exact: self.exact.as_ref().map(Into::into),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnclosureJson {
    pub lo: RatioJson,
    pub hi: RatioJson,
    pub lo_decimal: String,
    pub hi_decimal: String,
    pub lo_sign: i8,
    pub hi_sign: i8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<RatioJson>,
}

/// Bisection of `phi` on `[lo, hi]` given strict opposite end signs.
fn bisect(
    phi: impl Fn(&BigRational) -> BigRational,
    mut lo: BigRational,
    mut hi: BigRational,
    prec: u32,
) -> Enclosure {
    let lo_sign = sign(&phi(&lo));
    let hi_sign = sign(&phi(&hi));
    debug_assert!(lo_sign * hi_sign < 0);
    let width = pow2_neg(prec);
    let two = rat(2, 1);
    while &hi - &lo > width {
        let mid = (&lo + &hi) / &two;
        match sign(&phi(&mid)) {
            0 => return around_exact(&phi, mid, lo_sign, hi_sign, prec),
            s if s == lo_sign => lo = mid,
            _ => hi = mid,
        }
    }
    Enclosure {
        lo,
        hi,
        lo_sign,
        hi_sign,
        exact: None,
    }
}

/// Brackets an exact root `r` by `r ± δ` with the end signs certified.
fn around_exact(
    phi: &impl Fn(&BigRational) -> BigRational,
    r: BigRational,
    lo_sign: i8,
    hi_sign: i8,
    prec: u32,
) -> Enclosure {
    let mut bits = prec + 1;
    loop {
        let delta = pow2_neg(bits);
        let lo = &r - &delta;
        let hi = &r + &delta;
        if sign(&phi(&lo)) == lo_sign && sign(&phi(&hi)) == hi_sign {
            return Enclosure {
                lo,
                hi,
                lo_sign,
                hi_sign,
                exact: Some(r),
            };
        }
        bits += 1;
    }
}

/// The unique fixed point α of `g_d` in (0, 1), to width `2^-prec`.
/// A rational α is recognised exactly: any rational root of `φ_α` is `1/m`
/// with `m | d - 1`, so only the integers next to `1/α` need checking.
pub fn alpha(p: DynParams, prec: u32) -> Enclosure {
    let phi = |x: &BigRational| phi_alpha(p, x);
    let enc = bisect(phi, BigRational::zero(), BigRational::one(), prec);
    if enc.exact.is_some() {
        return enc;
    }
    let lo_m = enc.hi.recip().floor().to_integer();
    let hi_m = enc.lo.recip().ceil().to_integer();
    let mut m = lo_m;
    while m <= hi_m {
        let r = BigRational::new(BigInt::one(), m.clone());
        if phi(&r).is_zero() {
            return around_exact(&phi, r, enc.lo_sign, enc.hi_sign, prec);
        }
        m += 1;
    }
    enc
}

#[derive(Clone, Debug)]
pub struct FixedPoints {
    pub alpha: Enclosure,
    pub beta: Enclosure,
    pub gamma: Enclosure,
}

/// Enclosures of the two extra fixed points `γ < α < β` of `f_d`.
pub fn beta_gamma(p: DynParams, prec: u32) -> Result<FixedPoints> {
    if p.k < 3 {
        return Err(Error::NoThreeFixedPoints { k: p.k, d: p.d });
    }
    let a = alpha(p, prec);
    let one = BigRational::one();
    let span = &one - &a.hi;
    // a point in (α, 1) where f_d(x) > x, i.e. φ_f < 0
    let grid = (1..PROBE_GRID).map(|j| &a.hi + &span * rat(j.into(), PROBE_GRID.into()));
    let near = (1..prec.saturating_sub(2)).map(|j| &a.hi + pow2_neg(j));
    let neg = grid
        .chain(near)
        .filter(|x| *x < one && phi_f(p, x).is_negative())
        .max();
    let Some(start) = neg else {
        return Err(Error::NoThreeFixedPoints { k: p.k, d: p.d });
    };
    // γ = g(β) widens β's enclosure by at most max|g'| <= (d-1)(k-1)
    let lipschitz = BigUint::from(p.d - 1) * BigUint::from(p.k - 1);
    let mut extra = lipschitz.bits() as u32 + 2;
    loop {
        let beta = bisect(|x| phi_f(p, x), start.clone(), one.clone(), prec + extra);
        let gamma_lo = g_raw(p, &beta.hi);
        let gamma_hi = g_raw(p, &beta.lo);
        if &gamma_hi - &gamma_lo > pow2_neg(prec) {
            extra *= 2;
            continue;
        }
        let exact = beta.exact.as_ref().map(|b| g_raw(p, b));
        let gamma = Enclosure {
            lo_sign: sign(&phi_f(p, &gamma_lo)),
            hi_sign: sign(&phi_f(p, &gamma_hi)),
            lo: gamma_lo,
            hi: gamma_hi,
            exact,
        };
        if gamma.lo_sign != -1 || gamma.hi_sign != 1 {
            return Err(Error::DomainError(format!(
                "γ enclosure for k={} d={} failed its sign certificate",
                p.k, p.d
            )));
        }
        if !(gamma.hi < a.lo && a.hi < beta.lo) {
            return Err(Error::DomainError(format!(
                "fixed points for k={} d={} are not separated at this precision",
                p.k, p.d
            )));
        }
        return Ok(FixedPoints {
            alpha: a,
            beta,
            gamma,
        });
    }
}

/// Smallest `d` in `2..=d_max` with three certified fixed points.
pub fn threshold(k: usize, d_max: u64, prec: u32) -> Result<Option<u64>> {
    for d in 2..=d_max {
        match beta_gamma(DynParams::new(k, d)?, prec) {
            Ok(_) => return Ok(Some(d)),
            Err(Error::NoThreeFixedPoints { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `p0 > α`: the even subsequence tends to β.
    Beta,
    /// `p0 < α`: the even subsequence tends to γ.
    Gamma,
    /// `p0` equals a rational α exactly.
    AtAlpha,
    /// `p0` lies inside the α enclosure.
    UndeterminedNearAlpha,
}

/// Position of `p0` relative to α.
pub fn side(alpha: &Enclosure, p0: &BigRational) -> Side {
    if let Some(a) = &alpha.exact {
        return match p0.cmp(a) {
            std::cmp::Ordering::Greater => Side::Beta,
            std::cmp::Ordering::Less => Side::Gamma,
            std::cmp::Ordering::Equal => Side::AtAlpha,
        };
    }
    if *p0 > alpha.hi {
        Side::Beta
    } else if *p0 < alpha.lo {
        Side::Gamma
    } else {
        Side::UndeterminedNearAlpha
    }
}

/// Rounds to the nearest multiple of `2^-bits`.
pub fn round_dyadic(x: &BigRational, bits: u32) -> BigRational {
    let scale = BigInt::one() << bits;
    let scaled = x * BigRational::from_integer(scale.clone());
    BigRational::new(scaled.round().to_integer(), scale)
}

/// Iterates a map exactly while denominators stay below [`EXACT_DENOM_BITS`]
/// and on the `2^-ROUNDED_BITS` grid afterwards.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub rounded_from: Option<usize>,
    steps: usize,
}

impl Stepper {
    pub fn new() -> Self {
        Stepper {
            rounded_from: None,
            steps: 0,
        }
    }

    pub fn step(&mut self, map: impl Fn(&BigRational) -> BigRational, x: &BigRational) -> BigRational {
        self.steps += 1;
        let y = map(x);
        if self.rounded_from.is_none() && y.denom().bits() > EXACT_DENOM_BITS {
            self.rounded_from = Some(self.steps);
        }
        if self.rounded_from.is_some() {
            round_dyadic(&y, ROUNDED_BITS)
        } else {
            y
        }
    }
}

impl Default for Stepper {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: DynParams,
    /// `points[i] = f_d^i(p0)`.
    pub points: Vec<BigRational>,
    /// Index of the first rounded point, if rounding was needed.
    pub rounded_from: Option<usize>,
    pub side: Side,
    pub converged: bool,
    /// Distance of the last point to the attractor on `side`, when certified.
    pub attractor_distance: Option<BigRational>,
}

impl Trajectory {
    pub fn last(&self) -> &BigRational {
        self.points.last().unwrap()
    }
}

/// Iterates `f_d` from `p0` until successive points differ by at most `tol`.
pub fn iterate(
    p: DynParams,
    p0: &BigRational,
    max_iters: usize,
    tol: &BigRational,
    prec: u32,
) -> Result<Trajectory> {
    check_unit(p0)?;
    let a = alpha(p, prec);
    let s = side(&a, p0);
    let fixed = beta_gamma(p, prec).ok();
    let mut stepper = Stepper::new();
    let mut points = vec![p0.clone()];
    let mut converged = false;
    for _ in 0..max_iters {
        let next = stepper.step(|x| g_raw(p, &g_raw(p, x)), points.last().unwrap());
        let done = (&next - points.last().unwrap()).abs() <= *tol;
        points.push(next);
        if done {
            converged = true;
            break;
        }
    }
    let attractor_distance = fixed.and_then(|fp| match s {
        Side::Beta => Some(fp.beta.distance(points.last().unwrap())),
        Side::Gamma => Some(fp.gamma.distance(points.last().unwrap())),
        _ => None,
    });
    Ok(Trajectory {
        params: p,
        points,
        rounded_from: stepper.rounded_from,
        side: s,
        converged,
        attractor_distance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SignViolation {
    pub x: String,
    pub expected: i8,
    pub found: i8,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignReport {
    pub checked: usize,
    pub violations: Vec<SignViolation>,
}

/// Checks the sign of `f_d(x) - x` on `[0, γ)`, `(γ, α)`, `(α, β)` and `(β, 1]`.
pub fn sign_pattern_check(p: DynParams, samples: usize, prec: u32) -> Result<SignReport> {
    let fp = beta_gamma(p, prec)?;
    let zero = BigRational::zero();
    let one = BigRational::one();
    // (lo, hi, include endpoint lo, include endpoint hi, expected sign of f(x) - x)
    let pieces = [
        (&zero, &fp.gamma.lo, true, false, 1i8),
        (&fp.gamma.hi, &fp.alpha.lo, false, false, -1),
        (&fp.alpha.hi, &fp.beta.lo, false, false, 1),
        (&fp.beta.hi, &one, false, true, -1),
    ];
    let mut checked = 0;
    let mut violations = Vec::new();
    for (lo, hi, with_lo, with_hi, expected) in pieces {
        let span = hi - lo;
        let mut xs: Vec<BigRational> = (1..=samples)
            .map(|j| lo + &span * rat(j as i64, samples as i64 + 1))
            .collect();
        if with_lo {
            xs.push(lo.clone());
        }
        if with_hi {
            xs.push(hi.clone());
        }
        for x in xs {
            checked += 1;
            // f(x) - x has the sign opposite to φ_f
            let found = -sign(&phi_f(p, &x));
            if found != expected {
                violations.push(SignViolation {
                    x: x.to_string(),
                    expected,
                    found,
                });
            }
        }
    }
    Ok(SignReport {
        checked,
        violations,
    })
}

/// Scaled quantities that tend to 1 as `d` grows, as rational intervals.
#[derive(Clone, Debug)]
pub struct Asymptotics {
    pub d: u64,
    /// `(1 - β) d^(k-2)`
    pub beta_scaled: (BigRational, BigRational),
    /// `γ (d + 1)`
    pub gamma_scaled: (BigRational, BigRational),
    /// `α^k d`, i.e. `(α d^(1/k))^k`
    pub alpha_scaled_pow: (BigRational, BigRational),
}

impl Asymptotics {
    pub fn beta_scaled_f64(&self) -> f64 {
        mid(&self.beta_scaled)
    }

    pub fn gamma_scaled_f64(&self) -> f64 {
        mid(&self.gamma_scaled)
    }

    /// `α d^(1/k)`
    pub fn alpha_scaled_f64(&self, k: usize) -> f64 {
        mid(&self.alpha_scaled_pow).powf(1.0 / k as f64)
    }
}

fn mid(r: &(BigRational, BigRational)) -> f64 {
    ((&r.0 + &r.1) / rat(2, 1)).to_f64().unwrap_or(f64::NAN)
}

pub fn asymptotics(p: DynParams, prec: u32) -> Result<Asymptotics> {
    let fp = beta_gamma(p, prec)?;
    let d = BigRational::from_integer(BigInt::from(p.d));
    let dk2 = d.pow(p.k as i32 - 2);
    let one = BigRational::one();
    let d1 = &d + &one;
    Ok(Asymptotics {
        d: p.d,
        beta_scaled: ((&one - &fp.beta.hi) * &dk2, (&one - &fp.beta.lo) * &dk2),
        gamma_scaled: (&fp.gamma.lo * &d1, &fp.gamma.hi * &d1),
        alpha_scaled_pow: (
            fp.alpha.lo.pow(p.k as i32) * &d,
            fp.alpha.hi.pow(p.k as i32) * &d,
        ),
    })
}

/// α enclosure for `k = 2` or small `d`, where β and γ may not exist.
pub fn alpha_scaled_pow(p: DynParams, prec: u32) -> (BigRational, BigRational) {
    let a = alpha(p, prec);
    let d = BigRational::from_integer(BigInt::from(p.d));
    (a.lo.pow(p.k as i32) * &d, a.hi.pow(p.k as i32) * &d)
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub d: u64,
    pub alpha: Enclosure,
    pub fixed: Option<FixedPoints>,
}

/// Fixed points for each `d`, in parallel; rows keep the order of `ds`.
pub fn scan(k: usize, ds: &[u64], prec: u32) -> Result<Vec<ScanRow>> {
    ds.par_iter()
        .map(|&d| {
            let p = DynParams::new(k, d)?;
            let fixed = match beta_gamma(p, prec) {
                Ok(fp) => Some(fp),
                Err(Error::NoThreeFixedPoints { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(ScanRow {
                d,
                alpha: alpha(p, prec),
                fixed,
            })
        })
        .collect()
}

pub const CSV_HEADER: &str =
    "d,alpha_lo,alpha_hi,beta_lo,beta_hi,gamma_lo,gamma_hi,beta_scaled,gamma_scaled";

/// One CSV line; β/γ columns are empty when there are no three fixed points.
pub fn csv_row(k: usize, row: &ScanRow) -> String {
    let digits = 40;
    let mut cols = vec![
        row.d.to_string(),
        decimal_floor(&row.alpha.lo, digits),
        decimal_ceil(&row.alpha.hi, digits),
    ];
    match &row.fixed {
        Some(fp) => {
            let d = BigRational::from_integer(BigInt::from(row.d));
            let one = BigRational::one();
            let b = (&one - &fp.beta.lo) * d.pow(k as i32 - 2);
            let gs = &fp.gamma.lo * (&d + &one);
            cols.extend([
                decimal_floor(&fp.beta.lo, digits),
                decimal_ceil(&fp.beta.hi, digits),
                decimal_floor(&fp.gamma.lo, digits),
                decimal_ceil(&fp.gamma.hi, digits),
                decimal_round(&b, 12),
                decimal_round(&gs, 12),
            ]);
        }
        None => cols.extend(std::iter::repeat_n(String::new(), 6)),
    }
    cols.join(",")
}

fn decimal_with(x: &BigRational, digits: usize, rounding: fn(&BigRational) -> BigRational) -> String {
    let scale = BigInt::from(10).pow(digits as u32);
    let n = rounding(&(x * BigRational::from_integer(scale.clone()))).to_integer();
    let neg = n.is_negative();
    let s = n.abs().to_string();
    let s = format!("{s:0>width$}", width = digits + 1);
    let (int, frac) = s.split_at(s.len() - digits);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

pub fn decimal_floor(x: &BigRational, digits: usize) -> String {
    decimal_with(x, digits, BigRational::floor)
}

pub fn decimal_ceil(x: &BigRational, digits: usize) -> String {
    decimal_with(x, digits, BigRational::ceil)
}

pub fn decimal_round(x: &BigRational, digits: usize) -> String {
    decimal_with(x, digits, BigRational::round)
}

/// Parses `a/b`, decimals such as `0.25`, and exponent forms such as `1e-6`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidParameter(format!("not a rational number: {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}0").parse().map_err(|_| bad())?;
    let mut r = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32 + 1));
    let ten = BigRational::from_integer(BigInt::from(10));
    r *= ten.pow(exp);
    Ok(if neg { -r } else { r })
}
