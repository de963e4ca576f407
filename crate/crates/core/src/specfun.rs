//! Special functions: log-Gamma, Beta, log-binomial and the regularized
//! incomplete Beta function for positive integer parameters.
//!
//! All routines are pure and generic over [`Scalar`].

#![allow(clippy::excessive_precision)]

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// False for NaN.
fn is_positive<T: Scalar>(x: T) -> bool {
    x > T::zero()
}

/// A value constrained to the closed unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability<T>(T);

impl<T: Scalar> Probability<T> {
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(domain(format!("probability {value:?} outside [0, 1]")))
        }
    }

    /// Clamps rounding excursions (e.g. `1 + 1e-17`) back into the interval.
    pub(crate) fn clamped(value: T) -> Self {
        Self(value.max(T::zero()).min(T::one()))
    }

    pub fn get(self) -> T {
        self.0
    }
}

/// Natural logarithm of a non-negative quantity, with an explicit zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogReal<T> {
    pub log_value: T,
    pub is_zero: bool,
}

impl<T: Scalar> LogReal<T> {
    pub fn from_ln(log_value: T) -> Self {
        Self {
            log_value,
            is_zero: false,
        }
    }

    pub fn zero() -> Self {
        Self {
            log_value: T::neg_infinity(),
            is_zero: true,
        }
    }

    pub fn one() -> Self {
        Self::from_ln(T::zero())
    }

    pub fn ln(self) -> T {
        if self.is_zero {
            T::neg_infinity()
        } else {
            self.log_value
        }
    }

    /// The represented value; may overflow to infinity for huge quantities.
    pub fn value(self) -> T {
        if self.is_zero {
            T::zero()
        } else {
            self.log_value.exp()
        }
    }

    pub fn product(self, other: Self) -> Self {
        if self.is_zero || other.is_zero {
            Self::zero()
        } else {
            Self::from_ln(self.log_value + other.log_value)
        }
    }

    pub fn powf(self, exponent: T) -> Self {
        if self.is_zero {
            if exponent == T::zero() {
                Self::one()
            } else {
                Self::zero()
            }
        } else {
            Self::from_ln(self.log_value * exponent)
        }
    }
}

// Lanczos approximation, g = 671/128, 14 terms (Numerical Recipes, 3rd ed.).
const LANCZOS_G_SHIFT: f64 = 5.242_187_5;
const LANCZOS_SERIES_BASE: f64 = 0.999_999_999_999_997_092;
const LANCZOS_SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;
const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

fn ln_gamma_unchecked<T: Scalar>(z: T) -> T {
    if z < T::one() {
        // Keep the series argument away from zero.
        return ln_gamma_unchecked(z + T::one()) - z.ln();
    }
    let half = T::lit(0.5);
    let shifted = z + T::lit(LANCZOS_G_SHIFT);
    let lead = (z + half) * shifted.ln() - shifted;
    let mut series = T::lit(LANCZOS_SERIES_BASE);
    let mut denom = z;
    for &c in LANCZOS.iter() {
        denom = denom + T::one();
        series = series + T::lit(c) / denom;
    }
    lead + (T::lit(LANCZOS_SQRT_TWO_PI) * series / z).ln()
}

/// `ln Γ(z)` for `z > 0`.
pub fn log_gamma<T: Scalar>(z: T) -> Result<LogReal<T>> {
    if !is_positive(z) || !z.is_finite() {
        return Err(domain(format!(
            "log_gamma requires a finite positive argument, got {z:?}"
        )));
    }
    Ok(LogReal::from_ln(ln_gamma_unchecked(z)))
}

// Bernoulli coefficients B_{2k} / (2k (2k-1)) of the Stirling series.
const STIRLING: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
];

fn stirling_tail<T: Scalar>(z: T) -> T {
    let inv = z.recip();
    let inv2 = inv * inv;
    let mut acc = T::zero();
    let mut pow = inv;
    for &c in STIRLING.iter() {
        acc = acc + T::lit(c) * pow;
        pow = pow * inv2;
    }
    acc
}

/// `ln Γ(a + b) − ln Γ(a)` without forming the two large log-Gammas
/// separately when `a` is large.
pub fn log_gamma_ratio<T: Scalar>(a: T, b: T) -> Result<T> {
    if !is_positive(a) || !is_positive(a + b) {
        return Err(domain("log_gamma_ratio requires a > 0 and a + b > 0"));
    }
    if a < T::lit(20.0) || (a + b) < T::lit(20.0) {
        return Ok(ln_gamma_unchecked(a + b) - ln_gamma_unchecked(a));
    }
    // Stirling: ln Γ(z) = (z - 1/2) ln z - z + ln sqrt(2π) + tail(z)
    let half = T::lit(0.5);
    let ab = a + b;
    let main = (a - half) * (b / a).ln_1p() + b * ab.ln() - b;
    Ok(main + stirling_tail(ab) - stirling_tail(a))
}

/// Exact `C(n, k)` when it fits in 128 bits.
pub(crate) fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

const EXACT_BINOMIAL_MAX_N: u64 = 66;

/// `ln C(n, k)`.
///
/// For `n ≤ 66` the binomial is formed exactly in integers first, so the
/// result is the correctly rounded logarithm of the exact integer.
pub fn log_binomial<T: Scalar>(n: u64, k: u64) -> Result<LogReal<T>> {
    if k > n {
        return Err(domain(format!(
            "log_binomial requires k <= n, got n={n}, k={k}"
        )));
    }
    if k == 0 || k == n {
        return Ok(LogReal::one());
    }
    if n <= EXACT_BINOMIAL_MAX_N {
        if let Some(c) = binomial_u128(n, k) {
            return Ok(LogReal::from_ln(T::lit(c as f64).ln()));
        }
    }
    Ok(LogReal::from_ln(ln_binomial_unchecked(n, k)))
}

pub(crate) fn ln_binomial_unchecked<T: Scalar>(n: u64, k: u64) -> T {
    if k == 0 || k == n {
        return T::zero();
    }
    if n <= EXACT_BINOMIAL_MAX_N {
        if let Some(c) = binomial_u128(n, k) {
            return T::lit(c as f64).ln();
        }
    }
    let one = T::one();
    ln_gamma_unchecked(T::count(n) + one)
        - ln_gamma_unchecked(T::count(k) + one)
        - ln_gamma_unchecked(T::count(n - k) + one)
}

/// `Beta(a, b)` for positive integers, via `1 / (C(a+b-2, a-1) (a+b-1))`.
pub fn beta<T: Scalar>(a: u64, b: u64) -> Result<T> {
    if a < 1 || b < 1 {
        return Err(domain(format!(
            "beta requires integer a, b >= 1, got a={a}, b={b}"
        )));
    }
    let n = a + b - 2;
    if let Some(c) = (n <= EXACT_BINOMIAL_MAX_N)
        .then(|| binomial_u128(n, a - 1))
        .flatten()
    {
        let denom = (c as f64) * ((a + b - 1) as f64);
        return Ok(T::lit(denom).recip());
    }
    let ln = ln_binomial_unchecked::<T>(n, a - 1) + T::count(a + b - 1).ln();
    Ok((-ln).exp())
}

/// `Beta(a, b)` for positive real arguments.
pub fn beta_real<T: Scalar>(a: T, b: T) -> Result<T> {
    log_beta_real(a, b).map(|l| l.value())
}

/// `ln Beta(a, b)` for positive real arguments.
pub fn log_beta_real<T: Scalar>(a: T, b: T) -> Result<LogReal<T>> {
    if !is_positive(a) || !is_positive(b) || !a.is_finite() || !b.is_finite() {
        return Err(domain(format!(
            "beta_real requires finite positive arguments, got a={a:?}, b={b:?}"
        )));
    }
    // ln Γ(small) − [ln Γ(large + small) − ln Γ(large)]
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    let ratio = log_gamma_ratio(large, small)?;
    Ok(LogReal::from_ln(ln_gamma_unchecked(small) - ratio))
}

/// `I_x(a, b)` and `1 − I_x(a, b)` for integer `a, b ≥ 1`, unchecked.
///
/// Both tails of the binomial identity
/// `1 − I_x(a,b) = Σ_{j<a} C(a+b−1, j) x^j (1−x)^{a+b−1−j}`
/// are summed directly, so neither is formed by subtraction.
pub(crate) fn inc_beta_pair<T: Scalar>(x: T, a: u32, b: u32) -> (T, T) {
    if x <= T::zero() {
        return (T::zero(), T::one());
    }
    if x >= T::one() {
        return (T::one(), T::zero());
    }
    let n = (a + b - 1) as u64;
    let ln_x = x.ln();
    let ln_1mx = (-x).ln_1p();
    let mut lower = Vec::with_capacity(a as usize);
    let mut upper = Vec::with_capacity(b as usize);
    for j in 0..=n {
        let ln_term =
            ln_binomial_unchecked::<T>(n, j) + T::count(j) * ln_x + T::count(n - j) * ln_1mx;
        if j < a as u64 {
            lower.push(ln_term.exp());
        } else {
            upper.push(ln_term.exp());
        }
    }
    (sum_ascending(&mut upper), sum_ascending(&mut lower))
}

fn sum_ascending<T: Scalar>(terms: &mut [T]) -> T {
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    terms.iter().fold(T::zero(), |acc, &t| acc + t)
}

fn check_inc_beta_args<T: Scalar>(x: T, a: u32, b: u32) -> Result<()> {
    if a < 1 || b < 1 {
        return Err(domain(format!(
            "incomplete beta requires integer a, b >= 1, got a={a}, b={b}"
        )));
    }
    if !(x >= T::zero() && x <= T::one()) {
        return Err(domain(format!(
            "incomplete beta argument {x:?} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Regularized incomplete Beta function `I_x(a, b)` for integer `a, b ≥ 1`.
pub fn reg_inc_beta<T: Scalar>(x: T, a: u32, b: u32) -> Result<Probability<T>> {
    check_inc_beta_args(x, a, b)?;
    Ok(Probability::clamped(inc_beta_pair(x, a, b).0))
}

/// `1 − I_x(a, b)`, computed from its own binomial sum.
pub fn reg_inc_beta_complement<T: Scalar>(x: T, a: u32, b: u32) -> Result<Probability<T>> {
    check_inc_beta_args(x, a, b)?;
    Ok(Probability::clamped(inc_beta_pair(x, a, b).1))
}

/// `ln(1 − I_x(a, b))`, accurate both when `I` is tiny and when it is near one.
pub(crate) fn ln_inc_beta_complement<T: Scalar>(x: T, a: u32, b: u32) -> T {
    let (i, c) = inc_beta_pair(x, a, b);
    if i < T::lit(0.5) {
        (-i).ln_1p()
    } else {
        c.ln()
    }
}
