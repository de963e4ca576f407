//! Closed-form, integral and leading-term asymptotic formulas for the
//! expected data persistency `E[X]` and its survival function.
//!
//! Random placement (i.i.d. uniform chunk positions, multiset loss rule):
//!
//! * exact sum `E[X] = Σ_{l=0}^{N} (1 − I_{(l/N)^r}(q+1, p))^D`
//! * integral `N ∫_0^1 (1 − I_{x^r}(q+1, p))^D dx`, within 1 of the sum
//! * leading term `Γ(1 + 1/s) / C(p+q, q+1)^{1/s} · N · D^{−1/s}`, `s = r(q+1)`
//!
//! Symmetric placement (node groups of size `(p+q) r`, per-cluster loss rule):
//!
//! * exact `E[X] = (N+1) ∫_0^1 (1 − I_x(q+1, p)^r)^{N/((p+q) r)} dx`
//! * leading term `Γ(1 + 1/s) ((p+q) r)^{1/s} / C(p+q, q+1)^{1/(q+1)} · N^{1 − 1/s}`
//!
//! For `p = 1` both integrals reduce to Beta functions.
//!
//! Every `(1 − …)^k` power is evaluated as `exp(k · ln(…))` with the
//! logarithm taken from a complement that was summed directly.

use serde::Serialize;

use crate::error::{parameter, Error, Result};
use crate::model::{validate_symmetric_preconditions, RecParams, Strategy, SystemParams};
use crate::quadrature::{boundary_layer_points, integrate, Tolerance};
use crate::scalar::Scalar;
use crate::specfun::{self, inc_beta_pair, ln_inc_beta_complement, Probability};

/// Default relative tolerance for the integral formulas.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactSum,
    Integral,
    Asymptotic,
    BetaExact,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ExactSum => "sum",
            Method::Integral => "integral",
            Method::Asymptotic => "asymptotic",
            Method::BetaExact => "beta-exact",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" | "exact-sum" => Ok(Method::ExactSum),
            "integral" => Ok(Method::Integral),
            "asymptotic" => Ok(Method::Asymptotic),
            "beta-exact" | "beta" => Ok(Method::BetaExact),
            other => Err(parameter(format!("unknown method '{other}'"))),
        }
    }
}

/// An expected-persistency value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticResult<T> {
    /// Expected number of node removals.
    pub value: T,
    pub method: Method,
    /// Additive bound on `|E[X] − value|` when the formula carries one.
    pub error_bound: Option<T>,
    pub quadrature_tolerance: Option<T>,
}

/// `Pr[X > l]` for `l = 0..=l_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve<T> {
    probabilities: Vec<T>,
}

impl<T: Scalar> SurvivalCurve<T> {
    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    pub fn l_max(&self) -> usize {
        self.probabilities.len() - 1
    }

    /// `E[X] = Σ_l Pr[X > l]`, summed in index order.
    pub fn expectation(&self) -> T {
        self.probabilities.iter().fold(T::zero(), |acc, &p| acc + p)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.probabilities.windows(2).all(|w| w[1] <= w[0])
    }
}

fn loss_order<T: Scalar>(rec: &RecParams) -> T {
    T::count(rec.loss_order() as u64)
}

/// `ln C(p+q, q+1)`, the leading coefficient of `−ln(1 − I_x(q+1, p))`.
fn ln_leading_coefficient<T: Scalar>(rec: &RecParams) -> T {
    specfun::ln_binomial_unchecked::<T>(rec.width() as u64, rec.q() as u64 + 1)
}

fn require_tolerance<T: Scalar>(tol: T) -> Result<()> {
    if tol > T::zero() && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "quadrature tolerance must be positive, got {tol:?}"
        )))
    }
}

// ---------------------------------------------------------------------------
// Random placement
// ---------------------------------------------------------------------------

fn survival_random_unchecked<T: Scalar>(l: u64, rec: &RecParams, sys: &SystemParams) -> T {
    let frac = T::count(l) / T::count(sys.nodes());
    let x = frac.powi(rec.r() as i32);
    let ln_alive = ln_inc_beta_complement(x, rec.q() + 1, rec.p());
    (T::count(sys.docs()) * ln_alive).exp()
}

/// `Pr[X > l] = (1 − I_{(l/N)^r}(q+1, p))^D` under random placement.
pub fn survival_random<T: Scalar>(
    l: u64,
    rec: &RecParams,
    sys: &SystemParams,
) -> Result<Probability<T>> {
    if l > sys.nodes() {
        return Err(Error::Domain(format!(
            "l = {l} outside 0..={}",
            sys.nodes()
        )));
    }
    Ok(Probability::clamped(survival_random_unchecked(l, rec, sys)))
}

/// Survival curve for `l = 0..=N` under random placement.
pub fn survival_curve_random<T: Scalar>(rec: &RecParams, sys: &SystemParams) -> SurvivalCurve<T> {
    let probabilities = (0..=sys.nodes())
        .map(|l| {
            survival_random_unchecked::<T>(l, rec, sys)
                .max(T::zero())
                .min(T::one())
        })
        .collect();
    SurvivalCurve { probabilities }
}

/// Exact expected persistency under random placement (full `l = 0..=N` sum).
pub fn expect_random_sum<T: Scalar>(rec: &RecParams, sys: &SystemParams) -> AnalyticResult<T> {
    AnalyticResult {
        value: survival_curve_random::<T>(rec, sys).expectation(),
        method: Method::ExactSum,
        error_bound: Some(T::zero()),
        quadrature_tolerance: None,
    }
}

/// `N ∫_0^1 (1 − I_{x^r}(q+1, p))^D dx`; differs from the exact sum by at most 1.
pub fn expect_random_integral<T: Scalar>(
    rec: &RecParams,
    sys: &SystemParams,
    tol: T,
) -> Result<AnalyticResult<T>> {
    require_tolerance(tol)?;
    let docs = T::count(sys.docs());
    let (q1, p, r) = (rec.q() + 1, rec.p(), rec.r() as i32);
    let integrand = |x: T| (docs * ln_inc_beta_complement(x.powi(r), q1, p)).exp();
    // (1 − I)^D ≈ exp(−D C(p+q,q+1) x^s) near zero
    let s = loss_order::<T>(rec);
    let width = (-(docs.ln() + ln_leading_coefficient::<T>(rec)) / s).exp();
    let quad = integrate(
        integrand,
        &boundary_layer_points(width),
        Tolerance::relative(tol),
    )?;
    Ok(AnalyticResult {
        value: T::count(sys.nodes()) * quad.value,
        method: Method::Integral,
        error_bound: Some(T::one()),
        quadrature_tolerance: Some(tol),
    })
}

/// Leading term of the large-`D` expansion under random placement.
pub fn expect_random_asymptotic<T: Scalar>(
    rec: &RecParams,
    sys: &SystemParams,
) -> AnalyticResult<T> {
    let inv_s = loss_order::<T>(rec).recip();
    let ln_value = specfun::log_gamma(T::one() + inv_s)
        .expect("positive argument")
        .ln()
        - inv_s * ln_leading_coefficient::<T>(rec)
        + T::count(sys.nodes()).ln()
        - inv_s * T::count(sys.docs()).ln();
    AnalyticResult {
        value: ln_value.exp(),
        method: Method::Asymptotic,
        error_bound: None,
        quadrature_tolerance: None,
    }
}

/// `N / s · Beta(D + 1, 1/s)` for REC(1, 1+q, r), `s = r(q+1)`; within 1 of the exact sum.
pub fn expect_random_p1_beta<T: Scalar>(
    q: u32,
    r: u32,
    sys: &SystemParams,
) -> Result<AnalyticResult<T>> {
    let rec = RecParams::new(1, q, r)?;
    let s = loss_order::<T>(&rec);
    let ln_beta = specfun::log_beta_real(T::count(sys.docs()) + T::one(), s.recip())?.ln();
    Ok(AnalyticResult {
        value: (T::count(sys.nodes()).ln() - s.ln() + ln_beta).exp(),
        method: Method::BetaExact,
        error_bound: Some(T::one()),
        quadrature_tolerance: None,
    })
}

// ---------------------------------------------------------------------------
// Symmetric placement
// ---------------------------------------------------------------------------

fn check_symmetric(rec: &RecParams, sys: &SystemParams) -> Result<()> {
    validate_symmetric_preconditions(rec, sys).map_err(|v| {
        parameter(format!(
            "symmetric formula for {rec} with N={}: {v}",
            sys.nodes()
        ))
    })
}

/// `ln(1 − I_x(q+1, p)^r)`.
fn ln_group_alive<T: Scalar>(x: T, rec: &RecParams) -> T {
    let (i, c) = inc_beta_pair(x, rec.q() + 1, rec.p());
    if i < T::lit(0.5) {
        (-i.powi(rec.r() as i32)).ln_1p()
    } else {
        // 1 − (1 − c)^r
        let ln_i_r = T::count(rec.r() as u64) * (-c).ln_1p();
        (-ln_i_r.exp_m1()).ln()
    }
}

/// Exact expected persistency under symmetric placement:
/// `(N+1) ∫_0^1 (1 − I_x(q+1, p)^r)^{N/((p+q) r)} dx`.
///
/// The document count is only used to check the preconditions.
pub fn expect_symmetric_integral<T: Scalar>(
    rec: &RecParams,
    sys: &SystemParams,
    tol: T,
) -> Result<AnalyticResult<T>> {
    check_symmetric(rec, sys)?;
    require_tolerance(tol)?;
    let groups = T::count(sys.nodes() / rec.chunks() as u64);
    let integrand = |x: T| (groups * ln_group_alive(x, rec)).exp();
    // 1 − I^r ≈ 1 − C(p+q,q+1)^r x^s near zero
    let s = loss_order::<T>(rec);
    let ln_a0 = T::count(rec.r() as u64) * ln_leading_coefficient::<T>(rec);
    let width = (-(groups.ln() + ln_a0) / s).exp();
    let quad = integrate(
        integrand,
        &boundary_layer_points(width),
        Tolerance::relative(tol),
    )?;
    Ok(AnalyticResult {
        value: T::count(sys.nodes() + 1) * quad.value,
        method: Method::Integral,
        error_bound: Some(T::zero()),
        quadrature_tolerance: Some(tol),
    })
}

/// Leading term of the large-`N` expansion under symmetric placement.
pub fn expect_symmetric_asymptotic<T: Scalar>(
    rec: &RecParams,
    sys: &SystemParams,
) -> AnalyticResult<T> {
    let inv_s = loss_order::<T>(rec).recip();
    let inv_q1 = T::count(rec.q() as u64 + 1).recip();
    let ln_value = specfun::log_gamma(T::one() + inv_s)
        .expect("positive argument")
        .ln()
        + inv_s * T::count(rec.chunks() as u64).ln()
        - inv_q1 * ln_leading_coefficient::<T>(rec)
        + (T::one() - inv_s) * T::count(sys.nodes()).ln();
    AnalyticResult {
        value: ln_value.exp(),
        method: Method::Asymptotic,
        error_bound: None,
        quadrature_tolerance: None,
    }
}

/// `(N+1)/s · Beta(N/s + 1, 1/s)` for REC(1, 1+q, r) under symmetric placement.
pub fn expect_symmetric_p1_beta<T: Scalar>(
    q: u32,
    r: u32,
    sys: &SystemParams,
) -> Result<AnalyticResult<T>> {
    let rec = RecParams::new(1, q, r)?;
    check_symmetric(&rec, sys)?;
    let s = loss_order::<T>(&rec);
    let groups = T::count(sys.nodes() / rec.chunks() as u64);
    let ln_beta = specfun::log_beta_real(groups + T::one(), s.recip())?.ln();
    Ok(AnalyticResult {
        value: (T::count(sys.nodes() + 1).ln() - s.ln() + ln_beta).exp(),
        method: Method::BetaExact,
        error_bound: Some(T::zero()),
        quadrature_tolerance: None,
    })
}

/// Largest `l` with `Pr[X > l − 1] > 0` under symmetric placement and the
/// per-cluster rule: each group can absorb `(r−1)(p+q) + q` removals.
pub fn symmetric_support_bound(rec: &RecParams, sys: &SystemParams) -> u64 {
    let groups = sys.nodes() / rec.chunks() as u64;
    let absorb = (rec.r() as u64 - 1) * rec.width() as u64 + rec.q() as u64;
    (groups * absorb + 1).min(sys.nodes())
}

/// Survival curve under symmetric placement and the per-cluster rule.
///
/// Built group by group: with `h_k(l)` the probability that `k` groups
/// survive a uniformly random `l`-subset of their `k g` nodes,
/// `h_{k+1}(l) = Σ_t Hyp(t; l, k g, g) · α_t · h_k(l − t)`, where `α_t` is
/// the fraction of `t`-subsets of one group that leave it alive.
pub fn survival_curve_symmetric<T: Scalar>(
    rec: &RecParams,
    sys: &SystemParams,
) -> Result<SurvivalCurve<T>> {
    check_symmetric(rec, sys)?;
    let g = rec.chunks() as usize;
    let width = rec.width() as usize;
    let groups = sys.nodes() as usize / g;
    let l_max = symmetric_support_bound(rec, sys) as usize;

    // dead_t: coefficient of z^t in (Σ_{s=q+1}^{p+q} C(p+q, s) z^s)^r
    let cluster: Vec<T> = (0..=width)
        .map(|s| {
            if s > rec.q() as usize {
                specfun::ln_binomial_unchecked::<T>(width as u64, s as u64).exp()
            } else {
                T::zero()
            }
        })
        .collect();
    let mut dead = vec![T::one()];
    for _ in 0..rec.r() {
        let mut next = vec![T::zero(); dead.len() + width];
        for (i, &a) in dead.iter().enumerate() {
            for (j, &b) in cluster.iter().enumerate() {
                next[i + j] = next[i + j] + a * b;
            }
        }
        dead = next;
    }
    let alive_frac: Vec<T> = (0..=g)
        .map(|t| {
            let total = specfun::ln_binomial_unchecked::<T>(g as u64, t as u64).exp();
            (T::one() - dead[t] / total).max(T::zero())
        })
        .collect();

    let n = sys.nodes() as usize;
    let ln_fact: Vec<T> = (0..=n)
        .map(|k| {
            specfun::log_gamma(T::count(k as u64 + 1))
                .expect("positive")
                .ln()
        })
        .collect();
    let ln_choose = |a: usize, b: usize| ln_fact[a] - ln_fact[b] - ln_fact[a - b];

    let mut h: Vec<T> = alive_frac.clone();
    for k in 1..groups {
        let prev_nodes = k * g;
        let len = (prev_nodes + g).min(l_max) + 1;
        let mut next = vec![T::zero(); len];
        for (l, slot) in next.iter_mut().enumerate() {
            // hypergeometric weights over t, renormalized to cancel log-space rounding
            let (mut acc, mut norm) = (T::zero(), T::zero());
            let t_lo = l.saturating_sub(prev_nodes);
            for (t, &alpha) in alive_frac.iter().enumerate().take(g.min(l) + 1).skip(t_lo) {
                let hyp = (ln_choose(g, t) + ln_choose(prev_nodes, l - t)
                    - ln_choose(prev_nodes + g, l))
                .exp();
                norm = norm + hyp;
                let prev = h.get(l - t).copied().unwrap_or(T::zero());
                acc = acc + hyp * alpha * prev;
            }
            let acc = if norm > T::zero() {
                acc / norm
            } else {
                T::zero()
            };
            *slot = acc.min(T::one());
        }
        h = next;
    }
    h.resize(l_max + 1, T::zero());
    h.truncate(l_max + 1);
    Ok(SurvivalCurve { probabilities: h })
}

// ---------------------------------------------------------------------------
// Dependence on p
// ---------------------------------------------------------------------------

/// Exact `E[X]` for `p = 1..=p_max` at fixed `q, r`.
///
/// Symmetric values are only defined where `(p+q) r | N` and
/// `D ≥ N/((p+q) r)`; other `p` are skipped.
pub fn p_profile<T: Scalar>(
    strategy: Strategy,
    q: u32,
    r: u32,
    sys: &SystemParams,
    p_max: u32,
) -> Result<Vec<(u32, T)>> {
    let tol = T::lit(DEFAULT_TOLERANCE).max(T::epsilon() * T::lit(64.0));
    let mut out = Vec::new();
    for p in 1..=p_max {
        let rec = RecParams::new(p, q, r)?;
        match strategy {
            Strategy::Random => out.push((p, expect_random_sum::<T>(&rec, sys).value)),
            Strategy::Symmetric => {
                if validate_symmetric_preconditions(&rec, sys).is_ok() {
                    out.push((p, expect_symmetric_integral(&rec, sys, tol)?.value));
                }
            }
        }
    }
    Ok(out)
}

fn nonincreasing<T: Scalar>(values: &[(u32, T)]) -> bool {
    let slack = T::lit(1e-9);
    values
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 * (T::one() + slack) + slack)
}

/// Whether `E[X]` is nonincreasing in `p` over `1..=p_max` for both
/// strategies' exact formulas.
pub fn max_over_p_check<T: Scalar>(q: u32, r: u32, sys: &SystemParams, p_max: u32) -> Result<bool> {
    if p_max < 2 {
        return Err(parameter("max_over_p_check needs p_max >= 2"));
    }
    let random = p_profile::<T>(Strategy::Random, q, r, sys, p_max)?;
    let symmetric = p_profile::<T>(Strategy::Symmetric, q, r, sys, p_max)?;
    Ok(nonincreasing(&random) && nonincreasing(&symmetric))
}
