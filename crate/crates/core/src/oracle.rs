//! Exact reference values for small instances.
//!
//! Everything here works in big integers and rationals and counts erasure
//! patterns directly. Nothing is shared with the floating-point formulas in
//! [`crate::analytic`], so agreement between the two is a genuine check.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{validate_symmetric_preconditions, LossSemantics, RecParams, SystemParams};

pub type ExactRational = BigRational;

/// Largest node count accepted by [`exact_symmetric_expectation`].
pub const MAX_EXACT_NODES: u64 = 120;
/// Largest node count accepted by [`brute_force_symmetric`].
pub const MAX_BRUTE_NODES: u64 = 16;
/// Largest `N^g` accepted by [`brute_force_random`].
pub const MAX_RANDOM_PLACEMENTS: u64 = 1_000_000;
/// Largest group size for the Multiset pattern enumeration.
pub const MAX_MULTISET_GROUP: u32 = 20;

/// Survival counts of one group of `(p+q) r` nodes: `alive[t]` is the
/// number of `t`-subsets whose removal leaves the group's documents
/// restorable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPolynomial {
    alive: Vec<BigUint>,
}

impl GroupPolynomial {
    pub fn coefficients(&self) -> &[BigUint] {
        &self.alive
    }

    pub fn degree_bound(&self) -> usize {
        self.alive.len() - 1
    }

    /// Exact `self^k`.
    pub fn pow(&self, k: u64) -> Vec<BigUint> {
        let mut acc = vec![BigUint::one()];
        for _ in 0..k {
            acc = convolve(&acc, &self.alive);
        }
        while acc.len() > 1 && acc.last().is_some_and(Zero::is_zero) {
            acc.pop();
        }
        acc
    }
}

fn convolve(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// Row `n` of Pascal's triangle.
fn pascal_row(n: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(BigUint::one());
        next.extend(row.windows(2).map(|w| &w[0] + &w[1]));
        next.push(BigUint::one());
        row = next;
    }
    row
}

fn size_error(what: impl Into<String>) -> Error {
    Error::Size(what.into())
}

/// Whether a document survives the erasure `mask` over its chunk slots
/// (replica-major, bit `j (p+q) + m` for replica `j`, multiset `m`).
fn survives(rec: &RecParams, mask: u64, semantics: LossSemantics) -> bool {
    let (w, r, q) = (rec.width() as u64, rec.r() as u64, rec.q() as u64);
    let erased = |j: u64, m: u64| mask >> (j * w + m) & 1 == 1;
    match semantics {
        LossSemantics::Multiset => {
            let dead = (0..w).filter(|&m| (0..r).all(|j| erased(j, m))).count() as u64;
            dead <= q
        }
        LossSemantics::PerCluster => {
            (0..r).any(|j| (0..w).filter(|&m| erased(j, m)).count() as u64 <= q)
        }
    }
}

pub fn group_polynomial(rec: &RecParams, semantics: LossSemantics) -> Result<GroupPolynomial> {
    let g = rec.chunks() as usize;
    let width = rec.width() as usize;
    let total = pascal_row(g);
    let alive = match semantics {
        LossSemantics::PerCluster => {
            let binom = pascal_row(width);
            let cluster: Vec<BigUint> = (0..=width)
                .map(|s| {
                    if s > rec.q() as usize {
                        binom[s].clone()
                    } else {
                        BigUint::zero()
                    }
                })
                .collect();
            let mut dead = vec![BigUint::one()];
            for _ in 0..rec.r() {
                dead = convolve(&dead, &cluster);
            }
            total.into_iter().zip(dead).map(|(c, d)| c - d).collect()
        }
        LossSemantics::Multiset => {
            if rec.chunks() > MAX_MULTISET_GROUP {
                return Err(size_error(format!(
                    "Multiset group enumeration needs (p+q)r <= {MAX_MULTISET_GROUP}, got {g}"
                )));
            }
            let counts = (0u64..1 << g)
                .into_par_iter()
                .filter(|&mask| survives(rec, mask, semantics))
                .fold(
                    || vec![0u64; g + 1],
                    |mut acc, mask| {
                        acc[mask.count_ones() as usize] += 1;
                        acc
                    },
                )
                .reduce(
                    || vec![0u64; g + 1],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                );
            counts.into_iter().map(BigUint::from).collect()
        }
    };
    Ok(GroupPolynomial { alive })
}

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(num.clone().into(), den.clone().into())
}

/// Exact `Pr[X > l]` for `l = 0..=N` under the symmetric strategy.
pub fn exact_symmetric_survival(
    rec: &RecParams,
    sys: &SystemParams,
    semantics: LossSemantics,
) -> Result<Vec<ExactRational>> {
    validate_symmetric_preconditions(rec, sys).map_err(|v| Error::Parameter(v.to_string()))?;
    if sys.nodes() > MAX_EXACT_NODES {
        return Err(size_error(format!(
            "exact symmetric oracle needs N <= {MAX_EXACT_NODES}"
        )));
    }
    let n = sys.nodes() as usize;
    let groups = sys.nodes() / rec.chunks() as u64;
    let power = group_polynomial(rec, semantics)?.pow(groups);
    let choose = pascal_row(n);
    Ok((0..=n)
        .map(|l| match power.get(l) {
            Some(c) => ratio(c, &choose[l]),
            None => BigRational::zero(),
        })
        .collect())
}

pub fn exact_symmetric_expectation(
    rec: &RecParams,
    sys: &SystemParams,
    semantics: LossSemantics,
) -> Result<ExactRational> {
    Ok(exact_symmetric_survival(rec, sys, semantics)?
        .into_iter()
        .sum())
}

/// Enumerates every node subset on the round-robin layout.
///
/// Works for any `D`, including layouts that violate the divisibility
/// conditions.
pub fn brute_force_symmetric(
    rec: &RecParams,
    sys: &SystemParams,
    semantics: LossSemantics,
) -> Result<ExactRational> {
    if sys.nodes() > MAX_BRUTE_NODES {
        return Err(size_error(format!(
            "symmetric enumeration needs N <= {MAX_BRUTE_NODES}"
        )));
    }
    let n = sys.nodes();
    let g = rec.chunks() as u64;
    // documents whose first chunk lands on the same node are identical
    let mut offsets: Vec<u64> = (0..sys.docs().min(n)).map(|d| d * g % n).collect();
    offsets.sort_unstable();
    offsets.dedup();

    let alive = (0u64..1 << n)
        .into_par_iter()
        .filter(|&removed| {
            offsets.iter().all(|&off| {
                let mask = (0..g).fold(0u64, |m, k| m | (removed >> ((off + k) % n) & 1) << k);
                survives(rec, mask, semantics)
            })
        })
        .fold(
            || vec![0u64; n as usize + 1],
            |mut acc, removed| {
                acc[removed.count_ones() as usize] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; n as usize + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let choose = pascal_row(n as usize);
    Ok(alive
        .iter()
        .zip(&choose)
        .map(|(&a, c)| ratio(&BigUint::from(a), c))
        .sum())
}

/// Enumerates every placement of a single document's chunks (Multiset
/// loss rule, collisions allowed).
pub fn brute_force_random(rec: &RecParams, sys: &SystemParams) -> Result<ExactRational> {
    if sys.docs() != 1 {
        return Err(Error::Parameter(
            "random enumeration covers a single document (D = 1)".into(),
        ));
    }
    let n = sys.nodes();
    let g = rec.chunks();
    let placements = n
        .checked_pow(g)
        .filter(|&c| c <= MAX_RANDOM_PLACEMENTS)
        .ok_or_else(|| {
            size_error(format!(
                "random enumeration needs N^g <= {MAX_RANDOM_PLACEMENTS}"
            ))
        })?;
    let g = g as usize;
    let umax = g.min(n as usize);

    // counts[u][k]: over all placements using u distinct nodes, the number
    // of surviving erasure patterns of exactly k of those nodes
    let counts = (0..placements)
        .into_par_iter()
        .fold(
            || vec![vec![0u64; umax + 1]; umax + 1],
            |mut acc, code| {
                let mut nodes = Vec::with_capacity(g);
                let mut c = code;
                for _ in 0..g {
                    nodes.push(c % n);
                    c /= n;
                }
                let mut distinct = nodes.clone();
                distinct.sort_unstable();
                distinct.dedup();
                let u = distinct.len();
                let local: Vec<usize> = nodes
                    .iter()
                    .map(|x| distinct.binary_search(x).expect("present"))
                    .collect();
                for sub in 0u64..1 << u {
                    let mask = local
                        .iter()
                        .enumerate()
                        .fold(0u64, |m, (k, &i)| m | (sub >> i & 1) << k);
                    if survives(rec, mask, LossSemantics::Multiset) {
                        acc[u][sub.count_ones() as usize] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![vec![0u64; umax + 1]; umax + 1],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
                }
                a
            },
        );

    // an l-subset meets the used nodes in exactly k of them in C(N-u, l-k) ways
    let mut total = BigRational::zero();
    let choose_n = pascal_row(n as usize);
    let rows: Vec<Vec<BigUint>> = (0..=umax).map(|u| pascal_row(n as usize - u)).collect();
    let placements = BigUint::from(placements);
    for l in 0..=n as usize {
        let mut alive = BigUint::zero();
        for (u, row) in counts.iter().enumerate() {
            for (k, &c) in row.iter().enumerate() {
                if c > 0 && l >= k && l - k <= n as usize - u {
                    alive += BigUint::from(c) * &rows[u][l - k];
                }
            }
        }
        total += ratio(&alive, &(&placements * &choose_n[l]));
    }
    Ok(total)
}

/// Nearest `f64` to an exact rational.
pub fn to_f64(x: &ExactRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
