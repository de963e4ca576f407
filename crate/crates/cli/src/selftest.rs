//! Self-verification: formulas against exact oracles and the simulator.

use std::time::Instant;

use serde::Serialize;

use recpersist::analytic::{
    expect_random_sum, expect_symmetric_integral, expect_symmetric_p1_beta,
};
use recpersist::oracle::{
    brute_force_random, brute_force_symmetric, exact_symmetric_expectation, to_f64,
};
use recpersist::simulator::{simulate, SimConfig};
use recpersist::specfun::{beta_real, log_gamma};
use recpersist::{LossSemantics, RecParams, Strategy, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

/// Deliberate defects used to confirm that the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Scales every Beta value by `1 + 1e-6`.
    PerturbedBeta,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Largest relative deviation seen, where meaningful.
    pub max_deviation: Option<f64>,
    pub detail: String,
    pub seconds: f64,
}

struct Ctx {
    fault: Fault,
}

impl Ctx {
    fn beta(&self, a: f64, b: f64) -> f64 {
        let v = beta_real(a, b).expect("positive arguments");
        match self.fault {
            Fault::None => v,
            Fault::PerturbedBeta => v * (1.0 + 1e-6),
        }
    }
}

type Outcome = Result<(usize, Option<f64>, String), String>;
type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn rec(p: u32, q: u32, r: u32) -> RecParams {
    RecParams::new(p, q, r).expect("valid code")
}

fn sys(n: u64, d: u64) -> SystemParams {
    SystemParams::new(n, d).expect("valid system")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn codes() -> impl Iterator<Item = RecParams> {
    (1..=3).flat_map(|p| (0..=2).flat_map(move |q| (1..=3).map(move |r| rec(p, q, r))))
}

fn beta_gamma_identity(ctx: &Ctx) -> Outcome {
    // Beta(a, b) Γ(a + b) = Γ(a) Γ(b), and Beta(6, 1/2) = 512/693
    let mut worst = 0.0f64;
    let mut cases = 0;
    for a in [0.5, 1.0, 2.5, 6.0, 17.0, 120.5] {
        for b in [0.5, 1.0 / 3.0, 2.0, 9.0] {
            let lg = |z: f64| log_gamma(z).expect("positive").ln();
            let want = (lg(a) + lg(b) - lg(a + b)).exp();
            let d = rel(ctx.beta(a, b), want);
            worst = worst.max(d);
            if d > 1e-12 {
                return Err(format!("Beta-Gamma identity Beta(a,b) = Γ(a)Γ(b)/Γ(a+b) violated at a={a}, b={b}: rel error {d:.2e}"));
            }
            cases += 1;
        }
    }
    let d = rel(ctx.beta(6.0, 0.5), 512.0 / 693.0);
    if d > 1e-13 {
        return Err(format!(
            "Beta(6, 1/2) = 512/693 violated: rel error {d:.2e}"
        ));
    }
    Ok((
        cases + 1,
        Some(worst.max(d)),
        "Beta(a,b) = Γ(a)Γ(b)/Γ(a+b) and Beta(6,1/2) = 512/693".into(),
    ))
}

fn symmetric_polynomial_vs_integral(max_nodes: u64) -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for rc in codes() {
        let g = rc.chunks() as u64;
        for n in (g..=max_nodes).step_by(g as usize) {
            let s = sys(n, n / g);
            let exact = to_f64(
                &exact_symmetric_expectation(&rc, &s, LossSemantics::PerCluster)
                    .map_err(|e| e.to_string())?,
            );
            let integral = expect_symmetric_integral(&rc, &s, 1e-12)
                .map_err(|e| e.to_string())?
                .value;
            let d = rel(integral, exact);
            worst = worst.max(d);
            if d > 1e-8 {
                return Err(format!(
                    "symmetric integral {integral} vs polynomial oracle {exact} for {rc}, N={n}"
                ));
            }
            cases += 1;
        }
    }
    Ok((
        cases,
        Some(worst),
        format!("N <= {max_nodes}, max rel deviation {worst:.2e}"),
    ))
}

fn symmetric_brute_force(max_nodes: u64) -> Outcome {
    let mut cases = 0;
    for rc in codes() {
        let g = rc.chunks() as u64;
        for n in (g..=max_nodes).step_by(g as usize) {
            let s = sys(n, n / g);
            for sem in [LossSemantics::PerCluster, LossSemantics::Multiset] {
                let brute = brute_force_symmetric(&rc, &s, sem).map_err(|e| e.to_string())?;
                let poly = exact_symmetric_expectation(&rc, &s, sem).map_err(|e| e.to_string())?;
                if brute != poly {
                    return Err(format!("subset enumeration {brute} vs polynomial count {poly} for {rc}, N={n}, {sem}"));
                }
                cases += 1;
            }
        }
    }
    Ok((
        cases,
        None,
        format!("N <= {max_nodes}, exact rational equality"),
    ))
}

fn random_enumeration() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for rc in (1..=6).flat_map(|p| (0..=5).flat_map(move |q| (1..=6).map(move |r| (p, q, r)))) {
        let rc = rec(rc.0, rc.1, rc.2);
        if rc.chunks() > 6 {
            continue;
        }
        for n in 1..=6 {
            let s = sys(n, 1);
            let brute = to_f64(&brute_force_random(&rc, &s).map_err(|e| e.to_string())?);
            let sum = expect_random_sum::<f64>(&rc, &s).value;
            let d = (brute - sum).abs();
            worst = worst.max(d);
            if d > 1e-12 {
                return Err(format!(
                    "random exact sum {sum} vs placement enumeration {brute} for {rc}, N={n}"
                ));
            }
            cases += 1;
        }
    }
    Ok((cases, Some(worst), "(p+q)r <= 6, N <= 6, D = 1".into()))
}

fn symmetric_beta_formula(ctx: &Ctx, max_nodes: u64) -> Outcome {
    // (N+1)/s Beta(N/s + 1, 1/s) against the exact count, p = 1
    let mut worst = 0.0f64;
    let mut cases = 0;
    for q in 0..=2u32 {
        for r in 1..=3u32 {
            let rc = rec(1, q, r);
            let g = rc.chunks() as u64;
            let s_inv = 1.0 / rc.loss_order() as f64;
            for n in (g..=max_nodes).step_by(g as usize) {
                let s = sys(n, n / g);
                let exact = to_f64(
                    &exact_symmetric_expectation(&rc, &s, LossSemantics::PerCluster)
                        .map_err(|e| e.to_string())?,
                );
                let lib = expect_symmetric_p1_beta::<f64>(q, r, &s)
                    .map_err(|e| e.to_string())?
                    .value;
                let formula = (n + 1) as f64 * s_inv * ctx.beta((n / g) as f64 + 1.0, s_inv);
                let d = rel(formula, exact).max(rel(lib, exact));
                worst = worst.max(d);
                if d > 1e-10 {
                    return Err(format!(
                        "Beta formula (N+1)/s Beta(N/s+1, 1/s) = {formula} vs exact {exact} for {rc}, N={n}"
                    ));
                }
                cases += 1;
            }
        }
    }
    Ok((cases, Some(worst), format!("p = 1, N <= {max_nodes}")))
}

fn monte_carlo() -> Outcome {
    let mut lines = Vec::new();
    let checks = [
        (Strategy::Random, rec(1, 0, 2), sys(48, 5), 501u64),
        (Strategy::Symmetric, rec(1, 1, 1), sys(96, 48), 502),
        (Strategy::Random, rec(2, 1, 2), sys(48, 10), 503),
    ];
    for (strategy, rc, s, seed) in checks {
        let summary = simulate(&SimConfig::uniform(strategy, rc, s, 20_000, seed))
            .map_err(|e| e.to_string())?;
        let theory = match strategy {
            Strategy::Random => expect_random_sum::<f64>(&rc, &s).value,
            Strategy::Symmetric => {
                expect_symmetric_integral(&rc, &s, 1e-12)
                    .map_err(|e| e.to_string())?
                    .value
            }
        };
        let z = (summary.mean - theory) / summary.std_error;
        let line = format!("{strategy} {rc} N={}: z = {z:+.2}", s.nodes());
        if z.abs() > 3.0 {
            return Err(format!(
                "simulation mean outside 3 standard errors of theory: {line}"
            ));
        }
        lines.push(line);
    }
    Ok((lines.len(), None, lines.join(", ")))
}

pub fn run(level: Level, fault: Fault) -> Vec<CheckResult> {
    let ctx = &Ctx { fault };
    let max_nodes = match level {
        Level::Quick => 12,
        Level::Full => 120,
    };
    let mut checks: Vec<Check<'_>> = vec![
        (
            "beta-gamma-identity",
            Box::new(move || beta_gamma_identity(ctx)),
        ),
        (
            "symmetric-polynomial-vs-integral",
            Box::new(move || symmetric_polynomial_vs_integral(max_nodes)),
        ),
        (
            "symmetric-brute-force-vs-polynomial",
            Box::new(|| symmetric_brute_force(12)),
        ),
        ("random-sum-vs-enumeration", Box::new(random_enumeration)),
        (
            "symmetric-beta-formula",
            Box::new(move || symmetric_beta_formula(ctx, max_nodes)),
        ),
    ];
    if level == Level::Full {
        checks.push(("monte-carlo-vs-theory", Box::new(monte_carlo)));
    }
    checks
        .into_iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let outcome = check();
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok((cases, max_deviation, detail)) => CheckResult {
                    name,
                    passed: true,
                    cases,
                    max_deviation,
                    detail,
                    seconds,
                },
                Err(detail) => CheckResult {
                    name,
                    passed: false,
                    cases: 0,
                    max_deviation: None,
                    detail,
                    seconds,
                },
            }
        })
        .collect()
}
