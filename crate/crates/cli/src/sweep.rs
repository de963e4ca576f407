//! Parameter sweeps: JSON spec in, CSV rows and an SVG chart out.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use recpersist::analytic::{
    expect_random_asymptotic, expect_random_p1_beta, expect_random_sum,
    expect_symmetric_asymptotic, expect_symmetric_integral, expect_symmetric_p1_beta,
    DEFAULT_TOLERANCE,
};
use recpersist::simulator::{simulate, SimConfig, SimSummary, WorkloadClass};
use recpersist::{
    validate_symmetric_preconditions, LossSemantics, RecParams, Strategy, SystemParams,
};

use crate::svg::{Chart, Series, Style};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TRIALS: u64 = 500;
pub const PRESETS: [&str; 6] = ["fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub p: u32,
    pub q: u32,
    pub r: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeGrid {
    List(Vec<u64>),
    Multiples {
        multiple_of: u64,
        #[serde(default = "one")]
        k_min: u64,
        k_max: u64,
    },
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocsKeyword {
    EqualToNodes,
}

/// Documents per point: a fixed count, `D = N`, or one count per code
/// (a single mixed workload).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DocsRule {
    Fixed(u64),
    Keyword(DocsKeyword),
    PerClass(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overlay {
    Exact,
    Asymptotic,
    BetaExact,
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_overlays() -> Vec<Overlay> {
    vec![Overlay::Exact, Overlay::Asymptotic, Overlay::BetaExact]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schema_version: u32,
    pub name: String,
    pub strategy: Strategy,
    #[serde(default)]
    pub semantics: Option<LossSemantics>,
    pub codes: Vec<CodeSpec>,
    pub nodes: NodeGrid,
    pub docs: DocsRule,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_overlays")]
    pub overlays: Vec<Overlay>,
    #[serde(default)]
    pub log_log: bool,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let spec: SweepSpec = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("invalid sweep config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn semantics(&self) -> LossSemantics {
        self.semantics
            .unwrap_or_else(|| self.strategy.default_semantics())
    }

    pub fn node_values(&self) -> Vec<u64> {
        match &self.nodes {
            NodeGrid::List(v) => v.clone(),
            NodeGrid::Multiples {
                multiple_of,
                k_min,
                k_max,
            } => (*k_min..=*k_max).map(|k| k * multiple_of).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.schema_version != SCHEMA_VERSION {
            return usage(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return usage(format!(
                "sweep name '{}' must be non-empty and filename-safe",
                self.name
            ));
        }
        if self.codes.is_empty() {
            return usage("sweep needs at least one code".into());
        }
        for c in &self.codes {
            RecParams::new(c.p, c.q, c.r).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        let nodes = self.node_values();
        if nodes.is_empty() {
            return usage("node grid is empty".into());
        }
        if nodes.iter().any(|&n| n == 0 || n > u32::MAX as u64) {
            return usage("node counts must be in 1..=u32::MAX".into());
        }
        if self.trials < 1 {
            return usage("trials must be at least 1".into());
        }
        match &self.docs {
            DocsRule::Fixed(0) => return usage("docs must be at least 1".into()),
            DocsRule::PerClass(v) if v.len() != self.codes.len() || v.contains(&0) => {
                return usage("per-class docs need one positive count per code".into())
            }
            _ => {}
        }
        Ok(())
    }

    /// Caps the grid at its first `k` node values.
    pub fn truncate_nodes(&mut self, k: usize) {
        let mut v = self.node_values();
        v.truncate(k);
        self.nodes = NodeGrid::List(v);
    }
}

pub fn preset(name: &str) -> Option<SweepSpec> {
    let (strategy, (p, q, r), docs) = match name {
        "fig4" => (Strategy::Random, (1, 0, 2), DocsRule::Fixed(5)),
        "fig5" => (
            Strategy::Random,
            (1, 0, 2),
            DocsRule::Keyword(DocsKeyword::EqualToNodes),
        ),
        "fig6" => (
            Strategy::Symmetric,
            (1, 1, 1),
            DocsRule::Keyword(DocsKeyword::EqualToNodes),
        ),
        "fig7" => (
            Strategy::Symmetric,
            (2, 2, 1),
            DocsRule::Keyword(DocsKeyword::EqualToNodes),
        ),
        "fig8" => (
            Strategy::Random,
            (1, 2, 1),
            DocsRule::Keyword(DocsKeyword::EqualToNodes),
        ),
        "fig9" => (
            Strategy::Symmetric,
            (1, 2, 1),
            DocsRule::Keyword(DocsKeyword::EqualToNodes),
        ),
        _ => return None,
    };
    Some(SweepSpec {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        strategy,
        semantics: None,
        codes: vec![CodeSpec { p, q, r }],
        nodes: NodeGrid::Multiples {
            multiple_of: 48,
            k_min: 1,
            k_max: 62,
        },
        docs,
        trials: DEFAULT_TRIALS,
        master_seed: 2024,
        overlays: default_overlays(),
        log_log: false,
    })
}

/// Closed-form values for one point, when they apply.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Theory {
    pub exact: Option<f64>,
    pub asymptotic: Option<f64>,
    pub beta_exact: Option<f64>,
}

/// Evaluates the requested overlays, or explains why none applies.
///
/// The closed forms assume the strategy's own loss rule; the two rules
/// coincide for `p = 1` or `r = 1`.
pub fn theory(
    strategy: Strategy,
    semantics: LossSemantics,
    rec: &RecParams,
    sys: &SystemParams,
    overlays: &[Overlay],
) -> Result<Theory, String> {
    if semantics != strategy.default_semantics() && rec.p() > 1 && rec.r() > 1 {
        return Err(format!(
            "closed forms for {strategy} placement assume {} loss",
            strategy.default_semantics()
        ));
    }
    if strategy == Strategy::Symmetric {
        validate_symmetric_preconditions(rec, sys).map_err(|v| v.to_string())?;
    }
    let want = |o: Overlay| overlays.contains(&o);
    let mut t = Theory::default();
    match strategy {
        Strategy::Random => {
            if want(Overlay::Exact) {
                t.exact = Some(expect_random_sum::<f64>(rec, sys).value);
            }
            if want(Overlay::Asymptotic) {
                t.asymptotic = Some(expect_random_asymptotic::<f64>(rec, sys).value);
            }
            if want(Overlay::BetaExact) && rec.p() == 1 {
                t.beta_exact = Some(
                    expect_random_p1_beta::<f64>(rec.q(), rec.r(), sys)
                        .map_err(|e| e.to_string())?
                        .value,
                );
            }
        }
        Strategy::Symmetric => {
            if want(Overlay::Exact) {
                t.exact = Some(
                    expect_symmetric_integral(rec, sys, DEFAULT_TOLERANCE)
                        .map_err(|e| e.to_string())?
                        .value,
                );
            }
            if want(Overlay::Asymptotic) {
                t.asymptotic = Some(expect_symmetric_asymptotic::<f64>(rec, sys).value);
            }
            if want(Overlay::BetaExact) && rec.p() == 1 {
                t.beta_exact = Some(
                    expect_symmetric_p1_beta::<f64>(rec.q(), rec.r(), sys)
                        .map_err(|e| e.to_string())?
                        .value,
                );
            }
        }
    }
    Ok(t)
}

/// One output line of a sweep. Mixed workloads list their per-class
/// parameters separated by `;`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub strategy: &'static str,
    pub semantics: &'static str,
    pub p: String,
    pub q: String,
    pub r: String,
    pub nodes: u64,
    pub docs: String,
    pub trials: u64,
    pub seed: u64,
    pub mean_empirical: Option<f64>,
    pub std_error: Option<f64>,
    pub theory_exact: Option<f64>,
    pub theory_asymptotic: Option<f64>,
    pub theory_beta_exact: Option<f64>,
    pub status: String,
    #[serde(skip)]
    pub series: usize,
    #[serde(skip)]
    pub total_docs: u64,
}

impl SweepRow {
    pub fn is_error(&self) -> bool {
        self.status.starts_with("error")
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Builds a row from a finished (or failed) simulation of `config`.
pub fn make_row(
    config: &SimConfig,
    outcome: Result<SimSummary, String>,
    overlays: &[Overlay],
    series: usize,
) -> SweepRow {
    let classes = &config.classes;
    let total_docs = config.total_docs();
    let mut row = SweepRow {
        strategy: config.strategy.name(),
        semantics: config.semantics.name(),
        p: join(classes.iter().map(|c| c.rec.p())),
        q: join(classes.iter().map(|c| c.rec.q())),
        r: join(classes.iter().map(|c| c.rec.r())),
        nodes: config.nodes,
        docs: join(classes.iter().map(|c| c.doc_count)),
        trials: config.trials,
        seed: config.master_seed,
        mean_empirical: None,
        std_error: None,
        theory_exact: None,
        theory_asymptotic: None,
        theory_beta_exact: None,
        status: "ok".into(),
        series,
        total_docs,
    };
    match outcome {
        Ok(s) => {
            row.mean_empirical = Some(s.mean);
            row.std_error = Some(s.std_error);
        }
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    }
    let single = match classes.as_slice() {
        [c] => SystemParams::new(config.nodes, c.doc_count)
            .ok()
            .map(|s| (c.rec, s)),
        _ => None,
    };
    match single.map(|(rec, sys)| theory(config.strategy, config.semantics, &rec, &sys, overlays)) {
        Some(Ok(t)) => {
            row.theory_exact = t.exact;
            row.theory_asymptotic = t.asymptotic;
            row.theory_beta_exact = t.beta_exact;
        }
        _ => row.status = "out-of-theory".into(),
    }
    row
}

/// Per-point seed derived from the master seed and the point's identity.
pub fn row_seed(master_seed: u64, series: usize, nodes: u64, docs: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master_seed ^ series as u64) ^ nodes) ^ docs)
}

/// The simulation behind every point, in the grid's order.
pub fn configs(spec: &SweepSpec) -> Result<Vec<(usize, SimConfig)>, CliError> {
    spec.validate()?;
    let recs: Vec<RecParams> = spec
        .codes
        .iter()
        .map(|c| RecParams::new(c.p, c.q, c.r).map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for n in spec.node_values() {
        let series: Vec<Vec<WorkloadClass>> = match &spec.docs {
            DocsRule::PerClass(docs) => {
                vec![recs
                    .iter()
                    .zip(docs)
                    .map(|(&rec, &doc_count)| WorkloadClass { rec, doc_count })
                    .collect()]
            }
            DocsRule::Fixed(d) => recs
                .iter()
                .map(|&rec| vec![WorkloadClass { rec, doc_count: *d }])
                .collect(),
            DocsRule::Keyword(DocsKeyword::EqualToNodes) => recs
                .iter()
                .map(|&rec| vec![WorkloadClass { rec, doc_count: n }])
                .collect(),
        };
        for (idx, classes) in series.into_iter().enumerate() {
            let docs: u64 = classes.iter().map(|c| c.doc_count).sum();
            out.push((
                idx,
                SimConfig {
                    strategy: spec.strategy,
                    semantics: spec.semantics(),
                    classes,
                    nodes: n,
                    trials: spec.trials,
                    master_seed: row_seed(spec.master_seed, idx, n, docs),
                },
            ));
        }
    }
    Ok(out)
}

/// Runs every point; rows come back sorted by `N`, then `D`, then series.
pub fn run(spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    let jobs = configs(spec)?;
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|(series, cfg)| {
            make_row(
                cfg,
                simulate(cfg).map_err(|e| e.to_string()),
                &spec.overlays,
                *series,
            )
        })
        .collect();
    rows.sort_by_key(|r| (r.nodes, r.total_docs, r.series));
    Ok(rows)
}

pub fn to_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "strategy",
            "semantics",
            "p",
            "q",
            "r",
            "nodes",
            "docs",
            "trials",
            "seed",
            "mean_empirical",
            "std_error",
            "theory_exact",
            "theory_asymptotic",
            "theory_beta_exact",
            "status",
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn chart(spec: &SweepSpec, rows: &[SweepRow]) -> Chart {
    let n_series = rows.iter().map(|r| r.series + 1).max().unwrap_or(0);
    let mut series = Vec::new();
    for s in 0..n_series {
        let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.series == s).collect();
        let Some(first) = mine.first() else { continue };
        let label = if first.p.contains(';') {
            "mixed".to_string()
        } else {
            format!(
                "REC({}, {}, {})",
                first.p,
                first.p.parse::<u32>().unwrap_or(0) + first.q.parse::<u32>().unwrap_or(0),
                first.r
            )
        };
        let color = 3 * s;
        let column = |f: fn(&SweepRow) -> Option<f64>| -> Vec<(f64, f64)> {
            mine.iter()
                .filter_map(|r| f(r).map(|y| (r.nodes as f64, y)))
                .collect()
        };
        let mut push = |suffix: &str, style: Style, color: usize, points: Vec<(f64, f64)>| {
            if !points.is_empty() {
                series.push(Series {
                    label: format!("{label} {suffix}"),
                    style,
                    color,
                    points,
                });
            }
        };
        push(
            "simulated",
            Style::Points,
            color,
            column(|r| r.mean_empirical),
        );
        push("exact", Style::Line, color, column(|r| r.theory_exact));
        push(
            "asymptotic",
            Style::Dashed,
            color + 1,
            column(|r| r.theory_asymptotic),
        );
        push(
            "beta-exact",
            Style::Dashed,
            color + 2,
            column(|r| r.theory_beta_exact),
        );
    }
    Chart {
        title: format!(
            "{}: {} placement, {} loss, {} trials",
            spec.name,
            spec.strategy,
            spec.semantics(),
            spec.trials
        ),
        x_label: "nodes N".into(),
        y_label: "expected persistency E[X]".into(),
        log_log: spec.log_log,
        series,
    }
}

/// Runs the sweep and writes `<name>.csv` and `<name>.svg` under `out_dir`.
pub fn run_to_dir(
    spec: &SweepSpec,
    out_dir: &Path,
) -> Result<(Vec<SweepRow>, PathBuf, PathBuf), CliError> {
    let rows = run(spec)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let csv_path = out_dir.join(format!("{}.csv", spec.name));
    let svg_path = out_dir.join(format!("{}.svg", spec.name));
    std::fs::write(&csv_path, to_csv(&rows)?)
        .map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    std::fs::write(&svg_path, chart(spec, &rows).render())
        .map_err(|e| CliError::Io(format!("{}: {e}", svg_path.display())))?;
    Ok((rows, csv_path, svg_path))
}
