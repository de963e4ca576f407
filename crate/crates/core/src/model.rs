//! Domain vocabulary: code and system parameters, placements, removal
//! orders and the two document-loss rules.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};

/// Parameters of a replicated erasure code REC(p, p+q, r).
///
/// A document is split into `p` chunks, encoded into `p + q` chunks, and each
/// encoded chunk is stored `r` times, for `(p + q) r` fragments in total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecParams {
    p: u32,
    q: u32,
    r: u32,
}

impl RecParams {
    pub fn new(p: u32, q: u32, r: u32) -> Result<Self> {
        if p < 1 {
            return Err(parameter("p (data chunks) must be at least 1"));
        }
        if r < 1 {
            return Err(parameter("r (replication factor) must be at least 1"));
        }
        if (p as u64 + q as u64) * r as u64 > u32::MAX as u64 {
            return Err(parameter("(p + q) r overflows"));
        }
        Ok(Self { p, q, r })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Encoded chunks per document, `p + q`.
    pub fn width(&self) -> u32 {
        self.p + self.q
    }

    /// Stored fragments per document, `(p + q) r`.
    pub fn chunks(&self) -> u32 {
        self.width() * self.r
    }

    /// The exponent `r (q + 1)` governing every asymptotic law.
    pub fn loss_order(&self) -> u32 {
        self.r * (self.q + 1)
    }

    /// Flat slot index of chunk `(replica, multiset)`, both 0-based,
    /// replica-major.
    pub fn slot(&self, replica: u32, multiset: u32) -> usize {
        debug_assert!(replica < self.r && multiset < self.width());
        (replica * self.width() + multiset) as usize
    }
}

impl fmt::Display for RecParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "REC({}, {}, {})", self.p, self.width(), self.r)
    }
}

/// Storage-system scale: `nodes` storage nodes holding `docs` documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemParams {
    nodes: u64,
    docs: u64,
}

impl SystemParams {
    pub fn new(nodes: u64, docs: u64) -> Result<Self> {
        if nodes < 1 {
            return Err(parameter("number of nodes must be at least 1"));
        }
        if docs < 1 {
            return Err(parameter("number of documents must be at least 1"));
        }
        Ok(Self { nodes, docs })
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    pub fn docs(&self) -> u64 {
        self.docs
    }
}

/// Rule deciding when a document can no longer be restored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossSemantics {
    /// Lost once at least `q + 1` replication multisets are fully erased.
    Multiset,
    /// Lost once every replica cluster has at least `q + 1` erased chunks.
    PerCluster,
}

impl LossSemantics {
    pub fn name(&self) -> &'static str {
        match self {
            LossSemantics::Multiset => "multiset",
            LossSemantics::PerCluster => "per-cluster",
        }
    }
}

impl fmt::Display for LossSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossSemantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiset" => Ok(LossSemantics::Multiset),
            "per-cluster" | "percluster" | "cluster" => Ok(LossSemantics::PerCluster),
            other => Err(parameter(format!("unknown loss semantics '{other}'"))),
        }
    }
}

/// Placement strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Random,
    Symmetric,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Symmetric => "symmetric",
        }
    }

    /// Loss rule each strategy's closed-form analysis is built on.
    pub fn default_semantics(&self) -> LossSemantics {
        match self {
            Strategy::Random => LossSemantics::Multiset,
            Strategy::Symmetric => LossSemantics::PerCluster,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Strategy::Random),
            "symmetric" => Ok(Strategy::Symmetric),
            other => Err(parameter(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Which condition of the symmetric exact formula fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetricViolation {
    /// `(p + q) r` does not divide `N`.
    Divisibility { group: u64, nodes: u64 },
    /// `D < N / ((p + q) r)`: some node group holds no document.
    TooFewDocs { required: u64, docs: u64 },
}

impl fmt::Display for SymmetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetricViolation::Divisibility { group, nodes } => {
                write!(f, "group size (p+q)r = {group} does not divide N = {nodes}")
            }
            SymmetricViolation::TooFewDocs { required, docs } => {
                write!(f, "D = {docs} is below N/((p+q)r) = {required}")
            }
        }
    }
}

/// Checks that `(p+q) r | N` and `D ≥ N / ((p+q) r)`.
pub fn validate_symmetric_preconditions(
    rec: &RecParams,
    sys: &SystemParams,
) -> std::result::Result<(), SymmetricViolation> {
    let group = rec.chunks() as u64;
    if !sys.nodes().is_multiple_of(group) {
        return Err(SymmetricViolation::Divisibility {
            group,
            nodes: sys.nodes(),
        });
    }
    let required = sys.nodes() / group;
    if sys.docs() < required {
        return Err(SymmetricViolation::TooFewDocs {
            required,
            docs: sys.docs(),
        });
    }
    Ok(())
}

/// Decides whether one document is lost given which of its chunks are erased.
///
/// `erased` is indexed by [`RecParams::slot`] and must cover all
/// `(p + q) r` positions.
pub fn is_document_lost(rec: &RecParams, erased: &[bool], semantics: LossSemantics) -> bool {
    assert_eq!(
        erased.len(),
        rec.chunks() as usize,
        "erased flags must cover every chunk"
    );
    let width = rec.width() as usize;
    let threshold = rec.q() as usize + 1;
    match semantics {
        LossSemantics::Multiset => {
            let gone = (0..width)
                .filter(|&m| erased.iter().skip(m).step_by(width).all(|&e| e))
                .count();
            gone >= threshold
        }
        LossSemantics::PerCluster => erased
            .chunks_exact(width)
            .all(|cluster| cluster.iter().filter(|&&e| e).count() >= threshold),
    }
}

/// Document-to-node assignment for every chunk of every document.
///
/// Documents may use different codes (non-uniform workloads); each
/// document's slots are stored contiguously in replica-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    nodes: u32,
    codes: Vec<RecParams>,
    doc_code: Vec<u32>,
    doc_offset: Vec<usize>,
    slots: Vec<u32>,
}

impl Placement {
    /// Builds a placement from per-document `(code, node table)` pairs.
    pub fn from_tables<I>(nodes: u32, tables: I) -> Result<Self>
    where
        I: IntoIterator<Item = (RecParams, Vec<u32>)>,
    {
        if nodes == 0 {
            return Err(parameter("placement needs at least one node"));
        }
        let mut builder = PlacementBuilder::new(nodes);
        for (rec, table) in tables {
            if table.len() != rec.chunks() as usize {
                return Err(parameter(format!(
                    "document table has {} entries, {rec} needs {}",
                    table.len(),
                    rec.chunks()
                )));
            }
            if let Some(bad) = table.iter().find(|&&n| n >= nodes) {
                return Err(parameter(format!("node id {bad} out of range 0..{nodes}")));
            }
            builder.push_doc(rec, &table);
        }
        builder.finish()
    }

    pub fn nodes(&self) -> u32 {
        self.nodes
    }

    pub fn num_docs(&self) -> usize {
        self.doc_code.len()
    }

    pub fn total_chunks(&self) -> usize {
        self.slots.len()
    }

    pub fn codes(&self) -> &[RecParams] {
        &self.codes
    }

    pub fn rec_of(&self, doc: usize) -> RecParams {
        self.codes[self.doc_code[doc] as usize]
    }

    pub(crate) fn code_index_of(&self, doc: usize) -> usize {
        self.doc_code[doc] as usize
    }

    pub(crate) fn doc_offset(&self, doc: usize) -> usize {
        self.doc_offset[doc]
    }

    /// Node ids of one document's chunks, replica-major.
    pub fn doc_chunks(&self, doc: usize) -> &[u32] {
        let start = self.doc_offset[doc];
        let end = self
            .doc_offset
            .get(doc + 1)
            .copied()
            .unwrap_or(self.slots.len());
        &self.slots[start..end]
    }

    /// Node holding chunk `(replica, multiset)` (0-based) of `doc`.
    pub fn node_of(&self, doc: usize, replica: u32, multiset: u32) -> u32 {
        let rec = self.rec_of(doc);
        self.doc_chunks(doc)[rec.slot(replica, multiset)]
    }

    /// Sub-placement with only the documents of code class `code_index`.
    pub fn restrict_to_code(&self, code_index: usize) -> Result<Self> {
        let mut builder = PlacementBuilder::new(self.nodes);
        for doc in 0..self.num_docs() {
            if self.code_index_of(doc) == code_index {
                builder.push_doc(self.rec_of(doc), self.doc_chunks(doc));
            }
        }
        builder.finish()
    }
}

pub(crate) struct PlacementBuilder {
    nodes: u32,
    codes: Vec<RecParams>,
    doc_code: Vec<u32>,
    doc_offset: Vec<usize>,
    slots: Vec<u32>,
}

impl PlacementBuilder {
    pub(crate) fn new(nodes: u32) -> Self {
        Self {
            nodes,
            codes: Vec::new(),
            doc_code: Vec::new(),
            doc_offset: Vec::new(),
            slots: Vec::new(),
        }
    }

    pub(crate) fn with_capacity(nodes: u32, docs: usize, slots: usize) -> Self {
        Self {
            nodes,
            codes: Vec::new(),
            doc_code: Vec::with_capacity(docs),
            doc_offset: Vec::with_capacity(docs),
            slots: Vec::with_capacity(slots),
        }
    }

    fn code_index(&mut self, rec: RecParams) -> u32 {
        match self.codes.iter().position(|c| *c == rec) {
            Some(i) => i as u32,
            None => {
                self.codes.push(rec);
                (self.codes.len() - 1) as u32
            }
        }
    }

    pub(crate) fn push_doc(&mut self, rec: RecParams, table: &[u32]) {
        let code = self.code_index(rec);
        self.doc_code.push(code);
        self.doc_offset.push(self.slots.len());
        self.slots.extend_from_slice(table);
    }

    pub(crate) fn push_doc_with(&mut self, rec: RecParams, mut node: impl FnMut() -> u32) {
        let code = self.code_index(rec);
        self.doc_code.push(code);
        self.doc_offset.push(self.slots.len());
        for _ in 0..rec.chunks() {
            self.slots.push(node());
        }
    }

    pub(crate) fn finish(self) -> Result<Placement> {
        if self.doc_code.is_empty() {
            return Err(parameter("placement must hold at least one document"));
        }
        Ok(Placement {
            nodes: self.nodes,
            codes: self.codes,
            doc_code: self.doc_code,
            doc_offset: self.doc_offset,
            slots: self.slots,
        })
    }
}

/// Order in which nodes leave the system: a permutation of `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalOrder(Vec<u32>);

impl RemovalOrder {
    pub fn new(order: Vec<u32>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &v in &order {
            let v = v as usize;
            if v >= n || seen[v] {
                return Err(parameter("removal order must be a permutation of 0..N"));
            }
            seen[v] = true;
        }
        Ok(Self(order))
    }

    pub(crate) fn new_unchecked(order: Vec<u32>) -> Self {
        Self(order)
    }

    /// Identity order `0, 1, …, N−1`.
    pub fn identity(nodes: u32) -> Self {
        Self((0..nodes).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

/// Number of node removals at which the first document became unrecoverable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Persistency(pub u32);

impl Persistency {
    pub fn get(self) -> u32 {
        self.0
    }
}
