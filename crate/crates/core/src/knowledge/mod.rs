//! Tree-structured categorical Bayesian networks.
//!
//! A [`TreeNet`] is a rooted tree of discrete nodes. The root carries a prior
//! and every other node a conditional probability table indexed by its
//! parent's category. Inference is exact and runs in two passes (likelihood
//! messages up, prior messages down), see [`TreeNet::posterior`].
//!
//! Networks load from JSON documents of the form
//!
//! ```json
//! {"nodes": [
//!   {"id": "L", "cardinality": 2, "prior": [0.5, 0.5]},
//!   {"id": "Z", "cardinality": 2, "parent": "L", "cpt": [[0.9, 0.1], [0.1, 0.9]]}
//! ]}
//! ```
//!
//! where `cpt` lists one row per parent category (parent-category-major).

mod dist;
mod infer;

pub use dist::{entropy, entropy_bits, normalize_in_place, Dist, PROB_FLOOR};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Tolerance used when checking that rows sum to one.
pub const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("invalid network: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("soft evidence on `{node}` has length {got}, expected {expected}")]
    SoftLength { node: String, expected: usize, got: usize },
    #[error("soft evidence on `{0}` must be non-negative and not all zero")]
    SoftValues(String),
    #[error("hard evidence on `{node}` selects category {category} of {cardinality}")]
    HardOutOfRange {
        node: String,
        category: usize,
        cardinality: usize,
    },
    #[error("malformed network document: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// One node as written in a network document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub cardinality: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpt: Option<Vec<Vec<f64>>>,
}

impl NodeSpec {
    pub fn root(id: &str, prior: Vec<f64>) -> Self {
        NodeSpec {
            id: id.to_string(),
            cardinality: prior.len(),
            parent: None,
            prior: Some(prior),
            cpt: None,
        }
    }

    pub fn child(id: &str, parent: &str, cpt: Vec<Vec<f64>>) -> Self {
        NodeSpec {
            id: id.to_string(),
            cardinality: cpt.first().map_or(0, |r| r.len()),
            parent: Some(parent.to_string()),
            prior: None,
            cpt: Some(cpt),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    DuplicateId,
    Cardinality,
    UnknownParent(String),
    Cycle,
    NoRoot,
    MultipleRoots(usize),
    MissingPrior,
    MissingCpt,
    UnexpectedPrior,
    UnexpectedCpt,
    PriorLength,
    CptRows { expected: usize, got: usize },
    CptRowLength { row: usize },
    Negative,
    UnnormalizedPrior,
    UnnormalizedCpt { row: usize },
}

/// A structural problem found by [`validate`]. Network-level problems
/// (no root, several roots) carry no node id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub node: Option<String>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ViolationKind::*;
        let what = match &self.kind {
            DuplicateId => "duplicate id".to_string(),
            Cardinality => "cardinality below 2".to_string(),
            UnknownParent(p) => format!("unknown parent `{p}`"),
            Cycle => "cycle".to_string(),
            NoRoot => "no root".to_string(),
            MultipleRoots(n) => format!("{n} roots"),
            MissingPrior => "root without prior".to_string(),
            MissingCpt => "missing CPT".to_string(),
            UnexpectedPrior => "prior on non-root".to_string(),
            UnexpectedCpt => "CPT on root".to_string(),
            PriorLength => "prior length differs from cardinality".to_string(),
            CptRows { expected, got } => format!("CPT has {got} rows, parent has {expected} categories"),
            CptRowLength { row } => format!("CPT row {row} length differs from cardinality"),
            Negative => "negative probability".to_string(),
            UnnormalizedPrior => "unnormalized prior".to_string(),
            UnnormalizedCpt { row } => format!("unnormalized CPT (row {row})"),
        };
        match &self.node {
            Some(id) => write!(f, "{id}: {what}"),
            None => write!(f, "{what}"),
        }
    }
}

/// Checks every structural invariant of a node list. Returns an empty list
/// for a valid tree; otherwise violations sorted by node id.
pub fn validate(specs: &[NodeSpec]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |node: Option<&str>, kind| {
        out.push(Violation {
            node: node.map(str::to_string),
            kind,
        })
    };

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, s) in specs.iter().enumerate() {
        if index.insert(s.id.as_str(), i).is_some() {
            push(Some(&s.id), ViolationKind::DuplicateId);
        }
    }

    let mut roots = 0;
    for s in specs {
        let id = Some(s.id.as_str());
        if s.cardinality < 2 {
            push(id, ViolationKind::Cardinality);
        }
        match &s.parent {
            None => {
                roots += 1;
                if s.cpt.is_some() {
                    push(id, ViolationKind::UnexpectedCpt);
                }
                match &s.prior {
                    None => push(id, ViolationKind::MissingPrior),
                    Some(p) => {
                        if p.len() != s.cardinality {
                            push(id, ViolationKind::PriorLength);
                        }
                        if p.iter().any(|&x| !(x >= 0.0)) {
                            push(id, ViolationKind::Negative);
                        } else if (p.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE {
                            push(id, ViolationKind::UnnormalizedPrior);
                        }
                    }
                }
            }
            Some(parent) => {
                if s.prior.is_some() {
                    push(id, ViolationKind::UnexpectedPrior);
                }
                let parent_card = match index.get(parent.as_str()) {
                    Some(&pi) => Some(specs[pi].cardinality),
                    None => {
                        push(id, ViolationKind::UnknownParent(parent.clone()));
                        None
                    }
                };
                match &s.cpt {
                    None => push(id, ViolationKind::MissingCpt),
                    Some(rows) => {
                        if let Some(pc) = parent_card {
                            if rows.len() != pc {
                                push(
                                    id,
                                    ViolationKind::CptRows {
                                        expected: pc,
                                        got: rows.len(),
                                    },
                                );
                            }
                        }
                        let mut negative = false;
                        for (r, row) in rows.iter().enumerate() {
                            if row.len() != s.cardinality {
                                push(id, ViolationKind::CptRowLength { row: r });
                            }
                            if row.iter().any(|&x| !(x >= 0.0)) {
                                negative = true;
                            } else if (row.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE {
                                push(id, ViolationKind::UnnormalizedCpt { row: r });
                            }
                        }
                        if negative {
                            push(id, ViolationKind::Negative);
                        }
                    }
                }
            }
        }
    }

    // Walk each parent chain; revisiting the start node means it sits on a cycle.
    for (start, s) in specs.iter().enumerate() {
        let mut cur = s.parent.as_deref().and_then(|p| index.get(p).copied());
        let mut steps = 0;
        while let Some(c) = cur {
            if c == start {
                push(Some(&s.id), ViolationKind::Cycle);
                break;
            }
            steps += 1;
            if steps > specs.len() {
                break;
            }
            cur = specs[c].parent.as_deref().and_then(|p| index.get(p).copied());
        }
    }

    if !specs.is_empty() {
        match roots {
            0 => push(None, ViolationKind::NoRoot),
            1 => {}
            n => push(None, ViolationKind::MultipleRoots(n)),
        }
    } else {
        push(None, ViolationKind::NoRoot);
    }

    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Node {
    pub(crate) id: String,
    pub(crate) card: usize,
    pub(crate) parent: Option<usize>,
    pub(crate) children: Vec<usize>,
    /// Row-major table: one row per parent category, or a single prior row
    /// for the root.
    pub(crate) table: Vec<f64>,
}

impl Node {
    #[inline]
    pub(crate) fn row(&self, parent_cat: usize) -> &[f64] {
        &self.table[parent_cat * self.card..(parent_cat + 1) * self.card]
    }
}

/// A validated tree-structured network. Immutable once built; inference
/// methods take `&self` and can run from many threads.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeNet {
    pub(crate) nodes: Vec<Node>,
    /// Root first, every parent before its children.
    pub(crate) order: Vec<usize>,
    pub(crate) root: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct NetDocument {
    nodes: Vec<NodeSpec>,
}

/// Observation attached to one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finding {
    /// The node was observed in this category.
    Hard(usize),
    /// Likelihood vector over the node's categories (virtual evidence).
    Soft(Vec<f64>),
}

impl Finding {
    /// Multiplies the finding's likelihood into `lambda`.
    pub fn apply(&self, lambda: &mut [f64]) {
        match self {
            Finding::Hard(k) => {
                for (i, x) in lambda.iter_mut().enumerate() {
                    if i != *k {
                        *x = 0.0;
                    }
                }
            }
            Finding::Soft(v) => {
                for (x, l) in lambda.iter_mut().zip(v) {
                    *x *= l;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub node: String,
    pub finding: Finding,
}

impl Evidence {
    pub fn hard(node: &str, category: usize) -> Self {
        Evidence {
            node: node.to_string(),
            finding: Finding::Hard(category),
        }
    }

    pub fn soft(node: &str, likelihood: Vec<f64>) -> Self {
        Evidence {
            node: node.to_string(),
            finding: Finding::Soft(likelihood),
        }
    }
}

impl TreeNet {
    pub fn new(specs: Vec<NodeSpec>) -> Result<Self, KnowledgeError> {
        let violations = validate(&specs);
        if !violations.is_empty() {
            return Err(KnowledgeError::Invalid(violations));
        }
        let index: HashMap<String, usize> = specs.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
        let mut nodes: Vec<Node> = specs
            .iter()
            .map(|s| Node {
                id: s.id.clone(),
                card: s.cardinality,
                parent: s.parent.as_ref().map(|p| index[p]),
                children: Vec::new(),
                table: match (&s.prior, &s.cpt) {
                    (Some(p), _) => p.clone(),
                    (None, Some(rows)) => rows.iter().flatten().copied().collect(),
                    (None, None) => unreachable!("validated"),
                },
            })
            .collect();
        for i in 0..nodes.len() {
            if let Some(p) = nodes[i].parent {
                nodes[p].children.push(i);
            }
        }
        let root = nodes.iter().position(|n| n.parent.is_none()).unwrap();
        let mut order = Vec::with_capacity(nodes.len());
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let n = order[head];
            order.extend(nodes[n].children.iter().copied());
            head += 1;
        }
        Ok(TreeNet {
            nodes,
            order,
            root,
            index,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, KnowledgeError> {
        let doc: NetDocument = serde_json::from_str(text)?;
        TreeNet::new(doc.nodes)
    }

    pub fn to_specs(&self) -> Vec<NodeSpec> {
        self.nodes
            .iter()
            .map(|n| match n.parent {
                None => NodeSpec {
                    id: n.id.clone(),
                    cardinality: n.card,
                    parent: None,
                    prior: Some(n.table.clone()),
                    cpt: None,
                },
                Some(p) => NodeSpec {
                    id: n.id.clone(),
                    cardinality: n.card,
                    parent: Some(self.nodes[p].id.clone()),
                    prior: None,
                    cpt: Some(n.table.chunks(n.card).map(<[f64]>::to_vec).collect()),
                },
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetDocument { nodes: self.to_specs() }).expect("network serializes")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ix(&self, id: &str) -> Result<usize, KnowledgeError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| KnowledgeError::UnknownNode(id.to_string()))
    }

    pub fn id(&self, ix: usize) -> &str {
        &self.nodes[ix].id
    }

    pub fn cardinality(&self, ix: usize) -> usize {
        self.nodes[ix].card
    }

    pub fn parent(&self, ix: usize) -> Option<usize> {
        self.nodes[ix].parent
    }

    pub fn children(&self, ix: usize) -> &[usize] {
        &self.nodes[ix].children
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Root prior, or the CPT row for `parent_cat` of a non-root node.
    pub fn row(&self, ix: usize, parent_cat: usize) -> &[f64] {
        self.nodes[ix].row(parent_cat)
    }

    pub fn prior(&self) -> &[f64] {
        &self.nodes[self.root].table
    }

    /// Copy of the network with the root prior replaced.
    pub fn with_root_prior(&self, prior: &[f64]) -> TreeNet {
        assert_eq!(prior.len(), self.nodes[self.root].card);
        let mut net = self.clone();
        net.nodes[self.root].table.copy_from_slice(prior);
        net
    }

    /// Checks evidence against the network and resolves node ids.
    pub fn resolve<'a>(&self, evidence: &'a [Evidence]) -> Result<Vec<(usize, &'a Finding)>, KnowledgeError> {
        evidence
            .iter()
            .map(|e| {
                let ix = self.node_ix(&e.node)?;
                let card = self.nodes[ix].card;
                match &e.finding {
                    Finding::Hard(k) if *k >= card => {
                        return Err(KnowledgeError::HardOutOfRange {
                            node: e.node.clone(),
                            category: *k,
                            cardinality: card,
                        })
                    }
                    Finding::Soft(v) if v.len() != card => {
                        return Err(KnowledgeError::SoftLength {
                            node: e.node.clone(),
                            expected: card,
                            got: v.len(),
                        })
                    }
                    Finding::Soft(v) if v.iter().any(|&x| !(x >= 0.0)) || v.iter().all(|&x| x == 0.0) => {
                        return Err(KnowledgeError::SoftValues(e.node.clone()))
                    }
                    _ => {}
                }
                Ok((ix, &e.finding))
            })
            .collect()
    }

    /// Exact posterior of `query` given `evidence`.
    pub fn posterior(&self, query: &str, evidence: &[Evidence]) -> Result<Dist, KnowledgeError> {
        let q = self.node_ix(query)?;
        let ev = self.resolve(evidence)?;
        Ok(self.posterior_ix(q, &ev))
    }

    /// Posteriors of every node, indexed like the network's nodes.
    pub fn posteriors(&self, evidence: &[Evidence]) -> Result<Vec<Dist>, KnowledgeError> {
        let ev = self.resolve(evidence)?;
        Ok(self.beliefs(&ev))
    }

    pub fn posterior_ix(&self, query: usize, evidence: &[(usize, &Finding)]) -> Dist {
        self.beliefs(evidence).swap_remove(query)
    }

    /// Prior marginal of a node.
    pub fn marginal(&self, id: &str) -> Result<Dist, KnowledgeError> {
        self.posterior(id, &[])
    }

    /// Folds `evidence` into the network: the root prior becomes the root
    /// posterior and each CPT row is reweighted by its subtree likelihood.
    /// Querying the result with new evidence equals querying `self` with the
    /// concatenated evidence. Findings on one node all constrain the same
    /// variable; independent repeated readings belong on separate nodes.
    pub fn absorb(&self, evidence: &[Evidence]) -> Result<TreeNet, KnowledgeError> {
        let ev = self.resolve(evidence)?;
        Ok(self.absorb_ix(&ev))
    }
}
