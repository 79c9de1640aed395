//! Binary CART structure: routing, prediction, splitting, metrics, and the
//! canonical text serialization.
//!
//! Numeric tests send `x <= t` left; nominal tests send values inside the
//! subset left. Fresh leaves start empty (statistics are not inherited from
//! the parent) and leaf ids are allocated monotonically, never reused.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::schema::{AttrValue, AttributeKind, Instance, Schema};

/// Stable leaf identifier; survives serialization and is never reused after
/// a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeafId(pub u64);

impl fmt::Display for LeafId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("instance does not match the tree schema: {0}")]
    SchemaMismatch(String),
    #[error("unknown leaf {0}")]
    UnknownLeaf(LeafId),
    #[error("node for leaf {0} is not a leaf")]
    NotALeaf(LeafId),
    #[error("invalid split test: {0}")]
    InvalidTest(String),
    #[error("tree text line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// The two test kinds: a numeric threshold or a nominal domain subset
/// (sorted, duplicate-free).
#[derive(Debug, Clone, PartialEq)]
pub enum SplitKind {
    Threshold(f64),
    Subset(Vec<usize>),
}

/// A binary test on one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTest {
    pub attribute: usize,
    pub kind: SplitKind,
}

impl SplitTest {
    pub fn threshold(attribute: usize, t: f64) -> Self {
        SplitTest {
            attribute,
            kind: SplitKind::Threshold(t),
        }
    }

    pub fn subset(attribute: usize, mut values: Vec<usize>) -> Self {
        values.sort_unstable();
        values.dedup();
        SplitTest {
            attribute,
            kind: SplitKind::Subset(values),
        }
    }

    /// Numeric tests must target numeric attributes; subsets must be
    /// nonempty proper subsets of a nominal domain.
    pub fn validate(&self, schema: &Schema) -> Result<(), TreeError> {
        let attr = schema
            .attributes()
            .get(self.attribute)
            .ok_or_else(|| TreeError::InvalidTest(format!("attribute {} out of range", self.attribute)))?;
        match (&self.kind, &attr.kind) {
            (SplitKind::Threshold(t), AttributeKind::Numeric) => {
                if !t.is_finite() {
                    return Err(TreeError::InvalidTest(format!("threshold {t} not finite")));
                }
                Ok(())
            }
            (SplitKind::Subset(values), AttributeKind::Nominal { domain }) => {
                if values.is_empty() || values.len() >= domain.len() {
                    return Err(TreeError::InvalidTest(
                        "subset must be a nonempty proper subset of the domain".into(),
                    ));
                }
                if values.iter().any(|&v| v >= domain.len()) {
                    return Err(TreeError::InvalidTest("subset value outside domain".into()));
                }
                Ok(())
            }
            _ => Err(TreeError::InvalidTest(format!(
                "test kind does not match attribute `{}`",
                attr.name
            ))),
        }
    }

    fn goes_left(&self, value: &AttrValue) -> Result<bool, TreeError> {
        match (&self.kind, value) {
            (SplitKind::Threshold(t), AttrValue::Numeric(x)) => Ok(x <= t),
            (SplitKind::Subset(values), AttrValue::Nominal(v)) => {
                Ok(values.binary_search(v).is_ok())
            }
            _ => Err(TreeError::SchemaMismatch(
                "value kind does not match split test".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Internal {
        test: SplitTest,
        left: usize,
        right: usize,
    },
    Leaf {
        id: LeafId,
        majority: usize,
        seen: u64,
    },
}

/// Tree size summary: depth counts nodes along the longest root-to-leaf
/// path, so a lone leaf has depth 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeMetrics {
    pub depth: usize,
    pub node_count: usize,
    pub leaf_count: usize,
}

/// Binary decision tree over a shared schema. Snapshots are immutable while
/// mappers hold them; only the controller produces new versions between
/// rounds.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    schema: Arc<Schema>,
    nodes: Vec<Node>,
    root: usize,
    leaves: BTreeMap<LeafId, usize>,
    next_leaf: u64,
}

impl DecisionTree {
    /// A single-leaf tree (leaf id 0, majority class 0, nothing seen).
    pub fn new(schema: Arc<Schema>) -> Self {
        let mut leaves = BTreeMap::new();
        leaves.insert(LeafId(0), 0);
        DecisionTree {
            schema,
            nodes: vec![Node::Leaf {
                id: LeafId(0),
                majority: 0,
                seen: 0,
            }],
            root: 0,
            leaves,
            next_leaf: 1,
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    /// Leaf ids in ascending order.
    pub fn leaf_ids(&self) -> impl Iterator<Item = LeafId> + '_ {
        self.leaves.keys().copied()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Routes an instance to its leaf. The numeric boundary `x == t` goes
    /// left.
    pub fn route(&self, inst: &Instance) -> Result<LeafId, TreeError> {
        if inst.values.len() != self.schema.attribute_count() {
            return Err(TreeError::SchemaMismatch(format!(
                "expected {} values, got {}",
                self.schema.attribute_count(),
                inst.values.len()
            )));
        }
        let mut idx = self.root;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { id, .. } => return Ok(*id),
                Node::Internal { test, left, right } => {
                    idx = if test.goes_left(&inst.values[test.attribute])? {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Majority class of the routed leaf; an empty leaf predicts class 0 and
    /// ties break toward the lowest class index.
    pub fn predict(&self, inst: &Instance) -> Result<usize, TreeError> {
        let leaf = self.route(inst)?;
        Ok(self.leaf_majority(leaf).expect("routed leaf exists"))
    }

    pub fn leaf_majority(&self, leaf: LeafId) -> Option<usize> {
        self.leaves.get(&leaf).map(|&idx| match &self.nodes[idx] {
            Node::Leaf { majority, .. } => *majority,
            Node::Internal { .. } => unreachable!("leaf map points at a leaf"),
        })
    }

    pub fn leaf_seen(&self, leaf: LeafId) -> Option<u64> {
        self.leaves.get(&leaf).map(|&idx| match &self.nodes[idx] {
            Node::Leaf { seen, .. } => *seen,
            Node::Internal { .. } => unreachable!("leaf map points at a leaf"),
        })
    }

    /// Refreshes a leaf's prediction summary from merged statistics.
    pub fn set_leaf_summary(
        &mut self,
        leaf: LeafId,
        majority: usize,
        seen: u64,
    ) -> Result<(), TreeError> {
        let idx = *self.leaves.get(&leaf).ok_or(TreeError::UnknownLeaf(leaf))?;
        match &mut self.nodes[idx] {
            Node::Leaf {
                majority: m,
                seen: s,
                ..
            } => {
                *m = majority;
                *s = seen;
                Ok(())
            }
            Node::Internal { .. } => Err(TreeError::NotALeaf(leaf)),
        }
    }

    /// Replaces a leaf with an internal node over two fresh empty leaves,
    /// returning the new `(left, right)` leaf ids.
    pub fn apply_split(
        &mut self,
        leaf: LeafId,
        test: SplitTest,
    ) -> Result<(LeafId, LeafId), TreeError> {
        test.validate(&self.schema)?;
        let idx = *self.leaves.get(&leaf).ok_or(TreeError::UnknownLeaf(leaf))?;
        if !matches!(self.nodes[idx], Node::Leaf { .. }) {
            return Err(TreeError::NotALeaf(leaf));
        }
        let left_id = LeafId(self.next_leaf);
        let right_id = LeafId(self.next_leaf + 1);
        self.next_leaf += 2;
        let left = self.nodes.len();
        self.nodes.push(Node::Leaf {
            id: left_id,
            majority: 0,
            seen: 0,
        });
        let right = self.nodes.len();
        self.nodes.push(Node::Leaf {
            id: right_id,
            majority: 0,
            seen: 0,
        });
        self.nodes[idx] = Node::Internal { test, left, right };
        self.leaves.remove(&leaf);
        self.leaves.insert(left_id, left);
        self.leaves.insert(right_id, right);
        Ok((left_id, right_id))
    }

    pub fn metrics(&self) -> TreeMetrics {
        fn walk(nodes: &[Node], idx: usize, depth: usize, m: &mut TreeMetrics) {
            m.node_count += 1;
            match &nodes[idx] {
                Node::Leaf { .. } => {
                    m.leaf_count += 1;
                    m.depth = m.depth.max(depth);
                }
                Node::Internal { left, right, .. } => {
                    walk(nodes, *left, depth + 1, m);
                    walk(nodes, *right, depth + 1, m);
                }
            }
        }
        let mut m = TreeMetrics {
            depth: 0,
            node_count: 0,
            leaf_count: 0,
        };
        walk(&self.nodes, self.root, 1, &mut m);
        m
    }

    /// Canonical pre-order text form, one node per line:
    /// `I <attr> <=<t>` / `I <attr> in{v1,v2}` / `L <leaf_id> c=<class> n=<seen>`.
    pub fn serialize(&self) -> String {
        fn walk(nodes: &[Node], idx: usize, out: &mut String) {
            match &nodes[idx] {
                Node::Leaf { id, majority, seen } => {
                    out.push_str(&format!("L {id} c={majority} n={seen}\n"));
                }
                Node::Internal { test, left, right } => {
                    match &test.kind {
                        SplitKind::Threshold(t) => {
                            out.push_str(&format!("I {} <={}\n", test.attribute, t));
                        }
                        SplitKind::Subset(values) => {
                            let list: Vec<String> =
                                values.iter().map(|v| v.to_string()).collect();
                            out.push_str(&format!("I {} in{{{}}}\n", test.attribute, list.join(",")));
                        }
                    }
                    walk(nodes, *left, out);
                    walk(nodes, *right, out);
                }
            }
        }
        let mut out = String::new();
        walk(&self.nodes, self.root, &mut out);
        out
    }

    /// Parses the canonical text form back into a tree over `schema`.
    pub fn parse(text: &str, schema: Arc<Schema>) -> Result<Self, TreeError> {
        struct Parser<'a> {
            lines: Vec<(usize, &'a str)>,
            pos: usize,
        }

        impl<'a> Parser<'a> {
            fn next_line(&mut self) -> Result<(usize, &'a str), TreeError> {
                let item = self.lines.get(self.pos).copied().ok_or(TreeError::Parse {
                    line: self.lines.last().map_or(1, |(n, _)| n + 1),
                    msg: "unexpected end of tree text".into(),
                })?;
                self.pos += 1;
                Ok(item)
            }
        }

        fn parse_node(
            p: &mut Parser,
            schema: &Schema,
            nodes: &mut Vec<Node>,
            leaves: &mut BTreeMap<LeafId, usize>,
        ) -> Result<usize, TreeError> {
            let (lineno, line) = p.next_line()?;
            let bad = |msg: String| TreeError::Parse { line: lineno, msg };
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("L") => {
                    let id: u64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("expected leaf id".into()))?;
                    let majority: usize = parts
                        .next()
                        .and_then(|s| s.strip_prefix("c="))
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("expected c=<class>".into()))?;
                    let seen: u64 = parts
                        .next()
                        .and_then(|s| s.strip_prefix("n="))
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("expected n=<seen>".into()))?;
                    if majority >= schema.class_count() {
                        return Err(bad(format!("class {majority} out of range")));
                    }
                    let id = LeafId(id);
                    let idx = nodes.len();
                    nodes.push(Node::Leaf {
                        id,
                        majority,
                        seen,
                    });
                    if leaves.insert(id, idx).is_some() {
                        return Err(bad(format!("duplicate leaf id {id}")));
                    }
                    Ok(idx)
                }
                Some("I") => {
                    let attribute: usize = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("expected attribute index".into()))?;
                    let test_text = parts
                        .next()
                        .ok_or_else(|| bad("expected test".into()))?;
                    let test = if let Some(t) = test_text.strip_prefix("<=") {
                        let t: f64 = t.parse().map_err(|_| bad(format!("bad threshold `{t}`")))?;
                        SplitTest::threshold(attribute, t)
                    } else if let Some(body) = test_text
                        .strip_prefix("in{")
                        .and_then(|s| s.strip_suffix('}'))
                    {
                        let mut values = Vec::new();
                        for v in body.split(',').filter(|v| !v.is_empty()) {
                            values.push(
                                v.parse()
                                    .map_err(|_| bad(format!("bad subset value `{v}`")))?,
                            );
                        }
                        SplitTest::subset(attribute, values)
                    } else {
                        return Err(bad(format!("unrecognized test `{test_text}`")));
                    };
                    test.validate(schema)
                        .map_err(|e| bad(e.to_string()))?;
                    let idx = nodes.len();
                    // Children indices get patched after the subtrees parse.
                    nodes.push(Node::Internal {
                        test,
                        left: usize::MAX,
                        right: usize::MAX,
                    });
                    let left = parse_node(p, schema, nodes, leaves)?;
                    let right = parse_node(p, schema, nodes, leaves)?;
                    match &mut nodes[idx] {
                        Node::Internal {
                            left: l, right: r, ..
                        } => {
                            *l = left;
                            *r = right;
                        }
                        Node::Leaf { .. } => unreachable!(),
                    }
                    Ok(idx)
                }
                other => Err(bad(format!("expected `I` or `L`, got {other:?}"))),
            }
        }

        let mut parser = Parser {
            lines: text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty())
                .collect(),
            pos: 0,
        };
        if parser.lines.is_empty() {
            return Err(TreeError::Parse {
                line: 1,
                msg: "empty tree text".into(),
            });
        }
        let mut nodes = Vec::new();
        let mut leaves = BTreeMap::new();
        let root = parse_node(&mut parser, &schema, &mut nodes, &mut leaves)?;
        if parser.pos != parser.lines.len() {
            let (line, _) = parser.lines[parser.pos];
            return Err(TreeError::Parse {
                line,
                msg: "trailing content after the tree".into(),
            });
        }
        let next_leaf = leaves.keys().map(|id| id.0).max().unwrap_or(0) + 1;
        Ok(DecisionTree {
            schema,
            nodes,
            root,
            leaves,
            next_leaf,
        })
    }

    /// Structural equality: identical shape, identical tests (exact threshold
    /// equality, identical subsets), identical majority classes. Leaf ids and
    /// seen counts are not compared.
    pub fn tree_equal(&self, other: &DecisionTree) -> bool {
        fn eq(a: &DecisionTree, ai: usize, b: &DecisionTree, bi: usize) -> bool {
            match (&a.nodes[ai], &b.nodes[bi]) {
                (
                    Node::Leaf { majority: ma, .. },
                    Node::Leaf { majority: mb, .. },
                ) => ma == mb,
                (
                    Node::Internal {
                        test: ta,
                        left: la,
                        right: ra,
                    },
                    Node::Internal {
                        test: tb,
                        left: lb,
                        right: rb,
                    },
                ) => ta == tb && eq(a, *la, b, *lb) && eq(a, *ra, b, *rb),
                _ => false,
            }
        }
        eq(self, self.root, other, other.root)
    }
}
