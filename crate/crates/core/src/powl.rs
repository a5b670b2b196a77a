//! The POWL model algebra.
//!
//! A model is a tree of [`PowlNode`]s. Leaves are activities or silent steps;
//! inner nodes are exclusive choices, redo loops, and partial orders over
//! sibling submodels. Children of a partial order that are not related by the
//! order run concurrently.
//!
//! Values are immutable once built. The `make_*` constructors enforce every
//! structural invariant and store partial orders in transitively reduced
//! form, so derived equality is structural equality of models.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest accepted activity label, in characters.
pub const MAX_LABEL_CHARS: usize = 120;

/// Upper bound on the number of nodes in a single model.
pub const MAX_MODEL_NODES: usize = 500;

/// An edge `(from, to)` between child positions of a partial order.
pub type Edge = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PowlError {
    #[error("invalid label {label:?}: {reason}")]
    InvalidLabel { label: String, reason: &'static str },
    #[error("{operator} needs at least {min} children, got {got}")]
    Arity {
        operator: &'static str,
        min: usize,
        got: usize,
    },
    #[error("order edge ({from}, {to}) is invalid: {reason}")]
    BadEdge {
        from: usize,
        to: usize,
        reason: String,
    },
    #[error("order edges form a cycle through edge ({from}, {to})")]
    CyclicOrder { from: usize, to: usize },
    #[error("model has {nodes} nodes, the limit is {MAX_MODEL_NODES}")]
    TooLarge { nodes: usize },
}

/// A trimmed, non-empty activity name without control characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Label(String);

impl Label {
    pub fn new(text: &str) -> Result<Self, PowlError> {
        let trimmed = text.trim();
        let reason = if trimmed.is_empty() {
            Some("label is empty")
        } else if trimmed.chars().count() > MAX_LABEL_CHARS {
            Some("label is longer than 120 characters")
        } else if trimmed.chars().any(char::is_control) {
            Some("label contains control characters")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(PowlError::InvalidLabel {
                label: text.to_string(),
                reason,
            }),
            None => Ok(Label(trimmed.to_string())),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Label {
    type Error = PowlError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Label::new(&value)
    }
}

impl From<Label> for String {
    fn from(value: Label) -> Self {
        value.0
    }
}

/// One node of a POWL model.
///
/// Variants are public so that documents and tests can describe arbitrary
/// trees; use [`validate`] on anything not produced by the `make_*`
/// constructors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PowlNode {
    Activity {
        label: Label,
    },
    Silent,
    Xor {
        children: Vec<PowlNode>,
    },
    /// Runs `body`, then any number of `redo` followed by `body` again.
    Loop {
        #[serde(rename = "do")]
        body: Box<PowlNode>,
        redo: Box<PowlNode>,
    },
    PartialOrder {
        children: Vec<PowlNode>,
        order: BTreeSet<Edge>,
    },
}

impl PowlNode {
    pub fn node_count(&self) -> usize {
        1 + self.children().map(PowlNode::node_count).sum::<usize>()
    }

    /// Direct submodels in positional order.
    pub fn children(&self) -> Box<dyn Iterator<Item = &PowlNode> + '_> {
        match self {
            PowlNode::Activity { .. } | PowlNode::Silent => Box::new(std::iter::empty()),
            PowlNode::Xor { children } | PowlNode::PartialOrder { children, .. } => {
                Box::new(children.iter())
            }
            PowlNode::Loop { body, redo } => {
                Box::new([body.as_ref(), redo.as_ref()].into_iter())
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, PowlNode::Activity { .. } | PowlNode::Silent)
    }

    /// Pre-order search for a node satisfying `pred`.
    pub fn any(&self, pred: &dyn Fn(&PowlNode) -> bool) -> bool {
        pred(self) || self.children().any(|c| c.any(pred))
    }
}

pub fn make_activity(label: &str) -> Result<PowlNode, PowlError> {
    Ok(PowlNode::Activity {
        label: Label::new(label)?,
    })
}

pub fn make_silent() -> PowlNode {
    PowlNode::Silent
}

pub fn make_xor(children: Vec<PowlNode>) -> Result<PowlNode, PowlError> {
    if children.len() < 2 {
        return Err(PowlError::Arity {
            operator: "xor",
            min: 2,
            got: children.len(),
        });
    }
    check_size(1 + children.iter().map(PowlNode::node_count).sum::<usize>())?;
    Ok(PowlNode::Xor { children })
}

pub fn make_loop(body: PowlNode, redo: PowlNode) -> Result<PowlNode, PowlError> {
    check_size(1 + body.node_count() + redo.node_count())?;
    Ok(PowlNode::Loop {
        body: Box::new(body),
        redo: Box::new(redo),
    })
}

/// Builds a partial order. `order` may contain duplicate or implied edges;
/// it is stored as its transitive reduction.
pub fn make_partial_order(
    children: Vec<PowlNode>,
    order: impl IntoIterator<Item = Edge>,
) -> Result<PowlNode, PowlError> {
    if children.is_empty() {
        return Err(PowlError::Arity {
            operator: "partial_order",
            min: 1,
            got: 0,
        });
    }
    let n = children.len();
    let order: BTreeSet<Edge> = order.into_iter().collect();
    for &(from, to) in &order {
        check_edge(from, to, n)?;
    }
    let reduced = transitive_reduction(&order, n)?;
    check_size(1 + children.iter().map(PowlNode::node_count).sum::<usize>())?;
    Ok(PowlNode::PartialOrder {
        children,
        order: reduced,
    })
}

fn check_size(nodes: usize) -> Result<(), PowlError> {
    if nodes > MAX_MODEL_NODES {
        Err(PowlError::TooLarge { nodes })
    } else {
        Ok(())
    }
}

fn check_edge(from: usize, to: usize, n: usize) -> Result<(), PowlError> {
    let reason = if from >= n || to >= n {
        format!("index out of range for {n} children")
    } else if from == to {
        "a child cannot precede itself".to_string()
    } else {
        return Ok(());
    };
    Err(PowlError::BadEdge { from, to, reason })
}

fn reachability(edges: &BTreeSet<Edge>, n: usize) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    // Floyd-Warshall style closure; n is a sibling count, always small.
    for k in 0..n {
        for i in 0..n {
            if i != k && reach[i][k] {
                let (src, dst) = if i < k {
                    let (lo, hi) = reach.split_at_mut(k);
                    (&hi[0], &mut lo[i])
                } else {
                    let (lo, hi) = reach.split_at_mut(i);
                    (&lo[k], &mut hi[0])
                };
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d |= s;
                }
            }
        }
    }
    reach
}

/// Smallest transitive relation containing `edges`. Indices must be `< n`.
pub fn transitive_closure(edges: &BTreeSet<Edge>, n: usize) -> BTreeSet<Edge> {
    let reach = reachability(edges, n);
    let mut out = BTreeSet::new();
    for (i, row) in reach.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if r {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Unique minimal edge set with the same closure as `edges`.
pub fn transitive_reduction(edges: &BTreeSet<Edge>, n: usize) -> Result<BTreeSet<Edge>, PowlError> {
    let reach = reachability(edges, n);
    // Report the first input edge that lies on a cycle.
    if let Some(&(from, to)) = edges.iter().find(|&&(a, b)| a == b || reach[b][a]) {
        return Err(PowlError::CyclicOrder { from, to });
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if reach[i][j] && !(0..n).any(|k| reach[i][k] && reach[k][j]) {
                out.insert((i, j));
            }
        }
    }
    Ok(out)
}

/// A broken invariant, located by a tree path such as `root.2.0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks every structural invariant recursively. An empty list means the
/// model is valid.
pub fn validate(root: &PowlNode) -> Vec<Violation> {
    let mut out = Vec::new();
    let nodes = root.node_count();
    if nodes > MAX_MODEL_NODES {
        out.push(Violation {
            path: "root".into(),
            message: format!("model has {nodes} nodes, the limit is {MAX_MODEL_NODES}"),
        });
    }
    validate_at(root, "root".to_string(), &mut out);
    out
}

fn validate_at(node: &PowlNode, path: String, out: &mut Vec<Violation>) {
    let mut push = |message: String| {
        out.push(Violation {
            path: path.clone(),
            message,
        })
    };
    match node {
        PowlNode::Activity { label } => {
            if let Err(e) = Label::new(label.as_str()) {
                push(e.to_string());
            } else if label.as_str() != label.as_str().trim() {
                push("label is not trimmed".into());
            }
        }
        PowlNode::Silent | PowlNode::Loop { .. } => {}
        PowlNode::Xor { children } => {
            if children.len() < 2 {
                push(format!("xor has {} children, needs at least 2", children.len()));
            }
        }
        PowlNode::PartialOrder { children, order } => {
            let n = children.len();
            if n == 0 {
                push("partial order has no children".into());
            }
            let mut in_range = true;
            for &(a, b) in order {
                if a == b {
                    push(format!("reflexive order edge ({a}, {b})"));
                    in_range = false;
                } else if a >= n || b >= n {
                    push(format!("order edge ({a}, {b}) out of range for {n} children"));
                    in_range = false;
                }
            }
            if in_range {
                match transitive_reduction(order, n) {
                    Err(PowlError::CyclicOrder { from, to }) => {
                        push(format!("cyclic order through edge ({from}, {to})"))
                    }
                    Err(e) => push(e.to_string()),
                    Ok(reduced) if &reduced != order => {
                        push("order is not transitively reduced".into())
                    }
                    Ok(_) => {}
                }
            }
        }
    }
    for (i, child) in node.children().enumerate() {
        validate_at(child, format!("{path}.{i}"), out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelStats {
    pub activity_count: usize,
    pub operator_count: usize,
    pub depth: usize,
    pub silent_count: usize,
}

pub fn stats(root: &PowlNode) -> ModelStats {
    let mut s = ModelStats::default();
    match root {
        PowlNode::Activity { .. } => s.activity_count = 1,
        PowlNode::Silent => s.silent_count = 1,
        _ => s.operator_count = 1,
    }
    let mut child_depth = 0;
    for child in root.children() {
        let c = stats(child);
        s.activity_count += c.activity_count;
        s.operator_count += c.operator_count;
        s.silent_count += c.silent_count;
        child_depth = child_depth.max(c.depth);
    }
    s.depth = 1 + child_depth;
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(label: &str) -> PowlNode {
        make_activity(label).unwrap()
    }

    fn edges(pairs: &[Edge]) -> BTreeSet<Edge> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn activity_labels() {
        assert_eq!(
            make_activity("pay order").unwrap(),
            PowlNode::Activity {
                label: Label("pay order".into())
            }
        );
        assert_eq!(a("  pay  "), a("pay"));
        assert!(matches!(make_activity(""), Err(PowlError::InvalidLabel { .. })));
        assert!(matches!(make_activity("   "), Err(PowlError::InvalidLabel { .. })));
        assert!(make_activity("bad\u{7}label").is_err());
        assert!(make_activity(&"x".repeat(120)).is_ok());
        assert!(make_activity(&"x".repeat(121)).is_err());
    }

    #[test]
    fn xor_arity() {
        let skip = make_xor(vec![a("a"), make_silent()]).unwrap();
        assert!(matches!(&skip, PowlNode::Xor { children } if children[1] == PowlNode::Silent));
        assert_eq!(
            make_xor(vec![a("a")]),
            Err(PowlError::Arity {
                operator: "xor",
                min: 2,
                got: 1
            })
        );
        let three = make_xor(vec![a("a"), a("b"), a("c")]).unwrap();
        assert_eq!(three.children().count(), 3);
    }

    #[test]
    fn loops() {
        let l = make_loop(a("select item"), make_silent()).unwrap();
        assert!(matches!(l, PowlNode::Loop { .. }));
        assert!(make_loop(make_silent(), make_silent()).is_ok());
    }

    #[test]
    fn partial_order_canonical_form() {
        let seq = make_partial_order(vec![a("a"), a("b")], [(0, 1)]).unwrap();
        assert!(matches!(&seq, PowlNode::PartialOrder { order, .. } if *order == edges(&[(0, 1)])));

        let conc = make_partial_order(vec![a("a"), a("b")], []).unwrap();
        assert!(matches!(&conc, PowlNode::PartialOrder { order, .. } if order.is_empty()));

        let reduced =
            make_partial_order(vec![a("a"), a("b"), a("c")], [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(
            matches!(&reduced, PowlNode::PartialOrder { order, .. } if *order == edges(&[(0, 1), (1, 2)]))
        );

        assert_eq!(
            make_partial_order(vec![a("a"), a("b")], [(0, 1), (1, 0)]),
            Err(PowlError::CyclicOrder { from: 0, to: 1 })
        );
        assert!(matches!(
            make_partial_order(vec![a("a"), a("b")], [(0, 0)]),
            Err(PowlError::BadEdge { .. })
        ));
        assert!(matches!(
            make_partial_order(vec![a("a"), a("b")], [(0, 2)]),
            Err(PowlError::BadEdge { .. })
        ));
        assert!(make_partial_order(vec![a("solo")], []).is_ok());
        assert!(matches!(
            make_partial_order(vec![], []),
            Err(PowlError::Arity { .. })
        ));
    }

    #[test]
    fn closure_examples() {
        assert_eq!(
            transitive_closure(&edges(&[(0, 1), (1, 2)]), 3),
            edges(&[(0, 1), (1, 2), (0, 2)])
        );
        assert!(transitive_closure(&BTreeSet::new(), 5).is_empty());
        assert_eq!(transitive_closure(&edges(&[(0, 1)]), 2), edges(&[(0, 1)]));
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(
            transitive_reduction(&edges(&[(0, 1), (1, 2), (0, 2)]), 3).unwrap(),
            edges(&[(0, 1), (1, 2)])
        );
        assert_eq!(transitive_reduction(&edges(&[(0, 1)]), 2).unwrap(), edges(&[(0, 1)]));
        assert_eq!(
            transitive_reduction(&edges(&[(0, 2), (1, 2)]), 3).unwrap(),
            edges(&[(0, 2), (1, 2)])
        );
        assert!(matches!(
            transitive_reduction(&edges(&[(0, 1), (1, 2), (2, 0)]), 3),
            Err(PowlError::CyclicOrder { .. })
        ));
    }

    #[test]
    fn validate_reports_paths() {
        let bad = PowlNode::PartialOrder {
            children: vec![
                a("a"),
                PowlNode::Xor {
                    children: vec![a("b")],
                },
            ],
            order: BTreeSet::new(),
        };
        let v = validate(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "root.1");

        let reflexive = PowlNode::PartialOrder {
            children: vec![a("a"), a("b")],
            order: edges(&[(1, 1)]),
        };
        let v = validate(&reflexive);
        assert!(v[0].message.contains("reflexive order"), "{v:?}");

        let unreduced = PowlNode::PartialOrder {
            children: vec![a("a"), a("b"), a("c")],
            order: edges(&[(0, 1), (1, 2), (0, 2)]),
        };
        assert!(validate(&unreduced)[0].message.contains("not transitively reduced"));

        let cyclic = PowlNode::PartialOrder {
            children: vec![a("a"), a("b")],
            order: edges(&[(0, 1), (1, 0)]),
        };
        assert!(validate(&cyclic)[0].message.contains("cyclic"));
    }

    #[test]
    fn stats_examples() {
        assert_eq!(
            stats(&a("a")),
            ModelStats {
                activity_count: 1,
                operator_count: 0,
                depth: 1,
                silent_count: 0
            }
        );
        assert_eq!(
            stats(&make_xor(vec![a("a"), make_silent()]).unwrap()),
            ModelStats {
                activity_count: 1,
                operator_count: 1,
                depth: 2,
                silent_count: 1
            }
        );
    }

    #[test]
    fn size_limit() {
        let wide: Vec<PowlNode> = (0..MAX_MODEL_NODES).map(|i| a(&format!("t{i}"))).collect();
        assert!(matches!(
            make_partial_order(wide, []),
            Err(PowlError::TooLarge { nodes: 501 })
        ));
    }
}
