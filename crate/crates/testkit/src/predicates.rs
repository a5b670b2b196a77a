//! Structural checks used by the order-process and refinement tests.

use promoai_core::powl::{transitive_closure, PowlNode};

fn is_activity(n: &PowlNode, label: &str) -> bool {
    matches!(n, PowlNode::Activity { label: l } if l.as_str() == label)
}

/// Some Loop has the activity `label` as its body.
pub fn loop_around(model: &PowlNode, label: &str) -> bool {
    model.any(&|n| matches!(n, PowlNode::Loop { body, .. } if body.any(&|b| is_activity(b, label))))
}

/// Some Xor chooses between the activity `label` and a silent step.
pub fn skippable(model: &PowlNode, label: &str) -> bool {
    model.any(&|n| match n {
        PowlNode::Xor { children } => {
            children.iter().any(|c| is_activity(c, label))
                && children.iter().any(|c| matches!(c, PowlNode::Silent))
        }
        _ => false,
    })
}

/// Some PartialOrder leaves a pair of children unordered.
pub fn has_concurrency(model: &PowlNode) -> bool {
    model.any(&|n| match n {
        PowlNode::PartialOrder { children, order } => {
            let c = transitive_closure(order, children.len());
            (0..children.len()).any(|i| {
                (i + 1..children.len()).any(|j| !c.contains(&(i, j)) && !c.contains(&(j, i)))
            })
        }
        _ => false,
    })
}
