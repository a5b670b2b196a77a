use std::fmt::Write as _;

use crate::powl::PowlNode;

/// Canonical PCL source for `model`: one statement per node, named `n0`,
/// `n1`, ... in post-order.
pub fn emit_pcl(model: &PowlNode) -> String {
    let mut out = String::new();
    let mut next = 0;
    let root = emit(model, &mut out, &mut next);
    let _ = writeln!(out, "final({root})");
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            q.push('\\');
        }
        q.push(c);
    }
    q.push('"');
    q
}

fn emit(node: &PowlNode, out: &mut String, next: &mut usize) -> String {
    let expr = match node {
        PowlNode::Activity { label } => format!("activity({})", quote(label.as_str())),
        PowlNode::Silent => "silent()".to_string(),
        PowlNode::Xor { children } => {
            let names: Vec<String> = children.iter().map(|c| emit(c, out, next)).collect();
            format!("xor({})", names.join(", "))
        }
        PowlNode::Loop { body, redo } => {
            let b = emit(body, out, next);
            let r = emit(redo, out, next);
            format!("loop({b}, {r})")
        }
        PowlNode::PartialOrder { children, order } => {
            let names: Vec<String> = children.iter().map(|c| emit(c, out, next)).collect();
            let edges: Vec<String> = order.iter().map(|(a, b)| format!("({a}, {b})")).collect();
            format!("partial_order([{}], [{}])", names.join(", "), edges.join(", "))
        }
    };
    let name = format!("n{next}");
    *next += 1;
    let _ = writeln!(out, "{name} = {expr}");
    name
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcl::run_pcl;
    use crate::powl::{make_activity, make_loop, make_partial_order, make_silent, make_xor};

    #[test]
    fn activity() {
        let m = make_activity("a").unwrap();
        assert_eq!(emit_pcl(&m), "n0 = activity(\"a\")\nfinal(n0)\n");
    }

    #[test]
    fn xor_with_silent() {
        let m = make_xor(vec![make_activity("a").unwrap(), make_silent()]).unwrap();
        let src = emit_pcl(&m);
        assert_eq!(src.lines().count(), 4);
        assert_eq!(run_pcl(&src).unwrap(), m);
    }

    #[test]
    fn quotes_and_nesting() {
        let m = make_partial_order(
            vec![
                make_activity("say \"hi\" \\ bye").unwrap(),
                make_loop(make_activity("x").unwrap(), make_silent()).unwrap(),
                make_activity("z").unwrap(),
            ],
            [(0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        assert_eq!(run_pcl(&emit_pcl(&m)).unwrap(), m);
    }
}
