use std::collections::BTreeSet;

use super::ConvertError;
use crate::powl::{validate, Edge, PowlNode};
use crate::semantics::{NetBuilder, PetriNet};

/// Translates a valid model into a workflow net.
///
/// Every fragment connects an entry place to an exit place. Ids are
/// `<tree path>_<role>`, e.g. `root.2.0_task`, so the same model always
/// yields the same net.
pub fn powl_to_pn(model: &PowlNode) -> Result<PetriNet, ConvertError> {
    let violations = validate(model);
    if !violations.is_empty() {
        return Err(ConvertError::Invalid(violations));
    }
    let mut b = NetBuilder::new();
    let entry = "root_entry".to_string();
    let exit = "root_exit".to_string();
    b.place(&entry).place(&exit);
    fragment(&mut b, model, "root", &entry, &exit);

    // A loop at the root sends tokens back to its entry place, which then
    // cannot serve as the source of a workflow net.
    if matches!(model, PowlNode::Loop { .. }) {
        b.place("source").transition("start", None);
        b.arc("source", "start").arc("start", &entry);
        return Ok(b.build("source", &exit)?);
    }
    Ok(b.build(&entry, &exit)?)
}

fn fragment(b: &mut NetBuilder, node: &PowlNode, path: &str, entry: &str, exit: &str) {
    match node {
        PowlNode::Activity { label } => {
            let t = format!("{path}_task");
            b.transition(&t, Some(label.clone()));
            b.arc(entry, &t).arc(&t, exit);
        }
        PowlNode::Silent => {
            let t = format!("{path}_tau");
            b.transition(&t, None);
            b.arc(entry, &t).arc(&t, exit);
        }
        PowlNode::Xor { children } => {
            for (i, child) in children.iter().enumerate() {
                let cp = format!("{path}.{i}");
                let (c_entry, c_exit) = child_places(b, &cp);
                let choose = format!("{cp}_choose");
                let merge = format!("{cp}_merge");
                b.transition(&choose, None).transition(&merge, None);
                b.arc(entry, &choose).arc(&choose, &c_entry);
                b.arc(&c_exit, &merge).arc(&merge, exit);
                fragment(b, child, &cp, &c_entry, &c_exit);
            }
        }
        PowlNode::Loop { body, redo } => {
            let (do_entry, do_exit) = child_places(b, &format!("{path}.0"));
            let (redo_entry, redo_exit) = child_places(b, &format!("{path}.1"));
            let mid = format!("{path}_mid");
            b.place(&mid);
            let [enter, do_done, leave, again, back] =
                ["enter", "do_done", "leave", "redo", "back"].map(|r| format!("{path}_{r}"));
            for t in [&enter, &do_done, &leave, &again, &back] {
                b.transition(t, None);
            }
            b.arc(entry, &enter).arc(&enter, &do_entry);
            b.arc(&do_exit, &do_done).arc(&do_done, &mid);
            b.arc(&mid, &leave).arc(&leave, exit);
            b.arc(&mid, &again).arc(&again, &redo_entry);
            b.arc(&redo_exit, &back).arc(&back, entry);
            fragment(b, body, &format!("{path}.0"), &do_entry, &do_exit);
            fragment(b, redo, &format!("{path}.1"), &redo_entry, &redo_exit);
        }
        PowlNode::PartialOrder { children, order } => {
            partial_order(b, children, order, path, entry, exit)
        }
    }
}

fn child_places(b: &mut NetBuilder, child_path: &str) -> (String, String) {
    let entry = format!("{child_path}_entry");
    let exit = format!("{child_path}_exit");
    b.place(&entry).place(&exit);
    (entry, exit)
}

/// A split hands a "go" token to every child; a child starts once it has its
/// go token and one token from each direct predecessor, and a final join
/// waits for every child to be done.
fn partial_order(
    b: &mut NetBuilder,
    children: &[PowlNode],
    order: &BTreeSet<Edge>,
    path: &str,
    entry: &str,
    exit: &str,
) {
    let split = format!("{path}_split");
    let join = format!("{path}_join");
    b.transition(&split, None).transition(&join, None);
    b.arc(entry, &split).arc(&join, exit);
    let order_place = |u: usize, v: usize| format!("{path}_order_{u}_{v}");
    for &(u, v) in order {
        b.place(order_place(u, v));
    }
    for (v, child) in children.iter().enumerate() {
        let cp = format!("{path}.{v}");
        let (c_entry, c_exit) = child_places(b, &cp);
        let [go, start, end, done] = ["go", "in", "out", "done"].map(|r| format!("{cp}_{r}"));
        b.place(&go).place(&done);
        b.transition(&start, None).transition(&end, None);
        b.arc(&split, &go).arc(&go, &start).arc(&start, &c_entry);
        b.arc(&c_exit, &end).arc(&end, &done).arc(&done, &join);
        for &(u, w) in order {
            if w == v {
                b.arc(order_place(u, w), &start);
            }
            if u == v {
                b.arc(&end, order_place(u, w));
            }
        }
        fragment(b, child, &cp, &c_entry, &c_exit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powl::{make_activity, make_loop, make_partial_order, make_silent, make_xor};
    use crate::semantics::{check_soundness, pn_traces, powl_traces, DEFAULT_STATE_BUDGET};

    fn a(l: &str) -> PowlNode {
        make_activity(l).unwrap()
    }

    #[test]
    fn activity_base_rule() {
        let net = powl_to_pn(&a("a")).unwrap();
        assert_eq!(net.places().len(), 2);
        assert_eq!(net.transitions().len(), 1);
        assert_eq!(net.transitions()[0].label.as_ref().unwrap().as_str(), "a");
        assert_eq!(net.arcs().len(), 2);
        assert_eq!(net.place_id(net.initial_place()), "root_entry");
    }

    #[test]
    fn concurrency_language() {
        let m = make_partial_order(vec![a("a"), a("b")], []).unwrap();
        let net = powl_to_pn(&m).unwrap();
        let t = pn_traces(&net, 8, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(t, powl_traces(&m, 8, 1000).unwrap());
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn root_loop_gets_fresh_source() {
        let m = make_loop(a("a"), make_silent()).unwrap();
        let net = powl_to_pn(&m).unwrap();
        assert_eq!(net.place_id(net.initial_place()), "source");
        assert!(check_soundness(&net, 1000).is_sound());
        assert_eq!(
            pn_traces(&net, 3, 1000).unwrap(),
            powl_traces(&m, 3, 1000).unwrap()
        );
    }

    #[test]
    fn rejects_invalid_models() {
        let bad = PowlNode::Xor {
            children: vec![a("a")],
        };
        assert!(matches!(powl_to_pn(&bad), Err(ConvertError::Invalid(v)) if v.len() == 1));
    }

    #[test]
    fn nested_constructs_are_sound() {
        let m = make_partial_order(
            vec![
                make_xor(vec![a("a"), make_silent()]).unwrap(),
                make_loop(a("b"), a("c")).unwrap(),
                a("d"),
            ],
            [(0, 2), (1, 2)],
        )
        .unwrap();
        let net = powl_to_pn(&m).unwrap();
        let r = check_soundness(&net, DEFAULT_STATE_BUDGET);
        assert!(r.is_sound(), "{r:?}");
        assert_eq!(
            pn_traces(&net, 6, DEFAULT_STATE_BUDGET).unwrap(),
            powl_traces(&m, 6, 10_000).unwrap()
        );
    }
}
