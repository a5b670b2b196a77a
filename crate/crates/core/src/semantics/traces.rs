//! Bounded trace languages.
//!
//! [`powl_traces`] computes a model's language directly from the operator
//! definitions; [`pn_traces`] plays the token game on a Petri net. The two are
//! implemented independently so each can serve as an oracle for the other.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use thiserror::Error;

use super::net::{fire, enabled, Marking, PetriNet};
use crate::powl::{transitive_closure, PowlNode};

/// Visible activity labels in execution order.
pub type Trace = Vec<String>;
pub type TraceSet = BTreeSet<Trace>;

pub const MAX_TRACE_LEN: usize = 12;
pub const DEFAULT_TRACE_CAP: usize = 100_000;
pub const DEFAULT_STATE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace length bound {0} exceeds the maximum of {MAX_TRACE_LEN}")]
    MaxLenTooLarge(usize),
    #[error("more than {0} traces; the model is too large for exhaustive enumeration")]
    CapExceeded(usize),
    #[error("state budget of {0} markings exhausted")]
    BudgetExceeded(usize),
}

/// All visible traces of `model` with length at most `max_len`.
///
/// A partial-order edge `u < v` lets `v` start only after all of `u` has
/// completed; children not related by the order interleave freely.
pub fn powl_traces(model: &PowlNode, max_len: usize, cap: usize) -> Result<TraceSet, TraceError> {
    if max_len > MAX_TRACE_LEN {
        return Err(TraceError::MaxLenTooLarge(max_len));
    }
    language(model, max_len, cap)
}

fn check_cap(set: &TraceSet, cap: usize) -> Result<(), TraceError> {
    if set.len() > cap {
        Err(TraceError::CapExceeded(cap))
    } else {
        Ok(())
    }
}

fn language(node: &PowlNode, max_len: usize, cap: usize) -> Result<TraceSet, TraceError> {
    let out = match node {
        PowlNode::Activity { label } => {
            let mut s = TraceSet::new();
            if max_len >= 1 {
                s.insert(vec![label.as_str().to_string()]);
            }
            s
        }
        PowlNode::Silent => TraceSet::from([Vec::new()]),
        PowlNode::Xor { children } => {
            let mut s = TraceSet::new();
            for c in children {
                s.extend(language(c, max_len, cap)?);
                check_cap(&s, cap)?;
            }
            s
        }
        PowlNode::Loop { body, redo } => {
            let body = language(body, max_len, cap)?;
            let redo = language(redo, max_len, cap)?;
            let mut all = body.clone();
            let mut frontier: Vec<Trace> = body.iter().cloned().collect();
            // Each round appends one more redo·body iteration to traces that
            // were new in the previous round.
            while !frontier.is_empty() {
                let mut next = Vec::new();
                for prefix in &frontier {
                    for r in &redo {
                        for d in &body {
                            if prefix.len() + r.len() + d.len() > max_len {
                                continue;
                            }
                            let t: Trace = prefix.iter().chain(r).chain(d).cloned().collect();
                            if all.insert(t.clone()) {
                                next.push(t);
                            }
                        }
                    }
                }
                check_cap(&all, cap)?;
                frontier = next;
            }
            all
        }
        PowlNode::PartialOrder { children, order } => {
            let n = children.len();
            let langs = children
                .iter()
                .map(|c| language(c, max_len, cap).map(|s| s.into_iter().collect::<Vec<_>>()))
                .collect::<Result<Vec<_>, _>>()?;
            let mut preds = vec![Vec::new(); n];
            for (u, v) in transitive_closure(order, n) {
                preds[v].push(u);
            }
            let mut out = TraceSet::new();
            let mut chosen: Vec<&Trace> = Vec::with_capacity(n);
            choose(&langs, &preds, max_len, cap, &mut chosen, 0, &mut out)?;
            out
        }
    };
    check_cap(&out, cap)?;
    Ok(out)
}

/// Picks one trace per child (bounded by the total length) and records all
/// order-respecting interleavings of the picks.
fn choose<'a>(
    langs: &'a [Vec<Trace>],
    preds: &[Vec<usize>],
    max_len: usize,
    cap: usize,
    chosen: &mut Vec<&'a Trace>,
    used: usize,
    out: &mut TraceSet,
) -> Result<(), TraceError> {
    let k = chosen.len();
    if k == langs.len() {
        let mut pos = vec![0; k];
        let mut buf = Vec::with_capacity(used);
        interleave(chosen, preds, &mut pos, &mut buf, out);
        return check_cap(out, cap);
    }
    for t in &langs[k] {
        if used + t.len() > max_len {
            continue;
        }
        chosen.push(t);
        choose(langs, preds, max_len, cap, chosen, used + t.len(), out)?;
        chosen.pop();
    }
    Ok(())
}

fn interleave(
    picks: &[&Trace],
    preds: &[Vec<usize>],
    pos: &mut [usize],
    buf: &mut Trace,
    out: &mut TraceSet,
) {
    let mut progressed = false;
    for v in 0..picks.len() {
        if pos[v] == picks[v].len() || preds[v].iter().any(|&u| pos[u] < picks[u].len()) {
            continue;
        }
        progressed = true;
        buf.push(picks[v][pos[v]].clone());
        pos[v] += 1;
        interleave(picks, preds, pos, buf, out);
        pos[v] -= 1;
        buf.pop();
    }
    if !progressed && (0..picks.len()).all(|v| pos[v] == picks[v].len()) {
        out.insert(buf.clone());
    }
}

/// Visible traces of complete runs from the initial marking to exactly the
/// final marking, with silent transitions projected out.
///
/// Works on sets of markings closed under silent moves, memoized per
/// (set, remaining length), so silent cycles and interleaving diamonds are
/// explored once. `state_budget` bounds the number of distinct markings.
pub fn pn_traces(net: &PetriNet, max_len: usize, state_budget: usize) -> Result<TraceSet, TraceError> {
    if max_len > MAX_TRACE_LEN {
        return Err(TraceError::MaxLenTooLarge(max_len));
    }
    let mut ex = Explorer::new(net, state_budget);
    let start = ex.intern(Marking::initial(net))?;
    let closed = ex.silent_closure(vec![start])?;
    let result = ex.lang(closed, max_len)?;
    Ok(Rc::try_unwrap(result).unwrap_or_else(|rc| (*rc).clone()))
}

type MarkIx = usize;
type Successors = Rc<Vec<(Option<String>, MarkIx)>>;

struct Explorer<'n> {
    net: &'n PetriNet,
    budget: usize,
    markings: Vec<Marking>,
    index: HashMap<Marking, MarkIx>,
    successors: Vec<Option<Successors>>,
    final_ix: Option<MarkIx>,
    memo: HashMap<(Vec<MarkIx>, usize), Rc<TraceSet>>,
}

impl<'n> Explorer<'n> {
    fn new(net: &'n PetriNet, budget: usize) -> Self {
        Explorer {
            net,
            budget,
            markings: Vec::new(),
            index: HashMap::new(),
            successors: Vec::new(),
            final_ix: None,
            memo: HashMap::new(),
        }
    }

    fn intern(&mut self, m: Marking) -> Result<MarkIx, TraceError> {
        if let Some(&ix) = self.index.get(&m) {
            return Ok(ix);
        }
        if self.markings.len() >= self.budget {
            return Err(TraceError::BudgetExceeded(self.budget));
        }
        let ix = self.markings.len();
        if m == Marking::final_marking(self.net) {
            self.final_ix = Some(ix);
        }
        self.index.insert(m.clone(), ix);
        self.markings.push(m);
        self.successors.push(None);
        Ok(ix)
    }

    fn successors(&mut self, ix: MarkIx) -> Result<Successors, TraceError> {
        if let Some(s) = &self.successors[ix] {
            return Ok(Rc::clone(s));
        }
        let m = self.markings[ix].clone();
        let mut out = Vec::new();
        for t in enabled(self.net, &m) {
            let next = fire(self.net, &m, t).expect("enabled transition fires");
            let label = self.net.transition(t).label.as_ref().map(|l| l.as_str().to_string());
            out.push((label, self.intern(next)?));
        }
        let rc = Rc::new(out);
        self.successors[ix] = Some(Rc::clone(&rc));
        Ok(rc)
    }

    fn silent_closure(&mut self, seeds: Vec<MarkIx>) -> Result<Vec<MarkIx>, TraceError> {
        let mut seen: BTreeSet<MarkIx> = seeds.iter().copied().collect();
        let mut stack = seeds;
        while let Some(ix) = stack.pop() {
            for (label, next) in self.successors(ix)?.iter() {
                if label.is_none() && seen.insert(*next) {
                    stack.push(*next);
                }
            }
        }
        Ok(seen.into_iter().collect())
    }

    fn lang(&mut self, set: Vec<MarkIx>, remaining: usize) -> Result<Rc<TraceSet>, TraceError> {
        let key = (set, remaining);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(Rc::clone(hit));
        }
        let set = &key.0;
        let mut out = TraceSet::new();
        if self.final_ix.is_some_and(|f| set.contains(&f)) {
            out.insert(Vec::new());
        }
        if remaining > 0 {
            let mut by_label: BTreeMap<String, Vec<MarkIx>> = BTreeMap::new();
            for &ix in set {
                for (label, next) in self.successors(ix)?.iter() {
                    if let Some(l) = label {
                        by_label.entry(l.clone()).or_default().push(*next);
                    }
                }
            }
            for (label, targets) in by_label {
                let closed = self.silent_closure(targets)?;
                let suffixes = self.lang(closed, remaining - 1)?;
                for s in suffixes.iter() {
                    let mut t = Vec::with_capacity(s.len() + 1);
                    t.push(label.clone());
                    t.extend(s.iter().cloned());
                    out.insert(t);
                }
            }
        }
        let rc = Rc::new(out);
        self.memo.insert(key, Rc::clone(&rc));
        Ok(rc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powl::{make_activity, make_loop, make_partial_order, make_silent, make_xor};

    fn a(l: &str) -> PowlNode {
        make_activity(l).unwrap()
    }

    fn traces(items: &[&[&str]]) -> TraceSet {
        items
            .iter()
            .map(|t| t.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn concurrency_and_sequence() {
        let conc = make_partial_order(vec![a("a"), a("b")], []).unwrap();
        assert_eq!(
            powl_traces(&conc, 2, DEFAULT_TRACE_CAP).unwrap(),
            traces(&[&["a", "b"], &["b", "a"]])
        );
        let seq = make_partial_order(vec![a("a"), a("b")], [(0, 1)]).unwrap();
        assert_eq!(powl_traces(&seq, 2, DEFAULT_TRACE_CAP).unwrap(), traces(&[&["a", "b"]]));
        // Length bound cuts the only complete trace.
        assert!(powl_traces(&seq, 1, DEFAULT_TRACE_CAP).unwrap().is_empty());
    }

    #[test]
    fn loop_and_skip() {
        let l = make_loop(a("a"), a("b")).unwrap();
        assert_eq!(
            powl_traces(&l, 3, DEFAULT_TRACE_CAP).unwrap(),
            traces(&[&["a"], &["a", "b", "a"]])
        );
        let skip = make_xor(vec![a("a"), make_silent()]).unwrap();
        assert_eq!(powl_traces(&skip, 8, DEFAULT_TRACE_CAP).unwrap(), traces(&[&[], &["a"]]));
        let empty_loop = make_loop(make_silent(), make_silent()).unwrap();
        assert_eq!(powl_traces(&empty_loop, 4, DEFAULT_TRACE_CAP).unwrap(), traces(&[&[]]));
    }

    #[test]
    fn order_is_completion_before_start() {
        // a ; (b || c) where the loop child must finish before c starts.
        let m = make_partial_order(
            vec![make_loop(a("x"), make_silent()).unwrap(), a("c")],
            [(0, 1)],
        )
        .unwrap();
        let t = powl_traces(&m, 3, DEFAULT_TRACE_CAP).unwrap();
        assert_eq!(t, traces(&[&["x", "c"], &["x", "x", "c"]]));
    }

    #[test]
    fn cap_and_bound() {
        let many: Vec<_> = (0..6).map(|i| a(&format!("t{i}"))).collect();
        let conc = make_partial_order(many, []).unwrap();
        assert_eq!(powl_traces(&conc, 6, 100), Err(TraceError::CapExceeded(100)));
        assert_eq!(powl_traces(&conc, 6, 720).unwrap().len(), 720);
        assert_eq!(powl_traces(&conc, 13, 720), Err(TraceError::MaxLenTooLarge(13)));
    }
}
