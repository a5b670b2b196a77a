use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::ConvertError;
use crate::powl::{validate, PowlNode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BpmnKind {
    StartEvent,
    EndEvent,
    Task { label: String },
    ExclusiveGateway,
    ParallelGateway,
}

impl BpmnKind {
    pub fn is_gateway(&self) -> bool {
        matches!(self, BpmnKind::ExclusiveGateway | BpmnKind::ParallelGateway)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BpmnKind::StartEvent => "start-event",
            BpmnKind::EndEvent => "end-event",
            BpmnKind::Task { .. } => "task",
            BpmnKind::ExclusiveGateway => "exclusive-gateway",
            BpmnKind::ParallelGateway => "parallel-gateway",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BpmnNode {
    pub id: String,
    #[serde(flatten)]
    pub kind: BpmnKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceFlow {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BpmnGraph {
    pub nodes: Vec<BpmnNode>,
    pub flows: Vec<SequenceFlow>,
}

impl BpmnGraph {
    pub fn node(&self, id: &str) -> Option<&BpmnNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn count(&self, pred: impl Fn(&BpmnKind) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.kind)).count()
    }

    pub fn in_degree(&self, id: &str) -> usize {
        self.flows.iter().filter(|f| f.target == id).count()
    }

    pub fn out_degree(&self, id: &str) -> usize {
        self.flows.iter().filter(|f| f.source == id).count()
    }

    /// Structural problems, empty if the graph is well formed.
    pub fn check(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let starts: Vec<_> = self.nodes.iter().filter(|n| n.kind == BpmnKind::StartEvent).collect();
        let ends: Vec<_> = self.nodes.iter().filter(|n| n.kind == BpmnKind::EndEvent).collect();
        if starts.len() != 1 || ends.len() != 1 {
            issues.push(format!(
                "expected one start and one end event, found {} and {}",
                starts.len(),
                ends.len()
            ));
            return issues;
        }
        let ids: BTreeMap<&str, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        if ids.len() != self.nodes.len() {
            issues.push("duplicate node ids".into());
        }
        for f in &self.flows {
            for end in [&f.source, &f.target] {
                if !ids.contains_key(end.as_str()) {
                    issues.push(format!("flow {} references unknown node {end}", f.id));
                }
            }
        }
        if !issues.is_empty() {
            return issues;
        }
        for n in &self.nodes {
            let (i, o) = (self.in_degree(&n.id), self.out_degree(&n.id));
            let ok = match n.kind {
                BpmnKind::StartEvent => i == 0 && o == 1,
                BpmnKind::EndEvent => i == 1 && o == 0,
                BpmnKind::Task { .. } => i == 1 && o == 1,
                _ => (i == 1 && o >= 2) || (i >= 2 && o == 1),
            };
            if !ok {
                issues.push(format!("{} {} has {i} incoming and {o} outgoing flows", n.kind.name(), n.id));
            }
        }
        let reach = |from: &str, forward: bool| {
            let mut seen = vec![false; self.nodes.len()];
            let mut queue = VecDeque::from([ids[from]]);
            seen[ids[from]] = true;
            while let Some(ix) = queue.pop_front() {
                let id = &self.nodes[ix].id;
                for f in &self.flows {
                    let (a, b) = if forward { (&f.source, &f.target) } else { (&f.target, &f.source) };
                    if a == id && !seen[ids[b.as_str()]] {
                        seen[ids[b.as_str()]] = true;
                        queue.push_back(ids[b.as_str()]);
                    }
                }
            }
            seen
        };
        let fwd = reach(&starts[0].id, true);
        let bwd = reach(&ends[0].id, false);
        for (i, n) in self.nodes.iter().enumerate() {
            if !(fwd[i] && bwd[i]) {
                issues.push(format!("{} is not on a path from start to end", n.id));
            }
        }
        issues
    }
}

struct Builder {
    nodes: Vec<BpmnNode>,
    flows: Vec<(String, String)>,
}

impl Builder {
    fn node(&mut self, id: String, kind: BpmnKind) -> String {
        self.nodes.push(BpmnNode { id: id.clone(), kind });
        id
    }

    fn flow(&mut self, source: &str, target: &str) {
        self.flows.push((source.to_string(), target.to_string()));
    }

    /// Returns the (entry, exit) node of the fragment.
    fn fragment(&mut self, node: &PowlNode, path: &str) -> (String, String) {
        match node {
            PowlNode::Activity { label } => {
                let t = self.node(
                    format!("{path}_task"),
                    BpmnKind::Task {
                        label: label.to_string(),
                    },
                );
                (t.clone(), t)
            }
            // Placeholder gateway; cleanup turns it into a direct flow.
            PowlNode::Silent => {
                let g = self.node(format!("{path}_skip"), BpmnKind::ExclusiveGateway);
                (g.clone(), g)
            }
            PowlNode::Xor { children } => {
                let split = self.node(format!("{path}_xor_split"), BpmnKind::ExclusiveGateway);
                let join = self.node(format!("{path}_xor_join"), BpmnKind::ExclusiveGateway);
                for (i, c) in children.iter().enumerate() {
                    let (ce, cx) = self.fragment(c, &format!("{path}.{i}"));
                    self.flow(&split, &ce);
                    self.flow(&cx, &join);
                }
                (split, join)
            }
            PowlNode::Loop { body, redo } => {
                let join = self.node(format!("{path}_loop_join"), BpmnKind::ExclusiveGateway);
                let split = self.node(format!("{path}_loop_split"), BpmnKind::ExclusiveGateway);
                let (de, dx) = self.fragment(body, &format!("{path}.0"));
                let (re, rx) = self.fragment(redo, &format!("{path}.1"));
                self.flow(&join, &de);
                self.flow(&dx, &split);
                self.flow(&split, &re);
                self.flow(&rx, &join);
                (join, split)
            }
            PowlNode::PartialOrder { children, order } => {
                let split = self.node(format!("{path}_and_split"), BpmnKind::ParallelGateway);
                let join = self.node(format!("{path}_and_join"), BpmnKind::ParallelGateway);
                let mut ins = Vec::new();
                let mut outs = Vec::new();
                for (v, c) in children.iter().enumerate() {
                    let cp = format!("{path}.{v}");
                    let (ce, cx) = self.fragment(c, &cp);
                    let entry = if order.iter().any(|&(_, w)| w == v) {
                        let g = self.node(format!("{cp}_and_in"), BpmnKind::ParallelGateway);
                        self.flow(&g, &ce);
                        g
                    } else {
                        ce
                    };
                    let exit = if order.iter().any(|&(u, _)| u == v) {
                        let g = self.node(format!("{cp}_and_out"), BpmnKind::ParallelGateway);
                        self.flow(&cx, &g);
                        g
                    } else {
                        cx
                    };
                    self.flow(&split, &entry);
                    ins.push(entry);
                    outs.push(exit);
                }
                for &(u, w) in order {
                    let (src, dst) = (outs[u].clone(), ins[w].clone());
                    self.flow(&src, &dst);
                }
                for exit in &outs {
                    self.flow(exit, &join);
                }
                (split, join)
            }
        }
    }

    /// Drops gateways with exactly one incoming and one outgoing flow,
    /// reconnecting their neighbours directly.
    fn cleanup(&mut self) {
        loop {
            let degenerate = self.nodes.iter().position(|n| {
                n.kind.is_gateway()
                    && self.flows.iter().filter(|f| f.1 == n.id).count() == 1
                    && self.flows.iter().filter(|f| f.0 == n.id).count() == 1
            });
            let Some(ix) = degenerate else { break };
            let id = self.nodes.remove(ix).id;
            let fin = self.flows.iter().position(|f| f.1 == id).unwrap();
            let fout = self.flows.iter().position(|f| f.0 == id).unwrap();
            let dst = self.flows[fout].1.clone();
            // Rewire in place so flow order stays stable.
            self.flows[fin].1 = dst;
            self.flows.remove(fout);
        }
    }
}

pub fn powl_to_bpmn(model: &PowlNode) -> Result<BpmnGraph, ConvertError> {
    let violations = validate(model);
    if !violations.is_empty() {
        return Err(ConvertError::Invalid(violations));
    }
    let mut b = Builder {
        nodes: Vec::new(),
        flows: Vec::new(),
    };
    let start = b.node("start".into(), BpmnKind::StartEvent);
    let (entry, exit) = b.fragment(model, "root");
    let end = b.node("end".into(), BpmnKind::EndEvent);
    b.flow(&start, &entry);
    b.flow(&exit, &end);
    b.cleanup();
    let flows = b
        .flows
        .into_iter()
        .enumerate()
        .map(|(i, (source, target))| SequenceFlow {
            id: format!("flow_{i}"),
            source,
            target,
        })
        .collect();
    Ok(BpmnGraph {
        nodes: b.nodes,
        flows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powl::{make_activity, make_loop, make_partial_order, make_silent, make_xor};

    fn a(l: &str) -> PowlNode {
        make_activity(l).unwrap()
    }

    fn gateways(g: &BpmnGraph) -> (usize, usize) {
        (
            g.count(|k| *k == BpmnKind::ExclusiveGateway),
            g.count(|k| *k == BpmnKind::ParallelGateway),
        )
    }

    #[test]
    fn single_task() {
        let g = powl_to_bpmn(&a("a")).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.flows.len(), 2);
        assert_eq!(gateways(&g), (0, 0));
        assert!(g.check().is_empty());
    }

    #[test]
    fn xor_pair() {
        let g = powl_to_bpmn(&make_xor(vec![a("a"), a("b")]).unwrap()).unwrap();
        assert_eq!(gateways(&g), (2, 0));
        assert_eq!(g.count(|k| matches!(k, BpmnKind::Task { .. })), 2);
        assert_eq!(g.nodes.len(), 6);
        assert!(g.check().is_empty(), "{:?}", g.check());
    }

    #[test]
    fn skip_becomes_direct_flow() {
        let g = powl_to_bpmn(&make_xor(vec![a("a"), make_silent()]).unwrap()).unwrap();
        assert_eq!(gateways(&g), (2, 0));
        assert!(g
            .flows
            .iter()
            .any(|f| f.source == "root_xor_split" && f.target == "root_xor_join"));
        assert!(g.check().is_empty());
    }

    #[test]
    fn loop_with_silent_redo() {
        let g = powl_to_bpmn(&make_loop(a("a"), make_silent()).unwrap()).unwrap();
        assert_eq!(gateways(&g), (2, 0));
        assert!(g
            .flows
            .iter()
            .any(|f| f.source == "root_loop_split" && f.target == "root_loop_join"));
        assert!(g.check().is_empty());
    }

    #[test]
    fn partial_order_gateways() {
        // a -> c, b -> c, b concurrent with a
        let m = make_partial_order(vec![a("a"), a("b"), a("c")], [(0, 2), (1, 2)]).unwrap();
        let g = powl_to_bpmn(&m).unwrap();
        // split, join, and_in for c, and_out for a and b
        assert_eq!(gateways(&g), (0, 5));
        assert!(g.check().is_empty(), "{:?}", g.check());

        let single = make_partial_order(vec![a("a")], []).unwrap();
        let g = powl_to_bpmn(&single).unwrap();
        assert_eq!(gateways(&g), (0, 0));
        assert_eq!(g.nodes.len(), 3);
    }

    #[test]
    fn silent_model() {
        let g = powl_to_bpmn(&make_silent()).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.flows.len(), 1);
        assert!(g.check().is_empty());
    }
}
