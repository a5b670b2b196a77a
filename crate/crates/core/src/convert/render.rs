use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{powl_to_bpmn, powl_to_pn, BpmnKind, ConvertError};
use crate::powl::PowlNode;
use crate::semantics::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Pn,
    Bpmn,
}

impl std::str::FromStr for View {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pn" => Ok(View::Pn),
            "bpmn" => Ok(View::Bpmn),
            other => Err(format!("unknown view `{other}`, expected pn or bpmn")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderNode {
    pub id: String,
    pub kind: String,
    pub label: String,
    /// Longest-path layer from the start node, ignoring loop-back edges.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderEdge {
    pub source: String,
    pub target: String,
}

/// Flat node/edge lists for drawing a model in the UI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderGraph {
    pub nodes: Vec<RenderNode>,
    pub edges: Vec<RenderEdge>,
}

pub fn to_render_graph(model: &PowlNode, view: View) -> Result<RenderGraph, ConvertError> {
    let (nodes, edges, start) = match view {
        View::Bpmn => {
            let g = powl_to_bpmn(model)?;
            let nodes: Vec<RenderNode> = g
                .nodes
                .iter()
                .map(|n| RenderNode {
                    id: n.id.clone(),
                    kind: n.kind.name().to_string(),
                    label: match &n.kind {
                        BpmnKind::Task { label } => label.clone(),
                        _ => String::new(),
                    },
                    rank: None,
                })
                .collect();
            let edges = g
                .flows
                .iter()
                .map(|f| RenderEdge {
                    source: f.source.clone(),
                    target: f.target.clone(),
                })
                .collect();
            (nodes, edges, "start".to_string())
        }
        View::Pn => {
            let net = powl_to_pn(model)?;
            let mut nodes: Vec<RenderNode> = net
                .places()
                .iter()
                .map(|p| RenderNode {
                    id: p.clone(),
                    kind: "place".into(),
                    label: String::new(),
                    rank: None,
                })
                .collect();
            nodes.extend(net.transitions().iter().map(|t| RenderNode {
                id: t.id.clone(),
                kind: if t.label.is_some() {
                    "transition".into()
                } else {
                    "silent-transition".into()
                },
                label: t.label.as_ref().map(|l| l.to_string()).unwrap_or_default(),
                rank: None,
            }));
            let edges = net
                .arcs()
                .iter()
                .map(|a| {
                    let (s, t) = match *a {
                        Arc::Input(p, t) => (net.place_id(p), net.transition(t).id.as_str()),
                        Arc::Output(t, p) => (net.transition(t).id.as_str(), net.place_id(p)),
                    };
                    RenderEdge {
                        source: s.to_string(),
                        target: t.to_string(),
                    }
                })
                .collect();
            (nodes, edges, net.place_id(net.initial_place()).to_string())
        }
    };
    let mut graph = RenderGraph { nodes, edges };
    assign_ranks(&mut graph, &start);
    Ok(graph)
}

/// Layers nodes by longest path from `start` after dropping the edges that
/// close a cycle in a depth-first search.
fn assign_ranks(graph: &mut RenderGraph, start: &str) {
    let ix: HashMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let n = graph.nodes.len();
    let mut adj = vec![Vec::new(); n];
    for e in &graph.edges {
        adj[ix[e.source.as_str()]].push(ix[e.target.as_str()]);
    }

    // Iterative DFS: 0 = unvisited, 1 = on stack, 2 = done.
    let mut state = vec![0u8; n];
    let mut postorder = Vec::with_capacity(n);
    let mut forward = vec![Vec::new(); n];
    let root = ix[start];
    let mut stack = vec![(root, 0usize)];
    state[root] = 1;
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if *next < adj[v].len() {
            let w = adj[v][*next];
            *next += 1;
            match state[w] {
                0 => {
                    forward[v].push(w);
                    state[w] = 1;
                    stack.push((w, 0));
                }
                2 => forward[v].push(w),
                _ => {} // back edge
            }
        } else {
            state[v] = 2;
            postorder.push(v);
            stack.pop();
        }
    }

    let mut rank = vec![0usize; n];
    for &v in postorder.iter().rev() {
        for &w in &forward[v] {
            rank[w] = rank[w].max(rank[v] + 1);
        }
    }
    for (i, node) in graph.nodes.iter_mut().enumerate() {
        node.rank = (state[i] == 2).then_some(rank[i]);
    }
}
