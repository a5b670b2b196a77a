use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::powl::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    /// `None` for silent transitions.
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arc {
    Input(PlaceId, TransitionId),
    Output(TransitionId, PlaceId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("arc references unknown node `{0}`")]
    UnknownNode(String),
    #[error("arc from `{0}` to `{1}` must connect a place and a transition")]
    BadArc(String, String),
    #[error("initial place `{0}` has incoming arcs")]
    SourceHasInput(String),
    #[error("final place `{0}` has outgoing arcs")]
    SinkHasOutput(String),
    #[error("node `{0}` is not on a path from the initial to the final place")]
    Disconnected(String),
    #[error("initial and final place must differ")]
    SameSourceSink,
}

/// Workflow net: one source place, one sink place, every node on a path
/// between them. Places, transitions and arcs are kept sorted by id so two
/// nets built from the same elements compare equal regardless of insertion
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    arcs: Vec<Arc>,
    initial: PlaceId,
    final_place: PlaceId,
    preset: Vec<Vec<PlaceId>>,
    postset: Vec<Vec<PlaceId>>,
}

/// Collects net elements by id before validation.
#[derive(Debug, Default, Clone)]
pub struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<Transition>,
    arcs: Vec<(String, String)>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, id: impl Into<String>) -> &mut Self {
        self.places.push(id.into());
        self
    }

    pub fn transition(&mut self, id: impl Into<String>, label: Option<Label>) -> &mut Self {
        self.transitions.push(Transition {
            id: id.into(),
            label,
        });
        self
    }

    pub fn arc(&mut self, source: impl Into<String>, target: impl Into<String>) -> &mut Self {
        self.arcs.push((source.into(), target.into()));
        self
    }

    pub fn build(&self, initial: &str, final_place: &str) -> Result<PetriNet, NetError> {
        let mut places = self.places.clone();
        places.sort();
        let mut transitions = self.transitions.clone();
        transitions.sort_by(|a, b| a.id.cmp(&b.id));

        let mut ids = BTreeSet::new();
        for id in places.iter().chain(transitions.iter().map(|t| &t.id)) {
            if !ids.insert(id.as_str()) {
                return Err(NetError::DuplicateId(id.clone()));
            }
        }
        let place_ix = |id: &str| places.binary_search_by(|p| p.as_str().cmp(id)).ok();
        let trans_ix = |id: &str| {
            transitions
                .binary_search_by(|t| t.id.as_str().cmp(id))
                .ok()
        };

        let mut arcs = BTreeSet::new();
        for (s, t) in &self.arcs {
            let arc = match (place_ix(s), trans_ix(s), place_ix(t), trans_ix(t)) {
                (Some(p), _, _, Some(tr)) => Arc::Input(PlaceId(p), TransitionId(tr)),
                (_, Some(tr), Some(p), _) => Arc::Output(TransitionId(tr), PlaceId(p)),
                (None, None, _, _) => return Err(NetError::UnknownNode(s.clone())),
                (_, _, None, None) => return Err(NetError::UnknownNode(t.clone())),
                _ => return Err(NetError::BadArc(s.clone(), t.clone())),
            };
            arcs.insert(arc);
        }
        let initial = PlaceId(place_ix(initial).ok_or_else(|| NetError::UnknownNode(initial.into()))?);
        let final_place = PlaceId(
            place_ix(final_place).ok_or_else(|| NetError::UnknownNode(final_place.into()))?,
        );
        if initial == final_place {
            return Err(NetError::SameSourceSink);
        }

        let mut preset = vec![Vec::new(); transitions.len()];
        let mut postset = vec![Vec::new(); transitions.len()];
        for arc in &arcs {
            match *arc {
                Arc::Input(p, t) => preset[t.0].push(p),
                Arc::Output(t, p) => postset[t.0].push(p),
            }
        }
        let net = PetriNet {
            places,
            transitions,
            arcs: arcs.into_iter().collect(),
            initial,
            final_place,
            preset,
            postset,
        };
        net.check_shape()?;
        Ok(net)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    P(usize),
    T(usize),
}

impl PetriNet {
    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn initial_place(&self) -> PlaceId {
        self.initial
    }

    pub fn final_place(&self) -> PlaceId {
        self.final_place
    }

    pub fn place_id(&self, p: PlaceId) -> &str {
        &self.places[p.0]
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.0]
    }

    pub fn preset(&self, t: TransitionId) -> &[PlaceId] {
        &self.preset[t.0]
    }

    pub fn postset(&self, t: TransitionId) -> &[PlaceId] {
        &self.postset[t.0]
    }

    pub fn find_place(&self, id: &str) -> Option<PlaceId> {
        self.places
            .binary_search_by(|p| p.as_str().cmp(id))
            .ok()
            .map(PlaceId)
    }

    pub fn find_transition(&self, id: &str) -> Option<TransitionId> {
        self.transitions
            .binary_search_by(|t| t.id.as_str().cmp(id))
            .ok()
            .map(TransitionId)
    }

    /// Arcs as `(source id, target id)` pairs.
    pub fn arc_ids(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.arcs.iter().map(move |a| match *a {
            Arc::Input(p, t) => (self.places[p.0].as_str(), self.transitions[t.0].id.as_str()),
            Arc::Output(t, p) => (self.transitions[t.0].id.as_str(), self.places[p.0].as_str()),
        })
    }

    fn check_shape(&self) -> Result<(), NetError> {
        let np = self.places.len();
        let nt = self.transitions.len();
        let mut fwd: Vec<Vec<Node>> = vec![Vec::new(); np + nt];
        let mut bwd: Vec<Vec<Node>> = vec![Vec::new(); np + nt];
        let ix = |n: Node| match n {
            Node::P(p) => p,
            Node::T(t) => np + t,
        };
        for arc in &self.arcs {
            let (s, t) = match *arc {
                Arc::Input(p, t) => (Node::P(p.0), Node::T(t.0)),
                Arc::Output(t, p) => (Node::T(t.0), Node::P(p.0)),
            };
            fwd[ix(s)].push(t);
            bwd[ix(t)].push(s);
        }
        let src = Node::P(self.initial.0);
        let sink = Node::P(self.final_place.0);
        if !bwd[ix(src)].is_empty() {
            return Err(NetError::SourceHasInput(self.places[self.initial.0].clone()));
        }
        if !fwd[ix(sink)].is_empty() {
            return Err(NetError::SinkHasOutput(self.places[self.final_place.0].clone()));
        }
        let reach = |start: Node, adj: &Vec<Vec<Node>>| {
            let mut seen = vec![false; np + nt];
            let mut queue = VecDeque::from([start]);
            seen[ix(start)] = true;
            while let Some(n) = queue.pop_front() {
                for &m in &adj[ix(n)] {
                    if !seen[ix(m)] {
                        seen[ix(m)] = true;
                        queue.push_back(m);
                    }
                }
            }
            seen
        };
        let from_src = reach(src, &fwd);
        let to_sink = reach(sink, &bwd);
        for i in 0..np + nt {
            if !(from_src[i] && to_sink[i]) {
                let id = if i < np {
                    &self.places[i]
                } else {
                    &self.transitions[i - np].id
                };
                return Err(NetError::Disconnected(id.clone()));
            }
        }
        Ok(())
    }
}

/// Token counts per place, indexed like [`PetriNet::places`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn empty(net: &PetriNet) -> Self {
        Marking(vec![0; net.places.len()])
    }

    /// One token on the initial place.
    pub fn initial(net: &PetriNet) -> Self {
        let mut m = Self::empty(net);
        m.0[net.initial.0] = 1;
        m
    }

    /// One token on the final place.
    pub fn final_marking(net: &PetriNet) -> Self {
        let mut m = Self::empty(net);
        m.0[net.final_place.0] = 1;
        m
    }

    pub fn get(&self, p: PlaceId) -> u32 {
        self.0[p.0]
    }

    pub fn set(&mut self, p: PlaceId, tokens: u32) {
        self.0[p.0] = tokens;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    /// Marked places by id.
    pub fn to_map(&self, net: &PetriNet) -> BTreeMap<String, u32> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (net.places[i].clone(), c))
            .collect()
    }

    /// True if `self >= other` place-wise and the two differ.
    pub fn strictly_covers(&self, other: &Marking) -> bool {
        self != other && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, c)| format!("p{i}:{c}"))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("transition `{0}` is not enabled")]
pub struct NotEnabled(pub String);

pub fn is_enabled(net: &PetriNet, m: &Marking, t: TransitionId) -> bool {
    net.preset(t).iter().all(|&p| m.get(p) >= 1)
}

/// Transitions whose every input place holds a token, in id order.
pub fn enabled(net: &PetriNet, m: &Marking) -> Vec<TransitionId> {
    (0..net.transitions.len())
        .map(TransitionId)
        .filter(|&t| is_enabled(net, m, t))
        .collect()
}

pub fn fire(net: &PetriNet, m: &Marking, t: TransitionId) -> Result<Marking, NotEnabled> {
    if !is_enabled(net, m, t) {
        return Err(NotEnabled(net.transition(t).id.clone()));
    }
    let mut next = m.clone();
    for &p in net.preset(t) {
        next.0[p.0] -= 1;
    }
    for &p in net.postset(t) {
        next.0[p.0] += 1;
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(s: &str) -> Option<Label> {
        Some(Label::new(s).unwrap())
    }

    fn single() -> PetriNet {
        NetBuilder::new()
            .place("p1")
            .place("p2")
            .transition("t", label("a"))
            .arc("p1", "t")
            .arc("t", "p2")
            .build("p1", "p2")
            .unwrap()
    }

    #[test]
    fn firing_rule() {
        let net = single();
        let t = net.find_transition("t").unwrap();
        let m0 = Marking::initial(&net);
        assert_eq!(enabled(&net, &m0), vec![t]);
        assert!(enabled(&net, &Marking::empty(&net)).is_empty());
        let m1 = fire(&net, &m0, t).unwrap();
        assert_eq!(m1, Marking::final_marking(&net));
        assert_eq!(fire(&net, &m1, t), Err(NotEnabled("t".into())));
    }

    #[test]
    fn split_and_join() {
        let net = NetBuilder::new()
            .place("i")
            .place("p2")
            .place("p3")
            .place("o")
            .transition("split", None)
            .transition("join", None)
            .arc("i", "split")
            .arc("split", "p2")
            .arc("split", "p3")
            .arc("p2", "join")
            .arc("p3", "join")
            .arc("join", "o")
            .build("i", "o")
            .unwrap();
        let split = net.find_transition("split").unwrap();
        let join = net.find_transition("join").unwrap();
        let m = fire(&net, &Marking::initial(&net), split).unwrap();
        assert_eq!(
            m.to_map(&net),
            BTreeMap::from([("p2".to_string(), 1), ("p3".to_string(), 1)])
        );
        let mut half = Marking::empty(&net);
        half.set(net.find_place("p2").unwrap(), 1);
        assert!(!enabled(&net, &half).contains(&join));
    }

    #[test]
    fn shape_errors() {
        let mut b = NetBuilder::new();
        b.place("i").place("o").transition("t", None).arc("i", "t").arc("t", "o");
        assert!(b.build("i", "o").is_ok());
        assert_eq!(b.build("o", "i"), Err(NetError::SourceHasInput("o".into())));

        let mut dangling = b.clone();
        dangling.place("x");
        assert_eq!(dangling.build("i", "o"), Err(NetError::Disconnected("x".into())));

        let mut bad = b.clone();
        bad.arc("i", "o");
        assert!(matches!(bad.build("i", "o"), Err(NetError::BadArc(..))));

        let mut dup = b.clone();
        dup.transition("i", None);
        assert!(matches!(dup.build("i", "o"), Err(NetError::DuplicateId(..))));
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let a = single();
        let b = NetBuilder::new()
            .transition("t", label("a"))
            .place("p2")
            .place("p1")
            .arc("t", "p2")
            .arc("p1", "t")
            .build("p1", "p2")
            .unwrap();
        assert_eq!(a, b);
    }
}
