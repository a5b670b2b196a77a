use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::net::{enabled, fire, Marking, PetriNet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub option_to_complete: bool,
    pub proper_completion: bool,
    /// Ids of transitions enabled in no explored marking.
    pub dead_transitions: Vec<String>,
    pub explored_states: usize,
    pub truncated: bool,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.option_to_complete && self.proper_completion && self.dead_transitions.is_empty()
    }

    pub fn summary(&self) -> String {
        let verdict = if self.is_sound() { "sound" } else { "not sound" };
        let mut s = format!(
            "{verdict}, {} dead transitions, {} states explored",
            self.dead_transitions.len(),
            self.explored_states
        );
        if !self.option_to_complete {
            s.push_str(", no option to complete");
        }
        if !self.proper_completion {
            s.push_str(", improper completion");
        }
        if self.truncated {
            s.push_str(" (truncated: state budget exhausted)");
        }
        s
    }
}

/// Explores the reachability graph breadth-first from one token on the
/// initial place and checks the three workflow-net soundness conditions.
///
/// Safeness is not assumed. When more than `state_budget` markings would be
/// needed, exploration stops, `truncated` is set, and the verdicts describe
/// the explored part only.
pub fn check_soundness(net: &PetriNet, state_budget: usize) -> SoundnessReport {
    let final_marking = Marking::final_marking(net);
    let mut index: HashMap<Marking, usize> = HashMap::new();
    let mut states: Vec<Marking> = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut ever_enabled = vec![false; net.transitions().len()];
    let mut truncated = false;

    let start = Marking::initial(net);
    index.insert(start.clone(), 0);
    states.push(start);
    succ.push(Vec::new());
    let mut queue = VecDeque::from([0usize]);

    'explore: while let Some(ix) = queue.pop_front() {
        let m = states[ix].clone();
        for t in enabled(net, &m) {
            ever_enabled[t.0] = true;
            let next = fire(net, &m, t).expect("enabled transition fires");
            let nix = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if states.len() >= state_budget {
                        truncated = true;
                        break 'explore;
                    }
                    let j = states.len();
                    index.insert(next.clone(), j);
                    states.push(next);
                    succ.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            succ[ix].push(nix);
        }
    }

    // Backward search from the final marking over explored edges.
    let mut can_finish = vec![false; states.len()];
    if let Some(&f) = index.get(&final_marking) {
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
        for (s, outs) in succ.iter().enumerate() {
            for &t in outs {
                pred[t].push(s);
            }
        }
        can_finish[f] = true;
        let mut queue = VecDeque::from([f]);
        while let Some(s) = queue.pop_front() {
            for &p in &pred[s] {
                if !can_finish[p] {
                    can_finish[p] = true;
                    queue.push_back(p);
                }
            }
        }
    }

    SoundnessReport {
        option_to_complete: can_finish.iter().all(|&c| c),
        proper_completion: !states.iter().any(|m| m.strictly_covers(&final_marking)),
        dead_transitions: net
            .transitions()
            .iter()
            .zip(&ever_enabled)
            .filter(|(_, &e)| !e)
            .map(|(t, _)| t.id.clone())
            .collect(),
        explored_states: states.len(),
        truncated,
    }
}
