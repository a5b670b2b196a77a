use promoai_core::powl::{
    make_activity, make_loop, make_partial_order, make_silent, make_xor, stats, PowlNode,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LABELS: [&str; 8] = [
    "check stock",
    "pack",
    "ship",
    "invoice",
    "approve",
    "notify",
    "archive",
    "review",
];

/// Bounds for random models.
#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_depth: usize,
    pub max_activities: usize,
    /// Widest partial order generated.
    pub max_po_children: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 3,
            max_activities: 8,
            max_po_children: 4,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random valid model within `cfg`'s depth and activity bounds.
pub fn random_model(rng: &mut impl Rng, cfg: GenConfig) -> PowlNode {
    let budget = rng.random_range(1..=cfg.max_activities);
    let m = gen(rng, cfg, cfg.max_depth, budget);
    let s = stats(&m);
    assert!(s.depth <= cfg.max_depth && s.activity_count <= cfg.max_activities);
    m
}

fn leaf(rng: &mut impl Rng, budget: usize) -> PowlNode {
    if budget > 0 && rng.random_bool(0.85) {
        make_activity(LABELS.choose(rng).unwrap()).unwrap()
    } else {
        make_silent()
    }
}

/// Splits `budget` activities over `k` children.
fn split_budget(rng: &mut impl Rng, budget: usize, k: usize) -> Vec<usize> {
    let mut parts = vec![0; k];
    for _ in 0..budget {
        parts[rng.random_range(0..k)] += 1;
    }
    parts
}

fn gen(rng: &mut impl Rng, cfg: GenConfig, depth: usize, budget: usize) -> PowlNode {
    if depth <= 1 || budget <= 1 && rng.random_bool(0.6) {
        return leaf(rng, budget);
    }
    match rng.random_range(0..4) {
        0 => {
            let k = rng.random_range(2..=3);
            let children = split_budget(rng, budget, k)
                .into_iter()
                .map(|b| gen(rng, cfg, depth - 1, b))
                .collect();
            make_xor(children).unwrap()
        }
        1 => {
            let parts = split_budget(rng, budget, 2);
            make_loop(gen(rng, cfg, depth - 1, parts[0]), gen(rng, cfg, depth - 1, parts[1]))
                .unwrap()
        }
        2 => leaf(rng, budget),
        _ => {
            let k = rng.random_range(1..=cfg.max_po_children);
            let children: Vec<PowlNode> = split_budget(rng, budget, k)
                .into_iter()
                .map(|b| gen(rng, cfg, depth - 1, b))
                .collect();
            // Edges along a random permutation are acyclic by construction.
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(rng);
            let mut edges = Vec::new();
            for i in 0..k {
                for j in i + 1..k {
                    if rng.random_bool(0.4) {
                        edges.push((perm[i], perm[j]));
                    }
                }
            }
            make_partial_order(children, edges).unwrap()
        }
    }
}
