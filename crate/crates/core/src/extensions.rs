//! Inhibitory patterns and pruning.
//!
//! A false positive stores every window subsequence that is not already an
//! excitatory pattern as an inhibitory record. Inhibitory candidates predict 0
//! with zero entropy, and being supersets they win ties against the
//! excitatory subsets that caused the false positive.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::event::{enumerate_subsequences, HistoryWindow};
use crate::infer::entropy;
use crate::tree::{EpstTree, NodeId, NodeKind, MAX_WINDOW_ENTRIES, ROOT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtensionParams {
    /// Probability at or above which a prediction without a matching spike
    /// counts as a false positive.
    pub decision_threshold: f64,
    pub joint_threshold: u64,
    pub fn_threshold: u64,
    pub prune_entropy_threshold: f64,
    pub prune_epsilon: f64,
    /// Pruning runs after every this many received events.
    pub prune_interval: u64,
}

impl Default for ExtensionParams {
    fn default() -> Self {
        Self {
            decision_threshold: 0.5,
            joint_threshold: 3,
            fn_threshold: 3,
            prune_entropy_threshold: 0.0,
            prune_epsilon: 1e-12,
            prune_interval: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "epst")]
    Epst,
    #[serde(rename = "epst_i")]
    EpstI,
    #[serde(rename = "epst_p")]
    EpstP,
    #[serde(rename = "epst_ip")]
    EpstIp,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Epst, Variant::EpstI, Variant::EpstP, Variant::EpstIp];

    pub fn inhibition(self) -> bool {
        matches!(self, Variant::EpstI | Variant::EpstIp)
    }

    pub fn pruning(self) -> bool {
        matches!(self, Variant::EpstP | Variant::EpstIp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Epst => "epst",
            Variant::EpstI => "epst_i",
            Variant::EpstP => "epst_p",
            Variant::EpstIp => "epst_ip",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Stores every subsequence of `window` that is not an excitatory node as an
/// inhibitory record with zero counts. Returns the number of records added.
pub fn record_false_positive(tree: &mut EpstTree, window: &HistoryWindow) -> usize {
    let p = tree.params().clone();
    let entries = &window.entries()[..window.len().min(MAX_WINDOW_ENTRIES)];
    let capped = HistoryWindow::from_entries(entries.to_vec(), window.length());
    let subs = enumerate_subsequences(&capped, p.min_subseq_len, p.max_subseq_len, Some(p.max_spike_interval));
    let mut added = 0;
    'outer: for sub in subs {
        if sub.items()[0].delay > p.max_spike_interval {
            continue;
        }
        let mut cur = ROOT;
        let mut cum = 0;
        let last = sub.len() - 1;
        for (i, e) in sub.items().iter().enumerate() {
            let key = (e.channel, e.delay - cum);
            cum = e.delay;
            cur = match tree.nodes[cur as usize].child(key) {
                Some(id) => id,
                None if tree.child_allowed(cur, key) => {
                    let kind = if i == last {
                        NodeKind::Inhibitory {
                            joint: 0,
                            false_negatives: 0,
                        }
                    } else {
                        NodeKind::Structural
                    };
                    let id = tree.add_child(cur, key, kind, (0, 0));
                    if i == last {
                        added += 1;
                    }
                    id
                }
                None => continue 'outer,
            };
        }
        let node = &mut tree.nodes[cur as usize];
        if node.kind == NodeKind::Structural {
            node.kind = NodeKind::Inhibitory {
                joint: 0,
                false_negatives: 0,
            };
            added += 1;
        }
    }
    added
}

/// Inhibitory nodes whose subsequence matches `window`.
pub fn matched_inhibitory(tree: &EpstTree, window: &HistoryWindow) -> Vec<NodeId> {
    let entries = tree.window_entries(window);
    let mut ids: Vec<NodeId> = tree
        .root_states(entries)
        .into_iter()
        .map(|s| s.0)
        .filter(|&id| matches!(tree.nodes[id as usize].kind, NodeKind::Inhibitory { .. }))
        .collect();
    ids.dedup();
    ids
}

/// Updates inhibitory records after the outcome at a step is known. When the
/// preferred spike occurred, every matched record counts one joint occurrence
/// and one false negative; records over either threshold are deleted.
/// Returns the number of deleted records.
pub fn inhibitory_maintenance(
    tree: &mut EpstTree,
    g_spike_occurred: bool,
    matched: &[NodeId],
    joint_threshold: u64,
    fn_threshold: u64,
) -> usize {
    if !g_spike_occurred {
        return 0;
    }
    let mut deleted = 0;
    for &id in matched {
        let node = &mut tree.nodes[id as usize];
        if !node.live {
            continue;
        }
        let NodeKind::Inhibitory { joint, false_negatives } = node.kind else {
            continue;
        };
        let (joint, false_negatives) = (joint + 1, false_negatives + 1);
        node.kind = NodeKind::Inhibitory { joint, false_negatives };
        if joint > joint_threshold || false_negatives > fn_threshold {
            delete_record(tree, id);
            deleted += 1;
        }
    }
    deleted
}

/// Removes a node, keeping it as structure while it still has descendants,
/// and drops structural ancestors left without children.
fn delete_record(tree: &mut EpstTree, id: NodeId) {
    if !tree.nodes[id as usize].children.is_empty() {
        tree.nodes[id as usize].kind = NodeKind::Structural;
        return;
    }
    let mut cur = id;
    loop {
        let parent = tree.nodes[cur as usize].parent;
        tree.remove_subtree(cur);
        let pn = &tree.nodes[parent as usize];
        if parent == ROOT || pn.kind != NodeKind::Structural || !pn.children.is_empty() {
            break;
        }
        cur = parent;
    }
}

/// Removes excitatory nodes whose entropy exceeds `threshold + epsilon`.
/// A node with a surviving descendant is kept with its counts. Inhibitory
/// nodes are untouched; structural nodes go when nothing below survives.
/// Returns the number of removed nodes.
pub fn prune_entropy(tree: &mut EpstTree, threshold: f64, epsilon: f64) -> usize {
    let order = tree.node_ids();
    let mut survives = vec![false; tree.nodes.len()];
    for &id in order.iter().rev() {
        let n = &tree.nodes[id as usize];
        let own = match n.kind {
            NodeKind::Excitatory => entropy(n.numerator, n.denominator).map_or(true, |h| h <= threshold + epsilon),
            NodeKind::Inhibitory { .. } => true,
            NodeKind::Structural => false,
        };
        survives[id as usize] = own || n.children.iter().any(|c| survives[c.1 as usize]);
    }
    let before = tree.node_count();
    for id in order {
        let n = &tree.nodes[id as usize];
        if n.live && !survives[id as usize] {
            tree.remove_subtree(id);
        }
    }
    before - tree.node_count()
}

/// Removes `floor(fraction * node_count)` nodes, each a leaf drawn uniformly
/// from the current leaves. Returns the number removed.
pub fn prune_random(tree: &mut EpstTree, fraction: f64, seed: u64) -> usize {
    let target = (fraction.clamp(0.0, 1.0) * tree.node_count() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut leaves: Vec<NodeId> = tree
        .node_ids()
        .into_iter()
        .filter(|&id| tree.nodes[id as usize].children.is_empty())
        .collect();
    let mut removed = 0;
    while removed < target && !leaves.is_empty() {
        let id = leaves.swap_remove(rng.gen_range(0..leaves.len()));
        let parent = tree.nodes[id as usize].parent;
        tree.remove_subtree(id);
        removed += 1;
        if parent != ROOT && tree.nodes[parent as usize].children.is_empty() {
            leaves.push(parent);
        }
    }
    removed
}
