//! The per-channel prediction tree.
//!
//! The virtual root stands for the predicted spike in the preferred channel
//! `g` at delay 0. Level-1 children are the most recent event of a stored
//! subsequence and deeper nodes reach further into the past; the path from the
//! root to a node spells the node's subsequence as cumulative delays.
//!
//! Every excitatory node carries two counts. The denominator counts
//! occurrences of the node's pattern anchored at its level-1 event (step 1,
//! run on every received spike); the numerator counts occurrences followed by
//! `g` at the stored delay (step 2, run on spikes in `g`). Step 2 also grows
//! the tree from nodes whose numerator exceeds the branch extension threshold.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Channel, Delay, Entry, HistoryWindow, Subsequence, Time};

pub type NodeId = u32;

pub const ROOT: NodeId = 0;

/// Windows are matched with a 128-bit occupancy mask; only the most recent
/// entries up to this count take part in learning and prediction.
pub const MAX_WINDOW_ENTRIES: usize = 128;

/// Largest supported prediction window (one bit per step in a `u128`).
pub const MAX_PREDICTION_WINDOW: Delay = 127;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpstParams {
    /// `M`: length of the history window.
    pub history_window: Delay,
    /// `M'`: predictions cover steps `0..=M'` after a trigger.
    pub prediction_window: Delay,
    /// Minimum number of history events in a subsequence used for prediction.
    pub min_subseq_len: usize,
    /// Maximum number of history events stored along one branch.
    pub max_subseq_len: usize,
    /// Largest delay allowed on any tree edge.
    pub max_spike_interval: Delay,
    /// A node grows children once its numerator exceeds this.
    pub branch_extension_threshold: u64,
    /// Minimum denominator for a node to contribute an estimate.
    pub frequency_threshold: u64,
    /// Half-width of the matching interval, in steps.
    pub matching_interval: Delay,
}

impl Default for EpstParams {
    fn default() -> Self {
        Self {
            history_window: 32,
            prediction_window: 40,
            min_subseq_len: 2,
            max_subseq_len: 4,
            max_spike_interval: 32,
            branch_extension_threshold: 1,
            frequency_threshold: 0,
            matching_interval: 0,
        }
    }
}

impl EpstParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidParams(msg.into()));
        if self.history_window == 0 {
            return fail("history_window must be positive");
        }
        if self.prediction_window > MAX_PREDICTION_WINDOW {
            return fail("prediction_window must be at most 127");
        }
        if self.min_subseq_len == 0 {
            return fail("min_subseq_len must be at least 1");
        }
        if self.min_subseq_len > self.max_subseq_len {
            return fail("min_subseq_len must not exceed max_subseq_len");
        }
        if self.max_subseq_len > u8::MAX as usize {
            return fail("max_subseq_len too large");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Excitatory,
    /// A pattern that forces a zero estimate when matched.
    Inhibitory {
        joint: u64,
        false_negatives: u64,
    },
    /// Path-only node kept so that its descendants stay reachable.
    Structural,
}

/// Children are kept sorted by `(channel, edge delay)`.
pub(crate) type ChildKey = (Channel, Delay);

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub(crate) channel: Channel,
    pub(crate) edge_delay: Delay,
    pub(crate) cum_delay: Delay,
    pub(crate) depth: u8,
    pub(crate) parent: NodeId,
    pub(crate) numerator: u64,
    pub(crate) denominator: u64,
    pub(crate) kind: NodeKind,
    pub(crate) children: Vec<(ChildKey, NodeId)>,
    pub(crate) live: bool,
}

impl Node {
    fn root() -> Self {
        Self {
            channel: 0,
            edge_delay: 0,
            cum_delay: 0,
            depth: 0,
            parent: ROOT,
            numerator: 0,
            denominator: 0,
            kind: NodeKind::Structural,
            children: Vec::new(),
            live: true,
        }
    }

    pub(crate) fn child(&self, key: ChildKey) -> Option<NodeId> {
        self.children
            .binary_search_by(|(k, _)| k.cmp(&key))
            .ok()
            .map(|i| self.children[i].1)
    }

    /// Children in `channel` whose edge delay lies in `[lo, hi]`.
    pub(crate) fn children_in(&self, channel: Channel, lo: Delay, hi: Delay) -> &[(ChildKey, NodeId)] {
        let start = self.children.partition_point(|(k, _)| *k < (channel, lo));
        let end = self.children.partition_point(|(k, _)| *k <= (channel, hi));
        &self.children[start..end.max(start)]
    }
}

/// Read-only view of one stored node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeInfo {
    pub id: NodeId,
    pub channel: Channel,
    pub edge_delay: Delay,
    pub cum_delay: Delay,
    pub depth: usize,
    pub numerator: u64,
    pub denominator: u64,
    pub kind: NodeKind,
}

/// A node whose path matched a window.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedNode {
    pub id: NodeId,
    pub subsequence: Subsequence,
    pub numerator: u64,
    pub denominator: u64,
    pub inhibitory: bool,
}

#[derive(Debug, Clone)]
pub struct EpstTree {
    params: EpstParams,
    preferred: Channel,
    root_count: u64,
    elapsed: Time,
    pub(crate) nodes: Vec<Node>,
    free: Vec<NodeId>,
    node_count: usize,
}

impl EpstTree {
    /// An empty tree predicting `preferred`. The channel need not be one of the
    /// input channels, so an external teaching signal can be learned too.
    pub fn new(preferred: Channel, params: EpstParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            preferred,
            root_count: 0,
            elapsed: 0,
            nodes: vec![Node::root()],
            free: Vec::new(),
            node_count: 0,
        })
    }

    pub fn params(&self) -> &EpstParams {
        &self.params
    }

    pub fn preferred(&self) -> Channel {
        self.preferred
    }

    /// `n(g)`: number of spikes in the preferred channel learned so far.
    pub fn root_count(&self) -> u64 {
        self.root_count
    }

    pub fn elapsed(&self) -> Time {
        self.elapsed
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn set_matching_interval(&mut self, tol: Delay) {
        self.params.matching_interval = tol;
    }

    pub fn info(&self, id: NodeId) -> NodeInfo {
        let n = &self.nodes[id as usize];
        NodeInfo {
            id,
            channel: n.channel,
            edge_delay: n.edge_delay,
            cum_delay: n.cum_delay,
            depth: n.depth as usize,
            numerator: n.numerator,
            denominator: n.denominator,
            kind: n.kind,
        }
    }

    /// All live non-root nodes in depth-first key order.
    pub fn node_ids(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.node_count);
        let mut stack: Vec<NodeId> = self.nodes[0].children.iter().rev().map(|c| c.1).collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id as usize].children.iter().rev().map(|c| c.1));
        }
        out
    }

    /// The subsequence spelled by the path from the root to `id`.
    pub fn path(&self, id: NodeId) -> Subsequence {
        let mut items = Vec::with_capacity(self.nodes[id as usize].depth as usize);
        let mut cur = id;
        while cur != ROOT {
            let n = &self.nodes[cur as usize];
            items.push(Entry::new(n.cum_delay, n.channel));
            cur = n.parent;
        }
        items.reverse();
        Subsequence::from_sorted(items)
    }

    /// Looks up a stored subsequence by its exact delays.
    pub fn find(&self, sub: &Subsequence) -> Option<NodeId> {
        let mut cur = ROOT;
        let mut cum = 0;
        for e in sub.items() {
            let edge = e.delay.checked_sub(cum)?;
            cur = self.nodes[cur as usize].child((e.channel, edge))?;
            cum = e.delay;
        }
        (cur != ROOT).then_some(cur)
    }

    /// Whether a child with `key` may hang below `parent` under the length and
    /// spike-interval limits and the canonical ordering of simultaneous items.
    pub(crate) fn child_allowed(&self, parent: NodeId, key: ChildKey) -> bool {
        let p = &self.nodes[parent as usize];
        (p.depth as usize) < self.params.max_subseq_len
            && key.1 <= self.params.max_spike_interval
            && (parent == ROOT || key.1 > 0 || key.0 >= p.channel)
    }

    pub(crate) fn add_child(&mut self, parent: NodeId, key: ChildKey, kind: NodeKind, counts: (u64, u64)) -> NodeId {
        let (depth, cum) = {
            let p = &self.nodes[parent as usize];
            (p.depth + 1, p.cum_delay + key.1)
        };
        let node = Node {
            channel: key.0,
            edge_delay: key.1,
            cum_delay: cum,
            depth,
            parent,
            numerator: counts.0,
            denominator: counts.1,
            kind,
            children: Vec::new(),
            live: true,
        };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as NodeId
            }
        };
        let children = &mut self.nodes[parent as usize].children;
        let pos = children.partition_point(|(k, _)| *k < key);
        children.insert(pos, (key, id));
        self.node_count += 1;
        id
    }

    /// Removes `id` and its whole subtree.
    pub(crate) fn remove_subtree(&mut self, id: NodeId) {
        debug_assert_ne!(id, ROOT);
        let parent = self.nodes[id as usize].parent;
        let children = &mut self.nodes[parent as usize].children;
        if let Some(pos) = children.iter().position(|c| c.1 == id) {
            children.remove(pos);
        }
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            let node = &mut self.nodes[cur as usize];
            node.live = false;
            stack.extend(node.children.drain(..).map(|c| c.1));
            self.free.push(cur);
            self.node_count -= 1;
        }
    }

    pub(crate) fn window_entries<'w>(&self, window: &'w HistoryWindow) -> &'w [Entry] {
        let e = window.entries();
        &e[..e.len().min(MAX_WINDOW_ENTRIES)]
    }

    /// Step 1, run for every received spike. `window` is the history of the
    /// received event, which is excluded from it.
    ///
    /// Every top-level subtree whose level-1 channel equals the event channel
    /// is active: its level-1 denominator is incremented unconditionally and
    /// every descendant whose pattern, measured relative to the level-1 node,
    /// matches the window has its denominator incremented.
    pub fn step1_denominators(&mut self, channel: Channel, time: Time, window: &HistoryWindow) {
        self.elapsed = self.elapsed.max(time);
        let entries = self.window_entries(window);
        let tol = self.params.matching_interval;
        let mut matched = Vec::new();
        let mut stack: Vec<(NodeId, u128)> = Vec::new();
        for &(_, l1) in self.nodes[ROOT as usize].children_in(channel, 0, Delay::MAX) {
            matched.push(l1);
            stack.push((l1, 0));
            let anchor = self.nodes[l1 as usize].cum_delay;
            while let Some((id, used)) = stack.pop() {
                let node = &self.nodes[id as usize];
                let rel = node.cum_delay - anchor;
                for (j, e) in entries.iter().enumerate() {
                    if used & (1u128 << j) != 0 {
                        continue;
                    }
                    let lo = e.delay.saturating_sub(tol).saturating_sub(rel);
                    let Some(hi) = (e.delay + tol).checked_sub(rel) else {
                        continue;
                    };
                    for &(_, child) in node.children_in(e.channel, lo, hi) {
                        matched.push(child);
                        stack.push((child, used | (1u128 << j)));
                    }
                }
            }
        }
        matched.sort_unstable();
        matched.dedup();
        for id in matched {
            let node = &mut self.nodes[id as usize];
            if node.kind == NodeKind::Excitatory {
                node.denominator += 1;
            }
        }
    }

    /// All `(node, used-entry mask)` states reachable when matching paths from
    /// the root against `entries` with delays relative to the root.
    pub(crate) fn root_states(&self, entries: &[Entry]) -> Vec<(NodeId, u128)> {
        let tol = self.params.matching_interval;
        let mut out = Vec::new();
        let mut stack: Vec<(NodeId, u128)> = vec![(ROOT, 0)];
        while let Some((id, used)) = stack.pop() {
            let node = &self.nodes[id as usize];
            let cum = node.cum_delay;
            for (j, e) in entries.iter().enumerate() {
                if used & (1u128 << j) != 0 {
                    continue;
                }
                let lo = e.delay.saturating_sub(tol).saturating_sub(cum);
                let Some(hi) = (e.delay + tol).checked_sub(cum) else {
                    continue;
                };
                for &(_, child) in node.children_in(e.channel, lo, hi) {
                    let state = (child, used | (1u128 << j));
                    out.push(state);
                    stack.push(state);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Step 2, run for a spike in the preferred channel with history `window`.
    ///
    /// Increments `n(g)` and the numerator of every matching excitatory node,
    /// then extends the root and every matching node whose numerator exceeds
    /// the branch extension threshold with the window entries that continue
    /// its subsequence. New nodes start at numerator 1 and denominator 1 and
    /// are themselves extended within the same step when 1 exceeds the
    /// threshold, which gives one-shot learning at threshold 0.
    pub fn step2_numerators_and_extend(&mut self, time: Time, window: &HistoryWindow) {
        self.elapsed = self.elapsed.max(time);
        self.root_count += 1;
        let entries: Vec<Entry> = self.window_entries(window).to_vec();
        let states = self.root_states(&entries);

        // group states per node; `states` is sorted by node id
        let mut grouped: Vec<(NodeId, Vec<u128>)> = Vec::new();
        for (id, used) in states {
            match grouped.last_mut() {
                Some((last, masks)) if *last == id => masks.push(used),
                _ => grouped.push((id, vec![used])),
            }
        }

        let threshold = self.params.branch_extension_threshold;
        let mut work: Vec<(NodeId, Vec<u128>)> = vec![(ROOT, vec![0])];
        for (id, masks) in grouped {
            let node = &mut self.nodes[id as usize];
            if node.kind == NodeKind::Excitatory {
                node.numerator += 1;
                if node.numerator > threshold {
                    work.push((id, masks));
                }
            }
        }

        let tol = self.params.matching_interval;
        while let Some((parent, masks)) = work.pop() {
            let cum = self.nodes[parent as usize].cum_delay;
            let mut created: Vec<NodeId> = Vec::new();
            for &used in &masks {
                for (j, e) in entries.iter().enumerate() {
                    if used & (1u128 << j) != 0 || e.delay < cum {
                        continue;
                    }
                    let key = (e.channel, e.delay - cum);
                    if !self.child_allowed(parent, key) {
                        continue;
                    }
                    match self.nodes[parent as usize].child(key) {
                        None => created.push(self.add_child(parent, key, NodeKind::Excitatory, (1, 1))),
                        Some(child) => {
                            let node = &mut self.nodes[child as usize];
                            if node.kind != NodeKind::Excitatory {
                                node.kind = NodeKind::Excitatory;
                                node.numerator = 1;
                                node.denominator = 1;
                                created.push(child);
                            }
                        }
                    }
                }
            }
            if 1 <= threshold {
                continue;
            }
            created.sort_unstable();
            created.dedup();
            for child in created {
                let (ch, child_cum) = {
                    let n = &self.nodes[child as usize];
                    (n.channel, n.cum_delay)
                };
                let mut child_masks: Vec<u128> = Vec::new();
                for &used in &masks {
                    for (j, e) in entries.iter().enumerate() {
                        if used & (1u128 << j) == 0 && e.channel == ch && e.delay.abs_diff(child_cum) <= tol {
                            child_masks.push(used | (1u128 << j));
                        }
                    }
                }
                child_masks.sort_unstable();
                child_masks.dedup();
                work.push((child, child_masks));
            }
        }
    }

    /// Learns one received event: step 1 always, step 2 when the event is in
    /// the preferred channel.
    pub fn learn(&mut self, channel: Channel, time: Time, window: &HistoryWindow) {
        self.step1_denominators(channel, time, window);
        if channel == self.preferred {
            self.step2_numerators_and_extend(time, window);
        }
    }

    /// Nodes whose subsequence matches `window`, long enough to be used for
    /// prediction and either inhibitory or excitatory with a usable
    /// denominator, in canonical subsequence order.
    pub fn matching_nodes(&self, window: &HistoryWindow) -> Vec<MatchedNode> {
        let entries = self.window_entries(window);
        let mut ids: Vec<NodeId> = self.root_states(entries).into_iter().map(|s| s.0).collect();
        ids.dedup();
        let mut out: Vec<MatchedNode> = ids
            .into_iter()
            .filter(|&id| self.usable(id))
            .map(|id| {
                let n = &self.nodes[id as usize];
                MatchedNode {
                    id,
                    subsequence: self.path(id),
                    numerator: n.numerator,
                    denominator: n.denominator,
                    inhibitory: matches!(n.kind, NodeKind::Inhibitory { .. }),
                }
            })
            .collect();
        out.sort_by(|a, b| a.subsequence.canonical_cmp(&b.subsequence));
        out
    }

    /// Whether a node may contribute a prediction candidate.
    pub(crate) fn usable(&self, id: NodeId) -> bool {
        let n = &self.nodes[id as usize];
        if (n.depth as usize) < self.params.min_subseq_len {
            return false;
        }
        match n.kind {
            NodeKind::Excitatory => n.denominator >= self.params.frequency_threshold.max(1),
            NodeKind::Inhibitory { .. } => true,
            NodeKind::Structural => false,
        }
    }

    /// Deterministic depth-first text dump, one `(delay,channel,numerator,
    /// denominator,inhibitory)` tuple per node indented two spaces per level.
    /// Inhibitory nodes print their joint and false-negative counts in the
    /// count columns.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# g={} root_count={} nodes={}",
            self.preferred, self.root_count, self.node_count
        );
        let mut stack: Vec<NodeId> = self.nodes[0].children.iter().rev().map(|c| c.1).collect();
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id as usize];
            let (a, b, flag) = match n.kind {
                NodeKind::Excitatory => (n.numerator, n.denominator, 0),
                NodeKind::Inhibitory { joint, false_negatives } => (joint, false_negatives, 1),
                NodeKind::Structural => (0, 0, 0),
            };
            let indent = (n.depth as usize - 1) * 2;
            let _ = writeln!(
                out,
                "{:indent$}({},{},{},{},{})",
                "", n.edge_delay, n.channel, a, b, flag
            );
            stack.extend(n.children.iter().rev().map(|c| c.1));
        }
        out
    }
}
