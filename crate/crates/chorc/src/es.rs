//! Finite labelled prime event structures over communication labels, and
//! the algebra used by the choreography semantics: projection, tensor, sum,
//! sequential composition, configuration enumeration, well-branchedness,
//! well-forkedness, isomorphism and canonical numbering.
//!
//! Causality is stored as a strict generator relation; the partial order is
//! its reflexive-transitive closure. The conflict relation is stored fully
//! hereditarily closed.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::{Message, Participant};

/// Output (`!`) or input (`?`) half of a communication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Output,
    Input,
}

/// A communication action `AB!m` (A sends m to B) or `AB?m` (B receives m
/// from A). Sender and receiver are always distinct.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub sender: Participant,
    pub receiver: Participant,
    pub polarity: Polarity,
    pub msg: Message,
}

impl Label {
    pub fn output(sender: Participant, receiver: Participant, msg: Message) -> Label {
        assert_ne!(sender, receiver, "channels exclude the diagonal");
        Label {
            sender,
            receiver,
            polarity: Polarity::Output,
            msg,
        }
    }

    pub fn input(sender: Participant, receiver: Participant, msg: Message) -> Label {
        assert_ne!(sender, receiver, "channels exclude the diagonal");
        Label {
            sender,
            receiver,
            polarity: Polarity::Input,
            msg,
        }
    }

    /// The participant performing the action: the sender of an output, the
    /// receiver of an input.
    pub fn subject(&self) -> &Participant {
        match self.polarity {
            Polarity::Output => &self.sender,
            Polarity::Input => &self.receiver,
        }
    }

    /// Flips the polarity only; involutive.
    pub fn co_action(&self) -> Label {
        Label {
            polarity: match self.polarity {
                Polarity::Output => Polarity::Input,
                Polarity::Input => Polarity::Output,
            },
            ..self.clone()
        }
    }

    pub fn is_output(&self) -> bool {
        self.polarity == Polarity::Output
    }

    pub fn is_input(&self) -> bool {
        self.polarity == Polarity::Input
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.polarity {
            Polarity::Output => '!',
            Polarity::Input => '?',
        };
        write!(f, "{}{}{}{}", self.sender, self.receiver, p, self.msg)
    }
}

/// Index of an event within one [`EventStructure`]; dense in `0..n`.
pub type EventId = usize;

/// A downward-closed, conflict-free set of events of some parent structure.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Configuration {
    pub items: BTreeSet<EventId>,
}

/// A finite labelled prime event structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventStructure {
    /// Event `e` carries label `labels[e]`; events are `0..labels.len()`.
    labels: Vec<Label>,
    /// Strict causality generator pairs `(e, e')` meaning `e < e'`.
    cause: BTreeSet<(EventId, EventId)>,
    /// Unordered conflict pairs, normalised as `(lo, hi)`, hereditarily
    /// closed.
    conflict: BTreeSet<(EventId, EventId)>,
}

/// Invariant violations reported by [`EventStructure::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    CausalityCycle(Vec<EventId>),
    CauseOutOfRange(EventId, EventId),
    ConflictOutOfRange(EventId, EventId),
    ReflexiveConflict(EventId),
    /// `e # e'` and `e' <= e''` but `e # e''` is missing.
    HereditarityGap(EventId, EventId, EventId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::CausalityCycle(cycle) => write!(f, "causality cycle through {cycle:?}"),
            Violation::CauseOutOfRange(a, b) => write!(f, "cause pair ({a},{b}) out of range"),
            Violation::ConflictOutOfRange(a, b) => {
                write!(f, "conflict pair ({a},{b}) out of range")
            }
            Violation::ReflexiveConflict(e) => write!(f, "event {e} conflicts with itself"),
            Violation::HereditarityGap(a, b, c) => {
                write!(f, "{a} # {b} and {b} <= {c} but {a} # {c} is missing")
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EsError {
    #[error("configuration enumeration exceeded cap of {cap}")]
    ConfigExplosion { cap: usize },
}

/// Default bound on the number of maximal configurations enumerated.
pub const DEFAULT_CAP: usize = 4096;

fn norm(a: EventId, b: EventId) -> (EventId, EventId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl EventStructure {
    /// The empty event structure.
    pub fn empty() -> EventStructure {
        EventStructure {
            labels: Vec::new(),
            cause: BTreeSet::new(),
            conflict: BTreeSet::new(),
        }
    }

    /// Builds a structure from raw parts. Conflicts are normalised and
    /// hereditarily closed; causality pairs are kept as given (use
    /// [`validate`](Self::validate) to check acyclicity).
    pub fn from_parts(
        labels: Vec<Label>,
        cause: impl IntoIterator<Item = (EventId, EventId)>,
        conflict: impl IntoIterator<Item = (EventId, EventId)>,
    ) -> EventStructure {
        let mut es = EventStructure {
            labels,
            cause: cause.into_iter().collect(),
            conflict: conflict.into_iter().map(|(a, b)| norm(a, b)).collect(),
        };
        es.close_conflicts();
        es
    }

    /// The two-event structure `AB!m < AB?m` interpreting one interaction.
    pub fn interaction(sender: Participant, receiver: Participant, msg: Message) -> EventStructure {
        let out = Label::output(sender.clone(), receiver.clone(), msg.clone());
        let inp = Label::input(sender, receiver, msg);
        EventStructure {
            labels: vec![out, inp],
            cause: [(0, 1)].into_iter().collect(),
            conflict: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn events(&self) -> impl Iterator<Item = EventId> {
        0..self.labels.len()
    }

    pub fn label(&self, e: EventId) -> &Label {
        &self.labels[e]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// The image of the labelling map.
    pub fn label_set(&self) -> BTreeSet<Label> {
        self.labels.iter().cloned().collect()
    }

    pub fn cause_pairs(&self) -> &BTreeSet<(EventId, EventId)> {
        &self.cause
    }

    pub fn conflict_pairs(&self) -> &BTreeSet<(EventId, EventId)> {
        &self.conflict
    }

    pub fn in_conflict(&self, a: EventId, b: EventId) -> bool {
        self.conflict.contains(&norm(a, b))
    }

    /// Strict-order matrix: `leq[a][b]` iff `a < b` in the transitive
    /// closure of the generator relation.
    pub fn strict_lt(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut lt = vec![vec![false; n]; n];
        for &(a, b) in &self.cause {
            lt[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if lt[i][k] {
                    for j in 0..n {
                        if lt[k][j] {
                            lt[i][j] = true;
                        }
                    }
                }
            }
        }
        lt
    }

    /// `a <= b` in the reflexive-transitive closure.
    pub fn leq(&self, a: EventId, b: EventId) -> bool {
        a == b || self.strict_lt()[a][b]
    }

    fn close_conflicts(&mut self) {
        let lt = self.strict_lt();
        let n = self.len();
        loop {
            let mut added = false;
            let current: Vec<_> = self.conflict.iter().cloned().collect();
            for (a, b) in current {
                // a # b and b <= c  ==>  a # c   (and symmetrically)
                for c in 0..n {
                    if lt[b][c] && self.conflict.insert(norm(a, c)) {
                        added = true;
                    }
                    if lt[a][c] && self.conflict.insert(norm(b, c)) {
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
    }

    /// Reports every violated structural invariant; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.len();
        let mut out = Vec::new();
        for &(a, b) in &self.cause {
            if a >= n || b >= n {
                out.push(Violation::CauseOutOfRange(a, b));
            }
        }
        for &(a, b) in &self.conflict {
            if a >= n || b >= n {
                out.push(Violation::ConflictOutOfRange(a, b));
            } else if a == b {
                out.push(Violation::ReflexiveConflict(a));
            }
        }
        if !out.is_empty() {
            return out;
        }
        // acyclicity: a < a in the strict closure marks a cycle
        let lt = self.strict_lt();
        let cyclic: Vec<_> = (0..n).filter(|&e| lt[e][e]).collect();
        if !cyclic.is_empty() {
            out.push(Violation::CausalityCycle(cyclic));
        }
        for &(a, b) in &self.conflict {
            for c in 0..n {
                if lt[b][c] && !self.in_conflict(a, c) {
                    out.push(Violation::HereditarityGap(a, b, c));
                }
                if lt[a][c] && !self.in_conflict(b, c) {
                    out.push(Violation::HereditarityGap(b, a, c));
                }
            }
        }
        out
    }

    /// Events with no strict predecessor.
    pub fn minimals(&self) -> BTreeSet<EventId> {
        let lt = self.strict_lt();
        self.events()
            .filter(|&e| (0..self.len()).all(|d| !lt[d][e]))
            .collect()
    }

    /// Events with no strict successor.
    pub fn maximals(&self) -> BTreeSet<EventId> {
        let lt = self.strict_lt();
        self.events()
            .filter(|&e| (0..self.len()).all(|d| !lt[e][d]))
            .collect()
    }

    /// Labels of a set of events.
    pub fn labels_of(&self, events: &BTreeSet<EventId>) -> BTreeSet<Label> {
        events.iter().map(|&e| self.labels[e].clone()).collect()
    }

    /// Restriction to the events whose label subject is `p`.
    pub fn project(&self, p: &Participant) -> EventStructure {
        let keep: Vec<EventId> = self
            .events()
            .filter(|&e| self.labels[e].subject() == p)
            .collect();
        self.restrict(&keep)
    }

    /// Restriction to an arbitrary event subset (order and conflict cut to
    /// the surviving pairs; causality pairs come from the closed order so
    /// that reachability through removed events is kept).
    fn restrict(&self, keep: &[EventId]) -> EventStructure {
        let lt = self.strict_lt();
        let mut cause = BTreeSet::new();
        let mut conflict = BTreeSet::new();
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                if lt[a][b] {
                    cause.insert((i, j));
                }
                if a < b && self.in_conflict(a, b) {
                    conflict.insert(norm(i, j));
                }
            }
        }
        EventStructure {
            labels: keep.iter().map(|&e| self.labels[e].clone()).collect(),
            cause,
            conflict,
        }
    }

    /// Disjoint union preserving orders, conflicts and labellings; no
    /// cross relations.
    pub fn tensor(&self, other: &EventStructure) -> EventStructure {
        let off = self.len();
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let mut cause = self.cause.clone();
        cause.extend(other.cause.iter().map(|&(a, b)| (a + off, b + off)));
        let mut conflict = self.conflict.clone();
        conflict.extend(other.conflict.iter().map(|&(a, b)| (a + off, b + off)));
        EventStructure {
            labels,
            cause,
            conflict,
        }
    }

    /// Disjoint union of a family, with every cross-member pair in
    /// conflict.
    pub fn sum(family: &[EventStructure]) -> EventStructure {
        assert!(!family.is_empty(), "sum of an empty family");
        let mut labels = Vec::new();
        let mut cause = BTreeSet::new();
        let mut conflict = BTreeSet::new();
        let mut offsets = Vec::new();
        for member in family {
            let off = labels.len();
            offsets.push(off);
            labels.extend(member.labels.iter().cloned());
            cause.extend(member.cause.iter().map(|&(a, b)| (a + off, b + off)));
            conflict.extend(member.conflict.iter().map(|&(a, b)| norm(a + off, b + off)));
        }
        for (i, member) in family.iter().enumerate() {
            for (j, other) in family.iter().enumerate().skip(i + 1) {
                for a in 0..member.len() {
                    for b in 0..other.len() {
                        conflict.insert(norm(offsets[i] + a, offsets[j] + b));
                    }
                }
            }
        }
        EventStructure {
            labels,
            cause,
            conflict,
        }
    }

    /// Binary sum.
    pub fn plus(&self, other: &EventStructure) -> EventStructure {
        EventStructure::sum(&[self.clone(), other.clone()])
    }

    /// All ⊆-maximal configurations, in deterministic order. `ε` has the
    /// single maximal configuration `∅`.
    pub fn max_configurations(&self, cap: usize) -> Result<Vec<Configuration>, EsError> {
        let n = self.len();
        let lt = self.strict_lt();
        let preds: Vec<Vec<EventId>> = (0..n)
            .map(|e| (0..n).filter(|&d| lt[d][e]).collect())
            .collect();
        // visit events in a topological order so that an event's
        // predecessors are decided before the event itself
        let mut topo: Vec<EventId> = (0..n).collect();
        topo.sort_by_key(|&e| (preds[e].len(), e));
        let mut out = Vec::new();
        let mut included = vec![false; n];
        self.enumerate_max(0, &topo, &preds, &mut included, &mut out, cap)?;
        Ok(out)
    }

    fn enabled(&self, e: EventId, preds: &[Vec<EventId>], included: &[bool]) -> bool {
        preds[e].iter().all(|&d| included[d])
            && (0..self.len()).all(|d| !included[d] || !self.in_conflict(d, e))
    }

    fn enumerate_max(
        &self,
        depth: usize,
        topo: &[EventId],
        preds: &[Vec<EventId>],
        included: &mut Vec<bool>,
        out: &mut Vec<Configuration>,
        cap: usize,
    ) -> Result<(), EsError> {
        if depth == topo.len() {
            // maximal iff no left-out event is enabled by the included set
            let maximal = (0..self.len())
                .all(|e| included[e] || !self.enabled(e, preds, included));
            if maximal {
                if out.len() >= cap {
                    return Err(EsError::ConfigExplosion { cap });
                }
                out.push(Configuration {
                    items: (0..self.len()).filter(|&e| included[e]).collect(),
                });
            }
            return Ok(());
        }
        let next = topo[depth];
        if self.enabled(next, preds, included) {
            included[next] = true;
            self.enumerate_max(depth + 1, topo, preds, included, out, cap)?;
            included[next] = false;
        }
        self.enumerate_max(depth + 1, topo, preds, included, out, cap)?;
        Ok(())
    }

    /// Sequential composition: one disjoint copy of `other` per maximal
    /// configuration `x` of `self`, with every event of `x` causing the
    /// copy's events of the same subject; causality is transitively closed
    /// and conflicts hereditarily closed afterwards.
    ///
    /// Each copy additionally conflicts with the events outside its own
    /// branch `x`. Without this a copy event whose subject never occurs in
    /// `x` would have no causal link into `x` and could float into
    /// configurations of other branches, letting a branch end on that
    /// orphan output; tying copies to their branches keeps every complete
    /// branch of the composition of the form `x ∪ y` with `y` a complete
    /// branch of the copy.
    pub fn seq_compose(&self, other: &EventStructure, cap: usize) -> Result<EventStructure, EsError> {
        let maxc = self.max_configurations(cap)?;
        let copies: Vec<EventStructure> = maxc.iter().map(|_| other.clone()).collect();
        let mut result = if copies.is_empty() {
            // unreachable: every finite ES has at least one maximal
            // configuration
            self.clone()
        } else {
            self.tensor(&EventStructure::sum(&copies))
        };
        let base = self.len();
        for (k, x) in maxc.iter().enumerate() {
            let off = base + k * other.len();
            for &e in &x.items {
                for e2 in 0..other.len() {
                    if self.labels[e].subject() == other.labels[e2].subject() {
                        result.cause.insert((e, off + e2));
                    }
                }
            }
            for e in 0..self.len() {
                if x.items.contains(&e) {
                    continue;
                }
                for e2 in 0..other.len() {
                    let (a, b) = (e.min(off + e2), e.max(off + e2));
                    result.conflict.insert((a, b));
                }
            }
        }
        result.close_conflicts();
        Ok(result)
    }

    /// Disjointness of label images.
    pub fn well_forked(&self, other: &EventStructure) -> bool {
        self.label_set().is_disjoint(&other.label_set())
    }

    /// Checks the two well-branchedness conditions on `self + other` and
    /// returns the selector on success.
    pub fn well_branched(&self, other: &EventStructure) -> WbResult {
        let sum = self.plus(other);
        let mut participants: BTreeSet<Participant> = BTreeSet::new();
        for l in self.labels.iter().chain(other.labels.iter()) {
            participants.insert(l.subject().clone());
        }

        // determined choice
        for p in &participants {
            let left = self.project(p);
            let right = other.project(p);
            if left.is_empty() != right.is_empty() {
                return WbResult::fail(WbFailure::DeterminedChoiceEmptiness { participant: p.clone() });
            }
            let proj = sum.project(p);
            let mins: Vec<EventId> = proj.minimals().into_iter().collect();
            for (i, &a) in mins.iter().enumerate() {
                for &b in &mins[i + 1..] {
                    if proj.in_conflict(a, b) && proj.labels[a] == proj.labels[b] {
                        return WbResult::fail(WbFailure::DeterminedChoiceAmbiguous {
                            participant: p.clone(),
                            label: proj.labels[a].clone(),
                        });
                    }
                }
            }
        }

        // unique selector
        let mut selector = None;
        for p in &participants {
            let proj = sum.project(p);
            let min_labels = proj.labels_of(&proj.minimals());
            let all_outputs =
                !min_labels.is_empty() && min_labels.iter().all(|l| l.is_output() && l.subject() == p);
            if all_outputs {
                if let Some(first) = selector {
                    return WbResult::fail(WbFailure::MultipleSelectors {
                        first,
                        second: p.clone(),
                    });
                }
                selector = Some(p.clone());
            } else if !min_labels.iter().all(|l| l.is_input() && l.subject() == p) {
                return WbResult::fail(WbFailure::MixedMinimalActions { participant: p.clone() });
            }
        }
        match selector {
            Some(active) => WbResult {
                well_branched: true,
                selector: Some(active),
                failure: None,
            },
            None => WbResult::fail(WbFailure::NoSelector),
        }
    }

    /// True iff a label-preserving bijection matching the (closed) order
    /// and conflict relations exists. Backtracking search, intended for
    /// desk-scale structures.
    pub fn isomorphic(&self, other: &EventStructure) -> bool {
        if self.len() != other.len() {
            return false;
        }
        if self.label_multiset() != other.label_multiset() {
            return false;
        }
        let lt_a = self.strict_lt();
        let lt_b = other.strict_lt();
        let n = self.len();
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        self.find_iso(0, other, &lt_a, &lt_b, &mut map, &mut used)
    }

    fn label_multiset(&self) -> Vec<Label> {
        let mut v = self.labels.clone();
        v.sort();
        v
    }

    fn find_iso(
        &self,
        e: EventId,
        other: &EventStructure,
        lt_a: &[Vec<bool>],
        lt_b: &[Vec<bool>],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        let n = self.len();
        if e == n {
            return true;
        }
        for cand in 0..n {
            if used[cand] || other.labels[cand] != self.labels[e] {
                continue;
            }
            let consistent = (0..e).all(|d| {
                lt_a[d][e] == lt_b[map[d]][cand]
                    && lt_a[e][d] == lt_b[cand][map[d]]
                    && self.in_conflict(d, e) == other.in_conflict(map[d], cand)
            });
            if consistent {
                map[e] = cand;
                used[cand] = true;
                if self.find_iso(e + 1, other, lt_a, lt_b, map, used) {
                    return true;
                }
                used[cand] = false;
                map[e] = usize::MAX;
            }
        }
        false
    }

    /// Renumbers events deterministically by causal depth, then label,
    /// then the sorted list of already-renumbered predecessors. Idempotent
    /// and isomorphism-preserving.
    pub fn canonicalize(&self) -> EventStructure {
        let n = self.len();
        if n == 0 {
            return EventStructure::empty();
        }
        let lt = self.strict_lt();
        let mut depth = vec![0usize; n];
        let mut order: Vec<EventId> = (0..n).collect();
        order.sort_by_key(|&e| (0..n).filter(|&d| lt[d][e]).count());
        for &e in &order {
            depth[e] = (0..n)
                .filter(|&d| lt[d][e])
                .map(|d| depth[d] + 1)
                .max()
                .unwrap_or(0);
        }
        let max_depth = depth.iter().copied().max().unwrap_or(0);
        let mut new_id = vec![usize::MAX; n];
        let mut assigned = 0usize;
        for level in 0..=max_depth {
            let mut layer: Vec<EventId> = (0..n).filter(|&e| depth[e] == level).collect();
            layer.sort_by(|&a, &b| {
                let key = |e: EventId| {
                    let mut preds: Vec<usize> =
                        (0..n).filter(|&d| lt[d][e]).map(|d| new_id[d]).collect();
                    preds.sort();
                    (self.labels[e].clone(), preds, e)
                };
                key(a).cmp(&key(b))
            });
            for e in layer {
                new_id[e] = assigned;
                assigned += 1;
            }
        }
        let mut labels = vec![self.labels[0].clone(); n];
        for e in 0..n {
            labels[new_id[e]] = self.labels[e].clone();
        }
        let cause = self
            .cause
            .iter()
            .map(|&(a, b)| (new_id[a], new_id[b]))
            .collect();
        let conflict = self
            .conflict
            .iter()
            .map(|&(a, b)| norm(new_id[a], new_id[b]))
            .collect();
        EventStructure {
            labels,
            cause,
            conflict,
        }
    }

    /// Minimal events of a configuration under the restricted order.
    pub fn config_minimals(&self, x: &Configuration) -> BTreeSet<EventId> {
        let lt = self.strict_lt();
        x.items
            .iter()
            .copied()
            .filter(|&e| x.items.iter().all(|&d| !lt[d][e]))
            .collect()
    }

    /// Maximal events of a configuration under the restricted order.
    pub fn config_maximals(&self, x: &Configuration) -> BTreeSet<EventId> {
        let lt = self.strict_lt();
        x.items
            .iter()
            .copied()
            .filter(|&e| x.items.iter().all(|&d| !lt[e][d]))
            .collect()
    }

    /// Maximal events, under ≤, of the subset of `x` whose label subject
    /// is `p`.
    pub fn config_subject_maximals(&self, x: &Configuration, p: &Participant) -> BTreeSet<EventId> {
        let lt = self.strict_lt();
        let mine: Vec<EventId> = x
            .items
            .iter()
            .copied()
            .filter(|&e| self.labels[e].subject() == p)
            .collect();
        mine.iter()
            .copied()
            .filter(|&e| mine.iter().all(|&d| !lt[e][d]))
            .collect()
    }

    /// Checks that a set of events is a configuration of this structure.
    pub fn is_configuration(&self, items: &BTreeSet<EventId>) -> bool {
        let lt = self.strict_lt();
        let closed = items
            .iter()
            .all(|&e| (0..self.len()).all(|d| !lt[d][e] || items.contains(&d)));
        let consistent = items
            .iter()
            .all(|&a| items.iter().all(|&b| a == b || !self.in_conflict(a, b)));
        closed && consistent
    }
}

/// Outcome of the well-branchedness check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WbResult {
    pub well_branched: bool,
    /// The active participant, when the check succeeds.
    pub selector: Option<Participant>,
    pub failure: Option<WbFailure>,
}

impl WbResult {
    fn fail(failure: WbFailure) -> WbResult {
        WbResult {
            well_branched: false,
            selector: None,
            failure: Some(failure),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WbFailure {
    /// One branch involves the participant, the other does not.
    DeterminedChoiceEmptiness { participant: Participant },
    /// Two conflicting minimal events of the participant's projection carry
    /// the same label.
    DeterminedChoiceAmbiguous { participant: Participant, label: Label },
    /// A participant's minimal actions mix outputs and inputs.
    MixedMinimalActions { participant: Participant },
    MultipleSelectors { first: Participant, second: Participant },
    NoSelector,
}

impl WbFailure {
    /// The participant the failure is about, when there is one.
    pub fn participant(&self) -> Option<&Participant> {
        match self {
            WbFailure::DeterminedChoiceEmptiness { participant }
            | WbFailure::DeterminedChoiceAmbiguous { participant, .. }
            | WbFailure::MixedMinimalActions { participant } => Some(participant),
            WbFailure::MultipleSelectors { second, .. } => Some(second),
            WbFailure::NoSelector => None,
        }
    }

    pub fn is_determined_choice(&self) -> bool {
        matches!(
            self,
            WbFailure::DeterminedChoiceEmptiness { .. }
                | WbFailure::DeterminedChoiceAmbiguous { .. }
        )
    }
}

impl fmt::Display for WbFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WbFailure::DeterminedChoiceEmptiness { participant } => write!(
                f,
                "determined choice fails for participant {participant}: present in one branch only"
            ),
            WbFailure::DeterminedChoiceAmbiguous { participant, label } => write!(
                f,
                "determined choice fails for participant {participant}: conflicting minimal events share label {label}"
            ),
            WbFailure::MixedMinimalActions { participant } => write!(
                f,
                "unique selector fails: participant {participant} has minimal outputs besides another selector or mixed minimal actions"
            ),
            WbFailure::MultipleSelectors { first, second } => write!(
                f,
                "unique selector fails: both {first} and {second} start with outputs"
            ),
            WbFailure::NoSelector => write!(f, "unique selector fails: no participant starts with outputs only"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn pt(s: &str) -> Participant {
        Participant::new(s).unwrap()
    }

    fn msg(s: &str) -> Message {
        Message::new(s).unwrap()
    }

    fn lbl(s: &str) -> Label {
        // test shorthand: "AB!m" with single-character participant names
        let mut chars = s.chars();
        let a = chars.next().unwrap().to_string();
        let b = chars.next().unwrap().to_string();
        let pol = chars.next().unwrap();
        let m: String = chars.collect();
        match pol {
            '!' => Label::output(pt(&a), pt(&b), msg(&m)),
            '?' => Label::input(pt(&a), pt(&b), msg(&m)),
            _ => panic!("bad label {s}"),
        }
    }

    fn interp(src: &str) -> EventStructure {
        crate::semantics::interpret(&parse(src).unwrap(), DEFAULT_CAP)
            .into_result()
            .unwrap()
    }

    #[test]
    fn subject_of_labels() {
        assert_eq!(lbl("AB!m").subject(), &pt("A"));
        assert_eq!(lbl("AB?m").subject(), &pt("B"));
        assert_eq!(lbl("CS?req").subject(), &pt("S"));
    }

    #[test]
    fn co_action_flips_polarity_only() {
        assert_eq!(lbl("AB!m").co_action(), lbl("AB?m"));
        assert_eq!(lbl("AB?m").co_action(), lbl("AB!m"));
        let l = lbl("CS!req");
        assert_eq!(l.co_action().co_action(), l);
    }

    #[test]
    fn validate_empty_and_chain() {
        assert!(EventStructure::empty().validate().is_empty());
        let chain = EventStructure::interaction(pt("A"), pt("B"), msg("m"));
        assert!(chain.validate().is_empty());
    }

    #[test]
    fn validate_reports_hereditarity_gap() {
        // e1 # e2, e2 <= e3 but e1 # e3 missing; bypass from_parts' closure
        let mut es = EventStructure::from_parts(
            vec![lbl("AB!m"), lbl("AB!n"), lbl("AB?n")],
            [(1, 2)],
            [],
        );
        es.conflict.insert((0, 1));
        let v = es.validate();
        assert!(v.contains(&Violation::HereditarityGap(0, 1, 2)));
    }

    #[test]
    fn validate_reports_cycle() {
        let es = EventStructure::from_parts(vec![lbl("AB!m"), lbl("AB?m")], [(0, 1), (1, 0)], []);
        assert!(matches!(es.validate()[0], Violation::CausalityCycle(_)));
    }

    #[test]
    fn validate_reports_reflexive_conflict() {
        let es = EventStructure::from_parts(vec![lbl("AB!m")], [], [(0, 0)]);
        assert!(es.validate().contains(&Violation::ReflexiveConflict(0)));
    }

    #[test]
    fn projection_of_running_example() {
        let es = interp("C -> S : md + (C -> S : req ; (S -> C : stats ; S -> C : done))");
        let on_c = es.project(&pt("C"));
        let expected_c = EventStructure::from_parts(
            vec![lbl("CS!md"), lbl("CS!req"), lbl("SC?stats"), lbl("SC?done")],
            [(1, 2), (2, 3)],
            [(0, 1)],
        );
        assert!(on_c.isomorphic(&expected_c));
        let on_s = es.project(&pt("S"));
        let expected_s = EventStructure::from_parts(
            vec![lbl("CS?md"), lbl("CS?req"), lbl("SC!stats"), lbl("SC!done")],
            [(1, 2), (2, 3)],
            [(0, 1)],
        );
        assert!(on_s.isomorphic(&expected_s));
    }

    #[test]
    fn project_empty() {
        assert_eq!(EventStructure::empty().project(&pt("A")), EventStructure::empty());
    }

    #[test]
    fn project_keeps_exactly_subject_events() {
        let es = interp("A -> B : m ; B -> C : n");
        let on_b = es.project(&pt("B"));
        assert!(on_b.labels().iter().all(|l| l.subject() == &pt("B")));
        assert_eq!(on_b.len(), 2); // AB?m and BC!n
    }

    #[test]
    fn tensor_counts_and_unit() {
        let a = EventStructure::interaction(pt("A"), pt("B"), msg("m"));
        let b = EventStructure::interaction(pt("C"), pt("D"), msg("n"));
        let t = a.tensor(&b);
        assert_eq!(t.len(), a.len() + b.len());
        assert!(t.conflict_pairs().is_empty());
        assert!(EventStructure::empty().tensor(&b).isomorphic(&b));
    }

    #[test]
    fn sum_introduces_cross_conflicts() {
        let a = EventStructure::interaction(pt("A"), pt("B"), msg("m"));
        let s = EventStructure::sum(&[a.clone(), a.clone()]);
        assert_eq!(s.len(), 4);
        for left in 0..2 {
            for right in 2..4 {
                assert!(s.in_conflict(left, right));
            }
        }
        assert!(EventStructure::sum(&[a.clone()]).isomorphic(&a));
    }

    #[test]
    fn sum_matches_paper_running_example() {
        let left = interp("C -> S : md");
        let right = interp("C -> S : req ; (S -> C : stats ; S -> C : done)");
        let sum = left.plus(&right);
        let es = interp("C -> S : md + (C -> S : req ; (S -> C : stats ; S -> C : done))");
        assert!(sum.isomorphic(&es));
        assert_eq!(sum.len(), 8);
    }

    #[test]
    fn minimals_maximals() {
        assert!(EventStructure::empty().minimals().is_empty());
        let chain = EventStructure::interaction(pt("A"), pt("B"), msg("m"));
        assert_eq!(chain.maximals(), [1].into_iter().collect());
        let es = interp("C -> S : md + (C -> S : req ; (S -> C : stats ; S -> C : done))");
        let min_labels = es.labels_of(&es.minimals());
        assert_eq!(min_labels, [lbl("CS!md"), lbl("CS!req")].into_iter().collect());
    }

    #[test]
    fn max_configurations_empty_and_running() {
        let maxc = EventStructure::empty().max_configurations(16).unwrap();
        assert_eq!(maxc.len(), 1);
        assert!(maxc[0].items.is_empty());

        let es = interp("C -> S : md + (C -> S : req ; (S -> C : stats ; S -> C : done))");
        let maxc = es.max_configurations(16).unwrap();
        let mut sizes: Vec<_> = maxc.iter().map(|x| x.items.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 6]);
        for x in &maxc {
            assert!(es.is_configuration(&x.items));
        }
    }

    #[test]
    fn max_configurations_tensor_single() {
        let a = EventStructure::interaction(pt("A"), pt("B"), msg("m"));
        let b = EventStructure::interaction(pt("C"), pt("D"), msg("n"));
        let maxc = a.tensor(&b).max_configurations(16).unwrap();
        assert_eq!(maxc.len(), 1);
        assert_eq!(maxc[0].items.len(), 4);
    }

    #[test]
    fn max_configurations_cap() {
        // n independent binary choices: 2^n maximal configurations
        let choice = interp("A -> B : m + A -> B : n");
        let mut es = EventStructure::empty();
        for _ in 0..5 {
            es = es.tensor(&choice);
        }
        assert!(matches!(
            es.max_configurations(16),
            Err(EsError::ConfigExplosion { cap: 16 })
        ));
        assert_eq!(es.max_configurations(32).unwrap().len(), 32);
    }

    #[test]
    fn seq_compose_units() {
        let b = interp("A -> B : m ; B -> C : n");
        let e = EventStructure::empty();
        assert!(e.seq_compose(&b, 16).unwrap().isomorphic(&b));
        assert!(b.seq_compose(&e, 16).unwrap().isomorphic(&b));
    }

    #[test]
    fn seq_compose_paper_right_branch() {
        let es = interp("C -> S : req ; (S -> C : stats ; S -> C : done)");
        let expected = EventStructure::from_parts(
            vec![
                lbl("CS!req"),
                lbl("CS?req"),
                lbl("SC!stats"),
                lbl("SC?stats"),
                lbl("SC!done"),
                lbl("SC?done"),
            ],
            [(0, 1), (1, 2), (2, 3), (2, 4), (4, 5), (3, 5)],
            [],
        );
        assert!(es.isomorphic(&expected));
    }

    #[test]
    fn seq_compose_after_choice_copies_right_operand() {
        let left = interp("A -> B : m + A -> B : n");
        let right = interp("A -> B : k");
        let es = left.seq_compose(&right, 16).unwrap();
        assert_eq!(es.len(), left.len() + 2 * right.len());
        let maxc = es.max_configurations(16).unwrap();
        assert_eq!(maxc.len(), 2);
        for x in &maxc {
            assert_eq!(x.items.len(), 4);
        }
        // the two k-copies are mutually in conflict
        let k_events: Vec<_> = es
            .events()
            .filter(|&e| es.label(e).msg == msg("k"))
            .collect();
        assert_eq!(k_events.len(), 4);
        let copies_conflict = maxc
            .iter()
            .all(|x| k_events.iter().filter(|e| x.items.contains(e)).count() == 2);
        assert!(copies_conflict);
    }

    #[test]
    fn well_forked_examples() {
        let a = interp("A -> B : m ; B -> C : m");
        let b = interp("A -> B : m ; B -> D : n");
        assert!(!a.well_forked(&b));
        let c = interp("A -> B : m");
        let d = interp("C -> D : n");
        assert!(c.well_forked(&d));
        assert!(EventStructure::empty().well_forked(&a));
    }

    #[test]
    fn well_branched_running_example() {
        let a = interp("C -> S : md");
        let b = interp("C -> S : req ; (S -> C : stats ; S -> C : done)");
        let wb = a.well_branched(&b);
        assert!(wb.well_branched);
        assert_eq!(wb.selector, Some(pt("C")));
    }

    #[test]
    fn well_branched_fails_determined_choice() {
        let a = interp("C -> B : md ; B -> S : md");
        let b = interp("C -> S : req ; S -> C : done");
        let wb = a.well_branched(&b);
        assert!(!wb.well_branched);
        let failure = wb.failure.unwrap();
        assert!(failure.is_determined_choice());
        assert_eq!(failure.participant(), Some(&pt("B")));
    }

    #[test]
    fn well_branched_fails_unique_selector() {
        let a = interp("A -> C : m ; B -> C : m");
        let b = interp("A -> C : n ; B -> C : n");
        let wb = a.well_branched(&b);
        assert!(!wb.well_branched);
        let failure = wb.failure.unwrap();
        assert!(!failure.is_determined_choice());
    }

    #[test]
    fn isomorphism_basics() {
        let a = interp("A -> B : m");
        assert!(a.isomorphic(&a));
        let b = interp("A -> B : n");
        assert!(!a.isomorphic(&b));
        let c = interp("C -> D : n");
        assert!(a.tensor(&c).isomorphic(&c.tensor(&a)));
    }

    #[test]
    fn isomorphism_distinguishes_order() {
        let seq = interp("A -> B : m ; A -> B : m");
        let mut labels = seq.labels().to_vec();
        labels.sort();
        let flat = EventStructure::from_parts(labels, [], []);
        assert_eq!(seq.len(), flat.len());
        assert!(!seq.isomorphic(&flat));
    }

    #[test]
    fn canonicalize_idempotent_and_isomorphic() {
        let es = interp("C -> S : md + (C -> S : req ; (S -> C : stats ; S -> C : done))");
        let c1 = es.canonicalize();
        assert!(c1.isomorphic(&es));
        assert_eq!(c1.canonicalize(), c1);
        assert_eq!(EventStructure::empty().canonicalize(), EventStructure::empty());
    }

    #[test]
    fn canonicalize_merges_numberings() {
        let a = interp("A -> B : m");
        let b = interp("C -> D : n");
        let left = a.tensor(&b);
        let right = b.tensor(&a);
        assert_eq!(left.canonicalize(), right.canonicalize());
    }
}
