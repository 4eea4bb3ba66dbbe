//! Term generators and sweep drivers: exhaustive enumeration and seeded
//! random generation of g-choreographies, plus checks that typability
//! really entails well-formedness and that the per-configuration shape
//! facts (singleton per-participant maxima, output minima / input maxima)
//! hold on every generated term.

use std::fmt;
use std::rc::Rc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::es::EsError;
use crate::refine::{eligible_targets, refines};
use crate::semantics::{interpret, DiagnosticKind, SemResult};
use crate::syntax::{GChor, Message, Participant, RefinableAction};
use crate::typing::{type_of_ground, validate_ref_context};

/// Parameters shared by the enumerator and the random generator.
#[derive(Clone, Debug)]
pub struct GenParams {
    /// Upper bound on the number of interaction/refinable leaves.
    pub max_leaves: usize,
    pub participants: Vec<Participant>,
    pub messages: Vec<Message>,
    pub allow_refinable: bool,
    /// Only consulted by [`gen_random`].
    pub seed: u64,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParamsError {
    #[error("need at least two participants")]
    TooFewParticipants,
    #[error("need at least one message")]
    NoMessages,
}

impl GenParams {
    /// The default sweep alphabet: {A,B,C} x {m,n}, ground terms only.
    pub fn standard(max_leaves: usize) -> GenParams {
        let pt = |s: &str| Participant::new(s).unwrap();
        let msg = |s: &str| Message::new(s).unwrap();
        GenParams {
            max_leaves,
            participants: vec![pt("A"), pt("B"), pt("C")],
            messages: vec![msg("m"), msg("n")],
            allow_refinable: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.participants.len() < 2 {
            return Err(ParamsError::TooFewParticipants);
        }
        if self.messages.is_empty() {
            return Err(ParamsError::NoMessages);
        }
        Ok(())
    }

    fn leaves(&self) -> Vec<GChor> {
        let mut out = Vec::new();
        for a in &self.participants {
            for b in &self.participants {
                if a == b {
                    continue;
                }
                for m in &self.messages {
                    out.push(GChor::Interaction {
                        sender: a.clone(),
                        receiver: b.clone(),
                        msg: m.clone(),
                    });
                }
            }
        }
        if self.allow_refinable {
            for a in &self.participants {
                for b in &self.participants {
                    if a == b {
                        continue;
                    }
                    for m in &self.messages {
                        out.push(GChor::Refinable(RefinableAction {
                            initiator: a.clone(),
                            targets: vec![(m.clone(), b.clone())],
                            tag: None,
                        }));
                    }
                }
            }
        }
        out
    }
}

fn combine(op: usize, l: GChor, r: GChor) -> GChor {
    match op {
        0 => GChor::Seq(Box::new(l), Box::new(r)),
        1 => GChor::Par(Box::new(l), Box::new(r)),
        _ => GChor::Choice(Box::new(l), Box::new(r)),
    }
}

/// Builds the full list of terms with exactly `k` leaves, given the lists
/// for all smaller leaf counts.
fn level(k: usize, lower: &[Vec<GChor>], params: &GenParams) -> Vec<GChor> {
    if k == 0 {
        return vec![GChor::Empty];
    }
    if k == 1 {
        return params.leaves();
    }
    let mut out = Vec::new();
    for op in 0..3 {
        for k1 in 1..k {
            for l in &lower[k1] {
                for r in &lower[k - k1] {
                    out.push(combine(op, l.clone(), r.clone()));
                }
            }
        }
    }
    out
}

/// Enumerates every term with at most `max_leaves` leaves, exactly once,
/// in a deterministic order: leaf count ascending, then operator, then
/// split, then operand order. The top level streams lazily; lower levels
/// are cached, so memory stays proportional to the second-largest level.
pub fn enumerate(params: &GenParams) -> impl Iterator<Item = GChor> {
    params.validate().expect("invalid generator parameters");
    let max = params.max_leaves;
    let mut lower: Vec<Vec<GChor>> = Vec::new();
    for k in 0..max {
        let lv = level(k, &lower, params);
        lower.push(lv);
    }
    let lower = Rc::new(lower);
    let cached = {
        let lower = lower.clone();
        (0..max).flat_map(move |k| {
            let lower = lower.clone();
            (0..lower[k].len()).map(move |i| lower[k][i].clone())
        })
    };
    let top: Box<dyn Iterator<Item = GChor>> = if max == 0 {
        Box::new(std::iter::once(GChor::Empty))
    } else if max == 1 {
        Box::new(params.leaves().into_iter())
    } else {
        let lower2 = lower.clone();
        Box::new((0..3).flat_map(move |op| {
            let lower = lower2.clone();
            (1..max).flat_map(move |k1| {
                let lower = lower.clone();
                (0..lower[k1].len()).flat_map(move |i| {
                    let lower = lower.clone();
                    (0..lower[max - k1].len()).map(move |j| {
                        combine(op, lower[k1][i].clone(), lower[max - k1][j].clone())
                    })
                })
            })
        }))
    };
    cached.chain(top)
}

/// Draws one term, reproducibly: the same parameters (including seed)
/// always yield the same term.
pub fn gen_random(params: &GenParams) -> GChor {
    params.validate().expect("invalid generator parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let k = rng.gen_range(0..=params.max_leaves);
    gen_sized(&mut rng, k, params)
}

fn gen_sized(rng: &mut ChaCha8Rng, k: usize, params: &GenParams) -> GChor {
    if k == 0 {
        return GChor::Empty;
    }
    if k == 1 {
        let leaves = params.leaves();
        return leaves[rng.gen_range(0..leaves.len())].clone();
    }
    let op = rng.gen_range(0..3);
    let k1 = rng.gen_range(1..k);
    let l = gen_sized(rng, k1, params);
    let r = gen_sized(rng, k - k1, params);
    combine(op, l, r)
}

/// One failed check, with enough context to replay it standalone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// The term, pretty-printed (reparses to the same AST).
    pub term: String,
    pub property: String,
    pub witness: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.term, self.property, self.witness)
    }
}

/// Aggregate outcome of a sweep.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub total: usize,
    pub typable: usize,
    pub wf: usize,
    /// Terms whose configuration enumeration exceeded the cap.
    pub skipped: usize,
    pub violations: Vec<Violation>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn violate(&mut self, g: &GChor, property: &str, witness: String) {
        self.violations.push(Violation {
            term: g.to_string(),
            property: property.to_string(),
            witness,
        });
    }
}

fn is_explosion(kind: &DiagnosticKind) -> bool {
    matches!(kind, DiagnosticKind::ConfigExplosion { .. })
}

/// Checks on one ground term that typability implies a defined semantics
/// whose participants and per-participant minimal/maximal projection
/// labels match the type, and that re-typing is deterministic.
pub fn soundness_check(g: &GChor, cap: usize, report: &mut SweepReport) {
    report.total += 1;
    let ty = match type_of_ground(g) {
        Ok(ty) => {
            report.typable += 1;
            Some(ty)
        }
        Err(_) => None,
    };
    if let Some(ty) = &ty {
        match type_of_ground(g) {
            Ok(again) if again == *ty => {}
            other => report.violate(g, "unique typing", format!("retype gave {other:?}")),
        }
    }
    let es = match interpret(g, cap) {
        SemResult::Defined(es) => {
            report.wf += 1;
            Some(es)
        }
        SemResult::Bottom(d) if is_explosion(&d.kind) => {
            report.skipped += 1;
            return;
        }
        SemResult::Bottom(_) => None,
    };
    let Some(ty) = ty else { return };
    let Some(es) = es else {
        report.violate(g, "typable implies well-formed", "semantics undefined".into());
        return;
    };
    if ty.pi != g.participants() {
        report.violate(
            g,
            "type participants equal term participants",
            format!("{:?} vs {:?}", ty.pi, g.participants()),
        );
    }
    for p in &ty.pi {
        let proj = es.project(p);
        let min_labels = proj.labels_of(&proj.minimals());
        let max_labels = proj.labels_of(&proj.maximals());
        if crate::typing::hat(&ty.first, p) != min_labels {
            report.violate(
                g,
                "first labels match minimal projection events",
                format!("at {p}"),
            );
        }
        if crate::typing::hat(&ty.last, p) != max_labels {
            report.violate(
                g,
                "last labels match maximal projection events",
                format!("at {p}"),
            );
        }
    }
}

/// Per-configuration shape checks plus refinement-admission soundness on
/// one ground term.
pub fn metatheory_check(g: &GChor, cap: usize, report: &mut SweepReport) {
    report.total += 1;
    let ty = match type_of_ground(g) {
        Ok(ty) => {
            report.typable += 1;
            Some(ty)
        }
        Err(_) => None,
    };
    let es = match interpret(g, cap) {
        SemResult::Defined(es) => {
            report.wf += 1;
            es
        }
        SemResult::Bottom(d) if is_explosion(&d.kind) => {
            report.skipped += 1;
            return;
        }
        SemResult::Bottom(_) => return,
    };
    if es.is_empty() {
        return;
    }
    let maxcs = match es.max_configurations(cap) {
        Ok(m) => m,
        Err(EsError::ConfigExplosion { .. }) => {
            report.skipped += 1;
            return;
        }
    };
    let participants = g.participants();
    for x in &maxcs {
        // every complete branch starts with outputs and ends with inputs
        let mins = es.labels_of(&es.config_minimals(x));
        if mins.is_empty() || !mins.iter().all(|l| l.is_output()) {
            report.violate(
                g,
                "configuration minima are nonempty outputs",
                format!("{mins:?}"),
            );
        }
        let maxs = es.labels_of(&es.config_maximals(x));
        if maxs.is_empty() || !maxs.iter().all(|l| l.is_input()) {
            report.violate(
                g,
                "configuration maxima are nonempty inputs",
                format!("{maxs:?}"),
            );
        }
        if ty.is_some() {
            // per participant, a branch has at most one last event
            for p in &participants {
                let m = es.config_subject_maximals(x, p);
                if m.len() > 1 {
                    report.violate(
                        g,
                        "per-participant branch maxima are singletons",
                        format!("{p} has {} maxima", m.len()),
                    );
                }
            }
        }
    }
    // admission soundness: a context-validated action is semantically
    // refined by the term it was read off of
    if let Some(ty) = ty {
        let initiators: std::collections::BTreeSet<&Participant> = ty
            .first
            .iter()
            .filter(|l| l.is_output())
            .map(|l| l.subject())
            .collect();
        if initiators.len() != 1 {
            return;
        }
        let initiator = (*initiators.iter().next().unwrap()).clone();
        let targets = eligible_targets(&ty, &initiator);
        for mask in 1u32..(1 << targets.len()) {
            let chosen: Vec<_> = targets
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, t)| t.clone())
                .collect();
            let action = RefinableAction {
                initiator: initiator.clone(),
                targets: chosen,
                tag: None,
            };
            if validate_ref_context(&action, &ty).is_err() {
                continue;
            }
            match refines(g, &action, cap) {
                Ok(r) if r.holds => {}
                Ok(r) => report.violate(
                    g,
                    "validated context implies semantic refinement",
                    format!("action {action:?} fails {:?}", r.failed_clause),
                ),
                Err(_) => report.skipped += 1,
            }
        }
    }
}

/// Runs [`soundness_check`] over an exhaustive enumeration.
pub fn soundness_sweep(params: &GenParams, cap: usize) -> SweepReport {
    run_sweep(params, cap, soundness_check)
}

/// Runs [`metatheory_check`] over an exhaustive enumeration.
pub fn metatheory_sweep(params: &GenParams, cap: usize) -> SweepReport {
    run_sweep(params, cap, metatheory_check)
}

/// Distributes the enumeration over worker threads. Workers own their
/// partial reports; the merge sums the counters and sorts the violations,
/// so the result does not depend on scheduling.
fn run_sweep(
    params: &GenParams,
    cap: usize,
    check: fn(&GChor, usize, &mut SweepReport),
) -> SweepReport {
    use std::sync::mpsc;
    use std::sync::{Arc, Mutex};

    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    if workers == 1 {
        let mut report = SweepReport::default();
        for g in enumerate(params) {
            check(&g, cap, &mut report);
        }
        report
            .violations
            .sort_by(|a, b| (&a.term, &a.property).cmp(&(&b.term, &b.property)));
        return report;
    }
    let mut report = std::thread::scope(|scope| {
        let (tx, rx) = mpsc::sync_channel::<Vec<GChor>>(workers * 4);
        let rx = Arc::new(Mutex::new(rx));
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                let rx = rx.clone();
                scope.spawn(move || {
                    let mut report = SweepReport::default();
                    loop {
                        let batch = {
                            let rx = rx.lock().unwrap();
                            rx.recv()
                        };
                        let Ok(batch) = batch else { break };
                        for g in &batch {
                            check(g, cap, &mut report);
                        }
                    }
                    report
                })
            })
            .collect();
        let mut batch = Vec::with_capacity(1024);
        for g in enumerate(params) {
            batch.push(g);
            if batch.len() == 1024 {
                tx.send(std::mem::take(&mut batch)).unwrap();
                batch.reserve(1024);
            }
        }
        if !batch.is_empty() {
            tx.send(batch).unwrap();
        }
        drop(tx);
        let mut merged = SweepReport::default();
        for h in handles {
            let part = h.join().unwrap();
            merged.total += part.total;
            merged.typable += part.typable;
            merged.wf += part.wf;
            merged.skipped += part.skipped;
            merged.violations.extend(part.violations);
        }
        merged
    });
    report
        .violations
        .sort_by(|a, b| (&a.term, &a.property).cmp(&(&b.term, &b.property)));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::es::DEFAULT_CAP;
    use crate::syntax::parse;

    fn small_params(max_leaves: usize, participants: &[&str], messages: &[&str]) -> GenParams {
        GenParams {
            max_leaves,
            participants: participants
                .iter()
                .map(|s| Participant::new(*s).unwrap())
                .collect(),
            messages: messages.iter().map(|s| Message::new(*s).unwrap()).collect(),
            allow_refinable: false,
            seed: 0,
        }
    }

    #[test]
    fn enumerate_one_leaf_two_participants() {
        let got: Vec<String> = enumerate(&small_params(1, &["A", "B"], &["m"]))
            .map(|g| g.to_string())
            .collect();
        assert_eq!(got, vec!["0", "A -> B : m", "B -> A : m"]);
    }

    #[test]
    fn enumerate_zero_leaves() {
        let got: Vec<GChor> = enumerate(&small_params(0, &["A", "B"], &["m"])).collect();
        assert_eq!(got, vec![GChor::Empty]);
    }

    #[test]
    fn enumeration_counts() {
        // 12 one-leaf terms over {A,B,C} x {m,n}; 3 * 12 * 12 two-leaf terms
        let params = GenParams::standard(2);
        let terms: Vec<GChor> = enumerate(&params).collect();
        assert_eq!(terms.len(), 1 + 12 + 432);
    }

    #[test]
    fn enumeration_is_duplicate_free_and_replayable() {
        let params = GenParams::standard(2);
        let a: Vec<GChor> = enumerate(&params).collect();
        let b: Vec<GChor> = enumerate(&params).collect();
        assert_eq!(a, b);
        let set: std::collections::BTreeSet<&GChor> = a.iter().collect();
        assert_eq!(set.len(), a.len());
    }

    #[test]
    fn enumeration_with_refinables() {
        let mut params = small_params(1, &["A", "B"], &["m"]);
        params.allow_refinable = true;
        let got: Vec<String> = enumerate(&params).map(|g| g.to_string()).collect();
        assert_eq!(
            got,
            vec![
                "0",
                "A -> B : m",
                "B -> A : m",
                "A ~> {m : B}",
                "B ~> {m : A}"
            ]
        );
    }

    #[test]
    fn gen_random_is_reproducible() {
        let mut params = GenParams::standard(4);
        params.seed = 42;
        let a = gen_random(&params);
        let b = gen_random(&params);
        assert_eq!(a, b);
        assert!(count_leaves(&a) <= 4);
    }

    fn count_leaves(g: &GChor) -> usize {
        match g {
            GChor::Empty => 0,
            GChor::Interaction { .. } | GChor::Refinable(_) => 1,
            GChor::Seq(l, r) | GChor::Par(l, r) | GChor::Choice(l, r) => {
                count_leaves(l) + count_leaves(r)
            }
        }
    }

    #[test]
    fn random_terms_respect_leaf_bound() {
        for seed in 0..50 {
            let mut params = GenParams::standard(3);
            params.seed = seed;
            assert!(count_leaves(&gen_random(&params)) <= 3);
        }
    }

    #[test]
    fn soundness_single_running_example() {
        let g = parse("C -> S : md + (C -> S : req ; (S -> C : stats ; S -> C : done))").unwrap();
        let mut report = SweepReport::default();
        soundness_check(&g, DEFAULT_CAP, &mut report);
        assert_eq!(report.typable, 1);
        assert_eq!(report.wf, 1);
        assert!(report.passed(), "{:?}", report.violations);
    }

    #[test]
    fn soundness_untypable_wf_term_is_not_a_violation() {
        let g = parse("A -> B : m | A -> C : m").unwrap();
        let mut report = SweepReport::default();
        soundness_check(&g, DEFAULT_CAP, &mut report);
        assert_eq!(report.typable, 0);
        assert_eq!(report.wf, 1);
        assert!(report.passed());
    }

    #[test]
    fn soundness_sweep_two_leaves() {
        let report = soundness_sweep(&GenParams::standard(2), DEFAULT_CAP);
        assert_eq!(report.total, 445);
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.typable > 0);
        assert!(report.wf >= report.typable);
    }

    #[test]
    fn metatheory_sweep_two_leaves() {
        let report = metatheory_sweep(&GenParams::standard(2), DEFAULT_CAP);
        assert_eq!(report.total, 445);
        assert!(report.passed(), "{:?}", report.violations);
    }

    #[test]
    fn metatheory_forwarding_chain_admission() {
        let g = parse("C -> B : md ; B -> S : md").unwrap();
        let mut report = SweepReport::default();
        metatheory_check(&g, DEFAULT_CAP, &mut report);
        assert!(report.passed(), "{:?}", report.violations);
    }

    #[test]
    fn metatheory_skips_empty_semantics() {
        let g = parse("0").unwrap();
        let mut report = SweepReport::default();
        metatheory_check(&g, DEFAULT_CAP, &mut report);
        assert!(report.passed());
    }
}
