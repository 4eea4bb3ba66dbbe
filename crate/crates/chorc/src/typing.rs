//! The typing discipline for (refinable) g-choreographies: label-set
//! arithmetic, the choice compatibility condition, and syntax-directed
//! type checking.
//!
//! A type is a triple (Π, φ, Λ): the participants of the term, the labels
//! of its first events and the labels of its last events. Typability is a
//! sufficient, purely syntactic condition for well-formedness; no event
//! structures are built here.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::es::Label;
use crate::syntax::{path_display, GChor, Message, Participant, Path, RefinableAction};

/// A finite set of communication labels.
pub type LabelSet = BTreeSet<Label>;

/// The type of a g-choreography: participants, first labels, last labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChorType {
    pub pi: BTreeSet<Participant>,
    pub first: LabelSet,
    pub last: LabelSet,
}

/// A typing context for one refinable action; same shape as a type.
pub type RefContext = ChorType;

impl ChorType {
    pub fn new(
        pi: impl IntoIterator<Item = Participant>,
        first: impl IntoIterator<Item = Label>,
        last: impl IntoIterator<Item = Label>,
    ) -> ChorType {
        ChorType {
            pi: pi.into_iter().collect(),
            first: first.into_iter().collect(),
            last: last.into_iter().collect(),
        }
    }
}

/// Labels of `ls` whose subject is `p` (the hat mapping).
pub fn hat(ls: &LabelSet, p: &Participant) -> LabelSet {
    ls.iter().filter(|l| l.subject() == p).cloned().collect()
}

/// Removes from `ls` the labels whose subject lies in `pi`.
pub fn minus(ls: &LabelSet, pi: &BTreeSet<Participant>) -> LabelSet {
    ls.iter()
        .filter(|l| !pi.contains(l.subject()))
        .cloned()
        .collect()
}

/// Subjects of a label set.
pub fn subjects(ls: &LabelSet) -> BTreeSet<Participant> {
    ls.iter().map(|l| l.subject().clone()).collect()
}

/// Disjoint sets of output labels only.
pub fn output_uniform(u: &LabelSet, v: &LabelSet) -> bool {
    u.is_disjoint(v) && u.iter().chain(v.iter()).all(|l| l.is_output())
}

/// Disjoint sets of input labels only.
pub fn input_uniform(u: &LabelSet, v: &LabelSet) -> bool {
    u.is_disjoint(v) && u.iter().chain(v.iter()).all(|l| l.is_input())
}

/// Why `compch` rejected a pair of first-label sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompchFailure {
    NoSelector,
    MultipleSelectors {
        first: Participant,
        second: Participant,
    },
    PassiveNotInputUniform {
        participant: Participant,
    },
    PassiveEmptinessMismatch {
        participant: Participant,
    },
}

impl fmt::Display for CompchFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompchFailure::NoSelector => {
                write!(f, "no participant has output-uniform non-empty first labels in both branches")
            }
            CompchFailure::MultipleSelectors { first, second } => {
                write!(f, "both {first} and {second} qualify as selector")
            }
            CompchFailure::PassiveNotInputUniform { participant } => {
                write!(f, "first labels of {participant} are not input uniform")
            }
            CompchFailure::PassiveEmptinessMismatch { participant } => {
                write!(f, "{participant} starts in one branch but not in the other")
            }
        }
    }
}

/// The side condition of the choice rule: exactly one participant of `pi`
/// opens both branches with disjoint outputs, every other one with
/// matching, disjoint inputs. Returns the selector on success.
pub fn compch(
    phi1: &LabelSet,
    phi2: &LabelSet,
    pi: &BTreeSet<Participant>,
) -> Result<Participant, CompchFailure> {
    let mut selector = None;
    for p in pi {
        let u = hat(phi1, p);
        let v = hat(phi2, p);
        if output_uniform(&u, &v) && !u.is_empty() && !v.is_empty() {
            if let Some(first) = selector {
                return Err(CompchFailure::MultipleSelectors {
                    first,
                    second: p.clone(),
                });
            }
            selector = Some(p.clone());
        }
    }
    let Some(selector) = selector else {
        return Err(CompchFailure::NoSelector);
    };
    for p in pi {
        if *p == selector {
            continue;
        }
        let u = hat(phi1, p);
        let v = hat(phi2, p);
        if !input_uniform(&u, &v) {
            return Err(CompchFailure::PassiveNotInputUniform {
                participant: p.clone(),
            });
        }
        if u.is_empty() != v.is_empty() {
            return Err(CompchFailure::PassiveEmptinessMismatch {
                participant: p.clone(),
            });
        }
    }
    Ok(selector)
}

/// The typing rule violated by a term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Int,
    Seq,
    Par,
    Ch,
    Ref,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rule::Int => "t-int",
            Rule::Seq => "t-seq",
            Rule::Par => "t-par",
            Rule::Ch => "t-ch",
            Rule::Ref => "t-ref",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeErrorKind {
    /// Parallel operands share participants.
    ParOverlap { overlap: BTreeSet<Participant> },
    /// Choice operands have different participant contexts.
    ChoiceContextMismatch {
        left: BTreeSet<Participant>,
        right: BTreeSet<Participant>,
    },
    /// The compch side condition failed.
    ChoiceCompch { failure: CompchFailure },
    /// A refinable action's context violates a t-ref side condition.
    InvalidRefContext { reason: RefContextFailure },
    /// No context was supplied for a refinable occurrence and defaults are
    /// disabled.
    MissingRefContext { tag: String },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{rule} fails at {}: {}", path_display(path), kind_msg(kind))]
pub struct TypeError {
    pub rule: Rule,
    pub path: Path,
    pub kind: TypeErrorKind,
}

fn kind_msg(kind: &TypeErrorKind) -> String {
    match kind {
        TypeErrorKind::ParOverlap { overlap } => {
            let names: Vec<_> = overlap.iter().map(|p| p.to_string()).collect();
            format!("participants {{{}}} occur on both sides", names.join(","))
        }
        TypeErrorKind::ChoiceContextMismatch { left, right } => {
            let fmt_set = |s: &BTreeSet<Participant>| {
                let names: Vec<_> = s.iter().map(|p| p.to_string()).collect();
                format!("{{{}}}", names.join(","))
            };
            format!("contexts differ: {} != {}", fmt_set(left), fmt_set(right))
        }
        TypeErrorKind::ChoiceCompch { failure } => format!("compch fails: {failure}"),
        TypeErrorKind::InvalidRefContext { reason } => format!("invalid context: {reason}"),
        TypeErrorKind::MissingRefContext { tag } => {
            format!("no typing context for refinable occurrence {tag:?}")
        }
    }
}

/// Why a refinable action's context fails the t-ref side conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefContextFailure {
    /// sbj(φ) and sbj(Λ) must both equal Π.
    SubjectsNotPi,
    /// The outputs of φ must have exactly the initiator as subject.
    FirstOutputsNotInitiator,
    /// Λ restricted to a target must be a single input of its message.
    TargetLastNotSingleInput { dest: Participant, msg: Message },
}

impl fmt::Display for RefContextFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefContextFailure::SubjectsNotPi => {
                write!(f, "subjects of first/last label sets do not both equal the participant context")
            }
            RefContextFailure::FirstOutputsNotInitiator => {
                write!(f, "outputs among the first labels are not exactly those of the initiator")
            }
            RefContextFailure::TargetLastNotSingleInput { dest, msg } => {
                write!(f, "last labels of {dest} are not a single input of {msg}")
            }
        }
    }
}

/// The canonical context of a refinable action: its own participants, with
/// first = last = the output/input pair of each promised delivery.
pub fn default_ref_context(action: &RefinableAction) -> RefContext {
    let mut pi: BTreeSet<Participant> = BTreeSet::new();
    pi.insert(action.initiator.clone());
    let mut labels = LabelSet::new();
    for (msg, dest) in &action.targets {
        pi.insert(dest.clone());
        labels.insert(Label::output(
            action.initiator.clone(),
            dest.clone(),
            msg.clone(),
        ));
        labels.insert(Label::input(
            action.initiator.clone(),
            dest.clone(),
            msg.clone(),
        ));
    }
    ChorType {
        pi,
        first: labels.clone(),
        last: labels,
    }
}

/// Checks the three t-ref side conditions of a context against an action.
pub fn validate_ref_context(
    action: &RefinableAction,
    ctx: &RefContext,
) -> Result<(), RefContextFailure> {
    if subjects(&ctx.first) != ctx.pi || subjects(&ctx.last) != ctx.pi {
        return Err(RefContextFailure::SubjectsNotPi);
    }
    let out_subjects: BTreeSet<Participant> = ctx
        .first
        .iter()
        .filter(|l| l.is_output())
        .map(|l| l.subject().clone())
        .collect();
    if out_subjects.len() != 1 || !out_subjects.contains(&action.initiator) {
        return Err(RefContextFailure::FirstOutputsNotInitiator);
    }
    for (msg, dest) in &action.targets {
        let at_dest = hat(&ctx.last, dest);
        let ok = at_dest.len() == 1
            && at_dest
                .iter()
                .all(|l| l.is_input() && &l.receiver == dest && &l.msg == msg);
        if !ok {
            return Err(RefContextFailure::TargetLastNotSingleInput {
                dest: dest.clone(),
                msg: msg.clone(),
            });
        }
    }
    Ok(())
}

/// How contexts for refinable occurrences are resolved during typing.
#[derive(Clone, Debug, Default)]
pub struct RefContexts {
    /// Explicit contexts by occurrence name (user tag or `rN`).
    pub by_tag: BTreeMap<String, RefContext>,
    /// Fall back to [`default_ref_context`] for occurrences without an
    /// explicit entry.
    pub use_default: bool,
}

impl RefContexts {
    pub fn defaults() -> RefContexts {
        RefContexts {
            by_tag: BTreeMap::new(),
            use_default: true,
        }
    }

    pub fn explicit(by_tag: BTreeMap<String, RefContext>) -> RefContexts {
        RefContexts {
            by_tag,
            use_default: false,
        }
    }
}

/// Computes the unique type of a term, syntax-directed. Ground terms need
/// no contexts; refinable occurrences resolve their context by tag, then
/// by default when enabled.
pub fn type_of(g: &GChor, ctxs: &RefContexts) -> Result<ChorType, TypeError> {
    // occurrence names depend on global preorder position, so resolve them
    // up front
    let mut names: BTreeMap<Path, String> = BTreeMap::new();
    for (name, path, _) in g.refinable_occurrences() {
        names.insert(path, name);
    }
    let mut path = Vec::new();
    type_rec(g, ctxs, &names, &mut path)
}

fn type_rec(
    g: &GChor,
    ctxs: &RefContexts,
    names: &BTreeMap<Path, String>,
    path: &mut Path,
) -> Result<ChorType, TypeError> {
    match g {
        GChor::Empty => Ok(ChorType::new([], [], [])),
        GChor::Interaction {
            sender,
            receiver,
            msg,
        } => {
            let out = Label::output(sender.clone(), receiver.clone(), msg.clone());
            let inp = out.co_action();
            Ok(ChorType::new(
                [sender.clone(), receiver.clone()],
                [out.clone(), inp.clone()],
                [out, inp],
            ))
        }
        GChor::Refinable(action) => {
            let name = names
                .get(path)
                .cloned()
                .unwrap_or_else(|| "?".to_string());
            let ctx = match ctxs.by_tag.get(&name) {
                Some(ctx) => ctx.clone(),
                None if ctxs.use_default => default_ref_context(action),
                None => {
                    return Err(TypeError {
                        rule: Rule::Ref,
                        path: path.clone(),
                        kind: TypeErrorKind::MissingRefContext { tag: name },
                    })
                }
            };
            validate_ref_context(action, &ctx).map_err(|reason| TypeError {
                rule: Rule::Ref,
                path: path.clone(),
                kind: TypeErrorKind::InvalidRefContext { reason },
            })?;
            Ok(ctx)
        }
        GChor::Seq(l, r) => {
            let (t1, t2) = type_children(l, r, ctxs, names, path)?;
            Ok(ChorType {
                pi: t1.pi.union(&t2.pi).cloned().collect(),
                first: t1
                    .first
                    .union(&minus(&t2.first, &t1.pi))
                    .cloned()
                    .collect(),
                last: t2.last.union(&minus(&t1.last, &t2.pi)).cloned().collect(),
            })
        }
        GChor::Par(l, r) => {
            let (t1, t2) = type_children(l, r, ctxs, names, path)?;
            let overlap: BTreeSet<Participant> = t1.pi.intersection(&t2.pi).cloned().collect();
            if !overlap.is_empty() {
                return Err(TypeError {
                    rule: Rule::Par,
                    path: path.clone(),
                    kind: TypeErrorKind::ParOverlap { overlap },
                });
            }
            Ok(ChorType {
                pi: t1.pi.union(&t2.pi).cloned().collect(),
                first: t1.first.union(&t2.first).cloned().collect(),
                last: t1.last.union(&t2.last).cloned().collect(),
            })
        }
        GChor::Choice(l, r) => {
            let (t1, t2) = type_children(l, r, ctxs, names, path)?;
            if t1.pi != t2.pi {
                return Err(TypeError {
                    rule: Rule::Ch,
                    path: path.clone(),
                    kind: TypeErrorKind::ChoiceContextMismatch {
                        left: t1.pi,
                        right: t2.pi,
                    },
                });
            }
            compch(&t1.first, &t2.first, &t1.pi).map_err(|failure| TypeError {
                rule: Rule::Ch,
                path: path.clone(),
                kind: TypeErrorKind::ChoiceCompch { failure },
            })?;
            Ok(ChorType {
                pi: t1.pi,
                first: t1.first.union(&t2.first).cloned().collect(),
                last: t1.last.union(&t2.last).cloned().collect(),
            })
        }
    }
}

fn type_children(
    l: &GChor,
    r: &GChor,
    ctxs: &RefContexts,
    names: &BTreeMap<Path, String>,
    path: &mut Path,
) -> Result<(ChorType, ChorType), TypeError> {
    path.push(0);
    let t1 = type_rec(l, ctxs, names, path);
    path.pop();
    let t1 = t1?;
    path.push(1);
    let t2 = type_rec(r, ctxs, names, path);
    path.pop();
    Ok((t1, t2?))
}

/// Types a ground term (no contexts involved).
pub fn type_of_ground(g: &GChor) -> Result<ChorType, TypeError> {
    type_of(g, &RefContexts::default())
}
