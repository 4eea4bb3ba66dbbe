//! Refinement of refinable actions by ground sub-protocols: the semantic
//! refines relation, context inference, hole substitution and the
//! refine-and-recheck workflow.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::es::{Configuration, Label};
use crate::semantics::{interpret, Diagnostic};
use crate::syntax::{GChor, Participant, Path, RefinableAction};
use crate::typing::{
    type_of, type_of_ground, validate_ref_context, ChorType, RefContext, RefContextFailure,
    RefContexts, TypeError,
};

/// A ground replacement for one refinable occurrence, addressed by its
/// occurrence name (user tag or positional `rN`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub tag: String,
    pub replacement: GChor,
}

impl Binding {
    pub fn new(tag: impl Into<String>, replacement: GChor) -> Binding {
        Binding {
            tag: tag.into(),
            replacement,
        }
    }
}

/// Which clause of the refines relation failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinesClause {
    /// The candidate's semantics is undefined.
    Semantics,
    /// The minimal events do not all belong to the action's initiator.
    Initiator,
    /// Some promised message is not a terminal input at its target in
    /// some complete branch.
    TerminalInput,
}

impl fmt::Display for RefinesClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RefinesClause::Semantics => "semantics undefined",
            RefinesClause::Initiator => "unique initiator",
            RefinesClause::TerminalInput => "terminal input at target",
        };
        f.write_str(s)
    }
}

/// Evidence accompanying a failed refines check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefinesWitness {
    Bottom(Diagnostic),
    MinimalSubjects(BTreeSet<Participant>),
    MissingDelivery {
        configuration: Configuration,
        target: Participant,
        msg: crate::syntax::Message,
    },
}

/// Outcome of the semantic refines check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefReport {
    pub holds: bool,
    pub initiator_found: Option<Participant>,
    pub failed_clause: Option<RefinesClause>,
    pub witness: Option<RefinesWitness>,
}

impl RefReport {
    fn pass(initiator: Participant) -> RefReport {
        RefReport {
            holds: true,
            initiator_found: Some(initiator),
            failed_clause: None,
            witness: None,
        }
    }

    fn fail(
        clause: RefinesClause,
        initiator: Option<Participant>,
        witness: RefinesWitness,
    ) -> RefReport {
        RefReport {
            holds: false,
            initiator_found: initiator,
            failed_clause: Some(clause),
            witness: Some(witness),
        }
    }
}

/// Errors of the refinement workflow.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RefineError {
    #[error("no refinable occurrence named {tag:?}")]
    UnknownTag { tag: String },
    #[error("binding tag {tag:?} given more than once")]
    DuplicateTag { tag: String },
    #[error("replacement for {tag:?} is not ground")]
    NotGround { tag: String },
    #[error("configuration cap {cap} exceeded while checking refinement")]
    ConfigExplosion { cap: usize },
}

/// Checks whether a ground term semantically refines a refinable action:
/// (i) its denotation is defined, (ii) all minimal events belong to the
/// action's initiator, (iii) every promised message arrives as a terminal
/// input at its target in every maximal configuration.
pub fn refines(g: &GChor, action: &RefinableAction, cap: usize) -> Result<RefReport, RefineError> {
    let es = match interpret(g, cap).into_result() {
        Ok(es) => es,
        Err(d) => {
            if let crate::semantics::DiagnosticKind::ConfigExplosion { cap } = d.kind {
                return Err(RefineError::ConfigExplosion { cap });
            }
            return Ok(RefReport::fail(
                RefinesClause::Semantics,
                None,
                RefinesWitness::Bottom(d),
            ));
        }
    };
    let min_subjects: BTreeSet<Participant> = es
        .minimals()
        .iter()
        .map(|&e| es.label(e).subject().clone())
        .collect();
    let initiator_ok =
        min_subjects.len() == 1 && min_subjects.contains(&action.initiator);
    if !initiator_ok {
        return Ok(RefReport::fail(
            RefinesClause::Initiator,
            min_subjects.iter().next().cloned(),
            RefinesWitness::MinimalSubjects(min_subjects),
        ));
    }
    let participants = g.participants();
    let maxcs = es
        .max_configurations(cap)
        .map_err(|crate::es::EsError::ConfigExplosion { cap }| RefineError::ConfigExplosion {
            cap,
        })?;
    for x in &maxcs {
        for (msg, dest) in &action.targets {
            let terminal = es.config_subject_maximals(x, dest);
            let delivered = terminal.iter().any(|&e| {
                let l = es.label(e);
                l.is_input()
                    && &l.receiver == dest
                    && &l.msg == msg
                    && participants.contains(&l.sender)
            });
            if !delivered {
                return Ok(RefReport::fail(
                    RefinesClause::TerminalInput,
                    Some(action.initiator.clone()),
                    RefinesWitness::MissingDelivery {
                        configuration: x.clone(),
                        target: dest.clone(),
                        msg: msg.clone(),
                    },
                ));
            }
        }
    }
    Ok(RefReport::pass(action.initiator.clone()))
}

/// Infers the typing context a ground candidate would occupy: its unique
/// type, repackaged.
pub fn infer_context(g: &GChor) -> Result<RefContext, TypeError> {
    type_of_ground(g)
}

fn check_bindings(g: &GChor, bindings: &[Binding]) -> Result<(), RefineError> {
    let occurrences: BTreeSet<String> = g
        .refinable_occurrences()
        .into_iter()
        .map(|(name, _, _)| name)
        .collect();
    let mut seen = BTreeSet::new();
    for b in bindings {
        if !occurrences.contains(&b.tag) {
            return Err(RefineError::UnknownTag { tag: b.tag.clone() });
        }
        if !seen.insert(b.tag.clone()) {
            return Err(RefineError::DuplicateTag { tag: b.tag.clone() });
        }
        if !b.replacement.is_ground() {
            return Err(RefineError::NotGround { tag: b.tag.clone() });
        }
    }
    Ok(())
}

/// Replaces each bound refinable occurrence by its ground replacement.
/// Unbound occurrences remain refinable. Purely syntactic.
pub fn substitute(g: &GChor, bindings: &[Binding]) -> Result<GChor, RefineError> {
    check_bindings(g, bindings)?;
    let by_path: BTreeMap<Path, &GChor> = {
        let by_tag: BTreeMap<&str, &GChor> = bindings
            .iter()
            .map(|b| (b.tag.as_str(), &b.replacement))
            .collect();
        g.refinable_occurrences()
            .into_iter()
            .filter_map(|(name, path, _)| by_tag.get(name.as_str()).map(|&r| (path, r)))
            .collect()
    };
    let mut path = Vec::new();
    Ok(subst_rec(g, &by_path, &mut path))
}

fn subst_rec(g: &GChor, by_path: &BTreeMap<Path, &GChor>, path: &mut Path) -> GChor {
    if let Some(&replacement) = by_path.get(path) {
        return replacement.clone();
    }
    let rebuild = |l: &GChor, r: &GChor, path: &mut Path| {
        path.push(0);
        let l = subst_rec(l, by_path, path);
        path.pop();
        path.push(1);
        let r = subst_rec(r, by_path, path);
        path.pop();
        (Box::new(l), Box::new(r))
    };
    match g {
        GChor::Seq(l, r) => {
            let (l, r) = rebuild(l, r, path);
            GChor::Seq(l, r)
        }
        GChor::Par(l, r) => {
            let (l, r) = rebuild(l, r, path);
            GChor::Par(l, r)
        }
        GChor::Choice(l, r) => {
            let (l, r) = rebuild(l, r, path);
            GChor::Choice(l, r)
        }
        other => other.clone(),
    }
}

/// Per-binding evidence gathered by [`refine_and_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoleReport {
    pub tag: String,
    /// The candidate's own type, if it has one.
    pub inferred_ctx: Result<RefContext, TypeError>,
    /// Whether the inferred context satisfies the refinable-action side
    /// conditions.
    pub tref_valid: Option<Result<(), RefContextFailure>>,
    /// The semantic refines check.
    pub sem_refines: Option<RefReport>,
}

/// Outcome of the refine-and-recheck workflow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefineOutcome {
    pub per_hole: Vec<HoleReport>,
    pub substituted: GChor,
    /// The type of the substituted term, recomputed from scratch.
    pub result_type: Result<ChorType, TypeError>,
}

impl RefineOutcome {
    /// True when every per-hole check and the whole-term typing passed.
    pub fn accepted(&self) -> bool {
        self.result_type.is_ok()
            && self.per_hole.iter().all(|h| {
                h.inferred_ctx.is_ok()
                    && matches!(h.tref_valid, Some(Ok(())))
                    && h.sem_refines.as_ref().is_some_and(|r| r.holds)
            })
    }
}

/// Substitutes the bound holes and rechecks everything: per hole the
/// inferred context, the side conditions against the action and the
/// semantic refines relation; then the whole substituted term is retyped
/// from scratch (remaining holes via `ctxs`). Retyping, rather than
/// splicing the holes' derivations, admits refinements that change the
/// surrounding typing context.
pub fn refine_and_check(
    g: &GChor,
    bindings: &[Binding],
    ctxs: &RefContexts,
    cap: usize,
) -> Result<RefineOutcome, RefineError> {
    check_bindings(g, bindings)?;
    let actions: BTreeMap<String, RefinableAction> = g
        .refinable_occurrences()
        .into_iter()
        .map(|(name, _, action)| (name, action.clone()))
        .collect();
    let mut per_hole = Vec::new();
    for b in bindings {
        let action = &actions[&b.tag];
        let inferred_ctx = infer_context(&b.replacement);
        let tref_valid = inferred_ctx
            .as_ref()
            .ok()
            .map(|ctx| validate_ref_context(action, ctx));
        let sem_refines = Some(refines(&b.replacement, action, cap)?);
        per_hole.push(HoleReport {
            tag: b.tag.clone(),
            inferred_ctx,
            tref_valid,
            sem_refines,
        });
    }
    let substituted = substitute(g, bindings)?;
    let result_type = type_of(&substituted, ctxs);
    Ok(RefineOutcome {
        per_hole,
        substituted,
        result_type,
    })
}

/// Label set helper used when synthesizing candidate actions in sweeps:
/// the targets a ground term could serve, i.e. participants whose last
/// labels form a single input directed at them.
pub fn eligible_targets(
    ctx: &RefContext,
    initiator: &Participant,
) -> Vec<(crate::syntax::Message, Participant)> {
    let mut out = Vec::new();
    for p in &ctx.pi {
        if p == initiator {
            continue;
        }
        let at: Vec<&Label> = ctx.last.iter().filter(|l| l.subject() == p).collect();
        if at.len() == 1 && at[0].is_input() && &at[0].receiver == p {
            out.push((at[0].msg.clone(), p.clone()));
        }
    }
    out
}
