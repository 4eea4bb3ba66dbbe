//! Denotational semantics of ground g-choreographies as event structures.
//!
//! `0` denotes the empty structure, an interaction a two-event chain,
//! sequencing the sequential composition, parallel the tensor (guarded by
//! well-forkedness) and choice the sum (guarded by well-branchedness).
//! Where a guard fails the denotation is undefined; this module represents
//! undefinedness as a [`Diagnostic`] carrying the failing subterm.

use std::fmt;

use crate::es::{EsError, EventStructure, WbFailure, DEFAULT_CAP};
use crate::syntax::{path_display, GChor, Path};

/// Why a term has no event-structure denotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// Parallel operands share a communication label.
    NotWellForked,
    /// Choice operands fail the determined-choice condition.
    NotWellBranchedDeterminedChoice(WbFailure),
    /// Choice operands fail the unique-selector condition.
    NotWellBranchedUniqueSelector(WbFailure),
    /// The term contains a refinable action; only ground terms have a
    /// semantics.
    RefinableInGround,
    /// Configuration enumeration exceeded the cap.
    ConfigExplosion { cap: usize },
}

/// A structured account of an undefined denotation, locating the offending
/// subterm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub path: Path,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = path_display(&self.path);
        match &self.kind {
            DiagnosticKind::NotWellForked => {
                write!(f, "parallel operands share labels (not well-forked) at {at}")
            }
            DiagnosticKind::NotWellBranchedDeterminedChoice(failure) => {
                write!(f, "{failure} at {at}")
            }
            DiagnosticKind::NotWellBranchedUniqueSelector(failure) => {
                write!(f, "{failure} at {at}")
            }
            DiagnosticKind::RefinableInGround => {
                write!(f, "refinable action has no semantics, at {at}")
            }
            DiagnosticKind::ConfigExplosion { cap } => {
                write!(f, "maximal-configuration cap {cap} exceeded at {at}")
            }
        }
    }
}

/// Either an event structure or a diagnostic explaining undefinedness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SemResult {
    Defined(EventStructure),
    Bottom(Diagnostic),
}

impl SemResult {
    pub fn into_result(self) -> Result<EventStructure, Diagnostic> {
        match self {
            SemResult::Defined(es) => Ok(es),
            SemResult::Bottom(d) => Err(d),
        }
    }

    pub fn as_defined(&self) -> Option<&EventStructure> {
        match self {
            SemResult::Defined(es) => Some(es),
            SemResult::Bottom(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, SemResult::Defined(_))
    }
}

/// Interprets a ground term. Undefinedness propagates from subterms;
/// failures are reported leftmost-innermost. The returned structure is
/// canonicalized.
pub fn interpret(g: &GChor, cap: usize) -> SemResult {
    let mut path = Vec::new();
    match interp(g, cap, &mut path) {
        Ok(es) => SemResult::Defined(es.canonicalize()),
        Err(d) => SemResult::Bottom(d),
    }
}

fn interp(g: &GChor, cap: usize, path: &mut Path) -> Result<EventStructure, Diagnostic> {
    match g {
        GChor::Empty => Ok(EventStructure::empty()),
        GChor::Interaction {
            sender,
            receiver,
            msg,
        } => Ok(EventStructure::interaction(
            sender.clone(),
            receiver.clone(),
            msg.clone(),
        )),
        GChor::Refinable(_) => Err(Diagnostic {
            kind: DiagnosticKind::RefinableInGround,
            path: path.clone(),
        }),
        GChor::Seq(l, r) => {
            let (a, b) = interp_children(l, r, cap, path)?;
            a.seq_compose(&b, cap).map_err(|e| explosion(e, path))
        }
        GChor::Par(l, r) => {
            let (a, b) = interp_children(l, r, cap, path)?;
            if a.well_forked(&b) {
                Ok(a.tensor(&b))
            } else {
                Err(Diagnostic {
                    kind: DiagnosticKind::NotWellForked,
                    path: path.clone(),
                })
            }
        }
        GChor::Choice(l, r) => {
            let (a, b) = interp_children(l, r, cap, path)?;
            let wb = a.well_branched(&b);
            if wb.well_branched {
                Ok(a.plus(&b))
            } else {
                let failure = wb.failure.expect("failed check carries a reason");
                let kind = if failure.is_determined_choice() {
                    DiagnosticKind::NotWellBranchedDeterminedChoice(failure)
                } else {
                    DiagnosticKind::NotWellBranchedUniqueSelector(failure)
                };
                Err(Diagnostic {
                    kind,
                    path: path.clone(),
                })
            }
        }
    }
}

fn interp_children(
    l: &GChor,
    r: &GChor,
    cap: usize,
    path: &mut Path,
) -> Result<(EventStructure, EventStructure), Diagnostic> {
    path.push(0);
    let a = interp(l, cap, path);
    path.pop();
    let a = a?;
    path.push(1);
    let b = interp(r, cap, path);
    path.pop();
    Ok((a, b?))
}

fn explosion(e: EsError, path: &Path) -> Diagnostic {
    let EsError::ConfigExplosion { cap } = e;
    Diagnostic {
        kind: DiagnosticKind::ConfigExplosion { cap },
        path: path.clone(),
    }
}

/// Summary of a successful well-formedness check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EsSummary {
    pub events: usize,
    pub max_configurations: usize,
}

/// Outcome of [`wf_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WfReport {
    pub well_formed: bool,
    pub diagnostic: Option<Diagnostic>,
    pub summary: Option<EsSummary>,
}

/// A term is well-formed iff its denotation is defined.
pub fn wf_check(g: &GChor, cap: usize) -> WfReport {
    match interpret(g, cap) {
        SemResult::Defined(es) => match es.max_configurations(cap) {
            Ok(maxc) => WfReport {
                well_formed: true,
                diagnostic: None,
                summary: Some(EsSummary {
                    events: es.len(),
                    max_configurations: maxc.len(),
                }),
            },
            Err(EsError::ConfigExplosion { cap }) => WfReport {
                well_formed: true,
                diagnostic: Some(Diagnostic {
                    kind: DiagnosticKind::ConfigExplosion { cap },
                    path: Vec::new(),
                }),
                summary: None,
            },
        },
        SemResult::Bottom(d) => WfReport {
            well_formed: false,
            diagnostic: Some(d),
            summary: None,
        },
    }
}

/// Convenience wrapper using [`DEFAULT_CAP`].
pub fn interpret_default(g: &GChor) -> SemResult {
    interpret(g, DEFAULT_CAP)
}
