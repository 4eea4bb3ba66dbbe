//! The `chorc` command-line front end: file in, verdict/JSON/DOT out.
//!
//! Exit codes: 0 = check passed; 1 = check performed and failed
//! (undefined semantics, type error, refinement failure, non-isomorphism,
//! sweep violations); 2 = usage, parse or I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::es::{EventStructure, Label, DEFAULT_CAP};
use crate::harness::{
    gen_random, metatheory_check, soundness_check, GenParams, SweepReport,
};
use crate::refine::{refine_and_check, refines, Binding, RefineOutcome};
use crate::semantics::{interpret, SemResult};
use crate::syntax::{parse, GChor, Message, Participant};
use crate::typing::{type_of, ChorType, LabelSet, RefContexts};

#[derive(Parser)]
#[command(name = "chorc", about = "Parse, analyse and refine g-choreographies", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a file and print the pretty-printed term.
    Parse { file: PathBuf },
    /// Interpret a ground term and summarize its event structure.
    Sem {
        file: PathBuf,
        /// Also write a DOT rendering to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Type a term and print its participants/first/last labels as JSON.
    Type {
        file: PathBuf,
        /// JSON file mapping occurrence tags to {pi, first, last} contexts.
        #[arg(long)]
        ctx: Option<PathBuf>,
        /// Do not fall back to canonical contexts for unlisted occurrences.
        #[arg(long)]
        no_default_ctx: bool,
    },
    /// Check well-formedness (defined event-structure semantics).
    Wf {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Substitute ground terms for refinable occurrences and recheck.
    Refine {
        file: PathBuf,
        /// TAG=FILE pairs; FILE holds the ground replacement for TAG.
        #[arg(long = "bind", value_name = "TAG=FILE")]
        bind: Vec<String>,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Check whether a ground term refines a refinable action.
    Refcheck {
        file: PathBuf,
        /// The action, e.g. "A ~> {m : B}".
        #[arg(long)]
        action: String,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Compare the semantics of two files up to isomorphism.
    Iso { file1: PathBuf, file2: PathBuf },
    /// Sweep generated terms and report metatheory violations.
    Fuzz(FuzzArgs),
    /// Print a DOT rendering of a ground term's semantics.
    Dot {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
}

#[derive(Args)]
struct FuzzArgs {
    /// Leaf bound for generated terms.
    #[arg(long, default_value_t = 3)]
    leaves: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Enumerate every term up to the bound instead of sampling.
    #[arg(long)]
    enumerate: bool,
    /// Number of random terms in sampling mode.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

/// Runs the CLI on the given argument vector and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version through the error path too
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("chorc: {msg}");
            2
        }
    }
}

fn read_term(path: &PathBuf) -> Result<GChor, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn dispatch(cmd: Command) -> Result<i32, String> {
    match cmd {
        Command::Parse { file } => {
            let g = read_term(&file)?;
            println!("{g}");
            Ok(0)
        }
        Command::Sem { file, dot, cap } => {
            let g = read_term(&file)?;
            match interpret(&g, cap) {
                SemResult::Defined(es) => {
                    println!("{}", summarize(&es, cap));
                    if let Some(out) = dot {
                        fs::write(&out, dot_export(&es))
                            .map_err(|e| format!("{}: {e}", out.display()))?;
                    }
                    Ok(0)
                }
                SemResult::Bottom(d) => {
                    eprintln!("undefined: {d}");
                    Ok(1)
                }
            }
        }
        Command::Type {
            file,
            ctx,
            no_default_ctx,
        } => {
            let g = read_term(&file)?;
            let mut ctxs = if no_default_ctx {
                RefContexts::explicit(BTreeMap::new())
            } else {
                RefContexts::defaults()
            };
            if let Some(path) = ctx {
                ctxs.by_tag = read_contexts(&path)?;
            }
            match type_of(&g, &ctxs) {
                Ok(t) => {
                    println!("{}", type_json(&t));
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("type error: {e}");
                    Ok(1)
                }
            }
        }
        Command::Wf { file, cap } => {
            let g = read_term(&file)?;
            let report = crate::semantics::wf_check(&g, cap);
            if report.well_formed {
                match report.summary {
                    Some(s) => println!(
                        "well-formed ({} events, {} maximal configuration{})",
                        s.events,
                        s.max_configurations,
                        if s.max_configurations == 1 { "" } else { "s" }
                    ),
                    None => println!("well-formed (configuration count exceeds cap)"),
                }
                Ok(0)
            } else {
                eprintln!("not well-formed: {}", report.diagnostic.unwrap());
                Ok(1)
            }
        }
        Command::Refine {
            file,
            bind,
            json,
            cap,
        } => {
            let g = read_term(&file)?;
            let mut bindings = Vec::new();
            for spec in &bind {
                let (tag, path) = spec
                    .split_once('=')
                    .ok_or_else(|| format!("--bind {spec:?}: expected TAG=FILE"))?;
                let replacement = read_term(&PathBuf::from(path))?;
                bindings.push(Binding::new(tag, replacement));
            }
            let outcome = refine_and_check(&g, &bindings, &RefContexts::defaults(), cap)
                .map_err(|e| e.to_string())?;
            if json {
                println!("{}", refine_json(&outcome));
            } else {
                print!("{}", refine_text(&outcome));
            }
            Ok(if outcome.accepted() { 0 } else { 1 })
        }
        Command::Refcheck { file, action, cap } => {
            let g = read_term(&file)?;
            let action = match parse(&action).map_err(|e| format!("--action: {e}"))? {
                GChor::Refinable(a) => a,
                other => return Err(format!("--action: not a refinable action: {other}")),
            };
            let report = refines(&g, &action, cap).map_err(|e| e.to_string())?;
            if report.holds {
                println!(
                    "refines (initiator {})",
                    report.initiator_found.as_ref().unwrap()
                );
                Ok(0)
            } else {
                eprintln!(
                    "does not refine: clause '{}' fails",
                    report.failed_clause.unwrap()
                );
                Ok(1)
            }
        }
        Command::Iso { file1, file2 } => {
            let (g1, g2) = (read_term(&file1)?, read_term(&file2)?);
            let interp = |g: &GChor, name: &PathBuf| match interpret(g, DEFAULT_CAP) {
                SemResult::Defined(es) => Ok(es),
                SemResult::Bottom(d) => {
                    eprintln!("{}: undefined: {d}", name.display());
                    Err(())
                }
            };
            let (Ok(a), Ok(b)) = (interp(&g1, &file1), interp(&g2, &file2)) else {
                return Ok(1);
            };
            if a.isomorphic(&b) {
                println!("isomorphic");
                Ok(0)
            } else {
                println!("not isomorphic");
                Ok(1)
            }
        }
        Command::Fuzz(args) => {
            let report = run_fuzz(&args);
            println!(
                "total={} typable={} wf={} skipped={} violations={}",
                report.total,
                report.typable,
                report.wf,
                report.skipped,
                report.violations.len()
            );
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Dot { file, cap } => {
            let g = read_term(&file)?;
            match interpret(&g, cap) {
                SemResult::Defined(es) => {
                    print!("{}", dot_export(&es));
                    Ok(0)
                }
                SemResult::Bottom(d) => {
                    eprintln!("undefined: {d}");
                    Ok(1)
                }
            }
        }
    }
}

fn summarize(es: &EventStructure, cap: usize) -> String {
    match es.max_configurations(cap) {
        Ok(maxc) => format!(
            "{} events, {} maximal configuration{}",
            es.len(),
            maxc.len(),
            if maxc.len() == 1 { "" } else { "s" }
        ),
        Err(_) => format!("{} events, configuration count exceeds cap", es.len()),
    }
}

fn run_fuzz(args: &FuzzArgs) -> SweepReport {
    let mut report = SweepReport::default();
    if args.enumerate {
        let params = GenParams::standard(args.leaves);
        let sound = crate::harness::soundness_sweep(&params, args.cap);
        let meta = crate::harness::metatheory_sweep(&params, args.cap);
        report.total = sound.total;
        report.typable = sound.typable;
        report.wf = sound.wf;
        report.skipped = sound.skipped + meta.skipped;
        report.violations = sound.violations;
        report.violations.extend(meta.violations);
    } else {
        let mut params = GenParams::standard(args.leaves);
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..args.count {
            params.seed = args.seed.wrapping_add(i as u64);
            let g = gen_random(&params);
            if !seen.insert(g.clone()) {
                continue;
            }
            soundness_check(&g, args.cap, &mut report);
            let mut meta = SweepReport::default();
            metatheory_check(&g, args.cap, &mut meta);
            report.skipped += meta.skipped;
            report.violations.extend(meta.violations);
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Label and context parsing for --ctx files

/// Parses a label in the surface syntax: either `A B!m` with explicit
/// sender and receiver identifiers, or the compact `AB!m` where a single
/// two-character identifier splits into one-character participants.
pub fn parse_label(text: &str) -> Result<Label, String> {
    use crate::syntax::Tok;
    let toks = crate::syntax::lex(text).map_err(|e| e.to_string())?;
    let mut idents = Vec::new();
    let mut i = 0;
    while let Tok::Ident(name) = &toks[i].tok {
        idents.push(name.clone());
        i += 1;
    }
    let polarity = match &toks[i].tok {
        Tok::Bang => '!',
        Tok::Question => '?',
        other => return Err(format!("label {text:?}: expected '!' or '?', found {other}")),
    };
    i += 1;
    let Tok::Ident(msg) = &toks[i].tok else {
        return Err(format!("label {text:?}: expected message after {polarity:?}"));
    };
    if !matches!(toks[i + 1].tok, Tok::Eof) {
        return Err(format!("label {text:?}: trailing input"));
    }
    let (sender, receiver) = match idents.as_slice() {
        [ab] if ab.chars().count() == 2 => {
            let mut cs = ab.chars();
            (cs.next().unwrap().to_string(), cs.next().unwrap().to_string())
        }
        [a, b] => (a.clone(), b.clone()),
        _ => {
            return Err(format!(
                "label {text:?}: expected sender and receiver before the polarity"
            ))
        }
    };
    let sender = Participant::new(sender).map_err(|e| e.to_string())?;
    let receiver = Participant::new(receiver).map_err(|e| e.to_string())?;
    let msg = Message::new(msg.clone()).map_err(|e| e.to_string())?;
    if sender == receiver {
        return Err(format!("label {text:?}: sender and receiver coincide"));
    }
    Ok(if polarity == '!' {
        Label::output(sender, receiver, msg)
    } else {
        Label::input(sender, receiver, msg)
    })
}

fn read_contexts(path: &PathBuf) -> Result<BTreeMap<String, ChorType>, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| format!("{}: expected a JSON object", path.display()))?;
    let mut out = BTreeMap::new();
    for (tag, ctx) in obj {
        let get = |field: &str| -> Result<Vec<String>, String> {
            ctx.get(field)
                .and_then(|v| v.as_array())
                .ok_or_else(|| format!("{}: context {tag:?} needs array {field:?}", path.display()))?
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| format!("{}: non-string entry in {field:?}", path.display()))
                })
                .collect()
        };
        let pi = get("pi")?
            .into_iter()
            .map(|s| Participant::new(s).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let labels = |v: Vec<String>| -> Result<LabelSet, String> {
            v.iter().map(|s| parse_label(s)).collect()
        };
        out.insert(
            tag.clone(),
            ChorType {
                pi,
                first: labels(get("first")?)?,
                last: labels(get("last")?)?,
            },
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON rendering

fn label_strings(ls: &LabelSet) -> Vec<String> {
    ls.iter().map(|l| l.to_string()).collect()
}

fn type_json(t: &ChorType) -> String {
    json!({
        "pi": t.pi.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "first": label_strings(&t.first),
        "last": label_strings(&t.last),
    })
    .to_string()
}

fn refine_json(outcome: &RefineOutcome) -> String {
    let holes: Vec<_> = outcome
        .per_hole
        .iter()
        .map(|h| {
            json!({
                "tag": h.tag,
                "inferred_ctx": h.inferred_ctx.as_ref().ok().map(type_json),
                "tref_valid": matches!(h.tref_valid, Some(Ok(()))),
                "sem_refines": h.sem_refines.as_ref().is_some_and(|r| r.holds),
            })
        })
        .collect();
    json!({
        "accepted": outcome.accepted(),
        "per_hole": holes,
        "substituted": outcome.substituted.to_string(),
        "result_type": match &outcome.result_type {
            Ok(t) => json!({"ok": serde_json::from_str::<serde_json::Value>(&type_json(t)).unwrap()}),
            Err(e) => json!({"error": e.to_string()}),
        },
    })
    .to_string()
}

fn refine_text(outcome: &RefineOutcome) -> String {
    let mut out = String::new();
    for h in &outcome.per_hole {
        let ctx = match &h.inferred_ctx {
            Ok(_) => "context inferred",
            Err(_) => "candidate untypable",
        };
        let tref = match &h.tref_valid {
            Some(Ok(())) => "side conditions hold",
            Some(Err(e)) => return format!("{}: {ctx}; {e}\n", h.tag),
            None => "side conditions unchecked",
        };
        let sem = match &h.sem_refines {
            Some(r) if r.holds => "refines".to_string(),
            Some(r) => format!("does not refine ({})", r.failed_clause.unwrap()),
            None => "refinement unchecked".to_string(),
        };
        let _ = writeln!(out, "{}: {ctx}; {tref}; {sem}", h.tag);
    }
    match &outcome.result_type {
        Ok(t) => {
            let _ = writeln!(out, "substituted term types: {}", type_json(t));
        }
        Err(e) => {
            let _ = writeln!(out, "substituted term fails to type: {e}");
        }
    }
    out
}

// ---------------------------------------------------------------------------
// DOT rendering

/// Renders an event structure as a DOT digraph: one node per canonical
/// event, solid edges for the transitive reduction of causality, dashed
/// non-constraint edges for conflicts between causally minimal conflicting
/// pairs. Output is byte-stable for a given structure.
pub fn dot_export(es: &EventStructure) -> String {
    let es = es.canonicalize();
    let mut out = String::from("digraph es {\n");
    for e in es.events() {
        let _ = writeln!(out, "  e{e} [label=\"{}\"];", es.label(e));
    }
    for a in es.events() {
        for b in es.events() {
            if a == b || !es.leq(a, b) {
                continue;
            }
            let covered = es
                .events()
                .any(|c| c != a && c != b && es.leq(a, c) && es.leq(c, b));
            if !covered {
                let _ = writeln!(out, "  e{a} -> e{b};");
            }
        }
    }
    for &(e, f) in es.conflict_pairs() {
        let minimal = !es.conflict_pairs().iter().any(|&(d, d2)| {
            (d, d2) != (e, f) && ((es.leq(d, e) && es.leq(d2, f)) || (es.leq(d, f) && es.leq(d2, e)))
        });
        if minimal {
            let _ = writeln!(out, "  e{e} -> e{f} [style=dashed, dir=none, constraint=false];");
        }
    }
    out.push_str("}\n");
    out
}
