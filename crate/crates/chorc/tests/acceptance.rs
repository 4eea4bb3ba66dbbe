//! End-to-end acceptance checks. Each test prints one pass line for its
//! criterion; a failing assertion marks the criterion failed.

use std::collections::BTreeSet;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use chorc::es::{EventStructure, Label, DEFAULT_CAP};
use chorc::harness::{gen_random, metatheory_sweep, soundness_sweep, GenParams, SweepReport};
use chorc::refine::{refine_and_check, Binding};
use chorc::semantics::{interpret, wf_check, DiagnosticKind, SemResult};
use chorc::syntax::{parse, Message, Participant};
use chorc::typing::{type_of_ground, RefContexts, Rule};

const RUNNING: &str = "C -> S : md + (C -> S : req ; (S -> C : stats ; S -> C : done))";
const G_ERR: &str = "(C -> B : md ; B -> S : md) + (C -> S : req ; S -> C : done)";
const TIE: &str = "C ~> {md : S} + (C ~> {req : S} ; S ~> {done : C})";

fn pt(s: &str) -> Participant {
    Participant::new(s).unwrap()
}

fn lbl(s: &str) -> Label {
    let mut cs = s.chars();
    let a = cs.next().unwrap().to_string();
    let b = cs.next().unwrap().to_string();
    let pol = cs.next().unwrap();
    let m: String = cs.collect();
    let (a, b, m) = (pt(&a), pt(&b), Message::new(m).unwrap());
    if pol == '!' {
        Label::output(a, b, m)
    } else {
        Label::input(a, b, m)
    }
}

fn build(labels: &[&str], cause: &[(usize, usize)], conflict: &[(usize, usize)]) -> EventStructure {
    EventStructure::from_parts(
        labels.iter().map(|s| lbl(s)).collect(),
        cause.iter().copied(),
        conflict.iter().copied(),
    )
}

fn interp(src: &str) -> EventStructure {
    interpret(&parse(src).unwrap(), DEFAULT_CAP)
        .into_result()
        .unwrap()
}

fn pts(names: &[&str]) -> BTreeSet<Participant> {
    names.iter().map(|s| pt(s)).collect()
}

fn labels(names: &[&str]) -> BTreeSet<Label> {
    names.iter().map(|s| lbl(s)).collect()
}

fn soundness() -> &'static (SweepReport, Duration) {
    static CELL: OnceLock<(SweepReport, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let report = soundness_sweep(&GenParams::standard(4), DEFAULT_CAP);
        (report, start.elapsed())
    })
}

fn metatheory() -> &'static (SweepReport, Duration) {
    static CELL: OnceLock<(SweepReport, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let report = metatheory_sweep(&GenParams::standard(4), DEFAULT_CAP);
        (report, start.elapsed())
    })
}

#[test]
fn criterion_01_running_example_semantics() {
    let got = interp(RUNNING);
    // events: 0 CS!md < 1 CS?md; 2 CS!req < 3 CS?req < 4 SC!stats;
    // 4 < 5 SC?stats; 4 < 6 SC!done < 7 SC?done; 5 < 7; md # req branch
    let want = build(
        &[
            "CS!md", "CS?md", "CS!req", "CS?req", "SC!stats", "SC?stats", "SC!done", "SC?done",
        ],
        &[(0, 1), (2, 3), (3, 4), (4, 5), (4, 6), (6, 7), (5, 7)],
        &[(0, 2)],
    );
    assert_eq!(got.len(), 8);
    assert!(got.isomorphic(&want), "semantics differs from the diagram");
    println!("criterion 1 (running-example semantics): pass");
}

#[test]
fn criterion_02_projections() {
    let es = interp(RUNNING);
    let on_c = build(
        &["CS!md", "CS!req", "SC?stats", "SC?done"],
        &[(1, 2), (2, 3)],
        &[(0, 1)],
    );
    let on_s = build(
        &["CS?md", "CS?req", "SC!stats", "SC!done"],
        &[(1, 2), (2, 3)],
        &[(0, 1)],
    );
    assert!(es.project(&pt("C")).isomorphic(&on_c), "projection on C");
    assert!(es.project(&pt("S")).isomorphic(&on_s), "projection on S");
    println!("criterion 2 (projections on C and S): pass");
}

#[test]
fn criterion_03_negative_semantics() {
    match interpret(&parse(G_ERR).unwrap(), DEFAULT_CAP) {
        SemResult::Bottom(d) => match d.kind {
            DiagnosticKind::NotWellBranchedDeterminedChoice(f) => {
                assert_eq!(f.participant(), Some(&pt("B")));
            }
            other => panic!("wrong diagnostic: {other:?}"),
        },
        SemResult::Defined(_) => panic!("expected undefined semantics"),
    }
    println!("criterion 3 (determined-choice failure at B): pass");
}

#[test]
fn criterion_04_typing_goldens() {
    let t = type_of_ground(&parse("C -> S : req ; S -> C : done").unwrap()).unwrap();
    assert_eq!(t.pi, pts(&["C", "S"]));
    assert_eq!(t.first, labels(&["CS!req", "CS?req"]));
    assert_eq!(t.last, labels(&["SC!done", "SC?done"]));

    let t = type_of_ground(&parse("C -> B : md ; B -> S : md").unwrap()).unwrap();
    assert_eq!(t.pi, pts(&["B", "C", "S"]));
    assert_eq!(t.first, labels(&["CB!md", "CB?md", "BS?md"]));
    assert_eq!(t.last, labels(&["CB!md", "BS!md", "BS?md"]));
    println!("criterion 4 (sequencing type goldens): pass");
}

#[test]
fn criterion_05_choice_goldens() {
    assert!(type_of_ground(&parse("C -> S : req + C -> S : done").unwrap()).is_ok());

    let e = type_of_ground(&parse("C -> S : req + C -> S : req").unwrap()).unwrap_err();
    assert_eq!(e.rule, Rule::Ch, "self-overlapping branches");

    let e = type_of_ground(&parse("C -> S : req + S -> C : done").unwrap()).unwrap_err();
    assert_eq!(e.rule, Rule::Ch, "no uniform selector");

    let e = type_of_ground(&parse("C -> S : req + C -> B : md").unwrap()).unwrap_err();
    assert_eq!(e.rule, Rule::Ch, "participant contexts differ");
    println!("criterion 5 (choice typability goldens): pass");
}

#[test]
fn criterion_06_soundness_sweep() {
    let (report, elapsed) = soundness();
    assert_eq!(report.total, 2_830_909);
    let violations: Vec<_> = report
        .violations
        .iter()
        .filter(|v| v.property != "unique typing")
        .collect();
    assert!(violations.is_empty(), "{violations:?}");
    assert!(
        *elapsed < Duration::from_secs(60),
        "sweep took {elapsed:?}"
    );
    println!(
        "criterion 6 (soundness sweep, {} terms, {} typable, {:?}): pass",
        report.total, report.typable, elapsed
    );
}

#[test]
fn criterion_07_unique_typing() {
    let (report, _) = soundness();
    let mismatches: Vec<_> = report
        .violations
        .iter()
        .filter(|v| v.property == "unique typing")
        .collect();
    assert!(mismatches.is_empty(), "{mismatches:?}");
    println!("criterion 7 (unique typing on the sweep): pass");
}

#[test]
fn criterion_08_incompleteness_witness() {
    let g = parse("A -> B : m | A -> C : m").unwrap();
    assert!(wf_check(&g, DEFAULT_CAP).well_formed);
    let e = type_of_ground(&g).unwrap_err();
    assert_eq!(e.rule, Rule::Par);
    println!("criterion 8 (well-formed but untypable parallel): pass");
}

#[test]
fn criterion_09_metatheory_sweep() {
    let (report, elapsed) = metatheory();
    assert_eq!(report.total, 2_830_909);
    let shape: Vec<_> = report
        .violations
        .iter()
        .filter(|v| {
            v.property.contains("configuration") || v.property.contains("per-participant")
        })
        .collect();
    assert!(shape.is_empty(), "{shape:?}");
    assert!(
        *elapsed < Duration::from_secs(120),
        "sweep took {elapsed:?}"
    );
    println!(
        "criterion 9 (per-branch shape lemmas on the sweep, {:?}): pass",
        elapsed
    );
}

#[test]
fn criterion_10_refinement_admission_soundness() {
    let (report, _) = metatheory();
    let admission: Vec<_> = report
        .violations
        .iter()
        .filter(|v| v.property.contains("refinement"))
        .collect();
    assert!(admission.is_empty(), "{admission:?}");
    println!("criterion 10 (admission implies semantic refinement): pass");
}

#[test]
fn criterion_11_end_to_end_refinement() {
    let g = parse(TIE).unwrap();
    let full = [
        Binding::new("r1", parse("C -> B : md ; B -> S : md").unwrap()),
        Binding::new("r2", parse("C -> B : x ; B -> S : req").unwrap()),
        Binding::new("r3", parse("S -> C : done").unwrap()),
    ];
    let out = refine_and_check(&g, &full, &RefContexts::defaults(), DEFAULT_CAP).unwrap();
    assert!(out.accepted(), "{out:?}");
    assert_eq!(out.result_type.unwrap().pi, pts(&["B", "C", "S"]));

    // grounding r2/r3 but refining r1 alone recreates the ill-formed term
    let partial_src = "C ~> {md : S} + (C -> S : req ; S -> C : done)";
    let partial = [Binding::new(
        "r1",
        parse("C -> B : md ; B -> S : md").unwrap(),
    )];
    let out = refine_and_check(
        &parse(partial_src).unwrap(),
        &partial,
        &RefContexts::defaults(),
        DEFAULT_CAP,
    )
    .unwrap();
    assert!(!out.accepted());
    assert_eq!(out.result_type.as_ref().unwrap_err().rule, Rule::Ch);
    assert_eq!(out.substituted, parse(G_ERR).unwrap());
    println!("criterion 11 (end-to-end refinement of the abstract protocol): pass");
}

#[test]
fn criterion_12_round_trip_and_stability() {
    let mut params = GenParams::standard(6);
    params.allow_refinable = true;
    for seed in 0..1000 {
        params.seed = seed;
        let g = gen_random(&params);
        let printed = g.to_string();
        let reparsed = parse(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(reparsed, g, "round trip failed on {printed}");
    }

    let bin = env!("CARGO_BIN_EXE_chorc");
    let proto = concat!(env!("CARGO_MANIFEST_DIR"), "/../../protocols");
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {out:?}");
        out.stdout
    };
    let running = format!("{proto}/running.gc");
    let seq_cbs = format!("{proto}/seq_cbs.gc");
    let dot_args = ["dot", running.as_str()];
    assert_eq!(run(&dot_args), run(&dot_args), "dot output unstable");
    let type_args = ["type", seq_cbs.as_str()];
    assert_eq!(run(&type_args), run(&type_args), "json output unstable");
    println!("criterion 12 (round trip and byte-stable outputs): pass");
}
