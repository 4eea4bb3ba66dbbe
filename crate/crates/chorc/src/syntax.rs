//! Concrete and abstract syntax of (refinable) g-choreographies.
//!
//! The textual grammar is
//!
//! ```text
//! G ::= "0"
//!     | A "->" B ":" m
//!     | A "~>" "{" m ":" B ("," m ":" B)* "}" ("as" tag)?
//!     | G ";" G | G "|" G | G "+" G
//!     | "(" G ")"
//! ```
//!
//! `;` binds tighter than `|`, which binds tighter than `+`; all three are
//! left-associative. `#` starts a line comment, whitespace is
//! insignificant. Identifiers match `[A-Za-z][A-Za-z0-9_]*`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A protocol participant, named by an identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Participant(String);

/// A message, named by an identifier. Participants and messages live in
/// separate namespaces even when spelled the same.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message(String);

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("not a valid identifier: {0:?}")]
pub struct IdentError(pub String);

impl Participant {
    pub fn new(name: impl Into<String>) -> Result<Self, IdentError> {
        let name = name.into();
        if is_ident(&name) {
            Ok(Participant(name))
        } else {
            Err(IdentError(name))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl Message {
    pub fn new(name: impl Into<String>) -> Result<Self, IdentError> {
        let name = name.into();
        if is_ident(&name) {
            Ok(Message(name))
        } else {
            Err(IdentError(name))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Participant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A refinable action `A ~> {m1:B1, ..., mn:Bn}`: a hole standing for any
/// ground protocol initiated by `A` that eventually delivers each `m_h` to
/// `B_h`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefinableAction {
    pub initiator: Participant,
    pub targets: Vec<(Message, Participant)>,
    pub tag: Option<String>,
}

/// Abstract syntax of (refinable) g-choreographies.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GChor {
    Empty,
    Interaction {
        sender: Participant,
        receiver: Participant,
        msg: Message,
    },
    Seq(Box<GChor>, Box<GChor>),
    Par(Box<GChor>, Box<GChor>),
    Choice(Box<GChor>, Box<GChor>),
    Refinable(RefinableAction),
}

/// Position of a subterm: the sequence of child indices from the root
/// (0 = left operand, 1 = right operand).
pub type Path = Vec<usize>;

/// Renders a path as `/0/1/...`, or `/` for the root.
pub fn path_display(path: &[usize]) -> String {
    if path.is_empty() {
        "/".to_string()
    } else {
        path.iter().map(|i| format!("/{i}")).collect()
    }
}

impl GChor {
    /// Builds an interaction, rejecting `sender == receiver`.
    pub fn interaction(
        sender: Participant,
        receiver: Participant,
        msg: Message,
    ) -> Result<GChor, ParseError> {
        if sender == receiver {
            return Err(ParseError::SelfInteraction {
                participant: sender.0,
                line: 0,
                col: 0,
            });
        }
        Ok(GChor::Interaction {
            sender,
            receiver,
            msg,
        })
    }

    pub fn seq(left: GChor, right: GChor) -> GChor {
        GChor::Seq(Box::new(left), Box::new(right))
    }

    pub fn par(left: GChor, right: GChor) -> GChor {
        GChor::Par(Box::new(left), Box::new(right))
    }

    pub fn choice(left: GChor, right: GChor) -> GChor {
        GChor::Choice(Box::new(left), Box::new(right))
    }

    pub fn children(&self) -> Vec<&GChor> {
        match self {
            GChor::Seq(l, r) | GChor::Par(l, r) | GChor::Choice(l, r) => vec![l, r],
            _ => vec![],
        }
    }

    /// The set of participants occurring in the term; for a refinable
    /// action this is the initiator together with all targets.
    pub fn participants(&self) -> BTreeSet<Participant> {
        let mut out = BTreeSet::new();
        self.collect_participants(&mut out);
        out
    }

    fn collect_participants(&self, out: &mut BTreeSet<Participant>) {
        match self {
            GChor::Empty => {}
            GChor::Interaction {
                sender, receiver, ..
            } => {
                out.insert(sender.clone());
                out.insert(receiver.clone());
            }
            GChor::Seq(l, r) | GChor::Par(l, r) | GChor::Choice(l, r) => {
                l.collect_participants(out);
                r.collect_participants(out);
            }
            GChor::Refinable(act) => {
                out.insert(act.initiator.clone());
                for (_, dest) in &act.targets {
                    out.insert(dest.clone());
                }
            }
        }
    }

    /// True iff no refinable action occurs in the term.
    pub fn is_ground(&self) -> bool {
        match self {
            GChor::Empty | GChor::Interaction { .. } => true,
            GChor::Seq(l, r) | GChor::Par(l, r) | GChor::Choice(l, r) => {
                l.is_ground() && r.is_ground()
            }
            GChor::Refinable(_) => false,
        }
    }

    /// Lists the refinable occurrences in left-to-right preorder together
    /// with their resolved names and positions. The k-th occurrence (1-based)
    /// is named by its user tag if present, otherwise `r{k}`.
    pub fn refinable_occurrences(&self) -> Vec<(String, Path, &RefinableAction)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_refinables(&mut path, &mut out);
        out
    }

    fn collect_refinables<'a>(
        &'a self,
        path: &mut Path,
        out: &mut Vec<(String, Path, &'a RefinableAction)>,
    ) {
        match self {
            GChor::Refinable(act) => {
                let name = act
                    .tag
                    .clone()
                    .unwrap_or_else(|| format!("r{}", out.len() + 1));
                out.push((name, path.clone(), act));
            }
            GChor::Seq(l, r) | GChor::Par(l, r) | GChor::Choice(l, r) => {
                path.push(0);
                l.collect_refinables(path, out);
                path.pop();
                path.push(1);
                r.collect_refinables(path, out);
                path.pop();
            }
            _ => {}
        }
    }

    /// Returns the subterm at `path`, if any.
    pub fn subterm(&self, path: &[usize]) -> Option<&GChor> {
        let mut cur = self;
        for &i in path {
            cur = *cur.children().get(i)?;
        }
        Some(cur)
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Zero,
    Arrow,    // ->
    Squiggle, // ~>
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Semi,
    Pipe,
    Plus,
    Bang,
    Question,
    As,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::Zero => f.write_str("'0'"),
            Tok::Arrow => f.write_str("'->'"),
            Tok::Squiggle => f.write_str("'~>'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Colon => f.write_str("':'"),
            Tok::Comma => f.write_str("','"),
            Tok::Semi => f.write_str("';'"),
            Tok::Pipe => f.write_str("'|'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Bang => f.write_str("'!'"),
            Tok::Question => f.write_str("'?'"),
            Tok::As => f.write_str("'as'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: unexpected character {ch:?}")]
    Lex { ch: char, line: usize, col: usize },
    #[error("{line}:{col}: found {found}, expected one of: {}", expected.join(", "))]
    Unexpected {
        found: String,
        expected: Vec<String>,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: sender and receiver coincide: {participant}")]
    SelfInteraction {
        participant: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: duplicate destination {participant} in refinable action")]
    DuplicateDest {
        participant: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: initiator {participant} appears among its own destinations")]
    InitiatorInTargets {
        participant: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: duplicate tag {tag:?}")]
    DuplicateTag { tag: String, line: usize, col: usize },
}

pub(crate) fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    loop {
        let Some(&c) = chars.peek() else { break };
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            c if c.is_whitespace() => {
                bump(&mut chars);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
            }
            '0' => {
                bump(&mut chars);
                toks.push(Spanned {
                    tok: Tok::Zero,
                    line: tl,
                    col: tc,
                });
            }
            '-' | '~' => {
                let first = bump(&mut chars);
                if chars.peek() == Some(&'>') {
                    bump(&mut chars);
                    let tok = if first == '-' { Tok::Arrow } else { Tok::Squiggle };
                    toks.push(Spanned {
                        tok,
                        line: tl,
                        col: tc,
                    });
                } else {
                    return Err(ParseError::Lex {
                        ch: first,
                        line: tl,
                        col: tc,
                    });
                }
            }
            '{' | '}' | '(' | ')' | ':' | ',' | ';' | '|' | '+' | '!' | '?' => {
                bump(&mut chars);
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ':' => Tok::Colon,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '|' => Tok::Pipe,
                    '+' => Tok::Plus,
                    '!' => Tok::Bang,
                    _ => Tok::Question,
                };
                toks.push(Spanned {
                    tok,
                    line: tl,
                    col: tc,
                });
            }
            c if c.is_ascii_alphabetic() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                let tok = if s == "as" { Tok::As } else { Tok::Ident(s) };
                toks.push(Spanned {
                    tok,
                    line: tl,
                    col: tc,
                });
            }
            _ => {
                return Err(ParseError::Lex {
                    ch: c,
                    line: tl,
                    col: tc,
                })
            }
        }
    }
    toks.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError::Unexpected {
            found: t.tok.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            line: t.line,
            col: t.col,
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Spanned, ParseError> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            Err(self.unexpected(&[expected]))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<(String, usize, usize), ParseError> {
        let t = self.peek().clone();
        if let Tok::Ident(s) = t.tok {
            self.next();
            Ok((s, t.line, t.col))
        } else {
            Err(self.unexpected(&[expected]))
        }
    }

    // choice := par ('+' par)*
    fn choice(&mut self) -> Result<GChor, ParseError> {
        let mut g = self.par()?;
        while self.peek().tok == Tok::Plus {
            self.next();
            g = GChor::choice(g, self.par()?);
        }
        Ok(g)
    }

    // par := seq ('|' seq)*
    fn par(&mut self) -> Result<GChor, ParseError> {
        let mut g = self.seq()?;
        while self.peek().tok == Tok::Pipe {
            self.next();
            g = GChor::par(g, self.seq()?);
        }
        Ok(g)
    }

    // seq := atom (';' atom)*
    fn seq(&mut self) -> Result<GChor, ParseError> {
        let mut g = self.atom()?;
        while self.peek().tok == Tok::Semi {
            self.next();
            g = GChor::seq(g, self.atom()?);
        }
        Ok(g)
    }

    fn atom(&mut self) -> Result<GChor, ParseError> {
        match self.peek().tok.clone() {
            Tok::Zero => {
                self.next();
                Ok(GChor::Empty)
            }
            Tok::LParen => {
                self.next();
                let g = self.choice()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(g)
            }
            Tok::Ident(_) => {
                let (name, line, col) = self.ident("participant")?;
                let initiator = Participant(name);
                match self.peek().tok {
                    Tok::Arrow => {
                        self.next();
                        let (rname, rline, rcol) = self.ident("participant")?;
                        self.expect(Tok::Colon, "':'")?;
                        let (mname, _, _) = self.ident("message")?;
                        if initiator.0 == rname {
                            return Err(ParseError::SelfInteraction {
                                participant: rname,
                                line: rline,
                                col: rcol,
                            });
                        }
                        Ok(GChor::Interaction {
                            sender: initiator,
                            receiver: Participant(rname),
                            msg: Message(mname),
                        })
                    }
                    Tok::Squiggle => {
                        self.next();
                        self.expect(Tok::LBrace, "'{'")?;
                        let mut targets = Vec::new();
                        loop {
                            let (mname, _, _) = self.ident("message")?;
                            self.expect(Tok::Colon, "':'")?;
                            let (dname, dline, dcol) = self.ident("participant")?;
                            if dname == initiator.0 {
                                return Err(ParseError::InitiatorInTargets {
                                    participant: dname,
                                    line: dline,
                                    col: dcol,
                                });
                            }
                            if targets.iter().any(|(_, d): &(Message, Participant)| d.0 == dname) {
                                return Err(ParseError::DuplicateDest {
                                    participant: dname,
                                    line: dline,
                                    col: dcol,
                                });
                            }
                            targets.push((Message(mname), Participant(dname)));
                            match self.peek().tok {
                                Tok::Comma => {
                                    self.next();
                                }
                                Tok::RBrace => break,
                                _ => return Err(self.unexpected(&["','", "'}'"])),
                            }
                        }
                        self.expect(Tok::RBrace, "'}'")?;
                        let tag = if self.peek().tok == Tok::As {
                            self.next();
                            let (t, _, _) = self.ident("tag")?;
                            Some(t)
                        } else {
                            None
                        };
                        Ok(GChor::Refinable(RefinableAction {
                            initiator,
                            targets,
                            tag,
                        }))
                    }
                    _ => {
                        let _ = (line, col);
                        Err(self.unexpected(&["'->'", "'~>'"]))
                    }
                }
            }
            _ => Err(self.unexpected(&["'0'", "'('", "participant"])),
        }
    }
}

/// Parses a g-choreography from source text.
pub fn parse(text: &str) -> Result<GChor, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let g = p.choice()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.unexpected(&["';'", "'|'", "'+'", "end of input"]));
    }
    check_tags(&g)?;
    Ok(g)
}

// User tags must be unique within one top-level term.
fn check_tags(g: &GChor) -> Result<(), ParseError> {
    let mut seen = BTreeSet::new();
    for (_, _, act) in g.refinable_occurrences() {
        if let Some(tag) = &act.tag {
            if !seen.insert(tag.clone()) {
                return Err(ParseError::DuplicateTag {
                    tag: tag.clone(),
                    line: 0,
                    col: 0,
                });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Pretty-printer

// Binding strength; atoms are tightest.
fn prec(g: &GChor) -> u8 {
    match g {
        GChor::Choice(_, _) => 1,
        GChor::Par(_, _) => 2,
        GChor::Seq(_, _) => 3,
        _ => 4,
    }
}

fn pretty_into(g: &GChor, min_prec: u8, out: &mut String) {
    let p = prec(g);
    let paren = p < min_prec;
    if paren {
        out.push('(');
    }
    match g {
        GChor::Empty => out.push('0'),
        GChor::Interaction {
            sender,
            receiver,
            msg,
        } => {
            out.push_str(&format!("{sender} -> {receiver} : {msg}"));
        }
        GChor::Refinable(act) => {
            out.push_str(&format!("{} ~> {{", act.initiator));
            for (i, (msg, dest)) in act.targets.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{msg} : {dest}"));
            }
            out.push('}');
            if let Some(tag) = &act.tag {
                out.push_str(&format!(" as {tag}"));
            }
        }
        GChor::Seq(l, r) | GChor::Par(l, r) | GChor::Choice(l, r) => {
            let op = match g {
                GChor::Seq(_, _) => " ; ",
                GChor::Par(_, _) => " | ",
                _ => " + ",
            };
            pretty_into(l, p, out);
            out.push_str(op);
            // left-associative: a nested operator of equal strength on the
            // right needs parentheses
            pretty_into(r, p + 1, out);
        }
    }
    if paren {
        out.push(')');
    }
}

/// Renders a term with minimal parentheses; `parse(pretty(g))` returns a
/// term structurally equal to `g`.
pub fn pretty(g: &GChor) -> String {
    let mut out = String::new();
    pretty_into(g, 0, &mut out);
    out
}

impl fmt::Display for GChor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}
