//! The formula language: abstract syntax, concrete syntax, and the
//! positive-fragment classifier.
//!
//! Concrete syntax (ASCII, whitespace insignificant):
//!
//! ```text
//! formula := impl
//! impl    := disj ("->" impl)?                  right associative
//! disj    := conj ("|" conj)*
//! conj    := unary ("&" unary)*
//! unary   := "~" unary | "K{" agents "}" unary | "Sb[" agent "]" unary
//!          | "<Sb>[" agent "]" unary | "B[" agent "]" unary
//!          | "alive{" agents "}" | "dead{" agents "}"
//!          | "true" | "false" | ident | "(" formula ")"
//! agents  := agent ("," agent)*
//! ```
//!
//! `alive{G}` and `dead{G}` are sugar for `~K{G} false` and `K{G} false`.
//! With the experimental flag enabled, `Sb{G}` and `B{G}` additionally parse
//! to the group-plausibility modalities.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Agent groups are ordered sets, so structural equality and printing do not
/// depend on the order in which agents were written.
pub type Group = BTreeSet<String>;

/// Builds a [`Group`] from anything iterable over string-likes.
pub fn group<I, S>(agents: I) -> Group
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    agents.into_iter().map(Into::into).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String),
    Top,
    Bottom,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// Distributed knowledge of a group, `K{G}`.
    Know(Group, Box<Formula>),
    /// Safe belief `Sb[a]`: truth in every indistinguishable world at least
    /// as plausible as the current one.
    SafeBelief(String, Box<Formula>),
    /// `<Sb>[a]`, the dual of safe belief.
    DualSafeBelief(String, Box<Formula>),
    /// Most-plausible belief `B[a]`: truth in all minimally implausible
    /// indistinguishable worlds.
    Belief(String, Box<Formula>),
    /// Group safe belief `Sb{G}` over the group plausibility preorder
    /// (experimental).
    GroupSafeBelief(Group, Box<Formula>),
    /// Group most-plausible belief `B{G}` (experimental).
    GroupBelief(Group, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)] // constructor, not an operator impl
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    /// `(l -> r) & (r -> l)`; convenient for biconditional scheme instances.
    pub fn iff(l: Formula, r: Formula) -> Self {
        Formula::and(
            Formula::implies(l.clone(), r.clone()),
            Formula::implies(r, l),
        )
    }

    pub fn know<I, S>(agents: I, f: Formula) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Formula::Know(group(agents), Box::new(f))
    }

    pub fn safe_belief(agent: impl Into<String>, f: Formula) -> Self {
        Formula::SafeBelief(agent.into(), Box::new(f))
    }

    pub fn dual_safe_belief(agent: impl Into<String>, f: Formula) -> Self {
        Formula::DualSafeBelief(agent.into(), Box::new(f))
    }

    pub fn belief(agent: impl Into<String>, f: Formula) -> Self {
        Formula::Belief(agent.into(), Box::new(f))
    }

    pub fn group_safe_belief<I, S>(agents: I, f: Formula) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Formula::GroupSafeBelief(group(agents), Box::new(f))
    }

    pub fn group_belief<I, S>(agents: I, f: Formula) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Formula::GroupBelief(group(agents), Box::new(f))
    }

    /// `alive{G}`, sugar for `~K{G} false`.
    pub fn alive<I, S>(agents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Formula::not(Formula::know(agents, Formula::Bottom))
    }

    /// `dead{G}`, sugar for `K{G} false`.
    pub fn dead<I, S>(agents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Formula::know(agents, Formula::Bottom)
    }

    fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => Vec::new(),
            Formula::Not(g)
            | Formula::Know(_, g)
            | Formula::SafeBelief(_, g)
            | Formula::DualSafeBelief(_, g)
            | Formula::Belief(_, g)
            | Formula::GroupSafeBelief(_, g)
            | Formula::GroupBelief(_, g) => vec![g],
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => vec![l, r],
        }
    }

    /// Post-order listing of subformulas, children before parents, with
    /// structural duplicates removed.
    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut seen: std::collections::HashSet<&Formula> = std::collections::HashSet::new();
        let mut out = Vec::new();
        fn walk<'a>(
            f: &'a Formula,
            seen: &mut std::collections::HashSet<&'a Formula>,
            out: &mut Vec<&'a Formula>,
        ) {
            for c in f.children() {
                walk(c, seen, out);
            }
            if seen.insert(f) {
                out.push(f);
            }
        }
        walk(self, &mut seen, &mut out);
        out
    }

    /// All atomic proposition names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for f in self.subformulas() {
            if let Formula::Atom(p) = f {
                out.insert(p.as_str());
            }
        }
        out
    }

    /// All agent names occurring in the formula, including group members.
    pub fn agents(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for f in self.subformulas() {
            match f {
                Formula::Know(g, _) | Formula::GroupSafeBelief(g, _) | Formula::GroupBelief(g, _) => {
                    out.extend(g.iter().map(String::as_str));
                }
                Formula::SafeBelief(a, _)
                | Formula::DualSafeBelief(a, _)
                | Formula::Belief(a, _) => {
                    out.insert(a.as_str());
                }
                _ => {}
            }
        }
        out
    }

    /// All groups used by knowledge modalities; the relational evaluator
    /// needs one accessibility relation per such group.
    pub fn know_groups(&self) -> BTreeSet<&Group> {
        let mut out = BTreeSet::new();
        for f in self.subformulas() {
            if let Formula::Know(g, _) = f {
                out.insert(g);
            }
        }
        out
    }

    /// Whether the formula uses the experimental group-plausibility
    /// modalities.
    pub fn uses_experimental(&self) -> bool {
        self.subformulas().iter().any(|f| {
            matches!(f, Formula::GroupSafeBelief(..) | Formula::GroupBelief(..))
        })
    }

    /// True when the formula contains no modal operator at all. These are
    /// exactly the formulas of the propositional layer of the positive
    /// grammar.
    pub fn is_propositional(&self) -> bool {
        self.subformulas().iter().all(|f| {
            matches!(
                f,
                Formula::Atom(_)
                    | Formula::Top
                    | Formula::Bottom
                    | Formula::Not(_)
                    | Formula::And(..)
                    | Formula::Or(..)
                    | Formula::Implies(..)
            )
        })
    }

    /// Positive-fragment membership: propositional formulas combined by
    /// conjunction, disjunction, and knowledge modalities only. Belief
    /// operators and knowledge under a negation (or in the scope of an
    /// implication) fall outside the fragment.
    pub fn is_positive(&self) -> bool {
        match self {
            Formula::And(l, r) | Formula::Or(l, r) => l.is_positive() && r.is_positive(),
            Formula::Know(_, g) => g.is_positive(),
            other => other.is_propositional(),
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

// Precedence levels used by both the printer and the parser. Prefix
// operators bind tightest, then `&`, then `|`, then `->`.
const PREC_IMPLIES: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

fn join_group(g: &Group) -> String {
    g.iter().cloned().collect::<Vec<_>>().join(",")
}

fn write_prec(f: &Formula, min: u8, out: &mut String) {
    // Sugared forms are self-delimiting, print them before anything else.
    if let Formula::Know(g, inner) = f {
        if **inner == Formula::Bottom {
            out.push_str(&format!("dead{{{}}}", join_group(g)));
            return;
        }
    }
    if let Formula::Not(inner) = f {
        if let Formula::Know(g, body) = &**inner {
            if **body == Formula::Bottom {
                out.push_str(&format!("alive{{{}}}", join_group(g)));
                return;
            }
        }
    }

    match f {
        Formula::Atom(p) => out.push_str(p),
        Formula::Top => out.push_str("true"),
        Formula::Bottom => out.push_str("false"),
        Formula::Not(g) => {
            out.push('~');
            write_prec(g, PREC_UNARY, out);
        }
        Formula::Know(g, body) => {
            out.push_str(&format!("K{{{}}} ", join_group(g)));
            write_prec(body, PREC_UNARY, out);
        }
        Formula::SafeBelief(a, body) => {
            out.push_str(&format!("Sb[{a}] "));
            write_prec(body, PREC_UNARY, out);
        }
        Formula::DualSafeBelief(a, body) => {
            out.push_str(&format!("<Sb>[{a}] "));
            write_prec(body, PREC_UNARY, out);
        }
        Formula::Belief(a, body) => {
            out.push_str(&format!("B[{a}] "));
            write_prec(body, PREC_UNARY, out);
        }
        Formula::GroupSafeBelief(g, body) => {
            out.push_str(&format!("Sb{{{}}} ", join_group(g)));
            write_prec(body, PREC_UNARY, out);
        }
        Formula::GroupBelief(g, body) => {
            out.push_str(&format!("B{{{}}} ", join_group(g)));
            write_prec(body, PREC_UNARY, out);
        }
        Formula::And(l, r) => {
            let wrap = PREC_AND < min;
            if wrap {
                out.push('(');
            }
            write_prec(l, PREC_AND, out);
            out.push_str(" & ");
            write_prec(r, PREC_AND + 1, out);
            if wrap {
                out.push(')');
            }
        }
        Formula::Or(l, r) => {
            let wrap = PREC_OR < min;
            if wrap {
                out.push('(');
            }
            write_prec(l, PREC_OR, out);
            out.push_str(" | ");
            write_prec(r, PREC_OR + 1, out);
            if wrap {
                out.push(')');
            }
        }
        Formula::Implies(l, r) => {
            let wrap = PREC_IMPLIES < min;
            if wrap {
                out.push('(');
            }
            write_prec(l, PREC_IMPLIES + 1, out);
            out.push_str(" -> ");
            write_prec(r, PREC_IMPLIES, out);
            if wrap {
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Formula {
    /// Minimal-parentheses rendering; `parse(f.to_string())` returns a
    /// structurally equal formula.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_prec(self, 0, &mut s);
        f.write_str(&s)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at line {line}, column {col}: found {found}, expected {}", expected.join(", "))]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub found: String,
    pub expected: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Amp,
    Pipe,
    Arrow,
    Tilde,
    Lt,
    Gt,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    struct Cursor {
        chars: Vec<char>,
        pos: usize,
        line: usize,
        col: usize,
    }
    impl Cursor {
        fn peek(&self) -> Option<char> {
            self.chars.get(self.pos).copied()
        }
        fn bump(&mut self) -> char {
            let c = self.chars[self.pos];
            self.pos += 1;
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
            c
        }
    }

    let mut cur = Cursor { chars: text.chars().collect(), pos: 0, line: 1, col: 1 };
    let mut toks = Vec::new();
    while let Some(c) = cur.peek() {
        let (tline, tcol) = (cur.line, cur.col);
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut name = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    name.push(cur.bump());
                } else {
                    break;
                }
            }
            let tok = match name.as_str() {
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(name),
            };
            toks.push(Spanned { tok, line: tline, col: tcol });
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '~' => Tok::Tilde,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            '-' => {
                cur.bump();
                if cur.peek() == Some('>') {
                    cur.bump();
                    toks.push(Spanned { tok: Tok::Arrow, line: tline, col: tcol });
                    continue;
                }
                return Err(ParseError {
                    line: tline,
                    col: tcol,
                    found: "`-`".into(),
                    expected: vec!["`->`"],
                });
            }
            other => {
                return Err(ParseError {
                    line: tline,
                    col: tcol,
                    found: format!("`{other}`"),
                    expected: vec!["a formula token"],
                });
            }
        };
        cur.bump();
        toks.push(Spanned { tok, line: tline, col: tcol });
    }
    toks.push(Spanned { tok: Tok::Eof, line: cur.line, col: cur.col });
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    experimental: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: Vec<&'static str>) -> ParseError {
        let sp = &self.toks[self.pos];
        ParseError {
            line: sp.line,
            col: sp.col,
            found: sp.tok.describe(),
            expected,
        }
    }

    fn expect(&mut self, tok: Tok, what: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.err(vec![what]))
        }
    }

    fn ident(&mut self, what: &'static str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(_) => match self.advance() {
                Tok::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.err(vec![what])),
        }
    }

    /// `{ a, b, ... }`; the braces are consumed here. Empty groups are a
    /// parse error.
    fn group_braces(&mut self) -> Result<Group, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        if *self.peek() == Tok::RBrace {
            return Err(self.err(vec!["an agent name (groups are nonempty)"]));
        }
        let mut g = Group::new();
        g.insert(self.ident("an agent name")?);
        while *self.peek() == Tok::Comma {
            self.advance();
            g.insert(self.ident("an agent name")?);
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(g)
    }

    /// `[ a ]`; the brackets are consumed here.
    fn agent_brackets(&mut self) -> Result<String, ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let a = self.ident("an agent name")?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(a)
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disj()?;
        if *self.peek() == Tok::Arrow {
            self.advance();
            let rhs = self.formula()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conj()?;
        while *self.peek() == Tok::Pipe {
            self.advance();
            f = Formula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.advance();
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.advance();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Lt => {
                // <Sb>[a] φ
                self.advance();
                let name = self.ident("`Sb`")?;
                if name != "Sb" {
                    return Err(self.err(vec!["`Sb`"]));
                }
                self.expect(Tok::Gt, "`>`")?;
                let a = self.agent_brackets()?;
                Ok(Formula::dual_safe_belief(a, self.unary()?))
            }
            Tok::True => {
                self.advance();
                Ok(Formula::Top)
            }
            Tok::False => {
                self.advance();
                Ok(Formula::Bottom)
            }
            Tok::LParen => {
                self.advance();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(name) => {
                // Contextual keywords: a modality head is an identifier
                // immediately followed by its bracket; otherwise the
                // identifier is an atom.
                match (name.as_str(), self.peek2()) {
                    ("K", Tok::LBrace) => {
                        self.advance();
                        let g = self.group_braces()?;
                        Ok(Formula::Know(g, Box::new(self.unary()?)))
                    }
                    ("Sb", Tok::LBracket) => {
                        self.advance();
                        let a = self.agent_brackets()?;
                        Ok(Formula::safe_belief(a, self.unary()?))
                    }
                    ("B", Tok::LBracket) => {
                        self.advance();
                        let a = self.agent_brackets()?;
                        Ok(Formula::belief(a, self.unary()?))
                    }
                    ("Sb", Tok::LBrace) => {
                        if !self.experimental {
                            return Err(self.err(vec![
                                "`Sb[agent]` (group safe belief `Sb{G}` needs the experimental syntax flag)",
                            ]));
                        }
                        self.advance();
                        let g = self.group_braces()?;
                        Ok(Formula::GroupSafeBelief(g, Box::new(self.unary()?)))
                    }
                    ("B", Tok::LBrace) => {
                        if !self.experimental {
                            return Err(self.err(vec![
                                "`B[agent]` (group belief `B{G}` needs the experimental syntax flag)",
                            ]));
                        }
                        self.advance();
                        let g = self.group_braces()?;
                        Ok(Formula::GroupBelief(g, Box::new(self.unary()?)))
                    }
                    ("alive", Tok::LBrace) => {
                        self.advance();
                        let g = self.group_braces()?;
                        Ok(Formula::Not(Box::new(Formula::Know(
                            g,
                            Box::new(Formula::Bottom),
                        ))))
                    }
                    ("dead", Tok::LBrace) => {
                        self.advance();
                        let g = self.group_braces()?;
                        Ok(Formula::Know(g, Box::new(Formula::Bottom)))
                    }
                    _ => {
                        self.advance();
                        Ok(Formula::Atom(name))
                    }
                }
            }
            _ => Err(self.err(vec![
                "`~`", "`K{`", "`Sb[`", "`<Sb>[`", "`B[`", "`alive{`", "`dead{`", "`true`",
                "`false`", "an atom", "`(`",
            ])),
        }
    }
}

/// Parses a formula; the experimental group modalities are rejected.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    parse_with(text, false)
}

/// Parses a formula, optionally admitting the experimental `Sb{G}` / `B{G}`
/// syntax.
pub fn parse_with(text: &str, experimental: bool) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, experimental };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err(vec!["end of input"]));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn atom(p: &str) -> Formula {
        Formula::atom(p)
    }

    #[test]
    fn parses_belief_over_dead_sugar() {
        let f = parse("B[a] dead{c}").unwrap();
        assert_eq!(
            f,
            Formula::belief("a", Formula::know(["c"], Formula::Bottom))
        );
    }

    #[test]
    fn parses_group_knowledge_with_implication() {
        let f = parse("K{a,b} (p -> ~q)").unwrap();
        assert_eq!(
            f,
            Formula::know(
                ["a", "b"],
                Formula::implies(atom("p"), Formula::not(atom("q")))
            )
        );
    }

    #[test]
    fn parses_dual_then_box() {
        let f = parse("<Sb>[a] Sb[a] p").unwrap();
        assert_eq!(
            f,
            Formula::dual_safe_belief("a", Formula::safe_belief("a", atom("p")))
        );
    }

    #[test]
    fn group_order_is_canonical() {
        assert_eq!(parse("K{b,a} p").unwrap(), parse("K{a,b} p").unwrap());
    }

    #[test]
    fn precedence_binds_and_over_or_over_implies() {
        let f = parse("p & q | r -> s").unwrap();
        assert_eq!(
            f,
            Formula::implies(
                Formula::or(Formula::and(atom("p"), atom("q")), atom("r")),
                atom("s")
            )
        );
    }

    #[test]
    fn implies_is_right_associative() {
        let f = parse("p -> q -> r").unwrap();
        assert_eq!(
            f,
            Formula::implies(atom("p"), Formula::implies(atom("q"), atom("r")))
        );
    }

    #[test]
    fn modality_argument_is_unary() {
        let f = parse("K{a} p & q").unwrap();
        assert_eq!(
            f,
            Formula::and(Formula::know(["a"], atom("p")), atom("q"))
        );
    }

    #[test]
    fn bare_modality_names_are_atoms() {
        assert_eq!(parse("K & Sb").unwrap(), Formula::and(atom("K"), atom("Sb")));
    }

    #[test]
    fn empty_group_is_a_parse_error() {
        let err = parse("K{} p").unwrap_err();
        assert_eq!((err.line, err.col), (1, 3));
    }

    #[test]
    fn reports_position_and_expectations() {
        let err = parse("p &\n& q").unwrap_err();
        assert_eq!((err.line, err.col), (2, 1));
        assert!(!err.expected.is_empty());
    }

    #[test]
    fn group_syntax_is_gated() {
        assert!(parse("Sb{a,b} p").is_err());
        assert!(parse("B{a,b} p").is_err());
        assert_eq!(
            parse_with("Sb{a,b} p", true).unwrap(),
            Formula::group_safe_belief(["a", "b"], atom("p"))
        );
        assert_eq!(
            parse_with("B{a} p", true).unwrap(),
            Formula::group_belief(["a"], atom("p"))
        );
    }

    #[test]
    fn prints_sugar_and_minimal_parens() {
        let f = Formula::belief("a", Formula::know(["c"], Formula::Bottom));
        assert_eq!(f.to_string(), "B[a] dead{c}");
        assert_eq!(atom("p").to_string(), "p");
        assert_eq!(
            Formula::and(atom("p"), Formula::or(atom("q"), atom("r"))).to_string(),
            "p & (q | r)"
        );
        assert_eq!(
            Formula::not(Formula::know(["a", "b"], Formula::Bottom)).to_string(),
            "alive{a,b}"
        );
        assert_eq!(
            Formula::or(Formula::and(atom("p"), atom("q")), atom("r")).to_string(),
            "p & q | r"
        );
        assert_eq!(
            Formula::implies(Formula::implies(atom("p"), atom("q")), atom("r")).to_string(),
            "(p -> q) -> r"
        );
        assert_eq!(
            Formula::not(Formula::and(atom("p"), atom("q"))).to_string(),
            "~(p & q)"
        );
    }

    #[test]
    fn subformulas_are_postorder_and_deduplicated() {
        let f = parse("p & q").unwrap();
        assert_eq!(f.subformulas(), vec![&atom("p"), &atom("q"), &f]);

        let f = parse("B[a] p").unwrap();
        assert_eq!(f.subformulas(), vec![&atom("p"), &f]);

        let f = parse("p & p").unwrap();
        assert_eq!(f.subformulas(), vec![&atom("p"), &f]);
    }

    #[test]
    fn positive_fragment_examples() {
        assert!(parse("K{a} (p & ~q)").unwrap().is_positive());
        assert!(!parse("~K{a} p").unwrap().is_positive());
        assert!(!parse("Sb[a] p").unwrap().is_positive());
        assert!(!parse("<Sb>[a] p").unwrap().is_positive());
        assert!(!parse("B[a] p").unwrap().is_positive());
        // Propositional formulas are positive whatever connectives they use.
        assert!(parse("~(p | q) -> r").unwrap().is_positive());
        // Knowledge in the scope of an implication is not.
        assert!(!parse("K{a} p -> q").unwrap().is_positive());
        // But disjunction and conjunction over knowledge are.
        assert!(parse("K{a} p | K{b} q & r").unwrap().is_positive());
        // alive/dead desugar to (negated) knowledge of falsum.
        assert!(parse("dead{a}").unwrap().is_positive());
        assert!(!parse("alive{a}").unwrap().is_positive());
    }

    #[test]
    fn positive_closed_under_atom_substitution() {
        // Replacing an atom by a propositional formula preserves positivity.
        fn substitute(f: &Formula, name: &str, with: &Formula) -> Formula {
            match f {
                Formula::Atom(p) if p == name => with.clone(),
                Formula::Atom(_) | Formula::Top | Formula::Bottom => f.clone(),
                Formula::Not(g) => Formula::not(substitute(g, name, with)),
                Formula::And(l, r) => Formula::and(
                    substitute(l, name, with),
                    substitute(r, name, with),
                ),
                Formula::Or(l, r) => {
                    Formula::or(substitute(l, name, with), substitute(r, name, with))
                }
                Formula::Implies(l, r) => Formula::implies(
                    substitute(l, name, with),
                    substitute(r, name, with),
                ),
                Formula::Know(g, b) => Formula::Know(g.clone(), Box::new(substitute(b, name, with))),
                Formula::SafeBelief(a, b) => {
                    Formula::safe_belief(a.clone(), substitute(b, name, with))
                }
                Formula::DualSafeBelief(a, b) => {
                    Formula::dual_safe_belief(a.clone(), substitute(b, name, with))
                }
                Formula::Belief(a, b) => Formula::belief(a.clone(), substitute(b, name, with)),
                Formula::GroupSafeBelief(g, b) => {
                    Formula::GroupSafeBelief(g.clone(), Box::new(substitute(b, name, with)))
                }
                Formula::GroupBelief(g, b) => {
                    Formula::GroupBelief(g.clone(), Box::new(substitute(b, name, with)))
                }
            }
        }

        let positive = parse("K{a} (~p & q) | K{b} p").unwrap();
        let prop = parse("~(r | s)").unwrap();
        let substituted = substitute(&positive, "p", &prop);
        assert!(substituted.is_positive());
    }

    // Strategy over the full language, used for round-trip properties.
    fn formula_strategy() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            prop::sample::select(vec!["p", "q", "r", "s_1", "K", "alive"])
                .prop_map(Formula::atom),
            Just(Formula::Top),
            Just(Formula::Bottom),
        ];
        let agents = || prop::sample::subsequence(vec!["a", "b", "c"], 1..=3);
        leaf.prop_recursive(5, 64, 3, move |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::implies(l, r)),
                (agents(), inner.clone()).prop_map(|(g, f)| Formula::know(g, f)),
                (prop::sample::select(vec!["a", "b", "c"]), inner.clone())
                    .prop_map(|(a, f)| Formula::safe_belief(a, f)),
                (prop::sample::select(vec!["a", "b", "c"]), inner.clone())
                    .prop_map(|(a, f)| Formula::dual_safe_belief(a, f)),
                (prop::sample::select(vec!["a", "b", "c"]), inner.clone())
                    .prop_map(|(a, f)| Formula::belief(a, f)),
                (agents(), inner.clone()).prop_map(|(g, f)| Formula::group_safe_belief(g, f)),
                (agents(), inner).prop_map(|(g, f)| Formula::group_belief(g, f)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(f in formula_strategy()) {
            let printed = f.to_string();
            let reparsed = parse_with(&printed, true)
                .unwrap_or_else(|e| panic!("printed `{printed}` failed to parse: {e}"));
            prop_assert_eq!(reparsed, f);
        }

        #[test]
        fn positive_closed_under_and_or_know(
            f in formula_strategy(),
            g in formula_strategy(),
        ) {
            if f.is_positive() && g.is_positive() {
                prop_assert!(Formula::and(f.clone(), g.clone()).is_positive());
                prop_assert!(Formula::or(f.clone(), g.clone()).is_positive());
                prop_assert!(Formula::know(["a"], f.clone()).is_positive());
            }
        }
    }
}
