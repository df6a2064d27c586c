//! Text and JSON forms of terms, substitutions, groups, elements and graphs.
//!
//! An identifier denotes a variable iff it is declared (or is a generated
//! `_fN` name); any other identifier is a function symbol, nullary when not
//! applied. Every `Display` output of the library parses back to an equal
//! value under the same declarations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::ShLinElement;
use crate::graph::{Edge, EdgeId, NodeId, ParallelSharingGraph};
use crate::group::SharingGroup;
use crate::term::{is_reserved_name, EquationSet, ExistentialSubstitution, Substitution, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at column {column}")]
pub struct ParseError {
    pub message: String,
    /// 1-based character column of the offending token.
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Punct(char),
    End,
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a BTreeSet<Var>,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits.parse().map_err(|_| ParseError {
                message: format!("number {digits} is too large"),
                column: col,
            })?;
            out.push((Tok::Int(n), col));
        } else if "(),/{}[]@^|=;".contains(c) {
            out.push((Tok::Punct(c), col));
            i += 1;
        } else {
            return Err(ParseError {
                message: format!("unexpected character {c:?}"),
                column: col,
            });
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

impl<'a> Parser<'a> {
    fn new(text: &str, vars: &'a BTreeSet<Var>) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            vars,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            message: message.into(),
            column: self.column(),
        })
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Punct(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.fail(format!("expected '{c}', found {}", describe(self.peek())))
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == word => {
                self.pos += 1;
                Ok(())
            }
            other => self.fail(format!("expected '{word}', found {}", describe(other))),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::End => Ok(()),
            other => self.fail(format!("unexpected {} after the end of input", describe(other))),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.next() {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos = self.pos.saturating_sub(usize::from(other != Tok::End));
                self.fail(format!("expected an identifier, found {}", describe(&other)))
            }
        }
    }

    fn is_var(&self, name: &str) -> bool {
        is_reserved_name(name) || self.vars.contains(&Var::new(name))
    }

    fn variable(&mut self) -> Result<Var, ParseError> {
        let col = self.column();
        let name = self.ident()?;
        if self.is_var(&name) {
            Ok(Var::new(name))
        } else {
            Err(ParseError {
                message: format!("{name} is not a declared variable"),
                column: col,
            })
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let col = self.column();
        let name = self.ident()?;
        if *self.peek() == Tok::Punct('(') {
            if self.is_var(&name) {
                return Err(ParseError {
                    message: format!("variable {name} cannot be applied to arguments"),
                    column: col,
                });
            }
            self.next();
            let mut args = vec![self.term()?];
            while self.eat(',') {
                args.push(self.term()?);
            }
            self.expect(')')?;
            Ok(Term::app(name, args))
        } else if self.is_var(&name) {
            Ok(Term::var(name))
        } else {
            Ok(Term::constant(name))
        }
    }

    fn substitution(&mut self) -> Result<Substitution, ParseError> {
        let col = self.column();
        self.expect('{')?;
        let mut bindings = Vec::new();
        if !self.eat('}') {
            loop {
                let x = self.variable()?;
                self.expect('/')?;
                bindings.push((x, self.term()?));
                if self.eat('}') {
                    break;
                }
                self.expect(',')?;
            }
        }
        Substitution::from_bindings(bindings).map_err(|e| ParseError {
            message: e.to_string(),
            column: col,
        })
    }

    fn at_group_end(&self) -> bool {
        matches!(self.peek(), Tok::End | Tok::Punct('|' | ',' | ']'))
    }

    fn group(&mut self) -> Result<SharingGroup, ParseError> {
        if *self.peek() == Tok::Int(0) {
            self.next();
            return Ok(SharingGroup::empty());
        }
        let mut counts = Vec::new();
        loop {
            let v = self.variable()?;
            let k = if self.eat('^') {
                match self.next() {
                    Tok::Int(k) if k > 0 && k <= u64::from(u32::MAX) => k as u32,
                    other => {
                        self.pos -= usize::from(other != Tok::End);
                        return self.fail("expected a positive multiplicity after '^'");
                    }
                }
            } else {
                1
            };
            counts.push((v, k));
            if self.at_group_end() {
                break;
            }
        }
        Ok(SharingGroup::from_counts(counts))
    }

    fn var_set(&mut self) -> Result<BTreeSet<Var>, ParseError> {
        self.expect('{')?;
        let mut out = BTreeSet::new();
        if self.eat('}') {
            return Ok(out);
        }
        loop {
            out.insert(self.variable()?);
            if self.eat('}') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(n) => format!("'{n}'"),
        Tok::Punct(c) => format!("'{c}'"),
        Tok::End => "end of input".into(),
    }
}

/// Parses a comma-separated list of variable names, e.g. `u,v,x`.
///
/// Generated `_fN` names cannot be declared.
pub fn parse_var_list(text: &str) -> Result<BTreeSet<Var>, ParseError> {
    let none = BTreeSet::new();
    let mut p = Parser::new(text, &none)?;
    let mut out = BTreeSet::new();
    if *p.peek() == Tok::End {
        return Ok(out);
    }
    loop {
        let col = p.column();
        let name = p.ident()?;
        if is_reserved_name(&name) {
            return Err(ParseError {
                message: format!("{name} is a reserved name"),
                column: col,
            });
        }
        out.insert(Var::new(name));
        if *p.peek() == Tok::End {
            return Ok(out);
        }
        p.expect(',')?;
    }
}

pub fn parse_term(text: &str, vars: &BTreeSet<Var>) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, vars)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// `{x/t, ...}` or `{}`.
pub fn parse_substitution(text: &str, vars: &BTreeSet<Var>) -> Result<Substitution, ParseError> {
    let mut p = Parser::new(text, vars)?;
    let s = p.substitution()?;
    p.finish()?;
    Ok(s)
}

/// `0`, or factors `x^k` separated by whitespace.
pub fn parse_group(text: &str, vars: &BTreeSet<Var>) -> Result<SharingGroup, ParseError> {
    let mut p = Parser::new(text, vars)?;
    let g = p.group()?;
    p.finish()?;
    Ok(g)
}

/// Groups separated by `|`; blank text is the empty set.
pub fn parse_group_set(text: &str, vars: &BTreeSet<Var>) -> Result<BTreeSet<SharingGroup>, ParseError> {
    let mut p = Parser::new(text, vars)?;
    let mut out = BTreeSet::new();
    if *p.peek() == Tok::End {
        return Ok(out);
    }
    loop {
        out.insert(p.group()?);
        if *p.peek() == Tok::End {
            return Ok(out);
        }
        p.expect('|')?;
    }
}

/// `[B1, ..., Bn] @ {U}` or `bottom @ {U}`. The universe declares the
/// variables the groups may mention; `[]` denotes the element `{∅}`.
pub fn parse_element(text: &str) -> Result<ShLinElement, ParseError> {
    let none = BTreeSet::new();
    let mut p = Parser::new(text, &none)?;
    // the universe comes last, so find it first
    let at = p
        .toks
        .iter()
        .rposition(|(t, _)| *t == Tok::Punct('@'))
        .ok_or_else(|| ParseError {
            message: "expected '@' followed by the universe".into(),
            column: p.toks.last().map_or(1, |t| t.1),
        })?;
    let universe = {
        let mut tail = Parser {
            toks: p.toks[at + 1..].to_vec(),
            pos: 0,
            vars: &none,
        };
        let mut u = BTreeSet::new();
        tail.expect('{')?;
        if !tail.eat('}') {
            loop {
                let col = tail.column();
                let name = tail.ident()?;
                if is_reserved_name(&name) {
                    return Err(ParseError {
                        message: format!("{name} is a reserved name"),
                        column: col,
                    });
                }
                u.insert(Var::new(name));
                if tail.eat('}') {
                    break;
                }
                tail.expect(',')?;
            }
        }
        tail.finish()?;
        u
    };
    p.vars = &universe;

    let start = p.column();
    if *p.peek() == Tok::Ident("bottom".into()) {
        p.expect_keyword("bottom")?;
        p.expect('@')?;
        if p.pos != at + 1 {
            return p.fail("unexpected '@'");
        }
        return Ok(ShLinElement::bottom(universe));
    }
    p.expect('[')?;
    let mut groups = vec![SharingGroup::empty()];
    if !p.eat(']') {
        loop {
            groups.push(p.group()?);
            if p.eat(']') {
                break;
            }
            p.expect(',')?;
        }
    }
    p.expect('@')?;
    if p.pos != at + 1 {
        return p.fail("unexpected '@'");
    }
    ShLinElement::new(universe, groups).map_err(|e| ParseError {
        message: e.to_string(),
        column: start,
    })
}

/// `{x/t, ...} @ {U}`: an existential substitution as printed canonically.
pub fn parse_existential(text: &str, vars: &BTreeSet<Var>) -> Result<ExistentialSubstitution, ParseError> {
    let mut p = Parser::new(text, vars)?;
    let col = p.column();
    let s = p.substitution()?;
    p.expect('@')?;
    let u = p.var_set()?;
    p.finish()?;
    ExistentialSubstitution::new(s, u).map_err(|e| ParseError {
        message: e.to_string(),
        column: col,
    })
}

/// `l = r; ...`, with an optional trailing `;`.
pub fn parse_equations(text: &str, vars: &BTreeSet<Var>) -> Result<EquationSet, ParseError> {
    let mut p = Parser::new(text, vars)?;
    let mut out = EquationSet::new();
    while *p.peek() != Tok::End {
        let l = p.term()?;
        p.expect('=')?;
        let r = p.term()?;
        out.insert(l, r);
        if !p.eat(';') {
            break;
        }
    }
    p.finish()?;
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    nodes: Vec<NodeDoc>,
    layers: Vec<Vec<EdgeDoc>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: u32,
    label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: u32,
    src: u32,
    tgt: u32,
}

/// Reads the graph exchange format
/// `{"nodes":[{"id","label"}], "layers":[[{"id","src","tgt"}]]}`.
pub fn parse_graph_json(text: &str, vars: &BTreeSet<Var>) -> Result<ParallelSharingGraph, ParseError> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| ParseError {
        message: format!("invalid graph JSON: {e}"),
        column: e.column(),
    })?;
    let mut labels = BTreeMap::new();
    for node in doc.nodes {
        let label = parse_group(&node.label, vars).map_err(|e| ParseError {
            message: format!("label of node {}: {}", node.id, e.message),
            column: e.column,
        })?;
        if labels.insert(NodeId(node.id), label).is_some() {
            return Err(ParseError {
                message: format!("node {} is declared more than once", node.id),
                column: 1,
            });
        }
    }
    let layers = doc
        .layers
        .into_iter()
        .map(|l| {
            l.into_iter()
                .map(|e| {
                    (
                        EdgeId(e.id),
                        Edge {
                            src: NodeId(e.src),
                            tgt: NodeId(e.tgt),
                        },
                    )
                })
                .collect()
        })
        .collect();
    ParallelSharingGraph::new(labels, layers).map_err(|e| ParseError {
        message: e.to_string(),
        column: 1,
    })
}

pub fn graph_to_json(graph: &ParallelSharingGraph) -> serde_json::Value {
    let doc = GraphDoc {
        nodes: graph
            .labels()
            .iter()
            .map(|(n, l)| NodeDoc {
                id: n.0,
                label: l.to_string(),
            })
            .collect(),
        layers: (0..graph.layer_count())
            .map(|i| {
                graph
                    .layer_edges(i)
                    .iter()
                    .map(|(id, e)| EdgeDoc {
                        id: id.0,
                        src: e.src.0,
                        tgt: e.tgt.0,
                    })
                    .collect()
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("graphs serialize")
}

/// `{"universe": [...], "groups": [...]}` with groups in display order and
/// the empty group left out; the element without groups has `"groups": null`.
pub fn element_to_json(a: &ShLinElement) -> serde_json::Value {
    let groups = if a.is_bottom() {
        serde_json::Value::Null
    } else {
        a.display_groups().iter().map(|g| g.to_string()).collect()
    };
    serde_json::json!({
        "universe": a.universe().iter().map(|v| v.name()).collect::<Vec<_>>(),
        "groups": groups,
    })
}
