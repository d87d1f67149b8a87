use crate::entailment::{is_fresh, Name, FRESH_PREFIX};
use crate::error::{Error, Result};

use super::{ABoxAxiom, ConceptExpr, NameKind, Ontology, Signature, TBoxAxiom};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Tok<'a> {
    Name(&'a str),
    Open,
    Close,
}

struct Lexer<'a> {
    line: usize,
    toks: Vec<(Tok<'a>, usize)>,
    pos: usize,
    end_col: usize,
}

impl<'a> Lexer<'a> {
    fn new(line_no: usize, text: &'a str) -> Result<Self> {
        let mut toks = Vec::new();
        let mut chars = text.char_indices().peekable();
        let col_of = |byte: usize| text[..byte].chars().count() + 1;
        while let Some(&(i, c)) = chars.peek() {
            match c {
                '(' => {
                    toks.push((Tok::Open, col_of(i)));
                    chars.next();
                }
                ')' => {
                    toks.push((Tok::Close, col_of(i)));
                    chars.next();
                }
                c if c.is_whitespace() => {
                    chars.next();
                }
                c if is_name_char(c) => {
                    let start = i;
                    let mut end = i;
                    while let Some(&(j, c)) = chars.peek() {
                        if !is_name_char(c) {
                            break;
                        }
                        end = j + c.len_utf8();
                        chars.next();
                    }
                    toks.push((Tok::Name(&text[start..end]), col_of(start)));
                }
                other => {
                    return Err(Error::Syntax {
                        line: line_no,
                        column: col_of(i),
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
        Ok(Lexer {
            line: line_no,
            toks,
            pos: 0,
            end_col: text.chars().count() + 1,
        })
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let column = self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end_col);
        Error::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).map(|(t, _)| *t)
    }

    fn next(&mut self) -> Option<Tok<'a>> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn expect_open(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::Open) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err("expected `(`")),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err("expected `)`")),
        }
    }

    fn name(&mut self, what: &str) -> Result<&'a str> {
        match self.peek() {
            Some(Tok::Name(n)) if !self.followed_by_open() => {
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err(format!("expected {what} name"))),
        }
    }

    fn followed_by_open(&self) -> bool {
        matches!(self.toks.get(self.pos + 1), Some((Tok::Open, _)))
    }

    fn concept(&mut self) -> Result<ConceptExpr> {
        let Some(Tok::Name(word)) = self.peek() else {
            return Err(self.err("expected concept expression"));
        };
        if !self.followed_by_open() {
            self.pos += 1;
            return Ok(match word {
                "Top" => ConceptExpr::Top,
                "Bottom" => ConceptExpr::Bottom,
                _ => ConceptExpr::Atomic(word.into()),
            });
        }
        match word {
            "And" => {
                self.pos += 1;
                self.expect_open()?;
                let mut members = vec![self.concept()?];
                while self.peek() != Some(Tok::Close) {
                    members.push(self.concept()?);
                }
                if members.len() < 2 {
                    return Err(self.err("And needs at least two operands"));
                }
                self.expect_close()?;
                Ok(ConceptExpr::and(members))
            }
            "Some" => {
                self.pos += 1;
                self.expect_open()?;
                let role = self.name("role")?;
                let filler = self.concept()?;
                self.expect_close()?;
                Ok(ConceptExpr::some(role, filler))
            }
            "Nom" => {
                self.pos += 1;
                self.expect_open()?;
                let ind = self.name("individual")?;
                self.expect_close()?;
                Ok(ConceptExpr::nominal(ind))
            }
            other => Err(self.err(format!("unknown constructor `{other}`"))),
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '/' | ':' | '-')
}

enum Axiom {
    T(TBoxAxiom),
    A(ABoxAxiom),
}

fn parse_line(line_no: usize, text: &str) -> Result<Option<Axiom>> {
    let mut lx = Lexer::new(line_no, text)?;
    let Some(Tok::Name(kw)) = lx.next() else {
        if lx.toks.is_empty() {
            return Ok(None);
        }
        lx.pos = 0;
        return Err(lx.err("expected axiom keyword"));
    };
    lx.expect_open()?;
    let ax = match kw {
        "SubClassOf" => {
            let lhs = lx.concept()?;
            let rhs = lx.concept()?;
            Axiom::T(TBoxAxiom::Gci { lhs, rhs })
        }
        "SubRole" => {
            let sub = lx.name("role")?.into();
            let sup = lx.name("role")?.into();
            Axiom::T(TBoxAxiom::RoleInclusion { sub, sup })
        }
        "RoleChain" => {
            let first = lx.name("role")?.into();
            let second = lx.name("role")?.into();
            let sup = lx.name("role")?.into();
            Axiom::T(TBoxAxiom::RoleChain { first, second, sup })
        }
        "ClassAssert" => {
            let concept = lx.concept()?;
            let individual = lx.name("individual")?.into();
            Axiom::A(ABoxAxiom::ClassAssertion { concept, individual })
        }
        "RoleAssert" => {
            let role = lx.name("role")?.into();
            let subject = lx.name("individual")?.into();
            let object = lx.name("individual")?.into();
            Axiom::A(ABoxAxiom::RoleAssertion { role, subject, object })
        }
        "SameInd" => {
            let a: Name = lx.name("individual")?.into();
            let b: Name = lx.name("individual")?.into();
            Axiom::A(ABoxAxiom::Equality(a, b))
        }
        "DiffInd" => {
            let a: Name = lx.name("individual")?.into();
            let b: Name = lx.name("individual")?.into();
            if a == b {
                lx.pos -= 1;
                return Err(lx.err(format!("DiffInd({a} {a}) is trivially inconsistent")));
            }
            Axiom::A(ABoxAxiom::Inequality(a, b))
        }
        other => {
            lx.pos = 0;
            return Err(lx.err(format!("unknown axiom `{other}`")));
        }
    };
    lx.expect_close()?;
    if lx.peek().is_some() {
        return Err(lx.err("trailing input after axiom"));
    }
    Ok(Some(ax))
}

/// Parses a document in the line-oriented functional syntax: one axiom per
/// line, `#` starts a comment.
pub fn parse_ontology(text: &str) -> Result<Ontology> {
    let mut ont = Ontology::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        match parse_line(line_no, body)? {
            None => {}
            Some(Axiom::T(t)) => {
                register_tbox(&mut ont.signature, &t, line_no)?;
                ont.tbox.push(t);
            }
            Some(Axiom::A(a)) => {
                register_abox(&mut ont.signature, &a, line_no)?;
                ont.abox.push(a);
            }
        }
    }
    Ok(ont)
}

fn register(sig: &mut Signature, kind: NameKind, name: &Name, line: usize) -> Result<()> {
    if kind == NameKind::Concept && is_fresh(name) {
        return Err(Error::Syntax {
            line,
            column: 1,
            message: format!("concept names starting with `{FRESH_PREFIX}` are reserved"),
        });
    }
    sig.insert(kind, name).map_err(|held| Error::SignatureConflict {
        name: name.to_string(),
        first: held.label(),
        second: kind.label(),
    })
}

pub(crate) fn register_tbox(sig: &mut Signature, ax: &TBoxAxiom, line: usize) -> Result<()> {
    match ax {
        TBoxAxiom::Gci { lhs, rhs } => {
            let mut res = Ok(());
            let mut visit = |k: NameKind, n: &Name| {
                if res.is_ok() {
                    res = register(sig, k, n, line);
                }
            };
            lhs.visit_names(&mut visit);
            rhs.visit_names(&mut visit);
            res
        }
        TBoxAxiom::RoleInclusion { sub, sup } => {
            register(sig, NameKind::Role, sub, line)?;
            register(sig, NameKind::Role, sup, line)
        }
        TBoxAxiom::RoleChain { first, second, sup } => {
            register(sig, NameKind::Role, first, line)?;
            register(sig, NameKind::Role, second, line)?;
            register(sig, NameKind::Role, sup, line)
        }
    }
}

pub(crate) fn register_abox(sig: &mut Signature, ax: &ABoxAxiom, line: usize) -> Result<()> {
    match ax {
        ABoxAxiom::ClassAssertion { concept, individual } => {
            let mut res = Ok(());
            concept.visit_names(&mut |k, n| {
                if res.is_ok() {
                    res = register(sig, k, n, line);
                }
            });
            res?;
            register(sig, NameKind::Individual, individual, line)
        }
        ABoxAxiom::RoleAssertion { role, subject, object } => {
            register(sig, NameKind::Role, role, line)?;
            register(sig, NameKind::Individual, subject, line)?;
            register(sig, NameKind::Individual, object, line)
        }
        ABoxAxiom::Equality(a, b) | ABoxAxiom::Inequality(a, b) => {
            register(sig, NameKind::Individual, a, line)?;
            register(sig, NameKind::Individual, b, line)
        }
    }
}
