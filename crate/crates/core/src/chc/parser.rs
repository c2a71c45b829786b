//! Reader for the clause format:
//!
//! ```text
//! % comment
//! :- initial(init/2).
//! c1. init(A,B) :- true.
//! c2. if(A,B) :- A0 =< 100, A = 100 - A0, init(A0,B).
//! false :- A =< 0, B = 0, while(A,B).
//! ```

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{Atom, Clause, Pred, Program};
use crate::error::{Error, Result};
use crate::linarith::{ConstraintConj, LinConstraint, LinTerm, Var};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(BigInt),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    Slash,
    Plus,
    Minus,
    Star,
    Eq,
    Le,
    Ge,
    Lt,
    Gt,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let push = |tok: Tok, n: usize, out: &mut Vec<Token>| {
            out.push(Token {
                tok,
                line: l0,
                col: c0,
            });
            n
        };
        let n = match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => 1,
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => push(Tok::LParen, 1, &mut out),
            ')' => push(Tok::RParen, 1, &mut out),
            ',' => push(Tok::Comma, 1, &mut out),
            '.' => push(Tok::Dot, 1, &mut out),
            '/' => push(Tok::Slash, 1, &mut out),
            '+' => push(Tok::Plus, 1, &mut out),
            '-' => push(Tok::Minus, 1, &mut out),
            '*' => push(Tok::Star, 1, &mut out),
            ':' if chars.get(i + 1) == Some(&'-') => push(Tok::Neck, 2, &mut out),
            '=' if chars.get(i + 1) == Some(&'<') => push(Tok::Le, 2, &mut out),
            '=' => push(Tok::Eq, 1, &mut out),
            '>' if chars.get(i + 1) == Some(&'=') => push(Tok::Ge, 2, &mut out),
            '>' => push(Tok::Gt, 1, &mut out),
            '<' => push(Tok::Lt, 1, &mut out),
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                push(Tok::Int(s.parse().expect("digits")), j - i, &mut out)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let tok = if c.is_uppercase() || c == '_' {
                    Tok::Var(s)
                } else {
                    Tok::Ident(s)
                };
                push(tok, j - i, &mut out)
            }
            other => {
                return Err(Error::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        };
        i += n;
        col += n;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// A body literal before flattening.
enum Literal {
    Constraint(LinConstraint),
    Atom {
        pred: String,
        args: Vec<LinTerm>,
        line: usize,
        col: usize,
    },
    True,
}

struct RawClause {
    label: Option<String>,
    head: Option<(String, Vec<LinTerm>)>,
    body: Vec<Literal>,
    line: usize,
    col: usize,
}

enum Item {
    Clause(RawClause),
    Initial(String, usize),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    names: BTreeMap<String, Var>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {:?}", self.peek()))
        }
    }

    fn var(&mut self, name: &str) -> Var {
        *self
            .names
            .entry(name.to_string())
            .or_insert_with(|| Var::named(name))
    }

    fn item(&mut self) -> Result<Item> {
        let (line, col) = self.here();
        if *self.peek() == Tok::Neck {
            self.bump();
            return self.directive();
        }
        let mut label = None;
        if let Tok::Ident(name) = self.peek().clone() {
            if *self.peek_at(1) == Tok::Dot && name != "false" {
                self.bump();
                self.bump();
                label = Some(name);
            }
        }
        let head = self.head()?;
        let mut body = Vec::new();
        match self.bump() {
            Tok::Dot => {}
            Tok::Neck => {
                loop {
                    body.push(self.literal()?);
                    match self.bump() {
                        Tok::Comma => continue,
                        Tok::Dot => break,
                        other => {
                            self.pos -= 1;
                            return self.error(format!("expected ',' or '.', found {other:?}"));
                        }
                    }
                }
            }
            other => {
                self.pos -= 1;
                return self.error(format!("expected ':-' or '.', found {other:?}"));
            }
        }
        Ok(Item::Clause(RawClause {
            label,
            head,
            body,
            line,
            col,
        }))
    }

    fn directive(&mut self) -> Result<Item> {
        match self.bump() {
            Tok::Ident(d) if d == "initial" => {}
            _ => {
                self.pos -= 1;
                return self.error("unknown directive");
            }
        }
        self.expect(Tok::LParen, "'('")?;
        let name = match self.bump() {
            Tok::Ident(n) => n,
            _ => {
                self.pos -= 1;
                return self.error("expected predicate name");
            }
        };
        self.expect(Tok::Slash, "'/'")?;
        let arity = match self.bump() {
            Tok::Int(k) => usize::try_from(k).or_else(|_| self.error("arity out of range"))?,
            _ => {
                self.pos -= 1;
                return self.error("expected arity");
            }
        };
        self.expect(Tok::RParen, "')'")?;
        self.expect(Tok::Dot, "'.'")?;
        Ok(Item::Initial(name, arity))
    }

    /// `None` stands for `false`.
    fn head(&mut self) -> Result<Option<(String, Vec<LinTerm>)>> {
        match self.bump() {
            Tok::Ident(n) if n == "false" => Ok(None),
            Tok::Ident(n) => {
                let args = self.args()?;
                Ok(Some((n, args)))
            }
            other => {
                self.pos -= 1;
                self.error(format!("expected clause head, found {other:?}"))
            }
        }
    }

    fn args(&mut self) -> Result<Vec<LinTerm>> {
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if *self.peek() == Tok::RParen {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            match self.bump() {
                Tok::Comma => continue,
                Tok::RParen => return Ok(args),
                other => {
                    self.pos -= 1;
                    return self.error(format!("expected ',' or ')', found {other:?}"));
                }
            }
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        let (line, col) = self.here();
        if let Tok::Ident(n) = self.peek().clone() {
            if n == "true" {
                self.bump();
                return Ok(Literal::True);
            }
            if n == "false" {
                return Err(Error::FalseInBody { line, col });
            }
            self.bump();
            let args = self.args()?;
            return Ok(Literal::Atom {
                pred: n,
                args,
                line,
                col,
            });
        }
        let lhs = self.expr()?;
        let rel = self.bump();
        let rhs = self.expr()?;
        let c = match rel {
            Tok::Eq => LinConstraint::eq(&lhs, &rhs),
            Tok::Le => LinConstraint::le(&lhs, &rhs),
            Tok::Ge => LinConstraint::ge(&lhs, &rhs),
            Tok::Lt => LinConstraint::lt(&lhs, &rhs),
            Tok::Gt => LinConstraint::gt(&lhs, &rhs),
            other => {
                return Err(Error::Syntax {
                    line,
                    col,
                    msg: format!("expected a relation, found {other:?}"),
                })
            }
        };
        Ok(Literal::Constraint(c))
    }

    fn expr(&mut self) -> Result<LinTerm> {
        let mut acc = match self.peek() {
            Tok::Minus => {
                self.bump();
                let t = self.product()?;
                t.scale(&-BigRational::from_integer(1.into()))
            }
            Tok::Plus => {
                self.bump();
                self.product()?
            }
            _ => self.product()?,
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = acc.add(&self.product()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.sub(&self.product()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<LinTerm> {
        let (line, col) = self.here();
        let mut acc = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.factor()?;
            acc = if acc.is_constant() {
                rhs.scale(acc.constant_part())
            } else if rhs.is_constant() {
                acc.scale(rhs.constant_part())
            } else {
                return Err(Error::Nonlinear { line, col });
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<LinTerm> {
        match self.bump() {
            Tok::Int(k) => Ok(LinTerm::constant(k)),
            Tok::Var(name) => Ok(LinTerm::var(self.var(&name))),
            Tok::Minus => Ok(self.factor()?.scale(&-BigRational::from_integer(1.into()))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            other => {
                self.pos -= 1;
                self.error(format!("expected a term, found {other:?}"))
            }
        }
    }
}

/// Turns a list of argument terms into distinct variables, adding the
/// binding equalities to `constr`.
fn flatten(args: Vec<LinTerm>, constr: &mut ConstraintConj) -> Vec<Var> {
    let mut out: Vec<Var> = Vec::with_capacity(args.len());
    for t in args {
        let plain = match t.coeffs().iter().next() {
            Some((v, k)) if t.coeffs().len() == 1 && t.constant_part().is_zero() && k == &one() => {
                Some(*v)
            }
            _ => None,
        };
        match plain {
            Some(v) if !out.contains(&v) => out.push(v),
            _ => {
                let f = Var::fresh();
                constr.insert(LinConstraint::eq(&LinTerm::var(f), &t));
                out.push(f);
            }
        }
    }
    out
}

fn one() -> BigRational {
    BigRational::from_integer(1.into())
}

/// Parses a program; the initial predicate comes from the `initial`
/// directive.
pub fn parse_program(text: &str) -> Result<Program> {
    parse_program_with(text, None)
}

/// Parses clauses without checking the initial predicate. The resulting
/// program has no initial predicates.
pub fn parse_clauses(text: &str) -> Result<Program> {
    let (clauses, _) = read_clauses(text)?;
    Ok(Program {
        clauses,
        initial: BTreeSet::new(),
        source_initial: Pred::falsum(),
        init_params: Vec::new(),
        origin: BTreeMap::new(),
        original_init_constr: None,
    })
}

fn read_clauses(text: &str) -> Result<(Vec<Clause>, Option<Pred>)> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        names: BTreeMap::new(),
    };
    let mut raw = Vec::new();
    let mut directive = None;
    while *p.peek() != Tok::Eof {
        p.names.clear();
        match p.item()? {
            Item::Clause(c) => raw.push(c),
            Item::Initial(n, k) => directive = Some((n, k)),
        }
    }

    let labels: BTreeSet<String> = raw.iter().filter_map(|c| c.label.clone()).collect();
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut next_auto = 1usize;
    let mut arities: BTreeMap<String, usize> = BTreeMap::new();
    let mut check_arity = |name: &str, k: usize| -> Result<Pred> {
        match arities.get(name) {
            Some(&a) if a != k => Err(Error::InconsistentArity(name.to_string())),
            _ => {
                arities.insert(name.to_string(), k);
                Ok(Pred::new(name, k))
            }
        }
    };

    let mut clauses = Vec::new();
    for rc in raw {
        let id = match rc.label {
            Some(l) => l,
            None => loop {
                let cand = format!("c{next_auto}");
                next_auto += 1;
                if !labels.contains(&cand) {
                    break cand;
                }
            },
        };
        if !used.insert(id.clone()) {
            return Err(Error::DuplicateClauseId(id));
        }
        let mut constr = ConstraintConj::top();
        let head = match rc.head {
            None => Atom::falsum(),
            Some((name, args)) => {
                if name == "true" {
                    return Err(Error::Syntax {
                        line: rc.line,
                        col: rc.col,
                        msg: "true cannot be a clause head".into(),
                    });
                }
                let pred = check_arity(&name, args.len())?;
                Atom::new(pred, flatten(args, &mut constr))
            }
        };
        let mut body = Vec::new();
        for lit in rc.body {
            match lit {
                Literal::True => {}
                Literal::Constraint(c) => constr.insert(c),
                Literal::Atom {
                    pred,
                    args,
                    line,
                    col,
                } => {
                    if pred == "false" {
                        return Err(Error::FalseInBody { line, col });
                    }
                    let pred = check_arity(&pred, args.len())?;
                    body.push(Atom::new(pred, flatten(args, &mut constr)));
                }
            }
        }
        clauses.push(Clause {
            id,
            head,
            constr,
            body,
        });
    }

    Ok((clauses, directive.map(|(n, k)| Pred::new(&n, k))))
}

/// Parses a program, with `initial` (name, arity) overriding any directive.
pub fn parse_program_with(text: &str, initial: Option<(&str, usize)>) -> Result<Program> {
    let (clauses, directive) = read_clauses(text)?;
    let init = match initial {
        Some((n, k)) => Pred::new(n, k),
        None => match directive {
            Some(p) => p,
            None => return Err(Error::InitialUndeclared),
        },
    };
    let init_clauses: Vec<&Clause> = clauses.iter().filter(|c| c.head.pred == init).collect();
    let in_body = clauses.iter().any(|c| c.body.iter().any(|a| a.pred == init));
    if init_clauses.is_empty() {
        return Err(if in_body {
            Error::InitialNotFacts(init.to_string())
        } else {
            Error::InitialUnused(init.to_string())
        });
    }
    if init_clauses.iter().any(|c| !c.is_fact()) {
        return Err(Error::InitialNotFacts(init.to_string()));
    }
    if !in_body {
        log::warn!("initial predicate {init} is never called");
    }
    let init_params = init_clauses[0]
        .head
        .args
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.name().starts_with('_') {
                Var::named(&format!("X{}", i + 1))
            } else {
                *v
            }
        })
        .collect();

    Ok(Program {
        clauses,
        initial: [init.clone()].into_iter().collect(),
        source_initial: init,
        init_params,
        origin: BTreeMap::new(),
        original_init_constr: None,
    })
}

/// Parses a comma-separated conjunction of constraints, e.g.
/// `"A =< 99, 2*A + B = 200"`. `true` denotes the empty conjunction.
pub fn parse_conj(text: &str) -> Result<ConstraintConj> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        names: BTreeMap::new(),
    };
    let mut out = ConstraintConj::top();
    loop {
        match p.literal()? {
            Literal::True => {}
            Literal::Constraint(c) => out.insert(c),
            Literal::Atom { line, col, .. } => {
                return Err(Error::Syntax {
                    line,
                    col,
                    msg: "atoms are not allowed in a constraint".into(),
                })
            }
        }
        match p.bump() {
            Tok::Comma => continue,
            Tok::Eof => return Ok(out),
            other => {
                p.pos -= 1;
                return p.error(format!("expected ',' or end of input, found {other:?}"));
            }
        }
    }
}
