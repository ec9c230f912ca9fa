//! Terms and formulas of many-sorted first-order logic: concrete syntax,
//! printing, free variables, sort checking and fragment classification.
//!
//! Grammar, loosest first:
//!
//! ```text
//! formula := disj ('->' formula)?
//! disj    := conj ('\/' conj)*
//! conj    := unary ('/\' unary)*
//! unary   := '~' unary | ('forall' | 'exists') v ':' s '.' formula | atom
//! atom    := 'true' | 'false' | '(' formula ')' | term '=' term | name '(' terms ')' | name
//! ```

use crate::error::{Error, Result};
use crate::sigma::{Context, Signature};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    Eq(Term, Term),
    Rel(String, Vec<Term>),
    Top,
    Bottom,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Exists(String, String, Box<Formula>),
    Forall(String, String, Box<Formula>),
}

/// Syntactic fragments, each contained in the next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulaClass {
    Cartesian,
    Regular,
    Coherent,
    Full,
}

impl fmt::Display for FormulaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulaClass::Cartesian => "cartesian",
            FormulaClass::Regular => "regular",
            FormulaClass::Coherent => "coherent",
            FormulaClass::Full => "full",
        })
    }
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(f.to_string(), args)
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn resolve(&self, sig: &Signature, bound: &[&str]) -> Term {
        match self {
            Term::Var(v) if !bound.contains(&v.as_str()) && sig.funcs.get(v).is_some_and(|p| p.args.is_empty()) => {
                Term::App(v.clone(), Vec::new())
            }
            Term::Var(_) => self.clone(),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.resolve(sig, bound)).collect()),
        }
    }

    /// The sort of a term whose variables are typed by `ctx`.
    pub fn sort_in(&self, sig: &Signature, ctx: &Context) -> Result<String> {
        match self {
            Term::Var(v) => ctx.sort_of(v).map(str::to_string).ok_or_else(|| Error::Sort {
                symbol: v.clone(),
                message: "variable not in context".into(),
            }),
            Term::App(f, args) => {
                let prof = sig.funcs.get(f).ok_or_else(|| Error::Sort {
                    symbol: f.clone(),
                    message: "unknown function symbol".into(),
                })?;
                check_args(f, &prof.args, args, sig, ctx)?;
                Ok(prof.result.clone())
            }
        }
    }
}

fn check_args(symbol: &str, profile: &[String], args: &[Term], sig: &Signature, ctx: &Context) -> Result<()> {
    if profile.len() != args.len() {
        return Err(Error::Sort {
            symbol: symbol.to_string(),
            message: format!("expects {} argument(s), got {}", profile.len(), args.len()),
        });
    }
    for (k, (want, t)) in profile.iter().zip(args).enumerate() {
        let got = t.sort_in(sig, ctx)?;
        if &got != want {
            return Err(Error::Sort {
                symbol: symbol.to_string(),
                message: format!("argument {} has sort `{got}`, expected `{want}`", k + 1),
            });
        }
    }
    Ok(())
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn exists(v: &str, s: &str, body: Formula) -> Formula {
        Formula::Exists(v.to_string(), s.to_string(), Box::new(body))
    }

    pub fn forall(v: &str, s: &str, body: Formula) -> Formula {
        Formula::Forall(v.to_string(), s.to_string(), Box::new(body))
    }

    pub fn rel(r: &str, args: Vec<Term>) -> Formula {
        Formula::Rel(r.to_string(), args)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Formula::Eq(a, b) => {
                let mut s = a.vars();
                s.extend(b.vars());
                s
            }
            Formula::Rel(_, args) => args.iter().flat_map(Term::vars).collect(),
            Formula::Top | Formula::Bottom => BTreeSet::new(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                let mut s = a.free_vars();
                s.extend(b.free_vars());
                s
            }
            Formula::Not(a) => a.free_vars(),
            Formula::Exists(v, _, body) | Formula::Forall(v, _, body) => {
                let mut s = body.free_vars();
                s.remove(v);
                s
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Eq(..) | Formula::Rel(..) | Formula::Top | Formula::Bottom => 0,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Not(a) | Formula::Exists(_, _, a) | Formula::Forall(_, _, a) => 1 + a.depth(),
        }
    }

    pub fn classify(&self) -> FormulaClass {
        use FormulaClass::*;
        match self {
            Formula::Eq(..) | Formula::Rel(..) | Formula::Top => Cartesian,
            Formula::Bottom => Coherent,
            Formula::And(a, b) => a.classify().max(b.classify()),
            Formula::Exists(_, _, a) => a.classify().max(Regular),
            Formula::Or(a, b) => a.classify().max(b.classify()).max(Coherent),
            Formula::Implies(..) | Formula::Not(..) | Formula::Forall(..) => Full,
        }
    }

    /// Rewrites every `¬ψ` as `ψ ⇒ ⊥`.
    pub fn expand_negation(&self) -> Formula {
        let bx = |f: &Formula| Box::new(f.expand_negation());
        match self {
            Formula::Not(a) => Formula::Implies(bx(a), Box::new(Formula::Bottom)),
            Formula::And(a, b) => Formula::And(bx(a), bx(b)),
            Formula::Or(a, b) => Formula::Or(bx(a), bx(b)),
            Formula::Implies(a, b) => Formula::Implies(bx(a), bx(b)),
            Formula::Exists(v, s, a) => Formula::Exists(v.clone(), s.clone(), bx(a)),
            Formula::Forall(v, s, a) => Formula::Forall(v.clone(), s.clone(), bx(a)),
            atom => atom.clone(),
        }
    }

    /// Bare identifiers naming constants (and not bound) become applications.
    pub fn resolve_constants(&self, sig: &Signature, ctx: &Context) -> Formula {
        let bound: Vec<&str> = ctx.vars().iter().map(|(v, _)| v.as_str()).collect();
        self.resolve(sig, &bound)
    }

    fn resolve(&self, sig: &Signature, bound: &[&str]) -> Formula {
        let bx = |f: &Formula| Box::new(f.resolve(sig, bound));
        match self {
            Formula::Eq(a, b) => Formula::Eq(a.resolve(sig, bound), b.resolve(sig, bound)),
            Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|t| t.resolve(sig, bound)).collect()),
            Formula::Top | Formula::Bottom => self.clone(),
            Formula::And(a, b) => Formula::And(bx(a), bx(b)),
            Formula::Or(a, b) => Formula::Or(bx(a), bx(b)),
            Formula::Implies(a, b) => Formula::Implies(bx(a), bx(b)),
            Formula::Not(a) => Formula::Not(bx(a)),
            Formula::Exists(v, s, a) | Formula::Forall(v, s, a) => {
                let mut inner = bound.to_vec();
                inner.push(v);
                let body = Box::new(a.resolve(sig, &inner));
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(v.clone(), s.clone(), body)
                } else {
                    Formula::Forall(v.clone(), s.clone(), body)
                }
            }
        }
    }

    /// Checks arities and sorts; variables are typed by `ctx` and binders.
    pub fn sort_check(&self, sig: &Signature, ctx: &Context) -> Result<()> {
        match self {
            Formula::Eq(a, b) => {
                let (sa, sb) = (a.sort_in(sig, ctx)?, b.sort_in(sig, ctx)?);
                if sa != sb {
                    return Err(Error::Sort {
                        symbol: "=".into(),
                        message: format!("sides have sorts `{sa}` and `{sb}`"),
                    });
                }
                Ok(())
            }
            Formula::Rel(r, args) => {
                let prof = sig.rels.get(r).ok_or_else(|| Error::Sort {
                    symbol: r.clone(),
                    message: "unknown relation symbol".into(),
                })?;
                check_args(r, prof, args, sig, ctx)
            }
            Formula::Top | Formula::Bottom => Ok(()),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.sort_check(sig, ctx)?;
                b.sort_check(sig, ctx)
            }
            Formula::Not(a) => a.sort_check(sig, ctx),
            Formula::Exists(v, s, body) | Formula::Forall(v, s, body) => {
                if !sig.has_sort(s) {
                    return Err(Error::Sort {
                        symbol: s.clone(),
                        message: format!("undeclared sort bound by `{v}`"),
                    });
                }
                body.sort_check(sig, &ctx.extend(v, s))
            }
        }
    }

    /// Resolves constants, then checks context suitability and sorts.
    pub fn prepare(&self, sig: &Signature, ctx: &Context) -> Result<Formula> {
        ctx.check_sorts(sig)?;
        let f = self.resolve_constants(sig, ctx);
        let (ok, free) = suitable_context(&f, ctx);
        if !ok {
            let missing = free.into_iter().filter(|v| ctx.index_of(v).is_none()).collect();
            return Err(Error::UnsuitableContext { missing });
        }
        f.sort_check(sig, ctx)?;
        Ok(f)
    }
}

/// Whether every free variable of `phi` is declared in `ctx`, with the free set.
pub fn suitable_context(phi: &Formula, ctx: &Context) -> (bool, BTreeSet<String>) {
    let free = phi.free_vars();
    (free.iter().all(|v| ctx.index_of(v).is_some()), free)
}

// ---------------------------------------------------------------- printing

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl Formula {
    fn level(&self) -> u8 {
        match self {
            Formula::Exists(..) | Formula::Forall(..) => 0,
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(..) => 4,
            _ => 5,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        if self.level() < min_level {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Rel(r, args) => write!(f, "{}", Term::App(r.clone(), args.clone())),
            Formula::Top => f.write_str("true"),
            Formula::Bottom => f.write_str("false"),
            Formula::And(a, b) => {
                a.write_operand(f, 3)?;
                f.write_str(" /\\ ")?;
                b.write_operand(f, 4)
            }
            Formula::Or(a, b) => {
                a.write_operand(f, 2)?;
                f.write_str(" \\/ ")?;
                b.write_operand(f, 3)
            }
            Formula::Implies(a, b) => {
                a.write_operand(f, 2)?;
                f.write_str(" -> ")?;
                b.write_operand(f, 1)
            }
            Formula::Not(a) => {
                f.write_str("~")?;
                a.write_operand(f, 4)
            }
            Formula::Exists(v, s, body) => write!(f, "exists {v}:{s}. {body}"),
            Formula::Forall(v, s, body) => write!(f, "forall {v}:{s}. {body}"),
        }
    }
}

// ----------------------------------------------------------------- parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Eq,
    And,
    Or,
    Implies,
    Not,
    Top,
    Bottom,
    Forall,
    Exists,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::End => f.write_str("end of input"),
            other => write!(f, "`{}`", format!("{other:?}").to_lowercase()),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(text: &str) -> Result<Vec<Lexed>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let mut push = |tok: Tok, width: usize, i: &mut usize, col: &mut usize| {
            out.push(Lexed { tok, line: tl, col: tc });
            *i += width;
            *col += width;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            _ if two == "/\\" => push(Tok::And, 2, &mut i, &mut col),
            _ if two == "\\/" => push(Tok::Or, 2, &mut i, &mut col),
            _ if two == "->" || two == "=>" => push(Tok::Implies, 2, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            ':' => push(Tok::Colon, 1, &mut i, &mut col),
            '.' => push(Tok::Dot, 1, &mut i, &mut col),
            '=' => push(Tok::Eq, 1, &mut i, &mut col),
            '&' | '∧' => push(Tok::And, 1, &mut i, &mut col),
            '|' | '∨' => push(Tok::Or, 1, &mut i, &mut col),
            '→' | '⇒' => push(Tok::Implies, 1, &mut i, &mut col),
            '~' | '!' | '¬' => push(Tok::Not, 1, &mut i, &mut col),
            '⊤' => push(Tok::Top, 1, &mut i, &mut col),
            '⊥' => push(Tok::Bottom, 1, &mut i, &mut col),
            '∀' => push(Tok::Forall, 1, &mut i, &mut col),
            '∃' => push(Tok::Exists, 1, &mut i, &mut col),
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                let tok = match word.as_str() {
                    "forall" => Tok::Forall,
                    "exists" => Tok::Exists,
                    "true" => Tok::Top,
                    "false" => Tok::Bottom,
                    _ => Tok::Ident(word),
                };
                out.push(Lexed { tok, line: tl, col: tc });
            }
            other => {
                return Err(Error::Parse {
                    line,
                    col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    out.push(Lexed {
        tok: Tok::End,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: String) -> Result<T> {
        let at = &self.toks[self.pos];
        Err(Error::Parse {
            line: at.line,
            col: at.col,
            message,
        })
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {want}, found {}", self.peek()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected {what}, found {other}")),
        }
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            Tok::End => Ok(()),
            other => self.error(format!("unexpected {other}")),
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.disj()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            return Ok(Formula::implies(lhs, self.formula()?));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<Formula> {
        let mut acc = self.conj()?;
        while *self.peek() == Tok::Or {
            self.bump();
            acc = Formula::or(acc, self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Forall | Tok::Exists => {
                let universal = self.bump() == Tok::Forall;
                let v = self.ident("a bound variable")?;
                self.expect(Tok::Colon)?;
                let s = self.ident("a sort")?;
                self.expect(Tok::Dot)?;
                let body = self.formula()?;
                Ok(if universal {
                    Formula::forall(&v, &s, body)
                } else {
                    Formula::exists(&v, &s, body)
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Top => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::Bottom => {
                self.bump();
                Ok(Formula::Bottom)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(_) => {
                let t = self.term()?;
                if *self.peek() == Tok::Eq {
                    self.bump();
                    return Ok(Formula::Eq(t, self.term()?));
                }
                Ok(match t {
                    Term::App(r, args) => Formula::Rel(r, args),
                    Term::Var(r) => Formula::Rel(r, Vec::new()),
                })
            }
            other => self.error(format!("expected a formula, found {other}")),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let name = self.ident("a term")?;
        if *self.peek() != Tok::LParen {
            return Ok(Term::Var(name));
        }
        self.bump();
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.term()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.term()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(Term::App(name, args))
    }

    fn context(&mut self) -> Result<Vec<(String, String)>> {
        let parens = *self.peek() == Tok::LParen;
        if parens {
            self.bump();
        }
        let mut vars = Vec::new();
        if !matches!(self.peek(), Tok::RParen | Tok::End) {
            loop {
                let v = self.ident("a variable")?;
                self.expect(Tok::Colon)?;
                vars.push((v, self.ident("a sort")?));
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.bump();
            }
        }
        if parens {
            self.expect(Tok::RParen)?;
        }
        Ok(vars)
    }
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_term(text: &str) -> Result<Term> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// Parses `(x:s, y:t)`; the parentheses are optional and `()` is empty.
pub fn parse_context(text: &str) -> Result<Context> {
    let mut p = Parser::new(text)?;
    let vars = p.context()?;
    p.finish()?;
    Context::new(vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    fn graph_sig() -> Signature {
        Signature::new(["node"]).with_rel("adj", &["node", "node"]).with_func("c", &[], "node")
    }

    #[test]
    fn parses_nested_quantifiers() {
        let f = parse_formula("forall y:node. exists z:node. adj(y,z)").unwrap();
        assert_eq!(
            f,
            Formula::forall("y", "node", Formula::exists("z", "node", Formula::rel("adj", vec![v("y"), v("z")])))
        );
    }

    #[test]
    fn parses_equality() {
        assert_eq!(parse_formula("x = x").unwrap(), Formula::Eq(v("x"), v("x")));
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse_formula("~p /\\ q \\/ r -> s -> t").unwrap();
        let (p, q, r, s, t) = (
            Formula::rel("p", vec![]),
            Formula::rel("q", vec![]),
            Formula::rel("r", vec![]),
            Formula::rel("s", vec![]),
            Formula::rel("t", vec![]),
        );
        let expected = Formula::implies(
            Formula::or(Formula::and(Formula::not(p), q), r),
            Formula::implies(s, t),
        );
        assert_eq!(f, expected);
        let g = parse_formula("a /\\ b /\\ c").unwrap();
        assert!(matches!(g, Formula::And(ref l, _) if matches!(**l, Formula::And(..))));
    }

    #[test]
    fn quantifiers_extend_right() {
        let f = parse_formula("p /\\ exists y:s. q(y) /\\ r(y)").unwrap();
        match f {
            Formula::And(_, rhs) => assert!(matches!(*rhs, Formula::Exists(_, _, ref b) if matches!(**b, Formula::And(..)))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unicode_aliases() {
        let a = parse_formula("∀y:node. ∃z:node. adj(y,z) ∧ ¬⊥ ∨ ⊤ → y = z").unwrap();
        let b = parse_formula("forall y:node. exists z:node. adj(y,z) & !false | true => y = z").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_formula("adj(y,\n  )") {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_formula("x # y"), Err(Error::Parse { col: 3, .. })));
        assert!(matches!(parse_formula("p q"), Err(Error::Parse { .. })));
    }

    #[test]
    fn arity_error_names_symbol() {
        let sig = graph_sig();
        let ctx = Context::new([("y", "node")]).unwrap();
        match parse_formula("adj(y)").unwrap().prepare(&sig, &ctx) {
            Err(Error::Sort { symbol, .. }) => assert_eq!(symbol, "adj"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bare_constants_resolve() {
        let sig = graph_sig();
        let ctx = Context::new([("y", "node")]).unwrap();
        let f = parse_formula("adj(y, c)").unwrap().prepare(&sig, &ctx).unwrap();
        assert_eq!(f, Formula::rel("adj", vec![v("y"), Term::app("c", vec![])]));
        let shadow = parse_formula("exists c:node. adj(c, c)").unwrap().prepare(&sig, &ctx).unwrap();
        assert_eq!(shadow, parse_formula("exists c:node. adj(c, c)").unwrap());
    }

    #[test]
    fn suitability() {
        let closed = parse_formula("forall y:node. y = y").unwrap();
        assert!(suitable_context(&closed, &Context::empty()).0);
        let open = parse_formula("adj(y,z)").unwrap();
        let (ok, free) = suitable_context(&open, &Context::new([("y", "node")]).unwrap());
        assert!(!ok);
        assert_eq!(free, BTreeSet::from(["y".to_string(), "z".to_string()]));
        match open.prepare(&graph_sig(), &Context::new([("y", "node")]).unwrap()) {
            Err(Error::UnsuitableContext { missing }) => assert_eq!(missing, vec!["z".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classification() {
        let c = |s: &str| parse_formula(s).unwrap().classify();
        assert_eq!(c("x = y /\\ adj(x,y)"), FormulaClass::Cartesian);
        assert_eq!(c("exists z:node. adj(x,z) /\\ true"), FormulaClass::Regular);
        assert_eq!(c("adj(x,y) \\/ false"), FormulaClass::Coherent);
        assert_eq!(c("false"), FormulaClass::Coherent);
        assert_eq!(c("~adj(x,y)"), FormulaClass::Full);
        assert_eq!(c("forall z:node. adj(x,z)"), FormulaClass::Full);
        assert_eq!(c("adj(x,y) -> true"), FormulaClass::Full);
    }

    #[test]
    fn negation_normalizer() {
        let f = parse_formula("~(p /\\ ~q)").unwrap().expand_negation();
        assert_eq!(f, parse_formula("(p /\\ (q -> false)) -> false").unwrap());
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "forall y:node. exists z:node. adj(y,z)",
            "(forall y:s. p(y)) /\\ q",
            "~(exists y:s. p(y))",
            "(a -> b) -> c",
            "a -> b -> c",
            "a /\\ (b /\\ c)",
            "~~p() \\/ f(x,c()) = g(y)",
            "true \\/ false",
        ] {
            let f = parse_formula(s).unwrap();
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f, "{s} printed as {f}");
        }
    }

    #[test]
    fn contexts() {
        let ctx = parse_context("(x:s, y:t)").unwrap();
        assert_eq!(ctx.to_string(), "(x:s, y:t)");
        assert!(parse_context("()").unwrap().is_empty());
        assert!(parse_context("").unwrap().is_empty());
        assert!(parse_context("(x:s, x:t)").is_err());
    }
}
