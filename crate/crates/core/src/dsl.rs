//! A line-oriented text format that compiles to [`WorkspaceDoc`].
//!
//! ```text
//! # a directed graph with one edge
//! presheaf X over graph
//!   V: v1 v2
//!   E: e
//!   s: e -> v1
//!   t: e -> v2
//! end
//! signature G
//!   sorts node
//!   rel adj : node node
//! end
//! structure M : G over graph
//!   sort node = X
//!   rel adj @V: (v1,v2)
//! end
//! formula succ (y:node) : exists z:node. adj(y,z)
//! family F = M
//! filter U on F principal M
//! ```
//!
//! Categories are written with `objects`, `arrow f : A -> B` and
//! `compose g f = h` lines. Sorts may also be constant (`sort s = {a b}`).
//! Function tables read `func f @V: (a,b) -> c, (b,a) -> a`.

use crate::error::{Error, Result};
use crate::fincat::tuple_name;
use crate::io::{
    ArrowDoc, CategoryDoc, FilterDoc, FormulaDoc, PresheafBody, PresheafDoc, SignatureDoc, SortDoc, StructureDoc,
    WorkspaceDoc,
};
use crate::sigma::FuncProfile;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Punct(&'static str),
}

#[derive(Clone, Debug)]
struct Line {
    no: usize,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '\'' | '.' | '*')
}

fn tokenize(no: usize, text: &str) -> Result<Line> {
    let mut toks = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '-' && chars.get(i + 1).is_some_and(|&(_, d)| d == '>') {
            toks.push((Tok::Punct("->"), col));
            i += 2;
        } else if let Some(p) = ["(", ")", ",", "{", "}", ":", "=", "@"].into_iter().find(|p| p.starts_with(c)) {
            toks.push((Tok::Punct(p), col));
            i += 1;
        } else if ident_char(c) {
            let start = i;
            while i < chars.len() && ident_char(chars[i].1) {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().map(|&(_, c)| c).collect()), col));
        } else {
            return Err(Error::Parse {
                line: no,
                col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(Line { no, toks, pos: 0 })
}

impl Line {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let col = self.toks.get(self.pos).or(self.toks.last()).map_or(1, |t| t.1);
        Err(Error::Parse {
            line: self.no,
            col,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn at(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        let hit = self.at(p);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect(&mut self, p: &str) -> Result<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected a name"),
        }
    }

    fn keyword(&mut self, k: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == k => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{k}`")),
        }
    }

    fn idents(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(Tok::Ident(s)) = self.peek() {
            out.push(s.clone());
            self.pos += 1;
        }
        out
    }

    fn end(&self) -> Result<()> {
        if self.done() {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }

    /// `(a,b)` or a bare name; a bare name is a one-element tuple.
    fn tuple(&mut self) -> Result<Vec<String>> {
        if self.eat("(") {
            let mut out = Vec::new();
            if self.eat(")") {
                return Ok(out);
            }
            loop {
                out.push(self.ident()?);
                if self.eat(")") {
                    return Ok(out);
                }
                self.expect(",")?;
            }
        }
        Ok(vec![self.ident()?])
    }

    /// `{a b}` or `{a, b}`.
    fn braced(&mut self) -> Result<Vec<String>> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.eat("}") {
            if self.done() {
                return self.err("unclosed `{`");
            }
            if !self.eat(",") {
                out.push(self.ident()?);
            }
        }
        Ok(out)
    }
}

fn duplicate<T>(line: &Line, map: &BTreeMap<String, T>, kind: &str, name: &str) -> Result<()> {
    if map.contains_key(name) {
        line.err(format!("{kind} `{name}` is defined twice"))
    } else {
        Ok(())
    }
}

/// `formula NAME [(ctx)] : text`, split at the first `:` outside parentheses.
fn formula_line(no: usize, raw: &str) -> Result<(String, FormulaDoc)> {
    let mut depth = 0i32;
    let split = raw.char_indices().find(|&(_, c)| {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        c == ':' && depth == 0
    });
    let Some((at, _)) = split else {
        return Err(Error::Parse {
            line: no,
            col: raw.chars().count().max(1),
            message: "expected `:` before the formula".into(),
        });
    };
    let mut head = tokenize(no, &raw[..at])?;
    head.keyword("formula")?;
    let name = head.ident()?;
    let context = match head.toks.get(head.pos) {
        Some(&(_, col)) => raw[..at].chars().skip(col - 1).collect::<String>().trim().to_string(),
        None => String::new(),
    };
    let text = raw[at + 1..].split('#').next().unwrap_or("").trim().to_string();
    if text.is_empty() {
        return Err(Error::Parse {
            line: no,
            col: raw[..at].chars().count() + 1,
            message: "expected a formula".into(),
        });
    }
    Ok((name, FormulaDoc { context, text }))
}

/// Compiles DSL text. Errors carry the offending line.
pub fn compile(text: &str) -> Result<WorkspaceDoc> {
    let lines: Vec<&str> = text.lines().collect();
    let mut doc = WorkspaceDoc::default();
    let mut i = 0;
    while i < lines.len() {
        let raw = lines[i];
        if raw.trim_start().starts_with("formula") {
            let (name, f) = formula_line(i + 1, raw)?;
            i += 1;
            if doc.formulas.insert(name.clone(), f).is_some() {
                return Err(Error::Parse {
                    line: i,
                    col: 1,
                    message: format!("formula `{name}` is defined twice"),
                });
            }
            continue;
        }
        let mut line = tokenize(i + 1, raw)?;
        i += 1;
        if line.done() {
            continue;
        }
        let head = line.ident()?;
        match head.as_str() {
            "category" | "presheaf" | "signature" | "structure" => {
                let mut body = Vec::new();
                loop {
                    let Some(raw) = lines.get(i) else {
                        return line.err(format!("`{head}` block is missing `end`"));
                    };
                    let l = tokenize(i + 1, raw)?;
                    i += 1;
                    if matches!(l.toks.first(), Some((Tok::Ident(s), _)) if s == "end") {
                        let mut l = l;
                        l.pos = 1;
                        l.end()?;
                        break;
                    }
                    if !l.done() {
                        body.push(l);
                    }
                }
                match head.as_str() {
                    "category" => category(&mut doc, line, body)?,
                    "presheaf" => presheaf(&mut doc, line, body)?,
                    "signature" => signature(&mut doc, line, body)?,
                    _ => structure(&mut doc, line, body)?,
                }
            }
            "family" => {
                let name = line.ident()?;
                duplicate(&line, &doc.families, "family", &name)?;
                line.expect("=")?;
                let members = line.idents();
                line.end()?;
                if members.is_empty() {
                    return line.err("a family needs at least one member");
                }
                doc.families.insert(name, members);
            }
            "filter" => {
                let name = line.ident()?;
                duplicate(&line, &doc.filters, "filter", &name)?;
                line.keyword("on")?;
                let family = line.ident()?;
                let kind = line.ident()?;
                let filter = match kind.as_str() {
                    "principal" => {
                        let gen = if line.at("{") { line.braced()? } else { line.idents() };
                        FilterDoc {
                            family,
                            principal: Some(gen),
                            members: None,
                        }
                    }
                    "members" => {
                        let mut sets = Vec::new();
                        while line.at("{") {
                            sets.push(line.braced()?);
                            line.eat(",");
                        }
                        FilterDoc {
                            family,
                            principal: None,
                            members: Some(sets),
                        }
                    }
                    _ => {
                        line.pos -= 1;
                        return line.err("expected `principal` or `members`");
                    }
                };
                line.end()?;
                doc.filters.insert(name, filter);
            }
            _ => {
                line.pos -= 1;
                return line.err(format!("unknown declaration `{head}`"));
            }
        }
    }
    Ok(doc)
}

fn category(doc: &mut WorkspaceDoc, mut head: Line, body: Vec<Line>) -> Result<()> {
    let name = head.ident()?;
    head.end()?;
    duplicate(&head, &doc.categories, "category", &name)?;
    let mut c = CategoryDoc::default();
    for mut l in body {
        match l.ident()?.as_str() {
            "objects" => c.objects.extend(l.idents()),
            "arrow" => {
                let name = l.ident()?;
                l.expect(":")?;
                let dom = l.ident()?;
                l.expect("->")?;
                let cod = l.ident()?;
                c.arrows.push(ArrowDoc { name, dom, cod });
            }
            "compose" => {
                let g = l.ident()?;
                let f = l.ident()?;
                l.expect("=")?;
                let h = l.ident()?;
                c.compose.push([g, f, h]);
            }
            _ => {
                l.pos = 0;
                return l.err("expected `objects`, `arrow` or `compose`");
            }
        }
        l.end()?;
    }
    doc.categories.insert(name, c);
    Ok(())
}

/// `OBJ: x y` carrier lines and `f: x -> y, ...` action lines.
fn presheaf_body(body: Vec<Line>) -> Result<PresheafBody> {
    let mut p = PresheafBody::default();
    for mut l in body {
        let key = l.ident()?;
        l.expect(":")?;
        if l.toks.iter().any(|t| t.0 == Tok::Punct("->")) {
            let entry = p.action.entry(key).or_default();
            while !l.done() {
                let x = l.ident()?;
                l.expect("->")?;
                let y = l.ident()?;
                if entry.insert(x.clone(), y).is_some() {
                    return l.err(format!("`{x}` is restricted twice"));
                }
                if !l.done() {
                    l.expect(",")?;
                }
            }
        } else {
            let elems = l.idents();
            l.end()?;
            if p.carriers.insert(key.clone(), elems).is_some() {
                l.pos = 0;
                return l.err(format!("carrier of `{key}` is given twice"));
            }
        }
    }
    Ok(p)
}

fn presheaf(doc: &mut WorkspaceDoc, mut head: Line, body: Vec<Line>) -> Result<()> {
    let name = head.ident()?;
    head.keyword("over")?;
    let base = head.ident()?;
    head.end()?;
    duplicate(&head, &doc.presheaves, "presheaf", &name)?;
    let body = presheaf_body(body)?;
    doc.presheaves.insert(name, PresheafDoc { base, body });
    Ok(())
}

fn signature(doc: &mut WorkspaceDoc, mut head: Line, body: Vec<Line>) -> Result<()> {
    let name = head.ident()?;
    head.end()?;
    duplicate(&head, &doc.signatures, "signature", &name)?;
    let mut s = SignatureDoc::default();
    for mut l in body {
        match l.ident()?.as_str() {
            "sorts" => s.sorts.extend(l.idents()),
            "func" => {
                let f = l.ident()?;
                l.expect(":")?;
                let args = l.idents();
                l.expect("->")?;
                let result = l.ident()?;
                s.funcs.insert(f, FuncProfile { args, result });
            }
            "const" => {
                let f = l.ident()?;
                l.expect(":")?;
                let result = l.ident()?;
                s.funcs.insert(f, FuncProfile { args: vec![], result });
            }
            "rel" => {
                let r = l.ident()?;
                l.expect(":")?;
                s.rels.insert(r, l.idents());
            }
            _ => {
                l.pos = 0;
                return l.err("expected `sorts`, `func`, `const` or `rel`");
            }
        }
        l.end()?;
    }
    doc.signatures.insert(name, s);
    Ok(())
}

fn structure(doc: &mut WorkspaceDoc, mut head: Line, body: Vec<Line>) -> Result<()> {
    let name = head.ident()?;
    head.expect(":")?;
    let signature = head.ident()?;
    head.keyword("over")?;
    let base = head.ident()?;
    head.end()?;
    duplicate(&head, &doc.structures, "structure", &name)?;
    let mut m = StructureDoc {
        signature,
        base,
        sorts: BTreeMap::new(),
        funcs: BTreeMap::new(),
        rels: BTreeMap::new(),
    };
    for mut l in body {
        match l.ident()?.as_str() {
            "sort" => {
                let s = l.ident()?;
                l.expect("=")?;
                let sd = if l.at("{") {
                    SortDoc::Constant { constant: l.braced()? }
                } else {
                    SortDoc::Named(l.ident()?)
                };
                m.sorts.insert(s, sd);
            }
            "func" => {
                let f = l.ident()?;
                l.expect("@")?;
                let obj = l.ident()?;
                l.expect(":")?;
                let rows = m.funcs.entry(f).or_default().entry(obj).or_default();
                while !l.done() {
                    let args = l.tuple()?;
                    l.expect("->")?;
                    rows.push((args, l.ident()?));
                    if !l.done() {
                        l.expect(",")?;
                    }
                }
            }
            "rel" => {
                let r = l.ident()?;
                l.expect("@")?;
                let obj = l.ident()?;
                l.expect(":")?;
                let tuples = m.rels.entry(r).or_default().entry(obj).or_default();
                while !l.done() {
                    tuples.push(l.tuple()?);
                    l.eat(",");
                }
            }
            _ => {
                l.pos = 0;
                return l.err("expected `sort`, `func` or `rel`");
            }
        }
        l.end()?;
    }
    doc.structures.insert(name, m);
    Ok(())
}

/// Renders a document back to DSL text.
pub fn render(doc: &WorkspaceDoc) -> String {
    let mut out = String::new();
    let push = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    let carriers = |out: &mut String, body: &PresheafBody| {
        for (o, es) in &body.carriers {
            push(out, format!("  {o}: {}", es.join(" ")).trim_end().to_string());
        }
        for (f, act) in &body.action {
            let pairs: Vec<String> = act.iter().map(|(x, y)| format!("{x} -> {y}")).collect();
            push(out, format!("  {f}: {}", pairs.join(", ")));
        }
    };
    for (name, c) in &doc.categories {
        push(&mut out, format!("category {name}"));
        push(&mut out, format!("  objects {}", c.objects.join(" ")));
        for a in &c.arrows {
            push(&mut out, format!("  arrow {} : {} -> {}", a.name, a.dom, a.cod));
        }
        for [g, f, h] in &c.compose {
            push(&mut out, format!("  compose {g} {f} = {h}"));
        }
        push(&mut out, "end".into());
    }
    for (name, p) in &doc.presheaves {
        push(&mut out, format!("presheaf {name} over {}", p.base));
        carriers(&mut out, &p.body);
        push(&mut out, "end".into());
    }
    for (name, s) in &doc.signatures {
        push(&mut out, format!("signature {name}"));
        push(&mut out, format!("  sorts {}", s.sorts.join(" ")));
        for (f, p) in &s.funcs {
            push(&mut out, format!("  func {f} : {} -> {}", p.args.join(" "), p.result).replace(":  ->", ": ->"));
        }
        for (r, args) in &s.rels {
            push(&mut out, format!("  rel {r} : {}", args.join(" ")));
        }
        push(&mut out, "end".into());
    }
    for (name, m) in &doc.structures {
        push(&mut out, format!("structure {name} : {} over {}", m.signature, m.base));
        for (s, sd) in &m.sorts {
            match sd {
                SortDoc::Named(p) => push(&mut out, format!("  sort {s} = {p}")),
                SortDoc::Constant { constant } => push(&mut out, format!("  sort {s} = {{{}}}", constant.join(" "))),
                SortDoc::Inline(_) => push(&mut out, format!("  # sort {s} is inline and has no text form")),
            }
        }
        for (f, table) in &m.funcs {
            for (o, rows) in table {
                let rows: Vec<String> = rows.iter().map(|(a, v)| format!("{} -> {v}", paren(a))).collect();
                push(&mut out, format!("  func {f} @{o}: {}", rows.join(", ")));
            }
        }
        for (r, table) in &m.rels {
            for (o, tuples) in table {
                let ts: Vec<String> = tuples.iter().map(|t| paren(t)).collect();
                push(&mut out, format!("  rel {r} @{o}: {}", ts.join(" ")).trim_end().to_string());
            }
        }
        push(&mut out, "end".into());
    }
    for (name, f) in &doc.formulas {
        let ctx = if f.context.is_empty() { String::new() } else { format!(" {}", f.context) };
        push(&mut out, format!("formula {name}{ctx} : {}", f.text));
    }
    for (name, ms) in &doc.families {
        push(&mut out, format!("family {name} = {}", ms.join(" ")));
    }
    for (name, f) in &doc.filters {
        match (&f.principal, &f.members) {
            (Some(g), _) => push(&mut out, format!("filter {name} on {} principal {{{}}}", f.family, g.join(" "))),
            (_, Some(ms)) => {
                let sets: Vec<String> = ms.iter().map(|s| format!("{{{}}}", s.join(" "))).collect();
                push(&mut out, format!("filter {name} on {} members {}", f.family, sets.join(" ")));
            }
            _ => {}
        }
    }
    out
}

fn paren(args: &[String]) -> String {
    if args.is_empty() {
        "()".into()
    } else {
        tuple_name(args)
    }
}
