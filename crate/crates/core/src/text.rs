//! Text documents of named entities.
//!
//! ```text
//! format 1
//! backend finab
//! object A {0,1} add {0,1; 1,0}
//! mor neg : A -> A {0->0, 1->1}
//! groupoid G {X0=A, X1=A, d=neg, c={0->0, 1->1}, e={..}, i={..}, m={(0,0)->0, (1,1)->1}}
//! functor F : G -> G {f0={..}, f1={..}}
//! factorization W : F {kind=em, e_part=E, middle=H, m_part=M, certificates={e_part:inverted-by-pi0}}
//! stability S : F {along=all, trials=50, max_size=16, seed=0, probed=52, skipped=0, outcome=exhausted}
//! ```
//!
//! Statements may span lines; `#` starts a comment. Finite abelian group
//! objects list their addition rows in carrier order after `add`. The
//! composition `m` is given on every composable pair `(a,b)`, meaning `a`
//! after `b`. Printing is canonical: `print(parse(print(d))) == print(d)`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::base::{pullback, Backend, Elem, Morphism, Object};
use crate::error::{Error, Result};
use crate::factor::{
    Certificate, Factorization, FactorizationKind, StabilityBudget,
    StabilityVerdict,
};
use crate::gpd::{GFunctor, Groupoid};
use crate::harness::{CounterexampleCube, PullbackClass};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub enum Entity {
    Object(Object),
    Morphism {
        dom: String,
        cod: String,
        map: Morphism,
    },
    Groupoid {
        objects: String,
        arrows: String,
        groupoid: Groupoid,
    },
    Functor {
        dom: String,
        cod: String,
        functor: GFunctor,
    },
    Factorization {
        original: String,
        e_part: String,
        middle: String,
        m_part: String,
        factorization: Factorization,
    },
    Stability(StabilityEntry),
}

impl Entity {
    fn kind(&self) -> &'static str {
        match self {
            Entity::Object(_) => "object",
            Entity::Morphism { .. } => "mor",
            Entity::Groupoid { .. } => "groupoid",
            Entity::Functor { .. } => "functor",
            Entity::Factorization { .. } => "factorization",
            Entity::Stability(_) => "stability",
        }
    }
}

/// A recorded stability search, with its budget and seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityEntry {
    pub functor: String,
    pub along: PullbackClass,
    pub budget: StabilityBudget,
    pub probed: usize,
    pub skipped: usize,
    /// Names of the probe functor and of the pulled-back functor.
    pub counterexample: Option<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct Document {
    pub format_version: u32,
    pub backend: Backend,
    entries: Vec<(String, Entity)>,
    index: HashMap<String, usize>,
}

impl Document {
    pub fn new(backend: Backend) -> Document {
        Document {
            format_version: FORMAT_VERSION,
            backend,
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn entries(&self) -> &[(String, Entity)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Entity> {
        self.index.get(name).map(|&k| &self.entries[k].1)
    }

    pub fn object(&self, name: &str) -> Option<&Object> {
        match self.get(name)? {
            Entity::Object(o) => Some(o),
            _ => None,
        }
    }

    pub fn morphism(&self, name: &str) -> Option<&Morphism> {
        match self.get(name)? {
            Entity::Morphism { map, .. } => Some(map),
            _ => None,
        }
    }

    pub fn groupoid(&self, name: &str) -> Option<&Groupoid> {
        match self.get(name)? {
            Entity::Groupoid { groupoid, .. } => Some(groupoid),
            _ => None,
        }
    }

    pub fn functor(&self, name: &str) -> Option<&GFunctor> {
        match self.get(name)? {
            Entity::Functor { functor, .. } => Some(functor),
            _ => None,
        }
    }

    pub fn factorization(&self, name: &str) -> Option<&Factorization> {
        match self.get(name)? {
            Entity::Factorization { factorization, .. } => Some(factorization),
            _ => None,
        }
    }

    pub fn stability(&self, name: &str) -> Option<&StabilityEntry> {
        match self.get(name)? {
            Entity::Stability(s) => Some(s),
            _ => None,
        }
    }

    /// Adds an entity under a fresh name.
    pub fn insert(&mut self, name: &str, entity: Entity) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(Error::DuplicateName {
                name: name.to_string(),
                line: 0,
                col: 0,
            });
        }
        if !is_name(name) {
            return Err(Error::InvalidInput(format!("`{name}` is not a valid name")));
        }
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push((name.to_string(), entity));
        Ok(())
    }

    fn find(&self, pred: impl Fn(&Entity) -> bool) -> Option<String> {
        self.entries.iter().find(|(_, e)| pred(e)).map(|(n, _)| n.clone())
    }

    fn fresh(&self, hint: &str) -> String {
        if !self.index.contains_key(hint) {
            return hint.to_string();
        }
        (2..).map(|k| format!("{hint}.{k}")).find(|n| !self.index.contains_key(n)).expect("unbounded")
    }

    /// The name of an equal object, adding it as `hint` when absent.
    pub fn add_object(&mut self, hint: &str, obj: &Object) -> Result<String> {
        self.check_backend(obj.backend())?;
        if let Some(n) = self.find(|e| matches!(e, Entity::Object(o) if o == obj)) {
            return Ok(n);
        }
        let name = self.fresh(hint);
        self.insert(&name, Entity::Object(obj.clone()))?;
        Ok(name)
    }

    pub fn add_morphism(&mut self, name: &str, map: &Morphism) -> Result<String> {
        let dom = self.add_object(&format!("{name}.dom"), map.dom())?;
        let cod = self.add_object(&format!("{name}.cod"), map.cod())?;
        self.insert(
            name,
            Entity::Morphism {
                dom,
                cod,
                map: map.clone(),
            },
        )?;
        Ok(name.to_string())
    }

    /// The name of an equal groupoid, adding it as `hint` when absent.
    pub fn add_groupoid(&mut self, hint: &str, g: &Groupoid) -> Result<String> {
        if let Some(n) = self.find(|e| matches!(e, Entity::Groupoid { groupoid, .. } if groupoid == g)) {
            return Ok(n);
        }
        let name = self.fresh(hint);
        let objects = self.add_object(&format!("{name}.X0"), g.objects())?;
        let arrows = self.add_object(&format!("{name}.X1"), g.arrows())?;
        self.insert(
            &name,
            Entity::Groupoid {
                objects,
                arrows,
                groupoid: g.clone(),
            },
        )?;
        Ok(name)
    }

    /// Adds a functor under `name`, together with its groupoids.
    pub fn add_functor(&mut self, name: &str, f: &GFunctor) -> Result<String> {
        let dom = self.add_groupoid(&format!("{name}.dom"), f.dom())?;
        let cod = self.add_groupoid(&format!("{name}.cod"), f.cod())?;
        self.insert(
            name,
            Entity::Functor {
                dom,
                cod,
                functor: f.clone(),
            },
        )?;
        Ok(name.to_string())
    }

    /// The name of an equal functor, adding it as `hint` when absent.
    pub fn ensure_functor(&mut self, hint: &str, f: &GFunctor) -> Result<String> {
        if let Some(n) = self.find(|e| matches!(e, Entity::Functor { functor, .. } if functor == f)) {
            return Ok(n);
        }
        let name = self.fresh(hint);
        self.add_functor(&name, f)
    }

    pub fn add_factorization(&mut self, name: &str, fac: &Factorization) -> Result<String> {
        let original = self.ensure_functor(&format!("{name}.F"), &fac.original)?;
        let middle = self.add_groupoid(&format!("{name}.W"), &fac.middle)?;
        let e_part = self.ensure_functor(&format!("{name}.e"), &fac.e_part)?;
        let m_part = self.ensure_functor(&format!("{name}.m"), &fac.m_part)?;
        self.insert(
            name,
            Entity::Factorization {
                original,
                e_part,
                middle,
                m_part,
                factorization: fac.clone(),
            },
        )?;
        Ok(name.to_string())
    }

    pub fn add_stability(&mut self, name: &str, f: &GFunctor, verdict: &StabilityVerdict) -> Result<String> {
        let functor = self.ensure_functor(&format!("{name}.F"), f)?;
        let counterexample = match verdict.counterexample() {
            Some(w) => Some((
                self.ensure_functor(&format!("{name}.probe"), &w.along)?,
                self.ensure_functor(&format!("{name}.pulled"), &w.pulled)?,
            )),
            None => None,
        };
        self.insert(
            name,
            Entity::Stability(StabilityEntry {
                functor,
                along: verdict.along,
                budget: verdict.budget.clone(),
                probed: verdict.probed,
                skipped: verdict.skipped,
                counterexample,
            }),
        )?;
        Ok(name.to_string())
    }

    fn check_backend(&self, b: Backend) -> Result<()> {
        if b != self.backend {
            return Err(Error::BackendMismatch(self.backend, b));
        }
        Ok(())
    }

    /// Canonical text of the document.
    pub fn print(&self) -> String {
        let mut out = format!("format {}\nbackend {}\n", self.format_version, self.backend);
        for (name, entity) in &self.entries {
            out.push('\n');
            print_entity(&mut out, name, entity);
        }
        out
    }
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_word_char) && !s.contains("->")
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !"{}(),;=:#".contains(c)
}

fn print_map(out: &mut String, m: &Morphism) {
    out.push('{');
    for a in 0..m.dom().len() {
        if a > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}->{}", m.dom().elem(a), m.cod().elem(m.apply(a)));
    }
    out.push('}');
}

fn print_entity(out: &mut String, name: &str, entity: &Entity) {
    match entity {
        Entity::Object(o) => {
            let _ = write!(out, "object {name} {{");
            for (k, e) in o.carrier().iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{e}");
            }
            out.push('}');
            if let Some(rows) = o.addition_rows() {
                out.push_str(" add {");
                for (k, row) in rows.iter().enumerate() {
                    if k > 0 {
                        out.push_str("; ");
                    }
                    for (j, &v) in row.iter().enumerate() {
                        if j > 0 {
                            out.push(',');
                        }
                        let _ = write!(out, "{}", o.elem(v));
                    }
                }
                out.push('}');
            }
            out.push('\n');
        }
        Entity::Morphism { dom, cod, map } => {
            let _ = write!(out, "mor {name} : {dom} -> {cod} ");
            print_map(out, map);
            out.push('\n');
        }
        Entity::Groupoid {
            objects,
            arrows,
            groupoid: g,
        } => {
            let _ = writeln!(out, "groupoid {name} {{\n  X0={objects},\n  X1={arrows},");
            for (key, m) in [("d", g.d()), ("c", g.c()), ("e", g.e()), ("i", g.inv()), ("m", g.comp())] {
                let _ = write!(out, "  {key}=");
                print_map(out, m);
                out.push_str(if key == "m" { "\n" } else { ",\n" });
            }
            out.push_str("}\n");
        }
        Entity::Functor { dom, cod, functor } => {
            let _ = writeln!(out, "functor {name} : {dom} -> {cod} {{");
            out.push_str("  f0=");
            print_map(out, functor.f0());
            out.push_str(",\n  f1=");
            print_map(out, functor.f1());
            out.push_str("\n}\n");
        }
        Entity::Factorization {
            original,
            e_part,
            middle,
            m_part,
            factorization,
        } => {
            let _ = writeln!(out, "factorization {name} : {original} {{");
            let _ = writeln!(out, "  kind={},", factorization.kind);
            let _ = writeln!(out, "  e_part={e_part},\n  middle={middle},\n  m_part={m_part},");
            out.push_str("  certificates={");
            for (k, c) in factorization.certificates.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}:{}", c.part, c.class);
            }
            out.push_str("}\n}\n");
        }
        Entity::Stability(s) => {
            let _ = write!(
                out,
                "stability {name} : {} {{along={}, trials={}, max_size={}, seed={}, probed={}, skipped={}, ",
                s.functor, s.along, s.budget.trials, s.budget.max_size, s.budget.seed, s.probed, s.skipped
            );
            match &s.counterexample {
                None => out.push_str("outcome=exhausted}\n"),
                Some((probe, pulled)) => {
                    let _ = writeln!(out, "outcome=counterexample, probe={probe}, pulled={pulled}}}");
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Eq,
    Colon,
    Arrow,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn parse_error(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        message: message.into(),
    }
}

/// Attaches a position to a semantic error. Size-cap overruns pass through
/// unchanged so callers can tell them apart from malformed input.
fn locate(line: usize, col: usize, e: Error) -> Error {
    match e {
        Error::CapExceeded { .. } => e,
        e => locate(line, col, e),
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, text) in src.lines().enumerate() {
        let chars: Vec<char> = text.chars().collect();
        let mut k = 0;
        while k < chars.len() {
            let (line, col) = (ln + 1, k + 1);
            let ch = chars[k];
            if ch == '#' {
                break;
            }
            if ch.is_whitespace() {
                k += 1;
                continue;
            }
            let simple = match ch {
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                ';' => Some(Tok::Semi),
                '=' => Some(Tok::Eq),
                ':' => Some(Tok::Colon),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Token { tok, line, col });
                k += 1;
                continue;
            }
            if ch == '-' && chars.get(k + 1) == Some(&'>') {
                out.push(Token {
                    tok: Tok::Arrow,
                    line,
                    col,
                });
                k += 2;
                continue;
            }
            let start = k;
            while k < chars.len()
                && is_word_char(chars[k])
                && !(chars[k] == '-' && chars.get(k + 1) == Some(&'>'))
            {
                k += 1;
            }
            if k == start {
                return Err(parse_error(line, col, format!("unexpected character `{ch}`")));
            }
            out.push(Token {
                tok: Tok::Word(chars[start..k].iter().collect()),
                line,
                col,
            });
        }
    }
    Ok(out)
}

/// A value on the right of `key=`.
#[derive(Debug, Clone)]
enum Value {
    Word(String),
    Map(Vec<(Elem, Elem)>),
    Pairs(Vec<(String, String)>),
}

#[derive(Debug, Clone)]
struct Field {
    value: Value,
    line: usize,
    col: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.col))
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let (line, col) = self.here();
        parse_error(line, col, message)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, usize, usize)> {
        let (line, col) = self.here();
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok((w, line, col))
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn elem(&mut self) -> Result<Elem> {
        if self.eat(&Tok::LParen) {
            let mut items = vec![self.elem()?];
            while self.eat(&Tok::Comma) {
                items.push(self.elem()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Elem::tuple(items));
        }
        let (w, _, _) = self.word("an element")?;
        Ok(Elem::atom(&w))
    }

    /// `{}` or `{e, e, ...}`.
    fn elem_list(&mut self) -> Result<Vec<Elem>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            out.push(self.elem()?);
            if self.eat(&Tok::RBrace) {
                return Ok(out);
            }
            self.expect(Tok::Comma, "`,` or `}`")?;
        }
    }

    /// `{row; row; ...}` with comma-separated elements per row.
    fn rows(&mut self) -> Result<Vec<Vec<Elem>>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut rows = vec![Vec::new()];
        if self.eat(&Tok::RBrace) {
            return Ok(Vec::new());
        }
        loop {
            rows.last_mut().expect("nonempty").push(self.elem()?);
            if self.eat(&Tok::RBrace) {
                return Ok(rows);
            }
            if self.eat(&Tok::Semi) {
                rows.push(Vec::new());
                continue;
            }
            self.expect(Tok::Comma, "`,`, `;` or `}`")?;
        }
    }

    fn value(&mut self) -> Result<Field> {
        let (line, col) = self.here();
        if self.peek() != Some(&Tok::LBrace) {
            let (w, _, _) = self.word("a name or `{`")?;
            return Ok(Field {
                value: Value::Word(w),
                line,
                col,
            });
        }
        self.pos += 1;
        if self.eat(&Tok::RBrace) {
            return Ok(Field {
                value: Value::Map(Vec::new()),
                line,
                col,
            });
        }
        // `word:word` entries make a pair block, `elem->elem` a map.
        let is_pairs = matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Colon));
        let value = if is_pairs {
            let mut pairs = Vec::new();
            loop {
                let (a, _, _) = self.word("a name")?;
                self.expect(Tok::Colon, "`:`")?;
                let (b, _, _) = self.word("a name")?;
                pairs.push((a, b));
                if self.eat(&Tok::RBrace) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `}`")?;
            }
            Value::Pairs(pairs)
        } else {
            let mut pairs = Vec::new();
            loop {
                let a = self.elem()?;
                self.expect(Tok::Arrow, "`->`")?;
                let b = self.elem()?;
                pairs.push((a, b));
                if self.eat(&Tok::RBrace) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `}`")?;
            }
            Value::Map(pairs)
        };
        Ok(Field { value, line, col })
    }

    /// `{key=value, ...}` with the allowed keys; duplicates and unknown
    /// keys are rejected.
    fn fields(&mut self, allowed: &[&str]) -> Result<HashMap<String, Field>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = HashMap::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            let (key, line, col) = self.word("a key")?;
            if !allowed.contains(&key.as_str()) {
                return Err(parse_error(line, col, format!("unknown key `{key}`")));
            }
            if out.contains_key(&key) {
                return Err(parse_error(line, col, format!("key `{key}` given twice")));
            }
            self.expect(Tok::Eq, "`=`")?;
            let v = self.value()?;
            out.insert(key, v);
            if self.eat(&Tok::RBrace) {
                return Ok(out);
            }
            self.expect(Tok::Comma, "`,` or `}`")?;
        }
    }
}

struct Builder {
    doc: Option<Document>,
    format_seen: bool,
}

fn take<'a>(
    fields: &'a HashMap<String, Field>,
    key: &str,
    at: (usize, usize),
) -> Result<&'a Field> {
    fields
        .get(key)
        .ok_or_else(|| parse_error(at.0, at.1, format!("missing key `{key}`")))
}

fn undefined(name: &str, line: usize, col: usize) -> Error {
    Error::UndefinedReference {
        name: name.to_string(),
        line,
        col,
    }
}

fn word_of(field: &Field) -> Result<&str> {
    match &field.value {
        Value::Word(w) => Ok(w),
        _ => Err(parse_error(field.line, field.col, "expected a name")),
    }
}

impl Builder {
    fn doc(&mut self, p: &Parser) -> Result<&mut Document> {
        let at = p.here();
        self.doc
            .as_mut()
            .ok_or_else(|| parse_error(at.0, at.1, "`backend` must precede all entities"))
    }

    fn lookup_object(&self, name: &str, line: usize, col: usize) -> Result<Object> {
        let doc = self.doc.as_ref().expect("backend declared");
        match doc.get(name) {
            Some(Entity::Object(o)) => Ok(o.clone()),
            Some(e) => Err(parse_error(line, col, format!("`{name}` is a {}, not an object", e.kind()))),
            None => Err(undefined(name, line, col)),
        }
    }

    fn lookup_groupoid(&self, name: &str, line: usize, col: usize) -> Result<Groupoid> {
        let doc = self.doc.as_ref().expect("backend declared");
        match doc.get(name) {
            Some(Entity::Groupoid { groupoid, .. }) => Ok(groupoid.clone()),
            Some(e) => Err(parse_error(line, col, format!("`{name}` is a {}, not a groupoid", e.kind()))),
            None => Err(undefined(name, line, col)),
        }
    }

    fn lookup_functor(&self, name: &str, line: usize, col: usize) -> Result<GFunctor> {
        let doc = self.doc.as_ref().expect("backend declared");
        match doc.get(name) {
            Some(Entity::Functor { functor, .. }) => Ok(functor.clone()),
            Some(e) => Err(parse_error(line, col, format!("`{name}` is a {}, not a functor", e.kind()))),
            None => Err(undefined(name, line, col)),
        }
    }

    /// A map field: an inline map or the name of a `mor` with the given
    /// domain and codomain.
    fn map_field(&self, field: &Field, dom: &Object, cod: &Object) -> Result<Morphism> {
        let located = |e: Error| locate(field.line, field.col, e);
        match &field.value {
            Value::Map(pairs) => Morphism::from_pairs(dom, cod, pairs).map_err(located),
            Value::Word(name) => {
                let doc = self.doc.as_ref().expect("backend declared");
                match doc.get(name) {
                    Some(Entity::Morphism { map, .. }) => {
                        if map.dom() != dom || map.cod() != cod {
                            return Err(parse_error(field.line, field.col, format!("`{name}` has the wrong type")));
                        }
                        Ok(map.clone())
                    }
                    Some(e) => Err(parse_error(field.line, field.col, format!("`{name}` is a {}, not a mor", e.kind()))),
                    None => Err(undefined(name, field.line, field.col)),
                }
            }
            Value::Pairs(_) => Err(parse_error(field.line, field.col, "expected a map")),
        }
    }

    fn declare(&mut self, p: &Parser, name: &str, line: usize, col: usize, entity: Entity) -> Result<()> {
        let doc = self.doc(p)?;
        if doc.get(name).is_some() {
            return Err(Error::DuplicateName {
                name: name.to_string(),
                line,
                col,
            });
        }
        doc.insert(name, entity).map_err(|e| locate(line, col, e))
    }

    fn statement(&mut self, p: &mut Parser) -> Result<()> {
        let (kw, line, col) = p.word("a statement keyword")?;
        match kw.as_str() {
            "format" => {
                let (v, l, c) = p.word("a format version")?;
                if self.format_seen || self.doc.is_some() {
                    return Err(parse_error(line, col, "`format` must come first and once"));
                }
                if v.parse::<u32>().ok() != Some(FORMAT_VERSION) {
                    return Err(parse_error(l, c, format!("unsupported format version `{v}`")));
                }
                self.format_seen = true;
            }
            "backend" => {
                let (v, l, c) = p.word("a backend")?;
                if self.doc.is_some() {
                    return Err(parse_error(line, col, "backend declared twice"));
                }
                let backend: Backend = v.parse().map_err(|e: Error| locate(l, c, e))?;
                self.doc = Some(Document::new(backend));
            }
            "object" => {
                let (name, l, c) = p.word("a name")?;
                let backend = self.doc(p)?.backend;
                let carrier = p.elem_list()?;
                let obj = match backend {
                    Backend::FinSet => Object::finset(carrier),
                    Backend::FinAb => {
                        let (rl, rc) = p.here();
                        if !matches!(p.peek(), Some(Tok::Word(w)) if w == "add") {
                            return Err(p.error("group objects need `add` rows"));
                        }
                        p.pos += 1;
                        let rows = p.rows()?;
                        let index: HashMap<&Elem, usize> = carrier.iter().enumerate().map(|(k, e)| (e, k)).collect();
                        let rows = rows
                            .iter()
                            .map(|row| {
                                row.iter()
                                    .map(|e| index.get(e).copied().ok_or_else(|| parse_error(rl, rc, format!("`{e}` is not an element"))))
                                    .collect::<Result<Vec<_>>>()
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Object::finab(carrier, rows)
                    }
                }
                .map_err(|e| locate(l, c, e))?;
                self.declare(p, &name, l, c, Entity::Object(obj))?;
            }
            "mor" => {
                let (name, l, c) = p.word("a name")?;
                p.expect(Tok::Colon, "`:`")?;
                let (a, al, ac) = p.word("a domain")?;
                p.expect(Tok::Arrow, "`->`")?;
                let (b, bl, bc) = p.word("a codomain")?;
                self.doc(p)?;
                let dom = self.lookup_object(&a, al, ac)?;
                let cod = self.lookup_object(&b, bl, bc)?;
                let field = p.value()?;
                let map = self.map_field(&field, &dom, &cod)?;
                self.declare(p, &name, l, c, Entity::Morphism { dom: a, cod: b, map })?;
            }
            "groupoid" => {
                let (name, l, c) = p.word("a name")?;
                self.doc(p)?;
                let at = p.here();
                let f = p.fields(&["X0", "X1", "d", "c", "e", "i", "m"])?;
                let x0f = take(&f, "X0", at)?;
                let x1f = take(&f, "X1", at)?;
                let (x0n, x1n) = (word_of(x0f)?.to_string(), word_of(x1f)?.to_string());
                let x0 = self.lookup_object(&x0n, x0f.line, x0f.col)?;
                let x1 = self.lookup_object(&x1n, x1f.line, x1f.col)?;
                let d = self.map_field(take(&f, "d", at)?, &x1, &x0)?;
                let cm = self.map_field(take(&f, "c", at)?, &x1, &x0)?;
                let e = self.map_field(take(&f, "e", at)?, &x0, &x1)?;
                let i = self.map_field(take(&f, "i", at)?, &x1, &x1)?;
                let mf = take(&f, "m", at)?;
                let m = composition_table(mf, &x1, &d, &cm)?;
                let g = Groupoid::new(&x0, &x1, d, cm, e, i, m).map_err(|e| locate(l, c, e))?;
                self.declare(
                    p,
                    &name,
                    l,
                    c,
                    Entity::Groupoid {
                        objects: x0n,
                        arrows: x1n,
                        groupoid: g,
                    },
                )?;
            }
            "functor" => {
                let (name, l, c) = p.word("a name")?;
                p.expect(Tok::Colon, "`:`")?;
                let (a, al, ac) = p.word("a domain")?;
                p.expect(Tok::Arrow, "`->`")?;
                let (b, bl, bc) = p.word("a codomain")?;
                self.doc(p)?;
                let dom = self.lookup_groupoid(&a, al, ac)?;
                let cod = self.lookup_groupoid(&b, bl, bc)?;
                let at = p.here();
                let f = p.fields(&["f0", "f1"])?;
                let f0 = self.map_field(take(&f, "f0", at)?, dom.objects(), cod.objects())?;
                let f1 = self.map_field(take(&f, "f1", at)?, dom.arrows(), cod.arrows())?;
                let functor = GFunctor::new(&dom, &cod, f0, f1).map_err(|e| locate(l, c, e))?;
                self.declare(p, &name, l, c, Entity::Functor { dom: a, cod: b, functor })?;
            }
            "factorization" => {
                let (name, l, c) = p.word("a name")?;
                p.expect(Tok::Colon, "`:`")?;
                let (orig, ol, oc) = p.word("a functor")?;
                self.doc(p)?;
                let original = self.lookup_functor(&orig, ol, oc)?;
                let at = p.here();
                let f = p.fields(&["kind", "e_part", "middle", "m_part", "certificates"])?;
                let kf = take(&f, "kind", at)?;
                let kind: FactorizationKind = word_of(kf)?
                    .parse()
                    .map_err(|e: Error| locate(kf.line, kf.col, e))?;
                let names: Vec<(String, &Field)> = ["e_part", "middle", "m_part"]
                    .iter()
                    .map(|k| {
                        let fld = take(&f, k, at)?;
                        Ok((word_of(fld)?.to_string(), fld))
                    })
                    .collect::<Result<_>>()?;
                let e_part = self.lookup_functor(&names[0].0, names[0].1.line, names[0].1.col)?;
                let middle = self.lookup_groupoid(&names[1].0, names[1].1.line, names[1].1.col)?;
                let m_part = self.lookup_functor(&names[2].0, names[2].1.line, names[2].1.col)?;
                if e_part.dom() != original.dom() || e_part.cod() != &middle || m_part.dom() != &middle || m_part.cod() != original.cod() {
                    return Err(parse_error(l, c, "factorization parts do not form a composable pair through the middle"));
                }
                let cf = take(&f, "certificates", at)?;
                let certificates = match &cf.value {
                    Value::Pairs(pairs) => pairs
                        .iter()
                        .map(|(part, class)| Certificate {
                            part: part.clone(),
                            class: class.clone(),
                        })
                        .collect(),
                    Value::Map(pairs) if pairs.is_empty() => Vec::new(),
                    _ => return Err(parse_error(cf.line, cf.col, "expected `{part:class, ...}`")),
                };
                let factorization = Factorization {
                    kind,
                    original,
                    e_part,
                    middle,
                    m_part,
                    certificates,
                };
                let entity = Entity::Factorization {
                    original: orig,
                    e_part: names[0].0.clone(),
                    middle: names[1].0.clone(),
                    m_part: names[2].0.clone(),
                    factorization,
                };
                self.declare(p, &name, l, c, entity)?;
            }
            "stability" => {
                let (name, l, c) = p.word("a name")?;
                p.expect(Tok::Colon, "`:`")?;
                let (fname, fl, fc) = p.word("a functor")?;
                self.doc(p)?;
                self.lookup_functor(&fname, fl, fc)?;
                let at = p.here();
                let f = p.fields(&["along", "trials", "max_size", "seed", "probed", "skipped", "outcome", "probe", "pulled"])?;
                let num = |key: &str| -> Result<u64> {
                    let fld = take(&f, key, at)?;
                    word_of(fld)?
                        .parse::<u64>()
                        .map_err(|_| parse_error(fld.line, fld.col, format!("`{key}` must be a number")))
                };
                let af = take(&f, "along", at)?;
                let along: PullbackClass = word_of(af)?
                    .parse()
                    .map_err(|e: Error| locate(af.line, af.col, e))?;
                let budget = StabilityBudget {
                    trials: num("trials")? as usize,
                    max_size: num("max_size")? as usize,
                    seed: num("seed")?,
                };
                let (probed, skipped) = (num("probed")? as usize, num("skipped")? as usize);
                let of = take(&f, "outcome", at)?;
                let counterexample = match word_of(of)? {
                    "exhausted" => {
                        if f.contains_key("probe") || f.contains_key("pulled") {
                            return Err(parse_error(of.line, of.col, "an exhausted search has no witness"));
                        }
                        None
                    }
                    "counterexample" => {
                        let mut refs = Vec::new();
                        for key in ["probe", "pulled"] {
                            let fld = take(&f, key, at)?;
                            let n = word_of(fld)?.to_string();
                            self.lookup_functor(&n, fld.line, fld.col)?;
                            refs.push(n);
                        }
                        Some((refs[0].clone(), refs[1].clone()))
                    }
                    other => return Err(parse_error(of.line, of.col, format!("unknown outcome `{other}`"))),
                };
                let entry = StabilityEntry {
                    functor: fname,
                    along,
                    budget,
                    probed,
                    skipped,
                    counterexample,
                };
                self.declare(p, &name, l, c, Entity::Stability(entry))?;
            }
            other => return Err(parse_error(line, col, format!("unknown statement `{other}`"))),
        }
        Ok(())
    }
}

/// The composition table from `(a,b)->c` entries; every composable pair
/// must be listed exactly once.
fn composition_table(field: &Field, x1: &Object, d: &Morphism, c: &Morphism) -> Result<Morphism> {
    let at = |msg: String| parse_error(field.line, field.col, msg);
    let Value::Map(pairs) = &field.value else {
        return Err(at("`m` must be an inline table".into()));
    };
    let nerve = pullback(d, c).map_err(|e| locate(field.line, field.col, e))?;
    let mut table = vec![None; nerve.apex().len()];
    for (key, val) in pairs {
        let parts = key.as_tuple().filter(|t| t.len() == 2).ok_or_else(|| at(format!("`{key}` is not a pair of arrows")))?;
        let arrow = |e: &Elem| x1.index_of(e).ok_or_else(|| at(format!("`{e}` is not an arrow")));
        let (a, b) = (arrow(&parts[0])?, arrow(&parts[1])?);
        let k = nerve.pair_index(a, b).ok_or_else(|| at(format!("pair {key} is not composable")))?;
        if table[k].is_some() {
            return Err(at(format!("pair {key} listed twice")));
        }
        table[k] = Some(arrow(val)?);
    }
    let mut out = Vec::with_capacity(table.len());
    for (k, v) in table.into_iter().enumerate() {
        match v {
            Some(v) => out.push(v),
            None => {
                return Err(at(format!(
                    "composition table misses the composable pair {}",
                    nerve.apex().elem(k)
                )))
            }
        }
    }
    Morphism::new(nerve.apex(), x1, out).map_err(|e| at(e.to_string()))
}

pub fn parse(src: &str) -> Result<Document> {
    let toks = tokenize(src)?;
    let lines = src.lines().count();
    let mut p = Parser {
        toks,
        pos: 0,
        end: (lines.max(1), 1),
    };
    let mut b = Builder {
        doc: None,
        format_seen: false,
    };
    while p.pos < p.toks.len() {
        b.statement(&mut p)?;
    }
    b.doc.ok_or_else(|| parse_error(p.end.0, p.end.1, "missing `backend` declaration"))
}

pub fn parse_file(path: &std::path::Path) -> Result<Document> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse(&src)
}

/// Serialized functors with their groupoids, for failure reports.
pub fn witness_document(functors: &[(&str, &GFunctor)]) -> String {
    let Some((_, first)) = functors.first() else {
        return String::new();
    };
    let mut doc = Document::new(first.dom().backend());
    for (name, f) in functors {
        if let Err(e) = doc.add_functor(name, f) {
            return format!("# witness not serializable: {e}\n");
        }
    }
    doc.print()
}

/// The cube as a document with groupoids `DA`, `DAxIndA`, `D0` and
/// functors `front`, `right`, `back`, `left`.
pub fn cube_document(cube: &CounterexampleCube) -> String {
    cube_to_document(cube).map(|d| d.print()).unwrap_or_else(|e| format!("# cube not serializable: {e}\n"))
}

pub fn cube_to_document(cube: &CounterexampleCube) -> Result<Document> {
    let mut doc = Document::new(Backend::FinAb);
    doc.add_object("A", &cube.group)?;
    doc.add_groupoid("DA", &cube.front_left)?;
    doc.add_groupoid("DAxIndA", &cube.front_right)?;
    doc.add_groupoid("D0", &cube.back_left)?;
    doc.add_functor("front", &cube.front)?;
    doc.add_functor("right", &cube.right)?;
    doc.add_functor("back", &cube.back)?;
    doc.add_functor("left", &cube.left)?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpd::{discrete_of, groupoid_of_complex, indiscrete_of};

    #[test]
    fn backend_only_document_is_empty() {
        let doc = parse("backend finset\n").unwrap();
        assert!(doc.entries().is_empty());
        assert_eq!(doc.backend, Backend::FinSet);
    }

    #[test]
    fn round_trip_is_canonical() {
        let del = Morphism::new(&Object::cyclic(2).unwrap(), &Object::cyclic(4).unwrap(), vec![0, 2]).unwrap();
        let g = groupoid_of_complex(&del).unwrap();
        let mut doc = Document::new(Backend::FinAb);
        doc.add_functor("id", &GFunctor::identity(&g)).unwrap();
        let text = doc.print();
        let again = parse(&text).unwrap();
        assert_eq!(again.print(), text);
        assert_eq!(again.functor("id").unwrap(), &GFunctor::identity(&g));
    }

    #[test]
    fn missing_composable_pair_is_named() {
        let g = indiscrete_of(&Object::set_of_size(2).unwrap()).unwrap();
        let mut doc = Document::new(Backend::FinSet);
        doc.add_groupoid("G", &g).unwrap();
        let text = doc.print();
        let broken = text.replace("((0,0),(0,0))->(0,0), ", "");
        assert_ne!(broken, text);
        match parse(&broken) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("((0,0),(0,0))"), "{message}"),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn references_and_duplicates() {
        let err = parse("backend finset\nmor f : A -> A {}\n").unwrap_err();
        assert!(matches!(err, Error::UndefinedReference { ref name, line: 2, col: 9 } if name == "A"));
        let err = parse("backend finset\nobject A {}\nobject A {x}\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateName { line: 3, .. }));
        let err = parse("backend finset\nobject A {a}\ngroupoid G {X0=A, X1=A, colour=A}\n").unwrap_err();
        assert!(matches!(err, Error::Parse { ref message, .. } if message.contains("colour")));
    }

    #[test]
    fn comments_and_line_breaks() {
        let src = "# header\nformat 1\nbackend finset\nobject A {a,\n  b} # two points\n";
        let doc = parse(src).unwrap();
        assert_eq!(doc.object("A").unwrap().len(), 2);
    }

    #[test]
    fn discrete_groupoid_reuses_its_object() {
        let a = Object::cyclic(3).unwrap();
        let mut doc = Document::new(Backend::FinAb);
        doc.add_object("A", &a).unwrap();
        doc.add_groupoid("DA", &discrete_of(&a).unwrap()).unwrap();
        assert!(doc.print().contains("X0=A,\n  X1=A,"));
    }
}
