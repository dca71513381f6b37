//! Plain-text scenario files: configuration, declarations (curves, flags,
//! functionals, universes, ground-truth labels) and named tasks. The
//! format is line-oriented with `#` comments; the grammar is documented in
//! docs/scenario-format.md and every bundled file round-trips through
//! parse -> serialize -> parse.

use crate::error::{Error, Result};
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub kind: String, // "univariate" | "bivariate"
    pub p: u64,
    pub ell: u64,
    pub n: u32,
    pub big_n: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BudgetDecl {
    pub max_factors: usize,
    pub max_exp: i64,
    pub max_consts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveDecl {
    pub name: String,
    pub poly: String,
    pub asserted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlagDecl {
    pub name: String,
    pub curve: String,
    pub point: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub name: String,
    /// "n" or "N".
    pub level: String,
    pub terms: Vec<(String, u32, i64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniverseDecl {
    pub name: String,
    pub n_elems: Vec<String>,
    pub big_elems: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelDecl {
    pub universe: String,
    pub fun: String,
    pub visible: bool,
    pub flag: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskDecl {
    pub kind: String,
    /// key=value arguments; bare words are stored with an empty value.
    pub args: Vec<(String, String)>,
}

impl TaskDecl {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.args
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn has_flag_word(&self, word: &str) -> bool {
        self.args.iter().any(|(k, v)| k == word && v.is_empty())
    }

    /// Value with surrounding quotes stripped (for quoted-string values).
    pub fn get_string(&self, key: &str) -> Option<String> {
        self.get(key)
            .map(|v| v.trim_matches('"').to_string())
    }

    pub fn get_list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|v| {
            v.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub field: FieldDecl,
    pub budget: Option<BudgetDecl>,
    pub curves: Vec<CurveDecl>,
    pub flags: Vec<FlagDecl>,
    pub funs: Vec<FunDecl>,
    pub universes: Vec<UniverseDecl>,
    pub labels: Vec<LabelDecl>,
    pub tasks: Vec<TaskDecl>,
}

/// Line tokenizer: identifiers/numbers, quoted strings, and punctuation
/// = [ ] ( ) ,
#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(char),
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let b = line.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < b.len() && b[j] as char != '"' {
                j += 1;
            }
            if j == b.len() {
                return Err(Error::ScenarioParse {
                    line: lineno,
                    msg: "unterminated string".to_string(),
                });
            }
            out.push(Tok::Str(line[start..j].to_string()));
            i = j + 1;
            continue;
        }
        if "=[](),".contains(c) {
            out.push(Tok::Punct(c));
            i += 1;
            continue;
        }
        let start = i;
        while i < b.len() {
            let ch = b[i] as char;
            if ch.is_whitespace() || "=[](),\"#".contains(ch) {
                break;
            }
            i += 1;
        }
        out.push(Tok::Word(line[start..i].to_string()));
    }
    Ok(out)
}

struct LineParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    lineno: usize,
}

impl<'a> LineParser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::ScenarioParse { line: self.lineno, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn word(&mut self) -> Result<String> {
        match self.next().cloned() {
            Some(Tok::Word(w)) => Ok(w),
            other => self.err(format!("expected a word, got {:?}", other)),
        }
    }

    fn string(&mut self) -> Result<String> {
        match self.next().cloned() {
            Some(Tok::Str(s)) => Ok(s),
            other => self.err(format!("expected a quoted string, got {:?}", other)),
        }
    }

    fn punct(&mut self, c: char) -> Result<()> {
        match self.next().cloned() {
            Some(Tok::Punct(p)) if p == c => Ok(()),
            other => self.err(format!("expected '{}', got {:?}", c, other)),
        }
    }

    fn number_i64(&mut self) -> Result<i64> {
        // Tolerate a separate '-' word before a number.
        let w = self.word()?;
        if w == "-" {
            let v = self.word()?;
            return v
                .parse::<i64>()
                .map(|x| -x)
                .or_else(|_| self.err(format!("bad number {}", v)));
        }
        w.parse::<i64>()
            .or_else(|_| self.err(format!("bad number {}", w)))
    }

    fn keyvals(&mut self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        while let Some(t) = self.peek().cloned() {
            match t {
                Tok::Word(w) => {
                    self.next();
                    if matches!(self.peek(), Some(Tok::Punct('='))) {
                        self.next();
                        let v = match self.peek().cloned() {
                            Some(Tok::Str(s)) => {
                                self.next();
                                format!("\"{}\"", s)
                            }
                            Some(Tok::Punct('[')) => {
                                self.next();
                                let mut items = Vec::new();
                                loop {
                                    match self.next().cloned() {
                                        Some(Tok::Punct(']')) => break,
                                        Some(Tok::Punct(',')) => continue,
                                        Some(Tok::Word(x)) => items.push(x),
                                        Some(Tok::Str(x)) => items.push(x),
                                        other => {
                                            return self
                                                .err(format!("bad list item {:?}", other))
                                        }
                                    }
                                }
                                items.join(",")
                            }
                            Some(Tok::Word(x)) => {
                                self.next();
                                x
                            }
                            other => return self.err(format!("bad value {:?}", other)),
                        };
                        out.push((w, v));
                    } else {
                        out.push((w, String::new()));
                    }
                }
                other => return self.err(format!("unexpected token {:?}", other)),
            }
        }
        Ok(out)
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut name = None;
    let mut field = None;
    let mut budget = None;
    let mut curves = Vec::new();
    let mut flags = Vec::new();
    let mut funs = Vec::new();
    let mut universes = Vec::new();
    let mut labels = Vec::new();
    let mut tasks = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = tokenize(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser { toks: &toks, pos: 0, lineno };
        let head = p.word()?;
        match head.as_str() {
            "scenario" => {
                name = Some(p.word()?);
            }
            "field" => {
                let kind = p.word()?;
                if kind != "univariate" && kind != "bivariate" {
                    return p.err(format!("unknown field kind {}", kind));
                }
                let kv = p.keyvals()?;
                let lookup = |key: &str| -> Result<u64> {
                    kv.iter()
                        .find(|(k, _)| k == key)
                        .ok_or(Error::ScenarioParse {
                            line: lineno,
                            msg: format!("missing {}", key),
                        })?
                        .1
                        .parse::<u64>()
                        .map_err(|_| Error::ScenarioParse {
                            line: lineno,
                            msg: format!("bad {}", key),
                        })
                };
                field = Some(FieldDecl {
                    kind,
                    p: lookup("p")?,
                    ell: lookup("ell")?,
                    n: lookup("n")? as u32,
                    big_n: lookup("N")? as u32,
                });
            }
            "budget" => {
                let kv = p.keyvals()?;
                let mut b = BudgetDecl { max_factors: 2, max_exp: 2, max_consts: 200 };
                for (k, v) in kv {
                    match k.as_str() {
                        "max_factors" => b.max_factors = v.parse().map_err(|_| Error::ScenarioParse { line: lineno, msg: "bad max_factors".into() })?,
                        "max_exp" => b.max_exp = v.parse().map_err(|_| Error::ScenarioParse { line: lineno, msg: "bad max_exp".into() })?,
                        "max_consts" => b.max_consts = v.parse().map_err(|_| Error::ScenarioParse { line: lineno, msg: "bad max_consts".into() })?,
                        other => {
                            return Err(Error::ScenarioParse {
                                line: lineno,
                                msg: format!("unknown budget key {}", other),
                            })
                        }
                    }
                }
                budget = Some(b);
            }
            "curve" => {
                let cname = p.word()?;
                let poly = p.string()?;
                let mut asserted = false;
                if let Some(Tok::Word(w)) = p.peek() {
                    if w == "assert-irreducible" {
                        asserted = true;
                        p.next();
                    }
                }
                curves.push(CurveDecl { name: cname, poly, asserted });
            }
            "flag" => {
                let fname = p.word()?;
                p.punct('=')?;
                p.punct('[')?;
                let curve = p.word()?;
                let mut point = None;
                if matches!(p.peek(), Some(Tok::Punct(','))) {
                    p.next();
                    let kw = p.word()?;
                    if kw != "point" {
                        return p.err(format!("expected 'point', got {}", kw));
                    }
                    point = Some(p.string()?);
                }
                p.punct(']')?;
                flags.push(FlagDecl { name: fname, curve, point });
            }
            "fun" => {
                let fname = p.word()?;
                p.punct('=')?;
                let kw = p.word()?;
                if kw != "level" {
                    return p.err("expected 'level'");
                }
                let level = p.word()?;
                if level != "n" && level != "N" {
                    return p.err(format!("level must be n or N, got {}", level));
                }
                let kw = p.word()?;
                if kw != "terms" {
                    return p.err("expected 'terms'");
                }
                p.punct('[')?;
                let mut terms = Vec::new();
                loop {
                    match p.peek().cloned() {
                        Some(Tok::Punct(']')) => {
                            p.next();
                            break;
                        }
                        Some(Tok::Punct(',')) => {
                            p.next();
                        }
                        Some(Tok::Punct('(')) => {
                            p.next();
                            let flag = p.word()?;
                            p.punct(',')?;
                            let coord = p.number_i64()?;
                            p.punct(',')?;
                            let coeff = p.number_i64()?;
                            p.punct(')')?;
                            terms.push((flag, coord as u32, coeff));
                        }
                        other => return p.err(format!("bad term {:?}", other)),
                    }
                }
                funs.push(FunDecl { name: fname, level, terms });
            }
            "universe" => {
                let uname = p.word()?;
                p.punct('=')?;
                let kw = p.word()?;
                if kw != "n" {
                    return p.err("expected 'n' list");
                }
                p.punct('[')?;
                let mut n_elems = Vec::new();
                loop {
                    match p.next().cloned() {
                        Some(Tok::Punct(']')) => break,
                        Some(Tok::Punct(',')) => continue,
                        Some(Tok::Word(w)) => n_elems.push(w),
                        other => return p.err(format!("bad universe element {:?}", other)),
                    }
                }
                let mut big_elems = None;
                if let Some(Tok::Word(w)) = p.peek().cloned() {
                    if w == "N" {
                        p.next();
                        p.punct('[')?;
                        let mut items = Vec::new();
                        loop {
                            match p.next().cloned() {
                                Some(Tok::Punct(']')) => break,
                                Some(Tok::Punct(',')) => continue,
                                Some(Tok::Word(w)) => items.push(w),
                                other => {
                                    return p.err(format!("bad universe element {:?}", other))
                                }
                            }
                        }
                        big_elems = Some(items);
                    }
                }
                universes.push(UniverseDecl { name: uname, n_elems, big_elems });
            }
            "label" => {
                let universe = p.word()?;
                let fun = p.word()?;
                let vis = p.word()?;
                let visible = match vis.as_str() {
                    "visible" => true,
                    "hidden" => false,
                    other => return p.err(format!("expected visible|hidden, got {}", other)),
                };
                let mut flag = None;
                let kv = p.keyvals()?;
                for (k, v) in kv {
                    if k == "flag" {
                        flag = Some(v);
                    } else {
                        return Err(Error::ScenarioParse {
                            line: lineno,
                            msg: format!("unknown label key {}", k),
                        });
                    }
                }
                labels.push(LabelDecl { universe, fun, visible, flag });
            }
            "task" => {
                let kind = p.word()?;
                let args = p.keyvals()?;
                tasks.push(TaskDecl { kind, args });
            }
            other => {
                return Err(Error::ScenarioParse {
                    line: lineno,
                    msg: format!("unknown directive {}", other),
                })
            }
        }
    }

    Ok(Scenario {
        name: name.ok_or(Error::ScenarioParse { line: 0, msg: "missing scenario name".into() })?,
        field: field.ok_or(Error::ScenarioParse { line: 0, msg: "missing field declaration".into() })?,
        budget,
        curves,
        flags,
        funs,
        universes,
        labels,
        tasks,
    })
}

/// Canonical serialization; parse(serialize(s)) == s.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}", s.name);
    let _ = writeln!(
        out,
        "field {} p={} ell={} n={} N={}",
        s.field.kind, s.field.p, s.field.ell, s.field.n, s.field.big_n
    );
    if let Some(b) = &s.budget {
        let _ = writeln!(
            out,
            "budget max_factors={} max_exp={} max_consts={}",
            b.max_factors, b.max_exp, b.max_consts
        );
    }
    for c in &s.curves {
        let _ = write!(out, "curve {} \"{}\"", c.name, c.poly);
        if c.asserted {
            let _ = write!(out, " assert-irreducible");
        }
        let _ = writeln!(out);
    }
    for f in &s.flags {
        match &f.point {
            None => {
                let _ = writeln!(out, "flag {} = [{}]", f.name, f.curve);
            }
            Some(pt) => {
                let _ = writeln!(out, "flag {} = [{}, point \"{}\"]", f.name, f.curve, pt);
            }
        }
    }
    for f in &s.funs {
        let terms: Vec<String> = f
            .terms
            .iter()
            .map(|(flag, coord, coeff)| format!("({}, {}, {})", flag, coord, coeff))
            .collect();
        let _ = writeln!(
            out,
            "fun {} = level {} terms [{}]",
            f.name,
            f.level,
            terms.join(", ")
        );
    }
    for u in &s.universes {
        let _ = write!(out, "universe {} = n [{}]", u.name, u.n_elems.join(", "));
        if let Some(big) = &u.big_elems {
            let _ = write!(out, " N [{}]", big.join(", "));
        }
        let _ = writeln!(out);
    }
    for l in &s.labels {
        let _ = write!(
            out,
            "label {} {} {}",
            l.universe,
            l.fun,
            if l.visible { "visible" } else { "hidden" }
        );
        if let Some(fl) = &l.flag {
            let _ = write!(out, " flag={}", fl);
        }
        let _ = writeln!(out);
    }
    for t in &s.tasks {
        let _ = write!(out, "task {}", t.kind);
        for (k, v) in &t.args {
            if v.is_empty() {
                let _ = write!(out, " {}", k);
            } else if v.starts_with('"') {
                let _ = write!(out, " {}={}", k, v);
            } else if v.contains(',') {
                let _ = write!(out, " {}=[{}]", k, v.replace(',', ", "));
            } else {
                let _ = write!(out, " {}={}", k, v);
            }
        }
        let _ = writeln!(out);
    }
    out
}
