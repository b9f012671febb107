//! Parameter terms carried by concept nodes.
//!
//! A [`Term`] is the lower-left quadrant of a concept node: conditions,
//! source/target variables, loop bounds. Terms produced from programs are
//! always [normalized](Term::normalize) so that trivial algebraic reorderings
//! (`k + 1` against `1 + k`, `a > b` against `b < a`, `k <= n - 1` against
//! `k < n`) yield identical parameters.
//!
//! Rule patterns and templates use the same syntax with two extra atoms:
//! `?name` binds any term, `_` matches anything.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Mul | BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or)
    }

    pub(crate) fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Not,
}

const UNARY_PREC: u8 = 7;
const POSTFIX_PREC: u8 = 8;
const ATOM_PREC: u8 = 9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// A program variable. Substitutable during matching.
    Var(String),
    /// A pattern meta-variable (`?x`), binds an arbitrary term.
    Meta(String),
    /// Pattern wildcard (`_`).
    Wild,
    Int(i64),
    Bool(bool),
    /// A literal label: function names, string literals, loop tags.
    Sym(String),
    Bin(BinOp, Box<Term>, Box<Term>),
    Un(UnOp, Box<Term>),
    Index(Box<Term>, Box<Term>),
    Len(Box<Term>),
    /// A call to a user function inside an expression (`@f(x)`).
    Call(String, Vec<Term>),
    /// A structural tag such as `cond(..)`, `init(..)`, `ref(..)`.
    Tag(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn tag(name: &str, args: Vec<Term>) -> Term {
        Term::Tag(name.to_string(), args)
    }

    pub fn bin(op: BinOp, l: Term, r: Term) -> Term {
        Term::Bin(op, Box::new(l), Box::new(r))
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Bin(op, _, _) => op.precedence(),
            Term::Un(..) => UNARY_PREC,
            Term::Int(v) if *v < 0 => UNARY_PREC,
            Term::Index(..) | Term::Len(..) => POSTFIX_PREC,
            _ => ATOM_PREC,
        }
    }

    /// Every variable name occurring in the term, in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    /// Every meta-variable name occurring in the term.
    pub fn metas(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let Term::Meta(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    fn walk(&self, f: &mut dyn FnMut(&Term)) {
        f(self);
        match self {
            Term::Bin(_, l, r) | Term::Index(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            Term::Un(_, x) | Term::Len(x) => x.walk(f),
            Term::Call(_, args) | Term::Tag(_, args) => args.iter().for_each(|a| a.walk(f)),
            _ => {}
        }
    }

    /// Rename variables through `map`; unmapped variables are kept.
    pub fn rename_vars(&self, map: &BTreeMap<String, String>) -> Term {
        self.map_atoms(&mut |t| match t {
            Term::Var(v) => map.get(v).map(|n| Term::Var(n.clone())),
            _ => None,
        })
    }

    fn map_atoms(&self, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Term {
        if let Some(t) = f(self) {
            return t;
        }
        match self {
            Term::Bin(op, l, r) => Term::Bin(*op, Box::new(l.map_atoms(f)), Box::new(r.map_atoms(f))),
            Term::Un(op, x) => Term::Un(*op, Box::new(x.map_atoms(f))),
            Term::Index(l, r) => Term::Index(Box::new(l.map_atoms(f)), Box::new(r.map_atoms(f))),
            Term::Len(x) => Term::Len(Box::new(x.map_atoms(f))),
            Term::Call(n, args) => Term::Call(n.clone(), args.iter().map(|a| a.map_atoms(f)).collect()),
            Term::Tag(n, args) => Term::Tag(n.clone(), args.iter().map(|a| a.map_atoms(f)).collect()),
            other => other.clone(),
        }
    }

    /// Instantiate variables and meta-variables from `b`, then normalize.
    ///
    /// Unbound variables are kept as they are; unbound meta-variables stay
    /// as meta-variables.
    pub fn substitute(&self, b: &Bindings) -> Term {
        self.map_atoms(&mut |t| match t {
            Term::Var(v) => b.vars.get(v).map(|n| Term::Var(n.clone())),
            Term::Meta(m) => b.metas.get(m).cloned(),
            _ => None,
        })
        .normalize()
    }

    /// Canonical form used for every parameter stored in a concept graph.
    ///
    /// - `a > b` becomes `b < a`; `a <= b` becomes `a < b + 1`; `a >= b`
    ///   becomes `b < a + 1`.
    /// - sums and differences are flattened into a linear combination, equal
    ///   summands are merged, constants folded; the result lists positive
    ///   summands (sorted), then subtracted ones, then the constant.
    /// - operands of the remaining commutative operators are sorted by their
    ///   printed form.
    pub fn normalize(&self) -> Term {
        match self {
            Term::Bin(op, l, r) => {
                let (l, r) = (l.normalize(), r.normalize());
                match op {
                    BinOp::Gt => Term::bin(BinOp::Lt, r, l),
                    BinOp::Le => Term::bin(BinOp::Lt, l, Term::bin(BinOp::Add, r, Term::Int(1)).normalize()),
                    BinOp::Ge => Term::bin(BinOp::Lt, r, Term::bin(BinOp::Add, l, Term::Int(1)).normalize()),
                    BinOp::Add | BinOp::Sub => {
                        let t = Term::bin(*op, l, r);
                        linearize(&t).and_then(|lin| lin.rebuild()).unwrap_or(t)
                    }
                    BinOp::Mul => match (&l, &r) {
                        (Term::Int(a), Term::Int(b)) => {
                            a.checked_mul(*b).map(Term::Int).unwrap_or_else(|| sorted_bin(*op, l, r))
                        }
                        _ => sorted_bin(*op, l, r),
                    },
                    op if op.is_commutative() => sorted_bin(*op, l, r),
                    op => Term::bin(*op, l, r),
                }
            }
            Term::Un(UnOp::Neg, x) => {
                let t = Term::Un(UnOp::Neg, Box::new(x.normalize()));
                linearize(&t).and_then(|lin| lin.rebuild()).unwrap_or(t)
            }
            Term::Un(UnOp::Not, x) => match x.normalize() {
                Term::Un(UnOp::Not, inner) => *inner,
                Term::Bool(b) => Term::Bool(!b),
                other => Term::Un(UnOp::Not, Box::new(other)),
            },
            Term::Index(l, r) => Term::Index(Box::new(l.normalize()), Box::new(r.normalize())),
            Term::Len(x) => Term::Len(Box::new(x.normalize())),
            Term::Call(n, args) => Term::Call(n.clone(), args.iter().map(Term::normalize).collect()),
            Term::Tag(n, args) => Term::Tag(n.clone(), args.iter().map(Term::normalize).collect()),
            other => other.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Term, TermParseError> {
        let tokens = tokenize(text)?;
        let mut p = TermParser { tokens, pos: 0 };
        let t = p.expr(0)?;
        if p.pos != p.tokens.len() {
            return Err(TermParseError::Trailing(p.pos));
        }
        Ok(t)
    }
}

fn sorted_bin(op: BinOp, l: Term, r: Term) -> Term {
    if r.to_string() < l.to_string() {
        Term::bin(op, r, l)
    } else {
        Term::bin(op, l, r)
    }
}

/// Linear combination `sum(coef * term) + constant`.
struct Linear {
    terms: Vec<(Term, i64)>,
    constant: i64,
}

fn linearize(t: &Term) -> Option<Linear> {
    let mut lin = Linear { terms: Vec::new(), constant: 0 };
    collect_linear(t, 1, &mut lin)?;
    Some(lin)
}

fn collect_linear(t: &Term, sign: i64, lin: &mut Linear) -> Option<()> {
    match t {
        Term::Int(v) => lin.constant = lin.constant.checked_add(v.checked_mul(sign)?)?,
        Term::Bin(BinOp::Add, l, r) => {
            collect_linear(l, sign, lin)?;
            collect_linear(r, sign, lin)?;
        }
        Term::Bin(BinOp::Sub, l, r) => {
            collect_linear(l, sign, lin)?;
            collect_linear(r, -sign, lin)?;
        }
        Term::Un(UnOp::Neg, x) => collect_linear(x, -sign, lin)?,
        Term::Bin(BinOp::Mul, l, r) if matches!(**l, Term::Int(_)) || matches!(**r, Term::Int(_)) => {
            let (c, x) = match (&**l, &**r) {
                (Term::Int(c), x) => (*c, x),
                (x, Term::Int(c)) => (*c, x),
                _ => unreachable!(),
            };
            collect_linear(x, sign.checked_mul(c)?, lin)?;
        }
        other => {
            if let Some(slot) = lin.terms.iter_mut().find(|(x, _)| x == other) {
                slot.1 = slot.1.checked_add(sign)?;
            } else {
                lin.terms.push((other.clone(), sign));
            }
        }
    }
    Some(())
}

impl Linear {
    fn rebuild(mut self) -> Option<Term> {
        self.terms.retain(|(_, c)| *c != 0);
        self.terms.sort_by_key(|(t, _)| t.to_string());
        let scaled = |t: &Term, c: i64| {
            if c == 1 {
                t.clone()
            } else {
                sorted_bin(BinOp::Mul, Term::Int(c), t.clone())
            }
        };
        let mut acc: Option<Term> = None;
        for (t, c) in self.terms.iter().filter(|(_, c)| *c > 0) {
            let s = scaled(t, *c);
            acc = Some(match acc {
                None => s,
                Some(a) => Term::bin(BinOp::Add, a, s),
            });
        }
        for (t, c) in self.terms.iter().filter(|(_, c)| *c < 0) {
            let s = scaled(t, c.checked_neg()?);
            acc = Some(match acc {
                None => Term::Un(UnOp::Neg, Box::new(s)),
                Some(a) => Term::bin(BinOp::Sub, a, s),
            });
        }
        Some(match acc {
            None => Term::Int(self.constant),
            Some(a) if self.constant > 0 => Term::bin(BinOp::Add, a, Term::Int(self.constant)),
            Some(a) if self.constant < 0 => match self.constant.checked_neg() {
                Some(c) => Term::bin(BinOp::Sub, a, Term::Int(c)),
                None => Term::bin(BinOp::Add, a, Term::Int(self.constant)),
            },
            Some(a) => a,
        })
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, t: &Term, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({t})")
            } else {
                write!(f, "{t}")
            }
        }
        fn list(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            Ok(())
        }
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Meta(m) => write!(f, "?{m}"),
            Term::Wild => f.write_str("_"),
            Term::Int(v) => write!(f, "{v}"),
            Term::Bool(b) => write!(f, "{b}"),
            Term::Sym(s) => write!(f, "{s:?}"),
            Term::Bin(op, l, r) => {
                let p = op.precedence();
                wrap(f, l, l.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                wrap(f, r, r.precedence() <= p)
            }
            Term::Un(op, x) => {
                f.write_str(if *op == UnOp::Neg { "-" } else { "!" })?;
                wrap(f, x, x.precedence() <= UNARY_PREC)
            }
            Term::Index(l, r) => {
                wrap(f, l, l.precedence() < POSTFIX_PREC)?;
                write!(f, "[{r}]")
            }
            Term::Len(x) => {
                wrap(f, x, x.precedence() < POSTFIX_PREC)?;
                f.write_str(".length")
            }
            Term::Call(n, args) => {
                write!(f, "@{n}(")?;
                list(f, args)?;
                f.write_str(")")
            }
            Term::Tag(n, args) => {
                write!(f, "{n}(")?;
                list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Term::parse(&text).map_err(|e| serde::de::Error::custom(format!("bad term {text:?}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermParseError {
    #[error("unexpected character {0:?} at offset {1}")]
    BadChar(char, usize),
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("integer literal out of range")]
    IntRange,
    #[error("unexpected token at position {0}")]
    Unexpected(usize),
    #[error("unexpected end of term")]
    Eof,
    #[error("trailing input at token {0}")]
    Trailing(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Meta(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
}

const PUNCTS: [&str; 22] = [
    "&&", "||", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%", "!", "(", ")", "[", "]", ",", ".", "@", "?",
];

fn tokenize(text: &str) -> Result<Vec<Tok>, TermParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Int(s.parse().map_err(|_| TermParseError::IntRange)?));
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(TermParseError::UnterminatedString),
                    Some('"') => break,
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(&e) => s.push(e),
                            None => return Err(TermParseError::UnterminatedString),
                        }
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(Tok::Str(s));
        } else if c == '?' {
            i += 1;
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            if start == i {
                return Err(TermParseError::BadChar('?', start - 1));
            }
            out.push(Tok::Meta(chars[start..i].iter().collect()));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    i += p.len();
                    out.push(Tok::Punct(p));
                }
                None => return Err(TermParseError::BadChar(c, i)),
            }
        }
    }
    Ok(out)
}

struct TermParser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl TermParser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), TermParseError> {
        if self.eat(p) {
            Ok(())
        } else if self.peek().is_none() {
            Err(TermParseError::Eof)
        } else {
            Err(TermParseError::Unexpected(self.pos))
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<Term, TermParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = match self.peek() {
            Some(Tok::Punct(p)) => BinOp::from_symbol(p).filter(|op| op.precedence() > min_prec),
            _ => None,
        } {
            self.pos += 1;
            let rhs = self.expr(op.precedence())?;
            lhs = Term::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Term, TermParseError> {
        if self.eat("-") {
            let x = self.unary()?;
            return Ok(match x {
                Term::Int(v) => Term::Int(-v),
                x => Term::Un(UnOp::Neg, Box::new(x)),
            });
        }
        if self.eat("!") {
            return Ok(Term::Un(UnOp::Not, Box::new(self.unary()?)));
        }
        let mut t = self.atom()?;
        loop {
            if self.eat("[") {
                let idx = self.expr(0)?;
                self.expect("]")?;
                t = Term::Index(Box::new(t), Box::new(idx));
            } else if self.eat(".") {
                match self.peek() {
                    Some(Tok::Ident(s)) if s == "length" => self.pos += 1,
                    _ => return Err(TermParseError::Unexpected(self.pos)),
                }
                t = Term::Len(Box::new(t));
            } else {
                return Ok(t);
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, TermParseError> {
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr(0)?);
            if self.eat(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn atom(&mut self) -> Result<Term, TermParseError> {
        let tok = self.peek().cloned().ok_or(TermParseError::Eof)?;
        self.pos += 1;
        match tok {
            Tok::Int(v) => Ok(Term::Int(v)),
            Tok::Str(s) => Ok(Term::Sym(s)),
            Tok::Meta(m) => Ok(Term::Meta(m)),
            Tok::Ident(s) => match s.as_str() {
                "_" => Ok(Term::Wild),
                "true" => Ok(Term::Bool(true)),
                "false" => Ok(Term::Bool(false)),
                _ if self.eat("(") => Ok(Term::Tag(s, self.args()?)),
                _ => Ok(Term::Var(s)),
            },
            Tok::Punct("(") => {
                let t = self.expr(0)?;
                self.expect(")")?;
                Ok(t)
            }
            Tok::Punct("@") => {
                let name = match self.peek() {
                    Some(Tok::Ident(n)) => n.clone(),
                    _ => return Err(TermParseError::Unexpected(self.pos)),
                };
                self.pos += 1;
                self.expect("(")?;
                Ok(Term::Call(name, self.args()?))
            }
            _ => Err(TermParseError::Unexpected(self.pos - 1)),
        }
    }
}

/// Variable and meta-variable bindings accumulated while unifying a pattern
/// against concrete terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings {
    pub vars: BTreeMap<String, String>,
    pub metas: BTreeMap<String, Term>,
    reverse: BTreeMap<String, String>,
    injective: bool,
}

impl Bindings {
    /// Bindings where pattern variables may share a target variable.
    pub fn new() -> Self {
        Self::default()
    }

    /// Bindings that keep the variable map injective.
    pub fn injective() -> Self {
        Self { injective: true, ..Self::default() }
    }

    fn bind_var(&mut self, pattern: &str, target: &str) -> bool {
        if let Some(existing) = self.vars.get(pattern) {
            return existing == target;
        }
        if self.injective && self.reverse.contains_key(target) {
            return false;
        }
        self.vars.insert(pattern.to_string(), target.to_string());
        self.reverse.insert(target.to_string(), pattern.to_string());
        true
    }

    fn bind_meta(&mut self, name: &str, target: &Term) -> bool {
        match self.metas.get(name) {
            Some(t) => t == target,
            None => {
                self.metas.insert(name.to_string(), target.clone());
                true
            }
        }
    }

    /// The term a pattern variable or meta-variable was bound to.
    pub fn lookup(&self, name: &str) -> Option<Term> {
        if let Some(m) = name.strip_prefix('?') {
            self.metas.get(m).cloned()
        } else {
            self.vars.get(name).map(|v| Term::Var(v.clone()))
        }
    }
}

/// All ways `pattern` can be unified with `target` extending `b`.
///
/// Commutative binary operators are tried in both operand orders, so the
/// result may contain more than one binding set.
pub fn unify(pattern: &Term, target: &Term, b: &Bindings) -> Vec<Bindings> {
    match (pattern, target) {
        (Term::Wild, _) => vec![b.clone()],
        (Term::Meta(m), t) => {
            let mut nb = b.clone();
            if nb.bind_meta(m, t) {
                vec![nb]
            } else {
                vec![]
            }
        }
        (Term::Var(p), Term::Var(t)) => {
            let mut nb = b.clone();
            if nb.bind_var(p, t) {
                vec![nb]
            } else {
                vec![]
            }
        }
        (Term::Bin(op, l, r), Term::Bin(top, tl, tr)) if op == top => {
            let mut out = unify_seq(&[l, r], &[tl, tr], b);
            if op.is_commutative() {
                for nb in unify_seq(&[l, r], &[tr, tl], b) {
                    if !out.contains(&nb) {
                        out.push(nb);
                    }
                }
            }
            out
        }
        (Term::Un(op, x), Term::Un(top, tx)) if op == top => unify(x, tx, b),
        (Term::Index(l, r), Term::Index(tl, tr)) => unify_seq(&[l, r], &[tl, tr], b),
        (Term::Len(x), Term::Len(tx)) => unify(x, tx, b),
        (Term::Call(n, args), Term::Call(tn, targs)) | (Term::Tag(n, args), Term::Tag(tn, targs))
            if n == tn && args.len() == targs.len() =>
        {
            unify_list(args, targs, b)
        }
        (p, t) if is_atom(p) => {
            if p == t {
                vec![b.clone()]
            } else {
                vec![]
            }
        }
        _ => vec![],
    }
}

fn is_atom(t: &Term) -> bool {
    matches!(t, Term::Int(_) | Term::Bool(_) | Term::Sym(_))
}

fn unify_seq(pats: &[&Term], targets: &[&Term], b: &Bindings) -> Vec<Bindings> {
    let mut states = vec![b.clone()];
    for (p, t) in pats.iter().zip(targets) {
        states = states.iter().flat_map(|s| unify(p, t, s)).collect();
        if states.is_empty() {
            break;
        }
    }
    states
}

/// Unify two parameter lists position by position.
pub fn unify_list(pats: &[Term], targets: &[Term], b: &Bindings) -> Vec<Bindings> {
    if pats.len() != targets.len() {
        return vec![];
    }
    let p: Vec<&Term> = pats.iter().collect();
    let t: Vec<&Term> = targets.iter().collect();
    unify_seq(&p, &t, b)
}
