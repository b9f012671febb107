//! Recursive-descent parser for MiniLang.
//!
//! Statement numbers are assigned in source order as
//! `max(previous + 1, line of the statement's first token)`, so a program
//! written one statement per line is numbered by its line numbers while
//! several statements on one line still get distinct, increasing numbers.

use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{lex, TokKind, Token};
use super::{Diagnostic, FrontendError, SourceProgram, MAX_ERRORS};
use crate::term::{BinOp, UnOp};

pub fn parse(source: &SourceProgram) -> Result<Ast, FrontendError> {
    if source.text.trim().is_empty() {
        return Err(FrontendError::EmptyProgram);
    }
    let tokens = lex(&source.text)?;
    if tokens.len() == 1 {
        return Err(FrontendError::EmptyProgram);
    }
    let mut p = Parser { tokens, pos: 0, last_no: 0, errors: Vec::new() };
    let mut items = Vec::new();
    while !p.at_eof() && p.errors.len() < MAX_ERRORS {
        if p.at_funcdef() {
            match p.funcdef() {
                Ok(s) => items.push(s),
                Err(()) => p.recover(),
            }
        } else if p.stmt(&mut items).is_err() {
            p.recover();
        }
    }
    let ast = Ast { name: source.name.clone(), items };
    check_builtin_swap(&ast, &mut p.errors);
    if p.errors.is_empty() {
        Ok(ast)
    } else {
        p.errors.truncate(MAX_ERRORS);
        Err(FrontendError::Parse(p.errors))
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    last_no: StmtNo,
    errors: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ()>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, k: usize) -> &TokKind {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].kind
    }

    fn at_eof(&self) -> bool {
        self.peek().kind == TokKind::Eof
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Ident(s) if s == kw)
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if t.kind != TokKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&mut self, msg: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        let found = match &t.kind {
            TokKind::Eof => "end of input".to_string(),
            TokKind::Ident(s) => format!("`{s}`"),
            TokKind::Int(v) => format!("`{v}`"),
            TokKind::Str(s) => format!("{s:?}"),
            TokKind::Punct(p) => format!("`{p}`"),
        };
        let d = Diagnostic::new(t.line, t.col, format!("{}, found {found}", msg.into()));
        self.errors.push(d);
        Err(())
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match &self.peek().kind {
            TokKind::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.error("expected identifier"),
        }
    }

    /// Skip to just past the next `;`, or up to the next `}`.
    fn recover(&mut self) {
        let start = self.pos;
        while !self.at_eof() {
            if self.eat(";") {
                return;
            }
            if self.is_punct("}") {
                if self.pos == start {
                    self.pos += 1;
                }
                return;
            }
            self.pos += 1;
        }
    }

    fn number(&mut self, line: u32) -> StmtNo {
        self.last_no = (self.last_no + 1).max(line);
        self.last_no
    }

    fn at_funcdef(&self) -> bool {
        let is_type = matches!(self.peek_at(0), TokKind::Ident(s) if s == "void" || s == "int" || s == "bool");
        is_type
            && matches!(self.peek_at(1), TokKind::Ident(s) if !is_keyword(s))
            && *self.peek_at(2) == TokKind::Punct("(")
    }

    fn funcdef(&mut self) -> PResult<Stmt> {
        let head = self.advance();
        let no = self.number(head.line);
        let ret = match &head.kind {
            TokKind::Ident(s) if s == "void" => RetType::Void,
            TokKind::Ident(s) if s == "bool" => RetType::Bool,
            _ => RetType::Int,
        };
        let name = self.ident()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.eat(")") {
            loop {
                let ty = self.base_type()?;
                let by_ref = self.eat("&");
                let pname = self.ident()?;
                let is_list = if self.eat("[") {
                    self.expect("]")?;
                    true
                } else {
                    false
                };
                params.push(Param { ty, by_ref, name: pname, is_list });
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let body = self.block()?;
        Ok(Stmt { no, kind: StmtKind::FuncDef { ret, name, params, body } })
    }

    fn base_type(&mut self) -> PResult<BaseType> {
        if self.is_kw("int") {
            self.pos += 1;
            Ok(BaseType::Int)
        } else if self.is_kw("bool") {
            self.pos += 1;
            Ok(BaseType::Bool)
        } else {
            self.error("expected type `int` or `bool`")
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.is_punct("}") {
            if self.at_eof() {
                return self.error("expected `}`");
            }
            if self.errors.len() >= MAX_ERRORS {
                return Err(());
            }
            if self.stmt(&mut out).is_err() {
                self.recover();
            }
        }
        self.pos += 1;
        Ok(out)
    }

    /// A loop or branch body: a braced block or a single statement.
    fn body(&mut self) -> PResult<Vec<Stmt>> {
        if self.is_punct("{") {
            self.block()
        } else {
            let mut out = Vec::new();
            self.stmt(&mut out)?;
            Ok(out)
        }
    }

    fn stmt(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let tok = self.peek().clone();
        let kw = match &tok.kind {
            TokKind::Ident(s) => s.clone(),
            TokKind::Punct("++") | TokKind::Punct("--") => {
                let no = self.number(tok.line);
                self.pos += 1;
                let target = self.lvalue()?;
                self.expect(";")?;
                let delta = if tok.kind == TokKind::Punct("++") { 1 } else { -1 };
                out.push(Stmt { no, kind: StmtKind::IncDec { target, delta } });
                return Ok(());
            }
            TokKind::Punct("{") => return self.error("nested blocks are not supported; expected a statement"),
            _ => return self.error("expected a statement"),
        };
        if self.at_funcdef() {
            return self.error("function definitions are only allowed at the top level");
        }
        let no = self.number(tok.line);
        let kind = match kw.as_str() {
            "int" | "bool" => {
                let ty = self.base_type()?;
                let mut vars = Vec::new();
                loop {
                    vars.push(self.declarator()?);
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
                StmtKind::Decl { ty, vars }
            }
            "while" => {
                self.pos += 1;
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                StmtKind::While { cond, body: self.body()? }
            }
            "for" => self.for_stmt()?,
            "if" => {
                self.pos += 1;
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let body = self.body()?;
                out.push(Stmt { no, kind: StmtKind::If { cond, body } });
                if self.is_kw("else") {
                    let line = self.advance().line;
                    let else_no = self.number(line);
                    let body = self.body()?;
                    out.push(Stmt { no: else_no, kind: StmtKind::Else { body } });
                }
                return Ok(());
            }
            "else" => return self.error("`else` without a preceding `if`"),
            "print" => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    if let TokKind::Str(s) = &self.peek().kind {
                        items.push(PrintItem::Str(s.clone()));
                        self.pos += 1;
                    } else {
                        items.push(PrintItem::Expr(self.expr()?));
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
                StmtKind::Print { items }
            }
            "read" => {
                self.pos += 1;
                let target = self.lvalue()?;
                self.expect(";")?;
                StmtKind::Read { target }
            }
            "return" => {
                self.pos += 1;
                let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
                self.expect(";")?;
                StmtKind::Return { value }
            }
            _ if is_keyword(&kw) => return self.error("expected a statement"),
            _ => {
                if *self.peek_at(1) == TokKind::Punct("(") {
                    let name = self.ident()?;
                    self.pos += 1;
                    let args = self.args()?;
                    self.expect(";")?;
                    StmtKind::Call { name, args }
                } else {
                    let target = self.lvalue()?;
                    let kind = if self.eat("++") {
                        StmtKind::IncDec { target, delta: 1 }
                    } else if self.eat("--") {
                        StmtKind::IncDec { target, delta: -1 }
                    } else {
                        self.expect("=")?;
                        StmtKind::Assign { target, value: self.expr()? }
                    };
                    self.expect(";")?;
                    kind
                }
            }
        };
        out.push(Stmt { no, kind });
        Ok(())
    }

    fn declarator(&mut self) -> PResult<Declarator> {
        let name = self.ident()?;
        let shape = if self.eat("[") {
            if self.eat("]") {
                Shape::List(None)
            } else {
                let size = self.expr()?;
                self.expect("]")?;
                Shape::List(Some(size))
            }
        } else {
            Shape::Scalar
        };
        let init = if self.eat("=") { Some(self.expr()?) } else { None };
        Ok(Declarator { name, shape, init })
    }

    fn for_stmt(&mut self) -> PResult<StmtKind> {
        self.pos += 1;
        self.expect("(")?;
        let init = if self.is_punct(";") {
            None
        } else {
            let declares = if self.is_kw("int") {
                self.pos += 1;
                true
            } else {
                false
            };
            let var = self.ident()?;
            self.expect("=")?;
            Some(ForInit { declares, var, value: self.expr()? })
        };
        self.expect(";")?;
        let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
        self.expect(";")?;
        let step = if self.is_punct(")") {
            None
        } else if self.is_punct("++") || self.is_punct("--") {
            let delta = if self.advance().kind == TokKind::Punct("++") { 1 } else { -1 };
            Some(ForStep::IncDec(self.lvalue()?, delta))
        } else {
            let target = self.lvalue()?;
            if self.eat("++") {
                Some(ForStep::IncDec(target, 1))
            } else if self.eat("--") {
                Some(ForStep::IncDec(target, -1))
            } else {
                self.expect("=")?;
                Some(ForStep::Assign(target, self.expr()?))
            }
        };
        self.expect(")")?;
        Ok(StmtKind::For { init, cond, step, body: self.body()? })
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        let name = self.ident()?;
        let index = if self.eat("[") {
            let e = self.expr()?;
            self.expect("]")?;
            Some(e)
        } else {
            None
        };
        Ok(LValue { name, index })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = match &self.peek().kind {
            TokKind::Punct(p) => BinOp::from_symbol(p).filter(|op| op.precedence() > min_prec),
            _ => None,
        } {
            self.pos += 1;
            let rhs = self.binary(op.precedence())?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat("-") {
            return Ok(Expr::Un(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat("!") {
            return Ok(Expr::Un(UnOp::Not, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        match tok.kind {
            TokKind::Int(v) => {
                self.pos += 1;
                Ok(Expr::Int(v))
            }
            TokKind::Ident(ref s) if s == "true" || s == "false" => {
                self.pos += 1;
                Ok(Expr::Bool(s == "true"))
            }
            TokKind::Ident(_) => {
                let name = self.ident()?;
                if self.eat("(") {
                    Ok(Expr::Call(name, self.args()?))
                } else if self.eat("[") {
                    let idx = self.expr()?;
                    self.expect("]")?;
                    Ok(Expr::Index(name, Box::new(idx)))
                } else if self.eat(".") {
                    if self.is_kw("length") {
                        self.pos += 1;
                        Ok(Expr::Len(name))
                    } else {
                        self.error("expected `length`")
                    }
                } else {
                    Ok(Expr::Var(name))
                }
            }
            TokKind::Punct("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => self.error("expected an expression"),
        }
    }
}

const KEYWORDS: [&str; 13] =
    ["int", "bool", "void", "while", "for", "if", "else", "print", "read", "return", "true", "false", "length"];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Without a user-defined `swap`, `swap(x, y)` is the builtin exchange and
/// needs exactly two assignable arguments.
fn check_builtin_swap(ast: &Ast, errors: &mut Vec<Diagnostic>) {
    let defined: BTreeSet<&str> = ast
        .items
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::FuncDef { name, .. } => Some(name.as_str()),
            _ => None,
        })
        .collect();
    if defined.contains("swap") {
        return;
    }
    ast.visit(&mut |s, _| {
        if let StmtKind::Call { name, args } = &s.kind {
            let assignable = |e: &Expr| matches!(e, Expr::Var(_) | Expr::Index(..));
            if name == "swap" && (args.len() != 2 || !args.iter().all(assignable)) {
                errors.push(Diagnostic::new(
                    s.no,
                    0,
                    format!("statement {}: builtin swap takes two variables or list elements", s.no),
                ));
            }
        }
    });
}
