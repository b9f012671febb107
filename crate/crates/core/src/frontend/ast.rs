//! MiniLang syntax tree.
//!
//! Every statement, including block headers and `else` branches, carries a
//! statement number. Numbers are strictly increasing in source order.

use serde::{Deserialize, Serialize};

use crate::term::{BinOp, UnOp};

pub type StmtNo = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseType {
    Int,
    Bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RetType {
    Void,
    Int,
    Bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Un(UnOp, Box<Expr>),
    Index(String, Box<Expr>),
    Len(String),
    Call(String, Vec<Expr>),
}

/// Assignment target: a variable or one element of a list variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LValue {
    pub name: String,
    pub index: Option<Expr>,
}

impl LValue {
    pub fn var(name: &str) -> LValue {
        LValue { name: name.to_string(), index: None }
    }

    pub fn to_expr(&self) -> Expr {
        match &self.index {
            None => Expr::Var(self.name.clone()),
            Some(i) => Expr::Index(self.name.clone(), Box::new(i.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    /// `name[]` (empty, grows by assignment or `read`) or `name[size]`.
    List(Option<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declarator {
    pub name: String,
    pub shape: Shape,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub ty: BaseType,
    pub by_ref: bool,
    pub name: String,
    pub is_list: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForInit {
    pub declares: bool,
    pub var: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForStep {
    Assign(LValue, Expr),
    IncDec(LValue, i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrintItem {
    Expr(Expr),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    FuncDef {
        ret: RetType,
        name: String,
        params: Vec<Param>,
        body: Vec<Stmt>,
    },
    Decl {
        ty: BaseType,
        vars: Vec<Declarator>,
    },
    Assign {
        target: LValue,
        value: Expr,
    },
    /// `x++` / `x--` (delta is +1 or -1).
    IncDec {
        target: LValue,
        delta: i64,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        init: Option<ForInit>,
        cond: Option<Expr>,
        step: Option<ForStep>,
        body: Vec<Stmt>,
    },
    If {
        cond: Expr,
        body: Vec<Stmt>,
    },
    /// The `else` branch of the immediately preceding `If` sibling.
    Else {
        body: Vec<Stmt>,
    },
    Print {
        items: Vec<PrintItem>,
    },
    Read {
        target: LValue,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Return {
        value: Option<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub no: StmtNo,
    pub kind: StmtKind,
}

impl Stmt {
    pub fn body(&self) -> Option<&[Stmt]> {
        match &self.kind {
            StmtKind::FuncDef { body, .. }
            | StmtKind::While { body, .. }
            | StmtKind::For { body, .. }
            | StmtKind::If { body, .. }
            | StmtKind::Else { body } => Some(body),
            _ => None,
        }
    }
}

/// A parsed program; the root is the sequence of top-level statements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ast {
    pub name: String,
    pub items: Vec<Stmt>,
}

impl Ast {
    /// Depth-first, source-ordered visit of every statement with its
    /// container (`None` for the program root).
    pub fn visit(&self, f: &mut dyn FnMut(&Stmt, Option<StmtNo>)) {
        fn go(stmts: &[Stmt], parent: Option<StmtNo>, f: &mut dyn FnMut(&Stmt, Option<StmtNo>)) {
            for s in stmts {
                f(s, parent);
                if let Some(body) = s.body() {
                    go(body, Some(s.no), f);
                }
            }
        }
        go(&self.items, None, f);
    }

    pub fn statement_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, _| n += 1);
        n
    }

    pub fn function(&self, name: &str) -> Option<&Stmt> {
        self.items.iter().find(|s| matches!(&s.kind, StmtKind::FuncDef { name: n, .. } if n == name))
    }
}
