//! Abstract statements: the declaration and computational tuples extracted
//! from a numbered [`Ast`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::FrontendError;
use crate::term::{BinOp, Term, UnOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarClass {
    Scalar,
    Boolean,
    List,
}

impl VarClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VarClass::Scalar => "scalar",
            VarClass::Boolean => "boolean",
            VarClass::List => "list",
        }
    }
}

/// The closed set of executable statement kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExecKind {
    Assign,
    Increment,
    Decrement,
    WhileLoop,
    ForLoop,
    Decide,
    Print,
    Read,
    Call,
    FuncDef,
    SwapCall,
    Return,
}

impl ExecKind {
    pub const ALL: [ExecKind; 12] = [
        ExecKind::Assign,
        ExecKind::Increment,
        ExecKind::Decrement,
        ExecKind::WhileLoop,
        ExecKind::ForLoop,
        ExecKind::Decide,
        ExecKind::Print,
        ExecKind::Read,
        ExecKind::Call,
        ExecKind::FuncDef,
        ExecKind::SwapCall,
        ExecKind::Return,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExecKind::Assign => "assign",
            ExecKind::Increment => "increment",
            ExecKind::Decrement => "decrement",
            ExecKind::WhileLoop => "whileLoop",
            ExecKind::ForLoop => "forLoop",
            ExecKind::Decide => "decide",
            ExecKind::Print => "print",
            ExecKind::Read => "read",
            ExecKind::Call => "call",
            ExecKind::FuncDef => "funcDef",
            ExecKind::SwapCall => "swapCall",
            ExecKind::Return => "return",
        }
    }
}

impl fmt::Display for ExecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredVar {
    pub name: String,
    pub class: VarClass,
    pub init: Option<Term>,
}

/// `[N, V, T, C]` for declarations, `<N, E, P, C>` for everything else.
/// A container of `None` is the program root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbstractStatement {
    Declaration { n: StmtNo, vars: Vec<DeclaredVar>, c: Option<StmtNo> },
    Computational { n: StmtNo, e: ExecKind, p: Vec<Term>, c: Option<StmtNo> },
}

impl AbstractStatement {
    pub fn number(&self) -> StmtNo {
        match self {
            AbstractStatement::Declaration { n, .. } | AbstractStatement::Computational { n, .. } => *n,
        }
    }

    pub fn container(&self) -> Option<StmtNo> {
        match self {
            AbstractStatement::Declaration { c, .. } | AbstractStatement::Computational { c, .. } => *c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AbstractProgram {
    /// Ordered by statement number.
    pub statements: Vec<AbstractStatement>,
    pub precedence: BTreeSet<(StmtNo, StmtNo)>,
}

impl AbstractProgram {
    pub fn get(&self, n: StmtNo) -> Option<&AbstractStatement> {
        self.statements.binary_search_by_key(&n, AbstractStatement::number).ok().map(|i| &self.statements[i])
    }

    /// Check the structural invariants: unique numbers, containers that
    /// exist, precedence only between distinct siblings and acyclic.
    pub fn check(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for s in &self.statements {
            if !seen.insert(s.number()) {
                return Err(format!("duplicate statement number {}", s.number()));
            }
        }
        for s in &self.statements {
            if let Some(c) = s.container() {
                if !seen.contains(&c) || c == s.number() {
                    return Err(format!("statement {} has unknown container {c}", s.number()));
                }
            }
        }
        let mut succ: BTreeMap<StmtNo, Vec<StmtNo>> = BTreeMap::new();
        for &(a, b) in &self.precedence {
            let (Some(sa), Some(sb)) = (self.get(a), self.get(b)) else {
                return Err(format!("precedence {a} < {b} names an unknown statement"));
            };
            if a == b || sa.container() != sb.container() {
                return Err(format!("precedence {a} < {b} is not between distinct siblings"));
            }
            succ.entry(a).or_default().push(b);
        }
        // Kahn's algorithm over the precedence relation.
        let mut indeg: BTreeMap<StmtNo, usize> = seen.iter().map(|&n| (n, 0)).collect();
        for &(_, b) in &self.precedence {
            *indeg.get_mut(&b).unwrap() += 1;
        }
        let mut ready: Vec<StmtNo> = indeg.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
        let mut visited = 0;
        while let Some(n) = ready.pop() {
            visited += 1;
            for m in succ.get(&n).into_iter().flatten() {
                let d = indeg.get_mut(m).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(*m);
                }
            }
        }
        if visited != seen.len() {
            return Err("precedence relation is cyclic".into());
        }
        Ok(())
    }
}

/// Convert a parsed program into abstract statements and the precedence
/// relation between consecutive statements of each block.
pub fn extract_concepts(ast: &Ast) -> Result<AbstractProgram, FrontendError> {
    let user_functions: BTreeSet<&str> = ast
        .items
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::FuncDef { name, .. } => Some(name.as_str()),
            _ => None,
        })
        .collect();
    let mut out = AbstractProgram::default();
    extract_block(&ast.items, None, &user_functions, &mut out)?;
    out.statements.sort_by_key(AbstractStatement::number);
    Ok(out)
}

fn extract_block(
    stmts: &[Stmt],
    container: Option<StmtNo>,
    user_functions: &BTreeSet<&str>,
    out: &mut AbstractProgram,
) -> Result<(), FrontendError> {
    for (i, s) in stmts.iter().enumerate() {
        if i > 0 {
            out.precedence.insert((stmts[i - 1].no, s.no));
        }
        let prev_if = i.checked_sub(1).and_then(|j| match &stmts[j].kind {
            StmtKind::If { cond, .. } => Some(cond),
            _ => None,
        });
        out.statements.push(abstract_statement(s, container, prev_if, user_functions)?);
        if let Some(body) = s.body() {
            extract_block(body, Some(s.no), user_functions, out)?;
        }
    }
    Ok(())
}

fn abstract_statement(
    s: &Stmt,
    c: Option<StmtNo>,
    prev_if: Option<&Expr>,
    user_functions: &BTreeSet<&str>,
) -> Result<AbstractStatement, FrontendError> {
    let n = s.no;
    let comp = |e: ExecKind, p: Vec<Term>| Ok(AbstractStatement::Computational { n, e, p, c });
    match &s.kind {
        StmtKind::Decl { ty, vars } => {
            let vars = vars
                .iter()
                .map(|d| DeclaredVar {
                    name: d.name.clone(),
                    class: match (&d.shape, ty) {
                        (Shape::List(_), _) => VarClass::List,
                        (Shape::Scalar, BaseType::Bool) => VarClass::Boolean,
                        (Shape::Scalar, BaseType::Int) => VarClass::Scalar,
                    },
                    init: d.init.as_ref().map(expr_term),
                })
                .collect();
            Ok(AbstractStatement::Declaration { n, vars, c })
        }
        StmtKind::Assign { target, value } => {
            let target_t = lvalue_term(target);
            let value_t = expr_term(value);
            let kind = update_kind(&target_t, &value_t).unwrap_or(ExecKind::Assign);
            comp(kind, vec![target_t, value_t])
        }
        StmtKind::IncDec { target, delta } => {
            let (kind, target_t, value_t) = incdec(target, *delta);
            comp(kind, vec![target_t, value_t])
        }
        StmtKind::While { cond, .. } => comp(ExecKind::WhileLoop, vec![Term::tag("cond", vec![expr_term(cond)])]),
        StmtKind::For { init, cond, step, .. } => {
            let init = match init {
                Some(i) => Term::tag("init", vec![Term::var(&i.var), expr_term(&i.value)]),
                None => Term::tag("none", vec![]),
            };
            let cond = Term::tag("cond", vec![cond.as_ref().map(expr_term).unwrap_or(Term::Bool(true))]);
            let step = match step {
                Some(ForStep::Assign(t, v)) => Term::tag("step", vec![lvalue_term(t), expr_term(v)]),
                Some(ForStep::IncDec(t, d)) => {
                    let (_, t, v) = incdec(t, *d);
                    Term::tag("step", vec![t, v])
                }
                None => Term::tag("none", vec![]),
            };
            comp(ExecKind::ForLoop, vec![init, cond, step])
        }
        StmtKind::If { cond, .. } => comp(ExecKind::Decide, vec![Term::tag("cond", vec![expr_term(cond)])]),
        StmtKind::Else { .. } => match prev_if {
            Some(cond) => {
                let negated = Term::Un(UnOp::Not, Box::new(expr_term(cond))).normalize();
                comp(ExecKind::Decide, vec![Term::tag("cond", vec![negated])])
            }
            None => Err(FrontendError::UnsupportedConstruct { construct: "else without if".into(), stmt_no: n }),
        },
        StmtKind::Print { items } => comp(
            ExecKind::Print,
            items
                .iter()
                .map(|i| match i {
                    PrintItem::Expr(e) => expr_term(e),
                    PrintItem::Str(s) => Term::Sym(s.clone()),
                })
                .collect(),
        ),
        StmtKind::Read { target } => comp(ExecKind::Read, vec![lvalue_term(target)]),
        StmtKind::Call { name, args } => {
            let args: Vec<Term> = args.iter().map(expr_term).collect();
            if name == "swap" && !user_functions.contains("swap") {
                comp(ExecKind::SwapCall, args)
            } else {
                let mut p = vec![Term::Sym(name.clone())];
                p.extend(args);
                comp(ExecKind::Call, p)
            }
        }
        StmtKind::FuncDef { name, params, .. } => {
            let mut p = vec![Term::Sym(name.clone())];
            p.extend(
                params.iter().map(|prm| Term::tag(if prm.by_ref { "ref" } else { "val" }, vec![Term::var(&prm.name)])),
            );
            comp(ExecKind::FuncDef, p)
        }
        StmtKind::Return { value } => comp(ExecKind::Return, value.iter().map(expr_term).collect()),
    }
}

fn incdec(target: &LValue, delta: i64) -> (ExecKind, Term, Term) {
    let t = lvalue_term(target);
    let v = Term::bin(BinOp::Add, t.clone(), Term::Int(delta)).normalize();
    let kind = if delta > 0 { ExecKind::Increment } else { ExecKind::Decrement };
    (kind, t, v)
}

/// `v := v + c` is an increment and `v := v - c` a decrement, for a
/// positive constant `c`.
fn update_kind(target: &Term, value: &Term) -> Option<ExecKind> {
    match value {
        Term::Bin(BinOp::Add, l, r) if **l == *target && matches!(**r, Term::Int(c) if c > 0) => {
            Some(ExecKind::Increment)
        }
        Term::Bin(BinOp::Sub, l, r) if **l == *target && matches!(**r, Term::Int(c) if c > 0) => {
            Some(ExecKind::Decrement)
        }
        _ => None,
    }
}

fn lvalue_term(l: &LValue) -> Term {
    expr_term(&l.to_expr())
}

/// Normalized parameter term for a source expression.
pub fn expr_term(e: &Expr) -> Term {
    raw_term(e).normalize()
}

fn raw_term(e: &Expr) -> Term {
    match e {
        Expr::Int(v) => Term::Int(*v),
        Expr::Bool(b) => Term::Bool(*b),
        Expr::Var(v) => Term::Var(v.clone()),
        Expr::Bin(op, l, r) => Term::bin(*op, raw_term(l), raw_term(r)),
        Expr::Un(op, x) => Term::Un(*op, Box::new(raw_term(x))),
        Expr::Index(n, i) => Term::Index(Box::new(Term::Var(n.clone())), Box::new(raw_term(i))),
        Expr::Len(n) => Term::Len(Box::new(Term::Var(n.clone()))),
        Expr::Call(n, args) => Term::Call(n.clone(), args.iter().map(raw_term).collect()),
    }
}

/// Every declared variable with its class. Redeclaring a name inside the
/// same container is an error.
pub fn list_variables(ap: &AbstractProgram) -> Result<BTreeSet<(String, VarClass)>, FrontendError> {
    let mut scopes: BTreeMap<Option<StmtNo>, BTreeSet<&str>> = BTreeMap::new();
    let mut out = BTreeSet::new();
    for s in &ap.statements {
        if let AbstractStatement::Declaration { n, vars, c } = s {
            let scope = scopes.entry(*c).or_default();
            for v in vars {
                if !scope.insert(&v.name) {
                    return Err(FrontendError::DuplicateDeclaration { name: v.name.clone(), stmt_no: *n });
                }
                out.insert((v.name.clone(), v.class));
            }
        }
    }
    Ok(out)
}
