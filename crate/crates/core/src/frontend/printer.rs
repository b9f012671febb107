//! Source printer. Output re-parses to a structurally identical [`Ast`],
//! statement numbers included: each statement header is placed on the line
//! equal to its number, and closing braces share the line of the last
//! statement in their block.

use super::ast::*;
use crate::term::UnOp;

pub fn print_ast(ast: &Ast) -> String {
    let mut p = Printer { out: String::new(), line: 1, line_has_content: false };
    for s in &ast.items {
        p.stmt(s, 0);
    }
    if !p.out.ends_with('\n') {
        p.out.push('\n');
    }
    p.out
}

struct Printer {
    out: String,
    line: u32,
    line_has_content: bool,
}

impl Printer {
    fn newline(&mut self) {
        self.out.push('\n');
        self.line += 1;
        self.line_has_content = false;
    }

    fn start_stmt(&mut self, no: StmtNo, depth: usize) {
        if self.line_has_content {
            self.newline();
        }
        while self.line < no {
            self.newline();
        }
        self.out.push_str(&"    ".repeat(depth));
        self.line_has_content = true;
    }

    fn block(&mut self, body: &[Stmt], depth: usize) {
        self.out.push_str(" {");
        for s in body {
            self.stmt(s, depth + 1);
        }
        self.out.push_str(" }");
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) {
        self.start_stmt(s.no, depth);
        match &s.kind {
            StmtKind::FuncDef { ret, name, params, body } => {
                let ret = match ret {
                    RetType::Void => "void",
                    RetType::Int => "int",
                    RetType::Bool => "bool",
                };
                let params: Vec<String> = params
                    .iter()
                    .map(|p| {
                        format!(
                            "{}{} {}{}",
                            type_name(p.ty),
                            if p.by_ref { "&" } else { "" },
                            p.name,
                            if p.is_list { "[]" } else { "" }
                        )
                    })
                    .collect();
                self.out.push_str(&format!("{ret} {name}({})", params.join(", ")));
                self.block(body, depth);
            }
            StmtKind::Decl { ty, vars } => {
                let vars: Vec<String> = vars
                    .iter()
                    .map(|d| {
                        let mut s = d.name.clone();
                        match &d.shape {
                            Shape::Scalar => {}
                            Shape::List(None) => s.push_str("[]"),
                            Shape::List(Some(e)) => s.push_str(&format!("[{}]", expr(e))),
                        }
                        if let Some(init) = &d.init {
                            s.push_str(&format!(" = {}", expr(init)));
                        }
                        s
                    })
                    .collect();
                self.out.push_str(&format!("{} {};", type_name(*ty), vars.join(", ")));
            }
            StmtKind::Assign { target, value } => {
                self.out.push_str(&format!("{} = {};", lvalue(target), expr(value)));
            }
            StmtKind::IncDec { target, delta } => {
                self.out.push_str(&format!("{}{};", lvalue(target), if *delta > 0 { "++" } else { "--" }));
            }
            StmtKind::While { cond, body } => {
                self.out.push_str(&format!("while ({})", expr(cond)));
                self.block(body, depth);
            }
            StmtKind::For { init, cond, step, body } => {
                let init = init
                    .as_ref()
                    .map(|i| format!("{}{} = {}", if i.declares { "int " } else { "" }, i.var, expr(&i.value)))
                    .unwrap_or_default();
                let cond = cond.as_ref().map(expr).unwrap_or_default();
                let step = match step {
                    None => String::new(),
                    Some(ForStep::Assign(t, v)) => format!("{} = {}", lvalue(t), expr(v)),
                    Some(ForStep::IncDec(t, d)) => format!("{}{}", lvalue(t), if *d > 0 { "++" } else { "--" }),
                };
                self.out.push_str(&format!("for ({init}; {cond}; {step})"));
                self.block(body, depth);
            }
            StmtKind::If { cond, body } => {
                self.out.push_str(&format!("if ({})", expr(cond)));
                self.block(body, depth);
            }
            StmtKind::Else { body } => {
                self.out.push_str("else");
                self.block(body, depth);
            }
            StmtKind::Print { items } => {
                let items: Vec<String> = items
                    .iter()
                    .map(|i| match i {
                        PrintItem::Expr(e) => expr(e),
                        PrintItem::Str(s) => format!("{s:?}"),
                    })
                    .collect();
                self.out.push_str(&format!("print {};", items.join(", ")));
            }
            StmtKind::Read { target } => self.out.push_str(&format!("read {};", lvalue(target))),
            StmtKind::Call { name, args } => {
                let args: Vec<String> = args.iter().map(expr).collect();
                self.out.push_str(&format!("{name}({});", args.join(", ")));
            }
            StmtKind::Return { value } => match value {
                Some(v) => self.out.push_str(&format!("return {};", expr(v))),
                None => self.out.push_str("return;"),
            },
        }
    }
}

fn type_name(t: BaseType) -> &'static str {
    match t {
        BaseType::Int => "int",
        BaseType::Bool => "bool",
    }
}

fn lvalue(l: &LValue) -> String {
    match &l.index {
        None => l.name.clone(),
        Some(i) => format!("{}[{}]", l.name, expr(i)),
    }
}

const UNARY_PREC: u8 = 7;
const ATOM_PREC: u8 = 9;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(op, ..) => op.precedence(),
        Expr::Un(..) => UNARY_PREC,
        _ => ATOM_PREC,
    }
}

/// Render an expression with the minimal parentheses that preserve its tree.
pub fn expr(e: &Expr) -> String {
    fn wrap(e: &Expr, parens: bool) -> String {
        if parens {
            format!("({})", expr(e))
        } else {
            expr(e)
        }
    }
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Var(v) => v.clone(),
        Expr::Bin(op, l, r) => {
            let p = op.precedence();
            format!("{} {} {}", wrap(l, prec(l) < p), op.symbol(), wrap(r, prec(r) <= p))
        }
        Expr::Un(op, x) => {
            let sym = if *op == UnOp::Neg { "-" } else { "!" };
            format!("{sym}{}", wrap(x, prec(x) <= UNARY_PREC))
        }
        Expr::Index(n, i) => format!("{n}[{}]", expr(i)),
        Expr::Len(n) => format!("{n}.length"),
        Expr::Call(n, args) => {
            let args: Vec<String> = args.iter().map(expr).collect();
            format!("{n}({})", args.join(", "))
        }
    }
}
