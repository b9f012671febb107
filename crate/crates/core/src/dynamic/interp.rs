use std::collections::BTreeMap;

use crate::frontend::ast::*;
use crate::frontend::StmtNo;
use crate::term::{BinOp, UnOp};

use super::{ErrorKind, ExecutionTrace, Outcome, Scalar, TestCase, Value};

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;
pub const MAX_CALL_DEPTH: usize = 256;

/// Run `ast` on one test case. Top-level statements execute first, then
/// `main()` if the program defines it.
pub fn interpret(ast: &Ast, test: &TestCase, step_limit: u64) -> ExecutionTrace {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(INTERPRETER_STACK)
            .spawn_scoped(s, || run_machine(ast, test, step_limit))
            .expect("spawning the interpreter thread")
            .join()
            .expect("interpreter thread panicked")
    })
}

const INTERPRETER_STACK: usize = 256 << 20;

fn run_machine(ast: &Ast, test: &TestCase, step_limit: u64) -> ExecutionTrace {
    let mut m = Machine {
        ast,
        test,
        stdin_pos: 0,
        cells: Vec::new(),
        globals: BTreeMap::new(),
        frames: Vec::new(),
        stdout: Vec::new(),
        steps: 0,
        limit: step_limit,
        main_store: None,
        has_swap_fn: ast.function("swap").is_some(),
    };
    let outcome = match m.run() {
        Ok(()) => Outcome::Completed,
        Err(Stop::StepLimit) => Outcome::StepLimit,
        Err(Stop::Error(kind, stmt_no)) => Outcome::RuntimeError { kind, stmt_no },
        Err(Stop::Return(_)) => Outcome::Completed,
    };
    let final_store = m.snapshot();
    ExecutionTrace { stdout: m.stdout, final_store, steps: m.steps, outcome }
}

enum Stop {
    StepLimit,
    Error(ErrorKind, StmtNo),
    Return(Option<Scalar>),
}

type Exec<T> = Result<T, Stop>;

#[derive(Debug, Clone)]
struct Cell {
    ty: BaseType,
    value: Option<Value>,
}

#[derive(Debug, Clone, Copy)]
enum Loc {
    Cell(usize),
    Elem(usize, usize),
}

struct Frame {
    scopes: Vec<BTreeMap<String, usize>>,
    is_main: bool,
}

struct Machine<'a> {
    ast: &'a Ast,
    test: &'a TestCase,
    stdin_pos: usize,
    cells: Vec<Cell>,
    globals: BTreeMap<String, usize>,
    frames: Vec<Frame>,
    stdout: Vec<String>,
    steps: u64,
    limit: u64,
    main_store: Option<BTreeMap<String, usize>>,
    has_swap_fn: bool,
}

impl<'a> Machine<'a> {
    fn run(&mut self) -> Exec<()> {
        self.stmts(&self.ast.items)?;
        if let Some(main) = self.ast.function("main") {
            if let StmtKind::FuncDef { params, .. } = &main.kind {
                if !params.is_empty() {
                    return Err(Stop::Error(ErrorKind::ArityMismatch, main.no));
                }
            }
            self.call("main", &[], main.no, false)?;
        }
        Ok(())
    }

    fn snapshot(&self) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        let scopes = self.main_store.iter().chain(std::iter::once(&self.globals));
        for scope in scopes {
            for (name, &idx) in scope {
                if out.contains_key(name) {
                    continue;
                }
                if let Some(v) = &self.cells[idx].value {
                    out.insert(name.clone(), v.clone());
                }
            }
        }
        out
    }

    fn tick(&mut self) -> Exec<()> {
        if self.steps >= self.limit {
            return Err(Stop::StepLimit);
        }
        self.steps += 1;
        Ok(())
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        if let Some(f) = self.frames.last() {
            for scope in f.scopes.iter().rev() {
                if let Some(&i) = scope.get(name) {
                    return Some(i);
                }
            }
        }
        self.globals.get(name).copied()
    }

    fn declare(&mut self, name: &str, cell: Cell) -> usize {
        self.cells.push(cell);
        let idx = self.cells.len() - 1;
        match self.frames.last_mut() {
            Some(f) => {
                f.scopes.last_mut().expect("frames always hold a scope").insert(name.to_string(), idx);
            }
            None => {
                self.globals.insert(name.to_string(), idx);
            }
        }
        idx
    }

    fn at_input_scope(&self) -> bool {
        match self.frames.last() {
            None => true,
            Some(f) => f.is_main && f.scopes.len() == 1,
        }
    }

    fn block(&mut self, body: &'a [Stmt]) -> Exec<()> {
        if let Some(f) = self.frames.last_mut() {
            f.scopes.push(BTreeMap::new());
        }
        let r = self.stmts(body);
        if let Some(f) = self.frames.last_mut() {
            f.scopes.pop();
        }
        r
    }

    fn stmts(&mut self, body: &'a [Stmt]) -> Exec<()> {
        let mut i = 0;
        while i < body.len() {
            let s = &body[i];
            if let StmtKind::If { cond, body: then } = &s.kind {
                self.tick()?;
                let c = self.eval_bool(cond, s.no)?;
                let else_branch = body.get(i + 1).filter(|n| matches!(n.kind, StmtKind::Else { .. }));
                if c {
                    self.block(then)?;
                } else if let Some(e) = else_branch {
                    self.tick()?;
                    self.block(e.body().unwrap_or(&[]))?;
                }
                i += if else_branch.is_some() { 2 } else { 1 };
                continue;
            }
            self.stmt(s)?;
            i += 1;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &'a Stmt) -> Exec<()> {
        let no = s.no;
        match &s.kind {
            StmtKind::FuncDef { .. } => Ok(()),
            StmtKind::Decl { ty, vars } => {
                self.tick()?;
                for d in vars {
                    let value = match (&d.shape, &d.init) {
                        (Shape::Scalar, Some(e)) => Some(Value::Scalar(self.eval_typed(e, *ty, no)?)),
                        (Shape::Scalar, None) => None,
                        (Shape::List(size), _) => {
                            let n = match size {
                                Some(e) => {
                                    let n = self.eval_int(e, no)?;
                                    if !(0..=1_000_000).contains(&n) {
                                        return Err(Stop::Error(ErrorKind::IndexOutOfBounds, no));
                                    }
                                    n as usize
                                }
                                None => 0,
                            };
                            Some(Value::List(vec![None; n]))
                        }
                    };
                    let value = match value {
                        None if self.at_input_scope() => self.input_binding(&d.name, *ty, false),
                        Some(Value::List(l)) if l.is_empty() && self.at_input_scope() => {
                            self.input_binding(&d.name, *ty, true).or(Some(Value::List(l)))
                        }
                        v => v,
                    };
                    self.declare(&d.name, Cell { ty: *ty, value });
                }
                Ok(())
            }
            StmtKind::Assign { target, value } => {
                self.tick()?;
                let loc = self.locate(target, no, true)?;
                let ty = self.cells[loc_cell(loc)].ty;
                let v = self.eval_typed(value, ty, no)?;
                self.store(loc, v, no)
            }
            StmtKind::IncDec { target, delta } => {
                self.tick()?;
                let loc = self.locate(target, no, false)?;
                let cur = self.load(loc, no)?;
                let Scalar::Int(v) = cur else {
                    return Err(Stop::Error(ErrorKind::TypeMismatch, no));
                };
                let nv = v.checked_add(*delta).ok_or(Stop::Error(ErrorKind::Overflow, no))?;
                self.store(loc, Scalar::Int(nv), no)
            }
            StmtKind::While { cond, body } => loop {
                self.tick()?;
                if !self.eval_bool(cond, no)? {
                    return Ok(());
                }
                self.block(body)?;
            },
            StmtKind::For { init, cond, step, body } => {
                if let Some(f) = self.frames.last_mut() {
                    f.scopes.push(BTreeMap::new());
                }
                let r = self.for_loop(no, init.as_ref(), cond.as_ref(), step.as_ref(), body);
                if let Some(f) = self.frames.last_mut() {
                    f.scopes.pop();
                }
                r
            }
            StmtKind::If { cond, body } => {
                self.tick()?;
                if self.eval_bool(cond, no)? {
                    self.block(body)?;
                }
                Ok(())
            }
            StmtKind::Else { body } => {
                self.tick()?;
                self.block(body)
            }
            StmtKind::Print { items } => {
                self.tick()?;
                for item in items {
                    let tok = match item {
                        PrintItem::Str(s) => s.clone(),
                        PrintItem::Expr(Expr::Var(v)) if self.is_list(v) => {
                            let idx = self.lookup(v).ok_or(Stop::Error(ErrorKind::Undeclared, no))?;
                            match &self.cells[idx].value {
                                Some(list @ Value::List(_)) => {
                                    render(list).ok_or(Stop::Error(ErrorKind::Uninitialized, no))?
                                }
                                _ => return Err(Stop::Error(ErrorKind::Uninitialized, no)),
                            }
                        }
                        PrintItem::Expr(e) => self.eval(e, no)?.to_string(),
                    };
                    self.stdout.push(tok);
                }
                Ok(())
            }
            StmtKind::Read { target } => {
                self.tick()?;
                if target.index.is_none() && self.is_list(&target.name) {
                    let idx = self.lookup(&target.name).ok_or(Stop::Error(ErrorKind::Undeclared, no))?;
                    let n = self.next_input(no)?;
                    if !(0..=1_000_000).contains(&n) {
                        return Err(Stop::Error(ErrorKind::IndexOutOfBounds, no));
                    }
                    let ty = self.cells[idx].ty;
                    let mut items = Vec::with_capacity(n as usize);
                    for _ in 0..n {
                        let v = self.next_input(no)?;
                        items.push(Some(scalar_of(ty, v)));
                    }
                    self.cells[idx].value = Some(Value::List(items));
                    return Ok(());
                }
                let loc = self.locate(target, no, true)?;
                let ty = self.cells[loc_cell(loc)].ty;
                let v = self.next_input(no)?;
                self.store(loc, scalar_of(ty, v), no)
            }
            StmtKind::Call { name, args } => {
                self.tick()?;
                if name == "swap" && !self.has_swap_fn {
                    return self.builtin_swap(args, no);
                }
                self.call(name, args, no, false).map(|_| ())
            }
            StmtKind::Return { value } => {
                self.tick()?;
                let v = match value {
                    Some(e) => Some(self.eval(e, no)?),
                    None => None,
                };
                Err(Stop::Return(v))
            }
        }
    }

    fn for_loop(
        &mut self,
        no: StmtNo,
        init: Option<&ForInit>,
        cond: Option<&Expr>,
        step: Option<&ForStep>,
        body: &'a [Stmt],
    ) -> Exec<()> {
        if let Some(i) = init {
            let v = self.eval(&i.value, no)?;
            if i.declares {
                self.declare(&i.var, Cell { ty: BaseType::Int, value: Some(Value::Scalar(v)) });
            } else {
                let loc = self.locate(&LValue::var(&i.var), no, true)?;
                self.store(loc, v, no)?;
            }
        }
        loop {
            self.tick()?;
            if let Some(c) = cond {
                if !self.eval_bool(c, no)? {
                    return Ok(());
                }
            }
            self.block(body)?;
            match step {
                None => {}
                Some(ForStep::Assign(t, e)) => {
                    let loc = self.locate(t, no, true)?;
                    let ty = self.cells[loc_cell(loc)].ty;
                    let v = self.eval_typed(e, ty, no)?;
                    self.store(loc, v, no)?;
                }
                Some(ForStep::IncDec(t, d)) => {
                    let loc = self.locate(t, no, false)?;
                    let Scalar::Int(v) = self.load(loc, no)? else {
                        return Err(Stop::Error(ErrorKind::TypeMismatch, no));
                    };
                    let nv = v.checked_add(*d).ok_or(Stop::Error(ErrorKind::Overflow, no))?;
                    self.store(loc, Scalar::Int(nv), no)?;
                }
            }
        }
    }

    fn input_binding(&self, name: &str, ty: BaseType, list: bool) -> Option<Value> {
        let v = self.test.input_bindings.get(name)?;
        let ok = match v {
            Value::Scalar(s) => !list && s.base_type() == ty,
            Value::List(items) => list && items.iter().flatten().all(|s| s.base_type() == ty),
        };
        ok.then(|| v.clone())
    }

    fn next_input(&mut self, no: StmtNo) -> Exec<i64> {
        let v = self.test.stdin.get(self.stdin_pos).copied().ok_or(Stop::Error(ErrorKind::InputExhausted, no))?;
        self.stdin_pos += 1;
        Ok(v)
    }

    fn is_list(&self, name: &str) -> bool {
        self.lookup(name).is_some_and(|i| matches!(self.cells[i].value, Some(Value::List(_))))
    }

    fn builtin_swap(&mut self, args: &[Expr], no: StmtNo) -> Exec<()> {
        let lv = |e: &Expr| match e {
            Expr::Var(v) => Some(LValue::var(v)),
            Expr::Index(v, i) => Some(LValue { name: v.clone(), index: Some((**i).clone()) }),
            _ => None,
        };
        let (Some(a), Some(b)) = (args.first().and_then(lv), args.get(1).and_then(lv)) else {
            return Err(Stop::Error(ErrorKind::TypeMismatch, no));
        };
        let la = self.locate(&a, no, false)?;
        let lb = self.locate(&b, no, false)?;
        let va = self.load(la, no)?;
        let vb = self.load(lb, no)?;
        self.store(la, vb, no)?;
        self.store(lb, va, no)
    }

    /// Resolve an assignment target. With `extend`, assigning one past the
    /// end of a list appends to it.
    fn locate(&mut self, t: &LValue, no: StmtNo, extend: bool) -> Exec<Loc> {
        let idx = self.lookup(&t.name).ok_or(Stop::Error(ErrorKind::Undeclared, no))?;
        let Some(ie) = &t.index else {
            if matches!(self.cells[idx].value, Some(Value::List(_))) {
                return Err(Stop::Error(ErrorKind::TypeMismatch, no));
            }
            return Ok(Loc::Cell(idx));
        };
        let i = self.eval_int(ie, no)?;
        let Some(Value::List(items)) = &mut self.cells[idx].value else {
            return Err(Stop::Error(ErrorKind::TypeMismatch, no));
        };
        if i < 0 {
            return Err(Stop::Error(ErrorKind::IndexOutOfBounds, no));
        }
        let i = i as usize;
        if i == items.len() && extend {
            items.push(None);
        }
        if i >= items.len() {
            return Err(Stop::Error(ErrorKind::IndexOutOfBounds, no));
        }
        Ok(Loc::Elem(idx, i))
    }

    fn load(&self, loc: Loc, no: StmtNo) -> Exec<Scalar> {
        let v = match loc {
            Loc::Cell(c) => match &self.cells[c].value {
                Some(Value::Scalar(s)) => Some(*s),
                Some(Value::List(_)) => return Err(Stop::Error(ErrorKind::TypeMismatch, no)),
                None => None,
            },
            Loc::Elem(c, i) => match &self.cells[c].value {
                Some(Value::List(items)) => items.get(i).copied().flatten(),
                _ => None,
            },
        };
        v.ok_or(Stop::Error(ErrorKind::Uninitialized, no))
    }

    fn store(&mut self, loc: Loc, v: Scalar, no: StmtNo) -> Exec<()> {
        let cell = &mut self.cells[loc_cell(loc)];
        if v.base_type() != cell.ty {
            return Err(Stop::Error(ErrorKind::TypeMismatch, no));
        }
        match loc {
            Loc::Cell(_) => cell.value = Some(Value::Scalar(v)),
            Loc::Elem(_, i) => match &mut cell.value {
                Some(Value::List(items)) => items[i] = Some(v),
                _ => return Err(Stop::Error(ErrorKind::TypeMismatch, no)),
            },
        }
        Ok(())
    }

    fn call(&mut self, name: &str, args: &[Expr], no: StmtNo, need_value: bool) -> Exec<Option<Scalar>> {
        let Some(def) = self.ast.function(name) else {
            return Err(Stop::Error(ErrorKind::UnknownFunction, no));
        };
        let StmtKind::FuncDef { ret, params, body, .. } = &def.kind else { unreachable!() };
        if params.len() != args.len() {
            return Err(Stop::Error(ErrorKind::ArityMismatch, no));
        }
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(Stop::Error(ErrorKind::StackOverflow, no));
        }
        let mut bound = BTreeMap::new();
        for (p, a) in params.iter().zip(args) {
            let idx = if p.is_list || p.by_ref {
                let target = match a {
                    Expr::Var(v) => LValue::var(v),
                    Expr::Index(v, i) if !p.is_list => LValue { name: v.clone(), index: Some((**i).clone()) },
                    _ => return Err(Stop::Error(ErrorKind::TypeMismatch, no)),
                };
                let loc = if p.is_list {
                    Loc::Cell(self.lookup(&target.name).ok_or(Stop::Error(ErrorKind::Undeclared, no))?)
                } else {
                    self.locate(&target, no, false)?
                };
                match loc {
                    Loc::Cell(c) => {
                        let is_list = matches!(self.cells[c].value, Some(Value::List(_)));
                        if is_list != p.is_list || self.cells[c].ty != p.ty {
                            return Err(Stop::Error(ErrorKind::TypeMismatch, no));
                        }
                        c
                    }
                    Loc::Elem(..) => return Err(Stop::Error(ErrorKind::UnsupportedReference, no)),
                }
            } else {
                let v = self.eval_typed(a, p.ty, no)?;
                self.cells.push(Cell { ty: p.ty, value: Some(Value::Scalar(v)) });
                self.cells.len() - 1
            };
            bound.insert(p.name.clone(), idx);
        }
        let is_main = name == "main" && self.frames.is_empty();
        self.frames.push(Frame { scopes: vec![bound], is_main });
        let r = self.stmts(body);
        let frame = self.frames.pop().expect("pushed above");
        if is_main {
            self.main_store = frame.scopes.into_iter().next();
        }
        let value = match r {
            Ok(()) => None,
            Err(Stop::Return(v)) => v,
            Err(e) => return Err(e),
        };
        match (ret, value) {
            (RetType::Void, _) => Ok(None),
            (_, None) if need_value => Err(Stop::Error(ErrorKind::MissingReturn, no)),
            (RetType::Int, Some(v @ Scalar::Int(_))) | (RetType::Bool, Some(v @ Scalar::Bool(_))) => Ok(Some(v)),
            (_, None) => Ok(None),
            _ => Err(Stop::Error(ErrorKind::TypeMismatch, no)),
        }
    }

    fn eval_typed(&mut self, e: &Expr, ty: BaseType, no: StmtNo) -> Exec<Scalar> {
        let v = self.eval(e, no)?;
        if v.base_type() != ty {
            return Err(Stop::Error(ErrorKind::TypeMismatch, no));
        }
        Ok(v)
    }

    fn eval_int(&mut self, e: &Expr, no: StmtNo) -> Exec<i64> {
        match self.eval(e, no)? {
            Scalar::Int(v) => Ok(v),
            Scalar::Bool(_) => Err(Stop::Error(ErrorKind::TypeMismatch, no)),
        }
    }

    fn eval_bool(&mut self, e: &Expr, no: StmtNo) -> Exec<bool> {
        match self.eval(e, no)? {
            Scalar::Bool(b) => Ok(b),
            Scalar::Int(_) => Err(Stop::Error(ErrorKind::TypeMismatch, no)),
        }
    }

    fn eval(&mut self, e: &Expr, no: StmtNo) -> Exec<Scalar> {
        let err = |k| Stop::Error(k, no);
        Ok(match e {
            Expr::Int(v) => Scalar::Int(*v),
            Expr::Bool(b) => Scalar::Bool(*b),
            Expr::Var(v) => {
                let idx = self.lookup(v).ok_or(err(ErrorKind::Undeclared))?;
                self.load(Loc::Cell(idx), no)?
            }
            Expr::Index(v, i) => {
                let idx = self.lookup(v).ok_or(err(ErrorKind::Undeclared))?;
                let i = self.eval_int(i, no)?;
                match &self.cells[idx].value {
                    Some(Value::List(items)) => {
                        if i < 0 || i as usize >= items.len() {
                            return Err(err(ErrorKind::IndexOutOfBounds));
                        }
                        items[i as usize].ok_or(err(ErrorKind::Uninitialized))?
                    }
                    Some(Value::Scalar(_)) => return Err(err(ErrorKind::TypeMismatch)),
                    None => return Err(err(ErrorKind::Uninitialized)),
                }
            }
            Expr::Len(v) => {
                let idx = self.lookup(v).ok_or(err(ErrorKind::Undeclared))?;
                match &self.cells[idx].value {
                    Some(Value::List(items)) => Scalar::Int(items.len() as i64),
                    Some(Value::Scalar(_)) => return Err(err(ErrorKind::TypeMismatch)),
                    None => return Err(err(ErrorKind::Uninitialized)),
                }
            }
            Expr::Call(name, args) => {
                if name == "swap" && !self.has_swap_fn {
                    return Err(err(ErrorKind::TypeMismatch));
                }
                self.call(name, args, no, true)?.ok_or(err(ErrorKind::MissingReturn))?
            }
            Expr::Un(UnOp::Neg, x) => match self.eval(x, no)? {
                Scalar::Int(v) => Scalar::Int(v.checked_neg().ok_or(err(ErrorKind::Overflow))?),
                Scalar::Bool(_) => return Err(err(ErrorKind::TypeMismatch)),
            },
            Expr::Un(UnOp::Not, x) => Scalar::Bool(!self.eval_bool(x, no)?),
            Expr::Bin(BinOp::And, l, r) => Scalar::Bool(self.eval_bool(l, no)? && self.eval_bool(r, no)?),
            Expr::Bin(BinOp::Or, l, r) => Scalar::Bool(self.eval_bool(l, no)? || self.eval_bool(r, no)?),
            Expr::Bin(op, l, r) => {
                let a = self.eval(l, no)?;
                let b = self.eval(r, no)?;
                binop(*op, a, b).map_err(err)?
            }
        })
    }
}

fn loc_cell(l: Loc) -> usize {
    match l {
        Loc::Cell(c) | Loc::Elem(c, _) => c,
    }
}

fn scalar_of(ty: BaseType, v: i64) -> Scalar {
    match ty {
        BaseType::Int => Scalar::Int(v),
        BaseType::Bool => Scalar::Bool(v != 0),
    }
}

fn render(v: &Value) -> Option<String> {
    match v {
        Value::Scalar(s) => Some(s.to_string()),
        Value::List(items) => {
            let parts: Option<Vec<String>> = items.iter().map(|i| i.map(|s| s.to_string())).collect();
            Some(format!("[{}]", parts?.join(",")))
        }
    }
}

fn binop(op: BinOp, a: Scalar, b: Scalar) -> Result<Scalar, ErrorKind> {
    use Scalar::*;
    Ok(match (op, a, b) {
        (BinOp::Eq, x, y) if x.base_type() == y.base_type() => Bool(x == y),
        (BinOp::Ne, x, y) if x.base_type() == y.base_type() => Bool(x != y),
        (_, Int(x), Int(y)) => match op {
            BinOp::Add => Int(x.checked_add(y).ok_or(ErrorKind::Overflow)?),
            BinOp::Sub => Int(x.checked_sub(y).ok_or(ErrorKind::Overflow)?),
            BinOp::Mul => Int(x.checked_mul(y).ok_or(ErrorKind::Overflow)?),
            BinOp::Div | BinOp::Rem if y == 0 => return Err(ErrorKind::DivisionByZero),
            BinOp::Div => Int(x.checked_div(y).ok_or(ErrorKind::Overflow)?),
            BinOp::Rem => Int(x.checked_rem(y).ok_or(ErrorKind::Overflow)?),
            BinOp::Lt => Bool(x < y),
            BinOp::Le => Bool(x <= y),
            BinOp::Gt => Bool(x > y),
            BinOp::Ge => Bool(x >= y),
            _ => return Err(ErrorKind::TypeMismatch),
        },
        _ => return Err(ErrorKind::TypeMismatch),
    })
}
