#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use proptest::prelude::*;

use mindreader::cdg::{Cdg, ConceptNode, NodeId, NodeKind, ReplGroup};
use mindreader::frontend::{abstract_program, SourceProgram};
use mindreader::knowledgebase::Knowledgebase;
use mindreader::summarizer::{summarize_lfp, RuleSet, SummarizationTrace};
use mindreader::term::{BinOp, Term};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn corpus_path(name: &str) -> PathBuf {
    root().join("corpus").join(name)
}

pub fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap()
}

pub const CORPUS: [&str; 8] = [
    "swap_inline.ml1",
    "swap_function.ml1",
    "average_while.ml1",
    "average_for.ml1",
    "average_verbatim.ml1",
    "average_off_by_one.ml1",
    "bubble_sentinel.ml1",
    "bubble_q.ml1",
];

pub fn shipped_kb() -> Knowledgebase {
    Knowledgebase::load(&root().join("kb")).unwrap()
}

/// Copy of the shipped knowledgebase in a fresh temporary directory.
pub fn kb_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    shipped_kb().save(dir.path()).unwrap();
    dir
}

pub fn base_cdg(src: &str) -> Cdg {
    let (_, ap) = abstract_program(&SourceProgram::new("p", src)).unwrap();
    Cdg::from_abstract_program(&ap).unwrap()
}

pub fn fixpoint(src: &str, rules: &RuleSet) -> (Cdg, Cdg, SummarizationTrace) {
    let base = base_cdg(src);
    let (fx, trace) = summarize_lfp(&base, rules).unwrap();
    (base, fx, trace)
}

pub fn active_names(g: &Cdg) -> Vec<String> {
    g.active_nodes().map(|n| n.name.clone()).collect()
}

// ---- random MiniLang programs

const VARS: [&str; 6] = ["a", "b", "c", "i", "n", "s"];

fn arb_var() -> impl Strategy<Value = String> {
    prop::sample::select(&VARS[..]).prop_map(str::to_string)
}

fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![arb_var(), (0i64..20).prop_map(|v| v.to_string()), Just("xs[i]".to_string())];
    leaf.prop_recursive(2, 8, 2, |inner| {
        (inner.clone(), prop::sample::select(&["+", "-", "*"][..]), inner)
            .prop_map(|(a, op, b)| format!("({a} {op} {b})"))
    })
}

fn arb_cond() -> impl Strategy<Value = String> {
    (arb_var(), prop::sample::select(&["<", "<=", ">", ">=", "==", "!="][..]), arb_expr())
        .prop_map(|(a, op, b)| format!("{a} {op} {b}"))
}

fn arb_simple_stmt() -> impl Strategy<Value = String> {
    prop_oneof![
        (arb_var(), arb_expr()).prop_map(|(v, e)| format!("{v} = {e};")),
        arb_var().prop_map(|v| format!("{v}++;")),
        arb_var().prop_map(|v| format!("{v}--;")),
        arb_expr().prop_map(|e| format!("print {e};")),
        (arb_var(), arb_var()).prop_map(|(x, y)| format!("c = {x};\n{x} = {y};\n{y} = c;")),
        Just("s = s + xs[i];".to_string()),
        Just("read a;".to_string()),
    ]
}

/// A statement list, possibly with nested loops and branches.
pub fn arb_block() -> impl Strategy<Value = String> {
    let leaf = prop::collection::vec(arb_simple_stmt(), 1..4).prop_map(|v| v.join("\n"));
    leaf.prop_recursive(3, 24, 4, |inner| {
        let stmt = prop_oneof![
            3 => arb_simple_stmt(),
            1 => (arb_var(), arb_expr(), inner.clone())
                .prop_map(|(v, e, b)| format!("{v} = 0;\nwhile ({v} < {e}) {{\n{b}\n{v}++;\n}}")),
            1 => (arb_var(), arb_expr(), inner.clone())
                .prop_map(|(v, e, b)| format!("for ({v} = 0; {v} < {e}; {v}++) {{\n{b}\n}}")),
            1 => (arb_cond(), inner.clone()).prop_map(|(c, b)| format!("if ({c}) {{\n{b}\n}}")),
            1 => (arb_cond(), inner.clone(), inner.clone())
                .prop_map(|(c, b, e)| format!("if ({c}) {{\n{b}\n}} else {{\n{e}\n}}")),
            1 => (arb_var(), inner).prop_map(|(v, b)| format!("{v} = 0;\nwhile (!{v}) {{\n{b}\n}}")),
        ];
        prop::collection::vec(stmt, 1..4).prop_map(|v| v.join("\n"))
    })
}

pub fn arb_program() -> impl Strategy<Value = String> {
    arb_block().prop_map(|b| format!("void main() {{\nint a, b, c, i, n, s, xs[];\n{b}\n}}\n"))
}

// ---- random terms and graphs

pub fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        arb_var().prop_map(|v| Term::var(&v)),
        (-50i64..50).prop_map(Term::Int),
        any::<bool>().prop_map(Term::Bool),
        prop::sample::select(&["main", "swap", "Before"][..]).prop_map(|s| Term::Sym(s.to_string())),
    ];
    let t = leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (
                inner.clone(),
                prop::sample::select(&[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Lt, BinOp::Eq][..]),
                inner.clone()
            )
                .prop_map(|(a, op, b)| Term::bin(op, a, b)),
            (arb_var(), inner.clone()).prop_map(|(v, i)| Term::Index(Box::new(Term::var(&v)), Box::new(i))),
            arb_var().prop_map(|v| Term::Len(Box::new(Term::var(&v)))),
            (prop::sample::select(&["cond", "init", "step"][..]), prop::collection::vec(inner, 1..3))
                .prop_map(|(n, args)| Term::tag(n, args)),
        ]
    });
    t.prop_map(|t| t.normalize())
}

const NAMES: [&str; 8] = ["assign", "print", "whileLoop", "forLoop", "increment", "swap", "counterLoop", "aggregate"];

/// A valid CDG of up to `max` nodes. Membership and precedence point from
/// later to earlier nodes only, so both relations are acyclic.
pub fn arb_cdg(max: usize, with_repl: bool) -> impl Strategy<Value = Cdg> {
    (1..=max)
        .prop_flat_map(move |n| {
            let nodes = prop::collection::vec(
                (
                    prop::sample::select(&NAMES[..]),
                    any::<bool>(),
                    0u32..3,
                    prop::collection::vec(arb_term(), 0..3),
                    prop::option::of(any::<prop::sample::Index>()),
                    any::<bool>(),
                ),
                n,
            );
            let prec = prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 0..n * 2);
            let repl = prop::collection::vec(any::<prop::sample::Index>(), 0..if with_repl { 5 } else { 1 });
            (nodes, prec, repl)
        })
        .prop_map(move |(nodes, prec, repl)| {
            let n = nodes.len();
            let mut g = Cdg::new();
            for (i, (name, decl, level, params, parent, absorbed)) in nodes.into_iter().enumerate() {
                let kind = if decl { NodeKind::Declaration } else { NodeKind::Computable };
                let member_of = parent.filter(|_| i > 0).map(|p| NodeId(format!("n{}", p.index(i))));
                g.insert(ConceptNode {
                    id: NodeId(format!("n{i}")),
                    name: if decl { "declaration".to_string() } else { name.to_string() },
                    kind,
                    level: if decl { 0 } else { level },
                    params,
                    absorbed: absorbed && member_of.is_some(),
                    member_of,
                });
            }
            for (a, b) in prec {
                let (a, b) = (a.index(n), b.index(n));
                if a < b {
                    g.prec.insert((NodeId(format!("n{a}")), NodeId(format!("n{b}"))));
                }
            }
            let mut used = BTreeSet::new();
            for pair in repl.chunks(2) {
                if let [a, b] = pair {
                    let (a, b) = (a.index(n), b.index(n));
                    if a != b && used.insert(a) && used.insert(b) {
                        g.repl
                            .push(ReplGroup { lhs: vec![NodeId(format!("n{a}"))], rhs: vec![NodeId(format!("n{b}"))] });
                    }
                }
            }
            g
        })
}

// ---- brute-force matcher oracle

fn ancestors(g: &Cdg, id: &NodeId) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    let mut cur = g.nodes[id].member_of.clone();
    while let Some(p) = cur {
        if !out.insert(p.clone()) {
            break;
        }
        cur = g.nodes[&p].member_of.clone();
    }
    out
}

fn reachable(g: &Cdg, from: &NodeId, to: &NodeId) -> bool {
    let mut stack = vec![from];
    let mut seen = BTreeSet::new();
    while let Some(x) = stack.pop() {
        for (a, b) in &g.prec {
            if a == x {
                if b == to {
                    return true;
                }
                if seen.insert(b) {
                    stack.push(b);
                }
            }
        }
    }
    false
}

/// Parameters of the oracle graphs are variables or integers only; a
/// variable map must be a consistent injection.
fn params_ok(t: &[Term], c: &[Term], vars: &mut BTreeMap<String, String>) -> bool {
    if t.len() != c.len() {
        return false;
    }
    for (x, y) in t.iter().zip(c) {
        match (x, y) {
            (Term::Var(a), Term::Var(b)) => match vars.get(a) {
                Some(bound) if bound != b => return false,
                Some(_) => {}
                None => {
                    if vars.values().any(|v| v == b) {
                        return false;
                    }
                    vars.insert(a.clone(), b.clone());
                }
            },
            (Term::Int(a), Term::Int(b)) if a == b => {}
            _ => return false,
        }
    }
    true
}

/// Whether some injective node map embeds `t` in `c` completely:
/// names, kinds and absorbed flags agree, parameters map consistently,
/// template ancestors map to ancestors and precedences hold in `c`'s
/// transitive closure.
pub fn oracle_full_match(t: &Cdg, c: &Cdg) -> bool {
    let tids: Vec<&NodeId> = t.nodes.keys().collect();
    let cids: Vec<&NodeId> = c.nodes.keys().collect();
    let mut assign: Vec<usize> = Vec::new();
    fn rec(t: &Cdg, c: &Cdg, tids: &[&NodeId], cids: &[&NodeId], assign: &mut Vec<usize>) -> bool {
        if assign.len() == tids.len() {
            let map: BTreeMap<&NodeId, &NodeId> = tids.iter().copied().zip(assign.iter().map(|&i| cids[i])).collect();
            let mut vars = BTreeMap::new();
            for (tn, cn) in &map {
                let (a, b) = (&t.nodes[*tn], &c.nodes[*cn]);
                if a.name != b.name
                    || a.kind != b.kind
                    || a.absorbed != b.absorbed
                    || !params_ok(&a.params, &b.params, &mut vars)
                {
                    return false;
                }
            }
            for (tn, cn) in &map {
                let c_anc = ancestors(c, cn);
                if ancestors(t, tn).iter().any(|ta| !c_anc.contains(map[ta])) {
                    return false;
                }
            }
            return t.prec.iter().all(|(a, b)| reachable(c, map[a], map[b]));
        }
        for i in 0..cids.len() {
            if !assign.contains(&i) {
                assign.push(i);
                if rec(t, c, tids, cids, assign) {
                    return true;
                }
                assign.pop();
            }
        }
        false
    }
    rec(t, c, &tids, &cids, &mut assign)
}

const SMALL_NAMES: [&str; 3] = ["assign", "print", "swap"];

type NodeSpec = (usize, bool, Vec<i8>, Option<prop::sample::Index>, bool);

fn small_graph(spec: Vec<NodeSpec>, prec: Vec<(prop::sample::Index, prop::sample::Index)>, prefix: &str) -> Cdg {
    let n = spec.len();
    let mut g = Cdg::new();
    for (i, (name, decl, params, parent, absorbed)) in spec.into_iter().enumerate() {
        let member_of = parent.filter(|_| i > 0).map(|p| NodeId(format!("{prefix}{}", p.index(i))));
        g.insert(ConceptNode {
            id: NodeId(format!("{prefix}{i}")),
            name: SMALL_NAMES[name].to_string(),
            kind: if decl { NodeKind::Declaration } else { NodeKind::Computable },
            level: 0,
            params: params
                .into_iter()
                .map(|p| if p < 0 { Term::Int(i64::from(p)) } else { Term::var(&format!("{prefix}v{}", p % 3)) })
                .collect(),
            absorbed: absorbed && member_of.is_some(),
            member_of,
        });
    }
    for (a, b) in prec {
        let (a, b) = (a.index(n), b.index(n));
        if a < b {
            g.prec.insert((NodeId(format!("{prefix}{a}")), NodeId(format!("{prefix}{b}"))));
        }
    }
    g
}

fn arb_small(max: usize, prefix: &'static str) -> impl Strategy<Value = Cdg> {
    (1..=max).prop_flat_map(move |n| {
        (
            prop::collection::vec(
                (
                    0..SMALL_NAMES.len(),
                    prop::bool::weighted(0.15),
                    prop::collection::vec(-2i8..6, 0..3),
                    prop::option::of(any::<prop::sample::Index>()),
                    prop::bool::weighted(0.2),
                ),
                n,
            ),
            prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 0..n + 2),
        )
            .prop_map(move |(s, p)| small_graph(s, p, prefix))
    })
}

/// Template of up to 4 nodes against a candidate of up to 8. Half of the
/// pairs embed the template into the candidate by construction (renamed,
/// possibly with extra nodes), the rest are independent.
pub fn arb_match_pair() -> impl Strategy<Value = (Cdg, Cdg)> {
    prop_oneof![
        (arb_small(4, "t"), arb_small(8, "c")),
        (arb_small(4, "t"), arb_small(4, "x"), any::<u64>()).prop_map(|(t, extra, salt)| {
            let mut c = Cdg::new();
            let rename = |s: &str| s.replacen('t', "c", 1);
            for n in t.nodes.values() {
                let mut m = n.clone();
                m.id = NodeId(rename(n.id.as_str()));
                m.member_of = n.member_of.as_ref().map(|p| NodeId(rename(p.as_str())));
                let vars: BTreeMap<String, String> =
                    (0..3).map(|k| (format!("tv{k}"), format!("cv{}", (k + salt as usize) % 3))).collect();
                m.params = n.params.iter().map(|p| p.rename_vars(&vars)).collect();
                c.insert(m);
            }
            for (a, b) in &t.prec {
                c.prec.insert((NodeId(rename(a.as_str())), NodeId(rename(b.as_str()))));
            }
            for n in extra.nodes.values() {
                c.insert(n.clone());
            }
            c.prec.extend(extra.prec.iter().cloned());
            if salt % 4 == 0 {
                if let Some((a, b)) = t.prec.iter().next() {
                    c.prec.remove(&(NodeId(rename(a.as_str())), NodeId(rename(b.as_str()))));
                }
            }
            (t, c)
        }),
    ]
}
