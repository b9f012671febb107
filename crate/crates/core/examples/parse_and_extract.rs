//! Parse a MiniLang program, print it back with statement numbers, and list
//! its abstract statements and precedence pairs.
//!
//! cargo run --example parse_and_extract [file.ml1]

use mindreader::frontend::{abstract_program, print_ast, AbstractStatement, SourceProgram};

const DEFAULT: &str = "void main() {
  int a = 27, b = 43, t;
  print \"Before\", a, b;
  t = a;
  a = b;
  b = t;
  print \"After\", a, b;
}
";

fn main() {
    let (name, text) = match std::env::args().nth(1) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).expect("readable source file");
            (path, text)
        }
        None => ("swap".to_string(), DEFAULT.to_string()),
    };
    let (ast, ap) = match abstract_program(&SourceProgram::new(name, text)) {
        Ok(x) => x,
        Err(e) => {
            for d in e.diagnostics() {
                eprintln!("{d}");
            }
            std::process::exit(2);
        }
    };
    println!("{}", print_ast(&ast));
    for s in &ap.statements {
        let c = s.container().map_or("root".to_string(), |c| c.to_string());
        match s {
            AbstractStatement::Declaration { n, vars, .. } => {
                for v in vars {
                    println!("[{n}, {}, {}, {c}]", v.name, v.class.as_str());
                }
            }
            AbstractStatement::Computational { n, e, p, .. } => {
                let params: Vec<String> = p.iter().map(ToString::to_string).collect();
                println!("<{n}, {e}, ({}), {c}>", params.join(", "));
            }
        }
    }
    let prec: Vec<String> = ap.precedence.iter().map(|(a, b)| format!("{a} < {b}")).collect();
    println!("precedence: {}", prec.join(", "));
}
