//! C rendering of synthesized procedures.

use crate::logic::expr::{BinOp, Expr};
use crate::logic::program::{Procedure, Stmt};

fn c_expr(e: &Expr) -> String {
    match e {
        Expr::Int(n) => n.to_string(),
        Expr::Bool(b) => (*b as u8).to_string(),
        Expr::Var(v) => v.name().to_string(),
        Expr::Not(x) => format!("!{}", c_expr(x)),
        Expr::Ite(c, t, f) => format!("({} ? {} : {})", c_expr(c), c_expr(t), c_expr(f)),
        Expr::Bin(op, l, r) => {
            let sym = match op {
                BinOp::And => "&&",
                BinOp::Or => "||",
                other => other.symbol(),
            };
            format!("({} {sym} {})", c_expr(l), c_expr(r))
        }
        // sets and permissions never reach programs
        Expr::Mut | Expr::Imm | Expr::SetLit(_) => "0".to_string(),
    }
}

fn cell(base: &str, offset: usize) -> String {
    format!("((word *){base})[{offset}]")
}

fn c_stmt(s: &Stmt, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match s {
        Stmt::Skip => {}
        Stmt::Error => out.push_str(&format!("{pad}abort();\n")),
        Stmt::Load { to, base, offset } => {
            out.push_str(&format!("{pad}word {} = {};\n", to.name(), cell(base.name(), *offset)));
        }
        Stmt::Store { base, offset, value } => {
            out.push_str(&format!("{pad}{} = {};\n", cell(base.name(), *offset), c_expr(value)));
        }
        Stmt::Malloc { to, size } => {
            out.push_str(&format!("{pad}word {} = (word)malloc({size} * sizeof(word));\n", to.name()));
        }
        Stmt::Free(x) => out.push_str(&format!("{pad}free((void *){});\n", x.name())),
        Stmt::Call { name, args } => {
            let args: Vec<String> = args.iter().map(c_expr).collect();
            out.push_str(&format!("{pad}{name}({});\n", args.join(", ")));
        }
        Stmt::If { cond, then, els } => {
            out.push_str(&format!("{pad}if ({}) {{\n", c_expr(cond)));
            c_stmt(then, indent + 1, out);
            out.push_str(&format!("{pad}}} else {{\n"));
            c_stmt(els, indent + 1, out);
            out.push_str(&format!("{pad}}}\n"));
        }
        Stmt::Seq(parts) => parts.iter().for_each(|p| c_stmt(p, indent, out)),
    }
}

fn signature(p: &Procedure) -> String {
    let formals: Vec<String> = p.formals.iter().map(|f| format!("word {}", f.name())).collect();
    format!("void {}({})", p.name, formals.join(", "))
}

/// A self-contained C translation unit; every value is a machine word.
pub fn emit_c(procs: &[Procedure]) -> String {
    let mut out = String::from("#include <stdint.h>\n#include <stdlib.h>\n\ntypedef intptr_t word;\n\n");
    for p in procs {
        out.push_str(&format!("{};\n", signature(p)));
    }
    for p in procs {
        out.push_str(&format!("\n{} {{\n", signature(p)));
        c_stmt(&p.body, 1, &mut out);
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    #[test]
    fn loads_stores_and_branches() {
        let procs = parse_program(
            "void f(loc x, loc r) { let a = *(x + 1); if (a == 0) { *r = (a <= 1 ? a : 1); } else { free(x); } }",
        )
        .unwrap();
        let c = emit_c(&procs);
        assert!(c.contains("void f(word x, word r);"));
        assert!(c.contains("word a = ((word *)x)[1];"));
        assert!(c.contains("((word *)r)[0] = ((a <= 1) ? a : 1);"));
        assert!(c.contains("free((void *)x);"));
    }
}
