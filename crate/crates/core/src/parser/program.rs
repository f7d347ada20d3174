//! Printing, loading and measuring emitted programs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::lexer::{tokenize, Cursor, Tok};
use super::ParseError;
use crate::logic::expr::{BinOp, Expr, Sort, Var};
use crate::logic::program::{Procedure, Stmt};

fn fmt_loc(base: &Var, offset: usize) -> String {
    if offset == 0 {
        format!("*{base}")
    } else {
        format!("*({base} + {offset})")
    }
}

fn print_stmt(s: &Stmt, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match s {
        Stmt::Skip => {}
        Stmt::Error => {
            let _ = writeln!(out, "{pad}error;");
        }
        Stmt::Load { to, base, offset } => {
            let _ = writeln!(out, "{pad}let {to} = {};", fmt_loc(base, *offset));
        }
        Stmt::Store {
            base,
            offset,
            value,
        } => {
            let _ = writeln!(out, "{pad}{} = {value};", fmt_loc(base, *offset));
        }
        Stmt::Malloc { to, size } => {
            let _ = writeln!(out, "{pad}let {to} = malloc({size});");
        }
        Stmt::Free(x) => {
            let _ = writeln!(out, "{pad}free({x});");
        }
        Stmt::Call { name, args } => {
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(out, "{pad}{name}({});", args.join(", "));
        }
        Stmt::If { cond, then, els } => {
            let _ = writeln!(out, "{pad}if ({cond}) {{");
            print_stmt(then, indent + 1, out);
            let _ = writeln!(out, "{pad}}} else {{");
            print_stmt(els, indent + 1, out);
            let _ = writeln!(out, "{pad}}}");
        }
        Stmt::Seq(ss) => ss.iter().for_each(|s| print_stmt(s, indent, out)),
    }
}

/// Statement text without the procedure header, one statement per line.
pub fn print_stmt_block(s: &Stmt) -> String {
    let mut out = String::new();
    print_stmt(s, 0, &mut out);
    out
}

pub fn print_program(p: &Procedure) -> String {
    let formals: Vec<String> = p
        .formals
        .iter()
        .map(|v| format!("{} {}", v.sort(), v.name()))
        .collect();
    let mut out = format!("void {}({}) {{\n", p.name, formals.join(", "));
    print_stmt(&p.body, 1, &mut out);
    out.push_str("}\n");
    out
}

fn expr_nodes(e: &Expr) -> usize {
    e.size()
}

fn stmt_size(s: &Stmt) -> usize {
    match s {
        Stmt::Skip => 0,
        Stmt::Error => 1,
        Stmt::Load { .. } => 4,
        Stmt::Store { value, .. } => 3 + expr_nodes(value),
        Stmt::Malloc { .. } => 3,
        Stmt::Free(_) => 2,
        Stmt::Call { args, .. } => 1 + args.iter().map(expr_nodes).sum::<usize>(),
        Stmt::If { cond, then, els } => 1 + expr_nodes(cond) + stmt_size(then) + stmt_size(els),
        Stmt::Seq(ss) => ss.iter().map(stmt_size).sum(),
    }
}

/// Node count of a procedure: one per formal, one per statement node
/// (sequences excluded), one per expression node. Load and store locations
/// count their base variable and their offset literal.
pub fn ast_size(p: &Procedure) -> usize {
    p.formals.len() + stmt_size(&p.body)
}

// ---------------------------------------------------------------------------
// Loader

struct Scope {
    vars: HashMap<String, Sort>,
}

impl Scope {
    fn var(&self, c: &Cursor, n: &str) -> Result<Var, ParseError> {
        self.vars
            .get(n)
            .map(|s| Var::new(n, *s))
            .ok_or_else(|| ParseError::at(c.pos(), format!("unknown program variable `{n}`")))
    }
}

fn l_expr(c: &mut Cursor, sc: &Scope) -> Result<Expr, ParseError> {
    let mut l = l_conj(c, sc)?;
    while c.eat(&Tok::Or) {
        l = Expr::bin(BinOp::Or, l, l_conj(c, sc)?);
    }
    Ok(l)
}

fn l_conj(c: &mut Cursor, sc: &Scope) -> Result<Expr, ParseError> {
    let mut l = l_cmp(c, sc)?;
    while c.eat(&Tok::And) {
        l = Expr::bin(BinOp::And, l, l_cmp(c, sc)?);
    }
    Ok(l)
}

fn l_cmp(c: &mut Cursor, sc: &Scope) -> Result<Expr, ParseError> {
    let l = l_term(c, sc)?;
    let op = c.peek().clone();
    let swap = matches!(op, Tok::Ge | Tok::Gt);
    let bop = match op {
        Tok::EqEq | Tok::Neq => BinOp::Eq,
        Tok::Le | Tok::Ge => BinOp::Le,
        Tok::Lt | Tok::Gt => BinOp::Lt,
        _ => return Ok(l),
    };
    c.bump();
    let r = l_term(c, sc)?;
    let e = if swap {
        Expr::bin(bop, r, l)
    } else {
        Expr::bin(bop, l, r)
    };
    Ok(if op == Tok::Neq { Expr::Not(Box::new(e)) } else { e })
}

fn l_term(c: &mut Cursor, sc: &Scope) -> Result<Expr, ParseError> {
    let mut l = l_atom(c, sc)?;
    loop {
        let op = match c.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            _ => return Ok(l),
        };
        c.bump();
        l = Expr::bin(op, l, l_atom(c, sc)?);
    }
}

fn l_atom(c: &mut Cursor, sc: &Scope) -> Result<Expr, ParseError> {
    match c.peek().clone() {
        Tok::Int(n) => {
            c.bump();
            Ok(Expr::Int(n))
        }
        Tok::Minus => {
            c.bump();
            Ok(Expr::Int(-c.int()?))
        }
        Tok::Ident(s) => {
            c.bump();
            match s.as_str() {
                "true" => Ok(Expr::Bool(true)),
                "false" => Ok(Expr::Bool(false)),
                "not" => Ok(Expr::Not(Box::new(l_atom(c, sc)?))),
                _ => Ok(Expr::Var(sc.var(c, &s)?)),
            }
        }
        Tok::LParen => {
            c.bump();
            let e = l_expr(c, sc)?;
            if c.eat(&Tok::Question) {
                let t = l_expr(c, sc)?;
                c.expect(&Tok::Colon)?;
                let f = l_expr(c, sc)?;
                c.expect(&Tok::RParen)?;
                return Ok(Expr::ite(e, t, f));
            }
            c.expect(&Tok::RParen)?;
            Ok(e)
        }
        _ => Err(c.unexpected("expression")),
    }
}

/// `*x` or `*(x + k)`.
fn l_deref(c: &mut Cursor, sc: &Scope) -> Result<(Var, usize), ParseError> {
    c.expect(&Tok::Star)?;
    if c.eat(&Tok::LParen) {
        let n = c.ident()?;
        let base = sc.var(c, &n)?;
        let mut off = 0;
        if c.eat(&Tok::Plus) {
            off = c.int()? as usize;
        }
        c.expect(&Tok::RParen)?;
        Ok((base, off))
    } else {
        let n = c.ident()?;
        Ok((sc.var(c, &n)?, 0))
    }
}

fn l_block(c: &mut Cursor, sc: &mut Scope) -> Result<Stmt, ParseError> {
    c.expect(&Tok::LBrace)?;
    let mut out = Vec::new();
    while !c.eat(&Tok::RBrace) {
        out.push(l_stmt(c, sc)?);
    }
    Ok(Stmt::seq(out))
}

fn l_stmt(c: &mut Cursor, sc: &mut Scope) -> Result<Stmt, ParseError> {
    if c.eat_keyword("let") {
        let name = c.ident()?;
        c.expect(&Tok::Assign)?;
        if c.eat_keyword("malloc") {
            c.expect(&Tok::LParen)?;
            let n = c.int()?;
            c.expect(&Tok::RParen)?;
            c.expect(&Tok::Semi)?;
            sc.vars.insert(name.clone(), Sort::Loc);
            return Ok(Stmt::Malloc {
                to: Var::new(name, Sort::Loc),
                size: n as usize,
            });
        }
        let (base, offset) = l_deref(c, sc)?;
        c.expect(&Tok::Semi)?;
        let to = Var::new(&name, Sort::Int);
        sc.vars.insert(name, Sort::Int);
        return Ok(Stmt::Load { to, base, offset });
    }
    if c.eat_keyword("if") {
        c.expect(&Tok::LParen)?;
        let cond = l_expr(c, sc)?;
        c.expect(&Tok::RParen)?;
        let saved = sc.vars.clone();
        let then = l_block(c, sc)?;
        sc.vars = saved.clone();
        c.expect_keyword("else")?;
        let els = l_block(c, sc)?;
        sc.vars = saved;
        return Ok(Stmt::ite(cond, then, els));
    }
    if c.eat_keyword("error") {
        c.expect(&Tok::Semi)?;
        return Ok(Stmt::Error);
    }
    if c.eat_keyword("free") {
        c.expect(&Tok::LParen)?;
        let n = c.ident()?;
        let x = sc.var(c, &n)?;
        c.expect(&Tok::RParen)?;
        c.expect(&Tok::Semi)?;
        return Ok(Stmt::Free(x));
    }
    if c.peek() == &Tok::Star {
        let (base, offset) = l_deref(c, sc)?;
        c.expect(&Tok::Assign)?;
        let value = l_expr(c, sc)?;
        c.expect(&Tok::Semi)?;
        return Ok(Stmt::Store {
            base,
            offset,
            value,
        });
    }
    let name = c.ident()?;
    c.expect(&Tok::LParen)?;
    let mut args = Vec::new();
    if !c.eat(&Tok::RParen) {
        loop {
            args.push(l_expr(c, sc)?);
            if c.eat(&Tok::RParen) {
                break;
            }
            c.expect(&Tok::Comma)?;
        }
    }
    c.expect(&Tok::Semi)?;
    Ok(Stmt::Call {
        name: Arc::from(name.as_str()),
        args,
    })
}

fn l_procedure(c: &mut Cursor) -> Result<Procedure, ParseError> {
    c.expect_keyword("void")?;
    let name = c.ident()?;
    c.expect(&Tok::LParen)?;
    let mut formals = Vec::new();
    if !c.eat(&Tok::RParen) {
        loop {
            let pos = c.pos();
            let kw = c.ident()?;
            let sort = Sort::from_keyword(&kw)
                .ok_or_else(|| ParseError::at(pos, format!("unknown sort `{kw}`")))?;
            formals.push(Var::new(c.ident()?, sort));
            if c.eat(&Tok::RParen) {
                break;
            }
            c.expect(&Tok::Comma)?;
        }
    }
    let mut sc = Scope {
        vars: formals.iter().map(|v| (v.name().to_string(), v.sort())).collect(),
    };
    let body = l_block(c, &mut sc)?;
    Ok(Procedure {
        name: Arc::from(name.as_str()),
        formals,
        body,
    })
}

/// Loads one or more procedures in the syntax produced by [`print_program`].
pub fn parse_program(text: &str) -> Result<Vec<Procedure>, ParseError> {
    let mut c = Cursor::new(tokenize(text)?);
    let mut out = Vec::new();
    while c.peek() != &Tok::Eof {
        out.push(l_procedure(&mut c)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(n: &str) -> Var {
        Var::new(n, Sort::Loc)
    }

    fn pick() -> Procedure {
        Procedure {
            name: Arc::from("pick"),
            formals: vec![lv("x"), lv("y")],
            body: Stmt::Store {
                base: lv("x"),
                offset: 0,
                value: Expr::Int(30),
            },
        }
    }

    #[test]
    fn store_and_load_syntax() {
        assert_eq!(print_stmt_block(&pick().body), "*x = 30;\n");
        let load = Stmt::Load {
            to: Var::new("v", Sort::Int),
            base: lv("x"),
            offset: 1,
        };
        assert_eq!(print_stmt_block(&load), "let v = *(x + 1);\n");
        assert_eq!(print_stmt_block(&Stmt::Skip), "");
    }

    #[test]
    fn size_of_pick() {
        // two formals + store node + base + offset + value
        assert_eq!(ast_size(&pick()), 6);
        let empty = Procedure {
            body: Stmt::Skip,
            ..pick()
        };
        assert_eq!(ast_size(&empty), 2);
    }

    #[test]
    fn printed_program_reloads() {
        let text = "void listcopy(loc r) {\n  let x = *r;\n  if (x == 0) {\n  } else {\n    let v = *x;\n    let nxt = *(x + 1);\n    *r = nxt;\n    listcopy(r);\n    let y1 = *r;\n    let y = malloc(2);\n    *r = y;\n    *(y + 1) = y1;\n    *y = v;\n  }\n}\n";
        let p = parse_program(text).unwrap();
        assert_eq!(print_program(&p[0]), text);
        let q = parse_program(&print_program(&p[0])).unwrap();
        assert_eq!(ast_size(&p[0]), ast_size(&q[0]));
    }

    #[test]
    fn unknown_variable_is_an_error() {
        assert!(parse_program("void f(loc x) { *y = 1; }").is_err());
    }
}
