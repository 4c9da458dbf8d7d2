//! S-expression reader for programs. `#` starts a comment; forms may span
//! lines.

use super::ir::{Expr, Idx, Program, Stmt, Target};
use crate::error::{Error, Result};
use crate::tensor::Shape;

#[derive(Clone, Debug)]
enum Sx {
    Atom(String, usize),
    List(Vec<Sx>, usize),
}

impl Sx {
    fn line(&self) -> usize {
        match self {
            Sx::Atom(_, l) | Sx::List(_, l) => *l,
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn read_all(src: &str) -> Result<Vec<Sx>> {
    let mut stack: Vec<(Vec<Sx>, usize)> = vec![(Vec::new(), 0)];
    for (ln, line) in src.lines().enumerate() {
        let line_no = ln + 1;
        let code = line.split('#').next().unwrap_or("");
        let mut atom = String::new();
        let flush = |atom: &mut String, stack: &mut Vec<(Vec<Sx>, usize)>| {
            if !atom.is_empty() {
                let a = std::mem::take(atom);
                stack.last_mut().expect("root frame").0.push(Sx::Atom(a, line_no));
            }
        };
        for ch in code.chars() {
            match ch {
                '(' => {
                    flush(&mut atom, &mut stack);
                    stack.push((Vec::new(), line_no));
                }
                ')' => {
                    flush(&mut atom, &mut stack);
                    if stack.len() == 1 {
                        return Err(err(line_no, "unbalanced `)`"));
                    }
                    let (items, start) = stack.pop().expect("checked depth");
                    stack.last_mut().expect("root frame").0.push(Sx::List(items, start));
                }
                c if c.is_whitespace() => flush(&mut atom, &mut stack),
                c => atom.push(c),
            }
        }
        flush(&mut atom, &mut stack);
    }
    if stack.len() > 1 {
        let open = stack.last().map(|f| f.1).unwrap_or(0);
        return Err(err(open, "unclosed `(`"));
    }
    Ok(stack.pop().map(|f| f.0).unwrap_or_default())
}

/// Names with special meaning that cannot be variables.
const RESERVED: &[&str] = &[
    "assign", "loop", "if", "then", "else", "reveal", "priv", "pub", "add", "sub", "mul", "neg", "lt", "gt", "dot",
    "packdot", "idx", "range",
];

/// Callable functions and their accepted argument counts.
const CALLS: &[(&str, usize, usize)] = &[
    ("relu", 1, 1),
    ("abs", 1, 1),
    ("logistic", 1, 3),
    ("logistic_piecewise", 1, 1),
    ("exp", 1, 1),
    ("log", 1, 1),
    ("sqrt", 1, 1),
    ("reciprocal", 1, 1),
    ("div", 2, 2),
    ("transpose", 1, 2),
    ("flatten", 1, 1),
    ("reshape", 2, 2),
    ("repeat", 2, 3),
    ("tile", 2, 2),
    ("sum", 1, 2),
    ("mean", 1, 2),
    ("max", 1, 2),
    ("min", 1, 2),
    ("argmax", 1, 2),
    ("argmin", 1, 2),
    ("clip", 3, 3),
    ("zeros", 1, 1),
    ("ones", 1, 1),
];

pub(crate) fn call_arity(name: &str) -> Option<(usize, usize)> {
    CALLS.iter().find(|c| c.0 == name).map(|c| (c.1, c.2))
}

fn symbol(sx: &Sx) -> Result<&str> {
    match sx {
        Sx::Atom(a, l) => {
            if a.parse::<f64>().is_ok() {
                return Err(err(*l, format!("expected a name, found number {a}")));
            }
            if RESERVED.contains(&a.as_str()) {
                return Err(err(*l, format!("`{a}` is reserved")));
            }
            Ok(a)
        }
        Sx::List(_, l) => Err(err(*l, "expected a name, found a list")),
    }
}

fn dims(sx: &Sx) -> Result<Vec<usize>> {
    match sx {
        Sx::List(items, _) => items
            .iter()
            .map(|i| match i {
                Sx::Atom(a, l) => a.parse::<usize>().map_err(|_| err(*l, format!("bad dimension {a:?}"))),
                Sx::List(_, l) => Err(err(*l, "nested list in dimensions")),
            })
            .collect(),
        Sx::Atom(a, l) => Err(err(*l, format!("expected a dimension list, found {a}"))),
    }
}

fn expr(sx: &Sx) -> Result<Expr> {
    let (items, line) = match sx {
        Sx::Atom(a, l) => {
            return match a.parse::<f64>() {
                Ok(v) => Ok(Expr::Const(v)),
                Err(_) => {
                    symbol(sx).map(|s| Expr::Var(s.to_string())).map_err(|_| err(*l, format!("`{a}` is reserved")))
                }
            };
        }
        Sx::List(items, l) => (items, *l),
    };
    let Some(head) = items.first() else {
        return Ok(Expr::Dims(Vec::new()));
    };
    let head = match head {
        Sx::Atom(a, _) if a.parse::<f64>().is_ok() => return Ok(Expr::Dims(dims(sx)?)),
        Sx::Atom(a, _) => a.as_str(),
        Sx::List(_, l) => return Err(err(*l, "expected an operator")),
    };
    let args = &items[1..];
    let want = |lo: usize, hi: usize| -> Result<()> {
        if args.len() < lo || args.len() > hi {
            let range = if lo == hi {
                lo.to_string()
            } else if hi == usize::MAX {
                format!("{lo}+")
            } else {
                format!("{lo}-{hi}")
            };
            return Err(err(line, format!("`{head}` takes {range} arguments, got {}", args.len())));
        }
        Ok(())
    };
    let bin = |f: fn(Box<Expr>, Box<Expr>) -> Expr| -> Result<Expr> {
        want(2, 2)?;
        Ok(f(Box::new(expr(&args[0])?), Box::new(expr(&args[1])?)))
    };
    let fold = |f: fn(Box<Expr>, Box<Expr>) -> Expr| -> Result<Expr> {
        want(2, usize::MAX)?;
        let mut acc = expr(&args[0])?;
        for a in &args[1..] {
            acc = f(Box::new(acc), Box::new(expr(a)?));
        }
        Ok(acc)
    };
    match head {
        "priv" | "pub" => {
            want(2, 2)?;
            let name = symbol(&args[0])?.to_string();
            let shape = Shape::new(&dims(&args[1])?);
            Ok(if head == "priv" { Expr::Priv(name, shape) } else { Expr::Pub(name, shape) })
        }
        "add" => fold(Expr::Add),
        "mul" => fold(Expr::Mul),
        "sub" => bin(Expr::Sub),
        "lt" => bin(Expr::Lt),
        "gt" => {
            want(2, 2)?;
            Ok(Expr::Lt(Box::new(expr(&args[1])?), Box::new(expr(&args[0])?)))
        }
        "dot" => bin(Expr::Dot),
        "neg" => {
            want(1, 1)?;
            Ok(Expr::Neg(Box::new(expr(&args[0])?)))
        }
        "idx" => {
            want(2, usize::MAX)?;
            let items = args[1..].iter().map(index).collect::<Result<Vec<_>>>()?;
            Ok(Expr::Index(Box::new(expr(&args[0])?), items))
        }
        "packdot" => {
            want(2, 2)?;
            let side = |sx: &Sx| -> Result<Vec<Expr>> {
                match sx {
                    Sx::List(xs, _) => xs.iter().map(expr).collect(),
                    Sx::Atom(_, l) => Err(err(*l, "packdot takes two lists")),
                }
            };
            let (xs, ys) = (side(&args[0])?, side(&args[1])?);
            if xs.len() != ys.len() || xs.is_empty() {
                return Err(err(line, "packdot lists must be non-empty and equally long"));
            }
            Ok(Expr::PackDot(xs, ys))
        }
        name => {
            let Some((lo, hi)) = call_arity(name) else {
                return Err(err(line, format!("unknown operator `{name}`")));
            };
            want(lo, hi)?;
            Ok(Expr::Call(name.to_string(), args.iter().map(expr).collect::<Result<_>>()?))
        }
    }
}

fn index(sx: &Sx) -> Result<Idx> {
    if let Sx::List(items, line) = sx {
        if let Some(Sx::Atom(h, _)) = items.first() {
            if h == "range" {
                if items.len() != 3 {
                    return Err(err(*line, "`range` takes 2 arguments"));
                }
                return Ok(Idx::Range(expr(&items[1])?, expr(&items[2])?));
            }
        }
    }
    Ok(Idx::At(expr(sx)?))
}

fn target(sx: &Sx) -> Result<Target> {
    match sx {
        Sx::Atom(..) => Ok(Target::Name(symbol(sx)?.to_string())),
        Sx::List(items, line) => match items.first() {
            Some(Sx::Atom(h, _)) if h == "idx" && items.len() >= 3 => {
                let name = symbol(&items[1])?.to_string();
                let idx = items[2..].iter().map(index).collect::<Result<Vec<_>>>()?;
                Ok(Target::Index(name, idx))
            }
            _ => Err(err(*line, "assignment target must be a name or (idx name ...)")),
        },
    }
}

fn block(sx: &Sx, tag: &str) -> Result<Vec<Stmt>> {
    match sx {
        Sx::List(items, line) => match items.first() {
            Some(Sx::Atom(h, _)) if h == tag => items[1..].iter().map(stmt).collect(),
            _ => Err(err(*line, format!("expected ({tag} ...)"))),
        },
        Sx::Atom(_, l) => Err(err(*l, format!("expected ({tag} ...)"))),
    }
}

fn stmt(sx: &Sx) -> Result<Stmt> {
    let Sx::List(items, line) = sx else {
        return Err(err(sx.line(), "expected a statement form"));
    };
    let line = *line;
    let head = match items.first() {
        Some(Sx::Atom(a, _)) => a.as_str(),
        _ => return Err(err(line, "expected a statement form")),
    };
    let args = &items[1..];
    match head {
        "assign" => {
            if args.len() != 2 {
                return Err(err(line, "`assign` takes a target and an expression"));
            }
            Ok(Stmt::Assign(target(&args[0])?, expr(&args[1])?))
        }
        "loop" => {
            if args.len() < 3 {
                return Err(err(line, "`loop` takes a variable, start, end and a body"));
            }
            Ok(Stmt::Loop {
                var: symbol(&args[0])?.to_string(),
                start: expr(&args[1])?,
                end: expr(&args[2])?,
                body: args[3..].iter().map(stmt).collect::<Result<_>>()?,
            })
        }
        "if" => {
            if args.len() < 2 || args.len() > 3 {
                return Err(err(line, "`if` takes a condition, (then ...) and optional (else ...)"));
            }
            Ok(Stmt::Branch {
                cond: expr(&args[0])?,
                then: block(&args[1], "then")?,
                other: match args.get(2) {
                    Some(b) => block(b, "else")?,
                    None => Vec::new(),
                },
            })
        }
        "reveal" => {
            if args.len() != 1 {
                return Err(err(line, "`reveal` takes one expression"));
            }
            Ok(Stmt::Reveal(expr(&args[0])?))
        }
        other => Err(err(line, format!("`{other}` is not a statement"))),
    }
}

pub fn parse_program(src: &str) -> Result<Program> {
    let forms = read_all(src)?;
    Ok(Program::new(forms.iter().map(stmt).collect::<Result<_>>()?))
}
