//! Program representation. The textual form is s-expressions; `Display`
//! prints the form the parser reads back.

use std::fmt;

use crate::tensor::Shape;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// A literal dimension list, only meaningful as a call argument.
    Dims(Vec<usize>),
    Var(String),
    /// Private input of a declared shape, shared by client 0.
    Priv(String, Shape),
    /// Public input of a declared shape.
    Pub(String, Shape),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Elementwise `a < b`, a bit array when private.
    Lt(Box<Expr>, Box<Expr>),
    Dot(Box<Expr>, Box<Expr>),
    /// `sum_i xs[i] * ys[i]` elementwise after broadcasting, evaluated as one
    /// multiplication round with a single truncation.
    PackDot(Vec<Expr>, Vec<Expr>),
    Index(Box<Expr>, Vec<Idx>),
    Call(String, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Idx {
    At(Expr),
    Range(Expr, Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Name(String),
    Index(String, Vec<Idx>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Assign(Target, Expr),
    Loop { var: String, start: Expr, end: Expr, body: Vec<Stmt> },
    Branch { cond: Expr, then: Vec<Stmt>, other: Vec<Stmt> },
    Reveal(Expr),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub stmts: Vec<Stmt>,
}

impl Target {
    pub fn name(&self) -> &str {
        match self {
            Target::Name(n) | Target::Index(n, _) => n,
        }
    }
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    /// Direct subexpressions, including index bounds.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Dims(_) | Expr::Var(_) | Expr::Priv(..) | Expr::Pub(..) => vec![],
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Lt(a, b) | Expr::Dot(a, b) => {
                vec![a, b]
            }
            Expr::Neg(a) => vec![a],
            Expr::PackDot(xs, ys) => xs.iter().chain(ys).collect(),
            Expr::Index(base, items) => {
                let mut out = vec![base.as_ref()];
                out.extend(items.iter().flat_map(Idx::exprs));
                out
            }
            Expr::Call(_, args) => args.iter().collect(),
        }
    }

    /// Whether `pred` holds anywhere in the tree.
    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.any(&|e| matches!(e, Expr::Var(v) if v == name))
    }

    /// Rebuilds bottom-up, applying `f` to every node after its children.
    pub fn rewrite(self, f: &mut dyn FnMut(Expr) -> Expr) -> Expr {
        let b = |e: Box<Expr>, f: &mut dyn FnMut(Expr) -> Expr| Box::new(e.rewrite(f));
        let node = match self {
            Expr::Add(a, c) => Expr::Add(b(a, f), b(c, f)),
            Expr::Sub(a, c) => Expr::Sub(b(a, f), b(c, f)),
            Expr::Mul(a, c) => Expr::Mul(b(a, f), b(c, f)),
            Expr::Lt(a, c) => Expr::Lt(b(a, f), b(c, f)),
            Expr::Dot(a, c) => Expr::Dot(b(a, f), b(c, f)),
            Expr::Neg(a) => Expr::Neg(b(a, f)),
            Expr::PackDot(xs, ys) => Expr::PackDot(
                xs.into_iter().map(|x| x.rewrite(f)).collect(),
                ys.into_iter().map(|y| y.rewrite(f)).collect(),
            ),
            Expr::Index(base, items) => {
                Expr::Index(b(base, f), items.into_iter().map(|i| i.map(|e| e.rewrite(f))).collect())
            }
            Expr::Call(name, args) => Expr::Call(name, args.into_iter().map(|a| a.rewrite(f)).collect()),
            leaf => leaf,
        };
        f(node)
    }
}

impl Idx {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Idx::At(e) => vec![e],
            Idx::Range(a, b) => vec![a, b],
        }
    }

    pub fn map(self, mut f: impl FnMut(Expr) -> Expr) -> Idx {
        match self {
            Idx::At(e) => Idx::At(f(e)),
            Idx::Range(a, b) => Idx::Range(f(a), f(b)),
        }
    }
}

impl Stmt {
    /// Applies `f` to every expression of this statement and nested bodies,
    /// index bounds and loop bounds included.
    pub fn map_exprs(self, f: &mut dyn FnMut(Expr) -> Expr) -> Stmt {
        match self {
            Stmt::Assign(t, e) => {
                let t = match t {
                    Target::Index(n, items) => Target::Index(n, items.into_iter().map(|i| i.map(&mut *f)).collect()),
                    t => t,
                };
                Stmt::Assign(t, f(e))
            }
            Stmt::Loop { var, start, end, body } => Stmt::Loop {
                var,
                start: f(start),
                end: f(end),
                body: body.into_iter().map(|s| s.map_exprs(f)).collect(),
            },
            Stmt::Branch { cond, then, other } => Stmt::Branch {
                cond: f(cond),
                then: then.into_iter().map(|s| s.map_exprs(f)).collect(),
                other: other.into_iter().map(|s| s.map_exprs(f)).collect(),
            },
            Stmt::Reveal(e) => Stmt::Reveal(f(e)),
        }
    }

    /// Every expression directly in this statement (not nested bodies).
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Stmt::Assign(t, e) => {
                let mut out = vec![e];
                if let Target::Index(_, items) = t {
                    out.extend(items.iter().flat_map(Idx::exprs));
                }
                out
            }
            Stmt::Loop { start, end, .. } => vec![start, end],
            Stmt::Branch { cond, .. } => vec![cond],
            Stmt::Reveal(e) => vec![e],
        }
    }
}

impl Program {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Program { stmts }
    }

    /// Applies `f` to every expression tree, bottom-up at every node.
    pub fn rewrite_exprs(self, f: &mut dyn FnMut(Expr) -> Expr) -> Program {
        let stmts = self.stmts.into_iter().map(|s| s.map_exprs(&mut |e| e.rewrite(f))).collect();
        Program { stmts }
    }
}

fn dims(f: &mut fmt::Formatter<'_>, shape: &Shape) -> fmt::Result {
    write!(f, "(")?;
    for (i, d) in shape.dims().iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{d}")?;
    }
    write!(f, ")")
}

fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    write!(f, "(")?;
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Dims(d) => dims(f, &Shape::new(d)),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Priv(n, s) => {
                write!(f, "(priv {n} ")?;
                dims(f, s)?;
                write!(f, ")")
            }
            Expr::Pub(n, s) => {
                write!(f, "(pub {n} ")?;
                dims(f, s)?;
                write!(f, ")")
            }
            Expr::Add(a, b) => write!(f, "(add {a} {b})"),
            Expr::Sub(a, b) => write!(f, "(sub {a} {b})"),
            Expr::Mul(a, b) => write!(f, "(mul {a} {b})"),
            Expr::Neg(a) => write!(f, "(neg {a})"),
            Expr::Lt(a, b) => write!(f, "(lt {a} {b})"),
            Expr::Dot(a, b) => write!(f, "(dot {a} {b})"),
            Expr::PackDot(xs, ys) => {
                write!(f, "(packdot ")?;
                list(f, xs)?;
                write!(f, " ")?;
                list(f, ys)?;
                write!(f, ")")
            }
            Expr::Index(base, items) => {
                write!(f, "(idx {base}")?;
                for i in items {
                    write!(f, " {i}")?;
                }
                write!(f, ")")
            }
            Expr::Call(name, args) => {
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Idx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Idx::At(e) => write!(f, "{e}"),
            Idx::Range(a, b) => write!(f, "(range {a} {b})"),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Name(n) => write!(f, "{n}"),
            Target::Index(n, items) => {
                write!(f, "(idx {n}")?;
                for i in items {
                    write!(f, " {i}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Assign(t, e) => write!(f, "(assign {t} {e})"),
            Stmt::Loop { var, start, end, body } => {
                write!(f, "(loop {var} {start} {end}")?;
                for s in body {
                    write!(f, " {s}")?;
                }
                write!(f, ")")
            }
            Stmt::Branch { cond, then, other } => {
                write!(f, "(if {cond} (then")?;
                for s in then {
                    write!(f, " {s}")?;
                }
                write!(f, ") (else")?;
                for s in other {
                    write!(f, " {s}")?;
                }
                write!(f, "))")
            }
            Stmt::Reveal(e) => write!(f, "(reveal {e})"),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stmts {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}
