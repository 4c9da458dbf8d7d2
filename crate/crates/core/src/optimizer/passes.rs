//! Static checks and rewrites, run in a fixed order: rejection, loop
//! vectorization, common-factor extraction, expression vectorization.

use std::collections::HashSet;

use super::ir::{Expr, Idx, Program, Stmt, Target};
use crate::error::{Error, Result};

/// Names whose value can depend on a private input, closed under
/// assignment at any depth.
pub fn private_names(p: &Program) -> HashSet<String> {
    let mut set = HashSet::new();
    loop {
        let before = set.len();
        visit_assigns(&p.stmts, &mut |t, e| {
            let idx_private = match t {
                Target::Index(_, items) => items.iter().flat_map(Idx::exprs).any(|x| is_private(x, &set)),
                Target::Name(_) => false,
            };
            if is_private(e, &set) || idx_private {
                set.insert(t.name().to_string());
            }
        });
        if set.len() == before {
            return set;
        }
    }
}

fn visit_assigns(stmts: &[Stmt], f: &mut dyn FnMut(&Target, &Expr)) {
    for s in stmts {
        match s {
            Stmt::Assign(t, e) => f(t, e),
            Stmt::Loop { body, .. } => visit_assigns(body, f),
            Stmt::Branch { then, other, .. } => {
                visit_assigns(then, f);
                visit_assigns(other, f);
            }
            Stmt::Reveal(_) => {}
        }
    }
}

/// Whether `e` can evaluate to shares given the private names.
pub fn is_private(e: &Expr, names: &HashSet<String>) -> bool {
    e.any(&|n| match n {
        Expr::Priv(..) => true,
        Expr::Var(v) => names.contains(v),
        _ => false,
    })
}

/// Rejects control flow or indexing that would depend on private data.
pub fn check_reject(p: &Program) -> Result<()> {
    let names = private_names(p);
    check_block(&p.stmts, &names)
}

fn reject(node: String, reason: &str) -> Error {
    Error::Rejection { node, reason: reason.to_string() }
}

fn check_indices(e: &Expr, names: &HashSet<String>) -> Result<()> {
    let mut node = String::new();
    find_private_index(e, names, &mut node);
    if node.is_empty() {
        Ok(())
    } else {
        Err(reject(node, "index depends on private data"))
    }
}

fn find_private_index(e: &Expr, names: &HashSet<String>, out: &mut String) {
    if !out.is_empty() {
        return;
    }
    if let Expr::Index(_, items) = e {
        if items.iter().flat_map(Idx::exprs).any(|x| is_private(x, names)) {
            *out = e.to_string();
            return;
        }
    }
    for c in e.children() {
        find_private_index(c, names, out);
    }
}

fn check_block(stmts: &[Stmt], names: &HashSet<String>) -> Result<()> {
    for s in stmts {
        for e in s.exprs() {
            check_indices(e, names)?;
        }
        match s {
            Stmt::Assign(Target::Index(_, items), _) => {
                if items.iter().flat_map(Idx::exprs).any(|x| is_private(x, names)) {
                    return Err(reject(s.to_string(), "assignment index depends on private data"));
                }
            }
            Stmt::Loop { start, end, body, .. } => {
                if is_private(start, names) || is_private(end, names) {
                    return Err(reject(s.to_string(), "loop bound depends on private data"));
                }
                check_block(body, names)?;
            }
            Stmt::Branch { cond, then, other } => {
                if is_private(cond, names) {
                    return Err(reject(format!("(if {cond} ...)"), "branch condition depends on private data"));
                }
                check_block(then, names)?;
                check_block(other, names)?;
            }
            _ => {}
        }
    }
    Ok(())
}

/// Elementwise functions a vectorized loop body may call.
const ELEMENTWISE: &[&str] = &["relu", "abs", "logistic_piecewise", "exp", "log", "sqrt", "reciprocal", "div"];

/// Replaces loops whose body assigns `z[.., i, ..] = f(x[.., i, ..], ...)`
/// elementwise with one slice assignment per statement. Inner loops go
/// first, so independent nests vectorize fully.
pub fn vectorize_loops(p: Program) -> Program {
    Program::new(vectorize_block(p.stmts))
}

fn vectorize_block(stmts: Vec<Stmt>) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        match s {
            Stmt::Loop { var, start, end, body } => {
                let body = vectorize_block(body);
                match vectorize_loop(&var, &start, &end, &body) {
                    Some(flat) => out.extend(flat),
                    None => out.push(Stmt::Loop { var, start, end, body }),
                }
            }
            Stmt::Branch { cond, then, other } => {
                out.push(Stmt::Branch { cond, then: vectorize_block(then), other: vectorize_block(other) })
            }
            s => out.push(s),
        }
    }
    out
}

/// Position of the `At(var)` item and the number of items after it, if the
/// list mentions `var` exactly there and nowhere else.
fn loop_axis(items: &[Idx], var: &str) -> Option<Option<(usize, usize)>> {
    let mut found = None;
    for (k, it) in items.iter().enumerate() {
        match it {
            Idx::At(Expr::Var(v)) if v == var => {
                if found.is_some() {
                    return None;
                }
                found = Some((k, items.len() - k - 1));
            }
            it => {
                if it.exprs().iter().any(|e| e.mentions(var)) {
                    return None;
                }
            }
        }
    }
    Some(found)
}

fn vectorize_loop(var: &str, start: &Expr, end: &Expr, body: &[Stmt]) -> Option<Vec<Stmt>> {
    if body.is_empty() {
        return None;
    }
    if let (Expr::Const(s), Expr::Const(e)) = (start, end) {
        if s >= e || s.fract() != 0.0 || e.fract() != 0.0 {
            return None;
        }
    }
    if start.mentions(var) || end.mentions(var) {
        return None;
    }
    let mut targets: Vec<(&str, &[Idx])> = Vec::new();
    let mut key = None;
    for s in body {
        let Stmt::Assign(Target::Index(z, items), _) = s else {
            return None;
        };
        if targets.iter().any(|t| t.0 == z) {
            return None;
        }
        let (_, after) = loop_axis(items, var)??;
        if *key.get_or_insert(after) != after {
            return None;
        }
        if items.iter().flat_map(Idx::exprs).any(|e| body_assigns_any(body, e)) {
            return None;
        }
        targets.push((z, items));
    }
    let key = key?;
    for s in body {
        let Stmt::Assign(_, e) = s else { unreachable!("checked above") };
        if !elementwise_ok(e, var, key, &targets) {
            return None;
        }
    }
    let range = |items: Vec<Idx>| -> Vec<Idx> {
        items
            .into_iter()
            .map(|it| match it {
                Idx::At(Expr::Var(v)) if v == var => Idx::Range(start.clone(), end.clone()),
                it => it,
            })
            .collect()
    };
    let out = body
        .iter()
        .map(|s| {
            let Stmt::Assign(Target::Index(z, items), e) = s else { unreachable!("checked above") };
            let e = e.clone().rewrite(&mut |n| match n {
                Expr::Index(b, items) => Expr::Index(b, range(items)),
                n => n,
            });
            Stmt::Assign(Target::Index(z.clone(), range(items.clone())), e)
        })
        .collect();
    Some(out)
}

fn body_assigns_any(body: &[Stmt], e: &Expr) -> bool {
    body.iter().any(|s| matches!(s, Stmt::Assign(t, _) if e.mentions(t.name())))
}

/// Body expressions may combine loop-indexed reads, constants and
/// loop-invariant slices that sit right of the loop axis.
fn elementwise_ok(e: &Expr, var: &str, key: usize, targets: &[(&str, &[Idx])]) -> bool {
    match e {
        Expr::Const(_) => true,
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Lt(a, b) => {
            elementwise_ok(a, var, key, targets) && elementwise_ok(b, var, key, targets)
        }
        Expr::Neg(a) => elementwise_ok(a, var, key, targets),
        Expr::Call(name, args) if ELEMENTWISE.contains(&name.as_str()) => {
            args.iter().all(|a| elementwise_ok(a, var, key, targets))
        }
        Expr::Index(base, items) => {
            let Expr::Var(x) = base.as_ref() else { return false };
            let assigned = targets.iter().find(|t| t.0 == x);
            match loop_axis(items, var) {
                Some(Some((_, after))) => after == key && assigned.is_none_or(|t| t.1 == items.as_slice()),
                Some(None) => {
                    assigned.is_none()
                        && items.len() <= key
                        && items.iter().all(|i| matches!(i, Idx::Range(..)))
                        && !items.iter().flat_map(Idx::exprs).any(|x| targets.iter().any(|t| x.mentions(t.0)))
                }
                None => false,
            }
        }
        _ => false,
    }
}

/// Flattens a left- or right-nested `add` chain into its terms.
fn sum_terms(e: Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Add(a, b) => {
            sum_terms(*a, out);
            sum_terms(*b, out);
        }
        e => out.push(e),
    }
}

fn sum_of(terms: Vec<Expr>) -> Expr {
    let mut it = terms.into_iter();
    let first = it.next().expect("non-empty sum");
    it.fold(first, Expr::add)
}

/// `x*y1 + x*y2 + ... -> x*(y1 + y2 + ...)` on `add` chains, repeated while
/// some factor is shared by two or more product terms.
pub fn common_factor(p: Program) -> Program {
    p.rewrite_exprs(&mut |e| match e {
        Expr::Add(..) => factor_sum(e),
        e => e,
    })
}

fn factor_sum(e: Expr) -> Expr {
    let original = e.clone();
    let mut terms = Vec::new();
    sum_terms(e, &mut terms);
    let mut changed = false;
    loop {
        let mut best: Option<(Expr, usize)> = None;
        for t in &terms {
            if let Expr::Mul(a, b) = t {
                for f in [a.as_ref(), b.as_ref()] {
                    let count = terms.iter().filter(|u| has_factor(u, f)).count();
                    if count >= 2 && best.as_ref().is_none_or(|b| count > b.1) {
                        best = Some((f.clone(), count));
                    }
                }
            }
        }
        let Some((f, _)) = best else { break };
        let mut cofactors = Vec::new();
        let mut at = None;
        let mut rest = Vec::new();
        for t in terms {
            if has_factor(&t, &f) {
                at.get_or_insert(rest.len());
                let Expr::Mul(a, b) = t else { unreachable!("has_factor matched a product") };
                cofactors.push(if *a == f { *b } else { *a });
            } else {
                rest.push(t);
            }
        }
        rest.insert(at.expect("at least two terms"), Expr::mul(f, sum_of(cofactors)));
        terms = rest;
        changed = true;
    }
    if changed {
        sum_of(terms)
    } else {
        original
    }
}

fn has_factor(t: &Expr, f: &Expr) -> bool {
    matches!(t, Expr::Mul(a, b) if a.as_ref() == f || b.as_ref() == f)
}

/// `x1*y1 + x2*y2 + ... -> packdot((x1 x2 ...), (y1 y2 ...))` for two or more
/// products of private operands in one `add` chain.
pub fn vectorize_expr(p: Program) -> Program {
    let names = private_names(&p);
    p.rewrite_exprs(&mut |e| match e {
        Expr::Add(..) => pack_sum(e, &names),
        e => e,
    })
}

fn pack_sum(e: Expr, names: &HashSet<String>) -> Expr {
    let original = e.clone();
    let mut terms = Vec::new();
    sum_terms(e, &mut terms);
    // packs made for an inner chain merge into this one
    let packable = |t: &Expr| match t {
        Expr::Mul(a, b) => is_private(a, names) && is_private(b, names),
        Expr::PackDot(..) => true,
        _ => false,
    };
    if terms.iter().filter(|t| packable(t)).count() < 2 {
        return original;
    }
    let (mut xs, mut ys, mut rest, mut at) = (Vec::new(), Vec::new(), Vec::new(), None);
    for t in terms {
        if !packable(&t) {
            rest.push(t);
            continue;
        }
        at.get_or_insert(rest.len());
        match t {
            Expr::Mul(a, b) => {
                xs.push(*a);
                ys.push(*b);
            }
            Expr::PackDot(a, b) => {
                xs.extend(a);
                ys.extend(b);
            }
            _ => unreachable!("packable terms are products"),
        }
    }
    rest.insert(at.expect("two products"), Expr::PackDot(xs, ys));
    sum_of(rest)
}

/// All passes in their fixed order.
pub fn optimize(p: Program) -> Result<Program> {
    check_reject(&p)?;
    Ok(vectorize_expr(common_factor(vectorize_loops(p))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::parse::parse_program;

    fn prog(src: &str) -> Program {
        parse_program(src).unwrap()
    }

    #[test]
    fn elementwise_loop_becomes_slice_mul() {
        let p = prog(
            "(assign x (priv x (4)))(assign y (priv y (4)))(assign z (zeros (4)))\n\
             (loop i 0 4 (assign (idx z i) (mul (idx x i) (idx y i))))",
        );
        let v = vectorize_loops(p);
        assert_eq!(
            v.stmts[3].to_string(),
            "(assign (idx z (range 0 4)) (mul (idx x (range 0 4)) (idx y (range 0 4))))"
        );
        assert_eq!(vectorize_loops(v.clone()), v);
    }

    #[test]
    fn dependent_loop_stays() {
        let p = prog("(loop i 1 4 (assign (idx z i) (add (idx z (sub i 1)) (idx x i))))");
        assert_eq!(vectorize_loops(p.clone()), p);
        let scalar = prog("(loop i 0 4 (assign s (add s (idx x i))))");
        assert_eq!(vectorize_loops(scalar.clone()), scalar);
        let uses_index = prog("(loop i 0 4 (assign (idx z i) (mul (idx x i) i)))");
        assert_eq!(vectorize_loops(uses_index.clone()), uses_index);
        let reads_other_slot = prog("(loop i 0 4 (assign (idx z i) (idx x i)) (assign (idx w i) (idx z 0)))");
        assert_eq!(vectorize_loops(reads_other_slot.clone()), reads_other_slot);
    }

    #[test]
    fn nested_loops_vectorize_fully() {
        let p = prog("(loop i 0 2 (loop j 0 3 (assign (idx z i j) (mul (idx x i j) (idx y j)))))");
        let v = vectorize_loops(p);
        assert_eq!(v.stmts.len(), 1);
        assert_eq!(
            v.stmts[0].to_string(),
            "(assign (idx z (range 0 2) (range 0 3)) (mul (idx x (range 0 2) (range 0 3)) (idx y (range 0 3))))"
        );
    }

    #[test]
    fn common_factor_three_terms() {
        let p = prog("(reveal (add (mul x y1) (mul x y2) (mul y3 x)))");
        let f = common_factor(p);
        assert_eq!(f.stmts[0].to_string(), "(reveal (mul x (add (add y1 y2) y3)))");
        assert_eq!(common_factor(f.clone()), f);
        let none = prog("(reveal (add (mul a b) (mul c d)))");
        assert_eq!(common_factor(none.clone()), none);
    }

    #[test]
    fn common_factor_keeps_other_terms_in_place() {
        let p = prog("(reveal (add q (mul x a) r (mul b x)))");
        assert_eq!(common_factor(p).stmts[0].to_string(), "(reveal (add (add q (mul x (add a b))) r))");
    }

    #[test]
    fn products_pack_into_one_dot() {
        let p = prog(
            "(assign a (priv a ()))(assign b (priv b ()))(assign c (priv c (2)))(assign d (priv d (2)))\n\
             (reveal (add (mul a b) (mul c d) (mul a 3)))",
        );
        let v = vectorize_expr(p);
        assert_eq!(v.stmts[4].to_string(), "(reveal (add (packdot (a c) (b d)) (mul a 3)))");
        assert_eq!(vectorize_expr(v.clone()), v);
        let single = prog("(assign a (priv a ()))(reveal (add (mul a a) 1))");
        assert_eq!(vectorize_expr(single.clone()), single);
    }

    #[test]
    fn rejects_private_branches_transitively() {
        let direct = prog("(if (lt (priv x ()) 0) (then (reveal 1)))");
        match check_reject(&direct) {
            Err(Error::Rejection { node, .. }) => assert!(node.contains("lt")),
            other => panic!("{other:?}"),
        }
        let hidden = prog("(assign a (add (priv x ()) 1))(assign b (add a 2))(if b (then (reveal b)))");
        assert!(matches!(check_reject(&hidden), Err(Error::Rejection { .. })));
        let later = prog("(if c (then (reveal 1)))(loop i 0 2 (assign c (priv x ())))");
        assert!(check_reject(&later).is_err());
        let public = prog("(if (pub flag ()) (then (reveal (priv x ()))) (else (reveal 0)))");
        check_reject(&public).unwrap();
        let index = prog("(assign k (priv k ()))(reveal (idx v k))");
        assert!(check_reject(&index).is_err());
        let bound = prog("(loop i 0 (priv n ()) (reveal i))");
        assert!(check_reject(&bound).is_err());
    }
}
