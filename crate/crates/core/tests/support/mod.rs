//! Helpers shared by the optimizer tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;

use quadshare::optimizer::{interpret, parse_program, Bindings, CostModel, CostReport, Expr, Program, Stmt};
use quadshare::{Engine, EngineConfig, Shape, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn load(name: &str) -> Program {
    let path = format!("{}/../../programs/{name}.qs", env!("CARGO_MANIFEST_DIR"));
    parse_program(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every private input the program declares, with its shape.
pub fn declared(p: &Program) -> BTreeMap<String, Shape> {
    fn walk(e: &Expr, out: &mut BTreeMap<String, Shape>) {
        if let Expr::Priv(n, s) = e {
            out.insert(n.clone(), s.clone());
        }
        e.children().into_iter().for_each(|c| walk(c, out));
    }
    fn stmts(ss: &[Stmt], out: &mut BTreeMap<String, Shape>) {
        for s in ss {
            s.exprs().into_iter().for_each(|e| walk(e, out));
            match s {
                Stmt::Loop { body, .. } => stmts(body, out),
                Stmt::Branch { then, other, .. } => {
                    stmts(then, out);
                    stmts(other, out);
                }
                _ => {}
            }
        }
    }
    let mut out = BTreeMap::new();
    stmts(&p.stmts, &mut out);
    out
}

pub fn random_bindings(p: &Program, rng: &mut ChaCha8Rng, range: f64) -> Bindings {
    let mut b = Bindings::default();
    for (name, shape) in declared(p) {
        let data = (0..shape.len()).map(|_| rng.gen_range(-range..range)).collect();
        b.private.insert(name, Tensor::new(shape, data).unwrap());
    }
    b
}

pub fn cost(p: &Program) -> CostReport {
    CostModel::new(&EngineConfig::default()).estimate(p).unwrap()
}

pub fn run(p: &Program, b: &Bindings, seed: u64) -> Vec<Tensor> {
    let mut e = Engine::new(EngineConfig::default().with_seed(seed));
    interpret(&mut e, p, b).unwrap().outputs.into_iter().map(|o| o.1).collect()
}

/// Largest elementwise gap, or infinity on a shape mismatch.
pub fn max_diff(a: &[Tensor], b: &[Tensor]) -> f64 {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.shape != y.shape) {
        return f64::INFINITY;
    }
    a.iter().zip(b).flat_map(|(x, y)| x.data.iter().zip(&y.data).map(|(u, v)| (u - v).abs())).fold(0.0, f64::max)
}

pub fn assert_close(a: &[Tensor], b: &[Tensor], tol: f64, what: &str) {
    assert_eq!(a.len(), b.len(), "{what}");
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.shape, y.shape, "{what}");
        for (u, v) in x.data.iter().zip(&y.data) {
            assert!((u - v).abs() <= tol, "{what}: {u} vs {v} (tol {tol:e})");
        }
    }
}

/// One truncation is off by at most two units in the last place.
pub fn truncations(k: usize) -> f64 {
    2.0 * k as f64 * EngineConfig::default().ring.ulp()
}

/// Random straight-line program over private, public and constant leaves,
/// ending in a branch on one assigned name. Returns the program and
/// whether the condition is private per a direct forward propagation.
pub fn random_dag(rng: &mut ChaCha8Rng, want_private: Option<bool>) -> (String, bool) {
    loop {
        let mut src = String::new();
        let mut tainted: Vec<bool> = Vec::new();
        let n = rng.gen_range(3..10);
        for k in 0..n {
            let operand = |rng: &mut ChaCha8Rng| -> (String, bool) {
                match rng.gen_range(0..5) {
                    0 => (format!("(priv p{} ())", rng.gen_range(0..3)), true),
                    1 => (format!("(pub q{} ())", rng.gen_range(0..3)), false),
                    2 => (format!("{}", rng.gen_range(-3..4)), false),
                    _ if k > 0 => {
                        let j = rng.gen_range(0..k);
                        (format!("v{j}"), tainted[j])
                    }
                    _ => ("1".into(), false),
                }
            };
            let (a, ta) = operand(rng);
            let (b, tb) = operand(rng);
            let (e, t) = match rng.gen_range(0..4) {
                0 => (format!("(add {a} {b})"), ta || tb),
                1 => (format!("(sub {a} {b})"), ta || tb),
                2 => (format!("(mul {a} 0.5)"), ta),
                _ => (format!("(neg {b})"), tb),
            };
            src.push_str(&format!("(assign v{k} {e})\n"));
            tainted.push(t);
        }
        let c = rng.gen_range(0..n);
        if want_private.is_some_and(|w| w != tainted[c]) {
            continue;
        }
        src.push_str(&format!("(if (lt v{c} 1) (then (reveal v0)) (else (reveal (neg v0))))\n"));
        return (src, tainted[c]);
    }
}
