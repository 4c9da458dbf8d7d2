//! Executes a program on the engine. Private inputs are shared by client 0
//! before the compute phase; reveals open to client 0 after it.

use std::collections::BTreeMap;

use super::ir::{Expr, Idx, Program, Stmt, Target};
use super::passes::check_reject;
use crate::derived::IterParams;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::netsim::NetStats;
use crate::sharing::SharedVec;
use crate::tensor::{broadcast, Sel, Shape, ShareTensor, Tensor};

#[derive(Clone, Debug)]
pub enum Value {
    Public(Tensor),
    Private(ShareTensor),
}

/// Cleartext inputs by name.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    pub private: BTreeMap<String, Tensor>,
    pub public: BTreeMap<String, Tensor>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    /// Revealed values in program order, labelled by variable name or by the
    /// revealed expression.
    pub outputs: Vec<(String, Tensor)>,
    /// Traffic between input sharing and the final reveals.
    pub compute: NetStats,
}

impl Outcome {
    pub fn output(&self, label: &str) -> Option<&Tensor> {
        self.outputs.iter().find(|o| o.0 == label).map(|o| &o.1)
    }
}

pub fn interpret(e: &mut Engine, p: &Program, b: &Bindings) -> Result<Outcome> {
    check_reject(p)?;
    let mut inputs = BTreeMap::new();
    let mut declared = Vec::new();
    for s in &p.stmts {
        collect_priv(s, &mut declared);
    }
    for (name, shape) in declared {
        let t = b.private.get(&name).ok_or_else(|| Error::Eval(format!("no private input `{name}`")))?;
        if t.shape != shape {
            return Err(Error::shape(0, format!("input `{name}` is {} but declared {shape}", t.shape)));
        }
        if !inputs.contains_key(&name) {
            inputs.insert(name, ShareTensor::input(e, 0, t)?);
        }
    }
    let before = e.stats();
    let mut run = Run { e, inputs, bindings: b, env: BTreeMap::new(), reveals: Vec::new() };
    run.block(&p.stmts)?;
    let compute = NetStats::diff(&before, &run.e.stats());
    let mut outputs = Vec::with_capacity(run.reveals.len());
    for (label, v) in std::mem::take(&mut run.reveals) {
        let t = match v {
            Value::Public(t) => t,
            Value::Private(s) => s.reveal(run.e)?,
        };
        outputs.push((label, t));
    }
    Ok(Outcome { outputs, compute })
}

fn collect_priv(s: &Stmt, out: &mut Vec<(String, Shape)>) {
    let mut visit = |e: &Expr| {
        let mut stack = vec![e];
        while let Some(n) = stack.pop() {
            if let Expr::Priv(name, shape) = n {
                out.push((name.clone(), shape.clone()));
            }
            stack.extend(n.children());
        }
    };
    for e in s.exprs() {
        visit(e);
    }
    match s {
        Stmt::Loop { body, .. } => body.iter().for_each(|s| collect_priv(s, out)),
        Stmt::Branch { then, other, .. } => then.iter().chain(other).for_each(|s| collect_priv(s, out)),
        _ => {}
    }
}

struct Run<'a> {
    e: &'a mut Engine,
    inputs: BTreeMap<String, ShareTensor>,
    bindings: &'a Bindings,
    env: BTreeMap<String, Value>,
    reveals: Vec<(String, Value)>,
}

fn eval_err(msg: impl Into<String>) -> Error {
    Error::Eval(msg.into())
}

impl Run<'_> {
    fn block(&mut self, stmts: &[Stmt]) -> Result<()> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<()> {
        match s {
            Stmt::Assign(Target::Name(n), x) => {
                let v = self.expr(x)?;
                self.env.insert(n.clone(), v);
            }
            Stmt::Assign(Target::Index(n, items), x) => {
                let sel = self.selection(items)?;
                let v = self.expr(x)?;
                let cur = self.env.remove(n).ok_or_else(|| eval_err(format!("assignment into undefined `{n}`")))?;
                let next = match (cur, v) {
                    (Value::Public(mut t), Value::Public(v)) => {
                        t.assign(&sel, &v)?;
                        Value::Public(t)
                    }
                    (cur, v) => Value::Private(self.lift(cur)?.assign(&sel, &self.lift(v)?)?),
                };
                self.env.insert(n.clone(), next);
            }
            Stmt::Loop { var, start, end, body } => {
                let (s, t) = (self.index_scalar(start)?, self.index_scalar(end)?);
                let saved = self.env.remove(var);
                for i in s..t {
                    self.env.insert(var.clone(), Value::Public(Tensor::scalar(i as f64)));
                    self.block(body)?;
                }
                self.env.remove(var);
                if let Some(v) = saved {
                    self.env.insert(var.clone(), v);
                }
            }
            Stmt::Branch { cond, then, other } => {
                let c = match self.expr(cond)? {
                    Value::Public(t) if t.data.len() == 1 => t.data[0] != 0.0,
                    Value::Public(t) => return Err(eval_err(format!("branch condition has shape {}", t.shape))),
                    Value::Private(_) => return Err(eval_err(format!("branch condition `{cond}` is private"))),
                };
                self.block(if c { then } else { other })?;
            }
            Stmt::Reveal(x) => {
                let v = self.expr(x)?;
                let label = match x {
                    Expr::Var(n) => n.clone(),
                    x => x.to_string(),
                };
                self.reveals.push((label, v));
            }
        }
        Ok(())
    }

    fn lift(&self, v: Value) -> Result<ShareTensor> {
        match v {
            Value::Private(s) => Ok(s),
            Value::Public(t) => ShareTensor::public(self.e, &t),
        }
    }

    fn public(&mut self, x: &Expr) -> Result<Tensor> {
        match self.expr(x)? {
            Value::Public(t) => Ok(t),
            Value::Private(_) => Err(eval_err(format!("`{x}` must be public"))),
        }
    }

    fn scalar(&mut self, x: &Expr) -> Result<f64> {
        let t = self.public(x)?;
        match t.data.as_slice() {
            [v] => Ok(*v),
            _ => Err(eval_err(format!("`{x}` must be a scalar, has shape {}", t.shape))),
        }
    }

    fn index_scalar(&mut self, x: &Expr) -> Result<usize> {
        let v = self.scalar(x)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(eval_err(format!("`{x}` = {v} is not a valid index")));
        }
        Ok(v as usize)
    }

    fn selection(&mut self, items: &[Idx]) -> Result<Vec<Sel>> {
        items
            .iter()
            .map(|i| match i {
                Idx::At(x) => Ok(Sel::At(self.index_scalar(x)?)),
                Idx::Range(s, t) => Ok(Sel::Range(self.index_scalar(s)?, self.index_scalar(t)?)),
            })
            .collect()
    }

    fn expr(&mut self, x: &Expr) -> Result<Value> {
        Ok(match x {
            Expr::Const(v) => Value::Public(Tensor::scalar(*v)),
            Expr::Dims(_) => return Err(eval_err(format!("dimension list `{x}` used as a value"))),
            Expr::Var(n) => self.env.get(n).cloned().ok_or_else(|| eval_err(format!("undefined `{n}`")))?,
            Expr::Priv(n, _) => Value::Private(self.inputs[n].clone()),
            Expr::Pub(n, shape) => {
                let t = self.bindings.public.get(n).ok_or_else(|| eval_err(format!("no public input `{n}`")))?;
                if &t.shape != shape {
                    return Err(Error::shape(0, format!("input `{n}` is {} but declared {shape}", t.shape)));
                }
                Value::Public(t.clone())
            }
            Expr::Add(a, b) => {
                let (a, b) = (self.expr(a)?, self.expr(b)?);
                self.add(a, b)?
            }
            Expr::Sub(a, b) => {
                let (a, b) = (self.expr(a)?, self.expr(b)?);
                self.add(a, neg(b))?
            }
            Expr::Neg(a) => neg(self.expr(a)?),
            Expr::Mul(a, b) => {
                let (a, b) = (self.expr(a)?, self.expr(b)?);
                self.mul(a, b)?
            }
            Expr::Lt(a, b) => match (self.expr(a)?, self.expr(b)?) {
                (Value::Public(a), Value::Public(b)) => {
                    Value::Public(a.zip_with(&b, |x, y| if x < y { 1.0 } else { 0.0 })?)
                }
                (a, b) => {
                    let (a, b) = (self.lift(a)?, self.lift(b)?);
                    Value::Private(a.lt(self.e, &b)?)
                }
            },
            Expr::Dot(a, b) => match (self.expr(a)?, self.expr(b)?) {
                (Value::Public(a), Value::Public(b)) => Value::Public(a.dot(&b)?),
                (Value::Private(a), Value::Public(b)) => Value::Private(a.dot_public(&b, false)?),
                (Value::Public(a), Value::Private(b)) => Value::Private(b.dot_public(&a, true)?),
                (Value::Private(a), Value::Private(b)) => Value::Private(a.dot(self.e, &b)?),
            },
            Expr::PackDot(xs, ys) => self.packdot(xs, ys)?,
            Expr::Index(base, items) => {
                let sel = self.selection(items)?;
                match self.expr(base)? {
                    Value::Public(t) => Value::Public(t.index(&sel)?),
                    Value::Private(s) => Value::Private(s.index(&sel)?),
                }
            }
            Expr::Call(name, args) => self.call(name, args)?,
        })
    }

    fn add(&self, a: Value, b: Value) -> Result<Value> {
        Ok(match (a, b) {
            (Value::Public(a), Value::Public(b)) => Value::Public(a.zip_with(&b, |x, y| x + y)?),
            (Value::Private(s), Value::Public(t)) | (Value::Public(t), Value::Private(s)) => {
                Value::Private(s.add_public(self.e, &t)?)
            }
            (Value::Private(a), Value::Private(b)) => Value::Private(a.add(&b)?),
        })
    }

    fn mul(&mut self, a: Value, b: Value) -> Result<Value> {
        Ok(match (a, b) {
            (Value::Public(a), Value::Public(b)) => Value::Public(a.zip_with(&b, |x, y| x * y)?),
            (Value::Private(s), Value::Public(t)) | (Value::Public(t), Value::Private(s)) => {
                Value::Private(s.mul_public(self.e, &t)?)
            }
            (Value::Private(a), Value::Private(b)) => Value::Private(a.mul(self.e, &b)?),
        })
    }

    /// Private pairs share one multiplication round and one truncation per
    /// output element; pairs with a public side are local.
    fn packdot(&mut self, xs: &[Expr], ys: &[Expr]) -> Result<Value> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(eval_err("packdot needs two equally long non-empty lists"));
        }
        let mut pairs = Vec::new();
        let mut shape = Shape::scalar();
        for (x, y) in xs.iter().zip(ys) {
            let (a, b) = (self.expr(x)?, self.expr(y)?);
            shape = broadcast(&shape, &broadcast(value_shape(&a), value_shape(&b))?)?;
            pairs.push((a, b));
        }
        let mut private = Vec::new();
        let mut acc: Option<Value> = None;
        for (a, b) in pairs {
            match (a, b) {
                (Value::Private(a), Value::Private(b)) => {
                    private.push((a.broadcast_to(&shape)?.into_data(), b.broadcast_to(&shape)?.into_data()));
                }
                (a, b) => {
                    let term = self.mul(a, b)?;
                    acc = Some(match acc {
                        Some(s) => self.add(s, term)?,
                        None => term,
                    });
                }
            }
        }
        if !private.is_empty() {
            let terms: Vec<(&SharedVec, &SharedVec)> = private.iter().map(|(a, b)| (a, b)).collect();
            let sum = Value::Private(ShareTensor::new(shape.clone(), self.e.mul_accumulate(&terms)?)?);
            acc = Some(match acc {
                Some(s) => self.add(s, sum)?,
                None => sum,
            });
        }
        let out = acc.expect("at least one pair");
        // public-only terms may not cover the full packed shape
        Ok(match out {
            Value::Public(t) => Value::Public(Tensor::new(shape.clone(), t.expand(&shape))?),
            Value::Private(s) => Value::Private(s.broadcast_to(&shape)?),
        })
    }

    fn dims(&self, x: &Expr) -> Result<Vec<usize>> {
        match x {
            Expr::Dims(d) => Ok(d.clone()),
            Expr::Const(v) if *v >= 0.0 && v.fract() == 0.0 => Ok(vec![*v as usize]),
            x => Err(eval_err(format!("expected a dimension list, found `{x}`"))),
        }
    }

    fn opt_axis(&mut self, args: &[Expr], i: usize) -> Result<Option<usize>> {
        args.get(i).map(|a| self.index_scalar(a)).transpose()
    }

    fn call(&mut self, name: &str, args: &[Expr]) -> Result<Value> {
        match name {
            "zeros" => return Ok(Value::Public(Tensor::filled(self.dims(&args[0])?, 0.0))),
            "ones" => return Ok(Value::Public(Tensor::filled(self.dims(&args[0])?, 1.0))),
            "div" => {
                let (y, x) = (self.expr(&args[0])?, self.expr(&args[1])?);
                return match x {
                    Value::Public(x) => self.mul(y, Value::Public(x.map(|v| 1.0 / v))),
                    Value::Private(x) => {
                        let r = x.map(self.e, |e, v| e.reciprocal(v, IterParams::reciprocal()))?;
                        self.mul(y, Value::Private(r))
                    }
                };
            }
            _ => {}
        }
        let v = self.expr(&args[0])?;
        let axis = |run: &mut Self| run.opt_axis(args, 1);
        Ok(match name {
            "transpose" => {
                let axes = args.get(1).map(|a| self.dims(a)).transpose()?;
                layout(v, |t| t.transpose(axes.as_deref()), |s| s.transpose(axes.as_deref()))?
            }
            "flatten" => layout(v, |t| Ok(t.flatten()), |s| Ok(s.flatten()))?,
            "reshape" => {
                let d: Vec<Option<usize>> = self.dims(&args[1])?.into_iter().map(Some).collect();
                layout(v, |t| t.reshape(&d), |s| s.reshape(&d))?
            }
            "repeat" => {
                let r = self.index_scalar(&args[1])?;
                let ax = self.opt_axis(args, 2)?;
                layout(v, |t| t.repeat(r, ax), |s| s.repeat(r, ax))?
            }
            "tile" => {
                let reps = self.dims(&args[1])?;
                layout(v, |t| Ok(t.tile(&reps)), |s| Ok(s.tile(&reps)))?
            }
            "sum" => {
                let ax = axis(self)?;
                layout(v, |t| t.reduce(ax, |r| r.iter().sum()), |s| s.sum(ax))?
            }
            "mean" => {
                let ax = axis(self)?;
                match v {
                    Value::Public(t) => {
                        let probe = t.reduce(ax, |r| r.len() as f64)?;
                        if probe.data.first().is_some_and(|c| *c == 0.0) {
                            return Err(Error::EmptyAxis(ax.unwrap_or(0)));
                        }
                        Value::Public(t.reduce(ax, |r| r.iter().sum::<f64>() / r.len() as f64)?)
                    }
                    Value::Private(s) => Value::Private(s.mean(self.e, ax)?),
                }
            }
            "max" | "min" | "argmax" | "argmin" => {
                let ax = axis(self)?;
                match v {
                    Value::Public(t) => Value::Public(t.reduce(ax, |r| public_extreme(name, r))?),
                    Value::Private(s) => Value::Private(match name {
                        "max" => s.max(self.e, ax)?,
                        "min" => s.min(self.e, ax)?,
                        "argmax" => s.argmax(self.e, ax)?,
                        _ => s.argmin(self.e, ax)?,
                    }),
                }
            }
            "clip" => {
                let (lo, hi) = (self.scalar(&args[1])?, self.scalar(&args[2])?);
                match v {
                    Value::Public(t) => Value::Public(t.map(|x| x.clamp(lo, hi))),
                    Value::Private(s) => Value::Private(s.clip(self.e, lo, hi)?),
                }
            }
            "logistic" => {
                let mut p = IterParams::logistic();
                if let Some(a) = args.get(1) {
                    p.start = self.scalar(a)?;
                }
                if let Some(a) = args.get(2) {
                    p.iter_cnt = self.index_scalar(a)? as u32;
                }
                match v {
                    Value::Public(t) => Value::Public(t.map(|x| 1.0 / (1.0 + (-x).exp()))),
                    Value::Private(s) => Value::Private(s.map(self.e, |e, x| e.logistic(x, p))?),
                }
            }
            _ => self.elementwise(name, v)?,
        })
    }

    fn elementwise(&mut self, name: &str, v: Value) -> Result<Value> {
        let s = match v {
            Value::Public(t) => {
                let f: fn(f64) -> f64 = match name {
                    "relu" => |x| x.max(0.0),
                    "abs" => f64::abs,
                    "logistic_piecewise" => |x| (x + 0.5).clamp(0.0, 1.0),
                    "exp" => f64::exp,
                    "log" => f64::ln,
                    "sqrt" => f64::sqrt,
                    "reciprocal" => f64::recip,
                    _ => return Err(eval_err(format!("unknown function `{name}`"))),
                };
                return Ok(Value::Public(t.map(f)));
            }
            Value::Private(s) => s,
        };
        let e = &mut *self.e;
        Ok(Value::Private(match name {
            "relu" => s.map(e, |e, x| e.relu(x))?,
            "abs" => s.map(e, |e, x| e.abs(x))?,
            "logistic_piecewise" => s.map(e, |e, x| e.logistic_piecewise(x))?,
            "exp" => s.map(e, |e, x| e.exp(x, IterParams::exp()))?,
            "log" => s.map(e, |e, x| e.log(x, IterParams::log()))?,
            "sqrt" => s.map(e, |e, x| e.sqrt(x, IterParams::sqrt()))?,
            "reciprocal" => s.map(e, |e, x| e.reciprocal(x, IterParams::reciprocal()))?,
            _ => return Err(eval_err(format!("unknown function `{name}`"))),
        }))
    }
}

fn neg(v: Value) -> Value {
    match v {
        Value::Public(t) => Value::Public(t.map(|x| -x)),
        Value::Private(s) => Value::Private(s.neg()),
    }
}

fn value_shape(v: &Value) -> &Shape {
    match v {
        Value::Public(t) => &t.shape,
        Value::Private(s) => s.shape(),
    }
}

fn layout(
    v: Value,
    public: impl FnOnce(&Tensor) -> Result<Tensor>,
    private: impl FnOnce(&ShareTensor) -> Result<ShareTensor>,
) -> Result<Value> {
    Ok(match v {
        Value::Public(t) => Value::Public(public(&t)?),
        Value::Private(s) => Value::Private(private(&s)?),
    })
}

/// First extreme wins ties, as in the shared tournament.
fn public_extreme(name: &str, row: &[f64]) -> f64 {
    let better = |a: f64, b: f64| if name.ends_with("max") { a > b } else { a < b };
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if better(*v, row[best]) {
            best = i;
        }
    }
    match name {
        "max" | "min" => row[best],
        _ => best as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineConfig;
    use crate::optimizer::parse::parse_program;

    fn run(src: &str, b: &Bindings) -> Result<Outcome> {
        let mut e = Engine::new(EngineConfig::default().with_seed(5));
        interpret(&mut e, &parse_program(src)?, b)
    }

    fn bind(private: &[(&str, Tensor)], public: &[(&str, Tensor)]) -> Bindings {
        Bindings {
            private: private.iter().map(|(n, t)| (n.to_string(), t.clone())).collect(),
            public: public.iter().map(|(n, t)| (n.to_string(), t.clone())).collect(),
        }
    }

    #[test]
    fn empty_program_has_no_outputs() {
        let out = run("# nothing here\n", &Bindings::default()).unwrap();
        assert!(out.outputs.is_empty());
        assert_eq!(out.compute.total_rounds, 0);
    }

    #[test]
    fn elementwise_mul_program() {
        let b = bind(
            &[("x", Tensor::new([2], vec![1.0, 2.0]).unwrap()), ("y", Tensor::new([2], vec![3.0, 4.0]).unwrap())],
            &[],
        );
        let out = run("(assign z (mul (priv x (2)) (priv y (2))))\n(reveal z)", &b).unwrap();
        assert_eq!(out.output("z").unwrap().data, vec![3.0, 8.0]);
        assert_eq!(out.compute.total_rounds, 1);
    }

    #[test]
    fn mixed_public_and_private() {
        let b = bind(
            &[("x", Tensor::new([3], vec![1.0, -2.0, 3.0]).unwrap())],
            &[("w", Tensor::new([3], vec![2.0, 2.0, 2.0]).unwrap())],
        );
        let src = "(assign x (priv x (3)))(assign w (pub w (3)))\n\
                   (reveal (sub 10 x))(reveal (mul w x))(reveal (add w 1))(reveal (lt x w))(reveal (dot w x))";
        let out = run(src, &b).unwrap();
        let vals: Vec<Vec<f64>> = out.outputs.iter().map(|o| o.1.data.clone()).collect();
        assert_eq!(vals[0], vec![9.0, 12.0, 7.0]);
        assert_eq!(vals[1], vec![2.0, -4.0, 6.0]);
        assert_eq!(vals[2], vec![3.0, 3.0, 3.0]);
        assert_eq!(vals[3], vec![1.0, 1.0, 0.0]);
        assert!((vals[4][0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn indexed_assignment_and_loops() {
        let b = bind(&[("x", Tensor::new([4], vec![1.0, 2.0, 3.0, 4.0]).unwrap())], &[]);
        let src = "(assign x (priv x (4)))(assign z (zeros (4)))\n\
                   (loop i 1 4 (assign (idx z i) (add (idx z (sub i 1)) (idx x i))))\n(reveal z)";
        let out = run(src, &b).unwrap();
        assert_eq!(out.output("z").unwrap().data, vec![0.0, 2.0, 5.0, 9.0]);
        assert_eq!(out.compute.total_rounds, 0);
    }

    #[test]
    fn branch_on_public_flag_runs_one_side() {
        let b = bind(&[("x", Tensor::scalar(2.0))], &[("flag", Tensor::scalar(0.0))]);
        let src = "(if (pub flag ()) (then (reveal (mul (priv x ()) 2))) (else (reveal (mul (priv x ()) 3))))";
        let out = run(src, &b).unwrap();
        assert_eq!(out.outputs[0].1.data, vec![6.0]);
    }

    #[test]
    fn private_branch_is_rejected_before_sharing() {
        let b = bind(&[("x", Tensor::scalar(2.0))], &[]);
        let mut e = Engine::new(EngineConfig::default());
        let p = parse_program("(if (lt (priv x ()) 0) (then (reveal 1)))").unwrap();
        assert!(matches!(interpret(&mut e, &p, &b), Err(Error::Rejection { .. })));
        assert_eq!(e.stats().total_messages(), 0);
    }

    #[test]
    fn missing_or_misshaped_inputs() {
        assert!(matches!(run("(reveal (priv x (2)))", &Bindings::default()), Err(Error::Eval(_))));
        let b = bind(&[("x", Tensor::new([3], vec![0.0; 3]).unwrap())], &[]);
        assert!(matches!(run("(reveal (priv x (2)))", &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn packdot_mixes_shapes_in_one_round() {
        let b = bind(
            &[
                ("a", Tensor::scalar(2.0)),
                ("b", Tensor::scalar(3.0)),
                ("c", Tensor::new([2], vec![1.0, -1.0]).unwrap()),
                ("d", Tensor::new([2], vec![4.0, 5.0]).unwrap()),
            ],
            &[],
        );
        let src = "(reveal (packdot ((priv a ()) (priv c (2)) (priv a ())) ((priv b ()) (priv d (2)) 0.5)))";
        let out = run(src, &b).unwrap();
        let got = &out.outputs[0].1;
        assert_eq!(got.shape.dims(), &[2]);
        for (g, w) in got.data.iter().zip([11.0, 2.0]) {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
        assert_eq!(out.compute.total_rounds, 1);
    }

    #[test]
    fn calls_match_cleartext() {
        let x = Tensor::new([2, 3], vec![1.0, -5.0, 2.0, 0.5, 4.0, -1.0]).unwrap();
        let b = bind(&[("x", x.clone())], &[("p", x.clone())]);
        let fns = [
            "(relu X)",
            "(abs X)",
            "(clip X -1 1)",
            "(sum X 0)",
            "(mean X 1)",
            "(max X 1)",
            "(argmin X 0)",
            "(transpose X)",
            "(repeat X 2 1)",
            "(tile X (2 1))",
            "(reshape X (3 2))",
            "(flatten X)",
            "(logistic_piecewise X)",
        ];
        for f in fns {
            let src = format!("{}\n{}", f.replace('X', "(priv x (2 3))"), f.replace('X', "(pub p (2 3))"));
            let src = src.lines().map(|l| format!("(reveal {l})")).collect::<Vec<_>>().join("\n");
            let out = run(&src, &b).unwrap();
            let (s, p) = (&out.outputs[0].1, &out.outputs[1].1);
            assert_eq!(s.shape, p.shape, "{f}");
            for (a, c) in s.data.iter().zip(&p.data) {
                assert!((a - c).abs() < 1e-9, "{f}: {a} vs {c}");
            }
        }
    }
}
