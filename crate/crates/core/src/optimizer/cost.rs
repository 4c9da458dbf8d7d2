//! Static cost estimate from the per-operation table. Rounds add up in
//! program order; messages are the busiest server's count per operation.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use super::ir::{Expr, Idx, Program, Stmt, Target};
use super::passes::{is_private, private_names};
use crate::derived::IterParams;
use crate::engine::{EngineConfig, ExtractionMode};
use crate::error::{Error, Result};
use crate::tensor::{broadcast, Sel, Shape, Tensor};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostReport {
    /// Private products, a packed product sum counting once.
    pub mul_count: u64,
    /// Private matrix products.
    pub dot_count: u64,
    pub round_estimate: u64,
    /// Messages sent by the busiest server.
    pub message_estimate: u64,
}

impl CostReport {
    fn op(rounds: u64, messages: u64) -> Self {
        CostReport { round_estimate: rounds, message_estimate: messages, ..Default::default() }
    }

    fn plus(self, o: CostReport) -> Self {
        CostReport {
            mul_count: self.mul_count + o.mul_count,
            dot_count: self.dot_count + o.dot_count,
            round_estimate: self.round_estimate + o.round_estimate,
            message_estimate: self.message_estimate + o.message_estimate,
        }
    }

    fn times(self, k: u64) -> Self {
        CostReport {
            mul_count: self.mul_count * k,
            dot_count: self.dot_count * k,
            round_estimate: self.round_estimate * k,
            message_estimate: self.message_estimate * k,
        }
    }

    fn max(self, o: CostReport) -> Self {
        CostReport {
            mul_count: self.mul_count.max(o.mul_count),
            dot_count: self.dot_count.max(o.dot_count),
            round_estimate: self.round_estimate.max(o.round_estimate),
            message_estimate: self.message_estimate.max(o.message_estimate),
        }
    }
}

const MUL: CostReport = CostReport { mul_count: 1, dot_count: 0, round_estimate: 1, message_estimate: 2 };
const DOT: CostReport = CostReport { mul_count: 0, dot_count: 1, round_estimate: 1, message_estimate: 2 };

#[derive(Clone, Debug)]
pub struct CostModel {
    pub n: u32,
    pub extraction: ExtractionMode,
    /// Values for public scalars that loop bounds or index ranges name.
    pub symbols: BTreeMap<String, f64>,
}

impl CostModel {
    pub fn new(cfg: &EngineConfig) -> Self {
        CostModel { n: cfg.ring.n, extraction: cfg.extraction, symbols: BTreeMap::new() }
    }

    pub fn with_symbol(mut self, name: &str, v: f64) -> Self {
        self.symbols.insert(name.to_string(), v);
        self
    }

    /// Rounds and busiest-server messages of one sign extraction over the
    /// full ring.
    pub fn extraction(&self) -> CostReport {
        let k = self.n as u64;
        match self.extraction {
            ExtractionMode::Ripple | ExtractionMode::RippleHalf => CostReport::op(k + 1, k + 1),
            ExtractionMode::Ppa => {
                let r = 2 + (k - 1).next_power_of_two().trailing_zeros() as u64;
                CostReport::op(r, 2 * r)
            }
        }
    }

    /// Extraction followed by one oblivious selection.
    fn select(&self) -> CostReport {
        self.extraction().plus(CostReport::op(1, 4))
    }

    fn muls(k: u64) -> CostReport {
        CostReport::op(k, 2 * k)
    }

    pub fn estimate(&self, p: &Program) -> Result<CostReport> {
        let mut w =
            Walk { model: self, private: private_names(p), consts: self.symbols.clone(), shapes: BTreeMap::new() };
        w.block(&p.stmts)
    }
}

struct Walk<'a> {
    model: &'a CostModel,
    private: HashSet<String>,
    consts: BTreeMap<String, f64>,
    shapes: BTreeMap<String, Option<Shape>>,
}

impl Walk<'_> {
    fn block(&mut self, stmts: &[Stmt]) -> Result<CostReport> {
        let mut total = CostReport::default();
        for s in stmts {
            total = total.plus(self.stmt(s)?);
        }
        Ok(total)
    }

    fn stmt(&mut self, s: &Stmt) -> Result<CostReport> {
        match s {
            Stmt::Assign(t, e) => {
                let c = self.expr(e)?;
                if let Target::Name(n) = t {
                    let shape = self.shape(e);
                    self.shapes.insert(n.clone(), shape);
                    match (e, self.private.contains(n)) {
                        (Expr::Const(v), false) => self.consts.insert(n.clone(), *v),
                        _ => self.consts.remove(n),
                    };
                }
                Ok(c)
            }
            Stmt::Loop { var, start, end, body } => {
                let (s, e) = (self.scalar(start)?, self.scalar(end)?);
                let trips = (e - s).max(0.0) as u64;
                self.shapes.insert(var.clone(), Some(Shape::scalar()));
                // bounds are fixed per loop, the body is costed once
                let saved = self.consts.remove(var);
                let body = self.block(body)?;
                if let Some(v) = saved {
                    self.consts.insert(var.clone(), v);
                }
                Ok(body.times(trips))
            }
            Stmt::Branch { then, other, .. } => Ok(self.block(then)?.max(self.block(other)?)),
            Stmt::Reveal(e) => self.expr(e),
        }
    }

    fn scalar(&self, e: &Expr) -> Result<f64> {
        match e {
            Expr::Const(v) => Ok(*v),
            Expr::Var(v) => self.consts.get(v).copied().ok_or_else(|| Error::Eval(format!("no value known for `{v}`"))),
            Expr::Add(a, b) => Ok(self.scalar(a)? + self.scalar(b)?),
            Expr::Sub(a, b) => Ok(self.scalar(a)? - self.scalar(b)?),
            Expr::Mul(a, b) => Ok(self.scalar(a)? * self.scalar(b)?),
            e => Err(Error::Eval(format!("cannot size `{e}` statically"))),
        }
    }

    fn private(&self, e: &Expr) -> bool {
        is_private(e, &self.private)
    }

    fn expr(&self, e: &Expr) -> Result<CostReport> {
        let mut total = CostReport::default();
        for c in e.children() {
            total = total.plus(self.expr(c)?);
        }
        let m = self.model;
        let own = match e {
            Expr::Mul(a, b) if self.private(a) && self.private(b) => MUL,
            Expr::Dot(a, b) if self.private(a) && self.private(b) => DOT,
            Expr::PackDot(xs, ys) => {
                let packed = xs.iter().zip(ys).filter(|(x, y)| self.private(x) && self.private(y)).count();
                if packed > 0 {
                    MUL
                } else {
                    CostReport::default()
                }
            }
            Expr::Lt(a, b) if self.private(a) || self.private(b) => m.extraction(),
            Expr::Call(name, args) if args.first().is_some_and(|a| self.private(a)) => self.call(name, args)?,
            Expr::Call(name, args) if name == "div" && self.private(&args[1]) => self.call(name, args)?,
            _ => CostReport::default(),
        };
        Ok(total.plus(own))
    }

    fn call(&self, name: &str, args: &[Expr]) -> Result<CostReport> {
        let m = self.model;
        let iters = |p: IterParams| p.iter_cnt as u64;
        Ok(match name {
            "relu" | "abs" | "clip" | "logistic_piecewise" => m.select(),
            "logistic" => {
                let it = match args.get(2) {
                    Some(e) => self.scalar(e)? as u64,
                    None => iters(IterParams::logistic()),
                };
                m.select().plus(CostModel::muls(2 * it))
            }
            "reciprocal" => CostModel::muls(2 * iters(IterParams::reciprocal())),
            "div" => {
                let r = CostModel::muls(2 * iters(IterParams::reciprocal()));
                if self.private(&args[0]) {
                    r.plus(MUL)
                } else {
                    r
                }
            }
            "sqrt" => CostModel::muls(3 * iters(IterParams::sqrt()) + 1),
            "exp" => CostModel::muls(iters(IterParams::exp()) + 2),
            "log" => CostModel::muls(iters(IterParams::log()) * (iters(IterParams::exp()) + 3)),
            "max" | "min" | "argmax" | "argmin" => {
                let width = self.reduce_width(args).unwrap_or(2).max(1) as u64;
                let levels = width.next_power_of_two().trailing_zeros() as u64;
                m.select().times(levels)
            }
            _ => CostReport::default(),
        })
    }

    fn reduce_width(&self, args: &[Expr]) -> Option<usize> {
        let shape = self.shape(&args[0])?;
        match args.get(1) {
            None => Some(shape.len()),
            Some(a) => shape.dims().get(self.scalar(a).ok()? as usize).copied(),
        }
    }

    /// Static shape where it can be determined without running anything.
    fn shape(&self, e: &Expr) -> Option<Shape> {
        match e {
            Expr::Const(_) => Some(Shape::scalar()),
            Expr::Dims(_) => None,
            Expr::Var(v) => self.shapes.get(v).cloned().flatten(),
            Expr::Priv(_, s) | Expr::Pub(_, s) => Some(s.clone()),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Lt(a, b) => {
                broadcast(&self.shape(a)?, &self.shape(b)?).ok()
            }
            Expr::Neg(a) => self.shape(a),
            Expr::Dot(a, b) => {
                let (a, b) = (self.shape(a)?, self.shape(b)?);
                Tensor::filled(a, 0.0).dot(&Tensor::filled(b, 0.0)).ok().map(|t| t.shape)
            }
            Expr::PackDot(xs, ys) => {
                let mut out = Shape::scalar();
                for x in xs.iter().chain(ys) {
                    out = broadcast(&out, &self.shape(x)?).ok()?;
                }
                Some(out)
            }
            Expr::Index(base, items) => {
                let sel = items
                    .iter()
                    .map(|i| match i {
                        Idx::At(_) => Some(Sel::At(0)),
                        Idx::Range(s, e) => {
                            let (s, e) = (self.scalar(s).ok()?, self.scalar(e).ok()?);
                            Some(Sel::Range(s as usize, e as usize))
                        }
                    })
                    .collect::<Option<Vec<_>>>()?;
                self.shape(base)?.select(&sel).ok().map(|(s, _)| s)
            }
            Expr::Call(name, args) => self.call_shape(name, args),
        }
    }

    fn call_shape(&self, name: &str, args: &[Expr]) -> Option<Shape> {
        let dims = |e: &Expr| match e {
            Expr::Dims(d) => Some(d.clone()),
            _ => None,
        };
        let axis = |i: usize| args.get(i).map(|a| self.scalar(a).ok().map(|v| v as usize));
        match name {
            "zeros" | "ones" => Some(Shape::new(&dims(&args[0])?)),
            "div" => broadcast(&self.shape(&args[0])?, &self.shape(&args[1])?).ok(),
            "sum" | "mean" | "max" | "min" | "argmax" | "argmin" => {
                let t = Tensor::filled(self.shape(&args[0])?, 0.0);
                let ax = axis(1).map_or(Some(None), |a| a.map(Some))?;
                t.reduce(ax, |_| 0.0).ok().map(|t| t.shape)
            }
            "transpose" | "flatten" | "reshape" | "repeat" | "tile" => {
                let t = Tensor::filled(self.shape(&args[0])?, 0.0);
                let out = match name {
                    "transpose" => t.transpose(args.get(1).and_then(dims).as_deref()).ok()?,
                    "flatten" => t.flatten(),
                    "reshape" => t.reshape(&dims(&args[1])?.into_iter().map(Some).collect::<Vec<_>>()).ok()?,
                    "repeat" => {
                        let ax = axis(2).map_or(Some(None), |a| a.map(Some))?;
                        t.repeat(self.scalar(&args[1]).ok()? as usize, ax).ok()?
                    }
                    _ => t.tile(&dims(&args[1])?),
                };
                Some(out.shape)
            }
            _ => self.shape(&args[0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::optimizer::interp::{interpret, Bindings};
    use crate::optimizer::parse::parse_program;

    fn model() -> CostModel {
        CostModel::new(&EngineConfig::default())
    }

    #[test]
    fn table_matches_measured_single_ops() {
        let cases = [
            "(reveal (mul (priv x (4)) (priv y (4))))",
            "(reveal (dot (priv x (4)) (priv y (4))))",
            "(reveal (lt (priv x (4)) (priv y (4))))",
            "(reveal (relu (priv x (4))))",
            "(reveal (clip (priv x (4)) -1 1))",
            "(reveal (logistic (priv x (4)) 0 10))",
            "(reveal (max (priv x (4))))",
            "(reveal (argmax (priv x (2 3)) 1))",
            "(reveal (div (priv x (4)) (priv y (4))))",
            "(reveal (sqrt (priv y (4))))",
            "(reveal (exp (priv x (4))))",
            "(reveal (log (priv y (4))))",
            "(reveal (add (mul (priv x (4)) 3) (sum (priv y (4)))))",
        ];
        for mode in [ExtractionMode::Ripple, ExtractionMode::Ppa] {
            let cfg = EngineConfig::default().with_extraction(mode);
            let m = CostModel::new(&cfg);
            for src in cases {
                let p = parse_program(src).unwrap();
                let mut b = Bindings::default();
                b.private.insert("x".into(), Tensor::new([4], vec![0.5, -1.0, 2.0, 3.0]).unwrap());
                b.private.insert("y".into(), Tensor::new([4], vec![1.0, 2.0, 4.0, 0.5]).unwrap());
                if src.contains("(2 3)") {
                    b.private.insert("x".into(), Tensor::new([2, 3], vec![1.0, 5.0, 2.0, 0.0, -1.0, 4.0]).unwrap());
                }
                let mut e = Engine::new(cfg);
                let out = interpret(&mut e, &p, &b).unwrap();
                let est = m.estimate(&p).unwrap();
                assert_eq!(est.round_estimate, out.compute.total_rounds, "{mode:?} {src}");
                let busiest = out.compute.parties.values().map(|s| s.messages).max().unwrap_or(0);
                assert_eq!(est.message_estimate, busiest, "{mode:?} {src}");
            }
        }
    }

    #[test]
    fn loops_multiply_by_trip_count() {
        let p = parse_program(
            "(assign z (zeros (8)))(loop i 0 n (assign (idx z i) (mul (idx (priv x (8)) i) (priv y ()))))",
        )
        .unwrap();
        assert!(model().estimate(&p).is_err());
        let c = model().with_symbol("n", 8.0).estimate(&p).unwrap();
        assert_eq!((c.mul_count, c.round_estimate, c.message_estimate), (8, 8, 16));
        let named = parse_program("(assign n 5)(loop i 0 n (assign s (mul (priv a ()) (priv b ()))))").unwrap();
        assert_eq!(model().estimate(&named).unwrap().mul_count, 5);
    }

    #[test]
    fn public_work_is_free() {
        let p = parse_program("(reveal (mul (dot (pub w (3 3)) (priv x (3))) (lt (pub a ()) 2)))").unwrap();
        assert_eq!(model().estimate(&p).unwrap(), CostReport::default());
    }
}
