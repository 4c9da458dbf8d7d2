//! Composite operations built from multiplication, comparison and selection.
//!
//! Exact class: `relu`, `abs`, `clip`, max/argmax and anything else that only
//! compares and selects. Iterative class: `logistic`, `reciprocal`, `sqrt`,
//! `exp`, `log`; each runs a fixed number of fixed-point iterations on inputs
//! normalized by public bounds.

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::protocols::expect_arith;
use crate::sharing::SharedVec;

/// Iteration count and public input bounds for an iterative approximation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterParams {
    pub iter_cnt: u32,
    /// Euler start point; only `logistic` reads it.
    pub start: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IterParams {
    /// Euler steps from 0 over `[-8, 8]`.
    pub fn logistic() -> Self {
        IterParams { iter_cnt: 100, start: 0.0, lower: -8.0, upper: 8.0 }
    }

    /// Newton steps for `1/x`, `x` in `[1/64, 64]`.
    pub fn reciprocal() -> Self {
        IterParams { iter_cnt: 15, start: 0.0, lower: 1.0 / 64.0, upper: 64.0 }
    }

    /// Newton steps for `1/sqrt(x)`, `x` in `[1/64, 64]`.
    pub fn sqrt() -> Self {
        IterParams { iter_cnt: 20, start: 0.0, lower: 1.0 / 64.0, upper: 64.0 }
    }

    /// Squarings after the cubic seed, `x` in `[-16, 16]`.
    pub fn exp() -> Self {
        IterParams { iter_cnt: 12, start: 0.0, lower: -16.0, upper: 16.0 }
    }

    /// Newton steps for `log`, `x` in `[1/64, 64]`.
    pub fn log() -> Self {
        IterParams { iter_cnt: 16, start: 0.0, lower: 1.0 / 64.0, upper: 64.0 }
    }

    fn validate(&self, what: &str, positive: bool) -> Result<()> {
        if self.iter_cnt == 0 {
            return Err(Error::Domain(format!("{what}: iter_cnt must be at least 1")));
        }
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::Domain(format!("{what}: bounds [{}, {}] are not an interval", self.lower, self.upper)));
        }
        if positive && self.lower <= 0.0 {
            return Err(Error::Domain(format!("{what}: needs a positive lower bound, got {}", self.lower)));
        }
        Ok(())
    }

    /// Power-of-two exponent `e` with `upper <= 2^e`.
    fn scale_exponent(&self) -> i32 {
        self.upper.log2().ceil() as i32
    }
}

const CONVERGED: f64 = 1e-9;

impl Engine {
    fn constant(&self, v: f64, len: usize) -> Result<SharedVec> {
        self.share_public(&vec![v; len])
    }

    fn scale(&self, x: &SharedVec, c: f64) -> Result<SharedVec> {
        self.mul_public(x, &vec![c; x.len()])
    }

    fn plus(&self, x: &SharedVec, c: f64) -> Result<SharedVec> {
        self.add_public(x, &vec![c; x.len()])
    }

    /// `max(0, x)`: selects `x` where the sign bit of `-x` is set.
    pub fn relu(&mut self, x: &SharedVec) -> Result<SharedVec> {
        expect_arith(x, "relu")?;
        let pos = self.is_negative(&x.neg())?;
        self.ot_select(&pos, x)
    }

    /// `|x| = x - 2x [x < 0]`.
    pub fn abs(&mut self, x: &SharedVec) -> Result<SharedVec> {
        expect_arith(x, "abs")?;
        let neg = self.is_negative(x)?;
        let twice = self.mul_public_int(x, &vec![-2; x.len()]);
        let fix = self.ot_select(&neg, &twice)?;
        Ok(x.add(&fix))
    }

    /// Clamps to public bounds with one batched comparison and one batched
    /// selection: `hi + [x < hi](x - hi) + [x < lo](lo - x)`.
    pub fn clip(&mut self, x: &SharedVec, lo: f64, hi: f64) -> Result<SharedVec> {
        expect_arith(x, "clip")?;
        if !(lo < hi) {
            return Err(Error::Domain(format!("clip bounds [{lo}, {hi}] are not an interval")));
        }
        let n = x.len();
        let below_hi = self.plus(x, -hi)?;
        let lo_minus_x = self.plus(&x.neg(), lo)?;
        let below_lo = lo_minus_x.neg();
        let signs = self.is_negative(&SharedVec::concat(&[&below_hi, &below_lo]))?;
        let picked = self.ot_select(&signs, &SharedVec::concat(&[&below_hi, &lo_minus_x]))?;
        let hi_c = self.constant(hi, n)?;
        Ok(hi_c.add(&picked.slice(0, n)).add(&picked.slice(n, 2 * n)))
    }

    /// Logistic function by the Euler recurrence
    /// `r <- r + (x - start)/iter_cnt * r (1 - r)` from `r = sigmoid(start)`,
    /// after clamping `x` to `[lower, upper]`. The step product is the
    /// symmetric one: for `x < 0` the plain product would amplify the gap
    /// between the two reconstructions by `1 - delta` per step.
    pub fn logistic(&mut self, x: &SharedVec, p: IterParams) -> Result<SharedVec> {
        p.validate("logistic", false)?;
        let n = x.len();
        let x = self.clip(x, p.lower, p.upper)?;
        let delta = self.scale(&self.plus(&x, -p.start)?, 1.0 / p.iter_cnt as f64)?;
        let mut r = self.constant(1.0 / (1.0 + (-p.start).exp()), n)?;
        for _ in 0..p.iter_cnt {
            let one_minus = self.plus(&r.neg(), 1.0)?;
            let deriv = self.mul(&r, &one_minus)?;
            let step = self.mul_sym(&delta, &deriv)?;
            r = r.add(&step);
        }
        Ok(r)
    }

    /// Three-segment approximation: 0 below -1/2, `x + 1/2` in between, 1
    /// above 1/2.
    pub fn logistic_piecewise(&mut self, x: &SharedVec) -> Result<SharedVec> {
        let shifted = self.plus(x, 0.5)?;
        self.clip(&shifted, 0.0, 1.0)
    }

    /// `1/x` for `x` in `[lower, upper]`: scale by `2^-e` into `(0, 1)`, seed
    /// with `48/17 - 32/17 x`, run Newton `w <- w (2 - x w)`, scale back.
    pub fn reciprocal(&mut self, x: &SharedVec, p: IterParams) -> Result<SharedVec> {
        p.validate("reciprocal", true)?;
        let e = p.scale_exponent();
        let worst = reciprocal_residual(p.lower / 2f64.powi(e), p.iter_cnt);
        if worst > CONVERGED {
            return Err(Error::Domain(format!(
                "reciprocal: {} iterations leave relative error {worst:e} at x = {}",
                p.iter_cnt, p.lower
            )));
        }
        let xs = self.scale(x, 2f64.powi(-e))?;
        let seed = self.scale(&xs, -32.0 / 17.0)?;
        let mut w = self.plus(&seed, 48.0 / 17.0)?;
        for _ in 0..p.iter_cnt {
            let xw = self.mul(&xs, &w)?;
            let two_minus = self.plus(&xw.neg(), 2.0)?;
            w = self.mul(&w, &two_minus)?;
        }
        self.scale(&w, 2f64.powi(-e))
    }

    /// `y / x` as `y * (1/x)`; `x` must lie within `p`'s bounds.
    pub fn divide(&mut self, y: &SharedVec, x: &SharedVec, p: IterParams) -> Result<SharedVec> {
        let r = self.reciprocal(x, p)?;
        self.mul(y, &r)
    }

    /// `sqrt(x)` for `x` in `[lower, upper]` as `x / sqrt(x)`, with the inverse
    /// root from Newton `w <- w (3 - x w^2) / 2` on `x` scaled by an even
    /// power of two into `(0, 1]`, starting at `w = 1`.
    pub fn sqrt(&mut self, x: &SharedVec, p: IterParams) -> Result<SharedVec> {
        p.validate("sqrt", true)?;
        let e = p.scale_exponent();
        let e = e + e.rem_euclid(2);
        let worst = inv_sqrt_residual(p.lower / 2f64.powi(e), p.iter_cnt);
        if worst > CONVERGED {
            return Err(Error::Domain(format!(
                "sqrt: {} iterations leave relative error {worst:e} at x = {}",
                p.iter_cnt, p.lower
            )));
        }
        let xs = self.scale(x, 2f64.powi(-e))?;
        let mut w = self.constant(1.0, x.len())?;
        for _ in 0..p.iter_cnt {
            let w2 = self.mul(&w, &w)?;
            let xw2 = self.mul(&xs, &w2)?;
            let three_minus = self.plus(&xw2.neg(), 3.0)?;
            let half = self.scale(&three_minus, 0.5)?;
            w = self.mul(&w, &half)?;
        }
        let root = self.mul(x, &w)?;
        self.scale(&root, 2f64.powi(-e / 2))
    }

    /// `e^x` for `x` in `[lower, upper]`: `t = x / 2^m`, seed
    /// `1 + t + t^2/2 + t^3/6`, then square `m = iter_cnt` times.
    pub fn exp(&mut self, x: &SharedVec, p: IterParams) -> Result<SharedVec> {
        p.validate("exp", false)?;
        let limit = self.ring().encode_limit().sqrt().ln();
        if p.upper > limit {
            return Err(Error::Domain(format!("exp: upper bound {} overflows the ring (max {limit:.1})", p.upper)));
        }
        let m = p.iter_cnt as i32;
        let t = self.scale(x, 2f64.powi(-m))?;
        let t2 = self.mul(&t, &t)?;
        let t3 = self.mul(&t2, &t)?;
        let mut y = self.plus(&t.add(&self.scale(&t2, 0.5)?).add(&self.scale(&t3, 1.0 / 6.0)?), 1.0)?;
        for _ in 0..m {
            y = self.mul(&y, &y)?;
        }
        Ok(y)
    }

    /// Natural log for `x` in `[lower, upper]`: with `x = x' 2^e`, Newton
    /// `y <- y - 1 + x' e^-y` from `y = 0` gives `ln x'`, then add `e ln 2`.
    pub fn log(&mut self, x: &SharedVec, p: IterParams) -> Result<SharedVec> {
        p.validate("log", true)?;
        let e = p.scale_exponent();
        let worst = log_residual(p.lower / 2f64.powi(e), p.iter_cnt);
        if worst > CONVERGED {
            return Err(Error::Domain(format!(
                "log: {} iterations leave error {worst:e} at x = {}",
                p.iter_cnt, p.lower
            )));
        }
        let xs = self.scale(x, 2f64.powi(-e))?;
        let span = -(p.lower / 2f64.powi(e)).ln() + 1.0;
        let inner = IterParams { lower: -1.0, upper: span, ..IterParams::exp() };
        let mut y = self.constant(0.0, x.len())?;
        for _ in 0..p.iter_cnt {
            let ey = self.exp(&y.neg(), inner)?;
            let xe = self.mul(&xs, &ey)?;
            y = self.plus(&y.add(&xe), -1.0)?;
        }
        self.plus(&y, e as f64 * std::f64::consts::LN_2)
    }

    /// Maximum and index of the first maximum of each contiguous row of
    /// `row_len` elements, by a tournament that keeps the left candidate
    /// unless it is strictly smaller. The index is a fixed-point integer.
    pub fn max_rows(&mut self, x: &SharedVec, row_len: usize) -> Result<(SharedVec, SharedVec)> {
        let cfg = expect_arith(x, "max")?;
        if row_len == 0 {
            return Err(Error::EmptyAxis(0));
        }
        if x.len() % row_len != 0 {
            return Err(Error::shape(0, format!("{} elements do not split into rows of {row_len}", x.len())));
        }
        let rows = x.len() / row_len;
        // Candidate j of row r lives at r * width + j.
        let mut vals = x.clone();
        let idx_raw: Vec<u128> = (0..x.len()).map(|i| cfg.encode_raw((i % row_len) as f64)).collect::<Result<_>>()?;
        let mut idx = self.share_public_raw(x.domain(), &idx_raw);
        let mut width = row_len;
        while width > 1 {
            let pairs = width / 2;
            let mut left = Vec::with_capacity(rows * pairs);
            let mut right = Vec::with_capacity(rows * pairs);
            let mut rest = Vec::new();
            for r in 0..rows {
                for j in 0..pairs {
                    left.push(r * width + 2 * j);
                    right.push(r * width + 2 * j + 1);
                }
                if width % 2 == 1 {
                    rest.push(r * width + width - 1);
                }
            }
            let (lv, rv) = (vals.gather(&left), vals.gather(&right));
            let (li, ri) = (idx.gather(&left), idx.gather(&right));
            let take_right = self.less_than(&lv, &rv)?;
            let both = SharedVec::concat(&[&take_right, &take_right]);
            let picked = self.mux(&both, &SharedVec::concat(&[&rv, &ri]), &SharedVec::concat(&[&lv, &li]))?;
            let m = lv.len();
            let (wv, wi) = (picked.slice(0, m), picked.slice(m, 2 * m));
            let next = pairs + width % 2;
            let mut order = Vec::with_capacity(rows * next);
            // Winners first, then the odd leftovers; reorder to row-major.
            for r in 0..rows {
                for j in 0..pairs {
                    order.push(r * pairs + j);
                }
                if width % 2 == 1 {
                    order.push(m + r);
                }
            }
            vals = SharedVec::concat(&[&wv, &vals.gather(&rest)]).gather(&order);
            idx = SharedVec::concat(&[&wi, &idx.gather(&rest)]).gather(&order);
            width = next;
        }
        Ok((vals, idx))
    }

    /// Minimum and index of the first minimum of each row.
    pub fn min_rows(&mut self, x: &SharedVec, row_len: usize) -> Result<(SharedVec, SharedVec)> {
        let (m, i) = self.max_rows(&x.neg(), row_len)?;
        Ok((m.neg(), i))
    }
}

fn reciprocal_residual(x: f64, iters: u32) -> f64 {
    let mut w = 48.0 / 17.0 - 32.0 / 17.0 * x;
    for _ in 0..iters {
        w *= 2.0 - x * w;
    }
    (1.0 - x * w).abs()
}

fn inv_sqrt_residual(x: f64, iters: u32) -> f64 {
    let mut w = 1.0f64;
    for _ in 0..iters {
        w = w * (3.0 - x * w * w) / 2.0;
    }
    (1.0 - x * w * w).abs()
}

fn log_residual(x: f64, iters: u32) -> f64 {
    let mut y = 0.0f64;
    for _ in 0..iters {
        y = y - 1.0 + x * (-y).exp();
    }
    (y - x.ln()).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineConfig;
    use crate::ring::RingConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn engine() -> Engine {
        Engine::new(EngineConfig::default().with_seed(17))
    }

    /// Cleartext fixed-point arithmetic with the same rounding as the engine.
    struct Fx(RingConfig);

    impl Fx {
        fn enc(&self, v: f64) -> i128 {
            self.0.ring().to_signed(self.0.encode_raw(v).unwrap())
        }
        fn mul(&self, a: i128, b: i128) -> i128 {
            let d = self.0.d;
            (a * b + (1 << (d - 1))) >> d
        }
        fn dec(&self, a: i128) -> f64 {
            a as f64 / 2f64.powi(self.0.d as i32)
        }
    }

    fn euler_oracle(fx: &Fx, x: f64, p: IterParams) -> f64 {
        let x = x.clamp(p.lower, p.upper);
        let delta = fx.mul(fx.enc(x) - fx.enc(p.start), fx.enc(1.0 / p.iter_cnt as f64));
        let mut r = fx.enc(1.0 / (1.0 + (-p.start).exp()));
        let one = fx.enc(1.0);
        for _ in 0..p.iter_cnt {
            let deriv = fx.mul(r, one - r);
            r += fx.mul(delta, deriv);
        }
        fx.dec(r)
    }

    #[test]
    fn relu_and_abs_exact() {
        let mut e = engine();
        let vals = [-3.0, 3.0, 0.0, -0.5, 1e6];
        let x = e.share_input(0, &vals).unwrap();
        let r = e.relu(&x).unwrap();
        assert_eq!(e.reveal(&r).unwrap(), vec![0.0, 3.0, 0.0, 0.0, 1e6]);
        let a = e.abs(&x).unwrap();
        assert_eq!(e.reveal(&a).unwrap(), vec![3.0, 3.0, 0.0, 0.5, 1e6]);
        let an = e.abs(&x.neg()).unwrap();
        assert_eq!(e.reveal(&an).unwrap(), e.reveal(&a).unwrap());
    }

    #[test]
    fn relu_random_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut e = engine();
        let vals: Vec<f64> = (0..10_000).map(|_| rng.gen_range(-1e4..1e4)).collect();
        let x = e.share_input(0, &vals).unwrap();
        let cfg = e.ring();
        let r = e.relu(&x).unwrap();
        let rn = e.relu(&x.neg()).unwrap();
        let a = e.abs(&x).unwrap();
        let got = e.reveal(&r).unwrap();
        for (g, v) in got.iter().zip(&vals) {
            assert_eq!(*g, cfg.decode_raw(cfg.encode_raw(*v).unwrap()).max(0.0));
        }
        let sum = e.reveal(&r.add(&rn)).unwrap();
        assert_eq!(sum, e.reveal(&a).unwrap());
    }

    #[test]
    fn clip_bounds() {
        let mut e = engine();
        let x = e.share_input(0, &[-10.0, -8.0, 0.25, 7.5, 8.0, 30.0]).unwrap();
        let c = e.clip(&x, -8.0, 8.0).unwrap();
        assert_eq!(e.reveal(&c).unwrap(), vec![-8.0, -8.0, 0.25, 7.5, 8.0, 8.0]);
        assert!(e.clip(&x, 1.0, 1.0).is_err());
    }

    #[test]
    fn logistic_matches_euler_oracle() {
        let mut e = engine();
        let p = IterParams::logistic();
        let fx = Fx(e.ring());
        let xs: Vec<f64> = (-5..=5).map(|v| v as f64).chain([0.3, -12.0, 12.0]).collect();
        let x = e.share_input(0, &xs).unwrap();
        let y = e.logistic(&x, p).unwrap();
        let got = e.reveal(&y).unwrap();
        let budget = p.iter_cnt as f64 * 3.0 * e.ring().ulp();
        for (g, v) in got.iter().zip(&xs) {
            let want = euler_oracle(&fx, *v, p);
            assert!((g - want).abs() <= budget, "x={v}: {g} vs {want}");
            // Euler with 100 steps stays close to the true curve
            let truth = 1.0 / (1.0 + (-v.clamp(-8.0, 8.0)).exp());
            assert!((g - truth).abs() < 2e-3, "x={v}: {g} vs {truth}");
        }
        assert!((got[5] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn logistic_symmetry() {
        let mut e = engine();
        let p = IterParams::logistic();
        let x = e.share_input(0, &[1.5, -1.5, 4.0, -4.0]).unwrap();
        let y = e.logistic(&x, p).unwrap();
        let g = e.reveal(&y).unwrap();
        let budget = 2.0 * p.iter_cnt as f64 * 3.0 * e.ring().ulp();
        let fx = Fx(e.ring());
        for (i, v) in [1.5, 4.0].into_iter().enumerate() {
            let ref_sum = euler_oracle(&fx, v, p) + euler_oracle(&fx, -v, p);
            let sum = g[2 * i] + g[2 * i + 1];
            assert!((sum - ref_sum).abs() <= budget, "x={v}: {sum} vs {ref_sum}");
            assert!((sum - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn logistic_rejects_zero_iterations() {
        let mut e = engine();
        let x = e.share_input(0, &[1.0]).unwrap();
        let p = IterParams { iter_cnt: 0, ..IterParams::logistic() };
        assert!(matches!(e.logistic(&x, p), Err(Error::Domain(_))));
    }

    #[test]
    fn piecewise_segments() {
        let mut e = engine();
        let x = e.share_input(0, &[-3.0, -0.5, 0.0, 0.25, 0.5, 3.0]).unwrap();
        let y = e.logistic_piecewise(&x).unwrap();
        assert_eq!(e.reveal(&y).unwrap(), vec![0.0, 0.0, 0.5, 0.75, 1.0, 1.0]);
    }

    #[test]
    fn reciprocal_and_divide() {
        let mut e = engine();
        let p = IterParams::reciprocal();
        let x = e.share_input(0, &[4.0, 1.0 / 64.0, 63.0, 3.0]).unwrap();
        let r = e.reciprocal(&x, p).unwrap();
        let got = e.reveal(&r).unwrap();
        for (g, v) in got.iter().zip([4.0, 1.0 / 64.0, 63.0, 3.0]) {
            assert!((g - 1.0 / v).abs() <= 1e-6 * (1.0 / v).max(1.0), "1/{v}: {g}");
        }
        let y = e.share_input(0, &[6.0, 1.0, 63.0, 3.0]).unwrap();
        let q = e.divide(&y, &x, p).unwrap();
        let got = e.reveal(&q).unwrap();
        assert!((got[0] - 1.5).abs() <= 1e-6);
        assert!((got[2] - 1.0).abs() <= 2e-6);
        assert!((got[3] - 1.0).abs() <= 2e-6);
    }

    #[test]
    fn reciprocal_rejects_bad_bounds() {
        let mut e = engine();
        let x = e.share_input(0, &[1.0]).unwrap();
        let neg = IterParams { lower: -1.0, ..IterParams::reciprocal() };
        assert!(matches!(e.reciprocal(&x, neg), Err(Error::Domain(_))));
        let wide = IterParams { lower: 1e-9, upper: 1e6, iter_cnt: 5, start: 0.0 };
        assert!(matches!(e.reciprocal(&x, wide), Err(Error::Domain(_))));
    }

    #[test]
    fn sqrt_exp_log() {
        let mut e = engine();
        let x = e.share_input(0, &[4.0, 2.0, 1.0 / 64.0, 50.0]).unwrap();
        let s = e.sqrt(&x, IterParams::sqrt()).unwrap();
        let s = e.reveal(&s).unwrap();
        for (g, v) in s.iter().zip([4.0f64, 2.0, 1.0 / 64.0, 50.0]) {
            assert!((g - v.sqrt()).abs() <= 1e-6, "sqrt {v}: {g}");
        }
        let l = e.log(&x, IterParams::log()).unwrap();
        let l = e.reveal(&l).unwrap();
        for (g, v) in l.iter().zip([4.0f64, 2.0, 1.0 / 64.0, 50.0]) {
            assert!((g - v.ln()).abs() <= 1e-5, "log {v}: {g}");
        }
        let z = e.share_input(0, &[0.0, 1.0, -3.0, 10.0]).unwrap();
        let ex = e.exp(&z, IterParams::exp()).unwrap();
        let ex = e.reveal(&ex).unwrap();
        assert!((ex[0] - 1.0).abs() <= 1e-6);
        for (g, v) in ex.iter().zip([0.0f64, 1.0, -3.0, 10.0]) {
            assert!((g - v.exp()).abs() <= 1e-6 * v.exp().max(1.0), "exp {v}: {g}");
        }
    }

    #[test]
    fn max_and_argmax() {
        let mut e = engine();
        let x = e.share_input(0, &[0.1, 0.9, 0.3, 2.0, 2.0, 2.0, -1.0, -5.0, 4.0]).unwrap();
        let (m, i) = e.max_rows(&x, 3).unwrap();
        let fx = Fx(e.ring());
        assert_eq!(e.reveal(&m).unwrap(), vec![fx.dec(fx.enc(0.9)), 2.0, 4.0]);
        assert_eq!(e.reveal(&i).unwrap(), vec![1.0, 0.0, 2.0]);
        let (m, i) = e.min_rows(&x, 3).unwrap();
        assert_eq!(e.reveal(&m).unwrap(), vec![fx.dec(fx.enc(0.1)), 2.0, -5.0]);
        assert_eq!(e.reveal(&i).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(matches!(e.max_rows(&x, 0), Err(Error::EmptyAxis(_))));
    }

    #[test]
    fn argmax_random_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut e = engine();
        for len in [1usize, 2, 5, 7, 16] {
            let rows = 20;
            let vals: Vec<f64> = (0..rows * len).map(|_| rng.gen_range(0..6) as f64).collect();
            let x = e.share_input(0, &vals).unwrap();
            let (m, i) = e.max_rows(&x, len).unwrap();
            let (m, i) = (e.reveal(&m).unwrap(), e.reveal(&i).unwrap());
            for r in 0..rows {
                let row = &vals[r * len..(r + 1) * len];
                let best = row.iter().cloned().fold(f64::MIN, f64::max);
                let first = row.iter().position(|v| *v == best).unwrap();
                assert_eq!(m[r], best);
                assert_eq!(i[r], first as f64);
            }
        }
    }
}
