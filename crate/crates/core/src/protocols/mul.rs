//! One-round multiplication over the replicated sharing.
//!
//! Each server multiplies its first component of `x` by its second of `y`
//! and the other way round, masks the two products with a seed shared with
//! its pair partner, and sends one to each server of the opposite pair. Any
//! bilinear map works in place of the elementwise product, which is how dot
//! products cost the same single round.

use crate::engine::{recv, Engine};
use crate::error::{Error, Result};
use crate::sharing::{debug_check, Domain, LocalPair, Server, SharedVec};

use super::{expect_arith, expect_same_len, seed_peer};

/// Where a server sends its unprimed and primed masked products; it receives
/// the matching products from the same two servers.
fn exchange_partners(me: Server) -> (Server, Server) {
    match me {
        Server::S1 => (Server::Sb, Server::Sa),
        Server::S2 => (Server::Sa, Server::Sb),
        Server::Sa => (Server::S2, Server::S1),
        Server::Sb => (Server::S1, Server::S2),
    }
}

impl Engine {
    /// Evaluates a bilinear `form` on shares in one round: the result shares
    /// `form(x, y)`, truncated by `d` bits if `truncate` is set.
    ///
    /// `form(a, b, dom)` must be bilinear over `dom` and return `out_len`
    /// reduced elements.
    pub(crate) fn bilinear<F>(
        &mut self,
        x: &SharedVec,
        y: &SharedVec,
        out_len: usize,
        form: F,
        truncate: bool,
    ) -> Result<SharedVec>
    where
        F: Fn(&[u128], &[u128], Domain) -> Vec<u128> + Sync,
    {
        let dom = x.domain();
        if dom != y.domain() {
            return Err(Error::Domain("operands live in different domains".into()));
        }
        let shift = match (dom, truncate) {
            (Domain::Arith(cfg), true) => Some((cfg.ring(), cfg.d)),
            _ => None,
        };
        let probing = self.probing();
        let form = &form;

        let res = self.round(
            |ctx| {
                let me = ctx.me();
                let (px, py) = (ctx.view(x), ctx.view(y));
                let mut t = form(&px.first, &py.second, dom);
                let mut tp = form(&px.second, &py.first, dom);
                debug_assert_eq!(t.len(), out_len);
                let r = ctx.rand(seed_peer(me), dom, out_len);
                let rp = ctx.rand(seed_peer(me), dom, out_len);
                let minus = matches!(me, Server::S1 | Server::Sa);
                for (v, r) in t.iter_mut().zip(&r).chain(tp.iter_mut().zip(&rp)) {
                    *v = if minus { dom.sub(*v, *r) } else { dom.add(*v, *r) };
                }
                let (to_t, to_tp) = exchange_partners(me);
                ctx.send(to_t, dom, &t);
                ctx.send(to_tp, dom, &tp);
                (t, tp)
            },
            |ctx, (t, tp), inbox| {
                let (from_t, from_tp) = exchange_partners(ctx.me());
                let other = recv(inbox, from_t, dom, out_len)?;
                let other_p = recv(inbox, from_tp, dom, out_len)?;
                let sum: Vec<u128> = t.iter().zip(&other).map(|(a, b)| dom.add(*a, *b)).collect();
                let sum_p: Vec<u128> = tp.iter().zip(&other_p).map(|(a, b)| dom.add(*a, *b)).collect();
                let pre = (probing && matches!(ctx.me(), Server::S1 | Server::S2)).then(|| sum.clone());
                let pair = match shift {
                    Some((ring, d)) => LocalPair::new(
                        sum.iter().map(|v| ring.truncate_share(*v, d)).collect(),
                        sum_p.iter().map(|v| ring.truncate_share(*v, d)).collect(),
                    ),
                    None => LocalPair::new(sum, sum_p),
                };
                Ok((pair, pre))
            },
        )?;

        let [(p1, pre1), (p2, pre2), (pa, _), (pb, _)] = res;
        if let (Some(a), Some(b)) = (pre1, pre2) {
            self.probe_truncation(&a, &b);
        }
        let out = SharedVec::from_parts(dom, [p1, p2, pa, pb]);
        debug_check(&out);
        Ok(out)
    }

    /// Elementwise fixed-point product, truncated back to `d` fractional bits.
    ///
    /// Within one unit of `x y` unless the local truncation meets the share
    /// wrap, which happens with probability about `|x y| 2^(2d) / 2^n` and
    /// leaves an error near `2^(n-d)`. Keep `|x y|` below `2^(n-1-2d-s)` for a
    /// failure rate under `2^-s`.
    pub fn mul(&mut self, x: &SharedVec, y: &SharedVec) -> Result<SharedVec> {
        expect_same_len(x, y)?;
        expect_arith(x, "mul")?;
        self.bilinear(x, y, x.len(), elementwise, true)
    }

    /// Elementwise ring product with no truncation; for integer-scaled shares.
    pub fn mul_raw(&mut self, x: &SharedVec, y: &SharedVec) -> Result<SharedVec> {
        expect_same_len(x, y)?;
        expect_arith(x, "mul_raw")?;
        self.bilinear(x, y, x.len(), elementwise, false)
    }

    /// `sum_j a_j * b_j` elementwise over equal-length operands, truncated
    /// once. Costs the same single round as one multiplication.
    pub fn mul_accumulate(&mut self, terms: &[(&SharedVec, &SharedVec)]) -> Result<SharedVec> {
        let Some((first, _)) = terms.first() else {
            return Err(Error::Domain("mul_accumulate needs at least one term".into()));
        };
        expect_arith(first, "mul_accumulate")?;
        let len = first.len();
        for (a, b) in terms {
            if a.len() != len || b.len() != len {
                return Err(Error::shape(0, format!("term lengths differ from {len}")));
            }
        }
        let xs: Vec<&SharedVec> = terms.iter().map(|t| t.0).collect();
        let ys: Vec<&SharedVec> = terms.iter().map(|t| t.1).collect();
        let x = SharedVec::concat(&xs);
        let y = SharedVec::concat(&ys);
        let m = terms.len();
        self.bilinear(
            &x,
            &y,
            len,
            move |a, b, dom| {
                (0..len)
                    .map(|i| (0..m).fold(0, |acc, j| dom.add(acc, dom.mul(a[j * len + i], b[j * len + i]))))
                    .collect()
            },
            true,
        )
    }

    /// Product whose two reconstructions agree up to fresh rounding: the
    /// unprimed and primed sums are both `x y' + y x'`, halved. Plain `mul`
    /// carries an input discrepancy `x - x'` into the output with the wrong
    /// sign, which compounds over long multiplicative recurrences. Same round
    /// count as `mul`, twice the local work.
    pub fn mul_sym(&mut self, x: &SharedVec, y: &SharedVec) -> Result<SharedVec> {
        expect_same_len(x, y)?;
        let cfg = expect_arith(x, "mul_sym")?;
        let twice = self.mul_accumulate(&[(x, y), (y, x)])?;
        Ok(self.mul_public_raw(&twice, &vec![1u128 << (cfg.d - 1); x.len()]))
    }

    /// Product with public fixed-point constants: local multiply, then local
    /// truncation of every component. No messages.
    pub fn mul_public(&self, x: &SharedVec, c: &[f64]) -> Result<SharedVec> {
        let cfg = expect_arith(x, "mul_public")?;
        if c.len() != x.len() {
            return Err(Error::shape(0, format!("{} constants for {} elements", c.len(), x.len())));
        }
        let raw = c.iter().map(|v| cfg.encode_raw(*v)).collect::<Result<Vec<_>>>()?;
        Ok(self.mul_public_raw(x, &raw))
    }

    pub(crate) fn mul_public_raw(&self, x: &SharedVec, raw: &[u128]) -> SharedVec {
        let Domain::Arith(cfg) = x.domain() else { unreachable!("checked by callers") };
        let ring = cfg.ring();
        let scaled = x.scale_raw(raw);
        let out = scaled.map_local(scaled.domain(), |_, p| {
            LocalPair::new(
                p.first.iter().map(|v| ring.truncate_share(*v, cfg.d)).collect(),
                p.second.iter().map(|v| ring.truncate_share(*v, cfg.d)).collect(),
            )
        });
        debug_check(&out);
        out
    }

    /// Product with public integers; exact, no truncation, no messages.
    pub fn mul_public_int(&self, x: &SharedVec, c: &[i64]) -> SharedVec {
        let dom = x.domain();
        let raw: Vec<u128> = c.iter().map(|v| (*v as i128 as u128) & dom.mask()).collect();
        x.scale_raw(&raw)
    }
}

fn elementwise(a: &[u128], b: &[u128], dom: Domain) -> Vec<u128> {
    a.iter().zip(b).map(|(p, q)| dom.mul(*p, *q)).collect()
}

#[cfg(test)]
mod tests {
    use crate::engine::{Engine, EngineConfig};
    use crate::netsim::NetStats;
    use crate::sharing::{oracle_drift, Domain, Server};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn engine() -> Engine {
        Engine::new(EngineConfig::default().with_seed(21))
    }

    #[test]
    fn two_times_three() {
        let mut e = engine();
        let x = e.share_input(0, &[2.0]).unwrap();
        let y = e.share_input(0, &[3.0]).unwrap();
        let z = e.mul(&x, &y).unwrap();
        let got = e.reveal(&z).unwrap()[0];
        assert!((got - 6.0).abs() <= 2.0 * e.ring().ulp());
    }

    #[test]
    fn times_zero() {
        let mut e = engine();
        let x = e.share_input(0, &[123.456, -7.0]).unwrap();
        let y = e.share_input(0, &[0.0, 0.0]).unwrap();
        let z = e.mul(&x, &y).unwrap();
        for v in e.reveal(&z).unwrap() {
            assert!(v.abs() <= e.ring().ulp());
        }
    }

    #[test]
    fn one_round_two_elements_per_server() {
        let mut e = engine();
        let x = e.share_input(0, &[1.0]).unwrap();
        let y = e.share_input(0, &[1.0]).unwrap();
        let before = e.stats();
        e.mul(&x, &y).unwrap();
        let d = NetStats::diff(&before, &e.stats());
        assert_eq!(d.total_rounds, 1);
        for s in Server::ALL {
            assert_eq!(d.server(s).messages, 2, "{s}");
            assert_eq!(d.server(s).bytes, 2 * 16, "{s}");
            assert_eq!(d.server(s).rounds, 1, "{s}");
        }
    }

    #[test]
    fn batch_costs_one_round() {
        let mut e = engine();
        let x = e.share_input(0, &[1.0; 50]).unwrap();
        let before = e.stats();
        e.mul(&x, &x).unwrap();
        let d = NetStats::diff(&before, &e.stats());
        assert_eq!(d.total_rounds, 1);
        assert_eq!(d.server(Server::S1).bytes, 2 * 16 * 50);
    }

    /// Every pair of raw operands in [-64, 64) at n = 16, d = 4. Whenever the
    /// two pre-truncation shares do not straddle the wrap boundary the result
    /// is within one unit of the exact quotient; straddles happen at a rate
    /// bounded by |raw product| / 2^(n-1).
    #[test]
    fn exhaustive_small_ring() {
        let mut e = Engine::new(EngineConfig::default().with_ring(16, 4).unwrap().with_seed(4));
        let cfg = e.ring();
        let ring = cfg.ring();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for a in -64i128..64 {
            for b in -64i128..64 {
                xs.push(a);
                ys.push(b);
            }
        }
        let to_raw = |v: &Vec<i128>| v.iter().map(|a| ring.from_signed(*a)).collect::<Vec<_>>();
        let x = e.share_input_raw(0, &to_raw(&xs), e.arith()).unwrap();
        let y = e.share_input_raw(0, &to_raw(&ys), e.arith()).unwrap();
        e.enable_truncation_probe();
        let z = e.mul(&x, &y).unwrap();
        let probe = e.take_truncation_probe();
        let got = e.reveal_bits(&z).unwrap();
        let mut flagged = 0usize;
        let mut budget = 0f64;
        for i in 0..xs.len() {
            let exact = (xs[i] * ys[i]) as f64 / 16.0;
            let (a, b) = probe[i];
            budget += (xs[i] * ys[i]).unsigned_abs() as f64 / 2f64.powi(15);
            if ring.truncation_wraps(a, b, 4) {
                flagged += 1;
                continue;
            }
            let v = ring.to_signed(got[i]) as f64;
            assert!((v - exact).abs() <= 1.0, "{} * {}: got {v}, want {exact}", xs[i], ys[i]);
        }
        assert!((flagged as f64) <= 2.0 * budget + 20.0, "flagged {flagged}, budget {budget}");
    }

    #[test]
    fn symmetric_product_keeps_reconstructions_together() {
        let mut e = engine();
        let x = e.share_input(0, &[0.3; 64]).unwrap();
        let d = e.share_input(0, &[-0.08; 64]).unwrap();
        let (mut plain, mut sym) = (x.clone(), x.clone());
        for _ in 0..100 {
            let s = e.mul(&d, &plain).unwrap();
            plain = plain.add(&s);
            let s = e.mul_sym(&d, &sym).unwrap();
            sym = sym.add(&s);
        }
        let grown = oracle_drift(&plain).unwrap();
        let kept = oracle_drift(&sym).unwrap();
        // fresh rounding only: at most two units per step
        assert!(kept <= 200, "symmetric drift {kept}");
        assert!(grown > 16 * kept.max(1), "plain drift {grown}");
        let want = 0.3 * 0.92f64.powi(100);
        let got = e.reveal(&sym).unwrap();
        assert!(got.iter().all(|g| (g - want).abs() < 1e-9));
    }

    #[test]
    fn mul_public_is_local() {
        let mut e = engine();
        let x = e.share_input(0, &[1.5, -2.0]).unwrap();
        let before = e.stats();
        let y = e.mul_public(&x, &[2.0, 1.0]).unwrap();
        assert_eq!(NetStats::diff(&before, &e.stats()).total_rounds, 0);
        let got = e.reveal(&y).unwrap();
        assert!((got[0] - 3.0).abs() <= 2.0 * e.ring().ulp());
        assert!((got[1] + 2.0).abs() <= e.ring().ulp());
    }

    #[test]
    fn mul_accumulate_matches_sum_of_products() {
        let mut e = engine();
        let a = e.share_input(0, &[1.0, 2.0]).unwrap();
        let b = e.share_input(0, &[3.0, 4.0]).unwrap();
        let c = e.share_input(0, &[0.5, -1.0]).unwrap();
        let before = e.stats();
        let z = e.mul_accumulate(&[(&a, &b), (&c, &c)]).unwrap();
        let d = NetStats::diff(&before, &e.stats());
        assert_eq!(d.total_rounds, 1);
        assert_eq!(d.server(Server::Sa).bytes, 2 * 16 * 2);
        let got = e.reveal(&z).unwrap();
        assert!((got[0] - 3.25).abs() <= e.ring().ulp());
        assert!((got[1] - 9.0).abs() <= e.ring().ulp());
    }

    #[test]
    fn and_truth_table_and_cost() {
        let mut e = engine();
        let a = e.share_bits(&[0, 0, 1, 1], Domain::BIT).unwrap();
        let b = e.share_bits(&[0, 1, 0, 1], Domain::BIT).unwrap();
        let before = e.stats();
        let x = e.bit_xor(&a, &b).unwrap();
        assert_eq!(NetStats::diff(&before, &e.stats()).total_rounds, 0);
        let y = e.bit_and(&a, &b).unwrap();
        let d = NetStats::diff(&before, &e.stats());
        assert_eq!(d.total_rounds, 1);
        for s in Server::ALL {
            assert_eq!(d.server(s).bits, 2 * 4);
        }
        assert_eq!(oracle_drift(&y), Some(0));
        assert_eq!(e.reveal_bits(&x).unwrap(), vec![0, 1, 1, 0]);
        assert_eq!(e.reveal_bits(&y).unwrap(), vec![0, 0, 0, 1]);
        let n = e.bit_not(&y);
        assert_eq!(e.reveal_bits(&n).unwrap(), vec![1, 1, 1, 0]);
    }

    #[test]
    fn random_bit_words() {
        let mut e = engine();
        let dom = Domain::Bits(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<u128> = (0..200).map(|_| rng.gen::<u64>() as u128).collect();
        let b: Vec<u128> = (0..200).map(|_| rng.gen::<u64>() as u128).collect();
        let sa = e.share_bits(&a, dom).unwrap();
        let sb = e.share_bits(&b, dom).unwrap();
        let and = e.bit_and(&sa, &sb).unwrap();
        let xor = e.bit_xor(&sa, &sb).unwrap();
        let want_and: Vec<u128> = a.iter().zip(&b).map(|(x, y)| x & y).collect();
        let want_xor: Vec<u128> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        assert_eq!(e.reveal_bits(&and).unwrap(), want_and);
        assert_eq!(e.reveal_bits(&xor).unwrap(), want_xor);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn distributes_over_addition(a in -1.0e4f64..1.0e4, b in -1.0e4f64..1.0e4, c in -1.0e4f64..1.0e4) {
            let mut e = engine();
            let s = e.share_input(0, &[a, b, c]).unwrap();
            let (sa, sb, sc) = (s.slice(0, 1), s.slice(1, 2), s.slice(2, 3));
            let left = e.mul(&sa, &sb.add(&sc)).unwrap();
            let ab = e.mul(&sa, &sb).unwrap();
            let ac = e.mul(&sa, &sc).unwrap();
            let l = e.reveal(&left).unwrap()[0];
            let r = e.reveal(&ab.add(&ac)).unwrap()[0];
            prop_assert!((l - r).abs() <= 3.0 * e.ring().ulp());
        }

        #[test]
        fn product_within_one_ulp(a in -1.0e6f64..1.0e6, b in -1.0e6f64..1.0e6) {
            let mut e = engine();
            let cfg = e.ring();
            let s = e.share_input(0, &[a, b]).unwrap();
            let z = e.mul(&s.slice(0, 1), &s.slice(1, 2)).unwrap();
            let exact = cfg.decode_raw(cfg.encode_raw(a).unwrap()) * cfg.decode_raw(cfg.encode_raw(b).unwrap());
            let got = e.reveal(&z).unwrap()[0];
            // f64 cannot hold the exact product, so compare against its own rounding too
            prop_assert!((got - exact).abs() <= cfg.ulp() + exact.abs() * f64::EPSILON);
        }
    }
}
