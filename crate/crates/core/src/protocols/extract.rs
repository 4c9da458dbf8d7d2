//! Bit extraction: the `k`-th bit of `x1 + x2` as a single-bit share, computed
//! by adding the two additive halves bitwise.
//!
//! Both variants read only the unprimed halves `x1` (S1, Sb) and `x2` (S2,
//! Sa), so the result always describes `x1 + x2`.
//!
//! The ripple adder carries `c` shared as `c1' ^ c2'` (S1 and Sa hold `c1'`,
//! S2 and Sb hold `c2'`) and updates it with
//! `c[i+1] = x1[i] x2[i] ^ c[i] (x1[i] ^ x2[i])`, one position per round.
//! The cross term `x1 AND x2` is precomputed in a setup round.
//!
//! The prefix variant turns `x1` and `x2` into bit shares, derives
//! generate/propagate pairs with one AND round, and reduces them in a
//! balanced tree.

use crate::engine::{recv, Engine, ExtractionMode};
use crate::error::{Error, Result};
use crate::sharing::{debug_check, Domain, LocalPair, Server, SharedVec};

use super::{expect_arith, seed_peer};

/// Where a server sends its carry contribution and whom it hears from.
fn carry_partner(me: Server) -> Server {
    match me {
        Server::S1 => Server::Sa,
        Server::Sa => Server::S1,
        Server::S2 => Server::Sb,
        Server::Sb => Server::S2,
    }
}

fn low_mask(bits: u32) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

#[derive(Clone, Default)]
struct RippleState {
    /// Bit `i - 1` holds this server's share of `x1[i] x2[i]`, or 0.
    u: Vec<u128>,
    /// This server's carry share.
    c: Vec<u128>,
}

impl Engine {
    /// Bit `k` (1-based) of every element, using the configured carry mode.
    pub fn extract_bit(&mut self, x: &SharedVec, k: u32) -> Result<SharedVec> {
        match self.config().extraction {
            ExtractionMode::Ripple => self.extract_bit_ripple(x, k, false),
            ExtractionMode::RippleHalf => self.extract_bit_ripple(x, k, true),
            ExtractionMode::Ppa => self.extract_bit_ppa(x, k),
        }
    }

    fn check_index(x: &SharedVec, k: u32) -> Result<()> {
        let cfg = expect_arith(x, "extract_bit")?;
        if k == 0 || k > cfg.n {
            return Err(Error::Domain(format!("bit index {k} outside 1..={}", cfg.n)));
        }
        Ok(())
    }

    /// Ripple-carry extraction in `k + 1` rounds (`1` when `k = 1`). With
    /// `half` set, S1 and S2 split the setup so neither sends more than about
    /// `1.5k` bits per element.
    pub fn extract_bit_ripple(&mut self, x: &SharedVec, k: u32, half: bool) -> Result<SharedVec> {
        Self::check_index(x, k)?;
        let n = x.len();
        let bit = Domain::BIT;
        let m = k - 1;
        // Positions 1..=a go through Sa, a+1..=m through Sb.
        let a = if half { m.div_ceil(2) } else { m };
        let b = m - a;
        let mask_a = low_mask(a);
        let mask_m = low_mask(m);

        let mut state: [RippleState; 4] = Default::default();
        for s in state.iter_mut() {
            s.c = vec![0; n];
            s.u = vec![0; n];
        }

        if m > 0 {
            let setup_dom = Domain::Bits(m);
            state = self.round(
                |ctx| {
                    let me = ctx.me();
                    let mine = &ctx.view(x).first;
                    match me {
                        Server::S1 => {
                            let r = ctx.rand(Server::S2, setup_dom, n);
                            if a > 0 {
                                let msg: Vec<u128> = mine.iter().zip(&r).map(|(v, r)| (v ^ r) & mask_a).collect();
                                ctx.send(Server::Sa, Domain::Bits(a), &msg);
                            }
                            mine.iter().zip(&r).map(|(v, r)| v & r & mask_m & !mask_a).collect()
                        }
                        Server::S2 => {
                            let r = ctx.rand(Server::S1, setup_dom, n);
                            if b > 0 {
                                let msg: Vec<u128> =
                                    mine.iter().zip(&r).map(|(v, r)| ((v ^ r) & mask_m) >> a).collect();
                                ctx.send(Server::Sb, Domain::Bits(b), &msg);
                            }
                            mine.iter().zip(&r).map(|(v, r)| v & r & mask_a).collect()
                        }
                        _ => Vec::new(),
                    }
                },
                |ctx, kept, inbox| {
                    let mine = &ctx.view(x).first;
                    let u = match ctx.me() {
                        Server::S1 | Server::S2 => kept,
                        Server::Sa if a > 0 => {
                            let got = recv(inbox, Server::S1, Domain::Bits(a), n)?;
                            got.iter().zip(mine).map(|(g, v)| g & v & mask_a).collect()
                        }
                        Server::Sb if b > 0 => {
                            let got = recv(inbox, Server::S2, Domain::Bits(b), n)?;
                            got.iter().zip(mine).map(|(g, v)| (g << a) & v & mask_m).collect()
                        }
                        _ => vec![0; n],
                    };
                    Ok(RippleState { u, c: vec![0; n] })
                },
            )?;
        }

        for i in 1..=m {
            let st = &state;
            state = self.round(
                |ctx| {
                    let me = ctx.me();
                    let s = &st[me.index()];
                    let mine = &ctx.view(x).first;
                    let mask = ctx.rand(seed_peer(me), bit, n);
                    let t: Vec<u128> = (0..n)
                        .map(|e| {
                            let xi = (mine[e] >> (i - 1)) & 1;
                            let ui = (s.u[e] >> (i - 1)) & 1;
                            (xi & s.c[e]) ^ ui ^ mask[e]
                        })
                        .collect();
                    ctx.send(carry_partner(me), bit, &t);
                    t
                },
                |ctx, t, inbox| {
                    let me = ctx.me();
                    let other = recv(inbox, carry_partner(me), bit, n)?;
                    Ok(RippleState {
                        u: st[me.index()].u.clone(),
                        c: t.iter().zip(&other).map(|(p, q)| p ^ q).collect(),
                    })
                },
            )?;
        }

        let st = &state;
        let parts = self.round(
            |ctx| {
                let me = ctx.me();
                let c = &st[me.index()].c;
                let mine = &ctx.view(x).first;
                let mask = ctx.rand(seed_peer(me), bit, n);
                let v: Vec<u128> = (0..n).map(|e| ((mine[e] >> (k - 1)) & 1) ^ c[e] ^ mask[e]).collect();
                let to = match me {
                    Server::S1 => Server::Sa,
                    Server::S2 => Server::Sb,
                    Server::Sa => Server::S2,
                    Server::Sb => Server::S1,
                };
                ctx.send(to, bit, &v);
                v
            },
            |ctx, v, inbox| {
                Ok(match ctx.me() {
                    Server::S1 => LocalPair::new(recv(inbox, Server::Sb, bit, n)?, v),
                    Server::S2 => LocalPair::new(recv(inbox, Server::Sa, bit, n)?, v),
                    Server::Sa => LocalPair::new(v, recv(inbox, Server::S1, bit, n)?),
                    Server::Sb => LocalPair::new(v, recv(inbox, Server::S2, bit, n)?),
                })
            },
        )?;
        let out = SharedVec::from_parts(bit, parts);
        debug_check(&out);
        Ok(out)
    }

    /// Prefix-tree extraction in `2 + ceil(log2(k - 1))` rounds for `k >= 2`
    /// and one round for `k = 1`.
    pub fn extract_bit_ppa(&mut self, x: &SharedVec, k: u32) -> Result<SharedVec> {
        Self::check_index(x, k)?;
        let (x1, x2) = self.halves_to_bits(x, k)?;
        let p = x1.add(&x2);
        let pk = unpack(&p, k);
        if k == 1 {
            debug_check(&pk);
            return Ok(pk);
        }
        let g = self.bit_and(&x1, &x2)?;

        // (G, P) per position 1..k-1, low to high.
        let mut nodes: Vec<(SharedVec, SharedVec)> = (1..k).map(|i| (unpack(&g, i), unpack(&p, i))).collect();
        while nodes.len() > 1 {
            let pairs = nodes.len() / 2;
            let last_level = nodes.len() == 2;
            let mut left: Vec<&SharedVec> = Vec::new();
            let mut right: Vec<&SharedVec> = Vec::new();
            for j in 0..pairs {
                let (lo, hi) = (&nodes[2 * j], &nodes[2 * j + 1]);
                left.push(&hi.1);
                right.push(&lo.0);
                if !last_level {
                    left.push(&hi.1);
                    right.push(&lo.1);
                }
            }
            let prod = self.bit_and(&SharedVec::concat(&left), &SharedVec::concat(&right))?;
            let n = x.len();
            let per = if last_level { 1 } else { 2 };
            let mut next = Vec::with_capacity(pairs + 1);
            for j in 0..pairs {
                let hi = &nodes[2 * j + 1];
                let base = j * per * n;
                let gen = hi.0.add(&prod.slice(base, base + n));
                let prop = if last_level { SharedVec::empty(Domain::BIT) } else { prod.slice(base + n, base + 2 * n) };
                next.push((gen, prop));
            }
            if nodes.len() % 2 == 1 {
                next.push(nodes.pop().expect("odd node"));
            }
            nodes = next;
        }
        let carry = &nodes[0].0;
        let out = pk.add(carry);
        debug_check(&out);
        Ok(out)
    }

    /// Bit shares of the low `k` bits of `x1` and of `x2`, in one round. Sb
    /// masks `x1` with a seed it shares with S2 and sends it to S1 and Sa; Sa
    /// does the same for `x2` with S1's seed.
    fn halves_to_bits(&mut self, x: &SharedVec, k: u32) -> Result<(SharedVec, SharedVec)> {
        let n = x.len();
        let dom = Domain::Bits(k);
        let mask = dom.mask();
        let parts = self.round(
            |ctx| {
                let me = ctx.me();
                let mine: Vec<u128> = ctx.view(x).first.iter().map(|v| v & mask).collect();
                match me {
                    Server::S1 => ctx.rand(Server::Sa, dom, n),
                    Server::S2 => ctx.rand(Server::Sb, dom, n),
                    Server::Sa => {
                        let tau = ctx.rand(Server::S1, dom, n);
                        let w: Vec<u128> = mine.iter().zip(&tau).map(|(v, t)| v ^ t).collect();
                        ctx.send(Server::S2, dom, &w);
                        ctx.send(Server::Sb, dom, &w);
                        tau
                    }
                    Server::Sb => {
                        let sigma = ctx.rand(Server::S2, dom, n);
                        let v: Vec<u128> = mine.iter().zip(&sigma).map(|(v, s)| v ^ s).collect();
                        ctx.send(Server::S1, dom, &v);
                        ctx.send(Server::Sa, dom, &v);
                        sigma
                    }
                }
            },
            |ctx, kept, inbox| {
                let mine: Vec<u128> = ctx.view(x).first.iter().map(|v| v & mask).collect();
                let zero = vec![0u128; n];
                Ok(match ctx.me() {
                    // kept = tau (shared with Sa)
                    Server::S1 => (LocalPair::new(mine, recv(inbox, Server::Sb, dom, n)?), LocalPair::new(zero, kept)),
                    // kept = sigma (shared with Sb)
                    Server::S2 => (LocalPair::new(zero, kept), LocalPair::new(mine, recv(inbox, Server::Sa, dom, n)?)),
                    Server::Sa => (LocalPair::new(zero, recv(inbox, Server::Sb, dom, n)?), LocalPair::new(mine, kept)),
                    Server::Sb => (LocalPair::new(mine, kept), LocalPair::new(zero, recv(inbox, Server::Sa, dom, n)?)),
                })
            },
        )?;
        let [(a1, b1), (a2, b2), (aa, ba), (ab, bb)] = parts;
        let x1 = SharedVec::from_parts(dom, [a1, a2, aa, ab]);
        let x2 = SharedVec::from_parts(dom, [b1, b2, ba, bb]);
        debug_check(&x1);
        debug_check(&x2);
        Ok((x1, x2))
    }
}

/// Bit `i` of every component of a bit-word share, as single-bit shares.
fn unpack(x: &SharedVec, i: u32) -> SharedVec {
    x.map_local(Domain::BIT, |_, p| {
        LocalPair::new(
            p.first.iter().map(|v| (v >> (i - 1)) & 1).collect(),
            p.second.iter().map(|v| (v >> (i - 1)) & 1).collect(),
        )
    })
}

#[cfg(test)]
mod tests {
    use crate::engine::{Engine, EngineConfig, ExtractionMode};
    use crate::netsim::NetStats;
    use crate::sharing::{oracle_drift, Server};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_n8(e: &mut Engine) -> crate::SharedVec {
        let raw: Vec<u128> = (0..256).collect();
        let dom = e.arith();
        e.share_input_raw(0, &raw, dom).unwrap()
    }

    fn exhaustive(mode: ExtractionMode) {
        let mut e = Engine::new(EngineConfig::default().with_ring(8, 2).unwrap().with_seed(6));
        let x = all_n8(&mut e);
        for k in 1..=8 {
            let b = match mode {
                ExtractionMode::Ripple => e.extract_bit_ripple(&x, k, false),
                ExtractionMode::RippleHalf => e.extract_bit_ripple(&x, k, true),
                ExtractionMode::Ppa => e.extract_bit_ppa(&x, k),
            }
            .unwrap();
            assert_eq!(oracle_drift(&b), Some(0));
            let got = e.reveal_bits(&b).unwrap();
            let want: Vec<u128> = (0..256u128).map(|v| (v >> (k - 1)) & 1).collect();
            assert_eq!(got, want, "k={k} {mode:?}");
        }
    }

    #[test]
    fn ripple_exhaustive_n8() {
        exhaustive(ExtractionMode::Ripple);
    }

    #[test]
    fn ripple_half_exhaustive_n8() {
        exhaustive(ExtractionMode::RippleHalf);
    }

    #[test]
    fn ppa_exhaustive_n8() {
        exhaustive(ExtractionMode::Ppa);
    }

    #[test]
    fn sign_and_low_bit() {
        let mut e = Engine::new(EngineConfig::default());
        let x = e.share_input(0, &[-1.0]).unwrap();
        let s = e.extract_bit(&x, 128).unwrap();
        assert_eq!(e.reveal_bits(&s).unwrap(), vec![1]);
        let five = e.share_input_raw(0, &[5], e.arith()).unwrap();
        let l = e.extract_bit(&five, 1).unwrap();
        assert_eq!(e.reveal_bits(&l).unwrap(), vec![1]);
    }

    #[test]
    fn index_out_of_range() {
        let mut e = Engine::new(EngineConfig::default().with_ring(8, 2).unwrap());
        let x = e.share_input(0, &[1.0]).unwrap();
        assert!(e.extract_bit(&x, 0).is_err());
        assert!(e.extract_bit(&x, 9).is_err());
    }

    fn cost(mode: ExtractionMode, k: u32) -> NetStats {
        let mut e = Engine::new(EngineConfig::default().with_seed(2).with_extraction(mode));
        let x = e.share_input(0, &[3.0]).unwrap();
        let before = e.stats();
        e.extract_bit(&x, k).unwrap();
        NetStats::diff(&before, &e.stats())
    }

    #[test]
    fn ripple_bit_budget() {
        for k in [1u32, 2, 3, 17, 64, 128] {
            let d = cost(ExtractionMode::Ripple, k);
            assert_eq!(d.total_rounds, if k == 1 { 1 } else { k as u64 + 1 });
            for s in Server::ALL {
                assert!(d.server(s).bits <= 2 * k as u64, "k={k} {s}: {}", d.server(s).bits);
            }
            let h = cost(ExtractionMode::RippleHalf, k);
            for s in Server::ALL {
                assert!(2 * h.server(s).bits <= 3 * k as u64 + 1, "half k={k} {s}: {}", h.server(s).bits);
            }
        }
    }

    #[test]
    fn ppa_round_budget() {
        assert_eq!(cost(ExtractionMode::Ppa, 1).total_rounds, 1);
        assert_eq!(cost(ExtractionMode::Ppa, 2).total_rounds, 2);
        for k in [2u32, 3, 5, 16, 64, 128] {
            let r = cost(ExtractionMode::Ppa, k).total_rounds;
            let log = (k as f64).log2().ceil() as u64;
            assert!(r <= 2 * log + 2, "k={k}: {r}");
        }
        assert!(cost(ExtractionMode::Ppa, 64).total_rounds < cost(ExtractionMode::Ripple, 64).total_rounds);
    }

    #[test]
    fn comparisons_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for mode in [ExtractionMode::Ripple, ExtractionMode::Ppa] {
            let mut e = Engine::new(EngineConfig::default().with_seed(12).with_extraction(mode));
            let a: Vec<f64> = (0..400).map(|_| rng.gen_range(-1e3..1e3)).collect();
            let mut b: Vec<f64> = (0..400).map(|_| rng.gen_range(-1e3..1e3)).collect();
            b[0] = a[0];
            let sa = e.share_input(0, &a).unwrap();
            let sb = e.share_input(0, &b).unwrap();
            let lt = e.less_than(&sa, &sb).unwrap();
            let got = e.reveal_bits(&lt).unwrap();
            for i in 0..a.len() {
                assert_eq!(got[i], (a[i] < b[i]) as u128, "{} < {}", a[i], b[i]);
            }
        }
    }
}
