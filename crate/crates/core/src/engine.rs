//! The four-server engine: party state, round execution, input sharing and
//! reveal.
//!
//! Protocol code is written as two closures per round. The first runs at each
//! server with that server's context and returns whatever it needs to keep;
//! the second runs after the barrier with the kept state and the server's
//! inbox. A context exposes only its own server's share components and seeds.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::netsim::{Inbox, LatencyModel, NetStats, Network, Outbox};
use crate::ring::RingConfig;
use crate::sharing::{client_split, debug_check, Domain, LocalPair, PartyId, PartySeeds, SeedTable, Server, SharedVec};

/// How the carry chain of bit extraction is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExtractionMode {
    /// One carry per round; every server sends at most `2k` bits.
    #[default]
    Ripple,
    /// Ripple with the `x1 AND x2` setup split between S1 and S2, so no
    /// server sends more than `1.5k` bits.
    RippleHalf,
    /// Log-depth reduction tree over generate/propagate pairs.
    Ppa,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheduler {
    /// Single-threaded, deterministic.
    #[default]
    LockStep,
    /// One thread per server per round, messages routed over channels.
    Actor,
}

#[derive(Clone, Copy, Debug)]
pub struct EngineConfig {
    pub ring: RingConfig,
    pub seed: u64,
    pub extraction: ExtractionMode,
    pub latency: LatencyModel,
    pub scheduler: Scheduler,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            ring: RingConfig::default(),
            seed: 0,
            extraction: ExtractionMode::Ripple,
            latency: LatencyModel::default(),
            scheduler: Scheduler::LockStep,
        }
    }
}

impl EngineConfig {
    pub fn with_ring(mut self, n: u32, d: u32) -> Result<Self> {
        self.ring = RingConfig::new(n, d)?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_extraction(mut self, mode: ExtractionMode) -> Self {
        self.extraction = mode;
        self
    }

    pub fn with_scheduler(mut self, s: Scheduler) -> Self {
        self.scheduler = s;
        self
    }

    pub fn with_latency(mut self, l: LatencyModel) -> Self {
        self.latency = l;
        self
    }
}

/// A server's view during one round.
pub struct PartyCtx<'a> {
    me: Server,
    seeds: &'a mut PartySeeds,
    out: Outbox,
}

impl<'a> PartyCtx<'a> {
    pub fn me(&self) -> Server {
        self.me
    }

    /// This server's components of `x`.
    pub fn view<'x>(&self, x: &'x SharedVec) -> &'x LocalPair {
        x.part(self.me)
    }

    /// Next block from the seed shared with `peer`.
    pub fn rand(&mut self, peer: Server, dom: Domain, count: usize) -> Vec<u128> {
        self.seeds.with(peer).next_block(dom, count)
    }

    pub fn send(&mut self, to: Server, dom: Domain, values: &[u128]) {
        let bits = values.len() as u64 * dom.element_bits();
        self.out.send(to, dom.encode(values), bits);
    }
}

pub fn recv(inbox: &mut Inbox, from: Server, dom: Domain, count: usize) -> Result<Vec<u128>> {
    let msg = inbox.recv(from)?;
    dom.decode(&msg.payload, count)
}

pub struct Engine {
    cfg: EngineConfig,
    net: Network,
    seeds: [PartySeeds; 4],
    clients: BTreeMap<u32, ChaCha12Rng>,
    truncation_probe: Option<Vec<(u128, u128)>>,
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Self {
        let table = SeedTable::generate(cfg.seed);
        Engine {
            seeds: Server::ALL.map(|s| table.streams_for(s)),
            net: Network::new(cfg.latency),
            clients: BTreeMap::new(),
            truncation_probe: None,
            cfg,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn ring(&self) -> RingConfig {
        self.cfg.ring
    }

    pub fn arith(&self) -> Domain {
        Domain::Arith(self.cfg.ring)
    }

    pub fn set_extraction(&mut self, mode: ExtractionMode) {
        self.cfg.extraction = mode;
    }

    pub fn stats(&self) -> NetStats {
        self.net.stats_snapshot()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    /// Records the pre-truncation unprimed shares `(t1 + tb, t2 + ta)` of
    /// subsequent multiplications so tests can tell a wrap-around failure of
    /// local truncation from an arithmetic bug.
    pub fn enable_truncation_probe(&mut self) {
        self.truncation_probe = Some(Vec::new());
    }

    pub fn take_truncation_probe(&mut self) -> Vec<(u128, u128)> {
        self.truncation_probe.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub(crate) fn probing(&self) -> bool {
        self.truncation_probe.is_some()
    }

    pub(crate) fn probe_truncation(&mut self, a: &[u128], b: &[u128]) {
        if let Some(p) = self.truncation_probe.as_mut() {
            p.extend(a.iter().copied().zip(b.iter().copied()));
        }
    }

    /// Runs one epoch across the four servers.
    pub fn round<S, T>(
        &mut self,
        send: impl Fn(&mut PartyCtx<'_>) -> S + Sync,
        recv: impl Fn(&mut PartyCtx<'_>, S, &mut Inbox) -> Result<T> + Sync,
    ) -> Result<[T; 4]>
    where
        S: Send,
        T: Send,
    {
        match self.cfg.scheduler {
            Scheduler::LockStep => self.round_lockstep(send, recv),
            Scheduler::Actor => self.round_actor(send, recv),
        }
    }

    fn round_lockstep<S, T>(
        &mut self,
        send: impl Fn(&mut PartyCtx<'_>) -> S,
        recv: impl Fn(&mut PartyCtx<'_>, S, &mut Inbox) -> Result<T>,
    ) -> Result<[T; 4]> {
        let mut kept = Vec::with_capacity(4);
        for (i, seeds) in self.seeds.iter_mut().enumerate() {
            let me = Server::from_index(i);
            let mut ctx = PartyCtx { me, seeds, out: Outbox::new(me.into()) };
            kept.push(send(&mut ctx));
            self.net.post_outbox(ctx.out)?;
        }
        self.net.barrier();
        let mut results = Vec::with_capacity(4);
        for ((i, seeds), st) in self.seeds.iter_mut().enumerate().zip(kept) {
            let me = Server::from_index(i);
            let mut inbox = self.net.drain_inbox(me.into());
            let mut ctx = PartyCtx { me, seeds, out: Outbox::new(me.into()) };
            results.push(recv(&mut ctx, st, &mut inbox)?);
            debug_assert_eq!(inbox.pending(), 0, "{me} left messages unread");
            debug_assert!(ctx.out.is_empty(), "{me} sent after the barrier");
        }
        Ok(results.try_into().unwrap_or_else(|_| unreachable!()))
    }

    fn round_actor<S, T>(
        &mut self,
        send: impl Fn(&mut PartyCtx<'_>) -> S + Sync,
        recv: impl Fn(&mut PartyCtx<'_>, S, &mut Inbox) -> Result<T> + Sync,
    ) -> Result<[T; 4]>
    where
        S: Send,
        T: Send,
    {
        use crossbeam_channel::{bounded, unbounded};

        let (out_tx, out_rx) = unbounded::<(usize, Outbox)>();
        let mut in_txs = Vec::with_capacity(4);
        let mut in_rxs = Vec::with_capacity(4);
        for _ in 0..4 {
            let (tx, rx) = bounded::<Inbox>(1);
            in_txs.push(tx);
            in_rxs.push(rx);
        }
        let send = &send;
        let recv = &recv;
        let net = &mut self.net;
        let seeds = &mut self.seeds;

        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .iter_mut()
                .zip(in_rxs)
                .enumerate()
                .map(|(i, (seeds, in_rx))| {
                    let out_tx = out_tx.clone();
                    scope.spawn(move || -> Result<T> {
                        let me = Server::from_index(i);
                        let mut ctx = PartyCtx { me, seeds, out: Outbox::new(me.into()) };
                        let st = send(&mut ctx);
                        let out = std::mem::replace(&mut ctx.out, Outbox::new(me.into()));
                        out_tx.send((i, out)).map_err(|_| Error::Config("router hung up".into()))?;
                        let mut inbox = in_rx.recv().map_err(|_| Error::Config("router hung up".into()))?;
                        recv(&mut ctx, st, &mut inbox)
                    })
                })
                .collect();
            drop(out_tx);

            // Router: post in server order so traces match lock-step mode.
            let mut outs: Vec<Option<Outbox>> = (0..4).map(|_| None).collect();
            for _ in 0..4 {
                let (i, out) = out_rx.recv().map_err(|_| Error::Config("actor exited early".into()))?;
                outs[i] = Some(out);
            }
            for out in outs.into_iter().flatten() {
                net.post_outbox(out)?;
            }
            net.barrier();
            for (i, tx) in in_txs.iter().enumerate() {
                let inbox = net.drain_inbox(Server::from_index(i).into());
                tx.send(inbox).map_err(|_| Error::Config("actor exited early".into()))?;
            }
            let mut results = Vec::with_capacity(4);
            for h in handles {
                results.push(h.join().expect("actor panicked")?);
            }
            Ok(results.try_into().unwrap_or_else(|_| unreachable!()))
        })
    }

    /// Applies a purely local step at each server (no messages, no round).
    pub fn local<T>(&mut self, f: impl Fn(&mut PartyCtx<'_>) -> T) -> [T; 4] {
        let mut out = Vec::with_capacity(4);
        for (i, seeds) in self.seeds.iter_mut().enumerate() {
            let me = Server::from_index(i);
            let mut ctx = PartyCtx { me, seeds, out: Outbox::new(me.into()) };
            out.push(f(&mut ctx));
            debug_assert!(ctx.out.is_empty());
        }
        out.try_into().unwrap_or_else(|_| unreachable!())
    }

    pub fn attach_client(&mut self, client: u32) {
        let id = PartyId::Client(client);
        if !self.net.is_registered(id) {
            self.net.register(id);
            let seed = self.cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(client as u64 + 1);
            self.clients.insert(client, ChaCha12Rng::seed_from_u64(seed));
        }
    }

    /// Client-side sharing of private inputs: the client splits each value
    /// into `(x1, x2)` and uploads them to S1 and S2, then the servers run
    /// [`Engine::share_init`].
    pub fn share_input(&mut self, client: u32, values: &[f64]) -> Result<SharedVec> {
        let cfg = self.cfg.ring;
        let encoded = values.iter().map(|v| cfg.encode(*v)).collect::<Result<Vec<_>>>()?;
        self.attach_client(client);
        let rng = self.clients.get_mut(&client).expect("client attached");
        let (x1, x2) = encoded.iter().map(|x| client_split(x, rng)).unzip();
        self.upload_and_init(client, Domain::Arith(cfg), x1, x2)
    }

    /// Client-side sharing of raw domain elements (ring integers or bit
    /// words).
    pub fn share_input_raw(&mut self, client: u32, raw: &[u128], dom: Domain) -> Result<SharedVec> {
        self.attach_client(client);
        let rng = self.clients.get_mut(&client).expect("client attached");
        let (x1, x2) = raw
            .iter()
            .map(|v| {
                let x1 = rng.gen::<u128>() & dom.mask();
                (x1, dom.sub(*v & dom.mask(), x1))
            })
            .unzip();
        self.upload_and_init(client, dom, x1, x2)
    }

    /// Shares bit words from client 0.
    pub fn share_bits(&mut self, words: &[u128], dom: Domain) -> Result<SharedVec> {
        if dom.arith().is_some() {
            return Err(Error::Domain("share_bits needs a bit domain".into()));
        }
        self.share_input_raw(0, words, dom)
    }

    fn upload_and_init(&mut self, client: u32, dom: Domain, x1: Vec<u128>, x2: Vec<u128>) -> Result<SharedVec> {
        let n = x1.len();
        let me = PartyId::Client(client);
        let bits = n as u64 * dom.element_bits();
        self.net.post(me, PartyId::S1, dom.encode(&x1), bits)?;
        self.net.post(me, PartyId::S2, dom.encode(&x2), bits)?;
        self.net.barrier();
        let m1 = self.net.take(PartyId::S1, me)?;
        let m2 = self.net.take(PartyId::S2, me)?;
        let x1 = dom.decode(&m1.payload, n)?;
        let x2 = dom.decode(&m2.payload, n)?;
        self.share_init(dom, x1, x2)
    }

    /// Builds the replicated layout from an additive pair held by S1 and S2:
    /// S1 forwards `x1` to Sb and S2 forwards `x2` to Sa; then both derive the
    /// same `r` from their common seed, set `x1' = x1 - r`, `x2' = x2 + r`,
    /// and send them to Sa and Sb respectively.
    pub fn share_init(&mut self, dom: Domain, x1: Vec<u128>, x2: Vec<u128>) -> Result<SharedVec> {
        let n = x1.len();
        let (x1, x2) = (&x1, &x2);

        let first = self.round(
            |ctx| match ctx.me() {
                Server::S1 => ctx.send(Server::Sb, dom, x1),
                Server::S2 => ctx.send(Server::Sa, dom, x2),
                _ => {}
            },
            |ctx, (), inbox| match ctx.me() {
                Server::S1 => Ok(x1.clone()),
                Server::S2 => Ok(x2.clone()),
                Server::Sa => recv(inbox, Server::S2, dom, n),
                Server::Sb => recv(inbox, Server::S1, dom, n),
            },
        )?;
        let first = &first;

        let second = self.round(
            |ctx| match ctx.me() {
                Server::S1 => {
                    let r = ctx.rand(Server::S2, dom, n);
                    let p: Vec<u128> = x1.iter().zip(&r).map(|(a, r)| dom.sub(*a, *r)).collect();
                    ctx.send(Server::Sa, dom, &p);
                    Some(p)
                }
                Server::S2 => {
                    let r = ctx.rand(Server::S1, dom, n);
                    let p: Vec<u128> = x2.iter().zip(&r).map(|(a, r)| dom.add(*a, *r)).collect();
                    ctx.send(Server::Sb, dom, &p);
                    Some(p)
                }
                _ => None,
            },
            |ctx, mine, inbox| {
                let me = ctx.me();
                let prime = match me {
                    Server::S1 | Server::S2 => mine.expect("kept"),
                    Server::Sa => recv(inbox, Server::S1, dom, n)?,
                    Server::Sb => recv(inbox, Server::S2, dom, n)?,
                };
                Ok(LocalPair::new(first[me.index()].clone(), prime))
            },
        )?;
        let out = SharedVec::from_parts(dom, second);
        debug_check(&out);
        Ok(out)
    }

    /// Shares of public values; local, no messages.
    pub fn share_public(&self, values: &[f64]) -> Result<SharedVec> {
        let cfg = self.cfg.ring;
        let raw = values.iter().map(|v| cfg.encode_raw(*v)).collect::<Result<Vec<_>>>()?;
        Ok(SharedVec::public(Domain::Arith(cfg), &raw))
    }

    pub fn share_public_raw(&self, dom: Domain, raw: &[u128]) -> SharedVec {
        SharedVec::public(dom, raw)
    }

    pub fn add_public(&self, x: &SharedVec, values: &[f64]) -> Result<SharedVec> {
        let cfg = self.cfg.ring;
        let raw = values.iter().map(|v| cfg.encode_raw(*v)).collect::<Result<Vec<_>>>()?;
        Ok(x.add_public_raw(&raw))
    }

    /// Opens `x` to each recipient. A client gets `x1` from S1 and `x2` from
    /// S2; a server gets whichever half it lacks. One round.
    pub fn reveal_raw(&mut self, x: &SharedVec, recipients: &[PartyId]) -> Result<Vec<u128>> {
        let dom = x.domain();
        let n = x.len();
        if recipients.is_empty() {
            return Err(Error::Config("reveal needs at least one recipient".into()));
        }
        for r in recipients {
            if let PartyId::Client(k) = r {
                self.attach_client(*k);
            }
        }
        // (sender, half) for every recipient; half 0 is x1, 1 is x2.
        let plan = |to: PartyId| -> Vec<(Server, usize)> {
            match to {
                PartyId::Client(_) => vec![(Server::S1, 0), (Server::S2, 1)],
                PartyId::Server(Server::S1) | PartyId::Server(Server::Sb) => vec![(Server::S2, 1)],
                PartyId::Server(Server::S2) | PartyId::Server(Server::Sa) => vec![(Server::S1, 0)],
            }
        };
        for &to in recipients {
            for (from, _) in plan(to) {
                let payload = x.part(from).first.clone();
                self.net.post(from.into(), to, dom.encode(&payload), n as u64 * dom.element_bits())?;
            }
        }
        self.net.barrier();
        let mut answer: Option<Vec<u128>> = None;
        for &to in recipients {
            let mut halves: [Option<Vec<u128>>; 2] = [None, None];
            if let PartyId::Server(s) = to {
                let own = x.part(s).first.clone();
                match s {
                    Server::S1 | Server::Sb => halves[0] = Some(own),
                    Server::S2 | Server::Sa => halves[1] = Some(own),
                }
            }
            for (from, half) in plan(to) {
                let msg = self.net.take(to, from.into())?;
                halves[half] = Some(dom.decode(&msg.payload, n)?);
            }
            let [Some(a), Some(b)] = halves else { unreachable!("reveal plan covers both halves") };
            let v: Vec<u128> = a.iter().zip(&b).map(|(a, b)| dom.add(*a, *b)).collect();
            if let Some(prev) = &answer {
                debug_assert_eq!(prev, &v);
            }
            answer = Some(v);
        }
        Ok(answer.unwrap_or_default())
    }

    /// Opens fixed-point shares to client 0 and decodes them.
    pub fn reveal(&mut self, x: &SharedVec) -> Result<Vec<f64>> {
        self.reveal_to(x, &[PartyId::Client(0)])
    }

    pub fn reveal_to(&mut self, x: &SharedVec, recipients: &[PartyId]) -> Result<Vec<f64>> {
        let cfg = x.domain().arith().ok_or_else(|| Error::Config("fixed-point reveal of a bit share".into()))?;
        Ok(self.reveal_raw(x, recipients)?.into_iter().map(|r| cfg.decode_raw(r)).collect())
    }

    pub fn reveal_bits(&mut self, x: &SharedVec) -> Result<Vec<u128>> {
        self.reveal_raw(x, &[PartyId::Client(0)])
    }
}
