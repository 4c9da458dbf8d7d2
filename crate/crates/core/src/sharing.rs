//! The replicated 2-out-of-4 share layout.
//!
//! A secret `x` is split into two additive sharings, `x = x1 + x2` and
//! `x = x1' + x2'`. The four servers hold
//!
//! | server | first | second |
//! |--------|-------|--------|
//! | S1     | x1    | x1'    |
//! | S2     | x2    | x2'    |
//! | Sa     | x2    | x1'    |
//! | Sb     | x1    | x2'    |
//!
//! so every server sees two independent uniform values and any of the pairs
//! (S1,S2), (S1,Sa), (S2,Sb), (Sa,Sb) can reconstruct.
//!
//! The same layout over `Z_2` (packed into words of `width` bits) carries bit
//! shares, with addition replaced by XOR and multiplication by AND.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{FixedPoint, Ring, RingConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Server {
    S1,
    S2,
    Sa,
    Sb,
}

impl Server {
    pub const ALL: [Server; 4] = [Server::S1, Server::S2, Server::Sa, Server::Sb];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Server {
        Server::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Server::S1 => "S1",
            Server::S2 => "S2",
            Server::Sa => "Sa",
            Server::Sb => "Sb",
        }
    }
}

impl fmt::Display for Server {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A participant on the simulated network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartyId {
    Server(Server),
    Client(u32),
}

impl PartyId {
    pub const S1: PartyId = PartyId::Server(Server::S1);
    pub const S2: PartyId = PartyId::Server(Server::S2);
    pub const SA: PartyId = PartyId::Server(Server::Sa);
    pub const SB: PartyId = PartyId::Server(Server::Sb);
}

impl From<Server> for PartyId {
    fn from(s: Server) -> Self {
        PartyId::Server(s)
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Server(s) => write!(f, "{s}"),
            PartyId::Client(k) => write!(f, "C{k}"),
        }
    }
}

/// What the share components live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// `Z_{2^n}` carrying fixed-point values.
    Arith(RingConfig),
    /// `Z_2^width`, bitwise. `width` is at most 128.
    Bits(u32),
}

impl Domain {
    pub const BIT: Domain = Domain::Bits(1);

    pub fn mask(&self) -> u128 {
        match self {
            Domain::Arith(cfg) => cfg.ring().mask(),
            Domain::Bits(w) => Ring::new(*w).mask(),
        }
    }

    /// Logical bits per element on the wire.
    pub fn element_bits(&self) -> u64 {
        match self {
            Domain::Arith(cfg) => cfg.n as u64,
            Domain::Bits(w) => *w as u64,
        }
    }

    #[inline]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        match self {
            Domain::Arith(cfg) => cfg.ring().add(a, b),
            Domain::Bits(_) => a ^ b,
        }
    }

    #[inline]
    pub fn sub(&self, a: u128, b: u128) -> u128 {
        match self {
            Domain::Arith(cfg) => cfg.ring().sub(a, b),
            Domain::Bits(_) => a ^ b,
        }
    }

    #[inline]
    pub fn neg(&self, a: u128) -> u128 {
        match self {
            Domain::Arith(cfg) => cfg.ring().neg(a),
            Domain::Bits(_) => a,
        }
    }

    #[inline]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        match self {
            Domain::Arith(cfg) => cfg.ring().mul(a, b),
            Domain::Bits(_) => a & b,
        }
    }

    pub fn arith(&self) -> Option<RingConfig> {
        match self {
            Domain::Arith(cfg) => Some(*cfg),
            Domain::Bits(_) => None,
        }
    }

    /// Serializes elements: little-endian `ceil(n/8)`-byte words for the
    /// arithmetic ring, a packed LSB-first bitstream for bit words.
    pub fn encode(&self, values: &[u128]) -> Vec<u8> {
        match self {
            Domain::Arith(cfg) => {
                let w = cfg.element_bytes();
                let mut out = Vec::with_capacity(values.len() * w);
                for v in values {
                    out.extend_from_slice(&v.to_le_bytes()[..w]);
                }
                out
            }
            Domain::Bits(width) => {
                let width = *width as usize;
                let total = values.len() * width;
                let mut out = vec![0u8; total.div_ceil(8)];
                let mut pos = 0usize;
                for v in values {
                    for b in 0..width {
                        if (v >> b) & 1 == 1 {
                            out[pos / 8] |= 1 << (pos % 8);
                        }
                        pos += 1;
                    }
                }
                out
            }
        }
    }

    pub fn decode(&self, bytes: &[u8], count: usize) -> Result<Vec<u128>> {
        match self {
            Domain::Arith(cfg) => {
                let w = cfg.element_bytes();
                if bytes.len() != w * count {
                    return Err(Error::Payload(format!(
                        "expected {} bytes for {count} elements, got {}",
                        w * count,
                        bytes.len()
                    )));
                }
                Ok(bytes
                    .chunks_exact(w)
                    .map(|c| {
                        let mut buf = [0u8; 16];
                        buf[..w].copy_from_slice(c);
                        u128::from_le_bytes(buf) & cfg.ring().mask()
                    })
                    .collect())
            }
            Domain::Bits(width) => {
                let width = *width as usize;
                if bytes.len() != (count * width).div_ceil(8) {
                    return Err(Error::Payload(format!(
                        "expected {} bit-packed bytes for {count} words, got {}",
                        (count * width).div_ceil(8),
                        bytes.len()
                    )));
                }
                let mut out = Vec::with_capacity(count);
                let mut pos = 0usize;
                for _ in 0..count {
                    let mut v = 0u128;
                    for b in 0..width {
                        if (bytes[pos / 8] >> (pos % 8)) & 1 == 1 {
                            v |= 1 << b;
                        }
                        pos += 1;
                    }
                    out.push(v);
                }
                Ok(out)
            }
        }
    }
}

/// One server's pair of components for every element of a shared vector.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LocalPair {
    pub first: Vec<u128>,
    pub second: Vec<u128>,
}

impl LocalPair {
    pub fn new(first: Vec<u128>, second: Vec<u128>) -> Self {
        debug_assert_eq!(first.len(), second.len());
        LocalPair { first, second }
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn gather(&self, idx: &[usize]) -> LocalPair {
        LocalPair {
            first: idx.iter().map(|&i| self.first[i]).collect(),
            second: idx.iter().map(|&i| self.second[i]).collect(),
        }
    }
}

/// A vector of replicated shares, stored as each server's local view.
///
/// The per-server storage is private; protocol code reaches it only through
/// the round context of the server that owns it:
///
/// ```compile_fail
/// fn peek(x: &quadshare::SharedVec) {
///     let _ = &x.parts[1];
/// }
/// ```
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedVec {
    domain: Domain,
    parts: [LocalPair; 4],
}

impl SharedVec {
    pub(crate) fn from_parts(domain: Domain, parts: [LocalPair; 4]) -> Self {
        debug_assert!(parts.iter().all(|p| p.len() == parts[0].len()));
        SharedVec { domain, parts }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.parts[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn part(&self, s: Server) -> &LocalPair {
        &self.parts[s.index()]
    }

    pub fn empty(domain: Domain) -> Self {
        SharedVec::from_parts(domain, Default::default())
    }

    /// Shares of public values: `x1 = x1' = v`, `x2 = x2' = 0`.
    pub(crate) fn public(domain: Domain, values: &[u128]) -> Self {
        let v = values.to_vec();
        let z = vec![0u128; values.len()];
        SharedVec::from_parts(
            domain,
            [
                LocalPair::new(v.clone(), v.clone()),
                LocalPair::new(z.clone(), z.clone()),
                LocalPair::new(z.clone(), v.clone()),
                LocalPair::new(v, z),
            ],
        )
    }

    /// Applies the same local map to every server's view.
    pub(crate) fn map_local(&self, domain: Domain, f: impl Fn(Server, &LocalPair) -> LocalPair) -> SharedVec {
        let parts = Server::ALL.map(|s| f(s, self.part(s)));
        SharedVec::from_parts(domain, parts)
    }

    pub(crate) fn zip_local(
        &self,
        other: &SharedVec,
        domain: Domain,
        f: impl Fn(Server, &LocalPair, &LocalPair) -> LocalPair,
    ) -> SharedVec {
        debug_assert_eq!(self.len(), other.len());
        let parts = Server::ALL.map(|s| f(s, self.part(s), other.part(s)));
        SharedVec::from_parts(domain, parts)
    }

    /// Element gather, applied identically at every server.
    pub fn gather(&self, idx: &[usize]) -> SharedVec {
        self.map_local(self.domain, |_, p| p.gather(idx))
    }

    pub fn concat(items: &[&SharedVec]) -> SharedVec {
        let domain = items.first().map(|x| x.domain).unwrap_or(Domain::BIT);
        let parts = Server::ALL.map(|s| {
            let mut out = LocalPair::default();
            for it in items {
                out.first.extend_from_slice(&it.part(s).first);
                out.second.extend_from_slice(&it.part(s).second);
            }
            out
        });
        SharedVec::from_parts(domain, parts)
    }

    pub fn slice(&self, start: usize, end: usize) -> SharedVec {
        self.map_local(self.domain, |_, p| LocalPair::new(p.first[start..end].to_vec(), p.second[start..end].to_vec()))
    }

    pub fn add(&self, other: &SharedVec) -> SharedVec {
        let dom = self.domain;
        self.zip_local(other, dom, |_, a, b| {
            LocalPair::new(
                a.first.iter().zip(&b.first).map(|(x, y)| dom.add(*x, *y)).collect(),
                a.second.iter().zip(&b.second).map(|(x, y)| dom.add(*x, *y)).collect(),
            )
        })
    }

    pub fn sub(&self, other: &SharedVec) -> SharedVec {
        let dom = self.domain;
        self.zip_local(other, dom, |_, a, b| {
            LocalPair::new(
                a.first.iter().zip(&b.first).map(|(x, y)| dom.sub(*x, *y)).collect(),
                a.second.iter().zip(&b.second).map(|(x, y)| dom.sub(*x, *y)).collect(),
            )
        })
    }

    pub fn neg(&self) -> SharedVec {
        let dom = self.domain;
        self.map_local(dom, |_, a| {
            LocalPair::new(
                a.first.iter().map(|x| dom.neg(*x)).collect(),
                a.second.iter().map(|x| dom.neg(*x)).collect(),
            )
        })
    }

    /// Adds public ring elements. Only the `x1` and `x1'` components move,
    /// which S1 holds both of, Sb holds as `xb` and Sa holds as `xa'`.
    pub fn add_public_raw(&self, values: &[u128]) -> SharedVec {
        debug_assert_eq!(values.len(), self.len());
        let dom = self.domain;
        self.map_local(dom, |s, a| {
            let bump = |v: &Vec<u128>| v.iter().zip(values).map(|(x, c)| dom.add(*x, *c)).collect();
            match s {
                Server::S1 => LocalPair::new(bump(&a.first), bump(&a.second)),
                Server::S2 => a.clone(),
                Server::Sa => LocalPair::new(a.first.clone(), bump(&a.second)),
                Server::Sb => LocalPair::new(bump(&a.first), a.second.clone()),
            }
        })
    }

    /// Multiplies every component by a public ring element (no truncation).
    pub fn scale_raw(&self, values: &[u128]) -> SharedVec {
        debug_assert_eq!(values.len(), self.len());
        let dom = self.domain;
        self.map_local(dom, |_, a| {
            LocalPair::new(
                a.first.iter().zip(values).map(|(x, c)| dom.mul(*x, *c)).collect(),
                a.second.iter().zip(values).map(|(x, c)| dom.mul(*x, *c)).collect(),
            )
        })
    }
}

/// The full 8-component tuple of one shared element. Only test and debug code
/// assembles it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadShare {
    pub x1: u128,
    pub x1p: u128,
    pub x2: u128,
    pub x2p: u128,
    pub xa: u128,
    pub xap: u128,
    pub xb: u128,
    pub xbp: u128,
}

impl QuadShare {
    /// The four replication equalities.
    pub fn is_replicated(&self) -> bool {
        self.xa == self.x2 && self.xap == self.x1p && self.xb == self.x1 && self.xbp == self.x2p
    }

    pub fn value(&self, dom: Domain) -> u128 {
        dom.add(self.x1, self.x2)
    }

    pub fn value_prime(&self, dom: Domain) -> u128 {
        dom.add(self.x1p, self.x2p)
    }
}

/// Gathers every server's components. Sends nothing and does not touch the
/// network statistics.
pub fn oracle_collect(x: &SharedVec) -> Vec<QuadShare> {
    let [p1, p2, pa, pb] = &x.parts;
    (0..x.len())
        .map(|i| QuadShare {
            x1: p1.first[i],
            x1p: p1.second[i],
            x2: p2.first[i],
            x2p: p2.second[i],
            xa: pa.first[i],
            xap: pa.second[i],
            xb: pb.first[i],
            xbp: pb.second[i],
        })
        .collect()
}

/// Largest difference, in ring units, between the two reconstructions of any
/// element; `None` if a replication equality fails.
pub fn oracle_drift(x: &SharedVec) -> Option<u128> {
    let dom = x.domain();
    let mut worst = 0u128;
    for q in oracle_collect(x) {
        if !q.is_replicated() {
            return None;
        }
        let diff = dom.sub(q.value(dom), q.value_prime(dom));
        let mag = match dom {
            Domain::Arith(cfg) => cfg.ring().to_signed(diff).unsigned_abs(),
            Domain::Bits(_) => diff,
        };
        worst = worst.max(mag);
    }
    Some(worst)
}

/// Post-protocol consistency check. Truncation makes the two reconstructions
/// drift by a few units, or by a multiple of `2^(n-d)` when a local
/// truncation hit the share wrap; bit shares must agree exactly.
pub(crate) fn debug_check(x: &SharedVec) {
    if cfg!(debug_assertions) {
        let dom = x.domain();
        for q in oracle_collect(x) {
            assert!(q.is_replicated(), "replication broken: {q:?}");
            let diff = dom.sub(q.value(dom), q.value_prime(dom));
            let ok = match dom {
                Domain::Arith(cfg) => {
                    let wrap = 1u128 << (cfg.n - cfg.d);
                    let r = diff % wrap;
                    r.min(wrap - r) <= 1 << 20
                }
                Domain::Bits(_) => diff == 0,
            };
            assert!(ok, "reconstructions drift apart by {diff:#x}");
        }
    }
}

/// Client-side split: `x1` uniform, `x2 = x - x1`.
pub fn client_split<R: RngCore>(x: &FixedPoint, rng: &mut R) -> (u128, u128) {
    let ring = x.config.ring();
    let x1 = ring.reduce(rng.gen::<u128>());
    (x1, ring.sub(x.raw.0, x1))
}

pub type Seed = [u8; 32];

/// Counter-mode keyed generator: invocation `i` of a seed expands into the
/// ChaCha stream with stream id `i`. Two holders of the same seed that invoke
/// it in the same order see identical values.
#[derive(Clone, Debug)]
pub struct PairStream {
    key: Seed,
    counter: u64,
}

impl PairStream {
    pub fn new(key: Seed) -> Self {
        PairStream { key, counter: 0 }
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_block(&mut self, dom: Domain, count: usize) -> Vec<u128> {
        let mut rng = ChaCha12Rng::from_seed(self.key);
        rng.set_stream(self.counter);
        self.counter += 1;
        let mask = dom.mask();
        (0..count).map(|_| rng.gen::<u128>() & mask).collect()
    }
}

/// Seeds for the six server pairs. Only the simulator setup sees the whole
/// table; each server receives the three seeds it is a member of.
#[derive(Clone, Debug)]
pub struct SeedTable {
    seeds: [[Seed; 4]; 4],
}

impl SeedTable {
    pub fn generate(master: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(master);
        let mut seeds = [[[0u8; 32]; 4]; 4];
        for i in 0..4 {
            for j in (i + 1)..4 {
                let mut s = [0u8; 32];
                rng.fill_bytes(&mut s);
                seeds[i][j] = s;
                seeds[j][i] = s;
            }
        }
        SeedTable { seeds }
    }

    pub fn seed(&self, a: Server, b: Server) -> Seed {
        assert_ne!(a, b, "no seed for a server with itself");
        self.seeds[a.index()][b.index()]
    }

    pub fn streams_for(&self, me: Server) -> PartySeeds {
        let streams = Server::ALL.map(|peer| (peer != me).then(|| PairStream::new(self.seed(me, peer))));
        PartySeeds { me, streams }
    }
}

/// The seeds one server holds, one per peer.
#[derive(Clone, Debug)]
pub struct PartySeeds {
    me: Server,
    streams: [Option<PairStream>; 4],
}

impl PartySeeds {
    pub fn with(&mut self, peer: Server) -> &mut PairStream {
        let me = self.me;
        self.streams[peer.index()].as_mut().unwrap_or_else(|| panic!("{me} holds no seed shared with itself"))
    }
}
