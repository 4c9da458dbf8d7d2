//! In-process network between the four servers and any number of clients.
//!
//! Time advances in epochs. Messages posted during an epoch are held until the
//! barrier, then delivered in posting order; per-(from, to) FIFO order holds.
//! A party takes part in a round when it sends or receives in that epoch, and
//! an epoch in which nobody sends is not a round.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::sharing::{PartyId, Server};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub from: PartyId,
    pub to: PartyId,
    pub round_tag: u64,
    pub payload: Vec<u8>,
    /// Logical payload size; bit-packed payloads round up to whole bytes.
    pub bits: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyStats {
    pub messages: u64,
    pub bytes: u64,
    pub bits: u64,
    pub rounds: u64,
}

impl PartyStats {
    fn saturating_sub(&self, o: &PartyStats) -> PartyStats {
        PartyStats {
            messages: self.messages - o.messages,
            bytes: self.bytes - o.bytes,
            bits: self.bits - o.bits,
            rounds: self.rounds - o.rounds,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetStats {
    pub parties: BTreeMap<PartyId, PartyStats>,
    pub total_rounds: u64,
    pub simulated_ms: f64,
}

impl NetStats {
    pub fn party(&self, id: impl Into<PartyId>) -> PartyStats {
        self.parties.get(&id.into()).copied().unwrap_or_default()
    }

    pub fn server(&self, s: Server) -> PartyStats {
        self.party(s)
    }

    /// Component-wise `after - before`.
    pub fn diff(before: &NetStats, after: &NetStats) -> NetStats {
        let parties = after
            .parties
            .iter()
            .map(|(id, a)| {
                let b = before.parties.get(id).copied().unwrap_or_default();
                (*id, a.saturating_sub(&b))
            })
            .collect();
        NetStats {
            parties,
            total_rounds: after.total_rounds - before.total_rounds,
            simulated_ms: after.simulated_ms - before.simulated_ms,
        }
    }

    /// Messages sent by all parties, clients included.
    pub fn total_messages(&self) -> u64 {
        self.parties.values().map(|p| p.messages).sum()
    }

    pub fn max_server_bytes(&self) -> u64 {
        Server::ALL.iter().map(|s| self.server(*s).bytes).max().unwrap_or(0)
    }

    /// `{parties: {S1: {messages, bytes, rounds}, ...}, total_rounds, simulated_ms}`
    pub fn to_json(&self) -> Value {
        let mut parties = serde_json::Map::new();
        for s in Server::ALL {
            let p = self.server(s);
            parties
                .insert(s.name().to_string(), json!({ "messages": p.messages, "bytes": p.bytes, "rounds": p.rounds }));
        }
        json!({
            "parties": parties,
            "total_rounds": self.total_rounds,
            "simulated_ms": self.simulated_ms,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatencyMode {
    #[default]
    None,
    Lan,
    Wan,
}

impl std::str::FromStr for LatencyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(LatencyMode::None),
            "lan" => Ok(LatencyMode::Lan),
            "wan" => Ok(LatencyMode::Wan),
            other => Err(Error::Config(format!("unknown latency mode {other:?}"))),
        }
    }
}

impl fmt::Display for LatencyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LatencyMode::None => "none",
            LatencyMode::Lan => "lan",
            LatencyMode::Wan => "wan",
        })
    }
}

/// Cost model for simulated time. Never affects ordering or results.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub mode: LatencyMode,
    pub rtt_ms: f64,
    pub bandwidth_bps: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::from_mode(LatencyMode::None)
    }
}

impl LatencyModel {
    pub fn from_mode(mode: LatencyMode) -> Self {
        match mode {
            LatencyMode::None => LatencyModel { mode, rtt_ms: 0.0, bandwidth_bps: f64::INFINITY },
            // 10 Gbps links; the RTT is a typical same-region figure.
            LatencyMode::Lan => LatencyModel { mode, rtt_ms: 0.2, bandwidth_bps: 10e9 },
            LatencyMode::Wan => LatencyModel { mode, rtt_ms: 100.0, bandwidth_bps: 50e6 },
        }
    }

    /// One epoch: a round trip plus the busiest sender's serialization time.
    pub fn round_ms(&self, max_bytes: u64) -> f64 {
        if self.mode == LatencyMode::None {
            return 0.0;
        }
        self.rtt_ms + (max_bytes as f64 * 8.0) / self.bandwidth_bps * 1e3
    }
}

/// Messages a party queues during an epoch.
#[derive(Debug)]
pub struct Outbox {
    from: PartyId,
    msgs: Vec<(PartyId, Vec<u8>, u64)>,
}

impl Outbox {
    pub fn new(from: PartyId) -> Self {
        Outbox { from, msgs: Vec::new() }
    }

    pub fn from(&self) -> PartyId {
        self.from
    }

    pub fn send(&mut self, to: impl Into<PartyId>, payload: Vec<u8>, bits: u64) {
        self.msgs.push((to.into(), payload, bits));
    }

    pub fn is_empty(&self) -> bool {
        self.msgs.is_empty()
    }
}

/// Messages delivered to one party at the end of an epoch.
#[derive(Debug, Default)]
pub struct Inbox {
    me: Option<PartyId>,
    round: u64,
    queues: BTreeMap<PartyId, VecDeque<Message>>,
}

impl Inbox {
    pub fn recv(&mut self, from: impl Into<PartyId>) -> Result<Message> {
        let from = from.into();
        self.queues.get_mut(&from).and_then(|q| q.pop_front()).ok_or(Error::Deadlock {
            from,
            to: self.me.unwrap_or(from),
            round: self.round,
        })
    }

    pub fn pending(&self) -> usize {
        self.queues.values().map(|q| q.len()).sum()
    }
}

/// A party that can be stepped by [`Network::run_round`].
pub trait Participant {
    fn id(&self) -> PartyId;
}

#[derive(Debug, Default)]
pub struct Network {
    registered: BTreeSet<PartyId>,
    pending: Vec<Message>,
    delivered: BTreeMap<PartyId, Inbox>,
    stats: NetStats,
    epoch: u64,
    latency: LatencyModel,
    trace_digest: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(mut h: u64, bytes: &[u8]) -> u64 {
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl Network {
    pub fn new(latency: LatencyModel) -> Self {
        let mut net = Network { latency, trace_digest: FNV_OFFSET, ..Default::default() };
        for s in Server::ALL {
            net.register(s.into());
        }
        net
    }

    pub fn register(&mut self, id: PartyId) {
        if self.registered.insert(id) {
            self.stats.parties.entry(id).or_default();
        }
    }

    pub fn is_registered(&self, id: PartyId) -> bool {
        self.registered.contains(&id)
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn post(&mut self, from: PartyId, to: PartyId, payload: Vec<u8>, bits: u64) -> Result<()> {
        for id in [from, to] {
            if !self.registered.contains(&id) {
                return Err(Error::Config(format!("party {id} is not attached to the network")));
            }
        }
        self.pending.push(Message { from, to, round_tag: self.epoch, payload, bits });
        Ok(())
    }

    pub fn post_outbox(&mut self, out: Outbox) -> Result<()> {
        let from = out.from;
        for (to, payload, bits) in out.msgs {
            self.post(from, to, payload, bits)?;
        }
        Ok(())
    }

    /// Ends the epoch: delivers everything posted and updates the counters.
    /// Returns the number of messages delivered.
    pub fn barrier(&mut self) -> usize {
        let msgs = std::mem::take(&mut self.pending);
        let count = msgs.len();
        if count > 0 {
            let mut participants = BTreeSet::new();
            let mut sent_bytes: BTreeMap<PartyId, u64> = BTreeMap::new();
            for m in msgs {
                let st = self.stats.parties.entry(m.from).or_default();
                st.messages += 1;
                st.bytes += m.payload.len() as u64;
                st.bits += m.bits;
                *sent_bytes.entry(m.from).or_default() += m.payload.len() as u64;
                participants.insert(m.from);
                participants.insert(m.to);

                let mut h = fnv(self.trace_digest, format!("{}>{}#{}", m.from, m.to, m.round_tag).as_bytes());
                h = fnv(h, &m.payload);
                self.trace_digest = h;

                let inbox = self.delivered.entry(m.to).or_default();
                inbox.me = Some(m.to);
                inbox.queues.entry(m.from).or_default().push_back(m);
            }
            for p in &participants {
                self.stats.parties.entry(*p).or_default().rounds += 1;
            }
            self.stats.total_rounds += 1;
            let busiest = sent_bytes.values().copied().max().unwrap_or(0);
            self.stats.simulated_ms += self.latency.round_ms(busiest);
        }
        self.epoch += 1;
        count
    }

    /// Takes the oldest delivered message on the `from -> to` channel.
    pub fn take(&mut self, to: PartyId, from: PartyId) -> Result<Message> {
        let round = self.epoch.saturating_sub(1);
        self.delivered
            .get_mut(&to)
            .and_then(|inbox| inbox.queues.get_mut(&from))
            .and_then(|q| q.pop_front())
            .ok_or(Error::Deadlock { from, to, round })
    }

    /// Hands over everything delivered to `to` so far.
    pub fn drain_inbox(&mut self, to: PartyId) -> Inbox {
        let mut inbox = self.delivered.remove(&to).unwrap_or_default();
        inbox.me = Some(to);
        inbox.round = self.epoch.saturating_sub(1);
        inbox
    }

    /// Runs one lock-step epoch: every party's step queues messages, then the
    /// barrier delivers them.
    pub fn run_round<P: Participant>(
        &mut self,
        parties: &mut [P],
        mut step: impl FnMut(&mut P, &mut Outbox),
    ) -> Result<()> {
        for p in parties.iter_mut() {
            let id = p.id();
            if !self.registered.contains(&id) {
                return Err(Error::Config(format!("party {id} is not attached to the network")));
            }
            let mut out = Outbox::new(id);
            step(p, &mut out);
            self.post_outbox(out)?;
        }
        self.barrier();
        Ok(())
    }

    pub fn stats_snapshot(&self) -> NetStats {
        self.stats.clone()
    }

    pub fn stats_diff(before: &NetStats, after: &NetStats) -> NetStats {
        NetStats::diff(before, after)
    }

    /// Running digest over every delivered message, in delivery order.
    pub fn trace_digest(&self) -> u64 {
        self.trace_digest
    }

    pub fn latency(&self) -> LatencyModel {
        self.latency
    }
}
