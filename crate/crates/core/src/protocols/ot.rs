//! Four-party oblivious selection `c * x` for a single-bit share `c` and an
//! arithmetic share `x`, in one round.
//!
//! With `c = c1' ^ c2' = c1' + c2' - 2 c1' c2'` over the integers,
//! `c x = c1' x1 + (1 - 2c1') c2' x1 + c2' x2 + (1 - 2c2') c1' x2`. The products
//! `c1' x1`, `c2' x1`, `c2' x2`, `c1' x2` are local to S1, Sb, S2, Sa; the
//! masked cross terms travel to a server that knows the matching sign factor,
//! and a correction term from the masking partner cancels the mask. The primed
//! output runs the same construction on `c1 ^ c2` and `x1', x2'`.

use crate::engine::{recv, Engine};
use crate::error::Result;
use crate::sharing::{debug_check, Domain, LocalPair, Server, SharedVec};

use super::{bit_domain_ok, expect_arith, expect_same_len, seed_peer};

/// Per-server outgoing routing: `(t, e)` go to the first server and
/// `(t', e')` to the second.
fn routing(me: Server) -> (Server, Server) {
    match me {
        Server::S1 => (Server::Sb, Server::Sa),
        Server::S2 => (Server::Sa, Server::Sb),
        Server::Sa => (Server::S2, Server::S1),
        Server::Sb => (Server::S1, Server::S2),
    }
}

/// The seeds used for the `e` and `e'` masks: `(unprimed, primed)` peer.
fn correction_peers(me: Server) -> (Server, Server) {
    match me {
        Server::S1 => (Server::Sb, Server::Sa),
        Server::S2 => (Server::Sa, Server::Sb),
        Server::Sa => (Server::S2, Server::S1),
        Server::Sb => (Server::S1, Server::S2),
    }
}

impl Engine {
    /// `c * x`: reveals to `x` where `c = 1` and to `0` where `c = 0`. Exact.
    pub fn ot_select(&mut self, c: &SharedVec, x: &SharedVec) -> Result<SharedVec> {
        bit_domain_ok(c)?;
        expect_same_len(c, x)?;
        let cfg = expect_arith(x, "ot_select")?;
        let dom = Domain::Arith(cfg);
        let ring = cfg.ring();
        let n = x.len();
        // 1 - 2b over the ring
        let sign = move |b: u128| if b & 1 == 1 { ring.mask() } else { 1 };

        let parts = self.round(
            |ctx| {
                let me = ctx.me();
                let pc = ctx.view(c);
                let px = ctx.view(x);
                let peer = seed_peer(me);
                let r = ctx.rand(peer, dom, n);
                let rp = ctx.rand(peer, dom, n);
                let (cu, cp) = correction_peers(me);
                let s = ctx.rand(cu, dom, n);
                let sp = ctx.rand(cp, dom, n);
                let mut t = Vec::with_capacity(n);
                let mut tp = Vec::with_capacity(n);
                let mut e = Vec::with_capacity(n);
                let mut ep = Vec::with_capacity(n);
                for i in 0..n {
                    // second bit component pairs with first ring component and vice versa
                    t.push(dom.sub(dom.mul(pc.second[i], px.first[i]), r[i]));
                    tp.push(dom.sub(dom.mul(pc.first[i], px.second[i]), rp[i]));
                    e.push(dom.add(dom.mul(sign(pc.second[i]), r[i]), s[i]));
                    ep.push(dom.add(dom.mul(sign(pc.first[i]), rp[i]), sp[i]));
                }
                let (to_u, to_p) = routing(me);
                ctx.send(to_u, dom, &t);
                ctx.send(to_u, dom, &ep);
                ctx.send(to_p, dom, &tp);
                ctx.send(to_p, dom, &e);
                (s, sp)
            },
            |ctx, (s, sp), inbox| {
                let me = ctx.me();
                let pc = ctx.view(c);
                let px = ctx.view(x);
                // The server we sent (t, e') to sends us its (t, e'), and
                // likewise for the primed side.
                let (from_u, from_p) = routing(me);
                let t_in = recv(inbox, from_u, dom, n)?;
                let ep_in = recv(inbox, from_u, dom, n)?;
                let tp_in = recv(inbox, from_p, dom, n)?;
                let e_in = recv(inbox, from_p, dom, n)?;
                let mut y = Vec::with_capacity(n);
                let mut yp = Vec::with_capacity(n);
                for i in 0..n {
                    let v = dom.add(dom.mul(sign(pc.second[i]), t_in[i]), dom.mul(pc.second[i], px.first[i]));
                    y.push(dom.sub(dom.add(v, e_in[i]), s[i]));
                    let w = dom.add(dom.mul(sign(pc.first[i]), tp_in[i]), dom.mul(pc.first[i], px.second[i]));
                    yp.push(dom.sub(dom.add(w, ep_in[i]), sp[i]));
                }
                Ok(LocalPair::new(y, yp))
            },
        )?;
        let out = SharedVec::from_parts(dom, parts);
        debug_check(&out);
        Ok(out)
    }
}
