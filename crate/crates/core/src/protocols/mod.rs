//! Basic private operations: multiplication, bit extraction, oblivious
//! selection and the bitwise operations built from them.
//!
//! Every operation is batched: it takes shared vectors and processes all
//! elements in the same rounds.

mod extract;
mod mul;
mod ot;

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::sharing::{Domain, Server, SharedVec};

/// The server whose seed masks a value exchanged inside one pair: S1 with S2
/// and Sa with Sb.
pub(crate) fn seed_peer(me: Server) -> Server {
    match me {
        Server::S1 => Server::S2,
        Server::S2 => Server::S1,
        Server::Sa => Server::Sb,
        Server::Sb => Server::Sa,
    }
}

pub(crate) fn expect_arith(x: &SharedVec, op: &str) -> Result<crate::ring::RingConfig> {
    x.domain().arith().ok_or_else(|| Error::Domain(format!("{op} needs an arithmetic share")))
}

pub(crate) fn expect_same_len(a: &SharedVec, b: &SharedVec) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(0, format!("lengths {} and {} differ", a.len(), b.len())));
    }
    Ok(())
}

impl Engine {
    /// Bitwise XOR; local.
    pub fn bit_xor(&self, a: &SharedVec, b: &SharedVec) -> Result<SharedVec> {
        expect_same_len(a, b)?;
        if a.domain() != b.domain() || a.domain().arith().is_some() {
            return Err(Error::Domain("bit_xor needs two bit shares of equal width".into()));
        }
        Ok(a.add(b))
    }

    /// Bitwise NOT of single-bit shares; local.
    pub fn bit_not(&self, a: &SharedVec) -> SharedVec {
        let ones = vec![a.domain().mask(); a.len()];
        a.add_public_raw(&ones)
    }

    /// Bitwise AND: the multiplication round run over `Z_2^w`.
    pub fn bit_and(&mut self, a: &SharedVec, b: &SharedVec) -> Result<SharedVec> {
        expect_same_len(a, b)?;
        if a.domain() != b.domain() || a.domain().arith().is_some() {
            return Err(Error::Domain("bit_and needs two bit shares of equal width".into()));
        }
        self.bilinear(a, b, a.len(), |x, y, dom| x.iter().zip(y).map(|(p, q)| dom.mul(*p, *q)).collect(), false)
    }

    /// `[x < y]` as a single-bit share: the sign bit of `x - y`.
    pub fn less_than(&mut self, x: &SharedVec, y: &SharedVec) -> Result<SharedVec> {
        expect_same_len(x, y)?;
        let cfg = expect_arith(x, "less_than")?;
        self.extract_bit(&x.sub(y), cfg.n)
    }

    /// `[x < 0]`.
    pub fn is_negative(&mut self, x: &SharedVec) -> Result<SharedVec> {
        let cfg = expect_arith(x, "is_negative")?;
        self.extract_bit(x, cfg.n)
    }

    /// `c ? x : y` with one oblivious selection.
    pub fn mux(&mut self, c: &SharedVec, x: &SharedVec, y: &SharedVec) -> Result<SharedVec> {
        expect_same_len(x, y)?;
        let picked = self.ot_select(c, &x.sub(y))?;
        Ok(y.add(&picked))
    }
}

pub(crate) fn bit_domain_ok(c: &SharedVec) -> Result<()> {
    if c.domain() != Domain::BIT {
        return Err(Error::Domain("selector must be a single-bit share".into()));
    }
    Ok(())
}
