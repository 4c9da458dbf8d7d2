//! Replicated 2-out-of-4 secret sharing over `Z_{2^n}` with a simulated
//! four-server network.
//!
//! Every private value is split as `x = x1 + x2 = x1' + x2'` and spread over
//! four servers so that each holds two components: S1 `(x1, x1')`, S2
//! `(x2, x2')`, Sa `(x2, x1')` and Sb `(x1, x2')`. Any single server's view
//! is uniformly random; any two non-colluding servers can reconstruct.

pub mod demos;
pub mod derived;
pub mod engine;
pub mod error;
pub mod netsim;
pub mod optimizer;
pub mod protocols;
pub mod ring;
pub mod sharing;
pub mod tensor;

pub use derived::IterParams;
pub use engine::{Engine, EngineConfig, ExtractionMode, PartyCtx, Scheduler};
pub use error::{Error, Result};
pub use netsim::{LatencyMode, LatencyModel, NetStats, Network, PartyStats};
pub use optimizer::{interpret, parse_program, Bindings, CostModel, CostReport, Outcome, Program};
pub use ring::{decode_fixed, encode_fixed, FixedPoint, Ring, RingConfig, RingValue};
pub use sharing::{oracle_collect, oracle_drift, Domain, LocalPair, PartyId, QuadShare, Server, SharedVec};
pub use tensor::{broadcast, LargeArray, Sel, Shape, ShareTensor, Tensor};
