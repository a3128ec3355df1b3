//! Multi-client orchestration: scenarios and their wiring, the four
//! protocols, and the composed error bounds.

mod bound;
mod protocol;
mod scenario;

pub use bound::{error_bound, two_client_bound, BoundError, BoundVariant};
pub use protocol::{
    build_round_unitary, protocol1_run, protocol2_run, protocol3_run, protocol4_run, AbortInfo, AbortKind,
    ClientResult, Protocol, ProtocolConfig, ProtocolError, RunOutcome,
};
pub use scenario::{ClientSpec, Scenario, ScenarioError, Shape, SizeProfile, Wiring};
