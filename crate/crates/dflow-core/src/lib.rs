//! Deadline-constrained multihop packet scheduling from stochastic-traffic
//! LP relaxations.
//!
//! The crate is organized around a pipeline:
//!
//! * [`net`] — directed networks with per-link capacities, the self-looped
//!   view used for scheduling, packet types, and route-schedules.
//! * [`traffic`] — arrival-process generators, rate estimation, dependency
//!   degrees, and trace ingestion.
//! * [`lp`] — builders for the flow programs (stationary, expected-instance,
//!   time-varying, periodic), a solver front end, feasibility checking,
//!   capacity shrinkage, and frame construction.
//! * [`forwarding`] — forwarding tables turned into per-hop randomized
//!   decisions and explicit route distributions (path stripping on the
//!   time-expanded graph).
//! * [`sched`] — the scheduling policies: FBPF, DLPF (exponential or fixed
//!   phases), and the GLS-FP greedy baseline.
//! * [`sim`] — slot-synchronous execution with strict per-(link, slot)
//!   capacity enforcement and reward accounting.
//! * [`oracle`] — brute-force exact optima for tiny instances, capacity and
//!   sample-size threshold calculators, approximation ratios.
//! * [`gen`] — seeded random instance generation for experiments and tests.

pub mod error;
pub mod forwarding;
pub mod gen;
pub mod lp;
pub mod net;
pub mod oracle;
pub mod sched;
pub mod sim;
pub mod traffic;

pub use error::{ForwardingError, LpError, NetError, OracleError, SimError, TrafficError};
pub use net::{LinkId, NetworkSpec, NodeId, PacketTypeSpec, RouteSchedule, SelfLoopView};
pub use traffic::{ArrivalMatrix, ArrivalProcess};
