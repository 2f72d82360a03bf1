//! Generalized stable marriage with unequal groups and partially active
//! proposers on both sides.
//!
//! Each group holds a configurable fraction of active members who send
//! proposals; everyone else only receives them. The engine runs generalized
//! deferred acceptance until every active member still single has been
//! turned down by the whole opposite group, and reports each member's
//! energy (the rank of its partner, or opposite size + 1 when single).

pub mod activation;
pub mod cli;
pub mod config;
pub mod engine;
pub mod experiment;
pub mod oracle;
pub mod preferences;
pub mod rng;
pub mod verify;

pub use activation::{assign_active, ActivationFlags};
pub use config::{ActivationMode, ConfigError, SimConfig};
pub use engine::{
    count_blocking_pairs, init_state, run_matching, simulate, step, MatchResult, MatchState, Matching, MemberRef,
};
pub use oracle::{enumerate_stable, reference_gs, MatchingSet, OracleError};
pub use preferences::{generate_preferences, Group, PreferenceSystem};
pub use rng::{derive_child_seed, Rng};
