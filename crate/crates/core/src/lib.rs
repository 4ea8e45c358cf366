//! Bounded-memory heavy-hitter detection under local differential privacy.
//!
//! Clients randomize each stream event with a frequency-oracle mechanism
//! and the server keeps only a small [`HeavyGuardian`] structure. Four
//! streaming schemes trade uplink bits and downlink bulletins for accuracy:
//!
//! * [`schemes::Bgr`]: full-domain GRR into the heavy part.
//! * [`schemes::Dsr`]: switches to a hot-set domain plus a cold sentinel
//!   once the heavy part is stable.
//! * [`schemes::Bdr`]: splits the budget between a hot/cold judge and a
//!   value mechanism on the judged side.
//! * [`schemes::Cnr`]: like BDR but cold values are always reported and
//!   tracked in a light part that nominates replacements.
//!
//! [`protocol::run_session`] drives one simulated stream end to end and
//! [`eval`] scores the result against the exact top-k.

pub mod data;
pub mod domain;
pub mod error;
pub mod eval;
pub mod hash;
pub mod heavyguardian;
pub mod mechanisms;
pub mod privacy;
pub mod protocol;
pub mod rng;
pub mod sampling;
pub mod schemes;
pub mod verify;

pub use domain::{Item, ItemDomain, PrivacyBudget, PrivacyLevel};
pub use error::{Error, Result};
pub use heavyguardian::{HeavyGuardian, HgConfig};
pub use rng::RngHandle;
pub use schemes::{build_scheme, Scheme, SchemeConfig, SchemeKind, TopKReport};
