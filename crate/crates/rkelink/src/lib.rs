//! Adaptive secure-communication stack for BLE remote keyless entry.
//!
//! The crate has two halves that meet in a deterministic simulator:
//!
//! * **Adaptive link control** — [`chanqual`] records per-channel packet
//!   outcomes and estimates delivery rates, [`hopctl`] blacklists bad
//!   channels in the 37-bit BLE channel map and picks the next hop, and
//!   [`linkctl`] steps transmission power and PHY mode from RSSI/PDR
//!   feedback.
//! * **Fob–vehicle authentication** — [`authcore`] provides the two-tier
//!   certificate hierarchy (ECDSA P-256), pseudo-identities, and the
//!   deterministic AES-128 session cipher; [`protocol`] runs the
//!   three-party challenge–response state machines with per-round session
//!   key rotation.
//!
//! [`rfsim`] supplies the 2.4 GHz environment (path loss, per-PHY delivery
//! curves, Wi-Fi interference footprints) and [`scenario`] orchestrates
//! full runs: presets, attack suites, metrics, and CSV emission. Every run
//! is reproducible from its seed.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --example channel_quality      # windowed + lifetime PDR tracking
//! cargo run --example frequency_hopping    # channel-map blacklisting and hop selection
//! cargo run --example link_adaptation      # TXP/PHY control walk
//! cargo run --example pki_setup            # CA hierarchy, issuance, revocation
//! cargo run --example auth_round           # full ten-step authentication round
//! cargo run --example static_interference  # mild/strong Wi-Fi presets
//! cargo run --example dynamic_wifi         # moving interferer, four phases
//! cargo run --example attack_suite         # four attack scenarios with transcripts
//! ```
//!
//! The `rke-scenario` binary exposes the same runs on the command line
//! (`run`, `dynamic`, `attacks`, `compare`).

pub mod authcore;
pub mod chanqual;
pub mod hopctl;
pub mod linkctl;
pub mod protocol;
pub mod rfsim;
pub mod scenario;

mod error;

pub use error::{Error, Result};
