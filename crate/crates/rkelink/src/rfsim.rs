//! Deterministic 2.4 GHz RF environment.
//!
//! Models just enough radio physics to exercise the adaptive stack: a
//! log-distance path-loss RSSI, per-PHY delivery-probability curves (zero
//! below the PHY's sensitivity floor, a linear ramp up to a saturation
//! point, near-one above it), and Wi-Fi interferers that block a
//! contiguous footprint of BLE channels for a fraction of packets unless
//! the signal is strong enough to capture through the collision.
//!
//! Packet outcomes are Bernoulli draws from a counter-based generator
//! keyed by (seed, node, event), so a run is reproducible event-for-event
//! and independent runs can execute in parallel without sharing state.

use std::collections::VecDeque;

use crate::chanqual::{ChannelIndex, PdrPercent, PdrTracker, CHANNEL_COUNT};
use crate::hopctl::{select_channel, update_channel_map, ChannelMap, HopState, HopThresholds};
use crate::linkctl::{adapt, LinkParams, LinkThresholds, PhyMode, TxPower};
use crate::{Error, Result};

/// Stateless counter-based random source. Every draw is a pure function
/// of (seed, node, event, tag), which keeps traces reproducible under any
/// execution order.
#[derive(Debug, Clone, Copy)]
pub struct EventRng {
    seed: u64,
    node_id: u64,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl EventRng {
    pub fn new(seed: u64, node_id: u64) -> Self {
        Self { seed, node_id }
    }

    pub fn draw(&self, event: u64, tag: u64) -> u64 {
        let mut h = mix(self.seed);
        h = mix(h ^ self.node_id);
        h = mix(h ^ event);
        mix(h ^ tag)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&self, event: u64, tag: u64) -> f64 {
        (self.draw(event, tag) >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Log-distance path-loss model: `loss = pl0 + 10·n·log10(d)` dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    /// Reference loss at one meter, dB.
    pub pl0_db: f64,
    /// Path-loss exponent.
    pub exponent: f64,
    /// Transmitter-receiver distance, meters.
    pub distance_m: f64,
}

impl PathLossParams {
    pub fn new(pl0_db: f64, exponent: f64, distance_m: f64) -> Result<Self> {
        if distance_m <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "distance {distance_m} m must be positive"
            )));
        }
        if !(1.5..=4.5).contains(&exponent) {
            return Err(Error::InvalidArgument(format!(
                "path-loss exponent {exponent} outside [1.5, 4.5]"
            )));
        }
        Ok(Self {
            pl0_db,
            exponent,
            distance_m,
        })
    }

    pub fn loss_db(&self) -> f64 {
        self.pl0_db + 10.0 * self.exponent * self.distance_m.log10()
    }
}

impl Default for PathLossParams {
    /// Indoor-ish defaults placing a few-meter link in the -40..-60 dBm
    /// band at moderate transmit powers.
    fn default() -> Self {
        Self {
            pl0_db: 40.0,
            exponent: 2.5,
            distance_m: 5.0,
        }
    }
}

/// Received signal strength for a given transmit power over the modeled
/// path: unit slope in TXP, strictly decreasing in distance.
pub fn rssi_at(txp: TxPower, path_loss: &PathLossParams) -> f64 {
    f64::from(txp.dbm()) - path_loss.loss_db()
}

/// Per-PHY delivery probability curve: zero at or below the PHY's floor,
/// a linear ramp up to the shared saturation point, `p_max` at or above
/// it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyCurve {
    pub floor_2m_dbm: f64,
    pub floor_1m_dbm: f64,
    pub floor_coded_dbm: f64,
    pub saturation_dbm: f64,
    pub p_max: f64,
}

impl PhyCurve {
    pub fn new(
        floor_2m_dbm: f64,
        floor_1m_dbm: f64,
        floor_coded_dbm: f64,
        saturation_dbm: f64,
        p_max: f64,
    ) -> Result<Self> {
        for floor in [floor_2m_dbm, floor_1m_dbm, floor_coded_dbm] {
            if floor >= saturation_dbm {
                return Err(Error::InvalidArgument(format!(
                    "PHY floor {floor} dBm must be below saturation {saturation_dbm} dBm"
                )));
            }
        }
        if !(0.0..=1.0).contains(&p_max) {
            return Err(Error::InvalidArgument(format!(
                "p_max {p_max} outside [0, 1]"
            )));
        }
        Ok(Self {
            floor_2m_dbm,
            floor_1m_dbm,
            floor_coded_dbm,
            saturation_dbm,
            p_max,
        })
    }

    pub fn floor_dbm(&self, phy: PhyMode) -> f64 {
        match phy {
            PhyMode::Phy2M => self.floor_2m_dbm,
            PhyMode::Phy1M => self.floor_1m_dbm,
            PhyMode::PhyCoded => self.floor_coded_dbm,
        }
    }
}

impl Default for PhyCurve {
    /// Floors at -78 (2M), -90 (1M), -100 (Coded) dBm with all three
    /// modes saturating above -55 dBm.
    fn default() -> Self {
        Self {
            floor_2m_dbm: -78.0,
            floor_1m_dbm: -90.0,
            floor_coded_dbm: -100.0,
            saturation_dbm: -55.0,
            p_max: 0.995,
        }
    }
}

/// Interference-free delivery probability for a PHY at a given RSSI.
pub fn base_pdr(phy: PhyMode, rssi_dbm: f64, curve: &PhyCurve) -> f64 {
    let floor = curve.floor_dbm(phy);
    if rssi_dbm <= floor {
        0.0
    } else if rssi_dbm >= curve.saturation_dbm {
        curve.p_max
    } else {
        (rssi_dbm - floor) / (curve.saturation_dbm - floor) * curve.p_max
    }
}

/// One Wi-Fi interferer: its 2.4 GHz channel, received strength, duty
/// cycle, and the event interval it is active in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub wifi_channel: u8,
    pub rssi_dbm: f64,
    pub duty_cycle: f64,
    pub start_event: u64,
    pub end_event: u64,
}

impl Interferer {
    pub fn new(
        wifi_channel: u8,
        rssi_dbm: f64,
        duty_cycle: f64,
        start_event: u64,
        end_event: u64,
    ) -> Result<Self> {
        if !(1..=13).contains(&wifi_channel) {
            return Err(Error::InvalidArgument(format!(
                "wifi channel {wifi_channel} outside [1, 13]"
            )));
        }
        if !(0.0..=1.0).contains(&duty_cycle) {
            return Err(Error::InvalidArgument(format!(
                "duty cycle {duty_cycle} outside [0, 1]"
            )));
        }
        Ok(Self {
            wifi_channel,
            rssi_dbm,
            duty_cycle,
            start_event,
            end_event,
        })
    }

    pub fn is_active(&self, event: u64) -> bool {
        (self.start_event..self.end_event).contains(&event)
    }
}

fn footprint_bounds(wifi_channel: u8) -> Result<(u8, u8)> {
    if !(1..=13).contains(&wifi_channel) {
        return Err(Error::InvalidArgument(format!(
            "wifi channel {wifi_channel} outside [1, 13]"
        )));
    }
    // Wi-Fi center frequency, then the BLE channel sitting on it
    let f_wifi = 2412 + 5 * (u32::from(wifi_channel) - 1);
    let center = (f_wifi - 2404) / 2;
    let low = center.saturating_sub(5) as u8;
    let high = (center + 4).min(CHANNEL_COUNT as u32 - 1) as u8;
    Ok((low, high))
}

/// BLE data channels degraded by a given Wi-Fi channel's spectral
/// occupancy: the block from five channels below its center to four above,
/// clamped to the data-channel range.
pub fn affected_ble_channels(wifi_channel: u8) -> Result<Vec<ChannelIndex>> {
    let (low, high) = footprint_bounds(wifi_channel)?;
    Ok((low..=high)
        .map(|i| ChannelIndex::new(i).expect("bounds stay in range"))
        .collect())
}

/// Delivery probability on `channel` after interference. Each active
/// interferer whose footprint covers the channel knocks the probability
/// down by its duty cycle, unless the signal clears it by at least
/// `capture_db` (capture effect). Multiple interferers compose
/// multiplicatively.
#[allow(clippy::too_many_arguments)]
pub fn success_probability(
    channel: ChannelIndex,
    phy: PhyMode,
    txp: TxPower,
    path_loss: &PathLossParams,
    interferers: &[Interferer],
    curve: &PhyCurve,
    capture_db: f64,
) -> f64 {
    let rssi = rssi_at(txp, path_loss);
    let mut p = base_pdr(phy, rssi, curve);
    for interferer in interferers {
        let (low, high) = footprint_bounds(interferer.wifi_channel)
            .expect("validated at construction");
        if (low..=high).contains(&channel.value()) && (rssi - interferer.rssi_dbm) < capture_db {
            p *= 1.0 - interferer.duty_cycle;
        }
    }
    p
}

/// One simulated connection event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOutcome {
    pub event_index: u64,
    pub channel: ChannelIndex,
    pub phy: PhyMode,
    pub txp: TxPower,
    pub rssi_dbm: f64,
    pub success: bool,
}

/// Static inputs of a simulation run.
#[derive(Debug, Clone)]
pub struct SimParams {
    pub seed: u64,
    pub node_id: u64,
    pub window_size: usize,
    pub adaptation: bool,
    pub adaptation_period: u64,
    pub hop_increment: u8,
    pub hop_thresholds: HopThresholds,
    pub link_thresholds: LinkThresholds,
    pub initial_phy: PhyMode,
    pub initial_txp: TxPower,
    pub path_loss: PathLossParams,
    pub curve: PhyCurve,
    pub capture_db: f64,
    pub interferers: Vec<Interferer>,
}

impl Default for SimParams {
    fn default() -> Self {
        let (phy, txp) = crate::linkctl::initial_link();
        Self {
            seed: 0,
            node_id: 0,
            window_size: 25,
            adaptation: true,
            adaptation_period: 25,
            hop_increment: 7,
            hop_thresholds: HopThresholds::default(),
            link_thresholds: LinkThresholds::default(),
            initial_phy: phy,
            initial_txp: txp,
            path_loss: PathLossParams::default(),
            curve: PhyCurve::default(),
            capture_db: 8.0,
            interferers: Vec::new(),
        }
    }
}

/// Event-driven link simulation: hop selection, outcome draw, quality
/// recording, and the periodic adaptation tick tying the controllers
/// together.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: SimParams,
    tracker: PdrTracker,
    map: ChannelMap,
    hop: HopState,
    phy: PhyMode,
    txp: TxPower,
    rng: EventRng,
    event: u64,
    rssi_window: VecDeque<f64>,
}

impl Simulation {
    pub fn new(params: SimParams) -> Result<Self> {
        let tracker = PdrTracker::new(params.window_size)?;
        let hop = HopState::new(params.hop_increment)?;
        let rng = EventRng::new(params.seed, params.node_id);
        Ok(Self {
            tracker,
            map: ChannelMap::all_enabled(),
            hop,
            phy: params.initial_phy,
            txp: params.initial_txp,
            rng,
            event: 0,
            rssi_window: VecDeque::with_capacity(params.window_size),
            params,
        })
    }

    pub fn tracker(&self) -> &PdrTracker {
        &self.tracker
    }

    pub fn channel_map(&self) -> ChannelMap {
        self.map
    }

    pub fn link(&self) -> (PhyMode, TxPower) {
        (self.phy, self.txp)
    }

    pub fn event_index(&self) -> u64 {
        self.event
    }

    /// Run one connection event: adapt on period boundaries, hop, draw the
    /// packet outcome, record it.
    pub fn step(&mut self) -> EventOutcome {
        if self.params.adaptation
            && self.event > 0
            && self.event.is_multiple_of(self.params.adaptation_period)
        {
            self.adaptation_tick();
        }
        let (channel, next_hop) =
            select_channel(self.hop, &self.map).expect("map is never left empty");
        self.hop = next_hop;

        let rssi = rssi_at(self.txp, &self.params.path_loss);
        let active: Vec<Interferer> = self
            .params
            .interferers
            .iter()
            .filter(|i| i.is_active(self.event))
            .copied()
            .collect();
        let p = success_probability(
            channel,
            self.phy,
            self.txp,
            &self.params.path_loss,
            &active,
            &self.params.curve,
            self.params.capture_db,
        );
        let success = self.rng.uniform(self.event, 0) < p;

        self.tracker.record_outcome(channel, success);
        if self.rssi_window.len() == self.params.window_size {
            self.rssi_window.pop_front();
        }
        self.rssi_window.push_back(rssi);

        let outcome = EventOutcome {
            event_index: self.event,
            channel,
            phy: self.phy,
            txp: self.txp,
            rssi_dbm: rssi,
            success,
        };
        self.event += 1;
        outcome
    }

    fn adaptation_tick(&mut self) {
        let updated = update_channel_map(&self.tracker, self.map, &self.params.hop_thresholds);
        // Emergency guard outside the filter's contract: if every channel
        // flunked the threshold, hop over the full map rather than stall.
        self.map = if updated.enabled_count() == 0 {
            ChannelMap::all_enabled()
        } else {
            updated
        };

        // window aggregates: mean windowed PDR over all 37 channels and
        // mean RSSI over the last window of events
        let pdr_mean = self
            .tracker
            .pdr_latest_all()
            .iter()
            .map(|p| p.value())
            .sum::<f64>()
            / CHANNEL_COUNT as f64;
        let rssi_mean = if self.rssi_window.is_empty() {
            rssi_at(self.txp, &self.params.path_loss)
        } else {
            self.rssi_window.iter().sum::<f64>() / self.rssi_window.len() as f64
        };
        let link = LinkParams::new(
            self.phy,
            self.txp,
            rssi_mean.clamp(-120.0, 20.0),
            PdrPercent::new(pdr_mean.clamp(0.0, 100.0)).expect("clamped"),
        )
        .expect("clamped values satisfy bounds");
        let (phy, txp) = adapt(&link, &self.params.link_thresholds);
        self.phy = phy;
        self.txp = txp;
    }
}
