//! Scenario configuration: TOML loading, validation, defaults, presets.
//!
//! A minimal file only needs `seed` and `duration_events`; everything else
//! has documented defaults. The preset constructors mirror the files
//! shipped under `scenarios/` and are what the acceptance experiments run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chanqual::PdrPercent;
use crate::hopctl::HopThresholds;
use crate::linkctl::{LinkThresholds, PhyMode, TxPower};
use crate::rfsim::{Interferer, PathLossParams, PhyCurve, SimParams};
use crate::{Error, Result};

pub const DEFAULT_WINDOW_SIZE: usize = 25;
pub const DEFAULT_PDR_THRESHOLD: f64 = 95.0;
pub const DEFAULT_CHANNEL_THRESHOLD: u32 = 10;
pub const DEFAULT_ADAPTATION_PERIOD: u64 = 25;
pub const DEFAULT_HOP_INCREMENT: u8 = 7;
pub const DEFAULT_CAPTURE_DB: f64 = 8.0;
pub const DEFAULT_EVENTS_PER_SECOND: u32 = 50;
pub const DEFAULT_VIN: &str = "1HGCM82633A004352";

fn default_true() -> bool {
    true
}
fn default_window() -> usize {
    DEFAULT_WINDOW_SIZE
}
fn default_pdr_threshold() -> f64 {
    DEFAULT_PDR_THRESHOLD
}
fn default_channel_threshold() -> u32 {
    DEFAULT_CHANNEL_THRESHOLD
}
fn default_adaptation_period() -> u64 {
    DEFAULT_ADAPTATION_PERIOD
}
fn default_hop_increment() -> u8 {
    DEFAULT_HOP_INCREMENT
}
fn default_capture() -> f64 {
    DEFAULT_CAPTURE_DB
}
fn default_events_per_second() -> u32 {
    DEFAULT_EVENTS_PER_SECOND
}
fn default_vin() -> String {
    DEFAULT_VIN.to_string()
}

/// Initial link parameters for the adaptive run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub phy: String,
    pub txp_dbm: i8,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            phy: "Coded".into(),
            txp_dbm: 8,
        }
    }
}

impl LinkConfig {
    pub fn phy_mode(&self) -> Result<PhyMode> {
        PhyMode::from_str_loose(&self.phy)
    }

    pub fn tx_power(&self) -> Result<TxPower> {
        TxPower::new(self.txp_dbm)
    }
}

/// Fixed link for non-adaptive baseline runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub phy: String,
    pub txp_dbm: i8,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            phy: "2M".into(),
            txp_dbm: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossConfig {
    pub pl0_db: f64,
    pub exponent: f64,
    pub distance_m: f64,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        let d = PathLossParams::default();
        Self {
            pl0_db: d.pl0_db,
            exponent: d.exponent,
            distance_m: d.distance_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhyCurveConfig {
    pub floor_2m_dbm: f64,
    pub floor_1m_dbm: f64,
    pub floor_coded_dbm: f64,
    pub saturation_dbm: f64,
    pub p_max: f64,
}

impl Default for PhyCurveConfig {
    fn default() -> Self {
        let d = PhyCurve::default();
        Self {
            floor_2m_dbm: d.floor_2m_dbm,
            floor_1m_dbm: d.floor_1m_dbm,
            floor_coded_dbm: d.floor_coded_dbm,
            saturation_dbm: d.saturation_dbm,
            p_max: d.p_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkThresholdsConfig {
    pub rssi_high_dbm: f64,
    pub rssi_low_dbm: f64,
    pub pdr_high: f64,
    pub pdr_low: f64,
}

impl Default for LinkThresholdsConfig {
    fn default() -> Self {
        let d = LinkThresholds::default();
        Self {
            rssi_high_dbm: d.rssi_high_dbm,
            rssi_low_dbm: d.rssi_low_dbm,
            pdr_high: d.pdr_high.value(),
            pdr_low: d.pdr_low.value(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererConfig {
    pub wifi_channel: u8,
    pub rssi_dbm: f64,
    pub duty_cycle: f64,
    /// First event the interferer is active at. Defaults to 0.
    #[serde(default)]
    pub start_event: Option<u64>,
    /// First event the interferer is no longer active at. Defaults to the
    /// end of the run.
    #[serde(default)]
    pub end_event: Option<u64>,
}

/// The four scripted adversaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Inject a copied broadcast from a non-whitelisted identity.
    ImpersonateInject,
    /// Authenticate with a stolen fob whose certificate was revoked.
    ImpersonateRevoked,
    /// Authenticate with a pre-update session key after a credential
    /// update, replaying the new fob's public broadcast to connect.
    ImpersonateStaleKey,
    /// Replay a recorded control packet into the next round.
    ReplayControl,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [
        AttackKind::ImpersonateInject,
        AttackKind::ImpersonateRevoked,
        AttackKind::ImpersonateStaleKey,
        AttackKind::ReplayControl,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AttackKind::ImpersonateInject => "impersonate_inject",
            AttackKind::ImpersonateRevoked => "impersonate_revoked",
            AttackKind::ImpersonateStaleKey => "impersonate_stale_key",
            AttackKind::ReplayControl => "replay_control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: AttackKind,
    #[serde(default)]
    pub trigger_event: u64,
}

/// Defense toggles, all on by default. Turning one off is how the attack
/// suite proves the defense, not the adversary's clumsiness, causes the
/// rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefensesConfig {
    #[serde(default = "default_true")]
    pub whitelist: bool,
    #[serde(default = "default_true")]
    pub revocation: bool,
    #[serde(default = "default_true")]
    pub rotation: bool,
}

impl Default for DefensesConfig {
    fn default() -> Self {
        Self {
            whitelist: true,
            revocation: true,
            rotation: true,
        }
    }
}

/// Complete description of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_events: u64,
    #[serde(default = "default_true")]
    pub adaptation: bool,
    #[serde(default = "default_window")]
    pub window_size: usize,
    #[serde(default = "default_pdr_threshold")]
    pub pdr_threshold: f64,
    #[serde(default = "default_channel_threshold")]
    pub channel_threshold: u32,
    #[serde(default = "default_adaptation_period")]
    pub adaptation_period: u64,
    #[serde(default = "default_hop_increment")]
    pub hop_increment: u8,
    #[serde(default = "default_capture")]
    pub capture_db: f64,
    #[serde(default = "default_events_per_second")]
    pub events_per_second: u32,
    #[serde(default = "default_vin")]
    pub vin: String,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub path_loss: PathLossConfig,
    #[serde(default)]
    pub phy_curve: PhyCurveConfig,
    #[serde(default)]
    pub link_thresholds: LinkThresholdsConfig,
    #[serde(default)]
    pub interferers: Vec<InterfererConfig>,
    #[serde(default)]
    pub attacks: Vec<AttackConfig>,
    #[serde(default)]
    pub defenses: DefensesConfig,
}

impl ScenarioConfig {
    /// A scenario with nothing but the two required fields; everything
    /// else at its documented default.
    pub fn minimal(seed: u64, duration_events: u64) -> Self {
        toml::from_str(&format!(
            "seed = {seed}\nduration_events = {duration_events}\n"
        ))
        .expect("minimal config parses")
    }

    /// Mild static interference: one Wi-Fi interferer on channel 1 at
    /// -55 dBm with 0.6 duty, five-meter link.
    pub fn mild() -> Self {
        let mut cfg = Self::minimal(42, 10_000);
        cfg.interferers = vec![InterfererConfig {
            wifi_channel: 1,
            rssi_dbm: -55.0,
            duty_cycle: 0.6,
            start_event: None,
            end_event: None,
        }];
        cfg
    }

    /// Strong static interference: channel 1 at -25 dBm with 0.85 duty.
    pub fn strong() -> Self {
        let mut cfg = Self::minimal(42, 10_000);
        cfg.interferers = vec![InterfererConfig {
            wifi_channel: 1,
            rssi_dbm: -25.0,
            duty_cycle: 0.85,
            start_event: None,
            end_event: None,
        }];
        cfg
    }

    /// Moving interferer: Wi-Fi hops ch1 -> ch5 -> ch10 -> ch13 at the
    /// quarter marks of the run. The baseline uses 4 dBm so its clean
    /// channels saturate while still sitting below the capture margin.
    pub fn dynamic() -> Self {
        let mut cfg = Self::minimal(42, 10_000);
        cfg.baseline = BaselineConfig {
            phy: "2M".into(),
            txp_dbm: 4,
        };
        let quarter = cfg.duration_events / 4;
        cfg.interferers = [1u8, 5, 10, 13]
            .iter()
            .enumerate()
            .map(|(i, wifi_channel)| InterfererConfig {
                wifi_channel: *wifi_channel,
                rssi_dbm: -55.0,
                duty_cycle: 0.6,
                start_event: Some(i as u64 * quarter),
                end_event: Some(if i == 3 {
                    cfg.duration_events
                } else {
                    (i as u64 + 1) * quarter
                }),
            })
            .collect();
        cfg
    }

    /// No interference, no adaptation, one-meter 2M link at 0 dBm
    /// (-40 dBm RSSI): a clean-air reference run.
    pub fn clean() -> Self {
        let mut cfg = Self::minimal(42, 10_000);
        cfg.adaptation = false;
        cfg.baseline = BaselineConfig {
            phy: "2M".into(),
            txp_dbm: 0,
        };
        cfg.path_loss.distance_m = 1.0;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_events == 0 {
            return Err(Error::config("duration_events", "must be positive"));
        }
        if self.duration_events < self.adaptation_period {
            return Err(Error::config(
                "duration_events",
                format!(
                    "must cover at least one adaptation period ({})",
                    self.adaptation_period
                ),
            ));
        }
        if self.window_size == 0 {
            return Err(Error::config("window_size", "must be at least 1"));
        }
        if !(0.0..=100.0).contains(&self.pdr_threshold) {
            return Err(Error::config(
                "pdr_threshold",
                format!("{} outside [0, 100]", self.pdr_threshold),
            ));
        }
        if !(2..=37).contains(&self.channel_threshold) {
            return Err(Error::config(
                "channel_threshold",
                format!("{} outside [2, 37]", self.channel_threshold),
            ));
        }
        if self.adaptation_period == 0 {
            return Err(Error::config("adaptation_period", "must be positive"));
        }
        if !(5..=16).contains(&self.hop_increment) {
            return Err(Error::config(
                "hop_increment",
                format!("{} outside [5, 16]", self.hop_increment),
            ));
        }
        if self.capture_db < 0.0 {
            return Err(Error::config("capture_db", "must be non-negative"));
        }
        if self.events_per_second == 0 {
            return Err(Error::config("events_per_second", "must be positive"));
        }
        if self.vin.is_empty() || self.vin.len() > 17 || !self.vin.is_ascii() {
            return Err(Error::config("vin", "must be 1..=17 ASCII characters"));
        }
        self.link
            .phy_mode()
            .map_err(|e| Error::config("link.phy", e))?;
        self.link
            .tx_power()
            .map_err(|e| Error::config("link.txp_dbm", e))?;
        PhyMode::from_str_loose(&self.baseline.phy)
            .map_err(|e| Error::config("baseline.phy", e))?;
        TxPower::new(self.baseline.txp_dbm)
            .map_err(|e| Error::config("baseline.txp_dbm", e))?;
        self.path_loss_params()
            .map_err(|e| Error::config("path_loss", e))?;
        self.phy_curve_params()
            .map_err(|e| Error::config("phy_curve", e))?;
        self.link_threshold_params()
            .map_err(|e| Error::config("link_thresholds", e))?;
        for (i, interferer) in self.interferers.iter().enumerate() {
            self.interferer_params(interferer)
                .map_err(|e| Error::config(format!("interferers[{i}]"), e))?;
        }
        for (i, attack) in self.attacks.iter().enumerate() {
            if attack.trigger_event >= self.duration_events {
                return Err(Error::config(
                    format!("attacks[{i}].trigger_event"),
                    format!(
                        "{} beyond run duration {}",
                        attack.trigger_event, self.duration_events
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn path_loss_params(&self) -> Result<PathLossParams> {
        PathLossParams::new(
            self.path_loss.pl0_db,
            self.path_loss.exponent,
            self.path_loss.distance_m,
        )
    }

    pub fn phy_curve_params(&self) -> Result<PhyCurve> {
        PhyCurve::new(
            self.phy_curve.floor_2m_dbm,
            self.phy_curve.floor_1m_dbm,
            self.phy_curve.floor_coded_dbm,
            self.phy_curve.saturation_dbm,
            self.phy_curve.p_max,
        )
    }

    pub fn link_threshold_params(&self) -> Result<LinkThresholds> {
        LinkThresholds::new(
            self.link_thresholds.rssi_high_dbm,
            self.link_thresholds.rssi_low_dbm,
            PdrPercent::new(self.link_thresholds.pdr_high)?,
            PdrPercent::new(self.link_thresholds.pdr_low)?,
        )
    }

    pub fn hop_threshold_params(&self) -> Result<HopThresholds> {
        HopThresholds::new(PdrPercent::new(self.pdr_threshold)?, self.channel_threshold)
    }

    fn interferer_params(&self, cfg: &InterfererConfig) -> Result<Interferer> {
        Interferer::new(
            cfg.wifi_channel,
            cfg.rssi_dbm,
            cfg.duty_cycle,
            cfg.start_event.unwrap_or(0),
            cfg.end_event.unwrap_or(self.duration_events),
        )
    }

    pub fn interferers_params(&self) -> Result<Vec<Interferer>> {
        self.interferers
            .iter()
            .map(|i| self.interferer_params(i))
            .collect()
    }

    /// Simulation inputs for this config. `adaptive` selects between the
    /// adaptive initial link and the fixed baseline link.
    pub fn sim_params(&self, adaptive: bool) -> Result<SimParams> {
        let (phy, txp) = if adaptive {
            (self.link.phy_mode()?, self.link.tx_power()?)
        } else {
            (
                PhyMode::from_str_loose(&self.baseline.phy)?,
                TxPower::new(self.baseline.txp_dbm)?,
            )
        };
        Ok(SimParams {
            seed: self.seed,
            node_id: 0,
            window_size: self.window_size,
            adaptation: adaptive && self.adaptation,
            adaptation_period: self.adaptation_period,
            hop_increment: self.hop_increment,
            hop_thresholds: self.hop_threshold_params()?,
            link_thresholds: self.link_threshold_params()?,
            initial_phy: phy,
            initial_txp: txp,
            path_loss: self.path_loss_params()?,
            curve: self.phy_curve_params()?,
            capture_db: self.capture_db,
            interferers: self.interferers_params()?,
        })
    }
}

/// Load and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Config {
        field: path.as_ref().display().to_string(),
        message: format!("cannot read scenario file: {e}"),
    })?;
    let cfg: ScenarioConfig = toml::from_str(&text).map_err(|e| Error::Config {
        field: "<toml>".into(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_fills_documented_defaults() {
        let cfg = ScenarioConfig::minimal(7, 500);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.duration_events, 500);
        assert!(cfg.adaptation);
        assert_eq!(cfg.window_size, 25);
        assert_eq!(cfg.pdr_threshold, 95.0);
        assert_eq!(cfg.channel_threshold, 10);
        assert_eq!(cfg.adaptation_period, 25);
        assert_eq!(cfg.link, LinkConfig::default());
        assert!(cfg.interferers.is_empty());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn minimal_toml_string_parses() {
        let cfg: ScenarioConfig = toml::from_str("seed = 1\nduration_events = 100\n").unwrap();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.window_size, 25);
    }

    #[test]
    fn out_of_range_pdr_threshold_names_the_field() {
        let mut cfg = ScenarioConfig::minimal(1, 100);
        cfg.pdr_threshold = 150.0;
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("pdr_threshold"), "{msg}");
    }

    #[test]
    fn presets_validate() {
        for cfg in [
            ScenarioConfig::mild(),
            ScenarioConfig::strong(),
            ScenarioConfig::dynamic(),
            ScenarioConfig::clean(),
        ] {
            cfg.validate().unwrap();
        }
        assert_eq!(ScenarioConfig::mild().interferers[0].rssi_dbm, -55.0);
        assert_eq!(ScenarioConfig::strong().interferers[0].rssi_dbm, -25.0);
        assert_eq!(ScenarioConfig::dynamic().interferers.len(), 4);
    }

    #[test]
    fn unknown_fields_rejected() {
        let res: std::result::Result<ScenarioConfig, _> =
            toml::from_str("seed = 1\nduration_events = 10\nbogus = 3\n");
        assert!(res.is_err());
    }

    #[test]
    fn attack_trigger_must_fit_run() {
        let mut cfg = ScenarioConfig::minimal(1, 100);
        cfg.attacks = vec![AttackConfig {
            kind: AttackKind::ReplayControl,
            trigger_event: 100,
        }];
        assert!(cfg.validate().is_err());
    }
}
