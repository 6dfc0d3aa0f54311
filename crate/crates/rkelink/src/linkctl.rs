//! Transmission power and PHY mode adaptation.
//!
//! One adaptation step looks at the current RSSI and delivery rate. On a
//! good link (both above their high thresholds) it sheds 4 dB of transmit
//! power, switching to the high-rate PHY once the power floor is reached.
//! On a bad link (both below their low thresholds) it adds 4 dB, switching
//! to the long-range coded PHY once the power ceiling is reached. In the
//! band between, nothing changes. At most one parameter moves per step.

use std::fmt;

use crate::chanqual::PdrPercent;
use crate::{Error, Result};

/// BLE physical-layer mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhyMode {
    /// 1 Mbps, the pre-5.0 baseline.
    Phy1M,
    /// 2 Mbps high-speed mode, shortest range.
    Phy2M,
    /// Long-range coded mode, lowest throughput.
    PhyCoded,
}

impl PhyMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhyMode::Phy1M => "1M",
            PhyMode::Phy2M => "2M",
            PhyMode::PhyCoded => "Coded",
        }
    }

    pub fn from_str_loose(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1m" | "phy1m" | "phy_1m" => Ok(PhyMode::Phy1M),
            "2m" | "phy2m" | "phy_2m" => Ok(PhyMode::Phy2M),
            "coded" | "phycoded" | "phy_coded" => Ok(PhyMode::PhyCoded),
            other => Err(Error::InvalidArgument(format!("unknown PHY mode `{other}`"))),
        }
    }
}

impl fmt::Display for PhyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Transmit power on the 4 dB grid from -20 to +8 dBm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxPower(i8);

impl TxPower {
    pub const GRID: [i8; 8] = [-20, -16, -12, -8, -4, 0, 4, 8];
    pub const MIN_DBM: i8 = -20;
    pub const MAX_DBM: i8 = 8;

    pub fn new(dbm: i8) -> Result<Self> {
        if Self::GRID.contains(&dbm) {
            Ok(Self(dbm))
        } else {
            Err(Error::InvalidArgument(format!(
                "tx power {dbm} dBm not on the grid {:?}",
                Self::GRID
            )))
        }
    }

    pub fn dbm(self) -> i8 {
        self.0
    }

    fn lowered(self) -> Self {
        debug_assert!(self.0 > Self::MIN_DBM);
        Self(self.0 - 4)
    }

    fn raised(self) -> Self {
        debug_assert!(self.0 < Self::MAX_DBM);
        Self(self.0 + 4)
    }
}

impl fmt::Display for TxPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dBm", self.0)
    }
}

/// Current link operating point fed into one adaptation step.
#[derive(Debug, Clone, Copy)]
pub struct LinkParams {
    pub phy: PhyMode,
    pub txp: TxPower,
    pub rssi_dbm: f64,
    pub pdr: PdrPercent,
}

impl LinkParams {
    pub fn new(phy: PhyMode, txp: TxPower, rssi_dbm: f64, pdr: PdrPercent) -> Result<Self> {
        if !(-120.0..=20.0).contains(&rssi_dbm) {
            return Err(Error::InvalidArgument(format!(
                "rssi {rssi_dbm} dBm outside sanity bounds [-120, 20]"
            )));
        }
        Ok(Self {
            phy,
            txp,
            rssi_dbm,
            pdr,
        })
    }
}

/// Band edges for the adaptation decision.
#[derive(Debug, Clone, Copy)]
pub struct LinkThresholds {
    pub rssi_high_dbm: f64,
    pub rssi_low_dbm: f64,
    pub pdr_high: PdrPercent,
    pub pdr_low: PdrPercent,
}

impl LinkThresholds {
    pub fn new(
        rssi_high_dbm: f64,
        rssi_low_dbm: f64,
        pdr_high: PdrPercent,
        pdr_low: PdrPercent,
    ) -> Result<Self> {
        if rssi_low_dbm >= rssi_high_dbm {
            return Err(Error::InvalidArgument(format!(
                "rssi_low {rssi_low_dbm} must be below rssi_high {rssi_high_dbm}"
            )));
        }
        if pdr_low >= pdr_high {
            return Err(Error::InvalidArgument(format!(
                "pdr_low {pdr_low} must be below pdr_high {pdr_high}"
            )));
        }
        Ok(Self {
            rssi_high_dbm,
            rssi_low_dbm,
            pdr_high,
            pdr_low,
        })
    }
}

impl Default for LinkThresholds {
    /// -55 dBm is where all three PHY modes deliver near-max rates, -70 dBm
    /// is where the coded PHY clearly wins; the PDR edges bracket the
    /// channel-blacklisting threshold.
    fn default() -> Self {
        Self {
            rssi_high_dbm: -55.0,
            rssi_low_dbm: -70.0,
            pdr_high: PdrPercent::new(95.0).unwrap(),
            pdr_low: PdrPercent::new(85.0).unwrap(),
        }
    }
}

/// Link parameters a fresh connection starts from: long-range PHY at full
/// power, the widest-reach operating point.
pub fn initial_link() -> (PhyMode, TxPower) {
    (PhyMode::PhyCoded, TxPower(8))
}

/// One adaptation step. Returns the new (PHY, TXP) pair; at most one of
/// the two differs from the input.
pub fn adapt(link: &LinkParams, th: &LinkThresholds) -> (PhyMode, TxPower) {
    let good = link.rssi_dbm > th.rssi_high_dbm && link.pdr > th.pdr_high;
    let bad = link.rssi_dbm < th.rssi_low_dbm && link.pdr < th.pdr_low;
    if good {
        if link.txp.dbm() > TxPower::MIN_DBM {
            (link.phy, link.txp.lowered())
        } else if link.phy != PhyMode::Phy2M {
            (PhyMode::Phy2M, link.txp)
        } else {
            (link.phy, link.txp)
        }
    } else if bad {
        if link.txp.dbm() < TxPower::MAX_DBM {
            (link.phy, link.txp.raised())
        } else if link.phy != PhyMode::PhyCoded {
            (PhyMode::PhyCoded, link.txp)
        } else {
            (link.phy, link.txp)
        }
    } else {
        (link.phy, link.txp)
    }
}
