//! Adaptive frequency-hopping control.
//!
//! Maintains the 37-bit BLE channel map and selects the hop channel for
//! each connection event. The map update blacklists every channel whose
//! windowed delivery rate falls below a threshold, and re-enables all
//! channels whenever the previous map has shrunk below a minimum channel
//! count, so blacklisted channels get re-evaluated instead of starving the
//! hop sequence.

use crate::chanqual::{ChannelIndex, PdrPercent, PdrTracker, CHANNEL_COUNT};
use crate::{Error, Result};

const MAP_MASK: u64 = (1 << CHANNEL_COUNT) - 1;

/// Enable bitmap over the 37 data channels, packed little-endian into five
/// bytes on the wire (bit `i` of byte `i / 8` is channel `i`). The top
/// three bits of the last byte are always zero; a fully enabled map packs
/// to `[0xff, 0xff, 0xff, 0xff, 0x1f]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelMap(u64);

impl ChannelMap {
    /// Map with all 37 data channels enabled.
    pub fn all_enabled() -> Self {
        Self(MAP_MASK)
    }

    /// Map with no channels enabled. Not a legal operating state, but
    /// representable as a transient.
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn is_enabled(&self, channel: ChannelIndex) -> bool {
        self.0 & (1 << channel.index()) != 0
    }

    pub fn enable(&mut self, channel: ChannelIndex) {
        self.0 |= 1 << channel.index();
    }

    pub fn disable(&mut self, channel: ChannelIndex) {
        self.0 &= !(1 << channel.index());
    }

    /// Number of enabled channels.
    pub fn enabled_count(&self) -> u32 {
        self.0.count_ones()
    }

    /// Enabled channels in ascending order.
    pub fn enabled_channels(&self) -> Vec<ChannelIndex> {
        ChannelIndex::all().filter(|c| self.is_enabled(*c)).collect()
    }

    /// Pack into the five-byte wire form.
    pub fn encode(&self) -> [u8; 5] {
        let mut bytes = [0u8; 5];
        for (i, byte) in bytes.iter_mut().enumerate() {
            *byte = ((self.0 >> (8 * i)) & 0xff) as u8;
        }
        bytes
    }

    /// Unpack from the five-byte wire form. The top three bits of byte 4
    /// do not correspond to data channels and are masked off.
    pub fn decode(bytes: &[u8; 5]) -> Self {
        let mut value = 0u64;
        for (i, byte) in bytes.iter().enumerate() {
            value |= u64::from(*byte) << (8 * i);
        }
        Self(value & MAP_MASK)
    }

    /// Lowercase hex of the packed form, byte 0 first (e.g. `ffffffff1f`).
    pub fn to_hex(&self) -> String {
        hex::encode(self.encode())
    }
}

impl Default for ChannelMap {
    fn default() -> Self {
        Self::all_enabled()
    }
}

/// Thresholds driving the map update: channels below `pdr_threshold` are
/// blacklisted, and a map that has shrunk below `channel_threshold`
/// channels is reset to all-enabled before filtering.
#[derive(Debug, Clone, Copy)]
pub struct HopThresholds {
    pub pdr_threshold: PdrPercent,
    pub channel_threshold: u32,
}

impl HopThresholds {
    pub fn new(pdr_threshold: PdrPercent, channel_threshold: u32) -> Result<Self> {
        if !(2..=CHANNEL_COUNT as u32).contains(&channel_threshold) {
            return Err(Error::InvalidArgument(format!(
                "channel_threshold {channel_threshold} outside [2, 37]"
            )));
        }
        Ok(Self {
            pdr_threshold,
            channel_threshold,
        })
    }
}

impl Default for HopThresholds {
    /// 95% PDR filter over a minimum of 10 live channels.
    fn default() -> Self {
        Self {
            pdr_threshold: PdrPercent::new(95.0).unwrap(),
            channel_threshold: 10,
        }
    }
}

/// Recompute the channel map from current windowed channel quality.
///
/// If the previous map has fewer than `channel_threshold` channels
/// enabled, the working base is reset to all 37 channels so blacklisted
/// channels come back up for re-evaluation; otherwise the previous map is
/// the base. Every channel whose windowed PDR is below `pdr_threshold` is
/// then disabled in the result. Channels with empty windows read as 100%
/// and always survive the filter.
pub fn update_channel_map(
    tracker: &PdrTracker,
    last_map: ChannelMap,
    thresholds: &HopThresholds,
) -> ChannelMap {
    let mut map = if last_map.enabled_count() < thresholds.channel_threshold {
        ChannelMap::all_enabled()
    } else {
        last_map
    };
    for channel in ChannelIndex::all() {
        if tracker.pdr_latest(channel) < thresholds.pdr_threshold {
            map.disable(channel);
        }
    }
    map
}

/// Hop-sequence state: the unmapped channel counter and the per-connection
/// hop increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopState {
    last_unmapped: u8,
    increment: u8,
}

impl HopState {
    /// `increment` must lie in `[5, 16]`, the range BLE connections use.
    pub fn new(increment: u8) -> Result<Self> {
        if !(5..=16).contains(&increment) {
            return Err(Error::InvalidArgument(format!(
                "hop increment {increment} outside [5, 16]"
            )));
        }
        Ok(Self {
            last_unmapped: 0,
            increment,
        })
    }

    pub fn increment(&self) -> u8 {
        self.increment
    }
}

impl Default for HopState {
    fn default() -> Self {
        Self {
            last_unmapped: 0,
            increment: 7,
        }
    }
}

/// Select the channel for the next connection event.
///
/// The unmapped channel advances by the hop increment modulo 37. If that
/// channel is enabled it is used directly; otherwise it is remapped to the
/// enabled channel at position `unmapped mod enabled_count` in ascending
/// order.
pub fn select_channel(hop: HopState, map: &ChannelMap) -> Result<(ChannelIndex, HopState)> {
    let enabled = map.enabled_channels();
    if enabled.is_empty() {
        return Err(Error::InvalidState(
            "channel map has no enabled channels".into(),
        ));
    }
    let unmapped = (u32::from(hop.last_unmapped) + u32::from(hop.increment)) % 37;
    let next = HopState {
        last_unmapped: unmapped as u8,
        increment: hop.increment,
    };
    let unmapped_channel = ChannelIndex::new(unmapped as u8).expect("mod 37 stays in range");
    if map.is_enabled(unmapped_channel) {
        Ok((unmapped_channel, next))
    } else {
        let remapped = enabled[(unmapped as usize) % enabled.len()];
        Ok((remapped, next))
    }
}

/// Number of enabled channels in `map`.
pub fn enabled_count(map: &ChannelMap) -> u32 {
    map.enabled_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ch(i: u8) -> ChannelIndex {
        ChannelIndex::new(i).unwrap()
    }

    fn map_from_bits(bits: u64) -> ChannelMap {
        let mut m = ChannelMap::empty();
        for i in 0..37 {
            if bits & (1 << i) != 0 {
                m.enable(ch(i));
            }
        }
        m
    }

    #[test]
    fn encode_all_enabled_literal() {
        assert_eq!(
            ChannelMap::all_enabled().encode(),
            [0xff, 0xff, 0xff, 0xff, 0x1f]
        );
        assert_eq!(ChannelMap::all_enabled().to_hex(), "ffffffff1f");
    }

    #[test]
    fn encode_single_channel() {
        let mut m = ChannelMap::empty();
        m.enable(ch(0));
        assert_eq!(m.encode(), [0x01, 0x00, 0x00, 0x00, 0x00]);
    }

    #[test]
    fn encode_low_nine_disabled() {
        let mut m = ChannelMap::all_enabled();
        for i in 0..=8 {
            m.disable(ch(i));
        }
        let bytes = m.encode();
        assert_eq!(bytes, [0x00, 0xfe, 0xff, 0xff, 0x1f]);
        // cross-check by decoding
        assert_eq!(ChannelMap::decode(&bytes), m);
    }

    #[test]
    fn decode_masks_top_bits() {
        let m = ChannelMap::decode(&[0xff; 5]);
        assert_eq!(m, ChannelMap::all_enabled());
        assert_eq!(m.enabled_count(), 37);
    }

    #[test]
    fn decode_low_five() {
        let m = ChannelMap::decode(&[0x1f, 0, 0, 0, 0]);
        assert_eq!(m.enabled_channels(), (0..5).map(ch).collect::<Vec<_>>());
    }

    #[test]
    fn enabled_count_examples() {
        assert_eq!(ChannelMap::all_enabled().enabled_count(), 37);
        assert_eq!(
            ChannelMap::decode(&[0x00, 0x00, 0x00, 0x00, 0x1f]).enabled_count(),
            5
        );
    }

    #[test]
    fn update_resets_when_below_channel_threshold() {
        // 8 enabled < threshold 10, all windows empty: full reset survives.
        let tracker = PdrTracker::new(4).unwrap();
        let last = map_from_bits(0xff);
        assert_eq!(last.enabled_count(), 8);
        let th = HopThresholds::default();
        let updated = update_channel_map(&tracker, last, &th);
        assert_eq!(updated, ChannelMap::all_enabled());
    }

    #[test]
    fn update_disables_exactly_the_failing_channel() {
        let mut tracker = PdrTracker::new(10).unwrap();
        // ch2 at 90%: nine oks, one failure
        for _ in 0..9 {
            tracker.record_outcome(ch(2), true);
        }
        tracker.record_outcome(ch(2), false);
        let th = HopThresholds::default();
        let updated = update_channel_map(&tracker, ChannelMap::all_enabled(), &th);
        for c in ChannelIndex::all() {
            assert_eq!(updated.is_enabled(c), c != ch(2));
        }
    }

    #[test]
    fn update_keeps_base_when_all_perfect() {
        let mut tracker = PdrTracker::new(4).unwrap();
        for c in ChannelIndex::all() {
            tracker.record_outcome(c, true);
        }
        let mut base = ChannelMap::all_enabled();
        base.disable(ch(12));
        let th = HopThresholds::default();
        assert_eq!(update_channel_map(&tracker, base, &th), base);
    }

    #[test]
    fn reset_path_filters_against_fresh_base() {
        // Below channel_threshold forces a reset, but channels with bad
        // windows are filtered out of the fresh base in the same pass.
        let mut tracker = PdrTracker::new(4).unwrap();
        tracker.record_outcome(ch(30), false);
        let last = map_from_bits(0b111); // 3 enabled < 10
        let th = HopThresholds::default();
        let updated = update_channel_map(&tracker, last, &th);
        assert_eq!(updated.enabled_count(), 36);
        assert!(!updated.is_enabled(ch(30)));
    }

    #[test]
    fn select_direct_hit() {
        let hop = HopState::default(); // last 0, increment 7
        let (c, next) = select_channel(hop, &ChannelMap::all_enabled()).unwrap();
        assert_eq!(c, ch(7));
        let (c2, _) = select_channel(next, &ChannelMap::all_enabled()).unwrap();
        assert_eq!(c2, ch(14));
    }

    #[test]
    fn select_wraps_modulo_37() {
        let hop = HopState {
            last_unmapped: 35,
            increment: 7,
        };
        let (c, _) = select_channel(hop, &ChannelMap::all_enabled()).unwrap();
        assert_eq!(c, ch(5));
    }

    #[test]
    fn select_remaps_into_enabled_set() {
        let mut map = ChannelMap::empty();
        map.enable(ch(1));
        map.enable(ch(3));
        let hop = HopState::default();
        // unmapped lands on 7 (disabled): remap index 7 mod 2 = 1 -> ch3
        let (c, _) = select_channel(hop, &map).unwrap();
        assert_eq!(c, ch(3));
    }

    #[test]
    fn select_remap_matches_brute_force_table() {
        let mut map = ChannelMap::empty();
        for i in [2u8, 9, 17, 30, 36] {
            map.enable(ch(i));
        }
        let enabled = map.enabled_channels();
        let mut hop = HopState::new(11).unwrap();
        for _ in 0..200 {
            let before = hop;
            let (c, next) = select_channel(hop, &map).unwrap();
            let unmapped = (u32::from(before.last_unmapped) + 11) % 37;
            let expect = if map.is_enabled(ch(unmapped as u8)) {
                ch(unmapped as u8)
            } else {
                enabled[unmapped as usize % enabled.len()]
            };
            assert_eq!(c, expect);
            hop = next;
        }
    }

    #[test]
    fn select_on_empty_map_is_an_error() {
        let hop = HopState::default();
        assert!(matches!(
            select_channel(hop, &ChannelMap::empty()),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn fairness_visits_every_enabled_channel() {
        // 37 is prime, so every legal increment is coprime with it.
        for increment in 5..=16u8 {
            let mut map = ChannelMap::all_enabled();
            for i in [0u8, 4, 9, 20, 33] {
                map.disable(ch(i));
            }
            let mut hop = HopState::new(increment).unwrap();
            let mut seen = std::collections::HashSet::new();
            for _ in 0..(4 * map.enabled_count()) {
                let (c, next) = select_channel(hop, &map).unwrap();
                seen.insert(c);
                hop = next;
            }
            assert_eq!(seen.len() as u32, map.enabled_count());
        }
    }

    #[test]
    fn alg1_brute_force_oracle_random_states() {
        // Random tracker states + random maps vs an independently coded
        // reset-then-filter over a raw outcome log.
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..1000 {
            let window = 1 + (next() % 30) as usize;
            let mut tracker = PdrTracker::new(window).unwrap();
            let mut log: Vec<(u8, bool)> = Vec::new();
            for _ in 0..(next() % 300) {
                let c = (next() % 37) as u8;
                let ok = next() % 100 < 92;
                tracker.record_outcome(ch(c), ok);
                log.push((c, ok));
            }
            let last = map_from_bits(next() & MAP_MASK);
            let th = HopThresholds::new(
                PdrPercent::new((next() % 101) as f64).unwrap(),
                2 + (next() % 36) as u32,
            )
            .unwrap();

            // independent oracle: recount PDR from the log, reset, filter
            let mut expect = if last.enabled_count() < th.channel_threshold {
                ChannelMap::all_enabled()
            } else {
                last
            };
            for c in 0..37u8 {
                let marks: Vec<bool> = log
                    .iter()
                    .filter(|(lc, _)| *lc == c)
                    .map(|(_, ok)| *ok)
                    .collect();
                let tail = &marks[marks.len().saturating_sub(window)..];
                let pdr = if tail.is_empty() {
                    100.0
                } else {
                    tail.iter().filter(|ok| **ok).count() as f64 / tail.len() as f64 * 100.0
                };
                if pdr < th.pdr_threshold.value() {
                    expect.disable(ch(c));
                }
            }

            assert_eq!(update_channel_map(&tracker, last, &th), expect);
        }
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(bits in 0u64..(1 << 37)) {
            let m = map_from_bits(bits);
            prop_assert_eq!(ChannelMap::decode(&m.encode()), m);
            // top three bits of byte 4 always zero
            prop_assert_eq!(m.encode()[4] & 0xe0, 0);
        }

        #[test]
        fn enabled_count_matches_bit_loop(bits in 0u64..(1 << 37)) {
            let m = map_from_bits(bits);
            let naive = (0..37).filter(|i| bits & (1 << i) != 0).count() as u32;
            prop_assert_eq!(enabled_count(&m), naive);
        }

        #[test]
        fn update_is_idempotent_without_reset(
            trace in proptest::collection::vec((0u8..37, any::<bool>()), 0..200),
            bits in 0u64..(1 << 37),
        ) {
            let mut tracker = PdrTracker::new(8).unwrap();
            for (c, ok) in &trace {
                tracker.record_outcome(ch(*c), *ok);
            }
            let th = HopThresholds::default();
            let first = update_channel_map(&tracker, map_from_bits(bits), &th);
            if first.enabled_count() >= th.channel_threshold {
                prop_assert_eq!(update_channel_map(&tracker, first, &th), first);
            }
        }

        #[test]
        fn every_enabled_survivor_meets_threshold(
            trace in proptest::collection::vec((0u8..37, any::<bool>()), 0..300),
        ) {
            let mut tracker = PdrTracker::new(6).unwrap();
            for (c, ok) in &trace {
                tracker.record_outcome(ch(*c), *ok);
            }
            let th = HopThresholds::default();
            let updated = update_channel_map(&tracker, ChannelMap::all_enabled(), &th);
            for c in ChannelIndex::all() {
                if updated.is_enabled(c) {
                    prop_assert!(tracker.pdr_latest(c) >= th.pdr_threshold);
                }
            }
        }
    }
}
