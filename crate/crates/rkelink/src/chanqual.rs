//! Per-channel link-quality estimation from packet outcomes.
//!
//! Every data packet is recorded against the BLE data channel it was sent
//! on, as delivered or lost. Two estimates are derived per channel: a
//! windowed real-time delivery rate over the last `window_size` packets on
//! that channel, and a lifetime average over everything ever sent on it.
//! The windowed estimate is what the hopping controller filters on; the
//! lifetime counters feed run-level metrics.

use std::collections::VecDeque;
use std::fmt;

use crate::{Error, Result};

/// Number of BLE data channels.
pub const CHANNEL_COUNT: usize = 37;

/// BLE data-channel index in `0..=36`.
///
/// Data channels occupy 2404–2480 MHz at 2 MHz spacing. The three
/// advertising channels (37–39) are never valid here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelIndex(u8);

impl ChannelIndex {
    pub fn new(index: u8) -> Result<Self> {
        if index as usize >= CHANNEL_COUNT {
            return Err(Error::InvalidArgument(format!(
                "channel index {index} out of range 0..=36"
            )));
        }
        Ok(Self(index))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Center frequency of the channel: 2404 + 2·index MHz.
    pub fn center_freq_mhz(self) -> u32 {
        2404 + 2 * u32::from(self.0)
    }

    /// All 37 data channels in ascending order.
    pub fn all() -> impl Iterator<Item = ChannelIndex> {
        (0..CHANNEL_COUNT as u8).map(ChannelIndex)
    }
}

impl fmt::Display for ChannelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch{}", self.0)
    }
}

/// A packet delivery rate as a percentage in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PdrPercent(f64);

impl PdrPercent {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&value) {
            return Err(Error::InvalidArgument(format!(
                "PDR percentage {value} outside [0, 100]"
            )));
        }
        Ok(Self(value))
    }

    /// Rate from ok/fail counts. An empty sample (both zero) reads as 100%
    /// so that untried channels stay eligible for selection.
    pub fn from_counts(oks: u64, errors: u64) -> Self {
        if oks == 0 && errors == 0 {
            Self(100.0)
        } else {
            Self(oks as f64 / (oks + errors) as f64 * 100.0)
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for PdrPercent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}%", self.0)
    }
}

/// Sliding-window and lifetime delivery statistics for all 37 channels.
///
/// Each channel keeps a ring buffer of its last `window_size` outcomes
/// (equivalent to one column of an m×37 record matrix) plus monotone
/// lifetime ok/error counters.
#[derive(Debug, Clone)]
pub struct PdrTracker {
    window_size: usize,
    windows: Vec<VecDeque<bool>>,
    total_oks: [u64; CHANNEL_COUNT],
    total_errors: [u64; CHANNEL_COUNT],
}

impl PdrTracker {
    /// Create a tracker retaining the last `window_size` outcomes per channel.
    pub fn new(window_size: usize) -> Result<Self> {
        if window_size == 0 {
            return Err(Error::InvalidArgument(
                "window_size must be at least 1".into(),
            ));
        }
        Ok(Self {
            window_size,
            windows: vec![VecDeque::with_capacity(window_size); CHANNEL_COUNT],
            total_oks: [0; CHANNEL_COUNT],
            total_errors: [0; CHANNEL_COUNT],
        })
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    /// Record one packet outcome on `channel`, evicting the channel's
    /// oldest mark when the window is full.
    pub fn record_outcome(&mut self, channel: ChannelIndex, ok: bool) {
        let window = &mut self.windows[channel.index()];
        if window.len() == self.window_size {
            window.pop_front();
        }
        window.push_back(ok);
        if ok {
            self.total_oks[channel.index()] += 1;
        } else {
            self.total_errors[channel.index()] += 1;
        }
    }

    /// Real-time PDR of `channel` over its window. 100% when the window is
    /// still empty.
    pub fn pdr_latest(&self, channel: ChannelIndex) -> PdrPercent {
        let window = &self.windows[channel.index()];
        let oks = window.iter().filter(|ok| **ok).count() as u64;
        let errors = window.len() as u64 - oks;
        PdrPercent::from_counts(oks, errors)
    }

    /// Lifetime PDR of `channel` over every recorded packet.
    pub fn pdr_total(&self, channel: ChannelIndex) -> PdrPercent {
        PdrPercent::from_counts(
            self.total_oks[channel.index()],
            self.total_errors[channel.index()],
        )
    }

    /// Per-channel real-time PDR for all 37 channels, indexed by channel.
    pub fn pdr_latest_all(&self) -> [PdrPercent; CHANNEL_COUNT] {
        let mut out = [PdrPercent(100.0); CHANNEL_COUNT];
        for ch in ChannelIndex::all() {
            out[ch.index()] = self.pdr_latest(ch);
        }
        out
    }

    /// Lifetime (ok, error) counters for `channel`.
    pub fn totals(&self, channel: ChannelIndex) -> (u64, u64) {
        (
            self.total_oks[channel.index()],
            self.total_errors[channel.index()],
        )
    }

    /// Window contents for `channel` as +1/-1 marks, oldest first.
    pub fn window_marks(&self, channel: ChannelIndex) -> Vec<i8> {
        self.windows[channel.index()]
            .iter()
            .map(|ok| if *ok { 1 } else { -1 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ch(i: u8) -> ChannelIndex {
        ChannelIndex::new(i).unwrap()
    }

    /// Independent recount of the windowed PDR from a raw outcome trace.
    fn recount_latest(trace: &[(u8, bool)], window_size: usize, channel: u8) -> f64 {
        let marks: Vec<bool> = trace
            .iter()
            .filter(|(c, _)| *c == channel)
            .map(|(_, ok)| *ok)
            .collect();
        let tail = &marks[marks.len().saturating_sub(window_size)..];
        if tail.is_empty() {
            return 100.0;
        }
        let oks = tail.iter().filter(|ok| **ok).count();
        oks as f64 / tail.len() as f64 * 100.0
    }

    fn recount_total(trace: &[(u8, bool)], channel: u8) -> f64 {
        let marks: Vec<bool> = trace
            .iter()
            .filter(|(c, _)| *c == channel)
            .map(|(_, ok)| *ok)
            .collect();
        if marks.is_empty() {
            return 100.0;
        }
        let oks = marks.iter().filter(|ok| **ok).count();
        oks as f64 / marks.len() as f64 * 100.0
    }

    #[test]
    fn new_tracker_sizes() {
        let t = PdrTracker::new(25).unwrap();
        assert_eq!(t.window_size(), 25);
        for c in ChannelIndex::all() {
            assert!(t.window_marks(c).is_empty());
            assert_eq!(t.totals(c), (0, 0));
        }

        // Degenerate window: PDR equals the last outcome only.
        let mut t1 = PdrTracker::new(1).unwrap();
        t1.record_outcome(ch(0), false);
        assert_eq!(t1.pdr_latest(ch(0)).value(), 0.0);
        t1.record_outcome(ch(0), true);
        assert_eq!(t1.pdr_latest(ch(0)).value(), 100.0);

        let t4 = PdrTracker::new(4).unwrap();
        assert_eq!(t4.window_size(), 4);
    }

    #[test]
    fn zero_window_rejected() {
        assert!(matches!(
            PdrTracker::new(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn channel_index_bounds() {
        assert!(ChannelIndex::new(36).is_ok());
        assert!(ChannelIndex::new(37).is_err());
        assert!(ChannelIndex::new(39).is_err());
        assert_eq!(ch(0).center_freq_mhz(), 2404);
        assert_eq!(ch(36).center_freq_mhz(), 2476);
    }

    #[test]
    fn record_single_ok() {
        let mut t = PdrTracker::new(25).unwrap();
        t.record_outcome(ch(5), true);
        assert_eq!(t.window_marks(ch(5)), vec![1]);
        assert_eq!(t.totals(ch(5)), (1, 0));
    }

    #[test]
    fn four_slot_window_pattern() {
        // fail, ok, fail, ok on one channel with a four-slot window.
        let mut t = PdrTracker::new(4).unwrap();
        for ok in [false, true, false, true] {
            t.record_outcome(ch(0), ok);
        }
        assert_eq!(t.window_marks(ch(0)), vec![-1, 1, -1, 1]);
        assert!((t.pdr_latest(ch(0)).value() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn ring_eviction_keeps_window_length() {
        let mut t = PdrTracker::new(4).unwrap();
        for ok in [false, true, false, true] {
            t.record_outcome(ch(0), ok);
        }
        t.record_outcome(ch(0), true);
        assert_eq!(t.window_marks(ch(0)), vec![1, -1, 1, 1]);
        assert_eq!(t.totals(ch(0)), (3, 2));
    }

    #[test]
    fn latest_all_ones_and_empty_default() {
        let mut t = PdrTracker::new(4).unwrap();
        for _ in 0..4 {
            t.record_outcome(ch(7), true);
        }
        assert_eq!(t.pdr_latest(ch(7)).value(), 100.0);
        // untouched channel defaults optimistic
        assert_eq!(t.pdr_latest(ch(8)).value(), 100.0);
    }

    #[test]
    fn total_arithmetic() {
        let mut t = PdrTracker::new(5).unwrap();
        for _ in 0..85 {
            t.record_outcome(ch(1), true);
        }
        for _ in 0..15 {
            t.record_outcome(ch(1), false);
        }
        assert!((t.pdr_total(ch(1)).value() - 85.0).abs() < 1e-9);

        let mut t = PdrTracker::new(5).unwrap();
        for _ in 0..10 {
            t.record_outcome(ch(2), false);
        }
        assert_eq!(t.pdr_total(ch(2)).value(), 0.0);
    }

    #[test]
    fn total_matches_recount_of_recorded_sequence() {
        let trace = [(9u8, true), (9, true), (9, false), (9, true)];
        let mut t = PdrTracker::new(2).unwrap();
        for (c, ok) in trace {
            t.record_outcome(ch(c), ok);
        }
        assert!((t.pdr_total(ch(9)).value() - 75.0).abs() < 1e-9);
        assert!((t.pdr_total(ch(9)).value() - recount_total(&trace, 9)).abs() < 1e-9);
    }

    #[test]
    fn latest_all_fresh_and_single_failure() {
        let t = PdrTracker::new(25).unwrap();
        assert!(t.pdr_latest_all().iter().all(|p| p.value() == 100.0));

        let mut t = PdrTracker::new(25).unwrap();
        t.record_outcome(ch(3), false);
        for (i, p) in t.pdr_latest_all().iter().enumerate() {
            if i == 3 {
                assert_eq!(p.value(), 0.0);
            } else {
                assert_eq!(p.value(), 100.0);
            }
        }
    }

    #[test]
    fn latest_all_matches_recount_on_long_trace() {
        // deterministic pseudo-random trace, no RNG dependency needed
        let mut state = 0x2545_F491_4F6C_DD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let trace: Vec<(u8, bool)> = (0..1000)
            .map(|_| {
                let x = next();
                ((x % 37) as u8, x & (1 << 40) != 0)
            })
            .collect();
        let mut t = PdrTracker::new(25).unwrap();
        for (c, ok) in &trace {
            t.record_outcome(ch(*c), *ok);
        }
        let all = t.pdr_latest_all();
        for c in 0..37u8 {
            assert!((all[c as usize].value() - recount_latest(&trace, 25, c)).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn incremental_matches_brute_force(
            trace in proptest::collection::vec((0u8..37, any::<bool>()), 0..400),
            window in 1usize..40,
        ) {
            let mut t = PdrTracker::new(window).unwrap();
            for (c, ok) in &trace {
                t.record_outcome(ch(*c), *ok);
            }
            for c in 0..37u8 {
                let got = t.pdr_latest(ch(c)).value();
                let want = recount_latest(&trace, window, c);
                prop_assert!((got - want).abs() < 1e-9);
                let got_total = t.pdr_total(ch(c)).value();
                let want_total = recount_total(&trace, c);
                prop_assert!((got_total - want_total).abs() < 1e-9);
            }
        }

        #[test]
        fn total_invariant_under_window_size(
            trace in proptest::collection::vec((0u8..37, any::<bool>()), 0..200),
            w1 in 1usize..30,
            w2 in 1usize..30,
        ) {
            let mut a = PdrTracker::new(w1).unwrap();
            let mut b = PdrTracker::new(w2).unwrap();
            for (c, ok) in &trace {
                a.record_outcome(ch(*c), *ok);
                b.record_outcome(ch(*c), *ok);
            }
            for c in 0..37u8 {
                prop_assert_eq!(a.pdr_total(ch(c)).value(), b.pdr_total(ch(c)).value());
            }
        }

        #[test]
        fn ok_never_decreases_total_failure_never_increases(
            trace in proptest::collection::vec((0u8..37, any::<bool>()), 0..200),
            c in 0u8..37,
            ok in any::<bool>(),
        ) {
            let mut t = PdrTracker::new(10).unwrap();
            for (tc, tok) in &trace {
                t.record_outcome(ch(*tc), *tok);
            }
            let before = t.pdr_total(ch(c)).value();
            t.record_outcome(ch(c), ok);
            let after = t.pdr_total(ch(c)).value();
            if ok {
                prop_assert!(after >= before - 1e-12);
            } else {
                prop_assert!(after <= before + 1e-12);
            }
        }

        #[test]
        fn percentages_stay_in_range(
            trace in proptest::collection::vec((0u8..37, any::<bool>()), 0..300),
        ) {
            let mut t = PdrTracker::new(7).unwrap();
            for (c, ok) in &trace {
                t.record_outcome(ch(*c), *ok);
                for p in t.pdr_latest_all() {
                    prop_assert!((0.0..=100.0).contains(&p.value()));
                }
            }
        }
    }
}
