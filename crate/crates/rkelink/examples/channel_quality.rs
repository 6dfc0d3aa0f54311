//! Windowed and lifetime per-channel delivery tracking.
//!
//! Feeds a four-slot window the classic fail/ok/fail/ok pattern, then a
//! longer pseudo-random trace, and prints both PDR estimates per channel.

use rkelink::chanqual::{ChannelIndex, PdrTracker};

fn main() -> rkelink::Result<()> {
    let mut tracker = PdrTracker::new(4)?;
    let ch0 = ChannelIndex::new(0)?;

    for ok in [false, true, false, true] {
        tracker.record_outcome(ch0, ok);
    }
    println!("window marks on ch0:  {:?}", tracker.window_marks(ch0));
    println!("pdr_latest(ch0):      {}", tracker.pdr_latest(ch0));
    println!("pdr_total(ch0):       {}", tracker.pdr_total(ch0));

    // a fifth packet evicts the oldest mark
    tracker.record_outcome(ch0, true);
    println!("after one more ok:    {:?}", tracker.window_marks(ch0));
    println!("pdr_latest(ch0):      {}", tracker.pdr_latest(ch0));
    println!();

    // a longer run: channels 0-8 lossy, the rest clean
    let mut tracker = PdrTracker::new(25)?;
    let mut state = 0x853c_49e6_748f_ea9bu64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for _ in 0..2000 {
        let channel = ChannelIndex::new((next() % 37) as u8)?;
        let lossy = channel.value() <= 8;
        let ok = if lossy { next() % 10 < 4 } else { next() % 100 < 99 };
        tracker.record_outcome(channel, ok);
    }

    println!("channel   freq  pdr_latest  pdr_total");
    for channel in ChannelIndex::all().step_by(4) {
        println!(
            "{:<8} {} MHz   {:>7}    {:>7}",
            channel.to_string(),
            channel.center_freq_mhz(),
            tracker.pdr_latest(channel).to_string(),
            tracker.pdr_total(channel).to_string(),
        );
    }
    Ok(())
}
