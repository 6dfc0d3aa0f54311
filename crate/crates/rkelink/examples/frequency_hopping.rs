//! Channel-map blacklisting and hop selection.
//!
//! Degrades the low band, lets the map update filter it out, then shows
//! the reset path re-enabling everything once the map gets too narrow.

use rkelink::chanqual::{ChannelIndex, PdrTracker};
use rkelink::hopctl::{select_channel, update_channel_map, ChannelMap, HopState, HopThresholds};

fn main() -> rkelink::Result<()> {
    let mut tracker = PdrTracker::new(10)?;
    let thresholds = HopThresholds::default();

    // channels 0..=8 fail hard, everything else delivers
    for channel in ChannelIndex::all() {
        for i in 0..10 {
            let ok = channel.value() > 8 || i % 3 == 0;
            tracker.record_outcome(channel, ok);
        }
    }

    let map = update_channel_map(&tracker, ChannelMap::all_enabled(), &thresholds);
    println!("map after filtering:  {} ({} enabled)", map.to_hex(), map.enabled_count());

    let mut hop = HopState::default();
    print!("next 12 hops:        ");
    let mut current = map;
    for _ in 0..12 {
        let (channel, next) = select_channel(hop, &current)?;
        print!(" {channel}");
        hop = next;
    }
    println!();

    // shrink the map below the channel threshold: the next update resets
    // to all 37 before filtering, giving blacklisted channels a retrial
    let mut narrow = ChannelMap::empty();
    for i in [10u8, 14, 20] {
        narrow.enable(ChannelIndex::new(i)?);
    }
    println!("narrow map:           {} ({} enabled)", narrow.to_hex(), narrow.enabled_count());
    let fresh = PdrTracker::new(10)?; // windows empty after a restart
    current = update_channel_map(&fresh, narrow, &thresholds);
    println!("after reset update:   {} ({} enabled)", current.to_hex(), current.enabled_count());

    // wire form round-trip
    let bytes = current.encode();
    println!("packed bytes:         {bytes:02x?}");
    assert_eq!(ChannelMap::decode(&bytes), current);
    Ok(())
}
