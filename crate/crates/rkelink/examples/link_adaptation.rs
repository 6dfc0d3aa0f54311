//! Transmit-power and PHY-mode control walk.
//!
//! Starts a link at the long-range operating point and steps it through a
//! strong-signal stretch (power sheds 4 dB at a time, then the PHY flips
//! to 2M) and a weak-signal stretch (power climbs back, then the PHY
//! returns to Coded).

use rkelink::chanqual::PdrPercent;
use rkelink::linkctl::{adapt, initial_link, LinkParams, LinkThresholds};

fn main() -> rkelink::Result<()> {
    let thresholds = LinkThresholds::default();
    let (mut phy, mut txp) = initial_link();
    println!("initial link: PHY {phy}, TXP {txp}");
    println!();
    println!("  rssi    pdr     ->  phy    txp");

    let schedule = [
        (-40.0, 99.5),
        (-40.0, 99.5),
        (-40.0, 99.5),
        (-40.0, 99.5),
        (-40.0, 99.5),
        (-40.0, 99.5),
        (-40.0, 99.5),
        (-40.0, 99.5), // power floor reached: switch to 2M
        (-62.0, 90.0), // middle band: hold
        (-80.0, 60.0), // bad link: climb
        (-80.0, 60.0),
        (-80.0, 60.0),
        (-80.0, 60.0),
        (-80.0, 60.0),
        (-80.0, 60.0),
        (-80.0, 60.0),
        (-80.0, 60.0), // ceiling reached: back to Coded
    ];
    for (rssi, pdr) in schedule {
        let link = LinkParams::new(phy, txp, rssi, PdrPercent::new(pdr)?)?;
        let (new_phy, new_txp) = adapt(&link, &thresholds);
        let note = if new_phy != phy {
            "PHY switch"
        } else if new_txp != txp {
            "power step"
        } else {
            "hold"
        };
        println!("{rssi:>6}  {pdr:>5}%  ->  {new_phy:<5}  {:>3} dBm   {note}", new_txp.dbm());
        phy = new_phy;
        txp = new_txp;
    }
    Ok(())
}
