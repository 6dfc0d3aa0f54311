//! One full authentication round with its message transcript.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rkelink::protocol::{provision, ControlCommand, RoundOptions};

fn main() -> rkelink::Result<()> {
    let now = 1_700_000_000;
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut world = provision("1HGCM82633A004352", ControlCommand::Unlock, &mut rng, now)?;

    println!("whitelisted pid:  {}", world.fob.credentials().pid.to_hex());
    println!("shared key:       {}", world.fob.session_key().to_hex());
    println!();

    let report = world.run_round(&mut rng, now, RoundOptions::default())?;
    for entry in &report.trace {
        let payload = if entry.payload_hex.len() > 40 {
            format!("{}...", &entry.payload_hex[..40])
        } else {
            entry.payload_hex.clone()
        };
        println!("{:>8} {:<14} {}", entry.sender.to_string(), entry.kind, payload);
    }
    println!();
    println!("executed:         {}", report.executed);
    println!(
        "command:          {:?}",
        world.vehicle.last_executed().map(|c| c.as_str())
    );
    println!(
        "keys agree:       {}",
        world.fob.session_key() == world.vehicle.session_key()
    );
    println!("rotated key:      {}", world.fob.session_key().to_hex());

    // the fob misses the acknowledgement; the desync guard recovers the
    // following round under the vehicle's retained previous key
    let report = world.run_round(
        &mut rng,
        now,
        RoundOptions {
            drop_control_ok: true,
        },
    )?;
    println!();
    println!("round 2 executed, CONTROL_OK lost: {}", report.executed);
    println!(
        "keys agree after loss:             {}",
        world.fob.session_key() == world.vehicle.session_key()
    );
    let report = world.run_round(&mut rng, now, RoundOptions::default())?;
    println!("round 3 executed:                  {}", report.executed);
    println!(
        "keys agree after recovery round:   {}",
        world.fob.session_key() == world.vehicle.session_key()
    );
    Ok(())
}
