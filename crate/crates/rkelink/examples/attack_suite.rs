//! The four scripted attacks, first against the full defenses, then with
//! each one's matching defense disabled to show the flip.

use rkelink::scenario::{run_attack, AttackKind, DefensesConfig};

const VIN: &str = "1HGCM82633A004352";

fn main() -> rkelink::Result<()> {
    let defended = DefensesConfig::default();
    println!("defenses up:");
    for kind in AttackKind::ALL {
        let outcome = run_attack(kind, 42, VIN, &defended)?;
        println!(
            "  {:<22} {:<9} {}",
            kind.as_str(),
            outcome.verdict_str(),
            outcome.detail
        );
    }

    println!();
    println!("matching defense disabled:");
    for kind in AttackKind::ALL {
        let mut defenses = DefensesConfig::default();
        match kind {
            AttackKind::ImpersonateInject => defenses.whitelist = false,
            AttackKind::ImpersonateRevoked => defenses.revocation = false,
            AttackKind::ImpersonateStaleKey | AttackKind::ReplayControl => {
                defenses.rotation = false
            }
        }
        let outcome = run_attack(kind, 42, VIN, &defenses)?;
        println!(
            "  {:<22} {:<9} {}",
            kind.as_str(),
            outcome.verdict_str(),
            outcome.detail
        );
    }

    // one transcript in full: the stale-key attacker dying on the rand1
    // echo
    println!();
    println!("stale-key attack transcript:");
    let outcome = run_attack(AttackKind::ImpersonateStaleKey, 42, VIN, &defended)?;
    for entry in &outcome.transcript {
        let payload = if entry.payload_hex.len() > 36 {
            format!("{}...", &entry.payload_hex[..36])
        } else {
            entry.payload_hex.clone()
        };
        println!(
            "  round={} {:>8} {:<14} {}",
            entry.round, entry.sender.to_string(), entry.kind, payload
        );
    }
    Ok(())
}
