//! Static Wi-Fi interference: adaptive scheme vs fixed-PHY baseline under
//! the mild and strong presets.

use rkelink::scenario::{compare, ScenarioConfig};

fn report(name: &str, cfg: &ScenarioConfig) -> rkelink::Result<()> {
    let twin = compare(cfg)?;
    println!("== {name} ==");
    println!(
        "interferer: wifi ch{} at {} dBm, duty {}",
        cfg.interferers[0].wifi_channel,
        cfg.interferers[0].rssi_dbm,
        cfg.interferers[0].duty_cycle
    );
    println!(
        "adaptive:  pdr_total {:.4}  steady-state pdr_latest {:.4}",
        twin.adaptive.summary.final_pdr_total, twin.adaptive.summary.steady_state_pdr_latest
    );
    println!(
        "baseline:  pdr_total {:.4}  steady-state pdr_latest {:.4}  (fixed {} @ {} dBm)",
        twin.baseline.summary.final_pdr_total,
        twin.baseline.summary.steady_state_pdr_latest,
        cfg.baseline.phy,
        cfg.baseline.txp_dbm
    );
    // the adaptive run ends with the interfered band blacklisted
    let last = twin.adaptive.rows.last().unwrap();
    println!(
        "adaptive end state: {} channels enabled, map {}",
        last.enabled_channel_count, last.channel_map_hex
    );
    println!();
    Ok(())
}

fn main() -> rkelink::Result<()> {
    report("mild interference", &ScenarioConfig::mild())?;
    report("strong interference", &ScenarioConfig::strong())?;
    Ok(())
}
