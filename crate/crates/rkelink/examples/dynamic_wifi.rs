//! Moving Wi-Fi interferer: the channel hops ch1 -> ch5 -> ch10 -> ch13 at
//! the quarter marks while the link either adapts or holds a fixed PHY.

use rkelink::scenario::{run_dynamic_wifi, ScenarioConfig};

fn main() -> rkelink::Result<()> {
    let cfg = ScenarioConfig::dynamic();

    let adaptive = run_dynamic_wifi(&cfg)?;
    let mut baseline_cfg = cfg.clone();
    baseline_cfg.adaptation = false;
    let baseline = run_dynamic_wifi(&baseline_cfg)?;

    println!("phase        adaptive   baseline");
    let labels = ["ch1", "ch5", "ch10", "ch13"];
    for (i, label) in labels.iter().enumerate() {
        println!(
            "wifi {:<6}  {:.4}     {:.4}",
            label,
            adaptive.summary.phase_pdr_total[i],
            baseline.summary.phase_pdr_total[i]
        );
    }
    println!(
        "overall      {:.4}     {:.4}",
        adaptive.summary.final_pdr_total, baseline.summary.final_pdr_total
    );

    // channel-map trajectory: enabled count at the end of each phase
    println!();
    print!("adaptive enabled-channel trajectory:");
    for end in [2499usize, 4999, 7499, 9999] {
        print!(" {}", adaptive.rows[end].enabled_channel_count);
    }
    println!();
    Ok(())
}
