//! Scenario orchestration: configuration, full runs, attack suites,
//! metrics aggregation, and CSV/JSON emission.
//!
//! A run bootstraps the protocol deployment, executes one authentication
//! round, then drives the RF data phase event by event, with the channel
//! map and link parameters adapting on their period when enabled.
//! Configured attacks execute against a snapshot of the live deployment
//! at their trigger events. Identical (config, seed) pairs produce
//! byte-identical CSV output.

pub mod attacks;
pub mod config;

pub use attacks::{run_attack, run_attack_suite, AttackOutcome, RejectionPoint};
pub use config::{
    load_scenario, AttackConfig, AttackKind, DefensesConfig, InterfererConfig, ScenarioConfig,
};

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::protocol::{provision, ControlCommand, RoundOptions};
use crate::rfsim::Simulation;
use crate::{Error, Result};

/// Fixed provisioning timestamp (unix seconds) so certificate validity
/// windows, and therefore runs, are reproducible.
pub const PROVISION_TIME: u64 = 1_700_000_000;

/// Salt separating the protocol RNG stream from the packet-outcome draws.
const PROTOCOL_RNG_SALT: u64 = 0x70726f746f636f6c;

/// One emitted CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub event_index: u64,
    pub time_slot: f64,
    pub channel: u8,
    pub phy: &'static str,
    pub txp_dbm: i8,
    pub rssi_dbm: f64,
    pub success: bool,
    /// Delivery rate over the last `window_size` packets, any channel.
    pub pdr_latest_overall: f64,
    /// Cumulative delivery rate since the start of the run.
    pub pdr_total_overall: f64,
    pub enabled_channel_count: u32,
    pub channel_map_hex: String,
}

/// Attack verdict as carried in the run summary.
#[derive(Debug, Clone, Serialize)]
pub struct AttackSummary {
    pub kind: String,
    pub trigger_event: u64,
    pub verdict: String,
    pub detail: String,
}

/// Aggregates of one run; everything here is recomputable from the
/// per-event series.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub events: u64,
    pub adaptive: bool,
    pub auth_round_executed: bool,
    pub final_pdr_total: f64,
    /// Mean of `pdr_latest_overall` over the final 20% of events.
    pub steady_state_pdr_latest: f64,
    /// Delivery rate within each interferer-schedule segment.
    pub phase_pdr_total: Vec<f64>,
    pub attacks: Vec<AttackSummary>,
}

/// Full result of a run: the per-event series plus the summary and the
/// detailed attack outcomes (with transcripts).
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub rows: Vec<EventRow>,
    pub summary: RunSummary,
    pub attack_outcomes: Vec<AttackOutcome>,
}

impl RunMetrics {
    /// True when every attack verdict matches what the configured
    /// defenses predict.
    pub fn attacks_match_expectations(&self, defenses: &DefensesConfig) -> bool {
        self.attack_outcomes
            .iter()
            .all(|o| o.matches_expectation(defenses))
    }
}

/// Twin runs from one seed: the adaptive scheme and the fixed baseline.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub adaptive: RunMetrics,
    pub baseline: RunMetrics,
}

/// Execute the configured scenario: authentication round, data phase with
/// adaptation per the config, attacks at their trigger events.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    cfg.validate()?;
    run_configured(cfg, cfg.adaptation)
}

/// Execute the scenario with a four-phase moving-interferer schedule
/// (Wi-Fi ch1 -> ch5 -> ch10 -> ch13 at the quarter marks). A config that
/// already carries a four-entry schedule is run as-is; otherwise the
/// schedule is built from the first configured interferer's strength and
/// duty cycle.
pub fn run_dynamic_wifi(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    let mut cfg = cfg.clone();
    if cfg.interferers.len() != 4 {
        let (rssi_dbm, duty_cycle) = cfg
            .interferers
            .first()
            .map(|i| (i.rssi_dbm, i.duty_cycle))
            .unwrap_or((-55.0, 0.6));
        let quarter = cfg.duration_events / 4;
        cfg.interferers = [1u8, 5, 10, 13]
            .iter()
            .enumerate()
            .map(|(i, wifi_channel)| InterfererConfig {
                wifi_channel: *wifi_channel,
                rssi_dbm,
                duty_cycle,
                start_event: Some(i as u64 * quarter),
                end_event: Some(if i == 3 {
                    cfg.duration_events
                } else {
                    (i as u64 + 1) * quarter
                }),
            })
            .collect();
    }
    run_scenario(&cfg)
}

/// Run the adaptive scheme and the fixed baseline from the same seed.
pub fn compare(cfg: &ScenarioConfig) -> Result<CompareReport> {
    cfg.validate()?;
    Ok(CompareReport {
        adaptive: run_configured(cfg, true)?,
        baseline: run_configured(cfg, false)?,
    })
}

fn run_configured(cfg: &ScenarioConfig, adaptive: bool) -> Result<RunMetrics> {
    // protocol bootstrap: provision and authenticate once
    let mut proto_rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ PROTOCOL_RNG_SALT);
    let mut world = provision(
        &cfg.vin,
        ControlCommand::Unlock,
        &mut proto_rng,
        PROVISION_TIME,
    )?;
    attacks::apply_defenses(&mut world, &cfg.defenses);
    let auth = world.run_round(&mut proto_rng, PROVISION_TIME, RoundOptions::default())?;
    if !auth.executed {
        return Err(Error::InvalidState(
            "initial authentication round did not execute".into(),
        ));
    }

    let mut sim = Simulation::new(cfg.sim_params(adaptive)?)?;
    let mut rows: Vec<EventRow> = Vec::with_capacity(cfg.duration_events as usize);
    let mut link_window: VecDeque<bool> = VecDeque::with_capacity(cfg.window_size);
    let mut total_ok = 0u64;
    let mut attack_outcomes = Vec::new();
    let mut attack_summaries = Vec::new();

    for event in 0..cfg.duration_events {
        for attack in cfg.attacks.iter().filter(|a| a.trigger_event == event) {
            // the adversary acts on a snapshot of the live deployment so
            // destructive defenses (revocation) cannot poison the rest of
            // the run
            let mut attack_world = world.clone();
            let mut attack_rng =
                ChaCha20Rng::seed_from_u64(cfg.seed ^ attack.trigger_event.wrapping_add(1));
            let outcome = attacks::run_attack_on_world(
                attack.kind,
                &mut attack_world,
                &mut attack_rng,
                &cfg.vin,
            )?;
            attack_summaries.push(AttackSummary {
                kind: outcome.kind.as_str().into(),
                trigger_event: attack.trigger_event,
                verdict: outcome.verdict_str().into(),
                detail: outcome.detail.clone(),
            });
            attack_outcomes.push(outcome);
        }

        let out = sim.step();
        if out.success {
            total_ok += 1;
        }
        if link_window.len() == cfg.window_size {
            link_window.pop_front();
        }
        link_window.push_back(out.success);
        let latest =
            link_window.iter().filter(|ok| **ok).count() as f64 / link_window.len() as f64;
        let total = total_ok as f64 / (event + 1) as f64;
        let map = sim.channel_map();
        rows.push(EventRow {
            event_index: event,
            time_slot: event as f64 / f64::from(cfg.events_per_second),
            channel: out.channel.value(),
            phy: out.phy.as_str(),
            txp_dbm: out.txp.dbm(),
            rssi_dbm: out.rssi_dbm,
            success: out.success,
            pdr_latest_overall: latest,
            pdr_total_overall: total,
            enabled_channel_count: map.enabled_count(),
            channel_map_hex: map.to_hex(),
        });
    }

    let summary = RunSummary {
        seed: cfg.seed,
        events: cfg.duration_events,
        adaptive,
        auth_round_executed: auth.executed,
        final_pdr_total: rows.last().map(|r| r.pdr_total_overall).unwrap_or(1.0),
        steady_state_pdr_latest: steady_state(&rows),
        phase_pdr_total: phase_totals(cfg, &rows),
        attacks: attack_summaries,
    };
    Ok(RunMetrics {
        rows,
        summary,
        attack_outcomes,
    })
}

/// Mean windowed delivery rate over the final 20% of the run.
fn steady_state(rows: &[EventRow]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    let tail = (rows.len() / 5).max(1);
    let slice = &rows[rows.len() - tail..];
    slice.iter().map(|r| r.pdr_latest_overall).sum::<f64>() / slice.len() as f64
}

/// Delivery rate per interferer-schedule segment. Segment boundaries are
/// every distinct interferer start/end event inside the run.
fn phase_totals(cfg: &ScenarioConfig, rows: &[EventRow]) -> Vec<f64> {
    let mut marks: Vec<u64> = cfg
        .interferers
        .iter()
        .flat_map(|i| {
            [
                i.start_event.unwrap_or(0),
                i.end_event.unwrap_or(cfg.duration_events),
            ]
        })
        .filter(|m| *m > 0 && *m < cfg.duration_events)
        .collect();
    marks.sort_unstable();
    marks.dedup();
    marks.push(cfg.duration_events);

    let mut totals = Vec::with_capacity(marks.len());
    let mut start = 0u64;
    for end in marks {
        let slice = &rows[start as usize..end as usize];
        if !slice.is_empty() {
            let ok = slice.iter().filter(|r| r.success).count();
            totals.push(ok as f64 / slice.len() as f64);
        }
        start = end;
    }
    totals
}

/// Render the run as CSV: the documented header, one row per event, and a
/// `#`-prefixed summary footer.
pub fn to_csv_string(metrics: &RunMetrics) -> String {
    let mut out = String::with_capacity(metrics.rows.len() * 72 + 512);
    out.push_str(
        "event_index,time_slot,channel,phy,txp_dbm,rssi_dbm,success,\
         pdr_latest_overall,pdr_total_overall,enabled_channel_count,channel_map_hex\n",
    );
    for r in &metrics.rows {
        let _ = writeln!(
            out,
            "{},{:.3},{},{},{},{:.2},{},{:.6},{:.6},{},{}",
            r.event_index,
            r.time_slot,
            r.channel,
            r.phy,
            r.txp_dbm,
            r.rssi_dbm,
            u8::from(r.success),
            r.pdr_latest_overall,
            r.pdr_total_overall,
            r.enabled_channel_count,
            r.channel_map_hex,
        );
    }
    let s = &metrics.summary;
    let _ = writeln!(out, "# seed={}", s.seed);
    let _ = writeln!(out, "# events={}", s.events);
    let _ = writeln!(out, "# adaptive={}", s.adaptive);
    let _ = writeln!(out, "# auth_round_executed={}", s.auth_round_executed);
    let _ = writeln!(out, "# final_pdr_total={:.6}", s.final_pdr_total);
    let _ = writeln!(
        out,
        "# steady_state_pdr_latest={:.6}",
        s.steady_state_pdr_latest
    );
    for (i, p) in s.phase_pdr_total.iter().enumerate() {
        let _ = writeln!(out, "# phase_{i}_pdr_total={p:.6}");
    }
    for a in &s.attacks {
        let _ = writeln!(
            out,
            "# attack_{}@{}={} ({})",
            a.kind, a.trigger_event, a.verdict, a.detail
        );
    }
    out
}

/// Write the CSV rendering to `path`.
pub fn emit_csv(metrics: &RunMetrics, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), to_csv_string(metrics))?;
    Ok(())
}

/// Write the run summary as pretty JSON to `path`.
pub fn emit_json(metrics: &RunMetrics, path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(&metrics.summary)
        .map_err(|e| Error::InvalidState(format!("summary serialization failed: {e}")))?;
    std::fs::write(path.as_ref(), json)?;
    Ok(())
}
