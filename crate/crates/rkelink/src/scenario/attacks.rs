//! Scripted adversaries for the four analyzed attacks.
//!
//! Each script drives a live protocol deployment with attacker-chosen
//! messages and reports where the attempt died (or that it went through).
//! The defense toggles exist so a suite can prove causality: with the
//! matching defense disabled, each attack must succeed.
//!
//! What "success" means depends on the attack's goal. The broadcast
//! injection attack targets the connection gate, so establishing a
//! connection is its success. The other three aim at command execution.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::authcore::{sym_decrypt, sym_encrypt};
use crate::protocol::{
    provision, AdvDecision, ControlCommand, FailReason, Message, RoundOptions, Sender, TraceEntry,
    World,
};
use crate::Result;

use super::config::{AttackKind, DefensesConfig, ScenarioConfig};
use super::PROVISION_TIME;

/// Where a rejected attack died.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectionPoint {
    /// The broadcast never produced a connection.
    AdvIgnored,
    /// The vehicle sent `VERIFY_FAILED` with this reason.
    VerifyFailed(FailReason),
    /// The control packet was rejected without execution.
    ControlRejected,
}

impl RejectionPoint {
    pub fn describe(&self) -> String {
        match self {
            RejectionPoint::AdvIgnored => "broadcast ignored at connection establishment".into(),
            RejectionPoint::VerifyFailed(reason) => format!("verify_failed: {reason}"),
            RejectionPoint::ControlRejected => "control packet rejected, no execution".into(),
        }
    }
}

/// Result of one scripted attack.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub kind: AttackKind,
    pub succeeded: bool,
    pub rejection: Option<RejectionPoint>,
    pub detail: String,
    pub transcript: Vec<TraceEntry>,
}

impl AttackOutcome {
    pub fn verdict_str(&self) -> &'static str {
        if self.succeeded {
            "succeeded"
        } else {
            "rejected"
        }
    }

    /// True when the verdict matches what the enabled defenses predict:
    /// rejected while the matching defense is up, succeeded once it is
    /// disabled.
    pub fn matches_expectation(&self, defenses: &DefensesConfig) -> bool {
        let defense_up = match self.kind {
            AttackKind::ImpersonateInject => defenses.whitelist,
            AttackKind::ImpersonateRevoked => defenses.revocation,
            AttackKind::ImpersonateStaleKey => defenses.rotation,
            AttackKind::ReplayControl => defenses.rotation,
        };
        self.succeeded != defense_up
    }
}

fn rejected(
    kind: AttackKind,
    at: RejectionPoint,
    transcript: Vec<TraceEntry>,
) -> AttackOutcome {
    AttackOutcome {
        kind,
        succeeded: false,
        detail: at.describe(),
        rejection: Some(at),
        transcript,
    }
}

fn succeeded(kind: AttackKind, detail: &str, transcript: Vec<TraceEntry>) -> AttackOutcome {
    AttackOutcome {
        kind,
        succeeded: true,
        rejection: None,
        detail: detail.into(),
        transcript,
    }
}

fn log(transcript: &mut Vec<TraceEntry>, round: u32, sender: Sender, msg: &Message) {
    transcript.push(TraceEntry {
        round,
        sender,
        kind: msg.kind(),
        payload_hex: msg.payload_hex(),
    });
}

pub(super) fn apply_defenses(world: &mut World, defenses: &DefensesConfig) {
    world.vehicle.set_whitelist_enabled(defenses.whitelist);
    world.vehicle.set_rotation_enabled(defenses.rotation);
    world.fob.set_rotation_enabled(defenses.rotation);
    world.system.set_revocation_enabled(defenses.revocation);
    world.system.set_key_update_enabled(defenses.rotation);
}

/// Run one scripted attack against a fresh deployment derived from
/// `seed`.
pub fn run_attack(
    kind: AttackKind,
    seed: u64,
    vin: &str,
    defenses: &DefensesConfig,
) -> Result<AttackOutcome> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut world = provision(vin, ControlCommand::Unlock, &mut rng, PROVISION_TIME)?;
    apply_defenses(&mut world, defenses);
    run_attack_on_world(kind, &mut world, &mut rng, vin)
}

/// Run one scripted attack against an existing deployment.
pub fn run_attack_on_world(
    kind: AttackKind,
    world: &mut World,
    rng: &mut ChaCha20Rng,
    vin: &str,
) -> Result<AttackOutcome> {
    match kind {
        AttackKind::ImpersonateInject => attack_inject(world, rng),
        AttackKind::ImpersonateRevoked => attack_revoked(world, rng),
        AttackKind::ImpersonateStaleKey => attack_stale_key(world, rng, vin),
        AttackKind::ReplayControl => attack_replay(world, rng),
    }
}

/// Broadcast-content injection: the attacker copies another fob's
/// broadcast and transmits it, hoping the vehicle connects.
fn attack_inject(world: &mut World, rng: &mut ChaCha20Rng) -> Result<AttackOutcome> {
    let kind = AttackKind::ImpersonateInject;
    let mut transcript = Vec::new();
    let round = world.round + 1;

    // the copied broadcast belongs to some other deployment's fob, so its
    // identity is not on this vehicle's whitelist
    let mut foreign = provision("WAUZZZ8V5KA000001", ControlCommand::Unlock, rng, PROVISION_TIME)?;
    let copied_adv = foreign.fob.make_adv()?;
    log(&mut transcript, round, Sender::Attacker, &copied_adv);

    let decision = world.vehicle.on_adv(&copied_adv);
    world.vehicle.reset_round();
    if decision == AdvDecision::Connect {
        Ok(succeeded(kind, "connection established", transcript))
    } else {
        Ok(rejected(kind, RejectionPoint::AdvIgnored, transcript))
    }
}

/// Drive an attacker-held fob through a full round against the live
/// vehicle. Returns the outcome judged on command execution.
fn drive_fob_round(
    kind: AttackKind,
    world: &mut World,
    fob: &mut crate::protocol::FobState,
    rng: &mut ChaCha20Rng,
    transcript: &mut Vec<TraceEntry>,
) -> Result<AttackOutcome> {
    let round = world.round + 1;
    let adv = fob.make_adv()?;
    log(transcript, round, Sender::Attacker, &adv);
    if world.vehicle.on_adv(&adv) == AdvDecision::Ignore {
        world.vehicle.reset_round();
        return Ok(rejected(kind, RejectionPoint::AdvIgnored, transcript.clone()));
    }
    let challenge = world.vehicle.make_challenge(rng)?;
    log(transcript, round, Sender::Vehicle, &challenge);
    let response = fob.on_challenge(&challenge).expect("advertising fob answers");
    log(transcript, round, Sender::Attacker, &response);
    let verdict = world
        .vehicle
        .on_auth_response(&world.system, &response, PROVISION_TIME, rng)
        .expect("challenged vehicle answers");
    log(transcript, round, Sender::Vehicle, &verdict);
    if let Message::VerifyFailed { reason } = verdict {
        world.vehicle.reset_round();
        return Ok(rejected(
            kind,
            RejectionPoint::VerifyFailed(reason),
            transcript.clone(),
        ));
    }
    let control = fob.on_verdict(&verdict).expect("verified fob sends control");
    log(transcript, round, Sender::Attacker, &control);
    let (executed, ack) = world.vehicle.on_control(&control);
    if let Some(ack) = &ack {
        log(transcript, round, Sender::Vehicle, ack);
    }
    world.vehicle.reset_round();
    if executed {
        Ok(succeeded(kind, "command executed", transcript.clone()))
    } else {
        Ok(rejected(
            kind,
            RejectionPoint::ControlRejected,
            transcript.clone(),
        ))
    }
}

/// Stolen-fob attack against a revoked certificate: the fob still holds
/// valid key material, but its certificate serial is on the revocation
/// list.
fn attack_revoked(world: &mut World, rng: &mut ChaCha20Rng) -> Result<AttackOutcome> {
    let kind = AttackKind::ImpersonateRevoked;
    let mut transcript = Vec::new();

    // the attacker walks off with the fob; the owner reports the loss and
    // the certificate is revoked, with no wider credential update
    let mut stolen = world.fob.clone();
    stolen.reset_round();
    world.system.revoke_current();

    drive_fob_round(kind, world, &mut stolen, rng, &mut transcript)
}

/// Stale-session-key attack after a credential update: the attacker holds
/// the pre-update session key and the new public certificate, and replays
/// the legitimate fob's current broadcast to get connected.
fn attack_stale_key(
    world: &mut World,
    rng: &mut ChaCha20Rng,
    vin: &str,
) -> Result<AttackOutcome> {
    let kind = AttackKind::ImpersonateStaleKey;
    let mut transcript = Vec::new();

    // a legitimate round settles both sides on a shared session key; the
    // attacker extracts it from the fob's storage right before the update
    let report = world.run_round(rng, PROVISION_TIME, RoundOptions::default())?;
    debug_assert!(report.executed);
    let stale_key = *world.fob.session_key();

    // the owner triggers a credential update inside the authenticated
    // session; the attacker also installs the new public certificate
    world.vehicle.phase = crate::protocol::VehiclePhase::Done;
    let (new_creds, update) = world
        .system
        .issue_update(&mut world.vehicle, vin, rng, PROVISION_TIME)?;
    world.vehicle.reset_round();
    world.fob.apply_cred_update(&update)?;
    let round = world.round + 1;

    // the new fob broadcasts in the clear; the attacker records and
    // replays it to pass the connection gate
    let replayed_adv = world.fob.make_adv()?;
    world.fob.reset_round();
    log(&mut transcript, round, Sender::Attacker, &replayed_adv);
    if world.vehicle.on_adv(&replayed_adv) == AdvDecision::Ignore {
        world.vehicle.reset_round();
        return Ok(rejected(kind, RejectionPoint::AdvIgnored, transcript));
    }

    let challenge = world.vehicle.make_challenge(rng)?;
    log(&mut transcript, round, Sender::Vehicle, &challenge);
    let Message::AuthRequest { auth_data1, .. } = &challenge else {
        unreachable!("make_challenge yields AUTH_REQUEST");
    };
    // decrypt under the outdated key; with the key update in force this
    // yields garbage
    let decrypted = sym_decrypt(&stale_key, auth_data1)?;
    let mut rand1_echo = [0u8; 16];
    rand1_echo.copy_from_slice(&decrypted);
    let response = Message::AuthResponse {
        cert: new_creds.cert.encode(),
        rand1_echo,
    };
    log(&mut transcript, round, Sender::Attacker, &response);

    let verdict = world
        .vehicle
        .on_auth_response(&world.system, &response, PROVISION_TIME, rng)
        .expect("challenged vehicle answers");
    log(&mut transcript, round, Sender::Vehicle, &verdict);
    if let Message::VerifyFailed { reason } = verdict {
        world.vehicle.reset_round();
        return Ok(rejected(
            kind,
            RejectionPoint::VerifyFailed(reason),
            transcript,
        ));
    }

    // key update disabled: the stale key still works end to end
    let Message::VerifyOk { auth_data2 } = &verdict else {
        unreachable!("non-failure verdict is VERIFY_OK");
    };
    let rand2 = sym_decrypt(&stale_key, auth_data2)?;
    let mut plaintext = [0u8; 32];
    plaintext[..16].copy_from_slice(&rand2);
    plaintext[16..].copy_from_slice(&ControlCommand::Unlock.encode());
    let ct = sym_encrypt(&stale_key, &plaintext)?;
    let mut ciphertext = [0u8; 32];
    ciphertext.copy_from_slice(&ct);
    let control = Message::ControlData { ciphertext };
    log(&mut transcript, round, Sender::Attacker, &control);
    let (executed, _) = world.vehicle.on_control(&control);
    world.vehicle.reset_round();
    if executed {
        Ok(succeeded(kind, "command executed", transcript))
    } else {
        Ok(rejected(kind, RejectionPoint::ControlRejected, transcript))
    }
}

/// Replay a recorded control packet into the following round.
fn attack_replay(world: &mut World, rng: &mut ChaCha20Rng) -> Result<AttackOutcome> {
    let kind = AttackKind::ReplayControl;
    let mut transcript = Vec::new();

    // round N: legitimate, recorded by the attacker
    let report = world.run_round(rng, PROVISION_TIME, RoundOptions::default())?;
    for entry in &report.trace {
        transcript.push(entry.clone());
    }
    if !report.executed {
        return Ok(rejected(kind, RejectionPoint::ControlRejected, transcript));
    }
    let recorded_control = report
        .messages
        .iter()
        .find(|(_, m)| matches!(m, Message::ControlData { .. }))
        .map(|(_, m)| m.clone())
        .expect("executed round contains control data");

    // round N+1: the legitimate fob authenticates again; the attacker
    // races the fob's control packet with the recording
    let round = world.round + 1;
    let adv = world.fob.make_adv()?;
    log(&mut transcript, round, Sender::Fob, &adv);
    world.vehicle.on_adv(&adv);
    let challenge = world.vehicle.make_challenge(rng)?;
    log(&mut transcript, round, Sender::Vehicle, &challenge);
    let response = world.fob.on_challenge(&challenge).expect("fob answers");
    log(&mut transcript, round, Sender::Fob, &response);
    let verdict = world
        .vehicle
        .on_auth_response(&world.system, &response, PROVISION_TIME, rng)
        .expect("vehicle answers");
    log(&mut transcript, round, Sender::Vehicle, &verdict);
    debug_assert!(matches!(verdict, Message::VerifyOk { .. }));

    log(&mut transcript, round, Sender::Attacker, &recorded_control);
    let (executed, _) = world.vehicle.on_control(&recorded_control);
    world.vehicle.reset_round();
    world.fob.reset_round();
    if executed {
        Ok(succeeded(kind, "replayed command executed", transcript))
    } else {
        Ok(rejected(kind, RejectionPoint::ControlRejected, transcript))
    }
}

/// Run the configured attack list (or all four when none are configured)
/// against fresh per-attack deployments.
pub fn run_attack_suite(cfg: &ScenarioConfig) -> Result<Vec<AttackOutcome>> {
    cfg.validate()?;
    let kinds: Vec<AttackKind> = if cfg.attacks.is_empty() {
        AttackKind::ALL.to_vec()
    } else {
        cfg.attacks.iter().map(|a| a.kind).collect()
    };
    kinds
        .iter()
        .enumerate()
        .map(|(i, kind)| {
            let attack_seed = cfg.seed ^ (i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            run_attack(*kind, attack_seed, &cfg.vin, &cfg.defenses)
        })
        .collect()
}
