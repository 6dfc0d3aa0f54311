//! Fob–vehicle authentication protocol.
//!
//! Three parties run the round: the key fob, the vehicle RF terminal, and
//! the vehicle system (the certificate authority side). A round is one
//! linear pass:
//!
//! 1. The fob broadcasts its pseudo-identity encrypted under the shared
//!    session key (`Adv`).
//! 2. The vehicle recomputes the expected ciphertext for each whitelisted
//!    identity and connects only on a match.
//! 3. The vehicle challenges with an encrypted random number `rand1`.
//! 4. The fob echoes the decrypted `rand1` alongside its certificate.
//! 5. The vehicle checks the echo, has the vehicle system verify the
//!    certificate chain against the revocation list, cross-checks the
//!    certificate subject against the matched whitelist entry, and on
//!    success sends a second encrypted random number `rand2`.
//! 6. The fob answers with the encrypted `rand2 || control` packet.
//! 7. The vehicle executes only when `rand2` echoes correctly, then both
//!    sides rotate the session key to `rand2`.
//!
//! Verification failures carry one of two reason strings, `"error rand1"`
//! or `"crt error"`. State machines are total: a message of an unexpected
//! kind, or one arriving in the wrong phase, is ignored without a state
//! change, since the simulator injects adversarial traffic.
//!
//! The vehicle retains the previous session key and retries the broadcast
//! match with it, falling back to it for that session. That recovers the
//! one-round desynchronization caused by a lost `control_ok` (the fob
//! missed the rotation). A credential update clears the previous key: the
//! old key may be in an attacker's hands, which is the reason the update
//! happened in the first place.

use std::fmt;

use rand_core::{CryptoRng, RngCore};

use crate::authcore::{
    gen_intermediate_ca, gen_root_ca, issue_fob_credentials, rotate_session_key, sym_decrypt,
    sym_decrypt_padded, sym_encrypt, sym_encrypt_padded, verify_chain, CertAuthority, Certificate,
    CredentialSet, PseudoId, RevocationList, SigningKeypair, SymmetricKey, CERT_LEN,
};
use crate::{Error, Result};

/// Reason carried by a `VERIFY_FAILED` message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailReason {
    /// The challenge echo did not match the issued `rand1`.
    ErrorRand1,
    /// Certificate malformed, invalid, revoked, expired, or naming the
    /// wrong subject.
    CrtError,
}

impl FailReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailReason::ErrorRand1 => "error rand1",
            FailReason::CrtError => "crt error",
        }
    }

    fn code(&self) -> u8 {
        match self {
            FailReason::ErrorRand1 => 1,
            FailReason::CrtError => 2,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(FailReason::ErrorRand1),
            2 => Ok(FailReason::CrtError),
            other => Err(Error::Decode(format!("unknown failure reason code {other}"))),
        }
    }
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Control command carried in the final encrypted packet, padded to one
/// cipher block so the control payload is always exactly two blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlCommand {
    Lock,
    Unlock,
    Trunk,
}

impl ControlCommand {
    pub fn encode(self) -> [u8; 16] {
        let mut out = [0u8; 16];
        out[0] = match self {
            ControlCommand::Lock => 1,
            ControlCommand::Unlock => 2,
            ControlCommand::Trunk => 3,
        };
        out
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != 16 || bytes[1..].iter().any(|b| *b != 0) {
            return None;
        }
        match bytes[0] {
            1 => Some(ControlCommand::Lock),
            2 => Some(ControlCommand::Unlock),
            3 => Some(ControlCommand::Trunk),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ControlCommand::Lock => "lock",
            ControlCommand::Unlock => "unlock",
            ControlCommand::Trunk => "trunk",
        }
    }
}

/// Protocol message. Payload widths are fixed per kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    /// Broadcast: pseudo-identity encrypted under the session key.
    Adv { ciphertext: [u8; 16] },
    /// Challenge: encrypted `rand1` plus the certificate request flag.
    AuthRequest {
        auth_data1: [u8; 16],
        cert_request: bool,
    },
    /// Response: encoded fob certificate and the plaintext `rand1` echo.
    AuthResponse {
        cert: Vec<u8>,
        rand1_echo: [u8; 16],
    },
    /// Success verdict carrying the encrypted `rand2`.
    VerifyOk { auth_data2: [u8; 16] },
    /// Failure verdict with its reason.
    VerifyFailed { reason: FailReason },
    /// Encrypted `rand2 || control`, two cipher blocks.
    ControlData { ciphertext: [u8; 32] },
    /// Execution acknowledgement.
    ControlOk,
    /// Encrypted replacement credential material.
    CredUpdate { ciphertext: Vec<u8> },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Adv { .. } => "ADV",
            Message::AuthRequest { .. } => "AUTH_REQUEST",
            Message::AuthResponse { .. } => "AUTH_RESPONSE",
            Message::VerifyOk { .. } => "VERIFY_OK",
            Message::VerifyFailed { .. } => "VERIFY_FAILED",
            Message::ControlData { .. } => "CONTROL_DATA",
            Message::ControlOk => "CONTROL_OK",
            Message::CredUpdate { .. } => "CRED_UPDATE",
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Message::Adv { .. } => 1,
            Message::AuthRequest { .. } => 2,
            Message::AuthResponse { .. } => 3,
            Message::VerifyOk { .. } => 4,
            Message::VerifyFailed { .. } => 5,
            Message::ControlData { .. } => 6,
            Message::ControlOk => 7,
            Message::CredUpdate { .. } => 8,
        }
    }

    /// Wire form: one kind-tag byte followed by the fixed-width payload.
    /// `CRED_UPDATE` carries a two-byte big-endian length prefix since its
    /// ciphertext length depends on the credential encoding.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.tag()];
        match self {
            Message::Adv { ciphertext } => out.extend_from_slice(ciphertext),
            Message::AuthRequest {
                auth_data1,
                cert_request,
            } => {
                out.extend_from_slice(auth_data1);
                out.push(u8::from(*cert_request));
            }
            Message::AuthResponse { cert, rand1_echo } => {
                out.extend_from_slice(cert);
                out.extend_from_slice(rand1_echo);
            }
            Message::VerifyOk { auth_data2 } => out.extend_from_slice(auth_data2),
            Message::VerifyFailed { reason } => out.push(reason.code()),
            Message::ControlData { ciphertext } => out.extend_from_slice(ciphertext),
            Message::ControlOk => {}
            Message::CredUpdate { ciphertext } => {
                out.extend_from_slice(&(ciphertext.len() as u16).to_be_bytes());
                out.extend_from_slice(ciphertext);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let (tag, payload) = bytes
            .split_first()
            .ok_or_else(|| Error::Decode("empty message".into()))?;
        let fixed = |len: usize| -> Result<&[u8]> {
            if payload.len() == len {
                Ok(payload)
            } else {
                Err(Error::Decode(format!(
                    "kind {tag} expects {len} payload bytes, got {}",
                    payload.len()
                )))
            }
        };
        match tag {
            1 => {
                let mut ciphertext = [0u8; 16];
                ciphertext.copy_from_slice(fixed(16)?);
                Ok(Message::Adv { ciphertext })
            }
            2 => {
                let p = fixed(17)?;
                let mut auth_data1 = [0u8; 16];
                auth_data1.copy_from_slice(&p[..16]);
                Ok(Message::AuthRequest {
                    auth_data1,
                    cert_request: p[16] != 0,
                })
            }
            3 => {
                let p = fixed(CERT_LEN + 16)?;
                let mut rand1_echo = [0u8; 16];
                rand1_echo.copy_from_slice(&p[CERT_LEN..]);
                Ok(Message::AuthResponse {
                    cert: p[..CERT_LEN].to_vec(),
                    rand1_echo,
                })
            }
            4 => {
                let mut auth_data2 = [0u8; 16];
                auth_data2.copy_from_slice(fixed(16)?);
                Ok(Message::VerifyOk { auth_data2 })
            }
            5 => Ok(Message::VerifyFailed {
                reason: FailReason::from_code(fixed(1)?[0])?,
            }),
            6 => {
                let mut ciphertext = [0u8; 32];
                ciphertext.copy_from_slice(fixed(32)?);
                Ok(Message::ControlData { ciphertext })
            }
            7 => {
                fixed(0)?;
                Ok(Message::ControlOk)
            }
            8 => {
                if payload.len() < 2 {
                    return Err(Error::Decode("truncated CRED_UPDATE".into()));
                }
                let len = u16::from_be_bytes([payload[0], payload[1]]) as usize;
                if payload.len() != 2 + len {
                    return Err(Error::Decode("CRED_UPDATE length mismatch".into()));
                }
                Ok(Message::CredUpdate {
                    ciphertext: payload[2..].to_vec(),
                })
            }
            other => Err(Error::Decode(format!("unknown message kind {other}"))),
        }
    }

    pub fn payload_hex(&self) -> String {
        hex::encode(&self.encode()[1..])
    }
}

/// A message as logged in a round transcript.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub round: u32,
    pub sender: Sender,
    pub kind: &'static str,
    pub payload_hex: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sender {
    Fob,
    Vehicle,
    System,
    Attacker,
}

impl fmt::Display for Sender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sender::Fob => "fob",
            Sender::Vehicle => "vehicle",
            Sender::System => "system",
            Sender::Attacker => "attacker",
        })
    }
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "round={} sender={} kind={} payload={}",
            self.round, self.sender, self.kind, self.payload_hex
        )
    }
}

// ---------------------------------------------------------------------------
// Key fob
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FobPhase {
    Idle,
    Advertising,
    AwaitChallenge,
    AwaitVerdict,
    AwaitControlAck,
    Done,
    Sleep,
}

/// Key fob state machine.
#[derive(Debug, Clone)]
pub struct FobState {
    pub phase: FobPhase,
    creds: CredentialSet,
    pending_rand2: Option<[u8; 16]>,
    control_cmd: ControlCommand,
    rotation_enabled: bool,
}

impl FobState {
    pub fn new(creds: CredentialSet, control_cmd: ControlCommand) -> Self {
        Self {
            phase: FobPhase::Idle,
            creds,
            pending_rand2: None,
            control_cmd,
            rotation_enabled: true,
        }
    }

    pub fn credentials(&self) -> &CredentialSet {
        &self.creds
    }

    pub fn session_key(&self) -> &SymmetricKey {
        &self.creds.session_key
    }

    pub fn control_command(&self) -> ControlCommand {
        self.control_cmd
    }

    /// Defense toggle for experiments: when off, the fob keeps its session
    /// key instead of rotating to `rand2` after a completed round.
    pub fn set_rotation_enabled(&mut self, enabled: bool) {
        self.rotation_enabled = enabled;
    }

    /// Broadcast the encrypted pseudo-identity.
    pub fn make_adv(&mut self) -> Result<Message> {
        if self.phase != FobPhase::Idle {
            return Err(Error::InvalidState(format!(
                "fob cannot advertise in phase {:?}",
                self.phase
            )));
        }
        let ciphertext = encrypt_block16(&self.creds.session_key, self.creds.pid.as_bytes());
        self.phase = FobPhase::Advertising;
        Ok(Message::Adv { ciphertext })
    }

    /// Answer the challenge with the certificate and the decrypted
    /// `rand1`. A stale session key yields a garbage echo rather than an
    /// error; the vehicle's comparison is what catches it.
    pub fn on_challenge(&mut self, msg: &Message) -> Option<Message> {
        if !matches!(self.phase, FobPhase::Advertising | FobPhase::AwaitChallenge) {
            return None;
        }
        let Message::AuthRequest { auth_data1, .. } = msg else {
            return None;
        };
        let rand1_echo = decrypt_block16(&self.creds.session_key, auth_data1);
        self.phase = FobPhase::AwaitVerdict;
        Some(Message::AuthResponse {
            cert: self.creds.cert.encode(),
            rand1_echo,
        })
    }

    /// Act on the verdict: sleep on failure, send the encrypted
    /// `rand2 || control` packet on success.
    pub fn on_verdict(&mut self, msg: &Message) -> Option<Message> {
        if self.phase != FobPhase::AwaitVerdict {
            return None;
        }
        match msg {
            Message::VerifyFailed { .. } => {
                self.phase = FobPhase::Sleep;
                None
            }
            Message::VerifyOk { auth_data2 } => {
                let rand2 = decrypt_block16(&self.creds.session_key, auth_data2);
                let mut plaintext = [0u8; 32];
                plaintext[..16].copy_from_slice(&rand2);
                plaintext[16..].copy_from_slice(&self.control_cmd.encode());
                let ct = sym_encrypt(&self.creds.session_key, &plaintext)
                    .expect("32 bytes is block aligned");
                let mut ciphertext = [0u8; 32];
                ciphertext.copy_from_slice(&ct);
                self.pending_rand2 = Some(rand2);
                self.phase = FobPhase::AwaitControlAck;
                Some(Message::ControlData { ciphertext })
            }
            _ => None,
        }
    }

    /// Commit the session-key rotation once the command is acknowledged.
    pub fn on_control_ok(&mut self, msg: &Message) {
        if self.phase != FobPhase::AwaitControlAck || !matches!(msg, Message::ControlOk) {
            return;
        }
        if let Some(rand2) = self.pending_rand2.take() {
            if self.rotation_enabled {
                self.creds.session_key = rotate_session_key(&self.creds.session_key, rand2);
            }
        }
        self.phase = FobPhase::Done;
    }

    /// Install replacement credentials from an encrypted update. Fails
    /// with a decrypt error when this fob does not hold the session key
    /// the update was encrypted under.
    pub fn apply_cred_update(&mut self, msg: &Message) -> Result<()> {
        let Message::CredUpdate { ciphertext } = msg else {
            return Err(Error::InvalidArgument("not a CRED_UPDATE message".into()));
        };
        let plaintext = sym_decrypt_padded(&self.creds.session_key, ciphertext)?;
        self.creds = decode_credentials(&plaintext)?;
        self.pending_rand2 = None;
        self.phase = FobPhase::Idle;
        Ok(())
    }

    /// Return to idle for the next wake-up.
    pub fn reset_round(&mut self) {
        self.pending_rand2 = None;
        self.phase = FobPhase::Idle;
    }
}

// ---------------------------------------------------------------------------
// Vehicle RF terminal
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehiclePhase {
    Scanning,
    ChallengeSent,
    AwaitCertVerdict,
    Authed,
    Done,
    Rejected,
}

/// What the vehicle decided about a broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvDecision {
    Connect,
    Ignore,
}

/// Vehicle RF terminal state machine.
#[derive(Debug, Clone)]
pub struct VehicleState {
    pub phase: VehiclePhase,
    whitelist: Vec<PseudoId>,
    session_key: SymmetricKey,
    prev_session_key: Option<SymmetricKey>,
    /// This session matched under the previous key (the fob missed a
    /// rotation) and runs on it.
    active_prev: bool,
    matched_pid: Option<PseudoId>,
    rand1: Option<[u8; 16]>,
    rand2: Option<[u8; 16]>,
    executed: Option<ControlCommand>,
    whitelist_enabled: bool,
    rotation_enabled: bool,
}

impl VehicleState {
    pub fn new(whitelist: Vec<PseudoId>, session_key: SymmetricKey) -> Result<Self> {
        if whitelist.is_empty() {
            return Err(Error::InvalidArgument("whitelist must be non-empty".into()));
        }
        Ok(Self {
            phase: VehiclePhase::Scanning,
            whitelist,
            session_key,
            prev_session_key: None,
            active_prev: false,
            matched_pid: None,
            rand1: None,
            rand2: None,
            executed: None,
            whitelist_enabled: true,
            rotation_enabled: true,
        })
    }

    pub fn session_key(&self) -> &SymmetricKey {
        &self.session_key
    }

    pub fn whitelist(&self) -> &[PseudoId] {
        &self.whitelist
    }

    /// Command executed by the most recent successful round.
    pub fn last_executed(&self) -> Option<ControlCommand> {
        self.executed
    }

    /// Defense toggle: when off, any broadcast connects.
    pub fn set_whitelist_enabled(&mut self, enabled: bool) {
        self.whitelist_enabled = enabled;
    }

    /// Defense toggle: when off, the control packet's `rand2` echo is not
    /// compared and the session key is never rotated.
    pub fn set_rotation_enabled(&mut self, enabled: bool) {
        self.rotation_enabled = enabled;
    }

    /// Key the current session encrypts under.
    fn active_key(&self) -> SymmetricKey {
        if self.active_prev {
            self.prev_session_key
                .expect("active_prev implies a previous key")
        } else {
            self.session_key
        }
    }

    /// Match a broadcast against the whitelist by recomputing the expected
    /// ciphertext for every whitelisted identity, first under the current
    /// session key, then under the retained previous key.
    pub fn on_adv(&mut self, msg: &Message) -> AdvDecision {
        if self.phase != VehiclePhase::Scanning {
            return AdvDecision::Ignore;
        }
        let Message::Adv { ciphertext } = msg else {
            return AdvDecision::Ignore;
        };
        if !self.whitelist_enabled {
            // experiment mode: accept any broadcaster, attribute the
            // session to the first whitelist entry
            self.matched_pid = Some(self.whitelist[0]);
            self.active_prev = false;
            return AdvDecision::Connect;
        }
        for pid in &self.whitelist {
            if encrypt_block16(&self.session_key, pid.as_bytes()) == *ciphertext {
                self.matched_pid = Some(*pid);
                self.active_prev = false;
                return AdvDecision::Connect;
            }
        }
        if let Some(prev) = self.prev_session_key {
            for pid in &self.whitelist {
                if encrypt_block16(&prev, pid.as_bytes()) == *ciphertext {
                    self.matched_pid = Some(*pid);
                    self.active_prev = true;
                    return AdvDecision::Connect;
                }
            }
        }
        AdvDecision::Ignore
    }

    /// Issue the `rand1` challenge for a connected session.
    pub fn make_challenge(&mut self, rng: &mut (impl RngCore + CryptoRng)) -> Result<Message> {
        if self.phase != VehiclePhase::Scanning || self.matched_pid.is_none() {
            return Err(Error::InvalidState(
                "challenge requires an established connection".into(),
            ));
        }
        let mut rand1 = [0u8; 16];
        rng.fill_bytes(&mut rand1);
        let auth_data1 = encrypt_block16(&self.active_key(), &rand1);
        self.rand1 = Some(rand1);
        self.phase = VehiclePhase::ChallengeSent;
        Ok(Message::AuthRequest {
            auth_data1,
            cert_request: true,
        })
    }

    /// Judge the authentication response: `rand1` echo first, then the
    /// certificate chain through the vehicle system, then the subject
    /// cross-check against the matched whitelist entry.
    pub fn on_auth_response(
        &mut self,
        system: &SystemState,
        msg: &Message,
        now: u64,
        rng: &mut (impl RngCore + CryptoRng),
    ) -> Option<Message> {
        if self.phase != VehiclePhase::ChallengeSent {
            return None;
        }
        let Message::AuthResponse { cert, rand1_echo } = msg else {
            return None;
        };
        let rand1 = self.rand1?;
        if *rand1_echo != rand1 {
            self.phase = VehiclePhase::Rejected;
            return Some(Message::VerifyFailed {
                reason: FailReason::ErrorRand1,
            });
        }
        self.phase = VehiclePhase::AwaitCertVerdict;
        let cert_ok = match Certificate::decode(cert) {
            Ok(decoded) => {
                system.verify_fob_cert(&decoded, now)
                    && Some(PseudoId::new(decoded.subject_id)) == self.matched_pid
            }
            Err(_) => false,
        };
        if !cert_ok {
            self.phase = VehiclePhase::Rejected;
            return Some(Message::VerifyFailed {
                reason: FailReason::CrtError,
            });
        }
        let mut rand2 = [0u8; 16];
        rng.fill_bytes(&mut rand2);
        let auth_data2 = encrypt_block16(&self.active_key(), &rand2);
        self.rand2 = Some(rand2);
        self.phase = VehiclePhase::Authed;
        Some(Message::VerifyOk { auth_data2 })
    }

    /// Process the encrypted control packet. The command executes only
    /// when the decrypted `rand2` matches this session's `rand2`; on
    /// execution the session key rotates to `rand2` and the outgoing key
    /// is retained for the desync retry.
    pub fn on_control(&mut self, msg: &Message) -> (bool, Option<Message>) {
        if self.phase != VehiclePhase::Authed {
            return (false, None);
        }
        let Message::ControlData { ciphertext } = msg else {
            return (false, None);
        };
        let Some(rand2) = self.rand2 else {
            return (false, None);
        };
        let plaintext = sym_decrypt(&self.active_key(), ciphertext).expect("32 bytes aligned");
        let mut rand2_echo = [0u8; 16];
        rand2_echo.copy_from_slice(&plaintext[..16]);
        if self.rotation_enabled {
            if rand2_echo != rand2 {
                self.phase = VehiclePhase::Rejected;
                return (false, None);
            }
            self.executed = ControlCommand::decode(&plaintext[16..]);
            self.prev_session_key = Some(self.active_key());
            self.session_key = rotate_session_key(&self.session_key, rand2);
            self.active_prev = false;
        } else {
            // defense disabled: execute whatever decrypts, never rotate
            self.executed = ControlCommand::decode(&plaintext[16..]);
        }
        self.phase = VehiclePhase::Done;
        (true, Some(Message::ControlOk))
    }

    /// Return to scanning for the next round.
    pub fn reset_round(&mut self) {
        self.matched_pid = None;
        self.rand1 = None;
        self.rand2 = None;
        self.active_prev = false;
        self.phase = VehiclePhase::Scanning;
    }

    fn apply_update(&mut self, creds: &CredentialSet) {
        self.whitelist = vec![creds.pid];
        self.session_key = creds.session_key;
        self.prev_session_key = None;
        self.active_prev = false;
    }
}

// ---------------------------------------------------------------------------
// Vehicle system (intermediate CA side)
// ---------------------------------------------------------------------------

/// Vehicle system: the intermediate authority, the root certificate it
/// chains to, and the revocation list.
#[derive(Debug, Clone)]
pub struct SystemState {
    intermediate: CertAuthority,
    root_cert: Certificate,
    crl: RevocationList,
    current_fob_serial: Option<u64>,
    revocation_enabled: bool,
    key_update_enabled: bool,
}

impl SystemState {
    pub fn new(root: &mut CertAuthority, rng: &mut (impl RngCore + CryptoRng), now: u64) -> Self {
        let intermediate = gen_intermediate_ca(root, rng, now);
        Self {
            intermediate,
            root_cert: root.cert().clone(),
            crl: RevocationList::new(),
            current_fob_serial: None,
            revocation_enabled: true,
            key_update_enabled: true,
        }
    }

    pub fn crl(&self) -> &RevocationList {
        &self.crl
    }

    pub fn intermediate_cert(&self) -> &Certificate {
        self.intermediate.cert()
    }

    pub fn root_cert(&self) -> &Certificate {
        &self.root_cert
    }

    /// Defense toggle: when off, chain verification runs against an empty
    /// revocation list.
    pub fn set_revocation_enabled(&mut self, enabled: bool) {
        self.revocation_enabled = enabled;
    }

    /// Defense toggle: when off, a credential update re-issues identity
    /// and certificate but leaves the symmetric session key unchanged.
    pub fn set_key_update_enabled(&mut self, enabled: bool) {
        self.key_update_enabled = enabled;
    }

    /// Issue initial fob credentials and remember the serial for later
    /// revocation.
    pub fn provision_fob(
        &mut self,
        vin: &str,
        rng: &mut (impl RngCore + CryptoRng),
        now: u64,
    ) -> Result<CredentialSet> {
        let (creds, _rand_ca) = issue_fob_credentials(&mut self.intermediate, vin, rng, now)?;
        self.current_fob_serial = Some(creds.cert.serial);
        Ok(creds)
    }

    /// Revoke the currently issued fob certificate.
    pub fn revoke_current(&mut self) {
        if let Some(serial) = self.current_fob_serial {
            self.crl.revoke(serial);
        }
    }

    /// Full chain verification of a fob certificate at time `now`.
    pub fn verify_fob_cert(&self, cert: &Certificate, now: u64) -> bool {
        let chain = [self.intermediate.cert().clone(), self.root_cert.clone()];
        if self.revocation_enabled {
            verify_chain(cert, &chain, &self.crl, now)
        } else {
            verify_chain(cert, &chain, &RevocationList::new(), now)
        }
    }

    /// Rotate the fob's credentials: revoke the old certificate, issue a
    /// fresh set, install it on the vehicle, and emit the encrypted update
    /// for the fob. Requires a live authenticated session, whose key
    /// encrypts the payload.
    pub fn issue_update(
        &mut self,
        vehicle: &mut VehicleState,
        vin: &str,
        rng: &mut (impl RngCore + CryptoRng),
        now: u64,
    ) -> Result<(CredentialSet, Message)> {
        if !matches!(vehicle.phase, VehiclePhase::Authed | VehiclePhase::Done) {
            return Err(Error::InvalidState(
                "credential update requires an authenticated session".into(),
            ));
        }
        self.revoke_current();
        let (mut creds, _rand_ca) = issue_fob_credentials(&mut self.intermediate, vin, rng, now)?;
        if !self.key_update_enabled {
            creds.session_key = vehicle.session_key;
        }
        let transport_key = vehicle.session_key;
        let plaintext = encode_credentials(&creds);
        let ciphertext = sym_encrypt_padded(&transport_key, &plaintext)?;
        vehicle.apply_update(&creds);
        self.current_fob_serial = Some(creds.cert.serial);
        Ok((creds, Message::CredUpdate { ciphertext }))
    }
}

// ---------------------------------------------------------------------------
// Shared helpers, provisioning, round driver
// ---------------------------------------------------------------------------

fn encrypt_block16(key: &SymmetricKey, block: &[u8; 16]) -> [u8; 16] {
    let ct = sym_encrypt(key, block).expect("one block is aligned");
    let mut out = [0u8; 16];
    out.copy_from_slice(&ct);
    out
}

fn decrypt_block16(key: &SymmetricKey, block: &[u8; 16]) -> [u8; 16] {
    let pt = sym_decrypt(key, block).expect("one block is aligned");
    let mut out = [0u8; 16];
    out.copy_from_slice(&pt);
    out
}

/// Credential material layout inside a `CRED_UPDATE`:
/// pid(16) || secret(32) || public(33) || cert(153) || session_key(16).
fn encode_credentials(creds: &CredentialSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 32 + 33 + CERT_LEN + 16);
    out.extend_from_slice(creds.pid.as_bytes());
    out.extend_from_slice(&creds.keypair.secret_bytes());
    out.extend_from_slice(&creds.keypair.public_bytes());
    out.extend_from_slice(&creds.cert.encode());
    out.extend_from_slice(creds.session_key.as_bytes());
    out
}

fn decode_credentials(bytes: &[u8]) -> Result<CredentialSet> {
    let expect = 16 + 32 + 33 + CERT_LEN + 16;
    if bytes.len() != expect {
        return Err(Error::Decode(format!(
            "credential payload must be {expect} bytes, got {}",
            bytes.len()
        )));
    }
    let mut pid = [0u8; 16];
    pid.copy_from_slice(&bytes[..16]);
    let keypair = SigningKeypair::from_secret_bytes(&bytes[16..48])?;
    let cert = Certificate::decode(&bytes[81..81 + CERT_LEN])?;
    let mut session_key = [0u8; 16];
    session_key.copy_from_slice(&bytes[81 + CERT_LEN..]);
    Ok(CredentialSet {
        pid: PseudoId::new(pid),
        keypair,
        cert,
        session_key: SymmetricKey::new(session_key),
    })
}

/// A fully provisioned deployment: root authority, vehicle system,
/// vehicle RF terminal, and one key fob sharing the initial session key.
#[derive(Debug, Clone)]
pub struct World {
    pub root: CertAuthority,
    pub system: SystemState,
    pub vehicle: VehicleState,
    pub fob: FobState,
    pub round: u32,
}

/// Initialization: generate the hierarchy, issue fob credentials, load
/// the whitelist and session key into the vehicle, hand the fob its set.
pub fn provision(
    vin: &str,
    control_cmd: ControlCommand,
    rng: &mut (impl RngCore + CryptoRng),
    now: u64,
) -> Result<World> {
    let mut root = gen_root_ca(rng, now);
    let mut system = SystemState::new(&mut root, rng, now);
    let creds = system.provision_fob(vin, rng, now)?;
    let vehicle = VehicleState::new(vec![creds.pid], creds.session_key)?;
    let fob = FobState::new(creds, control_cmd);
    Ok(World {
        root,
        system,
        vehicle,
        fob,
        round: 0,
    })
}

/// Outcome of one driven round.
#[derive(Debug, Clone)]
pub struct RoundReport {
    pub executed: bool,
    pub fail_reason: Option<FailReason>,
    pub connected: bool,
    pub trace: Vec<TraceEntry>,
    pub messages: Vec<(Sender, Message)>,
}

/// Message-loss knobs for a driven round.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundOptions {
    /// Do not deliver the final `CONTROL_OK` to the fob.
    pub drop_control_ok: bool,
}

impl World {
    /// Drive one full round through the state machines, resetting both
    /// endpoints afterwards so the world is ready for the next round.
    pub fn run_round(
        &mut self,
        rng: &mut (impl RngCore + CryptoRng),
        now: u64,
        options: RoundOptions,
    ) -> Result<RoundReport> {
        self.round += 1;
        let round = self.round;
        let mut report = RoundReport {
            executed: false,
            fail_reason: None,
            connected: false,
            trace: Vec::new(),
            messages: Vec::new(),
        };
        let send = |sender: Sender, msg: Message, report: &mut RoundReport| {
            report.trace.push(TraceEntry {
                round,
                sender,
                kind: msg.kind(),
                payload_hex: msg.payload_hex(),
            });
            report.messages.push((sender, msg));
        };

        let adv = self.fob.make_adv()?;
        send(Sender::Fob, adv.clone(), &mut report);

        if self.vehicle.on_adv(&adv) == AdvDecision::Ignore {
            self.finish_round();
            return Ok(report);
        }
        report.connected = true;

        let challenge = self.vehicle.make_challenge(rng)?;
        send(Sender::Vehicle, challenge.clone(), &mut report);

        let response = self
            .fob
            .on_challenge(&challenge)
            .expect("advertising fob answers a challenge");
        send(Sender::Fob, response.clone(), &mut report);

        let verdict = self
            .vehicle
            .on_auth_response(&self.system, &response, now, rng)
            .expect("challenged vehicle issues a verdict");
        send(Sender::Vehicle, verdict.clone(), &mut report);

        if let Message::VerifyFailed { reason } = verdict {
            report.fail_reason = Some(reason);
            self.fob.on_verdict(&verdict);
            self.finish_round();
            return Ok(report);
        }

        let control = self
            .fob
            .on_verdict(&verdict)
            .expect("verified fob sends control data");
        send(Sender::Fob, control.clone(), &mut report);

        let (executed, ack) = self.vehicle.on_control(&control);
        report.executed = executed;
        if let Some(ack) = ack {
            send(Sender::Vehicle, ack.clone(), &mut report);
            if !options.drop_control_ok {
                self.fob.on_control_ok(&ack);
            }
        }

        self.finish_round();
        Ok(report)
    }

    fn finish_round(&mut self) {
        self.fob.reset_round();
        self.vehicle.reset_round();
    }
}
