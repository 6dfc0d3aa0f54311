//! Compact certificates and the two-tier issuing hierarchy.
//!
//! The vehicle server is the root authority; the vehicle system is the
//! intermediate that issues fob certificates. Certificates are fixed-width
//! field concatenations (no TLV) signed with ECDSA P-256 over SHA-256,
//! with RFC 6979 deterministic nonces and low-s normalized signatures so
//! issuance is byte-reproducible from a seeded RNG.

use p256::ecdsa::signature::{Signer, Verifier};
use p256::ecdsa::{Signature, SigningKey, VerifyingKey};
use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;

use crate::{Error, Result};

/// Serialized certificate length in bytes.
pub const CERT_LEN: usize = SIGNED_LEN + 64;
/// Length of the signed prefix (all fields before the signature).
const SIGNED_LEN: usize = 8 + 16 + 33 + 16 + 8 + 8;

/// How long an issued certificate stays valid (ten years).
pub const VALIDITY_SECS: u64 = 10 * 365 * 24 * 3600;

/// ECDSA P-256 keypair. The public half serializes to its 33-byte
/// compressed point encoding.
#[derive(Debug, Clone)]
pub struct SigningKeypair {
    secret: SigningKey,
    public: VerifyingKey,
}

impl SigningKeypair {
    pub fn generate(rng: &mut (impl RngCore + CryptoRng)) -> Self {
        let secret = SigningKey::random(rng);
        let public = *secret.verifying_key();
        Self { secret, public }
    }

    pub fn from_secret_bytes(bytes: &[u8]) -> Result<Self> {
        let secret = SigningKey::from_slice(bytes)
            .map_err(|e| Error::Decode(format!("bad secret scalar: {e}")))?;
        let public = *secret.verifying_key();
        Ok(Self { secret, public })
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.secret.to_bytes().into()
    }

    /// Compressed SEC1 encoding of the public point.
    pub fn public_bytes(&self) -> [u8; 33] {
        let point = self.public.to_encoded_point(true);
        let mut out = [0u8; 33];
        out.copy_from_slice(point.as_bytes());
        out
    }

    /// Deterministic low-s signature over `message`.
    pub fn sign(&self, message: &[u8]) -> [u8; 64] {
        let sig: Signature = self.secret.sign(message);
        let sig = sig.normalize_s().unwrap_or(sig);
        sig.to_bytes().into()
    }
}

/// Verify a 64-byte r||s signature against a 33-byte compressed public key.
pub fn verify_signature(public: &[u8; 33], message: &[u8], signature: &[u8; 64]) -> bool {
    let Ok(key) = VerifyingKey::from_sec1_bytes(public) else {
        return false;
    };
    let Ok(sig) = Signature::from_slice(signature) else {
        return false;
    };
    key.verify(message, &sig).is_ok()
}

/// A compact certificate: serial, subject identity and key, issuer
/// identity, validity window, and the issuer's signature over everything
/// before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub serial: u64,
    pub subject_id: [u8; 16],
    pub subject_public_key: [u8; 33],
    pub issuer_id: [u8; 16],
    pub not_before: u64,
    pub not_after: u64,
    pub signature: [u8; 64],
}

impl Certificate {
    fn signed_bytes(
        serial: u64,
        subject_id: &[u8; 16],
        subject_public_key: &[u8; 33],
        issuer_id: &[u8; 16],
        not_before: u64,
        not_after: u64,
    ) -> [u8; SIGNED_LEN] {
        let mut out = [0u8; SIGNED_LEN];
        out[0..8].copy_from_slice(&serial.to_be_bytes());
        out[8..24].copy_from_slice(subject_id);
        out[24..57].copy_from_slice(subject_public_key);
        out[57..73].copy_from_slice(issuer_id);
        out[73..81].copy_from_slice(&not_before.to_be_bytes());
        out[81..89].copy_from_slice(&not_after.to_be_bytes());
        out
    }

    /// Fixed-width encoding, 153 bytes.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Self::signed_bytes(
            self.serial,
            &self.subject_id,
            &self.subject_public_key,
            &self.issuer_id,
            self.not_before,
            self.not_after,
        )
        .to_vec();
        out.extend_from_slice(&self.signature);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != CERT_LEN {
            return Err(Error::Decode(format!(
                "certificate must be {CERT_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let mut serial = [0u8; 8];
        serial.copy_from_slice(&bytes[0..8]);
        let mut subject_id = [0u8; 16];
        subject_id.copy_from_slice(&bytes[8..24]);
        let mut subject_public_key = [0u8; 33];
        subject_public_key.copy_from_slice(&bytes[24..57]);
        let mut issuer_id = [0u8; 16];
        issuer_id.copy_from_slice(&bytes[57..73]);
        let mut not_before = [0u8; 8];
        not_before.copy_from_slice(&bytes[73..81]);
        let mut not_after = [0u8; 8];
        not_after.copy_from_slice(&bytes[81..89]);
        let mut signature = [0u8; 64];
        signature.copy_from_slice(&bytes[89..153]);
        // reject obviously malformed key encodings up front
        if VerifyingKey::from_sec1_bytes(&subject_public_key).is_err() {
            return Err(Error::Decode("subject public key is not a valid point".into()));
        }
        Ok(Self {
            serial: u64::from_be_bytes(serial),
            subject_id,
            subject_public_key,
            issuer_id,
            not_before: u64::from_be_bytes(not_before),
            not_after: u64::from_be_bytes(not_after),
            signature,
        })
    }

    /// True when `issuer_key` signed this certificate's contents.
    pub fn verifies_under(&self, issuer_key: &[u8; 33]) -> bool {
        let signed = Self::signed_bytes(
            self.serial,
            &self.subject_id,
            &self.subject_public_key,
            &self.issuer_id,
            self.not_before,
            self.not_after,
        );
        verify_signature(issuer_key, &signed, &self.signature)
    }

    pub fn valid_at(&self, now: u64) -> bool {
        self.not_before <= now && now <= self.not_after
    }
}

/// Set of revoked certificate serials. Append-only within a run.
#[derive(Debug, Clone, Default)]
pub struct RevocationList {
    revoked: BTreeSet<u64>,
}

impl RevocationList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revoke(&mut self, serial: u64) {
        self.revoked.insert(serial);
    }

    pub fn is_revoked(&self, serial: u64) -> bool {
        self.revoked.contains(&serial)
    }

    pub fn len(&self) -> usize {
        self.revoked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.revoked.is_empty()
    }
}

/// An issuing authority: its keypair, its own certificate, and a monotone
/// serial counter for the certificates it signs.
#[derive(Debug, Clone)]
pub struct CertAuthority {
    keypair: SigningKeypair,
    cert: Certificate,
    next_serial: u64,
}

impl CertAuthority {
    pub fn keypair(&self) -> &SigningKeypair {
        &self.keypair
    }

    pub fn cert(&self) -> &Certificate {
        &self.cert
    }

    fn take_serial(&mut self) -> u64 {
        let serial = self.next_serial;
        self.next_serial += 1;
        serial
    }

    /// Sign a certificate for `subject id/key` with this authority's key.
    pub fn issue(
        &mut self,
        subject_id: [u8; 16],
        subject_public_key: [u8; 33],
        issued_at: u64,
    ) -> Certificate {
        let serial = self.take_serial();
        let not_before = issued_at;
        let not_after = issued_at + VALIDITY_SECS;
        let signed = Certificate::signed_bytes(
            serial,
            &subject_id,
            &subject_public_key,
            &self.cert.subject_id,
            not_before,
            not_after,
        );
        let signature = self.keypair.sign(&signed);
        Certificate {
            serial,
            subject_id,
            subject_public_key,
            issuer_id: self.cert.subject_id,
            not_before,
            not_after,
            signature,
        }
    }
}

/// First 16 bytes of SHA-256 over `data`.
pub fn digest16(data: &[u8]) -> [u8; 16] {
    let hash = Sha256::digest(data);
    let mut out = [0u8; 16];
    out.copy_from_slice(&hash[..16]);
    out
}

/// Generate the root authority (the vehicle server) with a self-signed
/// certificate.
pub fn gen_root_ca(rng: &mut (impl RngCore + CryptoRng), issued_at: u64) -> CertAuthority {
    let keypair = SigningKeypair::generate(rng);
    let subject_id = digest16(b"rke vehicle server root ca");
    let serial = 1;
    let signed = Certificate::signed_bytes(
        serial,
        &subject_id,
        &keypair.public_bytes(),
        &subject_id,
        issued_at,
        issued_at + VALIDITY_SECS,
    );
    let signature = keypair.sign(&signed);
    let cert = Certificate {
        serial,
        subject_id,
        subject_public_key: keypair.public_bytes(),
        issuer_id: subject_id,
        not_before: issued_at,
        not_after: issued_at + VALIDITY_SECS,
        signature,
    };
    CertAuthority {
        keypair,
        cert,
        next_serial: 2,
    }
}

/// Serial range the intermediate issues from. Revocation stores bare
/// serials, so the ranges of the two issuers must not collide.
const INTERMEDIATE_SERIAL_BASE: u64 = 0x1000;

/// Generate the intermediate authority (the vehicle system), certified by
/// the root.
pub fn gen_intermediate_ca(
    root: &mut CertAuthority,
    rng: &mut (impl RngCore + CryptoRng),
    issued_at: u64,
) -> CertAuthority {
    let keypair = SigningKeypair::generate(rng);
    let subject_id = digest16(b"rke vehicle system intermediate ca");
    let cert = root.issue(subject_id, keypair.public_bytes(), issued_at);
    CertAuthority {
        keypair,
        cert,
        next_serial: INTERMEDIATE_SERIAL_BASE,
    }
}

/// Verify `cert` against an issuer chain ordered leaf-issuer first, root
/// last. True only if every signature in the path verifies, every validity
/// window contains `now`, the issuer linkage is consistent, and no serial
/// in the path is revoked.
pub fn verify_chain(
    cert: &Certificate,
    chain: &[Certificate],
    crl: &RevocationList,
    now: u64,
) -> bool {
    let mut current = cert;
    if !current.valid_at(now) || crl.is_revoked(current.serial) {
        return false;
    }
    for issuer in chain {
        if !issuer.valid_at(now) || crl.is_revoked(issuer.serial) {
            return false;
        }
        if current.issuer_id != issuer.subject_id {
            return false;
        }
        if !current.verifies_under(&issuer.subject_public_key) {
            return false;
        }
        current = issuer;
    }
    // the last chain element must be self-signed
    current.issuer_id == current.subject_id
        && current.verifies_under(&current.subject_public_key)
}
