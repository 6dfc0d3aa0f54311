//! Credential material and cryptographic primitives.
//!
//! Covers the two-tier certificate hierarchy (vehicle server as root,
//! vehicle system as intermediate), fob pseudo-identities, the
//! deterministic AES-128 session cipher, revocation, and per-round session
//! key rotation. Everything is driven by caller-supplied RNGs so that
//! issuance and signatures are reproducible from a seed.

mod cert;
mod cipher;

pub use cert::{
    digest16, gen_intermediate_ca, gen_root_ca, verify_chain, verify_signature, CertAuthority,
    Certificate, RevocationList, SigningKeypair, CERT_LEN, VALIDITY_SECS,
};
pub use cipher::{
    sym_decrypt, sym_decrypt_padded, sym_encrypt, sym_encrypt_padded, SymmetricKey, BLOCK_SIZE,
};

use rand_core::{CryptoRng, RngCore};

use crate::{Error, Result};

/// Pseudo-identity of a fob: its raw identity XOR-masked with a VIN digest
/// and an issuer-chosen random mask, so the broadcast identity reveals
/// neither the fob id nor the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PseudoId([u8; 16]);

impl PseudoId {
    pub fn new(bytes: [u8; 16]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

/// Derive a pseudo-identity as `id_fob XOR digest16(vin) XOR rand_ca`.
///
/// The VIN is folded to 16 bytes through a truncated SHA-256 so arbitrary
/// VIN lengths XOR cleanly against the 16-byte operands.
pub fn derive_pseudo_id(id_fob: &[u8; 16], vin: &str, rand_ca: &[u8; 16]) -> Result<PseudoId> {
    if vin.is_empty() || vin.len() > 17 || !vin.is_ascii() {
        return Err(Error::InvalidArgument(
            "vin must be 1..=17 ASCII characters".into(),
        ));
    }
    let vin_digest = digest16(vin.as_bytes());
    let mut out = [0u8; 16];
    for i in 0..16 {
        out[i] = id_fob[i] ^ vin_digest[i] ^ rand_ca[i];
    }
    Ok(PseudoId(out))
}

/// Everything a provisioned fob holds: pseudo-identity, signing keypair,
/// certificate, and the live symmetric session key.
#[derive(Debug, Clone)]
pub struct CredentialSet {
    pub pid: PseudoId,
    pub keypair: SigningKeypair,
    pub cert: Certificate,
    pub session_key: SymmetricKey,
}

impl CredentialSet {
    /// Check the internal consistency invariants: the certificate names
    /// this pseudo-identity and this public key.
    pub fn is_consistent(&self) -> bool {
        self.cert.subject_id == *self.pid.as_bytes()
            && self.cert.subject_public_key == self.keypair.public_bytes()
    }
}

/// Issue fresh fob credentials under the intermediate authority.
///
/// Draws a fob identity, the pseudo-id mask `rand_ca`, the initial session
/// key, and a signing keypair from `rng`, then signs a certificate whose
/// subject is the derived pseudo-identity. Returns the credential set and
/// the `rand_ca` mask used to derive the pseudo-id.
pub fn issue_fob_credentials(
    intermediate: &mut CertAuthority,
    vin: &str,
    rng: &mut (impl RngCore + CryptoRng),
    issued_at: u64,
) -> Result<(CredentialSet, [u8; 16])> {
    let mut id_fob = [0u8; 16];
    rng.fill_bytes(&mut id_fob);
    let mut rand_ca = [0u8; 16];
    rng.fill_bytes(&mut rand_ca);
    let mut rand_init = [0u8; 16];
    rng.fill_bytes(&mut rand_init);
    let keypair = SigningKeypair::generate(rng);
    let pid = derive_pseudo_id(&id_fob, vin, &rand_ca)?;
    let cert = intermediate.issue(*pid.as_bytes(), keypair.public_bytes(), issued_at);
    Ok((
        CredentialSet {
            pid,
            keypair,
            cert,
            session_key: SymmetricKey::new(rand_init),
        },
        rand_ca,
    ))
}

/// Rotate the session key after a completed round: the fresh `rand2`
/// becomes the new key outright.
pub fn rotate_session_key(_current: &SymmetricKey, rand2: [u8; 16]) -> SymmetricKey {
    SymmetricKey::new(rand2)
}
