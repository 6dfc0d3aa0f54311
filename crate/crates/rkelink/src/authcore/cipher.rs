//! Deterministic AES-128 session cipher.
//!
//! The connection-establishment step compares a freshly computed
//! ciphertext against a broadcast ciphertext for equality, which only
//! works with a deterministic cipher: same key and plaintext must give the
//! same bytes on every node. ECB provides that. It leaks plaintext-block
//! equality and must not be reused as a general confidentiality layer; the
//! protocol limits its exposure by encrypting single random blocks and
//! rotating the key every round.
//!
//! Fixed-size protocol fields (16- and 32-byte) use the raw block pair
//! [`sym_encrypt`] / [`sym_decrypt`]. Variable-length payloads use the
//! PKCS#7 pair [`sym_encrypt_padded`] / [`sym_decrypt_padded`], whose
//! padding check is what turns a wrong key into a visible decrypt error.

use aes::cipher::{BlockDecrypt, BlockEncrypt, KeyInit};
use aes::Aes128;

use crate::{Error, Result};

pub const BLOCK_SIZE: usize = 16;

/// 128-bit symmetric session key (the live `rand_init`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymmetricKey([u8; 16]);

impl SymmetricKey {
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

fn cipher(key: &SymmetricKey) -> Aes128 {
    Aes128::new(&(*key.as_bytes()).into())
}

/// Encrypt a block-aligned plaintext. No padding is added: a 16-byte
/// plaintext yields exactly one ciphertext block.
pub fn sym_encrypt(key: &SymmetricKey, plaintext: &[u8]) -> Result<Vec<u8>> {
    if plaintext.is_empty() || !plaintext.len().is_multiple_of(BLOCK_SIZE) {
        return Err(Error::InvalidArgument(format!(
            "plaintext length {} is not a positive multiple of {BLOCK_SIZE}",
            plaintext.len()
        )));
    }
    let aes = cipher(key);
    let mut out = plaintext.to_vec();
    for chunk in out.chunks_exact_mut(BLOCK_SIZE) {
        let mut arr = [0u8; BLOCK_SIZE];
        arr.copy_from_slice(chunk);
        let mut block = arr.into();
        aes.encrypt_block(&mut block);
        chunk.copy_from_slice(&block);
    }
    Ok(out)
}

/// Decrypt a block-aligned ciphertext produced by [`sym_encrypt`].
///
/// A wrong key does not fail here; it yields garbage plaintext, which the
/// protocol catches through its random-number echo checks.
pub fn sym_decrypt(key: &SymmetricKey, ciphertext: &[u8]) -> Result<Vec<u8>> {
    if ciphertext.is_empty() || !ciphertext.len().is_multiple_of(BLOCK_SIZE) {
        return Err(Error::InvalidArgument(format!(
            "ciphertext length {} is not a positive multiple of {BLOCK_SIZE}",
            ciphertext.len()
        )));
    }
    let aes = cipher(key);
    let mut out = ciphertext.to_vec();
    for chunk in out.chunks_exact_mut(BLOCK_SIZE) {
        let mut arr = [0u8; BLOCK_SIZE];
        arr.copy_from_slice(chunk);
        let mut block = arr.into();
        aes.decrypt_block(&mut block);
        chunk.copy_from_slice(&block);
    }
    Ok(out)
}

/// Encrypt any non-empty plaintext with PKCS#7 padding.
pub fn sym_encrypt_padded(key: &SymmetricKey, plaintext: &[u8]) -> Result<Vec<u8>> {
    if plaintext.is_empty() {
        return Err(Error::InvalidArgument("plaintext must be non-empty".into()));
    }
    let pad = BLOCK_SIZE - plaintext.len() % BLOCK_SIZE;
    let mut padded = plaintext.to_vec();
    padded.extend(std::iter::repeat_n(pad as u8, pad));
    sym_encrypt(key, &padded)
}

/// Decrypt and strip PKCS#7 padding. A key mismatch surfaces as
/// [`Error::Decrypt`] with overwhelming probability.
pub fn sym_decrypt_padded(key: &SymmetricKey, ciphertext: &[u8]) -> Result<Vec<u8>> {
    let mut out = sym_decrypt(key, ciphertext)?;
    let pad = *out.last().ok_or(Error::Decrypt)? as usize;
    if pad == 0 || pad > BLOCK_SIZE || pad > out.len() {
        return Err(Error::Decrypt);
    }
    if out[out.len() - pad..].iter().any(|b| *b as usize != pad) {
        return Err(Error::Decrypt);
    }
    out.truncate(out.len() - pad);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key(hex_str: &str) -> SymmetricKey {
        let mut k = [0u8; 16];
        k.copy_from_slice(&hex::decode(hex_str).unwrap());
        SymmetricKey::new(k)
    }

    #[test]
    fn fips197_known_answer() {
        // FIPS-197 appendix C.1 single-block vector.
        let k = key("000102030405060708090a0b0c0d0e0f");
        let pt = hex::decode("00112233445566778899aabbccddeeff").unwrap();
        let ct = sym_encrypt(&k, &pt).unwrap();
        assert_eq!(hex::encode(&ct), "69c4e0d86a7b0430d8cdb78070b4c55a");
        assert_eq!(sym_decrypt(&k, &ct).unwrap(), pt);
    }

    #[test]
    fn single_block_stays_single_block() {
        let k = key("00000000000000000000000000000000");
        let ct = sym_encrypt(&k, &[0u8; 16]).unwrap();
        assert_eq!(ct.len(), 16);
    }

    #[test]
    fn misaligned_raw_input_rejected() {
        let k = key("00000000000000000000000000000000");
        assert!(sym_encrypt(&k, &[0u8; 15]).is_err());
        assert!(sym_encrypt(&k, &[]).is_err());
        assert!(sym_decrypt(&k, &[0u8; 17]).is_err());
    }

    #[test]
    fn deterministic_across_calls() {
        let k = key("5d6e7f805d6e7f805d6e7f805d6e7f80");
        let msg = b"sixteen-byteblok";
        assert_eq!(
            sym_encrypt(&k, msg).unwrap(),
            sym_encrypt(&k, msg).unwrap()
        );
    }

    #[test]
    fn wrong_key_padded_decrypt_errors() {
        let k1 = key("000102030405060708090a0b0c0d0e0f");
        let k2 = key("0f0e0d0c0b0a09080706050403020100");
        // fixed messages chosen across several lengths; the padding check
        // catches the mismatch on all of them
        let mut caught = 0;
        for len in [1usize, 7, 17, 31, 40, 63] {
            let msg: Vec<u8> = (0..len as u8).collect();
            let ct = sym_encrypt_padded(&k1, &msg).unwrap();
            match sym_decrypt_padded(&k2, &ct) {
                Err(Error::Decrypt) => caught += 1,
                Ok(garbage) => assert_ne!(garbage, msg),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(caught >= 4, "padding failed to flag most mismatches");
    }

    proptest! {
        #[test]
        fn padded_roundtrip_any_length(msg in proptest::collection::vec(any::<u8>(), 1..64)) {
            let k = key("2b7e151628aed2a6abf7158809cf4f3c");
            let ct = sym_encrypt_padded(&k, &msg).unwrap();
            prop_assert_eq!(ct.len() % BLOCK_SIZE, 0);
            prop_assert!(ct.len() >= msg.len());
            prop_assert_eq!(sym_decrypt_padded(&k, &ct).unwrap(), msg);
        }

        #[test]
        fn raw_roundtrip_aligned(blocks in 1usize..4, seed in any::<u64>()) {
            let mut msg = vec![0u8; blocks * BLOCK_SIZE];
            let mut s = seed | 1;
            for b in msg.iter_mut() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                *b = s as u8;
            }
            let k = key("2b7e151628aed2a6abf7158809cf4f3c");
            let ct = sym_encrypt(&k, &msg).unwrap();
            prop_assert_eq!(ct.len(), msg.len());
            prop_assert_eq!(sym_decrypt(&k, &ct).unwrap(), msg);
        }
    }
}
