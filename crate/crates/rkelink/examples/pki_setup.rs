//! Two-tier certificate hierarchy: issuance, chain verification,
//! revocation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rkelink::authcore::{
    gen_intermediate_ca, gen_root_ca, issue_fob_credentials, verify_chain, RevocationList,
};

fn main() -> rkelink::Result<()> {
    let now = 1_700_000_000;
    let mut rng = ChaCha20Rng::seed_from_u64(7);

    let mut root = gen_root_ca(&mut rng, now);
    let mut intermediate = gen_intermediate_ca(&mut root, &mut rng, now);
    let (creds, _rand_ca) =
        issue_fob_credentials(&mut intermediate, "1HGCM82633A004352", &mut rng, now)?;

    println!("root serial:          {}", root.cert().serial);
    println!("intermediate serial:  {}", intermediate.cert().serial);
    println!("fob serial:           {}", creds.cert.serial);
    println!("fob pseudo-id:        {}", creds.pid.to_hex());
    println!("fob cert ({} bytes):  {}...", creds.cert.encode().len(),
        &hex::encode(creds.cert.encode())[..48]);
    println!("credential set consistent: {}", creds.is_consistent());

    let chain = [intermediate.cert().clone(), root.cert().clone()];
    let mut crl = RevocationList::new();
    println!(
        "chain verifies:       {}",
        verify_chain(&creds.cert, &chain, &crl, now)
    );
    println!(
        "expired check:        {}",
        verify_chain(&creds.cert, &chain, &crl, creds.cert.not_after + 1)
    );

    crl.revoke(creds.cert.serial);
    println!(
        "after revocation:     {}",
        verify_chain(&creds.cert, &chain, &crl, now)
    );

    // a replacement set chains fine while the old serial stays dead
    let (fresh, _) =
        issue_fob_credentials(&mut intermediate, "1HGCM82633A004352", &mut rng, now)?;
    println!(
        "replacement verifies: {}",
        verify_chain(&fresh.cert, &chain, &crl, now)
    );
    Ok(())
}
