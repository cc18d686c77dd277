//! ChaCha with every OR replaced by AND: rotations vanish, the keystream
//! carries the key, and a single zero-plaintext block gives it back.
//!
//!     cargo run --example chacha_fault -- [64 hex digit key]

use lockfault::chacha::{
    encrypt, init_state, keystream_block, permute, ChaChaKey, FaultSpec, Layout,
};
use lockfault::leakage::{recover_key, scan_leak};

fn print(title: &str, m: &[u32; 16]) {
    println!("{title}");
    for row in m.chunks(4) {
        println!(
            "  {:08x} {:08x} {:08x} {:08x}",
            row[0], row[1], row[2], row[3]
        );
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hex_key = std::env::args().nth(1).unwrap_or_else(|| {
        "c0ffee00deadbeef0123456789abcdef00112233445566778899aabbccddeeff".into()
    });
    let bytes: [u8; 32] = hex::decode(&hex_key)?
        .try_into()
        .map_err(|_| "key must be 32 bytes")?;
    let key = ChaChaKey::from_bytes(&bytes);
    let (nonce, counter) = ([0x0a0b0c0d, 0, 0, 0], [1, 0, 0, 0]);

    let s0 = init_state(&key, &nonce, &counter, Layout::NonceFirst)?;
    print("initial matrix", &s0.m);
    print(
        "after 20 faulted rounds",
        &permute(&s0, &FaultSpec::OrToAnd).m,
    );
    print(
        "faulted keystream",
        &keystream_block(&s0, &FaultSpec::OrToAnd),
    );

    let ct = encrypt(
        &key,
        &nonce,
        &counter,
        &[0; 64],
        &FaultSpec::OrToAnd,
        Layout::NonceFirst,
    )?;
    let found = scan_leak(&ct, &bytes)?;
    println!(
        "\nkey words found in ciphertext: {}/{}",
        found.words_leaked, found.words_total
    );
    for r in &found.ranges {
        println!(
            "  bytes {}..{}: key words from {} ({})",
            r.offset,
            r.offset + r.length,
            r.secret_word,
            r.transform.as_str()
        );
    }
    let candidates = recover_key(&ct, &[0; 64])?;
    println!(
        "{} candidates, true key present: {}",
        candidates.len(),
        candidates.contains(&key)
    );
    Ok(())
}
