mod common;

use rand::seq::index::sample;
use rand::Rng;

use lockfault::chacha::{encrypt, FaultSpec, Layout};
use lockfault::leakage::{
    classify, classify_with_leak, recover_key, scan_leak, Category, RunOutcome, Transform,
};

/// Random 64-byte output with `k` secret words planted at aligned slots.
fn plant(r: &mut impl Rng, secret: &[u8], words: &[usize], doubled: bool) -> Vec<u8> {
    let mut out: Vec<u8> = (0..64).map(|_| r.gen()).collect();
    let slots = sample(r, 16, words.len());
    for (slot, &j) in slots.iter().zip(words) {
        let w = u32::from_le_bytes(secret[4 * j..4 * j + 4].try_into().unwrap());
        let w = if doubled { w.wrapping_mul(2) } else { w };
        out[4 * slot..4 * slot + 4].copy_from_slice(&w.to_le_bytes());
    }
    out
}

#[test]
fn planted_words_are_found() {
    let mut r = common::rng(10);
    for _ in 0..500 {
        let secret: Vec<u8> = (0..32).map(|_| r.gen()).collect();
        let k = r.gen_range(0..=8);
        let words: Vec<usize> = sample(&mut r, 8, k).into_vec();
        let doubled = r.gen();
        let f = scan_leak(&plant(&mut r, &secret, &words, doubled), &secret).unwrap();
        assert_eq!(f.words_leaked, k);
        assert_eq!(f.fraction(), k as f64 / 8.0);
        if k > 0 {
            let want = if doubled {
                Transform::DoubledWord
            } else {
                Transform::Identity
            };
            assert_eq!(f.matched_transform, want);
        }
    }
}

#[test]
fn more_planted_words_never_lower_the_fraction() {
    let mut r = common::rng(11);
    for _ in 0..200 {
        let secret: Vec<u8> = (0..32).map(|_| r.gen()).collect();
        let mut out: Vec<u8> = (0..64).map(|_| r.gen()).collect();
        let mut last = scan_leak(&out, &secret).unwrap().fraction();
        for (slot, j) in sample(&mut r, 16, 8).iter().zip(0..8) {
            out[4 * slot..4 * slot + 4].copy_from_slice(&secret[4 * j..4 * j + 4]);
            let now = scan_leak(&out, &secret).unwrap().fraction();
            assert!(now >= last);
            last = now;
        }
        assert_eq!(last, 1.0);
    }
}

#[test]
fn random_outputs_do_not_leak() {
    let mut r = common::rng(12);
    for _ in 0..10_000 {
        let secret: Vec<u8> = (0..32).map(|_| r.gen()).collect();
        let out: Vec<u8> = (0..64).map(|_| r.gen()).collect();
        assert_eq!(scan_leak(&out, &secret).unwrap().words_leaked, 0);
    }
}

#[test]
fn faulted_encryption_leaks_and_recovers() {
    let mut r = common::rng(13);
    for _ in 0..200 {
        let key = common::random_key(&mut r);
        let nonce: [u32; 4] = r.gen();
        let ct = encrypt(
            &key,
            &nonce,
            &[1, 0, 0, 0],
            &[0; 64],
            &FaultSpec::OrToAnd,
            Layout::NonceFirst,
        )
        .unwrap();
        let clean = encrypt(
            &key,
            &nonce,
            &[1, 0, 0, 0],
            &[0; 64],
            &FaultSpec::None,
            Layout::NonceFirst,
        )
        .unwrap();
        let (cat, f) = classify_with_leak(
            &RunOutcome::completed(clean.clone()),
            &RunOutcome::completed(ct.clone()),
            &key.to_bytes(),
        )
        .unwrap();
        assert_eq!(cat, Category::Leak);
        assert_eq!(f.unwrap().fraction(), 1.0);
        let cands = recover_key(&ct, &[0; 64]).unwrap();
        assert!(cands.len() <= 16 && cands.contains(&key));
        assert_eq!(scan_leak(&clean, &key.to_bytes()).unwrap().words_leaked, 0);
    }
}

#[test]
fn classification_taxonomy() {
    let base = RunOutcome::completed(vec![1, 2, 3]);
    assert_eq!(
        classify(&base, &RunOutcome::trapped()).unwrap(),
        Category::BootFailure
    );
    assert_eq!(
        classify(&base, &RunOutcome::no_output()).unwrap(),
        Category::NoOutput
    );
    assert_eq!(
        classify(&base, &RunOutcome::completed(vec![])).unwrap(),
        Category::NoOutput
    );
    assert_eq!(classify(&base, &base).unwrap(), Category::Unchanged);
    assert_eq!(
        classify(&base, &RunOutcome::completed(vec![1, 2, 4])).unwrap(),
        Category::Changed
    );
    assert!(classify(&RunOutcome::trapped(), &base).is_err());
    assert!(scan_leak(&[0; 8], &[0; 5]).is_err());
    assert!(recover_key(&[0; 63], &[0; 63]).is_err());
}
