use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lockfault::circuits;
use lockfault::locking::LockKey;
use lockfault::netlist::serialize;
use lockfault::profile::DecoderProfile;

fn lockfault(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lockfault"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn lock_adder(dir: &Path) {
    fs::write(
        dir.join("adder4.net"),
        serialize(&circuits::load("adder4").unwrap()),
    )
    .unwrap();
    let o = lockfault(
        &[
            "lock",
            "adder4.net",
            "--count",
            "8",
            "--seed",
            "3",
            "-o",
            "locked.net",
            "--key",
            "k.key",
            "--plan",
            "p.plan",
        ],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn lock_then_verify_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let dir = t.path();
    lock_adder(dir);
    assert!(fs::read_to_string(dir.join("p.plan"))
        .unwrap()
        .contains("keygate 0 "));

    let ok = lockfault(&["verify", "adder4.net", "locked.net", "k.key"], dir);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("equivalent"));

    let key = LockKey::parse_file(&fs::read_to_string(dir.join("k.key")).unwrap()).unwrap();
    fs::write(
        dir.join("wrong.key"),
        key.flip_key_bit(2).unwrap().to_file_string(),
    )
    .unwrap();
    let bad = lockfault(&["verify", "adder4.net", "locked.net", "wrong.key"], dir);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).contains("counterexample"));

    let missing = lockfault(&["verify", "adder4.net", "nope.net", "k.key"], dir);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let narrow = lockfault(
        &[
            "lock",
            "adder4.net",
            "--count",
            "500",
            "-o",
            "x.net",
            "--key",
            "x.key",
            "--plan",
            "x.plan",
        ],
        dir,
    );
    assert_eq!(code(&narrow), 2);
}

#[test]
fn lock_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    lock_adder(a.path());
    lock_adder(b.path());
    for f in ["locked.net", "k.key", "p.plan"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn netlist_sweep_reports_are_identical() {
    let t = tempfile::tempdir().unwrap();
    let dir = t.path();
    lock_adder(dir);
    for (cfg, report, parallel) in [("a.cfg", "a.json", false), ("b.cfg", "b.json", true)] {
        fs::write(
            dir.join(cfg),
            format!("target = netlist\nnetlist = locked.net\nkey_file = k.key\nreport = {report}\nparallel = {parallel}\n"),
        )
        .unwrap();
        let o = lockfault(&["sweep", cfg], dir);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("changed"));
    }
    let a = fs::read(dir.join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.join("b.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["bits_swept"], 8);
    assert_eq!(v["per_bit"].as_array().unwrap().len(), 8);
}

#[test]
fn bad_config_is_a_usage_error() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("c.cfg"),
        "target = chacha\nflavour = vanilla\n",
    )
    .unwrap();
    assert_eq!(code(&lockfault(&["sweep", "c.cfg"], t.path())), 2);
    assert_eq!(code(&lockfault(&["sweep", "absent.cfg"], t.path())), 2);
}

fn trojan_setup(dir: &Path) {
    let p = DecoderProfile::bundled();
    let rom = [
        p.key.clone(),
        p.key.flip_key_bit(p.funct2_bits()[0]).unwrap(),
    ];
    fs::write(
        dir.join("rom.txt"),
        rom.iter().map(|k| k.to_hex() + "\n").collect::<String>(),
    )
    .unwrap();
    fs::write(
        dir.join("t.cfg"),
        "target = chacha\nchacha_key = 9e3779b97f4a7c15f39cc0605cedc8342e0b6c2ad6e6a0f81b873593cc9e2d51\n",
    )
    .unwrap();
}

#[test]
fn trojan_leaks_when_enabled() {
    let t = tempfile::tempdir().unwrap();
    trojan_setup(t.path());
    let on = lockfault(
        &[
            "trojan",
            "--rom",
            "rom.txt",
            "--address",
            "1",
            "--enable",
            "--config",
            "t.cfg",
        ],
        t.path(),
    );
    assert_eq!(code(&on), 0, "{}", String::from_utf8_lossy(&on.stderr));
    let s = stdout(&on);
    assert!(s.contains("verdict: leak (fraction 1.000"), "{s}");
    assert!(s.contains("after disabling: unchanged"), "{s}");

    let same = lockfault(
        &[
            "trojan",
            "--rom",
            "rom.txt",
            "--address",
            "0",
            "--enable",
            "--config",
            "t.cfg",
        ],
        t.path(),
    );
    assert!(stdout(&same).contains("verdict: unchanged"));
    let off = lockfault(
        &[
            "trojan",
            "--rom",
            "rom.txt",
            "--address",
            "1",
            "--config",
            "t.cfg",
        ],
        t.path(),
    );
    assert!(stdout(&off).contains("verdict: unchanged"));
}

#[test]
fn trojan_address_range() {
    let t = tempfile::tempdir().unwrap();
    trojan_setup(t.path());
    let wide = lockfault(
        &[
            "trojan",
            "--rom",
            "rom.txt",
            "--address",
            "1024",
            "--enable",
            "--config",
            "t.cfg",
        ],
        t.path(),
    );
    assert_eq!(code(&wide), 2);
    let empty_slot = lockfault(
        &[
            "trojan",
            "--rom",
            "rom.txt",
            "--address",
            "5",
            "--enable",
            "--config",
            "t.cfg",
        ],
        t.path(),
    );
    assert_eq!(code(&empty_slot), 2);
}

#[test]
fn chacha_demo_and_profile() {
    let t = tempfile::tempdir().unwrap();
    let demo = lockfault(&["chacha-demo"], t.path());
    assert_eq!(code(&demo), 0);
    let s = stdout(&demo);
    assert!(s.contains("agrees: yes"));
    assert!(s.contains("100.0%"));
    assert!(s.contains("true key among them: yes"));

    let prof = lockfault(&["profile", "out"], t.path());
    assert_eq!(code(&prof), 0, "{}", String::from_utf8_lossy(&prof.stderr));
    let key = LockKey::parse_file(&fs::read_to_string(t.path().join("out/profile.key")).unwrap())
        .unwrap();
    assert_eq!(key, DecoderProfile::bundled().key);
    assert!(t.path().join("out/rvc_front.locked.net").exists());
}
