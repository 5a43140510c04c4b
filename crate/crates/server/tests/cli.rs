use std::path::Path;
use std::process::Command;

use serde_json::Value;

const FIXTURE: &str = r#"
[admin]
username = "admin"
password = "Adm1n!pass"

[[customers]]
username = "alice"
password = "Alic3!pass"
full_name = "Alice Tan"
ic_passport_no = "880101-14-5566"

[[customers.accounts]]
kind = "current"
opening_minor = 150000
"#;

fn bank(config: &Path, args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_bank"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env_remove("BANK_CONFIG")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn maintenance_commands_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let config = dir.path().join("bank.toml");
    std::fs::write(
        &config,
        format!(
            "data_dir = {:?}\n[bank.digest]\nalgorithm = \"pbkdf2-sha256\"\niterations = 1\n",
            data.display().to_string()
        ),
    )
    .unwrap();
    let fixture = dir.path().join("fixture.toml");
    std::fs::write(&fixture, FIXTURE).unwrap();

    let seeded = bank(&config, &["seed", "--fixture", fixture.to_str().unwrap()]);
    assert_eq!(seeded["customers_created"][0], "alice");
    let again = bank(&config, &["seed", "--fixture", fixture.to_str().unwrap()]);
    assert_eq!(again["skipped"][0], "alice");

    let snap = bank(&config, &["backup", "--mode", "complete"]);
    assert_eq!(snap["mode"], "complete");
    let offsite = dir.path().join("offsite");
    let copied = bank(&config, &["offsite", "--target", offsite.to_str().unwrap()]);
    assert_eq!(copied["verified_seq"], snap["upto_seq"]);

    let run = bank(&config, &["run-value-date", "2099-01-01"]);
    assert_eq!(run["executed"], 0);

    let recovered = bank(&config, &["recover", "--verify"]);
    assert_eq!(recovered["customers"], 1);
    assert_eq!(recovered["verified"], true);
    let remote = bank(&config, &["recover", "--data-dir", offsite.to_str().unwrap()]);
    assert_eq!(remote["entries"], recovered["entries"]);
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bank.toml");
    std::fs::write(&config, "[bank]\nidle_timeout_s = 0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bank"))
        .arg("--config")
        .arg(&config)
        .args(["recover"])
        .env_remove("BANK_CONFIG")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
