//! The `cfsim` binary: output files and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn cfsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfsim")).args(args).output().expect("spawn cfsim")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn presets_dump() {
    let o = cfsim(&["presets"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["fig4", "fig6", "fig8", "fig9", "fig10"] {
        assert!(text.contains(&format!("# preset {name}\n")), "{name}");
    }
    assert!(text.contains("n_ris = 900"));
}

#[test]
fn csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dl.toml", "seeds = 3\nschemes = [\"CB\", \"FZF\"]\n[dl]\nm = 6\nk = 2\nn = 3\n");
    let o = cfsim(&["dl", "--config", &cfg, "--trials", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,scheme,case,metric,count,sum,min,mean,values");
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 9));
}

#[test]
fn out_file_cdf_and_worker_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ul.json", r#"{"seeds": 4, "trials": 200, "ul": {"m": 4, "k": 2, "n": 2, "tau_up": 2}}"#);
    let mut texts = Vec::new();
    for w in ["1", "3"] {
        let out = dir.path().join(format!("ul{w}.csv"));
        let o = cfsim(&["ul", "--config", &cfg, "--workers", w, "--out", out.to_str().unwrap(), "--cdf", "se:sum"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stderr(&o).contains("4/4 seeds"));
        texts.push(std::fs::read(&out).unwrap());
        let cdf = std::fs::read_to_string(dir.path().join(format!("ul{w}.se_sum.L4.cdf.csv"))).unwrap();
        assert_eq!(cdf.lines().next(), Some("value,cdf"));
        assert_eq!(cdf.lines().count(), 5);
        assert!(!out.with_extension("partial").exists());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "seeds = 2\n[dl]\nm = -3\n");
    let o = cfsim(&["dl", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let unknown = write(dir.path(), "unknown.toml", "[dl]\nantennas = 4\n");
    let o = cfsim(&["dl", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("antennas"));

    let o = cfsim(&["ris", "--preset", "fig6"]);
    assert_eq!(o.status.code(), Some(2));

    let o = cfsim(&["dl", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    // Forty APs is beyond the exhaustive mode search.
    let o = cfsim(&["nafd", "--preset", "fig4", "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("too large"), "{}", stderr(&o));
}

#[test]
fn infeasible_floors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "eh.toml",
        "seeds = 2\nschemes = [\"Optimal\"]\n[eh]\nm = 4\nn = 2\nk_d = 1\nl = 1\nenergy_floor = 1.0\n",
    );
    let o = cfsim(&["eh", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn lemmas_command() {
    let o = cfsim(&["lemmas", "--trials", "20000", "--seed", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("check,statistic,target,stderr,z,passed\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}
