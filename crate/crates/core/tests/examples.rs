//! Every example runs at a reduced size and reports sensible numbers.

#[path = "../examples/network_drop.rs"]
#[allow(dead_code)]
mod network_drop;
#[path = "../examples/channel_estimation.rs"]
#[allow(dead_code)]
mod channel_estimation;
#[path = "../examples/random_matrix_lemmas.rs"]
#[allow(dead_code)]
mod random_matrix_lemmas;
#[path = "../examples/maxmin_oracle.rs"]
#[allow(dead_code)]
mod maxmin_oracle;
#[path = "../examples/uplink_levels.rs"]
#[allow(dead_code)]
mod uplink_levels;
#[path = "../examples/downlink_precoders.rs"]
#[allow(dead_code)]
mod downlink_precoders;
#[path = "../examples/full_duplex.rs"]
#[allow(dead_code)]
mod full_duplex;
#[path = "../examples/noma_pairing.rs"]
#[allow(dead_code)]
mod noma_pairing;
#[path = "../examples/pilot_spoofing.rs"]
#[allow(dead_code)]
mod pilot_spoofing;
#[path = "../examples/energy_harvesting.rs"]
#[allow(dead_code)]
mod energy_harvesting;
#[path = "../examples/ris_assisted.rs"]
#[allow(dead_code)]
mod ris_assisted;
#[path = "../examples/config_experiment.rs"]
#[allow(dead_code)]
mod config_experiment;

#[test]
fn network_drop_runs() {
    let db = network_drop::run(8, 4, 1).unwrap();
    assert_eq!(db.len(), 4);
    assert!(db.iter().all(|x| x.is_finite()));
}

#[test]
fn nmse_falls_with_longer_pilots() {
    let v = channel_estimation::run(&[1, 3, 6], 2).unwrap();
    assert!(v.windows(2).all(|w| w[1] <= w[0]));
    assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
}

#[test]
fn lemma_checks_pass() {
    assert!(random_matrix_lemmas::run(20_000, 0).unwrap());
}

#[test]
fn maxmin_matches_grid() {
    assert!(maxmin_oracle::run(2, 1e-2).unwrap() > 0.99);
}

#[test]
fn uplink_levels_runs() {
    let l = uplink_levels::run(2, 500.0, 300).unwrap();
    assert_eq!(l.len(), 4);
    assert!(l.iter().all(|x| *x >= 0.0));
}

#[test]
fn downlink_precoders_runs() {
    let m = downlink_precoders::run(1).unwrap();
    assert_eq!(m.len(), 7);
}

#[test]
fn case_study_examples_run() {
    assert_eq!(full_duplex::run(2).unwrap().len(), 3);
    assert_eq!(noma_pairing::run(2).unwrap().len(), 4);
    let pls = pilot_spoofing::run(2).unwrap();
    assert_eq!(pls.len(), 8);
    assert!(pls.iter().all(|x| x.2 >= 0.0));
    assert_eq!(energy_harvesting::run(2).unwrap().len(), 3);
    assert_eq!(ris_assisted::run(1).unwrap().len(), 6);
}

#[test]
fn config_experiment_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dl.csv");
    let cfg = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/dl_small.json");
    let files = config_experiment::run(&cfg, &out, "se", Some(2)).unwrap();
    assert_eq!(files.len(), 3);
    assert!(files.iter().all(|f| f.exists()));
}
