use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sublevel_core::harness::{report, run, MANIFEST_FILE};
use sublevel_core::{Error, ExperimentConfig, ResultRecord};

const SMOKE: [(&str, &str); 6] = [
    ("index", include_str!("../../../configs/smoke/index.json")),
    ("fourier", include_str!("../../../configs/smoke/fourier.json")),
    ("surface", include_str!("../../../configs/smoke/surface.json")),
    ("lattice", include_str!("../../../configs/smoke/lattice.json")),
    ("stability", include_str!("../../../configs/smoke/stability.json")),
    ("vdc", include_str!("../../../configs/smoke/vdc.json")),
];

const DISK_12: &str = r#"{"name": "disk", "seed": 1, "experiment":
    {"kind": "lattice", "domain": {"kind": "superellipsoid", "exponents": [1, 1]}, "s_grid": [1, 2]}}"#;

fn csv_bodies(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn listed(dir: &Path) -> ResultRecord {
    serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

#[test]
fn lattice_counts_reach_the_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(DISK_12).unwrap();
    let rec = run(&cfg, Some(tmp.path()), 2).unwrap();
    assert_eq!(rec.kind, "lattice");
    let text = fs::read_to_string(tmp.path().join("counts.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["s", "N", "volume_term", "discrepancy"]);
    let n: Vec<String> = rdr.records().map(|r| r.unwrap()[1].to_string()).collect();
    assert_eq!(n, ["5", "13"]);
    assert!(!text.contains('\r'));
}

#[test]
fn invalid_config_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = ExperimentConfig::from_json(&DISK_12.replace("[1, 2]", "[]")).unwrap();
    let err = run(&cfg, Some(&out), 1).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
    assert!(ExperimentConfig::from_json("{\"name\": 1}").unwrap_err().exit_code() == 2);
}

#[test]
fn validation_lists_every_bad_field() {
    let bad = r#"{"name": "x", "seed": 1, "experiment": {"kind": "fourier",
        "domain": {"kind": "superellipsoid", "exponents": [1, 1]},
        "direction": [0, 0], "r_grid": [10, 10]}}"#;
    let msg = ExperimentConfig::from_json(bad).unwrap().validate().unwrap_err().to_string();
    assert!(msg.contains("direction") && msg.contains("r_grid"), "{msg}");
}

#[test]
fn config_round_trip() {
    for (kind, text) in SMOKE {
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.experiment.kind(), kind);
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
    }
}

#[test]
fn every_kind_is_deterministic_and_fully_listed() {
    for (kind, text) in SMOKE {
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let mut bodies = Vec::new();
        for workers in [1, 4, 8] {
            let tmp = tempfile::tempdir().unwrap();
            let rec = run(&cfg, Some(tmp.path()), workers).unwrap();
            assert!(rec.error.is_none(), "{kind}: {:?}", rec.error);
            assert_eq!(rec.workers, workers);
            let on_disk = listed(tmp.path());
            assert_eq!(on_disk, rec);
            let mut files: Vec<String> = fs::read_dir(tmp.path())
                .unwrap()
                .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
                .collect();
            files.sort();
            assert_eq!(files, rec.files, "{kind}");
            assert!(files.iter().any(|f| f == "plot.csv"));
            assert!(!rec.checks.is_empty(), "{kind}");
            assert!(rec.checks.iter().all(|c| c.pass == Some(true)), "{kind}: {:?}", rec.checks);
            assert_eq!(rec.exit_code(), 0);
            bodies.push(csv_bodies(tmp.path()));
        }
        assert!(!bodies[0].is_empty());
        assert_eq!(bodies[0], bodies[1], "{kind}: workers 1 vs 4");
        assert_eq!(bodies[0], bodies[2], "{kind}: workers 1 vs 8");
    }
}

#[test]
fn smoke_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(SMOKE[1].1).unwrap();
    let rec = run(&cfg, Some(tmp.path()), 4).unwrap();
    let delta = rec.checks.iter().find(|c| c.quantity == "decay exponent").unwrap();
    assert_eq!(delta.predicted, "5/4", "{:?}", delta);
    assert!(delta.measured.is_some());
}

#[test]
fn reports_aggregate_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let cfg = ExperimentConfig::from_json(SMOKE[3].1).unwrap();
    run(&cfg, Some(&a), 1).unwrap();
    run(&cfg, Some(&b), 1).unwrap();
    let s = report(&[&a, &b]);
    assert_eq!(s.rows.len(), 2);
    assert!(s.rows.iter().all(|r| r.status == "PASS"), "{}", s.markdown);
    assert_eq!(s.exit_code, 0);
    assert_eq!(s.markdown.matches("PASS").count(), 2);

    // forge a failing manifest from a passing one
    let c = tmp.path().join("c");
    run(&cfg, Some(&c), 1).unwrap();
    let mut rec = listed(&c);
    rec.checks = listed(&a).checks;
    for ch in &mut rec.checks {
        ch.pass = Some(false);
    }
    rec.pass = false;
    let failing = c.join(MANIFEST_FILE);
    fs::write(&failing, serde_json::to_vec(&rec).unwrap()).unwrap();
    let s = report(&[a.join(MANIFEST_FILE), failing]);
    assert_eq!(s.exit_code, 1);
    assert_eq!(s.rows.len(), 2);
    assert!(s.rows.iter().any(|r| r.status == "FAIL"));

    let corrupt = tmp.path().join("corrupt.json");
    fs::write(&corrupt, "{ not json").unwrap();
    let s = report(&[a.clone(), corrupt.clone(), tmp.path().join("missing")]);
    assert_eq!(s.rows.len(), 1);
    assert_eq!(s.unreadable.len(), 2);
    assert!(s.markdown.contains("corrupt.json"));
    assert_eq!(report(&[corrupt]).exit_code, 2);

    let empty = report::<&Path>(&[]);
    assert!(empty.rows.is_empty());
    assert_eq!(empty.exit_code, 0);
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for sub in ["smoke", "acceptance"] {
        for entry in fs::read_dir(root.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            let cfg = ExperimentConfig::from_json(&fs::read_to_string(&path).unwrap())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 20);
}
