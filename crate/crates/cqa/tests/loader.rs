//! Manifest and table loading: the running example, missing-value
//! restrictions, type errors and determinism.

#[path = "../../cqa-core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cqa::manifest::{load_warehouse, write_warehouse, Manifest};
use cqa::Error;
use cqa_core::synth::{random_warehouse, SynthParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn running() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/running/manifest.json")
}

fn fixture_manifest() -> Manifest {
    Manifest::from_json(&std::fs::read_to_string(running()).unwrap()).unwrap()
}

/// Loads the running-example manifest with some table files replaced.
fn load_with(overrides: &[(&str, &str)]) -> Result<cqa_core::Warehouse, Error> {
    let dir = running().parent().unwrap().to_path_buf();
    let overrides: BTreeMap<&str, &str> = overrides.iter().copied().collect();
    fixture_manifest().load_with(|file| match overrides.get(file) {
        Some(text) => Ok(text.to_string()),
        None => Ok(std::fs::read_to_string(dir.join(file)).unwrap()),
    })
}

#[test]
fn running_example_loads() {
    let (_, w) = load_warehouse(&running()).unwrap();
    assert_eq!(w.dim_tables()[0].len(), 4);
    assert_eq!(w.dim_tables()[1].len(), 2);
    assert_eq!(w.fact_table().len(), 4);
    assert_eq!(w, common::fig1_text());
}

#[test]
fn empty_non_key_cell_is_missing() {
    let w = load_with(&[("D2.csv", "K2,A2_1,A2_2\nk2,b1,b2\nk2',,b2\n")]).unwrap();
    let u = w.schema().universe();
    let row = &w.dim_tables()[1][1];
    assert!(!row.defines(u.resolve("A2_1").unwrap()));
    assert!(row.defines(u.resolve("A2_2").unwrap()));
}

#[test]
fn fact_row_missing_a_key_is_rejected() {
    let e = load_with(&[("fact.csv", "K1,K2,M1\nk1,k2,m1\n,k2',m1'\n")]).unwrap_err();
    assert!(matches!(&e, Error::Restriction { file, row: 3, .. } if file == "fact.csv"), "{e}");
    assert_eq!(e.code(), "restriction_violation");
}

#[test]
fn dimension_row_without_non_key_is_rejected() {
    let e = load_with(&[("D1.csv", "K1,A1_1,A1_2\nk1,a1,a2\nk9,,\n")]).unwrap_err();
    assert!(matches!(&e, Error::Restriction { row: 3, .. }), "{e}");
}

#[test]
fn type_errors_report_row_and_column() {
    let mut m = fixture_manifest();
    m.fact.measures[0].ty = String::from("int");
    let dir = running().parent().unwrap().to_path_buf();
    let e = m.load_with(|file| Ok(std::fs::read_to_string(dir.join(file)).unwrap())).unwrap_err();
    assert!(matches!(&e, Error::Type { row: 2, column: 3, expected: "int", .. }), "{e}");
}

#[test]
fn unknown_and_duplicate_columns_are_rejected() {
    for text in ["K2,A2_1,Z\nk2,b1,b2\n", "K2,A2_1,A2_1\nk2,b1,b2\n", "K2,K1\nk2,k1\n"] {
        let e = load_with(&[("D2.csv", text)]).unwrap_err();
        assert!(matches!(&e, Error::Csv { row: 1, .. }), "{text}: {e}");
    }
}

#[test]
fn ragged_rows_are_csv_errors() {
    let e = load_with(&[("D2.csv", "K2,A2_1,A2_2\nk2,b1\n")]).unwrap_err();
    assert_eq!(e.code(), "csv_error", "{e}");
}

#[test]
fn manifest_errors() {
    for text in [
        "{}",
        r#"{"dimensions": [], "fact": {"file": "f", "measures": []}, "extra": 1}"#,
        r#"{"dimensions": [{"name": "D", "key": "K", "file": "d", "attributes": [{"name": "A", "type": "blob"}]}],
            "fact": {"file": "f", "measures": [{"name": "M", "type": "int"}]}}"#,
    ] {
        let e = Manifest::from_json(text).and_then(|m| m.schema().map(|_| ())).unwrap_err();
        assert_eq!(e.code(), "manifest_error", "{text}: {e}");
    }
    let e = load_warehouse(Path::new("/nonexistent/manifest.json")).unwrap_err();
    assert_eq!(e.code(), "io_error");
}

#[test]
fn loading_is_deterministic() {
    let (_, a) = load_warehouse(&running()).unwrap();
    let (_, b) = load_warehouse(&running()).unwrap();
    assert_eq!(a, b);
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn written_warehouses_load_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..30 {
        let p = SynthParams { dims: 1 + i % 3, measure_fds: i % 2 == 0, negative_measures: true, ..SynthParams::default() };
        let w = random_warehouse(&mut rng, &p).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = write_warehouse(&w, dir.path()).unwrap();
        let (m, back) = load_warehouse(&path).unwrap();
        assert_eq!(m.options.measure_fds, p.measure_fds);
        assert_eq!(back, w);
    }
}
