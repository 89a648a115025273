use std::path::PathBuf;

use fcm_cad::eval::{generate_synthetic, load_dataset, read_dataset, write_dataset, DatasetError, DatasetProvenance};
use fcm_cad::model::{ConceptId, Label, Stage};
use fcm_cad::CadModel;

fn write_tmp(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn cid(n: usize) -> ConceptId {
    ConceptId::new(n).unwrap()
}

const THREE_ROWS: &str = "\
case_id,label,gender_male,gender_female,age,smoking,ecg_normal,ecg_abnormal,scintigraphy_normal,scintigraphy_abnormal
P1,diseased,yes,no,63,yes,no,yes,,definitely abnormal
P2,healthy,no,yes,38,no,yes,no,yes,
P3,1,yes,,52,occasionally,,,,little
";

#[test]
fn loads_three_well_formed_rows() {
    let model = CadModel::bundled();
    let path = write_tmp("three_rows.csv", THREE_ROWS);
    let d = load_dataset(&path, model.concepts()).unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d.count(Label::Diseased), 2);
    assert!(matches!(d.provenance(), DatasetProvenance::Ingested { source } if source.ends_with("three_rows.csv")));

    let p1 = &d.records()[0];
    assert_eq!(p1.id.as_deref(), Some("P1"));
    assert_eq!(p1.stage(cid(10)), Stage::Yes);
    assert_eq!(p1.stage(cid(30)), Stage::DefinitelyAbnormal);
    let p3 = &d.records()[2];
    assert_eq!(p3.stage(cid(9)), Stage::Yes);
    assert_eq!(p3.stage(cid(14)), Stage::Occasionally);
    assert_eq!(model.encode_patient(p3).values()[13], 0.5);
}

#[test]
fn age_inconsistent_with_band_is_a_row_error() {
    let model = CadModel::bundled();
    let text = "case_id,label,age,age_50_60\nOK,healthy,55,yes\nBAD,diseased,45,yes\n";
    match read_dataset(text.as_bytes(), model.concepts(), "inline") {
        Err(DatasetError::Rows(rows)) => {
            assert_eq!(rows.len(), 1);
            assert_eq!(rows[0].line, 3);
            assert_eq!(rows[0].case_id.as_deref(), Some("BAD"));
            assert!(rows[0].issues.iter().any(|i| i.field == "age_50_60"), "{:?}", rows[0].issues);
        }
        other => panic!("expected row errors, got {other:?}"),
    }
}

#[test]
fn every_bad_row_is_reported() {
    let model = CadModel::bundled();
    let text = "case_id,label,gender_male,gender_female,smoking\n\
                A,healthy,yes,yes,no\n\
                B,,no,yes,no\n\
                C,diseased,yes,no,often\n\
                D,healthy,yes,no,no\n";
    let Err(DatasetError::Rows(rows)) = read_dataset(text.as_bytes(), model.concepts(), "inline") else {
        panic!("expected row errors");
    };
    let lines: Vec<usize> = rows.iter().map(|r| r.line).collect();
    assert_eq!(lines, vec![2, 3, 4]);
    assert_eq!(rows[1].issues[0].field, "label");
    assert_eq!(rows[2].issues[0].field, "smoking");
}

#[test]
fn blank_scintigraphy_cells_encode_to_zero() {
    let model = CadModel::bundled();
    let text = "case_id,label,gender_male,scintigraphy_normal,scintigraphy_abnormal\nX,diseased,yes,,\n";
    let d = read_dataset(text.as_bytes(), model.concepts(), "inline").unwrap();
    let values = model.encode_patient(&d.records()[0]);
    assert_eq!(values.values()[28], 0.0);
    assert_eq!(values.values()[29], 0.0);

    // and a file without those columns at all is the same dataset
    let bare = "case_id,label,gender_male\nX,diseased,yes\n";
    let e = read_dataset(bare.as_bytes(), model.concepts(), "inline").unwrap();
    assert_eq!(d.records(), e.records());
}

#[test]
fn empty_file_is_an_error() {
    let model = CadModel::bundled();
    let header_only = "case_id,label,gender_male\n";
    assert!(matches!(read_dataset(header_only.as_bytes(), model.concepts(), "x"), Err(DatasetError::Empty)));
    assert!(matches!(read_dataset("".as_bytes(), model.concepts(), "x"), Err(DatasetError::Empty)));
}

#[test]
fn missing_file_is_an_io_error() {
    let model = CadModel::bundled();
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("does-not-exist.csv");
    assert!(matches!(load_dataset(path, model.concepts()), Err(DatasetError::Io(_))));
}

#[test]
fn written_datasets_read_back_identically() {
    let model = CadModel::bundled();
    let d = generate_synthetic(120, 0.5, 11).unwrap();
    let mut out = Vec::new();
    write_dataset(&mut out, &d, model.concepts()).unwrap();
    let back = read_dataset(out.as_slice(), model.concepts(), "round trip").unwrap();
    assert_eq!(back.records(), d.records());
    let header = String::from_utf8(out).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("case_id,label,atypical_angina_pectoris,"));
    assert!(header.ends_with(",scintigraphy_abnormal"));
}

#[test]
fn clinical_names_and_ids_are_accepted_as_headers() {
    let model = CadModel::bundled();
    let text = "id,label,A5,Smoking,scintigraphy abnormal\nQ,healthy,yes,yes,abnormal\n";
    let d = read_dataset(text.as_bytes(), model.concepts(), "inline").unwrap();
    let r = &d.records()[0];
    assert_eq!(r.stage(cid(5)), Stage::Yes);
    assert_eq!(r.stage(cid(14)), Stage::Yes);
    assert_eq!(r.stage(cid(30)), Stage::Abnormal);
}
