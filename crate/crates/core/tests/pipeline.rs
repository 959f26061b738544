use std::io::Cursor;

use chainsentry::collab::train;
use chainsentry::dataset::{generate_synthetic, load_csv, write_csv, write_csv_to, RecordReader};
use chainsentry::dbn::{load_model, save_model};
use chainsentry::detect::Detector;
use chainsentry::eval::{evaluate_model, EvalReport};
use chainsentry::experiment::prepare;
use chainsentry::{CollabConfig, Scheme, SynthConfig, TrainConfig};

#[test]
fn generate_train_evaluate_detect() {
    let nodes = generate_synthetic(&SynthConfig::uniform(2, &[300, 40, 40, 40], 6, 21)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("node1.csv");
    write_csv(&nodes[0], &path).unwrap();
    assert_eq!(load_csv(&path, Some(6), 4).unwrap().samples(), nodes[0].samples());

    let data = prepare(&nodes, 0.2, 21).unwrap();
    let train_cfg = TrainConfig {
        learning_rate: 0.1,
        iterations: 300,
        hidden: vec![12],
        ..TrainConfig::default()
    };
    let out = train(Scheme::Pclm, &data.train, &CollabConfig::new(train_cfg, 2), None, &mut |_, _| {}).unwrap();
    let model = &out.models[0];

    let model_path = dir.path().join("model.bndm");
    save_model(model, &model_path).unwrap();
    let model = load_model(&model_path).unwrap();
    assert!(model.bitwise_eq(&out.models[0]));

    let cm = evaluate_model(&model, &data.global_test).unwrap();
    let report = EvalReport::new("pclm", None, &cm).unwrap();
    assert!(report.accuracy > 0.85, "accuracy {}", report.accuracy);

    // The detector scales raw records itself, so feed it the unscaled test split.
    let raw_test = chainsentry::experiment::split_node(&nodes[0], 0.2, 21, 1).unwrap().1;
    let mut csv = Vec::new();
    write_csv_to(&raw_test, &mut csv).unwrap();
    let reader = RecordReader::new(Cursor::new(csv), "test", Some(6), 4).unwrap();
    let mut alerts = Vec::new();
    let summary = Detector::new(&model, Some(&data.scaler))
        .unwrap()
        .run(reader, &mut alerts)
        .unwrap();
    assert_eq!(summary.records as usize, raw_test.len());
    assert_eq!(String::from_utf8(alerts).unwrap().lines().count(), raw_test.len());
    let expected = EvalReport::new("detect", None, &evaluate_model(&model, &data.test[0]).unwrap()).unwrap();
    let got = summary.metrics.unwrap();
    assert_eq!(got.confusion, expected.confusion);
    assert!((got.accuracy - expected.accuracy).abs() <= 1e-12);
}

#[test]
fn corrupt_model_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.bndm");
    std::fs::write(&path, b"BNDM\x01garbage").unwrap();
    assert!(load_model(&path).is_err());
    std::fs::write(&path, b"not a model").unwrap();
    assert!(load_model(&path).is_err());
}
