mod generate_dataset {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/generate_dataset.rs"
    ));
}
mod svd_signatures {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/svd_signatures.rs"
    ));
}
mod right_factor {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/right_factor.rs"
    ));
}
mod tune_gbrt {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/tune_gbrt.rs"
    ));
}
mod train_and_predict {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/train_and_predict.rs"
    ));
}
mod leave_one_type_out {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/leave_one_type_out.rs"
    ));
}

#[test]
fn generate_dataset_runs() {
    assert_eq!(generate_dataset::run_example().unwrap(), 1000);
}

#[test]
fn svd_signatures_run() {
    let col = svd_signatures::run_example().unwrap();
    assert_eq!(col.len(), 4);
    assert!(col.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn right_factor_runs() {
    assert!(right_factor::run_example().unwrap() < 1e-10);
}

#[test]
fn tune_gbrt_runs() {
    assert!(tune_gbrt::run_example().unwrap() < 0.2);
}

#[test]
fn train_and_predict_runs() {
    assert_eq!(train_and_predict::run_example().unwrap().len(), 3);
}

#[test]
fn leave_one_type_out_runs() {
    assert_eq!(leave_one_type_out::run_example().unwrap(), 5);
}
