#![allow(dead_code)]

use std::path::PathBuf;

use treexp_core::{load_model, Instance, Model};

pub fn testdata(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata").join(name)
}

pub fn fixture(name: &str) -> (Model, Instance) {
    let model = load_model(&std::fs::read_to_string(testdata(&format!("{name}.json"))).unwrap()).unwrap();
    let stem = name.split('_').next().unwrap();
    let instance = Instance::load(&testdata(&format!("{stem}_instance.json"))).unwrap();
    (model, instance)
}

pub fn dt_example() -> (Model, Instance) {
    fixture("dt_example")
}

pub fn rf_example() -> (Model, Instance) {
    fixture("rf_example")
}

pub fn bt_example() -> (Model, Instance) {
    fixture("bt_example")
}
