mod running_example {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/running_example.rs"));
}

mod laplace_mechanism {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/laplace_mechanism.rs"));
}

mod cell_release {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/cell_release.rs"));
}

mod dpcube_release {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/dpcube_release.rs"));
}

mod query_estimation {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/query_estimation.rs"));
}

mod error_analysis {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/error_analysis.rs"));
}

mod workload_evaluation {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/workload_evaluation.rs"));
}

mod classification {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/classification.rs"));
}

mod blocking {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/blocking.rs"));
}

#[test]
fn running_example_runs() {
    running_example::run().expect("running example example should run");
}

#[test]
fn laplace_mechanism_runs() {
    laplace_mechanism::run().expect("laplace mechanism example should run");
}

#[test]
fn cell_release_runs() {
    cell_release::run().expect("cell release example should run");
}

#[test]
fn dpcube_release_runs() {
    dpcube_release::run().expect("dpcube release example should run");
}

#[test]
fn query_estimation_runs() {
    query_estimation::run().expect("query estimation example should run");
}

#[test]
fn error_analysis_runs() {
    error_analysis::run().expect("error analysis example should run");
}

#[test]
fn workload_evaluation_runs() {
    workload_evaluation::run().expect("workload evaluation example should run");
}

#[test]
fn classification_runs() {
    classification::run().expect("classification example should run");
}

#[test]
fn blocking_runs() {
    blocking::run().expect("blocking example should run");
}
