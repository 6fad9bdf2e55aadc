// An ID3 tree trained on a private release versus one trained on the
// exact counts.

use std::sync::Arc;

use dpcube::apps::{train_id3, train_id3_from_histogram, LabeledSchema};
use dpcube::cube::AttributeDomain;
use dpcube::{release_dpcube, BudgetLedger, CellVector, CubeSchema, KdParams, Method, NoiseSource, PrivacyParam};

fn bins(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

pub fn run() -> dpcube::Result<()> {
    let schema = Arc::new(CubeSchema::new(vec![
        AttributeDomain::categorical("education", bins(&["school", "college", "graduate"]))?,
        AttributeDomain::categorical("hours", bins(&["part", "full"]))?,
        AttributeDomain::categorical("salary", bins(&["low", "high"]))?,
    ])?);
    // salary is high exactly for full-time college or graduate workers
    let counts = (0..schema.m())
        .map(|i| {
            let c = schema.coord_of(i);
            let high = c[0] >= 1 && c[1] == 1;
            if (c[2] == 1) == high {
                300.0
            } else {
                0.0
            }
        })
        .collect();
    let x = CellVector::counts(schema.clone(), counts)?;
    let ls = LabeledSchema::with_class(&schema, "salary")?;
    let exact = train_id3(&x, &ls, 2)?;
    println!("exact tree:\n{}", serde_json::to_string_pretty(&exact.root)?);

    let mut ledger = BudgetLedger::new(PrivacyParam::new(1.0)?);
    let params = KdParams::for_cells(schema.m(), 64.0)?;
    let h = release_dpcube(
        &x,
        PrivacyParam::new(0.25)?,
        PrivacyParam::new(0.75)?,
        &params,
        &mut ledger,
        &mut NoiseSource::new(5),
    )?;
    let private = train_id3_from_histogram(&h, &ls, 2, Method::LeastSquares)?;
    println!("private tree matches exact tree: {}", private == exact);
    println!(
        "accuracy exact {:.3}, private {:.3}",
        exact.accuracy(&x)?,
        private.accuracy(&x)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().expect("classification example");
}
