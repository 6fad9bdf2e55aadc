// Answering one range query three ways from the same release.

use std::sync::Arc;

use dpcube::cube::evaluate_query;
use dpcube::synth::block_counts;
use dpcube::{
    estimate, release_dpcube, BudgetLedger, CubeSchema, KdParams, LinearQuery, Method, NoiseSource, PrivacyParam,
};

pub fn run() -> dpcube::Result<()> {
    let schema = Arc::new(CubeSchema::from_shape(&[6, 6])?);
    let x = block_counts(schema.clone(), &[2, 3], &[90.0, 30.0, 30.0, 10.0, 10.0, 60.0])?;
    let mut ledger = BudgetLedger::new(PrivacyParam::new(0.5)?);
    let mut src = NoiseSource::new(3);
    let params = KdParams::for_cells(schema.m(), 200.0)?;
    let h = release_dpcube(
        &x,
        PrivacyParam::new(0.1)?,
        PrivacyParam::new(0.4)?,
        &params,
        &mut ledger,
        &mut src,
    )?;

    let q = LinearQuery::new(&schema, vec![1, 1], vec![4, 3])?;
    println!(
        "query {} covers {} cells, true answer {}",
        q.range(),
        q.size(),
        evaluate_query(&q, &x)?
    );
    for method in Method::ALL {
        let e = estimate(&q, &h, method)?;
        println!(
            "{:<8} {:>9.2}  from {} parts",
            method.name(),
            e.value,
            e.breakdown.len()
        );
    }
    let e = estimate(&q, &h, Method::Uniform)?;
    for c in &e.breakdown {
        println!(
            "  box {} overlaps {} cells, contributes {:.2}",
            h.subcubes[c.box_id].range, c.overlap, c.value
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().expect("estimation example");
}
