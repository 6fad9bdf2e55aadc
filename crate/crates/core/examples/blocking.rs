// Blocking two datasets with the boxes of a release and measuring how
// many record pairs no longer need comparing.

use std::sync::Arc;

use dpcube::apps::{assign_blocks, reduction_ratio, BlockAssignment};
use dpcube::synth::{block_counts, expand_records};
use dpcube::{release_dpcube, BudgetLedger, CubeSchema, KdParams, NoiseSource, PrivacyParam};

pub fn run() -> dpcube::Result<()> {
    let schema = Arc::new(CubeSchema::from_shape(&[4, 4])?);
    let left = block_counts(schema.clone(), &[2, 2], &[30.0, 5.0, 5.0, 20.0])?;
    let right = block_counts(schema.clone(), &[2, 2], &[10.0, 10.0, 0.0, 25.0])?;

    let mut ledger = BudgetLedger::new(PrivacyParam::new(1.0)?);
    let params = KdParams::for_cells(schema.m(), 20.0)?;
    let h = release_dpcube(
        &left,
        PrivacyParam::new(0.5)?,
        PrivacyParam::new(0.5)?,
        &params,
        &mut ledger,
        &mut NoiseSource::new(2),
    )?;

    let a = assign_blocks(&expand_records(&left)?, &expand_records(&right)?, &h)?;
    for ((b, n), m) in a.blocks().iter().zip(a.first_counts()).zip(a.second_counts()) {
        println!("block {b}: {n} x {m}");
    }
    println!(
        "{} blocks, reduction ratio {:.4}",
        a.blocks().len(),
        reduction_ratio(&a)?
    );

    let whole = BlockAssignment::from_counts(vec![dpcube::PartitionBox::full(&schema)], &left, &right)?;
    println!("single block: {}", reduction_ratio(&whole)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().expect("blocking example");
}
