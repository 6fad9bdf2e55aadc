// Laplace noise, the budget ledger and both composition rules.

use dpcube::privacy::{laplace_mechanism, noisy_count, partitioned_noisy_counts};
use dpcube::{BudgetLedger, CubeSchema, NoiseSource, PartitionBox, PrivacyParam};
use std::sync::Arc;

pub fn run() -> dpcube::Result<()> {
    let mut ledger = BudgetLedger::new(PrivacyParam::new(1.0)?);
    let mut src = NoiseSource::new(42);

    let a = noisy_count(120.0, PrivacyParam::new(0.5)?, &mut ledger, &mut src)?;
    println!("noisy count of 120 at alpha 0.5: {a:.3}");
    let b = laplace_mechanism(3.0, 2.0, PrivacyParam::new(0.25)?, "sum query", &mut ledger, &mut src)?;
    println!("sensitivity-2 answer of 3 at alpha 0.25: {b:.3}");

    // disjoint cells cost the largest share once
    let schema = Arc::new(CubeSchema::from_shape(&[4])?);
    let x = dpcube::CellVector::counts(schema.clone(), vec![5.0, 0.0, 7.0, 1.0])?;
    let cells: Vec<_> = (0..4).map(|i| PartitionBox::cell(&schema, i)).collect();
    let noisy = partitioned_noisy_counts(&x, &cells, PrivacyParam::new(0.25)?, "cells", &mut ledger, &mut src)?;
    println!("cells {noisy:.2?}");
    println!("spent {} of {}", ledger.spent(), ledger.total().value());

    match noisy_count(1.0, PrivacyParam::new(0.01)?, &mut ledger, &mut src) {
        Err(e) => println!("refused: {e}"),
        Ok(_) => unreachable!("budget is exhausted"),
    }
    print!("{}", ledger.to_json_lines()?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().expect("laplace example");
}
