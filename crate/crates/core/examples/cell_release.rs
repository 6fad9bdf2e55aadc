// The per-cell baseline: every cell gets its own noisy count, and the
// budget needed for a target usefulness follows from the cube size.

use std::sync::Arc;

use dpcube::analysis::cell_usefulness_alpha;
use dpcube::partition::release_cells_only;
use dpcube::synth::smooth_counts;
use dpcube::workload::empirical_usefulness;
use dpcube::{generate_workload, BudgetLedger, CubeSchema, Method, NoiseSource, PrivacyParam};

pub fn run() -> dpcube::Result<()> {
    let schema = Arc::new(CubeSchema::from_shape(&[4, 4])?);
    let x = smooth_counts(schema.clone(), 1_600, 3, 1)?;
    let (epsilon, delta) = (200.0, 0.1);
    let alpha = cell_usefulness_alpha(schema.m(), epsilon, delta);
    println!(
        "alpha for ({epsilon}, {delta})-usefulness on {} cells: {alpha:.4}",
        schema.m()
    );

    let mut ledger = BudgetLedger::new(PrivacyParam::new(alpha)?);
    let mut src = NoiseSource::new(7);
    let h = release_cells_only(&x, PrivacyParam::new(alpha)?, &mut ledger, &mut src)?;
    for (t, y) in x.values().iter().zip(h.cells.values()).take(4) {
        println!("true {t:>5}  noisy {y:>9.2}");
    }
    let w = generate_workload(&schema, 1000, 99, None)?;
    let useful = empirical_usefulness(&w, &x, &h, Method::CellOnly, epsilon)?;
    println!("queries within {epsilon}: {:.1}%", 100.0 * useful);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().expect("cell release example");
}
