// Two-phase release of a blocky cube: phase one finds near-uniform boxes
// from noisy cells, phase two counts each box.

use std::sync::Arc;

use dpcube::partition::kd_partition_traced;
use dpcube::synth::block_counts;
use dpcube::{release_dpcube, BudgetLedger, CubeSchema, KdParams, NoiseSource, PrivacyParam};

pub fn run() -> dpcube::Result<()> {
    let schema = Arc::new(CubeSchema::from_shape(&[8, 8])?);
    let x = block_counts(schema.clone(), &[2, 2], &[400.0, 40.0, 40.0, 0.0])?;

    // the splits an exact histogram would produce
    let (boxes, trace) = kd_partition_traced(&x, &KdParams::for_cells(schema.m(), 1.0)?);
    for s in &trace {
        println!(
            "depth {} split {} on d{} after bin {} (cost {:.1})",
            s.depth, s.parent, s.dim, s.cut, s.cost
        );
    }
    println!("{} boxes without noise", boxes.len());

    let (alpha1, alpha2) = (PrivacyParam::new(0.05)?, PrivacyParam::new(0.15)?);
    let params = KdParams::for_cells(schema.m(), 4.0 / (0.05 * 0.05))?;
    let mut ledger = BudgetLedger::new(PrivacyParam::new(0.2)?);
    let mut src = NoiseSource::new(11);
    let h = release_dpcube(&x, alpha1, alpha2, &params, &mut ledger, &mut src)?;
    for s in &h.subcubes {
        println!(
            "{:<16} {:>3} cells  true {:>6}  noisy {:>9.1}",
            s.range.to_string(),
            s.range.n_cells(),
            x.box_sum(&s.range),
            s.count
        );
    }
    for e in ledger.log() {
        println!("{}: {} ({:?})", e.label, e.alpha, e.kind);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().expect("dpcube example");
}
