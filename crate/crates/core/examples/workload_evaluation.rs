// Random-workload comparison of the two-phase release against the
// per-cell baseline, split by query size.

use std::sync::Arc;

use dpcube::partition::release_cells_only;
use dpcube::synth::smooth_counts;
use dpcube::workload::{evaluate_bands, log2_bands, weighted_variance};
use dpcube::{
    generate_workload, release_dpcube, BudgetLedger, CubeSchema, KdParams, Method, NoiseSource, PrivacyParam,
};

pub fn run() -> dpcube::Result<()> {
    let schema = Arc::new(CubeSchema::from_shape(&[8, 8])?);
    let x = smooth_counts(schema.clone(), 10_000, 2, 4)?;
    let alpha = PrivacyParam::new(0.2)?;

    let mut ledger = BudgetLedger::new(alpha);
    let params = KdParams::for_cells(schema.m(), 4.0 / (0.05 * 0.05))?;
    let dp = release_dpcube(
        &x,
        PrivacyParam::new(0.05)?,
        PrivacyParam::new(0.15)?,
        &params,
        &mut ledger,
        &mut NoiseSource::new(1),
    )?;
    let mut ledger = BudgetLedger::new(alpha);
    let cells = release_cells_only(&x, alpha, &mut ledger, &mut NoiseSource::new(1))?;
    println!(
        "{} boxes, weighted variance {:.1}",
        dp.subcubes.len(),
        weighted_variance(&dp, &x)
    );

    let w = generate_workload(&schema, 20_000, 8, None)?;
    let bands = log2_bands(schema.m());
    println!("{:<8} {:<8} {:>6} {:>10}", "release", "method", "band", "avg |err|");
    for (name, h, methods) in [
        ("dpcube", &dp, &[Method::Uniform, Method::LeastSquares][..]),
        ("cells", &cells, &[Method::CellOnly][..]),
    ] {
        for r in evaluate_bands(&w, &x, h, methods, &bands, 100.0)? {
            let band = r.band.map_or("all".to_string(), |(a, b)| format!("{a}-{b}"));
            println!("{name:<8} {:<8} {band:>6} {:>10.2}", r.method.name(), r.avg_abs_error);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().expect("workload example");
}
