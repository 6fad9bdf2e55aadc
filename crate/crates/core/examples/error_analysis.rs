// Error measures of the estimators as functions of query size.

use dpcube::analysis::{
    bilateral_gamma_pdf, laplace_sum_tail_bound, simulate_sweep, uniform_error_bound, SmoothnessParams, SweepKind,
};
use dpcube::quadrature::QuadSettings;
use dpcube::PrivacyParam;

pub fn run() -> dpcube::Result<()> {
    let alpha = PrivacyParam::new(0.5)?;
    for n in [1, 2, 3] {
        println!(
            "density of a {n}-fold Laplace sum at 1: {:.6}",
            bilateral_gamma_pdf(n, alpha, 1.0)?
        );
    }
    println!(
        "Pr[sum of 5 |Lap(1)| <= 40] >= {:.4}",
        laplace_sum_tail_bound(5, 1.0, 40.0)
    );

    let base = SmoothnessParams::table_defaults(5)?;
    println!("smooth bound at s = 5: {:.4}", uniform_error_bound(&base));
    let rows = simulate_sweep(SweepKind::QuerySize, &base, 5_000, 1, &QuadSettings::default())?;
    println!("{:>3} {:>10} {:>10} {:>10}", "s", "E_H", "max E_H", "E_LS");
    for r in rows {
        println!("{:>3} {:>10.3} {:>10.3} {:>10.3}", r.value, r.e_h, r.max_e_h, r.e_ls);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().expect("analysis example");
}
