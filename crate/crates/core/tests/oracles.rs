//! Independent reference computations checked against the library.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dpcube::analysis::{uniform_error_bound, uniform_error_general, uniform_error_mc, SmoothnessParams};
use dpcube::estimate::{ls_cell_estimates, ls_pseudo_inverse, ls_solve_partition};
use dpcube::partition::{kd_partition_traced, query_matrix_of, SubcubeCount};
use dpcube::quadrature::QuadSettings;
use dpcube::workload::weighted_variance_of_boxes;
use dpcube::{CellVector, CubeSchema, KdParams, PartitionBox, PrivacyParam, ReleasedHistogram};

fn cube(shape: &[usize], values: Vec<f64>) -> CellVector {
    CellVector::new(Arc::new(CubeSchema::from_shape(shape).unwrap()), values).unwrap()
}

fn partition_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, n, |r, c| if r == 0 || r == c + 1 { 1.0 } else { 0.0 })
}

#[test]
fn pseudo_inverse_matches_svd() {
    for n in [1usize, 2, 3, 5, 11] {
        let dense = partition_matrix(n).pseudo_inverse(1e-14).unwrap();
        let closed = ls_pseudo_inverse(n);
        assert_eq!(closed.len(), n);
        for (r, row) in closed.iter().enumerate() {
            assert_eq!(row.len(), n + 1);
            for (c, v) in row.iter().enumerate() {
                assert!((v - dense[(r, c)]).abs() < 1e-12, "n={n} ({r},{c})");
            }
        }
    }
}

#[test]
fn partition_solve_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [1usize, 2, 3, 5, 11] {
        for _ in 0..20 {
            let y: Vec<f64> = (0..=n).map(|_| rng.random_range(-50.0..150.0)).collect();
            let h = partition_matrix(n);
            let ht = h.transpose();
            let x = (&ht * &h).lu().solve(&(&ht * DVector::from_vec(y.clone()))).unwrap();
            let got = ls_solve_partition(y[0], &y[1..]);
            for (g, e) in got.iter().zip(x.iter()) {
                assert!((g - e).abs() <= 1e-9 * e.abs().max(1.0));
            }
        }
    }
}

fn random_release(rng: &mut ChaCha8Rng, shape: &[usize]) -> (ReleasedHistogram, CellVector) {
    let m: usize = shape.iter().product();
    let x = cube(shape, (0..m).map(|_| rng.random_range(0..40) as f64).collect());
    let xi0 = rng.random_range(0.0..100.0);
    let (boxes, _) = kd_partition_traced(&x, &KdParams::for_cells(m, xi0).unwrap());
    let noisy: Vec<f64> = x.values().iter().map(|v| v + rng.random_range(-5.0..5.0)).collect();
    let h = ReleasedHistogram {
        cells: cube(shape, noisy),
        subcubes: boxes
            .into_iter()
            .map(|b| {
                let count = x.box_sum(&b) + rng.random_range(-5.0..5.0);
                SubcubeCount { range: b, count }
            })
            .collect(),
        alpha1: PrivacyParam::new(1.0).unwrap(),
        alpha2: Some(PrivacyParam::new(1.0).unwrap()),
        seed: 0,
    };
    (h, x)
}

#[test]
fn per_box_least_squares_equals_global_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for shape in [[4usize, 4], [2, 8], [3, 5], [1, 16]] {
        for _ in 0..10 {
            let (h, _) = random_release(&mut rng, &shape);
            let q = query_matrix_of(&h);
            let m = q.m();
            let rows = q.rows();
            let a = DMatrix::from_fn(rows.len(), m, |r, c| rows[r][c] as f64);
            let mut y: Vec<f64> = h.subcubes.iter().map(|s| s.count).collect();
            y.extend(h.cells.values());
            let at = a.transpose();
            let global = (&at * &a).lu().solve(&(&at * DVector::from_vec(y))).unwrap();
            let local = ls_cell_estimates(&h).unwrap();
            for (l, g) in local.iter().zip(global.iter()) {
                assert!((l - g).abs() <= 1e-9 * g.abs().max(1.0), "{shape:?}: {l} vs {g}");
            }
        }
    }
}

fn brute_cost(x: &CellVector, b: &PartitionBox) -> f64 {
    let schema = x.schema();
    let values: Vec<f64> = (0..schema.m())
        .filter(|&i| b.contains(&schema.coord_of(i)))
        .map(|i| x.values()[i])
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    values.iter().map(|v| v.max(0.0)).sum::<f64>() * var
}

#[test]
fn kd_splits_minimize_weighted_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..40 {
        let nd = rng.random_range(1..=3);
        let shape: Vec<usize> = (0..nd).map(|_| rng.random_range(1..=5)).collect();
        let m: usize = shape.iter().product();
        let values = (0..m).map(|_| rng.random_range(-20.0..60.0_f64).round()).collect();
        let x = cube(&shape, values);
        let (_, trace) = kd_partition_traced(&x, &KdParams::for_cells(m, 1.0).unwrap());
        for s in &trace {
            let widths: Vec<usize> = (0..nd).map(|d| s.parent.width(d)).collect();
            let widest = widths.iter().max().unwrap();
            assert_eq!(s.dim, widths.iter().position(|w| w == widest).unwrap());
            let lo = s.parent.lo()[s.dim];
            let hi = s.parent.hi()[s.dim];
            let costs: Vec<(usize, f64)> = (lo..hi)
                .map(|cut| {
                    let (l, r) = s.parent.split_at(s.dim, cut);
                    (cut, brute_cost(&x, &l) + brute_cost(&x, &r))
                })
                .collect();
            let best = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let tol = 1e-9 * best.abs().max(1.0);
            let chosen = costs.iter().find(|c| c.0 == s.cut).unwrap().1;
            assert!(chosen <= best + tol);
            assert!((s.cost - chosen).abs() <= tol);
            // no cut further left is as good
            assert!(costs.iter().filter(|c| c.0 < s.cut).all(|c| c.1 > best + tol));
        }
    }
}

proptest! {
    #[test]
    fn splitting_a_box_never_raises_weighted_variance(
        values in proptest::collection::vec(0u32..50, 20),
        a in (0usize..4, 0usize..5),
        b in (0usize..4, 0usize..5),
        dim in 0usize..2,
        frac in 0.0f64..1.0,
    ) {
        let x = cube(&[4, 5], values.into_iter().map(f64::from).collect());
        let (lo, hi) = (vec![a.0.min(b.0), a.1.min(b.1)], vec![a.0.max(b.0), a.1.max(b.1)]);
        let whole = PartitionBox::new(x.schema(), lo.clone(), hi.clone()).unwrap();
        prop_assume!(whole.width(dim) > 1);
        let cut = lo[dim] + ((whole.width(dim) - 1) as f64 * frac) as usize;
        let (l, r) = whole.split_at(dim, cut);
        let merged = weighted_variance_of_boxes(std::slice::from_ref(&whole), &x);
        let split = weighted_variance_of_boxes(&[l, r], &x);
        prop_assert!(merged >= split - 1e-9 * merged.max(1.0));
    }
}

#[test]
fn smooth_bound_dominates_simulated_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for i in 0..200 {
        let n_p = rng.random_range(1..=15);
        let s = rng.random_range(1..=n_p);
        let gamma = rng.random_range(0.0..10.0);
        let base = rng.random_range(0.0..100.0);
        let x: Vec<f64> = (0..n_p).map(|_| base + rng.random_range(0.0..=gamma)).collect();
        let alpha2 = rng.random_range(0.05..1.0);
        let p = SmoothnessParams::new(gamma, n_p, s, 0.05, alpha2, 0.0).unwrap();
        let mc = uniform_error_mc(&x, s, p.alpha2, 4000, i).unwrap();
        assert!(mc.mean <= uniform_error_bound(&p) + 3.0 * mc.se, "instance {i}");
    }
}

fn laplace(rng: &mut ChaCha8Rng, b: f64) -> f64 {
    // difference of two exponentials
    let e1: f64 = -(1.0 - rng.random::<f64>()).ln();
    let e2: f64 = -(1.0 - rng.random::<f64>()).ln();
    b * (e1 - e2)
}

#[test]
fn general_uniform_error_matches_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let quad = QuadSettings::default();
    for (s, eta, alpha1) in [
        (1, 0.0, 0.05),
        (3, 5.0, 0.05),
        (5, 40.0, 0.1),
        (11, 2.0, 0.5),
        (2, -10.0, 0.2),
    ] {
        let p = SmoothnessParams::new(5.0, 11, s, alpha1, 0.15, eta).unwrap();
        let exact = uniform_error_general(&p, &quad).unwrap();
        let trials = 100_000;
        let samples: Vec<f64> = (0..trials)
            .map(|_| (eta + (0..s).map(|_| laplace(&mut rng, 1.0 / alpha1)).sum::<f64>()).abs())
            .collect();
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * se,
            "s={s} eta={eta}: {exact} vs {mean} +- {se}"
        );
    }
}
