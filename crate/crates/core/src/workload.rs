//! Random range-query workloads and release-quality metrics.

use crate::cube::{CellVector, CubeSchema, LinearQuery, PartitionBox};
use crate::error::{Error, Result};
use crate::estimate::{cell_estimates, Method};
use crate::partition::{mass_weighted_variance, population_variance, ReleasedHistogram};
use crate::privacy::NoiseSource;

/// Inclusive bounds on query size in cells.
pub type SizeBand = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub queries: Vec<LinearQuery>,
    pub seed: u64,
    pub size_filter: Option<SizeBand>,
}

impl Workload {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn mean_size(&self) -> f64 {
        self.queries.iter().map(|q| q.size() as f64).sum::<f64>() / self.queries.len() as f64
    }
}

// index of the (lo, hi) pair, lo <= hi < n, enumerated lo-major
fn range_from_index(n: usize, mut k: usize) -> (usize, usize) {
    for lo in 0..n {
        let span = n - lo;
        if k < span {
            return (lo, lo + k);
        }
        k -= span;
    }
    unreachable!("range index out of bounds")
}

fn width_tuples(shape: &[usize]) -> Vec<(Vec<usize>, usize, u64)> {
    // (widths, size, number of placements)
    let mut out = vec![(Vec::new(), 1usize, 1u64)];
    for &n in shape {
        let mut next = Vec::with_capacity(out.len() * n);
        for (w, size, places) in &out {
            for width in 1..=n {
                let mut w2 = w.clone();
                w2.push(width);
                next.push((w2, size * width, places * (n - width + 1) as u64));
            }
        }
        out = next;
    }
    out
}

/// Draws `count` axis-range queries. Each dimension's inclusive range is
/// uniform over all `(lo, hi)` pairs with `lo <= hi`. With `size_filter`,
/// queries are drawn from that distribution conditioned on the size band.
pub fn generate_workload(
    schema: &CubeSchema,
    count: usize,
    seed: u64,
    size_filter: Option<SizeBand>,
) -> Result<Workload> {
    if count == 0 {
        return Err(Error::InvalidParameter("workload needs at least one query".into()));
    }
    let mut src = NoiseSource::new(seed);
    let shape = schema.shape();
    let mut queries = Vec::with_capacity(count);
    match size_filter {
        None => {
            for _ in 0..count {
                let (lo, hi): (Vec<usize>, Vec<usize>) = shape
                    .iter()
                    .map(|&n| range_from_index(n, src.index(n * (n + 1) / 2)))
                    .unzip();
                queries.push(LinearQuery::new(schema, lo, hi)?);
            }
        }
        Some((min, max)) => {
            let tuples: Vec<_> = width_tuples(shape)
                .into_iter()
                .filter(|(_, size, _)| (min..=max).contains(size))
                .collect();
            let total: u64 = tuples.iter().map(|t| t.2).sum();
            if total == 0 {
                return Err(Error::InvalidParameter(format!(
                    "no query of size {min}..={max} fits the cube shape {shape:?}"
                )));
            }
            let cumulative: Vec<u64> = tuples
                .iter()
                .scan(0u64, |acc, t| {
                    *acc += t.2;
                    Some(*acc)
                })
                .collect();
            for _ in 0..count {
                let pick = (src.uniform() * total as f64) as u64;
                let t = cumulative.partition_point(|&c| c <= pick.min(total - 1));
                let widths = &tuples[t].0;
                let lo: Vec<usize> = widths.iter().zip(shape).map(|(&w, &n)| src.index(n - w + 1)).collect();
                let hi: Vec<usize> = lo.iter().zip(widths).map(|(l, w)| l + w - 1).collect();
                queries.push(LinearQuery::new(schema, lo, hi)?);
            }
        }
    }
    Ok(Workload {
        queries,
        seed,
        size_filter,
    })
}

/// Summed-area table over the cube for O(2^d) range sums.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    shape: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<f64>,
}

impl PrefixSums {
    pub fn new(schema: &CubeSchema, values: &[f64]) -> Self {
        let shape = schema.shape().to_vec();
        let nd = shape.len();
        let mut strides = vec![1usize; nd];
        for d in (0..nd.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * shape[d + 1];
        }
        let mut table = values.to_vec();
        for d in 0..nd {
            for i in 0..table.len() {
                if !(i / strides[d]).is_multiple_of(shape[d]) {
                    table[i] += table[i - strides[d]];
                }
            }
        }
        Self { shape, strides, table }
    }

    pub fn sum(&self, b: &PartitionBox) -> f64 {
        let nd = self.shape.len();
        let mut total = 0.0;
        'corners: for mask in 0..(1usize << nd) {
            let mut idx = 0;
            let mut sign = 1.0;
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    if b.lo()[d] == 0 {
                        continue 'corners;
                    }
                    idx += (b.lo()[d] - 1) * self.strides[d];
                    sign = -sign;
                } else {
                    idx += b.hi()[d] * self.strides[d];
                }
            }
            total += sign * self.table[idx];
        }
        total
    }
}

/// Signed error of every query in `w` under `method`.
///
/// Each estimator is a sum of per-cell estimates over the query range, so
/// the error is computed as a range sum of (estimate - truth).
pub fn query_errors(w: &Workload, x: &CellVector, h: &ReleasedHistogram, method: Method) -> Result<Vec<f64>> {
    if x.schema() != h.schema() && **x.schema() != **h.schema() {
        return Err(Error::SchemaMismatch("data and release use different schemas".into()));
    }
    let est = cell_estimates(h, method)?;
    let diff: Vec<f64> = est.iter().zip(x.values()).map(|(e, t)| e - t).collect();
    let sums = PrefixSums::new(x.schema(), &diff);
    w.queries
        .iter()
        .map(|q| {
            q.range().validate(x.schema())?;
            Ok(sums.sum(q.range()))
        })
        .collect()
}

/// Mean absolute error over the workload.
pub fn avg_abs_error(w: &Workload, x: &CellVector, h: &ReleasedHistogram, method: Method) -> Result<f64> {
    let errs = query_errors(w, x, h, method)?;
    Ok(errs.iter().map(|e| e.abs()).sum::<f64>() / errs.len() as f64)
}

/// Fraction of queries answered within `epsilon` of the truth.
pub fn empirical_usefulness(
    w: &Workload,
    x: &CellVector,
    h: &ReleasedHistogram,
    method: Method,
    epsilon: f64,
) -> Result<f64> {
    let errs = query_errors(w, x, h, method)?;
    Ok(errs.iter().filter(|e| e.abs() <= epsilon).count() as f64 / errs.len() as f64)
}

fn box_values(b: &PartitionBox, x: &CellVector) -> Vec<f64> {
    b.cells(x.schema()).iter().map(|&i| x.values()[i]).collect()
}

/// `sum_p n_p V_p` over `boxes`, with `n_p` the number of cells in box `p`
/// and `V_p` the population variance of its true cell counts: the total
/// squared deviation of cell counts from their box means. Merging boxes
/// never lowers it.
pub fn weighted_variance_of_boxes(boxes: &[PartitionBox], x: &CellVector) -> f64 {
    boxes
        .iter()
        .map(|b| {
            let values = box_values(b, x);
            values.len() as f64 * population_variance(&values)
        })
        .sum()
}

/// Variant weighting each box by its true record count instead of its
/// cell count. Unlike [`weighted_variance_of_boxes`] it can drop when two
/// boxes merge.
pub fn mass_weighted_variance_of_boxes(boxes: &[PartitionBox], x: &CellVector) -> f64 {
    boxes.iter().map(|b| mass_weighted_variance(&box_values(b, x))).sum()
}

/// Weighted variance of the release's subcube partition measured on the
/// true data. A cell-only release counts as the per-cell partition.
pub fn weighted_variance(h: &ReleasedHistogram, x: &CellVector) -> f64 {
    if h.has_subcubes() {
        weighted_variance_of_boxes(&h.boxes(), x)
    } else {
        0.0
    }
}

/// Power-of-two size bands `[1,1], [2,3], [4,7], ...` clipped to `m`.
pub fn log2_bands(m: usize) -> Vec<SizeBand> {
    let mut out = Vec::new();
    let mut lo = 1;
    while lo <= m {
        out.push((lo, (2 * lo - 1).min(m)));
        lo *= 2;
    }
    out
}

/// Error summary of one method on one size band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandReport {
    pub method: Method,
    pub band: Option<SizeBand>,
    pub queries: usize,
    pub avg_abs_error: f64,
    pub usefulness: f64,
}

/// Per-band and overall error summaries. Bands with no queries are skipped.
pub fn evaluate_bands(
    w: &Workload,
    x: &CellVector,
    h: &ReleasedHistogram,
    methods: &[Method],
    bands: &[SizeBand],
    epsilon: f64,
) -> Result<Vec<BandReport>> {
    let mut out = Vec::new();
    for &method in methods {
        let errs = query_errors(w, x, h, method)?;
        let summarize = |band: Option<SizeBand>| {
            let picked: Vec<f64> = w
                .queries
                .iter()
                .zip(&errs)
                .filter(|(q, _)| band.is_none_or(|(lo, hi)| (lo..=hi).contains(&q.size())))
                .map(|(_, e)| e.abs())
                .collect();
            (!picked.is_empty()).then(|| BandReport {
                method,
                band,
                queries: picked.len(),
                avg_abs_error: picked.iter().sum::<f64>() / picked.len() as f64,
                usefulness: picked.iter().filter(|e| **e <= epsilon).count() as f64 / picked.len() as f64,
            })
        };
        out.extend(bands.iter().filter_map(|b| summarize(Some(*b))));
        out.extend(summarize(None));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::evaluate_query;
    use crate::cube::fixtures::*;
    use crate::estimate::estimate;
    use crate::partition::{release_dpcube, KdParams, SubcubeCount};
    use crate::privacy::{BudgetLedger, PrivacyParam};
    use std::sync::Arc;

    fn alpha(a: f64) -> PrivacyParam {
        PrivacyParam::new(a).unwrap()
    }

    #[test]
    fn range_index_covers_all_pairs() {
        let n = 4;
        let pairs: Vec<_> = (0..n * (n + 1) / 2).map(|k| range_from_index(n, k)).collect();
        assert_eq!(pairs.len(), 10);
        assert_eq!(pairs[0], (0, 0));
        assert_eq!(pairs[9], (3, 3));
        assert!(pairs.iter().all(|(l, h)| l <= h && *h < n));
    }

    #[test]
    fn workload_basics() {
        let schema = CubeSchema::from_shape(&[8, 8]).unwrap();
        let w = generate_workload(&schema, 100_000, 1, None).unwrap();
        assert_eq!(w.len(), 100_000);
        assert_eq!(w, generate_workload(&schema, 100_000, 1, None).unwrap());
        let full = generate_workload(&schema, 50, 2, Some((64, 64))).unwrap();
        assert!(full.queries.iter().all(|q| q.size() == 64));
        assert!(generate_workload(&schema, 10, 2, Some((65, 70))).is_err());
        assert!(generate_workload(&schema, 0, 2, None).is_err());
        // 7 is prime and > 8? no: widths up to 8, so 7 = 7x1 is reachable
        let sevens = generate_workload(&schema, 20, 3, Some((7, 7))).unwrap();
        assert!(sevens.queries.iter().all(|q| q.size() == 7));
        assert!(generate_workload(&schema, 5, 3, Some((11, 11))).is_err());
    }

    #[test]
    fn banded_draws_match_conditional_distribution() {
        // in a 1x3 cube, sizes 1..=2 come from 5 equally likely ranges
        let schema = CubeSchema::from_shape(&[3]).unwrap();
        let w = generate_workload(&schema, 50_000, 4, Some((1, 2))).unwrap();
        let ones = w.queries.iter().filter(|q| q.size() == 1).count() as f64 / 50_000.0;
        assert!((ones - 0.6).abs() < 0.01, "{ones}");
    }

    #[test]
    fn prefix_sums_match_direct() {
        let schema = Arc::new(CubeSchema::from_shape(&[3, 4, 2]).unwrap());
        let values: Vec<f64> = (0..24).map(|i| (i * 7 % 5) as f64 - 1.5).collect();
        let x = CellVector::new(schema.clone(), values.clone()).unwrap();
        let ps = PrefixSums::new(&schema, &values);
        let w = generate_workload(&schema, 500, 9, None).unwrap();
        for q in &w.queries {
            assert!((ps.sum(q.range()) - evaluate_query(q, &x).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn errors_match_per_query_estimates() {
        let x = example_x();
        let mut ledger = BudgetLedger::new(alpha(1.0));
        let mut src = NoiseSource::new(12);
        let params = KdParams::for_cells(9, 10.0).unwrap();
        let h = release_dpcube(&x, alpha(0.5), alpha(0.5), &params, &mut ledger, &mut src).unwrap();
        let w = generate_workload(x.schema(), 200, 5, None).unwrap();
        for method in Method::ALL {
            let errs = query_errors(&w, &x, &h, method).unwrap();
            for (q, e) in w.queries.iter().zip(&errs) {
                let direct = estimate(q, &h, method).unwrap().value - evaluate_query(q, &x).unwrap();
                assert!((e - direct).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noise_free_release_has_zero_error() {
        let x = example_x();
        let mut ledger = BudgetLedger::new(alpha(2e9));
        let mut src = NoiseSource::new(12);
        let params = KdParams::for_cells(9, 0.0).unwrap();
        let h = release_dpcube(&x, alpha(1e9), alpha(1e9), &params, &mut ledger, &mut src).unwrap();
        let w = generate_workload(x.schema(), 300, 5, None).unwrap();
        for method in Method::ALL {
            assert!(avg_abs_error(&w, &x, &h, method).unwrap() < 1e-6);
            assert_eq!(empirical_usefulness(&w, &x, &h, method, f64::MAX).unwrap(), 1.0);
        }
    }

    #[test]
    fn weighted_variance_examples() {
        let x = example_x();
        let schema = x.schema().clone();
        let single = vec![PartitionBox::full(&schema)];
        // sum of squares 5119, total 141: 5119 - 141^2/9 = 2910
        assert!((weighted_variance_of_boxes(&single, &x) - 2_910.0).abs() < 1e-9);
        // weighted by the 141 records instead: 141 * 2910 / 9 = 45590
        assert!((mass_weighted_variance_of_boxes(&single, &x) - 45_590.0).abs() < 1e-8);
        let cells: Vec<_> = (0..9).map(|i| PartitionBox::cell(&schema, i)).collect();
        assert_eq!(weighted_variance_of_boxes(&cells, &x), 0.0);
        let flat = CellVector::new(schema.clone(), vec![4.0; 9]).unwrap();
        assert_eq!(weighted_variance_of_boxes(&example_boxes(&schema), &flat), 0.0);

        let h = ReleasedHistogram {
            cells: x.clone(),
            subcubes: single
                .into_iter()
                .map(|range| SubcubeCount { range, count: 0.0 })
                .collect(),
            alpha1: alpha(1.0),
            alpha2: Some(alpha(1.0)),
            seed: 0,
        };
        assert!((weighted_variance(&h, &x) - 2_910.0).abs() < 1e-9);
    }

    #[test]
    fn mass_weighting_is_not_merge_monotone() {
        let x = CellVector::new(
            Arc::new(CubeSchema::from_shape(&[2, 3]).unwrap()),
            vec![0.0, 0.0, 34.0, 0.0, 0.0, 17.0],
        )
        .unwrap();
        let whole = vec![PartitionBox::full(x.schema())];
        let rows: Vec<_> = (0..2)
            .map(|r| PartitionBox::new(x.schema(), vec![r, 0], vec![r, 2]).unwrap())
            .collect();
        assert!(mass_weighted_variance_of_boxes(&whole, &x) < mass_weighted_variance_of_boxes(&rows, &x));
        assert!(weighted_variance_of_boxes(&whole, &x) >= weighted_variance_of_boxes(&rows, &x));
    }

    #[test]
    fn bands() {
        assert_eq!(log2_bands(9), vec![(1, 1), (2, 3), (4, 7), (8, 9)]);
        assert_eq!(log2_bands(1), vec![(1, 1)]);
    }

    #[test]
    fn band_reports() {
        let x = example_x();
        let mut ledger = BudgetLedger::new(alpha(1.0));
        let mut src = NoiseSource::new(2);
        let h = release_dpcube(
            &x,
            alpha(0.5),
            alpha(0.5),
            &KdParams::for_cells(9, 0.0).unwrap(),
            &mut ledger,
            &mut src,
        )
        .unwrap();
        let w = generate_workload(x.schema(), 1000, 5, None).unwrap();
        let reports = evaluate_bands(&w, &x, &h, &Method::ALL, &log2_bands(9), 5.0).unwrap();
        let overall: Vec<_> = reports.iter().filter(|r| r.band.is_none()).collect();
        assert_eq!(overall.len(), 3);
        for r in overall {
            assert_eq!(r.queries, 1000);
            assert!((r.avg_abs_error - avg_abs_error(&w, &x, &h, r.method).unwrap()).abs() < 1e-9);
        }
    }
}
