//! Release strategies: the per-cell baseline, kd-tree v-optimal
//! partitioning, and the two-phase pipeline that combines them.

use std::sync::Arc;

use crate::cube::{CellVector, CubeSchema, LinearQuery, PartitionBox, QueryMatrix};
use crate::error::{Error, Result};
use crate::privacy::{partitioned_noisy_counts, BudgetLedger, NoiseSource, PrivacyParam};

/// Stopping rules for [`kd_partition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdParams {
    /// A box is split only while its cell-count variance exceeds this.
    pub xi0: f64,
    /// A box is split only while it holds more than this many cells.
    pub min_cells: usize,
    pub max_depth: usize,
}

impl KdParams {
    pub fn new(xi0: f64, min_cells: usize, max_depth: usize) -> Result<Self> {
        if xi0.is_nan() || xi0 < 0.0 || min_cells < 1 || max_depth < 1 {
            return Err(Error::InvalidParameter(format!(
                "kd params need xi0 >= 0, min_cells >= 1, max_depth >= 1 (got {xi0}, {min_cells}, {max_depth})"
            )));
        }
        Ok(Self {
            xi0,
            min_cells,
            max_depth,
        })
    }

    /// Defaults for a cube of `m` cells: `min_cells = 1`,
    /// `max_depth = ceil(log2 m) + 2`.
    pub fn for_cells(m: usize, xi0: f64) -> Result<Self> {
        Self::new(xi0, 1, default_max_depth(m))
    }
}

pub fn default_max_depth(m: usize) -> usize {
    let mut depth = 0;
    while (1usize << depth) < m {
        depth += 1;
    }
    depth + 2
}

/// Population variance; exactly zero when every value is equal.
pub fn population_variance(values: &[f64]) -> f64 {
    let Some(first) = values.first() else { return 0.0 };
    if values.iter().all(|v| v == first) {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// `n * V` for one box, with `n` the box's data mass (negative noisy counts
/// count as zero mass).
pub fn mass_weighted_variance(values: &[f64]) -> f64 {
    let mass: f64 = values.iter().map(|v| v.max(0.0)).sum();
    mass * population_variance(values)
}

/// One split made by [`kd_partition_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDecision {
    pub parent: PartitionBox,
    pub depth: usize,
    pub dim: usize,
    /// Last bin index (inclusive) of the left child along `dim`.
    pub cut: usize,
    pub cost: f64,
}

/// Dimension with the largest bin range; lowest index on ties.
pub fn widest_dimension(b: &PartitionBox) -> usize {
    let mut best = 0;
    for d in 1..b.lo().len() {
        if b.width(d) > b.width(best) {
            best = d;
        }
    }
    best
}

/// Cheapest cut of `b` along `dim` by cumulative weighted variance; the
/// leftmost cut wins ties. Returns `(cut, cost)`.
fn best_cut(dc: &CellVector, b: &PartitionBox, dim: usize) -> (usize, f64) {
    let schema = dc.schema();
    let width = b.width(dim);
    let mut slices: Vec<Vec<f64>> = vec![Vec::with_capacity(b.n_cells() / width); width];
    for i in b.cells(schema) {
        let c = schema.coord_of(i);
        slices[c[dim] - b.lo()[dim]].push(dc.values()[i]);
    }
    let mut best: Option<(usize, f64)> = None;
    let mut left: Vec<f64> = Vec::with_capacity(b.n_cells());
    for k in 0..width - 1 {
        left.extend_from_slice(&slices[k]);
        let right: Vec<f64> = slices[k + 1..].concat();
        let cost = mass_weighted_variance(&left) + mass_weighted_variance(&right);
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((b.lo()[dim] + k, cost));
        }
    }
    best.expect("box with width >= 2 has a cut")
}

/// Partitions the cube of `dc` into boxes of near-uniform counts.
///
/// `dc` is the phase-one noisy cell vector; the raw data is never read here.
pub fn kd_partition(dc: &CellVector, params: &KdParams) -> Vec<PartitionBox> {
    kd_partition_traced(dc, params).0
}

/// [`kd_partition`] plus the list of split decisions in the order made.
pub fn kd_partition_traced(dc: &CellVector, params: &KdParams) -> (Vec<PartitionBox>, Vec<SplitDecision>) {
    let schema = dc.schema();
    let mut leaves = Vec::new();
    let mut trace = Vec::new();
    // depth-first, left child first
    let mut stack = vec![(PartitionBox::full(schema), 0usize)];
    while let Some((b, depth)) = stack.pop() {
        let values: Vec<f64> = b.cells(schema).iter().map(|&i| dc.values()[i]).collect();
        let splittable =
            b.n_cells() > params.min_cells && depth < params.max_depth && population_variance(&values) > params.xi0;
        if !splittable {
            leaves.push(b);
            continue;
        }
        let dim = widest_dimension(&b);
        let (cut, cost) = best_cut(dc, &b, dim);
        let (left, right) = b.split_at(dim, cut);
        trace.push(SplitDecision {
            parent: b,
            depth,
            dim,
            cut,
            cost,
        });
        stack.push((right, depth + 1));
        stack.push((left, depth + 1));
    }
    (leaves, trace)
}

/// A box of the subcube histogram with its noisy count.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcubeCount {
    pub range: PartitionBox,
    pub count: f64,
}

/// The released cell histogram and (for two-phase releases) the subcube
/// histogram, with the privacy parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReleasedHistogram {
    pub cells: CellVector,
    pub subcubes: Vec<SubcubeCount>,
    pub alpha1: PrivacyParam,
    pub alpha2: Option<PrivacyParam>,
    pub seed: u64,
}

impl ReleasedHistogram {
    pub fn schema(&self) -> &Arc<CubeSchema> {
        self.cells.schema()
    }

    pub fn has_subcubes(&self) -> bool {
        !self.subcubes.is_empty()
    }

    pub fn boxes(&self) -> Vec<PartitionBox> {
        self.subcubes.iter().map(|s| s.range.clone()).collect()
    }

    /// Checks the subcube boxes form a disjoint cover.
    pub fn validate(&self) -> Result<()> {
        if self.has_subcubes() {
            crate::privacy::check_partition(self.schema(), &self.boxes())?;
        }
        Ok(())
    }
}

/// Per-cell noisy counts, `alpha` charged once by parallel composition.
pub fn release_cell_histogram(
    x: &CellVector,
    alpha: PrivacyParam,
    ledger: &mut BudgetLedger,
    src: &mut NoiseSource,
) -> Result<CellVector> {
    let schema = x.schema();
    let cells: Vec<PartitionBox> = (0..schema.m()).map(|i| PartitionBox::cell(schema, i)).collect();
    let noisy = partitioned_noisy_counts(x, &cells, alpha, "cell histogram", ledger, src)?;
    CellVector::new(schema.clone(), noisy)
}

/// Wraps a baseline cell release as a [`ReleasedHistogram`] with no subcubes.
pub fn release_cells_only(
    x: &CellVector,
    alpha: PrivacyParam,
    ledger: &mut BudgetLedger,
    src: &mut NoiseSource,
) -> Result<ReleasedHistogram> {
    let seed = src.seed();
    let cells = release_cell_histogram(x, alpha, ledger, src)?;
    Ok(ReleasedHistogram {
        cells,
        subcubes: Vec::new(),
        alpha1: alpha,
        alpha2: None,
        seed,
    })
}

/// Two-phase release: noisy cell histogram with `alpha1`, kd partitioning of
/// that noisy histogram, then one noisy count per box of the original data
/// with `alpha2`.
pub fn release_dpcube(
    x: &CellVector,
    alpha1: PrivacyParam,
    alpha2: PrivacyParam,
    params: &KdParams,
    ledger: &mut BudgetLedger,
    src: &mut NoiseSource,
) -> Result<ReleasedHistogram> {
    let needed = alpha1.value() + alpha2.value();
    if !ledger.can_afford(needed) {
        return Err(Error::BudgetExhausted {
            requested: needed,
            remaining: ledger.remaining(),
        });
    }
    let seed = src.seed();
    let schema = x.schema();
    let cell_boxes: Vec<PartitionBox> = (0..schema.m()).map(|i| PartitionBox::cell(schema, i)).collect();
    let noisy = partitioned_noisy_counts(x, &cell_boxes, alpha1, "phase I cells", ledger, src)?;
    let cells = CellVector::new(schema.clone(), noisy)?;

    let boxes = kd_partition(&cells, params);
    let counts = partitioned_noisy_counts(x, &boxes, alpha2, "phase II subcubes", ledger, src)?;
    let subcubes = boxes
        .into_iter()
        .zip(counts)
        .map(|(range, count)| SubcubeCount { range, count })
        .collect();
    Ok(ReleasedHistogram {
        cells,
        subcubes,
        alpha1,
        alpha2: Some(alpha2),
        seed,
    })
}

/// The release's query matrix: one row per subcube box followed by the
/// `m x m` identity of the cell histogram.
pub fn query_matrix_of(h: &ReleasedHistogram) -> QueryMatrix {
    let schema = h.schema();
    let m = schema.m();
    let mut rows: Vec<Vec<u8>> = h
        .subcubes
        .iter()
        .map(|s| LinearQuery::from_box(s.range.clone()).to_vector(schema))
        .collect();
    for i in 0..m {
        let mut r = vec![0u8; m];
        r[i] = 1;
        rows.push(r);
    }
    QueryMatrix::new(m, rows).expect("box and identity rows are nonzero 0/1 rows")
}
