//! Blocking for record linkage: records of two datasets that fall into
//! different blocks are never compared.

use crate::cube::{CellVector, CubeSchema, PartitionBox};
use crate::error::{Error, Result};
use crate::partition::ReleasedHistogram;
use crate::privacy::check_partition;

/// Blocks with the number of records each dataset puts in them.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAssignment {
    blocks: Vec<PartitionBox>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl BlockAssignment {
    pub fn new(schema: &CubeSchema, blocks: Vec<PartitionBox>, first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        check_partition(schema, &blocks)?;
        if first.len() != blocks.len() || second.len() != blocks.len() {
            return Err(Error::InvalidParameter(
                "one count per block and dataset expected".into(),
            ));
        }
        if first.iter().chain(&second).any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidParameter(
                "block counts must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { blocks, first, second })
    }

    /// Blocks filled with the box sums of two count vectors.
    pub fn from_counts(blocks: Vec<PartitionBox>, x1: &CellVector, x2: &CellVector) -> Result<Self> {
        if x1.schema() != x2.schema() && **x1.schema() != **x2.schema() {
            return Err(Error::SchemaMismatch("datasets use different schemas".into()));
        }
        let first = blocks.iter().map(|b| x1.box_sum(b)).collect();
        let second = blocks.iter().map(|b| x2.box_sum(b)).collect();
        Self::new(x1.schema(), blocks, first, second)
    }

    pub fn blocks(&self) -> &[PartitionBox] {
        &self.blocks
    }

    pub fn first_counts(&self) -> &[f64] {
        &self.first
    }

    pub fn second_counts(&self) -> &[f64] {
        &self.second
    }

    /// Record pairs that still need comparing, `sum_i n_i m_i`.
    pub fn candidate_pairs(&self) -> f64 {
        self.first.iter().zip(&self.second).map(|(a, b)| a * b).sum()
    }
}

fn tally<S: AsRef<str>>(
    records: &[Vec<S>],
    schema: &CubeSchema,
    boxes: &[PartitionBox],
    which: &str,
) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::InvalidParameter(format!("{which} dataset is empty")));
    }
    let mut counts = vec![0.0; boxes.len()];
    for (index, r) in records.iter().enumerate() {
        let cell = schema
            .cell_of_record(r)
            .map_err(|reason| Error::Record { index, reason })?;
        let coord = schema.coord_of(cell);
        let b = boxes
            .iter()
            .position(|b| b.contains(&coord))
            .expect("boxes cover the cube");
        counts[b] += 1.0;
    }
    Ok(counts)
}

/// Maps every record of both datasets to the release's subcube box
/// holding its cell.
pub fn assign_blocks<S: AsRef<str>>(
    first: &[Vec<S>],
    second: &[Vec<S>],
    h: &ReleasedHistogram,
) -> Result<BlockAssignment> {
    if !h.has_subcubes() {
        return Err(Error::InvalidParameter(
            "blocking needs a release with subcube boxes".into(),
        ));
    }
    let schema = h.schema();
    let blocks = h.boxes();
    let n = tally(first, schema, &blocks, "first")?;
    let m = tally(second, schema, &blocks, "second")?;
    BlockAssignment::new(schema, blocks, n, m)
}

/// `1 - sum_i n_i m_i / (n m)`: the share of cross-dataset pairs that
/// blocking removes.
pub fn reduction_ratio(a: &BlockAssignment) -> Result<f64> {
    let n: f64 = a.first.iter().sum();
    let m: f64 = a.second.iter().sum();
    if n <= 0.0 || m <= 0.0 {
        return Err(Error::InvalidParameter(
            "reduction ratio needs two non-empty datasets".into(),
        ));
    }
    Ok((1.0 - a.candidate_pairs() / (n * m)).clamp(0.0, 1.0))
}
