//! Synthetic cubes for demos and experiments.

use std::sync::Arc;

use crate::cube::{CellVector, CubeSchema};
use crate::error::{Error, Result};
use crate::privacy::NoiseSource;

/// `n` records spread as evenly as possible, then the remainder handed out
/// in chunks of `gamma` to randomly chosen distinct cells. Any two counts
/// differ by at most `gamma`.
pub fn smooth_counts(schema: Arc<CubeSchema>, n: u64, gamma: u64, seed: u64) -> Result<CellVector> {
    let m = schema.m() as u64;
    if gamma == 0 {
        return Err(Error::InvalidParameter("gamma must be at least 1".into()));
    }
    let base = n / m;
    let mut rest = n - base * m;
    let mut values = vec![base as f64; m as usize];
    let mut order: Vec<usize> = (0..m as usize).collect();
    let mut src = NoiseSource::new(seed);
    // partial Fisher-Yates: the first cells of `order` get the extra mass
    for i in 0..order.len() {
        if rest == 0 {
            break;
        }
        let j = i + src.index(order.len() - i);
        order.swap(i, j);
        let add = rest.min(gamma);
        values[order[i]] += add as f64;
        rest -= add;
    }
    CellVector::counts(schema, values)
}

/// A cube made of axis-aligned blocks with constant levels: `levels[k]` is
/// the count of every cell in block `k` of a `blocks`-per-dimension grid.
pub fn block_counts(schema: Arc<CubeSchema>, blocks: &[usize], levels: &[f64]) -> Result<CellVector> {
    let shape = schema.shape().to_vec();
    if blocks.len() != shape.len() || blocks.iter().zip(&shape).any(|(b, n)| *b == 0 || n % b != 0) {
        return Err(Error::InvalidParameter(format!(
            "block grid {blocks:?} does not tile {shape:?}"
        )));
    }
    let n_blocks: usize = blocks.iter().product();
    if levels.len() != n_blocks {
        return Err(Error::InvalidParameter(format!(
            "{n_blocks} levels expected, got {}",
            levels.len()
        )));
    }
    let values = (0..schema.m())
        .map(|i| {
            let coord = schema.coord_of(i);
            let k = coord
                .iter()
                .zip(blocks)
                .zip(&shape)
                .fold(0, |acc, ((c, b), n)| acc * b + c / (n / b));
            levels[k]
        })
        .collect();
    CellVector::counts(schema, values)
}

/// One record per unit of count, with each attribute set to its bin label
/// (numeric attributes use the bin's lower edge).
pub fn expand_records(x: &CellVector) -> Result<Vec<Vec<String>>> {
    let schema = x.schema();
    let mut out = Vec::new();
    for (i, &v) in x.values().iter().enumerate() {
        if !(v >= 0.0 && v.fract() == 0.0) {
            return Err(Error::InvalidParameter(format!("cell {i} holds a non-count value {v}")));
        }
        let coord = schema.coord_of(i);
        let record: Vec<String> = coord
            .iter()
            .zip(schema.dims())
            .map(|(&c, d)| match d.edges() {
                Some(edges) => format!("{}", edges[c]),
                None => d.bins()[c].clone(),
            })
            .collect();
        for _ in 0..v as u64 {
            out.push(record.clone());
        }
    }
    Ok(out)
}
