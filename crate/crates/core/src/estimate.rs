//! Answering counting queries from a released histogram.
//!
//! Three estimators are offered and the caller picks one:
//! - `Uniform`: subcube histogram only, counts spread evenly inside each box;
//! - `LeastSquares`: per-box least-squares reconciliation of the box count
//!   with the phase-one cell counts;
//! - `CellOnly`: sums of the noisy cell histogram.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cube::LinearQuery;
use crate::error::{Error, Result};
use crate::partition::ReleasedHistogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Uniform,
    LeastSquares,
    CellOnly,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Uniform, Method::LeastSquares, Method::CellOnly];

    pub fn name(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::LeastSquares => "ls",
            Method::CellOnly => "cell",
        }
    }

    pub fn needs_subcubes(self) -> bool {
        !matches!(self, Method::CellOnly)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Method::Uniform),
            "ls" | "least_squares" => Ok(Method::LeastSquares),
            "cell" | "cell_only" => Ok(Method::CellOnly),
            other => Err(Error::InvalidParameter(format!("unknown estimation method {other:?}"))),
        }
    }
}

/// Share of an estimate attributed to one box (or one cell for `CellOnly`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub box_id: usize,
    pub overlap: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
    pub breakdown: Vec<Contribution>,
}

impl Estimate {
    fn from_parts(method: Method, breakdown: Vec<Contribution>) -> Self {
        let value = breakdown.iter().map(|c| c.value).sum();
        Self {
            value,
            method,
            breakdown,
        }
    }
}

fn require_subcubes(h: &ReleasedHistogram, method: Method) -> Result<()> {
    if h.has_subcubes() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{method} estimation needs a subcube histogram"
        )))
    }
}

fn check_query(q: &LinearQuery, h: &ReleasedHistogram) -> Result<()> {
    q.range().validate(h.schema())
}

/// Sum over boxes `p` of `(s_p / n_p) * y_p`, `s_p` the cells of `q` in `p`.
pub fn estimate_uniform(q: &LinearQuery, h: &ReleasedHistogram) -> Result<Estimate> {
    check_query(q, h)?;
    require_subcubes(h, Method::Uniform)?;
    let parts = h
        .subcubes
        .iter()
        .enumerate()
        .filter_map(|(id, sc)| {
            let s = q.range().overlap(&sc.range);
            (s > 0).then(|| Contribution {
                box_id: id,
                overlap: s,
                value: s as f64 / sc.range.n_cells() as f64 * sc.count,
            })
        })
        .collect();
    Ok(Estimate::from_parts(Method::Uniform, parts))
}

/// Sum of the noisy cell counts inside `q`.
pub fn estimate_cell_only(q: &LinearQuery, h: &ReleasedHistogram) -> Result<Estimate> {
    check_query(q, h)?;
    let parts = q
        .range()
        .cells(h.schema())
        .into_iter()
        .map(|i| Contribution {
            box_id: i,
            overlap: 1,
            value: h.cells.values()[i],
        })
        .collect();
    Ok(Estimate::from_parts(Method::CellOnly, parts))
}

/// Least-squares cell counts for one box observed through its total `y_p`
/// and its per-cell counts. The box's query matrix is `[1...1; I]`, and the
/// solution shifts every cell by the same share of the inconsistency:
/// `x_i = y_i + (y_p - sum(y)) / (n_p + 1)`.
pub fn ls_solve_partition(y_p: f64, y_cells: &[f64]) -> Vec<f64> {
    let n = y_cells.len() as f64;
    let shift = (y_p - y_cells.iter().sum::<f64>()) / (n + 1.0);
    y_cells.iter().map(|y| y + shift).collect()
}

/// Closed-form `H^+ = (H^T H)^{-1} H^T` for `H = [ones(1, n_p); I]`, as
/// `n_p` rows of `n_p + 1` entries: first column `1/(n_p+1)`, diagonal
/// `n_p/(n_p+1)`, everything else `-1/(n_p+1)`.
pub fn ls_pseudo_inverse(n_p: usize) -> Vec<Vec<f64>> {
    let d = (n_p + 1) as f64;
    (0..n_p)
        .map(|i| {
            let mut row = vec![-1.0 / d; n_p + 1];
            row[0] = 1.0 / d;
            row[i + 1] = n_p as f64 / d;
            row
        })
        .collect()
}

/// Least-squares estimate of every cell, assembled box by box.
pub fn ls_cell_estimates(h: &ReleasedHistogram) -> Result<Vec<f64>> {
    require_subcubes(h, Method::LeastSquares)?;
    let schema = h.schema();
    let mut out = vec![0.0; schema.m()];
    for sc in &h.subcubes {
        let cells = sc.range.cells(schema);
        let y: Vec<f64> = cells.iter().map(|&i| h.cells.values()[i]).collect();
        for (i, v) in cells.into_iter().zip(ls_solve_partition(sc.count, &y)) {
            out[i] = v;
        }
    }
    Ok(out)
}

/// Sum of least-squares cell estimates inside `q`.
pub fn estimate_least_squares(q: &LinearQuery, h: &ReleasedHistogram) -> Result<Estimate> {
    check_query(q, h)?;
    require_subcubes(h, Method::LeastSquares)?;
    let schema = h.schema();
    let mut parts = Vec::new();
    for (id, sc) in h.subcubes.iter().enumerate() {
        let s = q.range().overlap(&sc.range);
        if s == 0 {
            continue;
        }
        let cells = sc.range.cells(schema);
        let y: Vec<f64> = cells.iter().map(|&i| h.cells.values()[i]).collect();
        let xhat = ls_solve_partition(sc.count, &y);
        let value = cells
            .iter()
            .zip(&xhat)
            .filter(|(&i, _)| q.range().contains(&schema.coord_of(i)))
            .map(|(_, v)| v)
            .sum();
        parts.push(Contribution {
            box_id: id,
            overlap: s,
            value,
        });
    }
    Ok(Estimate::from_parts(Method::LeastSquares, parts))
}

pub fn estimate(q: &LinearQuery, h: &ReleasedHistogram, method: Method) -> Result<Estimate> {
    match method {
        Method::Uniform => estimate_uniform(q, h),
        Method::LeastSquares => estimate_least_squares(q, h),
        Method::CellOnly => estimate_cell_only(q, h),
    }
}

/// Per-cell estimates implied by `method` (for downstream consumers).
pub fn cell_estimates(h: &ReleasedHistogram, method: Method) -> Result<Vec<f64>> {
    match method {
        Method::CellOnly => Ok(h.cells.values().to_vec()),
        Method::LeastSquares => ls_cell_estimates(h),
        Method::Uniform => {
            require_subcubes(h, method)?;
            let schema = h.schema();
            let mut out = vec![0.0; schema.m()];
            for sc in &h.subcubes {
                let share = sc.count / sc.range.n_cells() as f64;
                for i in sc.range.cells(schema) {
                    out[i] = share;
                }
            }
            Ok(out)
        }
    }
}
