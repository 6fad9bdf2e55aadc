//! Data-cube model: attribute domains, cell indexing, count vectors,
//! partition boxes and linear counting queries.
//!
//! Cells are linearized row-major in schema declaration order: the last
//! dimension varies fastest. Every index set written to disk (query
//! matrices, box cell lists) uses this order.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One discretized attribute of the cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDomain {
    name: String,
    bins: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<f64>>,
}

impl AttributeDomain {
    /// A nominal attribute whose values are the bin labels themselves.
    pub fn categorical<S: Into<String>>(name: S, bins: Vec<String>) -> Result<Self> {
        let name = name.into();
        if bins.is_empty() {
            return Err(Error::Schema(format!("attribute {name} has no bins")));
        }
        for (i, b) in bins.iter().enumerate() {
            if bins[..i].contains(b) {
                return Err(Error::Schema(format!("attribute {name}: duplicate bin {b:?}")));
            }
        }
        Ok(Self {
            name,
            bins,
            edges: None,
        })
    }

    /// A numeric attribute discretized by strictly increasing edges. Bin `i`
    /// covers `[edges[i], edges[i+1])`; the last bin also includes its upper edge.
    pub fn numeric<S: Into<String>>(name: S, edges: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if edges.len() < 2 {
            return Err(Error::Schema(format!("attribute {name} needs at least two edges")));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema(format!(
                "attribute {name}: edges must be finite and strictly increasing"
            )));
        }
        let bins = edges.windows(2).map(|w| format!("[{},{})", w[0], w[1])).collect();
        Ok(Self {
            name,
            bins,
            edges: Some(edges),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bins(&self) -> &[String] {
        &self.bins
    }

    pub fn edges(&self) -> Option<&[f64]> {
        self.edges.as_deref()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Maps a raw attribute value to its bin index.
    pub fn bin_of(&self, raw: &str) -> Option<usize> {
        let raw = raw.trim();
        match &self.edges {
            None => self.bins.iter().position(|b| b == raw),
            Some(edges) => {
                let v: f64 = raw.parse().ok()?;
                let last = edges.len() - 1;
                if !(v >= edges[0] && v <= edges[last]) {
                    return None;
                }
                // first edge strictly greater than v, minus one
                let idx = edges.partition_point(|e| *e <= v);
                Some((idx - 1).min(last - 1))
            }
        }
    }
}

/// Ordered list of attribute domains defining the cube shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSchema {
    dims: Vec<AttributeDomain>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    m: usize,
}

impl CubeSchema {
    pub fn new(dims: Vec<AttributeDomain>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        for (i, d) in dims.iter().enumerate() {
            if dims[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::Schema(format!("duplicate attribute {}", d.name)));
            }
        }
        let shape: Vec<usize> = dims.iter().map(AttributeDomain::len).collect();
        let mut strides = vec![1usize; shape.len()];
        for d in (0..shape.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1]
                .checked_mul(shape[d + 1])
                .ok_or_else(|| Error::Schema("cube too large".into()))?;
        }
        let m = strides[0]
            .checked_mul(shape[0])
            .ok_or_else(|| Error::Schema("cube too large".into()))?;
        Ok(Self {
            dims,
            shape,
            strides,
            m,
        })
    }

    /// Schema of plain index dimensions `d0, d1, ...` with bins `0..n`.
    pub fn from_shape(shape: &[usize]) -> Result<Self> {
        let dims = shape
            .iter()
            .enumerate()
            .map(|(i, &n)| AttributeDomain::categorical(format!("d{i}"), (0..n).map(|b| b.to_string()).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    pub fn dims(&self) -> &[AttributeDomain] {
        &self.dims
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndims(&self) -> usize {
        self.shape.len()
    }

    /// Total number of cells.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim_index(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    pub fn index_of(&self, coord: &[usize]) -> usize {
        debug_assert_eq!(coord.len(), self.ndims());
        coord.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    pub fn coord_of(&self, mut index: usize) -> Vec<usize> {
        debug_assert!(index < self.m);
        self.strides
            .iter()
            .map(|s| {
                let c = index / s;
                index %= s;
                c
            })
            .collect()
    }

    /// Maps one raw record to its cell index.
    pub fn cell_of_record<S: AsRef<str>>(&self, record: &[S]) -> std::result::Result<usize, String> {
        if record.len() != self.ndims() {
            return Err(format!("expected {} values, found {}", self.ndims(), record.len()));
        }
        let mut coord = Vec::with_capacity(self.ndims());
        for (dim, raw) in self.dims.iter().zip(record) {
            let raw = raw.as_ref();
            let bin = dim
                .bin_of(raw)
                .ok_or_else(|| format!("value {raw:?} outside the bins of {}", dim.name))?;
            coord.push(bin);
        }
        Ok(self.index_of(&coord))
    }
}

/// A length-`m` vector of cell counts (exact or noisy).
#[derive(Debug, Clone, PartialEq)]
pub struct CellVector {
    schema: Arc<CubeSchema>,
    values: Vec<f64>,
}

impl CellVector {
    pub fn new(schema: Arc<CubeSchema>, values: Vec<f64>) -> Result<Self> {
        if values.len() != schema.m() {
            return Err(Error::SchemaMismatch(format!(
                "{} values for a cube of {} cells",
                values.len(),
                schema.m()
            )));
        }
        Ok(Self { schema, values })
    }

    /// Original-data counts: every entry must be a nonnegative integer.
    pub fn counts(schema: Arc<CubeSchema>, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0 && v.fract() == 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "cell {i} holds {} which is not a nonnegative integer count",
                values[i]
            )));
        }
        Self::new(schema, values)
    }

    pub fn zeros(schema: Arc<CubeSchema>) -> Self {
        let m = schema.m();
        Self {
            schema,
            values: vec![0.0; m],
        }
    }

    pub fn schema(&self) -> &Arc<CubeSchema> {
        &self.schema
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sum of the cells inside `b`.
    pub fn box_sum(&self, b: &PartitionBox) -> f64 {
        b.cells(&self.schema).iter().map(|&i| self.values[i]).sum()
    }
}

/// Builds the exact count vector of `records` under `schema`.
pub fn ingest<S: AsRef<str>>(records: &[Vec<S>], schema: Arc<CubeSchema>) -> Result<CellVector> {
    let mut values = vec![0.0; schema.m()];
    for (index, record) in records.iter().enumerate() {
        let cell = schema
            .cell_of_record(record)
            .map_err(|reason| Error::Record { index, reason })?;
        values[cell] += 1.0;
    }
    CellVector::new(schema, values)
}

/// An axis-aligned sub-cube given by inclusive per-dimension bin ranges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionBox {
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl PartitionBox {
    pub fn new(schema: &CubeSchema, lo: Vec<usize>, hi: Vec<usize>) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate(schema)?;
        Ok(b)
    }

    pub fn full(schema: &CubeSchema) -> Self {
        Self {
            lo: vec![0; schema.ndims()],
            hi: schema.shape().iter().map(|n| n - 1).collect(),
        }
    }

    pub fn cell(schema: &CubeSchema, index: usize) -> Self {
        let c = schema.coord_of(index);
        Self { lo: c.clone(), hi: c }
    }

    pub fn validate(&self, schema: &CubeSchema) -> Result<()> {
        if self.lo.len() != schema.ndims() || self.hi.len() != schema.ndims() {
            return Err(Error::SchemaMismatch(format!(
                "box has {} dimensions, schema has {}",
                self.lo.len(),
                schema.ndims()
            )));
        }
        for d in 0..schema.ndims() {
            if self.lo[d] > self.hi[d] || self.hi[d] >= schema.shape()[d] {
                return Err(Error::SchemaMismatch(format!(
                    "dimension {d}: range {}..={} outside 0..{}",
                    self.lo[d],
                    self.hi[d],
                    schema.shape()[d]
                )));
            }
        }
        Ok(())
    }

    pub fn lo(&self) -> &[usize] {
        &self.lo
    }

    pub fn hi(&self) -> &[usize] {
        &self.hi
    }

    pub fn width(&self, dim: usize) -> usize {
        self.hi[dim] - self.lo[dim] + 1
    }

    /// Number of cells `n_p`.
    pub fn n_cells(&self) -> usize {
        (0..self.lo.len()).map(|d| self.width(d)).product()
    }

    pub fn contains(&self, coord: &[usize]) -> bool {
        coord
            .iter()
            .enumerate()
            .all(|(d, &c)| self.lo[d] <= c && c <= self.hi[d])
    }

    /// Number of cells shared with `other`.
    pub fn overlap(&self, other: &PartitionBox) -> usize {
        let mut n = 1;
        for d in 0..self.lo.len() {
            let lo = self.lo[d].max(other.lo[d]);
            let hi = self.hi[d].min(other.hi[d]);
            if lo > hi {
                return 0;
            }
            n *= hi - lo + 1;
        }
        n
    }

    /// Linear indices of the cells inside the box, ascending.
    pub fn cells(&self, schema: &CubeSchema) -> Vec<usize> {
        let nd = self.lo.len();
        let mut out = Vec::with_capacity(self.n_cells());
        let mut coord = self.lo.clone();
        loop {
            out.push(schema.index_of(&coord));
            let mut d = nd;
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                if coord[d] < self.hi[d] {
                    coord[d] += 1;
                    break;
                }
                coord[d] = self.lo[d];
            }
        }
    }

    /// Splits along `dim` so the left part ends at bin `cut` (inclusive).
    pub fn split_at(&self, dim: usize, cut: usize) -> (PartitionBox, PartitionBox) {
        debug_assert!(self.lo[dim] <= cut && cut < self.hi[dim]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[dim] = cut;
        right.lo[dim] = cut + 1;
        (left, right)
    }
}

impl fmt::Display for PartitionBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| format!("{l}..={h}"))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Free-function form of [`PartitionBox::cells`].
pub fn cells_in_box(schema: &CubeSchema, b: &PartitionBox) -> Vec<usize> {
    b.cells(schema)
}

/// A counting query over an axis-aligned range of cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearQuery {
    range: PartitionBox,
}

impl LinearQuery {
    pub fn new(schema: &CubeSchema, lo: Vec<usize>, hi: Vec<usize>) -> Result<Self> {
        Ok(Self {
            range: PartitionBox::new(schema, lo, hi)?,
        })
    }

    pub fn from_box(range: PartitionBox) -> Self {
        Self { range }
    }

    pub fn range(&self) -> &PartitionBox {
        &self.range
    }

    /// Query size `s` in cells.
    pub fn size(&self) -> usize {
        self.range.n_cells()
    }

    /// The 0/1 query vector of length `m`.
    pub fn to_vector(&self, schema: &CubeSchema) -> Vec<u8> {
        let mut q = vec![0u8; schema.m()];
        for i in self.range.cells(schema) {
            q[i] = 1;
        }
        q
    }
}

/// Answers `q` exactly on `x`.
pub fn evaluate_query(q: &LinearQuery, x: &CellVector) -> Result<f64> {
    q.range.validate(x.schema())?;
    Ok(x.box_sum(&q.range))
}

/// A stack of 0/1 query rows over `m` cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryMatrix {
    m: usize,
    rows: Vec<Vec<u8>>,
}

impl QueryMatrix {
    pub fn new(m: usize, rows: Vec<Vec<u8>>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(Error::InvalidParameter(format!("row {i} has length {}", r.len())));
            }
            if r.iter().any(|v| *v > 1) || !r.contains(&1) {
                return Err(Error::InvalidParameter(format!("row {i} is not a nonzero 0/1 row")));
            }
        }
        Ok(Self { m, rows })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.iter().map(|&v| v as usize).sum()).collect()
    }

    /// `H x` for a length-`m` vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(x).filter(|(q, _)| **q == 1).map(|(_, v)| v).sum())
            .collect()
    }

    /// CSV with one comma-separated 0/1 row per line, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * (2 * self.m + 1));
        for r in &self.rows {
            let line: Vec<&str> = r.iter().map(|v| if *v == 1 { "1" } else { "0" }).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub const EXAMPLE_COUNTS: [f64; 9] = [10.0, 21.0, 37.0, 20.0, 0.0, 0.0, 53.0, 0.0, 0.0];

    /// The 3x3 income x age cube: rows are income (>20K first), columns age.
    pub fn example_schema() -> Arc<CubeSchema> {
        let income =
            AttributeDomain::categorical("income", vec![">20K".into(), "10K-20K".into(), "0-10K".into()]).unwrap();
        let age = AttributeDomain::numeric("age", vec![20.0, 30.0, 40.0, 50.0]).unwrap();
        Arc::new(CubeSchema::new(vec![income, age]).unwrap())
    }

    pub fn example_x() -> CellVector {
        CellVector::counts(example_schema(), EXAMPLE_COUNTS.to_vec()).unwrap()
    }

    /// The four-box partition of the worked example, in row-major cell terms
    /// {0,1}, {2}, {3,6}, {4,5,7,8}.
    pub fn example_boxes(schema: &CubeSchema) -> Vec<PartitionBox> {
        vec![
            PartitionBox::new(schema, vec![0, 0], vec![0, 1]).unwrap(),
            PartitionBox::new(schema, vec![0, 2], vec![0, 2]).unwrap(),
            PartitionBox::new(schema, vec![1, 0], vec![2, 0]).unwrap(),
            PartitionBox::new(schema, vec![1, 1], vec![2, 2]).unwrap(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    fn example_records() -> Vec<Vec<String>> {
        let labels = [">20K", "10K-20K", "0-10K"];
        let ages = ["25", "35", "45"];
        let mut out = Vec::new();
        for (i, &c) in EXAMPLE_COUNTS.iter().enumerate() {
            for _ in 0..c as usize {
                out.push(vec![labels[i / 3].to_string(), ages[i % 3].to_string()]);
            }
        }
        out
    }

    #[test]
    fn ingest_reproduces_example_cube() {
        let x = ingest(&example_records(), example_schema()).unwrap();
        assert_eq!(x.values(), &EXAMPLE_COUNTS);
        assert_eq!(x.total(), 141.0);
    }

    #[test]
    fn ingest_empty_and_repeated() {
        let none: Vec<Vec<String>> = vec![];
        let x = ingest(&none, example_schema()).unwrap();
        assert!(x.values().iter().all(|v| *v == 0.0));
        assert_eq!(x.len(), 9);

        let schema = Arc::new(CubeSchema::from_shape(&[2, 2]).unwrap());
        let recs = vec![vec!["0", "0"]; 4];
        let x = ingest(&recs, schema).unwrap();
        assert_eq!(x.values(), &[4.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn ingest_rejects_bad_records() {
        let schema = example_schema();
        let recs = vec![vec![">20K", "25"], vec![">20K", "70"]];
        match ingest(&recs, schema.clone()) {
            Err(Error::Record { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        let recs = vec![vec![">20K"]];
        assert!(matches!(ingest(&recs, schema), Err(Error::Record { index: 0, .. })));
    }

    #[test]
    fn numeric_bins_close_last_edge() {
        let d = AttributeDomain::numeric("a", vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(d.bin_of("0"), Some(0));
        assert_eq!(d.bin_of("0.999"), Some(0));
        assert_eq!(d.bin_of("1"), Some(1));
        assert_eq!(d.bin_of("2"), Some(1));
        assert_eq!(d.bin_of("2.01"), None);
        assert_eq!(d.bin_of("-1"), None);
        assert_eq!(d.bin_of("abc"), None);
    }

    #[test]
    fn domain_invariants() {
        assert!(AttributeDomain::categorical("a", vec![]).is_err());
        assert!(AttributeDomain::categorical("a", vec!["x".into(), "x".into()]).is_err());
        assert!(AttributeDomain::numeric("a", vec![0.0, 0.0]).is_err());
        assert!(AttributeDomain::numeric("a", vec![1.0]).is_err());
    }

    #[test]
    fn example_queries() {
        let schema = example_schema();
        let x = example_x();
        let q1 = LinearQuery::new(&schema, vec![0, 0], vec![0, 0]).unwrap();
        assert_eq!(evaluate_query(&q1, &x).unwrap(), 10.0);
        assert_eq!(q1.size(), 1);
        let full = LinearQuery::from_box(PartitionBox::full(&schema));
        assert_eq!(evaluate_query(&full, &x).unwrap(), 141.0);
        let q2 = LinearQuery::new(&schema, vec![0, 1], vec![2, 1]).unwrap();
        assert_eq!(evaluate_query(&q2, &x).unwrap(), 21.0);
        let zero = CellVector::zeros(schema.clone());
        assert_eq!(evaluate_query(&q2, &zero).unwrap(), 0.0);
    }

    #[test]
    fn query_schema_mismatch() {
        let other = CubeSchema::from_shape(&[4, 4]).unwrap();
        let q = LinearQuery::new(&other, vec![3, 3], vec![3, 3]).unwrap();
        assert!(matches!(
            evaluate_query(&q, &example_x()),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn box_cells() {
        let schema = CubeSchema::from_shape(&[3, 3]).unwrap();
        assert_eq!(PartitionBox::full(&schema).cells(&schema), (0..9).collect::<Vec<_>>());
        let single = PartitionBox::new(&schema, vec![1, 1], vec![1, 1]).unwrap();
        assert_eq!(cells_in_box(&schema, &single), vec![4]);
        let b = PartitionBox::new(&schema, vec![1, 1], vec![2, 2]).unwrap();
        assert_eq!(b.cells(&schema), vec![4, 5, 7, 8]);
        assert!(PartitionBox::new(&schema, vec![2, 0], vec![1, 0]).is_err());
        assert!(PartitionBox::new(&schema, vec![0, 0], vec![3, 0]).is_err());
    }

    #[test]
    fn query_matrix_rows() {
        let schema = example_schema();
        let rows: Vec<Vec<u8>> = example_boxes(&schema)
            .iter()
            .map(|b| LinearQuery::from_box(b.clone()).to_vector(&schema))
            .collect();
        let h = QueryMatrix::new(9, rows).unwrap();
        assert_eq!(h.row_sums(), vec![2, 1, 2, 4]);
        assert_eq!(h.apply(&EXAMPLE_COUNTS), vec![31.0, 37.0, 73.0, 0.0]);
        assert!(h.to_csv().starts_with("1,1,0,0,0,0,0,0,0\n"));
        assert!(QueryMatrix::new(2, vec![vec![0, 0]]).is_err());
    }

    #[test]
    fn counts_must_be_integral() {
        let schema = Arc::new(CubeSchema::from_shape(&[2]).unwrap());
        assert!(CellVector::counts(schema.clone(), vec![1.5, 0.0]).is_err());
        assert!(CellVector::counts(schema.clone(), vec![-1.0, 0.0]).is_err());
        assert!(CellVector::new(schema, vec![1.0]).is_err());
    }

    fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1usize..5, 1..4)
    }

    proptest! {
        #[test]
        fn coord_round_trip(shape in shape_strategy()) {
            let schema = CubeSchema::from_shape(&shape).unwrap();
            for i in 0..schema.m() {
                prop_assert_eq!(schema.index_of(&schema.coord_of(i)), i);
            }
        }

        #[test]
        fn split_sums_distribute(shape in shape_strategy(), seed in any::<u64>()) {
            let schema = Arc::new(CubeSchema::from_shape(&shape).unwrap());
            let values: Vec<f64> = (0..schema.m()).map(|i| ((seed >> (i % 60)) & 7) as f64).collect();
            let x = CellVector::new(schema.clone(), values).unwrap();
            let full = PartitionBox::full(&schema);
            if let Some(dim) = (0..schema.ndims()).find(|&d| full.width(d) > 1) {
                let cut = (seed as usize) % (full.width(dim) - 1);
                let (a, b) = full.split_at(dim, cut);
                prop_assert_eq!(a.overlap(&b), 0);
                prop_assert_eq!(a.n_cells() + b.n_cells(), schema.m());
                let qa = LinearQuery::from_box(a);
                let qb = LinearQuery::from_box(b);
                let total = evaluate_query(&qa, &x).unwrap() + evaluate_query(&qb, &x).unwrap();
                prop_assert_eq!(total, x.total());
            }
        }
    }
}
