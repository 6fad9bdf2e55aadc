//! File formats: schema and release JSON, record and table CSV.
//!
//! Every table written here starts with a `# config_hash=...,seed=...` line,
//! and every JSON artifact carries the same pair in a `provenance` field.
//! Numbers are written in shortest round-trip form.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cube::{ingest, AttributeDomain, CellVector, CubeSchema, LinearQuery, PartitionBox};
use crate::error::{Error, Result};
use crate::partition::{ReleasedHistogram, SubcubeCount};
use crate::privacy::PrivacyParam;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeSpec {
    Numeric { name: String, edges: Vec<f64> },
    Categorical { name: String, bins: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaFile {
    pub attributes: Vec<AttributeSpec>,
}

impl SchemaFile {
    pub fn from_schema(schema: &CubeSchema) -> Self {
        let attributes = schema
            .dims()
            .iter()
            .map(|d| match d.edges() {
                Some(edges) => AttributeSpec::Numeric {
                    name: d.name().into(),
                    edges: edges.to_vec(),
                },
                None => AttributeSpec::Categorical {
                    name: d.name().into(),
                    bins: d.bins().to_vec(),
                },
            })
            .collect();
        Self { attributes }
    }

    pub fn to_schema(&self) -> Result<CubeSchema> {
        let dims = self
            .attributes
            .iter()
            .map(|a| match a {
                AttributeSpec::Numeric { name, edges } => AttributeDomain::numeric(name.clone(), edges.clone()),
                AttributeSpec::Categorical { name, bins } => AttributeDomain::categorical(name.clone(), bins.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        CubeSchema::new(dims)
    }
}

pub fn parse_schema(json: &str) -> Result<Arc<CubeSchema>> {
    let file: SchemaFile = serde_json::from_str(json)?;
    Ok(Arc::new(file.to_schema()?))
}

pub fn read_schema(path: &Path) -> Result<Arc<CubeSchema>> {
    parse_schema(&fs::read_to_string(path)?)
}

pub fn schema_to_json(schema: &CubeSchema) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SchemaFile::from_schema(schema))?)
}

/// Reads a headed CSV of raw records. Columns are matched to schema
/// attributes by name; extra columns are ignored. Lines starting with `#`
/// are comments.
pub fn read_records(path: &Path, schema: &CubeSchema) -> Result<Vec<Vec<String>>> {
    parse_records(fs::File::open(path)?, schema)
}

pub fn parse_records<R: std::io::Read>(reader: R, schema: &CubeSchema) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let columns = schema
        .dims()
        .iter()
        .map(|d| {
            header
                .iter()
                .position(|h| h == d.name())
                .ok_or_else(|| Error::Schema(format!("data has no column {:?}", d.name())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        out.push(columns.iter().map(|&c| row.get(c).unwrap_or("").to_string()).collect());
    }
    Ok(out)
}

pub fn load_cube(schema: Arc<CubeSchema>, data: &Path) -> Result<CellVector> {
    let records = read_records(data, &schema)?;
    ingest(&records, schema)
}

/// Config hash and seed stamped on every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    /// Hashes the JSON form of `config` with SHA-256.
    pub fn of<C: Serialize>(config: &C, seed: u64) -> Result<Self> {
        let bytes = serde_json::to_vec(config)?;
        Ok(Self {
            config_hash: hex::encode(Sha256::digest(&bytes)),
            seed,
        })
    }

    pub fn comment_line(&self) -> String {
        format!("# config_hash={},seed={}", self.config_hash, self.seed)
    }
}

pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Renders a provenance-stamped CSV table.
pub fn csv_table(prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv output is UTF-8");
    Ok(format!("{}\n{body}", prov.comment_line()))
}

pub fn write_csv(path: &Path, prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    fs::write(path, csv_table(prov, header, rows)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCount {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
    pub count: f64,
}

/// On-disk form of a [`ReleasedHistogram`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseFile {
    pub schema: SchemaFile,
    pub alpha1: PrivacyParam,
    #[serde(default)]
    pub alpha2: Option<PrivacyParam>,
    pub seed: u64,
    pub cells: Vec<f64>,
    #[serde(default)]
    pub boxes: Vec<BoxCount>,
    pub provenance: Provenance,
}

impl ReleaseFile {
    pub fn new(h: &ReleasedHistogram, provenance: Provenance) -> Self {
        Self {
            schema: SchemaFile::from_schema(h.schema()),
            alpha1: h.alpha1,
            alpha2: h.alpha2,
            seed: h.seed,
            cells: h.cells.values().to_vec(),
            boxes: h
                .subcubes
                .iter()
                .map(|s| BoxCount {
                    lo: s.range.lo().to_vec(),
                    hi: s.range.hi().to_vec(),
                    count: s.count,
                })
                .collect(),
            provenance,
        }
    }

    pub fn to_release(&self) -> Result<ReleasedHistogram> {
        let schema = Arc::new(self.schema.to_schema()?);
        let cells = CellVector::new(schema.clone(), self.cells.clone())?;
        let subcubes = self
            .boxes
            .iter()
            .map(|b| {
                Ok(SubcubeCount {
                    range: PartitionBox::new(&schema, b.lo.clone(), b.hi.clone())?,
                    count: b.count,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if subcubes.is_empty() != self.alpha2.is_none() {
            return Err(Error::InvalidParameter(
                "release has boxes without alpha2 or the reverse".into(),
            ));
        }
        let h = ReleasedHistogram {
            cells,
            subcubes,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            seed: self.seed,
        };
        h.validate()?;
        Ok(h)
    }
}

pub fn release_to_json(h: &ReleasedHistogram, prov: &Provenance) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ReleaseFile::new(h, prov.clone()))?)
}

pub fn release_from_json(json: &str) -> Result<ReleasedHistogram> {
    serde_json::from_str::<ReleaseFile>(json)?.to_release()
}

pub fn read_release(path: &Path) -> Result<ReleasedHistogram> {
    release_from_json(&fs::read_to_string(path)?)
}

/// Header of a query file: `id` then `<name>_lo,<name>_hi` per attribute.
pub fn query_header(schema: &CubeSchema) -> Vec<String> {
    let mut h = vec!["id".to_string()];
    for d in schema.dims() {
        h.push(format!("{}_lo", d.name()));
        h.push(format!("{}_hi", d.name()));
    }
    h
}

/// Query rows hold inclusive bin-index ranges.
pub fn parse_queries<R: std::io::Read>(reader: R, schema: &CubeSchema) -> Result<Vec<(String, LinearQuery)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let expected = query_header(schema);
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("query file has no column {name:?}")))
    };
    let cols = expected.iter().map(|n| col(n)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (index, row) in rdr.records().enumerate() {
        let row = row?;
        let field = |c: usize| row.get(cols[c]).unwrap_or("");
        let parse = |c: usize| {
            field(c).parse::<usize>().map_err(|_| Error::Record {
                index,
                reason: format!("{} is not a bin index: {:?}", expected[c], field(c)),
            })
        };
        let nd = schema.ndims();
        let lo = (0..nd).map(|d| parse(1 + 2 * d)).collect::<Result<Vec<_>>>()?;
        let hi = (0..nd).map(|d| parse(2 + 2 * d)).collect::<Result<Vec<_>>>()?;
        let q = LinearQuery::new(schema, lo, hi).map_err(|e| Error::Record {
            index,
            reason: e.to_string(),
        })?;
        out.push((field(0).to_string(), q));
    }
    Ok(out)
}

pub fn read_queries(path: &Path, schema: &CubeSchema) -> Result<Vec<(String, LinearQuery)>> {
    parse_queries(fs::File::open(path)?, schema)
}

pub fn query_rows(queries: &[LinearQuery]) -> Vec<Vec<String>> {
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut r = vec![i.to_string()];
            for (lo, hi) in q.range().lo().iter().zip(q.range().hi()) {
                r.push(lo.to_string());
                r.push(hi.to_string());
            }
            r
        })
        .collect()
}
