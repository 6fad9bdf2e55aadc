// The small income-by-age cube: binning records, counting queries,
// a four-box partition and the query matrix it induces.

use std::sync::Arc;

use dpcube::cube::{evaluate_query, AttributeDomain, CubeSchema, LinearQuery, PartitionBox, QueryMatrix};
use dpcube::ingest;

pub fn run() -> dpcube::Result<()> {
    let income = AttributeDomain::categorical("income", vec![">20K".into(), "10K-20K".into(), "0-10K".into()])?;
    let age = AttributeDomain::numeric("age", vec![20.0, 30.0, 40.0, 50.0])?;
    let schema = Arc::new(CubeSchema::new(vec![income, age])?);

    // one record per unit of count, cell by cell
    let counts = [10, 21, 37, 20, 0, 0, 53, 0, 0];
    let ages = ["25", "35", "45"];
    let mut records = Vec::new();
    for (cell, &n) in counts.iter().enumerate() {
        let c = schema.coord_of(cell);
        for _ in 0..n {
            records.push(vec![schema.dims()[0].bins()[c[0]].clone(), ages[c[1]].to_string()]);
        }
    }
    let x = ingest(&records, schema.clone())?;
    println!("cells {:?}, total {}", x.values(), x.total());

    let q1 = LinearQuery::new(&schema, vec![0, 0], vec![0, 0])?;
    let q2 = LinearQuery::new(&schema, vec![0, 1], vec![2, 1])?;
    println!("income >20K and age 20-30: {}", evaluate_query(&q1, &x)?);
    println!("age 30-40: {}", evaluate_query(&q2, &x)?);

    let boxes = vec![
        PartitionBox::new(&schema, vec![0, 0], vec![0, 1])?,
        PartitionBox::new(&schema, vec![0, 2], vec![0, 2])?,
        PartitionBox::new(&schema, vec![1, 0], vec![2, 0])?,
        PartitionBox::new(&schema, vec![1, 1], vec![2, 2])?,
    ];
    for b in &boxes {
        println!("box {b}: cells {:?}, count {}", b.cells(&schema), x.box_sum(b));
    }
    let rows = boxes
        .iter()
        .map(|b| LinearQuery::from_box(b.clone()).to_vector(&schema))
        .collect();
    let h = QueryMatrix::new(schema.m(), rows)?;
    print!("{}", h.to_csv());
    println!("H x = {:?}", h.apply(x.values()));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().expect("running example");
}
