use std::path::Path;

use serde::Serialize;

use crate::aggregate::{contour_data, pareto_argmax, Aggregator, GridSpec, Location, ParetoFront};
use crate::error::{Error, Result};

pub const FRONT_RESOLUTION: usize = 1000;
pub const CONTOUR_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoSummaryRow {
    pub front: String,
    pub aggregator: String,
    pub t: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub value: Option<f64>,
    /// `interior`, `boundary`, or `degenerate` when the aggregator is flat on the front.
    pub location: String,
}

fn aggregators(lse_temperature: f64) -> Result<[(&'static str, Aggregator); 3]> {
    Ok([
        ("am", Aggregator::arithmetic()),
        ("gm", Aggregator::geometric()),
        ("lse", Aggregator::softmin(lse_temperature)?),
    ])
}

/// For each requested front (`all` selects every shipped one), writes
/// `front_<id>.csv` with the sampled curve, plus `contour_<agg>.csv` level
/// data on the unit square and `summary.csv` with the argmax of every
/// aggregator on every front.
pub fn run_pareto_analysis(front: &str, out_dir: &Path, lse_temperature: f64) -> Result<Vec<ParetoSummaryRow>> {
    let ids = if front == "all" { ParetoFront::builtin_ids() } else { vec![front.to_string()] };
    let fronts = ids
        .iter()
        .map(|id| ParetoFront::builtin(id, FRONT_RESOLUTION).map(|f| (id.clone(), f)))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let aggs = aggregators(lse_temperature)?;

    let grid = GridSpec::square(0.0, 1.0, CONTOUR_POINTS);
    for (name, agg) in &aggs {
        let mut w = csv::Writer::from_path(out_dir.join(format!("contour_{name}.csv")))?;
        w.write_record(["x", "y", "value"])?;
        for (x, y, v) in contour_data(agg, &grid)? {
            w.write_record([x.to_string(), y.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(out_dir, e))?;
    }

    let mut rows = Vec::new();
    for (id, f) in &fronts {
        let mut w = csv::Writer::from_path(out_dir.join(format!("front_{id}.csv")))?;
        w.write_record(["t", "r1", "r2"])?;
        for i in 0..=f.resolution {
            let t = i as f64 / f.resolution as f64;
            let (r1, r2) = f.sample(t);
            w.write_record([t.to_string(), r1.to_string(), r2.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(out_dir, e))?;
        for (name, agg) in &aggs {
            let row = match pareto_argmax(f, agg) {
                Ok(o) => ParetoSummaryRow {
                    front: id.clone(),
                    aggregator: name.to_string(),
                    t: Some(o.t),
                    r1: Some(o.r1),
                    r2: Some(o.r2),
                    value: Some(o.value),
                    location: match o.location {
                        Location::Interior => "interior",
                        Location::Boundary => "boundary",
                    }
                    .into(),
                },
                Err(Error::DegenerateFront) => ParetoSummaryRow {
                    front: id.clone(),
                    aggregator: name.to_string(),
                    t: None,
                    r1: None,
                    r2: None,
                    value: None,
                    location: "degenerate".into(),
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    let mut w = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(out_dir, e))?;
    Ok(rows)
}
