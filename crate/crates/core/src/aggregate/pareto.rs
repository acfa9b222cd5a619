//! Where does each aggregator land on a two-objective trade-off curve?
//!
//! A front is traced by `t ↦ (r1, r2)` on `[0, 1]`. The `Bowed(p)` family
//! `r2 = (1 − r1^(1/p))^p` bends towards the origin for `p > 1`; on it the
//! arithmetic mean is maximised at an endpoint while the geometric mean is
//! maximised in the interior.

use serde::Serialize;

use super::Aggregator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrontShape {
    /// `r1 + r2 = 1`.
    Linear,
    /// `r2 = (1 − r1^(1/p))^p`, `p > 1`.
    Bowed(f64),
    /// `r1² + r2² = 1`, bulging away from the origin.
    QuarterCircle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoFront {
    pub shape: FrontShape,
    pub resolution: usize,
}

/// Shipped bowed exponents, i.e. the non-convex family.
pub const BOWED_FAMILY: [f64; 4] = [1.5, 2.0, 3.0, 4.0];

impl ParetoFront {
    pub fn new(shape: FrontShape, resolution: usize) -> Self {
        ParetoFront { shape, resolution }
    }

    /// Looks up a shipped front: `linear`, `quarter-circle`, or `bowed-<p>`.
    pub fn builtin(id: &str, resolution: usize) -> Result<Self> {
        let shape = match id {
            "linear" => FrontShape::Linear,
            "quarter-circle" => FrontShape::QuarterCircle,
            _ => {
                let p = id
                    .strip_prefix("bowed-")
                    .and_then(|p| p.parse::<f64>().ok())
                    .filter(|&p| BOWED_FAMILY.contains(&p))
                    .ok_or_else(|| Error::Unknown { kind: "front", name: id.to_string() })?;
                FrontShape::Bowed(p)
            }
        };
        Ok(ParetoFront::new(shape, resolution))
    }

    /// Identifiers of every shipped front.
    pub fn builtin_ids() -> Vec<String> {
        let mut v = vec!["linear".to_string(), "quarter-circle".to_string()];
        v.extend(BOWED_FAMILY.iter().map(|p| format!("bowed-{p}")));
        v
    }

    /// The non-convex family used for the corner-solution check.
    pub fn bowed_family(resolution: usize) -> Vec<Self> {
        BOWED_FAMILY
            .iter()
            .map(|&p| ParetoFront::new(FrontShape::Bowed(p), resolution))
            .collect()
    }

    pub fn sample(&self, t: f64) -> (f64, f64) {
        let t = t.clamp(0.0, 1.0);
        match self.shape {
            FrontShape::Linear => (t, 1.0 - t),
            FrontShape::Bowed(p) => (t, (1.0 - t.powf(1.0 / p)).max(0.0).powf(p)),
            FrontShape::QuarterCircle => (t, (1.0 - t * t).max(0.0).sqrt()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoOptimum {
    pub t: f64,
    pub r1: f64,
    pub r2: f64,
    pub value: f64,
    pub location: Location,
}

/// Grid search for the aggregator's maximiser along the front. Ties go to the
/// smallest `t`. The optimum is on the boundary when it lies within one grid
/// step of either end.
pub fn pareto_argmax(front: &ParetoFront, agg: &Aggregator) -> Result<ParetoOptimum> {
    let n = front.resolution;
    if n < 100 {
        return Err(Error::InvalidArgument(format!("resolution {n} < 100")));
    }
    let mut best: Option<(usize, f64)> = None;
    let mut lo = f64::INFINITY;
    for i in 0..=n {
        let (r1, r2) = front.sample(i as f64 / n as f64);
        let v = agg.apply(&[r1, r2])?;
        lo = lo.min(v);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, value) = best.expect("grid is nonempty");
    if value - lo <= 1e-12 * value.abs().max(1.0) {
        return Err(Error::DegenerateFront);
    }
    let t = i as f64 / n as f64;
    let (r1, r2) = front.sample(t);
    let location = if i <= 1 || i + 1 >= n { Location::Boundary } else { Location::Interior };
    Ok(ParetoOptimum { t, r1, r2, value, location })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(min: f64, max: f64, n: usize) -> Self {
        GridSpec { x_min: min, x_max: max, nx: n, y_min: min, y_max: max, ny: n }
    }

    fn axis(min: f64, max: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            min
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    }
}

/// Aggregator values over a 2-D grid, rows ordered by `y` then `x`.
pub fn contour_data(agg: &Aggregator, grid: &GridSpec) -> Result<Vec<(f64, f64, f64)>> {
    if grid.nx == 0 || grid.ny == 0 || !(grid.x_min <= grid.x_max) || !(grid.y_min <= grid.y_max) {
        return Err(Error::InvalidArgument("empty or inverted grid".into()));
    }
    if agg.kind == super::AggregationKind::GeometricMean && (grid.x_min < 0.0 || grid.y_min < 0.0) {
        return Err(Error::NegativeInput(grid.x_min.min(grid.y_min)));
    }
    let mut out = Vec::with_capacity(grid.nx * grid.ny);
    for j in 0..grid.ny {
        let y = GridSpec::axis(grid.y_min, grid.y_max, grid.ny, j);
        for i in 0..grid.nx {
            let x = GridSpec::axis(grid.x_min, grid.x_max, grid.nx, i);
            out.push((x, y, agg.apply(&[x, y])?));
        }
    }
    Ok(out)
}
