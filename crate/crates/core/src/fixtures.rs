//! Named models and objectives used by the command line tool, tests and benchmarks.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::spec::paraboloid;
use crate::manifold::{make_model, ManifoldModel, ModelKind, Point, TangentVector};
use crate::sampling::Region;
use crate::svp::ObjectiveFunction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Model,
    Objective,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureInfo {
    pub id: String,
    pub kind: FixtureKind,
    /// Model the objective lives on; the model itself for model fixtures.
    pub model: String,
    pub description: String,
    /// Admissible parameter ranges, free text.
    pub parameters: String,
}

fn info(id: &str, kind: FixtureKind, model: &str, description: &str, parameters: &str) -> FixtureInfo {
    FixtureInfo {
        id: id.into(),
        kind,
        model: model.into(),
        description: description.into(),
        parameters: parameters.into(),
    }
}

pub fn list_fixtures() -> Vec<FixtureInfo> {
    use FixtureKind::*;
    vec![
        info("sphere2", Model, "sphere2", "unit round 2-sphere, K = 1", "segment lengths < pi/2"),
        info("hyperbolic2", Model, "hyperbolic2", "hyperbolic plane, K = -1", "any length"),
        info("torus2", Model, "torus2", "flat torus R^2 / (2 pi Z)^2", "segment lengths < pi"),
        info("euclidean1", Model, "euclidean1", "real line", "any length"),
        info("euclidean2", Model, "euclidean2", "Euclidean plane", "any length"),
        info(
            "paraboloid",
            Model,
            "paraboloid",
            "graph of z = x^2 + y^2 over the unit disc (chart metric, K0 = 4)",
            "segment lengths < pi/4",
        ),
        info(
            "two-well",
            Objective,
            "sphere2",
            "min(d(x, a), d(x, b)) with d(a, b) = 1; two global minima",
            "eps in (0, 1), up to 12 steps",
        ),
        info("abs-1d", Objective, "euclidean1", "|x| on [-1, 1]", "eps in (0, 1)"),
        info(
            "lsc-step",
            Objective,
            "euclidean1",
            "0 for x <= 0 and 1 for x > 0 on [-1, 1]; lower semicontinuous",
            "eps in (0, 1)",
        ),
        info(
            "zero-sphere",
            Objective,
            "sphere2",
            "f = 0 on the ball of radius 1 about the north pole; no strong minimum",
            "eps in (0, 1)",
        ),
        info(
            "torus-cos",
            Objective,
            "torus2",
            "cos x + cos y on the flat torus; unique minimum at (pi, pi)",
            "eps in (0, 1)",
        ),
    ]
}

pub fn model(id: &str) -> Result<ManifoldModel> {
    let kind = match id {
        "sphere2" => ModelKind::Sphere { dim: 2, radius: 1.0 },
        "hyperbolic2" => ModelKind::Hyperbolic { dim: 2, curvature: -1.0 },
        "torus2" => ModelKind::FlatTorus {
            periods: vec![2.0 * PI, 2.0 * PI],
        },
        "euclidean1" => ModelKind::Euclidean { dim: 1 },
        "euclidean2" => ModelKind::Euclidean { dim: 2 },
        "paraboloid" => ModelKind::ChartMetric(paraboloid(1.0, 1.0)?),
        other => return Err(Error::InvalidParameter(format!("unknown model fixture '{other}'"))),
    };
    make_model(kind)
}

/// The two wells of `two-well`: the north pole and a point at distance 1 from it.
pub fn two_well_points(m: &ManifoldModel) -> (Point, Point) {
    let a = m.reference_point();
    let e = m.orthonormal_frame(&a)[0].clone();
    let b = m.exp_map(&TangentVector::new(a.clone(), e)).expect("sphere exp is total");
    (a, b)
}

pub fn objective(id: &str) -> Result<ObjectiveFunction> {
    match id {
        "two-well" => {
            let m = model("sphere2")?;
            let (a, b) = two_well_points(&m);
            let (ma, mb) = (a.clone(), b.clone());
            let mm = m.clone();
            // distance() refuses antipodes, where d = π
            let d = move |p: &Point, q: &Point| mm.distance(p, q).unwrap_or(PI);
            let region = Region::ball(a.clone(), PI * (1.0 - 1e-6));
            Ok(ObjectiveFunction::new(
                id,
                &m,
                region,
                0.0,
                Arc::new(move |x: &Point| d(x, &ma).min(d(x, &mb))),
            )?
            .with_hints(vec![a, b]))
        }
        "abs-1d" | "lsc-step" => {
            let m = model("euclidean1")?;
            let zero = m.point(&[0.0])?;
            let f: Arc<dyn Fn(&Point) -> f64 + Send + Sync> = if id == "abs-1d" {
                Arc::new(|x: &Point| x.coords[0].abs())
            } else {
                Arc::new(|x: &Point| if x.coords[0] > 0.0 { 1.0 } else { 0.0 })
            };
            Ok(ObjectiveFunction::new(id, &m, Region::interval(-1.0, 1.0), 0.0, f)?.with_hints(vec![zero]))
        }
        "zero-sphere" => {
            let m = model("sphere2")?;
            let region = Region::ball(m.reference_point(), 1.0);
            ObjectiveFunction::new(id, &m, region, 0.0, Arc::new(|_: &Point| 0.0))
        }
        "torus-cos" => {
            let m = model("torus2")?;
            let region = Region::Box {
                lo: vec![0.0, 0.0],
                hi: vec![2.0 * PI, 2.0 * PI],
            };
            let min = m.point(&[PI, PI])?;
            Ok(ObjectiveFunction::new(
                id,
                &m,
                region,
                -2.0,
                Arc::new(|x: &Point| x.coords[0].cos() + x.coords[1].cos()),
            )?
            .with_hints(vec![min]))
        }
        other => Err(Error::InvalidParameter(format!("unknown objective fixture '{other}'"))),
    }
}
