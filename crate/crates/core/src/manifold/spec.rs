//! Serializable model descriptions.
//!
//! Models can be read from JSON (`{"kind": "sphere", "dim": 2, "radius": 1.0}`) or
//! from plain `key = value` lines; list values are comma separated.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ChartDomain, ChartMetric, Christoffel, ChristoffelFn, ManifoldModel, MetricFn, ModelKind};
use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Euclidean {
        dim: usize,
    },
    Sphere {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Hyperbolic {
        dim: usize,
        curvature: f64,
    },
    FlatTorus {
        periods: Vec<f64>,
    },
    /// A chart metric from the built-in registry, see [`chart_metric_names`].
    ChartMetric {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

/// Names accepted by [`ModelSpec::ChartMetric`].
pub fn chart_metric_names() -> &'static [(&'static str, &'static str)] {
    &[(
        "paraboloid",
        "graph surface z = a (x^2 + y^2) over the disc of radius `domain_radius` (defaults a = 1, domain_radius = 1)",
    )]
}

/// Graph surface `z = a |x|^2` in dimension 2, with `K₀ = 4 a²`.
pub fn paraboloid(a: f64, domain_radius: f64) -> Result<ChartMetric> {
    if !(a > 0.0 && domain_radius > 0.0) {
        return Err(Error::InvalidParameter("paraboloid parameters must be positive".into()));
    }
    let metric: MetricFn = Arc::new(move |x: &DVector<f64>| {
        let grad = x * (2.0 * a);
        DMatrix::identity(2, 2) + &grad * grad.transpose()
    });
    // graph of h = a|x|²: Γ^l_ij = ∂_l h ∂_ij h / (1 + |∇h|²) = 4a² x_l δ_ij / (1 + 4a²|x|²)
    let gamma: ChristoffelFn = Arc::new(move |x: &DVector<f64>| {
        let s = 4.0 * a * a / (1.0 + 4.0 * a * a * x.norm_squared());
        let mut g = Christoffel::zeros(2);
        for l in 0..2 {
            for i in 0..2 {
                g.set(l, i, i, s * x[l]);
            }
        }
        g
    });
    let k0 = 4.0 * a * a;
    let conj = std::f64::consts::PI / k0.sqrt();
    Ok(ChartMetric::new("paraboloid", 2, metric, ChartDomain::ball(vec![0.0, 0.0], domain_radius))
        .with_christoffel(gamma)
        .with_curvature_bound(k0)
        .with_injectivity_radius(conj)
        .with_convexity_radius(conj / 2.0))
}

impl ModelSpec {
    pub fn build(&self) -> Result<ManifoldModel> {
        let kind = match self {
            Self::Euclidean { dim } => ModelKind::Euclidean { dim: *dim },
            Self::Sphere { dim, radius } => ModelKind::Sphere { dim: *dim, radius: *radius },
            Self::Hyperbolic { dim, curvature } => ModelKind::Hyperbolic { dim: *dim, curvature: *curvature },
            Self::FlatTorus { periods } => ModelKind::FlatTorus { periods: periods.clone() },
            Self::ChartMetric { name, params } => {
                let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
                match name.as_str() {
                    "paraboloid" => ModelKind::ChartMetric(paraboloid(get("a", 1.0), get("domain_radius", 1.0))?),
                    other => return Err(Error::InvalidParameter(format!("unknown chart metric '{other}'"))),
                }
            }
        };
        ManifoldModel::new(kind)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut map = serde_json::Map::new();
        let mut params = serde_json::Map::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let parsed = match key {
                "kind" | "name" => serde_json::Value::String(value.to_string()),
                "dim" => serde_json::Value::from(
                    value
                        .parse::<usize>()
                        .map_err(|e| Error::InvalidParameter(format!("dim: {e}")))?,
                ),
                "periods" => {
                    let vals: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(|v| v.trim().parse::<f64>()).collect();
                    serde_json::Value::from(vals.map_err(|e| Error::InvalidParameter(format!("periods: {e}")))?)
                }
                _ => {
                    let v: f64 = value
                        .parse()
                        .map_err(|e| Error::InvalidParameter(format!("{key}: {e}")))?;
                    if key == "radius" || key == "curvature" {
                        serde_json::Value::from(v)
                    } else {
                        params.insert(key.to_string(), serde_json::Value::from(v));
                        continue;
                    }
                }
            };
            map.insert(key.to_string(), parsed);
        }
        if !params.is_empty() {
            map.insert("params".into(), serde_json::Value::Object(params));
        }
        serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}
