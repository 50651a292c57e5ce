use nalgebra::DVector;

use super::{ManifoldModel, Point, TangentVector};
use crate::config::GeometryConfig;
use crate::error::{Error, Result};

/// Correction term between chart and intrinsic second derivatives through `exp_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianCorrection {
    /// `<∇f(y), σ_y''(0)>`.
    pub value: f64,
    /// Step of the second differences.
    pub step: f64,
    /// `|value(h) - value(2h)|`; large values flag an unstable step.
    pub step_doubling_defect: f64,
}

fn covariant_acceleration(
    model: &ManifoldModel,
    x: &Point,
    w: &DVector<f64>,
    v: &DVector<f64>,
    chart: usize,
    h: f64,
) -> Result<(Point, DVector<f64>)> {
    let at = |s: f64| -> Result<Point> {
        let p = model.exp_map(&TangentVector::new(x.clone(), w + v * s))?;
        model.to_chart(&p, chart)
    };
    let mid = at(0.0)?;
    let plus = at(h)?;
    let minus = at(-h)?;
    let mut dp = &plus.coords - &mid.coords;
    let mut dm = &minus.coords - &mid.coords;
    // unwrap periodic coordinates
    model.wrap_delta(&mut dp);
    model.wrap_delta(&mut dm);
    let vel = (&dp - &dm) / (2.0 * h);
    let acc = (&dp + &dm) / (h * h);
    let gamma = model.christoffel(&mid);
    Ok((mid, acc + gamma.contract(&vel, &vel)))
}

/// `<∇f(y), σ_y''(0)>` with `σ_y(t) = exp_x(w_y + t v)` and `y = exp_x(w_y)`.
///
/// `f_grad` is the gradient of `f` at `y`; `w_y` and `v` are tangent at `x`.
pub fn chart_hessian_correction(
    f_grad: &TangentVector,
    x: &Point,
    w_y: &TangentVector,
    v: &TangentVector,
    model: &ManifoldModel,
    cfg: &GeometryConfig,
) -> Result<HessianCorrection> {
    cfg.validate()?;
    let w = model.align(x, w_y)?;
    let v = model.align(x, v)?;
    if model.tangent_norm(&w) >= model.injectivity_radius() {
        return Err(Error::OutOfInjectivity {
            norm: model.tangent_norm(&w),
            radius: model.injectivity_radius(),
        });
    }
    let h = cfg.second_difference_step();
    let chart = f_grad.base.chart;
    let (y, acc) = covariant_acceleration(model, x, &w.components, &v.components, chart, h)?;
    let grad = model.align(&y, f_grad)?;
    let value = model.inner(&y, &grad.components, &acc);
    let (_, acc2) = covariant_acceleration(model, x, &w.components, &v.components, chart, 2.0 * h)?;
    let value2 = model.inner(&y, &grad.components, &acc2);
    Ok(HessianCorrection {
        value,
        step: h,
        step_doubling_defect: (value - value2).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_model, ModelKind};

    #[test]
    fn euclidean_correction_vanishes() {
        let m = make_model(ModelKind::Euclidean { dim: 2 }).unwrap();
        let cfg = GeometryConfig::default();
        let x = m.point(&[0.2, -0.4]).unwrap();
        let w = m.tangent(&x, &[0.5, 0.1]);
        let v = m.tangent(&x, &[-0.3, 0.8]);
        let y = m.exp_map(&w).unwrap();
        let grad = m.tangent(&y, &[1.0, 2.0]);
        let c = chart_hessian_correction(&grad, &x, &w, &v, &m, &cfg).unwrap();
        assert!(c.value.abs() < 1e-8);
    }

    #[test]
    fn correction_vanishes_at_center() {
        let m = make_model(ModelKind::Sphere { dim: 2, radius: 1.0 }).unwrap();
        let cfg = GeometryConfig::default();
        let x = m.point(&[0.1, 0.3]).unwrap();
        let w = TangentVector::zero(x.clone());
        let v = m.tangent(&x, &[0.7, -0.2]);
        let grad = m.tangent(&x, &[0.4, 0.9]);
        let c = chart_hessian_correction(&grad, &x, &w, &v, &m, &cfg).unwrap();
        assert!(c.value.abs() < 1e-5, "{}", c.value);
    }
}
