//! Classical fourth-order Runge–Kutta steps for autonomous systems.

use crate::error::Result;

/// One RK4 step of `y' = f(y)` for a scalar state.
pub fn rk4_scalar<F: Fn(f64) -> f64>(f: &F, y: f64, h: f64) -> f64 {
    let k1 = f(y);
    let k2 = f(y + 0.5 * h * k1);
    let k3 = f(y + 0.5 * h * k2);
    let k4 = f(y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrate a scalar autonomous ODE from 0 to `t` with steps of at most
/// `h`, landing exactly on `t`.
pub fn integrate_scalar<F: Fn(f64) -> f64>(f: &F, y0: f64, t: f64, h: f64) -> f64 {
    let mut y = y0;
    let mut s = 0.0;
    while s < t {
        let step = h.min(t - s);
        y = rk4_scalar(f, y, step);
        s += step;
        if t - s <= 1e-12 * t.max(1.0) {
            break;
        }
    }
    y
}

/// One RK4 step of `y' = f(y)` for a vector state. Field evaluation
/// failures propagate.
pub fn rk4_vec<F>(f: &F, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let axpy = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(x, d)| x + c * d).collect()
    };
    let k1 = f(y)?;
    let k2 = f(&axpy(y, &k1, 0.5 * h))?;
    let k3 = f(&axpy(y, &k2, 0.5 * h))?;
    let k4 = f(&axpy(y, &k3, h))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, x)| x + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}
